//! Baseline program producers: skeletal enumeration, random mutation and
//! grammar-based generation.

mod grammar;
mod random;
mod spe;

pub use grammar::{grammar_generate, GrammarConfig};
pub use random::{mutate_random, mutate_random_with, Edit, EDIT_WEIGHTS};
pub use spe::{brute_force_count, enumerate_fillings, spe_enumerate, Filling, HoleKind, VarHole, VarSkeleton};
