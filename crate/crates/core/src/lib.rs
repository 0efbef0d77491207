//! Type-centric enumeration fuzzing for the TL toy language.

pub mod baseline;
pub mod campaign;
pub mod exec;
pub mod gen;
pub mod lang;
pub mod stdlib;
pub mod triage;
pub mod types;
pub mod mutate;
