//! Generation phase: typed expressions built from a seed's callables.

mod pool;
mod value;

use std::borrow::Cow;
use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use pool::{pool_validity, ExprPool, PoolRecord, TypedExpr};
pub use value::Generator;

use crate::lang::SyntaxTree;
use crate::stdlib::Stdlib;
use crate::types::{analyze, get_callables, get_instance_callables, Bounds, CallableKind, Type};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Weights {
    pub variable: f64,
    pub pool: f64,
    pub literal: f64,
    pub stdlib: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights { variable: 0.35, pool: 0.25, literal: 0.25, stdlib: 0.15 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub nest_decay: f64,
    pub max_type_depth: usize,
    pub max_call_depth: usize,
    pub weights: Weights,
    /// Chance that a placeholder is filled through a stdlib call.
    pub stdlib_variety: f64,
    pub max_vararg: usize,
    pub named_arg_prob: f64,
    pub omit_default_prob: f64,
    pub operator_syntax_prob: f64,
    /// Instances generated per class declaration.
    pub instances_per_class: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            nest_decay: 0.5,
            max_type_depth: 3,
            max_call_depth: 3,
            weights: Weights::default(),
            stdlib_variety: 0.2,
            max_vararg: 3,
            named_arg_prob: 0.25,
            omit_default_prob: 0.5,
            operator_syntax_prob: 0.6,
            instances_per_class: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum GenError {
    #[error("no type satisfies the bound of {0}")]
    BoundUnsatisfiable(String),
    #[error("cannot build a value of type {0} within the depth budget")]
    DepthExhausted(String),
    #[error("{0} has no reachable implementation")]
    NoImplementation(String),
}

/// Builds the expression pool of `seed`: class instances and calls on
/// them, calls to top-level functions, and the seed's globals.
pub fn generation_phase(seed: &SyntaxTree, cfg: &GenConfig, rng: &mut impl Rng) -> ExprPool {
    generation_phase_with(seed, &Stdlib::active(), cfg, rng)
}

pub fn generation_phase_with(seed: &SyntaxTree, std: &Stdlib, cfg: &GenConfig, rng: &mut impl Rng) -> ExprPool {
    let a = analyze(seed, std, &HashSet::new());
    let mut g = Generator::new(&a.env, cfg, Cow::Owned(ExprPool::default()));
    for gl in &a.env.globals {
        if let Some(t) = &gl.ty {
            if !t.mentions_param() && *t != Type::UNIT {
                g.pool.to_mut().add(TypedExpr::new(crate::lang::Node::name_ref(gl.name.clone()), t.clone(), 0, "global"));
            }
        }
    }
    let none = Bounds::new();
    for c in get_callables(&a).into_iter().filter(|c| !c.std) {
        match c.kind {
            CallableKind::Constructor => {
                for _ in 0..cfg.instances_per_class.max(1) {
                    let Ok(inst) = g.gen_class_instance(&c.name, 0, &mut Vec::new(), rng) else { continue };
                    g.pool.to_mut().add(inst.clone());
                    let mut members = get_instance_callables(&a.env, &inst.ty, &none);
                    members.retain(|m| !m.std);
                    members.shuffle(rng);
                    for m in members {
                        if let Ok(e) = g.gen_call(&m, Some(inst.clone()), 1, rng) {
                            if e.ty != Type::UNIT {
                                g.pool.to_mut().add(e);
                            }
                        }
                    }
                }
            }
            CallableKind::TopLevelFunction => {
                if c.name == "main" {
                    continue;
                }
                if let Ok(e) = g.gen_call(&c, None, 0, rng) {
                    if e.ty != Type::UNIT {
                        g.pool.to_mut().add(e);
                    }
                }
            }
            _ => {}
        }
    }
    g.pool.into_owned()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const FIG4: &str = "open class A(val a: Int) {\n    fun f(s: String): Int = a\n}\ninterface B {\n    val a: Int\n}\nclass C(override val a: Int) : B\nfun f(x: Int): Int = x\nval a = 1\n";

    #[test]
    fn seed_pool_has_expected_shapes() {
        let t = parse(FIG4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pool = generation_phase(&t, &GenConfig::default(), &mut rng);
        let provs: Vec<&str> = pool.iter().map(|e| e.provenance.as_str()).collect();
        assert!(provs.contains(&"global"));
        for want in ["A", "A::a", "A::f", "f"] {
            assert!(provs.contains(&want), "missing {want} in {provs:?}");
        }
        assert!(pool.iter().any(|e| e.ty == Type::class("B", vec![])));
        let (ok, total) = pool_validity(&t, &pool);
        assert_eq!(ok, total);
    }

    #[test]
    fn deterministic() {
        let t = parse(FIG4).unwrap();
        let p1 = generation_phase(&t, &GenConfig::default(), &mut ChaCha8Rng::seed_from_u64(9));
        let p2 = generation_phase(&t, &GenConfig::default(), &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(p1.records(), p2.records());
    }

    #[test]
    fn empty_seed_gives_empty_pool() {
        let pool = generation_phase(&SyntaxTree::empty(), &GenConfig::default(), &mut ChaCha8Rng::seed_from_u64(0));
        assert!(pool.is_empty());
    }

    #[test]
    fn recursive_bound_terminates() {
        let t = parse("class A<T : A<T>>(val x: Int)\nclass B<T>(val b: T)\n").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pool = generation_phase(&t, &GenConfig::default(), &mut rng);
        assert!(pool.iter().all(|e| e.ty.decl_name() != Some("A")));
        let (ok, total) = pool_validity(&t, &pool);
        assert_eq!(ok, total);
    }
}
