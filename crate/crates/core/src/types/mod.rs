//! Static semantics of TL.

pub mod callables;
pub mod check;
pub mod env;
pub mod ty;

use std::collections::HashSet;

pub use callables::{get_callables, get_instance_callables, Callable, CallableKind};
pub use check::{
    analyze, bind_args, check_program, check_with, Analysis, ErrorCategory, Res, Role, Scope, ScopeVar, Slot,
    TypeError, TypeErrorList, VarKind,
};
pub use env::{Bounds, ClassInfo, Env, FunId, FunSig, ParamInfo, PropInfo};
pub use ty::{type_from_node, Prim, Type, TypeParam};

use crate::lang::{NodeId, SyntaxTree, UnknownNode};
use crate::stdlib::Stdlib;

/// Subtyping in the environment of the bundled stdlib plus `env`'s
/// declarations, with no type parameters in scope.
pub fn is_subtype(env: &Env, sub: &Type, sup: &Type) -> bool {
    env.is_subtype(sub, sup, &Bounds::new())
}

/// Variables visible at `node`.
pub fn scope_at(tree: &SyntaxTree, node: NodeId) -> Result<Scope, UnknownNode> {
    scopes_at(tree, &Stdlib::active(), &[node]).map(|mut v| v.pop().unwrap_or_default())
}

pub fn scopes_at(tree: &SyntaxTree, std: &Stdlib, nodes: &[NodeId]) -> Result<Vec<Scope>, UnknownNode> {
    for &n in nodes {
        tree.find(n).ok_or(UnknownNode(n))?;
    }
    let probes: HashSet<NodeId> = nodes.iter().copied().collect();
    let a = analyze(tree, std, &probes);
    Ok(nodes.iter().map(|n| a.scopes.get(n).cloned().unwrap_or_default()).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
#[error("node {0} is not a typed expression")]
pub struct Untypeable(pub NodeId);

pub fn type_of(tree: &SyntaxTree, node: NodeId) -> Result<Type, Untypeable> {
    let a = analyze(tree, &Stdlib::active(), &HashSet::new());
    a.types.get(&node).cloned().ok_or(Untypeable(node))
}
