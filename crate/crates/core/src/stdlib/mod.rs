//! The bundled standard library as data, and queries over it.

mod registry;

use std::collections::HashMap;

use rand::Rng;

pub use registry::{Stdlib, StdlibError};

use crate::gen::TypedExpr;
use crate::lang::{quote, Node, NodeKind};
use crate::types::{Bounds, Callable, CallableKind, ClassInfo, Env, ParamInfo, Prim, Type, TypeParam};

/// Matches `pattern` (mentioning `vars`) against `target`, extending `sol`.
pub fn unify(pattern: &Type, target: &Type, vars: &[String], sol: &mut HashMap<String, Type>) -> bool {
    match (pattern, target) {
        (Type::Param(n), _) if vars.contains(n) => match sol.get(n) {
            Some(t) => t == target,
            None => {
                sol.insert(n.clone(), target.clone());
                true
            }
        },
        (Type::Class(a, xs), Type::Class(b, ys)) => {
            a == b && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| unify(x, y, vars, sol))
        }
        (Type::Func(xs, r), Type::Func(ys, s)) => {
            xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| unify(x, y, vars, sol)) && unify(r, s, vars, sol)
        }
        _ => pattern == target,
    }
}

const FILLERS: [Type; 5] = [Type::INT, Type::STRING, Type::LONG, Type::DOUBLE, Type::BOOLEAN];

/// First simple type satisfying `tp`'s bound under `sol`.
pub fn default_filler(env: &Env, tp: &TypeParam, sol: &HashMap<String, Type>) -> Option<Type> {
    FILLERS.iter().chain([Type::Any].iter()).find_map(|t| {
        let mut s = sol.clone();
        s.insert(tp.name.clone(), t.clone());
        env.is_subtype(t, &tp.bound.subst(&s), &Bounds::new()).then(|| t.clone())
    })
}

/// Type arguments making `imp` a subtype of `target`. Parameters of `imp`
/// not determined by `target` are produced by `fresh`.
pub fn adapt_type_params(
    env: &Env,
    imp: &ClassInfo,
    target: &Type,
    fresh: &mut dyn FnMut(&TypeParam, &HashMap<String, Type>) -> Option<Type>,
) -> Option<Vec<Type>> {
    let vars: Vec<String> = imp.type_params.iter().map(|t| t.name.clone()).collect();
    let self_ty = imp.self_type();
    let bounds: Bounds = imp.type_params.iter().map(|t| (t.name.clone(), t.bound.clone())).collect();
    let mut sol = HashMap::new();
    if *target != Type::Any {
        let pattern = env.supertype_as(&self_ty, target.decl_name()?, &bounds)?;
        if !unify(&pattern, target, &vars, &mut sol) {
            return None;
        }
    }
    for tp in &imp.type_params {
        if !sol.contains_key(&tp.name) {
            let t = fresh(tp, &sol)?;
            sol.insert(tp.name.clone(), t);
        }
    }
    let args: Vec<Type> = vars.iter().map(|v| sol[v].clone()).collect();
    let map = imp.param_map(&args);
    let none = Bounds::new();
    if !imp.type_params.iter().zip(&args).all(|(tp, a)| env.is_subtype(a, &tp.bound.subst(&map), &none)) {
        return None;
    }
    let t = if imp.type_params.is_empty() { self_ty } else { Type::Class(imp.name.clone(), args.clone()) };
    env.is_subtype(&t, target, &none).then_some(args)
}

/// Concrete classes implementing `abstract_type`, user declarations first.
pub fn find_implementations(env: &Env, abstract_type: &Type) -> Vec<Type> {
    let mut out = Vec::new();
    let user = env.user_classes().filter(|c| c.constructible());
    let std = env.all_classes().filter(|c| c.std && c.constructible());
    for c in user.chain(std) {
        let mut fill = |tp: &TypeParam, sol: &HashMap<String, Type>| default_filler(env, tp, sol);
        if let Some(args) = adapt_type_params(env, c, abstract_type, &mut fill) {
            let t = if args.is_empty() { c.self_type() } else { Type::Class(c.name.clone(), args) };
            if !out.contains(&t) {
                out.push(t);
            }
        }
    }
    out
}

/// A stdlib callable instantiated so that its result fits a target.
#[derive(Clone, Debug, PartialEq)]
pub struct StdCall {
    /// Signature with receiver, parameter and return types substituted.
    pub callable: Callable,
    pub type_args: Vec<Type>,
    /// Generation depth needed for the receiver and required arguments.
    pub cost: usize,
}

impl StdCall {
    pub fn receiver(&self) -> Option<&Type> {
        match self.callable.kind {
            CallableKind::Method | CallableKind::Operator | CallableKind::PropertyAccessor => self.callable.owner.as_ref(),
            _ => None,
        }
    }
}

const INF: usize = usize::MAX / 4;

/// Cheapest depth at which a value of `t` can be produced from the stdlib
/// and literals alone.
pub fn min_cost(env: &Env, t: &Type) -> usize {
    min_cost_rec(env, t, 0)
}

fn min_cost_rec(env: &Env, t: &Type, d: usize) -> usize {
    if d > 4 {
        return INF;
    }
    match t {
        Type::Prim(Prim::Unit) => INF,
        Type::Prim(_) | Type::Any => 0,
        Type::Param(_) | Type::Func(..) => INF,
        Type::Class(n, _) => match n.as_str() {
            "List" | "MutableList" | "ArrayList" | "Iterable" | "IntRange" => 1,
            _ => {
                let Some(c) = env.class(n) else { return INF };
                if !c.constructible() {
                    return 1 + find_implementations(env, t)
                        .iter()
                        .filter(|i| *i != t)
                        .map(|i| min_cost_rec(env, i, d + 1))
                        .min()
                        .unwrap_or(INF)
                        .min(INF);
                }
                let map = match t {
                    Type::Class(_, args) => c.param_map(args),
                    _ => HashMap::new(),
                };
                1 + c
                    .ctor
                    .iter()
                    .filter(|p| !p.has_default)
                    .map(|p| min_cost_rec(env, &p.ty.subst(&map), d + 1))
                    .max()
                    .unwrap_or(0)
                    .min(INF)
            }
        },
    }
}

fn required_cost(env: &Env, receiver: Option<&Type>, params: &[ParamInfo]) -> usize {
    let r = receiver.map(|t| min_cost(env, t)).unwrap_or(0);
    let p = params.iter().filter(|p| !p.has_default && !p.vararg).map(|p| min_cost(env, &p.ty)).max().unwrap_or(0);
    1usize.saturating_add(r.max(p)).min(INF)
}

fn solve_ret(env: &Env, ret: &Type, target: &Type, vars: &[String], sol: &mut HashMap<String, Type>) -> bool {
    if *target == Type::Any {
        return *ret != Type::UNIT;
    }
    let Some(name) = target.decl_name() else { return false };
    if matches!(ret, Type::Param(p) if vars.contains(p)) {
        return unify(ret, target, vars, sol);
    }
    let Some(up) = env.supertype_as(ret, name, &Bounds::new()) else { return false };
    unify(&up, target, vars, sol)
}

fn instantiate(
    env: &Env,
    vars: &[TypeParam],
    ret: &Type,
    target: &Type,
) -> Option<HashMap<String, Type>> {
    let names: Vec<String> = vars.iter().map(|v| v.name.clone()).collect();
    let mut sol = HashMap::new();
    if !solve_ret(env, ret, target, &names, &mut sol) {
        return None;
    }
    for tp in vars {
        if !sol.contains_key(&tp.name) {
            let t = default_filler(env, tp, &sol)?;
            sol.insert(tp.name.clone(), t);
        }
    }
    let none = Bounds::new();
    if !vars.iter().all(|tp| env.is_subtype(&sol[&tp.name], &tp.bound.subst(&sol), &none)) {
        return None;
    }
    env.is_subtype(&ret.subst(&sol), target, &none).then_some(sol)
}

fn subst_params(ps: &[ParamInfo], sol: &HashMap<String, Type>) -> Vec<ParamInfo> {
    ps.iter().map(|p| ParamInfo { ty: p.ty.subst(sol), ..p.clone() }).collect()
}

/// Stdlib functions, constructors, methods and accessors whose result is a
/// subtype of `target` and whose receiver and required arguments can be
/// built within `depth_budget`.
pub fn stdlib_callables_returning(env: &Env, target: &Type, depth_budget: usize) -> Vec<StdCall> {
    let mut out = Vec::new();
    if matches!(target, Type::Param(_) | Type::Func(..)) {
        return out;
    }
    let push = |c: Callable, type_args: Vec<Type>, out: &mut Vec<StdCall>| {
        let cost = required_cost(env, c.owner.as_ref().filter(|_| c.kind != CallableKind::Constructor), &c.params);
        if cost <= depth_budget {
            out.push(StdCall { callable: c, type_args, cost });
        }
    };
    for f in &env.functions[..env.n_std_funcs] {
        if f.ret == Type::UNIT && *target != Type::UNIT {
            continue;
        }
        let Some(sol) = instantiate(env, &f.type_params, &f.ret, target) else { continue };
        let targs = f.type_params.iter().map(|tp| sol[&tp.name].clone()).collect();
        let c = Callable {
            kind: CallableKind::TopLevelFunction,
            owner: None,
            name: f.name.clone(),
            type_params: vec![],
            params: subst_params(&f.params, &sol),
            ret: f.ret.subst(&sol),
            std: true,
            decl: f.decl,
        };
        push(c, targs, &mut out);
    }
    for cls in env.all_classes().filter(|c| c.std) {
        let self_ty = cls.self_type();
        if cls.constructible() {
            if let Some(sol) = instantiate(env, &cls.type_params, &self_ty, target) {
                let targs: Vec<Type> = cls.type_params.iter().map(|tp| sol[&tp.name].clone()).collect();
                let owner = self_ty.subst(&sol);
                let c = Callable {
                    kind: CallableKind::Constructor,
                    owner: Some(owner.clone()),
                    name: cls.name.clone(),
                    type_params: vec![],
                    params: subst_params(&cls.ctor, &sol),
                    ret: owner,
                    std: true,
                    decl: cls.decl,
                };
                push(c, targs, &mut out);
            }
        }
        for p in &cls.props {
            let Some(pt) = &p.ty else { continue };
            let Some(sol) = instantiate(env, &cls.type_params, pt, target) else { continue };
            let c = Callable {
                kind: CallableKind::PropertyAccessor,
                owner: Some(self_ty.subst(&sol)),
                name: p.name.clone(),
                type_params: vec![],
                params: vec![],
                ret: pt.subst(&sol),
                std: true,
                decl: p.decl,
            };
            push(c, vec![], &mut out);
        }
        for m in &cls.methods {
            if m.ret == Type::UNIT && *target != Type::UNIT {
                continue;
            }
            let mut vars = cls.type_params.clone();
            vars.extend(m.type_params.iter().cloned());
            let Some(sol) = instantiate(env, &vars, &m.ret, target) else { continue };
            let targs = m.type_params.iter().map(|tp| sol[&tp.name].clone()).collect();
            let c = Callable {
                kind: if m.is_operator() { CallableKind::Operator } else { CallableKind::Method },
                owner: Some(self_ty.subst(&sol)),
                name: m.name.clone(),
                type_params: vec![],
                params: subst_params(&m.params, &sol),
                ret: m.ret.subst(&sol),
                std: true,
                decl: m.decl,
            };
            push(c, targs, &mut out);
        }
    }
    out
}

const INT_EDGES: [i64; 5] = [-1, 0, 1, i32::MIN as i64, i32::MAX as i64];
const LONG_EDGES: [i64; 5] = [-1, 0, 1, i64::MIN, i64::MAX];
const DOUBLE_EDGES: [f64; 6] = [0.0, -1.0, 1.0, 0.5, 1e-7, 1e15];

/// A literal of `target`, or `None` for `Unit`.
pub fn random_primitive_value(target: Prim, rng: &mut impl Rng) -> Option<TypedExpr> {
    let edge = rng.gen_bool(0.25);
    let (kind, text) = match target {
        Prim::Int => {
            let v = if edge { INT_EDGES[rng.gen_range(0..5)] } else { rng.gen_range(-1000..=1000) };
            (NodeKind::IntLit, v.to_string())
        }
        Prim::Long => {
            let v = if edge { LONG_EDGES[rng.gen_range(0..5)] } else { rng.gen_range(-1000..=1000) };
            (NodeKind::LongLit, v.to_string())
        }
        Prim::Double => {
            let v = if edge {
                DOUBLE_EDGES[rng.gen_range(0..DOUBLE_EDGES.len())]
            } else {
                (rng.gen_range(-100_000..=100_000) as f64) / 100.0
            };
            (NodeKind::DoubleLit, format_double_literal(v))
        }
        Prim::Boolean => (NodeKind::BoolLit, if rng.gen_bool(0.5) { "true" } else { "false" }.to_string()),
        Prim::String => {
            let len = rng.gen_range(0..=16);
            let s: String = (0..len).map(|_| rng.gen_range(0x20u8..0x7f) as char).collect();
            (NodeKind::StringLit, s)
        }
        Prim::Unit => return None,
    };
    Some(TypedExpr::new(Node::leaf(kind, text), Type::Prim(target), 0, "literal"))
}

/// Literal spelling of a finite double that lexes back as a double.
pub fn format_double_literal(v: f64) -> String {
    let s = format!("{v:?}");
    if s.contains('.') || s.contains('e') {
        s
    } else {
        format!("{s}.0")
    }
}

/// Source text of a string literal holding `s`.
pub fn string_literal(s: &str) -> String {
    quote(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn iterable_is_implemented_by_array_list() {
        let std = Stdlib::active();
        let imps = find_implementations(&std.env, &Type::class("Iterable", vec![Type::INT]));
        assert!(imps.contains(&Type::class("ArrayList", vec![Type::INT])));
        for i in &imps {
            assert!(std.env.is_subtype(i, &Type::class("Iterable", vec![Type::INT]), &Bounds::new()));
        }
    }

    #[test]
    fn list_producers() {
        let std = Stdlib::active();
        let cs = stdlib_callables_returning(&std.env, &Type::list(Type::INT), 1);
        let names: Vec<&str> = cs.iter().map(|c| c.callable.name.as_str()).collect();
        assert!(names.contains(&"listOf"));
        assert!(names.contains(&"ArrayList"));
        let deeper = stdlib_callables_returning(&std.env, &Type::list(Type::INT), 2);
        assert!(deeper.iter().any(|c| c.callable.name == "plus"));
    }

    #[test]
    fn int_budget_one_excludes_list_get() {
        let std = Stdlib::active();
        let cs = stdlib_callables_returning(&std.env, &Type::INT, 1);
        assert!(!cs.iter().any(|c| c.callable.name == "get"));
        assert!(cs.iter().any(|c| c.callable.name == "plus"));
        assert!(stdlib_callables_returning(&std.env, &Type::UNIT, 0).is_empty());
    }

    #[test]
    fn literals_have_their_type() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for p in [Prim::Int, Prim::Long, Prim::Double, Prim::Boolean, Prim::String] {
            for _ in 0..50 {
                let e = random_primitive_value(p, &mut rng).unwrap();
                assert_eq!(e.ty, Type::Prim(p));
            }
        }
        assert!(random_primitive_value(Prim::Unit, &mut rng).is_none());
    }
}
