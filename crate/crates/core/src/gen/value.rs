use std::borrow::Cow;
use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{ExprPool, GenConfig, GenError, TypedExpr};
use crate::lang::{Node, NodeKind};
use crate::stdlib::{adapt_type_params, random_primitive_value, stdlib_callables_returning, StdCall};
use crate::types::{Bounds, Callable, CallableKind, ClassInfo, Env, ParamInfo, Prim, ScopeVar, Type, TypeParam};

/// Expression generator over one program's declarations.
pub struct Generator<'a> {
    pub env: &'a Env,
    pub cfg: &'a GenConfig,
    pub pool: Cow<'a, ExprPool>,
    /// Variables usable at the generation point.
    pub scope: Vec<ScopeVar>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Strategy {
    Variable,
    Pool,
    Literal,
    Call,
}

const SIMPLE: [Type; 5] = [Type::INT, Type::LONG, Type::DOUBLE, Type::BOOLEAN, Type::STRING];

impl<'a> Generator<'a> {
    pub fn new(env: &'a Env, cfg: &'a GenConfig, pool: Cow<'a, ExprPool>) -> Generator<'a> {
        Generator { env, cfg, pool, scope: Vec::new() }
    }

    fn sub(&self, a: &Type, b: &Type) -> bool {
        self.env.is_subtype(a, b, &Bounds::new())
    }

    // ---- types ------------------------------------------------------------

    /// Arguments for `tps`, each within its bound. `path` lists the
    /// declarations already open along the current nesting path.
    pub fn gen_type_params(
        &mut self,
        tps: &[TypeParam],
        level: usize,
        path: &mut Vec<String>,
        rng: &mut impl Rng,
    ) -> Result<Vec<Type>, GenError> {
        let mut sol: HashMap<String, Type> = HashMap::new();
        let mut out = Vec::new();
        for tp in tps {
            let t = self.gen_type(tp, &sol, level, path, rng).ok_or_else(|| GenError::BoundUnsatisfiable(tp.name.clone()))?;
            sol.insert(tp.name.clone(), t.clone());
            out.push(t);
        }
        Ok(out)
    }

    fn fits(&self, tp: &TypeParam, sol: &HashMap<String, Type>, t: &Type) -> bool {
        let mut s = sol.clone();
        s.insert(tp.name.clone(), t.clone());
        let b = tp.bound.subst(&s);
        !b.mentions_param() && self.sub(t, &b)
    }

    fn gen_type(
        &mut self,
        tp: &TypeParam,
        sol: &HashMap<String, Type>,
        level: usize,
        path: &mut Vec<String>,
        rng: &mut impl Rng,
    ) -> Option<Type> {
        let nested_ok = level + 1 < self.cfg.max_type_depth;
        let want_nested = nested_ok && rng.gen_bool(self.cfg.nest_decay.powi(level as i32 + 1).clamp(0.0, 1.0));
        let mut simple: Vec<Type> = SIMPLE.to_vec();
        let mut generic: Vec<String> = vec!["List".into()];
        for c in self.env.user_classes() {
            if c.type_params.is_empty() {
                simple.push(c.self_type());
            } else if !path.contains(&c.name) {
                generic.push(c.name.clone());
            }
        }
        simple.shuffle(rng);
        generic.shuffle(rng);
        let try_generic = |g: &mut Self, path: &mut Vec<String>, rng: &mut _| -> Option<Type> {
            for name in &generic {
                let Some(c) = g.env.class(name).cloned() else { continue };
                path.push(name.clone());
                let args = g.gen_type_params(&c.type_params, level + 1, path, rng);
                path.pop();
                if let Ok(args) = args {
                    let t = Type::Class(c.name.clone(), args);
                    if g.fits(tp, sol, &t) {
                        return Some(t);
                    }
                }
            }
            None
        };
        if want_nested {
            if let Some(t) = try_generic(self, path, rng) {
                return Some(t);
            }
        }
        if let Some(t) = simple.iter().find(|t| self.fits(tp, sol, t)) {
            return Some(t.clone());
        }
        if nested_ok && !want_nested {
            return try_generic(self, path, rng);
        }
        None
    }

    // ---- instances --------------------------------------------------------

    /// An instance of declaration `name`, routed through an implementation
    /// when the declaration cannot be constructed directly.
    pub fn gen_class_instance(
        &mut self,
        name: &str,
        depth: usize,
        path: &mut Vec<String>,
        rng: &mut impl Rng,
    ) -> Result<TypedExpr, GenError> {
        let c = self.env.class(name).cloned().ok_or_else(|| GenError::NoImplementation(name.into()))?;
        path.push(c.name.clone());
        let targs = self.gen_type_params(&c.type_params, 0, path, rng);
        path.pop();
        let targs = targs?;
        let t = if targs.is_empty() { c.self_type() } else { Type::Class(c.name.clone(), targs) };
        let mut e = self.instance_of_type(&t, depth, path, rng)?;
        e.provenance = c.name.clone();
        Ok(e)
    }

    /// A value of class type `t` built by a constructor call.
    pub fn instance_of_type(
        &mut self,
        t: &Type,
        depth: usize,
        path: &mut Vec<String>,
        rng: &mut impl Rng,
    ) -> Result<TypedExpr, GenError> {
        if depth > self.cfg.max_call_depth {
            return Err(GenError::DepthExhausted(t.to_string()));
        }
        let Type::Class(name, args) = t else { return Err(GenError::NoImplementation(t.to_string())) };
        let c = self.env.class(name).cloned().ok_or_else(|| GenError::NoImplementation(name.clone()))?;
        if c.constructible() {
            return self.gen_constructor_call(&c, args, depth, rng);
        }
        if path.iter().filter(|p| *p == name).count() > 1 {
            return Err(GenError::NoImplementation(name.clone()));
        }
        let mut impls: Vec<(std::sync::Arc<ClassInfo>, Vec<Type>)> = Vec::new();
        let cands: Vec<_> = self
            .env
            .user_classes()
            .chain(self.env.all_classes().filter(|c| c.std))
            .filter(|c| c.constructible())
            .cloned()
            .collect();
        let env = self.env;
        for imp in cands {
            let mut p = path.clone();
            p.push(imp.name.clone());
            let mut fresh = |tp: &TypeParam, sol: &HashMap<String, Type>| self.gen_type(tp, sol, 1, &mut p, rng);
            if let Some(a) = adapt_type_params(env, &imp, t, &mut fresh) {
                impls.push((imp, a));
            }
        }
        impls.shuffle(rng);
        for (imp, a) in impls {
            path.push(imp.name.clone());
            let r = self.gen_constructor_call(&imp, &a, depth, rng);
            path.pop();
            if let Ok(mut e) = r {
                e.ty = t.clone();
                return Ok(e);
            }
        }
        Err(GenError::NoImplementation(name.clone()))
    }

    pub fn gen_constructor_call(
        &mut self,
        c: &ClassInfo,
        targs: &[Type],
        depth: usize,
        rng: &mut impl Rng,
    ) -> Result<TypedExpr, GenError> {
        let map = c.param_map(targs);
        let params: Vec<ParamInfo> = c.ctor.iter().map(|p| ParamInfo { ty: p.ty.subst(&map), ..p.clone() }).collect();
        let (args, d) = self.gen_args(&params, depth + 1, rng)?;
        let mut kids: Vec<Node> = targs.iter().map(Type::to_node).collect();
        kids.extend(args);
        let ty = if targs.is_empty() { c.self_type() } else { Type::Class(c.name.clone(), targs.to_vec()) };
        Ok(TypedExpr::new(Node::new(NodeKind::ConstructorCall, c.name.clone(), kids), ty, d + 1, c.name.clone()))
    }

    // ---- calls ------------------------------------------------------------

    fn gen_args(&mut self, params: &[ParamInfo], depth: usize, rng: &mut impl Rng) -> Result<(Vec<Node>, usize), GenError> {
        let has_vararg = params.iter().any(|p| p.vararg);
        let named = !has_vararg && !params.is_empty() && rng.gen_bool(self.cfg.named_arg_prob);
        let mut out = Vec::new();
        let mut d = 0;
        if named {
            let mut chosen = Vec::new();
            for p in params {
                if p.has_default && rng.gen_bool(self.cfg.omit_default_prob) {
                    continue;
                }
                let v = self.gen_value_of_type(&p.ty, depth, rng)?;
                d = d.max(v.depth);
                chosen.push(Node::new(NodeKind::NamedArg, p.name.clone(), vec![v.expr]));
            }
            chosen.shuffle(rng);
            return Ok((chosen, d));
        }
        let mut keep = params.len();
        while keep > 0 && params[keep - 1].has_default && rng.gen_bool(self.cfg.omit_default_prob) {
            keep -= 1;
        }
        for p in &params[..keep] {
            if p.vararg {
                let elem = match &p.ty {
                    Type::Class(_, a) if a.len() == 1 => a[0].clone(),
                    _ => Type::Any,
                };
                let n = rng.gen_range(0..=self.cfg.max_vararg);
                for _ in 0..n {
                    let v = self.gen_value_of_type(&elem, depth, rng)?;
                    d = d.max(v.depth);
                    out.push(v.expr);
                }
            } else {
                let v = self.gen_value_of_type(&p.ty, depth, rng)?;
                d = d.max(v.depth);
                out.push(v.expr);
            }
        }
        Ok((out, d))
    }

    /// A call to `callee`. Methods, accessors and operators need `receiver`.
    pub fn gen_call(
        &mut self,
        callee: &Callable,
        receiver: Option<TypedExpr>,
        depth: usize,
        rng: &mut impl Rng,
    ) -> Result<TypedExpr, GenError> {
        if callee.kind == CallableKind::Constructor {
            return self.gen_class_instance(&callee.name, depth, &mut Vec::new(), rng);
        }
        let targs = self.gen_type_params(&callee.type_params, 0, &mut Vec::new(), rng)?;
        let map: HashMap<String, Type> =
            callee.type_params.iter().map(|t| t.name.clone()).zip(targs.iter().cloned()).collect();
        let params: Vec<ParamInfo> = callee.params.iter().map(|p| ParamInfo { ty: p.ty.subst(&map), ..p.clone() }).collect();
        let ret = callee.ret.subst(&map);
        let mut e = self.build_call(callee.kind, &callee.name, receiver, &targs, &params, ret, depth, rng)?;
        e.provenance = callee.label();
        Ok(e)
    }

    #[allow(clippy::too_many_arguments)]
    fn build_call(
        &mut self,
        kind: CallableKind,
        name: &str,
        receiver: Option<TypedExpr>,
        targs: &[Type],
        params: &[ParamInfo],
        ret: Type,
        depth: usize,
        rng: &mut impl Rng,
    ) -> Result<TypedExpr, GenError> {
        if depth > self.cfg.max_call_depth {
            return Err(GenError::DepthExhausted(ret.to_string()));
        }
        let rd = receiver.as_ref().map(|r| r.depth).unwrap_or(0);
        if kind == CallableKind::PropertyAccessor {
            let r = receiver.ok_or_else(|| GenError::NoImplementation(name.into()))?;
            return Ok(TypedExpr::new(Node::new(NodeKind::MemberAccess, name, vec![r.expr]), ret, rd + 1, name));
        }
        let syntax = receiver.is_some()
            && targs.is_empty()
            && rng.gen_bool(self.cfg.operator_syntax_prob)
            && (kind == CallableKind::Operator || matches!(name, "until" | "downTo"));
        let (args, ad) = if syntax {
            self.positional_args(params, depth + 1, rng)?
        } else {
            self.gen_args(params, depth + 1, rng)?
        };
        let d = 1 + rd.max(ad);
        let node = match receiver {
            None => {
                let mut kids: Vec<Node> = targs.iter().map(Type::to_node).collect();
                kids.extend(args);
                Node::new(NodeKind::Call, name, kids)
            }
            Some(r) => match operator_form(name, r.expr.clone(), &args).filter(|_| syntax) {
                Some(n) => n,
                None => {
                    let mut kids = vec![r.expr];
                    kids.extend(targs.iter().map(Type::to_node));
                    kids.extend(args);
                    Node::new(NodeKind::MethodCall, name, kids)
                }
            },
        };
        Ok(TypedExpr::new(node, ret, d, name))
    }

    /// Required arguments followed by a random prefix of the defaulted ones.
    fn positional_args(&mut self, params: &[ParamInfo], depth: usize, rng: &mut impl Rng) -> Result<(Vec<Node>, usize), GenError> {
        let mut out = Vec::new();
        let mut d = 0;
        let mut dropping = false;
        for p in params {
            if p.vararg {
                break;
            }
            if p.has_default && (dropping || rng.gen_bool(self.cfg.omit_default_prob)) {
                dropping = true;
                continue;
            }
            let v = self.gen_value_of_type(&p.ty, depth, rng)?;
            d = d.max(v.depth);
            out.push(v.expr);
        }
        Ok((out, d))
    }

    // ---- values -----------------------------------------------------------

    /// A value of `target` from one of: a visible variable, a pool entry, a
    /// literal, or a call.
    pub fn gen_value_of_type(&mut self, target: &Type, depth: usize, rng: &mut impl Rng) -> Result<TypedExpr, GenError> {
        let w = &self.cfg.weights;
        let mut opts: Vec<(f64, Strategy)> = Vec::new();
        if self.scope.iter().any(|v| self.sub(&v.ty, target)) {
            opts.push((w.variable, Strategy::Variable));
        }
        if self.pool.lookup(self.env, target).next().is_some() {
            opts.push((w.pool, Strategy::Pool));
        }
        if self.literal_possible(target) {
            opts.push((w.literal, Strategy::Literal));
        }
        if depth < self.cfg.max_call_depth {
            opts.push((w.stdlib, Strategy::Call));
        }
        while !opts.is_empty() {
            let total: f64 = opts.iter().map(|o| o.0.max(0.0)).sum();
            let i = if total <= 0.0 {
                rng.gen_range(0..opts.len())
            } else {
                let mut x = rng.gen_range(0.0..total);
                let mut pick = opts.len() - 1;
                for (j, o) in opts.iter().enumerate() {
                    if x < o.0.max(0.0) {
                        pick = j;
                        break;
                    }
                    x -= o.0.max(0.0);
                }
                pick
            };
            let s = opts.remove(i).1;
            let r = match s {
                Strategy::Variable => self.pick_variable(target, rng),
                Strategy::Pool => self.pick_pool(target, rng),
                Strategy::Literal => self.literal(target, rng),
                Strategy::Call => self.call_returning(target, depth, rng).ok(),
            };
            if let Some(e) = r {
                return Ok(e);
            }
        }
        Err(GenError::DepthExhausted(target.to_string()))
    }

    fn pick_variable(&self, target: &Type, rng: &mut impl Rng) -> Option<TypedExpr> {
        let vs: Vec<&ScopeVar> = self.scope.iter().filter(|v| self.sub(&v.ty, target)).collect();
        let v = vs.choose(rng)?;
        Some(TypedExpr::new(Node::name_ref(v.name.clone()), v.ty.clone(), 0, "variable"))
    }

    fn pick_pool(&self, target: &Type, rng: &mut impl Rng) -> Option<TypedExpr> {
        let es: Vec<&TypedExpr> = self.pool.lookup(self.env, target).collect();
        es.choose(rng).map(|e| (*e).clone())
    }

    fn literal_possible(&self, target: &Type) -> bool {
        match target {
            Type::Prim(Prim::Unit) => false,
            Type::Prim(_) | Type::Any => true,
            Type::Func(..) => !self.fun_refs(target).is_empty(),
            _ => false,
        }
    }

    fn fun_refs(&self, target: &Type) -> Vec<String> {
        let Type::Func(ps, r) = target else { return vec![] };
        self.env.functions[self.env.n_std_funcs..]
            .iter()
            .filter(|f| {
                f.type_params.is_empty()
                    && self.env.functions_named(&f.name).len() == 1
                    && f.params.iter().all(|p| !p.vararg)
                    && f.params.iter().map(|p| &p.ty).eq(ps.iter())
                    && f.ret == **r
            })
            .map(|f| f.name.clone())
            .collect()
    }

    fn literal(&self, target: &Type, rng: &mut impl Rng) -> Option<TypedExpr> {
        match target {
            Type::Prim(p) => random_primitive_value(*p, rng),
            Type::Any => {
                let p = [Prim::Int, Prim::String, Prim::Boolean, Prim::Double, Prim::Long][rng.gen_range(0..5)];
                random_primitive_value(p, rng).map(|mut e| {
                    e.ty = Type::Any;
                    e
                })
            }
            Type::Func(..) => {
                let names = self.fun_refs(target);
                let n = names.choose(rng)?;
                Some(TypedExpr::new(Node::leaf(NodeKind::FunRef, n.clone()), target.clone(), 0, "funref"))
            }
            _ => None,
        }
    }

    fn call_returning(&mut self, target: &Type, depth: usize, rng: &mut impl Rng) -> Result<TypedExpr, GenError> {
        let user_class = match target {
            Type::Class(n, _) => self.env.class(n).is_some_and(|c| !c.std),
            _ => false,
        };
        if user_class && rng.gen_bool(0.7) {
            if let Ok(e) = self.instance_of_type(target, depth + 1, &mut Vec::new(), rng) {
                return Ok(e);
            }
        }
        match self.stdlib_call(target, depth, rng) {
            Ok(e) => Ok(e),
            Err(e) if matches!(target, Type::Class(..)) => {
                self.instance_of_type(target, depth + 1, &mut Vec::new(), rng).map_err(|_| e)
            }
            Err(e) => Err(e),
        }
    }

    /// A call into the stdlib producing a subtype of `target`.
    pub fn stdlib_call(&mut self, target: &Type, depth: usize, rng: &mut impl Rng) -> Result<TypedExpr, GenError> {
        let budget = self.cfg.max_call_depth.saturating_sub(depth);
        let mut cands = stdlib_callables_returning(self.env, target, budget);
        cands.shuffle(rng);
        for c in cands.into_iter().take(4) {
            if let Ok(e) = self.build_std_call(&c, depth, rng) {
                return Ok(e);
            }
        }
        Err(GenError::DepthExhausted(target.to_string()))
    }

    fn build_std_call(&mut self, c: &StdCall, depth: usize, rng: &mut impl Rng) -> Result<TypedExpr, GenError> {
        let k = &c.callable;
        if k.kind == CallableKind::Constructor {
            let cls = self.env.class(&k.name).cloned().ok_or_else(|| GenError::NoImplementation(k.name.clone()))?;
            let mut e = self.gen_constructor_call(&cls, &c.type_args, depth, rng)?;
            e.provenance = format!("std:{}", k.name);
            return Ok(e);
        }
        let receiver = match c.receiver() {
            Some(rt) => Some(self.gen_value_of_type(&rt.clone(), depth + 1, rng)?),
            None => None,
        };
        let mut e = self.build_call(k.kind, &k.name, receiver, &c.type_args, &k.params, k.ret.clone(), depth, rng)?;
        e.provenance = format!("std:{}", k.label());
        Ok(e)
    }
}

fn operator_form(name: &str, recv: Node, args: &[Node]) -> Option<Node> {
    let bin = |op: &str| Node::new(NodeKind::BinaryOp, op, vec![recv.clone(), args[0].clone()]);
    match (name, args.len()) {
        ("plus", 1) => Some(bin("+")),
        ("minus", 1) => Some(bin("-")),
        ("times", 1) => Some(bin("*")),
        ("div", 1) => Some(bin("/")),
        ("rem", 1) => Some(bin("%")),
        ("rangeTo", 1) => Some(Node::new(NodeKind::RangeExpr, "..", vec![recv, args[0].clone()])),
        ("until" | "downTo", 1) => Some(Node::new(NodeKind::RangeExpr, name, vec![recv, args[0].clone()])),
        ("unaryMinus", 0) => Some(Node::new(NodeKind::UnaryOp, "-", vec![recv])),
        ("get", n) if n >= 1 => {
            let mut kids = vec![recv];
            kids.extend(args.iter().cloned());
            Some(Node::new(NodeKind::Index, "", kids))
        }
        _ => None,
    }
}
