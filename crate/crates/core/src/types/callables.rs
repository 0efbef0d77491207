//! The callable set C of a program.

use serde::Serialize;

use super::check::Analysis;
use super::env::{Bounds, Env, ParamInfo};
use super::ty::{Type, TypeParam};
use crate::lang::{Modifiers, NodeId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum CallableKind {
    Constructor,
    TopLevelFunction,
    Method,
    PropertyAccessor,
    Operator,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Callable {
    pub kind: CallableKind,
    pub owner: Option<Type>,
    pub name: String,
    pub type_params: Vec<TypeParam>,
    pub params: Vec<ParamInfo>,
    pub ret: Type,
    pub std: bool,
    pub decl: NodeId,
}

impl Callable {
    /// `Class::name` or `name`.
    pub fn label(&self) -> String {
        match (&self.owner, self.kind) {
            (Some(_), CallableKind::Constructor) | (None, _) => self.name.clone(),
            (Some(o), _) => format!("{}::{}", o.decl_name().unwrap_or("?"), self.name),
        }
    }
}

/// User declarations in declaration order (classes with their members,
/// top-level functions), followed by the stdlib functions and constructors.
/// Private members are not included.
pub fn get_callables(a: &Analysis) -> Vec<Callable> {
    let env = &a.env;
    let mut out = Vec::new();
    let mut user_funs = env.functions[env.n_std_funcs..].iter();
    let mut next_fun = user_funs.next();
    let mut classes: Vec<_> = env.user_classes().collect();
    classes.sort_by_key(|c| c.decl);
    let mut ci = 0;
    loop {
        let take_class = match (classes.get(ci), next_fun) {
            (Some(c), Some(f)) => c.decl < f.decl,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => break,
        };
        if take_class {
            push_class(env, classes[ci], &mut out);
            ci += 1;
        } else {
            let f = next_fun.unwrap();
            out.push(Callable {
                kind: CallableKind::TopLevelFunction,
                owner: None,
                name: f.name.clone(),
                type_params: f.type_params.clone(),
                params: f.params.clone(),
                ret: f.ret.clone(),
                std: false,
                decl: f.decl,
            });
            next_fun = user_funs.next();
        }
    }
    for c in env.all_classes().filter(|c| c.std && c.constructible()) {
        out.push(ctor_callable(c));
    }
    for f in &env.functions[..env.n_std_funcs] {
        out.push(Callable {
            kind: CallableKind::TopLevelFunction,
            owner: None,
            name: f.name.clone(),
            type_params: f.type_params.clone(),
            params: f.params.clone(),
            ret: f.ret.clone(),
            std: true,
            decl: f.decl,
        });
    }
    out
}

fn ctor_callable(c: &super::env::ClassInfo) -> Callable {
    let st = c.self_type();
    Callable {
        kind: CallableKind::Constructor,
        owner: Some(st.clone()),
        name: c.name.clone(),
        type_params: c.type_params.clone(),
        params: c.ctor.clone(),
        ret: st,
        std: c.std,
        decl: c.decl,
    }
}

fn push_class(env: &Env, c: &super::env::ClassInfo, out: &mut Vec<Callable>) {
    out.push(ctor_callable(c));
    let st = c.self_type();
    for p in c.props.iter().filter(|p| !p.mods.has(Modifiers::PRIVATE)) {
        let Some(ty) = env.class(&c.name).and_then(|ci| ci.prop(&p.name)).and_then(|p| p.ty.clone()) else {
            continue;
        };
        out.push(Callable {
            kind: CallableKind::PropertyAccessor,
            owner: Some(st.clone()),
            name: p.name.clone(),
            type_params: vec![],
            params: vec![],
            ret: ty,
            std: false,
            decl: p.decl,
        });
    }
    for m in c.methods.iter().filter(|m| !m.is_private()) {
        out.push(Callable {
            kind: if m.is_operator() { CallableKind::Operator } else { CallableKind::Method },
            owner: Some(st.clone()),
            name: m.name.clone(),
            type_params: m.type_params.clone(),
            params: m.params.clone(),
            ret: m.ret.clone(),
            std: false,
            decl: m.decl,
        });
    }
}

/// Members callable on a value of `t`, declared on its class or any
/// supertype, with the class type parameters substituted. Overridden
/// members appear once, from the most derived declaration.
pub fn get_instance_callables(env: &Env, t: &Type, bounds: &Bounds) -> Vec<Callable> {
    let mut out: Vec<Callable> = Vec::new();
    for (c, subst) in env.linearize(t, bounds) {
        for p in &c.props {
            if p.mods.has(Modifiers::PRIVATE) || out.iter().any(|o| o.kind == CallableKind::PropertyAccessor && o.name == p.name) {
                continue;
            }
            let Some(ty) = &p.ty else { continue };
            out.push(Callable {
                kind: CallableKind::PropertyAccessor,
                owner: Some(t.clone()),
                name: p.name.clone(),
                type_params: vec![],
                params: vec![],
                ret: ty.subst(&subst),
                std: c.std,
                decl: p.decl,
            });
        }
        for m in &c.methods {
            if m.is_private() {
                continue;
            }
            let params: Vec<ParamInfo> =
                m.params.iter().map(|p| ParamInfo { ty: p.ty.subst(&subst), ..p.clone() }).collect();
            let shadowed = out.iter().any(|o| {
                matches!(o.kind, CallableKind::Method | CallableKind::Operator)
                    && o.name == m.name
                    && o.params.iter().map(|p| &p.ty).eq(params.iter().map(|p| &p.ty))
            });
            if shadowed {
                continue;
            }
            out.push(Callable {
                kind: if m.is_operator() { CallableKind::Operator } else { CallableKind::Method },
                owner: Some(t.clone()),
                name: m.name.clone(),
                type_params: m.type_params.iter().map(|tp| TypeParam { name: tp.name.clone(), bound: tp.bound.subst(&subst) }).collect(),
                params,
                ret: m.ret.subst(&subst),
                std: c.std,
                decl: m.decl,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;
    use crate::types::check_program;

    #[test]
    fn seed_callables_in_order() {
        let t = parse("class A(val a: Int)\nfun f(x: Int): Int = x\n").unwrap();
        let a = check_program(&t).unwrap();
        let user: Vec<String> = get_callables(&a).into_iter().filter(|c| !c.std).map(|c| c.label()).collect();
        assert_eq!(user, ["A", "A::a", "f"]);
    }

    #[test]
    fn generic_members_are_substituted() {
        let t = parse("class A<T>(val a: T)\n").unwrap();
        let a = check_program(&t).unwrap();
        let cs = get_instance_callables(&a.env, &Type::class("A", vec![Type::INT]), &Bounds::new());
        let acc = cs.iter().find(|c| c.name == "a").unwrap();
        assert_eq!(acc.ret, Type::INT);
        assert!(cs.iter().any(|c| c.name == "toString"));
    }

    #[test]
    fn private_members_hidden() {
        let t = parse("class A(private val a: Int) {\n    private fun g(): Int = a\n    fun h(): Int = g()\n}\n").unwrap();
        let a = check_program(&t).unwrap();
        let names: Vec<String> = get_callables(&a).into_iter().filter(|c| !c.std).map(|c| c.label()).collect();
        assert_eq!(names, ["A", "A::h"]);
    }
}
