//! Renaming and merging of whole programs.

use std::collections::{HashMap, HashSet};

use sha2::{Digest, Sha256};

use super::node::{Modifiers, Node, NodeKind, SyntaxTree};
use crate::stdlib::Stdlib;
use crate::types::check::{analyze, Res, VarKind};

/// `name` + `_` + 8 hex digits of a digest keyed by `salt`.
pub fn fresh_name(name: &str, salt: u64) -> String {
    fresh_name_n(name, salt, 0)
}

fn fresh_name_n(name: &str, salt: u64, attempt: u32) -> String {
    let mut h = Sha256::new();
    h.update(salt.to_le_bytes());
    h.update(attempt.to_le_bytes());
    h.update(name.as_bytes());
    let d = h.finalize();
    format!("{name}_{:02x}{:02x}{:02x}{:02x}", d[0], d[1], d[2], d[3])
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("merge conflict on {0}")]
pub struct MergeConflict(pub String);

/// Rewrites every user-declared class, interface, top-level function,
/// global and member name. Locals, parameters, operator methods and members
/// that override stdlib members keep their names.
pub fn anonymize_names(tree: &SyntaxTree, salt: u64) -> SyntaxTree {
    let std = Stdlib::active();
    let a = analyze(tree, &std, &HashSet::new());
    let std_members: HashSet<&str> = std
        .env
        .all_classes()
        .flat_map(|c| c.props.iter().map(|p| p.name.as_str()).chain(c.methods.iter().map(|m| m.name.as_str())))
        .collect();

    let mut used: HashSet<String> = HashSet::new();
    tree.root.walk(&mut |n| {
        used.insert(n.text.clone());
    });
    let mut taken: HashSet<String> = HashSet::new();
    let mut fresh = |name: &str| {
        let mut i = 0;
        loop {
            let f = fresh_name_n(name, salt, i);
            if !used.contains(&f) && !taken.contains(&f) {
                taken.insert(f.clone());
                return f;
            }
            i += 1;
        }
    };

    let mut classes: HashMap<String, String> = HashMap::new();
    let mut funs: HashMap<String, String> = HashMap::new();
    let mut globals: HashMap<String, String> = HashMap::new();
    let mut members: HashMap<String, String> = HashMap::new();
    let mut member_ids = HashSet::new();
    for item in tree.items() {
        match item.kind {
            NodeKind::ClassDecl | NodeKind::InterfaceDecl => {
                if !classes.contains_key(&item.text) {
                    let f = fresh(&item.text);
                    classes.insert(item.text.clone(), f);
                }
                let props = item.params().filter(|p| p.mods.has(Modifiers::VAL) || p.mods.has(Modifiers::VAR));
                for m in props.chain(item.members()) {
                    member_ids.insert(m.id);
                    let keep = std_members.contains(m.text.as_str()) || m.mods.has(Modifiers::OPERATOR);
                    if !keep && !members.contains_key(&m.text) {
                        let f = fresh(&m.text);
                        members.insert(m.text.clone(), f);
                    }
                }
            }
            NodeKind::FunDecl if !funs.contains_key(&item.text) => {
                let f = fresh(&item.text);
                funs.insert(item.text.clone(), f);
            }
            NodeKind::VarDecl if !globals.contains_key(&item.text) => {
                let f = fresh(&item.text);
                globals.insert(item.text.clone(), f);
            }
            _ => {}
        }
    }
    let n_std = a.env.n_std_funcs;
    let user_fun = |id: usize| id >= n_std;
    let is_user_class = |name: &str| a.env.class(name).is_some_and(|c| !c.std);
    let global_ids: HashSet<_> = tree.items().iter().filter(|i| i.kind == NodeKind::VarDecl).map(|i| i.id).collect();

    let mut out = tree.clone();
    let rename = |map: &HashMap<String, String>, s: &mut String| {
        if let Some(f) = map.get(s.as_str()) {
            *s = f.clone();
        }
    };
    let mut ctor_named: Vec<(u32, String)> = Vec::new();
    out.root.walk(&mut |n| {
        if n.kind == NodeKind::ConstructorCall {
            for arg in n.call_args().filter(|x| x.kind == NodeKind::NamedArg) {
                ctor_named.push((arg.id, n.text.clone()));
            }
        }
    });
    let named_in_ctor: HashMap<u32, String> = ctor_named.into_iter().collect();
    let prop_param = |class: &str, param: &str| {
        a.env.class(class).is_some_and(|c| !c.std && c.prop(param).is_some_and(|p| p.ctor_param))
    };

    out.root.walk_mut(&mut |n| {
        let top_level = global_ids.contains(&n.id);
        match n.kind {
            NodeKind::ClassDecl | NodeKind::InterfaceDecl | NodeKind::TypeRef | NodeKind::ConstructorCall => {
                if n.kind != NodeKind::TypeRef || is_user_class(&n.text) {
                    rename(&classes, &mut n.text)
                }
            }
            NodeKind::FunDecl | NodeKind::PropertyDecl | NodeKind::Param if member_ids.contains(&n.id) => {
                rename(&members, &mut n.text)
            }
            NodeKind::FunDecl => {
                if tree.items().iter().any(|i| i.id == n.id) {
                    rename(&funs, &mut n.text)
                }
            }
            NodeKind::VarDecl if top_level => rename(&globals, &mut n.text),
            NodeKind::NameRef => match a.res.get(&n.id) {
                Some(Res::Var { kind: VarKind::Global, .. }) => rename(&globals, &mut n.text),
                Some(Res::Var { kind: VarKind::Property { owner }, .. }) if is_user_class(owner) => {
                    rename(&members, &mut n.text)
                }
                Some(Res::Var { kind: VarKind::CtorParam, decl }) if member_ids.contains(decl) => {
                    rename(&members, &mut n.text)
                }
                _ => {}
            },
            NodeKind::Call => match a.res.get(&n.id) {
                Some(Res::Fun(id)) if user_fun(*id) => rename(&funs, &mut n.text),
                Some(Res::Method { owner, implicit: true, .. }) if is_user_class(owner) => rename(&members, &mut n.text),
                Some(Res::CallValue { kind: VarKind::Global, .. }) => rename(&globals, &mut n.text),
                Some(Res::CallValue { kind: VarKind::Property { owner }, .. }) if is_user_class(owner) => {
                    rename(&members, &mut n.text)
                }
                Some(Res::CallValue { kind: VarKind::CtorParam, decl }) if member_ids.contains(decl) => {
                    rename(&members, &mut n.text)
                }
                _ => {}
            },
            NodeKind::FunRef => {
                if let Some(Res::Fun(id)) = a.res.get(&n.id) {
                    if user_fun(*id) {
                        rename(&funs, &mut n.text)
                    }
                }
            }
            NodeKind::MethodCall => {
                if let Some(Res::Method { owner, .. }) = a.res.get(&n.id) {
                    if is_user_class(owner) {
                        rename(&members, &mut n.text)
                    }
                }
            }
            NodeKind::MemberAccess => {
                if let Some(Res::Prop { owner }) = a.res.get(&n.id) {
                    if is_user_class(owner) {
                        rename(&members, &mut n.text)
                    }
                }
            }
            NodeKind::NamedArg => {
                if let Some(class) = named_in_ctor.get(&n.id) {
                    if prop_param(class, &n.text) {
                        rename(&members, &mut n.text)
                    }
                }
            }
            _ => {}
        }
    });
    out.spans.clear();
    out
}

fn top_level_key(n: &Node) -> Option<String> {
    match n.kind {
        NodeKind::ClassDecl | NodeKind::InterfaceDecl => Some(format!("type {}", n.text)),
        NodeKind::VarDecl => Some(format!("var {}", n.text)),
        NodeKind::FunDecl => {
            let params: Vec<String> =
                n.params().map(|p| p.declared_type().map(super::print_type).unwrap_or_default()).collect();
            Some(format!("fun {}({})", n.text, params.join(",")))
        }
        _ => None,
    }
}

/// One file holding the declarations of `gen_seed` followed by those of
/// `mut_seed`.
pub fn merge_programs(gen_seed: &SyntaxTree, mut_seed: &SyntaxTree) -> Result<SyntaxTree, MergeConflict> {
    let mut seen = HashSet::new();
    let mut items = Vec::new();
    for n in gen_seed.items().iter().chain(mut_seed.items()) {
        if let Some(k) = top_level_key(n) {
            if !seen.insert(k.clone()) {
                return Err(MergeConflict(k));
            }
        }
        items.push(n.clone());
    }
    let fun_names: HashSet<&str> =
        gen_seed.items().iter().chain(mut_seed.items()).filter(|n| n.kind == NodeKind::FunDecl).map(|n| n.text.as_str()).collect();
    if fun_names.contains("main")
        && gen_seed.items().iter().any(|n| n.kind == NodeKind::FunDecl && n.text == "main")
        && mut_seed.items().iter().any(|n| n.kind == NodeKind::FunDecl && n.text == "main")
    {
        return Err(MergeConflict("fun main".into()));
    }
    Ok(SyntaxTree::new(Node::new(NodeKind::File, "", items)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse, print};
    use crate::types::check_program;

    const SRC: &str = "class A(val a: Int) {\n    fun g(x: Int): Int = a + x\n}\nfun f(a: A): Int = a.g(1) + a.a\nval v = f(A(2))\n";

    #[test]
    fn renames_consistently_and_deterministically() {
        let t = parse(SRC).unwrap();
        let r1 = anonymize_names(&t, 7);
        let r2 = anonymize_names(&t, 7);
        let s = print(&r1).unwrap();
        assert_eq!(s, print(&r2).unwrap());
        assert!(!s.contains("class A("));
        assert!(s.contains(&fresh_name("f", 7)));
        check_program(&r1).unwrap();
    }

    #[test]
    fn different_salts_merge_cleanly() {
        let t = parse(SRC).unwrap();
        let m = merge_programs(&anonymize_names(&t, 1), &anonymize_names(&t, 2)).unwrap();
        check_program(&m).unwrap();
    }

    #[test]
    fn unanonymized_merge_conflicts() {
        let t = parse("class A\n").unwrap();
        assert!(merge_programs(&t, &t).is_err());
        let e = SyntaxTree::empty();
        assert_eq!(merge_programs(&t, &e).unwrap(), t);
    }
}
