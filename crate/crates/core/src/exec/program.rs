//! Declarations and dispatch tables shared by the two backends.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use crate::lang::{Node, NodeId, NodeKind, SyntaxTree};
use crate::stdlib::Stdlib;
use crate::types::{check_with, Analysis, FunId, FunSig, TypeErrorList};

pub struct Program<'t> {
    pub tree: &'t SyntaxTree,
    pub a: Analysis,
    decls: HashMap<NodeId, &'t Node>,
    layouts: HashMap<String, Rc<[Rc<str>]>>,
    sigs: HashMap<NodeId, Rc<FunSig>>,
    dispatch: RefCell<HashMap<(Rc<str>, NodeId), Option<NodeId>>>,
    pub main: Option<NodeId>,
    /// Global names in declaration order.
    pub globals: Vec<Rc<str>>,
}

impl<'t> Program<'t> {
    pub fn new(tree: &'t SyntaxTree) -> Result<Program<'t>, TypeErrorList> {
        let a = check_with(tree, &Stdlib::active())?;
        let mut decls = HashMap::new();
        tree.root.walk(&mut |n: &'t Node| {
            if matches!(n.kind, NodeKind::FunDecl | NodeKind::ClassDecl | NodeKind::InterfaceDecl) {
                decls.insert(n.id, n);
            }
        });
        let mut layouts = HashMap::new();
        let mut sigs = HashMap::new();
        for c in a.env.user_classes() {
            let lin = a.env.linearize(&c.self_type(), &Default::default());
            let mut names: Vec<Rc<str>> = Vec::new();
            for (k, _) in lin.iter().rev().filter(|(k, _)| !k.std) {
                for p in &k.props {
                    if !names.iter().any(|n| **n == *p.name) {
                        names.push(Rc::from(p.name.as_str()));
                    }
                }
            }
            layouts.insert(c.name.clone(), Rc::from(names));
        }
        for c in a.env.all_classes() {
            for m in &c.methods {
                sigs.insert(m.decl, Rc::new((**m).clone()));
            }
        }
        let main = tree
            .items()
            .iter()
            .find(|n| n.kind == NodeKind::FunDecl && n.text == "main" && n.params().next().is_none())
            .map(|n| n.id);
        let globals = a.env.globals.iter().map(|g| Rc::from(g.name.as_str())).collect();
        Ok(Program { tree, a, decls, layouts, sigs, dispatch: RefCell::new(HashMap::new()), main, globals })
    }

    /// State of the globals at the end of a run.
    pub fn end_state<'v>(&'v self, globals: &'v HashMap<Rc<str>, super::value::Value>) -> impl Iterator<Item = (&'v str, &'v super::value::Value)> {
        self.globals.iter().filter_map(move |g| globals.get(g).map(|v| (&**g, v)))
    }

    pub fn decl(&self, id: NodeId) -> Option<&'t Node> {
        self.decls.get(&id).copied()
    }

    /// Declaration of a user function, `None` for natives.
    pub fn user_fun(&self, id: FunId) -> Option<&'t Node> {
        let f = self.a.env.functions.get(id)?;
        if f.std {
            None
        } else {
            self.decl(f.decl)
        }
    }

    pub fn fun_name(&self, id: FunId) -> &str {
        self.a.env.functions.get(id).map(|f| f.name.as_str()).unwrap_or("?")
    }

    /// The user class declaration named `name`.
    pub fn class_node(&self, name: &str) -> Option<&'t Node> {
        let c = self.a.env.class(name).filter(|c| !c.std)?;
        self.decl(c.decl)
    }

    pub fn layout(&self, class: &str) -> Rc<[Rc<str>]> {
        self.layouts.get(class).cloned().unwrap_or_else(|| Rc::from(Vec::new()))
    }

    /// The body that runs for a call of the overload `decl` on an object of
    /// class `class`, or `None` when the behaviour is native.
    pub fn resolve_method(&self, class: &Rc<str>, decl: NodeId) -> Option<&'t Node> {
        let key = (class.clone(), decl);
        if let Some(hit) = self.dispatch.borrow().get(&key) {
            return hit.and_then(|d| self.decl(d));
        }
        let hit = self.lookup_override(class, decl);
        self.dispatch.borrow_mut().insert(key, hit);
        hit.and_then(|d| self.decl(d))
    }

    fn lookup_override(&self, class: &str, decl: NodeId) -> Option<NodeId> {
        let stat = self.sigs.get(&decl)?;
        let c = self.a.env.class(class)?;
        let shape = |s: &FunSig| s.params.iter().map(|p| p.vararg).collect::<Vec<_>>();
        let want = shape(stat);
        for (k, _) in self.a.env.linearize(&c.self_type(), &Default::default()) {
            if k.std {
                continue;
            }
            let cands: Vec<&FunSig> =
                k.method(&stat.name).filter(|m| m.has_body && shape(m) == want).map(|m| &**m).collect();
            if let Some(m) = cands.iter().find(|m| m.decl == decl) {
                return Some(m.decl);
            }
            let same_types = cands.iter().find(|m| {
                m.params.iter().zip(&stat.params).all(|(a, b)| a.ty.to_string() == b.ty.to_string())
            });
            if let Some(m) = same_types.or(cands.first()) {
                return Some(m.decl);
            }
        }
        None
    }
}
