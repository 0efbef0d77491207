//! Whole-program static checking.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use super::env::{collect_decls, Bounds, ClassInfo, Env, FunId, FunSig, ParamInfo};
use super::ty::{Prim, Type};
use crate::lang::{parse_type, Modifiers, Node, NodeId, NodeKind, SyntaxTree};
use crate::stdlib::Stdlib;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum ErrorCategory {
    Resolution,
    Type,
    Declaration,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TypeError {
    pub node: NodeId,
    pub category: ErrorCategory,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub struct TypeErrorList(pub Vec<TypeError>);

impl fmt::Display for TypeErrorList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0.first() {
            Some(e) => write!(f, "{} error(s), first: {}", self.0.len(), e.message),
            None => write!(f, "no errors"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum VarKind {
    Local,
    Param,
    LoopVar,
    Global,
    CtorParam,
    /// Property of the enclosing class read without a receiver.
    Property { owner: String },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScopeVar {
    pub name: String,
    pub ty: Type,
    pub mutable: bool,
    pub kind: VarKind,
    pub decl: NodeId,
}

/// Visible variables, outermost frame first.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Scope {
    pub frames: Vec<Vec<ScopeVar>>,
}

impl Scope {
    pub fn lookup(&self, name: &str) -> Option<&ScopeVar> {
        self.frames.iter().rev().find_map(|f| f.iter().rev().find(|v| v.name == name))
    }

    /// Every visible variable once (the innermost binding of each name),
    /// outermost first.
    pub fn visible(&self) -> Vec<&ScopeVar> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for f in self.frames.iter().rev() {
            for v in f.iter().rev() {
                if seen.insert(v.name.as_str()) {
                    out.push(v);
                }
            }
        }
        out.reverse();
        out
    }

    pub fn names(&self) -> Vec<String> {
        self.visible().into_iter().map(|v| v.name.clone()).collect()
    }
}

/// What a name or operator in the tree refers to.
#[derive(Clone, Debug, PartialEq)]
pub enum Res {
    Var { kind: VarKind, decl: NodeId },
    Prop { owner: String },
    Fun(FunId),
    /// `decl` is the declaration of the statically selected overload.
    Method { owner: String, name: String, implicit: bool, decl: NodeId },
    Ctor(String),
    CallValue { kind: VarKind, decl: NodeId },
    Builtin,
}

/// How one declared parameter receives its value at a call.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Slot {
    /// Index into the call's value arguments.
    Arg(usize),
    Default,
    Vararg(Vec<usize>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    Main,
    /// The `set` half of an indexed assignment.
    Set,
    /// The operator of a compound assignment.
    Op,
}

#[derive(Clone, Debug, Default)]
pub struct Analysis {
    pub env: Env,
    pub types: HashMap<NodeId, Type>,
    pub res: HashMap<NodeId, Res>,
    pub bindings: HashMap<(NodeId, Role), Vec<Slot>>,
    /// Operator resolutions by role, including the halves of compound
    /// assignments that `res` cannot hold.
    pub role_res: HashMap<(NodeId, Role), Res>,
    pub errors: Vec<TypeError>,
    pub scopes: HashMap<NodeId, Scope>,
}

impl Analysis {
    pub fn ok(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn type_of(&self, id: NodeId) -> Option<&Type> {
        self.types.get(&id)
    }

    pub fn binding(&self, id: NodeId, role: Role) -> Option<&[Slot]> {
        self.bindings.get(&(id, role)).map(Vec::as_slice)
    }
}

/// Checks `tree` against the bundled standard library.
pub fn check_program(tree: &SyntaxTree) -> Result<Analysis, TypeErrorList> {
    check_with(tree, &Stdlib::active())
}

pub fn check_with(tree: &SyntaxTree, std: &Stdlib) -> Result<Analysis, TypeErrorList> {
    let a = analyze(tree, std, &HashSet::new());
    if a.errors.is_empty() {
        Ok(a)
    } else {
        Err(TypeErrorList(a.errors))
    }
}

/// Runs the checker, recording the scope at every node in `probes`.
pub fn analyze(tree: &SyntaxTree, std: &Stdlib, probes: &HashSet<NodeId>) -> Analysis {
    let (env, issues) = collect_decls(tree, Some(&std.env), false);
    let mut decl_nodes = HashMap::new();
    for item in tree.items() {
        if matches!(item.kind, NodeKind::ClassDecl | NodeKind::InterfaceDecl) {
            for m in item.members() {
                decl_nodes.insert(m.id, m);
            }
        }
    }
    let mut c = Checker {
        env,
        tree,
        types: HashMap::new(),
        res: HashMap::new(),
        bindings: HashMap::new(),
        role_res: HashMap::new(),
        errors: Vec::new(),
        frames: Vec::new(),
        bounds: Bounds::new(),
        class: None,
        ret: None,
        in_function: false,
        probes,
        scopes: HashMap::new(),
        prop_state: HashMap::new(),
        decl_nodes,
        depth: 0,
    };
    for i in issues {
        c.err(i.node, ErrorCategory::Declaration, i.message);
    }
    c.run();
    Analysis {
        env: c.env,
        types: c.types,
        res: c.res,
        bindings: c.bindings,
        role_res: c.role_res,
        errors: c.errors,
        scopes: c.scopes,
    }
}

const MAX_EXPR_DEPTH: usize = 400;

struct Checker<'a> {
    env: Env,
    tree: &'a SyntaxTree,
    types: HashMap<NodeId, Type>,
    res: HashMap<NodeId, Res>,
    bindings: HashMap<(NodeId, Role), Vec<Slot>>,
    role_res: HashMap<(NodeId, Role), Res>,
    errors: Vec<TypeError>,
    /// Frame 0 holds globals.
    frames: Vec<Vec<ScopeVar>>,
    bounds: Bounds,
    class: Option<String>,
    ret: Option<Type>,
    in_function: bool,
    probes: &'a HashSet<NodeId>,
    scopes: HashMap<NodeId, Scope>,
    prop_state: HashMap<(String, String), bool>,
    decl_nodes: HashMap<NodeId, &'a Node>,
    depth: usize,
}

struct Candidate {
    sig: Arc<FunSig>,
    subst: HashMap<String, Type>,
    res: Res,
}

struct SavedCtx {
    frames: Vec<Vec<ScopeVar>>,
    bounds: Bounds,
    class: Option<String>,
    ret: Option<Type>,
    in_function: bool,
}

fn starts_upper(s: &str) -> bool {
    s.chars().next().is_some_and(|c| c.is_ascii_uppercase())
}

fn starts_lower(s: &str) -> bool {
    s.chars().next().is_some_and(|c| c.is_ascii_lowercase() || c == '_')
}

fn operator_method(op: &str) -> Option<&'static str> {
    Some(match op {
        "+" | "+=" => "plus",
        "-" | "-=" => "minus",
        "*" | "*=" => "times",
        "/" | "/=" => "div",
        "%" | "%=" => "rem",
        ".." => "rangeTo",
        "until" => "until",
        "downTo" => "downTo",
        _ => return None,
    })
}

/// Binds call arguments to parameters: positional first, then named.
/// `named[i]` is the parameter name of argument `i` if it was passed by name.
pub fn bind_args(params: &[ParamInfo], named: &[Option<&str>]) -> Result<Vec<Slot>, String> {
    let mut slots: Vec<Option<Slot>> = vec![None; params.len()];
    let mut next = 0;
    let mut seen_named = false;
    for (i, n) in named.iter().enumerate() {
        match n {
            None => {
                if seen_named {
                    return Err("positional argument after named argument".into());
                }
                if next >= params.len() {
                    return Err(format!("too many arguments (expected {})", params.len()));
                }
                if params[next].vararg {
                    match slots[next].get_or_insert_with(|| Slot::Vararg(vec![])) {
                        Slot::Vararg(v) => v.push(i),
                        _ => unreachable!(),
                    }
                } else {
                    slots[next] = Some(Slot::Arg(i));
                    next += 1;
                }
            }
            Some(name) => {
                seen_named = true;
                let Some(p) = params.iter().position(|p| p.name == *name) else {
                    return Err(format!("no parameter named {name}"));
                };
                if slots[p].is_some() {
                    return Err(format!("parameter {name} passed twice"));
                }
                slots[p] = Some(if params[p].vararg { Slot::Vararg(vec![i]) } else { Slot::Arg(i) });
            }
        }
    }
    slots
        .into_iter()
        .zip(params)
        .map(|(s, p)| match s {
            Some(s) => Ok(s),
            None if p.vararg => Ok(Slot::Vararg(vec![])),
            None if p.has_default => Ok(Slot::Default),
            None => Err(format!("missing argument for parameter {}", p.name)),
        })
        .collect()
}

/// Whether a statement list always ends in `return`.
fn definitely_returns(stmts: &[Node]) -> bool {
    stmts.iter().any(|s| match s.kind {
        NodeKind::Return => true,
        NodeKind::If if s.children.len() == 3 => {
            let then = definitely_returns(&s.children[1].children);
            let els = &s.children[2];
            let els = if els.kind == NodeKind::If {
                definitely_returns(std::slice::from_ref(els))
            } else {
                definitely_returns(&els.children)
            };
            then && els
        }
        NodeKind::Block => definitely_returns(&s.children),
        _ => false,
    })
}

impl<'a> Checker<'a> {
    fn err(&mut self, node: NodeId, category: ErrorCategory, message: impl Into<String>) {
        self.errors.push(TypeError { node, category, message: message.into() });
    }

    fn sub(&self, a: &Type, b: &Type) -> bool {
        self.env.is_subtype(a, b, &self.bounds)
    }

    fn save(&mut self) -> SavedCtx {
        SavedCtx {
            frames: std::mem::take(&mut self.frames),
            bounds: std::mem::take(&mut self.bounds),
            class: self.class.take(),
            ret: self.ret.take(),
            in_function: self.in_function,
        }
    }

    fn restore(&mut self, s: SavedCtx) {
        self.frames = s.frames;
        self.bounds = s.bounds;
        self.class = s.class;
        self.ret = s.ret;
        self.in_function = s.in_function;
    }

    fn probe(&mut self, id: NodeId) {
        if self.probes.contains(&id) {
            let s = self.current_scope();
            self.scopes.insert(id, s);
        }
    }

    /// Materialized scope including implicit class properties.
    fn current_scope(&mut self) -> Scope {
        let mut frames = self.frames.clone();
        if let Some(cls) = self.class.clone() {
            let mut props = Vec::new();
            let self_ty = self.env.class(&cls).map(|c| c.self_type());
            if let Some(st) = self_ty {
                let lin = self.env.linearize(&st, &self.bounds);
                for (c, subst) in lin.into_iter().rev() {
                    for p in &c.props {
                        if p.mods.has(Modifiers::PRIVATE) && c.name != cls {
                            continue;
                        }
                        if let Some(t) = self.prop_type(&c, &p.name) {
                            props.push(ScopeVar {
                                name: p.name.clone(),
                                ty: t.subst(&subst),
                                mutable: p.mutable,
                                kind: VarKind::Property { owner: c.name.clone() },
                                decl: p.decl,
                            });
                        }
                    }
                }
            }
            let at = frames.len().min(1);
            frames.insert(at, props);
        }
        Scope { frames }
    }

    fn global_frame(&self, upto: Option<NodeId>) -> Vec<ScopeVar> {
        let mut out = Vec::new();
        for g in &self.env.globals {
            if Some(g.decl) == upto {
                break;
            }
            if let Some(t) = &g.ty {
                out.push(ScopeVar {
                    name: g.name.clone(),
                    ty: t.clone(),
                    mutable: g.mutable,
                    kind: VarKind::Global,
                    decl: g.decl,
                });
            }
        }
        out
    }

    // ---- driver -----------------------------------------------------------

    fn run(&mut self) {
        let tree = self.tree;
        self.validate_declarations();
        // script statements in order; globals become visible as declared
        self.frames = vec![Vec::new()];
        for item in tree.items() {
            match item.kind {
                NodeKind::ClassDecl | NodeKind::InterfaceDecl | NodeKind::FunDecl => {}
                NodeKind::VarDecl => {
                    self.probe(item.id);
                    let t = self.var_decl_type(item);
                    if let Some(t) = t {
                        self.env.set_global_type(item.id, t.clone());
                        self.frames[0].push(ScopeVar {
                            name: item.text.clone(),
                            ty: t,
                            mutable: item.mods.has(Modifiers::VAR),
                            kind: VarKind::Global,
                            decl: item.id,
                        });
                    }
                }
                NodeKind::PropertyDecl | NodeKind::Param | NodeKind::TypeParamDecl | NodeKind::TypeRef => {
                    self.err(item.id, ErrorCategory::Declaration, "unexpected declaration at top level");
                }
                _ => self.stmt(item),
            }
        }
        for item in tree.items() {
            match item.kind {
                NodeKind::FunDecl => {
                    let sig = self.env.functions.iter().find(|f| !f.std && f.decl == item.id).cloned();
                    if let Some(sig) = sig {
                        self.frames = vec![self.global_frame(None)];
                        self.bounds.clear();
                        self.class = None;
                        self.fun_body(item, &sig);
                    }
                }
                NodeKind::ClassDecl | NodeKind::InterfaceDecl => self.class_bodies(item),
                _ => {}
            }
        }
        self.frames.clear();
    }

    // ---- declarations -----------------------------------------------------

    fn add_type_params(&mut self, n: &Node) {
        for tp in n.type_params() {
            if !starts_upper(&tp.text) {
                self.err(tp.id, ErrorCategory::Declaration, "type parameter names start with an uppercase letter");
            }
            if self.bounds.contains_key(&tp.text) {
                self.err(tp.id, ErrorCategory::Declaration, format!("type parameter {} shadows another", tp.text));
            }
            self.bounds.insert(tp.text.clone(), Type::Any);
        }
        let in_scope: Vec<String> = self.bounds.keys().cloned().collect();
        for tp in n.type_params() {
            if let Some(b) = tp.declared_type() {
                self.bounds.insert(tp.text.clone(), super::ty::type_from_node(b, &in_scope));
            }
        }
        for tp in n.type_params() {
            if let Some(b) = tp.declared_type() {
                match self.resolve_type(b) {
                    Some(Type::Func(..)) => {
                        self.err(b.id, ErrorCategory::Declaration, "type parameter bound cannot be a function type")
                    }
                    Some(_) => {}
                    None => {
                        self.bounds.insert(tp.text.clone(), Type::Any);
                    }
                }
            }
        }
    }

    /// Validates a `TypeRef` against the declarations in scope.
    fn resolve_type(&mut self, n: &Node) -> Option<Type> {
        if n.kind != NodeKind::TypeRef {
            self.err(n.id, ErrorCategory::Type, "expected a type");
            return None;
        }
        if n.text == "->" {
            let mut ts = Vec::new();
            for c in &n.children {
                ts.push(self.resolve_type(c)?);
            }
            let r = ts.pop()?;
            return Some(Type::Func(ts, Box::new(r)));
        }
        let simple = if let Some(p) = Prim::from_name(&n.text) {
            Some(Type::Prim(p))
        } else if n.text == "Any" {
            Some(Type::Any)
        } else if self.bounds.contains_key(&n.text) {
            Some(Type::Param(n.text.clone()))
        } else {
            None
        };
        if let Some(t) = simple {
            if !n.children.is_empty() {
                self.err(n.id, ErrorCategory::Type, format!("type {} takes no type arguments", n.text));
                return None;
            }
            return Some(t);
        }
        let Some(c) = self.env.class(&n.text).cloned() else {
            self.err(n.id, ErrorCategory::Resolution, format!("unresolved type {}", n.text));
            return None;
        };
        if c.type_params.len() != n.children.len() {
            self.err(
                n.id,
                ErrorCategory::Type,
                format!("type {} expects {} type argument(s), got {}", n.text, c.type_params.len(), n.children.len()),
            );
            return None;
        }
        let mut args = Vec::new();
        for a in &n.children {
            args.push(self.resolve_type(a)?);
        }
        if !self.bounds_ok(&c, &args) {
            self.err(n.id, ErrorCategory::Type, format!("type arguments of {} violate bounds", n.text));
            return None;
        }
        Some(Type::Class(c.name.clone(), args))
    }

    fn bounds_ok(&self, c: &ClassInfo, args: &[Type]) -> bool {
        let map = c.param_map(args);
        c.type_params.iter().zip(args).all(|(tp, a)| self.sub(a, &tp.bound.subst(&map)))
    }

    fn validate_declarations(&mut self) {
        let tree = self.tree;
        let mut seen_sigs: Vec<(String, Vec<Type>)> = Vec::new();
        for item in tree.items() {
            match item.kind {
                NodeKind::ClassDecl | NodeKind::InterfaceDecl => self.validate_class(item),
                NodeKind::FunDecl => {
                    if !starts_lower(&item.text) {
                        self.err(item.id, ErrorCategory::Declaration, "function names start with a lowercase letter");
                    }
                    if item.mods.has(Modifiers::NATIVE)
                        || item.mods.has(Modifiers::OVERRIDE)
                        || item.mods.has(Modifiers::OPERATOR)
                        || item.mods.has(Modifiers::OPEN)
                        || item.mods.has(Modifiers::ABSTRACT)
                    {
                        self.err(item.id, ErrorCategory::Declaration, "modifier not allowed on a top-level function");
                    }
                    self.bounds.clear();
                    self.validate_fun_header(item);
                    if item.fun_body().is_none() {
                        self.err(item.id, ErrorCategory::Declaration, format!("function {} has no body", item.text));
                    }
                    let sig = self.env.functions.iter().find(|f| !f.std && f.decl == item.id).cloned();
                    if let Some(sig) = sig {
                        let key = (sig.name.clone(), sig.params.iter().map(|p| p.ty.clone()).collect::<Vec<_>>());
                        let clash_std = self
                            .env
                            .functions_named(&sig.name)
                            .iter()
                            .map(|&id| &self.env.functions[id])
                            .any(|f| f.std && f.params.iter().map(|p| &p.ty).eq(key.1.iter()));
                        if seen_sigs.contains(&key) || clash_std {
                            self.err(item.id, ErrorCategory::Declaration, format!("conflicting overloads of {}", sig.name));
                        }
                        seen_sigs.push(key);
                    }
                    self.bounds.clear();
                }
                NodeKind::VarDecl => {
                    if !starts_lower(&item.text) {
                        self.err(item.id, ErrorCategory::Declaration, "variable names start with a lowercase letter");
                    }
                }
                _ => {}
            }
        }
    }

    fn validate_fun_header(&mut self, f: &Node) {
        self.add_type_params(f);
        let mut names = HashSet::new();
        let mut saw_vararg = false;
        for p in f.params() {
            if !names.insert(p.text.as_str()) {
                self.err(p.id, ErrorCategory::Declaration, format!("duplicate parameter {}", p.text));
            }
            if p.mods.has(Modifiers::VARARG) {
                if saw_vararg {
                    self.err(p.id, ErrorCategory::Declaration, "only one vararg parameter is allowed");
                }
                saw_vararg = true;
            }
            if p.mods.has(Modifiers::VAL) || p.mods.has(Modifiers::VAR) {
                self.err(p.id, ErrorCategory::Declaration, "function parameters cannot be properties");
            }
            if let Some(t) = p.declared_type() {
                self.resolve_type(t);
            }
        }
        if let Some(r) = f.declared_type() {
            self.resolve_type(r);
        }
        if let Some(b) = f.fun_body() {
            if b.kind != NodeKind::Block && f.declared_type().is_none() {
                self.err(f.id, ErrorCategory::Declaration, "expression-bodied functions need a return type");
            }
        }
    }

    fn validate_class(&mut self, n: &Node) {
        let Some(info) = self.env.class(&n.text).cloned() else { return };
        if info.decl != n.id {
            return;
        }
        if !starts_upper(&n.text) {
            self.err(n.id, ErrorCategory::Declaration, "class names start with an uppercase letter");
        }
        if n.mods.has(Modifiers::NATIVE) || n.mods.has(Modifiers::OVERRIDE) || n.mods.has(Modifiers::OPERATOR) {
            self.err(n.id, ErrorCategory::Declaration, "modifier not allowed on a class");
        }
        self.bounds.clear();
        self.add_type_params(n);
        let mut names = HashSet::new();
        for p in n.params() {
            if !names.insert(p.text.as_str()) {
                self.err(p.id, ErrorCategory::Declaration, format!("duplicate parameter {}", p.text));
            }
            if p.mods.has(Modifiers::VARARG) {
                self.err(p.id, ErrorCategory::Declaration, "constructors cannot take varargs");
            }
            if let Some(t) = p.declared_type() {
                self.resolve_type(t);
            }
        }
        // supertypes
        if let Some(sc) = n.superclass_call() {
            let t = Node::type_ref(sc.text.clone(), sc.type_args().cloned().collect());
            let t = Node { id: sc.id, ..t };
            if self.resolve_type(&t).is_some() {
                let sup = self.env.class(&sc.text).cloned().unwrap();
                if sup.is_interface {
                    self.err(sc.id, ErrorCategory::Declaration, "an interface has no constructor");
                } else if sup.std || !sup.is_open() {
                    self.err(sc.id, ErrorCategory::Declaration, format!("class {} is final", sup.name));
                }
            }
        }
        for t in n.super_interfaces() {
            if self.resolve_type(t).is_some() {
                let sup = self.env.class(&t.text).cloned().unwrap();
                if !sup.is_interface {
                    self.err(
                        t.id,
                        ErrorCategory::Declaration,
                        format!("{} is a class; initialize it with a constructor call", sup.name),
                    );
                } else if sup.is_sealed() {
                    self.err(t.id, ErrorCategory::Declaration, format!("{} cannot be implemented", sup.name));
                }
            }
        }
        if self.inherits_from(&info.self_type(), &n.text) {
            self.err(n.id, ErrorCategory::Declaration, "cyclic inheritance");
            self.bounds.clear();
            return;
        }
        // members
        let mut member_names: HashSet<&str> = HashSet::new();
        for p in n.params().filter(|p| p.mods.has(Modifiers::VAL) || p.mods.has(Modifiers::VAR)) {
            member_names.insert(&p.text);
        }
        for m in n.members() {
            if !member_names.insert(&m.text) {
                self.err(m.id, ErrorCategory::Declaration, format!("conflicting declarations of {}", m.text));
            }
            if m.mods.has(Modifiers::NATIVE) {
                self.err(m.id, ErrorCategory::Declaration, "native members are reserved for the standard library");
            }
            match m.kind {
                NodeKind::FunDecl => {
                    let saved = self.bounds.clone();
                    self.validate_fun_header(m);
                    self.bounds = saved;
                    let abstract_ok = info.is_interface || m.mods.has(Modifiers::ABSTRACT);
                    if m.fun_body().is_none() && !abstract_ok {
                        self.err(m.id, ErrorCategory::Declaration, format!("method {} has no body", m.text));
                    }
                    if m.mods.has(Modifiers::ABSTRACT) && !info.is_abstract() {
                        self.err(m.id, ErrorCategory::Declaration, "abstract member in a non-abstract class");
                    }
                    if m.mods.has(Modifiers::ABSTRACT) && m.fun_body().is_some() {
                        self.err(m.id, ErrorCategory::Declaration, "abstract method with a body");
                    }
                    if m.mods.has(Modifiers::OPERATOR)
                        && !matches!(
                            m.text.as_str(),
                            "plus" | "minus" | "times" | "div" | "rem" | "get" | "set" | "compareTo" | "unaryMinus" | "rangeTo"
                        )
                    {
                        self.err(m.id, ErrorCategory::Declaration, format!("{} is not an operator name", m.text));
                    }
                }
                _ => {
                    if let Some(t) = m.declared_type() {
                        self.resolve_type(t);
                    }
                    if m.initializer().is_none() {
                        if !info.is_abstract() {
                            self.err(m.id, ErrorCategory::Declaration, format!("property {} must be initialized", m.text));
                        }
                        if m.declared_type().is_none() {
                            self.err(m.id, ErrorCategory::Declaration, "abstract property needs a type");
                        }
                    } else if info.is_interface {
                        self.err(m.id, ErrorCategory::Declaration, "interface properties cannot have initializers");
                    }
                }
            }
        }
        self.validate_overrides(n, &info);
        if !info.is_abstract() {
            self.validate_implemented(n, &info);
        }
        self.bounds.clear();
    }

    fn inherits_from(&self, t: &Type, name: &str) -> bool {
        let mut stack = self.env.direct_supertypes(t);
        let mut seen = HashSet::new();
        while let Some(s) = stack.pop() {
            let Some(n) = s.decl_name() else { continue };
            if n == name {
                return true;
            }
            if seen.insert(n.to_string()) {
                stack.extend(self.env.direct_supertypes(&s));
            }
        }
        false
    }

    fn validate_overrides(&mut self, n: &Node, info: &Arc<ClassInfo>) {
        let supers: Vec<Type> = info.supertypes().cloned().collect();
        let mut lin = Vec::new();
        for s in &supers {
            for (c, m) in self.env.linearize(s, &self.bounds) {
                if !lin.iter().any(|(o, _): &(Arc<ClassInfo>, _)| o.name == c.name) {
                    lin.push((c, m));
                }
            }
        }
        let find_prop = |name: &str| {
            lin.iter().find_map(|(c, m)| c.prop(name).map(|p| (c.clone(), p.clone(), m.clone())))
        };
        let find_fun = |name: &str| {
            lin.iter().find_map(|(c, m)| c.method(name).next().map(|f| (c.clone(), f.clone(), m.clone())))
        };
        let members: Vec<(NodeId, &str, Modifiers, bool)> = n
            .params()
            .filter(|p| p.mods.has(Modifiers::VAL) || p.mods.has(Modifiers::VAR))
            .map(|p| (p.id, p.text.as_str(), p.mods, true))
            .chain(n.members().map(|m| (m.id, m.text.as_str(), m.mods, m.kind == NodeKind::PropertyDecl)))
            .collect();
        for (id, name, mods, is_prop) in members {
            let overrides = mods.has(Modifiers::OVERRIDE);
            let sp = find_prop(name);
            let sf = find_fun(name);
            if sp.is_none() && sf.is_none() {
                if overrides {
                    self.err(id, ErrorCategory::Declaration, format!("{name} overrides nothing"));
                }
                continue;
            }
            if !overrides {
                self.err(id, ErrorCategory::Declaration, format!("{name} hides a member of a supertype; add override"));
                continue;
            }
            if is_prop {
                let Some((sc, sp, map)) = sp else {
                    self.err(id, ErrorCategory::Declaration, format!("property {name} overrides a method"));
                    continue;
                };
                if !(sc.is_interface || sp.mods.has(Modifiers::OPEN) || sp.is_abstract() || sp.mods.has(Modifiers::OVERRIDE)) {
                    self.err(id, ErrorCategory::Declaration, format!("{name} is final in {}", sc.name));
                }
                let mine = info.prop(name).and_then(|p| p.ty.clone());
                let theirs = sp.ty.clone().map(|t| t.subst(&map));
                if let (Some(a), Some(b)) = (mine, theirs) {
                    let ok = if sp.mutable { a == b } else { self.sub(&a, &b) };
                    if !ok {
                        self.err(id, ErrorCategory::Declaration, format!("type of {name} conflicts with overridden property"));
                    }
                }
                if sp.mutable && !info.prop(name).is_some_and(|p| p.mutable) {
                    self.err(id, ErrorCategory::Declaration, format!("var {name} cannot be overridden by a val"));
                }
            } else {
                let Some((sc, sf, map)) = sf else {
                    self.err(id, ErrorCategory::Declaration, format!("method {name} overrides a property"));
                    continue;
                };
                if !(sc.is_interface || sf.mods.has(Modifiers::OPEN) || sf.is_abstract() || sf.mods.has(Modifiers::OVERRIDE)) {
                    self.err(id, ErrorCategory::Declaration, format!("{name} is final in {}", sc.name));
                }
                let Some(mine) = info.method(name).next().cloned() else { continue };
                let same_params = mine.params.len() == sf.params.len()
                    && mine.type_params.is_empty()
                    && sf.type_params.is_empty()
                    && mine.params.iter().zip(&sf.params).all(|(a, b)| a.ty == b.ty.subst(&map) && a.vararg == b.vararg);
                if !same_params || !self.sub(&mine.ret, &sf.ret.subst(&map)) {
                    self.err(id, ErrorCategory::Declaration, format!("{name} does not match the overridden signature"));
                }
                if sf.is_operator() && !mine.is_operator() {
                    self.err(id, ErrorCategory::Declaration, format!("{name} overrides an operator; add operator"));
                }
            }
        }
    }

    fn validate_implemented(&mut self, n: &Node, info: &Arc<ClassInfo>) {
        let st = info.self_type();
        let lin = self.env.linearize(&st, &self.bounds);
        let mut names: Vec<(String, bool)> = Vec::new();
        for (c, _) in &lin {
            for p in c.props.iter().filter(|p| p.is_abstract()) {
                names.push((p.name.clone(), true));
            }
            for m in c.methods.iter().filter(|m| m.is_abstract()) {
                names.push((m.name.clone(), false));
            }
        }
        for (name, is_prop) in names {
            let concrete = if is_prop {
                self.env.find_property(&st, &name, &self.bounds).is_some_and(|h| !h.member.is_abstract())
            } else {
                self.env.find_methods(&st, &name, &self.bounds).iter().any(|h| !h.member.is_abstract())
            };
            if !concrete {
                self.err(n.id, ErrorCategory::Declaration, format!("class {} does not implement {}", info.name, name));
            }
        }
    }

    // ---- bodies -----------------------------------------------------------

    fn enter_class(&mut self, cls: &ClassInfo) {
        self.class = Some(cls.name.clone());
        self.bounds.clear();
        for tp in &cls.type_params {
            self.bounds.insert(tp.name.clone(), tp.bound.clone());
        }
    }

    fn class_bodies(&mut self, n: &'a Node) {
        let Some(info) = self.env.class(&n.text).cloned() else { return };
        if info.decl != n.id {
            return;
        }
        self.enter_class(&info);
        // constructor defaults see earlier parameters
        self.frames = vec![self.global_frame(None), Vec::new()];
        self.in_function = false;
        self.ret = None;
        for (p, pi) in n.params().zip(&info.ctor) {
            if let Some(d) = p.initializer() {
                if let Some(t) = self.expr(d) {
                    if !self.sub(&t, &pi.ty) {
                        self.err(d.id, ErrorCategory::Type, format!("default value of type {t} is not {}", pi.ty));
                    }
                }
            }
            self.frames[1].push(ScopeVar {
                name: p.text.clone(),
                ty: pi.ty.clone(),
                mutable: false,
                kind: VarKind::CtorParam,
                decl: p.id,
            });
        }
        if let Some(sc) = n.superclass_call() {
            self.probe(sc.id);
            if let Some(sup) = info.superclass.clone() {
                self.ctor_call_with_type(sc, &sup);
            }
        }
        for m in n.members() {
            if m.kind == NodeKind::PropertyDecl {
                let key = (info.name.clone(), m.text.clone());
                if self.prop_state.contains_key(&key) {
                    continue;
                }
                self.prop_state.insert(key.clone(), false);
                if let Some(init) = m.initializer() {
                    if let Some(t) = self.expr(init) {
                        let declared = info.prop(&m.text).and_then(|p| p.ty.clone());
                        match declared {
                            Some(d) => {
                                if !self.sub(&t, &d) {
                                    self.err(init.id, ErrorCategory::Type, format!("initializer of type {t} is not {d}"));
                                }
                            }
                            None => self.env.set_prop_type(&info.name, &m.text, t),
                        }
                    }
                }
                self.prop_state.insert(key, true);
            }
        }
        for m in n.members() {
            if m.kind == NodeKind::FunDecl {
                if let Some(sig) = info.method(&m.text).find(|s| s.decl == m.id).cloned() {
                    self.frames = vec![self.global_frame(None)];
                    self.enter_class(&info);
                    self.fun_body(m, &sig);
                }
            }
        }
        self.class = None;
        self.bounds.clear();
    }

    /// Type of a property, inferring it from the initializer on first use.
    fn prop_type(&mut self, owner: &ClassInfo, name: &str) -> Option<Type> {
        let current = self.env.class(&owner.name).and_then(|c| c.prop(name)).and_then(|p| p.ty.clone());
        if current.is_some() || owner.std {
            return current;
        }
        let key = (owner.name.clone(), name.to_string());
        match self.prop_state.get(&key) {
            Some(true) => return None,
            Some(false) => {
                let decl = owner.prop(name).map(|p| p.decl).unwrap_or(owner.decl);
                self.err(decl, ErrorCategory::Type, format!("cannot infer the type of {name}; add a type annotation"));
                return None;
            }
            None => {}
        }
        let decl = owner.prop(name)?.decl;
        let node = *self.decl_nodes.get(&decl)?;
        let init = node.initializer()?;
        self.prop_state.insert(key.clone(), false);
        let saved = self.save();
        let info = self.env.class(&owner.name).cloned()?;
        let class_node = self.tree.find(info.decl);
        self.enter_class(&info);
        let mut ctor_frame = Vec::new();
        if let Some(cn) = class_node {
            for (p, pi) in cn.params().zip(&info.ctor) {
                ctor_frame.push(ScopeVar {
                    name: p.text.clone(),
                    ty: pi.ty.clone(),
                    mutable: false,
                    kind: VarKind::CtorParam,
                    decl: p.id,
                });
            }
        }
        self.frames = vec![self.global_frame(None), ctor_frame];
        let t = self.expr(init);
        self.restore(saved);
        self.prop_state.insert(key, true);
        if let Some(t) = &t {
            self.env.set_prop_type(&owner.name, name, t.clone());
        }
        t
    }

    fn fun_body(&mut self, f: &Node, sig: &FunSig) {
        let saved_bounds = self.bounds.clone();
        for tp in &sig.type_params {
            self.bounds.insert(tp.name.clone(), tp.bound.clone());
        }
        self.in_function = true;
        self.ret = Some(sig.ret.clone());
        self.frames.push(Vec::new());
        for (p, pi) in f.params().zip(&sig.params) {
            if let Some(d) = p.initializer() {
                if let Some(t) = self.expr(d) {
                    if !self.sub(&t, &pi.ty) {
                        self.err(d.id, ErrorCategory::Type, format!("default value of type {t} is not {}", pi.ty));
                    }
                }
            }
            let last = self.frames.len() - 1;
            self.frames[last].push(ScopeVar {
                name: p.text.clone(),
                ty: pi.ty.clone(),
                mutable: false,
                kind: VarKind::Param,
                decl: p.id,
            });
        }
        match f.fun_body() {
            Some(b) if b.kind == NodeKind::Block => {
                self.block(b);
                if sig.ret != Type::UNIT && !definitely_returns(&b.children) {
                    self.err(f.id, ErrorCategory::Type, format!("function {} must return a value", f.text));
                }
            }
            Some(e) => {
                self.probe(e.id);
                if let Some(t) = self.expr(e) {
                    if !self.sub(&t, &sig.ret) {
                        self.err(e.id, ErrorCategory::Type, format!("body of type {t} is not {}", sig.ret));
                    }
                }
            }
            None => {}
        }
        self.frames.pop();
        self.in_function = false;
        self.ret = None;
        self.bounds = saved_bounds;
    }

    // ---- statements -------------------------------------------------------

    fn block(&mut self, b: &Node) {
        self.frames.push(Vec::new());
        for s in &b.children {
            self.stmt(s);
        }
        self.frames.pop();
    }

    fn declare_local(&mut self, name: &str, ty: Type, mutable: bool, kind: VarKind, decl: NodeId) {
        let top = self.frames.last_mut().expect("a frame is open");
        if top.iter().any(|v| v.name == name) && kind != VarKind::Global {
            self.errors.push(TypeError {
                node: decl,
                category: ErrorCategory::Declaration,
                message: format!("{name} is already declared in this scope"),
            });
        }
        top.push(ScopeVar { name: name.to_string(), ty, mutable, kind, decl });
    }

    fn var_decl_type(&mut self, n: &Node) -> Option<Type> {
        let declared = match n.declared_type() {
            Some(t) => Some(self.resolve_type(t)?),
            None => None,
        };
        let Some(init) = n.initializer() else {
            self.err(n.id, ErrorCategory::Declaration, "variable must be initialized");
            return declared;
        };
        let t = self.expr(init);
        match (declared, t) {
            (Some(d), Some(t)) => {
                if !self.sub(&t, &d) {
                    self.err(init.id, ErrorCategory::Type, format!("initializer of type {t} is not {d}"));
                }
                Some(d)
            }
            (Some(d), None) => Some(d),
            (None, t) => t,
        }
    }

    fn stmt(&mut self, s: &Node) {
        self.probe(s.id);
        match s.kind {
            NodeKind::VarDecl => {
                if !starts_lower(&s.text) {
                    self.err(s.id, ErrorCategory::Declaration, "variable names start with a lowercase letter");
                }
                if let Some(t) = self.var_decl_type(s) {
                    self.declare_local(&s.text, t, s.mods.has(Modifiers::VAR), VarKind::Local, s.id);
                }
            }
            NodeKind::Assign => self.assign(s),
            NodeKind::While => {
                self.condition(&s.children[0]);
                self.block(&s.children[1]);
            }
            NodeKind::If => {
                self.condition(&s.children[0]);
                self.block(&s.children[1]);
                if let Some(e) = s.children.get(2) {
                    if e.kind == NodeKind::If {
                        self.stmt(e);
                    } else {
                        self.block(e);
                    }
                }
            }
            NodeKind::For => {
                let elem = self.expr(&s.children[0]).and_then(|t| {
                    if let Some(l) = self.env.supertype_as(&t, "List", &self.bounds) {
                        if let Type::Class(_, args) = l {
                            return args.into_iter().next();
                        }
                    }
                    if self.sub(&t, &Type::int_range()) {
                        return Some(Type::INT);
                    }
                    self.err(s.children[0].id, ErrorCategory::Type, format!("cannot iterate over {t}"));
                    None
                });
                self.frames.push(Vec::new());
                if let Some(e) = elem {
                    self.declare_local(&s.text, e, false, VarKind::LoopVar, s.id);
                }
                self.block(&s.children[1]);
                self.frames.pop();
            }
            NodeKind::Return => {
                if !self.in_function {
                    self.err(s.id, ErrorCategory::Type, "return outside of a function");
                    if let Some(v) = s.children.first() {
                        self.expr(v);
                    }
                    return;
                }
                let ret = self.ret.clone().unwrap_or(Type::UNIT);
                match s.children.first() {
                    Some(v) => {
                        if let Some(t) = self.expr(v) {
                            if ret == Type::UNIT {
                                self.err(v.id, ErrorCategory::Type, "a Unit function cannot return a value");
                            } else if !self.sub(&t, &ret) {
                                self.err(v.id, ErrorCategory::Type, format!("returned {t}, expected {ret}"));
                            }
                        }
                    }
                    None if ret != Type::UNIT => self.err(s.id, ErrorCategory::Type, format!("missing return value of type {ret}")),
                    None => {}
                }
            }
            NodeKind::Block => self.block(s),
            k if k.is_expr() => {
                self.expr(s);
            }
            _ => self.err(s.id, ErrorCategory::Declaration, format!("{:?} is not allowed here", s.kind)),
        }
    }

    fn condition(&mut self, c: &Node) {
        if let Some(t) = self.expr(c) {
            if t != Type::BOOLEAN {
                self.err(c.id, ErrorCategory::Type, format!("condition must be Boolean, found {t}"));
            }
        }
    }

    fn assign(&mut self, s: &Node) {
        let (target, value) = (&s.children[0], &s.children[1]);
        self.probe(target.id);
        let target_ty = match target.kind {
            NodeKind::NameRef => {
                let t = self.name_ref(target);
                if t.is_some() {
                    let writable = match self.res.get(&target.id) {
                        Some(Res::Var { kind: VarKind::Property { owner }, .. }) => {
                            let owner = owner.clone();
                            self.env.class(&owner).and_then(|c| c.prop(&target.text)).is_some_and(|p| p.mutable)
                        }
                        Some(Res::Var { kind: VarKind::Global, .. }) => {
                            self.lookup_global(&target.text).is_some_and(|v| v.mutable)
                        }
                        Some(Res::Var { .. }) => self.lookup_var(&target.text).is_some_and(|v| v.mutable),
                        _ => false,
                    };
                    if !writable {
                        self.err(target.id, ErrorCategory::Type, format!("val {} cannot be reassigned", target.text));
                    }
                }
                t
            }
            NodeKind::MemberAccess => {
                let t = self.expr(target);
                if t.is_some() {
                    let rt = self.types.get(&target.children[0].id).cloned();
                    let mutable = rt
                        .and_then(|rt| self.env.find_property(&rt, &target.text, &self.bounds))
                        .is_some_and(|h| h.member.mutable);
                    if !mutable {
                        self.err(target.id, ErrorCategory::Type, format!("val {} cannot be reassigned", target.text));
                    }
                }
                t
            }
            NodeKind::Index => {
                let get_ty = if s.text != "=" { self.expr(target) } else { None };
                let recv = &target.children[0];
                let rt = if s.text == "=" { self.expr(recv) } else { self.types.get(&recv.id).cloned() };
                let idx: Vec<&Node> = target.children[1..].iter().collect();
                let vt = self.expr(value);
                let (Some(rt), Some(vt)) = (rt, vt) else { return };
                let mut arg_tys: Vec<Option<Type>> = idx.iter().map(|i| self.types.get(&i.id).cloned()).collect();
                if s.text == "=" {
                    arg_tys = idx.iter().map(|i| self.expr(i)).collect();
                }
                let val_ty = if s.text == "=" {
                    vt
                } else {
                    let Some(gt) = get_ty else { return };
                    let op = operator_method(&s.text).unwrap_or("plus");
                    match self.operator_call(s.id, &gt, op, &[(None, Some(vt))], Role::Op) {
                        Some(t) => t,
                        None => return,
                    }
                };
                let mut args: Vec<(Option<&str>, Option<Type>)> = idx.iter().zip(arg_tys).map(|(_, t)| (None, t)).collect();
                args.push((None, Some(val_ty)));
                let role = if s.text == "=" { Role::Main } else { Role::Set };
                let key = if s.text == "=" { target.id } else { s.id };
                self.operator_call(key, &rt, "set", &args, role);
                return;
            }
            NodeKind::Placeholder => self.expr(target),
            _ => {
                self.err(target.id, ErrorCategory::Type, "invalid assignment target");
                self.expr(value);
                return;
            }
        };
        let vt = self.expr(value);
        let (Some(tt), Some(vt)) = (target_ty, vt) else { return };
        if s.text == "=" {
            if !self.sub(&vt, &tt) {
                self.err(value.id, ErrorCategory::Type, format!("assigned {vt}, expected {tt}"));
            }
        } else {
            let Some(op) = operator_method(&s.text) else {
                self.err(s.id, ErrorCategory::Type, format!("unknown assignment operator {}", s.text));
                return;
            };
            if let Some(r) = self.operator_call(s.id, &tt, op, &[(None, Some(vt))], Role::Op) {
                if !self.sub(&r, &tt) {
                    self.err(s.id, ErrorCategory::Type, format!("{} yields {r}, which is not {tt}", s.text));
                }
            }
        }
    }

    // ---- expressions ------------------------------------------------------

    fn lookup_var(&self, name: &str) -> Option<&ScopeVar> {
        self.frames.iter().skip(1).rev().find_map(|f| f.iter().rev().find(|v| v.name == name))
    }

    fn lookup_global(&self, name: &str) -> Option<&ScopeVar> {
        self.frames.first().and_then(|f| f.iter().rev().find(|v| v.name == name))
    }

    fn expr(&mut self, n: &Node) -> Option<Type> {
        self.depth += 1;
        let t = if self.depth > MAX_EXPR_DEPTH {
            self.err(n.id, ErrorCategory::Type, "expression nested too deeply");
            None
        } else {
            self.probe(n.id);
            self.expr_inner(n)
        };
        self.depth -= 1;
        if let Some(t) = &t {
            self.types.insert(n.id, t.clone());
        }
        t
    }

    fn expr_inner(&mut self, n: &Node) -> Option<Type> {
        match n.kind {
            NodeKind::IntLit => self.lit(n, n.text.parse::<i32>().is_ok(), Type::INT),
            NodeKind::LongLit => self.lit(n, n.text.parse::<i64>().is_ok(), Type::LONG),
            NodeKind::DoubleLit => self.lit(n, n.text.parse::<f64>().is_ok_and(f64::is_finite), Type::DOUBLE),
            NodeKind::BoolLit => self.lit(n, n.text == "true" || n.text == "false", Type::BOOLEAN),
            NodeKind::StringLit => Some(Type::STRING),
            NodeKind::Placeholder => {
                let t = parse_type(&n.text).ok()?;
                self.resolve_type(&t)
            }
            NodeKind::NameRef => self.name_ref(n),
            NodeKind::FunRef => {
                let ids = self.env.functions_named(&n.text).to_vec();
                if ids.len() != 1 {
                    let msg = if ids.is_empty() { "unresolved function" } else { "ambiguous function reference" };
                    self.err(n.id, ErrorCategory::Resolution, format!("{msg} {}", n.text));
                    return None;
                }
                let f = self.env.functions[ids[0]].clone();
                if !f.type_params.is_empty() || f.params.iter().any(|p| p.vararg) {
                    self.err(n.id, ErrorCategory::Type, format!("cannot reference generic or vararg function {}", n.text));
                    return None;
                }
                self.res.insert(n.id, Res::Fun(ids[0]));
                Some(Type::Func(f.params.iter().map(|p| p.ty.clone()).collect(), Box::new(f.ret.clone())))
            }
            NodeKind::Call => self.call(n),
            NodeKind::MethodCall => {
                let rt = self.expr(&n.children[0])?;
                let cands: Vec<Candidate> = self
                    .env
                    .find_methods(&rt, &n.text, &self.bounds)
                    .into_iter()
                    .map(|h| Candidate {
                        res: Res::Method { owner: h.owner.name.clone(), name: n.text.clone(), implicit: false, decl: h.member.decl },
                        sig: h.member,
                        subst: h.subst,
                    })
                    .collect();
                if cands.is_empty() {
                    self.err(n.id, ErrorCategory::Resolution, format!("{rt} has no method {}", n.text));
                    for a in n.call_args() {
                        self.arg_value(a);
                    }
                    return None;
                }
                self.resolve_call(n, cands)
            }
            NodeKind::ConstructorCall => {
                let Some(c) = self.env.class(&n.text).cloned() else {
                    self.err(n.id, ErrorCategory::Resolution, format!("unresolved class {}", n.text));
                    for a in n.call_args() {
                        self.arg_value(a);
                    }
                    return None;
                };
                if !c.constructible() {
                    self.err(n.id, ErrorCategory::Type, format!("{} cannot be instantiated", n.text));
                    for a in n.call_args() {
                        self.arg_value(a);
                    }
                    return None;
                }
                let mut targs = Vec::new();
                for t in n.type_args() {
                    targs.push(self.resolve_type(t)?);
                }
                let ty = Type::Class(c.name.clone(), targs);
                self.ctor_call_with_type(n, &ty)
            }
            NodeKind::MemberAccess => {
                let rt = self.expr(&n.children[0])?;
                let Some(hit) = self.env.find_property(&rt, &n.text, &self.bounds) else {
                    self.err(n.id, ErrorCategory::Resolution, format!("{rt} has no property {}", n.text));
                    return None;
                };
                if hit.member.mods.has(Modifiers::PRIVATE) && self.class.as_deref() != Some(hit.owner.name.as_str()) {
                    self.err(n.id, ErrorCategory::Resolution, format!("{} is private", n.text));
                    return None;
                }
                let owner = hit.owner.clone();
                let t = self.prop_type(&owner, &n.text)?;
                self.res.insert(n.id, Res::Prop { owner: owner.name.clone() });
                Some(t.subst(&hit.subst))
            }
            NodeKind::Index => {
                let rt = self.expr(&n.children[0])?;
                let args: Vec<(Option<&str>, Option<Type>)> =
                    n.children[1..].iter().map(|i| (None, self.expr(i))).collect();
                self.operator_call(n.id, &rt, "get", &args, Role::Main)
            }
            NodeKind::BinaryOp => self.binary(n),
            NodeKind::RangeExpr => {
                let lt = self.expr(&n.children[0]);
                let rt = self.expr(&n.children[1]);
                let lt = lt?;
                let op = operator_method(&n.text)?;
                self.operator_call(n.id, &lt, op, &[(None, rt)], Role::Main)
            }
            NodeKind::UnaryOp => {
                let t = self.expr(&n.children[0])?;
                match n.text.as_str() {
                    "!" => {
                        if t != Type::BOOLEAN {
                            self.err(n.id, ErrorCategory::Type, format!("! expects Boolean, found {t}"));
                            return None;
                        }
                        self.res.insert(n.id, Res::Builtin);
                        Some(Type::BOOLEAN)
                    }
                    "-" => self.operator_call(n.id, &t, "unaryMinus", &[], Role::Main),
                    op => {
                        self.err(n.id, ErrorCategory::Type, format!("unknown unary operator {op}"));
                        None
                    }
                }
            }
            NodeKind::NamedArg => {
                self.err(n.id, ErrorCategory::Type, "named argument outside of a call");
                None
            }
            _ => {
                self.err(n.id, ErrorCategory::Type, format!("{:?} is not an expression", n.kind));
                None
            }
        }
    }

    fn lit(&mut self, n: &Node, ok: bool, t: Type) -> Option<Type> {
        if ok {
            Some(t)
        } else {
            self.err(n.id, ErrorCategory::Type, format!("malformed literal {}", n.text));
            None
        }
    }

    fn implicit_property(&mut self, name: &str) -> Option<(Arc<ClassInfo>, Type)> {
        let cls = self.class.clone()?;
        let st = self.env.class(&cls)?.self_type();
        let hit = self.env.find_property(&st, name, &self.bounds)?;
        if hit.member.mods.has(Modifiers::PRIVATE) && hit.owner.name != cls {
            return None;
        }
        let owner = hit.owner.clone();
        let t = self.prop_type(&owner, name)?;
        Some((owner, t.subst(&hit.subst)))
    }

    fn name_ref(&mut self, n: &Node) -> Option<Type> {
        if let Some(v) = self.lookup_var(&n.text).cloned() {
            self.res.insert(n.id, Res::Var { kind: v.kind, decl: v.decl });
            self.types.insert(n.id, v.ty.clone());
            return Some(v.ty);
        }
        if let Some((owner, t)) = self.implicit_property(&n.text) {
            let decl = owner.prop(&n.text).map(|p| p.decl).unwrap_or(0);
            self.res.insert(n.id, Res::Var { kind: VarKind::Property { owner: owner.name.clone() }, decl });
            self.types.insert(n.id, t.clone());
            return Some(t);
        }
        if let Some(v) = self.lookup_global(&n.text).cloned() {
            self.res.insert(n.id, Res::Var { kind: v.kind, decl: v.decl });
            self.types.insert(n.id, v.ty.clone());
            return Some(v.ty);
        }
        let msg = if !self.env.functions_named(&n.text).is_empty() {
            format!("function {} used as a value; use ::{}", n.text, n.text)
        } else {
            format!("unresolved reference {}", n.text)
        };
        self.err(n.id, ErrorCategory::Resolution, msg);
        None
    }

    fn call(&mut self, n: &Node) -> Option<Type> {
        // a variable of function type
        let var = self.lookup_var(&n.text).cloned().or_else(|| {
            if self.implicit_property(&n.text).is_some() {
                None
            } else {
                self.lookup_global(&n.text).cloned()
            }
        });
        if let Some(v) = var.filter(|v| matches!(v.ty, Type::Func(..))) {
            let Type::Func(ps, r) = v.ty.clone() else { unreachable!() };
            if n.type_args().next().is_some() {
                self.err(n.id, ErrorCategory::Type, "function values take no type arguments");
            }
            let args: Vec<&Node> = n.call_args().collect();
            let mut ok = args.len() == ps.len();
            for (i, a) in args.iter().enumerate() {
                if a.kind == NodeKind::NamedArg {
                    ok = false;
                }
                let t = self.arg_value(a);
                if let (Some(t), Some(p)) = (t, ps.get(i)) {
                    if !self.sub(&t, p) {
                        ok = false;
                    }
                }
            }
            if !ok {
                self.err(n.id, ErrorCategory::Type, format!("arguments do not match {}", v.ty));
                return None;
            }
            self.res.insert(n.id, Res::CallValue { kind: v.kind, decl: v.decl });
            self.bindings.insert((n.id, Role::Main), (0..args.len()).map(Slot::Arg).collect());
            return Some(*r);
        }
        let mut cands = Vec::new();
        if let Some(cls) = self.class.clone() {
            if let Some(st) = self.env.class(&cls).map(|c| c.self_type()) {
                for h in self.env.find_methods(&st, &n.text, &self.bounds) {
                    cands.push(Candidate {
                        res: Res::Method { owner: h.owner.name.clone(), name: n.text.clone(), implicit: true, decl: h.member.decl },
                        sig: h.member,
                        subst: h.subst,
                    });
                }
            }
        }
        if cands.is_empty() {
            for &id in self.env.functions_named(&n.text) {
                cands.push(Candidate { sig: self.env.functions[id].clone(), subst: HashMap::new(), res: Res::Fun(id) });
            }
        }
        if cands.is_empty() {
            self.err(n.id, ErrorCategory::Resolution, format!("unresolved function {}", n.text));
            for a in n.call_args() {
                self.arg_value(a);
            }
            return None;
        }
        self.resolve_call(n, cands)
    }

    fn arg_value(&mut self, a: &Node) -> Option<Type> {
        if a.kind == NodeKind::NamedArg {
            let t = a.children.first().and_then(|v| self.expr(v));
            if let Some(t) = &t {
                self.types.insert(a.id, t.clone());
            }
            t
        } else {
            self.expr(a)
        }
    }

    fn ctor_call_with_type(&mut self, n: &Node, ty: &Type) -> Option<Type> {
        let Type::Class(name, targs) = ty else { return None };
        let c = self.env.class(name)?.clone();
        if c.type_params.len() != targs.len() {
            self.err(n.id, ErrorCategory::Type, format!("{} needs {} type argument(s)", c.name, c.type_params.len()));
            for a in n.call_args() {
                self.arg_value(a);
            }
            return None;
        }
        if !self.bounds_ok(&c, targs) {
            self.err(n.id, ErrorCategory::Type, format!("type arguments of {} violate bounds", c.name));
            return None;
        }
        let sig = Arc::new(FunSig {
            name: c.name.clone(),
            type_params: vec![],
            params: c.ctor.clone(),
            ret: c.self_type(),
            mods: Modifiers::NONE,
            owner: Some(c.name.clone()),
            decl: c.decl,
            std: c.std,
            has_body: true,
        });
        let subst = c.param_map(targs);
        self.resolve_call_with(n, vec![Candidate { sig, subst, res: Res::Ctor(c.name.clone()) }], Vec::new())
    }

    fn resolve_call(&mut self, n: &Node, cands: Vec<Candidate>) -> Option<Type> {
        let mut targs = Vec::new();
        for t in n.type_args() {
            targs.push(self.resolve_type(t)?);
        }
        self.resolve_call_with(n, cands, targs)
    }

    fn resolve_call_with(&mut self, n: &Node, cands: Vec<Candidate>, targs: Vec<Type>) -> Option<Type> {
        let args: Vec<&Node> = n.call_args().collect();
        let arg_tys: Vec<Option<Type>> = args.iter().map(|a| self.arg_value(a)).collect();
        if arg_tys.iter().any(Option::is_none) {
            return None;
        }
        let named: Vec<Option<&str>> =
            args.iter().map(|a| (a.kind == NodeKind::NamedArg).then_some(a.text.as_str())).collect();
        let typed: Vec<(Option<&str>, Option<Type>)> = named.iter().copied().zip(arg_tys).collect();
        let (ret, res, slots) = self.pick_overload(n.id, &n.text, cands, &targs, &typed)?;
        self.res.insert(n.id, res);
        self.bindings.insert((n.id, Role::Main), slots);
        Some(ret)
    }

    /// Resolves an operator-style call `recv.op(args)` recorded under `key`.
    fn operator_call(
        &mut self,
        key: NodeId,
        recv: &Type,
        op: &str,
        args: &[(Option<&str>, Option<Type>)],
        role: Role,
    ) -> Option<Type> {
        if args.iter().any(|(_, t)| t.is_none()) {
            return None;
        }
        let cands: Vec<Candidate> = self
            .env
            .find_methods(recv, op, &self.bounds)
            .into_iter()
            .filter(|h| h.member.is_operator() || matches!(op, "until" | "downTo"))
            .map(|h| Candidate {
                res: Res::Method { owner: h.owner.name.clone(), name: op.to_string(), implicit: false, decl: h.member.decl },
                sig: h.member,
                subst: h.subst,
            })
            .collect();
        if cands.is_empty() {
            self.err(key, ErrorCategory::Resolution, format!("{recv} has no operator {op}"));
            return None;
        }
        let (ret, res, slots) = self.pick_overload(key, op, cands, &[], args)?;
        self.role_res.insert((key, role), res.clone());
        if role == Role::Main || !self.res.contains_key(&key) {
            self.res.insert(key, res);
        }
        self.bindings.insert((key, role), slots);
        Some(ret)
    }

    fn pick_overload(
        &mut self,
        at: NodeId,
        name: &str,
        cands: Vec<Candidate>,
        targs: &[Type],
        args: &[(Option<&str>, Option<Type>)],
    ) -> Option<(Type, Res, Vec<Slot>)> {
        let named: Vec<Option<&str>> = args.iter().map(|(n, _)| *n).collect();
        let mut applicable: Vec<(usize, Vec<Type>, Type, Vec<Slot>)> = Vec::new();
        let mut last_reason = String::new();
        for (ci, c) in cands.iter().enumerate() {
            if c.sig.is_private() && c.sig.owner.is_some() && self.class.as_deref() != c.sig.owner.as_deref() {
                last_reason = format!("{name} is private");
                continue;
            }
            if c.sig.type_params.len() != targs.len() {
                last_reason = if targs.is_empty() {
                    format!("{name} needs explicit type arguments")
                } else {
                    format!("{name} expects {} type argument(s)", c.sig.type_params.len())
                };
                continue;
            }
            let mut subst = c.subst.clone();
            for (tp, a) in c.sig.type_params.iter().zip(targs) {
                subst.insert(tp.name.clone(), a.clone());
            }
            if !c.sig.type_params.iter().zip(targs).all(|(tp, a)| self.sub(a, &tp.bound.subst(&subst))) {
                last_reason = format!("type arguments of {name} violate bounds");
                continue;
            }
            let slots = match bind_args(&c.sig.params, &named) {
                Ok(s) => s,
                Err(e) => {
                    last_reason = e;
                    continue;
                }
            };
            let ptys: Vec<Type> = c.sig.params.iter().map(|p| p.ty.subst(&subst)).collect();
            let mut ok = true;
            for (slot, pt) in slots.iter().zip(&ptys) {
                match slot {
                    Slot::Arg(i) => {
                        let at = args[*i].1.as_ref().unwrap();
                        if !self.sub(at, pt) {
                            last_reason = format!("argument of type {at} is not {pt}");
                            ok = false;
                        }
                    }
                    Slot::Vararg(is) => {
                        let elem = match pt {
                            Type::Class(_, a) if a.len() == 1 => a[0].clone(),
                            _ => Type::Any,
                        };
                        for i in is {
                            let at = args[*i].1.as_ref().unwrap();
                            if !self.sub(at, &elem) {
                                last_reason = format!("argument of type {at} is not {elem}");
                                ok = false;
                            }
                        }
                    }
                    Slot::Default => {}
                }
            }
            if ok {
                applicable.push((ci, ptys, c.sig.ret.subst(&subst), slots));
            }
        }
        if applicable.is_empty() {
            let msg = if cands.len() == 1 { last_reason } else { format!("no applicable overload of {name}: {last_reason}") };
            self.err(at, ErrorCategory::Type, msg);
            return None;
        }
        let more_specific = |a: &[Type], b: &[Type]| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| self.sub(x, y));
        let best = (0..applicable.len()).find(|&i| {
            (0..applicable.len()).all(|j| i == j || more_specific(&applicable[i].1, &applicable[j].1))
        });
        let Some(best) = best else {
            self.err(at, ErrorCategory::Type, format!("ambiguous call to {name}"));
            return None;
        };
        let (ci, _, ret, slots) = applicable.swap_remove(best);
        Some((ret, cands[ci].res.clone(), slots))
    }

    fn binary(&mut self, n: &Node) -> Option<Type> {
        let lt = self.expr(&n.children[0]);
        let rt = self.expr(&n.children[1]);
        let (lt, rt) = (lt?, rt?);
        match n.text.as_str() {
            "&&" | "||" => {
                if lt != Type::BOOLEAN || rt != Type::BOOLEAN {
                    self.err(n.id, ErrorCategory::Type, format!("{} expects Boolean operands", n.text));
                    return None;
                }
                self.res.insert(n.id, Res::Builtin);
                Some(Type::BOOLEAN)
            }
            "==" | "!=" => {
                if !self.sub(&lt, &rt) && !self.sub(&rt, &lt) {
                    self.err(n.id, ErrorCategory::Type, format!("cannot compare {lt} and {rt}"));
                    return None;
                }
                self.res.insert(n.id, Res::Builtin);
                Some(Type::BOOLEAN)
            }
            "<" | ">" | "<=" | ">=" => {
                let r = self.operator_call(n.id, &lt, "compareTo", &[(None, Some(rt))], Role::Main)?;
                if r != Type::INT {
                    self.err(n.id, ErrorCategory::Type, "compareTo must return Int");
                    return None;
                }
                Some(Type::BOOLEAN)
            }
            op => match operator_method(op) {
                Some(m) => self.operator_call(n.id, &lt, m, &[(None, Some(rt))], Role::Main),
                None => {
                    self.err(n.id, ErrorCategory::Type, format!("unknown operator {op}"));
                    None
                }
            },
        }
    }
}
