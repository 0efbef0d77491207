//! Declaration tables shared by the checker, the generators and the backends.

use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;

use super::ty::{type_from_node, Prim, Type, TypeParam};
use crate::lang::{Modifiers, Node, NodeId, NodeKind, SyntaxTree};

pub type FunId = usize;

/// Upper bounds of the type parameters in scope.
pub type Bounds = HashMap<String, Type>;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParamInfo {
    pub name: String,
    pub ty: Type,
    pub has_default: bool,
    pub vararg: bool,
    pub decl: NodeId,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FunSig {
    pub name: String,
    pub type_params: Vec<TypeParam>,
    pub params: Vec<ParamInfo>,
    pub ret: Type,
    pub mods: Modifiers,
    /// Declaring class for methods.
    pub owner: Option<String>,
    pub decl: NodeId,
    pub std: bool,
    pub has_body: bool,
}

impl FunSig {
    pub fn is_abstract(&self) -> bool {
        !self.has_body && !self.mods.has(Modifiers::NATIVE)
    }

    pub fn is_operator(&self) -> bool {
        self.mods.has(Modifiers::OPERATOR)
    }

    pub fn is_private(&self) -> bool {
        self.mods.has(Modifiers::PRIVATE)
    }

    /// Number of arguments a call must supply at minimum.
    pub fn required_arity(&self) -> usize {
        self.params.iter().filter(|p| !p.has_default && !p.vararg).count()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropInfo {
    pub name: String,
    /// `None` until inferred from the initializer.
    pub ty: Option<Type>,
    pub mutable: bool,
    pub mods: Modifiers,
    pub decl: NodeId,
    pub ctor_param: bool,
    pub has_init: bool,
}

impl PropInfo {
    pub fn is_abstract(&self) -> bool {
        !self.ctor_param && !self.has_init && !self.mods.has(Modifiers::NATIVE)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassInfo {
    pub name: String,
    pub is_interface: bool,
    pub mods: Modifiers,
    pub std: bool,
    pub decl: NodeId,
    pub type_params: Vec<TypeParam>,
    pub ctor: Vec<ParamInfo>,
    pub superclass: Option<Type>,
    pub interfaces: Vec<Type>,
    pub props: Vec<PropInfo>,
    pub methods: Vec<Arc<FunSig>>,
}

impl ClassInfo {
    pub fn self_type(&self) -> Type {
        if let Some(p) = Prim::from_name(&self.name).filter(|_| self.std) {
            return Type::Prim(p);
        }
        if self.std && self.name == "Any" {
            return Type::Any;
        }
        Type::Class(self.name.clone(), self.type_params.iter().map(|tp| Type::Param(tp.name.clone())).collect())
    }

    pub fn is_abstract(&self) -> bool {
        self.is_interface || self.mods.has(Modifiers::ABSTRACT)
    }

    pub fn is_open(&self) -> bool {
        self.is_interface || self.mods.has(Modifiers::OPEN) || self.mods.has(Modifiers::ABSTRACT)
    }

    /// Primitive and `Any` declarations describe members only.
    pub fn is_builtin_value(&self) -> bool {
        self.std && (Prim::from_name(&self.name).is_some() || self.name == "Any")
    }

    /// Stdlib interfaces marked `native` cannot be implemented by user code.
    pub fn is_sealed(&self) -> bool {
        self.std && self.mods.has(Modifiers::NATIVE) && self.is_interface
    }

    pub fn constructible(&self) -> bool {
        !self.is_abstract() && !self.is_builtin_value()
    }

    pub fn supertypes(&self) -> impl Iterator<Item = &Type> {
        self.superclass.iter().chain(self.interfaces.iter())
    }

    pub fn param_map(&self, args: &[Type]) -> HashMap<String, Type> {
        self.type_params.iter().map(|tp| tp.name.clone()).zip(args.iter().cloned()).collect()
    }

    pub fn method(&self, name: &str) -> impl Iterator<Item = &Arc<FunSig>> {
        let name = name.to_string();
        self.methods.iter().filter(move |m| m.name == name)
    }

    pub fn prop(&self, name: &str) -> Option<&PropInfo> {
        self.props.iter().find(|p| p.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GlobalInfo {
    pub name: String,
    pub ty: Option<Type>,
    pub mutable: bool,
    pub decl: NodeId,
}

/// A property or method found on a type, with the declaring class and the
/// substitution from that class's type parameters.
#[derive(Clone, Debug)]
pub struct MemberHit<T> {
    pub owner: Arc<ClassInfo>,
    pub member: T,
    pub subst: HashMap<String, Type>,
}

#[derive(Clone, Debug, Default)]
pub struct Env {
    pub classes: HashMap<String, Arc<ClassInfo>>,
    pub class_order: Vec<String>,
    pub functions: Vec<Arc<FunSig>>,
    pub fun_by_name: HashMap<String, Vec<FunId>>,
    pub globals: Vec<GlobalInfo>,
    pub n_std_funcs: usize,
}

const MAX_SUPER_DEPTH: usize = 64;

impl Env {
    pub fn class(&self, name: &str) -> Option<&Arc<ClassInfo>> {
        self.classes.get(name)
    }

    pub fn user_classes(&self) -> impl Iterator<Item = &Arc<ClassInfo>> {
        self.class_order.iter().filter_map(|n| self.classes.get(n)).filter(|c| !c.std)
    }

    pub fn all_classes(&self) -> impl Iterator<Item = &Arc<ClassInfo>> {
        self.class_order.iter().filter_map(|n| self.classes.get(n))
    }

    pub fn functions_named(&self, name: &str) -> &[FunId] {
        self.fun_by_name.get(name).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn global(&self, name: &str) -> Option<&GlobalInfo> {
        self.globals.iter().find(|g| g.name == name)
    }

    /// Declaration describing the members of `t`.
    pub fn decl_of(&self, t: &Type, bounds: &Bounds) -> Option<(&Arc<ClassInfo>, Vec<Type>)> {
        let mut t = t.clone();
        for _ in 0..MAX_SUPER_DEPTH {
            match t {
                Type::Param(ref n) => t = bounds.get(n).cloned().unwrap_or(Type::Any),
                Type::Class(ref n, ref args) => return self.class(n).map(|c| (c, args.clone())),
                Type::Func(..) => return self.class("Any").map(|c| (c, vec![])),
                ref other => return self.class(other.decl_name()?).map(|c| (c, vec![])),
            }
        }
        None
    }

    /// Declared supertypes of `t` with type arguments substituted.
    pub fn direct_supertypes(&self, t: &Type) -> Vec<Type> {
        let (name, args) = match t {
            Type::Class(n, a) => (n.as_str(), a.as_slice()),
            Type::Prim(p) => (p.name(), &[][..]),
            _ => return vec![],
        };
        let Some(c) = self.class(name) else { return vec![] };
        let map = c.param_map(args);
        c.supertypes().map(|s| s.subst(&map)).collect()
    }

    pub fn is_subtype(&self, sub: &Type, sup: &Type, bounds: &Bounds) -> bool {
        self.subtype_rec(sub, sup, bounds, 0)
    }

    fn subtype_rec(&self, sub: &Type, sup: &Type, bounds: &Bounds, depth: usize) -> bool {
        if sub == sup || *sup == Type::Any {
            return true;
        }
        if depth > MAX_SUPER_DEPTH {
            return false;
        }
        match sub {
            Type::Param(n) => {
                let b = bounds.get(n).cloned().unwrap_or(Type::Any);
                b != *sub && self.subtype_rec(&b, sup, bounds, depth + 1)
            }
            Type::Prim(_) | Type::Class(..) => {
                self.direct_supertypes(sub).iter().any(|s| self.subtype_rec(s, sup, bounds, depth + 1))
            }
            _ => false,
        }
    }

    /// The instantiation of declaration `name` among the supertypes of `t`.
    pub fn supertype_as(&self, t: &Type, name: &str, bounds: &Bounds) -> Option<Type> {
        let mut stack = vec![(t.clone(), 0usize)];
        while let Some((cur, d)) = stack.pop() {
            let cur = match cur {
                Type::Param(ref n) => bounds.get(n).cloned().unwrap_or(Type::Any),
                c => c,
            };
            if cur.decl_name() == Some(name) {
                return Some(cur);
            }
            if d < MAX_SUPER_DEPTH {
                for s in self.direct_supertypes(&cur).into_iter().rev() {
                    stack.push((s, d + 1));
                }
            }
        }
        None
    }

    /// Walks the declaration of `t` and its supertypes, most derived first,
    /// each visited once, ending with `Any`.
    pub fn linearize(&self, t: &Type, bounds: &Bounds) -> Vec<(Arc<ClassInfo>, HashMap<String, Type>)> {
        let mut out: Vec<(Arc<ClassInfo>, HashMap<String, Type>)> = Vec::new();
        let Some((c, args)) = self.decl_of(t, bounds) else { return out };
        let mut queue = vec![(c.clone(), args)];
        let mut steps = 0;
        while !queue.is_empty() && steps < 256 {
            steps += 1;
            let (c, args) = queue.remove(0);
            if out.iter().any(|(o, _)| o.name == c.name) {
                continue;
            }
            let map = c.param_map(&args);
            for s in c.supertypes() {
                let s = s.subst(&map);
                if let Some((sc, sargs)) = self.decl_of(&s, &Bounds::new()) {
                    queue.push((sc.clone(), sargs));
                }
            }
            out.push((c, map));
        }
        if !out.iter().any(|(c, _)| c.name == "Any") {
            if let Some(any) = self.class("Any") {
                out.push((any.clone(), HashMap::new()));
            }
        }
        out
    }

    pub fn find_property(&self, t: &Type, name: &str, bounds: &Bounds) -> Option<MemberHit<PropInfo>> {
        self.linearize(t, bounds).into_iter().find_map(|(c, subst)| {
            let p = c.prop(name)?.clone();
            Some(MemberHit { owner: c, member: p, subst })
        })
    }

    /// Methods named `name` visible on `t`: the overloads of the most derived
    /// declaring class that has any.
    pub fn find_methods(&self, t: &Type, name: &str, bounds: &Bounds) -> Vec<MemberHit<Arc<FunSig>>> {
        for (c, subst) in self.linearize(t, bounds) {
            let ms: Vec<Arc<FunSig>> = c.method(name).cloned().collect();
            if !ms.is_empty() {
                return ms.into_iter().map(|m| MemberHit { owner: c.clone(), member: m, subst: subst.clone() }).collect();
            }
        }
        Vec::new()
    }

    fn add_class(&mut self, c: ClassInfo) {
        self.class_order.push(c.name.clone());
        self.classes.insert(c.name.clone(), Arc::new(c));
    }

    fn add_function(&mut self, f: FunSig) {
        let id = self.functions.len();
        self.fun_by_name.entry(f.name.clone()).or_default().push(id);
        self.functions.push(Arc::new(f));
    }
}

/// A duplicate or malformed declaration found while building the tables.
#[derive(Clone, Debug)]
pub struct DeclIssue {
    pub node: NodeId,
    pub message: String,
}

fn names(tps: &[TypeParam]) -> Vec<String> {
    tps.iter().map(|t| t.name.clone()).collect()
}

fn type_params(n: &Node, outer: &[String]) -> Vec<TypeParam> {
    let mut scope = outer.to_vec();
    scope.extend(n.type_params().map(|tp| tp.text.clone()));
    n.type_params()
        .map(|tp| TypeParam {
            name: tp.text.clone(),
            bound: tp.declared_type().map(|b| type_from_node(b, &scope)).unwrap_or(Type::Any),
        })
        .collect()
}

fn params(n: &Node, scope: &[String]) -> Vec<ParamInfo> {
    n.params()
        .map(|p| {
            let vararg = p.mods.has(Modifiers::VARARG);
            let elem = p.declared_type().map(|t| type_from_node(t, scope)).unwrap_or(Type::Any);
            ParamInfo {
                name: p.text.clone(),
                ty: if vararg { Type::list(elem) } else { elem },
                has_default: p.initializer().is_some(),
                vararg,
                decl: p.id,
            }
        })
        .collect()
}

pub(crate) fn fun_sig(n: &Node, outer: &[String], owner: Option<&str>, std: bool) -> FunSig {
    let tps = type_params(n, outer);
    let mut scope = outer.to_vec();
    scope.extend(names(&tps));
    let ret = n.declared_type().map(|t| type_from_node(t, &scope)).unwrap_or(Type::UNIT);
    FunSig {
        name: n.text.clone(),
        params: params(n, &scope),
        type_params: tps,
        ret,
        mods: n.mods,
        owner: owner.map(str::to_string),
        decl: n.id,
        std,
        has_body: n.fun_body().is_some(),
    }
}

fn class_info(n: &Node, std: bool) -> ClassInfo {
    let tps = type_params(n, &[]);
    let scope = names(&tps);
    let is_interface = n.kind == NodeKind::InterfaceDecl;
    let ctor = if is_interface { vec![] } else { params(n, &scope) };
    let superclass = if is_interface {
        None
    } else {
        n.superclass_call().map(|c| {
            Type::Class(c.text.clone(), c.type_args().map(|t| type_from_node(t, &scope)).collect())
        })
    };
    let interfaces = n.super_interfaces().map(|t| type_from_node(t, &scope)).collect();
    let mut props = Vec::new();
    if !is_interface {
        for (p, info) in n.params().zip(&ctor) {
            if p.mods.has(Modifiers::VAL) || p.mods.has(Modifiers::VAR) {
                props.push(PropInfo {
                    name: p.text.clone(),
                    ty: Some(info.ty.clone()),
                    mutable: p.mods.has(Modifiers::VAR),
                    mods: p.mods,
                    decl: p.id,
                    ctor_param: true,
                    has_init: false,
                });
            }
        }
    }
    let mut methods = Vec::new();
    for m in n.members() {
        match m.kind {
            NodeKind::PropertyDecl => props.push(PropInfo {
                name: m.text.clone(),
                ty: m.declared_type().map(|t| type_from_node(t, &scope)),
                mutable: m.mods.has(Modifiers::VAR),
                mods: m.mods,
                decl: m.id,
                ctor_param: false,
                has_init: m.initializer().is_some(),
            }),
            _ => methods.push(Arc::new(fun_sig(m, &scope, Some(&n.text), std))),
        }
    }
    ClassInfo {
        name: n.text.clone(),
        is_interface,
        mods: n.mods,
        std,
        decl: n.id,
        type_params: tps,
        ctor,
        superclass,
        interfaces,
        props,
        methods,
    }
}

/// Builds the declaration tables of `tree` on top of `base`.
pub fn collect_decls(tree: &SyntaxTree, base: Option<&Env>, std: bool) -> (Env, Vec<DeclIssue>) {
    let mut env = base.cloned().unwrap_or_default();
    let mut issues = Vec::new();
    for item in tree.items() {
        match item.kind {
            NodeKind::ClassDecl | NodeKind::InterfaceDecl => {
                let reserved = !std && (Prim::from_name(&item.text).is_some() || item.text == "Any");
                if env.classes.contains_key(&item.text) || reserved {
                    issues.push(DeclIssue { node: item.id, message: format!("redeclaration of type {}", item.text) });
                    continue;
                }
                env.add_class(class_info(item, std));
            }
            NodeKind::FunDecl => env.add_function(fun_sig(item, &[], None, std)),
            NodeKind::VarDecl => {
                if env.global(&item.text).is_some() {
                    issues.push(DeclIssue { node: item.id, message: format!("redeclaration of {}", item.text) });
                    continue;
                }
                env.globals.push(GlobalInfo {
                    name: item.text.clone(),
                    ty: item.declared_type().map(|t| type_from_node(t, &[])),
                    mutable: item.mods.has(Modifiers::VAR),
                    decl: item.id,
                });
            }
            _ => {}
        }
    }
    if std {
        env.n_std_funcs = env.functions.len();
    }
    (env, issues)
}

impl Env {
    pub(crate) fn set_prop_type(&mut self, class: &str, prop: &str, ty: Type) {
        if let Some(c) = self.classes.get_mut(class) {
            let c = Arc::make_mut(c);
            if let Some(p) = c.props.iter_mut().find(|p| p.name == prop) {
                p.ty = Some(ty);
            }
        }
    }

    pub(crate) fn set_global_type(&mut self, decl: NodeId, ty: Type) {
        if let Some(g) = self.globals.iter_mut().find(|g| g.decl == decl) {
            g.ty = Some(ty);
        }
    }
}
