//! Lowering of checked trees to stack bytecode.

use std::collections::{HashMap, HashSet};
use std::rc::Rc;

use super::faults::{Fault, FaultSet};
use super::program::Program;
use super::trace::Phase;
use super::value::Value;
use crate::lang::{Modifiers, Node, NodeId, NodeKind};
use crate::types::{FunId, Res, Role, Slot, VarKind};

pub type Slot16 = u16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Gt,
    Le,
    Ge,
}

#[derive(Clone, Debug)]
pub enum Op {
    Const(Value),
    Absent,
    Load(Slot16),
    Store(Slot16),
    LoadGlobal(Rc<str>),
    StoreGlobal(Rc<str>),
    LoadThis,
    /// Pops an object, pushes its field.
    GetField(Rc<str>),
    /// Pops a value then an object.
    SetField(Rc<str>),
    /// Pops a receiver, pushes a field or native property.
    GetProp(Rc<str>),
    Pop,
    Jump(u32),
    JumpIfFalse(u32),
    JumpIfPresent(Slot16, u32),
    Call(u32, u8),
    CallNative(FunId, u8),
    /// Pops arguments, then a function value.
    CallDyn(u8),
    /// Pops arguments, then the receiver.
    Invoke { name: Rc<str>, decl: NodeId, argc: u8 },
    New { class: Rc<str>, argc: u8 },
    /// Runs the initializer of `class` on the current object.
    InitSuper { class: Rc<str>, argc: u8 },
    MakeList(u16),
    Not,
    Eq,
    Ne,
    Cmp(CmpOp),
    IntLt,
    IntNe,
    Inc(Slot16),
    Event(u32),
    Return,
    IterStart(u16),
    /// Stores the next element in the slot or jumps when done.
    IterNext(Slot16, u16, u32),
}

#[derive(Debug, Default)]
pub struct Code {
    pub ops: Vec<Op>,
    pub slots: usize,
    pub cursors: usize,
}

/// Instrumentation point: block id plus the visible slots.
#[derive(Debug)]
pub struct Site {
    pub block: String,
    pub vars: Vec<(Rc<str>, Slot16)>,
}

#[derive(Debug, Default)]
pub struct Module {
    pub codes: Vec<Code>,
    pub funs: HashMap<NodeId, u32>,
    pub inits: HashMap<String, u32>,
    pub script: u32,
    pub sites: Vec<Site>,
}

/// Why lowering stopped.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Crash {
    pub phase: Phase,
    pub kind: &'static str,
    pub location: &'static str,
}

type C<T> = Result<T, Crash>;

fn internal(location: &'static str) -> Crash {
    Crash { phase: Phase::Backend, kind: "internal", location }
}

/// Frontend checks run before lowering.
pub fn lower_check(p: &Program<'_>, faults: FaultSet) -> C<()> {
    if !faults.has(Fault::IndexCompoundAssign) {
        return Ok(());
    }
    let mut hit = false;
    p.tree.root.walk(&mut |n| {
        if n.kind == NodeKind::Assign && n.text != "=" && n.children[0].kind == NodeKind::Index {
            n.children[1].walk(&mut |v| hit |= matches!(v.kind, NodeKind::Call | NodeKind::MethodCall));
        }
    });
    if hit {
        return Err(Crash { phase: Phase::Frontend, kind: "panic", location: "lower/index_compound_assign" });
    }
    Ok(())
}

pub fn compile(p: &Program<'_>, faults: FaultSet) -> C<Module> {
    lower_check(p, faults)?;
    let mut m = Module::default();
    let mut funs: Vec<&Node> = Vec::new();
    let mut classes: Vec<&Node> = Vec::new();
    for item in p.tree.items() {
        match item.kind {
            NodeKind::FunDecl => funs.push(item),
            NodeKind::ClassDecl | NodeKind::InterfaceDecl => {
                if item.kind == NodeKind::ClassDecl {
                    classes.push(item);
                }
                funs.extend(item.members().filter(|f| f.kind == NodeKind::FunDecl && f.fun_body().is_some()));
            }
            _ => {}
        }
    }
    let reserved = funs.len() + classes.len() + 1;
    m.codes.resize_with(reserved, Code::default);
    for (i, f) in funs.iter().enumerate() {
        m.funs.insert(f.id, i as u32);
    }
    for (i, c) in classes.iter().enumerate() {
        m.inits.insert(c.text.clone(), (funs.len() + i) as u32);
    }
    m.script = (reserved - 1) as u32;
    for (i, f) in funs.iter().enumerate() {
        let code = Gen::new(p, faults, &mut m).function(f)?;
        m.codes[i] = code;
    }
    for (i, c) in classes.iter().enumerate() {
        let code = Gen::new(p, faults, &mut m).init(c)?;
        m.codes[funs.len() + i] = code;
    }
    let code = Gen::new(p, faults, &mut m).script()?;
    m.codes[reserved - 1] = code;
    Ok(m)
}

struct Gen<'a, 't> {
    p: &'a Program<'t>,
    faults: FaultSet,
    m: &'a mut Module,
    code: Code,
    scopes: Vec<Vec<(Rc<str>, Slot16)>>,
}

fn argc(n: usize) -> C<u8> {
    u8::try_from(n).map_err(|_| internal("codegen/argc"))
}

fn contains_ctor_property(n: &Node) -> bool {
    let mut hit = false;
    n.walk(&mut |x| {
        hit |= x.kind == NodeKind::MemberAccess && x.children[0].kind == NodeKind::ConstructorCall;
    });
    hit
}

impl<'a, 't> Gen<'a, 't> {
    fn new(p: &'a Program<'t>, faults: FaultSet, m: &'a mut Module) -> Self {
        Gen {
            p,
            faults,
            m,
            code: Code::default(),
            scopes: Vec::new(),
        }
    }

    fn emit(&mut self, op: Op) -> usize {
        self.code.ops.push(op);
        self.code.ops.len() - 1
    }

    fn here(&self) -> u32 {
        self.code.ops.len() as u32
    }

    fn patch(&mut self, at: usize, target: u32) {
        match &mut self.code.ops[at] {
            Op::Jump(t) | Op::JumpIfFalse(t) | Op::JumpIfPresent(_, t) | Op::IterNext(_, _, t) => *t = target,
            _ => {}
        }
    }

    fn slot(&mut self) -> C<Slot16> {
        let s = Slot16::try_from(self.code.slots).map_err(|_| internal("codegen/slots"))?;
        self.code.slots += 1;
        Ok(s)
    }

    fn declare(&mut self, name: &str) -> C<Slot16> {
        let s = self.slot()?;
        if self.scopes.is_empty() {
            self.scopes.push(Vec::new());
        }
        self.scopes.last_mut().unwrap().push((Rc::from(name), s));
        Ok(s)
    }

    fn lookup(&self, name: &str) -> Option<Slot16> {
        self.scopes.iter().rev().find_map(|s| s.iter().rev().find(|(n, _)| &**n == name).map(|(_, v)| *v))
    }

    fn event(&mut self, block: String) {
        let mut seen = HashSet::new();
        let mut vars = Vec::new();
        for s in self.scopes.iter().rev() {
            for (n, v) in s.iter().rev() {
                if seen.insert(n.clone()) {
                    vars.push((n.clone(), *v));
                }
            }
        }
        vars.reverse();
        self.m.sites.push(Site { block, vars });
        let id = (self.m.sites.len() - 1) as u32;
        self.emit(Op::Event(id));
    }

    fn finish(mut self) -> Code {
        self.emit(Op::Const(Value::Unit));
        self.emit(Op::Return);
        self.code
    }

    // ---- units ------------------------------------------------------------

    fn params(&mut self, ps: &[&Node]) -> C<()> {
        self.scopes.push(Vec::new());
        let slots: Vec<Slot16> = ps.iter().map(|p| self.declare(&p.text)).collect::<C<_>>()?;
        for (p, s) in ps.iter().zip(slots) {
            if let Some(d) = p.initializer() {
                let j = self.emit(Op::JumpIfPresent(s, 0));
                self.expr(d)?;
                self.emit(Op::Store(s));
                let h = self.here();
                self.patch(j, h);
            }
        }
        Ok(())
    }

    fn function(mut self, f: &Node) -> C<Code> {
        let ps: Vec<&Node> = f.params().collect();
        self.params(&ps)?;
        self.event(format!("f{}", f.id));
        match f.fun_body() {
            Some(b) if b.kind == NodeKind::Block => self.block(b)?,
            Some(e) => {
                self.expr(e)?;
                self.emit(Op::Return);
            }
            None => return Err(internal("codegen/no_body")),
        }
        Ok(self.finish())
    }

    fn init(mut self, c: &Node) -> C<Code> {
        let ps: Vec<&Node> = c.params().collect();
        self.params(&ps)?;
        self.event(format!("f{}", c.id));
        if let Some(sc) = c.superclass_call() {
            if self.p.class_node(&sc.text).is_some() {
                let n = self.call_args(sc, sc.id, Role::Main)?;
                self.emit(Op::InitSuper { class: Rc::from(sc.text.as_str()), argc: argc(n)? });
            }
        }
        for p in &ps {
            if p.mods.has(Modifiers::VAL) || p.mods.has(Modifiers::VAR) {
                let s = self.lookup(&p.text).ok_or_else(|| internal("codegen/ctor_param"))?;
                self.emit(Op::LoadThis);
                self.emit(Op::Load(s));
                self.emit(Op::SetField(Rc::from(p.text.as_str())));
            }
        }
        for m in c.members().filter(|m| m.kind == NodeKind::PropertyDecl) {
            if let Some(e) = m.initializer() {
                self.emit(Op::LoadThis);
                self.expr(e)?;
                self.emit(Op::SetField(Rc::from(m.text.as_str())));
            }
        }
        Ok(self.finish())
    }

    fn script(mut self) -> C<Code> {
        self.event("f0".into());
        for item in self.p.tree.items() {
            match item.kind {
                NodeKind::ClassDecl | NodeKind::InterfaceDecl | NodeKind::FunDecl => {}
                NodeKind::VarDecl => {
                    let init = item.initializer().ok_or_else(|| internal("codegen/global"))?;
                    self.expr(init)?;
                    self.emit(Op::StoreGlobal(Rc::from(item.text.as_str())));
                }
                _ => self.stmt(item)?,
            }
        }
        if let Some(main) = self.p.main {
            let code = *self.m.funs.get(&main).ok_or_else(|| internal("codegen/main"))?;
            self.emit(Op::Call(code, 0));
            self.emit(Op::Pop);
        }
        Ok(self.finish())
    }

    // ---- statements -------------------------------------------------------

    fn block(&mut self, b: &Node) -> C<()> {
        self.scopes.push(Vec::new());
        self.event(format!("b{}", b.id));
        for s in &b.children {
            self.stmt(s)?;
        }
        self.scopes.pop();
        Ok(())
    }

    fn stmt(&mut self, s: &Node) -> C<()> {
        match s.kind {
            NodeKind::VarDecl => {
                let init = s.initializer().ok_or_else(|| internal("codegen/local"))?;
                self.expr(init)?;
                let slot = self.declare(&s.text)?;
                self.emit(Op::Store(slot));
            }
            NodeKind::Assign => self.assign(s)?,
            NodeKind::While => {
                let top = self.here();
                self.expr(&s.children[0])?;
                let exit = self.emit(Op::JumpIfFalse(0));
                self.block(&s.children[1])?;
                self.emit(Op::Jump(top));
                let h = self.here();
                self.patch(exit, h);
                self.event(format!("j{}", s.id));
            }
            NodeKind::If => {
                self.expr(&s.children[0])?;
                let to_else = self.emit(Op::JumpIfFalse(0));
                self.block(&s.children[1])?;
                let to_end = self.emit(Op::Jump(0));
                let h = self.here();
                self.patch(to_else, h);
                match s.children.get(2) {
                    Some(e) if e.kind == NodeKind::If => self.stmt(e)?,
                    Some(e) => self.block(e)?,
                    None => {}
                }
                let h = self.here();
                self.patch(to_end, h);
                self.event(format!("j{}", s.id));
            }
            NodeKind::For => self.for_loop(s)?,
            NodeKind::Return => {
                match s.children.first() {
                    Some(e) => self.expr(e)?,
                    None => {
                        self.emit(Op::Const(Value::Unit));
                    }
                }
                self.emit(Op::Return);
            }
            NodeKind::Block => self.block(s)?,
            _ => {
                self.expr(s)?;
                self.emit(Op::Pop);
            }
        }
        Ok(())
    }

    fn is_int_until(&self, e: &Node) -> bool {
        e.kind == NodeKind::RangeExpr
            && e.text == "until"
            && matches!(self.p.a.res.get(&e.id), Some(Res::Method { owner, .. }) if owner == "Int")
    }

    fn for_loop(&mut self, s: &Node) -> C<()> {
        let it = &s.children[0];
        if self.is_int_until(it) {
            let faulty = self.faults.has(Fault::RangeUntilLoop)
                && !matches!(it.children[0].kind, NodeKind::IntLit | NodeKind::NameRef);
            self.expr(&it.children[0])?;
            let i = self.slot()?;
            self.emit(Op::Store(i));
            self.expr(&it.children[1])?;
            let end = self.slot()?;
            self.emit(Op::Store(end));
            let top = self.here();
            self.emit(Op::Load(i));
            self.emit(Op::Load(end));
            self.emit(if faulty { Op::IntNe } else { Op::IntLt });
            let exit = self.emit(Op::JumpIfFalse(0));
            self.scopes.push(vec![(Rc::from(s.text.as_str()), i)]);
            self.block(&s.children[1])?;
            self.scopes.pop();
            self.emit(Op::Inc(i));
            self.emit(Op::Jump(top));
            let h = self.here();
            self.patch(exit, h);
        } else {
            self.expr(it)?;
            let c = u16::try_from(self.code.cursors).map_err(|_| internal("codegen/cursors"))?;
            self.code.cursors += 1;
            self.emit(Op::IterStart(c));
            let v = self.slot()?;
            let top = self.here();
            let exit = self.emit(Op::IterNext(v, c, 0));
            self.scopes.push(vec![(Rc::from(s.text.as_str()), v)]);
            self.block(&s.children[1])?;
            self.scopes.pop();
            self.emit(Op::Jump(top));
            let h = self.here();
            self.patch(exit, h);
        }
        self.event(format!("j{}", s.id));
        Ok(())
    }

    fn method_op(&self, res: Option<&Res>, argc_: usize) -> C<Op> {
        match res {
            Some(Res::Method { name, decl, .. }) => {
                Ok(Op::Invoke { name: Rc::from(name.as_str()), decl: *decl, argc: argc(argc_)? })
            }
            _ => Err(internal("codegen/method")),
        }
    }

    fn assign(&mut self, s: &Node) -> C<()> {
        let (target, value) = (&s.children[0], &s.children[1]);
        match target.kind {
            NodeKind::Index => {
                self.expr(&target.children[0])?;
                let r = self.slot()?;
                self.emit(Op::Store(r));
                let mut tmps = Vec::new();
                for i in &target.children[1..] {
                    self.expr(i)?;
                    let t = self.slot()?;
                    self.emit(Op::Store(t));
                    tmps.push(t);
                }
                let (key, role) = if s.text == "=" {
                    self.expr(value)?;
                    (target.id, Role::Main)
                } else {
                    self.emit(Op::Load(r));
                    let get_faulty = self.default_fault(&target.children[0], self.p.a.res.get(&target.id));
                    let n = self.emit_slots(&tmps, target.id, Role::Main, get_faulty)?;
                    let get = self.method_op(self.p.a.res.get(&target.id), n)?;
                    self.emit(get);
                    self.expr(value)?;
                    self.compound_op(s)?;
                    (s.id, Role::Set)
                };
                let v = self.slot()?;
                self.emit(Op::Store(v));
                tmps.push(v);
                self.emit(Op::Load(r));
                let set_res = self.p.a.role_res.get(&(key, role));
                let faulty = role == Role::Main && self.default_fault(&target.children[0], set_res);
                let n = self.emit_slots(&tmps, key, role, faulty)?;
                let set = self.method_op(set_res, n)?;
                self.emit(set);
                self.emit(Op::Pop);
            }
            NodeKind::MemberAccess => {
                self.expr(&target.children[0])?;
                if s.text == "=" {
                    self.expr(value)?;
                } else {
                    let r = self.slot()?;
                    self.emit(Op::Store(r));
                    self.emit(Op::Load(r));
                    self.emit(Op::Load(r));
                    self.emit(Op::GetField(Rc::from(target.text.as_str())));
                    self.expr(value)?;
                    self.compound_op(s)?;
                }
                self.emit(Op::SetField(Rc::from(target.text.as_str())));
            }
            NodeKind::NameRef => {
                let prop = matches!(self.p.a.res.get(&target.id), Some(Res::Var { kind: VarKind::Property { .. }, .. }));
                if prop {
                    self.emit(Op::LoadThis);
                }
                if s.text == "=" {
                    self.expr(value)?;
                } else {
                    self.expr(target)?;
                    self.expr(value)?;
                    self.compound_op(s)?;
                }
                self.write_var(target, prop)?;
            }
            _ => return Err(internal("codegen/assign_target")),
        }
        Ok(())
    }

    /// With `old` and `rhs` on the stack, applies the compound operator.
    fn compound_op(&mut self, s: &Node) -> C<()> {
        let t = self.slot()?;
        self.emit(Op::Store(t));
        let n = self.emit_slots(&[t], s.id, Role::Op, false)?;
        let op = self.method_op(self.p.a.role_res.get(&(s.id, Role::Op)), n)?;
        self.emit(op);
        Ok(())
    }

    fn write_var(&mut self, target: &Node, prop: bool) -> C<()> {
        let name: Rc<str> = Rc::from(target.text.as_str());
        match self.p.a.res.get(&target.id) {
            Some(Res::Var { kind: VarKind::Global, .. }) => {
                self.emit(Op::StoreGlobal(name));
            }
            _ if prop => {
                self.emit(Op::SetField(name));
            }
            _ => {
                let s = self.lookup(&target.text).ok_or_else(|| internal("codegen/local_write"))?;
                self.emit(Op::Store(s));
            }
        }
        Ok(())
    }

    // ---- calls ------------------------------------------------------------

    /// Whether the defaulted-operator fault applies to an indexed call.
    fn default_fault(&self, recv: &Node, res: Option<&Res>) -> bool {
        self.faults.has(Fault::DefaultArgOperator)
            && recv.kind == NodeKind::ConstructorCall
            && matches!(res, Some(Res::Method { owner, .. }) if self.p.a.env.class(owner).is_some_and(|c| !c.std))
    }

    /// Pushes parameter values for `(key, role)` from argument temporaries.
    fn emit_slots(&mut self, tmps: &[Slot16], key: NodeId, role: Role, first_for_default: bool) -> C<usize> {
        let slots: Vec<Slot> = match self.p.a.binding(key, role) {
            Some(s) => s.to_vec(),
            None => (0..tmps.len()).map(Slot::Arg).collect(),
        };
        self.push_slots(tmps, &slots, first_for_default)
    }

    fn push_slots(&mut self, tmps: &[Slot16], slots: &[Slot], first_for_default: bool) -> C<usize> {
        for s in slots {
            match s {
                Slot::Arg(i) => {
                    let t = *tmps.get(*i).ok_or_else(|| internal("codegen/arg"))?;
                    self.emit(Op::Load(t));
                }
                Slot::Default => match tmps.first() {
                    Some(t) if first_for_default => {
                        self.emit(Op::Load(*t));
                    }
                    _ => {
                        self.emit(Op::Absent);
                    }
                },
                Slot::Vararg(is) => {
                    for i in is {
                        let t = *tmps.get(*i).ok_or_else(|| internal("codegen/vararg"))?;
                        self.emit(Op::Load(t));
                    }
                    self.emit(Op::MakeList(is.len() as u16));
                }
            }
        }
        Ok(slots.len())
    }

    fn arg_temps(&mut self, call: &Node) -> C<Vec<Slot16>> {
        let mut tmps = Vec::new();
        for a in call.call_args() {
            let e = if a.kind == NodeKind::NamedArg { a.children.first().ok_or_else(|| internal("codegen/named"))? } else { a };
            if self.faults.has(Fault::FunrefArg) && e.kind == NodeKind::FunRef {
                return Err(Crash { phase: Phase::Backend, kind: "assertion", location: "codegen/call_args/funref" });
            }
            self.expr(e)?;
            let t = self.slot()?;
            self.emit(Op::Store(t));
            tmps.push(t);
        }
        Ok(tmps)
    }

    fn call_args(&mut self, call: &Node, key: NodeId, role: Role) -> C<usize> {
        let tmps = self.arg_temps(call)?;
        self.emit_slots(&tmps, key, role, false)
    }

    fn ctor_call(&mut self, n: &Node) -> C<()> {
        let tmps = self.arg_temps(n)?;
        let subclass = self
            .p
            .class_node(&n.text)
            .and_then(|c| c.superclass_call())
            .is_some_and(|sc| self.p.class_node(&sc.text).is_some());
        let named = n.call_args().any(|a| a.kind == NodeKind::NamedArg);
        let count = if self.faults.has(Fault::NamedArgSuper) && subclass && named {
            let params = self.p.a.binding(n.id, Role::Main).map_or(tmps.len(), |s| s.len());
            let slots: Vec<Slot> =
                (0..params).map(|i| if i < tmps.len() { Slot::Arg(i) } else { Slot::Default }).collect();
            self.push_slots(&tmps, &slots, false)?
        } else {
            self.emit_slots(&tmps, n.id, Role::Main, false)?
        };
        self.emit(Op::New { class: Rc::from(n.text.as_str()), argc: argc(count)? });
        Ok(())
    }

    // ---- expressions ------------------------------------------------------

    fn load_var(&mut self, n: &Node, res: Option<&Res>) -> C<()> {
        let name: Rc<str> = Rc::from(n.text.as_str());
        match res {
            Some(Res::Var { kind: VarKind::Global, .. } | Res::CallValue { kind: VarKind::Global, .. }) => {
                self.emit(Op::LoadGlobal(name));
            }
            Some(Res::Var { kind: VarKind::Property { .. }, .. } | Res::CallValue { kind: VarKind::Property { .. }, .. }) => {
                self.emit(Op::LoadThis);
                self.emit(Op::GetField(name));
            }
            _ => {
                let s = self.lookup(&n.text).ok_or_else(|| internal("codegen/local_read"))?;
                self.emit(Op::Load(s));
            }
        }
        Ok(())
    }

    fn operator(&mut self, n: &Node) -> C<()> {
        self.expr(&n.children[0])?;
        self.expr(&n.children[1])?;
        let t = self.slot()?;
        self.emit(Op::Store(t));
        let k = self.emit_slots(&[t], n.id, Role::Main, false)?;
        let op = self.method_op(self.p.a.res.get(&n.id), k)?;
        self.emit(op);
        Ok(())
    }

    fn expr(&mut self, n: &Node) -> C<()> {
        let lit = |r: Result<Value, ()>| r.map_err(|_| internal("codegen/literal"));
        match n.kind {
            NodeKind::IntLit => {
                let v = lit(n.text.parse().map(Value::Int).map_err(drop))?;
                self.emit(Op::Const(v));
            }
            NodeKind::LongLit => {
                let v = lit(n.text.parse().map(Value::Long).map_err(drop))?;
                self.emit(Op::Const(v));
            }
            NodeKind::DoubleLit => {
                let v = lit(n.text.parse().map(Value::Double).map_err(drop))?;
                self.emit(Op::Const(v));
            }
            NodeKind::BoolLit => {
                self.emit(Op::Const(Value::Bool(n.text == "true")));
            }
            NodeKind::StringLit => {
                self.emit(Op::Const(Value::str(&n.text)));
            }
            NodeKind::NameRef => self.load_var(n, self.p.a.res.get(&n.id))?,
            NodeKind::FunRef => match self.p.a.res.get(&n.id) {
                Some(Res::Fun(id)) => {
                    self.emit(Op::Const(Value::Func(*id)));
                }
                _ => return Err(internal("codegen/funref")),
            },
            NodeKind::Call => {
                let res = self.p.a.res.get(&n.id).cloned().ok_or_else(|| internal("codegen/call"))?;
                match &res {
                    Res::CallValue { .. } => {
                        self.load_var(n, Some(&res))?;
                        let k = self.call_args(n, n.id, Role::Main)?;
                        self.emit(Op::CallDyn(argc(k)?));
                    }
                    Res::Fun(id) => {
                        let k = self.call_args(n, n.id, Role::Main)?;
                        let code = self.p.user_fun(*id).and_then(|d| self.m.funs.get(&d.id)).copied();
                        match code {
                            Some(code) => self.emit(Op::Call(code, argc(k)?)),
                            None => self.emit(Op::CallNative(*id, argc(k)?)),
                        };
                    }
                    Res::Method { .. } => {
                        self.emit(Op::LoadThis);
                        let k = self.call_args(n, n.id, Role::Main)?;
                        let op = self.method_op(Some(&res), k)?;
                        self.emit(op);
                    }
                    _ => return Err(internal("codegen/call")),
                }
            }
            NodeKind::MethodCall => {
                self.expr(&n.children[0])?;
                let k = self.call_args(n, n.id, Role::Main)?;
                let op = self.method_op(self.p.a.res.get(&n.id), k)?;
                self.emit(op);
            }
            NodeKind::ConstructorCall => self.ctor_call(n)?,
            NodeKind::MemberAccess => {
                let recv = &n.children[0];
                if self.faults.has(Fault::NestedAccessor)
                    && recv.kind == NodeKind::ConstructorCall
                    && recv.call_args().any(contains_ctor_property)
                {
                    return Err(Crash {
                        phase: Phase::Backend,
                        kind: "assertion",
                        location: "codegen/member_access/receiver_temp",
                    });
                }
                self.expr(recv)?;
                self.emit(Op::GetProp(Rc::from(n.text.as_str())));
            }
            NodeKind::Index => {
                self.expr(&n.children[0])?;
                let mut tmps = Vec::new();
                for i in &n.children[1..] {
                    self.expr(i)?;
                    let t = self.slot()?;
                    self.emit(Op::Store(t));
                    tmps.push(t);
                }
                let faulty = self.default_fault(&n.children[0], self.p.a.res.get(&n.id));
                let k = self.emit_slots(&tmps, n.id, Role::Main, faulty)?;
                let op = self.method_op(self.p.a.res.get(&n.id), k)?;
                self.emit(op);
            }
            NodeKind::BinaryOp => match n.text.as_str() {
                "&&" => {
                    self.expr(&n.children[0])?;
                    let f = self.emit(Op::JumpIfFalse(0));
                    self.expr(&n.children[1])?;
                    let end = self.emit(Op::Jump(0));
                    let h = self.here();
                    self.patch(f, h);
                    self.emit(Op::Const(Value::Bool(false)));
                    let h = self.here();
                    self.patch(end, h);
                }
                "||" => {
                    self.expr(&n.children[0])?;
                    let f = self.emit(Op::JumpIfFalse(0));
                    self.emit(Op::Const(Value::Bool(true)));
                    let end = self.emit(Op::Jump(0));
                    let h = self.here();
                    self.patch(f, h);
                    self.expr(&n.children[1])?;
                    let h = self.here();
                    self.patch(end, h);
                }
                "==" | "!=" => {
                    self.expr(&n.children[0])?;
                    self.expr(&n.children[1])?;
                    self.emit(if n.text == "==" { Op::Eq } else { Op::Ne });
                }
                op @ ("<" | ">" | "<=" | ">=") => {
                    let c = match op {
                        "<" => CmpOp::Lt,
                        ">" => CmpOp::Gt,
                        "<=" => CmpOp::Le,
                        _ => CmpOp::Ge,
                    };
                    self.operator(n)?;
                    self.emit(Op::Cmp(c));
                }
                _ => self.operator(n)?,
            },
            NodeKind::RangeExpr => self.operator(n)?,
            NodeKind::UnaryOp => {
                self.expr(&n.children[0])?;
                if n.text == "!" {
                    self.emit(Op::Not);
                } else {
                    let op = self.method_op(self.p.a.res.get(&n.id), 0)?;
                    self.emit(op);
                }
            }
            _ => return Err(internal("codegen/expr")),
        }
        Ok(())
    }
}
