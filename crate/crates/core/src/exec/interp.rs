//! Reference backend: walks the checked syntax tree.

use std::collections::HashMap;
use std::rc::Rc;

use super::native::{self, Cursor, RtError, RtKind};
use super::program::Program;
use super::trace::{ExecutionResult, Limits, Meter, Stop, END_BLOCK};
use super::value::{equals, Object, Value};
use crate::lang::{Modifiers, Node, NodeKind};
use crate::types::{Res, Role, Slot, VarKind};

type R<T> = Result<T, Stop>;

fn fail(kind: RtKind, msg: impl Into<String>) -> Stop {
    Stop::Error(RtError::new(kind, msg))
}

fn confused(what: &str) -> Stop {
    fail(RtKind::TypeConfusion, format!("unexpected value in {what}"))
}

#[derive(Default)]
pub(crate) struct Frame {
    scopes: Vec<Vec<(Rc<str>, Value)>>,
    this: Option<Rc<Object>>,
}

impl Frame {
    fn lookup(&self, name: &str) -> Option<&Value> {
        self.scopes.iter().rev().find_map(|s| s.iter().rev().find(|(n, _)| &**n == name).map(|(_, v)| v))
    }

    fn assign(&mut self, name: &str, v: Value) -> bool {
        for s in self.scopes.iter_mut().rev() {
            if let Some(slot) = s.iter_mut().rev().find(|(n, _)| &**n == name) {
                slot.1 = v;
                return true;
            }
        }
        false
    }

    fn declare(&mut self, name: &str, v: Value) {
        if self.scopes.is_empty() {
            self.scopes.push(Vec::new());
        }
        self.scopes.last_mut().unwrap().push((Rc::from(name), v));
    }

    /// Innermost binding of each name, outermost first.
    fn visible(&self) -> Vec<(&str, &Value)> {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        for s in self.scopes.iter().rev() {
            for (n, v) in s.iter().rev() {
                if seen.insert(&**n) {
                    out.push((&**n, v));
                }
            }
        }
        out.reverse();
        out
    }
}

enum Flow {
    Normal,
    Return(Value),
}

pub struct Interp<'p, 't> {
    p: &'p Program<'t>,
    m: Meter,
    globals: HashMap<Rc<str>, Value>,
}

/// Runs a checked program on the tree interpreter.
pub fn run(p: &Program<'_>, limits: &Limits) -> ExecutionResult {
    let mut it = Interp { p, m: Meter::new(limits), globals: HashMap::new() };
    let stop = it.script().err();
    it.m.finish(stop)
}

impl<'p, 't> Interp<'p, 't> {
    fn script(&mut self) -> R<()> {
        let mut f = Frame::default();
        self.m.event("f0", std::iter::empty())?;
        for item in self.p.tree.items() {
            match item.kind {
                NodeKind::ClassDecl | NodeKind::InterfaceDecl | NodeKind::FunDecl => {}
                NodeKind::VarDecl => {
                    let init = item.initializer().ok_or_else(|| confused("global"))?;
                    let v = self.expr(&mut f, init)?;
                    self.globals.insert(Rc::from(item.text.as_str()), v);
                }
                _ => {
                    if let Flow::Return(_) = self.stmt(&mut f, item)? {
                        return Ok(());
                    }
                }
            }
        }
        if let Some(main) = self.p.main.and_then(|m| self.p.decl(m)) {
            self.call_decl(main, None, Vec::new())?;
        }
        self.m.event(END_BLOCK, self.p.end_state(&self.globals))
    }

    // ---- calls ------------------------------------------------------------

    fn call_decl(&mut self, fun: &Node, this: Option<Rc<Object>>, args: Vec<Value>) -> R<Value> {
        self.m.enter()?;
        let mut f = Frame { scopes: vec![Vec::new()], this };
        for (p, v) in fun.params().zip(args) {
            let v = if v.is_absent() {
                let d = p.initializer().ok_or_else(|| confused("default"))?;
                self.expr(&mut f, d)?
            } else {
                v
            };
            f.declare(&p.text, v);
        }
        self.m.event(&format!("f{}", fun.id), f.visible().into_iter())?;
        let out = match fun.fun_body() {
            Some(b) if b.kind == NodeKind::Block => match self.block(&mut f, b)? {
                Flow::Return(v) => v,
                Flow::Normal => Value::Unit,
            },
            Some(e) => self.expr(&mut f, e)?,
            None => return Err(fail(RtKind::Unsupported, format!("{} has no body", fun.text))),
        };
        self.m.leave();
        Ok(out)
    }

    /// Evaluates the value arguments of `call` and lays them out by the
    /// slots recorded for `(key, role)`.
    fn call_args(&mut self, f: &mut Frame, call: &Node, key: u32, role: Role) -> R<Vec<Value>> {
        let mut vals = Vec::new();
        for a in call.call_args() {
            let e = if a.kind == NodeKind::NamedArg { a.children.first().ok_or_else(|| confused("arg"))? } else { a };
            vals.push(self.expr(f, e)?);
        }
        self.lay_out(vals, key, role)
    }

    fn lay_out(&self, vals: Vec<Value>, key: u32, role: Role) -> R<Vec<Value>> {
        let Some(slots) = self.p.a.binding(key, role) else { return Ok(vals) };
        Ok(slots
            .iter()
            .map(|s| match s {
                Slot::Arg(i) => vals.get(*i).cloned().unwrap_or(Value::Unit),
                Slot::Default => Value::Absent,
                Slot::Vararg(is) => Value::list(false, is.iter().filter_map(|i| vals.get(*i).cloned()).collect()),
            })
            .collect())
    }

    fn invoke(&mut self, recv: Value, res: &Res, args: Vec<Value>) -> R<Value> {
        let Res::Method { name, decl, .. } = res else { return Err(confused("method")) };
        if let Value::Obj(o) = &recv {
            if let Some(body) = self.p.resolve_method(&o.class, *decl) {
                return self.call_decl(body, Some(o.clone()), args);
            }
        }
        Ok(native::method(&recv, name, &args)?)
    }

    fn call_fun(&mut self, id: usize, args: Vec<Value>) -> R<Value> {
        if let Some(d) = self.p.user_fun(id) {
            return self.call_decl(d, None, args);
        }
        let mut lines = Vec::new();
        let r = native::function(self.p.fun_name(id), &args, &mut |s| lines.push(s));
        for l in lines {
            self.m.print(l)?;
        }
        Ok(r?)
    }

    fn construct(&mut self, class: &str, args: Vec<Value>) -> R<Value> {
        let Some(cls) = self.p.class_node(class) else { return Ok(native::construct(class, &args)?) };
        let obj = Rc::new(Object {
            class: Rc::from(class),
            decl: cls.id,
            fields: std::cell::RefCell::new(self.p.layout(class).iter().map(|n| (n.clone(), None)).collect()),
        });
        self.init(cls, &obj, args)?;
        Ok(Value::Obj(obj))
    }

    fn init(&mut self, cls: &Node, obj: &Rc<Object>, args: Vec<Value>) -> R<()> {
        self.m.enter()?;
        let mut f = Frame { scopes: vec![Vec::new()], this: Some(obj.clone()) };
        for (p, v) in cls.params().zip(args) {
            let v = if v.is_absent() {
                let d = p.initializer().ok_or_else(|| confused("default"))?;
                self.expr(&mut f, d)?
            } else {
                v
            };
            f.declare(&p.text, v);
        }
        self.m.event(&format!("f{}", cls.id), f.visible().into_iter())?;
        if let Some(sc) = cls.superclass_call() {
            if let Some(sup) = self.p.class_node(&sc.text) {
                let sargs = self.call_args(&mut f, sc, sc.id, Role::Main)?;
                self.init(sup, obj, sargs)?;
            }
        }
        for p in cls.params() {
            if p.mods.has(Modifiers::VAL) || p.mods.has(Modifiers::VAR) {
                let v = f.lookup(&p.text).cloned().unwrap_or(Value::Unit);
                obj.set(&p.text, v);
            }
        }
        for m in cls.members().filter(|m| m.kind == NodeKind::PropertyDecl) {
            if let Some(e) = m.initializer() {
                let v = self.expr(&mut f, e)?;
                obj.set(&m.text, v);
            }
        }
        self.m.leave();
        Ok(())
    }

    // ---- statements -------------------------------------------------------

    fn block(&mut self, f: &mut Frame, b: &Node) -> R<Flow> {
        f.scopes.push(Vec::new());
        let r = self.block_body(f, b);
        f.scopes.pop();
        r
    }

    fn block_body(&mut self, f: &mut Frame, b: &Node) -> R<Flow> {
        self.m.event(&format!("b{}", b.id), f.visible().into_iter())?;
        for s in &b.children {
            if let Flow::Return(v) = self.stmt(f, s)? {
                return Ok(Flow::Return(v));
            }
        }
        Ok(Flow::Normal)
    }

    fn join(&mut self, f: &Frame, s: &Node) -> R<()> {
        self.m.event(&format!("j{}", s.id), f.visible().into_iter())
    }

    fn stmt(&mut self, f: &mut Frame, s: &Node) -> R<Flow> {
        match s.kind {
            NodeKind::VarDecl => {
                let init = s.initializer().ok_or_else(|| confused("local"))?;
                let v = self.expr(f, init)?;
                f.declare(&s.text, v);
            }
            NodeKind::Assign => self.assign(f, s)?,
            NodeKind::While => {
                loop {
                    if !self.cond(f, &s.children[0])? {
                        break;
                    }
                    if let Flow::Return(v) = self.block(f, &s.children[1])? {
                        return Ok(Flow::Return(v));
                    }
                }
                self.join(f, s)?;
            }
            NodeKind::If => {
                let taken = if self.cond(f, &s.children[0])? {
                    self.block(f, &s.children[1])?
                } else {
                    match s.children.get(2) {
                        Some(e) if e.kind == NodeKind::If => self.stmt(f, e)?,
                        Some(e) => self.block(f, e)?,
                        None => Flow::Normal,
                    }
                };
                if let Flow::Return(v) = taken {
                    return Ok(Flow::Return(v));
                }
                self.join(f, s)?;
            }
            NodeKind::For => {
                let it = self.expr(f, &s.children[0])?;
                let mut cur = Cursor::over(&it)?;
                while let Some(x) = cur.next_value() {
                    f.scopes.push(vec![(Rc::from(s.text.as_str()), x)]);
                    let r = self.block(f, &s.children[1]);
                    f.scopes.pop();
                    if let Flow::Return(v) = r? {
                        return Ok(Flow::Return(v));
                    }
                }
                self.join(f, s)?;
            }
            NodeKind::Return => {
                let v = match s.children.first() {
                    Some(e) => self.expr(f, e)?,
                    None => Value::Unit,
                };
                return Ok(Flow::Return(v));
            }
            NodeKind::Block => return self.block(f, s),
            _ => {
                self.expr(f, s)?;
            }
        }
        Ok(Flow::Normal)
    }

    fn cond(&mut self, f: &mut Frame, c: &Node) -> R<bool> {
        match self.expr(f, c)? {
            Value::Bool(b) => Ok(b),
            _ => Err(confused("condition")),
        }
    }

    fn assign(&mut self, f: &mut Frame, s: &Node) -> R<()> {
        let (target, value) = (&s.children[0], &s.children[1]);
        match target.kind {
            NodeKind::Index => {
                let recv = self.expr(f, &target.children[0])?;
                let mut idx = Vec::new();
                for i in &target.children[1..] {
                    idx.push(self.expr(f, i)?);
                }
                let (v, key, role) = if s.text == "=" {
                    (self.expr(f, value)?, target.id, Role::Main)
                } else {
                    let get = self.p.a.res.get(&target.id).cloned().ok_or_else(|| confused("get"))?;
                    let gargs = self.lay_out(idx.clone(), target.id, Role::Main)?;
                    let old = self.invoke(recv.clone(), &get, gargs)?;
                    let rhs = self.expr(f, value)?;
                    let v = self.compound(old, rhs, s)?;
                    (v, s.id, Role::Set)
                };
                let set = self.p.a.role_res.get(&(key, role)).cloned().ok_or_else(|| confused("set"))?;
                idx.push(v);
                let sargs = self.lay_out(idx, key, role)?;
                self.invoke(recv, &set, sargs)?;
            }
            NodeKind::MemberAccess => {
                let recv = self.expr(f, &target.children[0])?;
                let Value::Obj(o) = &recv else { return Err(confused("property write")) };
                let v = if s.text == "=" {
                    self.expr(f, value)?
                } else {
                    let old = read_field(o, &target.text)?;
                    let rhs = self.expr(f, value)?;
                    self.compound(old, rhs, s)?
                };
                o.set(&target.text, v);
            }
            NodeKind::NameRef => {
                let v = if s.text == "=" {
                    self.expr(f, value)?
                } else {
                    let old = self.expr(f, target)?;
                    let rhs = self.expr(f, value)?;
                    self.compound(old, rhs, s)?
                };
                self.write_var(f, target, v)?;
            }
            _ => return Err(confused("assignment target")),
        }
        Ok(())
    }

    fn compound(&mut self, old: Value, rhs: Value, s: &Node) -> R<Value> {
        let op = self.p.a.role_res.get(&(s.id, Role::Op)).cloned().ok_or_else(|| confused("compound op"))?;
        let args = self.lay_out(vec![rhs], s.id, Role::Op)?;
        self.invoke(old, &op, args)
    }

    fn write_var(&mut self, f: &mut Frame, target: &Node, v: Value) -> R<()> {
        match self.p.a.res.get(&target.id) {
            Some(Res::Var { kind: VarKind::Global, .. }) => {
                self.globals.insert(Rc::from(target.text.as_str()), v);
                Ok(())
            }
            Some(Res::Var { kind: VarKind::Property { .. }, .. }) => {
                let o = f.this.as_ref().ok_or_else(|| confused("this"))?;
                o.set(&target.text, v);
                Ok(())
            }
            _ => {
                if f.assign(&target.text, v) {
                    Ok(())
                } else {
                    Err(confused("local write"))
                }
            }
        }
    }

    // ---- expressions ------------------------------------------------------

    fn expr(&mut self, f: &mut Frame, n: &Node) -> R<Value> {
        match n.kind {
            NodeKind::IntLit => n.text.parse().map(Value::Int).map_err(|_| confused("literal")),
            NodeKind::LongLit => n.text.parse().map(Value::Long).map_err(|_| confused("literal")),
            NodeKind::DoubleLit => n.text.parse().map(Value::Double).map_err(|_| confused("literal")),
            NodeKind::BoolLit => Ok(Value::Bool(n.text == "true")),
            NodeKind::StringLit => Ok(Value::str(&n.text)),
            NodeKind::NameRef => self.read_var(f, n),
            NodeKind::FunRef => match self.p.a.res.get(&n.id) {
                Some(Res::Fun(id)) => Ok(Value::Func(*id)),
                _ => Err(confused("function reference")),
            },
            NodeKind::Call => {
                let res = self.p.a.res.get(&n.id).cloned().ok_or_else(|| confused("call"))?;
                match res {
                    Res::CallValue { .. } => {
                        let callee = self.read_named(f, &n.text, n)?;
                        let args = self.call_args(f, n, n.id, Role::Main)?;
                        match callee {
                            Value::Func(id) => self.call_fun(id, args),
                            _ => Err(confused("function value")),
                        }
                    }
                    Res::Fun(id) => {
                        let args = self.call_args(f, n, n.id, Role::Main)?;
                        self.call_fun(id, args)
                    }
                    Res::Method { .. } => {
                        let this = f.this.clone().ok_or_else(|| confused("implicit receiver"))?;
                        let args = self.call_args(f, n, n.id, Role::Main)?;
                        self.invoke(Value::Obj(this), &res, args)
                    }
                    _ => Err(confused("call")),
                }
            }
            NodeKind::MethodCall => {
                let recv = self.expr(f, &n.children[0])?;
                let res = self.p.a.res.get(&n.id).cloned().ok_or_else(|| confused("method call"))?;
                let args = self.call_args(f, n, n.id, Role::Main)?;
                self.invoke(recv, &res, args)
            }
            NodeKind::ConstructorCall => {
                let args = self.call_args(f, n, n.id, Role::Main)?;
                self.construct(&n.text, args)
            }
            NodeKind::MemberAccess => {
                let recv = self.expr(f, &n.children[0])?;
                match &recv {
                    Value::Obj(o) => read_field(o, &n.text),
                    _ => Ok(native::property(&recv, &n.text)?),
                }
            }
            NodeKind::Index => {
                let recv = self.expr(f, &n.children[0])?;
                let mut idx = Vec::new();
                for i in &n.children[1..] {
                    idx.push(self.expr(f, i)?);
                }
                let res = self.p.a.res.get(&n.id).cloned().ok_or_else(|| confused("index"))?;
                let args = self.lay_out(idx, n.id, Role::Main)?;
                self.invoke(recv, &res, args)
            }
            NodeKind::BinaryOp => self.binary(f, n),
            NodeKind::RangeExpr => {
                let l = self.expr(f, &n.children[0])?;
                let r = self.expr(f, &n.children[1])?;
                self.operator(n, l, r)
            }
            NodeKind::UnaryOp => {
                let v = self.expr(f, &n.children[0])?;
                if n.text == "!" {
                    return match v {
                        Value::Bool(b) => Ok(Value::Bool(!b)),
                        _ => Err(confused("!")),
                    };
                }
                let res = self.p.a.res.get(&n.id).cloned().ok_or_else(|| confused("unary"))?;
                self.invoke(v, &res, Vec::new())
            }
            _ => Err(fail(RtKind::Unsupported, format!("cannot evaluate {:?}", n.kind))),
        }
    }

    fn operator(&mut self, n: &Node, l: Value, r: Value) -> R<Value> {
        let res = self.p.a.res.get(&n.id).cloned().ok_or_else(|| confused("operator"))?;
        let args = self.lay_out(vec![r], n.id, Role::Main)?;
        self.invoke(l, &res, args)
    }

    fn binary(&mut self, f: &mut Frame, n: &Node) -> R<Value> {
        let op = n.text.as_str();
        if op == "&&" || op == "||" {
            let l = self.cond(f, &n.children[0])?;
            if l == (op == "||") {
                return Ok(Value::Bool(l));
            }
            return Ok(Value::Bool(self.cond(f, &n.children[1])?));
        }
        let l = self.expr(f, &n.children[0])?;
        let r = self.expr(f, &n.children[1])?;
        match op {
            "==" => Ok(Value::Bool(equals(&l, &r))),
            "!=" => Ok(Value::Bool(!equals(&l, &r))),
            "<" | ">" | "<=" | ">=" => {
                let Value::Int(c) = self.operator(n, l, r)? else { return Err(confused("compareTo")) };
                Ok(Value::Bool(compare_holds(op, c)))
            }
            _ => self.operator(n, l, r),
        }
    }

    fn read_var(&mut self, f: &mut Frame, n: &Node) -> R<Value> {
        self.read_named(f, &n.text, n)
    }

    fn read_named(&mut self, f: &mut Frame, name: &str, n: &Node) -> R<Value> {
        match self.p.a.res.get(&n.id) {
            Some(Res::Var { kind: VarKind::Global, .. } | Res::CallValue { kind: VarKind::Global, .. }) => {
                self.globals.get(name).cloned().ok_or_else(|| uninit(name))
            }
            Some(Res::Var { kind: VarKind::Property { .. }, .. } | Res::CallValue { kind: VarKind::Property { .. }, .. }) => {
                let o = f.this.as_ref().ok_or_else(|| confused("this"))?;
                read_field(o, name)
            }
            _ => f.lookup(name).cloned().ok_or_else(|| uninit(name)),
        }
    }
}

pub(crate) fn compare_holds(op: &str, c: i32) -> bool {
    match op {
        "<" => c < 0,
        ">" => c > 0,
        "<=" => c <= 0,
        _ => c >= 0,
    }
}

fn uninit(name: &str) -> Stop {
    fail(RtKind::Uninitialized, format!("{name} is not initialized"))
}

pub(crate) fn read_field(o: &Object, name: &str) -> R<Value> {
    match o.get(name) {
        Some(Some(v)) => Ok(v),
        Some(None) => Err(uninit(name)),
        None => Err(confused("field")),
    }
}
