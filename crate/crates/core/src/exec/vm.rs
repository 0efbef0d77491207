//! Stack machine for [`Module`] bytecode.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use super::compile::{CmpOp, Module, Op};
use super::interp::{compare_holds, read_field};
use super::native::{self, Cursor, RtError, RtKind};
use super::program::Program;
use super::trace::{ExecutionResult, Limits, Meter, Stop, END_BLOCK};
use super::value::{equals, Object, Value};

type R<T> = Result<T, Stop>;

fn confused(what: &str) -> Stop {
    Stop::Error(RtError::new(RtKind::TypeConfusion, format!("unexpected value in {what}")))
}

pub struct Vm<'p, 't> {
    p: &'p Program<'t>,
    module: &'p Module,
    m: Meter,
    globals: HashMap<Rc<str>, Value>,
}

pub fn run(p: &Program<'_>, module: &Module, limits: &Limits) -> ExecutionResult {
    let mut vm = Vm { p, module, m: Meter::new(limits), globals: HashMap::new() };
    let stop = vm.exec(module.script, None, Vec::new(), false).and_then(|_| vm.m.event(END_BLOCK, p.end_state(&vm.globals))).err();
    vm.m.finish(stop)
}

fn pop(stack: &mut Vec<Value>) -> R<Value> {
    stack.pop().ok_or_else(|| confused("stack"))
}

fn pop_n(stack: &mut Vec<Value>, n: impl Into<usize>) -> R<Vec<Value>> {
    let n = n.into();
    if stack.len() < n {
        return Err(confused("stack"));
    }
    Ok(stack.split_off(stack.len() - n))
}

impl<'p, 't> Vm<'p, 't> {
    /// Runs code unit `idx`. Frames other than the script count toward
    /// depth and fuel.
    fn exec(&mut self, idx: u32, this: Option<Rc<Object>>, args: Vec<Value>, counted: bool) -> R<Value> {
        if counted {
            self.m.enter()?;
        }
        let module = self.module;
        let code = &module.codes[idx as usize];
        let mut locals = args;
        locals.resize(code.slots.max(locals.len()), Value::Unit);
        let mut cursors: Vec<Option<Cursor>> = (0..code.cursors).map(|_| None).collect();
        let mut stack: Vec<Value> = Vec::with_capacity(16);
        let mut pc = 0usize;
        loop {
            let op = code.ops.get(pc).ok_or_else(|| confused("pc"))?;
            pc += 1;
            match op {
                Op::Const(v) => stack.push(v.clone()),
                Op::Absent => stack.push(Value::Absent),
                Op::Load(s) => stack.push(locals[*s as usize].clone()),
                Op::Store(s) => locals[*s as usize] = pop(&mut stack)?,
                Op::LoadGlobal(n) => {
                    let v = self.globals.get(n).cloned().ok_or_else(|| {
                        Stop::Error(RtError::new(RtKind::Uninitialized, format!("{n} is not initialized")))
                    })?;
                    stack.push(v);
                }
                Op::StoreGlobal(n) => {
                    let v = pop(&mut stack)?;
                    self.globals.insert(n.clone(), v);
                }
                Op::LoadThis => stack.push(Value::Obj(this.clone().ok_or_else(|| confused("this"))?)),
                Op::GetField(n) => {
                    let Value::Obj(o) = pop(&mut stack)? else { return Err(confused("field")) };
                    stack.push(read_field(&o, n)?);
                }
                Op::SetField(n) => {
                    let v = pop(&mut stack)?;
                    let Value::Obj(o) = pop(&mut stack)? else { return Err(confused("property write")) };
                    o.set(n, v);
                }
                Op::GetProp(n) => {
                    let r = pop(&mut stack)?;
                    let v = match &r {
                        Value::Obj(o) => read_field(o, n)?,
                        _ => native::property(&r, n)?,
                    };
                    stack.push(v);
                }
                Op::Pop => {
                    pop(&mut stack)?;
                }
                Op::Jump(t) => pc = *t as usize,
                Op::JumpIfFalse(t) => match pop(&mut stack)? {
                    Value::Bool(false) => pc = *t as usize,
                    Value::Bool(true) => {}
                    _ => return Err(confused("condition")),
                },
                Op::JumpIfPresent(s, t) => {
                    if !locals[*s as usize].is_absent() {
                        pc = *t as usize;
                    }
                }
                Op::Call(c, n) => {
                    let args = pop_n(&mut stack, *n)?;
                    let v = self.exec(*c, None, args, true)?;
                    stack.push(v);
                }
                Op::CallNative(id, n) => {
                    let args = pop_n(&mut stack, *n)?;
                    let v = self.native_fun(*id, args)?;
                    stack.push(v);
                }
                Op::CallDyn(n) => {
                    let args = pop_n(&mut stack, *n)?;
                    let Value::Func(id) = pop(&mut stack)? else { return Err(confused("function value")) };
                    let v = self.call_fun(id, args)?;
                    stack.push(v);
                }
                Op::Invoke { name, decl, argc } => {
                    let args = pop_n(&mut stack, *argc)?;
                    let recv = pop(&mut stack)?;
                    let v = self.invoke(recv, name, *decl, args)?;
                    stack.push(v);
                }
                Op::New { class, argc } => {
                    let args = pop_n(&mut stack, *argc)?;
                    let v = self.construct(class, args)?;
                    stack.push(v);
                }
                Op::InitSuper { class, argc } => {
                    let args = pop_n(&mut stack, *argc)?;
                    let init = *self.module.inits.get(&**class).ok_or_else(|| confused("superclass"))?;
                    self.exec(init, this.clone(), args, true)?;
                }
                Op::MakeList(n) => {
                    let items = pop_n(&mut stack, *n)?;
                    stack.push(Value::list(false, items));
                }
                Op::Not => match pop(&mut stack)? {
                    Value::Bool(b) => stack.push(Value::Bool(!b)),
                    _ => return Err(confused("!")),
                },
                Op::Eq | Op::Ne => {
                    let r = pop(&mut stack)?;
                    let l = pop(&mut stack)?;
                    let e = equals(&l, &r);
                    stack.push(Value::Bool(if matches!(op, Op::Eq) { e } else { !e }));
                }
                Op::Cmp(c) => {
                    let Value::Int(x) = pop(&mut stack)? else { return Err(confused("compareTo")) };
                    let name = match c {
                        CmpOp::Lt => "<",
                        CmpOp::Gt => ">",
                        CmpOp::Le => "<=",
                        CmpOp::Ge => ">=",
                    };
                    stack.push(Value::Bool(compare_holds(name, x)));
                }
                Op::IntLt | Op::IntNe => {
                    let (Value::Int(r), Value::Int(l)) = (pop(&mut stack)?, pop(&mut stack)?) else {
                        return Err(confused("loop bound"));
                    };
                    stack.push(Value::Bool(if matches!(op, Op::IntLt) { l < r } else { l != r }));
                }
                Op::Inc(s) => {
                    let Value::Int(i) = locals[*s as usize] else { return Err(confused("loop counter")) };
                    locals[*s as usize] = Value::Int(i.wrapping_add(1));
                }
                Op::Event(site) => {
                    let site = &module.sites[*site as usize];
                    self.m.event(&site.block, site.vars.iter().map(|(n, s)| (&**n, &locals[*s as usize])))?;
                }
                Op::Return => {
                    let v = pop(&mut stack)?;
                    if counted {
                        self.m.leave();
                    }
                    return Ok(v);
                }
                Op::IterStart(c) => {
                    let it = pop(&mut stack)?;
                    cursors[*c as usize] = Some(Cursor::over(&it)?);
                }
                Op::IterNext(s, c, t) => {
                    let cur = cursors[*c as usize].as_mut().ok_or_else(|| confused("iterator"))?;
                    match cur.next_value() {
                        Some(v) => locals[*s as usize] = v,
                        None => pc = *t as usize,
                    }
                }
            }
        }
    }

    fn native_fun(&mut self, id: usize, args: Vec<Value>) -> R<Value> {
        let mut lines = Vec::new();
        let r = native::function(self.p.fun_name(id), &args, &mut |s| lines.push(s));
        for l in lines {
            self.m.print(l)?;
        }
        Ok(r?)
    }

    fn call_fun(&mut self, id: usize, args: Vec<Value>) -> R<Value> {
        match self.p.user_fun(id).and_then(|d| self.module.funs.get(&d.id)) {
            Some(&code) => self.exec(code, None, args, true),
            None => self.native_fun(id, args),
        }
    }

    fn invoke(&mut self, recv: Value, name: &str, decl: u32, args: Vec<Value>) -> R<Value> {
        if let Value::Obj(o) = &recv {
            if let Some(body) = self.p.resolve_method(&o.class, decl) {
                let code = *self.module.funs.get(&body.id).ok_or_else(|| confused("method"))?;
                return self.exec(code, Some(o.clone()), args, true);
            }
        }
        Ok(native::method(&recv, name, &args)?)
    }

    fn construct(&mut self, class: &str, args: Vec<Value>) -> R<Value> {
        let Some(&init) = self.module.inits.get(class) else { return Ok(native::construct(class, &args)?) };
        let decl = self.p.class_node(class).map_or(0, |c| c.id);
        let obj = Rc::new(Object {
            class: Rc::from(class),
            decl,
            fields: RefCell::new(self.p.layout(class).iter().map(|n| (n.clone(), None)).collect()),
        });
        self.exec(init, Some(obj.clone()), args, true)?;
        Ok(Value::Obj(obj))
    }
}
