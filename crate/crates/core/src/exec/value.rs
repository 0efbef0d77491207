use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt::Write as _;
use std::rc::Rc;

use crate::lang::NodeId;
use crate::stdlib::format_double_literal;
use crate::types::FunId;

#[derive(Clone, Debug)]
pub enum Value {
    Unit,
    Int(i32),
    Long(i64),
    Double(f64),
    Bool(bool),
    Str(Rc<str>),
    List(Rc<ListObj>),
    Range { first: i32, last: i32, step: i32 },
    Obj(Rc<Object>),
    Func(FunId),
    /// A defaulted parameter the caller left out.
    Absent,
}

#[derive(Debug)]
pub struct ListObj {
    pub mutable: bool,
    pub items: RefCell<Vec<Value>>,
}

#[derive(Debug)]
pub struct Object {
    pub class: Rc<str>,
    pub decl: NodeId,
    /// Fields in declaration order; `None` until initialized.
    pub fields: RefCell<Vec<(Rc<str>, Option<Value>)>>,
}

impl Object {
    pub fn get(&self, name: &str) -> Option<Option<Value>> {
        self.fields.borrow().iter().find(|(n, _)| &**n == name).map(|(_, v)| v.clone())
    }

    pub fn set(&self, name: &str, v: Value) -> bool {
        let mut f = self.fields.borrow_mut();
        match f.iter_mut().find(|(n, _)| &**n == name) {
            Some(slot) => {
                slot.1 = Some(v);
                true
            }
            None => false,
        }
    }
}

impl Value {
    pub fn str(s: &str) -> Value {
        Value::Str(Rc::from(s))
    }

    pub fn list(mutable: bool, items: Vec<Value>) -> Value {
        Value::List(Rc::new(ListObj { mutable, items: RefCell::new(items) }))
    }

    pub fn is_absent(&self) -> bool {
        matches!(self, Value::Absent)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Value::Unit => "Unit",
            Value::Int(_) => "Int",
            Value::Long(_) => "Long",
            Value::Double(_) => "Double",
            Value::Bool(_) => "Boolean",
            Value::Str(_) => "String",
            Value::List(_) => "List",
            Value::Range { .. } => "IntRange",
            Value::Obj(_) => "Object",
            Value::Func(_) => "Function",
            Value::Absent => "Absent",
        }
    }
}

/// Kotlin-style `Double.toString`.
pub fn format_double(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "Infinity".into() } else { "-Infinity".into() }
    } else {
        format_double_literal(v)
    }
}

const SHOW_DEPTH: usize = 3;
const SHOW_ITEMS: usize = 16;

/// The printed form of a value, shared by `println`, string
/// concatenation, `toString` and trace snapshots.
pub fn display(v: &Value) -> String {
    let mut s = String::new();
    show(v, SHOW_DEPTH, &mut s);
    s
}

/// Snapshot form: like [`display`] with strings quoted.
pub fn snapshot(v: &Value) -> String {
    match v {
        Value::Str(s) => crate::lang::quote(s),
        _ => display(v),
    }
}

fn show(v: &Value, depth: usize, out: &mut String) {
    match v {
        Value::Unit => out.push_str("Unit"),
        Value::Int(i) => {
            let _ = write!(out, "{i}");
        }
        Value::Long(i) => {
            let _ = write!(out, "{i}");
        }
        Value::Double(d) => out.push_str(&format_double(*d)),
        Value::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        Value::Str(s) => out.push_str(s),
        Value::Range { first, last, step } => {
            if *step > 0 {
                let _ = write!(out, "{first}..{last}");
            } else {
                let _ = write!(out, "{first} downTo {last} step {}", -(*step as i64));
            }
        }
        Value::List(l) => {
            if depth == 0 {
                out.push_str("[...]");
                return;
            }
            out.push('[');
            let items = l.items.borrow();
            for (i, x) in items.iter().take(SHOW_ITEMS).enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                show(x, depth - 1, out);
            }
            if items.len() > SHOW_ITEMS {
                let _ = write!(out, ", ...{} more", items.len() - SHOW_ITEMS);
            }
            out.push(']');
        }
        Value::Obj(o) => {
            out.push_str(&o.class);
            if depth == 0 {
                out.push_str("(...)");
                return;
            }
            out.push('(');
            for (i, (n, x)) in o.fields.borrow().iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(n);
                out.push('=');
                match x {
                    Some(x) => show(x, depth - 1, out),
                    None => out.push('?'),
                }
            }
            out.push(')');
        }
        Value::Func(id) => {
            let _ = write!(out, "fun#{id}");
        }
        Value::Absent => out.push_str("<absent>"),
    }
}

/// `==` semantics: structural for lists, ranges and primitives, identity
/// for objects.
pub fn equals(a: &Value, b: &Value) -> bool {
    equals_within(a, b, 64)
}

fn equals_within(a: &Value, b: &Value, depth: usize) -> bool {
    match (a, b) {
        (Value::Unit, Value::Unit) => true,
        (Value::Int(x), Value::Int(y)) => x == y,
        (Value::Long(x), Value::Long(y)) => x == y,
        (Value::Double(x), Value::Double(y)) => x == y,
        (Value::Bool(x), Value::Bool(y)) => x == y,
        (Value::Str(x), Value::Str(y)) => x == y,
        (Value::List(x), Value::List(y)) => {
            Rc::ptr_eq(x, y)
                || depth > 0 && {
                    let (x, y) = (x.items.borrow(), y.items.borrow());
                    x.len() == y.len() && x.iter().zip(y.iter()).all(|(p, q)| equals_within(p, q, depth - 1))
                }
        }
        (Value::Range { first: a, last: b, step: c }, Value::Range { first: d, last: e, step: f }) => {
            (a, b, c) == (d, e, f)
        }
        (Value::Obj(x), Value::Obj(y)) => Rc::ptr_eq(x, y),
        (Value::Func(x), Value::Func(y)) => x == y,
        _ => false,
    }
}

/// Total order of `Double.compareTo`: -0.0 < 0.0 and NaN above everything.
pub fn compare_doubles(a: f64, b: f64) -> Ordering {
    match (a.is_nan(), b.is_nan()) {
        (true, true) => Ordering::Equal,
        (true, false) => Ordering::Greater,
        (false, true) => Ordering::Less,
        _ => a.total_cmp(&b),
    }
}

pub fn ordering_int(o: Ordering) -> Value {
    Value::Int(match o {
        Ordering::Less => -1,
        Ordering::Equal => 0,
        Ordering::Greater => 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubles_print_like_kotlin() {
        assert_eq!(format_double(1.0), "1.0");
        assert_eq!(format_double(-0.5), "-0.5");
        assert_eq!(format_double(f64::NAN), "NaN");
        assert_eq!(format_double(f64::NEG_INFINITY), "-Infinity");
    }

    #[test]
    fn nan_is_greatest() {
        assert_eq!(compare_doubles(f64::NAN, f64::INFINITY), Ordering::Greater);
        assert_eq!(compare_doubles(-0.0, 0.0), Ordering::Less);
        assert_eq!(compare_doubles(-f64::NAN, 1.0), Ordering::Greater);
    }

    #[test]
    fn lists_compare_structurally() {
        let a = Value::list(false, vec![Value::Int(1), Value::str("x")]);
        let b = Value::list(true, vec![Value::Int(1), Value::str("x")]);
        assert!(equals(&a, &b));
        assert_eq!(display(&a), "[1, x]");
        assert_eq!(snapshot(&Value::str("a\"b")), "\"a\\\"b\"");
    }
}
