//! Native members of the bundled stdlib, shared by both backends.

use std::rc::Rc;

use serde::{Deserialize, Serialize};

use super::value::{compare_doubles, display, equals, ordering_int, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RtKind {
    DivByZero,
    IndexOutOfBounds,
    Uninitialized,
    StackOverflow,
    IllegalArgument,
    OutOfMemory,
    Unsupported,
    /// A value of the wrong shape reached an operation.
    TypeConfusion,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RtError {
    pub kind: RtKind,
    pub message: String,
}

impl RtError {
    pub fn new(kind: RtKind, message: impl Into<String>) -> RtError {
        RtError { kind, message: message.into() }
    }
}

pub type RtResult<T> = Result<T, RtError>;

pub const MAX_STRING: usize = 1 << 20;
pub const MAX_LIST: usize = 1 << 20;

fn confused(what: &str, v: &[Value]) -> RtError {
    let kinds: Vec<&str> = v.iter().map(Value::kind).collect();
    RtError::new(RtKind::TypeConfusion, format!("{what} applied to ({})", kinds.join(", ")))
}

fn idx_err(i: i64, len: usize) -> RtError {
    RtError::new(RtKind::IndexOutOfBounds, format!("Index {i} out of bounds for length {len}"))
}

fn checked_str(s: String) -> RtResult<Value> {
    if s.len() > MAX_STRING {
        return Err(RtError::new(RtKind::OutOfMemory, "string too large"));
    }
    Ok(Value::Str(Rc::from(s)))
}

#[derive(Clone, Copy)]
enum Num {
    I(i32),
    L(i64),
    D(f64),
}

fn num(v: &Value) -> Option<Num> {
    match v {
        Value::Int(i) => Some(Num::I(*i)),
        Value::Long(i) => Some(Num::L(*i)),
        Value::Double(d) => Some(Num::D(*d)),
        _ => None,
    }
}

fn as_f64(n: Num) -> f64 {
    match n {
        Num::I(i) => i as f64,
        Num::L(i) => i as f64,
        Num::D(d) => d,
    }
}

fn as_i64(n: Num) -> i64 {
    match n {
        Num::I(i) => i as i64,
        Num::L(i) => i,
        Num::D(d) => d as i64,
    }
}

fn arith(op: &str, a: Num, b: Num) -> RtResult<Value> {
    use Num::*;
    let zero = || RtError::new(RtKind::DivByZero, "/ by zero");
    Ok(match (a, b) {
        (I(x), I(y)) => Value::Int(match op {
            "plus" => x.wrapping_add(y),
            "minus" => x.wrapping_sub(y),
            "times" => x.wrapping_mul(y),
            _ if y == 0 => return Err(zero()),
            "div" => x.wrapping_div(y),
            _ => x.wrapping_rem(y),
        }),
        (D(_), _) | (_, D(_)) => {
            let (x, y) = (as_f64(a), as_f64(b));
            Value::Double(match op {
                "plus" => x + y,
                "minus" => x - y,
                "times" => x * y,
                "div" => x / y,
                _ => x % y,
            })
        }
        _ => {
            let (x, y) = (as_i64(a), as_i64(b));
            Value::Long(match op {
                "plus" => x.wrapping_add(y),
                "minus" => x.wrapping_sub(y),
                "times" => x.wrapping_mul(y),
                "div" => {
                    if y == 0 {
                        return Err(zero());
                    }
                    x.wrapping_div(y)
                }
                _ => {
                    if y == 0 {
                        return Err(zero());
                    }
                    x.wrapping_rem(y)
                }
            })
        }
    })
}

fn compare_nums(a: Num, b: Num) -> Value {
    match (a, b) {
        (Num::D(_), _) | (_, Num::D(_)) => ordering_int(compare_doubles(as_f64(a), as_f64(b))),
        _ => ordering_int(as_i64(a).cmp(&as_i64(b))),
    }
}

fn int_arg(args: &[Value], i: usize, what: &str) -> RtResult<i32> {
    match args.get(i) {
        Some(Value::Int(v)) => Ok(*v),
        _ => Err(confused(what, args)),
    }
}

/// A range value `first..last` stepping by `step`.
fn range(first: i32, last: i32, step: i32) -> Value {
    Value::Range { first, last, step }
}

fn range_contains(first: i32, last: i32, step: i32, v: i32) -> bool {
    if step > 0 {
        first <= v && v <= last
    } else {
        last <= v && v <= first
    }
}

fn range_empty(first: i32, last: i32, step: i32) -> bool {
    if step > 0 {
        first > last
    } else {
        first < last
    }
}

/// Calls `recv.name(args)` on a receiver of a native type. Varargs arrive
/// packed as a list.
pub fn method(recv: &Value, name: &str, args: &[Value]) -> RtResult<Value> {
    if name == "toString" && args.is_empty() {
        return Ok(Value::str(&display(recv)));
    }
    match recv {
        Value::Int(_) | Value::Long(_) | Value::Double(_) => numeric_method(recv, name, args),
        Value::Bool(b) => {
            let other = || match args.first() {
                Some(Value::Bool(o)) => Ok(*o),
                _ => Err(confused(name, args)),
            };
            Ok(Value::Bool(match name {
                "not" => !b,
                "and" => *b && other()?,
                "or" => *b || other()?,
                "xor" => *b ^ other()?,
                _ => return Err(unsupported("Boolean", name)),
            }))
        }
        Value::Str(s) => string_method(s, name, args),
        Value::List(l) => {
            let len = l.items.borrow().len();
            match name {
                "get" => {
                    let i = int_arg(args, 0, name)?;
                    l.items.borrow().get(usize::try_from(i).unwrap_or(usize::MAX)).cloned().ok_or_else(|| idx_err(i as i64, len))
                }
                "plus" => {
                    let Some(Value::List(o)) = args.first() else { return Err(confused(name, args)) };
                    let mut items = l.items.borrow().clone();
                    items.extend(o.items.borrow().iter().cloned());
                    if items.len() > MAX_LIST {
                        return Err(RtError::new(RtKind::OutOfMemory, "list too large"));
                    }
                    Ok(Value::list(false, items))
                }
                "isEmpty" => Ok(Value::Bool(len == 0)),
                "contains" => {
                    let x = args.first().ok_or_else(|| confused(name, args))?;
                    Ok(Value::Bool(l.items.borrow().iter().any(|v| equals(v, x))))
                }
                "indexOf" => {
                    let x = args.first().ok_or_else(|| confused(name, args))?;
                    Ok(Value::Int(l.items.borrow().iter().position(|v| equals(v, x)).map(|p| p as i32).unwrap_or(-1)))
                }
                "set" | "add" | "removeAt" if !l.mutable => {
                    Err(RtError::new(RtKind::Unsupported, format!("{name} on a read-only list")))
                }
                "set" => {
                    let i = int_arg(args, 0, name)?;
                    let v = args.get(1).cloned().ok_or_else(|| confused(name, args))?;
                    let mut items = l.items.borrow_mut();
                    let slot = items.get_mut(usize::try_from(i).unwrap_or(usize::MAX)).ok_or_else(|| idx_err(i as i64, len))?;
                    *slot = v;
                    Ok(Value::Unit)
                }
                "add" => {
                    let v = args.first().cloned().ok_or_else(|| confused(name, args))?;
                    if len >= MAX_LIST {
                        return Err(RtError::new(RtKind::OutOfMemory, "list too large"));
                    }
                    l.items.borrow_mut().push(v);
                    Ok(Value::Bool(true))
                }
                "removeAt" => {
                    let i = int_arg(args, 0, name)?;
                    let u = usize::try_from(i).ok().filter(|&u| u < len).ok_or_else(|| idx_err(i as i64, len))?;
                    Ok(l.items.borrow_mut().remove(u))
                }
                _ => Err(unsupported("List", name)),
            }
        }
        Value::Range { first, last, step } => match name {
            "contains" => Ok(Value::Bool(range_contains(*first, *last, *step, int_arg(args, 0, name)?))),
            "isEmpty" => Ok(Value::Bool(range_empty(*first, *last, *step))),
            _ => Err(unsupported("IntRange", name)),
        },
        _ => Err(confused(name, std::slice::from_ref(recv))),
    }
}

fn unsupported(owner: &str, name: &str) -> RtError {
    RtError::new(RtKind::Unsupported, format!("no native {owner}.{name}"))
}

fn numeric_method(recv: &Value, name: &str, args: &[Value]) -> RtResult<Value> {
    let a = num(recv).expect("numeric receiver");
    match name {
        "plus" | "minus" | "times" | "div" | "rem" => {
            let b = args.first().and_then(num).ok_or_else(|| confused(name, args))?;
            arith(name, a, b)
        }
        "compareTo" => {
            let b = args.first().and_then(num).ok_or_else(|| confused(name, args))?;
            Ok(compare_nums(a, b))
        }
        "unaryMinus" => Ok(match a {
            Num::I(x) => Value::Int(x.wrapping_neg()),
            Num::L(x) => Value::Long(x.wrapping_neg()),
            Num::D(x) => Value::Double(-x),
        }),
        "toInt" => Ok(Value::Int(match a {
            Num::I(x) => x,
            Num::L(x) => x as i32,
            Num::D(x) => x as i32,
        })),
        "toLong" => Ok(Value::Long(as_i64(a))),
        "toDouble" => Ok(Value::Double(as_f64(a))),
        "inv" => match a {
            Num::I(x) => Ok(Value::Int(!x)),
            Num::L(x) => Ok(Value::Long(!x)),
            Num::D(_) => Err(unsupported("Double", name)),
        },
        "rangeTo" | "until" | "downTo" => {
            let Num::I(x) = a else { return Err(confused(name, args)) };
            let y = int_arg(args, 0, name)?;
            Ok(match name {
                "rangeTo" => range(x, y, 1),
                "until" => {
                    if y == i32::MIN {
                        range(0, -1, 1)
                    } else {
                        range(x, y - 1, 1)
                    }
                }
                _ => range(x, y, -1),
            })
        }
        _ => Err(unsupported(recv.kind(), name)),
    }
}

fn string_method(s: &Rc<str>, name: &str, args: &[Value]) -> RtResult<Value> {
    let chars = || s.chars();
    match name {
        "plus" => {
            let o = args.first().ok_or_else(|| confused(name, args))?;
            checked_str(format!("{s}{}", display(o)))
        }
        "compareTo" => match args.first() {
            Some(Value::Str(o)) => Ok(ordering_int(s.chars().cmp(o.chars()))),
            _ => Err(confused(name, args)),
        },
        "get" => {
            let i = int_arg(args, 0, name)?;
            let n = chars().count();
            let c = usize::try_from(i).ok().and_then(|u| chars().nth(u)).ok_or_else(|| idx_err(i as i64, n))?;
            Ok(Value::str(&c.to_string()))
        }
        "uppercase" => Ok(Value::str(&s.to_uppercase())),
        "lowercase" => Ok(Value::str(&s.to_lowercase())),
        "reversed" => Ok(Value::str(&chars().rev().collect::<String>())),
        "isEmpty" => Ok(Value::Bool(s.is_empty())),
        "substring" => {
            let (a, b) = (int_arg(args, 0, name)?, int_arg(args, 1, name)?);
            let n = chars().count();
            if a < 0 || b < a || b as usize > n {
                return Err(RtError::new(
                    RtKind::IndexOutOfBounds,
                    format!("begin {a}, end {b}, length {n}"),
                ));
            }
            Ok(Value::str(&chars().skip(a as usize).take((b - a) as usize).collect::<String>()))
        }
        "repeat" => {
            let n = int_arg(args, 0, name)?;
            if n < 0 {
                return Err(RtError::new(RtKind::IllegalArgument, format!("Count 'n' must be non-negative, but was {n}")));
            }
            if s.len().saturating_mul(n as usize) > MAX_STRING {
                return Err(RtError::new(RtKind::OutOfMemory, "string too large"));
            }
            Ok(Value::str(&s.repeat(n as usize)))
        }
        _ => Err(unsupported("String", name)),
    }
}

/// Reads a native property.
pub fn property(recv: &Value, name: &str) -> RtResult<Value> {
    match (recv, name) {
        (Value::Str(s), "length") => Ok(Value::Int(s.chars().count() as i32)),
        (Value::List(l), "size") => Ok(Value::Int(l.items.borrow().len() as i32)),
        (Value::Range { first, .. }, "first") => Ok(Value::Int(*first)),
        (Value::Range { last, .. }, "last") => Ok(Value::Int(*last)),
        _ => Err(RtError::new(RtKind::Unsupported, format!("no native property {name} on {}", recv.kind()))),
    }
}

fn extremum(name: &str, args: &[Value], want_max: bool) -> RtResult<Value> {
    let (Some(a), Some(b)) = (args.first().and_then(num), args.get(1).and_then(num)) else {
        return Err(confused(name, args));
    };
    Ok(match (a, b) {
        (Num::I(x), Num::I(y)) => Value::Int(if want_max { x.max(y) } else { x.min(y) }),
        (Num::L(x), Num::L(y)) => Value::Long(if want_max { x.max(y) } else { x.min(y) }),
        (Num::D(x), Num::D(y)) => {
            if x.is_nan() || y.is_nan() {
                Value::Double(f64::NAN)
            } else {
                let o = compare_doubles(x, y);
                let pick_x = if want_max { o.is_ge() } else { o.is_le() };
                Value::Double(if pick_x { x } else { y })
            }
        }
        _ => return Err(confused(name, args)),
    })
}

/// Calls a native top-level function. `out` receives printed lines.
pub fn function(name: &str, args: &[Value], out: &mut dyn FnMut(String)) -> RtResult<Value> {
    let list_arg = |mutable: bool| match args.first() {
        Some(Value::List(l)) => Ok(Value::list(mutable, l.items.borrow().clone())),
        _ => Err(confused(name, args)),
    };
    match name {
        "println" => {
            let v = args.first().ok_or_else(|| confused(name, args))?;
            out(display(v));
            Ok(Value::Unit)
        }
        "listOf" => list_arg(false),
        "mutableListOf" | "arrayListOf" => list_arg(true),
        "emptyList" => Ok(Value::list(false, Vec::new())),
        "maxOf" => extremum(name, args, true),
        "minOf" => extremum(name, args, false),
        "abs" => match args.first() {
            Some(Value::Int(x)) => Ok(Value::Int(x.wrapping_abs())),
            Some(Value::Long(x)) => Ok(Value::Long(x.wrapping_abs())),
            Some(Value::Double(x)) => Ok(Value::Double(x.abs())),
            _ => Err(confused(name, args)),
        },
        _ => Err(RtError::new(RtKind::Unsupported, format!("no native function {name}"))),
    }
}

/// Instantiates a constructible native class.
pub fn construct(class: &str, args: &[Value]) -> RtResult<Value> {
    match class {
        "IntRange" => Ok(range(int_arg(args, 0, class)?, int_arg(args, 1, class)?, 1)),
        "ArrayList" => Ok(Value::list(true, Vec::new())),
        _ => Err(RtError::new(RtKind::Unsupported, format!("no native constructor {class}"))),
    }
}

/// Iteration state over an `Iterable` value.
#[derive(Debug)]
pub enum Cursor {
    Range { next: i64, last: i64, step: i64 },
    List { list: Rc<super::value::ListObj>, index: usize },
}

impl Cursor {
    pub fn over(v: &Value) -> RtResult<Cursor> {
        match v {
            Value::Range { first, last, step } => {
                Ok(Cursor::Range { next: *first as i64, last: *last as i64, step: *step as i64 })
            }
            Value::List(l) => Ok(Cursor::List { list: l.clone(), index: 0 }),
            _ => Err(confused("iterator", std::slice::from_ref(v))),
        }
    }

    pub fn next_value(&mut self) -> Option<Value> {
        match self {
            Cursor::Range { next, last, step } => {
                let more = if *step > 0 { *next <= *last } else { *next >= *last };
                if !more {
                    return None;
                }
                let v = *next as i32;
                *next += *step;
                Some(Value::Int(v))
            }
            Cursor::List { list, index } => {
                let v = list.items.borrow().get(*index).cloned();
                *index += 1;
                v
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn int_arithmetic_wraps_and_traps() {
        assert!(matches!(method(&Value::Int(i32::MAX), "plus", &[Value::Int(1)]), Ok(Value::Int(i32::MIN))));
        assert!(matches!(method(&Value::Int(i32::MIN), "div", &[Value::Int(-1)]), Ok(Value::Int(i32::MIN))));
        let e = method(&Value::Int(1), "div", &[Value::Int(0)]).unwrap_err();
        assert_eq!(e.kind, RtKind::DivByZero);
        assert!(matches!(method(&Value::Int(1), "div", &[Value::Double(0.0)]), Ok(Value::Double(d)) if d.is_infinite()));
        assert!(matches!(method(&Value::Int(2), "times", &[Value::Long(3)]), Ok(Value::Long(6))));
    }

    #[test]
    fn until_and_down_to() {
        let r = method(&Value::Int(10), "until", &[Value::Int(0)]).unwrap();
        assert!(matches!(method(&r, "isEmpty", &[]), Ok(Value::Bool(true))));
        let mut c = Cursor::over(&method(&Value::Int(3), "downTo", &[Value::Int(1)]).unwrap()).unwrap();
        let mut got = vec![];
        while let Some(Value::Int(v)) = c.next_value() {
            got.push(v);
        }
        assert_eq!(got, [3, 2, 1]);
    }

    #[test]
    fn list_bounds() {
        let l = Value::list(true, vec![Value::Int(1)]);
        assert_eq!(method(&l, "get", &[Value::Int(1)]).unwrap_err().kind, RtKind::IndexOutOfBounds);
        assert!(matches!(method(&l, "add", &[Value::Int(2)]), Ok(Value::Bool(true))));
        assert!(matches!(property(&l, "size"), Ok(Value::Int(2))));
    }

    #[test]
    fn println_uses_display() {
        let mut lines = vec![];
        function("println", &[Value::Double(2.0)], &mut |s| lines.push(s)).unwrap();
        assert_eq!(lines, ["2.0"]);
    }
}
