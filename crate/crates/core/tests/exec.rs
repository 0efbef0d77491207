use tcefuzz::exec::{
    check_differential, compile_and_run, crash_signature, interpret, AllowList, Fault, FaultSet, Limits, Outcome,
    Phase, RtKind, Verdict, END_BLOCK,
};
use tcefuzz::lang::parse;

fn both(src: &str) -> (tcefuzz::exec::ExecutionResult, tcefuzz::exec::ExecutionResult) {
    let t = parse(src).unwrap();
    let a = interpret(&t, &Limits::default()).unwrap();
    let b = compile_and_run(&t, FaultSet::NONE, &Limits::default()).unwrap();
    (a, b)
}

const FIB: &str = "var a: Int = 1\nvar b: Int = 1\n\nwhile (b < 100) {\n    val c = b\n    b = a + b\n    a = c\n}\n";

#[test]
fn fibonacci_final_state() {
    let (a, b) = both(FIB);
    assert_eq!(a, b);
    assert_eq!(a.outcome, Outcome::Completed);
    let end = a.trace.last().unwrap();
    assert_eq!(end.block, END_BLOCK);
    assert_eq!(end.state, vec![("a".to_string(), "89".to_string()), ("b".to_string(), "144".to_string())]);
}

#[test]
fn division_by_zero() {
    let (a, b) = both("fun main() {\n    println(1 / 0)\n}\n");
    assert!(matches!(a.outcome, Outcome::RuntimeError { kind: RtKind::DivByZero, .. }));
    assert_eq!(a, b);
}

#[test]
fn infinite_loop_times_out() {
    let t = parse("fun main() {\n    while (true) {\n    }\n}\n").unwrap();
    let lim = Limits { fuel: 50_000, ..Limits::default() };
    let a = interpret(&t, &lim).unwrap();
    let b = compile_and_run(&t, FaultSet::NONE, &lim).unwrap();
    assert_eq!(a.outcome, Outcome::Timeout { wall: false });
    assert_eq!(a.events, b.events);
}

const MIXED: &str = r#"
open class Shape(val name: String) {
    open fun area(): Double = 0.0
    fun describe(): String = name + ":" + area()
}

class Rect(val w: Double, val h: Double) : Shape("rect") {
    override fun area(): Double = w * h
}

class Counter(var n: Int = 3) {
    val items: MutableList<Int> = mutableListOf<Int>(1, 2)
    operator fun get(i: Int, d: Int = 10): Int = n + i + d
    operator fun set(i: Int, v: Int) {
        n = i * v
    }
}

fun twice(f: (Int) -> Int, x: Int): Int = f(f(x))

fun inc(x: Int): Int = x + 1

fun sum(vararg xs: Int): Int {
    var s = 0
    for (x in xs) {
        s += x
    }
    return s
}

fun main() {
    val r = Rect(2.0, 3.5)
    println(r.describe())
    val c = Counter()
    c[2] = 5
    c[1] += 4
    println(c[0])
    println(c.n)
    val g = ::inc
    println(twice(g, 1))
    println(sum(1, 2, 3))
    for (i in 0 until 3) {
        if (i == 1) {
            println("one")
        } else if (i > 1) {
            println("big")
        } else {
            println(i)
        }
    }
    for (j in 5 downTo 1) {
        c.items.add(j)
    }
    println(c.items)
    println(listOf<String>("a", "b") + listOf<String>("c"))
    var k = 0L
    while (k < 3L) {
        k += 1
    }
    println(k)
    println("abc".length > 2 && !false)
}
"#;

#[test]
fn backends_agree_on_mixed_program() {
    let (a, b) = both(MIXED);
    assert_eq!(a.outcome, Outcome::Completed, "{a:?}");
    assert_eq!(a, b);
    assert_eq!(a.output(), vec!["rect:7.0", "35", "25", "3", "6", "0", "one", "big", "[1, 2, 5, 4, 3, 2, 1]", "[a, b, c]", "3", "true"]);
}

#[test]
fn crash_signatures_are_distinct_and_stable() {
    let a = crash_signature(Phase::Backend, "assertion", "codegen/call_args/funref");
    assert_eq!(a, crash_signature(Phase::Backend, "assertion", "codegen/call_args/funref"));
    assert_ne!(a, crash_signature(Phase::Frontend, "assertion", "codegen/call_args/funref"));
}

#[test]
fn funref_argument_crashes_only_with_fault() {
    let t = parse("fun inc(x: Int): Int = x + 1\nfun ap(f: (Int) -> Int): Int = f(1)\nfun main() {\n    println(ap(::inc))\n}\n").unwrap();
    let allow = AllowList::default();
    assert_eq!(check_differential(&t, FaultSet::NONE, &Limits::default(), &allow).unwrap(), Verdict::Agree);
    let v = check_differential(&t, FaultSet::only(Fault::FunrefArg), &Limits::default(), &allow).unwrap();
    assert!(matches!(v, Verdict::Crash { phase: Phase::Backend, .. }));
}
