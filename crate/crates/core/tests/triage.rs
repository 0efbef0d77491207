use std::fs;
use std::path::Path;

use tcefuzz::exec::{AllowList, Fault, FaultSet, Limits};
use tcefuzz::lang::{parse, print, token_count};
use tcefuzz::triage::{classify, dedup, reduce_input, BugKind, BugRecord, ReduceStatus, DEFAULT_BUDGET};

fn witness(f: Fault) -> String {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus/witnesses").join(format!("{}.tl", f.name()));
    fs::read_to_string(p).unwrap()
}

fn padded(src: &str) -> String {
    let mut s = String::new();
    for i in 0..25 {
        s.push_str(&format!("fun pad{i}(x: Int): Int = x * {i} + 1\n"));
        s.push_str(&format!("val keep{i}: String = \"v\" + {i}\n"));
    }
    s.push_str(src);
    s
}

#[test]
fn padded_witnesses_shrink_within_budget() {
    let limits = Limits::default();
    let allow = AllowList::default();
    for f in Fault::ALL {
        let t = parse(&padded(&witness(f))).unwrap();
        let faults = FaultSet::only(f);
        let want = classify(&t, faults, &limits, &allow).expect("padded witness still triggers");
        let goal = |c: &tcefuzz::lang::SyntaxTree| classify(c, faults, &limits, &allow).as_ref() == Some(&want);
        let r = reduce_input(&t, &goal, DEFAULT_BUDGET).unwrap();
        assert!(r.evaluations <= DEFAULT_BUDGET);
        assert!(r.tokens_after * 5 <= r.tokens_before, "{}: {} -> {}\n{}", f.name(), r.tokens_before, r.tokens_after, print(&r.tree).unwrap());
        assert!(goal(&r.tree));
        assert_eq!(r.tokens_after, token_count(&print(&r.tree).unwrap()));
    }
}

#[test]
fn small_budget_returns_best_so_far() {
    let t = parse(&padded(&witness(Fault::FunrefArg))).unwrap();
    let faults = FaultSet::only(Fault::FunrefArg);
    let goal = |c: &tcefuzz::lang::SyntaxTree| classify(c, faults, &Limits::default(), &AllowList::default()).is_some();
    let r = reduce_input(&t, &goal, 5).unwrap();
    assert_eq!(r.status, ReduceStatus::BudgetExhausted);
    assert!(r.evaluations <= 5 && r.tokens_after < r.tokens_before);
}

#[test]
fn crashes_and_miscompilations_never_merge() {
    let rec = |id: &str, kind, sig: &str| BugRecord { id: id.into(), kind, signature: sig.into(), detail: String::new(), program: id.into() };
    let cs = dedup(&[
        rec("a", BugKind::BackendCrash, "x"),
        rec("b", BugKind::Miscompilation, "x"),
        rec("c", BugKind::BackendCrash, "x"),
        rec("d", BugKind::FrontendCrash, "y"),
    ]);
    assert_eq!(cs.len(), 3);
    assert_eq!(cs[0].members, vec!["a", "c"]);
}
