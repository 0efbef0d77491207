use std::path::Path;
use std::time::Instant;

use tcefuzz::exec::{check_differential, AllowList, Fault, FaultSet, Limits, Verdict};
use tcefuzz::lang::parse;

fn witness(f: Fault) -> tcefuzz::lang::SyntaxTree {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus/witnesses").join(format!("{}.tl", f.name()));
    parse(&std::fs::read_to_string(&p).unwrap()).unwrap()
}

#[test]
fn every_fault_has_a_witness() {
    let start = Instant::now();
    let (lim, allow) = (Limits::default(), AllowList::default());
    for f in Fault::ALL {
        let t = witness(f);
        assert_eq!(check_differential(&t, FaultSet::NONE, &lim, &allow).unwrap(), Verdict::Agree, "{f}");
        let v = check_differential(&t, FaultSet::only(f), &lim, &allow).unwrap();
        assert!(v.is_bug(), "{f}: {v:?}");
        assert_eq!(f.is_miscompilation(), matches!(v, Verdict::Diverge(_)), "{f}: {v:?}");
    }
    println!("witnesses took {:?}", start.elapsed());
}
