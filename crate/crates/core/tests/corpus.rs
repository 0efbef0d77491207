use std::fs;
use std::path::{Path, PathBuf};

use tcefuzz::exec::{check_differential, interpret, AllowList, FaultSet, Limits, Outcome, Verdict};
use tcefuzz::lang::parse;

fn dir(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

fn files(name: &str) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> =
        fs::read_dir(dir(name)).unwrap().map(|e| e.unwrap().path()).filter(|p| p.extension().is_some_and(|e| e == "tl")).collect();
    v.sort();
    v
}

#[test]
fn seeds_run_and_avoid_every_fault() {
    let seeds = files("seeds");
    assert!(seeds.len() >= 30, "{} seeds", seeds.len());
    let mut bad = Vec::new();
    for p in seeds {
        let name = p.file_name().unwrap().to_string_lossy().to_string();
        let src = fs::read_to_string(&p).unwrap();
        let t = match parse(&src) {
            Ok(t) => t,
            Err(e) => {
                bad.push(format!("{name}: {}", e.render(&src)));
                continue;
            }
        };
        match interpret(&t, &Limits::default()) {
            Err(e) => bad.push(format!("{name}: {e:?}")),
            Ok(r) if r.outcome != Outcome::Completed => bad.push(format!("{name}: {:?}", r.outcome)),
            Ok(_) => {
                let v = check_differential(&t, FaultSet::all(), &Limits::default(), &AllowList::default()).unwrap();
                if v != Verdict::Agree {
                    bad.push(format!("{name}: {v:?}"));
                }
            }
        }
    }
    assert!(bad.is_empty(), "{}", bad.join("\n"));
}
