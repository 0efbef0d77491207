use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tcefuzz::baseline::{brute_force_count, enumerate_fillings, grammar_generate, mutate_random, GrammarConfig, HoleKind, VarSkeleton};
use tcefuzz::lang::{parse, print};
use tcefuzz::types::check_program;

fn files(name: &str) -> Vec<PathBuf> {
    let d = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name);
    let mut v: Vec<PathBuf> = fs::read_dir(d).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

fn load(p: &Path) -> tcefuzz::lang::SyntaxTree {
    parse(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn fibonacci_skeleton_has_declaration_holes() {
    let t = parse("var a: Int = 1\nvar b: Int = 1\nwhile (b < 100) {\n    val c = b\n    b = a + b\n    a = c\n}\n").unwrap();
    let sk = VarSkeleton::new(&t).unwrap();
    let decls = sk.holes.iter().filter(|h| h.kind == HoleKind::Decl).count();
    assert_eq!(decls, 3);
    assert_eq!(sk.holes.len(), 10);
    assert_eq!(sk.vars, vec!["a", "b", "c"]);
    assert!(sk.scope_ok(&sk.original()));
}

#[test]
fn enumeration_matches_brute_force_on_small_skeletons() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut small = 0;
    for p in files("skeletons") {
        let sk = VarSkeleton::new(&load(&p)).unwrap();
        if sk.vars.len() <= 3 && sk.holes.len() <= 6 {
            small += 1;
        }
        let all = enumerate_fillings(&sk, usize::MAX, &mut rng);
        let distinct: HashSet<_> = all.iter().cloned().collect();
        assert_eq!(distinct.len(), all.len(), "{}", p.display());
        assert!(all.iter().all(|f| sk.scope_ok(f) && sk.canonical(f) == *f));
        assert!(distinct.contains(&sk.canonical(&sk.original())), "{}", p.display());
        assert_eq!(all.len(), brute_force_count(&sk), "{}", p.display());
        for f in &all {
            print(&sk.instantiate(f)).unwrap();
        }
    }
    assert!(small >= 3);
}

#[test]
fn grammar_output_reparses_to_the_same_tree() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cfg = GrammarConfig::default();
    for _ in 0..300 {
        let t = grammar_generate(&cfg, &mut rng);
        let src = print(&t).unwrap();
        let back = parse(&src).unwrap_or_else(|e| panic!("{}\n{src}", e.render(&src)));
        assert!(back == t, "{src}");
    }
}

#[test]
fn random_mutants_stay_parseable() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let seeds: Vec<_> = files("seeds").iter().map(|p| load(p)).collect();
    let mut valid = 0;
    for i in 0..300 {
        let m = mutate_random(&seeds[i % seeds.len()], &mut rng);
        let src = print(&m).unwrap();
        let back = parse(&src).unwrap_or_else(|e| panic!("{}\n{src}", e.render(&src)));
        if check_program(&back).is_ok() {
            valid += 1;
        }
    }
    assert!(valid < 300);
}
