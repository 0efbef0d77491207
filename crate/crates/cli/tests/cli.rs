use std::path::PathBuf;
use std::process::{Command, Output};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn tcefuzz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tcefuzz"))
        .args(args)
        .current_dir(root())
        .env_remove("TCEFUZZ_RNG_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn check_reports_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.tl");
    std::fs::write(&bad, "fun main() {\n    val x: Int = \"a\"\n}\n").unwrap();
    let o = tcefuzz(&["check", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("2:"), "{}", stdout(&o));
    let ok = tcefuzz(&["check", "corpus/seeds/s01_fibonacci.tl"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
}

#[test]
fn pool_file_feeds_mutation() {
    let dir = tempfile::tempdir().unwrap();
    let pool = dir.path().join("pool.jsonl");
    let g = tcefuzz(&["generate", "corpus/seeds/s02_shapes.tl", "--out", pool.to_str().unwrap(), "--salt", "9"]);
    assert!(g.status.success());
    let text = std::fs::read_to_string(&pool).unwrap();
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    for key in ["expr_text", "type_text", "provenance", "depth"] {
        assert!(first.get(key).is_some(), "missing {key}");
    }
    let args = ["mutate", "corpus/seeds/s03_counter_index.tl", "--gen-seed", "corpus/seeds/s02_shapes.tl"];
    let a = tcefuzz(&[&args[..], &["--pool", pool.to_str().unwrap(), "--salt", "9", "--rng-seed", "3"]].concat());
    let b = tcefuzz(&[&args[..], &["--pool", pool.to_str().unwrap(), "--salt", "9", "--rng-seed", "3"]].concat());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let out = dir.path().join("m.tl");
    std::fs::write(&out, &a.stdout).unwrap();
    assert_eq!(tcefuzz(&["check", out.to_str().unwrap()]).status.code(), Some(0));
}

#[test]
fn witness_crashes_only_with_its_fault() {
    let w = "corpus/witnesses/funref_arg.tl";
    assert_eq!(tcefuzz(&["run", w]).status.code(), Some(0));
    let o = tcefuzz(&["run", w, "--faults", "funref_arg"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("compiler crash"));
}

#[test]
fn trace_is_json_lines() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.jsonl");
    let o = tcefuzz(&["run", "corpus/seeds/s01_fibonacci.tl", "--backend", "interp", "--trace", t.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&t).unwrap();
    assert!(!text.is_empty());
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v.get("block").is_some() && v.get("state").is_some());
    }
}

#[test]
fn external_command_exit_status_is_a_crash() {
    let w = "corpus/seeds/s01_fibonacci.tl";
    assert_eq!(tcefuzz(&["run", w, "--external-cmd", "cat {file} > /dev/null"]).status.code(), Some(0));
    let o = tcefuzz(&["run", w, "--external-cmd", "exit 7"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("exit 7"));
}

#[test]
fn reduce_keeps_the_signature() {
    let o = tcefuzz(&["reduce", "corpus/witnesses/range_until_loop.tl", "--faults", "range_until_loop"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("until"));
}

#[test]
fn baselines_emit_programs() {
    let o = tcefuzz(&["baseline", "--strategy", "grammar", "--seed", "none", "--count", "3"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).matches("// ----").count(), 2);
    let o = tcefuzz(&["baseline", "--strategy", "spe", "--seed", "corpus/skeletons/k02_swap.tl", "--count", "2"]);
    assert!(o.status.success());
    let o = tcefuzz(&["baseline", "--strategy", "mutate", "--seed", "none"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn exit_codes_for_config_and_corpus_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "bogus = 1\n").unwrap();
    assert_eq!(tcefuzz(&["fuzz", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    let empty = dir.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    let cfg = dir.path().join("e.toml");
    std::fs::write(&cfg, format!("corpus = {:?}\niterations = 2\n", empty.to_str().unwrap())).unwrap();
    assert_eq!(tcefuzz(&["fuzz", "--config", cfg.to_str().unwrap()]).status.code(), Some(3));
    let o = Command::new(env!("CARGO_BIN_EXE_tcefuzz"))
        .args(["fuzz", "--dump-config"])
        .current_dir(root())
        .env("TCEFUZZ_RNG_SEED", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn env_seed_overrides_config() {
    let o = Command::new(env!("CARGO_BIN_EXE_tcefuzz"))
        .args(["fuzz", "--config", "configs/campaign.toml", "--dump-config"])
        .current_dir(root())
        .env("TCEFUZZ_RNG_SEED", "77")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(stdout(&o).contains("seed = 77"));
}

#[test]
fn fuzz_writes_outputs_that_dedup_and_report_read() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        format!("iterations = 12\nfaults = [\"nested_accessor\"]\nreduce = false\nout = {:?}\n", out.to_str().unwrap()),
    )
    .unwrap();
    let o = tcefuzz(&["fuzz", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["programs.jsonl", "crashes.jsonl", "divergences.jsonl", "reduced.jsonl", "clusters.jsonl", "report.json"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let clusters = dir.path().join("clusters.jsonl");
    assert!(tcefuzz(&["dedup", out.to_str().unwrap(), "--out", clusters.to_str().unwrap()]).status.success());
    assert_eq!(std::fs::read(&clusters).unwrap(), std::fs::read(out.join("clusters.jsonl")).unwrap());
    let r = tcefuzz(&["report", out.to_str().unwrap()]);
    assert!(stdout(&r).contains("Correct programs %"));
}

#[test]
fn stdlib_flag_overrides_the_library() {
    let ok = tcefuzz(&["--stdlib", "stdlib.tl", "check", "corpus/seeds/s01_fibonacci.tl"]);
    assert_eq!(ok.status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let lib = dir.path().join("tiny.tl");
    std::fs::write(&lib, "native class Any\n").unwrap();
    assert_eq!(tcefuzz(&["--stdlib", lib.to_str().unwrap(), "check", "corpus/seeds/s01_fibonacci.tl"]).status.code(), Some(2));
    assert_eq!(tcefuzz(&["--stdlib", "no/such/file.tl", "check", "corpus/seeds/s01_fibonacci.tl"]).status.code(), Some(2));
}
