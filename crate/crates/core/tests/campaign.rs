use std::path::Path;

use tcefuzz::campaign::{load_seeds, persist, run_campaign, CampaignConfig, ConfigError, CorpusError, Strategy};
use tcefuzz::exec::{Fault, FaultSet};

fn seeds_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus/seeds")
}

#[test]
fn config_round_trips_through_toml() {
    let mut c = CampaignConfig {
        strategy: Strategy::Spe,
        faults: FaultSet::only(Fault::FunrefArg),
        time_budget_s: Some(30),
        ..CampaignConfig::default()
    };
    c.mutation.gen.nest_decay = 0.25;
    let back = CampaignConfig::from_toml(&c.to_toml()).unwrap();
    assert_eq!(back, c);
}

#[test]
fn sample_config_loads() {
    let c = CampaignConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/campaign.toml")).unwrap();
    assert_eq!(c.faults, FaultSet::all());
    assert_eq!(c.time_budget_s, Some(600));
}

#[test]
fn invalid_configs_are_rejected() {
    assert!(matches!(CampaignConfig::from_toml("workers = 0"), Err(ConfigError::Invalid(_))));
    assert!(matches!(CampaignConfig::from_toml("[mutation]\nshrink = 1.5"), Err(ConfigError::Invalid(_))));
    assert!(matches!(CampaignConfig::from_toml("nonsense = true"), Err(ConfigError::Toml(_))));
    assert!(matches!(CampaignConfig::from_toml("faults = [\"no_such_fault\"]"), Err(ConfigError::Toml(_))));
}

#[test]
fn empty_corpus_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("broken.tl"), "fun (").unwrap();
    assert!(matches!(load_seeds(dir.path()), Err(CorpusError::EmptyCorpus(_))));
}

#[test]
fn grammar_campaign_needs_no_corpus() {
    let c = CampaignConfig { strategy: Strategy::Grammar, iterations: Some(20), reduce: false, ..CampaignConfig::default() };
    let r = run_campaign(&c, &[]);
    assert_eq!(r.stats.generated, 20);
    assert_eq!(r.stats.valid + r.stats.invalid + r.stats.frontend_crashed, 20);
}

#[test]
fn worker_count_does_not_change_results() {
    let seeds = load_seeds(&seeds_dir()).unwrap();
    let mut c = CampaignConfig { iterations: Some(24), faults: FaultSet::all(), reduce: false, ..CampaignConfig::default() };
    let one = run_campaign(&c, &seeds);
    c.workers = 3;
    let three = run_campaign(&c, &seeds);
    assert_eq!(one.stats, three.stats);
    assert_eq!(one.report.to_json(), three.report.to_json());
    let progs = |r: &tcefuzz::campaign::CampaignResult| r.records.iter().map(|x| x.program.clone()).collect::<Vec<_>>();
    assert_eq!(progs(&one), progs(&three));

    let dir = tempfile::tempdir().unwrap();
    persist(&one, dir.path()).unwrap();
    let lines = std::fs::read_to_string(dir.path().join("programs.jsonl")).unwrap().lines().count();
    assert_eq!(lines, 24);
}
