//! Fuzzing campaigns: seed loading, the iteration loop, bookkeeping and
//! persistence.

mod config;
mod report;

pub use config::{CampaignConfig, ConfigError, Strategy, SEED_ENV};
pub use report::{Report, TableRow, OMITTED_ROWS};

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baseline::{grammar_generate, mutate_random, VarSkeleton};
use crate::exec::{check_differential, Classification, Phase, Verdict};
use crate::gen::generation_phase;
use crate::lang::{anonymize_names, parse, print, SyntaxTree};
use crate::mutate::tce_mutate;
use crate::triage::{classify, dedup, finding, reduce_input, BugCluster, BugKind, BugRecord, DEFAULT_BUDGET};
use crate::types::check_program;

/// A corpus file that parses and typechecks.
#[derive(Clone, Debug)]
pub struct Seed {
    pub name: String,
    pub tree: SyntaxTree,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read corpus {0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("corpus {0} has no valid seed")]
    EmptyCorpus(PathBuf),
}

/// Loads every `.tl` file of `dir` in lexicographic order, skipping (with
/// a warning) files that do not parse or typecheck.
pub fn load_seeds(dir: &Path) -> Result<Vec<Seed>, CorpusError> {
    let rd = fs::read_dir(dir).map_err(|e| CorpusError::Io(dir.to_path_buf(), e))?;
    let mut paths: Vec<PathBuf> = rd
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "tl"))
        .collect();
    paths.sort();
    let mut out = Vec::new();
    for p in paths {
        let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let src = match fs::read_to_string(&p) {
            Ok(s) => s,
            Err(e) => {
                log::warn!("skipping seed {name}: {e}");
                continue;
            }
        };
        let tree = match parse(&src) {
            Ok(t) => t,
            Err(e) => {
                log::warn!("skipping seed {name}: {}", e.render(&src));
                continue;
            }
        };
        if let Err(e) = check_program(&tree) {
            log::warn!("skipping seed {name}: {e}");
            continue;
        }
        out.push(Seed { name, tree });
    }
    if out.is_empty() {
        return Err(CorpusError::EmptyCorpus(dir.to_path_buf()));
    }
    Ok(out)
}

/// The private stream of iteration `i`.
pub fn iteration_rng(seed: u64, i: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(i);
    r
}

/// Seeds plus anything a strategy precomputes from them.
pub struct Producer<'s> {
    strategy: Strategy,
    seeds: &'s [Seed],
    skeletons: Vec<Option<VarSkeleton>>,
    cfg: &'s CampaignConfig,
}

impl<'s> Producer<'s> {
    pub fn new(cfg: &'s CampaignConfig, seeds: &'s [Seed]) -> Producer<'s> {
        let skeletons = if cfg.strategy == Strategy::Spe {
            seeds.iter().map(|s| VarSkeleton::new(&s.tree).ok()).collect()
        } else {
            Vec::new()
        };
        Producer { strategy: cfg.strategy, seeds, skeletons, cfg }
    }

    /// One program together with the seeds it came from.
    pub fn produce(&self, rng: &mut ChaCha8Rng) -> (SyntaxTree, Vec<usize>) {
        let n = self.seeds.len();
        match self.strategy {
            Strategy::Grammar => (grammar_generate(&self.cfg.grammar, rng), Vec::new()),
            _ if n == 0 => (SyntaxTree::empty(), Vec::new()),
            Strategy::Tce => {
                let g = rng.gen_range(0..n);
                let m = rng.gen_range(0..n);
                let gen = anonymize_names(&self.seeds[g].tree, rng.gen());
                let pool = generation_phase(&gen, &self.cfg.mutation.gen, rng);
                let (out, _) = tce_mutate(&self.seeds[m].tree, &gen, &pool, &self.cfg.mutation, rng);
                (out, vec![g, m])
            }
            Strategy::Spe => {
                let s = rng.gen_range(0..n);
                let t = match &self.skeletons[s] {
                    Some(sk) => sk.sample(rng).map(|f| sk.instantiate(&f)).unwrap_or_else(|| self.seeds[s].tree.clone()),
                    None => self.seeds[s].tree.clone(),
                };
                (t, vec![s])
            }
            Strategy::Mutate => {
                let s = rng.gen_range(0..n);
                (mutate_random(&self.seeds[s].tree, rng), vec![s])
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Valid,
    Invalid,
    FrontendCrashed,
}

/// Everything recorded about one iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub index: u64,
    pub seeds: Vec<String>,
    pub status: Status,
    pub verdict: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub finding: Option<crate::triage::Finding>,
    pub program: String,
}

/// Produces and tests iteration `i`.
pub fn run_iteration(p: &Producer<'_>, i: u64) -> IterationRecord {
    let cfg = p.cfg;
    let mut rng = iteration_rng(cfg.seed, i);
    let (tree, used) = p.produce(&mut rng);
    let program = print(&tree).unwrap_or_default();
    let seeds = used.iter().map(|&k| p.seeds[k].name.clone()).collect();
    let (status, verdict, found) = match check_differential(&tree, cfg.faults, &cfg.limits, &cfg.allowlist) {
        Err(_) => (Status::Invalid, "invalid".to_string(), None),
        Ok(v) => {
            let status = match &v {
                Verdict::Crash { phase: Phase::Frontend, .. } => Status::FrontendCrashed,
                _ => Status::Valid,
            };
            let label = match &v {
                Verdict::Agree => "agree",
                Verdict::Crash { .. } => "crash",
                Verdict::Diverge(r) if r.classification == Classification::Allowlisted => "allowlisted",
                Verdict::Diverge(_) => "miscompilation",
            };
            let f = finding(&tree, &v, cfg.faults, &cfg.limits, &cfg.allowlist);
            (status, label.to_string(), f)
        }
    };
    IterationRecord { index: i, seeds, status, verdict, finding: found, program }
}

/// Only produces and typechecks iteration `i`.
pub fn iteration_is_valid(p: &Producer<'_>, i: u64) -> bool {
    let mut rng = iteration_rng(p.cfg.seed, i);
    check_program(&p.produce(&mut rng).0).is_ok()
}

/// Runs `f` over `range`, in parallel when enabled, keeping index order.
pub fn map_range<T: Send>(range: std::ops::Range<u64>, workers: usize, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    #[cfg(feature = "parallel")]
    if workers > 1 {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().expect("thread pool");
        return pool.install(|| range.into_par_iter().map(&f).collect());
    }
    let _ = workers;
    range.map(f).collect()
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CampaignStats {
    pub generated: u64,
    pub valid: u64,
    pub invalid: u64,
    pub frontend_crashed: u64,
    pub backend_crash_programs: u64,
    pub miscompilation_programs: u64,
    pub allowlisted: u64,
}

impl CampaignStats {
    fn add(&mut self, r: &IterationRecord) {
        self.generated += 1;
        match r.status {
            Status::Valid => self.valid += 1,
            Status::Invalid => self.invalid += 1,
            Status::FrontendCrashed => self.frontend_crashed += 1,
        }
        match r.finding.as_ref().map(|f| f.kind) {
            Some(BugKind::BackendCrash) => self.backend_crash_programs += 1,
            Some(BugKind::Miscompilation) => self.miscompilation_programs += 1,
            _ => {}
        }
        if r.verdict == "allowlisted" {
            self.allowlisted += 1;
        }
    }

    /// Share of programs that typecheck, frontend crashes included.
    pub fn validity(&self) -> f64 {
        if self.generated == 0 {
            0.0
        } else {
            (self.valid + self.frontend_crashed) as f64 / self.generated as f64
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedCluster {
    pub cluster: usize,
    pub tokens_before: usize,
    pub tokens_after: usize,
    pub evaluations: usize,
    pub program: String,
}

#[derive(Clone, Debug)]
pub struct CampaignResult {
    pub stats: CampaignStats,
    pub records: Vec<IterationRecord>,
    pub bugs: Vec<BugRecord>,
    pub clusters: Vec<BugCluster>,
    pub reduced: Vec<ReducedCluster>,
    pub report: Report,
    pub elapsed_ms: u128,
}

fn bug_records(records: &[IterationRecord]) -> Vec<BugRecord> {
    records
        .iter()
        .filter_map(|r| {
            r.finding.as_ref().map(|f| BugRecord {
                id: format!("it{:06}", r.index),
                kind: f.kind,
                signature: f.signature.clone(),
                detail: f.detail.clone(),
                program: r.program.clone(),
            })
        })
        .collect()
}

/// Runs a campaign over loaded seeds. With a time budget the loop runs in
/// batches and stops after the first batch that ends past the deadline.
pub fn run_campaign(cfg: &CampaignConfig, seeds: &[Seed]) -> CampaignResult {
    let start = Instant::now();
    let producer = Producer::new(cfg, seeds);
    let limit = cfg.iterations.unwrap_or(u64::MAX);
    let batch = (cfg.workers as u64 * 8).max(8);
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut next = 0u64;
    while next < limit {
        let end = match cfg.time_budget_s {
            Some(_) => (next + batch).min(limit),
            None => limit,
        };
        records.extend(map_range(next..end, cfg.workers, |i| run_iteration(&producer, i)));
        next = end;
        if cfg.time_budget_s.is_some_and(|b| start.elapsed().as_secs() >= b) {
            break;
        }
    }
    let mut stats = CampaignStats::default();
    for r in &records {
        stats.add(r);
    }
    let bugs = bug_records(&records);
    let clusters = dedup(&bugs);
    let reduced = if cfg.reduce { reduce_clusters(cfg, &clusters) } else { Vec::new() };
    let report = Report::new(cfg, &stats, &clusters);
    CampaignResult { stats, records, bugs, clusters, reduced, report, elapsed_ms: start.elapsed().as_millis() }
}

fn reduce_clusters(cfg: &CampaignConfig, clusters: &[BugCluster]) -> Vec<ReducedCluster> {
    map_range(0..clusters.len() as u64, cfg.workers, |k| {
        let c = &clusters[k as usize];
        let tree = parse(&c.representative).ok()?;
        let want = classify(&tree, cfg.faults, &cfg.limits, &cfg.allowlist)?;
        let goal = |t: &SyntaxTree| classify(t, cfg.faults, &cfg.limits, &cfg.allowlist).as_ref() == Some(&want);
        let r = reduce_input(&tree, &goal, DEFAULT_BUDGET).ok()?;
        Some(ReducedCluster {
            cluster: c.id,
            tokens_before: r.tokens_before,
            tokens_after: r.tokens_after,
            evaluations: r.evaluations,
            program: print(&r.tree).ok()?,
        })
    })
    .into_iter()
    .flatten()
    .collect()
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    for it in items {
        serde_json::to_writer(&mut f, it)?;
        f.write_all(b"\n")?;
    }
    f.flush()
}

/// Writes `programs`, `crashes`, `divergences`, `reduced` and `clusters`
/// as JSONL files plus `report.json` under `dir`.
pub fn persist(result: &CampaignResult, dir: &Path) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    write_jsonl(&dir.join("programs.jsonl"), &result.records)?;
    let (crashes, divs): (Vec<&BugRecord>, Vec<&BugRecord>) = result.bugs.iter().partition(|b| b.kind.is_crash());
    write_jsonl(&dir.join("crashes.jsonl"), &crashes)?;
    write_jsonl(&dir.join("divergences.jsonl"), &divs)?;
    write_jsonl(&dir.join("reduced.jsonl"), &result.reduced)?;
    write_jsonl(&dir.join("clusters.jsonl"), &result.clusters)?;
    fs::write(dir.join("report.json"), result.report.to_json())
}
