use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use tcefuzz::baseline::{grammar_generate, mutate_random, GrammarConfig, VarSkeleton};
use tcefuzz::campaign::{iteration_rng, load_seeds, persist, run_campaign, CampaignConfig, CorpusError, Report, Strategy};
use tcefuzz::exec::external::ExternalCompiler;
use tcefuzz::exec::{check_differential, compile_and_run, interpret, AllowList, ExecutionResult, FaultSet, Limits, Outcome};
use tcefuzz::gen::{generation_phase, ExprPool, GenConfig, PoolRecord};
use tcefuzz::lang::{anonymize_names, parse, print, SyntaxTree};
use tcefuzz::mutate::{tce_mutate, MutConfig};
use tcefuzz::stdlib::Stdlib;
use tcefuzz::triage::{classify, dedup, reduce_input, BugRecord, DEFAULT_BUDGET};
use tcefuzz::types::check_program;

#[derive(Parser)]
#[command(name = "tcefuzz", version, about = "Type-centric enumeration fuzzer for the TL compiler")]
struct Cli {
    /// Standard library source to use instead of the bundled one.
    #[arg(long, global = true)]
    stdlib: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and typecheck a program.
    Check { file: PathBuf },
    /// Build the expression pool of a seed.
    Generate {
        seed: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        rng_seed: u64,
        /// Salt for renaming the gen seed's declarations; `mutate` must use the same one.
        #[arg(long, default_value_t = 0)]
        salt: u64,
    },
    /// Run one TCE mutation.
    Mutate {
        mut_seed: PathBuf,
        #[arg(long)]
        gen_seed: PathBuf,
        /// Pool file from `generate`; built from the gen seed when absent.
        #[arg(long)]
        pool: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        rng_seed: u64,
        /// Salt for renaming the gen seed's declarations; `mutate` must use the same one.
        #[arg(long, default_value_t = 0)]
        salt: u64,
    },
    /// Produce programs with a baseline generator.
    Baseline {
        #[arg(long, value_enum)]
        strategy: BaselineKind,
        /// Seed program, or `none` for the grammar generator.
        #[arg(long, default_value = "none")]
        seed: String,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        rng_seed: u64,
    },
    /// Execute a program on one backend or an external compiler.
    Run {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "vm")]
        backend: Backend,
        #[arg(long, default_value = "")]
        faults: String,
        /// Write trace events as JSON lines.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// External compiler command; `{file}` is replaced by the source path.
        #[arg(long)]
        external_cmd: Option<String>,
        /// Regex over the external output that marks a crash.
        #[arg(long)]
        crash_pattern: Option<String>,
    },
    /// Compare both backends on a program.
    Diff {
        file: PathBuf,
        #[arg(long, default_value = "")]
        faults: String,
    },
    /// Shrink a bug-triggering program.
    Reduce {
        file: PathBuf,
        /// Signature to preserve; defaults to the input's own.
        #[arg(long)]
        goal_signature: Option<String>,
        #[arg(long, default_value = "all")]
        faults: String,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
    },
    /// Cluster the bug records of a campaign output directory.
    Dedup {
        dir: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the summary table of a campaign output directory.
    Report { dir: PathBuf },
    /// Run a campaign.
    Fuzz {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the strategy from the config.
        #[arg(long)]
        strategy: Option<Strategy>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the effective configuration and exit.
        #[arg(long)]
        dump_config: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineKind {
    Spe,
    Mutate,
    Grammar,
}

#[derive(Clone, Copy, ValueEnum)]
enum Backend {
    Interp,
    Vm,
}

/// Failure carrying a specific exit status.
#[derive(Debug)]
struct Exit(u8, String);

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.1)
    }
}

impl std::error::Error for Exit {}

fn config_error(e: impl std::fmt::Display) -> anyhow::Error {
    Exit(2, format!("config error: {e}")).into()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("tcefuzz: {e:#}");
            ExitCode::from(e.downcast_ref::<Exit>().map_or(1, |x| x.0))
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    if let Some(p) = &cli.stdlib {
        let std = Stdlib::load(p).map_err(config_error)?;
        let _ = Stdlib::install(std);
    }
    match cli.cmd {
        Cmd::Check { file } => check(&file),
        Cmd::Generate { seed, out, rng_seed, salt } => generate(&seed, out.as_deref(), rng_seed, salt),
        Cmd::Mutate { mut_seed, gen_seed, pool, rng_seed, salt } => {
            mutate(&mut_seed, &gen_seed, pool.as_deref(), rng_seed, salt)
        },
        Cmd::Baseline { strategy, seed, count, rng_seed } => baseline(strategy, &seed, count, rng_seed),
        Cmd::Run { file, backend, faults, trace, external_cmd, crash_pattern } => {
            run_program(&file, backend, &faults, trace.as_deref(), external_cmd, crash_pattern)
        }
        Cmd::Diff { file, faults } => diff(&file, &faults),
        Cmd::Reduce { file, goal_signature, faults, budget } => reduce(&file, goal_signature, &faults, budget),
        Cmd::Dedup { dir, out } => dedup_dir(&dir, out.as_deref()),
        Cmd::Report { dir } => report(&dir),
        Cmd::Fuzz { config, strategy, out, dump_config } => fuzz(config.as_deref(), strategy, out, dump_config),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_tree(path: &Path) -> Result<SyntaxTree> {
    let src = read(path)?;
    parse(&src).map_err(|e| anyhow!("{}:{}", path.display(), e.render(&src)))
}

fn load_checked(path: &Path) -> Result<SyntaxTree> {
    let t = load_tree(path)?;
    if let Err(e) = check_program(&t) {
        bail!("{}: {e}", path.display());
    }
    Ok(t)
}

fn parse_faults(s: &str) -> Result<FaultSet> {
    FaultSet::parse(s).map_err(|e| anyhow!("{e}"))
}

fn check(file: &Path) -> Result<u8> {
    let src = read(file)?;
    let tree = match parse(&src) {
        Ok(t) => t,
        Err(e) => {
            println!("{}", e.render(&src));
            return Ok(1);
        }
    };
    match check_program(&tree) {
        Ok(_) => Ok(0),
        Err(errs) => {
            for e in &errs.0 {
                let (l, c) = tree.spans.get(&e.node).map_or((0, 0), |s| s.line_col(&src));
                println!("{l}:{c}: {}", e.message);
            }
            Ok(1)
        }
    }
}

fn generate(seed: &Path, out: Option<&Path>, rng_seed: u64, salt: u64) -> Result<u8> {
    let tree = anonymize_names(&load_checked(seed)?, salt);
    let mut rng = iteration_rng(rng_seed, 0);
    let pool = generation_phase(&tree, &GenConfig::default(), &mut rng);
    let mut sink: Box<dyn Write> = match out {
        Some(p) => Box::new(fs::File::create(p).with_context(|| format!("cannot create {}", p.display()))?),
        None => Box::new(std::io::stdout().lock()),
    };
    for r in pool.records() {
        serde_json::to_writer(&mut sink, &r)?;
        sink.write_all(b"\n")?;
    }
    sink.flush()?;
    Ok(0)
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let f = fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).with_context(|| format!("{}:{}", path.display(), i + 1))?);
    }
    Ok(out)
}

fn mutate(mut_seed: &Path, gen_seed: &Path, pool: Option<&Path>, rng_seed: u64, salt: u64) -> Result<u8> {
    let m = load_checked(mut_seed)?;
    let g = load_checked(gen_seed)?;
    let cfg = MutConfig::default();
    let mut rng = iteration_rng(rng_seed, 0);
    let g = anonymize_names(&g, salt);
    let pool = match pool {
        Some(p) => {
            let recs: Vec<PoolRecord> = read_jsonl(p)?;
            ExprPool::from_records(&recs).map_err(|e| anyhow!("{}: {e}", p.display()))?
        }
        None => generation_phase(&g, &cfg.gen, &mut rng),
    };
    let (out, _) = tce_mutate(&m, &g, &pool, &cfg, &mut rng);
    print!("{}", print(&out)?);
    Ok(0)
}

fn baseline(kind: BaselineKind, seed: &str, count: usize, rng_seed: u64) -> Result<u8> {
    let seed_tree = if seed == "none" { None } else { Some(load_checked(Path::new(seed))?) };
    let need_seed = || seed_tree.as_ref().ok_or_else(|| anyhow!("this strategy needs --seed <file>"));
    let mut programs = Vec::new();
    match kind {
        BaselineKind::Spe => {
            let sk = VarSkeleton::new(need_seed()?).map_err(|e| anyhow!("{e}"))?;
            for i in 0..count {
                let mut rng = iteration_rng(rng_seed, i as u64);
                let fill = sk.sample(&mut rng).unwrap_or_else(|| sk.original());
                programs.push(sk.instantiate(&fill));
            }
        }
        BaselineKind::Mutate => {
            let s = need_seed()?;
            for i in 0..count {
                programs.push(mutate_random(s, &mut iteration_rng(rng_seed, i as u64)));
            }
        }
        BaselineKind::Grammar => {
            let cfg = GrammarConfig::default();
            for i in 0..count {
                programs.push(grammar_generate(&cfg, &mut iteration_rng(rng_seed, i as u64)));
            }
        }
    }
    for (i, p) in programs.iter().enumerate() {
        if i > 0 {
            println!("// ----");
        }
        print!("{}", print(p)?);
    }
    Ok(0)
}

fn describe(r: &ExecutionResult) -> String {
    match &r.outcome {
        Outcome::Completed => "completed".to_string(),
        Outcome::RuntimeError { kind, message } => format!("runtime error {kind:?}: {message}"),
        Outcome::CompilerCrash { phase, kind, location, signature } => {
            format!("compiler crash ({phase:?}) {kind} at {location} [{signature:016x}]")
        }
        Outcome::Timeout { wall } => format!("timeout{}", if *wall { " (wall clock)" } else { "" }),
    }
}

fn run_program(
    file: &Path,
    backend: Backend,
    faults: &str,
    trace: Option<&Path>,
    external: Option<String>,
    crash_pattern: Option<String>,
) -> Result<u8> {
    let limits = Limits::default();
    let res = if let Some(cmd) = external {
        let mut c = ExternalCompiler::new(&cmd);
        if let Some(p) = crash_pattern {
            c.crash_pattern = Some(regex::Regex::new(&p).context("bad --crash-pattern")?);
        }
        c.run(&read(file)?)?
    } else {
        let tree = load_tree(file)?;
        let r = match backend {
            Backend::Interp => interpret(&tree, &limits),
            Backend::Vm => compile_and_run(&tree, parse_faults(faults)?, &limits),
        };
        r.map_err(|e| anyhow!("{}: {e}", file.display()))?
    };
    for line in res.output() {
        println!("{line}");
    }
    if let Some(p) = trace {
        let mut f = std::io::BufWriter::new(fs::File::create(p)?);
        for ev in &res.trace {
            serde_json::to_writer(&mut f, ev)?;
            f.write_all(b"\n")?;
        }
        f.flush()?;
    }
    eprintln!("{}", describe(&res));
    Ok(match res.outcome {
        Outcome::Completed => 0,
        _ => 1,
    })
}

fn diff(file: &Path, faults: &str) -> Result<u8> {
    let tree = load_tree(file)?;
    let v = check_differential(&tree, parse_faults(faults)?, &Limits::default(), &AllowList::default())
        .map_err(|e| anyhow!("{}: {e}", file.display()))?;
    let bug = v.is_bug();
    match v {
        tcefuzz::exec::Verdict::Agree => println!("agree"),
        tcefuzz::exec::Verdict::Crash { phase, kind, location, signature } => {
            println!("crash ({phase:?}) {kind} at {location} [{signature:016x}]")
        }
        tcefuzz::exec::Verdict::Diverge(r) => println!("{}", serde_json::to_string_pretty(&r)?),
    }
    Ok(if bug { 1 } else { 0 })
}

fn reduce(file: &Path, signature: Option<String>, faults: &str, budget: usize) -> Result<u8> {
    let tree = load_tree(file)?;
    let faults = parse_faults(faults)?;
    let limits = Limits::default();
    let allow = AllowList::default();
    let want = match signature {
        Some(s) => s,
        None => classify(&tree, faults, &limits, &allow).ok_or_else(|| anyhow!("the input triggers no bug"))?.signature,
    };
    let goal = |t: &SyntaxTree| classify(t, faults, &limits, &allow).is_some_and(|f| f.signature == want);
    let r = reduce_input(&tree, &goal, budget).map_err(|e| anyhow!("{e}"))?;
    print!("{}", print(&r.tree)?);
    eprintln!("tokens {} -> {} in {} evaluations ({:?})", r.tokens_before, r.tokens_after, r.evaluations, r.status);
    Ok(0)
}

fn dedup_dir(dir: &Path, out: Option<&Path>) -> Result<u8> {
    let mut bugs: Vec<BugRecord> = Vec::new();
    for name in ["crashes.jsonl", "divergences.jsonl"] {
        let p = dir.join(name);
        if p.exists() {
            bugs.extend(read_jsonl::<BugRecord>(&p)?);
        }
    }
    bugs.sort_by(|a, b| a.id.cmp(&b.id));
    let clusters = dedup(&bugs);
    let mut sink: Box<dyn Write> = match out {
        Some(p) => Box::new(fs::File::create(p)?),
        None => Box::new(std::io::stdout().lock()),
    };
    for c in &clusters {
        serde_json::to_writer(&mut sink, c)?;
        sink.write_all(b"\n")?;
    }
    sink.flush()?;
    eprintln!("{} records in {} clusters", bugs.len(), clusters.len());
    Ok(0)
}

fn report(dir: &Path) -> Result<u8> {
    let p = dir.join("report.json");
    let r: Report = serde_json::from_str(&read(&p)?).with_context(|| format!("bad {}", p.display()))?;
    print!("{}", r.render_table());
    Ok(0)
}

fn fuzz(config: Option<&Path>, strategy: Option<Strategy>, out: Option<PathBuf>, dump: bool) -> Result<u8> {
    let mut cfg = match config {
        Some(p) => CampaignConfig::load(p).map_err(config_error)?,
        None => CampaignConfig::default(),
    };
    if let Some(s) = strategy {
        cfg.strategy = s;
    }
    if out.is_some() {
        cfg.out = out;
    }
    cfg.apply_env().map_err(config_error)?;
    cfg.validate().map_err(config_error)?;
    if dump {
        print!("{}", cfg.to_toml());
        return Ok(0);
    }
    if let Some(p) = &cfg.stdlib {
        let std = Stdlib::load(p).map_err(config_error)?;
        if let Err(active) = Stdlib::install(std) {
            if active.source != read(p)? {
                return Err(config_error("a different stdlib is already active"));
            }
        }
    }
    let seeds = if cfg.strategy.needs_corpus() {
        match load_seeds(&cfg.corpus) {
            Ok(s) => s,
            Err(CorpusError::EmptyCorpus(_)) => {
                return Err(Exit(3, format!("no usable seeds in {}", cfg.corpus.display())).into());
            }
            Err(e) => return Err(Exit(3, e.to_string()).into()),
        }
    } else {
        Vec::new()
    };
    let result = run_campaign(&cfg, &seeds);
    if let Some(dir) = &cfg.out {
        persist(&result, dir).with_context(|| format!("cannot write {}", dir.display()))?;
    }
    print!("{}", result.report.render_table());
    eprintln!("{} programs in {:.1} s", result.stats.generated, result.elapsed_ms as f64 / 1000.0);
    Ok(0)
}
