use std::path::Path;

use criterion::{criterion_group, criterion_main, Criterion};

use tcefuzz::campaign::{load_seeds, map_range, run_iteration, CampaignConfig, Producer, Strategy};
use tcefuzz::exec::FaultSet;

const ITERATIONS: u64 = 32;

fn bench(c: &mut Criterion) {
    let seeds = load_seeds(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus/seeds")).unwrap();
    let cfg = CampaignConfig { strategy: Strategy::Tce, faults: FaultSet::all(), reduce: false, ..CampaignConfig::default() };
    let p = Producer::new(&cfg, &seeds);
    let workers = std::thread::available_parallelism().map_or(4, |n| n.get().max(2));
    let mut g = c.benchmark_group("tce_iterations");
    g.sample_size(10);
    g.bench_function("sequential", |b| b.iter(|| map_range(0..ITERATIONS, 1, |i| run_iteration(&p, i))));
    g.bench_function(format!("parallel_{workers}"), |b| b.iter(|| map_range(0..ITERATIONS, workers, |i| run_iteration(&p, i))));
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
