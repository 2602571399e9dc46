//! Compares the data-parallel run scheduler against the sequential baseline
//! on the three batch workloads: world generation, exploration, and offline
//! labeling. Build with `--no-default-features` to measure the pure
//! sequential core (both sides then run the same code).

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use topicworld::eval::batch_label;
use topicworld::exec;
use topicworld::explore::{explore, ExploreConfig, Policy};
use topicworld::model::Hyperparams;
use topicworld::worldgen::{sample_world, GenConfig};
use topicworld::GridWorld;

const RUNS: usize = 8;

fn gen_cfg(seed: u64) -> GenConfig {
    GenConfig {
        width: 24,
        height: 24,
        topics: 4,
        vocab_size: 80,
        alpha: 0.01,
        beta: 0.1,
        neighborhood_radius: 1,
        words_per_cell: 20,
        seed,
    }
}

fn test_worlds(n: usize) -> Vec<GridWorld> {
    (0..n as u64)
        .map(|s| sample_world(&gen_cfg(s)).unwrap().0)
        .collect()
}

fn bench_generation(c: &mut Criterion) {
    let mut g = c.benchmark_group("generate_worlds");
    g.sample_size(10);
    let seeds: Vec<u64> = (0..RUNS as u64).collect();
    g.bench_with_input(BenchmarkId::new("parallel", RUNS), &seeds, |b, seeds| {
        b.iter(|| {
            black_box(exec::map_runs(seeds.clone(), |s| {
                sample_world(&gen_cfg(s)).unwrap().0.num_cells()
            }))
        })
    });
    g.bench_with_input(BenchmarkId::new("sequential", RUNS), &seeds, |b, seeds| {
        b.iter(|| {
            black_box(exec::map_runs_seq(seeds.clone(), |s| {
                sample_world(&gen_cfg(s)).unwrap().0.num_cells()
            }))
        })
    });
    g.finish();
}

fn bench_exploration(c: &mut Criterion) {
    let worlds = test_worlds(RUNS);
    let hyper = Hyperparams::new(4, 80, 0.01, 0.1, 1);
    let run_one = move |hyper: &Hyperparams, (i, world): (usize, &GridWorld)| {
        let mut cfg = ExploreConfig::new(Policy::TopicPerplexity, 32, i as u64);
        cfg.refine_budget = 50;
        let (path, _) = explore(world, hyper, &cfg).unwrap();
        path.len()
    };

    let mut g = c.benchmark_group("explore_runs");
    g.sample_size(10);
    g.bench_function(BenchmarkId::new("parallel", RUNS), |b| {
        b.iter(|| {
            let items: Vec<_> = worlds.iter().enumerate().collect();
            black_box(exec::map_runs(items, |it| run_one(&hyper, it)))
        })
    });
    g.bench_function(BenchmarkId::new("sequential", RUNS), |b| {
        b.iter(|| {
            let items: Vec<_> = worlds.iter().enumerate().collect();
            black_box(exec::map_runs_seq(items, |it| run_one(&hyper, it)))
        })
    });
    g.finish();
}

fn bench_batch_label(c: &mut Criterion) {
    let worlds: Vec<GridWorld> = (0..RUNS as u64)
        .map(|s| {
            sample_world(&GenConfig {
                width: 12,
                height: 12,
                vocab_size: 50,
                words_per_cell: 10,
                ..gen_cfg(s)
            })
            .unwrap()
            .0
        })
        .collect();
    let hyper = Hyperparams::new(4, 50, 0.01, 0.1, 1);
    let label_one = move |hyper: &Hyperparams, (i, world): (usize, &GridWorld)| {
        let (map, _) = batch_label(world, hyper, 10, i as u64).unwrap();
        map.labels()[0]
    };

    let mut g = c.benchmark_group("batch_label_runs");
    g.sample_size(10);
    g.bench_function(BenchmarkId::new("parallel", RUNS), |b| {
        b.iter(|| {
            let items: Vec<_> = worlds.iter().enumerate().collect();
            black_box(exec::map_runs(items, |it| label_one(&hyper, it)))
        })
    });
    g.bench_function(BenchmarkId::new("sequential", RUNS), |b| {
        b.iter(|| {
            let items: Vec<_> = worlds.iter().enumerate().collect();
            black_box(exec::map_runs_seq(items, |it| label_one(&hyper, it)))
        })
    });
    g.finish();
}

criterion_group!(benches, bench_generation, bench_exploration, bench_batch_label);
criterion_main!(benches);
