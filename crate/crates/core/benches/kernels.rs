//! Hot kernels on a one-thread pool versus the default pool. Build with
//! `--no-default-features` to time the plain sequential loops instead.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use iapvq::ap::{update_availabilities, update_responsibilities, MessageState};
use iapvq::imageio::{extract_blocks, BlockGeometry};
use iapvq::lbg::{init_random, lbg_refine, LBGConfig};
use iapvq::similarity::{apply_preference, build_similarity, PreferenceMode};
use iapvq::synth::piecewise_smooth_image;
use iapvq::{assign_nearest, TrainingSet};
use rayon::{ThreadPool, ThreadPoolBuilder};

fn blocks(side: usize) -> TrainingSet {
    let img = piecewise_smooth_image(1, side, side).unwrap();
    extract_blocks(&img, &BlockGeometry::fit(&img, 4, 4).unwrap()).unwrap()
}

fn pools() -> Vec<(String, ThreadPool)> {
    let default = ThreadPoolBuilder::new().build().unwrap();
    let name = format!("default_pool_{}_threads", default.current_num_threads());
    vec![
        ("one_thread".to_string(), ThreadPoolBuilder::new().num_threads(1).build().unwrap()),
        (name, default),
    ]
}

fn ap_iteration(c: &mut Criterion) {
    let ts = blocks(128);
    let sim = apply_preference(&build_similarity(&ts).unwrap(), PreferenceMode::NetworkSupport(0.5)).unwrap();
    let mut group = c.benchmark_group("ap_iteration_n1024");
    for (name, pool) in pools() {
        let mut state = MessageState::new(sim.n());
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                pool.install(|| {
                    update_responsibilities(&sim, &mut state, 0.5).unwrap();
                    update_availabilities(&mut state, 0.5).unwrap();
                })
            })
        });
    }
    group.finish();
}

fn similarity(c: &mut Criterion) {
    let ts = blocks(128);
    let mut group = c.benchmark_group("build_similarity_n1024");
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| build_similarity(&ts).unwrap()))
        });
    }
    group.finish();
}

fn nearest(c: &mut Criterion) {
    let ts = blocks(256);
    let cb = init_random(&ts, 256, 0).unwrap();
    let mut group = c.benchmark_group("assign_nearest_n4096_m256");
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| assign_nearest(&ts, &cb).unwrap()))
        });
    }
    group.finish();
}

fn lbg(c: &mut Criterion) {
    let ts = blocks(128);
    let cb = init_random(&ts, 64, 0).unwrap();
    let cfg = LBGConfig {
        max_iterations: 10,
        ..LBGConfig::default()
    };
    let mut group = c.benchmark_group("lbg_10_iterations_n1024_m64");
    group.sample_size(20);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| lbg_refine(&ts, &cb, &cfg).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, ap_iteration, similarity, nearest, lbg);
criterion_main!(benches);
