//! Hot kernels under a one-thread pool and the full pool. Build with
//! `--no-default-features` to measure the sequential fallback itself.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use vortexlab_core::energy::{energy_gradient, gl_energy};
use vortexlab_core::geometry::{Lattice, Stencil};
use vortexlab_core::laplace::{harmonic_extension, LaplaceOptions};
use vortexlab_core::relax::{minimize_dirichlet, Initializer, SolveOptions};
use vortexlab_core::{data, C64};

#[cfg(feature = "parallel")]
fn modes() -> Vec<(String, Option<rayon::ThreadPool>)> {
    let pool = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    let all = rayon::current_num_threads();
    let mut m = vec![("threads=1".to_string(), Some(pool(1)))];
    if all > 1 {
        m.push((format!("threads={all}"), Some(pool(all))));
    }
    m
}

#[cfg(not(feature = "parallel"))]
fn modes() -> Vec<(String, Option<()>)> {
    vec![("sequential".into(), None)]
}

#[cfg(feature = "parallel")]
fn within<T: Send>(pool: &Option<rayon::ThreadPool>, f: impl FnOnce() -> T + Send) -> T {
    pool.as_ref().unwrap().install(f)
}

#[cfg(not(feature = "parallel"))]
fn within<T>(_: &Option<()>, f: impl FnOnce() -> T) -> T {
    f()
}

fn kernels(c: &mut Criterion) {
    let lat = Lattice::ball(1.0, 1.0 / 32.0).unwrap();
    let u = lat.field_from_fn(data::vortex_line);
    let mut out = vec![C64::new(0.0, 0.0); lat.len()];
    let boundary = lat.scalar_from_fn(|x| x[0] * x[0] - x[1] * x[1]);
    let free: Vec<bool> = (0..lat.len()).map(|i| lat.is_interior(i)).collect();
    let small = Lattice::ball(1.0, 1.0 / 12.0).unwrap();
    let g = small.field_from_fn(data::vortex_line);
    let opts = SolveOptions {
        inits: vec![Initializer::Harmonic],
        max_iters: 200,
        ..Default::default()
    };

    let mut group = c.benchmark_group("kernels");
    group.sample_size(10);
    for (label, pool) in modes() {
        group.bench_function(BenchmarkId::new("gl_energy", &label), |b| {
            b.iter(|| within(&pool, || black_box(gl_energy(&lat, &u.0, 0.1, None))))
        });
        group.bench_function(BenchmarkId::new("energy_gradient", &label), |b| {
            b.iter(|| within(&pool, || energy_gradient(&lat, &u.0, 0.1, None, black_box(&mut out))))
        });
        group.bench_function(BenchmarkId::new("harmonic_extension", &label), |b| {
            b.iter(|| {
                let mut x: Vec<f64> = (0..lat.len())
                    .map(|i| if free[i] { 0.0 } else { boundary[i] })
                    .collect();
                within(&pool, || {
                    black_box(harmonic_extension(&lat, &mut x, &free, &LaplaceOptions::default()))
                })
            })
        });
        group.bench_function(BenchmarkId::new("minimize_200_iters", &label), |b| {
            b.iter(|| within(&pool, || black_box(minimize_dirichlet(&small, &g, 0.2, &opts))))
        });
    }
    group.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);
