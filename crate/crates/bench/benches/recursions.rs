use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use filterstab_core::estimators::{estimate_gamma, EstimatorConfig};
use filterstab_core::filter::{wedge_init, FilterState};
use filterstab_core::{HmmSpec, Likelihoods, NoiseModel, SimplexVector, TransitionMatrix};
use std::hint::black_box;

fn gaussian_spec(d: usize) -> HmmSpec {
    let off = 1.0 / (d - 1) as f64;
    let rows: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| if i == j { 0.0 } else { off }).collect()).collect();
    let base = TransitionMatrix::new(&rows).unwrap();
    let means: Vec<f64> = (0..d).map(|i| i as f64).collect();
    HmmSpec::new(means.clone(), base, NoiseModel::gaussian(means, 1.0).unwrap(), 1e-2).unwrap()
}

fn steps(c: &mut Criterion) {
    let mut group = c.benchmark_group("step");
    for d in [2, 4, 8] {
        let spec = gaussian_spec(d);
        let lambda = spec.transitions();
        let mut lik = Likelihoods::new(d);
        spec.noise().likelihoods(0.3, &mut lik).unwrap();
        group.bench_with_input(BenchmarkId::new("filter", d), &d, |b, _| {
            let mut f = FilterState::new(SimplexVector::uniform(d));
            b.iter(|| black_box(f.advance(lambda, &lik).unwrap()));
        });
        group.bench_with_input(BenchmarkId::new("wedge", d), &d, |b, _| {
            let mut w = wedge_init(&SimplexVector::point_mass(d, 0), &SimplexVector::point_mass(d, d - 1)).unwrap();
            b.iter(|| black_box(w.advance(lambda, &lik).unwrap()));
        });
    }
    group.finish();
}

fn gamma(c: &mut Criterion) {
    let spec = HmmSpec::bsc(0.2, 0.5, 1e-2).unwrap();
    let cfg = EstimatorConfig::for_eps(2, 1e-2, 1).with_burn_in(1_000).with_horizon(101_000);
    c.bench_function("estimate_gamma/bsc/1e5", |b| b.iter(|| black_box(estimate_gamma(&spec, &cfg).unwrap())));
}

criterion_group!(benches, steps, gamma);
criterion_main!(benches);
