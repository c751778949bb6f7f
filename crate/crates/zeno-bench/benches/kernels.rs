use criterion::{black_box, criterion_group, criterion_main, Criterion};

use zeno_core::dynamics;
use zeno_core::model::LorentzianModel;
use zeno_core::oracle::DiscretizedSystem;
use zeno_core::phasemap;
use zeno_core::spectral;

fn fig1() -> LorentzianModel {
    LorentzianModel::from_detuning(1.0, 100.0, 0.0, 2.0, 0.2).unwrap()
}

fn bench_rates(c: &mut Criterion) {
    let m = fig1();
    let s = m.to_spectral();
    c.bench_function("measured_rate_lorentzian", |b| {
        b.iter(|| spectral::measured_rate_lorentzian(black_box(&m)))
    });
    c.bench_function("measured_rate_general_quadrature", |b| {
        b.iter(|| spectral::measured_rate_general(black_box(&s)).unwrap())
    });
}

fn bench_dynamics(c: &mut Criterion) {
    let m = fig1();
    c.bench_function("solve_poles", |b| {
        b.iter(|| dynamics::solve_poles(black_box(&m)))
    });
    c.bench_function("survival_t1", |b| {
        b.iter(|| dynamics::survival(black_box(&m), black_box(1.0)))
    });
    c.bench_function("error_probability_t1", |b| {
        b.iter(|| dynamics::error_probability(black_box(&m), black_box(1.0)).unwrap())
    });
}

fn bench_phasemap(c: &mut Criterion) {
    c.bench_function("sweep_50x50", |b| {
        b.iter(|| phasemap::sweep(3.0, 3.0, 50, 50, black_box(0.2)).unwrap())
    });
}

fn bench_oracle(c: &mut Criterion) {
    let m = fig1();
    let d_eff = m.delta_tilde();
    let window = (m.omega0 - 20.0 * d_eff, m.omega0 + 20.0 * d_eff);
    let sys = DiscretizedSystem::build(&m.to_spectral(), 400, window).unwrap();
    let dt = sys.default_dt();
    c.bench_function("oracle_integrate_400_modes_t0.05", |b| {
        b.iter(|| sys.integrate(black_box(0.05), dt).unwrap())
    });
}

criterion_group!(benches, bench_rates, bench_dynamics, bench_phasemap, bench_oracle);
criterion_main!(benches);
