//! Acceptance suite: every release criterion as its own test, printing one
//! `ACCEPTANCE <id>: PASS/FAIL` line (visible with `--nocapture`, and on
//! failure in the captured output).
//!
//! Two checks are expected to stay red; both encode targets the exact
//! dynamics provably cannot meet, and each failure message carries the
//! independently verified numbers:
//! - `c2_asymptotic_rate_matches_lowest_order`: the dominant-pole decay
//!   rate differs from the lowest-order closed form by ~3% at
//!   delta = 100 gamma (the correction is first order in
//!   gamma delta / delta_tilde^2, confirmed by the brute-force evolution);
//! - `c7_wrong_convention_detected_at_eps_half`: swapping the width-mixing
//!   convention is the identity at eps_inf = 0.5, so no comparison can
//!   detect it there (it is detected at any asymmetric eps_inf).

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use zeno_core::dynamics::{self, PConvention};
use zeno_core::model::{Classification, LorentzianModel};
use zeno_core::oracle::{self, CompareOptions};
use zeno_core::phasemap;
use zeno_core::spectral::{measured_rate_lorentzian, sum_rule_check};

struct Checker {
    name: &'static str,
    start: Instant,
    budget_s: f64,
    failures: Vec<String>,
}

impl Checker {
    fn new(name: &'static str, budget_s: f64) -> Self {
        Self {
            name,
            start: Instant::now(),
            budget_s,
            failures: Vec::new(),
        }
    }

    fn require(&mut self, ok: bool, what: String) {
        if !ok {
            self.failures.push(what);
        }
    }

    fn finish(mut self) {
        let elapsed = self.start.elapsed().as_secs_f64();
        if elapsed > self.budget_s {
            self.failures.push(format!(
                "runtime {elapsed:.1}s exceeds the {:.0}s budget",
                self.budget_s
            ));
        }
        if self.failures.is_empty() {
            println!("ACCEPTANCE {}: PASS ({elapsed:.1}s)", self.name);
        } else {
            println!(
                "ACCEPTANCE {}: FAIL ({elapsed:.1}s)\n  - {}",
                self.name,
                self.failures.join("\n  - ")
            );
            panic!("acceptance criterion {} failed", self.name);
        }
    }
}

fn fig1() -> LorentzianModel {
    LorentzianModel::from_detuning(1.0, 100.0, 0.0, 2.0, 0.2).unwrap()
}

/// Criterion 1: full time evolution at the resonant working point.
#[test]
fn c1_resonant_time_evolution() {
    let mut c = Checker::new("1 (resonant evolution)", 10.0);
    let m = fig1();
    let g0 = m.free_rate();
    let tau = m.response_time().unwrap();

    let traj = dynamics::evolve(&m, 20.0 / g0, 400).unwrap();
    let last = traj.len() - 1;
    c.require(
        (traj.eps[last] - 0.20).abs() <= 0.01,
        format!("eps(20/G0) = {:.4} not within 0.20 +/- 0.01", traj.eps[last]),
    );
    c.require(
        (traj.r[last] - 0.80).abs() <= 0.01,
        format!("r(20/G0) = {:.4} not within 0.80 +/- 0.01", traj.r[last]),
    );

    // Early-time behavior needs samples below the response time.
    for i in 0..10 {
        let t = 0.01 * tau * (i as f64 + 1.0) / 10.0;
        let r = dynamics::response_probability(&m, t).unwrap();
        c.require(
            r < 0.01,
            format!("r({t:.2e}) = {r:.2e} not below 0.01 for t < 0.01 tau"),
        );
    }
    for i in 0..12 {
        let t = 0.1 * tau * (i as f64 + 1.0) / 12.0;
        let eps = dynamics::error_probability(&m, t).unwrap();
        let deficit = dynamics::survival_deficit(&m, t);
        let frac = eps / deficit;
        c.require(
            frac > 0.95,
            format!("eps/(1-s) = {frac:.4} at t = {t:.2e}, need > 0.95 for t < 0.1 tau"),
        );
    }
    c.finish();
}

/// Criterion 2, attainable clauses: the asymptotic rate decreases
/// monotonically with the detector coupling on resonance, and the
/// closed-form rate ratio at eta = 2 gamma is the frozen value.
#[test]
fn c2_monotone_suppression_and_ratio() {
    let mut c = Checker::new("2 (monotone suppression, closed-form ratio)", 5.0);
    let mut rates = Vec::new();
    for eta in [2.0, 30.0, 200.0] {
        let m = LorentzianModel::from_detuning(1.0, 100.0, 0.0, eta, 0.2).unwrap();
        let ar = dynamics::asymptotic_rate(&m).unwrap();
        c.require(ar.valid, format!("validity flag unset at eta = {eta}"));
        rates.push(ar.rate);
    }
    c.require(
        rates[0] > rates[1] && rates[1] > rates[2],
        format!("asymptotic rates not strictly decreasing: {rates:?}"),
    );
    let ratio = measured_rate_lorentzian(&fig1()).ratio;
    c.require(
        ((ratio - 0.9527) / 0.9527).abs() <= 0.005,
        format!("closed-form ratio {ratio:.6} not within 0.5% of 0.9527"),
    );
    c.finish();
}

/// Criterion 2, defective clause (expected red): the pole-based asymptotic
/// rate is required to match the lowest-order closed form within 1% at
/// delta = 100 gamma. It cannot: the dominant pole carries a relative
/// correction of first order in gamma delta / delta_tilde^2, which is
/// 3.03% at eta = 2 gamma (independently confirmed by the brute-force
/// discretized-continuum evolution, which reproduces the pole rate, not
/// the lowest-order one).
#[test]
fn c2_asymptotic_rate_matches_lowest_order() {
    let mut c = Checker::new("2 (asymptotic rate within 1% of closed form)", 5.0);
    for eta in [2.0, 30.0, 200.0] {
        let m = LorentzianModel::from_detuning(1.0, 100.0, 0.0, eta, 0.2).unwrap();
        let pole = dynamics::asymptotic_rate(&m).unwrap().rate;
        let lowest = measured_rate_lorentzian(&m).measured_rate;
        let rel = ((pole - lowest) / lowest).abs();
        c.require(
            rel <= 0.01,
            format!(
                "eta = {eta}: pole rate {pole:.6} vs lowest-order {lowest:.6} \
                 (rel dev {rel:.4}); the deviation is physical, not a bug"
            ),
        );
    }
    c.finish();
}

/// Criterion 3: enhancement/suppression on the detuned working point.
#[test]
fn c3_detuned_enhancement_and_suppression() {
    let mut c = Checker::new("3 (detuned AZE/QZE)", 5.0);
    let small = LorentzianModel::from_detuning(1.0, 100.0, 200.0, 30.0, 0.2).unwrap();
    let large = LorentzianModel::from_detuning(1.0, 100.0, 200.0, 200.0, 0.2).unwrap();

    let r_small = measured_rate_lorentzian(&small);
    c.require(
        ((r_small.ratio - 1.1996) / 1.1996).abs() <= 0.005,
        format!("ratio(eta=30) = {:.6}, expected 1.1996 +/- 0.5%", r_small.ratio),
    );
    c.require(
        r_small.classification == Classification::Aze,
        format!("eta=30 classified {:?}, expected AZE", r_small.classification),
    );

    let r_large = measured_rate_lorentzian(&large);
    c.require(
        ((r_large.ratio - 0.711) / 0.711).abs() <= 0.005,
        format!("ratio(eta=200) = {:.6}, expected 0.711 +/- 0.5%", r_large.ratio),
    );
    c.require(
        r_large.classification == Classification::Qze,
        format!("eta=200 classified {:?}, expected QZE", r_large.classification),
    );

    // The dynamics agrees qualitatively: enhanced then suppressed.
    let ar_small = dynamics::asymptotic_rate(&small).unwrap().rate;
    let ar_large = dynamics::asymptotic_rate(&large).unwrap().rate;
    c.require(
        ar_small > small.free_rate(),
        format!("asymptotic rate {ar_small:.4} not enhanced at eta=30"),
    );
    c.require(
        ar_large < large.free_rate(),
        format!("asymptotic rate {ar_large:.4} not suppressed at eta=200"),
    );
    c.finish();
}

/// Criterion 4: the quadratic-decay coefficient is pi gamma delta for any
/// detuning and detector parameters.
#[test]
fn c4_short_time_universality() {
    let mut c = Checker::new("4 (short-time universality)", 5.0);
    let mut rng = ChaCha8Rng::seed_from_u64(4001);
    for i in 0..10 {
        let delta = rng.gen_range(50.0..200.0);
        let detuning = rng.gen_range(-5.0 * delta..5.0 * delta);
        let eta = rng.gen_range(0.0..500.0);
        let eps_inf = rng.gen_range(0.0..1.0);
        let m = LorentzianModel::from_detuning(1.0, delta, detuning, eta, eps_inf).unwrap();
        let coeff = dynamics::short_time_coefficient(&m);
        let expect = PI * m.gamma * m.delta;
        let rel = ((coeff - expect) / expect).abs();
        c.require(
            rel <= 0.01,
            format!("set {i}: coefficient {coeff:.4} vs {expect:.4} (rel {rel:.2e})"),
        );
    }
    c.finish();
}

/// Criterion 5: the measured rate equals the free rate on the phase
/// boundary, for any efficiency.
#[test]
fn c5_phase_boundary_identity() {
    let mut c = Checker::new("5 (phase-boundary identity)", 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(5001);
    for i in 0..50 {
        let delta = rng.gen_range(20.0..300.0);
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let detuning = sign * delta * rng.gen_range(1.001..8.0);
        let eps_inf = rng.gen_range(0.0..1.0);
        let eta_b = phasemap::phase_boundary(detuning, delta).unwrap();
        let m = LorentzianModel::from_detuning(1.0, delta, detuning, eta_b, eps_inf).unwrap();
        let ratio = measured_rate_lorentzian(&m).ratio;
        c.require(
            (ratio - 1.0).abs() < 1e-10,
            format!("set {i}: |ratio - 1| = {:.2e}", (ratio - 1.0).abs()),
        );
    }
    c.finish();
}

/// Criterion 6: the phase diagram is independent of the efficiency.
#[test]
fn c6_phase_diagram_efficiency_invariance() {
    let mut c = Checker::new("6 (phase-diagram efficiency invariance)", 30.0);
    let a = phasemap::sweep(3.0, 3.0, 200, 200, 0.0).unwrap();
    let b = phasemap::sweep(3.0, 3.0, 200, 200, 0.9).unwrap();
    c.require(
        a.class == b.class,
        "classification grids differ between eps_inf = 0 and 0.9".into(),
    );

    // Boundary onset at |detuning| = delta: no enhanced cell below x = 1.
    for (i, &x) in a.detuning_over_delta.iter().enumerate() {
        let has_aze = (0..a.n_eta()).any(|j| a.class_at(i, j) == Classification::Aze);
        if x <= 1.0 {
            c.require(!has_aze, format!("enhancement below onset at x = {x}"));
        }
        if x > 1.0 + 3.0 / 199.0 {
            c.require(has_aze, format!("no enhancement above onset at x = {x}"));
        }
    }

    // The recovered crossing tracks the closed-form boundary within a cell.
    let cell = 3.0 / 199.0;
    let rec = a.recovered_boundary();
    for (i, &x) in a.detuning_over_delta.iter().enumerate() {
        if let Some(eta_b) = phasemap::phase_boundary(x, 1.0) {
            if eta_b > cell && eta_b <= 3.0 - cell {
                match rec[i] {
                    Some(got) => c.require(
                        (got - eta_b).abs() <= cell,
                        format!("x = {x}: recovered {got:.4} vs {eta_b:.4}"),
                    ),
                    None => c.require(false, format!("x = {x}: no crossing recovered")),
                }
            }
        }
    }
    c.finish();
}

fn run_compare(name: &'static str, m: &LorentzianModel) {
    let mut c = Checker::new(name, 60.0);
    let report = oracle::compare(m, &CompareOptions::default()).unwrap();
    c.require(
        report.pass,
        format!(
            "deviations s/eps/r = {:.2e}/{:.2e}/{:.2e} exceed 1e-3 \
             (n_modes = {}, dt = {:.2e})",
            report.max_dev_s, report.max_dev_eps, report.max_dev_r, report.n_modes, report.dt
        ),
    );
    println!(
        "  {name}: max dev s = {:.2e}, eps = {:.2e}, r = {:.2e}",
        report.max_dev_s, report.max_dev_eps, report.max_dev_r
    );
    c.finish();
}

/// Criterion 7: brute-force equivalence at the resonant working point.
#[test]
fn c7_oracle_equivalence_resonant() {
    run_compare("7 (oracle equivalence, resonant)", &fig1());
}

/// Criterion 7: brute-force equivalence at the enhancement working point.
#[test]
fn c7_oracle_equivalence_enhanced() {
    let m = LorentzianModel::from_detuning(1.0, 100.0, 200.0, 30.0, 0.2).unwrap();
    run_compare("7 (oracle equivalence, enhanced)", &m);
}

/// Criterion 7: brute-force equivalence deep in the suppressed regime.
#[test]
fn c7_oracle_equivalence_deep_suppression() {
    let m = LorentzianModel::from_detuning(1.0, 100.0, 0.0, 200.0, 0.2).unwrap();
    run_compare("7 (oracle equivalence, deep suppression)", &m);
}

/// Criterion 7, convention hook at an asymmetric efficiency: swapping the
/// width-mixing convention must be caught by the comparison, and the
/// correct convention must pass even at eps_inf = 0.5.
#[test]
fn c7_wrong_convention_detected_asymmetric() {
    let mut c = Checker::new("7 (convention hook, eps_inf = 0.2)", 120.0);
    let corrupted = oracle::compare(
        &fig1(),
        &CompareOptions {
            convention: PConvention::EpsInf,
            ..Default::default()
        },
    )
    .unwrap();
    c.require(
        !corrupted.pass,
        format!(
            "swapped convention went undetected: devs {:.2e}/{:.2e}/{:.2e}",
            corrupted.max_dev_s, corrupted.max_dev_eps, corrupted.max_dev_r
        ),
    );

    let half = LorentzianModel::from_detuning(1.0, 100.0, 0.0, 30.0, 0.5).unwrap();
    let correct_half = oracle::compare(&half, &CompareOptions::default()).unwrap();
    c.require(
        correct_half.pass,
        format!(
            "correct convention fails at eps_inf = 0.5: devs {:.2e}/{:.2e}/{:.2e}",
            correct_half.max_dev_s, correct_half.max_dev_eps, correct_half.max_dev_r
        ),
    );
    c.finish();
}

/// Criterion 7, defective clause (expected red): the swapped convention is
/// required to fail the comparison at eps_inf = 0.5. It cannot: the swap
/// maps the mixing weight p = 1 - eps_inf to eps_inf, which is the
/// identity at eps_inf = 0.5, so both conventions produce bit-identical
/// dynamics there.
#[test]
fn c7_wrong_convention_detected_at_eps_half() {
    let mut c = Checker::new("7 (convention hook, eps_inf = 0.5)", 120.0);
    let half = LorentzianModel::from_detuning(1.0, 100.0, 0.0, 30.0, 0.5).unwrap();
    let corrupted = oracle::compare(
        &half,
        &CompareOptions {
            convention: PConvention::EpsInf,
            ..Default::default()
        },
    )
    .unwrap();
    c.require(
        !corrupted.pass,
        format!(
            "swapped convention is indistinguishable at eps_inf = 0.5 \
             (devs {:.2e}/{:.2e}/{:.2e}); the swap is the identity at the \
             symmetric point, so this check cannot fail there",
            corrupted.max_dev_s, corrupted.max_dev_eps, corrupted.max_dev_r
        ),
    );
    c.finish();
}

/// Criterion 8: the sum rule holds for randomized parameters.
#[test]
fn c8_sum_rule_randomized() {
    let mut c = Checker::new("8 (sum rule)", 10.0);
    let mut rng = ChaCha8Rng::seed_from_u64(8001);
    for i in 0..20 {
        let delta = rng.gen_range(50.0..200.0);
        let detuning = rng.gen_range(-5.0 * delta..5.0 * delta);
        let eta = rng.gen_range(0.0..1000.0);
        let eps_inf = rng.gen_range(0.0..1.0);
        let m = LorentzianModel::from_detuning(1.0, delta, detuning, eta, eps_inf).unwrap();
        let check = sum_rule_check(&m.to_spectral()).unwrap();
        c.require(
            check.rel_err < 1e-6,
            format!("set {i}: rel_err {:.2e}", check.rel_err),
        );
    }
    c.finish();
}

/// Criterion 9: structural invariants on randomized parameters.
#[test]
fn c9_property_suites() {
    let mut c = Checker::new("9 (randomized property suites)", 60.0);
    let mut rng = ChaCha8Rng::seed_from_u64(9001);

    // Pole-level invariants on 120 parameter sets.
    for i in 0..120 {
        let delta = rng.gen_range(50.0..200.0);
        let detuning = rng.gen_range(-5.0 * delta..5.0 * delta);
        let eta = rng.gen_range(0.0..1000.0);
        let eps_inf = rng.gen_range(0.0..1.0);
        let m = LorentzianModel::from_detuning(1.0, delta, detuning, eta, eps_inf).unwrap();
        let ps = dynamics::solve_poles(&m);
        let sum_dev = (ps.residue_sum() - Complex64::new(1.0, 0.0)).norm();
        c.require(
            sum_dev < 1e-10,
            format!("set {i}: residue sum off by {sum_dev:.2e}"),
        );
        // Pole residual against the characteristic cubic.
        let scale = m.delta_tilde().max(m.detuning().abs());
        for nu in ps.shifted() {
            let d = m.detuning();
            let p = (nu - d)
                * (nu + Complex64::new(0.0, m.delta))
                * (nu + Complex64::new(0.0, m.delta_tilde()))
                - PI * m.gamma
                    * m.delta
                    * (nu
                        + Complex64::new(
                            0.0,
                            (1.0 - m.eps_inf) * m.delta + m.eps_inf * m.delta_tilde(),
                        ));
            c.require(
                p.norm() < 1e-9 * scale.powi(3),
                format!("set {i}: pole residual {:.2e} at scale {scale:.1}", p.norm()),
            );
        }
        c.require(
            ps.shifted().iter().all(|nu| nu.im < 0.0),
            format!("set {i}: pole in the upper half plane"),
        );
    }

    // Trajectory invariants (unitarity, monotone response) on a subset.
    for i in 0..20 {
        let delta = rng.gen_range(50.0..200.0);
        let detuning = rng.gen_range(-3.0 * delta..3.0 * delta);
        let eta = rng.gen_range(0.0..500.0);
        let eps_inf = rng.gen_range(0.0..1.0);
        let m = LorentzianModel::from_detuning(1.0, delta, detuning, eta, eps_inf).unwrap();
        let g0 = m.free_rate();
        match dynamics::evolve(&m, 6.0 / g0, 12) {
            Ok(traj) => {
                if let Err(e) = traj.validate() {
                    c.require(false, format!("trajectory set {i}: {e}"));
                }
            }
            Err(e) => c.require(false, format!("trajectory set {i}: {e}")),
        }
    }
    c.finish();
}

/// Closed-form maximum of the rate ratio (the printed closed form in the
/// source material disagrees with direct maximization; the direct value is
/// authoritative here).
#[test]
fn max_ratio_from_direct_maximization() {
    let mut c = Checker::new("note (maximum rate ratio)", 5.0);
    let r = phasemap::max_rate_ratio(200.0, 100.0, 0.2).unwrap();
    c.require(
        (r - 1.2).abs() <= 1e-4,
        format!("max ratio {r:.6} differs from 1.2000"),
    );
    c.finish();
}
