//! QZE/AZE phase structure of the Lorentzian model.
//!
//! For |detuning| > delta the measured rate crosses the free rate at a
//! detector coupling eta_b and peaks at eta_m; both are independent of the
//! detection efficiency. On resonance the decay is suppressed for every
//! eta. The sweep reproduces this phase structure on a dimensionless
//! (|detuning|/delta, eta/delta) grid.

use std::f64::consts::PI;
use std::io::{self, Write};

use serde::Serialize;
use thiserror::Error;

use crate::model::{Classification, LorentzianModel};
use crate::spectral::measured_rate_lorentzian;

#[derive(Debug, Clone, Error)]
pub enum PhaseMapError {
    #[error("no interior maximum: |detuning| = {detuning} does not exceed delta = {delta}")]
    NoInteriorMaximum { detuning: f64, delta: f64 },
    #[error("invalid sweep parameters: {0}")]
    InvalidSweep(String),
}

/// Detector coupling at which the measured rate equals the free rate:
/// eta_b = (detuning^2 - delta^2) / (pi delta). `None` when |detuning| does
/// not exceed delta (the decay is then suppressed at every eta).
/// Independent of eps_inf.
pub fn phase_boundary(detuning: f64, delta: f64) -> Option<f64> {
    assert!(delta > 0.0, "delta must be positive");
    let eta = (detuning * detuning - delta * delta) / (PI * delta);
    (eta > 0.0).then_some(eta)
}

/// Detector coupling maximizing the measured rate:
/// eta_m = (|detuning| - delta) / pi, for |detuning| > delta.
/// Independent of eps_inf.
pub fn max_effect_eta(detuning: f64, delta: f64) -> Option<f64> {
    assert!(delta > 0.0, "delta must be positive");
    let eta = (detuning.abs() - delta) / PI;
    (eta > 0.0).then_some(eta)
}

/// Peak rate ratio Gamma(eta_m)/Gamma_0 = eps_inf + (1 - eps_inf)
/// (detuning^2 + delta^2) / (2 delta |detuning|), from direct maximization
/// of the closed-form rate over eta.
pub fn max_rate_ratio(detuning: f64, delta: f64, eps_inf: f64) -> Result<f64, PhaseMapError> {
    if detuning.abs() <= delta {
        return Err(PhaseMapError::NoInteriorMaximum { detuning, delta });
    }
    let d2 = detuning * detuning;
    Ok(eps_inf + (1.0 - eps_inf) * (d2 + delta * delta) / (2.0 * delta * detuning.abs()))
}

/// Grid of rate ratios and classifications over dimensionless axes
/// x = |detuning|/delta (rows) and y = eta/delta (columns), row-major.
#[derive(Debug, Clone, Serialize)]
pub struct PhaseMap {
    pub detuning_over_delta: Vec<f64>,
    pub eta_over_delta: Vec<f64>,
    pub ratio: Vec<f64>,
    pub class: Vec<Classification>,
    pub eps_inf: f64,
}

impl PhaseMap {
    pub fn n_detuning(&self) -> usize {
        self.detuning_over_delta.len()
    }

    pub fn n_eta(&self) -> usize {
        self.eta_over_delta.len()
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n_eta() + j
    }

    pub fn ratio_at(&self, i: usize, j: usize) -> f64 {
        self.ratio[self.idx(i, j)]
    }

    pub fn class_at(&self, i: usize, j: usize) -> Classification {
        self.class[self.idx(i, j)]
    }

    /// For each detuning column, the eta/delta value where the ratio crosses
    /// down through one (linear interpolation between grid rows). `None` for
    /// columns where the grid resolves no enhanced region: either there is
    /// no boundary at all or it lies below the first positive eta row.
    pub fn recovered_boundary(&self) -> Vec<Option<f64>> {
        (0..self.n_detuning())
            .map(|i| {
                for j in 1..self.n_eta() {
                    let (a, b) = (self.ratio_at(i, j - 1), self.ratio_at(i, j));
                    if self.class_at(i, j - 1) == Classification::Aze
                        && self.class_at(i, j) != Classification::Aze
                    {
                        let f = (1.0 - a) / (b - a);
                        return Some(
                            self.eta_over_delta[j - 1]
                                + f * (self.eta_over_delta[j] - self.eta_over_delta[j - 1]),
                        );
                    }
                }
                None
            })
            .collect()
    }

    /// CSV with header `detuning_over_delta,eta_over_delta,ratio,class`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "detuning_over_delta,eta_over_delta,ratio,class")?;
        for i in 0..self.n_detuning() {
            for j in 0..self.n_eta() {
                writeln!(
                    w,
                    "{:.12e},{:.12e},{:.12e},{}",
                    self.detuning_over_delta[i],
                    self.eta_over_delta[j],
                    self.ratio_at(i, j),
                    self.class_at(i, j)
                )?;
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("PhaseMap serializes")
    }
}

/// Classify the (|detuning|/delta, eta/delta) rectangle [0, detuning_max] x
/// [0, eta_max] on an n_detuning x n_eta grid, at fixed eps_inf.
///
/// Cells are independent; the row-major output order is deterministic.
pub fn sweep(
    detuning_max: f64,
    eta_max: f64,
    n_detuning: usize,
    n_eta: usize,
    eps_inf: f64,
) -> Result<PhaseMap, PhaseMapError> {
    if !(detuning_max > 0.0 && eta_max > 0.0) || !(detuning_max.is_finite() && eta_max.is_finite())
    {
        return Err(PhaseMapError::InvalidSweep(format!(
            "ranges must be positive and finite (got {detuning_max}, {eta_max})"
        )));
    }
    if n_detuning < 2 || n_eta < 2 {
        return Err(PhaseMapError::InvalidSweep(format!(
            "grid must be at least 2x2 (got {n_detuning}x{n_eta})"
        )));
    }
    if !(0.0..=1.0).contains(&eps_inf) {
        return Err(PhaseMapError::InvalidSweep(format!(
            "eps_inf must lie in [0, 1] (got {eps_inf})"
        )));
    }

    let xs: Vec<f64> = (0..n_detuning)
        .map(|i| detuning_max * i as f64 / (n_detuning - 1) as f64)
        .collect();
    let ys: Vec<f64> = (0..n_eta)
        .map(|j| eta_max * j as f64 / (n_eta - 1) as f64)
        .collect();

    let mut ratio = Vec::with_capacity(n_detuning * n_eta);
    let mut class = Vec::with_capacity(n_detuning * n_eta);
    for &x in &xs {
        for &y in &ys {
            // Work in units delta = 1; the ratio depends only on (x, y).
            let m = LorentzianModel::from_detuning(1.0, 1.0, x, y, eps_inf)
                .expect("sweep cell parameters are valid by construction");
            let r = measured_rate_lorentzian(&m);
            ratio.push(r.ratio);
            class.push(r.classification);
        }
    }
    Ok(PhaseMap {
        detuning_over_delta: xs,
        eta_over_delta: ys,
        ratio,
        class,
        eps_inf,
    })
}
