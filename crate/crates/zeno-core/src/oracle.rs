//! Brute-force validation by direct integration of the microscopic model.
//!
//! The photon continuum is discretized on Gauss–Legendre panels; the
//! detector continuum is eliminated exactly (flat coupling gives each
//! photon mode a Markovian damping rate pi eta(k) feeding a classical
//! population accumulator). The resulting linear system of one atom
//! amplitude plus one amplitude per mode is integrated with a fixed-step
//! fourth-order Runge–Kutta scheme in the frame rotating at the atomic
//! transition energy.
//!
//! Node placement uses a finely spaced wedge around the transition energy
//! (which sets the recurrence horizon of the discretization) surrounded by
//! geometrically growing panels out to the window edges.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::dynamics::{self, DynamicsError, PConvention, TimeGrid, Trajectory};
use crate::model::{LorentzianModel, SpectralModel};
use crate::quad::{self, Tolerance};

/// Maximum tolerated drift of |f|^2 + sum |f_i|^2 + r from one.
pub const NORM_DRIFT_TOL: f64 = 1e-6;

/// Required relative agreement between the discretized coupling weight and
/// the integral of the density over the window.
pub const FIDELITY_TOL: f64 = 1e-4;

/// Maximum absolute trajectory deviation for a comparison to pass.
pub const COMPARE_TOL: f64 = 1e-3;

const NODES_PER_PANEL: usize = 16;

#[derive(Debug, Clone, Error)]
pub enum OracleError {
    #[error("window [{lo}, {hi}] must strictly contain omega0 = {omega0}")]
    WindowExcludesOmega0 { omega0: f64, lo: f64, hi: f64 },
    #[error("n_modes = {0} is too small; need at least 100")]
    TooFewModes(usize),
    #[error(
        "discretized coupling weight deviates from the window integral by {rel:.3e} \
         (tolerance {FIDELITY_TOL:.0e}); the densities vary faster than the node spacing"
    )]
    DiscretizationFidelity { rel: f64 },
    #[error("dt = {dt:.3e} does not resolve the fastest scale; need dt <= {max_dt:.3e}")]
    StepTooLarge { dt: f64, max_dt: f64 },
    #[error(
        "norm drifted by {drift:.3e} at t = {t} (tolerance {NORM_DRIFT_TOL:.0e}); reduce dt"
    )]
    NormDrift { t: f64, drift: f64 },
    #[error(
        "comparison horizon t_max = {t_max:.3} exceeds half the discretization recurrence \
         time {t_rec:.3}; increase n_modes"
    )]
    RecurrenceHorizon { t_max: f64, t_rec: f64 },
    #[error("quadrature failed while checking discretization fidelity: {0}")]
    Quadrature(#[from] quad::QuadError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// The microscopic model discretized to n modes plus the atom.
#[derive(Debug, Clone)]
pub struct DiscretizedSystem {
    omega0: f64,
    window: (f64, f64),
    wedge: (f64, f64),
    /// Mode energy relative to omega0.
    kappa: Vec<f64>,
    /// Coupling sqrt(J(k_i) w_i) per mode.
    g: Vec<f64>,
    /// Damping pi eta(k_i) per mode (zero on the undetected channel).
    pi_eta: Vec<f64>,
    /// k-grid shared by the channels (sorted), for diagnostics.
    k_grid: Vec<f64>,
    pe_max: f64,
}

/// Discretize a spectral model over `window` with at most `n_modes` photon
/// amplitudes (shared k-grid; one amplitude per active channel per node).
pub fn build(
    s: &SpectralModel,
    n_modes: usize,
    window: (f64, f64),
) -> Result<DiscretizedSystem, OracleError> {
    DiscretizedSystem::build(s, n_modes, window)
}

impl DiscretizedSystem {
    pub fn build(
        s: &SpectralModel,
        n_modes: usize,
        window: (f64, f64),
    ) -> Result<Self, OracleError> {
        if n_modes < 100 {
            return Err(OracleError::TooFewModes(n_modes));
        }
        let omega0 = s.omega0();
        let (lo, hi) = window;
        if !(lo < omega0 && omega0 < hi) {
            return Err(OracleError::WindowExcludesOmega0 { omega0, lo, hi });
        }

        let channels = usize::from(s.detected_active()) + usize::from(s.undetected_active());
        let channels = channels.max(1);
        let n_k = n_modes / channels;

        // Geometric panels from the wedge edge out to the window edges.
        let whw_left = omega0 - lo;
        let whw_right = hi - omega0;
        let wedge_hw = (0.02 * whw_left.max(whw_right)).min(0.5 * whw_left.min(whw_right));
        let mut edges: Vec<f64> = vec![omega0 - wedge_hw, omega0 + wedge_hw];
        for sign in [-1.0, 1.0] {
            let limit = if sign < 0.0 { whw_left } else { whw_right };
            let mut x = wedge_hw;
            while x < limit {
                x = (2.0 * x).min(limit);
                edges.push(omega0 + sign * x);
            }
        }
        edges.sort_by(f64::total_cmp);
        // Consecutive edge pairs form the geometric panels; the central pair
        // spanning the wedge is replaced by uniform panels below.
        let n_geo_panels = edges.len() - 2;

        // Remaining budget goes to uniform panels inside the wedge.
        let n_geo_nodes = n_geo_panels * NODES_PER_PANEL;
        let n_wedge_nodes = n_k.saturating_sub(n_geo_nodes);
        let n_wedge_panels = (n_wedge_nodes / NODES_PER_PANEL).max(1);

        let mut panels: Vec<(f64, f64)> = Vec::new();
        for i in 0..n_wedge_panels {
            let a = omega0 - wedge_hw + 2.0 * wedge_hw * i as f64 / n_wedge_panels as f64;
            let b = omega0 - wedge_hw + 2.0 * wedge_hw * (i + 1) as f64 / n_wedge_panels as f64;
            panels.push((a, b));
        }
        for w in edges.windows(2) {
            if w[1] <= omega0 - wedge_hw || w[0] >= omega0 + wedge_hw {
                panels.push((w[0], w[1]));
            }
        }
        panels.sort_by(|a, b| a.0.total_cmp(&b.0));

        let (gx, gw) = quad::gauss_legendre(NODES_PER_PANEL);
        let mut k_grid = Vec::with_capacity(panels.len() * NODES_PER_PANEL);
        let mut weights = Vec::with_capacity(k_grid.capacity());
        for &(a, b) in &panels {
            let c = 0.5 * (a + b);
            let h = 0.5 * (b - a);
            for (xi, wi) in gx.iter().zip(&gw) {
                k_grid.push(c + h * xi);
                weights.push(h * wi);
            }
        }

        let mut kappa = Vec::new();
        let mut g = Vec::new();
        let mut pi_eta = Vec::new();
        let mut pe_max = 0.0f64;
        for (&k, &w) in k_grid.iter().zip(&weights) {
            if s.detected_active() {
                let g2 = s.detected_density(k) * w;
                if g2 > 0.0 {
                    let pe = PI * s.eta_at(k);
                    kappa.push(k - omega0);
                    g.push(g2.sqrt());
                    pi_eta.push(pe);
                    pe_max = pe_max.max(pe);
                }
            }
            if s.undetected_active() {
                let g2 = s.undetected_density(k) * w;
                if g2 > 0.0 {
                    kappa.push(k - omega0);
                    g.push(g2.sqrt());
                    pi_eta.push(0.0);
                }
            }
        }

        let sys = Self {
            omega0,
            window,
            wedge: (omega0 - wedge_hw, omega0 + wedge_hw),
            kappa,
            g,
            pi_eta,
            k_grid,
            pe_max,
        };

        // Discretization fidelity: the mode couplings must reproduce the
        // density integral over the window.
        let sm = s.clone();
        let integral = quad::integrate(
            move |k| sm.detected_density(k) + sm.undetected_density(k),
            lo,
            hi,
            &[omega0, 0.5 * (lo + hi)],
            Tolerance::new(1e-9, 1e-13),
            8000,
        )?
        .value;
        let rel = (sys.coupling_weight() - integral).abs() / integral;
        if rel > FIDELITY_TOL {
            return Err(OracleError::DiscretizationFidelity { rel });
        }
        Ok(sys)
    }

    /// Number of photon amplitudes.
    pub fn n_modes(&self) -> usize {
        self.g.len()
    }

    /// Sum of squared couplings (the discretized density integral).
    pub fn coupling_weight(&self) -> f64 {
        self.g.iter().map(|gi| gi * gi).sum()
    }

    /// Recurrence horizon 2 pi / (largest adjacent node gap inside the
    /// wedge). Discretization artifacts stay negligible for t well below
    /// this; comparisons are restricted to half of it.
    pub fn recurrence_time(&self) -> f64 {
        let mut max_gap = 0.0f64;
        let mut prev: Option<f64> = None;
        for &k in &self.k_grid {
            if k < self.wedge.0 || k > self.wedge.1 {
                continue;
            }
            if let Some(p) = prev {
                max_gap = max_gap.max(k - p);
            }
            prev = Some(k);
        }
        if max_gap == 0.0 {
            f64::INFINITY
        } else {
            2.0 * PI / max_gap
        }
    }

    /// Largest stable-and-accurate step: 0.05 over the fastest frequency in
    /// the rotating frame.
    pub fn default_dt(&self) -> f64 {
        let edge = (self.omega0 - self.window.0)
            .abs()
            .max((self.window.1 - self.omega0).abs());
        0.05 / edge.max(self.pe_max)
    }

    fn derivative(
        &self,
        f: Complex64,
        amps: &[Complex64],
        df: &mut Complex64,
        damps: &mut [Complex64],
        dr: &mut f64,
    ) {
        let mut acc_re = 0.0;
        let mut acc_im = 0.0;
        let mut drr = 0.0;
        for i in 0..amps.len() {
            let a = amps[i];
            let gi = self.g[i];
            let kap = self.kappa[i];
            let pe = self.pi_eta[i];
            acc_re += gi * a.im;
            acc_im -= gi * a.re;
            damps[i] = Complex64::new(
                kap * a.im - pe * a.re + gi * f.im,
                -kap * a.re - pe * a.im - gi * f.re,
            );
            drr += 2.0 * pe * (a.re * a.re + a.im * a.im);
        }
        *df = Complex64::new(acc_re, acc_im);
        *dr = drr;
    }

    /// Integrate and sample at the given ascending times (t = 0 allowed
    /// first). Fails if the norm drifts beyond [`NORM_DRIFT_TOL`].
    pub fn integrate_at(&self, times: &[f64], dt: f64) -> Result<Trajectory, OracleError> {
        let max_dt = self.default_dt() * (1.0 + 1e-9);
        if !(dt > 0.0) || dt > max_dt {
            return Err(OracleError::StepTooLarge {
                dt,
                max_dt: self.default_dt(),
            });
        }
        let n = self.g.len();
        let mut f = Complex64::new(1.0, 0.0);
        let mut amps = vec![Complex64::new(0.0, 0.0); n];
        let mut r = 0.0f64;

        let mut k1a = vec![Complex64::new(0.0, 0.0); n];
        let mut k2a = k1a.clone();
        let mut k3a = k1a.clone();
        let mut k4a = k1a.clone();
        let mut tmp = k1a.clone();
        let (mut k1f, mut k2f, mut k3f, mut k4f) = (
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
        );
        let (mut k1r, mut k2r, mut k3r, mut k4r) = (0.0, 0.0, 0.0, 0.0);

        let mut out_t = Vec::with_capacity(times.len());
        let mut out_s = Vec::with_capacity(times.len());
        let mut out_e = Vec::with_capacity(times.len());
        let mut out_r = Vec::with_capacity(times.len());

        let mut t = 0.0f64;
        for &target in times {
            assert!(target >= t - 1e-12, "sample times must be ascending");
            if target > t {
                let steps = ((target - t) / dt).ceil() as usize;
                let h = (target - t) / steps as f64;
                for _ in 0..steps {
                    self.derivative(f, &amps, &mut k1f, &mut k1a, &mut k1r);
                    for i in 0..n {
                        tmp[i] = amps[i] + 0.5 * h * k1a[i];
                    }
                    self.derivative(f + 0.5 * h * k1f, &tmp, &mut k2f, &mut k2a, &mut k2r);
                    for i in 0..n {
                        tmp[i] = amps[i] + 0.5 * h * k2a[i];
                    }
                    self.derivative(f + 0.5 * h * k2f, &tmp, &mut k3f, &mut k3a, &mut k3r);
                    for i in 0..n {
                        tmp[i] = amps[i] + h * k3a[i];
                    }
                    self.derivative(f + h * k3f, &tmp, &mut k4f, &mut k4a, &mut k4r);
                    let w = h / 6.0;
                    f += w * (k1f + 2.0 * k2f + 2.0 * k3f + k4f);
                    for i in 0..n {
                        amps[i] += w * (k1a[i] + 2.0 * k2a[i] + 2.0 * k3a[i] + k4a[i]);
                    }
                    r += w * (k1r + 2.0 * k2r + 2.0 * k3r + k4r);
                }
                t = target;
            }
            let s = f.norm_sqr();
            let eps: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
            let drift = (s + eps + r - 1.0).abs();
            if drift > NORM_DRIFT_TOL {
                return Err(OracleError::NormDrift { t, drift });
            }
            out_t.push(t);
            out_s.push(s);
            out_e.push(eps);
            out_r.push(r);
        }
        Ok(Trajectory {
            t: out_t,
            s: out_s,
            eps: out_e,
            r: out_r,
        })
    }

    /// Integrate over [0, t_max], sampling on a uniform grid of at most 501
    /// points (every step if there are fewer).
    pub fn integrate(&self, t_max: f64, dt: f64) -> Result<Trajectory, OracleError> {
        let n_samples = (((t_max / dt).ceil() as usize) + 1).min(501).max(2);
        let times: Vec<f64> = (0..n_samples)
            .map(|i| t_max * i as f64 / (n_samples - 1) as f64)
            .collect();
        self.integrate_at(&times, dt)
    }
}

/// Options for [`compare`].
#[derive(Debug, Clone, Copy)]
pub struct CompareOptions {
    pub n_modes: usize,
    /// Defaults to 10 / free rate.
    pub t_max: Option<f64>,
    pub n_samples: usize,
    /// Width-mixing convention used on the analytic side (test hook).
    pub convention: PConvention,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self {
            n_modes: 2000,
            t_max: None,
            n_samples: 201,
            convention: PConvention::default(),
        }
    }
}

/// Maximum absolute deviations between the discretized evolution and the
/// pole/residue evolution.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CompareReport {
    pub max_dev_s: f64,
    pub max_dev_eps: f64,
    pub max_dev_r: f64,
    pub n_modes: usize,
    pub dt: f64,
    pub pass: bool,
}

/// Run both computations of (s, eps, r) for the same model and report the
/// maximum deviations. Passes when all stay below [`COMPARE_TOL`].
pub fn compare(m: &LorentzianModel, opts: &CompareOptions) -> Result<CompareReport, OracleError> {
    let t_max = opts.t_max.unwrap_or(10.0 / m.free_rate());
    let delta_eff = m.delta_tilde().max(m.detuning().abs());
    let window = (m.omega0 - 20.0 * delta_eff, m.omega0 + 20.0 * delta_eff);

    let s = m.to_spectral();
    let sys = DiscretizedSystem::build(&s, opts.n_modes, window)?;

    let t_rec = sys.recurrence_time();
    if t_max > 0.5 * t_rec {
        return Err(OracleError::RecurrenceHorizon { t_max, t_rec });
    }
    let dt = sys.default_dt();

    let grid = TimeGrid::Uniform {
        t_max,
        n: opts.n_samples,
    };
    let analytic = dynamics::evolve_grid_with(m, &grid, opts.convention)?;
    let oracle = sys.integrate_at(&analytic.t, dt)?;

    let mut dev = [0.0f64; 3];
    for i in 0..analytic.len() {
        dev[0] = dev[0].max((analytic.s[i] - oracle.s[i]).abs());
        dev[1] = dev[1].max((analytic.eps[i] - oracle.eps[i]).abs());
        dev[2] = dev[2].max((analytic.r[i] - oracle.r[i]).abs());
    }
    Ok(CompareReport {
        max_dev_s: dev[0],
        max_dev_eps: dev[1],
        max_dev_r: dev[2],
        n_modes: sys.n_modes(),
        dt,
        pass: dev.iter().all(|&d| d < COMPARE_TOL),
    })
}
