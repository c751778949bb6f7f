//! Renormalized form factor, sum rule, and decay rates.
//!
//! Coupling a photon mode of energy k to the detector continuum smears its
//! weight over a Lorentzian of half-width pi eta(k); the effective coupling
//! density seen by the atom is the corresponding convolution of the detected
//! channel plus the untouched undetected channel. The measured decay rate is
//! 2 pi times that density at the transition energy.

use std::f64::consts::PI;
use std::io::{self, Write};

use thiserror::Error;

use crate::model::{DecayRateResult, LorentzianModel, SpectralModel};
use crate::quad::{self, QuadError, Tolerance};

#[derive(Debug, Clone, Error)]
pub enum SpectralError {
    #[error(
        "omega0 = {omega0} lies outside the spectral support [{lo}, {hi}]: \
         the free rate is undefined at zero spectral weight"
    )]
    OmegaOutsideSupport { omega0: f64, lo: f64, hi: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// Sampled |g_bar(mu)|^2 curve.
#[derive(Debug, Clone)]
pub struct FormFactorCurve {
    pub mu: Vec<f64>,
    pub g2: Vec<f64>,
}

impl FormFactorCurve {
    /// CSV with header `mu,g2`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "mu,g2")?;
        for (m, g) in self.mu.iter().zip(&self.g2) {
            writeln!(w, "{m:.12e},{g:.12e}")?;
        }
        Ok(())
    }
}

/// Breakpoint ladder around the kernel peak at mu: the kernel half-width is
/// pi eta, but the adaptive scheme needs stepping stones to localize a peak
/// that can be orders of magnitude narrower than the domain.
fn kernel_hints(mu: f64, pi_eta: f64, out: &mut Vec<f64>) {
    out.push(mu);
    if pi_eta > 0.0 {
        let mut s = pi_eta;
        for _ in 0..12 {
            out.push(mu - s);
            out.push(mu + s);
            s *= 8.0;
        }
    }
}

/// Detected-channel kernel integral for one target energy, over [lo, hi]
/// using the clipped (support-only) densities.
fn detected_kernel_integral(
    s: &SpectralModel,
    mu: f64,
    lo: f64,
    hi: f64,
    tol: Tolerance,
) -> Result<f64, QuadError> {
    let pi_eta_scale = PI * s.eta_max();
    let mut hints = Vec::with_capacity(32);
    kernel_hints(mu, pi_eta_scale, &mut hints);
    hints.push(s.omega0());
    let (k_lo, k_hi) = s.support();
    hints.push(0.5 * (k_lo + k_hi));
    if let Some((_, k0)) = s.tail_scales() {
        hints.push(k0);
        hints.push(k_lo);
        hints.push(k_hi);
    }
    let sm = s.clone();
    let r = quad::integrate(
        move |k| {
            let eta = sm.eta_at(k);
            if eta == 0.0 {
                return 0.0;
            }
            let jd = sm.detected_density(k);
            let d = mu - k;
            let pe = PI * eta;
            eta * jd / (d * d + pe * pe)
        },
        lo,
        hi,
        &hints,
        tol,
        20_000,
    )?;
    Ok(r.value)
}

fn rff_impl(s: &SpectralModel, mu: f64, tol: Tolerance) -> Result<f64, QuadError> {
    // The undetected channel enters through the exact eta -> 0 limit of the
    // kernel (a delta function), as does the whole detected channel when no
    // mode couples to the detector.
    let undetected = s.undetected_density(mu);
    if !s.detected_active() || s.eta_max() == 0.0 {
        return Ok(s.detected_density(mu) + undetected);
    }

    let (k_lo, k_hi) = s.support();
    let (lo, hi) = match s.tail_scales() {
        // Extend beyond the support so the analytic density tails are picked
        // up; the remainder beyond the extension is bounded by
        // 8 eta_max A / E^3 with A the tail amplitude.
        Some((amp, _)) => {
            let e = (8.0 * s.eta_max().max(1.0) * amp / (0.1 * tol.abs))
                .cbrt()
                .clamp(k_hi - k_lo, 1e12);
            (k_lo.min(mu) - e, k_hi.max(mu) + e)
        }
        None => (k_lo, k_hi),
    };
    let detected = detected_kernel_integral(s, mu, lo, hi, tol)?;
    Ok(detected + undetected)
}

/// |g_bar(mu)|^2: the effective coupling density at energy mu under
/// measurement.
pub fn renormalized_form_factor(s: &SpectralModel, mu: f64) -> Result<f64, SpectralError> {
    Ok(rff_impl(s, mu, Tolerance::default_spectral())?)
}

/// Evaluate the form factor on a grid of energies.
pub fn form_factor_curve(s: &SpectralModel, mu: &[f64]) -> Result<FormFactorCurve, SpectralError> {
    let mut g2 = Vec::with_capacity(mu.len());
    for &m in mu {
        g2.push(renormalized_form_factor(s, m)?);
    }
    Ok(FormFactorCurve {
        mu: mu.to_vec(),
        g2,
    })
}

/// Result of the sum-rule cross-check.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct SumRuleCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub rel_err: f64,
}

/// Verifies that the measurement only redistributes coupling weight:
/// the integral of |g_bar|^2 over energy equals the total coupling weight,
/// for any detector profile.
///
/// Both sides are computed by quadrature (the right side over the support,
/// plus exact analytic tails when present). The left side integrates the
/// support-only form factor over a window and adds the kernel weight spilled
/// beyond it in closed form, so the identity holds to quadrature accuracy
/// even for a truncated support.
pub fn sum_rule_check(s: &SpectralModel) -> Result<SumRuleCheck, SpectralError> {
    let (k_lo, k_hi) = s.support();
    let (tail_d, tail_u) = s.tail_weight_beyond_support();

    let sm = s.clone();
    let rhs_window = quad::integrate(
        move |k| sm.detected_density(k) + sm.undetected_density(k),
        k_lo,
        k_hi,
        &[s.omega0(), 0.5 * (k_lo + k_hi)],
        Tolerance::new(1e-10, 1e-14),
        8000,
    )?
    .value;
    let rhs = rhs_window + tail_d + tail_u;

    let pi_eta = PI * s.eta_max();
    let margin = (20.0 * pi_eta).max(0.05 * (k_hi - k_lo));
    let (m_lo, m_hi) = (k_lo - margin, k_hi + margin);

    let inner_tol = Tolerance::new(1e-9, 1e-15);
    let sm = s.clone();
    let lhs_window = quad::integrate(
        move |mu| {
            let undetected = if sm.contains(mu) {
                sm.undetected_density(mu)
            } else {
                0.0
            };
            if !sm.detected_active() || sm.eta_max() == 0.0 {
                let detected = if sm.contains(mu) {
                    sm.detected_density(mu)
                } else {
                    0.0
                };
                return detected + undetected;
            }
            detected_kernel_integral(&sm, mu, k_lo, k_hi, inner_tol)
                .expect("inner kernel quadrature")
                + undetected
        },
        m_lo,
        m_hi,
        &[k_lo, k_hi, s.omega0(), 0.5 * (k_lo + k_hi)],
        Tolerance::new(2e-8, 1e-12),
        4000,
    )?
    .value;

    // Kernel weight spilled outside [m_lo, m_hi]: integrating the kernel over
    // the excluded mu-range gives arctan factors exactly.
    let sm = s.clone();
    let spill = if s.detected_active() && s.eta_max() > 0.0 {
        quad::integrate(
            move |k| {
                let eta = sm.eta_at(k);
                if eta == 0.0 {
                    return 0.0;
                }
                let pe = PI * eta;
                sm.detected_density(k) / PI * ((pe / (m_hi - k)).atan() + (pe / (k - m_lo)).atan())
            },
            k_lo,
            k_hi,
            &[s.omega0(), 0.5 * (k_lo + k_hi)],
            Tolerance::new(1e-9, 1e-14),
            4000,
        )?
        .value
    } else {
        0.0
    };

    // The analytic tails pass through the (normalized) kernel unchanged.
    let lhs = lhs_window + spill + tail_d + tail_u;
    let rel_err = (lhs - rhs).abs() / rhs;
    Ok(SumRuleCheck { lhs, rhs, rel_err })
}

/// Free decay rate 2 pi (J_d + J_u)(omega0).
pub fn free_rate(s: &SpectralModel) -> Result<f64, SpectralError> {
    if !s.contains(s.omega0()) {
        let (lo, hi) = s.support();
        return Err(SpectralError::OmegaOutsideSupport {
            omega0: s.omega0(),
            lo,
            hi,
        });
    }
    Ok(2.0 * PI * (s.detected_density(s.omega0()) + s.undetected_density(s.omega0())))
}

/// Measured decay rate 2 pi |g_bar(omega0)|^2 for a general spectral model,
/// with the free rate and classification.
pub fn measured_rate_general(s: &SpectralModel) -> Result<DecayRateResult, SpectralError> {
    let free = free_rate(s)?;
    let measured = 2.0 * PI * rff_impl(s, s.omega0(), Tolerance::default_spectral())?;
    Ok(DecayRateResult::new(free, measured))
}

/// Closed-form measured rate for the Lorentzian model:
/// Gamma = 2 pi gamma (1-eps) Delta Dt / (d^2 + Dt^2)
///       + 2 pi gamma eps Delta^2 / (d^2 + Delta^2),  Dt = Delta + pi eta.
pub fn measured_rate_lorentzian(m: &LorentzianModel) -> DecayRateResult {
    let d = m.detuning();
    let dt = m.delta_tilde();
    let detected =
        2.0 * PI * m.gamma * (1.0 - m.eps_inf) * m.delta * dt / (d * d + dt * dt);
    let undetected =
        2.0 * PI * m.gamma * m.eps_inf * m.delta * m.delta / (d * d + m.delta * m.delta);
    DecayRateResult::new(m.free_rate(), detected + undetected)
}
