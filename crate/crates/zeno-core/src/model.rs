//! Parameter types and unit conventions.
//!
//! Energies and rates are expressed in units of the coupling strength
//! (gamma = 1 internally), times in units of 1/gamma. All types are
//! immutable after construction and safe to share across threads.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quad::{self, Tolerance};

/// Threshold operationalizing the weak-coupling condition
/// gamma << |omega0 - k0 + i delta|^2 / delta for the asymptotic-rate
/// formula: valid iff the ratio is at most this factor.
pub const DEFAULT_VALIDITY_THRESHOLD: f64 = 0.05;

/// Relative half-width of the neutral band around ratio = 1 used when
/// classifying a decay-rate ratio. Shared by all modules.
pub const CLASSIFICATION_TOL: f64 = 1e-9;

/// Parameter-validation errors; each names the violated constraint.
#[derive(Debug, Clone, Error)]
pub enum ModelError {
    #[error("gamma must be positive (got {0})")]
    NonPositiveGamma(f64),
    #[error("delta must be positive (got {0})")]
    NonPositiveDelta(f64),
    #[error("eta must be non-negative (got {0})")]
    NegativeEta(f64),
    #[error("eps_inf must lie in [0, 1] (got {0})")]
    EpsInfOutOfRange(f64),
    #[error("parameter {0} must be finite")]
    NonFinite(&'static str),
    #[error("support interval is empty or inverted: [{0}, {1}]")]
    EmptySupport(f64, f64),
    #[error("{channel} density is negative at k = {k} (value {value})")]
    NegativeDensity {
        channel: &'static str,
        k: f64,
        value: f64,
    },
    #[error("eta(k) is negative at k = {k} (value {value})")]
    NegativeEtaOfK { k: f64, value: f64 },
    #[error("total coupling weight must be positive and finite (got {0})")]
    InvalidWeight(f64),
    #[error("quadrature failed while validating the spectral model: {0}")]
    Quadrature(#[from] quad::QuadError),
}

/// The six physical parameters of the Lorentzian worked example.
///
/// `gamma` is the overall coupling strength (base rate unit), `delta` the
/// form-factor half-width, `k0` its center energy, `omega0` the atomic
/// transition energy, `eta` the detector coupling density (response time
/// tau = 1/(2 pi eta)), and `eps_inf` the asymptotic error probability
/// (detection efficiency 1 - eps_inf).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzianModel {
    pub gamma: f64,
    pub delta: f64,
    pub k0: f64,
    pub omega0: f64,
    pub eta: f64,
    pub eps_inf: f64,
}

impl LorentzianModel {
    pub fn new(
        gamma: f64,
        delta: f64,
        k0: f64,
        omega0: f64,
        eta: f64,
        eps_inf: f64,
    ) -> Result<Self, ModelError> {
        for (name, v) in [
            ("gamma", gamma),
            ("delta", delta),
            ("k0", k0),
            ("omega0", omega0),
            ("eta", eta),
            ("eps_inf", eps_inf),
        ] {
            if !v.is_finite() {
                return Err(ModelError::NonFinite(name));
            }
        }
        if gamma <= 0.0 {
            return Err(ModelError::NonPositiveGamma(gamma));
        }
        if delta <= 0.0 {
            return Err(ModelError::NonPositiveDelta(delta));
        }
        if eta < 0.0 {
            return Err(ModelError::NegativeEta(eta));
        }
        if !(0.0..=1.0).contains(&eps_inf) {
            return Err(ModelError::EpsInfOutOfRange(eps_inf));
        }
        Ok(Self {
            gamma,
            delta,
            k0,
            omega0,
            eta,
            eps_inf,
        })
    }

    /// Construct from the detuning omega0 - k0, with the conventional
    /// placement k0 = 100 delta (every in-scope quantity depends on the
    /// center energy only through the detuning).
    pub fn from_detuning(
        gamma: f64,
        delta: f64,
        detuning: f64,
        eta: f64,
        eps_inf: f64,
    ) -> Result<Self, ModelError> {
        if !detuning.is_finite() {
            return Err(ModelError::NonFinite("detuning"));
        }
        let k0 = 100.0 * delta;
        Self::new(gamma, delta, k0, k0 + detuning, eta, eps_inf)
    }

    /// Detuning omega0 - k0.
    pub fn detuning(&self) -> f64 {
        self.omega0 - self.k0
    }

    /// Measurement-broadened width delta + pi eta.
    pub fn delta_tilde(&self) -> f64 {
        self.delta + PI * self.eta
    }

    /// Detector response time 1/(2 pi eta); `None` when eta = 0.
    pub fn response_time(&self) -> Option<f64> {
        (self.eta > 0.0).then(|| 1.0 / (2.0 * PI * self.eta))
    }

    /// Jump time 2/delta: the crossover from quadratic to exponential decay.
    pub fn jump_time(&self) -> f64 {
        2.0 / self.delta
    }

    /// gamma delta / (detuning^2 + delta^2), the small parameter controlling
    /// how well the lowest-order rate approximates the asymptotic one.
    pub fn validity_ratio(&self) -> f64 {
        let d = self.detuning();
        self.gamma * self.delta / (d * d + self.delta * self.delta)
    }

    pub fn is_valid_asymptotic(&self) -> bool {
        self.is_valid_asymptotic_at(DEFAULT_VALIDITY_THRESHOLD)
    }

    pub fn is_valid_asymptotic_at(&self, threshold: f64) -> bool {
        self.validity_ratio() <= threshold
    }

    /// Free-space decay rate 2 pi gamma delta^2 / (detuning^2 + delta^2).
    pub fn free_rate(&self) -> f64 {
        let d = self.detuning();
        2.0 * PI * self.gamma * self.delta * self.delta / (d * d + self.delta * self.delta)
    }

    /// Two-channel spectral representation of this model.
    pub fn to_spectral(&self) -> SpectralModel {
        lorentzian_to_spectral(self)
    }
}

/// QZE/AZE classification of a measured-to-free rate ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    #[serde(rename = "QZE")]
    Qze,
    #[serde(rename = "AZE")]
    Aze,
    #[serde(rename = "NEUTRAL")]
    Neutral,
}

impl Classification {
    /// Classify with the shared neutral band of [`CLASSIFICATION_TOL`]
    /// around ratio = 1.
    pub fn from_ratio(ratio: f64) -> Self {
        if ratio < 1.0 - CLASSIFICATION_TOL {
            Classification::Qze
        } else if ratio > 1.0 + CLASSIFICATION_TOL {
            Classification::Aze
        } else {
            Classification::Neutral
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Classification::Qze => write!(f, "QZE"),
            Classification::Aze => write!(f, "AZE"),
            Classification::Neutral => write!(f, "NEUTRAL"),
        }
    }
}

/// Free rate, measured rate, their ratio, and its classification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayRateResult {
    pub free_rate: f64,
    pub measured_rate: f64,
    pub ratio: f64,
    pub classification: Classification,
}

impl DecayRateResult {
    pub fn new(free_rate: f64, measured_rate: f64) -> Self {
        let ratio = measured_rate / free_rate;
        Self {
            free_rate,
            measured_rate,
            ratio,
            classification: Classification::from_ratio(ratio),
        }
    }
}

type Density = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Analytic continuation of the densities beyond the truncated support,
/// available when the model was built from [`LorentzianModel`]. Used for
/// exact tail corrections in integrals over the full energy axis.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Tail {
    None,
    Lorentzian {
        gamma: f64,
        delta: f64,
        k0: f64,
        eps_inf: f64,
    },
}

/// General two-channel spectral model over mode energy.
///
/// `detected` is the angularly integrated coupling density of modes covered
/// by the detector (damping rate pi eta(k) each), `undetected` the
/// complement (eta = 0). Densities are treated as zero outside `support`
/// unless an analytic tail is attached.
#[derive(Clone)]
pub struct SpectralModel {
    omega0: f64,
    support: (f64, f64),
    detected: Density,
    undetected: Density,
    eta_of_k: Density,
    pub(crate) tail: Tail,
    weight: f64,
    eta_max: f64,
    detected_active: bool,
    undetected_active: bool,
}

impl fmt::Debug for SpectralModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralModel")
            .field("omega0", &self.omega0)
            .field("support", &self.support)
            .field("weight", &self.weight)
            .field("eta_max", &self.eta_max)
            .finish_non_exhaustive()
    }
}

const VALIDATION_SAMPLES: usize = 513;

impl SpectralModel {
    /// Build and validate a general spectral model.
    ///
    /// Non-negativity of the densities and of eta(k) is checked on a uniform
    /// scan of the support; the total coupling weight is computed by
    /// adaptive quadrature and must be positive.
    pub fn new<FD, FU, FE>(
        omega0: f64,
        support: (f64, f64),
        detected: FD,
        undetected: FU,
        eta_of_k: FE,
    ) -> Result<Self, ModelError>
    where
        FD: Fn(f64) -> f64 + Send + Sync + 'static,
        FU: Fn(f64) -> f64 + Send + Sync + 'static,
        FE: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::build(
            omega0,
            support,
            Arc::new(detected),
            Arc::new(undetected),
            Arc::new(eta_of_k),
            Tail::None,
            None,
        )
    }

    fn build(
        omega0: f64,
        support: (f64, f64),
        detected: Density,
        undetected: Density,
        eta_of_k: Density,
        tail: Tail,
        exact_weight: Option<f64>,
    ) -> Result<Self, ModelError> {
        if !omega0.is_finite() {
            return Err(ModelError::NonFinite("omega0"));
        }
        if !(support.0.is_finite() && support.1.is_finite()) || support.1 <= support.0 {
            return Err(ModelError::EmptySupport(support.0, support.1));
        }

        let mut eta_max = 0.0f64;
        let mut detected_max = 0.0f64;
        let mut undetected_max = 0.0f64;
        let n = VALIDATION_SAMPLES;
        for i in 0..n {
            let k = support.0 + (support.1 - support.0) * i as f64 / (n - 1) as f64;
            let jd = detected(k);
            if !jd.is_finite() || jd < 0.0 {
                return Err(ModelError::NegativeDensity {
                    channel: "detected",
                    k,
                    value: jd,
                });
            }
            let ju = undetected(k);
            if !ju.is_finite() || ju < 0.0 {
                return Err(ModelError::NegativeDensity {
                    channel: "undetected",
                    k,
                    value: ju,
                });
            }
            let e = eta_of_k(k);
            if !e.is_finite() || e < 0.0 {
                return Err(ModelError::NegativeEtaOfK { k, value: e });
            }
            eta_max = eta_max.max(e);
            detected_max = detected_max.max(jd);
            undetected_max = undetected_max.max(ju);
        }

        let weight = match exact_weight {
            Some(w) => w,
            None => {
                let d = detected.clone();
                let u = undetected.clone();
                let r = quad::integrate(
                    move |k| d(k) + u(k),
                    support.0,
                    support.1,
                    &[omega0],
                    Tolerance::new(1e-10, 1e-14),
                    4000,
                )?;
                r.value
            }
        };
        if !(weight.is_finite() && weight > 0.0) {
            return Err(ModelError::InvalidWeight(weight));
        }

        Ok(Self {
            omega0,
            support,
            detected,
            undetected,
            eta_of_k,
            tail,
            weight,
            eta_max,
            detected_active: detected_max > 0.0,
            undetected_active: undetected_max > 0.0,
        })
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn contains(&self, k: f64) -> bool {
        k >= self.support.0 && k <= self.support.1
    }

    /// Total coupling weight, including the analytic tails when present.
    pub fn total_coupling_weight(&self) -> f64 {
        self.weight
    }

    /// Largest eta(k) sampled during validation.
    pub(crate) fn eta_max(&self) -> f64 {
        self.eta_max
    }

    pub(crate) fn detected_active(&self) -> bool {
        self.detected_active
    }

    pub(crate) fn undetected_active(&self) -> bool {
        self.undetected_active
    }

    /// Detected-channel density; zero outside the support unless an analytic
    /// tail is attached.
    pub fn detected_density(&self, k: f64) -> f64 {
        if self.contains(k) {
            (self.detected)(k)
        } else {
            match self.tail {
                Tail::Lorentzian {
                    gamma,
                    delta,
                    k0,
                    eps_inf,
                } => (1.0 - eps_inf) * lorentzian_density(gamma, delta, k0, k),
                Tail::None => 0.0,
            }
        }
    }

    /// Undetected-channel density; tail handling as for the detected one.
    pub fn undetected_density(&self, k: f64) -> f64 {
        if self.contains(k) {
            (self.undetected)(k)
        } else {
            match self.tail {
                Tail::Lorentzian {
                    gamma,
                    delta,
                    k0,
                    eps_inf,
                } => eps_inf * lorentzian_density(gamma, delta, k0, k),
                Tail::None => 0.0,
            }
        }
    }

    /// Detector coupling density at mode energy k (constant beyond the
    /// support edges).
    pub fn eta_at(&self, k: f64) -> f64 {
        let kc = k.clamp(self.support.0, self.support.1);
        (self.eta_of_k)(kc)
    }

    /// Exact integrals of the analytic density tails beyond the support,
    /// per channel: (detected, undetected). Zero when no tail is attached.
    pub(crate) fn tail_weight_beyond_support(&self) -> (f64, f64) {
        match self.tail {
            Tail::None => (0.0, 0.0),
            Tail::Lorentzian {
                gamma,
                delta,
                k0,
                eps_inf,
            } => {
                let left = gamma * delta * (delta / (k0 - self.support.0)).atan();
                let right = gamma * delta * (delta / (self.support.1 - k0)).atan();
                let total = left + right;
                ((1.0 - eps_inf) * total, eps_inf * total)
            }
        }
    }

    /// Amplitude of the 1/(k - k0)^2 density tail, if any, with its center.
    pub(crate) fn tail_scales(&self) -> Option<(f64, f64)> {
        match self.tail {
            Tail::None => None,
            Tail::Lorentzian {
                gamma, delta, k0, ..
            } => Some((gamma * delta * delta, k0)),
        }
    }
}

fn lorentzian_density(gamma: f64, delta: f64, k0: f64, k: f64) -> f64 {
    let x = k - k0;
    gamma * delta * delta / (x * x + delta * delta)
}

/// Two-channel spectral representation of a Lorentzian model.
///
/// The detected channel carries (1 - eps_inf) of the Lorentzian weight with
/// constant detector coupling eta, the undetected channel the remaining
/// eps_inf with eta = 0. The support is truncated at
/// 200 max(delta, pi eta, |detuning|) around k0; integrals over the full
/// axis add the exact Lorentzian tails.
pub fn lorentzian_to_spectral(m: &LorentzianModel) -> SpectralModel {
    let LorentzianModel {
        gamma,
        delta,
        k0,
        eta,
        eps_inf,
        ..
    } = *m;
    let w = 200.0 * delta.max(PI * eta).max(m.detuning().abs());
    let support = (k0 - w, k0 + w);
    // Exact full-axis weight pi gamma delta; the truncated window plus the
    // arctan tails reproduce it identically.
    let weight = PI * gamma * delta;

    SpectralModel::build(
        m.omega0,
        support,
        Arc::new(move |k| (1.0 - eps_inf) * lorentzian_density(gamma, delta, k0, k)),
        Arc::new(move |k| eps_inf * lorentzian_density(gamma, delta, k0, k)),
        Arc::new(move |_| eta),
        Tail::Lorentzian {
            gamma,
            delta,
            k0,
            eps_inf,
        },
        Some(weight),
    )
    .expect("a validated LorentzianModel always induces a valid SpectralModel")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1() -> LorentzianModel {
        LorentzianModel::from_detuning(1.0, 100.0, 0.0, 2.0, 0.2).unwrap()
    }

    #[test]
    fn validation_names_the_constraint() {
        assert!(matches!(
            LorentzianModel::new(0.0, 100.0, 1e4, 1e4, 2.0, 0.2),
            Err(ModelError::NonPositiveGamma(_))
        ));
        assert!(matches!(
            LorentzianModel::new(1.0, -1.0, 1e4, 1e4, 2.0, 0.2),
            Err(ModelError::NonPositiveDelta(_))
        ));
        assert!(matches!(
            LorentzianModel::new(1.0, 100.0, 1e4, 1e4, -0.5, 0.2),
            Err(ModelError::NegativeEta(_))
        ));
        assert!(matches!(
            LorentzianModel::new(1.0, 100.0, 1e4, 1e4, 2.0, 1.5),
            Err(ModelError::EpsInfOutOfRange(_))
        ));
        assert!(matches!(
            LorentzianModel::new(f64::NAN, 100.0, 1e4, 1e4, 2.0, 0.2),
            Err(ModelError::NonFinite("gamma"))
        ));
    }

    #[test]
    fn derived_quantities() {
        let m = fig1();
        assert_eq!(m.k0, 1e4);
        assert_eq!(m.detuning(), 0.0);
        assert!((m.delta_tilde() - (100.0 + 2.0 * PI)).abs() < 1e-12);
        assert!((m.response_time().unwrap() - 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert_eq!(m.jump_time(), 0.02);
        assert!((m.free_rate() - 2.0 * PI).abs() < 1e-12);
        // gamma delta / delta^2 = 0.01 <= 0.05
        assert!(m.is_valid_asymptotic());
        let strong = LorentzianModel::from_detuning(6.0, 100.0, 0.0, 2.0, 0.2).unwrap();
        assert!((strong.validity_ratio() - 0.06).abs() < 1e-15);
        assert!(!strong.is_valid_asymptotic());
    }

    #[test]
    fn json_field_names_are_exact() {
        let v = serde_json::to_value(fig1()).unwrap();
        let obj = v.as_object().unwrap();
        let mut keys: Vec<_> = obj.keys().map(String::as_str).collect();
        keys.sort_unstable();
        assert_eq!(keys, ["delta", "eps_inf", "eta", "gamma", "k0", "omega0"]);
        let round: LorentzianModel = serde_json::from_value(v).unwrap();
        assert_eq!(round, fig1());
    }

    #[test]
    fn spectral_peak_value() {
        // J_d(k0) = (1 - eps_inf) gamma
        let s = fig1().to_spectral();
        assert!((s.detected_density(1e4) - 0.8).abs() < 1e-15);
        assert!((s.undetected_density(1e4) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn zero_efficiency_limit() {
        let m = LorentzianModel::from_detuning(1.0, 100.0, 0.0, 2.0, 1.0).unwrap();
        let s = m.to_spectral();
        for k in [9.0e3, 1.0e4, 1.05e4] {
            assert_eq!(s.detected_density(k), 0.0);
            assert!(s.undetected_density(k) > 0.0);
        }
        assert!(!s.detected_active());
    }

    #[test]
    fn perfect_efficiency_has_no_undetected_channel() {
        let m = LorentzianModel::from_detuning(1.0, 100.0, 0.0, 2.0, 0.0).unwrap();
        let s = m.to_spectral();
        assert_eq!(s.undetected_density(1e4), 0.0);
        assert!(!s.undetected_active());
    }

    #[test]
    fn channel_split_reconstructs_lorentzian() {
        let m = LorentzianModel::from_detuning(1.0, 100.0, 35.0, 7.0, 0.37).unwrap();
        let s = m.to_spectral();
        for i in 0..200 {
            let k = m.k0 - 900.0 + 9.0 * i as f64;
            let total = s.detected_density(k) + s.undetected_density(k);
            let lor = lorentzian_density(1.0, 100.0, m.k0, k);
            assert!(
                (total - lor).abs() <= 2.0 * f64::EPSILON * lor,
                "split mismatch at k={k}"
            );
        }
    }

    #[test]
    fn full_line_weight_is_pi_gamma_delta() {
        let s = fig1().to_spectral();
        assert!((s.total_coupling_weight() - 100.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn custom_spectral_model_validation() {
        // A box density is fine.
        let ok = SpectralModel::new(
            0.5,
            (0.0, 1.0),
            |_| 1.0,
            |_| 0.0,
            |_| 3.0,
        );
        assert!(ok.is_ok());
        let w = ok.unwrap().total_coupling_weight();
        assert!((w - 1.0).abs() < 1e-9);

        // Negative density is rejected with the offending channel named.
        let bad = SpectralModel::new(0.5, (0.0, 1.0), |k| 0.4 - k, |_| 0.0, |_| 1.0);
        assert!(matches!(
            bad,
            Err(ModelError::NegativeDensity {
                channel: "detected",
                ..
            })
        ));

        let bad_eta = SpectralModel::new(0.5, (0.0, 1.0), |_| 1.0, |_| 0.0, |_| -1.0);
        assert!(matches!(bad_eta, Err(ModelError::NegativeEtaOfK { .. })));

        let empty = SpectralModel::new(0.5, (1.0, 0.0), |_| 1.0, |_| 0.0, |_| 0.0);
        assert!(matches!(empty, Err(ModelError::EmptySupport(..))));
    }

    #[test]
    fn classification_bands() {
        assert_eq!(Classification::from_ratio(0.9), Classification::Qze);
        assert_eq!(Classification::from_ratio(1.1), Classification::Aze);
        assert_eq!(Classification::from_ratio(1.0), Classification::Neutral);
        assert_eq!(
            Classification::from_ratio(1.0 + 0.5e-9),
            Classification::Neutral
        );
        assert_eq!(
            Classification::from_ratio(1.0 + 2e-9),
            Classification::Aze
        );
        assert_eq!(
            Classification::from_ratio(1.0 - 2e-9),
            Classification::Qze
        );
    }
}
