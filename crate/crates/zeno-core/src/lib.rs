//! Decay dynamics of an unstable two-level emitter whose emitted photon is
//! continuously monitored by an absorbing detector with finite response
//! time and finite efficiency.
//!
//! The detector renormalizes the emitter's coupling density; depending on
//! the detuning and the detector coupling this suppresses (quantum Zeno) or
//! enhances (anti-Zeno) the decay. The crate provides:
//!
//! - [`model`]: validated parameter types and the two-channel spectral
//!   representation;
//! - [`spectral`]: the renormalized coupling density, its sum rule, and
//!   free/measured decay rates (closed form and quadrature);
//! - [`dynamics`]: exact time evolution (survival, error, and response
//!   probabilities) via resolvent poles and residues;
//! - [`phasemap`]: the Zeno/anti-Zeno phase boundary, the maximum-effect
//!   line, and grid sweeps;
//! - [`oracle`]: independent brute-force validation by direct integration
//!   of the discretized continuum model;
//! - [`quad`], [`cubic`]: the numerical kernels backing the above.

pub mod cubic;
pub mod dynamics;
pub mod model;
pub mod oracle;
pub mod phasemap;
pub mod quad;
pub mod spectral;

pub use dynamics::{
    asymptotic_rate, error_probability, evolve, response_probability, solve_poles, survival,
    AsymptoticRate, DynamicsError, PConvention, PoleSet, TimeGrid, Trajectory,
};
pub use model::{
    lorentzian_to_spectral, Classification, DecayRateResult, LorentzianModel, ModelError,
    SpectralModel,
};
pub use oracle::{compare, CompareOptions, CompareReport, DiscretizedSystem, OracleError};
pub use phasemap::{max_effect_eta, max_rate_ratio, phase_boundary, sweep, PhaseMap, PhaseMapError};
pub use spectral::{
    form_factor_curve, free_rate, measured_rate_general, measured_rate_lorentzian,
    renormalized_form_factor, sum_rule_check, FormFactorCurve, SpectralError, SumRuleCheck,
};
