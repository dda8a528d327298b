//! Average-case approximation complexity of additive random fields.
//!
//! An additive random field on the `d`-cube is a sum of independent
//! one-parameter processes, one per coordinate. Its covariance eigenvalues
//! are fully determined by the marginal spectra: one constant mode carrying
//! the sum of the marginal constant-mode eigenvalues, plus the merged
//! multiset of all marginal reduced spectra. The approximation complexity
//! `n(eps)` is the smallest number of leading eigenvalues whose partial sum
//! reaches `(1 - eps^2)` of the total trace.
//!
//! The crate computes that count three ways and checks them against each
//! other:
//!
//! * exactly, by scanning the merged spectrum with compensated summation
//!   ([`complexity::exact_complexity`], with a reduced-spectrum variant that
//!   brackets it within one term);
//! * through an integral representation, by building the eigenvalue-mass
//!   step distribution on the log scale and integrating its exponential
//!   quantile ([`spectral_df::integral_complexity`]);
//! * predictively, through limit distributions of the marginal and weight
//!   structure, including closed forms for Korobov kernel families
//!   ([`asymptotics`]).
//!
//! Everything is generic over the floating-point scalar through
//! [`num::Real`]; `*64` aliases at the crate root fix `f64` for the common
//! case. Summation order is deterministic, so equal inputs give bit-equal
//! outputs regardless of thread count in downstream drivers.

pub mod asymptotics;
pub mod complexity;
pub mod error;
pub mod field;
pub mod num;
pub mod spectra;
pub mod spectral_df;

pub use error::{Error, Result};
pub use num::{KahanSum, Real};

pub use spectra::{
    zeta, zeta_with_tolerance, KorobovFamily, KorobovParams, ListMode, MarginalSpectrum,
    RatioRule, SequenceModel, SigmaRule,
};

pub use field::{epsilon_zero, trace_divergence_probe, AdditiveField, Epsilon0};

pub use complexity::{
    complexity_curve, exact_complexity, homogeneous_complexity, reduced_complexity,
    ComplexityResult, CurvePoint, Method, PointOutcome, DEFAULT_TERM_CAP,
};

pub use spectral_df::{
    count_defect, default_comparison_grid, integral_complexity, marginal_distribution,
    spectral_distribution, sup_distance, weight_distribution, CountDefect, Sign,
    StepDistribution,
};

pub use asymptotics::{
    convergence_report, convolve_limit, korobov_epsilon0, korobov_limit_spec,
    korobov_linear_prediction, korobov_log_prediction, korobov_q, log_prediction,
    sharp_prediction, AsymptoticPrediction, ConvergenceReport, LimitDf, LimitSpec,
    PredictionValue, RegimeMode, ReportRow, Rule,
};

pub type MarginalSpectrum64 = MarginalSpectrum<f64>;
pub type KorobovParams64 = KorobovParams<f64>;
pub type KorobovFamily64 = KorobovFamily<f64>;
pub type SequenceModel64 = SequenceModel<f64>;
pub type AdditiveField64 = AdditiveField<f64>;
pub type ComplexityResult64 = ComplexityResult<f64>;
pub type StepDistribution64 = StepDistribution<f64>;
pub type CountDefect64 = CountDefect<f64>;
pub type LimitSpec64 = LimitSpec<f64>;
pub type AsymptoticPrediction64 = AsymptoticPrediction<f64>;
pub type ConvergenceReport64 = ConvergenceReport<f64>;
