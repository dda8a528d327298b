//! Large-dimension predictors for the complexity curve.
//!
//! When the marginal log-eigenvalue distributions settle down to a limit `U`
//! after centering by a monotone sequence, and the trace weights settle down
//! to a limit `W` after centering (and possibly norming) the same sequence,
//! the complexity grows regularly. Two prediction modes follow: a sharp one,
//! `n ~ e^{a_d} * trace_sum * integral`, when no norming is needed, and a
//! logarithmic one, `ln n = ln(trace_sum) + a_d + quantile * b_d + o(b_d)`,
//! when it is. The Korobov family admits closed forms on top of these:
//! linear growth `2 Q(eps) d` for decay exponents below 1, polynomial growth
//! `d^{1-(eps/eps0)^2}` at exponent exactly 1, and bounded or degenerate
//! behavior beyond.

use std::fmt;
use std::sync::Arc;

use crate::complexity::{complexity_curve_capped, CurvePoint, Method, PointOutcome, DEFAULT_TERM_CAP};
use crate::error::{Error, Result};
use crate::field::AdditiveField;
use crate::num::{cast, Real};
use crate::spectra::SequenceModel;
use crate::spectral_df::{Sign, StepDistribution};

/// Coverage slack tolerated when a step distribution stands in for a fully
/// covered limit: truncated builds of infinite spectra cannot reach mass 1
/// exactly.
pub const FULL_COVERAGE_TOL: f64 = 1e-9;

/// Scalar sequence indexed by dimension (or marginal position).
pub enum Rule<R> {
    /// Same value at every index.
    Constant(R),
    /// `offset + coeff * ln(index)`.
    LogOf { offset: R, coeff: R },
    /// Arbitrary user-supplied sequence.
    Custom(Arc<dyn Fn(usize) -> R + Send + Sync>),
}

impl<R: Real> Rule<R> {
    pub fn eval(&self, index: usize) -> R {
        let ir = R::from_usize(index).expect("index fits the scalar");
        match self {
            Rule::Constant(v) => *v,
            Rule::LogOf { offset, coeff } => *offset + *coeff * ir.ln(),
            Rule::Custom(f) => f(index),
        }
    }
}

impl<R: fmt::Debug> fmt::Debug for Rule<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::Constant(v) => f.debug_tuple("Constant").field(v).finish(),
            Rule::LogOf { offset, coeff } => f
                .debug_struct("LogOf")
                .field("offset", offset)
                .field("coeff", coeff)
                .finish(),
            Rule::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl<R: Clone> Clone for Rule<R> {
    fn clone(&self) -> Self {
        match self {
            Rule::Constant(v) => Rule::Constant(v.clone()),
            Rule::LogOf { offset, coeff } => Rule::LogOf { offset: offset.clone(), coeff: coeff.clone() },
            Rule::Custom(f) => Rule::Custom(Arc::clone(f)),
        }
    }
}

/// Limit distribution function, either atomic or one of the closed forms
/// arising from the Korobov family.
#[derive(Debug, Clone)]
pub enum LimitDf<R> {
    Step(StepDistribution<R>),
    /// `exp(rate * x)` for `x <= 0`, then 1; supported on the left half-line.
    ExpLeft { rate: R },
    /// `min(max(x, 0), 1)`: uniform mass on the unit interval.
    Uniform01,
}

impl<R: Real> LimitDf<R> {
    pub fn point_mass(loc: R) -> Self {
        LimitDf::Step(StepDistribution::point_mass(loc))
    }

    fn validate(&self) -> Result<()> {
        match self {
            LimitDf::Step(df) => {
                let deficit = R::one() - df.covered_mass();
                if deficit > cast(FULL_COVERAGE_TOL) {
                    return Err(Error::Coverage {
                        requested: 1.0,
                        covered: df.covered_mass().to_f64().unwrap_or(f64::NAN),
                    });
                }
                Ok(())
            }
            LimitDf::ExpLeft { rate } => {
                if !(rate.is_finite() && *rate > R::zero()) {
                    return Err(Error::invalid(format!(
                        "exponential limit rate must be positive and finite, got {rate}"
                    )));
                }
                Ok(())
            }
            LimitDf::Uniform01 => Ok(()),
        }
    }

    pub fn cdf(&self, x: R) -> R {
        match self {
            LimitDf::Step(df) => df.cdf(x),
            LimitDf::ExpLeft { rate } => {
                if x > R::zero() {
                    R::one()
                } else {
                    (*rate * x).exp()
                }
            }
            LimitDf::Uniform01 => {
                let clamped = if x < R::zero() { R::zero() } else { x };
                if clamped > R::one() {
                    R::one()
                } else {
                    clamped
                }
            }
        }
    }

    /// Generalized inverse at `y` in `(0, 1)` (atoms also admit `y = 1`).
    pub fn quantile(&self, y: R) -> Result<R> {
        match self {
            LimitDf::Step(df) => df.quantile(y),
            LimitDf::ExpLeft { rate } => {
                check_open_unit_level(y)?;
                Ok(y.ln() / *rate)
            }
            LimitDf::Uniform01 => {
                check_open_unit_level(y)?;
                Ok(y)
            }
        }
    }

    /// Quantile of the reflected distribution `x -> 1 - F((-x)-)`, the
    /// direction flip applied when the centering sequence decreases.
    pub fn reflected_quantile(&self, y: R) -> Result<R> {
        match self {
            LimitDf::Step(df) => df.reflected().quantile(y),
            LimitDf::ExpLeft { rate } => {
                // Reflected df: 1 - exp(-rate * x) on x >= 0.
                check_open_unit_level(y)?;
                Ok(-(R::one() - y).ln() / *rate)
            }
            LimitDf::Uniform01 => {
                // Reflected df: uniform mass on [-1, 0].
                check_open_unit_level(y)?;
                Ok(y - R::one())
            }
        }
    }
}

fn check_open_unit_level<R: Real>(y: R) -> Result<()> {
    if !(y > R::zero() && y < R::one()) {
        return Err(Error::domain(format!(
            "quantile level must lie strictly between 0 and 1, got {y}"
        )));
    }
    Ok(())
}

/// Everything the limit-based predictors need: the centering sequence for
/// marginal locations, its direction, the dimension centering (and optional
/// norming), and the two limit distributions.
#[derive(Debug, Clone)]
pub struct LimitSpec<R> {
    /// Location centering per marginal, monotone in the index.
    pub ell: Rule<R>,
    /// Plus when `ell` is non-decreasing, Minus when non-increasing.
    pub sign: Sign,
    /// Centering of the merged log-eigenvalue distribution per dimension.
    pub a_d: Rule<R>,
    /// Norming per dimension; absent in sharp mode, required (and diverging)
    /// in logarithmic mode.
    pub b_d: Option<Rule<R>>,
    /// Limit of the centered marginal log-eigenvalue distributions.
    pub u: LimitDf<R>,
    /// Limit of the centered (and normed) trace-weight distributions.
    pub w: LimitDf<R>,
}

impl<R: Real> LimitSpec<R> {
    /// Checks the norming sequence over an increasing grid: positive
    /// everywhere and growing between the two largest points.
    pub fn validate_on_grid(&self, d_grid: &[usize]) -> Result<()> {
        crate::field::check_grid(d_grid)?;
        if let Some(rule) = &self.b_d {
            for &d in d_grid {
                let b = rule.eval(d);
                if !(b.is_finite() && b > R::zero()) {
                    return Err(Error::invalid(format!("norming must be positive and finite, got {b} at dimension {d}")));
                }
            }
            if d_grid.len() >= 2 {
                let hi = rule.eval(d_grid[d_grid.len() - 1]);
                let lo = rule.eval(d_grid[d_grid.len() - 2]);
                if hi <= lo {
                    return Err(Error::invalid(format!(
                        "norming does not grow along the grid: {lo} at d={} vs {hi} at d={}",
                        d_grid[d_grid.len() - 2],
                        d_grid[d_grid.len() - 1]
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Prediction payload: an absolute count in sharp mode, its logarithm in
/// logarithmic mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PredictionValue<R> {
    Count(R),
    LogCount(R),
}

/// One evaluated prediction, with the eps-dependent factor split out.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticPrediction<R> {
    pub d: usize,
    pub value: PredictionValue<R>,
    /// The integral (sharp mode) or quantile (logarithmic mode) factor.
    pub constant_part: R,
}

/// Exact atomic convolution of two step distributions, with the second
/// input's locations entering through `sign`: atoms at `u + sign * w`.
///
/// Both inputs must be fully covered up to [`FULL_COVERAGE_TOL`].
pub fn convolve_limit<R: Real>(
    u: &StepDistribution<R>,
    w: &StepDistribution<R>,
    sign: Sign,
) -> Result<StepDistribution<R>> {
    for df in [u, w] {
        let deficit = R::one() - df.covered_mass();
        if deficit > cast(FULL_COVERAGE_TOL) {
            return Err(Error::Coverage {
                requested: 1.0,
                covered: df.covered_mass().to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    let mut atoms: Vec<(R, R)> = Vec::with_capacity(u.len() * w.len());
    for (uloc, umass) in u.atoms() {
        for (wloc, wmass) in w.atoms() {
            atoms.push((uloc + sign.factor::<R>() * wloc, umass * wmass));
        }
    }
    atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("atom locations are finite"));
    let mut grouped: Vec<(R, R)> = Vec::with_capacity(atoms.len());
    for (loc, mass) in atoms {
        match grouped.last_mut() {
            Some((last, acc)) if *last == loc => *acc = *acc + mass,
            _ => grouped.push((loc, mass)),
        }
    }
    StepDistribution::from_atoms(grouped)
}

fn critical_threshold<R: Real>(model: &SequenceModel<R>) -> Result<R> {
    Ok(crate::field::epsilon_zero(model)?.value())
}

fn check_eps_below<R: Real>(eps: R, eps0: R) -> Result<()> {
    crate::complexity::check_eps_open_unit(eps)?;
    if eps >= eps0 {
        return Err(Error::regime(format!(
            "accuracy threshold {eps} is at or above the critical limit {eps0}; predictions do not apply"
        )));
    }
    Ok(())
}

/// Sharp prediction `e^{a_d} * trace_sum * integral_0^{1-(eps/eps0)^2}
/// exp(F^{-1})`, where `F` is the atomic convolution of the two limits.
///
/// Requires a spec without norming and with both limits atomic.
pub fn sharp_prediction<R: Real>(
    model: &SequenceModel<R>,
    d: usize,
    eps: R,
    spec: &LimitSpec<R>,
) -> Result<AsymptoticPrediction<R>> {
    if spec.b_d.is_some() {
        return Err(Error::invalid(
            "spec carries a norming sequence; sharp predictions need none (use the logarithmic mode)",
        ));
    }
    spec.u.validate()?;
    spec.w.validate()?;
    let eps0 = critical_threshold(model)?;
    check_eps_below(eps, eps0)?;
    let (u, w) = match (&spec.u, &spec.w) {
        (LimitDf::Step(u), LimitDf::Step(w)) => (u, w),
        _ => {
            return Err(Error::invalid(
                "sharp predictions need atomic limit distributions; the exponential and uniform limits \
                 belong to the closed-form predictors",
            ))
        }
    };
    let f = convolve_limit(u, w, spec.sign)?;
    let ratio = eps / eps0;
    let q = R::one() - ratio * ratio;
    let constant_part = f.exp_quantile_integral(q)?;
    let field = AdditiveField::assemble(model, d)?;
    let value = spec.a_d.eval(d).exp() * field.reduced_trace_sum() * constant_part;
    Ok(AsymptoticPrediction { d, value: PredictionValue::Count(value), constant_part })
}

/// Logarithmic prediction `ln(trace_sum) + a_d + F^{-1}(1-(eps/eps0)^2) * b_d`
/// with `F` the weight limit (reflected when the centering decreases).
pub fn log_prediction<R: Real>(
    model: &SequenceModel<R>,
    d: usize,
    eps: R,
    spec: &LimitSpec<R>,
) -> Result<AsymptoticPrediction<R>> {
    let b_rule = spec.b_d.as_ref().ok_or_else(|| {
        Error::invalid("spec carries no norming sequence; logarithmic predictions need one")
    })?;
    spec.w.validate()?;
    let b = b_rule.eval(d);
    if !(b.is_finite() && b > R::zero()) {
        return Err(Error::domain(format!("norming must be positive and finite, got {b} at dimension {d}")));
    }
    let eps0 = critical_threshold(model)?;
    check_eps_below(eps, eps0)?;
    let ratio = eps / eps0;
    let q = R::one() - ratio * ratio;
    let quantile = match spec.sign {
        Sign::Plus => spec.w.quantile(q)?,
        Sign::Minus => spec.w.reflected_quantile(q)?,
    };
    let field = AdditiveField::assemble(model, d)?;
    let value = field.reduced_trace_sum().ln() + spec.a_d.eval(d) + quantile * b;
    Ok(AsymptoticPrediction { d, value: PredictionValue::LogCount(value), constant_part: quantile })
}

/// Critical accuracy limit of the Korobov family: `(1 + r/2)^{-1/2}`.
pub fn korobov_epsilon0<R: Real>(r: R) -> Result<R> {
    if !(r.is_finite() && r >= R::zero()) {
        return Err(Error::domain(format!(
            "constant-mode ratio must be nonnegative and finite, got {r}"
        )));
    }
    Ok((R::one() + r / cast(2.0)).sqrt().recip())
}

/// The linear-growth factor `Q(eps)`: `(1-(eps/eps0)^2)^{1/(1-tau)}` for
/// `tau` in `[0, 1)`, `1-(eps/eps0)^{2/(1-tau)}` below 0.
pub fn korobov_q<R: Real>(eps: R, tau: R, eps0: R) -> Result<R> {
    if !(tau.is_finite() && tau < R::one()) {
        return Err(Error::domain(format!(
            "decay exponent must be finite and below 1 for linear growth, got {tau}"
        )));
    }
    if !(eps0 > R::zero() && eps0 <= R::one()) {
        return Err(Error::domain(format!("critical limit must lie in (0, 1], got {eps0}")));
    }
    crate::complexity::check_eps_open_unit(eps)?;
    if eps >= eps0 {
        return Err(Error::domain(format!(
            "accuracy threshold {eps} is at or above the critical limit {eps0}"
        )));
    }
    let ratio = eps / eps0;
    let inv = (R::one() - tau).recip();
    if tau >= R::zero() {
        Ok((R::one() - ratio * ratio).powf(inv))
    } else {
        Ok(R::one() - ratio.powf(cast::<R>(2.0) * inv))
    }
}

/// Linear-regime prediction `2 Q(eps) d`.
pub fn korobov_linear_prediction<R: Real>(d: usize, eps: R, tau: R, eps0: R) -> Result<R> {
    if d == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    let q = korobov_q(eps, tau, eps0)?;
    Ok(cast::<R>(2.0) * q * R::from_usize(d).expect("dimension fits the scalar"))
}

/// Polynomial-regime prediction of the log-count: `(1-(eps/eps0)^2) ln d`.
pub fn korobov_log_prediction<R: Real>(d: usize, eps: R, eps0: R) -> Result<R> {
    if d < 2 {
        return Err(Error::invalid("log predictions need dimension at least 2"));
    }
    if !(eps0 > R::zero() && eps0 <= R::one()) {
        return Err(Error::domain(format!("critical limit must lie in (0, 1], got {eps0}")));
    }
    crate::complexity::check_eps_open_unit(eps)?;
    if eps >= eps0 {
        return Err(Error::domain(format!(
            "accuracy threshold {eps} is at or above the critical limit {eps0}"
        )));
    }
    let ratio = eps / eps0;
    Ok((R::one() - ratio * ratio) * R::from_usize(d).expect("dimension fits the scalar").ln())
}

/// The limit spec the Korobov family converges to: centering
/// `ell_j = -ln c + tau ln j`, point-mass marginal limit (the growing decay
/// exponents concentrate each marginal's mass on its leading pair), and the
/// weight limit determined by `tau`.
pub fn korobov_limit_spec<R: Real>(c: R, tau: R) -> Result<LimitSpec<R>> {
    if !(c.is_finite() && c > R::zero()) {
        return Err(Error::invalid(format!("scale must be positive and finite, got {c}")));
    }
    if !tau.is_finite() {
        return Err(Error::invalid(format!("decay exponent must be finite, got {tau}")));
    }
    if tau > R::one() {
        return Err(Error::invalid(format!(
            "decay exponent {tau} puts the family in the bounded regime; no limit spec exists"
        )));
    }
    let ell = Rule::LogOf { offset: -c.ln(), coeff: tau };
    let u = LimitDf::point_mass(R::zero());
    if tau == R::one() {
        return Ok(LimitSpec {
            ell,
            sign: Sign::Plus,
            a_d: Rule::Constant(R::zero()),
            b_d: Some(Rule::LogOf { offset: R::zero(), coeff: R::one() }),
            u,
            w: LimitDf::Uniform01,
        });
    }
    let sign = if tau < R::zero() { Sign::Minus } else { Sign::Plus };
    let w = if tau == R::zero() {
        LimitDf::point_mass(R::zero())
    } else if tau > R::zero() {
        LimitDf::ExpLeft { rate: (R::one() - tau) / tau }
    } else {
        LimitDf::ExpLeft { rate: (tau - R::one()) / tau }
    };
    Ok(LimitSpec { ell: ell.clone(), sign, a_d: ell, b_d: None, u, w })
}

/// Growth regime of a Korobov parametric model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeMode {
    /// `tau < 1`, finite ratio: count grows like `2 Q(eps) d`.
    Linear,
    /// `tau = 1`, finite ratio: log-count grows like `(1-(eps/eps0)^2) ln d`.
    Logarithmic,
    /// `tau > 1`: summable traces, count plateaus.
    Bounded,
    /// Infinite ratio: constant modes dominate, count collapses to 1.
    Degenerate,
}

/// One grid row of a convergence report.
#[derive(Debug, Clone)]
pub struct ReportRow<R> {
    pub d: usize,
    pub exact: PointOutcome<R>,
    pub prediction: Option<PredictionValue<R>>,
    /// `exact / prediction` in the linear regime, `ln(exact) - prediction`
    /// in the logarithmic one.
    pub comparison: Option<R>,
}

/// Exact counts against the applicable closed-form prediction over a
/// dimension grid.
#[derive(Debug, Clone)]
pub struct ConvergenceReport<R> {
    pub mode: RegimeMode,
    /// Critical accuracy limit; absent in the degenerate regime where it
    /// collapses to 0.
    pub epsilon0: Option<R>,
    pub rows: Vec<ReportRow<R>>,
}

pub fn convergence_report<R: Real>(
    model: &SequenceModel<R>,
    eps: R,
    d_grid: &[usize],
) -> Result<ConvergenceReport<R>> {
    convergence_report_capped(model, eps, d_grid, DEFAULT_TERM_CAP)
}

pub fn convergence_report_capped<R: Real>(
    model: &SequenceModel<R>,
    eps: R,
    d_grid: &[usize],
    cap: u64,
) -> Result<ConvergenceReport<R>> {
    let family = match model {
        SequenceModel::KorobovParametric(family) => family,
        _ => {
            return Err(Error::invalid(
                "convergence reports are defined for the Korobov parametric model only",
            ))
        }
    };
    crate::field::check_grid(d_grid)?;
    crate::complexity::check_eps_open_unit(eps)?;

    let r = family.ratio().limit();
    let tau = family.tau();
    let mode = if r.is_infinite() {
        RegimeMode::Degenerate
    } else if tau > R::one() {
        RegimeMode::Bounded
    } else if tau == R::one() {
        RegimeMode::Logarithmic
    } else {
        RegimeMode::Linear
    };

    let epsilon0 = match mode {
        RegimeMode::Degenerate => None,
        _ => Some(korobov_epsilon0(r)?),
    };
    // Predictive regimes reject accuracies past the critical limit up front.
    if let Some(eps0) = epsilon0 {
        if matches!(mode, RegimeMode::Linear | RegimeMode::Logarithmic) && eps >= eps0 {
            return Err(Error::regime(format!(
                "accuracy threshold {eps} is at or above the critical limit {eps0}; predictions do not apply"
            )));
        }
    }

    // Degenerate models carry infinite constant modes and cannot be
    // materialized; the count collapses to 1, so only flag the rows.
    if mode == RegimeMode::Degenerate {
        let rows = d_grid
            .iter()
            .map(|&d| ReportRow {
                d,
                exact: PointOutcome::RegimeSkipped(
                    "constant modes dominate every trace; the count collapses to 1".to_string(),
                ),
                prediction: None,
                comparison: None,
            })
            .collect();
        return Ok(ConvergenceReport { mode, epsilon0, rows });
    }

    let curve = complexity_curve_capped(model, eps, d_grid, Method::Exact, cap)?;
    let mut rows = Vec::with_capacity(curve.len());
    for CurvePoint { d, outcome } in curve {
        let prediction = match mode {
            RegimeMode::Linear => Some(PredictionValue::Count(korobov_linear_prediction(
                d,
                eps,
                tau,
                epsilon0.expect("linear regime has a critical limit"),
            )?)),
            RegimeMode::Logarithmic if d >= 2 => Some(PredictionValue::LogCount(
                korobov_log_prediction(d, eps, epsilon0.expect("logarithmic regime has a critical limit"))?,
            )),
            _ => None,
        };
        let comparison = match (&outcome, &prediction) {
            (PointOutcome::Computed(result), Some(PredictionValue::Count(p))) => {
                Some(R::from_u64(result.n).expect("count fits the scalar") / *p)
            }
            (PointOutcome::Computed(result), Some(PredictionValue::LogCount(p))) => {
                Some(R::from_u64(result.n).expect("count fits the scalar").ln() - *p)
            }
            _ => None,
        };
        rows.push(ReportRow { d, exact: outcome, prediction, comparison });
    }
    Ok(ConvergenceReport { mode, epsilon0, rows })
}
