//! Marginal eigenvalue spectra.
//!
//! A marginal process enters every downstream computation only through its
//! eigenvalue data: the eigenvalue `lambda0` attached to the constant
//! eigenfunction, and the remaining ("reduced") eigenvalues streamed in
//! non-increasing order. This module provides that data for the two concrete
//! kernel families the crate ships (Korobov kernels and explicit finite
//! lists), plus the rules that generate whole sequences of marginals.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::num::{cast, KahanSum, Real};

/// Absolute tolerance targeted by [`zeta`].
pub const ZETA_TOL: f64 = 1e-12;

/// Exponents this close to 1 (or below) are rejected: the series is about to
/// diverge and the certified truncation point grows without bound.
pub const ZETA_MIN_EXPONENT_MARGIN: f64 = 1e-6;

/// Riemann zeta function for real exponent `p > 1`, within [`ZETA_TOL`].
///
/// See [`zeta_with_tolerance`] for the method and its cost model.
pub fn zeta<R: Real>(p: R) -> Result<R> {
    zeta_with_tolerance(p, cast(ZETA_TOL))
}

/// Riemann zeta function with a caller-chosen absolute tolerance.
///
/// Direct summation of `K` terms plus the integral tail bracket
/// `(K+1)^(1-p)/(p-1) <= tail <= K^(1-p)/(p-1)`; `K` is chosen so the bracket
/// width is below `tol` and the bracket midpoint is added, certifying an
/// absolute error of at most `tol/2` plus summation ulps. `K` grows like
/// `tol^(-1/p)`, so calls with `p` close to 1 are slow but still certified.
pub fn zeta_with_tolerance<R: Real>(p: R, tol: R) -> Result<R> {
    if !p.is_finite() {
        return Err(Error::domain(format!("zeta exponent must be finite, got {p}")));
    }
    let min_p = R::one() + cast(ZETA_MIN_EXPONENT_MARGIN);
    if p < min_p {
        return Err(Error::domain(format!(
            "zeta exponent must exceed 1 + {ZETA_MIN_EXPONENT_MARGIN} (divergence guard), got {p}"
        )));
    }
    if !(tol > R::zero()) {
        return Err(Error::domain(format!("zeta tolerance must be positive, got {tol}")));
    }

    // Bracket width after K terms is (K^(1-p) - (K+1)^(1-p))/(p-1) < K^(-p),
    // so K = ceil(tol^(-1/p)) suffices.
    let k_estimate = tol.powf(-p.recip()).ceil();
    let terms = k_estimate.to_u64().unwrap_or(u64::MAX).max(1);

    let mut partial = KahanSum::<R>::new();
    for k in 1..=terms {
        let kr = R::from_u64(k).expect("term index fits the scalar");
        partial.add(kr.powf(-p));
    }

    let km = R::from_u64(terms).expect("term count fits the scalar");
    let one = R::one();
    let upper = km.powf(one - p) / (p - one);
    let lower = (km + one).powf(one - p) / (p - one);
    Ok(partial.value() + (upper + lower) / cast(2.0))
}

/// Parameters of a Korobov-type covariance kernel.
///
/// The eigenvalue sequence is `alpha` for the constant mode and the pair
/// pattern `beta, beta, beta*2^(-sigma), beta*2^(-sigma), ...` for the rest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KorobovParams<R> {
    alpha: R,
    beta: R,
    sigma: R,
}

impl<R: Real> KorobovParams<R> {
    /// Requires `alpha > 0`, `beta > 0` and `sigma` above the zeta guard
    /// (`1 + 1e-6`), so that the reduced trace `2 beta zeta(sigma)` is always
    /// computable.
    pub fn new(alpha: R, beta: R, sigma: R) -> Result<Self> {
        if !(alpha.is_finite() && alpha > R::zero()) {
            return Err(Error::invalid(format!("korobov alpha must be positive and finite, got {alpha}")));
        }
        check_korobov_shape(beta, sigma)?;
        Ok(KorobovParams { alpha, beta, sigma })
    }

    pub fn alpha(&self) -> R {
        self.alpha
    }

    pub fn beta(&self) -> R {
        self.beta
    }

    pub fn sigma(&self) -> R {
        self.sigma
    }

    /// `k`-th eigenvalue: `alpha` at `k = 0`, then `beta * ceil(k/2)^(-sigma)`.
    pub fn eigenvalue(&self, k: u64) -> R {
        if k == 0 {
            self.alpha
        } else {
            korobov_reduced_eigenvalue(self.beta, self.sigma, k)
        }
    }

    /// Materializes the marginal spectrum; the reduced trace is the closed
    /// form `2 beta zeta(sigma)`.
    pub fn spectrum(&self) -> MarginalSpectrum<R> {
        MarginalSpectrum::korobov_from_parts(self.alpha, self.beta, self.sigma)
            .expect("validated parameters always yield a spectrum")
    }
}

fn check_korobov_shape<R: Real>(beta: R, sigma: R) -> Result<()> {
    if !(beta.is_finite() && beta > R::zero()) {
        return Err(Error::invalid(format!("korobov beta must be positive and finite, got {beta}")));
    }
    let min_sigma = R::one() + cast(ZETA_MIN_EXPONENT_MARGIN);
    if !(sigma.is_finite() && sigma >= min_sigma) {
        return Err(Error::invalid(format!(
            "korobov sigma must be finite and at least 1 + {ZETA_MIN_EXPONENT_MARGIN}, got {sigma}"
        )));
    }
    Ok(())
}

#[inline]
fn korobov_reduced_eigenvalue<R: Real>(beta: R, sigma: R, k: u64) -> R {
    let pair = k.div_ceil(2);
    let pr = R::from_u64(pair).expect("pair index fits the scalar");
    beta * pr.powf(-sigma)
}

#[derive(Debug, Clone)]
enum SpectrumKind<R> {
    Korobov { beta: R, sigma: R },
    Explicit { values: Arc<[R]> },
}

/// Eigenvalue data of one marginal process.
///
/// `lambda0` is the eigenvalue of the constant eigenfunction and is carried
/// separately; [`MarginalSpectrum::eigenvalues`] streams the remaining
/// spectrum in non-increasing order. Clones are cheap (explicit lists are
/// shared).
#[derive(Debug, Clone)]
pub struct MarginalSpectrum<R> {
    lambda0: R,
    reduced_trace: R,
    kind: SpectrumKind<R>,
}

impl<R: Real> MarginalSpectrum<R> {
    /// Spectrum of a Korobov kernel (see [`KorobovParams::spectrum`]).
    pub fn korobov(params: &KorobovParams<R>) -> Self {
        params.spectrum()
    }

    /// Internal constructor that also covers the parametric families, where
    /// the constant-mode eigenvalue may legitimately be zero.
    pub(crate) fn korobov_from_parts(lambda0: R, beta: R, sigma: R) -> Result<Self> {
        if !(lambda0.is_finite() && lambda0 >= R::zero()) {
            return Err(Error::invalid(format!(
                "constant-mode eigenvalue must be nonnegative and finite, got {lambda0}"
            )));
        }
        check_korobov_shape(beta, sigma)?;
        let reduced_trace = cast::<R>(2.0) * beta * zeta(sigma)?;
        Ok(MarginalSpectrum {
            lambda0,
            reduced_trace,
            kind: SpectrumKind::Korobov { beta, sigma },
        })
    }

    /// Spectrum given as an explicit finite list of reduced eigenvalues in
    /// non-increasing order (validated), plus the constant-mode eigenvalue.
    pub fn explicit(lambda0: R, values: Vec<R>) -> Result<Self> {
        if !(lambda0.is_finite() && lambda0 >= R::zero()) {
            return Err(Error::invalid(format!(
                "constant-mode eigenvalue must be nonnegative and finite, got {lambda0}"
            )));
        }
        for (i, v) in values.iter().enumerate() {
            if !(v.is_finite() && *v >= R::zero()) {
                return Err(Error::invalid(format!(
                    "eigenvalue at index {i} must be nonnegative and finite, got {v}"
                )));
            }
            if i > 0 && values[i - 1] < *v {
                return Err(Error::invalid(format!(
                    "eigenvalues must be non-increasing; index {i} rises from {} to {v}",
                    values[i - 1]
                )));
            }
        }
        let reduced_trace: KahanSum<R> = values.iter().copied().collect();
        Ok(MarginalSpectrum {
            lambda0,
            reduced_trace: reduced_trace.value(),
            kind: SpectrumKind::Explicit { values: values.into() },
        })
    }

    pub fn lambda0(&self) -> R {
        self.lambda0
    }

    /// Sum of the streamed (reduced) eigenvalues.
    pub fn reduced_trace(&self) -> R {
        self.reduced_trace
    }

    /// Total trace `lambda0 + reduced_trace`.
    pub fn full_trace(&self) -> R {
        self.lambda0 + self.reduced_trace
    }

    /// First streamed eigenvalue, if the reduced spectrum is nonempty.
    pub fn largest_eigenvalue(&self) -> Option<R> {
        match &self.kind {
            SpectrumKind::Korobov { beta, .. } => Some(*beta),
            SpectrumKind::Explicit { values } => values.first().copied(),
        }
    }

    /// Streams the reduced eigenvalues in non-increasing order.
    pub fn eigenvalues(&self) -> EigenvalueIter<R> {
        match &self.kind {
            SpectrumKind::Korobov { beta, sigma } => EigenvalueIter {
                kind: IterKind::Korobov {
                    beta: *beta,
                    sigma: *sigma,
                    next_k: 1,
                    pair_value: R::zero(),
                },
            },
            SpectrumKind::Explicit { values } => EigenvalueIter {
                kind: IterKind::Explicit {
                    values: Arc::clone(values),
                    next: 0,
                },
            },
        }
    }

    /// Upper bound on the reduced-trace mass beyond the first `prefix_len`
    /// streamed eigenvalues, so that for every `K`
    /// `prefix_sum(K) <= reduced_trace <= prefix_sum(K) + tail_bound(K)`.
    ///
    /// Explicit lists return the exact remaining sum; Korobov spectra use the
    /// integral bound `sum_{m>p} m^(-sigma) <= p^(1-sigma)/(sigma-1)`.
    pub fn tail_bound(&self, prefix_len: usize) -> R {
        match &self.kind {
            SpectrumKind::Explicit { values } => {
                if prefix_len >= values.len() {
                    R::zero()
                } else {
                    let rest: KahanSum<R> = values[prefix_len..].iter().copied().collect();
                    rest.value()
                }
            }
            SpectrumKind::Korobov { beta, sigma } => {
                if prefix_len == 0 {
                    return self.reduced_trace;
                }
                let one = R::one();
                let two = cast::<R>(2.0);
                let pairs = (prefix_len / 2) as u64;
                if prefix_len % 2 == 0 {
                    let p = R::from_u64(pairs).expect("pair count fits the scalar");
                    two * *beta * p.powf(one - *sigma) / (*sigma - one)
                } else {
                    // One element of pair `pairs + 1` is already consumed.
                    let p1 = R::from_u64(pairs + 1).expect("pair count fits the scalar");
                    *beta * p1.powf(-*sigma) + two * *beta * p1.powf(one - *sigma) / (*sigma - one)
                }
            }
        }
    }
}

enum IterKind<R> {
    Korobov { beta: R, sigma: R, next_k: u64, pair_value: R },
    Explicit { values: Arc<[R]>, next: usize },
}

/// Stream over the reduced eigenvalues of one marginal; infinite for Korobov
/// spectra. Paired Korobov eigenvalues are computed once and repeated, so
/// equal pairs are bit-identical.
pub struct EigenvalueIter<R> {
    kind: IterKind<R>,
}

impl<R: Real> Iterator for EigenvalueIter<R> {
    type Item = R;

    fn next(&mut self) -> Option<R> {
        match &mut self.kind {
            IterKind::Korobov { beta, sigma, next_k, pair_value } => {
                let k = *next_k;
                *next_k += 1;
                if k % 2 == 1 {
                    *pair_value = korobov_reduced_eigenvalue(*beta, *sigma, k);
                }
                Some(*pair_value)
            }
            IterKind::Explicit { values, next } => {
                let v = values.get(*next).copied();
                if v.is_some() {
                    *next += 1;
                }
                v
            }
        }
    }
}

/// Rule `j -> sigma_j` for the Korobov parametric family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaRule<R> {
    Constant { value: R },
    /// `s0 + s1 * j`
    Affine { s0: R, s1: R },
    /// `s0 + s1 * ln(1 + j)`
    LogAffine { s0: R, s1: R },
}

impl<R: Real> SigmaRule<R> {
    pub fn value_at(&self, j: usize) -> R {
        let jr = R::from_usize(j).expect("index fits the scalar");
        match self {
            SigmaRule::Constant { value } => *value,
            SigmaRule::Affine { s0, s1 } => *s0 + *s1 * jr,
            SigmaRule::LogAffine { s0, s1 } => *s0 + *s1 * jr.ln_1p(),
        }
    }
}

/// Rule `j -> alpha_j / beta_j = r + rho / j`; `r` may be infinite, which
/// marks the degenerate regime (the constant mode dominates and the
/// complexity collapses to 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioRule<R> {
    r: R,
    rho: R,
}

impl<R: Real> RatioRule<R> {
    pub fn new(r: R, rho: R) -> Result<Self> {
        if r.is_nan() || r < R::zero() {
            return Err(Error::invalid(format!("ratio limit r must be nonnegative (possibly infinite), got {r}")));
        }
        if !rho.is_finite() {
            return Err(Error::invalid(format!("ratio correction rho must be finite, got {rho}")));
        }
        Ok(RatioRule { r, rho })
    }

    pub fn constant(r: R) -> Result<Self> {
        Self::new(r, R::zero())
    }

    /// Limit value `r`.
    pub fn limit(&self) -> R {
        self.r
    }

    pub fn value_at(&self, j: usize) -> R {
        let jr = R::from_usize(j).expect("index fits the scalar");
        self.r + self.rho / jr
    }
}

/// How an explicit list of marginals extends to arbitrary dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ListMode {
    /// Reuse the list cyclically.
    Cycle,
    /// Indices past the end are a configuration error.
    Truncate,
}

/// Korobov parametric family: `beta_j = c * j^(-tau)`,
/// `alpha_j = ratio(j) * beta_j`, `sigma_j` from the sigma rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KorobovFamily<R> {
    c: R,
    tau: R,
    ratio: RatioRule<R>,
    sigma: SigmaRule<R>,
}

impl<R: Real> KorobovFamily<R> {
    pub fn new(c: R, tau: R, ratio: RatioRule<R>, sigma: SigmaRule<R>) -> Result<Self> {
        if !(c.is_finite() && c > R::zero()) {
            return Err(Error::invalid(format!("scale c must be positive and finite, got {c}")));
        }
        if !tau.is_finite() {
            return Err(Error::invalid(format!("decay exponent tau must be finite, got {tau}")));
        }
        Ok(KorobovFamily { c, tau, ratio, sigma })
    }

    pub fn c(&self) -> R {
        self.c
    }

    pub fn tau(&self) -> R {
        self.tau
    }

    pub fn ratio(&self) -> &RatioRule<R> {
        &self.ratio
    }

    pub fn sigma_rule(&self) -> &SigmaRule<R> {
        &self.sigma
    }

    pub fn beta_at(&self, j: usize) -> R {
        let jr = R::from_usize(j).expect("index fits the scalar");
        self.c * jr.powf(-self.tau)
    }
}

/// Generates the sequence of marginal spectra defining an additive field of
/// any dimension.
#[derive(Debug, Clone)]
pub enum SequenceModel<R> {
    KorobovParametric(KorobovFamily<R>),
    ExplicitList { spectra: Vec<MarginalSpectrum<R>>, mode: ListMode },
    Homogeneous(MarginalSpectrum<R>),
}

impl<R: Real> SequenceModel<R> {
    pub fn korobov_parametric(family: KorobovFamily<R>) -> Self {
        SequenceModel::KorobovParametric(family)
    }

    pub fn explicit_list(spectra: Vec<MarginalSpectrum<R>>, mode: ListMode) -> Result<Self> {
        if spectra.is_empty() {
            return Err(Error::invalid("explicit model needs at least one marginal spectrum"));
        }
        Ok(SequenceModel::ExplicitList { spectra, mode })
    }

    pub fn homogeneous(spectrum: MarginalSpectrum<R>) -> Self {
        SequenceModel::Homogeneous(spectrum)
    }

    /// Spectrum of the `j`-th marginal, `j >= 1`.
    pub fn marginal_at(&self, j: usize) -> Result<MarginalSpectrum<R>> {
        if j == 0 {
            return Err(Error::invalid("marginal indices start at 1"));
        }
        match self {
            SequenceModel::KorobovParametric(family) => {
                let beta = family.beta_at(j);
                if !(beta.is_finite() && beta > R::zero()) {
                    return Err(Error::invalid(format!(
                        "marginal {j}: beta_j = {beta} is not positive and finite"
                    )));
                }
                let sigma = family.sigma.value_at(j);
                let ratio = family.ratio.value_at(j);
                if !(ratio.is_finite() && ratio >= R::zero()) {
                    return Err(Error::invalid(format!(
                        "marginal {j}: ratio alpha_j/beta_j = {ratio} is not nonnegative and finite \
                         (an infinite ratio is the degenerate regime; no spectrum exists)"
                    )));
                }
                let lambda0 = ratio * beta;
                MarginalSpectrum::korobov_from_parts(lambda0, beta, sigma)
                    .map_err(|e| Error::invalid(format!("marginal {j}: {e}")))
            }
            SequenceModel::ExplicitList { spectra, mode } => match mode {
                ListMode::Cycle => Ok(spectra[(j - 1) % spectra.len()].clone()),
                ListMode::Truncate => spectra.get(j - 1).cloned().ok_or_else(|| {
                    Error::invalid(format!(
                        "marginal {j} requested but the explicit list has only {} entries (truncating mode)",
                        spectra.len()
                    ))
                }),
            },
            SequenceModel::Homogeneous(spectrum) => Ok(spectrum.clone()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    // Independent oracle: 1e7-term direct sum with integral tail midpoint,
    // certified well below 1e-10 for p >= 1.5.
    fn zeta_oracle(p: f64) -> f64 {
        const K: u64 = 10_000_000;
        let mut acc = KahanSum::<f64>::new();
        for k in 1..=K {
            acc.add((k as f64).powf(-p));
        }
        let km = K as f64;
        let upper = km.powf(1.0 - p) / (p - 1.0);
        let lower = (km + 1.0).powf(1.0 - p) / (p - 1.0);
        acc.value() + 0.5 * (upper + lower)
    }

    #[test]
    fn zeta_matches_closed_forms() {
        let pi = std::f64::consts::PI;
        assert_abs_diff_eq!(zeta::<f64>(2.0).unwrap(), pi * pi / 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(zeta::<f64>(4.0).unwrap(), pi.powi(4) / 90.0, epsilon = 1e-12);
    }

    #[test]
    fn zeta_matches_brute_force_oracle() {
        for p in [1.5, 2.0, 3.0, 10.0] {
            let got = zeta::<f64>(p).unwrap();
            assert_abs_diff_eq!(got, zeta_oracle(p), epsilon = 1e-10);
        }
    }

    #[test]
    fn zeta_rejects_divergent_exponents() {
        assert!(matches!(zeta::<f64>(1.0), Err(Error::Domain(_))));
        assert!(matches!(zeta::<f64>(0.5), Err(Error::Domain(_))));
        assert!(matches!(zeta::<f64>(1.0 + 1e-7), Err(Error::Domain(_))));
        assert!(matches!(zeta::<f64>(f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn korobov_eigenvalues_pair_up() {
        let params = KorobovParams::new(1.0, 1.0, 2.0).unwrap();
        assert_eq!(params.eigenvalue(0), 1.0);
        assert_eq!(params.eigenvalue(1), 1.0);
        assert_eq!(params.eigenvalue(2), 1.0);
        assert_eq!(params.eigenvalue(3), 0.25);
        assert_eq!(params.eigenvalue(4), 0.25);
        assert_eq!(params.eigenvalue(5), (3.0f64).powf(-2.0));
    }

    #[test]
    fn korobov_stream_matches_indexing_and_pairs_bit_exactly() {
        let params = KorobovParams::new(0.7, 1.3, 1.7).unwrap();
        let spectrum = params.spectrum();
        let streamed: Vec<f64> = spectrum.eigenvalues().take(101).collect();
        for (i, v) in streamed.iter().enumerate() {
            assert_eq!(v.to_bits(), params.eigenvalue((i + 1) as u64).to_bits(), "k = {}", i + 1);
        }
        for pair in streamed.chunks_exact(2) {
            assert_eq!(pair[0].to_bits(), pair[1].to_bits());
        }
        // Non-increasing over a long prefix.
        let long: Vec<f64> = spectrum.eigenvalues().take(10_000).collect();
        assert!(long.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn korobov_reduced_trace_is_closed_form() {
        let params = KorobovParams::new(1.0, 1.0, 2.0).unwrap();
        let spectrum = params.spectrum();
        let pi = std::f64::consts::PI;
        assert_abs_diff_eq!(spectrum.reduced_trace(), pi * pi / 3.0, epsilon = 1e-11);
        assert_abs_diff_eq!(spectrum.full_trace(), 1.0 + pi * pi / 3.0, epsilon = 1e-11);
    }

    #[test]
    fn korobov_tail_bound_brackets_the_trace() {
        let params = KorobovParams::new(1.0, 1.0, 2.0).unwrap();
        let spectrum = params.spectrum();
        // Spot value: even prefix of 100 eigenvalues = 50 pairs.
        assert_abs_diff_eq!(spectrum.tail_bound(100), 0.04, epsilon = 1e-15);

        for prefix in [0usize, 1, 2, 3, 7, 100, 101, 1001] {
            let head: KahanSum<f64> = spectrum.eigenvalues().take(prefix).collect();
            let lo = head.value();
            let hi = lo + spectrum.tail_bound(prefix);
            assert!(lo <= spectrum.reduced_trace() + 1e-12, "prefix {prefix}");
            assert!(spectrum.reduced_trace() <= hi + 1e-12, "prefix {prefix}");
        }
    }

    #[test]
    fn explicit_spectrum_validates_order_and_sign() {
        assert!(MarginalSpectrum::explicit(1.0, vec![0.5, 0.5, 0.25]).is_ok());
        assert!(MarginalSpectrum::explicit(0.0, vec![]).is_ok());
        assert!(matches!(
            MarginalSpectrum::explicit(1.0, vec![0.25, 0.5]),
            Err(Error::Invalid(_))
        ));
        assert!(matches!(
            MarginalSpectrum::explicit(1.0, vec![0.5, -0.1]),
            Err(Error::Invalid(_))
        ));
        assert!(matches!(
            MarginalSpectrum::explicit(-1.0, vec![0.5]),
            Err(Error::Invalid(_))
        ));
        assert!(matches!(
            MarginalSpectrum::explicit(1.0, vec![f64::NAN]),
            Err(Error::Invalid(_))
        ));
    }

    #[test]
    fn explicit_spectrum_traces_and_tail() {
        let s = MarginalSpectrum::explicit(1.0, vec![0.5, 0.5]).unwrap();
        assert_eq!(s.reduced_trace(), 1.0);
        assert_eq!(s.full_trace(), 2.0);
        assert_eq!(s.tail_bound(0), 1.0);
        assert_eq!(s.tail_bound(1), 0.5);
        assert_eq!(s.tail_bound(2), 0.0);
        assert_eq!(s.tail_bound(9), 0.0);
        assert_eq!(s.largest_eigenvalue(), Some(0.5));
        let collected: Vec<f64> = s.eigenvalues().collect();
        assert_eq!(collected, vec![0.5, 0.5]);
    }

    #[test]
    fn parametric_family_materializes_marginals() {
        // beta_1 = 1, sigma_1 = 2 + ln 2, alpha_1 = 0.5.
        let family = KorobovFamily::new(
            1.0,
            0.5,
            RatioRule::constant(0.5).unwrap(),
            SigmaRule::LogAffine { s0: 2.0, s1: 1.0 },
        )
        .unwrap();
        let model = SequenceModel::korobov_parametric(family);
        let m1 = model.marginal_at(1).unwrap();
        assert_abs_diff_eq!(m1.lambda0(), 0.5, epsilon = 1e-15);
        assert_eq!(m1.largest_eigenvalue(), Some(1.0));
        let sigma1 = 2.0 + (2.0f64).ln();
        assert_abs_diff_eq!(
            m1.reduced_trace(),
            2.0 * zeta::<f64>(sigma1).unwrap(),
            epsilon = 1e-12
        );

        let m4 = model.marginal_at(4).unwrap();
        assert_abs_diff_eq!(m4.largest_eigenvalue().unwrap(), 0.5, epsilon = 1e-15);

        assert!(matches!(model.marginal_at(0), Err(Error::Invalid(_))));
    }

    #[test]
    fn parametric_family_rejects_bad_sigma_naming_the_index() {
        // Affine rule with negative slope dips to sigma = 1 at j = 10.
        let family = KorobovFamily::new(
            1.0,
            0.0,
            RatioRule::constant(0.0).unwrap(),
            SigmaRule::Affine { s0: 2.0, s1: -0.1 },
        )
        .unwrap();
        let model = SequenceModel::korobov_parametric(family);
        assert!(model.marginal_at(5).is_ok());
        let err = model.marginal_at(10).unwrap_err();
        match err {
            Error::Invalid(msg) => assert!(msg.contains("marginal 10"), "message: {msg}"),
            other => panic!("expected Invalid, got {other:?}"),
        }
    }

    #[test]
    fn parametric_family_with_zero_ratio_has_zero_lambda0() {
        let family = KorobovFamily::new(
            1.0,
            0.5,
            RatioRule::constant(0.0).unwrap(),
            SigmaRule::LogAffine { s0: 2.0, s1: 1.0 },
        )
        .unwrap();
        let model = SequenceModel::korobov_parametric(family);
        assert_eq!(model.marginal_at(3).unwrap().lambda0(), 0.0);
    }

    #[test]
    fn parametric_family_with_infinite_ratio_errors() {
        let family = KorobovFamily::new(
            1.0,
            0.5,
            RatioRule::constant(f64::INFINITY).unwrap(),
            SigmaRule::Constant { value: 2.0 },
        )
        .unwrap();
        let model = SequenceModel::korobov_parametric(family);
        assert!(matches!(model.marginal_at(1), Err(Error::Invalid(_))));
    }

    #[test]
    fn explicit_list_modes() {
        let a = MarginalSpectrum::explicit(1.0, vec![0.5, 0.5]).unwrap();
        let b = MarginalSpectrum::explicit(0.5, vec![0.25, 0.25]).unwrap();

        let cyclic = SequenceModel::explicit_list(vec![a.clone(), b.clone()], ListMode::Cycle).unwrap();
        assert_eq!(cyclic.marginal_at(1).unwrap().lambda0(), 1.0);
        assert_eq!(cyclic.marginal_at(2).unwrap().lambda0(), 0.5);
        assert_eq!(cyclic.marginal_at(3).unwrap().lambda0(), 1.0);

        let truncating = SequenceModel::explicit_list(vec![a, b], ListMode::Truncate).unwrap();
        assert!(truncating.marginal_at(2).is_ok());
        assert!(matches!(truncating.marginal_at(3), Err(Error::Invalid(_))));

        assert!(SequenceModel::<f64>::explicit_list(vec![], ListMode::Cycle).is_err());
    }

    #[test]
    fn homogeneous_model_repeats_the_spectrum() {
        let s = MarginalSpectrum::explicit(1.0, vec![0.5, 0.5]).unwrap();
        let model = SequenceModel::homogeneous(s);
        for j in [1usize, 2, 17] {
            assert_eq!(model.marginal_at(j).unwrap().full_trace(), 2.0);
        }
    }

    #[test]
    fn sigma_rules_evaluate() {
        let c = SigmaRule::Constant { value: 3.0 };
        assert_eq!(c.value_at(1), 3.0);
        assert_eq!(c.value_at(100), 3.0);
        let a = SigmaRule::Affine { s0: 2.0, s1: 1.0 };
        assert_eq!(a.value_at(3), 5.0);
        let l = SigmaRule::LogAffine { s0: 2.0, s1: 1.0 };
        assert_abs_diff_eq!(l.value_at(1), 2.0 + (2.0f64).ln(), epsilon = 1e-15);
    }

    #[test]
    fn ratio_rule_decays_to_limit() {
        let rule = RatioRule::new(0.5, 2.0).unwrap();
        assert_eq!(rule.value_at(1), 2.5);
        assert_abs_diff_eq!(rule.value_at(1000), 0.502, epsilon = 1e-12);
        assert_eq!(rule.limit(), 0.5);
        assert!(RatioRule::new(-0.5, 0.0).is_err());
        assert!(RatioRule::new(f64::NAN, 0.0).is_err());
        assert!(RatioRule::new(0.5, f64::INFINITY).is_err());
    }
}
