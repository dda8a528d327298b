//! Additive random fields assembled from marginal spectra.
//!
//! The covariance of a sum of `d` independent marginals inherits a simple
//! spectrum: one eigenvalue equal to the sum of the marginal constant-mode
//! eigenvalues, plus the multiset union of all marginal reduced spectra.
//! [`AdditiveField`] stores the marginals and the three trace sums every
//! downstream computation needs; [`MergedStream`] yields the union in
//! non-increasing order without materializing it.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::num::{KahanSum, Real};
use crate::spectra::{EigenvalueIter, MarginalSpectrum, SequenceModel};

/// Additive field of dimension `d`: the `j`-th summand contributes the
/// marginal spectrum `marginals[j-1]`.
///
/// Trace sums are accumulated with compensated summation in ascending
/// marginal order, so identical inputs reproduce bit-identical traces.
#[derive(Debug, Clone)]
pub struct AdditiveField<R> {
    marginals: Vec<MarginalSpectrum<R>>,
    lambda0_sum: R,
    reduced_trace_sum: R,
    full_trace: R,
}

impl<R: Real> AdditiveField<R> {
    /// Builds the field on the first `d` marginals of `model`.
    pub fn assemble(model: &SequenceModel<R>, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("field dimension must be at least 1"));
        }
        let mut marginals = Vec::with_capacity(d);
        for j in 1..=d {
            marginals.push(model.marginal_at(j)?);
        }
        Self::from_marginals(marginals)
    }

    /// Builds the field from explicitly listed marginal spectra.
    pub fn from_marginals(marginals: Vec<MarginalSpectrum<R>>) -> Result<Self> {
        if marginals.is_empty() {
            return Err(Error::invalid("field dimension must be at least 1"));
        }
        let mut lambda0 = KahanSum::<R>::new();
        let mut reduced = KahanSum::<R>::new();
        let mut full = KahanSum::<R>::new();
        for m in &marginals {
            lambda0.add(m.lambda0());
            reduced.add(m.reduced_trace());
            full.add(m.full_trace());
        }
        if !(reduced.value() > R::zero()) {
            return Err(Error::invalid(
                "field has no reduced spectrum mass; approximation numbers would be identically 0 or 1",
            ));
        }
        Ok(AdditiveField {
            marginals,
            lambda0_sum: lambda0.value(),
            reduced_trace_sum: reduced.value(),
            full_trace: full.value(),
        })
    }

    pub fn dimension(&self) -> usize {
        self.marginals.len()
    }

    pub fn marginals(&self) -> &[MarginalSpectrum<R>] {
        &self.marginals
    }

    /// Eigenvalue of the constant eigenfunction: sum of marginal `lambda0`s.
    pub fn lambda0_sum(&self) -> R {
        self.lambda0_sum
    }

    /// Total mass of the merged reduced spectrum.
    pub fn reduced_trace_sum(&self) -> R {
        self.reduced_trace_sum
    }

    /// Total trace (constant mode included).
    pub fn full_trace(&self) -> R {
        self.full_trace
    }

    /// Share of the total trace captured by the constant mode.
    pub fn lambda0_ratio(&self) -> R {
        self.lambda0_sum / self.full_trace
    }

    /// Critical threshold for this dimension: accuracy demands at or above
    /// this value are met by the constant mode alone (`n = 1`), demands below
    /// it require genuinely resolving the reduced spectrum.
    pub fn epsilon_d(&self) -> R {
        (self.reduced_trace_sum / self.full_trace).sqrt()
    }

    /// Largest single reduced eigenvalue relative to the total reduced mass.
    /// Small values indicate that no single mode dominates the field.
    pub fn assumption2_ratio(&self) -> R {
        let mut largest = R::zero();
        for m in &self.marginals {
            if let Some(v) = m.largest_eigenvalue() {
                if v > largest {
                    largest = v;
                }
            }
        }
        largest / self.reduced_trace_sum
    }

    /// Streams the merged reduced spectrum in non-increasing order.
    pub fn merged_stream(&self) -> MergedStream<R> {
        MergedStream::new(self.marginals.iter().map(|m| m.eigenvalues()))
    }
}

struct MergeEntry<R> {
    value: R,
    source: usize,
    rest: EigenvalueIter<R>,
}

impl<R: Real> MergeEntry<R> {
    fn cmp_key(&self, other: &Self) -> Ordering {
        // Max-heap: larger value first; on ties the smaller source index.
        // Eigenvalues are validated finite, so the comparison is total.
        match self.value.partial_cmp(&other.value).expect("eigenvalues are not NaN") {
            Ordering::Equal => other.source.cmp(&self.source),
            ord => ord,
        }
    }
}

impl<R: Real> PartialEq for MergeEntry<R> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp_key(other) == Ordering::Equal
    }
}
impl<R: Real> Eq for MergeEntry<R> {}
impl<R: Real> PartialOrd for MergeEntry<R> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp_key(other))
    }
}
impl<R: Real> Ord for MergeEntry<R> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_key(other)
    }
}

/// Heap-based k-way merge over the marginal eigenvalue streams.
///
/// Yields `(eigenvalue, source index)` with 1-based sources, largest values
/// first; ties are broken toward the smaller source index so the order is
/// fully deterministic. Value-only consumers are unaffected by tie order.
pub struct MergedStream<R> {
    heap: BinaryHeap<MergeEntry<R>>,
}

impl<R: Real> MergedStream<R> {
    fn new<I: Iterator<Item = EigenvalueIter<R>>>(streams: I) -> Self {
        let mut heap = BinaryHeap::new();
        for (idx, mut stream) in streams.enumerate() {
            if let Some(value) = stream.next() {
                heap.push(MergeEntry { value, source: idx + 1, rest: stream });
            }
        }
        MergedStream { heap }
    }
}

impl<R: Real> Iterator for MergedStream<R> {
    type Item = (R, usize);

    fn next(&mut self) -> Option<Self::Item> {
        let mut entry = self.heap.pop()?;
        let out = (entry.value, entry.source);
        if let Some(value) = entry.rest.next() {
            entry.value = value;
            self.heap.push(entry);
        }
        Some(out)
    }
}

/// Limiting critical threshold of a model, with the evidence used to obtain
/// it.
#[derive(Debug, Clone, PartialEq)]
pub enum Epsilon0<R> {
    /// Closed form (parametric families, homogeneous models).
    Exact(R),
    /// Finite-dimension estimate: the threshold at `at_d`, with the value at
    /// `at_d / 2` reported so convergence can be assessed.
    Estimate { value: R, at_d: usize, half_value: R, at_half_d: usize },
}

impl<R: Real> Epsilon0<R> {
    /// Best available value of the limit.
    pub fn value(&self) -> R {
        match self {
            Epsilon0::Exact(v) => *v,
            Epsilon0::Estimate { value, .. } => *value,
        }
    }
}

/// Dimension used for the two-point limit estimate on explicit cyclic models.
const ESTIMATE_DIMENSION: usize = 10_000;

/// Limiting value of [`AdditiveField::epsilon_d`] as the dimension grows.
///
/// Korobov parametric models with finite ratio limit `r` have the closed form
/// `(1 + r/2)^(-1/2)`; an infinite `r` is the degenerate regime (threshold 0,
/// every accuracy demand is met by the constant mode eventually) and is
/// reported as a regime error. Homogeneous models are dimension-independent.
/// Explicit lists fall back to a two-point finite-dimension estimate.
pub fn epsilon_zero<R: Real>(model: &SequenceModel<R>) -> Result<Epsilon0<R>> {
    match model {
        SequenceModel::KorobovParametric(family) => {
            let r = family.ratio().limit();
            if r.is_infinite() {
                return Err(Error::regime(
                    "ratio limit r is infinite: degenerate regime, the limiting threshold is 0",
                ));
            }
            let half: R = R::from_f64(0.5).expect("constant");
            Ok(Epsilon0::Exact((R::one() + half * r).powf(-half)))
        }
        SequenceModel::Homogeneous(spectrum) => {
            if !(spectrum.reduced_trace() > R::zero()) {
                return Err(Error::invalid("homogeneous marginal has no reduced spectrum mass"));
            }
            Ok(Epsilon0::Exact((spectrum.reduced_trace() / spectrum.full_trace()).sqrt()))
        }
        SequenceModel::ExplicitList { spectra, mode } => {
            let at_d = match mode {
                crate::spectra::ListMode::Truncate => spectra.len(),
                crate::spectra::ListMode::Cycle => ESTIMATE_DIMENSION,
            };
            let at_half_d = (at_d / 2).max(1);
            let mut reduced = KahanSum::<R>::new();
            let mut full = KahanSum::<R>::new();
            let mut half_value = R::nan();
            for j in 1..=at_d {
                let m = model.marginal_at(j)?;
                reduced.add(m.reduced_trace());
                full.add(m.full_trace());
                if j == at_half_d {
                    half_value = (reduced.value() / full.value()).sqrt();
                }
            }
            if !(reduced.value() > R::zero()) {
                return Err(Error::invalid("explicit model has no reduced spectrum mass"));
            }
            Ok(Epsilon0::Estimate {
                value: (reduced.value() / full.value()).sqrt(),
                at_d,
                half_value,
                at_half_d,
            })
        }
    }
}

/// Running reduced-trace sums at the requested dimensions, for checking
/// whether the total reduced mass diverges (the regime split of the
/// parametric families hinges on it).
///
/// `d_grid` must be strictly increasing.
pub fn trace_divergence_probe<R: Real>(
    model: &SequenceModel<R>,
    d_grid: &[usize],
) -> Result<Vec<(usize, R)>> {
    check_grid(d_grid)?;
    let mut out = Vec::with_capacity(d_grid.len());
    let mut reduced = KahanSum::<R>::new();
    let mut next = 0usize;
    for j in 1..=*d_grid.last().expect("grid is nonempty") {
        reduced.add(model.marginal_at(j)?.reduced_trace());
        if j == d_grid[next] {
            out.push((j, reduced.value()));
            next += 1;
        }
    }
    Ok(out)
}

pub(crate) fn check_grid(d_grid: &[usize]) -> Result<()> {
    if d_grid.is_empty() {
        return Err(Error::invalid("dimension grid must be nonempty"));
    }
    if d_grid[0] == 0 {
        return Err(Error::invalid("dimension grid entries must be at least 1"));
    }
    if d_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("dimension grid must be strictly increasing"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{KorobovParams, ListMode, RatioRule, SigmaRule};
    use approx::assert_abs_diff_eq;

    fn two_marginal_field() -> AdditiveField<f64> {
        AdditiveField::from_marginals(vec![
            MarginalSpectrum::explicit(1.0, vec![0.5, 0.5]).unwrap(),
            MarginalSpectrum::explicit(0.5, vec![0.25, 0.25]).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn two_marginal_traces() {
        let field = two_marginal_field();
        assert_eq!(field.dimension(), 2);
        assert_eq!(field.lambda0_sum(), 1.5);
        assert_eq!(field.reduced_trace_sum(), 1.5);
        assert_eq!(field.full_trace(), 3.0);
        assert_abs_diff_eq!(field.epsilon_d(), 0.5f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(field.lambda0_ratio(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn homogeneous_korobov_traces() {
        let spectrum = KorobovParams::new(1.0, 1.0, 2.0).unwrap().spectrum();
        let model = SequenceModel::homogeneous(spectrum);
        let field = AdditiveField::assemble(&model, 3).unwrap();
        let zeta2 = std::f64::consts::PI.powi(2) / 6.0;
        assert_abs_diff_eq!(field.lambda0_sum(), 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(field.reduced_trace_sum(), 6.0 * zeta2, epsilon = 1e-10);
        assert_abs_diff_eq!(field.full_trace(), 3.0 + 6.0 * zeta2, epsilon = 1e-10);
    }

    #[test]
    fn full_trace_matches_component_sums_to_ulp_scale() {
        let family = crate::spectra::KorobovFamily::new(
            1.0,
            0.5,
            RatioRule::constant(0.5).unwrap(),
            SigmaRule::LogAffine { s0: 2.0, s1: 1.0 },
        )
        .unwrap();
        let model = SequenceModel::korobov_parametric(family);
        let field = AdditiveField::assemble(&model, 500).unwrap();
        let recombined = field.lambda0_sum() + field.reduced_trace_sum();
        assert_abs_diff_eq!(field.full_trace(), recombined, epsilon = 1e-12 * field.full_trace());
    }

    #[test]
    fn assembly_is_prefix_resumable() {
        // Assembling d+1 marginals performs exactly the d-marginal summation
        // followed by one more addend, so traces agree bit-for-bit with a
        // manual continuation.
        let family = crate::spectra::KorobovFamily::new(
            1.0,
            0.5,
            RatioRule::constant(0.5).unwrap(),
            SigmaRule::LogAffine { s0: 2.0, s1: 1.0 },
        )
        .unwrap();
        let model = SequenceModel::korobov_parametric(family);
        let d = 37;
        let big = AdditiveField::assemble(&model, d + 1).unwrap();

        let mut reduced = KahanSum::<f64>::new();
        for j in 1..=d {
            reduced.add(model.marginal_at(j).unwrap().reduced_trace());
        }
        let small = AdditiveField::assemble(&model, d).unwrap();
        assert_eq!(small.reduced_trace_sum().to_bits(), reduced.value().to_bits());
        reduced.add(model.marginal_at(d + 1).unwrap().reduced_trace());
        assert_eq!(big.reduced_trace_sum().to_bits(), reduced.value().to_bits());
    }

    #[test]
    fn rejects_zero_dimension_and_zero_mass() {
        let model = SequenceModel::homogeneous(MarginalSpectrum::explicit(1.0, vec![0.5]).unwrap());
        assert!(matches!(AdditiveField::assemble(&model, 0), Err(Error::Invalid(_))));

        let empty = MarginalSpectrum::explicit(1.0, vec![]).unwrap();
        assert!(matches!(
            AdditiveField::from_marginals(vec![empty]),
            Err(Error::Invalid(_))
        ));
    }

    #[test]
    fn all_lambda0_zero_field_has_threshold_one() {
        let field = AdditiveField::from_marginals(vec![
            MarginalSpectrum::explicit(0.0, vec![0.5, 0.25]).unwrap(),
            MarginalSpectrum::explicit(0.0, vec![0.125]).unwrap(),
        ])
        .unwrap();
        assert_eq!(field.epsilon_d(), 1.0);
        assert_eq!(field.lambda0_ratio(), 0.0);
    }

    #[test]
    fn merged_stream_interleaves_in_order() {
        let field = two_marginal_field();
        let merged: Vec<(f64, usize)> = field.merged_stream().collect();
        assert_eq!(
            merged,
            vec![(0.5, 1), (0.5, 1), (0.25, 2), (0.25, 2)]
        );
    }

    #[test]
    fn merged_stream_breaks_ties_by_source() {
        let field = AdditiveField::from_marginals(vec![
            MarginalSpectrum::explicit(0.0, vec![0.5, 0.25]).unwrap(),
            MarginalSpectrum::explicit(0.0, vec![0.5, 0.25]).unwrap(),
        ])
        .unwrap();
        let merged: Vec<(f64, usize)> = field.merged_stream().collect();
        assert_eq!(merged[0], (0.5, 1));
        assert_eq!(merged[1], (0.5, 2));
        assert_eq!(merged[2], (0.25, 1));
        assert_eq!(merged[3], (0.25, 2));
    }

    #[test]
    fn merged_stream_matches_sorted_concatenation() {
        // Value sequence oracle: concatenate, sort descending.
        let field = AdditiveField::from_marginals(vec![
            MarginalSpectrum::explicit(0.3, vec![0.9, 0.2, 0.2, 0.05]).unwrap(),
            MarginalSpectrum::explicit(0.0, vec![0.8, 0.8, 0.1]).unwrap(),
            MarginalSpectrum::explicit(1.0, vec![0.4]).unwrap(),
        ])
        .unwrap();
        let mut expected: Vec<f64> = field
            .marginals()
            .iter()
            .flat_map(|m| m.eigenvalues())
            .collect();
        expected.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let merged: Vec<f64> = field.merged_stream().map(|(v, _)| v).collect();
        assert_eq!(merged, expected);
    }

    #[test]
    fn merged_stream_is_lazy_on_infinite_spectra() {
        let spectrum = KorobovParams::new(1.0, 1.0, 2.0).unwrap().spectrum();
        let model = SequenceModel::homogeneous(spectrum);
        let field = AdditiveField::assemble(&model, 2).unwrap();
        let head: Vec<f64> = field.merged_stream().map(|(v, _)| v).take(8).collect();
        assert_eq!(head, vec![1.0, 1.0, 1.0, 1.0, 0.25, 0.25, 0.25, 0.25]);
    }

    #[test]
    fn assumption2_ratio_examples() {
        let field = two_marginal_field();
        assert_abs_diff_eq!(field.assumption2_ratio(), 0.5 / 1.5, epsilon = 1e-15);

        let spectrum = KorobovParams::new(1.0, 1.0, 2.0).unwrap().spectrum();
        let model = SequenceModel::homogeneous(spectrum);
        let field = AdditiveField::assemble(&model, 10).unwrap();
        let expected = 1.0 / (10.0 * std::f64::consts::PI.powi(2) / 3.0);
        assert_abs_diff_eq!(field.assumption2_ratio(), expected, epsilon = 1e-12);
    }

    #[test]
    fn epsilon_zero_closed_forms() {
        let family = crate::spectra::KorobovFamily::new(
            1.0,
            0.5,
            RatioRule::constant(0.5).unwrap(),
            SigmaRule::LogAffine { s0: 2.0, s1: 1.0 },
        )
        .unwrap();
        let model = SequenceModel::korobov_parametric(family);
        let e0 = epsilon_zero(&model).unwrap();
        assert_abs_diff_eq!(e0.value(), 1.25f64.powf(-0.5), epsilon = 1e-15);

        let homog = SequenceModel::homogeneous(MarginalSpectrum::explicit(1.0, vec![0.5, 0.5]).unwrap());
        assert_abs_diff_eq!(
            epsilon_zero(&homog).unwrap().value(),
            0.5f64.sqrt(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn epsilon_zero_degenerate_regime() {
        let family = crate::spectra::KorobovFamily::new(
            1.0,
            0.5,
            RatioRule::constant(f64::INFINITY).unwrap(),
            SigmaRule::Constant { value: 2.0 },
        )
        .unwrap();
        let model = SequenceModel::korobov_parametric(family);
        assert!(matches!(epsilon_zero(&model), Err(Error::Regime(_))));
    }

    #[test]
    fn epsilon_zero_estimate_for_explicit_lists() {
        let a = MarginalSpectrum::explicit(1.0, vec![0.5, 0.5]).unwrap();
        let b = MarginalSpectrum::explicit(0.5, vec![0.25, 0.25]).unwrap();
        let model = SequenceModel::explicit_list(vec![a, b], ListMode::Truncate).unwrap();
        match epsilon_zero(&model).unwrap() {
            Epsilon0::Estimate { value, at_d, half_value, at_half_d } => {
                assert_eq!(at_d, 2);
                assert_eq!(at_half_d, 1);
                assert_abs_diff_eq!(value, 0.5f64.sqrt(), epsilon = 1e-15);
                assert_abs_diff_eq!(half_value, 0.5f64.sqrt(), epsilon = 1e-15);
            }
            other => panic!("expected an estimate, got {other:?}"),
        }
    }

    #[test]
    fn trace_probe_reports_partial_sums() {
        let model = SequenceModel::homogeneous(MarginalSpectrum::explicit(1.0, vec![0.5, 0.5]).unwrap());
        let probe = trace_divergence_probe(&model, &[1, 2, 4]).unwrap();
        assert_eq!(probe, vec![(1, 1.0), (2, 2.0), (4, 4.0)]);

        assert!(trace_divergence_probe(&model, &[]).is_err());
        assert!(trace_divergence_probe(&model, &[2, 2]).is_err());
        assert!(trace_divergence_probe(&model, &[0, 2]).is_err());
    }

    #[test]
    fn trace_probe_sublinear_for_decaying_weights() {
        // beta_j = j^(-1/2): partial reduced traces grow like 4 sqrt(d), so
        // quadrupling d should double the sum, within 10%.
        let family = crate::spectra::KorobovFamily::new(
            1.0f64,
            0.5,
            RatioRule::constant(0.0).unwrap(),
            SigmaRule::LogAffine { s0: 2.0, s1: 1.0 },
        )
        .unwrap();
        let model = SequenceModel::korobov_parametric(family);
        let probe = trace_divergence_probe(&model, &[1024, 4096]).unwrap();
        let ratio = probe[1].1 / probe[0].1;
        assert!((ratio - 2.0).abs() < 0.2, "ratio {ratio}");
    }
}
