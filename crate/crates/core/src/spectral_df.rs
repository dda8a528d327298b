//! Step distribution functions built from eigenvalue mass.
//!
//! Placing mass `multiplicity * value / norm` at location `-ln(value)` turns
//! a non-increasing eigenvalue stream into a right-continuous step
//! distribution function. Complexity counts become quantile integrals of
//! such distributions: the reduced count equals the ceiling of
//! `total_mass * integral_0^q exp(F^{-1}(y)) dy`, which this module
//! evaluates exactly atom by atom. The same machinery builds the marginal
//! and weight distributions whose limits drive the asymptotic predictions.

use crate::complexity::{threshold_scan, ComplexityResult, Method, DEFAULT_TERM_CAP};
use crate::error::{Error, Result};
use crate::field::AdditiveField;
use crate::num::{cast, KahanSum, Real};
use crate::spectra::{MarginalSpectrum, SequenceModel};

/// Extra mass requested beyond the integration level when truncating an
/// infinite stream, so the last needed quantile segment is fully covered.
pub const BUILD_MARGIN: f64 = 1e-9;

/// Direction multiplier for rescaled locations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor<R: Real>(self) -> R {
        match self {
            Sign::Plus => R::one(),
            Sign::Minus => -R::one(),
        }
    }
}

/// Purely atomic, right-continuous distribution function with strictly
/// increasing atom locations.
///
/// `covered_mass` is the total mass of the stored atoms; distributions built
/// from truncated streams cover less than 1 and remember a certified lower
/// bound on the location of any atom that was cut off.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDistribution<R> {
    locations: Vec<R>,
    masses: Vec<R>,
    cumulative: Vec<R>,
    covered_mass: R,
    tail_location: R,
}

impl<R: Real> StepDistribution<R> {
    /// Builds from `(location, mass)` atoms sorted by strictly increasing
    /// location; masses must be positive and finite. The result is treated
    /// as fully covered.
    pub fn from_atoms(atoms: Vec<(R, R)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::invalid("a step distribution needs at least one atom"));
        }
        for (i, (loc, mass)) in atoms.iter().enumerate() {
            if !loc.is_finite() {
                return Err(Error::invalid(format!("atom {i}: location must be finite, got {loc}")));
            }
            if !(mass.is_finite() && *mass > R::zero()) {
                return Err(Error::invalid(format!("atom {i}: mass must be positive and finite, got {mass}")));
            }
            if i > 0 && atoms[i - 1].0 >= *loc {
                return Err(Error::invalid(format!(
                    "atom locations must be strictly increasing; atom {i} at {loc} does not exceed {}",
                    atoms[i - 1].0
                )));
            }
        }
        let mut locations = Vec::with_capacity(atoms.len());
        let mut masses = Vec::with_capacity(atoms.len());
        let mut cumulative = Vec::with_capacity(atoms.len());
        let mut acc = KahanSum::<R>::new();
        for (loc, mass) in atoms {
            locations.push(loc);
            masses.push(mass);
            acc.add(mass);
            cumulative.push(acc.value());
        }
        let covered_mass = acc.value();
        Ok(StepDistribution {
            locations,
            masses,
            cumulative,
            covered_mass,
            tail_location: R::infinity(),
        })
    }

    /// A single unit atom (a distribution function jumping 0 -> 1 at `loc`).
    pub fn point_mass(loc: R) -> Self {
        Self::from_atoms(vec![(loc, R::one())]).expect("a unit atom is always valid")
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn atoms(&self) -> impl Iterator<Item = (R, R)> + '_ {
        self.locations.iter().copied().zip(self.masses.iter().copied())
    }

    pub fn locations(&self) -> &[R] {
        &self.locations
    }

    pub fn masses(&self) -> &[R] {
        &self.masses
    }

    /// Total stored mass; less than 1 for truncated builds.
    pub fn covered_mass(&self) -> R {
        self.covered_mass
    }

    /// Certified lower bound on the location of any atom not stored;
    /// positive infinity when nothing was truncated.
    pub fn tail_location(&self) -> R {
        self.tail_location
    }

    /// Right-continuous evaluation: total mass at locations `<= x`.
    pub fn cdf(&self, x: R) -> R {
        let idx = self.locations.partition_point(|&loc| loc <= x);
        if idx == 0 {
            R::zero()
        } else {
            self.cumulative[idx - 1]
        }
    }

    /// Generalized inverse: smallest location where the cumulative mass
    /// reaches `y`. Requires `0 < y <= covered_mass`; together with
    /// [`Self::cdf`] it satisfies `cdf(t) >= y` iff `quantile(y) <= t`.
    pub fn quantile(&self, y: R) -> Result<R> {
        if !(y > R::zero()) {
            return Err(Error::domain(format!("quantile level must be positive, got {y}")));
        }
        if y > self.covered_mass {
            return Err(Error::Coverage {
                requested: y.to_f64().unwrap_or(f64::NAN),
                covered: self.covered_mass.to_f64().unwrap_or(f64::NAN),
            });
        }
        let idx = self.cumulative.partition_point(|&c| c < y);
        Ok(self.locations[idx])
    }

    /// Exact quantile integral `integral_0^p exp(quantile(y)) dy`, evaluated
    /// segment by segment over the cumulative-mass plateaus.
    pub fn exp_quantile_integral(&self, p: R) -> Result<R> {
        if p < R::zero() || !p.is_finite() {
            return Err(Error::domain(format!(
                "integration level must be nonnegative and finite, got {p}"
            )));
        }
        if p > self.covered_mass {
            return Err(Error::Coverage {
                requested: p.to_f64().unwrap_or(f64::NAN),
                covered: self.covered_mass.to_f64().unwrap_or(f64::NAN),
            });
        }
        let mut acc = KahanSum::<R>::new();
        let mut lower = R::zero();
        for i in 0..self.locations.len() {
            let upper = if self.cumulative[i] < p { self.cumulative[i] } else { p };
            let width = upper - lower;
            if width > R::zero() {
                acc.add(self.locations[i].exp() * width);
            }
            if self.cumulative[i] >= p {
                break;
            }
            lower = self.cumulative[i];
        }
        Ok(acc.value())
    }

    /// Distribution of the negated locations (masses preserved), used to
    /// turn a weight limit into its reflected distribution function.
    pub fn reflected(&self) -> Self {
        let atoms: Vec<(R, R)> = self
            .locations
            .iter()
            .rev()
            .copied()
            .map(|loc| -loc)
            .zip(self.masses.iter().rev().copied())
            .collect();
        Self::from_atoms(atoms).expect("reflection preserves validity")
    }
}

struct ValueBuild<R> {
    df: StepDistribution<R>,
    terms_consumed: u64,
}

/// Accumulates a non-increasing positive value stream into a step
/// distribution: each group of bit-identical values becomes one atom at
/// `-ln(value) - shift` with mass `count * value / norm`. Stops once the
/// covered mass reaches `mass_target` (or the stream ends; trailing zeros
/// are dropped as massless).
fn build_from_values<R: Real>(
    mut values: impl Iterator<Item = R>,
    norm: R,
    shift: R,
    mass_target: R,
    cap: u64,
) -> Result<ValueBuild<R>> {
    if !(norm.is_finite() && norm > R::zero()) {
        return Err(Error::invalid(format!("mass normalizer must be positive and finite, got {norm}")));
    }
    if !(mass_target > R::zero()) {
        return Err(Error::domain(format!("mass target must be positive, got {mass_target}")));
    }

    let mut locations: Vec<R> = Vec::new();
    let mut masses: Vec<R> = Vec::new();
    let mut cumulative: Vec<R> = Vec::new();
    let mut acc = KahanSum::<R>::new();
    let mut consumed: u64 = 0;

    let mut group_value = R::zero();
    let mut group_count: u64 = 0;
    let mut tail_location = R::infinity();

    let finalize_group = |value: R,
                              count: u64,
                              locations: &mut Vec<R>,
                              masses: &mut Vec<R>,
                              cumulative: &mut Vec<R>,
                              acc: &mut KahanSum<R>| {
        let count_r = R::from_u64(count).expect("group count fits the scalar");
        let mass = count_r * value / norm;
        let loc = -value.ln() - shift;
        // Adjacent distinct values can round to the same log location; fold
        // the mass instead of violating strict ordering.
        if let Some(last) = locations.last().copied() {
            if loc <= last {
                let idx = masses.len() - 1;
                masses[idx] = masses[idx] + mass;
                acc.add(mass);
                cumulative[idx] = acc.value();
                return;
            }
        }
        locations.push(loc);
        masses.push(mass);
        acc.add(mass);
        cumulative.push(acc.value());
    };

    loop {
        let next = values.next();
        match next {
            Some(v) => {
                if v.is_nan() || v < R::zero() {
                    return Err(Error::invalid(format!("eigenvalue stream produced {v}")));
                }
                if v == R::zero() {
                    // Non-increasing stream: everything further is massless.
                    if group_count > 0 {
                        finalize_group(group_value, group_count, &mut locations, &mut masses, &mut cumulative, &mut acc);
                    }
                    break;
                }
                if consumed == cap {
                    return Err(Error::ResourceCap { cap });
                }
                consumed += 1;
                if group_count > 0 && v == group_value {
                    group_count += 1;
                    continue;
                }
                if group_count > 0 {
                    finalize_group(group_value, group_count, &mut locations, &mut masses, &mut cumulative, &mut acc);
                    if acc.value() >= mass_target {
                        tail_location = -v.ln() - shift;
                        break;
                    }
                }
                group_value = v;
                group_count = 1;
            }
            None => {
                if group_count > 0 {
                    finalize_group(group_value, group_count, &mut locations, &mut masses, &mut cumulative, &mut acc);
                }
                break;
            }
        }
    }

    if locations.is_empty() {
        return Err(Error::invalid("value stream carries no mass"));
    }
    let covered_mass = acc.value();
    Ok(ValueBuild {
        df: StepDistribution { locations, masses, cumulative, covered_mass, tail_location },
        terms_consumed: consumed,
    })
}

/// Distribution of the field's merged reduced spectrum on the log scale,
/// normalized by the reduced trace sum; built until `mass_target` is
/// covered.
pub fn spectral_distribution<R: Real>(
    field: &AdditiveField<R>,
    mass_target: R,
) -> Result<StepDistribution<R>> {
    spectral_distribution_capped(field, mass_target, DEFAULT_TERM_CAP).map(|b| b.df)
}

fn spectral_distribution_capped<R: Real>(
    field: &AdditiveField<R>,
    mass_target: R,
    cap: u64,
) -> Result<ValueBuild<R>> {
    build_from_values(
        field.merged_stream().map(|(v, _)| v),
        field.reduced_trace_sum(),
        R::zero(),
        mass_target,
        cap,
    )
}

/// Distribution of one marginal's reduced spectrum on the log scale, with
/// locations shifted down by `shift`; normalized by the marginal reduced
/// trace.
pub fn marginal_distribution<R: Real>(
    marginal: &MarginalSpectrum<R>,
    shift: R,
    mass_target: R,
) -> Result<StepDistribution<R>> {
    marginal_distribution_capped(marginal, shift, mass_target, DEFAULT_TERM_CAP)
}

pub fn marginal_distribution_capped<R: Real>(
    marginal: &MarginalSpectrum<R>,
    shift: R,
    mass_target: R,
    cap: u64,
) -> Result<StepDistribution<R>> {
    if !shift.is_finite() {
        return Err(Error::domain(format!("location shift must be finite, got {shift}")));
    }
    build_from_values(marginal.eigenvalues(), marginal.reduced_trace(), shift, mass_target, cap)
        .map(|b| b.df)
}

/// Distribution of the rescaled location rules `sign * (ell(j) - a_d) / b_d`
/// over `j = 1..=d`, weighted by each marginal's reduced trace.
pub fn weight_distribution<R: Real>(
    model: &SequenceModel<R>,
    d: usize,
    ell: impl Fn(usize) -> R,
    a_d: R,
    b_d: R,
    sign: Sign,
) -> Result<StepDistribution<R>> {
    if d == 0 {
        return Err(Error::invalid("weight distribution needs dimension at least 1"));
    }
    if !(b_d.is_finite() && b_d > R::zero()) {
        return Err(Error::domain(format!("norming factor must be positive and finite, got {b_d}")));
    }
    if !a_d.is_finite() {
        return Err(Error::domain(format!("centering must be finite, got {a_d}")));
    }

    let mut atoms: Vec<(R, R)> = Vec::with_capacity(d);
    let mut total = KahanSum::<R>::new();
    for j in 1..=d {
        let weight = model.marginal_at(j)?.reduced_trace();
        total.add(weight);
        if weight > R::zero() {
            let loc = sign.factor::<R>() * (ell(j) - a_d) / b_d;
            if !loc.is_finite() {
                return Err(Error::invalid(format!("location rule produced {loc} at marginal {j}")));
            }
            atoms.push((loc, weight));
        }
    }
    let total = total.value();
    if !(total > R::zero()) {
        return Err(Error::invalid("all marginals carry zero reduced trace"));
    }
    atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("locations are finite"));

    // Group bit-identical locations, then normalize by the total weight.
    let mut grouped: Vec<(R, R)> = Vec::with_capacity(atoms.len());
    for (loc, weight) in atoms {
        match grouped.last_mut() {
            Some((last_loc, last_weight)) if *last_loc == loc => {
                *last_weight = *last_weight + weight;
            }
            _ => grouped.push((loc, weight)),
        }
    }
    for (_, weight) in grouped.iter_mut() {
        *weight = *weight / total;
    }
    StepDistribution::from_atoms(grouped)
}

/// Largest deviation between the step distribution and a reference
/// distribution function over the probe grid.
pub fn sup_distance<R: Real>(
    df: &StepDistribution<R>,
    reference: impl Fn(R) -> R,
    grid: &[R],
) -> Result<R> {
    if grid.is_empty() {
        return Err(Error::invalid("probe grid must be nonempty"));
    }
    let mut worst = R::zero();
    for &x in grid {
        let dev = (df.cdf(x) - reference(x)).abs();
        if dev > worst {
            worst = dev;
        }
    }
    Ok(worst)
}

/// Default probe grid: midpoints between consecutive atoms plus one point
/// either side of the support.
pub fn default_comparison_grid<R: Real>(df: &StepDistribution<R>) -> Vec<R> {
    let locs = df.locations();
    let mut grid = Vec::with_capacity(locs.len() + 1);
    grid.push(locs[0] - R::one());
    for w in locs.windows(2) {
        grid.push((w[0] + w[1]) / cast(2.0));
    }
    grid.push(locs[locs.len() - 1] + R::one());
    grid
}

/// Reduced mass level `1 - (eps / eps_d)^2` the integral representation
/// integrates up to, written with the fewest roundings.
fn reduced_mass_level<R: Real>(field: &AdditiveField<R>, eps: R) -> R {
    R::one() - eps * eps * field.full_trace() / field.reduced_trace_sum()
}

/// Reduced complexity via the quantile-integral representation:
/// `ceil(reduced_trace_sum * integral_0^q exp(F^{-1}))` with
/// `q = 1 - (eps/eps_d)^2`. Agrees with the reduced scan and brackets the
/// exact count from below: `integral <= exact <= integral + 1`.
pub fn integral_complexity<R: Real>(field: &AdditiveField<R>, eps: R) -> Result<ComplexityResult<R>> {
    integral_complexity_capped(field, eps, DEFAULT_TERM_CAP)
}

pub fn integral_complexity_capped<R: Real>(
    field: &AdditiveField<R>,
    eps: R,
    cap: u64,
) -> Result<ComplexityResult<R>> {
    crate::complexity::check_eps_open_unit(eps)?;
    crate::complexity::check_below_critical(eps, field.epsilon_d())?;
    let q = reduced_mass_level(field, eps);
    let build = spectral_distribution_capped(field, q + cast(BUILD_MARGIN), cap)?;
    let value = field.reduced_trace_sum() * build.df.exp_quantile_integral(q)?;
    let n_real = value.ceil();
    let n = n_real
        .to_u64()
        .ok_or_else(|| Error::Internal(format!("integral count {n_real} does not fit u64")))?;
    Ok(ComplexityResult {
        n,
        method: Method::Integral,
        threshold: value,
        achieved_partial_sum: n_real,
        terms_consumed: build.terms_consumed,
    })
}

/// Split of the integral representation at the cutoff eigenvalue.
///
/// `count` is the mass-weighted number of eigenvalues at or above the value
/// reached by the reduced scan; `defect` is the overshoot of that count past
/// the integration level, spent on the flat quantile segment at the cutoff.
/// `ceil(count - defect)` reproduces the reduced complexity.
#[derive(Debug, Clone, PartialEq)]
pub struct CountDefect<R> {
    pub count: R,
    pub defect: R,
}

pub fn count_defect<R: Real>(field: &AdditiveField<R>, eps: R) -> Result<CountDefect<R>> {
    count_defect_capped(field, eps, DEFAULT_TERM_CAP)
}

pub fn count_defect_capped<R: Real>(
    field: &AdditiveField<R>,
    eps: R,
    cap: u64,
) -> Result<CountDefect<R>> {
    crate::complexity::check_eps_open_unit(eps)?;
    crate::complexity::check_below_critical(eps, field.epsilon_d())?;

    // Cutoff eigenvalue: value of the last term consumed by the reduced scan.
    let threshold = field.reduced_trace_sum() - eps * eps * field.full_trace();
    let mut cutoff = R::zero();
    threshold_scan(
        field.merged_stream().map(|(v, _)| {
            cutoff = v;
            v
        }),
        threshold,
        cap,
    )?;

    // Distribution up to and including the cutoff group: consume while
    // values stay at or above the cutoff (bit comparison; the stream is
    // non-increasing, so this is exactly the cutoff group's closure). The
    // take_while makes the stream finite, so the infinite mass target just
    // means "consume it all".
    let df = build_from_values(
        field
            .merged_stream()
            .map(|(v, _)| v)
            .take_while(|&v| v >= cutoff),
        field.reduced_trace_sum(),
        R::zero(),
        R::infinity(),
        cap,
    )?
    .df;

    let p_d = df.covered_mass();
    let count = field.reduced_trace_sum() * df.exp_quantile_integral(p_d)?;
    let q = reduced_mass_level(field, eps);
    let defect_raw = field.reduced_trace_sum() / cutoff * (p_d - q);
    let defect = if defect_raw > R::zero() { defect_raw } else { R::zero() };
    Ok(CountDefect { count, defect })
}
