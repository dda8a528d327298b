//! Strict JSON configuration: schema types, validation with field paths, and
//! model assembly.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use addfield::{
    KorobovFamily64, ListMode, MarginalSpectrum64, RatioRule, SequenceModel64, SigmaRule,
    DEFAULT_TERM_CAP,
};
use serde::Deserialize;

/// Smallest zeta exponent the trace evaluation accepts; sigma rules are
/// prescanned against it so the offending marginal index can be named.
const SIGMA_FLOOR: f64 = 1.0 + addfield::spectra::ZETA_MIN_EXPONENT_MARGIN;

/// Errors carry the exit code contract: 1 io, 2 configuration, 3 regime on
/// every grid point, 4 resource cap.
#[derive(Debug)]
pub enum CliError {
    Io(String),
    Config(String),
    Regime(String),
    Resource(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Regime(_) => 3,
            CliError::Resource(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io(msg) => write!(f, "io error: {msg}"),
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Regime(msg) => write!(f, "regime error: {msg}"),
            CliError::Resource(msg) => write!(f, "resource error: {msg}"),
        }
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Library errors keep their exit-code grouping; anything outside the regime
/// and resource groups traces back to configuration input.
pub fn core_error(err: addfield::Error) -> CliError {
    match err {
        addfield::Error::Regime(_) => CliError::Regime(err.to_string()),
        addfield::Error::ResourceCap { .. } => CliError::Resource(err.to_string()),
        _ => CliError::Config(err.to_string()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    Exact,
    Reduced,
    Integral,
    Homogeneous,
    Asymptotic,
    All,
}

impl MethodName {
    pub fn label(self) -> &'static str {
        match self {
            MethodName::Exact => "exact",
            MethodName::Reduced => "reduced",
            MethodName::Integral => "integral",
            MethodName::Homogeneous => "homogeneous",
            MethodName::Asymptotic => "asymptotic",
            MethodName::All => "all",
        }
    }
}

impl FromStr for MethodName {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "exact" => Ok(MethodName::Exact),
            "reduced" => Ok(MethodName::Reduced),
            "integral" => Ok(MethodName::Integral),
            "homogeneous" => Ok(MethodName::Homogeneous),
            "asymptotic" => Ok(MethodName::Asymptotic),
            "all" => Ok(MethodName::All),
            other => Err(config_err(format!(
                "unknown method {other:?}; expected exact, reduced, integral, homogeneous, asymptotic, or all"
            ))),
        }
    }
}

/// Korobov family parameters kept around for predictions and diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct KorobovInfo {
    pub c: f64,
    pub tau: f64,
    pub r: f64,
}

/// Validated run configuration.
#[derive(Debug)]
pub struct RunSettings {
    pub model: SequenceModel64,
    /// Present only for the korobov_parametric family.
    pub korobov: Option<KorobovInfo>,
    /// Empty when the document omits `eps` (fine for diagnose and spectrum).
    pub eps: Vec<f64>,
    pub d_grid: Vec<usize>,
    pub method: MethodName,
    pub term_cap: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: RawModel,
    #[serde(default)]
    eps: Option<EpsSpec>,
    #[serde(default)]
    d: Option<u64>,
    #[serde(default)]
    d_grid: Option<GridSpec>,
    #[serde(default)]
    method: Option<MethodName>,
    #[serde(default)]
    term_cap: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    family: Family,
    #[serde(default)]
    c: Option<f64>,
    #[serde(default)]
    tau: Option<f64>,
    #[serde(default)]
    r: Option<RatioSpec>,
    #[serde(default)]
    rho: Option<f64>,
    #[serde(default)]
    sigma_rule: Option<RawSigma>,
    #[serde(default)]
    marginals: Option<Vec<RawMarginal>>,
    #[serde(default)]
    mode: Option<Mode>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Family {
    KorobovParametric,
    ExplicitList,
    Homogeneous,
}

/// `r` is a nonnegative number or the string "inf" (degenerate regime).
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RatioSpec {
    Number(f64),
    Word(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSigma {
    kind: SigmaKind,
    s0: f64,
    #[serde(default)]
    s1: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
enum SigmaKind {
    Constant,
    Affine,
    LogAffine,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMarginal {
    lambda0: f64,
    values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Mode {
    Cycle,
    Truncate,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum EpsSpec {
    One(f64),
    Many(Vec<f64>),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum GridSpec {
    Span(GridSpan),
    List(GridList),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSpan {
    start: u64,
    end: u64,
    count: u64,
    #[serde(default)]
    spacing: Option<Spacing>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridList {
    list: Vec<u64>,
}

pub fn load(path: &Path) -> Result<RunSettings, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
    let raw: RawConfig = serde_json::from_str(&text)
        .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    build(raw)
}

fn build(raw: RawConfig) -> Result<RunSettings, CliError> {
    let (model, korobov) = build_model(raw.model)?;

    let d_grid = match (raw.d, raw.d_grid) {
        (Some(_), Some(_)) => {
            return Err(config_err("give either d or d_grid, not both"));
        }
        (None, None) => {
            return Err(config_err("one of d or d_grid is required"));
        }
        (Some(d), None) => vec![to_dimension(d, "d")?],
        (None, Some(spec)) => expand_grid(spec)?,
    };

    let eps = match raw.eps {
        None => Vec::new(),
        Some(EpsSpec::One(x)) => vec![x],
        Some(EpsSpec::Many(xs)) => {
            if xs.is_empty() {
                return Err(config_err("eps list must not be empty"));
            }
            xs
        }
    };
    for (i, &e) in eps.iter().enumerate() {
        if !(e.is_finite() && e > 0.0 && e < 1.0) {
            return Err(config_err(format!(
                "eps[{i}] must lie strictly between 0 and 1, got {e}"
            )));
        }
    }

    // Name the first marginal whose zeta exponent would be rejected.
    if let SequenceModel64::KorobovParametric(family) = &model {
        let max_d = *d_grid.last().expect("grid is nonempty");
        for j in 1..=max_d {
            let sigma = family.sigma_rule().value_at(j);
            if !(sigma.is_finite() && sigma >= SIGMA_FLOOR) {
                return Err(config_err(format!(
                    "model.sigma_rule yields sigma = {sigma} at marginal j = {j}; \
                     every sigma must exceed 1 (by at least the zeta margin 1e-6)"
                )));
            }
        }
    }

    Ok(RunSettings {
        model,
        korobov,
        eps,
        d_grid,
        method: raw.method.unwrap_or(MethodName::Exact),
        term_cap: raw.term_cap.unwrap_or(DEFAULT_TERM_CAP),
    })
}

fn to_dimension(d: u64, field: &str) -> Result<usize, CliError> {
    if d == 0 {
        return Err(config_err(format!("{field} must be at least 1")));
    }
    usize::try_from(d).map_err(|_| config_err(format!("{field} = {d} exceeds this platform")))
}

fn forbid<T>(value: &Option<T>, key: &str, family: &str) -> Result<(), CliError> {
    if value.is_some() {
        return Err(config_err(format!(
            "model.{key} does not apply to the {family} family"
        )));
    }
    Ok(())
}

fn build_model(raw: RawModel) -> Result<(SequenceModel64, Option<KorobovInfo>), CliError> {
    match raw.family {
        Family::KorobovParametric => {
            forbid(&raw.marginals, "marginals", "korobov_parametric")?;
            forbid(&raw.mode, "mode", "korobov_parametric")?;
            let c = raw
                .c
                .ok_or_else(|| config_err("model.c is required for the korobov_parametric family"))?;
            let tau = raw
                .tau
                .ok_or_else(|| config_err("model.tau is required for the korobov_parametric family"))?;
            let r = match raw
                .r
                .ok_or_else(|| config_err("model.r is required for the korobov_parametric family"))?
            {
                RatioSpec::Number(x) => x,
                RatioSpec::Word(w) if w == "inf" => f64::INFINITY,
                RatioSpec::Word(w) => {
                    return Err(config_err(format!(
                        "model.r must be a nonnegative number or \"inf\", got {w:?}"
                    )));
                }
            };
            let rho = raw.rho.unwrap_or(0.0);
            let sigma_raw = raw.sigma_rule.ok_or_else(|| {
                config_err("model.sigma_rule is required for the korobov_parametric family")
            })?;
            let sigma = build_sigma(sigma_raw)?;
            let ratio = RatioRule::new(r, rho)
                .map_err(|e| config_err(format!("model.r / model.rho: {e}")))?;
            let family = KorobovFamily64::new(c, tau, ratio, sigma)
                .map_err(|e| config_err(format!("model: {e}")))?;
            Ok((
                SequenceModel64::korobov_parametric(family),
                Some(KorobovInfo { c, tau, r }),
            ))
        }
        Family::ExplicitList => {
            forbid_korobov_keys(&raw, "explicit_list")?;
            let spectra = build_marginals(raw.marginals, "explicit_list")?;
            let mode = match raw.mode.unwrap_or(Mode::Cycle) {
                Mode::Cycle => ListMode::Cycle,
                Mode::Truncate => ListMode::Truncate,
            };
            let model = SequenceModel64::explicit_list(spectra, mode)
                .map_err(|e| config_err(format!("model.marginals: {e}")))?;
            Ok((model, None))
        }
        Family::Homogeneous => {
            forbid_korobov_keys(&raw, "homogeneous")?;
            forbid(&raw.mode, "mode", "homogeneous")?;
            let mut spectra = build_marginals(raw.marginals, "homogeneous")?;
            if spectra.len() != 1 {
                return Err(config_err(format!(
                    "the homogeneous family takes exactly one marginal, got {}",
                    spectra.len()
                )));
            }
            let spectrum = spectra.pop().expect("length checked");
            Ok((SequenceModel64::homogeneous(spectrum), None))
        }
    }
}

fn forbid_korobov_keys(raw: &RawModel, family: &str) -> Result<(), CliError> {
    forbid(&raw.c, "c", family)?;
    forbid(&raw.tau, "tau", family)?;
    forbid(&raw.r, "r", family)?;
    forbid(&raw.rho, "rho", family)?;
    forbid(&raw.sigma_rule, "sigma_rule", family)?;
    Ok(())
}

fn build_marginals(
    marginals: Option<Vec<RawMarginal>>,
    family: &str,
) -> Result<Vec<MarginalSpectrum64>, CliError> {
    let raw = marginals
        .ok_or_else(|| config_err(format!("model.marginals is required for the {family} family")))?;
    if raw.is_empty() {
        return Err(config_err("model.marginals must not be empty"));
    }
    raw.into_iter()
        .enumerate()
        .map(|(i, m)| {
            MarginalSpectrum64::explicit(m.lambda0, m.values)
                .map_err(|e| config_err(format!("model.marginals[{i}]: {e}")))
        })
        .collect()
}

fn build_sigma(raw: RawSigma) -> Result<SigmaRule<f64>, CliError> {
    match raw.kind {
        SigmaKind::Constant => {
            if raw.s1.is_some() {
                return Err(config_err(
                    "model.sigma_rule.s1 does not apply to a constant rule",
                ));
            }
            Ok(SigmaRule::Constant { value: raw.s0 })
        }
        SigmaKind::Affine => {
            let s1 = raw
                .s1
                .ok_or_else(|| config_err("model.sigma_rule.s1 is required for an affine rule"))?;
            Ok(SigmaRule::Affine { s0: raw.s0, s1 })
        }
        SigmaKind::LogAffine => {
            let s1 = raw.s1.ok_or_else(|| {
                config_err("model.sigma_rule.s1 is required for a log_affine rule")
            })?;
            Ok(SigmaRule::LogAffine { s0: raw.s0, s1 })
        }
    }
}

fn expand_grid(spec: GridSpec) -> Result<Vec<usize>, CliError> {
    match spec {
        GridSpec::List(raw) => {
            if raw.list.is_empty() {
                return Err(config_err("d_grid.list must not be empty"));
            }
            let grid = raw
                .list
                .iter()
                .map(|&d| to_dimension(d, "d_grid.list entry"))
                .collect::<Result<Vec<_>, _>>()?;
            if grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err(config_err("d_grid.list must be strictly increasing"));
            }
            Ok(grid)
        }
        GridSpec::Span(span) => {
            let start = to_dimension(span.start, "d_grid.start")?;
            let end = to_dimension(span.end, "d_grid.end")?;
            if end < start {
                return Err(config_err("d_grid.end must be at least d_grid.start"));
            }
            if span.count == 0 {
                return Err(config_err("d_grid.count must be at least 1"));
            }
            if span.count == 1 {
                return Ok(vec![start]);
            }
            let spacing = span.spacing.unwrap_or(Spacing::Linear);
            let steps = (span.count - 1) as f64;
            let mut grid: Vec<usize> = (0..span.count)
                .map(|i| {
                    let t = i as f64 / steps;
                    let value = match spacing {
                        Spacing::Linear => start as f64 + t * (end - start) as f64,
                        Spacing::Log => start as f64 * (end as f64 / start as f64).powf(t),
                    };
                    value.round() as usize
                })
                .collect();
            grid.dedup();
            Ok(grid)
        }
    }
}
