//! Subcommand drivers: grid evaluation, prediction columns, diagnostics, and
//! deterministic CSV assembly (LF line endings, 17 significant digits).

use addfield::complexity::{
    exact_complexity_capped, homogeneous_complexity_capped, reduced_complexity_capped,
};
use addfield::spectral_df::{integral_complexity_capped, marginal_distribution_capped};
use addfield::{
    default_comparison_grid, korobov_epsilon0, korobov_limit_spec, korobov_linear_prediction,
    korobov_log_prediction, sup_distance, weight_distribution, AdditiveField64, ComplexityResult64,
    Error, SequenceModel64, Sign,
};
use rayon::prelude::*;

use crate::config::{core_error, CliError, MethodName, RunSettings};

/// Mass built into diagnostic step distributions; the uncovered remainder
/// sits beyond every probe point.
const DIAGNOSTIC_COVERAGE: f64 = 1.0 - 1e-6;

pub struct RunOutput {
    pub csv: String,
    /// True when every grid point fell outside its applicable regime; the
    /// caller still writes the CSV but exits with the regime code.
    pub all_regime: bool,
}

fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_real(x: Option<f64>) -> String {
    x.map(format_real).unwrap_or_default()
}

fn opt_count(x: Option<u64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn require_eps(settings: &RunSettings) -> Result<(), CliError> {
    if settings.eps.is_empty() {
        return Err(CliError::Config("eps is required for this subcommand".into()));
    }
    Ok(())
}

/// Complexity and curve runs take one counting method; predictions live in
/// the compare subcommand.
fn counting_method(settings: &RunSettings) -> Result<MethodName, CliError> {
    match settings.method {
        MethodName::Asymptotic | MethodName::All => Err(CliError::Config(format!(
            "method {:?} applies to the compare subcommand; choose exact, reduced, integral, or homogeneous",
            settings.method.label()
        ))),
        MethodName::Homogeneous
            if !matches!(settings.model, SequenceModel64::Homogeneous(_)) =>
        {
            Err(CliError::Config(
                "the homogeneous method requires a homogeneous model".into(),
            ))
        }
        m => Ok(m),
    }
}

/// Runs one counting method at one grid point. `Ok(None)` marks a regime
/// skip; resource and configuration failures abort the run.
fn counting_point(
    method: MethodName,
    model: &SequenceModel64,
    field: &AdditiveField64,
    d: usize,
    eps: f64,
    cap: u64,
) -> Result<Option<ComplexityResult64>, CliError> {
    let outcome = match method {
        MethodName::Exact => exact_complexity_capped(field, eps, cap),
        MethodName::Reduced => reduced_complexity_capped(field, eps, cap),
        MethodName::Integral => integral_complexity_capped(field, eps, cap),
        MethodName::Homogeneous => match model {
            SequenceModel64::Homogeneous(spectrum) => {
                homogeneous_complexity_capped(spectrum, d, eps, cap)
            }
            _ => {
                return Err(CliError::Config(
                    "the homogeneous method requires a homogeneous model".into(),
                ))
            }
        },
        MethodName::Asymptotic | MethodName::All => {
            return Err(CliError::Config(
                "internal dispatch error: prediction methods have no counting point".into(),
            ))
        }
    };
    match outcome {
        Ok(result) => Ok(Some(result)),
        Err(Error::Regime(_)) => Ok(None),
        Err(e) => Err(core_error(e)),
    }
}

pub fn run_complexity(settings: &RunSettings) -> Result<RunOutput, CliError> {
    require_eps(settings)?;
    let method = counting_method(settings)?;
    if settings.d_grid.len() != 1 || settings.eps.len() != 1 {
        return Err(CliError::Config(
            "the complexity subcommand takes a single d and a single eps".into(),
        ));
    }
    let d = settings.d_grid[0];
    let eps = settings.eps[0];
    let field = AdditiveField64::assemble(&settings.model, d).map_err(core_error)?;
    let outcome = counting_point(method, &settings.model, &field, d, eps, settings.term_cap)?;
    let mut csv =
        String::from("d,eps,method,n,threshold,achieved_partial_sum,terms_consumed,flag\n");
    let all_regime = outcome.is_none();
    match outcome {
        Some(result) => csv.push_str(&format!(
            "{d},{},{},{},{},{},{},\n",
            format_real(eps),
            method.label(),
            result.n,
            format_real(result.threshold),
            format_real(result.achieved_partial_sum),
            result.terms_consumed
        )),
        None => csv.push_str(&format!(
            "{d},{},{},,,,,regime:n=1\n",
            format_real(eps),
            method.label()
        )),
    }
    Ok(RunOutput { csv, all_regime })
}

pub fn run_curve(settings: &RunSettings) -> Result<RunOutput, CliError> {
    require_eps(settings)?;
    let method = counting_method(settings)?;
    let per_d: Result<Vec<Vec<(String, bool)>>, CliError> = settings
        .d_grid
        .par_iter()
        .map(|&d| {
            let field = AdditiveField64::assemble(&settings.model, d).map_err(core_error)?;
            settings
                .eps
                .iter()
                .map(|&eps| {
                    let outcome = counting_point(
                        method,
                        &settings.model,
                        &field,
                        d,
                        eps,
                        settings.term_cap,
                    )?;
                    Ok(match outcome {
                        Some(result) => (
                            format!(
                                "{d},{},{},{},{},",
                                format_real(eps),
                                method.label(),
                                result.n,
                                result.terms_consumed
                            ),
                            false,
                        ),
                        None => (
                            format!("{d},{},{},,,regime:n=1", format_real(eps), method.label()),
                            true,
                        ),
                    })
                })
                .collect()
        })
        .collect();
    let rows: Vec<(String, bool)> = per_d?.into_iter().flatten().collect();
    let all_regime = rows.iter().all(|(_, regime)| *regime);
    let mut csv = String::from("d,eps,method,n,terms_consumed,flag\n");
    for (line, _) in &rows {
        csv.push_str(line);
        csv.push('\n');
    }
    Ok(RunOutput { csv, all_regime })
}

struct CompareRow {
    d: usize,
    eps: f64,
    n_exact: Option<u64>,
    n_reduced: Option<u64>,
    n_integral: Option<u64>,
    prediction: Option<f64>,
    ratio: Option<f64>,
    flag: &'static str,
}

impl CompareRow {
    fn line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.d,
            format_real(self.eps),
            opt_count(self.n_exact),
            opt_count(self.n_reduced),
            opt_count(self.n_integral),
            opt_real(self.prediction),
            opt_real(self.ratio),
            self.flag
        )
    }

    /// Rows whose counting computations were skipped (the bounded flag only
    /// marks a missing prediction, counts are still delivered).
    fn regime_skip(&self) -> bool {
        self.flag == "regime:n=1" || self.flag == "regime:degenerate"
    }
}

pub fn run_compare(settings: &RunSettings) -> Result<RunOutput, CliError> {
    require_eps(settings)?;
    let header =
        "d,eps,n_exact,n_reduced,n_integral,asymptotic_prediction,ratio_exact_over_prediction,flag\n";

    // An infinite ratio has no finite marginals to assemble: every point is
    // flagged and the run reports the regime exit code.
    if settings.korobov.is_some_and(|info| info.r.is_infinite()) {
        let mut csv = String::from(header);
        for &d in &settings.d_grid {
            for &eps in &settings.eps {
                let row = CompareRow {
                    d,
                    eps,
                    n_exact: None,
                    n_reduced: None,
                    n_integral: None,
                    prediction: None,
                    ratio: None,
                    flag: "regime:degenerate",
                };
                csv.push_str(&row.line());
                csv.push('\n');
            }
        }
        return Ok(RunOutput { csv, all_regime: true });
    }

    let eps0 = match settings.korobov {
        Some(info) => Some(korobov_epsilon0(info.r).map_err(core_error)?),
        None => None,
    };

    let per_d: Result<Vec<Vec<CompareRow>>, CliError> = settings
        .d_grid
        .par_iter()
        .map(|&d| {
            let field = AdditiveField64::assemble(&settings.model, d).map_err(core_error)?;
            settings
                .eps
                .iter()
                .map(|&eps| compare_point(settings, eps0, &field, d, eps))
                .collect()
        })
        .collect();
    let rows: Vec<CompareRow> = per_d?.into_iter().flatten().collect();

    let all_regime = rows.iter().all(CompareRow::regime_skip);
    let mut csv = String::from(header);
    for row in &rows {
        csv.push_str(&row.line());
        csv.push('\n');
    }
    Ok(RunOutput { csv, all_regime })
}

fn compare_point(
    settings: &RunSettings,
    eps0: Option<f64>,
    field: &AdditiveField64,
    d: usize,
    eps: f64,
) -> Result<CompareRow, CliError> {
    let cap = settings.term_cap;
    let exact = exact_complexity_capped(field, eps, cap).map_err(core_error)?;

    let mut flag = "";
    let (n_reduced, n_integral) = match reduced_complexity_capped(field, eps, cap) {
        Ok(reduced) => {
            let integral = integral_complexity_capped(field, eps, cap).map_err(core_error)?;
            (Some(reduced.n), Some(integral.n))
        }
        Err(Error::Regime(_)) => {
            flag = "regime:n=1";
            (None, None)
        }
        Err(e) => return Err(core_error(e)),
    };

    // Prediction column: linear-regime count 2 Q(eps) d for tau < 1, the
    // exponentiated log-law d^(1-(eps/eps0)^2) for tau = 1, none otherwise.
    let mut prediction = None;
    if let (Some(info), Some(eps0)) = (settings.korobov, eps0) {
        if info.tau > 1.0 {
            if flag.is_empty() {
                flag = "regime:bounded";
            }
        } else if eps < eps0 {
            prediction = if info.tau == 1.0 {
                (d >= 2)
                    .then(|| korobov_log_prediction(d, eps, eps0).ok().map(f64::exp))
                    .flatten()
            } else {
                korobov_linear_prediction(d, eps, info.tau, eps0).ok()
            };
        }
    }
    let ratio = prediction.map(|p| exact.n as f64 / p);

    Ok(CompareRow {
        d,
        eps,
        n_exact: Some(exact.n),
        n_reduced,
        n_integral,
        prediction,
        ratio,
        flag,
    })
}

pub fn run_diagnose(settings: &RunSettings) -> Result<RunOutput, CliError> {
    // Limit distributions exist for parametric families up to tau = 1; the
    // distance columns stay empty elsewhere (bounded regime, explicit lists).
    let limit = settings
        .korobov
        .and_then(|info| korobov_limit_spec(info.c, info.tau).ok());
    let rows: Result<Vec<String>, CliError> = settings
        .d_grid
        .par_iter()
        .map(|&d| {
            let field = AdditiveField64::assemble(&settings.model, d).map_err(core_error)?;
            let mut u_dist = None;
            let mut w_dist = None;
            if let Some(spec) = &limit {
                let marginal = settings.model.marginal_at(d).map_err(core_error)?;
                let centered = marginal_distribution_capped(
                    &marginal,
                    spec.ell.eval(d),
                    DIAGNOSTIC_COVERAGE,
                    settings.term_cap,
                )
                .map_err(core_error)?;
                let grid = default_comparison_grid(&centered);
                u_dist = Some(
                    sup_distance(&centered, |x| spec.u.cdf(x), &grid).map_err(core_error)?,
                );

                let norming = spec.b_d.as_ref().map_or(1.0, |rule| rule.eval(d));
                if norming.is_finite() && norming > 0.0 {
                    let weights = weight_distribution(
                        &settings.model,
                        d,
                        |j| spec.ell.eval(j),
                        spec.a_d.eval(d),
                        norming,
                        spec.sign,
                    )
                    .map_err(core_error)?;
                    let w_grid = default_comparison_grid(&weights);
                    // Minus flips locations, so the limit enters reflected;
                    // the presets pair Minus with continuous limits only, so
                    // no left-limit correction is needed.
                    let reference = |x: f64| match spec.sign {
                        Sign::Plus => spec.w.cdf(x),
                        Sign::Minus => 1.0 - spec.w.cdf(-x),
                    };
                    w_dist = Some(
                        sup_distance(&weights, reference, &w_grid).map_err(core_error)?,
                    );
                }
            }
            Ok(format!(
                "{d},{},{},{},{},{},{}",
                format_real(field.epsilon_d()),
                format_real(field.lambda0_ratio()),
                format_real(field.assumption2_ratio()),
                format_real(field.reduced_trace_sum()),
                opt_real(u_dist),
                opt_real(w_dist),
            ))
        })
        .collect();
    let mut csv = String::from(
        "d,eps_d,lambda0_ratio,assumption2_ratio,trace_partial_sum,Uj_dist,Wd_dist\n",
    );
    for line in &rows? {
        csv.push_str(line);
        csv.push('\n');
    }
    Ok(RunOutput { csv, all_regime: false })
}

pub fn run_spectrum(settings: &RunSettings, top: usize) -> Result<RunOutput, CliError> {
    if settings.d_grid.len() != 1 {
        return Err(CliError::Config("the spectrum subcommand takes a single d".into()));
    }
    if top == 0 {
        return Err(CliError::Config("--top must be at least 1".into()));
    }
    let d = settings.d_grid[0];
    let field = AdditiveField64::assemble(&settings.model, d).map_err(core_error)?;
    let constant = field.lambda0_sum();
    let mut csv = String::from("rank,value,source\n");
    let mut stream = field.merged_stream().peekable();
    let mut constant_emitted = false;
    let mut rank = 0usize;
    while rank < top {
        // The constant mode (source 0) outranks equal reduced values,
        // matching the scan order of the exact method.
        let from_stream = match stream.peek() {
            Some(&(value, _)) => constant_emitted || value > constant,
            None => false,
        };
        rank += 1;
        if from_stream {
            let (value, source) = stream.next().expect("peeked entry");
            csv.push_str(&format!("{rank},{},{source}\n", format_real(value)));
        } else if !constant_emitted {
            constant_emitted = true;
            csv.push_str(&format!("{rank},{},0\n", format_real(constant)));
        } else {
            break;
        }
    }
    Ok(RunOutput { csv, all_regime: false })
}
