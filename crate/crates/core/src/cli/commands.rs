use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::io::{fmt_f64, read_table, write_csv, write_json, Table};
use super::{CliError, RunConfig, RunOutcome, Scenario};
use crate::diagnostics::{characterization_report, KktReport};
use crate::error::{ModelError, SimulationError, SolverError};
use crate::inference::{argmin_estimator, boundary_diagnostics, ArgminResult, BoundaryDiagnostics};
use crate::model::{
    evaluate, hinge_representation, left_derivative, ConvexFit, Dataset, HingeRepresentation,
    ToleranceConfig,
};
use crate::simulation::{
    derive_seed, rate_study, replicate_fits, simulate_invelope_path, simulate_invelope_refined,
    InvelopeConfig, InvelopePath, ReplicateConfig, ScenarioKind,
};
use crate::solver::{fit_convex_lse, SolverTrace};
use crate::stats::{iqr, mean, median, quantile, variance};

const CURVE_POINTS: usize = 512;
const ARGMIN_QUANTILES: [f64; 6] = [0.1, 0.25, 0.5, 0.75, 0.9, 0.95];

fn tolerance(config: &RunConfig) -> Result<ToleranceConfig, CliError> {
    let tol = ToleranceConfig {
        max_iterations: config.max_iterations,
        ..ToleranceConfig::default().with_kkt_tol(config.tol)
    };
    tol.validate().map_err(|e| CliError::Input(e.to_string()))?;
    Ok(tol)
}

fn input_path(config: &RunConfig) -> Result<&Path, CliError> {
    config
        .input
        .as_deref()
        .ok_or_else(|| CliError::Input("--input is required".into()))
}

/// Maps a row-indexed model error back to its CSV line.
fn model_input_error(path: &Path, table: &Table, err: ModelError) -> CliError {
    let line = |i: usize| table.lines.get(i).copied().unwrap_or(0);
    match err {
        ModelError::OutOfDomain { index, value } => CliError::Input(format!(
            "{}: line {}: x = {value} is outside [0, 1]",
            path.display(),
            line(index)
        )),
        ModelError::NonFinite { index } => CliError::Input(format!(
            "{}: line {}: non-finite value",
            path.display(),
            line(index)
        )),
        other => CliError::Input(format!("{}: {other}", path.display())),
    }
}

fn load_dataset(path: &Path, table: &Table) -> Result<Dataset, CliError> {
    let points: Vec<(f64, f64)> = table.columns[0]
        .iter()
        .copied()
        .zip(table.columns[1].iter().copied())
        .collect();
    Dataset::from_points(&points).map_err(|e| model_input_error(path, table, e))
}

fn simulation_error(err: SimulationError) -> CliError {
    match err {
        SimulationError::InvalidSpec(m) => CliError::Input(m),
        SimulationError::Model(e) => CliError::Input(e.to_string()),
        other => CliError::Numeric(other.to_string()),
    }
}

#[derive(Serialize)]
struct TraceArtifact<'a> {
    config: &'a RunConfig,
    error: String,
    trace: Option<&'a SolverTrace>,
}

#[derive(Serialize)]
struct FitArtifact<'a> {
    config: &'a RunConfig,
    n_observations: usize,
    n_distinct: usize,
    x: &'a [f64],
    y: &'a [f64],
    weights: &'a [f64],
    fitted: &'a [f64],
    kinks: &'a [usize],
    kink_locations: Vec<f64>,
    hinge: HingeRepresentation,
    objective: f64,
    iterations: usize,
    qr_fallbacks: usize,
    boundary: BoundaryDiagnostics,
    argmin: ArgminResult,
    certificate: &'a KktReport,
}

pub fn cmd_fit(config: &RunConfig) -> Result<RunOutcome, CliError> {
    let path = input_path(config)?;
    let table = read_table(path, &["x", "y"])?;
    let ds = load_dataset(path, &table)?;
    let tol = tolerance(config)?;
    let (fit, trace) = match fit_convex_lse(&ds, &tol) {
        Ok(v) => v,
        Err(e) => return Err(solver_failure(config, e)),
    };
    let report = characterization_report(&ds, &fit, &tol).map_err(|e| CliError::Numeric(e.to_string()))?;

    let artifact = FitArtifact {
        config,
        n_observations: table.lines.len(),
        n_distinct: ds.len(),
        x: ds.x(),
        y: ds.y(),
        weights: ds.weights(),
        fitted: fit.fitted(),
        kinks: fit.kinks(),
        kink_locations: fit.kinks().iter().map(|&k| ds.x()[k]).collect(),
        hinge: hinge_representation(&fit, &ds),
        objective: fit.objective(&ds),
        iterations: trace.iterations,
        qr_fallbacks: trace.qr_fallbacks,
        boundary: boundary_diagnostics(&fit, &ds),
        argmin: argmin_estimator(&fit, &ds),
        certificate: &report,
    };
    let json_path = config.output.join("fit.json");
    write_json(&json_path, &artifact)?;

    let curve_path = config.output.join("fit_curve.csv");
    let mut rows = Vec::with_capacity(CURVE_POINTS);
    for k in 0..CURVE_POINTS {
        let t = k as f64 / (CURVE_POINTS - 1) as f64;
        let v = evaluate(&fit, &ds, t).map_err(|e| CliError::Numeric(e.to_string()))?;
        let d = left_derivative(&fit, &ds, t).map_err(|e| CliError::Numeric(e.to_string()))?;
        rows.push(vec![fmt_f64(t), fmt_f64(v), fmt_f64(d)]);
    }
    write_csv(&curve_path, config, &["grid_t", "fitted_value", "left_derivative"], rows)?;

    Ok(RunOutcome {
        files: vec![json_path, curve_path],
        passed: report.passed,
        summary: format!(
            "fit: n={} kinks={} objective={:e} certificate={}",
            ds.len(),
            fit.kinks().len(),
            artifact.objective,
            if report.passed { "passed" } else { "FAILED" }
        ),
    })
}

fn solver_failure(config: &RunConfig, err: SolverError) -> CliError {
    let trace_path = config.output.join("fit_trace.json");
    let artifact = TraceArtifact {
        config,
        error: err.to_string(),
        trace: err.trace(),
    };
    if let Err(io) = write_json(&trace_path, &artifact) {
        return io;
    }
    if let SolverError::Model(e) = err {
        return CliError::Input(e.to_string());
    }
    CliError::Solver {
        message: err.to_string(),
        trace_path,
    }
}

#[derive(Serialize)]
struct CheckArtifact<'a> {
    config: &'a RunConfig,
    passed: bool,
    failed: Vec<&'a str>,
    kinks: &'a [usize],
    conditions: &'a [crate::diagnostics::ConditionCheck],
}

pub fn cmd_check(config: &RunConfig) -> Result<RunOutcome, CliError> {
    let path = input_path(config)?;
    let table = read_table(path, &["x", "y", "fitted"])?;
    let ds = load_dataset(path, &table)?;
    // Fitted values of merged duplicates must agree.
    let mut fitted = vec![f64::NAN; ds.len()];
    for (row, (&x, &f)) in table.columns[0].iter().zip(&table.columns[2]).enumerate() {
        let idx = ds.x().partition_point(|&v| v < x);
        if fitted[idx].is_nan() {
            fitted[idx] = f;
        } else if fitted[idx] != f {
            return Err(CliError::Input(format!(
                "{}: line {}: fitted value differs from an earlier row with the same x",
                path.display(),
                table.lines[row]
            )));
        }
    }
    let tol = tolerance(config)?;
    let fit = ConvexFit::from_fitted(&ds, fitted, &tol).map_err(|e| model_input_error(path, &table, e))?;
    let report = characterization_report(&ds, &fit, &tol).map_err(|e| CliError::Numeric(e.to_string()))?;
    let failed: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
    let json_path = config.output.join("check.json");
    write_json(
        &json_path,
        &CheckArtifact {
            config,
            passed: report.passed,
            failed: failed.clone(),
            kinks: fit.kinks(),
            conditions: &report.conditions,
        },
    )?;
    let summary = if report.passed {
        "check: all conditions passed".to_string()
    } else {
        format!("check: failed conditions: {}", failed.join(", "))
    };
    Ok(RunOutcome {
        files: vec![json_path],
        passed: report.passed,
        summary,
    })
}

fn scenario_kind(config: &RunConfig) -> ScenarioKind {
    match config.scenario {
        Scenario::Vanishing => ScenarioKind::VanishingDerivatives { r: config.r },
        Scenario::Affine => ScenarioKind::Affine,
    }
}

fn replicate_config(config: &RunConfig) -> Result<ReplicateConfig, CliError> {
    let mut rc = ReplicateConfig::new(
        scenario_kind(config),
        config.n_grid.clone(),
        config.replicates,
        config.seed,
    );
    rc.sigma = config.sigma;
    rc.tolerance = tolerance(config)?;
    Ok(rc)
}

#[derive(Serialize)]
struct RatesSummary<'a> {
    config: &'a RunConfig,
    slope: f64,
    slope_stderr: f64,
    intercept: f64,
    expected_slope: f64,
    records: usize,
    skipped: usize,
}

pub fn cmd_rates(config: &RunConfig) -> Result<RunOutcome, CliError> {
    let rc = replicate_config(config)?;
    let result = rate_study(&rc, config.x0).map_err(simulation_error)?;
    let kind = rc.kind;
    let order = kind.order();
    let records_path = config.output.join("rates_records.csv");
    let rows = result.records.iter().map(|r| {
        vec![
            kind.name().to_string(),
            order.to_string(),
            r.n.to_string(),
            r.replicate.to_string(),
            r.seed.to_string(),
            fmt_f64(r.bias),
            fmt_f64(r.log_n),
            r.log_abs_bias.map(fmt_f64).unwrap_or_default(),
        ]
    });
    write_csv(
        &records_path,
        config,
        &["scenario", "r", "n", "replicate", "seed", "bias", "log_n", "log_abs_bias"],
        rows,
    )?;
    let expected_slope = match kind {
        ScenarioKind::VanishingDerivatives { r } => -(r as f64) / (2.0 * r as f64 + 1.0),
        ScenarioKind::Affine => -0.5,
    };
    let summary_path = config.output.join("rates_summary.json");
    write_json(
        &summary_path,
        &RatesSummary {
            config,
            slope: result.slope,
            slope_stderr: result.slope_stderr,
            intercept: result.intercept,
            expected_slope,
            records: result.records.len(),
            skipped: result.skipped,
        },
    )?;
    Ok(RunOutcome {
        files: vec![records_path, summary_path],
        passed: true,
        summary: format!(
            "rates: slope={:.4} (se {:.4}, expected {:.4}), skipped={}",
            result.slope, result.slope_stderr, expected_slope, result.skipped
        ),
    })
}

/// Location and spread summaries of one sample.
#[derive(Debug, Clone, Serialize)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub se_mean: f64,
    pub median: f64,
    pub iqr: f64,
}

impl Moments {
    pub fn of(v: &[f64]) -> Self {
        let var = variance(v);
        Self {
            count: v.len(),
            mean: mean(v),
            variance: var,
            se_mean: (var / v.len() as f64).sqrt(),
            median: median(v),
            iqr: iqr(v),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct PathRow {
    replicate: usize,
    seed: u64,
    m: usize,
    h2: f64,
    h3: f64,
    argmin_h2: f64,
    /// Largest normalised violation of `H >= Y` (0 when none).
    gap_violation: f64,
    /// Largest normalised `|H - Y|` at a kink.
    kink_gap: f64,
}

fn path_row(replicate: usize, path: &InvelopePath) -> Result<PathRow, CliError> {
    let s = path.sample().map_err(simulation_error)?;
    let gaps = path.invelope_gaps();
    let scale = path.gap_scale();
    let gap_violation = gaps.iter().fold(0.0_f64, |m, g| m.max(-g / scale));
    let kink_gap = path
        .kinks()
        .iter()
        .fold(0.0_f64, |m, &k| m.max(gaps[k].abs() / scale));
    Ok(PathRow {
        replicate,
        seed: path.seed,
        m: s.m,
        h2: s.h2,
        h3: s.h3,
        argmin_h2: s.argmin_h2,
        gap_violation,
        kink_gap,
    })
}

#[derive(Serialize)]
struct GridSummary {
    m: usize,
    h2: Moments,
    h3: Moments,
    argmin_h2: Moments,
}

/// Matched comparison of the coarse and fine grids.
#[derive(Serialize)]
struct Refinement {
    mean_diff: f64,
    mean_diff_se: f64,
    variance_diff: f64,
    variance_diff_se: f64,
    within_3se: bool,
}

#[derive(Serialize)]
struct InvelopeSummary<'a> {
    config: &'a RunConfig,
    point: f64,
    grids: Vec<GridSummary>,
    max_gap_violation: f64,
    max_kink_gap: f64,
    inequality_passed: bool,
    refinement: Option<Refinement>,
}

/// Paired mean and variance differences with their standard errors.
fn refinement(coarse: &[f64], fine: &[f64]) -> Refinement {
    let n = coarse.len() as f64;
    let d: Vec<f64> = coarse.iter().zip(fine).map(|(a, b)| a - b).collect();
    let (ma, mb) = (mean(coarse), mean(fine));
    let dv: Vec<f64> = coarse
        .iter()
        .zip(fine)
        .map(|(a, b)| (a - ma).powi(2) - (b - mb).powi(2))
        .collect();
    let mean_diff = mean(&d);
    let mean_diff_se = (variance(&d) / n).sqrt();
    let variance_diff = variance(coarse) - variance(fine);
    let variance_diff_se = (variance(&dv) / n).sqrt();
    Refinement {
        mean_diff,
        mean_diff_se,
        variance_diff,
        variance_diff_se,
        within_3se: mean_diff.abs() <= 3.0 * mean_diff_se && variance_diff.abs() <= 3.0 * variance_diff_se,
    }
}

pub fn cmd_invelope(config: &RunConfig) -> Result<RunOutcome, CliError> {
    let mut ic = match config.scenario {
        Scenario::Vanishing => InvelopeConfig::canonical(config.r, config.c, config.m),
        Scenario::Affine => InvelopeConfig {
            point: config.x0,
            ..InvelopeConfig::affine(config.m)
        },
    };
    ic.noise_scale = config.sigma;
    ic.validate().map_err(simulation_error)?;
    if config.replicates < 2 {
        return Err(CliError::Input("invelope needs at least 2 replicates".into()));
    }
    let rows: Vec<Result<Vec<PathRow>, CliError>> = (0..config.replicates)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(config.seed, &[i as u64]);
            if config.refine {
                let (coarse, fine) = simulate_invelope_refined(&ic, seed).map_err(simulation_error)?;
                Ok(vec![path_row(i, &coarse)?, path_row(i, &fine)?])
            } else {
                let path = simulate_invelope_path(&ic, seed).map_err(simulation_error)?;
                Ok(vec![path_row(i, &path)?])
            }
        })
        .collect();
    let rows: Vec<Vec<PathRow>> = rows.into_iter().collect::<Result<_, _>>()?;

    let grids_m: Vec<usize> = rows[0].iter().map(|r| r.m).collect();
    let column = |g: usize, f: fn(&PathRow) -> f64| -> Vec<f64> { rows.iter().map(|r| f(&r[g])).collect() };
    let grids: Vec<GridSummary> = grids_m
        .iter()
        .enumerate()
        .map(|(g, &m)| GridSummary {
            m,
            h2: Moments::of(&column(g, |r| r.h2)),
            h3: Moments::of(&column(g, |r| r.h3)),
            argmin_h2: Moments::of(&column(g, |r| r.argmin_h2)),
        })
        .collect();
    let flat = rows.iter().flatten();
    let max_gap_violation = flat.clone().fold(0.0_f64, |m, r| m.max(r.gap_violation));
    let max_kink_gap = flat.fold(0.0_f64, |m, r| m.max(r.kink_gap));
    let inequality_passed = max_gap_violation <= config.tol && max_kink_gap <= config.tol;
    let refinement = config
        .refine
        .then(|| refinement(&column(0, |r| r.h2), &column(1, |r| r.h2)));

    let samples_path = config.output.join("invelope_samples.csv");
    write_csv(
        &samples_path,
        config,
        &["replicate", "seed", "m", "point", "h2", "h3", "argmin_h2", "gap_violation", "kink_gap"],
        rows.iter().flatten().map(|r| {
            vec![
                r.replicate.to_string(),
                r.seed.to_string(),
                r.m.to_string(),
                fmt_f64(ic.point),
                fmt_f64(r.h2),
                fmt_f64(r.h3),
                fmt_f64(r.argmin_h2),
                fmt_f64(r.gap_violation),
                fmt_f64(r.kink_gap),
            ]
        }),
    )?;
    let summary_path = config.output.join("invelope_summary.json");
    let summary = format!(
        "invelope: {} paths, mean h2={:.4}, var h2={:.4}, inequality {}",
        config.replicates,
        grids[0].h2.mean,
        grids[0].h2.variance,
        if inequality_passed { "passed" } else { "FAILED" }
    );
    write_json(
        &summary_path,
        &InvelopeSummary {
            config,
            point: ic.point,
            grids,
            max_gap_violation,
            max_kink_gap,
            inequality_passed,
            refinement,
        },
    )?;
    Ok(RunOutcome {
        files: vec![samples_path, summary_path],
        passed: inequality_passed,
        summary,
    })
}

#[derive(Serialize)]
struct ArgminRow {
    location: f64,
    value: f64,
    tie_count: usize,
}

#[derive(Serialize)]
struct ArgminGrid {
    n: usize,
    raw_median: f64,
    scaled_median: f64,
    /// `(p, quantile of n^(1/(2r+1)) |argmin - 0.5|)`.
    scaled_quantiles: Vec<(f64, f64)>,
}

#[derive(Serialize)]
struct ArgminSummary<'a> {
    config: &'a RunConfig,
    true_argmin: f64,
    rate_exponent: f64,
    grids: Vec<ArgminGrid>,
    scaled_median_ratio: f64,
    raw_median_decreasing: bool,
}

pub fn cmd_argmin(config: &RunConfig) -> Result<RunOutcome, CliError> {
    if config.scenario != Scenario::Vanishing {
        return Err(CliError::Input(
            "argmin study needs the vanishing scenario (the affine mean has no interior minimum)".into(),
        ));
    }
    let rc = replicate_config(config)?;
    let reps = replicate_fits(&rc, |_, ds, fit| {
        let a = argmin_estimator(fit, ds);
        Ok(ArgminRow {
            location: a.location,
            value: a.value,
            tie_count: a.tie_count,
        })
    })
    .map_err(simulation_error)?;
    let exponent = 1.0 / (2.0 * config.r as f64 + 1.0);
    let scaled = |n: usize, loc: f64| (n as f64).powf(exponent) * (loc - 0.5).abs();

    let grids: Vec<ArgminGrid> = config
        .n_grid
        .iter()
        .map(|&n| {
            let raw: Vec<f64> = reps
                .iter()
                .filter(|r| r.n == n)
                .map(|r| (r.value.location - 0.5).abs())
                .collect();
            let sc: Vec<f64> = raw.iter().map(|e| (n as f64).powf(exponent) * e).collect();
            ArgminGrid {
                n,
                raw_median: median(&raw),
                scaled_median: median(&sc),
                scaled_quantiles: ARGMIN_QUANTILES.iter().map(|&p| (p, quantile(&sc, p))).collect(),
            }
        })
        .collect();
    let meds: Vec<f64> = grids.iter().map(|g| g.scaled_median).collect();
    let scaled_median_ratio = meds.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        / meds.iter().copied().fold(f64::INFINITY, f64::min);
    let raw_median_decreasing = grids.windows(2).all(|w| w[1].raw_median < w[0].raw_median);

    let samples_path = config.output.join("argmin_samples.csv");
    write_csv(
        &samples_path,
        config,
        &["n", "replicate", "seed", "location", "value", "tie_count", "abs_error", "scaled_error"],
        reps.iter().map(|r| {
            vec![
                r.n.to_string(),
                r.replicate.to_string(),
                r.seed.to_string(),
                fmt_f64(r.value.location),
                fmt_f64(r.value.value),
                r.value.tie_count.to_string(),
                fmt_f64((r.value.location - 0.5).abs()),
                fmt_f64(scaled(r.n, r.value.location)),
            ]
        }),
    )?;
    let summary_path = config.output.join("argmin_summary.json");
    write_json(
        &summary_path,
        &ArgminSummary {
            config,
            true_argmin: 0.5,
            rate_exponent: exponent,
            grids,
            scaled_median_ratio,
            raw_median_decreasing,
        },
    )?;
    Ok(RunOutcome {
        files: vec![samples_path, summary_path],
        passed: true,
        summary: format!(
            "argmin: scaled median ratio {scaled_median_ratio:.3}, raw median decreasing: {raw_median_decreasing}"
        ),
    })
}
