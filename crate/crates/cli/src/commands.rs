use std::path::Path;

use gpcs::geometry::{BivariatePoint, BivariateSample};
use gpcs::inference::{
    bootstrap_ci, plugin_ci, BootstrapMode, BootstrapTarget, ConfidenceInterval, VarianceVariant,
};
use gpcs::klines::{k_selection_table, pick_min_aic, select_k_aic, KCandidate, KlinesConfig};
use gpcs::measures::{r2_gs, r2_gu, GcsEstimate, Scenario};
use gpcs::power::{
    dcor, pearson_r2, permutation_power, AssociationMeasure, DistanceCorrelation, GcsUnspecified, Pattern,
    PatternSpec, PearsonR2, PowerReport, MIN_POWER_B,
};
use gpcs::rng::derive_seed;
use gpcs::simgen::{
    builtin_setting, coverage_experiment, CoverageMethod, CoverageOptions, CoverageReport, KChoice, MixtureSpec,
    MIN_COVERAGE_REPS,
};
use gpcs::GpcsError;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::ingest::{ingest_matrix, ingest_pair, LabelCode};
use crate::output::{emit, envelope, num, opt_num, to_csv, to_json, Format};
use crate::{
    CiChoice, CommonArgs, EstimateArgs, MeasureChoice, PowerArgs, ResampleChoice, ScanArgs, ScenarioChoice,
    SimulateArgs,
};

fn check_level(level: f64) -> CliResult<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(CliError::InvalidArgs(format!("--level {level} must lie in (0, 1)")))
    }
}

fn klines_config(common: &CommonArgs, seed: u64) -> CliResult<KlinesConfig> {
    if common.restarts == 0 || common.max_iterations == 0 {
        return Err(CliError::InvalidArgs("--restarts and --max-iterations must be at least 1".into()));
    }
    let config = KlinesConfig {
        restarts: common.restarts,
        max_iterations: common.max_iterations,
        ..KlinesConfig::default()
    };
    Ok(config.with_seed(seed))
}

fn resample_mode(r: ResampleChoice) -> BootstrapMode {
    match r {
        ResampleChoice::Parametric => BootstrapMode::Parametric,
        ResampleChoice::Nonparametric => BootstrapMode::Nonparametric,
    }
}

fn ci_name(ci: CiChoice) -> &'static str {
    match ci {
        CiChoice::PluginP1 => "plugin-p1",
        CiChoice::PluginP2 => "plugin-p2",
        CiChoice::Bootstrap => "bootstrap",
        CiChoice::None => "none",
    }
}

struct CiRequest {
    choice: CiChoice,
    level: f64,
    b: usize,
    mode: BootstrapMode,
}

fn interval(
    req: &CiRequest,
    sample: &BivariateSample,
    est: &GcsEstimate,
    config: KlinesConfig,
    seed: u64,
) -> CliResult<Option<ConfidenceInterval>> {
    let n = sample.len();
    Ok(match req.choice {
        CiChoice::None => None,
        CiChoice::PluginP1 => Some(plugin_ci(est, n, req.level, VarianceVariant::GaussianClosedForm)?),
        CiChoice::PluginP2 => Some(plugin_ci(est, n, req.level, VarianceVariant::GeneralMoments)?),
        CiChoice::Bootstrap => {
            let target = match est.scenario {
                Scenario::Specified => BootstrapTarget::Specified,
                Scenario::Unspecified => BootstrapTarget::Unspecified { k: est.k, config },
            };
            Some(bootstrap_ci(sample, target, req.b, req.mode, req.level, seed)?)
        }
    })
}

#[derive(Serialize)]
struct CiOut {
    method: &'static str,
    level: f64,
    /// Bounds clipped to [0, 1].
    lower: f64,
    upper: f64,
    raw_lower: f64,
    raw_upper: f64,
    se: f64,
    variance_clamped: bool,
    replicates_kept: Option<usize>,
    replicates_dropped: Option<usize>,
}

impl CiOut {
    fn new(choice: CiChoice, ci: &ConfidenceInterval) -> Self {
        let (lower, upper) = ci.clamped();
        CiOut {
            method: ci_name(choice),
            level: ci.level,
            lower,
            upper,
            raw_lower: ci.lower,
            raw_upper: ci.upper,
            se: ci.se,
            variance_clamped: ci.variance_clamped,
            replicates_kept: ci.replicates.map(|r| r.0),
            replicates_dropped: ci.replicates.map(|r| r.1),
        }
    }
}

#[derive(Serialize)]
struct ComponentOut {
    component: usize,
    label: Option<String>,
    weight: f64,
    count: usize,
    rho2: f64,
    mean_x: f64,
    mean_y: f64,
    var_x: f64,
    var_y: f64,
    cov_xy: f64,
}

#[derive(Serialize)]
struct LineOut {
    a: f64,
    b: f64,
    c: f64,
}

#[derive(Serialize)]
struct FitOut {
    objective: f64,
    iterations: usize,
    converged: bool,
    restarts_run: usize,
    restarts_converged: usize,
    lines: Vec<LineOut>,
}

#[derive(Serialize)]
struct InputOut<'a> {
    path: String,
    x: &'a str,
    y: &'a str,
    label: Option<&'a str>,
    rows_read: usize,
    rows_dropped: usize,
    n: usize,
    label_mapping: Option<Vec<LabelCode>>,
}

#[derive(Serialize)]
struct EstimateOut<'a> {
    input: InputOut<'a>,
    scenario: Scenario,
    k: usize,
    k_source: &'static str,
    value: f64,
    components: Vec<ComponentOut>,
    ci: Option<CiOut>,
    fit: Option<FitOut>,
    k_selection: Option<Vec<KCandidate>>,
    warnings: Vec<String>,
}

fn convergence_check(est: &GcsEstimate, strict: bool, what: &str) -> CliResult<Option<String>> {
    match &est.fit {
        Some(fit) if !fit.converged => {
            let msg = format!("{what}: best K-lines restart hit the iteration cap before converging");
            if strict {
                Err(CliError::NotConverged(msg))
            } else {
                Ok(Some(msg))
            }
        }
        _ => Ok(None),
    }
}

pub fn estimate(a: &EstimateArgs) -> CliResult<()> {
    check_level(a.level)?;
    let seed = a.common.seed();
    let config = klines_config(&a.common, seed)?;
    if a.label.is_none() && a.k.is_none() && a.k_max.is_none() {
        return Err(CliError::InvalidArgs(
            "give --label for the specified scenario, or --k / --k-max for the unspecified one".into(),
        ));
    }
    let data = ingest_pair(&a.input, &a.x, &a.y, a.label.as_deref())?;
    let points = data.sample.points();

    let (est, k_source, k_selection) = if a.label.is_some() {
        (r2_gs(&data.sample)?, "labels", None)
    } else if let Some(k) = a.k {
        (r2_gu(points, k, &config)?, "fixed", None)
    } else {
        let k_max = a.k_max.expect("checked above");
        let table = k_selection_table(points, k_max, &config)?;
        let k = pick_min_aic(&table).ok_or(GpcsError::NoFeasibleK { k_max })?;
        (r2_gu(points, k, &config)?, "aic", Some(table))
    };
    let mut warnings = Vec::new();
    warnings.extend(convergence_check(&est, a.common.strict, "estimate")?);
    if data.rows_dropped > 0 {
        warnings.push(format!("dropped {} rows with blank cells", data.rows_dropped));
    }

    let req = CiRequest { choice: a.ci, level: a.level, b: a.b, mode: resample_mode(a.resample) };
    let ci = interval(&req, &data.sample, &est, config, seed)?;

    let mapping = data.label_mapping.clone();
    let components = est
        .components
        .iter()
        .enumerate()
        .map(|(i, c)| ComponentOut {
            component: i + 1,
            label: mapping.as_ref().and_then(|m| m.get(i)).map(|m| m.value.clone()),
            weight: c.weight,
            count: c.count,
            rho2: c.rho2,
            mean_x: c.mean_x,
            mean_y: c.mean_y,
            var_x: c.var_x,
            var_y: c.var_y,
            cov_xy: c.cov_xy,
        })
        .collect();
    let fit = est.fit.as_ref().map(|f| FitOut {
        objective: f.objective,
        iterations: f.iterations,
        converged: f.converged,
        restarts_run: f.restarts_run,
        restarts_converged: f.restarts_converged,
        lines: f.lines.lines().iter().map(|l| LineOut { a: l.a(), b: l.b(), c: l.c() }).collect(),
    });
    let body = EstimateOut {
        input: InputOut {
            path: a.input.display().to_string(),
            x: &a.x,
            y: &a.y,
            label: a.label.as_deref(),
            rows_read: data.rows_read,
            rows_dropped: data.rows_dropped,
            n: data.sample.len(),
            label_mapping: data.label_mapping,
        },
        scenario: est.scenario,
        k: est.k,
        k_source,
        value: est.value,
        components,
        ci: ci.as_ref().map(|c| CiOut::new(a.ci, c)),
        fit,
        k_selection,
        warnings,
    };
    for w in &body.warnings {
        eprintln!("warning: {w}");
    }

    let bytes = match a.common.format {
        Format::Json => to_json(&envelope("estimate", seed, &body))?,
        Format::Csv => {
            let header = [
                "x", "y", "scenario", "k", "k_source", "n", "rows_dropped", "value", "ci_method", "level", "lower",
                "upper", "se", "objective", "converged", "seed",
            ];
            let scenario = match body.scenario {
                Scenario::Specified => "specified",
                Scenario::Unspecified => "unspecified",
            };
            let row = vec![
                a.x.clone(),
                a.y.clone(),
                scenario.into(),
                body.k.to_string(),
                k_source.into(),
                body.input.n.to_string(),
                body.input.rows_dropped.to_string(),
                num(body.value),
                ci_name(a.ci).into(),
                body.ci.as_ref().map(|c| num(c.level)).unwrap_or_default(),
                opt_num(body.ci.as_ref().map(|c| c.lower)),
                opt_num(body.ci.as_ref().map(|c| c.upper)),
                opt_num(body.ci.as_ref().map(|c| c.se)),
                opt_num(body.fit.as_ref().map(|f| f.objective)),
                body.fit.as_ref().map(|f| f.converged.to_string()).unwrap_or_default(),
                seed.to_string(),
            ];
            to_csv(&header, &[row])?
        }
    };
    emit(&bytes, a.common.output.as_deref())
}

#[derive(Serialize)]
struct ScanRow {
    x: String,
    y: String,
    n: usize,
    r2: Option<f64>,
    dcor: Option<f64>,
    gcs: Option<f64>,
    k: Option<usize>,
    ci: Option<CiOut>,
    converged: Option<bool>,
}

#[derive(Serialize)]
struct ScanFailure {
    x: String,
    y: String,
    error: String,
}

#[derive(Serialize)]
struct ScanOut<'a> {
    input: String,
    columns: &'a [String],
    skipped_columns: &'a [String],
    rows_read: usize,
    rows_dropped: usize,
    measures: Vec<&'static str>,
    sort_key: &'static str,
    pairs: Vec<ScanRow>,
    failures: Vec<ScanFailure>,
}

fn measure_name(m: MeasureChoice) -> &'static str {
    match m {
        MeasureChoice::R2 => "r2",
        MeasureChoice::Dcor => "dcor",
        MeasureChoice::Gcs => "gcs",
    }
}

pub fn scan(a: &ScanArgs) -> CliResult<()> {
    check_level(a.level)?;
    let seed = a.common.seed();
    let config = klines_config(&a.common, seed)?;
    let has = |m: MeasureChoice| a.measures.contains(&m);
    if a.ci != CiChoice::None && !has(MeasureChoice::Gcs) {
        return Err(CliError::InvalidArgs("--ci applies to the gcs measure; add gcs to --measures".into()));
    }
    let matrix = ingest_matrix(&a.input, &a.columns)?;
    let m = matrix.names.len();
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect();
    let req = CiRequest { choice: a.ci, level: a.level, b: a.b, mode: resample_mode(a.resample) };

    let results: Vec<Result<ScanRow, String>> = pairs
        .par_iter()
        .enumerate()
        .map(|(idx, &(i, j))| {
            let points: Vec<BivariatePoint> = matrix.columns[i]
                .iter()
                .zip(&matrix.columns[j])
                .map(|(&x, &y)| BivariatePoint::new(x, y))
                .collect();
            let pair_seed = derive_seed(seed, idx as u64);
            let mut row = ScanRow {
                x: matrix.names[i].clone(),
                y: matrix.names[j].clone(),
                n: points.len(),
                r2: has(MeasureChoice::R2).then(|| pearson_r2(&points).value),
                dcor: has(MeasureChoice::Dcor).then(|| dcor(&points).value),
                gcs: None,
                k: None,
                ci: None,
                converged: None,
            };
            if has(MeasureChoice::Gcs) {
                let cfg = config.with_seed(pair_seed);
                let mut run = || -> CliResult<()> {
                    let k = match a.k_max {
                        Some(k_max) => select_k_aic(&points, k_max, &cfg)?,
                        None => a.k,
                    };
                    let est = r2_gu(&points, k, &cfg)?;
                    convergence_check(&est, a.common.strict, "pair")?;
                    let sample = BivariateSample::new(points.clone())?;
                    row.ci = interval(&req, &sample, &est, cfg, pair_seed)?.map(|c| CiOut::new(a.ci, &c));
                    row.converged = est.fit.as_ref().map(|f| f.converged);
                    row.gcs = Some(est.value);
                    row.k = Some(est.k);
                    Ok(())
                };
                run().map_err(|e| e.to_string())?;
            }
            Ok(row)
        })
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (r, &(i, j)) in results.into_iter().zip(&pairs) {
        match r {
            Ok(row) => rows.push(row),
            Err(error) => {
                eprintln!("warning: pair ({}, {}) failed: {error}", matrix.names[i], matrix.names[j]);
                failures.push(ScanFailure { x: matrix.names[i].clone(), y: matrix.names[j].clone(), error });
            }
        }
    }
    let sort_key = [MeasureChoice::Gcs, MeasureChoice::Dcor, MeasureChoice::R2]
        .into_iter()
        .find(|&m| has(m))
        .map(measure_name)
        .unwrap_or("gcs");
    let key = |r: &ScanRow| match sort_key {
        "gcs" => r.gcs,
        "dcor" => r.dcor,
        _ => r.r2,
    };
    // stable sort keeps the column order among ties
    rows.sort_by(|p, q| key(q).unwrap_or(f64::NEG_INFINITY).total_cmp(&key(p).unwrap_or(f64::NEG_INFINITY)));

    let measures: Vec<&'static str> = a.measures.iter().map(|&m| measure_name(m)).collect();
    let bytes = match a.common.format {
        Format::Json => {
            let body = ScanOut {
                input: a.input.display().to_string(),
                columns: &matrix.names,
                skipped_columns: &matrix.skipped,
                rows_read: matrix.rows_read,
                rows_dropped: matrix.rows_dropped,
                measures,
                sort_key,
                pairs: rows,
                failures,
            };
            to_json(&envelope("scan", seed, &body))?
        }
        Format::Csv => {
            let mut header = vec!["x", "y", "n"];
            for &m in &[MeasureChoice::R2, MeasureChoice::Dcor, MeasureChoice::Gcs] {
                if has(m) {
                    header.push(measure_name(m));
                }
            }
            if has(MeasureChoice::Gcs) {
                header.push("k");
                if a.ci != CiChoice::None {
                    header.extend(["ci_lower", "ci_upper"]);
                }
            }
            let out: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    let mut rec = vec![r.x.clone(), r.y.clone(), r.n.to_string()];
                    if has(MeasureChoice::R2) {
                        rec.push(opt_num(r.r2));
                    }
                    if has(MeasureChoice::Dcor) {
                        rec.push(opt_num(r.dcor));
                    }
                    if has(MeasureChoice::Gcs) {
                        rec.push(opt_num(r.gcs));
                        rec.push(r.k.map(|k| k.to_string()).unwrap_or_default());
                        if a.ci != CiChoice::None {
                            rec.push(opt_num(r.ci.as_ref().map(|c| c.lower)));
                            rec.push(opt_num(r.ci.as_ref().map(|c| c.upper)));
                        }
                    }
                    rec
                })
                .collect();
            to_csv(&header, &out)?
        }
    };
    emit(&bytes, a.common.output.as_deref())
}

fn load_spec(path: &Path) -> CliResult<MixtureSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let spec: MixtureSpec =
        serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    spec.validate()?;
    Ok(spec)
}

#[derive(Serialize)]
struct SimulateOut<'a> {
    setting: Option<u32>,
    spec: &'a MixtureSpec,
    reps: usize,
    level: f64,
    k_choice: KChoice,
    reports: &'a [CoverageReport],
}

pub fn simulate(a: &SimulateArgs) -> CliResult<()> {
    check_level(a.level)?;
    if a.reps < MIN_COVERAGE_REPS {
        return Err(CliError::InvalidArgs(format!(
            "--reps {} is below the minimum of {MIN_COVERAGE_REPS}",
            a.reps
        )));
    }
    if a.n.is_empty() {
        return Err(CliError::InvalidArgs("--n needs at least one sample size".into()));
    }
    let methods: Vec<CoverageMethod> = a
        .methods
        .iter()
        .map(|m| CoverageMethod::parse(m).ok_or_else(|| CliError::InvalidArgs(format!("unknown method {m:?}"))))
        .collect::<CliResult<_>>()?;
    let seed = a.common.seed();
    let spec = match (&a.spec, a.setting) {
        (Some(path), _) => load_spec(path)?,
        (None, Some(id)) => builtin_setting(id)?,
        (None, None) => return Err(CliError::InvalidArgs("give --setting or --spec".into())),
    };
    let scenario = match a.scenario {
        ScenarioChoice::Specified => Scenario::Specified,
        ScenarioChoice::Unspecified => Scenario::Unspecified,
    };
    let mut options = CoverageOptions {
        level: a.level,
        bootstrap_b: a.b,
        k_choice: a.k_max.map_or(KChoice::True, |k_max| KChoice::Aic { k_max }),
        klines: klines_config(&a.common, seed)?,
        ..CoverageOptions::default()
    };
    if let Some(r) = a.reference_n {
        options.reference_n = r;
    }

    let mut reports = Vec::new();
    for &n in &a.n {
        reports.extend(coverage_experiment(&spec, a.setting, n, a.reps, scenario, &methods, seed, &options)?);
    }

    let bytes = match a.common.format {
        Format::Json => {
            let body = SimulateOut {
                setting: a.setting,
                spec: &spec,
                reps: a.reps,
                level: a.level,
                k_choice: options.k_choice,
                reports: &reports,
            };
            to_json(&envelope("simulate", seed, &body))?
        }
        Format::Csv => {
            let header = [
                "setting", "n", "scenario", "method", "level", "coverage", "covered", "reps", "failures", "target",
                "mean_width", "seed",
            ];
            let rows: Vec<Vec<String>> = reports
                .iter()
                .map(|r| {
                    vec![
                        r.setting_id.map(|s| s.to_string()).unwrap_or_else(|| "custom".into()),
                        r.n.to_string(),
                        match r.scenario {
                            Scenario::Specified => "specified".into(),
                            Scenario::Unspecified => "unspecified".into(),
                        },
                        r.method.name().into(),
                        num(a.level),
                        num(r.coverage),
                        r.covered.to_string(),
                        r.reps.to_string(),
                        r.failures.to_string(),
                        num(r.target),
                        num(r.mean_width),
                        seed.to_string(),
                    ]
                })
                .collect();
            to_csv(&header, &rows)?
        }
    };
    emit(&bytes, a.common.output.as_deref())
}

#[derive(Serialize)]
struct PowerOut<'a> {
    pattern: &'static str,
    reports: &'a [PowerReport],
}

pub fn power(a: &PowerArgs) -> CliResult<()> {
    let pattern = Pattern::parse(&a.pattern)
        .ok_or_else(|| CliError::InvalidArgs(format!("unknown pattern {:?}", a.pattern)))?;
    if a.b < MIN_POWER_B {
        return Err(CliError::InvalidArgs(format!("--b {} is below the minimum of {MIN_POWER_B}", a.b)));
    }
    if a.sigma.is_empty() || a.n.is_empty() || a.measures.is_empty() {
        return Err(CliError::InvalidArgs("--sigma, --n and --measures need at least one value".into()));
    }
    let seed = a.common.seed();
    let gcs = GcsUnspecified { k: a.k, config: klines_config(&a.common, seed)? };
    let measures: Vec<&dyn AssociationMeasure> = a
        .measures
        .iter()
        .map(|m| -> &dyn AssociationMeasure {
            match m {
                MeasureChoice::R2 => &PearsonR2,
                MeasureChoice::Dcor => &DistanceCorrelation,
                MeasureChoice::Gcs => &gcs,
            }
        })
        .collect();

    let mut reports = Vec::new();
    let mut cell = 0u64;
    for &n in &a.n {
        for &sigma in &a.sigma {
            let spec = PatternSpec::new(pattern, sigma);
            reports.extend(permutation_power(&spec, &measures, n, a.b, a.alpha, derive_seed(seed, cell))?);
            cell += 1;
        }
    }

    let bytes = match a.common.format {
        Format::Json => to_json(&envelope("power", seed, &PowerOut { pattern: pattern.name(), reports: &reports }))?,
        Format::Csv => {
            let header = ["pattern", "n", "sigma", "measure", "alpha", "b", "threshold", "power", "seed"];
            let rows: Vec<Vec<String>> = reports
                .iter()
                .map(|r| {
                    vec![
                        r.pattern.name().into(),
                        r.n.to_string(),
                        num(r.sigma),
                        r.measure.clone(),
                        num(r.alpha),
                        r.b.to_string(),
                        num(r.threshold),
                        num(r.power),
                        seed.to_string(),
                    ]
                })
                .collect();
            to_csv(&header, &rows)?
        }
    };
    emit(&bytes, a.common.output.as_deref())
}
