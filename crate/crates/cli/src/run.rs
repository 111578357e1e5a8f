//! Subcommand implementations, kept free of process concerns so the tests
//! can call them directly.

use std::fs;
use std::path::{Path, PathBuf};

use lsemix::cones::{is_completely_positive, is_copositive, is_psd, DEFAULT_TOL};
use lsemix::empirical::{curves_csv, verify_cx, verify_icx_along, verify_orthant, verify_st_along};
use lsemix::orders::check;
use lsemix::{DensityGenerator, DominanceResult, LseDistribution, McConfig, OrderKind};
use nalgebra::{DMatrix, DVector};
use serde_json::{json, Value};

use crate::error::{CliError, Result};
use crate::report::{self, OrderEntry};
use crate::spec::ScenarioSpec;

/// Command-line values that take precedence over the scenario document.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
}

pub struct CheckOutcome {
    pub report: Value,
    pub curves: Option<String>,
    pub exit_code: i32,
}

/// Runs every requested order, plus the Monte Carlo cross-checks when the
/// scenario has an `mc` section.
pub fn run_check(spec: &ScenarioSpec, overrides: &Overrides) -> Result<CheckOutcome> {
    let spec = with_seed(spec, overrides);
    let (d1, d2) = spec.distributions()?;
    let mc = spec.mc_config(overrides.seed, overrides.samples);
    if let Some(cfg) = &mc {
        cfg.validate()?;
    }
    let a = spec.direction();

    let mut entries = Vec::with_capacity(spec.orders.len());
    let mut st_curves = None;
    for &order in &spec.orders {
        let report = check(&d1, &d2, order)?;
        let mc_result = match &mc {
            None => None,
            Some(cfg) => monte_carlo(&d1, &d2, cfg, &a, order)?,
        };
        if let Some(("survival", r)) = &mc_result {
            st_curves.get_or_insert_with(|| r.curves.clone());
        }
        entries.push(OrderEntry { report, mc: mc_result });
    }

    let curves = match &mc {
        None => None,
        Some(cfg) => Some(match st_curves {
            Some(points) => curves_csv(&points),
            None => curves_csv(&verify_st_along(&d1, &d2, cfg, &a)?.curves),
        }),
    };
    let direction: Vec<f64> = a.iter().copied().collect();
    let report = report::check_report(&spec, mc.as_ref(), &direction, &entries);
    Ok(CheckOutcome { report, curves, exit_code: report::exit_code(&entries) })
}

fn with_seed(spec: &ScenarioSpec, overrides: &Overrides) -> ScenarioSpec {
    let mut spec = spec.clone();
    if let Some(s) = overrides.seed {
        spec.seed = s;
    }
    spec
}

/// The Monte Carlo check matching an order, if there is one. Univariate
/// checks run on the projection `a'Y`; the orthant check uses corners at the
/// location mean shifted by `-1`, `0` and `+1` scale units.
fn monte_carlo(
    d1: &LseDistribution,
    d2: &LseDistribution,
    cfg: &McConfig,
    a: &DVector<f64>,
    order: OrderKind,
) -> Result<Option<(&'static str, DominanceResult)>> {
    let out = match order {
        OrderKind::St | OrderKind::Plst => Some(("survival", verify_st_along(d1, d2, cfg, a)?)),
        OrderKind::Icx | OrderKind::Iplcx | OrderKind::Ilcx => Some(("stop_loss", verify_icx_along(d1, d2, cfg, a)?)),
        OrderKind::Cx | OrderKind::Lcx => Some(("convex_functionals", verify_cx(d1, d2, cfg, std::slice::from_ref(a))?)),
        OrderKind::Sm | OrderKind::Uo => {
            let m = d1.location_mean();
            let s = d1.sigma().diagonal().map(f64::sqrt);
            let corners: Vec<DVector<f64>> = [-1.0, 0.0, 1.0].iter().map(|&k| &m + &s * k).collect();
            Some(("upper_orthant", verify_orthant(d1, d2, cfg, &corners)?))
        }
        OrderKind::Dcx | OrderKind::Ccx | OrderKind::Cp | OrderKind::Cop => None,
    };
    Ok(out)
}

/// Curve table for the projection `a'Y`; a scenario without an `mc` section
/// uses the default Monte Carlo settings.
pub fn run_curves(spec: &ScenarioSpec, overrides: &Overrides) -> Result<String> {
    let (d1, d2) = spec.distributions()?;
    let cfg = spec.mc_config(overrides.seed, overrides.samples).unwrap_or_else(|| {
        McConfig::new(overrides.samples.unwrap_or(crate::spec::DEFAULT_SAMPLES), overrides.seed.unwrap_or(spec.seed))
    });
    let r = verify_st_along(&d1, &d2, &cfg, &spec.direction())?;
    Ok(curves_csv(&r.curves))
}

/// Parses a whitespace-delimited square matrix, one row per line. Blank
/// lines and lines starting with `#` are skipped.
pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|tok| tok.parse::<f64>().map_err(|_| CliError::Matrix(format!("line {}: cannot parse '{tok}'", i + 1))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let n = rows.len();
    if n == 0 {
        return Err(CliError::Matrix("no rows".into()));
    }
    if let Some(bad) = rows.iter().position(|r| r.len() != n) {
        return Err(CliError::Matrix(format!("row {} has {} entries, expected {n}", bad + 1, rows[bad].len())));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(CliError::Matrix("entries must be finite".into()));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// PSD, copositive and completely positive verdicts for one matrix.
pub fn run_cones(a: &DMatrix<f64>, tol: f64) -> Result<Value> {
    let entry = |r: lsemix::Result<lsemix::ConeVerdict>| match r {
        Ok(v) => report::cone_verdict(&v),
        Err(e) => json!({ "status": "unknown", "error": e.to_string() }),
    };
    // Asymmetric input is a usage error rather than a per-cone failure.
    lsemix::linalg::check_symmetric(a, crate::spec::SYMMETRY_TOL).map_err(|e| CliError::Matrix(e.to_string()))?;
    Ok(json!({
        "dimension": a.nrows(),
        "tolerance": tol,
        "psd": entry(is_psd(a, tol)),
        "copositive": entry(is_copositive(a, tol)),
        "completely_positive": entry(is_completely_positive(a, tol)),
    }))
}

pub const DEFAULT_CONE_TOL: f64 = DEFAULT_TOL;

/// Builds a generator from its command-line name.
pub fn generator_by_name(name: &str, m: Option<u32>, s: Option<f64>) -> Result<DensityGenerator> {
    let g = match name {
        "cauchy" => DensityGenerator::Cauchy,
        "laplace" => DensityGenerator::Laplace,
        "normal" => DensityGenerator::Normal,
        "logistic" => DensityGenerator::Logistic,
        "student" => DensityGenerator::student(m.ok_or_else(|| CliError::Usage("student needs --m".into()))?)?,
        "exponential_power" => {
            DensityGenerator::exponential_power(s.ok_or_else(|| CliError::Usage("exponential_power needs --s".into()))?)?
        }
        other => return Err(CliError::Usage(format!("unknown generator '{other}'"))),
    };
    Ok(g)
}

/// Tail-ratio report for one generator, or for the whole catalog.
pub fn run_assumptions(generator: Option<DensityGenerator>, sigma1: f64, sigma2: f64, shift1: f64, shift2: f64) -> Result<Value> {
    let gens = match generator {
        Some(g) => vec![g],
        None => DensityGenerator::catalog().to_vec(),
    };
    let rows = gens
        .into_iter()
        .map(|g| {
            let r = g.limit_ratio(sigma1, sigma2, shift1, shift2)?;
            let mut v = report::limit_ratio(&r);
            v["generator"] = serde_json::to_value(g).expect("generators serialize");
            Ok(v)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(json!({ "schema_version": report::SCHEMA_VERSION, "results": rows }))
}

pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// Writes `contents` to `dir/name`, creating `dir` if needed.
pub fn write_output(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|source| CliError::Io { path: parent.to_path_buf(), source })?;
    }
    fs::write(&path, contents).map_err(|source| CliError::Io { path: path.clone(), source })?;
    Ok(path)
}
