//! Monte Carlo cross-checks of analytic verdicts: survival and stop-loss
//! dominance, convex test functionals, and upper orthant probabilities.
//!
//! Both laws are sampled from the same latent draws by default (common
//! random numbers), and every comparison uses the standard error of the
//! paired difference.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::LseDistribution;
use crate::error::{LseError, Result};
use crate::rng::stream;

/// Draws per worker chunk; each chunk owns one random stream.
pub const CHUNK: usize = 1 << 15;
/// Smallest sample size accepted for a dominance verdict.
pub const MIN_SAMPLES: usize = 10_000;
pub const DEFAULT_GRID_POINTS: usize = 41;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub sample_count: usize,
    pub seed: u64,
    /// Evaluation points; `None` selects 41 points spanning the pooled
    /// 0.1%..99.9% sample quantiles.
    #[serde(default)]
    pub grid: Option<Vec<f64>>,
    #[serde(default = "default_multiplier")]
    pub confidence_multiplier: f64,
    /// Sample both laws from shared latent draws.
    #[serde(default = "default_coupled")]
    pub coupled: bool,
}

fn default_multiplier() -> f64 {
    3.0
}

fn default_coupled() -> bool {
    true
}

impl McConfig {
    pub fn new(sample_count: usize, seed: u64) -> Self {
        Self { sample_count, seed, grid: None, confidence_multiplier: 3.0, coupled: true }
    }

    pub fn with_grid(mut self, grid: Vec<f64>) -> Self {
        self.grid = Some(grid);
        self
    }

    pub fn independent(mut self) -> Self {
        self.coupled = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_count < MIN_SAMPLES {
            return Err(LseError::Usage(format!(
                "dominance checks need at least {MIN_SAMPLES} samples, got {}",
                self.sample_count
            )));
        }
        if !(self.confidence_multiplier > 0.0) {
            return Err(LseError::Usage("confidence multiplier must be positive".into()));
        }
        if let Some(g) = &self.grid {
            if g.is_empty() || g.windows(2).any(|w| !(w[0] <= w[1])) || g.iter().any(|t| !t.is_finite()) {
                return Err(LseError::Usage("grid must be nonempty, finite and sorted".into()));
            }
        }
        Ok(())
    }
}

/// One row of the survival/stop-loss curve table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: f64,
    pub survival_1: f64,
    pub survival_2: f64,
    pub se_1: f64,
    pub se_2: f64,
    pub stoploss_1: f64,
    pub stoploss_2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceResult {
    pub pass: bool,
    /// Largest excess of the estimated difference over its band. For grid
    /// checks this is the smaller excess of the worst adjacent pair, so
    /// `pass` is equivalent to `max_violation <= 0`.
    pub max_violation: f64,
    pub violation_point: Option<Vec<f64>>,
    pub standard_error_at_violation: f64,
    /// Every evaluation point that counts toward a failure.
    #[serde(default)]
    pub failing_points: Vec<Vec<f64>>,
    #[serde(default)]
    pub curves: Vec<CurvePoint>,
}

/// `(t, survival, standard error)` at each grid point.
pub fn empirical_survival(samples: &[f64], grid: &[f64]) -> Vec<(f64, f64, f64)> {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    grid.iter()
        .map(|&t| {
            let above = sorted.len() - sorted.partition_point(|&x| x <= t);
            let p = above as f64 / n;
            (t, p, (p * (1.0 - p) / n).sqrt())
        })
        .collect()
}

/// Stop-loss transform `E(X - t)_+` with its standard error.
pub fn stop_loss(samples: &[f64], t: f64) -> (f64, f64) {
    mean_se(samples.iter().map(|&x| (x - t).max(0.0)), samples.len())
}

fn mean_se<I: Iterator<Item = f64>>(values: I, n: usize) -> (f64, f64) {
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for v in values {
        sum += v;
        sum_sq += v * v;
    }
    let nf = n as f64;
    let mean = sum / nf;
    let var = ((sum_sq - nf * mean * mean) / (nf - 1.0).max(1.0)).max(0.0);
    (mean, (var / nf).sqrt())
}

/// Draws from both laws as row-major buffers of length `count * n`.
pub fn sample_pair(d1: &LseDistribution, d2: &LseDistribution, cfg: &McConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    if d1.dim() != d2.dim() {
        return Err(LseError::DimensionMismatch { expected: d1.dim(), found: d2.dim() });
    }
    if cfg.coupled && !d1.same_family(d2) {
        return Err(LseError::IncomparableFamilies("coupled sampling needs a shared family".into()));
    }
    if cfg.sample_count == 0 {
        return Err(LseError::Usage("sample count must be at least 1".into()));
    }
    let n = d1.dim();
    let chunks = cfg.sample_count.div_ceil(CHUNK);
    let parts: Vec<(Vec<f64>, Vec<f64>)> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let len = CHUNK.min(cfg.sample_count - k * CHUNK);
            let mut a = Vec::with_capacity(len * n);
            let mut b = Vec::with_capacity(len * n);
            if cfg.coupled {
                let mut rng = stream(cfg.seed, k as u64);
                for _ in 0..len {
                    let latent = d1.sample_latent(&mut rng);
                    a.extend(d1.transform(&latent).iter());
                    b.extend(d2.transform(&latent).iter());
                }
            } else {
                let mut r1 = stream(cfg.seed, 2 * k as u64);
                let mut r2 = stream(cfg.seed, 2 * k as u64 + 1);
                for _ in 0..len {
                    a.extend(d1.sample_one(&mut r1).iter());
                    b.extend(d2.sample_one(&mut r2).iter());
                }
            }
            (a, b)
        })
        .collect();
    let mut y1 = Vec::with_capacity(cfg.sample_count * n);
    let mut y2 = Vec::with_capacity(cfg.sample_count * n);
    for (a, b) in parts {
        y1.extend(a);
        y2.extend(b);
    }
    Ok((y1, y2))
}

fn require_univariate(d1: &LseDistribution, d2: &LseDistribution) -> Result<()> {
    if d1.dim() != 1 || d2.dim() != 1 {
        return Err(LseError::Usage(
            "univariate laws required; project multivariate laws first".into(),
        ));
    }
    Ok(())
}

/// 41-point grid over the pooled 0.1%..99.9% quantile range.
pub fn default_grid(y1: &[f64], y2: &[f64]) -> Vec<f64> {
    let mut pooled: Vec<f64> = y1.iter().chain(y2).copied().collect();
    pooled.sort_by(f64::total_cmp);
    let q = |p: f64| pooled[((pooled.len() - 1) as f64 * p).round() as usize];
    let (lo, hi) = (q(0.001), q(0.999));
    let steps = (DEFAULT_GRID_POINTS - 1) as f64;
    (0..DEFAULT_GRID_POINTS).map(|i| lo + (hi - lo) * i as f64 / steps).collect()
}

/// Survival and stop-loss curves of both samples on `grid`.
pub fn curves(y1: &[f64], y2: &[f64], grid: &[f64]) -> Vec<CurvePoint> {
    let s1 = empirical_survival(y1, grid);
    let s2 = empirical_survival(y2, grid);
    grid.par_iter()
        .enumerate()
        .map(|(i, &t)| CurvePoint {
            t,
            survival_1: s1[i].1,
            survival_2: s2[i].1,
            se_1: s1[i].2,
            se_2: s2[i].2,
            stoploss_1: stop_loss(y1, t).0,
            stoploss_2: stop_loss(y2, t).0,
        })
        .collect()
}

pub const CURVE_CSV_HEADER: &str = "t,survival_1,survival_2,se_1,se_2,stoploss_1,stoploss_2";

/// Curve table as CSV with LF line endings. Numbers use Rust's shortest
/// round-trip formatting, which never depends on the locale.
pub fn curves_csv(points: &[CurvePoint]) -> String {
    let mut out = String::with_capacity(64 * (points.len() + 1));
    out.push_str(CURVE_CSV_HEADER);
    out.push('\n');
    for p in points {
        let row = [p.t, p.survival_1, p.survival_2, p.se_1, p.se_2, p.stoploss_1, p.stoploss_2];
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// `(mean, se)` of `f(y1_k) - f(y2_k)`; paired when coupled.
fn difference<F: Fn(f64) -> f64 + Sync>(y1: &[f64], y2: &[f64], f: F, coupled: bool) -> (f64, f64) {
    if coupled {
        mean_se(y1.iter().zip(y2).map(|(&a, &b)| f(a) - f(b)), y1.len())
    } else {
        let (m1, s1) = mean_se(y1.iter().map(|&a| f(a)), y1.len());
        let (m2, s2) = mean_se(y2.iter().map(|&b| f(b)), y2.len());
        (m1 - m2, (s1 * s1 + s2 * s2).sqrt())
    }
}

/// Grid decision: a failure needs two adjacent points above the band.
fn grid_decision(grid: &[f64], diffs: &[(f64, f64)], multiplier: f64, curves: Vec<CurvePoint>) -> DominanceResult {
    let excess: Vec<f64> = diffs.iter().map(|&(d, se)| d - multiplier * se).collect();
    let mut best = (f64::NEG_INFINITY, 0usize);
    if excess.len() == 1 {
        best = (excess[0].min(0.0), 0);
    }
    for i in 0..excess.len().saturating_sub(1) {
        let pair = excess[i].min(excess[i + 1]);
        if pair > best.0 {
            let at = if excess[i] >= excess[i + 1] { i } else { i + 1 };
            best = (pair, at);
        }
    }
    let (max_violation, idx) = best;
    let above = |i: usize| excess[i] > 0.0;
    let failing_points = (0..excess.len())
        .filter(|&i| above(i) && ((i > 0 && above(i - 1)) || (i + 1 < excess.len() && above(i + 1))))
        .map(|i| vec![grid[i]])
        .collect();
    DominanceResult {
        pass: max_violation <= 0.0,
        max_violation,
        violation_point: Some(vec![grid[idx]]),
        standard_error_at_violation: diffs[idx].1,
        failing_points,
        curves,
    }
}

fn univariate_samples(
    d1: &LseDistribution,
    d2: &LseDistribution,
    cfg: &McConfig,
    direction: Option<&DVector<f64>>,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    cfg.validate()?;
    let (y1, y2) = match direction {
        None => {
            require_univariate(d1, d2)?;
            sample_pair(d1, d2, cfg)?
        }
        Some(a) => {
            let n = d1.dim();
            if a.len() != n {
                return Err(LseError::DimensionMismatch { expected: n, found: a.len() });
            }
            let (y1, y2) = sample_pair(d1, d2, cfg)?;
            let project = |y: &[f64]| -> Vec<f64> { y.chunks_exact(n).map(|row| row.iter().zip(a.iter()).map(|(x, w)| x * w).sum()).collect() };
            (project(&y1), project(&y2))
        }
    };
    let grid = cfg.grid.clone().unwrap_or_else(|| default_grid(&y1, &y2));
    Ok((y1, y2, grid))
}

fn survival_check(y1: &[f64], y2: &[f64], grid: &[f64], cfg: &McConfig) -> DominanceResult {
    let diffs: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&t| difference(y1, y2, |x| if x > t { 1.0 } else { 0.0 }, cfg.coupled))
        .collect();
    grid_decision(grid, &diffs, cfg.confidence_multiplier, curves(y1, y2, grid))
}

fn stop_loss_check(y1: &[f64], y2: &[f64], grid: &[f64], cfg: &McConfig) -> DominanceResult {
    let diffs: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&t| difference(y1, y2, |x| (x - t).max(0.0), cfg.coupled))
        .collect();
    grid_decision(grid, &diffs, cfg.confidence_multiplier, curves(y1, y2, grid))
}

/// Checks `P(Y1 > t) <= P(Y2 > t)` on the grid.
pub fn verify_st(d1: &LseDistribution, d2: &LseDistribution, cfg: &McConfig) -> Result<DominanceResult> {
    let (y1, y2, grid) = univariate_samples(d1, d2, cfg, None)?;
    Ok(survival_check(&y1, &y2, &grid, cfg))
}

/// Checks `E(Y1 - t)_+ <= E(Y2 - t)_+` on the grid.
pub fn verify_icx(d1: &LseDistribution, d2: &LseDistribution, cfg: &McConfig) -> Result<DominanceResult> {
    let (y1, y2, grid) = univariate_samples(d1, d2, cfg, None)?;
    Ok(stop_loss_check(&y1, &y2, &grid, cfg))
}

/// [`verify_st`] for the projections `a'Y1`, `a'Y2` of multivariate laws.
/// Works from joint draws, so no closed form of the projected law is needed.
pub fn verify_st_along(d1: &LseDistribution, d2: &LseDistribution, cfg: &McConfig, a: &DVector<f64>) -> Result<DominanceResult> {
    let (y1, y2, grid) = univariate_samples(d1, d2, cfg, Some(a))?;
    Ok(survival_check(&y1, &y2, &grid, cfg))
}

/// [`verify_icx`] for the projections `a'Y1`, `a'Y2`.
pub fn verify_icx_along(d1: &LseDistribution, d2: &LseDistribution, cfg: &McConfig, a: &DVector<f64>) -> Result<DominanceResult> {
    let (y1, y2, grid) = univariate_samples(d1, d2, cfg, Some(a))?;
    Ok(stop_loss_check(&y1, &y2, &grid, cfg))
}

/// A test functional on draws, with a description of the point it is tied to.
struct Functional {
    point: Vec<f64>,
    f: Box<dyn Fn(&[f64]) -> f64 + Sync>,
    two_sided: bool,
}

fn functional_decision(y1: &[f64], y2: &[f64], n: usize, fs: &[Functional], cfg: &McConfig) -> DominanceResult {
    let count = y1.len() / n;
    let results: Vec<(f64, f64)> = fs
        .par_iter()
        .map(|func| {
            let v1 = (0..count).map(|k| (func.f)(&y1[k * n..(k + 1) * n]));
            if cfg.coupled {
                let diffs = v1.zip((0..count).map(|k| (func.f)(&y2[k * n..(k + 1) * n]))).map(|(a, b)| a - b);
                mean_se(diffs, count)
            } else {
                let (m1, s1) = mean_se(v1, count);
                let (m2, s2) = mean_se((0..count).map(|k| (func.f)(&y2[k * n..(k + 1) * n])), count);
                (m1 - m2, (s1 * s1 + s2 * s2).sqrt())
            }
        })
        .collect();
    let mut worst = (f64::NEG_INFINITY, 0usize);
    let mut failing_points = Vec::new();
    for (i, (&(d, se), func)) in results.iter().zip(fs).enumerate() {
        let d = if func.two_sided { d.abs() } else { d };
        let excess = d - cfg.confidence_multiplier * se;
        if excess > 0.0 {
            failing_points.push(func.point.clone());
        }
        if excess > worst.0 {
            worst = (excess, i);
        }
    }
    DominanceResult {
        pass: worst.0 <= 0.0,
        max_violation: worst.0,
        violation_point: Some(fs[worst.1].point.clone()),
        standard_error_at_violation: results[worst.1].1,
        failing_points,
        curves: Vec::new(),
    }
}

/// Checks `E f(Y1) <= E f(Y2)` for the convex functionals `(a'x)^2`,
/// `|a'x|` (each direction), `max_i x_i` and `sum_i (x_i - c)_+` (each grid
/// value `c`, default `0`), and equality of the projected means.
pub fn verify_cx(
    d1: &LseDistribution,
    d2: &LseDistribution,
    cfg: &McConfig,
    directions: &[DVector<f64>],
) -> Result<DominanceResult> {
    cfg.validate()?;
    let n = d1.dim();
    if directions.iter().any(|a| a.len() != n) {
        return Err(LseError::DimensionMismatch { expected: n, found: directions.iter().map(|a| a.len()).find(|&l| l != n).unwrap_or(0) });
    }
    let (y1, y2) = sample_pair(d1, d2, cfg)?;
    let mut fs = Vec::new();
    let ones = DVector::from_element(n, 1.0);
    for a in directions.iter().chain(std::iter::once(&ones)) {
        let av: Vec<f64> = a.iter().copied().collect();
        let dot = move |x: &[f64]| x.iter().zip(&av).map(|(p, q)| p * q).sum::<f64>();
        let (d1f, d2f, d3f) = (dot.clone(), dot.clone(), dot);
        let point: Vec<f64> = a.iter().copied().collect();
        fs.push(Functional { point: point.clone(), f: Box::new(move |x| d1f(x).powi(2)), two_sided: false });
        fs.push(Functional { point: point.clone(), f: Box::new(move |x| d2f(x).abs()), two_sided: false });
        fs.push(Functional { point, f: Box::new(d3f), two_sided: true });
    }
    fs.push(Functional {
        point: Vec::new(),
        f: Box::new(|x| x.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
        two_sided: false,
    });
    for c in cfg.grid.clone().unwrap_or_else(|| vec![0.0]) {
        fs.push(Functional {
            point: vec![c],
            f: Box::new(move |x| x.iter().map(|&v| (v - c).max(0.0)).sum()),
            two_sided: false,
        });
    }
    Ok(functional_decision(&y1, &y2, n, &fs, cfg))
}

/// Checks `P(Y1 > t) <= P(Y2 > t)` componentwise-strict at each corner `t`.
pub fn verify_orthant(
    d1: &LseDistribution,
    d2: &LseDistribution,
    cfg: &McConfig,
    corners: &[DVector<f64>],
) -> Result<DominanceResult> {
    cfg.validate()?;
    let n = d1.dim();
    if corners.is_empty() {
        return Err(LseError::Usage("at least one corner point is required".into()));
    }
    if let Some(c) = corners.iter().find(|c| c.len() != n) {
        return Err(LseError::DimensionMismatch { expected: n, found: c.len() });
    }
    let (y1, y2) = sample_pair(d1, d2, cfg)?;
    let fs: Vec<Functional> = corners
        .iter()
        .map(|c| {
            let t: Vec<f64> = c.iter().copied().collect();
            let tt = t.clone();
            Functional {
                point: t,
                f: Box::new(move |x| if x.iter().zip(&tt).all(|(a, b)| a > b) { 1.0 } else { 0.0 }),
                two_sided: false,
            }
        })
        .collect();
    Ok(functional_decision(&y1, &y2, n, &fs, cfg))
}
