//! Mixing laws `H` for the variable `Z`, the `alpha`/`beta` transforms, and
//! the quadrature, sampling and moment machinery built on them.

use rand::Rng;
use rand_distr::{Distribution, weighted::WeightedIndex};
use serde::{Deserialize, Serialize};

use crate::error::{LseError, Result};
use crate::quadrature::GaussLegendre;
use crate::special::{ln_bessel_k, ln_gamma};
use crate::tabulated::InverseCdfTable;

/// Number of Gauss-Legendre nodes used for continuous mixing laws.
pub const QUADRATURE_NODES: usize = 256;
/// Points in the GIG inverse-CDF table.
pub const GIG_TABLE_POINTS: usize = 4096;
const WEIGHT_SUM_TOL: f64 = 1e-12;
/// Log-density drop defining the GIG integration window.
const GIG_LOG_WINDOW: f64 = 50.0;

/// Catalog of mixing laws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum MixingLaw {
    /// Point mass at `z0`.
    Degenerate { z0: f64 },
    /// `Beta(lambda, 1)` on `(0, 1)`, density `lambda z^{lambda-1}`.
    BetaLambdaOne { lambda: f64 },
    /// Generalized inverse Gaussian with density
    /// `(tau/chi)^{lambda/2} / (2 K_lambda(sqrt(chi tau))) w^{lambda-1} exp(-(chi/w + tau w)/2)`.
    GeneralizedInverseGaussian { lambda: f64, chi: f64, tau: f64 },
    /// Finite law on `(point, weight)` atoms.
    DiscreteWeighted { atoms: Vec<(f64, f64)> },
}

/// Support of a mixing law.
#[derive(Debug, Clone, PartialEq)]
pub enum Support {
    Point(f64),
    /// Open interval `(lo, hi)`; `hi` may be `+inf`.
    Interval { lo: f64, hi: f64 },
    Finite(Vec<f64>),
}

impl Support {
    pub fn contains(&self, z: f64) -> bool {
        match self {
            Self::Point(p) => z == *p,
            Self::Interval { lo, hi } => z > *lo && z < *hi,
            Self::Finite(pts) => pts.contains(&z),
        }
    }

    /// Every point of the support is strictly positive.
    pub fn is_positive(&self) -> bool {
        match self {
            Self::Point(p) => *p > 0.0,
            Self::Interval { lo, .. } => *lo >= 0.0,
            Self::Finite(pts) => pts.iter().all(|&p| p > 0.0),
        }
    }
}

/// A validated mixing law together with its quadrature rule.
#[derive(Debug, Clone)]
pub struct MixingDistribution {
    law: MixingLaw,
    support: Support,
    quadrature: Vec<(f64, f64)>,
    sampler: MixingSampler,
}

#[derive(Debug, Clone)]
enum MixingSampler {
    Constant(f64),
    BetaInverse(f64),
    Table(Box<InverseCdfTable>),
    Discrete(Vec<f64>, WeightedIndex<f64>),
}

impl PartialEq for MixingDistribution {
    fn eq(&self, other: &Self) -> bool {
        self.law == other.law
    }
}

impl MixingDistribution {
    pub fn new(law: MixingLaw) -> Result<Self> {
        validate_law(&law)?;
        let (support, quadrature, sampler) = match &law {
            MixingLaw::Degenerate { z0 } => (
                Support::Point(*z0),
                vec![(*z0, 1.0)],
                MixingSampler::Constant(*z0),
            ),
            MixingLaw::BetaLambdaOne { lambda } => {
                let rule = GaussLegendre::new(QUADRATURE_NODES);
                let raw: Vec<(f64, f64)> = rule
                    .mapped(0.0, 1.0)
                    .map(|(z, w)| (z, w * lambda * z.powf(lambda - 1.0)))
                    .collect();
                (
                    Support::Interval { lo: 0.0, hi: 1.0 },
                    normalize(raw),
                    MixingSampler::BetaInverse(*lambda),
                )
            }
            MixingLaw::GeneralizedInverseGaussian { lambda, chi, tau } => {
                let (lo, hi) = gig_log_window(*lambda, *chi, *tau);
                let ln_h = |x: f64| ln_gig_density(*lambda, *chi, *tau, x.exp()) + x;
                let rule = GaussLegendre::new(QUADRATURE_NODES);
                let raw: Vec<(f64, f64)> =
                    rule.mapped(lo, hi).map(|(x, w)| (x.exp(), w * ln_h(x).exp())).collect();
                let table = InverseCdfTable::from_density(|x| ln_h(x).exp(), lo, hi, GIG_TABLE_POINTS);
                (
                    Support::Interval { lo: 0.0, hi: f64::INFINITY },
                    normalize(raw),
                    MixingSampler::Table(Box::new(table)),
                )
            }
            MixingLaw::DiscreteWeighted { atoms } => {
                let points: Vec<f64> = atoms.iter().map(|a| a.0).collect();
                let index = WeightedIndex::new(atoms.iter().map(|a| a.1))
                    .map_err(|e| LseError::Parameter(format!("discrete weights: {e}")))?;
                (
                    Support::Finite(points.clone()),
                    atoms.clone(),
                    MixingSampler::Discrete(points, index),
                )
            }
        };
        Ok(Self { law, support, quadrature, sampler })
    }

    pub fn degenerate(z0: f64) -> Result<Self> {
        Self::new(MixingLaw::Degenerate { z0 })
    }

    pub fn beta_lambda_one(lambda: f64) -> Result<Self> {
        Self::new(MixingLaw::BetaLambdaOne { lambda })
    }

    pub fn gig(lambda: f64, chi: f64, tau: f64) -> Result<Self> {
        Self::new(MixingLaw::GeneralizedInverseGaussian { lambda, chi, tau })
    }

    pub fn discrete(atoms: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(MixingLaw::DiscreteWeighted { atoms })
    }

    pub fn law(&self) -> &MixingLaw {
        &self.law
    }

    pub fn support(&self) -> &Support {
        &self.support
    }

    /// Quadrature `(node, weight)` pairs; weights sum to one.
    pub fn quadrature(&self) -> &[(f64, f64)] {
        &self.quadrature
    }

    /// `E f(Z)` by the quadrature rule.
    pub fn expectation<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        let mut acc = 0.0;
        for &(z, w) in &self.quadrature {
            let v = f(z);
            if !v.is_finite() {
                return Err(LseError::Integrability { node: z });
            }
            acc += w * v;
        }
        Ok(acc)
    }

    /// Exact `E(Z^p)`, `+inf` when the moment diverges.
    pub fn power_moment(&self, p: f64) -> f64 {
        if p == 0.0 {
            return 1.0;
        }
        match &self.law {
            MixingLaw::Degenerate { z0 } => z0.powf(p),
            MixingLaw::BetaLambdaOne { lambda } => {
                if lambda + p > 0.0 {
                    lambda / (lambda + p)
                } else {
                    f64::INFINITY
                }
            }
            MixingLaw::GeneralizedInverseGaussian { lambda, chi, tau } => {
                gig_power_moment(*lambda, *chi, *tau, p)
            }
            MixingLaw::DiscreteWeighted { atoms } => {
                atoms.iter().map(|&(z, w)| if w == 0.0 { 0.0 } else { w * z.powf(p) }).sum()
            }
        }
    }

    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.sampler {
            MixingSampler::Constant(z) => *z,
            MixingSampler::BetaInverse(lambda) => {
                // H(z) = z^lambda; 1 - U keeps the draw away from zero.
                let u: f64 = 1.0 - rng.random::<f64>();
                u.powf(1.0 / lambda)
            }
            MixingSampler::Table(t) => t.quantile(rng.random::<f64>()).exp(),
            MixingSampler::Discrete(points, index) => points[index.sample(rng)],
        }
    }

    /// `count` i.i.d. draws from `H`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Result<Vec<f64>> {
        if count == 0 {
            return Err(LseError::Usage("sample count must be at least 1".into()));
        }
        Ok((0..count).map(|_| self.sample_one(rng)).collect())
    }

    /// Infimum and supremum of `beta` over the support.
    pub fn beta_range(&self, map: &AlphaBetaMap) -> Result<(f64, f64)> {
        map.validate_for(self)?;
        let Some(b) = map.beta.exponent() else {
            return Ok((0.0, 0.0));
        };
        let beta = |z: f64| map.beta.apply(z);
        match &self.support {
            Support::Point(z) => Ok((beta(*z), beta(*z))),
            Support::Finite(pts) => {
                let vals: Vec<f64> = pts.iter().map(|&z| beta(z)).collect();
                let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                Ok((lo, hi))
            }
            Support::Interval { lo, hi } => {
                let at = |z: f64| -> f64 {
                    if z == 0.0 {
                        if b > 0.0 { 0.0 } else { f64::INFINITY }
                    } else if z.is_infinite() {
                        if b > 0.0 { f64::INFINITY } else { 0.0 }
                    } else {
                        z.powf(b)
                    }
                };
                let (a, c) = (at(*lo), at(*hi));
                if b == 1.0 {
                    // Identity also covers signed intervals.
                    return Ok((*lo, *hi));
                }
                Ok((a.min(c), a.max(c)))
            }
        }
    }
}

fn normalize(mut nodes: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    let total: f64 = nodes.iter().map(|n| n.1).sum();
    for n in &mut nodes {
        n.1 /= total;
    }
    nodes
}

fn validate_law(law: &MixingLaw) -> Result<()> {
    match law {
        MixingLaw::Degenerate { z0 } if !z0.is_finite() => {
            Err(LseError::Parameter("degenerate point must be finite".into()))
        }
        MixingLaw::BetaLambdaOne { lambda } if !(*lambda > 0.0 && lambda.is_finite()) => Err(
            LseError::Parameter(format!("beta(lambda, 1) needs lambda > 0, got {lambda}")),
        ),
        MixingLaw::GeneralizedInverseGaussian { lambda, chi, tau } => {
            validate_gig(*lambda, *chi, *tau)
        }
        MixingLaw::DiscreteWeighted { atoms } => {
            if atoms.is_empty() {
                return Err(LseError::Parameter("discrete law needs at least one atom".into()));
            }
            if atoms.iter().any(|&(z, w)| !z.is_finite() || !(w >= 0.0)) {
                return Err(LseError::Parameter(
                    "discrete atoms need finite points and nonnegative weights".into(),
                ));
            }
            let total: f64 = atoms.iter().map(|a| a.1).sum();
            if (total - 1.0).abs() > WEIGHT_SUM_TOL {
                return Err(LseError::Parameter(format!(
                    "discrete weights must sum to 1, got {total}"
                )));
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

fn validate_gig(lambda: f64, chi: f64, tau: f64) -> Result<()> {
    let finite = lambda.is_finite() && chi.is_finite() && tau.is_finite();
    let ok = finite
        && if lambda < 0.0 {
            chi > 0.0 && tau >= 0.0
        } else if lambda == 0.0 {
            chi > 0.0 && tau > 0.0
        } else {
            chi >= 0.0 && tau > 0.0
        };
    if ok {
        Ok(())
    } else {
        Err(LseError::Parameter(format!(
            "GIG parameters out of domain: lambda={lambda}, chi={chi}, tau={tau}"
        )))
    }
}

/// Log normalizing constant of the GIG density, covering the gamma
/// (`chi = 0`) and inverse-gamma (`tau = 0`) boundary cases.
fn ln_gig_constant(lambda: f64, chi: f64, tau: f64) -> f64 {
    if chi == 0.0 {
        lambda * (0.5 * tau).ln() - ln_gamma(lambda)
    } else if tau == 0.0 {
        -lambda * (0.5 * chi).ln() - ln_gamma(-lambda)
    } else {
        0.5 * lambda * (tau / chi).ln() - std::f64::consts::LN_2 - ln_bessel_k(lambda, (chi * tau).sqrt())
    }
}

fn ln_gig_density(lambda: f64, chi: f64, tau: f64, omega: f64) -> f64 {
    ln_gig_constant(lambda, chi, tau) + (lambda - 1.0) * omega.ln() - 0.5 * (chi / omega + tau * omega)
}

/// GIG density `h(omega)`.
pub fn gig_density(lambda: f64, chi: f64, tau: f64, omega: f64) -> Result<f64> {
    validate_gig(lambda, chi, tau)?;
    if !(omega >= 0.0) {
        return Err(LseError::Domain(format!("GIG density needs omega >= 0, got {omega}")));
    }
    if omega == 0.0 {
        // Limit from the right.
        return Ok(if chi > 0.0 || lambda > 1.0 {
            0.0
        } else if lambda == 1.0 {
            0.5 * tau
        } else {
            f64::INFINITY
        });
    }
    Ok(ln_gig_density(lambda, chi, tau, omega).exp())
}

fn gig_power_moment(lambda: f64, chi: f64, tau: f64, p: f64) -> f64 {
    if chi == 0.0 {
        // Gamma(lambda, rate tau/2).
        if lambda + p <= 0.0 {
            return f64::INFINITY;
        }
        (ln_gamma(lambda + p) - ln_gamma(lambda) + p * (2.0 / tau).ln()).exp()
    } else if tau == 0.0 {
        // Inverse gamma(-lambda, scale chi/2).
        if -lambda - p <= 0.0 {
            return f64::INFINITY;
        }
        (ln_gamma(-lambda - p) - ln_gamma(-lambda) + p * (0.5 * chi).ln()).exp()
    } else {
        let eta = (chi * tau).sqrt();
        (0.5 * p * (chi / tau).ln() + ln_bessel_k(lambda + p, eta) - ln_bessel_k(lambda, eta)).exp()
    }
}

/// Window `[lo, hi]` in `x = ln(omega)` outside which the log-density of
/// `x` is at least `GIG_LOG_WINDOW` below its mode.
fn gig_log_window(lambda: f64, chi: f64, tau: f64) -> (f64, f64) {
    let mode = if chi == 0.0 {
        2.0 * lambda / tau
    } else if tau == 0.0 {
        chi / (-2.0 * lambda)
    } else {
        (lambda + (lambda * lambda + chi * tau).sqrt()) / tau
    };
    let x0 = mode.ln();
    let f = |x: f64| ln_gig_density(lambda, chi, tau, x.exp()) + x;
    let peak = f(x0);
    let mut step = 1.0;
    while f(x0 - step) > peak - GIG_LOG_WINDOW && step < 1e3 {
        step *= 1.5;
    }
    let lo = x0 - step;
    let mut step = 1.0;
    while f(x0 + step) > peak - GIG_LOG_WINDOW && step < 1e3 {
        step *= 1.5;
    }
    (lo, x0 + step)
}

/// Form of `alpha(z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaKind {
    One,
    SqrtZ,
    InvSqrtZ,
    PowerZ(f64),
}

/// Form of `beta(z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaKind {
    Zero,
    Identity,
    InvZ,
    PowerZ(f64),
}

impl AlphaKind {
    pub fn exponent(&self) -> f64 {
        match *self {
            Self::One => 0.0,
            Self::SqrtZ => 0.5,
            Self::InvSqrtZ => -0.5,
            Self::PowerZ(p) => p,
        }
    }

    pub fn apply(&self, z: f64) -> f64 {
        match *self {
            Self::One => 1.0,
            Self::SqrtZ => z.sqrt(),
            Self::InvSqrtZ => 1.0 / z.sqrt(),
            Self::PowerZ(p) => z.powf(p),
        }
    }
}

impl BetaKind {
    /// `Some(p)` for `beta(z) = z^p`, `None` for the zero map.
    pub fn exponent(&self) -> Option<f64> {
        match *self {
            Self::Zero => None,
            Self::Identity => Some(1.0),
            Self::InvZ => Some(-1.0),
            Self::PowerZ(p) => Some(p),
        }
    }

    pub fn apply(&self, z: f64) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::Identity => z,
            Self::InvZ => 1.0 / z,
            Self::PowerZ(p) => z.powf(p),
        }
    }
}

/// The pair `(alpha, beta)` of the location-scale representation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaBetaMap {
    pub alpha: AlphaKind,
    pub beta: BetaKind,
}

impl AlphaBetaMap {
    pub fn new(alpha: AlphaKind, beta: BetaKind) -> Self {
        Self { alpha, beta }
    }

    /// `alpha = 1`, `beta = 0`: a plain elliptical law.
    pub fn elliptical() -> Self {
        Self::new(AlphaKind::One, BetaKind::Zero)
    }

    /// Skew-slash form: `alpha = z^{-1/2}`, `beta = 1/z`.
    pub fn skew_slash() -> Self {
        Self::new(AlphaKind::InvSqrtZ, BetaKind::InvZ)
    }

    /// Normal mean-variance mixture form: `alpha = sqrt(z)`, `beta = z`.
    pub fn mean_variance() -> Self {
        Self::new(AlphaKind::SqrtZ, BetaKind::Identity)
    }

    /// Pure location mixture: `alpha = 1`, `beta = z`.
    pub fn location_only() -> Self {
        Self::new(AlphaKind::One, BetaKind::Identity)
    }

    /// Checks that `alpha > 0` and `beta` is defined on the support.
    pub fn validate_for(&self, mix: &MixingDistribution) -> Result<()> {
        let needs_positive = !matches!(self.alpha, AlphaKind::One)
            || matches!(self.beta, BetaKind::InvZ | BetaKind::PowerZ(_));
        if needs_positive && !mix.support().is_positive() {
            return Err(LseError::UnsupportedMap(format!(
                "{self:?} needs a positive mixing support"
            )));
        }
        Ok(())
    }

    pub fn alpha_sq_exponent(&self) -> f64 {
        2.0 * self.alpha.exponent()
    }
}
