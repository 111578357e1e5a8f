//! Catalog of elliptical density generators.
//!
//! A generator `g_n` turns the Mahalanobis quadratic form into a density:
//! `f(x) = c_n |Sigma|^{-1/2} g_n((x - mu)' Sigma^{-1} (x - mu))`. The
//! Cauchy and Student generators depend on the dimension `n`; the others do
//! not. Every family here is positive and nonincreasing on `[0, inf)`.
//!
//! Besides evaluation, this module supplies the normalizing constant, the
//! second moment of the radial variable `R` (density `~ r^{n-1} g_n(r^2)`),
//! radial samplers, and the tail-ratio classifier used to gate the
//! necessity halves of the order theorems.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, FisherF, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{LseError, Result};
use crate::quadrature::integrate_to_infinity;
use crate::special::ln_gamma;
use crate::tabulated::InverseCdfTable;

/// Elliptical density generator families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DensityGenerator {
    /// `(1 + u)^{-(n+1)/2}`.
    Cauchy,
    /// `exp(-u^{s/2} / s)` with `s > 1`.
    ExponentialPower { s: f64 },
    /// `exp(-sqrt(u))`.
    Laplace,
    /// `exp(-u / 2)`.
    Normal,
    /// `(1 + u/m)^{-(n+m)/2}` with integer `m >= 1`.
    Student { m: u32 },
    /// `exp(-u) / (1 + exp(-u))^2`.
    Logistic,
}

impl DensityGenerator {
    pub fn exponential_power(s: f64) -> Result<Self> {
        let g = Self::ExponentialPower { s };
        g.validate()?;
        Ok(g)
    }

    pub fn student(m: u32) -> Result<Self> {
        let g = Self::Student { m };
        g.validate()?;
        Ok(g)
    }

    /// The six table entries, with representative parameters for the
    /// parameterized families.
    pub fn catalog() -> [DensityGenerator; 6] {
        [
            Self::Cauchy,
            Self::ExponentialPower { s: 1.5 },
            Self::Laplace,
            Self::Normal,
            Self::Student { m: 5 },
            Self::Logistic,
        ]
    }

    /// Whether the same generator describes every lower-dimensional
    /// projection. Only the normal and Student families (Cauchy included)
    /// keep their form; the others change shape under marginalization.
    pub fn closed_under_projection(&self) -> bool {
        matches!(self, Self::Normal | Self::Student { .. } | Self::Cauchy)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::ExponentialPower { s } if !(s > 1.0 && s.is_finite()) => Err(
                LseError::Parameter(format!("exponential power needs s > 1, got {s}")),
            ),
            Self::Student { m: 0 } => Err(LseError::Parameter(
                "student generator needs a positive integer m".into(),
            )),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Cauchy => "cauchy",
            Self::ExponentialPower { .. } => "exponential_power",
            Self::Laplace => "laplace",
            Self::Normal => "normal",
            Self::Student { .. } => "student",
            Self::Logistic => "logistic",
        }
    }

    /// `ln g_n(u)` for `u >= 0` (no domain check).
    pub fn ln_eval_unchecked(&self, n: usize, u: f64) -> f64 {
        let nf = n as f64;
        match *self {
            Self::Cauchy => -0.5 * (nf + 1.0) * u.ln_1p(),
            Self::ExponentialPower { s } => -u.powf(0.5 * s) / s,
            Self::Laplace => -u.sqrt(),
            Self::Normal => -0.5 * u,
            Self::Student { m } => {
                let mf = m as f64;
                -0.5 * (nf + mf) * (u / mf).ln_1p()
            }
            Self::Logistic => -u - 2.0 * (-u).exp().ln_1p(),
        }
    }

    /// `g_n(u)`.
    pub fn eval(&self, n: usize, u: f64) -> Result<f64> {
        if !(u >= 0.0) {
            return Err(LseError::Domain(format!(
                "generator argument must be nonnegative, got {u}"
            )));
        }
        Ok(self.ln_eval_unchecked(n, u).exp())
    }

    fn check_dimension(&self, n: usize) -> Result<()> {
        if n == 0 {
            return Err(LseError::NonIntegrableGenerator {
                dim: n,
                reason: "dimension must be at least 1".into(),
            });
        }
        self.validate()
    }

    /// `ln` of the radial integral `int_0^inf z^{k} g_n(z) dz` with
    /// `k = n/2 - 1 + extra`, for `extra` in `{0, 1}`.
    fn ln_radial_integral(&self, n: usize, extra: u32) -> Result<f64> {
        self.check_dimension(n)?;
        let nf = n as f64;
        let a = 0.5 * nf + extra as f64; // z^{a-1}
        let value = match *self {
            Self::Normal => ln_gamma(a) + a * std::f64::consts::LN_2,
            Self::Cauchy | Self::Student { .. } => {
                let mf = match *self {
                    Self::Student { m } => m as f64,
                    _ => 1.0,
                };
                // int z^{a-1} (1 + z/m)^{-(n+m)/2} dz = m^a B(a, (n+m)/2 - a).
                let b = 0.5 * (nf + mf) - a;
                if b <= 0.0 {
                    return Ok(f64::INFINITY);
                }
                a * mf.ln() + ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
            }
            Self::ExponentialPower { s } => {
                // Substituting w = z^{s/2}/s gives (2/s) s^{2a/s} Gamma(2a/s).
                (2.0 / s).ln() + (2.0 * a / s) * s.ln() + ln_gamma(2.0 * a / s)
            }
            Self::Laplace => std::f64::consts::LN_2 + ln_gamma(2.0 * a),
            Self::Logistic => {
                // z = r^2: int z^{a-1} g(z) dz = 2 int r^{2a-1} g(r^2) dr.
                let g = *self;
                let p = 2.0 * a - 1.0;
                let r = integrate_to_infinity(
                    move |r: f64| {
                        if r == 0.0 {
                            return if p == 0.0 { 0.25 } else { 0.0 };
                        }
                        (p * r.ln() + g.ln_eval_unchecked(n, r * r)).exp()
                    },
                    0.0,
                    1e-15,
                    1e-13,
                )?;
                (2.0 * r.value).ln()
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(LseError::NonIntegrableGenerator {
                dim: n,
                reason: "radial integral is not finite".into(),
            })
        }
    }

    /// `int_0^inf z^{n/2-1} g_n(z) dz`.
    pub fn radial_integral(&self, n: usize) -> Result<f64> {
        let v = self.ln_radial_integral(n, 0)?;
        if v.is_infinite() {
            return Err(LseError::NonIntegrableGenerator {
                dim: n,
                reason: "radial integral diverges".into(),
            });
        }
        Ok(v.exp())
    }

    /// `c_n = Gamma(n/2) pi^{-n/2} / int_0^inf z^{n/2-1} g_n(z) dz`.
    pub fn normalizing_constant(&self, n: usize) -> Result<f64> {
        Ok(self.ln_normalizing_constant(n)?.exp())
    }

    pub fn ln_normalizing_constant(&self, n: usize) -> Result<f64> {
        let li = self.ln_radial_integral(n, 0)?;
        if li.is_infinite() {
            return Err(LseError::NonIntegrableGenerator {
                dim: n,
                reason: "radial integral diverges".into(),
            });
        }
        let nf = n as f64;
        Ok(ln_gamma(0.5 * nf) - 0.5 * nf * PI.ln() - li)
    }

    /// `E(R^2)` for the generating variable of `ELL_n(0, I, g_n)`;
    /// `+inf` when the moment diverges.
    ///
    /// Equals `n` times the covariance factor `-2 psi'(0)`.
    pub fn radial_second_moment(&self, n: usize) -> Result<f64> {
        self.check_dimension(n)?;
        let closed = match *self {
            Self::Normal => Some(n as f64),
            Self::Cauchy => Some(f64::INFINITY),
            Self::Student { m } => {
                let mf = m as f64;
                Some(if m > 2 { n as f64 * mf / (mf - 2.0) } else { f64::INFINITY })
            }
            Self::Laplace => Some((n * (n + 1)) as f64),
            Self::ExponentialPower { s } => {
                let nf = n as f64;
                Some((2.0 / s * s.ln() + ln_gamma((nf + 2.0) / s) - ln_gamma(nf / s)).exp())
            }
            Self::Logistic => None,
        };
        match closed {
            Some(v) => Ok(v),
            None => {
                let num = self.ln_radial_integral(n, 1)?;
                let den = self.ln_radial_integral(n, 0)?;
                Ok((num - den).exp())
            }
        }
    }

    /// Covariance factor `-2 psi'(0) = E(R^2) / n`.
    pub fn covariance_factor(&self, n: usize) -> Result<f64> {
        Ok(self.radial_second_moment(n)? / n as f64)
    }

    /// Sampler for the generating variable `R` in dimension `n`.
    pub fn radial_law(&self, n: usize) -> Result<RadialLaw> {
        self.check_dimension(n)?;
        let nf = n as f64;
        let law = match *self {
            Self::Normal => RadialLaw::Chi(ChiSquared::new(nf).expect("positive dof")),
            Self::Cauchy => RadialLaw::ScaledF {
                f: FisherF::new(nf, 1.0).expect("positive dof"),
                n: nf,
            },
            Self::Student { m } => RadialLaw::ScaledF {
                f: FisherF::new(nf, m as f64).expect("positive dof"),
                n: nf,
            },
            Self::Laplace => RadialLaw::GammaPower {
                gamma: Gamma::new(nf, 1.0).expect("positive shape"),
                s: 1.0,
            },
            Self::ExponentialPower { s } => RadialLaw::GammaPower {
                gamma: Gamma::new(nf / s, 1.0).expect("positive shape"),
                s,
            },
            Self::Logistic => {
                let g = *self;
                // g(r^2) <= exp(-r^2); r^{n-1} e^{-r^2} is negligible past this bound.
                let upper = (2.0 * (nf + 40.0)).sqrt() + 2.0;
                let table = InverseCdfTable::from_density(
                    move |r: f64| {
                        if r == 0.0 {
                            return if n == 1 { 0.25 } else { 0.0 };
                        }
                        ((nf - 1.0) * r.ln() + g.ln_eval_unchecked(n, r * r)).exp()
                    },
                    0.0,
                    upper,
                    4096,
                );
                RadialLaw::Table(Box::new(table))
            }
        };
        Ok(law)
    }

    /// Tail ratio `lim (s1/s2) g(t2^2) / g(t1^2)` with `t_i = (t - shift_i)/s_i`,
    /// from the closed forms (univariate generator).
    pub fn limit_ratio(&self, sigma1: f64, sigma2: f64, shift1: f64, shift2: f64) -> Result<LimitRatioResult> {
        check_scales(sigma1, sigma2, shift1, shift2)?;
        let c = match *self {
            Self::Student { m } => (sigma2 / sigma1).powi(m as i32),
            Self::Cauchy => sigma2 / sigma1,
            Self::Normal | Self::Laplace | Self::ExponentialPower { .. } | Self::Logistic => {
                if sigma1 > sigma2 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        };
        Ok(LimitRatioResult::classify(c, true, sigma1, sigma2, LimitMethod::ClosedForm))
    }

    /// The same tail ratio estimated on the geometric ladder
    /// `t = +-10^k * max(s1, s2)`, `k = 2..=6`.
    pub fn limit_ratio_numeric(
        &self,
        sigma1: f64,
        sigma2: f64,
        shift1: f64,
        shift2: f64,
    ) -> Result<LimitRatioResult> {
        check_scales(sigma1, sigma2, shift1, shift2)?;
        let scale = sigma1.max(sigma2);
        let side = |sign: f64| -> Vec<f64> {
            (2..=6)
                .map(|k| {
                    let t = sign * 10f64.powi(k) * scale;
                    self.ln_ratio_at(t, sigma1, sigma2, shift1, shift2)
                })
                .collect()
        };
        let plus = classify_ladder(&side(1.0));
        let minus = classify_ladder(&side(-1.0));
        let (c, converged) = match (plus, minus) {
            (Some(a), Some(b)) if ladder_limits_agree(a, b) => (a, true),
            _ => (plus.unwrap_or(f64::NAN), false),
        };
        Ok(LimitRatioResult::classify(c, converged, sigma1, sigma2, LimitMethod::NumericLadder))
    }

    /// `ln[(s1/s2) g(t2^2) / g(t1^2)]` at a single `t`.
    pub fn ln_ratio_at(&self, t: f64, sigma1: f64, sigma2: f64, shift1: f64, shift2: f64) -> f64 {
        let t1 = (t - shift1) / sigma1;
        let t2 = (t - shift2) / sigma2;
        (sigma1 / sigma2).ln() + self.ln_eval_unchecked(1, t2 * t2) - self.ln_eval_unchecked(1, t1 * t1)
    }
}

fn check_scales(sigma1: f64, sigma2: f64, shift1: f64, shift2: f64) -> Result<()> {
    if !(sigma1 > 0.0 && sigma2 > 0.0 && sigma1.is_finite() && sigma2.is_finite()) {
        return Err(LseError::Domain("scales must be positive and finite".into()));
    }
    if !(shift1.is_finite() && shift2.is_finite()) {
        return Err(LseError::Domain("shifts must be finite".into()));
    }
    if sigma1 == sigma2 {
        return Err(LseError::Domain(
            "the tail-ratio classification needs sigma1 != sigma2".into(),
        ));
    }
    Ok(())
}

const LN_HUGE: f64 = 27.631_021_115_928_547; // ln(1e12)

/// Limit of one ladder side from its log-ratios, or `None` when unsettled.
fn classify_ladder(ln_values: &[f64]) -> Option<f64> {
    let tail = &ln_values[ln_values.len() - 3..];
    if tail.iter().all(|&v| v > LN_HUGE) {
        return Some(f64::INFINITY);
    }
    if tail.iter().all(|&v| v < -LN_HUGE) {
        return Some(0.0);
    }
    if tail.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let last = tail[2].exp();
    let settled = tail.iter().all(|&v| (v.exp() - last).abs() <= 0.01 * last);
    settled.then_some(last)
}

fn ladder_limits_agree(a: f64, b: f64) -> bool {
    if a.is_infinite() || b.is_infinite() || a == 0.0 || b == 0.0 {
        return a == b;
    }
    (a - b).abs() <= 0.01 * a.max(b)
}

/// How a tail ratio was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitMethod {
    ClosedForm,
    NumericLadder,
}

/// Outcome of the tail-ratio classifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitRatioResult {
    /// The limit `C`; may be `+inf`, `NaN` when the ladder did not settle.
    pub c_value: f64,
    pub converged: bool,
    pub satisfies_assumption1: bool,
    /// Only meaningful with `sigma1 > sigma2`; `false` otherwise.
    pub satisfies_assumption2: bool,
    pub sigma1: f64,
    pub sigma2: f64,
    pub method: LimitMethod,
}

impl LimitRatioResult {
    fn classify(c: f64, converged: bool, sigma1: f64, sigma2: f64, method: LimitMethod) -> Self {
        let ok = converged && !c.is_nan() && c >= 0.0;
        Self {
            c_value: c,
            converged,
            satisfies_assumption1: ok && c != 1.0,
            satisfies_assumption2: ok && sigma1 > sigma2 && c < 1.0,
            sigma1,
            sigma2,
            method,
        }
    }
}

/// Sampler for the generating variable `R`.
#[derive(Debug, Clone)]
pub enum RadialLaw {
    /// `R = sqrt(chi^2_n)`.
    Chi(ChiSquared<f64>),
    /// `R = sqrt(n F(n, m))`.
    ScaledF { f: FisherF<f64>, n: f64 },
    /// `R = (s G)^{1/s}` with `G ~ Gamma(n/s, 1)`.
    GammaPower { gamma: Gamma<f64>, s: f64 },
    /// Tabulated inverse CDF of `r^{n-1} g(r^2)`.
    Table(Box<InverseCdfTable>),
}

impl RadialLaw {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Chi(c) => c.sample(rng).sqrt(),
            Self::ScaledF { f, n } => (n * f.sample(rng)).sqrt(),
            Self::GammaPower { gamma, s } => (s * gamma.sample(rng)).powf(1.0 / s),
            Self::Table(t) => t.quantile(rng.random::<f64>()),
        }
    }
}
