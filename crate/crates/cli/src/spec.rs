//! Scenario documents: a TOML file describing two LSE laws, the orders to
//! compare them under and an optional Monte Carlo section.
//!
//! ```toml
//! seed = 7
//! orders = ["st", "icx"]
//!
//! [d1]
//! mu = [0.0]
//! sigma = [[1.0]]
//! delta = [0.2]
//! generator = "normal"
//! alpha = "inv_sqrt_z"
//! beta = "inv_z"
//! mixing = { law = "beta_lambda_one", lambda = 3.0 }
//!
//! [d2]
//! # same generator, alpha, beta and mixing as d1
//!
//! [mc]
//! samples = 1000000
//!
//! [outputs]
//! report = "report.json"
//! curves = "curves.csv"
//! ```

use std::ops::Range;

use lsemix::linalg::check_symmetric;
use lsemix::mixing::AlphaBetaMap;
use lsemix::{
    AlphaKind, BetaKind, DensityGenerator, LseDistribution, LseError, McConfig, MixingDistribution, MixingLaw, OrderKind,
};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::error::{CliError, Result};

/// Symmetry tolerance applied to `sigma` blocks, relative to their largest entry.
pub const SYMMETRY_TOL: f64 = 1e-12;
pub const DEFAULT_SAMPLES: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub seed: u64,
    pub orders: Vec<OrderKind>,
    pub d1: BlockSpec,
    pub d2: BlockSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McSpec>,
    #[serde(default)]
    pub outputs: OutputsSpec,
}

/// One distribution block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub mu: Vec<f64>,
    pub sigma: Vec<Vec<f64>>,
    pub delta: Vec<f64>,
    pub generator: DensityGenerator,
    pub alpha: AlphaKind,
    pub beta: BetaKind,
    pub mixing: MixingLaw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSpec {
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Defaults to the scenario's root seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    #[serde(default = "default_multiplier")]
    pub confidence_multiplier: f64,
    #[serde(default = "default_true")]
    pub coupled: bool,
    /// Projection `a` for multivariate laws; defaults to all ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsSpec {
    #[serde(default = "default_report")]
    pub report: String,
    #[serde(default = "default_curves")]
    pub curves: String,
}

impl Default for OutputsSpec {
    fn default() -> Self {
        Self { report: default_report(), curves: default_curves() }
    }
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

fn default_multiplier() -> f64 {
    3.0
}

fn default_true() -> bool {
    true
}

fn default_report() -> String {
    "report.json".into()
}

fn default_curves() -> String {
    "curves.csv".into()
}

fn all_orders() -> Vec<OrderKind> {
    OrderKind::ALL.to_vec()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    #[serde(default)]
    seed: u64,
    #[serde(default = "all_orders")]
    orders: Vec<OrderKind>,
    d1: Spanned<RawBlock>,
    d2: Spanned<RawBlock>,
    #[serde(default)]
    mc: Option<Spanned<McSpec>>,
    #[serde(default)]
    outputs: OutputsSpec,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBlock {
    mu: Spanned<Vec<f64>>,
    sigma: Spanned<Vec<Vec<f64>>>,
    #[serde(default)]
    delta: Option<Spanned<Vec<f64>>>,
    #[serde(default)]
    generator: Option<Spanned<GeneratorField>>,
    #[serde(default)]
    alpha: Option<AlphaKind>,
    #[serde(default)]
    beta: Option<BetaKind>,
    #[serde(default)]
    mixing: Option<Spanned<MixingLaw>>,
}

/// `"normal"` as shorthand for `{ family = "normal" }`.
#[derive(Deserialize)]
#[serde(untagged)]
enum GeneratorField {
    Name(String),
    Full(DensityGenerator),
}

struct Locator<'a>(&'a str);

impl Locator<'_> {
    fn line(&self, span: Range<usize>) -> usize {
        let end = span.start.min(self.0.len());
        self.0[..end].bytes().filter(|&b| b == b'\n').count() + 1
    }

    fn error(&self, span: Range<usize>, message: impl Into<String>) -> CliError {
        CliError::Spec { line: self.line(span), message: message.into() }
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<ScenarioSpec> {
    let raw: RawScenario = toml::from_str(text)?;
    let loc = Locator(text);
    if raw.orders.is_empty() {
        return Err(CliError::Spec { line: 1, message: "orders must not be empty".into() });
    }
    let d2_span = raw.d2.span();
    let d1 = block(&loc, "d1", raw.d1)?;
    let d2 = block(&loc, "d2", raw.d2)?;
    if d1.mu.len() != d2.mu.len() {
        return Err(loc.error(d2_span, format!("d2 has dimension {}, d1 has {}", d2.mu.len(), d1.mu.len())));
    }
    if (d1.generator, d1.alpha, d1.beta) != (d2.generator, d2.alpha, d2.beta) || d1.mixing != d2.mixing {
        return Err(loc.error(d2_span, "family mismatch: d1 and d2 must share generator, alpha, beta and mixing"));
    }
    let mc = match raw.mc {
        None => None,
        Some(spanned) => {
            let span = spanned.span();
            let mc = spanned.into_inner();
            mc_config(&mc, raw.seed).validate().map_err(|e| loc.error(span.clone(), e.to_string()))?;
            if let Some(a) = &mc.direction {
                if a.len() != d1.mu.len() || a.iter().all(|&v| v == 0.0) {
                    return Err(loc.error(span, "direction must be a nonzero vector of the scenario dimension"));
                }
            }
            Some(mc)
        }
    };
    Ok(ScenarioSpec { seed: raw.seed, orders: raw.orders, d1, d2, mc, outputs: raw.outputs })
}

fn block(loc: &Locator<'_>, name: &str, raw: Spanned<RawBlock>) -> Result<BlockSpec> {
    let span = raw.span();
    let raw = raw.into_inner();
    let (generator, generator_span) = match raw.generator {
        None => (DensityGenerator::Normal, span.clone()),
        Some(g) => {
            let gspan = g.span();
            let generator = match g.into_inner() {
                GeneratorField::Full(g) => g,
                GeneratorField::Name(s) => match s.as_str() {
                    "normal" => DensityGenerator::Normal,
                    "cauchy" => DensityGenerator::Cauchy,
                    "laplace" => DensityGenerator::Laplace,
                    "logistic" => DensityGenerator::Logistic,
                    other => {
                        return Err(loc.error(
                            gspan,
                            format!("{name}.generator: '{other}' needs a table such as {{ family = \"student\", m = 3 }}"),
                        ))
                    }
                },
            };
            (generator, gspan)
        }
    };
    generator.validate().map_err(|e| loc.error(generator_span, format!("{name}.generator: {e}")))?;

    let (mixing, mixing_span) = match raw.mixing {
        None => (MixingLaw::Degenerate { z0: 1.0 }, span.clone()),
        Some(m) => {
            let mspan = m.span();
            (m.into_inner(), mspan)
        }
    };
    let mix = MixingDistribution::new(mixing.clone()).map_err(|e| loc.error(mixing_span.clone(), format!("{name}.mixing: {e}")))?;

    let mu_span = raw.mu.span();
    let mu = raw.mu.into_inner();
    let n = mu.len();
    if n == 0 {
        return Err(loc.error(mu_span, format!("{name}.mu must not be empty")));
    }
    let sigma_span = raw.sigma.span();
    let sigma = raw.sigma.into_inner();
    if sigma.len() != n || sigma.iter().any(|row| row.len() != n) {
        return Err(loc.error(sigma_span, format!("{name}.sigma must be a {n}x{n} matrix")));
    }
    let sigma_matrix = DMatrix::from_fn(n, n, |i, j| sigma[i][j]);
    check_symmetric(&sigma_matrix, SYMMETRY_TOL).map_err(|e| loc.error(sigma_span.clone(), format!("{name}.sigma: {e}")))?;

    let delta = match raw.delta {
        None => vec![0.0; n],
        Some(d) => {
            let dspan = d.span();
            let d = d.into_inner();
            if d.len() != n {
                return Err(loc.error(dspan, format!("{name}.delta must have length {n}")));
            }
            d
        }
    };
    let alpha = raw.alpha.unwrap_or(AlphaKind::One);
    let beta = raw.beta.unwrap_or(BetaKind::Zero);
    let spec = BlockSpec { mu, sigma, delta, generator, alpha, beta, mixing };
    spec.build_with(mix).map_err(|e| match e {
        CliError::Core(LseError::InvalidMatrix(m)) => loc.error(sigma_span, format!("{name}.sigma: {m}")),
        CliError::Core(LseError::UnsupportedMap(m)) => loc.error(mixing_span, format!("{name}: {m}")),
        CliError::Core(e) => loc.error(span, format!("{name}: {e}")),
        other => other,
    })?;
    Ok(spec)
}

impl BlockSpec {
    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn map(&self) -> AlphaBetaMap {
        AlphaBetaMap::new(self.alpha, self.beta)
    }

    pub fn build(&self) -> Result<LseDistribution> {
        self.build_with(MixingDistribution::new(self.mixing.clone())?)
    }

    fn build_with(&self, mix: MixingDistribution) -> Result<LseDistribution> {
        let n = self.dim();
        Ok(LseDistribution::new(
            DVector::from_row_slice(&self.mu),
            DMatrix::from_fn(n, n, |i, j| self.sigma[i][j]),
            DVector::from_row_slice(&self.delta),
            self.generator,
            self.map(),
            mix,
        )?)
    }
}

fn mc_config(mc: &McSpec, root_seed: u64) -> McConfig {
    McConfig {
        sample_count: mc.samples,
        seed: mc.seed.unwrap_or(root_seed),
        grid: mc.grid.clone(),
        confidence_multiplier: mc.confidence_multiplier,
        coupled: mc.coupled,
    }
}

impl ScenarioSpec {
    pub fn dim(&self) -> usize {
        self.d1.dim()
    }

    pub fn distributions(&self) -> Result<(LseDistribution, LseDistribution)> {
        Ok((self.d1.build()?, self.d2.build()?))
    }

    /// The Monte Carlo settings with command-line overrides applied; a seed
    /// override replaces both the root and the section seed.
    pub fn mc_config(&self, seed: Option<u64>, samples: Option<usize>) -> Option<McConfig> {
        self.mc.as_ref().map(|mc| {
            let mut cfg = mc_config(mc, self.seed);
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(n) = samples {
                cfg.sample_count = n;
            }
            cfg
        })
    }

    pub fn direction(&self) -> DVector<f64> {
        match self.mc.as_ref().and_then(|m| m.direction.as_ref()) {
            Some(a) => DVector::from_row_slice(a),
            None => DVector::from_element(self.dim(), 1.0),
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CliError::Usage(format!("cannot serialize scenario: {e}")))
    }
}
