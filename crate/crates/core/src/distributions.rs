//! The LSE distribution object `Y = mu + alpha(Z) X + beta(Z) delta`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{LseError, Result};
use crate::generators::{DensityGenerator, RadialLaw};
use crate::linalg::check_symmetric;
use crate::mixing::{AlphaBetaMap, BetaKind, MixingDistribution};

const SYMMETRY_TOL: f64 = 1e-12;
const RANK_TOL: f64 = 1e-10;

/// A location-scale mixture of elliptical distributions in dimension `n`.
#[derive(Debug, Clone)]
pub struct LseDistribution {
    mu: DVector<f64>,
    sigma: DMatrix<f64>,
    delta: DVector<f64>,
    generator: DensityGenerator,
    map: AlphaBetaMap,
    mixing: MixingDistribution,
    /// Lower Cholesky factor `L` with `L L' = Sigma`.
    chol: DMatrix<f64>,
    chol_inv: DMatrix<f64>,
    ln_det: f64,
    ln_cn: f64,
    radial: RadialLaw,
}

/// Exact first and second moments; `None` where a required moment diverges.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSummary {
    pub mean: Option<DVector<f64>>,
    pub covariance: Option<DMatrix<f64>>,
    pub e_beta: f64,
    pub var_beta: f64,
    pub e_alpha_sq: f64,
}

/// The independent ingredients of one draw: the mixing value `z`, radius
/// `r` and direction `u` on the unit sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentDraw {
    pub z: f64,
    pub r: f64,
    pub u: DVector<f64>,
}

impl LseDistribution {
    pub fn new(
        mu: DVector<f64>,
        sigma: DMatrix<f64>,
        delta: DVector<f64>,
        generator: DensityGenerator,
        map: AlphaBetaMap,
        mixing: MixingDistribution,
    ) -> Result<Self> {
        let n = mu.len();
        if n == 0 {
            return Err(LseError::Usage("dimension must be at least 1".into()));
        }
        if sigma.nrows() != n || sigma.ncols() != n {
            return Err(LseError::DimensionMismatch { expected: n, found: sigma.nrows() });
        }
        if delta.len() != n {
            return Err(LseError::DimensionMismatch { expected: n, found: delta.len() });
        }
        if mu.iter().chain(delta.iter()).chain(sigma.iter()).any(|v| !v.is_finite()) {
            return Err(LseError::Parameter("parameters must be finite".into()));
        }
        check_symmetric(&sigma, SYMMETRY_TOL)?;
        let chol = Cholesky::new(sigma.clone())
            .ok_or_else(|| LseError::InvalidMatrix("sigma is not positive definite".into()))?
            .l();
        let ln_det = 2.0 * chol.diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let chol_inv = chol
            .clone()
            .solve_lower_triangular(&DMatrix::identity(n, n))
            .ok_or_else(|| LseError::InvalidMatrix("sigma is not positive definite".into()))?;
        let ln_cn = generator.ln_normalizing_constant(n)?;
        map.validate_for(&mixing)?;
        let radial = generator.radial_law(n)?;
        Ok(Self { mu, sigma, delta, generator, map, mixing, chol, chol_inv, ln_det, ln_cn, radial })
    }

    /// Univariate law with location `mu`, scale parameter `sigma` (the
    /// `1x1` matrix `Sigma`) and skewness `delta`.
    pub fn univariate(
        mu: f64,
        sigma: f64,
        delta: f64,
        generator: DensityGenerator,
        map: AlphaBetaMap,
        mixing: MixingDistribution,
    ) -> Result<Self> {
        Self::new(
            DVector::from_element(1, mu),
            DMatrix::from_element(1, 1, sigma),
            DVector::from_element(1, delta),
            generator,
            map,
            mixing,
        )
    }

    /// Generalized hyperbolic skew-slash law: normal generator,
    /// `Z ~ Beta(lambda, 1)`, `alpha = z^{-1/2}`, `beta = 1/z`.
    pub fn ghss(mu: DVector<f64>, sigma: DMatrix<f64>, delta: DVector<f64>, lambda: f64) -> Result<Self> {
        Self::new(
            mu,
            sigma,
            delta,
            DensityGenerator::Normal,
            AlphaBetaMap::skew_slash(),
            MixingDistribution::beta_lambda_one(lambda)?,
        )
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn delta(&self) -> &DVector<f64> {
        &self.delta
    }

    /// `delta`, or the zero vector when `beta` is identically zero.
    pub fn effective_delta(&self) -> DVector<f64> {
        if matches!(self.map.beta, BetaKind::Zero) {
            DVector::zeros(self.dim())
        } else {
            self.delta.clone()
        }
    }

    pub fn generator(&self) -> DensityGenerator {
        self.generator
    }

    pub fn map(&self) -> AlphaBetaMap {
        self.map
    }

    pub fn mixing(&self) -> &MixingDistribution {
        &self.mixing
    }

    /// Lower Cholesky factor of `Sigma`.
    pub fn cholesky(&self) -> &DMatrix<f64> {
        &self.chol
    }

    /// Same generator, map and mixing law.
    pub fn same_family(&self, other: &Self) -> bool {
        self.generator == other.generator && self.map == other.map && self.mixing == other.mixing
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(LseError::DimensionMismatch { expected: self.dim(), found: len });
        }
        Ok(())
    }

    /// Density at `y`, integrating the conditional elliptical density over
    /// the mixing quadrature. The scale factor is `alpha(z)^n`.
    pub fn pdf(&self, y: &DVector<f64>) -> Result<f64> {
        self.check_dim(y.len())?;
        let n = self.dim() as f64;
        let centered = y - &self.mu;
        let white_y = &self.chol_inv * &centered;
        let white_d = &self.chol_inv * &self.delta;
        let base = self.ln_cn - 0.5 * self.ln_det;
        let mut acc = 0.0;
        for &(z, w) in self.mixing.quadrature() {
            let a = self.map.alpha.apply(z);
            let b = self.map.beta.apply(z);
            let q = (&white_y - b * &white_d).norm_squared() / (a * a);
            let v = (base - n * a.ln() + self.generator.ln_eval_unchecked(self.dim(), q)).exp();
            if v.is_finite() {
                acc += w * v;
            } else {
                return Err(LseError::Integrability { node: z });
            }
        }
        Ok(acc)
    }

    /// Characteristic function; defined here for the normal generator only.
    pub fn char_fn(&self, t: &DVector<f64>) -> Result<Complex64> {
        self.check_dim(t.len())?;
        if self.generator != DensityGenerator::Normal {
            return Err(LseError::UnsupportedGenerator(format!(
                "characteristic function needs the normal generator, got {}",
                self.generator.name()
            )));
        }
        let t_mu = t.dot(&self.mu);
        let t_delta = t.dot(&self.effective_delta());
        let t_sigma_t = crate::linalg::quad_form(&self.sigma, t);
        let mut acc = Complex64::new(0.0, 0.0);
        for &(z, w) in self.mixing.quadrature() {
            let a = self.map.alpha.apply(z);
            let b = self.map.beta.apply(z);
            let phase = Complex64::new(0.0, b * t_delta).exp();
            acc += w * phase * (-0.5 * a * a * t_sigma_t).exp();
        }
        Ok(Complex64::new(0.0, t_mu).exp() * acc)
    }

    /// `(E beta(Z), Var beta(Z))`, both `0` for the zero map.
    pub fn beta_moments(&self) -> (f64, f64) {
        match self.map.beta.exponent() {
            None => (0.0, 0.0),
            Some(p) => {
                let m1 = self.mixing.power_moment(p);
                let m2 = self.mixing.power_moment(2.0 * p);
                if !m1.is_finite() || !m2.is_finite() {
                    (m1, f64::INFINITY)
                } else {
                    (m1, (m2 - m1 * m1).max(0.0))
                }
            }
        }
    }

    /// `mu + E beta(Z) delta`: the location the mean-ordering clauses compare.
    /// Components with `delta_i = 0` stay finite when `E beta` diverges.
    pub fn location_mean(&self) -> DVector<f64> {
        let (eb, _) = self.beta_moments();
        let d = self.effective_delta();
        DVector::from_fn(self.dim(), |i, _| if d[i] == 0.0 { self.mu[i] } else { self.mu[i] + eb * d[i] })
    }

    fn radial_first_moment_finite(&self) -> bool {
        match self.generator {
            DensityGenerator::Cauchy => false,
            DensityGenerator::Student { m } => m > 1,
            _ => true,
        }
    }

    pub fn moments(&self) -> MomentSummary {
        let n = self.dim();
        let (e_beta, var_beta) = self.beta_moments();
        let e_alpha_sq = self.mixing.power_moment(self.map.alpha_sq_exponent());
        let e_alpha = self.mixing.power_moment(self.map.alpha.exponent());
        let delta = self.effective_delta();
        let skewed = delta.iter().any(|&d| d != 0.0);

        let mean_ok = self.radial_first_moment_finite() && e_alpha.is_finite() && (!skewed || e_beta.is_finite());
        let mean = mean_ok.then(|| self.location_mean());

        let r2 = self.generator.radial_second_moment(n).unwrap_or(f64::INFINITY);
        let cov_ok = r2.is_finite() && e_alpha_sq.is_finite() && (!skewed || var_beta.is_finite());
        let covariance = cov_ok.then(|| {
            let mut c = &self.sigma * (r2 / n as f64 * e_alpha_sq);
            if skewed {
                c += &delta * delta.transpose() * var_beta;
            }
            0.5 * (&c + c.transpose())
        });
        MomentSummary { mean, covariance, e_beta, var_beta, e_alpha_sq }
    }

    /// One set of latent ingredients `(z, r, u)`.
    pub fn sample_latent<R: Rng + ?Sized>(&self, rng: &mut R) -> LatentDraw {
        let z = self.mixing.sample_one(rng);
        let r = self.radial.sample(rng);
        let u = unit_direction(rng, self.dim());
        LatentDraw { z, r, u }
    }

    /// Maps latent ingredients to `mu + alpha(z) r L u + beta(z) delta`.
    /// Feeding the same draw to two distributions couples them.
    pub fn transform(&self, latent: &LatentDraw) -> DVector<f64> {
        let a = self.map.alpha.apply(latent.z);
        let b = self.map.beta.apply(latent.z);
        let mut y = &self.chol * &latent.u * (a * latent.r);
        y += &self.mu;
        if b != 0.0 {
            y += &self.delta * b;
        }
        y
    }

    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let latent = self.sample_latent(rng);
        self.transform(&latent)
    }

    /// `count` draws as the rows of a `count x n` matrix.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Result<DMatrix<f64>> {
        if count == 0 {
            return Err(LseError::Usage("sample count must be at least 1".into()));
        }
        let mut out = DMatrix::zeros(count, self.dim());
        for i in 0..count {
            let y = self.sample_one(rng);
            out.row_mut(i).copy_from(&y.transpose());
        }
        Ok(out)
    }

    /// Law of `B Y + b` for a full-row-rank `B`.
    ///
    /// Maps to fewer dimensions need a generator that keeps its form under
    /// projection; otherwise the result would carry the wrong density
    /// generator and this returns `UnsupportedGenerator`.
    pub fn affine(&self, b_mat: &DMatrix<f64>, b_vec: &DVector<f64>) -> Result<Self> {
        let m = b_mat.nrows();
        self.check_dim(b_mat.ncols())?;
        if b_vec.len() != m {
            return Err(LseError::DimensionMismatch { expected: m, found: b_vec.len() });
        }
        if m == 0 || m > self.dim() {
            return Err(LseError::SingularTransform(format!(
                "a {m}x{} map cannot have full row rank",
                self.dim()
            )));
        }
        if m < self.dim() && !self.generator.closed_under_projection() {
            return Err(LseError::UnsupportedGenerator(format!(
                "the {} generator changes form under projection to {m} of {} dimensions",
                self.generator.name(),
                self.dim()
            )));
        }
        let sv = b_mat.clone().svd(false, false).singular_values;
        let largest = sv.max();
        let smallest = sv.min();
        if !(largest > 0.0) || smallest <= RANK_TOL * largest {
            return Err(LseError::SingularTransform(format!(
                "singular values range from {smallest:e} to {largest:e}"
            )));
        }
        let sigma = b_mat * &self.sigma * b_mat.transpose();
        let sigma = 0.5 * (&sigma + sigma.transpose());
        Self::new(
            b_mat * &self.mu + b_vec,
            sigma,
            b_mat * &self.delta,
            self.generator,
            self.map,
            self.mixing.clone(),
        )
    }

    /// Sub-vector law for the zero-based `indices`.
    pub fn marginal(&self, indices: &[usize]) -> Result<Self> {
        let n = self.dim();
        let mut seen = vec![false; n];
        for &i in indices {
            if i >= n {
                return Err(LseError::Usage(format!("index {i} out of range for dimension {n}")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(LseError::Usage(format!("duplicate index {i}")));
            }
        }
        let sel = DMatrix::from_fn(indices.len(), n, |r, c| if indices[r] == c { 1.0 } else { 0.0 });
        self.affine(&sel, &DVector::zeros(indices.len()))
    }

    /// Univariate law of `a' Y`.
    pub fn linear_functional(&self, a: &DVector<f64>) -> Result<Self> {
        self.check_dim(a.len())?;
        if a.iter().all(|&v| v == 0.0) {
            return Err(LseError::Usage("linear functional needs a nonzero vector".into()));
        }
        self.affine(&DMatrix::from_row_slice(1, a.len(), a.as_slice()), &DVector::zeros(1))
    }

    /// Scale mixture of elliptical laws: `delta` exactly zero or `beta = 0`.
    pub fn is_sme(&self) -> bool {
        matches!(self.map.beta, BetaKind::Zero) || self.delta.iter().all(|&d| d == 0.0)
    }

    /// The same law with a different location, scale and skewness.
    pub fn with_parameters(&self, mu: DVector<f64>, sigma: DMatrix<f64>, delta: DVector<f64>) -> Result<Self> {
        Self::new(mu, sigma, delta, self.generator, self.map, self.mixing.clone())
    }
}

/// Uniform direction on the unit sphere `S^{n-1}`.
pub fn unit_direction<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<f64> {
    if n == 1 {
        return DVector::from_element(1, if rng.random::<bool>() { 1.0 } else { -1.0 });
    }
    loop {
        let g = DVector::<f64>::from_fn_generic(Dyn(n), nalgebra::U1, |_, _| rng.sample(StandardNormal));
        let norm = g.norm();
        if norm > 1e-300 {
            return g / norm;
        }
    }
}
