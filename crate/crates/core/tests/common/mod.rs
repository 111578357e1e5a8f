//! Random parameter generators shared by the integration tests.
#![allow(dead_code)]

use lsemix::{AlphaBetaMap, DensityGenerator, LseDistribution, MixingDistribution};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

/// Generator, map and mixing law shared by both members of a pair.
#[derive(Clone)]
pub struct Family {
    pub generator: DensityGenerator,
    pub map: AlphaBetaMap,
    pub mixing: MixingDistribution,
}

impl Family {
    pub fn normal() -> Self {
        Self {
            generator: DensityGenerator::Normal,
            map: AlphaBetaMap::elliptical(),
            mixing: MixingDistribution::degenerate(1.0).unwrap(),
        }
    }

    pub fn ghss(lambda: f64) -> Self {
        Self {
            generator: DensityGenerator::Normal,
            map: AlphaBetaMap::skew_slash(),
            mixing: MixingDistribution::beta_lambda_one(lambda).unwrap(),
        }
    }

    pub fn build(&self, mu: DVector<f64>, sigma: DMatrix<f64>, delta: DVector<f64>) -> LseDistribution {
        LseDistribution::new(mu, sigma, delta, self.generator, self.map, self.mixing.clone()).unwrap()
    }

    pub fn has_skew(&self) -> bool {
        self.map.beta.exponent().is_some()
    }
}

pub fn random_family<R: Rng>(rng: &mut R) -> Family {
    match rng.random_range(0..5) {
        0 => Family::normal(),
        1 => Family::ghss(rng.random_range(2.5..6.0)),
        2 => Family { generator: DensityGenerator::Student { m: 3 }, ..Family::normal() },
        3 => Family {
            generator: DensityGenerator::Laplace,
            map: AlphaBetaMap::mean_variance(),
            mixing: MixingDistribution::gig(0.5, 1.0, 2.0).unwrap(),
        },
        _ => Family {
            generator: DensityGenerator::Logistic,
            map: AlphaBetaMap::skew_slash(),
            mixing: MixingDistribution::discrete(vec![(0.5, 0.3), (1.0, 0.7)]).unwrap(),
        },
    }
}

pub fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

pub fn random_spd<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let a = gaussian_matrix(rng, n, n, 0.6);
    &a * a.transpose() + DMatrix::identity(n, n) * 0.3
}

pub fn uniform_vector<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(lo..hi))
}

/// A pair whose second member is a structured perturbation of the first,
/// so that ordered, unordered and undecided pairs all turn up.
pub fn random_pair<R: Rng>(rng: &mut R, n: usize, family: &Family, sme: bool) -> (LseDistribution, LseDistribution) {
    let mu1 = uniform_vector(rng, n, -1.0, 1.0);
    let sigma1 = random_spd(rng, n);
    let delta1 = if sme || !family.has_skew() { DVector::zeros(n) } else { uniform_vector(rng, n, -0.5, 0.5) };

    let mu2 = match rng.random_range(0..3) {
        0 => mu1.clone(),
        1 => &mu1 + uniform_vector(rng, n, 0.0, 0.5),
        _ => uniform_vector(rng, n, -1.0, 1.0),
    };
    let sigma2 = match rng.random_range(0..5) {
        0 => sigma1.clone(),
        1 => {
            let v = gaussian_matrix(rng, n, 1, 0.5);
            &sigma1 + &v * v.transpose()
        }
        2 => {
            let mut s = sigma1.clone();
            for i in 0..n {
                for j in 0..i {
                    let bump = rng.random_range(0.0..0.2);
                    s[(i, j)] += bump;
                    s[(j, i)] += bump;
                }
            }
            s + DMatrix::identity(n, n) * 0.2 * n as f64
        }
        3 => &sigma1 * rng.random_range(0.5..0.95),
        _ => random_spd(rng, n),
    };
    let delta2 = if sme || !family.has_skew() {
        DVector::zeros(n)
    } else {
        match rng.random_range(0..3) {
            0 => delta1.clone(),
            1 => &delta1 + uniform_vector(rng, n, 0.0, 0.3),
            _ => uniform_vector(rng, n, -0.5, 0.5),
        }
    };
    (family.build(mu1, sigma1, delta1), family.build(mu2, sigma2, delta2))
}
