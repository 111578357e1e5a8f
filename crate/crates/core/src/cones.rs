//! Membership tests for the positive semidefinite, copositive and completely
//! positive cones.
//!
//! Decisions compare quadratic-form values against `tol * ||A||_max`, so a
//! matrix and any positive multiple of it get the same verdict.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LseError, Result};
use crate::linalg::{check_symmetric, max_abs, quad_form};
use crate::rng::stream;

pub const DEFAULT_TOL: f64 = 1e-9;
/// Largest dimension accepted by the copositivity test.
pub const COPOSITIVE_MAX_DIM: usize = 10;
const GRID_RESOLUTION: usize = 24;
const DESCENT_SEEDS: usize = 16;
const DESCENT_ITERS: usize = 2000;
const CP_RESTARTS: u64 = 200;
const CP_SEED: u64 = 0x5eed_c0de;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConeStatus {
    Inside,
    Outside,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    Eigen,
    SimplexPoint,
    Factorization,
    SufficientRule,
    ExactSmallN,
}

/// Evidence backing a verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Witness {
    Vector(Vec<f64>),
    /// Rows of a nonnegative `B` with `B'B = A`.
    Factor(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeVerdict {
    pub status: ConeStatus,
    pub witness: Option<Witness>,
    pub certificate_kind: CertificateKind,
}

impl ConeVerdict {
    fn new(status: ConeStatus, witness: Option<Witness>, kind: CertificateKind) -> Self {
        Self { status, witness, certificate_kind: kind }
    }

    fn with_vector(status: ConeStatus, v: &DVector<f64>, kind: CertificateKind) -> Self {
        Self::new(status, Some(Witness::Vector(v.iter().copied().collect())), kind)
    }

    pub fn is_inside(&self) -> bool {
        self.status == ConeStatus::Inside
    }

    pub fn is_outside(&self) -> bool {
        self.status == ConeStatus::Outside
    }

    pub fn witness_vector(&self) -> Option<DVector<f64>> {
        match &self.witness {
            Some(Witness::Vector(v)) => Some(DVector::from_vec(v.clone())),
            _ => None,
        }
    }

    pub fn witness_factor(&self) -> Option<DMatrix<f64>> {
        match &self.witness {
            Some(Witness::Factor(rows)) => {
                let k = rows.len();
                let n = rows.first().map_or(0, Vec::len);
                Some(DMatrix::from_fn(k, n, |i, j| rows[i][j]))
            }
            _ => None,
        }
    }
}

fn threshold(a: &DMatrix<f64>, tol: f64) -> f64 {
    tol * max_abs(a)
}

fn validate(a: &DMatrix<f64>, tol: f64) -> Result<()> {
    check_symmetric(a, tol.max(1e-12)).map_err(|e| LseError::Usage(e.to_string()))
}

fn unit(n: usize, i: usize) -> DVector<f64> {
    let mut e = DVector::zeros(n);
    e[i] = 1.0;
    e
}

/// Positive semidefiniteness by symmetric eigendecomposition.
pub fn is_psd(a: &DMatrix<f64>, tol: f64) -> Result<ConeVerdict> {
    validate(a, tol)?;
    let n = a.nrows();
    if n == 0 {
        return Ok(ConeVerdict::new(ConeStatus::Inside, None, CertificateKind::Eigen));
    }
    let eig = SymmetricEigen::new(a.clone());
    let (idx, &lmin) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .expect("nonempty");
    if lmin >= -threshold(a, tol) {
        Ok(ConeVerdict::new(ConeStatus::Inside, None, CertificateKind::Eigen))
    } else {
        let v = eig.eigenvectors.column(idx).into_owned();
        Ok(ConeVerdict::with_vector(ConeStatus::Outside, &v, CertificateKind::Eigen))
    }
}

/// Copositivity: `x'Ax >= 0` for all `x >= 0`, decided by the minimum of the
/// quadratic form over the standard simplex.
pub fn is_copositive(a: &DMatrix<f64>, tol: f64) -> Result<ConeVerdict> {
    validate(a, tol)?;
    let n = a.nrows();
    if n > COPOSITIVE_MAX_DIM {
        return Err(LseError::SizeLimit(n, COPOSITIVE_MAX_DIM));
    }
    if n == 0 {
        return Ok(ConeVerdict::new(ConeStatus::Inside, None, CertificateKind::ExactSmallN));
    }
    let thr = threshold(a, tol);
    if let Some(i) = (0..n).find(|&i| a[(i, i)] < -thr) {
        return Ok(ConeVerdict::with_vector(ConeStatus::Outside, &unit(n, i), CertificateKind::SimplexPoint));
    }
    if n <= 2 {
        let (x, q) = simplex_min_small(a);
        return Ok(if q >= -thr {
            ConeVerdict::new(ConeStatus::Inside, None, CertificateKind::ExactSmallN)
        } else {
            ConeVerdict::with_vector(ConeStatus::Outside, &x, CertificateKind::SimplexPoint)
        });
    }
    if a.iter().all(|&v| v >= -thr) {
        return Ok(ConeVerdict::new(ConeStatus::Inside, None, CertificateKind::SufficientRule));
    }
    if is_psd(a, tol)?.is_inside() {
        return Ok(ConeVerdict::new(ConeStatus::Inside, None, CertificateKind::Eigen));
    }
    let (x, q) = simplex_search(a);
    Ok(if q >= -thr {
        ConeVerdict::with_vector(ConeStatus::Inside, &x, CertificateKind::SimplexPoint)
    } else {
        ConeVerdict::with_vector(ConeStatus::Outside, &x, CertificateKind::SimplexPoint)
    })
}

/// Exact simplex minimum for `n <= 2`.
fn simplex_min_small(a: &DMatrix<f64>) -> (DVector<f64>, f64) {
    if a.nrows() == 1 {
        return (unit(1, 0), a[(0, 0)]);
    }
    let (a11, a12, a22) = (a[(0, 0)], a[(0, 1)], a[(1, 1)]);
    let mut best = (unit(2, 0), a11);
    if a22 < best.1 {
        best = (unit(2, 1), a22);
    }
    let denom = a11 - 2.0 * a12 + a22;
    if denom > 0.0 {
        let t = (a22 - a12) / denom;
        if t > 0.0 && t < 1.0 {
            let x = DVector::from_vec(vec![t, 1.0 - t]);
            let q = quad_form(a, &x);
            if q < best.1 {
                best = (x, q);
            }
        }
    }
    best
}

/// Grid seeding at resolution `1/24` followed by projected gradient descent
/// from the lowest seeds. Returns the best simplex point found.
fn simplex_search(a: &DMatrix<f64>) -> (DVector<f64>, f64) {
    let n = a.nrows();
    let mut seeds: Vec<(f64, Vec<u16>)> = Vec::new();
    let mut counts = vec![0u16; n];
    let mut ax = vec![0.0; n];
    grid_recurse(a, 0, GRID_RESOLUTION, 0.0, &mut ax, &mut counts, &mut seeds);
    seeds.sort_by(|x, y| x.0.total_cmp(&y.0));
    seeds.truncate(DESCENT_SEEDS);

    // Step 1/L with L = 2 * spectral radius, bounded by the Frobenius norm.
    let lip = 2.0 * a.norm().max(1e-300);
    let mut best: Option<(DVector<f64>, f64)> = None;
    for (q0, c) in seeds {
        let x0 = DVector::from_iterator(n, c.iter().map(|&k| k as f64 / GRID_RESOLUTION as f64));
        let (x, q) = projected_descent(a, x0, lip);
        let (x, q) = if q <= q0 { (x, q) } else {
            let x0 = DVector::from_iterator(n, c.iter().map(|&k| k as f64 / GRID_RESOLUTION as f64));
            (x0, q0)
        };
        if best.as_ref().is_none_or(|b| q < b.1) {
            best = Some((x, q));
        }
    }
    best.expect("grid has points")
}

fn grid_recurse(
    a: &DMatrix<f64>,
    i: usize,
    remaining: usize,
    q: f64,
    ax: &mut [f64],
    counts: &mut [u16],
    out: &mut Vec<(f64, Vec<u16>)>,
) {
    let n = a.nrows();
    let h = 1.0 / GRID_RESOLUTION as f64;
    let range: Box<dyn Iterator<Item = usize>> =
        if i == n - 1 { Box::new(std::iter::once(remaining)) } else { Box::new(0..=remaining) };
    for k in range {
        let c = k as f64 * h;
        let q_new = q + 2.0 * c * ax[i] + c * c * a[(i, i)];
        counts[i] = k as u16;
        if i == n - 1 {
            push_seed(out, q_new, counts);
        } else {
            if c != 0.0 {
                for j in 0..n {
                    ax[j] += c * a[(j, i)];
                }
            }
            grid_recurse(a, i + 1, remaining - k, q_new, ax, counts, out);
            if c != 0.0 {
                for j in 0..n {
                    ax[j] -= c * a[(j, i)];
                }
            }
        }
    }
    counts[i] = 0;
}

fn push_seed(out: &mut Vec<(f64, Vec<u16>)>, q: f64, counts: &[u16]) {
    // Keep a bounded pool of the lowest values.
    const POOL: usize = 4 * DESCENT_SEEDS;
    if out.len() < POOL {
        out.push((q, counts.to_vec()));
        return;
    }
    let (worst, wq) = out
        .iter()
        .enumerate()
        .map(|(i, s)| (i, s.0))
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .expect("nonempty");
    if q < wq {
        out[worst] = (q, counts.to_vec());
    }
}

fn projected_descent(a: &DMatrix<f64>, mut x: DVector<f64>, lip: f64) -> (DVector<f64>, f64) {
    let mut q = quad_form(a, &x);
    for _ in 0..DESCENT_ITERS {
        let grad = 2.0 * (a * &x);
        let next = project_simplex(&(&x - grad / lip));
        let qn = quad_form(a, &next);
        let moved = (&next - &x).amax();
        x = next;
        q = qn;
        if moved < 1e-14 {
            break;
        }
    }
    (x, q)
}

/// Euclidean projection onto the standard simplex.
pub fn project_simplex(v: &DVector<f64>) -> DVector<f64> {
    let mut u: Vec<f64> = v.iter().copied().collect();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.map(|x| (x - theta).max(0.0))
}

/// Complete positivity via a decision ladder: necessary conditions, the
/// exact small-dimension rule, diagonal dominance, then a multi-start
/// nonnegative factorization search.
pub fn is_completely_positive(a: &DMatrix<f64>, tol: f64) -> Result<ConeVerdict> {
    validate(a, tol)?;
    let n = a.nrows();
    let thr = threshold(a, tol);
    if a.iter().any(|&v| v < -thr) {
        return Ok(ConeVerdict::new(ConeStatus::Outside, None, CertificateKind::SufficientRule));
    }
    let psd = is_psd(a, tol)?;
    if psd.is_outside() {
        return Ok(ConeVerdict::new(ConeStatus::Outside, psd.witness, CertificateKind::Eigen));
    }
    if n <= 4 {
        return Ok(ConeVerdict::new(ConeStatus::Inside, None, CertificateKind::ExactSmallN));
    }
    let dominant = (0..n).all(|i| {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| a[(i, j)]).sum();
        a[(i, i)] >= off - thr
    });
    if dominant {
        return Ok(ConeVerdict::new(ConeStatus::Inside, None, CertificateKind::SufficientRule));
    }
    match nonnegative_factorization(a, tol) {
        Some(b) => {
            let rows = b.row_iter().map(|r| r.iter().copied().collect()).collect();
            Ok(ConeVerdict::new(ConeStatus::Inside, Some(Witness::Factor(rows)), CertificateKind::Factorization))
        }
        None => Ok(ConeVerdict::new(ConeStatus::Unknown, None, CertificateKind::Factorization)),
    }
}

/// Searches for `B >= 0` (`k x n`, `k = n(n+1)/2`) with `||B'B - A||_max <= tol * ||A||_max`.
fn nonnegative_factorization(a: &DMatrix<f64>, tol: f64) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    let k = n * (n + 1) / 2;
    let scale = max_abs(a).max(f64::MIN_POSITIVE);
    let target = tol.max(f64::EPSILON) * scale;
    (0..CP_RESTARTS).into_par_iter().find_map_first(|restart| {
        let mut rng = stream(CP_SEED, restart);
        let mut b = DMatrix::from_fn(k, n, |_, _| rng.random::<f64>());
        // Match the diagonal on average: column norms sqrt(a_jj).
        for j in 0..n {
            let norm = b.column(j).norm().max(1e-300);
            let want = a[(j, j)].max(0.0).sqrt();
            b.column_mut(j).scale_mut(want / norm);
        }
        factor_descent(a, b, target, scale)
    })
}

fn factor_descent(a: &DMatrix<f64>, mut b: DMatrix<f64>, target: f64, scale: f64) -> Option<DMatrix<f64>> {
    const ITERS: usize = 20_000;
    let loss = |b: &DMatrix<f64>| {
        let r = b.transpose() * b - a;
        (r.norm_squared(), max_abs(&r))
    };
    let (mut f, mut worst) = loss(&b);
    let mut step = 0.25 / scale;
    for it in 0..ITERS {
        if worst <= target {
            return Some(b);
        }
        if worst <= 1e-3 * scale && it % 250 == 0 {
            if let Some(done) = gauss_newton_polish(a, &b, target) {
                return Some(done);
            }
        }
        if it == 2000 && worst > 1e-2 * scale {
            return None;
        }
        let r = b.transpose() * &b - a;
        let grad = 4.0 * &b * r;
        loop {
            let cand = (&b - &grad * step).map(|v| v.max(0.0));
            let (fc, wc) = loss(&cand);
            if fc < f {
                b = cand;
                f = fc;
                worst = wc;
                step *= 1.2;
                break;
            }
            step *= 0.5;
            if step < 1e-30 {
                return (worst <= target).then_some(b);
            }
        }
    }
    (worst <= target).then_some(b)
}

/// Minimum-norm Gauss-Newton steps on the positive entries of `b`, which
/// converge quadratically once the support of the factor has settled.
fn gauss_newton_polish(a: &DMatrix<f64>, b: &DMatrix<f64>, target: f64) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    let mut b = b.clone();
    let worst_of = |b: &DMatrix<f64>| max_abs(&(b.transpose() * b - a));
    let mut worst = worst_of(&b);
    for _ in 0..30 {
        if worst <= target {
            return Some(b);
        }
        let floor = 1e-12 * b.max();
        let free: Vec<(usize, usize)> = (0..b.nrows())
            .flat_map(|l| (0..n).map(move |m| (l, m)))
            .filter(|&(l, m)| b[(l, m)] > floor)
            .collect();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
        let r = b.transpose() * &b - a;
        let jac = DMatrix::from_fn(pairs.len(), free.len(), |row, col| {
            let (i, j) = pairs[row];
            let (l, m) = free[col];
            let mut d = 0.0;
            if m == i {
                d += b[(l, j)];
            }
            if m == j {
                d += b[(l, i)];
            }
            d
        });
        let rhs = DVector::from_iterator(pairs.len(), pairs.iter().map(|&(i, j)| -r[(i, j)]));
        let delta = jac.svd(true, true).solve(&rhs, 1e-12).ok()?;
        let mut t = 1.0;
        loop {
            let mut cand = b.clone();
            for (&(l, m), d) in free.iter().zip(delta.iter()) {
                cand[(l, m)] = (cand[(l, m)] + t * d).max(0.0);
            }
            let w = worst_of(&cand);
            if w < worst {
                b = cand;
                worst = w;
                break;
            }
            t *= 0.5;
            if t < 1e-6 {
                return None;
            }
        }
    }
    (worst <= target).then_some(b)
}

/// Frobenius inner product `trace(A'B)`.
pub fn dual_pairing(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(LseError::DimensionMismatch { expected: a.nrows(), found: b.nrows() });
    }
    Ok(a.component_mul(b).sum())
}

/// The 5x5 Horn matrix: copositive but neither PSD nor a sum of a PSD and a
/// nonnegative matrix.
pub fn horn_matrix() -> DMatrix<f64> {
    DMatrix::from_row_slice(
        5,
        5,
        &[
            1.0, -1.0, 1.0, 1.0, -1.0, //
            -1.0, 1.0, -1.0, 1.0, 1.0, //
            1.0, -1.0, 1.0, -1.0, 1.0, //
            1.0, 1.0, -1.0, 1.0, -1.0, //
            -1.0, 1.0, 1.0, -1.0, 1.0,
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(n: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(n, n, v)
    }

    #[test]
    fn psd_examples() {
        assert!(is_psd(&DMatrix::zeros(3, 3), DEFAULT_TOL).unwrap().is_inside());
        let v = is_psd(&m(2, &[1.0, 0.0, 0.0, -0.1]), DEFAULT_TOL).unwrap();
        assert!(v.is_outside());
        let w = v.witness_vector().unwrap();
        assert!(w[0].abs() < 1e-12 && (w[1].abs() - 1.0).abs() < 1e-12);
        assert!(is_psd(&m(2, &[2.0, 1.0, 1.0, 2.0]), DEFAULT_TOL).unwrap().is_inside());
        assert!(matches!(is_psd(&m(2, &[1.0, 0.0, 1.0, 1.0]), DEFAULT_TOL), Err(LseError::Usage(_))));
    }

    #[test]
    fn copositive_examples() {
        assert!(is_copositive(&m(3, &[0.0, 1.0, 2.0, 1.0, 0.0, 3.0, 2.0, 3.0, 1.0]), DEFAULT_TOL)
            .unwrap()
            .is_inside());
        let v = is_copositive(&m(2, &[1.0, 0.0, 0.0, -1.0]), DEFAULT_TOL).unwrap();
        assert!(v.is_outside());
        assert_eq!(v.witness_vector().unwrap(), DVector::from_vec(vec![0.0, 1.0]));
        let h = horn_matrix();
        assert!(is_copositive(&h, DEFAULT_TOL).unwrap().is_inside());
        assert!(is_psd(&h, DEFAULT_TOL).unwrap().is_outside());
        assert!(matches!(
            is_copositive(&DMatrix::identity(11, 11), DEFAULT_TOL),
            Err(LseError::SizeLimit(11, 10))
        ));
    }

    #[test]
    fn copositive_outside_witness_is_valid() {
        let a = m(3, &[1.0, -2.0, 0.5, -2.0, 1.0, 0.3, 0.5, 0.3, 1.0]);
        let v = is_copositive(&a, DEFAULT_TOL).unwrap();
        assert!(v.is_outside());
        let x = v.witness_vector().unwrap();
        assert!(x.iter().all(|&t| t >= 0.0));
        assert!((x.sum() - 1.0).abs() < 1e-12);
        assert!(quad_form(&a, &x) < -DEFAULT_TOL * max_abs(&a));
    }

    #[test]
    fn completely_positive_examples() {
        let b = m(2, &[1.0, 1.0, 0.0, 1.0]);
        let a = b.transpose() * &b;
        assert!(is_completely_positive(&a, DEFAULT_TOL).unwrap().is_inside());
        assert!(is_completely_positive(&m(2, &[1.0, 0.0, 0.0, -1.0]), DEFAULT_TOL).unwrap().is_outside());
        let v = is_completely_positive(&m(2, &[2.0, 1.0, 1.0, 2.0]), DEFAULT_TOL).unwrap();
        assert_eq!((v.status, v.certificate_kind), (ConeStatus::Inside, CertificateKind::ExactSmallN));
    }

    #[test]
    fn factorization_certificate_for_five_by_five() {
        // A nonnegative factor whose product is not diagonally dominant.
        let b = DMatrix::from_row_slice(
            3,
            5,
            &[1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0],
        );
        let a = b.transpose() * &b;
        let v = is_completely_positive(&a, DEFAULT_TOL).unwrap();
        assert_eq!(v.status, ConeStatus::Inside);
        assert_eq!(v.certificate_kind, CertificateKind::Factorization);
        let f = v.witness_factor().unwrap();
        assert!(f.iter().all(|&x| x >= 0.0));
        assert!(max_abs(&(f.transpose() * &f - &a)) <= DEFAULT_TOL * max_abs(&a));
    }

    #[test]
    fn horn_is_not_completely_positive() {
        assert!(is_completely_positive(&horn_matrix(), DEFAULT_TOL).unwrap().is_outside());
    }

    #[test]
    fn pairing_examples() {
        let i2 = DMatrix::<f64>::identity(2, 2);
        assert_eq!(dual_pairing(&i2, &i2).unwrap(), 2.0);
        assert_eq!(dual_pairing(&i2, &DMatrix::zeros(2, 2)).unwrap(), 0.0);
        assert!(dual_pairing(&i2, &DMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn simplex_projection() {
        let p = project_simplex(&DVector::from_vec(vec![0.5, 0.5, 0.5]));
        assert!((p.sum() - 1.0).abs() < 1e-15);
        assert!(p.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));
        let p = project_simplex(&DVector::from_vec(vec![3.0, -1.0]));
        assert_eq!(p, DVector::from_vec(vec![1.0, 0.0]));
    }
}
