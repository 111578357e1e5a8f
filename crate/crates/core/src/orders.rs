//! The theorem engine: sufficient and necessary conditions for integral
//! stochastic orders between two LSE laws sharing `(g, alpha, beta, H)`.
//!
//! Each check returns an [`OrderReport`] whose verdict follows three rules:
//! a sufficient condition that holds gives `Ordered`, a violated necessary
//! condition gives `NotOrdered`, anything else is `Inconclusive`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cones::{self, ConeStatus, DEFAULT_TOL};
use crate::distributions::LseDistribution;
use crate::error::{LseError, Result};
use crate::generators::{DensityGenerator, LimitRatioResult};
use crate::linalg::{mat_approx_eq, max_abs, max_abs_vec, quad_form, EQ_TOL};

/// The thirteen orders handled by the engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderKind {
    St,
    Plst,
    Cx,
    Lcx,
    Ilcx,
    Icx,
    Iplcx,
    Dcx,
    Ccx,
    Sm,
    Uo,
    Cp,
    Cop,
}

impl OrderKind {
    pub const ALL: [OrderKind; 13] = [
        Self::St,
        Self::Plst,
        Self::Cx,
        Self::Lcx,
        Self::Ilcx,
        Self::Icx,
        Self::Iplcx,
        Self::Dcx,
        Self::Ccx,
        Self::Sm,
        Self::Uo,
        Self::Cp,
        Self::Cop,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            Self::St => "st",
            Self::Plst => "plst",
            Self::Cx => "cx",
            Self::Lcx => "lcx",
            Self::Ilcx => "ilcx",
            Self::Icx => "icx",
            Self::Iplcx => "iplcx",
            Self::Dcx => "dcx",
            Self::Ccx => "ccx",
            Self::Sm => "sm",
            Self::Uo => "uo",
            Self::Cp => "cp",
            Self::Cop => "cop",
        }
    }

    /// The order a derived order inherits its sufficient condition from.
    pub fn parent(&self) -> Option<OrderKind> {
        match self {
            Self::Plst => Some(Self::St),
            Self::Lcx | Self::Ilcx => Some(Self::Cx),
            Self::Iplcx => Some(Self::Icx),
            _ => None,
        }
    }
}

impl fmt::Display for OrderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for OrderKind {
    type Err = LseError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|o| o.tag().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| LseError::Usage(format!("unknown order '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sufficient {
    Holds,
    Fails,
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Necessary {
    Holds,
    NotApplicable,
    AssumptionUnmet,
    Violated,
}

impl Necessary {
    /// Combines two necessary-condition outcomes; the most decisive wins.
    pub fn merge(self, other: Necessary) -> Necessary {
        self.max(other)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Ordered,
    NotOrdered,
    Inconclusive,
}

/// One evaluated condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clause {
    pub tag: String,
    pub text: String,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderReport {
    pub order: OrderKind,
    pub sufficient: Sufficient,
    pub necessary: Necessary,
    pub verdict: Verdict,
    pub clauses: Vec<Clause>,
    pub assumption_checks: Vec<LimitRatioResult>,
}

impl OrderReport {
    /// Builds a report and derives its verdict.
    ///
    /// # Panics
    /// If a sufficient condition holds while a necessary one is violated,
    /// which would mean the engine is unsound.
    pub fn new(
        order: OrderKind,
        sufficient: Sufficient,
        necessary: Necessary,
        clauses: Vec<Clause>,
        assumption_checks: Vec<LimitRatioResult>,
    ) -> Self {
        assert!(
            !(sufficient == Sufficient::Holds && necessary == Necessary::Violated),
            "unsound {order} report: sufficient condition holds but a necessary one is violated ({clauses:?})"
        );
        let verdict = if sufficient == Sufficient::Holds {
            Verdict::Ordered
        } else if necessary == Necessary::Violated {
            Verdict::NotOrdered
        } else {
            Verdict::Inconclusive
        };
        Self { order, sufficient, necessary, verdict, clauses, assumption_checks }
    }

    pub fn clause(&self, tag: &str) -> Option<&Clause> {
        self.clauses.iter().find(|c| c.tag == tag)
    }
}

#[derive(Default)]
struct Builder {
    clauses: Vec<Clause>,
    checks: Vec<LimitRatioResult>,
}

impl Builder {
    fn clause(&mut self, tag: impl Into<String>, text: impl Into<String>, holds: bool) -> bool {
        self.clauses.push(Clause { tag: tag.into(), text: text.into(), holds });
        holds
    }

    fn finish(self, order: OrderKind, sufficient: Sufficient, necessary: Necessary) -> OrderReport {
        OrderReport::new(order, sufficient, necessary, self.clauses, self.checks)
    }
}

fn suff(holds: bool) -> Sufficient {
    if holds { Sufficient::Holds } else { Sufficient::Fails }
}

fn require_comparable(d1: &LseDistribution, d2: &LseDistribution) -> Result<()> {
    if d1.dim() != d2.dim() {
        return Err(LseError::DimensionMismatch { expected: d1.dim(), found: d2.dim() });
    }
    if d1.generator() != d2.generator() {
        return Err(LseError::IncomparableFamilies(format!(
            "generators differ: {} vs {}",
            d1.generator().name(),
            d2.generator().name()
        )));
    }
    if d1.map() != d2.map() {
        return Err(LseError::IncomparableFamilies("alpha/beta maps differ".into()));
    }
    if d1.mixing() != d2.mixing() {
        return Err(LseError::IncomparableFamilies("mixing laws differ".into()));
    }
    Ok(())
}

/// Shared quantities for a comparable pair.
struct Pair<'a> {
    d1: &'a LseDistribution,
    d2: &'a LseDistribution,
    dmu: DVector<f64>,
    ddelta: DVector<f64>,
    dsigma: DMatrix<f64>,
    /// Absolute tolerance for location-type quantities.
    loc_tol: f64,
    /// Absolute tolerance for scale-matrix entries.
    sig_tol: f64,
    e_beta: f64,
    beta_lo: f64,
    beta_hi: f64,
    /// `1 + max |beta|` over the finite endpoints and `E beta`; scales the
    /// location tolerance so the endpoint and mean tests agree.
    beta_scale: f64,
}

impl<'a> Pair<'a> {
    fn new(d1: &'a LseDistribution, d2: &'a LseDistribution) -> Result<Self> {
        require_comparable(d1, d2)?;
        let (delta1, delta2) = (d1.effective_delta(), d2.effective_delta());
        let loc_scale = [max_abs_vec(d1.mu()), max_abs_vec(d2.mu()), max_abs_vec(&delta1), max_abs_vec(&delta2)]
            .into_iter()
            .fold(0.0, f64::max);
        let sig_scale = max_abs(d1.sigma()).max(max_abs(d2.sigma()));
        let (beta_lo, beta_hi) = d1.mixing().beta_range(&d1.map())?;
        let (e_beta, _) = d1.beta_moments();
        let beta_scale = 1.0 + [beta_lo, beta_hi, e_beta].into_iter().filter(|v| v.is_finite()).fold(0.0_f64, |m, v| m.max(v.abs()));
        Ok(Self {
            d1,
            d2,
            dmu: d2.mu() - d1.mu(),
            ddelta: &delta2 - &delta1,
            dsigma: d2.sigma() - d1.sigma(),
            loc_tol: EQ_TOL * loc_scale,
            sig_tol: EQ_TOL * sig_scale,
            e_beta,
            beta_lo,
            beta_hi,
            beta_scale,
        })
    }

    fn n(&self) -> usize {
        self.d1.dim()
    }

    fn generator(&self) -> DensityGenerator {
        self.d1.generator()
    }

    fn mu_eq(&self) -> bool {
        max_abs_vec(&self.dmu) <= self.loc_tol
    }

    fn delta_eq(&self) -> bool {
        max_abs_vec(&self.ddelta) <= self.loc_tol
    }

    fn sigma_eq(&self) -> bool {
        mat_approx_eq(self.d1.sigma(), self.d2.sigma())
    }

    fn diag_eq(&self) -> bool {
        (0..self.n()).all(|i| self.dsigma[(i, i)].abs() <= self.sig_tol)
    }

    fn diag_le(&self) -> bool {
        (0..self.n()).all(|i| self.dsigma[(i, i)] >= -self.sig_tol)
    }

    fn off_le(&self) -> bool {
        self.off_pairs().all(|(i, j)| self.dsigma[(i, j)] >= -self.sig_tol)
    }

    fn off_eq(&self) -> bool {
        self.off_pairs().all(|(i, j)| self.dsigma[(i, j)].abs() <= self.sig_tol)
    }

    fn entrywise_le(&self) -> bool {
        self.dsigma.iter().all(|&v| v >= -self.sig_tol)
    }

    fn off_pairs(&self) -> impl Iterator<Item = (usize, usize)> {
        let n = self.n();
        (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
    }

    /// Sign of `dm + E(beta) dd` with tolerance; the `dd` term dominates
    /// when `E(beta)` diverges.
    fn mean_sign(&self, dm: f64, dd: f64, tol: f64) -> i8 {
        let sign = |v: f64, t: f64| if v > t { 1 } else if v < -t { -1 } else { 0 };
        if self.e_beta.is_finite() {
            let t = if dd == 0.0 { tol } else { tol * self.beta_scale };
            sign(dm + self.e_beta * dd, t)
        } else {
            match sign(dd, tol) {
                0 => sign(dm, tol),
                s => s * self.e_beta.signum() as i8,
            }
        }
    }

    fn mean_ordered(&self) -> bool {
        (0..self.n()).all(|i| self.mean_sign(self.dmu[i], self.ddelta[i], self.loc_tol) >= 0)
    }

    fn mean_equal(&self) -> bool {
        (0..self.n()).all(|i| self.mean_sign(self.dmu[i], self.ddelta[i], self.loc_tol) == 0)
    }

    /// `mu2 - mu1 + beta (delta2 - delta1) >= 0` for every `beta` in the
    /// range of `beta(Z)`; affine in `beta`, so the endpoints decide.
    fn location_all_z(&self) -> bool {
        (0..self.n()).all(|i| {
            let (dm, dd) = (self.dmu[i], self.ddelta[i]);
            [self.beta_lo, self.beta_hi].into_iter().all(|b| {
                if b.is_finite() {
                    let t = if dd == 0.0 { self.loc_tol } else { self.loc_tol * self.beta_scale };
                    dm + b * dd >= -t
                } else if dd.abs() <= self.loc_tol {
                    dm >= -self.loc_tol
                } else {
                    dd * b.signum() > 0.0
                }
            })
        })
    }

    fn projected_scales(&self, a: &DVector<f64>) -> (f64, f64) {
        (quad_form(self.d1.sigma(), a).max(0.0).sqrt(), quad_form(self.d2.sigma(), a).max(0.0).sqrt())
    }

    fn projected_shifts(&self, a: &DVector<f64>) -> (f64, f64) {
        let shift = |d: &LseDistribution| {
            let m = a.dot(&d.location_mean());
            if m.is_finite() { m } else { a.dot(d.mu()) }
        };
        (shift(self.d1), shift(self.d2))
    }

    /// Tail-ratio check on the projection `a' Y`; `which` is 1 or 2.
    fn assumption(&self, b: &mut Builder, a: &DVector<f64>, which: u8) -> bool {
        let (s1, s2) = self.projected_scales(a);
        let (m1, m2) = self.projected_shifts(a);
        match self.generator().limit_ratio(s1, s2, m1, m2) {
            Ok(r) => {
                b.checks.push(r);
                if which == 1 { r.satisfies_assumption1 } else { r.satisfies_assumption2 }
            }
            Err(_) => false,
        }
    }

    fn psd_diff(&self) -> Result<cones::ConeVerdict> {
        cones::is_psd(&sym(&self.dsigma), DEFAULT_TOL)
    }
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    0.5 * (m + m.transpose())
}

fn unit(n: usize, i: usize) -> DVector<f64> {
    let mut e = DVector::zeros(n);
    e[i] = 1.0;
    e
}

fn check_sigma_equal_necessary(p: &Pair, b: &mut Builder, prefix: &str) -> Necessary {
    if b.clause(format!("{prefix}.necessary.scale_equal"), "Sigma1 = Sigma2", p.sigma_eq()) {
        return Necessary::Holds;
    }
    // Find a projection whose scales differ and test Assumption 1 there.
    let n = p.n();
    let dir = (0..n)
        .find(|&i| p.dsigma[(i, i)].abs() > p.sig_tol)
        .map(|i| unit(n, i))
        .or_else(|| {
            p.off_pairs()
                .find(|&(i, j)| p.dsigma[(i, j)].abs() > p.sig_tol)
                .map(|(i, j)| unit(n, i) + unit(n, j))
        })
        .expect("unequal matrices differ in some entry");
    let assumed = p.assumption(b, &dir, 1);
    if b.clause(
        format!("{prefix}.necessary.assumption1"),
        "generator of the projection with unequal scales satisfies Assumption 1",
        assumed,
    ) {
        Necessary::Violated
    } else {
        Necessary::AssumptionUnmet
    }
}

/// Usual stochastic order.
pub fn check_st(d1: &LseDistribution, d2: &LseDistribution) -> Result<OrderReport> {
    let p = Pair::new(d1, d2)?;
    Ok(st_report(&p, OrderKind::St))
}

fn st_report(p: &Pair, order: OrderKind) -> OrderReport {
    let mut b = Builder::default();
    let loc = b.clause("st.sufficient.location", "mu2 + beta(z) delta2 >= mu1 + beta(z) delta1 for all z", p.location_all_z());
    let seq = b.clause("st.sufficient.scale_equal", "Sigma1 = Sigma2", p.sigma_eq());
    let mut nec = Necessary::Holds;
    if !b.clause("st.necessary.mean", "mu1 + E beta delta1 <= mu2 + E beta delta2", p.mean_ordered()) {
        nec = Necessary::Violated;
    }
    nec = nec.merge(check_sigma_equal_necessary(p, &mut b, "st"));
    b.finish(order, suff(loc && seq), nec)
}

/// The cone condition on `Sigma2 - Sigma1` in the cx-type theorems.
#[derive(Clone, Copy, PartialEq, Eq)]
enum ConeOutcome {
    Holds,
    Fails,
    Unknown,
}

fn cone_outcome(status: ConeStatus) -> ConeOutcome {
    match status {
        ConeStatus::Inside => ConeOutcome::Holds,
        ConeStatus::Outside => ConeOutcome::Fails,
        ConeStatus::Unknown => ConeOutcome::Unknown,
    }
}

/// Common structure of the cx, dcx, ccx, cp and cop theorems: sufficiency
/// from `mu1 = mu2`, `delta1 = delta2` and a matrix condition; equivalence
/// under either equality premise; equal means in any case.
fn equality_premise_report(p: &Pair, order: OrderKind, cone_text: &str, cone: ConeOutcome) -> OrderReport {
    let mut b = Builder::default();
    let tag = order.tag();
    let mu_eq = b.clause(format!("{tag}.mu_equal"), "mu1 = mu2", p.mu_eq());
    let delta_eq = b.clause(format!("{tag}.delta_equal"), "delta1 = delta2", p.delta_eq());
    if cone != ConeOutcome::Unknown {
        b.clause(format!("{tag}.matrix"), cone_text, cone == ConeOutcome::Holds);
    } else {
        b.clause(format!("{tag}.matrix_undecided"), format!("{cone_text}: undecided"), false);
    }
    let sufficient = suff(mu_eq && delta_eq && cone == ConeOutcome::Holds);
    let mut nec = Necessary::Holds;
    if !b.clause(format!("{tag}.necessary.mean_equal"), "E Y1 = E Y2", p.mean_equal()) {
        nec = Necessary::Violated;
    }
    if mu_eq || delta_eq {
        if !(mu_eq && delta_eq) || cone == ConeOutcome::Fails {
            nec = Necessary::Violated;
        } else if cone == ConeOutcome::Unknown {
            nec = nec.merge(Necessary::NotApplicable);
        }
    } else {
        nec = nec.merge(Necessary::NotApplicable);
    }
    b.finish(order, sufficient, nec)
}

/// Convex order.
pub fn check_cx(d1: &LseDistribution, d2: &LseDistribution) -> Result<OrderReport> {
    let p = Pair::new(d1, d2)?;
    cx_report(&p, OrderKind::Cx)
}

fn cx_report(p: &Pair, order: OrderKind) -> Result<OrderReport> {
    let cone = cone_outcome(p.psd_diff()?.status);
    Ok(equality_premise_report(p, order, "Sigma2 - Sigma1 is positive semidefinite", cone))
}

/// Directionally convex order.
pub fn check_dcx(d1: &LseDistribution, d2: &LseDistribution) -> Result<OrderReport> {
    let p = Pair::new(d1, d2)?;
    let cone = if p.entrywise_le() { ConeOutcome::Holds } else { ConeOutcome::Fails };
    Ok(equality_premise_report(&p, OrderKind::Dcx, "Sigma2 >= Sigma1 entrywise", cone))
}

/// Componentwise convex order.
pub fn check_ccx(d1: &LseDistribution, d2: &LseDistribution) -> Result<OrderReport> {
    let p = Pair::new(d1, d2)?;
    let cone = if p.diag_le() && p.off_eq() { ConeOutcome::Holds } else { ConeOutcome::Fails };
    Ok(equality_premise_report(
        &p,
        OrderKind::Ccx,
        "sigma1_ii <= sigma2_ii and sigma1_ij = sigma2_ij",
        cone,
    ))
}

/// Copositive order (test functions with completely positive Hessians).
pub fn check_cp(d1: &LseDistribution, d2: &LseDistribution) -> Result<OrderReport> {
    let p = Pair::new(d1, d2)?;
    let cone = match cones::is_copositive(&sym(&p.dsigma), DEFAULT_TOL) {
        Ok(v) => cone_outcome(v.status),
        Err(LseError::SizeLimit(..)) => ConeOutcome::Unknown,
        Err(e) => return Err(e),
    };
    Ok(equality_premise_report(&p, OrderKind::Cp, "Sigma2 - Sigma1 is copositive", cone))
}

/// Completely positive order (test functions with copositive Hessians).
pub fn check_cop(d1: &LseDistribution, d2: &LseDistribution) -> Result<OrderReport> {
    let p = Pair::new(d1, d2)?;
    let cone = cone_outcome(cones::is_completely_positive(&sym(&p.dsigma), DEFAULT_TOL)?.status);
    Ok(equality_premise_report(&p, OrderKind::Cop, "Sigma2 - Sigma1 is completely positive", cone))
}

/// Increasing convex order.
pub fn check_icx(d1: &LseDistribution, d2: &LseDistribution) -> Result<OrderReport> {
    let p = Pair::new(d1, d2)?;
    icx_report(&p, OrderKind::Icx)
}

fn icx_report(p: &Pair, order: OrderKind) -> Result<OrderReport> {
    let mut b = Builder::default();
    let loc = b.clause("icx.sufficient.location", "mu2 + beta(z) delta2 >= mu1 + beta(z) delta1 for all z", p.location_all_z());
    let psd = b.clause("icx.sufficient.psd", "Sigma2 - Sigma1 is positive semidefinite", p.psd_diff()?.is_inside());
    let mut nec = Necessary::Holds;
    if !b.clause("icx.necessary.mean", "mu1 + E beta delta1 <= mu2 + E beta delta2", p.mean_ordered()) {
        nec = Necessary::Violated;
    }
    match cones::is_copositive(&sym(&p.dsigma), DEFAULT_TOL) {
        Ok(v) if v.is_outside() => {
            b.clause("icx.necessary.copositive", "Sigma2 - Sigma1 is copositive", false);
            let x = v.witness_vector().expect("outside verdicts carry a witness");
            let assumed = p.assumption(&mut b, &x, 2);
            let met = b.clause(
                "icx.necessary.assumption2",
                "generator of the witness projection satisfies Assumption 2",
                assumed,
            );
            nec = nec.merge(if met { Necessary::Violated } else { Necessary::AssumptionUnmet });
        }
        Ok(v) => {
            b.clause("icx.necessary.copositive", "Sigma2 - Sigma1 is copositive", v.is_inside());
            if !v.is_inside() {
                nec = nec.merge(Necessary::NotApplicable);
            }
        }
        Err(LseError::SizeLimit(..)) => {
            b.clause("icx.necessary.copositive_undecided", "copositivity not decided above the size limit", false);
            nec = nec.merge(Necessary::NotApplicable);
        }
        Err(e) => return Err(e),
    }
    Ok(b.finish(order, suff(loc && psd), nec))
}

/// Supermodular order.
pub fn check_sm(d1: &LseDistribution, d2: &LseDistribution) -> Result<OrderReport> {
    let p = Pair::new(d1, d2)?;
    let mut b = Builder::default();
    let mu_eq = b.clause("sm.mu_equal", "mu1 = mu2", p.mu_eq());
    let delta_eq = b.clause("sm.delta_equal", "delta1 = delta2", p.delta_eq());
    let diag = b.clause("sm.diag_equal", "sigma1_ii = sigma2_ii", p.diag_eq());
    let off = b.clause("sm.offdiag_le", "sigma1_ij <= sigma2_ij", p.off_le());
    let corr1 = crate::linalg::correlation(d1.sigma());
    let corr2 = crate::linalg::correlation(d2.sigma());
    let rho_le = p.off_pairs().all(|(i, j)| corr1[(i, j)] <= corr2[(i, j)] + EQ_TOL);
    b.clause("sm.correlation_le", "rho1_ij <= rho2_ij", rho_le);
    let all = mu_eq && delta_eq && diag && off;
    let nec = if all { Necessary::Holds } else { Necessary::Violated };
    Ok(b.finish(OrderKind::Sm, suff(all), nec))
}

/// Upper orthant order.
pub fn check_uo(d1: &LseDistribution, d2: &LseDistribution) -> Result<OrderReport> {
    let p = Pair::new(d1, d2)?;
    let mut b = Builder::default();
    let loc = b.clause("uo.sufficient.location", "mu2 + beta(z) delta2 >= mu1 + beta(z) delta1 for all z", p.location_all_z());
    let diag = b.clause("uo.diag_equal", "sigma1_ii = sigma2_ii", p.diag_eq());
    let off = b.clause("uo.offdiag_le", "sigma1_ij <= sigma2_ij", p.off_le());
    let mut nec = Necessary::Holds;
    if !b.clause("uo.necessary.mean", "mu1 + E beta delta1 <= mu2 + E beta delta2", p.mean_ordered()) {
        nec = Necessary::Violated;
    }
    if !diag {
        let i = (0..p.n()).find(|&i| p.dsigma[(i, i)].abs() > p.sig_tol).expect("diagonals differ");
        let assumed = p.assumption(&mut b, &unit(p.n(), i), 1);
        let met = b.clause(
            "uo.necessary.assumption1",
            "generator of the component with unequal scales satisfies Assumption 1",
            assumed,
        );
        nec = nec.merge(if met { Necessary::Violated } else { Necessary::AssumptionUnmet });
    }
    let same_marginals = p.mu_eq() && p.delta_eq() && diag;
    if same_marginals && !off {
        b.clause("uo.necessary.offdiag_le", "same marginals force sigma1_ij <= sigma2_ij", false);
        nec = Necessary::Violated;
    }
    Ok(b.finish(OrderKind::Uo, suff(loc && diag && off), nec))
}

const HALTON_DIRECTIONS: usize = 32;
const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut k: u64, base: u32) -> f64 {
    let b = base as f64;
    let mut inv = 1.0 / b;
    let mut out = 0.0;
    while k > 0 {
        out += (k % base as u64) as f64 * inv;
        k /= base as u64;
        inv /= b;
    }
    out
}

/// Deterministic projection directions: `e_i`, `e_i + e_j`, and Halton
/// points in the positive orthant; with `signed`, also `e_i - e_j` and
/// Halton points in `[-1, 1]^n`.
pub fn projection_directions(n: usize, signed: bool) -> Vec<DVector<f64>> {
    let mut dirs: Vec<DVector<f64>> = (0..n).map(|i| unit(n, i)).collect();
    for i in 0..n {
        for j in i + 1..n {
            dirs.push(unit(n, i) + unit(n, j));
            if signed {
                dirs.push(unit(n, i) - unit(n, j));
            }
        }
    }
    if n > 1 {
        for k in 1..=HALTON_DIRECTIONS as u64 {
            let v = DVector::from_fn(n, |i, _| {
                let u = radical_inverse(k, PRIMES[i % PRIMES.len()]);
                if signed { 2.0 * u - 1.0 } else { u }
            });
            if max_abs_vec(&v) > 0.0 {
                dirs.push(v);
            }
        }
    }
    dirs
}

/// Orders defined through univariate projections, inheriting sufficiency
/// from their parent order and adding projection-wise necessary checks.
pub fn check_derived(d1: &LseDistribution, d2: &LseDistribution, order: OrderKind) -> Result<OrderReport> {
    let parent = order
        .parent()
        .ok_or_else(|| LseError::Usage(format!("{order} is not a derived order")))?;
    let p = Pair::new(d1, d2)?;
    let parent_report = match parent {
        OrderKind::St => st_report(&p, order),
        OrderKind::Cx => cx_report(&p, order)?,
        _ => icx_report(&p, order)?,
    };
    let mut b = Builder { clauses: parent_report.clauses, checks: parent_report.assumption_checks };
    let signed = parent == OrderKind::Cx;
    let mut dirs = projection_directions(p.n(), signed);
    // Add the cone witnesses so a violated matrix condition is always seen.
    let diff = sym(&p.dsigma);
    if let Some(w) = cones::is_psd(&diff, DEFAULT_TOL)?.witness_vector() {
        if signed {
            dirs.push(w);
        }
    }
    if !signed {
        if let Ok(v) = cones::is_copositive(&diff, DEFAULT_TOL) {
            if let Some(w) = v.witness_vector().filter(|_| v.is_outside()) {
                dirs.push(w);
            }
        }
    }

    let tag = order.tag();
    let mut nec = parent_report.necessary;
    let mut mean_ok = true;
    let mut var_fail: Option<DVector<f64>> = None;
    for a in &dirs {
        let dm = a.dot(&p.dmu);
        let dd = a.dot(&p.ddelta);
        let scale = a.abs().sum().max(1.0);
        let ms = p.mean_sign(dm, dd, p.loc_tol * scale);
        let dv = quad_form(&diff, a);
        let vtol = 2.0 * p.sig_tol * scale * scale;
        match parent {
            OrderKind::St => {
                mean_ok &= ms >= 0;
                if dv.abs() > vtol && var_fail.is_none() {
                    var_fail = Some(a.clone());
                }
            }
            OrderKind::Cx => {
                mean_ok &= ms == 0;
                let premise = dm.abs() <= p.loc_tol * scale || dd.abs() <= p.loc_tol * scale;
                if premise && dv < -vtol && var_fail.is_none() {
                    var_fail = Some(a.clone());
                }
            }
            _ => {
                mean_ok &= ms >= 0;
                if dv < -vtol && var_fail.is_none() {
                    var_fail = Some(a.clone());
                }
            }
        }
    }
    if !b.clause(format!("{tag}.projections.mean"), "projected means compare as required", mean_ok) {
        nec = Necessary::Violated;
    }
    match var_fail {
        None => {
            b.clause(format!("{tag}.projections.scale"), "projected scales compare as required", true);
        }
        Some(a) => {
            b.clause(format!("{tag}.projections.scale"), "projected scales compare as required", false);
            let outcome = match parent {
                OrderKind::Cx => Necessary::Violated,
                OrderKind::St => {
                    let assumed = p.assumption(&mut b, &a, 1);
                    let met = b.clause(
                        format!("{tag}.projections.assumption1"),
                        "projection generator satisfies Assumption 1",
                        assumed,
                    );
                    if met { Necessary::Violated } else { Necessary::AssumptionUnmet }
                }
                _ => {
                    let assumed = p.assumption(&mut b, &a, 2);
                    let met = b.clause(
                        format!("{tag}.projections.assumption2"),
                        "projection generator satisfies Assumption 2",
                        assumed,
                    );
                    if met { Necessary::Violated } else { Necessary::AssumptionUnmet }
                }
            };
            nec = nec.merge(outcome);
        }
    }
    Ok(b.finish(order, parent_report.sufficient, nec))
}

/// Dispatches to the checker for `order`.
pub fn check(d1: &LseDistribution, d2: &LseDistribution, order: OrderKind) -> Result<OrderReport> {
    match order {
        OrderKind::St => check_st(d1, d2),
        OrderKind::Cx => check_cx(d1, d2),
        OrderKind::Icx => check_icx(d1, d2),
        OrderKind::Dcx => check_dcx(d1, d2),
        OrderKind::Ccx => check_ccx(d1, d2),
        OrderKind::Sm => check_sm(d1, d2),
        OrderKind::Uo => check_uo(d1, d2),
        OrderKind::Cp => check_cp(d1, d2),
        OrderKind::Cop => check_cop(d1, d2),
        OrderKind::Plst | OrderKind::Lcx | OrderKind::Ilcx | OrderKind::Iplcx => check_derived(d1, d2, order),
    }
}

/// Compares the collective risks `S_i = w' Y_i` under `st` or `icx`.
pub fn check_collective_risk(
    d1: &LseDistribution,
    d2: &LseDistribution,
    weights: &DVector<f64>,
    order: OrderKind,
) -> Result<OrderReport> {
    if !matches!(order, OrderKind::St | OrderKind::Icx) {
        return Err(LseError::Usage(format!("collective risk comparison supports st and icx, not {order}")));
    }
    if weights.iter().any(|&w| !(w >= 0.0)) {
        return Err(LseError::Usage("collective risk weights must be nonnegative".into()));
    }
    let parent = check(d1, d2, order)?;
    if parent.sufficient == Sufficient::Holds {
        let mut clauses = parent.clauses;
        clauses.push(Clause {
            tag: format!("{order}.collective.inherited"),
            text: "multivariate sufficient condition carries over to w'Y".into(),
            holds: true,
        });
        return Ok(OrderReport::new(order, Sufficient::Holds, Necessary::Holds, clauses, parent.assumption_checks));
    }
    let s1 = d1.linear_functional(weights)?;
    let s2 = d2.linear_functional(weights)?;
    check(&s1, &s2, order)
}

/// Simplified criteria for scale mixtures (`delta = 0` on both sides).
pub fn check_sme_table(d1: &LseDistribution, d2: &LseDistribution, order: OrderKind) -> Result<OrderReport> {
    if !(d1.is_sme() && d2.is_sme()) {
        return Err(LseError::Usage("the scale-mixture table needs delta = 0 on both sides".into()));
    }
    let p = Pair::new(d1, d2)?;
    let mut b = Builder::default();
    let row = format!("sme.{order}");
    let diff = sym(&p.dsigma);
    let mu_le = (0..p.n()).all(|i| p.dmu[i] >= -p.loc_tol);
    let mu_eq = p.mu_eq();

    let iff = |b: &mut Builder, holds: bool| {
        if holds { (Sufficient::Holds, Necessary::Holds) } else {
            b.clause(format!("{row}.equivalence"), "conditions are necessary and sufficient", true);
            (Sufficient::Fails, Necessary::Violated)
        }
    };

    let (s, n) = match order {
        OrderKind::St | OrderKind::Plst => {
            let le = b.clause(format!("{row}.mu_le"), "mu1 <= mu2", mu_le);
            let eq = b.clause(format!("{row}.sigma_equal"), "Sigma1 = Sigma2", p.sigma_eq());
            if le && eq {
                (Sufficient::Holds, Necessary::Holds)
            } else if !le {
                (Sufficient::Fails, Necessary::Violated)
            } else {
                (Sufficient::Fails, check_sigma_equal_necessary(&p, &mut b, &row))
            }
        }
        OrderKind::Cx | OrderKind::Lcx | OrderKind::Ilcx => {
            let eq = b.clause(format!("{row}.mu_equal"), "mu1 = mu2", mu_eq);
            let psd = b.clause(format!("{row}.psd"), "Sigma2 - Sigma1 is PSD", cones::is_psd(&diff, DEFAULT_TOL)?.is_inside());
            iff(&mut b, eq && psd)
        }
        OrderKind::Icx | OrderKind::Iplcx => {
            let le = b.clause(format!("{row}.mu_le"), "mu1 <= mu2", mu_le);
            let psd = b.clause(format!("{row}.psd"), "Sigma2 - Sigma1 is PSD", cones::is_psd(&diff, DEFAULT_TOL)?.is_inside());
            if le && psd {
                (Sufficient::Holds, Necessary::Holds)
            } else {
                let mut nec = if le { Necessary::Holds } else { Necessary::Violated };
                match cones::is_copositive(&diff, DEFAULT_TOL) {
                    Ok(v) if v.is_outside() => {
                        b.clause(format!("{row}.copositive"), "Sigma2 - Sigma1 is copositive", false);
                        let x = v.witness_vector().expect("witness");
                        let met = p.assumption(&mut b, &x, 2);
                        b.clause(format!("{row}.assumption2"), "Assumption 2 on the witness projection", met);
                        nec = nec.merge(if met { Necessary::Violated } else { Necessary::AssumptionUnmet });
                    }
                    Ok(_) => {
                        b.clause(format!("{row}.copositive"), "Sigma2 - Sigma1 is copositive", true);
                    }
                    Err(LseError::SizeLimit(..)) => nec = nec.merge(Necessary::NotApplicable),
                    Err(e) => return Err(e),
                }
                (Sufficient::Fails, nec)
            }
        }
        OrderKind::Dcx => {
            let eq = b.clause(format!("{row}.mu_equal"), "mu1 = mu2", mu_eq);
            let le = b.clause(format!("{row}.sigma_le"), "sigma1_ij <= sigma2_ij for all i, j", p.entrywise_le());
            iff(&mut b, eq && le)
        }
        OrderKind::Ccx => {
            let eq = b.clause(format!("{row}.mu_equal"), "mu1 = mu2", mu_eq);
            let d = b.clause(format!("{row}.diag_le"), "sigma1_ii <= sigma2_ii", p.diag_le());
            let o = b.clause(format!("{row}.offdiag_equal"), "sigma1_ij = sigma2_ij", p.off_eq());
            iff(&mut b, eq && d && o)
        }
        OrderKind::Sm => {
            let eq = b.clause(format!("{row}.mu_equal"), "mu1 = mu2", mu_eq);
            let d = b.clause(format!("{row}.diag_equal"), "sigma1_ii = sigma2_ii", p.diag_eq());
            let o = b.clause(format!("{row}.offdiag_le"), "sigma1_ij <= sigma2_ij", p.off_le());
            iff(&mut b, eq && d && o)
        }
        OrderKind::Uo => {
            let le = b.clause(format!("{row}.mu_le"), "mu1 <= mu2", mu_le);
            let d = b.clause(format!("{row}.diag_equal"), "sigma1_ii = sigma2_ii", p.diag_eq());
            let o = b.clause(format!("{row}.offdiag_le"), "sigma1_ij <= sigma2_ij", p.off_le());
            if le && d && o {
                (Sufficient::Holds, Necessary::Holds)
            } else {
                let mut nec = if le { Necessary::Holds } else { Necessary::Violated };
                if !d {
                    let i = (0..p.n()).find(|&i| p.dsigma[(i, i)].abs() > p.sig_tol).expect("diagonals differ");
                    let met = p.assumption(&mut b, &unit(p.n(), i), 1);
                    b.clause(format!("{row}.assumption1"), "Assumption 1 on the component", met);
                    nec = nec.merge(if met { Necessary::Violated } else { Necessary::AssumptionUnmet });
                } else if mu_eq && !o {
                    nec = Necessary::Violated;
                }
                (Sufficient::Fails, nec)
            }
        }
        OrderKind::Cp => {
            let eq = b.clause(format!("{row}.mu_equal"), "mu1 = mu2", mu_eq);
            match cones::is_copositive(&diff, DEFAULT_TOL) {
                Ok(v) => {
                    let c = b.clause(format!("{row}.copositive"), "Sigma2 - Sigma1 is copositive", v.is_inside());
                    iff(&mut b, eq && c)
                }
                Err(LseError::SizeLimit(..)) if eq => (Sufficient::Fails, Necessary::NotApplicable),
                Err(LseError::SizeLimit(..)) => (Sufficient::Fails, Necessary::Violated),
                Err(e) => return Err(e),
            }
        }
        OrderKind::Cop => {
            let eq = b.clause(format!("{row}.mu_equal"), "mu1 = mu2", mu_eq);
            let v = cones::is_completely_positive(&diff, DEFAULT_TOL)?;
            b.clause(format!("{row}.completely_positive"), "Sigma2 - Sigma1 is completely positive", v.is_inside());
            match v.status {
                ConeStatus::Unknown if eq => (Sufficient::Fails, Necessary::NotApplicable),
                ConeStatus::Unknown => (Sufficient::Fails, Necessary::Violated),
                _ => iff(&mut b, eq && v.is_inside()),
            }
        }
    };
    Ok(b.finish(order, s, n))
}
