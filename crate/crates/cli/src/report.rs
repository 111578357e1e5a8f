//! JSON rendering of order reports and Monte Carlo results.
//!
//! Non-finite numbers (a tail-ratio limit of `+inf`, say) are written as the
//! strings `"inf"`, `"-inf"` and `"nan"` since JSON has no literal for them.

use lsemix::cones::Witness;
use lsemix::{ConeVerdict, DominanceResult, LimitRatioResult, McConfig, OrderReport, Verdict};
use serde_json::{json, Value};

use crate::spec::ScenarioSpec;

pub const SCHEMA_VERSION: u32 = 1;

pub fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v.is_nan() {
        json!("nan")
    } else if v > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn nums(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| num(x)).collect())
}

pub fn limit_ratio(r: &LimitRatioResult) -> Value {
    json!({
        "c_value": num(r.c_value),
        "converged": r.converged,
        "satisfies_assumption1": r.satisfies_assumption1,
        "satisfies_assumption2": r.satisfies_assumption2,
        "sigma1": num(r.sigma1),
        "sigma2": num(r.sigma2),
        "method": r.method,
    })
}

/// A dominance result without its curve table, which goes to CSV instead.
pub fn dominance(check: &str, r: &DominanceResult) -> Value {
    json!({
        "check": check,
        "pass": r.pass,
        "max_violation": num(r.max_violation),
        "violation_point": r.violation_point.as_deref().map(nums),
        "standard_error_at_violation": num(r.standard_error_at_violation),
        "failing_points": r.failing_points.iter().map(|p| nums(p)).collect::<Vec<_>>(),
    })
}

/// Evaluated order plus the optional Monte Carlo cross-check attached to it.
pub struct OrderEntry {
    pub report: OrderReport,
    pub mc: Option<(&'static str, DominanceResult)>,
}

impl OrderEntry {
    /// An inconclusive verdict counts as settled when a Monte Carlo check ran
    /// and found no violation.
    pub fn verified(&self) -> bool {
        self.report.verdict == Verdict::Inconclusive && self.mc.as_ref().is_some_and(|(_, r)| r.pass)
    }

    fn to_json(&self) -> Value {
        let r = &self.report;
        let mut v = json!({
            "order": r.order,
            "verdict": r.verdict,
            "sufficient": r.sufficient,
            "necessary": r.necessary,
            "clauses": r.clauses,
            "assumption_checks": r.assumption_checks.iter().map(limit_ratio).collect::<Vec<_>>(),
            "mc_verified": self.verified(),
        });
        if let Some((check, res)) = &self.mc {
            v["mc"] = dominance(check, res);
        }
        v
    }
}

pub fn exit_code(entries: &[OrderEntry]) -> i32 {
    if entries.iter().any(|e| e.report.verdict == Verdict::NotOrdered) {
        2
    } else if entries.iter().any(|e| e.report.verdict == Verdict::Inconclusive && !e.verified()) {
        3
    } else {
        0
    }
}

pub fn check_report(spec: &ScenarioSpec, mc: Option<&McConfig>, direction: &[f64], entries: &[OrderEntry]) -> Value {
    let count = |v: Verdict| entries.iter().filter(|e| e.report.verdict == v).count();
    json!({
        "schema_version": SCHEMA_VERSION,
        "seed": spec.seed,
        "dimension": spec.dim(),
        "family": {
            "generator": spec.d1.generator,
            "alpha": spec.d1.alpha,
            "beta": spec.d1.beta,
            "mixing": spec.d1.mixing,
        },
        "mc": mc.map(|c| json!({
            "samples": c.sample_count,
            "seed": c.seed,
            "coupled": c.coupled,
            "confidence_multiplier": num(c.confidence_multiplier),
            "grid": c.grid.as_deref().map(nums),
            "direction": nums(direction),
        })),
        "orders": entries.iter().map(OrderEntry::to_json).collect::<Vec<_>>(),
        "summary": {
            "ordered": count(Verdict::Ordered),
            "not_ordered": count(Verdict::NotOrdered),
            "inconclusive": count(Verdict::Inconclusive),
            "mc_verified": entries.iter().filter(|e| e.verified()).count(),
            "exit_code": exit_code(entries),
        },
    })
}

pub fn cone_verdict(v: &ConeVerdict) -> Value {
    let witness = match &v.witness {
        None => Value::Null,
        Some(Witness::Vector(x)) => json!({ "vector": nums(x) }),
        Some(Witness::Factor(rows)) => json!({ "factor": rows.iter().map(|r| nums(r)).collect::<Vec<_>>() }),
    };
    json!({
        "status": v.status,
        "certificate_kind": v.certificate_kind,
        "witness": witness,
    })
}

/// Pretty JSON with a trailing newline.
pub fn render(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_finite_numbers_become_strings() {
        assert_eq!(num(f64::INFINITY), json!("inf"));
        assert_eq!(num(f64::NEG_INFINITY), json!("-inf"));
        assert_eq!(num(f64::NAN), json!("nan"));
        assert_eq!(num(0.25), json!(0.25));
    }
}
