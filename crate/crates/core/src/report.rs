//! JSON forms of solver results, verdicts, and theorem reports.
//!
//! Agents and goods are 1-based here, matching the profile and allocation files.
//! Rationals are integers when integral and `"p/q"` strings otherwise.

use serde_json::{json, Value};

use crate::fairness::{Ef1Verdict, EfVerdict, ParetoVerdict};
use crate::model::{format_rational, rational_to_json, Allocation};
use crate::theoremlab::{
    ConstancyReport, CounterexampleReport, CounterexampleSearch, Diagnostic, LogFitOutcome,
};
use crate::welfarist::{ExtendedWelfare, SolveResult};

fn bundles_json(allocation: &Allocation) -> Value {
    allocation
        .bundles()
        .iter()
        .map(|b| b.goods().map(|g| g + 1).collect::<Vec<_>>())
        .collect()
}

fn float_json(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(v.to_string())
    }
}

pub fn welfare_json(w: &ExtendedWelfare) -> Value {
    json!({
        "neg_inf_count": w.neg_inf_count,
        "finite_part": float_json(w.finite_part),
    })
}

pub fn solve_json(result: &SolveResult) -> Value {
    let mut value = json!({
        "assignment": result.allocation.assignment().iter().map(|a| a + 1).collect::<Vec<_>>(),
        "bundles": bundles_json(&result.allocation),
        "utilities": result.utilities.iter().map(rational_to_json).collect::<Vec<_>>(),
        "welfare": welfare_json(&result.welfare),
        "maximizer_count": result.maximizer_set_size,
    });
    if let Some(product) = &result.nash_product {
        value["nash_product"] = rational_to_json(product);
    }
    value
}

pub fn ef1_json(verdict: &Ef1Verdict) -> Value {
    json!({
        "holds": verdict.holds,
        "violations": verdict.violations.iter().map(|v| json!({
            "envier": v.envier + 1,
            "envied": v.envied + 1,
            "gaps": v.gaps.iter().map(|(g, gap)| json!({
                "removed_good": g + 1,
                "gap": rational_to_json(gap),
            })).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
    })
}

pub fn ef_json(verdict: &EfVerdict) -> Value {
    json!({
        "holds": verdict.holds,
        "envy": verdict.envy.iter().map(|e| json!({
            "envier": e.envier + 1,
            "envied": e.envied + 1,
            "own_value": rational_to_json(&e.own_value),
            "other_value": rational_to_json(&e.other_value),
        })).collect::<Vec<_>>(),
    })
}

pub fn pareto_json(verdict: &ParetoVerdict) -> Value {
    json!({
        "optimal": verdict.optimal,
        "dominating_assignment": verdict
            .dominating_allocation
            .as_ref()
            .map(|a| a.assignment().iter().map(|x| x + 1).collect::<Vec<_>>()),
    })
}

pub fn constancy_json(report: &ConstancyReport) -> Value {
    json!({
        "k": report.k,
        "tolerance": report.tolerance,
        "samples": report.samples.iter().map(|(x, h)| json!([x, float_json(*h)])).collect::<Vec<_>>(),
        "spread": float_json(report.spread),
        "constant": report.constant,
        "c_k": report.c_k,
    })
}

pub fn log_fit_json(outcome: &LogFitOutcome) -> Value {
    match outcome {
        LogFitOutcome::Log { fit, reports } => json!({
            "verdict": "log",
            "a": fit.a,
            "b": fit.b,
            "max_residual": fit.max_residual,
            "k_max": fit.k_max,
            "reports": reports.iter().map(constancy_json).collect::<Vec<_>>(),
        }),
        LogFitOutcome::NotLog { failing } => json!({
            "verdict": "not-log",
            "failing_k": failing.k,
            "report": constancy_json(failing),
        }),
    }
}

pub fn counterexample_json(report: &CounterexampleReport) -> Value {
    json!({
        "k": report.k,
        "y": format_rational(&report.y),
        "z": format_rational(&report.z),
        "epsilon": format_rational(&report.epsilon),
        "strict_gap": { "lhs": report.lhs, "rhs": report.rhs },
        "profile": report.profile.to_json(),
        "solver_output": solve_json(&report.solver_output),
        "ef1": ef1_json(&report.ef1_verdict),
        "maximizers": report
            .maximizers
            .iter()
            .map(|a| a.assignment().iter().map(|x| x + 1).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
        "all_maximizers_violate": report.all_maximizers_violate,
    })
}

pub fn diagnostic_json(diagnostic: &Diagnostic) -> Value {
    match diagnostic {
        Diagnostic::EpsilonNotFound { k, y, z } => json!({
            "kind": "epsilon-not-found",
            "k": k,
            "y": format_rational(y),
            "z": format_rational(z),
        }),
        Diagnostic::VerificationFailed {
            k,
            y,
            z,
            epsilon,
            ef1_allocation,
        } => json!({
            "kind": "verification-failed",
            "k": k,
            "y": format_rational(y),
            "z": format_rational(z),
            "epsilon": format_rational(epsilon),
            "ef1_assignment": ef1_allocation.assignment().iter().map(|x| x + 1).collect::<Vec<_>>(),
        }),
    }
}

pub fn search_json(search: &CounterexampleSearch) -> Value {
    json!({
        "found": search.report.is_some(),
        "candidates": search.candidates,
        "report": search.report.as_ref().map(counterexample_json),
        "diagnostics": search.diagnostics.iter().map(diagnostic_json).collect::<Vec<_>>(),
    })
}
