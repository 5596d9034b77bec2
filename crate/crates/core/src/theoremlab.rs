//! Machinery for the log characterization of EF1 welfarist rules.
//!
//! Two directions are covered:
//!
//! * For log-affine f every difference `h_k(x) = f((k+1)x) − f(kx)` is constant
//!   in x, and `a` can be read off as `k · h_k` for large k.
//!   [`constancy_check`] and [`fit_log`] test this numerically.
//! * For any other f some `h_k` varies, and a two-agent profile with `2k + 1`
//!   goods forces the welfarist rule into an allocation that is not EF1.
//!   [`find_counterexample`] builds that profile and certifies the violation by
//!   exhaustive enumeration; [`extend_profile`] pads it to more agents.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fairness::{is_ef1, Ef1Verdict};
use crate::model::{Allocation, Profile, DEFAULT_BUDGET};
use crate::welfarist::{
    evaluate_f, maximize_welfare_with, welfare_maximizers, SolveOptions, SolveResult,
    WelfareFunction,
};

/// Relative size below which two values of `h_k` are treated as equal when
/// scanning for a counterexample. Keeps rounding noise in `f = a·ln x + b`
/// from posing as a genuine difference.
pub const DIFFERENCE_TOLERANCE: f64 = 1e-9;

/// ε halvings tried before a (k, y, z) candidate is abandoned.
pub const MAX_HALVINGS: u32 = 60;

pub fn default_lemma_grid() -> Vec<f64> {
    vec![0.5, 1.0, 2.0, 5.0, 10.0]
}

/// {1/2, 1, 3/2, ..., 5}.
pub fn default_search_grid() -> Vec<BigRational> {
    (1..=10)
        .map(|i| BigRational::new(BigInt::from(i), BigInt::from(2)))
        .collect()
}

/// h_k(x) = f((k+1)x) − f(kx).
pub fn difference(f: &WelfareFunction, k: u64, x: f64) -> Result<f64> {
    let h = f.eval((k + 1) as f64 * x)? - f.eval(k as f64 * x)?;
    if h.is_finite() {
        Ok(h)
    } else {
        Err(Error::InvalidFunction(format!(
            "h_{k}({x}) of {f} is not finite"
        )))
    }
}

/// ĥ_k(x) = f((1 + 1/k)x) − f(x), which equals h_k(x/k).
pub fn scaled_difference(f: &WelfareFunction, k: u64, x: f64) -> Result<f64> {
    let h = f.eval((1.0 + 1.0 / k as f64) * x)? - f.eval(x)?;
    if h.is_finite() {
        Ok(h)
    } else {
        Err(Error::InvalidFunction(format!(
            "scaled h_{k}({x}) of {f} is not finite"
        )))
    }
}

/// x·f′(x) by central difference with step `step`; constant for log-affine f.
pub fn scaled_derivative(f: &WelfareFunction, x: f64, step: f64) -> Result<f64> {
    Ok(x * (f.eval(x + step)? - f.eval(x - step)?) / (2.0 * step))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstancyReport {
    pub k: u64,
    pub tolerance: f64,
    /// (x, h_k(x)) for each grid point.
    pub samples: Vec<(f64, f64)>,
    /// max − min of the sampled values.
    pub spread: f64,
    pub constant: bool,
    /// Mean of the samples, reported only when `constant`.
    pub c_k: Option<f64>,
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("grid must not be empty".into()));
    }
    if let Some(x) = grid.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "grid points must be positive, got {x}"
        )));
    }
    Ok(())
}

pub fn constancy_check(
    f: &WelfareFunction,
    k: u64,
    grid: &[f64],
    tolerance: f64,
) -> Result<ConstancyReport> {
    if k == 0 {
        return Err(Error::InvalidArgument(
            "k must be a positive integer".into(),
        ));
    }
    if tolerance.is_nan() || tolerance <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {tolerance}"
        )));
    }
    check_grid(grid)?;
    let samples = grid
        .iter()
        .map(|&x| Ok((x, difference(f, k, x)?)))
        .collect::<Result<Vec<_>>>()?;
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, h)| {
            (lo.min(h), hi.max(h))
        });
    let spread = hi - lo;
    let constant = spread <= tolerance;
    let c_k = constant.then(|| samples.iter().map(|s| s.1).sum::<f64>() / samples.len() as f64);
    Ok(ConstancyReport {
        k,
        tolerance,
        samples,
        spread,
        constant,
        c_k,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogFit {
    /// k_max · c_{k_max}.
    pub a: f64,
    /// f(1).
    pub b: f64,
    /// max over the grid of |f(x) − (a·ln x + b)|.
    pub max_residual: f64,
    pub k_max: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LogFitOutcome {
    Log {
        fit: LogFit,
        reports: Vec<ConstancyReport>,
    },
    /// The first k whose difference function is not constant on the grid,
    /// or whose constant is not positive.
    NotLog { failing: ConstancyReport },
}

impl LogFitOutcome {
    pub fn fit(&self) -> Option<&LogFit> {
        match self {
            LogFitOutcome::Log { fit, .. } => Some(fit),
            LogFitOutcome::NotLog { .. } => None,
        }
    }
}

pub fn fit_log(
    f: &WelfareFunction,
    k_max: u64,
    grid: &[f64],
    tolerance: f64,
) -> Result<LogFitOutcome> {
    if k_max == 0 {
        return Err(Error::InvalidArgument(
            "k_max must be a positive integer".into(),
        ));
    }
    let mut reports = Vec::with_capacity(k_max as usize);
    for k in 1..=k_max {
        let report = constancy_check(f, k, grid, tolerance)?;
        if !report.constant || report.c_k.is_none_or(|c| c <= 0.0) {
            return Ok(LogFitOutcome::NotLog { failing: report });
        }
        reports.push(report);
    }
    let c = reports.last().and_then(|r| r.c_k).expect("k_max >= 1");
    let a = k_max as f64 * c;
    let b = f.eval(1.0)?;
    let max_residual = grid
        .iter()
        .map(|&x| Ok((f.eval(x)? - (a * x.ln() + b)).abs()))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(LogFitOutcome::Log {
        fit: LogFit {
            a,
            b,
            max_residual,
            k_max,
        },
        reports,
    })
}

/// Two agents, `2k + 1` goods:
/// u_1 = (0, y, ..., y) and u_2 = (z − ε, z, ..., z).
pub fn theorem_profile(
    k: u64,
    y: &BigRational,
    z: &BigRational,
    epsilon: &BigRational,
) -> Result<Profile> {
    if k == 0 {
        return Err(Error::InvalidArgument(
            "k must be a positive integer".into(),
        ));
    }
    if !y.is_positive() || !epsilon.is_positive() || epsilon >= z {
        return Err(Error::InvalidArgument(format!(
            "need y > 0 and 0 < epsilon < z, got y = {y}, z = {z}, epsilon = {epsilon}"
        )));
    }
    let goods = 2 * k as usize + 1;
    let first =
        std::iter::once(BigRational::zero()).chain(std::iter::repeat_n(y.clone(), goods - 1));
    let second = std::iter::once(z - epsilon).chain(std::iter::repeat_n(z.clone(), goods - 1));
    Profile::new(vec![first.collect(), second.collect()])
}

/// Both sides of f((k+1)y) − f(ky) > f((k+1)z − ε) − f(kz − ε), in floats.
pub fn strict_gap_sides(
    f: &WelfareFunction,
    k: u64,
    y: &BigRational,
    z: &BigRational,
    epsilon: &BigRational,
) -> Result<(f64, f64)> {
    let k0 = BigRational::from_integer(k.into());
    let k1 = &k0 + BigRational::one();
    let lhs = evaluate_f(f, &(&k1 * y))? - evaluate_f(f, &(&k0 * y))?;
    let rhs = evaluate_f(f, &(&k1 * z - epsilon))? - evaluate_f(f, &(&k0 * z - epsilon))?;
    Ok((lhs, rhs))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CounterexampleReport {
    pub k: u64,
    pub y: BigRational,
    pub z: BigRational,
    pub epsilon: BigRational,
    /// f((k+1)y) − f(ky).
    pub lhs: f64,
    /// f((k+1)z − ε) − f(kz − ε).
    pub rhs: f64,
    pub profile: Profile,
    pub solver_output: SolveResult,
    pub ef1_verdict: Ef1Verdict,
    /// Every allocation tying the maximum welfare.
    pub maximizers: Vec<Allocation>,
    pub all_maximizers_violate: bool,
}

impl CounterexampleReport {
    /// Re-derives the certificate from scratch: the profile shape, the strict
    /// inequality, and the EF1 failure of the reported allocation.
    pub fn recheck(&self, f: &WelfareFunction) -> Result<bool> {
        let expected = theorem_profile(self.k, &self.y, &self.z, &self.epsilon)?;
        let (lhs, rhs) = strict_gap_sides(f, self.k, &self.y, &self.z, &self.epsilon)?;
        let verdict = is_ef1(&self.profile, &self.solver_output.allocation)?;
        let maximizers_fail = self
            .maximizers
            .iter()
            .map(|a| is_ef1(&self.profile, a).map(|v| !v.holds))
            .collect::<Result<Vec<_>>>()?;
        Ok(expected == self.profile
            && lhs > rhs
            && !verdict.holds
            && self.maximizers.contains(&self.solver_output.allocation)
            && maximizers_fail.iter().all(|&v| v))
    }
}

/// A candidate (k, y, z) that satisfied the scan but did not yield a certificate.
#[derive(Clone, Debug, PartialEq)]
pub enum Diagnostic {
    /// No ε ∈ (0, z) in the halving sequence satisfied the strict inequality.
    EpsilonNotFound {
        k: u64,
        y: BigRational,
        z: BigRational,
    },
    /// The inequality held but some welfare maximizer is EF1.
    VerificationFailed {
        k: u64,
        y: BigRational,
        z: BigRational,
        epsilon: BigRational,
        ef1_allocation: Allocation,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CounterexampleSearch {
    /// The first certified report in scan order.
    pub report: Option<CounterexampleReport>,
    /// Candidates before the report (or all candidates if none was found) that failed.
    pub diagnostics: Vec<Diagnostic>,
    pub candidates: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CounterexampleOptions {
    /// Fixed ε instead of halving from z/2.
    pub epsilon: Option<BigRational>,
    pub max_halvings: u32,
    pub budget: u64,
}

impl Default for CounterexampleOptions {
    fn default() -> Self {
        CounterexampleOptions {
            epsilon: None,
            max_halvings: MAX_HALVINGS,
            budget: DEFAULT_BUDGET,
        }
    }
}

enum Outcome {
    Found(Box<CounterexampleReport>),
    Failed(Box<Diagnostic>),
}

pub fn find_counterexample(
    f: &WelfareFunction,
    k_max: u64,
    grid: &[BigRational],
) -> Result<CounterexampleSearch> {
    find_counterexample_with(f, k_max, grid, &CounterexampleOptions::default())
}

/// Scans k = 1..=k_max and grid pairs (y, z) with h_k(y) > h_k(z), builds the
/// two-agent profile for each, and returns the first one on which every
/// welfare maximizer violates EF1.
///
/// Candidates for one k are verified in parallel; the result is the first in
/// scan order (k ascending, then grid pairs by position).
pub fn find_counterexample_with(
    f: &WelfareFunction,
    k_max: u64,
    grid: &[BigRational],
    options: &CounterexampleOptions,
) -> Result<CounterexampleSearch> {
    f.validate()?;
    if k_max == 0 {
        return Err(Error::InvalidArgument(
            "k_max must be a positive integer".into(),
        ));
    }
    if let Some(x) = grid.iter().find(|x| !x.is_positive()) {
        return Err(Error::InvalidArgument(format!(
            "grid points must be positive, got {x}"
        )));
    }
    let mut search = CounterexampleSearch {
        report: None,
        diagnostics: Vec::new(),
        candidates: 0,
    };
    for k in 1..=k_max {
        let candidates = candidate_pairs(f, k, grid)?;
        search.candidates += candidates.len();
        let outcomes = candidates
            .par_iter()
            .map(|(y, z)| examine(f, k, y, z, options))
            .collect::<Result<Vec<_>>>()?;
        for outcome in outcomes {
            match outcome {
                Outcome::Found(report) => {
                    search.report = Some(*report);
                    return Ok(search);
                }
                Outcome::Failed(diagnostic) => search.diagnostics.push(*diagnostic),
            }
        }
    }
    Ok(search)
}

/// Grid pairs, oriented so that h_k(y) > h_k(z).
fn candidate_pairs(
    f: &WelfareFunction,
    k: u64,
    grid: &[BigRational],
) -> Result<Vec<(BigRational, BigRational)>> {
    let k0 = BigRational::from_integer(k.into());
    let k1 = &k0 + BigRational::one();
    let h = |x: &BigRational| -> Result<f64> {
        Ok(evaluate_f(f, &(&k1 * x))? - evaluate_f(f, &(&k0 * x))?)
    };
    let values = grid.iter().map(h).collect::<Result<Vec<_>>>()?;
    let mut pairs = Vec::new();
    for i in 0..grid.len() {
        for j in i + 1..grid.len() {
            let (hi, hj) = (values[i], values[j]);
            let scale = hi.abs().max(hj.abs()).max(1.0);
            if (hi - hj).abs() <= DIFFERENCE_TOLERANCE * scale {
                continue;
            }
            if hi > hj {
                pairs.push((grid[i].clone(), grid[j].clone()));
            } else {
                pairs.push((grid[j].clone(), grid[i].clone()));
            }
        }
    }
    Ok(pairs)
}

fn choose_epsilon(
    f: &WelfareFunction,
    k: u64,
    y: &BigRational,
    z: &BigRational,
    options: &CounterexampleOptions,
) -> Result<Option<(BigRational, f64, f64)>> {
    let holds = |eps: &BigRational| -> Result<Option<(f64, f64)>> {
        let (lhs, rhs) = strict_gap_sides(f, k, y, z, eps)?;
        Ok((lhs > rhs).then_some((lhs, rhs)))
    };
    if let Some(eps) = &options.epsilon {
        if !eps.is_positive() || eps >= z {
            return Ok(None);
        }
        return Ok(holds(eps)?.map(|(l, r)| (eps.clone(), l, r)));
    }
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let mut eps = z * &half;
    for _ in 0..options.max_halvings {
        if let Some((lhs, rhs)) = holds(&eps)? {
            return Ok(Some((eps, lhs, rhs)));
        }
        eps *= &half;
    }
    Ok(None)
}

fn examine(
    f: &WelfareFunction,
    k: u64,
    y: &BigRational,
    z: &BigRational,
    options: &CounterexampleOptions,
) -> Result<Outcome> {
    let Some((epsilon, lhs, rhs)) = choose_epsilon(f, k, y, z, options)? else {
        return Ok(Outcome::Failed(Box::new(Diagnostic::EpsilonNotFound {
            k,
            y: y.clone(),
            z: z.clone(),
        })));
    };
    let profile = theorem_profile(k, y, z, &epsilon)?;
    let solve_options = SolveOptions {
        budget: options.budget,
        parallel: false,
        ..SolveOptions::default()
    };
    let solver_output = maximize_welfare_with(&profile, f, &solve_options)?;
    let ef1_verdict = is_ef1(&profile, &solver_output.allocation)?;
    let maximizers = welfare_maximizers(&profile, f, options.budget)?;
    let mut ef1_maximizer = None;
    for alloc in &maximizers {
        if is_ef1(&profile, alloc)?.holds {
            ef1_maximizer = Some(alloc.clone());
            break;
        }
    }
    if let Some(ef1_allocation) = ef1_maximizer {
        return Ok(Outcome::Failed(Box::new(Diagnostic::VerificationFailed {
            k,
            y: y.clone(),
            z: z.clone(),
            epsilon,
            ef1_allocation,
        })));
    }
    Ok(Outcome::Found(Box::new(CounterexampleReport {
        k,
        y: y.clone(),
        z: z.clone(),
        epsilon,
        lhs,
        rhs,
        profile,
        solver_output,
        ef1_verdict,
        maximizers,
        all_maximizers_violate: true,
    })))
}

/// Pads a two-agent profile to `agents` agents: each extra agent values one
/// distinct extra good at 1 and everything else at 0, and the original agents
/// value every extra good at 0.
pub fn extend_profile(base: &Profile, agents: usize) -> Result<Profile> {
    if base.agents() != 2 {
        return Err(Error::InvalidArgument(format!(
            "extension needs a two-agent profile, got {} agents",
            base.agents()
        )));
    }
    if agents < 3 {
        return Err(Error::InvalidArgument(format!(
            "target agent count must be at least 3, got {agents}"
        )));
    }
    let extra = agents - 2;
    let goods = base.goods() + extra;
    let mut rows: Vec<Vec<BigRational>> = base
        .rows()
        .iter()
        .map(|row| {
            row.iter()
                .cloned()
                .chain(std::iter::repeat_n(BigRational::zero(), extra))
                .collect()
        })
        .collect();
    for t in 0..extra {
        let mut row = vec![BigRational::zero(); goods];
        row[base.goods() + t] = BigRational::one();
        rows.push(row);
    }
    Profile::with_goods(agents, goods, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_rational;

    fn q(text: &str) -> BigRational {
        parse_rational(text).unwrap()
    }

    #[test]
    fn log_differences_are_constant() {
        let report =
            constancy_check(&WelfareFunction::NASH, 2, &[0.5, 1.0, 2.0, 5.0], 1e-9).unwrap();
        assert!(report.constant);
        assert!(report.spread >= 0.0);
        assert!((report.c_k.unwrap() - 1.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn identity_differences_vary() {
        let report = constancy_check(&WelfareFunction::UTILITARIAN, 1, &[1.0, 2.0], 1e-9).unwrap();
        assert!(!report.constant);
        assert_eq!(report.spread, 1.0);
        assert_eq!(report.c_k, None);
    }

    #[test]
    fn log_affine_scales_to_a() {
        let f = WelfareFunction::LogAffine { a: 3.0, b: 2.0 };
        for k in 1..=5 {
            let report = constancy_check(&f, k, &default_lemma_grid(), 1e-9).unwrap();
            assert!(report.constant, "k = {k}");
            // Closed form: c_k = 3 ln(1 + 1/k).
            let expected = 3.0 * (1.0 + 1.0 / k as f64).ln();
            assert!((report.c_k.unwrap() - expected).abs() < 1e-12);
        }
        // k·c_k = 3·k·ln(1 + 1/k) approaches 3 from below like 3(1 − 1/(2k)).
        let c5 = constancy_check(&f, 5, &default_lemma_grid(), 1e-9)
            .unwrap()
            .c_k
            .unwrap();
        assert!((5.0 * c5 - 15.0 * 1.2f64.ln()).abs() < 1e-12);
        assert!(5.0 * c5 < 3.0 && 5.0 * c5 >= 3.0 * (1.0 - 1.0 / 10.0));
    }

    #[test]
    fn scaled_difference_matches_rescaled_h() {
        for f in [WelfareFunction::NASH, WelfareFunction::Power { p: 2.0 }] {
            for k in 1..=4 {
                for x in [0.5, 1.0, 3.0] {
                    let a = scaled_difference(&f, k, x).unwrap();
                    let b = difference(&f, k, x / k as f64).unwrap();
                    assert!((a - b).abs() < 1e-12, "{f} k={k} x={x}");
                }
            }
        }
    }

    #[test]
    fn fit_log_recovers_parameters() {
        let f = WelfareFunction::LogAffine { a: 3.0, b: 2.0 };
        let outcome = fit_log(&f, 50, &default_lemma_grid(), 1e-9).unwrap();
        let fit = outcome.fit().unwrap();
        assert!((fit.a - 3.0).abs() / 3.0 < 0.02);
        assert_eq!(fit.b, 2.0);
        // The residual is |3 − a|·|ln x|, largest at x = 10.
        let expected = (3.0 - 150.0 * 1.02f64.ln()) * 10f64.ln();
        assert!(
            (fit.max_residual - expected).abs() < 1e-9,
            "{}",
            fit.max_residual
        );
        let narrower = fit_log(&f, 50, &[0.5, 1.0, 2.0, 5.0], 1e-9).unwrap();
        assert!(narrower.fit().unwrap().max_residual <= 0.05);
    }

    #[test]
    fn fit_log_rejects_non_logs() {
        for f in [
            WelfareFunction::UTILITARIAN,
            WelfareFunction::Power { p: 2.0 },
        ] {
            match fit_log(&f, 10, &[1.0, 2.0], 1e-9).unwrap() {
                LogFitOutcome::NotLog { failing } => assert_eq!(failing.k, 1),
                other => panic!("{f}: {other:?}"),
            }
        }
        let report =
            constancy_check(&WelfareFunction::Power { p: 2.0 }, 1, &[1.0, 2.0], 1e-9).unwrap();
        assert_eq!(report.samples, vec![(1.0, 3.0), (2.0, 12.0)]);
    }

    #[test]
    fn bad_arguments() {
        let f = WelfareFunction::NASH;
        assert!(constancy_check(&f, 0, &[1.0], 1e-9).is_err());
        assert!(constancy_check(&f, 1, &[], 1e-9).is_err());
        assert!(constancy_check(&f, 1, &[0.0, 1.0], 1e-9).is_err());
        assert!(constancy_check(&f, 1, &[1.0], 0.0).is_err());
        assert!(fit_log(&f, 0, &[1.0], 1e-9).is_err());
        assert!(find_counterexample(&f, 0, &default_search_grid()).is_err());
        assert!(find_counterexample(&f, 1, &[q("0"), q("1")]).is_err());
    }

    #[test]
    fn construction_matches_the_proof() {
        let p = theorem_profile(2, &q("3"), &q("1"), &q("1/4")).unwrap();
        assert_eq!(p.goods(), 5);
        assert_eq!(p.row(0), &[q("0"), q("3"), q("3"), q("3"), q("3")]);
        assert_eq!(p.row(1), &[q("3/4"), q("1"), q("1"), q("1"), q("1")]);
        assert!(theorem_profile(1, &q("1"), &q("1"), &q("1")).is_err());
        assert!(theorem_profile(1, &q("1"), &q("1"), &q("0")).is_err());
        assert!(theorem_profile(0, &q("1"), &q("1"), &q("1/2")).is_err());
    }

    #[test]
    fn utilitarian_counterexample_on_two_point_grid() {
        let search =
            find_counterexample(&WelfareFunction::UTILITARIAN, 5, &[q("1"), q("2")]).unwrap();
        let report = search.report.unwrap();
        assert_eq!(
            (report.k, report.y.clone(), report.z.clone()),
            (1, q("2"), q("1"))
        );
        assert_eq!(report.epsilon, q("1/2"));
        assert_eq!(
            report.profile,
            Profile::new(vec![
                vec![q("0"), q("2"), q("2")],
                vec![q("1/2"), q("1"), q("1")]
            ])
            .unwrap()
        );
        assert_eq!(report.solver_output.allocation.assignment(), &[1, 0, 0]);
        assert_eq!(report.maximizers.len(), 1);
        assert!(!report.ef1_verdict.holds);
        assert_eq!(report.ef1_verdict.violations[0].envier, 1);
        assert!(report.all_maximizers_violate);
        assert!(report.recheck(&WelfareFunction::UTILITARIAN).unwrap());
    }

    #[test]
    fn squares_counterexample_on_two_point_grid() {
        let f = WelfareFunction::Power { p: 2.0 };
        let report = find_counterexample(&f, 5, &[q("1"), q("2")])
            .unwrap()
            .report
            .unwrap();
        assert_eq!((report.k, report.epsilon.clone()), (1, q("1/2")));
        assert_eq!((report.lhs, report.rhs), (12.0, 2.0));
        assert_eq!(report.solver_output.allocation.assignment(), &[1, 0, 0]);
        assert_eq!(report.solver_output.welfare.finite_part, 16.25);
        assert!(report.recheck(&f).unwrap());
    }

    #[test]
    fn log_has_no_counterexample() {
        let search =
            find_counterexample(&WelfareFunction::NASH, 5, &default_search_grid()).unwrap();
        assert!(search.report.is_none());
        assert_eq!(search.candidates, 0);
        assert!(search.diagnostics.is_empty());
    }

    #[test]
    fn epsilon_override() {
        let options = CounterexampleOptions {
            epsilon: Some(q("1/10")),
            ..CounterexampleOptions::default()
        };
        let report = find_counterexample_with(
            &WelfareFunction::UTILITARIAN,
            1,
            &[q("1"), q("2")],
            &options,
        )
        .unwrap()
        .report
        .unwrap();
        assert_eq!(report.epsilon, q("1/10"));
        assert!(report.recheck(&WelfareFunction::UTILITARIAN).unwrap());

        let too_big = CounterexampleOptions {
            epsilon: Some(q("1")),
            ..CounterexampleOptions::default()
        };
        let search = find_counterexample_with(
            &WelfareFunction::UTILITARIAN,
            1,
            &[q("1"), q("2")],
            &too_big,
        )
        .unwrap();
        assert!(search.report.is_none());
        assert!(matches!(
            search.diagnostics[0],
            Diagnostic::EpsilonNotFound { k: 1, .. }
        ));
    }

    #[test]
    fn extension_shapes() {
        let base = Profile::new(vec![
            vec![q("0"), q("2"), q("2")],
            vec![q("1/2"), q("1"), q("1")],
        ])
        .unwrap();
        let four = extend_profile(&base, 4).unwrap();
        assert_eq!((four.agents(), four.goods()), (4, 5));
        assert_eq!(four.row(0), &[q("0"), q("2"), q("2"), q("0"), q("0")]);
        assert_eq!(four.row(1), &[q("1/2"), q("1"), q("1"), q("0"), q("0")]);
        assert_eq!(four.row(2), &[q("0"), q("0"), q("0"), q("1"), q("0")]);
        assert_eq!(four.row(3), &[q("0"), q("0"), q("0"), q("0"), q("1")]);
        let three = extend_profile(&base, 3).unwrap();
        assert_eq!((three.agents(), three.goods()), (3, 4));
        assert!(extend_profile(&base, 2).is_err());
        assert!(extend_profile(&four, 5).is_err());
    }

    #[test]
    fn log_derivative_is_flat() {
        for x in [0.5, 1.0, 2.0, 5.0] {
            let d = scaled_derivative(&WelfareFunction::NASH, x, 1e-6).unwrap();
            assert!((d - 1.0).abs() <= 1e-5, "{x}: {d}");
        }
    }
}
