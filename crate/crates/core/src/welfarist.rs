//! Additive welfarist rules: welfare functions, extended-real welfare, and
//! exact maximization over every allocation.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::funcparse::{evaluate_expression, parse_expression, validate_increasing_by, Expression};
use crate::model::{
    parse_rational, Allocation, AllocationIter, AllocationSpace, Profile, DEFAULT_BUDGET,
};

/// Absolute tolerance for treating two finite welfare values as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

const CHUNK: u64 = 1024;

/// A user-supplied expression that passed the monotonicity screen.
#[derive(Clone, Debug, PartialEq)]
pub struct CustomFunction {
    source: String,
    expr: Expression,
}

impl CustomFunction {
    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn expression(&self) -> &Expression {
        &self.expr
    }
}

/// The increasing function f of an additive welfarist rule.
#[derive(Clone, Debug, PartialEq)]
pub enum WelfareFunction {
    /// a·ln x + b; the Nash welfare family.
    LogAffine {
        a: f64,
        b: f64,
    },
    /// a·x + b; the utilitarian family.
    Affine {
        a: f64,
        b: f64,
    },
    Power {
        p: f64,
    },
    Exp,
    Custom(CustomFunction),
}

/// Points where custom expressions must increase strictly, plus x = 0.
fn screening_grid() -> Vec<f64> {
    std::iter::once(0.0)
        .chain((0..=100).map(|i| 10f64.powf(i as f64 / 20.0 - 3.0)))
        .collect()
}

impl WelfareFunction {
    pub const NASH: WelfareFunction = WelfareFunction::LogAffine { a: 1.0, b: 0.0 };
    pub const UTILITARIAN: WelfareFunction = WelfareFunction::Affine { a: 1.0, b: 0.0 };

    /// Parses an expression in `x` and checks that it increases on a sample grid.
    pub fn custom(source: &str) -> Result<Self> {
        let expr = parse_expression(source)?;
        let f = WelfareFunction::Custom(CustomFunction {
            source: source.trim().to_string(),
            expr,
        });
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidFunction(format!(
                    "{name} must be positive and finite, got {v}"
                )))
            }
        };
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidFunction(format!(
                    "{name} must be finite, got {v}"
                )))
            }
        };
        match self {
            WelfareFunction::LogAffine { a, b } | WelfareFunction::Affine { a, b } => {
                positive("a", *a)?;
                finite("b", *b)
            }
            WelfareFunction::Power { p } => positive("p", *p),
            WelfareFunction::Exp => Ok(()),
            WelfareFunction::Custom(custom) => {
                let violation = validate_increasing_by(&screening_grid(), |x| {
                    evaluate_expression(&custom.expr, x)
                })
                .map_err(|e| Error::InvalidFunction(format!("`{}`: {e}", custom.source)))?;
                match violation {
                    None => Ok(()),
                    Some(v) => Err(Error::InvalidFunction(format!(
                        "`{}` is not increasing: f({}) = {} but f({}) = {}",
                        custom.source, v.lower.0, v.lower.1, v.upper.0, v.upper.1
                    ))),
                }
            }
        }
    }

    /// f(x) for real x >= 0; −∞ is allowed, NaN and +∞ are not.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if x.is_nan() || x < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "f is only defined for x >= 0, got {x}"
            )));
        }
        let value = match self {
            WelfareFunction::LogAffine { a, b } => {
                if x == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    a * x.ln() + b
                }
            }
            WelfareFunction::Affine { a, b } => a * x + b,
            WelfareFunction::Power { p } => x.powf(*p),
            WelfareFunction::Exp => x.exp(),
            WelfareFunction::Custom(custom) => evaluate_expression(&custom.expr, x)
                .map_err(|e| Error::InvalidFunction(format!("`{}`: {e}", custom.source)))?,
        };
        if value.is_nan() || value == f64::INFINITY {
            return Err(Error::InvalidFunction(format!(
                "{self} evaluates to {value} at x = {x}"
            )));
        }
        Ok(value)
    }
}

/// Parses an integer, a `p/q` rational, or a decimal literal.
pub fn parse_real(text: &str) -> std::result::Result<f64, String> {
    let text = text.trim();
    if let Ok(q) = parse_rational(text) {
        return q
            .to_f64()
            .ok_or_else(|| format!("`{text}` is out of range"));
    }
    text.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("`{text}` is not a number"))
}

impl FromStr for WelfareFunction {
    type Err = Error;

    /// Accepts `log`, `log:a,b`, `affine`, `affine:a,b`, `power:p`, `exp`, and `expr:<expression>`.
    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        let (name, args) = match text.split_once(':') {
            Some((name, args)) => (name.trim(), Some(args)),
            None => (text, None),
        };
        let bad = |msg: String| Error::InvalidFunction(format!("`{text}`: {msg}"));
        let pair = |args: &str| -> Result<(f64, f64)> {
            let parts: Vec<&str> = args.split(',').collect();
            match parts.as_slice() {
                [a, b] => Ok((parse_real(a).map_err(bad)?, parse_real(b).map_err(bad)?)),
                _ => Err(bad("expected two parameters `a,b`".into())),
            }
        };
        let f = match (name, args) {
            ("log" | "ln", None) => WelfareFunction::NASH,
            ("log" | "ln", Some(args)) => {
                let (a, b) = pair(args)?;
                WelfareFunction::LogAffine { a, b }
            }
            ("affine", None) => WelfareFunction::UTILITARIAN,
            ("affine", Some(args)) => {
                let (a, b) = pair(args)?;
                WelfareFunction::Affine { a, b }
            }
            ("power", Some(p)) => WelfareFunction::Power {
                p: parse_real(p).map_err(bad)?,
            },
            ("exp", None) => WelfareFunction::Exp,
            ("expr", Some(source)) => return WelfareFunction::custom(source),
            _ => {
                return Err(bad(
                    "expected log, log:a,b, affine:a,b, power:p, exp, or expr:<expression>".into(),
                ))
            }
        };
        f.validate()?;
        Ok(f)
    }
}

impl fmt::Display for WelfareFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WelfareFunction::LogAffine { a, b } if *a == 1.0 && *b == 0.0 => f.write_str("log"),
            WelfareFunction::LogAffine { a, b } => write!(f, "log:{a},{b}"),
            WelfareFunction::Affine { a, b } => write!(f, "affine:{a},{b}"),
            WelfareFunction::Power { p } => write!(f, "power:{p}"),
            WelfareFunction::Exp => f.write_str("exp"),
            WelfareFunction::Custom(custom) => write!(f, "expr:{}", custom.source),
        }
    }
}

/// f(x) at an exact nonnegative rational.
pub fn evaluate_f(f: &WelfareFunction, x: &BigRational) -> Result<f64> {
    if x.is_negative() {
        return Err(Error::InvalidArgument(format!(
            "f is only defined for x >= 0, got {x}"
        )));
    }
    let value = x
        .to_f64()
        .ok_or_else(|| Error::InvalidArgument(format!("{x} does not fit in a double")))?;
    f.eval(value)
}

/// A welfare value in [−∞, ∞).
///
/// Ordered first by the number of −∞ terms (fewer is better), then by the sum
/// of the finite terms.
#[derive(Clone, Copy, Debug)]
pub struct ExtendedWelfare {
    pub neg_inf_count: usize,
    pub finite_part: f64,
}

impl ExtendedWelfare {
    pub fn new(neg_inf_count: usize, finite_part: f64) -> Self {
        // Adding 0.0 turns -0.0 into 0.0 so that equal sums compare equal.
        ExtendedWelfare {
            neg_inf_count,
            finite_part: finite_part + 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.neg_inf_count == 0
    }

    /// Same −∞ count and finite parts within `tolerance`.
    pub fn ties(&self, other: &ExtendedWelfare, tolerance: f64) -> bool {
        self.neg_inf_count == other.neg_inf_count
            && (self.finite_part - other.finite_part).abs() <= tolerance
    }

    /// The sum as a single extended real.
    pub fn value(&self) -> f64 {
        if self.neg_inf_count > 0 {
            f64::NEG_INFINITY
        } else {
            self.finite_part
        }
    }

    pub fn from_terms(terms: impl IntoIterator<Item = f64>) -> Self {
        let mut count = 0;
        let mut sum = 0.0;
        for term in terms {
            if term == f64::NEG_INFINITY {
                count += 1;
            } else {
                sum += term;
            }
        }
        ExtendedWelfare::new(count, sum)
    }
}

impl Ord for ExtendedWelfare {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .neg_inf_count
            .cmp(&self.neg_inf_count)
            .then_with(|| self.finite_part.total_cmp(&other.finite_part))
    }
}

impl PartialOrd for ExtendedWelfare {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for ExtendedWelfare {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for ExtendedWelfare {}

impl fmt::Display for ExtendedWelfare {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.neg_inf_count {
            0 => write!(f, "{}", self.finite_part),
            1 => write!(
                f,
                "-inf (1 agent at -inf; finite part {})",
                self.finite_part
            ),
            c => write!(
                f,
                "-inf ({c} agents at -inf; finite part {})",
                self.finite_part
            ),
        }
    }
}

/// Σ_i f(u_i), summed in agent order.
pub fn welfare_of_utilities(
    utilities: &[BigRational],
    f: &WelfareFunction,
) -> Result<ExtendedWelfare> {
    let terms = utilities
        .iter()
        .map(|u| evaluate_f(f, u))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExtendedWelfare::from_terms(terms))
}

pub fn allocation_welfare(
    profile: &Profile,
    allocation: &Allocation,
    f: &WelfareFunction,
) -> Result<ExtendedWelfare> {
    allocation.check_fits(profile)?;
    welfare_of_utilities(&allocation.utilities(profile), f)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Visit every allocation.
    #[default]
    Exhaustive,
    /// Depth-first search that skips subtrees whose welfare bound cannot reach the best found.
    BranchAndBound,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolveOptions {
    pub budget: u64,
    pub strategy: Strategy,
    /// Split the exhaustive scan across the rayon pool.
    pub parallel: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            budget: DEFAULT_BUDGET,
            strategy: Strategy::Exhaustive,
            parallel: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    pub allocation: Allocation,
    /// u_i(A_i) for each agent.
    pub utilities: Vec<BigRational>,
    pub welfare: ExtendedWelfare,
    /// Number of allocations attaining the maximum (within [`TIE_TOLERANCE`] for float welfare).
    pub maximizer_set_size: u64,
    /// Product of the positive utilities; only set by [`mnw`].
    pub nash_product: Option<BigRational>,
}

/// Runs `map` over consecutive index chunks and folds the results in index order.
fn scan_chunks<T, M, R>(
    space: &AllocationSpace,
    parallel: bool,
    map: M,
    reduce: R,
) -> Result<Option<T>>
where
    T: Send,
    M: Fn(AllocationIter, u64) -> Result<T> + Sync,
    R: Fn(T, T) -> T + Sync,
{
    let len = space.len();
    let chunks = len.div_ceil(CHUNK);
    let run = |chunk: u64| {
        let start = chunk * CHUNK;
        map(space.range(start, start + CHUNK), start)
    };
    if parallel && chunks > 1 {
        (0..chunks)
            .into_par_iter()
            .map(run)
            .try_reduce_with(|a, b| Ok(reduce(a, b)))
            .transpose()
    } else {
        (0..chunks).map(run).try_fold(None, |acc, next| {
            let next = next?;
            Ok(Some(match acc {
                None => next,
                Some(acc) => reduce(acc, next),
            }))
        })
    }
}

/// Lowest index and count of the allocations satisfying some predicate.
#[derive(Clone, Copy, Debug)]
struct Hits {
    first: Option<u64>,
    count: u64,
}

impl Hits {
    fn merge(self, other: Hits) -> Hits {
        let first = match (self.first, other.first) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        Hits {
            first,
            count: self.count + other.count,
        }
    }
}

fn exhaustive_max(
    profile: &Profile,
    f: &WelfareFunction,
    space: &AllocationSpace,
    parallel: bool,
) -> Result<ExtendedWelfare> {
    let best = scan_chunks(
        space,
        parallel,
        |allocs, _| {
            let mut best: Option<ExtendedWelfare> = None;
            for alloc in allocs {
                let w = welfare_of_utilities(&alloc.utilities(profile), f)?;
                best = Some(best.map_or(w, |b| b.max(w)));
            }
            Ok(best)
        },
        |a, b| match (a, b) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        },
    )?;
    Ok(best.flatten().expect("allocation space is never empty"))
}

fn exhaustive_ties(
    profile: &Profile,
    f: &WelfareFunction,
    space: &AllocationSpace,
    parallel: bool,
    target: ExtendedWelfare,
    collect: bool,
) -> Result<(Hits, Vec<u64>)> {
    let found = scan_chunks(
        space,
        parallel,
        |allocs, start| {
            let mut hits = Hits {
                first: None,
                count: 0,
            };
            let mut indices = Vec::new();
            for (offset, alloc) in allocs.enumerate() {
                let w = welfare_of_utilities(&alloc.utilities(profile), f)?;
                if w.ties(&target, TIE_TOLERANCE) {
                    let index = start + offset as u64;
                    hits.first.get_or_insert(index);
                    hits.count += 1;
                    if collect {
                        indices.push(index);
                    }
                }
            }
            Ok((hits, indices))
        },
        |(ha, mut ia), (hb, ib)| {
            ia.extend(ib);
            (ha.merge(hb), ia)
        },
    )?;
    Ok(found.expect("allocation space is never empty"))
}

/// Depth-first search over goods in index order, agents in ascending order,
/// so leaves are visited in the same lexicographic order as the exhaustive scan.
struct BranchAndBound<'a> {
    profile: &'a Profile,
    f: &'a WelfareFunction,
    /// `remaining[j][i]`: agent i's total utility for goods j.. m-1.
    remaining: Vec<Vec<BigRational>>,
}

enum Phase {
    FindMax(Option<ExtendedWelfare>),
    CountTies {
        target: ExtendedWelfare,
        first: Option<Vec<usize>>,
        count: u64,
    },
}

impl<'a> BranchAndBound<'a> {
    fn new(profile: &'a Profile, f: &'a WelfareFunction) -> Self {
        let (n, m) = (profile.agents(), profile.goods());
        let mut remaining = vec![vec![BigRational::zero(); n]; m + 1];
        for good in (0..m).rev() {
            let next = remaining[good + 1].clone();
            for (agent, (slot, later)) in remaining[good].iter_mut().zip(next).enumerate() {
                *slot = later + profile.utility(agent, good);
            }
        }
        BranchAndBound {
            profile,
            f,
            remaining,
        }
    }

    /// Upper bound for every completion: each agent receives all remaining goods.
    fn bound(&self, depth: usize, utilities: &[BigRational]) -> Result<ExtendedWelfare> {
        let optimistic: Vec<BigRational> = utilities
            .iter()
            .zip(&self.remaining[depth])
            .map(|(u, r)| u + r)
            .collect();
        welfare_of_utilities(&optimistic, self.f)
    }

    fn cannot_reach(bound: &ExtendedWelfare, target: &ExtendedWelfare) -> bool {
        bound.neg_inf_count > target.neg_inf_count
            || (bound.neg_inf_count == target.neg_inf_count
                && bound.finite_part < target.finite_part - TIE_TOLERANCE)
    }

    fn visit(
        &self,
        depth: usize,
        assignment: &mut Vec<usize>,
        utilities: &mut [BigRational],
        phase: &mut Phase,
    ) -> Result<()> {
        if depth == self.profile.goods() {
            let w = welfare_of_utilities(utilities, self.f)?;
            match phase {
                Phase::FindMax(best) => {
                    if best.is_none_or(|b| w > b) {
                        *best = Some(w);
                    }
                }
                Phase::CountTies {
                    target,
                    first,
                    count,
                } => {
                    if w.ties(target, TIE_TOLERANCE) {
                        *count += 1;
                        if first.is_none() {
                            *first = Some(assignment.clone());
                        }
                    }
                }
            }
            return Ok(());
        }
        let target = match phase {
            Phase::FindMax(best) => *best,
            Phase::CountTies { target, .. } => Some(*target),
        };
        if let Some(target) = target {
            if Self::cannot_reach(&self.bound(depth, utilities)?, &target) {
                return Ok(());
            }
        }
        for agent in 0..self.profile.agents() {
            let value = self.profile.utility(agent, depth);
            utilities[agent] += value;
            assignment.push(agent);
            let outcome = self.visit(depth + 1, assignment, utilities, phase);
            assignment.pop();
            utilities[agent] -= value;
            outcome?;
        }
        Ok(())
    }

    fn solve(&self) -> Result<SolveResult> {
        let n = self.profile.agents();
        let mut utilities = vec![BigRational::zero(); n];
        let mut assignment = Vec::with_capacity(self.profile.goods());
        let mut phase = Phase::FindMax(None);
        self.visit(0, &mut assignment, &mut utilities, &mut phase)?;
        let Phase::FindMax(Some(best)) = phase else {
            unreachable!("the first leaf is never pruned")
        };
        let mut phase = Phase::CountTies {
            target: best,
            first: None,
            count: 0,
        };
        self.visit(0, &mut assignment, &mut utilities, &mut phase)?;
        let Phase::CountTies {
            first: Some(first),
            count,
            ..
        } = phase
        else {
            unreachable!("the maximizer itself is never pruned")
        };
        let allocation = Allocation::new(n, first)?;
        let utilities = allocation.utilities(self.profile);
        Ok(SolveResult {
            welfare: welfare_of_utilities(&utilities, self.f)?,
            allocation,
            utilities,
            maximizer_set_size: count,
            nash_product: None,
        })
    }
}

pub fn maximize_welfare(profile: &Profile, f: &WelfareFunction) -> Result<SolveResult> {
    maximize_welfare_with(profile, f, &SolveOptions::default())
}

/// Maximizes Σ_i f(u_i(A_i)) under the [`ExtendedWelfare`] order.
///
/// Among allocations whose welfare ties the maximum within [`TIE_TOLERANCE`],
/// the lexicographically smallest assignment vector is returned.
pub fn maximize_welfare_with(
    profile: &Profile,
    f: &WelfareFunction,
    options: &SolveOptions,
) -> Result<SolveResult> {
    f.validate()?;
    let space = AllocationSpace::for_profile(profile, options.budget)?;
    if options.strategy == Strategy::BranchAndBound {
        return BranchAndBound::new(profile, f).solve();
    }
    let best = exhaustive_max(profile, f, &space, options.parallel)?;
    let (hits, _) = exhaustive_ties(profile, f, &space, options.parallel, best, false)?;
    let allocation = space.get(hits.first.expect("the maximum is attained"));
    let utilities = allocation.utilities(profile);
    Ok(SolveResult {
        welfare: welfare_of_utilities(&utilities, f)?,
        allocation,
        utilities,
        maximizer_set_size: hits.count,
        nash_product: None,
    })
}

/// Every allocation whose welfare ties the maximum, in lexicographic order.
pub fn welfare_maximizers(
    profile: &Profile,
    f: &WelfareFunction,
    budget: u64,
) -> Result<Vec<Allocation>> {
    f.validate()?;
    let space = AllocationSpace::for_profile(profile, budget)?;
    let best = exhaustive_max(profile, f, &space, true)?;
    let (_, indices) = exhaustive_ties(profile, f, &space, true, best, true)?;
    Ok(indices.into_iter().map(|i| space.get(i)).collect())
}

/// Nash welfare key: number of agents with positive utility, then the exact
/// product of those utilities.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct NashKey {
    pub positive_agents: usize,
    pub product: BigRational,
}

impl NashKey {
    pub fn of(utilities: &[BigRational]) -> Self {
        let mut positive_agents = 0;
        let mut product = BigRational::one();
        for u in utilities.iter().filter(|u| u.is_positive()) {
            positive_agents += 1;
            product *= u;
        }
        NashKey {
            positive_agents,
            product,
        }
    }
}

pub fn mnw(profile: &Profile) -> Result<SolveResult> {
    mnw_with_budget(profile, DEFAULT_BUDGET)
}

/// Maximum Nash welfare with exact rational arithmetic.
///
/// Maximizes the number of agents with positive utility first and the product
/// of their utilities second; exact ties go to the smallest assignment vector.
pub fn mnw_with_budget(profile: &Profile, budget: u64) -> Result<SolveResult> {
    let space = AllocationSpace::for_profile(profile, budget)?;
    let best = scan_chunks(
        &space,
        true,
        |allocs, start| {
            let mut best: Option<(NashKey, Hits)> = None;
            for (offset, alloc) in allocs.enumerate() {
                let key = NashKey::of(&alloc.utilities(profile));
                let hit = Hits {
                    first: Some(start + offset as u64),
                    count: 1,
                };
                best = Some(match best {
                    None => (key, hit),
                    Some(current) => merge_nash(current, (key, hit)),
                });
            }
            Ok(best)
        },
        |a, b| match (a, b) {
            (Some(a), Some(b)) => Some(merge_nash(a, b)),
            (a, b) => a.or(b),
        },
    )?;
    let (key, hits) = best.flatten().expect("allocation space is never empty");
    let allocation = space.get(hits.first.expect("nonempty"));
    let utilities = allocation.utilities(profile);
    Ok(SolveResult {
        welfare: welfare_of_utilities(&utilities, &WelfareFunction::NASH)?,
        allocation,
        utilities,
        maximizer_set_size: hits.count,
        nash_product: Some(key.product),
    })
}

fn merge_nash(a: (NashKey, Hits), b: (NashKey, Hits)) -> (NashKey, Hits) {
    match a.0.cmp(&b.0) {
        Ordering::Greater => a,
        Ordering::Less => b,
        Ordering::Equal => (a.0, a.1.merge(b.1)),
    }
}

/// Every exact MNW maximizer, in lexicographic order.
pub fn mnw_maximizers(profile: &Profile, budget: u64) -> Result<Vec<Allocation>> {
    let space = AllocationSpace::for_profile(profile, budget)?;
    let best = NashKey::of(&mnw_with_budget(profile, budget)?.utilities);
    Ok(space
        .iter()
        .filter(|alloc| NashKey::of(&alloc.utilities(profile)) == best)
        .collect())
}

/// An allocation rule: exact MNW, or a float welfarist rule for some f.
#[derive(Clone, Debug, PartialEq)]
pub enum Rule {
    Mnw,
    Welfarist(WelfareFunction),
}

impl Rule {
    pub fn solve(&self, profile: &Profile, options: &SolveOptions) -> Result<SolveResult> {
        match self {
            Rule::Mnw => mnw_with_budget(profile, options.budget),
            Rule::Welfarist(f) => maximize_welfare_with(profile, f, options),
        }
    }

    pub fn maximizers(&self, profile: &Profile, budget: u64) -> Result<Vec<Allocation>> {
        match self {
            Rule::Mnw => mnw_maximizers(profile, budget),
            Rule::Welfarist(f) => welfare_maximizers(profile, f, budget),
        }
    }
}

impl FromStr for Rule {
    type Err = Error;

    /// `mnw` selects the exact Nash rule; anything else is a [`WelfareFunction`] spec.
    fn from_str(text: &str) -> Result<Self> {
        if text.trim() == "mnw" {
            Ok(Rule::Mnw)
        } else {
            text.parse().map(Rule::Welfarist)
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::Mnw => f.write_str("mnw"),
            Rule::Welfarist(func) => func.fmt(f),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Bundle;

    fn q(text: &str) -> BigRational {
        parse_rational(text).unwrap()
    }

    fn theorem_profile() -> Profile {
        Profile::new(vec![
            vec![q("0"), q("2"), q("2")],
            vec![q("1/2"), q("1"), q("1")],
        ])
        .unwrap()
    }

    /// Plain loop over every allocation, independent of the chunked scan.
    fn brute_force(profile: &Profile, f: &WelfareFunction) -> (Vec<usize>, ExtendedWelfare) {
        let space = AllocationSpace::for_profile(profile, DEFAULT_BUDGET).unwrap();
        let mut best: Option<(Vec<usize>, ExtendedWelfare)> = None;
        for alloc in space.iter() {
            let w = allocation_welfare(profile, &alloc, f).unwrap();
            if best.as_ref().is_none_or(|(_, b)| w > *b) {
                best = Some((alloc.assignment().to_vec(), w));
            }
        }
        best.unwrap()
    }

    #[test]
    fn evaluate_f_examples() {
        assert_eq!(
            evaluate_f(&WelfareFunction::NASH, &q("0")).unwrap(),
            f64::NEG_INFINITY
        );
        assert_eq!(
            evaluate_f(&WelfareFunction::UTILITARIAN, &q("5")).unwrap(),
            5.0
        );
        assert_eq!(
            evaluate_f(&WelfareFunction::Power { p: 2.0 }, &q("3/2")).unwrap(),
            2.25
        );
        assert!(evaluate_f(&WelfareFunction::Exp, &q("1000")).is_err());
        assert!(evaluate_f(&WelfareFunction::UTILITARIAN, &q("-1")).is_err());
    }

    #[test]
    fn allocation_welfare_examples() {
        let w = welfare_of_utilities(&[q("1"), q("0")], &WelfareFunction::NASH).unwrap();
        assert_eq!((w.neg_inf_count, w.finite_part), (1, 0.0));
        let w = welfare_of_utilities(&[q("4"), q("1/2")], &WelfareFunction::UTILITARIAN).unwrap();
        assert_eq!((w.neg_inf_count, w.finite_part), (0, 4.5));
        let w = welfare_of_utilities(&[q("3"), q("3")], &WelfareFunction::NASH).unwrap();
        assert_eq!(w.neg_inf_count, 0);
        assert!((w.finite_part - 2.0 * 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn extended_order() {
        let a = ExtendedWelfare::new(0, -100.0);
        let b = ExtendedWelfare::new(1, 100.0);
        let c = ExtendedWelfare::new(1, 5.0);
        assert!(a > b && b > c && a > c);
        assert_eq!(ExtendedWelfare::new(0, -0.0), ExtendedWelfare::new(0, 0.0));
        assert_eq!(b.value(), f64::NEG_INFINITY);
    }

    #[test]
    fn muw_on_theorem_profile() {
        let p = theorem_profile();
        assert_eq!(
            brute_force(&p, &WelfareFunction::UTILITARIAN).0,
            vec![1, 0, 0]
        );
        let result = maximize_welfare(&p, &WelfareFunction::UTILITARIAN).unwrap();
        assert_eq!(result.allocation.bundle(0), Bundle::new([1, 2]));
        assert_eq!(result.allocation.bundle(1), Bundle::new([0]));
        assert_eq!(result.welfare.finite_part, 4.5);
        assert_eq!(result.maximizer_set_size, 1);
    }

    #[test]
    fn log_welfare_example() {
        let p = Profile::from_integers(&[[1, 3], [3, 1]]).unwrap();
        let result = maximize_welfare(&p, &WelfareFunction::NASH).unwrap();
        assert_eq!(result.allocation.assignment(), &[1, 0]);
        assert!((result.welfare.finite_part - 9f64.ln()).abs() < 1e-12);
        assert_eq!(brute_force(&p, &WelfareFunction::NASH).0, vec![1, 0]);
    }

    #[test]
    fn single_agent_gets_everything() {
        let p = Profile::from_integers(&[[3, 0, 2]]).unwrap();
        for f in [
            WelfareFunction::NASH,
            WelfareFunction::UTILITARIAN,
            WelfareFunction::Exp,
        ] {
            let result = maximize_welfare(&p, &f).unwrap();
            assert_eq!(result.allocation.assignment(), &[0, 0, 0]);
        }
        assert_eq!(mnw(&p).unwrap().allocation.assignment(), &[0, 0, 0]);
    }

    #[test]
    fn mnw_examples() {
        let p = Profile::from_integers(&[[1, 3], [3, 1]]).unwrap();
        let result = mnw(&p).unwrap();
        assert_eq!(result.allocation.assignment(), &[1, 0]);
        assert_eq!(result.nash_product, Some(q("9")));
        assert_eq!(result.maximizer_set_size, 1);

        let p = Profile::from_integers(&[[1, 0], [0, 0]]).unwrap();
        let result = mnw(&p).unwrap();
        assert_eq!(result.allocation.assignment(), &[0, 0]);
        assert_eq!(result.nash_product, Some(q("1")));
        // g1 must go to agent 1, g2 is free.
        assert_eq!(result.maximizer_set_size, 2);
        assert_eq!(mnw_maximizers(&p, DEFAULT_BUDGET).unwrap().len(), 2);
    }

    #[test]
    fn maximizer_sets_count_ties() {
        let p = Profile::from_integers(&[[1, 1], [1, 1]]).unwrap();
        let result = maximize_welfare(&p, &WelfareFunction::UTILITARIAN).unwrap();
        assert_eq!(result.maximizer_set_size, 4);
        assert_eq!(result.allocation.assignment(), &[0, 0]);
        let all = welfare_maximizers(&p, &WelfareFunction::UTILITARIAN, DEFAULT_BUDGET).unwrap();
        assert_eq!(all.len(), 4);
    }

    #[test]
    fn all_neg_inf_falls_back_to_fewest() {
        // Three agents, two goods: someone always has zero utility.
        let p = Profile::from_integers(&[[1, 1], [1, 1], [1, 1]]).unwrap();
        let result = maximize_welfare(&p, &WelfareFunction::NASH).unwrap();
        assert_eq!(result.welfare.neg_inf_count, 1);
        assert_eq!(result.allocation.assignment(), &[0, 1]);
        assert_eq!(result.maximizer_set_size, 6);
    }

    #[test]
    fn branch_and_bound_matches_scan() {
        let p = theorem_profile();
        let fs = [
            WelfareFunction::NASH,
            WelfareFunction::UTILITARIAN,
            WelfareFunction::Power { p: 2.0 },
            WelfareFunction::Power { p: 0.5 },
            WelfareFunction::Exp,
        ];
        let bnb = SolveOptions {
            strategy: Strategy::BranchAndBound,
            ..SolveOptions::default()
        };
        for f in &fs {
            assert_eq!(
                maximize_welfare(&p, f).unwrap(),
                maximize_welfare_with(&p, f, &bnb).unwrap(),
                "{f}"
            );
        }
    }

    #[test]
    fn budget_is_enforced() {
        let p = Profile::from_integers(&[[1; 5], [1; 5]]).unwrap();
        let tight = SolveOptions {
            budget: 31,
            ..SolveOptions::default()
        };
        assert!(maximize_welfare_with(&p, &WelfareFunction::NASH, &tight)
            .unwrap_err()
            .is_capacity());
        assert!(mnw_with_budget(&p, 31).unwrap_err().is_capacity());
    }

    #[test]
    fn parses_function_specs() {
        assert_eq!(
            "log".parse::<WelfareFunction>().unwrap(),
            WelfareFunction::NASH
        );
        assert_eq!(
            "affine:1,0".parse::<WelfareFunction>().unwrap(),
            WelfareFunction::UTILITARIAN
        );
        assert_eq!(
            "power:1/2".parse::<WelfareFunction>().unwrap(),
            WelfareFunction::Power { p: 0.5 }
        );
        assert_eq!(
            "log:3,2".parse::<WelfareFunction>().unwrap(),
            WelfareFunction::LogAffine { a: 3.0, b: 2.0 }
        );
        assert_eq!(
            "exp".parse::<WelfareFunction>().unwrap(),
            WelfareFunction::Exp
        );
        let custom: WelfareFunction = "expr:3*ln(x)+2".parse().unwrap();
        assert_eq!(custom.to_string(), "expr:3*ln(x)+2");
        assert_eq!("mnw".parse::<Rule>().unwrap(), Rule::Mnw);

        assert!("affine:0,1".parse::<WelfareFunction>().is_err());
        assert!("power:-1".parse::<WelfareFunction>().is_err());
        assert!("expr:-x".parse::<WelfareFunction>().is_err());
        assert!("expr:x^2 - 4*x".parse::<WelfareFunction>().is_err());
        assert!("expr:ln(".parse::<WelfareFunction>().is_err());
        assert!("cubic".parse::<WelfareFunction>().is_err());
    }

    #[test]
    fn builtins_agree_with_expressions() {
        let pairs = [
            (WelfareFunction::Power { p: 2.0 }, "x^2"),
            (WelfareFunction::LogAffine { a: 3.0, b: 2.0 }, "3*ln(x)+2"),
            (WelfareFunction::Affine { a: 0.5, b: -1.0 }, "x/2 - 1"),
            (WelfareFunction::Power { p: 0.5 }, "sqrt(x)"),
            (WelfareFunction::Exp, "exp(x)"),
        ];
        for (builtin, source) in pairs {
            let custom = WelfareFunction::custom(source).unwrap();
            for i in 1..=200 {
                let x = i as f64 / 20.0;
                let (a, b) = (builtin.eval(x).unwrap(), custom.eval(x).unwrap());
                assert!(
                    (a - b).abs() <= 1e-12 * a.abs().max(1.0),
                    "{source} at {x}: {a} vs {b}"
                );
            }
        }
    }
}
