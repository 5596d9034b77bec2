//! EF, EF1, and Pareto optimality checks with witnesses.

use num_rational::BigRational;
use rayon::prelude::*;

use crate::error::Result;
use crate::model::{Allocation, AllocationSpace, Profile, DEFAULT_BUDGET};

/// Envy of `envier` toward `envied` that no single-good removal eliminates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ef1Violation {
    pub envier: usize,
    pub envied: usize,
    /// For every good g in the envied bundle: u_i(A_j \ {g}) − u_i(A_i), all positive.
    pub gaps: Vec<(usize, BigRational)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ef1Verdict {
    pub holds: bool,
    pub violations: Vec<Ef1Violation>,
}

pub fn is_ef1(profile: &Profile, allocation: &Allocation) -> Result<Ef1Verdict> {
    allocation.check_fits(profile)?;
    let bundles = allocation.bundles();
    let values = allocation.utility_matrix(profile);
    let mut violations = Vec::new();
    for (envier, row) in values.iter().enumerate() {
        let own = &row[envier];
        for (envied, bundle) in bundles.iter().enumerate() {
            if envied == envier || bundle.is_empty() {
                continue;
            }
            let gaps: Vec<(usize, BigRational)> = bundle
                .goods()
                .map(|g| (g, &row[envied] - profile.utility(envier, g) - own))
                .collect();
            if gaps.iter().all(|(_, gap)| *gap > BigRational::default()) {
                violations.push(Ef1Violation {
                    envier,
                    envied,
                    gaps,
                });
            }
        }
    }
    Ok(Ef1Verdict {
        holds: violations.is_empty(),
        violations,
    })
}

/// `envier` values `envied`'s bundle strictly more than their own.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Envy {
    pub envier: usize,
    pub envied: usize,
    pub own_value: BigRational,
    pub other_value: BigRational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EfVerdict {
    pub holds: bool,
    pub envy: Vec<Envy>,
}

pub fn is_ef(profile: &Profile, allocation: &Allocation) -> Result<EfVerdict> {
    allocation.check_fits(profile)?;
    let values = allocation.utility_matrix(profile);
    let mut envy = Vec::new();
    for (envier, row) in values.iter().enumerate() {
        for (envied, other) in row.iter().enumerate() {
            if *other > row[envier] {
                envy.push(Envy {
                    envier,
                    envied,
                    own_value: row[envier].clone(),
                    other_value: other.clone(),
                });
            }
        }
    }
    Ok(EfVerdict {
        holds: envy.is_empty(),
        envy,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParetoVerdict {
    pub optimal: bool,
    /// The lexicographically first Pareto improvement, when one exists.
    pub dominating_allocation: Option<Allocation>,
}

/// `candidate` gives every agent at least `current` and someone strictly more.
pub fn dominates(candidate: &[BigRational], current: &[BigRational]) -> bool {
    candidate.iter().zip(current).all(|(c, u)| c >= u)
        && candidate.iter().zip(current).any(|(c, u)| c > u)
}

pub fn is_pareto_optimal(profile: &Profile, allocation: &Allocation) -> Result<ParetoVerdict> {
    is_pareto_optimal_with_budget(profile, allocation, DEFAULT_BUDGET)
}

/// Exhaustive Pareto check. The scan is split across the rayon pool but always
/// reports the first dominating allocation in lexicographic order.
pub fn is_pareto_optimal_with_budget(
    profile: &Profile,
    allocation: &Allocation,
    budget: u64,
) -> Result<ParetoVerdict> {
    allocation.check_fits(profile)?;
    let space = AllocationSpace::for_profile(profile, budget)?;
    let current = allocation.utilities(profile);
    const CHUNK: u64 = 512;
    let dominator = (0..space.len().div_ceil(CHUNK))
        .into_par_iter()
        .map(|chunk| {
            space
                .range(chunk * CHUNK, (chunk + 1) * CHUNK)
                .find(|alloc| dominates(&alloc.utilities(profile), &current))
        })
        .find_first(Option::is_some)
        .flatten();
    Ok(ParetoVerdict {
        optimal: dominator.is_none(),
        dominating_allocation: dominator,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_rational, Bundle};

    fn q(text: &str) -> BigRational {
        parse_rational(text).unwrap()
    }

    fn alloc(goods: usize, bundles: &[&[usize]]) -> Allocation {
        let bundles: Vec<Bundle> = bundles
            .iter()
            .map(|b| Bundle::new(b.iter().copied()))
            .collect();
        Allocation::from_bundles(goods, &bundles).unwrap()
    }

    #[test]
    fn ef1_violation_witness() {
        let p = Profile::new(vec![
            vec![q("0"), q("2"), q("2")],
            vec![q("1/2"), q("1"), q("1")],
        ])
        .unwrap();
        let verdict = is_ef1(&p, &alloc(3, &[&[1, 2], &[0]])).unwrap();
        assert!(!verdict.holds);
        assert_eq!(
            verdict.violations,
            vec![Ef1Violation {
                envier: 1,
                envied: 0,
                gaps: vec![(1, q("1/2")), (2, q("1/2"))],
            }]
        );
    }

    #[test]
    fn ef1_trivial_cases() {
        let single = Profile::from_integers(&[[3, 1, 4]]).unwrap();
        assert!(is_ef1(&single, &alloc(3, &[&[0, 1, 2]])).unwrap().holds);
        let same = Profile::from_integers(&[[1, 1], [1, 1]]).unwrap();
        let split = alloc(2, &[&[0], &[1]]);
        assert!(is_ef1(&same, &split).unwrap().holds);
        assert!(is_ef(&same, &split).unwrap().holds);
        // Everything to one agent: removing one of two goods still leaves envy.
        let verdict = is_ef1(&same, &alloc(2, &[&[0, 1], &[]])).unwrap();
        assert!(!verdict.holds);
        assert_eq!(
            (verdict.violations[0].envier, verdict.violations[0].envied),
            (1, 0)
        );
    }

    #[test]
    fn ef_envy_witness() {
        let p = Profile::from_integers(&[[2, 1], [2, 1]]).unwrap();
        let verdict = is_ef(&p, &alloc(2, &[&[0], &[1]])).unwrap();
        assert!(!verdict.holds);
        assert_eq!(
            verdict.envy,
            vec![Envy {
                envier: 1,
                envied: 0,
                own_value: q("1"),
                other_value: q("2"),
            }]
        );
    }

    #[test]
    fn pareto_examples() {
        let p = Profile::from_integers(&[[1, 0], [0, 1]]).unwrap();
        let swapped = alloc(2, &[&[1], &[0]]);
        let verdict = is_pareto_optimal(&p, &swapped).unwrap();
        assert!(!verdict.optimal);
        // (1, 0) from giving agent 1 both goods already improves on (0, 0);
        // it precedes the (1, 1) split in lexicographic order.
        assert_eq!(
            verdict.dominating_allocation,
            Some(alloc(2, &[&[0, 1], &[]]))
        );
        let split = alloc(2, &[&[0], &[1]]);
        assert!(dominates(&split.utilities(&p), &swapped.utilities(&p)));
        let verdict = is_pareto_optimal(&p, &alloc(2, &[&[0], &[1]])).unwrap();
        assert!(verdict.optimal);
        assert_eq!(verdict.dominating_allocation, None);
    }

    #[test]
    fn pareto_reports_first_dominator() {
        // Agent 1 values nothing, so handing agent 2 any good is an improvement.
        let p = Profile::from_integers(&[[1, 1, 1], [1, 1, 1]]).unwrap();
        let worst = Profile::from_integers(&[[0, 0, 0], [1, 1, 1]]).unwrap();
        let start = alloc(3, &[&[0, 1, 2], &[]]);
        let verdict = is_pareto_optimal(&worst, &start).unwrap();
        assert_eq!(
            verdict.dominating_allocation.unwrap().assignment(),
            &[0, 0, 1]
        );
        assert!(is_pareto_optimal(&p, &start).unwrap().optimal);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let p = Profile::from_integers(&[[1, 0], [0, 1]]).unwrap();
        let wrong = alloc(3, &[&[0], &[1, 2]]);
        assert!(is_ef1(&p, &wrong).is_err());
        assert!(is_ef(&p, &wrong).is_err());
        assert!(is_pareto_optimal(&p, &wrong).is_err());
    }
}
