//! Profiles, bundles, allocations, and exhaustive allocation enumeration.
//!
//! Agents and goods are 0-based everywhere in the Rust API. The text formats
//! and human-readable reports use 1-based labels (`agent 1`, `g1`).

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};

/// Default cap on the number of allocations an exhaustive scan may visit.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Parses an integer or a `p/q` rational with `q > 0`.
pub fn parse_rational(text: &str) -> std::result::Result<BigRational, String> {
    let text = text.trim();
    let (num, den) = match text.split_once('/') {
        Some((p, q)) => (p.trim(), Some(q.trim())),
        None => (text, None),
    };
    let numer: BigInt = num
        .parse()
        .map_err(|_| format!("`{text}` is not an integer or p/q rational"))?;
    let denom: BigInt = match den {
        Some(q) => q
            .parse()
            .map_err(|_| format!("`{text}` has a malformed denominator"))?,
        None => BigInt::from(1),
    };
    if !denom.is_positive() {
        return Err(format!("`{text}` must have a positive denominator"));
    }
    Ok(BigRational::new(numer, denom))
}

/// Renders a rational as an integer when possible and `p/q` otherwise.
pub fn format_rational(value: &BigRational) -> String {
    if value.is_integer() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// JSON form of a rational: a number when it fits in an `i64`, a string otherwise.
pub(crate) fn rational_to_json(value: &BigRational) -> Value {
    if value.is_integer() {
        if let Ok(v) = i64::try_from(value.numer()) {
            return json!(v);
        }
    }
    Value::String(format_rational(value))
}

/// A fair-division instance with additive utilities.
///
/// Entry `(i, j)` of the utility matrix is agent `i`'s value for good `j`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Profile {
    goods: usize,
    utilities: Vec<Vec<BigRational>>,
}

impl Profile {
    pub fn new(utilities: Vec<Vec<BigRational>>) -> Result<Self> {
        let Some(first) = utilities.first() else {
            return Err(Error::InvalidArgument(
                "a profile needs at least one agent".into(),
            ));
        };
        let goods = first.len();
        for (agent, row) in utilities.iter().enumerate() {
            if row.len() != goods {
                return Err(Error::Dimension(format!(
                    "agent {} has {} utilities, expected {goods}",
                    agent + 1,
                    row.len()
                )));
            }
            if let Some(good) = row.iter().position(|u| u.is_negative()) {
                return Err(Error::NegativeUtility {
                    agent: agent + 1,
                    good: good + 1,
                    value: format_rational(&row[good]),
                });
            }
        }
        Ok(Profile { goods, utilities })
    }

    /// Builds a profile with `goods` columns even when there are no goods.
    pub fn with_goods(
        agents: usize,
        goods: usize,
        utilities: Vec<Vec<BigRational>>,
    ) -> Result<Self> {
        if utilities.len() != agents {
            return Err(Error::Dimension(format!(
                "expected {agents} utility rows, found {}",
                utilities.len()
            )));
        }
        let profile = Profile::new(utilities)?;
        if profile.goods != goods {
            return Err(Error::Dimension(format!(
                "expected {goods} goods, found {}",
                profile.goods
            )));
        }
        Ok(profile)
    }

    pub fn from_integers<R: AsRef<[i64]>>(rows: &[R]) -> Result<Self> {
        Profile::new(
            rows.iter()
                .map(|r| {
                    r.as_ref()
                        .iter()
                        .map(|&v| BigRational::from_integer(v.into()))
                        .collect()
                })
                .collect(),
        )
    }

    pub fn agents(&self) -> usize {
        self.utilities.len()
    }

    pub fn goods(&self) -> usize {
        self.goods
    }

    pub fn utility(&self, agent: usize, good: usize) -> &BigRational {
        &self.utilities[agent][good]
    }

    pub fn row(&self, agent: usize) -> &[BigRational] {
        &self.utilities[agent]
    }

    pub fn rows(&self) -> &[Vec<BigRational>] {
        &self.utilities
    }

    /// Whether some allocation gives every agent positive utility.
    ///
    /// With more agents than goods this is impossible; otherwise it is a
    /// bipartite matching question, which is answered by augmenting paths.
    pub fn admits_all_positive(&self) -> bool {
        let n = self.agents();
        if n > self.goods {
            return false;
        }
        let mut owner: Vec<Option<usize>> = vec![None; self.goods];
        fn augment(
            p: &Profile,
            agent: usize,
            seen: &mut [bool],
            owner: &mut [Option<usize>],
        ) -> bool {
            for good in 0..p.goods {
                if p.utility(agent, good).is_positive() && !seen[good] {
                    seen[good] = true;
                    if owner[good].is_none_or(|other| augment(p, other, seen, owner)) {
                        owner[good] = Some(agent);
                        return true;
                    }
                }
            }
            false
        }
        (0..n).all(|agent| augment(self, agent, &mut vec![false; self.goods], &mut owner))
    }

    pub fn to_json(&self) -> Value {
        json!({
            "agents": self.agents(),
            "goods": self.goods,
            "utilities": self
                .utilities
                .iter()
                .map(|row| row.iter().map(rational_to_json).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("profile json")
    }
}

/// Parses a profile from its JSON text form.
pub fn load_profile(text: &str) -> Result<Profile> {
    let value: Value = serde_json::from_str(text).map_err(|e| {
        Error::parse(
            format!("line {}, column {}", e.line(), e.column()),
            e.to_string(),
        )
    })?;
    let obj = value
        .as_object()
        .ok_or_else(|| Error::parse("top level", "expected an object"))?;
    let agents = count_field(obj, "agents")?;
    let goods = count_field(obj, "goods")?;
    if agents == 0 {
        return Err(Error::parse(
            "field `agents`",
            "at least one agent is required",
        ));
    }
    let rows = obj
        .get("utilities")
        .ok_or_else(|| Error::parse("field `utilities`", "missing"))?
        .as_array()
        .ok_or_else(|| Error::parse("field `utilities`", "expected an array of rows"))?;
    if rows.len() != agents {
        return Err(Error::parse(
            "field `utilities`",
            format!("expected {agents} rows, found {}", rows.len()),
        ));
    }
    let mut matrix = Vec::with_capacity(agents);
    for (i, row) in rows.iter().enumerate() {
        let row = row
            .as_array()
            .ok_or_else(|| Error::parse(format!("field `utilities[{i}]`"), "expected an array"))?;
        if row.len() != goods {
            return Err(Error::parse(
                format!("field `utilities[{i}]`"),
                format!("expected {goods} entries, found {}", row.len()),
            ));
        }
        let mut parsed = Vec::with_capacity(goods);
        for (j, entry) in row.iter().enumerate() {
            let location = format!("field `utilities[{i}][{j}]`");
            let value = match entry {
                Value::Number(num) => match num.as_i64() {
                    Some(v) => BigRational::from_integer(v.into()),
                    None => match num.as_u64() {
                        Some(v) => BigRational::from_integer(v.into()),
                        None => {
                            return Err(Error::parse(
                                location,
                                "expected an integer or a \"p/q\" string",
                            ))
                        }
                    },
                },
                Value::String(s) => parse_rational(s).map_err(|m| Error::parse(location, m))?,
                _ => {
                    return Err(Error::parse(
                        location,
                        "expected an integer or a \"p/q\" string",
                    ))
                }
            };
            if value.is_negative() {
                return Err(Error::NegativeUtility {
                    agent: i + 1,
                    good: j + 1,
                    value: format_rational(&value),
                });
            }
            parsed.push(value);
        }
        matrix.push(parsed);
    }
    Ok(Profile {
        goods,
        utilities: matrix,
    })
}

fn count_field(obj: &Map<String, Value>, name: &str) -> Result<usize> {
    obj.get(name)
        .ok_or_else(|| Error::parse(format!("field `{name}`"), "missing"))?
        .as_u64()
        .and_then(|v| usize::try_from(v).ok())
        .ok_or_else(|| Error::parse(format!("field `{name}`"), "expected a nonnegative integer"))
}

/// A set of good indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Bundle(BTreeSet<usize>);

impl Bundle {
    pub fn new(goods: impl IntoIterator<Item = usize>) -> Self {
        Bundle(goods.into_iter().collect())
    }

    pub fn goods(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn contains(&self, good: usize) -> bool {
        self.0.contains(&good)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn without(&self, good: usize) -> Bundle {
        let mut rest = self.0.clone();
        rest.remove(&good);
        Bundle(rest)
    }

    pub fn union(&self, other: &Bundle) -> Bundle {
        Bundle(self.0.union(&other.0).copied().collect())
    }
}

impl fmt::Display for Bundle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (idx, good) in self.0.iter().enumerate() {
            if idx > 0 {
                f.write_str(", ")?;
            }
            write!(f, "g{}", good + 1)?;
        }
        f.write_str("}")
    }
}

/// u_i(G') for an additive utility function.
pub fn bundle_utility(profile: &Profile, agent: usize, bundle: &Bundle) -> Result<BigRational> {
    if agent >= profile.agents() {
        return Err(Error::AgentIndex {
            agent,
            agents: profile.agents(),
        });
    }
    let row = profile.row(agent);
    bundle.goods().try_fold(BigRational::zero(), |acc, good| {
        row.get(good).map(|u| acc + u).ok_or(Error::GoodIndex {
            good,
            goods: profile.goods(),
        })
    })
}

/// An ordered partition of the goods, stored as the owner of each good.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Allocation {
    agents: usize,
    assignment: Vec<usize>,
}

impl Allocation {
    pub fn new(agents: usize, assignment: Vec<usize>) -> Result<Self> {
        if agents == 0 {
            return Err(Error::InvalidArgument(
                "an allocation needs at least one agent".into(),
            ));
        }
        if let Some(&agent) = assignment.iter().find(|&&a| a >= agents) {
            return Err(Error::AgentIndex { agent, agents });
        }
        Ok(Allocation { agents, assignment })
    }

    pub fn from_bundles(goods: usize, bundles: &[Bundle]) -> Result<Self> {
        let mut assignment = vec![None; goods];
        for (agent, bundle) in bundles.iter().enumerate() {
            for good in bundle.goods() {
                let slot = assignment
                    .get_mut(good)
                    .ok_or(Error::GoodIndex { good, goods })?;
                if slot.is_some() {
                    return Err(Error::Dimension(format!(
                        "good g{} assigned twice",
                        good + 1
                    )));
                }
                *slot = Some(agent);
            }
        }
        let assignment = assignment
            .into_iter()
            .enumerate()
            .map(|(good, a)| {
                a.ok_or_else(|| Error::Dimension(format!("good g{} is unassigned", good + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        Allocation::new(bundles.len(), assignment)
    }

    pub fn agents(&self) -> usize {
        self.agents
    }

    pub fn goods(&self) -> usize {
        self.assignment.len()
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn owner(&self, good: usize) -> usize {
        self.assignment[good]
    }

    pub fn bundle(&self, agent: usize) -> Bundle {
        Bundle::new(
            self.assignment
                .iter()
                .enumerate()
                .filter(|&(_, &a)| a == agent)
                .map(|(g, _)| g),
        )
    }

    pub fn bundles(&self) -> Vec<Bundle> {
        (0..self.agents).map(|a| self.bundle(a)).collect()
    }

    pub fn check_fits(&self, profile: &Profile) -> Result<()> {
        if self.agents != profile.agents() || self.goods() != profile.goods() {
            return Err(Error::Dimension(format!(
                "allocation is {} agents x {} goods, profile is {} x {}",
                self.agents,
                self.goods(),
                profile.agents(),
                profile.goods()
            )));
        }
        Ok(())
    }

    /// Each agent's utility for their own bundle.
    pub fn utilities(&self, profile: &Profile) -> Vec<BigRational> {
        let mut totals = vec![BigRational::zero(); self.agents];
        for (good, &agent) in self.assignment.iter().enumerate() {
            totals[agent] += profile.utility(agent, good);
        }
        totals
    }

    /// Utility each agent assigns to each agent's bundle: `matrix[i][j] = u_i(A_j)`.
    pub fn utility_matrix(&self, profile: &Profile) -> Vec<Vec<BigRational>> {
        let n = self.agents;
        let mut matrix = vec![vec![BigRational::zero(); n]; n];
        for (good, &owner) in self.assignment.iter().enumerate() {
            for (agent, row) in matrix.iter_mut().enumerate() {
                row[owner] += profile.utility(agent, good);
            }
        }
        matrix
    }

    pub fn to_json(&self) -> Value {
        json!({
            "agents": self.agents,
            "assignment": self.assignment.iter().map(|a| a + 1).collect::<Vec<_>>(),
        })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("allocation json")
    }
}

impl fmt::Display for Allocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (agent, bundle) in self.bundles().iter().enumerate() {
            if agent > 0 {
                f.write_str(", ")?;
            }
            write!(f, "A{}={}", agent + 1, bundle)?;
        }
        Ok(())
    }
}

/// Parses an allocation file: `{"assignment": [owner of g1, owner of g2, ...]}`
/// with 1-based agent labels. An optional `agents` field must match the profile.
pub fn load_allocation(text: &str, profile: &Profile) -> Result<Allocation> {
    let value: Value = serde_json::from_str(text).map_err(|e| {
        Error::parse(
            format!("line {}, column {}", e.line(), e.column()),
            e.to_string(),
        )
    })?;
    let obj = value
        .as_object()
        .ok_or_else(|| Error::parse("top level", "expected an object"))?;
    if let Some(agents) = obj.get("agents") {
        if agents.as_u64() != Some(profile.agents() as u64) {
            return Err(Error::parse(
                "field `agents`",
                format!("expected {} to match the profile", profile.agents()),
            ));
        }
    }
    let entries = obj
        .get("assignment")
        .ok_or_else(|| Error::parse("field `assignment`", "missing"))?
        .as_array()
        .ok_or_else(|| Error::parse("field `assignment`", "expected an array"))?;
    if entries.len() != profile.goods() {
        return Err(Error::parse(
            "field `assignment`",
            format!(
                "expected an owner for each of {} goods, found {}",
                profile.goods(),
                entries.len()
            ),
        ));
    }
    let n = profile.agents() as u64;
    let assignment = entries
        .iter()
        .enumerate()
        .map(|(good, entry)| match entry.as_u64() {
            Some(a) if (1..=n).contains(&a) => Ok(a as usize - 1),
            _ => Err(Error::parse(
                format!("field `assignment[{good}]`"),
                format!("good g{} must be assigned to an agent in 1..={n}", good + 1),
            )),
        })
        .collect::<Result<Vec<_>>>()?;
    Allocation::new(profile.agents(), assignment)
}

/// The n^m assignment vectors of a profile, in lexicographic order.
///
/// Index `i` decodes to the base-n digits of `i`, most significant digit first,
/// so ranges of indices partition the space for parallel consumers.
#[derive(Clone, Copy, Debug)]
pub struct AllocationSpace {
    agents: usize,
    goods: usize,
    len: u64,
}

impl AllocationSpace {
    pub fn new(agents: usize, goods: usize, budget: u64) -> Result<Self> {
        if agents == 0 {
            return Err(Error::InvalidArgument(
                "at least one agent is required".into(),
            ));
        }
        let len = u32::try_from(goods)
            .ok()
            .and_then(|m| (agents as u64).checked_pow(m))
            .filter(|&len| len <= budget);
        match len {
            Some(len) => Ok(AllocationSpace { agents, goods, len }),
            None => Err(Error::Capacity {
                agents,
                goods,
                count: BigUint::from(agents).pow(goods as u32).to_string(),
                budget,
            }),
        }
    }

    pub fn for_profile(profile: &Profile, budget: u64) -> Result<Self> {
        AllocationSpace::new(profile.agents(), profile.goods(), budget)
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn agents(&self) -> usize {
        self.agents
    }

    pub fn goods(&self) -> usize {
        self.goods
    }

    pub fn get(&self, index: u64) -> Allocation {
        assert!(index < self.len, "allocation index {index} out of range");
        let n = self.agents as u64;
        let mut rest = index;
        let mut assignment = vec![0; self.goods];
        for slot in assignment.iter_mut().rev() {
            *slot = (rest % n) as usize;
            rest /= n;
        }
        Allocation {
            agents: self.agents,
            assignment,
        }
    }

    pub fn iter(&self) -> AllocationIter {
        self.range(0, self.len)
    }

    /// Allocations with indices in `start..end`, in order.
    pub fn range(&self, start: u64, end: u64) -> AllocationIter {
        let end = end.min(self.len);
        AllocationIter {
            next: (start < end).then(|| self.get(start)),
            remaining: end.saturating_sub(start),
        }
    }
}

/// Odometer over assignment vectors; the last good varies fastest.
#[derive(Clone, Debug)]
pub struct AllocationIter {
    next: Option<Allocation>,
    remaining: u64,
}

impl Iterator for AllocationIter {
    type Item = Allocation;

    fn next(&mut self) -> Option<Allocation> {
        if self.remaining == 0 {
            return None;
        }
        let current = self.next.take()?;
        self.remaining -= 1;
        if self.remaining > 0 {
            let mut following = current.clone();
            for slot in following.assignment.iter_mut().rev() {
                *slot += 1;
                if *slot < following.agents {
                    break;
                }
                *slot = 0;
            }
            self.next = Some(following);
        }
        Some(current)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = usize::try_from(self.remaining).unwrap_or(usize::MAX);
        (n, Some(n))
    }
}

pub fn enumerate_allocations(profile: &Profile) -> Result<AllocationIter> {
    enumerate_allocations_with_budget(profile, DEFAULT_BUDGET)
}

pub fn enumerate_allocations_with_budget(profile: &Profile, budget: u64) -> Result<AllocationIter> {
    Ok(AllocationSpace::for_profile(profile, budget)?.iter())
}

/// Parameters for seeded random integer profiles.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RandomProfiles {
    pub agents: usize,
    pub goods: usize,
    pub min_utility: u64,
    pub max_utility: u64,
    /// Resample any all-zero row so every agent can get positive utility.
    pub positive_rows: bool,
}

impl RandomProfiles {
    /// The `index`-th profile of the stream for `seed`.
    ///
    /// Each index draws from its own ChaCha stream, so instance `i` does not
    /// depend on how many instances were generated before it.
    pub fn generate(&self, seed: u64, index: u64) -> Result<Profile> {
        if self.agents == 0 || self.min_utility > self.max_utility {
            return Err(Error::InvalidArgument(format!(
                "cannot generate profiles with {} agents and utilities in [{}, {}]",
                self.agents, self.min_utility, self.max_utility
            )));
        }
        if self.positive_rows && self.max_utility == 0 && self.goods > 0 {
            return Err(Error::InvalidArgument(
                "positive rows need a positive maximum utility".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let rows = (0..self.agents)
            .map(|_| loop {
                let row: Vec<u64> = (0..self.goods)
                    .map(|_| rng.random_range(self.min_utility..=self.max_utility))
                    .collect();
                if !self.positive_rows || self.goods == 0 || row.iter().any(|&u| u > 0) {
                    break row
                        .into_iter()
                        .map(|u| BigRational::from_integer(u.into()))
                        .collect();
                }
            })
            .collect();
        Profile::with_goods(self.agents, self.goods, rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(text: &str) -> BigRational {
        parse_rational(text).unwrap()
    }

    fn sample() -> Profile {
        Profile::new(vec![
            vec![q("0"), q("2"), q("2")],
            vec![q("1/2"), q("1"), q("1")],
        ])
        .unwrap()
    }

    #[test]
    fn bundle_utility_examples() {
        let p = sample();
        assert_eq!(bundle_utility(&p, 0, &Bundle::new([1, 2])).unwrap(), q("4"));
        assert_eq!(bundle_utility(&p, 0, &Bundle::default()).unwrap(), q("0"));
        assert_eq!(
            bundle_utility(&p, 1, &Bundle::new([0, 1, 2])).unwrap(),
            q("5/2")
        );
    }

    #[test]
    fn bundle_utility_index_errors() {
        let p = sample();
        assert!(matches!(
            bundle_utility(&p, 2, &Bundle::default()),
            Err(Error::AgentIndex {
                agent: 2,
                agents: 2
            })
        ));
        assert!(matches!(
            bundle_utility(&p, 0, &Bundle::new([3])),
            Err(Error::GoodIndex { good: 3, goods: 3 })
        ));
    }

    #[test]
    fn enumeration_counts() {
        let two_by_two = Profile::from_integers(&[[1, 1], [1, 1]]).unwrap();
        assert_eq!(enumerate_allocations(&two_by_two).unwrap().count(), 4);
        let three_by_two = Profile::from_integers(&[[1, 1], [1, 1], [1, 1]]).unwrap();
        assert_eq!(enumerate_allocations(&three_by_two).unwrap().count(), 9);
        let no_goods = Profile::with_goods(2, 0, vec![vec![], vec![]]).unwrap();
        let all: Vec<_> = enumerate_allocations(&no_goods).unwrap().collect();
        assert_eq!(all.len(), 1);
        assert!(all[0].bundles().iter().all(Bundle::is_empty));
    }

    #[test]
    fn enumeration_is_lexicographic() {
        let space = AllocationSpace::new(2, 2, DEFAULT_BUDGET).unwrap();
        let seen: Vec<Vec<usize>> = space.iter().map(|a| a.assignment().to_vec()).collect();
        assert_eq!(seen, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        for (index, alloc) in space.iter().enumerate() {
            assert_eq!(space.get(index as u64), alloc);
        }
    }

    #[test]
    fn ranges_partition_the_space() {
        let space = AllocationSpace::new(3, 4, DEFAULT_BUDGET).unwrap();
        let whole: Vec<_> = space.iter().collect();
        let pieces: Vec<_> = space
            .range(0, 10)
            .chain(space.range(10, 50))
            .chain(space.range(50, 1000))
            .collect();
        assert_eq!(whole, pieces);
    }

    #[test]
    fn budget_exceeded_names_the_count() {
        let err = AllocationSpace::new(3, 20, DEFAULT_BUDGET).unwrap_err();
        let msg = err.to_string();
        assert!(err.is_capacity());
        assert!(msg.contains("3^20"), "{msg}");
        assert!(msg.contains("3486784401"), "{msg}");
        assert!(AllocationSpace::new(10, 100, DEFAULT_BUDGET)
            .unwrap_err()
            .is_capacity());
        assert!(AllocationSpace::new(2, 3, 7).is_err());
        assert_eq!(AllocationSpace::new(2, 3, 8).unwrap().len(), 8);
    }

    #[test]
    fn load_profile_matches_constructor() {
        let text = r#"{ "agents": 2, "goods": 3, "utilities": [[0, 2, 2], ["1/2", 1, "1"]] }"#;
        assert_eq!(load_profile(text).unwrap(), sample());
    }

    #[test]
    fn load_profile_rejects_negative() {
        let text = r#"{"agents": 1, "goods": 2, "utilities": [[1, -1]]}"#;
        assert!(matches!(
            load_profile(text),
            Err(Error::NegativeUtility {
                agent: 1,
                good: 2,
                ..
            })
        ));
        let text = r#"{"agents": 1, "goods": 1, "utilities": [["-1/3"]]}"#;
        assert!(matches!(
            load_profile(text),
            Err(Error::NegativeUtility { .. })
        ));
    }

    #[test]
    fn load_profile_without_goods() {
        let p = load_profile(r#"{"agents": 2, "goods": 0, "utilities": [[], []]}"#).unwrap();
        assert_eq!((p.agents(), p.goods()), (2, 0));
    }

    #[test]
    fn load_profile_reports_locations() {
        let err =
            load_profile("{\n  \"agents\": 2,\n  \"goods\": 1,\n  \"utilities\": [[1] [2]]\n}")
                .unwrap_err();
        assert!(err.to_string().contains("line 4"), "{err}");
        let err =
            load_profile(r#"{"agents": 2, "goods": 1, "utilities": [[1], ["1/0"]]}"#).unwrap_err();
        assert!(err.to_string().contains("utilities[1][0]"), "{err}");
        let err = load_profile(r#"{"agents": 1, "goods": 1, "utilities": [[0.5]]}"#).unwrap_err();
        assert!(err.to_string().contains("utilities[0][0]"), "{err}");
        let err = load_profile(r#"{"agents": 2, "goods": 1, "utilities": [[1]]}"#).unwrap_err();
        assert!(err.to_string().contains("utilities"), "{err}");
        assert!(load_profile(r#"{"agents": 0, "goods": 0, "utilities": []}"#).is_err());
    }

    #[test]
    fn huge_rationals_round_trip() {
        let big = q("123456789012345678901234567890/7");
        let p = Profile::new(vec![vec![big.clone(), q("99999999999999999999999")]]).unwrap();
        assert_eq!(load_profile(&p.to_json_string()).unwrap(), p);
    }

    #[test]
    fn allocation_file_validation() {
        let p = sample();
        let alloc = load_allocation(r#"{"assignment": [2, 1, 1]}"#, &p).unwrap();
        assert_eq!(alloc.assignment(), &[1, 0, 0]);
        assert_eq!(alloc.to_string(), "A1={g2, g3}, A2={g1}");
        assert_eq!(load_allocation(&alloc.to_json_string(), &p).unwrap(), alloc);
        assert!(load_allocation(r#"{"assignment": [2, 1]}"#, &p).is_err());
        assert!(load_allocation(r#"{"assignment": [2, null, 1]}"#, &p).is_err());
        assert!(load_allocation(r#"{"assignment": [3, 1, 1]}"#, &p).is_err());
        assert!(load_allocation(r#"{"assignment": [0, 1, 1]}"#, &p).is_err());
    }

    #[test]
    fn from_bundles_requires_a_partition() {
        let alloc = Allocation::from_bundles(3, &[Bundle::new([1, 2]), Bundle::new([0])]).unwrap();
        assert_eq!(alloc.assignment(), &[1, 0, 0]);
        assert!(Allocation::from_bundles(3, &[Bundle::new([1, 2]), Bundle::default()]).is_err());
        assert!(Allocation::from_bundles(2, &[Bundle::new([0, 1]), Bundle::new([1])]).is_err());
    }

    #[test]
    fn all_positive_feasibility() {
        assert!(sample().admits_all_positive());
        assert!(!Profile::from_integers(&[[1, 0], [1, 0]])
            .unwrap()
            .admits_all_positive());
        assert!(!Profile::from_integers(&[[1], [1]])
            .unwrap()
            .admits_all_positive());
        assert!(Profile::from_integers(&[[1, 1, 0], [1, 0, 0], [0, 1, 1]])
            .unwrap()
            .admits_all_positive());
    }

    #[test]
    fn random_profiles_are_seeded() {
        let spec = RandomProfiles {
            agents: 2,
            goods: 5,
            min_utility: 0,
            max_utility: 3,
            positive_rows: true,
        };
        for index in 0..50 {
            let p = spec.generate(7, index).unwrap();
            assert_eq!(p, spec.generate(7, index).unwrap());
            assert!(p
                .rows()
                .iter()
                .all(|row| row.iter().any(|u| u.is_positive())));
            assert!(p.rows().iter().flatten().all(|u| *u <= q("3")));
        }
        assert_ne!(spec.generate(7, 0).unwrap(), spec.generate(8, 0).unwrap());
    }
}
