//! Inclusion-minimal hitting sets for families of partial permutations.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::family::{stats, PermFamily};
use crate::perm::{PartialPermutation, Point};

/// Most distinct points a hitting-set search can index.
pub const MAX_UNIVERSE: usize = 128;

#[derive(Debug, Clone, Serialize)]
pub struct HittingSetReport {
    pub by_size: BTreeMap<usize, Vec<Vec<Point>>>,
    /// Search nodes per depth (depth `i` = partial sets of size `i`).
    pub nodes_by_depth: Vec<u64>,
    /// Largest member size; the branching factor of the search.
    pub max_member_size: usize,
    /// Members branched on along the path to the first hitting set found.
    pub witness_chain: Vec<PartialPermutation>,
    /// Set when some member has no points and so nothing can hit it.
    pub has_empty_member: bool,
}

impl HittingSetReport {
    pub fn count(&self, size: usize) -> usize {
        self.by_size.get(&size).map_or(0, Vec::len)
    }

    pub fn sets(&self) -> impl Iterator<Item = &Vec<Point>> {
        self.by_size.values().flatten()
    }

    pub fn to_json(&self, t: usize) -> Value {
        let counts: BTreeMap<String, usize> = self.by_size.iter().map(|(i, s)| (i.to_string(), s.len())).collect();
        let bounds: BTreeMap<String, String> =
            (2..t).map(|i| (i.to_string(), power(t.saturating_sub(2), i).to_string())).collect();
        let sets: Vec<Vec<[u8; 2]>> = self.sets().map(|s| s.iter().map(|p| [p.row, p.col]).collect()).collect();
        json!({ "t": t, "counts": counts, "bounds": bounds, "sets": sets })
    }
}

fn power(base: usize, exp: usize) -> u128 {
    (base as u128).saturating_pow(exp as u32)
}

struct Search<'a> {
    members: &'a [u128],
    max_size: usize,
    found: BTreeSet<(usize, u128)>,
    nodes_by_depth: Vec<u64>,
    path: Vec<usize>,
    witness: Option<Vec<usize>>,
}

impl Search<'_> {
    fn visit(&mut self, chosen: u128, depth: usize) {
        self.nodes_by_depth[depth] += 1;
        let Some(idx) = self.members.iter().position(|&m| m & chosen == 0) else {
            if self.witness.is_none() {
                self.witness = Some(self.path.clone());
            }
            self.found.insert((depth, chosen));
            return;
        };
        if depth == self.max_size {
            return;
        }
        self.path.push(idx);
        let mut rest = self.members[idx];
        while rest != 0 {
            let bit = rest & rest.wrapping_neg();
            rest ^= bit;
            self.visit(chosen | bit, depth + 1);
        }
        self.path.pop();
    }
}

fn is_minimal(set: u128, members: &[u128]) -> bool {
    let mut rest = set;
    while rest != 0 {
        let bit = rest & rest.wrapping_neg();
        rest ^= bit;
        if members.iter().all(|&m| m & (set ^ bit) != 0) {
            return false;
        }
    }
    true
}

/// All inclusion-minimal hitting sets of size at most `max_size`.
///
/// The search branches on the points of the first member not yet hit, so
/// the number of nodes at depth `i` is at most `(max member size)^i`.
pub fn minimal_hitting_sets(family: &[PartialPermutation], max_size: usize) -> Result<HittingSetReport> {
    if family.is_empty() {
        return Err(Error::EmptyInput("hitting sets need a nonempty family"));
    }
    let universe: Vec<Point> =
        family.iter().flat_map(|m| m.points().iter().copied()).collect::<BTreeSet<_>>().into_iter().collect();
    if universe.len() > MAX_UNIVERSE {
        return Err(Error::TooLarge(universe.len(), MAX_UNIVERSE));
    }
    let index: BTreeMap<Point, usize> = universe.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let masks: Vec<u128> = family.iter().map(|m| m.points().iter().fold(0u128, |acc, p| acc | 1 << index[p])).collect();
    let max_member_size = family.iter().map(PartialPermutation::len).max().unwrap_or(0);
    let has_empty_member = masks.contains(&0);
    if has_empty_member {
        return Ok(HittingSetReport {
            by_size: BTreeMap::new(),
            nodes_by_depth: vec![0; max_size + 1],
            max_member_size,
            witness_chain: Vec::new(),
            has_empty_member,
        });
    }
    let mut search = Search {
        members: &masks,
        max_size,
        found: BTreeSet::new(),
        nodes_by_depth: vec![0; max_size + 1],
        path: Vec::new(),
        witness: None,
    };
    search.visit(0, 0);
    let mut by_size: BTreeMap<usize, Vec<Vec<Point>>> = BTreeMap::new();
    for &(size, set) in &search.found {
        if is_minimal(set, &masks) {
            let points = (0..universe.len()).filter(|&i| set >> i & 1 == 1).map(|i| universe[i]).collect();
            by_size.entry(size).or_default().push(points);
        }
    }
    for sets in by_size.values_mut() {
        sets.sort();
    }
    let witness_chain = search.witness.unwrap_or_default().into_iter().map(|i| family[i].clone()).collect();
    Ok(HittingSetReport {
        by_size,
        nodes_by_depth: search.nodes_by_depth,
        max_member_size,
        witness_chain,
        has_empty_member,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundCheck {
    pub t: usize,
    /// `count(i) ≤ (t-2)^i` for every `i` in `[2, t-1]`.
    pub holds: bool,
    /// No single point hits every member.
    pub no_one_hitting_sets: bool,
    /// Search nodes at each depth stayed within `(t-2)^depth`.
    pub nodes_within_bound: bool,
    pub report: HittingSetReport,
}

/// Enumerates minimal hitting sets of size up to `t-1` and compares their
/// counts against `(t-2)^i`.
pub fn hitting_bound_check(family: &[PartialPermutation], t: usize) -> Result<BoundCheck> {
    if t < 3 {
        return Err(Error::OutOfRange(format!("t = {t} must be at least 3")));
    }
    for m in family {
        if m.len() > t - 2 {
            return Err(Error::PreconditionViolation(format!(
                "member {{{m}}} has {} points, more than t-2 = {}",
                m.len(),
                t - 2
            )));
        }
        if let Some(p) = m.points().iter().find(|p| p.row < 2 || p.col < 2 || p.row as usize > t || p.col as usize > t)
        {
            return Err(Error::PreconditionViolation(format!("point {p} lies outside [2,{t}]^2")));
        }
    }
    let report = minimal_hitting_sets(family, t - 1)?;
    let holds = (2..t).all(|i| report.count(i) as u128 <= power(t - 2, i));
    let no_one_hitting_sets = report.count(1) == 0;
    let nodes_within_bound = report.nodes_by_depth.iter().enumerate().all(|(d, &c)| c as u128 <= power(t - 2, d));
    Ok(BoundCheck { t, holds, no_one_hitting_sets, nodes_within_bound, report })
}

/// The distinct traces `π ∩ [2,t]²` of the members of `f`, with the points
/// common to every member removed.
pub fn fragments(f: &PermFamily, t: usize) -> Result<Vec<PartialPermutation>> {
    let common = stats(f).common_intersection.ok_or(Error::EmptyInput("fragments need a nonempty family"))?;
    let t = t as u8;
    let set: BTreeSet<PartialPermutation> = f
        .iter()
        .map(|p| p.to_partial().filter(|q| q.row >= 2 && q.col >= 2 && q.row <= t && q.col <= t && !common.contains(q)))
        .collect();
    Ok(set.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::build_h;
    use proptest::prelude::*;

    fn pp(n: usize, s: &str) -> PartialPermutation {
        PartialPermutation::parse(n, s).unwrap()
    }

    /// Minimal transversals by scanning every subset of `[2,t]²`.
    fn lattice_oracle(family: &[PartialPermutation], t: usize, max_size: usize) -> BTreeMap<usize, Vec<Vec<Point>>> {
        let cells: Vec<Point> = (2..=t as u8).flat_map(|r| (2..=t as u8).map(move |c| Point::new(r, c))).collect();
        let hits = |s: u32| {
            family
                .iter()
                .all(|m| m.points().iter().any(|p| cells.iter().position(|c| c == p).is_some_and(|i| s >> i & 1 == 1)))
        };
        let mut out: BTreeMap<usize, Vec<Vec<Point>>> = BTreeMap::new();
        for s in 1u32..1 << cells.len() {
            let size = s.count_ones() as usize;
            if size > max_size || !hits(s) {
                continue;
            }
            let minimal = (0..cells.len()).filter(|&i| s >> i & 1 == 1).all(|i| !hits(s & !(1 << i)));
            if minimal {
                let pts = (0..cells.len()).filter(|&i| s >> i & 1 == 1).map(|i| cells[i]).collect();
                out.entry(size).or_default().push(pts);
            }
        }
        for v in out.values_mut() {
            v.sort();
        }
        out
    }

    #[test]
    fn single_member_gives_singletons() {
        let p = pp(6, "2->3,3->4,4->2");
        let r = minimal_hitting_sets(std::slice::from_ref(&p), 3).unwrap();
        assert_eq!(r.by_size.len(), 1);
        let ones: Vec<Vec<Point>> = p.points().iter().map(|&q| vec![q]).collect();
        assert_eq!(r.by_size[&1], ones);
    }

    #[test]
    fn disjoint_members_have_no_singletons() {
        let fam = [pp(4, "2->3,3->2"), pp(4, "2->2,3->3")];
        let r = minimal_hitting_sets(&fam, 3).unwrap();
        assert_eq!(r.count(1), 0);
        assert_eq!(r.count(2), 4);
        assert_eq!(r.witness_chain, fam.to_vec());
    }

    #[test]
    fn empty_inputs() {
        assert!(matches!(minimal_hitting_sets(&[], 2), Err(Error::EmptyInput(_))));
        let r = minimal_hitting_sets(&[pp(4, "2->2"), PartialPermutation::empty(4)], 2).unwrap();
        assert!(r.has_empty_member);
        assert_eq!(r.sets().count(), 0);
    }

    #[test]
    fn h_fragments_match_lattice() {
        let h = build_h(5, 3).unwrap();
        let frags = fragments(&h, 5).unwrap();
        let want: Vec<PartialPermutation> = ["2->2", "2->3", "3->2", "3->3"].iter().map(|s| pp(5, s)).collect();
        assert_eq!(frags, want);
        let r = minimal_hitting_sets(&frags, 4).unwrap();
        assert_eq!(r.by_size, lattice_oracle(&frags, 5, 4));
        assert_eq!(r.count(4), 1);
    }

    #[test]
    fn bound_check_examples() {
        let fam = [pp(5, "2->2,3->3"), pp(5, "2->2,4->4"), pp(5, "3->3,4->4")];
        let c = hitting_bound_check(&fam, 4).unwrap();
        assert!(c.holds && c.no_one_hitting_sets && c.nodes_within_bound);
        assert_eq!(c.report.count(2), 3);
        assert_eq!(c.report.by_size, lattice_oracle(&fam, 4, 3));

        let common = [pp(5, "2->2,3->3"), pp(5, "2->2,4->4")];
        let c = hitting_bound_check(&common, 4).unwrap();
        assert!(!c.no_one_hitting_sets);
        assert_eq!(c.report.by_size[&1], vec![vec![Point::new(2, 2)]]);

        let big = [pp(5, "2->2,3->3,4->4")];
        assert!(matches!(hitting_bound_check(&big, 4), Err(Error::PreconditionViolation(_))));
        let outside = [pp(5, "1->2")];
        assert!(matches!(hitting_bound_check(&outside, 4), Err(Error::PreconditionViolation(_))));
    }

    fn partial_in_square(t: u8, max_len: usize) -> impl Strategy<Value = PartialPermutation> {
        prop::collection::vec((2..=t, 2..=t), 1..=max_len).prop_map(move |cells| {
            let mut pp = PartialPermutation::empty(t as usize);
            for (r, c) in cells {
                if let Ok(next) = pp.with_point(Point::new(r, c)) {
                    pp = next;
                }
            }
            pp
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn matches_lattice_oracle(
            t in 4usize..=5,
            fam in prop::collection::vec(partial_in_square(5, 3), 1..6),
        ) {
            let fam: Vec<PartialPermutation> = fam
                .into_iter()
                .map(|m| m.filter(|p| p.row as usize <= t && p.col as usize <= t))
                .filter(|m| !m.is_empty())
                .collect();
            prop_assume!(!fam.is_empty());
            let r = minimal_hitting_sets(&fam, t - 1).unwrap();
            prop_assert_eq!(&r.by_size, &lattice_oracle(&fam, t, t - 1));
            let sets: Vec<&Vec<Point>> = r.sets().collect();
            for a in &sets {
                for b in &sets {
                    if a != b {
                        prop_assert!(!a.iter().all(|p| b.contains(p)));
                    }
                }
            }
            for (d, &c) in r.nodes_by_depth.iter().enumerate() {
                prop_assert!(c as u128 <= power(r.max_member_size, d));
            }
        }

        #[test]
        fn bound_holds_when_preconditions_hold(
            fam in prop::collection::vec(partial_in_square(6, 4), 2..7),
        ) {
            let t = 6;
            let c = hitting_bound_check(&fam, t).unwrap();
            if c.no_one_hitting_sets {
                prop_assert!(c.holds);
                prop_assert!(c.nodes_within_bound);
            }
        }
    }
}
