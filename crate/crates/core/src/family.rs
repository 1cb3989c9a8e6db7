//! Families of permutations stored as bitsets over Lehmer ranks.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::perm::{factorial_u64, next_permutation, rank_of, LexWalk, PartialPermutation, Permutation, Point};

/// Largest ground size a [`PermFamily`] may live on (`10!` bits ≈ 450 KiB).
pub const MAX_FAMILY_N: usize = 10;

/// Ranks handled by one parallel work item; a multiple of 64 so that
/// workers never share a bitset word.
const BLOCK: u64 = 64 * 256;

/// An immutable set of permutations of `[n]`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PermFamily {
    n: u8,
    bits: Vec<u64>,
    size: usize,
}

impl fmt::Debug for PermFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PermFamily")
            .field("n", &self.n)
            .field("size", &self.size)
            .field("ranks", &self.ranks().take(16).collect::<Vec<_>>())
            .finish()
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 || n > MAX_FAMILY_N {
        return Err(Error::OutOfRange(format!("family ground size {n} not in [1,{MAX_FAMILY_N}]")));
    }
    Ok(())
}

impl PermFamily {
    fn from_bits(n: usize, bits: Vec<u64>) -> Self {
        let size = bits.iter().map(|w| w.count_ones() as usize).sum();
        PermFamily { n: n as u8, bits, size }
    }

    fn words(n: usize) -> usize {
        factorial_u64(n).div_ceil(64) as usize
    }

    pub fn empty(n: usize) -> Result<Self> {
        check_n(n)?;
        Ok(PermFamily { n: n as u8, bits: vec![0; Self::words(n)], size: 0 })
    }

    /// All of `Σ_n`.
    pub fn full(n: usize) -> Result<Self> {
        Self::from_predicate(n, |_| true)
    }

    pub fn from_ranks(n: usize, ranks: impl IntoIterator<Item = u64>) -> Result<Self> {
        check_n(n)?;
        let total = factorial_u64(n);
        let mut bits = vec![0u64; Self::words(n)];
        for r in ranks {
            if r >= total {
                return Err(Error::OutOfRange(format!("rank {r} >= {n}!")));
            }
            bits[(r / 64) as usize] |= 1 << (r % 64);
        }
        Ok(Self::from_bits(n, bits))
    }

    pub fn from_perms<'a>(n: usize, perms: impl IntoIterator<Item = &'a Permutation>) -> Result<Self> {
        let mut ranks = Vec::new();
        for p in perms {
            if p.n() != n {
                return Err(Error::MismatchedGround(n, p.n()));
            }
            ranks.push(p.rank());
        }
        Self::from_ranks(n, ranks)
    }

    /// Builds `{σ : keep(σ)}`, splitting the rank space across the rayon pool.
    /// The result is bit-identical to [`PermFamily::from_predicate_sequential`].
    pub fn from_predicate<P>(n: usize, keep: P) -> Result<Self>
    where
        P: Fn(&[u8]) -> bool + Sync,
    {
        check_n(n)?;
        let total = factorial_u64(n);
        let blocks = total.div_ceil(BLOCK);
        let chunks: Vec<Vec<u64>> = (0..blocks)
            .into_par_iter()
            .map(|b| {
                let start = b * BLOCK;
                let stop = (start + BLOCK).min(total);
                let mut words = vec![0u64; (stop - start).div_ceil(64) as usize];
                LexWalk::new(n, start).expect("n checked").for_each_until(stop, |r, m| {
                    if keep(m) {
                        let off = r - start;
                        words[(off / 64) as usize] |= 1 << (off % 64);
                    }
                });
                words
            })
            .collect();
        Ok(Self::from_bits(n, chunks.concat()))
    }

    pub fn from_predicate_sequential<P>(n: usize, mut keep: P) -> Result<Self>
    where
        P: FnMut(&[u8]) -> bool,
    {
        check_n(n)?;
        let mut bits = vec![0u64; Self::words(n)];
        let mut map: Vec<u8> = (1..=n as u8).collect();
        let mut r = 0u64;
        loop {
            if keep(&map) {
                bits[(r / 64) as usize] |= 1 << (r % 64);
            }
            r += 1;
            if !next_permutation(&mut map) {
                break;
            }
        }
        Ok(Self::from_bits(n, bits))
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn contains_rank(&self, r: u64) -> bool {
        r < factorial_u64(self.n()) && self.bits[(r / 64) as usize] >> (r % 64) & 1 == 1
    }

    pub fn contains(&self, p: &Permutation) -> bool {
        p.n() == self.n() && self.contains_rank(p.rank())
    }

    pub fn ranks(&self) -> impl Iterator<Item = u64> + '_ {
        self.bits.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as u64;
                w &= w - 1;
                Some(i as u64 * 64 + b)
            })
        })
    }

    /// Members in rank order.
    pub fn iter(&self) -> impl Iterator<Item = Permutation> + '_ {
        let n = self.n();
        self.ranks().map(move |r| Permutation::unrank(n, r).expect("stored rank is valid"))
    }

    pub fn members(&self) -> Vec<Permutation> {
        self.iter().collect()
    }

    fn zip_with(&self, other: &PermFamily, f: impl Fn(u64, u64) -> u64) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::MismatchedGround(self.n(), other.n()));
        }
        let bits = self.bits.iter().zip(&other.bits).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self::from_bits(self.n(), bits))
    }

    pub fn union(&self, other: &PermFamily) -> Result<Self> {
        self.zip_with(other, |a, b| a | b)
    }

    pub fn intersection(&self, other: &PermFamily) -> Result<Self> {
        self.zip_with(other, |a, b| a & b)
    }

    pub fn difference(&self, other: &PermFamily) -> Result<Self> {
        self.zip_with(other, |a, b| a & !b)
    }

    pub fn is_subset(&self, other: &PermFamily) -> bool {
        self.n == other.n && self.bits.iter().zip(&other.bits).all(|(&a, &b)| a & !b == 0)
    }

    fn retain(&self, keep: impl Fn(&Permutation) -> bool) -> Self {
        let kept: Vec<u64> = self.iter().filter(|p| keep(p)).map(|p| p.rank()).collect();
        Self::from_ranks(self.n(), kept).expect("subset of a valid family")
    }

    /// `F[X]`: members containing `x`.
    pub fn restrict(&self, x: &PartialPermutation) -> Self {
        self.retain(|p| p.contains_all(x))
    }

    /// `F[X̄]`: members disjoint from `x`.
    pub fn avoiding(&self, x: &PartialPermutation) -> Self {
        self.retain(|p| !x.points().iter().any(|&q| p.contains_point(q)))
    }

    /// `F(X)`: members containing `x`, with `x` removed.
    pub fn quotient(&self, x: &PartialPermutation) -> Vec<PartialPermutation> {
        self.iter().filter(|p| p.contains_all(x)).map(|p| p.to_partial().difference(x)).collect()
    }

    /// Copy with membership of `rank` flipped. Used to inject faults when
    /// exercising the verification suite.
    pub fn toggled(&self, rank: u64) -> Result<Self> {
        if rank >= factorial_u64(self.n()) {
            return Err(Error::OutOfRange(format!("rank {rank}")));
        }
        let mut bits = self.bits.clone();
        bits[(rank / 64) as usize] ^= 1 << (rank % 64);
        Ok(Self::from_bits(self.n(), bits))
    }

    /// Header line `n=<n> size=<s>` followed by one permutation per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("n={} size={}\n", self.n, self.size);
        for p in self.iter() {
            out.push_str(&p.to_string());
            out.push('\n');
        }
        out
    }

    pub fn from_text(s: &str) -> Result<Self> {
        let mut lines = s.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("missing header".into()))?;
        let (n, size) = parse_header(header)?;
        let mut ranks = Vec::with_capacity(size);
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let p: Permutation = line.parse()?;
            if p.n() != n {
                return Err(Error::MismatchedGround(n, p.n()));
            }
            ranks.push(p.rank());
        }
        let fam = Self::from_ranks(n, ranks)?;
        if fam.len() != size {
            return Err(Error::Parse(format!("header says size={size}, found {}", fam.len())));
        }
        Ok(fam)
    }

    /// Little-endian `u64` words: `n`, member count, then the ranks ascending.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 8 * self.size);
        out.extend_from_slice(&(self.n as u64).to_le_bytes());
        out.extend_from_slice(&(self.size as u64).to_le_bytes());
        for r in self.ranks() {
            out.extend_from_slice(&r.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 16 || !bytes.len().is_multiple_of(8) {
            return Err(Error::Parse(format!("bad rank-list length {}", bytes.len())));
        }
        let words: Vec<u64> =
            bytes.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect();
        let n = words[0] as usize;
        let count = words[1] as usize;
        if words.len() - 2 != count {
            return Err(Error::Parse(format!("expected {count} ranks, found {}", words.len() - 2)));
        }
        let fam = Self::from_ranks(n, words[2..].iter().copied())?;
        if fam.len() != count {
            return Err(Error::Parse("duplicate ranks".into()));
        }
        Ok(fam)
    }
}

fn parse_header(line: &str) -> Result<(usize, usize)> {
    let bad = || Error::Parse(format!("bad header {line:?}"));
    let mut it = line.split_whitespace();
    let n = it.next().and_then(|t| t.strip_prefix("n=")).ok_or_else(bad)?;
    let s = it.next().and_then(|t| t.strip_prefix("size=")).ok_or_else(bad)?;
    if it.next().is_some() {
        return Err(bad());
    }
    Ok((n.parse().map_err(|_| bad())?, s.parse().map_err(|_| bad())?))
}

/// Constraints for `Σ_n[X, Ȳ]`-style filters.
///
/// `avoids` lists forbidden points (`σ ∩ Y = ∅`); `avoid_each` lists objects
/// that members must be disjoint from; `intersect_each` lists objects every
/// member must meet.
#[derive(Debug, Clone, Default)]
pub struct SigmaFilter {
    pub contains: Option<PartialPermutation>,
    pub avoids: Vec<PartialPermutation>,
    pub intersect_each: Vec<PartialPermutation>,
    pub avoid_each: Vec<PartialPermutation>,
}

struct Compiled {
    required: Vec<u8>,
    forbidden_points: Vec<u32>,
    forbidden_objects: Vec<u32>,
    meet: Vec<Vec<u8>>,
}

impl Compiled {
    #[inline]
    fn accepts(&self, m: &[u8]) -> bool {
        for (i, &c) in m.iter().enumerate() {
            let req = self.required[i];
            if req != 0 && req != c {
                return false;
            }
        }
        for (i, &c) in m.iter().enumerate() {
            if self.forbidden_points[i] >> c & 1 == 1 {
                return false;
            }
        }
        for (i, &c) in m.iter().enumerate() {
            if self.forbidden_objects[i] >> c & 1 == 1 {
                return false;
            }
        }
        self.meet.iter().all(|g| g.iter().zip(m).any(|(&a, &b)| a == b))
    }
}

impl SigmaFilter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn containing(mut self, x: PartialPermutation) -> Self {
        self.contains = Some(x);
        self
    }

    pub fn avoiding_points(mut self, y: PartialPermutation) -> Self {
        self.avoids.push(y);
        self
    }

    pub fn meeting(mut self, g: PartialPermutation) -> Self {
        self.intersect_each.push(g);
        self
    }

    pub fn disjoint_from(mut self, a: PartialPermutation) -> Self {
        self.avoid_each.push(a);
        self
    }

    fn compile(&self, n: usize) -> Result<Compiled> {
        let all = self.contains.iter().chain(&self.avoids).chain(&self.intersect_each).chain(&self.avoid_each);
        for c in all {
            if c.n() != n {
                return Err(Error::MismatchedGround(n, c.n()));
            }
        }
        let mut required = vec![0u8; n];
        if let Some(x) = &self.contains {
            for p in x.points() {
                required[p.row as usize - 1] = p.col;
            }
        }
        let mask = |objs: &[PartialPermutation]| {
            let mut m = vec![0u32; n];
            for o in objs {
                for p in o.points() {
                    m[p.row as usize - 1] |= 1 << p.col;
                }
            }
            m
        };
        let meet = self
            .intersect_each
            .iter()
            .map(|g| {
                let mut row = vec![0u8; n];
                for p in g.points() {
                    row[p.row as usize - 1] = p.col;
                }
                row
            })
            .collect();
        Ok(Compiled { required, forbidden_points: mask(&self.avoids), forbidden_objects: mask(&self.avoid_each), meet })
    }

    /// Evaluates the filter over all of `Σ_n`. Infeasible constraints give
    /// the empty family.
    pub fn apply(&self, n: usize) -> Result<PermFamily> {
        check_n(n)?;
        let c = self.compile(n)?;
        PermFamily::from_predicate(n, |m| c.accepts(m))
    }

    pub fn apply_sequential(&self, n: usize) -> Result<PermFamily> {
        check_n(n)?;
        let c = self.compile(n)?;
        PermFamily::from_predicate_sequential(n, |m| c.accepts(m))
    }
}

pub fn sigma_filter(n: usize, filter: &SigmaFilter) -> Result<PermFamily> {
    filter.apply(n)
}

fn check_k(n: usize, k: usize) -> Result<()> {
    check_n(n)?;
    if k < 2 || k + 2 > n {
        return Err(Error::OutOfRange(format!("k = {k} not in [2, {}]", n as isize - 2)));
    }
    Ok(())
}

/// Permutations fixing `k+1..=n` pointwise with `σ(1) ≠ 1`.
pub fn build_h(n: usize, k: usize) -> Result<PermFamily> {
    check_k(n, k)?;
    SigmaFilter::new()
        .containing(PartialPermutation::alpha(k + 1, n, n)?)
        .avoiding_points(PartialPermutation::alpha(1, 1, n)?)
        .apply(n)
}

/// Permutations fixing `(1,1)` that intersect every member of `g`.
pub fn neighborhood_n(n: usize, g: &PermFamily) -> Result<PermFamily> {
    if g.n() != n {
        return Err(Error::MismatchedGround(n, g.n()));
    }
    if g.is_empty() {
        return Err(Error::EmptyInput("N(G) needs a nonempty G"));
    }
    let mut f = SigmaFilter::new().containing(PartialPermutation::alpha(1, 1, n)?);
    f.intersect_each = g.iter().map(|p| p.to_partial()).collect();
    f.apply(n)
}

/// `N(H_k)` through the fixed-point description: `π(1) = 1` and `π` fixes
/// some point of `[k+1, n]`.
pub fn neighborhood_of_h_by_fixed_points(n: usize, k: usize) -> Result<PermFamily> {
    check_k(n, k)?;
    PermFamily::from_predicate(n, |m| m[0] == 1 && (k..n).any(|i| m[i] as usize == i + 1))
}

/// `E_k = H_k ∪ N(H_k)`.
pub fn build_e(n: usize, k: usize) -> Result<PermFamily> {
    let h = build_h(n, k)?;
    let nh = neighborhood_n(n, &h)?;
    h.union(&nh)
}

/// All permutations containing the point `(r, c)`.
pub fn star(n: usize, p: Point) -> Result<PermFamily> {
    let x = PartialPermutation::new(n, vec![p])?;
    SigmaFilter::new().containing(x).apply(n)
}

/// `{σ} ∪ {π : π(1)=1, π ∩ σ ≠ ∅}` for some `σ` with `σ(1) ≠ 1`.
pub fn hilton_milner(sigma: &Permutation) -> Result<PermFamily> {
    let n = sigma.n();
    if sigma.apply(1) == 1 {
        return Err(Error::PreconditionViolation("σ(1) must differ from 1".into()));
    }
    let rest =
        SigmaFilter::new().containing(PartialPermutation::alpha(1, 1, n)?).meeting(sigma.to_partial()).apply(n)?;
    rest.union(&PermFamily::from_perms(n, [sigma])?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FamilyStats {
    pub size: usize,
    pub max_degree: usize,
    /// Canonically smallest point of maximum degree; `None` for the empty family.
    pub max_degree_point: Option<Point>,
    pub diversity: usize,
    /// Points shared by every member; `None` for the empty family.
    pub common_intersection: Option<PartialPermutation>,
}

/// Degree of every point, indexed `[row-1][col-1]`.
pub fn degrees(f: &PermFamily) -> Vec<Vec<usize>> {
    let n = f.n();
    let mut deg = vec![vec![0usize; n]; n];
    for p in f.iter() {
        for (i, &c) in p.map().iter().enumerate() {
            deg[i][c as usize - 1] += 1;
        }
    }
    deg
}

pub fn stats(f: &PermFamily) -> FamilyStats {
    let n = f.n();
    let deg = degrees(f);
    let mut best: Option<(usize, Point)> = None;
    for (r, row) in deg.iter().enumerate() {
        for (c, &d) in row.iter().enumerate() {
            if best.is_none_or(|(b, _)| d > b) {
                best = Some((d, Point::new(r as u8 + 1, c as u8 + 1)));
            }
        }
    }
    let (max_degree, point) = best.expect("n >= 1");
    let common_intersection = (!f.is_empty()).then(|| {
        let pts = (0..n)
            .flat_map(|r| (0..n).map(move |c| (r, c)))
            .filter(|&(r, c)| deg[r][c] == f.len())
            .map(|(r, c)| Point::new(r as u8 + 1, c as u8 + 1))
            .collect();
        PartialPermutation::new(n, pts).expect("common points of permutations form a partial permutation")
    });
    FamilyStats {
        size: f.len(),
        max_degree,
        max_degree_point: (!f.is_empty()).then_some(point),
        diversity: f.len() - max_degree,
        common_intersection,
    }
}

/// First pair of members (in rank order) that do not intersect.
pub fn first_disjoint_pair(f: &PermFamily) -> Option<(Permutation, Permutation)> {
    let members = f.members();
    for (i, a) in members.iter().enumerate() {
        for b in &members[i + 1..] {
            if !a.map().iter().zip(b.map()).any(|(x, y)| x == y) {
                return Some((a.clone(), b.clone()));
            }
        }
    }
    None
}

pub fn is_intersecting(f: &PermFamily) -> bool {
    first_disjoint_pair(f).is_none()
}

/// Greedily adds, in rank order, every permutation meeting all current
/// members. One pass reaches the fixpoint: a rejected candidate misses some
/// member, and members are never removed.
pub fn maximal_closure(f: &PermFamily) -> Result<PermFamily> {
    if f.is_empty() {
        return Err(Error::EmptyInput("closure of the empty family"));
    }
    if !is_intersecting(f) {
        return Err(Error::NotIntersecting);
    }
    let n = f.n();
    let mut members: Vec<Vec<u8>> = f.iter().map(|p| p.map().to_vec()).collect();
    let mut ranks: Vec<u64> = f.ranks().collect();
    for cand in Permutation::all(n) {
        if f.contains_rank(cand.rank()) {
            continue;
        }
        let ok = members.iter().all(|m| m.iter().zip(cand.map()).any(|(a, b)| a == b));
        if ok {
            members.push(cand.map().to_vec());
            ranks.push(cand.rank());
        }
    }
    PermFamily::from_ranks(n, ranks)
}

/// `π ∘ σ ∘ ρ` on raw maps.
fn sandwich(pi: &[u8], sigma: &[u8], rho: &[u8]) -> Vec<u8> {
    rho.iter().map(|&j| pi[sigma[j as usize - 1] as usize - 1]).collect()
}

fn degree_profile(f: &PermFamily) -> Vec<usize> {
    let mut v: Vec<usize> = degrees(f).into_iter().flatten().collect();
    v.sort_unstable();
    v
}

/// Finds `(π, ρ)` with `G = {π σ ρ : σ ∈ F}`, if any.
///
/// Fixing one member `σ₀ ∈ F`, every candidate `ρ` and image `g ∈ G`
/// determines `π = g ρ⁻¹ σ₀⁻¹`, so the search is over `n! · |G|` pairs.
pub fn are_isomorphic(f: &PermFamily, g: &PermFamily) -> Result<Option<(Permutation, Permutation)>> {
    if f.n() != g.n() {
        return Err(Error::MismatchedGround(f.n(), g.n()));
    }
    let n = f.n();
    if f.len() != g.len() {
        return Ok(None);
    }
    let id = Permutation::identity(n);
    if f.is_empty() {
        return Ok(Some((id.clone(), id)));
    }
    if degree_profile(f) != degree_profile(g) {
        return Ok(None);
    }
    let fm: Vec<Vec<u8>> = f.iter().map(|p| p.map().to_vec()).collect();
    let gm: Vec<Vec<u8>> = g.iter().map(|p| p.map().to_vec()).collect();
    let s0_inv = Permutation::from_map(fm[0].clone())?.inverse();
    for rho in Permutation::all(n) {
        let rho_inv = rho.inverse();
        for target in &gm {
            // π = g ∘ ρ⁻¹ ∘ σ₀⁻¹
            let pi = sandwich(target, rho_inv.map(), s0_inv.map());
            let all_in = fm.iter().all(|s| g.contains_rank(rank_of(&sandwich(&pi, s, rho.map()))));
            if all_in {
                return Ok(Some((Permutation::from_map(pi)?, rho)));
            }
        }
    }
    Ok(None)
}

/// Applies `σ ↦ π σ ρ` memberwise.
pub fn transform(f: &PermFamily, pi: &Permutation, rho: &Permutation) -> Result<PermFamily> {
    let ranks: Vec<u64> = f.iter().map(|s| rank_of(&sandwich(pi.map(), s.map(), rho.map()))).collect();
    PermFamily::from_ranks(f.n(), ranks)
}
