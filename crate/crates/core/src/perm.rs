//! Permutations and partial permutations viewed as point sets in `[n]²`.
//!
//! Rows and columns are 1-based. A permutation `σ` is identified with the
//! set `{(i, σ(i))}`; a partial permutation is any set of points with
//! pairwise distinct rows and pairwise distinct columns.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest ground size whose permutations have a `u64` Lehmer rank.
pub const MAX_RANK_N: usize = 20;

/// Largest ground size accepted for partial permutations.
pub const MAX_POINT_N: usize = u8::MAX as usize;

const FACTORIALS: [u64; MAX_RANK_N + 1] = {
    let mut t = [1u64; MAX_RANK_N + 1];
    let mut i = 1;
    while i <= MAX_RANK_N {
        t[i] = t[i - 1] * i as u64;
        i += 1;
    }
    t
};

/// `n!` as a machine integer, for `n <= 20`.
pub fn factorial_u64(n: usize) -> u64 {
    FACTORIALS[n]
}

/// A cell `(row, col)` of `[n]²`, meaning "row maps to col".
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Point {
    pub row: u8,
    pub col: u8,
}

impl Point {
    pub const fn new(row: u8, col: u8) -> Self {
        Point { row, col }
    }

    fn check(self, n: usize) -> Result<()> {
        if self.row == 0 || self.col == 0 || self.row as usize > n || self.col as usize > n {
            return Err(Error::OutOfRange(format!("point {self} outside [{n}]^2")));
        }
        Ok(())
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.row, self.col)
    }
}

impl FromStr for Point {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (r, c) = s.split_once("->").ok_or_else(|| Error::Parse(format!("expected r->c, got {s:?}")))?;
        let parse = |t: &str| t.trim().parse::<u8>().map_err(|e| Error::Parse(format!("{t:?}: {e}")));
        Ok(Point::new(parse(r)?, parse(c)?))
    }
}

/// Anything that can be read as a partial function `row -> col` on `[n]`.
pub trait PointSet {
    fn ground(&self) -> usize;
    fn image(&self, row: u8) -> Option<u8>;
}

/// True iff the two point sets share a point.
pub fn intersects<A, B>(a: &A, b: &B) -> Result<bool>
where
    A: PointSet + ?Sized,
    B: PointSet + ?Sized,
{
    if a.ground() != b.ground() {
        return Err(Error::MismatchedGround(a.ground(), b.ground()));
    }
    Ok((1..=a.ground() as u8).any(|r| match (a.image(r), b.image(r)) {
        (Some(x), Some(y)) => x == y,
        _ => false,
    }))
}

/// A set of points with distinct rows and distinct columns, kept sorted by row.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PartialPermutation {
    n: u8,
    points: Vec<Point>,
}

impl PartialPermutation {
    /// Validates and canonicalises a list of points.
    pub fn new(n: usize, mut points: Vec<Point>) -> Result<Self> {
        if n > MAX_POINT_N {
            return Err(Error::OutOfRange(format!("ground size {n} > {MAX_POINT_N}")));
        }
        for p in &points {
            p.check(n)?;
        }
        points.sort_unstable();
        points.dedup();
        for w in points.windows(2) {
            if w[0].row == w[1].row {
                return Err(Error::RowCollision(w[0].row));
            }
        }
        let mut cols: Vec<u8> = points.iter().map(|p| p.col).collect();
        cols.sort_unstable();
        for w in cols.windows(2) {
            if w[0] == w[1] {
                return Err(Error::ColCollision(w[0]));
            }
        }
        Ok(PartialPermutation { n: n as u8, points })
    }

    pub fn empty(n: usize) -> Self {
        PartialPermutation { n: n as u8, points: Vec::new() }
    }

    /// The identity segment `{(i,i), …, (j,j)}`.
    pub fn alpha(i: usize, j: usize, n: usize) -> Result<Self> {
        if i == 0 || i > j || j > n || n > MAX_POINT_N {
            return Err(Error::OutOfRange(format!("alpha({i},{j}) on [{n}]")));
        }
        let points = (i..=j).map(|x| Point::new(x as u8, x as u8)).collect();
        Ok(PartialPermutation { n: n as u8, points })
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn contains(&self, p: Point) -> bool {
        self.points.binary_search(&p).is_ok()
    }

    pub fn is_subset(&self, other: &PartialPermutation) -> bool {
        self.points.iter().all(|p| other.contains(*p))
    }

    /// Whether `p` can be added without breaking the row/column condition.
    pub fn accepts(&self, p: Point) -> bool {
        self.contains(p) || self.points.iter().all(|q| q.row != p.row && q.col != p.col)
    }

    pub fn with_point(&self, p: Point) -> Result<Self> {
        let mut pts = self.points.clone();
        pts.push(p);
        PartialPermutation::new(self.n(), pts)
    }

    pub fn union(&self, other: &PartialPermutation) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::MismatchedGround(self.n(), other.n()));
        }
        let mut pts = self.points.clone();
        pts.extend_from_slice(&other.points);
        PartialPermutation::new(self.n(), pts)
    }

    pub fn difference(&self, other: &PartialPermutation) -> Self {
        let points = self.points.iter().copied().filter(|p| !other.contains(*p)).collect();
        PartialPermutation { n: self.n, points }
    }

    pub fn intersection(&self, other: &PartialPermutation) -> Self {
        let points = self.points.iter().copied().filter(|p| other.contains(*p)).collect();
        PartialPermutation { n: self.n, points }
    }

    /// Keeps only the points satisfying `keep`.
    pub fn filter(&self, mut keep: impl FnMut(Point) -> bool) -> Self {
        let points = self.points.iter().copied().filter(|p| keep(*p)).collect();
        PartialPermutation { n: self.n, points }
    }

    /// Re-labels the ground size, e.g. when viewing `[2,t]²` fragments.
    pub fn with_ground(&self, n: usize) -> Result<Self> {
        PartialPermutation::new(n, self.points.clone())
    }

    /// Parses the `r->c,r->c` notation. The empty string is the empty set.
    pub fn parse(n: usize, s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(PartialPermutation::empty(n));
        }
        let pts = s.split(',').map(str::parse).collect::<Result<Vec<Point>>>()?;
        PartialPermutation::new(n, pts)
    }

    /// All permutations containing this partial permutation, in rank order.
    pub fn extensions(&self) -> Extensions {
        Extensions::new(self)
    }
}

impl PointSet for PartialPermutation {
    fn ground(&self) -> usize {
        self.n()
    }

    fn image(&self, row: u8) -> Option<u8> {
        self.points.binary_search_by_key(&row, |p| p.row).ok().map(|i| self.points[i].col)
    }
}

impl fmt::Display for PartialPermutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.points.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

impl Serialize for PartialPermutation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = s.serialize_seq(Some(self.points.len()))?;
        for p in &self.points {
            seq.serialize_element(&[p.row, p.col])?;
        }
        seq.end()
    }
}

/// A bijection of `[n]` with its lexicographic (Lehmer) rank cached.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    map: Vec<u8>,
    rank: u64,
}

impl PartialOrd for Permutation {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Permutation {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.map.len(), self.rank).cmp(&(other.map.len(), other.rank))
    }
}

impl Permutation {
    /// `map[i-1] = σ(i)`.
    pub fn from_map(map: Vec<u8>) -> Result<Self> {
        let n = map.len();
        if n > MAX_RANK_N {
            return Err(Error::OutOfRange(format!("permutation size {n} > {MAX_RANK_N}")));
        }
        let mut seen = 0u32;
        for &v in &map {
            if v == 0 || v as usize > n {
                return Err(Error::OutOfRange(format!("image {v} outside [1,{n}]")));
            }
            if seen & (1 << v) != 0 {
                return Err(Error::ColCollision(v));
            }
            seen |= 1 << v;
        }
        let rank = rank_of(&map);
        Ok(Permutation { map, rank })
    }

    pub fn identity(n: usize) -> Self {
        Permutation { map: (1..=n as u8).collect(), rank: 0 }
    }

    pub fn unrank(n: usize, rank: u64) -> Result<Self> {
        if n > MAX_RANK_N || rank >= FACTORIALS[n] {
            return Err(Error::OutOfRange(format!("rank {rank} for n = {n}")));
        }
        let mut map = vec![0u8; n];
        unrank_into(n, rank, &mut map);
        Ok(Permutation { map, rank })
    }

    pub fn n(&self) -> usize {
        self.map.len()
    }

    pub fn map(&self) -> &[u8] {
        &self.map
    }

    /// `σ(i)` for 1-based `i`.
    pub fn apply(&self, i: u8) -> u8 {
        self.map[i as usize - 1]
    }

    pub fn rank(&self) -> u64 {
        self.rank
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        self.map.iter().enumerate().map(|(i, &c)| Point::new(i as u8 + 1, c))
    }

    pub fn to_partial(&self) -> PartialPermutation {
        PartialPermutation { n: self.n() as u8, points: self.points().collect() }
    }

    pub fn contains_point(&self, p: Point) -> bool {
        p.row >= 1 && p.row as usize <= self.n() && self.map[p.row as usize - 1] == p.col
    }

    pub fn contains_all(&self, p: &PartialPermutation) -> bool {
        p.points().iter().all(|&q| self.contains_point(q))
    }

    /// Non-fixed rows, `{i : σ(i) ≠ i}`.
    pub fn support(&self) -> Vec<u8> {
        self.points().filter(|p| p.row != p.col).map(|p| p.row).collect()
    }

    /// `(σ ∘ ρ)(i) = σ(ρ(i))`.
    pub fn compose(&self, rho: &Permutation) -> Result<Self> {
        if self.n() != rho.n() {
            return Err(Error::MismatchedGround(self.n(), rho.n()));
        }
        let map: Vec<u8> = rho.map.iter().map(|&j| self.apply(j)).collect();
        let rank = rank_of(&map);
        Ok(Permutation { map, rank })
    }

    pub fn inverse(&self) -> Self {
        let mut map = vec![0u8; self.n()];
        for (i, &v) in self.map.iter().enumerate() {
            map[v as usize - 1] = i as u8 + 1;
        }
        let rank = rank_of(&map);
        Permutation { map, rank }
    }

    /// Every permutation of `[n]` in rank order.
    pub fn all(n: usize) -> Extensions {
        PartialPermutation::empty(n).extensions()
    }

    /// All permutations of `[n]` with rank `>= start`, in rank order.
    pub fn iter_from(n: usize, start: u64) -> Result<LexWalk> {
        LexWalk::new(n, start)
    }
}

impl PointSet for Permutation {
    fn ground(&self) -> usize {
        self.n()
    }

    fn image(&self, row: u8) -> Option<u8> {
        self.map.get(row as usize - 1).copied()
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.map.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl FromStr for Permutation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let map = s
            .split_whitespace()
            .map(|t| t.parse::<u8>().map_err(|e| Error::Parse(format!("{t:?}: {e}"))))
            .collect::<Result<Vec<u8>>>()?;
        Permutation::from_map(map)
    }
}

/// Lehmer rank of a 1-based image array.
pub fn rank_of(map: &[u8]) -> u64 {
    let n = map.len();
    let mut seen = 0u32;
    let mut rank = 0u64;
    for (i, &v) in map.iter().enumerate() {
        let smaller_used = (seen & ((1u32 << v) - 1)).count_ones() as u64;
        rank += (v as u64 - 1 - smaller_used) * FACTORIALS[n - 1 - i];
        seen |= 1 << v;
    }
    rank
}

pub(crate) fn unrank_into(n: usize, mut rank: u64, out: &mut [u8]) {
    let mut avail: Vec<u8> = (1..=n as u8).collect();
    for (i, slot) in out.iter_mut().enumerate().take(n) {
        let f = FACTORIALS[n - 1 - i];
        let d = (rank / f) as usize;
        rank %= f;
        *slot = avail.remove(d);
    }
}

/// Advances `a` to its lexicographic successor; false when `a` was the last.
pub fn next_permutation<T: Ord>(a: &mut [T]) -> bool {
    if a.len() < 2 {
        return false;
    }
    let mut i = a.len() - 1;
    while i > 0 && a[i - 1] >= a[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = a.len() - 1;
    while a[j] <= a[i - 1] {
        j -= 1;
    }
    a.swap(i - 1, j);
    a[i..].reverse();
    true
}

/// Rank-ordered walk over `Σ_n` starting at an arbitrary rank.
#[derive(Debug, Clone)]
pub struct LexWalk {
    map: Vec<u8>,
    rank: u64,
    end: u64,
}

impl LexWalk {
    pub fn new(n: usize, start: u64) -> Result<Self> {
        if n > MAX_RANK_N {
            return Err(Error::OutOfRange(format!("n = {n} > {MAX_RANK_N}")));
        }
        let end = FACTORIALS[n];
        let mut map = vec![0u8; n];
        if start < end {
            unrank_into(n, start, &mut map);
        }
        Ok(LexWalk { map, rank: start, end })
    }

    /// Visits `(rank, map)` without allocating, stopping before `stop`.
    pub fn for_each_until(mut self, stop: u64, mut f: impl FnMut(u64, &[u8])) {
        let stop = stop.min(self.end);
        while self.rank < stop {
            f(self.rank, &self.map);
            self.rank += 1;
            if self.rank < stop {
                next_permutation(&mut self.map);
            }
        }
    }
}

impl Iterator for LexWalk {
    type Item = Permutation;

    fn next(&mut self) -> Option<Permutation> {
        if self.rank >= self.end {
            return None;
        }
        let out = Permutation { map: self.map.clone(), rank: self.rank };
        self.rank += 1;
        if self.rank < self.end {
            next_permutation(&mut self.map);
        }
        Some(out)
    }
}

/// Iterator over the permutations extending a partial permutation.
///
/// Free columns are assigned to free rows in lexicographic order of the
/// assignment, which is also rank order of the completed permutations.
#[derive(Debug, Clone)]
pub struct Extensions {
    template: Vec<u8>,
    free_rows: Vec<usize>,
    free_cols: Vec<u8>,
    done: bool,
}

impl Extensions {
    fn new(p: &PartialPermutation) -> Self {
        let n = p.n();
        let mut template = vec![0u8; n];
        let mut used = vec![false; n + 1];
        for q in p.points() {
            template[q.row as usize - 1] = q.col;
            used[q.col as usize] = true;
        }
        let free_rows = (0..n).filter(|&i| template[i] == 0).collect();
        let free_cols = (1..=n as u8).filter(|&c| !used[c as usize]).collect();
        Extensions { template, free_rows, free_cols, done: n > MAX_RANK_N }
    }
}

impl Iterator for Extensions {
    type Item = Permutation;

    fn next(&mut self) -> Option<Permutation> {
        if self.done {
            return None;
        }
        let mut map = self.template.clone();
        for (&r, &c) in self.free_rows.iter().zip(&self.free_cols) {
            map[r] = c;
        }
        if !next_permutation(&mut self.free_cols) {
            self.done = true;
        }
        let rank = rank_of(&map);
        Some(Permutation { map, rank })
    }
}
