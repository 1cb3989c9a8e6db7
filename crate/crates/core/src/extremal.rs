//! Maximum intersecting families under a diversity constraint, by clique
//! search on the intersection graph of `Σ_n`.

use num_bigint::BigUint;
use serde::Serialize;

use crate::counting::size_e;
use crate::error::{Error, Result};
use crate::family::{are_isomorphic, build_e, stats, PermFamily};
use crate::perm::{factorial_u64, Permutation};

/// Largest `n` for which the intersection graph is built.
pub const MAX_GRAPH_N: usize = 6;
/// Largest `n` for which the constrained clique search runs.
pub const MAX_SEARCH_N: usize = 5;
/// Node budget used when none is given.
pub const DEFAULT_BUDGET: u64 = 100_000_000;

type Bits = Vec<u64>;

fn test(b: &[u64], i: usize) -> bool {
    b[i / 64] >> (i % 64) & 1 == 1
}

fn set(b: &mut [u64], i: usize) {
    b[i / 64] |= 1 << (i % 64);
}

fn clear(b: &mut [u64], i: usize) {
    b[i / 64] &= !(1 << (i % 64));
}

fn first(b: &[u64]) -> Option<usize> {
    b.iter().enumerate().find(|(_, &w)| w != 0).map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
}

fn ones(b: &[u64]) -> impl Iterator<Item = usize> + '_ {
    b.iter().enumerate().flat_map(|(i, &w)| {
        let mut rest = w;
        std::iter::from_fn(move || {
            (rest != 0).then(|| {
                let j = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                i * 64 + j
            })
        })
    })
}

/// Vertices are Lehmer ranks; an edge joins two permutations sharing a point.
#[derive(Debug, Clone)]
pub struct IntersectionGraph {
    n: usize,
    perms: Vec<Vec<u8>>,
    adj: Vec<Bits>,
}

impl IntersectionGraph {
    pub fn new(n: usize) -> Result<Self> {
        if n > MAX_GRAPH_N {
            return Err(Error::TooLarge(n, MAX_GRAPH_N));
        }
        let perms: Vec<Vec<u8>> = Permutation::all(n).map(|p| p.map().to_vec()).collect();
        let v = perms.len();
        let words = v.div_ceil(64);
        let mut adj = vec![vec![0u64; words]; v];
        for a in 0..v {
            for b in a + 1..v {
                if perms[a].iter().zip(&perms[b]).any(|(x, y)| x == y) {
                    set(&mut adj[a], b);
                    set(&mut adj[b], a);
                }
            }
        }
        Ok(IntersectionGraph { n, perms, adj })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn vertex_count(&self) -> usize {
        self.perms.len()
    }

    pub fn adjacent(&self, a: u64, b: u64) -> bool {
        test(&self.adj[a as usize], b as usize)
    }

    pub fn degree(&self, v: u64) -> usize {
        self.adj[v as usize].iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn neighbors(&self, v: u64) -> impl Iterator<Item = u64> + '_ {
        ones(&self.adj[v as usize]).map(|i| i as u64)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FrontierEntry {
    pub min_diversity: usize,
    /// `None` when no intersecting family reaches the threshold.
    pub max_size: Option<usize>,
    #[serde(serialize_with = "ser_ranks")]
    pub witness: Option<PermFamily>,
    pub witness_diversity: Option<usize>,
    pub exact: bool,
    pub nodes: u64,
    pub isomorphic_to_e: Option<usize>,
}

fn ser_ranks<S: serde::Serializer>(f: &Option<PermFamily>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match f {
        Some(f) => s.collect_seq(f.ranks()),
        None => s.serialize_none(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtremalReport {
    pub n: usize,
    pub frontier: Vec<FrontierEntry>,
    #[serde(serialize_with = "crate::counting::ser_decimal")]
    pub ekr_max: BigUint,
    /// `(n-2)! - (n-3)!`, the large-`n` ceiling on diversity.
    pub diversity_ceiling: u64,
    pub max_achieved_diversity: Option<usize>,
}

struct Search<'a> {
    g: &'a IntersectionGraph,
    min_diversity: usize,
    budget: u64,
    nodes: u64,
    exhausted: bool,
    clique: Vec<usize>,
    deg: Vec<usize>,
    best: usize,
    best_clique: Vec<usize>,
    /// Collect every clique of exactly this size instead of maximising.
    collect: Option<usize>,
    collected: Vec<Vec<usize>>,
}

impl Search<'_> {
    fn max_degree(&self) -> usize {
        self.deg.iter().copied().max().unwrap_or(0)
    }

    fn push(&mut self, v: usize) {
        let n = self.g.n;
        for (i, &c) in self.g.perms[v].iter().enumerate() {
            self.deg[i * n + c as usize - 1] += 1;
        }
        self.clique.push(v);
    }

    fn pop(&mut self) {
        let n = self.g.n;
        let v = self.clique.pop().expect("nonempty clique");
        for (i, &c) in self.g.perms[v].iter().enumerate() {
            self.deg[i * n + c as usize - 1] -= 1;
        }
    }

    fn diversity(&self) -> usize {
        self.clique.len() - self.max_degree()
    }

    fn record(&mut self) {
        if self.diversity() < self.min_diversity {
            return;
        }
        match self.collect {
            Some(size) if self.clique.len() == size => {
                let mut c = self.clique.clone();
                c.sort_unstable();
                self.collected.push(c);
            }
            Some(_) => {}
            None if self.clique.len() > self.best => {
                self.best = self.clique.len();
                self.best_clique = self.clique.clone();
            }
            None => {}
        }
    }

    /// Greedy colouring of `p`; returns vertices in colour order with their
    /// colour numbers, so any clique inside the first `j` vertices has at
    /// most `colours[j]` members.
    fn colour(&self, p: &[u64]) -> Vec<(usize, usize)> {
        let mut uncoloured = p.to_vec();
        let mut out = Vec::new();
        let mut colour = 0;
        while first(&uncoloured).is_some() {
            colour += 1;
            let mut q = uncoloured.clone();
            while let Some(v) = first(&q) {
                clear(&mut q, v);
                clear(&mut uncoloured, v);
                for (w, a) in q.iter_mut().zip(&self.g.adj[v]) {
                    *w &= !a;
                }
                out.push((v, colour));
            }
        }
        out
    }

    fn expand(&mut self, mut p: Bits) {
        self.nodes += 1;
        if self.nodes > self.budget {
            self.exhausted = true;
            return;
        }
        let order = self.colour(&p);
        for &(v, colour) in order.iter().rev() {
            let target = self.collect.unwrap_or(self.best + 1);
            let size = self.clique.len();
            if size + colour < target {
                return;
            }
            // diversity can grow by at most one per added member
            if size + colour < self.min_diversity + self.max_degree() {
                return;
            }
            self.push(v);
            self.record();
            let mut next = p.clone();
            for (w, a) in next.iter_mut().zip(&self.g.adj[v]) {
                *w &= a;
            }
            if first(&next).is_some() && self.collect.is_none_or(|s| self.clique.len() < s) {
                self.expand(next);
            }
            self.pop();
            if self.exhausted {
                return;
            }
            clear(&mut p, v);
        }
    }
}

fn run(g: &IntersectionGraph, min_diversity: usize, budget: u64, collect: Option<usize>) -> Search<'_> {
    let words = g.vertex_count().div_ceil(64);
    let mut s = Search {
        g,
        min_diversity,
        budget,
        nodes: 0,
        exhausted: false,
        clique: Vec::new(),
        deg: vec![0; g.n * g.n],
        best: 0,
        best_clique: Vec::new(),
        collect,
        collected: Vec::new(),
    };
    // left multiplication permutes columns, preserving intersections and
    // degree profiles, so some optimum contains the identity (rank 0)
    s.push(0);
    s.record();
    let mut p = g.adj[0].clone();
    p.truncate(words);
    if first(&p).is_some() {
        s.expand(p);
    }
    s
}

fn family_of(g: &IntersectionGraph, clique: &[usize]) -> Result<PermFamily> {
    PermFamily::from_ranks(g.n, clique.iter().map(|&v| v as u64))
}

/// The largest intersecting family with diversity at least `min_diversity`.
pub fn max_intersecting(g: &IntersectionGraph, min_diversity: usize, budget: u64) -> Result<FrontierEntry> {
    if g.n > MAX_SEARCH_N {
        return Err(Error::TooLarge(g.n, MAX_SEARCH_N));
    }
    let s = run(g, min_diversity, budget, None);
    let found = !s.best_clique.is_empty();
    let witness = if found { Some(family_of(g, &s.best_clique)?) } else { None };
    let mut isomorphic_to_e = None;
    if let Some(w) = &witness {
        for k in 2..=g.n.saturating_sub(2) {
            if size_e(g.n, k)? == BigUint::from(w.len()) && are_isomorphic(w, &build_e(g.n, k)?)?.is_some() {
                isomorphic_to_e = Some(k);
                break;
            }
        }
    }
    Ok(FrontierEntry {
        min_diversity,
        max_size: found.then_some(s.best),
        witness_diversity: witness.as_ref().map(|w| stats(w).diversity),
        witness,
        exact: !s.exhausted,
        nodes: s.nodes,
        isomorphic_to_e,
    })
}

/// Every intersecting family of exactly `size` members containing the
/// identity with diversity at least `min_diversity`. Returns `None` when the
/// budget runs out first.
pub fn witnesses_containing_identity(
    g: &IntersectionGraph,
    min_diversity: usize,
    size: usize,
    budget: u64,
) -> Result<Option<Vec<PermFamily>>> {
    if g.n > MAX_SEARCH_N {
        return Err(Error::TooLarge(g.n, MAX_SEARCH_N));
    }
    let mut s = run(g, min_diversity, budget, Some(size));
    if s.exhausted {
        return Ok(None);
    }
    s.collected.sort();
    s.collected.dedup();
    s.collected.iter().map(|c| family_of(g, c)).collect::<Result<Vec<_>>>().map(Some)
}

/// One entry per threshold `0, 1, 2, …` until no family reaches it.
pub fn frontier(n: usize, budget: u64) -> Result<ExtremalReport> {
    if n > MAX_SEARCH_N {
        return Err(Error::TooLarge(n, MAX_SEARCH_N));
    }
    let g = IntersectionGraph::new(n)?;
    let mut entries: Vec<FrontierEntry> = Vec::new();
    for gamma in 0.. {
        let e = max_intersecting(&g, gamma, budget)?;
        let done = e.max_size.is_none();
        entries.push(e);
        if done {
            break;
        }
    }
    let max_achieved_diversity = entries.iter().filter_map(|e| e.max_size.map(|_| e.min_diversity)).max();
    let ceiling = if n >= 3 { factorial_u64(n - 2) - factorial_u64(n - 3) } else { 0 };
    Ok(ExtremalReport {
        n,
        ekr_max: BigUint::from(entries[0].max_size.unwrap_or(0)),
        frontier: entries,
        diversity_ceiling: ceiling,
        max_achieved_diversity,
    })
}
