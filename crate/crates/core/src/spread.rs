//! Spreadness, homogeneity, spread approximation and a Monte-Carlo harness
//! for the spread lemma.

use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::counting::factorial;
use crate::error::{Error, Result};
use crate::family::{PermFamily, MAX_FAMILY_N};
use crate::perm::{PartialPermutation, Permutation, Point};

/// Largest ground set a [`SetFamily`] can index.
pub const MAX_GROUND: usize = 128;
/// Largest member size for exhaustive subset enumeration.
pub const MAX_MEMBER: usize = 20;
/// Largest `n` accepted by [`is_rq_spread`].
pub const MAX_RQ_N: usize = 8;

/// A family of subsets of `{0, …, ground-1}` stored as bitmasks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetFamily {
    ground: usize,
    grid: Option<usize>,
    members: Vec<u128>,
}

fn cell(p: Point, n: usize) -> u32 {
    (p.row as u32 - 1) * n as u32 + (p.col as u32 - 1)
}

fn mask_of(points: impl IntoIterator<Item = Point>, n: usize) -> u128 {
    points.into_iter().fold(0u128, |m, p| m | 1 << cell(p, n))
}

fn bits(mask: u128) -> impl Iterator<Item = u32> {
    let mut rest = mask;
    std::iter::from_fn(move || {
        (rest != 0).then(|| {
            let i = rest.trailing_zeros();
            rest &= rest - 1;
            i
        })
    })
}

fn decode(mask: u128, n: usize) -> PartialPermutation {
    let pts = bits(mask).map(|i| Point::new((i / n as u32 + 1) as u8, (i % n as u32 + 1) as u8)).collect();
    PartialPermutation::new(n, pts).expect("subset of a permutation")
}

impl SetFamily {
    pub fn new(ground: usize, members: Vec<Vec<usize>>) -> Result<Self> {
        if ground > MAX_GROUND {
            return Err(Error::TooLarge(ground, MAX_GROUND));
        }
        let mut masks = Vec::with_capacity(members.len());
        for m in members {
            let mut mask = 0u128;
            for e in m {
                if e >= ground {
                    return Err(Error::OutOfRange(format!("element {e} not below ground {ground}")));
                }
                mask |= 1 << e;
            }
            masks.push(mask);
        }
        Self::from_masks(ground, None, masks)
    }

    fn from_masks(ground: usize, grid: Option<usize>, mut members: Vec<u128>) -> Result<Self> {
        members.sort_unstable();
        members.dedup();
        if let Some(m) = members.iter().find(|m| m.count_ones() as usize > MAX_MEMBER) {
            return Err(Error::TooLarge(m.count_ones() as usize, MAX_MEMBER));
        }
        Ok(SetFamily { ground, grid, members })
    }

    /// `{0}, {1}, …, {g-1}`.
    pub fn singletons(g: usize) -> Result<Self> {
        Self::new(g, (0..g).map(|e| vec![e]).collect())
    }

    /// Permutations as point sets in `[n]²`, point `(r, c)` ↦ `(r-1)n + (c-1)`.
    pub fn from_perm_family(f: &PermFamily) -> Result<Self> {
        let n = f.n();
        let members = f.iter().map(|p| mask_of(p.points(), n)).collect();
        Self::from_masks(n * n, Some(n), members)
    }

    pub fn from_partials(n: usize, members: &[PartialPermutation]) -> Result<Self> {
        if n * n > MAX_GROUND {
            return Err(Error::TooLarge(n * n, MAX_GROUND));
        }
        let masks = members.iter().map(|m| mask_of(m.points().iter().copied(), n)).collect();
        Self::from_masks(n * n, Some(n), masks)
    }

    pub fn ground(&self) -> usize {
        self.ground
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn max_member_size(&self) -> usize {
        self.members.iter().map(|m| m.count_ones() as usize).max().unwrap_or(0)
    }

    pub fn members(&self) -> Vec<Vec<usize>> {
        self.members.iter().map(|&m| bits(m).map(|i| i as usize).collect()).collect()
    }

    /// The points of `elems` when the family was built from permutations.
    pub fn as_points(&self, elems: &[usize]) -> Option<PartialPermutation> {
        let n = self.grid?;
        Some(decode(elems.iter().fold(0u128, |m, &e| m | 1 << e), n))
    }

    fn all_singletons(&self) -> bool {
        self.members.iter().all(|m| m.count_ones() == 1)
    }
}

/// Number of members containing each subset of some member.
fn subset_counts(members: &[u128]) -> HashMap<u128, u64> {
    let mut counts = HashMap::new();
    for &m in members {
        let mut sub = m;
        loop {
            *counts.entry(sub).or_insert(0) += 1;
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & m;
        }
    }
    counts
}

fn ratio(num: BigUint, den: BigUint) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn powers(x: &BigRational, upto: usize) -> Vec<BigRational> {
    let mut out = vec![BigRational::one()];
    for i in 1..=upto {
        out.push(&out[i - 1] * x);
    }
    out
}

/// Picks the largest `value`, breaking ties by the smallest mask.
fn better(best: &Option<(BigRational, u128)>, value: &BigRational, mask: u128) -> bool {
    match best {
        None => true,
        Some((v, m)) => value > v || (value == v && mask < *m),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpreadCheck {
    pub holds: bool,
    /// The set `X` maximising `|F(X)| r^{|X|} / |F|`, reported on failure.
    pub witness: Option<Vec<usize>>,
    /// `max_{X ≠ ∅} |F(X)| r^{|X|} / |F|`; at most 1 exactly when spread.
    #[serde(serialize_with = "ser_rational")]
    pub worst_ratio: BigRational,
}

pub(crate) fn ser_rational<S: serde::Serializer>(x: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

/// Checks `|F(X)|/|F| ≤ r^{-|X|}` for every nonempty `X` contained in some
/// member; other sets have `F(X) = ∅`.
pub fn is_r_spread(f: &SetFamily, r: &BigRational) -> Result<SpreadCheck> {
    if f.is_empty() {
        return Err(Error::EmptyInput("spreadness needs a nonempty family"));
    }
    let size = BigRational::from_integer(BigInt::from(f.len()));
    let pow = powers(r, f.max_member_size());
    let mut worst: Option<(BigRational, u128)> = None;
    for (&x, &c) in &subset_counts(&f.members) {
        if x == 0 {
            continue;
        }
        let v = BigRational::from_integer(BigInt::from(c)) * &pow[x.count_ones() as usize] / &size;
        if better(&worst, &v, x) {
            worst = Some((v, x));
        }
    }
    let (worst_ratio, x) = worst.unwrap_or((BigRational::zero(), 0));
    let holds = worst_ratio <= BigRational::one();
    let witness = (!holds).then(|| bits(x).map(|i| i as usize).collect());
    Ok(SpreadCheck { holds, witness, worst_ratio })
}

/// The largest multiple of `1/denom` for which `f` is verified spread.
pub fn spread_constant(f: &SetFamily, denom: u64) -> Result<BigRational> {
    let total = f.len() as f64;
    let float = subset_counts(&f.members)
        .into_iter()
        .filter(|&(x, _)| x != 0)
        .map(|(x, c)| (total / c as f64).powf(1.0 / x.count_ones() as f64))
        .fold(f64::INFINITY, f64::min);
    let step = BigRational::new(BigInt::one(), BigInt::from(denom));
    let mut r = BigRational::new(BigInt::from((float * denom as f64).floor() as u64), BigInt::from(denom));
    while !is_r_spread(f, &r)?.holds {
        r -= &step;
    }
    Ok(r)
}

/// An ambient family `A`: all of `Σ_n`, or the permutations containing a
/// fixed partial permutation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AmbientSpace {
    Sym { n: usize },
    Containing { base: PartialPermutation },
}

impl AmbientSpace {
    pub fn n(&self) -> usize {
        match self {
            AmbientSpace::Sym { n } => *n,
            AmbientSpace::Containing { base } => base.n(),
        }
    }

    pub fn base(&self) -> PartialPermutation {
        match self {
            AmbientSpace::Sym { n } => PartialPermutation::empty(*n),
            AmbientSpace::Containing { base } => base.clone(),
        }
    }

    /// `|A|`.
    pub fn size(&self) -> BigUint {
        factorial(self.n() - self.base().len())
    }

    /// `|A(S)|`, the number of members of `A` containing `s`.
    pub fn quotient_size(&self, s: &PartialPermutation) -> BigUint {
        match self.base().union(s) {
            Ok(u) => factorial(self.n() - u.len()),
            Err(_) => BigUint::zero(),
        }
    }

    pub fn contains(&self, p: &Permutation) -> bool {
        p.contains_all(&self.base())
    }

    /// `A` restricted to members containing `s`.
    pub fn with(&self, s: &PartialPermutation) -> Result<Self> {
        Ok(AmbientSpace::Containing { base: self.base().union(s)? })
    }

    pub fn members(&self) -> Result<PermFamily> {
        let base = self.base();
        PermFamily::from_perms(self.n(), &base.extensions().collect::<Vec<_>>())
    }
}

fn check_subfamily(f: &PermFamily, a: &AmbientSpace) -> Result<()> {
    if f.n() != a.n() {
        return Err(Error::MismatchedGround(a.n(), f.n()));
    }
    let base = a.base();
    if let Some(p) = f.iter().find(|p| !a.contains(p)) {
        let missing = base.points().iter().copied().find(|&q| !p.contains_point(q));
        return Err(Error::NotSubfamily(missing));
    }
    Ok(())
}

/// Member masks with the ambient base removed, plus `|A|` and the grid size.
struct Relative {
    n: usize,
    base: PartialPermutation,
    masks: Vec<u128>,
    a_size: BigUint,
}

impl Relative {
    fn new(f: &PermFamily, a: &AmbientSpace) -> Result<Self> {
        if f.is_empty() {
            return Err(Error::EmptyInput("family is empty"));
        }
        if f.n() > MAX_FAMILY_N {
            return Err(Error::TooLarge(f.n(), MAX_FAMILY_N));
        }
        check_subfamily(f, a)?;
        let n = f.n();
        let base = a.base();
        let base_mask = mask_of(base.points().iter().copied(), n);
        let masks = f.iter().map(|p| mask_of(p.points(), n) & !base_mask).collect();
        Ok(Relative { n, base, masks, a_size: a.size() })
    }

    fn a_quotient(&self, s: u128) -> BigUint {
        factorial(self.n - self.base.len() - s.count_ones() as usize)
    }

    /// `|F(S)|·|A| / (τ^{|S|}·|A(S)|·|F|)`; `S` qualifies when this is ≥ 1
    /// and `F(S)` obeys the homogeneity bound when it is ≤ 1.
    fn density(&self, s: u128, count: u64, tau_pow: &[BigRational]) -> BigRational {
        let num = BigUint::from(count) * &self.a_size;
        let den = self.a_quotient(s) * self.masks.len();
        ratio(num, den) / &tau_pow[s.count_ones() as usize]
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HomogeneityCheck {
    pub homogeneous: bool,
    pub witness: Option<PartialPermutation>,
    #[serde(serialize_with = "ser_rational")]
    pub worst_ratio: BigRational,
}

/// Checks `|F(S)|/|F| ≤ τ^{|S|}·|A(S)|/|A|` for every `S` contained in some
/// member of `f`, with exact rational arithmetic.
pub fn is_homogeneous(f: &PermFamily, a: &AmbientSpace, tau: &BigRational) -> Result<HomogeneityCheck> {
    let rel = Relative::new(f, a)?;
    let pow = powers(tau, rel.n);
    let mut worst: Option<(BigRational, u128)> = None;
    for (&s, &c) in &subset_counts(&rel.masks) {
        if s == 0 {
            continue;
        }
        let v = rel.density(s, c, &pow);
        if better(&worst, &v, s) {
            worst = Some((v, s));
        }
    }
    let (worst_ratio, s) = worst.unwrap_or((BigRational::one(), 0));
    let homogeneous = worst_ratio <= BigRational::one();
    let witness = (!homogeneous).then(|| decode(s, rel.n));
    Ok(HomogeneityCheck { homogeneous, witness, worst_ratio })
}

/// An inclusion-maximal `S` with `|F(S)| ≥ τ^{|S|}·(|A(S)|/|A|)·|F|`, among
/// sets contained in some member of `f` and disjoint from the ambient base.
///
/// Grows `S` from `∅` by the canonically smallest qualifying point; if a
/// larger qualifying superset exists beyond that, the canonically smallest
/// one of maximum size is returned instead.
pub fn find_maximal_qualifying_set(f: &PermFamily, a: &AmbientSpace, tau: &BigRational) -> Result<PartialPermutation> {
    let rel = Relative::new(f, a)?;
    let pow = powers(tau, rel.n);
    let counts = subset_counts(&rel.masks);
    let universe = rel.masks.iter().fold(0u128, |u, &m| u | m);
    let one = BigRational::one();
    let qualifies = |s: u128| counts.get(&s).is_some_and(|&c| rel.density(s, c, &pow) >= one);

    let mut cur = 0u128;
    'grow: loop {
        for b in bits(universe & !cur) {
            if qualifies(cur | 1 << b) {
                cur |= 1 << b;
                continue 'grow;
            }
        }
        break;
    }
    let key = |s: u128| decode(s, rel.n).points().to_vec();
    let best = counts
        .keys()
        .copied()
        .filter(|&s| s & cur == cur && s != cur && qualifies(s))
        .map(|s| (std::cmp::Reverse(s.count_ones()), key(s), s))
        .min();
    if let Some((_, _, s)) = best {
        cur = s;
    }
    Ok(decode(cur, rel.n))
}

#[derive(Debug, Clone)]
pub struct Cover {
    pub set: PartialPermutation,
    pub family: PermFamily,
}

#[derive(Debug, Clone)]
pub struct SpreadDecomposition {
    pub ambient: AmbientSpace,
    pub tau: BigRational,
    pub q: usize,
    pub covers: Vec<Cover>,
    pub residual: PermFamily,
    /// The qualifying set larger than `q` that ended the peeling, if any.
    pub stopped_on: Option<PartialPermutation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Postconditions {
    pub partition_exact: bool,
    pub covers_contained: bool,
    pub cover_sizes_within_q: bool,
    pub homogeneous: bool,
    pub residual_within_bound: bool,
}

impl Postconditions {
    pub fn all(&self) -> bool {
        self.partition_exact
            && self.covers_contained
            && self.cover_sizes_within_q
            && self.homogeneous
            && self.residual_within_bound
    }
}

impl SpreadDecomposition {
    /// `τ^{-q-1}·|A|`.
    pub fn residual_bound(&self) -> BigRational {
        let scale = BigRational::from_integer(BigInt::from(self.ambient.size()));
        scale / powers(&self.tau, self.q + 1)[self.q + 1].clone()
    }

    pub fn verify(&self, original: &PermFamily) -> Result<Postconditions> {
        let mut union = self.residual.clone();
        let mut total = self.residual.len();
        for c in &self.covers {
            union = union.union(&c.family)?;
            total += c.family.len();
        }
        let partition_exact = union == *original && total == original.len();
        let covers_contained = self.covers.iter().all(|c| c.family.iter().all(|p| p.contains_all(&c.set)));
        let cover_sizes_within_q = self.covers.iter().all(|c| c.set.len() <= self.q);
        let mut homogeneous = true;
        for c in &self.covers {
            let amb = self.ambient.with(&c.set)?;
            homogeneous &= is_homogeneous(&c.family, &amb, &self.tau)?.homogeneous;
        }
        let residual = BigRational::from_integer(BigInt::from(self.residual.len()));
        let residual_within_bound = residual <= self.residual_bound();
        Ok(Postconditions {
            partition_exact,
            covers_contained,
            cover_sizes_within_q,
            homogeneous,
            residual_within_bound,
        })
    }

    pub fn to_json(&self, homogeneity_verified: bool) -> Value {
        let covers: Vec<Value> = self
            .covers
            .iter()
            .map(|c| {
                let s: Vec<[u8; 2]> = c.set.points().iter().map(|p| [p.row, p.col]).collect();
                json!({ "S": s, "size": c.family.len() })
            })
            .collect();
        json!({
            "tau": self.tau.to_string(),
            "q": self.q,
            "covers": covers,
            "residual_size": self.residual.len(),
            "residual_bound": self.residual_bound().to_string(),
            "homogeneity_verified": homogeneity_verified,
        })
    }
}

/// Repeatedly peels `F[S]` for an inclusion-maximal qualifying `S`, stopping
/// when `S` has more than `q` points or nothing is left.
pub fn spread_approximate(
    f: &PermFamily,
    a: &AmbientSpace,
    tau: &BigRational,
    q: usize,
) -> Result<SpreadDecomposition> {
    if *tau <= BigRational::one() {
        return Err(Error::PreconditionViolation(format!("tau = {tau} must exceed 1")));
    }
    if f.is_empty() {
        return Err(Error::EmptyInput("family is empty"));
    }
    check_subfamily(f, a)?;
    let mut cur = f.clone();
    let mut covers = Vec::new();
    let mut stopped_on = None;
    while !cur.is_empty() {
        let s = find_maximal_qualifying_set(&cur, a, tau)?;
        if s.len() > q {
            stopped_on = Some(s);
            break;
        }
        let peeled = cur.restrict(&s);
        cur = cur.difference(&peeled)?;
        covers.push(Cover { set: s, family: peeled });
    }
    Ok(SpreadDecomposition { ambient: a.clone(), tau: tau.clone(), q, covers, residual: cur, stopped_on })
}

/// Every member of `s1` shares a point with every member of `s2`.
pub fn cross_intersecting(s1: &[PartialPermutation], s2: &[PartialPermutation]) -> bool {
    s1.iter().all(|a| s2.iter().all(|b| a.points().iter().any(|&p| b.contains(p))))
}

/// Parameter choices `τ₁ = 1.01`, `q₁ = ⌈10 log_{1.01} n⌉`,
/// `τ₂ = k / ln² n`, `q₂ = ⌈1.1(t-k)⌉`.
#[derive(Debug, Clone, Serialize)]
pub struct DualPreset {
    #[serde(serialize_with = "ser_rational")]
    pub tau1: BigRational,
    pub q1: usize,
    #[serde(serialize_with = "ser_rational")]
    pub tau2: BigRational,
    pub q2: usize,
}

impl DualPreset {
    pub fn new(n: usize, k: usize, t: usize) -> Result<Self> {
        if n < 2 || t < k {
            return Err(Error::OutOfRange(format!("need n >= 2 and t >= k, got n={n} k={k} t={t}")));
        }
        let ln = (n as f64).ln();
        let tau2 = BigRational::from_f64(k as f64 / (ln * ln))
            .ok_or_else(|| Error::OutOfRange("tau2 is not finite".into()))?;
        Ok(DualPreset {
            tau1: BigRational::new(BigInt::from(101), BigInt::from(100)),
            q1: (10.0 * ln / 1.01f64.ln()).ceil() as usize,
            tau2,
            q2: (1.1 * (t - k) as f64).ceil() as usize,
        })
    }
}

/// Both decompositions and whether their cover sets cross-intersect.
#[derive(Debug, Clone)]
pub struct DualReport {
    pub first: SpreadDecomposition,
    pub second: SpreadDecomposition,
    pub cross_intersecting: bool,
}

pub fn dual_spread_check(
    (f1, a1, tau1, q1): (&PermFamily, &AmbientSpace, &BigRational, usize),
    (f2, a2, tau2, q2): (&PermFamily, &AmbientSpace, &BigRational, usize),
) -> Result<DualReport> {
    let first = spread_approximate(f1, a1, tau1, q1)?;
    let second = spread_approximate(f2, a2, tau2, q2)?;
    let s1: Vec<PartialPermutation> = first.covers.iter().map(|c| c.set.clone()).collect();
    let s2: Vec<PartialPermutation> = second.covers.iter().map(|c| c.set.clone()).collect();
    let cross_intersecting = cross_intersecting(&s1, &s2);
    Ok(DualReport { first, second, cross_intersecting })
}

#[derive(Debug, Clone, Serialize)]
pub struct RqCheck {
    pub holds: bool,
    /// A quotient set `S` and a set `X` where `A(S)` fails to be spread.
    pub witness: Option<(PartialPermutation, PartialPermutation)>,
    pub quotients_checked: usize,
}

fn partials_upto(n: usize, q: usize, base: &PartialPermutation) -> Vec<PartialPermutation> {
    fn go(
        n: usize,
        q: usize,
        row: u8,
        cur: &mut Vec<Point>,
        base: &PartialPermutation,
        out: &mut Vec<PartialPermutation>,
    ) {
        out.push(PartialPermutation::new(n, cur.clone()).expect("valid by construction"));
        if cur.len() == q {
            return;
        }
        for r in row..=n as u8 {
            for c in 1..=n as u8 {
                let p = Point::new(r, c);
                if base.accepts(p) && !base.contains(p) && cur.iter().all(|x| x.col != c) {
                    cur.push(p);
                    go(n, q, r + 1, cur, base, out);
                    cur.pop();
                }
            }
        }
    }
    let mut out = Vec::new();
    go(n, q, 1, &mut Vec::new(), base, &mut out);
    out
}

/// Checks that `A(S)` is `r`-spread for every partial permutation `S` of
/// size at most `q`, enumerating each quotient family explicitly.
pub fn is_rq_spread(a: &AmbientSpace, r: &BigRational, q: usize) -> Result<RqCheck> {
    let n = a.n();
    if n > MAX_RQ_N {
        return Err(Error::TooLarge(n, MAX_RQ_N));
    }
    let base = a.base();
    let members: Vec<Permutation> = base.extensions().collect();
    let quotients = partials_upto(n, q, &base);
    let mut witness = None;
    for s in &quotients {
        let fixed = base.union(s)?;
        let drop = mask_of(fixed.points().iter().copied(), n);
        let masks: Vec<u128> =
            members.iter().filter(|p| p.contains_all(s)).map(|p| mask_of(p.points(), n) & !drop).collect();
        let fam = SetFamily::from_masks(n * n, Some(n), masks)?;
        let check = is_r_spread(&fam, r)?;
        if !check.holds {
            let x = check.witness.expect("witness on failure");
            witness = Some((s.clone(), fam.as_points(&x).expect("grid family")));
            break;
        }
    }
    Ok(RqCheck { holds: witness.is_none(), witness, quotients_checked: quotients.len() })
}

/// How the random set `W` is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sampling {
    /// Each element independently with probability `min(mδ, 1)`.
    Independent,
    /// Union of `⌈m⌉` independent `δ`-random sets.
    UnionOfRounds,
}

#[derive(Debug, Clone)]
pub struct TrialConfig {
    pub r: BigRational,
    pub m: f64,
    pub delta: f64,
    pub trials: u64,
    pub seed: u64,
    pub sampling: Sampling,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialReport {
    pub generator: &'static str,
    pub seed: u64,
    pub trials: u64,
    pub sampling: Sampling,
    pub hits: u64,
    pub empirical: f64,
    pub standard_error: f64,
    /// `1 - (2/log₂(rδ))^m·k` before clamping; `None` when `rδ ≤ 1`.
    pub bound_raw: Option<f64>,
    pub bound: f64,
    /// Closed-form cover probability, known for families of singletons.
    pub exact: Option<f64>,
    pub above_bound: bool,
    pub matches_exact: Option<bool>,
}

impl TrialConfig {
    fn inclusion_probability(&self) -> f64 {
        match self.sampling {
            Sampling::Independent => (self.m * self.delta).min(1.0),
            Sampling::UnionOfRounds => 1.0 - (1.0 - self.delta).powi(self.m.ceil() as i32),
        }
    }
}

fn sample(rng: &mut ChaCha8Rng, ground: usize, cfg: &TrialConfig) -> u128 {
    let rounds = match cfg.sampling {
        Sampling::Independent => 1,
        Sampling::UnionOfRounds => cfg.m.ceil() as usize,
    };
    let p = match cfg.sampling {
        Sampling::Independent => (cfg.m * cfg.delta).min(1.0),
        Sampling::UnionOfRounds => cfg.delta,
    };
    let mut w = 0u128;
    for _ in 0..rounds {
        for e in 0..ground {
            if rng.random_bool(p) {
                w |= 1 << e;
            }
        }
    }
    w
}

/// Estimates `Pr[∃F ∈ F: F ⊂ W]` and compares it with the spread lemma
/// bound. Trial `i` draws from a ChaCha8 stream `i` under `seed`.
pub fn spread_lemma_trial(f: &SetFamily, cfg: &TrialConfig) -> Result<TrialReport> {
    let md = cfg.m * cfg.delta;
    if !(md > 0.0 && md <= 1.0 && cfg.delta <= 1.0) {
        return Err(Error::OutOfRange(format!("m·delta = {md} must lie in (0, 1]")));
    }
    if cfg.trials == 0 {
        return Err(Error::OutOfRange("trials must be positive".into()));
    }
    if !is_r_spread(f, &cfg.r)?.holds {
        return Err(Error::NotSpread(cfg.r.to_string()));
    }
    let k = f.max_member_size() as f64;
    let hits = (0..cfg.trials)
        .into_par_iter()
        .filter(|&i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i);
            let w = sample(&mut rng, f.ground, cfg);
            f.members.iter().any(|&m| m & !w == 0)
        })
        .count() as u64;
    let n = cfg.trials as f64;
    let empirical = hits as f64 / n;
    let rd = cfg.r.to_f64().unwrap_or(f64::INFINITY) * cfg.delta;
    let bound_raw = (rd > 1.0).then(|| 1.0 - (2.0 / rd.log2()).powf(cfg.m) * k);
    let bound = bound_raw.unwrap_or(0.0).clamp(0.0, 1.0);
    let exact = f.all_singletons().then(|| 1.0 - (1.0 - cfg.inclusion_probability()).powi(f.len() as i32));
    let p = exact.unwrap_or(empirical);
    let standard_error = (p * (1.0 - p) / n).sqrt();
    let above_bound = bound <= 0.0 || empirical >= bound - 3.0 * standard_error;
    let matches_exact = exact.map(|e| (empirical - e).abs() <= 3.0 * standard_error + f64::EPSILON);
    Ok(TrialReport {
        generator: "ChaCha8",
        seed: cfg.seed,
        trials: cfg.trials,
        sampling: cfg.sampling,
        hits,
        empirical,
        standard_error,
        bound_raw,
        bound,
        exact,
        above_bound,
        matches_exact,
    })
}
