//! Exact big-integer counts: derangements, ménage numbers, permanents and
//! the closed forms for `|N(H_k)|` and `|E_k|`.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::perm::{PartialPermutation, Point};

pub type ExactCount = BigUint;

pub fn factorial(n: usize) -> BigUint {
    (1..=n as u64).fold(BigUint::one(), |acc, i| acc * i)
}

pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// `d_0, …, d_n` via `d_m = (m-1)(d_{m-1} + d_{m-2})`.
pub fn derangements_upto(n: usize) -> Vec<BigUint> {
    let mut d = vec![BigUint::one(), BigUint::zero()];
    for m in 2..=n {
        let next = (&d[m - 1] + &d[m - 2]) * (m - 1);
        d.push(next);
    }
    d.truncate(n + 1);
    d
}

pub fn derangement_number(n: usize) -> BigUint {
    derangements_upto(n).pop().expect("nonempty")
}

/// `n! Σ_{i=0}^{n} (-1)^i / i!`, evaluated term by term as `n!/i!`.
pub fn derangement_inclusion_exclusion(n: usize) -> BigUint {
    let mut total = BigInt::zero();
    let mut falling = BigUint::one(); // n!/i! for i = n, n-1, …
    for i in (0..=n).rev() {
        let term = BigInt::from(falling.clone());
        if i % 2 == 0 {
            total += term;
        } else {
            total -= term;
        }
        falling *= i.max(1);
    }
    total.to_biguint().expect("derangement count is nonnegative")
}

/// Rational bounds `lo < e < hi` from the Taylor partial sum with `terms`
/// terms; the tail is below `1/(m!·m)` for `m = terms - 1`.
pub fn e_bounds(terms: usize) -> (BigRational, BigRational) {
    let m = terms.max(2) - 1;
    let mut sum = BigRational::zero();
    let mut fact = BigInt::one();
    for i in 0..=m {
        if i > 0 {
            fact *= i;
        }
        sum += BigRational::new(BigInt::one(), fact.clone());
    }
    let tail = BigRational::new(BigInt::one(), fact * m);
    let hi = &sum + tail;
    (sum, hi)
}

fn rat(x: &BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from(x.clone()))
}

/// True iff `d` is provably the nearest integer to `n!/e`, using rational
/// bounds on `e` tight enough for `n`.
pub fn is_nearest_to_factorial_over_e(n: usize, d: &BigUint) -> bool {
    let (lo, hi) = e_bounds(n + 25);
    let f = rat(&factorial(n));
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let dd = rat(d);
    // n!/e lies in (n!/hi, n!/lo); require that interval inside (d - 1/2, d + 1/2)
    &f / &hi > &dd - &half && &f / &lo < &dd + &half
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k < 2 || k + 2 > n {
        return Err(Error::OutOfRange(format!("k = {k} not in [2, n-2] for n = {n}")));
    }
    Ok(())
}

/// `(n-1)! - Σ_{i=0}^{k-1} C(k-1, i) d_{n-i-1}`.
pub fn size_n_h_by_derangements(n: usize, k: usize) -> Result<BigUint> {
    check_k(n, k)?;
    let d = derangements_upto(n);
    let avoid: BigUint = (0..k).map(|i| binomial(k - 1, i) * &d[n - i - 1]).sum();
    Ok(factorial(n - 1) - avoid)
}

/// `Σ_{i=1}^{n-k} (-1)^{i+1} C(n-k, i) (n-1-i)!`.
pub fn size_n_h_by_inclusion_exclusion(n: usize, k: usize) -> Result<BigUint> {
    check_k(n, k)?;
    let mut total = BigInt::zero();
    for i in 1..=n - k {
        let term = BigInt::from(binomial(n - k, i) * factorial(n - 1 - i));
        if i % 2 == 1 {
            total += term;
        } else {
            total -= term;
        }
    }
    Ok(total.to_biguint().expect("count is nonnegative"))
}

/// `|N(H_k)|`, cross-checked between both closed forms.
pub fn size_n_h(n: usize, k: usize) -> Result<BigUint> {
    let a = size_n_h_by_derangements(n, k)?;
    let b = size_n_h_by_inclusion_exclusion(n, k)?;
    if a != b {
        return Err(Error::InternalMismatch(format!("|N(H_{k})| at n={n}: {a} vs {b}")));
    }
    Ok(a)
}

/// `|E_k| = |N(H_k)| + k! - (k-1)!`.
pub fn size_e(n: usize, k: usize) -> Result<BigUint> {
    Ok(size_n_h(n, k)? + factorial(k) - factorial(k - 1))
}

/// `3(n-2)! - 2(n-3)!`.
pub fn endpoint_size(n: usize) -> BigUint {
    factorial(n - 2) * 3u32 - factorial(n - 3) * 2u32
}

/// Largest dimension accepted by [`permanent01`].
pub const PERMANENT_CAP: usize = 24;

/// A square 0-1 matrix; row `i` is a bitmask over columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMatrix {
    dim: usize,
    rows: Vec<u32>,
}

impl BinaryMatrix {
    pub fn from_rows(rows: Vec<Vec<u8>>) -> Result<Self> {
        let dim = rows.len();
        if dim > 32 {
            return Err(Error::TooLarge(dim, PERMANENT_CAP));
        }
        let mut masks = Vec::with_capacity(dim);
        for row in &rows {
            if row.len() != dim {
                return Err(Error::PreconditionViolation("matrix is not square".into()));
            }
            let mut m = 0u32;
            for (j, &v) in row.iter().enumerate() {
                match v {
                    0 => {}
                    1 => m |= 1 << j,
                    _ => return Err(Error::PreconditionViolation(format!("entry {v} is not 0/1"))),
                }
            }
            masks.push(m);
        }
        Ok(BinaryMatrix { dim, rows: masks })
    }

    pub fn ones(dim: usize) -> Self {
        let full = if dim == 32 { u32::MAX } else { (1u32 << dim) - 1 };
        BinaryMatrix { dim, rows: vec![full; dim] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i] >> j & 1 == 1
    }

    pub fn clear(&mut self, i: usize, j: usize) {
        self.rows[i] &= !(1 << j);
    }

    /// `J - I` (zero diagonal).
    pub fn derangement_matrix(dim: usize) -> Self {
        let mut m = Self::ones(dim);
        for i in 0..dim {
            m.clear(i, i);
        }
        m
    }

    /// `J - I - C`: zeros on the diagonal and the cyclic superdiagonal.
    pub fn menage_matrix(dim: usize) -> Self {
        let mut m = Self::derangement_matrix(dim);
        for i in 0..dim {
            m.clear(i, (i + 1) % dim);
        }
        m
    }
}

/// Ryser's formula over one Gray-code block: subsets whose high bits are
/// fixed to `high`, low `low_bits` bits walked in Gray order.
fn ryser_block(m: &BinaryMatrix, high: u32, low_bits: usize) -> i128 {
    let n = m.dim;
    let col_masks: Vec<u32> = (0..n).map(|j| (0..n).fold(0u32, |acc, i| acc | ((m.rows[i] >> j & 1) << i))).collect();
    let mut sums: Vec<i64> = m.rows.iter().map(|r| (r & high).count_ones() as i64).collect();
    let mut subset = high;
    let mut acc: i128 = 0;
    let parity = |s: u32| if (n - s.count_ones() as usize).is_multiple_of(2) { 1i128 } else { -1 };
    let product = |sums: &[i64]| sums.iter().fold(1i128, |p, &s| p.wrapping_mul(s as i128));
    acc = acc.wrapping_add(parity(subset).wrapping_mul(product(&sums)));
    for g in 1u64..(1u64 << low_bits) {
        let j = g.trailing_zeros() as usize;
        let bit = 1u32 << j;
        let sign: i64 = if subset & bit == 0 { 1 } else { -1 };
        subset ^= bit;
        let mut col = col_masks[j];
        while col != 0 {
            let i = col.trailing_zeros() as usize;
            sums[i] += sign;
            col &= col - 1;
        }
        acc = acc.wrapping_add(parity(subset).wrapping_mul(product(&sums)));
    }
    acc
}

/// Exact permanent of a 0-1 matrix via Ryser's inclusion–exclusion with
/// Gray-code updates. Intermediate sums wrap modulo 2^128; the true value
/// is at most `24! < 2^80`, so the wrapped total is exact.
pub fn permanent01(m: &BinaryMatrix) -> Result<BigUint> {
    let n = m.dim;
    if n > PERMANENT_CAP {
        return Err(Error::TooLarge(n, PERMANENT_CAP));
    }
    if n == 0 {
        return Ok(BigUint::one());
    }
    let high_bits = n.saturating_sub(14);
    let low_bits = n - high_bits;
    let total: i128 = (0..1u32 << high_bits)
        .into_par_iter()
        .map(|h| ryser_block(m, h << low_bits, low_bits))
        .reduce(|| 0, i128::wrapping_add);
    Ok(BigUint::from(total as u128))
}

/// Ménage number by Touchard's sum
/// `Σ_k (-1)^k · 2n/(2n-k) · C(2n-k, k) · (n-k)!`.
pub fn menage_number(n: usize) -> Result<BigUint> {
    if n < 3 {
        return Err(Error::OutOfRange(format!("ménage number needs n >= 3, got {n}")));
    }
    let mut total = BigInt::zero();
    for k in 0..=n {
        let coeff = binomial(2 * n - k, k) * (2 * n) / (2 * n - k);
        let term = BigInt::from(coeff * factorial(n - k));
        if k % 2 == 0 {
            total += term;
        } else {
            total -= term;
        }
    }
    Ok(total.to_biguint().expect("ménage number is nonnegative"))
}

/// Checks `U_n ≥ (n!/e²)(n-2)/(n-1)` with `e` replaced by a rational lower
/// bound, which only makes the right-hand side larger.
pub fn menage_lower_envelope_holds(n: usize) -> Result<bool> {
    let u = menage_number(n)?;
    let (lo, _) = e_bounds(40);
    let rhs = rat(&factorial(n)) * BigRational::new(BigInt::from(n - 2), BigInt::from(n - 1)) / (&lo * &lo);
    Ok(rat(&u) >= rhs)
}

/// Conservative right-hand side `((n-2)! - 2(n-3)!) / e²`, evaluated with a
/// rational lower bound on `e`.
pub fn double_avoid_lower_bound(n: usize) -> BigRational {
    let (lo, _) = e_bounds(40);
    let num = BigInt::from(factorial(n - 2)) - BigInt::from(factorial(n - 3)) * 2;
    BigRational::from_integer(num) / (&lo * &lo)
}

/// `|Σ_{σ̄, π̄}[p1, p2]|`: permutations containing `p1` and `p2` that share
/// no point with `σ` or `π`, computed as the permanent of the reduced
/// `(n-2) × (n-2)` matrix with zeros at the points of `σ ∪ π`.
pub fn double_avoid_count(
    n: usize,
    sigma: &PartialPermutation,
    pi: &PartialPermutation,
    p1: Point,
    p2: Point,
) -> Result<BigUint> {
    for x in [sigma, pi] {
        if x.n() != n {
            return Err(Error::MismatchedGround(n, x.n()));
        }
    }
    let pair =
        PartialPermutation::new(n, vec![p1, p2]).map_err(|e| Error::ConstraintConflict(format!("{p1}, {p2}: {e}")))?;
    if pair.len() != 2 {
        return Err(Error::ConstraintConflict(format!("{p1} and {p2} coincide")));
    }
    for p in [p1, p2] {
        if sigma.contains(p) || pi.contains(p) {
            return Err(Error::ConstraintConflict(format!("{p} lies in an avoided set")));
        }
    }
    let rows: Vec<u8> = (1..=n as u8).filter(|&r| r != p1.row && r != p2.row).collect();
    let cols: Vec<u8> = (1..=n as u8).filter(|&c| c != p1.col && c != p2.col).collect();
    let mut m = BinaryMatrix::ones(n - 2);
    for q in sigma.points().iter().chain(pi.points()) {
        if let (Some(i), Some(j)) = (rows.iter().position(|&r| r == q.row), cols.iter().position(|&c| c == q.col)) {
            m.clear(i, j);
        }
    }
    permanent01(&m)
}

/// The weighted hitting count `Σ_{j=i}^{t-i-1} C(t-i-1, j-i) d_{n-j-1}`,
/// evaluated as written; an inverted range is the empty sum.
pub fn hitting_weighted_count(n: usize, t: usize, i: usize) -> Result<BigUint> {
    if i < 2 || i + 1 > t || t > n {
        return Err(Error::OutOfRange(format!("need 2 <= i <= t-1 <= n-1, got n={n} t={t} i={i}")));
    }
    let d = derangements_upto(n);
    let upper = t as isize - i as isize - 1;
    Ok((i as isize..=upper)
        .map(|j| {
            let j = j as usize;
            binomial(t - i - 1, j - i) * &d[n - j - 1]
        })
        .sum())
}

/// Which leading-term estimate of `|N(H_k)|` to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Estimate {
    /// `(n-2)!·(n-k)`, for `k` close to `n`.
    NearTop,
    /// `(n-1)!·(1 - e^{-1}(1 + 1/n)^{k-1})`, for `k` well below `n`.
    Exponential,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub n: usize,
    pub k: usize,
    pub which: Estimate,
    #[serde(serialize_with = "ser_decimal")]
    pub exact: BigUint,
    /// Both values below are divided by `(n-1)!`.
    pub exact_normalized: f64,
    pub estimate_normalized: f64,
    pub relative_error: f64,
    pub claimed_error_order: &'static str,
}

pub(crate) fn ser_decimal<S: serde::Serializer>(x: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_str_radix(10))
}

fn ratio_f64(num: &BigUint, den: &BigUint) -> f64 {
    BigRational::new(BigInt::from(num.clone()), BigInt::from(den.clone())).to_f64().expect("finite ratio")
}

pub fn asymptotic_estimate(n: usize, k: usize, which: Estimate) -> Result<EstimateReport> {
    let exact = size_n_h(n, k)?;
    let scale = factorial(n - 1);
    let exact_normalized = ratio_f64(&exact, &scale);
    let (estimate_normalized, relative_error, claimed) = match which {
        Estimate::NearTop => {
            let est = factorial(n - 2) * (n - k);
            let diff = BigRational::from_integer(BigInt::from(est.clone()) - BigInt::from(exact.clone()));
            let rel = (diff.abs() / rat(&exact)).to_f64().expect("finite");
            (ratio_f64(&est, &scale), rel, "O((n-k)^2/n)")
        }
        Estimate::Exponential => {
            let est = 1.0 - (-1.0f64).exp() * (1.0 + 1.0 / n as f64).powi(k as i32 - 1);
            let rel = (est - exact_normalized).abs() / exact_normalized;
            (est, rel, "O(k log^2 n / n^2)")
        }
    };
    Ok(EstimateReport {
        n,
        k,
        which,
        exact,
        exact_normalized,
        estimate_normalized,
        relative_error,
        claimed_error_order: claimed,
    })
}
