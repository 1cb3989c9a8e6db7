use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use permdiv::family::{build_e, build_h, star};
use permdiv::{PermFamily, Point};
use serde::{Serialize, Serializer};

use crate::fail::Failure;

/// An inclusive integer range written `a..b`, `a..=b` or `a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub lo: usize,
    pub hi: usize,
}

impl Span {
    pub fn iter(self) -> impl Iterator<Item = usize> {
        self.lo..=self.hi
    }
}

impl FromStr for Span {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let num = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("bad integer {t:?} in range {s:?}"));
        let (lo, hi) = match s.split_once("..") {
            Some((a, b)) => (num(a)?, num(b.strip_prefix('=').unwrap_or(b))?),
            None => {
                let v = num(s)?;
                (v, v)
            }
        };
        if lo > hi {
            return Err(format!("empty range {s:?}"));
        }
        Ok(Span { lo, hi })
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lo == self.hi {
            write!(f, "{}", self.lo)
        } else {
            write!(f, "{}..{}", self.lo, self.hi)
        }
    }
}

impl Serialize for Span {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// An exact rational written `p/q` or `p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rational(pub BigRational);

impl FromStr for Rational {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("bad rational {s:?}, expected p/q");
        let (p, q) = s.split_once('/').unwrap_or((s, "1"));
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q <= BigInt::from(0) {
            return Err(format!("denominator of {s:?} must be positive"));
        }
        Ok(Rational(BigRational::new(p, q)))
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&self.0)
    }
}

/// A node budget; accepts plain integers and integral scientific notation such as `1e8`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Budget(pub u64);

impl FromStr for Budget {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("bad budget {s:?}, expected a positive integer such as 1e8");
        let v = match s.parse::<u64>() {
            Ok(v) => v,
            Err(_) => {
                let (m, e) = s.split_once(['e', 'E']).ok_or_else(bad)?;
                let m: u64 = m.parse().map_err(|_| bad())?;
                let e: u32 = e.parse().map_err(|_| bad())?;
                10u64.checked_pow(e).and_then(|p| m.checked_mul(p)).ok_or_else(bad)?
            }
        };
        if v == 0 {
            return Err(bad());
        }
        Ok(Budget(v))
    }
}

/// A family named on the command line: `E:n:k`, `H:n:k`, `star:n:r:c` or `file:path`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FamilyLiteral {
    E { n: usize, k: usize },
    H { n: usize, k: usize },
    Star { n: usize, row: u8, col: u8 },
    File(String),
}

impl FromStr for FamilyLiteral {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("bad family literal {s:?}, expected E:n:k, H:n:k, star:n:r:c or file:path");
        if let Some(path) = s.strip_prefix("file:") {
            if path.is_empty() {
                return Err(bad());
            }
            return Ok(FamilyLiteral::File(path.into()));
        }
        let parts: Vec<&str> = s.split(':').collect();
        let nums =
            |xs: &[&str]| xs.iter().map(|x| x.parse::<usize>().map_err(|_| bad())).collect::<Result<Vec<_>, _>>();
        match parts.as_slice() {
            ["E", rest @ ..] if rest.len() == 2 => {
                let v = nums(rest)?;
                Ok(FamilyLiteral::E { n: v[0], k: v[1] })
            }
            ["H", rest @ ..] if rest.len() == 2 => {
                let v = nums(rest)?;
                Ok(FamilyLiteral::H { n: v[0], k: v[1] })
            }
            ["star", rest @ ..] if rest.len() == 3 => {
                let v = nums(rest)?;
                let coord = |x: usize| u8::try_from(x).map_err(|_| bad());
                Ok(FamilyLiteral::Star { n: v[0], row: coord(v[1])?, col: coord(v[2])? })
            }
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for FamilyLiteral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilyLiteral::E { n, k } => write!(f, "E:{n}:{k}"),
            FamilyLiteral::H { n, k } => write!(f, "H:{n}:{k}"),
            FamilyLiteral::Star { n, row, col } => write!(f, "star:{n}:{row}:{col}"),
            FamilyLiteral::File(p) => write!(f, "file:{p}"),
        }
    }
}

impl Serialize for FamilyLiteral {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl FamilyLiteral {
    pub fn build(&self) -> Result<PermFamily, Failure> {
        let fam = match self {
            FamilyLiteral::E { n, k } => build_e(*n, *k)?,
            FamilyLiteral::H { n, k } => build_h(*n, *k)?,
            FamilyLiteral::Star { n, row, col } => star(*n, Point::new(*row, *col))?,
            FamilyLiteral::File(path) => {
                let bytes = std::fs::read(path).map_err(|e| Failure::Config(format!("{path}: {e}")))?;
                match std::str::from_utf8(&bytes) {
                    Ok(text) if text.starts_with("n=") => PermFamily::from_text(text)?,
                    _ => PermFamily::from_bytes(&bytes)?,
                }
            }
        };
        Ok(fam)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spans() {
        assert_eq!("4..7".parse::<Span>().unwrap(), Span { lo: 4, hi: 7 });
        assert_eq!("4..=7".parse::<Span>().unwrap(), Span { lo: 4, hi: 7 });
        assert_eq!("30".parse::<Span>().unwrap(), Span { lo: 30, hi: 30 });
        assert!("7..4".parse::<Span>().is_err());
        assert!("a..4".parse::<Span>().is_err());
        assert_eq!("4..7".parse::<Span>().unwrap().to_string(), "4..7");
    }

    #[test]
    fn rationals() {
        let r: Rational = "3/2".parse().unwrap();
        assert_eq!(r.0, BigRational::new(3.into(), 2.into()));
        assert_eq!("2".parse::<Rational>().unwrap().0, BigRational::from_integer(2.into()));
        assert!("1/0".parse::<Rational>().is_err());
        assert!("x".parse::<Rational>().is_err());
    }

    #[test]
    fn budgets() {
        assert_eq!("1e8".parse::<Budget>().unwrap(), Budget(100_000_000));
        assert_eq!("2500".parse::<Budget>().unwrap(), Budget(2500));
        assert!("1.5e3".parse::<Budget>().is_err());
        assert!("1e30".parse::<Budget>().is_err());
        assert!("0".parse::<Budget>().is_err());
    }

    #[test]
    fn family_literals_roundtrip() {
        for s in ["E:5:2", "H:6:4", "star:4:1:2", "file:/tmp/f.txt"] {
            assert_eq!(s.parse::<FamilyLiteral>().unwrap().to_string(), s);
        }
        for s in ["E:5", "Q:1:2", "star:4:1", "file:", "E:a:2"] {
            assert!(s.parse::<FamilyLiteral>().is_err(), "{s}");
        }
    }

    #[test]
    fn literals_build_expected_sizes() {
        let e: FamilyLiteral = "E:5:2".parse().unwrap();
        assert_eq!(e.build().unwrap().len(), 14);
        let s: FamilyLiteral = "star:4:1:2".parse().unwrap();
        assert_eq!(s.build().unwrap().len(), 6);
        assert!(matches!("H:5:9".parse::<FamilyLiteral>().unwrap().build(), Err(Failure::Config(_))));
    }
}
