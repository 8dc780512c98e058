//! Sparse bivariate polynomials with arbitrary-precision integer coefficients.
//!
//! The first variable is always `t`. The second is `y` for subtree
//! polynomials (with `y = z + 1`); [`BiPoly::to_z_form`] and
//! [`BiPoly::from_z_form`] move between the two by exact substitution.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::{self, Deserializer};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Polynomial in `t` and a second variable, keyed by `(t-degree, second-degree)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct BiPoly {
    terms: BTreeMap<(u32, u32), BigInt>,
}

impl BiPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::monomial(1, 0, 0)
    }

    /// `c · t^i · y^j`.
    pub fn monomial(c: impl Into<BigInt>, i: u32, j: u32) -> Self {
        let mut p = Self::zero();
        p.add_term(i, j, c.into());
        p
    }

    pub fn t() -> Self {
        Self::monomial(1, 1, 0)
    }

    pub fn y() -> Self {
        Self::monomial(1, 0, 1)
    }

    /// Builds from `(i, j, c)` triples; repeated keys are summed.
    pub fn from_terms<C: Into<BigInt>>(terms: impl IntoIterator<Item = (u32, u32, C)>) -> Self {
        let mut p = Self::zero();
        for (i, j, c) in terms {
            p.add_term(i, j, c.into());
        }
        p
    }

    fn add_term(&mut self, i: u32, j: u32, c: BigInt) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry((i, j)).or_insert_with(BigInt::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&(i, j));
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, i: u32, j: u32) -> BigInt {
        self.terms.get(&(i, j)).cloned().unwrap_or_default()
    }

    /// Nonzero terms in descending `(i, j)` order.
    pub fn terms(&self) -> impl Iterator<Item = (u32, u32, &BigInt)> {
        self.terms.iter().rev().map(|(&(i, j), c)| (i, j, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn t_degree(&self) -> Option<u32> {
        self.terms.keys().map(|k| k.0).max()
    }

    /// Coefficients of `t^i` as a map from second-variable degree.
    pub fn t_row(&self, i: u32) -> BTreeMap<u32, BigInt> {
        self.terms
            .range((i, 0)..=(i, u32::MAX))
            .map(|(&(_, j), c)| (j, c.clone()))
            .collect()
    }

    pub fn eval(&self, t: &BigInt, y: &BigInt) -> BigInt {
        self.terms
            .iter()
            .map(|(&(i, j), c)| c * t.pow(i) * y.pow(j))
            .sum()
    }

    pub fn pow(&self, e: u32) -> Self {
        (0..e).fold(Self::one(), |acc, _| &acc * self)
    }

    /// Replaces the second variable `v` by `v + shift`.
    fn shift_second(&self, shift: i64) -> Self {
        let shift = BigInt::from(shift);
        let mut out = Self::zero();
        for (&(i, j), c) in &self.terms {
            // (v + s)^j = Σ_k C(j,k) v^k s^(j−k)
            let mut binom = BigInt::one();
            for k in (0..=j).rev() {
                out.add_term(i, k, c * &binom * shift.pow(j - k));
                // move from C(j, k) to C(j, k−1)
                if k > 0 {
                    binom = binom * k / (j - k + 1);
                }
            }
        }
        out
    }

    /// Rewrites a `(t, y)` polynomial in `(t, z)` with `y = z + 1`.
    pub fn to_z_form(&self) -> Self {
        self.shift_second(1)
    }

    /// Rewrites a `(t, z)` polynomial in `(t, y)` with `z = y − 1`.
    pub fn from_z_form(&self) -> Self {
        self.shift_second(-1)
    }

    /// Renders with `second` as the name of the second variable.
    pub fn format_with(&self, second: &str) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut s = String::new();
        for (k, (i, j, c)) in self.terms().enumerate() {
            let negative = c.is_negative();
            match (k, negative) {
                (0, true) => s.push('-'),
                (0, false) => {}
                (_, true) => s.push_str(" - "),
                (_, false) => s.push_str(" + "),
            }
            let mag = c.abs();
            let mut factors = Vec::new();
            if !mag.is_one() || (i == 0 && j == 0) {
                factors.push(mag.to_string());
            }
            match i {
                0 => {}
                1 => factors.push("t".into()),
                _ => factors.push(format!("t^{i}")),
            }
            match j {
                0 => {}
                1 => factors.push(second.into()),
                _ => factors.push(format!("{second}^{j}")),
            }
            s.push_str(&factors.join("*"));
        }
        s
    }

    /// `[[i, j, c], …]` in descending order.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("polynomial serialises")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })
    }
}

impl fmt::Display for BiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.format_with("y"))
    }
}

/// Parses the [`Display`](fmt::Display) format: monomials such as `3*t^2*y`
/// joined by `+`/`-`. The second variable may be written `y` or `z`.
impl FromStr for BiPoly {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: String| Error::Parse {
            line: 1,
            message: msg,
        };
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(bad("empty polynomial".into()));
        }
        let mut out = Self::zero();
        let mut rest = compact.as_str();
        while !rest.is_empty() {
            let (sign, body) = match rest.as_bytes()[0] {
                b'+' => (1, &rest[1..]),
                b'-' => (-1, &rest[1..]),
                _ => (1, rest),
            };
            let end = body.find(['+', '-']).unwrap_or(body.len());
            let term = &body[..end];
            rest = &body[end..];
            if term.is_empty() {
                return Err(bad(format!("dangling sign in {s:?}")));
            }
            let mut c = BigInt::from(sign);
            let (mut i, mut j) = (0u32, 0u32);
            for factor in term.split('*') {
                let (base, exp) = match factor.split_once('^') {
                    Some((b, e)) => (
                        b,
                        e.parse::<u32>()
                            .map_err(|_| bad(format!("bad exponent in {factor:?}")))?,
                    ),
                    None => (factor, 1),
                };
                match base {
                    "t" => i += exp,
                    "y" | "z" => j += exp,
                    num => {
                        let v: BigInt = num
                            .parse()
                            .map_err(|_| bad(format!("bad factor {factor:?}")))?;
                        c *= v.pow(exp);
                    }
                }
            }
            out.add_term(i, j, c);
        }
        Ok(out)
    }
}

impl Add for &BiPoly {
    type Output = BiPoly;

    fn add(self, rhs: &BiPoly) -> BiPoly {
        let mut out = self.clone();
        for (&(i, j), c) in &rhs.terms {
            out.add_term(i, j, c.clone());
        }
        out
    }
}

impl Sub for &BiPoly {
    type Output = BiPoly;

    fn sub(self, rhs: &BiPoly) -> BiPoly {
        let mut out = self.clone();
        for (&(i, j), c) in &rhs.terms {
            out.add_term(i, j, -c);
        }
        out
    }
}

impl Mul for &BiPoly {
    type Output = BiPoly;

    fn mul(self, rhs: &BiPoly) -> BiPoly {
        let mut out = BiPoly::zero();
        for (&(i1, j1), c1) in &self.terms {
            for (&(i2, j2), c2) in &rhs.terms {
                out.add_term(i1 + i2, j1 + j2, c1 * c2);
            }
        }
        out
    }
}

impl Neg for &BiPoly {
    type Output = BiPoly;

    fn neg(self) -> BiPoly {
        BiPoly {
            terms: self.terms.iter().map(|(&k, c)| (k, -c)).collect(),
        }
    }
}

macro_rules! forward_owned {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr for BiPoly {
            type Output = BiPoly;
            fn $m(self, rhs: BiPoly) -> BiPoly {
                (&self).$m(&rhs)
            }
        }
    )*};
}
forward_owned!(Add add, Sub sub, Mul mul);

impl Serialize for BiPoly {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.terms.len()))?;
        for (i, j, c) in self.terms() {
            match c.to_i64() {
                Some(small) => seq.serialize_element(&(i, j, small))?,
                None => seq.serialize_element(&(i, j, c.to_string()))?,
            }
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for BiPoly {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Coeff {
            Small(i64),
            Big(String),
        }
        let raw: Vec<(u32, u32, Coeff)> = Vec::deserialize(deserializer)?;
        let mut out = BiPoly::zero();
        for (i, j, c) in raw {
            let c = match c {
                Coeff::Small(v) => BigInt::from(v),
                Coeff::Big(s) => s.parse().map_err(de::Error::custom)?,
            };
            out.add_term(i, j, c);
        }
        Ok(out)
    }
}
