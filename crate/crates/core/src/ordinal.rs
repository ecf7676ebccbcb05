//! Ordinals below ω^ω in Cantor normal form.
//!
//! An ordinal is stored as its CNF terms `ω^e · c` with strictly decreasing
//! exponents and positive coefficients; the empty term list is 0.

use std::cmp::Ordering;
use std::fmt;

use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Ordinal {
    terms: Vec<(u32, u64)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrdKind {
    Zero,
    Successor,
    Limit,
}

impl Ordinal {
    pub fn zero() -> Self {
        Ordinal { terms: Vec::new() }
    }

    pub fn nat(n: u64) -> Self {
        if n == 0 {
            Self::zero()
        } else {
            Ordinal { terms: vec![(0, n)] }
        }
    }

    pub fn omega() -> Self {
        Self::omega_pow(1)
    }

    /// `ω^e`.
    pub fn omega_pow(e: u32) -> Self {
        Ordinal { terms: vec![(e, 1)] }
    }

    /// `ω · k`.
    pub fn omega_times(k: u64) -> Self {
        if k == 0 {
            Self::zero()
        } else {
            Ordinal { terms: vec![(1, k)] }
        }
    }

    pub fn from_terms(terms: Vec<(u32, u64)>) -> Result<Self> {
        for (i, &(e, c)) in terms.iter().enumerate() {
            if c == 0 {
                return Err(Error::MalformedOrdinal(format!("zero coefficient at term {i}")));
            }
            if i > 0 && terms[i - 1].0 <= e {
                return Err(Error::MalformedOrdinal(format!(
                    "exponents not strictly decreasing at term {i}"
                )));
            }
        }
        Ok(Ordinal { terms })
    }

    pub fn terms(&self) -> &[(u32, u64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn kind(&self) -> OrdKind {
        match self.terms.last() {
            None => OrdKind::Zero,
            Some(&(0, _)) => OrdKind::Successor,
            Some(_) => OrdKind::Limit,
        }
    }

    pub fn is_limit(&self) -> bool {
        self.kind() == OrdKind::Limit
    }

    pub fn is_finite(&self) -> bool {
        self.terms.iter().all(|&(e, _)| e == 0)
    }

    pub fn as_nat(&self) -> Option<u64> {
        match self.terms.as_slice() {
            [] => Some(0),
            [(0, c)] => Some(*c),
            _ => None,
        }
    }

    /// Splits `γ = λ + m` with `λ` zero or a limit and `m` finite.
    pub fn split_limit(&self) -> (Ordinal, u64) {
        match self.terms.last() {
            Some(&(0, c)) => (
                Ordinal {
                    terms: self.terms[..self.terms.len() - 1].to_vec(),
                },
                c,
            ),
            _ => (self.clone(), 0),
        }
    }

    pub fn limit_part(&self) -> Ordinal {
        self.split_limit().0
    }

    pub fn finite_part(&self) -> u64 {
        self.split_limit().1
    }

    pub fn succ(&self) -> Ordinal {
        self.add_nat(1)
    }

    pub fn pred(&self) -> Option<Ordinal> {
        let (lam, m) = self.split_limit();
        (m > 0).then(|| lam.add_nat(m - 1))
    }

    pub fn add_nat(&self, n: u64) -> Ordinal {
        if n == 0 {
            return self.clone();
        }
        let mut terms = self.terms.clone();
        match terms.last_mut() {
            Some((0, c)) => *c += n,
            _ => terms.push((0, n)),
        }
        Ordinal { terms }
    }

    /// Ordinal sum `self + other`.
    pub fn add(&self, other: &Ordinal) -> Ordinal {
        let Some(&(lead, lead_c)) = other.terms.first() else {
            return self.clone();
        };
        let mut terms: Vec<(u32, u64)> = self.terms.iter().copied().take_while(|&(e, _)| e >= lead).collect();
        match terms.last_mut() {
            Some((e, c)) if *e == lead => *c += lead_c,
            _ => terms.push((lead, lead_c)),
        }
        terms.extend_from_slice(&other.terms[1..]);
        Ordinal { terms }
    }

    /// The n-th element of the standard fundamental sequence of a limit.
    ///
    /// The last term `ω^e·c` becomes `ω^e·(c−1) + ω^(e−1)·(n+1)` for `e > 1`
    /// and `ω·(c−1) + n` for `e = 1`.
    pub fn fund_seq(&self, n: u64) -> Result<Ordinal> {
        if !self.is_limit() {
            return Err(Error::NotLimit(self.to_string()));
        }
        let mut terms = self.terms.clone();
        let (e, c) = terms.pop().expect("limit ordinal has a term");
        if c > 1 {
            terms.push((e, c - 1));
        }
        if e > 1 {
            terms.push((e - 1, n + 1));
        } else if n > 0 {
            terms.push((0, n));
        }
        Ok(Ordinal { terms })
    }
}

impl Ord for Ordinal {
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.terms.iter().zip(other.terms.iter()) {
            let ord = a.0.cmp(&b.0).then(a.1.cmp(&b.1));
            if ord != Ordering::Equal {
                return ord;
            }
        }
        self.terms.len().cmp(&other.terms.len())
    }
}

impl PartialOrd for Ordinal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Three-way comparison in CNF.
pub fn ord_compare(a: &Ordinal, b: &Ordinal) -> Ordering {
    a.cmp(b)
}

impl From<u64> for Ordinal {
    fn from(n: u64) -> Self {
        Ordinal::nat(n)
    }
}

impl fmt::Display for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, &(e, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, "+")?;
            }
            match (e, c) {
                (0, c) => write!(f, "{c}")?,
                (1, 1) => write!(f, "ω")?,
                (1, c) => write!(f, "ω·{c}")?,
                (e, 1) => write!(f, "ω^{e}")?,
                (e, c) => write!(f, "ω^{e}·{c}")?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Natural numbers as bare integers, everything else as the CNF pair list.
impl Serialize for Ordinal {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if let Some(n) = self.as_nat() {
            return serializer.serialize_u64(n);
        }
        let mut seq = serializer.serialize_seq(Some(self.terms.len()))?;
        for &(e, c) in &self.terms {
            seq.serialize_element(&[e as u64, c])?;
        }
        seq.end()
    }
}

/// Accepts the CNF pair list, or a bare natural number as shorthand.
impl<'de> Deserialize<'de> for Ordinal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct OrdVisitor;

        impl<'de> Visitor<'de> for OrdVisitor {
            type Value = Ordinal;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a natural number or an array of [exponent, coefficient] pairs")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Ordinal, E> {
                Ok(Ordinal::nat(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Ordinal, E> {
                u64::try_from(v)
                    .map(Ordinal::nat)
                    .map_err(|_| E::custom("negative ordinal"))
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> std::result::Result<Ordinal, A::Error> {
                let mut terms = Vec::new();
                while let Some((e, c)) = seq.next_element::<(u32, u64)>()? {
                    terms.push((e, c));
                }
                Ordinal::from_terms(terms).map_err(de::Error::custom)
            }
        }

        deserializer.deserialize_any(OrdVisitor)
    }
}
