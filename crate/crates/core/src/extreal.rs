//! Extended reals `{-inf} ∪ Q ∪ {+inf}` and vectors over them.
//!
//! Convex combinations follow the convention `0 * (±inf) = 0`; a sum that
//! would mix `+inf` and `-inf` is an error rather than a value.

use std::cmp::Ordering;
use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ExtReal {
    NegInf,
    Finite(Rational),
    PosInf,
}

impl ExtReal {
    pub fn zero() -> Self {
        ExtReal::Finite(Rational::zero())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(&self) -> Option<&Rational> {
        match self {
            ExtReal::Finite(r) => Some(r),
            _ => None,
        }
    }

    pub fn neg(&self) -> Self {
        match self {
            ExtReal::NegInf => ExtReal::PosInf,
            ExtReal::PosInf => ExtReal::NegInf,
            ExtReal::Finite(r) => ExtReal::Finite(-r.clone()),
        }
    }

    pub fn checked_add(&self, other: &ExtReal) -> Result<ExtReal> {
        use ExtReal::*;
        match (self, other) {
            (PosInf, NegInf) | (NegInf, PosInf) => Err(Error::UndefinedExpectation(
                "+inf and -inf in the same sum".into(),
            )),
            (PosInf, _) | (_, PosInf) => Ok(PosInf),
            (NegInf, _) | (_, NegInf) => Ok(NegInf),
            (Finite(a), Finite(b)) => Ok(Finite(a + b)),
        }
    }

    /// Multiplication by a non-negative rational with `0 * (±inf) = 0`.
    pub fn scale(&self, coeff: &Rational) -> ExtReal {
        debug_assert!(!coeff.is_negative());
        if coeff.is_zero() {
            return ExtReal::zero();
        }
        match self {
            ExtReal::Finite(r) => ExtReal::Finite(r * coeff),
            inf => inf.clone(),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            ExtReal::NegInf => f64::NEG_INFINITY,
            ExtReal::PosInf => f64::INFINITY,
            ExtReal::Finite(r) => rational::to_f64(r),
        }
    }

    pub fn parse(text: &str) -> Result<ExtReal> {
        match text.trim() {
            "+inf" | "inf" | "+Inf" | "Inf" | "+∞" | "∞" => Ok(ExtReal::PosInf),
            "-inf" | "-Inf" | "-∞" => Ok(ExtReal::NegInf),
            other => rational::parse(other).map(ExtReal::Finite),
        }
    }
}

impl From<Rational> for ExtReal {
    fn from(r: Rational) -> Self {
        ExtReal::Finite(r)
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtReal {
    fn cmp(&self, other: &Self) -> Ordering {
        use ExtReal::*;
        match (self, other) {
            (NegInf, NegInf) | (PosInf, PosInf) => Ordering::Equal,
            (NegInf, _) | (_, PosInf) => Ordering::Less,
            (_, NegInf) | (PosInf, _) => Ordering::Greater,
            (Finite(a), Finite(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::NegInf => f.write_str("-inf"),
            ExtReal::PosInf => f.write_str("+inf"),
            ExtReal::Finite(r) => f.write_str(&rational::format(r)),
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        ExtReal::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// A payoff vector in the extended reals.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ExtRealVector(pub Vec<ExtReal>);

impl ExtRealVector {
    pub fn from_rationals(values: impl IntoIterator<Item = Rational>) -> Self {
        ExtRealVector(values.into_iter().map(ExtReal::Finite).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(ExtReal::is_finite)
    }

    /// The finite components, or `None` if any component is infinite.
    pub fn to_rationals(&self) -> Option<Vec<Rational>> {
        self.0.iter().map(|x| x.finite().cloned()).collect()
    }

    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        self.0.cmp(&other.0)
    }

    /// Component-wise `self >= other`.
    pub fn dominates(&self, other: &Self) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a >= b)
    }

    /// Component-wise `self >= other` with at least one strict component.
    pub fn strictly_dominates(&self, other: &Self) -> bool {
        self.dominates(other) && self != other
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(ExtReal::to_f64).collect()
    }

    pub fn parse(text: &str) -> Result<Self> {
        text.split(',')
            .map(ExtReal::parse)
            .collect::<Result<Vec<_>>>()
            .map(ExtRealVector)
    }
}

impl fmt::Display for ExtRealVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{x}")?;
        }
        f.write_str(")")
    }
}

/// `sum_i weights[i] * vectors[i]` under `0 * (±inf) = 0`.
pub fn convex_combination(weights: &[Rational], vectors: &[&ExtRealVector]) -> Result<ExtRealVector> {
    let dim = vectors.first().map(|v| v.dim()).unwrap_or(0);
    let mut acc = vec![ExtReal::zero(); dim];
    for (w, v) in weights.iter().zip(vectors) {
        if v.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: v.dim() });
        }
        for (slot, x) in acc.iter_mut().zip(&v.0) {
            *slot = slot.checked_add(&x.scale(w))?;
        }
    }
    Ok(ExtRealVector(acc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn zero_times_infinity_is_zero() {
        assert_eq!(ExtReal::PosInf.scale(&int(0)), ExtReal::zero());
        assert_eq!(ExtReal::NegInf.scale(&ratio(1, 3)), ExtReal::NegInf);
    }

    #[test]
    fn opposite_infinities_do_not_add() {
        assert!(ExtReal::PosInf.checked_add(&ExtReal::NegInf).is_err());
        assert_eq!(
            ExtReal::PosInf.checked_add(&ExtReal::Finite(int(-5))).unwrap(),
            ExtReal::PosInf
        );
    }

    #[test]
    fn order_places_infinities_at_the_ends() {
        let mut xs = [ExtReal::PosInf, ExtReal::Finite(int(3)), ExtReal::NegInf, ExtReal::Finite(int(-7))];
        xs.sort();
        assert_eq!(xs.first(), Some(&ExtReal::NegInf));
        assert_eq!(xs.last(), Some(&ExtReal::PosInf));
    }

    #[test]
    fn lexicographic_order_compares_first_differing_component() {
        let a = ExtRealVector::parse("1,0").unwrap();
        let b = ExtRealVector::parse("3/4,+inf").unwrap();
        assert_eq!(a.lex_cmp(&b), Ordering::Greater);
        assert!(!a.dominates(&b));
    }

    #[test]
    fn combination_drops_zero_weight_infinities() {
        let a = ExtRealVector::parse("0,+inf").unwrap();
        let b = ExtRealVector::parse("1,3").unwrap();
        let c = convex_combination(&[int(0), int(1)], &[&a, &b]).unwrap();
        assert_eq!(c, b);
        let mixed = ExtRealVector::parse("0,-inf").unwrap();
        assert!(convex_combination(&[ratio(1, 2), ratio(1, 2)], &[&a, &mixed]).is_err());
    }
}
