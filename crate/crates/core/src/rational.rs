//! Exact rationals and their textual form.
//!
//! Accepted inputs are `p/q`, integers and finite decimals (`0.9` is read as
//! `9/10`). Output is always in lowest terms, `p` when the denominator is 1.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn parse(text: &str) -> Result<Rational> {
    let t = text.trim();
    if t.is_empty() {
        return Err(Error::Parse("empty rational".into()));
    }
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad numerator in `{t}`")))?;
        let d: BigInt = d
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad denominator in `{t}`")))?;
        if d.is_zero() {
            return Err(Error::Parse(format!("zero denominator in `{t}`")));
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((whole, frac)) = t.split_once('.') {
        let negative = whole.trim_start().starts_with('-');
        let digits_ok = frac.chars().all(|c| c.is_ascii_digit());
        if !digits_ok || frac.is_empty() {
            return Err(Error::Parse(format!("bad decimal `{t}`")));
        }
        let whole_part: BigInt = if whole.is_empty() || whole == "-" || whole == "+" {
            BigInt::zero()
        } else {
            whole
                .parse()
                .map_err(|_| Error::Parse(format!("bad decimal `{t}`")))?
        };
        let frac_num: BigInt = frac.parse().unwrap();
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        let frac_part = Rational::new(frac_num, scale);
        let whole_abs = Rational::from_integer(whole_part.abs());
        let magnitude = whole_abs + frac_part;
        return Ok(if negative { -magnitude } else { magnitude });
    }
    let n: BigInt = t
        .parse()
        .map_err(|_| Error::Parse(format!("bad rational `{t}`")))?;
    Ok(Rational::from_integer(n))
}

pub fn format(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// `base^exp` for a non-negative exponent.
pub fn pow(base: &Rational, exp: usize) -> Rational {
    num_traits::pow(base.clone(), exp)
}

/// Parses a comma-separated list of rationals.
pub fn parse_list(text: &str) -> Result<Vec<Rational>> {
    text.split(',').map(parse).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fraction_integer_and_decimal() {
        assert_eq!(parse("2/4").unwrap(), ratio(1, 2));
        assert_eq!(parse("-3").unwrap(), int(-3));
        assert_eq!(parse("0.9").unwrap(), ratio(9, 10));
        assert_eq!(parse("-1.25").unwrap(), ratio(-5, 4));
        assert_eq!(parse("-0.5").unwrap(), ratio(-1, 2));
        assert_eq!(parse(".5").unwrap(), ratio(1, 2));
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse("").is_err());
        assert!(parse("1/0").is_err());
        assert!(parse("a/b").is_err());
        assert!(parse("1.").is_err());
        assert!(parse("1.x").is_err());
    }

    #[test]
    fn formats_in_lowest_terms() {
        assert_eq!(format(&parse("6/8").unwrap()), "3/4");
        assert_eq!(format(&parse("8/4").unwrap()), "2");
        assert_eq!(format(&parse("-6/8").unwrap()), "-3/4");
    }

    #[test]
    fn thirds_sum_to_one() {
        let third = parse("1/3").unwrap();
        assert_eq!(&third + &third + &third, int(1));
    }
}
