//! Scalar abstraction for energy accounting.
//!
//! Energies are linear in integer quantities (bits, bit-hops, flow counts)
//! scaled by the coefficients `alpha`, `beta` and the epoch length. The same
//! accounting code runs over `f64` for reporting and over [`Rational`] when
//! two solvers must agree to the last bit.

use std::fmt::Debug;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Num, Zero};

use crate::error::{Error, Result};

/// Exact rational scalar used for certified objective values.
pub type Rational = Ratio<i128>;

/// Numeric type energies can be accumulated in.
pub trait Scalar: Num + Copy + PartialOrd + Debug {
    /// Lift a nonnegative integer count (bits, hops, flows) into the scalar.
    fn from_count(count: u64) -> Self;

    /// Lift an exact rational coefficient into the scalar.
    fn from_rational(value: Rational) -> Self;

    fn to_joules(self) -> f64;
}

impl Scalar for f64 {
    fn from_count(count: u64) -> Self {
        count as f64
    }

    fn from_rational(value: Rational) -> Self {
        *value.numer() as f64 / *value.denom() as f64
    }

    fn to_joules(self) -> f64 {
        self
    }
}

impl Scalar for f32 {
    fn from_count(count: u64) -> Self {
        count as f32
    }

    fn from_rational(value: Rational) -> Self {
        (*value.numer() as f64 / *value.denom() as f64) as f32
    }

    fn to_joules(self) -> f64 {
        f64::from(self)
    }
}

impl Scalar for Rational {
    fn from_count(count: u64) -> Self {
        Ratio::from_integer(count as i128)
    }

    fn from_rational(value: Rational) -> Self {
        value
    }

    fn to_joules(self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}

/// Convert a float to the rational with the same shortest decimal
/// representation, so `2.5e-9` becomes exactly `1/400000000`.
pub fn rational_from_f64(value: f64) -> Result<Rational> {
    if !value.is_finite() {
        return Err(Error::InvalidParameter(format!("{value} is not finite")));
    }
    parse_decimal(&format!("{value:e}"))
}

/// Parse a decimal literal such as `0.25`, `-3`, `4e-8` or `2.5E+3`.
pub fn parse_decimal(text: &str) -> Result<Rational> {
    let text = text.trim();
    let err = || Error::Parse(format!("not a decimal number: {text:?}"));
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => {
            let exp: i32 = text[pos + 1..].parse().map_err(|_| err())?;
            (&text[..pos], exp)
        }
        None => (text, 0),
    };
    let (negative, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(pos) => (&mantissa[..pos], &mantissa[pos + 1..]),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let digits = format!("{int_part}{frac_part}");
    let digits = digits.trim_start_matches('0');
    let mut numer: i128 = if digits.is_empty() {
        0
    } else {
        digits.parse().map_err(|_| Error::Overflow("parsing a decimal"))?
    };
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = |power: u32| 10i128.checked_pow(power).ok_or(Error::Overflow("scaling a decimal"));
    if numer.is_zero() {
        return Ok(Rational::zero());
    }
    if scale >= 0 {
        let factor = ten(scale as u32)?;
        numer
            .checked_mul(factor)
            .map(Rational::from_integer)
            .ok_or(Error::Overflow("scaling a decimal"))
    } else {
        Ok(Rational::new(numer, ten((-scale) as u32)?))
    }
}

/// Common-denominator integer weights for a pair of nonnegative rationals:
/// `first = a / d`, `second = b / d`.
pub(crate) fn common_weights(first: Rational, second: Rational) -> Result<(i128, i128, i128)> {
    let denom = first.denom().lcm(second.denom());
    let scale = |r: Rational| {
        r.numer()
            .checked_mul(denom / r.denom())
            .ok_or(Error::Overflow("building integer cost weights"))
    };
    Ok((scale(first)?, scale(second)?, denom))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_literals_are_exact() {
        assert_eq!(parse_decimal("2.5e-9").unwrap(), Rational::new(1, 400_000_000));
        assert_eq!(parse_decimal("4e-8").unwrap(), Rational::new(1, 25_000_000));
        assert_eq!(parse_decimal("10").unwrap(), Rational::from_integer(10));
        assert_eq!(parse_decimal("-0.25").unwrap(), Rational::new(-1, 4));
        assert_eq!(parse_decimal("0").unwrap(), Rational::zero());
        assert!(parse_decimal("1.2.3").is_err());
        assert!(parse_decimal("").is_err());
        assert!(parse_decimal("e5").is_err());
    }

    #[test]
    fn floats_round_trip_through_shortest_decimal() {
        assert_eq!(rational_from_f64(2.5e-9).unwrap(), Rational::new(1, 400_000_000));
        assert_eq!(rational_from_f64(0.1).unwrap(), Rational::new(1, 10));
        assert!(rational_from_f64(f64::NAN).is_err());
    }

    #[test]
    fn common_weights_share_denominator() {
        let alpha_t = Rational::new(1, 40_000_000);
        let beta = Rational::new(1, 25_000_000);
        let (a, b, d) = common_weights(alpha_t, beta).unwrap();
        assert_eq!((a, b, d), (5, 8, 200_000_000));
    }

    #[test]
    fn scalars_agree_on_counts() {
        assert_eq!(f64::from_count(7), 7.0);
        assert_eq!(Rational::from_count(7), Rational::from_integer(7));
        assert_eq!(f64::from_rational(Rational::new(1, 4)), 0.25);
    }
}
