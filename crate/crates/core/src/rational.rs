//! Exact rational scalars for geometry input and resonance tests.
//!
//! All membership tests of the form "is `t_j * q` an integer" must be exact:
//! a float comparison would silently misclassify block boundaries. Geometry
//! therefore enters as decimal or `p/q` strings and stays rational until a
//! numerical kernel actually needs an `f64`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rat = BigRational;

/// Parses `"p/q"`, an integer, or a plain decimal string (e.g. `"1.25"`).
pub fn parse_rational(s: &str) -> Result<Rat> {
    let s = s.trim();
    let bad = || Error::BadRational(s.to_string());
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num.trim().parse().map_err(|_| bad())?;
        let d: BigInt = den.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Rat::new(n, d));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = int_part.trim_start().starts_with('-');
        let int_part = if int_part.is_empty() || int_part == "-" || int_part == "+" {
            BigInt::zero()
        } else {
            int_part.parse().map_err(|_| bad())?
        };
        let scale = BigInt::from(10u32).pow(frac_part.len() as u32);
        let frac: BigInt = frac_part.parse().map_err(|_| bad())?;
        let numer = int_part * &scale + if negative { -frac } else { frac };
        return Ok(Rat::new(numer, scale));
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Rat::from_integer(n))
}

pub fn rat_from_i64(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn to_f64(r: &Rat) -> f64 {
    r.to_f64().expect("rational out of f64 range")
}

/// Renders without loss, preferring decimal form when the denominator is a
/// product of 2s and 5s (so round trips through [`parse_rational`]).
pub fn format_rational(r: &Rat) -> String {
    if r.is_integer() {
        return r.numer().to_string();
    }
    let mut d = r.denom().clone();
    let mut twos = 0u32;
    let mut fives = 0u32;
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    while (&d % &two).is_zero() {
        d /= &two;
        twos += 1;
    }
    while (&d % &five).is_zero() {
        d /= &five;
        fives += 1;
    }
    if d.is_one() {
        let digits = twos.max(fives);
        let scale = BigInt::from(10u32).pow(digits);
        let scaled = (r.numer() * scale) / r.denom();
        let neg = scaled.is_negative();
        let s = scaled.abs().to_string();
        let s = format!("{:0>width$}", s, width = (digits as usize) + 1);
        let (int, frac) = s.split_at(s.len() - digits as usize);
        format!("{}{}.{}", if neg { "-" } else { "" }, int, frac)
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Fractional part reduced into `[0, 1)`.
fn frac_mod_one(x: &Rat) -> Rat {
    let f = x - x.floor();
    debug_assert!(!f.is_negative() && f < Rat::one());
    f
}

/// `sin(pi * x)` with the argument reduced exactly, so rational multiples of
/// `pi` that should vanish do vanish and half-integer points are exact.
pub fn sin_pi(x: &Rat) -> f64 {
    // Reduce modulo 2, then use symmetry to a value in [0, 1/2].
    let two = Rat::from_integer(BigInt::from(2));
    let mut f = x - (x / &two).floor() * &two; // in [0, 2)
    let mut sign = 1.0;
    if f >= Rat::one() {
        f -= Rat::one();
        sign = -1.0;
    }
    // f in [0, 1): sin(pi f), use sin(pi(1-f)) = sin(pi f) to stay in [0, 1/2]
    let half = rat_from_i64(1, 2);
    if f > half {
        f = Rat::one() - f;
    }
    if f.is_zero() {
        return 0.0;
    }
    if f == half {
        return sign;
    }
    sign * (std::f64::consts::PI * to_f64(&f)).sin()
}

/// `cos(pi * x)` via the shifted sine, inheriting its exact special points.
pub fn cos_pi(x: &Rat) -> f64 {
    sin_pi(&(x + rat_from_i64(1, 2)))
}

/// `cot(pi * x)` for non-integer `x`; exactly zero at half-integers.
pub fn cot_pi(x: &Rat) -> Result<f64> {
    let f = frac_mod_one(x);
    if f.is_zero() {
        return Err(Error::Domain(format!(
            "cot({} pi) is infinite",
            format_rational(x)
        )));
    }
    Ok(cos_pi(&f) / sin_pi(&f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_decimal_and_fraction_forms() {
        assert_eq!(parse_rational("1.25").unwrap(), rat_from_i64(5, 4));
        assert_eq!(parse_rational("5/4").unwrap(), rat_from_i64(5, 4));
        assert_eq!(parse_rational("-0.5").unwrap(), rat_from_i64(-1, 2));
        assert_eq!(parse_rational("3").unwrap(), rat_from_i64(3, 1));
        assert_eq!(parse_rational(".5").unwrap(), rat_from_i64(1, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1.2e3").is_err());
    }

    #[test]
    fn trig_special_points_are_exact() {
        assert_eq!(sin_pi(&rat_from_i64(3, 1)), 0.0);
        assert_eq!(sin_pi(&rat_from_i64(1, 2)), 1.0);
        assert_eq!(sin_pi(&rat_from_i64(3, 2)), -1.0);
        assert_eq!(cos_pi(&rat_from_i64(1, 2)), 0.0);
        assert_eq!(cot_pi(&rat_from_i64(3, 2)).unwrap(), 0.0);
        assert_eq!(cot_pi(&rat_from_i64(1, 4)).unwrap(), 1.0);
        // cot(0.75 pi) = -1 and periodicity cot(1.25 pi) = cot(0.25 pi)
        assert_eq!(cot_pi(&rat_from_i64(3, 4)).unwrap(), -1.0);
        assert_eq!(cot_pi(&rat_from_i64(5, 4)).unwrap(), 1.0);
        assert!(cot_pi(&rat_from_i64(2, 1)).is_err());
    }

    #[test]
    fn formats_round_trip() {
        for s in ["1.25", "0.3", "7", "-2.4", "1/3", "22/7"] {
            let r = parse_rational(s).unwrap();
            assert_eq!(parse_rational(&format_rational(&r)).unwrap(), r);
        }
    }

    proptest! {
        #[test]
        fn sin_matches_libm_away_from_special_points(n in -200i64..200, d in 1i64..40) {
            let x = rat_from_i64(n, d);
            let direct = (std::f64::consts::PI * (n as f64) / (d as f64)).sin();
            prop_assert!((sin_pi(&x) - direct).abs() < 1e-12);
        }

        #[test]
        fn format_parse_round_trip(n in -10_000i64..10_000, d in 1i64..10_000) {
            let x = rat_from_i64(n, d);
            prop_assert_eq!(parse_rational(&format_rational(&x)).unwrap(), x);
        }
    }
}
