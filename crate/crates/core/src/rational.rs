//! Helpers around [`Rational`](crate::Rational).

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{NapError, Result};
use crate::Rational;

pub fn ratio(num: usize, den: usize) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

/// `1/n`.
pub fn recip(n: u64) -> Rational {
    Rational::new(BigInt::one(), BigInt::from(n))
}

/// Always `p/q`, integers included.
pub fn render(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Accepts `p/q` or an integer `p`.
pub fn parse(s: &str) -> Result<Rational> {
    let bad = || NapError::Parse {
        pos: 0,
        msg: format!("invalid rational '{s}'"),
    };
    let (p, q) = match s.trim().split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (s.trim(), "1"),
    };
    let p: BigInt = p.parse().map_err(|_| bad())?;
    let q: BigInt = q.parse().map_err(|_| bad())?;
    if q.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(p, q))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_is_always_a_fraction() {
        assert_eq!(render(&ratio(6, 10)), "3/5");
        assert_eq!(render(&one()), "1/1");
        assert_eq!(render(&int(-2)), "-2/1");
        assert_eq!(parse("6/4").unwrap(), ratio(3, 2));
        assert_eq!(parse("7").unwrap(), int(7));
        assert!(parse("1/0").is_err());
        assert!(parse("0.5").is_err());
    }
}
