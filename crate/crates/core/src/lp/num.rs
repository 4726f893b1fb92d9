//! Simplex-internal exact rationals: machine-word fractions with a BigRational
//! fallback on overflow. Values are always in lowest terms with a positive
//! denominator, so equal numbers have equal representations.

use std::cmp::Ordering;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(super) enum Q {
    Small(i64, i64),
    Big(Rational),
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    if a == 0 {
        return b;
    }
    if b == 0 {
        return a;
    }
    let shift = (a | b).trailing_zeros();
    a >>= a.trailing_zeros();
    loop {
        b >>= b.trailing_zeros();
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        b -= a;
        if b == 0 {
            return a << shift;
        }
    }
}

impl Q {
    pub(super) fn zero() -> Q {
        Q::Small(0, 1)
    }

    pub(super) fn one() -> Q {
        Q::Small(1, 1)
    }

    /// Reduces `n/d` (`d > 0`) and stores it small if it fits.
    fn from_wide(n: i128, d: i128) -> Q {
        debug_assert!(d > 0);
        let g = gcd(n.unsigned_abs(), d as u128) as i128;
        let (n, d) = if g > 1 { (n / g, d / g) } else { (n, d) };
        match (i64::try_from(n), i64::try_from(d)) {
            (Ok(n), Ok(d)) => Q::Small(n, d),
            _ => Q::Big(Rational::new_raw(BigInt::from(n), BigInt::from(d))),
        }
    }

    fn demote(r: Rational) -> Q {
        match (r.numer().to_i64(), r.denom().to_i64()) {
            (Some(n), Some(d)) => Q::Small(n, d),
            _ => Q::Big(r),
        }
    }

    pub(super) fn to_rational(&self) -> Rational {
        match self {
            Q::Small(n, d) => Rational::new_raw(BigInt::from(*n), BigInt::from(*d)),
            Q::Big(r) => r.clone(),
        }
    }

    fn big(&self) -> Rational {
        self.to_rational()
    }

    pub(super) fn is_zero(&self) -> bool {
        match self {
            Q::Small(n, _) => *n == 0,
            Q::Big(r) => r.is_zero(),
        }
    }

    pub(super) fn is_positive(&self) -> bool {
        match self {
            Q::Small(n, _) => *n > 0,
            Q::Big(r) => r.is_positive(),
        }
    }

    pub(super) fn is_negative(&self) -> bool {
        match self {
            Q::Small(n, _) => *n < 0,
            Q::Big(r) => r.is_negative(),
        }
    }
}

impl From<&Rational> for Q {
    fn from(r: &Rational) -> Q {
        Q::demote(r.clone())
    }
}

impl Add for &Q {
    type Output = Q;

    fn add(self, rhs: &Q) -> Q {
        match (self, rhs) {
            (Q::Small(a, b), Q::Small(c, d)) => {
                let (a, b, c, d) = (*a as i128, *b as i128, *c as i128, *d as i128);
                if b == d {
                    Q::from_wide(a + c, b)
                } else {
                    Q::from_wide(a * d + c * b, b * d)
                }
            }
            _ => Q::demote(self.big() + rhs.big()),
        }
    }
}

impl Sub for &Q {
    type Output = Q;

    fn sub(self, rhs: &Q) -> Q {
        self + &(-rhs)
    }
}

impl Mul for &Q {
    type Output = Q;

    fn mul(self, rhs: &Q) -> Q {
        match (self, rhs) {
            (Q::Small(a, b), Q::Small(c, d)) => {
                if *a == 0 || *c == 0 {
                    return Q::zero();
                }
                Q::from_wide(*a as i128 * *c as i128, *b as i128 * *d as i128)
            }
            _ => Q::demote(self.big() * rhs.big()),
        }
    }
}

impl Div for &Q {
    type Output = Q;

    fn div(self, rhs: &Q) -> Q {
        match (self, rhs) {
            (Q::Small(a, b), Q::Small(c, d)) => {
                assert!(*c != 0, "division by zero");
                let (n, m) = (*a as i128 * *d as i128, *b as i128 * *c as i128);
                if m < 0 {
                    Q::from_wide(-n, -m)
                } else {
                    Q::from_wide(n, m)
                }
            }
            _ => Q::demote(self.big() / rhs.big()),
        }
    }
}

impl Neg for &Q {
    type Output = Q;

    fn neg(self) -> Q {
        match self {
            Q::Small(n, d) if *n != i64::MIN => Q::Small(-n, *d),
            _ => Q::demote(-self.big()),
        }
    }
}

impl AddAssign<&Q> for Q {
    fn add_assign(&mut self, rhs: &Q) {
        *self = &*self + rhs;
    }
}

impl SubAssign<&Q> for Q {
    fn sub_assign(&mut self, rhs: &Q) {
        *self = &*self - rhs;
    }
}

impl PartialOrd for Q {
    fn partial_cmp(&self, other: &Q) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Q {
    fn cmp(&self, other: &Q) -> Ordering {
        match (self, other) {
            (Q::Small(a, b), Q::Small(c, d)) => (*a as i128 * *d as i128).cmp(&(*c as i128 * *b as i128)),
            _ => self.big().cmp(&other.big()),
        }
    }
}

impl Default for Q {
    fn default() -> Q {
        Q::zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn q(n: i64, d: i64) -> Q {
        Q::from(&ratio(n, d))
    }

    #[test]
    fn arithmetic_matches_bigrational() {
        let values = [ratio(3, 7), ratio(-5, 12), int(0), int(i64::MAX), ratio(1, i64::MAX), ratio(i64::MIN + 1, 3)];
        for a in &values {
            for b in &values {
                let (qa, qb) = (Q::from(a), Q::from(b));
                assert_eq!((&qa + &qb).to_rational(), a + b);
                assert_eq!((&qa - &qb).to_rational(), a - b);
                assert_eq!((&qa * &qb).to_rational(), a * b);
                if !b.is_zero() {
                    assert_eq!((&qa / &qb).to_rational(), a / b);
                }
                assert_eq!(qa.cmp(&qb), a.cmp(b));
            }
        }
    }

    #[test]
    fn canonical_representation() {
        assert_eq!(&q(1, 2) + &q(1, 2), Q::one());
        assert_eq!(&q(2, 3) * &q(3, 2), Q::Small(1, 1));
        assert_eq!(&q(1, 3) - &q(1, 3), Q::zero());
        let big = &Q::from(&int(i64::MAX)) + &Q::one();
        assert!(matches!(big, Q::Big(_)));
        assert_eq!(&big - &Q::one(), Q::Small(i64::MAX, 1));
    }
}
