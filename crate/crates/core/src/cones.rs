//! Two-asset solvency cones, their polars, liquidation value and the
//! liquidation partial order.
//!
//! With bond price 1, stock price `S` and proportional cost `λ`, the solvency
//! cone is generated by `(1+λ)S·e₁ − e₂` (buy one share) and
//! `−e₁ + e₂/((1−λ)S)` (sell shares worth one bond). Membership reduces to a
//! nonnegative liquidation value, which is what every check here uses. All
//! cones are closed: boundary points are members.

use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{Signed, Zero};

use crate::rational::{negative_part, positive_part, Rational};

/// Holdings in (bond, stock) units. Signed; short positions are allowed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Position {
    pub bond: Rational,
    pub stock: Rational,
}

impl Position {
    pub fn new(bond: Rational, stock: Rational) -> Self {
        Position { bond, stock }
    }

    pub fn zero() -> Self {
        Position { bond: Rational::zero(), stock: Rational::zero() }
    }

    pub fn is_zero(&self) -> bool {
        self.bond.is_zero() && self.stock.is_zero()
    }

    /// Euclidean pairing ⟨x, y⟩.
    pub fn dot(&self, other: &Position) -> Rational {
        &self.bond * &other.bond + &self.stock * &other.stock
    }

    pub fn scale(&self, factor: &Rational) -> Position {
        Position { bond: &self.bond * factor, stock: &self.stock * factor }
    }
}

impl Add for &Position {
    type Output = Position;
    fn add(self, rhs: &Position) -> Position {
        Position { bond: &self.bond + &rhs.bond, stock: &self.stock + &rhs.stock }
    }
}

impl Sub for &Position {
    type Output = Position;
    fn sub(self, rhs: &Position) -> Position {
        Position { bond: &self.bond - &rhs.bond, stock: &self.stock - &rhs.stock }
    }
}

impl Neg for &Position {
    type Output = Position;
    fn neg(self) -> Position {
        Position { bond: -&self.bond, stock: -&self.stock }
    }
}

impl Mul<&Rational> for &Position {
    type Output = Position;
    fn mul(self, rhs: &Rational) -> Position {
        self.scale(rhs)
    }
}

/// Market parameters `(S, λ)` at one node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolvencyCone {
    pub price: Rational,
    pub lambda: Rational,
}

impl SolvencyCone {
    pub fn new(price: Rational, lambda: Rational) -> Self {
        SolvencyCone { price, lambda }
    }

    /// Ask price `(1+λ)S`.
    pub fn ask(&self) -> Rational {
        &self.price * (Rational::from_integer(1.into()) + &self.lambda)
    }

    /// Bid price `(1−λ)S`.
    pub fn bid(&self) -> Rational {
        &self.price * (Rational::from_integer(1.into()) - &self.lambda)
    }

    /// The two extreme rays of the solvency cone.
    pub fn generators(&self) -> [Position; 2] {
        let one = Rational::from_integer(1.into());
        [
            Position::new(self.ask(), -one.clone()),
            Position::new(-one.clone(), one / self.bid()),
        ]
    }

    /// The two extreme rays of the polar cone: `(1, bid)` and `(1, ask)`.
    pub fn polar_generators(&self) -> [Position; 2] {
        let one = Rational::from_integer(1.into());
        [Position::new(one.clone(), self.bid()), Position::new(one, self.ask())]
    }

    /// Bond value after closing the stock leg at the bid (long) or ask (short).
    pub fn liquidation_value(&self, pos: &Position) -> Rational {
        &pos.bond + positive_part(&pos.stock) * self.bid() - negative_part(&pos.stock) * self.ask()
    }

    pub fn contains(&self, pos: &Position) -> bool {
        !self.liquidation_value(pos).is_negative()
    }

    /// Membership in `K* = {y ∈ ℝ²₊ : bid ≤ y₂/y₁ ≤ ask} ∪ {0}`.
    pub fn polar_contains(&self, y: &Position) -> bool {
        if y.is_zero() {
            return true;
        }
        if !y.bond.is_positive() || y.stock.is_negative() {
            return false;
        }
        let lo = self.bid() * &y.bond;
        let hi = self.ask() * &y.bond;
        lo <= y.stock && y.stock <= hi
    }

    /// `a ⪰ b`: the difference can be liquidated to the zero portfolio.
    pub fn dominates(&self, a: &Position, b: &Position) -> bool {
        self.contains(&(a - b))
    }
}

pub fn liquidation_value(pos: &Position, cone: &SolvencyCone) -> Rational {
    cone.liquidation_value(pos)
}

pub fn cone_contains(pos: &Position, cone: &SolvencyCone) -> bool {
    cone.contains(pos)
}

pub fn polar_contains(y: &Position, cone: &SolvencyCone) -> bool {
    cone.polar_contains(y)
}

pub fn dominates(a: &Position, b: &Position, cone: &SolvencyCone) -> bool {
    cone.dominates(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};
    use proptest::prelude::*;

    fn cone() -> SolvencyCone {
        SolvencyCone::new(int(100), ratio(1, 10))
    }

    fn pos(bond: Rational, stock: Rational) -> Position {
        Position::new(bond, stock)
    }

    #[test]
    fn liquidation_examples() {
        let c = cone();
        assert_eq!(c.liquidation_value(&pos(int(0), int(1))), int(90));
        assert_eq!(c.liquidation_value(&pos(int(0), int(-1))), int(-110));
        assert_eq!(c.liquidation_value(&pos(int(5), int(0))), int(5));
    }

    #[test]
    fn cone_membership_examples() {
        let c = cone();
        assert!(c.contains(&pos(int(110), int(-1))));
        assert!(!c.contains(&pos(int(1), ratio(-1, 100))));
        assert_eq!(c.liquidation_value(&pos(int(1), ratio(-1, 100))), ratio(-1, 10));
        assert!(c.contains(&pos(int(-1), ratio(1, 90))));
    }

    #[test]
    fn polar_membership_examples() {
        let c = cone();
        assert!(c.polar_contains(&pos(int(1), int(95))));
        assert!(!c.polar_contains(&pos(int(1), int(111))));
        assert!(c.polar_contains(&Position::zero()));
        assert!(!c.polar_contains(&pos(int(0), int(5))));
        assert!(!c.polar_contains(&pos(int(-1), int(-95))));
        assert!(c.polar_contains(&pos(int(1), int(90))));
        assert!(c.polar_contains(&pos(int(1), int(110))));
    }

    #[test]
    fn dominance_examples() {
        let c = cone();
        assert!(c.dominates(&pos(int(110), int(-1)), &Position::zero()));
        assert!(c.dominates(&Position::zero(), &Position::zero()));
        assert!(!c.dominates(&pos(int(0), int(1)), &pos(int(91), int(0))));
    }

    #[test]
    fn generators_sit_on_the_boundary() {
        let c = cone();
        for g in c.generators() {
            assert!(c.contains(&g));
            assert_eq!(c.liquidation_value(&g), int(0));
            assert!(!c.contains(&(&g - &pos(ratio(1, 1000), int(0)))));
        }
        for y in c.polar_generators() {
            assert!(c.polar_contains(&y));
            for g in c.generators() {
                assert!(!g.dot(&y).is_negative());
            }
        }
    }

    fn small_rational() -> impl Strategy<Value = Rational> {
        (-400i64..=400, 1i64..=12).prop_map(|(n, d)| ratio(n, d))
    }

    fn any_cone() -> impl Strategy<Value = SolvencyCone> {
        ((1i64..=300), (1i64..=4), (1i64..=9), (1i64..=10))
            .prop_map(|(p, q, l, m)| SolvencyCone::new(ratio(p, q), ratio(l, 10 * m)))
    }

    /// Membership as a nonnegative combination of the two generators, solved
    /// by Cramer's rule: independent of the liquidation formula.
    fn generator_membership(c: &SolvencyCone, x: &Position) -> bool {
        let [g1, g2] = c.generators();
        let det = &g1.bond * &g2.stock - &g2.bond * &g1.stock;
        let a = (&x.bond * &g2.stock - &g2.bond * &x.stock) / &det;
        let b = (&g1.bond * &x.stock - &x.bond * &g1.stock) / &det;
        !a.is_negative() && !b.is_negative()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn membership_matches_generator_combination(c in any_cone(), b in small_rational(), s in small_rational()) {
            let x = pos(b, s);
            prop_assert_eq!(c.contains(&x), generator_membership(&c, &x));
        }

        #[test]
        fn cones_are_closed_under_scaling(c in any_cone(), b in small_rational(), s in small_rational(), k in 0i64..20) {
            let x = pos(b, s);
            let f = ratio(k, 3);
            if c.contains(&x) {
                prop_assert!(c.contains(&x.scale(&f)));
            }
            if c.polar_contains(&x) {
                prop_assert!(c.polar_contains(&x.scale(&f)));
            }
        }

        #[test]
        fn liquidation_is_superadditive(c in any_cone(), a in (small_rational(), small_rational()),
                                        b in (small_rational(), small_rational()), d in (small_rational(), small_rational())) {
            let a = pos(a.0, a.1);
            let b = pos(b.0, b.1);
            let d = pos(d.0, d.1);
            prop_assert!(c.liquidation_value(&(&a + &b)) >= c.liquidation_value(&a) + c.liquidation_value(&b));
            prop_assert!(c.dominates(&a, &a));
            if c.dominates(&a, &b) && c.dominates(&b, &d) {
                prop_assert!(c.dominates(&a, &d));
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn pairing_is_nonnegative(c in any_cone(), b in small_rational(), s in small_rational(),
                                   y1 in 0i64..50, t in 0i64..=100) {
            let x = pos(b, s);
            // y on the segment between the two polar generators.
            let w = ratio(t, 100);
            let y = pos(int(y1), int(y1) * (c.bid() * (int(1) - &w) + c.ask() * &w));
            prop_assert!(c.polar_contains(&y));
            if c.contains(&x) {
                prop_assert!(!x.dot(&y).is_negative());
            }
        }
    }
}
