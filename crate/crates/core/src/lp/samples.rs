//! Sample problems: classic cycling examples and a seeded generator of
//! feasible bounded LPs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{LpProblem, Relation, Sense};
use crate::rational::{int, ratio, Rational};
/// Beale's example: cycles under the textbook largest-coefficient rule.
pub fn beale() -> LpProblem {
    let mut p = LpProblem::new(4, Sense::Minimize);
    for (j, c) in [ratio(-3, 4), int(150), ratio(-1, 50), int(6)].into_iter().enumerate() {
        p.set_objective(j, c);
    }
    p.add_constraint(
        vec![(0, ratio(1, 4)), (1, int(-60)), (2, ratio(-1, 25)), (3, int(9))],
        Relation::Le,
        int(0),
    );
    p.add_constraint(
        vec![(0, ratio(1, 2)), (1, int(-90)), (2, ratio(-1, 50)), (3, int(3))],
        Relation::Le,
        int(0),
    );
    p.add_constraint(vec![(2, int(1))], Relation::Le, int(1));
    p
}

/// Kuhn's cycling example.
pub fn kuhn() -> LpProblem {
    let mut p = LpProblem::new(4, Sense::Minimize);
    for (j, c) in [-2, -3, 1, 12].into_iter().enumerate() {
        p.set_objective(j, int(c));
    }
    p.add_constraint(vec![(0, int(-2)), (1, int(-9)), (2, int(1)), (3, int(9))], Relation::Le, int(0));
    p.add_constraint(
        vec![(0, ratio(1, 3)), (1, int(1)), (2, ratio(-1, 3)), (3, int(-2))],
        Relation::Le,
        int(0),
    );
    p.add_constraint(vec![(0, int(2)), (1, int(3)), (2, int(-1)), (3, int(-12))], Relation::Le, int(2));
    p
}


/// Feasible by construction (`b` built from a nonnegative point), bounded by
/// a box on every variable.
pub fn random_solvable(seed: u64) -> LpProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=30);
    let m = rng.gen_range(1..=20);
    let sense = if rng.gen_bool(0.5) { Sense::Minimize } else { Sense::Maximize };
    let mut p = LpProblem::new(n, sense);
    let x0: Vec<Rational> = (0..n).map(|_| ratio(rng.gen_range(0..=6), rng.gen_range(1..=3))).collect();
    for j in 0..n {
        p.set_objective(j, int(rng.gen_range(-9..=9)));
        let lower = if rng.gen_bool(0.2) { None } else { Some(int(0)) };
        p.set_bounds(j, lower.map(|l: Rational| l.min(x0[j].clone())), Some(int(10)));
    }
    for _ in 0..m {
        let mut coeffs: Vec<(usize, Rational)> = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.4) {
                coeffs.push((j, ratio(rng.gen_range(-9..=9), rng.gen_range(1..=4))));
            }
        }
        let activity: Rational = coeffs.iter().map(|(j, a)| a * &x0[*j]).sum();
        let (rel, rhs) = match rng.gen_range(0..3) {
            0 => (Relation::Le, activity + int(rng.gen_range(0..=3))),
            1 => (Relation::Ge, activity - int(rng.gen_range(0..=3))),
            _ => (Relation::Eq, activity),
        };
        p.add_constraint(coeffs, rel, rhs);
    }
    // Variables without a lower bound still need one for boundedness.
    for j in 0..n {
        if p.bounds[j].lower.is_none() {
            p.add_constraint(vec![(j, int(1))], Relation::Ge, int(-10));
        }
    }
    p
}
