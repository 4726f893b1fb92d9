//! Independent re-verification of solver outcomes. Nothing here touches the
//! simplex state; only the problem data and the reported vectors are used.

use num_traits::{Signed, Zero};

use super::{Certificate, LpOutcome, LpProblem, LpStatus, Relation, Sense};
use crate::rational::Rational;

fn primal_feasible(p: &LpProblem, x: &[Rational]) -> bool {
    if x.len() != p.num_vars {
        return false;
    }
    if !p.bounds.iter().zip(x).all(|(b, v)| b.contains(v)) {
        return false;
    }
    p.constraints.iter().all(|row| {
        let lhs = row.activity(x);
        match row.relation {
            Relation::Le => lhs <= row.rhs,
            Relation::Eq => lhs == row.rhs,
            Relation::Ge => lhs >= row.rhs,
        }
    })
}

/// `Aᵀy`, dense.
fn transpose_times(p: &LpProblem, y: &[Rational]) -> Vec<Rational> {
    let mut g = vec![Rational::zero(); p.num_vars];
    for (row, yi) in p.constraints.iter().zip(y) {
        if yi.is_zero() {
            continue;
        }
        for (j, a) in &row.coeffs {
            g[*j] += a * yi;
        }
    }
    g
}

/// Row multiplier sign check in minimisation orientation
/// (`≥` rows nonnegative, `≤` rows nonpositive).
fn multipliers_signed(p: &LpProblem, y: &[Rational], orientation: &Rational) -> bool {
    p.constraints.iter().zip(y).all(|(row, yi)| {
        let v = orientation * yi;
        match row.relation {
            Relation::Le => !v.is_positive(),
            Relation::Ge => !v.is_negative(),
            Relation::Eq => true,
        }
    })
}

/// Dual objective `bᵀy + Σ_j d_j·(active bound)`, or `None` when `y` is not
/// dual feasible for the stated sense and bounds.
fn dual_value(p: &LpProblem, y: &[Rational]) -> Option<Rational> {
    if y.len() != p.constraints.len() {
        return None;
    }
    let orientation = match p.sense {
        Sense::Minimize => Rational::from_integer(1.into()),
        Sense::Maximize => Rational::from_integer((-1).into()),
    };
    if !multipliers_signed(p, y, &orientation) {
        return None;
    }
    let g = transpose_times(p, y);
    let mut value: Rational = p.constraints.iter().zip(y).map(|(row, yi)| &row.rhs * yi).sum();
    for (j, b) in p.bounds.iter().enumerate() {
        let d = &p.objective[j] - &g[j];
        if d.is_zero() {
            continue;
        }
        // In minimisation orientation a positive reduced cost must be held by
        // a finite lower bound, a negative one by a finite upper bound.
        let bound = if (&orientation * &d).is_positive() { &b.lower } else { &b.upper };
        value += &d * bound.as_ref()?;
    }
    Some(value)
}

/// Farkas check: multipliers correctly signed and
/// `max over the bound box of (yᵀA)x < yᵀb`.
pub fn farkas_is_valid(p: &LpProblem, y: &[Rational]) -> bool {
    if y.len() != p.constraints.len() {
        return false;
    }
    if !multipliers_signed(p, y, &Rational::from_integer(1.into())) {
        return false;
    }
    let g = transpose_times(p, y);
    let mut box_max = Rational::zero();
    for (gj, b) in g.iter().zip(&p.bounds) {
        if gj.is_zero() {
            continue;
        }
        let bound = if gj.is_positive() { &b.upper } else { &b.lower };
        match bound {
            Some(v) => box_max += gj * v,
            None => return false,
        }
    }
    let yb: Rational = p.constraints.iter().zip(y).map(|(row, yi)| &row.rhs * yi).sum();
    box_max < yb
}

/// Ray check: recession direction of the feasible set that strictly improves
/// the objective.
pub fn ray_is_valid(p: &LpProblem, r: &[Rational]) -> bool {
    if r.len() != p.num_vars {
        return false;
    }
    for (v, b) in r.iter().zip(&p.bounds) {
        if (v.is_positive() && b.upper.is_some()) || (v.is_negative() && b.lower.is_some()) {
            return false;
        }
    }
    let rows_ok = p.constraints.iter().all(|row| {
        let a = row.activity(r);
        match row.relation {
            Relation::Le => !a.is_positive(),
            Relation::Eq => a.is_zero(),
            Relation::Ge => !a.is_negative(),
        }
    });
    let slope = p.objective_value(r);
    rows_ok
        && match p.sense {
            Sense::Minimize => slope.is_negative(),
            Sense::Maximize => slope.is_positive(),
        }
}

/// Re-verifies an outcome exactly. Optimal: primal feasibility, dual
/// feasibility and equal primal, dual and reported values (which together
/// imply complementary slackness). Infeasible: the Farkas vector. Unbounded:
/// a feasible point plus an improving ray.
pub fn check_solution(p: &LpProblem, o: &LpOutcome) -> bool {
    match o.status {
        LpStatus::Optimal => {
            let Some(value) = &o.value else { return false };
            if !primal_feasible(p, &o.primal) || p.objective_value(&o.primal) != *value {
                return false;
            }
            dual_value(p, &o.dual).is_some_and(|d| d == *value)
        }
        LpStatus::Infeasible => matches!(&o.certificate, Some(Certificate::Farkas(y)) if farkas_is_valid(p, y)),
        LpStatus::Unbounded => {
            primal_feasible(p, &o.primal)
                && matches!(&o.certificate, Some(Certificate::Ray(r)) if ray_is_valid(p, r))
        }
    }
}
