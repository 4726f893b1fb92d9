//! Exact rational linear programming.
//!
//! [`solve`] runs a two-phase revised simplex over [`Rational`]s. Optimal
//! outcomes carry a primal point and one dual multiplier per constraint;
//! infeasible outcomes carry a Farkas vector; unbounded ones a ray.
//! [`check_solution`] re-verifies any of the three independently.
//!
//! Dual sign convention, for a minimisation: multipliers of `≥` rows are
//! nonnegative, of `≤` rows nonpositive, of `=` rows free. For a maximisation
//! the inequality signs flip. Reduced costs are `c − Aᵀy`.

mod check;
mod num;
mod simplex;
pub mod samples;

use std::fmt::Write as _;

use num_traits::Zero;

use crate::rational::{self, Rational};

pub use check::{check_solution, farkas_is_valid, ray_is_valid};
pub use simplex::solve;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    /// Sparse row: `(variable index, coefficient)`.
    pub coeffs: Vec<(usize, Rational)>,
    pub relation: Relation,
    pub rhs: Rational,
}

impl Constraint {
    pub fn activity(&self, x: &[Rational]) -> Rational {
        self.coeffs.iter().map(|(j, a)| a * &x[*j]).sum()
    }
}

/// Per-variable bounds; `None` means unbounded on that side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bounds {
    pub lower: Option<Rational>,
    pub upper: Option<Rational>,
}

impl Bounds {
    pub fn nonnegative() -> Self {
        Bounds { lower: Some(Rational::zero()), upper: None }
    }

    pub fn free() -> Self {
        Bounds { lower: None, upper: None }
    }

    pub fn contains(&self, value: &Rational) -> bool {
        self.lower.as_ref().is_none_or(|l| value >= l) && self.upper.as_ref().is_none_or(|u| value <= u)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpProblem {
    pub num_vars: usize,
    pub sense: Sense,
    pub objective: Vec<Rational>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<Bounds>,
}

impl LpProblem {
    /// Empty problem with zero objective and `x ≥ 0` bounds.
    pub fn new(num_vars: usize, sense: Sense) -> Self {
        LpProblem {
            num_vars,
            sense,
            objective: vec![Rational::zero(); num_vars],
            constraints: Vec::new(),
            bounds: vec![Bounds::nonnegative(); num_vars],
        }
    }

    pub fn set_objective(&mut self, var: usize, coeff: Rational) {
        self.objective[var] = coeff;
    }

    pub fn set_bounds(&mut self, var: usize, lower: Option<Rational>, upper: Option<Rational>) {
        self.bounds[var] = Bounds { lower, upper };
    }

    /// Adds a row; zero coefficients are dropped and repeated indices merged.
    pub fn add_constraint(&mut self, coeffs: Vec<(usize, Rational)>, relation: Relation, rhs: Rational) -> usize {
        let mut merged: Vec<(usize, Rational)> = Vec::with_capacity(coeffs.len());
        let mut sorted = coeffs;
        sorted.sort_by_key(|(j, _)| *j);
        for (j, a) in sorted {
            match merged.last_mut() {
                Some((k, acc)) if *k == j => *acc += a,
                _ => merged.push((j, a)),
            }
        }
        merged.retain(|(_, a)| !a.is_zero());
        self.constraints.push(Constraint { coeffs: merged, relation, rhs });
        self.constraints.len() - 1
    }

    pub fn objective_value(&self, x: &[Rational]) -> Rational {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    pub fn validate(&self) -> Result<(), LpError> {
        if self.objective.len() != self.num_vars || self.bounds.len() != self.num_vars {
            return Err(LpError::Malformed(format!(
                "objective has {} and bounds {} entries for {} variables",
                self.objective.len(),
                self.bounds.len(),
                self.num_vars
            )));
        }
        for (i, row) in self.constraints.iter().enumerate() {
            if let Some((j, _)) = row.coeffs.iter().find(|(j, _)| *j >= self.num_vars) {
                return Err(LpError::Malformed(format!("row {i} references variable {j}")));
            }
        }
        for (j, b) in self.bounds.iter().enumerate() {
            if let (Some(l), Some(u)) = (&b.lower, &b.upper) {
                if l > u {
                    return Err(LpError::Malformed(format!("variable {j} has lower bound above upper bound")));
                }
            }
        }
        Ok(())
    }

    /// Plain-text dense dump, one row per constraint, for bug reports.
    pub fn to_tableau_text(&self) -> String {
        let mut out = String::new();
        let sense = match self.sense {
            Sense::Minimize => "min",
            Sense::Maximize => "max",
        };
        let cells = |row: &mut String, dense: &[Rational]| {
            for v in dense {
                let _ = write!(row, " {:>10}", rational::format(v));
            }
        };
        let _ = write!(out, "{sense:<5}");
        cells(&mut out, &self.objective);
        out.push('\n');
        for (i, row) in self.constraints.iter().enumerate() {
            let mut dense = vec![Rational::zero(); self.num_vars];
            for (j, a) in &row.coeffs {
                dense[*j] = a.clone();
            }
            let _ = write!(out, "r{i:<4}");
            cells(&mut out, &dense);
            let _ = writeln!(out, " {} {}", row.relation.symbol(), rational::format(&row.rhs));
        }
        for (j, b) in self.bounds.iter().enumerate() {
            let lo = b.lower.as_ref().map_or("-inf".to_owned(), rational::format);
            let hi = b.upper.as_ref().map_or("+inf".to_owned(), rational::format);
            let _ = writeln!(out, "x{j}: [{lo}, {hi}]");
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Certificate {
    /// Row multipliers `y` (same sign convention as duals) with
    /// `max over the bound box of (yᵀA)x < yᵀb`.
    Farkas(Vec<Rational>),
    /// Improving direction along which the objective is unbounded.
    Ray(Vec<Rational>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpOutcome {
    pub status: LpStatus,
    pub value: Option<Rational>,
    /// Optimal point, or a feasible point when unbounded; empty when infeasible.
    pub primal: Vec<Rational>,
    /// One multiplier per constraint (optimal only).
    pub dual: Vec<Rational>,
    pub certificate: Option<Certificate>,
    pub pivots: usize,
}

impl LpOutcome {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LpError {
    #[error("malformed linear program: {0}")]
    Malformed(String),
}

#[cfg(test)]
mod tests;
