use num_traits::{One, Signed, Zero};

use super::num::Q;
use super::{Certificate, LpError, LpOutcome, LpProblem, LpStatus, Relation, Sense};
use crate::rational::Rational;

/// How an original variable maps onto standard-form columns:
/// `x = offset + sign · x'` with `x' ≥ 0`, or a difference of two columns
/// for free variables, or a constant for fixed ones.
#[derive(Debug, Clone)]
enum VarMap {
    Shifted { col: usize, offset: Rational, sign: Rational },
    Split { pos: usize, neg: usize },
    Fixed(Rational),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColKind {
    Structural,
    Slack,
    Artificial,
}

/// `A'x' = b'`, `x' ≥ 0`, `b' ≥ 0`, stored by column.
struct StandardForm {
    rows: usize,
    cols: Vec<Vec<(usize, Rational)>>,
    kinds: Vec<ColKind>,
    rhs: Vec<Rational>,
    /// Minimisation costs on structural columns.
    cost: Vec<Rational>,
    /// `±1`: whether an original row was negated to make its rhs nonnegative.
    row_sign: Vec<Rational>,
    /// Initial basis: one slack or artificial per row.
    initial_basis: Vec<usize>,
    vars: Vec<VarMap>,
}

impl StandardForm {
    fn build(p: &LpProblem) -> StandardForm {
        let min_cost: Vec<Rational> = match p.sense {
            Sense::Minimize => p.objective.clone(),
            Sense::Maximize => p.objective.iter().map(|c| -c).collect(),
        };
        let mut cols: Vec<Vec<(usize, Rational)>> = Vec::new();
        let mut cost = Vec::new();
        let mut vars = Vec::with_capacity(p.num_vars);
        // Extra rows `x' ≤ u − l` for doubly bounded variables.
        let mut bound_rows: Vec<(usize, Rational)> = Vec::new();
        for (j, b) in p.bounds.iter().enumerate() {
            let c = &min_cost[j];
            let map = match (&b.lower, &b.upper) {
                (Some(l), Some(u)) if l == u => VarMap::Fixed(l.clone()),
                (Some(l), upper) => {
                    let col = cols.len();
                    cols.push(Vec::new());
                    cost.push(c.clone());
                    if let Some(u) = upper {
                        bound_rows.push((col, u - l));
                    }
                    VarMap::Shifted { col, offset: l.clone(), sign: Rational::one() }
                }
                (None, Some(u)) => {
                    let col = cols.len();
                    cols.push(Vec::new());
                    cost.push(-c);
                    VarMap::Shifted { col, offset: u.clone(), sign: -Rational::one() }
                }
                (None, None) => {
                    let pos = cols.len();
                    cols.push(Vec::new());
                    cols.push(Vec::new());
                    cost.push(c.clone());
                    cost.push(-c);
                    VarMap::Split { pos, neg: pos + 1 }
                }
            };
            vars.push(map);
        }

        let rows = p.constraints.len() + bound_rows.len();
        let mut rhs = Vec::with_capacity(rows);
        let mut relations = Vec::with_capacity(rows);
        for (i, row) in p.constraints.iter().enumerate() {
            let mut b = row.rhs.clone();
            for (j, a) in &row.coeffs {
                match &vars[*j] {
                    VarMap::Shifted { col, offset, sign } => {
                        b -= a * offset;
                        cols[*col].push((i, a * sign));
                    }
                    VarMap::Split { pos, neg } => {
                        cols[*pos].push((i, a.clone()));
                        cols[*neg].push((i, -a));
                    }
                    VarMap::Fixed(v) => b -= a * v,
                }
            }
            rhs.push(b);
            relations.push(row.relation);
        }
        for (k, (col, width)) in bound_rows.into_iter().enumerate() {
            let i = p.constraints.len() + k;
            cols[col].push((i, Rational::one()));
            rhs.push(width);
            relations.push(Relation::Le);
        }

        // Normalise rhs ≥ 0.
        let mut row_sign = vec![Rational::one(); rows];
        for i in 0..rows {
            if rhs[i].is_negative() {
                row_sign[i] = -Rational::one();
                rhs[i] = -rhs[i].clone();
                relations[i] = match relations[i] {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
        }
        for col in cols.iter_mut() {
            for (i, a) in col.iter_mut() {
                if row_sign[*i].is_negative() {
                    *a = -a.clone();
                }
            }
        }

        let mut kinds = vec![ColKind::Structural; cols.len()];
        let mut initial_basis = vec![usize::MAX; rows];
        for (i, rel) in relations.iter().enumerate() {
            match rel {
                Relation::Le => {
                    initial_basis[i] = cols.len();
                    cols.push(vec![(i, Rational::one())]);
                    kinds.push(ColKind::Slack);
                }
                Relation::Ge => {
                    cols.push(vec![(i, -Rational::one())]);
                    kinds.push(ColKind::Slack);
                }
                Relation::Eq => {}
            }
        }
        for (i, rel) in relations.iter().enumerate() {
            if *rel != Relation::Le {
                initial_basis[i] = cols.len();
                cols.push(vec![(i, Rational::one())]);
                kinds.push(ColKind::Artificial);
            }
        }
        cost.resize(cols.len(), Rational::zero());
        StandardForm { rows, cols, kinds, rhs, cost, row_sign, initial_basis, vars }
    }

    fn original_point(&self, xs: &[Rational]) -> Vec<Rational> {
        self.vars
            .iter()
            .map(|m| match m {
                VarMap::Shifted { col, offset, sign } => offset + sign * &xs[*col],
                VarMap::Split { pos, neg } => &xs[*pos] - &xs[*neg],
                VarMap::Fixed(v) => v.clone(),
            })
            .collect()
    }

    fn original_direction(&self, ds: &[Rational]) -> Vec<Rational> {
        self.vars
            .iter()
            .map(|m| match m {
                VarMap::Shifted { col, sign, .. } => sign * &ds[*col],
                VarMap::Split { pos, neg } => &ds[*pos] - &ds[*neg],
                VarMap::Fixed(_) => Rational::zero(),
            })
            .collect()
    }
}

const DEGENERATE_STREAK: usize = 16;

/// Revised simplex state with an explicit dense basis inverse.
struct Revised<'a> {
    sf: &'a StandardForm,
    cols: Vec<Vec<(usize, Q)>>,
    basis: Vec<usize>,
    in_basis: Vec<Option<usize>>,
    binv: Vec<Vec<Q>>,
    xb: Vec<Q>,
    pivots: usize,
}

enum PhaseEnd {
    Optimal,
    Unbounded { entering: usize, column: Vec<Q> },
}

impl<'a> Revised<'a> {
    fn new(sf: &'a StandardForm) -> Self {
        let m = sf.rows;
        let mut binv = vec![vec![Q::zero(); m]; m];
        for (i, row) in binv.iter_mut().enumerate() {
            row[i] = Q::one();
        }
        let mut in_basis = vec![None; sf.cols.len()];
        for (i, &c) in sf.initial_basis.iter().enumerate() {
            in_basis[c] = Some(i);
        }
        Revised {
            sf,
            cols: sf.cols.iter().map(|c| c.iter().map(|(i, a)| (*i, Q::from(a))).collect()).collect(),
            basis: sf.initial_basis.clone(),
            in_basis,
            binv,
            xb: sf.rhs.iter().map(Q::from).collect(),
            pivots: 0,
        }
    }

    /// `y = c_Bᵀ B⁻¹`.
    fn duals(&self, cost: &[Q]) -> Vec<Q> {
        let m = self.sf.rows;
        let mut y = vec![Q::zero(); m];
        for (r, &col) in self.basis.iter().enumerate() {
            let c = &cost[col];
            if c.is_zero() {
                continue;
            }
            for (yi, b) in y.iter_mut().zip(&self.binv[r]) {
                if !b.is_zero() {
                    *yi += &(c * b);
                }
            }
        }
        y
    }

    fn reduced_cost(&self, cost: &[Q], y: &[Q], j: usize) -> Q {
        let mut d = cost[j].clone();
        for (i, a) in &self.cols[j] {
            if !y[*i].is_zero() {
                d -= &(&y[*i] * a);
            }
        }
        d
    }

    /// `B⁻¹ A_j`.
    fn column(&self, j: usize) -> Vec<Q> {
        let col = &self.cols[j];
        self.binv
            .iter()
            .map(|row| {
                let mut acc = Q::zero();
                for (i, a) in col {
                    if !row[*i].is_zero() {
                        acc += &(&row[*i] * a);
                    }
                }
                acc
            })
            .collect()
    }

    fn pivot(&mut self, leave_row: usize, entering: usize, alpha: &[Q]) {
        let pivot = alpha[leave_row].clone();
        let step = &self.xb[leave_row] / &pivot;
        for v in self.binv[leave_row].iter_mut() {
            if !v.is_zero() {
                *v = &*v / &pivot;
            }
        }
        let pivot_row = self.binv[leave_row].clone();
        let nz: Vec<usize> = (0..pivot_row.len()).filter(|&k| !pivot_row[k].is_zero()).collect();
        for (r, a) in alpha.iter().enumerate() {
            if r == leave_row || a.is_zero() {
                continue;
            }
            let row = &mut self.binv[r];
            for &k in &nz {
                row[k] -= &(a * &pivot_row[k]);
            }
            if !step.is_zero() {
                self.xb[r] -= &(a * &step);
            }
        }
        self.xb[leave_row] = step;
        let leaving = self.basis[leave_row];
        self.in_basis[leaving] = None;
        self.in_basis[entering] = Some(leave_row);
        self.basis[leave_row] = entering;
        self.pivots += 1;
    }

    /// Minimises `cost` over columns for which `allowed` holds. Dantzig pricing;
    /// after `DEGENERATE_STREAK` consecutive degenerate pivots it switches to
    /// the smallest-index rule until the objective moves again, so no basis
    /// can repeat. The ratio test breaks ties by smallest basic column index.
    fn run(&mut self, cost: &[Q], allowed: impl Fn(usize) -> bool) -> PhaseEnd {
        let mut streak = 0usize;
        loop {
            let bland = streak >= DEGENERATE_STREAK;
            let y = self.duals(cost);
            let mut entering: Option<(usize, Q)> = None;
            for j in 0..self.cols.len() {
                if self.in_basis[j].is_some() || !allowed(j) {
                    continue;
                }
                let d = self.reduced_cost(cost, &y, j);
                if !d.is_negative() {
                    continue;
                }
                if bland {
                    entering = Some((j, d));
                    break;
                }
                if entering.as_ref().is_none_or(|(_, best)| d < *best) {
                    entering = Some((j, d));
                }
            }
            let Some((q, _)) = entering else {
                return PhaseEnd::Optimal;
            };
            let alpha = self.column(q);
            let mut leave: Option<(usize, Q)> = None;
            for (r, a) in alpha.iter().enumerate() {
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.xb[r] / a;
                let better = match &leave {
                    None => true,
                    Some((lr, best)) => ratio < *best || (ratio == *best && self.basis[r] < self.basis[*lr]),
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
            let Some((p, step)) = leave else {
                return PhaseEnd::Unbounded { entering: q, column: alpha };
            };
            streak = if step.is_zero() { streak + 1 } else { 0 };
            self.pivot(p, q, &alpha);
        }
    }

    /// Drives zero-level artificials out of the basis where some
    /// non-artificial column has a nonzero entry in their row. Rows where none
    /// does are redundant and keep their artificial at zero forever.
    fn expel_artificials(&mut self) {
        for r in 0..self.sf.rows {
            if self.sf.kinds[self.basis[r]] != ColKind::Artificial {
                continue;
            }
            let candidate = (0..self.cols.len()).find(|&j| {
                if self.in_basis[j].is_some() || self.sf.kinds[j] == ColKind::Artificial {
                    return false;
                }
                let mut acc = Q::zero();
                for (i, a) in &self.cols[j] {
                    acc += &(&self.binv[r][*i] * a);
                }
                !acc.is_zero()
            });
            if let Some(j) = candidate {
                let alpha = self.column(j);
                self.pivot(r, j, &alpha);
            }
        }
    }

    fn point(&self) -> Vec<Rational> {
        let mut x = vec![Rational::zero(); self.cols.len()];
        for (r, &c) in self.basis.iter().enumerate() {
            x[c] = self.xb[r].to_rational();
        }
        x
    }
}

pub fn solve(p: &LpProblem) -> Result<LpOutcome, LpError> {
    p.validate()?;
    let sf = StandardForm::build(p);
    let mut state = Revised::new(&sf);
    let n_orig_rows = p.constraints.len();

    let has_artificial = sf.kinds.contains(&ColKind::Artificial);
    if has_artificial {
        let phase1: Vec<Q> =
            sf.kinds.iter().map(|k| if *k == ColKind::Artificial { Q::one() } else { Q::zero() }).collect();
        // Phase one is bounded below by zero, so it always ends optimal. An
        // artificial that has left the basis is never needed again.
        state.run(&phase1, |j| sf.kinds[j] != ColKind::Artificial);
        let infeasible = state
            .basis
            .iter()
            .zip(&state.xb)
            .any(|(c, v)| sf.kinds[*c] == ColKind::Artificial && v.is_positive());
        if infeasible {
            let y = state.duals(&phase1);
            let farkas = (0..n_orig_rows).map(|i| &sf.row_sign[i] * y[i].to_rational()).collect();
            return Ok(LpOutcome {
                status: LpStatus::Infeasible,
                value: None,
                primal: Vec::new(),
                dual: Vec::new(),
                certificate: Some(Certificate::Farkas(farkas)),
                pivots: state.pivots,
            });
        }
        state.expel_artificials();
    }

    let cost: Vec<Q> = sf.cost.iter().map(Q::from).collect();
    let end = state.run(&cost, |j| sf.kinds[j] != ColKind::Artificial);
    let xs = state.point();
    let primal = sf.original_point(&xs);
    let sense_sign = match p.sense {
        Sense::Minimize => Rational::one(),
        Sense::Maximize => -Rational::one(),
    };
    match end {
        PhaseEnd::Optimal => {
            let y = state.duals(&cost);
            let dual = (0..n_orig_rows).map(|i| &sense_sign * &sf.row_sign[i] * y[i].to_rational()).collect();
            let value = p.objective_value(&primal);
            Ok(LpOutcome {
                status: LpStatus::Optimal,
                value: Some(value),
                primal,
                dual,
                certificate: None,
                pivots: state.pivots,
            })
        }
        PhaseEnd::Unbounded { entering, column } => {
            let mut ds = vec![Rational::zero(); sf.cols.len()];
            ds[entering] = Rational::one();
            for (r, &c) in state.basis.iter().enumerate() {
                ds[c] = -column[r].to_rational();
            }
            let ray = sf.original_direction(&ds);
            Ok(LpOutcome {
                status: LpStatus::Unbounded,
                value: None,
                primal,
                dual: Vec::new(),
                certificate: Some(Certificate::Ray(ray)),
                pivots: state.pivots,
            })
        }
    }
}
