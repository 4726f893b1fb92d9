use super::samples::{beale, kuhn, random_solvable};
use super::*;
use crate::rational::{int, ratio};

fn max_x_le(rhs: i64) -> LpProblem {
    let mut p = LpProblem::new(1, Sense::Maximize);
    p.set_objective(0, int(1));
    p.add_constraint(vec![(0, int(1))], Relation::Le, int(rhs));
    p
}

fn degenerate_min() -> LpProblem {
    let mut p = LpProblem::new(2, Sense::Minimize);
    p.set_objective(0, int(1));
    p.set_objective(1, int(1));
    p.add_constraint(vec![(0, int(1)), (1, int(1))], Relation::Ge, int(1));
    p.add_constraint(vec![(0, int(1)), (1, int(1))], Relation::Ge, int(1));
    p
}

#[test]
fn single_constraint_optimum() {
    let p = max_x_le(3);
    let o = solve(&p).unwrap();
    assert_eq!(o.status, LpStatus::Optimal);
    assert_eq!(o.value, Some(int(3)));
    assert_eq!(o.dual, vec![int(1)]);
    assert!(check_solution(&p, &o));
}

#[test]
fn injected_wrong_value_is_rejected() {
    let p = max_x_le(3);
    let mut o = solve(&p).unwrap();
    o.value = Some(int(4));
    assert!(!check_solution(&p, &o));
    let mut o = solve(&p).unwrap();
    o.primal = vec![int(4)];
    o.value = Some(int(4));
    assert!(!check_solution(&p, &o));
    let mut o = solve(&p).unwrap();
    o.dual = vec![int(2)];
    assert!(!check_solution(&p, &o));
}

#[test]
fn empty_feasible_set_has_farkas_certificate() {
    let p = max_x_le(-1);
    let o = solve(&p).unwrap();
    assert_eq!(o.status, LpStatus::Infeasible);
    let Some(Certificate::Farkas(y)) = &o.certificate else { panic!("missing certificate") };
    assert!(farkas_is_valid(&p, y));
    assert!(check_solution(&p, &o));
    // Wrong-signed multiplier is not a certificate.
    assert!(!farkas_is_valid(&p, &[int(1)]));
}

#[test]
fn degenerate_duplicate_row_terminates() {
    let p = degenerate_min();
    let o = solve(&p).unwrap();
    assert_eq!(o.status, LpStatus::Optimal);
    assert_eq!(o.value, Some(int(1)));
    assert!(check_solution(&p, &o));
}

#[test]
fn unbounded_has_ray() {
    let mut p = LpProblem::new(2, Sense::Maximize);
    p.set_objective(0, int(1));
    p.add_constraint(vec![(0, int(1)), (1, int(-1))], Relation::Le, int(1));
    let o = solve(&p).unwrap();
    assert_eq!(o.status, LpStatus::Unbounded);
    assert!(check_solution(&p, &o));
}

#[test]
fn free_and_bounded_variables() {
    // min x - y, x free with x >= -5 from a row, y in [1, 4], z fixed at 2
    let mut p = LpProblem::new(3, Sense::Minimize);
    p.set_objective(0, int(1));
    p.set_objective(1, int(-1));
    p.set_objective(2, int(3));
    p.set_bounds(0, None, None);
    p.set_bounds(1, Some(int(1)), Some(int(4)));
    p.set_bounds(2, Some(int(2)), Some(int(2)));
    p.add_constraint(vec![(0, int(1)), (2, int(1))], Relation::Ge, int(-3));
    let o = solve(&p).unwrap();
    assert_eq!(o.value, Some(int(-5 - 4 + 6)));
    assert!(check_solution(&p, &o));
    // upper-only variable
    let mut q = LpProblem::new(1, Sense::Maximize);
    q.set_objective(0, int(-1));
    q.set_bounds(0, None, Some(ratio(7, 2)));
    q.add_constraint(vec![(0, int(1))], Relation::Ge, int(-2));
    let o = solve(&q).unwrap();
    assert_eq!(o.value, Some(int(2)));
    assert!(check_solution(&q, &o));
}

#[test]
fn malformed_problems_are_rejected() {
    let mut p = max_x_le(1);
    p.constraints[0].coeffs.push((5, int(1)));
    assert!(matches!(solve(&p), Err(LpError::Malformed(_))));
    let mut p = max_x_le(1);
    p.set_bounds(0, Some(int(2)), Some(int(1)));
    assert!(solve(&p).is_err());
    let mut p = max_x_le(1);
    p.objective.push(int(0));
    assert!(solve(&p).is_err());
}

#[test]
fn cycling_examples_terminate() {
    let o = solve(&beale()).unwrap();
    assert_eq!(o.value, Some(ratio(-1, 20)));
    assert!(check_solution(&beale(), &o));
    let o = solve(&kuhn()).unwrap();
    assert!(check_solution(&kuhn(), &o));
}

#[test]
fn random_solvable_lps_satisfy_strong_duality() {
    for seed in 0..100 {
        let p = random_solvable(seed);
        let o = solve(&p).unwrap();
        assert_eq!(o.status, LpStatus::Optimal, "seed {seed}");
        assert!(check_solution(&p, &o), "seed {seed}\n{}", p.to_tableau_text());
        // deterministic for fixed input
        assert_eq!(solve(&p).unwrap(), o);
    }
}

#[test]
fn random_infeasible_lps_have_valid_certificates() {
    for seed in 0..50 {
        let mut p = random_solvable(seed);
        // Contradict an existing row.
        let row = p.constraints[0].clone();
        let rel = match row.relation {
            Relation::Le | Relation::Eq => Relation::Ge,
            Relation::Ge => Relation::Le,
        };
        let rhs = match row.relation {
            Relation::Ge => &row.rhs - int(1),
            _ => &row.rhs + int(1),
        };
        if row.coeffs.is_empty() {
            continue;
        }
        p.add_constraint(row.coeffs.clone(), rel, rhs);
        let o = solve(&p).unwrap();
        assert_eq!(o.status, LpStatus::Infeasible, "seed {seed}");
        assert!(check_solution(&p, &o), "seed {seed}");
    }
}

#[test]
fn tableau_dump_lists_rows_and_bounds() {
    let text = degenerate_min().to_tableau_text();
    assert!(text.starts_with("min"));
    assert_eq!(text.lines().count(), 1 + 2 + 2);
    assert!(text.contains(">= 1"));
}

