use conepricer::cps::{self, validate_cps, CpsValidity};
use conepricer::pricing::{self, Mode};
use conepricer::rational::{int, ratio};
use conepricer::strategies::{dominates_claim, increments_in_solvency_cones, validate_self_financing};
use conepricer::verify;
use conepricer::{Claim, Error, Position};

#[test]
fn t1_stock_prices_at_ask() {
    let t1 = verify::t1();
    let stock = Claim::uniform(&t1, Position::new(int(0), int(1)));
    let report = pricing::price_report(&t1, &stock, 0).unwrap();
    assert_eq!(report.primal_value, int(110));
    assert_eq!(report.dual_value, int(110));
    assert!(report.gap == int(0));
    assert_eq!(report.per_node_f[&1], int(220));
    assert_eq!(report.per_node_f[&2], int(55));
}

#[test]
fn optimal_strategy_superhedges() {
    for seed in 1..=8 {
        let tree = verify::corpus_tree(seed).unwrap();
        let claim = verify::corpus_claim(&tree, seed);
        let (value, strat) = pricing::primal_price(&tree, &claim, 0).unwrap();
        assert!(validate_self_financing(&tree, &strat).unwrap(), "seed {seed}");
        assert!(increments_in_solvency_cones(&tree, &strat).unwrap(), "seed {seed}");
        assert!(dominates_claim(&tree, &strat, &claim).unwrap(), "seed {seed}");
        assert_eq!(strat.initial[&0], Position::new(value, int(0)));
    }
}

#[test]
fn dual_optimum_is_a_closed_system() {
    for seed in 1..=8 {
        let tree = verify::corpus_tree(seed).unwrap();
        let claim = verify::corpus_claim(&tree, seed);
        let (value, z) = pricing::dual_price(&tree, &claim, 0).unwrap();
        let v = validate_cps(&tree, &z).unwrap();
        assert!(!matches!(v, CpsValidity::Invalid(_)), "seed {seed}: {v:?}");
        assert_eq!(z.conditional_value(&tree, &claim, 0).unwrap(), value);
    }
}

#[test]
fn frictionless_call_matches_binomial_oracle() {
    let t1 = verify::t1().with_lambda(int(0)).unwrap();
    let call = Claim::cash_settled(&t1, |s| (s - int(100)).max(int(0)));
    let (p, _) = pricing::primal_price(&t1, &call, 0).unwrap();
    assert_eq!(p, ratio(100, 3));
}

#[test]
fn hedge_boundary_on_t1() {
    let t1 = verify::t1();
    let stock = Claim::uniform(&t1, Position::new(int(0), int(1)));
    let at = pricing::check_hedgeable(&t1, &stock, 0, &Position::new(int(110), int(0)), Mode::NumeraireBased).unwrap();
    assert!(at.primal_feasible && at.agree());
    let below = pricing::check_hedgeable(&t1, &stock, 0, &Position::new(int(109), int(0)), Mode::NumeraireBased).unwrap();
    assert!(!below.primal_feasible && below.agree());
}

#[test]
fn arbitrage_tree_has_no_system() {
    let ta = verify::ta();
    assert!(matches!(cps::find_cps(&ta, 0).unwrap(), cps::CpsSearch::NotFound { .. }));
    let stock = Claim::uniform(&ta, Position::new(int(0), int(1)));
    assert!(matches!(pricing::dual_price(&ta, &stock, 0), Err(Error::NoConsistentPriceSystem { .. })));
}

#[test]
fn price_is_monotone_in_lambda() {
    let tree = verify::corpus_tree(3).unwrap();
    let claim = verify::corpus_claim(&tree, 3);
    let prices: Vec<_> = [int(0), ratio(1, 20), ratio(1, 10), ratio(1, 5)]
        .into_iter()
        .map(|l| pricing::primal_price(&tree.with_lambda(l).unwrap(), &claim, 0).unwrap().0)
        .collect();
    assert!(prices.windows(2).all(|w| w[0] <= w[1]), "{prices:?}");
}
