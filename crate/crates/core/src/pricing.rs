//! Super-replication prices: the primal hedging LP, the dual LP over
//! consistent price systems, the conditional price process and the
//! hedgeability and bipolar checks built from them.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::cones::Position;
use crate::cps::{self, CpsSearch, CpsValidity, PriceSystem};
use crate::error::{Error, Result};
use crate::lp::{self, LpProblem, LpStatus, Relation, Sense};
use crate::market_tree::{Claim, MarketTree, NodeId};
use crate::rational::Rational;
use crate::strategies::{extract_strategy, Strategy};

/// Columns of the hedging LP: optional free initial capital, then a
/// `(buy, sell)` pair per node of the subtree. Consumption is the slack of
/// the leaf cash rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimalLayout {
    pub start: NodeId,
    pub capital: Option<usize>,
    pub initial: Position,
    pub trade_vars: BTreeMap<NodeId, (usize, usize)>,
    pub num_vars: usize,
}

/// Rows, per leaf `ℓ` of the subtree at `start`:
/// `init² + Σ_path (buy − sell) = X²_ℓ` and
/// `init¹ + x + Σ_path (bid·sell − ask·buy) ≥ X¹_ℓ`.
pub fn hedge_lp(
    tree: &MarketTree,
    claim: &Claim,
    start: NodeId,
    initial: &Position,
    free_capital: bool,
) -> Result<(LpProblem, PrimalLayout)> {
    tree.node(start)?;
    claim.covers_subtree(tree, start)?;
    let nodes = tree.subtree(start);
    let offset = usize::from(free_capital);
    let trade_vars: BTreeMap<NodeId, (usize, usize)> =
        nodes.iter().enumerate().map(|(k, &n)| (n, (offset + 2 * k, offset + 2 * k + 1))).collect();
    let layout = PrimalLayout {
        start,
        capital: free_capital.then_some(0),
        initial: initial.clone(),
        trade_vars,
        num_vars: offset + 2 * nodes.len(),
    };
    let mut p = LpProblem::new(layout.num_vars, Sense::Minimize);
    if let Some(x) = layout.capital {
        p.set_bounds(x, None, None);
        p.set_objective(x, Rational::one());
    }
    let start_time = tree.time(start);
    for leaf in tree.leaves_under(start) {
        let path: Vec<NodeId> = tree.path(leaf).into_iter().filter(|&n| tree.time(n) >= start_time).collect();
        let x = claim.payoff(leaf)?;
        let mut stock = Vec::with_capacity(2 * path.len());
        let mut cash = Vec::with_capacity(2 * path.len() + 1);
        for &n in &path {
            let (b, s) = layout.trade_vars[&n];
            let cone = tree.cone(n);
            stock.push((b, Rational::one()));
            stock.push((s, -Rational::one()));
            cash.push((b, -cone.ask()));
            cash.push((s, cone.bid()));
        }
        if let Some(c) = layout.capital {
            cash.push((c, Rational::one()));
        }
        p.add_constraint(stock, Relation::Eq, &x.stock - &initial.stock);
        p.add_constraint(cash, Relation::Ge, &x.bond - &initial.bond);
    }
    Ok((p, layout))
}

/// Smallest initial bond holding from which a self-financing strategy
/// started at `start` dominates the claim, with a minimising strategy.
pub fn primal_price(tree: &MarketTree, claim: &Claim, start: NodeId) -> Result<(Rational, Strategy)> {
    let (p, layout) = hedge_lp(tree, claim, start, &Position::zero(), true)?;
    let outcome = lp::solve(&p)?;
    match outcome.status {
        LpStatus::Optimal => {
            let strategy = extract_strategy(tree, &outcome.primal, &layout)?;
            Ok((outcome.value.expect("optimal value"), strategy))
        }
        LpStatus::Unbounded => Err(Error::NoConsistentPriceSystem { start }),
        LpStatus::Infeasible => unreachable!("free capital makes the hedging LP feasible"),
    }
}

/// `max Σ_leaves w·X` over systems on the subtree at `start` with
/// `w1(start) = 1`.
pub fn dual_price(tree: &MarketTree, claim: &Claim, start: NodeId) -> Result<(Rational, PriceSystem)> {
    tree.node(start)?;
    claim.covers_subtree(tree, start)?;
    solve_dual(tree, claim, start, start, start).map_err(|e| match e {
        Error::NoConsistentPriceSystem { .. } => Error::NoConsistentPriceSystem { start },
        other => other,
    })
}

/// Conditional value at `node` maximised over systems on the whole tree
/// (normalised at `node`), rather than on the subtree.
pub fn global_dual_price(tree: &MarketTree, claim: &Claim, node: NodeId) -> Result<(Rational, PriceSystem)> {
    tree.node(node)?;
    claim.validate(tree)?;
    solve_dual(tree, claim, tree.root(), node, node)
}

fn solve_dual(
    tree: &MarketTree,
    claim: &Claim,
    domain_root: NodeId,
    normalize_at: NodeId,
    paired_at: NodeId,
) -> Result<(Rational, PriceSystem)> {
    let (mut p, layout) = cps::mass_lp(tree, domain_root, Some(normalize_at), Sense::Maximize, 0);
    for leaf in tree.leaves_under(paired_at) {
        for (j, c) in layout.pairing_terms(leaf, claim.payoff(leaf)?) {
            p.objective[j] += c;
        }
    }
    let outcome = lp::solve(&p)?;
    match outcome.status {
        LpStatus::Optimal => Ok((outcome.value.expect("optimal value"), layout.decode(tree, &outcome.primal))),
        LpStatus::Infeasible => Err(Error::NoConsistentPriceSystem { start: domain_root }),
        LpStatus::Unbounded => unreachable!("masses are bounded by the normalisation"),
    }
}

/// Runs `f` on a rayon pool sized by `CONEPRICER_THREADS` when set.
pub fn with_pool<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    let threads = std::env::var("CONEPRICER_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok());
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads.filter(|&n| n > 0) {
        builder = builder.num_threads(n);
    }
    match builder.build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

/// `F(n)` = [`dual_price`] on the subtree at `n`, for every node.
pub fn price_process(tree: &MarketTree, claim: &Claim) -> Result<BTreeMap<NodeId, Rational>> {
    claim.validate(tree)?;
    price_process_from(tree, claim, tree.root())
}

/// [`price_process`] restricted to the subtree at `start`.
pub fn price_process_from(tree: &MarketTree, claim: &Claim, start: NodeId) -> Result<BTreeMap<NodeId, Rational>> {
    claim.covers_subtree(tree, start)?;
    let nodes = tree.subtree(start);
    let values: Vec<Result<(NodeId, Rational)>> = with_pool(|| {
        nodes.par_iter().map(|&n| dual_price(tree, claim, n).map(|(v, _)| (n, v))).collect()
    });
    values.into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strictness {
    /// The optimal dual system is itself strict.
    Strict,
    /// The optimum sits on the closure; a strict system exists, so blends
    /// with it approach the value from strict systems.
    Closure,
    /// No strict consistent price system exists on the subtree.
    NoStrictCps,
}

impl Strictness {
    pub fn as_str(self) -> &'static str {
        match self {
            Strictness::Strict => "strict",
            Strictness::Closure => "closure",
            Strictness::NoStrictCps => "no-strict-cps",
        }
    }
}

impl FromStr for Strictness {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(Strictness::Strict),
            "closure" => Ok(Strictness::Closure),
            "no-strict-cps" => Ok(Strictness::NoStrictCps),
            _ => Err(Error::InvalidArgument(format!("unknown strictness flag {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PriceReport {
    pub start: NodeId,
    pub primal_value: Rational,
    pub dual_value: Rational,
    pub gap: Rational,
    pub strategy: Strategy,
    pub dual_system: PriceSystem,
    pub strictness: Strictness,
    pub per_node_f: BTreeMap<NodeId, Rational>,
}

pub fn price_report(tree: &MarketTree, claim: &Claim, start: NodeId) -> Result<PriceReport> {
    let (primal_value, strategy) = primal_price(tree, claim, start)?;
    let (dual_value, dual_system) = dual_price(tree, claim, start)?;
    let strictness = if cps::validate_cps(tree, &dual_system)? == CpsValidity::Strict {
        Strictness::Strict
    } else if matches!(cps::find_cps(tree, start)?, CpsSearch::Found { .. }) {
        Strictness::Closure
    } else {
        Strictness::NoStrictCps
    };
    let per_node_f = price_process_from(tree, claim, start)?;
    Ok(PriceReport {
        start,
        gap: &primal_value - &dual_value,
        primal_value,
        dual_value,
        strategy,
        dual_system,
        strictness,
        per_node_f,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    NumeraireBased,
    NumeraireFree,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::NumeraireBased => "numeraire-based",
            Mode::NumeraireFree => "numeraire-free",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "numeraire-based" => Ok(Mode::NumeraireBased),
            "numeraire-free" => Ok(Mode::NumeraireFree),
            _ => Err(Error::InvalidArgument(format!(
                "unknown mode {s:?} (expected numeraire-based or numeraire-free)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HedgeCheck {
    pub primal_feasible: bool,
    pub dual_ok: bool,
    /// A hedging strategy when one exists.
    pub strategy: Option<Strategy>,
    /// Dual optimum for the claim net of the endowment; `None` when no
    /// consistent price system exists (every claim is then hedgeable).
    pub dual_value: Option<Rational>,
}

impl HedgeCheck {
    pub fn agree(&self) -> bool {
        self.primal_feasible == self.dual_ok
    }
}

/// Whether the claim can be hedged from `initial` at `start`, decided once
/// by the hedging LP and once by the dual condition
/// `max_Z E[X_T − initial] ≤ 0`. Both modes use the same LP; the
/// numéraire-based mode only admits endowments without stock.
pub fn check_hedgeable(tree: &MarketTree, claim: &Claim, start: NodeId, initial: &Position, mode: Mode) -> Result<HedgeCheck> {
    if mode == Mode::NumeraireBased && !initial.stock.is_zero() {
        return Err(Error::InvalidArgument("numeraire-based mode requires an initial position without stock".into()));
    }
    let (p, layout) = hedge_lp(tree, claim, start, initial, false)?;
    let outcome = lp::solve(&p)?;
    let strategy = match outcome.status {
        LpStatus::Optimal => Some(extract_strategy(tree, &outcome.primal, &layout)?),
        _ => None,
    };
    let net = Claim::new(
        tree.leaves_under(start)
            .into_iter()
            .map(|l| Ok((l, claim.payoff(l)? - initial)))
            .collect::<Result<_>>()?,
    );
    let dual_value = match dual_price(tree, &net, start) {
        Ok((v, _)) => Some(v),
        Err(Error::NoConsistentPriceSystem { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(HedgeCheck {
        primal_feasible: strategy.is_some(),
        dual_ok: dual_value.as_ref().is_none_or(|v| !v.is_positive()),
        strategy,
        dual_value,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Membership {
    pub in_a: bool,
    /// On rejection, a system pairing positively with `ξ` at `start`.
    pub separator: Option<PriceSystem>,
    pub strategy: Option<Strategy>,
}

/// Is `ξ` attainable from zero wealth at `start`? On rejection the dual
/// optimum separates `ξ` from the cone of attainable claims.
pub fn bipolar_membership(tree: &MarketTree, xi: &Claim, start: NodeId) -> Result<Membership> {
    let (p, layout) = hedge_lp(tree, xi, start, &Position::zero(), false)?;
    let outcome = lp::solve(&p)?;
    if outcome.status == LpStatus::Optimal {
        let strategy = extract_strategy(tree, &outcome.primal, &layout)?;
        return Ok(Membership { in_a: true, separator: None, strategy: Some(strategy) });
    }
    let (value, system) = dual_price(tree, xi, start)?;
    debug_assert!(value.is_positive());
    Ok(Membership { in_a: false, separator: Some(system), strategy: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_tree::build_binomial;
    use crate::rational::{int, ratio};
    use crate::strategies::{dominates_claim, validate_self_financing};

    fn t1() -> MarketTree {
        build_binomial(1, &int(100), &int(2), &ratio(1, 2), &ratio(1, 2), &ratio(1, 10)).unwrap()
    }

    fn stock_claim(tree: &MarketTree) -> Claim {
        Claim::uniform(tree, Position::new(int(0), int(1)))
    }

    fn call(tree: &MarketTree) -> Claim {
        Claim::cash_settled(tree, |s| (s - int(100)).max(int(0)))
    }

    #[test]
    fn t1_stock_claim() {
        let tree = t1();
        let claim = stock_claim(&tree);
        let (v, strat) = primal_price(&tree, &claim, 0).unwrap();
        assert_eq!(v, int(110));
        assert!(validate_self_financing(&tree, &strat).unwrap());
        assert!(dominates_claim(&tree, &strat, &claim).unwrap());
        let (d, z) = dual_price(&tree, &claim, 0).unwrap();
        assert_eq!(d, int(110));
        assert_eq!(cps::validate_cps(&tree, &z).unwrap(), CpsValidity::Strict);
        let f = price_process(&tree, &claim).unwrap();
        assert_eq!(f[&0], int(110));
        assert_eq!(f[&1], int(220));
        assert_eq!(f[&2], int(55));
    }

    #[test]
    fn frictionless_call() {
        let tree = t1().with_lambda(int(0)).unwrap();
        assert_eq!(primal_price(&tree, &call(&tree), 0).unwrap().0, ratio(100, 3));
        assert_eq!(dual_price(&tree, &call(&tree), 0).unwrap().0, ratio(100, 3));
    }

    #[test]
    fn trivial_claims() {
        let tree = build_binomial(2, &int(1), &int(2), &ratio(1, 2), &ratio(1, 2), &ratio(1, 10)).unwrap();
        let (v, strat) = primal_price(&tree, &Claim::zero(&tree), 0).unwrap();
        assert_eq!(v, int(0));
        assert!(strat.holdings.values().all(Position::is_zero));
        assert_eq!(dual_price(&tree, &Claim::uniform(&tree, Position::new(int(1), int(0))), 0).unwrap().0, int(1));
        let f = price_process(&tree, &stock_claim(&tree)).unwrap();
        assert_eq!(f.len(), 7);
        for (n, v) in f {
            assert_eq!(v, ratio(11, 10) * tree.price(n));
        }
    }

    #[test]
    fn arbitrage_tree_errors() {
        let ta = build_binomial(1, &int(100), &ratio(21, 10), &ratio(3, 2), &ratio(1, 2), &ratio(1, 10)).unwrap();
        let claim = stock_claim(&ta);
        assert!(matches!(primal_price(&ta, &claim, 0), Err(Error::NoConsistentPriceSystem { start: 0 })));
        assert!(matches!(dual_price(&ta, &claim, 0), Err(Error::NoConsistentPriceSystem { start: 0 })));
    }

    #[test]
    fn hedge_check_examples() {
        let tree = t1();
        let claim = stock_claim(&tree);
        let ok = check_hedgeable(&tree, &claim, 0, &Position::new(int(110), int(0)), Mode::NumeraireBased).unwrap();
        assert!(ok.primal_feasible && ok.dual_ok);
        let short = check_hedgeable(&tree, &claim, 0, &Position::new(int(109), int(0)), Mode::NumeraireBased).unwrap();
        assert!(!short.primal_feasible && !short.dual_ok);
        let free =
            check_hedgeable(&tree, &Claim::zero(&tree), 0, &Position::new(int(-90), int(1)), Mode::NumeraireFree).unwrap();
        assert!(free.primal_feasible && free.dual_ok);
        assert!(check_hedgeable(&tree, &claim, 0, &Position::new(int(0), int(1)), Mode::NumeraireBased).is_err());
    }

    #[test]
    fn bipolar_examples() {
        let tree = t1();
        let hedge = bipolar_membership(&tree, &Claim::uniform(&tree, Position::new(int(-110), int(1))), 0).unwrap();
        assert!(hedge.in_a);
        let free_bond = Claim::uniform(&tree, Position::new(int(1), int(0)));
        let rejected = bipolar_membership(&tree, &free_bond, 0).unwrap();
        assert!(!rejected.in_a);
        assert_eq!(rejected.separator.unwrap().pairing(&tree, &free_bond, 0).unwrap(), int(1));
        assert!(bipolar_membership(&tree, &Claim::zero(&tree), 0).unwrap().in_a);
    }

    #[test]
    fn report_and_modes() {
        let tree = t1();
        let r = price_report(&tree, &stock_claim(&tree), 0).unwrap();
        assert_eq!(r.gap, int(0));
        assert_eq!(r.strictness, Strictness::Strict);
        assert_eq!(r.per_node_f.len(), 3);
        for m in [Mode::NumeraireBased, Mode::NumeraireFree] {
            assert_eq!(m.to_string().parse::<Mode>().unwrap(), m);
        }
        assert!("based".parse::<Mode>().is_err());
    }

    #[test]
    fn global_matches_subtree_on_t1() {
        let tree = t1();
        let claim = call(&tree);
        for n in 0..3 {
            assert_eq!(global_dual_price(&tree, &claim, n).unwrap().0, dual_price(&tree, &claim, n).unwrap().0);
        }
    }
}
