//! Self-financing strategies on the tree and their admissibility checks.
//!
//! Trades at node `n` execute at `S_n`: buying costs `(1+λ)S_n` per share and
//! selling yields `(1−λ)S_n`. Bond holdings may fall below what the trades
//! fund (consumption), never above.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Signed;

use crate::cones::Position;
use crate::error::{Error, Result};
use crate::market_tree::{MarketTree, NodeId};
use crate::pricing::PrimalLayout;
use crate::rational::Rational;

/// Stock traded at a node: the increments of the two nondecreasing processes
/// whose difference is the stock holding.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Trade {
    pub buy: Rational,
    pub sell: Rational,
}

impl Trade {
    pub fn new(buy: Rational, sell: Rational) -> Self {
        Trade { buy, sell }
    }

    pub fn none() -> Self {
        Trade::default()
    }

    pub fn net(&self) -> Rational {
        &self.buy - &self.sell
    }
}

/// Holdings after trading at each node of the strategy's domain.
///
/// The domain is a union of subtrees, cut off at a common frontier or running
/// to the leaves. Its entry nodes (those whose parent lies outside the
/// domain) each carry an endowment held before their trade, which is how a
/// strategy on `[s, T]` starts from an endowment known at time `s`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Strategy {
    pub initial: BTreeMap<NodeId, Position>,
    pub holdings: BTreeMap<NodeId, Position>,
    pub trades: BTreeMap<NodeId, Trade>,
}

impl Strategy {
    /// Holdings before the trade at `node`.
    pub fn previous(&self, tree: &MarketTree, node: NodeId) -> Result<&Position> {
        match tree.parent(node).filter(|p| self.holdings.contains_key(p)) {
            Some(p) => Ok(&self.holdings[&p]),
            None => self
                .initial
                .get(&node)
                .ok_or_else(|| Error::InvalidStrategy(format!("entry node {node} has no initial endowment"))),
        }
    }

    pub fn entry_nodes(&self, tree: &MarketTree) -> Vec<NodeId> {
        self.holdings
            .keys()
            .copied()
            .filter(|&n| tree.parent(n).is_none_or(|p| !self.holdings.contains_key(&p)))
            .collect()
    }

    /// Zero strategy on the subtree at `start`, starting from nothing.
    pub fn zero(tree: &MarketTree, start: NodeId) -> Self {
        let nodes = tree.subtree(start);
        Strategy {
            initial: BTreeMap::from([(start, Position::zero())]),
            holdings: nodes.iter().map(|&n| (n, Position::zero())).collect(),
            trades: nodes.iter().map(|&n| (n, Trade::none())).collect(),
        }
    }

    /// Builds holdings from an endowment and trades on the subtree at
    /// `start`, spending exactly what the trades cost (no consumption).
    pub fn from_trades(
        tree: &MarketTree,
        start: NodeId,
        initial: Position,
        trades: &BTreeMap<NodeId, Trade>,
    ) -> Result<Self> {
        let mut holdings: BTreeMap<NodeId, Position> = BTreeMap::new();
        let mut full_trades = BTreeMap::new();
        for n in tree.subtree(start) {
            let prev = if n == start { initial.clone() } else { holdings[&tree.parent(n).expect("non-start node")].clone() };
            let trade = trades.get(&n).cloned().unwrap_or_default();
            let cone = tree.cone(n);
            let next = Position::new(
                &prev.bond + cone.bid() * &trade.sell - cone.ask() * &trade.buy,
                &prev.stock + trade.net(),
            );
            holdings.insert(n, next);
            full_trades.insert(n, trade);
        }
        Ok(Strategy { initial: BTreeMap::from([(start, initial)]), holdings, trades: full_trades })
    }

    /// Joins `head` with a `tail` that continues from head's holdings. Each
    /// tail entry node must either be a head node (the tail re-trades there,
    /// starting from head's post-trade holdings) or a child of a head node
    /// (starting from the parent's holdings). Trades at shared nodes add up.
    pub fn concatenate(tree: &MarketTree, head: &Strategy, tail: &Strategy) -> Result<Strategy> {
        let mut out = head.clone();
        for e in tail.entry_nodes(tree) {
            let expected = match head.holdings.get(&e) {
                Some(h) => h,
                None => tree
                    .parent(e)
                    .and_then(|p| head.holdings.get(&p))
                    .ok_or_else(|| Error::InvalidStrategy(format!("tail entry {e} does not continue the head")))?,
            };
            if tail.initial.get(&e) != Some(expected) {
                return Err(Error::InvalidStrategy(format!("tail endowment at {e} differs from head holdings")));
            }
        }
        for (&n, h) in &tail.holdings {
            let trade = tail.trades.get(&n).cloned().unwrap_or_default();
            let joined = match head.trades.get(&n) {
                Some(t) if head.holdings.contains_key(&n) => Trade::new(&t.buy + &trade.buy, &t.sell + &trade.sell),
                _ => trade,
            };
            out.holdings.insert(n, h.clone());
            out.trades.insert(n, joined);
        }
        Ok(out)
    }

    fn check_domain(&self, tree: &MarketTree) -> Result<()> {
        for &n in self.holdings.keys() {
            if !tree.contains(n) {
                return Err(Error::UnknownNode(n));
            }
            if !self.trades.contains_key(&n) {
                return Err(Error::InvalidStrategy(format!("node {n} has holdings but no trade record")));
            }
            let kids = tree.children(n);
            let present = kids.iter().filter(|c| self.holdings.contains_key(c)).count();
            if present != 0 && present != kids.len() {
                return Err(Error::InvalidStrategy(format!("strategy covers only some children of node {n}")));
            }
        }
        for n in self.entry_nodes(tree) {
            self.previous(tree, n)?;
        }
        Ok(())
    }
}

/// True iff every trade is a nonnegative decomposition consistent with the
/// stock bookkeeping and the bond change is covered by the trade proceeds:
/// `Δφ¹ ≤ (1−λ)S·sell − (1+λ)S·buy`.
pub fn validate_self_financing(tree: &MarketTree, strat: &Strategy) -> Result<bool> {
    strat.check_domain(tree)?;
    for (&n, pos) in &strat.holdings {
        let trade = &strat.trades[&n];
        if trade.buy.is_negative() || trade.sell.is_negative() {
            return Ok(false);
        }
        let prev = strat.previous(tree, n)?;
        if pos.stock != &prev.stock + trade.net() {
            return Ok(false);
        }
        let cone = tree.cone(n);
        let funded = cone.bid() * &trade.sell - cone.ask() * &trade.buy;
        if &pos.bond - &prev.bond > funded {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Cone form of the self-financing condition: `φ(n) − φ(prev) ∈ −K_n`, i.e.
/// the position given up can be liquidated to zero. Ignores the recorded
/// decomposition.
pub fn increments_in_solvency_cones(tree: &MarketTree, strat: &Strategy) -> Result<bool> {
    strat.check_domain(tree)?;
    for (&n, pos) in &strat.holdings {
        let prev = strat.previous(tree, n)?;
        if !tree.cone(n).contains(&(prev - pos)) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn liquidation_values(tree: &MarketTree, strat: &Strategy) -> BTreeMap<NodeId, Rational> {
    strat.holdings.iter().map(|(&n, pos)| (n, tree.cone(n).liquidation_value(pos))).collect()
}

/// Numéraire-based bound `V^liq ≥ −M` with `M` known at the start time.
pub fn check_admissible_numeraire_based(
    tree: &MarketTree,
    strat: &Strategy,
    bound: &BTreeMap<NodeId, Rational>,
) -> Result<bool> {
    let start_time = start_time(tree, strat)?;
    if bound.values().any(|m| m.is_negative()) {
        return Err(Error::InvalidArgument("admissibility bound must be nonnegative".into()));
    }
    for (n, v) in liquidation_values(tree, strat) {
        let anchor = tree.ancestor_at(n, start_time).expect("node after start time");
        let m = bound
            .get(&anchor)
            .ok_or_else(|| Error::InvalidArgument(format!("no bound for time-{start_time} node {anchor}")))?;
        if v < -m {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `(M¹, M²)` per node of the time-`s` slice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdmissibilityBound {
    pub start_time: usize,
    pub m1: BTreeMap<NodeId, Rational>,
    pub m2: BTreeMap<NodeId, Rational>,
}

impl AdmissibilityBound {
    pub fn uniform(tree: &MarketTree, start_time: usize, m1: Rational, m2: Rational) -> Self {
        let slice = tree.nodes_at(start_time);
        AdmissibilityBound {
            start_time,
            m1: slice.iter().map(|&n| (n, m1.clone())).collect(),
            m2: slice.iter().map(|&n| (n, m2.clone())).collect(),
        }
    }
}

/// Numéraire-free bound `V^liq ≥ −M¹ − M²·S_n`.
pub fn check_admissible_numeraire_free(tree: &MarketTree, strat: &Strategy, bound: &AdmissibilityBound) -> Result<bool> {
    let start_time = start_time(tree, strat)?;
    if start_time < bound.start_time {
        return Err(Error::InvalidArgument("bound is measurable after the strategy starts".into()));
    }
    if bound.m1.values().chain(bound.m2.values()).any(|m| m.is_negative()) {
        return Err(Error::InvalidArgument("admissibility bound must be nonnegative".into()));
    }
    for (n, v) in liquidation_values(tree, strat) {
        let anchor = tree.ancestor_at(n, bound.start_time).expect("node after start time");
        let (Some(m1), Some(m2)) = (bound.m1.get(&anchor), bound.m2.get(&anchor)) else {
            return Err(Error::InvalidArgument(format!("no bound for node {anchor}")));
        };
        if v < -m1 - m2 * tree.price(n) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn start_time(tree: &MarketTree, strat: &Strategy) -> Result<usize> {
    let times: BTreeSet<usize> = strat.entry_nodes(tree).iter().map(|&n| tree.time(n)).collect();
    match times.len() {
        0 => Err(Error::InvalidStrategy("empty strategy".into())),
        1 => Ok(*times.iter().next().unwrap()),
        _ => Err(Error::InvalidStrategy("entry nodes at different times".into())),
    }
}

/// Decodes a primal solution vector into holdings. Interior nodes carry no
/// consumption; at a leaf the final trade sets the stock holding and any
/// cash beyond the claim's bond leg is kept (the claim is dominated).
pub fn extract_strategy(tree: &MarketTree, lp_primal: &[Rational], layout: &PrimalLayout) -> Result<Strategy> {
    if lp_primal.len() != layout.num_vars {
        return Err(Error::LayoutMismatch(format!(
            "vector has {} entries, layout expects {}",
            lp_primal.len(),
            layout.num_vars
        )));
    }
    let mut initial = layout.initial.clone();
    if let Some(x) = layout.capital {
        initial.bond += &lp_primal[x];
    }
    let mut trades = BTreeMap::new();
    for n in tree.subtree(layout.start) {
        let (b, s) = layout
            .trade_vars
            .get(&n)
            .ok_or_else(|| Error::LayoutMismatch(format!("layout has no trade variables for node {n}")))?;
        trades.insert(n, Trade::new(lp_primal[*b].clone(), lp_primal[*s].clone()));
    }
    Strategy::from_trades(tree, layout.start, initial, &trades)
}

/// `φ_leaf ⪰ X_leaf` at every leaf of the strategy.
pub fn dominates_claim(tree: &MarketTree, strat: &Strategy, claim: &crate::market_tree::Claim) -> Result<bool> {
    for (&n, pos) in &strat.holdings {
        if tree.is_leaf(n) && !tree.cone(n).dominates(pos, claim.payoff(n)?) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_tree::build_binomial;
    use crate::rational::{int, ratio};

    fn t1() -> MarketTree {
        build_binomial(1, &int(100), &int(2), &ratio(1, 2), &ratio(1, 2), &ratio(1, 10)).unwrap()
    }

    fn one_trade(tree: &MarketTree, initial: Position, root_holding: Position, trade: Trade) -> Strategy {
        let mut s = Strategy::zero(tree, 0);
        s.initial.insert(0, initial);
        for n in tree.subtree(0) {
            s.holdings.insert(n, root_holding.clone());
        }
        s.trades.insert(0, trade);
        s
    }

    #[test]
    fn self_financing_examples() {
        let tree = t1();
        let buy1 = Trade::new(int(1), int(0));
        let s = one_trade(&tree, Position::new(int(110), int(0)), Position::new(int(0), int(1)), buy1.clone());
        assert!(validate_self_financing(&tree, &s).unwrap());
        assert!(increments_in_solvency_cones(&tree, &s).unwrap());
        let s = one_trade(&tree, Position::new(int(100), int(0)), Position::new(int(-10), int(1)), buy1.clone());
        assert!(validate_self_financing(&tree, &s).unwrap());
        let s = one_trade(&tree, Position::new(int(100), int(0)), Position::new(int(0), int(1)), buy1);
        assert!(!validate_self_financing(&tree, &s).unwrap());
        assert!(!increments_in_solvency_cones(&tree, &s).unwrap());
    }

    #[test]
    fn negative_trade_or_bad_bookkeeping_fails() {
        let tree = t1();
        let s = one_trade(&tree, Position::zero(), Position::new(int(110), int(-1)), Trade::new(int(-1), int(0)));
        assert!(!validate_self_financing(&tree, &s).unwrap());
        let s = one_trade(&tree, Position::zero(), Position::new(int(0), int(2)), Trade::new(int(1), int(0)));
        assert!(!validate_self_financing(&tree, &s).unwrap());
    }

    #[test]
    fn missing_nodes_are_errors() {
        let tree = t1();
        let mut s = Strategy::zero(&tree, 0);
        s.holdings.remove(&2);
        s.trades.remove(&2);
        assert!(validate_self_financing(&tree, &s).is_err());
        let mut s = Strategy::zero(&tree, 0);
        s.initial.clear();
        assert!(validate_self_financing(&tree, &s).is_err());
    }

    #[test]
    fn numeraire_based_admissibility() {
        let tree = t1();
        let zero_bound = BTreeMap::from([(0, int(0))]);
        // buy and hold one share from (110, 0): V = 90 / 180 / 45
        let s = one_trade(&tree, Position::new(int(110), int(0)), Position::new(int(0), int(1)), Trade::new(int(1), int(0)));
        assert!(check_admissible_numeraire_based(&tree, &s, &zero_bound).unwrap());
        // short one share from (0, 0): V = -20 / -130 / 35
        let short = one_trade(&tree, Position::zero(), Position::new(int(90), int(-1)), Trade::new(int(0), int(1)));
        let v: Vec<_> = (0..3).map(|n| tree.cone(n).liquidation_value(&short.holdings[&n])).collect();
        assert_eq!(v, vec![int(-20), int(-130), int(35)]);
        assert!(!check_admissible_numeraire_based(&tree, &short, &zero_bound).unwrap());
        assert!(check_admissible_numeraire_based(&tree, &short, &BTreeMap::from([(0, int(130))])).unwrap());
        assert!(!check_admissible_numeraire_based(&tree, &short, &BTreeMap::from([(0, int(129))])).unwrap());
    }

    #[test]
    fn numeraire_free_admissibility() {
        let tree = t1();
        let short = one_trade(&tree, Position::zero(), Position::new(int(90), int(-1)), Trade::new(int(0), int(1)));
        let loose = AdmissibilityBound::uniform(&tree, 0, int(0), int(2));
        assert!(check_admissible_numeraire_free(&tree, &short, &loose).unwrap());
        let none = AdmissibilityBound::uniform(&tree, 0, int(0), int(0));
        assert!(!check_admissible_numeraire_free(&tree, &short, &none).unwrap());
        assert!(check_admissible_numeraire_free(&tree, &Strategy::zero(&tree, 0), &none).unwrap());
    }

    #[test]
    fn node_check_matches_stopping_time_check() {
        // Every stopping time picks node values, so the minimum slack over
        // stopping times equals the minimum over nodes.
        for seed in 0..15 {
            let tree = crate::market_tree::build_random(seed, 2, 3, &ratio(1, 10)).unwrap();
            if tree.len() > 15 {
                continue;
            }
            let trades = tree
                .subtree(0)
                .into_iter()
                .map(|n| (n, Trade::new(ratio((n as i64 * 7 + seed as i64) % 3, 2), ratio((n as i64 * 5) % 4, 3))))
                .collect();
            let s = Strategy::from_trades(&tree, 0, Position::new(int(10), int(0)), &trades).unwrap();
            let values = liquidation_values(&tree, &s);
            let node_min = values.values().min().unwrap().clone();
            let cut_min = tree
                .enumerate_stopping_times(0)
                .iter()
                .map(|cut| cut.nodes.iter().map(|n| values[n].clone()).min().unwrap())
                .min()
                .unwrap();
            assert_eq!(node_min, cut_min);
        }
    }

    #[test]
    fn concatenation_stays_self_financing() {
        let tree = build_binomial(2, &int(100), &int(2), &ratio(1, 2), &ratio(1, 2), &ratio(1, 10)).unwrap();
        // head: buy one share at the root, hold through time 1
        let mut head = Strategy::from_trades(
            &tree,
            0,
            Position::new(int(110), int(0)),
            &BTreeMap::from([(0, Trade::new(int(1), int(0)))]),
        )
        .unwrap();
        head.holdings.retain(|&n, _| tree.time(n) <= 1);
        head.trades.retain(|&n, _| tree.time(n) <= 1);
        assert!(validate_self_financing(&tree, &head).unwrap());
        // tails: from each time-1 node, sell half the share at time 2
        let mut joined = head.clone();
        for n in tree.nodes_at(1) {
            let mut tail = Strategy::from_trades(&tree, n, head.holdings[&n].clone(), &BTreeMap::new()).unwrap();
            for &c in tree.children(n) {
                let prev = tail.holdings[&n].clone();
                let cone = tree.cone(c);
                tail.trades.insert(c, Trade::new(int(0), ratio(1, 2)));
                tail.holdings.insert(c, Position::new(&prev.bond + cone.bid() * ratio(1, 2), &prev.stock - ratio(1, 2)));
            }
            assert!(validate_self_financing(&tree, &tail).unwrap());
            joined = Strategy::concatenate(&tree, &joined, &tail).unwrap();
        }
        assert_eq!(joined.holdings.len(), tree.len());
        assert_eq!(joined.entry_nodes(&tree), vec![0]);
        assert!(validate_self_financing(&tree, &joined).unwrap());
    }
}
