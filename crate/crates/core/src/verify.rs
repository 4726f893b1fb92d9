//! Brute-force oracles and the invariant suite.
//!
//! The oracles below only read tree data (prices, cost level, shape). They
//! never call the LP engine, the cone helpers or the price-system operations,
//! so every agreement check compares two independent computations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cones::Position;
use crate::cps::{self, CpsSearch, CpsValidity, PriceSystem};
use crate::error::{Error, Result};
use crate::formats;
use crate::lp::{self, samples, LpProblem, LpStatus, Relation, Sense};
use crate::market_tree::{build_binomial, build_random, build_random_depth, random_claim, Claim, MarketTree, NodeId};
use crate::pricing::{self, Mode};
use crate::rational::{self, int, ratio, Rational};
use crate::strategies;

/// Corpus trees: depth ≤ 4, branching ≤ 3, cost level 1/10.
pub fn corpus_tree(seed: u64) -> Result<MarketTree> {
    build_random(seed, 4, 3, &ratio(1, 10))
}

pub fn corpus_claim(tree: &MarketTree, seed: u64) -> Claim {
    random_claim(tree, seed)
}

/// The one-period binomial tree `S0 = 100`, leaves 200 and 50, `λ = 1/10`.
pub fn t1() -> MarketTree {
    build_binomial(1, &int(100), &int(2), &ratio(1, 2), &ratio(1, 2), &ratio(1, 10)).expect("valid tree")
}

/// One-period tree with leaves 210 and 150: no price system exists.
pub fn ta() -> MarketTree {
    build_binomial(1, &int(100), &ratio(21, 10), &ratio(3, 2), &ratio(1, 2), &ratio(1, 10)).expect("valid tree")
}

/// One-period tree with three states (160, 100, 70), `λ = 1/10`.
pub fn three_state() -> MarketTree {
    use crate::market_tree::Node;
    let node = |id, parent, price: i64, prob| Node { id, parent, time: usize::from(parent.is_some()), price: int(price), prob };
    MarketTree::new(
        vec![
            node(0, None, 100, int(1)),
            node(1, Some(0), 160, ratio(1, 4)),
            node(2, Some(0), 100, ratio(1, 2)),
            node(3, Some(0), 70, ratio(1, 4)),
        ],
        ratio(1, 10),
    )
    .expect("valid tree")
}

/// Seeded binomial tree of depth 1..=3.
pub fn binomial_from_seed(seed: u64, lambda: &Rational) -> Result<MarketTree> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let depth = rng.gen_range(1..=3);
    let s0 = int(rng.gen_range(5..=20) * 10);
    let up = ratio(rng.gen_range(11..=20), 10);
    let down = ratio(rng.gen_range(5..=9), 10);
    let p = ratio(rng.gen_range(1..=9), 10);
    build_binomial(depth, &s0, &up, &down, &p, lambda)
}

fn band(tree: &MarketTree, n: NodeId) -> (Rational, Rational) {
    let s = tree.price(n);
    let l = tree.lambda();
    ((Rational::one() - l) * s, (Rational::one() + l) * s)
}

/// Decides whether `xi` is attainable from zero wealth on a one-period tree
/// (at most three states) by enumerating the vertices of the feasible
/// region of the root trade `(b, s) ≥ 0`.
pub fn oracle_one_period_membership(tree: &MarketTree, xi: &Claim) -> Result<bool> {
    let root = tree.root();
    let leaves = tree.children(root).to_vec();
    if tree.horizon() != 1 || leaves.len() > 3 {
        return Err(Error::InvalidArgument("membership oracle needs a one-period tree with at most 3 states".into()));
    }
    let (bid0, ask0) = band(tree, root);
    // rows (α, β, γ): α·b + β·s ≥ γ
    let mut rows = vec![[int(1), int(0), int(0)], [int(0), int(1), int(0)]];
    for &l in &leaves {
        let x = xi.payoff(l)?;
        let (bid, ask) = band(tree, l);
        for c in [bid, ask] {
            rows.push([&c - &ask0, &bid0 - &c, &x.bond + &c * &x.stock]);
        }
    }
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let (p, q) = (&rows[i], &rows[j]);
            let det = &p[0] * &q[1] - &p[1] * &q[0];
            if det.is_zero() {
                continue;
            }
            let b = (&p[2] * &q[1] - &q[2] * &p[1]) / &det;
            let s = (&p[0] * &q[2] - &q[0] * &p[2]) / &det;
            if rows.iter().all(|r| &r[0] * &b + &r[1] * &s >= r[2]) {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// All vertices of `{leaf masses : every subtree sum lies in its polar cone,
/// Σ w¹ = 1}` below `start`, found by the double description method on the
/// homogeneous cone. Trees above 12 nodes are refused.
pub fn oracle_dual_vertices(tree: &MarketTree, start: NodeId) -> Result<Vec<PriceSystem>> {
    tree.node(start)?;
    let nodes = tree.subtree(start);
    if nodes.len() > 12 {
        return Err(Error::InvalidArgument(format!("vertex oracle is limited to 12 nodes, got {}", nodes.len())));
    }
    let leaves = tree.leaves_under(start);
    let d = 2 * leaves.len();
    let mut rows: Vec<Vec<Rational>> = Vec::new();
    for k in 0..leaves.len() {
        let mut row = vec![int(0); d];
        row[2 * k] = int(1);
        rows.push(row);
    }
    for &n in &nodes {
        let (bid, ask) = band(tree, n);
        let mut lower = vec![int(0); d];
        let mut upper = vec![int(0); d];
        for (k, l) in leaves.iter().enumerate() {
            if tree.is_ancestor_or_self(n, *l) {
                lower[2 * k] = -bid.clone();
                lower[2 * k + 1] = int(1);
                upper[2 * k] = ask.clone();
                upper[2 * k + 1] = int(-1);
            }
        }
        rows.push(lower);
        rows.push(upper);
    }
    let mut out = Vec::new();
    for ray in extreme_rays(&rows, d) {
        let total: Rational = (0..leaves.len()).map(|k| ray[2 * k].clone()).sum();
        if !total.is_positive() {
            continue;
        }
        let leaf_mass: BTreeMap<NodeId, Position> = leaves
            .iter()
            .enumerate()
            .map(|(k, &l)| (l, Position::new(&ray[2 * k] / &total, &ray[2 * k + 1] / &total)))
            .collect();
        let masses = nodes
            .iter()
            .map(|&n| {
                let mut w = Position::zero();
                for (&l, m) in &leaf_mass {
                    if tree.is_ancestor_or_self(n, l) {
                        w = &w + m;
                    }
                }
                (n, w)
            })
            .collect();
        out.push(PriceSystem { start_time: tree.time(start), masses });
    }
    Ok(out)
}

fn rank(rows: &[&Vec<Rational>]) -> usize {
    let mut m: Vec<Vec<Rational>> = rows.iter().map(|r| (*r).clone()).collect();
    let cols = m.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else { continue };
        m.swap(r, p);
        for i in r + 1..m.len() {
            if !m[i][c].is_zero() {
                let f = &m[i][c] / &m[r][c];
                for j in c..cols {
                    let v = &f * &m[r][j];
                    m[i][j] -= v;
                }
            }
        }
        r += 1;
    }
    r
}

fn solve_square(a: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    let n = b.len();
    let mut m: Vec<Vec<Rational>> = a.iter().zip(b).map(|(r, v)| r.iter().cloned().chain([v.clone()]).collect()).collect();
    for c in 0..n {
        let p = (c..n).find(|&i| !m[i][c].is_zero())?;
        m.swap(c, p);
        let pivot = m[c][c].clone();
        for v in &mut m[c] {
            *v /= &pivot;
        }
        for i in 0..n {
            if i != c && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in c..=n {
                    let v = &f * &m[c][j];
                    m[i][j] -= v;
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n].clone()).collect())
}

fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize_ray(mut r: Vec<Rational>) -> Vec<Rational> {
    if let Some(s) = r.iter().find(|v| !v.is_zero()).map(|v| v.abs()) {
        for v in &mut r {
            *v /= &s;
        }
    }
    r
}

/// Extreme rays of the pointed cone `{x : a·x ≥ 0 for every row a}`.
fn extreme_rays(rows: &[Vec<Rational>], d: usize) -> Vec<Vec<Rational>> {
    let mut basis: Vec<usize> = Vec::new();
    for i in 0..rows.len() {
        let mut trial: Vec<&Vec<Rational>> = basis.iter().map(|&k| &rows[k]).collect();
        trial.push(&rows[i]);
        if rank(&trial) == trial.len() {
            basis.push(i);
        }
        if basis.len() == d {
            break;
        }
    }
    assert_eq!(basis.len(), d, "cone is not pointed");
    let a: Vec<Vec<Rational>> = basis.iter().map(|&k| rows[k].clone()).collect();
    let mut rays: Vec<(Vec<Rational>, BTreeSet<usize>)> = (0..d)
        .map(|k| {
            let e: Vec<Rational> = (0..d).map(|i| if i == k { int(1) } else { int(0) }).collect();
            let r = solve_square(&a, &e).expect("independent rows");
            let tight = basis.iter().enumerate().filter(|&(i, _)| i != k).map(|(_, &row)| row).collect();
            (normalize_ray(r), tight)
        })
        .collect();
    for (i, row) in rows.iter().enumerate() {
        if basis.contains(&i) {
            continue;
        }
        let values: Vec<Rational> = rays.iter().map(|(r, _)| dot(row, r)).collect();
        let mut next = Vec::new();
        for (k, (r, z)) in rays.iter().enumerate() {
            if values[k].is_positive() {
                next.push((r.clone(), z.clone()));
            } else if values[k].is_zero() {
                let mut z = z.clone();
                z.insert(i);
                next.push((r.clone(), z));
            }
        }
        for p in 0..rays.len() {
            if !values[p].is_positive() {
                continue;
            }
            for n in 0..rays.len() {
                if !values[n].is_negative() {
                    continue;
                }
                let common: BTreeSet<usize> = rays[p].1.intersection(&rays[n].1).copied().collect();
                if common.len() + 2 < d {
                    continue;
                }
                let adjacent = rays
                    .iter()
                    .enumerate()
                    .all(|(k, (_, z))| k == p || k == n || !common.is_subset(z));
                if !adjacent {
                    continue;
                }
                let r: Vec<Rational> = rays[n]
                    .0
                    .iter()
                    .zip(&rays[p].0)
                    .map(|(x, y)| &values[p] * x - &values[n] * y)
                    .collect();
                let mut z = common;
                z.insert(i);
                next.push((normalize_ray(r), z));
            }
        }
        rays = next;
    }
    let mut seen = BTreeSet::new();
    rays.into_iter().map(|(r, _)| r).filter(|r| seen.insert(r.clone())).collect()
}

/// Frictionless replication value at `node` on a tree whose interior nodes
/// all have two children with distinct prices bracketing the parent.
pub fn oracle_binomial_price(tree: &MarketTree, claim: &Claim, node: NodeId) -> Result<Rational> {
    if tree.is_leaf(node) {
        let x = claim.payoff(node)?;
        return Ok(&x.bond + tree.price(node) * &x.stock);
    }
    let (up, down, q) = binomial_step(tree, node)?;
    let vu = oracle_binomial_price(tree, claim, up)?;
    let vd = oracle_binomial_price(tree, claim, down)?;
    Ok(&q * vu + (Rational::one() - &q) * vd)
}

fn binomial_step(tree: &MarketTree, node: NodeId) -> Result<(NodeId, NodeId, Rational)> {
    let kids = tree.children(node);
    if kids.len() != 2 {
        return Err(Error::InvalidArgument(format!("node {node} does not have two children")));
    }
    let (up, down) = if tree.price(kids[0]) >= tree.price(kids[1]) { (kids[0], kids[1]) } else { (kids[1], kids[0]) };
    let (s, su, sd) = (tree.price(node), tree.price(up), tree.price(down));
    if su <= s || sd >= s {
        return Err(Error::InvalidArgument(format!("no martingale measure at node {node}")));
    }
    Ok((up, down, (s - sd) / (su - sd)))
}

/// Mass representation of the frictionless martingale measure of a binomial
/// tree below `start`, with shadow price equal to the market price.
pub fn oracle_binomial_emm(tree: &MarketTree, start: NodeId) -> Result<PriceSystem> {
    let mut masses = BTreeMap::new();
    let mut stack = vec![(start, int(1))];
    while let Some((n, q)) = stack.pop() {
        masses.insert(n, Position::new(q.clone(), &q * tree.price(n)));
        if !tree.is_leaf(n) {
            let (up, down, p) = binomial_step(tree, n)?;
            stack.push((up, &q * &p));
            stack.push((down, &q * (Rational::one() - &p)));
        }
    }
    Ok(PriceSystem { start_time: tree.time(start), masses })
}

/// Direct check of the price-system conditions: masses sum over children,
/// shadow inside the closed band, bond mass positive (`strict`) or
/// nonnegative.
pub fn oracle_is_cps(tree: &MarketTree, z: &PriceSystem, strict: bool) -> bool {
    let starts: Vec<NodeId> = z.masses.keys().copied().filter(|&n| tree.contains(n) && tree.time(n) == z.start_time).collect();
    if starts.is_empty() {
        return false;
    }
    let mut expected = BTreeSet::new();
    for &s in &starts {
        expected.extend(tree.subtree(s));
    }
    if z.masses.keys().copied().collect::<BTreeSet<_>>() != expected {
        return false;
    }
    for (&n, w) in &z.masses {
        let (bid, ask) = band(tree, n);
        let in_band = &bid * &w.bond <= w.stock && w.stock <= &ask * &w.bond;
        let ok = in_band && if strict { w.bond.is_positive() } else { !w.bond.is_negative() };
        if !ok {
            return false;
        }
        if !tree.is_leaf(n) {
            let (mut b, mut s) = (int(0), int(0));
            for c in tree.children(n) {
                b += &z.masses[c].bond;
                s += &z.masses[c].stock;
            }
            if b != w.bond || s != w.stock {
                return false;
            }
        }
    }
    starts.iter().any(|s| z.masses[s].bond.is_positive())
}

/// `Σ_{leaves ℓ under m} ⟨w(ℓ), X(ℓ)⟩ / Σ w¹(ℓ)`.
pub fn oracle_conditional_value(tree: &MarketTree, z: &PriceSystem, claim: &Claim, m: NodeId) -> Result<Rational> {
    let (mut num, mut den) = (int(0), int(0));
    for l in tree.leaves_under(m) {
        let w = z.masses.get(&l).ok_or(Error::UnknownNode(l))?;
        let x = claim.payoff(l)?;
        num += &w.bond * &x.bond + &w.stock * &x.stock;
        den += &w.bond;
    }
    if !den.is_positive() {
        return Err(Error::InvalidPriceSystem(format!("no mass below node {m}")));
    }
    Ok(num / den)
}

/// Minimum of `c·x` over the vertices of `{x ∈ R² : rows}` (rows as
/// `(α, β, γ)` meaning `α·x₀ + β·x₁ ≥ γ`).
pub fn oracle_lp_2d(rows: &[[Rational; 3]], c: &[Rational; 2]) -> Option<Rational> {
    let mut best: Option<Rational> = None;
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let (p, q) = (&rows[i], &rows[j]);
            let det = &p[0] * &q[1] - &p[1] * &q[0];
            if det.is_zero() {
                continue;
            }
            let x0 = (&p[2] * &q[1] - &q[2] * &p[1]) / &det;
            let x1 = (&p[0] * &q[2] - &q[0] * &p[2]) / &det;
            if rows.iter().all(|r| &r[0] * &x0 + &r[1] * &x1 >= r[2]) {
                let v = &c[0] * &x0 + &c[1] * &x1;
                if best.as_ref().is_none_or(|b| v < *b) {
                    best = Some(v);
                }
            }
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    /// Solve the duality cases' dual at half the cost level.
    CorruptBand,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleConfig {
    /// Bipolar grid half-width; `None` means `2·(1+λ)·max price` per tree.
    pub grid_radius: Option<Rational>,
    /// Grid points per axis.
    pub grid_steps: usize,
    pub seeds: Vec<u64>,
    pub fault: Option<Fault>,
}

impl OracleConfig {
    pub fn new(seeds: Vec<u64>) -> Self {
        OracleConfig { grid_radius: None, grid_steps: 21, seeds, fault: None }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_steps < 3 {
            return Err(Error::InvalidArgument("grid_steps must be at least 3".into()));
        }
        if self.grid_radius.as_ref().is_some_and(|r| !r.is_positive()) {
            return Err(Error::InvalidArgument("grid_radius must be positive".into()));
        }
        Ok(())
    }
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig::new((1..=10).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseStatus {
    Pass,
    Fail,
    Skip,
}

impl CaseStatus {
    pub fn label(self) -> &'static str {
        match self {
            CaseStatus::Pass => "PASS",
            CaseStatus::Fail => "FAIL",
            CaseStatus::Skip => "SKIP",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub id: String,
    pub theorem: String,
    pub status: CaseStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub detail: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Value>,
}

impl CaseResult {
    pub fn passed(&self) -> bool {
        self.status == CaseStatus::Pass
    }
}

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn run_case(
    id: String,
    theorem: &str,
    seed: Option<u64>,
    dump: Option<(&MarketTree, Option<&Claim>)>,
    body: impl FnOnce() -> Result<Outcome>,
) -> CaseResult {
    let (status, detail) = match body() {
        Ok(Outcome::Pass(d)) => (CaseStatus::Pass, d),
        Ok(Outcome::Fail(d)) => (CaseStatus::Fail, d),
        Ok(Outcome::Skip(d)) => (CaseStatus::Skip, d),
        Err(e) => (CaseStatus::Fail, format!("error: {e}")),
    };
    let counterexample = match (status, dump) {
        (CaseStatus::Fail, Some((tree, claim))) => serde_json::from_str(&formats::tree_to_json(tree, claim)).ok(),
        _ => None,
    };
    CaseResult { id, theorem: theorem.to_string(), status, seed, detail, counterexample }
}

fn fmt(v: &Rational) -> String {
    rational::format(v)
}

fn seed_id(family: &str, seed: u64) -> String {
    format!("{family}/{seed:05}")
}

fn tree_or_fail(id: String, theorem: &str, seed: u64, tree: Result<MarketTree>) -> std::result::Result<MarketTree, CaseResult> {
    tree.map_err(|e| run_case(id, theorem, Some(seed), None, || Err(e)))
}

const DUALITY: &str = "strong duality: primal price = dual price";

/// Primal and dual prices of a corpus claim agree exactly whenever a strict
/// price system exists.
pub fn case_duality(seed: u64, fault: Option<Fault>) -> CaseResult {
    let id = seed_id("duality", seed);
    let tree = match tree_or_fail(id.clone(), DUALITY, seed, corpus_tree(seed)) {
        Ok(t) => t,
        Err(r) => return r,
    };
    let claim = corpus_claim(&tree, seed);
    run_case(id, DUALITY, Some(seed), Some((&tree, Some(&claim))), || {
        if matches!(cps::find_cps(&tree, 0)?, CpsSearch::NotFound { .. }) {
            return Ok(Outcome::Skip("no strict price system".into()));
        }
        let (primal, strategy) = pricing::primal_price(&tree, &claim, 0)?;
        let dual_tree = match fault {
            Some(Fault::CorruptBand) => tree.with_lambda(tree.lambda() / int(2))?,
            None => tree.clone(),
        };
        let (dual, _) = pricing::dual_price(&dual_tree, &claim, 0)?;
        let hedges = strategies::dominates_claim(&tree, &strategy, &claim)?
            && strategies::validate_self_financing(&tree, &strategy)?;
        Ok(check(
            primal == dual && hedges,
            format!("nodes={} primal={} dual={} hedge_ok={hedges}", tree.len(), fmt(&primal), fmt(&dual)),
        ))
    })
}

const HEDGE: &str = "super-replication: hedgeable iff every price system prices below capital";

/// Hedge LP and dual test agree at capital `v − 1`, `v`, `v + 1` where `v` is
/// the dual price.
pub fn case_hedge(seed: u64, mode: Mode) -> CaseResult {
    let id = format!("{}/{mode}", seed_id("hedge", seed));
    let tree = match tree_or_fail(id.clone(), HEDGE, seed, corpus_tree(seed)) {
        Ok(t) => t,
        Err(r) => return r,
    };
    let claim = corpus_claim(&tree, seed);
    run_case(id, HEDGE, Some(seed), Some((&tree, Some(&claim))), || {
        let (v, _) = match pricing::dual_price(&tree, &claim, 0) {
            Err(Error::NoConsistentPriceSystem { .. }) => return Ok(Outcome::Skip("no price system".into())),
            other => other?,
        };
        let s0 = tree.price(0).clone();
        let mut checked = 0;
        for shift in [-1, 0, 1] {
            let x = &v + int(shift);
            let mut initials = vec![Position::new(x.clone(), int(0))];
            if mode == Mode::NumeraireFree {
                initials.push(Position::new(&x - &s0, int(1)));
            }
            for (k, initial) in initials.iter().enumerate() {
                let h = pricing::check_hedgeable(&tree, &claim, 0, initial, mode)?;
                if !h.agree() {
                    return Ok(Outcome::Fail(format!(
                        "initial=({}, {}) primal={} dual={}",
                        fmt(&initial.bond),
                        fmt(&initial.stock),
                        h.primal_feasible,
                        h.dual_ok
                    )));
                }
                if k == 0 && h.primal_feasible != (shift >= 0) {
                    return Ok(Outcome::Fail(format!("capital {} hedge={} against price {}", fmt(&x), h.primal_feasible, fmt(&v))));
                }
                checked += 1;
            }
        }
        Ok(Outcome::Pass(format!("price={} instances={checked}", fmt(&v))))
    })
}

const TIME: &str = "time independence: subtree price = conditional value of the global optimum";

/// At every interior node, the subtree price equals the conditional value of
/// a dual optimum computed on the whole tree.
pub fn case_time_independence(seed: u64) -> CaseResult {
    let id = seed_id("time", seed);
    let tree = match tree_or_fail(id.clone(), TIME, seed, corpus_tree(seed)) {
        Ok(t) => t,
        Err(r) => return r,
    };
    let claim = corpus_claim(&tree, seed);
    run_case(id, TIME, Some(seed), Some((&tree, Some(&claim))), || {
        let f = pricing::price_process(&tree, &claim)?;
        let interior: Vec<NodeId> = (0..tree.len()).filter(|&n| !tree.is_leaf(n)).collect();
        for &n in &interior {
            let (global, system) = pricing::global_dual_price(&tree, &claim, n)?;
            let conditional = oracle_conditional_value(&tree, &system, &claim, n)?;
            if global != f[&n] || conditional != global {
                return Ok(Outcome::Fail(format!(
                    "node {n}: subtree={} global={} conditional={}",
                    fmt(&f[&n]),
                    fmt(&global),
                    fmt(&conditional)
                )));
            }
        }
        Ok(Outcome::Pass(format!("interior_nodes={}", interior.len())))
    })
}

const ASK: &str = "ask formula: F(n) = (1+λ)·S(n) for the stock claim";

/// On a tree with a frictionless martingale measure on every subtree, the
/// price process of one share is the ask price.
pub fn case_ask_formula(id: String, seed: Option<u64>, tree: &MarketTree) -> CaseResult {
    let claim = Claim::uniform(tree, Position::new(int(0), int(1)));
    run_case(id, ASK, seed, Some((tree, Some(&claim))), || {
        let frictionless = tree.with_lambda(int(0))?;
        for n in (0..tree.len()).filter(|&n| !tree.is_leaf(n)) {
            if matches!(cps::find_cps(&frictionless, n)?, CpsSearch::NotFound { .. }) {
                return Ok(Outcome::Skip(format!("no frictionless martingale measure below node {n}")));
            }
        }
        let f = pricing::price_process(tree, &claim)?;
        let one_plus = Rational::one() + tree.lambda();
        for (&n, v) in &f {
            let expected = &one_plus * tree.price(n);
            if *v != expected {
                return Ok(Outcome::Fail(format!("node {n}: F={} expected {}", fmt(v), fmt(&expected))));
            }
        }
        Ok(Outcome::Pass(format!("nodes={} lambda={}", f.len(), fmt(tree.lambda()))))
    })
}

/// Cost levels used for seeded ask-formula trees.
pub fn ask_lambda(seed: u64) -> Rational {
    [ratio(1, 100), ratio(1, 20), ratio(1, 10), ratio(1, 5)][(seed % 4) as usize].clone()
}

pub fn case_ask_seeded(seed: u64) -> CaseResult {
    let id = seed_id("ask", seed);
    match tree_or_fail(id.clone(), ASK, seed, binomial_from_seed(seed, &ask_lambda(seed))) {
        Ok(tree) => case_ask_formula(id, Some(seed), &tree),
        Err(r) => r,
    }
}

const BIPOLAR: &str = "bipolar theorem: LP membership = one-period oracle";

/// Summary of a bipolar grid comparison.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GridTally {
    pub points: usize,
    pub agree: usize,
    pub inside: usize,
    pub boundary: usize,
}

/// Compares `bipolar_membership` with the oracle on four 2-d grids of
/// claims: uniform `(ξ¹, ξ²)` with both legs on `[−r, r]`; uniform with the
/// stock leg measured in shares bought at the root ask, then at the root
/// bid; cash claims paying `a` in the first state and `b` elsewhere.
pub fn bipolar_grid(tree: &MarketTree, config: &OracleConfig) -> Result<(GridTally, Option<String>)> {
    config.validate()?;
    let root = tree.root();
    let leaves = tree.children(root).to_vec();
    let (bid0, ask0) = band(tree, root);
    let r = config.grid_radius.clone().unwrap_or_else(|| int(2) * (Rational::one() + tree.lambda()) * tree.max_price());
    let half = (config.grid_steps - 1) as i64;
    let step = &r * ratio(2, half);
    let coord = |i: i64| &step * int(i) - &r;
    let shift = ratio(1, 1_000_000_000);
    let mut tally = GridTally::default();
    for grid in 0..4 {
        for i in 0..config.grid_steps as i64 {
            for j in 0..config.grid_steps as i64 {
                let (a, b) = (coord(i), coord(j));
                let payoff = |k: usize| match grid {
                    0 => Position::new(a.clone(), b.clone()),
                    1 => Position::new(a.clone(), &b / &ask0),
                    2 => Position::new(a.clone(), &b / &bid0),
                    _ => Position::new(if k == 0 { a.clone() } else { b.clone() }, int(0)),
                };
                let xi = Claim::new(leaves.iter().enumerate().map(|(k, &l)| (l, payoff(k))).collect());
                let oracle = oracle_one_period_membership(tree, &xi)?;
                let lp = pricing::bipolar_membership(tree, &xi, root)?;
                tally.points += 1;
                if oracle != lp.in_a {
                    return Ok((tally, Some(formats::claim_to_json(&xi))));
                }
                if let Some(sep) = &lp.separator {
                    let pairing: Rational = leaves
                        .iter()
                        .map(|l| {
                            let w = &sep.masses[l];
                            let x = xi.payoff(*l).expect("claim covers leaves");
                            &w.bond * &x.bond + &w.stock * &x.stock
                        })
                        .sum();
                    if !pairing.is_positive() || !oracle_is_cps(tree, sep, false) {
                        return Ok((tally, Some(formats::claim_to_json(&xi))));
                    }
                }
                tally.agree += 1;
                if oracle {
                    tally.inside += 1;
                    let nudged = Claim::new(xi.payoffs.iter().map(|(&l, x)| (l, Position::new(&x.bond + &shift, x.stock.clone()))).collect());
                    if !oracle_one_period_membership(tree, &nudged)? {
                        tally.boundary += 1;
                    }
                }
            }
        }
    }
    Ok((tally, None))
}

pub fn case_bipolar(name: &str, tree: &MarketTree, config: &OracleConfig) -> CaseResult {
    run_case(format!("bipolar/{name}"), BIPOLAR, None, Some((tree, None)), || {
        let (t, bad) = bipolar_grid(tree, config)?;
        let detail = format!("points={} agree={} inside={} boundary={}", t.points, t.agree, t.inside, t.boundary);
        Ok(match bad {
            Some(xi) => Outcome::Fail(format!("{detail} disagreement at claim {}", xi.replace('\n', " "))),
            None => Outcome::Pass(detail),
        })
    })
}

const VERTICES: &str = "dual polytope: simplex optimum = best enumerated vertex";

/// `dual_price` at the root against the best vertex of the dual polytope,
/// for each claim.
pub fn case_vertices(id: String, seed: Option<u64>, tree: &MarketTree, claims: &[Claim]) -> CaseResult {
    run_case(id, VERTICES, seed, Some((tree, claims.first())), || {
        let vertices = oracle_dual_vertices(tree, 0)?;
        for claim in claims {
            let best = vertices
                .iter()
                .map(|z| -> Result<Rational> {
                    let mut total = int(0);
                    for l in tree.leaves() {
                        let (w, x) = (&z.masses[&l], claim.payoff(l)?);
                        total += &w.bond * &x.bond + &w.stock * &x.stock;
                    }
                    Ok(total)
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .max();
            match (best, pricing::dual_price(tree, claim, 0)) {
                (None, Err(Error::NoConsistentPriceSystem { .. })) => {}
                (Some(b), Ok((v, _))) if b == v => {}
                (b, v) => {
                    return Ok(Outcome::Fail(format!(
                        "vertices={} best={} dual={}",
                        vertices.len(),
                        b.map_or("none".into(), |b| fmt(&b)),
                        match v {
                            Ok((v, _)) => fmt(&v),
                            Err(e) => e.to_string(),
                        }
                    )))
                }
            }
        }
        Ok(Outcome::Pass(format!("vertices={} claims={}", vertices.len(), claims.len())))
    })
}

pub fn case_vertices_seeded(seed: u64) -> Option<CaseResult> {
    let tree = corpus_tree(seed).ok()?;
    if tree.len() > 12 {
        return None;
    }
    let claims = [corpus_claim(&tree, seed), Claim::uniform(&tree, Position::new(int(0), int(1)))];
    Some(case_vertices(seed_id("vertices", seed), Some(seed), &tree, &claims))
}

const PASTING: &str = "pasting lemma: pasted system is strict and attains the pointwise maximum";

/// Two strict systems on a two-period tree, pasted at time 1 on the event
/// where the first has the larger conditional value.
pub fn case_pasting(seed: u64) -> CaseResult {
    let id = seed_id("pasting", seed);
    let tree = match tree_or_fail(id.clone(), PASTING, seed, build_random_depth(seed, 2, 3, &ratio(1, 10))) {
        Ok(t) => t,
        Err(r) => return r,
    };
    let claim = random_claim(&tree, seed);
    run_case(id, PASTING, Some(seed), Some((&tree, Some(&claim))), || {
        let z = match cps::find_cps(&tree, 0)? {
            CpsSearch::Found { system, .. } => system,
            CpsSearch::NotFound { .. } => return Ok(Outcome::Skip("no strict price system".into())),
        };
        let (_, optimum) = pricing::dual_price(&tree, &claim, 0)?;
        let zbar = optimum.blend(&z, &ratio(1, 2))?;
        if !oracle_is_cps(&tree, &z, true) || !oracle_is_cps(&tree, &zbar, true) {
            return Ok(Outcome::Fail("input systems are not strict".into()));
        }
        let event = cps::argmax_event(&tree, &z, &zbar, &claim, 1)?;
        let pasted = cps::paste_cps(&tree, &z, &zbar, 1, &event)?;
        if !oracle_is_cps(&tree, &pasted, true) {
            return Ok(Outcome::Fail(format!("pasted system is not strict (event {event:?})")));
        }
        for m in tree.nodes_at(1) {
            let a = oracle_conditional_value(&tree, &z, &claim, m)?;
            let b = oracle_conditional_value(&tree, &zbar, &claim, m)?;
            let p = oracle_conditional_value(&tree, &pasted, &claim, m)?;
            if p != a.clone().max(b.clone()) {
                return Ok(Outcome::Fail(format!("node {m}: pasted={} z={} zbar={}", fmt(&p), fmt(&a), fmt(&b))));
            }
        }
        Ok(Outcome::Pass(format!("slice={} event={}", tree.nodes_at(1).len(), event.len())))
    })
}

const SCALING: &str = "scaling: μ·shadow is strict with deviation ≤ (1+λ)S·2/(k+1)";

/// Scaling a strict system for cost level `1/k` by `μ = (1+λ)/(1+1/k)`
/// gives a strict system for `λ` within the deviation bound. When the
/// system found at `1/k` scales outside the `λ` band (possible for
/// `1/k > λ`), the source is taken as a strict `λ` system divided by `μ`.
pub fn case_scaling(id: String, seed: Option<u64>, tree: &MarketTree, k: i64) -> CaseResult {
    run_case(id, SCALING, seed, Some((tree, None)), || {
        let lambda = tree.lambda().clone();
        let small = ratio(1, k);
        let small_tree = tree.with_lambda(small.clone())?;
        let mu = (Rational::one() + &lambda) / (Rational::one() + &small);
        let Some(first) = cps::find_cps(&small_tree, 0)?.system().cloned() else {
            return Ok(Outcome::Skip("no strict price system at 1/k".into()));
        };
        let (scaled, source) = match cps::scale_cps(tree, &first, &small, &lambda) {
            Ok(s) => (s, "find-cps"),
            Err(Error::InvalidPriceSystem(_)) => {
                let Some(target) = cps::find_cps(tree, 0)?.system().cloned() else {
                    return Ok(Outcome::Skip("no strict price system at λ".into()));
                };
                let source = PriceSystem {
                    start_time: target.start_time,
                    masses: target.masses.iter().map(|(&n, w)| (n, Position::new(w.bond.clone(), &w.stock / &mu))).collect(),
                };
                if !oracle_is_cps(&small_tree, &source, true) {
                    return Ok(Outcome::Fail("rescaled source is not strict at 1/k".into()));
                }
                (cps::scale_cps(tree, &source, &small, &lambda)?, "rescaled")
            }
            Err(e) => return Err(e),
        };
        if !oracle_is_cps(tree, &scaled, true) {
            return Ok(Outcome::Fail(format!("scaled system ({source}) is not strict")));
        }
        let one_plus = Rational::one() + &lambda;
        for (&n, w) in &scaled.masses {
            let shadow = &w.stock / &w.bond;
            let ask = &one_plus * tree.price(n);
            let deviation = (&ask - &shadow).abs();
            let bound = &ask * ratio(2, k + 1);
            if deviation > bound {
                return Ok(Outcome::Fail(format!("node {n}: deviation {} > {}", fmt(&deviation), fmt(&bound))));
            }
        }
        Ok(Outcome::Pass(format!("k={k} mu={} source={source}", fmt(&mu))))
    })
}

pub const SCALING_K: [i64; 4] = [2, 5, 10, 100];

pub fn case_scaling_seeded(seed: u64, k: i64) -> CaseResult {
    let id = format!("{}/k{k:03}", seed_id("scaling", seed));
    match tree_or_fail(id.clone(), SCALING, seed, build_random(seed, 3, 3, &ratio(1, 5))) {
        Ok(tree) => case_scaling(id, Some(seed), &tree, k),
        Err(r) => r,
    }
}

const EXISTENCE: &str = "price-system existence: strict system or verified certificate";

pub fn case_find_cps_t1() -> CaseResult {
    let tree = t1();
    run_case("find-cps/t1".into(), EXISTENCE, None, Some((&tree, None)), || match cps::find_cps(&tree, 0)? {
        CpsSearch::Found { system, margin } => Ok(check(
            margin.is_positive() && oracle_is_cps(&tree, &system, true),
            format!("margin={}", fmt(&margin)),
        )),
        CpsSearch::NotFound { .. } => Ok(Outcome::Fail("no system found on T1".into())),
    })
}

pub fn case_find_cps_ta() -> CaseResult {
    let tree = ta();
    run_case("find-cps/ta".into(), EXISTENCE, None, Some((&tree, None)), || match cps::find_cps(&tree, 0)? {
        CpsSearch::Found { .. } => Ok(Outcome::Fail("system found on an arbitrage tree".into())),
        CpsSearch::NotFound { problem, outcome } => {
            let farkas = match &outcome.certificate {
                Some(lp::Certificate::Farkas(y)) => lp::farkas_is_valid(&problem, y),
                _ => false,
            };
            let verified = outcome.status == LpStatus::Infeasible && lp::check_solution(&problem, &outcome);
            let empty = oracle_dual_vertices(&tree, 0)?.is_empty();
            Ok(check(
                farkas && verified && empty,
                format!("certificate_valid={farkas} check_solution={verified} oracle_empty={empty}"),
            ))
        }
    })
}

const LP_CORE: &str = "LP core: solutions and certificates verify exactly";

pub fn case_lp_random(seed: u64) -> CaseResult {
    run_case(seed_id("lp", seed), LP_CORE, Some(seed), None, || {
        let p = samples::random_solvable(seed);
        let o = lp::solve(&p)?;
        Ok(check(
            o.status == LpStatus::Optimal && lp::check_solution(&p, &o),
            format!("vars={} rows={} pivots={} status={:?}", p.num_vars, p.constraints.len(), o.pivots, o.status),
        ))
    })
}

/// Beale's and Kuhn's cycling examples plus a degenerate two-variable LP
/// checked against vertex enumeration.
pub fn case_lp_cycling() -> CaseResult {
    run_case("lp/cycling".into(), LP_CORE, None, None, || {
        let mut details = Vec::new();
        for (name, p) in [("beale", samples::beale()), ("kuhn", samples::kuhn())] {
            let o = lp::solve(&p)?;
            if o.status != LpStatus::Optimal || !lp::check_solution(&p, &o) {
                return Ok(Outcome::Fail(format!("{name}: status {:?}", o.status)));
            }
            details.push(format!("{name}={}", fmt(o.value.as_ref().expect("optimal value"))));
        }
        let mut p = LpProblem::new(2, Sense::Minimize);
        p.set_objective(0, int(1));
        p.set_objective(1, int(1));
        p.add_constraint(vec![(0, int(1)), (1, int(1))], Relation::Ge, int(1));
        p.add_constraint(vec![(0, int(1)), (1, int(1))], Relation::Ge, int(1));
        let o = lp::solve(&p)?;
        let rows = [[int(1), int(1), int(1)], [int(1), int(1), int(1)], [int(1), int(0), int(0)], [int(0), int(1), int(0)]];
        let expected = oracle_lp_2d(&rows, &[int(1), int(1)]);
        if o.value != expected || !lp::check_solution(&p, &o) {
            return Ok(Outcome::Fail(format!("degenerate: {:?} vs oracle {:?}", o.value, expected)));
        }
        details.push(format!("degenerate={}", fmt(o.value.as_ref().expect("optimal value"))));
        Ok(Outcome::Pass(details.join(" ")))
    })
}

const MONOTONE: &str = "monotonicity: price nondecreasing in λ, frictionless limit at λ = 0";

pub const MONOTONE_LAMBDAS: [(i64, i64); 4] = [(0, 1), (1, 100), (1, 10), (1, 5)];

/// Primal prices over `λ ∈ {0, 1/100, 1/10, 1/5}`; on binomial trees the
/// `λ = 0` price must equal the replication price.
pub fn case_monotone(id: String, seed: Option<u64>, tree: &MarketTree, claim: &Claim) -> CaseResult {
    run_case(id, MONOTONE, seed, Some((tree, Some(claim))), || {
        let mut prices = Vec::new();
        for (n, d) in MONOTONE_LAMBDAS {
            let (p, _) = pricing::primal_price(&tree.with_lambda(ratio(n, d))?, claim, 0)?;
            prices.push(p);
        }
        let listed = prices.iter().map(fmt).collect::<Vec<_>>().join(" ");
        if prices.windows(2).any(|w| w[0] > w[1]) {
            return Ok(Outcome::Fail(format!("prices={listed}")));
        }
        match oracle_binomial_price(&tree.with_lambda(int(0))?, claim, 0) {
            Ok(v) if v != prices[0] => Ok(Outcome::Fail(format!("prices={listed} frictionless oracle={}", fmt(&v)))),
            Ok(v) => Ok(Outcome::Pass(format!("prices={listed} frictionless={}", fmt(&v)))),
            Err(_) => Ok(Outcome::Pass(format!("prices={listed}"))),
        }
    })
}

pub fn case_monotone_seeded(seed: u64) -> CaseResult {
    let id = seed_id("monotone", seed);
    let tree = if seed.is_multiple_of(2) { corpus_tree(seed) } else { binomial_from_seed(seed, &ratio(1, 10)) };
    match tree_or_fail(id.clone(), MONOTONE, seed, tree) {
        Ok(tree) => {
            let claim = random_claim(&tree, seed);
            case_monotone(id, Some(seed), &tree, &claim)
        }
        Err(r) => r,
    }
}

const STOPPING: &str = "admissibility: node-wise bound = bound over all stopping times";

/// Minimum liquidation value of the hedge over nodes equals the minimum over
/// all stopping times of the per-cut minimum (trees of at most 15 nodes).
pub fn case_stopping(seed: u64) -> Option<CaseResult> {
    let tree = corpus_tree(seed).ok()?;
    if tree.len() > 15 {
        return None;
    }
    let claim = corpus_claim(&tree, seed);
    Some(run_case(seed_id("stopping", seed), STOPPING, Some(seed), Some((&tree, Some(&claim))), || {
        let (_, strategy) = pricing::primal_price(&tree, &claim, 0)?;
        let values: BTreeMap<NodeId, Rational> = strategy
            .holdings
            .iter()
            .map(|(&n, h)| {
                let (bid, ask) = band(&tree, n);
                (n, (&h.bond + &bid * &h.stock).min(&h.bond + &ask * &h.stock))
            })
            .collect();
        let node_min = values.values().min().cloned().unwrap_or_default();
        let cuts = tree.enumerate_stopping_times(0);
        let cut_min = cuts
            .iter()
            .map(|c| c.nodes.iter().map(|n| values[n].clone()).min().unwrap_or_default())
            .min()
            .unwrap_or_default();
        let bound = BTreeMap::from([(0, (-node_min.clone()).max(int(0)))]);
        let admissible = strategies::check_admissible_numeraire_based(&tree, &strategy, &bound)?;
        Ok(check(
            node_min == cut_min && admissible,
            format!("cuts={} node_min={} cut_min={}", cuts.len(), fmt(&node_min), fmt(&cut_min)),
        ))
    }))
}

const DERIVED: &str = "worked example recomputed by an oracle";

fn derived(name: &str, tree: &MarketTree, body: impl FnOnce() -> Result<Outcome>) -> CaseResult {
    run_case(format!("derived/{name}"), DERIVED, None, Some((tree, None)), body)
}

/// The hand-checkable examples on T1 and TA.
pub fn derived_cases() -> Vec<CaseResult> {
    let tree = t1();
    let stock = Claim::uniform(&tree, Position::new(int(0), int(1)));
    let call = Claim::cash_settled(&tree, |s| (s - int(100)).max(int(0)));
    let mut out = Vec::new();

    out.push(derived("t1-stock-price", &tree, || {
        let emm = oracle_binomial_emm(&tree, 0)?;
        let expected = (Rational::one() + tree.lambda()) * tree.price(0);
        let frictionless_ok = oracle_is_cps(&tree.with_lambda(int(0))?, &emm, true);
        let (p, _) = pricing::primal_price(&tree, &stock, 0)?;
        let (d, _) = pricing::dual_price(&tree, &stock, 0)?;
        Ok(check(
            frictionless_ok && p == expected && d == expected,
            format!("oracle={} primal={} dual={}", fmt(&expected), fmt(&p), fmt(&d)),
        ))
    }));
    out.push(derived("t1-price-process", &tree, || {
        let f = pricing::price_process(&tree, &stock)?;
        let expected: BTreeMap<NodeId, Rational> =
            (0..tree.len()).map(|n| (n, (Rational::one() + tree.lambda()) * tree.price(n))).collect();
        Ok(check(f == expected, format!("F={:?}", f.values().map(fmt).collect::<Vec<_>>())))
    }));
    out.push(derived("t1-frictionless-call", &tree, || {
        let flat = tree.with_lambda(int(0))?;
        let expected = oracle_binomial_price(&flat, &call, 0)?;
        let (p, _) = pricing::primal_price(&flat, &call, 0)?;
        let (d, _) = pricing::dual_price(&flat, &call, 0)?;
        Ok(check(
            expected == ratio(100, 3) && p == expected && d == expected,
            format!("oracle={} primal={} dual={}", fmt(&expected), fmt(&p), fmt(&d)),
        ))
    }));
    out.push(derived("t1-emm", &tree, || {
        let emm = oracle_binomial_emm(&tree, 0)?;
        let q = &emm.masses[&1].bond;
        let strict = cps::validate_cps(&tree, &emm)? == CpsValidity::Strict;
        Ok(check(*q == ratio(1, 3) && strict && oracle_is_cps(&tree, &emm, true), format!("q={}", fmt(q))))
    }));
    out.push(derived("t1-hedge", &tree, || {
        let cases = [
            (&stock, Position::new(int(110), int(0)), Mode::NumeraireBased, true),
            (&stock, Position::new(int(109), int(0)), Mode::NumeraireBased, false),
            (&stock, Position::new(int(110), int(0)), Mode::NumeraireFree, true),
        ];
        let zero = Claim::zero(&tree);
        let free = (&zero, Position::new(int(-90), int(1)), Mode::NumeraireFree, true);
        for (claim, initial, mode, expected) in cases.into_iter().chain([free]) {
            let net = Claim::new(claim.payoffs.iter().map(|(&l, x)| (l, x - &initial)).collect());
            let oracle = oracle_one_period_membership(&tree, &net)?;
            let h = pricing::check_hedgeable(&tree, claim, 0, &initial, mode)?;
            if oracle != expected || h.primal_feasible != expected || h.dual_ok != expected {
                return Ok(Outcome::Fail(format!(
                    "initial=({}, {}) {mode}: oracle={oracle} primal={} dual={}",
                    fmt(&initial.bond),
                    fmt(&initial.stock),
                    h.primal_feasible,
                    h.dual_ok
                )));
            }
        }
        Ok(Outcome::Pass("4 instances".into()))
    }));
    out.push(derived("t1-membership", &tree, || {
        for (bond, stock, expected) in [(-110, 1, true), (1, 0, false), (90, -1, true), (0, 0, true)] {
            let xi = Claim::uniform(&tree, Position::new(int(bond), int(stock)));
            let oracle = oracle_one_period_membership(&tree, &xi)?;
            let lp = pricing::bipolar_membership(&tree, &xi, 0)?;
            if oracle != expected || lp.in_a != expected {
                return Ok(Outcome::Fail(format!("xi=({bond}, {stock}): oracle={oracle} lp={}", lp.in_a)));
            }
        }
        Ok(Outcome::Pass("4 claims".into()))
    }));
    out.push(derived("t1-vertices", &tree, || {
        let vertices = oracle_dual_vertices(&tree, 0)?;
        // corners: root shadow R, leaf shadows c_u, c_d, up mass (R − c_d)/(c_u − c_d)
        let mut corners = BTreeSet::new();
        for r in [90, 110] {
            for cu in [180, 220] {
                for cd in [45, 55] {
                    let q = ratio(r - cd, cu - cd);
                    let qd = Rational::one() - &q;
                    corners.insert(vec![&q * int(cu), &qd * int(cd), q, qd]);
                }
            }
        }
        let found: BTreeSet<Vec<Rational>> = vertices
            .iter()
            .map(|z| vec![z.masses[&1].stock.clone(), z.masses[&2].stock.clone(), z.masses[&1].bond.clone(), z.masses[&2].bond.clone()])
            .collect();
        let pair = |z: &PriceSystem, c: &Claim| -> Rational {
            tree.leaves().iter().map(|l| z.masses[l].dot(c.payoff(*l).expect("leaf payoff"))).sum()
        };
        let best = vertices.iter().map(|z| pair(z, &stock)).max();
        let cash = Claim::uniform(&tree, Position::new(int(1), int(0)));
        let all_one = vertices.iter().all(|z| pair(z, &cash) == int(1));
        Ok(check(
            found == corners && vertices.len() == 8 && best == Some(int(110)) && all_one,
            format!("vertices={} best={}", vertices.len(), best.map_or("none".into(), |b| fmt(&b))),
        ))
    }));
    let arb = ta();
    out.push(derived("ta-polytope-empty", &arb, || {
        let vertices = oracle_dual_vertices(&arb, 0)?;
        Ok(check(vertices.is_empty(), format!("vertices={}", vertices.len())))
    }));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault: Option<Fault>,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
    pub cases: Vec<CaseResult>,
}

impl SuiteReport {
    pub fn from_cases(config: &OracleConfig, mut cases: Vec<CaseResult>) -> Self {
        cases.sort_by(|a, b| a.id.cmp(&b.id));
        let count = |s| cases.iter().filter(|c| c.status == s).count();
        SuiteReport {
            seeds: config.seeds.clone(),
            fault: config.fault,
            passed: count(CaseStatus::Pass),
            failed: count(CaseStatus::Fail),
            skipped: count(CaseStatus::Skip),
            cases,
        }
    }

    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }

    pub fn failures(&self) -> impl Iterator<Item = &CaseResult> {
        self.cases.iter().filter(|c| c.status == CaseStatus::Fail)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "suite: {} cases, {} passed, {} failed, {} skipped",
            self.cases.len(),
            self.passed,
            self.failed,
            self.skipped
        );
        if let Some(f) = self.fault {
            let _ = writeln!(out, "fault injected: {}", serde_json::to_value(f).expect("fault serializes"));
        }
        for c in &self.cases {
            let seed = c.seed.map(|s| format!(" seed={s}")).unwrap_or_default();
            let _ = writeln!(out, "{} {} [{}]{seed} {}", c.status.label(), c.id, c.theorem, c.detail);
            if let Some(dump) = &c.counterexample {
                let _ = writeln!(out, "    counterexample: {dump}");
            }
        }
        out
    }
}

/// Runs every invariant case. Cases run concurrently; the report is sorted
/// by case id, so it does not depend on scheduling.
pub fn run_suite(config: &OracleConfig) -> Result<SuiteReport> {
    config.validate()?;
    type Job<'a> = Box<dyn Fn() -> Vec<CaseResult> + Send + Sync + 'a>;
    let fault = config.fault;
    let mut jobs: Vec<Job> = vec![
        Box::new(derived_cases),
        Box::new(|| vec![case_find_cps_t1(), case_find_cps_ta(), case_lp_cycling()]),
        Box::new(|| vec![case_bipolar("t1", &t1(), config)]),
        Box::new(|| vec![case_bipolar("three-state", &three_state(), config)]),
        Box::new(|| {
            let tree = t1();
            vec![case_ask_formula("ask/t1".into(), None, &tree)]
        }),
        Box::new(|| {
            let tree = t1().with_lambda(ratio(1, 5)).expect("valid cost level");
            SCALING_K.iter().map(|&k| case_scaling(format!("scaling/t1/k{k:03}"), None, &tree, k)).collect()
        }),
        Box::new(|| {
            let tree = t1();
            let call = Claim::cash_settled(&tree, |s| (s - int(100)).max(int(0)));
            vec![case_monotone("monotone/t1-call".into(), None, &tree, &call)]
        }),
        Box::new(|| {
            let tree = three_state();
            let claims = [random_claim(&tree, 7), Claim::uniform(&tree, Position::new(int(0), int(1)))];
            vec![
                case_vertices("vertices/t1".into(), None, &t1(), &[random_claim(&t1(), 7)]),
                case_vertices("vertices/three-state".into(), None, &tree, &claims),
            ]
        }),
    ];
    for &seed in &config.seeds {
        jobs.push(Box::new(move || vec![case_lp_random(seed)]));
        jobs.push(Box::new(move || vec![case_duality(seed, fault)]));
        jobs.push(Box::new(move || vec![case_hedge(seed, Mode::NumeraireBased)]));
        jobs.push(Box::new(move || vec![case_hedge(seed, Mode::NumeraireFree)]));
        jobs.push(Box::new(move || vec![case_time_independence(seed)]));
        jobs.push(Box::new(move || vec![case_ask_seeded(seed)]));
        jobs.push(Box::new(move || vec![case_pasting(seed)]));
        jobs.push(Box::new(move || SCALING_K.iter().map(|&k| case_scaling_seeded(seed, k)).collect()));
        jobs.push(Box::new(move || vec![case_monotone_seeded(seed)]));
        jobs.push(Box::new(move || case_vertices_seeded(seed).into_iter().chain(case_stopping(seed)).collect()));
    }
    let cases: Vec<CaseResult> = pricing::with_pool(|| jobs.par_iter().flat_map_iter(|job| job()).collect());
    Ok(SuiteReport::from_cases(config, cases))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership_oracle_examples() {
        let tree = t1();
        for (bond, stock, expected) in [(-110, 1, true), (1, 0, false), (90, -1, true), (0, 0, true), (-109, 1, false)] {
            let xi = Claim::uniform(&tree, Position::new(int(bond), int(stock)));
            assert_eq!(oracle_one_period_membership(&tree, &xi).unwrap(), expected, "({bond}, {stock})");
        }
        let two_period = build_binomial(2, &int(100), &int(2), &ratio(1, 2), &ratio(1, 2), &ratio(1, 10)).unwrap();
        assert!(oracle_one_period_membership(&two_period, &Claim::zero(&two_period)).is_err());
    }

    #[test]
    fn vertex_oracle_on_t1_and_ta() {
        let v = oracle_dual_vertices(&t1(), 0).unwrap();
        assert_eq!(v.len(), 8);
        assert!(v.iter().all(|z| oracle_is_cps(&t1(), z, false)));
        assert!(oracle_dual_vertices(&ta(), 0).unwrap().is_empty());
    }

    #[test]
    fn binomial_oracle_call() {
        let tree = t1().with_lambda(int(0)).unwrap();
        let call = Claim::cash_settled(&tree, |s| (s - int(100)).max(int(0)));
        assert_eq!(oracle_binomial_price(&tree, &call, 0).unwrap(), ratio(100, 3));
    }

    #[test]
    fn derived_examples_pass() {
        for c in derived_cases() {
            assert!(c.passed(), "{c:?}");
        }
    }

    #[test]
    fn small_suite_passes_and_is_deterministic() {
        let config = OracleConfig { grid_steps: 5, ..OracleConfig::new(vec![1, 2, 3]) };
        let a = run_suite(&config).unwrap();
        assert!(a.all_passed(), "{}", a.to_text());
        let b = run_suite(&config).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(SuiteReport::from_json(&a.to_json()).unwrap(), a);
    }

    #[test]
    fn injected_fault_fails_only_duality() {
        let config = OracleConfig { grid_steps: 3, fault: Some(Fault::CorruptBand), ..OracleConfig::new(vec![1, 2, 3, 4]) };
        let report = run_suite(&config).unwrap();
        assert!(report.failed > 0);
        assert!(report.failures().all(|c| c.id.starts_with("duality/")), "{}", report.to_text());
    }
}
