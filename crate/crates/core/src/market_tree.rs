//! Finite event-tree market model.
//!
//! A [`MarketTree`] is a rooted tree (never a recombining lattice) whose nodes
//! carry the risky asset's price and the conditional probability of moving to
//! that node from its parent. Filtration events at time `t` are the node sets
//! of the time-`t` slice, so conditional expectations and essential suprema
//! become per-node quantities.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cones::{Position, SolvencyCone};
use crate::error::{Error, Result};
use crate::rational::{self, int, ratio, Rational};

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub id: NodeId,
    pub parent: Option<NodeId>,
    pub time: usize,
    pub price: Rational,
    /// Conditional transition probability from the parent (1 at the root).
    pub prob: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarketTree {
    nodes: Vec<Node>,
    children: Vec<Vec<NodeId>>,
    lambda: Rational,
    horizon: usize,
}

impl MarketTree {
    /// Validates and assembles a tree. Node ids must be exactly `0..nodes.len()`
    /// (in any order); children are kept sorted by id.
    pub fn new(mut nodes: Vec<Node>, lambda: Rational) -> Result<Self> {
        if lambda.is_negative() || lambda >= Rational::one() {
            return Err(Error::InvalidTree(format!(
                "transaction cost level {} outside [0, 1)",
                rational::format(&lambda)
            )));
        }
        if nodes.is_empty() {
            return Err(Error::InvalidTree("tree has no nodes".into()));
        }
        nodes.sort_by_key(|n| n.id);
        for (expected, node) in nodes.iter().enumerate() {
            if node.id != expected {
                return Err(Error::InvalidTree(format!(
                    "node ids must be exactly 0..{} without gaps or duplicates",
                    nodes.len()
                )));
            }
        }
        let n = nodes.len();
        let mut children = vec![Vec::new(); n];
        let mut root = None;
        for node in &nodes {
            if !node.price.is_positive() {
                return Err(Error::InvalidTree(format!("node {} has non-positive price", node.id)));
            }
            match node.parent {
                None => {
                    if root.replace(node.id).is_some() {
                        return Err(Error::InvalidTree("more than one root".into()));
                    }
                    if node.time != 0 {
                        return Err(Error::InvalidTree("root must be at time 0".into()));
                    }
                    if !node.prob.is_one() {
                        return Err(Error::InvalidTree("root transition probability must be 1".into()));
                    }
                }
                Some(p) => {
                    let parent = nodes.get(p).ok_or(Error::InvalidTree(format!(
                        "node {} has unknown parent {p}",
                        node.id
                    )))?;
                    if node.time != parent.time + 1 {
                        return Err(Error::InvalidTree(format!(
                            "node {} at time {} but its parent is at time {}",
                            node.id, node.time, parent.time
                        )));
                    }
                    if !node.prob.is_positive() {
                        return Err(Error::InvalidTree(format!(
                            "node {} has non-positive transition probability",
                            node.id
                        )));
                    }
                    children[p].push(node.id);
                }
            }
        }
        let root = root.ok_or(Error::InvalidTree("no root node".into()))?;
        if root != 0 {
            return Err(Error::InvalidTree("the root must have id 0".into()));
        }
        // Times strictly increase along parent links, so every node reaches the root.
        let horizon = nodes.iter().map(|n| n.time).max().unwrap_or(0);
        if horizon < 1 {
            return Err(Error::InvalidTree("horizon must be at least 1".into()));
        }
        for (id, kids) in children.iter().enumerate() {
            if kids.is_empty() {
                if nodes[id].time != horizon {
                    return Err(Error::InvalidTree(format!(
                        "leaf {id} at time {} but horizon is {horizon}",
                        nodes[id].time
                    )));
                }
            } else {
                let total: Rational = kids.iter().map(|&c| nodes[c].prob.clone()).sum();
                if !total.is_one() {
                    return Err(Error::InvalidTree(format!(
                        "children of node {id} have probabilities summing to {}",
                        rational::format(&total)
                    )));
                }
            }
        }
        Ok(MarketTree { nodes, children, lambda, horizon })
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn lambda(&self) -> &Rational {
        &self.lambda
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> Result<&Node> {
        self.nodes.get(id).ok_or(Error::UnknownNode(id))
    }

    pub fn contains(&self, id: NodeId) -> bool {
        id < self.nodes.len()
    }

    pub fn price(&self, id: NodeId) -> &Rational {
        &self.nodes[id].price
    }

    pub fn time(&self, id: NodeId) -> usize {
        self.nodes[id].time
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes[id].parent
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.children[id]
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        self.children[id].is_empty()
    }

    /// Solvency cone parameters at a node.
    pub fn cone(&self, id: NodeId) -> SolvencyCone {
        SolvencyCone::new(self.nodes[id].price.clone(), self.lambda.clone())
    }

    /// Same topology, prices and probabilities with another cost level.
    pub fn with_lambda(&self, lambda: Rational) -> Result<MarketTree> {
        MarketTree::new(self.nodes.clone(), lambda)
    }

    /// Nodes of the subtree rooted at `id`, in preorder (so parents precede children).
    pub fn subtree(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(self.children[n].iter().rev());
        }
        out
    }

    pub fn leaves(&self) -> Vec<NodeId> {
        self.leaves_under(self.root())
    }

    pub fn leaves_under(&self, id: NodeId) -> Vec<NodeId> {
        self.subtree(id).into_iter().filter(|&n| self.is_leaf(n)).collect()
    }

    pub fn nodes_at(&self, time: usize) -> Vec<NodeId> {
        self.nodes.iter().filter(|n| n.time == time).map(|n| n.id).collect()
    }

    pub fn max_price(&self) -> Rational {
        self.nodes.iter().map(|n| n.price.clone()).max().unwrap_or_else(Rational::zero)
    }

    /// Root-to-node path, root first.
    pub fn path(&self, id: NodeId) -> Vec<NodeId> {
        let mut path = vec![id];
        let mut cur = id;
        while let Some(p) = self.nodes[cur].parent {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    /// The ancestor of `id` living at `time` (the node itself when times match).
    pub fn ancestor_at(&self, id: NodeId, time: usize) -> Option<NodeId> {
        let mut cur = id;
        if self.nodes[cur].time < time {
            return None;
        }
        while self.nodes[cur].time > time {
            cur = self.nodes[cur].parent?;
        }
        Some(cur)
    }

    pub fn is_ancestor_or_self(&self, ancestor: NodeId, id: NodeId) -> bool {
        self.ancestor_at(id, self.nodes[ancestor].time) == Some(ancestor)
    }

    /// P-measure of the node event: product of conditional probabilities along
    /// the root path.
    pub fn node_probability(&self, id: NodeId) -> Result<Rational> {
        self.node(id)?;
        Ok(self.path(id).iter().map(|&n| self.nodes[n].prob.clone()).product())
    }

    /// True iff `cut` is an antichain meeting every root-to-leaf path exactly once.
    pub fn validate_stopping_time(&self, cut: &StoppingTime) -> bool {
        if cut.nodes.iter().any(|&n| !self.contains(n)) {
            return false;
        }
        self.leaves().into_iter().all(|leaf| {
            self.path(leaf).iter().filter(|n| cut.nodes.contains(n)).count() == 1
        })
    }

    /// Every stopping time of the subtree at `id` (exponential; meant for small trees).
    pub fn enumerate_stopping_times(&self, id: NodeId) -> Vec<StoppingTime> {
        let mut cuts = vec![StoppingTime::from_nodes([id])];
        if self.is_leaf(id) {
            return cuts;
        }
        let mut combos: Vec<BTreeSet<NodeId>> = vec![BTreeSet::new()];
        for &child in &self.children[id] {
            let sub = self.enumerate_stopping_times(child);
            combos = combos
                .iter()
                .flat_map(|acc| {
                    sub.iter().map(move |cut| acc.iter().chain(cut.nodes.iter()).copied().collect())
                })
                .collect();
        }
        cuts.extend(combos.into_iter().map(|nodes| StoppingTime { nodes }));
        cuts
    }
}

/// A contingent claim: bond and stock units delivered at each leaf.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Claim {
    pub payoffs: BTreeMap<NodeId, Position>,
}

impl Claim {
    pub fn new(payoffs: BTreeMap<NodeId, Position>) -> Self {
        Claim { payoffs }
    }

    /// The same payoff at every leaf.
    pub fn uniform(tree: &MarketTree, payoff: Position) -> Self {
        Claim { payoffs: tree.leaves().into_iter().map(|l| (l, payoff.clone())).collect() }
    }

    pub fn zero(tree: &MarketTree) -> Self {
        Self::uniform(tree, Position::zero())
    }

    /// Cash-settled claim paying `f(S_leaf)` bond units.
    pub fn cash_settled(tree: &MarketTree, f: impl Fn(&Rational) -> Rational) -> Self {
        Claim {
            payoffs: tree
                .leaves()
                .into_iter()
                .map(|l| (l, Position::new(f(tree.price(l)), Rational::zero())))
                .collect(),
        }
    }

    pub fn payoff(&self, leaf: NodeId) -> Result<&Position> {
        self.payoffs
            .get(&leaf)
            .ok_or_else(|| Error::InvalidClaim(format!("no payoff for leaf {leaf}")))
    }

    /// Checks the claim is defined on exactly the leaf set of `tree`.
    pub fn validate(&self, tree: &MarketTree) -> Result<()> {
        let leaves: BTreeSet<NodeId> = tree.leaves().into_iter().collect();
        let keys: BTreeSet<NodeId> = self.payoffs.keys().copied().collect();
        if leaves != keys {
            return Err(Error::InvalidClaim(format!(
                "claim is defined on {keys:?} but the leaves are {leaves:?}"
            )));
        }
        Ok(())
    }

    /// Checks the claim covers every leaf of the subtree at `start`.
    pub fn covers_subtree(&self, tree: &MarketTree, start: NodeId) -> Result<()> {
        for leaf in tree.leaves_under(start) {
            self.payoff(leaf)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StoppingTime {
    pub nodes: BTreeSet<NodeId>,
}

impl StoppingTime {
    pub fn from_nodes(nodes: impl IntoIterator<Item = NodeId>) -> Self {
        StoppingTime { nodes: nodes.into_iter().collect() }
    }

    pub fn constant(tree: &MarketTree, time: usize) -> Self {
        Self::from_nodes(tree.nodes_at(time))
    }
}

/// Binomial tree (stored as a tree, not a lattice) of the given depth. Node
/// ids are assigned breadth-first with the up-move child first.
pub fn build_binomial(
    depth: usize,
    s0: &Rational,
    up: &Rational,
    down: &Rational,
    p_up: &Rational,
    lambda: &Rational,
) -> Result<MarketTree> {
    if depth < 1 {
        return Err(Error::InvalidArgument("binomial depth must be at least 1".into()));
    }
    if !s0.is_positive() {
        return Err(Error::InvalidArgument("initial price must be positive".into()));
    }
    if !down.is_positive() || up <= down {
        return Err(Error::InvalidArgument("factors must satisfy 0 < down < up".into()));
    }
    if !p_up.is_positive() || *p_up >= Rational::one() {
        return Err(Error::InvalidArgument("up probability must lie in (0, 1)".into()));
    }
    let p_down = Rational::one() - p_up;
    let mut nodes = vec![Node { id: 0, parent: None, time: 0, price: s0.clone(), prob: Rational::one() }];
    let mut frontier = vec![0];
    for t in 1..=depth {
        let mut next = Vec::with_capacity(frontier.len() * 2);
        for &parent in &frontier {
            let base = nodes[parent].price.clone();
            for (factor, prob) in [(up, p_up), (down, &p_down)] {
                let id = nodes.len();
                nodes.push(Node { id, parent: Some(parent), time: t, price: &base * factor, prob: prob.clone() });
                next.push(id);
            }
        }
        frontier = next;
    }
    MarketTree::new(nodes, lambda.clone())
}

/// Seeded random tree: depth uniform in `1..=max_depth`, each interior node
/// has `2..=max_branch` children. Every node has at least one child priced
/// above and one priced below it, so a frictionless martingale measure exists
/// on every subtree. Prices move by factors `k/10`; probabilities are random
/// integer weights normalised to one.
pub fn build_random(seed: u64, max_depth: usize, max_branch: usize, lambda: &Rational) -> Result<MarketTree> {
    if max_depth < 1 {
        return Err(Error::InvalidArgument("max_depth must be at least 1".into()));
    }
    if max_branch < 2 {
        return Err(Error::InvalidArgument("max_branch must be at least 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let depth = rng.gen_range(1..=max_depth);
    grow_random(&mut rng, depth, max_branch, lambda)
}

/// [`build_random`] with a fixed depth.
pub fn build_random_depth(seed: u64, depth: usize, max_branch: usize, lambda: &Rational) -> Result<MarketTree> {
    if depth < 1 {
        return Err(Error::InvalidArgument("depth must be at least 1".into()));
    }
    if max_branch < 2 {
        return Err(Error::InvalidArgument("max_branch must be at least 2".into()));
    }
    grow_random(&mut ChaCha8Rng::seed_from_u64(seed), depth, max_branch, lambda)
}

fn grow_random(rng: &mut ChaCha8Rng, depth: usize, max_branch: usize, lambda: &Rational) -> Result<MarketTree> {
    let s0 = int(rng.gen_range(5..=20) * 10);
    let mut nodes = vec![Node { id: 0, parent: None, time: 0, price: s0, prob: Rational::one() }];
    let mut frontier = vec![0];
    for t in 1..=depth {
        let mut next = Vec::new();
        for &parent in &frontier {
            let branch = rng.gen_range(2..=max_branch);
            let mut factors: Vec<i64> = Vec::with_capacity(branch);
            factors.push(rng.gen_range(11..=20));
            factors.push(rng.gen_range(5..=9));
            for _ in 2..branch {
                factors.push(rng.gen_range(5..=20));
            }
            // Fisher-Yates so the up/down children are not always first.
            for i in (1..factors.len()).rev() {
                let j = rng.gen_range(0..=i);
                factors.swap(i, j);
            }
            let weights: Vec<i64> = (0..branch).map(|_| rng.gen_range(1..=9)).collect();
            let total: i64 = weights.iter().sum();
            let base = nodes[parent].price.clone();
            for (factor, weight) in factors.into_iter().zip(weights) {
                let id = nodes.len();
                nodes.push(Node {
                    id,
                    parent: Some(parent),
                    time: t,
                    price: &base * ratio(factor, 10),
                    prob: ratio(weight, total),
                });
                next.push(id);
            }
        }
        frontier = next;
    }
    MarketTree::new(nodes, lambda.clone())
}

/// Seeded random claim: at each leaf `X¹` is a rational in
/// `[−10·max S, 10·max S]` and `X²` one in `[−10, 10]`, so every leg is
/// worth at most ten times the largest price.
pub fn random_claim(tree: &MarketTree, seed: u64) -> Claim {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = tree.max_price() * int(10);
    let mut draw = |scale: &Rational| {
        let den = rng.gen_range(1..=4i64);
        let num = rng.gen_range(-100 * den..=100 * den);
        scale * ratio(num, 100 * den)
    };
    let ten = int(10);
    Claim::new(tree.leaves().into_iter().map(|l| (l, Position::new(draw(&bound), draw(&ten)))).collect())
}
