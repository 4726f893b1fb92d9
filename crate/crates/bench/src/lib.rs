//! Shared inputs for the benchmarks.

use conepricer::market_tree::build_binomial;
use conepricer::rational::{int, ratio};
use conepricer::verify::{corpus_claim, corpus_tree};
use conepricer::{Claim, MarketTree, Position};

/// Corpus trees with their random claims, for seeds `1..=n`.
pub fn corpus(n: u64) -> Vec<(MarketTree, Claim)> {
    (1..=n)
        .map(|seed| {
            let tree = corpus_tree(seed).expect("corpus tree");
            let claim = corpus_claim(&tree, seed);
            (tree, claim)
        })
        .collect()
}

/// Binomial tree of the given depth (S0 = 100, up 2, down 1/2, λ = 1/10)
/// with one share as the claim.
pub fn binomial(depth: usize) -> (MarketTree, Claim) {
    let tree = build_binomial(depth, &int(100), &int(2), &ratio(1, 2), &ratio(1, 2), &ratio(1, 10)).expect("binomial tree");
    let claim = Claim::uniform(&tree, Position::new(int(0), int(1)));
    (tree, claim)
}
