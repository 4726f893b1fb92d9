use conepricer_bench::{binomial, corpus};

#[test]
fn inputs_are_valid() {
    for (tree, claim) in corpus(3) {
        claim.validate(&tree).unwrap();
    }
    let (tree, claim) = binomial(3);
    assert_eq!(tree.horizon(), 3);
    claim.validate(&tree).unwrap();
}
