use conepricer::cps::{find_cps, CpsSearch};
use conepricer::formats;
use conepricer::lp::Certificate;
use conepricer::pricing;
use conepricer::verify;

#[test]
fn tree_and_claim_roundtrip() {
    for seed in 1..=5 {
        let tree = verify::corpus_tree(seed).unwrap();
        let claim = verify::corpus_claim(&tree, seed);
        let text = formats::tree_to_json(&tree, Some(&claim));
        let (back, c) = formats::tree_from_json(&text).unwrap();
        assert_eq!(back, tree);
        assert_eq!(c.as_ref(), Some(&claim));
        assert_eq!(formats::claim_from_json(&formats::claim_to_json(&claim)).unwrap(), claim);
    }
}

#[test]
fn report_and_strategy_roundtrip() {
    let tree = verify::corpus_tree(2).unwrap();
    let claim = verify::corpus_claim(&tree, 2);
    let report = pricing::price_report(&tree, &claim, 0).unwrap();
    assert_eq!(formats::report_from_json(&formats::report_to_json(&report, Some(6))).unwrap(), report);
    let csv = formats::strategy_to_csv(&tree, &report.strategy, None).unwrap();
    assert_eq!(formats::strategy_from_csv(&csv).unwrap(), report.strategy);
}

#[test]
fn cps_and_certificate_roundtrip() {
    let t1 = verify::t1();
    let z = find_cps(&t1, 0).unwrap().system().cloned().unwrap();
    assert_eq!(formats::cps_from_json(&formats::cps_to_json(&z)).unwrap(), z);
    let CpsSearch::NotFound { problem, outcome } = find_cps(&verify::ta(), 0).unwrap() else {
        panic!("TA admits a system");
    };
    let Some(Certificate::Farkas(farkas)) = outcome.certificate else {
        panic!("no Farkas certificate");
    };
    let text = formats::certificate_to_json(0, &problem, &farkas);
    let (start, p, f) = formats::certificate_from_json(&text).unwrap();
    assert_eq!((start, &p, &f), (0, problem.as_ref(), &farkas));
}

#[test]
fn malformed_input_is_rejected() {
    assert!(formats::tree_from_json("{}").is_err());
    assert!(formats::tree_from_json("{\"lambda\": \"1/10\", \"nodes\": []}").is_err());
    assert!(formats::claim_from_json("not json").is_err());
    assert!(formats::cps_from_json("{\"start_time\": 0}").is_err());
}
