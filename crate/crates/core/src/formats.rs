//! File formats: tree/claim JSON, price-system JSON, price-report JSON,
//! strategy CSV and LP certificate JSON. Every writer has a reader returning
//! an equal value.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::cones::Position;
use crate::cps::PriceSystem;
use crate::error::{Error, Result};
use crate::lp::{Bounds, Constraint, LpProblem, Relation, Sense};
use crate::market_tree::{Claim, MarketTree, Node, NodeId};
use crate::pricing::{PriceReport, Strictness};
use crate::rational::{self, Rational, RationalText};
use crate::strategies::{Strategy, Trade};

#[derive(Serialize, Deserialize)]
struct NodeJson {
    id: NodeId,
    parent: Option<NodeId>,
    time: usize,
    price: RationalText,
    prob: RationalText,
}

#[derive(Serialize, Deserialize)]
struct PairJson {
    x1: RationalText,
    x2: RationalText,
}

#[derive(Serialize, Deserialize)]
struct MassJson {
    w1: RationalText,
    w2: RationalText,
}

#[derive(Serialize, Deserialize)]
struct TreeJson {
    lambda: RationalText,
    nodes: Vec<NodeJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    claim: Option<BTreeMap<NodeId, PairJson>>,
}

fn claim_json(claim: &Claim) -> BTreeMap<NodeId, PairJson> {
    claim
        .payoffs
        .iter()
        .map(|(&n, p)| (n, PairJson { x1: p.bond.clone().into(), x2: p.stock.clone().into() }))
        .collect()
}

fn claim_from(map: BTreeMap<NodeId, PairJson>) -> Claim {
    Claim::new(map.into_iter().map(|(n, p)| (n, Position::new(p.x1.0, p.x2.0))).collect())
}

pub fn tree_to_json(tree: &MarketTree, claim: Option<&Claim>) -> String {
    let doc = TreeJson {
        lambda: tree.lambda().clone().into(),
        nodes: tree
            .nodes()
            .iter()
            .map(|n| NodeJson {
                id: n.id,
                parent: n.parent,
                time: n.time,
                price: n.price.clone().into(),
                prob: n.prob.clone().into(),
            })
            .collect(),
        claim: claim.map(claim_json),
    };
    serde_json::to_string_pretty(&doc).expect("tree serialises")
}

/// Parses and validates a tree file; the claim block, if present, must cover
/// exactly the leaves.
pub fn tree_from_json(text: &str) -> Result<(MarketTree, Option<Claim>)> {
    let doc: TreeJson = serde_json::from_str(text)?;
    let nodes = doc
        .nodes
        .into_iter()
        .map(|n| Node { id: n.id, parent: n.parent, time: n.time, price: n.price.0, prob: n.prob.0 })
        .collect();
    let tree = MarketTree::new(nodes, doc.lambda.0)?;
    let claim = doc.claim.map(claim_from);
    if let Some(c) = &claim {
        c.validate(&tree)?;
    }
    Ok((tree, claim))
}

pub fn claim_to_json(claim: &Claim) -> String {
    serde_json::to_string_pretty(&claim_json(claim)).expect("claim serialises")
}

/// Accepts the bare leaf map or a document with a `claim` field.
pub fn claim_from_json(text: &str) -> Result<Claim> {
    let mut doc: serde_json::Value = serde_json::from_str(text)?;
    if let Some(inner) = doc.get_mut("claim") {
        doc = inner.take();
    }
    Ok(claim_from(serde_json::from_value(doc)?))
}

#[derive(Serialize, Deserialize)]
struct CpsJson {
    start_time: usize,
    masses: BTreeMap<NodeId, MassJson>,
}

fn cps_json(z: &PriceSystem) -> CpsJson {
    CpsJson {
        start_time: z.start_time,
        masses: z
            .masses
            .iter()
            .map(|(&n, w)| (n, MassJson { w1: w.bond.clone().into(), w2: w.stock.clone().into() }))
            .collect(),
    }
}

fn cps_from(doc: CpsJson) -> PriceSystem {
    PriceSystem::new(doc.start_time, doc.masses.into_iter().map(|(n, m)| (n, Position::new(m.w1.0, m.w2.0))).collect())
}

pub fn cps_to_json(z: &PriceSystem) -> String {
    serde_json::to_string_pretty(&cps_json(z)).expect("price system serialises")
}

pub fn cps_from_json(text: &str) -> Result<PriceSystem> {
    Ok(cps_from(serde_json::from_str(text)?))
}

#[derive(Serialize, Deserialize)]
struct StrategyRowJson {
    id: NodeId,
    phi1: RationalText,
    phi2: RationalText,
    buy: RationalText,
    sell: RationalText,
}

#[derive(Serialize, Deserialize)]
struct StrategyJson {
    initial: BTreeMap<NodeId, PairJson>,
    rows: Vec<StrategyRowJson>,
}

fn strategy_json(s: &Strategy) -> StrategyJson {
    StrategyJson {
        initial: s
            .initial
            .iter()
            .map(|(&n, p)| (n, PairJson { x1: p.bond.clone().into(), x2: p.stock.clone().into() }))
            .collect(),
        rows: s
            .holdings
            .iter()
            .map(|(&n, h)| {
                let t = s.trades.get(&n).cloned().unwrap_or_default();
                StrategyRowJson {
                    id: n,
                    phi1: h.bond.clone().into(),
                    phi2: h.stock.clone().into(),
                    buy: t.buy.into(),
                    sell: t.sell.into(),
                }
            })
            .collect(),
    }
}

fn strategy_from(doc: StrategyJson) -> Strategy {
    let mut s = Strategy {
        initial: doc.initial.into_iter().map(|(n, p)| (n, Position::new(p.x1.0, p.x2.0))).collect(),
        ..Strategy::default()
    };
    for r in doc.rows {
        s.holdings.insert(r.id, Position::new(r.phi1.0, r.phi2.0));
        s.trades.insert(r.id, Trade::new(r.buy.0, r.sell.0));
    }
    s
}

#[derive(Serialize, Deserialize)]
struct ReportJson {
    node: NodeId,
    primal: RationalText,
    dual: RationalText,
    gap: RationalText,
    strictness: String,
    #[serde(rename = "F")]
    f: BTreeMap<NodeId, RationalText>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    decimal: Option<DecimalJson>,
    dual_system: CpsJson,
    strategy: StrategyJson,
}

/// Rounded display copies; ignored when reading.
#[derive(Serialize, Deserialize)]
struct DecimalJson {
    primal: String,
    dual: String,
    #[serde(rename = "F")]
    f: BTreeMap<NodeId, String>,
}

pub fn report_to_json(report: &PriceReport, decimal: Option<usize>) -> String {
    let doc = ReportJson {
        node: report.start,
        primal: report.primal_value.clone().into(),
        dual: report.dual_value.clone().into(),
        gap: report.gap.clone().into(),
        strictness: report.strictness.as_str().to_owned(),
        f: report.per_node_f.iter().map(|(&n, v)| (n, v.clone().into())).collect(),
        decimal: decimal.map(|k| DecimalJson {
            primal: rational::to_decimal(&report.primal_value, k),
            dual: rational::to_decimal(&report.dual_value, k),
            f: report.per_node_f.iter().map(|(&n, v)| (n, rational::to_decimal(v, k))).collect(),
        }),
        dual_system: cps_json(&report.dual_system),
        strategy: strategy_json(&report.strategy),
    };
    serde_json::to_string_pretty(&doc).expect("report serialises")
}

pub fn report_from_json(text: &str) -> Result<PriceReport> {
    let doc: ReportJson = serde_json::from_str(text)?;
    Ok(PriceReport {
        start: doc.node,
        primal_value: doc.primal.0,
        dual_value: doc.dual.0,
        gap: doc.gap.0,
        strategy: strategy_from(doc.strategy),
        dual_system: cps_from(doc.dual_system),
        strictness: doc.strictness.parse::<Strictness>()?,
        per_node_f: doc.f.into_iter().map(|(n, v)| (n, v.0)).collect(),
    })
}

const STRATEGY_HEADER: &str = "id,time,phi1,phi2,buy,sell,vliq,init1,init2";

/// One row per node. `init1,init2` carry the endowment on entry nodes and
/// are empty elsewhere; with `decimal` a rounded `vliq_decimal` column is
/// appended.
pub fn strategy_to_csv(tree: &MarketTree, strat: &Strategy, decimal: Option<usize>) -> Result<String> {
    let mut out = String::from(STRATEGY_HEADER);
    if decimal.is_some() {
        out.push_str(",vliq_decimal");
    }
    out.push('\n');
    for (&n, h) in &strat.holdings {
        tree.node(n)?;
        let t = strat.trades.get(&n).cloned().unwrap_or_default();
        let v = tree.cone(n).liquidation_value(h);
        let (i1, i2) = match strat.initial.get(&n) {
            Some(p) => (rational::format(&p.bond), rational::format(&p.stock)),
            None => (String::new(), String::new()),
        };
        let _ = write!(
            out,
            "{n},{},{},{},{},{},{},{i1},{i2}",
            tree.time(n),
            rational::format(&h.bond),
            rational::format(&h.stock),
            rational::format(&t.buy),
            rational::format(&t.sell),
            rational::format(&v)
        );
        if let Some(k) = decimal {
            let _ = write!(out, ",{}", rational::to_decimal(&v, k));
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn strategy_from_csv(text: &str) -> Result<Strategy> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::InvalidStrategy("empty strategy file".into()))?;
    if !header.starts_with(STRATEGY_HEADER) {
        return Err(Error::InvalidStrategy(format!("unexpected strategy header {header:?}")));
    }
    let mut s = Strategy::default();
    for (k, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() < 9 {
            return Err(Error::InvalidStrategy(format!("row {} has {} cells", k + 1, cells.len())));
        }
        let id: NodeId =
            cells[0].parse().map_err(|_| Error::InvalidStrategy(format!("bad node id {:?} in row {}", cells[0], k + 1)))?;
        s.holdings.insert(id, Position::new(rational::parse(cells[2])?, rational::parse(cells[3])?));
        s.trades.insert(id, Trade::new(rational::parse(cells[4])?, rational::parse(cells[5])?));
        if !cells[7].is_empty() || !cells[8].is_empty() {
            s.initial.insert(id, Position::new(rational::parse(cells[7])?, rational::parse(cells[8])?));
        }
    }
    Ok(s)
}

#[derive(Serialize, Deserialize)]
struct RowJson {
    coeffs: Vec<(usize, RationalText)>,
    relation: String,
    rhs: RationalText,
}

#[derive(Serialize, Deserialize)]
struct BoundJson {
    lower: Option<RationalText>,
    upper: Option<RationalText>,
}

#[derive(Serialize, Deserialize)]
struct ProblemJson {
    sense: String,
    num_vars: usize,
    objective: Vec<RationalText>,
    constraints: Vec<RowJson>,
    bounds: Vec<BoundJson>,
}

#[derive(Serialize, Deserialize)]
struct CertificateJson {
    status: String,
    start: NodeId,
    farkas: Vec<RationalText>,
    problem: ProblemJson,
}

fn relation_str(r: Relation) -> &'static str {
    match r {
        Relation::Le => "<=",
        Relation::Eq => "=",
        Relation::Ge => ">=",
    }
}

/// Infeasibility certificate with the problem it refers to.
pub fn certificate_to_json(start: NodeId, problem: &LpProblem, farkas: &[Rational]) -> String {
    let doc = CertificateJson {
        status: "infeasible".into(),
        start,
        farkas: farkas.iter().cloned().map(RationalText).collect(),
        problem: ProblemJson {
            sense: match problem.sense {
                Sense::Minimize => "min".into(),
                Sense::Maximize => "max".into(),
            },
            num_vars: problem.num_vars,
            objective: problem.objective.iter().cloned().map(RationalText).collect(),
            constraints: problem
                .constraints
                .iter()
                .map(|c| RowJson {
                    coeffs: c.coeffs.iter().map(|(j, a)| (*j, RationalText(a.clone()))).collect(),
                    relation: relation_str(c.relation).into(),
                    rhs: c.rhs.clone().into(),
                })
                .collect(),
            bounds: problem
                .bounds
                .iter()
                .map(|b| BoundJson { lower: b.lower.clone().map(RationalText), upper: b.upper.clone().map(RationalText) })
                .collect(),
        },
    };
    serde_json::to_string_pretty(&doc).expect("certificate serialises")
}

pub fn certificate_from_json(text: &str) -> Result<(NodeId, LpProblem, Vec<Rational>)> {
    let doc: CertificateJson = serde_json::from_str(text)?;
    let sense = match doc.problem.sense.as_str() {
        "min" => Sense::Minimize,
        "max" => Sense::Maximize,
        other => return Err(Error::InvalidArgument(format!("unknown LP sense {other:?}"))),
    };
    let mut constraints = Vec::with_capacity(doc.problem.constraints.len());
    for row in doc.problem.constraints {
        let relation = match row.relation.as_str() {
            "<=" => Relation::Le,
            "=" => Relation::Eq,
            ">=" => Relation::Ge,
            other => return Err(Error::InvalidArgument(format!("unknown relation {other:?}"))),
        };
        constraints.push(Constraint {
            coeffs: row.coeffs.into_iter().map(|(j, a)| (j, a.0)).collect(),
            relation,
            rhs: row.rhs.0,
        });
    }
    let problem = LpProblem {
        num_vars: doc.problem.num_vars,
        sense,
        objective: doc.problem.objective.into_iter().map(|v| v.0).collect(),
        constraints,
        bounds: doc
            .problem
            .bounds
            .into_iter()
            .map(|b| Bounds { lower: b.lower.map(|v| v.0), upper: b.upper.map(|v| v.0) })
            .collect(),
    };
    problem.validate()?;
    Ok((doc.start, problem, doc.farkas.into_iter().map(|v| v.0).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cps::{find_cps, CpsSearch};
    use crate::lp;
    use crate::market_tree::{build_binomial, build_random, random_claim};
    use crate::pricing::price_report;
    use crate::rational::{int, ratio};
    use proptest::prelude::*;

    fn t1() -> MarketTree {
        build_binomial(1, &int(100), &int(2), &ratio(1, 2), &ratio(1, 2), &ratio(1, 10)).unwrap()
    }

    #[test]
    fn tree_file_example() {
        let text = r#"{"lambda": "1/10", "nodes": [
            {"id": 0, "parent": null, "time": 0, "price": "100", "prob": "1"},
            {"id": 1, "parent": 0, "time": 1, "price": "200", "prob": "1/2"},
            {"id": 2, "parent": 0, "time": 1, "price": "50", "prob": "1/2"}],
            "claim": {"1": {"x1": "0", "x2": "1"}, "2": {"x1": "0", "x2": "1"}}}"#;
        let (tree, claim) = tree_from_json(text).unwrap();
        assert_eq!(tree, t1());
        assert_eq!(claim.unwrap(), Claim::uniform(&tree, Position::new(int(0), int(1))));
        assert!(tree_from_json(&text.replace("\"1/10\"", "\"1/0\"")).is_err());
        assert!(tree_from_json(&text.replace("\"1\": {\"x1\"", "\"0\": {\"x1\"")).is_err());
    }

    #[test]
    fn claim_file_forms() {
        let tree = t1();
        let claim = Claim::uniform(&tree, Position::new(int(0), int(1)));
        assert_eq!(claim_from_json(&claim_to_json(&claim)).unwrap(), claim);
        let wrapped = format!("{{\"claim\": {}}}", claim_to_json(&claim));
        assert_eq!(claim_from_json(&wrapped).unwrap(), claim);
    }

    #[test]
    fn report_and_strategy_roundtrip() {
        let tree = t1();
        let claim = Claim::cash_settled(&tree, |s| (s - int(100)).max(int(0)));
        let report = price_report(&tree, &claim, 0).unwrap();
        assert_eq!(report_from_json(&report_to_json(&report, None)).unwrap(), report);
        assert_eq!(report_from_json(&report_to_json(&report, Some(3))).unwrap(), report);
        let csv = strategy_to_csv(&tree, &report.strategy, Some(2)).unwrap();
        assert!(csv.starts_with("id,time,phi1,phi2,buy,sell,vliq,init1,init2,vliq_decimal\n"));
        assert_eq!(strategy_from_csv(&csv).unwrap(), report.strategy);
    }

    #[test]
    fn certificate_roundtrip() {
        let ta = build_binomial(1, &int(100), &ratio(21, 10), &ratio(3, 2), &ratio(1, 2), &ratio(1, 10)).unwrap();
        let CpsSearch::NotFound { problem, outcome } = find_cps(&ta, 0).unwrap() else { panic!("TA has no CPS") };
        let Some(lp::Certificate::Farkas(y)) = &outcome.certificate else { panic!("Farkas expected") };
        let (start, p, y2) = certificate_from_json(&certificate_to_json(0, &problem, y)).unwrap();
        assert_eq!((start, &p, &y2), (0, problem.as_ref(), y));
        assert!(lp::farkas_is_valid(&p, &y2));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn random_trees_roundtrip(seed in 0u64..10_000, lam in 0i64..10) {
            let tree = build_random(seed, 3, 3, &ratio(lam, 10)).unwrap();
            let claim = random_claim(&tree, seed);
            let (back, c) = tree_from_json(&tree_to_json(&tree, Some(&claim))).unwrap();
            prop_assert_eq!(back, tree.clone());
            prop_assert_eq!(c, Some(claim.clone()));
            if let CpsSearch::Found { system, .. } = find_cps(&tree, 0).unwrap() {
                prop_assert_eq!(cps_from_json(&cps_to_json(&system)).unwrap(), system);
            }
        }
    }
}
