use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use conepricer::cps::{self, CpsSearch};
use conepricer::formats;
use conepricer::lp::Certificate;
use conepricer::market_tree::{build_binomial, build_random, build_random_depth, random_claim};
use conepricer::pricing::{self, Mode};
use conepricer::rational::{self, int};
use conepricer::verify::{self, Fault, OracleConfig};
use conepricer::{Claim, MarketTree, NodeId, Position, Rational};

#[derive(Parser)]
#[command(name = "conepricer", version, about = "Super-replication pricing under proportional transaction costs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a tree (optionally with a claim) and write it as JSON
    Gen(GenArgs),
    /// Primal and dual price at a node
    Price(PriceArgs),
    /// Dual price and an optimal price system
    Dual(DualArgs),
    /// Price process F(n) over the subtree of a node
    Fprocess(ProcessArgs),
    /// Search for a strict consistent price system
    FindCps(FindArgs),
    /// Paste two price systems at a time slice
    Paste(PasteArgs),
    /// Rescale a price system to another cost level
    Scale(ScaleArgs),
    /// Decide hedgeability from an initial position, primal and dual
    HedgeCheck(HedgeArgs),
    /// Membership of a claim in the cone of claims attainable from zero
    Bipolar(BipolarArgs),
    /// Run the invariant suite
    Verify(VerifyArgs),
}

fn parse_q(s: &str) -> Result<Rational, String> {
    rational::parse(s).map_err(|e| e.to_string())
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse().map_err(|e: conepricer::Error| e.to_string())
}

#[derive(Clone)]
struct Seeds(Vec<u64>);

fn parse_seeds(s: &str) -> Result<Seeds, String> {
    let bad = || format!("expected A..B or a single seed, got {s:?}");
    match s.split_once("..") {
        Some((a, b)) => {
            let a: u64 = a.trim().parse().map_err(|_| bad())?;
            let b: u64 = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
            if a > b {
                return Err(format!("empty seed range {s:?}"));
            }
            Ok(Seeds((a..=b).collect()))
        }
        None => Ok(Seeds(vec![s.trim().parse().map_err(|_| bad())?])),
    }
}

fn parse_position(s: &str) -> Result<Position, String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected BOND,STOCK, got {s:?}"))?;
    Ok(Position::new(parse_q(a.trim())?, parse_q(b.trim())?))
}

#[derive(Args)]
struct Input {
    /// Tree JSON file (may embed a claim)
    #[arg(long)]
    tree: PathBuf,
    /// Claim JSON file; overrides a claim embedded in the tree file
    #[arg(long)]
    claim: Option<PathBuf>,
    /// Override the tree's transaction-cost level
    #[arg(long, value_parser = parse_q)]
    lambda: Option<Rational>,
}

impl Input {
    fn load(&self) -> Result<(MarketTree, Option<Claim>), String> {
        let (mut tree, mut claim) = formats::tree_from_json(&read(&self.tree)?).map_err(|e| e.to_string())?;
        if let Some(l) = &self.lambda {
            tree = tree.with_lambda(l.clone()).map_err(|e| e.to_string())?;
        }
        if let Some(path) = &self.claim {
            let c = formats::claim_from_json(&read(path)?).map_err(|e| e.to_string())?;
            c.validate(&tree).map_err(|e| e.to_string())?;
            claim = Some(c);
        }
        Ok((tree, claim))
    }

    fn load_with_claim(&self) -> Result<(MarketTree, Claim), String> {
        match self.load()? {
            (tree, Some(claim)) => Ok((tree, claim)),
            (_, None) => Err("no claim: pass --claim or embed one in the tree file".into()),
        }
    }
}

#[derive(Clone, ValueEnum)]
enum Payoff {
    Stock,
    Random,
}

#[derive(Args)]
struct GenArgs {
    #[command(subcommand)]
    kind: GenKind,
    /// Embed a claim: one share, or a seeded random claim
    #[arg(long, global = true)]
    payoff: Option<Payoff>,
    /// Strike of a cash-settled call to embed instead
    #[arg(long, global = true, value_parser = parse_q, conflicts_with = "payoff")]
    call: Option<Rational>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum GenKind {
    /// Recombining-price binomial tree
    Binomial {
        #[arg(long)]
        depth: usize,
        #[arg(long, value_parser = parse_q, default_value = "100")]
        s0: Rational,
        #[arg(long, value_parser = parse_q, default_value = "2")]
        up: Rational,
        #[arg(long, value_parser = parse_q, default_value = "1/2")]
        down: Rational,
        #[arg(long, value_parser = parse_q, default_value = "1/2")]
        p: Rational,
        #[arg(long, value_parser = parse_q, default_value = "1/10")]
        lambda: Rational,
    },
    /// Seeded random tree
    Random {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        max_depth: usize,
        /// Fixed depth instead of a random one
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long, default_value_t = 3)]
        max_branch: usize,
        #[arg(long, value_parser = parse_q, default_value = "1/10")]
        lambda: Rational,
    },
}

#[derive(Args)]
struct PriceArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long, default_value_t = 0)]
    node: NodeId,
    /// Write the price report JSON here
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the hedging strategy CSV here
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Add rounded decimal values with this many places
    #[arg(long)]
    decimal: Option<usize>,
}

#[derive(Args)]
struct DualArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long, default_value_t = 0)]
    node: NodeId,
    /// Write the optimal price system JSON here
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    decimal: Option<usize>,
}

#[derive(Args)]
struct ProcessArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long, default_value_t = 0)]
    node: NodeId,
    /// Write an id,time,F CSV here
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    decimal: Option<usize>,
}

#[derive(Args)]
struct FindArgs {
    #[arg(long)]
    tree: PathBuf,
    #[arg(long, value_parser = parse_q)]
    lambda: Option<Rational>,
    #[arg(long, default_value_t = 0)]
    node: NodeId,
    /// Where to write the price system, or the certificate when none exists
    /// (default certificate.json)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PasteArgs {
    #[command(flatten)]
    input: Input,
    /// The two price systems z and zbar
    #[arg(long, num_args = 2, required = true)]
    cps: Vec<PathBuf>,
    /// Pasting time
    #[arg(long)]
    time: usize,
    /// Comma-separated time-t nodes taken from z (default: where z prices the claim at least as high)
    #[arg(long, value_delimiter = ',')]
    event: Option<Vec<NodeId>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScaleArgs {
    #[arg(long)]
    tree: PathBuf,
    #[arg(long)]
    cps: PathBuf,
    /// Cost level the input system is consistent for
    #[arg(long, value_parser = parse_q)]
    from: Rational,
    /// Target cost level (default: the tree's)
    #[arg(long, value_parser = parse_q)]
    lambda: Option<Rational>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct HedgeArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long, default_value_t = 0)]
    node: NodeId,
    /// Initial position BOND,STOCK
    #[arg(long, value_parser = parse_position, allow_hyphen_values = true)]
    initial: Position,
    #[arg(long, value_parser = parse_mode, default_value = "numeraire-based")]
    mode: Mode,
    /// Write the hedging strategy CSV here when one exists
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BipolarArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long, default_value_t = 0)]
    node: NodeId,
    /// Write the separating price system here on rejection
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, ValueEnum)]
enum FaultArg {
    CorruptBand,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_parser = parse_seeds, default_value = "1..10")]
    seeds: Seeds,
    /// Report JSON path; the text report goes next to it with a .txt extension
    #[arg(long, default_value = "suite_report.json")]
    out: PathBuf,
    #[arg(long, default_value_t = 21)]
    grid_steps: usize,
    #[arg(long, value_parser = parse_q)]
    grid_radius: Option<Rational>,
    /// Inject a fault to exercise the suite itself
    #[arg(long)]
    fault: Option<FaultArg>,
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<(), String> {
    fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), String> {
    match out {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
            Ok(())
        }
    }
}

fn show(v: &Rational, decimal: Option<usize>) -> String {
    match decimal {
        Some(k) => format!("{} ({})", rational::format(v), rational::to_decimal(v, k)),
        None => rational::format(v),
    }
}

fn core<T>(r: conepricer::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn gen(args: GenArgs) -> Result<(), String> {
    let tree = core(match args.kind {
        GenKind::Binomial { depth, s0, up, down, p, lambda } => build_binomial(depth, &s0, &up, &down, &p, &lambda),
        GenKind::Random { seed, max_depth, depth, max_branch, lambda } => match depth {
            Some(d) => build_random_depth(seed, d, max_branch, &lambda),
            None => build_random(seed, max_depth, max_branch, &lambda),
        },
    })?;
    let claim = match (&args.payoff, &args.call) {
        (Some(Payoff::Stock), _) => Some(Claim::uniform(&tree, Position::new(int(0), int(1)))),
        (Some(Payoff::Random), _) => Some(random_claim(&tree, tree.len() as u64)),
        (None, Some(k)) => Some(Claim::cash_settled(&tree, |s| (s - k).max(int(0)))),
        (None, None) => None,
    };
    emit(args.out.as_deref(), &formats::tree_to_json(&tree, claim.as_ref()))
}

fn price(args: PriceArgs) -> Result<(), String> {
    let (tree, claim) = args.input.load_with_claim()?;
    let report = core(pricing::price_report(&tree, &claim, args.node))?;
    let mut line = format!(
        "primal={} dual={} gap={}",
        rational::format(&report.primal_value),
        rational::format(&report.dual_value),
        rational::format(&report.gap)
    );
    if let Some(k) = args.decimal {
        let _ = write!(
            line,
            " primal_decimal={} dual_decimal={}",
            rational::to_decimal(&report.primal_value, k),
            rational::to_decimal(&report.dual_value, k)
        );
    }
    println!("{line}");
    println!("strictness={}", report.strictness.as_str());
    if let Some(p) = &args.out {
        write(p, &formats::report_to_json(&report, args.decimal))?;
    }
    if let Some(p) = &args.csv {
        write(p, &core(formats::strategy_to_csv(&tree, &report.strategy, args.decimal))?)?;
    }
    Ok(())
}

fn dual(args: DualArgs) -> Result<(), String> {
    let (tree, claim) = args.input.load_with_claim()?;
    let (value, system) = core(pricing::dual_price(&tree, &claim, args.node))?;
    let validity = core(cps::validate_cps(&tree, &system))?;
    println!("dual={} system={validity:?}", show(&value, args.decimal));
    if let Some(p) = &args.out {
        write(p, &formats::cps_to_json(&system))?;
    }
    Ok(())
}

fn fprocess(args: ProcessArgs) -> Result<(), String> {
    let (tree, claim) = args.input.load_with_claim()?;
    let f = core(pricing::price_process_from(&tree, &claim, args.node))?;
    let mut csv = String::from("id,time,F");
    if args.decimal.is_some() {
        csv.push_str(",F_decimal");
    }
    csv.push('\n');
    for (n, v) in &f {
        let _ = write!(csv, "{n},{},{}", tree.time(*n), rational::format(v));
        if let Some(k) = args.decimal {
            let _ = write!(csv, ",{}", rational::to_decimal(v, k));
        }
        csv.push('\n');
    }
    emit(args.out.as_deref(), &csv)
}

/// `Ok(false)` means no system exists (exit 1 after writing the certificate).
fn find_cps(args: FindArgs) -> Result<bool, String> {
    let (mut tree, _) = core(formats::tree_from_json(&read(&args.tree)?))?;
    if let Some(l) = args.lambda {
        tree = core(tree.with_lambda(l))?;
    }
    match core(cps::find_cps(&tree, args.node))? {
        CpsSearch::Found { system, margin } => {
            println!("strict price system found: margin={}", rational::format(&margin));
            if let Some(p) = &args.out {
                write(p, &formats::cps_to_json(&system))?;
            }
            Ok(true)
        }
        CpsSearch::NotFound { problem, outcome } => {
            let Some(Certificate::Farkas(y)) = &outcome.certificate else {
                return Err("solver returned no infeasibility certificate".into());
            };
            let path = args.out.unwrap_or_else(|| PathBuf::from("certificate.json"));
            write(&path, &formats::certificate_to_json(args.node, &problem, y))?;
            eprintln!("no consistent price system: infeasibility certificate written to {}", path.display());
            Ok(false)
        }
    }
}

fn paste(args: PasteArgs) -> Result<(), String> {
    let (tree, claim) = args.input.load()?;
    let z = core(formats::cps_from_json(&read(&args.cps[0])?))?;
    let zbar = core(formats::cps_from_json(&read(&args.cps[1])?))?;
    let event: BTreeSet<NodeId> = match (args.event, &claim) {
        (Some(e), _) => e.into_iter().collect(),
        (None, Some(c)) => core(cps::argmax_event(&tree, &z, &zbar, c, args.time))?,
        (None, None) => return Err("no event: pass --event or a claim to pick the argmax event".into()),
    };
    let pasted = core(cps::paste_cps(&tree, &z, &zbar, args.time, &event))?;
    let validity = core(cps::validate_cps(&tree, &pasted))?;
    eprintln!("pasted at time {} on event {:?}: {validity:?}", args.time, event);
    emit(args.out.as_deref(), &formats::cps_to_json(&pasted))
}

fn scale(args: ScaleArgs) -> Result<(), String> {
    let (tree, _) = core(formats::tree_from_json(&read(&args.tree)?))?;
    let z = core(formats::cps_from_json(&read(&args.cps)?))?;
    let target = args.lambda.unwrap_or_else(|| tree.lambda().clone());
    let scaled = core(cps::scale_cps(&tree, &z, &args.from, &target))?;
    eprintln!("mu={}", rational::format(&cps::scale_factor(&args.from, &target)));
    emit(args.out.as_deref(), &formats::cps_to_json(&scaled))
}

fn hedge_check(args: HedgeArgs) -> Result<(), String> {
    let (tree, claim) = args.input.load_with_claim()?;
    let h = core(pricing::check_hedgeable(&tree, &claim, args.node, &args.initial, args.mode))?;
    let dual = h.dual_value.as_ref().map_or("none".to_string(), rational::format);
    println!("primal={} dual={} agree={} dual_value={dual}", h.primal_feasible, h.dual_ok, h.agree());
    if let (Some(p), Some(s)) = (&args.out, &h.strategy) {
        write(p, &core(formats::strategy_to_csv(&tree, s, None))?)?;
    }
    Ok(())
}

fn bipolar(args: BipolarArgs) -> Result<(), String> {
    let (tree, claim) = args.input.load_with_claim()?;
    let m = core(pricing::bipolar_membership(&tree, &claim, args.node))?;
    println!("in_A={}", m.in_a);
    if let (Some(p), Some(sep)) = (&args.out, &m.separator) {
        write(p, &formats::cps_to_json(sep))?;
        println!("separating price system written to {}", p.display());
    }
    Ok(())
}

fn run_verify(args: VerifyArgs) -> Result<bool, String> {
    let config = OracleConfig {
        grid_radius: args.grid_radius,
        grid_steps: args.grid_steps,
        seeds: args.seeds.0,
        fault: args.fault.map(|FaultArg::CorruptBand| Fault::CorruptBand),
    };
    let report = core(verify::run_suite(&config))?;
    write(&args.out, &report.to_json())?;
    let text_path = args.out.with_extension("txt");
    write(&text_path, &report.to_text())?;
    for c in report.failures() {
        eprintln!("FAIL {} {}", c.id, c.detail);
    }
    println!(
        "suite: {} cases, {} passed, {} failed, {} skipped",
        report.cases.len(),
        report.passed,
        report.failed,
        report.skipped
    );
    println!("suite report: {} ({})", args.out.display(), text_path.display());
    Ok(report.all_passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => gen(a).map(|_| true),
        Command::Price(a) => price(a).map(|_| true),
        Command::Dual(a) => dual(a).map(|_| true),
        Command::Fprocess(a) => fprocess(a).map(|_| true),
        Command::FindCps(a) => find_cps(a),
        Command::Paste(a) => paste(a).map(|_| true),
        Command::Scale(a) => scale(a).map(|_| true),
        Command::HedgeCheck(a) => hedge_check(a).map(|_| true),
        Command::Bipolar(a) => bipolar(a).map(|_| true),
        Command::Verify(a) => run_verify(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use conepricer::rational::ratio;

    #[test]
    fn seed_ranges() {
        assert_eq!(parse_seeds("1..3").unwrap().0, vec![1, 2, 3]);
        assert_eq!(parse_seeds("1..=2").unwrap().0, vec![1, 2]);
        assert_eq!(parse_seeds("7").unwrap().0, vec![7]);
        assert!(parse_seeds("3..1").is_err());
        assert!(parse_seeds("a..b").is_err());
    }

    #[test]
    fn positions() {
        assert_eq!(parse_position("-90,1").unwrap(), Position::new(int(-90), int(1)));
        assert_eq!(parse_position("1/2, 0").unwrap(), Position::new(ratio(1, 2), int(0)));
        assert!(parse_position("5").is_err());
    }
}
