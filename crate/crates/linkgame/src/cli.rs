//! Command-line front end: instance loading, solver dispatch, and
//! reports in JSON or aligned-table form.
//!
//! JSON reports print floats rounded to 12 significant digits, with
//! struct fields declared alphabetically so a parse-and-reemit cycle
//! reproduces the bytes exactly. Flow vectors use the instance file's
//! raw link order.
//!
//! Exit codes: 0 success, 1 solver failure, 2 unusable input.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::analysis2link::{
    fuzz, maximize_price, maximize_price_monomial, monomial_price, ne_cost, ssl_cost,
    FuzzConfig, SearchConfig, TwoLinkParams,
};
use crate::bounds::{bound_set, dlp_check, normalized, verify_bounds};
use crate::equilibria::{global_optimum, nash_solve, wardrop_solve, IterationConfig};
use crate::model::{validate, Behavior, FlowProfile, Instance, RawInstance, SolveReport};
use crate::stackelberg::{price_report, ssl_solve, SslConfig, SslMethod, SslReport};

pub const LB2LINK: &str = include_str!("../../../instances/lb2link.json");
pub const ASYM_CP: &str = include_str!("../../../instances/asym-cp.json");
pub const EXAMPLE_FOLLOWER: &str = include_str!("../../../instances/example-follower.json");
pub const MONOMIAL_D4: &str = include_str!("../../../instances/monomial-d4.json");

#[derive(Parser, Debug)]
#[command(
    name = "linkgame",
    about = "Equilibria, leadership, and price bounds for parallel-link routing games",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub verb: Verb,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Auto,
    Exact,
    Numeric,
}

impl From<MethodArg> for SslMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Auto => SslMethod::Auto,
            MethodArg::Exact => SslMethod::ExactSupport,
            MethodArg::Numeric => SslMethod::Numeric,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Verb {
    /// Socially optimal flow of an instance file.
    Optimum { instance: PathBuf },
    /// Latency-equalizing flow of the combined volume.
    Wardrop { instance: PathBuf },
    /// Simultaneous-move equilibrium.
    Nash { instance: PathBuf },
    /// Leadership outcome for a committed leader.
    Ssl {
        instance: PathBuf,
        /// Index of the committing player.
        #[arg(long, default_value_t = 0)]
        leader: usize,
        #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
        method: MethodArg,
    },
    /// Leadership prices against the equilibrium and the optimum.
    Price {
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
        method: MethodArg,
    },
    /// Closed-form caps for a duopoly instance, with verification.
    Bounds { instance: PathBuf },
    /// Worst-case price search over two-link parameters.
    Search {
        /// Cells per axis of the dense affine grid.
        #[arg(long, default_value_t = 200)]
        grid: usize,
        /// Search the quartic-link plane instead of the affine one.
        #[arg(long)]
        monomial: bool,
    },
    /// Randomized property sweep over small shared-access duopolies.
    Fuzz {
        #[arg(long, default_value_t = 10_000)]
        cases: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Re-derive the pinned reference numbers; exits 0 only if every
    /// check lands within its tolerance.
    Reproduce,
}

/// Round to 12 significant digits so reports are stable and readable.
fn sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap()
}

fn sig12_vec(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| sig12(x)).collect()
}

fn sig12_pairs(v: &[(&'static str, f64)]) -> Vec<(String, f64)> {
    v.iter().map(|&(n, x)| (n.to_string(), sig12(x))).collect()
}

#[derive(Serialize, Deserialize, Debug, Default)]
pub struct BoundsOut {
    pub alpha: f64,
    pub dlp: bool,
    pub gamma: f64,
    pub l_min: f64,
    pub mass_high: f64,
    pub mass_low: f64,
    pub p1_bounds: Vec<(String, f64)>,
    pub p2_bounds: Vec<(String, f64)>,
    pub price_bounds: Vec<(String, f64)>,
}

#[derive(Serialize, Deserialize, Debug, Default)]
pub struct FuzzOut {
    pub cases: usize,
    pub max_price_vs_nash: f64,
    pub max_price_vs_optimal: f64,
    pub seed: u64,
}

#[derive(Serialize, Deserialize, Debug, Default)]
pub struct SearchOut {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b1: Option<f64>,
    pub b2: f64,
    pub r: f64,
    pub value: f64,
}

#[derive(Serialize, Deserialize, Debug)]
pub struct CheckOut {
    /// "abs": pass iff |measured - reference| <= tolerance;
    /// "le": pass iff measured <= reference + tolerance.
    pub comparison: String,
    pub measured: f64,
    pub name: String,
    pub pass: bool,
    pub reference: f64,
    pub tolerance: f64,
}

/// One report shape for every verb; absent sections are omitted from
/// the JSON. Field order is alphabetical on purpose: parsed generic
/// JSON reserializes in sorted key order, and byte-stable output is a
/// contract here.
#[derive(Serialize, Deserialize, Debug, Default)]
pub struct Report {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundsOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checks: Option<Vec<CheckOut>>,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flows: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fuzz: Option<FuzzOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub player_costs: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub price_vs_nash: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub price_vs_optimal: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub social_cost: Option<f64>,
    pub violations: Vec<String>,
}

#[derive(Debug)]
enum RunError {
    /// Unreadable file, malformed JSON, or an invalid instance.
    Input(String),
    /// A solver refused or failed to converge.
    Solver(String),
}

impl RunError {
    fn code(&self) -> i32 {
        match self {
            RunError::Input(_) => 2,
            RunError::Solver(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            RunError::Input(m) | RunError::Solver(m) => m,
        }
    }
}

fn solver_err(e: impl std::fmt::Display) -> RunError {
    RunError::Solver(format!("solver error: {e}"))
}

fn load_instance(path: &Path) -> Result<Instance, RunError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError::Input(format!("cannot read {}: {e}", path.display())))?;
    parse_instance(&text, &path.display().to_string())
}

fn parse_instance(text: &str, origin: &str) -> Result<Instance, RunError> {
    let raw: RawInstance = serde_json::from_str(text)
        .map_err(|e| RunError::Input(format!("instance schema violation in {origin}: {e}")))?;
    validate(&raw).map_err(|e| RunError::Input(format!("invalid instance {origin}: {e}")))
}

/// Per-player flows mapped back to raw link positions.
fn raw_flows(inst: &Instance, profile: &FlowProfile) -> Vec<Vec<f64>> {
    profile
        .flow
        .iter()
        .map(|row| {
            let mut raw = vec![0.0; row.len()];
            for (j, &x) in row.iter().enumerate() {
                raw[inst.raw_index(j)] = sig12(x);
            }
            raw
        })
        .collect()
}

fn fill_solve(report: &mut Report, inst: &Instance, r: &SolveReport) {
    report.flows = Some(raw_flows(inst, &r.profile));
    report.player_costs = Some(sig12_vec(&r.player_costs));
    report.social_cost = Some(sig12(r.social_cost));
    report.residual = Some(sig12(r.residual));
}

fn fill_ssl(report: &mut Report, inst: &Instance, r: &SslReport) {
    fill_solve(report, inst, &r.inner);
}

fn run_verb(cli: &Cli) -> Result<Report, RunError> {
    let mut report = Report::default();
    match &cli.verb {
        Verb::Optimum { instance } => {
            report.command = "optimum".into();
            report.instance = Some(instance.display().to_string());
            let inst = load_instance(instance)?;
            let r = global_optimum(&inst).map_err(solver_err)?;
            fill_solve(&mut report, &inst, &r);
        }
        Verb::Wardrop { instance } => {
            report.command = "wardrop".into();
            report.instance = Some(instance.display().to_string());
            let inst = load_instance(instance)?;
            let r = wardrop_solve(&inst).map_err(solver_err)?;
            fill_solve(&mut report, &inst, &r);
        }
        Verb::Nash { instance } => {
            report.command = "nash".into();
            report.instance = Some(instance.display().to_string());
            let inst = load_instance(instance)?;
            let r = nash_solve(&inst, &IterationConfig::default()).map_err(solver_err)?;
            fill_solve(&mut report, &inst, &r);
        }
        Verb::Ssl { instance, leader, method } => {
            report.command = "ssl".into();
            report.instance = Some(instance.display().to_string());
            let inst = load_instance(instance)?;
            if *leader >= inst.n_players() {
                return Err(RunError::Input(format!(
                    "leader index {leader} out of range for {} players",
                    inst.n_players()
                )));
            }
            let cfg = SslConfig { method: (*method).into(), ..SslConfig::default() };
            let r = ssl_solve(&inst, *leader, &cfg).map_err(solver_err)?;
            fill_ssl(&mut report, &inst, &r);
        }
        Verb::Price { instance, method } => {
            report.command = "price".into();
            report.instance = Some(instance.display().to_string());
            let inst = load_instance(instance)?;
            let cfg = SslConfig { method: (*method).into(), ..SslConfig::default() };
            let pr = price_report(&inst, &cfg).map_err(solver_err)?;
            let worst = pr
                .ssl
                .iter()
                .max_by(|x, y| x.social_cost.partial_cmp(&y.social_cost).unwrap())
                .unwrap();
            fill_ssl(&mut report, &inst, worst);
            report.price_vs_nash = Some(sig12(pr.price_vs_nash));
            report.price_vs_optimal = Some(sig12(pr.price_vs_optimal));
        }
        Verb::Bounds { instance } => {
            report.command = "bounds".into();
            report.instance = Some(instance.display().to_string());
            let inst = load_instance(instance)?;
            let norm = normalized(&inst).map_err(solver_err)?;
            let bounds = bound_set(&norm).map_err(solver_err)?;
            let dlp = dlp_check(&norm).map_err(solver_err)?;
            let pr = price_report(&inst, &SslConfig::default()).map_err(solver_err)?;
            let violations = verify_bounds(&inst, &pr).map_err(solver_err)?;
            report.bounds = Some(BoundsOut {
                alpha: sig12(bounds.alpha),
                dlp: bounds.dlp,
                gamma: sig12(bounds.gamma),
                l_min: sig12(bounds.l_min),
                mass_high: sig12(dlp.mass_high),
                mass_low: sig12(dlp.mass_low),
                p1_bounds: sig12_pairs(&bounds.p1_bounds),
                p2_bounds: sig12_pairs(&bounds.p2_bounds),
                price_bounds: sig12_pairs(&bounds.price_bounds),
            });
            report.price_vs_nash = Some(sig12(pr.price_vs_nash));
            report.price_vs_optimal = Some(sig12(pr.price_vs_optimal));
            report.violations = violations.iter().map(|v| v.to_string()).collect();
        }
        Verb::Search { grid, monomial } => {
            report.command = "search".into();
            if *monomial {
                let out = maximize_price_monomial().map_err(solver_err)?;
                report.search = Some(SearchOut {
                    a1: None,
                    a2: None,
                    b1: None,
                    b2: sig12(out.b2),
                    r: sig12(out.r),
                    value: sig12(out.value),
                });
            } else {
                let out = maximize_price(&SearchConfig { grid: *grid });
                report.search = Some(SearchOut {
                    a1: Some(sig12(out.params.a1)),
                    a2: Some(sig12(out.params.a2)),
                    b1: Some(sig12(out.params.b1)),
                    b2: sig12(out.params.b2),
                    r: sig12(out.params.r),
                    value: sig12(out.value),
                });
            }
        }
        Verb::Fuzz { cases, seed } => {
            report.command = "fuzz".into();
            let summary = fuzz(&FuzzConfig { cases: *cases, seed: *seed });
            report.fuzz = Some(FuzzOut {
                cases: summary.cases,
                max_price_vs_nash: sig12(summary.max_price_vs_nash),
                max_price_vs_optimal: sig12(summary.max_price_vs_optimal),
                seed: *seed,
            });
            report.violations = summary.violations;
        }
        Verb::Reproduce => {
            report.command = "reproduce".into();
            let checks = reproduce_checks()?;
            for c in &checks {
                if !c.pass {
                    report.violations.push(format!(
                        "{}: measured {} against {} (tolerance {})",
                        c.name, c.measured, c.reference, c.tolerance
                    ));
                }
            }
            report.checks = Some(checks);
        }
    }
    Ok(report)
}

fn abs_check(name: &str, measured: f64, reference: f64, tolerance: f64) -> CheckOut {
    CheckOut {
        comparison: "abs".into(),
        measured: sig12(measured),
        name: name.into(),
        pass: (measured - reference).abs() <= tolerance,
        reference: sig12(reference),
        tolerance,
    }
}

fn le_check(name: &str, measured: f64, reference: f64, tolerance: f64) -> CheckOut {
    CheckOut {
        comparison: "le".into(),
        measured: sig12(measured),
        name: name.into(),
        pass: measured <= reference + tolerance,
        reference: sig12(reference),
        tolerance,
    }
}

fn ge_check(name: &str, measured: f64, reference: f64, tolerance: f64) -> CheckOut {
    CheckOut {
        comparison: "ge".into(),
        measured: sig12(measured),
        name: name.into(),
        pass: measured >= reference - tolerance,
        reference: sig12(reference),
        tolerance,
    }
}

/// The pinned reference suite: closed forms, the asymmetric network,
/// the two-link example under both follower kinds, the worst-case
/// searches, and a short fuzz sweep.
fn reproduce_checks() -> Result<Vec<CheckOut>, RunError> {
    let mut checks = Vec::new();
    let cfg = SslConfig::default();

    // Flat-link duopoly price.
    let lb = parse_instance(LB2LINK, "builtin lb2link")?;
    let pr = price_report(&lb, &cfg).map_err(solver_err)?;
    checks.push(abs_check("flat_link_price_vs_nash", pr.price_vs_nash, 93.0 / 88.0, 1e-6));

    // Closed forms against the numeric solvers on the duopoly example.
    let params = TwoLinkParams { a1: 1.0, a2: 0.0, b1: 0.0, b2: 2.0, r: 2.0 / 3.0 };
    checks.push(abs_check("duopoly_ne_cost", ne_cost(&params).map_err(solver_err)?, 22.0 / 9.0, 1e-9));
    checks.push(abs_check("duopoly_ssl_cost", ssl_cost(&params).map_err(solver_err)?, 31.0 / 12.0, 1e-9));
    let inst = params.instance().map_err(solver_err)?;
    let nash = nash_solve(&inst, &IterationConfig::default()).map_err(solver_err)?;
    checks.push(abs_check("duopoly_ne_numeric", nash.social_cost, 22.0 / 9.0, 1e-9));
    let nash_raw = raw_flows(&inst, &nash.profile);
    checks.push(abs_check("duopoly_ne_flow_p1_link1", nash_raw[0][0], 2.0 / 3.0, 1e-7));
    checks.push(abs_check("duopoly_ne_flow_p2_link1", nash_raw[1][0], 2.0 / 3.0, 1e-7));
    let ssl = ssl_solve(&inst, 0, &cfg).map_err(solver_err)?;
    checks.push(abs_check("duopoly_ssl_numeric", ssl.social_cost, 31.0 / 12.0, 1e-9));
    let ssl_raw = raw_flows(&inst, &ssl.inner.profile);
    checks.push(abs_check("duopoly_ssl_flow_p1_link1", ssl_raw[0][0], 1.0, 1e-7));
    checks.push(abs_check("duopoly_ssl_flow_p2_link1", ssl_raw[1][0], 0.5, 1e-7));

    // Asymmetric three-link network, mixed behaviors as shipped.
    let asym = parse_instance(ASYM_CP, "builtin asym-cp")?;
    let se = global_optimum(&asym).map_err(solver_err)?;
    checks.push(abs_check("asym_optimum", se.social_cost, 566_550.0, 0.5));
    let wardrop = wardrop_solve(&asym).map_err(solver_err)?;
    checks.push(abs_check("asym_wardrop", wardrop.social_cost, 567_000.0, 0.5));
    let mixed = nash_solve(&asym, &IterationConfig::default()).map_err(solver_err)?;
    checks.push(abs_check("asym_mixed_equilibrium", mixed.social_cost, 572_400.0, 0.5));
    let ssl_w = ssl_solve(&asym, 0, &cfg).map_err(solver_err)?;
    checks.push(abs_check("asym_ssl_wardrop_follower", ssl_w.social_cost, 583_537.5, 0.5));

    // Same network with both players atomic.
    let mut both_raw: RawInstance =
        serde_json::from_str(ASYM_CP).map_err(|e| RunError::Input(e.to_string()))?;
    both_raw.players[1].behavior = Behavior::Atomic;
    let both = validate(&both_raw).map_err(|e| RunError::Input(e.to_string()))?;
    let nash_both = nash_solve(&both, &IterationConfig::default()).map_err(solver_err)?;
    checks.push(abs_check("asym_atomic_equilibrium", nash_both.social_cost, 577_916.0, 0.5));
    let ssl_a = ssl_solve(&both, 0, &cfg).map_err(solver_err)?;
    checks.push(abs_check(
        "asym_ssl_atomic_follower",
        ssl_a.social_cost,
        28_525_500.0 / 49.0,
        0.5,
    ));

    // Appendix duopoly, both follower kinds.
    let exf = parse_instance(EXAMPLE_FOLLOWER, "builtin example-follower")?;
    let atomic_f = ssl_solve(&exf, 0, &cfg).map_err(solver_err)?;
    checks.push(abs_check("example_leader_cost_atomic", atomic_f.leader_cost, 7.0 / 16.0, 1e-7));
    checks.push(abs_check("example_follower_cost_atomic", atomic_f.follower_cost, 15.0 / 32.0, 1e-7));
    let mut wardrop_raw: RawInstance =
        serde_json::from_str(EXAMPLE_FOLLOWER).map_err(|e| RunError::Input(e.to_string()))?;
    wardrop_raw.players[1].behavior = Behavior::Wardrop;
    let exf_w = validate(&wardrop_raw).map_err(|e| RunError::Input(e.to_string()))?;
    let wardrop_f = ssl_solve(&exf_w, 0, &cfg).map_err(solver_err)?;
    checks.push(abs_check("example_leader_cost_wardrop", wardrop_f.leader_cost, 15.0 / 32.0, 1e-7));
    checks.push(abs_check("example_follower_cost_wardrop", wardrop_f.follower_cost, 7.0 / 16.0, 1e-7));

    // Worst-case searches.
    let best = maximize_price(&SearchConfig::default());
    checks.push(abs_check("search_value", best.value, 93.0 / 88.0, 1e-4));
    checks.push(abs_check("search_b2_vs_2a1", best.params.b2 - 2.0 * best.params.a1, 0.0, 1e-2));
    checks.push(abs_check("search_a2", best.params.a2, 0.0, 1e-2));
    checks.push(abs_check("search_r", best.params.r, 2.0 / 3.0, 1e-2));
    let quartic = monomial_price(5.67, 0.587).map_err(solver_err)?;
    checks.push(abs_check("quartic_point_price", quartic, 1.149008094, 2e-3));

    // Short fuzz sweep.
    let summary = fuzz(&FuzzConfig { cases: 300, seed: 42 });
    checks.push(abs_check("fuzz_violations", summary.violations.len() as f64, 0.0, 0.0));
    checks.push(le_check("fuzz_max_price_vs_optimal", summary.max_price_vs_optimal, 4.0 / 3.0, 1e-7));
    checks.push(ge_check("fuzz_max_price_vs_nash", summary.max_price_vs_nash, 93.0 / 88.0, 1e-6));

    Ok(checks)
}

fn row(out: &mut String, k: &str, v: String) {
    out.push_str(&format!("{k:<28} {v}\n"));
}

fn render_table(report: &Report) -> String {
    let mut out = String::new();
    row(&mut out, "command", report.command.clone());
    if let Some(i) = &report.instance {
        row(&mut out, "instance", i.clone());
    }
    if let Some(flows) = &report.flows {
        for (i, f) in flows.iter().enumerate() {
            let cells: Vec<String> = f.iter().map(|x| x.to_string()).collect();
            row(&mut out, &format!("flows[{i}]"), cells.join(" "));
        }
    }
    if let Some(c) = &report.player_costs {
        let cells: Vec<String> = c.iter().map(|x| x.to_string()).collect();
        row(&mut out, "player_costs", cells.join(" "));
    }
    if let Some(v) = report.social_cost {
        row(&mut out, "social_cost", v.to_string());
    }
    if let Some(v) = report.residual {
        row(&mut out, "residual", v.to_string());
    }
    if let Some(v) = report.price_vs_nash {
        row(&mut out, "price_vs_nash", v.to_string());
    }
    if let Some(v) = report.price_vs_optimal {
        row(&mut out, "price_vs_optimal", v.to_string());
    }
    if let Some(b) = &report.bounds {
        row(&mut out, "gamma", b.gamma.to_string());
        row(&mut out, "alpha", b.alpha.to_string());
        row(&mut out, "l_min", b.l_min.to_string());
        row(&mut out, "dlp", b.dlp.to_string());
        row(&mut out, "mass_low", b.mass_low.to_string());
        row(&mut out, "mass_high", b.mass_high.to_string());
        for (name, v) in b.p1_bounds.iter() {
            row(&mut out, &format!("p1_bound.{name}"), v.to_string());
        }
        for (name, v) in b.p2_bounds.iter() {
            row(&mut out, &format!("p2_bound.{name}"), v.to_string());
        }
        for (name, v) in b.price_bounds.iter() {
            row(&mut out, &format!("price_bound.{name}"), v.to_string());
        }
    }
    if let Some(s) = &report.search {
        if let Some(a1) = s.a1 {
            row(&mut out, "a1", a1.to_string());
        }
        if let Some(a2) = s.a2 {
            row(&mut out, "a2", a2.to_string());
        }
        if let Some(b1) = s.b1 {
            row(&mut out, "b1", b1.to_string());
        }
        row(&mut out, "b2", s.b2.to_string());
        row(&mut out, "r", s.r.to_string());
        row(&mut out, "value", s.value.to_string());
    }
    if let Some(f) = &report.fuzz {
        row(&mut out, "cases", f.cases.to_string());
        row(&mut out, "seed", f.seed.to_string());
        row(&mut out, "max_price_vs_nash", f.max_price_vs_nash.to_string());
        row(&mut out, "max_price_vs_optimal", f.max_price_vs_optimal.to_string());
    }
    if let Some(checks) = &report.checks {
        for c in checks {
            let verdict = if c.pass { "ok  " } else { "FAIL" };
            let cmp = match c.comparison.as_str() {
                "le" => "<= ",
                "ge" => ">= ",
                _ => "",
            };
            out.push_str(&format!(
                "{verdict} {name:<34} {measured:>20} want {cmp}{reference} (tolerance {tol})\n",
                name = c.name,
                measured = c.measured,
                reference = c.reference,
                tol = c.tolerance,
            ));
        }
    }
    if report.violations.is_empty() {
        row(&mut out, "violations", "(none)".into());
    } else {
        for v in &report.violations {
            row(&mut out, "violation", v.clone());
        }
    }
    out
}

/// Dispatch a parsed command; prints the report or the error and
/// returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match run_verb(cli) {
        Ok(report) => {
            match cli.format {
                Format::Json => {
                    println!("{}", serde_json::to_string(&report).unwrap());
                }
                Format::Table => print!("{}", render_table(&report)),
            }
            let failed_checks = report
                .checks
                .as_ref()
                .map(|cs| cs.iter().any(|c| !c.pass))
                .unwrap_or(false);
            if report.command == "reproduce" && failed_checks {
                1
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("{}", e.message());
            e.code()
        }
    }
}
