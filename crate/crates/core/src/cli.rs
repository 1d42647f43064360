//! Command-line front end. `run` does all the work and returns the exit
//! code with the report text, so it can be driven from tests.
//!
//! Exit codes: 0 ok, 1 unreadable or invalid input, 2 rejected (with a
//! certificate or witness where one exists), 3 verification mismatch.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::consistency::{
    evaluate_certificate, solve_f, Certificate, ConsistencyFailure, FLabeling,
};
use crate::generator::{synthesize_multi, MultiError, Semantics};
use crate::implement::{
    decide_implementable, phi_from_jb, subgroup_check, verify_exact, verify_monte_carlo, MonteCarloConfig, Rejection,
    Verdict, VerifyError,
};
use crate::infograph::{build_graph, ckcs, component_graph};
use crate::io::{self, RawGame, RawKernel, RawPlTable};
use crate::model::{
    joint_belief_from_raw, validate_joint_belief, validate_model, BeliefEntry, Distribution, JointBelief, Model,
    PosteriorError, SignalKernel,
};
use crate::potential::{recover_potential, AdditiveError, StrategicGame};
use crate::{fixtures, Rational};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_REJECTED: i32 = 2;
pub const EXIT_MISMATCH: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SemanticsArg {
    Pp,
    Spp,
}

impl From<SemanticsArg> for Semantics {
    fn from(s: SemanticsArg) -> Self {
        match s {
            SemanticsArg::Pp => Semantics::Pp,
            SemanticsArg::Spp => Semantics::Spp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DemoName {
    Negotiation,
    Example1,
}

#[derive(Debug, Parser)]
#[command(name = "mediator", version, about = "Implementability of joint posteriors through a partially informed mediator")]
pub struct Cli {
    #[arg(long, value_enum, default_value = "json", global = true)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Check an instance file (and its joint belief, if present).
    Validate { instance: PathBuf },
    /// Common-knowledge components and the component graph.
    Ckc { instance: PathBuf },
    /// Consistency of a posterior likelihood table ("w|v" -> "p/q").
    Check { instance: PathBuf, phi: PathBuf },
    /// Decide implementability and synthesize a kernel.
    Decide {
        instance: PathBuf,
        /// Joint belief file; defaults to the one inside the instance.
        #[arg(long)]
        jb: Option<PathBuf>,
        /// Comma-separated player subgroup.
        #[arg(long, value_delimiter = ',')]
        group: Option<Vec<String>>,
    },
    /// Exact check that a kernel's signal induces the joint belief.
    Verify {
        instance: PathBuf,
        kernel: PathBuf,
        #[arg(long)]
        jb: Option<PathBuf>,
        #[arg(long, default_value = "s")]
        signal: String,
    },
    /// Monte Carlo check of a kernel against the joint belief.
    Simulate {
        instance: PathBuf,
        kernel: PathBuf,
        #[arg(long)]
        jb: Option<PathBuf>,
        #[arg(long, default_value = "s")]
        signal: String,
        #[arg(long)]
        samples: u64,
        #[arg(long)]
        seed: u64,
    },
    /// One signal per joint belief, mixed so the prior is preserved.
    Multi {
        instance: PathBuf,
        #[arg(required = true)]
        jbs: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "spp")]
        semantics: SemanticsArg,
    },
    /// Exact potential of a finite game, or a cycle that rules one out.
    Potential { game: PathBuf },
    /// Built-in worked examples.
    Demo {
        #[arg(value_enum)]
        name: DemoName,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub command: Command,
    pub format: Format,
    pub seed: Option<u64>,
    pub samples: u64,
    pub semantics: Semantics,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("--samples {0} needs a --seed")]
pub struct MissingSeed(pub u64);

impl RunConfig {
    pub fn new(command: Command, format: Format) -> Self {
        let (seed, samples) = match &command {
            Command::Simulate { samples, seed, .. } => (Some(*seed), *samples),
            _ => (None, 0),
        };
        let semantics = match &command {
            Command::Multi { semantics, .. } => (*semantics).into(),
            _ => Semantics::Spp,
        };
        RunConfig {
            command,
            format,
            seed,
            samples,
            semantics,
        }
    }

    pub fn from_cli(cli: Cli) -> Self {
        RunConfig::new(cli.command, cli.format)
    }

    pub fn check(&self) -> Result<(), MissingSeed> {
        if self.samples > 0 && self.seed.is_none() {
            return Err(MissingSeed(self.samples));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
    #[error("{0}")]
    Schema(String),
}

/// A finished command: exit code, JSON body, text rendering.
struct Report {
    code: i32,
    json: Value,
    text: String,
}

impl Report {
    fn new(code: i32, json: Value, text: impl Into<String>) -> Self {
        Report {
            code,
            json,
            text: text.into(),
        }
    }
}

pub fn run(config: &RunConfig) -> (i32, String) {
    let result = config
        .check()
        .map_err(|e| CliError::Schema(e.to_string()))
        .and_then(|_| dispatch(config));
    let report = result.unwrap_or_else(|e| {
        let kind = match e {
            CliError::Io { .. } => "file",
            CliError::Parse { .. } => "parse",
            CliError::Schema(_) => "schema",
        };
        Report::new(
            EXIT_INPUT,
            json!({"error": kind, "message": e.to_string()}),
            format!("error: {e}\n"),
        )
    });
    let out = match config.format {
        Format::Json => io::to_canonical_json(&report.json),
        Format::Text => report.text,
    };
    (report.code, out)
}

fn dispatch(config: &RunConfig) -> Result<Report, CliError> {
    match &config.command {
        Command::Validate { instance } => cmd_validate(instance),
        Command::Ckc { instance } => cmd_ckc(instance),
        Command::Check { instance, phi } => cmd_check(instance, phi),
        Command::Decide { instance, jb, group } => cmd_decide(instance, jb.as_deref(), group.as_deref()),
        Command::Verify {
            instance,
            kernel,
            jb,
            signal,
        } => cmd_verify(instance, kernel, jb.as_deref(), signal),
        Command::Simulate {
            instance,
            kernel,
            jb,
            signal,
            ..
        } => cmd_simulate(
            instance,
            kernel,
            jb.as_deref(),
            signal,
            config.samples,
            config.seed.expect("checked"),
        ),
        Command::Multi { instance, jbs, .. } => cmd_multi(instance, jbs, config.semantics),
        Command::Potential { game } => cmd_potential(game),
        Command::Demo { name } => Ok(match name {
            DemoName::Negotiation => demo_negotiation(),
            DemoName::Example1 => demo_example1(),
        }),
    }
}

// ---- loading -------------------------------------------------------------

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read(path)?).map_err(|source| CliError::Parse {
        path: path.display().to_string(),
        source,
    })
}

fn load_instance(path: &Path) -> Result<(Model, Option<JointBelief>), CliError> {
    let raw: io::RawInstance = parse(path)?;
    let model = validate_model(&raw).map_err(|e| CliError::Schema(e.to_string()))?;
    let jb = raw.joint_belief.as_ref().map(|r| checked_jb(&model, r)).transpose()?;
    Ok((model, jb))
}

fn checked_jb(model: &Model, raw: &io::RawJointBelief) -> Result<JointBelief, CliError> {
    let jb = joint_belief_from_raw(model, raw).map_err(|e| CliError::Schema(e.to_string()))?;
    validate_joint_belief(model, jb).map_err(|e| CliError::Schema(e.to_string()))
}

fn load_jb(model: &Model, path: &Path) -> Result<JointBelief, CliError> {
    let raw = io::parse_joint_belief(&read(path)?).map_err(|source| CliError::Parse {
        path: path.display().to_string(),
        source,
    })?;
    checked_jb(model, &raw)
}

/// Model plus the joint belief from `--jb`, falling back to the instance.
fn load_with_jb(instance: &Path, jb: Option<&Path>) -> Result<(Model, JointBelief), CliError> {
    let (model, inline) = load_instance(instance)?;
    let jb = match jb {
        Some(p) => load_jb(&model, p)?,
        None => inline.ok_or_else(|| CliError::Schema("no joint belief given (use --jb)".into()))?,
    };
    Ok((model, jb))
}

fn load_kernel(model: &Model, path: &Path) -> Result<SignalKernel, CliError> {
    let raw: RawKernel = parse(path)?;
    io::kernel_from_raw(model, &raw).map_err(|e| CliError::Schema(e.to_string()))
}

// ---- JSON pieces ---------------------------------------------------------

fn rat(r: &Rational) -> Value {
    Value::String(r.to_string())
}

fn by_state(model: &Model, values: &[Rational]) -> Value {
    let mut m = Map::new();
    for (s, v) in values.iter().enumerate() {
        m.insert(model.state_name(s).to_string(), rat(v));
    }
    Value::Object(m)
}

fn names(model: &Model, states: &[usize]) -> Vec<String> {
    states.iter().map(|&s| model.state_name(s).to_string()).collect()
}

fn certificate_json(model: &Model, cert: &Certificate) -> Value {
    match cert {
        Certificate::FCycle { path, product } => json!({
            "kind": "f_cycle",
            "path": names(model, path),
            "product": rat(product),
        }),
        Certificate::FLoop { pairs, product } => json!({
            "kind": "f_loop",
            "pairs": pairs
                .iter()
                .map(|&(a, b)| [model.state_name(a), model.state_name(b)])
                .collect::<Vec<_>>(),
            "product": rat(product),
        }),
    }
}

fn certificate_text(model: &Model, cert: &Certificate) -> String {
    match cert {
        Certificate::FCycle { path, product } => {
            format!("F-cycle {} with product {product}", names(model, path).join(" -> "))
        }
        Certificate::FLoop { pairs, product } => {
            let body: Vec<String> = pairs
                .iter()
                .map(|&(a, b)| format!("({}, {})", model.state_name(a), model.state_name(b)))
                .collect();
            format!("F-loop {} with product {product}", body.join(" "))
        }
    }
}

fn entry_json(model: &Model, e: &BeliefEntry) -> Value {
    match e.as_dist() {
        Some(d) => {
            let mut m = Map::new();
            for s in d.support() {
                m.insert(model.state_name(s).to_string(), rat(d.get(s)));
            }
            Value::Object(m)
        }
        None => Value::Null,
    }
}

fn entry_text(e: &BeliefEntry) -> String {
    match e.as_dist() {
        Some(d) => format!("({})", d.probs().iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",")),
        None => "empty".to_string(),
    }
}

/// States down the side, one column per player.
fn jb_table(model: &Model, jb: &JointBelief) -> String {
    let mut cells = vec![std::iter::once(String::new())
        .chain(model.players().iter().map(|p| format!("Player {p}")))
        .collect::<Vec<_>>()];
    for s in 0..model.num_states() {
        let mut row = vec![model.state_name(s).to_string()];
        row.extend((0..model.num_players()).map(|p| entry_text(jb.entry(s, p))));
        cells.push(row);
    }
    let widths: Vec<usize> = (0..cells[0].len())
        .map(|c| cells.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &cells {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c:<w$}"))
            .collect();
        writeln!(out, "{}", line.join(" | ").trim_end()).unwrap();
    }
    out
}

fn kernel_text(model: &Model, kernel: &SignalKernel) -> String {
    let mut out = String::new();
    for (i, sig) in kernel.signals().iter().enumerate() {
        let row: Vec<String> = (0..model.num_states())
            .map(|s| format!("{}={}", model.state_name(s), kernel.prob(i, s)))
            .collect();
        writeln!(out, "  P({sig} | .): {}", row.join(" ")).unwrap();
    }
    out
}

fn rejection_json(model: &Model, r: &Rejection) -> Value {
    let mut v = json!({"verdict": "rejected", "message": r.to_string()});
    let (reason, extra) = match r {
        Rejection::EmptySupport => ("empty_support", Value::Null),
        Rejection::OmegaPlusNotMeasurable { cell } => ("support_not_measurable", json!({"cell": names(model, cell)})),
        Rejection::Phi(_) => ("likelihood_disagreement", Value::Null),
        Rejection::OffSupportIncoherent { state, player } => (
            "off_support_incoherent",
            json!({"state": model.state_name(*state), "player": model.players()[*player]}),
        ),
        Rejection::InvalidPl(_) => ("invalid_likelihoods", Value::Null),
        Rejection::Violation(c) => ("consistency_violation", json!({"certificate": certificate_json(model, c)})),
    };
    v["reason"] = json!(reason);
    if let Value::Object(m) = extra {
        for (k, x) in m {
            v[k] = x;
        }
    }
    v
}

fn rejection_text(model: &Model, r: &Rejection) -> String {
    match r {
        Rejection::Violation(c) => format!("rejected: {}\n", certificate_text(model, c)),
        _ => format!("rejected: {r}\n"),
    }
}

fn verdict_report(model: &Model, jb: &JointBelief, verdict: &Verdict) -> Report {
    match verdict {
        Verdict::Implementable { f, kernel, signal } => {
            let json = json!({
                "verdict": "implementable",
                "signal": signal,
                "f": by_state(model, f.values()),
                "kernel": io::kernel_to_raw(model, kernel),
            });
            let text = format!(
                "implementable\n{}kernel:\n{}",
                jb_table(model, jb),
                kernel_text(model, kernel)
            );
            Report::new(EXIT_OK, json, text)
        }
        Verdict::Rejected(r) => Report::new(EXIT_REJECTED, rejection_json(model, r), rejection_text(model, r)),
    }
}

// ---- subcommands ---------------------------------------------------------

fn cmd_validate(instance: &Path) -> Result<Report, CliError> {
    let (model, jb) = load_instance(instance)?;
    let json = json!({
        "valid": true,
        "states": model.states(),
        "players": model.players(),
        "joint_belief": if jb.is_some() { "valid" } else { "absent" },
    });
    let text = format!(
        "valid: {} states, players {}{}\n",
        model.num_states(),
        model.players().join(", "),
        if jb.is_some() { ", joint belief valid" } else { "" }
    );
    Ok(Report::new(EXIT_OK, json, text))
}

fn cmd_ckc(instance: &Path) -> Result<Report, CliError> {
    let (model, _) = load_instance(instance)?;
    let graph = build_graph(&model);
    let comps = ckcs(&graph);
    let cg = component_graph(&graph, &comps, model.mediator());
    let edges: Vec<Value> = graph
        .edges()
        .map(|(a, b, ps)| {
            json!({
                "states": [model.state_name(a), model.state_name(b)],
                "players": ps.iter().map(|&p| &model.players()[p]).collect::<Vec<_>>(),
            })
        })
        .collect();
    let cedges: Vec<Value> = cg
        .edges()
        .iter()
        .map(|(&(a, b), cells)| {
            json!({
                "components": [a, b],
                "f_cells": cells.iter().map(|&c| names(&model, &model.mediator().cells()[c])).collect::<Vec<_>>(),
            })
        })
        .collect();
    let components: Vec<Vec<String>> = comps.components().iter().map(|c| names(&model, c)).collect();
    let mut text = String::new();
    for (i, c) in components.iter().enumerate() {
        writeln!(text, "C{i}: {{{}}}", c.join(", ")).unwrap();
    }
    for &(a, b) in cg.edges().keys() {
        writeln!(text, "C{a} -- C{b}").unwrap();
    }
    let json = json!({"edges": edges, "components": components, "component_graph": cedges});
    Ok(Report::new(EXIT_OK, json, text))
}

fn cmd_check(instance: &Path, phi_path: &Path) -> Result<Report, CliError> {
    let (model, _) = load_instance(instance)?;
    let table: RawPlTable = parse(phi_path)?;
    let graph = build_graph(&model);
    let phi = io::pl_from_table(&model, &graph, &table).map_err(|e| CliError::Schema(e.to_string()))?;
    match solve_f(&graph, model.mediator(), &phi) {
        Ok(f) => {
            let f: FLabeling = f.canonical();
            let text = format!(
                "consistent; f = {}\n",
                (0..model.num_states())
                    .map(|s| format!("{}={}", model.state_name(s), f.values()[s]))
                    .collect::<Vec<_>>()
                    .join(" ")
            );
            Ok(Report::new(
                EXIT_OK,
                json!({"verdict": "consistent", "f": by_state(&model, f.values())}),
                text,
            ))
        }
        Err(ConsistencyFailure::Invalid(e)) => Err(CliError::Schema(e.to_string())),
        Err(ConsistencyFailure::Violation(c)) => Ok(Report::new(
            EXIT_REJECTED,
            json!({"verdict": "violation", "certificate": certificate_json(&model, &c)}),
            format!("violation: {}\n", certificate_text(&model, &c)),
        )),
    }
}

fn cmd_decide(instance: &Path, jb: Option<&Path>, group: Option<&[String]>) -> Result<Report, CliError> {
    let (model, jb) = load_with_jb(instance, jb)?;
    match group {
        None => Ok(verdict_report(&model, &jb, &decide_implementable(&model, &jb))),
        Some(g) => {
            let verdict = subgroup_check(&model, g, &jb).map_err(|e| CliError::Schema(e.to_string()))?;
            let sub = model.restrict_players(g).expect("checked by subgroup_check");
            let ix = model.player_indices(g).expect("checked by subgroup_check");
            let mut report = verdict_report(&sub, &jb.restrict_players(&ix), &verdict);
            report.json["group"] = json!(sub.players());
            Ok(report)
        }
    }
}

fn posterior_error(e: PosteriorError) -> Result<Report, CliError> {
    match e {
        PosteriorError::SignalHasZeroProbability(_) => Ok(Report::new(
            EXIT_MISMATCH,
            json!({"verified": false, "message": e.to_string()}),
            format!("mismatch: {e}\n"),
        )),
        other => Err(CliError::Schema(other.to_string())),
    }
}

fn cmd_verify(instance: &Path, kernel: &Path, jb: Option<&Path>, signal: &str) -> Result<Report, CliError> {
    let (model, jb) = load_with_jb(instance, jb)?;
    let kernel = load_kernel(&model, kernel)?;
    match verify_exact(&model, &kernel, signal, &jb) {
        Ok(()) => Ok(Report::new(
            EXIT_OK,
            json!({"verified": true, "signal": signal}),
            format!("verified: signal {signal} induces\n{}", jb_table(&model, &jb)),
        )),
        Err(VerifyError::Posterior(e)) => posterior_error(e),
        Err(VerifyError::Mismatch(ms)) => {
            let list: Vec<Value> = ms
                .iter()
                .map(|m| {
                    json!({
                        "state": model.state_name(m.state),
                        "player": model.players()[m.player],
                        "expected": entry_json(&model, &m.expected),
                        "got": entry_json(&model, &m.got),
                    })
                })
                .collect();
            let mut text = format!("mismatch in {} entries\n", ms.len());
            for m in &ms {
                writeln!(
                    text,
                    "  {} player {}: expected {} got {}",
                    model.state_name(m.state),
                    model.players()[m.player],
                    entry_text(&m.expected),
                    entry_text(&m.got)
                )
                .unwrap();
            }
            Ok(Report::new(
                EXIT_MISMATCH,
                json!({"verified": false, "signal": signal, "mismatches": list}),
                text,
            ))
        }
    }
}

fn cmd_simulate(
    instance: &Path,
    kernel: &Path,
    jb: Option<&Path>,
    signal: &str,
    samples: u64,
    seed: u64,
) -> Result<Report, CliError> {
    let (model, jb) = load_with_jb(instance, jb)?;
    let kernel = load_kernel(&model, kernel)?;
    if samples == 0 {
        return Err(CliError::Schema("--samples must be positive".into()));
    }
    let report = match verify_monte_carlo(&model, &kernel, signal, &jb, &MonteCarloConfig::new(samples, seed)) {
        Ok(r) => r,
        Err(e) => return posterior_error(e),
    };
    let entries: Vec<Value> = report
        .compared
        .iter()
        .map(|e| {
            json!({
                "cell": model.state_name(e.cell),
                "player": model.players()[e.player],
                "state": model.state_name(e.state),
                "hits": e.hits,
                "expected": e.expected,
                "empirical": e.empirical,
                "deviation": e.deviation,
                "tolerance": e.tolerance,
                "flagged": e.flagged,
            })
        })
        .collect();
    let passed = report.passed();
    let json = json!({
        "passed": passed,
        "samples": report.samples,
        "seed": report.seed,
        "signal": signal,
        "signal_hits": report.signal_hits,
        "max_deviation": report.max_deviation,
        "low_confidence": report.low_confidence,
        "skipped_cells": report.skipped_cells,
        "unexpected_hits": report.unexpected_hits,
        "compared": entries,
    });
    let text = format!(
        "{}: {} samples, {} hits on {signal}, {} entries compared, max deviation {:.5}{}\n",
        if passed { "passed" } else { "FAILED" },
        report.samples,
        report.signal_hits,
        report.compared.len(),
        report.max_deviation,
        if report.low_confidence { " (low confidence)" } else { "" }
    );
    Ok(Report::new(if passed { EXIT_OK } else { EXIT_MISMATCH }, json, text))
}

fn cmd_multi(instance: &Path, jb_paths: &[PathBuf], semantics: Semantics) -> Result<Report, CliError> {
    let (model, _) = load_instance(instance)?;
    let jbs = jb_paths.iter().map(|p| load_jb(&model, p)).collect::<Result<Vec<_>, _>>()?;
    let sem = match semantics {
        Semantics::Pp => "pp",
        Semantics::Spp => "spp",
    };
    match synthesize_multi(&model, &jbs, semantics) {
        Ok(mk) => {
            let json = json!({
                "verdict": "implementable",
                "semantics": sem,
                "degraded": mk.degraded,
                "signals": mk.kernel.signals(),
                "weights": mk.weights.iter().map(rat).collect::<Vec<_>>(),
                "posteriors": mk.posteriors.iter().map(|d| by_state(&model, d.probs())).collect::<Vec<_>>(),
                "member_signal": mk
                    .member_signal
                    .iter()
                    .map(|s| s.map(|i| mk.kernel.signals()[i].clone()))
                    .collect::<Vec<_>>(),
                "kernel": io::kernel_to_raw(&model, &mk.kernel),
            });
            let mut text = format!("implementable ({sem}{})\n", if mk.degraded { ", degraded" } else { "" });
            for (i, sig) in mk.kernel.signals().iter().enumerate() {
                writeln!(text, "  {sig}: weight {} posterior {}", mk.weights[i], dist_text(&mk.posteriors[i])).unwrap();
            }
            text.push_str(&kernel_text(&model, &mk.kernel));
            Ok(Report::new(EXIT_OK, json, text))
        }
        Err(MultiError::Empty) => Err(CliError::Schema("no joint beliefs given".into())),
        Err(MultiError::PerMemberRejected { index, rejection }) => {
            let mut json = rejection_json(&model, &rejection);
            json["member"] = json!(index);
            let text = format!("member {index} {}", rejection_text(&model, &rejection));
            Ok(Report::new(EXIT_REJECTED, json, text))
        }
        Err(MultiError::NotPp { option }) => Ok(Report::new(
            EXIT_REJECTED,
            json!({"verdict": "not_pp", "option": by_state(&model, &option)}),
            format!("not PP; separating option u = {}\n", vec_text(&option)),
        )),
        Err(MultiError::NotSpp { member, option }) => Ok(Report::new(
            EXIT_REJECTED,
            json!({"verdict": "not_spp", "member": member, "option": by_state(&model, &option)}),
            format!("not SPP at member {member}; option u = {}\n", vec_text(&option)),
        )),
    }
}

fn vec_text(v: &[Rational]) -> String {
    format!("({})", v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
}

fn dist_text(d: &Distribution) -> String {
    vec_text(d.probs())
}

fn cmd_potential(path: &Path) -> Result<Report, CliError> {
    let raw: RawGame = parse(path)?;
    let game = StrategicGame::from_raw(&raw).map_err(|e| CliError::Schema(e.to_string()))?;
    match recover_potential(&game) {
        Ok(g) => {
            let mut table = Map::new();
            let mut text = String::from("potential\n");
            for (i, v) in g.iter().enumerate() {
                table.insert(game.profile_key(i), rat(v));
                writeln!(text, "  {:<12} {v}", game.profile_key(i)).unwrap();
            }
            Ok(Report::new(
                EXIT_OK,
                json!({"verdict": "potential", "potential": Value::Object(table)}),
                text,
            ))
        }
        Err(AdditiveError::Cycle { cycle, sum }) => {
            let keys: Vec<String> = cycle.iter().map(|&i| game.profile_key(i)).collect();
            let text = format!("no exact potential; deviation cycle {} sums to {sum}\n", keys.join(" -> "));
            Ok(Report::new(
                EXIT_REJECTED,
                json!({"verdict": "no_potential", "cycle": keys, "sum": rat(&sum)}),
                text,
            ))
        }
        Err(e) => unreachable!("deviation graph is antisymmetric and complete: {e}"),
    }
}

// ---- demos ---------------------------------------------------------------

struct Checks {
    items: Vec<Value>,
    text: String,
    ok: bool,
}

impl Checks {
    fn new(title: &str) -> Self {
        Checks {
            items: Vec::new(),
            text: format!("{title}\n"),
            ok: true,
        }
    }

    fn note(&mut self, line: impl AsRef<str>) {
        writeln!(self.text, "{}", line.as_ref()).unwrap();
    }

    fn check(&mut self, name: &str, expected: impl ToString, got: impl ToString) {
        let (expected, got) = (expected.to_string(), got.to_string());
        let pass = expected == got;
        self.ok &= pass;
        writeln!(
            self.text,
            "[{}] {name}: {got}{}",
            if pass { "ok" } else { "FAIL" },
            if pass { String::new() } else { format!(" (expected {expected})") }
        )
        .unwrap();
        self.items
            .push(json!({"check": name, "expected": expected, "got": got, "pass": pass}));
    }

    fn finish(self, demo: &str) -> Report {
        let code = if self.ok { EXIT_OK } else { EXIT_MISMATCH };
        Report::new(code, json!({"demo": demo, "passed": self.ok, "checks": self.items}), self.text)
    }
}

fn verdict_word(v: &Verdict) -> &'static str {
    if v.is_implementable() {
        "implementable"
    } else {
        "rejected"
    }
}

/// Expected payoff of `player` choosing `action` when the opponent plays
/// their dominant action in each state, written out term by term.
fn expected_payoff(player: usize, action: usize, belief: &[(usize, Rational)]) -> (String, Rational) {
    let mut terms = Vec::new();
    let mut total = Rational::zero();
    for (state, p) in belief {
        let game = fixtures::negotiation_stage_game(*state);
        let other = 1 - player;
        let dominant = (0..2)
            .find(|&b| {
                (0..2).all(|a| {
                    let at = |mine: usize, theirs: usize| {
                        let mut prof = [0; 2];
                        prof[other] = mine;
                        prof[player] = theirs;
                        game.payoff(game.index(&prof), other).clone()
                    };
                    at(b, a) >= at(1 - b, a)
                })
            })
            .expect("each stage game has a dominant action for both players");
        let mut prof = [0; 2];
        prof[player] = action;
        prof[other] = dominant;
        let u = game.payoff(game.index(&prof), player);
        let shown = if u.is_negative() { format!("({u})") } else { u.to_string() };
        terms.push(format!("{p}·{shown}"));
        total += p * u;
    }
    (terms.join(" + "), total)
}

fn demo_negotiation() -> Report {
    let mut c = Checks::new("negotiation: four states, mediator cells {w1,w3} and {w2,w4}");
    let model = fixtures::negotiation_model();
    let jb = fixtures::negotiation_jb(&model);
    c.note(jb_table(&model, &jb));
    let verdict = decide_implementable(&model, &jb);
    c.check("intro beliefs", "rejected", verdict_word(&verdict));
    if let Some(cert) = verdict.certificate() {
        c.note(format!("certificate: {}", certificate_text(&model, cert)));
        let (graph, phi) = phi_from_jb(&model, &jb).expect("players agree on shared edges");
        let recomputed = evaluate_certificate(&graph, model.mediator(), &phi, cert)
            .map(|p| p.to_string())
            .unwrap_or_else(|e| e.to_string());
        c.check("loop product", "1/6", recomputed);
    }
    for p in [Rational::frac(1, 3), Rational::frac(1, 4), Rational::frac(1, 2)] {
        let matched = fixtures::negotiation_matched(&model, &p);
        let v = decide_implementable(&model, &matched);
        let verified = match &v {
            Verdict::Implementable { kernel, signal, .. } => verify_exact(&model, kernel, signal, &matched).is_ok(),
            Verdict::Rejected(_) => false,
        };
        c.check(&format!("matched p = {p}"), "implementable", verdict_word(&v));
        c.check(&format!("matched p = {p} kernel reproduces beliefs"), true, verified);
    }

    let third = |n| Rational::frac(n, 3);
    let p1 = [(0, third(1)), (1, third(2))];
    let p2 = [(2, Rational::frac(3, 4)), (3, Rational::frac(1, 4))];
    for (player, belief, label, want) in [(0, &p1, "player 1", "-8/3"), (1, &p2, "player 2", "-3")] {
        for (action, name) in [(0, "A"), (1, "C")] {
            let (terms, value) = expected_payoff(player, action, belief);
            c.note(format!("{label} plays {name}: {terms} = {value}"));
            c.check(&format!("{label} payoff from {name}"), want, value);
        }
    }
    c.finish("negotiation")
}

fn demo_example1() -> Report {
    let mut c = Checks::new("example 1: five states, uniform prior");
    let model = fixtures::example1_model();
    let t1 = fixtures::table1(&model);
    let t2 = fixtures::table2(&model);

    c.note("Table 1 (no mediator signal):");
    c.note(jb_table(&model, &t1));
    let blank = SignalKernel::uninformative(&model);
    c.check(
        "uninformative signal reproduces Table 1",
        true,
        verify_exact(&model, &blank, "s", &t1).is_ok(),
    );

    c.note("Table 2:");
    c.note(jb_table(&model, &t2));
    let verdict = decide_implementable(&model, &t2);
    c.check("Table 2", "implementable", verdict_word(&verdict));
    if let Verdict::Implementable { kernel, signal, .. } = &verdict {
        c.note(format!("synthesized kernel:\n{}", kernel_text(&model, kernel)));
        let row = kernel.row(kernel.signal(signal).expect("named signal"));
        let ratios: Vec<String> = row
            .iter()
            .map(|p| p.checked_div(&row[0]).expect("positive").to_string())
            .collect();
        c.check("signal ratios across states", "1:2:2:1:2", ratios.join(":"));
        c.check(
            "synthesized kernel reproduces Table 2",
            true,
            verify_exact(&model, kernel, signal, &t2).is_ok(),
        );
    }
    let given = fixtures::example1_kernel(&model);
    c.check(
        "kernel (1/5,2/5,2/5,1/5,2/5) reproduces Table 2",
        true,
        verify_exact(&model, &given, "s", &t2).is_ok(),
    );

    let modified = fixtures::table2_modified(&model);
    c.note("Table 2 with player 1 at w4, w5 believing (0,0,0,1/5,4/5):");
    let v = decide_implementable(&model, &modified);
    c.check("modified table", "rejected", verdict_word(&v));
    if let Some(cert) = v.certificate() {
        c.note(format!("certificate: {}", certificate_text(&model, cert)));
        let (graph, phi) = phi_from_jb(&model, &modified).expect("players agree on shared edges");
        let product = evaluate_certificate(&graph, model.mediator(), &phi, cert).ok();
        c.check(
            "certificate product differs from 1",
            true,
            product.is_some_and(|p| !p.is_one()),
        );
    }
    c.finish("example1")
}
