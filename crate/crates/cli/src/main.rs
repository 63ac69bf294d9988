//! Command-line front end: graph and source files in, reports out.
//!
//! Exit status: 0 when the answer is positive (derived, separated, valid),
//! 2 when it is negative, 1 on any error.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use dofusion_core::criteria::{backdoor_estimand, enumerate_backdoor_sets, find_frontdoor, frontdoor_estimand, Covariates};
use dofusion_core::engine::{identify, recover, transport, verify, Derivation, Method, Outcome, Report, SearchBudget};
use dofusion_core::estimand::{parse, render_in, Domain, Estimand, Format, Query, SourceCatalog};
use dofusion_core::fixtures::{Task, ALL};
use dofusion_core::graph::{Graph, VertexSet};
use dofusion_core::oracle::max_abs_error;
use dofusion_core::separation::{d_separated, implied_independencies};
use dofusion_core::text::{parse_graph, parse_sources};

/// Largest oracle error accepted by `validate`.
const TOLERANCE: f64 = 1e-9;

#[derive(Parser, Debug)]
#[command(name = "dofusion", version, about = "Causal identification, recovery and transport by do-calculus derivation")]
struct Cli {
    /// Graph file.
    #[arg(long, global = true)]
    graph: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Text)]
    format: OutputFormat,
    /// First oracle seed; validation uses seeds seed..seed+n.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    budget: BudgetArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct BudgetArgs {
    /// Longest derivation the search considers.
    #[arg(long, global = true)]
    max_steps: Option<usize>,
    /// Most symbols in one probability term.
    #[arg(long, global = true)]
    max_width: Option<usize>,
    /// Most expressions the search expands.
    #[arg(long, global = true)]
    max_states: Option<usize>,
}

impl BudgetArgs {
    fn budget(&self) -> SearchBudget {
        let d = SearchBudget::default();
        SearchBudget {
            max_steps: self.max_steps.unwrap_or(d.max_steps),
            max_term_width: self.max_width.unwrap_or(d.max_term_width),
            max_states: self.max_states.unwrap_or(d.max_states),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Text,
    Latex,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Test a d-separation statement written `X | Y | Z` (Z optional).
    Dsep {
        #[arg(required = true, num_args = 1..)]
        statement: Vec<String>,
    },
    /// List the independencies the graph implies.
    CiList {
        #[arg(long, default_value_t = 1)]
        max_given: usize,
    },
    /// Find adjustment sets for the effect of X on Y.
    Adjust {
        #[arg(long, conflicts_with = "frontdoor", required_unless_present = "frontdoor")]
        backdoor: bool,
        #[arg(long)]
        frontdoor: bool,
        x: String,
        y: String,
    },
    /// Identify a query from target-population data.
    Identify(TaskArgs),
    /// Recover a query from selection-biased data.
    Recover(TaskArgs),
    /// Transport a query from source populations.
    Transport {
        #[command(flatten)]
        task: TaskArgs,
        /// Only use these source labels (plus target data).
        #[arg(long, value_delimiter = ',')]
        domains: Option<Vec<String>>,
    },
    /// Run the oracle check: the bundled examples, or one query with --graph.
    Validate {
        #[arg(long, default_value_t = 100)]
        seeds: u64,
        query: Option<String>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = TaskKind::Identify)]
        task: TaskKind,
    },
    /// Replay a derivation (bare, or inside a JSON report) against the graph.
    CheckDerivation { file: PathBuf },
}

#[derive(Args, Debug)]
struct TaskArgs {
    /// Query such as "P(y|do(x))".
    query: String,
    /// Source file describing the available data.
    #[arg(long)]
    data: PathBuf,
    /// Also evaluate the result on this many oracle models.
    #[arg(long, default_value_t = 0)]
    validate: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TaskKind {
    Identify,
    Recover,
    Transport,
}

#[derive(Serialize, Debug)]
struct Validation {
    seeds: u64,
    max_abs_error: f64,
}

/// One schema for every command; fields a command has no use for are null.
#[derive(Serialize, Debug)]
struct JsonReport {
    query: String,
    status: String,
    method: Option<Method>,
    estimand_text: Option<String>,
    estimand_latex: Option<String>,
    derivation: Option<Derivation>,
    validation: Option<Validation>,
    details: Value,
}

impl JsonReport {
    fn new(query: impl Into<String>, status: impl Into<String>) -> Self {
        JsonReport {
            query: query.into(),
            status: status.into(),
            method: None,
            estimand_text: None,
            estimand_latex: None,
            derivation: None,
            validation: None,
            details: Value::Null,
        }
    }

    fn with_estimand(mut self, e: &Estimand, g: &Graph) -> Self {
        self.estimand_text = Some(render_in(e, Format::Text, g));
        self.estimand_latex = Some(render_in(e, Format::Latex, g));
        self
    }
}

/// What a command hands back: the report, its text rendering and whether
/// the answer was positive.
struct Answer {
    report: JsonReport,
    text: String,
    positive: bool,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_graph(cli: &Cli) -> Result<Graph> {
    let path = cli.graph.as_ref().ok_or_else(|| anyhow!("this command needs --graph"))?;
    parse_graph(&read(path)?).with_context(|| format!("in {}", path.display()))
}

fn load_sources(path: &Path, g: &Graph) -> Result<SourceCatalog> {
    parse_sources(&read(path)?, g).with_context(|| format!("in {}", path.display()))
}

fn vertex_set(text: &str, g: &Graph) -> Result<VertexSet> {
    let s = VertexSet::from_names(text.split([',', ' ']).map(str::trim).filter(|v| !v.is_empty()));
    if let Some(v) = s.iter().find(|v| !g.has_vertex(v)) {
        bail!("unknown vertex {v}");
    }
    Ok(s)
}

fn parse_query(text: &str, g: &Graph) -> Result<Query> {
    match parse(text, g)? {
        Estimand::Term(mut t) => {
            t.domain = Domain::Target;
            Ok(Query::new(t))
        }
        _ => bail!("a query is a single probability term, got `{text}`"),
    }
}

fn dsep(g: &Graph, statement: &[String]) -> Result<Answer> {
    let joined = statement.join(" ");
    let parts: Vec<&str> = joined.split('|').collect();
    if !(2..=3).contains(&parts.len()) {
        bail!("expected `X | Y | Z`, got `{joined}`");
    }
    let x = vertex_set(parts[0], g)?;
    let y = vertex_set(parts[1], g)?;
    let z = match parts.get(2) {
        Some(p) => vertex_set(p, g)?,
        None => VertexSet::new(),
    };
    let separated = d_separated(g, &x, &y, &z)?;
    let query = format!("{x} ⫫ {y} | {z}");
    let status = if separated { "separated" } else { "connected" };
    Ok(Answer { text: format!("{query}: {status}"), report: JsonReport::new(query, status), positive: separated })
}

fn ci_list(g: &Graph, max_given: usize) -> Answer {
    let list: Vec<String> = implied_independencies(g, max_given).iter().map(|s| s.to_string()).collect();
    let mut report = JsonReport::new(format!("independencies given at most {max_given}"), "ok");
    report.details = json!(list);
    Answer { text: list.join("\n"), report, positive: true }
}

fn adjust(g: &Graph, x: &str, y: &str, frontdoor: bool) -> Result<Answer> {
    let (x, y) = (vertex_set(x, g)?, vertex_set(y, g)?);
    let query = Query::effect(&y.iter().map(String::as_str).collect::<Vec<_>>(), &x.iter().map(String::as_str).collect::<Vec<_>>());
    let qtext = render_in(&query.estimand(), Format::Text, g);
    if frontdoor {
        let Some((m, w)) = find_frontdoor(g, &x, &y, 3, Covariates::Most) else {
            return Ok(Answer { text: "no front-door set".into(), report: JsonReport::new(qtext, "none"), positive: false });
        };
        let e = frontdoor_estimand(g, &x, &y, &m, &w)?;
        let mut report = JsonReport::new(qtext, "found").with_estimand(&e, g);
        report.details = json!({ "mediators": m, "covariates": w });
        let text = format!("mediators {m}, covariates {w}\n{}", render_in(&e, Format::Text, g));
        return Ok(Answer { text, report, positive: true });
    }
    let universe = g.endogenous().difference(&x.union(&y));
    let sets = enumerate_backdoor_sets(g, &x, &y, &universe)?;
    let Some(first) = sets.minimal_sets.first() else {
        return Ok(Answer { text: "no backdoor set".into(), report: JsonReport::new(qtext, "none"), positive: false });
    };
    let e = backdoor_estimand(g, &x, &y, first)?;
    let mut report = JsonReport::new(qtext, "found").with_estimand(&e, g);
    report.details = json!({ "admissible_sets": sets.admissible_sets, "minimal_sets": sets.minimal_sets });
    let mut text: Vec<String> =
        sets.admissible_sets.iter().map(|s| format!("{s}{}", if sets.minimal_sets.contains(s) { "  (minimal)" } else { "" })).collect();
    text.push(render_in(&e, Format::Text, g));
    Ok(Answer { text: text.join("\n"), report, positive: true })
}

fn method_text(m: &Method) -> String {
    match m {
        Method::Backdoor { covariates } => format!("backdoor adjustment for {covariates}"),
        Method::Frontdoor { mediators, covariates } => format!("front door through {mediators} given {covariates}"),
        Method::SurrogateExperiment { intervened } => format!("surrogate experiment on {intervened}"),
        Method::SelectionBackdoor { covariates } => format!("selection backdoor with {covariates}"),
        Method::Transport { covariates, source } if source.is_empty() => format!("transport with {covariates}"),
        Method::Transport { covariates, source } => format!("transport from {source} with {covariates}"),
        Method::Search => "derivation search".into(),
    }
}

fn trace(d: &Derivation) -> String {
    d.steps
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let premise = s.premise.as_ref().map(|p| format!("  since {p}")).unwrap_or_default();
            format!("{:>3}. {}: {} → {}{premise}", i + 1, s.rule, s.before, s.after)
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn run_task(kind: TaskKind, q: &Query, g: &Graph, cat: &SourceCatalog, budget: &SearchBudget) -> Result<Report> {
    Ok(match kind {
        TaskKind::Identify => identify(q, g, cat, budget),
        TaskKind::Recover => recover(q, g, cat, budget),
        TaskKind::Transport => transport(q, g, cat, budget),
    }?)
}

fn answer_task(kind: TaskKind, q: &Query, g: &Graph, cat: &SourceCatalog, budget: &SearchBudget, seeds: (u64, u64)) -> Result<Answer> {
    let r = run_task(kind, q, g, cat, budget)?;
    let qtext = render_in(&q.estimand(), Format::Text, g);
    let mut report = JsonReport::new(qtext, r.outcome.status());
    report.method = Some(r.method.clone());
    let (text, positive) = match &r.outcome {
        Outcome::Derived { derivation } => {
            let e = derivation.final_estimand(g)?;
            report = report.with_estimand(&e, g);
            report.derivation = Some(derivation.clone());
            let mut lines = vec![render_in(&e, Format::Text, g), format!("method: {}", method_text(&r.method)), trace(derivation)];
            if seeds.1 > 0 {
                let domains: BTreeSet<Domain> = cat.domains();
                let err = max_abs_error(&e, q, g, &domains, seeds.0..seeds.0 + seeds.1)?;
                lines.push(format!("oracle: max error {err:.1e} over {} seeds", seeds.1));
                report.validation = Some(Validation { seeds: seeds.1, max_abs_error: err });
            }
            (lines.join("\n"), true)
        }
        Outcome::NotDerivedWithinBudget { expanded } => (format!("not derived within budget ({expanded} expressions expanded)"), false),
        Outcome::ProvablyNot { reason } => (format!("provably not derivable: {reason}"), false),
    };
    Ok(Answer { report, text, positive })
}

fn validate_fixtures(seeds: u64, first: u64) -> Result<Answer> {
    let mut lines = Vec::new();
    let mut rows = Vec::new();
    let mut all_ok = true;
    for f in ALL {
        let (g, q, cat) = (f.graph(), f.query(), f.catalog());
        let kind = match f.task {
            Task::Identify => TaskKind::Identify,
            Task::Recover => TaskKind::Recover,
            Task::Transport => TaskKind::Transport,
        };
        let r = run_task(kind, &q, &g, &cat, &SearchBudget::default())?;
        let err = match r.outcome.derivation() {
            Some(d) => Some(max_abs_error(&d.final_estimand(&g)?, &q, &g, &cat.domains(), first..first + seeds)?),
            None => None,
        };
        let expected = matches!(f.expect, dofusion_core::fixtures::Expect::Derived) == err.is_some();
        let ok = expected && err.is_none_or(|e| e <= TOLERANCE);
        all_ok &= ok;
        let shown = err.map_or("-".to_string(), |e| format!("{e:.1e}"));
        lines.push(format!("{} {:<26} {:<26} {shown}", if ok { "ok  " } else { "FAIL" }, f.name, r.outcome.status()));
        rows.push(json!({ "fixture": f.name, "status": r.outcome.status(), "max_abs_error": err, "ok": ok }));
    }
    let mut report = JsonReport::new("bundled examples", if all_ok { "ok" } else { "failed" });
    report.details = json!(rows);
    Ok(Answer { text: lines.join("\n"), report, positive: all_ok })
}

fn check_derivation(g: &Graph, path: &Path) -> Result<Answer> {
    let value: Value = serde_json::from_str(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
    let inner = value.get("derivation").cloned().unwrap_or(value);
    let d: Derivation = serde_json::from_value(inner).context("not a derivation")?;
    let v = verify(&d, g);
    let mut report = JsonReport::new(render_in(&d.query.estimand(), Format::Text, g), if v.ok { "valid" } else { "invalid" });
    if let Ok(e) = d.final_estimand(g) {
        report = report.with_estimand(&e, g);
    }
    report.details = json!(v);
    let text = match (&v.failed_step, &v.reason) {
        _ if v.ok => format!("valid: {} steps", d.steps.len()),
        (Some(i), Some(r)) => format!("invalid at step {}: {r}", i + 1),
        _ => "invalid".into(),
    };
    report.derivation = Some(d);
    Ok(Answer { report, text, positive: v.ok })
}

fn execute(cli: &Cli) -> Result<Answer> {
    let budget = cli.budget.budget();
    match &cli.command {
        Command::Dsep { statement } => dsep(&load_graph(cli)?, statement),
        Command::CiList { max_given } => Ok(ci_list(&load_graph(cli)?, *max_given)),
        Command::Adjust { frontdoor, x, y, .. } => adjust(&load_graph(cli)?, x, y, *frontdoor),
        Command::Identify(t) | Command::Recover(t) => {
            let kind = if matches!(cli.command, Command::Identify(_)) { TaskKind::Identify } else { TaskKind::Recover };
            let g = load_graph(cli)?;
            let (q, cat) = (parse_query(&t.query, &g)?, load_sources(&t.data, &g)?);
            answer_task(kind, &q, &g, &cat, &budget, (cli.seed, t.validate))
        }
        Command::Transport { task: t, domains } => {
            let g = load_graph(cli)?;
            let (q, mut cat) = (parse_query(&t.query, &g)?, load_sources(&t.data, &g)?);
            if let Some(keep) = domains {
                cat = SourceCatalog::new(
                    cat.sources
                        .into_iter()
                        .filter(|s| matches!(&s.domain, Domain::Source(l) if keep.contains(l)) || s.domain.is_target())
                        .collect(),
                );
            }
            answer_task(TaskKind::Transport, &q, &g, &cat, &budget, (cli.seed, t.validate))
        }
        Command::Validate { seeds, query: None, .. } => validate_fixtures(*seeds, cli.seed),
        Command::Validate { seeds, query: Some(text), data, task } => {
            let g = load_graph(cli)?;
            let data = data.as_ref().ok_or_else(|| anyhow!("validating a query needs --data"))?;
            let (q, cat) = (parse_query(text, &g)?, load_sources(data, &g)?);
            let mut a = answer_task(*task, &q, &g, &cat, &budget, (cli.seed, (*seeds).max(1)))?;
            if let Some(v) = &a.report.validation {
                a.positive &= v.max_abs_error <= TOLERANCE;
            }
            Ok(a)
        }
        Command::CheckDerivation { file } => check_derivation(&load_graph(cli)?, file),
    }
}

fn emit(cli: &Cli, a: &Answer) -> Result<()> {
    match cli.format {
        OutputFormat::Text => println!("{}", a.text),
        OutputFormat::Latex => match &a.report.estimand_latex {
            Some(l) => println!("{l}"),
            None => println!("{}", a.text),
        },
        OutputFormat::Json => println!("{}", serde_json::to_string_pretty(&a.report)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(&cli).and_then(|a| emit(&cli, &a).map(|_| a.positive)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
