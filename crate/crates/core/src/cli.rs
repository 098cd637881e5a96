//! Command-line front end: argument parsing, dispatch and report writing.
//!
//! Every report embeds the configuration that produced it and the crate
//! version. Random output depends only on the seed, never on the number of
//! worker threads.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::canonical::canonical_code;
use crate::dynamics::{
    check_system_S, empirical_state_vector, initial_state, step, time_invariance_residual, DynamicsError,
    EmpiricalState, EvolutionOperator, InvarianceReport, StateVector, SystemCheck,
};
use crate::ensemble::{fold_draws, map_draws, stream};
use crate::newick::{emit_newick, parse_newick_with_lengths, NewickError};
use crate::oracle::{
    check_prune_invariance, enumerate_trees, exact_measure, planted_gw_measure, OracleError, PruneCheck,
};
use crate::order::compute_orders;
use crate::params::{Coefficients, CriticalTokunaga, ParamError, Tail, TokunagaParams};
use crate::prune::prune_trajectory;
use crate::sampler::{
    decorate_edge_lengths, generate_gw_planted, generate_process, generate_recursive, generate_with_order, EdgeLengths,
    GenerationError, GenerationLimits, DEFAULT_MAX_VERTICES,
};
use crate::stats::{
    estimate_tokunaga, fit_tokunaga_ac, horton_report, principal_subtree_tests_with, tokunaga_depends_only_on_gap,
    GapReport, HortonAccumulator, HortonReport, PrincipalReport, StatsError, TokunagaFit, TokunagaMatrix,
    PRINCIPAL_MAX_VERTICES,
};
use crate::tree::Tree;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid parameters: {0}")]
    Param(#[from] ParamError),
    #[error("{0}")]
    Config(String),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("Newick input: {0}")]
    Newick(#[from] NewickError),
    #[error(transparent)]
    Generation(#[from] GenerationError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("CSV output: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON output: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Parser, Debug, Clone)]
#[command(
    name = "tokunaga",
    version,
    about = "Geometric branching processes, Horton pruning and Tokunaga self-similarity"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,
    /// Write the report to this file instead of standard output.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Worker threads. Results are identical for any value.
    #[arg(long, env = "TOKUNAGA_THREADS", global = true)]
    pub threads: Option<usize>,
}

impl Cli {
    pub fn config(&self) -> RunConfig {
        RunConfig {
            command: self.command.clone(),
            format: self.format,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Everything that determines a report.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub format: Format,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum Command {
    /// Draw random trees and print them as Newick.
    Generate(GenerateArgs),
    /// Apply Horton pruning to Newick trees.
    Prune(PruneArgs),
    /// Tokunaga matrix, Horton ratios and principal-subtree tests.
    Stats(StatsArgs),
    /// Evolve the state vector and compare with simulation.
    Dynamics(DynamicsArgs),
    /// Check time invariance; exits with status 1 when it fails.
    Invariance(InvarianceArgs),
    /// Check prune invariance exactly; exits with status 1 when it fails.
    Oracle(OracleArgs),
}

/// Tokunaga coefficients and root-order parameter.
#[derive(Args, Debug, Clone, Serialize)]
pub struct ParamArgs {
    /// Alone: the critical family T_k = (c-1) c^(k-1). With --a: the ratio
    /// of T_k = a c^(k-1).
    #[arg(long)]
    pub c: Option<f64>,
    /// Leading coefficient of T_k = a c^(k-1).
    #[arg(long, requires = "c")]
    pub a: Option<f64>,
    /// Explicit coefficients T_1,T_2,... (zero afterwards unless --tail-ratio).
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["c", "a"])]
    pub tok: Option<Vec<f64>>,
    /// Continue --tok geometrically with this ratio.
    #[arg(long, requires = "tok")]
    pub tail_ratio: Option<f64>,
    /// Root-order parameter: ord - 1 ~ Geom(p).
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
}

impl ParamArgs {
    pub fn params(&self) -> Result<TokunagaParams, CliError> {
        let coefficients = match (&self.tok, self.c, self.a) {
            (Some(head), _, _) => Coefficients::Explicit {
                head: head.clone(),
                tail: match self.tail_ratio {
                    Some(ratio) => Tail::Geometric { ratio },
                    None => Tail::Zero,
                },
            },
            (None, Some(c), Some(a)) => Coefficients::Geometric { a, c },
            (None, Some(c), None) => {
                CriticalTokunaga::new(c)?;
                Coefficients::Geometric { a: c - 1.0, c }
            }
            (None, None, _) => {
                return Err(CliError::Config(
                    "no Tokunaga coefficients: pass --c C for the critical family, --a A --c C, or --tok T1,T2,..."
                        .into(),
                ))
            }
        };
        Ok(TokunagaParams::new(self.p, coefficients)?)
    }

    /// The critical family selected by `--c` alone with `p = 1/2`.
    pub fn critical(&self) -> Option<CriticalTokunaga> {
        match (self.c, self.a, &self.tok) {
            (Some(c), None, None) if self.p == 0.5 => CriticalTokunaga::new(c).ok(),
            _ => None,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Branch-by-branch construction.
    Recursive,
    /// Discrete-time branching process.
    Process,
    /// Critical binary Galton-Watson tree (ignores the coefficients).
    Gw,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Method::Recursive)]
    pub method: Method,
    /// Condition on this order (recursive method only).
    #[arg(long)]
    pub order: Option<u32>,
    /// Vertex budget per tree; larger draws are counted and dropped.
    #[arg(long, default_value_t = DEFAULT_MAX_VERTICES)]
    pub max_vertices: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct PruneArgs {
    /// File with one or more Newick trees.
    #[arg(long, required_unless_present = "newick")]
    pub input: Option<PathBuf>,
    /// A Newick tree given inline.
    #[arg(long, conflicts_with = "input")]
    pub newick: Option<String>,
    /// Number of prunings.
    #[arg(long, default_value_t = 1, conflicts_with = "trajectory")]
    pub times: u32,
    /// Prune until the tree is empty and report every step.
    #[arg(long)]
    pub trajectory: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct StatsArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Analyse Newick trees from this file instead of generating them.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Condition generated trees on this order and add a Horton report.
    #[arg(long)]
    pub order: Option<u32>,
    /// Attach unit-mean exponential edge lengths (or use the input's).
    #[arg(long)]
    pub lengths: bool,
    /// Relative tolerance of the gap-dependence check.
    #[arg(long, default_value_t = 0.1)]
    pub tol: f64,
    /// Also run the principal-subtree tests (critical family only).
    #[arg(long)]
    pub principal: bool,
    #[arg(long, default_value_t = DEFAULT_MAX_VERTICES)]
    pub max_vertices: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct DynamicsArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, default_value_t = 20)]
    pub kmax: u32,
    /// Time steps.
    #[arg(long, default_value_t = 5)]
    pub steps: u32,
    /// Monte Carlo samples for the empirical state vector (0 skips it).
    #[arg(long, default_value_t = 0)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct InvarianceArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, default_value_t = 40)]
    pub kmax: u32,
    /// Largest residual accepted on top of the truncation bound.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct OracleArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, default_value_t = 2)]
    pub max_order: u32,
    /// Side branches per branch in the enumeration.
    #[arg(long, default_value_t = 6)]
    pub max_side: usize,
    /// Width allowed for the certified preimage sums.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Accepted deviation between the two sides.
    #[arg(long, default_value_t = 1e-9)]
    pub abs_tol: f64,
}

/// A finished run: the rendered report and the process exit status.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunOutput {
    pub text: String,
    pub exit_code: i32,
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    version: &'static str,
    config: &'a RunConfig,
    params: Option<TokunagaParams>,
    passed: Option<bool>,
    result: T,
}

/// Runs one command and renders its report.
pub fn run(config: &RunConfig) -> Result<RunOutput, CliError> {
    match &config.command {
        Command::Generate(a) => run_generate(config, a),
        Command::Prune(a) => run_prune(config, a),
        Command::Stats(a) => run_stats(config, a),
        Command::Dynamics(a) => run_dynamics(config, a),
        Command::Invariance(a) => run_invariance(config, a),
        Command::Oracle(a) => run_oracle(config, a),
    }
}

fn json<T: Serialize>(
    config: &RunConfig,
    params: Option<TokunagaParams>,
    passed: Option<bool>,
    result: T,
) -> Result<RunOutput, CliError> {
    let report = Report {
        version: env!("CARGO_PKG_VERSION"),
        config,
        params,
        passed,
        result,
    };
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    Ok(RunOutput {
        text,
        exit_code: exit_code(passed),
    })
}

fn csv_output(rows: Vec<Vec<String>>, passed: Option<bool>) -> Result<RunOutput, CliError> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(RunOutput {
        text: String::from_utf8(bytes).expect("CSV of UTF-8 fields is UTF-8"),
        exit_code: exit_code(passed),
    })
}

fn exit_code(passed: Option<bool>) -> i32 {
    i32::from(passed == Some(false))
}

fn read_to_string(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

/// A parsed tree with the branch length of each vertex, if one was given.
pub type LengthedTree = (Tree, Vec<Option<f64>>);

/// Splits text into `;`-terminated Newick trees and parses each.
pub fn read_newick_trees(text: &str) -> Result<Vec<LengthedTree>, NewickError> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut depth_comment = false;
    let mut quoted = false;
    for (i, ch) in text.char_indices() {
        match ch {
            '\'' if !depth_comment => quoted = !quoted,
            '[' if !quoted => depth_comment = true,
            ']' if !quoted => depth_comment = false,
            ';' if !quoted && !depth_comment => {
                out.push(parse_newick_with_lengths(&text[start..=i])?);
                start = i + 1;
            }
            _ => {}
        }
    }
    if !text[start..].trim().is_empty() {
        // Let the parser report the missing terminator with a position.
        out.push(parse_newick_with_lengths(&text[start..])?);
    }
    Ok(out)
}

fn newick_or_empty(t: &Tree) -> String {
    emit_newick(t).unwrap_or_default()
}

#[derive(Serialize)]
struct GeneratedTree {
    order: u32,
    leaves: usize,
    newick: String,
}

#[derive(Serialize)]
struct GenerateResult {
    requested: usize,
    aborted: usize,
    trees: Vec<GeneratedTree>,
}

fn run_generate(config: &RunConfig, a: &GenerateArgs) -> Result<RunOutput, CliError> {
    let limits = GenerationLimits::with_max_vertices(a.max_vertices);
    let params = match a.method {
        Method::Gw => None,
        _ => Some(a.params.params()?),
    };
    if a.order.is_some() && a.method != Method::Recursive {
        return Err(CliError::Config("--order works with --method recursive only".into()));
    }
    let draws = map_draws(a.seed, a.n, |r| {
        let tree = match (a.method, &params) {
            (Method::Gw, _) => generate_gw_planted(&limits, r),
            (Method::Process, Some(p)) => generate_process(p, &limits, r).map(|(t, _)| t),
            (_, Some(p)) => match a.order {
                Some(k) => generate_with_order(p, k, &limits, r),
                None => generate_recursive(p, &limits, r),
            },
            (_, None) => unreachable!("parameters resolved above"),
        };
        match tree {
            Ok(t) => Ok(Some(GeneratedTree {
                order: compute_orders(&t).tree_order(),
                leaves: t.leaf_count(),
                newick: newick_or_empty(&t),
            })),
            Err(GenerationError::BudgetExceeded { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    });
    let mut trees = Vec::with_capacity(a.n);
    for d in draws {
        if let Some(t) = d? {
            trees.push(t);
        }
    }
    let result = GenerateResult {
        requested: a.n,
        aborted: a.n - trees.len(),
        trees,
    };
    match config.format {
        Format::Json => json(config, params, None, result),
        Format::Csv => {
            let mut rows = vec![vec!["index".into(), "order".into(), "leaves".into(), "newick".into()]];
            for (i, t) in result.trees.into_iter().enumerate() {
                rows.push(vec![i.to_string(), t.order.to_string(), t.leaves.to_string(), t.newick]);
            }
            csv_output(rows, None)
        }
    }
}

#[derive(Serialize)]
struct PruneStep {
    step: u32,
    order: u32,
    newick: String,
}

fn run_prune(config: &RunConfig, a: &PruneArgs) -> Result<RunOutput, CliError> {
    let text = match (&a.input, &a.newick) {
        (Some(path), _) => read_to_string(path)?,
        (None, Some(s)) => s.clone(),
        (None, None) => return Err(CliError::Config("pass --input FILE or --newick TEXT".into())),
    };
    let trees = read_newick_trees(&text)?;
    let mut result: Vec<Vec<PruneStep>> = Vec::with_capacity(trees.len());
    for (t, _) in &trees {
        let traj = prune_trajectory(t);
        let steps: Vec<PruneStep> = traj
            .iter()
            .enumerate()
            .filter(|&(s, _)| {
                if a.trajectory {
                    true
                } else {
                    s as u32 == a.times.min(traj.len() as u32 - 1)
                }
            })
            .map(|(s, p)| PruneStep {
                step: s as u32,
                order: compute_orders(p).tree_order(),
                newick: newick_or_empty(p),
            })
            .collect();
        result.push(steps);
    }
    match config.format {
        Format::Json => json(config, None, None, result),
        Format::Csv => {
            let mut rows = vec![vec!["tree".into(), "step".into(), "order".into(), "newick".into()]];
            for (i, steps) in result.into_iter().enumerate() {
                for s in steps {
                    rows.push(vec![i.to_string(), s.step.to_string(), s.order.to_string(), s.newick]);
                }
            }
            csv_output(rows, None)
        }
    }
}

#[derive(Serialize)]
struct StatsResult {
    trees: u64,
    aborted: usize,
    tokunaga: TokunagaMatrix,
    gap: GapReport,
    fit: Option<TokunagaFit>,
    horton: Option<HortonReport>,
    principal: Option<PrincipalReport>,
}

struct StatsAcc {
    tm: TokunagaMatrix,
    horton: Option<HortonAccumulator>,
    aborted: usize,
}

fn run_stats(config: &RunConfig, a: &StatsArgs) -> Result<RunOutput, CliError> {
    let (params, tm, horton, aborted) = match &a.input {
        Some(path) => {
            let trees = read_newick_trees(&read_to_string(path)?)?;
            let (trees, lengths): (Vec<Tree>, Vec<_>) = trees.into_iter().unzip();
            let tm = estimate_tokunaga(&trees)?;
            let orders: Vec<u32> = trees.iter().map(|t| compute_orders(t).tree_order()).collect();
            let same = orders.windows(2).all(|w| w[0] == w[1]);
            let horton = if same && orders[0] >= 4 {
                let lengths = if a.lengths { input_lengths(&lengths) } else { None };
                Some(horton_report(&trees, lengths.as_deref())?)
            } else {
                None
            };
            (None, tm, horton, 0)
        }
        None => {
            let params = a.params.params()?;
            let limits = GenerationLimits::with_max_vertices(a.max_vertices);
            let horton_order = a.order.filter(|&k| k >= 4);
            if let Some(k) = a.order {
                params.check_order(k)?;
            }
            let acc = fold_draws(
                a.seed,
                a.n,
                || StatsAcc {
                    tm: TokunagaMatrix::new(),
                    horton: horton_order.map(|k| HortonAccumulator::new(k).expect("order at least 4")),
                    aborted: 0,
                },
                |acc, r| {
                    let tree = match a.order {
                        Some(k) => generate_with_order(&params, k, &limits, r),
                        None => generate_recursive(&params, &limits, r),
                    };
                    let Ok(tree) = tree else {
                        acc.aborted += 1;
                        return;
                    };
                    acc.tm.add_tree(&tree);
                    if let Some(h) = &mut acc.horton {
                        let lengths = a.lengths.then(|| decorate_edge_lengths(&tree, r));
                        h.add(&tree, lengths.as_ref())
                            .expect("trees share the conditioned order");
                    }
                },
                |acc, part| {
                    acc.tm.merge(part.tm);
                    if let (Some(h), Some(p)) = (&mut acc.horton, part.horton) {
                        h.merge(p).expect("accumulators share the order");
                    }
                    acc.aborted += part.aborted;
                },
            );
            let horton = match acc.horton {
                Some(h) if h.trees() > 0 => Some(h.report()?),
                _ => None,
            };
            (Some(params), acc.tm, horton, acc.aborted)
        }
    };
    let principal = if a.principal {
        let c = a
            .params
            .critical()
            .ok_or_else(|| CliError::Config("--principal needs the critical family: --c C with p = 0.5".into()))?;
        let limits = GenerationLimits::with_max_vertices(a.max_vertices.min(PRINCIPAL_MAX_VERTICES));
        let mut rng = stream(a.seed, u64::MAX);
        Some(principal_subtree_tests_with(&c, a.n, &limits, &mut rng)?)
    } else {
        None
    };
    let result = StatsResult {
        trees: tm.trees,
        aborted,
        gap: tokunaga_depends_only_on_gap(&tm, a.tol),
        fit: fit_tokunaga_ac(&tm).ok(),
        tokunaga: tm,
        horton,
        principal,
    };
    match config.format {
        Format::Json => json(config, params, None, result),
        Format::Csv => csv_output(tokunaga_rows(&result.tokunaga), None),
    }
}

/// Edge lengths of parsed trees, when every edge has one.
fn input_lengths(lengths: &[Vec<Option<f64>>]) -> Option<Vec<EdgeLengths>> {
    lengths
        .iter()
        .map(|l| {
            let mut v = Vec::with_capacity(l.len());
            v.push(0.0);
            for x in &l[1..] {
                v.push((*x)?);
            }
            Some(EdgeLengths::new(v))
        })
        .collect()
}

/// Rows `i`, columns `j`; undefined cells are empty.
fn tokunaga_rows(tm: &TokunagaMatrix) -> Vec<Vec<String>> {
    let top = tm.max_order();
    let mut rows = Vec::new();
    let mut header = vec!["i".to_owned()];
    header.extend((2..=top).map(|j| format!("j={j}")));
    rows.push(header);
    for i in 1..top {
        let mut row = vec![i.to_string()];
        for j in 2..=top {
            row.push(if i < j {
                tm.estimate(i, j).map(|v| v.to_string()).unwrap_or_default()
            } else {
                String::new()
            });
        }
        rows.push(row);
    }
    rows
}

#[derive(Serialize)]
struct DynamicsResult {
    /// `x(0) = π`, `x(1)`, … from the truncated operator.
    trajectory: Vec<StateVector>,
    empirical: Option<EmpiricalState>,
    /// Largest standardized deviation of the empirical vector from the
    /// operator's prediction, over orders up to 6.
    max_z_score: Option<f64>,
}

fn run_dynamics(config: &RunConfig, a: &DynamicsArgs) -> Result<RunOutput, CliError> {
    let params = a.params.params()?;
    let op = EvolutionOperator::new(&params, a.kmax)?;
    let mut trajectory = vec![initial_state(params.p(), a.kmax)?];
    for _ in 0..a.steps {
        let next = step(&op, trajectory.last().expect("non-empty"))?;
        trajectory.push(next);
    }
    let empirical = if a.n > 0 {
        let mut rng = stream(a.seed, 0);
        Some(empirical_state_vector(&params, a.steps, a.n, &mut rng)?)
    } else {
        None
    };
    let max_z = empirical
        .as_ref()
        .map(|e| e.max_z_score(trajectory.last().expect("non-empty"), a.kmax.min(6)));
    let result = DynamicsResult {
        trajectory,
        empirical,
        max_z_score: max_z,
    };
    match config.format {
        Format::Json => json(config, Some(params), None, result),
        Format::Csv => {
            let mut header = vec!["source".to_owned(), "s".to_owned()];
            header.extend((1..=a.kmax).map(|k| format!("x{k}")));
            let mut rows = vec![header];
            let fmt = |source: &str, s: u32, x: &[f64]| {
                let mut r = vec![source.to_owned(), s.to_string()];
                r.extend((0..a.kmax as usize).map(|k| x.get(k).copied().unwrap_or(0.0).to_string()));
                r
            };
            for (s, x) in result.trajectory.iter().enumerate() {
                rows.push(fmt("operator", s as u32, &x.x));
            }
            if let Some(e) = &result.empirical {
                rows.push(fmt("empirical", e.s, &e.mean.x));
                rows.push(fmt("std_error", e.s, &e.std_error));
            }
            csv_output(rows, None)
        }
    }
}

#[derive(Serialize)]
struct InvarianceResult {
    invariance: InvarianceReport,
    /// `S_0 / S_k = Σ 2^-i S_i / S_{k+i}` for `k = 1, 2, …`, checked
    /// when `p = 1/2`.
    system_s: Vec<SystemCheck>,
}

fn run_invariance(config: &RunConfig, a: &InvarianceArgs) -> Result<RunOutput, CliError> {
    let params = a.params.params()?;
    let invariance = time_invariance_residual(&params, a.kmax)?;
    let system_s = if params.p() == 0.5 {
        (1..=(a.kmax / 2).min(5))
            .map(|k| check_system_S(&params, a.kmax, k))
            .collect::<Result<_, _>>()?
    } else {
        Vec::new()
    };
    let passed = invariance.is_invariant(a.tol);
    let result = InvarianceResult { invariance, system_s };
    match config.format {
        Format::Json => json(config, Some(params), Some(passed), result),
        Format::Csv => {
            let r = &result.invariance;
            let rows = vec![
                vec!["metric".into(), "value".into()],
                vec!["kmax".into(), r.kmax.to_string()],
                vec!["residual".into(), r.residual.to_string()],
                vec!["tail_bound".into(), r.tail_bound.to_string()],
                vec!["progeny_ratio".into(), r.progeny_ratio.to_string()],
                vec!["progeny_conserved".into(), r.progeny_conserved.to_string()],
                vec!["passed".into(), passed.to_string()],
            ];
            csv_output(rows, Some(passed))
        }
    }
}

#[derive(Serialize)]
struct ShapeCheck {
    code: String,
    order: u32,
    check: PruneCheck,
    passed: bool,
    /// `|μ - GW|` when the parameters are the critical family at `c = 2`.
    gw_difference: Option<f64>,
}

#[derive(Serialize)]
struct OracleResult {
    shapes: usize,
    enumerated_mass: f64,
    tail: f64,
    checks: Vec<ShapeCheck>,
}

fn run_oracle(config: &RunConfig, a: &OracleArgs) -> Result<RunOutput, CliError> {
    let params = a.params.params()?;
    let e = enumerate_trees(a.max_order, a.max_side, &params)?;
    let gw = a.params.critical().is_some_and(|c| c.c == 2.0);
    let mut checks = Vec::with_capacity(e.distribution.mass.len());
    for code in e.distribution.mass.keys() {
        let t = code.to_tree();
        let check = check_prune_invariance(&t, &params, a.tol)?;
        let gw_difference = if gw {
            Some((exact_measure(&t, &params)? - planted_gw_measure(&t)?).abs())
        } else {
            None
        };
        let passed = check.passes(a.abs_tol) && gw_difference.is_none_or(|d| d <= 1e-12);
        checks.push(ShapeCheck {
            code: canonical_code(&t).to_string(),
            order: compute_orders(&t).tree_order(),
            check,
            passed,
            gw_difference,
        });
    }
    let passed = checks.iter().all(|c| c.passed);
    let result = OracleResult {
        shapes: checks.len(),
        enumerated_mass: e.enumerated_mass(),
        tail: e.tail,
        checks,
    };
    match config.format {
        Format::Json => json(config, Some(params), Some(passed), result),
        Format::Csv => {
            let mut rows = vec![["code", "order", "mu", "nu_lower", "nu_upper", "deviation", "passed"]
                .map(String::from)
                .to_vec()];
            for c in result.checks {
                rows.push(vec![
                    c.code,
                    c.order.to_string(),
                    c.check.mu.to_string(),
                    c.check.conditional_lower.to_string(),
                    c.check.conditional_upper.to_string(),
                    c.check.deviation.to_string(),
                    c.passed.to_string(),
                ]);
            }
            csv_output(rows, Some(passed))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> RunOutput {
        let cli = Cli::try_parse_from(std::iter::once("tokunaga").chain(args.iter().copied())).unwrap();
        run(&cli.config()).unwrap()
    }

    #[test]
    fn invariance_exit_codes() {
        let ok = run_args(&["invariance", "--c", "2", "--kmax", "40"]);
        assert_eq!(ok.exit_code, 0);
        let bad = run_args(&["invariance", "--tok", "1,1,1", "--p", "0.5"]);
        assert_eq!(bad.exit_code, 1);
        let v: serde_json::Value = serde_json::from_str(&bad.text).unwrap();
        assert!(v["result"]["invariance"]["residual"].as_f64().unwrap() > 1e-3);
        assert_eq!(v["config"]["command"]["name"], "invariance");
    }

    #[test]
    fn generation_is_reproducible() {
        let a = run_args(&["generate", "--c", "2", "--n", "50", "--seed", "7"]);
        let b = run_args(&["generate", "--c", "2", "--n", "50", "--seed", "7"]);
        assert_eq!(a, b);
        assert_ne!(a, run_args(&["generate", "--c", "2", "--n", "50", "--seed", "8"]));
    }

    #[test]
    fn missing_coefficients_are_explained() {
        let cli = Cli::try_parse_from(["tokunaga", "invariance"]).unwrap();
        let err = run(&cli.config()).unwrap_err().to_string();
        assert!(err.contains("--c"), "{err}");
    }

    #[test]
    fn newick_streams() {
        let trees = read_newick_trees("(x,x);\n x;\n('a;b',x)[c;d];").unwrap();
        assert_eq!(trees.len(), 3);
        assert!(read_newick_trees("(x,x); (x,").is_err());
    }

    #[test]
    fn tokunaga_csv_layout() {
        let out = run_args(&["stats", "--c", "2", "--n", "200", "--format", "csv"]);
        let first = out.text.lines().next().unwrap();
        assert!(first.starts_with("i,j=2"));
        let second: Vec<&str> = out.text.lines().nth(2).unwrap().split(',').collect();
        assert_eq!(second[0], "2");
        assert_eq!(second[1], "", "cell (2,2) is undefined");
    }
}
