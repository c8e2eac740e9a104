//! Command-line front end: solvers, oracles, verifiers and the jump simulator,
//! all reading and writing JSON.
//!
//! Exit codes: 0 on success, 1 on input errors, 2 when a search comes up
//! empty (depth exhausted, no witness, failed verification).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use treeramsey::bridge::rt_solve_with;
use treeramsey::reduction::reduce_step_with;
use treeramsey::solver::tt_solve_with;
use treeramsey::*;

#[derive(Parser)]
#[command(name = "treeramsey", version, about = "Ramsey's theorem on finite truncations of the binary tree")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monochromatic copies of full binary trees.
    #[command(subcommand)]
    Tt(TtCommand),
    /// Homogeneous sets for colorings of increasing tuples.
    #[command(subcommand)]
    Rt(RtCommand),
    /// A single exponent-reduction step.
    #[command(subcommand)]
    Reduce(ReduceCommand),
    /// Check that an embedding is a monochromatic copy.
    Verify(VerifyArgs),
    /// Stage approximations of iterated jumps.
    #[command(subcommand)]
    Jump(JumpCommand),
    /// Write coloring files.
    #[command(subcommand)]
    Gen(GenCommand),
}

#[derive(Subcommand)]
enum TtCommand {
    Solve(TtSolveArgs),
    /// Exhaustive search over all copies.
    Brute(TtBruteArgs),
}

#[derive(Subcommand)]
enum RtCommand {
    Solve(RtSolveArgs),
    Brute(RtBruteArgs),
}

#[derive(Subcommand)]
enum ReduceCommand {
    Step(ReduceArgs),
}

#[derive(Subcommand)]
enum JumpCommand {
    Approx(JumpArgs),
}

#[derive(Subcommand)]
enum GenCommand {
    Coloring(GenArgs),
}

#[derive(Args)]
struct Output {
    /// Write the result here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TtSolveArgs {
    #[arg(long)]
    coloring: PathBuf,
    /// Ambient depth; defaults to the coloring's depth.
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    target_depth: usize,
    /// Comma-separated depths, one per reduction.
    #[arg(long, value_delimiter = ',')]
    stage_depths: Option<Vec<usize>>,
    #[arg(long, default_value_t = ReducePolicy::default().search_budget)]
    budget: u64,
    /// Write the reduction ledger here, also on exhaustion.
    #[arg(long)]
    ledger: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct TtBruteArgs {
    #[arg(long)]
    coloring: PathBuf,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    target_depth: usize,
    /// Refuse searches with more candidate copies than this.
    #[arg(long, default_value_t = 10_000_000)]
    cap: u128,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct RtSolveArgs {
    #[arg(long)]
    coloring: PathBuf,
    /// Size of the homogeneous set.
    #[arg(long)]
    size: usize,
    /// Depth of the tree the coloring is lifted to; defaults to domain - 1.
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long, default_value_t = ReducePolicy::default().search_budget)]
    budget: u64,
    #[arg(long)]
    ledger: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct RtBruteArgs {
    #[arg(long)]
    coloring: PathBuf,
    #[arg(long)]
    size: usize,
    #[arg(long, default_value_t = 10_000_000)]
    cap: u128,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct ReduceArgs {
    #[arg(long)]
    coloring: PathBuf,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    target_depth: usize,
    #[arg(long, default_value_t = ReducePolicy::default().search_budget)]
    budget: u64,
    #[arg(long)]
    ledger: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct VerifyArgs {
    /// An embedding, or any document with a `witness` field.
    #[arg(long)]
    embedding: PathBuf,
    #[arg(long)]
    coloring: PathBuf,
    /// Host depth; defaults to the coloring's depth.
    #[arg(long)]
    depth: Option<usize>,
    /// Expected color; defaults to the document's `color` field.
    #[arg(long)]
    color: Option<u32>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct JumpArgs {
    /// `empty`, `even`, or a comma-separated member list such as `1,4,9`.
    #[arg(long, default_value = "empty")]
    base: String,
    /// Horizon of the base set; defaults to the stage.
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long, default_value_t = 1)]
    level: usize,
    #[arg(long)]
    stage: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Seeded,
    Constant,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum, default_value_t = Kind::Seeded)]
    kind: Kind,
    /// Chain length `n`.
    #[arg(long)]
    arity: usize,
    #[arg(long, default_value_t = 2)]
    colors: u32,
    /// Tree depth for chain colorings.
    #[arg(long)]
    depth: Option<usize>,
    /// Integer domain size; produces a tuple coloring instead.
    #[arg(long, conflicts_with = "depth")]
    domain: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Color of a constant coloring.
    #[arg(long, default_value_t = 0)]
    value: u32,
    #[command(flatten)]
    output: Output,
}

/// How a command ended, besides input errors.
enum Outcome {
    Done,
    Negative,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Negative) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> anyhow::Result<Outcome> {
    match command {
        Command::Tt(TtCommand::Solve(a)) => tt_solve_cmd(a),
        Command::Tt(TtCommand::Brute(a)) => tt_brute_cmd(a),
        Command::Rt(RtCommand::Solve(a)) => rt_solve_cmd(a),
        Command::Rt(RtCommand::Brute(a)) => rt_brute_cmd(a),
        Command::Reduce(ReduceCommand::Step(a)) => reduce_cmd(a),
        Command::Verify(a) => verify_cmd(a),
        Command::Jump(JumpCommand::Approx(a)) => jump_cmd(a),
        Command::Gen(GenCommand::Coloring(a)) => gen_cmd(a),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn ambient_depth(f: &ChainColoring, depth: Option<usize>, target: usize) -> anyhow::Result<usize> {
    let depth = depth.unwrap_or(f.depth());
    if depth > f.depth() {
        bail!("depth {depth} exceeds the coloring's depth {}", f.depth());
    }
    if target > depth {
        bail!("target depth {target} exceeds depth {depth}");
    }
    Ok(depth)
}

/// Maps a library error to an outcome, writing the partial ledger if asked.
fn failure(e: Error, ledger: Option<&Path>) -> anyhow::Result<Outcome> {
    match e.exhaustion() {
        Some(info) => {
            if let (Some(path), Some(partial)) = (ledger, info.ledger.as_ref()) {
                write_json(partial, Some(path))?;
            }
            eprintln!("{e}");
            if let Some(sigma) = &info.sigma {
                eprintln!("index node: {sigma:?}");
            }
            Ok(Outcome::Negative)
        }
        None => Err(e.into()),
    }
}

fn tt_solve_cmd(a: TtSolveArgs) -> anyhow::Result<Outcome> {
    let f: ChainColoring = read_json(&a.coloring)?;
    let depth = ambient_depth(&f, a.depth, a.target_depth)?;
    let config = SolveConfig {
        stage_depths: a.stage_depths.map_or(StageDepthPolicy::default(), StageDepthPolicy::Explicit),
        reduce: ReducePolicy { search_budget: a.budget },
    };
    match tt_solve_with(&f, depth, a.target_depth, &config) {
        Ok(result) => {
            if let Some(path) = &a.ledger {
                write_json(&result.ledger, Some(path))?;
            }
            write_json(&result, a.output.out.as_deref())?;
            Ok(Outcome::Done)
        }
        Err(e) => failure(e, a.ledger.as_deref()),
    }
}

fn tt_brute_cmd(a: TtBruteArgs) -> anyhow::Result<Outcome> {
    let f: ChainColoring = read_json(&a.coloring)?;
    let depth = ambient_depth(&f, a.depth, a.target_depth)?;
    match brute_force_tt(&f, depth, a.target_depth, a.cap)? {
        Some((color, witness)) => {
            write_json(&json!({ "color": color, "witness": witness }), a.output.out.as_deref())?;
            Ok(Outcome::Done)
        }
        None => {
            eprintln!("no monochromatic copy of depth {} in depth {depth}", a.target_depth);
            Ok(Outcome::Negative)
        }
    }
}

fn rt_solve_cmd(a: RtSolveArgs) -> anyhow::Result<Outcome> {
    let f: IntTupleColoring = read_json(&a.coloring)?;
    let depth = a.depth.unwrap_or(f.domain().saturating_sub(1));
    let config = SolveConfig { reduce: ReducePolicy { search_budget: a.budget }, ..SolveConfig::default() };
    match rt_solve_with(&f, a.size, depth, &config) {
        Ok(sol) => {
            if let (Some(path), Some(solve)) = (&a.ledger, &sol.solve) {
                write_json(&solve.ledger, Some(path))?;
            }
            write_json(&sol, a.output.out.as_deref())?;
            Ok(Outcome::Done)
        }
        Err(e) => failure(e, a.ledger.as_deref()),
    }
}

fn rt_brute_cmd(a: RtBruteArgs) -> anyhow::Result<Outcome> {
    let f: IntTupleColoring = read_json(&a.coloring)?;
    match brute_force_rt(&f, a.size, a.cap)? {
        Some((color, set)) => {
            write_json(&RtSolution { color, set, solve: None }, a.output.out.as_deref())?;
            Ok(Outcome::Done)
        }
        None => {
            eprintln!("no homogeneous set of size {}", a.size);
            Ok(Outcome::Negative)
        }
    }
}

fn reduce_cmd(a: ReduceArgs) -> anyhow::Result<Outcome> {
    let f: ChainColoring = read_json(&a.coloring)?;
    let depth = ambient_depth(&f, a.depth, a.target_depth)?;
    let policy = ReducePolicy { search_budget: a.budget };
    match reduce_step_with(&Embedding::identity(depth), &f, a.target_depth, policy) {
        Ok(out) => {
            if let Some(path) = &a.ledger {
                write_json(&out.ledger, Some(path))?;
            }
            let doc = json!({
                "embedding": out.embedding,
                "coloring": out.coloring,
                "ledger": out.ledger,
            });
            write_json(&doc, a.output.out.as_deref())?;
            Ok(Outcome::Done)
        }
        Err(e) => failure(e, a.ledger.as_deref()),
    }
}

fn verify_cmd(a: VerifyArgs) -> anyhow::Result<Outcome> {
    let doc: serde_json::Value = read_json(&a.embedding)?;
    let f: ChainColoring = read_json(&a.coloring)?;
    let inner = doc.get("witness").unwrap_or(&doc);
    let w: Embedding = serde_json::from_value(inner.clone()).context("reading the embedding")?;
    let color = match (a.color, doc.get("color").and_then(|c| c.as_u64())) {
        (Some(c), _) => c,
        (None, Some(c)) => u32::try_from(c).context("color out of range")?,
        (None, None) => bail!("no color given and none in the embedding document"),
    };
    let depth = a.depth.unwrap_or(f.depth());
    let embedding_ok = verify_embedding(&w, &TruncatedTree::full(depth));
    let monochromatic = embedding_ok && verify_monochromatic(&w, &f, color);
    let report = json!({
        "embedding": embedding_ok,
        "monochromatic": monochromatic,
        "color": color,
        "depth": w.depth(),
    });
    write_json(&report, a.output.out.as_deref())?;
    Ok(if monochromatic { Outcome::Done } else { Outcome::Negative })
}

fn parse_base(spec: &str, horizon: usize) -> anyhow::Result<OracleApprox> {
    Ok(match spec {
        "empty" => OracleApprox::empty(horizon),
        "even" | "evens" => OracleApprox::evens(horizon),
        list => {
            let members = list
                .split(',')
                .map(|s| s.trim().parse::<u64>().with_context(|| format!("base set member {s:?}")))
                .collect::<anyhow::Result<Vec<u64>>>()?;
            OracleApprox::from_set(horizon, &members)
        }
    })
}

fn jump_cmd(a: JumpArgs) -> anyhow::Result<Outcome> {
    let horizon = a.horizon.unwrap_or(usize::try_from(a.stage)?);
    let base = parse_base(&a.base, horizon)?;
    write_json(&iter_jump_stage(&base, a.level, a.stage), a.output.out.as_deref())?;
    Ok(Outcome::Done)
}

fn gen_cmd(a: GenArgs) -> anyhow::Result<Outcome> {
    let out = a.output.out.as_deref();
    match (a.depth, a.domain) {
        (Some(depth), None) => {
            let f = match a.kind {
                Kind::Seeded => ChainColoring::seeded(a.arity, a.colors, depth, a.seed)?,
                Kind::Constant => ChainColoring::constant(a.arity, a.colors, depth, a.value)?,
            };
            write_json(&f, out)?;
        }
        (None, Some(domain)) => {
            let f = match a.kind {
                Kind::Seeded => IntTupleColoring::seeded(a.arity, a.colors, domain, a.seed)?,
                Kind::Constant => {
                    if a.value >= a.colors {
                        bail!("value {} is not below {} colors", a.value, a.colors);
                    }
                    let v = a.value;
                    IntTupleColoring::from_fn(a.arity, a.colors, domain, move |_| v)?
                }
            };
            write_json(&f, out)?;
        }
        _ => bail!("give exactly one of --depth and --domain"),
    }
    Ok(Outcome::Done)
}
