//! Command-line harness: generate update traces, replay them against any
//! registered solver, audit against exact oracles, and build/certify the
//! adversarial gadget instances.
//!
//! Oracle budgets come from `DYNMWM_ORACLE_BUDGET_GENERAL` and
//! `DYNMWM_ORACLE_BUDGET_BIPARTITE` when set.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use dynmwm::adversarial;
use dynmwm::intervals::WeightInterval;
use dynmwm::oracle::OracleBudget;
use dynmwm::runner::{run_trace, RunConfig, SolverSpec};
use dynmwm::trace::{
    graph_as_inserts, read_trace_file, write_trace_file, TraceKind, TraceModel, WeightDist,
};
use dynmwm::weight::{format_rat, parse_rat, rat_pow, Rat};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "dynmwm", about = "dynamic approximate MWM harness", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a trace file from a named model.
    Gen(GenArgs),
    /// Replay a trace against a solver and write a metrics file.
    Run(RunArgs),
    /// Replay with oracle auditing and enforce a minimum ratio.
    Audit(AuditArgs),
    /// Build an adversarial gadget instance and run its certifier.
    Gadget(GadgetArgs),
}

#[derive(Args)]
struct GenArgs {
    /// uniform-random | insert-only | delete-only | sliding-window |
    /// adversarial-gadget
    #[arg(long)]
    model: String,
    #[arg(long, default_value_t = 12)]
    n: u32,
    #[arg(long, default_value_t = 100)]
    events: usize,
    /// integer weight range `lo:hi`, or decimal `lo:hi:digits`
    #[arg(long, default_value = "1:100")]
    weights: String,
    /// window width for sliding-window
    #[arg(long, default_value_t = 5)]
    window: usize,
    /// gadget levels for adversarial-gadget
    #[arg(long, default_value_t = 4)]
    levels: usize,
    #[arg(long, default_value_t = false)]
    bipartite: bool,
    /// cap every vertex degree (0 = uncapped)
    #[arg(long, default_value_t = 0)]
    max_degree: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    trace: PathBuf,
    /// oracle | degree-two | census-only | framework/standard |
    /// framework/tree | framework/ultimate | low-degree | bdl |
    /// low-recourse:<inner>
    #[arg(long)]
    solver: String,
    #[arg(long, default_value = "0.1")]
    eps: String,
    /// tree depth d for framework/tree
    #[arg(long, default_value_t = 1)]
    depth: usize,
    /// inner solver for low-recourse wrapping (shorthand for
    /// `--solver low-recourse:<inner>`)
    #[arg(long)]
    inner: Option<String>,
    #[arg(long, default_value_t = false)]
    oracle_audit: bool,
    /// metrics file destination
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct AuditArgs {
    #[command(flatten)]
    run: RunArgs,
    /// fail when the minimum observed ratio drops below this value
    #[arg(long, default_value = "0")]
    min_ratio: String,
}

#[derive(Args)]
struct GadgetArgs {
    /// partition | alpha
    #[arg(long, default_value = "partition")]
    kind: String,
    #[arg(long, default_value_t = 6)]
    levels: usize,
    /// alpha for the alpha-approximation instance
    #[arg(long, default_value = "2/3")]
    alpha: String,
    /// delta for the certifiers
    #[arg(long, default_value = "1/25")]
    delta: String,
    /// optional insert-only trace emission of the instance
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_weights(spec: &str) -> Result<WeightDist> {
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [lo, hi] => Ok(WeightDist::UniformInt {
            lo: lo.parse()?,
            hi: hi.parse()?,
        }),
        [lo, hi, digits] => Ok(WeightDist::UniformDecimal {
            lo: lo.parse()?,
            hi: hi.parse()?,
            digits: digits.parse()?,
        }),
        _ => bail!("weights spec must be lo:hi or lo:hi:digits"),
    }
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let kind = match args.model.as_str() {
        "uniform-random" => TraceKind::UniformRandom,
        "insert-only" => TraceKind::InsertOnly,
        "delete-only" => TraceKind::DeleteOnly,
        "sliding-window" => TraceKind::SlidingWindow {
            window: args.window,
        },
        "adversarial-gadget" => TraceKind::AdversarialGadget {
            levels: args.levels,
        },
        other => bail!("unknown model `{other}`"),
    };
    let model = TraceModel {
        kind,
        n: args.n,
        events: args.events,
        weights: parse_weights(&args.weights)?,
        seed: args.seed,
        bipartite: args.bipartite,
        max_degree: (args.max_degree > 0).then_some(args.max_degree),
    };
    let events = model.generate()?;
    write_trace_file(&args.out, &events)?;
    println!("wrote {} events to {}", events.len(), args.out.display());
    Ok(())
}

fn run_args_to_config(args: &RunArgs) -> Result<RunConfig> {
    let solver_name = match &args.inner {
        Some(inner) => format!("low-recourse:{inner}"),
        None => args.solver.clone(),
    };
    let solver = SolverSpec::parse(&solver_name)?;
    let eps = parse_rat(&args.eps).context("parsing --eps")?;
    Ok(RunConfig {
        solver,
        eps,
        depth: args.depth,
        oracle_audit: args.oracle_audit,
        budget: OracleBudget::from_env(),
        seed: args.seed,
    })
}

fn cmd_run(args: RunArgs, forced_audit: bool) -> Result<dynmwm::report::SolverReport> {
    let mut cfg = run_args_to_config(&args)?;
    if forced_audit {
        cfg.oracle_audit = true;
    }
    let events = read_trace_file(&args.trace)?;
    let report = run_trace(&cfg, &events)?;
    if let Some(out) = &args.out {
        report.write_metrics_file(out)?;
        println!("metrics written to {}", out.display());
    }
    print!("{}", report.summary());
    Ok(report)
}

fn cmd_audit(args: AuditArgs) -> Result<()> {
    let min_ratio = parse_rat(&args.min_ratio).context("parsing --min-ratio")?;
    let report = cmd_run(args.run, true)?;
    match report.min_ratio() {
        Some(r) if r < min_ratio => {
            bail!(
                "audit failed: min ratio {} below threshold {}",
                format_rat(&r),
                format_rat(&min_ratio)
            );
        }
        Some(r) => {
            println!("audit ok: min ratio {}", format_rat(&r));
            Ok(())
        }
        None => bail!("audit produced no oracle ratios (instances beyond budget?)"),
    }
}

fn cmd_gadget(args: GadgetArgs) -> Result<()> {
    let delta = parse_rat(&args.delta).context("parsing --delta")?;
    match args.kind.as_str() {
        "partition" => {
            let inst = adversarial::gen_partition_counterexample(args.levels)?;
            println!(
                "partition instance: {} gadgets over levels 0..={}, mu_w = {}",
                inst.gadgets.len(),
                inst.levels,
                format_rat(&inst.mu)
            );
            // single covering class passes; per-level classes lose
            let whole = WeightInterval::new(
                Rat::new(1.into(), 2.into()),
                rat_pow(&inst.beta, inst.levels as i64 + 2),
            )
            .expect("interval");
            let single = adversarial::certify_partition_loss(&inst, &[whole], &delta)?;
            println!(
                "single-class partition: loss {} (exceeds delta: {})",
                format_rat(&single.total_loss),
                single.exceeds_delta
            );
            let mut narrow = Vec::new();
            for i in 0..=(inst.levels as i64 + 1) {
                narrow.push(
                    WeightInterval::new(
                        rat_pow(&inst.beta, i) * Rat::new(99.into(), 100.into()),
                        rat_pow(&inst.beta, i + 1) * Rat::new(99.into(), 100.into()),
                    )
                    .expect("interval"),
                );
            }
            let cert = adversarial::certify_partition_loss(&inst, &narrow, &delta)?;
            println!(
                "per-level partition: {} broken levels, loss {} of mu {} (exceeds delta {}: {})",
                cert.broken_levels.len(),
                format_rat(&cert.total_loss),
                format_rat(&cert.mu),
                format_rat(&delta),
                cert.exceeds_delta
            );
            if let Some(out) = &args.out {
                write_trace_file(out, &graph_as_inserts(&inst.graph))?;
                println!("instance trace written to {}", out.display());
            }
        }
        "alpha" => {
            let alpha = parse_rat(&args.alpha).context("parsing --alpha")?;
            let a = adversarial::gen_alpha_counterexample(&alpha, args.levels)?;
            let cert = a.certify(&delta);
            println!(
                "alpha instance: beta = {}, {} gadgets, mu_w = {}",
                format_rat(&a.inst.beta),
                a.inst.gadgets.len(),
                format_rat(&cert.mu_whole)
            );
            for (iv, mu_class, s_weight, pass) in &cert.per_class {
                println!(
                    "class [{}, {}): S {} of {} ({})",
                    format_rat(&iv.lo),
                    format_rat(&iv.hi),
                    format_rat(s_weight),
                    format_rat(mu_class),
                    if *pass { "alpha-ok" } else { "FAIL" }
                );
            }
            println!(
                "sparsifier ratio {} vs alpha - delta = {} ({})",
                format_rat(&cert.ratio),
                format_rat(&(&alpha - &delta)),
                if cert.ratio_below_threshold {
                    "below, as claimed"
                } else {
                    "NOT below"
                }
            );
            if let Some(out) = &args.out {
                write_trace_file(out, &graph_as_inserts(&a.inst.graph))?;
                println!("instance trace written to {}", out.display());
            }
        }
        other => bail!("unknown gadget kind `{other}`"),
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Run(args) => cmd_run(args, false).map(|_| ()),
        Command::Audit(args) => cmd_audit(args),
        Command::Gadget(args) => cmd_gadget(args),
    }
}
