use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use stocpack::harness::{
    attach_ratio_checks, certify, certify_csv, sample, sim_csv, BuiltPipeline, GeneratorSpec, PipelineKind, SimReport,
};
use stocpack::model::{ArmShape, Instance};

/// Default master seed for `run` and `certify`.
const DEFAULT_SEED: u64 = 0x5eed;
const THREADS_ENV: &str = "STOCPACK_THREADS";

#[derive(Parser)]
#[command(name = "stocpack", version, about = "LP rounding for stochastic knapsack and budgeted bandits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build and solve the pipeline's LP; write a JSON report.
    Solve {
        #[command(flatten)]
        target: Target,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the LP in CPLEX LP format.
        #[arg(long)]
        lp_dump: Option<PathBuf>,
    },
    /// Simulate the pipeline; write a CSV report.
    Run {
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write every trial as JSON lines.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Generate an instance file.
    Gen {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every applicable check on an instance; exit status 1 if any check fails.
    Certify {
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Target {
    #[arg(long)]
    instance: PathBuf,
    /// nocancel, nocancel-poly, small, small-poly, stock-full, mab-tree, mab-dag or mab-exploit.
    #[arg(long)]
    pipeline: PipelineKind,
}

#[derive(Args)]
struct SimArgs {
    /// Defaults to 100000 for knapsack pipelines and 200000 for bandit pipelines.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    CancelBenefit,
    CorrelatedGap,
    PreemptionGap,
    RandomStock,
    RandomMab,
}

#[derive(Clone, Copy, ValueEnum)]
enum Shape {
    Tree,
    LayeredDag,
    Graph,
}

#[derive(Args)]
struct FamilyArgs {
    #[arg(long, value_enum)]
    family: Family,
    /// Items, or arms for the preemption-gap family.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long = "L")]
    l: Option<usize>,
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sizes per item (random-stock).
    #[arg(long, default_value_t = 3)]
    support: usize,
    #[arg(long, default_value_t = 2)]
    arms: usize,
    #[arg(long, default_value_t = 5)]
    states: usize,
    #[arg(long, value_enum, default_value_t = Shape::Tree)]
    shape: Shape,
    #[arg(long)]
    exploit_budget: Option<usize>,
}

impl FamilyArgs {
    fn spec(&self) -> Result<GeneratorSpec> {
        let need = |v: Option<usize>, name: &str| v.with_context(|| format!("--{name} is required for this family"));
        Ok(match self.family {
            Family::CancelBenefit => GeneratorSpec::CancelBenefit { n: need(self.n, "n")? },
            Family::CorrelatedGap => GeneratorSpec::CorrelatedGap { n: need(self.n, "n")? },
            Family::PreemptionGap => GeneratorSpec::PreemptionGap {
                n: need(self.n, "n")?,
                l: need(self.l, "L")?,
                m: self.m.context("--m is required for this family")?,
                budget: self.budget,
            },
            Family::RandomStock => GeneratorSpec::RandomStock {
                n: need(self.n, "n")?,
                budget: need(self.budget, "budget")?,
                support: self.support,
                seed: self.seed,
            },
            Family::RandomMab => GeneratorSpec::RandomMab {
                arms: self.arms,
                states: self.states,
                budget: need(self.budget, "budget")?,
                seed: self.seed,
                shape: match self.shape {
                    Shape::Tree => ArmShape::Tree,
                    Shape::LayeredDag => ArmShape::LayeredDag,
                    Shape::Graph => ArmShape::Graph,
                },
                exploit_budget: self.exploit_budget,
            },
        })
    }
}

fn read_instance(path: &Path) -> Result<Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let instance: Instance = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let violations = instance.validate();
    if !violations.is_empty() {
        let mut msg = format!("{} is not a valid instance:", path.display());
        for v in &violations {
            msg.push_str("\n  ");
            msg.push_str(v);
        }
        bail!(msg);
    }
    Ok(instance)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn solve(target: &Target, out: Option<&Path>, lp_dump: Option<&Path>) -> Result<()> {
    let instance = read_instance(&target.instance)?;
    let built = BuiltPipeline::build(target.pipeline, &instance)?;
    let lps: Vec<_> = built
        .lps()
        .into_iter()
        .map(|(label, lp, sol)| {
            let values: serde_json::Map<String, serde_json::Value> = lp
                .named_values(sol)
                .into_iter()
                .filter(|(_, v)| v.abs() > 1e-12)
                .map(|(name, v)| (name, json!(v)))
                .collect();
            json!({ "label": label, "status": format!("{:?}", sol.status), "objective": sol.objective, "values": values })
        })
        .collect();
    if let Some(path) = lp_dump {
        let text: String = built.lps().iter().map(|(label, lp, _)| format!("\\ {label}\n{}", lp.to_lp_format())).collect();
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    let report = json!({ "pipeline": target.pipeline.name(), "objective": built.lp_opt(), "lps": lps });
    emit(out, &(serde_json::to_string_pretty(&report)? + "\n"))
}

fn run(target: &Target, sim: &SimArgs, out: Option<&Path>, trace: Option<&Path>) -> Result<()> {
    let instance = read_instance(&target.instance)?;
    let built = BuiltPipeline::build(target.pipeline, &instance)?;
    let trials = sim.trials.unwrap_or_else(|| target.pipeline.default_trials());
    if trials == 0 {
        bail!("--trials must be positive");
    }
    let rewards = match trace {
        Some(path) => {
            let records = sample(trials, sim.seed, |rng| built.run(rng));
            let text: String = records.iter().map(|r| r.to_json_lines()).collect();
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
            records.iter().map(|r| r.reward()).collect()
        }
        None => sample(trials, sim.seed, |rng| built.run(rng).reward()),
    };
    let mut report = SimReport::from_samples(&rewards, sim.seed);
    attach_ratio_checks(&mut report, &built, &instance);
    emit(out, &sim_csv(&report))
}

fn gen(family: &FamilyArgs, out: Option<&Path>) -> Result<()> {
    let instance = family.spec()?.generate()?;
    emit(out, &(serde_json::to_string_pretty(&instance)? + "\n"))
}

fn certify_cmd(target: &Target, sim: &SimArgs, out: Option<&Path>) -> Result<bool> {
    let instance = read_instance(&target.instance)?;
    let trials = sim.trials.unwrap_or_else(|| target.pipeline.default_trials());
    if trials == 0 {
        bail!("--trials must be positive");
    }
    let report = certify(target.pipeline, &instance, trials, sim.seed)?;
    emit(out, &certify_csv(&report))?;
    Ok(report.passed())
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.parse().with_context(|| format!("{THREADS_ENV}={v} is not a thread count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = configure_threads().and_then(|()| match &cli.command {
        Command::Solve { target, out, lp_dump } => solve(target, out.as_deref(), lp_dump.as_deref()).map(|()| true),
        Command::Run { target, sim, out, trace } => run(target, sim, out.as_deref(), trace.as_deref()).map(|()| true),
        Command::Gen { family, out } => gen(family, out.as_deref()).map(|()| true),
        Command::Certify { target, sim, out } => certify_cmd(target, sim, out.as_deref()),
    });
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
