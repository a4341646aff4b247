use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context as _, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use tooltree::evaluation::{FlipMode, Restoration};
use tooltree::harness::{
    ablation_variants, emit_report, load_rows, run_experiment, run_restoration, Ablation,
    ExperimentSpec, NoiseSpec, Planner, ReportFormat, RunReport, Variant,
};
use tooltree::search::SearchConfig;
use tooltree::sim::{generate_suite, read_suite, write_suite, GeneratorParams, JudgeKind};

#[derive(Parser)]
#[command(
    name = "tooltree",
    version,
    about = "Tool-planning tree search experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic task suite as JSON lines.
    Gen(GenArgs),
    /// Run a planner grid over a suite.
    Run(RunArgs),
    /// Judge-noise restoration study.
    Restore(RestoreArgs),
    /// Re-aggregate existing rows.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 200)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    depth_min: usize,
    #[arg(long, default_value_t = 5)]
    depth_max: usize,
    #[arg(long, default_value_t = 2)]
    branching_min: usize,
    #[arg(long, default_value_t = 3)]
    branching_max: usize,
    #[arg(long, default_value_t = 6)]
    distractors_min: usize,
    #[arg(long, default_value_t = 10)]
    distractors_max: usize,
    #[arg(long, default_value_t = 0.5)]
    inflation: f64,
    #[arg(long, default_value_t = 0.3)]
    failing_share: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => ReportFormat::Json,
            Format::Csv => ReportFormat::Csv,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Judge {
    Forecast,
    Oracle,
}

#[derive(Clone, Copy, ValueEnum)]
enum Flip {
    Both,
    FalsePositiveOnly,
    FalseNegativeOnly,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fix {
    None,
    FixFalsePositives,
    FixFalseNegatives,
    All,
}

/// Grid options shared by `run` and `restore`. Flags override the spec file.
#[derive(Args)]
struct GridArgs {
    /// TOML experiment spec.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    suite: Option<PathBuf>,
    /// Comma-separated planners: greedy, best_first, dfs, vanilla_mcts, tooltree.
    #[arg(long, value_delimiter = ',')]
    planners: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    budgets: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    /// Single run seed; shorthand for `--seeds N`.
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// Flat key-value search config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    judge: Option<Judge>,
    #[arg(long)]
    shortlist: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    grid: GridArgs,
    /// Run all seven ablation settings instead of the spec's variants.
    #[arg(long)]
    ablations: bool,
    #[arg(long)]
    disable_pre_eval: bool,
    #[arg(long)]
    disable_pre_prune: bool,
    #[arg(long)]
    disable_post_eval: bool,
    #[arg(long)]
    disable_post_prune: bool,
    #[arg(long)]
    noise_rate: Option<f64>,
    #[arg(long, value_enum, default_value = "both")]
    flip_mode: Flip,
    #[arg(long, value_enum, default_value = "none")]
    restoration: Fix,
    /// Append rows here as cells finish.
    #[arg(long)]
    rows_out: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct RestoreArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value_t = 0.25)]
    error_rate: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Rows as report JSON, CSV or a JSON-lines row log.
    #[arg(long)]
    rows: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

fn build_spec(g: &GridArgs) -> Result<ExperimentSpec> {
    let mut spec = match &g.spec {
        Some(p) => ExperimentSpec::load(p)?,
        None => {
            let suite = g.suite.clone().context("--suite or --spec is required")?;
            ExperimentSpec::new(suite, vec![Planner::Tooltree], vec![32], vec![0])
        }
    };
    if let Some(s) = &g.suite {
        spec.suite = s.clone();
    }
    if !g.planners.is_empty() {
        spec.planners = g
            .planners
            .iter()
            .map(|p| p.parse())
            .collect::<Result<_, _>>()?;
    }
    if !g.budgets.is_empty() {
        spec.budgets = g.budgets.clone();
    }
    if !g.seeds.is_empty() {
        spec.seeds = g.seeds.clone();
    }
    if let Some(s) = g.seed {
        spec.seeds = vec![s];
    }
    if let Some(p) = &g.config {
        spec.search = SearchConfig::load(p)?;
    }
    if let Some(j) = g.judge {
        spec.judge = match j {
            Judge::Forecast => JudgeKind::Forecast,
            Judge::Oracle => JudgeKind::Oracle,
        };
    }
    if let Some(k) = g.shortlist {
        spec.shortlist = k;
    }
    Ok(spec)
}

fn gen(a: GenArgs) -> Result<ExitCode> {
    let params = GeneratorParams {
        seed: a.seed,
        chain_depth: (a.depth_min, a.depth_max),
        branching: (a.branching_min, a.branching_max),
        distractors: (a.distractors_min, a.distractors_max),
        inflation: a.inflation,
        failing_share: a.failing_share,
    };
    let tasks = generate_suite(&params, a.count)?;
    write_suite(&a.out, &tasks)?;
    eprintln!("wrote {} tasks to {}", tasks.len(), a.out.display());
    Ok(ExitCode::SUCCESS)
}

fn print_summary(report: &RunReport) {
    for a in &report.aggregates {
        println!(
            "{:<20} {:<12} budget={:<3} pass={:.3} nodes~{:.0} rollouts~{:.0} judge_calls={:.1} time={:.1}s faults={}",
            a.variant,
            a.planner,
            a.budget,
            a.pass_rate,
            a.median_nodes_expanded,
            a.median_rollouts,
            a.mean_judge_calls,
            a.mean_wall_time_s,
            a.faults
        );
    }
}

fn finish(report: &RunReport) -> ExitCode {
    let faults = report.faulted();
    if faults > 0 {
        eprintln!("{faults} cell(s) faulted");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn run(a: RunArgs) -> Result<ExitCode> {
    let mut spec = build_spec(&a.grid)?;
    if a.ablations {
        spec.variants = ablation_variants();
    }
    let flags = Ablation {
        disable_pre_eval: a.disable_pre_eval,
        disable_pre_prune: a.disable_pre_prune,
        disable_post_eval: a.disable_post_eval,
        disable_post_prune: a.disable_post_prune,
    };
    if flags != Ablation::default() {
        if a.ablations {
            bail!("--ablations cannot be combined with individual disable flags");
        }
        spec.variants = vec![Variant {
            name: "custom".into(),
            ablation: flags,
        }];
    }
    if let Some(rate) = a.noise_rate {
        spec.noise = Some(NoiseSpec {
            error_rate: rate,
            flip_mode: match a.flip_mode {
                Flip::Both => FlipMode::Both,
                Flip::FalsePositiveOnly => FlipMode::FalsePositiveOnly,
                Flip::FalseNegativeOnly => FlipMode::FalseNegativeOnly,
            },
            restoration: match a.restoration {
                Fix::None => Restoration::None,
                Fix::FixFalsePositives => Restoration::FixFalsePositives,
                Fix::FixFalseNegatives => Restoration::FixFalseNegatives,
                Fix::All => Restoration::All,
            },
        });
    }
    if a.rows_out.is_some() {
        spec.rows_out = a.rows_out.clone();
    }
    let report = run_experiment(&spec)?;
    emit_report(&report, a.format.into(), &a.out)?;
    print_summary(&report);
    Ok(finish(&report))
}

fn restore(a: RestoreArgs) -> Result<ExitCode> {
    let spec = build_spec(&a.grid)?;
    let tasks = read_suite(&spec.suite)?;
    let report = run_restoration(&spec, &tasks, a.error_rate)?;
    std::fs::write(&a.out, serde_json::to_string_pretty(&report)?)?;
    for r in &report.rows {
        println!(
            "{:<22} judge_error_rate={:.3} pass={:.3} ({:+.3})",
            r.configuration, r.judge_error_rate, r.pass_rate, r.recovered
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn report(a: ReportArgs) -> Result<ExitCode> {
    let rows = load_rows(&a.rows)?;
    let report = RunReport::from_rows(rows);
    emit_report(&report, a.format.into(), &a.out)?;
    print_summary(&report);
    Ok(finish(&report))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Run(a) => run(a),
        Command::Restore(a) => restore(a),
        Command::Report(a) => report(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
