//! Command-line entry point: generate scenarios, run suites, sweep
//! ablation axes, re-summarize result files, and replay cached runs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use lgx_core::grounding::GroundingModel;
use lgx_core::harness::{
    generate_houses, report, run_suite, run_sweep, HarnessError, HouseParams, SuiteConfig,
    SweepAxis, SweepSpec,
};
use lgx_core::llm::{
    CoOccurrenceOracle, DecisionBackend, RandomBackend, RemoteBackend, RemoteBackendConfig,
    ResponseCache,
};
use lgx_core::metrics::summarize;
use lgx_core::policy::{EpisodeConfig, PolicyKind};
use lgx_core::prompt::PromptVariant;
use lgx_core::world::{load_scenario, Scenario};

#[derive(Parser)]
#[command(
    name = "lgx",
    about = "Gridworld simulator and evaluation harness for language-guided object navigation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate procedural house scenarios.
    Generate(GenerateArgs),
    /// Run a suite of episodes over scenario files.
    Run(RunArgs),
    /// Sweep one config axis across a list of values.
    Sweep(SweepArgs),
    /// Recompute and print the summary from a results file.
    Report(ReportArgs),
    /// Re-run a suite answering every query from the cache (zero live calls).
    Replay(RunArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Number of houses.
    #[arg(long, default_value_t = 10)]
    count: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for the scenario files.
    #[arg(long)]
    out: PathBuf,
    /// Episodes per house.
    #[arg(long, default_value_t = 10)]
    episodes: u32,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
enum PolicyArg {
    LgxObjects,
    LgxCaptions,
    Fbe,
    Random,
}

impl From<PolicyArg> for PolicyKind {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::LgxObjects => PolicyKind::LgxObjects,
            PolicyArg::LgxCaptions => PolicyKind::LgxCaptions,
            PolicyArg::Fbe => PolicyKind::Fbe,
            PolicyArg::Random => PolicyKind::Random,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
enum PromptArg {
    Robot,
    I,
    ThirdPerson,
    ObjectsFirst,
    GetClosest,
    OneWordFirst,
    Blip,
}

impl From<PromptArg> for PromptVariant {
    fn from(p: PromptArg) -> Self {
        match p {
            PromptArg::Robot => PromptVariant::Robot,
            PromptArg::I => PromptVariant::I,
            PromptArg::ThirdPerson => PromptVariant::ThirdPerson,
            PromptArg::ObjectsFirst => PromptVariant::ObjectsFirst,
            PromptArg::GetClosest => PromptVariant::GetClosest,
            PromptArg::OneWordFirst => PromptVariant::OneWordFirst,
            PromptArg::Blip => PromptVariant::Blip,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
enum BackendArg {
    Oracle,
    Random,
    Remote,
}

#[derive(Args, Clone)]
struct EpisodeFlags {
    /// Max exploratory turns per episode.
    #[arg(long = "n-r", default_value_t = 5)]
    n_r: u32,
    /// Grounding confidence threshold.
    #[arg(long = "g-th", default_value_t = 0.85)]
    g_th: f64,
    /// Exploratory distance in meters.
    #[arg(long = "e-d", default_value_t = 5.0)]
    e_d: f64,
    /// Rotation resolution in degrees per view.
    #[arg(long, default_value_t = 30)]
    resolution: u32,
    /// Detector inclusion probability.
    #[arg(long, default_value_t = 1.0)]
    detect_prob: f64,
    /// Perception range in meters.
    #[arg(long, default_value_t = 5.0)]
    max_range: f64,
    #[arg(long, value_enum, default_value_t = PolicyArg::LgxObjects)]
    policy: PolicyArg,
    #[arg(long, value_enum, default_value_t = PromptArg::Robot)]
    prompt: PromptArg,
    #[arg(long, value_enum, default_value_t = BackendArg::Oracle)]
    backend: BackendArg,
    /// Suite seed; repeat the flag for a seed sweep.
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = 1)]
    parallelism: usize,
    /// Response cache file (created when absent).
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Remote chat-completion endpoint.
    #[arg(long, default_value = "https://api.openai.com/v1/chat/completions")]
    endpoint: String,
    /// Remote model name.
    #[arg(long, default_value = "gpt-3.5-turbo")]
    model: String,
    #[arg(long, default_value_t = 0.0)]
    temperature: f64,
    #[arg(long, default_value_t = 30.0)]
    timeout: f64,
    #[arg(long, default_value_t = 2)]
    max_retries: u32,
    /// Write per-episode trace logs.
    #[arg(long, default_value_t = true)]
    traces: bool,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario files or directories containing them.
    #[arg(long, required = true, num_args = 1..)]
    scenarios: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    episode: EpisodeFlags,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, required = true, num_args = 1..)]
    scenarios: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Axis to sweep: g-th, prompt, policy, detect-prob.
    #[arg(long)]
    axis: String,
    /// Comma-separated values for the axis.
    #[arg(long, value_delimiter = ',')]
    values: Vec<String>,
    #[command(flatten)]
    episode: EpisodeFlags,
}

#[derive(Args)]
struct ReportArgs {
    /// A results.jsonl produced by run or sweep.
    #[arg(long)]
    results: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn collect_scenarios(paths: &[PathBuf]) -> Result<Vec<Scenario>, HarnessError> {
    let mut files: Vec<PathBuf> = Vec::new();
    for path in paths {
        if path.is_dir() {
            let mut entries: Vec<PathBuf> = std::fs::read_dir(path)
                .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?
                .filter_map(|e| e.ok())
                .map(|e| e.path())
                .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
                .collect();
            entries.sort();
            files.extend(entries);
        } else {
            files.push(path.clone());
        }
    }
    if files.is_empty() {
        return Err(HarnessError::Config("no scenario files found".into()));
    }
    files
        .iter()
        .map(|f| load_scenario(f).map_err(HarnessError::Scenario))
        .collect()
}

fn build_suite_config(flags: &EpisodeFlags) -> SuiteConfig {
    let mut episode = EpisodeConfig {
        n_r: flags.n_r,
        g_th: flags.g_th,
        e_d: flags.e_d,
        policy: flags.policy.into(),
        prompt: flags.prompt.into(),
        ..Default::default()
    };
    episode.scan.resolution_deg = flags.resolution;
    episode.scan.fov_deg = flags.resolution as f64;
    episode.scan.detect_prob = flags.detect_prob;
    episode.scan.max_range = flags.max_range;
    episode.reconcile();
    SuiteConfig {
        episode,
        seeds: if flags.seeds.is_empty() { vec![0] } else { flags.seeds.clone() },
        parallelism: flags.parallelism.max(1),
        grounding: GroundingModel::default(),
        write_traces: flags.traces,
    }
}

enum BuiltBackend {
    Oracle(CoOccurrenceOracle),
    Random(RandomBackend),
    Remote(RemoteBackend),
    Replay { id: String },
}

fn build_backend(flags: &EpisodeFlags, replay: bool) -> Result<BuiltBackend, HarnessError> {
    if replay {
        let inner: BuiltBackend = build_backend(flags, false)?;
        let id = match &inner {
            BuiltBackend::Oracle(b) => b.id(),
            BuiltBackend::Random(b) => b.id(),
            BuiltBackend::Remote(b) => b.id(),
            BuiltBackend::Replay { id } => id.clone(),
        };
        return Ok(BuiltBackend::Replay { id });
    }
    Ok(match flags.backend {
        BackendArg::Oracle => BuiltBackend::Oracle(CoOccurrenceOracle::household_default()),
        BackendArg::Random => BuiltBackend::Random(RandomBackend),
        BackendArg::Remote => BuiltBackend::Remote(
            RemoteBackend::new(RemoteBackendConfig {
                endpoint: flags.endpoint.clone(),
                model: flags.model.clone(),
                temperature: flags.temperature,
                timeout_secs: flags.timeout,
                max_retries: flags.max_retries,
                ..Default::default()
            })
            .map_err(HarnessError::Llm)?,
        ),
    })
}

fn run_command(args: &RunArgs, replay: bool) -> Result<(), HarnessError> {
    let scenarios = collect_scenarios(&args.scenarios)?;
    let cfg = build_suite_config(&args.episode);
    let cache = match (&args.episode.cache, replay) {
        (Some(path), _) => Some(ResponseCache::open(path).map_err(HarnessError::Llm)?),
        (None, true) => {
            return Err(HarnessError::Config("replay requires --cache".into()));
        }
        (None, false) => None,
    };
    let built = build_backend(&args.episode, replay)?;
    let outcome = match &built {
        BuiltBackend::Replay { id } => {
            let cache_ref = cache.as_ref().expect("replay cache checked above");
            let backend =
                lgx_core::llm::ReplayBackend { cache: cache_ref, inner_id: id.clone() };
            run_suite(&scenarios, &cfg, &backend, None, args.out.as_deref())?
        }
        BuiltBackend::Oracle(b) => run_suite(&scenarios, &cfg, b, cache.as_ref(), args.out.as_deref())?,
        BuiltBackend::Random(b) => run_suite(&scenarios, &cfg, b, cache.as_ref(), args.out.as_deref())?,
        BuiltBackend::Remote(b) => run_suite(&scenarios, &cfg, b, cache.as_ref(), args.out.as_deref())?,
    };
    print!("{}", report::render_summary(&outcome.summary, outcome.phase_counts.as_ref()));
    if let Some(out) = &args.out {
        eprintln!("results written to {}", out.display());
    }
    Ok(())
}

fn sweep_command(args: &SweepArgs) -> Result<(), HarnessError> {
    let scenarios = collect_scenarios(&args.scenarios)?;
    let axis = SweepAxis::from_key(&args.axis)
        .ok_or_else(|| HarnessError::Config(format!("unknown sweep axis {}", args.axis)))?;
    let spec = SweepSpec {
        axis,
        values: args.values.clone(),
        base: build_suite_config(&args.episode),
    };
    let cache = args
        .episode
        .cache
        .as_ref()
        .map(|p| ResponseCache::open(p).map_err(HarnessError::Llm))
        .transpose()?;
    let built = build_backend(&args.episode, false)?;
    let backend: &dyn DecisionBackend = match &built {
        BuiltBackend::Oracle(b) => b,
        BuiltBackend::Random(b) => b,
        BuiltBackend::Remote(b) => b,
        BuiltBackend::Replay { .. } => unreachable!("sweep never replays"),
    };
    let rows = run_sweep(&scenarios, &spec, backend, cache.as_ref(), args.out.as_deref())?;
    println!("{:>12} {:>6} {:>8} {:>8} {:>8}", axis.key(), "n", "SR", "SPL", "PSR");
    for row in &rows {
        println!(
            "{:>12} {:>6} {:>7.2}% {:>7.2}% {:>8}",
            row.value,
            row.summary.n_episodes,
            row.summary.sr,
            row.summary.spl,
            row.summary
                .psr
                .map(|p| format!("{p:.2}%"))
                .unwrap_or_else(|| "n/a".into())
        );
    }
    Ok(())
}

fn report_command(args: &ReportArgs) -> Result<(), HarnessError> {
    let records = report::read_results_jsonl(&args.results)?;
    let results: Vec<_> = records.iter().map(|r| r.to_result()).collect();
    let summary = summarize(&results).map_err(HarnessError::Metrics)?;
    let phase_counts = records
        .iter()
        .map(|r| r.phase)
        .collect::<Option<Vec<_>>>()
        .map(|classes| {
            let mut counts = lgx_core::harness::PhaseCounts::default();
            for class in classes {
                match class {
                    lgx_core::harness::TwoPhaseClass::Success => counts.success += 1,
                    lgx_core::harness::TwoPhaseClass::Phase1 => counts.phase1 += 1,
                    lgx_core::harness::TwoPhaseClass::Phase2 => counts.phase2 += 1,
                }
            }
            counts
        });
    print!("{}", report::render_summary(&summary, phase_counts.as_ref()));
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)
            .map_err(|e| HarnessError::Io(format!("{}: {e}", dir.display())))?;
        report::write_summary_csv(&dir.join("summary.csv"), &summary)?;
        report::write_per_label_csv(&dir.join("per_label.csv"), &summary)?;
        if let Some(counts) = phase_counts {
            report::write_phases_csv(&dir.join("phases.csv"), &counts)?;
        }
    }
    Ok(())
}

fn generate_command(args: &GenerateArgs) -> Result<(), HarnessError> {
    let params = HouseParams { episodes_per_house: args.episodes, ..Default::default() };
    let paths = generate_houses(args.count, args.seed, &params, &args.out)?;
    println!("wrote {} scenarios under {}", paths.len(), args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Generate(args) => generate_command(args),
        Command::Run(args) => run_command(args, false),
        Command::Sweep(args) => sweep_command(args),
        Command::Report(args) => report_command(args),
        Command::Replay(args) => run_command(args, true),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

// Keep Path in scope for collect_scenarios signatures on all platforms.
#[allow(unused)]
fn _unused(_: &Path) {}
