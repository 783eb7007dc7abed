//! `vlnplan` command line: run suites, compare ablations, generate fixtures.
//!
//! Exit codes: 0 success, 2 input error (nothing written), 3 some episodes
//! failed at runtime.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use vlnplan::fixtures::{generate, FixtureConfig, FixtureKind};
use vlnplan::metrics::summary_table;
use vlnplan::planner::Ablation;
use vlnplan::suite::{compare_ablations, run_suite, NavigatorFactory, ScriptedKind, ScriptedNavigators, Suite, SuiteRun};
use vlnplan::{Planner, PlannerConfig};
use vlnplan_mllm::{record_replay, CassetteMode, HttpTransport, ModelEndpointConfig, NetworkedFactory, Templates, Transport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "vlnplan", version, about = "Hierarchical global-local navigation planner")]
pub struct Cli {
    /// Don't print the summary table or progress lines to stdout.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one planner configuration over a suite.
    Run {
        #[command(flatten)]
        suite: SuiteArgs,
        #[arg(long, value_enum, default_value_t = AblationArg::None)]
        ablation: AblationArg,
    },
    /// Run full, no-backward and local-only over the same suite.
    Ablations {
        #[command(flatten)]
        suite: SuiteArgs,
    },
    /// Write seeded scenes and episodes.
    GenFixtures(GenArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AblationArg {
    None,
    NoBackward,
    LocalOnly,
}

impl From<AblationArg> for Ablation {
    fn from(a: AblationArg) -> Self {
        match a {
            AblationArg::None => Ablation::FULL,
            AblationArg::NoBackward => Ablation::NO_BACKWARD,
            AblationArg::LocalOnly => Ablation::LOCAL_ONLY,
        }
    }
}

#[derive(Debug, Args)]
pub struct SuiteArgs {
    /// Directory of scene `.json` files.
    #[arg(long)]
    pub scenes: PathBuf,
    /// Newline-delimited episode file.
    #[arg(long)]
    pub episodes: PathBuf,
    /// `greedy`, `drift:<p>` or `networked`.
    #[arg(long, default_value = "greedy")]
    pub navigator: String,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub parallel: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 3.0)]
    pub threshold_m: f64,
    #[arg(long, default_value_t = 40)]
    pub max_steps: usize,
    #[arg(long, default_value_t = 2)]
    pub max_stays: usize,
    #[arg(long, default_value_t = 3)]
    pub max_backtracks: usize,
    /// Radius within which scripted audits accept a landmark (meters).
    #[arg(long, default_value_t = 3.0)]
    pub audit_radius: f64,
    #[command(flatten)]
    pub net: NetArgs,
}

#[derive(Debug, Args)]
pub struct NetArgs {
    #[arg(long, default_value = "http://127.0.0.1:8000/v1")]
    pub base_url: String,
    #[arg(long, default_value = "default")]
    pub model: String,
    #[arg(long, default_value = "MLLM_API_KEY")]
    pub api_key_env: String,
    #[arg(long, default_value_t = 60.0)]
    pub timeout_s: f64,
    #[arg(long, default_value_t = 4)]
    pub max_retries: usize,
    #[arg(long, default_value_t = 4)]
    pub max_in_flight: usize,
    /// Attach candidate images (data URLs) to look-now prompts.
    #[arg(long)]
    pub images: bool,
    /// Resolve relative image refs against this directory.
    #[arg(long)]
    pub image_root: Option<PathBuf>,
    /// Prompt template directory (forward.txt, now.txt, backward.txt).
    #[arg(long)]
    pub templates: Option<PathBuf>,
    #[arg(long, value_parser = ["live", "record", "replay"], default_value = "live")]
    pub cassette_mode: String,
    #[arg(long)]
    pub cassette: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value = "grid-maze")]
    pub kind: String,
    #[arg(long, default_value_t = 20)]
    pub count: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Grid side, line length or star arm length, in nodes.
    #[arg(long, default_value_t = 8)]
    pub size: usize,
    #[arg(long, default_value_t = 4.0)]
    pub spacing: f64,
    #[arg(long, default_value_t = 0.0)]
    pub distractor_rate: f64,
    #[arg(long, default_value_t = 0.15)]
    pub loop_rate: f64,
    #[arg(long)]
    pub out: PathBuf,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

fn input(message: impl ToString) -> Failure {
    Failure { code: EXIT_INPUT, message: message.to_string() }
}

/// Parses arguments and executes; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

pub fn execute(cli: &Cli) -> Result<i32, Failure> {
    match &cli.command {
        Command::Run { suite, ablation } => run_command(suite, Some((*ablation).into()), cli.quiet),
        Command::Ablations { suite } => run_command(suite, None, cli.quiet),
        Command::GenFixtures(args) => gen_fixtures(args, cli.quiet),
    }
}

fn planner_config(args: &SuiteArgs, ablation: Ablation) -> PlannerConfig {
    PlannerConfig {
        distance_threshold: args.threshold_m,
        max_steps: args.max_steps,
        max_consecutive_stays: args.max_stays,
        max_backtracks: args.max_backtracks,
        ablation,
        reveal_goal: false,
    }
}

fn factory(args: &SuiteArgs) -> Result<Box<dyn NavigatorFactory>, Failure> {
    if args.navigator != "networked" {
        let kind: ScriptedKind = args.navigator.parse().map_err(input)?;
        if !(args.audit_radius > 0.0) {
            return Err(input("audit radius must be positive"));
        }
        return Ok(Box::new(ScriptedNavigators::new(kind, args.seed, args.audit_radius)));
    }
    let net = &args.net;
    let mode: CassetteMode = net.cassette_mode.parse().map_err(input)?;
    let templates = match &net.templates {
        Some(dir) => Templates::load(dir).map_err(input)?,
        None => Templates::default(),
    };
    let config = ModelEndpointConfig {
        base_url: net.base_url.clone(),
        model_name: net.model.clone(),
        api_key_env: net.api_key_env.clone(),
        timeout_s: net.timeout_s,
        max_retries: net.max_retries,
        max_in_flight: net.max_in_flight,
        supports_images: net.images,
    };
    let live: Option<Arc<dyn Transport>> = if mode == CassetteMode::Replay {
        None
    } else {
        Some(Arc::new(HttpTransport::new(config.clone()).map_err(input)?))
    };
    let transport = record_replay(mode, net.cassette.as_deref(), live).map_err(input)?;
    Ok(Box::new(NetworkedFactory {
        transport,
        templates: Arc::new(templates),
        model: config.model_name,
        images: net.images,
        image_root: net.image_root.clone(),
    }))
}

fn write_run(run: &SuiteRun, dir: &Path) -> Result<(), Failure> {
    run.write(dir).map_err(|e| Failure { code: 1, message: e.to_string() })
}

fn run_command(args: &SuiteArgs, ablation: Option<Ablation>, quiet: bool) -> Result<i32, Failure> {
    // validate everything before touching the output directory
    if args.parallel == 0 {
        return Err(input("--parallel must be at least 1"));
    }
    let suite = Suite::load(&args.scenes, &args.episodes).map_err(input)?;
    let planner = Planner::new(planner_config(args, ablation.unwrap_or_default()), Default::default());
    planner.config.validate().map_err(input)?;
    let factory = factory(args)?;

    let runs = match ablation {
        Some(a) => vec![run_suite(&suite, &planner, factory.as_ref(), args.parallel, a.label()).map_err(input)?],
        None => compare_ablations(&suite, &planner, factory.as_ref(), args.parallel).map_err(input)?,
    };
    if ablation.is_some() {
        write_run(&runs[0], &args.out)?;
    } else {
        for run in &runs {
            write_run(run, &args.out.join(&run.method))?;
        }
    }
    let rows: Vec<_> = runs.iter().map(|r| r.summary.clone()).collect();
    let table = summary_table(&rows);
    std::fs::write(args.out.join("summary.csv"), &table).map_err(|e| Failure { code: 1, message: e.to_string() })?;
    if !quiet {
        print!("{table}");
    }

    let failed: usize = runs.iter().map(SuiteRun::failures).sum();
    if failed > 0 {
        eprintln!("{failed} episode run(s) failed; see results/*.json");
        return Ok(EXIT_PARTIAL);
    }
    Ok(EXIT_OK)
}

fn gen_fixtures(args: &GenArgs, quiet: bool) -> Result<i32, Failure> {
    let kind: FixtureKind = args.kind.parse().map_err(input)?;
    let config = FixtureConfig {
        kind,
        count: args.count,
        seed: args.seed,
        size: args.size,
        spacing: args.spacing,
        distractor_rate: args.distractor_rate,
        loop_rate: args.loop_rate,
    };
    let set = generate(&config).map_err(input)?;
    set.write(&args.out).map_err(|e| Failure { code: 1, message: e.to_string() })?;
    if !quiet {
        println!("wrote {} scenes and {} episodes to {}", set.scenes.len(), set.episodes.len(), args.out.display());
    }
    Ok(EXIT_OK)
}
