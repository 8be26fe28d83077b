//! Command-line harness: scenario generation, experiment sweeps written as
//! CSV, timing benchmarks, and single auction runs.

use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use covert_auction::auction::{det_run, rmca_phase_a, rmca_phase_b, Mechanism};
use covert_auction::experiments::{
    default_power_grid_dbw, experiment_box_search, experiment_ir_violation, reference_link, sweep_bids, sweep_jamming,
    sweep_uncertainty, write_csv, BidSweepConfig, Displacement, IrConfig, JammingSweepConfig, TimingConfig,
    UncertaintySweepConfig,
};
use covert_auction::rng::substream;
use covert_auction::scenario::{generate_scenario, load_scenario, save_scenario, GeneratorConfig, MarketScenario};
use covert_auction::uncertainty::{BoxSearchConfig, UncertaintySet, ValuationModel, WardenBox};
use covert_auction::Error as CoreError;

#[derive(Parser)]
#[command(name = "covert-auction", version, about = "Robust channel auctions for covert JRC nodes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random market scenario and write it as JSON.
    GenScenario(GenArgs),
    /// DEP, CC and MI of the reference link across jamming powers.
    SweepJamming(JammingArgs),
    /// Robust and deterministic welfare as the warden boxes grow.
    SweepUncertainty(UncertaintyArgs),
    /// True utilities of both mechanisms with the warden displaced.
    IrViolation(IrArgs),
    /// Allocation probabilities as one node raises its bids.
    SweepBids(BidArgs),
    /// Wall-clock time of both mechanisms over a grid of market sizes.
    BenchTiming(TimingArgs),
    /// Run one auction.
    Auction {
        #[command(subcommand)]
        command: AuctionCommand,
    },
}

#[derive(Subcommand)]
enum AuctionCommand {
    /// Run a mechanism on a scenario and write the outcome as CSV.
    Run(RunArgs),
}

#[derive(Args)]
struct Common {
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; standard output if omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct MarketSource {
    /// Scenario file; a scenario is generated from the seed if omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    nodes: usize,
    #[arg(long, default_value_t = 10)]
    channels: usize,
}

#[derive(Args)]
struct SearchArgs {
    /// Fading draws per sub-carrier for each DEP evaluation.
    #[arg(long)]
    samples: Option<usize>,
    /// Use the full 5x5x5 grid and a 20 x 50 swarm instead of the fast search.
    #[arg(long)]
    full_search: bool,
    #[arg(long, default_value_t = 4)]
    workers: usize,
}

impl SearchArgs {
    fn config(&self) -> BoxSearchConfig {
        let mut c = if self.full_search {
            BoxSearchConfig::default()
        } else {
            experiment_box_search()
        };
        if let Some(s) = self.samples {
            c.dep_samples = s;
        }
        c.workers = self.workers;
        c
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 20)]
    nodes: usize,
    #[arg(long, default_value_t = 10)]
    channels: usize,
    /// Half-width of the warden box stored in the scenario, m.
    #[arg(long, default_value_t = 2.0)]
    half_width: f64,
}

#[derive(Args)]
struct JammingArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = -40.0, allow_negative_numbers = true)]
    min_dbw: f64,
    #[arg(long, default_value_t = 30.0, allow_negative_numbers = true)]
    max_dbw: f64,
    #[arg(long, default_value_t = 2.5)]
    step_db: f64,
    #[arg(long, default_value_t = 4)]
    workers: usize,
}

#[derive(Args)]
struct UncertaintyArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    market: MarketSource,
    #[command(flatten)]
    search: SearchArgs,
    /// Comma-separated ascending half-widths, m.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,4,8")]
    widths: Vec<f64>,
    /// Number of Monte-Carlo seeds (one row per width and seed).
    #[arg(long, default_value_t = 1)]
    trials: usize,
}

#[derive(Args)]
struct IrArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    market: MarketSource,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long, default_value_t = 5.0)]
    half_width: f64,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Move the true warden outside the box instead of inside it.
    #[arg(long)]
    outside: bool,
}

#[derive(Args)]
struct BidArgs {
    #[command(flatten)]
    common: Common,
    /// Budget of the varied node.
    #[arg(long, default_value_t = 6.86)]
    budget: f64,
    #[arg(long, default_value_t = 0.5)]
    max_increment: f64,
    #[arg(long, default_value_t = 0.05)]
    step: f64,
    /// Interval radius given to the robust mechanism, as a fraction of each bid.
    #[arg(long, default_value_t = 0.0)]
    radius: f64,
}

#[derive(Args)]
struct TimingArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long, value_delimiter = ',', default_value = "5,10,15,20")]
    nodes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "2,4,6,8,10")]
    channels: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    repetitions: usize,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    mechanism: Mechanism,
}

fn emit<T: Serialize>(path: Option<&Path>, rows: &[T]) -> Result<()> {
    match path {
        Some(p) => {
            write_csv(std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?, rows)?;
            log::info!("wrote {} rows to {}", rows.len(), p.display());
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write_csv(&mut lock, rows)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn market(src: &MarketSource, seed: u64) -> Result<MarketScenario> {
    let s = match &src.scenario {
        Some(p) => load_scenario(p).with_context(|| format!("loading {}", p.display()))?,
        None => generate_scenario(
            &GeneratorConfig {
                nodes: src.nodes,
                channels: src.channels,
                ..GeneratorConfig::default()
            },
            seed,
        )?,
    };
    eprintln!("scenario hash {}", s.hash()?);
    Ok(s)
}

fn gen_scenario(a: &GenArgs) -> Result<()> {
    let cfg = GeneratorConfig {
        nodes: a.nodes,
        channels: a.channels,
        warden_half_width_m: a.half_width,
        ..GeneratorConfig::default()
    };
    let s = generate_scenario(&cfg, a.common.seed)?;
    match &a.common.output {
        Some(p) => save_scenario(&s, p)?,
        None => println!("{}", s.to_json()?),
    }
    eprintln!("scenario hash {}", s.hash()?);
    Ok(())
}

fn jamming(a: &JammingArgs) -> Result<()> {
    if !(a.step_db > 0.0) || a.max_dbw < a.min_dbw {
        bail!("the power grid needs a positive step and min ≤ max");
    }
    let steps = ((a.max_dbw - a.min_dbw) / a.step_db + 1e-9).floor() as usize;
    let grid: Vec<f64> = (0..=steps).map(|k| a.min_dbw + a.step_db * k as f64).collect();
    let grid = if grid.is_empty() { default_power_grid_dbw() } else { grid };
    let mut cfg = JammingSweepConfig::from_dbw(&grid, a.samples, a.common.seed);
    cfg.workers = a.workers;
    let link = reference_link(&covert_auction::scenario::SystemParams::default());
    emit(a.common.output.as_deref(), &sweep_jamming(&link, &cfg)?)
}

fn uncertainty(a: &UncertaintyArgs) -> Result<()> {
    let s = market(&a.market, a.common.seed)?;
    let cfg = UncertaintySweepConfig {
        half_widths_m: a.widths.clone(),
        search: a.search.config(),
        seeds: (0..a.trials.max(1) as u64).map(|t| a.common.seed + t).collect(),
    };
    emit(a.common.output.as_deref(), &sweep_uncertainty(&s, &cfg)?)
}

fn ir(a: &IrArgs) -> Result<()> {
    let s = market(&a.market, a.common.seed)?;
    let cfg = IrConfig {
        half_width_m: a.half_width,
        trials: a.trials,
        displacement: if a.outside {
            Displacement::Outside
        } else {
            Displacement::Inside
        },
        search: a.search.config(),
        seed: a.common.seed,
    };
    let report = experiment_ir_violation(&s, &cfg)?;
    eprintln!(
        "min true utility: rmca {:.6}, deterministic {:.6}; trials with a negative utility: rmca {}, deterministic {}",
        report.rmca_min_true, report.det_min_true, report.rmca_negative_trials, report.det_negative_trials
    );
    emit(a.common.output.as_deref(), &report.rows)
}

fn bids(a: &BidArgs) -> Result<()> {
    if !(a.step > 0.0) || a.max_increment < 0.0 {
        bail!("increments need a positive step and a non-negative maximum");
    }
    let steps = (a.max_increment / a.step + 1e-9).floor() as usize;
    let mut cfg = BidSweepConfig {
        increments: (0..=steps).map(|k| a.step * k as f64).collect(),
        relative_radius: a.radius,
        seed: a.common.seed,
        ..BidSweepConfig::default()
    };
    let node = cfg.node;
    cfg.budgets[node] = a.budget;
    emit(a.common.output.as_deref(), &sweep_bids(&cfg)?)
}

fn timing(a: &TimingArgs) -> Result<()> {
    let mut cfg = TimingConfig::new(a.search.config());
    cfg.node_counts = a.nodes.clone();
    cfg.channel_counts = a.channels.clone();
    cfg.repetitions = a.repetitions;
    cfg.seed = a.common.seed;
    emit(a.common.output.as_deref(), &covert_auction::experiments::bench_timing(&cfg)?)
}

fn run(a: &RunArgs) -> Result<()> {
    let s = load_scenario(&a.scenario).with_context(|| format!("loading {}", a.scenario.display()))?;
    eprintln!("scenario hash {}", s.hash()?);
    let (n, m) = (s.n(), s.m());
    let costs = s.costs();
    let budgets = s.budgets();
    let seed = a.common.seed;
    let cfg = a.search.config();

    let need_model = s.bids.is_none() || (a.mechanism == Mechanism::Rmca && s.uncertainty.is_none());
    let model = if need_model {
        Some(ValuationModel::build(n, m, &s.pair_models(), &cfg, seed)?)
    } else {
        None
    };
    let bids = match (&s.bids, &model) {
        (Some(b), _) => b.clone(),
        (None, Some(vm)) => vm.valuations_at(&s.nodes.iter().map(|nd| nd.warden).collect::<Vec<_>>())?,
        (None, None) => unreachable!("a valuation model is built whenever bids are missing"),
    };
    let mut rng = substream(seed, &[0xA0]);
    let outcome = match a.mechanism {
        Mechanism::Deterministic => det_run(&bids, &budgets, &costs, &mut rng)?,
        Mechanism::Rmca => {
            let set = match (&s.uncertainty, &model) {
                (Some(u), _) => u.clone(),
                (None, Some(vm)) => {
                    let boxes: Vec<WardenBox> =
                        s.nodes.iter().map(|nd| WardenBox::cube(nd.warden, s.warden_half_width_m)).collect();
                    UncertaintySet::Interval(vm.build_interval(&boxes, &cfg, seed, None)?.set)
                }
                (None, None) => unreachable!("a valuation model is built whenever the set is missing"),
            };
            let phase_a = rmca_phase_a(&set, &budgets, &costs)?;
            rmca_phase_b(&bids, &phase_a, &set, &budgets, &costs, &mut rng)?
        }
    };
    if outcome.rejected {
        eprintln!("bids fall outside the uncertainty set; the auction was rejected");
    }
    emit(a.common.output.as_deref(), &outcome.rows())
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::GenScenario(a) => gen_scenario(a),
        Command::SweepJamming(a) => jamming(a),
        Command::SweepUncertainty(a) => uncertainty(a),
        Command::IrViolation(a) => ir(a),
        Command::SweepBids(a) => bids(a),
        Command::BenchTiming(a) => timing(a),
        Command::Auction {
            command: AuctionCommand::Run(a),
        } => run(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let invalid = matches!(
                e.downcast_ref::<CoreError>(),
                Some(CoreError::Validation(_) | CoreError::Parse(_) | CoreError::InvalidParameter(_))
            );
            ExitCode::from(if invalid { 2 } else { 1 })
        }
    }
}
