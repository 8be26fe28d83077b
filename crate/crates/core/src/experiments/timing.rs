use std::time::Instant;

use serde::Serialize;

use crate::auction::{det_run, rmca_phase_a_with, rmca_phase_b, RobustSolver};
use crate::error::{Error, Result};
use crate::rng::substream;
use crate::scenario::{generate_scenario, GeneratorConfig};
use crate::uncertainty::{BoxSearchConfig, UncertaintySet, ValuationModel, WardenBox};

pub const TIMING_SCHEMA: &str = "timing/1";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingConfig {
    pub node_counts: Vec<usize>,
    pub channel_counts: Vec<usize>,
    /// Repetitions of the allocation and payment solves.
    pub repetitions: usize,
    pub half_width_m: f64,
    pub search: BoxSearchConfig,
    pub solver: RobustSolver,
    pub generator: GeneratorConfig,
    pub seed: u64,
}

impl TimingConfig {
    pub fn new(search: BoxSearchConfig) -> Self {
        TimingConfig {
            node_counts: vec![5, 10, 15, 20],
            channel_counts: vec![2, 4, 6, 8, 10],
            repetitions: 5,
            half_width_m: 2.0,
            search,
            solver: RobustSolver::CuttingPlane,
            generator: GeneratorConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingRow {
    pub schema: &'static str,
    pub seed: u64,
    pub nodes: usize,
    pub channels: usize,
    pub mechanism: &'static str,
    pub repetitions: usize,
    /// Building the interval set from the warden boxes (robust mechanism only).
    pub set_s: f64,
    /// Median over repetitions of allocation, pricing and payments.
    pub solve_median_s: f64,
    pub solve_min_s: f64,
    pub total_s: f64,
}

fn median(mut t: Vec<f64>) -> (f64, f64) {
    t.sort_by(f64::total_cmp);
    let k = t.len();
    let med = if k % 2 == 1 { t[k / 2] } else { 0.5 * (t[k / 2 - 1] + t[k / 2]) };
    (med, t[0])
}

/// Wall-clock time of both mechanisms on generated markets. Valuations
/// (the bidders' own computation) are prepared outside the clock. The
/// robust mechanism's time includes the warden-box search that produces its
/// uncertainty set; the deterministic mechanism needs no set.
pub fn bench_timing(cfg: &TimingConfig) -> Result<Vec<TimingRow>> {
    if cfg.repetitions == 0 {
        return Err(Error::param("at least one repetition is required"));
    }
    let mut rows = Vec::new();
    for &n in &cfg.node_counts {
        for &m in &cfg.channel_counts {
            let gen = GeneratorConfig {
                nodes: n,
                channels: m,
                ..cfg.generator.clone()
            };
            let scenario = generate_scenario(&gen, cfg.seed)?;
            let costs = scenario.costs();
            let budgets = scenario.budgets();
            let model = ValuationModel::build(n, m, &scenario.pair_models(), &cfg.search, cfg.seed)?;
            let boxes: Vec<WardenBox> =
                scenario.nodes.iter().map(|nd| WardenBox::cube(nd.warden, cfg.half_width_m)).collect();

            let start = Instant::now();
            let interval = model.build_interval(&boxes, &cfg.search, cfg.seed, None)?;
            let set_s = start.elapsed().as_secs_f64();
            let bids = interval.nominal.clone();
            let set = UncertaintySet::Interval(interval.set);

            let mut t_rmca = Vec::with_capacity(cfg.repetitions);
            let mut t_det = Vec::with_capacity(cfg.repetitions);
            for rep in 0..cfg.repetitions {
                let mut rng = substream(cfg.seed, &[n as u64, m as u64, rep as u64]);
                let start = Instant::now();
                let a = rmca_phase_a_with(&set, &budgets, &costs, cfg.solver)?;
                rmca_phase_b(&bids, &a, &set, &budgets, &costs, &mut rng)?;
                t_rmca.push(start.elapsed().as_secs_f64());

                let start = Instant::now();
                det_run(&bids, &budgets, &costs, &mut rng)?;
                t_det.push(start.elapsed().as_secs_f64());
            }
            for (mechanism, set_s, times) in [("rmca", set_s, t_rmca), ("deterministic", 0.0, t_det)] {
                let (solve_median_s, solve_min_s) = median(times);
                rows.push(TimingRow {
                    schema: TIMING_SCHEMA,
                    seed: cfg.seed,
                    nodes: n,
                    channels: m,
                    mechanism,
                    repetitions: cfg.repetitions,
                    set_s,
                    solve_median_s,
                    solve_min_s,
                    total_s: set_s + solve_median_s,
                });
            }
            log::info!("timed N={n}, M={m}");
        }
    }
    Ok(rows)
}
