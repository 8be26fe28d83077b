use std::time::Instant;

use serde::Serialize;

use crate::auction::{det_run, rmca_phase_a, rmca_phase_b};
use crate::error::{Error, Result};
use crate::rng::substream;
use crate::scenario::MarketScenario;
use crate::uncertainty::{BoxSearchConfig, UncertaintySet, ValuationModel, WardenBox, WardenBoxInterval};

pub const UNCERTAINTY_SCHEMA: &str = "uncertainty/1";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UncertaintySweepConfig {
    /// Warden-box half-widths in m, ascending.
    pub half_widths_m: Vec<f64>,
    pub search: BoxSearchConfig,
    /// One valuation model (and one row per width) per seed.
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UncertaintyRow {
    pub schema: &'static str,
    pub seed: u64,
    pub half_width_m: f64,
    /// Worst-case welfare of the robust nominal allocation.
    pub robust_welfare: f64,
    /// Welfare of the deterministic mechanism at the submitted bids.
    pub deterministic_welfare: f64,
    /// Welfare of the full robust outcome (both phases) at the submitted bids.
    pub rmca_realized_welfare: f64,
    pub mean_radius: f64,
    pub max_radius: f64,
    pub elapsed_s: f64,
}

fn wardens(scenario: &MarketScenario) -> Vec<crate::channel::Position3D> {
    scenario.nodes.iter().map(|n| n.warden).collect()
}

/// Robust and deterministic welfare as the warden boxes grow. Boxes are
/// nested and each search is seeded with the extremes of the previous one,
/// so the intervals only widen.
pub fn sweep_uncertainty(scenario: &MarketScenario, cfg: &UncertaintySweepConfig) -> Result<Vec<UncertaintyRow>> {
    scenario.validate()?;
    if cfg.half_widths_m.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::param("box half-widths must be finite and non-negative"));
    }
    if cfg.half_widths_m.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::param("box half-widths must be ascending"));
    }
    let (n, m) = (scenario.n(), scenario.m());
    let costs = scenario.costs();
    let budgets = scenario.budgets();
    let mut rows = Vec::new();
    for &seed in &cfg.seeds {
        let model = ValuationModel::build(n, m, &scenario.pair_models(), &cfg.search, seed)?;
        let bids = model.valuations_at(&wardens(scenario))?;
        let det = det_run(&bids, &budgets, &costs, &mut substream(seed, &[0xD1]))?;
        let mut prev: Option<WardenBoxInterval> = None;
        for &w in &cfg.half_widths_m {
            let start = Instant::now();
            let boxes: Vec<WardenBox> = scenario.nodes.iter().map(|nd| WardenBox::cube(nd.warden, w)).collect();
            let interval = model.build_interval(&boxes, &cfg.search, seed, prev.as_ref())?;
            let set = UncertaintySet::Interval(interval.set.clone());
            let phase_a = rmca_phase_a(&set, &budgets, &costs)?;
            // The nominal bids are inside the set by construction.
            let rmca = rmca_phase_b(&interval.nominal, &phase_a, &set, &budgets, &costs, &mut substream(seed, &[0xD2]))?;
            let radius = &interval.set.radius;
            rows.push(UncertaintyRow {
                schema: UNCERTAINTY_SCHEMA,
                seed,
                half_width_m: w,
                robust_welfare: phase_a.robust.objective,
                deterministic_welfare: det.social_welfare,
                rmca_realized_welfare: rmca.social_welfare,
                mean_radius: radius.as_slice().iter().sum::<f64>() / (n * m) as f64,
                max_radius: radius.as_slice().iter().copied().fold(0.0, f64::max),
                elapsed_s: start.elapsed().as_secs_f64(),
            });
            log::info!("half-width {w} m: robust welfare {:.6}", phase_a.robust.objective);
            prev = Some(interval);
        }
    }
    Ok(rows)
}
