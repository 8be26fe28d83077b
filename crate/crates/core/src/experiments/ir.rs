use rand::Rng;
use serde::Serialize;

use crate::auction::{det_run, det_true_utility, rmca_phase_a, rmca_phase_b, AuctionOutcome};
use crate::channel::Position3D;
use crate::error::{Error, Result};
use crate::rng::substream;
use crate::scenario::MarketScenario;
use crate::uncertainty::{BoxSearchConfig, UncertaintySet, ValuationModel, WardenBox};

pub const IR_SCHEMA: &str = "ir/1";

/// Where the true warden ends up relative to the box the bids assumed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Displacement {
    /// A random fraction of the way from the believed position to the
    /// box's lowest-DEP point.
    Inside,
    /// Two to three half-widths past the believed position in the same direction.
    Outside,
}

impl Displacement {
    fn label(self) -> &'static str {
        match self {
            Displacement::Inside => "inside",
            Displacement::Outside => "outside",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IrConfig {
    pub half_width_m: f64,
    pub trials: usize,
    pub displacement: Displacement,
    pub search: BoxSearchConfig,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IrRow {
    pub schema: &'static str,
    pub seed: u64,
    pub trial: usize,
    pub node: usize,
    pub displacement: &'static str,
    /// Fractional utility at the submitted (believed) valuations.
    pub rmca_expected: f64,
    /// Fractional utility at the valuations of the true warden position.
    pub rmca_true: f64,
    pub det_expected: f64,
    pub det_true: f64,
    pub warden_shift_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IrReport {
    pub rows: Vec<IrRow>,
    pub rmca_min_true: f64,
    pub det_min_true: f64,
    /// Trials in which some node's true utility is below `−1e-6`.
    pub rmca_negative_trials: usize,
    pub det_negative_trials: usize,
}

/// The channel on which node `i` holds the most allocation under either
/// mechanism (0 if it holds none).
fn main_channel(i: usize, a: &AuctionOutcome, b: &AuctionOutcome) -> usize {
    let m = a.allocation.cols();
    (0..m)
        .max_by(|&x, &y| {
            let s = |j: usize| a.allocation[(i, j)] + b.allocation[(i, j)];
            s(x).total_cmp(&s(y))
        })
        .unwrap_or(0)
}

/// Both mechanisms receive the bids computed at the believed warden
/// positions; utilities are then re-evaluated with the wardens moved.
pub fn experiment_ir_violation(scenario: &MarketScenario, cfg: &IrConfig) -> Result<IrReport> {
    scenario.validate()?;
    if cfg.trials == 0 {
        return Err(Error::param("at least one trial is required"));
    }
    if !(cfg.half_width_m.is_finite() && cfg.half_width_m > 0.0) {
        return Err(Error::param("the warden box must have a positive half-width"));
    }
    let (n, m) = (scenario.n(), scenario.m());
    let costs = scenario.costs();
    let budgets = scenario.budgets();
    let model = ValuationModel::build(n, m, &scenario.pair_models(), &cfg.search, cfg.seed)?;
    let boxes: Vec<WardenBox> = scenario.nodes.iter().map(|nd| WardenBox::cube(nd.warden, cfg.half_width_m)).collect();
    let interval = model.build_interval(&boxes, &cfg.search, cfg.seed, None)?;
    let bids = interval.nominal.clone();
    let set = UncertaintySet::Interval(interval.set.clone());
    let phase_a = rmca_phase_a(&set, &budgets, &costs)?;
    let rmca = rmca_phase_b(&bids, &phase_a, &set, &budgets, &costs, &mut substream(cfg.seed, &[0x1A, 1]))?;
    let det = det_run(&bids, &budgets, &costs, &mut substream(cfg.seed, &[0x1A, 2]))?;
    let rmca_expected = rmca.utilities(&bids)?;
    let det_expected = det.utilities(&bids)?;

    let mut rows = Vec::with_capacity(cfg.trials * n);
    let (mut rmca_min, mut det_min) = (f64::INFINITY, f64::INFINITY);
    let (mut rmca_neg, mut det_neg) = (0, 0);
    for t in 0..cfg.trials {
        let mut rng = substream(cfg.seed, &[0x1A, 3, t as u64]);
        let mut shifts = Vec::with_capacity(n);
        let positions: Vec<Position3D> = (0..n)
            .map(|i| {
                let from = scenario.nodes[i].warden;
                let target = interval.argmin[i * m + main_channel(i, &rmca, &det)];
                let dir = [target.x - from.x, target.y - from.y, target.z - from.z];
                let span = dir.iter().fold(0.0f64, |a, d| a.max(d.abs()));
                let scale = if span == 0.0 {
                    0.0
                } else {
                    match cfg.displacement {
                        Displacement::Inside => rng.gen_range(0.5..=1.0),
                        Displacement::Outside => rng.gen_range(2.0..3.0) * cfg.half_width_m / span,
                    }
                };
                let p = from.offset(dir.map(|d| d * scale));
                shifts.push(from.distance(&p));
                p
            })
            .collect();
        let truth = model.valuations_at(&positions)?;
        let rmca_true = rmca.utilities(&truth)?;
        let det_true = det_true_utility(&det, &truth)?;
        if rmca_true.iter().any(|&u| u < -1e-6) {
            rmca_neg += 1;
        }
        if det_true.iter().any(|&u| u < -1e-6) {
            det_neg += 1;
        }
        for i in 0..n {
            rmca_min = rmca_min.min(rmca_true[i]);
            det_min = det_min.min(det_true[i]);
            rows.push(IrRow {
                schema: IR_SCHEMA,
                seed: cfg.seed,
                trial: t,
                node: i,
                displacement: cfg.displacement.label(),
                rmca_expected: rmca_expected[i],
                rmca_true: rmca_true[i],
                det_expected: det_expected[i],
                det_true: det_true[i],
                warden_shift_m: shifts[i],
            });
        }
    }
    Ok(IrReport {
        rows,
        rmca_min_true: rmca_min,
        det_min_true: det_min,
        rmca_negative_trials: rmca_neg,
        det_negative_trials: det_neg,
    })
}
