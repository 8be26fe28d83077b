use serde::Serialize;

use crate::channel::Position3D;
use crate::covert::{covert_cc_parallel, covert_mi_parallel, CovertLinkScenario, DepSampler, ThresholdSearch};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, substream};
use crate::scenario::{dbw_to_watts, watts_to_dbw, NodeSpec, SystemParams};

pub const JAMMING_SCHEMA: &str = "jamming/1";

/// The single-link geometry of the jamming study: node at (3, 8, 0), its
/// jammer at (6, 21, 0), receiver at (7, 10, 19) and warden at (3, 14, 4).
pub fn reference_link(system: &SystemParams) -> CovertLinkScenario {
    let node = NodeSpec {
        position: Position3D::new(3.0, 8.0, 0.0),
        jammer: Position3D::new(6.0, 21.0, 0.0),
        warden: Position3D::new(3.0, 14.0, 4.0),
        receiver: Position3D::new(7.0, 10.0, 19.0),
        budget: 0.0,
        eta1: 0.0,
        eta2: 0.0,
    };
    system.link(&node, 0.0)
}

/// −40 dBW to 30 dBW in 2.5 dB steps.
pub fn default_power_grid_dbw() -> Vec<f64> {
    (0..=28).map(|k| -40.0 + 2.5 * k as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JammingSweepConfig {
    /// Jamming powers in W, ascending; zero is allowed.
    pub powers_w: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub workers: usize,
    pub threshold: ThresholdSearch,
}

impl JammingSweepConfig {
    pub fn from_dbw(grid_dbw: &[f64], samples: usize, seed: u64) -> Self {
        let mut powers_w = vec![0.0];
        powers_w.extend(grid_dbw.iter().map(|&d| dbw_to_watts(d)));
        JammingSweepConfig {
            powers_w,
            samples,
            seed,
            workers: 4,
            threshold: ThresholdSearch::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JammingRow {
    pub schema: &'static str,
    pub seed: u64,
    pub power_w: f64,
    /// Empty for zero power.
    pub power_dbw: Option<f64>,
    pub dep: f64,
    pub dep_subcarrier: usize,
    pub cc_bps: f64,
    pub cc_stderr: f64,
    pub mi_bits: f64,
    pub mi_stderr: f64,
    /// Relative to the same draws without jamming.
    pub cc_reduction: f64,
    pub mi_reduction: f64,
}

/// DEP, CC and MI of `link` at every power of the grid. The same seeds are
/// used at every point, so each point sees identical fading draws.
pub fn sweep_jamming(link: &CovertLinkScenario, cfg: &JammingSweepConfig) -> Result<Vec<JammingRow>> {
    if cfg.powers_w.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::param("jamming powers must be finite and non-negative"));
    }
    if cfg.powers_w.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::param("power grid must be ascending"));
    }
    let cc_seed = derive_seed(cfg.seed, &[1]);
    let mi_seed = derive_seed(cfg.seed, &[2]);
    let quiet = link.with_jamming_power(0.0);
    let cc0 = covert_cc_parallel(&quiet, cfg.samples, cc_seed, cfg.workers)?.mean;
    let mi0 = covert_mi_parallel(&quiet, cfg.samples, mi_seed, cfg.workers)?.mean;
    let mut rows = Vec::with_capacity(cfg.powers_w.len());
    for &p in &cfg.powers_w {
        let s = link.with_jamming_power(p);
        let dep = DepSampler::new(&s, cfg.samples, cfg.threshold, &mut substream(cfg.seed, &[3]))?.nominal()?;
        let cc = covert_cc_parallel(&s, cfg.samples, cc_seed, cfg.workers)?;
        let mi = covert_mi_parallel(&s, cfg.samples, mi_seed, cfg.workers)?;
        log::debug!("jamming {p:.3e} W: dep {:.4}", dep.dep);
        rows.push(JammingRow {
            schema: JAMMING_SCHEMA,
            seed: cfg.seed,
            power_w: p,
            power_dbw: (p > 0.0).then(|| (watts_to_dbw(p) * 1e9).round() / 1e9),
            dep: dep.dep,
            dep_subcarrier: dep.subcarrier,
            cc_bps: cc.mean,
            cc_stderr: cc.stderr,
            mi_bits: mi.mean,
            mi_stderr: mi.stderr,
            cc_reduction: 1.0 - cc.mean / cc0,
            mi_reduction: 1.0 - mi.mean / mi0,
        });
    }
    Ok(rows)
}
