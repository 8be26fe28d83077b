use serde::Serialize;

use crate::auction::{det_run, rmca_phase_a, rmca_phase_b, AuctionOutcome};
use crate::error::{Error, Result};
use crate::lp::check_market;
use crate::matrix::Matrix;
use crate::rng::substream;
use crate::uncertainty::{IntervalUncertainty, UncertaintySet};

pub const BIDS_SCHEMA: &str = "bids/1";

/// Submitted bids of the five-node, three-channel example.
pub fn reference_bids() -> Matrix {
    Matrix::from_rows(vec![
        vec![4.17, 3.11, 3.69],
        vec![4.77, 2.56, 3.09],
        vec![4.42, 4.20, 3.12],
        vec![4.23, 4.33, 3.26],
        vec![4.75, 4.07, 4.58],
    ])
    .expect("rectangular table")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BidSweepConfig {
    pub base_bids: Matrix,
    /// Uniform increments added to every bid of `node`, ascending.
    pub increments: Vec<f64>,
    pub node: usize,
    pub budgets: Vec<f64>,
    pub costs: Vec<f64>,
    /// Radius of the interval set handed to the robust mechanism, as a
    /// fraction of each bid.
    pub relative_radius: f64,
    pub seed: u64,
}

impl Default for BidSweepConfig {
    /// Unit costs, ample budgets for nodes 1 to 4, and a budget for node 5
    /// that covers its channel-3 bid plus a bit under half of channel 1.
    fn default() -> Self {
        BidSweepConfig {
            base_bids: reference_bids(),
            increments: (0..=10).map(|k| 0.05 * k as f64).collect(),
            node: 4,
            budgets: vec![10.0, 10.0, 10.0, 10.0, 6.86],
            costs: vec![1.0; 3],
            relative_radius: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BidRow {
    pub schema: &'static str,
    pub seed: u64,
    pub mechanism: String,
    pub increment: f64,
    /// Mean bid of the varied node.
    pub mean_bid: f64,
    pub node: usize,
    pub channel: usize,
    pub probability: f64,
    pub payment: f64,
    pub welfare: f64,
}

fn push_rows(rows: &mut Vec<BidRow>, out: &AuctionOutcome, cfg: &BidSweepConfig, inc: f64, mean_bid: f64) {
    let (n, m) = out.allocation.shape();
    for i in 0..n {
        for j in 0..m {
            rows.push(BidRow {
                schema: BIDS_SCHEMA,
                seed: cfg.seed,
                mechanism: out.mechanism.to_string(),
                increment: inc,
                mean_bid,
                node: i,
                channel: j,
                probability: out.allocation[(i, j)],
                payment: out.payments[i],
                welfare: out.social_welfare,
            });
        }
    }
}

/// Allocation probabilities of both mechanisms as one node raises all of its bids.
pub fn sweep_bids(cfg: &BidSweepConfig) -> Result<Vec<BidRow>> {
    let (n, m) = cfg.base_bids.shape();
    if cfg.node >= n {
        return Err(Error::param(format!("node {} outside a {n}-node market", cfg.node)));
    }
    if cfg.increments.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::param("increments must be ascending"));
    }
    if !(cfg.relative_radius >= 0.0 && cfg.relative_radius < 1.0) {
        return Err(Error::param("relative radius must lie in [0, 1)"));
    }
    check_market(&cfg.base_bids, &cfg.costs, &cfg.budgets)?;
    let mut rows = Vec::with_capacity(cfg.increments.len() * 2 * n * m);
    for (k, &inc) in cfg.increments.iter().enumerate() {
        let mut v = cfg.base_bids.clone();
        for x in v.row_mut(cfg.node) {
            *x += inc;
        }
        check_market(&v, &cfg.costs, &cfg.budgets)?;
        let mean_bid = v.row_sum(cfg.node) / m as f64;
        let set: UncertaintySet = IntervalUncertainty::new(v.clone(), v.map(|x| x * cfg.relative_radius))?.into();
        let phase_a = rmca_phase_a(&set, &cfg.budgets, &cfg.costs)?;
        let rmca = rmca_phase_b(&v, &phase_a, &set, &cfg.budgets, &cfg.costs, &mut substream(cfg.seed, &[k as u64, 1]))?;
        let det = det_run(&v, &cfg.budgets, &cfg.costs, &mut substream(cfg.seed, &[k as u64, 2]))?;
        push_rows(&mut rows, &rmca, cfg, inc, mean_bid);
        push_rows(&mut rows, &det, cfg, inc, mean_bid);
    }
    Ok(rows)
}
