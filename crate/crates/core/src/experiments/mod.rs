//! Desk-scale reproductions of the evaluation: the jamming trade-off, the
//! price of robustness, ex-post IR under a displaced warden, the bid arc of
//! a five-node market, and mechanism timing. Every sweep returns flat rows
//! that serialize to CSV with a leading schema tag.

mod bids;
mod csv_out;
mod ir;
mod jamming;
mod synthetic;
mod timing;
mod uncertainty;

pub use bids::{sweep_bids, reference_bids, BidRow, BidSweepConfig, BIDS_SCHEMA};
pub use csv_out::{write_csv, write_csv_file};
pub use ir::{experiment_ir_violation, Displacement, IrConfig, IrReport, IrRow, IR_SCHEMA};
pub use jamming::{default_power_grid_dbw, reference_link, sweep_jamming, JammingRow, JammingSweepConfig, JAMMING_SCHEMA};
pub use synthetic::{random_interval_market, IntervalMarket};
pub use timing::{bench_timing, TimingConfig, TimingRow, TIMING_SCHEMA};
pub use uncertainty::{sweep_uncertainty, UncertaintyRow, UncertaintySweepConfig, UNCERTAINTY_SCHEMA};

use crate::uncertainty::BoxSearchConfig;
use crate::pso::PsoConfig;

/// Box search used by the market-level experiments: enough fading draws to
/// resolve DEP differences of a few tenths of a percent, a 3³ grid and a
/// small swarm. The full 5³ grid with 20 × 50 particles is available
/// through [`BoxSearchConfig::default`].
pub fn experiment_box_search() -> BoxSearchConfig {
    BoxSearchConfig {
        dep_samples: 512,
        metric_samples: 2000,
        grid_points: 3,
        pso: PsoConfig {
            particles: 10,
            iterations: 15,
            ..PsoConfig::default()
        },
        workers: 4,
        ..BoxSearchConfig::default()
    }
}
