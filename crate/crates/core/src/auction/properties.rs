//! Monte-Carlo check of individual rationality, budget feasibility and
//! incentive compatibility of the robust mechanism, all in expectation over
//! realized bids drawn from the uncertainty set.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{rmca_phase_a, rmca_phase_b};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::uncertainty::UncertaintySet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub trials: usize,
    pub mean_utility: Vec<f64>,
    pub utility_stderr: Vec<f64>,
    pub mean_payment: Vec<f64>,
    pub payment_stderr: Vec<f64>,
    /// Mean gain of misreporting over truthful bidding, per node.
    pub mean_misreport_gain: Vec<f64>,
    pub misreport_stderr: Vec<f64>,
    pub individually_rational: bool,
    pub budget_feasible: bool,
    pub incentive_compatible: bool,
}

impl PropertyReport {
    pub fn all_hold(&self) -> bool {
        self.individually_rational && self.budget_feasible && self.incentive_compatible
    }
}

#[derive(Default, Clone)]
struct Acc {
    n: usize,
    sum: f64,
    sq: f64,
}

impl Acc {
    fn push(&mut self, v: f64) {
        self.n += 1;
        self.sum += v;
        self.sq += v * v;
    }

    fn mean(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sum / self.n as f64
        }
    }

    fn stderr(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        let var = ((self.sq - n * self.mean().powi(2)) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}

/// Samples `trials` truthful bid matrices from `set` (which must be an
/// interval set carrying a sampler) and, in every trial, one misreport: a
/// random node replaces its row with an independent draw from the set. Each
/// property holds if its mean lies within three standard errors of the bound.
pub fn check_mechanism_properties<R: Rng + ?Sized>(
    set: &UncertaintySet,
    budgets: &[f64],
    costs: &[f64],
    trials: usize,
    rng: &mut R,
) -> Result<PropertyReport> {
    let UncertaintySet::Interval(interval) = set else {
        return Err(Error::param("property checks sample realized bids from an interval set"));
    };
    if trials == 0 {
        return Err(Error::param("at least one trial is required"));
    }
    let (n, _) = set.shape();
    let phase_a = rmca_phase_a(set, budgets, costs)?;
    let mut util = vec![Acc::default(); n];
    let mut pay = vec![Acc::default(); n];
    let mut gain = vec![Acc::default(); n];
    for _ in 0..trials {
        let v = interval.sample_realized_bids(rng);
        let truthful = rmca_phase_b(&v, &phase_a, set, budgets, costs, rng)?;
        let u = truthful.utilities(&v)?;
        for i in 0..n {
            util[i].push(u[i]);
            pay[i].push(truthful.payments[i]);
        }
        let k = rng.gen_range(0..n);
        let other = interval.sample_realized_bids(rng);
        let mut lie: Matrix = v.clone();
        lie.row_mut(k).copy_from_slice(other.row(k));
        let misreport = rmca_phase_b(&lie, &phase_a, set, budgets, costs, rng)?;
        gain[k].push(misreport.utilities(&v)?[k] - u[k]);
    }
    let band = |a: &Acc| 3.0 * a.stderr() + 1e-9;
    let individually_rational = util.iter().all(|a| a.mean() >= -band(a));
    let budget_feasible = pay.iter().zip(budgets).all(|(a, b)| a.mean() <= b + band(a));
    let incentive_compatible = gain.iter().all(|a| a.mean() <= band(a));
    Ok(PropertyReport {
        trials,
        mean_utility: util.iter().map(Acc::mean).collect(),
        utility_stderr: util.iter().map(Acc::stderr).collect(),
        mean_payment: pay.iter().map(Acc::mean).collect(),
        payment_stderr: pay.iter().map(Acc::stderr).collect(),
        mean_misreport_gain: gain.iter().map(Acc::mean).collect(),
        misreport_stderr: gain.iter().map(Acc::stderr).collect(),
        individually_rational,
        budget_feasible,
        incentive_compatible,
    })
}
