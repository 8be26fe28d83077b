//! Robust mechanism: offline nominal allocation and reservation prices,
//! then online adapted allocation, VCG-style payments, and rounding.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{check_allocation, round_allocation, welfare, AuctionOutcome, Mechanism};
use crate::error::{Error, Result};
use crate::lp::{
    check_market, reservation_prices, solve_robust_cutting_plane, solve_robust_nominal, AllocationProblem,
    RobustNominalResult,
};
use crate::matrix::Matrix;
use crate::uncertainty::UncertaintySet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmcaPhaseAOutput {
    pub reservation_prices: Matrix,
    pub nominal_allocation: Matrix,
    pub psi: Vec<f64>,
    pub worst_case_valuations: Matrix,
    /// Row `i` is `ū^i`.
    pub worst_profiles: Matrix,
    pub robust: RobustNominalResult,
}

/// How phase a solves the worst-case allocation program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RobustSolver {
    /// Direct reduction for interval sets, cutting planes otherwise.
    #[default]
    Auto,
    /// Cutting planes for every set.
    CuttingPlane,
}

/// Robust nominal allocation `x*` and reservation prices `r*`.
pub fn rmca_phase_a(set: &UncertaintySet, budgets: &[f64], costs: &[f64]) -> Result<RmcaPhaseAOutput> {
    rmca_phase_a_with(set, budgets, costs, RobustSolver::Auto)
}

pub fn rmca_phase_a_with(
    set: &UncertaintySet,
    budgets: &[f64],
    costs: &[f64],
    solver: RobustSolver,
) -> Result<RmcaPhaseAOutput> {
    let robust = match solver {
        RobustSolver::Auto => solve_robust_nominal(set, costs, budgets)?,
        RobustSolver::CuttingPlane => solve_robust_cutting_plane(set, costs, budgets)?,
    };
    let r = reservation_prices(&robust, costs)?;
    Ok(RmcaPhaseAOutput {
        reservation_prices: r,
        nominal_allocation: robust.x.clone(),
        psi: robust.psi.clone(),
        worst_case_valuations: robust.z.clone(),
        worst_profiles: robust.worst_profiles.clone(),
        robust,
    })
}

/// Phase-a results keyed by a digest of (set, budgets, costs), so repeated
/// rounds with the same participants skip the offline solve.
#[derive(Debug, Default)]
pub struct PhaseACache {
    entries: HashMap<String, RmcaPhaseAOutput>,
    hits: usize,
}

impl PhaseACache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn key(set: &UncertaintySet, budgets: &[f64], costs: &[f64]) -> Result<String> {
        let body = serde_json::to_vec(&(set, budgets, costs)).map_err(|e| Error::Parse(e.to_string()))?;
        Ok(hex::encode(Sha256::digest(body)))
    }

    pub fn get_or_compute(&mut self, set: &UncertaintySet, budgets: &[f64], costs: &[f64]) -> Result<&RmcaPhaseAOutput> {
        let key = Self::key(set, budgets, costs)?;
        if self.entries.contains_key(&key) {
            self.hits += 1;
        } else {
            let out = rmca_phase_a(set, budgets, costs)?;
            self.entries.insert(key.clone(), out);
        }
        Ok(&self.entries[&key])
    }

    pub fn hits(&self) -> usize {
        self.hits
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Online phase at realized bids `v`.
///
/// The adapted allocation `y` maximizes `Σ (v − c − r*) y` on the capacity
/// left by `x*`, with each node's residual budget
/// `B_i − Σ_j x*_ij r*_ij + Σ_j x*_ij ψ*_i ū^i_j` required to cover
/// `Σ_j y_ij u_ij` for every `u` in the set (that is, at the set's upper
/// endpoints). Removal problems drop node `k` and the `ψ` term. Negative
/// residual budgets are treated as zero.
pub fn rmca_phase_b<R: Rng + ?Sized>(
    v: &Matrix,
    phase_a: &RmcaPhaseAOutput,
    set: &UncertaintySet,
    budgets: &[f64],
    costs: &[f64],
    rng: &mut R,
) -> Result<AuctionOutcome> {
    let (n, m) = set.shape();
    v.check_shape((n, m), "realized bids")?;
    check_market(v, costs, budgets)?;
    phase_a.reservation_prices.check_shape((n, m), "reservation prices")?;
    phase_a.nominal_allocation.check_shape((n, m), "nominal allocation")?;
    if !set.contains(v)? {
        return Ok(AuctionOutcome::rejected(Mechanism::Rmca, n, m));
    }
    let x = &phase_a.nominal_allocation;
    let r = &phase_a.reservation_prices;
    let psi = &phase_a.psi;
    let ubar = &phase_a.worst_profiles;

    let capacity: Vec<f64> = (0..m).map(|j| (1.0 - x.col_sum(j)).max(0.0)).collect();
    let usage = set.upper();
    let fixed_spend: Vec<f64> = (0..n).map(|i| dot(x.row(i), r.row(i))).collect();
    let rebate: Vec<f64> = (0..n).map(|i| psi[i] * dot(x.row(i), ubar.row(i))).collect();
    let residual: Vec<f64> = (0..n).map(|i| (budgets[i] - fixed_spend[i] + rebate[i]).max(0.0)).collect();
    let residual_removed: Vec<f64> = (0..n).map(|i| (budgets[i] - fixed_spend[i]).max(0.0)).collect();
    let weights = Matrix::from_fn(n, m, |i, j| v[(i, j)] - costs[j] - r[(i, j)]);

    let y = AllocationProblem {
        weights: &weights,
        capacity: &capacity,
        usage: &usage,
        budget: &residual,
        active: None,
    }
    .solve()?
    .x;

    let surplus = |alloc: &Matrix, i: usize| -> f64 {
        (0..m).map(|j| (v[(i, j)] - r[(i, j)]) * alloc[(i, j)]).sum()
    };
    let mut payments = vec![0.0; n];
    let mut active = vec![true; n];
    for k in 0..n {
        active[k] = false;
        let y_minus = AllocationProblem {
            weights: &weights,
            capacity: &capacity,
            usage: &usage,
            budget: &residual_removed,
            active: Some(&active),
        }
        .solve()?
        .x;
        active[k] = true;
        let others_without: f64 = (0..n).filter(|&i| i != k).map(|i| surplus(&y_minus, i)).sum();
        let others_with: f64 = (0..n).filter(|&i| i != k).map(|i| surplus(&y, i)).sum();
        payments[k] = dot(y.row(k), r.row(k)) + fixed_spend[k] - rebate[k] + others_without - others_with;
    }

    let allocation = y.zip_map(x, |a, b| a + b)?;
    check_allocation(&allocation)?;
    for (i, p) in payments.iter_mut().enumerate() {
        if allocation.row_sum(i) <= 0.0 {
            *p = 0.0;
        }
    }
    let rounding = round_allocation(&allocation, &payments, rng)?;
    Ok(AuctionOutcome {
        mechanism: Mechanism::Rmca,
        social_welfare: welfare(v, costs, &allocation),
        allocation,
        payments,
        reservation_prices: r.clone(),
        rejected: false,
        rounding: Some(rounding),
    })
}
