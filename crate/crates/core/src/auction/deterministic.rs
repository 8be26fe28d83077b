//! Deterministic baseline: allocate at the submitted bids as if they were
//! exact, price from the duals of that program, and round.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_allocation, round_allocation, welfare, AuctionOutcome, Mechanism};
use crate::error::Result;
use crate::lp::{check_market, solve_welfare, welfare_dual, AllocationProblem};
use crate::matrix::Matrix;

/// Payment rule of the deterministic mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetPaymentRule {
    /// `p_k = Σ_j x*_kj r*_kj + Σ_{i≠k} Σ_j (v_ij − r*_ij) x^{−k}_ij`.
    #[default]
    Verbatim,
    /// Additionally subtracts the others' surplus with `k` present,
    /// `Σ_{i≠k} Σ_j (v_ij − r*_ij) x*_ij`, mirroring the robust mechanism.
    Symmetric,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeterministicAuction {
    pub payment_rule: DetPaymentRule,
}

impl DeterministicAuction {
    pub fn run<R: Rng + ?Sized>(&self, v: &Matrix, budgets: &[f64], costs: &[f64], rng: &mut R) -> Result<AuctionOutcome> {
        check_market(v, costs, budgets)?;
        let (n, m) = v.shape();
        let x = solve_welfare(v, costs, budgets)?.x;
        let dual = welfare_dual(v, costs, budgets, None)?;
        let r = Matrix::from_fn(n, m, |i, j| dual.omega[j] + v[(i, j)] * dual.phi[i] + costs[j]);

        let weights = Matrix::from_fn(n, m, |i, j| v[(i, j)] - costs[j]);
        let capacity = vec![1.0; m];
        let surplus = |alloc: &Matrix, i: usize| -> f64 {
            (0..m).map(|j| (v[(i, j)] - r[(i, j)]) * alloc[(i, j)]).sum()
        };
        let mut active = vec![true; n];
        let mut payments = vec![0.0; n];
        for k in 0..n {
            active[k] = false;
            let x_minus = AllocationProblem {
                weights: &weights,
                capacity: &capacity,
                usage: v,
                budget: budgets,
                active: Some(&active),
            }
            .solve()?
            .x;
            active[k] = true;
            let own: f64 = x.row(k).iter().zip(r.row(k)).map(|(a, b)| a * b).sum();
            let without: f64 = (0..n).filter(|&i| i != k).map(|i| surplus(&x_minus, i)).sum();
            payments[k] = own + without;
            if self.payment_rule == DetPaymentRule::Symmetric {
                payments[k] -= (0..n).filter(|&i| i != k).map(|i| surplus(&x, i)).sum::<f64>();
            }
            if x.row_sum(k) <= 0.0 {
                payments[k] = 0.0;
            }
        }
        check_allocation(&x)?;
        let rounding = round_allocation(&x, &payments, rng)?;
        Ok(AuctionOutcome {
            mechanism: Mechanism::Deterministic,
            social_welfare: welfare(v, costs, &x),
            allocation: x,
            payments,
            reservation_prices: r,
            rejected: false,
            rounding: Some(rounding),
        })
    }
}

/// Deterministic mechanism with the payment rule as stated.
pub fn det_run<R: Rng + ?Sized>(v: &Matrix, budgets: &[f64], costs: &[f64], rng: &mut R) -> Result<AuctionOutcome> {
    DeterministicAuction::default().run(v, budgets, costs, rng)
}

/// Per-node utility of `outcome` at the valuations implied by the warden's
/// true position.
pub fn det_true_utility(outcome: &AuctionOutcome, true_valuations: &Matrix) -> Result<Vec<f64>> {
    outcome.utilities(true_valuations)
}
