//! Channel-allocation mechanisms: the two-phase robust mechanism (RMCA),
//! the deterministic baseline, randomized rounding of fractional
//! allocations, and in-expectation property checks.

mod deterministic;
mod properties;
mod rmca;

pub use deterministic::{det_run, det_true_utility, DetPaymentRule, DeterministicAuction};
pub use properties::{check_mechanism_properties, PropertyReport};
pub use rmca::{rmca_phase_a, rmca_phase_a_with, rmca_phase_b, PhaseACache, RmcaPhaseAOutput, RobustSolver};

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Slack allowed on `Σ_i a*_ij ≤ 1`.
pub const CAPACITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    Rmca,
    Deterministic,
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mechanism::Rmca => "rmca",
            Mechanism::Deterministic => "deterministic",
        })
    }
}

impl FromStr for Mechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rmca" => Ok(Mechanism::Rmca),
            "deterministic" => Ok(Mechanism::Deterministic),
            other => Err(Error::param(format!("unknown mechanism `{other}`"))),
        }
    }
}

/// Integral outcome of one rounding of a fractional allocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundedAssignment {
    /// Winner of every channel, `None` if left unallocated.
    pub winners: Vec<Option<usize>>,
    /// Charge per channel won, `p_i / Σ_j a*_ij`.
    pub unit_charge: Vec<f64>,
    /// Total charge per node.
    pub charges: Vec<f64>,
}

impl RoundedAssignment {
    pub fn channels_won(&self, node: usize) -> usize {
        self.winners.iter().filter(|w| **w == Some(node)).count()
    }
}

/// Flat per-pair view of an outcome for CSV export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRow {
    pub mechanism: String,
    pub node: usize,
    pub channel: usize,
    pub allocation: f64,
    /// 1 if the rounding gave this channel to this node.
    pub winner: u8,
    pub charge: f64,
    pub payment: f64,
    pub welfare: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuctionOutcome {
    pub mechanism: Mechanism,
    /// Fractional allocation `a*`.
    pub allocation: Matrix,
    pub payments: Vec<f64>,
    pub reservation_prices: Matrix,
    /// `Σ (v_ij − c_j) a*_ij` at the submitted bids.
    pub social_welfare: f64,
    pub rejected: bool,
    pub rounding: Option<RoundedAssignment>,
}

impl AuctionOutcome {
    pub(crate) fn rejected(mechanism: Mechanism, n: usize, m: usize) -> Self {
        AuctionOutcome {
            mechanism,
            allocation: Matrix::zeros(n, m),
            payments: vec![0.0; n],
            reservation_prices: Matrix::zeros(n, m),
            social_welfare: 0.0,
            rejected: true,
            rounding: None,
        }
    }

    /// `Σ_j v_ij a*_ij − p_i` for every node at valuations `v`.
    pub fn utilities(&self, v: &Matrix) -> Result<Vec<f64>> {
        v.check_shape(self.allocation.shape(), "valuations")?;
        Ok((0..v.rows())
            .map(|i| {
                let gain: f64 = v.row(i).iter().zip(self.allocation.row(i)).map(|(a, b)| a * b).sum();
                gain - self.payments[i]
            })
            .collect())
    }

    /// One row per (node, channel) pair.
    pub fn rows(&self) -> Vec<OutcomeRow> {
        let (n, m) = self.allocation.shape();
        let mut out = Vec::with_capacity(n * m);
        for i in 0..n {
            for j in 0..m {
                let won = self.rounding.as_ref().is_some_and(|r| r.winners[j] == Some(i));
                let charge = match &self.rounding {
                    Some(r) if won => r.unit_charge[i],
                    _ => 0.0,
                };
                out.push(OutcomeRow {
                    mechanism: self.mechanism.to_string(),
                    node: i,
                    channel: j,
                    allocation: self.allocation[(i, j)],
                    winner: u8::from(won),
                    charge,
                    payment: self.payments[i],
                    welfare: self.social_welfare,
                });
            }
        }
        out
    }

    /// Checks `a* ≥ 0` and `Σ_i a*_ij ≤ 1` per channel.
    pub fn check_feasible(&self) -> Result<()> {
        check_allocation(&self.allocation)
    }
}

pub(crate) fn check_allocation(a: &Matrix) -> Result<()> {
    if let Some(v) = a.as_slice().iter().find(|v| !(**v >= -CAPACITY_TOL)) {
        return Err(Error::Invariant(format!("negative allocation {v}")));
    }
    for j in 0..a.cols() {
        let s = a.col_sum(j);
        if s > 1.0 + CAPACITY_TOL {
            return Err(Error::Invariant(format!("channel {j} allocated {s} > 1")));
        }
    }
    Ok(())
}

pub(crate) fn welfare(v: &Matrix, costs: &[f64], a: &Matrix) -> f64 {
    (0..v.rows())
        .flat_map(|i| (0..v.cols()).map(move |j| (i, j)))
        .map(|(i, j)| (v[(i, j)] - costs[j]) * a[(i, j)])
        .sum()
}

/// Draws one winner per channel with probabilities `a*_ij` (none with
/// probability `1 − Σ_i a*_ij`) and charges each node `p_i / Σ_j a*_ij` per
/// channel won, so that its expected total charge is `p_i`. Nodes with no
/// fractional allocation are never charged.
pub fn round_allocation<R: Rng + ?Sized>(a: &Matrix, payments: &[f64], rng: &mut R) -> Result<RoundedAssignment> {
    let (n, m) = a.shape();
    if payments.len() != n {
        return Err(Error::dims("payments", n, payments.len()));
    }
    check_allocation(a)?;
    let unit_charge: Vec<f64> = (0..n)
        .map(|i| {
            let s = a.row_sum(i);
            if s > 0.0 {
                payments[i] / s
            } else {
                0.0
            }
        })
        .collect();
    let mut winners = Vec::with_capacity(m);
    let mut charges = vec![0.0; n];
    for j in 0..m {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut winner = None;
        for i in 0..n {
            acc += a[(i, j)].max(0.0);
            if u < acc {
                winner = Some(i);
                break;
            }
        }
        if let Some(i) = winner {
            charges[i] += unit_charge[i];
        }
        winners.push(winner);
    }
    Ok(RoundedAssignment {
        winners,
        unit_charge,
        charges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn full_column_is_deterministic() {
        let a = Matrix::from_rows(vec![vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        for s in 0..20 {
            let r = round_allocation(&a, &[3.0, 0.0], &mut stream(s)).unwrap();
            assert_eq!(r.winners, vec![Some(0), None]);
            assert_eq!(r.charges, vec![3.0, 0.0]);
        }
    }

    #[test]
    fn split_charges() {
        let a = Matrix::from_rows(vec![vec![0.5, 0.5]]).unwrap();
        let r = round_allocation(&a, &[2.0], &mut stream(1)).unwrap();
        assert_eq!(r.unit_charge, vec![2.0]);
        assert_eq!(r.charges[0], 2.0 * r.channels_won(0) as f64);
    }

    #[test]
    fn over_allocated_column_is_invariant_error() {
        let a = Matrix::from_rows(vec![vec![0.7], vec![0.4]]).unwrap();
        assert!(matches!(round_allocation(&a, &[1.0, 1.0], &mut stream(1)), Err(Error::Invariant(_))));
    }

    #[test]
    fn mechanism_names_round_trip() {
        for m in [Mechanism::Rmca, Mechanism::Deterministic] {
            assert_eq!(m.to_string().parse::<Mechanism>().unwrap(), m);
        }
        assert!("vcg".parse::<Mechanism>().is_err());
    }
}
