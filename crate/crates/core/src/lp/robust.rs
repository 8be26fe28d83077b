//! Worst-case nominal allocation over an uncertainty set and the dual
//! quantities behind reservation prices.

use serde::{Deserialize, Serialize};

use super::welfare::{check_market, solve_welfare, welfare_dual};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::uncertainty::UncertaintySet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustNominalResult {
    /// Worst-case valuations `z`.
    pub z: Matrix,
    /// Nominal allocation `x*`.
    pub x: Matrix,
    pub omega: Vec<f64>,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    /// Row `i` is the worst-case profile `ū^i`.
    pub worst_profiles: Matrix,
    /// Worst-case social welfare `Σ (z − c) x*`.
    pub objective: f64,
    /// Allocation solves performed (1 for the direct reduction).
    pub iterations: usize,
}

fn finish(set: &UncertaintySet, z: Matrix, x: Matrix, costs: &[f64], budgets: &[f64], iterations: usize) -> Result<RobustNominalResult> {
    let (n, m) = set.shape();
    let mut profiles = Matrix::zeros(n, m);
    for i in 0..n {
        profiles.row_mut(i).copy_from_slice(&set.worst_case_profile(&x, i)?);
    }
    let k: Vec<f64> = (0..n)
        .map(|i| x.row(i).iter().zip(profiles.row(i)).map(|(a, u)| a * u).sum())
        .collect();
    let dual = welfare_dual(&z, costs, budgets, Some(&k))?;
    let objective: f64 = (0..n)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .map(|(i, j)| (z[(i, j)] - costs[j]) * x[(i, j)])
        .sum();
    if (dual.objective - objective).abs() > 1e-6 * (1.0 + objective.abs()) {
        return Err(Error::Numerical(format!(
            "robust dual objective {} differs from primal {}",
            dual.objective, objective
        )));
    }
    Ok(RobustNominalResult {
        z,
        x,
        omega: dual.omega,
        phi: dual.phi,
        psi: dual.psi,
        worst_profiles: profiles,
        objective,
        iterations,
    })
}

fn check_inputs(set: &UncertaintySet, costs: &[f64], budgets: &[f64]) -> Result<()> {
    set.validate()?;
    let (n, m) = set.shape();
    check_market(&Matrix::zeros(n, m), costs, budgets)
}

/// Worst-case welfare maximization over `set`.
///
/// For interval sets the pinning constraint forces every supported valuation
/// to its lower endpoint, so the problem is the nominal welfare program at
/// `z = μ − ς`. Other sets go through [`solve_robust_cutting_plane`].
pub fn solve_robust_nominal(set: &UncertaintySet, costs: &[f64], budgets: &[f64]) -> Result<RobustNominalResult> {
    check_inputs(set, costs, budgets)?;
    match set {
        UncertaintySet::Interval(s) => {
            let z = s.lower();
            let x = solve_welfare(&z, costs, budgets)?.x;
            finish(set, z, x, costs, budgets, 1)
        }
        UncertaintySet::Historical(_) => solve_robust_cutting_plane(set, costs, budgets),
    }
}

/// Alternates the allocation program with worst-case-profile separation:
/// starting from the most optimistic valuations, any bidder whose pinned
/// valuation exceeds its worst case under the current allocation by more
/// than `1e-6` is replaced by that worst case, until no violation remains.
pub fn solve_robust_cutting_plane(set: &UncertaintySet, costs: &[f64], budgets: &[f64]) -> Result<RobustNominalResult> {
    check_inputs(set, costs, budgets)?;
    let (n, _) = set.shape();
    let mut z = set.upper();
    for it in 1..=100 {
        let x = solve_welfare(&z, costs, budgets)?.x;
        let mut violated = false;
        for i in 0..n {
            let u = set.worst_case_profile(&x, i)?;
            let pinned: f64 = x.row(i).iter().zip(z.row(i)).map(|(a, v)| a * v).sum();
            let worst: f64 = x.row(i).iter().zip(&u).map(|(a, v)| a * v).sum();
            if pinned > worst + 1e-6 {
                z.row_mut(i).copy_from_slice(&u);
                violated = true;
            }
        }
        if !violated {
            // Rows with no allocation are free; pin them to their worst case
            // too, which cannot improve on the current (feasible) allocation.
            let lower = set.lower();
            for i in 0..n {
                if x.row(i).iter().all(|&a| a <= 0.0) {
                    z.row_mut(i).copy_from_slice(lower.row(i));
                }
            }
            return finish(set, z, x, costs, budgets, it);
        }
    }
    Err(Error::Numerical("cutting-plane loop did not converge in 100 rounds".into()))
}

/// `r*_ij = ω*_j + z_ij φ*_i + z_ij ψ*_i + c_j`.
pub fn reservation_prices(result: &RobustNominalResult, costs: &[f64]) -> Result<Matrix> {
    let (n, m) = result.z.shape();
    if costs.len() != m {
        return Err(Error::dims("channel costs", m, costs.len()));
    }
    if result.omega.len() != m || result.phi.len() != n || result.psi.len() != n {
        return Err(Error::dims("dual vectors", format!("{m}/{n}/{n}"), format!(
            "{}/{}/{}",
            result.omega.len(),
            result.phi.len(),
            result.psi.len()
        )));
    }
    Ok(Matrix::from_fn(n, m, |i, j| {
        result.omega[j] + result.z[(i, j)] * (result.phi[i] + result.psi[i]) + costs[j]
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uncertainty::IntervalUncertainty;

    fn single(lo: f64, hi: f64) -> UncertaintySet {
        IntervalUncertainty::from_bounds(&Matrix::filled(1, 1, lo), &Matrix::filled(1, 1, hi))
            .unwrap()
            .into()
    }

    #[test]
    fn single_pair_interval() {
        let r = solve_robust_nominal(&single(3.0, 5.0), &[1.0], &[10.0]).unwrap();
        assert_eq!(r.z[(0, 0)], 3.0);
        assert!((r.x[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((r.objective - 2.0).abs() < 1e-12);
        let rp = reservation_prices(&r, &[1.0]).unwrap();
        assert!(rp[(0, 0)] >= r.z[(0, 0)] - 1e-12);
        assert!(rp[(0, 0)] >= 1.0);
    }

    #[test]
    fn unprofitable_worst_case_is_empty() {
        let r = solve_robust_nominal(&single(0.5, 5.0), &[1.0], &[10.0]).unwrap();
        assert_eq!(r.x[(0, 0)], 0.0);
        assert_eq!(r.objective, 0.0);
        assert_eq!(reservation_prices(&r, &[1.0]).unwrap()[(0, 0)], 1.0);
    }

    #[test]
    fn cutting_plane_agrees_with_reduction() {
        let lower = Matrix::from_rows(vec![vec![3.0, 2.0, 1.0], vec![2.5, 3.5, 2.0]]).unwrap();
        let upper = lower.map(|v| v + 1.0);
        let set: UncertaintySet = IntervalUncertainty::from_bounds(&lower, &upper).unwrap().into();
        let costs = [1.0, 1.2, 0.4];
        let budgets = [3.0, 4.0];
        let a = solve_robust_nominal(&set, &costs, &budgets).unwrap();
        let b = solve_robust_cutting_plane(&set, &costs, &budgets).unwrap();
        assert!((a.objective - b.objective).abs() < 1e-9);
        assert!(a.z.max_abs_diff(&b.z) < 1e-12);
        assert!(b.iterations >= 2);
    }
}
