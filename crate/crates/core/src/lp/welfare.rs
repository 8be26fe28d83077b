//! Channel-allocation programs shared by both mechanisms:
//!
//! `max Σ w_ij x_ij  s.t.  Σ_i x_ij ≤ cap_j,  Σ_j u_ij x_ij ≤ R_i,  x ≥ 0`
//!
//! and the dual of the nominal welfare program with optional worst-case rows.

use serde::{Deserialize, Serialize};

use super::{solve_lp, Direction, LinearProgram, LpStatus, Sense};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Allocation program in the form above. Bidders with `active[i] == false`
/// are removed; pairs with `w_ij ≤ 0` are dropped since they are zero at
/// every optimum.
#[derive(Debug, Clone)]
pub struct AllocationProblem<'a> {
    pub weights: &'a Matrix,
    pub capacity: &'a [f64],
    pub usage: &'a Matrix,
    pub budget: &'a [f64],
    pub active: Option<&'a [bool]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WelfareSolution {
    pub x: Matrix,
    pub objective: f64,
}

impl AllocationProblem<'_> {
    pub fn solve(&self) -> Result<WelfareSolution> {
        let (n, m) = self.weights.shape();
        self.usage.check_shape((n, m), "usage matrix")?;
        if self.capacity.len() != m {
            return Err(Error::dims("channel capacities", m, self.capacity.len()));
        }
        if self.budget.len() != n {
            return Err(Error::dims("budgets", n, self.budget.len()));
        }
        if let Some(a) = self.active {
            if a.len() != n {
                return Err(Error::dims("active mask", n, a.len()));
            }
        }
        let is_active = |i: usize| self.active.is_none_or(|a| a[i]);
        let vars: Vec<(usize, usize)> = (0..n)
            .filter(|&i| is_active(i))
            .flat_map(|i| (0..m).map(move |j| (i, j)))
            .filter(|&(i, j)| self.weights[(i, j)] > 0.0 && self.capacity[j] > 0.0)
            .collect();
        let mut x = Matrix::zeros(n, m);
        if vars.is_empty() {
            return Ok(WelfareSolution { x, objective: 0.0 });
        }
        let chans: Vec<usize> = {
            let mut c: Vec<usize> = vars.iter().map(|v| v.1).collect();
            c.sort_unstable();
            c.dedup();
            c
        };
        let bidders: Vec<usize> = {
            let mut b: Vec<usize> = vars.iter().map(|v| v.0).collect();
            b.dedup();
            b
        };
        let rows = chans.len() + bidders.len();
        let mut a = Matrix::zeros(rows, vars.len());
        for (k, &(i, j)) in vars.iter().enumerate() {
            let cr = chans.binary_search(&j).expect("channel row");
            a[(cr, k)] = 1.0;
            let br = bidders.binary_search(&i).expect("bidder row");
            a[(chans.len() + br, k)] = self.usage[(i, j)];
        }
        let mut rhs: Vec<f64> = chans.iter().map(|&j| self.capacity[j].max(0.0)).collect();
        rhs.extend(bidders.iter().map(|&i| self.budget[i].max(0.0)));
        let mut lp = LinearProgram::new(
            Direction::Maximize,
            vars.iter().map(|&(i, j)| self.weights[(i, j)]).collect(),
            a,
            vec![Sense::Le; rows],
            rhs,
        );
        // x_ij ≤ 1 is implied by capacity ≤ 1 but keeps degenerate rows bounded.
        lp.upper = vec![1.0; vars.len()];
        let sol = solve_lp(&lp)?;
        if sol.status != LpStatus::Optimal {
            return Err(Error::Numerical(format!("allocation program reported {:?}", sol.status)));
        }
        for (k, &(i, j)) in vars.iter().enumerate() {
            x[(i, j)] = sol.x[k].max(0.0);
        }
        Ok(WelfareSolution {
            x,
            objective: sol.objective,
        })
    }
}

/// The nominal welfare program at valuations `v`:
/// `max Σ (v_ij − c_j) x_ij  s.t.  Σ_i x_ij ≤ 1,  Σ_j v_ij x_ij ≤ B_i,  x ≥ 0`.
/// Variables are row-major `x_ij`; rows are channels then bidders.
pub fn welfare_lp(v: &Matrix, costs: &[f64], budgets: &[f64]) -> Result<LinearProgram> {
    let (n, m) = v.shape();
    check_market(v, costs, budgets)?;
    let mut a = Matrix::zeros(m + n, n * m);
    for i in 0..n {
        for j in 0..m {
            a[(j, i * m + j)] = 1.0;
            a[(m + i, i * m + j)] = v[(i, j)];
        }
    }
    let mut rhs = vec![1.0; m];
    rhs.extend_from_slice(budgets);
    Ok(LinearProgram::new(
        Direction::Maximize,
        (0..n * m).map(|k| v[(k / m, k % m)] - costs[k % m]).collect(),
        a,
        vec![Sense::Le; m + n],
        rhs,
    ))
}

pub(crate) fn check_market(v: &Matrix, costs: &[f64], budgets: &[f64]) -> Result<()> {
    let (n, m) = v.shape();
    if costs.len() != m {
        return Err(Error::dims("channel costs", m, costs.len()));
    }
    if budgets.len() != n {
        return Err(Error::dims("budgets", n, budgets.len()));
    }
    if costs.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
        return Err(Error::param("costs must be finite and non-negative"));
    }
    if budgets.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
        return Err(Error::param("budgets must be finite and non-negative"));
    }
    if v.as_slice().iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::param("valuations must be finite and non-negative"));
    }
    Ok(())
}

/// Optimal allocation of the nominal welfare program.
pub fn solve_welfare(v: &Matrix, costs: &[f64], budgets: &[f64]) -> Result<WelfareSolution> {
    check_market(v, costs, budgets)?;
    let (n, m) = v.shape();
    let weights = Matrix::from_fn(n, m, |i, j| v[(i, j)] - costs[j]);
    AllocationProblem {
        weights: &weights,
        capacity: &vec![1.0; m],
        usage: v,
        budget: budgets,
        active: None,
    }
    .solve()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WelfareDual {
    pub omega: Vec<f64>,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    pub objective: f64,
}

/// Solves
/// `min Σ_j ω_j + Σ_i (φ_i B_i + ψ_i K_i)`
/// `s.t. ω_j + z_ij φ_i + z_ij ψ_i + c_j ≥ z_ij,  ω, φ, ψ ≥ 0`.
///
/// Without `worst_case_rhs` (the `K_i`) the `ψ` block is absent and returned
/// as zeros.
pub fn welfare_dual(z: &Matrix, costs: &[f64], budgets: &[f64], worst_case_rhs: Option<&[f64]>) -> Result<WelfareDual> {
    check_market(z, costs, budgets)?;
    let (n, m) = z.shape();
    if let Some(k) = worst_case_rhs {
        if k.len() != n {
            return Err(Error::dims("worst-case budget terms", n, k.len()));
        }
    }
    let with_psi = worst_case_rhs.is_some();
    let vars = m + n + if with_psi { n } else { 0 };
    // Rows with z_ij ≤ c_j hold for any non-negative duals.
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .filter(|&(i, j)| z[(i, j)] - costs[j] > 0.0)
        .collect();
    if pairs.is_empty() {
        return Ok(WelfareDual {
            omega: vec![0.0; m],
            phi: vec![0.0; n],
            psi: vec![0.0; n],
            objective: 0.0,
        });
    }
    let mut a = Matrix::zeros(pairs.len(), vars);
    let mut rhs = Vec::with_capacity(pairs.len());
    for (r, &(i, j)) in pairs.iter().enumerate() {
        a[(r, j)] = 1.0;
        a[(r, m + i)] = z[(i, j)];
        if with_psi {
            a[(r, m + n + i)] = z[(i, j)];
        }
        rhs.push(z[(i, j)] - costs[j]);
    }
    let mut obj = vec![1.0; m];
    obj.extend_from_slice(budgets);
    if let Some(k) = worst_case_rhs {
        obj.extend(k.iter().map(|v| v.max(0.0)));
    }
    let lp = LinearProgram::new(Direction::Minimize, obj, a, vec![Sense::Ge; pairs.len()], rhs);
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Numerical(format!("dual welfare program reported {:?}", sol.status)));
    }
    let clean = |v: &[f64]| v.iter().map(|x| x.max(0.0)).collect::<Vec<_>>();
    Ok(WelfareDual {
        omega: clean(&sol.x[..m]),
        phi: clean(&sol.x[m..m + n]),
        psi: if with_psi { clean(&sol.x[m + n..]) } else { vec![0.0; n] },
        objective: sol.objective,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_bidder_single_channel() {
        let v = Matrix::filled(1, 1, 4.0);
        let s = solve_welfare(&v, &[1.0], &[10.0]).unwrap();
        assert!((s.x[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((s.objective - 3.0).abs() < 1e-12);
        let d = welfare_dual(&v, &[1.0], &[10.0], None).unwrap();
        assert!((d.omega[0] - 3.0).abs() < 1e-12);
        assert_eq!(d.phi[0], 0.0);
        assert!((d.objective - 3.0).abs() < 1e-12);
    }

    #[test]
    fn unprofitable_market_is_empty() {
        let v = Matrix::filled(2, 2, 0.5);
        let s = solve_welfare(&v, &[1.0, 1.0], &[5.0, 5.0]).unwrap();
        assert_eq!(s.objective, 0.0);
        assert_eq!(s.x, Matrix::zeros(2, 2));
    }

    #[test]
    fn budget_binds_fractionally() {
        let v = Matrix::filled(1, 1, 4.0);
        let s = solve_welfare(&v, &[1.0], &[2.0]).unwrap();
        assert!((s.x[(0, 0)] - 0.5).abs() < 1e-12);
        let d = welfare_dual(&v, &[1.0], &[2.0], None).unwrap();
        assert!((d.objective - s.objective).abs() < 1e-9);
    }

    #[test]
    fn lp_form_matches_pruned_solve() {
        let v = Matrix::from_rows(vec![vec![3.0, 1.0, 2.5], vec![2.0, 4.0, 0.5]]).unwrap();
        let costs = [1.0, 1.5, 0.7];
        let budgets = [2.0, 3.0];
        let full = solve_lp(&welfare_lp(&v, &costs, &budgets).unwrap()).unwrap();
        let pruned = solve_welfare(&v, &costs, &budgets).unwrap();
        assert!((full.objective - pruned.objective).abs() < 1e-9);
    }
}
