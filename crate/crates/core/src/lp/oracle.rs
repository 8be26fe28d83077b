//! Exact welfare optimum by enumerating vertices of the feasible polytope.
//! Exponential in `N·M`; only meant as a cross-check on tiny markets.

use nalgebra::{DMatrix, DVector};

use super::welfare::check_market;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Largest `N·M` accepted.
pub const MAX_ORACLE_VARS: usize = 9;

/// `max Σ (v_ij − c_j) x_ij` over the welfare polytope, by trying every set
/// of `N·M` linearly independent active constraints.
pub fn brute_force_welfare(v: &Matrix, costs: &[f64], budgets: &[f64]) -> Result<f64> {
    check_market(v, costs, budgets)?;
    let (n, m) = v.shape();
    let d = n * m;
    if d == 0 {
        return Ok(0.0);
    }
    if d > MAX_ORACLE_VARS {
        return Err(Error::param(format!("oracle limited to N·M ≤ {MAX_ORACLE_VARS}, got {d}")));
    }
    // All constraints as a·x ≤ b: channels, budgets, then −x ≤ 0.
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::with_capacity(m + n + d);
    for j in 0..m {
        let mut a = vec![0.0; d];
        for i in 0..n {
            a[i * m + j] = 1.0;
        }
        rows.push((a, 1.0));
    }
    for i in 0..n {
        let mut a = vec![0.0; d];
        for j in 0..m {
            a[i * m + j] = v[(i, j)];
        }
        rows.push((a, budgets[i]));
    }
    for k in 0..d {
        let mut a = vec![0.0; d];
        a[k] = -1.0;
        rows.push((a, 0.0));
    }
    let w: Vec<f64> = (0..d).map(|k| v[(k / m, k % m)] - costs[k % m]).collect();

    let mut best = f64::NEG_INFINITY;
    let mut pick: Vec<usize> = (0..d).collect();
    loop {
        let a = DMatrix::from_fn(d, d, |r, c| rows[pick[r]].0[c]);
        let b = DVector::from_fn(d, |r, _| rows[pick[r]].1);
        if let Some(x) = a.lu().solve(&b) {
            let feasible = rows.iter().all(|(a, b)| {
                let lhs: f64 = a.iter().zip(x.iter()).map(|(p, q)| p * q).sum();
                lhs <= b + 1e-9 * (1.0 + b.abs())
            });
            if feasible && x.iter().all(|v| v.is_finite()) {
                let val: f64 = w.iter().zip(x.iter()).map(|(p, q)| p * q).sum();
                best = best.max(val);
            }
        }
        if !next_combination(&mut pick, rows.len()) {
            break;
        }
    }
    // The origin is always a vertex, so `best` is finite.
    Ok(best)
}

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for t in i + 1..k {
                c[t] = c[t - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::solve_welfare;

    #[test]
    fn single_pair() {
        let v = Matrix::filled(1, 1, 4.0);
        assert!((brute_force_welfare(&v, &[1.0], &[10.0]).unwrap() - 3.0).abs() < 1e-12);
        assert!((brute_force_welfare(&v, &[1.0], &[2.0]).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn size_guard() {
        let v = Matrix::filled(2, 5, 1.0);
        assert!(brute_force_welfare(&v, &[0.0; 5], &[1.0; 2]).is_err());
    }

    #[test]
    fn fractional_beats_integral_when_budgets_bind() {
        let v = Matrix::from_rows(vec![vec![4.0, 3.0], vec![3.0, 4.0]]).unwrap();
        let costs = [1.0, 1.0];
        let budgets = [2.0, 2.0];
        let frac = brute_force_welfare(&v, &costs, &budgets).unwrap();
        assert!((frac - solve_welfare(&v, &costs, &budgets).unwrap().objective).abs() < 1e-9);
        // Every integral assignment (each channel to nobody / node 0 / node 1).
        let mut best_int = 0.0f64;
        for a in 0..3 {
            for b in 0..3 {
                let owner = [a, b];
                let mut spend = [0.0; 2];
                let mut wel = 0.0;
                for (j, &o) in owner.iter().enumerate() {
                    if o > 0 {
                        spend[o - 1] += v[(o - 1, j)];
                        wel += v[(o - 1, j)] - costs[j];
                    }
                }
                if spend[0] <= budgets[0] && spend[1] <= budgets[1] {
                    best_int = best_int.max(wel);
                }
            }
        }
        assert!(frac > best_int + 1e-6, "{frac} vs {best_int}");
    }
}
