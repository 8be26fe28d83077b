//! Dense linear programming: a two-phase tableau simplex with Bland's rule
//! and dual extraction, the welfare programs used by both mechanisms, the
//! robust nominal solve, and a vertex-enumeration oracle.

mod oracle;
mod robust;
mod welfare;

pub use oracle::brute_force_welfare;
pub use robust::{
    reservation_prices, solve_robust_cutting_plane, solve_robust_nominal, RobustNominalResult,
};
pub(crate) use welfare::check_market;
pub use welfare::{solve_welfare, welfare_dual, welfare_lp, AllocationProblem, WelfareDual, WelfareSolution};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const FEASIBILITY_TOL: f64 = 1e-8;
pub const OPTIMALITY_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Maximize,
    Minimize,
}

/// `opt c·x  s.t.  A x (≤|≥|=) b,  lower ≤ x ≤ upper`.
///
/// Lower bounds must be finite; upper bounds may be `+∞`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub direction: Direction,
    pub objective: Vec<f64>,
    pub constraints: Matrix,
    pub senses: Vec<Sense>,
    pub rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    /// Shadow price `∂ objective / ∂ rhs` of every constraint row.
    pub duals: Vec<f64>,
    pub objective: f64,
}

impl LinearProgram {
    /// Non-negative variables, no upper bounds.
    pub fn new(direction: Direction, objective: Vec<f64>, constraints: Matrix, senses: Vec<Sense>, rhs: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram {
            direction,
            objective,
            constraints,
            senses,
            rhs,
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn vars(&self) -> usize {
        self.objective.len()
    }

    pub fn rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.vars();
        let m = self.rows();
        self.constraints.check_shape((m, n), "constraint matrix")?;
        if self.senses.len() != m {
            return Err(Error::dims("constraint senses", m, self.senses.len()));
        }
        if self.lower.len() != n {
            return Err(Error::dims("lower bounds", n, self.lower.len()));
        }
        if self.upper.len() != n {
            return Err(Error::dims("upper bounds", n, self.upper.len()));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&self.objective) || !finite(self.constraints.as_slice()) || !finite(&self.rhs) || !finite(&self.lower) {
            return Err(Error::param("linear program coefficients must be finite"));
        }
        if self.lower.iter().zip(&self.upper).any(|(l, u)| u.is_nan() || l > u) {
            return Err(Error::param("variable bounds out of order"));
        }
        Ok(())
    }

    /// Largest constraint or bound violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.rows() {
            let lhs: f64 = self.constraints.row(r).iter().zip(x).map(|(a, b)| a * b).sum();
            let v = match self.senses[r] {
                Sense::Le => lhs - self.rhs[r],
                Sense::Ge => self.rhs[r] - lhs,
                Sense::Eq => (lhs - self.rhs[r]).abs(),
            };
            worst = worst.max(v);
        }
        for (k, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower[k] - v).max(v - self.upper[k]);
        }
        worst
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

/// Standard-form tableau. Row 0 holds reduced costs `z_j − c_j` of the
/// maximization; column `width - 1` holds the right-hand side.
struct Tableau {
    t: Vec<f64>,
    width: usize,
    rows: usize,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.t[r * self.width + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.width - 1)
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width;
        let p = self.t[pr * w + pc];
        for c in 0..w {
            self.t[pr * w + c] /= p;
        }
        self.t[pr * w + pc] = 1.0;
        let (before, rest) = self.t.split_at_mut(pr * w);
        let (prow, after) = rest.split_at_mut(w);
        for row in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let f = row[pc];
            if f != 0.0 {
                for (a, b) in row.iter_mut().zip(prow.iter()) {
                    *a -= f * b;
                }
                row[pc] = 0.0;
            }
        }
        self.basis[pr - 1] = pc;
    }

    /// Bland's rule simplex on the current objective row. Columns with
    /// `allowed[c] == false` never enter.
    fn run(&mut self, allowed: &[bool]) -> Result<bool> {
        let max_iter = 50_000 + 100 * self.width * self.rows;
        for _ in 0..max_iter {
            let entering = (0..self.width - 1).find(|&c| allowed[c] && self.at(0, c) < -OPTIMALITY_TOL);
            let Some(pc) = entering else {
                return Ok(true);
            };
            let mut best: Option<(f64, usize, usize)> = None;
            for r in 1..=self.rows {
                let a = self.at(r, pc);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(r).max(0.0) / a;
                    let key = (ratio, self.basis[r - 1]);
                    let better = match best {
                        None => true,
                        Some((br, bb, _)) => key.0 < br - 1e-12 || ((key.0 - br).abs() <= 1e-12 && key.1 < bb),
                    };
                    if better {
                        best = Some((key.0, key.1, r));
                    }
                }
            }
            match best {
                None => return Ok(false),
                Some((_, _, pr)) => self.pivot(pr, pc),
            }
        }
        Err(Error::Numerical("simplex iteration limit reached".into()))
    }
}

/// Solves `lp` to optimality, or reports infeasibility / unboundedness.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.vars();
    let sign = match lp.direction {
        Direction::Maximize => 1.0,
        Direction::Minimize => -1.0,
    };

    // Shift x = lower + x', and add finite upper bounds as extra rows.
    let mut rows: Vec<(Vec<f64>, Sense, f64)> = Vec::with_capacity(lp.rows() + n);
    for r in 0..lp.rows() {
        let a = lp.constraints.row(r).to_vec();
        let shift: f64 = a.iter().zip(&lp.lower).map(|(x, l)| x * l).sum();
        rows.push((a, lp.senses[r], lp.rhs[r] - shift));
    }
    for k in 0..n {
        if lp.upper[k].is_finite() {
            let mut a = vec![0.0; n];
            a[k] = 1.0;
            rows.push((a, Sense::Le, lp.upper[k] - lp.lower[k]));
        }
    }
    let m = rows.len();

    // Normalize to b ≥ 0, remembering flips.
    let mut flipped = vec![false; m];
    for (r, row) in rows.iter_mut().enumerate() {
        if row.2 < 0.0 {
            flipped[r] = true;
            row.0.iter_mut().for_each(|v| *v = -*v);
            row.2 = -row.2;
            row.1 = match row.1 {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
        }
    }

    // Columns: structural | surplus (Ge rows) | unit column per row
    // (slack for Le, artificial for Ge/Eq).
    let surplus_rows: Vec<usize> = (0..m).filter(|&r| rows[r].1 == Sense::Ge).collect();
    let n_sur = surplus_rows.len();
    let unit0 = n + n_sur;
    let width = unit0 + m + 1;
    let mut tab = Tableau {
        t: vec![0.0; (m + 1) * width],
        width,
        rows: m,
        basis: (0..m).map(|r| unit0 + r).collect(),
    };
    let is_artificial: Vec<bool> = (0..m).map(|r| rows[r].1 != Sense::Le).collect();
    for (r, (a, _, b)) in rows.iter().enumerate() {
        let base = (r + 1) * width;
        tab.t[base..base + n].copy_from_slice(a);
        tab.t[base + unit0 + r] = 1.0;
        tab.t[base + width - 1] = *b;
    }
    for (s, &r) in surplus_rows.iter().enumerate() {
        tab.t[(r + 1) * width + n + s] = -1.0;
    }

    // Phase 1: maximize −Σ artificials.
    let any_art = is_artificial.iter().any(|&a| a);
    if any_art {
        for c in 0..width {
            let mut v = 0.0;
            for r in 0..m {
                if is_artificial[r] {
                    v -= tab.at(r + 1, c);
                }
            }
            tab.t[c] = v;
        }
        for r in 0..m {
            if is_artificial[r] {
                tab.t[unit0 + r] = 0.0;
            }
        }
        let allowed = vec![true; width - 1];
        tab.run(&allowed)?;
        let scale = 1.0 + rows.iter().map(|r| r.2.abs()).fold(0.0, f64::max);
        if -tab.rhs(0) > FEASIBILITY_TOL * scale {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: vec![f64::NAN; n],
                duals: vec![f64::NAN; lp.rows()],
                objective: f64::NAN,
            });
        }
        // Drive zero-level artificials out of the basis where possible.
        for r in 1..=m {
            let b = tab.basis[r - 1];
            if b >= unit0 && is_artificial[b - unit0] {
                if let Some(pc) = (0..unit0).find(|&c| tab.at(r, c).abs() > 1e-9) {
                    tab.pivot(r, pc);
                }
            }
        }
    }

    // Phase 2 objective row: z_j − c_j with c = sign · objective.
    for c in 0..width {
        tab.t[c] = 0.0;
    }
    for k in 0..n {
        tab.t[k] = -sign * lp.objective[k];
    }
    for r in 1..=m {
        let b = tab.basis[r - 1];
        let cb = -tab.t[b];
        if cb != 0.0 {
            for c in 0..width {
                tab.t[c] += cb * tab.t[r * width + c];
            }
        }
    }
    let allowed: Vec<bool> = (0..width - 1)
        .map(|c| c < unit0 || !is_artificial[c - unit0])
        .collect();
    if !tab.run(&allowed)? {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: vec![f64::NAN; n],
            duals: vec![f64::NAN; lp.rows()],
            objective: if sign > 0.0 { f64::INFINITY } else { f64::NEG_INFINITY },
        });
    }

    let mut x = lp.lower.clone();
    for r in 1..=m {
        let b = tab.basis[r - 1];
        if b < n {
            x[b] += tab.rhs(r);
        }
    }
    // z_j − c_j of the unit column of row r equals y_r of the normalized row.
    let duals: Vec<f64> = (0..lp.rows())
        .map(|r| {
            let y = tab.at(0, unit0 + r);
            let y = if flipped[r] { -y } else { y };
            sign * y
        })
        .collect();

    let scale = 1.0 + lp.rhs.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let viol = lp.max_violation(&x);
    if viol > 1e-7 * scale {
        return Err(Error::Numerical(format!("solution violates constraints by {viol:e}")));
    }
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective: lp.evaluate(&x),
        x,
        duals,
    })
}
