//! Simplex solver, welfare program and robust counterparts.

use covert_auction::lp::{
    brute_force_welfare, solve_lp, solve_robust_cutting_plane, solve_robust_nominal, solve_welfare, welfare_dual,
    Direction, LinearProgram, LpStatus, Sense,
};
use covert_auction::uncertainty::{IntervalUncertainty, UncertaintySet};
use covert_auction::{Error, Matrix};
use proptest::prelude::*;

fn market(n: usize, m: usize) -> impl Strategy<Value = (Matrix, Vec<f64>, Vec<f64>)> {
    (
        prop::collection::vec(0.0f64..5.0, n * m),
        prop::collection::vec(0.0f64..3.0, m),
        prop::collection::vec(0.2f64..8.0, n),
    )
        .prop_map(move |(v, c, b)| (Matrix::from_fn(n, m, |i, j| v[i * m + j]), c, b))
}

fn sized_market() -> impl Strategy<Value = (Matrix, Vec<f64>, Vec<f64>)> {
    (1usize..=3, 1usize..=3).prop_flat_map(|(n, m)| market(n, m))
}

#[test]
fn textbook_maximum() {
    let lp = LinearProgram::new(
        Direction::Maximize,
        vec![3.0, 2.0],
        Matrix::from_rows(vec![vec![1.0, 1.0], vec![1.0, 3.0], vec![1.0, 0.0]]).unwrap(),
        vec![Sense::Le; 3],
        vec![4.0, 6.0, 3.0],
    );
    let s = solve_lp(&lp).unwrap();
    assert_eq!(s.status, LpStatus::Optimal);
    assert!((s.objective - 11.0).abs() < 1e-9);
    assert!((s.x[0] - 3.0).abs() < 1e-9 && (s.x[1] - 1.0).abs() < 1e-9);
}

#[test]
fn minimization_with_ge_and_eq_rows() {
    // min x + 2y  s.t.  x + y ≥ 2,  x − y = 0
    let lp = LinearProgram::new(
        Direction::Minimize,
        vec![1.0, 2.0],
        Matrix::from_rows(vec![vec![1.0, 1.0], vec![1.0, -1.0]]).unwrap(),
        vec![Sense::Ge, Sense::Eq],
        vec![2.0, 0.0],
    );
    let s = solve_lp(&lp).unwrap();
    assert_eq!(s.status, LpStatus::Optimal);
    assert!((s.objective - 3.0).abs() < 1e-9);
}

#[test]
fn infeasible_and_unbounded_are_reported() {
    let infeasible = LinearProgram::new(
        Direction::Maximize,
        vec![1.0],
        Matrix::from_rows(vec![vec![1.0], vec![1.0]]).unwrap(),
        vec![Sense::Le, Sense::Ge],
        vec![1.0, 2.0],
    );
    assert_eq!(solve_lp(&infeasible).unwrap().status, LpStatus::Infeasible);
    let unbounded = LinearProgram::new(
        Direction::Maximize,
        vec![1.0, 1.0],
        Matrix::from_rows(vec![vec![1.0, -1.0]]).unwrap(),
        vec![Sense::Le],
        vec![1.0],
    );
    assert_eq!(solve_lp(&unbounded).unwrap().status, LpStatus::Unbounded);
}

#[test]
fn single_pair_matches_oracle() {
    let v = Matrix::filled(1, 1, 4.0);
    let s = solve_welfare(&v, &[1.0], &[2.0]).unwrap();
    assert!((s.x[(0, 0)] - 0.5).abs() < 1e-12);
    assert!((brute_force_welfare(&v, &[1.0], &[2.0]).unwrap() - s.objective).abs() < 1e-12);
}

#[test]
fn binding_budget_beats_every_integral_assignment() {
    let v = Matrix::from_rows(vec![vec![4.0, 3.0], vec![3.5, 4.5]]).unwrap();
    let (c, b) = (vec![1.0, 1.0], vec![3.5, 2.5]);
    let frac = solve_welfare(&v, &c, &b).unwrap().objective;
    // Each channel goes to node 0, node 1, or nobody.
    let mut best_int = 0.0f64;
    for code in 0..9 {
        let owner = [code % 3, code / 3];
        let mut spend = [0.0; 2];
        let mut w = 0.0;
        for (j, &o) in owner.iter().enumerate() {
            if o < 2 {
                spend[o] += v[(o, j)];
                w += v[(o, j)] - c[j];
            }
        }
        if spend[0] <= b[0] && spend[1] <= b[1] {
            best_int = best_int.max(w);
        }
    }
    assert!(frac > best_int + 1e-6, "fractional {frac} vs integral {best_int}");
}

#[test]
fn oracle_rejects_large_markets() {
    let v = Matrix::filled(2, 5, 1.0);
    assert!(matches!(brute_force_welfare(&v, &[0.0; 5], &[1.0; 2]), Err(Error::InvalidParameter(_))));
}

#[test]
fn robust_reduction_agrees_with_cutting_plane() {
    let center = Matrix::from_rows(vec![vec![4.0, 2.5, 3.0], vec![3.5, 3.5, 2.0]]).unwrap();
    let set = UncertaintySet::Interval(IntervalUncertainty::new(center.clone(), center.map(|x| 0.15 * x)).unwrap());
    let (c, b) = (vec![1.0, 0.5, 1.2], vec![4.0, 3.0]);
    let a = solve_robust_nominal(&set, &c, &b).unwrap();
    let cp = solve_robust_cutting_plane(&set, &c, &b).unwrap();
    assert!((a.objective - cp.objective).abs() < 1e-6);
}

proptest! {
    #[test]
    fn welfare_matches_vertex_enumeration((v, c, b) in sized_market()) {
        let s = solve_welfare(&v, &c, &b).unwrap();
        let best = brute_force_welfare(&v, &c, &b).unwrap();
        prop_assert!((s.objective - best).abs() < 1e-6);
        let (n, m) = v.shape();
        for j in 0..m {
            prop_assert!(s.x.col_sum(j) <= 1.0 + 1e-9);
        }
        for i in 0..n {
            let spend: f64 = (0..m).map(|j| v[(i, j)] * s.x[(i, j)]).sum();
            prop_assert!(spend <= b[i] + 1e-9);
        }
        prop_assert!(s.x.as_slice().iter().all(|&x| x >= -1e-12));
    }

    #[test]
    fn strong_duality((v, c, b) in (1usize..=6, 1usize..=6).prop_flat_map(|(n, m)| market(n, m))) {
        let p = solve_welfare(&v, &c, &b).unwrap().objective;
        let d = welfare_dual(&v, &c, &b, None).unwrap();
        prop_assert!((p - d.objective).abs() <= 1e-6 * (1.0 + p.abs()));
        prop_assert!(d.omega.iter().chain(&d.phi).all(|&y| y >= 0.0));
    }

    #[test]
    fn robust_objective_shrinks_with_radius((v, c, b) in sized_market(), r1 in 0.0f64..0.3, dr in 0.0f64..0.3) {
        let small = UncertaintySet::Interval(IntervalUncertainty::new(v.clone(), v.map(|x| r1 * x)).unwrap());
        let large = UncertaintySet::Interval(IntervalUncertainty::new(v.clone(), v.map(|x| (r1 + dr) * x)).unwrap());
        let a = solve_robust_nominal(&small, &c, &b).unwrap().objective;
        let z = solve_robust_nominal(&large, &c, &b).unwrap().objective;
        prop_assert!(z <= a + 1e-9);
        // Realized bids at the center lie in both sets.
        let det = solve_welfare(&v, &c, &b).unwrap().objective;
        prop_assert!(a <= det + 1e-9);
    }

    #[test]
    fn degenerate_set_reproduces_nominal_program((v, c, b) in sized_market()) {
        let set = UncertaintySet::Interval(IntervalUncertainty::degenerate(&v));
        let r = solve_robust_nominal(&set, &c, &b).unwrap();
        let d = solve_welfare(&v, &c, &b).unwrap();
        prop_assert!(r.x.max_abs_diff(&d.x) == 0.0);
        prop_assert!((r.objective - d.objective).abs() < 1e-12);
    }
}
