use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::uncertainty::IntervalUncertainty;

/// A market given directly by bid intervals rather than by geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalMarket {
    pub set: IntervalUncertainty,
    pub budgets: Vec<f64>,
    pub costs: Vec<f64>,
}

/// Centers uniform in `[1, 5]`, radii a uniform fraction in
/// `[0, max_relative_radius]` of the center, costs normal(2, 1) truncated at
/// zero, budgets uniform in `[1.5, 5]`.
pub fn random_interval_market<R: Rng + ?Sized>(
    n: usize,
    m: usize,
    max_relative_radius: f64,
    rng: &mut R,
) -> Result<IntervalMarket> {
    if n == 0 || m == 0 {
        return Err(Error::param("market needs at least one node and one channel"));
    }
    if !(0.0..=1.0).contains(&max_relative_radius) {
        return Err(Error::param("relative radius must lie in [0, 1]"));
    }
    let center = Matrix::from_fn(n, m, |_, _| rng.gen_range(1.0..5.0));
    let radius = center.map(|c| c * max_relative_radius * rng.gen::<f64>());
    let normal = Normal::new(2.0, 1.0).expect("valid normal");
    let costs = (0..m)
        .map(|_| loop {
            let c: f64 = normal.sample(rng);
            if c >= 0.0 {
                break c;
            }
        })
        .collect();
    let budgets = (0..n).map(|_| rng.gen_range(1.5..5.0)).collect();
    Ok(IntervalMarket {
        set: IntervalUncertainty::new(center, radius)?,
        budgets,
        costs,
    })
}
