//! Bid uncertainty sets held by the auctioneer: per-entry interval sets
//! (from ambiguity in the warden's location) and correlated sets built from
//! bid history.

mod warden_box;

pub use warden_box::{BoxSearchConfig, PairModel, ValuationModel, WardenBox, WardenBoxInterval};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

fn tol(mu: f64) -> f64 {
    1e-9 * mu.abs().max(1.0)
}

/// DEP endpoints behind an interval set, with the valuation slope
/// `𝕀 (η1 MI + η2 CC)` that maps a DEP to a valuation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepRange {
    pub dep_min: Matrix,
    pub dep_max: Matrix,
    pub slope: Matrix,
}

/// `𝒰_ij = [μ_ij − ς_ij, μ_ij + ς_ij]` for every node/channel pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalUncertainty {
    pub center: Matrix,
    pub radius: Matrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dep_range: Option<DepRange>,
}

impl IntervalUncertainty {
    pub fn new(center: Matrix, radius: Matrix) -> Result<Self> {
        let s = IntervalUncertainty {
            center,
            radius,
            dep_range: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn from_bounds(lower: &Matrix, upper: &Matrix) -> Result<Self> {
        lower.check_shape(upper.shape(), "interval upper bounds")?;
        let center = lower.zip_map(upper, |l, u| 0.5 * (l + u))?;
        let radius = lower.zip_map(upper, |l, u| 0.5 * (u - l))?;
        // Rounding in the midpoint can push μ − ς a hair below the stored bound.
        let radius = radius.zip_map(&center, |r, c| if r < 0.0 && r > -tol(c) { 0.0 } else { r })?;
        IntervalUncertainty::new(center, radius)
    }

    /// Zero-radius set around `bids`.
    pub fn degenerate(bids: &Matrix) -> Self {
        IntervalUncertainty {
            center: bids.clone(),
            radius: Matrix::zeros(bids.rows(), bids.cols()),
            dep_range: None,
        }
    }

    pub fn with_dep_range(mut self, range: DepRange) -> Result<Self> {
        let shape = self.center.shape();
        range.dep_min.check_shape(shape, "dep_min")?;
        range.dep_max.check_shape(shape, "dep_max")?;
        range.slope.check_shape(shape, "valuation slope")?;
        self.dep_range = Some(range);
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.radius.check_shape(self.center.shape(), "interval radius")?;
        for (&c, &r) in self.center.as_slice().iter().zip(self.radius.as_slice()) {
            if !(c.is_finite() && r.is_finite()) {
                return Err(Error::param("interval set entries must be finite"));
            }
            if r < 0.0 {
                return Err(Error::param(format!("negative interval radius {r}")));
            }
            if c - r < -tol(c) {
                return Err(Error::param(format!("interval [{}, {}] admits negative valuations", c - r, c + r)));
            }
        }
        Ok(())
    }

    pub fn shape(&self) -> (usize, usize) {
        self.center.shape()
    }

    pub fn lower(&self) -> Matrix {
        self.center.zip_map(&self.radius, |c, r| (c - r).max(0.0)).expect("validated shape")
    }

    pub fn upper(&self) -> Matrix {
        self.center.zip_map(&self.radius, |c, r| c + r).expect("validated shape")
    }

    pub fn contains(&self, bids: &Matrix) -> Result<bool> {
        bids.check_shape(self.shape(), "bids")?;
        Ok(bids
            .as_slice()
            .iter()
            .zip(self.center.as_slice().iter().zip(self.radius.as_slice()))
            .all(|(&v, (&c, &r))| (v - c).abs() <= r + tol(c)))
    }

    /// Draws a realized bid matrix inside the set. With stored DEP endpoints
    /// the DEP is drawn uniformly and mapped through the valuation; otherwise
    /// the valuation itself is drawn uniformly.
    pub fn sample_realized_bids<R: Rng + ?Sized>(&self, rng: &mut R) -> Matrix {
        let (lo, hi) = (self.lower(), self.upper());
        let (n, m) = self.shape();
        Matrix::from_fn(n, m, |i, j| {
            let (l, h) = (lo[(i, j)], hi[(i, j)]);
            if h <= l {
                return self.center[(i, j)];
            }
            let u: f64 = rng.gen();
            let v = match &self.dep_range {
                Some(d) => {
                    let dep = d.dep_min[(i, j)] + u * (d.dep_max[(i, j)] - d.dep_min[(i, j)]);
                    d.slope[(i, j)] * dep
                }
                None => l + u * (h - l),
            };
            v.clamp(l, h)
        })
    }
}

/// Parameters of one channel's correlated set:
/// `v_ij = f_j + y_ij`, `f_j ∈ [F̲_j, F̄_j]`,
/// `|Σ_i y_ij − N μ_j| ≤ ϑ √N δ_j`, and `|y_ij − μ_j| ≤ k δ_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelHistory {
    pub factor_lower: f64,
    pub factor_upper: f64,
    pub component_mean: f64,
    pub component_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoricalUncertainty {
    pub bidders: usize,
    pub channels: Vec<ChannelHistory>,
    /// `ϑ`
    pub conservativeness: f64,
    /// Per-component bound `k`, in standard deviations.
    pub component_sigmas: f64,
}

impl HistoricalUncertainty {
    pub fn validate(&self) -> Result<()> {
        if self.bidders == 0 || self.channels.is_empty() {
            return Err(Error::param("historical set needs at least one bidder and one channel"));
        }
        if !(self.conservativeness >= 0.0 && self.conservativeness.is_finite()) {
            return Err(Error::param("conservativeness must be finite and non-negative"));
        }
        if !(self.component_sigmas > 0.0 && self.component_sigmas.is_finite()) {
            return Err(Error::param("component bound must be positive"));
        }
        for (j, c) in self.channels.iter().enumerate() {
            if !(c.factor_lower <= c.factor_upper) || !c.factor_lower.is_finite() || !c.factor_upper.is_finite() {
                return Err(Error::param(format!("channel {j}: factor bounds out of order")));
            }
            if !(c.component_std > 0.0 && c.component_std.is_finite()) || !c.component_mean.is_finite() {
                return Err(Error::param(format!("channel {j}: component std must be positive")));
            }
        }
        Ok(())
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.bidders, self.channels.len())
    }

    /// Bounds on `Σ_i y_ij` and on each `y_ij` for channel `j`.
    fn component_bounds(&self, j: usize) -> ((f64, f64), (f64, f64)) {
        let c = &self.channels[j];
        let n = self.bidders as f64;
        let spread = self.conservativeness * n.sqrt() * c.component_std;
        let sum = (n * c.component_mean - spread, n * c.component_mean + spread);
        let half = self.component_sigmas * c.component_std;
        let each = (c.component_mean - half, c.component_mean + half);
        (sum, each)
    }

    /// Smallest and largest value any single `v_ij` can take on channel `j`.
    pub fn entry_range(&self, j: usize) -> (f64, f64) {
        let c = &self.channels[j];
        let n = self.bidders as f64;
        let ((s_lo, s_hi), (y_lo, y_hi)) = self.component_bounds(j);
        let y_min = y_lo.max(s_lo - (n - 1.0) * y_hi);
        let y_max = y_hi.min(s_hi - (n - 1.0) * y_lo);
        (c.factor_lower + y_min, c.factor_upper + y_max)
    }

    pub fn contains(&self, bids: &Matrix) -> Result<bool> {
        bids.check_shape(self.shape(), "bids")?;
        let n = self.bidders as f64;
        for j in 0..self.channels.len() {
            let c = &self.channels[j];
            let ((s_lo, s_hi), (y_lo, y_hi)) = self.component_bounds(j);
            let total = bids.col_sum(j);
            // Feasible common factors form an interval; intersect all constraints on f.
            let mut lo = c.factor_lower.max((total - s_hi) / n);
            let mut hi = c.factor_upper.min((total - s_lo) / n);
            for i in 0..self.bidders {
                lo = lo.max(bids[(i, j)] - y_hi);
                hi = hi.min(bids[(i, j)] - y_lo);
            }
            let scale = total.abs().max(1.0);
            if lo > hi + 1e-9 * scale {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Per-bidder minima and maxima, `N × M` each.
    pub fn bounds(&self) -> (Matrix, Matrix) {
        let (n, m) = self.shape();
        let ranges: Vec<(f64, f64)> = (0..m).map(|j| self.entry_range(j)).collect();
        (
            Matrix::from_fn(n, m, |_, j| ranges[j].0),
            Matrix::from_fn(n, m, |_, j| ranges[j].1),
        )
    }

    /// Fits a set from past bid matrices: the common factor of channel `j` in
    /// round `t` is the median bid, components are the residuals around it.
    pub fn fit(history: &[Matrix], conservativeness: f64, component_sigmas: f64) -> Result<Self> {
        let first = history.first().ok_or_else(|| Error::param("bid history is empty"))?;
        let (n, m) = first.shape();
        for h in history {
            h.check_shape((n, m), "bid history round")?;
        }
        let mut channels = Vec::with_capacity(m);
        for j in 0..m {
            let mut factors = Vec::with_capacity(history.len());
            let mut residuals = Vec::with_capacity(history.len() * n);
            for h in history {
                let mut col: Vec<f64> = (0..n).map(|i| h[(i, j)]).collect();
                col.sort_by(f64::total_cmp);
                let med = if n % 2 == 1 {
                    col[n / 2]
                } else {
                    0.5 * (col[n / 2 - 1] + col[n / 2])
                };
                factors.push(med);
                residuals.extend(col.iter().map(|v| v - med));
            }
            let mean = residuals.iter().sum::<f64>() / residuals.len() as f64;
            let var = residuals.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / residuals.len().max(2).saturating_sub(1) as f64;
            channels.push(ChannelHistory {
                factor_lower: factors.iter().copied().fold(f64::INFINITY, f64::min),
                factor_upper: factors.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                component_mean: mean,
                component_std: var.sqrt().max(1e-9),
            });
        }
        let set = HistoricalUncertainty {
            bidders: n,
            channels,
            conservativeness,
            component_sigmas,
        };
        set.validate()?;
        Ok(set)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UncertaintySet {
    Interval(IntervalUncertainty),
    Historical(HistoricalUncertainty),
}

impl UncertaintySet {
    pub fn validate(&self) -> Result<()> {
        match self {
            UncertaintySet::Interval(s) => s.validate(),
            UncertaintySet::Historical(s) => s.validate(),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            UncertaintySet::Interval(s) => s.shape(),
            UncertaintySet::Historical(s) => s.shape(),
        }
    }

    pub fn contains(&self, bids: &Matrix) -> Result<bool> {
        match self {
            UncertaintySet::Interval(s) => s.contains(bids),
            UncertaintySet::Historical(s) => s.contains(bids),
        }
    }

    /// Elementwise smallest valuation any member of the set can take.
    pub fn lower(&self) -> Matrix {
        match self {
            UncertaintySet::Interval(s) => s.lower(),
            UncertaintySet::Historical(s) => s.bounds().0,
        }
    }

    /// Elementwise largest valuation any member of the set can take.
    pub fn upper(&self) -> Matrix {
        match self {
            UncertaintySet::Interval(s) => s.upper(),
            UncertaintySet::Historical(s) => s.bounds().1,
        }
    }

    /// `ū^i = argmin_{u ∈ 𝒰} Σ_j x_ij u_ij`.
    ///
    /// Both set families are products over channels in which every entry
    /// ranges independently over its own bounds once the others are free, so
    /// for `x ≥ 0` the minimizer is the vector of per-entry minima.
    pub fn worst_case_profile(&self, x: &Matrix, bidder: usize) -> Result<Vec<f64>> {
        x.check_shape(self.shape(), "allocation")?;
        if bidder >= self.shape().0 {
            return Err(Error::dims("bidder index", format!("< {}", self.shape().0), bidder));
        }
        if x.row(bidder).iter().any(|&v| v < -1e-12) {
            return Err(Error::param("allocation must be non-negative"));
        }
        Ok(self.lower().row(bidder).to_vec())
    }
}

impl From<IntervalUncertainty> for UncertaintySet {
    fn from(s: IntervalUncertainty) -> Self {
        UncertaintySet::Interval(s)
    }
}

impl From<HistoricalUncertainty> for UncertaintySet {
    fn from(s: HistoricalUncertainty) -> Self {
        UncertaintySet::Historical(s)
    }
}
