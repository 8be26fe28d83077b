//! Interval sets from a box of possible warden positions: per node/channel
//! pair, the smallest and largest channel DEP over the box are searched with
//! a coarse grid followed by particle-swarm refinement, then mapped through
//! the (linear in DEP) valuation.

use std::thread;

use serde::{Deserialize, Serialize};

use crate::channel::Position3D;
use crate::covert::{covert_cc, covert_mi, valuation, CovertLinkScenario, DepSampler, ThresholdSearch};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::pso::{self, PsoConfig};
use crate::rng::substream;

use super::{DepRange, IntervalUncertainty};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WardenBox {
    pub center: Position3D,
    pub half_width: [f64; 3],
}

impl WardenBox {
    pub fn cube(center: Position3D, half_width: f64) -> Self {
        WardenBox {
            center,
            half_width: [half_width; 3],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.center.is_finite() || self.half_width.iter().any(|h| !(h.is_finite() && *h >= 0.0)) {
            return Err(Error::param("warden box needs a finite center and non-negative half-widths"));
        }
        Ok(())
    }

    pub fn contains(&self, p: &Position3D) -> bool {
        let (c, q) = (self.center.to_array(), p.to_array());
        (0..3).all(|k| (q[k] - c[k]).abs() <= self.half_width[k] * (1.0 + 1e-12))
    }

    fn bounds(&self) -> ([f64; 3], [f64; 3]) {
        let c = self.center.to_array();
        let lo = [0, 1, 2].map(|k| c[k] - self.half_width[k]);
        let hi = [0, 1, 2].map(|k| c[k] + self.half_width[k]);
        (lo, hi)
    }
}

/// Valuation inputs of one node on one channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairModel {
    pub scenario: CovertLinkScenario,
    pub indicator: bool,
    pub eta1: f64,
    pub eta2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxSearchConfig {
    /// Fading draws per sub-carrier for every DEP evaluation.
    pub dep_samples: usize,
    /// Draws for the CC and MI expectations.
    pub metric_samples: usize,
    /// Grid points per axis of the coarse search.
    pub grid_points: usize,
    pub pso: PsoConfig,
    pub threshold: ThresholdSearch,
    /// Worker threads for the per-pair searches (0 = available parallelism).
    pub workers: usize,
}

impl Default for BoxSearchConfig {
    fn default() -> Self {
        BoxSearchConfig {
            dep_samples: 256,
            metric_samples: 4000,
            grid_points: 5,
            pso: PsoConfig::default(),
            threshold: ThresholdSearch::default(),
            workers: 0,
        }
    }
}

/// Fixed Monte-Carlo state for every pair of a market: the valuation slope
/// `𝕀 (η1 MI + η2 CC)` and a DEP sampler whose draws are reused for every
/// warden position (common random numbers).
#[derive(Debug, Clone)]
pub struct ValuationModel {
    rows: usize,
    cols: usize,
    slope: Matrix,
    mi: Matrix,
    cc: Matrix,
    samplers: Vec<DepSampler>,
}

/// Result of a warden-box search.
#[derive(Debug, Clone)]
pub struct WardenBoxInterval {
    pub set: IntervalUncertainty,
    pub nominal_dep: Matrix,
    pub nominal: Matrix,
    /// Row-major `N × M` positions attaining the smallest and largest DEP.
    pub argmin: Vec<Position3D>,
    pub argmax: Vec<Position3D>,
}

fn worker_count(requested: usize, jobs: usize) -> usize {
    let w = if requested == 0 {
        thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        requested
    };
    w.clamp(1, jobs.max(1))
}

/// Runs `f` over `0..jobs` on `workers` threads and returns results in index order.
fn par_map<T: Send>(jobs: usize, workers: usize, f: impl Fn(usize) -> Result<T> + Sync) -> Result<Vec<T>> {
    let workers = worker_count(workers, jobs);
    if workers == 1 {
        return (0..jobs).map(&f).collect();
    }
    let f = &f;
    let chunks: Vec<Result<Vec<T>>> = thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| scope.spawn(move || (w..jobs).step_by(workers).map(f).collect::<Result<Vec<T>>>()))
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut per_worker = chunks.into_iter().collect::<Result<Vec<_>>>()?;
    let mut iters: Vec<_> = per_worker.iter_mut().map(|v| v.drain(..)).collect();
    let mut out = Vec::with_capacity(jobs);
    for k in 0..jobs {
        out.push(iters[k % workers].next().expect("chunk length"));
    }
    Ok(out)
}

impl ValuationModel {
    /// `pairs` is row-major `N × M`.
    pub fn build(rows: usize, cols: usize, pairs: &[PairModel], cfg: &BoxSearchConfig, seed: u64) -> Result<Self> {
        if pairs.len() != rows * cols {
            return Err(Error::dims("pair models", rows * cols, pairs.len()));
        }
        let built = par_map(pairs.len(), cfg.workers, |k| {
            let p = &pairs[k];
            let (i, j) = ((k / cols) as u64, (k % cols) as u64);
            let cc = covert_cc(&p.scenario, cfg.metric_samples, &mut substream(seed, &[i, j, 1]))?.mean;
            let mi = covert_mi(&p.scenario, cfg.metric_samples, &mut substream(seed, &[i, j, 2]))?.mean;
            let slope = valuation(p.indicator, p.eta1, p.eta2, mi, cc, 1.0)?;
            let sampler = DepSampler::new(&p.scenario, cfg.dep_samples, cfg.threshold, &mut substream(seed, &[i, j, 3]))?;
            Ok((slope, mi, cc, sampler))
        })?;
        let mut slope = Matrix::zeros(rows, cols);
        let mut mi = Matrix::zeros(rows, cols);
        let mut cc = Matrix::zeros(rows, cols);
        let mut samplers = Vec::with_capacity(pairs.len());
        for (k, (s, m, c, d)) in built.into_iter().enumerate() {
            let (i, j) = (k / cols, k % cols);
            slope[(i, j)] = s;
            mi[(i, j)] = m;
            cc[(i, j)] = c;
            samplers.push(d);
        }
        Ok(ValuationModel {
            rows,
            cols,
            slope,
            mi,
            cc,
            samplers,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn slope(&self) -> &Matrix {
        &self.slope
    }

    pub fn mutual_information(&self) -> &Matrix {
        &self.mi
    }

    pub fn capacity(&self) -> &Matrix {
        &self.cc
    }

    pub fn sampler(&self, i: usize, j: usize) -> &DepSampler {
        &self.samplers[i * self.cols + j]
    }

    /// Channel DEP of every pair with node `i`'s warden at `wardens[i]`.
    pub fn dep_at(&self, wardens: &[Position3D]) -> Result<Matrix> {
        if wardens.len() != self.rows {
            return Err(Error::dims("warden positions", self.rows, wardens.len()));
        }
        let mut dep = Matrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                dep[(i, j)] = self.sampler(i, j).evaluate(&wardens[i])?.dep;
            }
        }
        Ok(dep)
    }

    pub fn valuations_at(&self, wardens: &[Position3D]) -> Result<Matrix> {
        let dep = self.dep_at(wardens)?;
        dep.zip_map(&self.slope, |d, s| s * d)
    }

    /// DEP with every warden at its scenario position.
    pub fn nominal_dep(&self) -> Result<Matrix> {
        let mut dep = Matrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                dep[(i, j)] = self.sampler(i, j).nominal()?.dep;
            }
        }
        Ok(dep)
    }

    /// Interval set for one box per node. `hints` from a previous search with
    /// nested boxes are re-evaluated first, which makes the intervals
    /// monotone in the box size.
    pub fn build_interval(
        &self,
        boxes: &[WardenBox],
        cfg: &BoxSearchConfig,
        seed: u64,
        hints: Option<&WardenBoxInterval>,
    ) -> Result<WardenBoxInterval> {
        if boxes.len() != self.rows {
            return Err(Error::dims("warden boxes", self.rows, boxes.len()));
        }
        for (i, b) in boxes.iter().enumerate() {
            b.validate()?;
            let nominal = self.sampler(i, 0).scenario().warden;
            if !b.contains(&nominal) {
                log::warn!("warden box of node {i} excludes the nominal warden position");
            }
        }
        if cfg.grid_points == 0 {
            return Err(Error::param("grid needs at least one point per axis"));
        }
        let n_pairs = self.rows * self.cols;
        let searched = par_map(n_pairs, cfg.workers, |k| {
            let (i, j) = (k / self.cols, k % self.cols);
            let extra: Vec<Position3D> = hints
                .map(|h| vec![h.argmin[k], h.argmax[k]])
                .unwrap_or_default();
            search_pair(self.sampler(i, j), &boxes[i], cfg, &extra, seed, [i as u64, j as u64])
        })?;

        let mut dep_min = Matrix::zeros(self.rows, self.cols);
        let mut dep_max = Matrix::zeros(self.rows, self.cols);
        let mut nominal_dep = Matrix::zeros(self.rows, self.cols);
        let mut argmin = Vec::with_capacity(n_pairs);
        let mut argmax = Vec::with_capacity(n_pairs);
        for (k, s) in searched.into_iter().enumerate() {
            let (i, j) = (k / self.cols, k % self.cols);
            dep_min[(i, j)] = s.min.1;
            dep_max[(i, j)] = s.max.1;
            nominal_dep[(i, j)] = s.nominal;
            argmin.push(s.min.0);
            argmax.push(s.max.0);
        }
        let lower = dep_min.zip_map(&self.slope, |d, s| s * d)?;
        let upper = dep_max.zip_map(&self.slope, |d, s| s * d)?;
        let nominal = nominal_dep.zip_map(&self.slope, |d, s| s * d)?;
        let set = IntervalUncertainty::from_bounds(&lower, &upper)?.with_dep_range(DepRange {
            dep_min,
            dep_max,
            slope: self.slope.clone(),
        })?;
        Ok(WardenBoxInterval {
            set,
            nominal_dep,
            nominal,
            argmin,
            argmax,
        })
    }
}

struct PairSearch {
    min: (Position3D, f64),
    max: (Position3D, f64),
    nominal: f64,
}

fn search_pair(
    sampler: &DepSampler,
    bx: &WardenBox,
    cfg: &BoxSearchConfig,
    extra: &[Position3D],
    seed: u64,
    pair: [u64; 2],
) -> Result<PairSearch> {
    // Positions that coincide with a device have no defined DEP; skip them.
    let eval = |p: &Position3D| -> Result<Option<f64>> {
        match sampler.evaluate(p) {
            Ok(d) => Ok(Some(d.dep)),
            Err(Error::DegenerateGeometry { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let nominal_pos = sampler.scenario().warden;
    let nominal = eval(&nominal_pos)?.ok_or_else(|| Error::param("nominal warden coincides with a device"))?;

    let mut candidates = Vec::new();
    if bx.contains(&nominal_pos) {
        candidates.push(nominal_pos);
    }
    let g = cfg.grid_points;
    let c = bx.center.to_array();
    let step = |k: usize, a: usize| {
        if g == 1 {
            0.0
        } else {
            bx.half_width[a] * (2.0 * k as f64 / (g - 1) as f64 - 1.0)
        }
    };
    for a in 0..g {
        for b in 0..g {
            for d in 0..g {
                candidates.push(Position3D::new(c[0] + step(a, 0), c[1] + step(b, 1), c[2] + step(d, 2)));
            }
        }
    }
    candidates.extend(extra.iter().filter(|p| bx.contains(p)).copied());

    let mut best_min = (nominal_pos, f64::INFINITY);
    let mut best_max = (nominal_pos, f64::NEG_INFINITY);
    for p in &candidates {
        if let Some(v) = eval(p)? {
            if v < best_min.1 {
                best_min = (*p, v);
            }
            if v > best_max.1 {
                best_max = (*p, v);
            }
        }
    }
    if !best_min.1.is_finite() {
        return Err(Error::param("no admissible warden position in the box"));
    }

    if bx.half_width.iter().any(|&h| h > 0.0) {
        let (lo, hi) = bx.bounds();
        for (sign, label, best) in [(1.0, 4u64, &mut best_min), (-1.0, 5u64, &mut best_max)] {
            let mut rng = substream(seed, &[pair[0], pair[1], label]);
            let r = pso::minimize(
                |x| {
                    Ok(match eval(&Position3D::new(x[0], x[1], x[2]))? {
                        Some(v) => sign * v,
                        None => f64::INFINITY,
                    })
                },
                &lo,
                &hi,
                &[best.0.to_array().to_vec()],
                &cfg.pso,
                &mut rng,
            )?;
            if sign * r.value < sign * best.1 {
                *best = (Position3D::new(r.best[0], r.best[1], r.best[2]), sign * r.value);
            }
        }
    }
    Ok(PairSearch {
        min: best_min,
        max: best_max,
        nominal,
    })
}
