//! Monte-Carlo covert-communication metrics for one (node, channel) pair:
//! the warden's detection error probability (DEP), the covert channel
//! capacity (CC), the covert radar mutual information (MI), and the
//! resulting channel valuation.

use std::thread;

use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::channel::{path_gain, Fading, FadingSampler, LinkGeometry, Position3D};
use crate::error::{Error, Result};
use crate::rng::substream;

/// Small-scale fading of every link touched by one sub-carrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkFading {
    /// `h_wm²`: node → warden.
    pub warden_signal: Fading,
    /// `h_wg²`: jammer → warden.
    pub warden_jamming: Fading,
    /// `|h_m|²`: node → receiver.
    pub comm_signal: Fading,
    /// `|h_g|²`: jammer → node.
    pub comm_jamming: Fading,
    /// `|G(f_m)|²`: radar transmit ESD.
    pub radar_signal: Fading,
    /// `|J(f_m)|²`: jamming ESD.
    pub radar_jamming: Fading,
}

impl LinkFading {
    pub fn uniform(f: Fading) -> Self {
        LinkFading {
            warden_signal: f,
            warden_jamming: f,
            comm_signal: f,
            comm_jamming: f,
            radar_signal: f,
            radar_jamming: f,
        }
    }

    fn all(&self) -> [&Fading; 6] {
        [
            &self.warden_signal,
            &self.warden_jamming,
            &self.comm_signal,
            &self.comm_jamming,
            &self.radar_signal,
            &self.radar_jamming,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossExponents {
    /// `α_iw`
    pub node_warden: f64,
    /// `α_gw`
    pub jammer_warden: f64,
    /// `α_bi`
    pub node_receiver: f64,
    /// `α_gi`
    pub jammer_node: f64,
}

impl PathLossExponents {
    pub fn uniform(alpha: f64) -> Self {
        PathLossExponents {
            node_warden: alpha,
            jammer_warden: alpha,
            node_receiver: alpha,
            jammer_node: alpha,
        }
    }
}

/// Everything needed to evaluate the covert metrics of one node on one channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovertLinkScenario {
    pub node: Position3D,
    pub jammer: Position3D,
    pub receiver: Position3D,
    pub warden: Position3D,
    pub exponents: PathLossExponents,
    /// Either one entry shared by all sub-carriers or one per sub-carrier.
    pub fading: Vec<LinkFading>,
    /// `σ_c²` in W.
    pub noise_comm: f64,
    /// `σ_r²` in W.
    pub noise_radar: f64,
    pub subcarriers: usize,
    /// `Δf` in Hz.
    pub subcarrier_spacing_hz: f64,
    /// `f_c` in Hz.
    pub carrier_frequency_hz: f64,
    /// `p_m^{(T)}` per sub-carrier, W.
    pub transmit_power_w: Vec<f64>,
    /// `p_g^{(J)}` in W.
    pub jamming_power_w: f64,
    /// `T_pulse` in s.
    pub pulse_duration_s: f64,
    /// Radar duty factor `δ ∈ (0, 1]`.
    pub duty_factor: f64,
}

impl CovertLinkScenario {
    pub fn validate(&self) -> Result<()> {
        let positions = [self.node, self.jammer, self.receiver, self.warden];
        if positions.iter().any(|p| !p.is_finite()) {
            return Err(Error::param("positions must be finite"));
        }
        let e = &self.exponents;
        for (name, v) in [
            ("node_warden", e.node_warden),
            ("jammer_warden", e.jammer_warden),
            ("node_receiver", e.node_receiver),
            ("jammer_node", e.jammer_node),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::param(format!("path-loss exponent {name} = {v}")));
            }
        }
        if self.subcarriers == 0 {
            return Err(Error::param("at least one sub-carrier is required"));
        }
        if self.fading.len() != 1 && self.fading.len() != self.subcarriers {
            return Err(Error::dims("fading entries", format!("1 or {}", self.subcarriers), self.fading.len()));
        }
        for f in &self.fading {
            for x in f.all() {
                x.validate()?;
            }
        }
        if self.transmit_power_w.len() != self.subcarriers {
            return Err(Error::dims("transmit powers", self.subcarriers, self.transmit_power_w.len()));
        }
        let nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if !self.transmit_power_w.iter().all(|&p| nonneg(p)) || !nonneg(self.jamming_power_w) {
            return Err(Error::param("powers must be finite and non-negative"));
        }
        if !(self.noise_comm.is_finite() && self.noise_comm > 0.0)
            || !(self.noise_radar.is_finite() && self.noise_radar > 0.0)
        {
            return Err(Error::param("noise powers must be positive"));
        }
        if !(self.subcarrier_spacing_hz > 0.0 && self.subcarrier_spacing_hz.is_finite()) {
            return Err(Error::param("sub-carrier spacing must be positive"));
        }
        if !(self.pulse_duration_s > 0.0 && self.pulse_duration_s.is_finite()) {
            return Err(Error::param("pulse duration must be positive"));
        }
        if !(self.duty_factor > 0.0 && self.duty_factor <= 1.0) {
            return Err(Error::param(format!("duty factor must lie in (0, 1], got {}", self.duty_factor)));
        }
        // Rejects coincident devices on any link that is used.
        self.gains_at(&self.warden)?;
        self.receiver_gains()?;
        Ok(())
    }

    /// Pulse repetition interval `T_pri = T_pulse / δ`.
    pub fn pulse_repetition_interval(&self) -> f64 {
        self.pulse_duration_s / self.duty_factor
    }

    pub fn fading_at(&self, m: usize) -> &LinkFading {
        if self.fading.len() == 1 {
            &self.fading[0]
        } else {
            &self.fading[m]
        }
    }

    pub fn subcarrier_frequency(&self, m: usize) -> f64 {
        self.carrier_frequency_hz + (m as f64 + 1.0) * self.subcarrier_spacing_hz
    }

    pub fn with_jamming_power(&self, p: f64) -> Self {
        CovertLinkScenario {
            jamming_power_w: p,
            ..self.clone()
        }
    }

    pub fn with_warden(&self, warden: Position3D) -> Self {
        CovertLinkScenario {
            warden,
            ..self.clone()
        }
    }

    /// Path gains (node → warden, jammer → warden) for a warden position.
    fn gains_at(&self, warden: &Position3D) -> Result<(f64, f64)> {
        let iw = path_gain(&LinkGeometry::new(self.node, *warden, self.exponents.node_warden))?;
        let gw = path_gain(&LinkGeometry::new(self.jammer, *warden, self.exponents.jammer_warden))?;
        Ok((iw, gw))
    }

    /// Path gains (node → receiver, jammer → node).
    fn receiver_gains(&self) -> Result<(f64, f64)> {
        let bi = path_gain(&LinkGeometry::new(self.receiver, self.node, self.exponents.node_receiver))?;
        let gi = path_gain(&LinkGeometry::new(self.jammer, self.node, self.exponents.jammer_node))?;
        Ok((bi, gi))
    }
}

/// Monte-Carlo estimate of the warden's error probabilities at one threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepEstimate {
    pub p_fa: f64,
    pub p_md: f64,
    pub dep: f64,
    pub threshold: f64,
    pub stderr: f64,
}

impl DepEstimate {
    fn from_counts(fa: usize, md: usize, n: usize, threshold: f64) -> Self {
        let n_f = n as f64;
        let p_fa = fa as f64 / n_f;
        let p_md = md as f64 / n_f;
        let var = (p_fa * (1.0 - p_fa) + p_md * (1.0 - p_md)) / n_f;
        DepEstimate {
            p_fa,
            p_md,
            dep: p_fa + p_md,
            threshold,
            stderr: var.max(0.0).sqrt(),
        }
    }
}

/// Mean and standard error of a Monte-Carlo estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: usize,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.n += 1;
        self.sum += v;
        self.sum_sq += v * v;
    }

    fn merge(self, o: Moments) -> Moments {
        Moments {
            n: self.n + o.n,
            sum: self.sum + o.sum,
            sum_sq: self.sum_sq + o.sum_sq,
        }
    }

    fn estimate(&self) -> McEstimate {
        let n = self.n as f64;
        let mean = self.sum / n;
        let var = if self.n > 1 {
            ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        McEstimate {
            mean,
            stderr: (var / n).sqrt(),
            samples: self.n,
        }
    }
}

/// Threshold search used by the warden: a logarithmic grid on the excess
/// over the noise floor followed by golden-section refinement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSearch {
    pub grid_points: usize,
    pub relative_tolerance: f64,
    /// Upper end of the search as a quantile of the received power.
    pub upper_quantile: f64,
    /// Decades spanned by the logarithmic grid below the upper bound.
    pub decades: f64,
    /// Explicit `(lower, upper]` bounds replacing the automatic ones.
    pub bounds: Option<(f64, f64)>,
}

impl Default for ThresholdSearch {
    fn default() -> Self {
        ThresholdSearch {
            grid_points: 64,
            relative_tolerance: 1e-3,
            upper_quantile: 0.999,
            decades: 12.0,
            bounds: None,
        }
    }
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Sorted received-power samples at the warden for one sub-carrier.
struct WardenPowers<'a> {
    noise_only: &'a [f64],
    with_signal: &'a [f64],
}

impl WardenPowers<'_> {
    fn at(&self, eps: f64) -> DepEstimate {
        let n = self.noise_only.len();
        let fa = n - self.noise_only.partition_point(|&y| y <= eps);
        let md = self.with_signal.partition_point(|&y| y < eps);
        DepEstimate::from_counts(fa, md, n, eps)
    }

    fn optimize(&self, noise: f64, search: &ThresholdSearch) -> Result<DepEstimate> {
        let (lo, hi) = match search.bounds {
            Some(b) => b,
            None => {
                let n = self.with_signal.len();
                let idx = ((search.upper_quantile * n as f64).ceil() as usize).clamp(1, n) - 1;
                (noise, self.with_signal[idx])
            }
        };
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::param(format!("empty threshold search range ({lo}, {hi}]")));
        }
        if search.grid_points < 2 {
            return Err(Error::param("threshold grid needs at least two points"));
        }
        let span = hi - lo;
        let eps_of = |t: f64| lo + span * 10f64.powf(t);
        let k_max = search.grid_points - 1;
        let t_of = |k: usize| -search.decades * (1.0 - k as f64 / k_max as f64);

        let mut best = self.at(eps_of(t_of(0)));
        let mut best_k = 0;
        for k in 1..=k_max {
            let e = self.at(eps_of(t_of(k)));
            if e.dep < best.dep {
                best = e;
                best_k = k;
            }
        }

        let mut a = t_of(best_k.saturating_sub(1));
        let mut b = t_of((best_k + 1).min(k_max));
        let mut c = b - GOLDEN * (b - a);
        let mut d = a + GOLDEN * (b - a);
        let mut fc = self.at(eps_of(c));
        let mut fd = self.at(eps_of(d));
        for _ in 0..200 {
            let (ea, eb) = (eps_of(a), eps_of(b));
            if (eb - ea).abs() <= search.relative_tolerance * 0.5 * (ea + eb).abs() {
                break;
            }
            for e in [fc, fd] {
                if e.dep < best.dep {
                    best = e;
                }
            }
            if fc.dep <= fd.dep {
                b = d;
                d = c;
                fd = fc;
                c = b - GOLDEN * (b - a);
                fc = self.at(eps_of(c));
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + GOLDEN * (b - a);
                fd = self.at(eps_of(d));
            }
        }
        for e in [fc, fd] {
            if e.dep < best.dep {
                best = e;
            }
        }
        Ok(best)
    }
}

/// Unit fading draws at the warden, reusable for any warden position.
#[derive(Debug, Clone)]
struct SubcarrierDraws {
    signal: Vec<f64>,
    jamming: Vec<f64>,
    jamming_sorted: Vec<f64>,
}

impl SubcarrierDraws {
    fn draw<R: Rng + ?Sized>(f: &LinkFading, samples: usize, rng: &mut R) -> Self {
        let hs: FadingSampler = f.warden_signal.sampler();
        let hg: FadingSampler = f.warden_jamming.sampler();
        let mut signal = Vec::with_capacity(samples);
        let mut jamming = Vec::with_capacity(samples);
        for _ in 0..samples {
            signal.push(hs.sample(rng));
            jamming.push(hg.sample(rng));
        }
        let mut jamming_sorted = jamming.clone();
        jamming_sorted.sort_unstable_by(f64::total_cmp);
        SubcarrierDraws {
            signal,
            jamming,
            jamming_sorted,
        }
    }
}

/// Per-sub-carrier and channel-level DEP at one warden position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelDep {
    /// `min_m ξ_m`, clamped to `[0, 1]`.
    pub dep: f64,
    pub subcarrier: usize,
    pub per_subcarrier: Vec<DepEstimate>,
}

/// Fixed fading draws at the warden for every sub-carrier of a scenario.
///
/// The draws do not depend on geometry or power, so the same sampler can be
/// evaluated at many warden positions with common random numbers.
#[derive(Debug, Clone)]
pub struct DepSampler {
    scenario: CovertLinkScenario,
    draws: Vec<SubcarrierDraws>,
    search: ThresholdSearch,
}

impl DepSampler {
    pub fn new<R: Rng + ?Sized>(
        scenario: &CovertLinkScenario,
        samples: usize,
        search: ThresholdSearch,
        rng: &mut R,
    ) -> Result<Self> {
        scenario.validate()?;
        if samples == 0 {
            return Err(Error::param("sample count must be at least 1"));
        }
        let draws = (0..scenario.subcarriers)
            .map(|m| SubcarrierDraws::draw(scenario.fading_at(m), samples, rng))
            .collect();
        Ok(DepSampler {
            scenario: scenario.clone(),
            draws,
            search,
        })
    }

    pub fn scenario(&self) -> &CovertLinkScenario {
        &self.scenario
    }

    /// Warden-optimal DEP of one sub-carrier with the warden at `warden`.
    pub fn subcarrier_optimum(&self, m: usize, warden: &Position3D) -> Result<DepEstimate> {
        let s = &self.scenario;
        let (g_iw, g_gw) = s.gains_at(warden)?;
        let c1w = g_iw * s.transmit_power_w[m];
        let c2w = g_gw * s.jamming_power_w;
        let noise = s.noise_comm;
        let d = &self.draws[m];
        let noise_only: Vec<f64> = d.jamming_sorted.iter().map(|&g| noise + c2w * g).collect();
        let mut with_signal: Vec<f64> = d
            .signal
            .iter()
            .zip(&d.jamming)
            .map(|(&h, &g)| noise + c1w * h + c2w * g)
            .collect();
        with_signal.sort_unstable_by(f64::total_cmp);
        let powers = WardenPowers {
            noise_only: &noise_only,
            with_signal: &with_signal,
        };
        match powers.optimize(noise, &self.search) {
            Ok(e) => Ok(e),
            // No received energy above the floor: the warden cannot do better
            // than guessing, so the error probability is 1.
            Err(_) if self.search.bounds.is_none() => Ok(powers.at(noise)),
            Err(e) => Err(e),
        }
    }

    pub fn evaluate(&self, warden: &Position3D) -> Result<ChannelDep> {
        let per_subcarrier = (0..self.scenario.subcarriers)
            .map(|m| self.subcarrier_optimum(m, warden))
            .collect::<Result<Vec<_>>>()?;
        let (subcarrier, best) = per_subcarrier
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.dep.total_cmp(&b.1.dep))
            .expect("at least one sub-carrier");
        Ok(ChannelDep {
            dep: best.dep.clamp(0.0, 1.0),
            subcarrier,
            per_subcarrier,
        })
    }

    /// Channel DEP at the scenario's own warden position.
    pub fn nominal(&self) -> Result<ChannelDep> {
        self.evaluate(&self.scenario.warden)
    }
}

/// False-alarm and miss-detection probabilities of sub-carrier `m` at a
/// fixed detection threshold.
pub fn estimate_fa_md<R: Rng + ?Sized>(
    scenario: &CovertLinkScenario,
    subcarrier: usize,
    threshold: f64,
    samples: usize,
    rng: &mut R,
) -> Result<DepEstimate> {
    scenario.validate()?;
    if samples == 0 {
        return Err(Error::param("sample count must be at least 1"));
    }
    if !(threshold > 0.0) {
        return Err(Error::param(format!("threshold must be positive, got {threshold}")));
    }
    if subcarrier >= scenario.subcarriers {
        return Err(Error::dims("sub-carrier index", format!("< {}", scenario.subcarriers), subcarrier));
    }
    let (g_iw, g_gw) = scenario.gains_at(&scenario.warden)?;
    let c1w = g_iw * scenario.transmit_power_w[subcarrier];
    let c2w = g_gw * scenario.jamming_power_w;
    let f = scenario.fading_at(subcarrier);
    let (hs, hg) = (f.warden_signal.sampler(), f.warden_jamming.sampler());
    let (mut fa, mut md) = (0usize, 0usize);
    for _ in 0..samples {
        let h = hs.sample(rng);
        let g = hg.sample(rng);
        let y1 = scenario.noise_comm + c2w * g;
        if y1 > threshold {
            fa += 1;
        }
        if y1 + c1w * h < threshold {
            md += 1;
        }
    }
    Ok(DepEstimate::from_counts(fa, md, samples, threshold))
}

/// Threshold minimizing the DEP of sub-carrier `m`, and the DEP there.
pub fn warden_optimal_threshold<R: Rng + ?Sized>(
    scenario: &CovertLinkScenario,
    subcarrier: usize,
    search: &ThresholdSearch,
    samples: usize,
    rng: &mut R,
) -> Result<(f64, DepEstimate)> {
    if subcarrier >= scenario.subcarriers {
        return Err(Error::dims("sub-carrier index", format!("< {}", scenario.subcarriers), subcarrier));
    }
    scenario.validate()?;
    if samples == 0 {
        return Err(Error::param("sample count must be at least 1"));
    }
    let draws = SubcarrierDraws::draw(scenario.fading_at(subcarrier), samples, rng);
    let sampler = DepSampler {
        scenario: scenario.clone(),
        draws: (0..scenario.subcarriers)
            .map(|m| if m == subcarrier { draws.clone() } else { empty_draws() })
            .collect(),
        search: *search,
    };
    let est = if search.bounds.is_some() {
        sampler.subcarrier_optimum(subcarrier, &scenario.warden)?
    } else {
        let s = &sampler.scenario;
        let (g_iw, g_gw) = s.gains_at(&s.warden)?;
        let c1w = g_iw * s.transmit_power_w[subcarrier];
        let c2w = g_gw * s.jamming_power_w;
        let noise_only: Vec<f64> = draws.jamming_sorted.iter().map(|&g| s.noise_comm + c2w * g).collect();
        let mut with_signal: Vec<f64> = draws
            .signal
            .iter()
            .zip(&draws.jamming)
            .map(|(&h, &g)| s.noise_comm + c1w * h + c2w * g)
            .collect();
        with_signal.sort_unstable_by(f64::total_cmp);
        WardenPowers {
            noise_only: &noise_only,
            with_signal: &with_signal,
        }
        .optimize(s.noise_comm, search)?
    };
    Ok((est.threshold, est))
}

fn empty_draws() -> SubcarrierDraws {
    SubcarrierDraws {
        signal: Vec::new(),
        jamming: Vec::new(),
        jamming_sorted: Vec::new(),
    }
}

/// Channel-level DEP: the minimum warden-optimal DEP over sub-carriers.
pub fn channel_dep<R: Rng + ?Sized>(scenario: &CovertLinkScenario, samples: usize, rng: &mut R) -> Result<f64> {
    Ok(channel_dep_detail(scenario, samples, &ThresholdSearch::default(), rng)?.dep)
}

pub fn channel_dep_detail<R: Rng + ?Sized>(
    scenario: &CovertLinkScenario,
    samples: usize,
    search: &ThresholdSearch,
    rng: &mut R,
) -> Result<ChannelDep> {
    DepSampler::new(scenario, samples, *search, rng)?.nominal()
}

/// Per-draw summand of the capacity: `Σ_m Δf log2(1 + C1 |h_m|² / (σ_c² + C2 |h_g|²))`.
struct CapacityKernel {
    spacing: f64,
    noise: f64,
    signal_gain: Vec<f64>,
    jamming_gain: f64,
    samplers: Vec<(FadingSampler, FadingSampler)>,
}

impl CapacityKernel {
    fn new(s: &CovertLinkScenario) -> Result<Self> {
        s.validate()?;
        let (g_bi, g_gi) = s.receiver_gains()?;
        Ok(CapacityKernel {
            spacing: s.subcarrier_spacing_hz,
            noise: s.noise_comm,
            signal_gain: s.transmit_power_w.iter().map(|p| g_bi * p).collect(),
            jamming_gain: g_gi * s.jamming_power_w,
            samplers: (0..s.subcarriers)
                .map(|m| {
                    let f = s.fading_at(m);
                    (f.comm_signal.sampler(), f.comm_jamming.sampler())
                })
                .collect(),
        })
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut acc = 0.0;
        for (c1, (hs, hg)) in self.signal_gain.iter().zip(&self.samplers) {
            let h = hs.sample(rng);
            let g = hg.sample(rng);
            acc += (1.0 + c1 * h / (self.noise + self.jamming_gain * g)).log2();
        }
        self.spacing * acc
    }
}

/// Per-draw summand of the radar MI:
/// `(Δf T_pri / 2) Σ_m log2(1 + T_pri C1 |G|² / (σ_r² + C4 |J|²))`.
struct MutualInfoKernel {
    prefactor: f64,
    pri: f64,
    noise: f64,
    signal_gain: Vec<f64>,
    jamming_gain: f64,
    samplers: Vec<(FadingSampler, FadingSampler)>,
}

impl MutualInfoKernel {
    fn new(s: &CovertLinkScenario) -> Result<Self> {
        s.validate()?;
        let (g_bi, g_gi) = s.receiver_gains()?;
        let pri = s.pulse_repetition_interval();
        Ok(MutualInfoKernel {
            prefactor: s.subcarrier_spacing_hz * pri / 2.0,
            pri,
            noise: s.noise_radar,
            signal_gain: s.transmit_power_w.iter().map(|p| g_bi * p).collect(),
            jamming_gain: g_gi * s.jamming_power_w,
            samplers: (0..s.subcarriers)
                .map(|m| {
                    let f = s.fading_at(m);
                    (f.radar_signal.sampler(), f.radar_jamming.sampler())
                })
                .collect(),
        })
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut acc = 0.0;
        for (c3, (gs, js)) in self.signal_gain.iter().zip(&self.samplers) {
            let g = gs.sample(rng);
            let j = js.sample(rng);
            acc += (1.0 + self.pri * c3 * g / (self.noise + self.jamming_gain * j)).log2();
        }
        self.prefactor * acc
    }
}

fn run_serial<R: Rng + ?Sized>(samples: usize, rng: &mut R, mut f: impl FnMut(&mut R) -> f64) -> Result<McEstimate> {
    if samples == 0 {
        return Err(Error::param("sample count must be at least 1"));
    }
    let mut m = Moments::default();
    for _ in 0..samples {
        m.push(f(rng));
    }
    Ok(m.estimate())
}

/// Splits `samples` over `workers` threads; worker `k` uses the sub-stream
/// `(seed, k)`. Partial sums are merged in worker order, so the result is a
/// pure function of `(seed, workers)`.
fn run_parallel<F>(samples: usize, seed: u64, workers: usize, f: F) -> Result<McEstimate>
where
    F: Fn(&mut crate::rng::SimRng) -> f64 + Sync,
{
    if samples == 0 {
        return Err(Error::param("sample count must be at least 1"));
    }
    let workers = workers.clamp(1, samples);
    let f = &f;
    let parts: Vec<Moments> = thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|k| {
                let n = samples / workers + usize::from(k < samples % workers);
                scope.spawn(move || {
                    let mut rng = substream(seed, &[k as u64]);
                    let mut m = Moments::default();
                    for _ in 0..n {
                        m.push(f(&mut rng));
                    }
                    m
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    Ok(parts.into_iter().fold(Moments::default(), Moments::merge).estimate())
}

/// Ergodic covert channel capacity in bit/s.
pub fn covert_cc<R: Rng + ?Sized>(scenario: &CovertLinkScenario, samples: usize, rng: &mut R) -> Result<McEstimate> {
    let k = CapacityKernel::new(scenario)?;
    run_serial(samples, rng, |r| k.draw(r))
}

pub fn covert_cc_parallel(scenario: &CovertLinkScenario, samples: usize, seed: u64, workers: usize) -> Result<McEstimate> {
    let k = CapacityKernel::new(scenario)?;
    run_parallel(samples, seed, workers, |r| k.draw(r))
}

/// Covert radar mutual information in bits.
pub fn covert_mi<R: Rng + ?Sized>(scenario: &CovertLinkScenario, samples: usize, rng: &mut R) -> Result<McEstimate> {
    let k = MutualInfoKernel::new(scenario)?;
    run_serial(samples, rng, |r| k.draw(r))
}

pub fn covert_mi_parallel(scenario: &CovertLinkScenario, samples: usize, seed: u64, workers: usize) -> Result<McEstimate> {
    let k = MutualInfoKernel::new(scenario)?;
    run_parallel(samples, seed, workers, |r| k.draw(r))
}

/// `v = 𝕀 (η1 MI + η2 CC) ξ_w`.
pub fn valuation(indicator: bool, eta1: f64, eta2: f64, mi: f64, cc: f64, dep: f64) -> Result<f64> {
    if !(eta1 >= 0.0 && eta2 >= 0.0) {
        return Err(Error::param(format!("weights must be non-negative, got ({eta1}, {eta2})")));
    }
    if !(0.0..=1.0).contains(&dep) {
        return Err(Error::param(format!("dep must lie in [0, 1], got {dep}")));
    }
    if !(mi >= 0.0 && cc >= 0.0) {
        return Err(Error::param("mi and cc must be non-negative"));
    }
    if !indicator {
        return Ok(0.0);
    }
    Ok((eta1 * mi + eta2 * cc) * dep)
}
