//! Market scenarios: generation, validation, JSON persistence and hashing.

use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{AlphaMuParams, Fading, Position3D};
use crate::covert::{CovertLinkScenario, LinkFading, PathLossExponents};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{substream, SimRng};
use crate::uncertainty::{PairModel, UncertaintySet};

pub const SCHEMA_VERSION: u32 = 1;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) / 1000.0
}

pub fn dbw_to_watts(dbw: f64) -> f64 {
    10f64.powf(dbw / 10.0)
}

pub fn watts_to_dbw(w: f64) -> f64 {
    10.0 * w.log10()
}

/// Radio parameters shared by every node and channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub carrier_frequency_hz: f64,
    pub bandwidth_hz: f64,
    pub max_transmit_power_dbm: f64,
    pub max_jamming_power_dbm: f64,
    pub subcarriers: usize,
    /// `T_pulse · bandwidth`.
    pub time_bandwidth_product: f64,
    pub duty_factor: f64,
    pub noise_comm_w: f64,
    pub noise_radar_w: f64,
    pub path_loss: PathLossExponents,
    pub fading: LinkFading,
}

impl Default for SystemParams {
    fn default() -> Self {
        let f = Fading::AlphaMu(AlphaMuParams {
            alpha: 2.5,
            mu: 1.5,
            mean_power: 1.0,
        });
        SystemParams {
            carrier_frequency_hz: 5.9e9,
            bandwidth_hz: 50e6,
            max_transmit_power_dbm: 10.0,
            max_jamming_power_dbm: 10.0,
            subcarriers: 10,
            time_bandwidth_product: 100.0,
            duty_factor: 0.01,
            noise_comm_w: 2.2e-7,
            noise_radar_w: 8e-7,
            path_loss: PathLossExponents {
                node_warden: 2.0,
                jammer_warden: 2.0,
                node_receiver: 2.0,
                jammer_node: 4.0,
            },
            fading: LinkFading::uniform(f),
        }
    }
}

impl SystemParams {
    pub fn subcarrier_spacing_hz(&self) -> f64 {
        self.bandwidth_hz / self.subcarriers as f64
    }

    pub fn pulse_duration_s(&self) -> f64 {
        self.time_bandwidth_product / self.bandwidth_hz
    }

    /// The maximum transmit power split evenly over the sub-carriers.
    pub fn transmit_power_per_subcarrier_w(&self) -> f64 {
        dbm_to_watts(self.max_transmit_power_dbm) / self.subcarriers as f64
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !pos(self.carrier_frequency_hz) || !pos(self.bandwidth_hz) || !pos(self.time_bandwidth_product) {
            return Err(Error::Validation("frequencies and time-bandwidth product must be positive".into()));
        }
        if self.subcarriers == 0 {
            return Err(Error::Validation("at least one sub-carrier is required".into()));
        }
        if !(self.duty_factor > 0.0 && self.duty_factor <= 1.0) {
            return Err(Error::Validation(format!("duty factor {} outside (0, 1]", self.duty_factor)));
        }
        if !pos(self.noise_comm_w) || !pos(self.noise_radar_w) {
            return Err(Error::Validation("noise powers must be positive".into()));
        }
        if !self.max_transmit_power_dbm.is_finite() || !self.max_jamming_power_dbm.is_finite() {
            return Err(Error::Validation("maximum powers must be finite".into()));
        }
        Ok(())
    }

    /// Link scenario for one node geometry at a given jamming power.
    pub fn link(&self, node: &NodeSpec, jamming_power_w: f64) -> CovertLinkScenario {
        CovertLinkScenario {
            node: node.position,
            jammer: node.jammer,
            receiver: node.receiver,
            warden: node.warden,
            exponents: self.path_loss,
            fading: vec![self.fading],
            noise_comm: self.noise_comm_w,
            noise_radar: self.noise_radar_w,
            subcarriers: self.subcarriers,
            subcarrier_spacing_hz: self.subcarrier_spacing_hz(),
            carrier_frequency_hz: self.carrier_frequency_hz,
            transmit_power_w: vec![self.transmit_power_per_subcarrier_w(); self.subcarriers],
            jamming_power_w,
            pulse_duration_s: self.pulse_duration_s(),
            duty_factor: self.duty_factor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub position: Position3D,
    pub jammer: Position3D,
    pub warden: Position3D,
    pub receiver: Position3D,
    pub budget: f64,
    pub eta1: f64,
    pub eta2: f64,
}

/// Channel `j` with cost `c_j = κ1_j · p_FJ_j + κ2_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub kappa1: f64,
    pub kappa2: f64,
    /// `p_FJ_j`, the friendly-jamming power used on this channel, W.
    pub jamming_power_w: f64,
}

impl ChannelSpec {
    pub fn cost(&self) -> f64 {
        self.kappa1 * self.jamming_power_w + self.kappa2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketScenario {
    pub schema_version: u32,
    pub seed: u64,
    pub system: SystemParams,
    pub nodes: Vec<NodeSpec>,
    pub channels: Vec<ChannelSpec>,
    /// `𝕀_ij ∈ {0, 1}`.
    pub indicator: Vec<Vec<u8>>,
    /// Half-width of the cube of possible warden positions, m.
    pub warden_half_width_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bids: Option<Matrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uncertainty: Option<UncertaintySet>,
}

impl MarketScenario {
    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn m(&self) -> usize {
        self.channels.len()
    }

    pub fn costs(&self) -> Vec<f64> {
        self.channels.iter().map(ChannelSpec::cost).collect()
    }

    pub fn budgets(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.budget).collect()
    }

    pub fn pair_scenario(&self, i: usize, j: usize) -> CovertLinkScenario {
        self.system.link(&self.nodes[i], self.channels[j].jamming_power_w)
    }

    /// Row-major `N × M` valuation inputs.
    pub fn pair_models(&self) -> Vec<PairModel> {
        let mut out = Vec::with_capacity(self.n() * self.m());
        for (i, node) in self.nodes.iter().enumerate() {
            for j in 0..self.m() {
                out.push(PairModel {
                    scenario: self.pair_scenario(i, j),
                    indicator: self.indicator[i][j] == 1,
                    eta1: node.eta1,
                    eta2: node.eta2,
                });
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Validation(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.system.validate()?;
        let (n, m) = (self.n(), self.m());
        if n == 0 || m == 0 {
            return Err(Error::Validation("scenario needs at least one node and one channel".into()));
        }
        if self.indicator.len() != n || self.indicator.iter().any(|r| r.len() != m) {
            return Err(Error::Validation(format!("indicator must be {n}x{m}")));
        }
        if self.indicator.iter().flatten().any(|&v| v > 1) {
            return Err(Error::Validation("indicator entries must be 0 or 1".into()));
        }
        for (j, c) in self.channels.iter().enumerate() {
            let ok = |v: f64| v.is_finite() && v >= 0.0;
            if !ok(c.kappa1) || !ok(c.kappa2) || !ok(c.jamming_power_w) {
                return Err(Error::Validation(format!("channel {j}: cost components must be non-negative")));
            }
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if !(node.budget.is_finite() && node.budget >= 0.0) {
                return Err(Error::Validation(format!("node {i}: budget must be non-negative")));
            }
            if !(node.eta1 >= 0.0 && node.eta2 >= 0.0) {
                return Err(Error::Validation(format!("node {i}: weights must be non-negative")));
            }
            for j in 0..m {
                self.pair_scenario(i, j)
                    .validate()
                    .map_err(|e| Error::Validation(format!("node {i}, channel {j}: {e}")))?;
            }
        }
        if !(self.warden_half_width_m.is_finite() && self.warden_half_width_m >= 0.0) {
            return Err(Error::Validation("warden half-width must be non-negative".into()));
        }
        if let Some(b) = &self.bids {
            if b.shape() != (n, m) {
                return Err(Error::Validation(format!(
                    "bids are {}x{} but the market is {n}x{m}",
                    b.rows(),
                    b.cols()
                )));
            }
        }
        if let Some(u) = &self.uncertainty {
            if u.shape() != (n, m) {
                return Err(Error::Validation(format!("uncertainty set does not match the {n}x{m} market")));
            }
            u.validate().map_err(|e| Error::Validation(e.to_string()))?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: MarketScenario = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    /// SHA-256 of the compact JSON rendering (fields in declaration order,
    /// shortest round-trip float formatting).
    pub fn hash(&self) -> Result<String> {
        let body = serde_json::to_vec(self).map_err(|e| Error::Parse(e.to_string()))?;
        Ok(hex::encode(Sha256::digest(body)))
    }
}

pub fn save_scenario(scenario: &MarketScenario, path: &Path) -> Result<()> {
    fs::write(path, scenario.to_json()?)?;
    Ok(())
}

pub fn load_scenario(path: &Path) -> Result<MarketScenario> {
    MarketScenario::from_json(&fs::read_to_string(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub nodes: usize,
    pub channels: usize,
    /// Side of the square deployment area, m.
    pub area_m: f64,
    /// Jammers and receivers are dropped uniformly in a disc of this radius
    /// around their node (clipped to the area).
    pub local_radius_m: f64,
    /// Receiver heights are drawn from this range, m; all other devices sit at 0.
    pub receiver_height_m: (f64, f64),
    pub cost_mean: f64,
    pub cost_variance: f64,
    /// Share of each channel cost attributed to jamming (`κ1 p_FJ`).
    pub jamming_cost_share: f64,
    pub budget_range: (f64, f64),
    /// Per-channel friendly-jamming power range, dBm.
    pub jamming_power_dbm: (f64, f64),
    /// Valuation at DEP 1 for a node with reference MI and CC.
    pub value_scale: f64,
    pub mi_reference_bits: f64,
    pub cc_reference_bps: f64,
    pub warden_half_width_m: f64,
    pub system: SystemParams,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            nodes: 20,
            channels: 10,
            area_m: 200.0,
            local_radius_m: 30.0,
            receiver_height_m: (0.0, 20.0),
            cost_mean: 2.0,
            cost_variance: 1.0,
            jamming_cost_share: 0.5,
            budget_range: (1.5, 5.0),
            jamming_power_dbm: (0.0, 10.0),
            value_scale: 4.0,
            mi_reference_bits: 4.0,
            cc_reference_bps: 1.7e8,
            warden_half_width_m: 2.0,
            system: SystemParams::default(),
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nodes == 0 || self.channels == 0 {
            return Err(Error::param("generator needs at least one node and one channel"));
        }
        let ordered = |r: (f64, f64)| r.0.is_finite() && r.1.is_finite() && r.0 <= r.1;
        if !ordered(self.budget_range) || self.budget_range.0 < 0.0 {
            return Err(Error::param("budget range must be ordered and non-negative"));
        }
        if !ordered(self.receiver_height_m) || !ordered(self.jamming_power_dbm) {
            return Err(Error::param("generator ranges must be ordered"));
        }
        if !(self.local_radius_m >= 0.0) {
            return Err(Error::param("local radius must be non-negative"));
        }
        if !(self.area_m > 0.0) || !(self.cost_variance >= 0.0) || !(self.value_scale >= 0.0) {
            return Err(Error::param("area, cost variance and value scale must be non-negative"));
        }
        if self.jamming_power_dbm.1 > self.system.max_jamming_power_dbm {
            return Err(Error::param("jamming power range exceeds the system maximum"));
        }
        if !(0.0..=1.0).contains(&self.jamming_cost_share) {
            return Err(Error::param("jamming cost share must lie in [0, 1]"));
        }
        if !(self.mi_reference_bits > 0.0 && self.cc_reference_bps > 0.0) {
            return Err(Error::param("metric references must be positive"));
        }
        self.system.validate()
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * rng.gen::<f64>()
}

/// Random market: nodes and wardens uniform in the square, each node's
/// jammer and receiver nearby, costs from a normal law
/// truncated at zero (by rejection), budgets uniform.
pub fn generate_scenario(config: &GeneratorConfig, seed: u64) -> Result<MarketScenario> {
    config.validate()?;
    let mut rng = substream(seed, &[0x5CE7]);
    let side = config.area_m;
    let point = |rng: &mut SimRng| Position3D::new(side * rng.gen::<f64>(), side * rng.gen::<f64>(), 0.0);
    let near = |rng: &mut SimRng, at: &Position3D, z: f64| {
        let r = config.local_radius_m * rng.gen::<f64>().sqrt();
        let t = std::f64::consts::TAU * rng.gen::<f64>();
        Position3D::new((at.x + r * t.cos()).clamp(0.0, side), (at.y + r * t.sin()).clamp(0.0, side), z)
    };

    let nodes: Vec<NodeSpec> = (0..config.nodes)
        .map(|_| {
            let position = point(&mut rng);
            let jammer = near(&mut rng, &position, 0.0);
            let warden = point(&mut rng);
            let h = uniform(&mut rng, config.receiver_height_m);
            let receiver = near(&mut rng, &position, h);
            let w: f64 = rng.gen();
            NodeSpec {
                position,
                jammer,
                warden,
                receiver,
                budget: uniform(&mut rng, config.budget_range),
                eta1: config.value_scale * w / config.mi_reference_bits,
                eta2: config.value_scale * (1.0 - w) / config.cc_reference_bps,
            }
        })
        .collect();

    let normal = Normal::new(config.cost_mean, config.cost_variance.sqrt()).map_err(|e| Error::param(e.to_string()))?;
    let channels: Vec<ChannelSpec> = (0..config.channels)
        .map(|_| {
            let cost = loop {
                let c = normal.sample(&mut rng);
                if c >= 0.0 {
                    break c;
                }
            };
            let p = dbm_to_watts(uniform(&mut rng, config.jamming_power_dbm));
            ChannelSpec {
                kappa1: config.jamming_cost_share * cost / p,
                kappa2: (1.0 - config.jamming_cost_share) * cost,
                jamming_power_w: p,
            }
        })
        .collect();

    let scenario = MarketScenario {
        schema_version: SCHEMA_VERSION,
        seed,
        system: config.system.clone(),
        indicator: vec![vec![1; config.channels]; config.nodes],
        nodes,
        channels,
        warden_half_width_m: config.warden_half_width_m,
        bids: None,
        uncertainty: None,
    };
    scenario.validate()?;
    Ok(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn system_defaults() {
        let s = SystemParams::default();
        assert_eq!(s.carrier_frequency_hz, 5.9e9);
        assert_eq!(s.subcarrier_spacing_hz(), 5e6);
        assert!((s.pulse_duration_s() - 2e-6).abs() < 1e-18);
        assert!((s.transmit_power_per_subcarrier_w() - 1e-3).abs() < 1e-15);
        assert!((dbm_to_watts(10.0) - 0.01).abs() < 1e-15);
        assert!((watts_to_dbw(dbw_to_watts(27.0)) - 27.0).abs() < 1e-12);
    }

    #[test]
    fn generation_is_deterministic_and_bounded() {
        let cfg = GeneratorConfig::default();
        let a = generate_scenario(&cfg, 7).unwrap();
        let b = generate_scenario(&cfg, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        assert!(a.budgets().iter().all(|b| (1.5..=5.0).contains(b)));
        assert!(a.costs().iter().all(|&c| c >= 0.0));
        assert_ne!(generate_scenario(&cfg, 8).unwrap(), a);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let s = generate_scenario(&GeneratorConfig::default(), 3).unwrap();
        let back = MarketScenario::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.hash().unwrap(), s.hash().unwrap());
    }

    #[test]
    fn missing_budget_names_field() {
        let s = generate_scenario(&GeneratorConfig { nodes: 2, channels: 2, ..Default::default() }, 1).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&s.to_json().unwrap()).unwrap();
        v["nodes"][1].as_object_mut().unwrap().remove("budget");
        let err = MarketScenario::from_json(&v.to_string()).unwrap_err();
        assert!(matches!(err, Error::Parse(ref m) if m.contains("budget")), "{err}");
    }

    #[test]
    fn bid_shape_mismatch_is_validation_error() {
        let mut s = generate_scenario(&GeneratorConfig { nodes: 2, channels: 3, ..Default::default() }, 1).unwrap();
        s.bids = Some(Matrix::zeros(3, 2));
        assert!(matches!(MarketScenario::from_json(&s.to_json().unwrap()), Err(Error::Validation(_))));
    }
}
