//! Link geometry, large-scale path loss and α-μ small-scale fading.
//!
//! The squared α-μ envelope `Υ` has density
//! `f(γ) = α γ^{αμ/2-1} / (2 β^{αμ/2} Γ(μ)) · exp(-(γ/β)^{α/2})` with
//! `β = γ̄ Γ(μ) / Γ(μ + 2/α)`. Substituting `W = (Υ/β)^{α/2}` gives
//! `W ~ Gamma(μ, 1)`, which is how samples are drawn.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position3D {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Position3D { x, y, z }
    }

    pub fn distance(&self, other: &Position3D) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn offset(&self, d: [f64; 3]) -> Position3D {
        Position3D::new(self.x + d[0], self.y + d[1], self.z + d[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Position3D::new(a[0], a[1], a[2])
    }
}

/// Parameters of a squared α-μ fading power gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaMuParams {
    pub alpha: f64,
    pub mu: f64,
    pub mean_power: f64,
}

impl AlphaMuParams {
    pub fn new(alpha: f64, mu: f64, mean_power: f64) -> Result<Self> {
        let p = AlphaMuParams {
            alpha,
            mu,
            mean_power,
        };
        p.validate()?;
        Ok(p)
    }

    /// Rayleigh fading (exponential power gain).
    pub fn rayleigh(mean_power: f64) -> Result<Self> {
        Self::new(2.0, 1.0, mean_power)
    }

    /// Nakagami-m fading (Gamma power gain with shape `m`).
    pub fn nakagami(m: f64, mean_power: f64) -> Result<Self> {
        Self::new(2.0, m, mean_power)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.alpha) || !ok(self.mu) || !ok(self.mean_power) {
            return Err(Error::param(format!(
                "alpha-mu parameters must be finite and positive, got {self:?}"
            )));
        }
        Ok(())
    }

    /// Scale `β = γ̄ Γ(μ) / Γ(μ + 2/α)`.
    pub fn beta(&self) -> f64 {
        self.mean_power * (ln_gamma(self.mu) - ln_gamma(self.mu + 2.0 / self.alpha)).exp()
    }

    pub fn sampler(&self) -> AlphaMuSampler {
        AlphaMuSampler {
            gamma: Gamma::new(self.mu, 1.0).expect("validated shape"),
            beta: self.beta(),
            exponent: 2.0 / self.alpha,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sampler().sample(rng)
    }

    /// `F(γ) = γ_inc(μ, (γ/β)^{α/2}) / Γ(μ)`.
    pub fn cdf(&self, gamma: f64) -> f64 {
        if gamma <= 0.0 {
            return 0.0;
        }
        if gamma.is_infinite() {
            return 1.0;
        }
        let arg = (gamma / self.beta()).powf(self.alpha / 2.0);
        gamma_lr(self.mu, arg).clamp(0.0, 1.0)
    }
}

/// Pre-built sampler; avoids rebuilding the Gamma distribution per draw.
#[derive(Debug, Clone, Copy)]
pub struct AlphaMuSampler {
    gamma: Gamma<f64>,
    beta: f64,
    exponent: f64,
}

impl Distribution<f64> for AlphaMuSampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let w: f64 = self.gamma.sample(rng);
        self.beta * w.powf(self.exponent)
    }
}

/// Small-scale fading power gain of one link: either α-μ distributed or a
/// fixed (non-fading) gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Fading {
    AlphaMu(AlphaMuParams),
    Constant { gain: f64 },
}

impl Fading {
    pub fn rayleigh() -> Fading {
        Fading::AlphaMu(AlphaMuParams {
            alpha: 2.0,
            mu: 1.0,
            mean_power: 1.0,
        })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Fading::AlphaMu(p) => p.validate(),
            Fading::Constant { gain } if gain.is_finite() && *gain >= 0.0 => Ok(()),
            Fading::Constant { gain } => Err(Error::param(format!(
                "constant fading gain must be finite and non-negative, got {gain}"
            ))),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Fading::AlphaMu(p) => p.mean_power,
            Fading::Constant { gain } => *gain,
        }
    }

    pub fn sampler(&self) -> FadingSampler {
        match self {
            Fading::AlphaMu(p) => FadingSampler::AlphaMu(p.sampler()),
            Fading::Constant { gain } => FadingSampler::Constant(*gain),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum FadingSampler {
    AlphaMu(AlphaMuSampler),
    Constant(f64),
}

impl Distribution<f64> for FadingSampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            FadingSampler::AlphaMu(s) => s.sample(rng),
            // Still consume the stream so that draws stay aligned across
            // scenarios that differ only in fading kind.
            FadingSampler::Constant(g) => {
                let _: f64 = rng.gen();
                *g
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkGeometry {
    pub endpoint_a: Position3D,
    pub endpoint_b: Position3D,
    pub path_loss_exponent: f64,
}

impl LinkGeometry {
    pub fn new(a: Position3D, b: Position3D, path_loss_exponent: f64) -> Self {
        LinkGeometry {
            endpoint_a: a,
            endpoint_b: b,
            path_loss_exponent,
        }
    }

    pub fn distance(&self) -> f64 {
        self.endpoint_a.distance(&self.endpoint_b)
    }
}

/// Large-scale gain `D^{-α}`.
pub fn path_gain(geometry: &LinkGeometry) -> Result<f64> {
    let LinkGeometry {
        endpoint_a: a,
        endpoint_b: b,
        path_loss_exponent: exp,
    } = *geometry;
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::param("link endpoints must be finite"));
    }
    if !(exp.is_finite() && exp >= 0.0) {
        return Err(Error::param(format!(
            "path-loss exponent must be finite and >= 0, got {exp}"
        )));
    }
    let d = a.distance(&b);
    if d <= 0.0 {
        return Err(Error::DegenerateGeometry {
            x: a.x,
            y: a.y,
            z: a.z,
        });
    }
    Ok(d.powf(-exp))
}

pub fn alpha_mu_sample<R: Rng + ?Sized>(params: &AlphaMuParams, rng: &mut R) -> f64 {
    params.sample(rng)
}

pub fn alpha_mu_cdf(params: &AlphaMuParams, gamma: f64) -> f64 {
    params.cdf(gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(a: f64, m: f64, g: f64) -> AlphaMuParams {
        AlphaMuParams::new(a, m, g).unwrap()
    }

    #[test]
    fn unit_distance_is_unit_gain() {
        for exp in [0.0, 2.0, 3.7] {
            let g = LinkGeometry::new(Position3D::new(0., 0., 0.), Position3D::new(1., 0., 0.), exp);
            assert_abs_diff_eq!(path_gain(&g).unwrap(), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn two_metres_square_law() {
        let g = LinkGeometry::new(Position3D::new(0., 0., 0.), Position3D::new(0., 2., 0.), 2.0);
        assert_abs_diff_eq!(path_gain(&g).unwrap(), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn node_to_warden_geometry() {
        let node = Position3D::new(3., 8., 0.);
        let warden = Position3D::new(3., 14., 4.);
        for exp in [2.0, 3.0] {
            let g = LinkGeometry::new(node, warden, exp);
            assert_abs_diff_eq!(g.distance(), 52f64.sqrt(), epsilon = 1e-12);
            assert_abs_diff_eq!(path_gain(&g).unwrap(), 52f64.powf(-exp / 2.0), epsilon = 1e-15);
        }
    }

    #[test]
    fn coincident_endpoints_rejected() {
        let a = Position3D::new(1., 2., 3.);
        let err = path_gain(&LinkGeometry::new(a, a, 2.0)).unwrap_err();
        assert!(matches!(err, Error::DegenerateGeometry { .. }));
    }

    #[test]
    fn negative_exponent_rejected() {
        let g = LinkGeometry::new(Position3D::new(0., 0., 0.), Position3D::new(1., 1., 0.), -1.0);
        assert!(path_gain(&g).is_err());
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(AlphaMuParams::new(0.0, 1.0, 1.0).is_err());
        assert!(AlphaMuParams::new(2.0, -1.0, 1.0).is_err());
        assert!(AlphaMuParams::new(2.0, 1.0, 0.0).is_err());
        assert!(AlphaMuParams::new(f64::NAN, 1.0, 1.0).is_err());
    }

    #[test]
    fn exponential_special_case() {
        let e = p(2.0, 1.0, 1.0);
        assert_abs_diff_eq!(e.beta(), 1.0, epsilon = 1e-12);
        assert_eq!(e.cdf(0.0), 0.0);
        assert_abs_diff_eq!(e.cdf(std::f64::consts::LN_2), 0.5, epsilon = 1e-12);
        for g in [0.1, 1.0, 3.0, 10.0] {
            assert_abs_diff_eq!(e.cdf(g), 1.0 - (-g).exp(), epsilon = 1e-12);
        }
    }

    #[test]
    fn rayleigh_sample_mean() {
        let e = p(2.0, 1.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mean = (0..n).map(|_| e.sample(&mut rng)).sum::<f64>() / n as f64;
        // Exponential(1): σ = 1.
        assert!((mean - 1.0).abs() < 3.0 / (n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn sampler_is_deterministic_for_seed() {
        let q = p(3.0, 0.5, 2.0);
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..16).map(|_| q.sample(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(5), draw(5));
        assert_ne!(draw(5), draw(6));
    }

    /// Mean of the density by quadrature in the `W` variable:
    /// `E[Υ] = β E[W^{2/α}] = β Γ(μ+2/α)/Γ(μ)`, evaluated numerically on a
    /// fine grid of the Gamma(μ,1) density.
    fn quadrature_mean(q: &AlphaMuParams) -> f64 {
        let beta = q.beta();
        let lg = ln_gamma(q.mu);
        let n = 400_000;
        let upper = 80.0 + 20.0 * q.mu;
        let h = upper / n as f64;
        let mut acc = 0.0;
        for k in 0..n {
            let w = (k as f64 + 0.5) * h;
            let dens = ((q.mu - 1.0) * w.ln() - w - lg).exp();
            acc += beta * w.powf(2.0 / q.alpha) * dens * h;
        }
        acc
    }

    #[test]
    fn quadrature_mean_matches_mean_power() {
        for q in [p(2.0, 1.0, 1.0), p(2.0, 2.0, 0.5), p(1.0, 1.0, 3.0), p(4.0, 2.0, 1.0)] {
            let m = quadrature_mean(&q);
            assert!((m - q.mean_power).abs() < 1e-3 * q.mean_power, "{q:?}: {m}");
        }
    }

    #[test]
    fn constant_fading_still_advances_stream() {
        let mut a = ChaCha8Rng::seed_from_u64(1);
        let mut b = ChaCha8Rng::seed_from_u64(1);
        let c = Fading::Constant { gain: 1.0 }.sampler();
        assert_eq!(c.sample(&mut a), 1.0);
        let _: f64 = b.gen();
        assert_eq!(a.gen::<u64>(), b.gen::<u64>());
    }
}
