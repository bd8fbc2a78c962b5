//! Network description and pointwise channel functions.
//!
//! All quantities are linear (watts, meters, nodes per square meter). The
//! LoS probability follows the elevation-angle sigmoid with the angle in
//! degrees, which is the parameterization the urban constants
//! `a = 12.4231`, `b = 0.1202` were fitted for.

use std::f64::consts::PI;
use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Propagation environment of a single air-to-ground link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Environment {
    Los,
    Nlos,
}

impl Environment {
    pub const ALL: [Environment; 2] = [Environment::Los, Environment::Nlos];

    pub fn as_str(self) -> &'static str {
        match self {
            Environment::Los => "los",
            Environment::Nlos => "nlos",
        }
    }
}

impl fmt::Display for Environment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One layer of transmitters at a common altitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    /// Nodes per square meter.
    pub density: f64,
    /// Meters above ground; 0 for a terrestrial layer.
    pub altitude: f64,
    /// Transmit power in watts.
    pub power: f64,
}

impl LayerSpec {
    pub fn new(density: f64, altitude: f64, power: f64) -> Self {
        Self {
            density,
            altitude,
            power,
        }
    }

    pub fn is_terrestrial(&self) -> bool {
        self.altitude == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.density >= 0.0 && self.density.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "layer density must be finite and >= 0, got {}",
                self.density
            )));
        }
        if !(self.altitude >= 0.0 && self.altitude.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "layer altitude must be finite and >= 0, got {}",
                self.altitude
            )));
        }
        if !(self.power > 0.0 && self.power.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "layer power must be finite and > 0, got {}",
                self.power
            )));
        }
        Ok(())
    }
}

/// Environment and receiver constants shared by every layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub a: f64,
    /// Per degree.
    pub b: f64,
    pub alpha_los: f64,
    pub alpha_nlos: f64,
    pub m_los: u32,
    pub m_nlos: u32,
    /// Target SINR, linear.
    pub beta: f64,
    /// Noise power in watts.
    pub noise: f64,
    /// Replaces the elevation-angle LoS model by a constant probability.
    /// `Some(1.0)` gives the all-LoS reference channel.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub los_override: Option<f64>,
}

impl ChannelParams {
    /// Urban constants with the pathloss and fading values used throughout
    /// the numerical evaluation: α = (2.5, 3.5), Rayleigh, β = 0.7, no noise.
    pub fn urban() -> Self {
        Self {
            a: 12.4231,
            b: 0.1202,
            alpha_los: 2.5,
            alpha_nlos: 3.5,
            m_los: 1,
            m_nlos: 1,
            beta: 0.7,
            noise: 0.0,
            los_override: None,
        }
    }

    pub fn alpha(&self, env: Environment) -> f64 {
        match env {
            Environment::Los => self.alpha_los,
            Environment::Nlos => self.alpha_nlos,
        }
    }

    pub fn m(&self, env: Environment) -> u32 {
        match env {
            Environment::Los => self.m_los,
            Environment::Nlos => self.m_nlos,
        }
    }

    pub fn is_rayleigh(&self) -> bool {
        self.m_los == 1 && self.m_nlos == 1
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.a > 0.0 && self.a.is_finite()) || !(self.b > 0.0 && self.b.is_finite()) {
            return bad(format!(
                "environment parameters a and b must be positive, got a={}, b={}",
                self.a, self.b
            ));
        }
        if !(self.alpha_los > 2.0) {
            return bad(format!(
                "alpha_los must be > 2 for the interference integrals to converge, got {}",
                self.alpha_los
            ));
        }
        if !(self.alpha_los <= self.alpha_nlos && self.alpha_nlos <= 6.0) {
            return bad(format!(
                "pathloss exponents must satisfy alpha_los <= alpha_nlos <= 6, got {} and {}",
                self.alpha_los, self.alpha_nlos
            ));
        }
        if self.m_los < 1 || self.m_nlos < 1 {
            return bad("Nakagami shapes must be integers >= 1".into());
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad(format!("beta must be > 0, got {}", self.beta));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return bad(format!("noise must be >= 0, got {}", self.noise));
        }
        if let Some(p) = self.los_override {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("los_override must lie in [0, 1], got {p}"));
            }
        }
        Ok(())
    }

    /// LoS probability for an altitude and link distance with no domain
    /// checks. Requires `x >= altitude` and `x > 0`.
    #[inline]
    pub(crate) fn los_at(&self, altitude: f64, x: f64) -> f64 {
        if let Some(p) = self.los_override {
            return p;
        }
        let ratio = (altitude / x).min(1.0);
        let theta = ratio.asin().to_degrees();
        1.0 / (1.0 + self.a * (-self.b * (theta - self.a)).exp())
    }

    #[inline]
    pub(crate) fn env_at(&self, env: Environment, altitude: f64, x: f64) -> f64 {
        let p = self.los_at(altitude, x);
        match env {
            Environment::Los => p,
            Environment::Nlos => 1.0 - p,
        }
    }
}

/// A complete multi-layer network instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub layers: Vec<LayerSpec>,
    pub channel: ChannelParams,
}

impl NetworkSpec {
    pub fn new(layers: Vec<LayerSpec>, channel: ChannelParams) -> Result<Self> {
        let net = Self { layers, channel };
        net.validate()?;
        Ok(net)
    }

    /// Single aerial layer with unit power over the urban channel.
    pub fn single_layer(density: f64, altitude: f64, channel: ChannelParams) -> Self {
        Self {
            layers: vec![LayerSpec::new(density, altitude, 1.0)],
            channel,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        if self.layers.is_empty() {
            return Err(Error::InvalidParameter("network has no layers".into()));
        }
        for (i, l) in self.layers.iter().enumerate() {
            l.validate()
                .map_err(|e| Error::InvalidParameter(format!("layer {}: {e}", i + 1)))?;
        }
        if !self.layers.iter().any(|l| l.density > 0.0) {
            return Err(Error::InvalidParameter(
                "at least one layer must have positive density".into(),
            ));
        }
        Ok(())
    }

    /// Every (layer, environment) pair in canonical order.
    pub fn classes(&self) -> impl Iterator<Item = LinkClass> + '_ {
        (0..self.layers.len()).flat_map(|layer| {
            Environment::ALL
                .into_iter()
                .map(move |env| LinkClass { layer, env })
        })
    }

    pub fn layer(&self, class: LinkClass) -> &LayerSpec {
        &self.layers[class.layer]
    }

    pub fn check_class(&self, class: LinkClass) -> Result<()> {
        if class.layer >= self.layers.len() {
            return Err(Error::InvalidParameter(format!(
                "layer index {} out of range for {} layers",
                class.layer,
                self.layers.len()
            )));
        }
        Ok(())
    }
}

/// A (layer, environment) pair. `layer` is a zero-based index into
/// [`NetworkSpec::layers`]; labels and file formats use one-based numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LinkClass {
    pub layer: usize,
    pub env: Environment,
}

impl LinkClass {
    pub fn new(layer: usize, env: Environment) -> Self {
        Self { layer, env }
    }

    /// Stable label such as `layer1_los`.
    pub fn label(&self) -> String {
        format!("layer{}_{}", self.layer + 1, self.env)
    }
}

impl fmt::Display for LinkClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

fn check_distance(layer: &LayerSpec, x: f64) -> Result<()> {
    if !(x > 0.0) || x < layer.altitude || !x.is_finite() {
        return Err(Error::Domain(format!(
            "link distance {x} must be positive, finite and >= altitude {}",
            layer.altitude
        )));
    }
    Ok(())
}

/// LoS probability of a link of length `x` to a node of `layer`.
pub fn los_probability(layer: &LayerSpec, channel: &ChannelParams, x: f64) -> Result<f64> {
    check_distance(layer, x)?;
    Ok(channel.los_at(layer.altitude, x))
}

pub fn env_probability(
    layer: &LayerSpec,
    channel: &ChannelParams,
    env: Environment,
    x: f64,
) -> Result<f64> {
    check_distance(layer, x)?;
    Ok(channel.env_at(env, layer.altitude, x))
}

/// Intensity per unit link distance of the `env`-thinned layer seen from a
/// ground receiver, `2π x λ ρ(x)`. Zero below the layer altitude.
pub fn radial_intensity(
    layer: &LayerSpec,
    channel: &ChannelParams,
    env: Environment,
    x: f64,
) -> f64 {
    if x < layer.altitude || x <= 0.0 || layer.density == 0.0 {
        return 0.0;
    }
    2.0 * PI * x * layer.density * channel.env_at(env, layer.altitude, x)
}

/// Fading-averaged received power `P x^-α`.
pub fn avg_rx_power(power: f64, x: f64, alpha: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("distance must be positive, got {x}")));
    }
    Ok(power * x.powf(-alpha))
}

/// Builds the unit-mean Gamma(m, 1/m) power-gain distribution.
pub fn fading_distribution(env: Environment, channel: &ChannelParams) -> Gamma<f64> {
    let m = channel.m(env) as f64;
    Gamma::new(m, 1.0 / m).expect("shape and scale are positive")
}

/// One Nakagami power gain draw for a link in `env`.
pub fn sample_fading<R: Rng + ?Sized>(
    env: Environment,
    channel: &ChannelParams,
    rng: &mut R,
) -> f64 {
    fading_distribution(env, channel).sample(rng)
}
