//! TOML run configuration.
//!
//! ```toml
//! [channel]
//! a = 12.4231
//! b = 0.1202
//! alpha_los = 2.5
//! alpha_nlos = 3.5
//! m_los = 1
//! m_nlos = 1
//! beta_db = -1.549   # or: beta = 0.7
//! noise = 0.0
//!
//! [[layers]]
//! density = 1e-5
//! altitude = 100.0
//! power = 1.0
//!
//! [simulation]       # optional
//! trials = 100000
//! seed = 1
//! window_radius = 5000.0
//! ```
//!
//! Every numeric field keeps its source span so validation failures can
//! point at the offending line.

use std::ops::Range;
use std::path::Path;

use aerialnet::montecarlo::SimConfig;
use aerialnet::{ChannelParams, LayerSpec, NetworkSpec};
use serde::Deserialize;
use toml::Spanned;

use crate::error::CliError;

type Num = Spanned<f64>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChannel {
    a: Option<Num>,
    b: Option<Num>,
    alpha_los: Num,
    alpha_nlos: Num,
    m_los: Option<Num>,
    m_nlos: Option<Num>,
    beta: Option<Num>,
    beta_db: Option<Num>,
    noise: Option<Num>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLayer {
    density: Num,
    altitude: Num,
    power: Num,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSimulation {
    trials: Option<Spanned<u64>>,
    seed: Option<u64>,
    window_radius: Option<Num>,
    bin_width: Option<Num>,
    tail_compensation: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAnalysis {
    spot_distances: Option<Spanned<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    channel: RawChannel,
    layers: Spanned<Vec<RawLayer>>,
    simulation: Option<RawSimulation>,
    analysis: Option<RawAnalysis>,
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub network: NetworkSpec,
    pub sim: SimConfig,
    /// Serving-link distances for conditional STP spot values; `None` picks
    /// defaults from the layer altitudes.
    pub spot_distances: Option<Vec<f64>>,
    /// Raw file content, hashed into the manifest.
    pub source: String,
}

struct Locator<'a> {
    name: &'a str,
    text: &'a str,
}

impl Locator<'_> {
    fn line(&self, span: Range<usize>) -> usize {
        self.text[..span.start.min(self.text.len())]
            .matches('\n')
            .count()
            + 1
    }

    fn err(&self, span: Range<usize>, msg: impl std::fmt::Display) -> CliError {
        CliError::Config(format!("{}:{}: {msg}", self.name, self.line(span)))
    }
}

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text, &path.display().to_string())
}

/// Parses and validates `text`; `name` prefixes error messages.
pub fn parse(text: &str, name: &str) -> Result<RunConfig, CliError> {
    let loc = Locator { name, text };
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| loc.line(s)).unwrap_or(0);
        CliError::Config(format!("{name}:{line}: {}", e.message()))
    })?;

    let ch = &raw.channel;
    let urban = ChannelParams::urban();
    let shape = |v: &Option<Num>, key: &str| -> Result<u32, CliError> {
        let Some(v) = v else { return Ok(1) };
        let x = *v.get_ref();
        if x.fract() != 0.0 || x < 1.0 || x > u32::MAX as f64 {
            return Err(loc.err(
                v.span(),
                format!("{key} = {x}: Nakagami shape must be a positive integer"),
            ));
        }
        Ok(x as u32)
    };
    let beta = match (&ch.beta, &ch.beta_db) {
        (Some(_), Some(db)) => {
            return Err(loc.err(db.span(), "give either beta or beta_db, not both"));
        }
        (Some(b), None) => *b.get_ref(),
        (None, Some(db)) => 10f64.powf(db.get_ref() / 10.0),
        (None, None) => {
            return Err(CliError::Config(format!(
                "{name}: [channel] needs beta (linear) or beta_db"
            )))
        }
    };
    let channel = ChannelParams {
        a: ch.a.as_ref().map_or(urban.a, |v| *v.get_ref()),
        b: ch.b.as_ref().map_or(urban.b, |v| *v.get_ref()),
        alpha_los: *ch.alpha_los.get_ref(),
        alpha_nlos: *ch.alpha_nlos.get_ref(),
        m_los: shape(&ch.m_los, "m_los")?,
        m_nlos: shape(&ch.m_nlos, "m_nlos")?,
        beta,
        noise: ch.noise.as_ref().map_or(0.0, |v| *v.get_ref()),
        los_override: None,
    };

    // field-level checks first so the message can carry a line number
    let alpha_los = &ch.alpha_los;
    if !(*alpha_los.get_ref() > 2.0) {
        return Err(loc.err(
            alpha_los.span(),
            format!(
                "alpha_los = {}: path-loss exponent must satisfy alpha > 2",
                alpha_los.get_ref()
            ),
        ));
    }
    if !(channel.alpha_nlos >= channel.alpha_los) {
        return Err(loc.err(
            ch.alpha_nlos.span(),
            format!(
                "alpha_nlos = {}: must satisfy alpha_los <= alpha_nlos (and alpha > 2)",
                channel.alpha_nlos
            ),
        ));
    }
    channel
        .validate()
        .map_err(|e| loc.err(ch.alpha_los.span(), e))?;

    let mut layers = Vec::new();
    for (i, l) in raw.layers.get_ref().iter().enumerate() {
        let layer = LayerSpec::new(
            *l.density.get_ref(),
            *l.altitude.get_ref(),
            *l.power.get_ref(),
        );
        for (key, v) in [
            ("density", &l.density),
            ("altitude", &l.altitude),
            ("power", &l.power),
        ] {
            let x = *v.get_ref();
            let ok = match key {
                "power" => x > 0.0,
                _ => x >= 0.0,
            } && x.is_finite();
            if !ok {
                return Err(loc.err(
                    v.span(),
                    format!("layer {}: {key} = {x} is out of range", i + 1),
                ));
            }
        }
        layers.push(layer);
    }
    let network = NetworkSpec { layers, channel };
    network
        .validate()
        .map_err(|e| loc.err(raw.layers.span(), e))?;

    let mut sim = SimConfig::new(100_000, 0);
    if let Some(s) = &raw.simulation {
        if let Some(t) = &s.trials {
            sim.trials = *t.get_ref();
        }
        if let Some(seed) = s.seed {
            sim.seed = seed;
        }
        if let Some(w) = &s.window_radius {
            sim.window_radius = *w.get_ref();
        }
        if let Some(b) = &s.bin_width {
            sim.bin_width = *b.get_ref();
        }
        if let Some(t) = s.tail_compensation {
            sim.tail_compensation = t;
        }
        if let Err(e) = sim.validate_estimate() {
            let span = s.trials.as_ref().map(|t| t.span()).unwrap_or(0..0);
            return Err(loc.err(span, format!("[simulation] {e}")));
        }
    }

    let spot_distances = match raw.analysis.and_then(|a| a.spot_distances) {
        Some(v) => {
            if v.get_ref().iter().any(|y| !(*y > 0.0 && y.is_finite())) {
                return Err(loc.err(v.span(), "spot_distances must be positive"));
            }
            Some(v.into_inner())
        }
        None => None,
    };

    Ok(RunConfig {
        network,
        sim,
        spot_distances,
        source: text.to_string(),
    })
}
