//! Snapshot simulator for a ground receiver at the origin.
//!
//! Each trial draws every layer as a homogeneous PPP on a horizontal disk,
//! classifies each node LoS/NLoS with the elevation-angle probability,
//! draws Nakagami gains, associates to the strongest average received power
//! and tests `SINR > β`. Trial `i` uses its own ChaCha stream `i` under the
//! configured seed, so results do not depend on scheduling.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use serde::{Deserialize, Serialize};

use crate::analysis::exclusion_radius;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::model::{
    fading_distribution, ChannelParams, Environment, LayerSpec, LinkClass, NetworkSpec,
};
use crate::quadrature::{integrate_power_tail, QuadSpec};

pub const MIN_TRIALS: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub trials: u64,
    /// Horizontal radius of the sampling disk, meters.
    pub window_radius: f64,
    pub seed: u64,
    /// Width of conditional histogram bins, meters.
    pub bin_width: f64,
    /// Add the mean interference of the nodes beyond the window to every
    /// trial. Far LoS links decay as `x^-αᴸ` while their LoS probability
    /// levels off at a positive constant, so the truncated tail shrinks
    /// only like `window_radius^(2-αᴸ)`.
    #[serde(default = "default_true")]
    pub tail_compensation: bool,
}

fn default_true() -> bool {
    true
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            trials: 100_000,
            window_radius: 5000.0,
            seed: 0,
            bin_width: 2.0,
            tail_compensation: true,
        }
    }
}

impl SimConfig {
    pub fn new(trials: u64, seed: u64) -> Self {
        Self {
            trials,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::InvalidParameter("trials must be >= 1".into()));
        }
        if !(self.window_radius > 0.0) || !self.window_radius.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "window_radius must be positive, got {}",
                self.window_radius
            )));
        }
        if !(self.bin_width > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "bin_width must be positive, got {}",
                self.bin_width
            )));
        }
        Ok(())
    }

    /// [`validate`](Self::validate) plus the minimum budget for an estimate.
    pub fn validate_estimate(&self) -> Result<()> {
        self.validate()?;
        if self.trials < MIN_TRIALS {
            return Err(Error::InvalidParameter(format!(
                "at least {MIN_TRIALS} trials are required, got {}",
                self.trials
            )));
        }
        Ok(())
    }
}

/// A sampled transmitter as seen from the receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub layer: usize,
    pub env: Environment,
    /// Horizontal distance, meters.
    pub radius: f64,
    /// 3-D link distance, meters.
    pub distance: f64,
    pub gain: f64,
    /// Fading-free received power `P x^-α`.
    pub avg_power: f64,
}

impl Node {
    pub fn class(&self) -> LinkClass {
        LinkClass::new(self.layer, self.env)
    }

    pub fn rx_power(&self) -> f64 {
        self.avg_power * self.gain
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub success: bool,
    pub main_class: Option<LinkClass>,
    pub main_distance: Option<f64>,
    pub sinr: Option<f64>,
}

/// Bernoulli frequency with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: u64,
}

impl Estimate {
    pub fn from_counts(successes: u64, trials: u64) -> Self {
        if trials == 0 {
            return Self {
                mean: 0.0,
                stderr: 0.0,
                trials,
            };
        }
        let mean = successes as f64 / trials as f64;
        Self {
            mean,
            stderr: (mean * (1.0 - mean) / trials as f64).sqrt(),
            trials,
        }
    }

    /// `|mean - value| <= k * stderr`.
    pub fn agrees_with(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.stderr
    }
}

/// Sample mean of a real-valued statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
}

impl MeanEstimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        Self {
            mean,
            stderr: (var / n).sqrt(),
            samples: xs.len() as u64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub stp: Estimate,
    pub empty_windows: u64,
    pub association: BTreeMap<LinkClass, Estimate>,
}

/// RNG for work item `index` under `seed`.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

struct Fading {
    los: Gamma<f64>,
    nlos: Gamma<f64>,
}

impl Fading {
    fn new(channel: &ChannelParams) -> Self {
        Self {
            los: fading_distribution(Environment::Los, channel),
            nlos: fading_distribution(Environment::Nlos, channel),
        }
    }

    fn sample<R: Rng + ?Sized>(&self, env: Environment, rng: &mut R) -> f64 {
        match env {
            Environment::Los => self.los.sample(rng),
            Environment::Nlos => self.nlos.sample(rng),
        }
    }
}

/// Inner radius of ring 1. Ring 0 is the disk `[0, RING_BASE]`, ring
/// `k >= 1` the annulus `[RING_BASE·2^(k-1), RING_BASE·2^k]`.
pub const RING_BASE: f64 = 625.0;

/// Keystream words reserved per ring.
const RING_STRIDE_BITS: u32 = 48;

fn ring_edges(k: u32) -> (f64, f64) {
    if k == 0 {
        (0.0, RING_BASE)
    } else {
        (
            RING_BASE * f64::powi(2.0, k as i32 - 1),
            RING_BASE * f64::powi(2.0, k as i32),
        )
    }
}

#[allow(clippy::too_many_arguments)]
fn sample_ring_into(
    index: usize,
    layer: &LayerSpec,
    channel: &ChannelParams,
    fading: &Fading,
    (inner, outer): (f64, f64),
    window_radius: f64,
    rng: &mut ChaCha8Rng,
    out: &mut Vec<Node>,
) {
    if layer.density == 0.0 {
        return;
    }
    let (r2_in, r2_out) = (inner * inner, outer * outer);
    let mean = layer.density * PI * (r2_out - r2_in);
    let count = Poisson::new(mean)
        .expect("positive Poisson mean")
        .sample(rng) as u64;
    let h2 = layer.altitude * layer.altitude;
    for _ in 0..count {
        let radius = (r2_in + (r2_out - r2_in) * rng.random::<f64>()).sqrt();
        let distance = (radius * radius + h2).sqrt();
        let los = rng.random::<f64>() < channel.los_at(layer.altitude, distance);
        let env = if los {
            Environment::Los
        } else {
            Environment::Nlos
        };
        let gain = fading.sample(env, rng);
        // the outermost ring may straddle the window edge; drop the excess
        if radius > window_radius || distance <= 0.0 {
            continue;
        }
        out.push(Node {
            layer: index,
            env,
            radius,
            distance,
            gain,
            avg_power: layer.power * distance.powf(-channel.alpha(env)),
        });
    }
}

/// Samples the layers selected by `only` (all when `None`) inside the window.
///
/// Nodes are generated ring by ring and every ring reads its own region of
/// the keystream that follows `rng`'s current position, so a larger window
/// keeps every node of a smaller one and only adds outer ones. `rng` itself
/// is not advanced.
fn sample_nodes(
    net: &NetworkSpec,
    only: Option<usize>,
    window_radius: f64,
    rng: &ChaCha8Rng,
) -> Vec<Node> {
    let fading = Fading::new(&net.channel);
    let base = rng.get_word_pos();
    let mut out = Vec::new();
    for k in 0u32.. {
        let edges = ring_edges(k);
        if edges.0 >= window_radius {
            break;
        }
        let mut ring_rng = rng.clone();
        ring_rng.set_word_pos(base + ((k as u128 + 1) << RING_STRIDE_BITS));
        for (i, layer) in net.layers.iter().enumerate() {
            if only.is_none_or(|j| j == i) {
                sample_ring_into(
                    i,
                    layer,
                    &net.channel,
                    &fading,
                    edges,
                    window_radius,
                    &mut ring_rng,
                    &mut out,
                );
            }
        }
    }
    out
}

/// One PPP realization of layer `index` on the disk of `window_radius`.
pub fn sample_layer(
    net: &NetworkSpec,
    index: usize,
    window_radius: f64,
    rng: &ChaCha8Rng,
) -> Vec<Node> {
    sample_nodes(net, Some(index), window_radius, rng)
}

/// One realization of every layer.
pub fn sample_network(net: &NetworkSpec, window_radius: f64, rng: &ChaCha8Rng) -> Vec<Node> {
    sample_nodes(net, None, window_radius, rng)
}

pub fn far_field_interference(net: &NetworkSpec, window_radius: f64) -> Result<f64> {
    let ch = &net.channel;
    let spec = QuadSpec::default().with_rel_tol(1e-10).with_abs_tol(0.0);
    let mut total = 0.0;
    for layer in net.layers.iter().filter(|l| l.density > 0.0) {
        let h = layer.altitude;
        let start = (window_radius * window_radius + h * h).sqrt();
        let r = integrate_power_tail(
            |x| {
                let rho = ch.los_at(h, x);
                x * (rho * x.powf(-ch.alpha_los) + (1.0 - rho) * x.powf(-ch.alpha_nlos))
            },
            start,
            start,
            ch.alpha_los - 1.0,
            &spec,
        )?;
        total += 2.0 * PI * layer.density * layer.power * r.value;
    }
    Ok(total)
}

fn background(net: &NetworkSpec, cfg: &SimConfig) -> Result<f64> {
    if cfg.tail_compensation {
        far_field_interference(net, cfg.window_radius)
    } else {
        Ok(0.0)
    }
}

/// Strongest average power wins; ties go to the lower layer, then the
/// nearer node.
fn beats(a: &Node, b: &Node) -> bool {
    if a.avg_power != b.avg_power {
        return a.avg_power > b.avg_power;
    }
    if a.layer != b.layer {
        return a.layer < b.layer;
    }
    a.distance < b.distance
}

/// Associates and evaluates SINR; `background` is extra interference power
/// added to the noise.
fn evaluate(nodes: &[Node], channel: &ChannelParams, background: f64) -> TrialOutcome {
    let Some((main_idx, main)) =
        nodes
            .iter()
            .enumerate()
            .reduce(|best, cand| if beats(cand.1, best.1) { cand } else { best })
    else {
        return TrialOutcome {
            success: false,
            main_class: None,
            main_distance: None,
            sinr: None,
        };
    };
    let interference: f64 = nodes
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != main_idx)
        .map(|(_, n)| n.rx_power())
        .sum();
    let denom = interference + background + channel.noise;
    let signal = main.rx_power();
    let sinr = if denom > 0.0 {
        signal / denom
    } else {
        f64::INFINITY
    };
    TrialOutcome {
        success: sinr > channel.beta,
        main_class: Some(main.class()),
        main_distance: Some(main.distance),
        sinr: Some(sinr),
    }
}

/// One snapshot: sample all layers, associate, evaluate SINR.
pub fn run_trial(net: &NetworkSpec, cfg: &SimConfig, rng: &ChaCha8Rng) -> Result<TrialOutcome> {
    let bg = background(net, cfg)?;
    Ok(run_trial_with(net, cfg, bg, rng))
}

fn run_trial_with(
    net: &NetworkSpec,
    cfg: &SimConfig,
    background: f64,
    rng: &ChaCha8Rng,
) -> TrialOutcome {
    evaluate(
        &sample_network(net, cfg.window_radius, rng),
        &net.channel,
        background,
    )
}

/// Outcome of trial `index`; identical wherever it is computed.
pub fn trial(net: &NetworkSpec, cfg: &SimConfig, index: u64) -> Result<TrialOutcome> {
    run_trial(net, cfg, &stream_rng(cfg.seed, index))
}

#[derive(Clone)]
struct Tally {
    successes: u64,
    empty: u64,
    per_class: Vec<u64>,
}

impl Tally {
    fn zero(classes: usize) -> Self {
        Self {
            successes: 0,
            empty: 0,
            per_class: vec![0; classes],
        }
    }

    fn merge(mut self, other: Tally) -> Self {
        self.successes += other.successes;
        self.empty += other.empty;
        for (a, b) in self.per_class.iter_mut().zip(other.per_class) {
            *a += b;
        }
        self
    }
}

fn class_index(class: LinkClass) -> usize {
    class.layer * 2
        + match class.env {
            Environment::Los => 0,
            Environment::Nlos => 1,
        }
}

/// STP and association frequencies in a single pass over the trials.
pub fn simulate(net: &NetworkSpec, cfg: &SimConfig, exec: Exec) -> Result<SimSummary> {
    net.validate()?;
    cfg.validate_estimate()?;
    let classes = net.layers.len() * 2;
    let bg = background(net, cfg)?;
    let tally = exec.map_reduce(
        cfg.trials,
        || Tally::zero(classes),
        |i| {
            let out = run_trial_with(net, cfg, bg, &stream_rng(cfg.seed, i));
            let mut t = Tally::zero(classes);
            match out.main_class {
                Some(c) => t.per_class[class_index(c)] = 1,
                None => t.empty = 1,
            }
            t.successes = out.success as u64;
            t
        },
        Tally::merge,
    );
    let association = net
        .classes()
        .map(|c| {
            (
                c,
                Estimate::from_counts(tally.per_class[class_index(c)], cfg.trials),
            )
        })
        .collect();
    Ok(SimSummary {
        stp: Estimate::from_counts(tally.successes, cfg.trials),
        empty_windows: tally.empty,
        association,
    })
}

pub fn estimate_stp(net: &NetworkSpec, cfg: &SimConfig) -> Result<Estimate> {
    Ok(simulate(net, cfg, Exec::default())?.stp)
}

pub fn estimate_association(
    net: &NetworkSpec,
    cfg: &SimConfig,
) -> Result<BTreeMap<LinkClass, Estimate>> {
    Ok(simulate(net, cfg, Exec::default())?.association)
}

/// Every trial outcome, in trial order.
pub fn collect_outcomes(
    net: &NetworkSpec,
    cfg: &SimConfig,
    exec: Exec,
) -> Result<Vec<TrialOutcome>> {
    net.validate()?;
    cfg.validate()?;
    let bg = background(net, cfg)?;
    Ok(exec.map_indexed(cfg.trials as usize, |i| {
        run_trial_with(net, cfg, bg, &stream_rng(cfg.seed, i as u64))
    }))
}

/// Success frequency among trials served by `class` at a distance within
/// `bin_width / 2` of `center`.
pub fn binned_conditional_stp(
    outcomes: &[TrialOutcome],
    class: LinkClass,
    center: f64,
    bin_width: f64,
) -> Estimate {
    let half = 0.5 * bin_width;
    let (hits, n) = outcomes
        .iter()
        .filter(|o| o.main_class == Some(class))
        .filter(|o| o.main_distance.is_some_and(|d| (d - center).abs() <= half))
        .fold((0u64, 0u64), |(h, n), o| (h + o.success as u64, n + 1));
    Estimate::from_counts(hits, n)
}

/// Aggregate in-window interference at the receiver given a serving link
/// of class `main` and length `y`: every layer is sampled and nodes that
/// would have out-powered the serving link are removed.
pub fn sample_interference(
    net: &NetworkSpec,
    main: LinkClass,
    y: f64,
    window_radius: f64,
    rng: &ChaCha8Rng,
) -> f64 {
    sample_network(net, window_radius, rng)
        .iter()
        .filter(|n| n.distance >= exclusion_radius(net, main, n.class(), y))
        .map(Node::rx_power)
        .sum()
}

/// Empirical `E[exp(-s I)]` over `cfg.trials` conditional interference
/// realizations (window tail included when `cfg.tail_compensation`).
pub fn interference_laplace(
    net: &NetworkSpec,
    main: LinkClass,
    y: f64,
    s: f64,
    cfg: &SimConfig,
    exec: Exec,
) -> Result<MeanEstimate> {
    cfg.validate()?;
    let bg = background(net, cfg)?;
    let samples = exec.map_indexed(cfg.trials as usize, |i| {
        let rng = stream_rng(cfg.seed, i as u64);
        (-s * (sample_interference(net, main, y, cfg.window_radius, &rng) + bg)).exp()
    });
    Ok(MeanEstimate::from_samples(&samples))
}

/// Success frequency of a serving link of class `main` and length `y`, with
/// a freshly drawn gain, against conditional interference plus noise.
pub fn conditional_success(
    net: &NetworkSpec,
    main: LinkClass,
    y: f64,
    cfg: &SimConfig,
    exec: Exec,
) -> Result<Estimate> {
    cfg.validate()?;
    let ch = &net.channel;
    let bg = background(net, cfg)?;
    let signal_avg = net.layer(main).power * y.powf(-ch.alpha(main.env));
    let fading = Fading::new(ch);
    let hits = exec.map_reduce(
        cfg.trials,
        || 0u64,
        |i| {
            let mut rng = stream_rng(cfg.seed, i);
            let gain = fading.sample(main.env, &mut rng);
            let interference = sample_interference(net, main, y, cfg.window_radius, &rng);
            (signal_avg * gain > ch.beta * (interference + bg + ch.noise)) as u64
        },
        |a, b| a + b,
    );
    Ok(Estimate::from_counts(hits, cfg.trials))
}
