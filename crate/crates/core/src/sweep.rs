//! Grid evaluation: height and density sweeps, 2-D surfaces, optimal
//! density search and fixed-total-density splits between two layers.
//!
//! Grid points are independent and evaluated through [`Exec`]; results are
//! always stored in grid order (row-major, first axis slowest).

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::Analyzer;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::model::NetworkSpec;
use crate::montecarlo::{simulate, SimConfig};

/// A sweepable network parameter. Layer indices are zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Param {
    Density {
        layer: usize,
    },
    Altitude {
        layer: usize,
    },
    Power {
        layer: usize,
    },
    Beta,
    BetaDb,
    Noise,
    MLos,
    MNlos,
    AlphaLos,
    AlphaNlos,
    /// Fraction `f` of `total` density given to layer 1, `1 - f` to layer 2.
    SplitFraction {
        total: f64,
    },
}

impl Param {
    /// Column name used in CSV output, e.g. `h1`, `lambda2`.
    pub fn column(&self) -> String {
        match self {
            Param::Density { layer } => format!("lambda{}", layer + 1),
            Param::Altitude { layer } => format!("h{}", layer + 1),
            Param::Power { layer } => format!("p{}", layer + 1),
            Param::Beta => "beta".into(),
            Param::BetaDb => "beta_db".into(),
            Param::Noise => "noise".into(),
            Param::MLos => "m_los".into(),
            Param::MNlos => "m_nlos".into(),
            Param::AlphaLos => "alpha_los".into(),
            Param::AlphaNlos => "alpha_nlos".into(),
            Param::SplitFraction { .. } => "fraction".into(),
        }
    }

    /// Checks that the parameter exists in `net`.
    pub fn check(&self, net: &NetworkSpec) -> Result<()> {
        let needed = match *self {
            Param::Density { layer } | Param::Altitude { layer } | Param::Power { layer } => {
                layer + 1
            }
            Param::SplitFraction { .. } => 2,
            _ => 0,
        };
        if net.layers.len() < needed {
            return Err(Error::InvalidParameter(format!(
                "sweep parameter {} needs {needed} layer(s), network has {}",
                self.column(),
                net.layers.len()
            )));
        }
        Ok(())
    }

    /// Writes `value` into `net`. Does not validate the resulting network.
    pub fn apply(&self, net: &mut NetworkSpec, value: f64) -> Result<()> {
        let shape = |v: f64| -> Result<u32> {
            if v.fract() != 0.0 || v < 1.0 || v > u32::MAX as f64 {
                return Err(Error::InvalidParameter(format!(
                    "Nakagami shape must be a positive integer, got {v}"
                )));
            }
            Ok(v as u32)
        };
        let ch = &mut net.channel;
        match *self {
            Param::Density { layer } => layer_mut(net, layer)?.density = value,
            Param::Altitude { layer } => layer_mut(net, layer)?.altitude = value,
            Param::Power { layer } => layer_mut(net, layer)?.power = value,
            Param::Beta => ch.beta = value,
            Param::BetaDb => ch.beta = 10f64.powf(value / 10.0),
            Param::Noise => ch.noise = value,
            Param::MLos => ch.m_los = shape(value)?,
            Param::MNlos => ch.m_nlos = shape(value)?,
            Param::AlphaLos => ch.alpha_los = value,
            Param::AlphaNlos => ch.alpha_nlos = value,
            Param::SplitFraction { total } => {
                if net.layers.len() < 2 {
                    return Err(Error::InvalidParameter(
                        "density split needs at least two layers".into(),
                    ));
                }
                if !(0.0..=1.0).contains(&value) {
                    return Err(Error::InvalidParameter(format!(
                        "split fraction must lie in [0, 1], got {value}"
                    )));
                }
                net.layers[0].density = value * total;
                net.layers[1].density = (1.0 - value) * total;
            }
        }
        Ok(())
    }
}

fn layer_mut(net: &mut NetworkSpec, layer: usize) -> Result<&mut crate::model::LayerSpec> {
    let n = net.layers.len();
    net.layers.get_mut(layer).ok_or_else(|| {
        Error::InvalidParameter(format!("layer {} does not exist ({n} layers)", layer + 1))
    })
}

impl FromStr for Param {
    type Err = Error;

    /// Accepts short names (`h1`, `lambda2`, `p1`, `beta`, `beta_db`, …) and
    /// dotted paths (`layer1.altitude`, `channel.m_los`).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidParameter(format!("unknown sweep parameter '{s}'"));
        let layer_no = |digits: &str| -> Result<usize> {
            let n: usize = digits.parse().map_err(|_| bad())?;
            if n == 0 {
                return Err(Error::InvalidParameter("layers are numbered from 1".into()));
            }
            Ok(n - 1)
        };
        if let Some(rest) = s.strip_prefix("layer") {
            let (num, field) = rest.split_once('.').ok_or_else(bad)?;
            let layer = layer_no(num)?;
            return match field {
                "density" => Ok(Param::Density { layer }),
                "altitude" => Ok(Param::Altitude { layer }),
                "power" => Ok(Param::Power { layer }),
                _ => Err(bad()),
            };
        }
        let name = s.strip_prefix("channel.").unwrap_or(s);
        for (prefix, ctor) in [
            (
                "lambda",
                (|layer| Param::Density { layer }) as fn(usize) -> Param,
            ),
            ("h", |layer| Param::Altitude { layer }),
            ("p", |layer| Param::Power { layer }),
        ] {
            if let Some(num) = name.strip_prefix(prefix) {
                if !num.is_empty() && num.chars().all(|c| c.is_ascii_digit()) {
                    return Ok(ctor(layer_no(num)?));
                }
            }
        }
        match name {
            "beta" => Ok(Param::Beta),
            "beta_db" => Ok(Param::BetaDb),
            "noise" => Ok(Param::Noise),
            "m_los" => Ok(Param::MLos),
            "m_nlos" => Ok(Param::MNlos),
            "alpha_los" => Ok(Param::AlphaLos),
            "alpha_nlos" => Ok(Param::AlphaNlos),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

/// One sweep axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub param: Param,
    pub values: Vec<f64>,
}

impl GridSpec {
    pub fn explicit(param: Param, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "grid needs at least one finite value".into(),
            ));
        }
        Ok(Self { param, values })
    }

    pub fn generated(
        param: Param,
        min: f64,
        max: f64,
        count: usize,
        spacing: Spacing,
    ) -> Result<Self> {
        if count < 2 {
            return Err(Error::InvalidParameter(format!(
                "generated grids need count >= 2, got {count}"
            )));
        }
        if !min.is_finite() || !max.is_finite() {
            return Err(Error::InvalidParameter("grid bounds must be finite".into()));
        }
        let step = |i: usize| i as f64 / (count - 1) as f64;
        let mut values: Vec<f64> = match spacing {
            Spacing::Linear => (0..count).map(|i| min + (max - min) * step(i)).collect(),
            Spacing::Log => {
                if !(min > 0.0 && max > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "log grids need positive bounds, got [{min}, {max}]"
                    )));
                }
                let (lo, hi) = (min.log10(), max.log10());
                (0..count)
                    .map(|i| 10f64.powf(lo + (hi - lo) * step(i)))
                    .collect()
            }
        };
        // pin the ends so `min`/`max` appear verbatim in outputs
        values[0] = min;
        values[count - 1] = max;
        Ok(Self { param, values })
    }

    pub fn linear(param: Param, min: f64, max: f64, count: usize) -> Result<Self> {
        Self::generated(param, min, max, count, Spacing::Linear)
    }

    pub fn log(param: Param, min: f64, max: f64, count: usize) -> Result<Self> {
        Self::generated(param, min, max, count, Spacing::Log)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Index of the largest value, if any value is finite.
    fn argmax(values: &[Option<f64>]) -> Option<usize> {
        values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|v| (i, v)))
            .fold(None, |best: Option<(usize, f64)>, (i, v)| match best {
                Some((_, b)) if b >= v => best,
                _ => Some((i, v)),
            })
            .map(|(i, _)| i)
    }
}

fn parse_number(s: &str) -> Result<f64> {
    let s = s.trim();
    if let Some(exp) = s.strip_prefix("10^") {
        let e: f64 = exp
            .trim_matches(|c| c == '(' || c == ')')
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad number '{s}'")))?;
        return Ok(10f64.powf(e));
    }
    s.parse()
        .map_err(|_| Error::InvalidParameter(format!("bad number '{s}'")))
}

impl FromStr for GridSpec {
    type Err = Error;

    /// `name=min:max:count[:lin|log]` or `name=v1,v2,…`. Numbers may be
    /// written `10^-3.5`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, spec) = s
            .split_once('=')
            .ok_or_else(|| Error::InvalidParameter(format!("grid '{s}' is missing '='")))?;
        let param: Param = name.parse()?;
        if spec.contains(':') {
            let parts: Vec<&str> = spec.split(':').collect();
            if !(3..=4).contains(&parts.len()) {
                return Err(Error::InvalidParameter(format!(
                    "grid '{s}' must look like name=min:max:count[:lin|log]"
                )));
            }
            let min = parse_number(parts[0])?;
            let max = parse_number(parts[1])?;
            let count: usize = parts[2]
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad grid count '{}'", parts[2])))?;
            let spacing = match parts.get(3).map(|p| p.trim()) {
                None | Some("lin") | Some("linear") => Spacing::Linear,
                Some("log") => Spacing::Log,
                Some(other) => {
                    return Err(Error::InvalidParameter(format!(
                        "unknown spacing '{other}'"
                    )))
                }
            };
            GridSpec::generated(param, min, max, count, spacing)
        } else {
            let values = spec
                .split(',')
                .map(parse_number)
                .collect::<Result<Vec<_>>>()?;
            GridSpec::explicit(param, values)
        }
    }
}

/// Which engines a sweep runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Engines {
    pub analytic: bool,
    pub montecarlo: bool,
}

impl Engines {
    pub const ANALYTIC: Engines = Engines {
        analytic: true,
        montecarlo: false,
    };
    pub const BOTH: Engines = Engines {
        analytic: true,
        montecarlo: true,
    };
}

impl FromStr for Engines {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut e = Engines {
            analytic: false,
            montecarlo: false,
        };
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "analytic" => e.analytic = true,
                "montecarlo" | "mc" => e.montecarlo = true,
                other => return Err(Error::InvalidParameter(format!("unknown engine '{other}'"))),
            }
        }
        if !e.analytic && !e.montecarlo {
            return Err(Error::InvalidParameter("no engine selected".into()));
        }
        Ok(e)
    }
}

impl fmt::Display for Engines {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = [(self.analytic, "analytic"), (self.montecarlo, "montecarlo")]
            .into_iter()
            .filter_map(|(on, n)| on.then_some(n))
            .collect();
        f.write_str(&names.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// One value per axis.
    pub coords: Vec<f64>,
    pub engines: Engines,
    pub analytic_stp: Option<f64>,
    pub analytic_error: Option<f64>,
    pub association: Option<BTreeMap<String, f64>>,
    pub mc_mean: Option<f64>,
    pub mc_stderr: Option<f64>,
    pub mc_empty_windows: Option<u64>,
    pub mc_seed: Option<u64>,
    /// Density bound of [`SweepOptions::bound_layer`], when requested.
    pub bound: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub network: NetworkSpec,
    pub sim: Option<SimConfig>,
    pub analyzer: Analyzer,
    pub engines: Engines,
    pub engine_version: String,
    pub timestamp_unix: u64,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axes: Vec<GridSpec>,
    pub points: Vec<SweepPoint>,
    pub metadata: SweepMetadata,
}

/// Options shared by every sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepOptions {
    pub engines: Engines,
    pub sim: Option<SimConfig>,
    pub analyzer: Analyzer,
    pub exec: Exec,
    /// Also store the per-class association table (analytic engine only).
    pub association: bool,
    /// Also store the closed-form density bound of this layer.
    pub bound_layer: Option<usize>,
}

impl SweepOptions {
    pub fn analytic() -> Self {
        Self {
            engines: Engines::ANALYTIC,
            sim: None,
            analyzer: Analyzer::default(),
            exec: Exec::default(),
            association: false,
            bound_layer: None,
        }
    }

    pub fn with_montecarlo(sim: SimConfig) -> Self {
        Self {
            engines: Engines::BOTH,
            sim: Some(sim),
            ..Self::analytic()
        }
    }
}

/// Seed of the Monte Carlo run at grid point `index`.
pub fn point_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer over the pair
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn evaluate_point(
    net: &NetworkSpec,
    axes: &[GridSpec],
    coords: &[f64],
    index: usize,
    opts: &SweepOptions,
) -> SweepPoint {
    let mut point = SweepPoint {
        coords: coords.to_vec(),
        engines: opts.engines,
        analytic_stp: None,
        analytic_error: None,
        association: None,
        mc_mean: None,
        mc_stderr: None,
        mc_empty_windows: None,
        mc_seed: None,
        bound: None,
        error: None,
    };
    let mut net = net.clone();
    let setup = axes
        .iter()
        .zip(coords)
        .try_for_each(|(axis, &v)| axis.param.apply(&mut net, v))
        .and_then(|_| net.validate());
    if let Err(e) = setup {
        point.error = Some(e.to_string());
        return point;
    }
    let mut errors = Vec::new();
    if opts.engines.analytic {
        match opts.analyzer.total_stp(&net) {
            Ok(r) => {
                point.analytic_stp = Some(r.value);
                point.analytic_error = Some(r.error);
            }
            Err(e) => errors.push(format!("analytic: {e}")),
        }
        if opts.association {
            match opts.analyzer.association_probability(&net) {
                Ok(t) => point.association = Some(t.by_label()),
                Err(e) => errors.push(format!("association: {e}")),
            }
        }
    }
    if let Some(layer) = opts.bound_layer {
        match net.layers.get(layer) {
            Some(spec) => match opts.analyzer.density_upper_bound(spec, &net.channel) {
                Ok(b) => point.bound = Some(b),
                Err(e) => errors.push(format!("bound: {e}")),
            },
            None => errors.push(format!("bound: layer {} does not exist", layer + 1)),
        }
    }
    if opts.engines.montecarlo {
        match opts.sim {
            Some(sim) => {
                let sim = SimConfig {
                    seed: point_seed(sim.seed, index as u64),
                    ..sim
                };
                point.mc_seed = Some(sim.seed);
                match simulate(&net, &sim, opts.exec) {
                    Ok(s) => {
                        point.mc_mean = Some(s.stp.mean);
                        point.mc_stderr = Some(s.stp.stderr);
                        point.mc_empty_windows = Some(s.empty_windows);
                    }
                    Err(e) => errors.push(format!("montecarlo: {e}")),
                }
            }
            None => errors.push("montecarlo: no simulation config".into()),
        }
    }
    if !errors.is_empty() {
        point.error = Some(errors.join("; "));
    }
    point
}

/// Evaluates the Cartesian product of `axes` (first axis slowest).
pub fn sweep(net: &NetworkSpec, axes: &[GridSpec], opts: &SweepOptions) -> Result<SweepResult> {
    if axes.is_empty() {
        return Err(Error::InvalidParameter(
            "sweep needs at least one axis".into(),
        ));
    }
    if opts.engines.montecarlo && opts.sim.is_none() {
        return Err(Error::InvalidParameter(
            "Monte Carlo engine requested without a simulation config".into(),
        ));
    }
    for axis in axes {
        axis.param.check(net)?;
    }
    let sizes: Vec<usize> = axes.iter().map(GridSpec::len).collect();
    let total: usize = sizes.iter().product();
    let coords_of = |mut idx: usize| -> Vec<f64> {
        let mut c = vec![0.0; axes.len()];
        for d in (0..axes.len()).rev() {
            c[d] = axes[d].values[idx % sizes[d]];
            idx /= sizes[d];
        }
        c
    };
    let points = opts
        .exec
        .map_indexed(total, |i| evaluate_point(net, axes, &coords_of(i), i, opts));
    Ok(SweepResult {
        axes: axes.to_vec(),
        points,
        metadata: SweepMetadata {
            network: net.clone(),
            sim: opts.sim,
            analyzer: opts.analyzer,
            engines: opts.engines,
            engine_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp_unix: unix_now(),
            seed: opts.sim.map(|s| s.seed),
        },
    })
}

pub fn sweep_1d(net: &NetworkSpec, grid: &GridSpec, opts: &SweepOptions) -> Result<SweepResult> {
    sweep(net, std::slice::from_ref(grid), opts)
}

pub fn sweep_2d(
    net: &NetworkSpec,
    grid_a: &GridSpec,
    grid_b: &GridSpec,
    opts: &SweepOptions,
) -> Result<SweepResult> {
    sweep(net, &[grid_a.clone(), grid_b.clone()], opts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalDensity {
    pub layer: usize,
    pub argmax_density: f64,
    pub max_stp: f64,
    /// Analytic STP at every grid density, in grid order.
    pub stp: Vec<Option<f64>>,
    pub bound: Option<f64>,
    /// `argmax_density <= bound` when the bound is available.
    pub bound_holds: Option<bool>,
    /// The maximum sits on the first or last grid point.
    pub boundary: bool,
    pub warning: Option<String>,
}

/// Grid-search maximizer of the analytic STP over the density of `layer`,
/// alongside the closed-form density bound when it applies.
pub fn optimal_density(
    net: &NetworkSpec,
    layer: usize,
    grid: &[f64],
    analyzer: &Analyzer,
    exec: Exec,
) -> Result<OptimalDensity> {
    if layer >= net.layers.len() {
        return Err(Error::InvalidParameter(format!(
            "layer {} does not exist",
            layer + 1
        )));
    }
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty density grid".into()));
    }
    let stp: Vec<Option<f64>> = exec.map_indexed(grid.len(), |i| {
        let mut n = net.clone();
        n.layers[layer].density = grid[i];
        n.validate().ok()?;
        analyzer.total_stp(&n).ok().map(|r| r.value)
    });
    let best = GridSpec::argmax(&stp)
        .ok_or_else(|| Error::NumericalConsistency("no grid point could be evaluated".into()))?;
    let (bound, warning) = match analyzer.density_upper_bound(&net.layers[layer], &net.channel) {
        Ok(b) => (Some(b), None),
        Err(e) => (None, Some(format!("bound omitted: {e}"))),
    };
    let argmax_density = grid[best];
    Ok(OptimalDensity {
        layer,
        argmax_density,
        max_stp: stp[best].unwrap_or(f64::NAN),
        bound,
        bound_holds: bound.map(|b| argmax_density <= b),
        boundary: best == 0 || best + 1 == grid.len(),
        stp,
        warning,
    })
}

/// Optimal density along the density axis of a finished sweep, one row per
/// value of the other axis (a single row for 1-D sweeps).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayRow {
    pub key: Option<f64>,
    pub argmax_density: f64,
    pub max_stp: f64,
    pub bound: Option<f64>,
    pub bound_holds: Option<bool>,
    pub boundary: bool,
}

pub fn optimal_density_overlay(
    result: &SweepResult,
    analyzer: &Analyzer,
) -> Result<Vec<OverlayRow>> {
    let density_axis = result
        .axes
        .iter()
        .position(|a| matches!(a.param, Param::Density { .. }))
        .ok_or_else(|| Error::InvalidParameter("sweep has no density axis".into()))?;
    let Param::Density { layer } = result.axes[density_axis].param else {
        unreachable!()
    };
    let densities = &result.axes[density_axis].values;
    let other = (result.axes.len() == 2).then(|| 1 - density_axis);
    let keys: Vec<Option<f64>> = match other {
        Some(o) => result.axes[o].values.iter().map(|&v| Some(v)).collect(),
        None => vec![None],
    };
    let mut rows = Vec::with_capacity(keys.len());
    for (ki, key) in keys.iter().enumerate() {
        let stp: Vec<Option<f64>> = (0..densities.len())
            .map(|di| {
                let idx = match other {
                    None => di,
                    Some(0) => ki * densities.len() + di,
                    Some(_) => di * keys.len() + ki,
                };
                result.points[idx].analytic_stp
            })
            .collect();
        let Some(best) = GridSpec::argmax(&stp) else {
            continue;
        };
        let mut net = result.metadata.network.clone();
        if let (Some(o), Some(v)) = (other, key) {
            result.axes[o].param.apply(&mut net, *v)?;
        }
        let bound = net
            .layers
            .get(layer)
            .and_then(|l| analyzer.density_upper_bound(l, &net.channel).ok());
        rows.push(OverlayRow {
            key: *key,
            argmax_density: densities[best],
            max_stp: stp[best].unwrap_or(f64::NAN),
            bound,
            bound_holds: bound.map(|b| densities[best] <= b),
            boundary: best == 0 || best + 1 == densities.len(),
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoDensitySweep {
    pub total: f64,
    pub argmax_fraction: f64,
    pub max_stp: f64,
    pub result: SweepResult,
}

/// STP along `λ₁ = f·total`, `λ₂ = (1 - f)·total` for each fraction `f`.
pub fn iso_total_density(
    net: &NetworkSpec,
    total: f64,
    fractions: &[f64],
    opts: &SweepOptions,
) -> Result<IsoDensitySweep> {
    if !(total > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "total density must be > 0, got {total}"
        )));
    }
    if net.layers.len() < 2 {
        return Err(Error::InvalidParameter(
            "density split needs at least two layers".into(),
        ));
    }
    let grid = GridSpec::explicit(Param::SplitFraction { total }, fractions.to_vec())?;
    let result = sweep_1d(net, &grid, opts)?;
    let stp: Vec<Option<f64>> = result
        .points
        .iter()
        .map(|p| p.analytic_stp.or(p.mc_mean))
        .collect();
    let best = GridSpec::argmax(&stp)
        .ok_or_else(|| Error::NumericalConsistency("no split could be evaluated".into()))?;
    Ok(IsoDensitySweep {
        total,
        argmax_fraction: fractions[best],
        max_stp: stp[best].unwrap_or(f64::NAN),
        result,
    })
}

/// Shortest round-trip representation that always has a decimal point.
pub fn format_float(v: f64) -> String {
    let s = format!("{v}");
    if v.is_finite() && !s.contains('.') {
        s + ".0"
    } else {
        s
    }
}

impl SweepResult {
    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = self.axes.iter().map(|a| a.param.column()).collect();
        h.extend(
            [
                "stp_analytic",
                "stp_mc",
                "stp_mc_stderr",
                "mc_empty_windows",
                "bound",
                "error",
            ]
            .map(String::from),
        );
        h
    }

    /// One row per grid point; absent values are empty cells.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header())?;
        let opt = |v: Option<f64>| v.map(format_float).unwrap_or_default();
        for p in &self.points {
            let mut row: Vec<String> = p.coords.iter().map(|&c| format_float(c)).collect();
            row.push(opt(p.analytic_stp));
            row.push(opt(p.mc_mean));
            row.push(opt(p.mc_stderr));
            row.push(
                p.mc_empty_windows
                    .map(|n| n.to_string())
                    .unwrap_or_default(),
            );
            row.push(opt(p.bound));
            row.push(p.error.clone().unwrap_or_default());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }

    pub fn read_json<R: Read>(input: R) -> Result<Self> {
        Ok(serde_json::from_reader(input)?)
    }

    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| p.error.is_some()).count()
    }

    /// Analytic STP column, in grid order.
    pub fn analytic_column(&self) -> Vec<Option<f64>> {
        self.points.iter().map(|p| p.analytic_stp).collect()
    }
}
