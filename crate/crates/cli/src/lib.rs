//! Command-line front end: `analyze`, `simulate`, `sweep` and `bound`.
//!
//! Exit codes: 0 success, 2 config or flag error, 3 numerical failure,
//! 4 unsupported case.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod manifest;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use aerialnet::analysis::Analyzer;
use aerialnet::exec::with_threads;
use aerialnet::montecarlo::{simulate, SimConfig};
use aerialnet::sweep::{
    format_float, iso_total_density, optimal_density_overlay, sweep, Engines, GridSpec, Param,
    SweepOptions,
};
use aerialnet::{Exec, NetworkSpec};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

pub use crate::config::RunConfig;
pub use crate::error::CliError;
pub use crate::manifest::RunManifest;

#[derive(Debug, Parser)]
#[command(
    name = "aerialnet",
    version,
    about = "Success probability of multi-layer UAV networks"
)]
pub struct Cli {
    /// Cap on worker threads. Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,

    /// Output file. Results go to stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analytic STP, association table and conditional STP spot values.
    Analyze {
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo STP estimate.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Grid sweep written as CSV plus a JSON result and manifest.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// `name=min:max:count[:lin|log]` or `name=v1,v2,...`; give once or twice.
        #[arg(long = "grid")]
        grids: Vec<String>,
        /// Comma-separated list of `analytic`, `montecarlo`.
        #[arg(long, default_value = "analytic")]
        engines: String,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Store per-class association probabilities in the JSON result.
        #[arg(long)]
        association: bool,
        /// Also write `<stem>_optimal.csv`: STP-maximizing density along the
        /// density axis plus the closed-form bound.
        #[arg(long)]
        optimal_density: bool,
        /// Total density for a two-layer split sweep; repeatable. Replaces `--grid`.
        #[arg(long = "iso-total")]
        iso_total: Vec<String>,
        /// Number of split fractions in [0, 1] for `--iso-total`.
        #[arg(long, default_value_t = 21)]
        fractions: usize,
    },
    /// Density upper bound per aerial layer and their sum.
    Bound {
        #[command(flatten)]
        common: Common,
    },
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let command_line: Vec<String> = argv
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    match run(cli, &command_line) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli, command_line: &[String]) -> Result<(), CliError> {
    let threads = cli.threads;
    if threads == Some(0) {
        return Err(CliError::Config("--threads must be at least 1".into()));
    }
    with_threads(threads, || dispatch(cli.command, threads, command_line))
}

fn dispatch(command: Command, threads: Option<usize>, argv: &[String]) -> Result<(), CliError> {
    let started = Instant::now();
    let common = match &command {
        Command::Analyze { common }
        | Command::Simulate { common, .. }
        | Command::Sweep { common, .. }
        | Command::Bound { common } => common,
    };
    let cfg = config::load(&common.config)?;
    let mut manifest = RunManifest::new(argv, &common.config, &cfg.source);
    manifest.threads = threads;
    let outputs = match &command {
        Command::Analyze { common } => emit_json(&analyze(&cfg)?, common.output.as_deref())?,
        Command::Simulate {
            common,
            trials,
            seed,
        } => {
            let sim = sim_config(&cfg, *trials, *seed)?;
            manifest.seed = Some(sim.seed);
            manifest.trials = Some(sim.trials);
            emit_json(
                &simulate_json(&cfg.network, &sim)?,
                common.output.as_deref(),
            )?
        }
        Command::Sweep {
            common,
            grids,
            engines,
            trials,
            seed,
            association,
            optimal_density,
            iso_total,
            fractions,
        } => {
            let output = common
                .output
                .as_deref()
                .ok_or_else(|| CliError::Config("sweep needs --output <file.csv>".into()))?;
            if output.extension().is_some_and(|e| e == "json") {
                return Err(CliError::Config(
                    "sweep --output is the CSV file; the JSON result is written next to it".into(),
                ));
            }
            let engines: Engines = engines
                .parse()
                .map_err(|e| CliError::Config(format!("--engines: {e}")))?;
            let mut opts = SweepOptions::analytic();
            opts.engines = engines;
            opts.association = *association;
            if engines.montecarlo {
                let sim = sim_config(&cfg, *trials, *seed)?;
                manifest.seed = Some(sim.seed);
                manifest.trials = Some(sim.trials);
                opts.sim = Some(sim);
            }
            if iso_total.is_empty() {
                run_sweep(&cfg.network, grids, &opts, *optimal_density, output)?
            } else {
                if !grids.is_empty() {
                    return Err(CliError::Config(
                        "--iso-total and --grid are exclusive".into(),
                    ));
                }
                run_iso(&cfg.network, iso_total, *fractions, &opts, output)?
            }
        }
        Command::Bound { common } => emit_json(&bound(&cfg.network)?, common.output.as_deref())?,
    };
    if let Some(primary) = outputs.first() {
        let path = RunManifest::path_for(primary);
        manifest.finish(&outputs, started.elapsed()).write(&path)?;
    }
    Ok(())
}

fn sim_config(
    cfg: &RunConfig,
    trials: Option<u64>,
    seed: Option<u64>,
) -> Result<SimConfig, CliError> {
    let sim = SimConfig {
        trials: trials.unwrap_or(cfg.sim.trials),
        seed: seed.unwrap_or(cfg.sim.seed),
        ..cfg.sim
    };
    sim.validate_estimate()
        .map_err(|e| CliError::Config(format!("--trials: {e}")))?;
    Ok(sim)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))
}

/// Writes pretty JSON to `output` or stdout; returns the files written.
fn emit_json<T: Serialize>(value: &T, output: Option<&Path>) -> Result<Vec<PathBuf>, CliError> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match output {
        Some(path) => {
            create(path)?.write_all(text.as_bytes())?;
            Ok(vec![path.to_path_buf()])
        }
        None => {
            print!("{text}");
            Ok(Vec::new())
        }
    }
}

/// Serving-link distances for the spot table of a layer at `altitude`.
fn default_spots(altitude: f64) -> Vec<f64> {
    if altitude > 0.0 {
        vec![1.25 * altitude, 2.0 * altitude, 4.0 * altitude]
    } else {
        vec![50.0, 100.0, 200.0]
    }
}

pub fn analyze(cfg: &RunConfig) -> Result<Value, CliError> {
    let an = Analyzer::default();
    let net = &cfg.network;
    let stp = an.total_stp(net)?;
    let assoc = an.association_probability(net)?;
    let mut conditional = BTreeMap::new();
    for class in net.classes() {
        let layer = net.layer(class);
        let spots = cfg
            .spot_distances
            .clone()
            .unwrap_or_else(|| default_spots(layer.altitude));
        let mut rows = Vec::new();
        for y in spots.into_iter().filter(|&y| y >= layer.altitude) {
            rows.push(json!({ "y": y, "stp": an.conditional_stp(net, class, y)? }));
        }
        conditional.insert(class.label(), rows);
    }
    let per_class: BTreeMap<String, f64> =
        stp.per_class.iter().map(|(c, v)| (c.label(), *v)).collect();
    Ok(json!({
        "stp": stp.value,
        "stp_error": stp.error,
        "per_class_stp": per_class,
        "association": assoc.by_label(),
        "association_total": assoc.total(),
        "conditional_stp": conditional,
        "params": net,
    }))
}

pub fn simulate_json(net: &NetworkSpec, sim: &SimConfig) -> Result<Value, CliError> {
    let s = simulate(net, sim, Exec::default())?;
    let association: BTreeMap<String, Value> = s
        .association
        .iter()
        .map(|(c, e)| (c.label(), json!({ "mean": e.mean, "stderr": e.stderr })))
        .collect();
    Ok(json!({
        "mean": s.stp.mean,
        "stderr": s.stp.stderr,
        "trials": s.stp.trials,
        "empty_windows": s.empty_windows,
        "association": association,
        "simulation": sim,
        "params": net,
    }))
}

pub fn bound(net: &NetworkSpec) -> Result<Value, CliError> {
    let an = Analyzer::default();
    if !net.channel.is_rayleigh() {
        return Err(CliError::Unsupported(format!(
            "the density bound needs m_los = m_nlos = 1, got m_los = {}, m_nlos = {}",
            net.channel.m_los, net.channel.m_nlos
        )));
    }
    let mut layers = Vec::new();
    let mut total = 0.0;
    for (i, layer) in net.layers.iter().enumerate() {
        if layer.is_terrestrial() {
            continue;
        }
        let b = an.density_upper_bound(layer, &net.channel)?;
        total += b;
        layers.push(json!({ "layer": i + 1, "altitude": layer.altitude, "bound": b }));
    }
    if layers.is_empty() {
        return Err(CliError::Unsupported("no aerial layer to bound".into()));
    }
    Ok(json!({ "layers": layers, "total_bound": total }))
}

fn warn_failures(failures: usize) {
    if failures > 0 {
        eprintln!("warning: {failures} grid point(s) failed; see the error column");
    }
}

fn run_sweep(
    net: &NetworkSpec,
    grids: &[String],
    opts: &SweepOptions,
    optimal: bool,
    output: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    if !(1..=2).contains(&grids.len()) {
        return Err(CliError::Config(format!(
            "sweep takes one or two --grid specs, got {}",
            grids.len()
        )));
    }
    let axes = grids
        .iter()
        .map(|g| {
            g.parse::<GridSpec>()
                .map_err(|e| CliError::Config(format!("--grid {g}: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut opts = *opts;
    opts.bound_layer = axes.iter().find_map(|a| match a.param {
        Param::Density { layer } if net.channel.is_rayleigh() => Some(layer),
        _ => None,
    });
    let result = sweep(net, &axes, &opts)?;
    let mut outputs = vec![output.to_path_buf()];
    result.write_csv(create(output)?)?;
    let json_path = manifest::sibling(output, "", "json");
    result.write_json(create(&json_path)?)?;
    outputs.push(json_path);
    if optimal {
        let rows = optimal_density_overlay(&result, &opts.analyzer)?;
        let path = manifest::sibling(output, "_optimal", "csv");
        let key = axes
            .iter()
            .find(|a| !matches!(a.param, Param::Density { .. }))
            .map(|a| a.param.column());
        let mut w = csv::Writer::from_writer(create(&path)?);
        let mut header: Vec<String> = key.iter().cloned().collect();
        header.extend(
            [
                "argmax_density",
                "max_stp",
                "bound",
                "bound_holds",
                "boundary",
            ]
            .map(String::from),
        );
        w.write_record(&header).map_err(csv_err)?;
        for r in rows {
            let mut rec: Vec<String> = Vec::new();
            if key.is_some() {
                rec.push(r.key.map(format_float).unwrap_or_default());
            }
            rec.push(format_float(r.argmax_density));
            rec.push(format_float(r.max_stp));
            rec.push(r.bound.map(format_float).unwrap_or_default());
            rec.push(r.bound_holds.map(|b| b.to_string()).unwrap_or_default());
            rec.push(r.boundary.to_string());
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        outputs.push(path);
    }
    warn_failures(result.failures());
    Ok(outputs)
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

fn parse_density(s: &str) -> Result<f64, CliError> {
    let bad = || CliError::Config(format!("--iso-total: bad density '{s}'"));
    let v = match s.trim().strip_prefix("10^") {
        Some(e) => 10f64.powf(
            e.trim_matches(|c| c == '(' || c == ')')
                .parse()
                .map_err(|_| bad())?,
        ),
        None => s.trim().parse().map_err(|_| bad())?,
    };
    if !(v > 0.0 && v.is_finite()) {
        return Err(bad());
    }
    Ok(v)
}

fn run_iso(
    net: &NetworkSpec,
    totals: &[String],
    count: usize,
    opts: &SweepOptions,
    output: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    if count < 2 {
        return Err(CliError::Config("--fractions must be at least 2".into()));
    }
    let fractions: Vec<f64> = (0..count).map(|i| i as f64 / (count - 1) as f64).collect();
    let mut runs = Vec::new();
    for t in totals {
        let total = parse_density(t)?;
        runs.push(iso_total_density(net, total, &fractions, opts)?);
    }

    let mut w = csv::Writer::from_writer(create(output)?);
    w.write_record([
        "total",
        "fraction",
        "lambda1",
        "lambda2",
        "stp_analytic",
        "stp_mc",
        "stp_mc_stderr",
        "error",
    ])
    .map_err(csv_err)?;
    let opt = |v: Option<f64>| v.map(format_float).unwrap_or_default();
    let mut failures = 0;
    for run in &runs {
        failures += run.result.failures();
        for p in &run.result.points {
            let f = p.coords[0];
            w.write_record([
                format_float(run.total),
                format_float(f),
                format_float(f * run.total),
                format_float((1.0 - f) * run.total),
                opt(p.analytic_stp),
                opt(p.mc_mean),
                opt(p.mc_stderr),
                p.error.clone().unwrap_or_default(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;

    let argmax_path = manifest::sibling(output, "_argmax", "csv");
    let mut w = csv::Writer::from_writer(create(&argmax_path)?);
    w.write_record(["total", "argmax_fraction", "max_stp"])
        .map_err(csv_err)?;
    for run in &runs {
        w.write_record([
            format_float(run.total),
            format_float(run.argmax_fraction),
            format_float(run.max_stp),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;

    let json_path = manifest::sibling(output, "", "json");
    serde_json::to_writer_pretty(create(&json_path)?, &runs)?;
    warn_failures(failures);
    Ok(vec![output.to_path_buf(), argmax_path, json_path])
}
