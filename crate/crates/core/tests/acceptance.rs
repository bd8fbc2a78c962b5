//! Acceptance suite. Prints one `PASS`/`FAIL` line per criterion with the
//! measured quantities and exits non-zero if any criterion fails.
//!
//! Run alone with `cargo test -p aerialnet --test acceptance`.

use std::time::Instant;

use aerialnet::analysis::{threshold_s, Analyzer};
use aerialnet::montecarlo::{
    binned_conditional_stp, collect_outcomes, interference_laplace, simulate, SimConfig, SimSummary,
};
use aerialnet::sweep::{
    iso_total_density, optimal_density, sweep_1d, GridSpec, Param, SweepOptions,
};
use aerialnet::{ChannelParams, Environment, Exec, LayerSpec, LinkClass, NetworkSpec, Result};

const SEED: u64 = 20_240_601;
const TRIALS: u64 = 100_000;
const FIG2_HEIGHTS: [f64; 4] = [50.0, 100.0, 200.0, 400.0];

fn fig2(h: f64) -> NetworkSpec {
    NetworkSpec::new(vec![LayerSpec::new(1e-5, h, 1.0)], ChannelParams::urban()).unwrap()
}

fn two_layer(l1: f64, l2: f64) -> NetworkSpec {
    NetworkSpec {
        layers: vec![
            LayerSpec::new(l1, 100.0, 1.0),
            LayerSpec::new(l2, 200.0, 1.0),
        ],
        channel: ChannelParams::urban(),
    }
}

fn los(layer: usize) -> LinkClass {
    LinkClass::new(layer, Environment::Los)
}

fn height_grid() -> GridSpec {
    GridSpec::log(Param::Altitude { layer: 0 }, 25.0, 500.0, 20).unwrap()
}

/// Binomial standard error of a frequency under the hypothesis `p`.
fn binomial_stderr(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

struct Runs {
    an: Analyzer,
    /// Criterion-1 simulations at window 5000, one per height.
    base: Vec<SimSummary>,
}

fn cross_engine(runs: &Runs) -> Result<Outcome> {
    let mut ok = true;
    let mut parts = Vec::new();
    for (h, mc) in FIG2_HEIGHTS.iter().zip(&runs.base) {
        let a = runs.an.total_stp(&fig2(*h))?.value;
        let tol = f64::max(0.02, 3.0 * mc.stp.stderr);
        let d = (a - mc.stp.mean).abs();
        ok &= d <= tol;
        parts.push(format!(
            "h={h}: {a:.4} vs {:.4}±{:.4}",
            mc.stp.mean, mc.stp.stderr
        ));
    }
    outcome(ok, parts.join(", "))
}

fn unimodality(_: &Runs) -> Result<Outcome> {
    let r = sweep_1d(&fig2(100.0), &height_grid(), &SweepOptions::analytic())?;
    let stp: Vec<f64> = r
        .analytic_column()
        .into_iter()
        .map(|v| v.unwrap_or(f64::NAN))
        .collect();
    let best = (0..stp.len())
        .max_by(|&i, &j| stp[i].total_cmp(&stp[j]))
        .unwrap();
    outcome(
        best != 0 && best + 1 != stp.len() && stp.iter().all(|v| v.is_finite()),
        format!(
            "argmax h={:.1} (index {best} of {}), STP {:.4}",
            r.axes[0].values[best],
            stp.len(),
            stp[best]
        ),
    )
}

fn all_los_monotone(_: &Runs) -> Result<Outcome> {
    let mut net = fig2(100.0);
    net.channel.los_override = Some(1.0);
    let r = sweep_1d(&net, &height_grid(), &SweepOptions::analytic())?;
    let stp: Vec<f64> = r
        .analytic_column()
        .into_iter()
        .map(|v| v.unwrap_or(f64::NAN))
        .collect();
    let worst_rise = stp
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    outcome(
        worst_rise <= 0.0,
        format!(
            "STP {:.4} -> {:.4}, largest step {worst_rise:.3e}",
            stp[0],
            stp[stp.len() - 1]
        ),
    )
}

fn association(runs: &Runs) -> Result<Outcome> {
    let mut configs: Vec<(String, NetworkSpec, SimSummary)> = FIG2_HEIGHTS
        .iter()
        .zip(&runs.base)
        .map(|(h, s)| (format!("h={h}"), fig2(*h), s.clone()))
        .collect();
    let two = two_layer(5e-6, 5e-6);
    let s = simulate(&two, &SimConfig::new(TRIALS, SEED), Exec::Parallel)?;
    configs.push(("two-layer".into(), two, s));

    let mut worst_sum: f64 = 0.0;
    let mut worst_z: f64 = 0.0;
    for (_, net, mc) in &configs {
        let table = runs.an.association_probability(net)?;
        worst_sum = worst_sum.max((table.total() - 1.0).abs());
        for class in net.classes() {
            let p = table.get(class);
            let freq = mc.association[&class].mean;
            let se = binomial_stderr(p, mc.stp.trials);
            let z = if se > 0.0 {
                (freq - p).abs() / se
            } else if freq == p {
                0.0
            } else {
                f64::INFINITY
            };
            worst_z = worst_z.max(z);
        }
    }
    outcome(
        worst_sum <= 1e-6 && worst_z <= 3.0,
        format!(
            "{} configs, max |sum-1| = {worst_sum:.1e}, max deviation {worst_z:.2} stderr",
            configs.len()
        ),
    )
}

fn density_bound(runs: &Runs) -> Result<Outcome> {
    let grid = GridSpec::log(Param::Density { layer: 0 }, 1e-7, 10f64.powf(-3.5), 15)?;
    let mut ok = true;
    let mut bounds = Vec::new();
    let mut parts = Vec::new();
    for h in [100.0, 200.0, 300.0] {
        let o = optimal_density(&fig2(h), 0, &grid.values, &runs.an, Exec::Parallel)?;
        let b = o.bound.unwrap_or(f64::NAN);
        ok &= o.bound_holds == Some(true);
        bounds.push(b);
        parts.push(format!(
            "h={h}: argmax {:.2e} <= bound {b:.3e}",
            o.argmax_density
        ));
    }
    ok &= bounds.windows(2).all(|w| w[1] < w[0]);
    outcome(ok, parts.join(", "))
}

fn corner_identity(runs: &Runs) -> Result<Outcome> {
    let suburban = ChannelParams {
        a: 4.88,
        b: 0.429,
        alpha_los: 3.0,
        alpha_nlos: 4.0,
        beta: 1.0,
        ..ChannelParams::urban()
    };
    let dense = ChannelParams {
        a: 27.23,
        b: 0.08,
        alpha_los: 2.2,
        alpha_nlos: 5.0,
        beta: 0.5,
        ..ChannelParams::urban()
    };
    let sets = [
        (ChannelParams::urban(), LayerSpec::new(1e-5, 100.0, 1.0)),
        (suburban, LayerSpec::new(3e-6, 200.0, 2.0)),
        (dense, LayerSpec::new(1e-4, 50.0, 0.5)),
    ];
    let mut worst: f64 = 0.0;
    for (channel, layer) in sets {
        let net = NetworkSpec::new(vec![layer], channel)?;
        let s = threshold_s(&net, los(0), layer.altitude);
        let phi = runs.an.phi(&net, los(0), 0, layer.altitude, s)?;
        let eps = runs.an.epsilon(&layer, &channel, s)?;
        worst = worst.max(((phi - eps) / eps).abs());
    }
    outcome(
        worst <= 1e-8,
        format!("3 parameter sets, max relative gap {worst:.2e}"),
    )
}

fn laplace_oracle(runs: &Runs) -> Result<Outcome> {
    let net = fig2(100.0);
    let cfg = SimConfig::new(TRIALS, SEED);
    let mut ok = true;
    let mut parts = Vec::new();
    for (y, scale) in [(120.0, 1.0), (200.0, 1.0), (350.0, 0.25)] {
        let s = scale * threshold_s(&net, los(0), y);
        let l = runs.an.conditional_laplace_derivs(&net, los(0), y, s, 2)?;
        let mc = interference_laplace(&net, los(0), y, s, &cfg, Exec::Parallel)?;
        ok &= (mc.mean - l.transform()).abs() <= 3.0 * mc.stderr;
        ok &= l.completely_monotone();
        parts.push(format!(
            "y={y}: {:.4} vs {:.4}±{:.4}",
            l.transform(),
            mc.mean,
            mc.stderr
        ));
    }
    let at_zero = runs
        .an
        .conditional_laplace_derivs(&net, los(0), 150.0, 0.0, 2)?;
    ok &= at_zero.values[0] == 1.0 && at_zero.completely_monotone();
    parts.push(format!("L(0) = {}", at_zero.values[0]));
    outcome(ok, parts.join(", "))
}

fn nakagami_path(runs: &Runs) -> Result<Outcome> {
    let mut net = fig2(100.0);
    net.channel.m_los = 3;
    let y = 150.0;
    let analytic = runs.an.conditional_stp(&net, los(0), y)?;
    let cfg = SimConfig::new(4 * TRIALS, SEED);
    let outcomes = collect_outcomes(&net, &cfg, Exec::Parallel)?;
    let binned = binned_conditional_stp(&outcomes, los(0), y, cfg.bin_width);
    let mc_ok = binned.trials > 0 && (binned.mean - analytic).abs() <= 3.0 * binned.stderr;

    // derivative recursion against central differences of the transform
    let s = threshold_s(&net, los(0), y);
    let d = runs.an.conditional_laplace_derivs(&net, los(0), y, s, 2)?;
    let h = 1e-3 * s;
    let l = |t: f64| {
        runs.an
            .conditional_laplace_derivs(&net, los(0), y, t, 0)
            .map(|d| d.values[0])
    };
    let (lm, l0, lp) = (l(s - h)?, l(s)?, l(s + h)?);
    let fd1 = (lp - lm) / (2.0 * h);
    let fd2 = (lp - 2.0 * l0 + lm) / (h * h);
    let rel1 = ((fd1 - d.values[1]) / d.values[1]).abs();
    let rel2 = ((fd2 - d.values[2]) / d.values[2]).abs();
    outcome(
        mc_ok && rel1 <= 1e-4 && rel2 <= 1e-4,
        format!(
            "y={y}: {analytic:.4} vs binned {:.4}±{:.4} (n={}), FD rel err {rel1:.1e}/{rel2:.1e}",
            binned.mean, binned.stderr, binned.trials
        ),
    )
}

fn regime_shift(_: &Runs) -> Result<Outcome> {
    let fractions: Vec<f64> = (0..21).map(|i| i as f64 / 20.0).collect();
    let net = two_layer(0.0, 0.0);
    let mut f = Vec::new();
    for exp in [-6.0, -4.6, -5.3] {
        let r = iso_total_density(&net, 10f64.powf(exp), &fractions, &SweepOptions::analytic())?;
        f.push(r.argmax_fraction);
    }
    outcome(
        f[0] <= 0.2 && f[1] >= 0.8 && f[2] > 0.0 && f[2] < 1.0,
        format!(
            "f* = {} at 1e-6, {} at 10^-4.6, {} at 10^-5.3",
            f[0], f[1], f[2]
        ),
    )
}

fn truncation(runs: &Runs) -> Result<Outcome> {
    let mut ok = true;
    let mut parts = Vec::new();
    for (h, base) in FIG2_HEIGHTS.iter().zip(&runs.base) {
        let cfg = SimConfig {
            window_radius: 10_000.0,
            ..SimConfig::new(TRIALS, SEED)
        };
        let wide = simulate(&fig2(*h), &cfg, Exec::Parallel)?;
        let d = (wide.stp.mean - base.stp.mean).abs();
        ok &= d < base.stp.stderr;
        parts.push(format!(
            "h={h}: |d|={d:.1e} (stderr {:.1e})",
            base.stp.stderr
        ));
    }
    outcome(ok, parts.join(", "))
}

type Criterion = (u32, &'static str, fn(&Runs) -> Result<Outcome>);

fn main() {
    let started = Instant::now();
    let an = Analyzer::default();
    let base = FIG2_HEIGHTS
        .iter()
        .map(|&h| simulate(&fig2(h), &SimConfig::new(TRIALS, SEED), Exec::Parallel))
        .collect::<Result<Vec<_>>>()
        .expect("baseline simulations");
    let runs = Runs { an, base };

    let criteria: [Criterion; 10] = [
        (1, "cross-engine STP agreement", cross_engine),
        (2, "STP unimodal in altitude", unimodality),
        (3, "all-LoS STP nonincreasing in altitude", all_los_monotone),
        (4, "association normalization and MC agreement", association),
        (
            5,
            "optimal density below bound, bound decreasing",
            density_bound,
        ),
        (6, "corner identity phi = epsilon", corner_identity),
        (7, "Laplace transform oracle", laplace_oracle),
        (8, "Nakagami derivative path", nakagami_path),
        (9, "two-layer regime shift", regime_shift),
        (10, "window truncation adequacy", truncation),
    ];
    let mut failed = 0;
    for (id, name, check) in criteria {
        let t = Instant::now();
        let (pass, detail) = match check(&runs) {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!(
            "{} criterion {id:>2}: {name}: {detail} [{:.1}s]",
            if pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.0}s",
        criteria.len() - failed,
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
