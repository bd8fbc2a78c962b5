//! Stochastic-geometry evaluation of association and success probability.
//!
//! Notation in code: the *main* class `(j, c)` is the layer and environment
//! of the serving transmitter, an *other* class `(k, c_o)` is any class
//! (including the main one) whose points act as interferers. Given the
//! serving link length `y`, no point of class `(k, c_o)` may lie closer
//! than `R' = max(exclusion_radius, h_k)`, which makes each thinned layer
//! an independent PPP restricted to `[R', ∞)`.
//!
//! All integrals are numeric. Inner integrals (cumulative intensities and
//! interference log-transforms) are nested inside the outer integral over
//! `y`; the total STP integrates the unnormalized product of the serving
//! density and the association-conditioned success probability.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ChannelParams, Environment, LayerSpec, LinkClass, NetworkSpec};
use crate::quadrature::{
    integrate_finite, integrate_power_tail, integrate_semi_infinite_scaled, QuadSpec,
};

/// Tolerance by which a success probability may leave `[0, 1]` before it is
/// treated as a numerical failure instead of round-off.
pub const PROBABILITY_SLACK: f64 = 1e-9;

const MAX_DERIVATIVE_ORDER: usize = 64;

/// Association probability per link class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationTable {
    pub entries: BTreeMap<LinkClass, f64>,
}

impl AssociationTable {
    pub fn get(&self, class: LinkClass) -> f64 {
        self.entries.get(&class).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.entries.values().sum()
    }

    /// Association probability summed over both environments of a layer.
    pub fn layer_total(&self, layer: usize) -> f64 {
        Environment::ALL
            .iter()
            .map(|&env| self.get(LinkClass::new(layer, env)))
            .sum()
    }

    pub fn by_label(&self) -> BTreeMap<String, f64> {
        self.entries.iter().map(|(c, p)| (c.label(), *p)).collect()
    }
}

/// `[L(s), L'(s), …, L⁽ⁿ⁾(s)]` of the conditional interference-plus-noise
/// Laplace transform.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceDerivatives {
    pub s: f64,
    pub values: Vec<f64>,
}

impl LaplaceDerivatives {
    pub fn transform(&self) -> f64 {
        self.values[0]
    }

    /// `(-1)ⁿ L⁽ⁿ⁾(s) >= 0` for every stored order.
    pub fn completely_monotone(&self) -> bool {
        self.values
            .iter()
            .enumerate()
            .all(|(n, v)| if n % 2 == 0 { *v >= 0.0 } else { *v <= 0.0 })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StpResult {
    pub value: f64,
    /// Sum of the outer quadrature error estimates.
    pub error: f64,
    /// Contribution of each serving class; sums to `value`.
    pub per_class: BTreeMap<LinkClass, f64>,
}

/// Quadrature settings for the nested integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Analyzer {
    /// Cumulative intensities and interference log-transforms.
    pub inner: QuadSpec,
    /// Integrals over the serving-link length.
    pub outer: QuadSpec,
}

impl Default for Analyzer {
    fn default() -> Self {
        Self {
            inner: QuadSpec {
                rel_tol: 1e-11,
                abs_tol: 0.0,
                max_subdivisions: 2000,
            },
            outer: QuadSpec {
                rel_tol: 1e-8,
                abs_tol: 1e-13,
                max_subdivisions: 2000,
            },
        }
    }
}

/// Serving-link threshold `s* = m β y^α / P` at which the conditional
/// success probability is evaluated.
pub fn threshold_s(net: &NetworkSpec, class: LinkClass, y: f64) -> f64 {
    let ch = &net.channel;
    let layer = net.layer(class);
    ch.m(class.env) as f64 * ch.beta * y.powf(ch.alpha(class.env)) / layer.power
}

/// Distance below which a node of `other` would out-power a serving link of
/// class `main` and length `y`.
pub fn exclusion_radius(net: &NetworkSpec, main: LinkClass, other: LinkClass, y: f64) -> f64 {
    let ch = &net.channel;
    let pj = net.layer(main).power;
    let pk = net.layer(other).power;
    (pk * y.powf(ch.alpha(main.env)) / pj).powf(1.0 / ch.alpha(other.env))
}

/// `1 - (1 + u)^-m` without cancellation for small `u`.
#[inline]
fn one_minus_pow(u: f64, m: u32) -> f64 {
    -(-(m as f64) * u.ln_1p()).exp_m1()
}

/// Rising factorial `m (m+1) … (m+n-1)`.
fn rising(m: u32, n: usize) -> f64 {
    (0..n).map(|i| m as f64 + i as f64).product()
}

/// Normalized derivatives `Bₙ = L⁽ⁿ⁾ / L` of `L = exp(η)` from the
/// derivatives of `η` via `Bₙ = Σᵢ C(n-1, i) η⁽ⁿ⁻ⁱ⁾ Bᵢ`.
fn exp_derivative_ratios(eta: &[f64]) -> Vec<f64> {
    let mut b = vec![1.0];
    let mut binom = vec![1.0]; // row n-1 of Pascal's triangle
    for n in 1..eta.len() {
        let mut acc = 0.0;
        for (i, c) in binom.iter().enumerate() {
            acc += c * eta[n - i] * b[i];
        }
        b.push(acc);
        let mut next = vec![1.0; binom.len() + 1];
        for i in 1..binom.len() {
            next[i] = binom[i - 1] + binom[i];
        }
        binom = next;
    }
    b
}

/// Success probability from the log-transform derivatives at `s`:
/// `exp(η) Σₙ (-s)ⁿ/n! Bₙ`, with the number of terms equal to `eta.len()`.
fn success_from_eta(eta: &[f64], s: f64) -> f64 {
    let b = exp_derivative_ratios(eta);
    let mut term = 1.0;
    let mut sum = 0.0;
    for (n, bn) in b.iter().enumerate() {
        if n > 0 {
            term *= -s / n as f64;
        }
        sum += term * bn;
    }
    eta[0].exp() * sum
}

struct ClassTerms {
    /// Σ over classes of the cumulative intensity inside the exclusion zones.
    void_exponent: f64,
    /// Derivatives of the total interference-plus-noise log-transform.
    eta: Vec<f64>,
}

impl Analyzer {
    pub fn new(inner: QuadSpec, outer: QuadSpec) -> Self {
        Self { inner, outer }
    }

    /// `∫_{h}^{max(upper, h)} 2π λ x ρ⁽ᶜ⁾(x) dx` for one class.
    pub fn cumulative_intensity(
        &self,
        net: &NetworkSpec,
        class: LinkClass,
        upper: f64,
    ) -> Result<f64> {
        let layer = net.layer(class);
        let ch = &net.channel;
        let h = layer.altitude;
        if layer.density == 0.0 || upper <= h {
            return Ok(0.0);
        }
        let r = integrate_finite(|x| x * ch.env_at(class.env, h, x), h, upper, &self.inner)?;
        Ok(2.0 * PI * layer.density * r.value)
    }

    /// Void probability of `class` within link distance `v`.
    pub fn nearest_ccdf(&self, net: &NetworkSpec, class: LinkClass, v: f64) -> Result<f64> {
        net.check_class(class)?;
        Ok((-self.cumulative_intensity(net, class, v)?).exp())
    }

    pub fn nearest_pdf(&self, net: &NetworkSpec, class: LinkClass, v: f64) -> Result<f64> {
        net.check_class(class)?;
        let layer = net.layer(class);
        if v < layer.altitude || v <= 0.0 || layer.density == 0.0 {
            return Ok(0.0);
        }
        let rho = net.channel.env_at(class.env, layer.altitude, v);
        Ok(2.0 * PI * layer.density * v * rho * self.nearest_ccdf(net, class, v)?)
    }

    /// Derivatives `[η, η', …, η⁽ⁿ_max⁾]` of the log Laplace transform of the
    /// interference from `other`, given a serving link of class `main` and
    /// length `y`.
    pub fn log_laplace_derivs(
        &self,
        net: &NetworkSpec,
        main: LinkClass,
        other: LinkClass,
        y: f64,
        s: f64,
        n_max: usize,
    ) -> Result<Vec<f64>> {
        net.check_class(main)?;
        net.check_class(other)?;
        check_s(s)?;
        check_order(n_max)?;
        let lower = exclusion_radius(net, main, other, y).max(net.layer(other).altitude);
        self.log_laplace_from(net, other, lower, s, n_max)
    }

    fn log_laplace_from(
        &self,
        net: &NetworkSpec,
        other: LinkClass,
        lower: f64,
        s: f64,
        n_max: usize,
    ) -> Result<Vec<f64>> {
        let layer = net.layer(other);
        let ch = &net.channel;
        let mut out = vec![0.0; n_max + 1];
        if layer.density == 0.0 {
            return Ok(out);
        }
        let h = layer.altitude;
        let m = ch.m(other.env);
        let alpha = ch.alpha(other.env);
        let pk = layer.power;
        let scale = lower.max(1.0);
        let weight = -2.0 * PI * layer.density;
        for (n, slot) in out.iter_mut().enumerate() {
            if n == 0 && s == 0.0 {
                continue;
            }
            let rise = rising(m, n);
            let integrand = |x: f64| {
                let rho = ch.env_at(other.env, h, x);
                if rho == 0.0 {
                    return 0.0;
                }
                let c = pk * x.powf(-alpha) / m as f64;
                let core = if n == 0 {
                    one_minus_pow(c * s, m)
                } else {
                    // -dⁿ/dsⁿ (1 + cs)^-m
                    -(-c).powi(n as i32) * rise * (1.0 + c * s).powf(-(m as f64) - n as f64)
                };
                x * rho * core
            };
            let r = integrate_power_tail(integrand, lower, scale, alpha - 1.0, &self.inner)?;
            *slot = weight * r.value;
        }
        Ok(out)
    }

    fn class_terms(
        &self,
        net: &NetworkSpec,
        main: LinkClass,
        y: f64,
        s: Option<f64>,
        n_max: usize,
    ) -> Result<ClassTerms> {
        let mut void_exponent = 0.0;
        let mut eta = vec![0.0; n_max + 1];
        if let Some(s) = s {
            eta[0] = -s * net.channel.noise;
            if n_max >= 1 {
                eta[1] = -net.channel.noise;
            }
        }
        for other in net.classes() {
            let layer = net.layer(other);
            if layer.density == 0.0 {
                continue;
            }
            let lower = exclusion_radius(net, main, other, y).max(layer.altitude);
            void_exponent += self.cumulative_intensity(net, other, lower)?;
            if let Some(s) = s {
                let part = self.log_laplace_from(net, other, lower, s, n_max)?;
                for (acc, v) in eta.iter_mut().zip(part) {
                    *acc += v;
                }
            }
        }
        Ok(ClassTerms { void_exponent, eta })
    }

    /// Derivatives of the conditional Laplace transform of interference plus
    /// noise.
    pub fn conditional_laplace_derivs(
        &self,
        net: &NetworkSpec,
        main: LinkClass,
        y: f64,
        s: f64,
        n_max: usize,
    ) -> Result<LaplaceDerivatives> {
        net.check_class(main)?;
        check_s(s)?;
        check_order(n_max)?;
        check_serving_length(net, main, y)?;
        let terms = self.class_terms(net, main, y, Some(s), n_max)?;
        let l0 = terms.eta[0].exp();
        let values = exp_derivative_ratios(&terms.eta)
            .into_iter()
            .map(|b| b * l0)
            .collect();
        Ok(LaplaceDerivatives { s, values })
    }

    /// Success probability given a serving link of class `class` and length `y`.
    pub fn conditional_stp(&self, net: &NetworkSpec, class: LinkClass, y: f64) -> Result<f64> {
        net.check_class(class)?;
        check_serving_length(net, class, y)?;
        let m = net.channel.m(class.env) as usize;
        let s = threshold_s(net, class, y);
        let terms = self.class_terms(net, class, y, Some(s), m - 1)?;
        clamp_probability(success_from_eta(&terms.eta, s))
    }

    /// Joint density of {serving class = `class`, serving length = `y`}.
    fn serving_density(&self, net: &NetworkSpec, class: LinkClass, y: f64) -> Result<f64> {
        let layer = net.layer(class);
        let rho = net.channel.env_at(class.env, layer.altitude, y);
        if rho == 0.0 || layer.density == 0.0 {
            return Ok(0.0);
        }
        let terms = self.class_terms(net, class, y, None, 0)?;
        Ok(2.0 * PI * layer.density * y * rho * (-terms.void_exponent).exp())
    }

    /// Serving density times the conditional success probability.
    fn success_density(&self, net: &NetworkSpec, class: LinkClass, y: f64) -> Result<f64> {
        let layer = net.layer(class);
        let rho = net.channel.env_at(class.env, layer.altitude, y);
        if rho == 0.0 || layer.density == 0.0 {
            return Ok(0.0);
        }
        let m = net.channel.m(class.env) as usize;
        let s = threshold_s(net, class, y);
        let terms = self.class_terms(net, class, y, Some(s), m - 1)?;
        let p = success_from_eta(&terms.eta, s);
        Ok(2.0 * PI * layer.density * y * rho * (-terms.void_exponent).exp() * p)
    }

    fn outer_scale(net: &NetworkSpec, class: LinkClass) -> f64 {
        let total: f64 = net.layers.iter().map(|l| l.density).sum();
        let void_len = if total > 0.0 {
            1.0 / (PI * total).sqrt()
        } else {
            1.0
        };
        net.layer(class).altitude.max(void_len).max(1.0)
    }

    fn integrate_over_serving_length<F>(
        &self,
        net: &NetworkSpec,
        class: LinkClass,
        f: F,
    ) -> Result<(f64, f64)>
    where
        F: Fn(f64) -> Result<f64>,
    {
        let layer = net.layer(class);
        if layer.density == 0.0 {
            return Ok((0.0, 0.0));
        }
        let mut failure = None;
        let r = integrate_semi_infinite_scaled(
            |y| match f(y) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            },
            layer.altitude,
            Self::outer_scale(net, class),
            &self.outer,
        )?;
        if let Some(e) = failure {
            return Err(e);
        }
        Ok((r.value, r.error))
    }

    pub fn association_probability(&self, net: &NetworkSpec) -> Result<AssociationTable> {
        net.validate()?;
        let mut entries = BTreeMap::new();
        for class in net.classes() {
            let (v, _) = self.integrate_over_serving_length(net, class, |y| {
                self.serving_density(net, class, y)
            })?;
            entries.insert(class, v);
        }
        Ok(AssociationTable { entries })
    }

    pub fn mainlink_pdf(&self, net: &NetworkSpec, class: LinkClass, y: f64) -> Result<f64> {
        let assoc = self.association_probability(net)?;
        self.mainlink_pdf_with(net, &assoc, class, y)
    }

    /// [`Analyzer::mainlink_pdf`] reusing a precomputed association table.
    pub fn mainlink_pdf_with(
        &self,
        net: &NetworkSpec,
        assoc: &AssociationTable,
        class: LinkClass,
        y: f64,
    ) -> Result<f64> {
        net.check_class(class)?;
        let a = assoc.get(class);
        if !(a > 0.0) {
            return Err(Error::UndefinedDistribution(format!(
                "class {class} has zero association probability"
            )));
        }
        if y < net.layer(class).altitude {
            return Ok(0.0);
        }
        Ok(self.serving_density(net, class, y)? / a)
    }

    pub fn total_stp(&self, net: &NetworkSpec) -> Result<StpResult> {
        net.validate()?;
        let mut per_class = BTreeMap::new();
        let mut value = 0.0;
        let mut error = 0.0;
        for class in net.classes() {
            let (v, e) = self.integrate_over_serving_length(net, class, |y| {
                self.success_density(net, class, y)
            })?;
            per_class.insert(class, v);
            value += v;
            error += e;
        }
        if !(-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&value) {
            return Err(Error::NumericalConsistency(format!(
                "total STP {value} outside [0, 1]"
            )));
        }
        Ok(StpResult {
            value: value.clamp(0.0, 1.0),
            error,
            per_class,
        })
    }

    /// `∫_h^∞ x (1 - ρᴸ/(1 + sPx^-αᴸ) - ρᴺ/(1 + sPx^-αᴺ)) dx`.
    pub fn epsilon(&self, layer: &LayerSpec, channel: &ChannelParams, s: f64) -> Result<f64> {
        check_s(s)?;
        if !(channel.alpha_los > 2.0) {
            return Err(Error::Domain(format!(
                "epsilon diverges for alpha_los <= 2 (got {})",
                channel.alpha_los
            )));
        }
        if s == 0.0 {
            return Ok(0.0);
        }
        let h = layer.altitude;
        let p = layer.power;
        let integrand = |x: f64| {
            let rho = channel.los_at(h, x);
            let ul = s * p * x.powf(-channel.alpha_los);
            let un = s * p * x.powf(-channel.alpha_nlos);
            x * (rho * ul / (1.0 + ul) + (1.0 - rho) * un / (1.0 + un))
        };
        let r = integrate_power_tail(
            integrand,
            h,
            h.max(1.0),
            channel.alpha_los - 1.0,
            &self.inner,
        )?;
        Ok(r.value)
    }

    /// Upper bound on the STP-maximizing density of one layer (Rayleigh only).
    pub fn density_upper_bound(&self, layer: &LayerSpec, channel: &ChannelParams) -> Result<f64> {
        if !channel.is_rayleigh() {
            return Err(Error::Unsupported(format!(
                "density bound holds only for m_los = m_nlos = 1 (got {}, {})",
                channel.m_los, channel.m_nlos
            )));
        }
        if !(layer.altitude > 0.0) {
            return Err(Error::Unsupported(
                "density bound needs an aerial layer (altitude > 0)".into(),
            ));
        }
        let s = channel.m_los as f64 * channel.beta * layer.altitude.powf(channel.alpha_los)
            / layer.power;
        let eps = self.epsilon(layer, channel, s)?;
        Ok(1.0 / (2.0 * PI * eps))
    }

    /// Density-free interference footprint of layer `other_layer` seen by a
    /// serving link of class `main` and length `y`, evaluated at `s`.
    pub fn phi(
        &self,
        net: &NetworkSpec,
        main: LinkClass,
        other_layer: usize,
        y: f64,
        s: f64,
    ) -> Result<f64> {
        net.check_class(main)?;
        net.check_class(LinkClass::new(other_layer, Environment::Los))?;
        check_s(s)?;
        let ch = &net.channel;
        let layer = &net.layers[other_layer];
        let h = layer.altitude;
        let mut total = 0.0;
        for env in Environment::ALL {
            let other = LinkClass::new(other_layer, env);
            let lower = exclusion_radius(net, main, other, y).max(h);
            if lower > h {
                total +=
                    integrate_finite(|x| x * ch.env_at(env, h, x), h, lower, &self.inner)?.value;
            }
            if s > 0.0 {
                let alpha = ch.alpha(env);
                let integrand = |x: f64| {
                    let u = s * layer.power * x.powf(-alpha);
                    x * ch.env_at(env, h, x) * u / (1.0 + u)
                };
                total += integrate_power_tail(
                    integrand,
                    lower,
                    lower.max(1.0),
                    alpha - 1.0,
                    &self.inner,
                )?
                .value;
            }
        }
        Ok(total)
    }
}

fn check_s(s: f64) -> Result<()> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::Domain(format!(
            "Laplace argument must be finite and >= 0, got {s}"
        )));
    }
    Ok(())
}

fn check_order(n_max: usize) -> Result<()> {
    if n_max > MAX_DERIVATIVE_ORDER {
        return Err(Error::InvalidParameter(format!(
            "derivative order {n_max} exceeds {MAX_DERIVATIVE_ORDER}"
        )));
    }
    Ok(())
}

fn check_serving_length(net: &NetworkSpec, class: LinkClass, y: f64) -> Result<()> {
    let h = net.layer(class).altitude;
    if !(y >= h) || !(y > 0.0) || !y.is_finite() {
        return Err(Error::Domain(format!(
            "serving link length {y} must be positive and >= altitude {h}"
        )));
    }
    Ok(())
}

fn clamp_probability(p: f64) -> Result<f64> {
    if !(-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&p) {
        return Err(Error::NumericalConsistency(format!(
            "probability {p} outside [0, 1]"
        )));
    }
    Ok(p.clamp(0.0, 1.0))
}

// Free-function forms with default tolerances.

pub fn nearest_ccdf(net: &NetworkSpec, class: LinkClass, v: f64) -> Result<f64> {
    Analyzer::default().nearest_ccdf(net, class, v)
}

pub fn nearest_pdf(net: &NetworkSpec, class: LinkClass, v: f64) -> Result<f64> {
    Analyzer::default().nearest_pdf(net, class, v)
}

pub fn association_probability(net: &NetworkSpec) -> Result<AssociationTable> {
    Analyzer::default().association_probability(net)
}

pub fn mainlink_pdf(net: &NetworkSpec, class: LinkClass, y: f64) -> Result<f64> {
    Analyzer::default().mainlink_pdf(net, class, y)
}

pub fn log_laplace_derivs(
    net: &NetworkSpec,
    main: LinkClass,
    other: LinkClass,
    y: f64,
    s: f64,
    n_max: usize,
) -> Result<Vec<f64>> {
    Analyzer::default().log_laplace_derivs(net, main, other, y, s, n_max)
}

pub fn conditional_laplace_derivs(
    net: &NetworkSpec,
    main: LinkClass,
    y: f64,
    s: f64,
    n_max: usize,
) -> Result<LaplaceDerivatives> {
    Analyzer::default().conditional_laplace_derivs(net, main, y, s, n_max)
}

pub fn conditional_stp(net: &NetworkSpec, class: LinkClass, y: f64) -> Result<f64> {
    Analyzer::default().conditional_stp(net, class, y)
}

pub fn total_stp(net: &NetworkSpec) -> Result<StpResult> {
    Analyzer::default().total_stp(net)
}

pub fn epsilon(layer: &LayerSpec, channel: &ChannelParams, s: f64) -> Result<f64> {
    Analyzer::default().epsilon(layer, channel, s)
}

pub fn density_upper_bound(layer: &LayerSpec, channel: &ChannelParams) -> Result<f64> {
    Analyzer::default().density_upper_bound(layer, channel)
}

pub fn phi(net: &NetworkSpec, main: LinkClass, other_layer: usize, y: f64, s: f64) -> Result<f64> {
    Analyzer::default().phi(net, main, other_layer, y, s)
}
