//! Distance weights, localizers and cardinal basis weights.
//!
//! The cardinal weights are `g_i = (τ_i / α_i) / Σ_k (τ_k / α_k)` where
//! `α_i = α(d_i)` grows with the geodesic distance `d_i` from the evaluation
//! point to node `i` and `τ_i` is an optional compactly supported cutoff.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BasisError {
    #[error("no node within the localization radius {delta}")]
    EmptyStencil { delta: f64 },
    #[error("invalid basis configuration: {0}")]
    InvalidConfig(String),
    #[error("distance to node {index} is {value}; distances must be finite and non-negative")]
    InvalidDistance { index: usize, value: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaKind {
    /// `α(d) = d^μ`.
    Power,
    /// `α(d) = d^μ · exp(γ d^μ)`; the weight `1/α` is `exp(−γ d^μ) / d^μ`.
    ExpOverPower,
    /// `α(d) = exp(δ_e d^μ)`.
    PureExp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauKind {
    /// `(1 − d/δ)_+^{k+1}`.
    Wendland,
    /// 1 inside the open ball of radius δ, 0 outside.
    Indicator,
    /// No localization.
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisConfig {
    pub alpha_kind: AlphaKind,
    pub mu: f64,
    pub gamma: f64,
    pub delta_exp: f64,
    pub k: u32,
    pub tau_kind: TauKind,
    pub delta: f64,
    pub node_epsilon: f64,
}

pub const DEFAULT_NODE_EPSILON: f64 = 1e-12;

impl BasisConfig {
    /// Power weights with `μ = k + 1` and a Wendland cutoff of radius `delta`.
    pub fn new(k: u32, delta: f64) -> Self {
        Self {
            alpha_kind: AlphaKind::Power,
            mu: f64::from(k + 1),
            gamma: 1.0,
            delta_exp: 1.0,
            k,
            tau_kind: TauKind::Wendland,
            delta,
            node_epsilon: DEFAULT_NODE_EPSILON,
        }
    }

    /// Power weights without localization.
    pub fn global(k: u32, mu: f64) -> Self {
        Self { mu, tau_kind: TauKind::None, delta: f64::INFINITY, ..Self::new(k, 1.0) }
    }

    pub fn is_localized(&self) -> bool {
        self.tau_kind != TauKind::None
    }

    /// Radius outside which a node carries no weight.
    pub fn support_radius(&self) -> f64 {
        if self.is_localized() {
            self.delta
        } else {
            f64::INFINITY
        }
    }

    pub fn validate(&self) -> Result<(), BasisError> {
        let bad = |m: String| Err(BasisError::InvalidConfig(m));
        if !(self.mu >= f64::from(self.k)) || !self.mu.is_finite() {
            return bad(format!("mu = {} must be finite and at least k = {}", self.mu, self.k));
        }
        if self.mu <= 0.0 {
            return bad(format!("mu = {} must be positive", self.mu));
        }
        if self.is_localized() && !(self.delta > 0.0) {
            return bad(format!("delta = {} must be positive", self.delta));
        }
        if self.alpha_kind == AlphaKind::ExpOverPower && !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad(format!("gamma = {} must be positive", self.gamma));
        }
        if self.alpha_kind == AlphaKind::PureExp && !(self.delta_exp >= 0.0 && self.delta_exp.is_finite()) {
            return bad(format!("delta_exp = {} must be non-negative", self.delta_exp));
        }
        if !(self.node_epsilon >= 0.0) {
            return bad(format!("node_epsilon = {} must be non-negative", self.node_epsilon));
        }
        Ok(())
    }

    /// `ln α(d)`, with `−∞` at `d = 0` for the kinds that vanish there.
    fn ln_alpha(&self, d: f64) -> f64 {
        let dm = d.powf(self.mu);
        match self.alpha_kind {
            AlphaKind::Power => self.mu * d.ln(),
            AlphaKind::ExpOverPower => self.mu * d.ln() + self.gamma * dm,
            AlphaKind::PureExp => self.delta_exp * dm,
        }
    }
}

pub fn alpha(config: &BasisConfig, d: f64) -> f64 {
    let dm = d.powf(config.mu);
    match config.alpha_kind {
        AlphaKind::Power => dm,
        AlphaKind::ExpOverPower => dm * (config.gamma * dm).exp(),
        AlphaKind::PureExp => (config.delta_exp * dm).exp(),
    }
}

pub fn tau(config: &BasisConfig, d: f64) -> f64 {
    match config.tau_kind {
        TauKind::None => 1.0,
        TauKind::Indicator => {
            if d < config.delta {
                1.0
            } else {
                0.0
            }
        }
        TauKind::Wendland => {
            let t = 1.0 - d / config.delta;
            if t > 0.0 {
                t.powi(config.k as i32 + 1)
            } else {
                0.0
            }
        }
    }
}

/// Cardinal weights for the given node distances, written into `out`.
///
/// A node closer than `node_epsilon` takes all the weight (the first such
/// node if several are). Otherwise the weights are evaluated in log space,
/// shifted by the largest log-weight, so tiny distances cannot overflow.
pub fn cardinal_weights_into(config: &BasisConfig, distances: &[f64], out: &mut Vec<f64>) -> Result<(), BasisError> {
    out.clear();
    for (index, &d) in distances.iter().enumerate() {
        if !(d >= 0.0 && d.is_finite()) {
            return Err(BasisError::InvalidDistance { index, value: d });
        }
    }
    if let Some(j) = distances.iter().position(|&d| d < config.node_epsilon) {
        out.resize(distances.len(), 0.0);
        out[j] = 1.0;
        return Ok(());
    }

    let mut top = f64::NEG_INFINITY;
    for &d in distances {
        let t = tau(config, d);
        let lw = if t > 0.0 { t.ln() - config.ln_alpha(d) } else { f64::NEG_INFINITY };
        top = top.max(lw);
        out.push(lw);
    }
    if top == f64::NEG_INFINITY {
        out.clear();
        return Err(BasisError::EmptyStencil { delta: config.delta });
    }
    let mut sum = 0.0;
    for w in out.iter_mut() {
        *w = (*w - top).exp();
        sum += *w;
    }
    for w in out.iter_mut() {
        *w /= sum;
    }
    Ok(())
}

pub fn cardinal_weights(config: &BasisConfig, distances: &[f64]) -> Result<Vec<f64>, BasisError> {
    let mut out = Vec::with_capacity(distances.len());
    cardinal_weights_into(config, distances, &mut out)?;
    Ok(out)
}
