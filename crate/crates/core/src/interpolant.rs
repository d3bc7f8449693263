//! Incomplete Taylor expansions at the nodes and the Hermite-Birkhoff
//! interpolant that blends them with cardinal weights.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::basis::{cardinal_weights_into, BasisConfig, BasisError};
use crate::geodesics::GeodesicError;
use crate::geometry::{Chart, GeometryError, SurfacePoint, Vec2, Vec3};
use crate::pointsets::CellIndex;

#[derive(Debug, Error, Clone)]
pub enum InterpolantError {
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error(transparent)]
    Geodesic(#[from] GeodesicError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("sample {0} has no function value")]
    MissingValue(usize),
    #[error("sample {id} carries a derivative of order {order}, above the maximum {k}")]
    OrderTooHigh { id: usize, order: u32, k: u32 },
    #[error("derivative order {0} is not supported (at most {MAX_ORDER})")]
    UnsupportedOrder(u32),
    #[error("no samples")]
    NoSamples,
    #[error("{distances} distances given for {samples} samples")]
    LengthMismatch { samples: usize, distances: usize },
}

/// Highest derivative order with precomputed factorials.
pub const MAX_ORDER: u32 = 4;
const FACTORIAL: [f64; MAX_ORDER as usize + 1] = [1.0, 1.0, 2.0, 6.0, 24.0];

/// A derivative multi-index `(β1, β2)`, ordered graded-lexicographically:
/// `(0,0) < (1,0) < (0,1) < (2,0) < (1,1) < (0,2) < ...`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex(pub u32, pub u32);

impl MultiIndex {
    pub const VALUE: MultiIndex = MultiIndex(0, 0);

    pub fn order(self) -> u32 {
        self.0 + self.1
    }

    /// All multi-indices with `|β| ≤ order`, in graded-lexicographic order.
    pub fn up_to(order: u32) -> Vec<MultiIndex> {
        (0..=order).flat_map(|m| (0..=m).rev().map(move |b1| MultiIndex(b1, m - b1))).collect()
    }

    /// Position in the graded-lexicographic enumeration.
    pub fn position(self) -> usize {
        let m = self.order() as usize;
        m * (m + 1) / 2 + self.1 as usize
    }

    fn factorial(self) -> f64 {
        FACTORIAL[self.0 as usize] * FACTORIAL[self.1 as usize]
    }

    /// `Δv^β / β!`.
    pub fn monomial(self, dv: Vec2) -> f64 {
        dv[0].powi(self.0 as i32) * dv[1].powi(self.1 as i32) / self.factorial()
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order().cmp(&other.order()).then(other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.0, self.1)
    }
}

/// A node with its derivative data `f_β = D^β f(z)` in local coordinates.
/// The key set of `data` is the node's multi-index set.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSite {
    pub id: usize,
    pub v: Vec2,
    pub ambient: Vec3,
    pub data: BTreeMap<MultiIndex, f64>,
}

impl SampleSite {
    pub fn new(id: usize, v: Vec2, ambient: Vec3, data: BTreeMap<MultiIndex, f64>) -> Result<Self, InterpolantError> {
        if !data.contains_key(&MultiIndex::VALUE) {
            return Err(InterpolantError::MissingValue(id));
        }
        if let Some(b) = data.keys().find(|b| b.order() > MAX_ORDER) {
            return Err(InterpolantError::UnsupportedOrder(b.order()));
        }
        Ok(Self { id, v, ambient, data })
    }

    pub fn point(&self) -> SurfacePoint {
        SurfacePoint { v: self.v, x: self.ambient }
    }

    pub fn value(&self) -> f64 {
        self.data[&MultiIndex::VALUE]
    }

    /// Largest `m` such that every multi-index of order `≤ m` is present.
    pub fn complete_order(&self) -> u32 {
        let mut m = 0;
        while MultiIndex::up_to(m + 1).iter().all(|b| self.data.contains_key(b)) {
            m += 1;
        }
        m
    }

    pub fn max_order(&self) -> u32 {
        self.data.keys().map(|b| b.order()).max().unwrap_or(0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterpolantConfig {
    pub basis: BasisConfig,
    /// Largest derivative order any sample may carry.
    pub k: u32,
    /// Largest order through which every sample's expansion is complete.
    pub q: u32,
}

impl InterpolantConfig {
    /// Validates `samples` against `basis.k` and computes `q`.
    pub fn new(basis: BasisConfig, samples: &[SampleSite]) -> Result<Self, InterpolantError> {
        basis.validate()?;
        if samples.is_empty() {
            return Err(InterpolantError::NoSamples);
        }
        let k = basis.k;
        for s in samples {
            let order = s.max_order();
            if order > k {
                return Err(InterpolantError::OrderTooHigh { id: s.id, order, k });
            }
        }
        let q = samples.iter().map(SampleSite::complete_order).min().unwrap_or(0).min(k);
        Ok(Self { basis, k, q })
    }
}

/// The node's incomplete Taylor expansion evaluated at `v`.
pub fn taylor_eval(site: &SampleSite, v: Vec2) -> f64 {
    let dv = [v[0] - site.v[0], v[1] - site.v[1]];
    site.data.iter().map(|(b, f)| f * b.monomial(dv)).sum()
}

/// `H(v) = Σ_i T_i(v) g_i(v)` given the distance from the evaluation point
/// to every sample.
pub fn hb_eval(
    samples: &[SampleSite],
    config: &InterpolantConfig,
    v: Vec2,
    distances: &[f64],
) -> Result<f64, InterpolantError> {
    check_lengths(samples, distances)?;
    let mut w = Vec::new();
    cardinal_weights_into(&config.basis, distances, &mut w)?;
    Ok(samples.iter().zip(&w).filter(|(_, &g)| g != 0.0).map(|(s, &g)| taylor_eval(s, v) * g).sum())
}

/// The same interpolant written as `Σ_i Σ_β f_iβ g_iβ(v)` with the basis
/// functions `g_iβ = Δv^β / β! · g_i`.
pub fn hb_eval_basis_form(
    samples: &[SampleSite],
    config: &InterpolantConfig,
    v: Vec2,
    distances: &[f64],
) -> Result<f64, InterpolantError> {
    check_lengths(samples, distances)?;
    let mut w = Vec::new();
    cardinal_weights_into(&config.basis, distances, &mut w)?;
    let mut total = 0.0;
    for (s, &g) in samples.iter().zip(&w) {
        let dv = [v[0] - s.v[0], v[1] - s.v[1]];
        for (b, f) in &s.data {
            total += f * (b.monomial(dv) * g);
        }
    }
    Ok(total)
}

fn check_lengths(samples: &[SampleSite], distances: &[f64]) -> Result<(), InterpolantError> {
    if samples.is_empty() {
        return Err(InterpolantError::NoSamples);
    }
    if samples.len() != distances.len() {
        return Err(InterpolantError::LengthMismatch { samples: samples.len(), distances: distances.len() });
    }
    Ok(())
}

/// An interpolant bound to a chart, with a neighbor index over its nodes so
/// that localized evaluation only visits nodes inside the support radius.
#[derive(Clone, Debug)]
pub struct HermiteBirkhoff {
    samples: Vec<SampleSite>,
    config: InterpolantConfig,
    index: CellIndex,
}

impl HermiteBirkhoff {
    pub fn new(chart: &Chart, samples: Vec<SampleSite>, basis: BasisConfig) -> Result<Self, InterpolantError> {
        let config = InterpolantConfig::new(basis, &samples)?;
        let points: Vec<SurfacePoint> = samples.iter().map(SampleSite::point).collect();
        let index = if basis.is_localized() {
            CellIndex::new(chart, &points, basis.delta)
        } else {
            CellIndex::with_target_occupancy(chart, &points, 4.0)
        };
        Ok(Self { samples, config, index })
    }

    pub fn samples(&self) -> &[SampleSite] {
        &self.samples
    }

    pub fn config(&self) -> &InterpolantConfig {
        &self.config
    }

    pub fn chart(&self) -> &Chart {
        self.index.chart()
    }

    pub fn index(&self) -> &CellIndex {
        &self.index
    }

    /// Ids and distances of the samples that carry weight at `u`.
    pub fn stencil(&self, u: &SurfacePoint) -> Result<Vec<(usize, f64)>, InterpolantError> {
        Ok(self
            .index
            .neighbors_within(u, self.config.basis.support_radius())?
            .into_iter()
            .map(|n| (n.id, n.distance))
            .collect())
    }

    pub fn eval_point(&self, u: &SurfacePoint) -> Result<f64, InterpolantError> {
        let stencil = self.stencil(u)?;
        if stencil.is_empty() {
            return Err(BasisError::EmptyStencil { delta: self.config.basis.delta }.into());
        }
        let distances: Vec<f64> = stencil.iter().map(|s| s.1).collect();
        let mut w = Vec::with_capacity(stencil.len());
        cardinal_weights_into(&self.config.basis, &distances, &mut w)?;
        Ok(stencil
            .iter()
            .zip(&w)
            .filter(|(_, &g)| g != 0.0)
            .map(|(&(id, _), &g)| taylor_eval(&self.samples[id], u.v) * g)
            .sum())
    }

    pub fn eval(&self, v: Vec2) -> Result<f64, InterpolantError> {
        let u = self.chart().point(v)?;
        self.eval_point(&u)
    }

    /// Evaluates at many points in parallel, results in input order.
    pub fn eval_many(&self, points: &[SurfacePoint]) -> Vec<Result<f64, InterpolantError>> {
        points.par_iter().map(|u| self.eval_point(u)).collect()
    }

    /// Compares central finite differences of the interpolant at each node
    /// with the stored derivatives of order `1..=orders` (order 0 compares
    /// values), returning the largest absolute residual. The step is `1e-4`
    /// times the distance to the nearest other node; nodes whose stencil
    /// would leave the chart are skipped.
    pub fn derivative_match_check(&self, orders: u32) -> Result<f64, InterpolantError> {
        if orders > 2 {
            return Err(InterpolantError::UnsupportedOrder(orders));
        }
        let chart = self.chart();
        let mut worst: f64 = 0.0;
        for s in &self.samples {
            let near = self.index.k_nearest(&s.point(), 2)?;
            let spacing = near.iter().map(|n| n.distance).fold(0.0, f64::max);
            let h = 1e-4 * if spacing > 0.0 { spacing } else { 1.0 };
            let offsets = [-h, 0.0, h];
            if !offsets.iter().all(|a| offsets.iter().all(|b| chart.contains([s.v[0] + a, s.v[1] + b]))) {
                continue;
            }
            let at = |a: f64, b: f64| self.eval([s.v[0] + a, s.v[1] + b]);
            let centre = at(0.0, 0.0)?;
            for (beta, &f) in &s.data {
                if beta.order() > orders {
                    continue;
                }
                let fd = match (beta.0, beta.1) {
                    (0, 0) => centre,
                    (1, 0) => (at(h, 0.0)? - at(-h, 0.0)?) / (2.0 * h),
                    (0, 1) => (at(0.0, h)? - at(0.0, -h)?) / (2.0 * h),
                    (2, 0) => (at(h, 0.0)? - 2.0 * centre + at(-h, 0.0)?) / (h * h),
                    (0, 2) => (at(0.0, h)? - 2.0 * centre + at(0.0, -h)?) / (h * h),
                    (1, 1) => (at(h, h)? - at(h, -h)? - at(-h, h)? + at(-h, -h)?) / (4.0 * h * h),
                    _ => continue,
                };
                worst = worst.max((fd - f).abs());
            }
        }
        Ok(worst)
    }
}
