//! Shared helpers for the integration tests: a seeded stream, random chart
//! points and brute-force oracles.

#![allow(dead_code)]

use std::collections::BTreeMap;

use hbsurf::basis::BasisConfig;
use hbsurf::geodesics::point_distance;
use hbsurf::geometry::{Chart, SurfacePoint, Vec2};
use hbsurf::interpolant::{MultiIndex, SampleSite};
use rand_xoshiro::rand_core::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

pub struct Stream(SplitMix64);

impl Stream {
    pub fn new(seed: u64) -> Self {
        Stream(SplitMix64::seed_from_u64(seed))
    }

    pub fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn index(&mut self, n: usize) -> usize {
        ((self.unit() * n as f64) as usize).min(n - 1)
    }

    /// Uniform point of the chart's parameter rectangle, rejected until it
    /// lies in the chart.
    pub fn chart_point(&mut self, chart: &Chart) -> SurfacePoint {
        let r = *chart.rect();
        loop {
            let v = [self.range(r.min[0], r.max[0]), self.range(r.min[1], r.max[1])];
            if let Ok(p) = chart.point(v) {
                return p;
            }
        }
    }

    /// Chart points with pairwise distance at least `min_gap`.
    pub fn spread_points(&mut self, chart: &Chart, n: usize, min_gap: f64) -> Vec<SurfacePoint> {
        let mut out: Vec<SurfacePoint> = Vec::with_capacity(n);
        let mut tries = 0;
        while out.len() < n {
            tries += 1;
            assert!(tries < 100_000, "could not place {n} points {min_gap} apart");
            let p = self.chart_point(chart);
            if out.iter().all(|q| dist(chart, &p, q) >= min_gap) {
                out.push(p);
            }
        }
        out
    }
}

pub fn dist(chart: &Chart, a: &SurfacePoint, b: &SurfacePoint) -> f64 {
    point_distance(chart, a, b).unwrap()
}

/// Samples with random data at every multi-index up to `order`.
pub fn random_samples(points: &[SurfacePoint], order: u32, rng: &mut Stream) -> Vec<SampleSite> {
    points
        .iter()
        .enumerate()
        .map(|(id, p)| {
            let data: BTreeMap<MultiIndex, f64> =
                MultiIndex::up_to(order).into_iter().map(|b| (b, rng.range(-2.0, 2.0))).collect();
            SampleSite::new(id, p.v, p.x, data).unwrap()
        })
        .collect()
}

/// Ids of all points strictly closer than `radius`, by linear scan.
pub fn brute_neighbors(chart: &Chart, points: &[SurfacePoint], u: &SurfacePoint, radius: f64) -> Vec<usize> {
    (0..points.len()).filter(|&i| dist(chart, u, &points[i]) < radius).collect()
}

pub fn brute_separation(chart: &Chart, points: &[SurfacePoint]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..points.len() {
        for j in 0..i {
            best = best.min(dist(chart, &points[i], &points[j]));
        }
    }
    0.5 * best
}

pub fn brute_fill(chart: &Chart, nodes: &[SurfacePoint], probes: &[SurfacePoint]) -> f64 {
    probes.iter().map(|p| nodes.iter().map(|z| dist(chart, p, z)).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
}

/// The interpolant written out term by term with plain power weights and no
/// log-space scaling: `Σ_i T_i(v) w_i / Σ_k w_k`, `w_i = τ_i / d_i^μ`.
pub fn reference_eval(samples: &[SampleSite], basis: &BasisConfig, v: Vec2, distances: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (s, &d) in samples.iter().zip(distances) {
        let t = hbsurf::basis::tau(basis, d);
        if t == 0.0 {
            continue;
        }
        let w = t / d.powf(basis.mu);
        let mut taylor = 0.0;
        for (b, f) in &s.data {
            let fact = [1.0, 1.0, 2.0, 6.0, 24.0];
            taylor += f * (v[0] - s.v[0]).powi(b.0 as i32) * (v[1] - s.v[1]).powi(b.1 as i32)
                / (fact[b.0 as usize] * fact[b.1 as usize]);
        }
        num += w * taylor;
        den += w;
    }
    num / den
}

/// Cardinal weights at local coordinates `v`, with distances measured on `chart`.
pub fn weights_at(chart: &Chart, nodes: &[SurfacePoint], basis: &BasisConfig, v: Vec2) -> Vec<f64> {
    let u = chart.point(v).unwrap();
    let d: Vec<f64> = nodes.iter().map(|z| dist(chart, &u, z)).collect();
    hbsurf::basis::cardinal_weights(basis, &d).unwrap()
}

/// Largest `|D^β g_i(z_j)|` over all `i`, `j` and `1 ≤ |β| ≤ k`, by central
/// differences with step `h` in local coordinates. Nodes whose stencil leaves
/// the chart are skipped.
pub fn max_weight_derivative_at_nodes(chart: &Chart, nodes: &[SurfacePoint], basis: &BasisConfig, h: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for z in nodes {
        let offsets = [-h, 0.0, h];
        if !offsets.iter().all(|a| offsets.iter().all(|b| chart.contains([z.v[0] + a, z.v[1] + b]))) {
            continue;
        }
        let at = |a: f64, b: f64| weights_at(chart, nodes, basis, [z.v[0] + a, z.v[1] + b]);
        let c = at(0.0, 0.0);
        let (xp, xm, yp, ym) = (at(h, 0.0), at(-h, 0.0), at(0.0, h), at(0.0, -h));
        let (pp, pm, mp, mm) = (at(h, h), at(h, -h), at(-h, h), at(-h, -h));
        for i in 0..nodes.len() {
            let mut d = vec![(xp[i] - xm[i]) / (2.0 * h), (yp[i] - ym[i]) / (2.0 * h)];
            if basis.k >= 2 {
                d.push((xp[i] - 2.0 * c[i] + xm[i]) / (h * h));
                d.push((yp[i] - 2.0 * c[i] + ym[i]) / (h * h));
                d.push((pp[i] - pm[i] - mp[i] + mm[i]) / (4.0 * h * h));
            }
            worst = d.iter().fold(worst, |m, x| m.max(x.abs()));
        }
    }
    worst
}
