//! Node and evaluation point generation, point-set statistics and a
//! neighbor index keyed on geodesic distance.

use std::f64::consts::PI;

use rand_xoshiro::rand_core::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geodesics::{point_distance, GeodesicError};
use crate::geometry::{dist3, Chart, SurfaceKind, SurfacePoint, Vec2, Vec3};

#[derive(Debug, Error, Clone)]
pub enum PointSetError {
    #[error("nodes {0} and {1} coincide")]
    DegenerateSet(usize, usize),
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error(transparent)]
    Geodesic(#[from] GeodesicError),
}

/// Van der Corput radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    r
}

/// The two-dimensional Halton sequence in bases 2 and 3, indices
/// `skip + 1 ..= skip + count`.
pub fn halton(count: usize, skip: u64) -> Vec<Vec2> {
    (1..=count as u64).map(|i| halton_pair(skip + i)).collect()
}

fn halton_pair(index: u64) -> Vec2 {
    [radical_inverse(index, 2), radical_inverse(index, 3)]
}

/// Maps a unit-square pair to local coordinates of the experiment chart
/// for `kind`, or `None` if the image falls outside the chart.
fn unit_square_to_chart(kind: SurfaceKind, chart: &Chart, [p, q]: Vec2) -> Option<Vec2> {
    let v = match kind {
        SurfaceKind::Sphere => {
            let s = 3f64.sqrt();
            let v = [-0.5 * s + s * p, -0.5 * s + s * q];
            if v[0] * v[0] + v[1] * v[1] >= 0.75 {
                return None;
            }
            v
        }
        SurfaceKind::Cylinder => {
            let theta = 2.0 * PI * p;
            if theta.cos() >= -0.5 {
                return None;
            }
            [theta, q]
        }
        SurfaceKind::Cone => {
            let theta = 2.0 * PI * p;
            if theta.cos() >= 0.0 {
                return None;
            }
            [theta, 2.0 * q]
        }
        SurfaceKind::Torus => [-PI + 2.0 * PI * p, -PI + 2.0 * PI * q],
    };
    chart.contains(v).then_some(v)
}

fn lift(chart: &Chart, v: Vec2) -> SurfacePoint {
    chart.point(v).expect("generated point lies in the chart")
}

/// `count` Halton nodes on the experiment chart of `kind`, starting after
/// `skip` indices and discarding pairs that map outside the chart.
pub fn nodes_on_surface_with_skip(kind: SurfaceKind, count: usize, skip: u64) -> Vec<SurfacePoint> {
    let chart = kind.experiment_chart();
    let mut out = Vec::with_capacity(count);
    let mut index = skip;
    while out.len() < count {
        index += 1;
        if let Some(v) = unit_square_to_chart(kind, &chart, halton_pair(index)) {
            out.push(lift(&chart, v));
        }
    }
    out
}

pub fn nodes_on_surface(kind: SurfaceKind, count: usize) -> Vec<SurfacePoint> {
    nodes_on_surface_with_skip(kind, count, 0)
}

/// Generalized spiral points on the unit sphere, `n` of them, from the south
/// pole to the north pole.
pub fn sphere_spiral(n: usize) -> Vec<Vec3> {
    assert!(n >= 2, "a spiral needs at least two points");
    let mut out = Vec::with_capacity(n);
    let mut phi: f64 = 0.0;
    let step = 3.6 / (n as f64).sqrt();
    for k in 1..=n {
        let h = -1.0 + 2.0 * (k - 1) as f64 / (n - 1) as f64;
        if k == 1 || k == n {
            phi = 0.0;
        } else {
            phi = (phi + step / (1.0 - h * h).sqrt()).rem_euclid(2.0 * PI);
        }
        let s = (1.0 - h * h).max(0.0).sqrt();
        out.push([s * phi.cos(), s * phi.sin(), h]);
    }
    out
}

/// Evaluation points on the experiment chart of `kind`.
///
/// Sphere: the smallest generalized spiral with at least `n_eval` points in
/// the cap, first `n_eval` of them kept. Other surfaces: uniform pairs from a
/// SplitMix64 stream seeded with `seed`, mapped and filtered like nodes.
pub fn eval_points(kind: SurfaceKind, n_eval: usize, seed: u64) -> Vec<SurfacePoint> {
    let chart = kind.experiment_chart();
    match kind {
        SurfaceKind::Sphere => {
            let mut n = 4 * n_eval.max(1);
            loop {
                let inside: Vec<SurfacePoint> = sphere_spiral(n)
                    .into_iter()
                    .filter(|x| x[2] > 0.5)
                    .map(|x| lift(&chart, [x[0], x[1]]))
                    .take(n_eval)
                    .collect();
                if inside.len() == n_eval {
                    return inside;
                }
                n += 1;
            }
        }
        _ => {
            let mut rng = SplitMix64::seed_from_u64(seed);
            let mut out = Vec::with_capacity(n_eval);
            while out.len() < n_eval {
                let p = unit_f64(&mut rng);
                let q = unit_f64(&mut rng);
                if let Some(v) = unit_square_to_chart(kind, &chart, [p, q]) {
                    out.push(lift(&chart, v));
                }
            }
            out
        }
    }
}

fn unit_f64(rng: &mut SplitMix64) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// `side × side` grid over the chart's parameter rectangle, endpoints
/// included, keeping only points inside the chart.
pub fn probe_grid(chart: &Chart, side: usize) -> Vec<SurfacePoint> {
    assert!(side >= 2);
    let r = chart.rect();
    let e = r.extent();
    let mut out = Vec::with_capacity(side * side);
    for i in 0..side {
        for j in 0..side {
            let v = [r.min[0] + e[0] * i as f64 / (side - 1) as f64, r.min[1] + e[1] * j as f64 / (side - 1) as f64];
            if let Ok(p) = chart.point(v) {
                out.push(p);
            }
        }
    }
    out
}

pub const PROBE_GRID_SIDE: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSetStats {
    pub fill_distance: f64,
    pub separation: f64,
    pub n: usize,
}

/// Largest distance from a probe to its nearest node.
pub fn fill_distance(chart: &Chart, nodes: &[SurfacePoint], probes: &[SurfacePoint]) -> Result<f64, PointSetError> {
    if nodes.is_empty() {
        return Err(PointSetError::TooFewPoints { needed: 1, got: 0 });
    }
    let index = CellIndex::with_target_occupancy(chart, nodes, 4.0);
    let mut h: f64 = 0.0;
    for p in probes {
        h = h.max(index.nearest(p)?.1);
    }
    Ok(h)
}

/// Half the smallest pairwise distance.
pub fn separation_distance(chart: &Chart, nodes: &[SurfacePoint]) -> Result<f64, PointSetError> {
    if nodes.len() < 2 {
        return Err(PointSetError::TooFewPoints { needed: 2, got: nodes.len() });
    }
    let index = CellIndex::with_target_occupancy(chart, nodes, 4.0);
    let mut best = f64::INFINITY;
    for (i, p) in nodes.iter().enumerate() {
        let near = index.k_nearest(p, 2)?;
        let other = near.iter().find(|n| n.id != i).expect("two points in the index");
        if other.distance == 0.0 {
            return Err(PointSetError::DegenerateSet(i.min(other.id), i.max(other.id)));
        }
        best = best.min(other.distance);
    }
    Ok(0.5 * best)
}

pub fn point_set_stats(
    chart: &Chart,
    nodes: &[SurfacePoint],
    probes: &[SurfacePoint],
) -> Result<PointSetStats, PointSetError> {
    Ok(PointSetStats {
        fill_distance: fill_distance(chart, nodes, probes)?,
        separation: separation_distance(chart, nodes)?,
        n: nodes.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    pub id: usize,
    pub distance: f64,
}

/// Uniform grid of cubic cells over the ambient positions of a node set.
///
/// Since no curve on the surface is shorter than the chord, all nodes within
/// geodesic distance `r` of a query lie within chord distance `r`, so the
/// cells meeting the chord ball give a complete candidate set. Candidates are
/// then filtered by exact geodesic distance.
#[derive(Clone, Debug)]
pub struct CellIndex {
    chart: Chart,
    points: Vec<SurfacePoint>,
    origin: Vec3,
    side: f64,
    dims: [usize; 3],
    /// CSR layout: ids of cell `c` are `ids[start[c]..start[c + 1]]`.
    start: Vec<usize>,
    ids: Vec<usize>,
}

const MAX_CELLS_PER_NODE: usize = 8;

impl CellIndex {
    /// Builds the index with cells of roughly `side` (enlarged if it would
    /// create far more cells than nodes).
    pub fn new(chart: &Chart, points: &[SurfacePoint], side: f64) -> Self {
        let (lo, hi) = bounding_box(points);
        let ext = [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]];
        let max_cells = (MAX_CELLS_PER_NODE * points.len()).max(64) as f64;
        let mut side = if side.is_finite() && side > 0.0 { side } else { f64::INFINITY };
        let cells = |s: f64| ext.iter().map(|e| (e / s).floor() + 1.0).product::<f64>();
        if !side.is_finite() {
            side = ext.iter().cloned().fold(0.0, f64::max).max(1e-300) * 2.0;
        }
        while cells(side) > max_cells {
            side *= 1.5;
        }
        let dims = ext.map(|e| (e / side).floor() as usize + 1);

        let mut index = Self {
            chart: chart.clone(),
            points: points.to_vec(),
            origin: lo,
            side,
            dims,
            start: Vec::new(),
            ids: Vec::new(),
        };
        let ncell = dims[0] * dims[1] * dims[2];
        let mut count = vec![0usize; ncell + 1];
        let cell_of: Vec<usize> = points.iter().map(|p| index.flat(index.cell_coords(p.x))).collect();
        for &c in &cell_of {
            count[c + 1] += 1;
        }
        for c in 0..ncell {
            count[c + 1] += count[c];
        }
        let mut fill = count.clone();
        let mut ids = vec![0; points.len()];
        for (id, &c) in cell_of.iter().enumerate() {
            ids[fill[c]] = id;
            fill[c] += 1;
        }
        index.start = count;
        index.ids = ids;
        index
    }

    /// Cell side chosen so that a cell holds about `occupancy` nodes on a
    /// surface patch.
    pub fn with_target_occupancy(chart: &Chart, points: &[SurfacePoint], occupancy: f64) -> Self {
        let (lo, hi) = bounding_box(points);
        let mut ext: Vec<f64> = (0..3).map(|p| hi[p] - lo[p]).collect();
        ext.sort_by(|a, b| b.total_cmp(a));
        // a surface patch spreads nodes over roughly the two largest extents
        let area = (ext[0] * ext[1]).max(ext[0] * ext[0] * 1e-6).max(1e-300);
        let side = (occupancy * area / points.len().max(1) as f64).sqrt();
        Self::new(chart, points, side)
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn points(&self) -> &[SurfacePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn cell_side(&self) -> f64 {
        self.side
    }

    fn cell_coords(&self, x: Vec3) -> [i64; 3] {
        let mut c = [0i64; 3];
        for p in 0..3 {
            let t = ((x[p] - self.origin[p]) / self.side).floor();
            c[p] = (t as i64).clamp(0, self.dims[p] as i64 - 1);
        }
        c
    }

    fn flat(&self, c: [i64; 3]) -> usize {
        (c[0] as usize * self.dims[1] + c[1] as usize) * self.dims[2] + c[2] as usize
    }

    fn cell_ids(&self, c: [i64; 3]) -> &[usize] {
        let f = self.flat(c);
        &self.ids[self.start[f]..self.start[f + 1]]
    }

    /// Calls `visit` with the ids of every cell meeting the cube of half-width
    /// `radius` around `x`.
    fn for_each_in_box(&self, x: Vec3, radius: f64, mut visit: impl FnMut(usize)) {
        let mut lo = [0i64; 3];
        let mut hi = [0i64; 3];
        for p in 0..3 {
            let d = self.dims[p] as i64 - 1;
            let a = ((x[p] - radius - self.origin[p]) / self.side).floor();
            let b = ((x[p] + radius - self.origin[p]) / self.side).floor();
            lo[p] = if a.is_finite() { (a.max(-1.0) as i64).clamp(0, d) } else { 0 };
            hi[p] = if b.is_finite() { (b.min(d as f64 + 1.0) as i64).clamp(0, d) } else { d };
            if b < 0.0 || a > d as f64 {
                return;
            }
        }
        for i in lo[0]..=hi[0] {
            for j in lo[1]..=hi[1] {
                for k in lo[2]..=hi[2] {
                    for &id in self.cell_ids([i, j, k]) {
                        visit(id);
                    }
                }
            }
        }
    }

    /// Nodes at geodesic distance strictly below `radius` from `u`, sorted by id.
    pub fn neighbors_within(&self, u: &SurfacePoint, radius: f64) -> Result<Vec<Neighbor>, GeodesicError> {
        let mut cand = Vec::new();
        self.for_each_in_box(u.x, radius, |id| cand.push(id));
        cand.sort_unstable();
        let mut out = Vec::with_capacity(cand.len());
        for id in cand {
            let p = &self.points[id];
            if dist3(p.x, u.x) >= radius {
                continue;
            }
            let d = point_distance(&self.chart, u, p)?;
            if d < radius {
                out.push(Neighbor { id, distance: d });
            }
        }
        Ok(out)
    }

    /// The nearest node and its distance. Ties go to the smaller id.
    pub fn nearest(&self, u: &SurfacePoint) -> Result<(usize, f64), GeodesicError> {
        assert!(!self.points.is_empty(), "nearest() on an empty index");
        let c = self.cell_coords(u.x);
        let max_ring = *self.dims.iter().max().unwrap() as i64;
        let mut best = (usize::MAX, f64::INFINITY);
        for r in 0..=max_ring {
            self.for_each_ring(c, r, |id| {
                let p = &self.points[id];
                if dist3(p.x, u.x) > best.1 {
                    return Ok(());
                }
                let d = point_distance(&self.chart, u, p)?;
                if d < best.1 || (d == best.1 && id < best.0) {
                    best = (id, d);
                }
                Ok(())
            })?;
            // every node in ring r + 1 or beyond is at least this far away
            if best.1 < r as f64 * self.side {
                break;
            }
        }
        Ok(best)
    }

    fn for_each_ring(
        &self,
        c: [i64; 3],
        r: i64,
        mut visit: impl FnMut(usize) -> Result<(), GeodesicError>,
    ) -> Result<(), GeodesicError> {
        let d = self.dims.map(|x| x as i64);
        for i in (c[0] - r).max(0)..=(c[0] + r).min(d[0] - 1) {
            for j in (c[1] - r).max(0)..=(c[1] + r).min(d[1] - 1) {
                for k in (c[2] - r).max(0)..=(c[2] + r).min(d[2] - 1) {
                    let shell = (i - c[0]).abs().max((j - c[1]).abs()).max((k - c[2]).abs());
                    if shell != r {
                        continue;
                    }
                    for &id in self.cell_ids([i, j, k]) {
                        visit(id)?;
                    }
                }
            }
        }
        Ok(())
    }

    /// The `k` nearest nodes sorted by distance (ties by id). Returns all
    /// nodes if there are fewer than `k`.
    pub fn k_nearest(&self, u: &SurfacePoint, k: usize) -> Result<Vec<Neighbor>, GeodesicError> {
        let k = k.min(self.points.len());
        if k == 0 {
            return Ok(Vec::new());
        }
        let (lo, hi) = bounding_box(&self.points);
        let diag = dist3(lo, hi) + dist3(u.x, lo);
        let mut radius = self.side;
        loop {
            let found = if radius > diag {
                self.points
                    .iter()
                    .enumerate()
                    .map(|(id, p)| Ok(Neighbor { id, distance: point_distance(&self.chart, u, p)? }))
                    .collect::<Result<Vec<_>, GeodesicError>>()?
            } else {
                self.neighbors_within(u, radius)?
            };
            if found.len() >= k {
                let mut found = found;
                found.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.id.cmp(&b.id)));
                found.truncate(k);
                return Ok(found);
            }
            radius *= 2.0;
        }
    }
}

fn bounding_box(points: &[SurfacePoint]) -> (Vec3, Vec3) {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in points {
        for i in 0..3 {
            lo[i] = lo[i].min(p.x[i]);
            hi[i] = hi[i].max(p.x[i]);
        }
    }
    if points.is_empty() {
        return ([0.0; 3], [0.0; 3]);
    }
    (lo, hi)
}

/// Smallest radius giving every query point at least `min_nodes` nodes at
/// strictly smaller distance (all nodes if there are fewer).
pub fn adaptive_radius(index: &CellIndex, queries: &[SurfacePoint], min_nodes: usize) -> Result<f64, GeodesicError> {
    let mut r: f64 = 0.0;
    for u in queries {
        if let Some(last) = index.k_nearest(u, min_nodes)?.last() {
            r = r.max(last.distance);
        }
    }
    Ok(r * (1.0 + 1e-9))
}

/// Default number of nodes the adaptive radius guarantees per query.
pub const ADAPTIVE_MIN_NODES: usize = 12;
