//! Geodesic boundary value problem by Newton relaxation of a polyline.
//!
//! The path is discretized at `N + 1` equally spaced parameter values with
//! fixed endpoints. Interior points are driven to zero of the central
//! difference residual of the geodesic equations
//!
//! ```text
//! (v[m+1] − 2 v[m] + v[m−1]) / h² + Γ(v[m]) (w, w) = 0,   w = (v[m+1] − v[m−1]) / 2h
//! ```
//!
//! with a damped Newton iteration whose Jacobian is block tridiagonal with 2×2
//! blocks. The relaxation runs on `N` and `2N` segments; the two polyline
//! lengths are combined by Richardson extrapolation, which removes the
//! leading `h²` term of the discretization error.

use crate::geometry::{Chart, Mat2, Tensor3, Vec2};

use super::{GeodesicError, GeodesicPath};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BvpSettings {
    pub segments: usize,
    pub max_iters: usize,
    /// Convergence threshold on the max-norm of a Newton update.
    pub tol: f64,
}

impl Default for BvpSettings {
    fn default() -> Self {
        Self { segments: 64, max_iters: 200, tol: 1e-10 }
    }
}

impl BvpSettings {
    fn validate(&self) -> Result<(), GeodesicError> {
        if self.segments < 8 {
            return Err(GeodesicError::InvalidSettings(format!("need at least 8 segments, got {}", self.segments)));
        }
        if !(self.tol > 0.0) {
            return Err(GeodesicError::InvalidSettings(format!("tolerance must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

/// Shortest geodesic between `a` and `b`, started from the straight segment
/// in parameter space.
pub fn geodesic_bvp(chart: &Chart, a: Vec2, b: Vec2, settings: &BvpSettings) -> Result<GeodesicPath, GeodesicError> {
    settings.validate()?;
    chart.metric_data(a)?;
    chart.metric_data(b)?;
    if a == b {
        return Err(GeodesicError::CoincidentEndpoints);
    }

    let n = settings.segments;
    let mut coarse: Vec<Vec2> = (0..=n)
        .map(|i| {
            let t = i as f64 / n as f64;
            [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
        })
        .collect();
    if coarse.iter().any(|v| !chart.contains(*v)) {
        return Err(GeodesicError::SegmentLeavesChart);
    }
    coarse[n] = b;
    relax(chart, &mut coarse, settings)?;
    let coarse_length = chart.curve_length(&coarse)?;

    let mut fine = Vec::with_capacity(2 * n + 1);
    for w in coarse.windows(2) {
        fine.push(w[0]);
        fine.push([0.5 * (w[0][0] + w[1][0]), 0.5 * (w[0][1] + w[1][1])]);
    }
    fine.push(b);
    relax(chart, &mut fine, settings)?;

    let mut arclength = Vec::with_capacity(fine.len());
    arclength.push(0.0);
    let mut acc = 0.0;
    for w in fine.windows(2) {
        acc += chart.curve_length(w)?;
        arclength.push(acc);
    }
    let fine_length = acc;
    let total = (4.0 * fine_length - coarse_length) / 3.0;
    let scale = total / fine_length;
    for s in arclength.iter_mut() {
        *s *= scale;
    }
    let last = arclength.len() - 1;
    arclength[last] = total;
    Ok(GeodesicPath::new(fine, arclength))
}

fn christoffel_at(chart: &Chart, v: Vec2) -> Result<Tensor3, GeodesicError> {
    Ok(chart.metric_data(v)?.christoffel)
}

/// `Γ^k_ij w_i w_j`.
fn contract(gamma: &Tensor3, w: Vec2) -> Vec2 {
    let mut q = [0.0; 2];
    for k in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                q[k] += gamma[k][i][j] * w[i] * w[j];
            }
        }
    }
    q
}

fn residual(chart: &Chart, path: &[Vec2]) -> Result<Vec<Vec2>, GeodesicError> {
    let n = path.len() - 1;
    let h = 1.0 / n as f64;
    (1..n)
        .map(|m| {
            let (prev, cur, next) = (path[m - 1], path[m], path[m + 1]);
            let w = [(next[0] - prev[0]) / (2.0 * h), (next[1] - prev[1]) / (2.0 * h)];
            let q = contract(&christoffel_at(chart, cur)?, w);
            Ok([
                (next[0] - 2.0 * cur[0] + prev[0]) / (h * h) + q[0],
                (next[1] - 2.0 * cur[1] + prev[1]) / (h * h) + q[1],
            ])
        })
        .collect()
}

fn max_norm(r: &[Vec2]) -> f64 {
    r.iter().fold(0.0f64, |m, x| m.max(x[0].abs()).max(x[1].abs()))
}

/// Derivative of `Γ(v)(w, w)` with respect to `v`, by central differences
/// (one-sided at the chart boundary).
fn contract_position_derivative(chart: &Chart, v: Vec2, w: Vec2) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for l in 0..2 {
        let step = 1e-6 * v[l].abs().max(1.0);
        let mut vp = v;
        let mut vm = v;
        vp[l] += step;
        vm[l] -= step;
        let (qp, qm, span) = match (christoffel_at(chart, vp), christoffel_at(chart, vm)) {
            (Ok(gp), Ok(gm)) => (contract(&gp, w), contract(&gm, w), 2.0 * step),
            (Ok(gp), Err(_)) => match christoffel_at(chart, v) {
                Ok(g0) => (contract(&gp, w), contract(&g0, w), step),
                Err(_) => continue,
            },
            (Err(_), Ok(gm)) => match christoffel_at(chart, v) {
                Ok(g0) => (contract(&g0, w), contract(&gm, w), step),
                Err(_) => continue,
            },
            _ => continue,
        };
        for k in 0..2 {
            out[k][l] = (qp[k] - qm[k]) / span;
        }
    }
    out
}

fn relax(chart: &Chart, path: &mut [Vec2], settings: &BvpSettings) -> Result<(), GeodesicError> {
    let n = path.len() - 1;
    let h = 1.0 / n as f64;
    let inv_h2 = 1.0 / (h * h);
    let mut res = residual(chart, path)?;
    let mut res_norm = max_norm(&res);

    for _ in 0..settings.max_iters {
        let mut lower = Vec::with_capacity(n - 1);
        let mut diag = Vec::with_capacity(n - 1);
        let mut upper = Vec::with_capacity(n - 1);
        for m in 1..n {
            let (prev, cur, next) = (path[m - 1], path[m], path[m + 1]);
            let w = [(next[0] - prev[0]) / (2.0 * h), (next[1] - prev[1]) / (2.0 * h)];
            let gamma = christoffel_at(chart, cur)?;
            // ∂(Γ(w, w))_k / ∂w_l = 2 Γ^k_lj w_j
            let mut dq_dw = [[0.0; 2]; 2];
            for k in 0..2 {
                for l in 0..2 {
                    dq_dw[k][l] = 2.0 * (gamma[k][l][0] * w[0] + gamma[k][l][1] * w[1]);
                }
            }
            let dq_dv = contract_position_derivative(chart, cur, w);
            let mut lo = [[0.0; 2]; 2];
            let mut di = [[0.0; 2]; 2];
            let mut up = [[0.0; 2]; 2];
            for k in 0..2 {
                for l in 0..2 {
                    let id = if k == l { inv_h2 } else { 0.0 };
                    lo[k][l] = id - dq_dw[k][l] / (2.0 * h);
                    up[k][l] = id + dq_dw[k][l] / (2.0 * h);
                    di[k][l] = -2.0 * id + dq_dv[k][l];
                }
            }
            lower.push(lo);
            diag.push(di);
            upper.push(up);
        }
        let rhs: Vec<Vec2> = res.iter().map(|r| [-r[0], -r[1]]).collect();
        let delta = solve_block_tridiagonal(&lower, &diag, &upper, &rhs)
            .ok_or(GeodesicError::NoConvergence { iterations: 0, residual: res_norm })?;
        let delta_norm = max_norm(&delta);

        let mut lambda = 1.0;
        let (trial, trial_res) = loop {
            let trial: Vec<Vec2> = path
                .iter()
                .enumerate()
                .map(|(m, v)| {
                    if m == 0 || m == n {
                        *v
                    } else {
                        let d = delta[m - 1];
                        [v[0] + lambda * d[0], v[1] + lambda * d[1]]
                    }
                })
                .collect();
            let small_step = lambda * delta_norm < settings.tol;
            if trial.iter().all(|v| chart.contains(*v)) {
                if let Ok(r) = residual(chart, &trial) {
                    if max_norm(&r) <= res_norm || small_step {
                        break (trial, r);
                    }
                }
            }
            lambda *= 0.5;
            if lambda < 1e-8 {
                return Err(GeodesicError::NoConvergence { iterations: 0, residual: res_norm });
            }
        };
        path.copy_from_slice(&trial);
        res = trial_res;
        res_norm = max_norm(&res);
        if lambda * delta_norm < settings.tol {
            return Ok(());
        }
    }
    Err(GeodesicError::NoConvergence { iterations: settings.max_iters, residual: res_norm })
}

fn mat_vec(a: &Mat2, x: Vec2) -> Vec2 {
    [a[0][0] * x[0] + a[0][1] * x[1], a[1][0] * x[0] + a[1][1] * x[1]]
}

fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn inverse(a: &Mat2) -> Option<Mat2> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let scale = a.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    if det.abs() <= 1e-14 * scale * scale || !det.is_finite() {
        return None;
    }
    Some([[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]])
}

/// Block Thomas algorithm; `lower[0]` and `upper[last]` are ignored.
fn solve_block_tridiagonal(lower: &[Mat2], diag: &[Mat2], upper: &[Mat2], rhs: &[Vec2]) -> Option<Vec<Vec2>> {
    let len = diag.len();
    let mut c_prime: Vec<Mat2> = Vec::with_capacity(len);
    let mut r_prime: Vec<Vec2> = Vec::with_capacity(len);
    for i in 0..len {
        let mut d = diag[i];
        let mut r = rhs[i];
        if i > 0 {
            let lc = mat_mul(&lower[i], &c_prime[i - 1]);
            let lr = mat_vec(&lower[i], r_prime[i - 1]);
            for k in 0..2 {
                r[k] -= lr[k];
                for l in 0..2 {
                    d[k][l] -= lc[k][l];
                }
            }
        }
        let d_inv = inverse(&d)?;
        c_prime.push(mat_mul(&d_inv, &upper[i]));
        r_prime.push(mat_vec(&d_inv, r));
    }
    let mut x = vec![[0.0; 2]; len];
    for i in (0..len).rev() {
        x[i] = r_prime[i];
        if i + 1 < len {
            let cx = mat_vec(&c_prime[i], x[i + 1]);
            x[i][0] -= cx[0];
            x[i][1] -= cx[1];
        }
    }
    Some(x)
}
