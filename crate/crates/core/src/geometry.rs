//! Charts of parametric surfaces and their differential data.
//!
//! A [`Chart`] pairs a [`Surface`] parametrization with the closed parameter
//! rectangle it is used on. Every surface here is a two-dimensional patch in
//! three-dimensional space, so Jacobians are 3×2 and Hessians are 3×2×2.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vec2 = [f64; 2];
pub type Vec3 = [f64; 3];
/// `jac[p][a] = ∂u_p / ∂v_a`.
pub type Jacobian = [[f64; 2]; 3];
/// `hess[p][a][b] = ∂²u_p / ∂v_a ∂v_b`.
pub type Hessian = [[[f64; 2]; 2]; 3];
pub type Mat2 = [[f64; 2]; 2];
/// `t[k][i][j]`, symmetric in the last two indices.
pub type Tensor3 = [[[f64; 2]; 2]; 2];

/// Determinant threshold below which the metric is treated as degenerate.
pub const SINGULAR_DET: f64 = 1e-14;

/// Steps for central differences of a revolution profile.
const PROFILE_FD_STEP: f64 = 1e-6;
const PROFILE_FD_STEP2: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("local point ({0}, {1}) lies outside the chart")]
    OutOfChart(f64, f64),
    #[error("metric is singular at ({v1}, {v2}): det g = {det:e}")]
    SingularMetric { v1: f64, v2: f64, det: f64 },
    #[error("a path needs at least two points, got {0}")]
    DegeneratePath(usize),
}

/// Closed rectangle `[min[0], max[0]] × [min[1], max[1]]` in local coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamRect {
    pub min: Vec2,
    pub max: Vec2,
}

impl ParamRect {
    pub fn new(min: Vec2, max: Vec2) -> Self {
        assert!(min[0] < max[0] && min[1] < max[1], "empty parameter rectangle");
        Self { min, max }
    }

    pub fn contains(&self, v: Vec2) -> bool {
        v[0] >= self.min[0] && v[0] <= self.max[0] && v[1] >= self.min[1] && v[1] <= self.max[1]
    }

    pub fn extent(&self) -> Vec2 {
        [self.max[0] - self.min[0], self.max[1] - self.min[1]]
    }
}

/// Generating curve `(radius(t), height(t))` of a surface of revolution.
#[derive(Clone)]
pub struct Profile {
    radius: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    height: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl Profile {
    pub fn new<R, H>(radius: R, height: H) -> Self
    where
        R: Fn(f64) -> f64 + Send + Sync + 'static,
        H: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self { radius: Arc::new(radius), height: Arc::new(height) }
    }

    fn eval(&self, t: f64) -> (f64, f64) {
        ((self.radius)(t), (self.height)(t))
    }

    fn d1(&self, t: f64) -> (f64, f64) {
        let h = PROFILE_FD_STEP * t.abs().max(1.0);
        let (ra, ha) = self.eval(t + h);
        let (rb, hb) = self.eval(t - h);
        ((ra - rb) / (2.0 * h), (ha - hb) / (2.0 * h))
    }

    fn d2(&self, t: f64) -> (f64, f64) {
        let h = PROFILE_FD_STEP2 * t.abs().max(1.0);
        let (ra, ha) = self.eval(t + h);
        let (r0, h0) = self.eval(t);
        let (rb, hb) = self.eval(t - h);
        ((ra - 2.0 * r0 + rb) / (h * h), (ha - 2.0 * h0 + hb) / (h * h))
    }
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Profile(..)")
    }
}

/// A parametrized surface patch in R³.
#[derive(Clone, Debug)]
pub enum Surface {
    /// Unit sphere, projection chart `(x, y) ↦ (x, y, √(1 − x² − y²))`,
    /// restricted to the cap `z ≥ min_height`.
    SphereCap { min_height: f64 },
    /// Unit sphere in spherical coordinates `(polar θ, azimuth φ)`.
    SphereAngles,
    /// `(θ, z) ↦ (r cos θ, r sin θ, z)`.
    Cylinder { radius: f64 },
    /// `(θ, z) ↦ ((h − z) r / h · cos θ, (h − z) r / h · sin θ, z)`.
    Cone { radius: f64, height: f64 },
    /// `(v1, v2) ↦ ((R + r cos v1) cos v2, (R + r cos v1) sin v2, r sin v1)`.
    Torus { major: f64, minor: f64 },
    /// `(t, φ) ↦ (α(t) cos φ, α(t) sin φ, β(t))`.
    Revolution(Profile),
}

/// Surface families exposed through configuration files and the CLI.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceKind {
    Sphere,
    Cylinder,
    Cone,
    Torus,
}

impl SurfaceKind {
    /// The chart each experiment on this surface lives in.
    ///
    /// Sphere: cap `z > 0.5` in the projection chart. Cylinder `r = 1`:
    /// `x < −0.5`, i.e. `θ ∈ [2π/3, 4π/3]`, `z ∈ [0, 1]`. Cone `r = 1, h = 2`:
    /// `x < 0`, i.e. `θ ∈ [π/2, 3π/2]`, `z ∈ [0, 0.95 h]` (apex excluded).
    /// Torus `R = 2, r = 1` on `[−π, π]²`.
    pub fn experiment_chart(self) -> Chart {
        match self {
            SurfaceKind::Sphere => Chart::sphere_cap(0.5),
            SurfaceKind::Cylinder => Chart::new(
                Surface::Cylinder { radius: 1.0 },
                ParamRect::new([2.0 * PI / 3.0, 0.0], [4.0 * PI / 3.0, 1.0]),
            ),
            SurfaceKind::Cone => Chart::new(
                Surface::Cone { radius: 1.0, height: 2.0 },
                ParamRect::new([PI / 2.0, 0.0], [1.5 * PI, 0.95 * 2.0]),
            ),
            SurfaceKind::Torus => {
                Chart::new(Surface::Torus { major: 2.0, minor: 1.0 }, ParamRect::new([-PI, -PI], [PI, PI]))
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SurfaceKind::Sphere => "sphere",
            SurfaceKind::Cylinder => "cylinder",
            SurfaceKind::Cone => "cone",
            SurfaceKind::Torus => "torus",
        }
    }
}

impl std::str::FromStr for SurfaceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sphere" => Ok(SurfaceKind::Sphere),
            "cylinder" => Ok(SurfaceKind::Cylinder),
            "cone" => Ok(SurfaceKind::Cone),
            "torus" => Ok(SurfaceKind::Torus),
            other => Err(format!("unknown surface '{other}' (expected sphere|cylinder|cone|torus)")),
        }
    }
}

impl fmt::Display for SurfaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A point on a chart: local coordinates together with the ambient position.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub v: Vec2,
    pub x: Vec3,
}

/// Metric tensor, its inverse, derivatives and Christoffel symbols at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricData {
    pub g: Mat2,
    pub g_inv: Mat2,
    /// `dg[k][i][j] = ∂g_ij / ∂v_k`.
    pub dg: Tensor3,
    /// Christoffel symbols of the second kind, `christoffel[k][i][j] = Γ^k_ij`.
    pub christoffel: Tensor3,
}

/// Value, gradient and Hessian of an ambient function at a point of R³.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AmbientJet {
    pub value: f64,
    pub gradient: Vec3,
    pub hessian: [[f64; 3]; 3],
}

/// Partial derivatives of `f ∘ φ⁻¹` in local coordinates, up to order two.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalJet {
    pub value: f64,
    pub d1: Vec2,
    pub d2: Mat2,
}

#[derive(Clone, Debug)]
pub struct Chart {
    surface: Surface,
    rect: ParamRect,
}

impl Chart {
    pub fn new(surface: Surface, rect: ParamRect) -> Self {
        Self { surface, rect }
    }

    /// Projection chart of the unit-sphere cap `z ≥ min_height`.
    pub fn sphere_cap(min_height: f64) -> Self {
        assert!((0.0..1.0).contains(&min_height));
        let a = (1.0 - min_height * min_height).sqrt();
        Self::new(Surface::SphereCap { min_height }, ParamRect::new([-a, -a], [a, a]))
    }

    pub fn surface(&self) -> &Surface {
        &self.surface
    }

    pub fn rect(&self) -> &ParamRect {
        &self.rect
    }

    /// Whether `v` lies in the chart's closed domain.
    pub fn contains(&self, v: Vec2) -> bool {
        if !self.rect.contains(v) {
            return false;
        }
        match self.surface {
            Surface::SphereCap { min_height } => v[0] * v[0] + v[1] * v[1] <= 1.0 - min_height * min_height,
            _ => true,
        }
    }

    fn check(&self, v: Vec2) -> Result<(), GeometryError> {
        if v[0].is_finite() && v[1].is_finite() && self.contains(v) {
            Ok(())
        } else {
            Err(GeometryError::OutOfChart(v[0], v[1]))
        }
    }

    pub fn forward(&self, v: Vec2) -> Result<Vec3, GeometryError> {
        self.check(v)?;
        Ok(self.forward_unchecked(v))
    }

    pub fn point(&self, v: Vec2) -> Result<SurfacePoint, GeometryError> {
        Ok(SurfacePoint { v, x: self.forward(v)? })
    }

    pub(crate) fn forward_unchecked(&self, v: Vec2) -> Vec3 {
        let [a, b] = v;
        match &self.surface {
            Surface::SphereCap { .. } => [a, b, (1.0 - a * a - b * b).sqrt()],
            Surface::SphereAngles => [a.sin() * b.cos(), a.sin() * b.sin(), a.cos()],
            Surface::Cylinder { radius } => [radius * a.cos(), radius * a.sin(), b],
            Surface::Cone { radius, height } => {
                let rho = radius * (height - b) / height;
                [rho * a.cos(), rho * a.sin(), b]
            }
            Surface::Torus { major, minor } => {
                let ring = major + minor * a.cos();
                [ring * b.cos(), ring * b.sin(), minor * a.sin()]
            }
            Surface::Revolution(p) => {
                let (r, h) = p.eval(a);
                [r * b.cos(), r * b.sin(), h]
            }
        }
    }

    pub fn jacobian(&self, v: Vec2) -> Result<Jacobian, GeometryError> {
        self.check(v)?;
        Ok(self.jacobian_unchecked(v))
    }

    fn jacobian_unchecked(&self, v: Vec2) -> Jacobian {
        let [a, b] = v;
        match &self.surface {
            Surface::SphereCap { .. } => {
                let w = (1.0 - a * a - b * b).sqrt();
                [[1.0, 0.0], [0.0, 1.0], [-a / w, -b / w]]
            }
            Surface::SphereAngles => {
                let (st, ct) = a.sin_cos();
                let (sp, cp) = b.sin_cos();
                [[ct * cp, -st * sp], [ct * sp, st * cp], [-st, 0.0]]
            }
            Surface::Cylinder { radius } => {
                let (s, c) = a.sin_cos();
                [[-radius * s, 0.0], [radius * c, 0.0], [0.0, 1.0]]
            }
            Surface::Cone { radius, height } => {
                let (s, c) = a.sin_cos();
                let rho = radius * (height - b) / height;
                let drho = -radius / height;
                [[-rho * s, drho * c], [rho * c, drho * s], [0.0, 1.0]]
            }
            Surface::Torus { major, minor } => {
                let (s1, c1) = a.sin_cos();
                let (s2, c2) = b.sin_cos();
                let ring = major + minor * c1;
                [[-minor * s1 * c2, -ring * s2], [-minor * s1 * s2, ring * c2], [minor * c1, 0.0]]
            }
            Surface::Revolution(p) => {
                let (r, _) = p.eval(a);
                let (dr, dh) = p.d1(a);
                let (s, c) = b.sin_cos();
                [[dr * c, -r * s], [dr * s, r * c], [dh, 0.0]]
            }
        }
    }

    pub fn hessian(&self, v: Vec2) -> Result<Hessian, GeometryError> {
        self.check(v)?;
        Ok(self.hessian_unchecked(v))
    }

    fn hessian_unchecked(&self, v: Vec2) -> Hessian {
        let [a, b] = v;
        let sym = |aa: Vec3, ab: Vec3, bb: Vec3| -> Hessian {
            let mut h = [[[0.0; 2]; 2]; 3];
            for p in 0..3 {
                h[p] = [[aa[p], ab[p]], [ab[p], bb[p]]];
            }
            h
        };
        match &self.surface {
            Surface::SphereCap { .. } => {
                let w = (1.0 - a * a - b * b).sqrt();
                let w3 = w * w * w;
                sym([0.0, 0.0, -1.0 / w - a * a / w3], [0.0, 0.0, -a * b / w3], [0.0, 0.0, -1.0 / w - b * b / w3])
            }
            Surface::SphereAngles => {
                let (st, ct) = a.sin_cos();
                let (sp, cp) = b.sin_cos();
                sym([-st * cp, -st * sp, -ct], [-ct * sp, ct * cp, 0.0], [-st * cp, -st * sp, 0.0])
            }
            Surface::Cylinder { radius } => {
                let (s, c) = a.sin_cos();
                sym([-radius * c, -radius * s, 0.0], [0.0; 3], [0.0; 3])
            }
            Surface::Cone { radius, height } => {
                let (s, c) = a.sin_cos();
                let rho = radius * (height - b) / height;
                let drho = -radius / height;
                sym([-rho * c, -rho * s, 0.0], [-drho * s, drho * c, 0.0], [0.0; 3])
            }
            Surface::Torus { major, minor } => {
                let (s1, c1) = a.sin_cos();
                let (s2, c2) = b.sin_cos();
                let ring = major + minor * c1;
                sym(
                    [-minor * c1 * c2, -minor * c1 * s2, -minor * s1],
                    [minor * s1 * s2, -minor * s1 * c2, 0.0],
                    [-ring * c2, -ring * s2, 0.0],
                )
            }
            Surface::Revolution(p) => {
                let (r, _) = p.eval(a);
                let (dr, _) = p.d1(a);
                let (ddr, ddh) = p.d2(a);
                let (s, c) = b.sin_cos();
                sym([ddr * c, ddr * s, ddh], [-dr * s, dr * c, 0.0], [-r * c, -r * s, 0.0])
            }
        }
    }

    /// First fundamental form `g_ij = ⟨∂u/∂v_i, ∂u/∂v_j⟩`.
    pub fn metric(&self, v: Vec2) -> Result<Mat2, GeometryError> {
        self.check(v)?;
        Ok(metric_from_jacobian(&self.jacobian_unchecked(v)))
    }

    pub fn metric_data(&self, v: Vec2) -> Result<MetricData, GeometryError> {
        self.check(v)?;
        let jac = self.jacobian_unchecked(v);
        let g = metric_from_jacobian(&jac);
        let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        if !(det >= SINGULAR_DET) {
            return Err(GeometryError::SingularMetric { v1: v[0], v2: v[1], det });
        }
        let g_inv = [[g[1][1] / det, -g[0][1] / det], [-g[1][0] / det, g[0][0] / det]];

        // ∂_k g_ij = ⟨u_ik, u_j⟩ + ⟨u_i, u_jk⟩
        let hess = self.hessian_unchecked(v);
        let mut dg = [[[0.0; 2]; 2]; 2];
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    dg[k][i][j] = (0..3).map(|p| hess[p][i][k] * jac[p][j] + jac[p][i] * hess[p][j][k]).sum();
                }
            }
        }

        let mut christoffel = [[[0.0; 2]; 2]; 2];
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    christoffel[k][i][j] =
                        0.5 * (0..2).map(|s| g_inv[k][s] * (dg[j][s][i] + dg[i][j][s] - dg[s][i][j])).sum::<f64>();
                }
            }
        }
        Ok(MetricData { g, g_inv, dg, christoffel })
    }

    /// Residual of the surface's implicit equation at an ambient point, when
    /// the surface has one in closed form.
    pub fn implicit_residual(&self, x: Vec3) -> Option<f64> {
        let planar = (x[0] * x[0] + x[1] * x[1]).sqrt();
        match self.surface {
            Surface::SphereCap { .. } | Surface::SphereAngles => Some(norm3(x) - 1.0),
            Surface::Cylinder { radius } => Some(planar - radius),
            Surface::Cone { radius, height } => Some(planar - radius * (height - x[2]) / height),
            Surface::Torus { major, minor } => Some(((planar - major).powi(2) + x[2] * x[2]).sqrt() - minor),
            Surface::Revolution(_) => None,
        }
    }

    /// Local partial derivatives of `f ∘ φ⁻¹` by the chain rule:
    /// first order `Jᵀ ∇f`, second order `Jᵀ (∇²f) J + Σ_p ∂_p f · ∂²u_p`.
    pub fn pushforward(&self, jet: &AmbientJet, v: Vec2) -> Result<LocalJet, GeometryError> {
        self.check(v)?;
        let jac = self.jacobian_unchecked(v);
        let hess = self.hessian_unchecked(v);
        let mut d1 = [0.0; 2];
        let mut d2 = [[0.0; 2]; 2];
        for a in 0..2 {
            d1[a] = (0..3).map(|p| jet.gradient[p] * jac[p][a]).sum();
            for b in 0..2 {
                let mut s = 0.0;
                for p in 0..3 {
                    s += jet.gradient[p] * hess[p][a][b];
                    for q in 0..3 {
                        s += jet.hessian[p][q] * jac[p][a] * jac[q][b];
                    }
                }
                d2[a][b] = s;
            }
        }
        Ok(LocalJet { value: jet.value, d1, d2 })
    }

    /// Length of the polyline `path` under the chart metric, trapezoidal in
    /// the metric along each segment.
    pub fn curve_length(&self, path: &[Vec2]) -> Result<f64, GeometryError> {
        if path.len() < 2 {
            return Err(GeometryError::DegeneratePath(path.len()));
        }
        let metrics = path.iter().map(|&v| self.metric(v)).collect::<Result<Vec<_>, _>>()?;
        Ok(path
            .windows(2)
            .zip(metrics.windows(2))
            .map(|(seg, g)| {
                let d = [seg[1][0] - seg[0][0], seg[1][1] - seg[0][1]];
                0.5 * (quad_form(&g[0], d).sqrt() + quad_form(&g[1], d).sqrt())
            })
            .sum())
    }
}

pub fn metric_from_jacobian(jac: &Jacobian) -> Mat2 {
    let mut g = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            g[i][j] = (0..3).map(|p| jac[p][i] * jac[p][j]).sum();
        }
    }
    g
}

/// `dᵀ g d`, clamped at zero against rounding.
pub fn quad_form(g: &Mat2, d: Vec2) -> f64 {
    (g[0][0] * d[0] * d[0] + 2.0 * g[0][1] * d[0] * d[1] + g[1][1] * d[1] * d[1]).max(0.0)
}

pub fn dot3(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm3(a: Vec3) -> f64 {
    dot3(a, a).sqrt()
}

pub fn dist3(a: Vec3, b: Vec3) -> f64 {
    norm3([a[0] - b[0], a[1] - b[1], a[2] - b[2]])
}
