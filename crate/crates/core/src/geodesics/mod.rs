//! Geodesic distances on charts.
//!
//! Closed forms cover the sphere and the two developable surfaces (cylinder
//! and cone, by unrolling). Everything else goes through the boundary value
//! solver in [`bvp`]. [`ivp`] traces geodesics from an initial direction.

mod bvp;
mod ivp;

use std::io::Write;

use thiserror::Error;

use crate::geometry::{dot3, norm3, Chart, GeometryError, Surface, SurfacePoint, Vec2, Vec3};

pub use bvp::{geodesic_bvp, BvpSettings};
pub use ivp::{geodesic_ivp, unit_direction};

#[derive(Debug, Error, Clone)]
pub enum GeodesicError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("points are not on the unit sphere (|u| = {0}, |w| = {1})")]
    NotOnSphere(f64, f64),
    #[error("distance {value} outside the admissible range [0, {max}]")]
    OutOfRange { value: f64, max: f64 },
    #[error("no closed-form geodesic distance on this surface; use the boundary value solver")]
    Unsupported,
    #[error("geodesic left the chart at arclength {exit_arclength}")]
    LeftChart { exit_arclength: f64, path: Box<GeodesicPath> },
    #[error("initial direction is not unit speed in the metric (g(v', v') = {0})")]
    NotUnitSpeed(f64),
    #[error("geodesic solver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("initial straight segment leaves the chart")]
    SegmentLeavesChart,
    #[error("endpoints coincide")]
    CoincidentEndpoints,
    #[error("invalid settings: {0}")]
    InvalidSettings(String),
}

/// A discretized geodesic in local coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicPath {
    pub points: Vec<Vec2>,
    /// Cumulative arclength at each point, starting at zero.
    pub arclength: Vec<f64>,
    pub total_length: f64,
}

impl GeodesicPath {
    pub(crate) fn new(points: Vec<Vec2>, arclength: Vec<f64>) -> Self {
        debug_assert_eq!(points.len(), arclength.len());
        let total_length = arclength.last().copied().unwrap_or(0.0);
        Self { points, arclength, total_length }
    }

    pub fn start(&self) -> Vec2 {
        self.points[0]
    }

    pub fn end(&self) -> Vec2 {
        self.points[self.points.len() - 1]
    }

    /// Writes the path as CSV with header `s,v1,v2,x,y,z`.
    pub fn write_csv<W: Write>(&self, chart: &Chart, out: W) -> Result<(), std::io::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["s", "v1", "v2", "x", "y", "z"])?;
        for (v, s) in self.points.iter().zip(&self.arclength) {
            let x = chart.forward(*v).map_err(std::io::Error::other)?;
            w.write_record([s, &v[0], &v[1], &x[0], &x[1], &x[2]].map(|f| f.to_string()))?;
        }
        w.flush()
    }
}

/// Geodesic distance between two points of the unit sphere, in radians.
///
/// Evaluated as `atan2(|u × w|, u · w)`, which equals `arccos(u · w)` for unit
/// vectors and keeps full precision for nearly coincident points.
pub fn sphere_distance(u: Vec3, w: Vec3) -> Result<f64, GeodesicError> {
    let (nu, nw) = (norm3(u), norm3(w));
    if (nu - 1.0).abs() > 1e-10 || (nw - 1.0).abs() > 1e-10 {
        return Err(GeodesicError::NotOnSphere(nu, nw));
    }
    Ok(unit_sphere_angle(u, w))
}

fn unit_sphere_angle(u: Vec3, w: Vec3) -> f64 {
    let cross = [u[1] * w[2] - u[2] * w[1], u[2] * w[0] - u[0] * w[2], u[0] * w[1] - u[1] * w[0]];
    norm3(cross).atan2(dot3(u, w))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Conversion {
    /// Chord length `d_E ∈ [0, 2]` to arc length `2 asin(d_E / 2)`.
    ToGeodesic,
    /// Arc length `d_g ∈ [0, π]` to chord length `2 sin(d_g / 2)`.
    ToEuclidean,
}

/// Converts between chord and great-circle distance on the unit sphere.
pub fn convert_sphere_distance(d: f64, direction: Conversion) -> Result<f64, GeodesicError> {
    match direction {
        Conversion::ToGeodesic => {
            if !(0.0..=2.0).contains(&d) {
                return Err(GeodesicError::OutOfRange { value: d, max: 2.0 });
            }
            Ok(2.0 * (d / 2.0).asin())
        }
        Conversion::ToEuclidean => {
            if !(0.0..=std::f64::consts::PI).contains(&d) {
                return Err(GeodesicError::OutOfRange { value: d, max: std::f64::consts::PI });
            }
            Ok(2.0 * (d / 2.0).sin())
        }
    }
}

/// Closed-form geodesic distance for the sphere, cylinder and cone.
///
/// Angles are not wrapped: both points are measured within the chart's own
/// angular interval.
pub fn analytic_distance(chart: &Chart, a: Vec2, b: Vec2) -> Result<f64, GeodesicError> {
    let pa = chart.point(a)?;
    let pb = chart.point(b)?;
    analytic_point_distance(chart, &pa, &pb).ok_or(GeodesicError::Unsupported)
}

/// Same as [`analytic_distance`] for points whose ambient positions are known.
/// Returns `None` on surfaces without a closed form.
pub fn analytic_point_distance(chart: &Chart, a: &SurfacePoint, b: &SurfacePoint) -> Option<f64> {
    match *chart.surface() {
        Surface::SphereCap { .. } | Surface::SphereAngles => Some(unit_sphere_angle(a.x, b.x)),
        Surface::Cylinder { radius } => {
            let dt = radius * (a.v[0] - b.v[0]);
            let dz = a.v[1] - b.v[1];
            Some(dt.hypot(dz))
        }
        Surface::Cone { radius, height } => {
            let slant = radius.hypot(height);
            // distance from the apex along the surface
            let la = (height - a.v[1]) / height * slant;
            let lb = (height - b.v[1]) / height * slant;
            let phi = (a.v[0] - b.v[0]).abs() * radius / slant;
            if phi >= std::f64::consts::PI {
                // the straight line in the unrolled sector passes through the apex
                return Some(la + lb);
            }
            let sq = (la - lb).powi(2) + 2.0 * la * lb * (1.0 - phi.cos());
            Some(sq.max(0.0).sqrt())
        }
        Surface::Torus { .. } | Surface::Revolution(_) => None,
    }
}

/// Geodesic distance between two chart points: closed form where available,
/// boundary value solver with default settings otherwise.
pub fn point_distance(chart: &Chart, a: &SurfacePoint, b: &SurfacePoint) -> Result<f64, GeodesicError> {
    if let Some(d) = analytic_point_distance(chart, a, b) {
        return Ok(d);
    }
    if a.v == b.v {
        return Ok(0.0);
    }
    Ok(geodesic_bvp(chart, a.v, b.v, &BvpSettings::default())?.total_length)
}
