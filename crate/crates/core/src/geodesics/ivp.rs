use crate::geometry::{quad_form, Chart, Vec2};

use super::{GeodesicError, GeodesicPath};

const UNIT_SPEED_TOL: f64 = 1e-10;

type State = [f64; 4];

/// Rescales `direction` to unit speed in the metric at `v`.
pub fn unit_direction(chart: &Chart, v: Vec2, direction: Vec2) -> Result<Vec2, GeodesicError> {
    let g = chart.metric(v)?;
    let speed = quad_form(&g, direction).sqrt();
    if !(speed > 0.0) {
        return Err(GeodesicError::NotUnitSpeed(0.0));
    }
    Ok([direction[0] / speed, direction[1] / speed])
}

fn rhs(chart: &Chart, y: &State) -> Result<State, GeodesicError> {
    let gamma = chart.metric_data([y[0], y[1]])?.christoffel;
    let p = [y[2], y[3]];
    let mut acc = [0.0; 2];
    for k in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                acc[k] -= gamma[k][i][j] * p[i] * p[j];
            }
        }
    }
    Ok([p[0], p[1], acc[0], acc[1]])
}

fn axpy(y: &State, h: f64, k: &State) -> State {
    [y[0] + h * k[0], y[1] + h * k[1], y[2] + h * k[2], y[3] + h * k[3]]
}

/// Traces the unit-speed geodesic from `v0` with initial velocity `dv0` for
/// arclength `s_end`, using classical fourth-order Runge-Kutta with `steps`
/// equal steps on the first-order system in `(v, dv/ds)`.
///
/// If the trajectory exits the chart, the error carries the path up to the
/// last point inside.
pub fn geodesic_ivp(
    chart: &Chart,
    v0: Vec2,
    dv0: Vec2,
    s_end: f64,
    steps: usize,
) -> Result<GeodesicPath, GeodesicError> {
    if steps < 16 {
        return Err(GeodesicError::InvalidSettings(format!("need at least 16 steps, got {steps}")));
    }
    if !(s_end > 0.0) {
        return Err(GeodesicError::InvalidSettings(format!("arclength must be positive, got {s_end}")));
    }
    let g0 = chart.metric(v0)?;
    let speed2 = quad_form(&g0, dv0);
    if (speed2 - 1.0).abs() > UNIT_SPEED_TOL {
        return Err(GeodesicError::NotUnitSpeed(speed2));
    }

    let h = s_end / steps as f64;
    let mut y: State = [v0[0], v0[1], dv0[0], dv0[1]];
    let mut points = vec![v0];
    let mut arclength = vec![0.0];

    for step in 0..steps {
        let next = rk4_step(chart, &y, h).and_then(|next| {
            chart.metric([next[0], next[1]])?;
            Ok(next)
        });
        match next {
            Ok(next) => y = next,
            Err(GeodesicError::Geometry(_)) => {
                let s = step as f64 * h;
                return Err(GeodesicError::LeftChart {
                    exit_arclength: s,
                    path: Box::new(GeodesicPath::new(points, arclength)),
                });
            }
            Err(e) => return Err(e),
        }
        points.push([y[0], y[1]]);
        arclength.push(if step + 1 == steps { s_end } else { (step + 1) as f64 * h });
    }
    Ok(GeodesicPath::new(points, arclength))
}

fn rk4_step(chart: &Chart, y: &State, h: f64) -> Result<State, GeodesicError> {
    let k1 = rhs(chart, y)?;
    let k2 = rhs(chart, &axpy(y, 0.5 * h, &k1))?;
    let k3 = rhs(chart, &axpy(y, 0.5 * h, &k2))?;
    let k4 = rhs(chart, &axpy(y, h, &k3))?;
    let mut out = *y;
    for i in 0..4 {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ParamRect, Surface, SurfaceKind};
    use std::f64::consts::PI;

    fn sphere_angles() -> Chart {
        Chart::new(Surface::SphereAngles, ParamRect::new([0.05, -PI], [PI - 0.05, 2.0 * PI]))
    }

    #[test]
    fn equator_is_a_geodesic() {
        let chart = sphere_angles();
        let path = geodesic_ivp(&chart, [PI / 2.0, 0.0], [0.0, 1.0], PI / 2.0, 64).unwrap();
        for v in &path.points {
            assert!((v[0] - PI / 2.0).abs() < 1e-12);
        }
        assert!((path.end()[1] - PI / 2.0).abs() < 1e-10);
        assert!((path.total_length - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn cylinder_meridian_keeps_angle() {
        let chart = SurfaceKind::Cylinder.experiment_chart();
        let path = geodesic_ivp(&chart, [PI, 0.1], [0.0, 1.0], 0.8, 32).unwrap();
        assert!(path.points.iter().all(|v| v[0] == PI));
        assert!((path.end()[1] - 0.9).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_unit_direction() {
        let chart = SurfaceKind::Torus.experiment_chart();
        // g22 = 9 at v1 = 0
        assert!(matches!(geodesic_ivp(&chart, [0.0, 0.0], [0.0, 1.0], 1.0, 32), Err(GeodesicError::NotUnitSpeed(_))));
        let d = unit_direction(&chart, [0.0, 0.0], [0.0, 1.0]).unwrap();
        assert!((d[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn exit_returns_truncated_path() {
        let chart = SurfaceKind::Cylinder.experiment_chart();
        let err = geodesic_ivp(&chart, [PI, 0.52], [0.0, 1.0], 2.0, 40).unwrap_err();
        match err {
            GeodesicError::LeftChart { exit_arclength, path } => {
                // last inside point is z = 0.97 after nine steps of 0.05
                assert!((exit_arclength - 0.45).abs() < 1e-12);
                assert!(path.points.iter().all(|v| chart.contains(*v)));
                assert_eq!(path.total_length, exit_arclength);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
