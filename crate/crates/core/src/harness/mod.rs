//! Experiment orchestration: test functions, sample construction, error
//! tables, convergence fits and the file formats shared with the CLI.

mod functions;
mod io;

use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::basis::{AlphaKind, BasisConfig, BasisError, TauKind, DEFAULT_NODE_EPSILON};
use crate::geodesics::GeodesicError;
use crate::geometry::{Chart, GeometryError, SurfaceKind, SurfacePoint};
use crate::interpolant::{HermiteBirkhoff, InterpolantError, MultiIndex, SampleSite};
use crate::pointsets::{
    adaptive_radius, eval_points, nodes_on_surface_with_skip, point_set_stats, probe_grid, CellIndex, PointSetError,
    PointSetStats, ADAPTIVE_MIN_NODES, PROBE_GRID_SIDE,
};

pub use functions::{test_function, TestFunction};
pub use io::{
    emit, read_points, read_report_json, read_samples, write_points, write_report_csv, write_report_json,
    write_samples, OutputFormat, REPORT_CSV_HEADER,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown test function '{0}' (expected f1 or f2)")]
    UnknownFunction(String),
    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),
    #[error("empty stencil for n = {n}, order {order} even with delta = {delta}")]
    EmptyStencil { n: usize, order: u32, delta: f64 },
    #[error("order {order} has {rows} rows; a slope fit needs at least 4 with distinct fill distances")]
    InsufficientRows { order: u32, rows: usize },
    #[error(transparent)]
    Interpolant(#[from] InterpolantError),
    #[error(transparent)]
    PointSet(#[from] PointSetError),
    #[error(transparent)]
    Geodesic(#[from] GeodesicError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Which derivative data is withheld from every second node.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Lacunary {
    #[default]
    None,
    HalfFirstDerivatives,
    HalfSecondDerivatives,
}

impl Lacunary {
    fn drops(self, beta: MultiIndex) -> bool {
        match self {
            Lacunary::None => false,
            Lacunary::HalfFirstDerivatives => beta.order() == 1,
            Lacunary::HalfSecondDerivatives => beta.order() == 2,
        }
    }
}

/// Localization radius: a fixed value or chosen per experiment row.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum DeltaSpec {
    /// Smallest radius giving every evaluation point `min_nodes` nodes.
    #[default]
    Auto,
    Fixed(f64),
}

impl Serialize for DeltaSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            DeltaSpec::Auto => s.serialize_str("auto"),
            DeltaSpec::Fixed(d) => s.serialize_f64(*d),
        }
    }
}

impl<'de> Deserialize<'de> for DeltaSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(x) => Ok(DeltaSpec::Fixed(x)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

impl std::str::FromStr for DeltaSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(DeltaSpec::Auto);
        }
        s.parse::<f64>().map(DeltaSpec::Fixed).map_err(|_| format!("delta must be 'auto' or a number, got '{s}'"))
    }
}

/// Basis choices of an experiment; `mu` defaults to `order + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BasisSettings {
    pub alpha_kind: AlphaKind,
    pub mu: Option<f64>,
    pub gamma: f64,
    pub delta_exp: f64,
    pub tau_kind: TauKind,
    pub delta: DeltaSpec,
    pub min_nodes: usize,
    pub node_epsilon: f64,
}

impl Default for BasisSettings {
    fn default() -> Self {
        Self {
            alpha_kind: AlphaKind::Power,
            mu: None,
            gamma: 1.0,
            delta_exp: 1.0,
            tau_kind: TauKind::Wendland,
            delta: DeltaSpec::Auto,
            min_nodes: ADAPTIVE_MIN_NODES,
            node_epsilon: DEFAULT_NODE_EPSILON,
        }
    }
}

impl BasisSettings {
    /// The basis for derivative order `k` with the given radius.
    pub fn config(&self, k: u32, delta: f64) -> BasisConfig {
        BasisConfig {
            alpha_kind: self.alpha_kind,
            mu: self.mu.unwrap_or(f64::from(k + 1)),
            gamma: self.gamma,
            delta_exp: self.delta_exp,
            k,
            tau_kind: self.tau_kind,
            delta,
            node_epsilon: self.node_epsilon,
        }
    }

    /// Resolves the radius for a node set and its evaluation points.
    pub fn resolve_delta(&self, index: &CellIndex, evals: &[SurfacePoint]) -> Result<f64, GeodesicError> {
        match self.delta {
            DeltaSpec::Fixed(d) => Ok(d),
            DeltaSpec::Auto if self.tau_kind == TauKind::None => Ok(f64::INFINITY),
            DeltaSpec::Auto => adaptive_radius(index, evals, self.min_nodes),
        }
    }
}

fn default_n_eval() -> usize {
    50
}

fn default_seed() -> u64 {
    1
}

fn default_true() -> bool {
    true
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u32>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        One(u32),
        Many(Vec<u32>),
    }
    Ok(match Raw::deserialize(d)? {
        Raw::One(x) => vec![x],
        Raw::Many(v) => v,
    })
}

/// One table: a surface, a function, a ladder of node counts and one or
/// more Taylor orders.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub surface: SurfaceKind,
    pub function: TestFunction,
    #[serde(alias = "taylor_order", deserialize_with = "one_or_many")]
    pub taylor_orders: Vec<u32>,
    pub n_values: Vec<usize>,
    #[serde(default = "default_n_eval")]
    pub n_eval: usize,
    #[serde(default)]
    pub basis: BasisSettings,
    #[serde(default)]
    pub lacunary: Lacunary,
    /// Seed of the evaluation point stream (unused on the sphere).
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Halton indices skipped before the first node.
    #[serde(default)]
    pub halton_skip: u64,
    /// When false, the `seconds` column is written as zero.
    #[serde(default = "default_true")]
    pub record_timing: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(surface: SurfaceKind, function: TestFunction, taylor_orders: Vec<u32>, n_values: Vec<usize>) -> Self {
        Self {
            surface,
            function,
            taylor_orders,
            n_values,
            n_eval: default_n_eval(),
            basis: BasisSettings::default(),
            lacunary: Lacunary::None,
            seed: default_seed(),
            halton_skip: 0,
            record_timing: true,
            output: None,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::InvalidConfig(m));
        if self.taylor_orders.is_empty() {
            return bad("no Taylor orders".into());
        }
        if let Some(t) = self.taylor_orders.iter().find(|&&t| t > 2) {
            return bad(format!("Taylor order {t} above 2"));
        }
        if self.n_values.is_empty() || self.n_values.contains(&0) {
            return bad("node counts must be a non-empty list of positive integers".into());
        }
        if self.n_eval == 0 {
            return bad("n_eval must be positive".into());
        }
        if self.basis.min_nodes == 0 {
            return bad("min_nodes must be positive".into());
        }
        if let DeltaSpec::Fixed(d) = self.basis.delta {
            if !(d > 0.0) {
                return bad(format!("delta = {d} must be positive"));
            }
        }
        for &t in &self.taylor_orders {
            self.basis.config(t, 1.0).validate()?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub n: usize,
    pub order: u32,
    pub mae: f64,
    pub rmse: f64,
    pub fill: f64,
    pub sep: f64,
    pub seconds: f64,
    /// Localization radius used (after any retry).
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub config: ExperimentConfig,
    pub stats: Vec<PointSetStats>,
    pub rows: Vec<ErrorRow>,
    pub seconds: f64,
}

impl ErrorReport {
    /// Rows of one order, in node-count order.
    pub fn series(&self, order: u32) -> Vec<ErrorRow> {
        let mut rows: Vec<ErrorRow> = self.rows.iter().filter(|r| r.order == order).copied().collect();
        rows.sort_by_key(|r| r.n);
        rows
    }

    pub fn row(&self, n: usize, order: u32) -> Option<&ErrorRow> {
        self.rows.iter().find(|r| r.n == n && r.order == order)
    }
}

/// Maximum absolute error and root mean square error of the residuals.
pub fn error_metrics(residuals: &[f64]) -> (f64, f64) {
    if residuals.is_empty() {
        return (0.0, 0.0);
    }
    let mae = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let rmse = (residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt();
    (mae, rmse)
}

/// Samples at `nodes` carrying all derivatives of `function` up to `order`
/// in local coordinates, with the lacunary pattern applied to even ids.
pub fn build_samples(
    chart: &Chart,
    nodes: &[SurfacePoint],
    function: TestFunction,
    order: u32,
    lacunary: Lacunary,
) -> Result<Vec<SampleSite>, HarnessError> {
    let betas = MultiIndex::up_to(order);
    nodes
        .iter()
        .enumerate()
        .map(|(id, p)| {
            let jet = chart.pushforward(&function.jet(p.x), p.v)?;
            let data = betas
                .iter()
                .filter(|&&b| id % 2 == 1 || !lacunary.drops(b))
                .map(|&b| {
                    let f = match (b.0, b.1) {
                        (0, 0) => jet.value,
                        (1, 0) => jet.d1[0],
                        (0, 1) => jet.d1[1],
                        (2, 0) => jet.d2[0][0],
                        (1, 1) => jet.d2[0][1],
                        _ => jet.d2[1][1],
                    };
                    (b, f)
                })
                .collect();
            Ok(SampleSite::new(id, p.v, p.x, data)?)
        })
        .collect()
}

/// Interpolates `function` from `samples` and measures the error at `evals`.
/// An empty stencil is retried once with the radius doubled. Returns
/// `(mae, rmse, delta used)`.
pub fn measure(
    chart: &Chart,
    samples: Vec<SampleSite>,
    evals: &[SurfacePoint],
    function: TestFunction,
    basis: &BasisSettings,
    order: u32,
    delta: f64,
) -> Result<(f64, f64, f64), HarnessError> {
    let n = samples.len();
    let mut delta = delta;
    let mut samples = Some(samples);
    for attempt in 0..2 {
        let model = HermiteBirkhoff::new(chart, samples.take().expect("samples present"), basis.config(order, delta))?;
        let values: Result<Vec<f64>, InterpolantError> = model.eval_many(evals).into_iter().collect();
        match values {
            Ok(values) => {
                let residuals: Vec<f64> = evals.iter().zip(&values).map(|(u, h)| function.value(u.x) - h).collect();
                let (mae, rmse) = error_metrics(&residuals);
                return Ok((mae, rmse, delta));
            }
            Err(InterpolantError::Basis(BasisError::EmptyStencil { .. })) if attempt == 0 => {
                delta *= 2.0;
                samples = Some(model.samples().to_vec());
            }
            Err(InterpolantError::Basis(BasisError::EmptyStencil { .. })) => {
                return Err(HarnessError::EmptyStencil { n, order, delta });
            }
            Err(e) => return Err(e.into()),
        }
    }
    unreachable!("the retry loop returns on its second pass")
}

/// Runs every `(n, order)` row of the experiment. Rows run in parallel;
/// results do not depend on scheduling.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ErrorReport, HarnessError> {
    config.validate()?;
    let start = Instant::now();
    let chart = config.surface.experiment_chart();
    let evals = eval_points(config.surface, config.n_eval, config.seed);
    let probes = probe_grid(&chart, PROBE_GRID_SIDE);

    let per_n: Vec<(PointSetStats, Vec<ErrorRow>)> = config
        .n_values
        .par_iter()
        .map(|&n| -> Result<_, HarnessError> {
            let nodes = nodes_on_surface_with_skip(config.surface, n, config.halton_skip);
            let stats = if n >= 2 {
                point_set_stats(&chart, &nodes, &probes)?
            } else {
                let fill = crate::pointsets::fill_distance(&chart, &nodes, &probes)?;
                PointSetStats { fill_distance: fill, separation: 0.0, n }
            };
            let index = CellIndex::with_target_occupancy(&chart, &nodes, 4.0);
            let delta = config.basis.resolve_delta(&index, &evals)?;
            let rows = config
                .taylor_orders
                .par_iter()
                .map(|&order| -> Result<ErrorRow, HarnessError> {
                    let t = Instant::now();
                    let samples = build_samples(&chart, &nodes, config.function, order, config.lacunary)?;
                    let (mae, rmse, delta) =
                        measure(&chart, samples, &evals, config.function, &config.basis, order, delta)?;
                    let seconds = if config.record_timing { t.elapsed().as_secs_f64() } else { 0.0 };
                    Ok(ErrorRow {
                        n,
                        order,
                        mae,
                        rmse,
                        fill: stats.fill_distance,
                        sep: stats.separation,
                        seconds,
                        delta,
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok((stats, rows))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut stats = Vec::new();
    let mut rows = Vec::new();
    for (s, r) in per_n {
        stats.push(s);
        rows.extend(r);
    }
    let seconds = if config.record_timing { start.elapsed().as_secs_f64() } else { 0.0 };
    Ok(ErrorReport { config: config.clone(), stats, rows, seconds })
}

/// Least-squares line through `(ln fill, ln rmse)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub order: u32,
    pub slope: f64,
    pub intercept: f64,
    /// Root mean square residual of the fit in log space.
    pub residual: f64,
    pub rows: usize,
}

pub fn convergence_slope(rows: &[ErrorRow], order: u32) -> Result<SlopeFit, HarnessError> {
    let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.order == order).map(|r| (r.fill.ln(), r.rmse.ln())).collect();
    let m = pts.len();
    let insufficient = HarnessError::InsufficientRows { order, rows: m };
    if m < 4 {
        return Err(insufficient);
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m as f64;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 0.0) || !sxy.is_finite() {
        return Err(insufficient);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / m as f64).sqrt();
    Ok(SlopeFit { order, slope, intercept, residual, rows: m })
}

/// One fit per Taylor order of the report.
pub fn convergence_slopes(report: &ErrorReport) -> Result<Vec<SlopeFit>, HarnessError> {
    report.config.taylor_orders.iter().map(|&t| convergence_slope(&report.rows, t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(n: usize, order: u32, fill: f64, rmse: f64) -> ErrorRow {
        ErrorRow { n, order, mae: rmse, rmse, fill, sep: 0.0, seconds: 0.0, delta: 0.0 }
    }

    #[test]
    fn metric_example() {
        let (mae, rmse) = error_metrics(&[1.0, -2.0, 2.0]);
        assert_eq!(mae, 2.0);
        assert!((rmse - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn slope_examples() {
        let flat: Vec<ErrorRow> = (0..5).map(|i| row(i, 0, 0.1 / (i + 1) as f64, 1e-3)).collect();
        assert!(convergence_slope(&flat, 0).unwrap().slope.abs() < 1e-12);
        let cubic: Vec<ErrorRow> =
            (0..5).map(|i| row(i, 2, 0.2 / (i + 1) as f64, 3.0 * (0.2 / (i + 1) as f64).powi(3))).collect();
        let fit = convergence_slope(&cubic, 2).unwrap();
        assert!((fit.slope - 3.0).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
        assert!(matches!(convergence_slope(&cubic[..3], 2), Err(HarnessError::InsufficientRows { order: 2, rows: 3 })));
    }

    #[test]
    fn sample_data_shapes() {
        let kind = SurfaceKind::Sphere;
        let chart = kind.experiment_chart();
        let nodes = crate::pointsets::nodes_on_surface(kind, 10);
        let t0 = build_samples(&chart, &nodes, TestFunction::F1, 0, Lacunary::None).unwrap();
        assert!(t0.iter().all(|s| s.data.len() == 1));
        let t2 = build_samples(&chart, &nodes, TestFunction::F1, 2, Lacunary::None).unwrap();
        assert!(t2.iter().all(|s| s.data.len() == 6));
        let lac = build_samples(&chart, &nodes, TestFunction::F1, 1, Lacunary::HalfFirstDerivatives).unwrap();
        for s in &lac {
            assert_eq!(s.data.len(), if s.id % 2 == 0 { 1 } else { 3 });
        }
        let lac2 = build_samples(&chart, &nodes, TestFunction::F2, 2, Lacunary::HalfSecondDerivatives).unwrap();
        for s in &lac2 {
            assert_eq!(s.data.len(), if s.id % 2 == 0 { 3 } else { 6 });
        }
    }

    #[test]
    fn config_json_accepts_single_order_and_auto_delta() {
        let c: ExperimentConfig = serde_json::from_str(
            r#"{"surface":"cone","function":"f2","taylor_order":1,"n_values":[100,200],
                "basis":{"delta":"auto","tau_kind":"indicator"},"lacunary":"half-first-derivatives"}"#,
        )
        .unwrap();
        assert_eq!(c.taylor_orders, vec![1]);
        assert_eq!(c.basis.delta, DeltaSpec::Auto);
        assert_eq!(c.basis.tau_kind, TauKind::Indicator);
        assert_eq!(c.n_eval, 50);
        let c2: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(c, c2);
        let fixed: DeltaSpec = serde_json::from_str("0.25").unwrap();
        assert_eq!(fixed, DeltaSpec::Fixed(0.25));
        assert!(serde_json::from_str::<DeltaSpec>("\"wide\"").is_err());
        let mut bad = c;
        bad.taylor_orders = vec![3];
        assert!(matches!(bad.validate(), Err(HarnessError::InvalidConfig(_))));
    }
}
