mod common;

use common::*;
use hbsurf::basis::BasisConfig;
use hbsurf::geometry::SurfaceKind;
use hbsurf::harness::{build_samples, Lacunary, TestFunction};
use hbsurf::interpolant::{hb_eval, HermiteBirkhoff, InterpolantConfig};
use hbsurf::pointsets::nodes_on_surface;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn matches_a_term_by_term_reference(seed in any::<u64>(), order in 0u32..3) {
        let chart = SurfaceKind::Sphere.experiment_chart();
        let mut rng = Stream::new(seed);
        let nodes: Vec<_> = (0..3).map(|_| rng.chart_point(&chart)).collect();
        let samples = random_samples(&nodes, order, &mut rng);
        let basis = BasisConfig::new(order, 10.0);
        let config = InterpolantConfig::new(basis, &samples).unwrap();
        let u = rng.chart_point(&chart);
        let d: Vec<f64> = nodes.iter().map(|z| dist(&chart, &u, z)).collect();
        let got = hb_eval(&samples, &config, u.v, &d).unwrap();
        let want = reference_eval(&samples, &basis, u.v, &d);
        prop_assert!((got - want).abs() <= 1e-13 * want.abs().max(1.0), "{got} vs {want}");
    }

    #[test]
    fn reproduces_values_at_nodes(seed in any::<u64>(), order in 0u32..3) {
        let chart = SurfaceKind::Cylinder.experiment_chart();
        let mut rng = Stream::new(seed);
        let nodes: Vec<_> = (0..20).map(|_| rng.chart_point(&chart)).collect();
        let samples = random_samples(&nodes, order, &mut rng);
        let hb = HermiteBirkhoff::new(&chart, samples.clone(), BasisConfig::new(order, 0.6)).unwrap();
        for s in &samples {
            prop_assert_eq!(hb.eval(s.v).unwrap(), s.value());
        }
    }

    #[test]
    fn ignores_nodes_beyond_the_radius(seed in any::<u64>(), order in 0u32..3) {
        let chart = SurfaceKind::Cone.experiment_chart();
        let mut rng = Stream::new(seed);
        let delta = 0.5;
        let nodes: Vec<_> = (0..30).map(|_| rng.chart_point(&chart)).collect();
        let mut samples = random_samples(&nodes, order, &mut rng);
        let u = rng.chart_point(&chart);
        let basis = BasisConfig::new(order, delta);
        let far = samples.iter().position(|s| dist(&chart, &u, &s.point()) >= delta);
        let before = HermiteBirkhoff::new(&chart, samples.clone(), basis).unwrap().eval(u.v);
        prop_assume!(far.is_some() && before.is_ok());
        for f in samples[far.unwrap()].data.values_mut() {
            *f += rng.range(-5.0, 5.0);
        }
        let after = HermiteBirkhoff::new(&chart, samples, basis).unwrap().eval(u.v).unwrap();
        prop_assert_eq!(before.unwrap(), after);
    }
}

#[test]
fn derivatives_are_matched_at_the_nodes() {
    let kind = SurfaceKind::Sphere;
    let chart = kind.experiment_chart();
    let nodes = nodes_on_surface(kind, 50);
    for (order, tol) in [(1, 1e-3), (2, 1e-2)] {
        let samples = build_samples(&chart, &nodes, TestFunction::F1, order, Lacunary::None).unwrap();
        let hb = HermiteBirkhoff::new(&chart, samples, BasisConfig::new(order, 0.8)).unwrap();
        let residual = hb.derivative_match_check(order).unwrap();
        assert!(residual < tol, "order {order}: residual {residual:e}");
    }
}

#[test]
fn value_only_data_is_matched_exactly() {
    let kind = SurfaceKind::Sphere;
    let chart = kind.experiment_chart();
    let nodes = nodes_on_surface(kind, 50);
    let samples = build_samples(&chart, &nodes, TestFunction::F2, 0, Lacunary::None).unwrap();
    let hb = HermiteBirkhoff::new(&chart, samples, BasisConfig::new(0, 0.8)).unwrap();
    assert_eq!(hb.derivative_match_check(0).unwrap(), 0.0);
}
