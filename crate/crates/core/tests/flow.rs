//! Time stepping against exact solutions.

use ricci_lab::analysis::{evolve_recorded, RecordOptions};
use ricci_lab::conformal::ConformalMetric;
use ricci_lab::exact::ExactSolution;
use ricci_lab::flow::{evolve, FlowState, Observer, Scheme, StepperConfig, Termination};
use ricci_lab::grid::{window_sup, BoundaryCondition, GridSpec};
use ricci_lab::Error;

fn cigar_state(spec: &GridSpec) -> FlowState {
    let cigar = ExactSolution::cigar();
    let m = ConformalMetric::new(cigar.sample_to_grid(spec, 0.0).unwrap(), 0.0).unwrap();
    FlowState::frozen(m).unwrap().with_exact_boundary(cigar).unwrap()
}

fn cigar_error(state: &FlowState, margin: usize) -> f64 {
    let exact = ExactSolution::cigar().sample_to_grid(state.metric().spec(), state.t()).unwrap();
    let diff = state.metric().u().zip_map(&exact, |a, b| (a - b).abs()).unwrap();
    window_sup(&diff, margin).unwrap()
}

#[test]
fn one_euler_step_tracks_the_cigar() {
    // local error = dt·(consistency O(h²)) + O(dt²)
    let spec = GridSpec::centered(128, 4.0).unwrap();
    let s = cigar_state(&spec);
    let dt = s.stable_dt(0.9);
    let next = s.step(dt, Scheme::ExplicitEuler).unwrap();
    let err = cigar_error(&next, 2);
    assert!(err < dt * 1e-2, "err {err}, dt {dt}");
    assert!(err > 0.0);
}

#[test]
fn exact_boundary_run_stays_on_the_cigar() {
    let errs: Vec<f64> = [32, 64]
        .iter()
        .map(|&n| {
            let spec = GridSpec::centered(n, 4.0).unwrap();
            let cfg = StepperConfig { t_end: 0.25, ..StepperConfig::default() };
            let out = evolve(cigar_state(&spec), &cfg, &mut ricci_lab::flow::NoObserver).unwrap();
            assert!(matches!(out.termination, Termination::Completed));
            assert_eq!(out.state.t(), 0.25);
            cigar_error(&out.state, 0)
        })
        .collect();
    assert!(errs[1] < 1e-3, "{errs:?}");
    assert!(errs[0] / errs[1] > 3.0, "spatial order lost: {errs:?}");
}

#[test]
fn heun_conserves_periodic_area_per_step() {
    let spec = GridSpec::centered(64, 4.0).unwrap();
    let u = ExactSolution::GaussianBump { amplitude: 0.5, sigma: 1.0 }.sample_to_grid(&spec, 0.0).unwrap();
    let mut s = FlowState::new(ConformalMetric::new(u, 0.0).unwrap(), BoundaryCondition::Periodic).unwrap();
    for _ in 0..20 {
        let a0 = s.metric().area();
        s.advance(1e-4, Scheme::Heun).unwrap();
        assert!((s.metric().area() / a0 - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn euler_conserves_periodic_area_to_round_off() {
    // the explicit Euler update of v sums Δ ln v, which vanishes on the torus
    let spec = GridSpec::centered(64, 4.0).unwrap();
    let u = ExactSolution::GaussianBump { amplitude: -0.5, sigma: 1.0 }.sample_to_grid(&spec, 0.0).unwrap();
    let s = FlowState::new(ConformalMetric::new(u, 0.0).unwrap(), BoundaryCondition::Periodic).unwrap();
    let next = s.step(s.stable_dt(0.9), Scheme::ExplicitEuler).unwrap();
    let drift = (next.metric().area() / s.metric().area() - 1.0).abs();
    // u-form Euler is not exactly conservative in v, but the drift is O(dt²)
    assert!(drift < 1e-6, "{drift}");
}

#[test]
fn unstable_override_aborts_with_last_good_state() {
    let spec = GridSpec::centered(32, 4.0).unwrap();
    let u = ExactSolution::GaussianBump { amplitude: 0.5, sigma: 1.0 }.sample_to_grid(&spec, 0.0).unwrap();
    let s = FlowState::frozen(ConformalMetric::new(u.clone(), 0.0).unwrap()).unwrap();
    let cfg = StepperConfig { dt_override: Some(1.0), ..StepperConfig::default() };
    let out = evolve(s, &cfg, &mut ricci_lab::flow::NoObserver).unwrap();
    match out.termination {
        Termination::Aborted(e @ Error::UnstableStep { .. }) => assert!(e.is_numerical()),
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(out.state.metric().u(), &u);
}

#[test]
fn snapshots_land_exactly() {
    struct Times(Vec<f64>);
    impl Observer for Times {
        fn diagnostic(&mut self, _: &FlowState) -> ricci_lab::Result<()> {
            Ok(())
        }
        fn snapshot(&mut self, s: &FlowState) -> ricci_lab::Result<()> {
            self.0.push(s.t());
            Ok(())
        }
    }
    let spec = GridSpec::centered(32, 4.0).unwrap();
    let s = FlowState::frozen(ConformalMetric::flat(spec).unwrap()).unwrap();
    let cfg = StepperConfig { t_end: 0.5, snapshot_times: vec![0.0, 0.123, 0.5, 0.123], ..StepperConfig::default() };
    let mut obs = Times(Vec::new());
    evolve(s, &cfg, &mut obs).unwrap();
    assert_eq!(obs.0, vec![0.0, 0.123, 0.5]);
}

#[test]
fn bump_curvature_decays_and_series_is_consistent() {
    let spec = GridSpec::centered(64, 6.0).unwrap();
    let u = ExactSolution::GaussianBump { amplitude: 0.5, sigma: 1.0 }.sample_to_grid(&spec, 0.0).unwrap();
    let s = FlowState::frozen(ConformalMetric::new(u, 0.0).unwrap()).unwrap();
    let cfg = StepperConfig { t_end: 2.0, diagnostic_interval: 0.5, ..StepperConfig::default() };
    let (_, series) = evolve_recorded(s, &cfg, RecordOptions::default()).unwrap();
    let ts: Vec<f64> = series.rows().iter().map(|r| r.t).collect();
    assert_eq!(ts, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
    let first = series.first().unwrap();
    let last = series.last().unwrap();
    assert!(last.sup_abs_r() < 0.5 * first.sup_abs_r());
    for r in series.rows() {
        assert!(r.sup_h >= r.sup_r - 1e-12, "H = R + |∇f|² dominates R");
    }
}
