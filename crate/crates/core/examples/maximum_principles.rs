//! The three maximum-principle experiments on one bump run: the curvature
//! lower bound `R ≥ -k0/(1 + k0 t)`, sup-norm decay of a heat-equation
//! companion, and the barrier `η = ε ln(1 + |x|²)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ricci_lab::analysis::{
    barrier_check, barrier_eps_bound, barrier_eta, comparison_verify, evolve_recorded, initial_k0, lower_bound_margin,
    mp1_verify, MpReport, RecordOptions,
};
use ricci_lab::conformal::ConformalMetric;
use ricci_lab::exact::ExactSolution;
use ricci_lab::flow::{FlowState, StepperConfig};
use ricci_lab::grid::{GridSpec, ScalarField};

fn main() -> ricci_lab::Result<()> {
    let spec = GridSpec::centered(96, 8.0)?;
    let bump = ExactSolution::GaussianBump { amplitude: -0.5, sigma: 1.0 };
    let u0 = bump.sample_to_grid(&spec, 0.0)?;
    let m0 = ConformalMetric::new(u0.clone(), 0.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let w0 = ScalarField::new(spec, (0..spec.len()).map(|_| rng.gen_range(-1.0..=1.0)).collect())?;
    let state = FlowState::frozen(m0.clone())?.with_heat_companion(w0)?;
    let config = StepperConfig { t_end: 2.0, diagnostic_interval: 0.1, ..StepperConfig::default() };
    let (outcome, series) = evolve_recorded(state, &config, RecordOptions::default())?;

    let k0 = initial_k0(&series)?;
    println!("k0 = {k0:.4}, lower-bound margin = {:.4e}", lower_bound_margin(&series, k0)?);

    let sup_u = u0.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut report = MpReport::default();
    report.verdicts.push(comparison_verify(&series, k0, 1e-3)?);
    report.verdicts.push(mp1_verify(&series, 1e-6)?);
    for eps in [0.999 * barrier_eps_bound(sup_u), 2.0 * (-2.0 * sup_u).exp()] {
        let eta = barrier_eta(eps, &spec)?;
        report.verdicts.push(barrier_check(&eta, outcome.state.metric(), 1e-2, 4)?);
    }
    // the last barrier uses eps above the admissible bound and is expected to fail
    print!("{}", report.render());
    Ok(())
}
