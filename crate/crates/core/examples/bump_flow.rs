//! Evolve a Gaussian bump with a frozen boundary and watch the curvature decay.

use ricci_lab::analysis::{evolve_recorded, RecordOptions};
use ricci_lab::conformal::ConformalMetric;
use ricci_lab::exact::ExactSolution;
use ricci_lab::flow::{FlowState, StepperConfig, Termination};
use ricci_lab::grid::GridSpec;

fn main() -> ricci_lab::Result<()> {
    let spec = GridSpec::centered(96, 8.0)?;
    let bump = ExactSolution::GaussianBump { amplitude: 0.5, sigma: 1.0 };
    let metric = ConformalMetric::new(bump.sample_to_grid(&spec, 0.0)?, 0.0)?;
    let state = FlowState::frozen(metric)?;
    let config = StepperConfig { t_end: 4.0, diagnostic_interval: 0.5, ..StepperConfig::default() };
    let (outcome, series) = evolve_recorded(state, &config, RecordOptions::default())?;
    if let Termination::Aborted(e) = &outcome.termination {
        eprintln!("aborted: {e}");
    }
    println!("{:>5} {:>11} {:>11} {:>11} {:>10}", "t", "sup R", "inf R", "sup H", "area");
    for r in series.rows() {
        println!("{:>5.1} {:>11.4e} {:>11.4e} {:>11.4e} {:>10.4}", r.t, r.sup_r, r.inf_r, r.sup_h, r.area);
    }
    println!("{} steps", outcome.state.step_count());
    Ok(())
}
