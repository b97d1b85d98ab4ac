//! Start between two profiles `φ_{β,k}` and track the best-fitting `k` as the
//! flow runs. Nothing is asserted; the point is the trajectory.

use ricci_lab::analysis::{hsu_fit, FitWindow};
use ricci_lab::conformal::ConformalMetric;
use ricci_lab::exact::ExactSolution;
use ricci_lab::flow::{evolve, FlowState, Observer, StepperConfig};
use ricci_lab::grid::GridSpec;

struct Fits {
    beta: f64,
}

impl Observer for Fits {
    fn diagnostic(&mut self, state: &FlowState) -> ricci_lab::Result<()> {
        let fit = hsu_fit(state.metric(), self.beta, &FitWindow::default())?;
        println!(
            "t = {:>4.2}  k_fit = {:>8.5}  residual = {:.3e}{}",
            state.t(),
            fit.k_fit,
            fit.residual,
            if fit.mismatch { "  (mismatch)" } else { "" }
        );
        Ok(())
    }
}

fn main() -> ricci_lab::Result<()> {
    let spec = GridSpec::centered(64, 4.0)?;
    // k rises from 2 at the origin to 4 far out
    let start: ExactSolution = "hsu-blend:2:2:4".parse()?;
    let state = FlowState::frozen(ConformalMetric::new(start.sample_to_grid(&spec, 0.0)?, 0.0)?)?;
    let config = StepperConfig { t_end: 1.0, diagnostic_interval: 0.1, ..StepperConfig::default() };
    evolve(state, &config, &mut Fits { beta: 2.0 })?;
    Ok(())
}
