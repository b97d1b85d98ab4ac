//! Decay envelopes `sup Q · (1 + t)^p` over a recorded bump run, written in
//! the same CSV layout as the `decay-report` subcommand.

use ricci_lab::analysis::{decay_envelope, evolve_recorded, Column, DecayOptions, DecayReport, RecordOptions};
use ricci_lab::conformal::ConformalMetric;
use ricci_lab::exact::ExactSolution;
use ricci_lab::flow::{FlowState, StepperConfig};
use ricci_lab::grid::GridSpec;

fn main() -> ricci_lab::Result<()> {
    let spec = GridSpec::centered(96, 8.0)?;
    let u0 = ExactSolution::GaussianBump { amplitude: 0.5, sigma: 1.0 }.sample_to_grid(&spec, 0.0)?;
    let state = FlowState::frozen(ConformalMetric::new(u0, 0.0)?)?;
    let config = StepperConfig { t_end: 6.0, diagnostic_interval: 0.25, ..StepperConfig::default() };
    let (_, series) = evolve_recorded(state, &config, RecordOptions::default())?;
    let reports = [(Column::SupGradF2, 1.0), (Column::SupH, 1.0), (Column::SupGradR2, 3.0), (Column::SupHess2R, 4.0)]
        .into_iter()
        .map(|(c, p)| decay_envelope(&series, c, p, &DecayOptions::default()))
        .collect::<ricci_lab::Result<Vec<_>>>()?;
    print!("{}", DecayReport::to_csv(&reports));
    Ok(())
}
