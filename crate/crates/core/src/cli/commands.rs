use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{BcChoice, ExitStatus, ManifestVerdict, RunConfig, RunDir, RunManifest};
use crate::analysis::{
    aronson_benilan_check, barrier_check, barrier_eps_bound, barrier_eta, comparison_verify, decay_envelope,
    flatness_certificate, hsu_fit, initial_k0, mp1_verify, record, shi_window_check, Column, DecayOptions, DecayReport,
    DiagnosticSeries, FitWindow, HsuFit, MpReport, RecordOptions, Verdict,
};
use crate::conformal::ConformalMetric;
use crate::error::{Error, Result};
use crate::exact::ExactSolution;
use crate::flow::{evolve, FlowState, Observer, Termination};
use crate::geometry::aperture_estimate;
use crate::grid::{BoundaryCondition, GridSpec, ScalarField};

/// Renders an error for the user and maps it to its exit status.
fn fail(out: &mut dyn Write, e: &Error) -> ExitStatus {
    let _ = writeln!(out, "error: {e}");
    ExitStatus::for_error(e)
}

fn initial_state(config: &RunConfig) -> Result<FlowState> {
    let spec = config.grid.spec()?;
    let preset = config.flow.preset()?;
    let metric = ConformalMetric::new(preset.sample_to_grid(&spec, 0.0)?, 0.0)?;
    let mut state = match config.flow.bc {
        BcChoice::Dirichlet => FlowState::frozen(metric)?,
        BcChoice::Exact => FlowState::frozen(metric)?.with_exact_boundary(preset)?,
        BcChoice::Periodic => FlowState::new(metric, BoundaryCondition::Periodic)?,
        BcChoice::Extrapolate => FlowState::new(metric, BoundaryCondition::LinearExtrapolate)?,
    };
    if config.flow.heat_companion {
        let mut rng = ChaCha8Rng::seed_from_u64(config.flow.seed);
        let a = config.flow.companion_amplitude;
        let data = (0..spec.len()).map(|_| rng.gen_range(-a..=a)).collect();
        state = state.with_heat_companion(ScalarField::new(spec, data)?)?;
    }
    Ok(state)
}

/// Records the series, writes snapshots and keeps what the checks need.
struct RunObserver {
    options: RecordOptions,
    series: DiagnosticSeries,
    snapshot_dir: Option<RunDir>,
    snapshots: Vec<ConformalMetric>,
    sup_abs_u: f64,
    hsu_beta: Option<f64>,
    fits: Vec<(f64, HsuFit)>,
}

impl RunObserver {
    fn new(config: &RunConfig, dir: Option<RunDir>) -> Self {
        Self {
            options: RecordOptions { margin: config.checks.margin, lambda: config.checks.lambda },
            series: DiagnosticSeries::new(),
            snapshot_dir: dir,
            snapshots: Vec::new(),
            sup_abs_u: 0.0,
            hsu_beta: None,
            fits: Vec::new(),
        }
    }
}

impl Observer for RunObserver {
    fn diagnostic(&mut self, state: &FlowState) -> Result<()> {
        let u = state.metric().u();
        self.sup_abs_u = u.data().iter().fold(self.sup_abs_u, |m, v| m.max(v.abs()));
        self.series.push(record(state, &self.options)?)?;
        if let Some(beta) = self.hsu_beta {
            let window = FitWindow { margin: self.options.margin, radius: None };
            self.fits.push((state.t(), hsu_fit(state.metric(), beta, &window)?));
        }
        Ok(())
    }

    fn snapshot(&mut self, state: &FlowState) -> Result<()> {
        let m = state.metric();
        if let Some(dir) = &self.snapshot_dir {
            let path = dir.snapshot_path(m.t());
            let parent = path.parent().expect("snapshot path has a parent");
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            m.u().write_csv(&path)?;
        }
        self.snapshots.push(m.clone());
        Ok(())
    }
}

struct FlowRun {
    initial: ConformalMetric,
    observer: RunObserver,
    final_state: FlowState,
    termination: Termination,
}

fn run_flow(config: &RunConfig, observer: RunObserver) -> Result<FlowRun> {
    let state = initial_state(config)?;
    let initial = state.metric().clone();
    let mut observer = observer;
    let outcome = evolve(state, &config.flow.stepper(), &mut observer)?;
    Ok(FlowRun { initial, observer, final_state: outcome.state, termination: outcome.termination })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CheckSet {
    Full,
    MaximumPrinciple,
}

fn lower_bound_verdict(config: &RunConfig, series: &DiagnosticSeries) -> Result<Verdict> {
    let k0 = initial_k0(series)?;
    let mut v = comparison_verify(series, k0, config.checks.lower_bound_tol)?;
    v.check = "lower bound: min_t [inf R + k0/(1 + k0 t)]".into();
    Ok(v)
}

fn barrier_verdict(config: &RunConfig, run: &FlowRun) -> Result<Option<Verdict>> {
    let spec = *run.initial.spec();
    if spec.node_at(0.0, 0.0).is_none() {
        return Ok(None);
    }
    let m = run.observer.sup_abs_u;
    let eps = config.checks.barrier_factor * barrier_eps_bound(m);
    let eta = barrier_eta(eps, &spec)?;
    let tol = config.checks.barrier_tol;
    let margin = config.checks.margin;
    let a = barrier_check(&eta, &run.initial, tol, margin)?;
    let b = barrier_check(&eta, run.final_state.metric(), tol, margin)?;
    let mut worst = if b.value > a.value { b } else { a };
    worst.detail = format!("{}, M = sup|u| = {m}, eps = {eps:e}", worst.detail);
    Ok(Some(worst))
}

/// Flat-convergence checks; also returns the decay rows for the report file.
fn flat_convergence_verdicts(
    config: &RunConfig,
    run: &FlowRun,
    notes: &mut Vec<String>,
) -> Result<(Vec<Verdict>, Vec<DecayReport>)> {
    let series = &run.observer.series;
    let checks = &config.checks;
    let opts = DecayOptions { tail_fraction: checks.tail_fraction, ..DecayOptions::default() };
    let mut verdicts = Vec::new();
    let mut reports = Vec::new();
    for (name, p) in &checks.decay_exponents {
        let col: Column = name.parse()?;
        let r = decay_envelope(series, col, *p, &opts)?;
        verdicts.push(Verdict {
            check: format!("decay: {col}·(1+t)^{p} bounded and non-increasing on the tail"),
            passed: r.envelope_c.is_finite() && r.tail_monotone,
            value: r.envelope_c,
            tolerance: opts.monotone_rel_tol,
            detail: format!("tail_monotone = {}", r.tail_monotone),
        });
        reports.push(r);
    }

    let h = decay_envelope(series, Column::SupH, 1.0, &opts)?;
    verdicts.push(match h.fitted_slope {
        Some(slope) => Verdict {
            check: "decay: log-log slope of sup H".into(),
            passed: slope <= checks.max_h_slope,
            value: slope,
            tolerance: checks.max_h_slope,
            detail: "fitted against ln(1+t) over the tail".into(),
        },
        // sup H reaches zero or changes sign on the tail: no slope to fit, and
        // the upper bound C/(1+t) holds iff the weighted envelope does not grow.
        None => Verdict {
            check: "decay: log-log slope of sup H".into(),
            passed: h.tail_monotone,
            value: h.tail_max,
            tolerance: checks.max_h_slope,
            detail: "sup H not positive throughout the tail; judged by sup H·(1+t) non-increasing".into(),
        },
    });

    let (r0, r1) = (series.first().map_or(0.0, |r| r.sup_abs_r()), series.last().map_or(0.0, |r| r.sup_abs_r()));
    verdicts.push(Verdict {
        check: "decay: sup|R|(t_end) <= ratio · sup|R|(0)".into(),
        passed: r1 <= checks.curvature_ratio * r0,
        value: if r0 > 0.0 { r1 / r0 } else { r1 },
        tolerance: checks.curvature_ratio,
        detail: format!("sup|R|(0) = {r0}, sup|R|(t_end) = {r1}"),
    });

    let spec = *run.final_state.metric().spec();
    let x0 = (spec.nx / 2, spec.ny / 2);
    let flat = flatness_certificate(run.final_state.metric(), run.final_state.bc(), x0, checks.margin)?;
    verdicts.push(Verdict {
        check: "flatness: |f(x) - f(x0)| <= d(x, x0) sup|grad f|".into(),
        passed: flat.max_violation <= checks.flatness_tol,
        value: flat.max_violation,
        tolerance: checks.flatness_tol,
        detail: format!("sup|R| = {:e}, osc f = {:e}, f(x0) = {}", flat.sup_abs_r, flat.f_oscillation, flat.f_at_x0),
    });

    if let Ok(k0) = initial_k0(series) {
        for m in [1, 2] {
            if let Ok(k) = shi_window_check(series, m, k0) {
                notes.push(format!("derivative estimate constant K_{m} = {k} on (0, 1/k0]"));
            }
        }
    }
    Ok((verdicts, reports))
}

fn checks_for(
    config: &RunConfig,
    run: &FlowRun,
    set: CheckSet,
    dir: &RunDir,
    notes: &mut Vec<String>,
) -> Result<Vec<Verdict>> {
    let series = &run.observer.series;
    let mut verdicts = vec![lower_bound_verdict(config, series)?];
    if run.final_state.companion().is_some() {
        verdicts.push(mp1_verify(series, config.checks.mp1_tol)?);
    }
    if config.checks.barrier || set == CheckSet::MaximumPrinciple {
        match barrier_verdict(config, run)? {
            Some(v) => verdicts.push(v),
            None => notes.push("barrier check skipped: the origin is not a grid node".into()),
        }
    }
    if set == CheckSet::MaximumPrinciple {
        return Ok(verdicts);
    }
    if config.checks.aronson_benilan {
        let snaps: Vec<_> = run.observer.snapshots.iter().filter(|m| m.t() > 0.0).cloned().collect();
        verdicts.push(aronson_benilan_check(&snaps, config.checks.margin, config.checks.aronson_benilan_tol)?);
    }
    let preset = config.flow.preset()?;
    let applies = preset.bounded_hypotheses_report().flat_convergence_applies() && config.flow.bc != BcChoice::Periodic;
    if config.checks.flat_convergence {
        if applies {
            let (v, reports) = flat_convergence_verdicts(config, run, notes)?;
            verdicts.extend(v);
            dir.write_atomic("decay_report.csv", &DecayReport::to_csv(&reports))?;
        } else {
            notes.push(format!("flat-convergence checks not applicable to {preset} with bc = {:?}", config.flow.bc));
        }
    }
    Ok(verdicts)
}

fn execute(
    command: &str,
    config: &RunConfig,
    out_dir: Option<&Path>,
    set: Option<CheckSet>,
    hsu_beta: Option<f64>,
    out: &mut dyn Write,
) -> (ExitStatus, Option<FlowRun>) {
    let started = Instant::now();
    let dir = match RunDir::for_config(config, out_dir) {
        Ok(d) => d,
        Err(e) => return (fail(out, &e), None),
    };
    let mut manifest = RunManifest::new(command, config);
    let mut observer = RunObserver::new(config, Some(dir.clone()));
    observer.hsu_beta = hsu_beta;

    let result = (|| -> Result<(ExitStatus, FlowRun)> {
        let run = run_flow(config, observer)?;
        run.observer.series.write_csv(dir.file("series.csv"))?;
        manifest.steps = run.final_state.step_count();
        manifest.t_final = run.final_state.t();
        manifest.termination = run.termination.describe();
        if let Termination::Aborted(e) = &run.termination {
            let _ = writeln!(out, "run aborted at t = {}: {e}", run.final_state.t());
            return Ok((ExitStatus::NumericalAbort, run));
        }
        let Some(set) = set else {
            return Ok((ExitStatus::Pass, run));
        };
        let verdicts = checks_for(config, &run, set, &dir, &mut manifest.notes)?;
        let report = MpReport { verdicts };
        let _ = write!(out, "{}", report.render());
        manifest.verdicts = report.verdicts.iter().map(ManifestVerdict::from).collect();
        Ok((ExitStatus::from_verdicts(&report.verdicts), run))
    })();

    let (status, run) = match result {
        Ok((s, run)) => (s, Some(run)),
        Err(e) => {
            manifest.termination = format!("error: {e}");
            (fail(out, &e), None)
        }
    };
    for n in &manifest.notes {
        let _ = writeln!(out, "note: {n}");
    }
    manifest.exit_code = status.code();
    manifest.wall_time_s = started.elapsed().as_secs_f64();
    if let Err(e) = dir.write_manifest(&manifest) {
        return (fail(out, &e), run);
    }
    let _ = writeln!(out, "outputs in {}; exit {}", dir.path().display(), status.code());
    (status, run)
}

/// Evolves, records the series and runs every applicable check.
pub fn cmd_run(config: &RunConfig, out_dir: Option<&Path>, out: &mut dyn Write) -> ExitStatus {
    execute("run", config, out_dir, Some(CheckSet::Full), None, out).0
}

/// Maximum-principle session: lower curvature bound, heat companion and barrier.
pub fn cmd_mp_lab(config: &RunConfig, out_dir: Option<&Path>, out: &mut dyn Write) -> ExitStatus {
    let mut config = config.clone();
    config.flow.heat_companion = true;
    execute("mp-lab", &config, out_dir, Some(CheckSet::MaximumPrinciple), None, out).0
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyExactArgs {
    pub solution: ExactSolution,
    /// Node counts per axis, coarse to fine.
    pub grids: Vec<usize>,
    pub half_width: f64,
    pub t: f64,
    pub dt: f64,
    pub margin: usize,
}

impl Default for VerifyExactArgs {
    fn default() -> Self {
        Self { solution: ExactSolution::cigar(), grids: vec![128, 256], half_width: 8.0, t: 1.0, dt: 1e-4, margin: 4 }
    }
}

/// Residual of the exact solution across grids. Passes when every successive
/// ratio lies in `[3.2, 4.8]` (second order under halving `h`), or when every
/// residual is already at round-off (`≤ 1e-12`).
pub fn cmd_verify_exact(args: &VerifyExactArgs, out: &mut dyn Write) -> ExitStatus {
    let result = (|| -> Result<ExitStatus> {
        if args.grids.len() < 2 {
            return Err(Error::InvalidArgument("verify-exact needs at least two grids".into()));
        }
        let mut residuals = Vec::new();
        let _ = writeln!(out, "n,h,residual,ratio");
        for &n in &args.grids {
            let spec = GridSpec::centered(n, args.half_width)?;
            let r = args.solution.pde_residual_in(&spec, args.t, args.dt, args.margin)?;
            let ratio = residuals.last().map_or(f64::NAN, |&prev: &f64| prev / r);
            let _ = writeln!(out, "{n},{},{r:e},{ratio}", spec.h);
            residuals.push(r);
        }
        let round_off = residuals.iter().all(|&r| r <= 1e-12);
        let ordered = residuals.windows(2).all(|w| {
            let ratio = w[0] / w[1];
            (3.2..=4.8).contains(&ratio)
        });
        let status = if round_off || ordered { ExitStatus::Pass } else { ExitStatus::CheckFailed };
        let _ = writeln!(
            out,
            "{} {}: {}",
            if status == ExitStatus::Pass { "PASS" } else { "FAIL" },
            args.solution,
            if round_off { "residual at round-off" } else { "ratios must lie in [3.2, 4.8]" }
        );
        Ok(status)
    })();
    result.unwrap_or_else(|e| fail(out, &e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApertureArgs {
    pub radii: Vec<f64>,
    /// Evolve to `flow.t_end` first; otherwise measure the initial data.
    pub evolve: bool,
    /// Fail unless the estimate lies in this closed interval.
    pub bounds: Option<(f64, f64)>,
}

/// Geodesic distance from the grid centre, level-set lengths and the aperture
/// fit; writes `aperture.csv`.
pub fn cmd_aperture(
    config: &RunConfig,
    args: &ApertureArgs,
    out_dir: Option<&Path>,
    out: &mut dyn Write,
) -> ExitStatus {
    let result = (|| -> Result<ExitStatus> {
        let dir = RunDir::for_config(config, out_dir)?;
        let metric = if args.evolve {
            let (status, run) = execute("aperture", config, Some(dir.path()), None, None, out);
            match (status, run) {
                (ExitStatus::Pass, Some(run)) => run.final_state.metric().clone(),
                (s, _) => return Ok(s),
            }
        } else {
            initial_state(config)?.metric().clone()
        };
        let spec = *metric.spec();
        let report = aperture_estimate(&metric, (spec.nx / 2, spec.ny / 2), &args.radii)?;
        let path = dir.write_atomic("aperture.csv", &report.to_csv())?;
        let _ = write!(out, "{}", report.to_csv());
        let _ = writeln!(out, "aperture estimate = {} (t = {}); wrote {}", report.estimate, metric.t(), path.display());
        Ok(match args.bounds {
            Some((lo, hi)) if !(lo..=hi).contains(&report.estimate) => {
                let _ = writeln!(out, "FAIL: estimate outside [{lo}, {hi}]");
                ExitStatus::CheckFailed
            }
            _ => ExitStatus::Pass,
        })
    })();
    result.unwrap_or_else(|e| fail(out, &e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayArgs {
    pub series: PathBuf,
    pub exponents: Vec<(Column, f64)>,
    pub tail_fraction: f64,
    /// Defaults to `decay_report.csv` next to the series.
    pub output: Option<PathBuf>,
}

/// Envelope and slope fits over a stored series. Fails if any envelope is
/// infinite or not non-increasing over the tail.
pub fn cmd_decay_report(args: &DecayArgs, out: &mut dyn Write) -> ExitStatus {
    let result = (|| -> Result<ExitStatus> {
        let series = DiagnosticSeries::read_csv(&args.series)?;
        let opts = DecayOptions { tail_fraction: args.tail_fraction, ..DecayOptions::default() };
        let reports =
            args.exponents.iter().map(|&(c, p)| decay_envelope(&series, c, p, &opts)).collect::<Result<Vec<_>>>()?;
        let csv = DecayReport::to_csv(&reports);
        let path = args
            .output
            .clone()
            .unwrap_or_else(|| args.series.parent().unwrap_or_else(|| Path::new(".")).join("decay_report.csv"));
        std::fs::write(&path, &csv).map_err(|e| Error::io(&path, e))?;
        let _ = write!(out, "{csv}");
        let _ = writeln!(out, "wrote {}", path.display());
        let ok = reports.iter().all(|r| r.envelope_c.is_finite() && r.tail_monotone);
        Ok(if ok { ExitStatus::Pass } else { ExitStatus::CheckFailed })
    })();
    result.unwrap_or_else(|e| fail(out, &e))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConjectureArgs {
    /// `β` of the fitted profile; defaults to the preset's own `β`, else 2.
    pub beta: Option<f64>,
}

/// Tracks the best-fitting profile `φ_{β,k}` along the flow and writes
/// `conjecture.csv`. Report-only: exits 0 unless the config is invalid.
pub fn cmd_conjecture(
    config: &RunConfig,
    args: &ConjectureArgs,
    out_dir: Option<&Path>,
    out: &mut dyn Write,
) -> ExitStatus {
    let beta = args.beta.unwrap_or_else(|| match config.flow.preset() {
        Ok(ExactSolution::HsuPhi { beta, .. }) | Ok(ExactSolution::HsuBlend { beta, .. }) => beta,
        _ => 2.0,
    });
    if !(beta > 0.0 && beta.is_finite()) {
        return fail(out, &Error::InvalidArgument(format!("beta must be positive, got {beta}")));
    }
    let (status, run) = execute("conjecture", config, out_dir, None, Some(beta), out);
    if status == ExitStatus::ConfigError {
        return status;
    }
    let Some(run) = run else {
        return ExitStatus::Pass;
    };
    let mut csv = String::from("t,k_fit,residual,mismatch\n");
    for (t, fit) in &run.observer.fits {
        csv.push_str(&format!("{t},{},{},{}\n", fit.k_fit, fit.residual, fit.mismatch));
    }
    let written = RunDir::for_config(config, out_dir).and_then(|d| d.write_atomic("conjecture.csv", &csv));
    match written {
        Ok(path) => {
            let _ = write!(out, "{csv}");
            let _ = writeln!(out, "wrote {}", path.display());
            ExitStatus::Pass
        }
        Err(e) => fail(out, &e),
    }
}
