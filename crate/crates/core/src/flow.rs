//! Explicit time integration of `∂t u = e^{-2u} Δu`, the log-factor form of
//! `∂t g = -R g` (equivalently `∂t v = Δ ln v` with `v = e^{2u}`).
//!
//! The step size is recomputed every step from the current maximum diffusivity
//! `e^{-2u}`. A heat equation `∂t w = Δ_{g(t)} w` can ride along with the flow,
//! stepped with the same `dt` by forward Euler (a convex update under the
//! stability bound).

use serde::{Deserialize, Serialize};

use crate::conformal::ConformalMetric;
use crate::error::{Error, Result};
use crate::exact::ExactSolution;
use crate::grid::{for_each_ring_node, laplacian, BoundaryCondition, BoundaryKind, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    ExplicitEuler,
    #[default]
    Heun,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepperConfig {
    pub scheme: Scheme,
    pub cfl_safety: f64,
    pub t_end: f64,
    pub snapshot_times: Vec<f64>,
    /// Time between diagnostic hook calls.
    pub diagnostic_interval: f64,
    pub max_steps: u64,
    /// Fixed step instead of the adaptive one; steps above the stability bound abort the run.
    pub dt_override: Option<f64>,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Heun,
            cfl_safety: 0.9,
            t_end: 1.0,
            snapshot_times: Vec::new(),
            diagnostic_interval: 0.1,
            max_steps: 50_000_000,
            dt_override: None,
        }
    }
}

impl StepperConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::InvalidArgument(format!("cfl_safety must lie in (0, 1], got {}", self.cfl_safety)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidArgument(format!("t_end must be finite and >= 0, got {}", self.t_end)));
        }
        if !(self.diagnostic_interval > 0.0) {
            return Err(Error::InvalidArgument("diagnostic_interval must be > 0".into()));
        }
        if self.snapshot_times.iter().any(|&s| !(s >= 0.0 && s <= self.t_end)) {
            return Err(Error::InvalidArgument("snapshot times must lie in [0, t_end]".into()));
        }
        if let Some(dt) = self.dt_override {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::InvalidArgument(format!("dt override must be > 0, got {dt}")));
            }
        }
        Ok(())
    }
}

/// Heat-equation companion `∂t w = Δ_{g(t)} w`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatCompanion {
    w: ScalarField,
    bc: BoundaryCondition,
}

impl HeatCompanion {
    pub fn w(&self) -> &ScalarField {
        &self.w
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    metric: ConformalMetric,
    step_count: u64,
    bc: BoundaryCondition,
    boundary_source: Option<ExactSolution>,
    companion: Option<HeatCompanion>,
}

impl FlowState {
    pub fn new(metric: ConformalMetric, bc: BoundaryCondition) -> Result<Self> {
        bc.validate(metric.spec())?;
        Ok(Self { metric, step_count: 0, bc, boundary_source: None, companion: None })
    }

    /// Flow state whose boundary ring is frozen at the initial values.
    pub fn frozen(metric: ConformalMetric) -> Result<Self> {
        let bc = BoundaryCondition::frozen(metric.u());
        Self::new(metric, bc)
    }

    /// Drives the boundary ring from a time-parametrized exact solution.
    pub fn with_exact_boundary(mut self, sol: ExactSolution) -> Result<Self> {
        if !sol.is_time_parametrized() {
            return Err(Error::InitialDataOnly { kind: sol.name(), t: self.t() });
        }
        if self.bc.kind() != BoundaryKind::DirichletFrozen {
            self.bc = BoundaryCondition::frozen(self.metric.u());
        }
        self.boundary_source = Some(sol);
        Ok(self)
    }

    /// Attaches a heat companion starting from `w0`; it inherits the flow's
    /// boundary kind, frozen at its own initial values for Dirichlet runs.
    pub fn with_heat_companion(mut self, w0: ScalarField) -> Result<Self> {
        w0.ensure_same_spec(self.metric.u())?;
        let bc = match self.bc.kind() {
            BoundaryKind::DirichletFrozen => BoundaryCondition::frozen(&w0),
            BoundaryKind::Periodic => BoundaryCondition::Periodic,
            BoundaryKind::LinearExtrapolate => BoundaryCondition::LinearExtrapolate,
        };
        self.companion = Some(HeatCompanion { w: w0, bc });
        Ok(self)
    }

    #[inline]
    pub fn metric(&self) -> &ConformalMetric {
        &self.metric
    }

    #[inline]
    pub fn t(&self) -> f64 {
        self.metric.t()
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn bc(&self) -> &BoundaryCondition {
        &self.bc
    }

    pub fn companion(&self) -> Option<&HeatCompanion> {
        self.companion.as_ref()
    }

    /// Largest diffusivity `e^{-2u}` over the nodes that get updated.
    fn max_diffusivity(&self) -> f64 {
        let u = self.metric.u();
        let rings = self.bc.undefined_rings();
        u.window(rings).fold(0.0, |acc, (_, _, u)| acc.max((-2.0 * u).exp()))
    }

    /// `dt = cfl_safety h² / (4 max e^{-2u})`.
    pub fn stable_dt(&self, cfl_safety: f64) -> f64 {
        let h = self.metric.spec().h;
        cfl_safety * h * h / (4.0 * self.max_diffusivity())
    }

    /// One step of the given scheme.
    pub fn step(&self, dt: f64, scheme: Scheme) -> Result<FlowState> {
        let mut next = self.clone();
        next.advance(dt, scheme)?;
        Ok(next)
    }

    /// In-place step; on error `self` is left unchanged.
    pub fn advance(&mut self, dt: f64, scheme: Scheme) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be finite and > 0, got {dt}")));
        }
        let limit = self.stable_dt(1.0);
        if dt > limit * (1.0 + 1e-12) {
            return Err(Error::UnstableStep { dt, limit });
        }
        let t_new = self.t() + dt;
        let u = self.metric.u();
        let spec = *u.spec();
        let blow_up = |context| Error::BlowUp { t: self.t(), step: self.step_count, context };

        let k1 = rhs(u, &self.bc).map_err(|_| blow_up("flow right-hand side"))?;
        let mut next: Vec<f64> = u.data().iter().zip(k1.iter()).map(|(&u, &k)| u + dt * k).collect();
        if scheme == Scheme::Heun {
            self.impose_boundary(&mut next, t_new)?;
            let predictor = ScalarField::new(spec, next).map_err(|_| blow_up("Heun predictor"))?;
            let k2 = rhs(&predictor, &self.bc).map_err(|_| blow_up("flow right-hand side"))?;
            next = u.data().iter().zip(k1.iter().zip(k2.iter())).map(|(&u, (&a, &b))| u + 0.5 * dt * (a + b)).collect();
        }
        self.impose_boundary(&mut next, t_new)?;
        let u_new = ScalarField::new(spec, next).map_err(|_| blow_up("flow update"))?;

        let companion = match &self.companion {
            Some(c) => Some(HeatCompanion {
                w: heat_companion_step(&c.w, &c.bc, &self.metric, dt).map_err(|_| blow_up("heat companion"))?,
                bc: c.bc.clone(),
            }),
            None => None,
        };
        self.metric = ConformalMetric::new(u_new, t_new)?;
        self.companion = companion;
        self.step_count += 1;
        Ok(())
    }

    fn impose_boundary(&self, data: &mut [f64], t: f64) -> Result<()> {
        let spec = *self.metric.spec();
        match &self.boundary_source {
            Some(sol) => {
                let mut err = None;
                for_each_ring_node(&spec, |k| {
                    let (i, j) = (k % spec.nx, k / spec.nx);
                    match sol.eval_u(spec.x(i), spec.y(j), t) {
                        Ok(v) => data[k] = v,
                        Err(e) => err = Some(e),
                    }
                });
                err.map_or(Ok(()), Err)
            }
            None => {
                self.bc.impose(data, &spec);
                Ok(())
            }
        }
    }
}

/// `e^{-2u} Δu` at every node.
fn rhs(u: &ScalarField, bc: &BoundaryCondition) -> Result<Vec<f64>> {
    let lap = laplacian(u, bc)?;
    Ok(u.data().iter().zip(lap.data()).map(|(&u, &l)| (-2.0 * u).exp() * l).collect())
}

/// `w + dt e^{-2u} Δw` with `u` taken from `metric`.
pub fn heat_companion_step(
    w: &ScalarField,
    bc: &BoundaryCondition,
    metric: &ConformalMetric,
    dt: f64,
) -> Result<ScalarField> {
    w.ensure_same_spec(metric.u())?;
    let lap = laplacian(w, bc)?;
    let data: Vec<f64> = w
        .data()
        .iter()
        .zip(lap.data())
        .zip(metric.u().data())
        .map(|((&w, &l), &u)| w + dt * (-2.0 * u).exp() * l)
        .collect();
    let mut data = data;
    bc.impose(&mut data, w.spec());
    ScalarField::new(*w.spec(), data)
}

/// Hooks invoked by [`evolve`] with immutable snapshots of the state.
pub trait Observer {
    /// Called at `t = 0`, every `diagnostic_interval`, and at `t_end`.
    fn diagnostic(&mut self, state: &FlowState) -> Result<()>;

    /// Called at each configured snapshot time.
    fn snapshot(&mut self, _state: &FlowState) -> Result<()> {
        Ok(())
    }
}

/// Observer that ignores everything.
pub struct NoObserver;

impl Observer for NoObserver {
    fn diagnostic(&mut self, _: &FlowState) -> Result<()> {
        Ok(())
    }
}

#[derive(Debug)]
pub enum Termination {
    Completed,
    /// The run stopped early; the state is the last good one.
    Aborted(Error),
}

impl Termination {
    pub fn describe(&self) -> String {
        match self {
            Termination::Completed => "completed".into(),
            Termination::Aborted(e) => format!("aborted: {e}"),
        }
    }
}

#[derive(Debug)]
pub struct EvolveOutcome {
    pub state: FlowState,
    pub termination: Termination,
}

/// Steps until `t_end`, calling the observer at the diagnostic cadence and
/// at each snapshot time. Steps are shortened to land exactly on those times.
pub fn evolve(state: FlowState, config: &StepperConfig, observer: &mut dyn Observer) -> Result<EvolveOutcome> {
    config.validate()?;
    let mut state = state;
    let t_start = state.t();
    let t_end = t_start.max(config.t_end);
    let mut snapshots: Vec<f64> = config.snapshot_times.iter().copied().filter(|&s| s >= t_start).collect();
    snapshots.sort_by(f64::total_cmp);
    snapshots.dedup();
    let mut next_snapshot = 0usize;
    let mut diag_index: u64 = (t_start / config.diagnostic_interval).ceil() as u64;
    let diag_time = |k: u64| (k as f64 * config.diagnostic_interval).min(t_end);

    let mut run = |state: &mut FlowState, observer: &mut dyn Observer| -> Result<()> {
        let mut steps = 0u64;
        loop {
            let t = state.t();
            if diag_time(diag_index) <= t {
                observer.diagnostic(state)?;
                while diag_time(diag_index) <= t && diag_time(diag_index) < t_end {
                    diag_index += 1;
                }
            }
            while next_snapshot < snapshots.len() && snapshots[next_snapshot] <= t {
                observer.snapshot(state)?;
                next_snapshot += 1;
            }
            if t >= t_end {
                return Ok(());
            }
            if steps >= config.max_steps {
                return Err(Error::StepLimit(config.max_steps));
            }
            let mut target = diag_time(diag_index).min(t_end);
            if let Some(&s) = snapshots.get(next_snapshot) {
                target = target.min(s);
            }
            let dt = config.dt_override.unwrap_or_else(|| state.stable_dt(config.cfl_safety));
            let landing = t + dt >= target;
            let dt = if landing { target - t } else { dt };
            state.advance(dt, config.scheme)?;
            if landing {
                state.metric = ConformalMetric::new(state.metric.u().clone(), target)?;
            }
            steps += 1;
        }
    };
    let termination = match run(&mut state, observer) {
        Ok(()) => Termination::Completed,
        Err(e) => Termination::Aborted(e),
    };
    Ok(EvolveOutcome { state, termination })
}
