//! Maximum-principle checks: the curvature lower bound `R ≥ θ(t)`, sup-norm
//! decay of the heat companion, the barrier function and the bound `∂t v ≤ v/t`.

use std::fmt;

use super::DiagnosticSeries;
use crate::conformal::ConformalMetric;
use crate::error::{Error, Result};
use crate::grid::{laplacian, window_sup, BoundaryCondition, GridSpec, ScalarField};

/// Outcome of one check, with the tolerance it was judged against.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub check: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {}: value = {:e}, tolerance = {:e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.check,
            self.value,
            self.tolerance
        )?;
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

/// Verdicts of a maximum-principle session.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MpReport {
    pub verdicts: Vec<Verdict>,
}

impl MpReport {
    pub fn all_passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn render(&self) -> String {
        self.verdicts.iter().map(|v| format!("{v}\n")).collect()
    }
}

/// `θ(t) = -k0 / (1 + k0 t)`.
pub fn theta(t: f64, k0: f64) -> f64 {
    -k0 / (1.0 + k0 * t)
}

/// `sup |R(·, 0)|` from the first row.
pub fn initial_k0(series: &DiagnosticSeries) -> Result<f64> {
    series.first().map(|r| r.sup_abs_r()).ok_or_else(|| Error::InsufficientData("empty series".into()))
}

fn check_k0(series: &DiagnosticSeries, k0: f64) -> Result<()> {
    let needed = initial_k0(series)?;
    if k0 < needed * (1.0 - 1e-12) {
        return Err(Error::InvalidArgument(format!("k0 = {k0} is below sup|R(·,0)| = {needed}")));
    }
    Ok(())
}

/// `min_t [inf R(t) + k0/(1 + k0 t)]`; nonnegative when `R ≥ -k0/(1+k0 t)` holds.
pub fn lower_bound_margin(series: &DiagnosticSeries, k0: f64) -> Result<f64> {
    check_k0(series, k0)?;
    Ok(series.rows().iter().map(|r| r.inf_r + k0 / (1.0 + k0 * r.t)).fold(f64::INFINITY, f64::min))
}

/// `S = R - θ` stays `≥ -tol` over the run.
pub fn comparison_verify(series: &DiagnosticSeries, k0: f64, tol: f64) -> Result<Verdict> {
    check_k0(series, k0)?;
    let min_s = series.rows().iter().map(|r| r.inf_r - theta(r.t, k0)).fold(f64::INFINITY, f64::min);
    Ok(Verdict {
        check: "comparison: min S = min (R - theta)".into(),
        passed: min_s >= -tol,
        value: min_s,
        tolerance: tol,
        detail: format!("k0 = {k0}"),
    })
}

/// Heat companion sup-norm never exceeds its initial value by more than a
/// relative `tolerance` (pass `tol_per_step × steps` to budget per step).
pub fn mp1_verify(series: &DiagnosticSeries, tolerance: f64) -> Result<Verdict> {
    let w0 = series.first().map(|r| r.sup_w).ok_or_else(|| Error::InsufficientData("empty series".into()))?;
    let bound = w0 * (1.0 + tolerance);
    let worst = series.rows().iter().map(|r| r.sup_w).fold(f64::NEG_INFINITY, f64::max);
    Ok(Verdict {
        check: "MP1: sup|w(t)| <= sup|w(0)|".into(),
        passed: worst <= bound,
        value: if w0 > 0.0 { worst / w0 - 1.0 } else { worst - w0 },
        tolerance,
        detail: format!("sup|w(0)| = {w0}, max_t sup|w(t)| = {worst}"),
    })
}

/// `η = ε ln(1 + |x|²)`: nonnegative, zero at the origin, unbounded, with
/// `Δ_E η = 4ε / (1 + |x|²)² ≤ 4ε`.
pub fn barrier_eta(eps: f64, spec: &GridSpec) -> Result<ScalarField> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("barrier needs eps > 0, got {eps}")));
    }
    spec.node_at(0.0, 0.0).ok_or(Error::OriginNotNode)?;
    ScalarField::from_fn(*spec, |x, y| eps * (1.0 + x * x + y * y).ln())
}

/// Largest admissible `ε` for a metric with `sup|u| ≤ M`: `e^{-2M} / 4`.
pub fn barrier_eps_bound(sup_abs_u: f64) -> f64 {
    (-2.0 * sup_abs_u).exp() / 4.0
}

/// Checks `η ≥ 0`, `η(0) = 0` and `max Δ_g η ≤ 1 + tol` on the window.
pub fn barrier_check(eta: &ScalarField, m: &ConformalMetric, tol: f64, margin: usize) -> Result<Verdict> {
    eta.ensure_same_spec(m.u())?;
    let (oi, oj) = eta.spec().node_at(0.0, 0.0).ok_or(Error::OriginNotNode)?;
    let nonnegative = eta.data().iter().all(|&v| v >= 0.0);
    let zero_at_origin = eta.get(oi, oj) == 0.0;
    let lap = laplacian(eta, &BoundaryCondition::LinearExtrapolate)?;
    let lap_g = m.u().zip_map(&lap, |u, l| (-2.0 * u).exp() * l)?;
    let max_lap = window_sup(&lap_g, margin.max(1))?;
    Ok(Verdict {
        check: "barrier: eta >= 0, eta(0) = 0, max Laplacian_g eta <= 1".into(),
        passed: nonnegative && zero_at_origin && max_lap <= 1.0 + tol,
        value: max_lap,
        tolerance: tol,
        detail: format!("nonnegative = {nonnegative}, eta(0) = {}", eta.get(oi, oj)),
    })
}

/// Max over window nodes and interior snapshots of `∂t v - v/t`, with `∂t v`
/// from centred differences of neighbouring snapshots. Passes iff `≤ tol`.
pub fn aronson_benilan_check(snapshots: &[ConformalMetric], margin: usize, tol: f64) -> Result<Verdict> {
    if snapshots.len() < 3 {
        return Err(Error::InsufficientData(format!("need at least 3 snapshots, got {}", snapshots.len())));
    }
    for w in snapshots.windows(2) {
        w[0].u().ensure_same_spec(w[1].u())?;
        if w[1].t() <= w[0].t() {
            return Err(Error::InvalidArgument("snapshot times must increase".into()));
        }
    }
    if snapshots[1].t() <= 0.0 {
        return Err(Error::InvalidArgument("interior snapshots need t > 0".into()));
    }
    let vs = snapshots.iter().map(ConformalMetric::conformal_factor).collect::<Result<Vec<_>>>()?;
    let mut worst = f64::NEG_INFINITY;
    for k in 1..snapshots.len() - 1 {
        let (tp, tc, tn) = (snapshots[k - 1].t(), snapshots[k].t(), snapshots[k + 1].t());
        let excess = vs[k + 1].zip_map(&vs[k - 1], |a, b| (a - b) / (tn - tp))?.zip_map(&vs[k], |dv, v| dv - v / tc)?;
        worst = worst.max(window_sup(&excess, margin)?);
    }
    Ok(Verdict {
        check: "Aronson-Benilan: dv/dt <= v/t".into(),
        passed: worst <= tol,
        value: worst,
        tolerance: tol,
        detail: String::new(),
    })
}
