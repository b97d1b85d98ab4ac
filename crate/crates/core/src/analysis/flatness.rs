use crate::conformal::{metric_grad_norm_sq, potential_f, scalar_curvature, ConformalMetric};
use crate::error::{Error, Result};
use crate::geometry::geodesic_distance;
use crate::grid::{window_abs_sup, window_sup, BoundaryCondition};

/// Checks `|f(x) - f(x0)| ≤ d(x, x0) sup|∇f|_g` on the window and summarises
/// how flat the metric has become.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatnessReport {
    /// `max(0, max_x |f(x) - f(x0)| - d(x, x0) sup|∇f|_g)`.
    pub max_violation: f64,
    pub sup_abs_r: f64,
    /// `max f - min f` over the window.
    pub f_oscillation: f64,
    pub f_at_x0: f64,
    pub sup_grad_f: f64,
}

pub fn flatness_certificate(
    m: &ConformalMetric,
    bc: &BoundaryCondition,
    x0: (usize, usize),
    margin: usize,
) -> Result<FlatnessReport> {
    let spec = *m.spec();
    if !spec.in_window(x0.0, x0.1, margin) {
        return Err(Error::InvalidArgument(format!("x0 = {x0:?} lies outside the margin-{margin} window")));
    }
    let f = potential_f(m)?;
    let sup_grad_f = window_sup(&metric_grad_norm_sq(&f, m, bc)?, margin)?.max(0.0).sqrt();
    let sup_abs_r = window_abs_sup(&scalar_curvature(m, bc)?, margin)?;
    let dist = geodesic_distance(m, x0)?;
    let f0 = f.get(x0.0, x0.1);
    let (mut lo, mut hi, mut violation) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for (i, j, fx) in f.window(margin) {
        lo = lo.min(fx);
        hi = hi.max(fx);
        violation = violation.max((fx - f0).abs() - dist.get(i, j) * sup_grad_f);
    }
    Ok(FlatnessReport { max_violation: violation, sup_abs_r, f_oscillation: hi - lo, f_at_x0: f0, sup_grad_f })
}
