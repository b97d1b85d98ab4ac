use std::fmt::Write as _;

use super::{Column, DiagnosticSeries};
use crate::error::{Error, Result};
use crate::fit::linear_fit;

/// Envelope of `Q(t) ≤ C / (1 + t)^p` over a recorded series.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub quantity: Column,
    pub p: f64,
    /// `max_t Q(t) (1 + t)^p`.
    pub envelope_c: f64,
    /// `Q(t)(1+t)^p` is non-increasing over the tail.
    pub tail_monotone: bool,
    /// Slope of `ln Q` against `ln(1 + t)` over the tail; `None` when `Q ≤ 0` there.
    pub fitted_slope: Option<f64>,
    /// `max_t Q(t)` over the tail; lets callers tell an identically-zero tail apart.
    pub tail_max: f64,
}

impl DecayReport {
    pub const CSV_HEADER: &'static str = "quantity,p,envelope_C,tail_monotone,fitted_slope";

    pub fn csv_line(&self) -> String {
        let slope = self.fitted_slope.map_or_else(|| "nan".to_string(), |s| s.to_string());
        format!("{},{},{},{},{}", self.quantity, self.p, self.envelope_c, self.tail_monotone, slope)
    }

    pub fn to_csv(reports: &[DecayReport]) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", Self::CSV_HEADER);
        for r in reports {
            let _ = writeln!(out, "{}", r.csv_line());
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayOptions {
    /// Fraction of the series, counted from the end, used as the tail.
    pub tail_fraction: f64,
    /// Relative slack allowed between consecutive tail products.
    pub monotone_rel_tol: f64,
}

impl Default for DecayOptions {
    fn default() -> Self {
        Self { tail_fraction: 0.5, monotone_rel_tol: 1e-9 }
    }
}

pub fn decay_envelope(series: &DiagnosticSeries, quantity: Column, p: f64, opts: &DecayOptions) -> Result<DecayReport> {
    if !(opts.tail_fraction > 0.0 && opts.tail_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!("tail fraction must be in (0, 1], got {}", opts.tail_fraction)));
    }
    let rows = series.rows();
    let start = ((rows.len() as f64) * (1.0 - opts.tail_fraction)).floor() as usize;
    let tail = &rows[start.min(rows.len())..];
    if tail.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "decay fit needs at least 2 rows in the tail, series has {}",
            rows.len()
        )));
    }
    let weighted = |r: &super::DiagnosticRow| r.get(quantity) * (1.0 + r.t).powf(p);
    let envelope_c = rows.iter().map(weighted).fold(f64::NEG_INFINITY, f64::max);
    let products: Vec<f64> = tail.iter().map(weighted).collect();
    let tail_monotone = products.windows(2).all(|w| w[1] <= w[0] + opts.monotone_rel_tol * w[0].abs());
    let fitted_slope = if tail.iter().all(|r| r.get(quantity) > 0.0) {
        let xs: Vec<f64> = tail.iter().map(|r| (1.0 + r.t).ln()).collect();
        let ys: Vec<f64> = tail.iter().map(|r| r.get(quantity).ln()).collect();
        linear_fit(&xs, &ys).map(|(m, _)| m)
    } else {
        None
    };
    let tail_max = tail.iter().map(|r| r.get(quantity)).fold(f64::NEG_INFINITY, f64::max);
    Ok(DecayReport { quantity, p, envelope_c, tail_monotone, fitted_slope, tail_max })
}

/// Empirical constant `K = max sqrt(Q_m(t)) t^{m/2}` over the early window
/// `0 < t ≤ 1/k0`, where `Q_1 = sup|∇R|²` and `Q_2 = sup|∇²R|²`. Report only.
pub fn shi_window_check(series: &DiagnosticSeries, m: u32, k0: f64) -> Result<f64> {
    let column = match m {
        1 => Column::SupGradR2,
        2 => Column::SupHess2R,
        _ => return Err(Error::InvalidArgument(format!("derivative order must be 1 or 2, got {m}"))),
    };
    let window_end = if k0 > 0.0 { 1.0 / k0 } else { f64::INFINITY };
    let vals: Vec<f64> = series
        .rows()
        .iter()
        .filter(|r| r.t > 0.0 && r.t <= window_end)
        .map(|r| r.get(column).max(0.0).sqrt() * r.t.powf(0.5 * m as f64))
        .collect();
    if vals.is_empty() {
        return Err(Error::InsufficientData(format!("no rows with 0 < t <= {window_end}")));
    }
    Ok(vals.into_iter().fold(0.0, f64::max))
}
