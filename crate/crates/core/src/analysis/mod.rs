//! Diagnostics recorded along a run and the checks evaluated on them.
//!
//! A [`DiagnosticSeries`] holds one [`DiagnosticRow`] per diagnostic time with
//! the interior-window sup/inf of every tracked quantity. The checks are pure
//! functions of a series (or of snapshots) and explicit tolerances.

mod decay;
mod flatness;
mod hsu;
mod maximum;

pub use decay::{decay_envelope, shi_window_check, DecayOptions, DecayReport};
pub use flatness::{flatness_certificate, FlatnessReport};
pub use hsu::{hsu_fit, FitWindow, HsuFit};
pub use maximum::{
    aronson_benilan_check, barrier_check, barrier_eps_bound, barrier_eta, comparison_verify, initial_k0,
    lower_bound_margin, mp1_verify, theta, MpReport, Verdict,
};

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::conformal::{potential_f, CurvatureReport};
use crate::error::{Error, Result};
use crate::flow::{evolve, EvolveOutcome, FlowState, Observer, StepperConfig};
use crate::grid::{window_abs_sup, window_inf, window_sup, DEFAULT_MARGIN};

/// Columns of the series CSV, in file order.
pub const SERIES_COLUMNS: [&str; 12] = [
    "t",
    "sup_R",
    "inf_R",
    "sup_gradf2",
    "sup_H",
    "sup_gradR2",
    "sup_hess2R",
    "sup_F",
    "sup_G",
    "sup_J",
    "area",
    "sup_w",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Column {
    T,
    SupR,
    InfR,
    SupGradF2,
    SupH,
    SupGradR2,
    SupHess2R,
    SupF,
    SupG,
    SupJ,
    Area,
    SupW,
}

impl Column {
    pub const ALL: [Column; 12] = [
        Column::T,
        Column::SupR,
        Column::InfR,
        Column::SupGradF2,
        Column::SupH,
        Column::SupGradR2,
        Column::SupHess2R,
        Column::SupF,
        Column::SupG,
        Column::SupJ,
        Column::Area,
        Column::SupW,
    ];

    pub fn name(self) -> &'static str {
        SERIES_COLUMNS[self as usize]
    }
}

impl fmt::Display for Column {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Column {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Column::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown series column `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticRow {
    pub t: f64,
    pub sup_r: f64,
    pub inf_r: f64,
    pub sup_gradf2: f64,
    pub sup_h: f64,
    pub sup_grad_r2: f64,
    pub sup_hess2_r: f64,
    pub sup_f: f64,
    pub sup_g: f64,
    pub sup_j: f64,
    pub area: f64,
    pub sup_w: f64,
}

impl DiagnosticRow {
    pub fn get(&self, c: Column) -> f64 {
        self.values()[c as usize]
    }

    pub fn values(&self) -> [f64; 12] {
        [
            self.t,
            self.sup_r,
            self.inf_r,
            self.sup_gradf2,
            self.sup_h,
            self.sup_grad_r2,
            self.sup_hess2_r,
            self.sup_f,
            self.sup_g,
            self.sup_j,
            self.area,
            self.sup_w,
        ]
    }

    fn from_values(v: [f64; 12]) -> Self {
        Self {
            t: v[0],
            sup_r: v[1],
            inf_r: v[2],
            sup_gradf2: v[3],
            sup_h: v[4],
            sup_grad_r2: v[5],
            sup_hess2_r: v[6],
            sup_f: v[7],
            sup_g: v[8],
            sup_j: v[9],
            area: v[10],
            sup_w: v[11],
        }
    }

    /// `sup |R|` over the window.
    pub fn sup_abs_r(&self) -> f64 {
        self.sup_r.abs().max(self.inf_r.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecordOptions {
    pub margin: usize,
    /// The `λ` in `J = t⁴|∇R|² + λ t³ R²`.
    pub lambda: f64,
}

impl Default for RecordOptions {
    fn default() -> Self {
        Self { margin: DEFAULT_MARGIN, lambda: 4.0 }
    }
}

/// Evaluates every tracked sup on the interior window of `state`.
pub fn record(state: &FlowState, opts: &RecordOptions) -> Result<DiagnosticRow> {
    let needed = 2 * state.bc().undefined_rings();
    if opts.margin < needed {
        return Err(Error::InvalidArgument(format!(
            "margin {} too small: derivatives of R are undefined within {needed} nodes of a Dirichlet boundary",
            opts.margin
        )));
    }
    let m = state.metric();
    let margin = opts.margin;
    let rep = CurvatureReport::compute(m, state.bc())?;
    let f = potential_f(m)?;
    let sup_w = match state.companion() {
        Some(c) => window_abs_sup(c.w(), 0)?,
        None => 0.0,
    };
    Ok(DiagnosticRow {
        t: m.t(),
        sup_r: window_sup(&rep.r, margin)?,
        inf_r: window_inf(&rep.r, margin)?,
        sup_gradf2: window_sup(&rep.gradf2, margin)?,
        sup_h: window_sup(&rep.h, margin)?,
        sup_grad_r2: window_sup(&rep.grad_r2, margin)?,
        sup_hess2_r: window_sup(&rep.hess2_r, margin)?,
        sup_f: window_sup(&rep.quantity_f(&f)?, margin)?,
        sup_g: window_sup(&rep.quantity_g()?, margin)?,
        sup_j: window_sup(&rep.quantity_j(opts.lambda)?, margin)?,
        area: m.area(),
        sup_w,
    })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiagnosticSeries {
    rows: Vec<DiagnosticRow>,
}

impl DiagnosticSeries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_rows(rows: Vec<DiagnosticRow>) -> Result<Self> {
        let mut s = Self::new();
        for r in rows {
            s.push(r)?;
        }
        Ok(s)
    }

    /// Appends a row; times must increase strictly and every entry be finite.
    pub fn push(&mut self, row: DiagnosticRow) -> Result<()> {
        if let Some(k) = row.values().iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite {} at t = {}", SERIES_COLUMNS[k], row.t)));
        }
        if let Some(last) = self.rows.last() {
            if row.t <= last.t {
                return Err(Error::InvalidArgument(format!("series times must increase: {} after {}", row.t, last.t)));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn rows(&self) -> &[DiagnosticRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn first(&self) -> Option<&DiagnosticRow> {
        self.rows.first()
    }

    pub fn last(&self) -> Option<&DiagnosticRow> {
        self.rows.last()
    }

    pub fn column(&self, c: Column) -> Vec<f64> {
        self.rows.iter().map(|r| r.get(c)).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = SERIES_COLUMNS.join(",");
        out.push('\n');
        for r in &self.rows {
            let line: Vec<String> = r.values().iter().map(|v| (v + 0.0).to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty series file".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols != SERIES_COLUMNS {
            return Err(Error::Parse(format!("unexpected series header `{header}`")));
        }
        let mut series = Self::new();
        for (n, line) in lines.enumerate() {
            let vals = line
                .split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|e| Error::Parse(format!("row {n}: {v}: {e}"))))
                .collect::<Result<Vec<f64>>>()?;
            let arr: [f64; 12] = vals.try_into().map_err(|_| Error::Parse(format!("row {n}: expected 12 values")))?;
            series.push(DiagnosticRow::from_values(arr))?;
        }
        Ok(series)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text)
    }
}

/// Observer that appends a diagnostic row at every hook call.
pub struct SeriesRecorder {
    pub options: RecordOptions,
    pub series: DiagnosticSeries,
}

impl SeriesRecorder {
    pub fn new(options: RecordOptions) -> Self {
        Self { options, series: DiagnosticSeries::new() }
    }
}

impl Observer for SeriesRecorder {
    fn diagnostic(&mut self, state: &FlowState) -> Result<()> {
        let row = record(state, &self.options)?;
        self.series.push(row)
    }
}

/// Runs [`evolve`] with a [`SeriesRecorder`] attached.
pub fn evolve_recorded(
    state: FlowState,
    config: &StepperConfig,
    options: RecordOptions,
) -> Result<(EvolveOutcome, DiagnosticSeries)> {
    let mut rec = SeriesRecorder::new(options);
    let out = evolve(state, config, &mut rec)?;
    Ok((out, rec.series))
}
