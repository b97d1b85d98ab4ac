//! Uniform Cartesian grid, node-sampled fields and second-order stencils.
//!
//! Fields are stored row-major: node `(i, j)` lives at `j * nx + i` and sits at
//! `(x0 + i h, y0 + j h)`. Stencils are the 5-point Laplacian and central
//! first/second differences; boundary nodes are handled per [`BoundaryCondition`].

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Interior margin used for sup/inf windows when none is configured.
pub const DEFAULT_MARGIN: usize = 4;

const MIN_NODES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub x0: f64,
    pub y0: f64,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, h: f64, x0: f64, y0: f64) -> Result<Self> {
        if nx < MIN_NODES || ny < MIN_NODES {
            return Err(Error::InvalidGrid(format!("need at least {MIN_NODES} nodes per axis, got {nx}x{ny}")));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {h}")));
        }
        if !(x0.is_finite() && y0.is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        Ok(Self { nx, ny, h, x0, y0 })
    }

    /// Square grid of `n x n` nodes covering `[-half_width, half_width)` in each axis.
    ///
    /// The spacing is `2 half_width / n`, so for even `n` the origin is node `(n/2, n/2)`
    /// and the node set tiles the periodic box exactly.
    pub fn centered(n: usize, half_width: f64) -> Result<Self> {
        let h = 2.0 * half_width / n as f64;
        Self::new(n, n, h, -half_width, -half_width)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.h
    }

    /// Node whose coordinates equal `(x, y)` up to rounding, if any.
    pub fn node_at(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let fi = (x - self.x0) / self.h;
        let fj = (y - self.y0) / self.h;
        let (ri, rj) = (fi.round(), fj.round());
        let tol = 1e-9;
        if (fi - ri).abs() > tol || (fj - rj).abs() > tol || ri < 0.0 || rj < 0.0 {
            return None;
        }
        let (i, j) = (ri as usize, rj as usize);
        (i < self.nx && j < self.ny).then_some((i, j))
    }

    /// Whether node `(i, j)` is at least `margin` nodes from every edge.
    #[inline]
    pub fn in_window(&self, i: usize, j: usize, margin: usize) -> bool {
        i >= margin && j >= margin && i + margin < self.nx && j + margin < self.ny
    }

    pub fn window_is_empty(&self, margin: usize) -> bool {
        2 * margin >= self.nx || 2 * margin >= self.ny
    }

    /// Area of one node cell.
    pub fn cell_area(&self) -> f64 {
        self.h * self.h
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    spec: GridSpec,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn new(spec: GridSpec, data: Vec<f64>) -> Result<Self> {
        if data.len() != spec.len() {
            return Err(Error::InvalidGrid(format!("field has {} values, grid has {} nodes", data.len(), spec.len())));
        }
        check_finite(&spec, &data, "field construction")?;
        Ok(Self { spec, data })
    }

    pub fn constant(spec: GridSpec, value: f64) -> Result<Self> {
        Self::new(spec, vec![value; spec.len()])
    }

    /// Samples `f(x, y)` at every node.
    pub fn from_fn(spec: GridSpec, f: impl Fn(f64, f64) -> f64 + Sync) -> Result<Self> {
        let mut data = vec![0.0; spec.len()];
        data.par_chunks_mut(spec.nx).enumerate().for_each(|(j, row)| {
            let y = spec.y(j);
            for (i, out) in row.iter_mut().enumerate() {
                *out = f(spec.x(i), y);
            }
        });
        Self::new(spec, data)
    }

    #[inline]
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.spec.index(i, j)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync) -> Result<Self> {
        let data = self.data.par_iter().map(|&v| f(v)).collect();
        Self::new(self.spec, data)
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64 + Sync) -> Result<Self> {
        self.ensure_same_spec(other)?;
        let data = self.data.par_iter().zip(other.data.par_iter()).map(|(&a, &b)| f(a, b)).collect();
        Self::new(self.spec, data)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn scale(&self, s: f64) -> Result<Self> {
        self.map(|v| s * v)
    }

    pub fn ensure_same_spec(&self, other: &Self) -> Result<()> {
        if self.spec == other.spec {
            Ok(())
        } else {
            Err(Error::SpecMismatch)
        }
    }

    /// Values of the nodes in the interior window, with their indices.
    pub fn window(&self, margin: usize) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let spec = self.spec;
        (margin..spec.ny.saturating_sub(margin))
            .flat_map(move |j| (margin..spec.nx.saturating_sub(margin)).map(move |i| (i, j, self.get(i, j))))
    }

    /// Sum of the values times the cell area, over every node.
    pub fn integrate(&self) -> f64 {
        self.data.iter().sum::<f64>() * self.spec.cell_area()
    }

    pub fn to_csv(&self) -> String {
        let s = &self.spec;
        let mut out = String::with_capacity(self.data.len() * 20);
        let _ = writeln!(out, "# {},{},{},{},{}", s.nx, s.ny, s.h, s.x0, s.y0);
        for row in self.data.chunks(s.nx) {
            for (k, v) in row.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .and_then(|l| l.strip_prefix('#'))
            .ok_or_else(|| Error::Parse("missing `# nx,ny,h,x0,y0` header".into()))?;
        let parts: Vec<&str> = header.split(',').map(str::trim).collect();
        if parts.len() != 5 {
            return Err(Error::Parse(format!("header needs 5 entries, got {}", parts.len())));
        }
        let int = |s: &str| s.parse::<usize>().map_err(|e| Error::Parse(format!("{s}: {e}")));
        let real = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("{s}: {e}")));
        let spec = GridSpec::new(int(parts[0])?, int(parts[1])?, real(parts[2])?, real(parts[3])?, real(parts[4])?)?;
        let mut data = Vec::with_capacity(spec.len());
        for (j, line) in lines.enumerate() {
            let before = data.len();
            for v in line.split(',') {
                data.push(real(v.trim())?);
            }
            if data.len() - before != spec.nx {
                return Err(Error::Parse(format!("row {j} has {} values, expected {}", data.len() - before, spec.nx)));
            }
        }
        Self::new(spec, data)
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

fn check_finite(spec: &GridSpec, data: &[f64], context: &'static str) -> Result<()> {
    match data.iter().position(|v| !v.is_finite()) {
        None => Ok(()),
        Some(k) => Err(Error::NonFinite { context, i: k % spec.nx, j: k / spec.nx }),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub x: ScalarField,
    pub y: ScalarField,
}

impl VectorField {
    /// Pointwise Euclidean squared length.
    pub fn norm_sq(&self) -> Result<ScalarField> {
        self.x.zip_map(&self.y, |a, b| a * a + b * b)
    }
}

/// Symmetric 2-tensor; the off-diagonal component is stored once.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensorField {
    pub xx: ScalarField,
    pub xy: ScalarField,
    pub yy: ScalarField,
}

impl SymTensorField {
    pub fn spec(&self) -> &GridSpec {
        self.xx.spec()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    DirichletFrozen,
    Periodic,
    LinearExtrapolate,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryCondition {
    /// Boundary ring held at the stored values. Derivatives are only defined on
    /// the interior; stencil outputs are 0 on the ring.
    DirichletFrozen(Arc<ScalarField>),
    /// Wraps in both axes; requires even node counts.
    Periodic,
    /// Ghost nodes extrapolated linearly from the two nearest interior nodes.
    LinearExtrapolate,
}

impl BoundaryCondition {
    pub fn frozen(values: &ScalarField) -> Self {
        BoundaryCondition::DirichletFrozen(Arc::new(values.clone()))
    }

    pub fn kind(&self) -> BoundaryKind {
        match self {
            BoundaryCondition::DirichletFrozen(_) => BoundaryKind::DirichletFrozen,
            BoundaryCondition::Periodic => BoundaryKind::Periodic,
            BoundaryCondition::LinearExtrapolate => BoundaryKind::LinearExtrapolate,
        }
    }

    pub fn validate(&self, spec: &GridSpec) -> Result<()> {
        match self {
            BoundaryCondition::DirichletFrozen(values) if values.spec() != spec => {
                Err(Error::InvalidBoundary("frozen values live on a different grid".into()))
            }
            BoundaryCondition::Periodic if !spec.nx.is_multiple_of(2) || !spec.ny.is_multiple_of(2) => Err(
                Error::InvalidBoundary(format!("periodic grid needs even node counts, got {}x{}", spec.nx, spec.ny)),
            ),
            _ => Ok(()),
        }
    }

    /// Number of boundary rings on which stencil outputs are undefined.
    pub fn undefined_rings(&self) -> usize {
        match self {
            BoundaryCondition::DirichletFrozen(_) => 1,
            _ => 0,
        }
    }

    /// Rewrites the boundary ring of `data` with the frozen values (no-op otherwise).
    pub fn impose(&self, data: &mut [f64], spec: &GridSpec) {
        if let BoundaryCondition::DirichletFrozen(values) = self {
            for_each_ring_node(spec, |k| data[k] = values.data()[k]);
        }
    }
}

pub(crate) fn for_each_ring_node(spec: &GridSpec, mut f: impl FnMut(usize)) {
    let (nx, ny) = (spec.nx, spec.ny);
    for i in 0..nx {
        f(spec.index(i, 0));
        f(spec.index(i, ny - 1));
    }
    for j in 1..ny - 1 {
        f(spec.index(0, j));
        f(spec.index(nx - 1, j));
    }
}

/// 3x3 neighbourhood of a node; `at(di, dj)` with offsets in -1..=1.
struct Patch([[f64; 3]; 3]);

impl Patch {
    #[inline(always)]
    fn at(&self, di: isize, dj: isize) -> f64 {
        self.0[(dj + 1) as usize][(di + 1) as usize]
    }
}

/// Value at a possibly out-of-range node, resolved per boundary condition.
fn ghost(f: &ScalarField, bc: &BoundaryCondition, i: isize, j: isize) -> f64 {
    let s = f.spec();
    let (nx, ny) = (s.nx as isize, s.ny as isize);
    match bc {
        BoundaryCondition::Periodic => f.get(i.rem_euclid(nx) as usize, j.rem_euclid(ny) as usize),
        _ => {
            if i < 0 {
                2.0 * ghost(f, bc, 0, j) - ghost(f, bc, 1, j)
            } else if i >= nx {
                2.0 * ghost(f, bc, nx - 1, j) - ghost(f, bc, nx - 2, j)
            } else if j < 0 {
                2.0 * ghost(f, bc, i, 0) - ghost(f, bc, i, 1)
            } else if j >= ny {
                2.0 * ghost(f, bc, i, ny - 1) - ghost(f, bc, i, ny - 2)
            } else {
                f.get(i as usize, j as usize)
            }
        }
    }
}

/// Applies a 3x3 kernel at every node, honouring the boundary condition.
fn apply(
    f: &ScalarField,
    bc: &BoundaryCondition,
    context: &'static str,
    kernel: impl Fn(&Patch) -> f64 + Sync,
) -> Result<ScalarField> {
    bc.validate(f.spec())?;
    let spec = *f.spec();
    let (nx, ny) = (spec.nx, spec.ny);
    let src = f.data();
    let dirichlet = bc.kind() == BoundaryKind::DirichletFrozen;
    let mut out = vec![0.0; spec.len()];
    out.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
        let edge_row = j == 0 || j == ny - 1;
        for (i, o) in row.iter_mut().enumerate() {
            let edge = edge_row || i == 0 || i == nx - 1;
            if edge {
                if dirichlet {
                    continue;
                }
                let mut p = [[0.0; 3]; 3];
                for (dj, prow) in p.iter_mut().enumerate() {
                    for (di, v) in prow.iter_mut().enumerate() {
                        *v = ghost(f, bc, i as isize + di as isize - 1, j as isize + dj as isize - 1);
                    }
                }
                *o = kernel(&Patch(p));
            } else {
                let k = j * nx + i;
                let p = [
                    [src[k - nx - 1], src[k - nx], src[k - nx + 1]],
                    [src[k - 1], src[k], src[k + 1]],
                    [src[k + nx - 1], src[k + nx], src[k + nx + 1]],
                ];
                *o = kernel(&Patch(p));
            }
        }
    });
    check_finite(&spec, &out, context)?;
    Ok(ScalarField { spec, data: out })
}

/// 5-point Laplacian.
pub fn laplacian(f: &ScalarField, bc: &BoundaryCondition) -> Result<ScalarField> {
    let inv_h2 = 1.0 / (f.spec().h * f.spec().h);
    apply(f, bc, "laplacian", |p| (p.at(1, 0) + p.at(-1, 0) + p.at(0, 1) + p.at(0, -1) - 4.0 * p.at(0, 0)) * inv_h2)
}

/// Central-difference gradient.
pub fn gradient(f: &ScalarField, bc: &BoundaryCondition) -> Result<VectorField> {
    let inv_2h = 0.5 / f.spec().h;
    Ok(VectorField {
        x: apply(f, bc, "gradient", |p| (p.at(1, 0) - p.at(-1, 0)) * inv_2h)?,
        y: apply(f, bc, "gradient", |p| (p.at(0, 1) - p.at(0, -1)) * inv_2h)?,
    })
}

/// Second differences; the cross term uses the 4-corner stencil.
pub fn hessian(f: &ScalarField, bc: &BoundaryCondition) -> Result<SymTensorField> {
    let h = f.spec().h;
    let inv_h2 = 1.0 / (h * h);
    let inv_4h2 = 0.25 * inv_h2;
    Ok(SymTensorField {
        xx: apply(f, bc, "hessian", |p| (p.at(1, 0) - 2.0 * p.at(0, 0) + p.at(-1, 0)) * inv_h2)?,
        xy: apply(f, bc, "hessian", |p| (p.at(1, 1) - p.at(1, -1) - p.at(-1, 1) + p.at(-1, -1)) * inv_4h2)?,
        yy: apply(f, bc, "hessian", |p| (p.at(0, 1) - 2.0 * p.at(0, 0) + p.at(0, -1)) * inv_h2)?,
    })
}

/// Maximum over nodes at least `margin` nodes from the boundary.
pub fn window_sup(f: &ScalarField, margin: usize) -> Result<f64> {
    window_fold(f, margin, f64::NEG_INFINITY, f64::max)
}

/// Minimum over nodes at least `margin` nodes from the boundary.
pub fn window_inf(f: &ScalarField, margin: usize) -> Result<f64> {
    window_fold(f, margin, f64::INFINITY, f64::min)
}

/// Maximum of `|f|` over the interior window.
pub fn window_abs_sup(f: &ScalarField, margin: usize) -> Result<f64> {
    window_fold(f, margin, 0.0, |acc, v| acc.max(v.abs()))
}

fn window_fold(f: &ScalarField, margin: usize, init: f64, op: impl Fn(f64, f64) -> f64) -> Result<f64> {
    if f.spec().window_is_empty(margin) {
        return Err(Error::EmptyWindow { margin });
    }
    Ok(f.window(margin).fold(init, |acc, (_, _, v)| op(acc, v)))
}
