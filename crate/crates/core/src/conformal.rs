//! Calculus for conformally flat metrics `g = e^{2u} g_E` on the plane.
//!
//! Only `u` is stored. The conformal factor `v = e^{2u}`, the potential
//! `f = -2u` and the inverse factor `e^{-2u}` are recomputed at each use.
//! Norms of tensors are taken in `g`: a covector picks up `e^{-2u}`, a
//! 2-tensor `e^{-4u}`.

use crate::error::{Error, Result};
use crate::grid::{gradient, hessian, laplacian, BoundaryCondition, GridSpec, ScalarField, SymTensorField};

#[derive(Debug, Clone, PartialEq)]
pub struct ConformalMetric {
    u: ScalarField,
    t: f64,
}

impl ConformalMetric {
    pub fn new(u: ScalarField, t: f64) -> Result<Self> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!("metric time must be finite and >= 0, got {t}")));
        }
        Ok(Self { u, t })
    }

    pub fn flat(spec: GridSpec) -> Result<Self> {
        Self::new(ScalarField::constant(spec, 0.0)?, 0.0)
    }

    #[inline]
    pub fn u(&self) -> &ScalarField {
        &self.u
    }

    #[inline]
    pub fn t(&self) -> f64 {
        self.t
    }

    #[inline]
    pub fn spec(&self) -> &GridSpec {
        self.u.spec()
    }

    /// `v = e^{2u}`.
    pub fn conformal_factor(&self) -> Result<ScalarField> {
        self.u.map(|u| (2.0 * u).exp())
    }

    /// `e^{-2u}`, the diffusivity of the flow.
    pub fn inverse_factor(&self) -> Result<ScalarField> {
        self.u.map(|u| (-2.0 * u).exp())
    }

    /// Total area `sum e^{2u} h^2` over every node.
    pub fn area(&self) -> f64 {
        let s: f64 = self.u.data().iter().map(|&u| (2.0 * u).exp()).sum();
        s * self.spec().cell_area()
    }

    pub fn into_parts(self) -> (ScalarField, f64) {
        (self.u, self.t)
    }
}

/// `R = -2 e^{-2u} Δu`.
pub fn scalar_curvature(m: &ConformalMetric, bc: &BoundaryCondition) -> Result<ScalarField> {
    let lap = laplacian(m.u(), bc)?;
    m.u().zip_map(&lap, |u, l| -2.0 * (-2.0 * u).exp() * l)
}

/// `f = -2u`.
pub fn potential_f(m: &ConformalMetric) -> Result<ScalarField> {
    m.u().scale(-2.0)
}

/// `Δ_g w = e^{-2u} Δw`.
pub fn metric_laplacian(w: &ScalarField, m: &ConformalMetric, bc: &BoundaryCondition) -> Result<ScalarField> {
    w.ensure_same_spec(m.u())?;
    let lap = laplacian(w, bc)?;
    m.u().zip_map(&lap, |u, l| (-2.0 * u).exp() * l)
}

/// `|∇w|²_g = e^{-2u} |∇w|²_E`.
pub fn metric_grad_norm_sq(w: &ScalarField, m: &ConformalMetric, bc: &BoundaryCondition) -> Result<ScalarField> {
    w.ensure_same_spec(m.u())?;
    let g = gradient(w, bc)?.norm_sq()?;
    m.u().zip_map(&g, |u, n| (-2.0 * u).exp() * n)
}

/// Christoffel symbols of `e^{2u} g_E`; `g{k}_{ij}` is `Γ^k_{ij}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffels {
    pub g1_11: ScalarField,
    pub g1_12: ScalarField,
    pub g1_22: ScalarField,
    pub g2_11: ScalarField,
    pub g2_12: ScalarField,
    pub g2_22: ScalarField,
}

pub fn christoffels(m: &ConformalMetric, bc: &BoundaryCondition) -> Result<Christoffels> {
    let du = gradient(m.u(), bc)?;
    Ok(Christoffels {
        g1_11: du.x.clone(),
        g1_12: du.y.clone(),
        g1_22: du.x.scale(-1.0)?,
        g2_11: du.y.scale(-1.0)?,
        g2_12: du.x,
        g2_22: du.y,
    })
}

/// `D²w_ij = ∂_i∂_j w - Γ^k_ij ∂_k w`.
pub fn covariant_hessian(w: &ScalarField, m: &ConformalMetric, bc: &BoundaryCondition) -> Result<SymTensorField> {
    w.ensure_same_spec(m.u())?;
    let du = gradient(m.u(), bc)?;
    let dw = gradient(w, bc)?;
    let hw = hessian(w, bc)?;
    let spec = *w.spec();
    let n = spec.len();
    let (ux, uy, wx, wy) = (du.x.data(), du.y.data(), dw.x.data(), dw.y.data());
    let mut xx = Vec::with_capacity(n);
    let mut xy = Vec::with_capacity(n);
    let mut yy = Vec::with_capacity(n);
    for k in 0..n {
        xx.push(hw.xx.data()[k] - (ux[k] * wx[k] - uy[k] * wy[k]));
        xy.push(hw.xy.data()[k] - (uy[k] * wx[k] + ux[k] * wy[k]));
        yy.push(hw.yy.data()[k] - (-ux[k] * wx[k] + uy[k] * wy[k]));
    }
    Ok(SymTensorField {
        xx: ScalarField::new(spec, xx)?,
        xy: ScalarField::new(spec, xy)?,
        yy: ScalarField::new(spec, yy)?,
    })
}

/// `|T|²_g = e^{-4u} (T_xx² + 2 T_xy² + T_yy²)`.
fn tensor_norm_sq(t: &SymTensorField, m: &ConformalMetric) -> Result<ScalarField> {
    let spec = *t.spec();
    let data = (0..spec.len())
        .map(|k| {
            let (a, b, c) = (t.xx.data()[k], t.xy.data()[k], t.yy.data()[k]);
            (-4.0 * m.u().data()[k]).exp() * (a * a + 2.0 * b * b + c * c)
        })
        .collect();
    ScalarField::new(spec, data)
}

/// `|D²w - ½ Δ_g w · g|²_g`.
pub fn traceless_hessian_norm_sq(w: &ScalarField, m: &ConformalMetric, bc: &BoundaryCondition) -> Result<ScalarField> {
    let d = covariant_hessian(w, m, bc)?;
    let spec = *w.spec();
    let data = (0..spec.len())
        .map(|k| {
            let (a, b, c) = (d.xx.data()[k], d.xy.data()[k], d.yy.data()[k]);
            // ½ Δ_g w · g_ii = ½ (a + c) in coordinates
            let half_trace = 0.5 * (a + c);
            let (p, q) = (a - half_trace, c - half_trace);
            (-4.0 * m.u().data()[k]).exp() * (p * p + 2.0 * b * b + q * q)
        })
        .collect();
    ScalarField::new(spec, data)
}

/// `|∇R|²_g`.
pub fn cov_grad_r_norm_sq(m: &ConformalMetric, bc: &BoundaryCondition) -> Result<ScalarField> {
    let r = scalar_curvature(m, bc)?;
    metric_grad_norm_sq(&r, m, bc)
}

/// `|∇²R|²_g` with the covariant Hessian.
pub fn cov_hessian_r_norm_sq(m: &ConformalMetric, bc: &BoundaryCondition) -> Result<ScalarField> {
    let r = scalar_curvature(m, bc)?;
    tensor_norm_sq(&covariant_hessian(&r, m, bc)?, m)
}

/// `F = t |∇f|²_g + f²`.
pub fn quantity_f(m: &ConformalMetric, bc: &BoundaryCondition) -> Result<ScalarField> {
    let f = potential_f(m)?;
    let g2 = metric_grad_norm_sq(&f, m, bc)?;
    let t = m.t();
    f.zip_map(&g2, |f, g| t * g + f * f)
}

/// `H = R + |∇f|²_g`.
pub fn quantity_h(m: &ConformalMetric, bc: &BoundaryCondition) -> Result<ScalarField> {
    let r = scalar_curvature(m, bc)?;
    let g2 = metric_grad_norm_sq(&potential_f(m)?, m, bc)?;
    r.add(&g2)
}

/// `G = t (H + |∇f|²_g)`.
pub fn quantity_g(m: &ConformalMetric, bc: &BoundaryCondition) -> Result<ScalarField> {
    let r = scalar_curvature(m, bc)?;
    let g2 = metric_grad_norm_sq(&potential_f(m)?, m, bc)?;
    let t = m.t();
    r.zip_map(&g2, |r, g| t * (r + 2.0 * g))
}

/// `J = t⁴ |∇R|²_g + λ t³ R²`.
pub fn quantity_j(m: &ConformalMetric, bc: &BoundaryCondition, lambda: f64) -> Result<ScalarField> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("J needs lambda > 0, got {lambda}")));
    }
    let r = scalar_curvature(m, bc)?;
    let gr = metric_grad_norm_sq(&r, m, bc)?;
    let t = m.t();
    r.zip_map(&gr, |r, g| t.powi(4) * g + lambda * t.powi(3) * r * r)
}

/// Every curvature field needed by the diagnostics, evaluated once.
#[derive(Debug, Clone)]
pub struct CurvatureReport {
    pub t: f64,
    pub r: ScalarField,
    pub gradf2: ScalarField,
    pub h: ScalarField,
    pub grad_r2: ScalarField,
    pub hess2_r: ScalarField,
    pub traceless_hess2: ScalarField,
}

impl CurvatureReport {
    pub fn compute(m: &ConformalMetric, bc: &BoundaryCondition) -> Result<Self> {
        let r = scalar_curvature(m, bc)?;
        let f = potential_f(m)?;
        let gradf2 = metric_grad_norm_sq(&f, m, bc)?;
        let h = r.add(&gradf2)?;
        let grad_r2 = metric_grad_norm_sq(&r, m, bc)?;
        let hess2_r = tensor_norm_sq(&covariant_hessian(&r, m, bc)?, m)?;
        let traceless_hess2 = traceless_hessian_norm_sq(&f, m, bc)?;
        Ok(Self { t: m.t(), r, gradf2, h, grad_r2, hess2_r, traceless_hess2 })
    }

    pub fn quantity_f(&self, f: &ScalarField) -> Result<ScalarField> {
        let t = self.t;
        f.zip_map(&self.gradf2, |f, g| t * g + f * f)
    }

    pub fn quantity_g(&self) -> Result<ScalarField> {
        let t = self.t;
        self.h.zip_map(&self.gradf2, |h, g| t * (h + g))
    }

    pub fn quantity_j(&self, lambda: f64) -> Result<ScalarField> {
        let t = self.t;
        self.grad_r2.zip_map(&self.r, |g, r| t.powi(4) * g + lambda * t.powi(3) * r * r)
    }

    /// Named fields, for CSV export.
    pub fn fields(&self) -> [(&'static str, &ScalarField); 6] {
        [
            ("R", &self.r),
            ("gradf2", &self.gradf2),
            ("H", &self.h),
            ("gradR2", &self.grad_r2),
            ("hess2R", &self.hess2_r),
            ("traceless_hess2", &self.traceless_hess2),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{hessian, window_sup};

    const BC: BoundaryCondition = BoundaryCondition::LinearExtrapolate;

    fn spec() -> GridSpec {
        GridSpec::centered(32, 2.0).unwrap()
    }

    fn metric(u: impl Fn(f64, f64) -> f64 + Sync, t: f64) -> ConformalMetric {
        ConformalMetric::new(ScalarField::from_fn(spec(), u).unwrap(), t).unwrap()
    }

    fn all_close(f: &ScalarField, target: f64, tol: f64, margin: usize) {
        for (i, j, v) in f.window(margin) {
            assert!((v - target).abs() <= tol, "({i},{j}): {v} vs {target}");
        }
    }

    #[test]
    fn flat_metric_has_no_curvature() {
        let m = ConformalMetric::flat(spec()).unwrap();
        let rep = CurvatureReport::compute(&m, &BC).unwrap();
        for (_, f) in rep.fields() {
            all_close(f, 0.0, 0.0, 0);
        }
        let m = metric(|_, _| 0.0, 3.0);
        all_close(&quantity_f(&m, &BC).unwrap(), 0.0, 0.0, 0);
        all_close(&quantity_g(&m, &BC).unwrap(), 0.0, 0.0, 0);
        all_close(&quantity_j(&m, &BC, 4.0).unwrap(), 0.0, 0.0, 0);
    }

    #[test]
    fn potential_is_minus_twice_u() {
        all_close(&potential_f(&metric(|_, _| 1.0, 0.0)).unwrap(), -2.0, 0.0, 0);
        let m = metric(|x, y| -0.5 * (1.0 + x * x + y * y).ln(), 0.0);
        let (i, j) = spec().node_at(0.0, 0.0).unwrap();
        assert_eq!(potential_f(&m).unwrap().get(i, j), 0.0);
    }

    #[test]
    fn metric_laplacian_reductions() {
        let c = ScalarField::constant(spec(), 3.0).unwrap();
        let m = metric(|x, y| 0.1 * x - 0.2 * y * y, 0.0);
        all_close(&metric_laplacian(&c, &m, &BC).unwrap(), 0.0, 0.0, 0);
        let w = ScalarField::from_fn(spec(), |x, y| (x * y).sin()).unwrap();
        let flat = ConformalMetric::flat(spec()).unwrap();
        assert_eq!(metric_laplacian(&w, &flat, &BC).unwrap(), laplacian(&w, &BC).unwrap());
    }

    #[test]
    fn grad_norm_substitutions() {
        let x = ScalarField::from_fn(spec(), |x, _| x).unwrap();
        let flat = ConformalMetric::flat(spec()).unwrap();
        all_close(&metric_grad_norm_sq(&x, &flat, &BC).unwrap(), 1.0, 1e-12, 0);
        let scaled = metric(|_, _| 2f64.ln(), 0.0);
        all_close(&metric_grad_norm_sq(&x, &scaled, &BC).unwrap(), 0.25, 1e-12, 0);
    }

    #[test]
    fn christoffel_substitution() {
        let z = christoffels(&ConformalMetric::flat(spec()).unwrap(), &BC).unwrap();
        all_close(&z.g2_22, 0.0, 0.0, 0);
        let g = christoffels(&metric(|x, _| x, 0.0), &BC).unwrap();
        all_close(&g.g1_11, 1.0, 1e-12, 0);
        all_close(&g.g2_11, 0.0, 1e-12, 0);
        all_close(&g.g1_22, -1.0, 1e-12, 0);
    }

    #[test]
    fn christoffels_of_radial_factor_swap_under_reflection() {
        // u(r) radial: swapping x and y maps Γ¹₁₁ <-> Γ²₂₂ and Γ²₁₁ <-> Γ¹₂₂
        let m = metric(|x, y| -0.5 * (1.0 + x * x + y * y).ln(), 0.0);
        let g = christoffels(&m, &BC).unwrap();
        let n = spec().nx;
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                assert!((g.g1_11.get(i, j) - g.g2_22.get(j, i)).abs() < 1e-12);
                assert!((g.g2_11.get(i, j) - g.g1_22.get(j, i)).abs() < 1e-12);
                assert!((g.g1_12.get(i, j) - g.g2_12.get(j, i)).abs() < 1e-12);
                // closed form Γ¹₁₁ = u_x = -x/(1+r²), to O(h²)
                let (x, y) = (spec().x(i), spec().y(j));
                assert!((g.g1_11.get(i, j) + x / (1.0 + x * x + y * y)).abs() < 5e-3);
            }
        }
    }

    #[test]
    fn covariant_hessian_reductions() {
        let w = ScalarField::from_fn(spec(), |x, y| x * x * y + y).unwrap();
        let flat = ConformalMetric::flat(spec()).unwrap();
        let d = covariant_hessian(&w, &flat, &BC).unwrap();
        assert_eq!(d.xx, hessian(&w, &BC).unwrap().xx);
        let c = ScalarField::constant(spec(), 1.0).unwrap();
        let d = covariant_hessian(&c, &metric(|x, y| x * y, 0.0), &BC).unwrap();
        all_close(&d.xy, 0.0, 0.0, 0);
    }

    #[test]
    fn traceless_norm_examples() {
        let flat = ConformalMetric::flat(spec()).unwrap();
        let c = ScalarField::constant(spec(), 7.0).unwrap();
        all_close(&traceless_hessian_norm_sq(&c, &flat, &BC).unwrap(), 0.0, 0.0, 0);
        let w = ScalarField::from_fn(spec(), |x, y| x * x + y * y).unwrap();
        all_close(&traceless_hessian_norm_sq(&w, &flat, &BC).unwrap(), 0.0, 1e-9, 1);
        let w = ScalarField::from_fn(spec(), |x, y| x * x - y * y).unwrap();
        all_close(&traceless_hessian_norm_sq(&w, &flat, &BC).unwrap(), 8.0, 1e-9, 1);
    }

    #[test]
    fn h_is_r_plus_gradf2() {
        let m = metric(|x, y| 0.3 * (-(x * x + 2.0 * y * y)).exp(), 0.7);
        let rep = CurvatureReport::compute(&m, &BC).unwrap();
        for k in 0..spec().len() {
            assert_eq!(rep.h.data()[k], rep.r.data()[k] + rep.gradf2.data()[k]);
        }
        assert_eq!(quantity_h(&m, &BC).unwrap(), rep.h);
        let g = quantity_g(&m, &BC).unwrap();
        let g2 = rep.quantity_g().unwrap();
        for k in 0..spec().len() {
            assert!((g.data()[k] - g2.data()[k]).abs() <= 1e-12 * g.data()[k].abs().max(1.0));
        }
    }

    #[test]
    fn f_at_time_zero_is_f_squared() {
        let m = metric(|x, y| (x - y).sin(), 0.0);
        let f = potential_f(&m).unwrap();
        let q = quantity_f(&m, &BC).unwrap();
        for k in 0..spec().len() {
            assert_eq!(q.data()[k], f.data()[k] * f.data()[k]);
        }
    }

    #[test]
    fn j_requires_positive_lambda() {
        let m = ConformalMetric::flat(spec()).unwrap();
        assert!(quantity_j(&m, &BC, 0.0).is_err());
    }

    #[test]
    fn test_field_gradient_norm() {
        // |∇x|²_g on the flat metric is 1
        let m = ConformalMetric::flat(spec()).unwrap();
        let x = ScalarField::from_fn(spec(), |x, _| x).unwrap();
        assert!((window_sup(&metric_grad_norm_sq(&x, &m, &BC).unwrap(), 0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negative_time_rejected() {
        assert!(ConformalMetric::new(ScalarField::constant(spec(), 0.0).unwrap(), -1.0).is_err());
    }
}
