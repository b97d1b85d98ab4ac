use crate::conformal::ConformalMetric;
use crate::error::{Error, Result};
use crate::exact::hsu_phi;

/// Nodes used by [`hsu_fit`]: the interior window, optionally cut to `|x| ≤ radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitWindow {
    pub margin: usize,
    pub radius: Option<f64>,
}

impl Default for FitWindow {
    fn default() -> Self {
        Self { margin: crate::grid::DEFAULT_MARGIN, radius: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HsuFit {
    pub k_fit: f64,
    /// `sup |v - φ_{β,k_fit}|` over the window.
    pub residual: f64,
    /// Residual above 5% of `sup v`, or no positive `k` fits.
    pub mismatch: bool,
    pub nodes: usize,
}

/// Least-squares fit of `1/v = β(|x|² + k)/2`. The model is linear in `k`, so
/// the minimiser is the mean of `2/(βv) - |x|²` over the window.
pub fn hsu_fit(m: &ConformalMetric, beta: f64, window: &FitWindow) -> Result<HsuFit> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidArgument(format!("beta must be positive, got {beta}")));
    }
    let spec = *m.spec();
    let v = m.conformal_factor()?;
    let r_max = window.radius.unwrap_or(f64::INFINITY);
    let nodes: Vec<(f64, f64)> = v
        .window(window.margin)
        .map(|(i, j, v)| {
            let (x, y) = (spec.x(i), spec.y(j));
            (x * x + y * y, v)
        })
        .filter(|&(s, _)| s <= r_max * r_max)
        .collect();
    if nodes.is_empty() {
        return Err(Error::EmptyWindow { margin: window.margin });
    }
    if let Some(&(_, bad)) = nodes.iter().find(|&&(_, v)| !(v > 0.0)) {
        return Err(Error::Underflow { v: bad });
    }
    let k_fit = nodes.iter().map(|&(s, v)| 2.0 / (beta * v) - s).sum::<f64>() / nodes.len() as f64;
    let sup_v = nodes.iter().map(|&(_, v)| v).fold(0.0, f64::max);
    let residual = if k_fit > 0.0 {
        nodes.iter().map(|&(s, v)| (v - hsu_phi(beta, k_fit, s)).abs()).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    Ok(HsuFit { k_fit, residual, mismatch: k_fit <= 0.0 || residual > 0.05 * sup_v, nodes: nodes.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ExactSolution;
    use crate::grid::{GridSpec, ScalarField};

    fn metric_of(sol: ExactSolution, spec: &GridSpec) -> ConformalMetric {
        ConformalMetric::new(sol.sample_to_grid(spec, 0.0).unwrap(), 0.0).unwrap()
    }

    #[test]
    fn recovers_exact_profile() {
        let spec = GridSpec::centered(64, 5.0).unwrap();
        for (beta, k) in [(2.0, 3.0), (0.2, 0.15), (7.5, 9.0)] {
            let fit =
                hsu_fit(&metric_of(ExactSolution::HsuPhi { beta, k }, &spec), beta, &FitWindow::default()).unwrap();
            assert!((fit.k_fit - k).abs() < 1e-9 * k.max(1.0), "{beta} {k}: {}", fit.k_fit);
            assert!(!fit.mismatch && fit.residual < 1e-9);
        }
    }

    #[test]
    fn flat_is_a_mismatch() {
        let spec = GridSpec::centered(64, 5.0).unwrap();
        let fit = hsu_fit(&ConformalMetric::flat(spec).unwrap(), 2.0, &FitWindow::default()).unwrap();
        assert!(fit.mismatch);
    }

    #[test]
    fn radius_restricts_nodes() {
        let spec = GridSpec::centered(32, 4.0).unwrap();
        let m = ConformalMetric::new(ScalarField::constant(spec, 0.0).unwrap(), 0.0).unwrap();
        let all = hsu_fit(&m, 1.0, &FitWindow { margin: 0, radius: None }).unwrap();
        let some = hsu_fit(&m, 1.0, &FitWindow { margin: 0, radius: Some(1.0) }).unwrap();
        assert_eq!(all.nodes, spec.len());
        assert!(some.nodes < all.nodes && some.nodes > 0);
        assert!(hsu_fit(&m, 1.0, &FitWindow { margin: 0, radius: Some(1e-3) }).is_ok());
        assert!(hsu_fit(&m, 0.0, &FitWindow::default()).is_err());
    }
}
