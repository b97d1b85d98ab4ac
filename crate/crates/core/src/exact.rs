//! Closed-form geometries: reference solutions of the flow and preset initial data.
//!
//! | preset                      | `u(x, t)`                                   | time range |
//! |-----------------------------|---------------------------------------------|------------|
//! | `flat[:c]`                  | `c`                                         | all `t`    |
//! | `cigar[:rate]`              | `-½ ln(|x|² + e^{rate t})` (soliton: rate 4) | all `t`    |
//! | `hsu:<beta>:<k>`            | `½ ln(2 / (beta (|x|² + k)))`               | `t = 0`    |
//! | `bump:<A>:<sigma>`          | `A exp(-|x|²/sigma²)`                       | `t = 0`    |
//! | `hsu-blend:<beta>:<k0>:<k1>`| Hsu profile with `k` blended `k0 -> k1` radially | `t = 0` |

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{laplacian, window_abs_sup, BoundaryCondition, GridSpec, ScalarField, DEFAULT_MARGIN};

/// Smallest conformal factor accepted when sampling onto a grid.
pub const V_UNDERFLOW: f64 = 1e-300;

/// Growth rate of the cigar soliton's `e^{rate t}` term.
pub const CIGAR_RATE: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExactSolution {
    Flat {
        c: f64,
    },
    /// `rate = 4` is the soliton; other rates are used as negative controls.
    Cigar {
        rate: f64,
    },
    HsuPhi {
        beta: f64,
        k: f64,
    },
    GaussianBump {
        amplitude: f64,
        sigma: f64,
    },
    /// `v = 2 / (beta (|x|² + k(|x|)))` with `k = k_inner + (k_outer - k_inner) |x|²/(1 + |x|²)`,
    /// so `v` lies between the Hsu profiles for `k_inner` and `k_outer`.
    HsuBlend {
        beta: f64,
        k_inner: f64,
        k_outer: f64,
    },
}

/// Analytic status of the flat-convergence hypotheses for a preset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HypothesesReport {
    /// `sup |u_0| < ∞`.
    pub bounded_u0: bool,
    /// `sup |R_0| < ∞`.
    pub bounded_r0: bool,
    /// `∫ e^{2u_0} = ∞`, the long-time existence criterion.
    pub infinite_area: bool,
}

impl HypothesesReport {
    pub fn flat_convergence_applies(&self) -> bool {
        self.bounded_u0 && self.bounded_r0
    }
}

impl ExactSolution {
    pub fn cigar() -> Self {
        ExactSolution::Cigar { rate: CIGAR_RATE }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ExactSolution::Flat { .. } => "flat",
            ExactSolution::Cigar { .. } => "cigar",
            ExactSolution::HsuPhi { .. } => "hsu",
            ExactSolution::GaussianBump { .. } => "bump",
            ExactSolution::HsuBlend { .. } => "hsu-blend",
        }
    }

    /// Whether the closed form is valid for `t > 0`.
    pub fn is_time_parametrized(&self) -> bool {
        matches!(self, ExactSolution::Flat { .. } | ExactSolution::Cigar { .. })
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!("time must be finite and >= 0, got {t}")));
        }
        if t > 0.0 && !self.is_time_parametrized() {
            return Err(Error::InitialDataOnly { kind: self.name(), t });
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("{}: {what}", self.name())));
        match *self {
            ExactSolution::Flat { c } if !c.is_finite() => bad("c must be finite"),
            ExactSolution::Cigar { rate } if !rate.is_finite() => bad("rate must be finite"),
            ExactSolution::HsuPhi { beta, k } if !(beta > 0.0 && k > 0.0) => bad("beta and k must be > 0"),
            ExactSolution::GaussianBump { amplitude, sigma } if !(amplitude.is_finite() && sigma > 0.0) => {
                bad("amplitude must be finite and sigma > 0")
            }
            ExactSolution::HsuBlend { beta, k_inner, k_outer } if !(beta > 0.0 && k_inner > 0.0 && k_outer > 0.0) => {
                bad("beta and both k must be > 0")
            }
            _ => Ok(()),
        }
    }

    /// Log conformal factor `u(x, y, t)`.
    pub fn eval_u(&self, x: f64, y: f64, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.u_unchecked(x, y, t))
    }

    /// `v = e^{2u}`, evaluated in closed form where that avoids `exp(ln(..))`.
    pub fn eval_v(&self, x: f64, y: f64, t: f64) -> Result<f64> {
        self.check_time(t)?;
        let s = x * x + y * y;
        Ok(match *self {
            ExactSolution::Cigar { rate } => 1.0 / (s + (rate * t).exp()),
            ExactSolution::HsuPhi { beta, k } => hsu_phi(beta, k, s),
            ExactSolution::HsuBlend { beta, k_inner, k_outer } => 2.0 / (beta * blend_q(k_inner, k_outer, s)),
            _ => (2.0 * self.u_unchecked(x, y, t)).exp(),
        })
    }

    fn u_unchecked(&self, x: f64, y: f64, t: f64) -> f64 {
        let s = x * x + y * y;
        match *self {
            ExactSolution::Flat { c } => c,
            ExactSolution::Cigar { rate } => -0.5 * (s + (rate * t).exp()).ln(),
            ExactSolution::HsuPhi { beta, k } => 0.5 * hsu_phi(beta, k, s).ln(),
            ExactSolution::GaussianBump { amplitude, sigma } => amplitude * (-s / (sigma * sigma)).exp(),
            ExactSolution::HsuBlend { beta, k_inner, k_outer } => {
                0.5 * (2.0 / (beta * blend_q(k_inner, k_outer, s))).ln()
            }
        }
    }

    /// Scalar curvature `R = -2 e^{-2u} Δu` from the closed form.
    pub fn eval_r(&self, x: f64, y: f64, t: f64) -> Result<f64> {
        self.check_time(t)?;
        let s = x * x + y * y;
        Ok(match *self {
            ExactSolution::Flat { .. } => 0.0,
            ExactSolution::Cigar { rate } => {
                let a = (rate * t).exp();
                4.0 * a / (s + a)
            }
            ExactSolution::HsuPhi { beta, k } => 2.0 * beta * k / (s + k),
            ExactSolution::GaussianBump { amplitude, sigma } => {
                let s2 = sigma * sigma;
                let u = amplitude * (-s / s2).exp();
                // radial Laplacian in s = |x|²: Δu = 4 s u'' + 4 u'
                let lap = u * (4.0 * s / (s2 * s2) - 4.0 / s2);
                -2.0 * (-2.0 * u).exp() * lap
            }
            ExactSolution::HsuBlend { beta, k_inner, k_outer } => {
                let dk = k_outer - k_inner;
                let q = blend_q(k_inner, k_outer, s);
                let q1 = 1.0 + dk / ((1.0 + s) * (1.0 + s));
                let q2 = -2.0 * dk / ((1.0 + s) * (1.0 + s) * (1.0 + s));
                // R = e^{-2u} Δ ln q with e^{-2u} = beta q / 2
                let lap_ln_q = 4.0 * (s * (q2 / q - (q1 / q) * (q1 / q)) + q1 / q);
                0.5 * beta * q * lap_ln_q
            }
        })
    }

    /// Samples `u(·, t)` at every node.
    pub fn sample_to_grid(&self, spec: &GridSpec, t: f64) -> Result<ScalarField> {
        self.validate()?;
        self.check_time(t)?;
        let u = ScalarField::from_fn(*spec, |x, y| self.u_unchecked(x, y, t))?;
        let min_u = u.data().iter().copied().fold(f64::INFINITY, f64::min);
        let v = (2.0 * min_u).exp();
        if v <= V_UNDERFLOW {
            return Err(Error::Underflow { v });
        }
        Ok(u)
    }

    /// Sup over the interior window of `∂t v - Δ ln v`, with a centred time
    /// difference and the 5-point Laplacian.
    pub fn pde_residual(&self, spec: &GridSpec, t: f64, dt: f64) -> Result<f64> {
        self.pde_residual_in(spec, t, dt, DEFAULT_MARGIN)
    }

    pub fn pde_residual_in(&self, spec: &GridSpec, t: f64, dt: f64, margin: usize) -> Result<f64> {
        if !self.is_time_parametrized() {
            return Err(Error::InitialDataOnly { kind: self.name(), t });
        }
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt must be > 0, got {dt}")));
        }
        if t - dt < 0.0 {
            return Err(Error::InvalidArgument(format!("t - dt = {} is negative", t - dt)));
        }
        let v_at = |tt: f64| ScalarField::from_fn(*spec, |x, y| self.eval_v(x, y, tt).unwrap_or(f64::NAN));
        let ahead = v_at(t + dt)?;
        let behind = v_at(t - dt)?;
        let ln_v = v_at(t)?.map(f64::ln)?;
        let lap = laplacian(&ln_v, &BoundaryCondition::LinearExtrapolate)?;
        let dvdt = ahead.zip_map(&behind, |a, b| (a - b) / (2.0 * dt))?;
        let residual = dvdt.zip_map(&lap, |d, l| d - l)?;
        window_abs_sup(&residual, margin)
    }

    /// Analytic classification of the flat-convergence hypotheses.
    pub fn bounded_hypotheses_report(&self) -> HypothesesReport {
        match self {
            ExactSolution::Flat { .. } | ExactSolution::GaussianBump { .. } => {
                HypothesesReport { bounded_u0: true, bounded_r0: true, infinite_area: true }
            }
            // u_0 ~ -ln|x| at infinity; ∫ 1/(|x|² + k) diverges logarithmically.
            ExactSolution::Cigar { .. } | ExactSolution::HsuPhi { .. } | ExactSolution::HsuBlend { .. } => {
                HypothesesReport { bounded_u0: false, bounded_r0: true, infinite_area: true }
            }
        }
    }
}

/// `φ_{β,k} = 2 / (β (s + k))` at `s = |x|²`.
pub fn hsu_phi(beta: f64, k: f64, s: f64) -> f64 {
    2.0 / (beta * (s + k))
}

fn blend_q(k_inner: f64, k_outer: f64, s: f64) -> f64 {
    s + k_inner + (k_outer - k_inner) * s / (1.0 + s)
}

impl fmt::Display for ExactSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ExactSolution::Flat { c: 0.0 } => write!(f, "flat"),
            ExactSolution::Flat { c } => write!(f, "flat:{c}"),
            ExactSolution::Cigar { rate } if rate == CIGAR_RATE => write!(f, "cigar"),
            ExactSolution::Cigar { rate } => write!(f, "cigar:{rate}"),
            ExactSolution::HsuPhi { beta, k } => write!(f, "hsu:{beta}:{k}"),
            ExactSolution::GaussianBump { amplitude, sigma } => write!(f, "bump:{amplitude}:{sigma}"),
            ExactSolution::HsuBlend { beta, k_inner, k_outer } => write!(f, "hsu-blend:{beta}:{k_inner}:{k_outer}"),
        }
    }
}

impl FromStr for ExactSolution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let normalized = s.trim().replace('\u{2212}', "-");
        let mut parts = normalized.split(':');
        let head = parts.next().unwrap_or_default();
        let args = parts
            .map(|p| p.trim().parse::<f64>().map_err(|e| Error::Parse(format!("preset `{s}`: {p}: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        let arity = |n: &[usize]| {
            if n.contains(&args.len()) {
                Ok(())
            } else {
                Err(Error::Parse(format!("preset `{s}`: wrong number of parameters")))
            }
        };
        let sol = match head {
            "flat" => {
                arity(&[0, 1])?;
                ExactSolution::Flat { c: args.first().copied().unwrap_or(0.0) }
            }
            "cigar" => {
                arity(&[0, 1])?;
                ExactSolution::Cigar { rate: args.first().copied().unwrap_or(CIGAR_RATE) }
            }
            "hsu" => {
                arity(&[2])?;
                ExactSolution::HsuPhi { beta: args[0], k: args[1] }
            }
            "bump" => {
                arity(&[2])?;
                ExactSolution::GaussianBump { amplitude: args[0], sigma: args[1] }
            }
            "hsu-blend" => {
                arity(&[3])?;
                ExactSolution::HsuBlend { beta: args[0], k_inner: args[1], k_outer: args[2] }
            }
            other => return Err(Error::Parse(format!("unknown preset `{other}`"))),
        };
        sol.validate().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(sol)
    }
}
