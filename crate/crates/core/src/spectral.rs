//! The Harish-Chandra function of `SL_2(R)` and the decay exponents built
//! from it.
//!
//! With `P` the upper triangular subgroup and `a_s = diag(e^s, e^-s)`,
//!
//! ```text
//! Xi(a_s) = int_K delta^(-1/2)(a_s k) dk
//!         = (1 / 2 pi) int_0^(2 pi) (e^(2s) cos^2 th + e^(-2s) sin^2 th)^(-1/2) dth,
//! ```
//!
//! which decays like `(1 + s) e^-s`. All rates here are per unit of the
//! gauge's `t`; [`SpectralParams::alpha_big_t`] converts to powers of the
//! Frobenius size `T`.

use std::f64::consts::PI;

use serde_json::json;

use crate::error::{Error, Result};
use crate::gauges::{Gauge, GaugeKind};
use crate::haar::{fit_growth, frobenius_to_distance, hyperbolic_ball_area, FitModel, GrowthFit};
use crate::quad::{self, composite_gauss, Tolerance};

/// Decay and integrability data for an averaging family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralParams {
    /// Decay rate of `|pi(beta_t)|` per unit `t`.
    pub theta: f64,
    /// Even integrability exponent; `None` for tempered representations.
    pub n_e: Option<u32>,
    /// Upper local dimension.
    pub rho0: f64,
    pub p: f64,
    pub r: f64,
}

impl SpectralParams {
    pub fn new(theta: f64, n_e: Option<u32>, rho0: f64, p: f64, r: f64) -> Result<Self> {
        let params = SpectralParams { theta, n_e, rho0, p, r };
        params.validate()?;
        Ok(params)
    }

    pub fn tempered(theta: f64, rho0: f64) -> Result<Self> {
        Self::new(theta, None, rho0, 2.0, 2.0)
    }

    fn validate(&self) -> Result<()> {
        if !(self.theta >= 0.0) || !(self.rho0 >= 0.0) {
            return Err(Error::InvalidInput("theta and rho0 must be nonnegative".into()));
        }
        if let Some(n) = self.n_e {
            if n < 2 || n % 2 != 0 {
                return Err(Error::InvalidInput(format!("n_e must be even and at least 2, got {n}")));
            }
        }
        if !(self.r >= 1.0 && self.p >= self.r) {
            return Err(Error::InvalidInput(format!("need p >= r >= 1, got p = {}, r = {}", self.p, self.r)));
        }
        Ok(())
    }

    /// `n_e`, with tempered families counted as 1.
    pub fn n_e_effective(&self) -> f64 {
        self.n_e.map_or(1.0, f64::from)
    }

    /// `theta_{p,r} = r theta`, the interpolated choice between `L^p` and `L^r`.
    pub fn theta_pr(&self) -> f64 {
        self.r * self.theta
    }

    /// The counting error exponent in powers of the Frobenius size `T`.
    pub fn alpha_big_t(&self, gauge: &Gauge) -> f64 {
        counting_error_exponent(self) * gauge.t_per_log_size()
    }

    pub fn to_json(&self, gauge: &Gauge) -> serde_json::Value {
        let n_e = match self.n_e {
            Some(n) => json!(n),
            None => json!("tempered"),
        };
        json!({
            "theta": self.theta,
            "n_e": n_e,
            "rho0": self.rho0,
            "p": self.p,
            "r": self.r,
            "alpha_t_scale": counting_error_exponent(self),
            "alpha_T_scale": self.alpha_big_t(gauge),
        })
    }
}

/// `Xi(a_s)` by quadrature.
///
/// The substitution `u = log tan th` turns the peak of width `e^-2s` at
/// `th = pi/2` into a bump of unit width at `u = 2s`, after which a fixed
/// composite Gauss–Legendre rule converges quickly.
pub fn xi_eval(s: f64) -> Result<f64> {
    xi_with_panels(s, 1)
}

fn xi_with_panels(s: f64, refine: usize) -> Result<f64> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::InvalidInput(format!("Xi needs finite s >= 0, got {s}")));
    }
    let (a, b) = ((2.0 * s).exp(), (-2.0 * s).exp());
    let integrand = |u: f64| {
        // (1 + e^2u) / (a + b e^2u), rewritten to avoid overflow for large |u|
        let ratio = if u > 0.0 {
            let e = (-2.0 * u).exp();
            (e + 1.0) / (a * e + b)
        } else {
            let e = (2.0 * u).exp();
            (1.0 + e) / (a + b * e)
        };
        ratio.sqrt() / (2.0 * u.cosh())
    };
    let (lo, hi) = (-45.0, 2.0 * s + 45.0);
    let panels = ((hi - lo) * 2.0).ceil() as usize * refine;
    let v = 2.0 / PI * composite_gauss(integrand, lo, hi, panels, 10);
    if !v.is_finite() {
        return Err(Error::Quadrature(format!("Xi({s}) is not finite")));
    }
    Ok(v)
}

/// Relative change of `Xi(a_s)` when the quadrature panels are doubled.
pub fn xi_refinement_change(s: f64) -> Result<f64> {
    let coarse = xi_with_panels(s, 1)?;
    let fine = xi_with_panels(s, 2)?;
    Ok((fine / coarse - 1.0).abs())
}

/// The growth rate `a` of `Xi(a_s) ~ c s^(b-1) e^(a s)` fitted on `grid`;
/// close to `-1`.
pub fn xi_decay_fit(grid: &[f64]) -> Result<GrowthFit> {
    let samples = grid.iter().map(|&s| Ok((s, xi_eval(s)?))).collect::<Result<Vec<_>>>()?;
    fit_growth(&samples, FitModel::PowerExp)
}

/// `theta = growth / (2 n_e)`, with `n_e = 1` for tempered families.
pub fn spectral_decay_theta(volume_growth_rate: f64, params: &SpectralParams) -> Result<f64> {
    if !(volume_growth_rate >= 0.0) {
        return Err(Error::InvalidInput(format!("growth rate must be nonnegative, got {volume_growth_rate}")));
    }
    Ok(volume_growth_rate / (2.0 * params.n_e_effective()))
}

/// `alpha = theta_{p,r} / (rho0 (1 + r - r/p) + r)`.
pub fn counting_error_exponent(params: &SpectralParams) -> f64 {
    let (p, r) = (params.p, params.r);
    params.theta_pr() / (params.rho0 * (1.0 + r - r / p) + r)
}

/// Distance `d(i, g.i)` bounding the ball of a bi-K-invariant gauge.
fn radius(gauge: &Gauge, t: f64) -> Result<f64> {
    match gauge.kind() {
        GaugeKind::Hyperbolic => Ok(t),
        _ if gauge.is_frobenius() => Ok(frobenius_to_distance(gauge.to_raw(t))),
        _ => Err(Error::IncompatibleGauge { gauge: gauge.to_string(), what: "radialization".into() }),
    }
}

/// `(int_B Xi dm / m(B))^(1 / n_e)` for the ball `B` of a bi-K-invariant
/// gauge. A point at distance `d` from `i` is `k a_(d/2) k'`, and the
/// hyperbolic shell at `d` has density `2 pi sinh d`.
pub fn radial_operator_norm_bound(gauge: &Gauge, t: f64, params: &SpectralParams) -> Result<f64> {
    let d = radius(gauge, t)?;
    if d <= 0.0 {
        return Ok(1.0);
    }
    let failure = std::sync::Mutex::new(None);
    let integral = quad::integrate(
        |s| match xi_eval(0.5 * s) {
            Ok(x) => x * 2.0 * PI * s.sinh(),
            Err(e) => {
                failure.lock().unwrap().get_or_insert(e);
                0.0
            }
        },
        0.0,
        d,
        Tolerance::rel(1e-10),
    )?;
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    let mean = (integral / hyperbolic_ball_area(d)).min(1.0);
    Ok(mean.powf(1.0 / params.n_e_effective()))
}
