use std::fmt;
use std::str::FromStr;

use serde_json::json;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitModel {
    /// `v = c T^a`, fitted as `log v` against `log T`.
    Power,
    /// `v = c t^(b-1) e^(a t)` with `b` in `0..=3` chosen by residuals.
    PowerExp,
    /// `v = c e^(-a t)`; `a` is the decay rate.
    ExpDecay,
}

impl FitModel {
    pub fn name(&self) -> &'static str {
        match self {
            FitModel::Power => "power",
            FitModel::PowerExp => "power_exp",
            FitModel::ExpDecay => "exp_decay",
        }
    }
}

impl fmt::Display for FitModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FitModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "power" => Ok(FitModel::Power),
            "power_exp" => Ok(FitModel::PowerExp),
            "exp_decay" => Ok(FitModel::ExpDecay),
            _ => Err(Error::Parse(format!("unknown fit model `{s}`"))),
        }
    }
}

/// Least-squares fit in log coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct GrowthFit {
    pub model: FitModel,
    /// Exponent: power of `T`, growth rate in `t`, or decay rate.
    pub a: f64,
    /// Polynomial order of the `power_exp` model (1 elsewhere).
    pub b: i32,
    pub c: f64,
    pub stderr_a: f64,
    pub stderr_log_c: f64,
    pub r2: f64,
    /// Smallest and largest abscissa used.
    pub window: (f64, f64),
    pub samples: usize,
}

impl GrowthFit {
    pub fn predict(&self, x: f64) -> f64 {
        match self.model {
            FitModel::Power => self.c * x.powf(self.a),
            FitModel::PowerExp => self.c * x.powi(self.b - 1) * (self.a * x).exp(),
            FitModel::ExpDecay => self.c * (-self.a * x).exp(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "model": self.model.name(),
            "params": {"a": self.a, "b": self.b, "c": self.c},
            "stderr": {"a": self.stderr_a, "log_c": self.stderr_log_c},
            "r2": self.r2,
            "window": [self.window.0, self.window.1],
        })
    }
}

struct Ols {
    slope: f64,
    intercept: f64,
    se_slope: f64,
    se_intercept: f64,
    ssr: f64,
    r2: f64,
}

fn ols(x: &[f64], y: &[f64]) -> Result<Ols> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|xi| (xi - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(xi, yi)| (xi - mx) * (yi - my)).sum();
    let syy: f64 = y.iter().map(|yi| (yi - my).powi(2)).sum();
    if !(sxx > 1e-300 * n) || !sxx.is_finite() {
        return Err(Error::DegenerateFit("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x.iter().zip(y).map(|(xi, yi)| (yi - intercept - slope * xi).powi(2)).sum();
    let sigma2 = if x.len() > 2 { ssr / (n - 2.0) } else { 0.0 };
    let se_slope = (sigma2 / sxx).sqrt();
    let se_intercept = (sigma2 * (1.0 / n + mx * mx / sxx)).sqrt();
    let r2 = if syy > 0.0 { (1.0 - ssr / syy).clamp(0.0, 1.0) } else { 1.0 };
    Ok(Ols { slope, intercept, se_slope, se_intercept, ssr, r2 })
}

/// Fits `model` to `(x, v)` samples; `x` is `T` for the power model and `t`
/// otherwise. Needs at least 5 samples with positive values.
pub fn fit_growth(samples: &[(f64, f64)], model: FitModel) -> Result<GrowthFit> {
    if samples.len() < 5 {
        return Err(Error::DegenerateFit(format!("{} samples, need at least 5", samples.len())));
    }
    if let Some(bad) = samples.iter().find(|(x, v)| !(v > &0.0) || !v.is_finite() || !x.is_finite()) {
        return Err(Error::InvalidInput(format!("sample {bad:?} is not positive and finite")));
    }
    let xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let logv: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let window = (
        xs.iter().copied().fold(f64::INFINITY, f64::min),
        xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    let (fit, b) = match model {
        FitModel::Power => {
            if xs.iter().any(|&x| !(x > 0.0)) {
                return Err(Error::InvalidInput("power fits need positive abscissae".into()));
            }
            let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
            (ols(&lx, &logv)?, 1)
        }
        FitModel::ExpDecay => {
            let mut f = ols(&xs, &logv)?;
            f.slope = -f.slope;
            (f, 1)
        }
        FitModel::PowerExp => {
            if xs.iter().any(|&x| !(x > 0.0)) {
                return Err(Error::InvalidInput("power_exp fits need positive t".into()));
            }
            let mut best: Option<(Ols, i32)> = None;
            for b in 0..=3 {
                let y: Vec<f64> = xs.iter().zip(&logv).map(|(x, l)| l - (b - 1) as f64 * x.ln()).collect();
                let f = ols(&xs, &y)?;
                if best.as_ref().map_or(true, |(bf, _)| f.ssr < bf.ssr * (1.0 - 1e-9)) {
                    best = Some((f, b));
                }
            }
            best.expect("four candidates")
        }
    };
    Ok(GrowthFit {
        model,
        a: fit.slope,
        b,
        c: fit.intercept.exp(),
        stderr_a: fit.se_slope,
        stderr_log_c: fit.se_intercept,
        r2: fit.r2,
        window,
        samples: samples.len(),
    })
}

/// The samples whose abscissa lies in the top half of their range.
pub fn top_half(samples: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let lo = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let hi = samples.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    let mid = 0.5 * (lo + hi);
    samples.iter().copied().filter(|s| s.0 >= mid).collect()
}
