use std::fmt;
use std::sync::Arc;

use crate::enumerate::Group;
use crate::error::{Error, Result};
use crate::gauges::{Gauge, Scale};

use super::{hyperbolic_ball_area, volume_of_ball};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Geometric Haar measure.
    Raw,
    /// Divided by the covolume of the lattice.
    Covolume,
}

type EvalFn = dyn Fn(f64) -> Result<f64> + Send + Sync;

/// `t -> m(G_t)`, nondecreasing and zero at and below `origin`.
#[derive(Clone)]
pub struct VolumeProfile {
    scale: Scale,
    normalization: Normalization,
    origin: f64,
    eval: Arc<EvalFn>,
}

impl fmt::Debug for VolumeProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VolumeProfile")
            .field("scale", &self.scale)
            .field("normalization", &self.normalization)
            .field("origin", &self.origin)
            .finish_non_exhaustive()
    }
}

impl VolumeProfile {
    pub fn new(scale: Scale, origin: f64, f: impl Fn(f64) -> Result<f64> + Send + Sync + 'static) -> Self {
        VolumeProfile { scale, normalization: Normalization::Raw, origin, eval: Arc::new(f) }
    }

    /// Hyperbolic discs, `2 pi (cosh t - 1)`. This is also the Frobenius
    /// profile of `SL_2(R)` read on the distance scale.
    pub fn hyperbolic() -> Self {
        Self::new(Scale::Log, 0.0, |t| Ok(hyperbolic_ball_area(t)))
    }

    /// Balls of a gauge on the ambient group of `group`.
    pub fn of_gauge(group: Group, gauge: &Gauge) -> Result<Self> {
        let origin = gauge.identity_value(group.dim())?;
        // fail early on unsupported pairs
        volume_of_ball(group, gauge, origin)?;
        let g = gauge.clone();
        Ok(Self::new(gauge.scale(), origin, move |t| volume_of_ball(group, &g, t)))
    }

    /// Piecewise-linear interpolation of `values` on an increasing `grid`;
    /// constant beyond the last point.
    pub fn tabulated(scale: Scale, grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.is_empty() || grid.len() != values.len() || grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("tabulated profile needs an increasing grid".into()));
        }
        let origin = grid[0];
        Ok(Self::new(scale, origin, move |t| {
            let i = grid.partition_point(|&g| g <= t);
            Ok(match i {
                0 => 0.0,
                i if i == grid.len() => values[i - 1],
                i => {
                    let w = (t - grid[i - 1]) / (grid[i] - grid[i - 1]);
                    values[i - 1] + w * (values[i] - values[i - 1])
                }
            })
        }))
    }

    pub fn scale(&self) -> Scale {
        self.scale
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if t < self.origin {
            return Ok(0.0);
        }
        (self.eval)(t)
    }

    /// The profile divided by `covolume`.
    pub fn normalized(&self, covolume: f64) -> Result<Self> {
        if !(covolume > 0.0) {
            return Err(Error::InvalidInput(format!("covolume must be positive, got {covolume}")));
        }
        if self.normalization == Normalization::Covolume {
            return Err(Error::InvalidInput("profile is already normalized".into()));
        }
        let inner = self.eval.clone();
        Ok(VolumeProfile {
            normalization: Normalization::Covolume,
            eval: Arc::new(move |t| Ok(inner(t)? / covolume)),
            ..self.clone()
        })
    }
}

/// `v(t) = int v1(t - s) dv2(s)` for `t` in `[0, t_max]`, by a midpoint
/// Stieltjes sum on a grid of spacing `step`, returned as a tabulated
/// profile. An atom of `v2` at 0 is carried exactly.
pub fn convolve_profiles(v1: &VolumeProfile, v2: &VolumeProfile, t_max: f64, step: f64) -> Result<VolumeProfile> {
    if v1.scale() != Scale::Log || v2.scale() != Scale::Log {
        return Err(Error::ScaleMismatch("convolution needs both profiles on the t scale".into()));
    }
    if !(step > 0.0 && t_max > 0.0) {
        return Err(Error::InvalidInput("convolution grid needs positive step and range".into()));
    }
    let n = (t_max / step).round() as usize;
    let grid: Vec<f64> = (0..=n).map(|i| i as f64 * step).collect();
    let v2_grid = grid.iter().map(|&s| v2.eval(s)).collect::<Result<Vec<_>>>()?;
    let mut values = Vec::with_capacity(grid.len());
    for (i, &t) in grid.iter().enumerate() {
        let mut acc = v1.eval(t)? * v2_grid[0];
        for j in 0..i {
            let dv = v2_grid[j + 1] - v2_grid[j];
            if dv != 0.0 {
                acc += v1.eval(t - (j as f64 + 0.5) * step)? * dv;
            }
        }
        values.push(acc);
    }
    VolumeProfile::tabulated(Scale::Log, grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear() -> VolumeProfile {
        VolumeProfile::new(Scale::Log, 0.0, Ok)
    }

    #[test]
    fn uniform_convolution() {
        let v = convolve_profiles(&linear(), &linear(), 10.0, 0.01).unwrap();
        for t in [0.0, 1.0, 2.5, 10.0] {
            assert!((v.eval(t).unwrap() - t * t / 2.0).abs() < 1e-9, "{t}");
        }
    }

    #[test]
    fn unit_atom_is_the_identity() {
        let atom = VolumeProfile::new(Scale::Log, 0.0, |_| Ok(1.0));
        let v1 = VolumeProfile::hyperbolic();
        let v = convolve_profiles(&v1, &atom, 5.0, 0.05).unwrap();
        for i in 0..=100 {
            let t = i as f64 * 0.05;
            assert_eq!(v.eval(t).unwrap(), v1.eval(t).unwrap());
        }
    }

    #[test]
    fn exponential_convolution() {
        let w = 1.5;
        let e = VolumeProfile::new(Scale::Log, 0.0, move |t| Ok((w * t).exp()));
        let v = convolve_profiles(&e, &e, 12.0, 0.002).unwrap();
        // the atom of e^(ws) at 0 contributes e^(wt) on top of w t e^(wt)
        for t in [4.0, 8.0, 12.0] {
            let exact = (1.0 + w * t) * (w * t).exp();
            assert!((v.eval(t).unwrap() / exact - 1.0).abs() < 1e-5, "{t}");
        }
    }

    #[test]
    fn scale_checks() {
        let raw = VolumeProfile::new(Scale::Raw, 0.0, Ok);
        assert!(matches!(convolve_profiles(&raw, &linear(), 1.0, 0.1), Err(Error::ScaleMismatch(_))));
    }

    #[test]
    fn profiles_of_gauges() {
        let p = VolumeProfile::of_gauge(Group::Sl2Z, &Gauge::frobenius()).unwrap();
        assert_eq!(p.origin(), 2f64.sqrt());
        assert_eq!(p.eval(1.0).unwrap(), 0.0);
        assert!(p.eval(2f64.sqrt()).unwrap().abs() < 1e-12);
        let n = p.normalized(std::f64::consts::PI / 3.0).unwrap();
        assert_eq!(n.normalization(), Normalization::Covolume);
        assert!((n.eval(3.0).unwrap() * std::f64::consts::PI / 3.0 - p.eval(3.0).unwrap()).abs() < 1e-9);
        assert!(VolumeProfile::of_gauge(Group::Sl2ZInvP { p: 2 }, &Gauge::height(2).unwrap()).is_err());
    }
}
