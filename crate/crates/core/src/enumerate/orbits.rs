use std::collections::BTreeMap;

use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::gauges::{BinaryForm, Gauge};

use super::series::{bucket, check_thresholds};
use super::{Ball, Group};

/// Forms integrally equivalent to `f0` below one threshold.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct OrbitCount {
    /// Distinct forms `f0 . g` of norm at most the threshold.
    pub orbit_count: u64,
    /// Number of `g` in `SL_2(Z)` with `|f0 . g|` at most the threshold.
    pub gamma_count: u64,
    /// Order of the stabilizer of `f0` in `SL_2(Z)`.
    pub stabilizer_order: u64,
}

fn require_definite(f0: &BinaryForm) -> Result<()> {
    if f0.degree() < 3 {
        return Err(Error::InvalidInput(format!("form {f0} has degree below 3")));
    }
    if !f0.is_definite() {
        return Err(Error::IndefiniteForm(f0.to_string()));
    }
    Ok(())
}

/// `|Stab(f0)|`, from the elements fixing `f0` (all of which lie in the
/// ball of radius `|f0|`).
pub fn stabilizer_order(f0: &BinaryForm) -> Result<u64> {
    require_definite(f0)?;
    let gauge = Gauge::rep_form(f0.clone());
    let ball = Ball::new(Group::Sl2Z, &gauge, f0.norm() * (1.0 + 1e-12))?;
    let fixed = ball
        .points()
        .into_iter()
        .filter(|(pt, _)| f0.substitute(&pt.to_element(Group::Sl2Z)).is_ok_and(|f| &f == f0))
        .count();
    Ok(fixed as u64)
}

/// Orbit counts at each threshold of an increasing grid, from one pass.
///
/// Forms are deduplicated by their exact coefficient vectors. Fails if the
/// orbit–stabilizer identity `gamma_count = orbit_count * |Stab|` breaks at
/// any threshold.
pub fn orbit_forms_series(f0: &BinaryForm, thresholds: &[f64], budget: u64) -> Result<Vec<OrbitCount>> {
    require_definite(f0)?;
    check_thresholds(thresholds)?;
    let stab = stabilizer_order(f0)?;
    let gauge = Gauge::rep_form(f0.clone());
    let ball = Ball::new(Group::Sl2Z, &gauge, *thresholds.last().expect("nonempty"))?;
    ball.check_budget(budget)?;
    // first bucket in which each distinct form appears, and its multiplicity
    let mut forms: BTreeMap<Vec<BigInt>, (usize, u64)> = BTreeMap::new();
    for (pt, v) in ball.points() {
        let f = f0.substitute(&pt.to_element(Group::Sl2Z))?;
        let entry = forms.entry(f.coeffs().to_vec()).or_insert((bucket(thresholds, v), 0));
        entry.1 += 1;
    }
    let mut orbit = vec![0u64; thresholds.len()];
    let mut gamma = vec![0u64; thresholds.len()];
    for (b, mult) in forms.values() {
        if *b < thresholds.len() {
            orbit[*b] += 1;
            gamma[*b] += mult;
        }
    }
    let (mut o, mut g) = (0, 0);
    let mut out = Vec::with_capacity(thresholds.len());
    for (ob, gb) in orbit.into_iter().zip(gamma) {
        o += ob;
        g += gb;
        if g != o * stab {
            return Err(Error::InvalidElement(format!(
                "orbit-stabilizer identity fails: {g} elements, {o} forms, stabilizer {stab}"
            )));
        }
        out.push(OrbitCount { orbit_count: o, gamma_count: g, stabilizer_order: stab });
    }
    Ok(out)
}

/// Number of forms integrally equivalent to `f0` with norm at most
/// `threshold`, together with the stabilizer order.
pub fn orbit_forms_count(f0: &BinaryForm, threshold: f64, budget: u64) -> Result<OrbitCount> {
    Ok(orbit_forms_series(f0, &[threshold], budget)?.remove(0))
}
