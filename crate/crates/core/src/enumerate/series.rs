use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::arith::{GroupElement, ResidueClass};
use crate::error::{Error, Result};
use crate::format::sig12;
use crate::gauges::Gauge;

use super::{Ball, Group};

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct CountRow {
    pub threshold: f64,
    pub count: u64,
    /// Expected count from the Haar volume, when one is available.
    pub volume: Option<f64>,
    pub ratio: Option<f64>,
}

impl CountRow {
    pub fn abs_dev(&self) -> Option<f64> {
        self.ratio.map(|r| (r - 1.0).abs())
    }
}

/// Lattice counts at increasing thresholds.
#[derive(Clone, Debug, PartialEq)]
pub struct CountSeries {
    pub group: Group,
    pub gauge: Gauge,
    pub rows: Vec<CountRow>,
}

pub const COUNT_CSV_HEADER: &str = "threshold,count,volume,ratio,abs_dev";

impl CountSeries {
    /// Fills the volume and ratio columns from `volume(threshold)`.
    pub fn set_volumes(&mut self, mut volume: impl FnMut(f64) -> Result<Option<f64>>) -> Result<()> {
        for row in &mut self.rows {
            row.volume = volume(row.threshold)?;
            row.ratio = row.volume.filter(|&v| v > 0.0).map(|v| row.count as f64 / v);
        }
        Ok(())
    }

    pub fn counts(&self) -> Vec<u64> {
        self.rows.iter().map(|r| r.count).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(COUNT_CSV_HEADER);
        out.push('\n');
        let opt = |x: Option<f64>| x.map(sig12).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                sig12(r.threshold),
                r.count,
                opt(r.volume),
                opt(r.ratio),
                opt(r.abs_dev())
            );
        }
        out
    }
}

pub(crate) fn check_thresholds(thresholds: &[f64]) -> Result<()> {
    if thresholds.is_empty() {
        return Err(Error::InvalidInput("empty threshold grid".into()));
    }
    if thresholds.iter().any(|t| !t.is_finite()) || thresholds.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("thresholds must be finite and strictly increasing".into()));
    }
    Ok(())
}

/// Index of the first threshold that admits `value`.
pub(crate) fn bucket(thresholds: &[f64], value: f64) -> usize {
    thresholds.partition_point(|&t| t < value)
}

/// Counts at every threshold from a single enumeration at the largest one.
/// The volume column is left empty.
pub fn count_series(group: Group, gauge: &Gauge, thresholds: &[f64], budget: u64) -> Result<CountSeries> {
    check_thresholds(thresholds)?;
    let ball = Ball::new(group, gauge, *thresholds.last().expect("nonempty"))?;
    ball.check_budget(budget)?;
    let nb = thresholds.len();
    let per_chunk = ball.fold_chunks(
        || vec![0u64; nb],
        |acc, _, v| {
            let i = bucket(thresholds, v);
            if i < nb {
                acc[i] += 1;
            }
        },
    );
    let mut hist = vec![0u64; nb];
    for chunk in per_chunk {
        for (h, c) in hist.iter_mut().zip(chunk) {
            *h += c;
        }
    }
    let mut running = 0;
    let rows = thresholds
        .iter()
        .zip(hist)
        .map(|(&threshold, c)| {
            running += c;
            CountRow { threshold, count: running, volume: None, ratio: None }
        })
        .collect();
    Ok(CountSeries { group, gauge: gauge.clone(), rows })
}

/// Counts of lattice points per residue class modulo `q`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CosetHistogram {
    pub q: u64,
    pub counts: BTreeMap<ResidueClass, u64>,
    pub total: u64,
}

impl CosetHistogram {
    pub fn new(q: u64) -> Self {
        CosetHistogram { q, counts: BTreeMap::new(), total: 0 }
    }

    pub fn add(&mut self, class: ResidueClass) {
        *self.counts.entry(class).or_insert(0) += 1;
        self.total += 1;
    }

    pub fn get(&self, class: &ResidueClass) -> u64 {
        self.counts.get(class).copied().unwrap_or(0)
    }

    /// `max_c |count_c / total - 1 / classes|` over all `classes` residue
    /// classes, including the ones never hit.
    pub fn sup_deviation(&self, classes: u64) -> f64 {
        if self.total == 0 {
            return 1.0;
        }
        let target = 1.0 / classes as f64;
        let hit = self
            .counts
            .values()
            .map(|&c| (c as f64 / self.total as f64 - target).abs())
            .fold(0.0, f64::max);
        if (self.counts.len() as u64) < classes {
            hit.max(target)
        } else {
            hit
        }
    }

    /// Fraction of the total in each class, in class order.
    pub fn fractions(&self) -> Vec<f64> {
        self.counts.values().map(|&c| c as f64 / self.total as f64).collect()
    }
}

pub fn coset_histogram<'a>(elements: impl IntoIterator<Item = &'a GroupElement>, q: u64) -> Result<CosetHistogram> {
    if q < 2 {
        return Err(Error::InvalidInput(format!("modulus must be at least 2, got {q}")));
    }
    let mut hist = CosetHistogram::new(q);
    for g in elements {
        hist.add(g.reduce_mod(q)?);
    }
    Ok(hist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::sl_mod_q;
    use crate::enumerate::{enumerate_ball, DEFAULT_BUDGET};

    #[test]
    fn small_series() {
        let s = count_series(Group::Sl2Z, &Gauge::frobenius(), &[1.4, 2f64.sqrt(), 2.0], DEFAULT_BUDGET).unwrap();
        assert_eq!(s.counts(), vec![0, 4, 20]);
        assert!(count_series(Group::Sl2Z, &Gauge::frobenius(), &[2.0, 1.0], DEFAULT_BUDGET).is_err());
        assert!(count_series(Group::Sl2Z, &Gauge::frobenius(), &[], DEFAULT_BUDGET).is_err());
    }

    #[test]
    fn series_matches_batch_enumeration() {
        for gauge in [Gauge::rnorm(1.0).unwrap(), Gauge::rnorm_inf(), Gauge::frobenius()] {
            let grid = [3.0, 5.5, 8.25, 13.0];
            let s = count_series(Group::Sl2Z, &gauge, &grid, DEFAULT_BUDGET).unwrap();
            for (row, &t) in s.rows.iter().zip(&grid) {
                let batch = enumerate_ball(Group::Sl2Z, &gauge, t, DEFAULT_BUDGET).unwrap();
                assert_eq!(row.count, batch.len() as u64);
            }
        }
    }

    #[test]
    fn csv_layout() {
        let mut s = count_series(Group::Sl2Z, &Gauge::frobenius(), &[2.0, 3.0], DEFAULT_BUDGET).unwrap();
        s.set_volumes(|t| Ok(Some(t * 10.0))).unwrap();
        let csv = s.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], COUNT_CSV_HEADER);
        assert_eq!(lines[1], "2,20,20,1,0");
        assert_eq!(lines.len(), 3);
    }

    #[test]
    fn histogram_at_root_two() {
        let pts = enumerate_ball(Group::Sl2Z, &Gauge::frobenius(), 2f64.sqrt(), DEFAULT_BUDGET).unwrap();
        let h = coset_histogram(&pts, 2).unwrap();
        assert_eq!(h.total, 4);
        assert_eq!(h.get(&ResidueClass::identity(2, 2)), 2);
        assert_eq!(h.get(&ResidueClass::new(2, 2, vec![0, 1, 1, 0]).unwrap()), 2);
        assert!((h.sup_deviation(6) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn histogram_support_is_everything() {
        let pts = enumerate_ball(Group::Sl2Z, &Gauge::frobenius(), 10.0, DEFAULT_BUDGET).unwrap();
        for q in [2, 3] {
            let h = coset_histogram(&pts, q).unwrap();
            assert_eq!(h.total, pts.len() as u64);
            assert_eq!(h.counts.len(), sl_mod_q(2, q).unwrap().len());
        }
    }
}
