//! PI control of body acceleration and a deterministic gain search.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{performance_index, settle_time, weighted_cost, CostWeights, PerformanceIndex};
use crate::model::SuspensionParams;
use crate::road::RoadTrace;
use crate::simulate::{simulate_active, SimConfig};

/// Gains of `fa = kp·e + ki·∫e dt` with `e = 0 − ẍs`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PIGains {
    /// [N per m/s²]
    pub kp: f64,
    /// [N per m/s]
    pub ki: f64,
}

impl PIGains {
    pub fn new(kp: f64, ki: f64) -> Self {
        Self { kp, ki }
    }

    /// Controller output for error `e` and accumulated error `z`.
    #[inline]
    pub fn output(&self, e: f64, z: f64) -> f64 {
        self.kp * e + self.ki * z
    }

    /// The proportional path feeds acceleration straight back into itself;
    /// the loop is solvable only while `ms + kp ≠ 0`.
    pub fn validate_for(&self, p: &SuspensionParams) -> Result<()> {
        if !(self.kp.is_finite() && self.ki.is_finite()) {
            return Err(Error::invalid("gains", "kp and ki must be finite"));
        }
        if (p.ms + self.kp).abs() <= 1e-12 * p.ms {
            return Err(Error::invalid("kp", format!("kp = {} cancels the sprung mass", self.kp)));
        }
        Ok(())
    }
}

pub fn pi_output(g: &PIGains, e: f64, z: f64) -> Result<f64> {
    if !(e.is_finite() && z.is_finite() && g.kp.is_finite() && g.ki.is_finite()) {
        return Err(Error::invalid("pi input", "gains and signals must be finite"));
    }
    Ok(g.output(e, z))
}

/// Search grid for [`tune_gains`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuneConfig {
    pub ki_min: f64,
    pub ki_max: f64,
    /// Log-spaced points on `[ki_min, ki_max]`.
    pub points: usize,
    /// Fixed proportional gain.
    pub kp: f64,
    /// Also evaluate `ki = 0` (the open loop).
    pub include_zero: bool,
}

impl Default for TuneConfig {
    fn default() -> Self {
        Self { ki_min: 1.0, ki_max: 1e5, points: 60, kp: 0.0, include_zero: true }
    }
}

impl TuneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.points == 0 {
            return Err(Error::invalid("points", "grid needs at least one point"));
        }
        if !(self.ki_min > 0.0 && self.ki_min.is_finite() && self.ki_max.is_finite()) {
            return Err(Error::invalid("ki_min", "search interval must be positive and finite"));
        }
        if self.points > 1 && !(self.ki_max > self.ki_min) {
            return Err(Error::invalid("ki_max", "must exceed ki_min"));
        }
        if !self.kp.is_finite() {
            return Err(Error::invalid("kp", "must be finite"));
        }
        Ok(())
    }

    /// Candidate `ki` values in ascending order.
    pub fn grid(&self) -> Vec<f64> {
        let mut grid = Vec::with_capacity(self.points + 1);
        if self.include_zero {
            grid.push(0.0);
        }
        if self.points == 1 {
            grid.push(self.ki_min);
        } else {
            let (lo, hi) = (self.ki_min.ln(), self.ki_max.ln());
            let last = (self.points - 1) as f64;
            grid.extend((0..self.points).map(|i| (lo + (hi - lo) * i as f64 / last).exp()));
        }
        grid
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TunePoint {
    pub ki: f64,
    /// `None` if the closed loop diverged.
    pub cost: Option<f64>,
    pub index: Option<PerformanceIndex>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub gains: PIGains,
    pub cost: f64,
    pub index: PerformanceIndex,
    /// Open-loop criteria that normalize `cost`.
    pub baseline: PerformanceIndex,
    pub sweep: Vec<TunePoint>,
}

pub const TUNE_CSV_HEADER: &str = "ki,cost,acc_rms,sws_rms,dtl_rms";

impl TuneResult {
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{TUNE_CSV_HEADER}")?;
        for pt in &self.sweep {
            match (pt.cost, pt.index) {
                (Some(c), Some(i)) => writeln!(w, "{},{},{}", pt.ki, c, i.csv_row())?,
                _ => writeln!(w, "{},NaN,NaN,NaN,NaN", pt.ki)?,
            }
        }
        Ok(())
    }
}

/// Grid search over `ki` with `kp` pinned, minimizing the weighted cost of
/// the closed loop relative to the open loop on the same road.
pub fn tune_gains(
    p: &SuspensionParams,
    road: &RoadTrace,
    weights: &CostWeights,
    cfg: &TuneConfig,
    sim: &SimConfig,
) -> Result<TuneResult> {
    cfg.validate()?;
    weights.validate()?;
    let settle = settle_time(road);
    let open = simulate_active(p, road, &PIGains::default(), sim)?;
    let baseline = performance_index(&open, p, road, settle)?;

    let sweep: Vec<TunePoint> = cfg
        .grid()
        .into_par_iter()
        .map(|ki| {
            let gains = PIGains::new(cfg.kp, ki);
            let index = simulate_active(p, road, &gains, sim)
                .and_then(|out| performance_index(&out, p, road, settle))
                .ok()
                .filter(|i| i.acc_rms.is_finite() && i.sws_rms.is_finite() && i.dtl_rms.is_finite());
            let cost = match index {
                Some(i) => Some(weighted_cost(&i, &baseline, weights)),
                None => None,
            }
            .transpose()?
            .filter(|c| c.is_finite());
            Ok(TunePoint { ki, cost, index })
        })
        .collect::<Result<_>>()?;

    let best = sweep
        .iter()
        .filter_map(|pt| pt.cost.map(|c| (pt, c)))
        .fold(None::<(&TunePoint, f64)>, |acc, (pt, c)| match acc {
            Some((_, bc)) if bc <= c => acc,
            _ => Some((pt, c)),
        })
        .ok_or_else(|| Error::Numerical("every tuning candidate diverged".into()))?;

    Ok(TuneResult {
        gains: PIGains::new(cfg.kp, best.0.ki),
        cost: best.1,
        index: best.0.index.unwrap(),
        baseline,
        sweep,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::road::{generate_step_road, StepRoadSpec};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn pi_output_values() {
        assert_eq!(pi_output(&PIGains::new(2.0, 3.0), 1.0, 0.0).unwrap(), 2.0);
        assert_relative_eq!(pi_output(&PIGains::new(0.0, 1904.0), 123.4, 0.001).unwrap(), 1.904, epsilon = 1e-12);
        assert_eq!(pi_output(&PIGains::default(), 5.0, -7.0).unwrap(), 0.0);
        assert!(pi_output(&PIGains::default(), f64::NAN, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn pi_output_is_bilinear(
            kp in -1e3f64..1e3, ki in -1e3f64..1e3,
            e1 in -10.0f64..10.0, z1 in -1.0f64..1.0,
            e2 in -10.0f64..10.0, z2 in -1.0f64..1.0,
            a in -2.0f64..2.0,
        ) {
            let g = PIGains::new(kp, ki);
            let lhs = g.output(a * e1 + e2, a * z1 + z2);
            let rhs = a * g.output(e1, z1) + g.output(e2, z2);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
            let g2 = PIGains::new(a * kp, a * ki);
            prop_assert!((g2.output(e1, z1) - a * g.output(e1, z1)).abs() <= 1e-9 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn grid_layout() {
        let cfg = TuneConfig::default();
        let g = cfg.grid();
        assert_eq!(g.len(), 61);
        assert_eq!(g[0], 0.0);
        assert_relative_eq!(g[1], 1.0);
        assert_relative_eq!(g[60], 1e5, max_relative = 1e-12);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        let single = TuneConfig { points: 1, include_zero: false, ki_min: 800.0, ki_max: 800.0, ..cfg };
        assert_eq!(single.grid(), vec![800.0]);
        assert!(TuneConfig { points: 0, ..cfg }.validate().is_err());
        assert!(TuneConfig { ki_max: 0.5, ..cfg }.validate().is_err());
    }

    #[test]
    fn tuned_gains_are_grid_argmin() {
        let p = SuspensionParams::default();
        let road = generate_step_road(&StepRoadSpec::default(), 8.0, 1e-3).unwrap();
        let sim = SimConfig::for_road(&road);
        let cfg = TuneConfig { points: 12, ..Default::default() };
        let res = tune_gains(&p, &road, &CostWeights::default(), &cfg, &sim).unwrap();
        let open = res.sweep[0];
        assert_eq!(open.ki, 0.0);
        assert_relative_eq!(open.cost.unwrap(), 1.0, epsilon = 1e-12);
        assert!(res.cost <= open.cost.unwrap());
        let min = res.sweep.iter().filter_map(|p| p.cost).fold(f64::INFINITY, f64::min);
        assert_eq!(res.cost, min);
        let again = tune_gains(&p, &road, &CostWeights::default(), &cfg, &sim).unwrap();
        assert_eq!(res, again);
    }

    #[test]
    fn single_point_grid_returns_that_point() {
        let p = SuspensionParams::default();
        let road = generate_step_road(&StepRoadSpec::default(), 4.0, 1e-3).unwrap();
        let sim = SimConfig::for_road(&road);
        let cfg = TuneConfig { points: 1, include_zero: false, ki_min: 321.0, ki_max: 321.0, kp: 0.0 };
        let res = tune_gains(&p, &road, &CostWeights::default(), &cfg, &sim).unwrap();
        assert_eq!(res.gains, PIGains::new(0.0, 321.0));
    }
}
