//! RMS performance criteria and the weighted, baseline-normalized cost.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SuspensionParams;
use crate::road::{RoadSource, RoadTrace};
use crate::simulate::SimOutput;

/// Root mean square of a series.
pub fn rms(signal: &[f64]) -> Result<f64> {
    if signal.is_empty() {
        return Err(Error::invalid("signal", "cannot take the RMS of an empty series"));
    }
    let mean_sq = signal.iter().map(|x| x * x).sum::<f64>() / signal.len() as f64;
    Ok(mean_sq.sqrt())
}

/// The three ride criteria of one run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PerformanceIndex {
    /// RMS body acceleration [m/s²].
    pub acc_rms: f64,
    /// RMS suspension working space `xu − xs` [m].
    pub sws_rms: f64,
    /// RMS dynamic tire load `kt·(xo − xu)` [N].
    pub dtl_rms: f64,
}

pub const INDEX_CSV_HEADER: &str = "acc_rms,sws_rms,dtl_rms";

impl PerformanceIndex {
    pub fn csv_row(&self) -> String {
        format!("{},{},{}", self.acc_rms, self.sws_rms, self.dtl_rms)
    }

    pub fn is_positive(&self) -> bool {
        self.acc_rms > 0.0 && self.sws_rms > 0.0 && self.dtl_rms > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostWeights {
    pub w_acc: f64,
    pub w_dtl: f64,
    pub w_sws: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self { w_acc: 0.5, w_dtl: 0.45, w_sws: 0.05 }
    }
}

impl CostWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, w) in [("w_acc", self.w_acc), ("w_dtl", self.w_dtl), ("w_sws", self.w_sws)] {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::invalid(name, format!("weight must be >= 0, got {w}")));
            }
        }
        Ok(())
    }
}

/// Start of the analysis window for a road: random runs drop the first
/// second of initial-condition transient, step runs keep everything.
pub fn settle_time(road: &RoadTrace) -> f64 {
    match road.source {
        RoadSource::Random(_) => RANDOM_SETTLE,
        _ => 0.0,
    }
}

pub const RANDOM_SETTLE: f64 = 1.0;

/// Criteria over samples with `t ≥ settle`.
pub fn performance_index(
    sim: &SimOutput,
    p: &SuspensionParams,
    road: &RoadTrace,
    settle: f64,
) -> Result<PerformanceIndex> {
    if sim.len() != road.len() {
        return Err(Error::GridMismatch(format!(
            "simulation has {} samples, road has {}",
            sim.len(),
            road.len()
        )));
    }
    let tol = 1e-9 * road.dt;
    if let Some(i) = sim.t.iter().zip(&road.t).position(|(a, b)| (a - b).abs() > tol) {
        return Err(Error::GridMismatch(format!("sample {i} at different times")));
    }
    let start = sim.t.partition_point(|&t| t < settle - tol);
    if start >= sim.len() {
        return Err(Error::invalid("settle", format!("{settle} s leaves no samples to analyse")));
    }
    let window = start..sim.len();
    let sws: Vec<f64> = window.clone().map(|i| sim.xu[i] - sim.xs[i]).collect();
    let dtl: Vec<f64> = window.clone().map(|i| p.kt * (road.q[i] - sim.xu[i])).collect();
    Ok(PerformanceIndex {
        acc_rms: rms(&sim.acc_s[window])?,
        sws_rms: rms(&sws)?,
        dtl_rms: rms(&dtl)?,
    })
}

/// `Σ wᵢ·(indexᵢ / baselineᵢ)`; equals the weight sum at the baseline.
pub fn weighted_cost(
    index: &PerformanceIndex,
    baseline: &PerformanceIndex,
    w: &CostWeights,
) -> Result<f64> {
    if !baseline.is_positive() || !baseline.acc_rms.is_finite() {
        return Err(Error::invalid(
            "baseline",
            format!("every baseline criterion must be > 0, got {}", baseline.csv_row()),
        ));
    }
    Ok(w.w_acc * (index.acc_rms / baseline.acc_rms)
        + w.w_dtl * (index.dtl_rms / baseline.dtl_rms)
        + w.w_sws * (index.sws_rms / baseline.sws_rms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{simulate_passive, simulate_twin, SimConfig};
    use crate::road::{generate_random_road, RandomRoadSpec};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn rms_basics() {
        assert_relative_eq!(rms(&[2.0; 17]).unwrap(), 2.0);
        let alt: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert_relative_eq!(rms(&alt).unwrap(), 1.0);
        let n = 4000;
        let sine: Vec<f64> = (0..n)
            .map(|i| 3.0 * (2.0 * std::f64::consts::PI * 5.0 * i as f64 / n as f64).sin())
            .collect();
        assert!((rms(&sine).unwrap() - 3.0 / 2f64.sqrt()).abs() < 1e-6);
        assert!(rms(&[]).is_err());
    }

    #[test]
    fn cost_arithmetic() {
        let base = PerformanceIndex { acc_rms: 2.0, sws_rms: 0.01, dtl_rms: 300.0 };
        let w = CostWeights::default();
        assert_eq!(weighted_cost(&base, &base, &w).unwrap(), 1.0);
        let halved = PerformanceIndex { acc_rms: 1.0, ..base };
        assert_relative_eq!(weighted_cost(&halved, &base, &w).unwrap(), 0.75, epsilon = 1e-15);
        let only_acc = CostWeights { w_acc: 1.0, w_dtl: 0.0, w_sws: 0.0 };
        let r = PerformanceIndex { acc_rms: 2.0 * 1.37, ..base };
        assert_relative_eq!(weighted_cost(&r, &base, &only_acc).unwrap(), 1.37, epsilon = 1e-15);
        let degenerate = PerformanceIndex { dtl_rms: 0.0, ..base };
        assert!(weighted_cost(&base, &degenerate, &w).is_err());
    }

    #[test]
    fn rest_on_flat_road_scores_zero() {
        let p = SuspensionParams::default();
        let road = RoadTrace::zero(3.0, 1e-3).unwrap();
        let sim = simulate_passive(&p, &road, &SimConfig::for_road(&road)).unwrap();
        let idx = performance_index(&sim, &p, &road, 0.0).unwrap();
        assert_eq!(idx, PerformanceIndex::default());
    }

    #[test]
    fn wheel_following_road_has_no_tire_load() {
        let p = SuspensionParams::default();
        let road = RoadTrace::zero(1.0, 1e-3).unwrap();
        let mut sim = simulate_passive(&p, &road, &SimConfig::for_road(&road)).unwrap();
        let road = RoadTrace::from_samples((0..road.len()).map(|i| (i as f64 * 0.01).sin()).collect(), 1e-3).unwrap();
        sim.xu = road.q.clone();
        let idx = performance_index(&sim, &p, &road, 0.0).unwrap();
        assert_eq!(idx.dtl_rms, 0.0);
        assert!(idx.sws_rms > 0.0);
    }

    #[test]
    fn grid_and_window_checks() {
        let p = SuspensionParams::default();
        let road = RoadTrace::zero(1.0, 1e-3).unwrap();
        let sim = simulate_passive(&p, &road, &SimConfig::for_road(&road)).unwrap();
        let other = RoadTrace::zero(2.0, 1e-3).unwrap();
        assert!(matches!(performance_index(&sim, &p, &other, 0.0), Err(Error::GridMismatch(_))));
        assert!(performance_index(&sim, &p, &road, 5.0).is_err());
    }

    #[test]
    fn doubling_the_road_doubles_every_index() {
        let p = SuspensionParams::default();
        let road = generate_random_road(&RandomRoadSpec { seed: 5, ..Default::default() }, 10.0).unwrap();
        let road2 = generate_random_road(
            &RandomRoadSpec { seed: 5, gq_n0: Some(4.0 * 1024e-6), ..Default::default() },
            10.0,
        )
        .unwrap();
        let cfg = SimConfig::for_road(&road);
        let a = performance_index(&simulate_twin(&p, &road, &cfg).unwrap(), &p, &road, 1.0).unwrap();
        let b = performance_index(&simulate_twin(&p, &road2, &cfg).unwrap(), &p, &road2, 1.0).unwrap();
        assert_relative_eq!(b.acc_rms, 2.0 * a.acc_rms, max_relative = 1e-10);
        assert_relative_eq!(b.sws_rms, 2.0 * a.sws_rms, max_relative = 1e-10);
        assert_relative_eq!(b.dtl_rms, 2.0 * a.dtl_rms, max_relative = 1e-10);
    }

    #[test]
    fn acceleration_ignores_displacement_offset() {
        let p = SuspensionParams::default();
        let road = generate_random_road(&RandomRoadSpec { seed: 1, ..Default::default() }, 4.0).unwrap();
        let sim = simulate_passive(&p, &road, &SimConfig::for_road(&road)).unwrap();
        let a = performance_index(&sim, &p, &road, 0.0).unwrap();
        let mut shifted = sim.clone();
        shifted.xs.iter_mut().for_each(|x| *x += 0.3);
        shifted.xu.iter_mut().for_each(|x| *x += 0.3);
        let shifted_road = RoadTrace { q: road.q.iter().map(|q| q + 0.3).collect(), ..road.clone() };
        let b = performance_index(&shifted, &p, &shifted_road, 0.0).unwrap();
        assert_eq!(a.acc_rms, b.acc_rms);
        assert_relative_eq!(a.sws_rms, b.sws_rms, max_relative = 1e-9);
        assert_relative_eq!(a.dtl_rms, b.dtl_rms, max_relative = 1e-9);
    }

    proptest! {
        #[test]
        fn cost_is_monotone(
            acc in 0.0f64..10.0, sws in 0.0f64..1.0, dtl in 0.0f64..1e3,
            bump in 0.0f64..5.0, which in 0usize..3,
        ) {
            let base = PerformanceIndex { acc_rms: 1.3, sws_rms: 0.02, dtl_rms: 250.0 };
            let w = CostWeights::default();
            let a = PerformanceIndex { acc_rms: acc, sws_rms: sws, dtl_rms: dtl };
            let mut b = a;
            match which {
                0 => b.acc_rms += bump,
                1 => b.sws_rms += bump,
                _ => b.dtl_rms += bump,
            }
            prop_assert!(weighted_cost(&b, &base, &w).unwrap() >= weighted_cost(&a, &base, &w).unwrap());
        }

        #[test]
        fn index_is_positively_homogeneous(alpha in -5.0f64..5.0) {
            let p = SuspensionParams::default();
            let road = RoadTrace::from_samples((0..500).map(|i| (i as f64 * 0.05).cos() * 0.01).collect(), 1e-3).unwrap();
            let sim = simulate_passive(&p, &road, &SimConfig::for_road(&road)).unwrap();
            let a = performance_index(&sim, &p, &road, 0.0).unwrap();
            let mut scaled = sim.clone();
            for s in [&mut scaled.xs, &mut scaled.xu, &mut scaled.acc_s] {
                s.iter_mut().for_each(|x| *x *= alpha);
            }
            let b = performance_index(&scaled, &p, &road.scaled(alpha), 0.0).unwrap();
            prop_assert!((b.acc_rms - alpha.abs() * a.acc_rms).abs() <= 1e-12 * (1.0 + a.acc_rms));
            prop_assert!((b.sws_rms - alpha.abs() * a.sws_rms).abs() <= 1e-12);
            prop_assert!((b.dtl_rms - alpha.abs() * a.dtl_rms).abs() <= 1e-9 * (1.0 + a.dtl_rms));
        }
    }
}
