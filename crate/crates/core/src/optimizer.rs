//! Box-constrained (μ+λ) evolution strategy and the suspension design
//! objective it is applied to.
//!
//! Offspring are Gaussian mutations of round-robin parents, projected onto
//! the box before evaluation. All step sizes are scaled together by the
//! 1/5-success rule. Evaluations within a generation run in parallel; the
//! mutation noise comes from a per-generation RNG stream and selection
//! breaks ties by pool index, so results do not depend on scheduling.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{performance_index, settle_time, weighted_cost, CostWeights, PerformanceIndex};
use crate::model::SuspensionParams;
use crate::road::RoadTrace;
use crate::simulate::{simulate_twin, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Self {
        Self { lower, upper }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn clip(&self, x: f64) -> f64 {
        x.clamp(self.lower, self.upper)
    }

    pub fn contains(&self, x: f64) -> bool {
        (self.lower..=self.upper).contains(&x)
    }
}

/// Search box over `(c1, k1, c2, k2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamBounds {
    pub c1: Interval,
    pub k1: Interval,
    pub c2: Interval,
    pub k2: Interval,
}

impl Default for ParamBounds {
    fn default() -> Self {
        Self {
            c1: Interval::new(900.0, 2500.0),
            k1: Interval::new(15000.0, 40000.0),
            c2: Interval::new(900.0, 2500.0),
            k2: Interval::new(15000.0, 40000.0),
        }
    }
}

impl ParamBounds {
    pub fn as_box(&self) -> [Interval; 4] {
        [self.c1, self.k1, self.c2, self.k2]
    }
}

fn validate_box(bounds: &[Interval]) -> Result<()> {
    if bounds.is_empty() {
        return Err(Error::invalid("bounds", "search box has no dimensions"));
    }
    for b in bounds {
        if !(b.lower.is_finite() && b.upper.is_finite() && b.lower < b.upper) {
            return Err(Error::invalid(
                "bounds",
                format!("need finite lower < upper, got [{}, {}]", b.lower, b.upper),
            ));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ESConfig {
    /// Parents kept per generation.
    pub mu: usize,
    /// Offspring per generation.
    pub lambda: usize,
    /// Number of generations.
    pub iterations: usize,
    /// Initial step size as a fraction of each box width.
    pub sigma0: f64,
    pub seed: u64,
}

impl Default for ESConfig {
    fn default() -> Self {
        Self { mu: 5, lambda: 20, iterations: 50, sigma0: 0.2, seed: 0 }
    }
}

impl ESConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mu < 1 {
            return Err(Error::invalid("mu", "need at least one parent"));
        }
        if self.lambda < self.mu {
            return Err(Error::invalid("lambda", "offspring count must be >= mu"));
        }
        if self.iterations < 1 {
            return Err(Error::invalid("iterations", "need at least one generation"));
        }
        if !(self.sigma0 > 0.0 && self.sigma0.is_finite()) {
            return Err(Error::invalid("sigma0", "must be > 0"));
        }
        Ok(())
    }
}

/// Best point after one generation (generation 0 is the initial population).
#[derive(Debug, Clone, PartialEq)]
pub struct Generation {
    pub best_cost: f64,
    pub best_x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub best_x: Vec<f64>,
    pub best_cost: f64,
    pub history: Vec<Generation>,
    pub evaluations: usize,
}

pub const HISTORY_CSV_HEADER: &str = "generation,best_cost,c1,k1,c2,k2";

impl OptimizationResult {
    /// History table; one column per search coordinate after `best_cost`.
    pub fn write_history_csv<W: Write>(&self, mut w: W, header: &str) -> io::Result<()> {
        writeln!(w, "{header}")?;
        for (g, h) in self.history.iter().enumerate() {
            let xs: Vec<String> = h.best_x.iter().map(|x| x.to_string()).collect();
            writeln!(w, "{g},{},{}", h.best_cost, xs.join(","))?;
        }
        Ok(())
    }
}

const SUCCESS_TARGET: f64 = 0.2;
const SIGMA_DECAY: f64 = 0.85;

#[derive(Clone)]
struct Member {
    x: Vec<f64>,
    cost: f64,
}

fn evaluate_all<F>(objective: &F, points: Vec<Vec<f64>>) -> Vec<Member>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    points
        .into_par_iter()
        .map(|x| {
            let c = objective(&x);
            // Non-finite candidates rank last.
            let cost = if c.is_finite() { c } else { f64::INFINITY };
            Member { x, cost }
        })
        .collect()
}

fn generation_rng(seed: u64, generation: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(generation);
    rng
}

/// Minimizes `objective` over `bounds` from a random initial population.
pub fn optimize<F>(objective: F, bounds: &[Interval], cfg: &ESConfig) -> Result<OptimizationResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    optimize_from(objective, bounds, cfg, None)
}

/// As [`optimize`], seeding the first parent with `initial` (clipped).
pub fn optimize_from<F>(
    objective: F,
    bounds: &[Interval],
    cfg: &ESConfig,
    initial: Option<&[f64]>,
) -> Result<OptimizationResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    validate_box(bounds)?;
    if let Some(x0) = initial {
        if x0.len() != bounds.len() {
            return Err(Error::invalid("initial", "dimension differs from the search box"));
        }
    }

    let mut rng = generation_rng(cfg.seed, 0);
    let mut start: Vec<Vec<f64>> = Vec::with_capacity(cfg.mu);
    if let Some(x0) = initial {
        start.push(x0.iter().zip(bounds).map(|(x, b)| b.clip(*x)).collect());
    }
    while start.len() < cfg.mu {
        start.push(bounds.iter().map(|b| rng.random_range(b.lower..=b.upper)).collect());
    }
    let mut parents = evaluate_all(&objective, start);
    let mut evaluations = parents.len();
    if parents.iter().all(|m| m.cost.is_infinite()) {
        return Err(Error::Numerical("objective is non-finite on the whole initial population".into()));
    }
    sort_members(&mut parents);

    let mut sigma: Vec<f64> = bounds.iter().map(|b| cfg.sigma0 * b.width()).collect();
    let mut history = vec![Generation { best_cost: parents[0].cost, best_x: parents[0].x.clone() }];

    for generation in 1..=cfg.iterations {
        let mut rng = generation_rng(cfg.seed, generation as u64);
        let mut lineage = Vec::with_capacity(cfg.lambda);
        let offspring: Vec<Vec<f64>> = (0..cfg.lambda)
            .map(|j| {
                let parent = j % parents.len();
                lineage.push(parent);
                parents[parent]
                    .x
                    .iter()
                    .zip(&sigma)
                    .zip(bounds)
                    .map(|((x, s), b)| {
                        let z: f64 = rng.sample(StandardNormal);
                        b.clip(x + s * z)
                    })
                    .collect()
            })
            .collect();
        let children = evaluate_all(&objective, offspring);
        evaluations += children.len();
        if children.iter().all(|m| m.cost.is_infinite()) {
            return Err(Error::Numerical(format!(
                "every offspring in generation {generation} has a non-finite objective"
            )));
        }

        let successes = children
            .iter()
            .zip(&lineage)
            .filter(|(c, &p)| c.cost < parents[p].cost)
            .count();
        let rate = successes as f64 / cfg.lambda as f64;
        let factor = if rate > SUCCESS_TARGET {
            1.0 / SIGMA_DECAY
        } else if rate < SUCCESS_TARGET {
            SIGMA_DECAY
        } else {
            1.0
        };
        for (s, b) in sigma.iter_mut().zip(bounds) {
            *s = (*s * factor).clamp(1e-12 * b.width(), b.width());
        }

        let mut pool = parents;
        pool.extend(children);
        sort_members(&mut pool);
        pool.truncate(cfg.mu);
        parents = pool;
        history.push(Generation { best_cost: parents[0].cost, best_x: parents[0].x.clone() });
    }

    Ok(OptimizationResult {
        best_x: parents[0].x.clone(),
        best_cost: parents[0].cost,
        history,
        evaluations,
    })
}

/// Stable sort by cost, so ties keep pool order (parents before offspring).
fn sort_members(pool: &mut [Member]) {
    pool.sort_by(|a, b| a.cost.total_cmp(&b.cost));
}

/// Weighted ride cost of a twin-accumulator design on one frozen road,
/// relative to the base design on the same road.
#[derive(Debug, Clone)]
pub struct SuspensionObjective {
    pub base: SuspensionParams,
    pub road: RoadTrace,
    pub weights: CostWeights,
    pub sim: SimConfig,
    pub baseline: PerformanceIndex,
    pub settle: f64,
}

pub fn make_suspension_objective(
    base: SuspensionParams,
    road: RoadTrace,
    weights: CostWeights,
    sim: SimConfig,
) -> Result<SuspensionObjective> {
    weights.validate()?;
    let settle = settle_time(&road);
    let run = simulate_twin(&base, &road, &sim)?;
    let baseline = performance_index(&run, &base, &road, settle)?;
    if !baseline.is_positive() {
        return Err(Error::invalid(
            "road",
            format!("base design scores zero on a criterion ({}); nothing to normalize by", baseline.csv_row()),
        ));
    }
    Ok(SuspensionObjective { base, road, weights, sim, baseline, settle })
}

impl SuspensionObjective {
    pub fn params_for(&self, x: &[f64]) -> SuspensionParams {
        self.base.with_elements(x[0], x[1], x[2], x[3])
    }

    pub fn index(&self, params: &SuspensionParams) -> Result<PerformanceIndex> {
        let run = simulate_twin(params, &self.road, &self.sim)?;
        performance_index(&run, params, &self.road, self.settle)
    }

    pub fn cost_of(&self, params: &SuspensionParams) -> Result<f64> {
        weighted_cost(&self.index(params)?, &self.baseline, &self.weights)
    }

    /// Cost of `[c1, k1, c2, k2]`; NaN when the run fails.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.cost_of(&self.params_for(x)).unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuspensionOptimization {
    pub params: SuspensionParams,
    pub result: OptimizationResult,
}

/// Runs the ES over the four suspension elements, starting from the base design.
pub fn optimize_suspension(
    objective: &SuspensionObjective,
    bounds: &ParamBounds,
    cfg: &ESConfig,
) -> Result<SuspensionOptimization> {
    let x0 = objective.base.elements();
    let result = optimize_from(|x| objective.evaluate(x), &bounds.as_box(), cfg, Some(&x0))?;
    Ok(SuspensionOptimization { params: objective.params_for(&result.best_x), result })
}
