//! Fixed-step time-domain integration of the plant models.
//!
//! All runs use classical fourth-order Runge–Kutta. The road sample at the
//! start of each step is held for all four stages.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::control::PIGains;
use crate::error::{Error, Result};
use crate::model::{passive_rhs, twin_rhs, ModelKind, PassiveState, SuspensionParams, TwinState};
use crate::road::{sample_count, RoadTrace};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Integration step [s].
    pub dt: f64,
    /// Horizon [s].
    pub duration: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { dt: 1e-3, duration: 20.0 }
    }
}

impl SimConfig {
    /// Configuration whose grid coincides with the road's.
    pub fn for_road(road: &RoadTrace) -> Self {
        Self { dt: road.dt, duration: road.duration() }
    }

    pub fn samples(&self) -> Result<usize> {
        sample_count(self.duration, self.dt)
    }

    fn check_road(&self, road: &RoadTrace) -> Result<usize> {
        let n = self.samples()?;
        if (road.dt - self.dt).abs() > 1e-9 * self.dt {
            return Err(Error::GridMismatch(format!(
                "road dt {} differs from simulation dt {}",
                road.dt, self.dt
            )));
        }
        if road.len() != n {
            return Err(Error::GridMismatch(format!(
                "road has {} samples, simulation grid needs {n}",
                road.len()
            )));
        }
        if let Some(bad) = road.q.iter().position(|q| !q.is_finite()) {
            return Err(Error::invalid("road", format!("sample {bad} is not finite")));
        }
        Ok(n)
    }
}

/// Trajectories of one run. Every series is sampled on `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub model: ModelKind,
    pub t: Vec<f64>,
    pub xs: Vec<f64>,
    pub vs: Vec<f64>,
    pub xu: Vec<f64>,
    pub vu: Vec<f64>,
    /// Internal node displacement; zero for the passive model.
    pub x3: Vec<f64>,
    /// Body acceleration.
    pub acc_s: Vec<f64>,
    /// `kt·(xo − xu)`.
    pub tire_force: Vec<f64>,
    /// Actuator force; zero for uncontrolled models.
    pub fa: Vec<f64>,
    /// Road elevation used at each sample.
    pub q: Vec<f64>,
}

pub const SIM_CSV_HEADER: &str = "t,xs,vs,xu,vu,x3,acc_s,tire_force,fa,q";

impl SimOutput {
    fn with_capacity(model: ModelKind, n: usize) -> Self {
        let v = || Vec::with_capacity(n);
        Self {
            model,
            t: v(),
            xs: v(),
            vs: v(),
            xu: v(),
            vu: v(),
            x3: v(),
            acc_s: v(),
            tire_force: v(),
            fa: v(),
            q: v(),
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Suspension working space `xu − xs` at each sample.
    pub fn working_space(&self) -> Vec<f64> {
        self.xu.iter().zip(&self.xs).map(|(u, s)| u - s).collect()
    }

    /// Writes the trajectory table, one row per sample.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{SIM_CSV_HEADER}")?;
        for i in 0..self.len() {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{}",
                self.t[i],
                self.xs[i],
                self.vs[i],
                self.xu[i],
                self.vu[i],
                self.x3[i],
                self.acc_s[i],
                self.tire_force[i],
                self.fa[i],
                self.q[i]
            )?;
        }
        Ok(())
    }
}

#[inline]
fn rk4<const N: usize>(f: impl Fn(&[f64; N]) -> [f64; N], y: &[f64; N], h: f64) -> [f64; N] {
    let shift = |base: &[f64; N], k: &[f64; N], s: f64| -> [f64; N] {
        std::array::from_fn(|i| base[i] + s * k[i])
    };
    let k1 = f(y);
    let k2 = f(&shift(y, &k1, 0.5 * h));
    let k3 = f(&shift(y, &k2, 0.5 * h));
    let k4 = f(&shift(y, &k3, h));
    std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

/// Quantities recorded alongside the state at each sample.
struct Observation {
    acc_s: f64,
    fa: f64,
}

fn run<const N: usize>(
    model: ModelKind,
    p: &SuspensionParams,
    road: &RoadTrace,
    cfg: &SimConfig,
    initial: [f64; N],
    rhs: impl Fn(&[f64; N], f64) -> [f64; N],
    observe: impl Fn(&[f64; N], f64) -> Observation,
) -> Result<SimOutput> {
    let n = cfg.check_road(road)?;
    let mut out = SimOutput::with_capacity(model, n);
    let mut y = initial;
    for k in 0..n {
        let xo = road.q[k];
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::Numerical(format!(
                "{model} state diverged at t = {}",
                road.t[k]
            )));
        }
        let obs = observe(&y, xo);
        out.t.push(road.t[k]);
        out.xs.push(y[0]);
        out.vs.push(y[1]);
        out.xu.push(y[2]);
        out.vu.push(y[3]);
        out.x3.push(if N > 4 { y[4] } else { 0.0 });
        out.acc_s.push(obs.acc_s);
        out.tire_force.push(p.kt * (xo - y[2]));
        out.fa.push(obs.fa);
        out.q.push(xo);
        if k + 1 < n {
            y = rk4(|s| rhs(s, xo), &y, cfg.dt);
        }
    }
    Ok(out)
}

/// Passive quarter car from rest.
pub fn simulate_passive(p: &SuspensionParams, road: &RoadTrace, cfg: &SimConfig) -> Result<SimOutput> {
    simulate_passive_from(p, road, cfg, PassiveState::default())
}

pub fn simulate_passive_from(
    p: &SuspensionParams,
    road: &RoadTrace,
    cfg: &SimConfig,
    initial: PassiveState,
) -> Result<SimOutput> {
    p.validate()?;
    run(
        ModelKind::Passive,
        p,
        road,
        cfg,
        initial.to_array(),
        |s, xo| passive_rhs(s, p, xo),
        |s, xo| Observation { acc_s: passive_rhs(s, p, xo)[1], fa: 0.0 },
    )
}

/// Twin-accumulator quarter car from rest.
pub fn simulate_twin(p: &SuspensionParams, road: &RoadTrace, cfg: &SimConfig) -> Result<SimOutput> {
    simulate_twin_from(p, road, cfg, TwinState::default())
}

pub fn simulate_twin_from(
    p: &SuspensionParams,
    road: &RoadTrace,
    cfg: &SimConfig,
    initial: TwinState,
) -> Result<SimOutput> {
    p.validate()?;
    run(
        ModelKind::Twin,
        p,
        road,
        cfg,
        initial.to_array(),
        |s, xo| twin_rhs(s, p, xo, 0.0),
        |s, xo| Observation { acc_s: twin_rhs(s, p, xo, 0.0)[1], fa: 0.0 },
    )
}

/// Twin-accumulator plant with an actuator force given as a function of
/// the current state.
pub fn simulate_twin_forced(
    p: &SuspensionParams,
    road: &RoadTrace,
    cfg: &SimConfig,
    force: impl Fn(&TwinState) -> f64,
) -> Result<SimOutput> {
    p.validate()?;
    let fa_of = |s: &[f64; 5]| force(&TwinState::from_array(*s));
    run(
        ModelKind::Active,
        p,
        road,
        cfg,
        [0.0; 5],
        |s, xo| twin_rhs(s, p, xo, fa_of(s)),
        |s, xo| {
            let fa = fa_of(s);
            Observation { acc_s: twin_rhs(s, p, xo, fa)[1], fa }
        },
    )
}

/// Closed-loop actuator force for the augmented state
/// `[xs, vs, xu, vu, x3, z]`, with `z` the integral of `e = −ẍs`.
///
/// `ẍs` depends on `fa` through `e`; solving `ms·ẍs = F + kp·(−ẍs) + ki·z`
/// gives `ẍs = (F + ki·z)/(ms + kp)`.
#[inline]
fn pi_force(s: &[f64; 6], p: &SuspensionParams, g: &PIGains) -> f64 {
    let plant: &[f64; 5] = s[..5].try_into().unwrap();
    let strut = crate::model::twin_strut_force(plant, p);
    let acc_s = (strut + g.ki * s[5]) / (p.ms + g.kp);
    g.output(-acc_s, s[5])
}

fn active_rhs(s: &[f64; 6], p: &SuspensionParams, g: &PIGains, xo: f64) -> ([f64; 6], f64) {
    let fa = pi_force(s, p, g);
    let plant: &[f64; 5] = s[..5].try_into().unwrap();
    let d = twin_rhs(plant, p, xo, fa);
    ([d[0], d[1], d[2], d[3], d[4], -d[1]], fa)
}

/// Active twin-accumulator quarter car under PI feedback of body
/// acceleration towards a zero set point, starting from rest.
pub fn simulate_active(
    p: &SuspensionParams,
    road: &RoadTrace,
    gains: &PIGains,
    cfg: &SimConfig,
) -> Result<SimOutput> {
    p.validate()?;
    gains.validate_for(p)?;
    run(
        ModelKind::Active,
        p,
        road,
        cfg,
        [0.0; 6],
        |s, xo| active_rhs(s, p, gains, xo).0,
        |s, xo| {
            let (d, fa) = active_rhs(s, p, gains, xo);
            Observation { acc_s: d[1], fa }
        },
    )
}

/// Dispatches on `model`; `gains` is used only for [`ModelKind::Active`].
pub fn simulate(
    model: ModelKind,
    p: &SuspensionParams,
    road: &RoadTrace,
    gains: &PIGains,
    cfg: &SimConfig,
) -> Result<SimOutput> {
    match model {
        ModelKind::Passive => simulate_passive(p, road, cfg),
        ModelKind::Twin => simulate_twin(p, road, cfg),
        ModelKind::Active => simulate_active(p, road, gains, cfg),
    }
}
