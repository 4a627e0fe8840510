//! Road excitation: ISO roughness classes, filtered-white-noise random
//! profiles, step bumps, and spectral estimation for validating them.

mod psd;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use psd::{estimate_psd, estimate_psd_with, welch, Spectrum, WelchConfig};

/// ISO 8608 roughness class A (smoothest) to H.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IsoRoadClass {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
    H,
}

impl IsoRoadClass {
    pub const ALL: [IsoRoadClass; 8] = [
        IsoRoadClass::A,
        IsoRoadClass::B,
        IsoRoadClass::C,
        IsoRoadClass::D,
        IsoRoadClass::E,
        IsoRoadClass::F,
        IsoRoadClass::G,
        IsoRoadClass::H,
    ];

    /// Geometric-mean displacement PSD at `n0 = 0.1 m⁻¹` [m³].
    pub fn gq_n0(self) -> f64 {
        let idx = IsoRoadClass::ALL.iter().position(|c| *c == self).unwrap();
        // 16e-6 m³ for class A, quadrupling per class.
        16e-6 * 4f64.powi(idx as i32)
    }
}

impl fmt::Display for IsoRoadClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for IsoRoadClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        IsoRoadClass::ALL
            .iter()
            .copied()
            .find(|c| c.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::invalid("class", format!("unknown road class {s:?}, expected A-H")))
    }
}

/// Displacement PSD power law `Gq(n) = Gq(n0)·(n/n0)^(−w)` [m³].
pub fn target_psd(class: IsoRoadClass, n: f64, n0: f64, waviness: f64) -> Result<f64> {
    power_law_psd(class.gq_n0(), n, n0, waviness)
}

pub fn power_law_psd(gq_n0: f64, n: f64, n0: f64, waviness: f64) -> Result<f64> {
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::invalid("n", format!("spatial frequency must be > 0, got {n}")));
    }
    if !(n0 > 0.0 && n0.is_finite()) {
        return Err(Error::invalid("n0", format!("reference frequency must be > 0, got {n0}")));
    }
    Ok(gq_n0 * (n / n0).powf(-waviness))
}

/// Filtered-white-noise random road.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomRoadSpec {
    pub class: IsoRoadClass,
    /// PSD level at `n0` [m³]. Defaults to the class value; overriding it
    /// scales the profile amplitude without changing the noise sequence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gq_n0: Option<f64>,
    /// Vehicle speed [m/s].
    pub v: f64,
    /// Reference spatial frequency [1/m].
    pub n0: f64,
    /// Low-frequency cutoff [Hz]; 0 makes the filter a pure integrator.
    pub f0: f64,
    /// Exponent of the PSD power law.
    pub waviness: f64,
    pub seed: u64,
    /// Sample interval [s].
    pub dt: f64,
}

impl Default for RandomRoadSpec {
    fn default() -> Self {
        Self {
            class: IsoRoadClass::D,
            gq_n0: None,
            v: 20.0,
            n0: 0.1,
            f0: 0.0,
            waviness: 2.0,
            seed: 0,
            dt: 1e-3,
        }
    }
}

impl RandomRoadSpec {
    pub fn psd_level(&self) -> f64 {
        self.gq_n0.unwrap_or_else(|| self.class.gq_n0())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v > 0.0 && self.v.is_finite()) {
            return Err(Error::invalid("v", "vehicle speed must be > 0"));
        }
        if !(self.n0 > 0.0 && self.n0.is_finite()) {
            return Err(Error::invalid("n0", "reference spatial frequency must be > 0"));
        }
        if !(self.f0 >= 0.0 && self.f0.is_finite()) {
            return Err(Error::invalid("f0", "cutoff frequency must be >= 0"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("dt", "sample interval must be > 0"));
        }
        let level = self.psd_level();
        if !(level >= 0.0 && level.is_finite()) {
            return Err(Error::invalid("gq_n0", "PSD level must be >= 0"));
        }
        if !self.waviness.is_finite() {
            return Err(Error::invalid("waviness", "must be finite"));
        }
        Ok(())
    }
}

/// Single bump from 0 to `height` at `t_start`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepRoadSpec {
    /// [m]
    pub height: f64,
    /// [s]
    pub t_start: f64,
}

impl Default for StepRoadSpec {
    fn default() -> Self {
        Self { height: 0.02, t_start: 2.0 }
    }
}

impl StepRoadSpec {
    /// Elevation at time `t`; the post-step value applies from `t_start` on.
    pub fn elevation(&self, t: f64) -> f64 {
        if t < self.t_start {
            0.0
        } else {
            self.height
        }
    }
}

/// What generated a [`RoadTrace`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RoadSource {
    Random(RandomRoadSpec),
    Step(StepRoadSpec),
    /// Traces built directly from samples.
    Samples,
}

/// Uniformly sampled road elevation.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadTrace {
    pub t: Vec<f64>,
    pub q: Vec<f64>,
    pub dt: f64,
    pub source: RoadSource,
}

impl RoadTrace {
    /// Builds a trace from samples taken every `dt` from `t = 0`.
    pub fn from_samples(q: Vec<f64>, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("dt", "sample interval must be > 0"));
        }
        if q.is_empty() {
            return Err(Error::invalid("q", "trace must not be empty"));
        }
        let t = time_grid(q.len(), dt);
        Ok(Self { t, q, dt, source: RoadSource::Samples })
    }

    /// A flat road.
    pub fn zero(duration: f64, dt: f64) -> Result<Self> {
        let n = sample_count(duration, dt)?;
        Self::from_samples(vec![0.0; n], dt)
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn duration(&self) -> f64 {
        (self.len().saturating_sub(1)) as f64 * self.dt
    }

    /// The same trace with every sample multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            q: self.q.iter().map(|q| q * factor).collect(),
            ..self.clone()
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self.source {
            RoadSource::Random(spec) => Some(spec.seed),
            _ => None,
        }
    }
}

pub(crate) fn time_grid(n: usize, dt: f64) -> Vec<f64> {
    (0..n).map(|k| k as f64 * dt).collect()
}

/// Number of samples on `[0, duration]` at spacing `dt`, endpoints included.
pub(crate) fn sample_count(duration: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt", "sample interval must be > 0"));
    }
    if !(duration.is_finite() && duration >= dt * (1.0 - 1e-9)) {
        return Err(Error::invalid("duration", format!("must be >= dt ({dt}), got {duration}")));
    }
    Ok((duration / dt).round() as usize + 1)
}

/// Integrates the first-order roughness filter
/// `q̇ = −2π·f0·q + 2π·n0·sqrt(Gq(n0)·v)·w(t)` from `q(0) = 0`.
///
/// `w` is Gaussian white noise with unit one-sided spectral density, held
/// constant over each sample interval (variance `1/(2·dt)` per sample), so
/// the one-sided displacement PSD of the output follows the power law for
/// any `dt`. Each step uses classical fourth-order Runge–Kutta.
pub fn generate_random_road(spec: &RandomRoadSpec, duration: f64) -> Result<RoadTrace> {
    spec.validate()?;
    let n = sample_count(duration, spec.dt)?;
    let dt = spec.dt;
    let gain = 2.0 * PI * spec.n0 * (spec.psd_level() * spec.v).sqrt();
    let pole = 2.0 * PI * spec.f0;
    let noise_std = (0.5 / dt).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut q = Vec::with_capacity(n);
    let mut state = 0.0;
    q.push(state);
    for _ in 1..n {
        let w: f64 = StandardNormal.sample(&mut rng);
        let drive = gain * noise_std * w;
        let f = |x: f64| -pole * x + drive;
        let k1 = f(state);
        let k2 = f(state + 0.5 * dt * k1);
        let k3 = f(state + 0.5 * dt * k2);
        let k4 = f(state + dt * k3);
        state += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        q.push(state);
    }
    Ok(RoadTrace {
        t: time_grid(n, dt),
        q,
        dt,
        source: RoadSource::Random(*spec),
    })
}

/// Samples a step bump on `[0, duration]`.
pub fn generate_step_road(spec: &StepRoadSpec, duration: f64, dt: f64) -> Result<RoadTrace> {
    if !(spec.t_start >= 0.0 && spec.t_start.is_finite()) {
        return Err(Error::invalid("t_start", "must be >= 0"));
    }
    if !spec.height.is_finite() {
        return Err(Error::invalid("height", "must be finite"));
    }
    if !(duration > spec.t_start) {
        return Err(Error::invalid(
            "duration",
            format!("must exceed t_start ({}), got {duration}", spec.t_start),
        ));
    }
    let n = sample_count(duration, dt)?;
    let t = time_grid(n, dt);
    let q = t.iter().map(|&t| spec.elevation(t)).collect();
    Ok(RoadTrace { t, q, dt, source: RoadSource::Step(*spec) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn class_table() {
        let expect = [16.0, 64.0, 256.0, 1024.0, 4096.0, 16384.0, 65536.0, 262144.0];
        for (class, e) in IsoRoadClass::ALL.iter().zip(expect) {
            assert_relative_eq!(class.gq_n0(), e * 1e-6, max_relative = 1e-15);
        }
        assert_eq!("d".parse::<IsoRoadClass>().unwrap(), IsoRoadClass::D);
        assert!("Z".parse::<IsoRoadClass>().is_err());
    }

    #[test]
    fn target_psd_values() {
        use IsoRoadClass::*;
        assert_relative_eq!(target_psd(D, 0.1, 0.1, 2.0).unwrap(), 1024e-6, max_relative = 1e-14);
        assert_relative_eq!(target_psd(D, 1.0, 0.1, 2.0).unwrap(), 1.024e-5, max_relative = 1e-12);
        for w in [0.0, 1.5, 2.0, 3.3] {
            assert_relative_eq!(target_psd(A, 0.1, 0.1, w).unwrap(), 16e-6, max_relative = 1e-14);
        }
        assert!(target_psd(D, 0.0, 0.1, 2.0).is_err());
        assert!(target_psd(D, -1.0, 0.1, 2.0).is_err());
    }

    #[test]
    fn random_road_is_deterministic_and_starts_at_zero() {
        let spec = RandomRoadSpec { seed: 42, ..Default::default() };
        let a = generate_random_road(&spec, 5.0).unwrap();
        let b = generate_random_road(&spec, 5.0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.q[0], 0.0);
        assert_eq!(a.len(), 5001);
        let c = generate_random_road(&RandomRoadSpec { seed: 43, ..spec }, 5.0).unwrap();
        assert_ne!(a.q, c.q);
    }

    #[test]
    fn zero_level_gives_flat_road() {
        let spec = RandomRoadSpec { gq_n0: Some(0.0), ..Default::default() };
        let r = generate_random_road(&spec, 2.0).unwrap();
        assert!(r.q.iter().all(|&q| q == 0.0));
    }

    #[test]
    fn random_road_rejects_short_duration() {
        let spec = RandomRoadSpec::default();
        assert!(generate_random_road(&spec, 0.5e-3).is_err());
        assert!(generate_random_road(&RandomRoadSpec { v: 0.0, ..spec }, 1.0).is_err());
        assert!(generate_random_road(&RandomRoadSpec { dt: -1.0, ..spec }, 1.0).is_err());
    }

    #[test]
    fn step_road_switches_at_start_time() {
        let spec = StepRoadSpec::default();
        assert_eq!(spec.elevation(1.999), 0.0);
        assert_eq!(spec.elevation(2.0), 0.02);
        let r = generate_step_road(&spec, 20.0, 1e-3).unwrap();
        assert_eq!(r.q[1999], 0.0);
        assert_eq!(r.q[2000], 0.02);
        assert_eq!(*r.q.last().unwrap(), 0.02);
        let flat = generate_step_road(&StepRoadSpec { height: 0.0, ..spec }, 20.0, 1e-3).unwrap();
        assert!(flat.q.iter().all(|&q| q == 0.0));
        assert!(generate_step_road(&spec, 2.0, 1e-3).is_err());
    }

    #[test]
    fn step_values_do_not_depend_on_grid() {
        let spec = StepRoadSpec { height: 0.05, t_start: 0.3 };
        for dt in [1e-3, 7e-4, 0.01, 0.05] {
            let r = generate_step_road(&spec, 1.0, dt).unwrap();
            for (t, q) in r.t.iter().zip(&r.q) {
                assert_eq!(*q, spec.elevation(*t));
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn amplitude_scales_with_root_of_level(alpha in 0.1f64..10.0, seed in 0u64..1000) {
            let base = RandomRoadSpec { seed, ..Default::default() };
            let scaled = RandomRoadSpec { gq_n0: Some(base.psd_level() * alpha * alpha), ..base };
            let a = generate_random_road(&base, 1.0).unwrap();
            let b = generate_random_road(&scaled, 1.0).unwrap();
            for (x, y) in a.q.iter().zip(&b.q) {
                prop_assert!((alpha * x - y).abs() <= 1e-12 * (1.0 + y.abs()));
            }
        }
    }
}
