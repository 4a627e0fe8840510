//! Plant definitions for the passive, twin-accumulator and active
//! twin-accumulator quarter-car models.
//!
//! Coordinates are measured upward from static equilibrium: `xs` body,
//! `xu` wheel, `x3` the massless node between spring `k1` and the
//! `k2 ∥ c2` pair, `xo` road elevation. Damper `c1` acts directly between
//! body and wheel. The actuator force `fa` pushes the body up and the wheel
//! down.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Physical constants of one quarter-car plant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuspensionParams {
    /// Sprung mass [kg].
    pub ms: f64,
    /// Unsprung mass [kg].
    pub mu: f64,
    /// Damper between body and wheel [N·s/m].
    pub c1: f64,
    /// Spring between body and internal node (passive: body and wheel) [N/m].
    pub k1: f64,
    /// Damper between internal node and wheel [N·s/m].
    pub c2: f64,
    /// Spring between internal node and wheel [N/m].
    pub k2: f64,
    /// Tire stiffness [N/m].
    pub kt: f64,
}

impl Default for SuspensionParams {
    fn default() -> Self {
        Self {
            ms: 300.0,
            mu: 40.0,
            c1: 1000.0,
            k1: 15000.0,
            c2: 1000.0,
            k2: 15000.0,
            kt: 20000.0,
        }
    }
}

impl SuspensionParams {
    /// Checks that every constant is finite and strictly positive.
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("ms", self.ms),
            ("mu", self.mu),
            ("c1", self.c1),
            ("k1", self.k1),
            ("c2", self.c2),
            ("k2", self.k2),
            ("kt", self.kt),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::invalid(name, format!("must be finite and > 0, got {value}")));
            }
        }
        Ok(())
    }

    /// Returns a copy with the four tunable suspension elements replaced.
    pub fn with_elements(&self, c1: f64, k1: f64, c2: f64, k2: f64) -> Self {
        Self { c1, k1, c2, k2, ..*self }
    }

    /// `[c1, k1, c2, k2]`, the coordinates searched by the optimizer.
    pub fn elements(&self) -> [f64; 4] {
        [self.c1, self.k1, self.c2, self.k2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PassiveState {
    pub xs: f64,
    pub vs: f64,
    pub xu: f64,
    pub vu: f64,
}

impl PassiveState {
    pub fn to_array(self) -> [f64; 4] {
        [self.xs, self.vs, self.xu, self.vu]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self { xs: a[0], vs: a[1], xu: a[2], vu: a[3] }
    }
}

/// State of the twin-accumulator plant. The internal node is massless and
/// carries a displacement only; its velocity follows from the node balance.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TwinState {
    pub xs: f64,
    pub vs: f64,
    pub xu: f64,
    pub vu: f64,
    pub x3: f64,
}

impl TwinState {
    pub fn to_array(self) -> [f64; 5] {
        [self.xs, self.vs, self.xu, self.vu, self.x3]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self { xs: a[0], vs: a[1], xu: a[2], vu: a[3], x3: a[4] }
    }
}

/// Exogenous input at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlantInput {
    /// Road elevation [m].
    pub xo: f64,
    /// Actuator force [N].
    pub fa: f64,
}

/// Time derivative of a [`PassiveState`]: `(ẋs, v̇s, ẋu, v̇u)`.
pub type PassiveDerivative = PassiveState;
/// Time derivative of a [`TwinState`]: `(ẋs, v̇s, ẋu, v̇u, ẋ3)`.
pub type TwinDerivative = TwinState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Passive,
    Twin,
    Active,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Passive => "passive",
            ModelKind::Twin => "twin",
            ModelKind::Active => "active",
        })
    }
}

pub(crate) fn passive_rhs(s: &[f64; 4], p: &SuspensionParams, xo: f64) -> [f64; 4] {
    let [xs, vs, xu, vu] = *s;
    let strut = p.k1 * (xu - xs) + p.c1 * (vu - vs);
    let acc_s = strut / p.ms;
    let acc_u = (p.kt * (xo - xu) - strut) / p.mu;
    [vs, acc_s, vu, acc_u]
}

/// Node velocity from `k1(x3−xs) = k2(xu−x3) + c2(vu−ẋ3)`.
#[inline]
pub(crate) fn node_velocity(s: &[f64; 5], p: &SuspensionParams) -> f64 {
    let [xs, _, xu, vu, x3] = *s;
    vu - (p.k1 * (x3 - xs) - p.k2 * (xu - x3)) / p.c2
}

/// Force the strut exerts on the body with no actuator: spring `k1` via the
/// node plus damper `c1`. By the node balance the strut exerts the opposite
/// force on the wheel.
#[inline]
pub(crate) fn twin_strut_force(s: &[f64; 5], p: &SuspensionParams) -> f64 {
    let [xs, vs, _, vu, x3] = *s;
    p.k1 * (x3 - xs) + p.c1 * (vu - vs)
}

pub(crate) fn twin_rhs(s: &[f64; 5], p: &SuspensionParams, xo: f64, fa: f64) -> [f64; 5] {
    let [xs, vs, xu, vu, x3] = *s;
    let v3 = node_velocity(s, p);
    let acc_s = (p.k1 * (x3 - xs) + p.c1 * (vu - vs) + fa) / p.ms;
    let acc_u = (p.kt * (xo - xu) - p.c1 * (vu - vs) - p.k2 * (xu - x3) - p.c2 * (vu - v3) - fa) / p.mu;
    [vs, acc_s, vu, acc_u, v3]
}

/// Derivative of the passive quarter car.
pub fn passive_derivative(
    state: PassiveState,
    p: &SuspensionParams,
    xo: f64,
) -> Result<PassiveDerivative> {
    p.validate()?;
    ensure_finite("state", &state.to_array())?;
    ensure_finite("xo", &[xo])?;
    Ok(PassiveState::from_array(passive_rhs(&state.to_array(), p, xo)))
}

/// Derivative of the twin-accumulator quarter car.
pub fn twin_derivative(state: TwinState, p: &SuspensionParams, xo: f64) -> Result<TwinDerivative> {
    active_twin_derivative(state, p, PlantInput { xo, fa: 0.0 })
}

/// Derivative of the twin-accumulator quarter car with an actuator force
/// acting between body and wheel.
pub fn active_twin_derivative(
    state: TwinState,
    p: &SuspensionParams,
    input: PlantInput,
) -> Result<TwinDerivative> {
    p.validate()?;
    ensure_finite("state", &state.to_array())?;
    ensure_finite("input", &[input.xo, input.fa])?;
    Ok(TwinState::from_array(twin_rhs(&state.to_array(), p, input.xo, input.fa)))
}

/// Undamped natural frequencies [Hz] in ascending order.
///
/// The twin plant is reduced to a single equivalent spring `k1·k2/(k1+k2)`
/// between body and wheel. `Active` is treated like `Twin`.
pub fn natural_frequencies(p: &SuspensionParams, model: ModelKind) -> Result<[f64; 2]> {
    p.validate()?;
    let k = match model {
        ModelKind::Passive => p.k1,
        ModelKind::Twin | ModelKind::Active => p.k1 * p.k2 / (p.k1 + p.k2),
    };
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::invalid("stiffness", "equivalent suspension stiffness must be > 0"));
    }
    // det(K − ω²M) = 0 for M = diag(ms, mu), K = [[k, −k], [−k, k + kt]].
    let a = p.ms * p.mu;
    let b = -(k * p.mu + (k + p.kt) * p.ms);
    let c = k * p.kt;
    let disc = (b * b - 4.0 * a * c).max(0.0).sqrt();
    // Stable pairing of the two roots avoids cancellation in the small one.
    let q = -0.5 * (b - disc);
    let hi = q / a;
    let lo = c / q;
    let to_hz = |w2: f64| w2.sqrt() / (2.0 * std::f64::consts::PI);
    Ok([to_hz(lo), to_hz(hi)])
}
