//! Centre, width and action of the linearized packet.
//!
//! The state `(q, q̇, a, ȧ, S₀)` obeys
//!
//! ```text
//! q̈ = −γ q̇ − V′(q, t)/m                              γ = ν or ν c, see DampingForm
//! ä = ħ²/(4 m² a³) − a (V″(q, t)/m − ν² c²)
//! ħ Ṡ₀ = ½ m q̇² + κ q̇ − V(q, t) − ħ²/(4 m a²)          κ = 0 or −ν m (1 − c)
//! ```
//!
//! integrated with fixed-step classical RK4, the action being the fifth
//! component so that it shares the accuracy budget of the trajectory.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::model::{ModelParams, Potential};
use crate::numerics;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrajectoryError {
    #[error("packet width collapsed (a = {a}) at t = {t}; reduce the time step")]
    WidthCollapse { t: f64, a: f64 },
    #[error("trajectory diverged (non-finite state) at t = {t}")]
    Divergence { t: f64 },
    #[error("invalid `{field}` = {value}: {expected}")]
    Invalid {
        field: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("t = {t} lies outside the recorded trajectory [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },
    #[error("stability advisory needs a potential that is at most quadratic")]
    NotQuadratic,
}

/// Initial data of the packet: centre, velocity, width and width rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialConditions {
    pub x0: f64,
    pub v0: f64,
    pub a0: f64,
    pub b0: f64,
}

impl InitialConditions {
    pub fn new(x0: f64, v0: f64, a0: f64, b0: f64) -> Result<Self, TrajectoryError> {
        for (field, value) in [("x0", x0), ("v0", v0), ("b0", b0)] {
            if !value.is_finite() {
                return Err(TrajectoryError::Invalid {
                    field,
                    value,
                    expected: "a finite value",
                });
            }
        }
        if !(a0.is_finite() && a0 > 0.0) {
            return Err(TrajectoryError::Invalid {
                field: "a0",
                value: a0,
                expected: "a finite width > 0",
            });
        }
        Ok(InitialConditions { x0, v0, a0, b0 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryState {
    pub t: f64,
    pub q: f64,
    pub qdot: f64,
    pub a: f64,
    pub adot: f64,
    /// Accumulated action phase (dimensionless, already divided by ħ).
    pub s0: f64,
}

impl TrajectoryState {
    /// State at `t = 0` with `S₀(0) = m v₀ x₀ / ħ`.
    pub fn initial(ic: &InitialConditions, params: &ModelParams) -> Self {
        TrajectoryState {
            t: 0.0,
            q: ic.x0,
            qdot: ic.v0,
            a: ic.a0,
            adot: ic.b0,
            s0: params.m() * ic.v0 * ic.x0 / params.hbar(),
        }
    }

    pub fn with_action(mut self, s0: f64) -> Self {
        self.s0 = s0;
        self
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite()
            && self.q.is_finite()
            && self.qdot.is_finite()
            && self.a.is_finite()
            && self.adot.is_finite()
            && self.s0.is_finite()
    }

    fn to_array(self) -> [f64; 5] {
        [self.q, self.qdot, self.a, self.adot, self.s0]
    }

    fn from_array(t: f64, y: [f64; 5]) -> Self {
        TrajectoryState {
            t,
            q: y[0],
            qdot: y[1],
            a: y[2],
            adot: y[3],
            s0: y[4],
        }
    }
}

/// Time derivatives of a [`TrajectoryState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub qdot: f64,
    pub qddot: f64,
    pub adot: f64,
    pub addot: f64,
    pub s0dot: f64,
}

pub fn rhs<P: Potential + ?Sized>(
    state: &TrajectoryState,
    params: &ModelParams,
    potential: &P,
) -> Result<Rates, TrajectoryError> {
    let TrajectoryState { t, q, qdot, a, adot, .. } = *state;
    if !(a > 0.0) {
        return Err(TrajectoryError::WidthCollapse { t, a });
    }
    let m = params.m();
    let hbar = params.hbar();
    let nu_c = params.nu_c();
    let qddot = -params.center_damping() * qdot - potential.d1(q, t) / m;
    let addot = hbar * hbar / (4.0 * m * m * a * a * a) - a * (potential.d2(q, t) / m - nu_c * nu_c);
    let s0dot = (0.5 * m * qdot * qdot + params.action_friction() * qdot
        - potential.value(q, t)
        - hbar * hbar / (4.0 * m * a * a))
        / hbar;
    Ok(Rates {
        qdot,
        qddot,
        adot,
        addot,
        s0dot,
    })
}

/// One RK4 step of size `h` (negative `h` integrates backwards).
pub fn step<P: Potential + ?Sized>(
    state: &TrajectoryState,
    h: f64,
    params: &ModelParams,
    potential: &P,
) -> Result<TrajectoryState, TrajectoryError> {
    let y = numerics::rk4_step(&state.to_array(), state.t, h, |t, y| {
        let r = rhs(&TrajectoryState::from_array(t, *y), params, potential)?;
        Ok([r.qdot, r.qddot, r.adot, r.addot, r.s0dot])
    })?;
    let next = TrajectoryState::from_array(state.t + h, y);
    if !next.is_finite() {
        return Err(TrajectoryError::Divergence { t: next.t });
    }
    if !(next.a > 0.0) {
        return Err(TrajectoryError::WidthCollapse { t: next.t, a: next.a });
    }
    Ok(next)
}

/// Advances `state` to `state.t + duration` with steps no longer than `dt`.
pub fn advance<P: Potential + ?Sized>(
    state: &TrajectoryState,
    duration: f64,
    dt: f64,
    params: &ModelParams,
    potential: &P,
) -> Result<TrajectoryState, TrajectoryError> {
    let n = (duration.abs() / dt).ceil().max(1.0) as usize;
    let h = duration / n as f64;
    let t0 = state.t;
    let mut s = *state;
    for k in 0..n {
        s = step(&s, h, params, potential)?;
        s.t = t0 + (k + 1) as f64 * h;
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorSpec {
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
}

impl IntegratorSpec {
    pub fn new(dt: f64, t_end: f64, record_every: usize) -> Result<Self, TrajectoryError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(TrajectoryError::Invalid {
                field: "dt",
                value: dt,
                expected: "a finite step > 0",
            });
        }
        if !(t_end.is_finite() && t_end >= 0.0) {
            return Err(TrajectoryError::Invalid {
                field: "t_end",
                value: t_end,
                expected: "a finite time >= 0",
            });
        }
        if record_every == 0 {
            return Err(TrajectoryError::Invalid {
                field: "record_every",
                value: 0.0,
                expected: "at least 1",
            });
        }
        Ok(IntegratorSpec {
            dt,
            t_end,
            record_every,
        })
    }
}

/// A recorded time series with the rates at every recorded state, which makes
/// fourth-order Hermite interpolation between records possible.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<TrajectoryState>,
    pub rates: Vec<Rates>,
}

impl Trajectory {
    pub fn first(&self) -> &TrajectoryState {
        &self.states[0]
    }

    pub fn last(&self) -> &TrajectoryState {
        &self.states[self.states.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// State at an arbitrary time inside the recorded range (cubic Hermite).
    pub fn sample(&self, t: f64) -> Result<TrajectoryState, TrajectoryError> {
        let start = self.first().t;
        let end = self.last().t;
        let slack = 1e-12 * (1.0 + end.abs());
        if !(t >= start - slack && t <= end + slack) {
            return Err(TrajectoryError::OutOfRange { t, start, end });
        }
        let idx = self.states.partition_point(|s| s.t <= t);
        let i = idx.clamp(1, self.states.len() - 1) - 1;
        if self.states.len() == 1 {
            return Ok(self.states[0]);
        }
        let (s0, s1) = (&self.states[i], &self.states[i + 1]);
        let (r0, r1) = (&self.rates[i], &self.rates[i + 1]);
        let h = s1.t - s0.t;
        let u = ((t - s0.t) / h).clamp(0.0, 1.0);
        let herm = |y0: f64, d0: f64, y1: f64, d1: f64| {
            let u2 = u * u;
            let u3 = u2 * u;
            (2.0 * u3 - 3.0 * u2 + 1.0) * y0
                + (u3 - 2.0 * u2 + u) * h * d0
                + (-2.0 * u3 + 3.0 * u2) * y1
                + (u3 - u2) * h * d1
        };
        Ok(TrajectoryState {
            t,
            q: herm(s0.q, r0.qdot, s1.q, r1.qdot),
            qdot: herm(s0.qdot, r0.qddot, s1.qdot, r1.qddot),
            a: herm(s0.a, r0.adot, s1.a, r1.adot),
            adot: herm(s0.adot, r0.addot, s1.adot, r1.addot),
            s0: herm(s0.s0, r0.s0dot, s1.s0, r1.s0dot),
        })
    }
}

/// Integrates from `initial` to `initial.t + spec.t_end`.
///
/// The last step is shortened if `t_end` is not a multiple of `dt`; the final
/// state is always recorded.
pub fn integrate<P: Potential + ?Sized>(
    initial: &TrajectoryState,
    spec: &IntegratorSpec,
    params: &ModelParams,
    potential: &P,
) -> Result<Trajectory, TrajectoryError> {
    if !initial.is_finite() {
        return Err(TrajectoryError::Divergence { t: initial.t });
    }
    let t0 = initial.t;
    let full = (spec.t_end / spec.dt * (1.0 + 1e-12)).floor() as usize;
    let remainder = spec.t_end - full as f64 * spec.dt;
    let has_tail = remainder > 1e-12 * spec.dt.max(spec.t_end);
    let total = full + usize::from(has_tail);

    let mut states = Vec::with_capacity(total / spec.record_every + 2);
    let mut rates = Vec::with_capacity(states.capacity());
    states.push(*initial);
    rates.push(rhs(initial, params, potential)?);

    let mut s = *initial;
    for k in 1..=total {
        let (h, t_next) = if k <= full {
            (spec.dt, t0 + k as f64 * spec.dt)
        } else {
            (remainder, t0 + spec.t_end)
        };
        s = step(&s, h, params, potential)?;
        s.t = t_next;
        if k % spec.record_every == 0 || k == total {
            rates.push(rhs(&s, params, potential)?);
            states.push(s);
        }
    }
    Ok(Trajectory { states, rates })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WidthRegime {
    /// Restoring width equation with equilibrium width `a*`.
    Bounded { equilibrium_width: f64 },
    /// Zero effective stiffness: the width grows at most linearly.
    Unbounded,
    /// Negative effective stiffness: the width grows exponentially.
    SuperBallistic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityAdvisory {
    /// `V″/m − ν² c²` (ω² − ν²c² for the oscillator).
    pub effective_stiffness: f64,
    pub regime: WidthRegime,
}

/// Classifies the width equation for an at-most-quadratic potential.
pub fn stability_guard<P: Potential + ?Sized>(
    params: &ModelParams,
    potential: &P,
) -> Result<StabilityAdvisory, TrajectoryError> {
    if !potential.is_quadratic() {
        return Err(TrajectoryError::NotQuadratic);
    }
    let m = params.m();
    let hbar = params.hbar();
    let omega2 = potential.d2(0.0, 0.0) / m;
    let nu_c = params.nu_c();
    let k = omega2 - nu_c * nu_c;
    let scale = omega2.abs() + nu_c * nu_c;
    let regime = if k.abs() <= 1e-14 * scale {
        WidthRegime::Unbounded
    } else if k > 0.0 {
        WidthRegime::Bounded {
            equilibrium_width: (hbar * hbar / (4.0 * m * m * k)).powf(0.25),
        }
    } else {
        WidthRegime::SuperBallistic
    };
    Ok(StabilityAdvisory {
        effective_stiffness: k,
        regime,
    })
}
