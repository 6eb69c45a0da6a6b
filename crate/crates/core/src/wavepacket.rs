//! The closed-form Gaussian packet on a uniform grid and its Bohmian fields.
//!
//! With `d = x − q` the packet is `ψ = √ρ · e^{iS}` where
//!
//! ```text
//! ρ(x)    = (2π a²)^(−1/2) exp(−d²/(2a²))
//! S(x)    = S₀ + (m q̇/ħ) d + (m/2ħ)(ȧ/a − νc) d²
//! v_qu    = (ȧ/a − νc) d + q̇
//! ϑ_qnc   = (ȧ/a) d + q̇
//! V_qu    = ħ²/(4 m a²) − ħ² d²/(8 m a⁴)
//! ```

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::model::ModelParams;
use crate::trajectory::TrajectoryState;

/// Half-width of the default grid, in packet widths.
pub const AUTO_WIDTHS: f64 = 8.0;
/// Point count of the default grid.
pub const AUTO_POINTS: usize = 1024;
pub const MIN_POINTS: usize = 16;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PacketError {
    #[error("invalid grid: {reason}")]
    InvalidGrid { reason: &'static str },
    #[error("packet width must be > 0, got a = {a}")]
    NonPositiveWidth { a: f64 },
}

/// Uniform grid `x_i = x_min + i·dx`, `i = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    x_min: f64,
    x_max: f64,
    n: usize,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self, PacketError> {
        if !(x_min.is_finite() && x_max.is_finite()) {
            return Err(PacketError::InvalidGrid {
                reason: "bounds must be finite",
            });
        }
        if !(x_min < x_max) {
            return Err(PacketError::InvalidGrid {
                reason: "x_min must be below x_max",
            });
        }
        if n < MIN_POINTS {
            return Err(PacketError::InvalidGrid {
                reason: "at least 16 points are required",
            });
        }
        Ok(Grid { x_min, x_max, n })
    }

    /// Grid with spacing as close as possible to `dx`; `x_max` is kept exact.
    pub fn with_spacing(x_min: f64, x_max: f64, dx: f64) -> Result<Self, PacketError> {
        if !(dx.is_finite() && dx > 0.0) {
            return Err(PacketError::InvalidGrid {
                reason: "spacing must be > 0",
            });
        }
        let cells = ((x_max - x_min) / dx).round();
        if !(cells.is_finite() && cells >= 1.0) {
            return Err(PacketError::InvalidGrid {
                reason: "spacing does not fit the interval",
            });
        }
        Grid::new(x_min, x_max, cells as usize + 1)
    }

    /// `[q − 8a, q + 8a]` with 1024 points.
    pub fn auto(q: f64, a: f64) -> Result<Self, PacketError> {
        if !(a > 0.0) {
            return Err(PacketError::NonPositiveWidth { a });
        }
        Grid::new(q - AUTO_WIDTHS * a, q + AUTO_WIDTHS * a, AUTO_POINTS)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.x_max
        } else {
            self.x_min + i as f64 * self.dx()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Packet widths between `q` and the nearer grid edge.
    pub fn widths_covered(&self, q: f64, a: f64) -> f64 {
        ((q - self.x_min).min(self.x_max - q) / a).max(0.0)
    }
}

/// The grid does not extend the required number of widths on both sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageWarning {
    pub q: f64,
    pub a: f64,
    pub covered: f64,
    pub required: f64,
}

pub fn coverage(grid: &Grid, q: f64, a: f64, required: f64) -> Option<CoverageWarning> {
    let covered = grid.widths_covered(q, a);
    (covered < required * (1.0 - 1e-12)).then_some(CoverageWarning {
        q,
        a,
        covered,
        required,
    })
}

/// A sampled array together with the coverage diagnosis of its grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Sampled {
    pub values: Vec<f64>,
    pub warning: Option<CoverageWarning>,
}

fn check_width(state: &TrajectoryState) -> Result<(), PacketError> {
    if state.a > 0.0 {
        Ok(())
    } else {
        Err(PacketError::NonPositiveWidth { a: state.a })
    }
}

/// Gaussian density; warns when the grid covers less than 4 widths around `q`.
pub fn density(state: &TrajectoryState, grid: &Grid) -> Result<Sampled, PacketError> {
    check_width(state)?;
    let a2 = state.a * state.a;
    let norm = 1.0 / (2.0 * core::f64::consts::PI * a2).sqrt();
    let values = (0..grid.len())
        .map(|i| {
            let d = grid.x(i) - state.q;
            norm * (-d * d / (2.0 * a2)).exp()
        })
        .collect();
    Ok(Sampled {
        values,
        warning: coverage(grid, state.q, state.a, 4.0),
    })
}

/// Phase `S(x)` (dimensionless) from the closed form.
pub fn phase(
    state: &TrajectoryState,
    grid: &Grid,
    params: &ModelParams,
) -> Result<Vec<f64>, PacketError> {
    check_width(state)?;
    let (lin, quad) = phase_coefficients(state, params);
    Ok((0..grid.len())
        .map(|i| {
            let d = grid.x(i) - state.q;
            state.s0 + lin * d + quad * d * d
        })
        .collect())
}

/// Linear and quadratic coefficients of `S` in `x − q`.
pub fn phase_coefficients(state: &TrajectoryState, params: &ModelParams) -> (f64, f64) {
    let m_hbar = params.m() / params.hbar();
    (
        m_hbar * state.qdot,
        0.5 * m_hbar * (state.adot / state.a - params.nu_c()),
    )
}

/// Bohm quantum potential (energy units).
pub fn quantum_potential(
    state: &TrajectoryState,
    grid: &Grid,
    params: &ModelParams,
) -> Result<Vec<f64>, PacketError> {
    check_width(state)?;
    Ok((0..grid.len())
        .map(|i| quantum_potential_at(state, params, grid.x(i) - state.q))
        .collect())
}

#[inline]
pub fn quantum_potential_at(state: &TrajectoryState, params: &ModelParams, d: f64) -> f64 {
    let h2m = params.hbar() * params.hbar() / params.m();
    let a2 = state.a * state.a;
    h2m / (4.0 * a2) - h2m * d * d / (8.0 * a2 * a2)
}

#[inline]
pub fn quantum_velocity_at(state: &TrajectoryState, params: &ModelParams, d: f64) -> f64 {
    (state.adot / state.a - params.nu_c()) * d + state.qdot
}

#[inline]
pub fn nonconservative_velocity_at(state: &TrajectoryState, d: f64) -> f64 {
    state.adot / state.a * d + state.qdot
}

/// Packet and every derived field at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketSnapshot {
    pub grid: Grid,
    pub state: TrajectoryState,
    pub psi: Vec<Complex64>,
    pub rho: Vec<f64>,
    pub phase: Vec<f64>,
    pub v_qu: Vec<f64>,
    pub theta_qnc: Vec<f64>,
    pub quantum_potential: Vec<f64>,
    /// Set when the grid covers less than 8 widths around `q`.
    pub warning: Option<CoverageWarning>,
}

impl PacketSnapshot {
    pub fn t(&self) -> f64 {
        self.state.t
    }
}

pub fn assemble(
    state: &TrajectoryState,
    grid: &Grid,
    params: &ModelParams,
) -> Result<PacketSnapshot, PacketError> {
    let rho = density(state, grid)?.values;
    let phase = phase(state, grid, params)?;
    let psi = rho
        .iter()
        .zip(&phase)
        .map(|(r, s)| Complex64::from_polar(r.sqrt(), *s))
        .collect();
    let mut v_qu = Vec::with_capacity(grid.len());
    let mut theta_qnc = Vec::with_capacity(grid.len());
    let mut vq = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let d = grid.x(i) - state.q;
        v_qu.push(quantum_velocity_at(state, params, d));
        theta_qnc.push(nonconservative_velocity_at(state, d));
        vq.push(quantum_potential_at(state, params, d));
    }
    Ok(PacketSnapshot {
        grid: *grid,
        state: *state,
        psi,
        rho,
        phase,
        v_qu,
        theta_qnc,
        quantum_potential: vq,
        warning: coverage(grid, state.q, state.a, AUTO_WIDTHS),
    })
}
