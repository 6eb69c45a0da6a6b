//! Direct Crank–Nicolson solver for the nonlinear equation with self-consistent
//! `q = ⟨x⟩` and `⟨p̂⟩`.
//!
//! Using `(x − q)p̂ = ½[(x − q)p̂ + p̂(x − q)] + iħ/2`, the friction term becomes
//! `νc·sym[(x − q), p̂] + ν(1 − c)(x − q)⟨p̂⟩`, a Hermitian operator. With
//! central differences for `p̂` the whole Hamiltonian is a Hermitian
//! tridiagonal matrix, so one Cayley step
//!
//! ```text
//! (I + iΔt H/2ħ) ψⁿ⁺¹ = (I − iΔt H/2ħ) ψⁿ
//! ```
//!
//! is unitary. `q` and `⟨p̂⟩` are frozen at predictor–corrector midpoint values
//! within a step.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::model::{ModelParams, Potential};
use crate::numerics;
use crate::wavepacket::Grid;

/// Boundary magnitude, relative to the peak, above which a run is aborted.
pub const LEAK_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReferenceError {
    #[error("invalid `{field}` = {value}: {expected}")]
    Invalid {
        field: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("wave function length {got} does not match the grid ({expected} points)")]
    LengthMismatch { got: usize, expected: usize },
    #[error("initial state is not normalized (norm = {norm})")]
    NotNormalized { norm: f64 },
    #[error("domain too small: boundary amplitude reached {ratio:e} of the peak at t = {t}")]
    DomainTooSmall { t: f64, ratio: f64 },
    #[error("tridiagonal solve broke down at row {row} (t = {t})")]
    SolveBreakdown { t: f64, row: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSpec {
    pub grid: Grid,
    pub dt: f64,
    pub t_end: f64,
    /// Record a mean sample every this many steps (the final step is always
    /// recorded).
    pub record_every: usize,
    /// Times at which the full wave function is kept.
    pub snapshot_times: Vec<f64>,
    pub leak_threshold: f64,
}

impl SolverSpec {
    pub fn new(grid: Grid, dt: f64, t_end: f64) -> Result<Self, ReferenceError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(ReferenceError::Invalid {
                field: "dt",
                value: dt,
                expected: "a finite step > 0",
            });
        }
        if !(t_end.is_finite() && t_end >= 0.0) {
            return Err(ReferenceError::Invalid {
                field: "t_end",
                value: t_end,
                expected: "a finite time >= 0",
            });
        }
        Ok(SolverSpec {
            grid,
            dt,
            t_end,
            record_every: 1,
            snapshot_times: Vec::new(),
            leak_threshold: LEAK_THRESHOLD,
        })
    }

    pub fn record_every(mut self, every: usize) -> Self {
        self.record_every = every.max(1);
        self
    }

    pub fn snapshots_at(mut self, times: &[f64]) -> Self {
        self.snapshot_times = times.to_vec();
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSample {
    pub t: f64,
    pub norm: f64,
    pub mean_x: f64,
    pub mean_p: f64,
    pub var_x: f64,
}

/// Norm, `⟨x⟩`, `⟨p̂⟩` and variance of a sampled wave function (trapezoidal
/// weights, central differences for `p̂` with zero outside the grid).
pub fn measure(psi: &[Complex64], grid: &Grid, hbar: f64, t: f64) -> MeanSample {
    let dx = grid.dx();
    let n = psi.len();
    let centre = 0.5 * (grid.x_min() + grid.x_max());
    let zero = Complex64::new(0.0, 0.0);
    let (mut s0, mut s1, mut s2, mut current) = (0.0, 0.0, 0.0, 0.0);
    for j in 0..n {
        let w = if j == 0 || j + 1 == n { 0.5 } else { 1.0 };
        let rho = w * psi[j].norm_sqr();
        let y = grid.x(j) - centre;
        s0 += rho;
        s1 += rho * y;
        s2 += rho * y * y;
        let up = if j + 1 < n { psi[j + 1] } else { zero };
        let down = if j > 0 { psi[j - 1] } else { zero };
        current += (psi[j].conj() * (up - down)).im;
    }
    let mean_y = s1 / s0;
    MeanSample {
        t,
        norm: s0 * dx,
        mean_x: centre + mean_y,
        mean_p: 0.5 * hbar * current / (s0 * dx),
        var_x: s2 / s0 - mean_y * mean_y,
    }
}

/// Stepper owning the grid-sized work arrays.
#[derive(Debug, Clone)]
pub struct CrankNicolson<'a, P: Potential + ?Sized> {
    grid: Grid,
    dt: f64,
    params: ModelParams,
    potential: &'a P,
    leak_threshold: f64,
    x: Vec<f64>,
    v: Vec<f64>,
    v_time: f64,
    lower: Vec<Complex64>,
    diag: Vec<Complex64>,
    upper: Vec<Complex64>,
    rhs: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl<'a, P: Potential + ?Sized> CrankNicolson<'a, P> {
    pub fn new(spec: &SolverSpec, params: &ModelParams, potential: &'a P) -> Self {
        let n = spec.grid.len();
        let zero = Complex64::new(0.0, 0.0);
        CrankNicolson {
            grid: spec.grid,
            dt: spec.dt,
            params: *params,
            potential,
            leak_threshold: spec.leak_threshold,
            x: spec.grid.points(),
            v: vec![0.0; n],
            v_time: f64::NAN,
            lower: vec![zero; n],
            diag: vec![zero; n],
            upper: vec![zero; n],
            rhs: vec![zero; n],
            scratch: vec![zero; n],
        }
    }

    fn refresh_potential(&mut self, t: f64) {
        if self.v_time != t {
            for (v, &x) in self.v.iter_mut().zip(&self.x) {
                *v = self.potential.value(x, t);
            }
            self.v_time = t;
        }
    }

    /// One Cayley step of `psi` from `t` to `t + dt` with `q`, `⟨p̂⟩` frozen.
    ///
    /// Fills `out` with `(I − iΔt H/2ħ)ψ`, the bands with `I + iΔt H/2ħ`, and
    /// solves in place.
    fn cayley(
        &mut self,
        psi: &[Complex64],
        out: &mut [Complex64],
        t: f64,
        q: f64,
        mean_p: f64,
    ) -> Result<(), ReferenceError> {
        self.refresh_potential(t + 0.5 * self.dt);
        let (m, hbar) = (self.params.m(), self.params.hbar());
        let nu = self.params.nu();
        let c = self.params.c();
        let dx = self.grid.dx();
        let kinetic = hbar * hbar / (2.0 * m * dx * dx);
        let alpha = 0.5 * self.dt / hbar;
        // sym[(x − q), p̂] couples j and j + 1 with −iħ(X_j + X_{j+1})/4dx.
        let k = -hbar * nu * c / (4.0 * dx);
        let n = psi.len();
        let one = Complex64::new(1.0, 0.0);
        let i_alpha = Complex64::new(0.0, alpha);
        let mut prev_up = Complex64::new(0.0, 0.0);
        for j in 0..n {
            let xq = self.x[j] - q;
            let d = 2.0 * kinetic + self.v[j] + nu * (1.0 - c) * xq * mean_p;
            let mut h = psi[j] * d;
            if j > 0 {
                h += prev_up.conj() * psi[j - 1];
            }
            if j + 1 < n {
                let up = Complex64::new(-kinetic, k * (xq + self.x[j + 1] - q));
                h += up * psi[j + 1];
                self.upper[j] = i_alpha * up;
                self.lower[j + 1] = i_alpha * up.conj();
                prev_up = up;
            }
            out[j] = psi[j] - i_alpha * h;
            self.diag[j] = one + i_alpha * d;
        }
        numerics::solve_tridiagonal(&self.lower, &self.diag, &self.upper, out, &mut self.scratch)
            .map_err(|row| ReferenceError::SolveBreakdown { t, row })
    }

    /// Advances `psi` in place from `t` to `t + dt`; returns the new means.
    pub fn step(&mut self, psi: &mut [Complex64], t: f64) -> Result<MeanSample, ReferenceError> {
        let n = self.grid.len();
        if psi.len() != n {
            return Err(ReferenceError::LengthMismatch {
                got: psi.len(),
                expected: n,
            });
        }
        let before = measure(psi, &self.grid, self.params.hbar(), t);
        self.advance(psi, &before)
    }

    /// As [`Self::step`] with the means of `psi` already known.
    fn advance(&mut self, psi: &mut [Complex64], before: &MeanSample) -> Result<MeanSample, ReferenceError> {
        let hbar = self.params.hbar();
        let t = before.t;
        let mut trial = core::mem::take(&mut self.rhs);
        self.cayley(psi, &mut trial, t, before.mean_x, before.mean_p)?;
        let predicted = measure(&trial, &self.grid, hbar, t + self.dt);
        let q = 0.5 * (before.mean_x + predicted.mean_x);
        let p = 0.5 * (before.mean_p + predicted.mean_p);
        self.cayley(psi, &mut trial, t, q, p)?;
        psi.copy_from_slice(&trial);
        self.rhs = trial;
        self.check_leak(psi, t + self.dt)?;
        Ok(measure(psi, &self.grid, hbar, t + self.dt))
    }

    fn check_leak(&self, psi: &[Complex64], t: f64) -> Result<(), ReferenceError> {
        let n = psi.len();
        let peak = psi.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let edge = [psi[0], psi[1], psi[n - 2], psi[n - 1]]
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        let ratio = edge / peak;
        if ratio > self.leak_threshold || !ratio.is_finite() {
            return Err(ReferenceError::DomainTooSmall { t, ratio });
        }
        Ok(())
    }
}

/// Result of a full run.
#[derive(Debug, Clone, PartialEq)]
pub struct Evolution {
    pub samples: Vec<MeanSample>,
    /// `(t, ψ)` pairs at the requested snapshot times (nearest step).
    pub snapshots: Vec<(f64, Vec<Complex64>)>,
    pub psi: Vec<Complex64>,
    pub t: f64,
}

impl Evolution {
    /// Largest `|norm(t) − norm(0)|` divided by the elapsed time.
    pub fn norm_drift_rate(&self) -> f64 {
        let first = self.samples[0];
        let span = self.t - first.t;
        let drift = self
            .samples
            .iter()
            .map(|s| (s.norm - first.norm).abs())
            .fold(0.0, f64::max);
        if span > 0.0 {
            drift / span
        } else {
            drift
        }
    }
}

/// Evolves a normalized `psi0` from `t = 0` to `spec.t_end`.
pub fn evolve<P: Potential + ?Sized>(
    psi0: &[Complex64],
    spec: &SolverSpec,
    params: &ModelParams,
    potential: &P,
) -> Result<Evolution, ReferenceError> {
    let n = spec.grid.len();
    if psi0.len() != n {
        return Err(ReferenceError::LengthMismatch {
            got: psi0.len(),
            expected: n,
        });
    }
    let first = measure(psi0, &spec.grid, params.hbar(), 0.0);
    if (first.norm - 1.0).abs() > 1e-6 {
        return Err(ReferenceError::NotNormalized { norm: first.norm });
    }
    let mut solver = CrankNicolson::new(spec, params, potential);
    solver.check_leak(psi0, 0.0)?;

    let steps = (spec.t_end / spec.dt).round() as usize;
    let snapshot_steps: Vec<usize> = spec
        .snapshot_times
        .iter()
        .map(|t| (t / spec.dt).round().max(0.0) as usize)
        .collect();
    let mut psi = psi0.to_vec();
    let mut samples = vec![first];
    let mut snapshots = Vec::new();
    for (i, &k) in snapshot_steps.iter().enumerate() {
        if k == 0 {
            snapshots.push((spec.snapshot_times[i].min(0.0), psi.clone()));
        }
    }
    let mut current = first;
    for k in 1..=steps {
        current.t = (k - 1) as f64 * spec.dt;
        let sample = solver.advance(&mut psi, &current)?;
        let sample = MeanSample {
            t: k as f64 * spec.dt,
            ..sample
        };
        current = sample;
        if k % spec.record_every == 0 || k == steps {
            samples.push(sample);
        }
        for &s in &snapshot_steps {
            if s == k {
                snapshots.push((sample.t, psi.clone()));
            }
        }
    }
    Ok(Evolution {
        samples,
        snapshots,
        psi,
        t: steps as f64 * spec.dt,
    })
}
