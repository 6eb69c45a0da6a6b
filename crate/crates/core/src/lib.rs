//! Gaussian wave packets, Bohmian fields and propagators for the linearized
//! SHAKN dissipative Schrödinger equation
//!
//! ```text
//! iħ ∂ψ/∂t = −(ħ²/2m) ∂²ψ/∂x² + [V(x,t) + ν([x − q][c p̂ + (1 − c)⟨p̂⟩] − iħc/2)] ψ,   q = ⟨x⟩
//! ```
//!
//! The crate is `no_std` (it needs `alloc`) and is split into:
//!
//! * [`model`]: physical parameters, model presets and the [`Potential`](model::Potential) contract.
//! * [`trajectory`]: RK4 integration of the centre/width/action ODE system.
//! * [`wavepacket`]: the closed-form packet on a grid and its Bohmian fields.
//! * [`verify`]: finite-difference residuals, moments and Bohmian trajectories.
//! * [`reference`]: a direct Crank–Nicolson solver for the nonlinear equation.
//! * [`propagator`]: the kernel built by quadrature over the initial-velocity label.
//!
//! IO, file formats and the command line live in the `shakn-lab` crate.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod error;
pub mod model;
pub mod numerics;
pub mod propagator;
pub mod reference;
pub mod trajectory;
pub mod verify;
pub mod wavepacket;

pub use error::Error;
pub use num_complex::Complex64;
