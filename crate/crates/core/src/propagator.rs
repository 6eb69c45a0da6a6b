//! The kernel `K(x, x₀; t)` as an integral over the initial-velocity label of
//! the packet family started at `x₀`:
//!
//! ```text
//! K = (m/2πħ) ∫ dv₀ √(a₀/a) exp[ i(m/2ħ)(ȧ/a − νc)d² − d²/4a² + i m q̇ d/ħ + i Σ ]
//! ```
//!
//! with `d = x − q(t; x₀, v₀)` and `Σ = (1/ħ)∫₀ᵗ(½mq̇² + κq̇ − V − ħ²/4ma²)dt′`
//! (the `m v₀ x₀/ħ` part of the action cancels against the conjugate
//! completeness factor). The integral is done with composite Simpson over
//! uniform nodes; bounds come from a sensitivity pre-pass so that the real
//! envelope `exp(−d²/4a²)` is below `1e−14` at both ends.
//!
//! For potentials that are at most quadratic the endpoints `q`, `q̇` are affine
//! and `Σ` is quadratic in `(x₀, v₀)` while `a` does not depend on them, so all
//! endpoints are rebuilt from six trajectory solves per time. Other potentials
//! integrate one trajectory per node.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::model::{ModelParams, Potential};
use crate::numerics;
use crate::trajectory::{self, TrajectoryError, TrajectoryState};
use crate::wavepacket::Grid;

/// Envelope level the automatic bounds aim for.
pub const ENVELOPE_TARGET: f64 = 1e-14;
/// Largest accepted ratio of the integrand at the bounds to its peak.
pub const TAIL_THRESHOLD: f64 = 1e-10;
pub const MIN_NODES: usize = 33;
pub const DEFAULT_NODES: usize = 513;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PropagatorError {
    #[error("kernel needs t > 0, got t = {t}; use the causality check for t -> 0")]
    NonPositiveTime { t: f64 },
    #[error(
        "integrand at the velocity bounds is {ratio:e} of its peak; widen [v_lo, v_hi] = [{v_lo}, {v_hi}]"
    )]
    Truncation { ratio: f64, v_lo: f64, v_hi: f64 },
    #[error("dq/dv0 vanishes at t = {t} (caustic); the velocity integral is singular")]
    Caustic { t: f64 },
    #[error("invalid quadrature: {reason}")]
    InvalidQuadrature { reason: &'static str },
    #[error("invalid `{field}` = {value}: {expected}")]
    Invalid {
        field: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("times must decrease strictly towards 0")]
    TimesNotDecreasing,
    #[error("the free limit needs nu = 0")]
    NotFree,
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
}

/// Uniform Simpson rule over `[v_lo, v_hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub v_lo: f64,
    pub v_hi: f64,
    pub n_nodes: usize,
}

impl QuadratureSpec {
    pub fn new(v_lo: f64, v_hi: f64, n_nodes: usize) -> Result<Self, PropagatorError> {
        if !(v_lo.is_finite() && v_hi.is_finite() && v_lo < v_hi) {
            return Err(PropagatorError::InvalidQuadrature {
                reason: "need finite bounds with v_lo < v_hi",
            });
        }
        check_nodes(n_nodes)?;
        Ok(QuadratureSpec { v_lo, v_hi, n_nodes })
    }

    pub fn step(&self) -> f64 {
        (self.v_hi - self.v_lo) / (self.n_nodes - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.n_nodes {
            self.v_hi
        } else {
            self.v_lo + i as f64 * self.step()
        }
    }
}

fn check_nodes(n: usize) -> Result<(), PropagatorError> {
    if n < MIN_NODES || n.is_multiple_of(2) {
        return Err(PropagatorError::InvalidQuadrature {
            reason: "n_nodes must be odd and at least 33",
        });
    }
    Ok(())
}

/// Settings shared by all kernel evaluations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelOptions {
    pub n_nodes: usize,
    /// Explicit velocity bounds; `None` runs the sensitivity pre-pass.
    pub bounds: Option<(f64, f64)>,
    /// Widening factor applied to the automatic half-width.
    pub margin: f64,
    /// Initial width of the probe packets; `None` uses `√(ħt/2m)`.
    pub a0: Option<f64>,
    pub b0: f64,
    /// Trajectory step.
    pub dt: f64,
    /// Rebuild endpoints from six solves when the potential is quadratic.
    pub exploit_quadratic: bool,
}

impl Default for KernelOptions {
    fn default() -> Self {
        KernelOptions {
            n_nodes: DEFAULT_NODES,
            bounds: None,
            margin: 1.25,
            a0: None,
            b0: 0.0,
            dt: 1e-3,
            exploit_quadratic: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSample {
    pub x: f64,
    pub x0: f64,
    pub t: f64,
    pub k: Complex64,
    /// Largest integrand magnitude at the two bounds.
    pub envelope_tail: f64,
    /// Largest integrand magnitude over the nodes.
    pub peak: f64,
    pub quad: QuadratureSpec,
}

#[derive(Debug, Clone, Copy)]
struct Endpoint {
    q: f64,
    qdot: f64,
    a: f64,
    adot: f64,
    action: f64,
}

#[derive(Debug, Clone, Copy)]
struct QuadraticFit {
    q: [f64; 3],
    qdot: [f64; 3],
    // Σ = s[0] + s[1]x₀ + s[2]v₀ + s[3]x₀² + s[4]x₀v₀ + s[5]v₀²
    s: [f64; 6],
    a: f64,
    adot: f64,
}

impl QuadraticFit {
    fn eval(&self, x0: f64, v0: f64) -> Endpoint {
        let s = &self.s;
        Endpoint {
            q: self.q[0] + self.q[1] * x0 + self.q[2] * v0,
            qdot: self.qdot[0] + self.qdot[1] * x0 + self.qdot[2] * v0,
            a: self.a,
            adot: self.adot,
            action: s[0] + s[1] * x0 + s[2] * v0 + s[3] * x0 * x0 + s[4] * x0 * v0 + s[5] * v0 * v0,
        }
    }
}

/// Kernel evaluator at one fixed time.
pub struct KernelPlan<'a, P: Potential + ?Sized> {
    t: f64,
    params: ModelParams,
    potential: &'a P,
    options: KernelOptions,
    a0: f64,
    fit: Option<QuadraticFit>,
}

impl<'a, P: Potential + ?Sized> KernelPlan<'a, P> {
    pub fn new(
        t: f64,
        params: &ModelParams,
        potential: &'a P,
        options: &KernelOptions,
    ) -> Result<Self, PropagatorError> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(PropagatorError::NonPositiveTime { t });
        }
        check_nodes(options.n_nodes)?;
        if !(options.dt > 0.0 && options.dt.is_finite()) {
            return Err(PropagatorError::Invalid {
                field: "dt",
                value: options.dt,
                expected: "a finite step > 0",
            });
        }
        let a0 = options
            .a0
            .unwrap_or_else(|| (params.hbar() * t / (2.0 * params.m())).sqrt());
        if !(a0 > 0.0 && a0.is_finite()) {
            return Err(PropagatorError::Invalid {
                field: "a0",
                value: a0,
                expected: "a finite width > 0",
            });
        }
        let mut plan = KernelPlan {
            t,
            params: *params,
            potential,
            options: *options,
            a0,
            fit: None,
        };
        if options.exploit_quadratic && potential.is_quadratic() {
            plan.fit = Some(plan.fit_quadratic()?);
        }
        Ok(plan)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn probe_width(&self) -> f64 {
        self.a0
    }

    fn solve(&self, x0: f64, v0: f64) -> Result<Endpoint, PropagatorError> {
        let start = TrajectoryState {
            t: 0.0,
            q: x0,
            qdot: v0,
            a: self.a0,
            adot: self.options.b0,
            s0: 0.0,
        };
        let end = trajectory::advance(&start, self.t, self.options.dt, &self.params, self.potential)?;
        Ok(Endpoint {
            q: end.q,
            qdot: end.qdot,
            a: end.a,
            adot: end.adot,
            action: end.s0,
        })
    }

    fn fit_quadratic(&self) -> Result<QuadraticFit, PropagatorError> {
        let e00 = self.solve(0.0, 0.0)?;
        let e10 = self.solve(1.0, 0.0)?;
        let em0 = self.solve(-1.0, 0.0)?;
        let e01 = self.solve(0.0, 1.0)?;
        let e0m = self.solve(0.0, -1.0)?;
        let e11 = self.solve(1.0, 1.0)?;
        let s0 = e00.action;
        let sxx = 0.5 * (e10.action + em0.action) - s0;
        let svv = 0.5 * (e01.action + e0m.action) - s0;
        let sx = 0.5 * (e10.action - em0.action);
        let sv = 0.5 * (e01.action - e0m.action);
        let sxv = e11.action - s0 - sx - sv - sxx - svv;
        Ok(QuadraticFit {
            q: [e00.q, 0.5 * (e10.q - em0.q), 0.5 * (e01.q - e0m.q)],
            qdot: [e00.qdot, 0.5 * (e10.qdot - em0.qdot), 0.5 * (e01.qdot - e0m.qdot)],
            s: [s0, sx, sv, sxx, sxv, svv],
            a: e00.a,
            adot: e00.adot,
        })
    }

    fn endpoint(&self, x0: f64, v0: f64) -> Result<Endpoint, PropagatorError> {
        match &self.fit {
            Some(fit) => Ok(fit.eval(x0, v0)),
            None => self.solve(x0, v0),
        }
    }

    fn integrand(&self, x: f64, e: &Endpoint) -> Complex64 {
        let (m, hbar) = (self.params.m(), self.params.hbar());
        let d = x - e.q;
        let re = -d * d / (4.0 * e.a * e.a);
        let im = 0.5 * m / hbar * (e.adot / e.a - self.params.nu_c()) * d * d
            + m * e.qdot * d / hbar
            + e.action;
        Complex64::from_polar((self.a0 / e.a).sqrt() * re.exp(), im)
    }

    /// Velocity bounds from `dq/dv₀` so that the envelope drops below
    /// [`ENVELOPE_TARGET`] at both ends.
    pub fn auto_bounds(&self, x: f64, x0: f64) -> Result<(f64, f64), PropagatorError> {
        let base = self.endpoint(x0, 0.0)?;
        let unit = self.endpoint(x0, 1.0)?;
        let slope = unit.q - base.q;
        let scale = self.t.max(1e-300);
        if !(slope.abs() > 1e-10 * scale) {
            return Err(PropagatorError::Caustic { t: self.t });
        }
        let v_star = (x - base.q) / slope;
        let a = if self.fit.is_some() {
            base.a
        } else {
            self.endpoint(x0, v_star)?.a
        };
        let half = self.options.margin * 2.0 * a * (1.0 / ENVELOPE_TARGET).ln().sqrt() / slope.abs();
        Ok((v_star - half, v_star + half))
    }

    pub fn quadrature(&self, x: f64, x0: f64) -> Result<QuadratureSpec, PropagatorError> {
        let (lo, hi) = match self.options.bounds {
            Some(b) => b,
            None => self.auto_bounds(x, x0)?,
        };
        QuadratureSpec::new(lo, hi, self.options.n_nodes)
    }

    /// `K(x, x₀; t)` with the rule of [`Self::quadrature`].
    pub fn kernel(&self, x: f64, x0: f64) -> Result<KernelSample, PropagatorError> {
        let quad = self.quadrature(x, x0)?;
        self.kernel_with(x, x0, &quad)
    }

    pub fn kernel_with(
        &self,
        x: f64,
        x0: f64,
        quad: &QuadratureSpec,
    ) -> Result<KernelSample, PropagatorError> {
        let mut values = Vec::with_capacity(quad.n_nodes);
        let mut peak = 0.0_f64;
        for i in 0..quad.n_nodes {
            let e = self.endpoint(x0, quad.node(i))?;
            let f = self.integrand(x, &e);
            peak = peak.max(f.norm());
            values.push(f);
        }
        let tail = values[0].norm().max(values[quad.n_nodes - 1].norm());
        if !(tail <= TAIL_THRESHOLD * peak) {
            return Err(PropagatorError::Truncation {
                ratio: tail / peak,
                v_lo: quad.v_lo,
                v_hi: quad.v_hi,
            });
        }
        let prefactor = self.params.m() / (2.0 * core::f64::consts::PI * self.params.hbar());
        Ok(KernelSample {
            x,
            x0,
            t: self.t,
            k: numerics::simpson_complex(&values, quad.step()) * prefactor,
            envelope_tail: tail,
            peak,
            quad: *quad,
        })
    }

    /// Relative change of `K` between `n_nodes` and `2·n_nodes − 1` nodes on
    /// the same bounds.
    pub fn self_convergence(&self, x: f64, x0: f64) -> Result<f64, PropagatorError> {
        let coarse = self.kernel(x, x0)?;
        let fine_quad = QuadratureSpec::new(coarse.quad.v_lo, coarse.quad.v_hi, 2 * coarse.quad.n_nodes - 1)?;
        let fine = self.kernel_with(x, x0, &fine_quad)?;
        Ok((coarse.k - fine.k).norm() / fine.k.norm())
    }

    /// `∫K(x, x₀)ψ₀(x₀)dx₀` by the trapezoidal rule at one point `x`.
    pub fn propagate_point(
        &self,
        psi0: &[Complex64],
        x0_grid: &Grid,
        x: f64,
    ) -> Result<Complex64, PropagatorError> {
        let n = x0_grid.len();
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, p) in psi0.iter().enumerate() {
            if *p == Complex64::new(0.0, 0.0) {
                continue;
            }
            let w = if j == 0 || j + 1 == n { 0.5 } else { 1.0 };
            acc += self.kernel(x, x0_grid.x(j))?.k * p * w;
        }
        Ok(acc * x0_grid.dx())
    }
}

/// Single kernel evaluation.
pub fn kernel<P: Potential + ?Sized>(
    x: f64,
    x0: f64,
    t: f64,
    params: &ModelParams,
    potential: &P,
    options: &KernelOptions,
) -> Result<KernelSample, PropagatorError> {
    KernelPlan::new(t, params, potential, options)?.kernel(x, x0)
}

/// `ψ(x, t) = ∫K(x, x₀; t)ψ₀(x₀)dx₀` over `x_grid`.
pub fn propagate<P: Potential + ?Sized>(
    psi0: &[Complex64],
    x0_grid: &Grid,
    x_grid: &Grid,
    t: f64,
    params: &ModelParams,
    potential: &P,
    options: &KernelOptions,
) -> Result<Vec<Complex64>, PropagatorError> {
    if psi0.len() != x0_grid.len() {
        return Err(PropagatorError::Invalid {
            field: "psi0",
            value: psi0.len() as f64,
            expected: "one sample per x0 grid point",
        });
    }
    let plan = KernelPlan::new(t, params, potential, options)?;
    (0..x_grid.len())
        .map(|i| plan.propagate_point(psi0, x0_grid, x_grid.x(i)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CausalityReport {
    pub x: f64,
    /// `(t, |∫K f dx₀ − f(x)|)` in the order the times were given.
    pub deviations: Vec<(f64, f64)>,
    pub monotone: bool,
}

/// Checks `∫K(x, x₀; t)f(x₀)dx₀ → f(x)` along a strictly decreasing sequence
/// of times.
pub fn causality_check<P, F>(
    f: F,
    x: f64,
    x0_grid: &Grid,
    times: &[f64],
    params: &ModelParams,
    potential: &P,
    options: &KernelOptions,
) -> Result<CausalityReport, PropagatorError>
where
    P: Potential + ?Sized,
    F: Fn(f64) -> Complex64,
{
    if times.is_empty() || times.windows(2).any(|w| !(w[1] < w[0])) || times[times.len() - 1] <= 0.0 {
        return Err(PropagatorError::TimesNotDecreasing);
    }
    let samples: Vec<Complex64> = x0_grid.points().into_iter().map(&f).collect();
    let target = f(x);
    let mut deviations = Vec::with_capacity(times.len());
    for &t in times {
        let plan = KernelPlan::new(t, params, potential, options)?;
        let value = plan.propagate_point(&samples, x0_grid, x)?;
        deviations.push((t, (value - target).norm()));
    }
    let monotone = deviations.windows(2).all(|w| w[1].1 < w[0].1);
    Ok(CausalityReport {
        x,
        deviations,
        monotone,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeLimitReport {
    pub t: f64,
    /// Largest `|K − K_free| / |K_free|` over the pairs.
    pub max_rel_dev: f64,
    /// Largest `| |K| − √(m/2πħt) | / √(m/2πħt)`.
    pub max_modulus_dev: f64,
    pub passed: bool,
}

/// Free Feynman kernel `√(m/2πiħt) exp(im(x − x₀)²/2ħt)` on the branch with
/// phase `−π/4`.
pub fn free_kernel(x: f64, x0: f64, t: f64, m: f64, hbar: f64) -> Complex64 {
    let modulus = (m / (2.0 * core::f64::consts::PI * hbar * t)).sqrt();
    let d = x - x0;
    Complex64::from_polar(modulus, m * d * d / (2.0 * hbar * t) - core::f64::consts::FRAC_PI_4)
}

/// Compares [`kernel`] with the free Feynman kernel over `pairs`; passes when
/// every relative deviation is at most `1e−6`.
pub fn free_limit_check(
    params: &ModelParams,
    t: f64,
    pairs: &[(f64, f64)],
    options: &KernelOptions,
) -> Result<FreeLimitReport, PropagatorError> {
    if params.nu() != 0.0 {
        return Err(PropagatorError::NotFree);
    }
    let plan = KernelPlan::new(t, params, &crate::model::Free, options)?;
    let mut max_rel_dev = 0.0_f64;
    let mut max_modulus_dev = 0.0_f64;
    for &(x, x0) in pairs {
        let k = plan.kernel(x, x0)?.k;
        let exact = free_kernel(x, x0, t, params.m(), params.hbar());
        max_rel_dev = max_rel_dev.max((k - exact).norm() / exact.norm());
        max_modulus_dev = max_modulus_dev.max((k.norm() - exact.norm()).abs() / exact.norm());
    }
    Ok(FreeLimitReport {
        t,
        max_rel_dev,
        max_modulus_dev,
        passed: max_rel_dev <= 1e-6,
    })
}
