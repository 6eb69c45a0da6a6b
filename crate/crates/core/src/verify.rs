//! Finite-difference checks of the closed-form packet against the field
//! equations: the nonlinear wave equation, both continuity equations, the
//! moment identities and the quantum Newton law along Bohmian paths.
//!
//! Residuals are evaluated where `ρ > 1e−8 · max ρ` and reported both raw and
//! relative to a natural scale of the checked equation.

use alloc::string::String;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::model::{ModelParams, Potential};
use crate::numerics;
use crate::trajectory::{self, Trajectory, TrajectoryError, TrajectoryState};
use crate::wavepacket::{self, CoverageWarning, Grid, PacketError, PacketSnapshot};

/// Residuals are only evaluated where `ρ` exceeds this fraction of its peak.
pub const MASK_FRACTION: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VerifyError {
    #[error("snapshots are not on a common grid")]
    GridMismatch,
    #[error("snapshots are not equally spaced in time around the centre one")]
    TimeMismatch,
    #[error("finite-difference step must be > 0, got {0}")]
    InvalidStep(f64),
    #[error("no grid point passes the density mask")]
    EmptyMask,
    #[error("series too short for second differences ({0} samples)")]
    ShortSeries(usize),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error(transparent)]
    Packet(#[from] PacketError),
}

/// Where a residual was evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mask {
    pub rho_fraction: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub name: String,
    pub linf: f64,
    /// Root-mean-square over the masked points.
    pub l2: f64,
    pub rel_linf: f64,
    pub rel_l2: f64,
    /// The quantity the relative values are divided by.
    pub scale: f64,
    pub grid_dx: f64,
    pub dt_fd: f64,
    pub mask: Mask,
}

impl ResidualReport {
    fn from_values(
        name: &str,
        values: impl Iterator<Item = f64>,
        scale: f64,
        grid_dx: f64,
        dt_fd: f64,
        rho_fraction: f64,
    ) -> Result<Self, VerifyError> {
        let mut linf = 0.0_f64;
        let mut sum = 0.0;
        let mut points = 0usize;
        for v in values {
            linf = linf.max(v.abs());
            sum += v * v;
            points += 1;
        }
        if points == 0 {
            return Err(VerifyError::EmptyMask);
        }
        let l2 = (sum / points as f64).sqrt();
        Ok(ResidualReport {
            name: name.into(),
            linf,
            l2,
            rel_linf: linf / scale,
            rel_l2: l2 / scale,
            scale,
            grid_dx,
            dt_fd,
            mask: Mask {
                rho_fraction,
                points,
            },
        })
    }
}

/// Snapshots at `t − Δ`, `t`, `t + Δ` on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Triplet {
    pub prev: PacketSnapshot,
    pub mid: PacketSnapshot,
    pub next: PacketSnapshot,
}

impl Triplet {
    pub fn new(
        prev: PacketSnapshot,
        mid: PacketSnapshot,
        next: PacketSnapshot,
    ) -> Result<Self, VerifyError> {
        if prev.grid != mid.grid || next.grid != mid.grid {
            return Err(VerifyError::GridMismatch);
        }
        let d1 = mid.t() - prev.t();
        let d2 = next.t() - mid.t();
        if !(d1 > 0.0) || (d1 - d2).abs() > 1e-9 * d1.max(d2) {
            return Err(VerifyError::TimeMismatch);
        }
        Ok(Triplet { prev, mid, next })
    }

    pub fn delta(&self) -> f64 {
        0.5 * (self.next.t() - self.prev.t())
    }

    /// Builds the triplet around `state` by RK4 steps of `±delta`.
    pub fn around<P: Potential + ?Sized>(
        state: &TrajectoryState,
        delta: f64,
        grid: &Grid,
        params: &ModelParams,
        potential: &P,
    ) -> Result<Self, VerifyError> {
        let (prev, next) = neighbours(state, delta, params, potential)?;
        Triplet::from_states(&prev, state, &next, grid, params)
    }

    pub fn from_states(
        prev: &TrajectoryState,
        mid: &TrajectoryState,
        next: &TrajectoryState,
        grid: &Grid,
        params: &ModelParams,
    ) -> Result<Self, VerifyError> {
        Triplet::new(
            wavepacket::assemble(prev, grid, params)?,
            wavepacket::assemble(mid, grid, params)?,
            wavepacket::assemble(next, grid, params)?,
        )
    }

    fn mask(&self) -> impl Iterator<Item = usize> + '_ {
        let rho = &self.mid.rho;
        let peak = rho.iter().cloned().fold(0.0, f64::max);
        (1..rho.len() - 1).filter(move |&j| rho[j] > MASK_FRACTION * peak)
    }
}

/// Trajectory states at `t ± delta` obtained by single RK4 steps.
pub fn neighbours<P: Potential + ?Sized>(
    state: &TrajectoryState,
    delta: f64,
    params: &ModelParams,
    potential: &P,
) -> Result<(TrajectoryState, TrajectoryState), VerifyError> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(VerifyError::InvalidStep(delta));
    }
    let prev = trajectory::step(state, -delta, params, potential)?;
    let next = trajectory::step(state, delta, params, potential)?;
    Ok((prev, next))
}

/// Residual of the nonlinear wave equation at the centre snapshot.
///
/// `⟨p̂⟩` is taken as `m q̇` and `q` as the trajectory value; the relative
/// values are divided by `max |iħ ∂ψ/∂t|` over the mask.
pub fn pde_residual<P: Potential + ?Sized>(
    triplet: &Triplet,
    params: &ModelParams,
    potential: &P,
) -> Result<ResidualReport, VerifyError> {
    let grid = triplet.mid.grid;
    let dx = grid.dx();
    let delta = triplet.delta();
    let s = &triplet.mid.state;
    let (m, hbar, nu, c) = (params.m(), params.hbar(), params.nu(), params.c());
    let i = Complex64::i();
    let psi = &triplet.mid.psi;
    let mean_p = m * s.qdot;

    let mut lhs_max = 0.0_f64;
    let mut res = Vec::new();
    for j in triplet.mask() {
        let x = grid.x(j);
        let lhs = i * hbar * (triplet.next.psi[j] - triplet.prev.psi[j]) / (2.0 * delta);
        let d2 = numerics::central_d2_complex(psi, j, dx);
        let p_psi = -i * hbar * numerics::central_d1_complex(psi, j, dx);
        let friction =
            nu * ((x - s.q) * (c * p_psi + (1.0 - c) * mean_p * psi[j]) - i * hbar * c * 0.5 * psi[j]);
        let h_psi = -hbar * hbar / (2.0 * m) * d2 + potential.value(x, s.t) * psi[j] + friction;
        lhs_max = lhs_max.max(lhs.norm());
        res.push((lhs - h_psi).norm());
    }
    ResidualReport::from_values("pde", res.into_iter(), lhs_max, dx, delta, MASK_FRACTION)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityReport {
    /// `∂ρ/∂t + ∂(ρ ϑ_qnc)/∂x`.
    pub conservative: ResidualReport,
    /// `∂ρ/∂t + ∂(ρ v_qu)/∂x + νcρ + νc(x − q)∂ρ/∂x`.
    pub source: ResidualReport,
    /// Largest pointwise gap between `R_cons − R_src` and the discrete
    /// `∂(νcρ(x − q))/∂x − νcρ − νc(x − q)∂ρ/∂x`.
    pub identity_max: f64,
}

pub fn continuity_residuals(
    triplet: &Triplet,
    params: &ModelParams,
) -> Result<ContinuityReport, VerifyError> {
    let grid = triplet.mid.grid;
    let dx = grid.dx();
    let delta = triplet.delta();
    let mid = &triplet.mid;
    let q = mid.state.q;
    let nu_c = params.nu_c();
    let n = grid.len();

    let flux_cons: Vec<f64> = (0..n).map(|j| mid.rho[j] * mid.theta_qnc[j]).collect();
    let flux_src: Vec<f64> = (0..n).map(|j| mid.rho[j] * mid.v_qu[j]).collect();
    let drift: Vec<f64> = (0..n).map(|j| nu_c * mid.rho[j] * (grid.x(j) - q)).collect();

    let mut cons = Vec::new();
    let mut src = Vec::new();
    let mut identity_max = 0.0_f64;
    let mut scale = 0.0_f64;
    for j in triplet.mask() {
        let d = grid.x(j) - q;
        let rho_t = (triplet.next.rho[j] - triplet.prev.rho[j]) / (2.0 * delta);
        let rho_x = numerics::central_d1(&mid.rho, j, dx);
        let r_cons = rho_t + numerics::central_d1(&flux_cons, j, dx);
        let r_src = rho_t
            + numerics::central_d1(&flux_src, j, dx)
            + nu_c * mid.rho[j]
            + nu_c * d * rho_x;
        let recon = numerics::central_d1(&drift, j, dx) - nu_c * mid.rho[j] - nu_c * d * rho_x;
        identity_max = identity_max.max(((r_cons - r_src) - recon).abs());
        scale = scale.max(rho_t.abs());
        cons.push(r_cons);
        src.push(r_src);
    }
    let scale = if scale > 0.0 { scale } else { 1.0 };
    Ok(ContinuityReport {
        conservative: ResidualReport::from_values(
            "continuity_conservative",
            cons.into_iter(),
            scale,
            dx,
            delta,
            MASK_FRACTION,
        )?,
        source: ResidualReport::from_values(
            "continuity_source",
            src.into_iter(),
            scale,
            dx,
            delta,
            MASK_FRACTION,
        )?,
        identity_max,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub norm: f64,
    pub mean_x: f64,
    pub var_x: f64,
    /// `m ∫ρ v_qu dx`, which equals `⟨p̂⟩` for `ψ = √ρ e^{iS}`.
    pub mean_p: f64,
    pub mean_v_qu: f64,
    pub mean_theta_qnc: f64,
    pub warning: Option<CoverageWarning>,
}

/// Trapezoidal moments of a snapshot, normalized by the computed norm.
pub fn moments(snapshot: &PacketSnapshot, params: &ModelParams) -> Moments {
    let grid = &snapshot.grid;
    let dx = grid.dx();
    let rho = &snapshot.rho;
    let weighted = |f: &dyn Fn(usize) -> f64| {
        let v: Vec<f64> = (0..grid.len()).map(|j| rho[j] * f(j)).collect();
        numerics::trapezoid(&v, dx)
    };
    let norm = numerics::trapezoid(rho, dx);
    let mean_x = weighted(&|j| grid.x(j)) / norm;
    let var_x = weighted(&|j| {
        let d = grid.x(j) - mean_x;
        d * d
    }) / norm;
    let mean_v_qu = weighted(&|j| snapshot.v_qu[j]) / norm;
    let mean_theta_qnc = weighted(&|j| snapshot.theta_qnc[j]) / norm;
    Moments {
        norm,
        mean_x,
        var_x,
        mean_p: params.m() * mean_v_qu,
        mean_v_qu,
        mean_theta_qnc,
        warning: wavepacket::coverage(grid, snapshot.state.q, snapshot.state.a, wavepacket::AUTO_WIDTHS),
    }
}

/// A Bohmian path sampled at uniform steps.
#[derive(Debug, Clone, PartialEq)]
pub struct BohmianPath {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
}

impl BohmianPath {
    pub fn dt(&self) -> f64 {
        if self.t.len() < 2 {
            0.0
        } else {
            self.t[1] - self.t[0]
        }
    }
}

/// RK4 integration of `dx/dt = ϑ_qnc(x, t) = (ȧ/a)(x − q) + q̇` from the
/// start of `series` to `series.first().t + t_end`.
pub fn bohmian_trajectory(
    x_start: f64,
    t_end: f64,
    dt: f64,
    series: &Trajectory,
) -> Result<BohmianPath, VerifyError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(VerifyError::InvalidStep(dt));
    }
    let t0 = series.first().t;
    let end = series.last().t;
    if !(x_start.is_finite() && t0 + t_end <= end + 1e-12 * (1.0 + end.abs()) && t_end >= 0.0) {
        return Err(TrajectoryError::OutOfRange {
            t: t0 + t_end,
            start: t0,
            end,
        }
        .into());
    }
    let steps = (t_end / dt).round().max(0.0) as usize;
    let h = if steps == 0 { 0.0 } else { t_end / steps as f64 };
    let mut t = Vec::with_capacity(steps + 1);
    let mut x = Vec::with_capacity(steps + 1);
    t.push(t0);
    x.push(x_start);
    let mut y = [x_start];
    for k in 0..steps {
        let tk = t0 + k as f64 * h;
        y = numerics::rk4_step(&y, tk, h, |tt, y| {
            let s = series.sample(tt.min(end))?;
            Ok::<_, TrajectoryError>([wavepacket::nonconservative_velocity_at(&s, y[0] - s.q)])
        })?;
        t.push(t0 + (k + 1) as f64 * h);
        x.push(y[0]);
    }
    Ok(BohmianPath { t, x })
}

/// Residual of `m ẍ + νm[c(v_qu − ϑ_qnc) + ⟨ϑ_qnc⟩] + ∂(V + V_qu)/∂x` along a
/// Bohmian path, with `ẍ` from central differences of the path.
pub fn newton_law_residual<P: Potential + ?Sized>(
    path: &BohmianPath,
    series: &Trajectory,
    params: &ModelParams,
    potential: &P,
) -> Result<ResidualReport, VerifyError> {
    let m = params.m();
    let h2m = params.hbar() * params.hbar() / m;
    newton_law_residual_with(path, series, params, potential, |s, d| {
        -h2m * d / (4.0 * s.a.powi(4))
    })
}

/// As [`newton_law_residual`] with a caller-supplied `∂V_qu/∂x(state, x − q)`.
///
/// Relative values are divided by the largest sum of term magnitudes, floored
/// by the packet force scale `m(q̇² + (ħ/ma)²)/a`.
pub fn newton_law_residual_with<P, F>(
    path: &BohmianPath,
    series: &Trajectory,
    params: &ModelParams,
    potential: &P,
    quantum_force: F,
) -> Result<ResidualReport, VerifyError>
where
    P: Potential + ?Sized,
    F: Fn(&TrajectoryState, f64) -> f64,
{
    let n = path.x.len();
    if n < 3 {
        return Err(VerifyError::ShortSeries(n));
    }
    let h = path.dt();
    let (m, hbar) = (params.m(), params.hbar());
    let (nu, c) = (params.nu(), params.c());
    let mut res = Vec::with_capacity(n - 2);
    let mut scale = 0.0_f64;
    for k in 1..n - 1 {
        let t = path.t[k];
        let x = path.x[k];
        let s = series.sample(t)?;
        let d = x - s.q;
        let accel = m * (path.x[k + 1] - 2.0 * x + path.x[k - 1]) / (h * h);
        let v_qu = wavepacket::quantum_velocity_at(&s, params, d);
        let theta = wavepacket::nonconservative_velocity_at(&s, d);
        let friction = nu * m * (c * (v_qu - theta) + s.qdot);
        let force = potential.d1(x, t) + quantum_force(&s, d);
        let natural = m * (s.qdot * s.qdot + (hbar / (m * s.a)).powi(2)) / s.a;
        scale = scale.max(accel.abs() + friction.abs() + force.abs()).max(natural);
        res.push(accel + friction + force);
    }
    let scale = if scale > 0.0 { scale } else { 1.0 };
    ResidualReport::from_values("newton_law", res.into_iter(), scale, 0.0, h, 0.0)
}

/// Observed error ratios of a refinement sequence (each step halves the
/// discretization).
#[derive(Debug, Clone, PartialEq)]
pub struct Convergence {
    pub errors: Vec<f64>,
    pub ratios: Vec<f64>,
    /// `log2` of the last ratio.
    pub order: f64,
    /// Every ratio reaches at least 3, i.e. the order is clearly above 1.5.
    pub converged: bool,
}

pub fn convergence(errors: &[f64]) -> Convergence {
    let ratios: Vec<f64> = errors.windows(2).map(|w| w[0] / w[1]).collect();
    let order = ratios.last().map_or(0.0, |r| r.log2());
    let converged = !ratios.is_empty() && ratios.iter().all(|r| *r >= 3.0);
    Convergence {
        errors: errors.to_vec(),
        ratios,
        order,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Free, Harmonic};
    use crate::trajectory::{integrate, InitialConditions, IntegratorSpec};

    fn setup(nu: f64, c: f64) -> (ModelParams, TrajectoryState) {
        let p = ModelParams::natural(nu, c).unwrap();
        let ic = InitialConditions::new(0.3, 0.5, 1.0, 0.1).unwrap();
        (p, TrajectoryState::initial(&ic, &p))
    }

    #[test]
    fn triplet_rejects_mismatched_grids() {
        let (p, s) = setup(0.0, 0.0);
        let g1 = Grid::new(-8.0, 8.0, 64).unwrap();
        let g2 = Grid::new(-8.0, 8.0, 65).unwrap();
        let a = wavepacket::assemble(&s, &g1, &p).unwrap();
        let b = wavepacket::assemble(&s, &g2, &p).unwrap();
        assert_eq!(
            Triplet::new(a.clone(), b, a).unwrap_err(),
            VerifyError::GridMismatch
        );
    }

    #[test]
    fn pde_residual_is_second_order() {
        let (p, s) = setup(0.2, 0.5);
        let h = Harmonic::new(1.0, 1.0).unwrap();
        let mut errs = Vec::new();
        for k in 0..3 {
            let dx = 1.0 / (16.0 * (1 << k) as f64);
            let g = Grid::with_spacing(-8.0, 8.0, dx).unwrap();
            let t = Triplet::around(&s, 4e-3 / (1 << k) as f64, &g, &p, &h).unwrap();
            errs.push(pde_residual(&t, &p, &h).unwrap().rel_linf);
        }
        let conv = convergence(&errs);
        assert!(conv.converged, "{conv:?}");
        assert!((conv.order - 2.0).abs() < 0.2, "{conv:?}");
    }

    #[test]
    fn continuity_forms_coincide_without_friction() {
        let (p, s) = setup(0.0, 0.5);
        let g = Grid::with_spacing(-8.0, 8.0, 1.0 / 32.0).unwrap();
        let t = Triplet::around(&s, 1e-3, &g, &p, &Free).unwrap();
        let r = continuity_residuals(&t, &p).unwrap();
        assert_eq!(r.conservative.linf, r.source.linf);
        assert_eq!(r.conservative.l2, r.source.l2);
    }

    #[test]
    fn continuity_identity_holds() {
        let (p, s) = setup(0.2, 1.0);
        let h = Harmonic::new(1.0, 1.0).unwrap();
        let g = Grid::with_spacing(-8.0, 8.0, 1.0 / 32.0).unwrap();
        let t = Triplet::around(&s, 1e-3, &g, &p, &h).unwrap();
        let r = continuity_residuals(&t, &p).unwrap();
        assert!(r.identity_max < 1e-12, "{}", r.identity_max);
        assert!(r.conservative.linf >= r.conservative.l2);
    }

    #[test]
    fn moments_of_packet() {
        let (p, s) = setup(0.2, 0.5);
        let g = Grid::auto(s.q, s.a).unwrap();
        let snap = wavepacket::assemble(&s, &g, &p).unwrap();
        let mo = moments(&snap, &p);
        assert!((mo.norm - 1.0).abs() < 1e-10);
        assert!((mo.mean_x - s.q).abs() < 1e-6 * s.a);
        assert!((mo.var_x - s.a * s.a).abs() < 1e-6 * s.a * s.a);
        assert!((mo.mean_p - s.qdot).abs() < 1e-9);
        assert!((mo.mean_theta_qnc - mo.mean_v_qu).abs() < 1e-12);
        assert!(mo.warning.is_none());
    }

    #[test]
    fn bohmian_centre_follows_trajectory() {
        let (p, s) = setup(0.2, 0.5);
        let h = Harmonic::new(1.0, 1.0).unwrap();
        let tr = integrate(&s, &IntegratorSpec::new(1e-3, 1.0, 1).unwrap(), &p, &h).unwrap();
        let path = bohmian_trajectory(s.q, 1.0, 1e-3, &tr).unwrap();
        assert!((path.x.last().unwrap() - tr.last().q).abs() < 1e-12);
        assert!(bohmian_trajectory(s.q, 2.0, 1e-3, &tr).is_err());
        let r = newton_law_residual(&path, &tr, &p, &h).unwrap();
        assert!(r.rel_linf < 1e-5, "{r:?}");
    }

    #[test]
    fn convergence_flags() {
        assert!(convergence(&[1.0, 0.25, 0.0625]).converged);
        assert!(!convergence(&[1.0, 0.9]).converged);
        assert!(!convergence(&[1.0]).converged);
    }
}
