//! Subcommand execution.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::thread;

use serde_json::{json, Value};
use shakn_core::model::{ModelParams, Potential};
use shakn_core::propagator::{self, KernelOptions, KernelPlan};
use shakn_core::reference::{self, Evolution, SolverSpec};
use shakn_core::trajectory::{self, IntegratorSpec, TrajectoryState, WidthRegime};
use shakn_core::verify::{self, BohmianPath, ResidualReport, Triplet};
use shakn_core::wavepacket::{self, CoverageWarning, Grid};
use shakn_core::{numerics, Complex64, Error as CoreError};
use thiserror::Error;

use crate::config::{ConfigError, Document, RunConfig, Sweep};
use crate::format::{write_json, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, clap::ValueEnum)]
pub enum Subcommand {
    /// Integrate the centre, width and action ODEs.
    Trajectory,
    /// Assemble packet snapshots and their Bohmian fields.
    Packet,
    /// Run the residual, moment and Newton-law checks.
    Verify,
    /// Evolve the packet with the Crank–Nicolson solver.
    Reference,
    /// Tabulate the kernel and check the reproducing property.
    Propagator,
    /// Compare the solver with the closed-form packet.
    Compare,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Trajectory => "trajectory",
            Subcommand::Packet => "packet",
            Subcommand::Verify => "verify",
            Subcommand::Reference => "reference",
            Subcommand::Propagator => "propagator",
            Subcommand::Compare => "compare",
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Core(#[from] CoreError),
}

pub mod exit {
    pub const OK: u8 = 0;
    pub const CHECK_FAILED: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const CONFIG: u8 = 3;
    pub const IO: u8 = 4;
    pub const MODEL: u8 = 5;
    pub const VERIFY: u8 = 6;
    pub const REFERENCE: u8 = 7;
    pub const PROPAGATOR: u8 = 8;
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => exit::CONFIG,
            RunError::Io { .. } => exit::IO,
            RunError::Core(e) => match e {
                CoreError::Model(_) | CoreError::Trajectory(_) | CoreError::Packet(_) => exit::MODEL,
                CoreError::Verify(_) => exit::VERIFY,
                CoreError::Reference(_) => exit::REFERENCE,
                CoreError::Propagator(_) => exit::PROPAGATOR,
            },
        }
    }
}

fn core(e: impl Into<CoreError>) -> RunError {
    RunError::Core(e.into())
}

/// What a finished run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// Every check stayed within its tolerance.
    pub passed: bool,
    pub files: Vec<PathBuf>,
    /// One human-readable line per notable result.
    pub notes: Vec<String>,
}

impl Outcome {
    pub fn exit_code(&self) -> u8 {
        if self.passed {
            exit::OK
        } else {
            exit::CHECK_FAILED
        }
    }
}

struct Sink {
    dir: PathBuf,
    outcome: Outcome,
}

impl Sink {
    fn new(dir: &Path) -> Result<Self, RunError> {
        fs::create_dir_all(dir).map_err(|source| RunError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Sink {
            dir: dir.to_path_buf(),
            outcome: Outcome {
                passed: true,
                files: Vec::new(),
                notes: Vec::new(),
            },
        })
    }

    fn table(&mut self, name: &str, table: &Table) -> Result<(), RunError> {
        let path = self.dir.join(name);
        table.write(&path).map_err(|source| RunError::Io {
            path: path.clone(),
            source,
        })?;
        self.outcome.files.push(path);
        Ok(())
    }

    fn json(&mut self, name: &str, value: &Value) -> Result<(), RunError> {
        let path = self.dir.join(name);
        write_json(&path, value).map_err(|source| RunError::Io {
            path: path.clone(),
            source,
        })?;
        self.outcome.files.push(path);
        Ok(())
    }

    fn note(&mut self, line: String) {
        self.outcome.notes.push(line);
    }

    fn check(&mut self, ok: bool) {
        self.outcome.passed &= ok;
    }
}

/// Runs `sub` on `cfg`, writing artifacts into `out`.
pub fn run(sub: Subcommand, cfg: &RunConfig, out: &Path) -> Result<Outcome, RunError> {
    let mut sink = Sink::new(out)?;
    match sub {
        Subcommand::Trajectory => run_trajectory(cfg, &mut sink)?,
        Subcommand::Packet => run_packet(cfg, &mut sink)?,
        Subcommand::Verify => run_verify(cfg, &mut sink)?,
        Subcommand::Reference => run_reference(cfg, &mut sink)?,
        Subcommand::Propagator => run_propagator(cfg, &mut sink)?,
        Subcommand::Compare => run_compare(cfg, &mut sink)?,
    }
    Ok(sink.outcome)
}

/// Runs `sub` once per sweep value, concurrently, each in `out/<key>=<value>`.
pub fn run_sweep(
    sub: Subcommand,
    doc: &Document,
    sweep: &Sweep,
    out: &Path,
) -> Vec<(String, Result<Outcome, RunError>)> {
    thread::scope(|scope| {
        let handles: Vec<_> = sweep
            .values
            .iter()
            .map(|value| {
                let dir = out.join(format!("{}={}", sweep.key, value));
                let mut doc = doc.clone();
                doc.set(&sweep.key, value);
                let handle = scope.spawn(move || {
                    let cfg = RunConfig::from_document(&doc)?;
                    run(sub, &cfg, &dir)
                });
                (value.clone(), handle)
            })
            .collect();
        handles
            .into_iter()
            .map(|(v, h)| (v, h.join().expect("sweep worker panicked")))
            .collect()
    })
}

fn state_at(cfg: &RunConfig, t: f64) -> Result<TrajectoryState, RunError> {
    trajectory::advance(&cfg.initial_state(), t, cfg.integrator.dt, &cfg.params, &cfg.potential)
        .map_err(core)
}

fn warning_json(w: &Option<CoverageWarning>) -> Value {
    match w {
        Some(w) => json!({ "q": w.q, "a": w.a, "covered": w.covered, "required": w.required }),
        None => Value::Null,
    }
}

fn run_trajectory(cfg: &RunConfig, sink: &mut Sink) -> Result<(), RunError> {
    let tr = trajectory::integrate(&cfg.initial_state(), &cfg.integrator, &cfg.params, &cfg.potential)
        .map_err(core)?;
    let mut table = Table::new(&["t", "q", "qdot", "a", "adot", "S0"]);
    for s in &tr.states {
        table.row(&[s.t, s.q, s.qdot, s.a, s.adot, s.s0]);
    }
    sink.table("trajectory.csv", &table)?;
    let last = tr.last();
    sink.note(format!("t = {}: q = {}, a = {}", last.t, last.q, last.a));
    if let Ok(adv) = trajectory::stability_guard(&cfg.params, &cfg.potential) {
        let regime = match adv.regime {
            WidthRegime::Bounded { equilibrium_width } => {
                format!("bounded, equilibrium width {equilibrium_width}")
            }
            WidthRegime::Unbounded => "unbounded".into(),
            WidthRegime::SuperBallistic => "super-ballistic".into(),
        };
        sink.note(format!("width regime: {regime}"));
    }
    Ok(())
}

fn run_packet(cfg: &RunConfig, sink: &mut Sink) -> Result<(), RunError> {
    let grid = cfg.output_grid().map_err(RunError::Core)?;
    let mut entries = Vec::new();
    for (i, &t) in cfg.outputs.times.iter().enumerate() {
        let s = state_at(cfg, t)?;
        let snap = wavepacket::assemble(&s, &grid, &cfg.params).map_err(core)?;
        let name = format!("packet_{i:03}.csv");
        if cfg.outputs.csv {
            let mut table = Table::new(&["x", "re_psi", "im_psi", "rho", "S", "v_qu", "theta_qnc", "V_qu"]);
            for j in 0..grid.len() {
                table.row(&[
                    grid.x(j),
                    snap.psi[j].re,
                    snap.psi[j].im,
                    snap.rho[j],
                    snap.phase[j],
                    snap.v_qu[j],
                    snap.theta_qnc[j],
                    snap.quantum_potential[j],
                ]);
            }
            sink.table(&name, &table)?;
        }
        if let Some(w) = &snap.warning {
            sink.note(format!(
                "warning: t = {t}: grid covers {:.2} widths, {} required",
                w.covered, w.required
            ));
        }
        let mo = verify::moments(&snap, &cfg.params);
        entries.push(json!({
            "t": t,
            "file": if cfg.outputs.csv { Value::from(name) } else { Value::Null },
            "state": state_json(&s),
            "moments": {
                "norm": mo.norm, "mean_x": mo.mean_x, "var_x": mo.var_x, "mean_p": mo.mean_p,
                "mean_v_qu": mo.mean_v_qu, "mean_theta_qnc": mo.mean_theta_qnc,
            },
            "coverage_warning": warning_json(&snap.warning),
        }));
    }
    if cfg.outputs.json {
        let grid_json = json!({ "x_min": grid.x_min(), "x_max": grid.x_max(), "n": grid.len() });
        sink.json(
            "packet.json",
            &json!({ "config": cfg.echo(), "grid": grid_json, "snapshots": entries }),
        )?;
    }
    sink.note(format!("{} snapshot(s) on {} points", cfg.outputs.times.len(), grid.len()));
    Ok(())
}

fn state_json(s: &TrajectoryState) -> Value {
    json!({ "t": s.t, "q": s.q, "qdot": s.qdot, "a": s.a, "adot": s.adot, "s0": s.s0 })
}

fn report_json(r: &ResidualReport, level: usize) -> Value {
    json!({
        "name": r.name, "level": level,
        "linf": r.linf, "l2": r.l2, "rel_linf": r.rel_linf, "rel_l2": r.rel_l2,
        "grid_dx": r.grid_dx, "dt_fd": r.dt_fd, "mask_points": r.mask.points,
    })
}

struct Series {
    name: &'static str,
    errors: Vec<f64>,
}

impl Series {
    fn judge(&self, ratio: f64, tol: Option<f64>) -> (bool, Value) {
        let conv = verify::convergence(&self.errors);
        let ordered = conv.ratios.iter().all(|r| *r >= ratio);
        let finest = *self.errors.last().unwrap_or(&f64::INFINITY);
        let small = tol.is_none_or(|t| finest < t);
        let ok = ordered && small;
        let value = json!({
            "name": self.name, "errors": conv.errors, "ratios": conv.ratios,
            "order": conv.order, "converged": ordered, "finest_below_tolerance": small, "passed": ok,
        });
        (ok, value)
    }
}

fn run_verify(cfg: &RunConfig, sink: &mut Sink) -> Result<(), RunError> {
    let tol = &cfg.acceptance;
    let v = &cfg.verify;
    let (params, pot) = (&cfg.params, &cfg.potential);
    let s = state_at(cfg, cfg.integrator.t_end)?;

    let mut checks = Vec::new();
    let mut pde = Series { name: "pde_residual", errors: Vec::new() };
    let mut cons = Series { name: "continuity_conservative", errors: Vec::new() };
    let mut src = Series { name: "continuity_source", errors: Vec::new() };
    let mut identity = 0.0_f64;
    for level in 0..v.levels {
        let scale = (1u64 << (v.levels - 1 - level)) as f64;
        let grid = Grid::with_spacing(s.q - 10.0 * s.a, s.q + 10.0 * s.a, v.dx * scale).map_err(core)?;
        let trip = Triplet::around(&s, v.delta * scale, &grid, params, pot).map_err(core)?;
        let r = verify::pde_residual(&trip, params, pot).map_err(core)?;
        let c = verify::continuity_residuals(&trip, params).map_err(core)?;
        pde.errors.push(r.rel_linf);
        cons.errors.push(c.conservative.rel_linf);
        src.errors.push(c.source.rel_linf);
        identity = identity.max(c.identity_max);
        checks.push(report_json(&r, level));
        checks.push(report_json(&c.conservative, level));
        checks.push(report_json(&c.source, level));
    }

    let mut moments = Vec::new();
    let mut moments_ok = true;
    for &t in &cfg.outputs.times {
        let st = state_at(cfg, t)?;
        let grid = Grid::auto(st.q, st.a).map_err(core)?;
        let snap = wavepacket::assemble(&st, &grid, params).map_err(core)?;
        let mo = verify::moments(&snap, params);
        let m = params.m();
        let dev_x = (mo.mean_x - st.q).abs() / st.a;
        let dev_var = (mo.var_x - st.a * st.a).abs() / (st.a * st.a);
        let dev_p = (mo.mean_p - m * st.qdot).abs() / (m * (st.qdot.abs() + 1.0));
        let dev_theta = (mo.mean_theta_qnc - mo.mean_v_qu).abs() / (st.qdot.abs() + 1.0);
        let ok = [dev_x, dev_var, dev_p, dev_theta].iter().all(|d| *d < tol.moments)
            && (mo.norm - 1.0).abs() < tol.moments;
        moments_ok &= ok;
        moments.push(json!({
            "t": t, "norm": mo.norm, "mean_x": mo.mean_x, "q": st.q, "var_x": mo.var_x, "a2": st.a * st.a,
            "mean_p": mo.mean_p, "m_qdot": m * st.qdot,
            "mean_v_qu": mo.mean_v_qu, "mean_theta_qnc": mo.mean_theta_qnc, "passed": ok,
        }));
    }

    let t_end = cfg.integrator.t_end;
    let mut centre = Series { name: "newton_law_centre", errors: Vec::new() };
    let mut off = Series { name: "newton_law_off_centre", errors: Vec::new() };
    let x_off = cfg.initial.x0 + v.bohmian_offset * cfg.initial.a0;
    for level in 0..v.levels {
        let h = v.bohmian_dt * (1u64 << (v.levels - 1 - level)) as f64;
        let spec = IntegratorSpec::new(h / 4.0, t_end, 1).map_err(core)?;
        let tr = trajectory::integrate(&cfg.initial_state(), &spec, params, pot).map_err(core)?;
        for (series, x0) in [(&mut centre, cfg.initial.x0), (&mut off, x_off)] {
            let path: BohmianPath = verify::bohmian_trajectory(x0, t_end, h, &tr).map_err(core)?;
            let r = verify::newton_law_residual(&path, &tr, params, pot).map_err(core)?;
            series.errors.push(r.rel_linf);
            let mut j = report_json(&r, level);
            j["name"] = json!(series.name);
            checks.push(j);
        }
    }

    let judged = [
        pde.judge(tol.convergence_ratio, Some(tol.pde_residual)),
        cons.judge(tol.convergence_ratio, None),
        src.judge(tol.convergence_ratio, None),
    ];
    // Along the centre the residual sits at the integrator floor from the start.
    let centre_ok = centre.errors.iter().all(|e| *e < tol.newton_residual);
    let centre_json = json!({ "name": centre.name, "errors": centre.errors, "passed": centre_ok });
    let (off_ok, off_json) = off.judge(tol.convergence_ratio, Some(tol.newton_residual));
    let identity_ok = identity < tol.continuity_identity;

    let mut passed = centre_ok && off_ok && identity_ok && moments_ok;
    let mut convergence = Vec::new();
    for (ok, j) in judged {
        passed &= ok;
        convergence.push(j);
    }
    convergence.push(centre_json);
    convergence.push(off_json);
    sink.check(passed);
    for c in &convergence {
        sink.note(format!(
            "{}: {}",
            c["name"].as_str().unwrap_or(""),
            if c["passed"].as_bool().unwrap_or(false) { "pass" } else { "FAIL" }
        ));
    }
    sink.note(format!(
        "continuity identity: {identity:.3e} ({})",
        if identity_ok { "pass" } else { "FAIL" }
    ));
    sink.note(format!("moments: {}", if moments_ok { "pass" } else { "FAIL" }));

    sink.json(
        "verify.json",
        &json!({
            "config": cfg.echo(),
            "state": state_json(&s),
            "checks": checks,
            "convergence": convergence,
            "continuity_identity_max": identity,
            "moments": moments,
            "passed": passed,
        }),
    )?;
    Ok(())
}

fn reference_grid(cfg: &RunConfig) -> Result<Grid, RunError> {
    let (lo, hi) = match cfg.reference.domain {
        Some(d) => d,
        None => {
            let spec = IntegratorSpec::new(cfg.integrator.dt, cfg.integrator.t_end, 1).map_err(core)?;
            let tr = trajectory::integrate(&cfg.initial_state(), &spec, &cfg.params, &cfg.potential)
                .map_err(core)?;
            tr.states.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                (lo.min(s.q - 10.0 * s.a), hi.max(s.q + 10.0 * s.a))
            })
        }
    };
    Grid::with_spacing(lo, hi, cfg.reference.dx).map_err(core)
}

fn evolve(cfg: &RunConfig, grid: &Grid, snapshots: &[f64]) -> Result<Evolution, RunError> {
    let psi0 = wavepacket::assemble(&cfg.initial_state(), grid, &cfg.params)
        .map_err(core)?
        .psi;
    let spec = SolverSpec::new(*grid, cfg.reference.dt, cfg.integrator.t_end)
        .map_err(core)?
        .record_every(cfg.reference.record_every)
        .snapshots_at(snapshots);
    reference::evolve(&psi0, &spec, &cfg.params, &cfg.potential).map_err(core)
}

fn mean_table(ev: &Evolution) -> Table {
    let mut table = Table::new(&["t", "norm", "mean_x", "mean_p", "var_x"]);
    for s in &ev.samples {
        table.row(&[s.t, s.norm, s.mean_x, s.mean_p, s.var_x]);
    }
    table
}

fn run_reference(cfg: &RunConfig, sink: &mut Sink) -> Result<(), RunError> {
    let grid = reference_grid(cfg)?;
    let ev = evolve(cfg, &grid, &[])?;
    sink.table("reference.csv", &mean_table(&ev))?;
    let drift = ev.norm_drift_rate();
    let ok = drift < cfg.acceptance.norm_drift;
    sink.check(ok);
    let last = ev.samples.last().copied();
    sink.note(format!("norm drift per unit time: {drift:.3e} ({})", if ok { "pass" } else { "FAIL" }));
    if cfg.outputs.json {
        sink.json(
            "reference.json",
            &json!({
                "config": cfg.echo(),
                "grid": { "x_min": grid.x_min(), "x_max": grid.x_max(), "n": grid.len() },
                "norm_drift_rate": drift,
                "final": last.map(|s| json!({
                    "t": s.t, "norm": s.norm, "mean_x": s.mean_x, "mean_p": s.mean_p, "var_x": s.var_x,
                })),
                "passed": ok,
            }),
        )?;
    }
    Ok(())
}

fn run_compare(cfg: &RunConfig, sink: &mut Sink) -> Result<(), RunError> {
    let grid = reference_grid(cfg)?;
    let ev = evolve(cfg, &grid, &cfg.outputs.times)?;
    let mut table = Table::new(&[
        "t", "rel_l2", "max_abs", "mean_x_ref", "q", "mean_p_ref", "m_qdot", "var_x_ref", "a2",
    ]);
    let mut rows = Vec::new();
    let mut worst = 0.0_f64;
    for (t, psi) in &ev.snapshots {
        let s = state_at(cfg, *t)?;
        let exact = wavepacket::assemble(&s, &grid, &cfg.params).map_err(core)?.psi;
        let rel = numerics::relative_l2(psi, &exact);
        let max_abs = psi.iter().zip(&exact).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        let me = reference::measure(psi, &grid, cfg.params.hbar(), *t);
        let m = cfg.params.m();
        table.row(&[*t, rel, max_abs, me.mean_x, s.q, me.mean_p, m * s.qdot, me.var_x, s.a * s.a]);
        rows.push(json!({
            "t": t, "rel_l2": rel, "max_abs": max_abs,
            "mean_x_ref": me.mean_x, "q": s.q, "mean_p_ref": me.mean_p, "m_qdot": m * s.qdot,
            "var_x_ref": me.var_x, "a2": s.a * s.a,
        }));
        worst = worst.max(rel);
    }
    sink.table("compare.csv", &table)?;
    let ok = worst < cfg.acceptance.compare_l2;
    sink.check(ok);
    sink.note(format!("max relative L2 error: {worst:.3e} ({})", if ok { "pass" } else { "FAIL" }));
    if cfg.outputs.json {
        sink.json(
            "compare.json",
            &json!({
                "config": cfg.echo(),
                "grid": { "x_min": grid.x_min(), "x_max": grid.x_max(), "n": grid.len() },
                "rows": rows,
                "max_rel_l2": worst,
                "norm_drift_rate": ev.norm_drift_rate(),
                "passed": ok,
            }),
        )?;
    }
    Ok(())
}

fn kernel_options(cfg: &RunConfig) -> KernelOptions {
    let p = &cfg.propagator;
    KernelOptions {
        n_nodes: p.n_nodes,
        margin: p.margin,
        a0: p.a0,
        b0: p.b0,
        dt: cfg.integrator.dt,
        ..KernelOptions::default()
    }
}

fn run_propagator(cfg: &RunConfig, sink: &mut Sink) -> Result<(), RunError> {
    let t = cfg.integrator.t_end;
    let opts = kernel_options(cfg);
    let (params, pot): (&ModelParams, &dyn Potential) = (&cfg.params, &cfg.potential);
    let s = state_at(cfg, t)?;
    let ic = &cfg.initial;
    let p = &cfg.propagator;

    let plan = KernelPlan::new(t, params, pot, &opts).map_err(core)?;
    let span = |c: f64, h: f64| -> Vec<f64> {
        let n = p.kernel_points;
        (0..n).map(|i| c - h + 2.0 * h * i as f64 / (n - 1) as f64).collect()
    };
    let mut table = Table::new(&["x", "x0", "t", "re_K", "im_K", "abs_K", "envelope_tail"]);
    for x in span(s.q, 4.0 * s.a) {
        for x0 in span(ic.x0, 4.0 * ic.a0) {
            let k = plan.kernel(x, x0).map_err(core)?;
            table.row(&[x, x0, t, k.k.re, k.k.im, k.k.norm(), k.envelope_tail]);
        }
    }
    sink.table("kernel.csv", &table)?;

    let g0 = Grid::new(ic.x0 - 8.0 * ic.a0, ic.x0 + 8.0 * ic.a0, p.x0_points).map_err(core)?;
    let g1 = Grid::new(s.q - 6.0 * s.a, s.q + 6.0 * s.a, p.x_points).map_err(core)?;
    let psi0 = wavepacket::assemble(&cfg.initial_state(), &g0, params).map_err(core)?.psi;
    let got: Vec<Complex64> = propagator::propagate(&psi0, &g0, &g1, t, params, pot, &opts).map_err(core)?;
    let exact = wavepacket::assemble(&s, &g1, params).map_err(core)?.psi;
    let rel = numerics::relative_l2(&got, &exact);
    let ok = rel < cfg.acceptance.reproduce_l2;
    sink.check(ok);
    sink.note(format!("reproducing property: relative L2 {rel:.3e} ({})", if ok { "pass" } else { "FAIL" }));
    if cfg.outputs.json {
        sink.json(
            "propagator.json",
            &json!({
                "config": cfg.echo(),
                "t": t,
                "probe_width": plan.probe_width(),
                "reproduce_rel_l2": rel,
                "x0_grid": { "x_min": g0.x_min(), "x_max": g0.x_max(), "n": g0.len() },
                "x_grid": { "x_min": g1.x_min(), "x_max": g1.x_max(), "n": g1.len() },
                "passed": ok,
            }),
        )?;
    }
    Ok(())
}
