//! The run configuration: a flat `key = value` format with `[section]`
//! headers and `#` comments.
//!
//! ```text
//! [model]
//! nu = 0.2
//! preset = hasse
//!
//! [potential]
//! kind = harmonic
//! omega = 1
//!
//! [initial]
//! x0 = 0.3
//! v0 = 0.5
//! a0 = 1
//!
//! [integrator]
//! dt = 1e-3
//! t_end = 2
//!
//! [grid]
//! n = auto
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use serde_json::{json, Value};
use shakn_core::model::{
    DampingForm, Free, Friction, Harmonic, Linear, ModelError, ModelParams, Preset,
    ShippedPotential,
};
use shakn_core::trajectory::{self, InitialConditions, IntegratorSpec, TrajectoryError, TrajectoryState};
use shakn_core::wavepacket::Grid;
use thiserror::Error;

/// Line numbers are 1-based; line 0 stands for a `--sweep` override.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value` or `[section]`, found `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown section `[{section}]`")]
    UnknownSection { line: usize, section: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: `{key}` is already set on line {first}")]
    Duplicate { line: usize, key: String, first: usize },
    #[error("line {line}: missing required key `{key}`")]
    Missing { line: usize, key: String },
    #[error("line {line}: `{key}` expects {expected}, found `{value}`")]
    Type {
        line: usize,
        key: String,
        expected: &'static str,
        value: String,
    },
    #[error("line {line}: `{key}`: {reason}")]
    Invalid { line: usize, key: String, reason: String },
    #[error("--sweep expects `section.key=v1,v2,...`, found `{0}`")]
    Sweep(String),
}

const SECTIONS: [&str; 10] = [
    "model",
    "potential",
    "initial",
    "integrator",
    "grid",
    "outputs",
    "reference",
    "propagator",
    "verify",
    "acceptance",
];

/// The untyped contents of a configuration file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Document {
    entries: BTreeMap<String, (String, usize)>,
    sections: BTreeMap<String, usize>,
    lines: usize,
}

impl Document {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut doc = Document::default();
        let mut section: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            doc.lines = line;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let name = name.trim().to_ascii_lowercase();
                if !SECTIONS.contains(&name.as_str()) {
                    return Err(ConfigError::UnknownSection { line, section: name });
                }
                doc.sections.entry(name.clone()).or_insert(line);
                section = Some(name);
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line,
                    text: content.to_string(),
                });
            };
            let key = key.trim().to_ascii_lowercase();
            let value = value.trim().to_string();
            if key.is_empty() || key.contains(char::is_whitespace) || value.is_empty() {
                return Err(ConfigError::Syntax {
                    line,
                    text: content.to_string(),
                });
            }
            let full = match &section {
                Some(s) => format!("{s}.{key}"),
                None if key == "grid" => key,
                None => return Err(ConfigError::UnknownKey { line, key }),
            };
            if let Some((_, first)) = doc.entries.get(&full) {
                return Err(ConfigError::Duplicate {
                    line,
                    key: full,
                    first: *first,
                });
            }
            doc.entries.insert(full, (value, line));
        }
        Ok(doc)
    }

    /// Sets or replaces `key` (written `section.key`) as if given on line 0.
    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.insert(key.to_ascii_lowercase(), (value.trim().to_string(), 0));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    fn line_of_section(&self, key: &str) -> usize {
        key.split_once('.')
            .and_then(|(s, _)| self.sections.get(s).copied())
            .unwrap_or(self.lines)
    }
}

struct Reader<'a> {
    doc: &'a Document,
    used: BTreeSet<&'a str>,
}

fn parse_number(text: &str) -> Option<f64> {
    match text.split_once('/') {
        Some((n, d)) => Some(n.trim().parse::<f64>().ok()? / d.trim().parse::<f64>().ok()?),
        None => text.parse().ok(),
    }
}

impl<'a> Reader<'a> {
    fn new(doc: &'a Document) -> Self {
        Reader {
            doc,
            used: BTreeSet::new(),
        }
    }

    fn raw(&mut self, key: &str) -> Option<(&'a str, usize)> {
        let (k, (v, line)) = self.doc.entries.get_key_value(key)?;
        self.used.insert(k.as_str());
        Some((v.as_str(), *line))
    }

    fn line(&self, key: &str) -> usize {
        self.doc
            .entries
            .get(key)
            .map_or_else(|| self.doc.line_of_section(key), |(_, l)| *l)
    }

    fn missing(&self, key: &str) -> ConfigError {
        ConfigError::Missing {
            line: self.doc.line_of_section(key),
            key: key.to_string(),
        }
    }

    fn invalid(&self, key: &str, reason: impl Into<String>) -> ConfigError {
        ConfigError::Invalid {
            line: self.line(key),
            key: key.to_string(),
            reason: reason.into(),
        }
    }

    fn typed<T>(
        &mut self,
        key: &str,
        expected: &'static str,
        parse: impl Fn(&str) -> Option<T>,
    ) -> Result<Option<T>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some((v, line)) => parse(v).map(Some).ok_or_else(|| ConfigError::Type {
                line,
                key: key.to_string(),
                expected,
                value: v.to_string(),
            }),
        }
    }

    fn f64(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.typed(key, "a number", |v| parse_number(v).filter(|x| x.is_finite()))
    }

    fn f64_or(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    fn required(&mut self, key: &str) -> Result<f64, ConfigError> {
        self.f64(key)?.ok_or_else(|| self.missing(key))
    }

    fn positive(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        let v = self.f64_or(key, default)?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(self.invalid(key, "must be > 0"))
        }
    }

    fn count(&mut self, key: &str, default: usize) -> Result<usize, ConfigError> {
        Ok(self
            .typed(key, "a non-negative integer", |v| v.parse::<usize>().ok())?
            .unwrap_or(default))
    }

    fn flag(&mut self, key: &str, default: bool) -> Result<bool, ConfigError> {
        Ok(self
            .typed(key, "true or false", |v| match v.to_ascii_lowercase().as_str() {
                "true" | "yes" | "on" | "1" => Some(true),
                "false" | "no" | "off" | "0" => Some(false),
                _ => None,
            })?
            .unwrap_or(default))
    }

    fn list(&mut self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        self.typed(key, "a comma-separated list of numbers", |v| {
            v.split(',')
                .map(|s| parse_number(s.trim()).filter(|x| x.is_finite()))
                .collect()
        })
    }

    fn text(&mut self, key: &str) -> Option<(&'a str, usize)> {
        self.raw(key)
    }

    fn finish(self) -> Result<(), ConfigError> {
        match self
            .doc
            .entries
            .iter()
            .find(|(k, _)| !self.used.contains(k.as_str()))
        {
            Some((k, (_, line))) => Err(ConfigError::UnknownKey {
                line: *line,
                key: k.clone(),
            }),
            None => Ok(()),
        }
    }
}

/// How the output grid is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridChoice {
    /// `q(t_end) ± 8 a(t_end)` with 1024 points.
    Auto,
    Fixed { x_min: f64, x_max: f64, n: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outputs {
    pub directory: PathBuf,
    pub csv: bool,
    pub json: bool,
    /// Snapshot times for `packet` and `compare`; defaults to `t_end`.
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSettings {
    pub dx: f64,
    pub dt: f64,
    /// Explicit domain; by default it spans every `q(t) ± 10 a(t)`.
    pub domain: Option<(f64, f64)>,
    pub record_every: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorSettings {
    pub n_nodes: usize,
    pub margin: f64,
    pub a0: Option<f64>,
    pub b0: f64,
    /// Initial-position samples for the reproducing check.
    pub x0_points: usize,
    /// Final-position samples for the reproducing check.
    pub x_points: usize,
    /// Points per axis of the exported kernel table.
    pub kernel_points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifySettings {
    /// Finite-difference time step at the finest level.
    pub delta: f64,
    /// Grid spacing at the finest level.
    pub dx: f64,
    /// Number of refinement levels, each halving `dx` and `delta`.
    pub levels: usize,
    /// Start of the off-centre Bohmian path, in initial widths from `x0`.
    pub bohmian_offset: f64,
    pub bohmian_dt: f64,
}

/// Pass/fail thresholds for the checking subcommands.
#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    pub pde_residual: f64,
    pub continuity_identity: f64,
    pub moments: f64,
    pub convergence_ratio: f64,
    pub newton_residual: f64,
    pub compare_l2: f64,
    pub norm_drift: f64,
    pub reproduce_l2: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            pde_residual: 1e-3,
            continuity_identity: 1e-12,
            moments: 1e-6,
            convergence_ratio: 3.0,
            newton_residual: 1e-4,
            compare_l2: 1e-4,
            norm_drift: 1e-8,
            reproduce_l2: 1e-6,
        }
    }
}

/// A validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    pub preset: Option<Preset>,
    pub potential: ShippedPotential,
    pub initial: InitialConditions,
    pub integrator: IntegratorSpec,
    pub grid: GridChoice,
    pub outputs: Outputs,
    pub reference: ReferenceSettings,
    pub propagator: PropagatorSettings,
    pub verify: VerifySettings,
    pub acceptance: Tolerances,
}

fn model_error(r: &Reader<'_>, e: ModelError) -> ConfigError {
    let key = match &e {
        ModelError::OutOfRange { field, .. } => match *field {
            "mass" | "omega" => format!("potential.{field}"),
            f => format!("model.{f}"),
        },
        ModelError::UnknownPreset { .. } => "model.preset".to_string(),
        ModelError::UnknownDampingForm { .. } => "model.damping".to_string(),
    };
    r.invalid(&key, e.to_string())
}

fn trajectory_error(r: &Reader<'_>, section: &str, e: TrajectoryError) -> ConfigError {
    let key = match &e {
        TrajectoryError::Invalid { field, .. } => format!("{section}.{field}"),
        _ => section.to_string(),
    };
    r.invalid(&key, e.to_string())
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::from_document(&Document::parse(text)?)
    }

    pub fn from_document(doc: &Document) -> Result<Self, ConfigError> {
        let mut r = Reader::new(doc);

        let m = r.f64_or("model.m", 1.0)?;
        let hbar = r.f64_or("model.hbar", 1.0)?;
        let nu = r.f64_or("model.nu", 0.0)?;
        let preset = match r.text("model.preset") {
            Some((v, _)) => Some(v.parse::<Preset>().map_err(|e| model_error(&r, e))?),
            None => None,
        };
        let explicit_c = r.f64("model.c")?;
        let friction = match (preset, explicit_c) {
            (Some(_), Some(_)) => {
                return Err(r.invalid("model.c", "give either `preset` or `c`, not both"))
            }
            (Some(p), None) => Friction::Preset(p),
            (None, Some(c)) => Friction::Explicit(c),
            (None, None) => Friction::Preset(Preset::Sussmann),
        };
        let damping = match r.text("model.damping") {
            Some((v, _)) => v.parse::<DampingForm>().map_err(|e| model_error(&r, e))?,
            None => DampingForm::default(),
        };
        let params = ModelParams::new(m, hbar, nu, friction)
            .map_err(|e| model_error(&r, e))?
            .with_damping(damping);

        let kind = r.text("potential.kind").map(|(v, _)| v.to_ascii_lowercase());
        let potential = match kind.as_deref() {
            None | Some("free") => ShippedPotential::Free(Free),
            Some("linear") => ShippedPotential::Linear(Linear {
                force: r.required("potential.force")?,
            }),
            Some("harmonic") => {
                let omega = r.required("potential.omega")?;
                ShippedPotential::Harmonic(Harmonic::new(m, omega).map_err(|e| model_error(&r, e))?)
            }
            Some(other) => {
                return Err(r.invalid(
                    "potential.kind",
                    format!("unknown potential `{other}` (expected free, linear or harmonic)"),
                ))
            }
        };

        let initial = InitialConditions::new(
            r.required("initial.x0")?,
            r.required("initial.v0")?,
            r.required("initial.a0")?,
            r.f64_or("initial.b0", 0.0)?,
        )
        .map_err(|e| trajectory_error(&r, "initial", e))?;

        let integrator = IntegratorSpec::new(
            r.required("integrator.dt")?,
            r.required("integrator.t_end")?,
            r.count("integrator.record_every", 1)?,
        )
        .map_err(|e| trajectory_error(&r, "integrator", e))?;

        let grid = read_grid(&mut r)?;

        let mut times = r.list("outputs.times")?.unwrap_or_else(|| vec![integrator.t_end]);
        times.sort_by(f64::total_cmp);
        if times.iter().any(|t| !(0.0..=integrator.t_end).contains(t)) {
            return Err(r.invalid("outputs.times", "every time must lie in [0, t_end]"));
        }
        let outputs = Outputs {
            directory: PathBuf::from(r.text("outputs.directory").map_or(".", |(v, _)| v)),
            csv: r.flag("outputs.csv", true)?,
            json: r.flag("outputs.json", true)?,
            times,
        };

        let domain = match (r.f64("reference.x_min")?, r.f64("reference.x_max")?) {
            (Some(lo), Some(hi)) if lo < hi => Some((lo, hi)),
            (None, None) => None,
            _ => {
                return Err(r.invalid(
                    "reference.x_max",
                    "give both `x_min` and `x_max` with x_min < x_max",
                ))
            }
        };
        let reference = ReferenceSettings {
            dx: r.positive("reference.dx", 1.0 / 64.0)?,
            dt: r.positive("reference.dt", 1e-4)?,
            domain,
            record_every: r.count("reference.record_every", 100)?.max(1),
        };

        let propagator = PropagatorSettings {
            n_nodes: r.count("propagator.n_nodes", shakn_core::propagator::DEFAULT_NODES)?,
            margin: r.positive("propagator.margin", 1.25)?,
            a0: match r.f64("propagator.a0")? {
                Some(a) if a > 0.0 => Some(a),
                Some(_) => return Err(r.invalid("propagator.a0", "must be > 0")),
                None => None,
            },
            b0: r.f64_or("propagator.b0", 0.0)?,
            x0_points: r.count("propagator.x0_points", 401)?,
            x_points: r.count("propagator.x_points", 97)?,
            kernel_points: r.count("propagator.kernel_points", 9)?,
        };
        let n = propagator.n_nodes;
        if n < shakn_core::propagator::MIN_NODES || n.is_multiple_of(2) {
            return Err(r.invalid(
                "propagator.n_nodes",
                format!("must be odd and at least {}", shakn_core::propagator::MIN_NODES),
            ));
        }
        for key in ["x0_points", "x_points", "kernel_points"] {
            let v = match key {
                "x0_points" => propagator.x0_points,
                "x_points" => propagator.x_points,
                _ => propagator.kernel_points,
            };
            if v < 2 {
                return Err(r.invalid(&format!("propagator.{key}"), "must be at least 2"));
            }
        }

        let verify = VerifySettings {
            delta: r.positive("verify.delta", 1e-4)?,
            dx: r.positive("verify.dx", 1.0 / 64.0)?,
            levels: r.count("verify.levels", 3)?,
            bohmian_offset: r.f64_or("verify.bohmian_offset", 1.0)?,
            bohmian_dt: r.positive("verify.bohmian_dt", 1e-3)?,
        };
        if verify.levels < 2 {
            return Err(r.invalid("verify.levels", "must be at least 2"));
        }

        let d = Tolerances::default();
        let acceptance = Tolerances {
            pde_residual: r.positive("acceptance.pde_residual", d.pde_residual)?,
            continuity_identity: r.positive("acceptance.continuity_identity", d.continuity_identity)?,
            moments: r.positive("acceptance.moments", d.moments)?,
            convergence_ratio: r.positive("acceptance.convergence_ratio", d.convergence_ratio)?,
            newton_residual: r.positive("acceptance.newton_residual", d.newton_residual)?,
            compare_l2: r.positive("acceptance.compare_l2", d.compare_l2)?,
            norm_drift: r.positive("acceptance.norm_drift", d.norm_drift)?,
            reproduce_l2: r.positive("acceptance.reproduce_l2", d.reproduce_l2)?,
        };

        r.finish()?;
        Ok(RunConfig {
            params,
            preset,
            potential,
            initial,
            integrator,
            grid,
            outputs,
            reference,
            propagator,
            verify,
            acceptance,
        })
    }

    pub fn initial_state(&self) -> TrajectoryState {
        TrajectoryState::initial(&self.initial, &self.params)
    }

    /// The output grid, resolving `auto` from the state at `t_end`.
    pub fn output_grid(&self) -> Result<Grid, shakn_core::Error> {
        match self.grid {
            GridChoice::Fixed { x_min, x_max, n } => Ok(Grid::new(x_min, x_max, n)?),
            GridChoice::Auto => {
                let end = trajectory::advance(
                    &self.initial_state(),
                    self.integrator.t_end,
                    self.integrator.dt,
                    &self.params,
                    &self.potential,
                )?;
                Ok(Grid::auto(end.q, end.a)?)
            }
        }
    }

    /// The resolved configuration as JSON, for embedding in reports.
    pub fn echo(&self) -> Value {
        let p = &self.params;
        let potential = match self.potential {
            ShippedPotential::Free(_) => json!({ "kind": "free" }),
            ShippedPotential::Linear(l) => json!({ "kind": "linear", "force": l.force }),
            ShippedPotential::Harmonic(h) => json!({ "kind": "harmonic", "omega": h.omega }),
        };
        let grid = match self.grid {
            GridChoice::Auto => json!("auto"),
            GridChoice::Fixed { x_min, x_max, n } => json!({ "x_min": x_min, "x_max": x_max, "n": n }),
        };
        let t = &self.acceptance;
        json!({
            "model": {
                "m": p.m(), "hbar": p.hbar(), "nu": p.nu(), "c": p.c(),
                "preset": self.preset.map(|p| p.name()),
                "damping": p.damping().name(),
            },
            "potential": potential,
            "initial": {
                "x0": self.initial.x0, "v0": self.initial.v0,
                "a0": self.initial.a0, "b0": self.initial.b0,
            },
            "integrator": {
                "dt": self.integrator.dt, "t_end": self.integrator.t_end,
                "record_every": self.integrator.record_every,
            },
            "grid": grid,
            "outputs": { "times": self.outputs.times },
            "reference": {
                "dx": self.reference.dx, "dt": self.reference.dt,
                "domain": self.reference.domain.map(|(a, b)| [a, b]),
                "record_every": self.reference.record_every,
            },
            "propagator": {
                "n_nodes": self.propagator.n_nodes, "margin": self.propagator.margin,
                "a0": self.propagator.a0, "b0": self.propagator.b0,
                "x0_points": self.propagator.x0_points, "x_points": self.propagator.x_points,
                "kernel_points": self.propagator.kernel_points,
            },
            "verify": {
                "delta": self.verify.delta, "dx": self.verify.dx, "levels": self.verify.levels,
                "bohmian_offset": self.verify.bohmian_offset, "bohmian_dt": self.verify.bohmian_dt,
            },
            "acceptance": {
                "pde_residual": t.pde_residual, "continuity_identity": t.continuity_identity,
                "moments": t.moments, "convergence_ratio": t.convergence_ratio,
                "newton_residual": t.newton_residual, "compare_l2": t.compare_l2,
                "norm_drift": t.norm_drift, "reproduce_l2": t.reproduce_l2,
            },
        })
    }
}

fn read_grid(r: &mut Reader<'_>) -> Result<GridChoice, ConfigError> {
    let is_auto = |v: &str| v.eq_ignore_ascii_case("auto");
    let top = r.text("grid").map(|(v, l)| (is_auto(v), v, l));
    if let Some((false, v, line)) = top {
        return Err(ConfigError::Type {
            line,
            key: "grid".into(),
            expected: "`auto`",
            value: v.to_string(),
        });
    }
    let n_auto = r.text("grid.n").filter(|(v, _)| is_auto(v)).is_some();
    let flag = r.flag("grid.auto", false)?;
    let fixed = (r.f64("grid.x_min")?, r.f64("grid.x_max")?);
    let auto = top.is_some() || n_auto || flag;
    if auto {
        if fixed != (None, None) {
            return Err(r.invalid("grid.x_min", "an `auto` grid takes no bounds"));
        }
        return Ok(GridChoice::Auto);
    }
    match (fixed, r.doc.get("grid.n")) {
        ((None, None), None) => Ok(GridChoice::Auto),
        ((Some(x_min), Some(x_max)), Some(_)) => {
            let n = r.count("grid.n", 0)?;
            Grid::new(x_min, x_max, n).map_err(|e| r.invalid("grid.n", e.to_string()))?;
            Ok(GridChoice::Fixed { x_min, x_max, n })
        }
        ((None, _), _) => Err(r.missing("grid.x_min")),
        ((_, None), _) => Err(r.missing("grid.x_max")),
        (_, None) => Err(r.missing("grid.n")),
    }
}

/// A `--sweep section.key=v1,v2,...` request.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub key: String,
    pub values: Vec<String>,
}

impl std::str::FromStr for Sweep {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ConfigError::Sweep(s.to_string());
        let (key, values) = s.split_once('=').ok_or_else(bad)?;
        let key = key.trim().to_ascii_lowercase();
        let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).collect();
        if key.is_empty() || values.iter().any(String::is_empty) {
            return Err(bad());
        }
        Ok(Sweep { key, values })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "\
[initial]
x0 = 0
v0 = 0
a0 = 1
[integrator]
dt = 1e-3
t_end = 2
";

    #[test]
    fn comments_and_fractions() {
        let cfg = RunConfig::parse(&format!("{BASE}[reference]\ndx = 1/32  # coarse\n")).unwrap();
        assert_eq!(cfg.reference.dx, 1.0 / 32.0);
    }

    #[test]
    fn unknown_and_duplicate_keys_are_located() {
        let e = RunConfig::parse(&format!("{BASE}[model]\nmu = 1\n")).unwrap_err();
        assert_eq!(
            e,
            ConfigError::UnknownKey {
                line: 9,
                key: "model.mu".into()
            }
        );
        let e = RunConfig::parse(&format!("{BASE}[initial]\nx0 = 1\n")).unwrap_err();
        assert!(matches!(e, ConfigError::Duplicate { line: 9, first: 2, .. }), "{e}");
    }

    #[test]
    fn type_and_range_errors_name_the_key() {
        let e = RunConfig::parse(&format!("{BASE}[model]\nnu = fast\n")).unwrap_err();
        assert!(e.to_string().contains("line 9") && e.to_string().contains("model.nu"), "{e}");
        let e = RunConfig::parse(&format!("{BASE}[model]\nc = 2\n")).unwrap_err();
        assert!(e.to_string().contains("model.c"), "{e}");
        let e = RunConfig::parse(&format!("{BASE}[potential]\nkind = harmonic\n")).unwrap_err();
        assert!(e.to_string().contains("potential.omega"), "{e}");
        let e = RunConfig::parse("x0 = 1\n").unwrap_err();
        assert!(e.to_string().contains("`x0`"), "{e}");
    }

    #[test]
    fn preset_and_explicit_constant_conflict() {
        let e = RunConfig::parse(&format!("{BASE}[model]\npreset = hasse\nc = 0.5\n")).unwrap_err();
        assert!(e.to_string().contains("model.c"), "{e}");
    }

    #[test]
    fn grid_forms() {
        assert_eq!(RunConfig::parse(BASE).unwrap().grid, GridChoice::Auto);
        let top = RunConfig::parse(&format!("grid = auto\n{BASE}")).unwrap();
        assert_eq!(top.grid, GridChoice::Auto);
        let fixed = RunConfig::parse(&format!("{BASE}[grid]\nx_min = -5\nx_max = 5\nn = 101\n")).unwrap();
        assert_eq!(
            fixed.grid,
            GridChoice::Fixed {
                x_min: -5.0,
                x_max: 5.0,
                n: 101
            }
        );
        let e = RunConfig::parse(&format!("{BASE}[grid]\nx_min = -5\nn = 101\n")).unwrap_err();
        assert!(e.to_string().contains("grid.x_max"), "{e}");
    }

    #[test]
    fn sweep_syntax() {
        let s: Sweep = "model.nu=0,0.1, 0.2".parse().unwrap();
        assert_eq!(s.key, "model.nu");
        assert_eq!(s.values, ["0", "0.1", "0.2"]);
        assert!("model.nu".parse::<Sweep>().is_err());
        assert!("model.nu=0,,1".parse::<Sweep>().is_err());
    }
}
