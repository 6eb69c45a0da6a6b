//! Physical parameters, model presets and potentials.
//!
//! Everything is carried in whatever unit system the caller picks; the
//! defaults are natural units with ħ = m = 1.

use alloc::string::String;
use core::fmt;
use core::str::FromStr;

/// Named members of the SHAKN family. Each fixes the model constant `c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Sussmann,
    Hasse,
    Albrecht,
    Kostin,
}

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset::Sussmann,
        Preset::Hasse,
        Preset::Albrecht,
        Preset::Kostin,
    ];

    /// The model constant selected by this preset.
    pub fn c(self) -> f64 {
        match self {
            Preset::Sussmann => 1.0,
            Preset::Hasse => 0.5,
            // Albrecht and Kostin share c = 0 and therefore share dynamics.
            Preset::Albrecht | Preset::Kostin => 0.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Sussmann => "sussmann",
            Preset::Hasse => "hasse",
            Preset::Albrecht => "albrecht",
            Preset::Kostin => "kostin",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        Preset::ALL
            .iter()
            .copied()
            .find(|p| p.name() == lower)
            .ok_or_else(|| ModelError::UnknownPreset {
                name: String::from(s.trim()),
            })
    }
}

/// How the model constant is chosen: by preset name or given explicitly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Friction {
    Preset(Preset),
    Explicit(f64),
}

impl From<Preset> for Friction {
    fn from(p: Preset) -> Self {
        Friction::Preset(p)
    }
}

impl From<f64> for Friction {
    fn from(c: f64) -> Self {
        Friction::Explicit(c)
    }
}

/// Which centre/action equations the linearized packet follows.
///
/// Substituting the Gaussian ansatz into the SHAKN equation, the friction term
/// `ν [x − q] (1 − c) ⟨p̂⟩` is first order in `[x − q]` and therefore lands in the
/// centre equation, giving the Ehrenfest damping rate `ν` for every `c`:
///
/// ```text
/// q̈ = −ν q̇ − V′(q)/m,      ħ Ṡ₀ = ½ m q̇² − V(q) − ħ²/(4 m a²)
/// ```
///
/// [`DampingForm::ScaledFriction`] keeps that term in the action instead,
///
/// ```text
/// q̈ = −ν c q̇ − V′(q)/m,    ħ Ṡ₀ = ½ m q̇² − ν m (1 − c) q̇ − V(q) − ħ²/(4 m a²)
/// ```
///
/// which only solves the full equation when `c = 1` or `ν = 0` (the two forms
/// coincide there). The width equation is the same in both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DampingForm {
    #[default]
    Ehrenfest,
    ScaledFriction,
}

impl DampingForm {
    pub fn name(self) -> &'static str {
        match self {
            DampingForm::Ehrenfest => "ehrenfest",
            DampingForm::ScaledFriction => "scaled",
        }
    }
}

impl FromStr for DampingForm {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ehrenfest" => Ok(DampingForm::Ehrenfest),
            "scaled" | "scaled_friction" => Ok(DampingForm::ScaledFriction),
            _ => Err(ModelError::UnknownDampingForm {
                name: String::from(s.trim()),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("`{field}` = {value} is out of range: expected {expected}")]
    OutOfRange {
        field: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("unknown preset `{name}`; valid presets: sussmann, hasse, albrecht, kostin")]
    UnknownPreset { name: String },
    #[error("unknown damping form `{name}`; valid forms: ehrenfest, scaled")]
    UnknownDampingForm { name: String },
}

/// Validated model parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    m: f64,
    hbar: f64,
    nu: f64,
    c: f64,
    damping: DampingForm,
}

impl ModelParams {
    /// Builds and validates a parameter set, resolving a preset to its `c`.
    pub fn new(
        m: f64,
        hbar: f64,
        nu: f64,
        friction: impl Into<Friction>,
    ) -> Result<Self, ModelError> {
        let c = match friction.into() {
            Friction::Preset(p) => p.c(),
            Friction::Explicit(c) => c,
        };
        check(
            "m",
            m,
            m.is_finite() && m > 0.0,
            "a finite value > 0",
        )?;
        check(
            "hbar",
            hbar,
            hbar.is_finite() && hbar > 0.0,
            "a finite value > 0",
        )?;
        check(
            "nu",
            nu,
            nu.is_finite() && nu >= 0.0,
            "a finite value >= 0",
        )?;
        check(
            "c",
            c,
            c.is_finite() && (0.0..=1.0).contains(&c),
            "a value in [0, 1]",
        )?;
        Ok(ModelParams {
            m,
            hbar,
            nu,
            c,
            damping: DampingForm::Ehrenfest,
        })
    }

    /// ħ = m = 1.
    pub fn natural(nu: f64, friction: impl Into<Friction>) -> Result<Self, ModelError> {
        Self::new(1.0, 1.0, nu, friction)
    }

    pub fn with_damping(mut self, damping: DampingForm) -> Self {
        self.damping = damping;
        self
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn damping(&self) -> DampingForm {
        self.damping
    }

    /// ν·c, the rate that appears in the width equation and the quantum velocities.
    pub fn nu_c(&self) -> f64 {
        self.nu * self.c
    }

    /// Damping rate of the packet centre.
    pub fn center_damping(&self) -> f64 {
        match self.damping {
            DampingForm::Ehrenfest => self.nu,
            DampingForm::ScaledFriction => self.nu * self.c,
        }
    }

    /// Coefficient of `q̇` in `ħ Ṡ₀`, i.e. `−ν m (1 − c)` or zero.
    pub fn action_friction(&self) -> f64 {
        match self.damping {
            DampingForm::Ehrenfest => 0.0,
            DampingForm::ScaledFriction => -self.nu * self.m * (1.0 - self.c),
        }
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            m: 1.0,
            hbar: 1.0,
            nu: 0.0,
            c: 0.0,
            damping: DampingForm::Ehrenfest,
        }
    }
}

fn check(field: &'static str, value: f64, ok: bool, expected: &'static str) -> Result<(), ModelError> {
    if ok {
        Ok(())
    } else {
        Err(ModelError::OutOfRange {
            field,
            value,
            expected,
        })
    }
}

/// An external potential with analytic first and second derivatives.
pub trait Potential: Send + Sync {
    fn value(&self, x: f64, t: f64) -> f64;
    fn d1(&self, x: f64, t: f64) -> f64;
    fn d2(&self, x: f64, t: f64) -> f64;

    /// `true` if `V` is a polynomial of degree at most two in `x` at every `t`.
    /// The Gaussian packet is then an exact solution and the centre equation
    /// is linear.
    fn is_quadratic(&self) -> bool {
        false
    }
}

impl<P: Potential + ?Sized> Potential for &P {
    fn value(&self, x: f64, t: f64) -> f64 {
        (**self).value(x, t)
    }
    fn d1(&self, x: f64, t: f64) -> f64 {
        (**self).d1(x, t)
    }
    fn d2(&self, x: f64, t: f64) -> f64 {
        (**self).d2(x, t)
    }
    fn is_quadratic(&self) -> bool {
        (**self).is_quadratic()
    }
}

/// V ≡ 0.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Free;

impl Potential for Free {
    fn value(&self, _x: f64, _t: f64) -> f64 {
        0.0
    }
    fn d1(&self, _x: f64, _t: f64) -> f64 {
        0.0
    }
    fn d2(&self, _x: f64, _t: f64) -> f64 {
        0.0
    }
    fn is_quadratic(&self) -> bool {
        true
    }
}

/// Constant force `F`: V = −F·x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Linear {
    pub force: f64,
}

impl Potential for Linear {
    fn value(&self, x: f64, _t: f64) -> f64 {
        -self.force * x
    }
    fn d1(&self, _x: f64, _t: f64) -> f64 {
        -self.force
    }
    fn d2(&self, _x: f64, _t: f64) -> f64 {
        0.0
    }
    fn is_quadratic(&self) -> bool {
        true
    }
}

/// V = ½ m ω² x².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Harmonic {
    pub mass: f64,
    pub omega: f64,
}

impl Harmonic {
    pub fn new(mass: f64, omega: f64) -> Result<Self, ModelError> {
        check("mass", mass, mass.is_finite() && mass > 0.0, "a finite value > 0")?;
        check(
            "omega",
            omega,
            omega.is_finite() && omega > 0.0,
            "a finite value > 0",
        )?;
        Ok(Harmonic { mass, omega })
    }

    fn stiffness(&self) -> f64 {
        self.mass * self.omega * self.omega
    }
}

impl Potential for Harmonic {
    fn value(&self, x: f64, _t: f64) -> f64 {
        0.5 * self.stiffness() * x * x
    }
    fn d1(&self, x: f64, _t: f64) -> f64 {
        self.stiffness() * x
    }
    fn d2(&self, _x: f64, _t: f64) -> f64 {
        self.stiffness()
    }
    fn is_quadratic(&self) -> bool {
        true
    }
}

/// The shipped potentials behind one type, for configuration-driven callers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShippedPotential {
    Free(Free),
    Linear(Linear),
    Harmonic(Harmonic),
}

impl ShippedPotential {
    pub fn kind(&self) -> &'static str {
        match self {
            ShippedPotential::Free(_) => "free",
            ShippedPotential::Linear(_) => "linear",
            ShippedPotential::Harmonic(_) => "harmonic",
        }
    }

    fn inner(&self) -> &dyn Potential {
        match self {
            ShippedPotential::Free(p) => p,
            ShippedPotential::Linear(p) => p,
            ShippedPotential::Harmonic(p) => p,
        }
    }
}

impl Potential for ShippedPotential {
    fn value(&self, x: f64, t: f64) -> f64 {
        self.inner().value(x, t)
    }
    fn d1(&self, x: f64, t: f64) -> f64 {
        self.inner().d1(x, t)
    }
    fn d2(&self, x: f64, t: f64) -> f64 {
        self.inner().d2(x, t)
    }
    fn is_quadratic(&self) -> bool {
        self.inner().is_quadratic()
    }
}

/// Worst deviation between analytic and finite-difference derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialReport {
    pub step: f64,
    pub max_dev_d1: f64,
    pub max_dev_d2: f64,
    pub points: usize,
}

/// Compares `d1`, `d2` against central differences of `value` with step `h`.
///
/// Deviations are relative with a unit floor, `|fd − exact| / max(|exact|, 1)`,
/// so that vanishing derivatives do not amplify round-off.
pub fn potential_checks<P: Potential + ?Sized>(
    potential: &P,
    points: &[(f64, f64)],
    h: f64,
) -> PotentialReport {
    let mut max_dev_d1 = 0.0_f64;
    let mut max_dev_d2 = 0.0_f64;
    for &(x, t) in points {
        let vp = potential.value(x + h, t);
        let v0 = potential.value(x, t);
        let vm = potential.value(x - h, t);
        let fd1 = (vp - vm) / (2.0 * h);
        let fd2 = (vp - 2.0 * v0 + vm) / (h * h);
        let d1 = potential.d1(x, t);
        let d2 = potential.d2(x, t);
        max_dev_d1 = max_dev_d1.max((fd1 - d1).abs() / d1.abs().max(1.0));
        max_dev_d2 = max_dev_d2.max((fd2 - d2).abs() / d2.abs().max(1.0));
    }
    PotentialReport {
        step: h,
        max_dev_d1,
        max_dev_d2,
        points: points.len(),
    }
}
