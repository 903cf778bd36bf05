//! Line-oriented `section.key = value` configuration with scenario presets.
//!
//! Every key has a default; unknown keys, malformed values and invariant
//! violations are reported with file, line and key.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::elliptic::{EllipticOptions, Preconditioner};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::ldg::MaterialParams;
use crate::stepper::{Scheme, StepperOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scenario {
    /// `u = 0`, `Q` a constant uniaxial critical point.
    #[default]
    StationaryCheck,
    /// `Q = 0` inside, critical anchoring on the walls, `u = 0`.
    Quench,
    /// Critical state plus a smooth seeded perturbation vanishing on walls.
    PerturbedCritical,
    /// Critical `Q` with the manufactured divergence-free velocity.
    ManufacturedStokes,
    /// Uniform `Q` from `scenario.q_uniform` plus seeded perturbations.
    Custom,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::StationaryCheck,
        Scenario::Quench,
        Scenario::PerturbedCritical,
        Scenario::ManufacturedStokes,
        Scenario::Custom,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::StationaryCheck => "stationary_check",
            Scenario::Quench => "quench",
            Scenario::PerturbedCritical => "perturbed_critical",
            Scenario::ManufacturedStokes => "manufactured_stokes",
            Scenario::Custom => "custom",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Scenario::ALL.into_iter().find(|c| c.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioConfig {
    pub kind: Scenario,
    /// Amplitude of the seeded `Q` perturbation.
    pub amplitude: f64,
    /// Scale of the initial velocity.
    pub flow_amplitude: f64,
    /// Director of the uniaxial critical state.
    pub director: [f64; 3],
    /// Independent components `(xx, xy, xz, yy, yz)` for `custom`.
    pub q_uniform: [f64; 5],
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            kind: Scenario::StationaryCheck,
            amplitude: 0.1,
            flow_amplitude: 0.0,
            director: [0.0, 0.0, 1.0],
            q_uniform: [0.0; 5],
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DumpFormat {
    Vtk,
    Raw,
}

impl DumpFormat {
    pub fn name(&self) -> &'static str {
        match self {
            DumpFormat::Vtk => "vtk",
            DumpFormat::Raw => "raw",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub snapshot_every: usize,
    /// Field dump formats; the diagnostics CSV is always written.
    pub formats: Vec<DumpFormat>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("nematoflow-out"),
            snapshot_every: 10,
            formats: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub material: MaterialParams,
    pub grid: GridSpec,
    pub scenario: ScenarioConfig,
    pub stepper: StepperOptions,
    pub steps: usize,
    pub output: OutputConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            material: MaterialParams::default(),
            grid: GridSpec::unit_cube(8),
            scenario: ScenarioConfig::default(),
            stepper: StepperOptions {
                solver: EllipticOptions::default(),
                ..StepperOptions::default()
            },
            steps: 10,
            output: OutputConfig::default(),
        }
    }
}

/// One documented configuration key.
#[derive(Debug, Clone, Copy)]
pub struct KeySpec {
    pub key: &'static str,
    pub kind: &'static str,
    pub doc: &'static str,
}

const fn key(key: &'static str, kind: &'static str, doc: &'static str) -> KeySpec {
    KeySpec { key, kind, doc }
}

pub const SCHEMA: &[KeySpec] = &[
    key("material.a", "float", "bulk coefficient of tr Q²"),
    key("material.b", "float > 0", "bulk coefficient of tr Q³"),
    key("material.c", "float > 0", "bulk coefficient of (tr Q²)²"),
    key("material.L1", "float > 0", "isotropic elastic constant"),
    key("material.L2", "float", "elastic constant, L1 + L2 + L3 > 0"),
    key("material.L3", "float", "elastic constant, L1 + L2 + L3 > 0"),
    key("material.xi", "float", "flow-alignment parameter"),
    key("material.nu", "float > 0", "viscosity"),
    key("material.gamma", "float > 0", "rotational diffusion constant"),
    key("grid.n", "int or 3 ints >= 4", "cells per axis"),
    key("grid.h", "float > 0", "spacing; defaults to 1 / max(n)"),
    key("grid.origin", "3 floats", "lower box corner"),
    key("grid.bc", "3 of dirichlet|periodic", "boundary mode per axis"),
    key("scenario.kind", "stationary_check|quench|perturbed_critical|manufactured_stokes|custom", "initial data preset"),
    key("scenario.amplitude", "float", "amplitude of the Q perturbation"),
    key("scenario.flow_amplitude", "float", "scale of the initial velocity"),
    key("scenario.director", "3 floats", "director of the critical state"),
    key("scenario.q_uniform", "5 floats", "Q components xx xy xz yy yz for custom"),
    key("scenario.seed", "int", "seed of randomized initial data"),
    key("stepper.dt", "float > 0", "time step"),
    key("stepper.steps", "int", "number of steps"),
    key("stepper.scheme", "semi_implicit", "time scheme"),
    key("stepper.cfl_check", "bool", "reject steps with |u| dt / h > 0.5"),
    key("stepper.energy_guard", "none or float >= 0", "abort on relative energy growth above this"),
    key("stepper.freeze_flow", "bool", "keep u = 0"),
    key("solver.tol_rel", "float > 0", "relative residual tolerance"),
    key("solver.max_iter", "none or int", "iteration cap; defaults to 10 x unknowns"),
    key("solver.preconditioner", "none|jacobi_l1_laplacian", "elliptic preconditioner"),
    key("output.dir", "path", "output directory"),
    key("output.snapshot_every", "int >= 1", "diagnostics and dump cadence"),
    key("output.formats", "list of vtk|raw separated by spaces or commas, or none", "field dump formats"),
];

/// Items of a list value separated by whitespace and/or commas.
fn list_items(v: &str) -> impl Iterator<Item = &str> {
    v.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty())
}

fn floats<const N: usize>(v: &str) -> std::result::Result<[f64; N], String> {
    let parts: Vec<&str> = list_items(v).collect();
    if parts.len() != N {
        return Err(format!("expected {N} numbers, got {}", parts.len()));
    }
    let mut out = [0.0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.parse().map_err(|_| format!("`{p}` is not a number"))?;
    }
    Ok(out)
}

fn float(v: &str) -> std::result::Result<f64, String> {
    floats::<1>(v).map(|a| a[0])
}

fn uint(v: &str) -> std::result::Result<usize, String> {
    v.parse().map_err(|_| format!("`{v}` is not a non-negative integer"))
}

fn boolean(v: &str) -> std::result::Result<bool, String> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("`{v}` is not true or false")),
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ")
}

impl SimConfig {
    fn set(&mut self, key: &str, v: &str, explicit_h: &mut bool) -> std::result::Result<(), String> {
        let m = &mut self.material;
        match key {
            "material.a" => m.a = float(v)?,
            "material.b" => m.b = float(v)?,
            "material.c" => m.c = float(v)?,
            "material.L1" => m.l1 = float(v)?,
            "material.L2" => m.l2 = float(v)?,
            "material.L3" => m.l3 = float(v)?,
            "material.xi" => m.xi = float(v)?,
            "material.nu" => m.nu = float(v)?,
            "material.gamma" => m.gamma = float(v)?,
            "grid.n" => {
                let parts: Vec<&str> = v.split_whitespace().collect();
                self.grid.n = match parts.as_slice() {
                    [one] => [uint(one)?; 3],
                    [a, b, c] => [uint(a)?, uint(b)?, uint(c)?],
                    _ => return Err("expected one or three integers".into()),
                };
            }
            "grid.h" => {
                self.grid.h = float(v)?;
                *explicit_h = true;
            }
            "grid.origin" => self.grid.origin = floats(v)?,
            "grid.bc" => {
                let parts: Vec<&str> = v.split_whitespace().collect();
                if parts.len() != 3 {
                    return Err("expected three modes".into());
                }
                for (a, p) in parts.iter().enumerate() {
                    self.grid.periodic[a] = match *p {
                        "dirichlet" => false,
                        "periodic" => true,
                        other => return Err(format!("unknown boundary mode `{other}`")),
                    };
                }
            }
            "scenario.kind" => {
                self.scenario.kind = Scenario::from_name(v).ok_or_else(|| format!("unknown scenario `{v}`"))?;
            }
            "scenario.amplitude" => self.scenario.amplitude = float(v)?,
            "scenario.flow_amplitude" => self.scenario.flow_amplitude = float(v)?,
            "scenario.director" => self.scenario.director = floats(v)?,
            "scenario.q_uniform" => self.scenario.q_uniform = floats(v)?,
            "scenario.seed" => self.scenario.seed = v.parse().map_err(|_| format!("`{v}` is not a seed"))?,
            "stepper.dt" => self.stepper.dt = float(v)?,
            "stepper.steps" => self.steps = uint(v)?,
            "stepper.scheme" => {
                if v != "semi_implicit" {
                    return Err(format!("unknown scheme `{v}`"));
                }
                self.stepper.scheme = Scheme::SemiImplicit;
            }
            "stepper.cfl_check" => self.stepper.cfl_check = boolean(v)?,
            "stepper.energy_guard" => self.stepper.energy_guard = if v == "none" { None } else { Some(float(v)?) },
            "stepper.freeze_flow" => self.stepper.freeze_flow = boolean(v)?,
            "solver.tol_rel" => self.stepper.solver.tol_rel = float(v)?,
            "solver.max_iter" => self.stepper.solver.max_iter = if v == "none" { None } else { Some(uint(v)?) },
            "solver.preconditioner" => {
                self.stepper.solver.preconditioner = match v {
                    "none" => Preconditioner::None,
                    "jacobi_l1_laplacian" => Preconditioner::JacobiL1Laplacian,
                    _ => return Err(format!("unknown preconditioner `{v}`")),
                }
            }
            "output.dir" => self.output.dir = PathBuf::from(v),
            "output.snapshot_every" => self.output.snapshot_every = uint(v)?,
            "output.formats" => {
                self.output.formats = if v == "none" {
                    Vec::new()
                } else {
                    list_items(v)
                        .map(|f| match f {
                            "vtk" => Ok(DumpFormat::Vtk),
                            "raw" => Ok(DumpFormat::Raw),
                            other => Err(format!("unknown format `{other}`")),
                        })
                        .collect::<std::result::Result<_, _>>()?
                };
            }
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    /// `(key, value)` pairs in schema order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let m = &self.material;
        let s = &self.scenario;
        let st = &self.stepper;
        let bc: Vec<&str> = self.grid.periodic.iter().map(|&p| if p { "periodic" } else { "dirichlet" }).collect();
        let values = [
            format!("{:?}", m.a),
            format!("{:?}", m.b),
            format!("{:?}", m.c),
            format!("{:?}", m.l1),
            format!("{:?}", m.l2),
            format!("{:?}", m.l3),
            format!("{:?}", m.xi),
            format!("{:?}", m.nu),
            format!("{:?}", m.gamma),
            format!("{} {} {}", self.grid.n[0], self.grid.n[1], self.grid.n[2]),
            format!("{:?}", self.grid.h),
            join(&self.grid.origin),
            bc.join(" "),
            s.kind.name().to_string(),
            format!("{:?}", s.amplitude),
            format!("{:?}", s.flow_amplitude),
            join(&s.director),
            join(&s.q_uniform),
            s.seed.to_string(),
            format!("{:?}", st.dt),
            self.steps.to_string(),
            "semi_implicit".to_string(),
            st.cfl_check.to_string(),
            st.energy_guard.map_or("none".to_string(), |g| format!("{g:?}")),
            st.freeze_flow.to_string(),
            format!("{:?}", st.solver.tol_rel),
            st.solver.max_iter.map_or("none".to_string(), |n| n.to_string()),
            match st.solver.preconditioner {
                Preconditioner::None => "none",
                Preconditioner::JacobiL1Laplacian => "jacobi_l1_laplacian",
            }
            .to_string(),
            self.output.dir.display().to_string(),
            self.output.snapshot_every.to_string(),
            if self.output.formats.is_empty() {
                "none".to_string()
            } else {
                self.output.formats.iter().map(|f| f.name()).collect::<Vec<_>>().join(" ")
            },
        ];
        SCHEMA.iter().map(|k| k.key).zip(values).collect()
    }

    /// Serializes every key; `parse_config(&c.to_text(), ..)` returns `c`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut section = "";
        for (k, v) in self.entries() {
            let sec = k.split('.').next().unwrap_or("");
            if sec != section {
                if !section.is_empty() {
                    out.push('\n');
                }
                let _ = writeln!(out, "# {sec}");
                section = sec;
            }
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// Block invariants, with the key that most directly causes a failure.
    fn check(&self) -> std::result::Result<(), (&'static str, String)> {
        let reason = |e: Error| match e {
            Error::Invalid { reason, .. } => reason,
            other => other.to_string(),
        };
        let m = &self.material;
        if m.l1 <= 0.0 || !m.l1.is_finite() {
            return Err(("material.L1", reason(m.validate().unwrap_err())));
        }
        if let Err(e) = m.validate() {
            let key = if m.l0() <= 0.0 {
                "material.L3"
            } else if m.b <= 0.0 {
                "material.b"
            } else if m.c <= 0.0 {
                "material.c"
            } else if m.nu <= 0.0 {
                "material.nu"
            } else if m.gamma <= 0.0 {
                "material.gamma"
            } else {
                "material.a"
            };
            return Err((key, reason(e)));
        }
        if let Err(e) = self.grid.validate() {
            let key = if self.grid.n.iter().any(|&n| n < 4) { "grid.n" } else { "grid.h" };
            return Err((key, reason(e)));
        }
        if self.grid.origin.iter().any(|o| !o.is_finite()) {
            return Err(("grid.origin", "origin must be finite".into()));
        }
        if !self.grid.has_walls() && !self.stepper.freeze_flow {
            return Err(("grid.bc", "the flow solver needs at least one dirichlet axis".into()));
        }
        let d = self.scenario.director;
        if !(d.iter().map(|x| x * x).sum::<f64>() > 0.0) {
            return Err(("scenario.director", "director must be nonzero".into()));
        }
        if !self.scenario.amplitude.is_finite() {
            return Err(("scenario.amplitude", "must be finite".into()));
        }
        if !self.scenario.flow_amplitude.is_finite() {
            return Err(("scenario.flow_amplitude", "must be finite".into()));
        }
        if self.scenario.q_uniform.iter().any(|v| !v.is_finite()) {
            return Err(("scenario.q_uniform", "must be finite".into()));
        }
        if let Err(e) = self.stepper.validate() {
            let s = &self.stepper;
            let key = if !(s.dt > 0.0 && s.dt.is_finite()) {
                "stepper.dt"
            } else if s.energy_guard.is_some_and(|g| !(g >= 0.0)) {
                "stepper.energy_guard"
            } else {
                "solver.tol_rel"
            };
            return Err((key, reason(e)));
        }
        if self.output.snapshot_every == 0 {
            return Err(("output.snapshot_every", "must be at least 1".into()));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.check().map_err(|(key, reason)| Error::Config {
            file: "<config>".into(),
            line: 0,
            key: key.into(),
            reason,
        })
    }
}

/// Parses and validates configuration text. `file` is used in diagnostics.
pub fn parse_config(text: &str, file: &str) -> Result<SimConfig> {
    let mut cfg = SimConfig::default();
    let mut lines: HashMap<&'static str, usize> = HashMap::new();
    let mut explicit_h = false;
    let err = |line: usize, key: &str, reason: String| Error::Config {
        file: file.to_string(),
        line,
        key: key.to_string(),
        reason,
    };
    for (no, raw) in text.lines().enumerate() {
        let line = no + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((k, v)) = content.split_once('=') else {
            return Err(err(line, content, "expected `section.key = value`".into()));
        };
        let (k, v) = (k.trim(), v.trim());
        let Some(spec) = SCHEMA.iter().find(|s| s.key == k) else {
            return Err(err(line, k, "unknown key".into()));
        };
        if lines.insert(spec.key, line).is_some() {
            return Err(err(line, k, "duplicate key".into()));
        }
        cfg.set(k, v, &mut explicit_h).map_err(|r| err(line, k, format!("{r} (expected {})", spec.kind)))?;
    }
    if !explicit_h {
        cfg.grid.h = 1.0 / *cfg.grid.n.iter().max().unwrap_or(&1) as f64;
    }
    cfg.check()
        .map_err(|(key, reason)| err(lines.get(key).copied().unwrap_or(0), key, reason))?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
        file: path.display().to_string(),
        line: 0,
        key: String::new(),
        reason: format!("cannot read file: {e}"),
    })?;
    parse_config(&text, &path.display().to_string())
}

/// The schema as a commented configuration file holding the defaults.
pub fn schema_text() -> String {
    let defaults = SimConfig::default().entries();
    let mut out = String::from("# nematoflow configuration keys with their defaults\n");
    for (spec, (_, v)) in SCHEMA.iter().zip(defaults) {
        let _ = writeln!(out, "# {} ({})\n{} = {}", spec.doc, spec.kind, spec.key, v);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_and_entries_line_up() {
        let e = SimConfig::default().entries();
        assert_eq!(e.len(), SCHEMA.len());
        for ((k, _), s) in e.iter().zip(SCHEMA) {
            assert_eq!(*k, s.key);
        }
    }

    #[test]
    fn schema_text_parses_to_defaults() {
        let c = parse_config(&schema_text(), "schema").unwrap();
        assert_eq!(c, SimConfig::default());
    }
}
