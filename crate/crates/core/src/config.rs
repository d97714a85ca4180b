//! Run configuration in TOML. Unknown keys are rejected, every block has
//! defaults, and the effective configuration can be echoed and re-read.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{Frame, Ramp};
use crate::greens::LIGHT_GUARD;
use crate::interaction::{AtomModel, Environment, SumOptions};
use crate::lattice::{LatticeSpec, LevelScheme, Transitions};
use crate::layered::{
    omega_from_wavelength_nm, Drude, PermittivityModel, PermittivityTable, SurfaceEnvironment,
    TableAxis,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("could not parse config: {0}")]
    Parse(String),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("bad override `{0}` (expected key.path=value)")]
    Override(String),
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        reason: reason.into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Bands,
    Chern,
    Strip,
    Evolve,
    GreensProbe,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Square,
    Triangular,
    NbSquare,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatticeBlock {
    pub family: Family,
    /// Spacing in λ.
    pub a: f64,
    /// Detuning of the second nb-square sublattice, Γ0.
    pub detuning: f64,
}

impl Default for LatticeBlock {
    fn default() -> Self {
        LatticeBlock {
            family: Family::Triangular,
            a: 0.5,
            detuning: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeBlock {
    pub transitions: Transitions,
    /// μB in Γ0.
    pub zeeman: f64,
}

impl Default for SchemeBlock {
    fn default() -> Self {
        SchemeBlock {
            transitions: Transitions::Sigma,
            zeeman: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AtomsBlock {
    /// Position spread in units of the lattice spacing; 0 means point atoms.
    pub a_ho: f64,
    /// Width of the point-atom regulator in λ; automatic when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_reg: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvironmentKind {
    #[default]
    FreeSpace,
    Surface,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableBlock {
    pub path: PathBuf,
    #[serde(default = "default_axis")]
    pub axis: TableAxis,
}

fn default_axis() -> TableAxis {
    TableAxis::WavelengthNm
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvironmentBlock {
    pub kind: EnvironmentKind,
    pub eps_d: f64,
    /// Atom–surface distance in λ.
    pub height: f64,
    /// Metal permittivity at ω_A, given directly.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_m: Option<f64>,
    /// Atomic wavelength, needed to evaluate a Drude model or a table.
    pub wavelength_nm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drude: Option<Drude>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<TableBlock>,
}

impl Default for EnvironmentBlock {
    fn default() -> Self {
        EnvironmentBlock {
            kind: EnvironmentKind::FreeSpace,
            eps_d: 1.0,
            height: 0.1,
            eps_m: None,
            wavelength_nm: 737.0,
            drude: None,
            table: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsBlock {
    /// Reciprocal cutoff in units of 2π/a; `0` selects the automatic cutoff.
    pub g_max: f64,
    /// Zone grid for Chern numbers.
    pub grid: usize,
    pub light_guard: f64,
    pub shell_tolerance: f64,
    /// Waypoints of the band path.
    pub path: Vec<String>,
    pub path_points: usize,
    /// Largest dense matrix dimension.
    pub memory_cap: usize,
    /// Report the band gap only outside the light cone.
    pub gap_outside_light_cone: bool,
}

impl Default for NumericsBlock {
    fn default() -> Self {
        NumericsBlock {
            g_max: 30.0,
            grid: crate::topology::DEFAULT_GRID,
            light_guard: LIGHT_GUARD,
            shell_tolerance: 1e-8,
            path: vec![],
            path_points: 200,
            memory_cap: 8192,
            gap_outside_light_cone: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StripBlock {
    /// Sites along the periodic direction (even).
    pub m: usize,
    /// Rows across the ribbon.
    pub n: usize,
    /// Energies (Γ0) at which edge-branch crossings are counted.
    pub levels: Vec<f64>,
    /// Largest energy step (Γ0) joining edge modes in neighbouring k_x bins.
    pub max_jump: f64,
}

impl Default for StripBlock {
    fn default() -> Self {
        StripBlock {
            m: 80,
            n: 40,
            levels: vec![],
            max_jump: 5.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriveBlock {
    /// Patch size in sites along x and y.
    pub nx: usize,
    pub ny: usize,
    /// Driven site as (i, j); defaults to the middle of the bottom edge.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub site: Option<[usize; 2]>,
    /// Sites (i, j) removed from the patch.
    pub removed: Vec<[usize; 2]>,
    /// Ω in Γ0.
    pub rabi: f64,
    /// ω_L − ω_A in Γ0.
    pub detuning: f64,
    pub ramp: Ramp,
    pub frame: Frame,
    pub snapshots: Vec<f64>,
    pub tolerance: f64,
    /// Depth in rows of the perimeter band counted as edge.
    pub edge_width: usize,
    /// Sites within this many spacings of the driven site count as source.
    pub source_radius: f64,
    /// Whether counter-clockwise travel counts as forward.
    pub forward_ccw: bool,
}

impl Default for DriveBlock {
    fn default() -> Self {
        DriveBlock {
            nx: 20,
            ny: 20,
            site: None,
            removed: vec![],
            rabi: 0.1,
            detuning: 18.0,
            ramp: Ramp::default(),
            frame: Frame::Rotating,
            snapshots: vec![11.1],
            tolerance: 1e-8,
            edge_width: 4,
            source_radius: 2.0,
            forward_ccw: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeBlock {
    /// In-plane momenta in units of k, each `[px, py]`.
    pub momenta: Vec<[f64; 2]>,
}

impl Default for ProbeBlock {
    fn default() -> Self {
        ProbeBlock {
            momenta: vec![[0.0, 0.0], [0.5, 0.0], [1.5, 0.0], [3.0, 1.0]],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    pub dir: PathBuf,
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock {
            dir: PathBuf::from("out"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    #[serde(default)]
    pub lattice: LatticeBlock,
    #[serde(default)]
    pub scheme: SchemeBlock,
    #[serde(default)]
    pub atoms: AtomsBlock,
    #[serde(default)]
    pub environment: EnvironmentBlock,
    #[serde(default)]
    pub numerics: NumericsBlock,
    #[serde(default)]
    pub strip: StripBlock,
    #[serde(default)]
    pub drive: DriveBlock,
    #[serde(default)]
    pub probe: ProbeBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

/// Parse and validate.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    parse_with_overrides(text, &[])
}

/// Parse, apply `key.path=value` overrides, then validate.
pub fn parse_with_overrides(text: &str, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let mut value: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    for o in overrides {
        apply_override(&mut value, o)?;
    }
    let cfg: RunConfig = toml::Value::Table(value)
        .try_into()
        .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

fn apply_override(root: &mut toml::Table, o: &str) -> Result<(), ConfigError> {
    let (key, raw) = o.split_once('=').ok_or_else(|| ConfigError::Override(o.to_string()))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::Override(o.to_string()));
    }
    // Use TOML literal syntax when it parses, otherwise take the text as a string.
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let mut table = root;
    for p in &parts[..parts.len() - 1] {
        let entry = table
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| ConfigError::Override(o.to_string()))?;
    }
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<RunConfig, crate::Error> {
    let text = std::fs::read_to_string(path).map_err(|source| crate::Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut cfg = parse_with_overrides(&text, overrides)?;
    if let Some(t) = &mut cfg.environment.table {
        if t.path.is_relative() {
            if let Some(dir) = path.parent() {
                t.path = dir.join(&t.path);
            }
        }
        if !t.path.exists() {
            return Err(invalid("environment.table.path", format!("{} does not exist", t.path.display())).into());
        }
    }
    Ok(cfg)
}

fn positive(key: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(key, format!("must be a positive number, got {v}")))
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        positive("lattice.a", self.lattice.a)?;
        if !self.lattice.detuning.is_finite() {
            return Err(invalid("lattice.detuning", "must be finite"));
        }
        if self.lattice.detuning != 0.0 && self.lattice.family != Family::NbSquare {
            return Err(invalid("lattice.detuning", "only the nb-square family has a second sublattice"));
        }
        if !self.scheme.zeeman.is_finite() {
            return Err(invalid("scheme.zeeman", "must be finite"));
        }
        if !(self.atoms.a_ho >= 0.0 && self.atoms.a_ho < 1.0) {
            return Err(invalid("atoms.a_ho", "must lie in [0, 1) lattice spacings"));
        }
        if let Some(r) = self.atoms.a_reg {
            positive("atoms.a_reg", r)?;
        }
        let env = &self.environment;
        if !(env.eps_d >= 1.0 && env.eps_d.is_finite()) {
            return Err(invalid("environment.eps_d", "must be ≥ 1"));
        }
        if env.kind == EnvironmentKind::Surface {
            positive("environment.height", env.height)?;
            positive("environment.wavelength_nm", env.wavelength_nm)?;
            if env.eps_m.is_none() && env.drude.is_none() && env.table.is_none() {
                return Err(invalid("environment", "a surface needs eps_m, a drude block or a table"));
            }
            if env.eps_m.is_some() && (env.drude.is_some() || env.table.is_some()) {
                return Err(invalid("environment.eps_m", "give either eps_m or a permittivity model, not both"));
            }
            if self.atoms.a_ho > 0.0 {
                return Err(invalid("atoms.a_ho", "position spread is only supported in free space"));
            }
        }
        let n = &self.numerics;
        if !(n.g_max >= 0.0 && n.g_max.is_finite()) {
            return Err(invalid("numerics.g_max", "must be ≥ 0 (0 = automatic)"));
        }
        if n.grid < 4 {
            return Err(invalid("numerics.grid", "must be at least 4"));
        }
        positive("numerics.light_guard", n.light_guard)?;
        positive("numerics.shell_tolerance", n.shell_tolerance)?;
        if n.path_points < 2 {
            return Err(invalid("numerics.path_points", "must be at least 2"));
        }
        if n.path.len() == 1 {
            return Err(invalid("numerics.path", "needs at least two waypoints"));
        }
        if self.mode == Mode::Strip {
            if self.lattice.family == Family::Triangular {
                return Err(invalid("lattice.family", "strips are built for square lattices"));
            }
            if self.strip.m < 8 || self.strip.m % 2 != 0 || self.strip.n < 8 {
                return Err(invalid("strip", "need even m ≥ 8 and n ≥ 8"));
            }
        }
        let d = &self.drive;
        if self.mode == Mode::Evolve {
            if self.lattice.family == Family::Triangular {
                return Err(invalid("lattice.family", "rectangular patches need a square lattice"));
            }
            if d.nx < 2 || d.ny < 2 {
                return Err(invalid("drive.nx", "patch must be at least 2 × 2"));
            }
            if let Some([i, j]) = d.site {
                if i >= d.nx || j >= d.ny {
                    return Err(invalid("drive.site", "outside the patch"));
                }
            }
            if d.snapshots.is_empty() || d.snapshots.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
                return Err(invalid("drive.snapshots", "need at least one finite time ≥ 0"));
            }
            positive("drive.tolerance", d.tolerance)?;
            positive("drive.ramp.width", d.ramp.width)?;
            if !d.rabi.is_finite() || !d.detuning.is_finite() {
                return Err(invalid("drive", "rabi and detuning must be finite"));
            }
        }
        if self.mode == Mode::GreensProbe && env.kind != EnvironmentKind::Surface {
            return Err(invalid("environment.kind", "greens-probe needs a surface environment"));
        }
        Ok(())
    }

    /// Normalized TOML of the effective configuration.
    pub fn echo(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn lattice_spec(&self) -> crate::Result<LatticeSpec> {
        let l = &self.lattice;
        match l.family {
            Family::Square => LatticeSpec::square(l.a),
            Family::Triangular => LatticeSpec::triangular(l.a),
            Family::NbSquare => LatticeSpec::nb_square(l.a, l.detuning),
        }
    }

    pub fn level_scheme(&self) -> LevelScheme {
        LevelScheme {
            transitions: self.scheme.transitions,
            zeeman: self.scheme.zeeman,
        }
    }

    pub fn atom_model(&self) -> AtomModel {
        if self.atoms.a_ho > 0.0 {
            AtomModel::from_spacing_fraction(self.atoms.a_ho, self.lattice.a)
        } else {
            AtomModel::Point {
                a_reg: self.atoms.a_reg,
            }
        }
    }

    /// Metal permittivity at ω_A. A table takes precedence over a Drude block.
    pub fn eps_m(&self) -> crate::Result<f64> {
        let env = &self.environment;
        if let Some(e) = env.eps_m {
            return Ok(e);
        }
        if env.table.is_some() && env.drude.is_some() {
            log::warn!("both a permittivity table and a Drude block are given; the table is used");
        }
        self.permittivity_model()?
            .permittivity(omega_from_wavelength_nm(env.wavelength_nm))
    }

    pub fn permittivity_model(&self) -> crate::Result<PermittivityModel> {
        let env = &self.environment;
        if let Some(t) = &env.table {
            return Ok(PermittivityModel::table(PermittivityTable::load(&t.path, t.axis)?));
        }
        match env.drude {
            Some(d) => Ok(PermittivityModel::drude(d)),
            None => Err(invalid("environment", "no permittivity model").into()),
        }
    }

    pub fn environment_model(&self) -> crate::Result<Environment> {
        let env = &self.environment;
        Ok(match env.kind {
            EnvironmentKind::FreeSpace => Environment::FreeSpace,
            EnvironmentKind::Surface => {
                Environment::Surface(SurfaceEnvironment::new(env.eps_d, self.eps_m()?, env.height)?)
            }
        })
    }

    pub fn sum_options(&self) -> SumOptions {
        let n = &self.numerics;
        SumOptions {
            g_max: (n.g_max > 0.0).then(|| n.g_max * 2.0 * std::f64::consts::PI / self.lattice.a),
            light_guard: n.light_guard,
            shell_tolerance: n.shell_tolerance,
            ..SumOptions::default()
        }
    }

    /// Band path waypoints, defaulting to the standard loop of the family.
    pub fn path(&self) -> Vec<String> {
        if !self.numerics.path.is_empty() {
            return self.numerics.path.clone();
        }
        let names: &[&str] = match self.lattice.family {
            Family::Triangular => &["G", "K", "M", "G"],
            _ => &["G", "X", "M", "G"],
        };
        names.iter().map(|s| s.to_string()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_defaults() {
        let c = parse_config("mode = \"bands\"\n[lattice]\nfamily = \"triangular\"\na = 0.5\n").unwrap();
        assert_eq!(c.atoms.a_ho, 0.0);
        assert_eq!(c.numerics.g_max, 30.0);
        assert_eq!(c.numerics.grid, 60);
        let g = c.sum_options().g_max.unwrap();
        assert!((g - 30.0 * 2.0 * std::f64::consts::PI / 0.5).abs() < 1e-12);
    }

    #[test]
    fn negative_spacing_names_key() {
        let e = parse_config("mode = \"bands\"\n[lattice]\na = -0.5\n").unwrap_err();
        assert!(matches!(&e, ConfigError::Invalid { key, .. } if key == "lattice.a"), "{e}");
    }

    #[test]
    fn unknown_key_rejected_with_location() {
        let e = parse_config("mode = \"bands\"\n[lattice]\nspacing = 0.5\n").unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("spacing"), "{msg}");
        let e = parse_config("mode = \"bands\"\n[lattice\n").unwrap_err();
        assert!(e.to_string().contains("line"), "{e}");
    }

    #[test]
    fn echo_round_trips() {
        let text = "mode = \"evolve\"\n[lattice]\nfamily = \"nb-square\"\na = 0.054\ndetuning = 30.0\n[scheme]\nzeeman = 20.0\n[drive]\nsite = [3, 0]\n";
        let c = parse_config(text).unwrap();
        let again = parse_config(&c.echo()).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn overrides_apply() {
        let c = parse_with_overrides(
            "mode = \"bands\"\n",
            &["scheme.zeeman=0.5".into(), "lattice.family=square".into(), "mode=chern".into()],
        )
        .unwrap();
        assert_eq!(c.scheme.zeeman, 0.5);
        assert_eq!(c.lattice.family, Family::Square);
        assert_eq!(c.mode, Mode::Chern);
        assert!(parse_with_overrides("mode = \"bands\"\n", &["novalue".into()]).is_err());
    }

    #[test]
    fn table_wins_over_drude() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("eps.txt");
        std::fs::write(&p, "700 -20\n800 -30\n").unwrap();
        let text = format!(
            "mode = \"bands\"\n[environment]\nkind = \"surface\"\nwavelength_nm = 750\n[environment.drude]\neps_inf = 5.0\nomega_p = 1.4e16\n[environment.table]\npath = \"{}\"\n",
            p.display()
        );
        let c = parse_config(&text).unwrap();
        let e = c.eps_m().unwrap();
        assert!(e < -20.0 && e > -30.0, "{e}");
    }
}
