//! Flat `key = value` run configuration.

use std::path::PathBuf;

use thiserror::Error;

use crate::cases::{CaseName, DropParams, DtRule};
use crate::reconstruct::{LimiterConfig, LimiterMode};
use crate::schemes::{DtPolicy, SchemeConfig, SchemeKind};

/// Environment variable that overrides the output directory of the config.
pub const OUTPUT_DIR_ENV: &str = "MAC_SWE_OUTPUT_DIR";

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected 'key = value', got '{text}'")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value '{value}' for '{key}': {reason}")]
    BadValue { line: usize, key: String, value: String, reason: String },
    #[error("line {line}: duplicate key '{key}'")]
    Duplicate { line: usize, key: String },
    #[error("missing required key 'case'")]
    MissingCase,
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// How `δt` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtSetting {
    /// The case preset, proportional to the mesh size.
    Rule(DtRule),
    Fixed(f64),
    /// Fraction of the positivity limit, recomputed every step.
    Cfl(f64),
}

/// When snapshots are written (the final state is always written).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cadence {
    Never,
    Steps(usize),
    Time(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Vtk,
    Csv,
}

/// When a run stops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stop {
    Time(f64),
    Steps(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub case: CaseName,
    pub meshes: Vec<usize>,
    pub scheme: SchemeKind,
    pub g: f64,
    pub zeta_stab: f64,
    pub h_floor: f64,
    pub limiter: LimiterConfig,
    pub dt: DtSetting,
    pub stop: Stop,
    pub output_dir: PathBuf,
    pub cadence: Cadence,
    pub formats: Vec<OutputFormat>,
}

impl RunConfig {
    /// Scheme configuration for a mesh of size `δ_M` and smallest width `δx`.
    pub fn scheme_config(&self, mesh: &crate::mesh::MacMesh) -> SchemeConfig {
        let policy = match self.dt {
            DtSetting::Rule(rule) => DtPolicy::Fixed(rule.dt(mesh)),
            DtSetting::Fixed(dt) => DtPolicy::Fixed(dt),
            DtSetting::Cfl(c) => DtPolicy::CflFraction(c),
        };
        let mut cfg = SchemeConfig::new(self.scheme, self.g, policy);
        cfg.limiter = self.limiter;
        cfg.zeta_stab = self.zeta_stab;
        cfg.h_floor = self.h_floor;
        cfg
    }

    /// Applies the output directory override from the environment, if set.
    pub fn apply_env(&mut self) {
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV).filter(|d| !d.is_empty()) {
            self.output_dir = PathBuf::from(dir);
        }
    }

    /// The configuration as `key = value` lines that parse back to `self`.
    pub fn to_text(&self) -> String {
        let meshes: Vec<String> = self.meshes.iter().map(|n| n.to_string()).collect();
        let mut out = vec![
            format!("case = {}", self.case),
            format!("mesh = {}", meshes.join(",")),
            format!("scheme = {}", self.scheme),
            format!("g = {:?}", self.g),
            format!("zeta_stab = {:?}", self.zeta_stab),
            format!("h_floor = {:?}", self.h_floor),
        ];
        let mode = match self.limiter.mode {
            LimiterMode::Upwind => "upwind",
            LimiterMode::Muscl => "muscl",
            LimiterMode::VanLeer => "van_leer",
        };
        out.push(format!("limiter = {mode}"));
        out.push(format!("zeta_plus = {:?}", self.limiter.zeta_plus));
        out.push(format!("zeta_minus = {:?}", self.limiter.zeta_minus));
        out.push(format!("entropy_safe = {}", self.limiter.entropy_safe));
        match self.dt {
            DtSetting::Rule(DtRule::MeshSizeOver(k)) => out.push(format!("dt_mesh_divisor = {k:?}")),
            DtSetting::Rule(DtRule::CellWidthOver(k)) => out.push(format!("dt_width_divisor = {k:?}")),
            DtSetting::Fixed(dt) => out.push(format!("dt = {dt:?}")),
            DtSetting::Cfl(c) => out.push(format!("cfl = {c:?}")),
        }
        match self.stop {
            Stop::Time(t) => out.push(format!("t_end = {t:?}")),
            Stop::Steps(n) => out.push(format!("steps = {n}")),
        }
        out.push(format!("output_dir = {}", self.output_dir.display()));
        match self.cadence {
            Cadence::Never => out.push("snapshot_every_steps = 0".into()),
            Cadence::Steps(n) => out.push(format!("snapshot_every_steps = {n}")),
            Cadence::Time(t) => out.push(format!("snapshot_every_time = {t:?}")),
        }
        let formats: Vec<&str> = self.formats.iter().map(|f| if *f == OutputFormat::Vtk { "vtk" } else { "csv" }).collect();
        out.push(format!("formats = {}", formats.join(",")));
        out.join("\n") + "\n"
    }
}

const KEYS: &[&str] = &[
    "case",
    "mesh",
    "scheme",
    "g",
    "zeta_stab",
    "h_floor",
    "limiter",
    "zeta_plus",
    "zeta_minus",
    "entropy_safe",
    "dt",
    "cfl",
    "dt_mesh_divisor",
    "dt_width_divisor",
    "t_end",
    "steps",
    "output_dir",
    "snapshot_every_steps",
    "snapshot_every_time",
    "formats",
];

struct Entry {
    line: usize,
    key: String,
    value: String,
}

impl Entry {
    fn bad(&self, reason: impl Into<String>) -> ConfigError {
        ConfigError::BadValue { line: self.line, key: self.key.clone(), value: self.value.clone(), reason: reason.into() }
    }

    fn float(&self) -> Result<f64, ConfigError> {
        let v: f64 = self.value.parse().map_err(|_| self.bad("not a number"))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.bad("not finite"))
        }
    }

    fn positive(&self) -> Result<f64, ConfigError> {
        let v = self.float()?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(self.bad("must be positive"))
        }
    }

    fn count(&self) -> Result<usize, ConfigError> {
        self.value.parse().map_err(|_| self.bad("not a nonnegative integer"))
    }

    fn flag(&self) -> Result<bool, ConfigError> {
        match self.value.to_ascii_lowercase().as_str() {
            "true" | "yes" | "1" | "on" => Ok(true),
            "false" | "no" | "0" | "off" => Ok(false),
            _ => Err(self.bad("expected true or false")),
        }
    }
}

const EXCLUSIVE: &[&[&str]] = &[
    &["dt", "cfl", "dt_mesh_divisor", "dt_width_divisor"],
    &["t_end", "steps"],
    &["snapshot_every_steps", "snapshot_every_time"],
];

/// Appends `key=value` overrides to `text`, dropping earlier lines that set the
/// same key or a key it excludes (for instance `steps` drops `t_end`).
pub fn with_overrides(text: &str, overrides: &[String]) -> Result<String, ConfigError> {
    let mut replaced: Vec<String> = Vec::new();
    let mut extra = String::new();
    for (idx, o) in overrides.iter().enumerate() {
        let Some((k, v)) = o.split_once('=') else {
            return Err(ConfigError::Syntax { line: idx + 1, text: o.clone() });
        };
        let key = k.trim().to_ascii_lowercase();
        match EXCLUSIVE.iter().find(|group| group.contains(&key.as_str())) {
            Some(group) => replaced.extend(group.iter().map(|g| g.to_string())),
            None => replaced.push(key.clone()),
        }
        extra.push_str(&format!("{key} = {}\n", v.trim()));
    }
    let mut out = String::new();
    for raw in text.lines() {
        let key = raw.split('#').next().unwrap_or("").split('=').next().unwrap_or("").trim().to_ascii_lowercase();
        // keep line numbering stable for error messages
        if replaced.contains(&key) {
            out.push('\n');
        } else {
            out.push_str(raw);
            out.push('\n');
        }
    }
    // later overrides win over earlier ones
    let mut seen: Vec<String> = Vec::new();
    let mut lines: Vec<&str> = extra.lines().collect();
    lines.reverse();
    let mut kept = Vec::new();
    for l in lines {
        let key = l.split('=').next().unwrap_or("").trim().to_string();
        let group: Vec<String> = match EXCLUSIVE.iter().find(|g| g.contains(&key.as_str())) {
            Some(g) => g.iter().map(|s| s.to_string()).collect(),
            None => vec![key.clone()],
        };
        if !seen.contains(&key) {
            kept.push(l);
        }
        seen.extend(group);
    }
    kept.reverse();
    for l in kept {
        out.push_str(l);
        out.push('\n');
    }
    Ok(out)
}

/// Parses a configuration. Lines are `key = value`; `#` starts a comment;
/// blank lines are ignored. Unset keys take the case presets.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut entries: Vec<Entry> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((k, v)) = content.split_once('=') else {
            return Err(ConfigError::Syntax { line, text: content.to_string() });
        };
        let key = k.trim().to_ascii_lowercase();
        let value = v.trim().to_string();
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Syntax { line, text: content.to_string() });
        }
        if !KEYS.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey { line, key });
        }
        if entries.iter().any(|e| e.key == key) {
            return Err(ConfigError::Duplicate { line, key });
        }
        entries.push(Entry { line, key, value });
    }
    let get = |key: &str| entries.iter().find(|e| e.key == key);

    let case_entry = get("case").ok_or(ConfigError::MissingCase)?;
    let case: CaseName = case_entry.value.parse().map_err(|e: crate::cases::CaseError| case_entry.bad(e.to_string()))?;
    let d = case.defaults();

    let meshes = match get("mesh") {
        Some(e) => {
            let list: Result<Vec<usize>, _> = e.value.split(',').map(|s| s.trim().parse::<usize>()).collect();
            let list = list.map_err(|_| e.bad("expected a comma-separated list of positive integers"))?;
            if list.is_empty() || list.contains(&0) {
                return Err(e.bad("resolutions must be positive"));
            }
            list
        }
        None => vec![d.resolution],
    };
    let scheme = match get("scheme") {
        Some(e) => e.value.parse().map_err(|err: String| e.bad(err))?,
        None => SchemeKind::HeunMuscl,
    };
    let g = get("g").map(Entry::positive).transpose()?.unwrap_or(d.g);
    let zeta_stab = match get("zeta_stab") {
        Some(e) => {
            let v = e.float()?;
            if v < 0.0 {
                return Err(e.bad("must be nonnegative"));
            }
            v
        }
        None => d.zeta,
    };
    let h_floor = match get("h_floor") {
        Some(e) => {
            let v = e.float()?;
            if v < 0.0 {
                return Err(e.bad("must be nonnegative"));
            }
            v
        }
        None => d.h_floor,
    };

    let mut limiter = match get("limiter") {
        Some(e) => match e.value.to_ascii_lowercase().replace('-', "_").as_str() {
            "muscl" => LimiterConfig::muscl(),
            "van_leer" | "vanleer" => LimiterConfig::van_leer(1.0, 1.0),
            "upwind" => LimiterConfig::upwind(),
            _ => return Err(e.bad("expected muscl, van_leer or upwind")),
        },
        None => LimiterConfig::muscl(),
    };
    for (key, slot) in [("zeta_plus", 0), ("zeta_minus", 1)] {
        if let Some(e) = get(key) {
            let v = e.float()?;
            if !(0.0..=2.0).contains(&v) {
                return Err(e.bad("must lie in [0, 2]"));
            }
            if slot == 0 {
                limiter.zeta_plus = v;
            } else {
                limiter.zeta_minus = v;
            }
        }
    }
    if let Some(e) = get("entropy_safe") {
        limiter = limiter.entropy_safe(e.flag()?);
    }

    let dt_keys: Vec<&Entry> = ["dt", "cfl", "dt_mesh_divisor", "dt_width_divisor"].iter().filter_map(|k| get(k)).collect();
    if dt_keys.len() > 1 {
        let e = dt_keys[1];
        return Err(e.bad("only one of dt, cfl, dt_mesh_divisor, dt_width_divisor may be set"));
    }
    let dt = match dt_keys.first() {
        None => DtSetting::Rule(d.dt_rule),
        Some(e) => match e.key.as_str() {
            "dt" => DtSetting::Fixed(e.positive()?),
            "cfl" => {
                let c = e.positive()?;
                if c > 1.0 {
                    return Err(e.bad("must lie in (0, 1]"));
                }
                DtSetting::Cfl(c)
            }
            "dt_mesh_divisor" => DtSetting::Rule(DtRule::MeshSizeOver(e.positive()?)),
            _ => DtSetting::Rule(DtRule::CellWidthOver(e.positive()?)),
        },
    };

    let stop = match (get("t_end"), get("steps")) {
        (Some(_), Some(e)) => return Err(e.bad("t_end and steps are mutually exclusive")),
        (Some(e), None) => Stop::Time(e.positive()?),
        (None, Some(e)) => {
            let n = e.count()?;
            if n == 0 {
                return Err(e.bad("must be positive"));
            }
            Stop::Steps(n)
        }
        (None, None) if case == CaseName::ParaboloidDrop => Stop::Time(DropParams::new(g).period3()),
        (None, None) => Stop::Time(d.t_end),
    };

    let output_dir = get("output_dir").map(|e| PathBuf::from(&e.value)).unwrap_or_else(|| PathBuf::from("output"));
    let cadence = match (get("snapshot_every_steps"), get("snapshot_every_time")) {
        (Some(_), Some(e)) => return Err(e.bad("snapshot_every_steps and snapshot_every_time are mutually exclusive")),
        (Some(e), None) => match e.count()? {
            0 => Cadence::Never,
            n => Cadence::Steps(n),
        },
        (None, Some(e)) => Cadence::Time(e.positive()?),
        (None, None) => Cadence::Never,
    };
    let formats = match get("formats") {
        Some(e) => {
            let mut out = Vec::new();
            for f in e.value.split(',').map(|s| s.trim().to_ascii_lowercase()) {
                let f = match f.as_str() {
                    "vtk" => OutputFormat::Vtk,
                    "csv" => OutputFormat::Csv,
                    _ => return Err(e.bad("expected a list of vtk and csv")),
                };
                if !out.contains(&f) {
                    out.push(f);
                }
            }
            out
        }
        None => vec![OutputFormat::Vtk, OutputFormat::Csv],
    };

    let cfg = RunConfig { case, meshes, scheme, g, zeta_stab, h_floor, limiter, dt, stop, output_dir, cadence, formats };
    cfg.limiter.validate().map_err(ConfigError::Invalid)?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vortex_defaults() {
        let c = parse_config("case = vortex\nmesh = 64").unwrap();
        assert_eq!(c.case, CaseName::Vortex);
        assert_eq!(c.meshes, vec![64]);
        assert_eq!(c.scheme, SchemeKind::HeunMuscl);
        assert_eq!(c.g, 1.0);
        assert_eq!(c.dt, DtSetting::Rule(DtRule::MeshSizeOver(8.0)));
        assert_eq!(c.stop, Stop::Time(0.8));
        assert_eq!(c.limiter, LimiterConfig::muscl());
    }

    #[test]
    fn empty_is_missing_case() {
        assert_eq!(parse_config(""), Err(ConfigError::MissingCase));
        assert_eq!(parse_config("# only a comment\n\n"), Err(ConfigError::MissingCase));
    }

    #[test]
    fn overrides() {
        let c = parse_config("case = circular-dam-break\nzeta_stab = 0.3").unwrap();
        assert_eq!(c.zeta_stab, 0.3);
        let c = parse_config("case = circular-dam-break").unwrap();
        assert_eq!(c.zeta_stab, 0.1);
        let c = parse_config("case = riemann  # dam break\nlimiter = van_leer\nzeta_plus = 2\nentropy_safe = yes\nsteps = 5").unwrap();
        assert_eq!(c.limiter, LimiterConfig::van_leer(2.0, 1.0).entropy_safe(true));
        assert_eq!(c.stop, Stop::Steps(5));
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert_eq!(parse_config("case = vortex\n\nfoo = 1"), Err(ConfigError::UnknownKey { line: 3, key: "foo".into() }));
        assert!(matches!(parse_config("case = vortex\nmesh = abc"), Err(ConfigError::BadValue { line: 2, .. })));
        assert!(matches!(parse_config("case = vortex\ng = -1"), Err(ConfigError::BadValue { line: 2, .. })));
        assert!(matches!(parse_config("case = nowhere"), Err(ConfigError::BadValue { line: 1, .. })));
        assert!(matches!(parse_config("case vortex"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!(parse_config("case = vortex\ncase = drop"), Err(ConfigError::Duplicate { line: 2, .. })));
        assert!(matches!(parse_config("case = vortex\ndt = 0.1\ncfl = 0.5"), Err(ConfigError::BadValue { line: 3, .. })));
    }

    #[test]
    fn text_round_trip() {
        for text in [
            "case = drop\nscheme = euler_upwind\nmesh = 32,64\nsnapshot_every_time = 0.5\nformats = csv",
            "case = partial-dam-break\ncfl = 0.9\nsteps = 3\noutput_dir = /tmp/x",
            "case = riemann\ndt_width_divisor = 20\nlimiter = van_leer\nzeta_minus = 0.5",
        ] {
            let c = parse_config(text).unwrap();
            assert_eq!(parse_config(&c.to_text()).unwrap(), c);
        }
    }

    #[test]
    fn drop_period_follows_gravity() {
        let c = parse_config("case = drop\ng = 1").unwrap();
        assert_eq!(c.stop, Stop::Time(DropParams::new(1.0).period3()));
    }

    #[test]
    fn overrides_replace_keys_and_groups() {
        let base = "case = vortex\nmesh = 32\nt_end = 0.5 # short\ndt = 0.01\n";
        let text = with_overrides(base, &["mesh=64".into(), "steps = 3".into(), "cfl=0.5".into(), "mesh=16".into()]).unwrap();
        let cfg = parse_config(&text).unwrap();
        assert_eq!(cfg.meshes, vec![16]);
        assert_eq!(cfg.stop, Stop::Steps(3));
        assert_eq!(cfg.dt, DtSetting::Cfl(0.5));
        assert!(matches!(with_overrides(base, &["mesh".into()]), Err(ConfigError::Syntax { .. })));
        let err = parse_config(&with_overrides("case = vortex\nbogus = 1\n", &["mesh=8".into()]).unwrap()).unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKey { line: 2, .. }));
    }
}
