//! Scenario configuration: flat dotted `key=value` lines with `#` comments,
//! or a JSON document with the same nested schema.
//!
//! ```text
//! # red curve
//! packet.delta = 3
//! packet.linewidth = 0.9
//! grid.t_max = 10
//! ```

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{InitialCondition, PhysicalParams, TimeGrid};

/// Series columns in their fixed output order.
pub const COLUMNS: [&str; 12] = [
    "t",
    "re_psi",
    "im_psi",
    "population",
    "shift",
    "rate",
    "valid",
    "I0",
    "Ia",
    "Ib",
    "diff_dynamic",
    "diff_static",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PacketKind {
    Exponential,
    Tabulated,
}

impl PacketKind {
    fn name(self) -> &'static str {
        match self {
            PacketKind::Exponential => "exponential",
            PacketKind::Tabulated => "tabulated",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamsBlock {
    pub gamma_1d: f64,
    pub omega0: f64,
    pub rho_1d: f64,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PacketBlock {
    pub kind: PacketKind,
    pub delta: f64,
    pub linewidth: f64,
    /// CSV table with header `x,re,im`, required for tabulated packets.
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridBlock {
    pub dt: f64,
    pub t_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialBlock {
    pub psi0: Complex64,
    pub c0: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputBlock {
    pub directory: PathBuf,
    /// Columns written to the series CSV, in canonical order; `t` is always
    /// present.
    pub series: Vec<String>,
    /// Add `omega0` to the exported shift.
    pub absolute: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub params: ParamsBlock,
    pub packet: PacketBlock,
    pub grid: GridBlock,
    pub initial: InitialBlock,
    pub output: OutputBlock,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            params: ParamsBlock {
                gamma_1d: 1.0,
                omega0: 1e6,
                rho_1d: 1.0 / (2.0 * PI),
                c: 1.0,
            },
            packet: PacketBlock {
                kind: PacketKind::Exponential,
                delta: 0.0,
                linewidth: 1.0,
                file: None,
            },
            grid: GridBlock {
                dt: 1e-3,
                t_max: 10.0,
            },
            initial: InitialBlock {
                psi0: Complex64::new(0.0, 0.0),
                c0: Complex64::new(0.0, 0.0),
            },
            output: OutputBlock {
                directory: PathBuf::from("."),
                series: COLUMNS.iter().map(|s| s.to_string()).collect(),
                absolute: false,
            },
        }
    }
}

impl ScenarioConfig {
    pub fn physical_params(&self) -> Result<PhysicalParams> {
        let p = &self.params;
        PhysicalParams::new(p.gamma_1d, p.omega0, p.rho_1d, p.c)
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        TimeGrid::from_horizon(self.grid.dt, self.grid.t_max)
    }

    pub fn initial_condition(&self) -> InitialCondition {
        InitialCondition::new(self.initial.psi0, self.initial.c0)
    }

    /// Short human-readable scenario name.
    pub fn label(&self) -> String {
        match self.packet.kind {
            PacketKind::Exponential => format!(
                "delta={} linewidth={}",
                self.packet.delta, self.packet.linewidth
            ),
            PacketKind::Tabulated => format!(
                "tabulated {}",
                self.packet
                    .file
                    .as_deref()
                    .map_or("?".into(), |p| p.display().to_string())
            ),
        }
    }

    /// Makes a relative packet file path relative to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        if let Some(f) = &self.packet.file {
            if f.is_relative() {
                self.packet.file = Some(base.join(f));
            }
        }
    }
}

/// Reads and parses a config file; the packet file is resolved against the
/// config's directory.
pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cfg = parse_config(&text)?;
    if let Some(dir) = path.parent() {
        cfg.resolve_paths(dir);
    }
    Ok(cfg)
}

enum Raw {
    Text(String),
    Json(Value),
}

struct Entry {
    line: usize,
    value: Raw,
}

fn config_error(line: usize, key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        key: key.to_string(),
        message: message.into(),
    }
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let entries = if text.trim_start().starts_with('{') {
        json_entries(text)?
    } else {
        line_entries(text)?
    };
    build(entries)
}

fn line_entries(text: &str) -> Result<HashMap<String, Entry>> {
    let mut out = HashMap::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(config_error(line, content, "expected `key = value`"));
        };
        let key = key.trim().to_string();
        if out.contains_key(&key) {
            return Err(config_error(line, &key, "duplicate key"));
        }
        out.insert(
            key,
            Entry {
                line,
                value: Raw::Text(value.trim().to_string()),
            },
        );
    }
    Ok(out)
}

fn json_entries(text: &str) -> Result<HashMap<String, Entry>> {
    let root: Value =
        serde_json::from_str(text).map_err(|e| config_error(e.line(), "", e.to_string()))?;
    let mut out = HashMap::new();
    flatten(text, "", &root, &mut out)?;
    Ok(out)
}

fn flatten(
    text: &str,
    prefix: &str,
    value: &Value,
    out: &mut HashMap<String, Entry>,
) -> Result<()> {
    let Value::Object(map) = value else {
        return Err(config_error(1, prefix, "expected a JSON object"));
    };
    for (name, v) in map {
        let key = if prefix.is_empty() {
            name.clone()
        } else {
            format!("{prefix}.{name}")
        };
        if v.is_object() {
            flatten(text, &key, v, out)?;
        } else {
            let line = json_line(text, name);
            out.insert(
                key,
                Entry {
                    line,
                    value: Raw::Json(v.clone()),
                },
            );
        }
    }
    Ok(())
}

/// Line of the first occurrence of `"name"`; JSON values carry no positions.
fn json_line(text: &str, name: &str) -> usize {
    let needle = format!("\"{name}\"");
    text.find(&needle)
        .map_or(0, |pos| text[..pos].matches('\n').count() + 1)
}

fn number(key: &str, e: &Entry) -> Result<f64> {
    let v = match &e.value {
        Raw::Text(s) => s.parse::<f64>().ok(),
        Raw::Json(v) => v.as_f64(),
    };
    match v {
        Some(x) if x.is_finite() => Ok(x),
        Some(_) => Err(config_error(e.line, key, "must be finite")),
        None => Err(config_error(e.line, key, "expected a number")),
    }
}

fn text(key: &str, e: &Entry) -> Result<String> {
    match &e.value {
        Raw::Text(s) => Ok(s.clone()),
        Raw::Json(Value::String(s)) => Ok(s.clone()),
        Raw::Json(_) => Err(config_error(e.line, key, "expected a string")),
    }
}

fn boolean(key: &str, e: &Entry) -> Result<bool> {
    let v = match &e.value {
        Raw::Text(s) => s.parse::<bool>().ok(),
        Raw::Json(v) => v.as_bool(),
    };
    v.ok_or_else(|| config_error(e.line, key, "expected true or false"))
}

fn list(key: &str, e: &Entry) -> Result<Vec<String>> {
    let items: Vec<String> = match &e.value {
        Raw::Text(s) => s
            .split(',')
            .map(|x| x.trim().to_string())
            .filter(|x| !x.is_empty())
            .collect(),
        Raw::Json(Value::String(s)) => s
            .split(',')
            .map(|x| x.trim().to_string())
            .filter(|x| !x.is_empty())
            .collect(),
        Raw::Json(Value::Array(a)) => a
            .iter()
            .map(|v| v.as_str().map(str::to_string))
            .collect::<Option<_>>()
            .ok_or_else(|| config_error(e.line, key, "expected a list of column names"))?,
        Raw::Json(_) => return Err(config_error(e.line, key, "expected a list of column names")),
    };
    Ok(items)
}

fn build(mut entries: HashMap<String, Entry>) -> Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::default();
    let mut lines: HashMap<&'static str, usize> = HashMap::new();

    macro_rules! take {
        ($key:literal, $conv:ident, $target:expr) => {
            if let Some(e) = entries.remove($key) {
                lines.insert($key, e.line);
                $target = $conv($key, &e)?;
            }
        };
    }

    take!("params.gamma_1d", number, cfg.params.gamma_1d);
    take!("params.omega0", number, cfg.params.omega0);
    take!("params.rho_1d", number, cfg.params.rho_1d);
    take!("params.c", number, cfg.params.c);
    take!("packet.delta", number, cfg.packet.delta);
    take!("packet.linewidth", number, cfg.packet.linewidth);
    take!("grid.dt", number, cfg.grid.dt);
    take!("grid.t_max", number, cfg.grid.t_max);
    take!("initial.psi0_re", number, cfg.initial.psi0.re);
    take!("initial.psi0_im", number, cfg.initial.psi0.im);
    take!("initial.c0_re", number, cfg.initial.c0.re);
    take!("initial.c0_im", number, cfg.initial.c0.im);
    take!("output.absolute", boolean, cfg.output.absolute);

    if let Some(e) = entries.remove("packet.kind") {
        lines.insert("packet.kind", e.line);
        cfg.packet.kind = match text("packet.kind", &e)?.as_str() {
            "exponential" => PacketKind::Exponential,
            "tabulated" => PacketKind::Tabulated,
            other => {
                return Err(config_error(
                    e.line,
                    "packet.kind",
                    format!("unknown kind `{other}` (exponential or tabulated)"),
                ))
            }
        };
    }
    if let Some(e) = entries.remove("packet.file") {
        lines.insert("packet.file", e.line);
        cfg.packet.file = Some(PathBuf::from(text("packet.file", &e)?));
    }
    if let Some(e) = entries.remove("output.directory") {
        lines.insert("output.directory", e.line);
        cfg.output.directory = PathBuf::from(text("output.directory", &e)?);
    }
    if let Some(e) = entries.remove("output.series") {
        let requested = list("output.series", &e)?;
        if let Some(bad) = requested.iter().find(|c| !COLUMNS.contains(&c.as_str())) {
            return Err(config_error(
                e.line,
                "output.series",
                format!("unknown column `{bad}`"),
            ));
        }
        cfg.output.series = COLUMNS
            .iter()
            .filter(|c| **c == "t" || requested.iter().any(|r| r == *c))
            .map(|c| c.to_string())
            .collect();
    }

    if let Some((key, e)) = entries.iter().min_by_key(|(k, e)| (e.line, k.as_str())) {
        return Err(config_error(e.line, key, "unknown key"));
    }

    validate(&cfg, &lines)?;
    Ok(cfg)
}

fn validate(cfg: &ScenarioConfig, lines: &HashMap<&'static str, usize>) -> Result<()> {
    let at = |key: &'static str, message: String| {
        config_error(lines.get(key).copied().unwrap_or(0), key, message)
    };

    if let Err(Error::Domain { field, reason }) = cfg.physical_params() {
        let key = match field {
            "gamma_1d" => "params.gamma_1d",
            "omega0" => "params.omega0",
            "rho_1d" => "params.rho_1d",
            _ => "params.c",
        };
        return Err(at(key, reason));
    }
    if cfg.grid.dt <= 0.0 {
        return Err(at("grid.dt", format!("must be > 0, got {}", cfg.grid.dt)));
    }
    if cfg.grid.t_max < cfg.grid.dt {
        return Err(at(
            "grid.t_max",
            format!("must be at least grid.dt, got {}", cfg.grid.t_max),
        ));
    }
    match cfg.packet.kind {
        PacketKind::Exponential => {
            if cfg.packet.linewidth <= 0.0 {
                return Err(at(
                    "packet.linewidth",
                    format!("must be > 0, got {}", cfg.packet.linewidth),
                ));
            }
        }
        PacketKind::Tabulated => {
            if cfg.packet.file.is_none() {
                return Err(at("packet.file", "required for tabulated packets".into()));
            }
        }
    }
    let weight = cfg.initial_condition().photon_weight();
    if weight < -1e-12 {
        return Err(at(
            "initial.psi0_re",
            format!("|psi0|^2 + |c0|^2 exceeds 1 by {}", -weight),
        ));
    }
    Ok(())
}

/// Serializes a config in the `key = value` format; `parse_config` of the
/// output returns an equal config.
pub fn emit_config(cfg: &ScenarioConfig) -> String {
    let mut s = String::new();
    let mut put = |k: &str, v: String| {
        s.push_str(k);
        s.push_str(" = ");
        s.push_str(&v);
        s.push('\n');
    };
    put("params.gamma_1d", format!("{:?}", cfg.params.gamma_1d));
    put("params.omega0", format!("{:?}", cfg.params.omega0));
    put("params.rho_1d", format!("{:?}", cfg.params.rho_1d));
    put("params.c", format!("{:?}", cfg.params.c));
    put("packet.kind", cfg.packet.kind.name().into());
    put("packet.delta", format!("{:?}", cfg.packet.delta));
    put("packet.linewidth", format!("{:?}", cfg.packet.linewidth));
    if let Some(f) = &cfg.packet.file {
        put("packet.file", f.display().to_string());
    }
    put("grid.dt", format!("{:?}", cfg.grid.dt));
    put("grid.t_max", format!("{:?}", cfg.grid.t_max));
    put("initial.psi0_re", format!("{:?}", cfg.initial.psi0.re));
    put("initial.psi0_im", format!("{:?}", cfg.initial.psi0.im));
    put("initial.c0_re", format!("{:?}", cfg.initial.c0.re));
    put("initial.c0_im", format!("{:?}", cfg.initial.c0.im));
    put(
        "output.directory",
        cfg.output.directory.display().to_string(),
    );
    put("output.series", cfg.output.series.join(","));
    put("output.absolute", cfg.output.absolute.to_string());
    s
}
