//! Data behind the shift and interference figures: three `(delta,
//! linewidth)` triples at the default settings.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::scenario::{format_number, run_scenario, SimulationResult};

/// `(delta, linewidth)` in units of `gamma_1d`: long detuned packet, short
/// packet, intermediate packet.
pub const TRIPLES: [(f64, f64); 3] = [(5.0, 0.1), (0.1, 5.0), (3.0, 0.9)];

pub fn triple_config(delta: f64, linewidth: f64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default();
    cfg.packet.delta = delta;
    cfg.packet.linewidth = linewidth;
    cfg
}

pub fn run_triples() -> Result<Vec<SimulationResult>> {
    TRIPLES
        .iter()
        .map(|&(d, w)| run_scenario(&triple_config(d, w)))
        .collect()
}

fn file_name(prefix: &str, delta: f64, linewidth: f64) -> String {
    format!("{prefix}_delta{delta}_linewidth{linewidth}.csv")
}

fn write(dir: &Path, name: String, text: String) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// `t,shift,valid` per triple.
pub fn run_fig2(dir: &Path) -> Result<Vec<PathBuf>> {
    run_triples()?
        .iter()
        .map(|r| {
            let mut text = String::from("t,shift,valid\n");
            for k in 0..r.psi.len() {
                let _ = writeln!(
                    text,
                    "{},{},{}",
                    format_number(r.grid().t(k)),
                    format_number(r.shift[k]),
                    u8::from(r.generator.valid[k])
                );
            }
            write(
                dir,
                file_name("fig2", r.config.packet.delta, r.config.packet.linewidth),
                text,
            )
        })
        .collect()
}

/// `t,diff_dynamic,diff_static` per triple.
pub fn run_fig3(dir: &Path) -> Result<Vec<PathBuf>> {
    run_triples()?
        .iter()
        .map(|r| {
            let mut text = String::from("t,diff_dynamic,diff_static\n");
            for k in 0..r.psi.len() {
                let _ = writeln!(
                    text,
                    "{},{},{}",
                    format_number(r.grid().t(k)),
                    format_number(r.diff_dynamic[k]),
                    format_number(r.diff_static[k])
                );
            }
            write(
                dir,
                file_name("fig3", r.config.packet.delta, r.config.packet.linewidth),
                text,
            )
        })
        .collect()
}

/// Shape measures of one interference panel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PanelMetrics {
    /// `max |diff_dynamic|`, the signal scale.
    pub scale: f64,
    /// `max |diff_dynamic - diff_static| / max |diff_dynamic|`.
    pub relative_gap: f64,
    /// `max |diff_dynamic - diff_static|`.
    pub absolute_gap: f64,
}

pub fn panel_metrics(r: &SimulationResult) -> PanelMetrics {
    let scale = r.diff_dynamic.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let gap = r
        .diff_dynamic
        .iter()
        .zip(&r.diff_static)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    PanelMetrics {
        scale,
        relative_gap: gap / scale,
        absolute_gap: gap,
    }
}
