//! One simulation end to end: amplitudes, generator, master-equation
//! crosscheck and detector intensities, plus CSV and JSON export.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;

use crate::config::{PacketKind, ScenarioConfig, COLUMNS};
use crate::dynamics::{evolve_psi_ode, AmplitudeSeries};
use crate::error::{Error, Result};
use crate::generator::{stark_shift_numeric, GeneratorSeries, EPS_PSI};
use crate::lindblad::{crosscheck_population, propagate_master, DensityMatrix2, GeneratorInput};
use crate::model::{PacketSpec, PhysicalParams, TimeGrid};
use crate::numeric::trapezoid;
use crate::observables::{difference_signal, intensity_series, FrequencyMode, IntensitySeries};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Scalar summaries of one run. Every field is recomputable from the
/// series of the owning [`SimulationResult`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    /// Largest `|shift|` over valid samples.
    pub max_abs_shift: f64,
    /// Signed shift at that sample.
    pub peak_shift: f64,
    /// `int Ib / int I0` over the run horizon (trapezoid).
    pub reflectance: f64,
    /// `int Ia / int I0` over the run horizon (trapezoid).
    pub transmittance: f64,
    /// `max |rho_ee - |psi|^2|` of the master-equation crosscheck.
    pub population_error: Option<f64>,
    /// `max |rho_eg - psi c0*|`, when `c0 != 0`.
    pub coherence_error: Option<f64>,
    pub valid_samples: usize,
}

#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub config: ScenarioConfig,
    pub psi: AmplitudeSeries,
    pub generator: GeneratorSeries,
    /// Exported shift: the generator's shift, with a masked leading run of an
    /// exponential packet filled by its `t -> 0` limit `delta/2`.
    pub shift: Vec<f64>,
    pub intensities: IntensitySeries,
    /// NaN where the interference formula does not apply.
    pub diff_dynamic: Vec<f64>,
    pub diff_static: Vec<f64>,
    pub summary: Summary,
    pub version: &'static str,
    pub wall_clock_seconds: f64,
}

impl SimulationResult {
    pub fn grid(&self) -> TimeGrid {
        self.psi.grid
    }
}

/// Reads a packet table: header `x,re,im`, then one sample per line.
pub fn load_packet_table(path: &Path) -> Result<(Vec<f64>, Vec<Complex64>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |message: String| Error::PacketTable {
        path: path.to_path_buf(),
        message,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.split(',').map(str::trim).eq(["x", "re", "im"]) => {}
        _ => return Err(bad("header must be `x,re,im`".into())),
    }
    let mut xs = Vec::new();
    let mut amps = Vec::new();
    for (i, line) in lines {
        let fields: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| bad(format!("line {}: {e}", i + 1)))?;
        let [x, re, im] = fields[..] else {
            return Err(bad(format!("line {}: expected 3 fields", i + 1)));
        };
        if xs.last().is_some_and(|&last| x <= last) {
            return Err(bad(format!(
                "line {}: x must be strictly increasing",
                i + 1
            )));
        }
        xs.push(x);
        amps.push(Complex64::new(re, im));
    }
    Ok((xs, amps))
}

/// Packet described by the config, scaled so the photon carries the
/// probability left over by the initial emitter amplitudes.
pub fn build_packet(cfg: &ScenarioConfig, params: &PhysicalParams) -> Result<PacketSpec> {
    let packet = match cfg.packet.kind {
        PacketKind::Exponential => {
            PacketSpec::exponential(cfg.packet.delta, cfg.packet.linewidth, params)?
        }
        PacketKind::Tabulated => {
            let path = cfg.packet.file.as_deref().ok_or_else(|| Error::Config {
                line: 0,
                key: "packet.file".into(),
                message: "required for tabulated packets".into(),
            })?;
            let (xs, amps) = load_packet_table(path)?;
            if xs.is_empty() {
                PacketSpec::vacuum(params)
            } else {
                PacketSpec::tabulated(xs, amps, cfg.packet.delta, params)?
            }
        }
    };
    let weight = cfg.initial_condition().photon_weight().max(0.0);
    let norm = packet.norm_fraction();
    if norm == 0.0 {
        if weight > 1e-9 {
            return Err(Error::domain(
                "initial",
                format!("packet is empty but the photon should carry probability {weight}"),
            ));
        }
        return Ok(packet);
    }
    let factor = (weight / norm).sqrt();
    if (factor - 1.0).abs() < 1e-12 {
        Ok(packet)
    } else {
        Ok(packet.scaled(Complex64::new(factor, 0.0)))
    }
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<SimulationResult> {
    run_inner(cfg).map_err(|e| e.in_scenario(cfg.label()))
}

fn run_inner(cfg: &ScenarioConfig) -> Result<SimulationResult> {
    let started = Instant::now();
    let params = cfg.physical_params()?;
    let grid = cfg.time_grid()?;
    let init = cfg.initial_condition();
    let packet = build_packet(cfg, &params)?;
    init.check_total(&packet)?;

    let psi = evolve_psi_ode(&params, &packet, &grid, &init)?;
    let generator = stark_shift_numeric(&psi, EPS_PSI);

    let crosscheck = GeneratorInput::with_exact(generator.clone(), psi.clone(), init.c0)
        .and_then(|input| {
            propagate_master(
                &input,
                DensityMatrix2::from_amplitudes(init.psi0, init.c0),
                &grid,
            )
        })
        .and_then(|m| crosscheck_population(&m, &psi, init.c0));
    let crosscheck = match crosscheck {
        Ok(c) => Some(c),
        Err(Error::NoValidSupport) => None,
        Err(e) => return Err(e),
    };

    let mut shift = generator.shift.clone();
    if let Some((delta, _)) = packet.exponential_shape() {
        for (s, &ok) in shift.iter_mut().zip(&generator.valid) {
            if ok {
                break;
            }
            *s = 0.5 * delta;
        }
    }

    let intensities = intensity_series(&params, &packet, &psi);
    let nan = || vec![f64::NAN; grid.n_steps()];
    let diff_dynamic = difference_signal(
        &packet,
        &init,
        &intensities,
        &generator,
        FrequencyMode::Dynamic,
    )
    .unwrap_or_else(|_| nan());
    let diff_static = difference_signal(
        &packet,
        &init,
        &intensities,
        &generator,
        FrequencyMode::Static,
    )
    .unwrap_or_else(|_| nan());

    let (mut max_abs_shift, mut peak_shift) = (0.0f64, 0.0);
    for (&s, &ok) in generator.shift.iter().zip(&generator.valid) {
        if ok && s.abs() > max_abs_shift {
            max_abs_shift = s.abs();
            peak_shift = s;
        }
    }
    let dt = grid.dt();
    let incoming = trapezoid(&intensities.i0, dt);
    let summary = Summary {
        max_abs_shift,
        peak_shift,
        reflectance: trapezoid(&intensities.ib, dt) / incoming,
        transmittance: trapezoid(&intensities.ia, dt) / incoming,
        population_error: crosscheck.map(|c| c.population),
        coherence_error: crosscheck.and_then(|c| c.coherence),
        valid_samples: generator.valid_count(),
    };

    Ok(SimulationResult {
        config: cfg.clone(),
        psi,
        generator,
        shift,
        intensities,
        diff_dynamic,
        diff_static,
        summary,
        version: VERSION,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    })
}

/// Scientific notation with 12 significant digits.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.11e}")
    }
}

/// Series CSV with the columns selected in the config.
pub fn csv_string(result: &SimulationResult, absolute: bool) -> String {
    let columns: Vec<&str> = COLUMNS
        .iter()
        .copied()
        .filter(|c| result.config.output.series.iter().any(|s| s == c))
        .collect();
    let offset = if absolute {
        result.config.params.omega0
    } else {
        0.0
    };
    let mut out = columns.join(",");
    out.push('\n');
    for k in 0..result.psi.len() {
        for (i, col) in columns.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let v = match *col {
                "t" => result.grid().t(k),
                "re_psi" => result.psi.values[k].re,
                "im_psi" => result.psi.values[k].im,
                "population" => result.psi.values[k].norm_sqr(),
                "shift" => result.shift[k] + offset,
                "rate" => result.generator.rate[k],
                "valid" => {
                    out.push(if result.generator.valid[k] { '1' } else { '0' });
                    continue;
                }
                "I0" => result.intensities.i0[k],
                "Ia" => result.intensities.ia[k],
                "Ib" => result.intensities.ib[k],
                "diff_dynamic" => result.diff_dynamic[k],
                _ => result.diff_static[k],
            };
            let _ = write!(out, "{}", format_number(v));
        }
        out.push('\n');
    }
    out
}

pub fn emit_csv(result: &SimulationResult, path: &Path, absolute: bool) -> Result<()> {
    std::fs::write(path, csv_string(result, absolute)).map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct SummaryDocument<'a> {
    version: &'a str,
    scenario: String,
    config: String,
    summary: &'a Summary,
    wall_clock_seconds: f64,
}

/// JSON document with the summaries, the config echo and run metadata.
pub fn summary_json(result: &SimulationResult) -> String {
    let doc = SummaryDocument {
        version: result.version,
        scenario: result.config.label(),
        config: crate::config::emit_config(&result.config),
        summary: &result.summary,
        wall_clock_seconds: result.wall_clock_seconds,
    };
    // NaN summaries (no incoming flux) serialize as null
    serde_json::to_string_pretty(&doc).expect("summary is serializable") + "\n"
}

/// Writes `series.csv` and `summary.json` into `dir`.
pub fn write_outputs(result: &SimulationResult, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    emit_csv(
        result,
        &dir.join("series.csv"),
        result.config.output.absolute,
    )?;
    let path = dir.join("summary.json");
    std::fs::write(&path, summary_json(result)).map_err(|e| Error::io(path, e))
}
