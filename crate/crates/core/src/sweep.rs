//! Parameter sweeps over `(delta, linewidth)` cells.
//!
//! Cells run on a rayon pool; rows are always returned in grid order
//! (`delta` outer, `linewidth` inner), so the table does not depend on
//! scheduling.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::scenario::{format_number, run_scenario, Summary};

/// Environment variable capping the number of sweep workers.
pub const THREADS_ENV: &str = "STARK_PACKET_THREADS";

/// `n` evenly spaced points from `start` to `end` inclusive, written
/// `start:end:n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub start: f64,
    pub end: f64,
    pub n: usize,
}

impl Range {
    pub fn points(&self) -> Vec<f64> {
        match self.n {
            1 => vec![self.start],
            n => (0..n)
                .map(|i| self.start + (self.end - self.start) * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

impl FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, n] = parts[..] else {
            return Err(format!("expected start:end:n, got `{s}`"));
        };
        let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}"));
        let n: usize = n.trim().parse().map_err(|e| format!("`{n}`: {e}"))?;
        if n == 0 {
            return Err("point count must be at least 1".into());
        }
        Ok(Range {
            start: num(a)?,
            end: num(b)?,
            n,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub delta: f64,
    pub linewidth: f64,
    /// Summaries, or the error message of a failed cell.
    pub outcome: std::result::Result<Summary, String>,
}

/// Worker count from [`THREADS_ENV`], if set.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config {
                line: 0,
                key: THREADS_ENV.into(),
                message: format!("expected a positive integer, got `{v}`"),
            }),
        },
    }
}

fn run_cell(base: &ScenarioConfig, delta: f64, linewidth: f64) -> SweepRow {
    let mut cfg = base.clone();
    cfg.packet.delta = delta;
    cfg.packet.linewidth = linewidth;
    SweepRow {
        delta,
        linewidth,
        outcome: run_scenario(&cfg)
            .map(|r| r.summary)
            .map_err(|e| e.to_string()),
    }
}

/// Runs every cell. `threads = Some(1)` runs serially on the calling
/// thread; `None` uses rayon's default pool size.
pub fn run_sweep(
    base: &ScenarioConfig,
    deltas: &[f64],
    linewidths: &[f64],
    threads: Option<usize>,
) -> Result<Vec<SweepRow>> {
    let cells: Vec<(f64, f64)> = deltas
        .iter()
        .flat_map(|&d| linewidths.iter().map(move |&w| (d, w)))
        .collect();
    if threads == Some(1) {
        return Ok(cells.iter().map(|&(d, w)| run_cell(base, d, w)).collect());
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::NotApplicable(format!("thread pool: {e}")))?;
    Ok(pool.install(|| {
        cells
            .par_iter()
            .map(|&(d, w)| run_cell(base, d, w))
            .collect()
    }))
}

pub const SWEEP_HEADER: &str =
    "delta,linewidth,status,max_abs_shift,peak_shift,reflectance,transmittance,population_error,message";

/// Summary table as CSV, one row per cell in grid order.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for row in rows {
        let _ = write!(
            out,
            "{},{},",
            format_number(row.delta),
            format_number(row.linewidth)
        );
        match &row.outcome {
            Ok(s) => {
                let _ = writeln!(
                    out,
                    "ok,{},{},{},{},{},",
                    format_number(s.max_abs_shift),
                    format_number(s.peak_shift),
                    format_number(s.reflectance),
                    format_number(s.transmittance),
                    format_number(s.population_error.unwrap_or(f64::NAN)),
                );
            }
            Err(msg) => {
                let clean: String = msg
                    .chars()
                    .map(|c| if c == ',' || c == '\n' { ';' } else { c })
                    .collect();
                let _ = writeln!(out, "error,nan,nan,nan,nan,nan,{clean}");
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn ranges() {
        let r: Range = "-3:3:3".parse().unwrap();
        assert_eq!(r.points(), [-3.0, 0.0, 3.0]);
        assert_eq!("0.9:2:1".parse::<Range>().unwrap().points(), [0.9]);
        assert!("1:2".parse::<Range>().is_err());
        assert!("1:2:0".parse::<Range>().is_err());
    }

    #[test]
    fn failed_cells_do_not_stop_the_sweep() {
        let base = parse_config("grid.t_max=1").unwrap();
        let rows = run_sweep(&base, &[1.0, 50.0], &[0.9], Some(2)).unwrap();
        assert!(rows[0].outcome.is_ok());
        assert!(rows[1].outcome.as_ref().unwrap_err().contains("too coarse"));
        let csv = sweep_csv(&rows);
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.lines().nth(2).unwrap().contains(",error,"));
    }
}
