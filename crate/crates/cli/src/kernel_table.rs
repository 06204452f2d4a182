//! `kernels`: tabulate every kernel on a midpoint grid in `z = log s`.

use std::path::Path;

use dglab_core::kernels::KernelPoint;

use crate::output::{fmt_float, write_csv_file};
use crate::{ensure_dir, CliError};

pub const TABLE_FILE: &str = "kernels.csv";

/// Midpoints of `points` equal cells of `[log_min, log_max]`. A grid
/// symmetric about 0 with an even count is closed under `s ↦ 1/s` and never
/// lands on the singular point `s = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelGrid {
    pub log_min: f64,
    pub log_max: f64,
    pub points: usize,
    pub beta: f64,
}

impl Default for KernelGrid {
    fn default() -> Self {
        Self {
            log_min: -5.0,
            log_max: 5.0,
            points: 200,
            beta: 2.0,
        }
    }
}

impl KernelGrid {
    pub fn ratios(&self) -> Result<Vec<f64>, CliError> {
        if !(self.log_min.is_finite() && self.log_max.is_finite() && self.log_min < self.log_max) {
            return Err(CliError::Config(format!(
                "empty log range [{}, {}]",
                self.log_min, self.log_max
            )));
        }
        if self.points == 0 {
            return Err(CliError::Config("kernel grid needs at least one point".into()));
        }
        let h = (self.log_max - self.log_min) / self.points as f64;
        let z: Vec<f64> = (0..self.points)
            .map(|i| self.log_min + (i as f64 + 0.5) * h)
            .collect();
        if z.iter().any(|z| z.abs() < 1e-9 * h) {
            return Err(CliError::Config(
                "a grid point falls on the singular ratio s = 1".into(),
            ));
        }
        Ok(z.into_iter().map(f64::exp).collect())
    }
}

pub fn header() -> Vec<String> {
    ["s", "P1", "P2", "tildeK1", "tildeK2", "W1", "dW1", "d2W1", "d3W1"]
        .map(String::from)
        .into()
}

pub fn tabulate(grid: &KernelGrid) -> Result<Vec<KernelPoint>, CliError> {
    grid.ratios()?
        .into_iter()
        .map(|s| Ok(KernelPoint::at(s, grid.beta)?))
        .collect()
}

fn record(p: &KernelPoint) -> Vec<String> {
    [
        p.s, p.p1, p.p2, p.tilde_k1, p.tilde_k2, p.w1, p.dw1, p.d2w1, p.d3w1,
    ]
    .map(fmt_float)
    .into()
}

pub fn cmd_kernels(grid: &KernelGrid, out_dir: &Path) -> Result<i32, CliError> {
    let rows = tabulate(grid)?;
    let dir = ensure_dir(out_dir)?;
    let records: Vec<Vec<String>> = rows.iter().map(record).collect();
    write_csv_file(&dir.join(TABLE_FILE), &header(), &records)?;
    println!("rows={} beta={}", rows.len(), fmt_float(grid.beta));
    Ok(0)
}
