//! `simulate`: integrate one configured run and stream a diagnostics row per sample.
//!
//! Rows are evaluated on the `π`-periodic view of the slice. A `2π` field
//! relabelled onto `[0, π)` solves the same equation in the same time, since
//! `u_x` and `u·ω_x` are invariant under `x ↦ x/2`.

use std::path::Path;

use dglab_core::functionals::{identity_residuals, DiagnosticsRow, FlowParams, RowOptions};
use dglab_core::models::{
    build_initial, clm_exact, run, step, ModelError, ModelKind, ModelSpec, Preset, RunState,
};
use dglab_core::spectral::{Period, PeriodicField};
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{self, fmt_float, Series};
use crate::{ensure_dir, CliError};

/// Exponent used for the `dQ/dt` residual when it is configured.
const RESIDUAL_BETA: f64 = 2.0;

/// Physical-time reconstruction at one rescaled sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RescalingRow {
    pub tau: f64,
    /// `C_ω(τ) = exp ∫ c_ω dτ`.
    pub c_factor: f64,
    pub t_phys: f64,
    pub ux0: f64,
    pub c_omega: f64,
    pub u_integral: f64,
}

/// Closed-form comparison for `gclm` with `a = 0` started from `-A sin 2x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedFormPoint {
    pub t: f64,
    pub rel_linf_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub model: ModelSpec,
    pub n: usize,
    pub t_end: f64,
    pub stop_reason: &'static str,
    pub t_final: f64,
    pub steps: usize,
    pub samples: usize,
    pub final_row: DiagnosticsRow,
    pub ux0_min: f64,
    pub ux0_max: f64,
    /// `max_t ‖ω(t) - ω₀‖_∞` over the samples.
    pub max_drift: f64,
    /// Largest total scaling rate; rescaled runs only.
    pub c_omega_max: Option<f64>,
    pub t_phys_final: Option<f64>,
    pub closed_form: Vec<ClosedFormPoint>,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub rows: Vec<DiagnosticsRow>,
    pub rescaling: Vec<RescalingRow>,
    pub summary: RunSummary,
}

fn pi_view(omega: &PeriodicField) -> PeriodicField {
    match omega.period() {
        Period::Pi => omega.clone(),
        Period::TwoPi => omega.retag_period(Period::Pi),
    }
}

fn sample_row(
    state: &RunState,
    dt: f64,
    spec: &ModelSpec,
    config: &RunConfig,
    opts: &RowOptions,
) -> Result<DiagnosticsRow, CliError> {
    let omega = pi_view(&state.omega);
    let mut row = DiagnosticsRow::compute(&omega, state.t, state.u_integral, opts)?;
    let c_omega = spec.scaling_rate(row.ux0);
    if spec.kind == ModelKind::DgRescaled {
        row.c_omega = Some(c_omega);
    }
    if config.residuals && dt > 0.0 {
        // A slice too close to blowup may not survive the backward step; leave the residuals empty then.
        if let (Ok(prev), Ok(next)) = (step(state, spec, -dt), step(state, spec, dt)) {
            let beta_q = match config.betas.last() {
                Some(&last) if !config.betas.contains(&RESIDUAL_BETA) => last,
                _ => RESIDUAL_BETA,
            };
            let flow = FlowParams {
                advection: spec.advection(),
                c_omega,
            };
            let r = identity_residuals(
                &pi_view(&prev.omega),
                &omega,
                &pi_view(&next.omega),
                dt,
                flow,
                beta_q,
            )?;
            row = row.with_residuals(r);
        }
    }
    Ok(row)
}

fn closed_form_reference(config: &RunConfig) -> bool {
    config.model.kind == ModelKind::Gclm
        && config.model.a == 0.0
        && matches!(config.initial, Preset::NegSin2x { .. })
}

/// Runs the configured scenario in memory. Sequential and deterministic.
pub fn run_simulation(config: &RunConfig) -> Result<Simulation, CliError> {
    config.validate()?;
    let spec = config.spec();
    let omega0 = build_initial(config.initial, config.n)?;
    let opts = RowOptions {
        betas: config.betas.clone(),
        dual_path: config.dual_path,
    };
    let with_reference = closed_form_reference(config);

    let mut rows = Vec::new();
    let mut rescaling = Vec::new();
    let mut closed_form = Vec::new();
    let mut max_drift = 0.0f64;
    let report = run(
        RunState::new(omega0.clone()),
        &spec,
        &config.control(),
        |state, dt| {
            let row = sample_row(state, dt, &spec, config, &opts)?;
            max_drift = max_drift.max(state.omega.max_abs_diff(&omega0).map_err(ModelError::from)?);
            if with_reference {
                if let Ok((exact, _)) = clm_exact(&omega0, state.t) {
                    let err = state.omega.max_abs_diff(&exact).map_err(ModelError::from)? / exact.linf();
                    closed_form.push(ClosedFormPoint {
                        t: state.t,
                        rel_linf_error: err,
                    });
                }
            }
            if spec.kind == ModelKind::DgRescaled {
                rescaling.push(RescalingRow {
                    tau: state.t,
                    c_factor: state.c_omega_factor(),
                    t_phys: state.t_phys,
                    ux0: row.ux0,
                    c_omega: row.c_omega.unwrap_or(0.0),
                    u_integral: state.u_integral,
                });
            }
            rows.push(row);
            Ok::<(), CliError>(())
        },
    )?;

    let final_row = rows.last().cloned().expect("the initial slice is always sampled");
    let ux0 = rows.iter().map(|r| r.ux0);
    let summary = RunSummary {
        model: spec,
        n: config.n,
        t_end: config.t_end,
        stop_reason: report.stop_reason.as_str(),
        t_final: report.final_state.t,
        steps: report.steps,
        samples: rows.len(),
        final_row,
        ux0_min: ux0.clone().fold(f64::INFINITY, f64::min),
        ux0_max: ux0.fold(f64::NEG_INFINITY, f64::max),
        max_drift,
        c_omega_max: rows.iter().filter_map(|r| r.c_omega).reduce(f64::max),
        t_phys_final: (spec.kind == ModelKind::DgRescaled).then_some(report.final_state.t_phys),
        closed_form,
    };
    Ok(Simulation {
        rows,
        rescaling,
        summary,
    })
}

pub fn rescaling_header() -> Vec<String> {
    ["tau", "C_omega", "t_phys", "ux0", "c_omega", "U"]
        .map(String::from)
        .into()
}

fn rescaling_record(r: &RescalingRow) -> Vec<String> {
    [r.tau, r.c_factor, r.t_phys, r.ux0, r.c_omega, r.u_integral]
        .map(fmt_float)
        .into()
}

fn time_series_plot(sim: &Simulation, betas: &[f64]) -> String {
    let pick = |f: &dyn Fn(&DiagnosticsRow) -> Option<f64>| -> Vec<(f64, f64)> {
        sim.rows.iter().filter_map(|r| f(r).map(|v| (r.t, v))).collect()
    };
    let q_name = betas
        .last()
        .map(|b| format!("Q({})", fmt_float(*b)))
        .unwrap_or_default();
    let mut series = vec![
        Series {
            name: "u_x(0)",
            points: pick(&|r| Some(r.ux0)),
        },
        Series {
            name: "D",
            points: pick(&|r| Some(r.d)),
        },
    ];
    if !betas.is_empty() {
        series.push(Series {
            name: &q_name,
            points: pick(&|r| r.q.last().copied().flatten()),
        });
    }
    if sim.rows.iter().any(|r| r.c_omega.is_some()) {
        series.push(Series {
            name: "c_omega",
            points: pick(&|r| r.c_omega),
        });
    }
    output::line_plot("diagnostics", "t", &series, true)
}

/// Writes every configured output below `out_dir`.
pub fn write_outputs(sim: &Simulation, config: &RunConfig, out_dir: &Path) -> Result<(), CliError> {
    let dir = ensure_dir(out_dir)?;
    let records: Vec<Vec<String>> = sim.rows.iter().map(output::diagnostics_record).collect();
    output::write_csv_file(
        &dir.join(&config.outputs.diagnostics),
        &output::diagnostics_header(&config.betas),
        &records,
    )?;
    output::write_json(&dir.join(&config.outputs.summary), &sim.summary)?;
    if config.model.kind == ModelKind::DgRescaled {
        let records: Vec<Vec<String>> = sim.rescaling.iter().map(rescaling_record).collect();
        output::write_csv_file(
            &dir.join(&config.outputs.rescaling),
            &rescaling_header(),
            &records,
        )?;
    }
    if let Some(svg) = &config.outputs.svg {
        let path = dir.join(svg);
        std::fs::write(&path, time_series_plot(sim, &config.betas)).map_err(|e| CliError::io(&path, e))?;
    }
    Ok(())
}

/// Exit code 0 for every completed run, including threshold stops.
pub fn cmd_simulate(config_path: &Path, out_dir: &Path) -> Result<i32, CliError> {
    let config = RunConfig::from_path(config_path)?;
    let sim = run_simulation(&config)?;
    write_outputs(&sim, &config, out_dir)?;
    println!(
        "stop_reason={} t={} samples={} ux0_max={}",
        sim.summary.stop_reason,
        fmt_float(sim.summary.t_final),
        sim.summary.samples,
        fmt_float(sim.summary.ux0_max)
    );
    Ok(0)
}
