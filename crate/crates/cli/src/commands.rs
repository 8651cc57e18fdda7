//! The four experiment commands.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use exwave_core::{
    build_radial_grid, critical_tail_report, fit_scaling, make_weight, sign_functional,
    weighted_data_term, Grading, RhsIntegrals, RunOutcome, Verdict, WeightReport,
};

use crate::config::{load_run_config, load_sweep_spec};
use crate::output::{fmt_f64, history_rows, OutputDir, HISTORY_HEADER};
use crate::CliError;

fn config_echo<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).unwrap_or(serde_json::Value::Null)
}

#[derive(Serialize)]
struct SimulateReport {
    outcome: RunOutcome,
    sign_functional: f64,
    sign_positive: bool,
}

/// `simulate --config run.json --out DIR`: one run, history CSV + outcome.
pub fn cmd_simulate(config_path: &Path, out: &Path, allow_raw: bool) -> Result<(), CliError> {
    let start = Instant::now();
    let config = load_run_config(config_path)?;
    let grid = config.build_grid()?;
    let data = config.build_data(&grid, allow_raw)?;
    let weight = config.build_weight()?;
    let sign = sign_functional(&data, &weight, &grid).map_err(CliError::from)?;

    let result =
        exwave_core::run(&grid, &data, config.p, &config.controls).map_err(CliError::from)?;
    for w in &result.outcome.warnings {
        eprintln!("warning: {w}");
    }

    let mut dir = OutputDir::create(out)?;
    dir.write_csv("history.csv", &HISTORY_HEADER, &history_rows(&result.history))?;
    dir.write_json(
        "outcome.json",
        &SimulateReport {
            outcome: result.outcome.clone(),
            sign_functional: sign.value,
            sign_positive: sign.positive,
        },
    )?;

    // late-time tail integrals are meaningful only for runs covering the
    // whole ladder window
    let max_t = config.t_ladder.iter().cloned().fold(0.0_f64, f64::max);
    if matches!(result.outcome.verdict, Verdict::SurvivedHorizon { .. })
        && max_t <= config.controls.t_end
    {
        let family = config.build_family(max_t)?;
        let tails =
            critical_tail_report(&result.trajectory, &family, config.p, &grid, &config.t_ladder)
                .map_err(CliError::from)?;
        let rows: Vec<Vec<String>> = (0..tails.t_values.len())
            .map(|j| {
                vec![
                    fmt_f64(tails.t_values[j]),
                    fmt_f64(tails.center_tail[j]),
                    fmt_f64(tails.annulus_tail[j]),
                    fmt_f64(tails.annulus_full[j]),
                ]
            })
            .collect();
        dir.write_csv(
            "critical_tails.csv",
            &["T", "center_tail", "annulus_tail", "annulus_full"],
            &rows,
        )?;
        dir.write_json("critical_tails.json", &tails)?;
    }
    dir.finish_manifest("simulate", config_echo(&config), start.elapsed().as_secs_f64())?;

    println!(
        "simulate: verdict {} after {} steps (sign functional {:.6e})",
        result.outcome.verdict.label(),
        result.outcome.steps_taken,
        sign.value
    );
    Ok(())
}

struct SweepRow {
    p: f64,
    amplitude: f64,
    verdict: String,
    t_max: Option<f64>,
    sign_functional: f64,
}

/// `sweep --config sweep.json --out DIR --jobs N`: the phase table.
pub fn cmd_sweep(
    spec_path: &Path,
    out: &Path,
    jobs: Option<usize>,
    allow_raw: bool,
) -> Result<(), CliError> {
    let start = Instant::now();
    let spec = load_sweep_spec(spec_path)?;
    let amplitudes = spec.amplitudes();
    let cases: Vec<(f64, f64)> = spec
        .p_values
        .iter()
        .flat_map(|&p| amplitudes.iter().map(move |&a| (p, a)))
        .collect();

    let run_case = |&(p, amplitude): &(f64, f64)| -> SweepRow {
        let mut config = spec.base.clone();
        config.p = p;
        config.data = config.data.with_amplitude(amplitude);
        let attempt = || -> Result<SweepRow, CliError> {
            let grid = config.build_grid()?;
            let data = config.build_data(&grid, allow_raw)?;
            let weight = config.build_weight()?;
            let sign = sign_functional(&data, &weight, &grid).map_err(CliError::from)?;
            let result = exwave_core::run(&grid, &data, p, &config.controls)
                .map_err(CliError::from)?;
            Ok(SweepRow {
                p,
                amplitude,
                verdict: result.outcome.verdict.label().to_string(),
                t_max: result.outcome.verdict.t_max_estimate(),
                sign_functional: sign.value,
            })
        };
        attempt().unwrap_or_else(|e| SweepRow {
            p,
            amplitude,
            verdict: format!("Error({e})"),
            t_max: None,
            sign_functional: f64::NAN,
        })
    };

    let rows: Vec<SweepRow> = match jobs {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| CliError::runtime(format!("thread pool: {e}")))?;
            pool.install(|| {
                use rayon::prelude::*;
                cases.par_iter().map(run_case).collect()
            })
        }
        None => {
            use rayon::prelude::*;
            cases.par_iter().map(run_case).collect()
        }
    };

    let completed = rows.iter().filter(|r| !r.verdict.starts_with("Error")).count();
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                fmt_f64(r.p),
                fmt_f64(r.amplitude),
                r.verdict.clone(),
                r.t_max.map(fmt_f64).unwrap_or_default(),
                if r.sign_functional.is_nan() {
                    String::new()
                } else {
                    fmt_f64(r.sign_functional)
                },
            ]
        })
        .collect();

    let mut dir = OutputDir::create(out)?;
    dir.write_csv(
        "phase.csv",
        &["p", "amplitude", "verdict", "t_max", "sign_functional"],
        &csv_rows,
    )?;
    dir.finish_manifest("sweep", config_echo(&spec), start.elapsed().as_secs_f64())?;

    println!("sweep: {} of {} rows completed", completed, rows.len());
    if completed == 0 {
        return Err(CliError::runtime("every sweep row failed".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct WeightCertificate {
    dim: usize,
    r0: f64,
    r_max: f64,
    reports: Vec<WeightReport>,
    /// Fitted order of the harmonic residual against the cell count.
    residual_order: Option<f64>,
    certified: bool,
    failures: Vec<String>,
}

/// `weights --dim N --r0 X --cells M --out DIR`: weight certification across
/// a three-level refinement. Exits 4 when any property fails.
pub fn cmd_weights(
    dim: usize,
    r0: f64,
    cells: usize,
    r_max: Option<f64>,
    out: &Path,
) -> Result<(), CliError> {
    let start = Instant::now();
    if cells < 32 {
        return Err(CliError::config(format!("cells must be >= 32 for the refinement study, got {cells}")));
    }
    let r_max = r_max.unwrap_or(r0 + 10.0);
    let weight = make_weight(dim, r0, 1.0).map_err(CliError::from_config_stage)?;

    let mut reports = Vec::new();
    for level in [4usize, 2, 1] {
        let grid = build_radial_grid(dim, r0, r_max, cells / level, Grading::Uniform)
            .map_err(CliError::from_config_stage)?;
        reports.push(weight.verify(&grid).map_err(CliError::from)?);
    }

    let mut failures = Vec::new();
    for rep in &reports {
        if rep.boundary_value != 0.0 {
            failures.push(format!("boundary value {} at {} cells", rep.boundary_value, rep.cells));
        }
        if rep.bound_violations != 0 {
            failures.push(format!("{} bound violations at {} cells", rep.bound_violations, rep.cells));
        }
        if rep.gradient_constancy_spread.abs() > 1e-12 {
            failures.push(format!(
                "gradient decay combination not constant (spread {}) at {} cells",
                rep.gradient_constancy_spread, rep.cells
            ));
        }
    }
    let finest = reports.last().unwrap();
    let residual_order = if finest.max_laplacian_residual <= 1e-12 {
        None // exact (the half-line weight); nothing to fit
    } else {
        let pts: Vec<(f64, f64)> = reports
            .iter()
            .map(|r| ((1.0 / r.cells as f64).ln(), r.max_laplacian_residual.ln()))
            .collect();
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|(x, _)| x).sum();
        let sy: f64 = pts.iter().map(|(_, y)| y).sum();
        let sxx: f64 = pts.iter().map(|(x, _)| x * x).sum();
        let sxy: f64 = pts.iter().map(|(x, y)| x * y).sum();
        let order = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        if order < 1.5 {
            failures.push(format!("harmonic residual order {order:.3} below second order"));
        }
        if finest.max_laplacian_residual > 1e-2 {
            failures.push(format!(
                "harmonic residual {} too large at {} cells",
                finest.max_laplacian_residual, finest.cells
            ));
        }
        Some(order)
    };

    let certificate = WeightCertificate {
        dim,
        r0,
        r_max,
        reports,
        residual_order,
        certified: failures.is_empty(),
        failures: failures.clone(),
    };
    let mut dir = OutputDir::create(out)?;
    dir.write_json("weight_report.json", &certificate)?;
    dir.finish_manifest(
        "weights",
        serde_json::json!({"dim": dim, "r0": r0, "cells": cells, "r_max": r_max}),
        start.elapsed().as_secs_f64(),
    )?;

    if certificate.certified {
        println!("weights: dim {dim} certified (residual order {residual_order:?})");
        Ok(())
    } else {
        for f in &failures {
            eprintln!("certification failure: {f}");
        }
        Err(CliError::certification(format!("{} weight properties failed", failures.len())))
    }
}

/// `scaling --config run.json --ladder 8,16,32,64 --out DIR`: the eight
/// cut-off integrals per horizon, the fitted slope, and the two sides of the
/// contradiction inequality.
pub fn cmd_scaling(
    config_path: &Path,
    out: &Path,
    ladder_override: Option<Vec<f64>>,
    allow_raw: bool,
) -> Result<(), CliError> {
    let start = Instant::now();
    let config = load_run_config(config_path)?;
    let ladder = ladder_override.unwrap_or_else(|| config.t_ladder.clone());
    if ladder.len() < 3 {
        return Err(CliError::config(format!(
            "scaling ladder needs at least 3 horizons, got {}",
            ladder.len()
        )));
    }
    if ladder.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::config("scaling ladder must be strictly increasing".into()));
    }

    let grid = config.build_scaling_grid(&ladder)?;
    let data = config.build_data(&grid, allow_raw)?;
    let family0 = config.build_family(ladder[0])?;

    let mut integral_rows = Vec::new();
    let mut inequality_rows = Vec::new();
    let mut samples = Vec::new();
    for &t in &ladder {
        let family = family0.with_horizon(t).map_err(CliError::from)?;
        let integrals: RhsIntegrals =
            family.rhs_scaling_integrals(config.p, &grid).map_err(CliError::from)?;
        let sum = integrals.sum();
        let mut row = vec![fmt_f64(t)];
        row.extend(integrals.as_array().iter().map(|v| fmt_f64(*v)));
        row.push(fmt_f64(sum));
        integral_rows.push(row);
        samples.push((t, sum));

        let lhs = weighted_data_term(&data, &family, &grid).map_err(CliError::from)?;
        inequality_rows.push(vec![fmt_f64(t), fmt_f64(lhs), fmt_f64(sum), fmt_f64(lhs / sum)]);
    }

    let report = fit_scaling(&samples, config.dim, config.p).map_err(CliError::from)?;

    let mut header = vec!["T"];
    header.extend(RhsIntegrals::NAMES);
    header.push("sum");
    let mut dir = OutputDir::create(out)?;
    dir.write_csv("scaling.csv", &header, &integral_rows)?;
    dir.write_csv("inequality.csv", &["T", "lhs", "rhs", "ratio"], &inequality_rows)?;
    dir.write_json("scaling_report.json", &report)?;
    dir.finish_manifest("scaling", config_echo(&config), start.elapsed().as_secs_f64())?;

    println!(
        "scaling: fitted slope {:.4} (predicted {:.4}, log-corrected: {})",
        report.fitted_slope, report.predicted_slope, report.log_corrected
    );
    Ok(())
}
