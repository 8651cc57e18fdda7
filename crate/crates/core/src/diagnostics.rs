//! Diagnostics for the blow-up argument: the data-sign functional, the
//! weak-identity residual, the two sides of the contradiction inequality,
//! and the scaling-law fits.
//!
//! The weak identity reads
//!
//! ```text
//! int_0^T int |u|^p phi + int [u1 - Delta u0] phi(0, .) - int u0 phi_t(0, .)
//!     = int_0^T int u phi_tt + int_0^T int u Delta phi_t - int_0^T int u Delta phi
//! ```
//!
//! for test functions vanishing with their time derivative at `t = T`. With
//! the temporal cut-off flat near zero, `phi_t(0, .) = 0` and the third
//! left-hand term drops. Space-time quadrature runs over stored trajectory
//! snapshots with linear-in-time interpolation.

use serde::{Deserialize, Serialize};

use crate::cutoffs::{conjugate_exponent, TestFunctionFamily};
use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::solver::{least_squares_slope, InitialData, SourceKind, Trajectory};
use crate::weights::HarmonicWeight;

/// Value and sign of `int [u1 - Delta u0] phi_0 dx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignFunctionalResult {
    pub value: f64,
    pub positive: bool,
}

/// Quadrature of the data-sign hypothesis, with `Delta u0` discrete.
pub fn sign_functional(
    data: &InitialData,
    weight: &HarmonicWeight,
    grid: &RadialGrid,
) -> Result<SignFunctionalResult> {
    let phi0 = weight.sample(grid)?;
    let lap_u0 = grid.radial_laplacian(&data.u0)?;
    let mut value = 0.0;
    for i in 0..grid.node_count() {
        value += grid.quad_weights()[i] * (data.u1.values[i] - lap_u0.values[i]) * phi0.values[i];
    }
    Ok(SignFunctionalResult { value, positive: value > 0.0 })
}

/// Integration-by-parts form `int u1 phi_0 + int grad u0 . grad phi_0`,
/// valid when the boundary fluxes vanish (data supported away from `r_max`).
pub fn sign_functional_ibp(
    data: &InitialData,
    weight: &HarmonicWeight,
    grid: &RadialGrid,
) -> Result<SignFunctionalResult> {
    let phi0 = weight.sample(grid)?;
    let mut value = grid.h1_inner(&data.u0, &phi0)?;
    for i in 0..grid.node_count() {
        value += grid.quad_weights()[i] * data.u1.values[i] * phi0.values[i];
    }
    Ok(SignFunctionalResult { value, positive: value > 0.0 })
}

/// Both sides of the weak identity and their absolute difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakFormReport {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    /// Scale for relative comparisons: `max(|lhs|, |rhs|)`.
    pub magnitude: f64,
}

/// Precomputed spatial factors of the test function at one node.
struct SpatialEval {
    /// `phi_0 * Phi^ell`
    plateau: f64,
    /// `Delta(phi_0 * Phi^ell)` via harmonicity of `phi_0`
    laplacian: f64,
}

fn spatial_table(family: &TestFunctionFamily, grid: &RadialGrid) -> Result<Vec<SpatialEval>> {
    let nu = grid.dim() as f64 - 1.0;
    let mut table = Vec::with_capacity(grid.node_count());
    for &r in grid.nodes() {
        let phi0 = family.weight.eval(r)?;
        let (cap, cap_r, cap_rr) = family.spatial.powered(r);
        let curv = if grid.dim() >= 2 { nu / r * cap_r } else { 0.0 };
        let laplacian = phi0 * (cap_rr + curv) + 2.0 * family.weight.eval_gradient(r)? * cap_r;
        table.push(SpatialEval { plateau: phi0 * cap, laplacian });
    }
    Ok(table)
}

fn check_window(traj: &Trajectory, horizon: f64) -> Result<()> {
    if traj.final_time() + 1e-12 < horizon {
        return Err(Error::HorizonExceeded { horizon: traj.final_time(), requested: horizon });
    }
    for (j, t) in traj.times.iter().enumerate() {
        if *t <= horizon + 1e-12 && traj.u[j].iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUpInsideWindow { t_blowup: *t, window: horizon });
        }
    }
    Ok(())
}

/// Piecewise-linear integral of sampled values `(times, values)` over `[a, b]`.
fn integrate_sampled(times: &[f64], values: &[f64], a: f64, b: f64) -> f64 {
    let interp = |t: f64| -> f64 {
        match times.iter().position(|&x| x >= t) {
            Some(0) => values[0],
            Some(j) => {
                let frac = (t - times[j - 1]) / (times[j] - times[j - 1]);
                values[j - 1] + frac * (values[j] - values[j - 1])
            }
            None => *values.last().unwrap(),
        }
    };
    let mut knots: Vec<f64> = vec![a];
    knots.extend(times.iter().copied().filter(|&t| t > a && t < b));
    knots.push(b);
    let mut total = 0.0;
    for w in knots.windows(2) {
        total += 0.5 * (interp(w[0]) + interp(w[1])) * (w[1] - w[0]);
    }
    total
}

/// `|LHS - RHS|` of the weak identity over the trajectory window `[0, T]`.
///
/// For trajectories integrated with the nonlinearity switched off, the
/// `|u|^p` term is dropped (the identity for the linear equation).
pub fn weak_form_residual(
    traj: &Trajectory,
    family: &TestFunctionFamily,
    p: f64,
    grid: &RadialGrid,
) -> Result<WeakFormReport> {
    let horizon = family.horizon();
    check_window(traj, horizon)?;
    if traj.u.iter().any(|u| u.len() != grid.node_count()) {
        return Err(Error::GridMismatch {
            field_len: traj.u[0].len(),
            grid_len: grid.node_count(),
        });
    }
    let table = spatial_table(family, grid)?;
    let qw = grid.quad_weights();

    // per-snapshot space integrals of each space-time integrand
    let mut times = Vec::new();
    let mut s_nonlinear = Vec::new();
    let mut s_dtt = Vec::new();
    let mut s_lap_dt = Vec::new();
    let mut s_lap = Vec::new();
    for (j, &t) in traj.times.iter().enumerate() {
        if t > horizon + 1e-12 {
            break;
        }
        let (eta, eta_t, eta_tt) = family.temporal.powered(t);
        let u = &traj.u[j];
        let mut acc = [0.0_f64; 4];
        for i in 0..u.len() {
            let w = qw[i];
            acc[0] += w * u[i].abs().powf(p) * table[i].plateau * eta;
            acc[1] += w * u[i] * table[i].plateau * eta_tt;
            acc[2] += w * u[i] * table[i].laplacian * eta_t;
            acc[3] += w * u[i] * table[i].laplacian * eta;
        }
        times.push(t);
        s_nonlinear.push(acc[0]);
        s_dtt.push(acc[1]);
        s_lap_dt.push(acc[2]);
        s_lap.push(acc[3]);
    }
    // every integrand vanishes identically at t = T (the cut-off and both of
    // its derivative factors are zero there)
    if *times.last().unwrap() < horizon {
        times.push(horizon);
        for s in [&mut s_nonlinear, &mut s_dtt, &mut s_lap_dt, &mut s_lap] {
            s.push(0.0);
        }
    }

    let nonlinear_term = match traj.source {
        SourceKind::Power(_) => integrate_sampled(&times, &s_nonlinear, 0.0, horizon),
        SourceKind::Linear => 0.0,
    };

    // data term with phi(0, x) = phi_0 Phi^ell (eta(0) = 1); phi_t(0, .) = 0
    let u0 = traj.initial_u();
    let u1 = traj.initial_v();
    let lap_u0 = grid.radial_laplacian(&u0)?;
    let mut data_term = 0.0;
    for i in 0..grid.node_count() {
        data_term += qw[i] * (u1.values[i] - lap_u0.values[i]) * table[i].plateau;
    }

    let lhs = nonlinear_term + data_term;
    let rhs = integrate_sampled(&times, &s_dtt, 0.0, horizon)
        + integrate_sampled(&times, &s_lap_dt, 0.0, horizon)
        - integrate_sampled(&times, &s_lap, 0.0, horizon);
    Ok(WeakFormReport {
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
        magnitude: lhs.abs().max(rhs.abs()),
    })
}

/// The two sides of the contradiction inequality at one horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalitySides {
    /// Data term `int [u1 - Delta u0] phi_0 Phi^ell dx`.
    pub lhs: f64,
    /// Sum of the eight cut-off integrals (constant-free).
    pub rhs: f64,
}

/// The cut-off weighted data term `int [u1 - Delta u0] phi_0 Phi^ell dx`.
pub fn weighted_data_term(
    data: &InitialData,
    family: &TestFunctionFamily,
    grid: &RadialGrid,
) -> Result<f64> {
    let table = spatial_table(family, grid)?;
    let lap_u0 = grid.radial_laplacian(&data.u0)?;
    let mut lhs = 0.0;
    for i in 0..grid.node_count() {
        lhs += grid.quad_weights()[i] * (data.u1.values[i] - lap_u0.values[i]) * table[i].plateau;
    }
    Ok(lhs)
}

/// Data term versus the cut-off integral sum. The contract, while the
/// solution extends over the window, is `lhs <= C * rhs` with a constant
/// independent of `T`; the ratio is reported, never asserted.
pub fn inequality_sides(
    traj: &Trajectory,
    family: &TestFunctionFamily,
    p: f64,
    grid: &RadialGrid,
) -> Result<InequalitySides> {
    check_window(traj, family.horizon())?;
    let data = InitialData {
        u0: traj.initial_u(),
        u1: traj.initial_v(),
        description: String::new(),
    };
    let lhs = weighted_data_term(&data, family, grid)?;
    let rhs = family.rhs_scaling_integrals(p, grid)?.sum();
    Ok(InequalitySides { lhs, rhs })
}

/// Measured decay of the cut-off integral sum against the predicted rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub t_values: Vec<f64>,
    pub measured: Vec<f64>,
    pub fitted_slope: f64,
    pub predicted_slope: f64,
    /// RMS residual of the log-log fit.
    pub residual: f64,
    /// Whether the `ln T` correction of dimension 2 was divided out.
    pub log_corrected: bool,
}

/// Predicted log-log slope of the integral sum: `-2p' + 1 + n` for `n >= 3`,
/// `-2p' + 3` for `n = 1` and (after removing the `ln T` factor) `n = 2`.
pub fn predicted_slope(dim: usize, p: f64) -> Result<f64> {
    let pc = conjugate_exponent(p)?;
    Ok(match dim {
        1 | 2 => -2.0 * pc + 3.0,
        n => -2.0 * pc + 1.0 + n as f64,
    })
}

/// Least-squares slope of the measured sums over a geometric `T` ladder.
pub fn fit_scaling(samples: &[(f64, f64)], dim: usize, p: f64) -> Result<ScalingReport> {
    if samples.len() < 3 {
        return Err(Error::InsufficientPoints { got: samples.len(), min: 3 });
    }
    if dim < 1 {
        return Err(Error::InvalidDimension { dim });
    }
    let predicted = predicted_slope(dim, p)?;
    let log_corrected = dim == 2;
    let mut pts = Vec::with_capacity(samples.len());
    for &(t, sum) in samples {
        if !(t > 1.0 && sum > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "scaling fit needs T > 1 and positive sums, got (T = {t}, sum = {sum})"
            )));
        }
        let y = if log_corrected { sum / t.ln() } else { sum };
        pts.push((t.ln(), y.ln()));
    }
    let slope = least_squares_slope(&pts);
    let n = pts.len() as f64;
    let intercept = (pts.iter().map(|(_, y)| y).sum::<f64>()
        - slope * pts.iter().map(|(x, _)| x).sum::<f64>())
        / n;
    let rss: f64 = pts.iter().map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    Ok(ScalingReport {
        t_values: samples.iter().map(|s| s.0).collect(),
        measured: samples.iter().map(|s| s.1).collect(),
        fitted_slope: slope,
        predicted_slope: predicted,
        residual: (rss / n).sqrt(),
        log_corrected,
    })
}

/// Qualitative trend of the critical-case tail integrals across the ladder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailTrend {
    Vanishing,
    Bounded,
    Growing,
}

/// The three tail integrals of the critical case per horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalCaseReport {
    pub t_values: Vec<f64>,
    /// `int_{T/2}^T int_{Omega_1} |u|^p phi`
    pub center_tail: Vec<f64>,
    /// `int_{T/2}^T int_{annulus} |u|^p phi`
    pub annulus_tail: Vec<f64>,
    /// `int_0^T int_{annulus} |u|^p phi`
    pub annulus_full: Vec<f64>,
    pub trend: TailTrend,
}

/// Tail integrals of `|u|^p phi` over the late-time window and the
/// derivative-support annulus, per ladder horizon.
pub fn critical_tail_report(
    traj: &Trajectory,
    family: &TestFunctionFamily,
    p: f64,
    grid: &RadialGrid,
    t_ladder: &[f64],
) -> Result<CriticalCaseReport> {
    if t_ladder.is_empty() {
        return Err(Error::InsufficientPoints { got: 0, min: 1 });
    }
    let mut t_sorted = t_ladder.to_vec();
    t_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let max_t = *t_sorted.last().unwrap();
    check_window(traj, max_t)?;

    let mut center_tail = Vec::new();
    let mut annulus_tail = Vec::new();
    let mut annulus_full = Vec::new();
    for &t_hor in &t_sorted {
        let fam = family.with_horizon(t_hor)?;
        let table = spatial_table(&fam, grid)?;
        let mut times = Vec::new();
        let mut s_center = Vec::new();
        let mut s_annulus = Vec::new();
        for (j, &t) in traj.times.iter().enumerate() {
            if t > t_hor + 1e-12 {
                break;
            }
            let (eta, _, _) = fam.temporal.powered(t);
            let u = &traj.u[j];
            let mut c = 0.0;
            let mut a = 0.0;
            for i in 0..u.len() {
                let r = grid.nodes()[i];
                let val = grid.quad_weights()[i] * u[i].abs().powf(p) * table[i].plateau * eta;
                c += val;
                if r >= t_hor && r <= 2.0 * t_hor {
                    a += val;
                }
            }
            times.push(t);
            s_center.push(c);
            s_annulus.push(a);
        }
        if *times.last().unwrap() < t_hor {
            times.push(t_hor);
            s_center.push(0.0);
            s_annulus.push(0.0);
        }
        center_tail.push(integrate_sampled(&times, &s_center, 0.5 * t_hor, t_hor));
        annulus_tail.push(integrate_sampled(&times, &s_annulus, 0.5 * t_hor, t_hor));
        annulus_full.push(integrate_sampled(&times, &s_annulus, 0.0, t_hor));
    }

    let peak: Vec<f64> = (0..t_sorted.len())
        .map(|j| center_tail[j].max(annulus_tail[j]).max(annulus_full[j]))
        .collect();
    let first = peak[0];
    let last = *peak.last().unwrap();
    let trend = if last <= 1e-14 || (first > 0.0 && last < 0.5 * first) {
        TailTrend::Vanishing
    } else if first > 0.0 && last > 2.0 * first {
        TailTrend::Growing
    } else {
        TailTrend::Bounded
    };

    Ok(CriticalCaseReport {
        t_values: t_sorted,
        center_tail,
        annulus_tail,
        annulus_full,
        trend,
    })
}

/// Analytic mode `A e^{lambda t} sin(m pi r / L)` of the linear equation on
/// the half-line segment `[0, L]`, usable as an exact reference trajectory.
pub fn linear_mode_trajectory(
    grid: &RadialGrid,
    mode: usize,
    amplitude: f64,
    t_end: f64,
    snapshots: usize,
) -> Result<Trajectory> {
    if grid.dim() != 1 {
        return Err(Error::InvalidDimension { dim: grid.dim() });
    }
    let length = grid.r_max() - grid.r_obstacle();
    let mu = (mode as f64 * std::f64::consts::PI / length).powi(2);
    // u_tt = Delta u + Delta u_t on the mode: lambda^2 + mu lambda + mu = 0
    let disc = mu * mu - 4.0 * mu;
    if disc < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "mode {mode} on length {length} is oscillatory (mu = {mu} < 4); pick a higher mode"
        )));
    }
    let lambda = 0.5 * (-mu + disc.sqrt());
    let shape: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&r| amplitude * (mode as f64 * std::f64::consts::PI * (r - grid.r_obstacle()) / length).sin())
        .collect();
    let mut times = Vec::with_capacity(snapshots + 1);
    let mut u = Vec::with_capacity(snapshots + 1);
    let mut v = Vec::with_capacity(snapshots + 1);
    for j in 0..=snapshots {
        let t = t_end * j as f64 / snapshots as f64;
        let amp = (lambda * t).exp();
        times.push(t);
        u.push(shape.iter().map(|s| s * amp).collect());
        v.push(shape.iter().map(|s| s * amp * lambda).collect());
    }
    Ok(Trajectory::from_snapshots(times, u, v, SourceKind::Linear))
}
