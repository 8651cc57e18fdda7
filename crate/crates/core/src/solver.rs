//! Time integration of `u_tt - Delta u - Delta u_t = |u|^p` on the radial
//! exterior grid with homogeneous Dirichlet boundaries.
//!
//! The strong damping term makes the linear part stiff, so both `-Delta u`
//! and `-Delta u_t` are treated implicitly by the trapezoidal rule while the
//! nonlinearity is evaluated explicitly at the half step. Writing `v = u_t`
//! and eliminating `u^{n+1}` reduces each step to a single tridiagonal solve:
//!
//! ```text
//! (I - c L) v^{n+1} = v^n + dt L u^n + c L v^n + dt N^{n+1/2},  c = dt/2 + dt^2/4
//! u^{n+1} = u^n + dt/2 (v^n + v^{n+1})
//! ```
//!
//! With the conservative discrete Laplacian this scheme dissipates the
//! discrete energy exactly in the linear regime, step by step.
//!
//! Blow-up is certified numerically by two signals: the `H^1 + L^2` norm
//! crossing a threshold, or the adaptive step collapsing below a floor while
//! the norms grow monotonically. An activity monitor on the outermost nodes
//! guards against domain-truncation pollution.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{RadialField, RadialGrid};

/// Round-off tolerance for the nonnegativity and boundary checks.
const DATA_TOL: f64 = 1e-12;

/// Initial displacement and velocity fields.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub u0: RadialField,
    pub u1: RadialField,
    pub description: String,
}

/// Integration controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Controls {
    pub t_end: f64,
    /// Base time step; the adaptive step is `dt0 * min(1, sup|u|^{1-p})`.
    pub dt0: f64,
    #[serde(default = "default_blowup_threshold")]
    pub blowup_threshold: f64,
    #[serde(default = "default_dt_floor")]
    pub dt_floor: f64,
    /// Full field snapshots are stored every this many steps.
    #[serde(default = "default_snapshot_stride")]
    pub snapshot_stride: usize,
}

fn default_blowup_threshold() -> f64 {
    1e6
}

fn default_dt_floor() -> f64 {
    1e-12
}

fn default_snapshot_stride() -> usize {
    16
}

impl Default for Controls {
    fn default() -> Self {
        Controls {
            t_end: 10.0,
            dt0: 1e-2,
            blowup_threshold: default_blowup_threshold(),
            dt_floor: default_dt_floor(),
            snapshot_stride: default_snapshot_stride(),
        }
    }
}

/// One row of the per-step norm history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub t: f64,
    pub sup_u: f64,
    pub l2_u: f64,
    pub h1_semi_u: f64,
    pub l2_v: f64,
    pub dt: f64,
    pub boundary_activity: f64,
}

/// Evolving solver state: `(u, u_t)` plus time, step size, and norm history.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub u: RadialField,
    pub v: RadialField,
    pub time: f64,
    pub dt: f64,
    pub history: Vec<HistoryRow>,
    /// Running max of |u| over the outermost 5% of nodes.
    pub outer_boundary_activity: f64,
}

/// What drove a stored trajectory: the power nonlinearity or none.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SourceKind {
    Power(f64),
    Linear,
}

/// Snapshots of `(u, v)` at a fixed step stride, for diagnostics quadrature.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub u: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub source: SourceKind,
    pub stride: usize,
}

impl Trajectory {
    pub fn from_snapshots(
        times: Vec<f64>,
        u: Vec<Vec<f64>>,
        v: Vec<Vec<f64>>,
        source: SourceKind,
    ) -> Self {
        assert_eq!(times.len(), u.len());
        assert_eq!(times.len(), v.len());
        Trajectory { times, u, v, source, stride: 1 }
    }

    pub fn final_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    pub fn initial_u(&self) -> RadialField {
        RadialField { values: self.u[0].clone() }
    }

    pub fn initial_v(&self) -> RadialField {
        RadialField { values: self.v[0].clone() }
    }
}

/// How a blow-up verdict was certified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Certainty {
    /// The `H^1 + L^2` norm crossed the threshold.
    Threshold,
    /// The adaptive step collapsed below the floor under monotone norm growth.
    DtCollapse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    BlowUp {
        t_max_estimate: f64,
        /// Self-similar fit of the last decade of growth against
        /// `(t* - t)^{-2/(p-1)}`; reported alongside, never asserted.
        t_max_fit: Option<f64>,
        certainty: Certainty,
    },
    SurvivedHorizon { t_end: f64 },
    Inconclusive { reason: String },
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::BlowUp { .. } => "BlowUp",
            Verdict::SurvivedHorizon { .. } => "SurvivedHorizon",
            Verdict::Inconclusive { .. } => "Inconclusive",
        }
    }

    pub fn t_max_estimate(&self) -> Option<f64> {
        match self {
            Verdict::BlowUp { t_max_estimate, .. } => Some(*t_max_estimate),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSnapshot {
    pub t: f64,
    pub sup_u: f64,
    pub l2_u: f64,
    pub h1_semi_u: f64,
    pub l2_v: f64,
}

/// Verdict plus final norms and resolution metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub verdict: Verdict,
    pub final_norms: NormSnapshot,
    pub dim: usize,
    pub cells: usize,
    pub steps_taken: usize,
    pub warnings: Vec<String>,
}

/// Everything a run produces: the outcome, the norm history, the trajectory.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub outcome: RunOutcome,
    pub history: Vec<HistoryRow>,
    pub trajectory: Trajectory,
}

/// Validate nonnegativity and boundary compatibility of initial data.
///
/// Negative values above `-1e-12` are treated as round-off and clamped; the
/// obstacle node must vanish; the truncation node is clamped to zero since
/// it is an artifact of the finite domain.
pub fn validate_initial_data(data: &InitialData, grid: &RadialGrid) -> Result<InitialData> {
    let mut cleaned = data.clone();
    for (name, field) in [("u0", &mut cleaned.u0), ("u1", &mut cleaned.u1)] {
        if field.values.len() != grid.node_count() {
            return Err(Error::GridMismatch {
                field_len: field.values.len(),
                grid_len: grid.node_count(),
            });
        }
        for (i, v) in field.values.iter_mut().enumerate() {
            if *v < -DATA_TOL {
                return Err(Error::NegativeData { min: *v, r: grid.nodes()[i] });
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        if field.values[0].abs() > DATA_TOL {
            return Err(Error::BoundaryMismatch {
                which: name,
                r: grid.r_obstacle(),
                value: field.values[0],
            });
        }
        field.values[0] = 0.0;
        *field.values.last_mut().unwrap() = 0.0;
    }
    Ok(cleaned)
}

/// Conservative-form Laplacian as tridiagonal coefficients, with zero rows at
/// the Dirichlet boundary nodes.
struct LaplacianOp {
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
}

impl LaplacianOp {
    fn new(grid: &RadialGrid) -> Self {
        let m = grid.node_count();
        let nu = grid.dim() as i32 - 1;
        let mut sub = vec![0.0; m];
        let mut diag = vec![0.0; m];
        let mut sup = vec![0.0; m];
        let r = grid.nodes();
        for i in 1..m - 1 {
            let hm = r[i] - r[i - 1];
            let hp = r[i + 1] - r[i];
            let am = (0.5 * (r[i - 1] + r[i])).powi(nu);
            let ap = (0.5 * (r[i] + r[i + 1])).powi(nu);
            let w = r[i].powi(nu) * 0.5 * (hm + hp);
            sub[i] = am / (hm * w);
            sup[i] = ap / (hp * w);
            diag[i] = -(sub[i] + sup[i]);
        }
        LaplacianOp { sub, diag, sup }
    }

    fn apply(&self, f: &[f64], out: &mut [f64]) {
        let m = f.len();
        out[0] = 0.0;
        out[m - 1] = 0.0;
        for i in 1..m - 1 {
            out[i] = self.sub[i] * f[i - 1] + self.diag[i] * f[i] + self.sup[i] * f[i + 1];
        }
    }
}

/// Reusable per-grid stepping workspace.
pub struct Stepper<'g> {
    grid: &'g RadialGrid,
    lap: LaplacianOp,
    lu: Vec<f64>,
    lv: Vec<f64>,
    rhs: Vec<f64>,
    a_sub: Vec<f64>,
    a_diag: Vec<f64>,
    a_sup: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'g> Stepper<'g> {
    pub fn new(grid: &'g RadialGrid) -> Self {
        let m = grid.node_count();
        Stepper {
            grid,
            lap: LaplacianOp::new(grid),
            lu: vec![0.0; m],
            lv: vec![0.0; m],
            rhs: vec![0.0; m],
            a_sub: vec![0.0; m],
            a_diag: vec![0.0; m],
            a_sup: vec![0.0; m],
            scratch: vec![0.0; m],
        }
    }

    /// Advance the state by `state.dt`. The forcing, when present, is
    /// evaluated at the half step together with the nonlinearity.
    pub fn step(
        &mut self,
        state: &mut SolverState,
        source: SourceKind,
        forcing: Option<&dyn Fn(f64, f64) -> f64>,
    ) -> Result<()> {
        let m = self.grid.node_count();
        let dt = state.dt;
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!("step size must be positive, got {dt}")));
        }
        let c = 0.5 * dt + 0.25 * dt * dt;
        self.lap.apply(&state.u.values, &mut self.lu);
        self.lap.apply(&state.v.values, &mut self.lv);

        let t_half = state.time + 0.5 * dt;
        for i in 0..m {
            let mut n_half = match source {
                SourceKind::Power(p) => {
                    let u_half = state.u.values[i] + 0.5 * dt * state.v.values[i];
                    u_half.abs().powf(p)
                }
                SourceKind::Linear => 0.0,
            };
            if let Some(f) = forcing {
                n_half += f(self.grid.nodes()[i], t_half);
            }
            self.rhs[i] = state.v.values[i] + dt * self.lu[i] + c * self.lv[i] + dt * n_half;
            self.a_sub[i] = -c * self.lap.sub[i];
            self.a_diag[i] = 1.0 - c * self.lap.diag[i];
            self.a_sup[i] = -c * self.lap.sup[i];
        }
        // Dirichlet rows
        self.a_diag[0] = 1.0;
        self.a_sup[0] = 0.0;
        self.rhs[0] = 0.0;
        self.a_diag[m - 1] = 1.0;
        self.a_sub[m - 1] = 0.0;
        self.rhs[m - 1] = 0.0;

        thomas_solve(
            &self.a_sub,
            &self.a_diag,
            &self.a_sup,
            &mut self.rhs,
            &mut self.scratch,
        )
        .map_err(|detail| Error::LinearSolveFailure { time: state.time, detail })?;

        let mut finite = true;
        for i in 0..m {
            let v_new = self.rhs[i];
            state.u.values[i] += 0.5 * dt * (state.v.values[i] + v_new);
            state.v.values[i] = v_new;
            finite &= state.u.values[i].is_finite() && v_new.is_finite();
        }
        state.time += dt;
        if !finite {
            return Err(Error::NonFinite { time: state.time });
        }
        Ok(())
    }
}

/// Thomas algorithm for a tridiagonal system; overwrites `rhs` with the
/// solution. The Crank-Nicolson matrix is strictly diagonally dominant, so
/// no pivoting is needed.
fn thomas_solve(
    sub: &[f64],
    diag: &[f64],
    sup: &[f64],
    rhs: &mut [f64],
    scratch: &mut [f64],
) -> std::result::Result<(), String> {
    let m = rhs.len();
    let mut d = diag[0];
    if d.abs() < 1e-300 || !d.is_finite() {
        return Err(format!("zero pivot at row 0: {d}"));
    }
    scratch[0] = sup[0] / d;
    rhs[0] /= d;
    for i in 1..m {
        d = diag[i] - sub[i] * scratch[i - 1];
        if d.abs() < 1e-300 || !d.is_finite() {
            return Err(format!("degenerate pivot at row {i}: {d}"));
        }
        scratch[i] = sup[i] / d;
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / d;
    }
    for i in (0..m - 1).rev() {
        rhs[i] -= scratch[i] * rhs[i + 1];
    }
    Ok(())
}

/// One Crank-Nicolson step with the power nonlinearity; convenience wrapper
/// that rebuilds the operator. Use [`Stepper`] in hot loops.
pub fn step(state: &mut SolverState, grid: &RadialGrid, p: f64) -> Result<()> {
    Stepper::new(grid).step(state, SourceKind::Power(p), None)
}

/// Discrete energy `1/2 ||v||^2 + 1/2 |u|_{H^1}^2` of the linear flow.
pub fn discrete_energy(grid: &RadialGrid, u: &RadialField, v: &RadialField) -> Result<f64> {
    Ok(0.5 * grid.l2_norm(v)?.powi(2) + 0.5 * grid.h1_seminorm(u)?.powi(2))
}

fn norms(grid: &RadialGrid, state: &SolverState) -> Result<NormSnapshot> {
    Ok(NormSnapshot {
        t: state.time,
        sup_u: grid.sup_norm(&state.u)?,
        l2_u: grid.l2_norm(&state.u)?,
        h1_semi_u: grid.h1_seminorm(&state.u)?,
        l2_v: grid.l2_norm(&state.v)?,
    })
}

/// The blow-up detection functional `||u||_{H^1} + ||u_t||_2`.
fn detection_functional(n: &NormSnapshot) -> f64 {
    (n.l2_u * n.l2_u + n.h1_semi_u * n.h1_semi_u).sqrt() + n.l2_v
}

fn boundary_band_max(grid: &RadialGrid, u: &RadialField) -> f64 {
    let m = grid.node_count();
    let band = (m / 20).max(2);
    u.values[m - 1 - band..m - 1]
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Integrate the full nonlinear problem and classify the outcome.
pub fn run(
    grid: &RadialGrid,
    data: &InitialData,
    p: f64,
    controls: &Controls,
) -> Result<RunResult> {
    if !(p > 1.0) {
        return Err(Error::InvalidParameter(format!("exponent p must exceed 1, got {p}")));
    }
    run_with_source(grid, data, SourceKind::Power(p), controls)
}

/// Integrate with the nonlinearity switched off (the linear damped equation).
pub fn run_linear(grid: &RadialGrid, data: &InitialData, controls: &Controls) -> Result<RunResult> {
    run_with_source(grid, data, SourceKind::Linear, controls)
}

fn run_with_source(
    grid: &RadialGrid,
    data: &InitialData,
    source: SourceKind,
    controls: &Controls,
) -> Result<RunResult> {
    if !(controls.t_end > 0.0 && controls.dt0 > 0.0 && controls.dt_floor > 0.0) {
        return Err(Error::InvalidParameter(
            "controls t_end, dt0, dt_floor must be positive".into(),
        ));
    }
    let data = validate_initial_data(data, grid)?;
    let mut warnings = Vec::new();
    if let SourceKind::Power(p) = source {
        let n = grid.dim();
        if n >= 3 && p > n as f64 / (n as f64 - 2.0) {
            warnings.push(format!(
                "p = {p} exceeds the local well-posedness range n/(n-2) = {} for n = {n}",
                n as f64 / (n as f64 - 2.0)
            ));
        }
    }

    let mut state = SolverState {
        u: data.u0.clone(),
        v: data.u1.clone(),
        time: 0.0,
        dt: controls.dt0,
        history: Vec::new(),
        outer_boundary_activity: 0.0,
    };
    let mut stepper = Stepper::new(grid);
    let stride = controls.snapshot_stride.max(1);
    let mut traj_times = Vec::new();
    let mut traj_u = Vec::new();
    let mut traj_v = Vec::new();
    let mut running_sup = 0.0_f64;
    let mut steps = 0usize;

    let record =
        |state: &mut SolverState, running_sup: &mut f64, grid: &RadialGrid| -> Result<NormSnapshot> {
            let n = norms(grid, state)?;
            *running_sup = running_sup.max(n.sup_u);
            state.outer_boundary_activity =
                state.outer_boundary_activity.max(boundary_band_max(grid, &state.u));
            state.history.push(HistoryRow {
                t: n.t,
                sup_u: n.sup_u,
                l2_u: n.l2_u,
                h1_semi_u: n.h1_semi_u,
                l2_v: n.l2_v,
                dt: state.dt,
                boundary_activity: state.outer_boundary_activity,
            });
            Ok(n)
        };

    let snapshot = |state: &SolverState, times: &mut Vec<f64>, us: &mut Vec<Vec<f64>>, vs: &mut Vec<Vec<f64>>| {
        times.push(state.time);
        us.push(state.u.values.clone());
        vs.push(state.v.values.clone());
    };

    let mut last = record(&mut state, &mut running_sup, grid)?;
    snapshot(&state, &mut traj_times, &mut traj_u, &mut traj_v);

    let finish = |verdict: Verdict,
                  state: SolverState,
                  last: NormSnapshot,
                  running_sup: f64,
                  steps: usize,
                  mut traj_times: Vec<f64>,
                  mut traj_u: Vec<Vec<f64>>,
                  mut traj_v: Vec<Vec<f64>>,
                  warnings: Vec<String>|
     -> RunResult {
        // truncation-pollution guard can downgrade any verdict
        let verdict = if running_sup > 0.0
            && state.outer_boundary_activity > 1e-6 * running_sup
        {
            Verdict::Inconclusive {
                reason: format!(
                    "outer boundary activity {} exceeds 1e-6 * sup-norm {}; enlarge r_max",
                    state.outer_boundary_activity, running_sup
                ),
            }
        } else {
            verdict
        };
        if traj_times.last() != Some(&state.time) {
            traj_times.push(state.time);
            traj_u.push(state.u.values.clone());
            traj_v.push(state.v.values.clone());
        }
        let source_tag = source;
        RunResult {
            outcome: RunOutcome {
                verdict,
                final_norms: last,
                dim: grid.dim(),
                cells: grid.node_count() - 1,
                steps_taken: steps,
                warnings,
            },
            history: state.history.clone(),
            trajectory: Trajectory {
                times: traj_times,
                u: traj_u,
                v: traj_v,
                source: source_tag,
                stride,
            },
        }
    };

    loop {
        // adaptive step: dt0 capped, shrinking like sup|u|^{1-p}
        let mut dt = match source {
            SourceKind::Power(p) if last.sup_u > 1.0 => controls.dt0 * last.sup_u.powf(1.0 - p),
            _ => controls.dt0,
        };
        let remaining = controls.t_end - state.time;
        if remaining <= 0.0 {
            let verdict = Verdict::SurvivedHorizon { t_end: controls.t_end };
            return Ok(finish(verdict, state, last, running_sup, steps, traj_times, traj_u, traj_v, warnings));
        }
        if dt < controls.dt_floor {
            let verdict = dt_collapse_verdict(&state, source, controls);
            return Ok(finish(verdict, state, last, running_sup, steps, traj_times, traj_u, traj_v, warnings));
        }
        dt = dt.min(remaining);
        state.dt = dt;

        match stepper.step(&mut state, source, None) {
            Ok(()) => {}
            Err(Error::NonFinite { time }) => {
                let verdict = Verdict::BlowUp {
                    t_max_estimate: time,
                    t_max_fit: fit_blowup_time(&state.history, source),
                    certainty: Certainty::Threshold,
                };
                return Ok(finish(verdict, state, last, running_sup, steps, traj_times, traj_u, traj_v, warnings));
            }
            Err(e) => return Err(e),
        }
        steps += 1;
        last = record(&mut state, &mut running_sup, grid)?;
        if steps.is_multiple_of(stride) {
            snapshot(&state, &mut traj_times, &mut traj_u, &mut traj_v);
        }

        if detection_functional(&last) >= controls.blowup_threshold {
            let t_cross = threshold_crossing_time(&state.history, controls.blowup_threshold);
            let verdict = Verdict::BlowUp {
                t_max_estimate: t_cross,
                t_max_fit: fit_blowup_time(&state.history, source),
                certainty: Certainty::Threshold,
            };
            return Ok(finish(verdict, state, last, running_sup, steps, traj_times, traj_u, traj_v, warnings));
        }
    }
}

fn dt_collapse_verdict(state: &SolverState, source: SourceKind, controls: &Controls) -> Verdict {
    let h = &state.history;
    let window = h.len().saturating_sub(8);
    let growing = h.len() >= 2
        && h[window..].windows(2).all(|w| {
            detection_functional(&row_norms(&w[1])) >= detection_functional(&row_norms(&w[0]))
        });
    if growing {
        let fit = fit_blowup_time(h, source);
        Verdict::BlowUp {
            t_max_estimate: fit.unwrap_or(state.time),
            t_max_fit: fit,
            certainty: Certainty::DtCollapse,
        }
    } else {
        Verdict::Inconclusive {
            reason: format!(
                "step size fell below the floor {} at t = {} without monotone norm growth",
                controls.dt_floor, state.time
            ),
        }
    }
}

fn row_norms(r: &HistoryRow) -> NormSnapshot {
    NormSnapshot { t: r.t, sup_u: r.sup_u, l2_u: r.l2_u, h1_semi_u: r.h1_semi_u, l2_v: r.l2_v }
}

fn threshold_crossing_time(history: &[HistoryRow], threshold: f64) -> f64 {
    for w in history.windows(2) {
        let f0 = detection_functional(&row_norms(&w[0]));
        let f1 = detection_functional(&row_norms(&w[1]));
        if f0 < threshold && f1 >= threshold {
            let frac = (threshold - f0) / (f1 - f0);
            return w[0].t + frac * (w[1].t - w[0].t);
        }
    }
    history.last().map(|r| r.t).unwrap_or(0.0)
}

/// Fit the last decade of sup-norm growth against `(t* - t)^{-2/(p-1)}`:
/// `sup^{-(p-1)/2}` is linear in `t` with root `t*`.
fn fit_blowup_time(history: &[HistoryRow], source: SourceKind) -> Option<f64> {
    let p = match source {
        SourceKind::Power(p) => p,
        SourceKind::Linear => return None,
    };
    let sup_final = history.last()?.sup_u;
    if !(sup_final > 0.0) {
        return None;
    }
    let pts: Vec<(f64, f64)> = history
        .iter()
        .filter(|r| r.sup_u >= sup_final / 10.0 && r.sup_u > 0.0)
        .map(|r| (r.t, r.sup_u.powf(-(p - 1.0) / 2.0)))
        .collect();
    if pts.len() < 5 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|(t, _)| t).sum();
    let sy: f64 = pts.iter().map(|(_, y)| y).sum();
    let sxx: f64 = pts.iter().map(|(t, _)| t * t).sum();
    let sxy: f64 = pts.iter().map(|(t, y)| t * y).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return None;
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    if slope >= 0.0 {
        return None; // y must decrease toward the root
    }
    let t_star = -intercept / slope;
    let t_last = history.last()?.t;
    (t_star >= t_last).then_some(t_star)
}

/// A prescribed exact solution with all the derivatives the residual forcing
/// needs.
pub trait ManufacturedSolution {
    fn value(&self, r: f64, t: f64) -> f64;
    fn d_t(&self, r: f64, t: f64) -> f64;
    fn d_tt(&self, r: f64, t: f64) -> f64;
    fn d_r(&self, r: f64, t: f64) -> f64;
    fn d_rr(&self, r: f64, t: f64) -> f64;
    fn d_rt(&self, r: f64, t: f64) -> f64;
    fn d_rrt(&self, r: f64, t: f64) -> f64;
}

/// `A e^{-t} sin(pi (r - r0) / (r_max - r0))`, vanishing at both ends.
#[derive(Debug, Clone, Copy)]
pub struct DecayingSine {
    pub r0: f64,
    pub r_max: f64,
    pub amplitude: f64,
}

impl DecayingSine {
    fn wave_number(&self) -> f64 {
        std::f64::consts::PI / (self.r_max - self.r0)
    }
}

impl ManufacturedSolution for DecayingSine {
    fn value(&self, r: f64, t: f64) -> f64 {
        self.amplitude * (-t).exp() * (self.wave_number() * (r - self.r0)).sin()
    }
    fn d_t(&self, r: f64, t: f64) -> f64 {
        -self.value(r, t)
    }
    fn d_tt(&self, r: f64, t: f64) -> f64 {
        self.value(r, t)
    }
    fn d_r(&self, r: f64, t: f64) -> f64 {
        let k = self.wave_number();
        self.amplitude * (-t).exp() * k * (k * (r - self.r0)).cos()
    }
    fn d_rr(&self, r: f64, t: f64) -> f64 {
        -self.wave_number().powi(2) * self.value(r, t)
    }
    fn d_rt(&self, r: f64, t: f64) -> f64 {
        -self.d_r(r, t)
    }
    fn d_rrt(&self, r: f64, t: f64) -> f64 {
        self.wave_number().powi(2) * self.value(r, t)
    }
}

/// Error at the final time for one resolution of the manufactured study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolutionError {
    pub cells: usize,
    pub dt: f64,
    pub l2_error: f64,
}

/// Errors across a combined space-time refinement plus the fitted order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub resolutions: Vec<ResolutionError>,
    pub fitted_order: f64,
}

/// Integrate the equation plus the residual forcing of `exact` across
/// `levels >= 3` combined space-time refinements starting from `grid`.
pub fn manufactured_run(
    grid: &RadialGrid,
    exact: &dyn ManufacturedSolution,
    p: f64,
    controls: &Controls,
    levels: usize,
) -> Result<ConvergenceReport> {
    if levels < 3 {
        return Err(Error::InsufficientPoints { got: levels, min: 3 });
    }
    if !(p > 1.0) {
        return Err(Error::InvalidParameter(format!("exponent p must exceed 1, got {p}")));
    }
    // the exact solution must respect the Dirichlet boundary
    for t in [0.0, 0.5 * controls.t_end, controls.t_end] {
        for r in [grid.r_obstacle(), grid.r_max()] {
            let v = exact.value(r, t);
            if v.abs() > DATA_TOL {
                return Err(Error::BoundaryMismatch { which: "exact", r, value: v });
            }
        }
    }

    let n_dim = grid.dim();
    let curv = |r: f64| if n_dim >= 2 { (n_dim as f64 - 1.0) / r } else { 0.0 };
    let forcing = |r: f64, t: f64| {
        let lap_u = exact.d_rr(r, t) + curv(r) * exact.d_r(r, t);
        let lap_ut = exact.d_rrt(r, t) + curv(r) * exact.d_rt(r, t);
        exact.d_tt(r, t) - lap_u - lap_ut - exact.value(r, t).abs().powf(p)
    };

    let base_cells = grid.node_count() - 1;
    let mut resolutions = Vec::new();
    for level in 0..levels {
        let cells = base_cells << level;
        let fine = crate::grid::build_radial_grid(
            n_dim,
            grid.r_obstacle(),
            grid.r_max(),
            cells,
            grid.grading(),
        )?;
        let steps = ((controls.t_end / controls.dt0).round() as usize).max(1) << level;
        let dt = controls.t_end / steps as f64;

        let mut state = SolverState {
            u: RadialField::from_fn(&fine, |r| exact.value(r, 0.0)),
            v: RadialField::from_fn(&fine, |r| exact.d_t(r, 0.0)),
            time: 0.0,
            dt,
            history: Vec::new(),
            outer_boundary_activity: 0.0,
        };
        // pin the boundary values exactly
        let m = fine.node_count();
        for f in [&mut state.u, &mut state.v] {
            f.values[0] = 0.0;
            f.values[m - 1] = 0.0;
        }
        let mut stepper = Stepper::new(&fine);
        for _ in 0..steps {
            state.dt = dt;
            stepper.step(&mut state, SourceKind::Power(p), Some(&forcing))?;
        }
        let diff = RadialField {
            values: fine
                .nodes()
                .iter()
                .zip(&state.u.values)
                .map(|(&r, &u)| u - exact.value(r, controls.t_end))
                .collect(),
        };
        resolutions.push(ResolutionError { cells, dt, l2_error: fine.l2_norm(&diff)? });
    }

    let pts: Vec<(f64, f64)> = resolutions
        .iter()
        .filter(|r| r.l2_error > 0.0)
        .map(|r| ((1.0 / r.cells as f64).ln(), r.l2_error.ln()))
        .collect();
    let fitted_order = if pts.len() >= 2 { least_squares_slope(&pts) } else { f64::INFINITY };
    Ok(ConvergenceReport { resolutions, fitted_order })
}

pub(crate) fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|(x, _)| x).sum();
    let sy: f64 = pts.iter().map(|(_, y)| y).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| x * y).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_radial_grid, Grading};
    use approx::assert_relative_eq;

    fn half_line(cells: usize) -> RadialGrid {
        build_radial_grid(1, 0.0, 20.0, cells, Grading::Uniform).unwrap()
    }

    fn bump_data(grid: &RadialGrid, amplitude: f64) -> InitialData {
        let u0 = RadialField::from_fn(grid, |r| {
            let s: f64 = (r - 2.0) / 1.0;
            if s.abs() < 1.0 {
                amplitude * (-1.0 / (1.0 - s * s)).exp() * std::f64::consts::E
            } else {
                0.0
            }
        });
        InitialData { u0: u0.clone(), u1: u0, description: "bump".into() }
    }

    #[test]
    fn zero_data_stays_zero() {
        let grid = half_line(64);
        let data = InitialData {
            u0: RadialField::zeros(&grid),
            u1: RadialField::zeros(&grid),
            description: "zero".into(),
        };
        let result = run(&grid, &data, 2.0, &Controls { t_end: 1.0, ..Default::default() }).unwrap();
        assert!(matches!(result.outcome.verdict, Verdict::SurvivedHorizon { .. }));
        assert_eq!(result.outcome.final_norms.sup_u, 0.0);
        assert_eq!(result.outcome.final_norms.l2_v, 0.0);
    }

    #[test]
    fn validation_rejects_bad_data() {
        let grid = half_line(64);
        let neg = InitialData {
            u0: RadialField::from_fn(&grid, |_| -0.1),
            u1: RadialField::zeros(&grid),
            description: "negative".into(),
        };
        assert!(matches!(
            validate_initial_data(&neg, &grid).unwrap_err(),
            Error::NegativeData { .. }
        ));
        let mut off = bump_data(&grid, 1.0);
        off.u0.values[0] = 0.5;
        assert!(matches!(
            validate_initial_data(&off, &grid).unwrap_err(),
            Error::BoundaryMismatch { .. }
        ));
        // round-off negatives are clamped
        let mut tiny = bump_data(&grid, 1.0);
        tiny.u0.values[5] = -1e-13;
        let cleaned = validate_initial_data(&tiny, &grid).unwrap();
        assert_eq!(cleaned.u0.values[5], 0.0);
    }

    #[test]
    fn linear_energy_is_nonincreasing() {
        let grid = half_line(256);
        let data = bump_data(&grid, 1.0);
        let data = validate_initial_data(&data, &grid).unwrap();
        let mut state = SolverState {
            u: data.u0.clone(),
            v: data.u1.clone(),
            time: 0.0,
            dt: 0.01,
            history: Vec::new(),
            outer_boundary_activity: 0.0,
        };
        let mut stepper = Stepper::new(&grid);
        let mut e_prev = discrete_energy(&grid, &state.u, &state.v).unwrap();
        let e0 = e_prev;
        for _ in 0..200 {
            stepper.step(&mut state, SourceKind::Linear, None).unwrap();
            let e = discrete_energy(&grid, &state.u, &state.v).unwrap();
            assert!(e <= e_prev + 1e-10 * e0, "energy increased: {e_prev} -> {e}");
            e_prev = e;
        }
    }

    #[test]
    fn exponential_profile_blows_up() {
        // u0 = u1 = 5 x e^{-x}: positive data on the half-line, p = 2
        let grid = half_line(512);
        let u0 = RadialField::from_fn(&grid, |x| 5.0 * x * (-x).exp());
        let data = InitialData { u0: u0.clone(), u1: u0, description: "5 x exp(-x)".into() };
        let controls = Controls { t_end: 10.0, dt0: 5e-3, ..Default::default() };
        let result = run(&grid, &data, 2.0, &controls).unwrap();
        assert!(
            matches!(result.outcome.verdict, Verdict::BlowUp { .. }),
            "{:?}",
            result.outcome.verdict
        );
    }

    #[test]
    fn blow_up_detected_on_half_line() {
        let grid = half_line(512);
        let data = bump_data(&grid, 5.0);
        let controls = Controls { t_end: 10.0, dt0: 5e-3, ..Default::default() };
        let result = run(&grid, &data, 2.0, &controls).unwrap();
        match &result.outcome.verdict {
            Verdict::BlowUp { t_max_estimate, t_max_fit, .. } => {
                assert!(*t_max_estimate > 0.0);
                if let Some(fit) = t_max_fit {
                    assert!(*fit >= *t_max_estimate * 0.8);
                }
            }
            other => panic!("expected blow-up, got {other:?}"),
        }
        // history is strictly increasing in t
        for w in result.history.windows(2) {
            assert!(w[1].t > w[0].t);
        }
    }

    #[test]
    fn larger_data_blows_up_no_later() {
        let grid = half_line(256);
        let controls = Controls { t_end: 20.0, dt0: 5e-3, ..Default::default() };
        let mut previous = f64::INFINITY;
        for lambda in [2.0, 4.0, 8.0] {
            let result = run(&grid, &bump_data(&grid, lambda), 2.0, &controls).unwrap();
            let t_max = result
                .outcome
                .verdict
                .t_max_estimate()
                .unwrap_or(f64::INFINITY);
            assert!(
                t_max <= previous + 1e-6,
                "t_max not nonincreasing in the data scale: {t_max} after {previous}"
            );
            previous = t_max;
        }
    }

    #[test]
    fn truncation_pollution_flags_inconclusive() {
        // tight domain, long horizon: the spreading solution reaches the
        // outer band and the monitor downgrades the verdict
        let grid = build_radial_grid(1, 0.0, 6.0, 256, Grading::Uniform).unwrap();
        let data = bump_data(&grid, 0.5);
        let controls = Controls { t_end: 20.0, dt0: 0.01, ..Default::default() };
        let result = crate::solver::run_linear(&grid, &data, &controls).unwrap();
        match &result.outcome.verdict {
            Verdict::Inconclusive { reason } => assert!(reason.contains("boundary activity")),
            other => panic!("expected inconclusive, got {other:?}"),
        }
    }

    #[test]
    fn steep_exponent_certified_by_dt_collapse() {
        // p = 6 shrinks the adaptive step faster than the norms reach the
        // threshold, so the floor fires first
        let grid = half_line(256);
        let data = bump_data(&grid, 5.0);
        let controls =
            Controls { t_end: 10.0, dt0: 1e-3, dt_floor: 1e-7, ..Default::default() };
        let result = run(&grid, &data, 6.0, &controls).unwrap();
        match &result.outcome.verdict {
            Verdict::BlowUp { certainty, t_max_estimate, .. } => {
                assert_eq!(*certainty, Certainty::DtCollapse);
                assert!(*t_max_estimate > 0.0);
            }
            other => panic!("expected dt-collapse blow-up, got {other:?}"),
        }
    }

    #[test]
    fn survives_horizon_for_tiny_data() {
        let grid = half_line(256);
        let controls = Controls { t_end: 2.0, dt0: 1e-2, ..Default::default() };
        let result = run(&grid, &bump_data(&grid, 1e-3), 2.0, &controls).unwrap();
        assert!(matches!(result.outcome.verdict, Verdict::SurvivedHorizon { .. }));
    }

    #[test]
    fn well_posedness_warning_emitted() {
        let grid = build_radial_grid(3, 1.0, 10.0, 64, Grading::Uniform).unwrap();
        let data = InitialData {
            u0: RadialField::zeros(&grid),
            u1: RadialField::zeros(&grid),
            description: "zero".into(),
        };
        let controls = Controls { t_end: 0.1, ..Default::default() };
        let result = run(&grid, &data, 4.0, &controls).unwrap();
        assert_eq!(result.outcome.warnings.len(), 1);
        let result = run(&grid, &data, 2.0, &controls).unwrap();
        assert!(result.outcome.warnings.is_empty());
    }

    #[test]
    fn manufactured_solution_second_order() {
        let grid = build_radial_grid(1, 0.0, 10.0, 64, Grading::Uniform).unwrap();
        let exact = DecayingSine { r0: 0.0, r_max: 10.0, amplitude: 1.0 };
        let controls = Controls { t_end: 1.0, dt0: 0.05, ..Default::default() };
        let report = manufactured_run(&grid, &exact, 2.0, &controls, 3).unwrap();
        assert!(
            report.fitted_order >= 1.9,
            "order {} too low: {:?}",
            report.fitted_order,
            report.resolutions
        );
    }

    #[test]
    fn manufactured_zero_solution_gives_zero_error() {
        let grid = build_radial_grid(1, 0.0, 10.0, 32, Grading::Uniform).unwrap();
        let exact = DecayingSine { r0: 0.0, r_max: 10.0, amplitude: 0.0 };
        let controls = Controls { t_end: 0.5, dt0: 0.05, ..Default::default() };
        let report = manufactured_run(&grid, &exact, 2.0, &controls, 3).unwrap();
        for r in &report.resolutions {
            assert_eq!(r.l2_error, 0.0);
        }
    }

    #[test]
    fn manufactured_rejects_nonvanishing_boundary() {
        let grid = build_radial_grid(1, 0.0, 10.0, 32, Grading::Uniform).unwrap();
        // sine that does not vanish at r_max
        let exact = DecayingSine { r0: 0.0, r_max: 13.0, amplitude: 1.0 };
        let controls = Controls { t_end: 0.5, dt0: 0.05, ..Default::default() };
        assert!(matches!(
            manufactured_run(&grid, &exact, 2.0, &controls, 3).unwrap_err(),
            Error::BoundaryMismatch { .. }
        ));
    }

    #[test]
    fn determinism_bit_identical_history() {
        let grid = half_line(128);
        let data = bump_data(&grid, 3.0);
        let controls = Controls { t_end: 1.0, dt0: 1e-2, ..Default::default() };
        let a = run(&grid, &data, 2.0, &controls).unwrap();
        let b = run(&grid, &data, 2.0, &controls).unwrap();
        assert_eq!(a.history.len(), b.history.len());
        for (x, y) in a.history.iter().zip(&b.history) {
            assert_eq!(x.t.to_bits(), y.t.to_bits());
            assert_eq!(x.sup_u.to_bits(), y.sup_u.to_bits());
            assert_eq!(x.l2_u.to_bits(), y.l2_u.to_bits());
        }
    }

    #[test]
    fn thomas_solves_reference_system() {
        // compare against a dense solve of a small diagonally dominant system
        let sub = [0.0, -1.0, -0.5, -2.0];
        let diag = [4.0, 5.0, 4.5, 6.0];
        let sup = [-1.0, -0.5, -1.5, 0.0];
        let mut rhs = [1.0, 2.0, 3.0, 4.0];
        let mut scratch = [0.0; 4];
        thomas_solve(&sub, &diag, &sup, &mut rhs, &mut scratch).unwrap();
        // verify A x = b
        let x = rhs;
        let b = [
            diag[0] * x[0] + sup[0] * x[1],
            sub[1] * x[0] + diag[1] * x[1] + sup[1] * x[2],
            sub[2] * x[1] + diag[2] * x[2] + sup[2] * x[3],
            sub[3] * x[2] + diag[3] * x[3],
        ];
        for (got, want) in b.iter().zip([1.0, 2.0, 3.0, 4.0]) {
            assert_relative_eq!(got, &want, epsilon = 1e-12);
        }
    }
}
