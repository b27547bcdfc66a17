//! Mass-shell Hamiltonian flow for standard stationary metrics: symplectic
//! integration with conserved-quantity monitoring, Lorentz-factor
//! diagnostics and period sets of the reduced Killing flow.
//!
//! The flow is generated by H = (1/2) g^{-1}((tau, xi), (tau, xi)) in the
//! affine parameter; stationarity makes tau = p_Z an exact first integral
//! and the shell value 2H + 1 a monitored one. On the future sheet the
//! coordinate time decreases along the affine parameter (dt/ds = -u/N^2
//! with u > 0); coordinate-time periods are reported as |Delta t|.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{LadderError, Result};
use crate::geometry::{
    classify_admissibility, AdmissibilityVerdict, StandardStationaryMetric, Surface,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sheet {
    Future,
    Past,
}

/// Point of the unit mass shell in T*M.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseState {
    pub x: Vec<f64>,
    pub t: f64,
    pub xi: Vec<f64>,
    pub tau: f64,
    pub sheet: Sheet,
}

/// Root of the mass-shell equation: tau = (beta, xi) +- N sqrt(h^{-1}(xi,xi) + 1).
pub fn mass_shell_tau(
    metric: &StandardStationaryMetric,
    x: &[f64],
    xi: &[f64],
    sheet: Sheet,
) -> Result<f64> {
    if xi.len() != metric.surface_dim() {
        return Err(LadderError::Domain("momentum dimension mismatch".into()));
    }
    let lapse = metric.lapse_at(x);
    let beta = metric.shift_at(x);
    let h = metric.h_at(x);
    let h_inv = h
        .try_inverse()
        .ok_or_else(|| LadderError::Invariant("spatial metric not invertible".into()))?;
    let xiv = DVector::from_column_slice(xi);
    let hxx = (&h_inv * &xiv).dot(&xiv);
    let bk: f64 = beta.iter().zip(xi).map(|(b, k)| b * k).sum();
    let root = lapse * (hxx + 1.0).sqrt();
    Ok(match sheet {
        Sheet::Future => bk + root,
        Sheet::Past => bk - root,
    })
}

/// Builds an on-shell state at t = 0 with the given spatial data.
pub fn on_shell_state(
    metric: &StandardStationaryMetric,
    x: &[f64],
    xi: &[f64],
    sheet: Sheet,
) -> Result<PhaseState> {
    let tau = mass_shell_tau(metric, x, xi, sheet)?;
    Ok(PhaseState { x: x.to_vec(), t: 0.0, xi: xi.to_vec(), tau, sheet })
}

/// Hamiltonian data with exact coefficient gradients; closed-form lapse and
/// shift only (grid fields have no exact derivatives to integrate with).
struct ShellHamiltonian {
    lengths: Vec<f64>,
    h_inv: DMatrix<f64>,
    metric: StandardStationaryMetric,
    d: usize,
}

impl ShellHamiltonian {
    fn new(metric: &StandardStationaryMetric) -> Result<Self> {
        let d = metric.surface_dim();
        if !metric.surface.is_torus() {
            return Err(LadderError::Unsupported(
                "flow integration supports torus surfaces".into(),
            ));
        }
        let lengths = metric.surface.torus_lengths().unwrap().to_vec();
        let probe = vec![0.0; d];
        if metric.lapse.gradient(&probe, &lengths).is_none()
            || metric.shift.jacobian(&probe, &lengths).is_none()
        {
            return Err(LadderError::Unsupported(
                "flow integration needs closed-form lapse and shift".into(),
            ));
        }
        let h = metric.h_at(&probe);
        let h_inv = h
            .try_inverse()
            .ok_or_else(|| LadderError::Invariant("spatial metric not invertible".into()))?;
        Ok(ShellHamiltonian { lengths, h_inv, metric: metric.clone(), d })
    }

    /// z layout: [x_1..x_d, t, xi_1..xi_d, tau]
    fn hamiltonian(&self, z: &[f64]) -> f64 {
        let d = self.d;
        let (x, xi, tau) = (&z[..d], &z[d + 1..2 * d + 1], z[2 * d + 1]);
        let lapse = self.metric.lapse.eval(x, &self.lengths);
        let beta = self.metric.shift.eval(x, &self.lengths);
        let bk: f64 = beta.iter().zip(xi).map(|(b, k)| b * k).sum();
        let u = tau - bk;
        let xiv = DVector::from_column_slice(xi);
        let quad = (&self.h_inv * &xiv).dot(&xiv);
        0.5 * (-u * u / (lapse * lapse) + quad)
    }

    fn vector_field(&self, z: &[f64], out: &mut [f64]) {
        let d = self.d;
        let (x, xi, tau) = (&z[..d], &z[d + 1..2 * d + 1], z[2 * d + 1]);
        let lapse = self.metric.lapse.eval(x, &self.lengths);
        let grad_n = self.metric.lapse.gradient(x, &self.lengths).unwrap();
        let beta = self.metric.shift.eval(x, &self.lengths);
        let jac_beta = self.metric.shift.jacobian(x, &self.lengths).unwrap();
        let bk: f64 = beta.iter().zip(xi).map(|(b, k)| b * k).sum();
        let u = tau - bk;
        let n2 = lapse * lapse;
        let xiv = DVector::from_column_slice(xi);
        let hxi = &self.h_inv * &xiv;
        // dx/ds = dH/dxi, dt/ds = dH/dtau
        for i in 0..d {
            out[i] = u * beta[i] / n2 + hxi[i];
        }
        out[d] = -u / n2;
        // dxi/ds = -dH/dx, dtau/ds = -dH/dt = 0
        for k in 0..d {
            let dbeta_xi: f64 = (0..d).map(|j| jac_beta[(j, k)] * xi[j]).sum();
            let dh_dx = u * dbeta_xi / n2 + u * u * grad_n[k] / (n2 * lapse);
            out[d + 1 + k] = -dh_dx;
        }
        out[2 * d + 1] = 0.0;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Fixed-step implicit midpoint (symplectic, time-symmetric).
    ImplicitMidpoint,
    /// Embedded Dormand-Prince 4(5) with step control, for stiffness checks.
    AdaptiveRk45 { rtol: f64, atol: f64 },
}

#[derive(Debug, Clone)]
pub struct FlowOptions {
    pub step: f64,
    pub integrator: Integrator,
    /// Keep every k-th step in the trajectory.
    pub record_every: usize,
    /// Hard cap on the shell-value drift.
    pub shell_drift_cap: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            step: 5e-5,
            integrator: Integrator::ImplicitMidpoint,
            record_every: 64,
            shell_drift_cap: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub s: Vec<f64>,
    pub states: Vec<PhaseState>,
    /// Max |shell(z) - shell(z0)| over recorded samples.
    pub shell_drift: f64,
    /// Max |tau - tau0| over recorded samples.
    pub tau_drift: f64,
}

impl Trajectory {
    pub fn last(&self) -> &PhaseState {
        self.states.last().unwrap()
    }
}

fn pack(state: &PhaseState, d: usize) -> Vec<f64> {
    let mut z = Vec::with_capacity(2 * d + 2);
    z.extend_from_slice(&state.x);
    z.push(state.t);
    z.extend_from_slice(&state.xi);
    z.push(state.tau);
    z
}

fn unpack(z: &[f64], d: usize) -> PhaseState {
    PhaseState {
        x: z[..d].to_vec(),
        t: z[d],
        xi: z[d + 1..2 * d + 1].to_vec(),
        tau: z[2 * d + 1],
        sheet: Sheet::Future,
    }
}

/// Integrates the mass-shell flow for the signed `duration` in the affine
/// parameter, monitoring the shell value and tau.
#[allow(clippy::type_complexity)]
pub fn flow(
    metric: &StandardStationaryMetric,
    state: &PhaseState,
    duration: f64,
    opts: &FlowOptions,
) -> Result<Trajectory> {
    if state.sheet == Sheet::Past {
        return Err(LadderError::Unsupported(
            "past-sheet states are handled by the sign symmetry; integrate the mirror".into(),
        ));
    }
    let ham = ShellHamiltonian::new(metric)?;
    let d = ham.d;
    if !(opts.step > 0.0) {
        return Err(LadderError::Precondition("step must be positive".into()));
    }
    let mut z = pack(state, d);
    let shell0 = 2.0 * ham.hamiltonian(&z) + 1.0;
    if shell0.abs() > 1e-8 {
        return Err(LadderError::Precondition(format!(
            "initial state violates the mass shell by {shell0:.3e}"
        )));
    }
    let tau0 = state.tau;
    let mut traj = Trajectory {
        s: vec![0.0],
        states: vec![state.clone()],
        shell_drift: 0.0,
        tau_drift: 0.0,
    };
    if duration == 0.0 {
        return Ok(traj);
    }

    let mut record = |s: f64, z: &[f64], traj: &mut Trajectory| -> Result<()> {
        let shell = 2.0 * ham.hamiltonian(z) + 1.0;
        let drift = (shell - shell0).abs();
        traj.shell_drift = traj.shell_drift.max(drift);
        traj.tau_drift = traj.tau_drift.max((z[2 * d + 1] - tau0).abs());
        if drift > opts.shell_drift_cap {
            return Err(LadderError::Integration(format!(
                "shell drift {drift:.3e} exceeded the cap {:.1e} at s = {s}",
                opts.shell_drift_cap
            )));
        }
        traj.s.push(s);
        traj.states.push(unpack(z, d));
        Ok(())
    };

    match opts.integrator {
        Integrator::ImplicitMidpoint => {
            let n_steps = (duration.abs() / opts.step).ceil().max(1.0) as u64;
            let h = duration / n_steps as f64;
            let mut s = 0.0;
            for k in 0..n_steps {
                implicit_midpoint_step(&ham, &mut z, h)?;
                s += h;
                if (k + 1).is_multiple_of(opts.record_every as u64) || k + 1 == n_steps {
                    record(s, &z, &mut traj)?;
                }
            }
        }
        Integrator::AdaptiveRk45 { rtol, atol } => {
            adaptive_rk45(&ham, &mut z, duration, rtol, atol, opts, &mut record, &mut traj)?;
        }
    }
    Ok(traj)
}

fn implicit_midpoint_step(ham: &ShellHamiltonian, z: &mut [f64], h: f64) -> Result<()> {
    let dim = z.len();
    let mut f = vec![0.0; dim];
    ham.vector_field(z, &mut f);
    // fixed-point iteration for the midpoint w = z + (h/2) f(w)
    let mut w: Vec<f64> = (0..dim).map(|i| z[i] + 0.5 * h * f[i]).collect();
    let mut converged = false;
    for _ in 0..50 {
        ham.vector_field(&w, &mut f);
        let mut delta: f64 = 0.0;
        for i in 0..dim {
            let wi = z[i] + 0.5 * h * f[i];
            delta = delta.max((wi - w[i]).abs() / (1.0 + wi.abs()));
            w[i] = wi;
        }
        if delta < 1e-15 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(LadderError::Integration(
            "implicit midpoint fixed-point iteration did not converge".into(),
        ));
    }
    for i in 0..dim {
        z[i] = 2.0 * w[i] - z[i];
    }
    Ok(())
}

#[allow(clippy::too_many_arguments, clippy::type_complexity)]
fn adaptive_rk45(
    ham: &ShellHamiltonian,
    z: &mut Vec<f64>,
    duration: f64,
    rtol: f64,
    atol: f64,
    opts: &FlowOptions,
    record: &mut dyn FnMut(f64, &[f64], &mut Trajectory) -> Result<()>,
    traj: &mut Trajectory,
) -> Result<()> {
    // Dormand-Prince coefficients
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] =
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let dim = z.len();
    let sign = duration.signum();
    let total = duration.abs();
    let mut s = 0.0;
    let mut h = opts.step.min(total);
    let h_min = total * 1e-12;
    let mut rejections = 0u32;
    let mut steps = 0u64;
    let mut k = vec![vec![0.0; dim]; 7];
    while s < total {
        h = h.min(total - s);
        ham.vector_field(z, &mut k[0]);
        for (stage, a_row) in A.iter().enumerate() {
            let mut zs = z.clone();
            for (j, kj) in k.iter().enumerate().take(stage + 1) {
                let a = a_row[j];
                if a != 0.0 {
                    for i in 0..dim {
                        zs[i] += sign * h * a * kj[i];
                    }
                }
            }
            let target = stage + 1;
            let (head, tail) = k.split_at_mut(target);
            let _ = head;
            ham.vector_field(&zs, &mut tail[0]);
        }
        let mut err: f64 = 0.0;
        let mut z5 = z.clone();
        for i in 0..dim {
            let mut d5 = 0.0;
            let mut d4 = 0.0;
            for j in 0..7 {
                d5 += B5[j] * k[j][i];
                d4 += B4[j] * k[j][i];
            }
            z5[i] += sign * h * d5;
            let sc = atol + rtol * z[i].abs().max(z5[i].abs());
            err = err.max(((d5 - d4) * h / sc).abs());
        }
        if err <= 1.0 {
            *z = z5;
            s += h;
            steps += 1;
            rejections = 0;
            if steps.is_multiple_of(opts.record_every as u64) || s >= total {
                record(sign * s, z, traj)?;
            }
        } else {
            rejections += 1;
            if rejections > 50 || h <= h_min {
                return Err(LadderError::Stiffness(format!(
                    "step rejection cascade at s = {s} (h = {h:.3e}, err = {err:.3e})"
                )));
            }
        }
        let factor = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
        h = (h * factor).max(h_min);
    }
    Ok(())
}

/// Mass-shell residual g^{-1}((tau, xi), (tau, xi)) + 1 of a state.
pub fn shell_residual(metric: &StandardStationaryMetric, state: &PhaseState) -> Result<f64> {
    let lapse = metric.lapse_at(&state.x);
    let beta = metric.shift_at(&state.x);
    let h = metric.h_at(&state.x);
    let h_inv = h
        .try_inverse()
        .ok_or_else(|| LadderError::Invariant("spatial metric not invertible".into()))?;
    let xiv = DVector::from_column_slice(&state.xi);
    let bk: f64 = beta.iter().zip(&state.xi).map(|(b, k)| b * k).sum();
    let u = state.tau - bk;
    Ok(-u * u / (lapse * lapse) + (&h_inv * &xiv).dot(&xiv) + 1.0)
}

/// Conserved slope and local speed of a future mass-shell state:
/// v = sqrt(1 - (N^2 - |beta|^2_h) / nu^2) and nu = sqrt(N^2-|beta|^2)/sqrt(1-v^2).
pub fn lorentz_diagnostics(
    metric: &StandardStationaryMetric,
    state: &PhaseState,
) -> Result<(f64, f64)> {
    let nu = state.tau;
    let f = metric.bottom_height_sq_at(&state.x);
    if nu * nu < f * (1.0 - 1e-12) {
        return Err(LadderError::Domain(format!(
            "state sits in the forbidden region: nu^2 = {} < N^2 - |beta|^2 = {f}",
            nu * nu
        )));
    }
    let v = (1.0 - f / (nu * nu)).max(0.0).sqrt();
    Ok((nu, v))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeriodMethod {
    ClosedForm,
    Numeric,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodEntry {
    /// Coordinate-time period of the reduced Killing flow.
    pub s_prime: f64,
    /// Winding vector or orbit id.
    pub descriptor: String,
    /// Return residual in phase space (numeric method).
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodSet {
    pub entries: Vec<PeriodEntry>,
    pub method: PeriodMethod,
    /// Set when every orbit is periodic (round spheres): the degenerate case.
    pub periodic_flow: bool,
}

impl PeriodSet {
    pub fn periods(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.s_prime).collect()
    }
}

/// Closed-form period set for product metrics: a closed spatial geodesic of
/// length l is traversed in coordinate time l nu / sqrt(nu^2 - 1).
pub fn period_set_closed_form(
    surface: &Surface,
    nu: f64,
    max_winding: i64,
) -> Result<PeriodSet> {
    if !(nu > 1.0) {
        return Err(LadderError::EmptyLadder(format!(
            "product ladders require nu > 1 (got {nu})"
        )));
    }
    let dilation = nu / (nu * nu - 1.0).sqrt();
    let mut entries = vec![PeriodEntry {
        s_prime: 0.0,
        descriptor: "identity".into(),
        residual: None,
    }];
    let push_pair = |s_prime: f64, descriptor: String, entries: &mut Vec<PeriodEntry>| {
        if entries
            .iter()
            .any(|e| (e.s_prime - s_prime).abs() <= 1e-12 * (1.0 + s_prime.abs()))
        {
            return;
        }
        entries.push(PeriodEntry {
            s_prime,
            descriptor: descriptor.clone(),
            residual: None,
        });
        entries.push(PeriodEntry {
            s_prime: -s_prime,
            descriptor: format!("-{descriptor}"),
            residual: None,
        });
    };
    match surface {
        Surface::FlatTorus { lengths } | Surface::GriddedTorus { lengths, .. } => {
            let d = lengths.len();
            let mut w = vec![-max_winding; d];
            'outer: loop {
                if w.iter().any(|&wi| wi != 0) {
                    let len_sq: f64 = w
                        .iter()
                        .zip(lengths)
                        .map(|(&wi, &l)| (wi as f64 * l).powi(2))
                        .sum();
                    let s_prime = len_sq.sqrt() * dilation;
                    push_pair(s_prime, format!("winding {w:?}"), &mut entries);
                }
                for a in (0..d).rev() {
                    w[a] += 1;
                    if w[a] <= max_winding {
                        continue 'outer;
                    }
                    w[a] = -max_winding;
                }
                break;
            }
            entries.sort_by(|a, b| a.s_prime.partial_cmp(&b.s_prime).unwrap());
            Ok(PeriodSet { entries, method: PeriodMethod::ClosedForm, periodic_flow: false })
        }
        Surface::RoundSphere { radius, .. } => {
            let base = std::f64::consts::TAU * radius * dilation;
            for q in 1..=max_winding.max(1) {
                push_pair(q as f64 * base, format!("great circle x{q}"), &mut entries);
            }
            entries.sort_by(|a, b| a.s_prime.partial_cmp(&b.s_prime).unwrap());
            Ok(PeriodSet { entries, method: PeriodMethod::ClosedForm, periodic_flow: true })
        }
    }
}

#[derive(Debug, Clone)]
pub struct PeriodSearch {
    /// Total integrator-step budget across all seeds; 0 returns an empty set.
    pub budget_steps: u64,
    /// Return-distance acceptance threshold in the flat chart metric.
    pub orbit_tol: f64,
    /// Largest coordinate-time return considered.
    pub max_coordinate_time: f64,
    /// Fixed integrator step in the affine parameter.
    pub step: f64,
    /// Largest winding component used to seed directions.
    pub max_winding: i64,
}

impl Default for PeriodSearch {
    fn default() -> Self {
        PeriodSearch {
            budget_steps: 2_000_000,
            orbit_tol: 1e-8,
            max_coordinate_time: 40.0,
            step: 1e-3,
            max_winding: 2,
        }
    }
}

/// Numerical periodic-orbit search on the level set p_Z = nu: seeds the
/// future sheet along lattice directions, integrates and accepts returns in
/// position (mod lattice) and momentum below `orbit_tol`. No completeness
/// claim; an exhausted budget with no orbit yields an empty set.
pub fn period_set_numeric(
    metric: &StandardStationaryMetric,
    nu: f64,
    search: &PeriodSearch,
) -> Result<PeriodSet> {
    let lengths = metric
        .surface
        .torus_lengths()
        .ok_or_else(|| {
            LadderError::Unsupported("numeric period search runs on torus surfaces".into())
        })?
        .to_vec();
    let report = classify_admissibility(metric, nu, 1e-6)?;
    if report.verdict != AdmissibilityVerdict::Admissible {
        return Err(LadderError::Precondition(format!(
            "nu = {nu} is not admissible ({:?})",
            report.verdict
        )));
    }
    let mut entries = vec![PeriodEntry {
        s_prime: 0.0,
        descriptor: "identity".into(),
        residual: None,
    }];
    if search.budget_steps == 0 {
        return Ok(PeriodSet {
            entries,
            method: PeriodMethod::Numeric,
            periodic_flow: false,
        });
    }
    let d = lengths.len();
    let directions = seed_directions(d, search.max_winding);
    let positions = seed_positions(&lengths);
    let opts = FlowOptions {
        step: search.step,
        integrator: Integrator::ImplicitMidpoint,
        record_every: 1,
        shell_drift_cap: 1e-6,
    };
    let mut budget = search.budget_steps;
    let mut found: Vec<(f64, String, f64)> = Vec::new();
    'seeds: for dir in &directions {
        for pos in &positions {
            if budget == 0 {
                break 'seeds;
            }
            let Some(xi) = solve_shell_momentum(metric, pos, dir, nu) else {
                continue;
            };
            let state = PhaseState {
                x: pos.clone(),
                t: 0.0,
                xi,
                tau: nu,
                sheet: Sheet::Future,
            };
            // long trajectory in chunks so the budget is respected
            let speed: f64 = {
                let mut ham_probe = vec![0.0; 2 * d + 2];
                let ham = ShellHamiltonian::new(metric)?;
                ham.vector_field(&pack(&state, d), &mut ham_probe);
                ham_probe[..d].iter().map(|v| v * v).sum::<f64>().sqrt()
            };
            // affine duration for the requested coordinate-time horizon
            let duration = search.max_coordinate_time / nu.max(1e-9);
            let steps_needed = (duration / search.step).ceil() as u64;
            let steps = steps_needed.min(budget);
            budget -= steps;
            let this_duration = steps as f64 * search.step;
            let traj = flow(metric, &state, this_duration, &opts)?;
            if let Some((t_ret, residual)) =
                first_return(&traj, &lengths, search.orbit_tol, speed)
            {
                found.push((t_ret, format!("seed {dir:?}"), residual));
            }
        }
    }
    for (t_ret, descriptor, residual) in found {
        if entries
            .iter()
            .any(|e| (e.s_prime.abs() - t_ret).abs() <= 1e-6 * (1.0 + t_ret))
        {
            continue;
        }
        entries.push(PeriodEntry {
            s_prime: t_ret,
            descriptor: descriptor.clone(),
            residual: Some(residual),
        });
        entries.push(PeriodEntry {
            s_prime: -t_ret,
            descriptor: format!("-{descriptor}"),
            residual: Some(residual),
        });
    }
    entries.sort_by(|a, b| a.s_prime.partial_cmp(&b.s_prime).unwrap());
    Ok(PeriodSet { entries, method: PeriodMethod::Numeric, periodic_flow: false })
}

fn seed_directions(d: usize, max_winding: i64) -> Vec<Vec<f64>> {
    let mut dirs: Vec<Vec<i64>> = Vec::new();
    let mut w = vec![-max_winding; d];
    'outer: loop {
        if w.iter().any(|&wi| wi != 0) {
            let g = w.iter().fold(0i64, |acc, &wi| gcd(acc, wi.abs()));
            let primitive: Vec<i64> = w.iter().map(|&wi| wi / g).collect();
            let canonical = primitive.iter().find(|&&v| v != 0).map(|&v| v > 0).unwrap();
            if canonical && !dirs.contains(&primitive) {
                dirs.push(primitive);
            }
        }
        for a in (0..d).rev() {
            w[a] += 1;
            if w[a] <= max_winding {
                continue 'outer;
            }
            w[a] = -max_winding;
        }
        break;
    }
    dirs.into_iter()
        .map(|w| {
            let norm = (w.iter().map(|&v| (v * v) as f64).sum::<f64>()).sqrt();
            w.iter().map(|&v| v as f64 / norm).collect()
        })
        .collect()
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.max(1)
    } else {
        gcd(b, a % b)
    }
}

fn seed_positions(lengths: &[f64]) -> Vec<Vec<f64>> {
    // a few spread-out base points; orbits of stationary metrics are
    // insensitive to the time slice, only the spatial start matters
    let d = lengths.len();
    let mut out = vec![vec![0.0; d]];
    out.push(lengths.iter().map(|&l| 0.37 * l).collect());
    out
}

/// Momentum magnitude along `dir` putting (x, xi) on the future sheet at
/// level tau = nu, if the direction is reachable there.
fn solve_shell_momentum(
    metric: &StandardStationaryMetric,
    x: &[f64],
    dir: &[f64],
    nu: f64,
) -> Option<Vec<f64>> {
    let lapse = metric.lapse_at(x);
    let beta = metric.shift_at(x);
    let h = metric.h_at(x);
    let h_inv = h.try_inverse()?;
    let dirv = DVector::from_column_slice(dir);
    let c2 = (&h_inv * &dirv).dot(&dirv);
    let b: f64 = beta.iter().zip(dir).map(|(bi, di)| bi * di).sum();
    let n2 = lapse * lapse;
    let a_coef = n2 * c2 - b * b;
    let b_coef = 2.0 * nu * b;
    let c_coef = n2 - nu * nu;
    let disc = b_coef * b_coef - 4.0 * a_coef * c_coef;
    if disc < 0.0 || a_coef.abs() < 1e-300 {
        return None;
    }
    let rho = (-b_coef + disc.sqrt()) / (2.0 * a_coef);
    if !(rho > 0.0) {
        let rho_alt = (-b_coef - disc.sqrt()) / (2.0 * a_coef);
        if !(rho_alt > 0.0) {
            return None;
        }
        let xi: Vec<f64> = dir.iter().map(|&di| rho_alt * di).collect();
        return future_sheet_check(nu, &beta, &xi).then_some(xi);
    }
    let xi: Vec<f64> = dir.iter().map(|&di| rho * di).collect();
    future_sheet_check(nu, &beta, &xi).then_some(xi)
}

fn future_sheet_check(nu: f64, beta: &[f64], xi: &[f64]) -> bool {
    let bk: f64 = beta.iter().zip(xi).map(|(b, k)| b * k).sum();
    nu - bk > 0.0
}

/// Scans a trajectory for the first phase-space return below tolerance and
/// reports (|Delta t|, residual distance).
fn first_return(
    traj: &Trajectory,
    lengths: &[f64],
    orbit_tol: f64,
    speed: f64,
) -> Option<(f64, f64)> {
    let d = lengths.len();
    let start = &traj.states[0];
    let dist_sq = |st: &PhaseState| -> f64 {
        let mut acc = 0.0;
        for (a, &la) in lengths.iter().enumerate().take(d) {
            let mut dx = (st.x[a] - start.x[a]).rem_euclid(la);
            if dx > la / 2.0 {
                dx = la - dx;
            }
            acc += dx * dx;
        }
        for a in 0..d {
            let dxi = st.xi[a] - start.xi[a];
            acc += dxi * dxi;
        }
        acc
    };
    // ignore the trivial minimum at s = 0: skip until we have moved away
    let escape = (0.05 * lengths[0]).powi(2);
    let mut armed = false;
    for i in 1..traj.states.len().saturating_sub(1) {
        let dm = dist_sq(&traj.states[i - 1]);
        let d0 = dist_sq(&traj.states[i]);
        let dp = dist_sq(&traj.states[i + 1]);
        if !armed {
            if d0 > escape {
                armed = true;
            }
            continue;
        }
        if d0 <= dm && d0 <= dp {
            // parabolic refinement of the squared distance
            let denom = dm - 2.0 * d0 + dp;
            let delta = if denom.abs() > 1e-300 {
                (0.5 * (dm - dp) / denom).clamp(-0.5, 0.5)
            } else {
                0.0
            };
            // parabola vertex value through the three squared distances
            let min_sq = (d0 - 0.5 * denom * delta * delta).max(0.0);
            if min_sq.sqrt() <= orbit_tol.max(speed * 0.0) {
                let ds = traj.s[i + 1] - traj.s[i];
                let t_interp = traj.states[i].t
                    + delta * ds * (traj.states[i + 1].t - traj.states[i].t)
                        / (traj.s[i + 1] - traj.s[i]);
                return Some(((t_interp - start.t).abs(), min_sq.sqrt()));
            }
        }
    }
    None
}
