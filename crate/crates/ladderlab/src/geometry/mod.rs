//! Standard stationary metrics on R x Sigma and the classical quantities
//! derived from them: dual co-metric, Killing norm, allowed regions and
//! admissibility of ladder slopes.

mod fields;

pub use fields::{ScalarField, ShiftField, SpatialMetricField};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{LadderError, Result};
use crate::quad::gauss_legendre_on;

/// Relative tolerance classifying a node as lying on the Killing horizon.
pub const HORIZON_RTOL: f64 = 1e-9;
/// Relative tolerance matching a slope against a critical level.
pub const CRITICAL_LEVEL_RTOL: f64 = 1e-9;

/// Cauchy surface model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Surface {
    /// Flat torus with the given side lengths, closed-form fields.
    FlatTorus { lengths: Vec<f64> },
    /// Flat torus carrying an explicit uniform grid resolution per axis.
    GriddedTorus { lengths: Vec<f64>, resolution: Vec<usize> },
    /// Round sphere S^dim of the given radius.
    RoundSphere { dim: usize, radius: f64 },
}

impl Surface {
    pub fn dim(&self) -> usize {
        match self {
            Surface::FlatTorus { lengths } | Surface::GriddedTorus { lengths, .. } => {
                lengths.len()
            }
            Surface::RoundSphere { dim, .. } => *dim,
        }
    }

    pub fn is_torus(&self) -> bool {
        matches!(self, Surface::FlatTorus { .. } | Surface::GriddedTorus { .. })
    }

    pub fn torus_lengths(&self) -> Option<&[f64]> {
        match self {
            Surface::FlatTorus { lengths } | Surface::GriddedTorus { lengths, .. } => {
                Some(lengths)
            }
            Surface::RoundSphere { .. } => None,
        }
    }

    /// Per-axis scan resolution used when no explicit grid is attached.
    pub(crate) fn default_resolution(&self) -> Vec<usize> {
        match self {
            Surface::GriddedTorus { resolution, .. } => resolution.clone(),
            Surface::FlatTorus { lengths } => {
                let d = lengths.len();
                let per_axis = match d {
                    1 => 2048,
                    2 => 256,
                    3 => 48,
                    _ => 16,
                };
                vec![per_axis; d]
            }
            Surface::RoundSphere { dim, .. } => {
                let polar = if *dim <= 2 { 64 } else { 32 };
                let mut r = vec![polar; *dim - 1];
                r.push(if *dim <= 2 { 128 } else { 64 });
                r
            }
        }
    }
}

/// Stationary metric in standard form: lapse N, shift beta and spatial
/// metric h on a compact Cauchy surface, all t-independent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StandardStationaryMetric {
    /// Spacetime dimension; the surface has dimension `n - 1`.
    pub n: usize,
    pub surface: Surface,
    pub lapse: ScalarField,
    pub shift: ShiftField,
    #[serde(rename = "h", default = "default_spatial_metric")]
    pub spatial_metric: SpatialMetricField,
}

fn default_spatial_metric() -> SpatialMetricField {
    SpatialMetricField::Identity
}

impl StandardStationaryMetric {
    /// Product metric N = 1, beta = 0, h flat/round.
    pub fn product(surface: Surface) -> Self {
        let n = surface.dim() + 1;
        StandardStationaryMetric {
            n,
            surface,
            lapse: ScalarField::Constant { value: 1.0 },
            shift: ShiftField::Zero,
            spatial_metric: SpatialMetricField::Identity,
        }
    }

    pub fn surface_dim(&self) -> usize {
        self.n - 1
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.surface_dim() {
            return Err(LadderError::Domain(format!(
                "point has dimension {}, surface has dimension {}",
                x.len(),
                self.surface_dim()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(LadderError::Domain("non-finite surface point".into()));
        }
        if let Surface::RoundSphere { dim, .. } = &self.surface {
            for (i, &v) in x.iter().enumerate().take(dim - 1) {
                if (v.sin()).abs() < 1e-12 {
                    return Err(LadderError::Domain(format!(
                        "polar angle {i} degenerate at {v}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn lapse_at(&self, x: &[f64]) -> f64 {
        let lengths = self.coordinate_lengths();
        self.lapse.eval(x, &lengths)
    }

    pub fn shift_at(&self, x: &[f64]) -> Vec<f64> {
        let lengths = self.coordinate_lengths();
        self.shift.eval(x, &lengths)
    }

    /// Spatial metric matrix at x (round metric on spheres).
    pub fn h_at(&self, x: &[f64]) -> DMatrix<f64> {
        let d = self.surface_dim();
        match &self.surface {
            Surface::RoundSphere { dim, radius } => {
                let mut m = DMatrix::zeros(d, d);
                let mut prefactor = radius * radius;
                for i in 0..*dim {
                    m[(i, i)] = prefactor;
                    if i + 1 < *dim {
                        let s = x[i].sin();
                        prefactor *= s * s;
                    }
                }
                m
            }
            _ => self.spatial_metric.eval(d),
        }
    }

    pub fn sqrt_det_h_at(&self, x: &[f64]) -> f64 {
        self.h_at(x).determinant().max(0.0).sqrt()
    }

    /// Height squared of the hyperboloid bottom: N^2 - |beta|^2_h.
    pub fn bottom_height_sq_at(&self, x: &[f64]) -> f64 {
        let nl = self.lapse_at(x);
        let beta = self.shift_at(x);
        let h = self.h_at(x);
        let b = DVector::from_vec(beta);
        nl * nl - (&h * &b).dot(&b)
    }

    /// Lorentzian norm of the Killing field: g(Z, Z) = -(N^2 - |beta|^2_h),
    /// strictly negative while Z stays timelike.
    pub fn killing_norm(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(-self.bottom_height_sq_at(x))
    }

    /// Coordinate box sizes used by periodic field evaluation. Spheres use
    /// angle boxes (pi, ..., pi, 2 pi); fields there must be constant.
    pub(crate) fn coordinate_lengths(&self) -> Vec<f64> {
        match &self.surface {
            Surface::FlatTorus { lengths } | Surface::GriddedTorus { lengths, .. } => {
                lengths.clone()
            }
            Surface::RoundSphere { dim, .. } => {
                let mut l = vec![PI; *dim - 1];
                l.push(TAU);
                l
            }
        }
    }

    /// Validates all structural invariants on the default scan grid.
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(LadderError::Invariant("spacetime dimension must be >= 2".into()));
        }
        if self.surface.dim() + 1 != self.n {
            return Err(LadderError::Invariant(format!(
                "surface dimension {} does not match n = {}",
                self.surface.dim(),
                self.n
            )));
        }
        if let Surface::RoundSphere { .. } = &self.surface {
            if !self.shift.is_zero() {
                return Err(LadderError::Unsupported(
                    "variable or constant shift on a round sphere is not supported; use beta = 0"
                        .into(),
                ));
            }
            if !self.lapse.is_constant() {
                return Err(LadderError::Unsupported(
                    "non-constant lapse on a round sphere is not supported".into(),
                ));
            }
            if !self.spatial_metric.is_identity() {
                return Err(LadderError::Unsupported(
                    "spheres carry the round metric; spatial metric override is not supported"
                        .into(),
                ));
            }
        } else {
            self.spatial_metric.validate(self.surface_dim())?;
        }
        let grid = self.scan_grid(None)?;
        for p in 0..grid.len() {
            let x = grid.point(p);
            let nl = self.lapse_at(x);
            if !(nl > 0.0) {
                return Err(LadderError::Invariant(format!(
                    "lapse non-positive ({nl}) at a sample point"
                )));
            }
            let f = self.bottom_height_sq_at(x);
            if !(f > 0.0) {
                return Err(LadderError::Invariant(
                    "N^2 - |beta|^2_h non-positive: Z is not timelike".into(),
                ));
            }
        }
        Ok(())
    }

    /// Dual co-metric of g + d theta^2 in coordinates (t, x_1..x_{n-1}, theta).
    pub fn co_metric_at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check_point(x)?;
        let d = self.surface_dim();
        let nl = self.lapse_at(x);
        if !(nl > 0.0) {
            return Err(LadderError::Invariant("lapse non-positive".into()));
        }
        let h = self.h_at(x);
        let h_inv = h
            .clone()
            .try_inverse()
            .ok_or_else(|| LadderError::Invariant("spatial metric not invertible".into()))?;
        let eig = h.symmetric_eigen();
        if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
            return Err(LadderError::Invariant(
                "spatial metric not positive definite at point".into(),
            ));
        }
        let beta = self.shift_at(x);
        let inv_n2 = 1.0 / (nl * nl);
        let mut g = DMatrix::zeros(d + 2, d + 2);
        g[(0, 0)] = -inv_n2;
        for j in 0..d {
            g[(0, j + 1)] = inv_n2 * beta[j];
            g[(j + 1, 0)] = inv_n2 * beta[j];
            for k in 0..d {
                g[(j + 1, k + 1)] = h_inv[(j, k)] - inv_n2 * beta[j] * beta[k];
            }
        }
        g[(d + 1, d + 1)] = 1.0;
        Ok(g)
    }

    /// Forward metric matrix of g + d theta^2 in the same coordinates.
    pub fn metric_matrix_at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check_point(x)?;
        let d = self.surface_dim();
        let nl = self.lapse_at(x);
        let h = self.h_at(x);
        let beta = DVector::from_vec(self.shift_at(x));
        let eta = &h * &beta;
        let mut g = DMatrix::zeros(d + 2, d + 2);
        g[(0, 0)] = -(nl * nl - eta.dot(&beta));
        for j in 0..d {
            g[(0, j + 1)] = eta[j];
            g[(j + 1, 0)] = eta[j];
            for k in 0..d {
                g[(j + 1, k + 1)] = h[(j, k)];
            }
        }
        g[(d + 1, d + 1)] = 1.0;
        Ok(g)
    }

    /// Quadrature/scan grid with dVol_h weights.
    pub fn scan_grid(&self, resolution: Option<Vec<usize>>) -> Result<SurfaceGrid> {
        let res = resolution.unwrap_or_else(|| self.surface.default_resolution());
        match &self.surface {
            Surface::FlatTorus { lengths } | Surface::GriddedTorus { lengths, .. } => {
                torus_grid(self, lengths, &res)
            }
            Surface::RoundSphere { dim, radius } => sphere_grid(*dim, *radius, &res),
        }
    }
}

/// Tensor-product node set on the surface with dVol_h weights.
#[derive(Debug, Clone)]
pub struct SurfaceGrid {
    points: Vec<f64>,
    weights: Vec<f64>,
    dim: usize,
    /// Tensor structure, present for torus grids (cells usable as strata).
    pub resolution: Option<Vec<usize>>,
    pub lengths: Option<Vec<f64>>,
}

impl SurfaceGrid {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

fn torus_grid(
    metric: &StandardStationaryMetric,
    lengths: &[f64],
    res: &[usize],
) -> Result<SurfaceGrid> {
    let d = lengths.len();
    if res.len() != d {
        return Err(LadderError::Resolution(
            "grid resolution rank does not match surface dimension".into(),
        ));
    }
    if res.contains(&0) {
        return Err(LadderError::Resolution("zero grid resolution".into()));
    }
    let total: usize = res.iter().product();
    let cell: f64 = lengths
        .iter()
        .zip(res)
        .map(|(&l, &r)| l / r as f64)
        .product();
    let mut points = Vec::with_capacity(total * d);
    let mut weights = Vec::with_capacity(total);
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    for _ in 0..total {
        for a in 0..d {
            x[a] = lengths[a] * idx[a] as f64 / res[a] as f64;
        }
        points.extend_from_slice(&x);
        weights.push(cell * metric.sqrt_det_h_at(&x));
        // odometer increment
        for a in (0..d).rev() {
            idx[a] += 1;
            if idx[a] < res[a] {
                break;
            }
            idx[a] = 0;
        }
    }
    Ok(SurfaceGrid {
        points,
        weights,
        dim: d,
        resolution: Some(res.to_vec()),
        lengths: Some(lengths.to_vec()),
    })
}

fn sphere_grid(dim: usize, radius: f64, res: &[usize]) -> Result<SurfaceGrid> {
    if res.len() != dim {
        return Err(LadderError::Resolution(
            "sphere grid resolution rank mismatch".into(),
        ));
    }
    // Gauss-Legendre nodes in each polar angle, uniform nodes in longitude.
    let mut axis_nodes: Vec<Vec<f64>> = Vec::with_capacity(dim);
    let mut axis_weights: Vec<Vec<f64>> = Vec::with_capacity(dim);
    for (i, &r) in res.iter().enumerate() {
        if i + 1 < dim {
            let (n, w) = gauss_legendre_on(r, 0.0, PI);
            axis_nodes.push(n);
            axis_weights.push(w);
        } else {
            let nodes: Vec<f64> = (0..r).map(|k| TAU * k as f64 / r as f64).collect();
            let w = vec![TAU / r as f64; r];
            axis_nodes.push(nodes);
            axis_weights.push(w);
        }
    }
    let total: usize = res.iter().product();
    let mut points = Vec::with_capacity(total * dim);
    let mut weights = Vec::with_capacity(total);
    let mut idx = vec![0usize; dim];
    for _ in 0..total {
        let mut w = radius.powi(dim as i32);
        let mut x = Vec::with_capacity(dim);
        for a in 0..dim {
            let phi = axis_nodes[a][idx[a]];
            x.push(phi);
            w *= axis_weights[a][idx[a]];
            if a + 1 < dim {
                w *= phi.sin().powi((dim - 1 - a) as i32);
            }
        }
        points.extend_from_slice(&x);
        weights.push(w);
        for a in (0..dim).rev() {
            idx[a] += 1;
            if idx[a] < res[a] {
                break;
            }
            idx[a] = 0;
        }
    }
    Ok(SurfaceGrid {
        points,
        weights,
        dim,
        resolution: None,
        lengths: None,
    })
}

/// Indicator of the allowed region { N^2 - |beta|^2_h < nu^2 } on a scan grid.
#[derive(Debug, Clone)]
pub struct AllowedRegion {
    pub allowed: Vec<bool>,
    /// Nodes on the Killing horizon within `HORIZON_RTOL`.
    pub horizon: Vec<bool>,
    /// dVol_h fraction of the allowed set.
    pub fraction: f64,
    pub grid: SurfaceGrid,
}

/// Evaluates the allowed region of the slope `nu` on the default grid.
pub fn allowed_region(metric: &StandardStationaryMetric, nu: f64) -> Result<AllowedRegion> {
    allowed_region_on(metric, nu, None)
}

pub fn allowed_region_on(
    metric: &StandardStationaryMetric,
    nu: f64,
    resolution: Option<Vec<usize>>,
) -> Result<AllowedRegion> {
    if !(nu > 0.0) {
        return Err(LadderError::Precondition("nu must be positive".into()));
    }
    let grid = metric.scan_grid(resolution)?;
    let nu2 = nu * nu;
    let mut allowed = Vec::with_capacity(grid.len());
    let mut horizon = Vec::with_capacity(grid.len());
    let mut inside = 0.0;
    let mut total = 0.0;
    for i in 0..grid.len() {
        let f = metric.bottom_height_sq_at(grid.point(i));
        let w = grid.weight(i);
        let is_allowed = f < nu2;
        allowed.push(is_allowed);
        horizon.push((nu2 - f).abs() < HORIZON_RTOL * nu2);
        if is_allowed {
            inside += w;
        }
        total += w;
    }
    Ok(AllowedRegion {
        allowed,
        horizon,
        fraction: if total > 0.0 { inside / total } else { 0.0 },
        grid,
    })
}

/// Verdict of the admissibility classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdmissibilityVerdict {
    Admissible,
    CriticalLevel,
    EmptyLadder,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub nu: f64,
    pub verdict: AdmissibilityVerdict,
    /// Range over Sigma of sqrt(N^2 - |beta|^2_h).
    pub bottom_range: (f64, f64),
    /// Values sqrt(N^2 - |beta|^2_h) at points where its gradient vanishes.
    pub critical_values: Vec<f64>,
}

/// Classifies a ladder slope against the critical levels of the bottom
/// height, scanning the default grid with centered differences.
pub fn classify_admissibility(
    metric: &StandardStationaryMetric,
    nu: f64,
    grad_tol: f64,
) -> Result<AdmissibilityReport> {
    classify_admissibility_on(metric, nu, grad_tol, None)
}

pub fn classify_admissibility_on(
    metric: &StandardStationaryMetric,
    nu: f64,
    grad_tol: f64,
    resolution: Option<Vec<usize>>,
) -> Result<AdmissibilityReport> {
    if !(nu > 0.0) || !(grad_tol > 0.0) {
        return Err(LadderError::Precondition(
            "nu and grad_tol must be positive".into(),
        ));
    }
    let (values, critical) = bottom_critical_scan(metric, grad_tol, resolution)?;
    let mut bottom_min = f64::INFINITY;
    let mut bottom_max = f64::NEG_INFINITY;
    for &f in &values {
        let b = f.max(0.0).sqrt();
        bottom_min = bottom_min.min(b);
        bottom_max = bottom_max.max(b);
    }
    let mut critical_values: Vec<f64> = Vec::new();
    for cv in critical {
        if !critical_values
            .iter()
            .any(|&c| (c - cv).abs() <= 1e-9 * (1.0 + cv.abs()))
        {
            critical_values.push(cv);
        }
    }
    critical_values.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let verdict = if critical_values
        .iter()
        .any(|&cv| (nu - cv).abs() <= CRITICAL_LEVEL_RTOL * nu.max(1.0))
    {
        AdmissibilityVerdict::CriticalLevel
    } else if nu < bottom_min {
        AdmissibilityVerdict::EmptyLadder
    } else {
        AdmissibilityVerdict::Admissible
    };
    Ok(AdmissibilityReport {
        nu,
        verdict,
        bottom_range: (bottom_min, bottom_max),
        critical_values,
    })
}

/// Scans the bottom height N^2 - |beta|^2 and returns (values at nodes,
/// bottom heights at discrete critical points).
fn bottom_critical_scan(
    metric: &StandardStationaryMetric,
    grad_tol: f64,
    resolution: Option<Vec<usize>>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    match &metric.surface {
        Surface::RoundSphere { .. } => {
            // Validation restricts sphere fields to constants, so the bottom
            // height is constant and every point is critical.
            let grid = metric.scan_grid(resolution)?;
            let f = metric.bottom_height_sq_at(grid.point(0));
            Ok((vec![f; grid.len()], vec![f.max(0.0).sqrt()]))
        }
        Surface::FlatTorus { lengths } | Surface::GriddedTorus { lengths, .. } => {
            let lengths = lengths.clone();
            let d = lengths.len();
            let res = resolution.unwrap_or_else(|| metric.surface.default_resolution());
            if res.iter().any(|&r| r < 3) {
                return Err(LadderError::Resolution(
                    "need at least 3 nodes per axis to estimate gradients".into(),
                ));
            }
            let total: usize = res.iter().product();
            let mut values = vec![0.0; total];
            let mut idx = vec![0usize; d];
            let mut x = vec![0.0; d];
            for value in values.iter_mut() {
                for a in 0..d {
                    x[a] = lengths[a] * idx[a] as f64 / res[a] as f64;
                }
                *value = metric.bottom_height_sq_at(&x);
                for a in (0..d).rev() {
                    idx[a] += 1;
                    if idx[a] < res[a] {
                        break;
                    }
                    idx[a] = 0;
                }
            }
            // centered differences with periodic wrap
            let strides = row_major_strides(&res);
            let mut critical = Vec::new();
            let mut idx = vec![0usize; d];
            for (p, &value) in values.iter().enumerate() {
                let mut grad_sq = 0.0;
                for a in 0..d {
                    let h = lengths[a] / res[a] as f64;
                    let up = neighbor(p, &idx, a, 1, &res, &strides);
                    let dn = neighbor(p, &idx, a, -1, &res, &strides);
                    let g = (values[up] - values[dn]) / (2.0 * h);
                    grad_sq += g * g;
                }
                if grad_sq.sqrt() < grad_tol {
                    critical.push(value.max(0.0).sqrt());
                }
                for a in (0..d).rev() {
                    idx[a] += 1;
                    if idx[a] < res[a] {
                        break;
                    }
                    idx[a] = 0;
                }
            }
            Ok((values, critical))
        }
    }
}

fn row_major_strides(res: &[usize]) -> Vec<usize> {
    let d = res.len();
    let mut s = vec![1usize; d];
    for a in (0..d.saturating_sub(1)).rev() {
        s[a] = s[a + 1] * res[a + 1];
    }
    s
}

fn neighbor(
    p: usize,
    idx: &[usize],
    axis: usize,
    step: isize,
    res: &[usize],
    strides: &[usize],
) -> usize {
    let r = res[axis] as isize;
    let cur = idx[axis] as isize;
    let next = (cur + step).rem_euclid(r) as usize;
    (p as isize + (next as isize - cur) * strides[axis] as isize) as usize
}
