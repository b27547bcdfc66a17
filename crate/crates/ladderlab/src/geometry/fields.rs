//! Coefficient fields on the Cauchy surface: lapse, shift and spatial metric.
//!
//! Closed-form kinds carry exact gradients; grid kinds are sampled row-major
//! on a uniform torus grid and evaluated by periodic multilinear interpolation.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{LadderError, Result};

/// Scalar coefficient field on the surface.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarField {
    Constant { value: f64 },
    /// `base + amplitude * cos(2 pi harmonic x_axis / L_axis)`.
    Cosine {
        base: f64,
        amplitude: f64,
        #[serde(default)]
        axis: usize,
        #[serde(default = "one_u32")]
        harmonic: u32,
    },
    /// Row-major samples on a uniform torus grid (node `i` at `i L / res`).
    Grid { values: Vec<f64>, resolution: Vec<usize> },
}

fn one_u32() -> u32 {
    1
}

impl ScalarField {
    pub fn eval(&self, x: &[f64], lengths: &[f64]) -> f64 {
        match self {
            ScalarField::Constant { value } => *value,
            ScalarField::Cosine { base, amplitude, axis, harmonic } => {
                base + amplitude * (TAU * *harmonic as f64 * x[*axis] / lengths[*axis]).cos()
            }
            ScalarField::Grid { values, resolution } => {
                interp_periodic(values, resolution, x, lengths)
            }
        }
    }

    /// Exact gradient; `None` for grid fields (no closed form).
    pub fn gradient(&self, x: &[f64], lengths: &[f64]) -> Option<Vec<f64>> {
        match self {
            ScalarField::Constant { .. } => Some(vec![0.0; lengths.len()]),
            ScalarField::Cosine { amplitude, axis, harmonic, .. } => {
                let mut g = vec![0.0; lengths.len()];
                let k = TAU * *harmonic as f64 / lengths[*axis];
                g[*axis] = -amplitude * k * (k * x[*axis]).sin();
                Some(g)
            }
            ScalarField::Grid { .. } => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, ScalarField::Constant { .. })
    }
}

/// Shift vector field (contravariant components).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShiftField {
    Zero,
    Constant { value: Vec<f64> },
    /// Row-major samples of d-component vectors on a uniform torus grid.
    Grid { values: Vec<f64>, resolution: Vec<usize> },
}

impl ShiftField {
    pub fn eval(&self, x: &[f64], lengths: &[f64]) -> Vec<f64> {
        let d = lengths.len();
        match self {
            ShiftField::Zero => vec![0.0; d],
            ShiftField::Constant { value } => value.clone(),
            ShiftField::Grid { values, resolution } => {
                let mut out = vec![0.0; d];
                for (c, o) in out.iter_mut().enumerate() {
                    let comp: Vec<f64> =
                        values.iter().skip(c).step_by(d).copied().collect();
                    *o = interp_periodic(&comp, resolution, x, lengths);
                }
                out
            }
        }
    }

    /// Jacobian d(beta^i)/d(x_k), exact when available.
    pub fn jacobian(&self, _x: &[f64], lengths: &[f64]) -> Option<DMatrix<f64>> {
        let d = lengths.len();
        match self {
            ShiftField::Zero | ShiftField::Constant { .. } => Some(DMatrix::zeros(d, d)),
            ShiftField::Grid { .. } => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ShiftField::Zero)
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, ShiftField::Zero | ShiftField::Constant { .. })
    }
}

/// Spatial metric field h on torus surfaces (spheres carry the round metric).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpatialMetricField {
    Identity,
    /// Constant SPD matrix, row-major.
    Constant { matrix: Vec<Vec<f64>> },
}

impl SpatialMetricField {
    pub fn eval(&self, d: usize) -> DMatrix<f64> {
        match self {
            SpatialMetricField::Identity => DMatrix::identity(d, d),
            SpatialMetricField::Constant { matrix } => {
                let mut m = DMatrix::zeros(d, d);
                for i in 0..d {
                    for j in 0..d {
                        m[(i, j)] = matrix[i][j];
                    }
                }
                m
            }
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, SpatialMetricField::Identity)
    }

    /// Checks symmetry and positive-definiteness.
    pub fn validate(&self, d: usize) -> Result<()> {
        let m = self.eval(d);
        for i in 0..d {
            for j in 0..d {
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * (1.0 + m[(i, j)].abs()) {
                    return Err(LadderError::Invariant(
                        "spatial metric is not symmetric".into(),
                    ));
                }
            }
        }
        let eig = m.symmetric_eigen();
        if eig.eigenvalues.iter().any(|&l| l <= 1e-12) {
            return Err(LadderError::Invariant(
                "spatial metric is not positive definite".into(),
            ));
        }
        Ok(())
    }
}

/// Periodic multilinear interpolation of row-major grid samples.
fn interp_periodic(values: &[f64], resolution: &[usize], x: &[f64], lengths: &[f64]) -> f64 {
    let d = resolution.len();
    debug_assert_eq!(values.len() % resolution.iter().product::<usize>(), 0);
    let mut base = vec![0usize; d];
    let mut frac = vec![0.0; d];
    for a in 0..d {
        let res = resolution[a] as f64;
        let mut u = x[a] / lengths[a] * res;
        u = u.rem_euclid(res);
        let i = u.floor() as usize % resolution[a];
        base[a] = i;
        frac[a] = u - u.floor();
    }
    let mut acc = 0.0;
    // accumulate over the 2^d cell corners
    for corner in 0..(1usize << d) {
        let mut w = 1.0;
        let mut idx = 0usize;
        for a in 0..d {
            let up = (corner >> a) & 1 == 1;
            let ia = if up { (base[a] + 1) % resolution[a] } else { base[a] };
            w *= if up { frac[a] } else { 1.0 - frac[a] };
            idx = idx * resolution[a] + ia;
        }
        acc += w * values[idx];
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_field_matches_closed_form() {
        let f = ScalarField::Cosine { base: 1.0, amplitude: 0.2, axis: 0, harmonic: 1 };
        let lengths = [TAU, TAU];
        assert!((f.eval(&[0.0, 1.0], &lengths) - 1.2).abs() < 1e-15);
        assert!((f.eval(&[std::f64::consts::PI, 0.3], &lengths) - 0.8).abs() < 1e-15);
        let g = f.gradient(&[std::f64::consts::FRAC_PI_2, 0.0], &lengths).unwrap();
        assert!((g[0] + 0.2).abs() < 1e-15);
        assert_eq!(g[1], 0.0);
    }

    #[test]
    fn grid_field_interpolates_nodes_exactly() {
        // 4x4 grid on [0,1)^2, f(i,j) = i + 10 j
        let res = vec![4usize, 4usize];
        let mut vals = vec![0.0; 16];
        for i in 0..4 {
            for j in 0..4 {
                vals[i * 4 + j] = i as f64 + 10.0 * j as f64;
            }
        }
        let f = ScalarField::Grid { values: vals, resolution: res };
        let lengths = [1.0, 1.0];
        assert!((f.eval(&[0.5, 0.25], &lengths) - (2.0 + 10.0)).abs() < 1e-14);
        // interpolation midway between nodes along axis 0
        let v = f.eval(&[0.125, 0.0], &lengths);
        assert!((v - 0.5).abs() < 1e-14);
        // periodic wrap
        let v = f.eval(&[0.875, 0.0], &lengths);
        assert!((v - 1.5).abs() < 1e-14);
    }
}
