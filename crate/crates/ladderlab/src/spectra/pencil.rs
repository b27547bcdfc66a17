//! Fourier-Galerkin discretization of the time-harmonic Klein-Gordon
//! operator on stationary tori, solved as a quadratic eigenvalue pencil
//! through a real companion linearization.
//!
//! Substituting u = e^{i lambda t} phi(x) into the densitized operator
//! yields lambda^2 B2 + lambda B1 + B0 with B2 symmetric negative definite,
//! B0 symmetric positive definite (m > 0) and B1 = iS for a real
//! antisymmetric S. The substitution mu = i lambda turns this into the real
//! pencil mu^2 (-B2) + mu S + B0, whose companion matrix is real; the
//! physical eigenvalues are lambda = Im mu and any real part of mu signals
//! discretization failure.

use nalgebra::DMatrix;

use crate::error::{LadderError, Result};
use crate::geometry::StandardStationaryMetric;
use crate::spectra::{MassSlice, Provenance, SpectralLine};

#[derive(Debug, Clone)]
pub struct PencilOptions {
    /// Keep Fourier modes with |k_phys| <= basis_cutoff.
    pub basis_cutoff: f64,
    /// Reject the solve if any |Im lambda| reaches this bound.
    pub real_tol: f64,
    /// Eigenvalues closer than this merge into one line with multiplicity.
    pub cluster_tol: f64,
}

impl Default for PencilOptions {
    fn default() -> Self {
        PencilOptions { basis_cutoff: 6.0, real_tol: 1e-8, cluster_tol: 1e-7 }
    }
}

#[derive(Debug, Clone)]
pub struct PencilDiagnostics {
    pub basis_size: usize,
    /// Largest |Im lambda| over retained eigenvalues.
    pub max_imag_abs: f64,
    /// Spectral scale used to balance the companion matrix.
    pub scale: f64,
}

/// Joint-spectrum slice at mass `m` for a stationary torus metric.
pub fn pencil_joint_spectrum(
    metric: &StandardStationaryMetric,
    m: f64,
    opts: &PencilOptions,
) -> Result<(MassSlice, PencilDiagnostics)> {
    let lengths = metric
        .surface
        .torus_lengths()
        .ok_or_else(|| {
            LadderError::Unsupported("pencil backend supports torus surfaces only".into())
        })?
        .to_vec();
    if m < 0.0 {
        return Err(LadderError::Precondition("mass must be nonnegative".into()));
    }
    if !(opts.basis_cutoff > 0.0) {
        return Err(LadderError::Precondition("basis_cutoff must be positive".into()));
    }
    metric.validate()?;

    let d = lengths.len();
    let modes = enumerate_modes(&lengths, opts.basis_cutoff);
    let basis = RealTrigBasis::new(&lengths, &modes);
    let b = basis.len();

    // Assembly grid: fine enough to integrate products of basis modes and
    // the smooth coefficient fields without aliasing.
    let grid_res: Vec<usize> = lengths
        .iter()
        .enumerate()
        .map(|(a, &l)| {
            let kmax = (opts.basis_cutoff * l / std::f64::consts::TAU).floor() as usize;
            let mut res = (4 * kmax + 8).max(16);
            if let Some(fr) = field_resolution(metric, a) {
                res = res.max(fr);
            }
            res
        })
        .collect();
    let nodes: usize = grid_res.iter().product();
    let cellw: f64 = lengths
        .iter()
        .zip(&grid_res)
        .map(|(&l, &r)| l / r as f64)
        .product();

    // Tabulate basis values and derivatives on the grid.
    let mut phi = DMatrix::<f64>::zeros(b, nodes);
    let mut dphi: Vec<DMatrix<f64>> = (0..d).map(|_| DMatrix::zeros(b, nodes)).collect();
    let mut coeff_b2 = vec![0.0; nodes]; // -sqrt(det h)/N
    let mut coeff_w = vec![0.0; nodes]; // N sqrt(det h)
    let mut coeff_a: Vec<Vec<f64>> = (0..d).map(|_| vec![0.0; nodes]).collect();
    let mut coeff_c: Vec<Vec<f64>> = (0..d * d).map(|_| vec![0.0; nodes]).collect();

    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    for g in 0..nodes {
        for a in 0..d {
            x[a] = lengths[a] * idx[a] as f64 / grid_res[a] as f64;
        }
        let lapse = metric.lapse_at(&x);
        let beta = metric.shift_at(&x);
        let h = metric.h_at(&x);
        let det = h.determinant();
        if !(lapse > 0.0) || !(det > 0.0) {
            return Err(LadderError::Invariant(
                "invalid lapse or spatial metric on the assembly grid".into(),
            ));
        }
        let sqrt_det = det.sqrt();
        let h_inv = h
            .try_inverse()
            .ok_or_else(|| LadderError::Solver("spatial metric not invertible".into()))?;
        coeff_b2[g] = -sqrt_det / lapse;
        coeff_w[g] = lapse * sqrt_det;
        for j in 0..d {
            coeff_a[j][g] = sqrt_det * beta[j] / lapse;
            for l in 0..d {
                coeff_c[j * d + l][g] =
                    lapse * sqrt_det * (h_inv[(j, l)] - beta[j] * beta[l] / (lapse * lapse));
            }
        }
        basis.fill_column(&x, g, &mut phi, &mut dphi);
        for a in (0..d).rev() {
            idx[a] += 1;
            if idx[a] < grid_res[a] {
                break;
            }
            idx[a] = 0;
        }
    }

    let scaled = |mat: &DMatrix<f64>, w: &[f64]| -> DMatrix<f64> {
        let mut s = mat.clone();
        for (g, mut col) in s.column_iter_mut().enumerate() {
            col *= w[g] * cellw;
        }
        s
    };

    // B2 and the mass part of B0 are weighted Gram matrices of phi.
    let mut b2 = &scaled(&phi, &coeff_b2) * phi.transpose();
    let mass_w: Vec<f64> = coeff_w.iter().map(|&w| w * m * m).collect();
    let mut b0 = &scaled(&phi, &mass_w) * phi.transpose();
    for j in 0..d {
        for l in 0..d {
            b0 += &scaled(&dphi[j], &coeff_c[j * d + l]) * dphi[l].transpose();
        }
    }
    let mut s_mat = DMatrix::<f64>::zeros(b, b);
    for j in 0..d {
        let a_j = &scaled(&dphi[j], &coeff_a[j]) * phi.transpose();
        s_mat += &a_j - a_j.transpose();
    }
    // enforce exact symmetry classes against quadrature roundoff
    b2 = (&b2 + b2.transpose()) * 0.5;
    b0 = (&b0 + b0.transpose()) * 0.5;
    s_mat = (&s_mat - s_mat.transpose()) * 0.5;

    let chol = (-&b2).cholesky().ok_or_else(|| {
        LadderError::Solver("mass matrix of the pencil is not positive definite".into())
    })?;
    let w0 = chol.solve(&b0);
    let w1 = chol.solve(&s_mat);
    let scale = (w0.norm() / (b as f64).sqrt()).sqrt().max(1e-12);

    let mut companion = DMatrix::<f64>::zeros(2 * b, 2 * b);
    for i in 0..b {
        companion[(i, b + i)] = 1.0;
        for j in 0..b {
            companion[(b + i, j)] = -w0[(i, j)] / (scale * scale);
            companion[(b + i, b + j)] = -w1[(i, j)] / scale;
        }
    }
    let mu = companion.complex_eigenvalues();

    let zero_tol = 1e-6 * scale.max(1.0);
    let mut lambdas: Vec<f64> = Vec::with_capacity(2 * b);
    let mut zero_count: u64 = 0;
    let mut max_imag: f64 = 0.0;
    for z in mu.iter() {
        let lambda = scale * z.im;
        let lambda_imag = scale * z.re;
        if (lambda * lambda + lambda_imag * lambda_imag).sqrt() < zero_tol {
            zero_count += 1;
            continue;
        }
        max_imag = max_imag.max(lambda_imag.abs());
        if lambda_imag.abs() >= opts.real_tol {
            return Err(LadderError::NonrealSpectrum(format!(
                "eigenvalue with |Im lambda| = {:.3e} >= real_tol = {:.3e} at mass {m}",
                lambda_imag.abs(),
                opts.real_tol
            )));
        }
        lambdas.push(lambda);
    }
    lambdas.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut entries: Vec<SpectralLine> = Vec::new();
    let mut i = 0;
    while i < lambdas.len() {
        let mut j = i + 1;
        let mut sum = lambdas[i];
        while j < lambdas.len()
            && lambdas[j] - lambdas[j - 1] <= opts.cluster_tol * (1.0 + lambdas[i].abs())
        {
            sum += lambdas[j];
            j += 1;
        }
        entries.push(SpectralLine {
            lambda: sum / (j - i) as f64,
            multiplicity: (j - i) as u64,
            zero_mode: false,
        });
        i = j;
    }
    if zero_count > 0 {
        entries.insert(
            entries.partition_point(|e| e.lambda < 0.0),
            SpectralLine { lambda: 0.0, multiplicity: zero_count, zero_mode: true },
        );
    }

    let lambda_complete = trust_bound(metric, &lengths, opts.basis_cutoff, m);
    Ok((
        MassSlice {
            m,
            entries,
            lambda_complete,
            window: None,
            provenance: Provenance::Pencil,
        },
        PencilDiagnostics { basis_size: b, max_imag_abs: max_imag, scale },
    ))
}

fn field_resolution(metric: &StandardStationaryMetric, axis: usize) -> Option<usize> {
    use crate::geometry::{ScalarField, ShiftField};
    let mut res = None;
    if let ScalarField::Grid { resolution, .. } = &metric.lapse {
        res = Some(resolution[axis]);
    }
    if let ShiftField::Grid { resolution, .. } = &metric.shift {
        res = Some(res.map_or(resolution[axis], |r: usize| r.max(resolution[axis])));
    }
    res
}

/// Conservative completeness heuristic: below this level no mode outside the
/// half cutoff can contribute, estimated from the worst-case dispersion over
/// the assembly grid.
fn trust_bound(
    metric: &StandardStationaryMetric,
    lengths: &[f64],
    basis_cutoff: f64,
    m: f64,
) -> f64 {
    let half = basis_cutoff / 2.0;
    let grid = match metric.scan_grid(Some(lengths.iter().map(|_| 16usize).collect())) {
        Ok(g) => g,
        Err(_) => return 0.0,
    };
    let mut bound = f64::INFINITY;
    for i in 0..grid.len() {
        let x = grid.point(i);
        let lapse = metric.lapse_at(x);
        let h = metric.h_at(x);
        let beta = nalgebra::DVector::from_vec(metric.shift_at(x));
        let beta_h = ((&h * &beta).dot(&beta)).max(0.0).sqrt();
        let eig = h.symmetric_eigen();
        let hmax = eig.eigenvalues.max();
        let hinv_min = 1.0 / hmax;
        let v = lapse * (hinv_min * half * half + m * m).sqrt() - beta_h * half * hinv_min.sqrt();
        bound = bound.min(v);
    }
    bound.max(0.0)
}

/// Lattice modes |k_phys| <= cutoff up to the k ~ -k identification; the
/// canonical representative has its first nonzero component positive.
fn enumerate_modes(lengths: &[f64], cutoff: f64) -> Vec<Vec<i64>> {
    let d = lengths.len();
    let kmax: Vec<i64> = lengths
        .iter()
        .map(|&l| (cutoff * l / std::f64::consts::TAU).floor() as i64)
        .collect();
    let freqs: Vec<f64> = lengths.iter().map(|&l| std::f64::consts::TAU / l).collect();
    let mut modes = Vec::new();
    let mut k = vec![0i64; d];
    for (a, &km) in kmax.iter().enumerate() {
        k[a] = -km;
    }
    'outer: loop {
        let canonical = match k.iter().find(|&&v| v != 0) {
            None => false, // zero mode handled separately
            Some(&first) => first > 0,
        };
        if canonical {
            let norm_sq: f64 = k
                .iter()
                .zip(&freqs)
                .map(|(&ki, &f)| (ki as f64 * f).powi(2))
                .sum();
            if norm_sq.sqrt() <= cutoff {
                modes.push(k.clone());
            }
        }
        for a in (0..d).rev() {
            k[a] += 1;
            if k[a] <= kmax[a] {
                continue 'outer;
            }
            k[a] = -kmax[a];
        }
        break;
    }
    modes
}

/// Orthonormal real trigonometric basis: 1/sqrt(V), sqrt(2/V) cos(k.x),
/// sqrt(2/V) sin(k.x).
struct RealTrigBasis {
    freqs: Vec<Vec<f64>>, // physical wave vectors per mode
    norm_const: f64,
    norm_pair: f64,
}

impl RealTrigBasis {
    fn new(lengths: &[f64], modes: &[Vec<i64>]) -> Self {
        let volume: f64 = lengths.iter().product();
        let freqs = modes
            .iter()
            .map(|k| {
                k.iter()
                    .zip(lengths)
                    .map(|(&ki, &l)| ki as f64 * std::f64::consts::TAU / l)
                    .collect()
            })
            .collect();
        RealTrigBasis {
            freqs,
            norm_const: 1.0 / volume.sqrt(),
            norm_pair: (2.0 / volume).sqrt(),
        }
    }

    fn len(&self) -> usize {
        1 + 2 * self.freqs.len()
    }

    fn fill_column(
        &self,
        x: &[f64],
        g: usize,
        phi: &mut DMatrix<f64>,
        dphi: &mut [DMatrix<f64>],
    ) {
        let d = x.len();
        phi[(0, g)] = self.norm_const;
        for dp in dphi.iter_mut() {
            dp[(0, g)] = 0.0;
        }
        for (i, k) in self.freqs.iter().enumerate() {
            let phase: f64 = k.iter().zip(x).map(|(&ki, &xi)| ki * xi).sum();
            let (s, c) = phase.sin_cos();
            let pc = 1 + 2 * i;
            let ps = pc + 1;
            phi[(pc, g)] = self.norm_pair * c;
            phi[(ps, g)] = self.norm_pair * s;
            for a in 0..d {
                dphi[a][(pc, g)] = -self.norm_pair * k[a] * s;
                dphi[a][(ps, g)] = self.norm_pair * k[a] * c;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ScalarField, ShiftField, SpatialMetricField, Surface};
    use crate::spectra::{
        constant_shift_torus_spectrum, product_mass_slice, torus_laplace_spectrum, LambdaWindow,
    };
    use std::f64::consts::TAU;

    fn torus_metric(
        lengths: Vec<f64>,
        lapse: ScalarField,
        shift: ShiftField,
    ) -> StandardStationaryMetric {
        let n = lengths.len() + 1;
        StandardStationaryMetric {
            n,
            surface: Surface::FlatTorus { lengths },
            lapse,
            shift,
            spatial_metric: SpatialMetricField::Identity,
        }
    }

    #[test]
    fn pencil_matches_constant_shift_closed_form() {
        let metric = torus_metric(
            vec![TAU, TAU],
            ScalarField::Constant { value: 1.0 },
            ShiftField::Constant { value: vec![0.3, 0.0] },
        );
        let opts = PencilOptions { basis_cutoff: 6.0, ..Default::default() };
        let m = 2.0;
        let (slice, diag) = pencil_joint_spectrum(&metric, m, &opts).unwrap();
        assert!(diag.max_imag_abs < 1e-10, "max imag {:.3e}", diag.max_imag_abs);
        let oracle =
            constant_shift_torus_spectrum(1.0, &[0.3, 0.0], &[TAU, TAU], m, 3.0, 1 << 30).unwrap();
        for want in &oracle.entries {
            let best = slice
                .entries
                .iter()
                .map(|e| (e.lambda - want.lambda).abs())
                .fold(f64::INFINITY, f64::min);
            assert!(best < 1e-8, "lambda {} missed by {best:.3e}", want.lambda);
        }
    }

    #[test]
    fn pencil_matches_product_spectrum() {
        let metric = torus_metric(
            vec![TAU, TAU],
            ScalarField::Constant { value: 1.0 },
            ShiftField::Zero,
        );
        let opts = PencilOptions { basis_cutoff: 5.0, ..Default::default() };
        let m = 3.0;
        let (slice, _) = pencil_joint_spectrum(&metric, m, &opts).unwrap();
        let surf = torus_laplace_spectrum(&[TAU, TAU], 2.5, 1 << 30).unwrap();
        let product = product_mass_slice(&surf, m, LambdaWindow::Full).unwrap();
        for want in &product.entries {
            let best = slice
                .entries
                .iter()
                .filter(|e| !e.zero_mode)
                .map(|e| (e.lambda - want.lambda).abs())
                .fold(f64::INFINITY, f64::min);
            assert!(best < 1e-8, "lambda {} missed by {best:.3e}", want.lambda);
        }
    }

    #[test]
    fn pencil_variable_lapse_symmetric_spectrum() {
        let metric = torus_metric(
            vec![TAU],
            ScalarField::Cosine { base: 1.0, amplitude: 0.1, axis: 0, harmonic: 1 },
            ShiftField::Zero,
        );
        let opts = PencilOptions { basis_cutoff: 16.0, ..Default::default() };
        let (slice, diag) = pencil_joint_spectrum(&metric, 5.0, &opts).unwrap();
        assert!(diag.max_imag_abs < 1e-10);
        assert!(slice.is_sign_symmetric(1e-8));
    }

    #[test]
    fn pencil_converges_under_cutoff_doubling() {
        let metric = torus_metric(
            vec![TAU],
            ScalarField::Cosine { base: 1.0, amplitude: 0.1, axis: 0, harmonic: 1 },
            ShiftField::Zero,
        );
        let coarse = PencilOptions { basis_cutoff: 12.0, ..Default::default() };
        let fine = PencilOptions { basis_cutoff: 24.0, ..Default::default() };
        let m = 3.0;
        let (a, _) = pencil_joint_spectrum(&metric, m, &coarse).unwrap();
        let (b, _) = pencil_joint_spectrum(&metric, m, &fine).unwrap();
        for e in a.entries.iter().filter(|e| e.lambda.abs() <= a.lambda_complete) {
            let best = b
                .entries
                .iter()
                .map(|f| (f.lambda - e.lambda).abs())
                .fold(f64::INFINITY, f64::min);
            assert!(best < 1e-6, "retained eigenvalue {} moved by {best:.3e}", e.lambda);
        }
    }

    #[test]
    fn pencil_flags_zero_sector_at_zero_mass() {
        let metric = torus_metric(
            vec![TAU],
            ScalarField::Constant { value: 1.0 },
            ShiftField::Zero,
        );
        let opts = PencilOptions { basis_cutoff: 4.0, ..Default::default() };
        let (slice, _) = pencil_joint_spectrum(&metric, 0.0, &opts).unwrap();
        let zero = slice.entries.iter().find(|e| e.zero_mode).unwrap();
        assert_eq!(zero.multiplicity, 2);
    }

    #[test]
    fn pencil_rejects_non_torus() {
        let metric = StandardStationaryMetric::product(Surface::RoundSphere {
            dim: 2,
            radius: 1.0,
        });
        let err = pencil_joint_spectrum(&metric, 1.0, &PencilOptions::default()).unwrap_err();
        assert!(matches!(err, LadderError::Unsupported(_)));
    }

    #[test]
    fn pencil_nonreal_gate_fires_with_zero_tolerance() {
        let metric = torus_metric(
            vec![TAU],
            ScalarField::Constant { value: 1.0 },
            ShiftField::Zero,
        );
        let opts = PencilOptions { basis_cutoff: 4.0, real_tol: 1e-300, ..Default::default() };
        let err = pencil_joint_spectrum(&metric, 1.0, &opts).unwrap_err();
        assert!(matches!(err, LadderError::NonrealSpectrum(_)));
    }
}
