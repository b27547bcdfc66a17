//! Joint spectra of (mass, D_Z): closed-form product and constant-shift
//! backends plus the Fourier-Galerkin pencil for variable coefficients.

pub mod pencil;

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::TAU;

use crate::error::{LadderError, Result};

/// Which backend produced a spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Product,
    ConstantShift,
    Pencil,
}

/// One line of a surface Laplace spectrum: sqrt(-Delta) eigenvalue omega.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceLine {
    pub omega: f64,
    pub multiplicity: u64,
}

/// Complete surface spectrum below a cutoff, sorted ascending.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurfaceSpectrum {
    pub entries: Vec<SurfaceLine>,
    pub cutoff: f64,
    pub descriptor: String,
}

impl SurfaceSpectrum {
    pub fn total_multiplicity(&self) -> u64 {
        self.entries.iter().map(|e| e.multiplicity).sum()
    }
}

/// One joint eigenvalue at fixed mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralLine {
    pub lambda: f64,
    pub multiplicity: u64,
    /// Marks the m = 0, lambda = 0 sector carrying the Jordan block.
    #[serde(default)]
    pub zero_mode: bool,
}

/// Spectrum slice at a single mass, sorted ascending in lambda.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MassSlice {
    pub m: f64,
    pub entries: Vec<SpectralLine>,
    /// Every eigenvalue with |lambda| <= lambda_complete (intersected with
    /// `window` when present) is guaranteed present.
    pub lambda_complete: f64,
    pub window: Option<(f64, f64)>,
    pub provenance: Provenance,
}

impl MassSlice {
    /// True when the closed interval [lo, hi] lies inside the completeness
    /// guarantee of this slice.
    pub fn covers(&self, lo: f64, hi: f64) -> bool {
        if lo.abs().max(hi.abs()) > self.lambda_complete {
            return false;
        }
        match self.window {
            None => true,
            Some((wlo, whi)) => lo >= wlo && hi <= whi,
        }
    }

    fn sort(&mut self) {
        self.entries
            .sort_by(|a, b| a.lambda.partial_cmp(&b.lambda).unwrap());
    }

    /// Exact multiset symmetry of {lambda} under sign flip, up to `tol`.
    pub fn is_sign_symmetric(&self, tol: f64) -> bool {
        let mut pos: Vec<(f64, u64)> = Vec::new();
        let mut neg: Vec<(f64, u64)> = Vec::new();
        for e in &self.entries {
            if e.lambda > tol {
                pos.push((e.lambda, e.multiplicity));
            } else if e.lambda < -tol {
                neg.push((-e.lambda, e.multiplicity));
            }
        }
        neg.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        if pos.len() != neg.len() {
            return false;
        }
        pos.iter()
            .zip(&neg)
            .all(|(p, n)| (p.0 - n.0).abs() <= tol * (1.0 + p.0.abs()) && p.1 == n.1)
    }
}

/// Joint spectrum over a set of integer masses.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JointSpectrum {
    pub n: usize,
    pub provenance: Provenance,
    slices: BTreeMap<u32, MassSlice>,
}

impl JointSpectrum {
    pub fn new(n: usize, provenance: Provenance) -> Self {
        JointSpectrum { n, provenance, slices: BTreeMap::new() }
    }

    pub fn insert_slice(&mut self, m: u32, slice: MassSlice) {
        self.slices.insert(m, slice);
    }

    pub fn slice(&self, m: u32) -> Result<&MassSlice> {
        self.slices
            .get(&m)
            .ok_or_else(|| LadderError::Incomplete(format!("no spectrum slice at mass {m}")))
    }

    pub fn masses(&self) -> impl Iterator<Item = u32> + '_ {
        self.slices.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }
}

/// Lambda retention policy for joint-spectrum construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LambdaWindow {
    /// Keep every eigenvalue below the backend completeness bound.
    Full,
    /// Keep eigenvalues with lambda in [nu m - radius, nu m + radius]
    /// (plus the mirrored negative-branch window).
    Centered { nu: f64, radius: f64 },
}

/// Flat-torus Laplace spectrum: omega = |2 pi (k_1/L_1, ..., k_d/L_d)|.
pub fn torus_laplace_spectrum(
    lengths: &[f64],
    cutoff: f64,
    max_points: u64,
) -> Result<SurfaceSpectrum> {
    if lengths.is_empty() || lengths.iter().any(|&l| !(l > 0.0)) {
        return Err(LadderError::Precondition("side lengths must be positive".into()));
    }
    if !(cutoff > 0.0) {
        return Err(LadderError::Precondition("cutoff must be positive".into()));
    }
    let d = lengths.len();
    let kmax: Vec<i64> = lengths
        .iter()
        .map(|&l| (cutoff * l / TAU).floor() as i64)
        .collect();
    let mut estimate: u64 = 1;
    for &k in &kmax {
        estimate = estimate.saturating_mul((2 * k + 1) as u64);
    }
    if estimate > max_points {
        return Err(LadderError::Capacity(format!(
            "lattice enumeration would visit {estimate} points (budget {max_points})"
        )));
    }
    let freqs: Vec<f64> = lengths.iter().map(|&l| TAU / l).collect();
    let cutoff_sq = cutoff * cutoff;
    let mut groups: BTreeMap<u64, (f64, u64)> = BTreeMap::new();
    let mut k = vec![-kmax[0]; d];
    for (a, &km) in kmax.iter().enumerate() {
        k[a] = -km;
    }
    'outer: loop {
        let mut omega_sq = 0.0;
        for a in 0..d {
            let ka = k[a] as f64 * freqs[a];
            omega_sq += ka * ka;
        }
        if omega_sq <= cutoff_sq {
            let entry = groups.entry(omega_sq.to_bits()).or_insert((omega_sq, 0));
            entry.1 += 1;
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
    let mut entries: Vec<SurfaceLine> = groups
        .values()
        .map(|&(osq, mult)| SurfaceLine { omega: osq.sqrt(), multiplicity: mult })
        .collect();
    entries.sort_by(|a, b| a.omega.partial_cmp(&b.omega).unwrap());
    Ok(SurfaceSpectrum {
        entries,
        cutoff,
        descriptor: format!("flat torus, lengths {lengths:?}"),
    })
}

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

/// Dimension of degree-l spherical harmonics on S^d (harmonics in d+1 variables).
pub fn spherical_harmonic_dim(l: u64, d: u64) -> u64 {
    if l == 0 {
        return 1;
    }
    binomial(l + d, d) - binomial(l + d - 2, d)
}

/// Round-sphere Laplace spectrum: omega_l = sqrt(l (l + d - 1)) / r.
pub fn sphere_laplace_spectrum(d: usize, radius: f64, cutoff: f64) -> Result<SurfaceSpectrum> {
    if d < 1 {
        return Err(LadderError::Precondition("sphere dimension must be >= 1".into()));
    }
    if !(radius > 0.0) || !(cutoff > 0.0) {
        return Err(LadderError::Precondition("radius and cutoff must be positive".into()));
    }
    let mut entries = Vec::new();
    let mut l: u64 = 0;
    loop {
        let omega = (l as f64 * (l as f64 + d as f64 - 1.0)).sqrt() / radius;
        if omega > cutoff {
            break;
        }
        entries.push(SurfaceLine {
            omega,
            multiplicity: spherical_harmonic_dim(l, d as u64),
        });
        l += 1;
    }
    Ok(SurfaceSpectrum {
        entries,
        cutoff,
        descriptor: format!("round sphere S^{d}, radius {radius}"),
    })
}

/// Joint spectrum of the product spacetime: lambda = +/- sqrt(m^2 + omega^2).
pub fn product_joint_spectrum(
    surf: &SurfaceSpectrum,
    masses: &[u32],
    window: LambdaWindow,
    n: usize,
) -> Result<JointSpectrum> {
    let mut joint = JointSpectrum::new(n, Provenance::Product);
    for &m in masses {
        joint.insert_slice(m, product_mass_slice(surf, m as f64, window)?);
    }
    Ok(joint)
}

/// Single product slice at a (possibly non-integer) mass.
pub fn product_mass_slice(
    surf: &SurfaceSpectrum,
    m: f64,
    window: LambdaWindow,
) -> Result<MassSlice> {
    if m < 0.0 {
        return Err(LadderError::Precondition("mass must be nonnegative".into()));
    }
    let lambda_complete = (m * m + surf.cutoff * surf.cutoff).sqrt();
    let mut slice = MassSlice {
        m,
        entries: Vec::new(),
        lambda_complete,
        window: None,
        provenance: Provenance::Product,
    };
    match window {
        LambdaWindow::Full => {
            for line in &surf.entries {
                push_product_lines(&mut slice, m, line);
            }
        }
        LambdaWindow::Centered { nu, radius } => {
            let lo = nu * m - radius;
            let hi = nu * m + radius;
            if hi.abs().max(lo.abs()) > lambda_complete {
                return Err(LadderError::Incomplete(format!(
                    "window [{lo}, {hi}] exceeds completeness bound {lambda_complete} at mass {m}"
                )));
            }
            slice.window = Some((lo, hi));
            for line in &surf.entries {
                let lambda = (m * m + line.omega * line.omega).sqrt();
                if lambda >= lo && lambda <= hi {
                    push_line(&mut slice, m, line, lambda);
                }
                if -lambda >= lo && -lambda <= hi && lambda > 0.0 {
                    slice.entries.push(SpectralLine {
                        lambda: -lambda,
                        multiplicity: line.multiplicity,
                        zero_mode: false,
                    });
                }
                if lambda == 0.0 && 0.0 >= lo && 0.0 <= hi {
                    push_line(&mut slice, m, line, lambda);
                }
            }
        }
    }
    slice.sort();
    Ok(slice)
}

fn push_product_lines(slice: &mut MassSlice, m: f64, line: &SurfaceLine) {
    let lambda = (m * m + line.omega * line.omega).sqrt();
    push_line(slice, m, line, lambda);
    if lambda > 0.0 {
        slice.entries.push(SpectralLine {
            lambda: -lambda,
            multiplicity: line.multiplicity,
            zero_mode: false,
        });
    }
}

fn push_line(slice: &mut MassSlice, m: f64, line: &SurfaceLine, lambda: f64) {
    if lambda == 0.0 {
        // m = 0, omega = 0: the two branches collapse onto the Jordan sector
        slice.entries.push(SpectralLine {
            lambda: 0.0,
            multiplicity: 2 * line.multiplicity,
            zero_mode: true,
        });
        debug_assert_eq!(m, 0.0);
    } else {
        slice.entries.push(SpectralLine {
            lambda,
            multiplicity: line.multiplicity,
            zero_mode: false,
        });
    }
}

/// Plane-wave spectrum of a constant-coefficient stationary torus with h = I:
/// lambda = beta . k +/- N sqrt(|k|^2 + m^2) over lattice modes |k| <= cutoff.
pub fn constant_shift_torus_spectrum(
    lapse: f64,
    beta: &[f64],
    lengths: &[f64],
    m: f64,
    cutoff: f64,
    max_points: u64,
) -> Result<MassSlice> {
    let beta_norm = beta.iter().map(|b| b * b).sum::<f64>().sqrt();
    if !(lapse > beta_norm) {
        return Err(LadderError::Invariant(
            "need N > |beta| for a timelike Killing field".into(),
        ));
    }
    if m < 0.0 {
        return Err(LadderError::Precondition("mass must be nonnegative".into()));
    }
    let d = lengths.len();
    if beta.len() != d {
        return Err(LadderError::Domain("shift dimension mismatch".into()));
    }
    let kmax: Vec<i64> = lengths
        .iter()
        .map(|&l| (cutoff * l / TAU).floor() as i64)
        .collect();
    let mut estimate: u64 = 1;
    for &k in &kmax {
        estimate = estimate.saturating_mul((2 * k + 1) as u64);
    }
    if estimate > max_points {
        return Err(LadderError::Capacity(format!(
            "lattice enumeration would visit {estimate} points (budget {max_points})"
        )));
    }
    let freqs: Vec<f64> = lengths.iter().map(|&l| TAU / l).collect();
    let cutoff_sq = cutoff * cutoff;
    let mut groups: BTreeMap<u64, (f64, u64, bool)> = BTreeMap::new();
    let mut k = vec![0i64; d];
    for (a, &km) in kmax.iter().enumerate() {
        k[a] = -km;
    }
    'outer: loop {
        let mut ksq = 0.0;
        let mut bk = 0.0;
        for a in 0..d {
            let ka = k[a] as f64 * freqs[a];
            ksq += ka * ka;
            bk += beta[a] * ka;
        }
        if ksq <= cutoff_sq {
            let root = lapse * (ksq + m * m).sqrt();
            for lambda in [bk + root, bk - root] {
                let zero = lambda == 0.0 && m == 0.0 && ksq == 0.0;
                let entry = groups.entry(lambda.to_bits()).or_insert((lambda, 0, zero));
                entry.1 += 1;
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
    let mut entries: Vec<SpectralLine> = groups
        .values()
        .map(|&(lambda, mult, zero)| SpectralLine { lambda, multiplicity: mult, zero_mode: zero })
        .collect();
    entries.sort_by(|a, b| a.lambda.partial_cmp(&b.lambda).unwrap());
    // Below this threshold every |k| > cutoff mode stays out of reach.
    let kstar = beta_norm * m / (lapse * lapse - beta_norm * beta_norm).sqrt();
    let lambda_complete = if cutoff >= kstar {
        lapse * (cutoff * cutoff + m * m).sqrt() - beta_norm * cutoff
    } else {
        m * (lapse * lapse - beta_norm * beta_norm).sqrt()
    };
    Ok(MassSlice {
        m,
        entries,
        lambda_complete,
        window: None,
        provenance: Provenance::ConstantShift,
    })
}

/// Energy quadratic form of a product-spacetime mode: Q = lambda^2 ||u||^2.
pub fn energy_form_product(lambda: f64, l2_norm_sq: f64) -> Result<f64> {
    if l2_norm_sq < 0.0 {
        return Err(LadderError::Domain("norm squared must be nonnegative".into()));
    }
    Ok(lambda * lambda * l2_norm_sq)
}
