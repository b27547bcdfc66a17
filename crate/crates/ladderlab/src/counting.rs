//! Ladder counting functions: sharp and smoothed Weyl counts, generating
//! functions with Abel regularization and peak continuation, coefficient
//! fits, the Tauberian sandwich and the clustering diagnostic.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{LadderError, Result};
use crate::liouville::{weyl_prediction, PredictionMode};
use crate::spectra::{JointSpectrum, MassSlice, SpectralLine};
use crate::testfn::{mollified_indicator, TestFunction};

/// Which eigenvalue branch enters the counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Positive,
    Both,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CountPolicy {
    pub branch: Branch,
    pub include_zero_modes: bool,
}

impl Default for CountPolicy {
    fn default() -> Self {
        CountPolicy { branch: Branch::Positive, include_zero_modes: false }
    }
}

impl CountPolicy {
    pub fn both_branches() -> Self {
        CountPolicy { branch: Branch::Both, include_zero_modes: false }
    }

    fn selects(&self, line: &SpectralLine) -> bool {
        if line.zero_mode {
            return self.include_zero_modes;
        }
        match self.branch {
            Branch::Positive => line.lambda > 0.0,
            Branch::Both => true,
        }
    }
}

/// Sharp ladder count: eigenvalues with lambda in [nu m - C, nu m + C],
/// closed interval, counted with multiplicity.
pub fn count_sharp(
    spec: &JointSpectrum,
    nu: f64,
    c: f64,
    m: u32,
    policy: CountPolicy,
) -> Result<u64> {
    if m < 1 {
        return Err(LadderError::Precondition("sharp counts need m >= 1".into()));
    }
    if !(nu > 0.0) || c < 0.0 {
        return Err(LadderError::Precondition("need nu > 0 and C >= 0".into()));
    }
    let slice = spec.slice(m)?;
    count_sharp_slice(slice, nu, c, policy)
}

/// Same as `count_sharp` on an explicit slice.
pub fn count_sharp_slice(
    slice: &MassSlice,
    nu: f64,
    c: f64,
    policy: CountPolicy,
) -> Result<u64> {
    let center = nu * slice.m;
    let (lo, hi) = (center - c, center + c);
    if !slice.covers(lo, hi) {
        return Err(LadderError::Incomplete(format!(
            "window [{lo}, {hi}] not covered by the spectrum at mass {}",
            slice.m
        )));
    }
    Ok(slice
        .entries
        .iter()
        .filter(|e| policy.selects(e) && e.lambda >= lo && e.lambda <= hi)
        .map(|e| e.multiplicity)
        .sum())
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SmoothedCount {
    pub value: f64,
    /// Estimate of the mass dropped outside the evaluated window.
    pub tail_bound: f64,
    /// Half-width of the window actually summed.
    pub window_radius: f64,
}

/// Smoothed ladder count: sum of psi(lambda - nu m) over the slice.
pub fn count_smoothed(
    spec: &JointSpectrum,
    nu: f64,
    psi: &TestFunction,
    m: u32,
    policy: CountPolicy,
    requested_accuracy: Option<f64>,
) -> Result<SmoothedCount> {
    if m < 1 {
        return Err(LadderError::Precondition("smoothed counts need m >= 1".into()));
    }
    let slice = spec.slice(m)?;
    count_smoothed_slice(slice, nu, psi, policy, requested_accuracy)
}

pub fn count_smoothed_slice(
    slice: &MassSlice,
    nu: f64,
    psi: &TestFunction,
    policy: CountPolicy,
    requested_accuracy: Option<f64>,
) -> Result<SmoothedCount> {
    let center = nu * slice.m;
    let radius = effective_radius(slice, center, psi)?;
    let mut value = 0.0;
    let mut used: u64 = 0;
    for e in &slice.entries {
        if !policy.selects(e) {
            continue;
        }
        let y = e.lambda - center;
        if y.abs() <= radius {
            value += e.multiplicity as f64 * psi.psi(y);
            used += e.multiplicity;
        }
    }
    let density = used as f64 / (2.0 * radius);
    let tail_bound = density * psi.tail_integral_bound(radius);
    if let Some(acc) = requested_accuracy {
        if tail_bound > acc {
            return Err(LadderError::Accuracy(format!(
                "tail bound {tail_bound:.3e} exceeds requested accuracy {acc:.3e}"
            )));
        }
    }
    Ok(SmoothedCount { value, tail_bound, window_radius: radius })
}

/// Largest half-width around the ladder center covered by the slice, capped
/// by the evaluation radius of psi.
fn effective_radius(slice: &MassSlice, center: f64, psi: &TestFunction) -> Result<f64> {
    let radius = match slice.window {
        Some((lo, hi)) => psi.eval_radius().min(hi - center).min(center - lo),
        None => psi
            .eval_radius()
            .min(slice.lambda_complete - center)
            .min(slice.lambda_complete + center),
    };
    if !(radius > 0.0) {
        return Err(LadderError::Incomplete(format!(
            "spectrum at mass {} does not cover the smoothing window",
            slice.m
        )));
    }
    Ok(radius)
}

/// Abel-regularized generating function samples on a uniform s-grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UpsilonSeries {
    pub eps: f64,
    pub s: Vec<f64>,
    pub values: Vec<(f64, f64)>,
    /// Smoothed count per mass (without the Abel factor).
    pub coefficients: Vec<f64>,
    /// Zero-mass contribution, reported separately.
    pub m0_term: f64,
}

impl UpsilonSeries {
    pub fn modulus(&self) -> Vec<f64> {
        self.values.iter().map(|&(re, im)| (re * re + im * im).sqrt()).collect()
    }

    pub fn value(&self, j: usize) -> Complex64 {
        Complex64::new(self.values[j].0, self.values[j].1)
    }
}

/// First generating function: sum over m >= 0 of the smoothed count times
/// e^{i m s}, regularized by e^{-eps m}.
pub fn upsilon1(
    spec: &JointSpectrum,
    nu: f64,
    psi: &TestFunction,
    s_points: usize,
    m_max: u32,
    eps: f64,
    policy: CountPolicy,
) -> Result<UpsilonSeries> {
    if !(eps > 0.0) {
        return Err(LadderError::Precondition("eps must be positive".into()));
    }
    if s_points < 8 {
        return Err(LadderError::Precondition("need at least 8 s-grid points".into()));
    }
    let mut coefficients = Vec::with_capacity(m_max as usize + 1);
    for m in 0..=m_max {
        let slice = spec.slice(m)?;
        let center = nu * m as f64;
        let radius = effective_radius(slice, center, psi)?;
        let mut c = 0.0;
        for e in &slice.entries {
            if !policy.selects(e) {
                continue;
            }
            let y = e.lambda - center;
            if y.abs() <= radius {
                c += e.multiplicity as f64 * psi.psi(y);
            }
        }
        coefficients.push(c);
    }
    let s: Vec<f64> = (0..s_points).map(|j| TAU * j as f64 / s_points as f64).collect();
    let values: Vec<(f64, f64)> = s
        .iter()
        .map(|&sj| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (m, &cm) in coefficients.iter().enumerate() {
                let damped = cm * (-eps * m as f64).exp();
                acc += damped * Complex64::cis(m as f64 * sj);
            }
            (acc.re, acc.im)
        })
        .collect();
    Ok(UpsilonSeries {
        eps,
        s,
        values,
        m0_term: coefficients[0],
        coefficients,
    })
}

/// Second generating function: phases e^{i lambda s} instead of e^{i m s}.
pub fn upsilon2(
    spec: &JointSpectrum,
    nu: f64,
    psi: &TestFunction,
    s_points: usize,
    m_max: u32,
    eps: f64,
    policy: CountPolicy,
) -> Result<UpsilonSeries> {
    if !(eps > 0.0) {
        return Err(LadderError::Precondition("eps must be positive".into()));
    }
    let s: Vec<f64> = (0..s_points).map(|j| TAU * j as f64 / s_points as f64).collect();
    let mut values = vec![Complex64::new(0.0, 0.0); s_points];
    let mut coefficients = Vec::with_capacity(m_max as usize + 1);
    let mut m0_term = 0.0;
    for m in 0..=m_max {
        let slice = spec.slice(m)?;
        let center = nu * m as f64;
        let radius = effective_radius(slice, center, psi)?;
        let damp = (-eps * m as f64).exp();
        let mut cm = 0.0;
        for e in &slice.entries {
            if !policy.selects(e) {
                continue;
            }
            let y = e.lambda - center;
            if y.abs() <= radius {
                let w = e.multiplicity as f64 * psi.psi(y);
                cm += w;
                for (j, &sj) in s.iter().enumerate() {
                    values[j] += w * damp * Complex64::cis(e.lambda * sj);
                }
            }
        }
        if m == 0 {
            m0_term = cm;
        }
        coefficients.push(cm);
    }
    Ok(UpsilonSeries {
        eps,
        s,
        values: values.iter().map(|z| (z.re, z.im)).collect(),
        coefficients,
        m0_term,
    })
}

/// Predicted singular support on the circle from the period set of the
/// reduced Killing flow. A closed orbit of coordinate-time period s'
/// accumulates the phase (nu - 1/nu) s' in the homogenized circle variable
/// (the action of the orbit), so each period within the transform support
/// contributes the point (nu - 1/nu) s' mod 2 pi.
pub fn singular_support_predict(
    periods: &[f64],
    nu: f64,
    hat_support_radius: f64,
) -> Result<Vec<f64>> {
    if !(nu > 0.0) {
        return Err(LadderError::Precondition("nu must be positive".into()));
    }
    let factor = nu - 1.0 / nu;
    let mut out: Vec<f64> = Vec::new();
    for &p in periods {
        if p.abs() > hat_support_radius {
            continue;
        }
        let s = (factor * p).rem_euclid(TAU);
        let s = if (s - TAU).abs() < 1e-12 { 0.0 } else { s };
        if !out.iter().any(|&q| circular_distance(q, s) < 1e-9) {
            out.push(s);
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(out)
}

pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

#[derive(Debug, Clone)]
pub struct PeakOptions {
    /// Local maxima must exceed this multiple of the median modulus.
    pub threshold_factor: f64,
    /// Matching radius between consecutive eps levels, in grid cells.
    pub match_radius_cells: f64,
}

impl Default for PeakOptions {
    fn default() -> Self {
        PeakOptions { threshold_factor: 3.0, match_radius_cells: 8.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeakReport {
    /// Peak positions per eps level (descending eps), parabola-refined.
    pub per_eps: Vec<(f64, Vec<f64>)>,
    /// Positions extrapolated to eps -> 0 from the two finest levels.
    pub continued: Vec<f64>,
}

/// Local maxima of |Upsilon| above `threshold_factor` times the median.
fn series_peaks(series: &UpsilonSeries, threshold_factor: f64) -> Vec<f64> {
    let modulus = series.modulus();
    let len = modulus.len();
    let mut sorted = modulus.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted[len / 2];
    let threshold = threshold_factor * median;
    let ds = TAU / len as f64;
    let mut peaks = Vec::new();
    for i in 0..len {
        let prev = modulus[(i + len - 1) % len];
        let next = modulus[(i + 1) % len];
        let cur = modulus[i];
        if cur > threshold && cur >= prev && cur >= next {
            let denom = prev - 2.0 * cur + next;
            let delta = if denom.abs() > 1e-300 {
                (0.5 * (prev - next) / denom).clamp(-0.5, 0.5)
            } else {
                0.0
            };
            peaks.push(((i as f64 + delta) * ds).rem_euclid(TAU));
        }
    }
    peaks
}

/// Eps-continued peak detection: peaks of the finest regularization that
/// persist at the next-coarser one, extrapolated linearly to eps -> 0.
pub fn detect_peaks(series: &[UpsilonSeries], opts: &PeakOptions) -> Result<PeakReport> {
    if series.len() < 2 {
        return Err(LadderError::Precondition(
            "peak continuation needs at least two eps levels".into(),
        ));
    }
    let mut sorted: Vec<&UpsilonSeries> = series.iter().collect();
    sorted.sort_by(|a, b| b.eps.partial_cmp(&a.eps).unwrap());
    let per_eps: Vec<(f64, Vec<f64>)> = sorted
        .iter()
        .map(|s| (s.eps, series_peaks(s, opts.threshold_factor)))
        .collect();
    let fine = &sorted[sorted.len() - 1];
    let coarse = &sorted[sorted.len() - 2];
    let fine_peaks = &per_eps[per_eps.len() - 1].1;
    let coarse_peaks = &per_eps[per_eps.len() - 2].1;
    let cells = fine.s.len() as f64;
    let radius = opts.match_radius_cells * TAU / cells;
    let mut continued = Vec::new();
    for &p2 in fine_peaks {
        let partner = coarse_peaks
            .iter()
            .copied()
            .filter(|&p1| circular_distance(p1, p2) <= radius)
            .min_by(|a, b| {
                circular_distance(*a, p2)
                    .partial_cmp(&circular_distance(*b, p2))
                    .unwrap()
            });
        let Some(p1) = partner else { continue };
        // signed circular difference p2 - p1 in (-pi, pi]
        let mut diff = (p2 - p1).rem_euclid(TAU);
        if diff > std::f64::consts::PI {
            diff -= TAU;
        }
        let extrapolated =
            (p2 + diff * fine.eps / (coarse.eps - fine.eps)).rem_euclid(TAU);
        continued.push(extrapolated);
    }
    continued.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(PeakReport { per_eps, continued })
}

/// Weighted least-squares fit of counts against the leading Weyl powers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeylFit {
    /// Coefficient of m^{n-2}.
    pub a0: f64,
    pub a0_stderr: f64,
    /// Coefficient of m^{n-3}.
    pub a1: f64,
    /// RMS of the scaled residuals relative to |a0|.
    pub residual_rel: f64,
    /// Upper-half to lower-half RMS residual ratio (decay indicator).
    pub residual_decay_ratio: f64,
    pub prediction: Option<f64>,
    pub rel_error: Option<f64>,
}

/// Fits N(m) = a0 m^{n-2} + a1 m^{n-3}; each sample is scaled by m^{-(n-2)}
/// so relative fluctuations carry equal weight.
pub fn fit_weyl(points: &[(f64, f64)], n: usize, prediction: Option<f64>) -> Result<WeylFit> {
    if points.len() < 5 {
        return Err(LadderError::Fit(format!(
            "need at least 5 mass samples, got {}",
            points.len()
        )));
    }
    let pow = n as f64 - 2.0;
    // regress y = N / m^{n-2} on [1, 1/m]
    let (mut s00, mut s01, mut s11, mut b0, mut b1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut ys = Vec::with_capacity(points.len());
    for &(m, count) in points {
        if !(m > 0.0) {
            return Err(LadderError::Fit("mass samples must be positive".into()));
        }
        let y = count / m.powf(pow);
        let x = 1.0 / m;
        s00 += 1.0;
        s01 += x;
        s11 += x * x;
        b0 += y;
        b1 += x * y;
        ys.push((m, y, x));
    }
    let det = s00 * s11 - s01 * s01;
    if det.abs() < 1e-14 * s00 * s11.max(1.0) {
        return Err(LadderError::Fit("degenerate design matrix".into()));
    }
    let a0 = (s11 * b0 - s01 * b1) / det;
    let a1 = (s00 * b1 - s01 * b0) / det;
    let mut ssr = 0.0;
    let mut residuals = Vec::with_capacity(ys.len());
    for &(m, y, x) in &ys {
        let r = y - a0 - a1 * x;
        ssr += r * r;
        residuals.push((m, r));
    }
    let dof = (points.len() - 2).max(1) as f64;
    let sigma2 = ssr / dof;
    let a0_stderr = (sigma2 * s11 / det).sqrt();
    let scale = a0.abs().max(1e-300);
    let residual_rel = (ssr / points.len() as f64).sqrt() / scale;
    residuals.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let half = residuals.len() / 2;
    let rms = |rs: &[(f64, f64)]| -> f64 {
        (rs.iter().map(|&(_, r)| r * r).sum::<f64>() / rs.len().max(1) as f64).sqrt()
    };
    let lower = rms(&residuals[..half]);
    let upper = rms(&residuals[half..]);
    // clamped so exact fits stay serializable
    let residual_decay_ratio = (upper.max(1e-300) / lower.max(1e-300)).min(1e12);
    let rel_error = prediction.map(|p| (a0 - p).abs() / p.abs().max(1e-300));
    Ok(WeylFit {
        a0,
        a0_stderr,
        a1,
        residual_rel,
        residual_decay_ratio,
        prediction,
        rel_error,
    })
}

/// Tauberian sandwich values around the sharp count.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sandwich {
    pub lower: f64,
    pub upper: f64,
    /// The mollified-indicator sum the bounds bracket.
    pub chi_sum: f64,
    /// Mass of psi outside [-gamma/delta, gamma/delta].
    pub tail_out: f64,
}

/// Evaluates the mollified-indicator sum and rigorous-style bounds built
/// from the counts at C -+ gamma. Requires the nonnegative-definite psi.
#[allow(clippy::too_many_arguments)]
pub fn tauberian_sandwich(
    spec: &JointSpectrum,
    nu: f64,
    c: f64,
    gamma: f64,
    delta: f64,
    m: u32,
    psi: &TestFunction,
    policy: CountPolicy,
) -> Result<Sandwich> {
    if !psi.nonneg() {
        return Err(LadderError::Precondition(
            "sandwich requires psi >= 0 with psi-hat >= 0 and psi-hat(0) = 1".into(),
        ));
    }
    if !(gamma > 0.0 && gamma < c) {
        return Err(LadderError::Precondition("need 0 < gamma < C".into()));
    }
    if !(delta > 0.0) {
        return Err(LadderError::Precondition("delta must be positive".into()));
    }
    let slice = spec.slice(m)?;
    let center = nu * m as f64;
    if !slice.covers(center - c - gamma, center + c + gamma) {
        return Err(LadderError::Incomplete(format!(
            "spectrum at mass {m} does not cover the widened window"
        )));
    }
    let mut chi_sum = 0.0;
    let mut outside = 0.0;
    for e in &slice.entries {
        if !policy.selects(e) {
            continue;
        }
        let y = e.lambda - center;
        let chi = e.multiplicity as f64 * mollified_indicator(psi, c, delta, y);
        chi_sum += chi;
        if y.abs() > c + gamma {
            outside += chi;
        }
    }
    let tail_out =
        (1.0 - (psi.cumulative(gamma / delta) - psi.cumulative(-gamma / delta))).max(0.0);
    let n_minus = count_sharp_slice(slice, nu, c - gamma, policy)? as f64;
    let n_plus = count_sharp_slice(slice, nu, c + gamma, policy)? as f64;
    // out-of-cache tail: density times the chi mass past the covered window
    let coverage = match slice.window {
        Some((lo, hi)) => (center - lo).min(hi - center),
        None => slice.lambda_complete - center.abs(),
    };
    let used: u64 = slice.entries.iter().map(|e| e.multiplicity).sum();
    let density = used as f64 / (2.0 * coverage).max(1.0);
    let uncovered = density * 2.0 * c * psi.tail_constant()
        / (1.5 * (1.0 + ((coverage - c) / delta).max(0.0)).powi(3));
    Ok(Sandwich {
        lower: n_minus * (1.0 - tail_out),
        upper: n_plus + outside + uncovered,
        chi_sum,
        tail_out,
    })
}

/// Spacing and multiplicity structure of eigenvalues near the ladder.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterDiagnostic {
    pub median_multiplicity: f64,
    /// Coefficient of variation of consecutive gaps near the ladder.
    pub gap_cv: f64,
    /// Median gap: the arithmetic-progression step when clustered.
    pub progression_step: f64,
    pub windows_sampled: usize,
    pub clustered: bool,
}

/// Thresholds for the clustering verdict.
pub const CLUSTER_MIN_MEDIAN_MULT: f64 = 16.0;
pub const CLUSTER_MAX_GAP_CV: f64 = 0.25;
/// A fit with scaled residuals above this fraction of a0 is unstable.
pub const FIT_UNSTABLE_RESIDUAL_REL: f64 = 0.05;

/// Samples windows of half-width `half_width` around nu m and pools gap and
/// multiplicity statistics of the positive-branch eigenvalues.
pub fn clustering_diagnostic(
    spec: &JointSpectrum,
    nu: f64,
    half_width: f64,
    masses: &[u32],
    policy: CountPolicy,
) -> Result<ClusterDiagnostic> {
    let mut mults: Vec<f64> = Vec::new();
    let mut gaps: Vec<f64> = Vec::new();
    let mut windows = 0;
    for &m in masses {
        let slice = spec.slice(m)?;
        let center = nu * m as f64;
        // shrink the window to the coverage of the slice when needed
        let w = match slice.window {
            Some((wlo, whi)) => half_width.min(whi - center).min(center - wlo),
            None => half_width.min(slice.lambda_complete - center.abs()),
        };
        if !(w > 0.0) {
            continue;
        }
        let lo = center - w;
        let hi = center + w;
        if !slice.covers(lo, hi) {
            continue;
        }
        windows += 1;
        let lambdas: Vec<&SpectralLine> = slice
            .entries
            .iter()
            .filter(|e| policy.selects(e) && e.lambda >= lo && e.lambda <= hi)
            .collect();
        for e in &lambdas {
            mults.push(e.multiplicity as f64);
        }
        for pair in lambdas.windows(2) {
            gaps.push(pair[1].lambda - pair[0].lambda);
        }
    }
    if windows == 0 {
        return Err(LadderError::Incomplete(
            "no spectrum window available for the clustering diagnostic".into(),
        ));
    }
    let median = |v: &mut Vec<f64>| -> f64 {
        if v.is_empty() {
            return 0.0;
        }
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v[v.len() / 2]
    };
    let median_multiplicity = median(&mut mults);
    let progression_step = median(&mut gaps.clone());
    let (mean, mut var) = gaps.iter().fold((0.0, 0.0), |(s, s2), &g| (s + g, s2 + g * g));
    let gap_cv = if gaps.len() >= 8 {
        let mean = mean / gaps.len() as f64;
        var = (var / gaps.len() as f64 - mean * mean).max(0.0);
        var.sqrt() / mean.max(1e-300)
    } else {
        f64::INFINITY
    };
    let clustered =
        median_multiplicity >= CLUSTER_MIN_MEDIAN_MULT && gap_cv <= CLUSTER_MAX_GAP_CV;
    Ok(ClusterDiagnostic {
        median_multiplicity,
        gap_cv,
        progression_step,
        windows_sampled: windows,
        clustered,
    })
}

/// Outcome of the end-to-end sharp Weyl verification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE")]
pub enum LadderVerdict {
    Pass,
    Fail,
    InconclusiveClustering,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LadderReport {
    pub nu: f64,
    pub c: f64,
    pub n: usize,
    pub mu: f64,
    pub masses: Vec<u32>,
    pub counts: Vec<u64>,
    pub predictions: Vec<f64>,
    pub fit: WeylFit,
    pub cluster: ClusterDiagnostic,
    pub tolerance: f64,
    pub verdict: LadderVerdict,
}

/// Counts over the mass grid, fits the leading coefficient and compares it
/// with the Liouville-volume prediction. A spectrum clustering along an
/// arithmetic progression makes the two-term fit meaningless and yields the
/// inconclusive-clustering verdict instead of a pass/fail call.
pub fn verify_weyl(
    spec: &JointSpectrum,
    nu: f64,
    c: f64,
    mu: f64,
    masses: &[u32],
    tolerance: f64,
    policy: CountPolicy,
) -> Result<LadderReport> {
    let n = spec.n;
    // counting both branches doubles every prediction
    let branch_factor = match policy.branch {
        Branch::Positive => 1.0,
        Branch::Both => 2.0,
    };
    let mut counts = Vec::with_capacity(masses.len());
    let mut predictions = Vec::with_capacity(masses.len());
    let mut points = Vec::with_capacity(masses.len());
    for &m in masses {
        let count = count_sharp(spec, nu, c, m, policy)?;
        counts.push(count);
        predictions
            .push(branch_factor * weyl_prediction(mu, c, m as f64, n, PredictionMode::Sharp));
        points.push((m as f64, count as f64));
    }
    let prediction_a0 =
        branch_factor * 2.0 * c * (2.0 * std::f64::consts::PI).powi(-(n as i32) + 1) * mu;
    let fit = fit_weyl(&points, n, Some(prediction_a0))?;
    let cluster = clustering_diagnostic(spec, nu, (5.0 * c).max(5.0), masses, policy)?;
    // Huge-multiplicity arithmetic progressions make the fixed-window count
    // track the number of clusters bitten, not the Liouville average: the
    // fit can come out smooth yet far off, or oscillate, depending on how C
    // compares to the progression step. Either way a sharp two-term
    // verification cannot be certified, so clustering itself gates the
    // verdict.
    let verdict = if cluster.clustered {
        LadderVerdict::InconclusiveClustering
    } else if fit.rel_error.unwrap_or(f64::INFINITY) <= tolerance {
        LadderVerdict::Pass
    } else {
        LadderVerdict::Fail
    };
    Ok(LadderReport {
        nu,
        c,
        n,
        mu,
        masses: masses.to_vec(),
        counts,
        predictions,
        fit,
        cluster,
        tolerance,
        verdict,
    })
}
