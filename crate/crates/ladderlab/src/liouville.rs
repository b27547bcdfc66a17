//! Liouville volume of the constant-slope level set on the unit mass shell,
//! by closed form (product metrics), adaptive quadrature and stratified
//! Monte Carlo, plus the Weyl-law predictions built from it.
//!
//! The sphere constant multiplying the surface integral is the area of the
//! unit sphere in R^{n-1}; it is forced by differentiating the ellipsoid
//! volume in the slice construction and is cross-checked against the
//! Monte Carlo route, which only ever uses the ball volume.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LadderError, Result};
use crate::geometry::{classify_admissibility_on, StandardStationaryMetric, Surface};
use crate::quad::{ball_volume, gauss_legendre_on, sphere_area};

/// Convention record stored with every volume result.
pub const SPHERE_CONSTANT_CONVENTION: &str =
    "sphere constant = surface area of the unit sphere in R^{n-1}";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolumeMethod {
    ClosedFormProduct,
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VolumeResult {
    pub value: f64,
    pub method: VolumeMethod,
    pub error_estimate: f64,
    /// Quadrature nodes or Monte Carlo samples consumed.
    pub points: u64,
    pub convention: String,
    pub warnings: Vec<String>,
}

/// Closed-form volume for the product metric: A_{n-2} nu (nu^2-1)^{(n-3)/2} Vol(Sigma).
pub fn volume_closed_form_product(vol_sigma: f64, nu: f64, n: usize) -> Result<VolumeResult> {
    if n < 2 {
        return Err(LadderError::Precondition("need spacetime dimension n >= 2".into()));
    }
    if !(vol_sigma >= 0.0) {
        return Err(LadderError::Precondition("surface volume must be nonnegative".into()));
    }
    if !(nu > 1.0) {
        return Err(LadderError::EmptyLadder(format!(
            "product ladders require nu > 1 (got {nu})"
        )));
    }
    let value =
        sphere_area(n - 2) * nu * (nu * nu - 1.0).powf((n as f64 - 3.0) / 2.0) * vol_sigma;
    Ok(VolumeResult {
        value,
        method: VolumeMethod::ClosedFormProduct,
        error_estimate: 0.0,
        points: 0,
        convention: SPHERE_CONSTANT_CONVENTION.into(),
        warnings: Vec::new(),
    })
}

#[derive(Debug, Clone)]
pub struct QuadratureOptions {
    /// Base tensor resolution per axis; default chosen by dimension.
    pub resolution: Option<Vec<usize>>,
    /// Maximum subdivision depth for cells straddling the horizon.
    pub max_depth: u32,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions { resolution: None, max_depth: 12 }
    }
}

/// Liouville density at a surface point (without the dVol_h weight);
/// zero outside the allowed region.
fn liouville_density(metric: &StandardStationaryMetric, x: &[f64], nu: f64, n: usize) -> f64 {
    let f = metric.bottom_height_sq_at(x);
    let gap = nu * nu - f;
    if gap <= 0.0 {
        return 0.0;
    }
    let lapse = metric.lapse_at(x);
    sphere_area(n - 2) * nu * lapse * gap.powf((n as f64 - 3.0) / 2.0) / f.powf(n as f64 / 2.0)
}

/// Numerical Liouville volume with horizon-adapted quadrature.
pub fn volume_quadrature(
    metric: &StandardStationaryMetric,
    nu: f64,
    opts: &QuadratureOptions,
) -> Result<VolumeResult> {
    if !(nu > 0.0) {
        return Err(LadderError::Precondition("nu must be positive".into()));
    }
    metric.validate()?;
    let mut warnings = Vec::new();
    let (value, points) = match &metric.surface {
        Surface::RoundSphere { .. } => {
            // constant fields: the density is constant over the sphere
            let grid = metric.scan_grid(None)?;
            let f = liouville_density(metric, grid.point(0), nu, metric.n);
            (f * grid.total_weight(), grid.len() as u64)
        }
        Surface::FlatTorus { lengths } | Surface::GriddedTorus { lengths, .. } => {
            let lengths = lengths.clone();
            let res = opts
                .resolution
                .clone()
                .unwrap_or_else(|| default_quad_resolution(lengths.len()));
            let coarse: Vec<usize> = res.iter().map(|&r| (r / 2).max(8)).collect();
            let (fine_val, fine_pts, singular) =
                torus_quadrature(metric, nu, &lengths, &res, opts.max_depth)?;
            let (coarse_val, _, _) =
                torus_quadrature(metric, nu, &lengths, &coarse, opts.max_depth)?;
            if singular {
                warnings.push(
                    "boundary-singular integrand (n = 2): horizon-adapted square-root rule applied"
                        .into(),
                );
            }
            let err = (fine_val - coarse_val).abs();
            return Ok(VolumeResult {
                value: fine_val,
                method: VolumeMethod::Quadrature,
                error_estimate: err,
                points: fine_pts,
                convention: SPHERE_CONSTANT_CONVENTION.into(),
                warnings,
            });
        }
    };
    Ok(VolumeResult {
        value,
        method: VolumeMethod::Quadrature,
        error_estimate: value.abs() * 1e-14,
        points,
        convention: SPHERE_CONSTANT_CONVENTION.into(),
        warnings,
    })
}

fn default_quad_resolution(d: usize) -> Vec<usize> {
    let per_axis = match d {
        1 => 4096,
        2 => 192,
        3 => 32,
        _ => 12,
    };
    vec![per_axis; d]
}

/// Cell-recursive quadrature over a flat torus. Returns (value, evaluations,
/// hit_singular_rule).
fn torus_quadrature(
    metric: &StandardStationaryMetric,
    nu: f64,
    lengths: &[f64],
    res: &[usize],
    max_depth: u32,
) -> Result<(f64, u64, bool)> {
    let d = lengths.len();
    let n = metric.n;
    let nu2 = nu * nu;
    let mut evals: u64 = 0;
    let mut singular = false;

    let gap = |x: &[f64], evals: &mut u64| -> f64 {
        *evals += 1;
        nu2 - metric.bottom_height_sq_at(x)
    };
    let weighted_density = |x: &[f64], evals: &mut u64| -> f64 {
        *evals += 1;
        liouville_density(metric, x, nu, n) * metric.sqrt_det_h_at(x)
    };

    // recursion on cells [center +- half]
    struct Frame {
        center: Vec<f64>,
        half: Vec<f64>,
        depth: u32,
    }
    let mut total = 0.0;
    let mut stack: Vec<Frame> = Vec::new();
    let mut idx = vec![0usize; d];
    let cells: usize = res.iter().product();
    for _ in 0..cells {
        let mut center = vec![0.0; d];
        let mut half = vec![0.0; d];
        for a in 0..d {
            let ha = lengths[a] / res[a] as f64;
            center[a] = (idx[a] as f64 + 0.5) * ha;
            half[a] = 0.5 * ha;
        }
        stack.push(Frame { center, half, depth: 0 });
        for a in (0..d).rev() {
            idx[a] += 1;
            if idx[a] < res[a] {
                break;
            }
            idx[a] = 0;
        }
    }

    while let Some(frame) = stack.pop() {
        let Frame { center, half, depth } = frame;
        let vol: f64 = half.iter().map(|&h| 2.0 * h).product();
        // classify by the sign of nu^2 - F at center and corners
        let mut saw_pos = false;
        let mut saw_neg = false;
        let g0 = gap(&center, &mut evals);
        if g0 > 0.0 {
            saw_pos = true;
        } else {
            saw_neg = true;
        }
        let mut corner = vec![0.0; d];
        for c in 0..(1usize << d) {
            for a in 0..d {
                let sign = if (c >> a) & 1 == 1 { 1.0 } else { -1.0 };
                corner[a] = center[a] + sign * half[a];
            }
            let g = gap(&corner, &mut evals);
            if g > 0.0 {
                saw_pos = true;
            } else {
                saw_neg = true;
            }
            if saw_pos && saw_neg {
                break;
            }
        }
        if !saw_pos {
            continue; // forbidden cell
        }
        if !saw_neg {
            total += weighted_density(&center, &mut evals) * vol;
            continue;
        }
        // mixed cell
        if d == 1 {
            // n = 2: integrable inverse-square-root singularity at the horizon
            singular = true;
            let a_pt = center[0] - half[0];
            let b_pt = center[0] + half[0];
            total += horizon_interval(metric, nu, a_pt, b_pt, n, &mut evals);
            continue;
        }
        if depth >= max_depth {
            if g0 > 0.0 {
                total += weighted_density(&center, &mut evals) * vol;
            }
            continue;
        }
        for c in 0..(1usize << d) {
            let mut ch_center = center.clone();
            let mut ch_half = half.clone();
            for a in 0..d {
                ch_half[a] = 0.5 * half[a];
                let sign = if (c >> a) & 1 == 1 { 1.0 } else { -1.0 };
                ch_center[a] = center[a] + sign * ch_half[a];
            }
            stack.push(Frame { center: ch_center, half: ch_half, depth: depth + 1 });
        }
    }
    Ok((total, evals, singular))
}

/// Integrates the density over a 1-d interval that crosses the horizon,
/// using bisection for the crossing and a square-root substitution that
/// removes the (nu^2 - F)^{-1/2} singularity.
fn horizon_interval(
    metric: &StandardStationaryMetric,
    nu: f64,
    a: f64,
    b: f64,
    n: usize,
    evals: &mut u64,
) -> f64 {
    let nu2 = nu * nu;
    let g = |x: f64, evals: &mut u64| -> f64 {
        *evals += 1;
        nu2 - metric.bottom_height_sq_at(&[x])
    };
    let ga = g(a, evals);
    let gb = g(b, evals);
    if ga <= 0.0 && gb <= 0.0 {
        return 0.0;
    }
    if ga > 0.0 && gb > 0.0 {
        // interior dip: fall back to a fine fixed rule
        let (nodes, weights) = gauss_legendre_on(64, a, b);
        return nodes
            .iter()
            .zip(&weights)
            .map(|(&x, &w)| {
                *evals += 1;
                w * liouville_density(metric, &[x], nu, n) * metric.sqrt_det_h_at(&[x])
            })
            .sum();
    }
    // single crossing: bisect
    let (mut lo, mut hi) = (a, b);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid, evals);
        if (gm > 0.0) == (ga > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * (1.0 + hi.abs()) {
            break;
        }
    }
    let root = 0.5 * (lo + hi);
    let (start, end) = if ga > 0.0 { (a, root) } else { (root, b) };
    // substitute x = root +- u^2 toward the allowed side
    let span = (end - start).abs();
    let sign = if ga > 0.0 { -1.0 } else { 1.0 }; // direction from root into allowed side
    let (nodes, weights) = gauss_legendre_on(48, 0.0, span.sqrt());
    nodes
        .iter()
        .zip(&weights)
        .map(|(&u, &w)| {
            let x = root + sign * u * u;
            *evals += 1;
            w * 2.0 * u * liouville_density(metric, &[x], nu, n) * metric.sqrt_det_h_at(&[x])
        })
        .sum()
}

#[derive(Debug, Clone)]
pub struct MonteCarloOptions {
    pub samples: u64,
    pub seed: u64,
    /// Central-difference offset for the slice-volume derivative; default 1e-4 nu.
    pub dq: Option<f64>,
    /// Strata resolution per axis for torus surfaces.
    pub strata: Option<Vec<usize>>,
}

impl MonteCarloOptions {
    pub fn new(samples: u64, seed: u64) -> Self {
        MonteCarloOptions { samples, seed, dq: None, strata: None }
    }
}

/// Phase-space slice volume over a surface point: volume of the momentum
/// ellipsoid cut out by tau <= (nu + q) at unit mass.
fn ellipsoid_volume(n: usize, lapse: f64, f: f64, nu_plus_q: f64) -> f64 {
    let gap = nu_plus_q * nu_plus_q - f;
    if gap <= 0.0 {
        return 0.0;
    }
    ball_volume(n - 1) * lapse * gap.powf((n as f64 - 1.0) / 2.0) / f.powf(n as f64 / 2.0)
}

/// Monte Carlo estimate of the Liouville volume via the central-difference
/// derivative of the ellipsoid slice volume, stratified over grid cells.
pub fn volume_montecarlo(
    metric: &StandardStationaryMetric,
    nu: f64,
    opts: &MonteCarloOptions,
) -> Result<VolumeResult> {
    if !(nu > 0.0) {
        return Err(LadderError::Precondition("nu must be positive".into()));
    }
    if opts.samples < 10_000 {
        return Err(LadderError::Precondition(
            "need at least 10^4 Monte Carlo samples".into(),
        ));
    }
    metric.validate()?;
    let n = metric.n;
    let dq = opts.dq.unwrap_or(1e-4 * nu);
    if !(dq > 0.0) {
        return Err(LadderError::Precondition("dq must be positive".into()));
    }
    let mut warnings = Vec::new();
    if let Ok(rep) = classify_admissibility_on(metric, nu, 1e-6, None) {
        if rep
            .critical_values
            .iter()
            .any(|&cv| (nu - cv).abs() <= dq)
        {
            warnings.push(format!(
                "nu within dq = {dq:.3e} of a critical level: derivative ill-conditioned"
            ));
        }
    }
    if n == 2 {
        warnings.push(
            "slice-volume derivative has unbounded variance near horizons for n = 2".into(),
        );
    }

    let integrand = |x: &[f64]| -> f64 {
        let lapse = metric.lapse_at(x);
        let f = metric.bottom_height_sq_at(x);
        let plus = ellipsoid_volume(n, lapse, f, nu + dq);
        let minus = ellipsoid_volume(n, lapse, f, nu - dq);
        (plus - minus) / (2.0 * dq) * metric.sqrt_det_h_at(x)
    };

    match &metric.surface {
        Surface::FlatTorus { lengths } | Surface::GriddedTorus { lengths, .. } => {
            let lengths = lengths.clone();
            let d = lengths.len();
            let strata_res = opts
                .strata
                .clone()
                .unwrap_or_else(|| default_strata_resolution(d));
            let strata: usize = strata_res.iter().product();
            let cellvol: f64 = lengths
                .iter()
                .zip(&strata_res)
                .map(|(&l, &r)| l / r as f64)
                .product();
            let base = opts.samples / strata as u64;
            let extra = (opts.samples % strata as u64) as usize;
            let mut total = 0.0;
            let mut variance = 0.0;
            let mut consumed: u64 = 0;
            let mut idx = vec![0usize; d];
            let mut x = vec![0.0; d];
            for s in 0..strata {
                let ns = base + if s < extra { 1 } else { 0 };
                if ns == 0 {
                    continue;
                }
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                rng.set_stream(s as u64 + 1);
                let mut sum = 0.0;
                let mut sumsq = 0.0;
                for _ in 0..ns {
                    for a in 0..d {
                        let u: f64 = rng.random();
                        x[a] = (idx[a] as f64 + u) * lengths[a] / strata_res[a] as f64;
                    }
                    let f = integrand(&x);
                    sum += f;
                    sumsq += f * f;
                }
                let mean = sum / ns as f64;
                total += mean * cellvol;
                if ns > 1 {
                    let var_sample = (sumsq - sum * sum / ns as f64) / (ns as f64 - 1.0);
                    variance += var_sample.max(0.0) / ns as f64 * cellvol * cellvol;
                }
                consumed += ns;
                for a in (0..d).rev() {
                    idx[a] += 1;
                    if idx[a] < strata_res[a] {
                        break;
                    }
                    idx[a] = 0;
                }
            }
            Ok(VolumeResult {
                value: total,
                method: VolumeMethod::MonteCarlo,
                error_estimate: variance.sqrt(),
                points: consumed,
                convention: SPHERE_CONSTANT_CONVENTION.into(),
                warnings,
            })
        }
        Surface::RoundSphere { .. } => {
            // constant fields: integrand is position-independent
            let grid = metric.scan_grid(None)?;
            let f = integrand(grid.point(0));
            warnings.push("constant fields on sphere: zero-variance estimate".into());
            Ok(VolumeResult {
                value: f * grid.total_weight(),
                method: VolumeMethod::MonteCarlo,
                error_estimate: 0.0,
                points: opts.samples,
                convention: SPHERE_CONSTANT_CONVENTION.into(),
                warnings,
            })
        }
    }
}

fn default_strata_resolution(d: usize) -> Vec<usize> {
    let per_axis = match d {
        1 => 256,
        2 => 64,
        _ => 16,
    };
    vec![per_axis; d]
}

/// Deterministic evaluation of the slice-volume derivative at mass `m`,
/// used to check the scaling law mu(N_m) = m^{n-2} mu(N_1). The offset in
/// tau scales with the mass so that the difference quotient samples the
/// same dimensionless gap at every mass.
pub fn volume_ellipsoid_at_mass(
    metric: &StandardStationaryMetric,
    nu: f64,
    mass: f64,
    dq_base: f64,
    resolution: Option<Vec<usize>>,
) -> Result<f64> {
    if !(mass > 0.0) || !(nu > 0.0) || !(dq_base > 0.0) {
        return Err(LadderError::Precondition(
            "mass, nu and dq must be positive".into(),
        ));
    }
    let n = metric.n;
    let grid = metric.scan_grid(resolution)?;
    let dq = mass * dq_base;
    let mut total = 0.0;
    for i in 0..grid.len() {
        let x = grid.point(i);
        let lapse = metric.lapse_at(x);
        let f = metric.bottom_height_sq_at(x);
        let scale = mass.powi(n as i32 - 1);
        let plus = scale * ellipsoid_volume_scaled(n, lapse, f, nu + dq / mass);
        let minus = scale * ellipsoid_volume_scaled(n, lapse, f, nu - dq / mass);
        total += (plus - minus) / (2.0 * dq) * grid.weight(i);
    }
    Ok(total)
}

fn ellipsoid_volume_scaled(n: usize, lapse: f64, f: f64, nu_eff: f64) -> f64 {
    ellipsoid_volume(n, lapse, f, nu_eff)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionMode {
    /// amplitude is the half-width C of the sharp window.
    Sharp,
    /// amplitude is psi-hat(0) of the smoothing function.
    Smoothed,
}

/// Leading Weyl-law term: (2 pi)^{-n+1} mu m^{n-2} times 2C or psi-hat(0).
pub fn weyl_prediction(mu: f64, amplitude: f64, m: f64, n: usize, mode: PredictionMode) -> f64 {
    let base = (2.0 * std::f64::consts::PI).powi(-(n as i32) + 1) * mu * m.powi(n as i32 - 2);
    match mode {
        PredictionMode::Sharp => 2.0 * amplitude * base,
        PredictionMode::Smoothed => amplitude * base,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ScalarField, ShiftField, SpatialMetricField};
    use std::f64::consts::{PI, TAU};

    fn product_t2() -> StandardStationaryMetric {
        StandardStationaryMetric::product(Surface::FlatTorus { lengths: vec![TAU, TAU] })
    }

    fn cosine_metric(amplitude: f64) -> StandardStationaryMetric {
        StandardStationaryMetric {
            n: 3,
            surface: Surface::FlatTorus { lengths: vec![TAU, TAU] },
            lapse: ScalarField::Cosine { base: 1.0, amplitude, axis: 0, harmonic: 1 },
            shift: ShiftField::Zero,
            spatial_metric: SpatialMetricField::Identity,
        }
    }

    #[test]
    fn closed_form_values() {
        // n = 3, Vol = 4 pi^2, nu = sqrt 2 -> 8 sqrt2 pi^3
        let v = volume_closed_form_product(4.0 * PI * PI, 2f64.sqrt(), 3).unwrap();
        assert!((v.value - 8.0 * 2f64.sqrt() * PI.powi(3)).abs() < 1e-10);
        // n = 3, Vol = 1: 2 pi nu for any nu > 1
        let v = volume_closed_form_product(1.0, 1.0 + 1e-12, 3).unwrap();
        assert!((v.value - TAU).abs() < 1e-9);
        // n = 4, Vol = 1, nu = sqrt2 -> 4 sqrt2 pi
        let v = volume_closed_form_product(1.0, 2f64.sqrt(), 4).unwrap();
        assert!((v.value - 4.0 * 2f64.sqrt() * PI).abs() < 1e-12);
        // nu <= 1 is an empty ladder
        assert!(matches!(
            volume_closed_form_product(1.0, 0.9, 3),
            Err(LadderError::EmptyLadder(_))
        ));
    }

    #[test]
    fn quadrature_matches_closed_form_on_product() {
        let nu = 2f64.sqrt();
        let q = volume_quadrature(&product_t2(), nu, &QuadratureOptions::default()).unwrap();
        let cf = volume_closed_form_product(4.0 * PI * PI, nu, 3).unwrap();
        assert!(
            (q.value - cf.value).abs() <= 1e-8 * cf.value,
            "quadrature {} vs closed form {}",
            q.value,
            cf.value
        );
        // sphere route: Sigma = S^2 means n = 3
        let s2 = StandardStationaryMetric::product(Surface::RoundSphere { dim: 2, radius: 1.0 });
        let qs = volume_quadrature(&s2, nu, &QuadratureOptions::default()).unwrap();
        let cfs = volume_closed_form_product(4.0 * PI, nu, 3).unwrap();
        assert!((qs.value - cfs.value).abs() <= 1e-8 * cfs.value);
        // and Sigma = S^3 means n = 4
        let s3 = StandardStationaryMetric::product(Surface::RoundSphere { dim: 3, radius: 1.0 });
        let qs3 = volume_quadrature(&s3, nu, &QuadratureOptions::default()).unwrap();
        let cfs3 = volume_closed_form_product(2.0 * PI * PI, nu, 4).unwrap();
        assert!((qs3.value - cfs3.value).abs() <= 1e-8 * cfs3.value);
    }

    #[test]
    fn quadrature_vanishes_below_bottom() {
        let q = volume_quadrature(&cosine_metric(0.2), 0.5, &QuadratureOptions::default())
            .unwrap();
        assert_eq!(q.value, 0.0);
    }

    #[test]
    fn quadrature_monotone_in_nu() {
        let m = cosine_metric(0.2);
        let mut last = -1.0;
        for nu in [0.9, 1.0, 1.1, 1.3, 1.5, 2.0] {
            let v = volume_quadrature(&m, nu, &QuadratureOptions::default()).unwrap().value;
            assert!(v >= last - 1e-12, "volume decreased at nu = {nu}");
            last = v;
        }
    }

    #[test]
    fn montecarlo_product_reproduces_closed_form_exactly() {
        let nu = 2f64.sqrt();
        let mc = volume_montecarlo(&product_t2(), nu, &MonteCarloOptions::new(20_000, 7)).unwrap();
        let cf = volume_closed_form_product(4.0 * PI * PI, nu, 3).unwrap();
        // constant integrand: stratified mean is exact, zero variance
        assert!(mc.error_estimate < 1e-12);
        assert!((mc.value - cf.value).abs() < 1e-9 * cf.value);
    }

    #[test]
    fn montecarlo_is_bit_reproducible() {
        let m = cosine_metric(0.2);
        let a = volume_montecarlo(&m, 1.3, &MonteCarloOptions::new(50_000, 42)).unwrap();
        let b = volume_montecarlo(&m, 1.3, &MonteCarloOptions::new(50_000, 42)).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.error_estimate.to_bits(), b.error_estimate.to_bits());
        let c = volume_montecarlo(&m, 1.3, &MonteCarloOptions::new(50_000, 43)).unwrap();
        assert_ne!(a.value.to_bits(), c.value.to_bits());
    }

    #[test]
    fn montecarlo_agrees_with_quadrature_on_partial_region() {
        let m = cosine_metric(0.2);
        let nu = 1.1; // allowed region is a strict subset
        let q = volume_quadrature(&m, nu, &QuadratureOptions::default()).unwrap();
        let mc = volume_montecarlo(&m, nu, &MonteCarloOptions::new(200_000, 11)).unwrap();
        let sigma = mc.error_estimate.max(1e-12);
        assert!(
            (mc.value - q.value).abs() <= 3.0 * sigma + q.error_estimate,
            "mc {} +- {} vs quad {} +- {}",
            mc.value,
            mc.error_estimate,
            q.value,
            q.error_estimate
        );
    }

    #[test]
    fn montecarlo_zero_on_empty_region() {
        let m = cosine_metric(0.2);
        let mc = volume_montecarlo(&m, 0.5, &MonteCarloOptions::new(10_000, 3)).unwrap();
        assert_eq!(mc.value, 0.0);
        assert_eq!(mc.error_estimate, 0.0);
    }

    #[test]
    fn montecarlo_warns_near_critical_level() {
        let m = cosine_metric(0.2);
        let mut opts = MonteCarloOptions::new(10_000, 3);
        opts.dq = Some(0.05);
        let mc = volume_montecarlo(&m, 1.21, &opts).unwrap();
        assert!(mc.warnings.iter().any(|w| w.contains("critical")));
    }

    #[test]
    fn constant_shift_cross_method() {
        let m = StandardStationaryMetric {
            n: 3,
            surface: Surface::FlatTorus { lengths: vec![TAU, TAU] },
            lapse: ScalarField::Constant { value: 1.0 },
            shift: ShiftField::Constant { value: vec![0.3, 0.0] },
            spatial_metric: SpatialMetricField::Identity,
        };
        let nu = 1.2; // above max bottom height sqrt(1 - 0.09) ~ 0.954
        let q = volume_quadrature(&m, nu, &QuadratureOptions::default()).unwrap();
        let mc = volume_montecarlo(&m, nu, &MonteCarloOptions::new(100_000, 5)).unwrap();
        let sigma = mc.error_estimate.max(1e-12 * q.value);
        assert!((mc.value - q.value).abs() <= 3.0 * sigma + 1e-9 * q.value);
    }

    #[test]
    fn scaling_law_in_mass() {
        let m = cosine_metric(0.2);
        let nu = 1.5;
        let base = volume_ellipsoid_at_mass(&m, nu, 1.0, 1e-4 * nu, None).unwrap();
        for mass in [2.0, 5.0, 10.0] {
            let v = volume_ellipsoid_at_mass(&m, nu, mass, 1e-4 * nu, None).unwrap();
            let expect = mass.powi(1) * base; // n - 2 = 1
            assert!(
                (v - expect).abs() <= 1e-8 * expect.abs(),
                "mass {mass}: {v} vs {expect}"
            );
        }
    }

    #[test]
    fn n2_quadrature_closed_form_and_warning() {
        // n = 2 circle: mu = 2 nu / sqrt(nu^2 - 1) * L on the product metric
        let m = StandardStationaryMetric::product(Surface::FlatTorus { lengths: vec![TAU] });
        let nu = 1.5;
        let q = volume_quadrature(&m, nu, &QuadratureOptions::default()).unwrap();
        let expect = 2.0 * nu / (nu * nu - 1.0).sqrt() * TAU;
        assert!((q.value - expect).abs() < 1e-8 * expect);
        // partial region on a cosine lapse triggers the singular-rule warning
        let c = StandardStationaryMetric {
            n: 2,
            surface: Surface::FlatTorus { lengths: vec![TAU] },
            lapse: ScalarField::Cosine { base: 1.0, amplitude: 0.2, axis: 0, harmonic: 1 },
            shift: ShiftField::Zero,
            spatial_metric: SpatialMetricField::Identity,
        };
        let qc = volume_quadrature(&c, 1.1, &QuadratureOptions::default()).unwrap();
        assert!(qc.warnings.iter().any(|w| w.contains("boundary-singular")));
        assert!(qc.value > 0.0);
    }

    #[test]
    fn prediction_values() {
        let mu = 8.0 * 2f64.sqrt() * PI.powi(3);
        let p = weyl_prediction(mu, 0.5, 100.0, 3, PredictionMode::Sharp);
        assert!((p - 2.0 * 2f64.sqrt() * PI * 100.0).abs() < 1e-9);
        assert_eq!(weyl_prediction(0.0, 0.5, 10.0, 3, PredictionMode::Sharp), 0.0);
        let p = weyl_prediction(4.0 * PI * PI, 1.0, 10.0, 3, PredictionMode::Smoothed);
        assert!((p - 10.0).abs() < 1e-12);
    }
}
