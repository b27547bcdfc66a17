//! Schwartz test functions with compactly supported Fourier transform.
//!
//! Two constructions: a plain smooth bump profile for psi-hat, and the
//! autocorrelation of a bump, which guarantees psi >= 0 and psi-hat >= 0 as
//! required by the Tauberian sandwich. Both are normalized to psi-hat(0) = 1
//! and evaluated by numerical Fourier inversion on a dense symmetric table.

use crate::error::{LadderError, Result};
use crate::quad::gauss_legendre_on;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HatProfile {
    /// c exp(-1 / (1 - (s/a)^2)) on |s| < a, scaled to hat(0) = 1.
    Bump,
    /// (b * b)(s) / (b * b)(0) for a bump b of radius a/2; nonnegative-definite.
    BumpAutocorrelation,
}

#[derive(Debug, Clone)]
pub struct TestFunction {
    hat_radius: f64,
    profile: HatProfile,
    nonneg: bool,
    /// psi on the uniform grid 0, step, 2 step, ..., up to eval_radius.
    table: Vec<f64>,
    /// trapezoid cumulative of psi from -eval_radius (even reflection).
    cumulative: Vec<f64>,
    step: f64,
    /// empirical decay constant: max |psi(x)| (1+|x|)^4 over the outer half
    tail_c4: f64,
    /// nodes/weights for exact Fourier inversion
    gl_nodes: Vec<f64>,
    gl_weights: Vec<f64>,
    /// hat profile sampled on the nodes
    gl_hat: Vec<f64>,
    /// autocorrelation normalization (b*b)(0); 1.0 for the plain bump
    acf_norm: f64,
}

fn bump_profile(s: f64, radius: f64) -> f64 {
    let u = s / radius;
    if u.abs() < 1.0 {
        (-1.0 / (1.0 - u * u)).exp()
    } else {
        0.0
    }
}

impl TestFunction {
    /// Plain bump profile; psi is real and even but takes both signs.
    pub fn bump(hat_radius: f64) -> Result<TestFunction> {
        TestFunction::build(hat_radius, HatProfile::Bump)
    }

    /// Autocorrelation profile: psi >= 0, psi-hat >= 0, psi-hat(0) = 1.
    pub fn bump_autocorrelation(hat_radius: f64) -> Result<TestFunction> {
        TestFunction::build(hat_radius, HatProfile::BumpAutocorrelation)
    }

    fn build(hat_radius: f64, profile: HatProfile) -> Result<TestFunction> {
        if !(hat_radius > 0.0) || !hat_radius.is_finite() {
            return Err(LadderError::Precondition(
                "hat support radius must be positive and finite".into(),
            ));
        }
        let eval_radius = (240.0 / hat_radius).clamp(60.0, 2400.0);
        let step = (0.01f64).min(std::f64::consts::PI / (64.0 * hat_radius));
        // quadrature interval: [0, a] for the bump, [0, a/2] for the factor b
        let quad_hi = match profile {
            HatProfile::Bump => hat_radius,
            HatProfile::BumpAutocorrelation => hat_radius / 2.0,
        };
        let n_gl = ((0.75 * quad_hi * eval_radius) as usize + 64).clamp(256, 4096);
        let (gl_nodes, gl_weights) = gauss_legendre_on(n_gl, 0.0, quad_hi);
        let gl_hat: Vec<f64> = gl_nodes
            .iter()
            .map(|&s| match profile {
                HatProfile::Bump => std::f64::consts::E * bump_profile(s, hat_radius),
                HatProfile::BumpAutocorrelation => bump_profile(s, hat_radius / 2.0),
            })
            .collect();
        let acf_norm = match profile {
            HatProfile::Bump => 1.0,
            HatProfile::BumpAutocorrelation => {
                // (b*b)(0) = 2 int_0^{a/2} b^2
                2.0 * gl_weights
                    .iter()
                    .zip(&gl_hat)
                    .map(|(&w, &h)| w * h * h)
                    .sum::<f64>()
            }
        };
        let mut tf = TestFunction {
            hat_radius,
            profile,
            nonneg: profile == HatProfile::BumpAutocorrelation,
            table: Vec::new(),
            cumulative: Vec::new(),
            step,
            tail_c4: 0.0,
            gl_nodes,
            gl_weights,
            gl_hat,
            acf_norm,
        };
        let len = (eval_radius / step).ceil() as usize + 1;
        tf.table = (0..len).map(|i| tf.psi_exact(i as f64 * step)).collect();
        // trapezoid cumulative over [-X, X] using even symmetry
        let mut cum = vec![0.0; 2 * len - 1];
        let mut acc = 0.0;
        let at = |j: usize| tf.table[(j as isize - (len as isize - 1)).unsigned_abs()];
        for (j, c) in cum.iter_mut().enumerate().skip(1) {
            acc += 0.5 * step * (at(j - 1) + at(j));
            *c = acc;
        }
        tf.cumulative = cum;
        let half = len / 2;
        tf.tail_c4 = (half..len)
            .map(|i| {
                let x = i as f64 * step;
                tf.table[i].abs() * (1.0 + x).powi(4)
            })
            .fold(0.0, f64::max);
        Ok(tf)
    }

    pub fn hat_radius(&self) -> f64 {
        self.hat_radius
    }

    pub fn profile(&self) -> HatProfile {
        self.profile
    }

    /// Recorded normalization psi-hat(0).
    pub fn hat0(&self) -> f64 {
        1.0
    }

    pub fn nonneg(&self) -> bool {
        self.nonneg
    }

    /// Largest |x| with tabulated psi; beyond it psi is treated as 0 and the
    /// discarded mass is covered by `tail_bound`.
    pub fn eval_radius(&self) -> f64 {
        (self.table.len() - 1) as f64 * self.step
    }

    /// Fourier transform of psi at s (even in s, supported in |s| <= radius).
    pub fn hat(&self, s: f64) -> f64 {
        let s = s.abs();
        if s >= self.hat_radius {
            return 0.0;
        }
        match self.profile {
            HatProfile::Bump => std::f64::consts::E * bump_profile(s, self.hat_radius),
            HatProfile::BumpAutocorrelation => {
                // (b*b)(s)/norm over the overlap of the two supports
                let half = self.hat_radius / 2.0;
                let lo = (-half).max(s - half);
                let hi = half.min(s + half);
                if lo >= hi {
                    return 0.0;
                }
                let (nodes, weights) = gauss_legendre_on(257, lo, hi);
                let val: f64 = nodes
                    .iter()
                    .zip(&weights)
                    .map(|(&u, &w)| w * bump_profile(u, half) * bump_profile(s - u, half))
                    .sum();
                val / self.acf_norm
            }
        }
    }

    /// psi by direct Fourier inversion (slow path, machine accurate).
    pub fn psi_exact(&self, x: f64) -> f64 {
        let x = x.abs();
        match self.profile {
            HatProfile::Bump => {
                // psi(x) = (1/pi) int_0^a hat(s) cos(s x) ds
                let mut acc = 0.0;
                for ((&s, &w), &h) in self
                    .gl_nodes
                    .iter()
                    .zip(&self.gl_weights)
                    .zip(&self.gl_hat)
                {
                    acc += w * h * (s * x).cos();
                }
                acc / std::f64::consts::PI
            }
            HatProfile::BumpAutocorrelation => {
                // psi = 2 pi g^2 / (b*b)(0) with g the inverse transform of b
                let mut g = 0.0;
                for ((&s, &w), &h) in self
                    .gl_nodes
                    .iter()
                    .zip(&self.gl_weights)
                    .zip(&self.gl_hat)
                {
                    g += w * h * (s * x).cos();
                }
                g /= std::f64::consts::PI;
                2.0 * std::f64::consts::PI * g * g / self.acf_norm
            }
        }
    }

    /// psi from the dense table (cubic interpolation, even extension).
    pub fn psi(&self, x: f64) -> f64 {
        let x = x.abs();
        let u = x / self.step;
        let j = u.floor() as usize;
        if j + 2 >= self.table.len() {
            return 0.0;
        }
        let t = u - j as f64;
        // 4-point Lagrange on j-1, j, j+1, j+2 with even reflection at 0
        let ym1 = if j == 0 { self.table[1] } else { self.table[j - 1] };
        let y0 = self.table[j];
        let y1 = self.table[j + 1];
        let y2 = self.table[j + 2];
        let a = -t * (t - 1.0) * (t - 2.0) / 6.0;
        let b = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
        let c = -(t + 1.0) * t * (t - 2.0) / 2.0;
        let d = (t + 1.0) * t * (t - 1.0) / 6.0;
        a * ym1 + b * y0 + c * y1 + d * y2
    }

    /// Integral of psi from -eval_radius to x (clamped at the table edges).
    pub fn cumulative(&self, x: f64) -> f64 {
        let len = self.table.len();
        let xr = self.eval_radius();
        if x <= -xr {
            return 0.0;
        }
        if x >= xr {
            return *self.cumulative.last().unwrap();
        }
        let u = (x + xr) / self.step;
        let j = (u.floor() as usize).min(2 * len - 3);
        let t = u - j as f64;
        let a = self.cumulative[j];
        let b = self.cumulative[j + 1];
        a + t * (b - a)
    }

    /// Total tabulated mass int_{-X}^{X} psi.
    pub fn table_mass(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    /// Empirical decay constant C4 with |psi(x)| <= C4 (1+|x|)^-4 on the
    /// outer half of the table.
    pub fn tail_constant(&self) -> f64 {
        self.tail_c4
    }

    /// Pointwise bound on |psi| past the evaluation radius.
    pub fn tail_bound(&self, y: f64) -> f64 {
        self.tail_c4 / (1.0 + y.abs()).powi(4)
    }

    /// Bound on the integral of |psi| outside [-y, y] for y >= eval radius.
    pub fn tail_integral_bound(&self, y: f64) -> f64 {
        2.0 * self.tail_c4 / (3.0 * (1.0 + y.abs()).powi(3))
    }

    /// Symmetric sample table (decimated) for reports.
    pub fn samples(&self, count: usize) -> Vec<(f64, f64)> {
        let count = count.max(3);
        let xr = self.eval_radius();
        (0..count)
            .map(|i| {
                let x = -xr + 2.0 * xr * i as f64 / (count - 1) as f64;
                (x, self.psi(x))
            })
            .collect()
    }
}

/// Mollified indicator chi_{C,delta} = psi_delta * 1_[-C,C] evaluated at y.
pub fn mollified_indicator(psi: &TestFunction, c: f64, delta: f64, y: f64) -> f64 {
    psi.cumulative((y + c) / delta) - psi.cumulative((y - c) / delta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_is_even_to_machine_precision() {
        let tf = TestFunction::bump(0.5).unwrap();
        for x in [0.1, 1.7, 25.0, 123.456] {
            assert_eq!(tf.psi(x), tf.psi(-x));
            assert_eq!(tf.psi_exact(x), tf.psi_exact(-x));
        }
    }

    #[test]
    fn normalization_matches_recorded_hat0() {
        for tf in [
            TestFunction::bump(0.5).unwrap(),
            TestFunction::bump(9.0).unwrap(),
            TestFunction::bump_autocorrelation(1.0).unwrap(),
        ] {
            let tol = 1e-10 + tf.tail_integral_bound(tf.eval_radius());
            assert!(
                (tf.table_mass() - tf.hat0()).abs() <= tol,
                "mass {} vs 1 (tol {tol:.3e})",
                tf.table_mass()
            );
        }
    }

    #[test]
    fn table_interpolation_tracks_exact_values() {
        let tf = TestFunction::bump(9.0).unwrap();
        for i in 0..200 {
            let x = 0.137 + i as f64 * 0.2711;
            if x < tf.eval_radius() - 1.0 {
                assert!(
                    (tf.psi(x) - tf.psi_exact(x)).abs() < 1e-8,
                    "x = {x}: {} vs {}",
                    tf.psi(x),
                    tf.psi_exact(x)
                );
            }
        }
    }

    #[test]
    fn empirical_decay_extends_to_full_range() {
        // the quartic-decay constant measured on [X/4, X/2] already bounds
        // psi on [X/2, X]: the decay is at least quartic far out
        let tf = TestFunction::bump(2.0).unwrap();
        let xr = tf.eval_radius();
        let mut c4_inner: f64 = 0.0;
        let mut x = xr / 4.0;
        while x < xr / 2.0 {
            c4_inner = c4_inner.max(tf.psi(x).abs() * (1.0 + x).powi(4));
            x += 0.11;
        }
        assert!(c4_inner > 0.0);
        let mut x = xr / 2.0;
        while x < xr - 1.0 {
            assert!(
                tf.psi(x).abs() <= c4_inner / (1.0 + x).powi(4) + 1e-14,
                "decay violated at {x}"
            );
            x += 0.37;
        }
    }

    #[test]
    fn autocorrelation_is_nonnegative_with_unit_hat() {
        let tf = TestFunction::bump_autocorrelation(0.8).unwrap();
        assert!(tf.nonneg());
        let mut x = 0.0;
        while x < tf.eval_radius() {
            assert!(tf.psi_exact(x) >= 0.0);
            x += 1.3;
        }
        assert!((tf.hat(0.0) - 1.0).abs() < 1e-12);
        for s in [0.1, 0.3, 0.5, 0.7] {
            assert!(tf.hat(s) >= 0.0);
            assert!(tf.hat(s) <= 1.0 + 1e-12);
        }
        assert_eq!(tf.hat(0.81), 0.0);
    }

    #[test]
    fn mollified_indicator_limits() {
        let tf = TestFunction::bump_autocorrelation(1.0).unwrap();
        // chi(0) in (0, 1], increasing toward 1 as delta -> 0
        let mut last = 0.0;
        for delta in [1.0, 0.3, 0.1, 0.01] {
            let v = mollified_indicator(&tf, 0.5, delta, 0.0);
            assert!(v > 0.0 && v <= 1.0 + 1e-12);
            assert!(v >= last - 1e-12);
            last = v;
        }
        assert!((last - 1.0).abs() < 1e-3);
        // far outside the window the mollified indicator is tail-small
        let far = mollified_indicator(&tf, 0.5, 0.01, 10.0);
        assert!(far.abs() < 1e-8);
    }

    #[test]
    fn cumulative_is_monotone_for_nonneg_profile() {
        let tf = TestFunction::bump_autocorrelation(1.0).unwrap();
        let mut prev = -1.0;
        let mut x = -tf.eval_radius() - 1.0;
        while x < tf.eval_radius() + 1.0 {
            let v = tf.cumulative(x);
            assert!(v >= prev - 1e-12);
            prev = v;
            x += 0.71;
        }
    }

    #[test]
    fn rejects_bad_radius() {
        assert!(TestFunction::bump(0.0).is_err());
        assert!(TestFunction::bump(-1.0).is_err());
        assert!(TestFunction::bump(f64::NAN).is_err());
    }
}
