//! Small shared numerics: Gauss-Legendre rules and sphere constants.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
///
/// Newton iteration on the Legendre recurrence; accurate to machine precision
/// for the orders used here (up to a few thousand nodes).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-like initial guess.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (
        x.iter().map(|&t| mid + half * t).collect(),
        w.iter().map(|&t| t * half).collect(),
    )
}

/// Gamma function at integer or half-integer arguments, exact recursion.
fn gamma_half(two_x: u32) -> f64 {
    // two_x = 2x, x > 0
    match two_x {
        1 => PI.sqrt(),
        2 => 1.0,
        _ => (two_x as f64 / 2.0 - 1.0) * gamma_half(two_x - 2),
    }
}

/// Surface area of the unit k-sphere S^k embedded in R^{k+1}.
///
/// `sphere_area(0) = 2`, `sphere_area(1) = 2 pi`, `sphere_area(2) = 4 pi`.
pub fn sphere_area(k: usize) -> f64 {
    let d = k + 1; // ambient dimension
    2.0 * PI.powf(d as f64 / 2.0) / gamma_half(d as u32)
}

/// Volume of the unit ball in R^d.
pub fn ball_volume(d: usize) -> f64 {
    if d == 0 {
        return 1.0;
    }
    PI.powf(d as f64 / 2.0) / gamma_half(d as u32 + 2)
}
