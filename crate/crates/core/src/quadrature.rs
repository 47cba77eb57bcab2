//! Gauss–Legendre rules and tensor grids on the model surfaces.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on [-1, 1], computed by Newton iteration
/// on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A point on a model surface together with its quadrature weight (area element
/// included).
#[derive(Clone, Copy, Debug)]
pub struct SurfacePoint {
    pub coords: [f64; 2],
    pub weight: f64,
}

/// Quadrature on the round sphere of radius `radius` in (θ, φ) coordinates.
/// Gauss–Legendre in θ, trapezoid in φ.
pub fn sphere_grid(radius: f64, n_theta: usize, n_phi: usize) -> Vec<SurfacePoint> {
    let (x, w) = gauss_legendre(n_theta);
    let dphi = 2.0 * PI / n_phi as f64;
    let mut pts = Vec::with_capacity(n_theta * n_phi);
    for (xi, wi) in x.iter().zip(&w) {
        // θ = π/2 (x + 1): dθ = π/2 dx
        let theta = 0.5 * PI * (xi + 1.0);
        let area = radius * radius * theta.sin() * 0.5 * PI * wi * dphi;
        for j in 0..n_phi {
            pts.push(SurfacePoint {
                coords: [theta, dphi * j as f64],
                weight: area,
            });
        }
    }
    pts
}

/// Midpoint grid on the rectangle [0, l1] × [0, l2].
pub fn torus_grid(l1: f64, l2: f64, n1: usize, n2: usize) -> Vec<SurfacePoint> {
    let (h1, h2) = (l1 / n1 as f64, l2 / n2 as f64);
    (0..n1)
        .flat_map(|i| {
            (0..n2).map(move |j| SurfacePoint {
                coords: [(i as f64 + 0.5) * h1, (j as f64 + 0.5) * h2],
                weight: h1 * h2,
            })
        })
        .collect()
}
