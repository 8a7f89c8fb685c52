//! Gauss–Legendre rules and product rules on the unit sphere.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        // Tricomi initial guess, refined by Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
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
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (
        x.iter().map(|t| mid + half * t).collect(),
        w.iter().map(|v| v * half).collect(),
    )
}

/// A direction on the unit sphere `S^{n-1}` and its quadrature weight.
#[derive(Debug, Clone)]
pub struct SphereNode {
    pub direction: Vec<f64>,
    pub weight: f64,
}

/// Product rule on `S^{n-1}` in hyperspherical coordinates: Gauss–Legendre in
/// each polar angle, uniform midpoint rule in the azimuth (`2 * resolution`
/// nodes). The weights sum to the area of the unit sphere.
pub fn sphere_rule(n: usize, resolution: usize) -> Vec<SphereNode> {
    assert!(n >= 2 && resolution > 0);
    let n_phi = 2 * resolution;
    let phis: Vec<f64> = (0..n_phi)
        .map(|j| 2.0 * PI * (j as f64 + 0.5) / n_phi as f64)
        .collect();
    let w_phi = 2.0 * PI / n_phi as f64;
    if n == 2 {
        return phis
            .iter()
            .map(|&phi| SphereNode {
                direction: vec![phi.cos(), phi.sin()],
                weight: w_phi,
            })
            .collect();
    }
    let (thetas, w_theta) = gauss_legendre_on(resolution, 0.0, PI);
    let n_polar = n - 2;
    let mut out = Vec::with_capacity(resolution.pow(n_polar as u32) * n_phi);
    let mut idx = vec![0usize; n_polar];
    loop {
        let mut dir = vec![0.0; n];
        let mut sprod = 1.0;
        let mut weight = w_phi;
        for (k, &i) in idx.iter().enumerate() {
            let th = thetas[i];
            dir[k] = sprod * th.cos();
            // measure: sin^{n-2-k}(theta_k)
            weight *= w_theta[i] * th.sin().powi((n - 2 - k) as i32);
            sprod *= th.sin();
        }
        for &phi in &phis {
            let mut d = dir.clone();
            d[n - 2] = sprod * phi.cos();
            d[n - 1] = sprod * phi.sin();
            out.push(SphereNode {
                direction: d,
                weight,
            });
        }
        // odometer increment
        let mut k = 0;
        loop {
            if k == n_polar {
                return out;
            }
            idx[k] += 1;
            if idx[k] < resolution {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}
