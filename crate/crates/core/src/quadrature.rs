//! One-dimensional quadrature rules.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
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
        dp = if d != 0.0 { d } else { dp };
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
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    x.iter().zip(&w).map(|(xi, wi)| (mid + half * xi, half * wi)).collect()
}

/// Composite 10-point Gauss-Legendre integral over `panels` equal panels.
pub fn integrate_gl(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let rule = gauss_legendre(10);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + h * p as f64;
        let mid = lo + 0.5 * h;
        for (x, w) in rule.0.iter().zip(&rule.1) {
            total += 0.5 * h * w * f(mid + 0.5 * h * x);
        }
    }
    total
}

/// Equal-weight rule on a full period `[0, 2π)`; spectrally accurate for
/// smooth periodic integrands.
pub fn periodic_rule(n: usize) -> Vec<(f64, f64)> {
    let w = 2.0 * PI / n as f64;
    (0..n).map(|i| ((i as f64 + 0.5) * w, w)).collect()
}

/// Clenshaw-Curtis rule with `n + 1` nodes `cos(kπ/n)` on `[-1, 1]`
/// (`n = 1` is the trapezoid rule). For even `n` the rule for `n/2` uses
/// the even-indexed nodes.
pub fn clenshaw_curtis(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Clenshaw-Curtis rule needs n >= 1");
    let nf = n as f64;
    let mut nodes = Vec::with_capacity(n + 1);
    let mut weights = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let theta = k as f64 * PI / nf;
        let mut s = 0.0;
        for j in 1..=n / 2 {
            let b = if j == n / 2 { 1.0 } else { 2.0 };
            s += b / (4.0 * (j * j) as f64 - 1.0) * (2.0 * j as f64 * theta).cos();
        }
        let c = if k == 0 || k == n { 1.0 } else { 2.0 };
        nodes.push(theta.cos());
        weights.push(c / nf * (1.0 - s));
    }
    (nodes, weights)
}

/// Clenshaw-Curtis rule mapped to `[a, b]`.
pub fn clenshaw_curtis_on(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = clenshaw_curtis(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    x.iter().zip(&w).map(|(xi, wi)| (mid + half * xi, half * wi)).collect()
}
