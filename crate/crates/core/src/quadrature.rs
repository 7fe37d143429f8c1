//! Gauss-Legendre and Simpson quadrature.

use std::sync::OnceLock;

use crate::C64;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let n = order as f64;
    for i in 0..order.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(order, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(order, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        weights[i] = w;
        weights[order - 1 - i] = w;
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

/// Cached 16-point rule.
pub fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

/// Composite 16-point Gauss-Legendre rule for a complex integrand on `[a, b]`.
pub fn composite_gl<F: Fn(f64) -> C64>(f: F, a: f64, b: f64, panels: usize) -> C64 {
    let (x, w) = gl16();
    let panels = panels.max(1);
    let width = (b - a) / panels as f64;
    let mut total = C64::new(0.0, 0.0);
    for p in 0..panels {
        let lo = a + width * p as f64;
        let mid = lo + 0.5 * width;
        let mut s = C64::new(0.0, 0.0);
        for (xi, wi) in x.iter().zip(w) {
            s += f(mid + 0.5 * width * xi) * *wi;
        }
        total += s * (0.5 * width);
    }
    total
}

/// Real-valued version of [`composite_gl`].
pub fn composite_gl_real<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    composite_gl(|x| C64::new(f(x), 0.0), a, b, panels).re
}

/// Composite Simpson rule on uniformly spaced samples (odd count, spacing `h`).
pub fn simpson(values: &[C64], h: f64) -> C64 {
    let n = values.len();
    assert!(
        n >= 3 && n % 2 == 1,
        "Simpson needs an odd number of samples >= 3"
    );
    let mut s = values[0] + values[n - 1];
    for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
        s += *v * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * (h / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(16);
        for deg in 0..32 {
            let s: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg)).sum();
            let exact = if deg % 2 == 1 {
                0.0
            } else {
                2.0 / (deg as f64 + 1.0)
            };
            assert!((s - exact).abs() < 1e-14, "degree {deg}: {s} vs {exact}");
        }
    }

    #[test]
    fn odd_order_has_zero_node() {
        let (x, w) = gauss_legendre(5);
        assert!(x[2].abs() < 1e-15);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn oscillatory_integral() {
        let mu = 40.0;
        let v = composite_gl(|t| C64::new(0.0, 2.0 * mu * t).exp(), 0.0, 1.0, 40);
        let exact = (C64::new(0.0, 2.0 * mu).exp() - 1.0) / C64::new(0.0, 2.0 * mu);
        assert!((v - exact).norm() < 1e-14);
    }

    #[test]
    fn simpson_on_cubic_is_exact() {
        let n = 11;
        let h = 1.0 / (n - 1) as f64;
        let vals: Vec<C64> = (0..n)
            .map(|i| {
                let x = i as f64 * h;
                C64::new(x * x * x, 0.0)
            })
            .collect();
        assert!((simpson(&vals, h).re - 0.25).abs() < 1e-15);
    }
}
