//! Gauss–Legendre rules and the panel-doubling integrator behind every Fourier
//! integral in the crate.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Arc<(Vec<f64>, Vec<f64>)> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<(Vec<f64>, Vec<f64>)>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("quadrature cache poisoned");
    guard.entry(n).or_insert_with(|| Arc::new(legendre_rule(n))).clone()
}

fn legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_n(z), p0 = P_{n-1}(z)
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Composite rule: `panels` equal panels of `n` Gauss–Legendre nodes each.
pub fn composite<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64, panels: usize, n: usize) -> Complex64 {
    let rule = gauss_legendre(n);
    let (xs, ws) = (&rule.0, &rule.1);
    let h = (b - a) / panels as f64;
    let mut total = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let lo = a + h * p as f64;
        let mid = lo + 0.5 * h;
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, w) in xs.iter().zip(ws) {
            acc += *w * f(mid + 0.5 * h * x);
        }
        total += acc * (0.5 * h);
    }
    total
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: Complex64,
    /// `|I(2P) - I(P)|`, an upper estimate of the error of the coarser value.
    pub error: f64,
    pub panels: usize,
}

/// Doubles the panel count from `initial_panels` until two successive composite
/// values agree to `max(abs_tol, rel_tol·|I|)`. Exceeding `max_panels` is a numeric
/// error carrying the last value.
pub fn integrate_doubling<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    n: usize,
    initial_panels: usize,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<Integral> {
    let mut panels = initial_panels.max(1);
    let mut prev = composite(f, a, b, panels, n);
    loop {
        let next_panels = panels * 2;
        if next_panels > max_panels {
            return Err(Error::numeric_with(
                format!("quadrature on [{a}, {b}] did not converge within {max_panels} panels"),
                Some(prev.re),
                vec![format!("panels={panels} value={prev}")],
            ));
        }
        let next = composite(f, a, b, next_panels, n);
        let err = (next - prev).norm();
        if !next.re.is_finite() || !next.im.is_finite() {
            return Err(Error::numeric(format!("non-finite integrand on [{a}, {b}]")));
        }
        if err <= abs_tol.max(rel_tol * next.norm()) {
            return Ok(Integral {
                value: next,
                error: err,
                panels: next_panels,
            });
        }
        panels = next_panels;
        prev = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        for n in [1, 2, 5, 16, 64, 128] {
            let r = gauss_legendre(n);
            assert!((r.1.iter().sum::<f64>() - 2.0).abs() < 1e-13, "n={n}");
            // x^(2n-2) integrates to 2/(2n-1)
            let k = 2 * n as i32 - 2;
            let v: f64 = r.0.iter().zip(&r.1).map(|(x, w)| w * x.powi(k)).sum();
            assert!((v - 2.0 / (k as f64 + 1.0)).abs() < 1e-12, "n={n}: {v}");
        }
    }

    #[test]
    fn nodes_sorted_and_symmetric() {
        let r = gauss_legendre(33);
        for i in 0..33 {
            assert!((r.0[i] + r.0[32 - i]).abs() < 1e-15);
            if i > 0 {
                assert!(r.0[i] > r.0[i - 1]);
            }
        }
    }

    #[test]
    fn doubling_converges_on_oscillatory_integrand() {
        let x = 300.0;
        let f = |t: f64| Complex64::new((x * t).cos() * (-t).exp(), 0.0);
        let res = integrate_doubling(&f, 0.0, PI, 32, 4, 1e-13, 1e-13, 1 << 14).unwrap();
        // ∫₀^π e^{-t} cos(xt) dt = (1 - e^{-π} cos(xπ)) / (1 + x²)  (xπ is a multiple of 2π here)
        let exact = (1.0 - (-PI).exp() * (x * PI).cos()) / (1.0 + x * x);
        assert!((res.value.re - exact).abs() < 1e-13);
    }

    #[test]
    fn doubling_reports_budget_failure() {
        // ∫₀¹ dt/t diverges, so successive values never settle
        let f = |t: f64| Complex64::new(1.0 / t, 0.0);
        match integrate_doubling(&f, 0.0, 1.0, 16, 1, 1e-10, 1e-10, 64) {
            Err(Error::Numeric { partial, .. }) => assert!(partial.is_some()),
            other => panic!("expected numeric error, got {other:?}"),
        }
    }
}
