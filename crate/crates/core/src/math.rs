//! Small special-function helpers shared by the state constructors and the
//! quadrature code.

use std::f64::consts::PI;

/// `ln(n!)` for `n` in `0..len`, built by summation.
pub fn ln_factorials(len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len.max(1));
    out.push(0.0);
    for n in 1..len {
        let prev = out[n - 1];
        out.push(prev + (n as f64).ln());
    }
    out
}

/// Binomial coefficient as a float. Exact for the photon numbers used here.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Binomial probability `C(n,k) p^k (1-p)^(n-k)`, with `0^0 = 1`.
pub fn binomial_pmf(n: usize, k: usize, p: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    binomial(n, k) * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
}

/// Hermite functions `ψ_0(x) .. ψ_{len-1}(x)` for the convention `X = (a + a†)/√2`,
/// i.e. `ψ_0(x) = π^{-1/4} e^{-x²/2}`. Uses the normalized three-term
/// recurrence, which is stable for large `n`.
pub fn hermite_functions(x: f64, len: usize, out: &mut [f64]) {
    debug_assert!(out.len() >= len);
    if len == 0 {
        return;
    }
    out[0] = PI.powf(-0.25) * (-0.5 * x * x).exp();
    if len == 1 {
        return;
    }
    out[1] = std::f64::consts::SQRT_2 * x * out[0];
    for n in 1..len - 1 {
        let nf = n as f64;
        out[n + 1] = (2.0 / (nf + 1.0)).sqrt() * x * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
    }
}

/// Tabulates Hermite functions on a grid: row `j` holds `ψ_n(x_j)` for all `n`.
pub fn hermite_table(xs: &[f64], len: usize) -> Vec<Vec<f64>> {
    xs.iter()
        .map(|&x| {
            let mut row = vec![0.0; len];
            hermite_functions(x, len, &mut row);
            row
        })
        .collect()
}

/// Generalized Laguerre polynomials `L_n^{(alpha)}(z)` for `n` in `0..len`.
pub fn laguerre(alpha: f64, z: f64, len: usize, out: &mut [f64]) {
    if len == 0 {
        return;
    }
    out[0] = 1.0;
    if len == 1 {
        return;
    }
    out[1] = 1.0 + alpha - z;
    for n in 1..len - 1 {
        let nf = n as f64;
        out[n + 1] = ((2.0 * nf + 1.0 + alpha - z) * out[n] - (nf + alpha) * out[n - 1]) / (nf + 1.0);
    }
}

/// Solves `f(x) = 0` on `[lo, hi]` by bisection; `f(lo)` and `f(hi)` must bracket a root.
pub fn bisect(mut lo: f64, mut hi: f64, tol: f64, f: impl Fn(f64) -> f64) -> Option<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 || (hi - lo) < tol {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(3, 4), 0.0);
        assert_eq!(binomial(40, 20), 137846528820.0);
        assert!((binomial_pmf(1, 1, 0.002) - 0.002).abs() < 1e-15);
        assert_eq!(binomial_pmf(0, 0, 0.0), 1.0);
    }

    #[test]
    fn hermite_functions_are_orthonormal() {
        let n = 30;
        let dx = 0.01;
        let xs: Vec<f64> = (0..2001).map(|j| -10.0 + j as f64 * dx).collect();
        let table = hermite_table(&xs, n);
        for a in [0, 1, 7, 29] {
            for b in [0, 1, 7, 29] {
                let s: f64 = table.iter().map(|row| row[a] * row[b]).sum::<f64>() * dx;
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((s - want).abs() < 1e-10, "<{a}|{b}> = {s}");
            }
        }
    }

    #[test]
    fn laguerre_low_orders() {
        let mut out = [0.0; 3];
        laguerre(1.0, 0.5, 3, &mut out);
        // L_2^{(1)}(z) = (z² - 6z + 6)/2
        assert!((out[2] - (0.25 - 3.0 + 6.0) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(0.0, 2.0, 1e-14, |x| x * x - 2.0).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
        assert!(bisect(2.0, 3.0, 1e-9, |x| x * x - 2.0).is_none());
    }
}
