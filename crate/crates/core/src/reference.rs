//! Closed-form reference values used as independent oracles by the test
//! suite. Nothing in the simulation path calls into this module.

use num_complex::Complex64 as C64;

/// Wigner function of the Fock state |n⟩:
/// W(α) = (2/π)(−1)ⁿ e^{−2|α|²} L_n(4|α|²).
pub fn wigner_fock(n: usize, alpha: C64) -> f64 {
    let x = 4.0 * alpha.norm_sqr();
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    2.0 / std::f64::consts::PI * sign * (-x / 2.0).exp() * laguerre(n, x)
}

/// Wigner function of the coherent state |β⟩: W(α) = (2/π) e^{−2|α−β|²}.
pub fn wigner_coherent(beta: C64, alpha: C64) -> f64 {
    2.0 / std::f64::consts::PI * (-2.0 * (alpha - beta).norm_sqr()).exp()
}

/// Wigner function of a normalized Fock superposition Σ c_n |n⟩, from the
/// cross terms W_{mn}(α) of the number-basis expansion.
pub fn wigner_fock_superposition(coeffs: &[(usize, C64)], alpha: C64) -> f64 {
    let mut w = 0.0;
    for &(m, cm) in coeffs {
        for &(n, cn) in coeffs {
            w += (cm * cn.conj() * wigner_cross(m, n, alpha)).re;
        }
    }
    w
}

/// Cross-Wigner W_{mn}(α) = (2/π)⟨displaced parity cross term⟩ for |m⟩⟨n|.
/// For m ≥ n: (2/π)(−1)ⁿ √(n!/m!) (2α)^{m−n} e^{−2|α|²} L_n^{m−n}(4|α|²),
/// with the α-conjugation convention fixed by W(α) = ⟨D(α)ΠD†(α)⟩ ... chosen
/// so the diagonal reduces to `wigner_fock` and Hermitian pairs conjugate.
fn wigner_cross(m: usize, n: usize, alpha: C64) -> C64 {
    if m < n {
        return wigner_cross(n, m, alpha).conj();
    }
    let k = m - n;
    let x = 4.0 * alpha.norm_sqr();
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let ratio = (factorial(n) / factorial(m)).sqrt();
    let pow = (alpha.conj() * 2.0).powu(k as u32);
    2.0 / std::f64::consts::PI
        * sign
        * ratio
        * pow
        * C64::new((-x / 2.0).exp() * laguerre_assoc(n, k as i32, x), 0.0)
}

/// Laguerre polynomial L_n(x) by the three-term recurrence.
pub fn laguerre(n: usize, x: f64) -> f64 {
    laguerre_assoc(n, 0, x)
}

/// Associated Laguerre L_n^k(x).
pub fn laguerre_assoc(n: usize, k: i32, x: f64) -> f64 {
    let kf = k as f64;
    let mut lm1 = 1.0; // L_0
    if n == 0 {
        return lm1;
    }
    let mut l = 1.0 + kf - x; // L_1
    for j in 2..=n {
        let jf = j as f64;
        let next = ((2.0 * jf - 1.0 + kf - x) * l - (jf - 1.0 + kf) * lm1) / jf;
        lm1 = l;
        l = next;
    }
    l
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Poisson probability mass function over 0..=n_max (not renormalized).
pub fn poisson_pmf(mean: f64, n_max: usize) -> Vec<f64> {
    let mut p = vec![0.0; n_max + 1];
    let mut term = (-mean).exp();
    for (n, slot) in p.iter_mut().enumerate() {
        if n > 0 {
            term *= mean / n as f64;
        }
        *slot = term;
    }
    p
}

/// Truncated thermal (geometric) distribution with mean occupation n̄,
/// normalized over 0..=n_max.
pub fn thermal_pmf(n_bar: f64, n_max: usize) -> Vec<f64> {
    let q = n_bar / (1.0 + n_bar);
    let mut p: Vec<f64> = (0..=n_max).map(|n| q.powi(n as i32)).collect();
    let norm: f64 = p.iter().sum();
    for v in &mut p {
        *v /= norm;
    }
    p
}

/// Total-variation distance ½·Σ|p − q| between distributions padded to the
/// longer length.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    let len = p.len().max(q.len());
    let get = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    0.5 * (0..len).map(|i| (get(p, i) - get(q, i)).abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ground_state_wigner_peak() {
        let w0 = wigner_fock(0, C64::new(0.0, 0.0));
        assert_relative_eq!(w0, 2.0 / std::f64::consts::PI, epsilon = 1e-14);
    }

    #[test]
    fn fock_one_wigner_negative_at_origin() {
        let w = wigner_fock(1, C64::new(0.0, 0.0));
        assert_relative_eq!(w, -2.0 / std::f64::consts::PI, epsilon = 1e-14);
    }

    #[test]
    fn superposition_reduces_to_mixture_plus_cross() {
        // At α = 0 the cross terms of |1⟩,|3⟩ vanish (k ≠ 0 ⇒ α^k = 0) and
        // both parities are odd.
        let c = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let w = wigner_fock_superposition(&[(1, c), (3, c)], C64::new(0.0, 0.0));
        assert_relative_eq!(w, -2.0 / std::f64::consts::PI, epsilon = 1e-12);
    }

    #[test]
    fn laguerre_values() {
        assert_relative_eq!(laguerre(2, 1.0), 1.0 - 2.0 + 0.5, epsilon = 1e-14);
        assert_relative_eq!(laguerre_assoc(1, 2, 0.5), 3.0 - 0.5, epsilon = 1e-14);
    }

    #[test]
    fn poisson_and_tv() {
        let p = poisson_pmf(2.0, 20);
        let total: f64 = p.iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert_relative_eq!(p[0], (-2.0f64).exp(), epsilon = 1e-14);
        assert_eq!(total_variation(&p, &p), 0.0);
    }

    #[test]
    fn thermal_mean() {
        let p = thermal_pmf(2.0e-6, 15);
        let mean: f64 = p.iter().enumerate().map(|(n, v)| n as f64 * v).sum();
        assert!((mean - 2.0e-6).abs() < 1e-9);
    }
}
