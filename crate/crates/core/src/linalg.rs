//! Dense complex linear algebra for small matrices (dimension ≤ ~100).
//!
//! Everything here is sized for the truncated Fock ⊗ two-level space, where
//! exact dense methods are cheap. No external LAPACK dependency.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

/// Conjugate transpose.
pub fn dagger(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|z| z.conj())
}

/// Matrix product, written out so the inner loop stays allocation-free.
pub fn matmul(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let n = a.nrows();
    let k = a.ncols();
    assert_eq!(k, b.nrows(), "matmul dimension mismatch");
    let m = b.ncols();
    let mut out = Array2::<C64>::zeros((n, m));
    for i in 0..n {
        for p in 0..k {
            let aip = a[(i, p)];
            if aip == C64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..m {
                out[(i, j)] += aip * b[(p, j)];
            }
        }
    }
    out
}

/// Commutator [a, b] = ab − ba.
pub fn commutator(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    &matmul(a, b) - &matmul(b, a)
}

/// Trace.
pub fn trace(m: &Array2<C64>) -> C64 {
    m.diag().iter().sum()
}

/// Largest absolute entry.
pub fn max_abs(m: &Array2<C64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Maximum column sum of absolute values (induced 1-norm).
pub fn norm_1(m: &Array2<C64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        let s: f64 = m.column(j).iter().map(|z| z.norm()).sum();
        best = best.max(s);
    }
    best
}

/// Frobenius norm of a − b.
pub fn frobenius_distance(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Identity matrix.
pub fn identity(dim: usize) -> Array2<C64> {
    Array2::eye(dim)
}

/// Max deviation of m from Hermiticity, max |m − m†|.
pub fn hermiticity_defect(m: &Array2<C64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Max deviation of u from unitarity, max |u·u† − 1|.
pub fn unitarity_defect(u: &Array2<C64>) -> f64 {
    let uu = matmul(u, &dagger(u));
    let mut worst = 0.0f64;
    for i in 0..uu.nrows() {
        for j in 0..uu.ncols() {
            let target = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            worst = worst.max((uu[(i, j)] - target).norm());
        }
    }
    worst
}

/// Matrix exponential by scaling and squaring with a Taylor kernel.
///
/// The argument is scaled so its 1-norm falls below 1/2, a 18-term Taylor
/// series is summed (remainder < 1e-19 at that norm), and the result is
/// squared back up. Accurate to ~1e-13 in operator norm for the
/// skew-Hermitian generators used here.
pub fn expm(a: &Array2<C64>) -> Array2<C64> {
    let dim = a.nrows();
    assert_eq!(dim, a.ncols(), "expm needs a square matrix");
    let norm = norm_1(a);
    let squarings = if norm <= 0.5 {
        0
    } else {
        (norm / 0.5).log2().ceil() as u32
    };
    let scale = C64::new(1.0 / (2.0f64.powi(squarings as i32)), 0.0);
    let b = a.mapv(|z| z * scale);

    // Horner evaluation of sum_{k=0}^{18} B^k / k!
    const TERMS: usize = 18;
    let mut result = identity(dim);
    for k in (1..=TERMS).rev() {
        result = &matmul(&b, &result) / C64::new(k as f64, 0.0) + &identity(dim);
    }
    for _ in 0..squarings {
        result = matmul(&result, &result);
    }
    result
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi sweeps.
///
/// Returns eigenvalues (ascending) and the unitary whose columns are the
/// matching eigenvectors: a = v · diag(λ) · v†.
pub fn eigh(a: &Array2<C64>) -> (Array1<f64>, Array2<C64>) {
    let dim = a.nrows();
    assert_eq!(dim, a.ncols(), "eigh needs a square matrix");
    let mut m = a.clone();
    let mut v = identity(dim);

    let off = |m: &Array2<C64>| -> f64 {
        let mut s = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                if i != j {
                    s += m[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let scale = max_abs(&m).max(1e-300);
    let tol = 1e-15 * scale * dim as f64;
    for _sweep in 0..100 {
        if off(&m) < tol {
            break;
        }
        for p in 0..dim {
            for q in (p + 1)..dim {
                let apq = m[(p, q)];
                if apq.norm() < tol / (dim as f64 * 10.0) {
                    continue;
                }
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                // Unitary 2x2 rotation zeroing the (p,q) element:
                // columns rotate by [[c, -s*], [s, c]] with s carrying the
                // phase of apq.
                let tau = (aqq - app) / (2.0 * apq.norm());
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s_mag = t * c;
                let phase = apq / apq.norm();
                let s = phase * s_mag;

                for k in 0..dim {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = mkp * c - mkq * s.conj();
                    m[(k, q)] = mkp * s + mkq * c;
                }
                for k in 0..dim {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = mpk * c - mqk * s;
                    m[(q, k)] = mpk * s.conj() + mqk * c;
                }
                for k in 0..dim {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c - vkq * s.conj();
                    v[(k, q)] = vkp * s + vkq * c;
                }
            }
        }
    }

    let mut pairs: Vec<(f64, usize)> =
        (0..dim).map(|i| (m[(i, i)].re, i)).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let eigvals = Array1::from_iter(pairs.iter().map(|&(lam, _)| lam));
    let mut eigvecs = Array2::<C64>::zeros((dim, dim));
    for (new_col, &(_, old_col)) in pairs.iter().enumerate() {
        for k in 0..dim {
            eigvecs[(k, new_col)] = v[(k, old_col)];
        }
    }
    (eigvals, eigvecs)
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(a: &Array2<C64>) -> Array1<f64> {
    eigh(a).0
}

/// Hermitian matrix square root, clamping tiny negative eigenvalues to zero.
pub fn sqrtm_psd(a: &Array2<C64>) -> Array2<C64> {
    let (vals, vecs) = eigh(a);
    let dim = a.nrows();
    let mut out = Array2::<C64>::zeros((dim, dim));
    for k in 0..dim {
        let lam = vals[k].max(0.0).sqrt();
        if lam == 0.0 {
            continue;
        }
        for i in 0..dim {
            for j in 0..dim {
                out[(i, j)] += vecs[(i, k)] * vecs[(j, k)].conj() * lam;
            }
        }
    }
    out
}

/// Uhlmann fidelity F(ρ, σ) = (tr √(√ρ σ √ρ))².
pub fn fidelity(rho: &Array2<C64>, sigma: &Array2<C64>) -> f64 {
    let s = sqrtm_psd(rho);
    let inner = matmul(&matmul(&s, sigma), &s);
    let vals = eigvalsh(&inner);
    let tr: f64 = vals.iter().map(|&l| l.max(0.0).sqrt()).sum();
    tr * tr
}
