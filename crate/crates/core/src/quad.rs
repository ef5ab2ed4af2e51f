//! Adaptive Simpson quadrature for smooth real and complex integrands.

use num_complex::Complex64 as C64;

/// Integrate a real function over [a, b] to the given relative tolerance.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    let c = 0.5 * (a + b);
    let fa = f(a);
    let fb = f(b);
    let fc = f(c);
    let whole = simpson(a, b, fa, fc, fb);
    // Scale for the relative tolerance; falls back to an absolute floor for
    // integrals that are themselves near zero.
    let scale = whole.abs().max(1e-300);
    adaptive(&f, a, b, fa, fc, fb, whole, rel_tol * scale, 50)
}

/// Integrate a complex function over [a, b] (both parts to rel_tol).
pub fn integrate_complex<F: Fn(f64) -> C64>(f: F, a: f64, b: f64, rel_tol: f64) -> C64 {
    let re = integrate(|t| f(t).re, a, b, rel_tol);
    let im = integrate(|t| f(t).im, a, b, rel_tol);
    C64::new(re, im)
}

fn simpson(a: f64, b: f64, fa: f64, fc: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fc + fb)
}

fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fc: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let c = 0.5 * (a + b);
    let d = 0.5 * (a + c);
    let e = 0.5 * (c + b);
    let fd = f(d);
    let fe = f(e);
    let left = simpson(a, c, fa, fd, fc);
    let right = simpson(c, b, fc, fe, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive(f, a, c, fa, fd, fc, left, 0.5 * tol, depth - 1)
        + adaptive(f, c, b, fc, fe, fb, right, 0.5 * tol, depth - 1)
}
