//! Adaptive Dormand–Prince 5(4) on the vectorized density matrix.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use super::channels::ChannelSet;
use crate::hamiltonian::TimeDependentHamiltonian;
use crate::Error;

const STAGES: usize = 7;

const C: [f64; STAGES] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];

const A: [[f64; 6]; STAGES] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

/// 5th-order weights (row 7 of A: the method is FSAL).
const B: [f64; STAGES] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];

/// b − b̂, the embedded error weights.
const E: [f64; STAGES] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const MAX_STEPS: usize = 200_000_000;

struct Workspace<'a> {
    dim: usize,
    hamiltonian: Option<&'a dyn TimeDependentHamiltonian>,
    channels: &'a ChannelSet,
    h_buf: Array2<C64>,
    nonzeros: Vec<(usize, usize, C64)>,
}

impl<'a> Workspace<'a> {
    fn rhs(&mut self, t: f64, y: &[C64], out: &mut [C64]) {
        let d = self.dim;
        out.fill(C64::new(0.0, 0.0));

        if let Some(ham) = self.hamiltonian {
            ham.assemble_into(t, &mut self.h_buf);
            self.nonzeros.clear();
            for i in 0..d {
                for k in 0..d {
                    let v = self.h_buf[(i, k)];
                    if v != C64::new(0.0, 0.0) {
                        self.nonzeros.push((i, k, v));
                    }
                }
            }
            let minus_i = C64::new(0.0, -1.0);
            let plus_i = C64::new(0.0, 1.0);
            for &(i, k, hv) in &self.nonzeros {
                // −i (Hρ): out[i, :] += −i·H[i,k]·ρ[k, :]
                let f = minus_i * hv;
                let src = &y[k * d..(k + 1) * d];
                let dst = &mut out[i * d..(i + 1) * d];
                for j in 0..d {
                    dst[j] += f * src[j];
                }
                // +i (ρH): out[:, k] += +i·ρ[:, i]·H[i,k]
                let f2 = plus_i * hv;
                for r in 0..d {
                    out[r * d + k] += f2 * y[r * d + i];
                }
            }
        }

        if !self.channels.is_empty() {
            self.channels.add_dissipator(y, out);
        }
    }
}

#[allow(clippy::too_many_arguments)]
pub(super) fn integrate(
    rho0: &Array2<C64>,
    hamiltonian: Option<&dyn TimeDependentHamiltonian>,
    channels: &ChannelSet,
    t0: f64,
    t1: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_step: f64,
) -> Result<Array2<C64>, Error> {
    let dim = rho0.nrows();
    let n = dim * dim;
    let mut ws = Workspace {
        dim,
        hamiltonian,
        channels,
        h_buf: Array2::zeros((dim, dim)),
        nonzeros: Vec::with_capacity(6 * dim),
    };

    let mut y: Vec<C64> = rho0.iter().copied().collect();
    let mut k: Vec<Vec<C64>> = (0..STAGES).map(|_| vec![C64::new(0.0, 0.0); n]).collect();
    let mut y_stage = vec![C64::new(0.0, 0.0); n];
    let mut y_new = vec![C64::new(0.0, 0.0); n];

    let mut t = t0;
    ws.rhs(t, &y, &mut k[0]);

    // Initial step from the RHS magnitude.
    let y_norm = rms(&y);
    let f_norm = rms(&k[0]).max(1e-300);
    let mut h = (0.01 * (y_norm + abs_tol) / f_norm)
        .min(t1 - t0)
        .min(max_step);

    let mut steps = 0usize;
    while t < t1 {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(Error::StepSizeUnderflow { t });
        }
        if h < 16.0 * f64::EPSILON * t.abs().max(1.0e-12) {
            return Err(Error::StepSizeUnderflow { t });
        }
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }

        for s in 1..STAGES {
            for i in 0..n {
                let mut acc = C64::new(0.0, 0.0);
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = A[s][j];
                    if a != 0.0 {
                        acc += kj[i] * a;
                    }
                }
                y_stage[i] = y[i] + acc * h;
            }
            let (head, tail) = k.split_at_mut(s);
            let _ = head;
            ws.rhs(t + C[s] * h, &y_stage, &mut tail[0]);
        }

        // 5th-order solution and embedded error.
        let mut err_sq = 0.0f64;
        for i in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            let mut errc = C64::new(0.0, 0.0);
            for (j, kj) in k.iter().enumerate() {
                if B[j] != 0.0 {
                    acc += kj[i] * B[j];
                }
                if E[j] != 0.0 {
                    errc += kj[i] * E[j];
                }
            }
            y_new[i] = y[i] + acc * h;
            let sc = abs_tol + rel_tol * y[i].norm().max(y_new[i].norm());
            let e = errc.norm() * h;
            err_sq += (e / sc) * (e / sc);
        }
        let err = (err_sq / n as f64).sqrt();

        if err <= 1.0 {
            t = if last { t1 } else { t + h };
            std::mem::swap(&mut y, &mut y_new);
            // FSAL: stage 7 of the accepted step is stage 1 of the next.
            k.swap(0, 6);
            if !last {
                let factor = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                h = (h * factor).min(max_step).min(t1 - t);
            }
        } else {
            let factor = (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            h *= factor;
            // Recompute k1 is not needed: y unchanged, k[0] still valid.
        }
    }

    let mut out = Array2::zeros((dim, dim));
    for i in 0..dim {
        for j in 0..dim {
            out[(i, j)] = y[i * dim + j];
        }
    }
    Ok(out)
}

fn rms(v: &[C64]) -> f64 {
    (v.iter().map(|z| z.norm_sqr()).sum::<f64>() / v.len() as f64).sqrt()
}
