//! Truncated-Fock-space and two-level operator algebra.
//!
//! The composite space is ordered oscillator ⊗ atom: basis index
//! `2n + s` holds phonon number `n` and atomic level `s` (0 = a, 1 = b).

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::linalg;
use crate::Error;

/// Population above which the top two Fock levels are considered leaking.
pub const TRUNCATION_GUARD: f64 = 1e-4;

/// Atomic level labels for the two Rydberg states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    A,
    B,
}

impl Level {
    pub fn index(self) -> usize {
        match self {
            Level::A => 0,
            Level::B => 1,
        }
    }
}

/// Truncated harmonic-oscillator space holding Fock states |0⟩..|n_max⟩.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockSpace {
    n_max: usize,
}

impl FockSpace {
    pub fn new(n_max: usize) -> Result<Self, Error> {
        if n_max < 1 {
            return Err(Error::InvalidParameter(format!(
                "Fock cutoff must be at least 1, got {n_max}"
            )));
        }
        Ok(Self { n_max })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.n_max + 1
    }

    /// Lowering operator ⟨n−1|ĉ|n⟩ = √n.
    pub fn lowering(&self) -> Array2<C64> {
        let d = self.dim();
        let mut c = Array2::zeros((d, d));
        for n in 1..d {
            c[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
        }
        c
    }

    /// Raising operator, conjugate transpose of the lowering operator.
    pub fn raising(&self) -> Array2<C64> {
        linalg::dagger(&self.lowering())
    }

    /// Number operator, diagonal (0, 1, …, n_max).
    pub fn number(&self) -> Array2<C64> {
        let d = self.dim();
        let mut n_op = Array2::zeros((d, d));
        for n in 0..d {
            n_op[(n, n)] = C64::new(n as f64, 0.0);
        }
        n_op
    }

    /// Phonon parity, diagonal (−1)ⁿ.
    pub fn parity(&self) -> Array2<C64> {
        let d = self.dim();
        let mut p = Array2::zeros((d, d));
        for n in 0..d {
            p[(n, n)] = C64::new(if n % 2 == 0 { 1.0 } else { -1.0 }, 0.0);
        }
        p
    }

    /// Phase rotation exp(iφ·n̂), diagonal.
    pub fn number_phase(&self, phi: f64) -> Array2<C64> {
        let d = self.dim();
        let mut p = Array2::zeros((d, d));
        for n in 0..d {
            p[(n, n)] = C64::from_polar(1.0, phi * n as f64);
        }
        p
    }

    /// Displacement operator D(α) = exp(α ĉ† − α* ĉ) on the truncated space.
    ///
    /// The generator is exactly skew-Hermitian, so the result is unitary on
    /// the truncated space regardless of |α|; fidelity to the untruncated
    /// displacement degrades once the displaced vacuum leaks past n_max.
    pub fn displacement(&self, alpha: C64) -> Displacement {
        let d = self.dim();
        let mut gen = Array2::<C64>::zeros((d, d));
        for n in 1..d {
            let root = (n as f64).sqrt();
            gen[(n, n - 1)] = alpha * root; // α c†
            gen[(n - 1, n)] = -alpha.conj() * root; // −α* c
        }
        let matrix = linalg::expm(&gen);
        Displacement {
            matrix,
            vacuum_leakage: poisson_tail(alpha.norm_sqr(), self.n_max),
        }
    }

    /// Normalized coherent-state vector on the truncated space.
    pub fn coherent_vector(&self, alpha: C64) -> Vec<C64> {
        let d = self.dim();
        let mut v = vec![C64::new(0.0, 0.0); d];
        // c_n = e^{−|α|²/2} αⁿ/√n!, built recursively and renormalized.
        let mut amp = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
        for (n, slot) in v.iter_mut().enumerate() {
            if n > 0 {
                amp *= alpha / C64::new((n as f64).sqrt(), 0.0);
            }
            *slot = amp;
        }
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in &mut v {
            *z /= norm;
        }
        v
    }
}

/// Displacement operator plus the analytic estimate of how much population
/// D(α)|0⟩ would place above the truncation.
#[derive(Debug, Clone)]
pub struct Displacement {
    pub matrix: Array2<C64>,
    pub vacuum_leakage: f64,
}

impl Displacement {
    /// True when the displaced vacuum leaks more than `tol` past n_max.
    pub fn is_leaky(&self, tol: f64) -> bool {
        self.vacuum_leakage > tol
    }
}

/// Poisson tail P(N > n_max) for mean `mean`, the population a displaced
/// vacuum of |α|² = mean carries above the truncation.
pub fn poisson_tail(mean: f64, n_max: usize) -> f64 {
    if mean == 0.0 {
        return 0.0;
    }
    let mut term = (-mean).exp();
    let mut cdf = term;
    for n in 1..=n_max {
        term *= mean / n as f64;
        cdf += term;
    }
    (1.0 - cdf).max(0.0)
}

/// Oscillator ⊗ two-level composite space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompositeSpace {
    oscillator: FockSpace,
}

/// Which tensor factor an operator lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    Oscillator,
    Atom,
}

impl CompositeSpace {
    pub fn new(oscillator: FockSpace) -> Self {
        Self { oscillator }
    }

    pub fn oscillator(&self) -> FockSpace {
        self.oscillator
    }

    pub fn dim(&self) -> usize {
        2 * self.oscillator.dim()
    }

    /// Basis index of |n⟩ ⊗ |level⟩.
    pub fn index(&self, n: usize, level: Level) -> usize {
        2 * n + level.index()
    }

    /// Tensor-embed an operator acting on one factor, identity on the other.
    pub fn embed(&self, op: &Array2<C64>, subsystem: Subsystem) -> Result<Array2<C64>, Error> {
        let d_osc = self.oscillator.dim();
        let d = self.dim();
        match subsystem {
            Subsystem::Oscillator => {
                if op.nrows() != d_osc || op.ncols() != d_osc {
                    return Err(Error::DimensionMismatch {
                        expected: d_osc,
                        got: op.nrows(),
                    });
                }
                let mut out = Array2::zeros((d, d));
                for m in 0..d_osc {
                    for n in 0..d_osc {
                        let v = op[(m, n)];
                        if v != C64::new(0.0, 0.0) {
                            out[(2 * m, 2 * n)] = v;
                            out[(2 * m + 1, 2 * n + 1)] = v;
                        }
                    }
                }
                Ok(out)
            }
            Subsystem::Atom => {
                if op.nrows() != 2 || op.ncols() != 2 {
                    return Err(Error::DimensionMismatch {
                        expected: 2,
                        got: op.nrows(),
                    });
                }
                let mut out = Array2::zeros((d, d));
                for n in 0..d_osc {
                    for s in 0..2 {
                        for s2 in 0..2 {
                            let v = op[(s, s2)];
                            if v != C64::new(0.0, 0.0) {
                                out[(2 * n + s, 2 * n + s2)] = v;
                            }
                        }
                    }
                }
                Ok(out)
            }
        }
    }

    /// Atomic transition operator σ_{to,from} = |to⟩⟨from| on the composite space.
    pub fn sigma(&self, to: Level, from: Level) -> Array2<C64> {
        let mut at = Array2::zeros((2, 2));
        at[(to.index(), from.index())] = C64::new(1.0, 0.0);
        self.embed(&at, Subsystem::Atom).expect("2x2 always embeds")
    }
}

/// 2×2 atomic operator |to⟩⟨from| (not embedded).
pub fn atomic_sigma(to: Level, from: Level) -> Array2<C64> {
    let mut at = Array2::zeros((2, 2));
    at[(to.index(), from.index())] = C64::new(1.0, 0.0);
    at
}

/// Density matrix of the composite system.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    space: CompositeSpace,
    matrix: Array2<C64>,
}

pub const TRACE_TOL: f64 = 1e-8;
pub const HERMITICITY_TOL: f64 = 1e-10;
pub const EIGENVALUE_SLACK: f64 = 1e-8;

impl DensityMatrix {
    /// Wrap a matrix, checking trace and Hermiticity.
    pub fn new(space: CompositeSpace, matrix: Array2<C64>) -> Result<Self, Error> {
        if matrix.nrows() != space.dim() || matrix.ncols() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                got: matrix.nrows(),
            });
        }
        let dm = Self { space, matrix };
        dm.check_trace_hermiticity()?;
        Ok(dm)
    }

    /// Product state ϱ_osc ⊗ |level⟩⟨level|.
    pub fn from_oscillator(
        space: CompositeSpace,
        osc: &Array2<C64>,
        level: Level,
    ) -> Result<Self, Error> {
        let d_osc = space.oscillator().dim();
        if osc.nrows() != d_osc {
            return Err(Error::DimensionMismatch {
                expected: d_osc,
                got: osc.nrows(),
            });
        }
        let s = level.index();
        let mut m = Array2::zeros((space.dim(), space.dim()));
        for i in 0..d_osc {
            for j in 0..d_osc {
                m[(2 * i + s, 2 * j + s)] = osc[(i, j)];
            }
        }
        Self::new(space, m)
    }

    pub fn space(&self) -> CompositeSpace {
        self.space
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn matrix_mut(&mut self) -> &mut Array2<C64> {
        &mut self.matrix
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.matrix
    }

    pub fn trace(&self) -> C64 {
        linalg::trace(&self.matrix)
    }

    /// Reduced oscillator matrix, tracing out the atom.
    pub fn reduced_oscillator(&self) -> Array2<C64> {
        let d_osc = self.space.oscillator().dim();
        let mut out = Array2::zeros((d_osc, d_osc));
        for m in 0..d_osc {
            for n in 0..d_osc {
                out[(m, n)] = self.matrix[(2 * m, 2 * n)] + self.matrix[(2 * m + 1, 2 * n + 1)];
            }
        }
        out
    }

    /// Reduced atomic matrix, tracing out the oscillator.
    pub fn reduced_atom(&self) -> Array2<C64> {
        let d_osc = self.space.oscillator().dim();
        let mut out = Array2::zeros((2, 2));
        for s in 0..2 {
            for s2 in 0..2 {
                for n in 0..d_osc {
                    out[(s, s2)] += self.matrix[(2 * n + s, 2 * n + s2)];
                }
            }
        }
        out
    }

    /// Population of the atomic level.
    pub fn atom_population(&self, level: Level) -> f64 {
        let s = level.index();
        let d_osc = self.space.oscillator().dim();
        (0..d_osc).map(|n| self.matrix[(2 * n + s, 2 * n + s)].re).sum()
    }

    /// Diagonal of the reduced oscillator matrix (phonon populations).
    pub fn phonon_populations(&self) -> Vec<f64> {
        let d_osc = self.space.oscillator().dim();
        (0..d_osc)
            .map(|n| (self.matrix[(2 * n, 2 * n)] + self.matrix[(2 * n + 1, 2 * n + 1)]).re)
            .collect()
    }

    /// Mean phonon number.
    pub fn mean_phonon_number(&self) -> f64 {
        self.phonon_populations()
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }

    /// Population in the top two Fock levels, for the truncation guard.
    pub fn edge_population(&self) -> f64 {
        let pops = self.phonon_populations();
        let d = pops.len();
        pops[d - 1] + pops[d.saturating_sub(2)]
    }

    fn check_trace_hermiticity(&self) -> Result<(), Error> {
        let tr = self.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!(
                "density matrix trace {tr} deviates from 1"
            )));
        }
        let defect = linalg::hermiticity_defect(&self.matrix);
        if defect > HERMITICITY_TOL {
            return Err(Error::InvalidState(format!(
                "density matrix Hermiticity defect {defect:.3e}"
            )));
        }
        Ok(())
    }

    /// Full invariant check: trace, Hermiticity, spectrum ≥ −slack.
    pub fn validate(&self) -> Result<(), Error> {
        self.check_trace_hermiticity()?;
        let vals = linalg::eigvalsh(&self.matrix);
        if vals[0] < -EIGENVALUE_SLACK {
            return Err(Error::InvalidState(format!(
                "density matrix eigenvalue {:.3e} below -{EIGENVALUE_SLACK:.0e}",
                vals[0]
            )));
        }
        Ok(())
    }

    /// Restore exact Hermiticity after roundoff, ρ ← (ρ + ρ†)/2.
    pub fn symmetrize(&mut self) {
        let dag = linalg::dagger(&self.matrix);
        self.matrix = (&self.matrix + &dag).mapv(|z| z * C64::new(0.5, 0.0));
    }
}
