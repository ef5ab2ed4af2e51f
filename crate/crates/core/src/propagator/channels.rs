//! Structured Lindblad-channel application.
//!
//! Every jump operator used here (ĉ, ĉ†, σ_μν, σ_μμ) is a monomial matrix:
//! at most one nonzero per column. A channel is stored as the map
//! i → (target row, weight), which makes L ρ L† a scatter and L†L diagonal,
//! so one dissipator application is O(d²) per channel with no matrix
//! products.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::dissipation::LindbladChannel;
use crate::Error;

pub(crate) struct MonomialChannel {
    /// target[i] = row index of the single nonzero in column i.
    target: Vec<usize>,
    /// weight[i] = that entry (already carrying √Γ); zero for empty columns.
    weight: Vec<C64>,
}

pub(crate) struct ChannelSet {
    pub dim: usize,
    channels: Vec<MonomialChannel>,
    /// decay[i] = Σ_ch |w_i|², the diagonal of Σ L†L.
    decay: Vec<f64>,
}

impl ChannelSet {
    pub fn build(channels: &[LindbladChannel], dim: usize) -> Result<Self, Error> {
        let mut parsed = Vec::with_capacity(channels.len());
        let mut decay = vec![0.0; dim];
        for ch in channels {
            if ch.operator.nrows() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: ch.operator.nrows(),
                });
            }
            let mono = monomial_of(&ch.operator)?;
            for i in 0..dim {
                decay[i] += mono.weight[i].norm_sqr();
            }
            parsed.push(mono);
        }
        Ok(Self {
            dim,
            channels: parsed,
            decay,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    /// out += Σ_ch (L ρ L† − ½{L†L, ρ}), flat row-major d×d slices.
    pub fn add_dissipator(&self, rho: &[C64], out: &mut [C64]) {
        let d = self.dim;
        // Anticommutator part, elementwise.
        for i in 0..d {
            let wi = self.decay[i];
            for j in 0..d {
                let f = 0.5 * (wi + self.decay[j]);
                if f != 0.0 {
                    out[i * d + j] -= rho[i * d + j] * f;
                }
            }
        }
        // Jump parts, scatters.
        for ch in &self.channels {
            for i in 0..d {
                let wi = ch.weight[i];
                if wi == C64::new(0.0, 0.0) {
                    continue;
                }
                let ti = ch.target[i];
                for j in 0..d {
                    let wj = ch.weight[j];
                    if wj == C64::new(0.0, 0.0) {
                        continue;
                    }
                    out[ti * d + ch.target[j]] += wi * wj.conj() * rho[i * d + j];
                }
            }
        }
    }

    /// Dissipator alone into a scratch buffer: out = D[ρ].
    pub fn dissipator_into(&self, rho: &[C64], out: &mut [C64]) {
        out.fill(C64::new(0.0, 0.0));
        self.add_dissipator(rho, out);
    }
}

fn monomial_of(op: &Array2<C64>) -> Result<MonomialChannel, Error> {
    let d = op.nrows();
    let mut target = vec![0usize; d];
    let mut weight = vec![C64::new(0.0, 0.0); d];
    for col in 0..d {
        let mut found = None;
        for row in 0..d {
            let v = op[(row, col)];
            if v != C64::new(0.0, 0.0) {
                if found.is_some() {
                    return Err(Error::InvalidParameter(
                        "jump operator is not monomial (multiple nonzeros in a column)".into(),
                    ));
                }
                found = Some((row, v));
            }
        }
        if let Some((row, v)) = found {
            target[col] = row;
            weight[col] = v;
        }
    }
    Ok(MonomialChannel { target, weight })
}
