//! Wigner-function tomography: state preparation, the
//! displace-collapse-histogram protocol, and grid assembly.
//!
//! A pixel at complex α is measured by displacing the prepared state by −α
//! with a driven-atom sequence, collapsing with a K-atom QND sequence, and
//! histogramming the collapsed Fock outcomes over N_s samples;
//! W(α) = (2/π)Σ(−1)ⁿ p̃_n. Exact mode replaces sampling with the diagonal
//! of the ideally displaced state and serves as the protocol's oracle.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rayon::ThreadPool;

use crate::control::{run_displacement_sequence, DisplacementPlan};
use crate::exec;
use crate::hilbert::{DensityMatrix, FockSpace, Level};
use crate::linalg;
use crate::ramsey::QndEngine;
use crate::seeding;
use crate::Error;

/// Reproducible initial oscillator states.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialStateSpec {
    Fock(usize),
    Coherent(C64),
    /// Complex weights over Fock states; normalized on preparation.
    Superposition(Vec<(usize, C64)>),
    /// Thermal state with mean occupation n̄.
    Thermal(f64),
}

/// Build the oscillator density matrix for a state spec.
pub fn prepare_initial_state(
    spec: &InitialStateSpec,
    fock: FockSpace,
) -> Result<Array2<C64>, Error> {
    let d = fock.dim();
    match spec {
        InitialStateSpec::Fock(n) => {
            if *n >= d {
                return Err(Error::InvalidParameter(format!(
                    "Fock index {n} outside the truncated space (n_max = {})",
                    fock.n_max()
                )));
            }
            let mut m = Array2::zeros((d, d));
            m[(*n, *n)] = C64::new(1.0, 0.0);
            Ok(m)
        }
        InitialStateSpec::Coherent(alpha) => {
            let v = fock.coherent_vector(*alpha);
            let m = outer(&v);
            guard_edge_population(&m, fock)?;
            Ok(m)
        }
        InitialStateSpec::Superposition(weights) => {
            let mut v = vec![C64::new(0.0, 0.0); d];
            for &(n, w) in weights {
                if n >= d {
                    return Err(Error::InvalidParameter(format!(
                        "Fock index {n} outside the truncated space"
                    )));
                }
                v[n] += w;
            }
            let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-12 {
                return Err(Error::InvalidParameter(
                    "superposition weights are not normalizable".into(),
                ));
            }
            for z in &mut v {
                *z /= norm;
            }
            Ok(outer(&v))
        }
        InitialStateSpec::Thermal(n_bar) => {
            if *n_bar < 0.0 {
                return Err(Error::InvalidParameter(
                    "thermal occupation must be nonnegative".into(),
                ));
            }
            let p = crate::reference::thermal_pmf(*n_bar, fock.n_max());
            let mut m = Array2::zeros((d, d));
            for (n, &pn) in p.iter().enumerate() {
                m[(n, n)] = C64::new(pn, 0.0);
            }
            guard_edge_population(&m, fock)?;
            Ok(m)
        }
    }
}

fn outer(v: &[C64]) -> Array2<C64> {
    let d = v.len();
    let mut m = Array2::zeros((d, d));
    for i in 0..d {
        for j in 0..d {
            m[(i, j)] = v[i] * v[j].conj();
        }
    }
    m
}

fn guard_edge_population(m: &Array2<C64>, fock: FockSpace) -> Result<(), Error> {
    let d = fock.dim();
    let edge = m[(d - 1, d - 1)].re + if d >= 2 { m[(d - 2, d - 2)].re } else { 0.0 };
    if edge > crate::hilbert::TRUNCATION_GUARD {
        return Err(Error::InvalidState(format!(
            "state places {edge:.2e} population in the top two Fock levels; \
             raise the Fock cutoff"
        )));
    }
    Ok(())
}

/// W = (2/π) Σ_n (−1)ⁿ p̃_n for a normalized distribution.
pub fn wigner_point(p_tilde: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (n, &p) in p_tilde.iter().enumerate() {
        acc += if n % 2 == 0 { p } else { -p };
    }
    2.0 / std::f64::consts::PI * acc
}

/// Exact Wigner values of an oscillator state on arbitrary phase-space
/// points, by the displaced-parity sum.
pub fn wigner_of_state(osc: &Array2<C64>, fock: FockSpace, alphas: &[C64]) -> Vec<f64> {
    alphas
        .iter()
        .map(|&alpha| {
            let disp = fock.displacement(-alpha).matrix;
            let moved = linalg::matmul(&linalg::matmul(&disp, osc), &linalg::dagger(&disp));
            let p: Vec<f64> = (0..fock.dim()).map(|n| moved[(n, n)].re).collect();
            wigner_point(&p)
        })
        .collect()
}

/// Estimated phonon distribution at one displacement, with audit records.
#[derive(Debug, Clone)]
pub struct PhononDistribution {
    /// Normalized histogram over 0..=n_max (undetermined samples excluded).
    pub p: Vec<f64>,
    /// Per-sample collapsed outcome; `None` marks an undetermined Method-B
    /// inversion (a lost statistical sample).
    pub samples: Vec<Option<usize>>,
    pub undetermined: usize,
}

/// Fock readout used to build histograms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReadoutMethod {
    /// Argmax of the simulated oscillator diagonal (simulation-internal).
    A,
    /// Inversion of the measured b-fraction through the phase table.
    B,
}

/// The full protocol configuration on top of the QND engine.
#[derive(Debug, Clone)]
pub struct Protocol {
    pub engine: QndEngine,
    pub displacement_atoms: usize,
    pub measurement_atoms: usize,
    pub samples_per_pixel: usize,
    pub method: ReadoutMethod,
}

impl Protocol {
    fn one_sample(
        &self,
        initial: &Array2<C64>,
        plan: &DisplacementPlan,
        seed: u64,
    ) -> Result<Option<usize>, Error> {
        let mut rng = seeding::rng_from(seed);
        let space = self.engine.space();
        let rho = DensityMatrix::from_oscillator(space, initial, Level::A)?;
        let displaced = run_displacement_sequence(
            &rho,
            &self.engine.params,
            plan,
            self.engine.toggles,
            &self.engine.prop_cfg,
            &mut rng,
        )?;
        let (record, _) =
            self.engine
                .run_qnd_sequence(&displaced, self.measurement_atoms, seed, &mut rng)?;
        Ok(match self.method {
            ReadoutMethod::A => Some(record.fock_estimate_a),
            ReadoutMethod::B => record.fock_estimate_b,
        })
    }

    /// Sample the phonon distribution of the state displaced by −α.
    ///
    /// Runs `samples_per_pixel` independent [prepare → displace → collapse]
    /// rounds with per-sample seeds derived from (`master_seed`, `pixel`,
    /// sample index); results are independent of the worker pool.
    pub fn estimate_phonon_distribution(
        &self,
        spec: &InitialStateSpec,
        alpha: C64,
        master_seed: u64,
        pixel: u64,
        pool: Option<&ThreadPool>,
    ) -> Result<PhononDistribution, Error> {
        if self.samples_per_pixel == 0 {
            return Err(Error::InvalidParameter(
                "samples_per_pixel must be at least 1".into(),
            ));
        }
        let fock = self.engine.space().oscillator();
        let initial = prepare_initial_state(spec, fock)?;
        let plan = DisplacementPlan::solve_for_target(
            &self.engine.params,
            self.displacement_atoms,
            -alpha,
        )?;

        let units: Vec<u64> = (0..self.samples_per_pixel as u64).collect();
        let results = exec::run_units(units, pool, |&sample| {
            let seed = seeding::derive(master_seed, &[pixel, sample]);
            self.one_sample(&initial, &plan, seed)
        });

        let mut samples = Vec::with_capacity(results.len());
        for r in results {
            samples.push(r?);
        }
        distribution_from_samples(samples, fock.dim())
    }

    /// Run the full stochastic S×S grid.
    pub fn run_grid(
        &self,
        spec: &InitialStateSpec,
        size: usize,
        extent: f64,
        master_seed: u64,
        pool: Option<&ThreadPool>,
    ) -> Result<WignerGrid, Error> {
        let alphas = grid_alphas(size, extent);
        let fock = self.engine.space().oscillator();
        let initial = prepare_initial_state(spec, fock)?;

        // Solve every pixel's drive up front so an unreachable corner fails
        // before any sampling starts.
        let mut plans = Vec::with_capacity(alphas.len());
        for &alpha in &alphas {
            plans.push(DisplacementPlan::solve_for_target(
                &self.engine.params,
                self.displacement_atoms,
                -alpha,
            )?);
        }

        let n_s = self.samples_per_pixel;
        let units: Vec<(u64, u64)> = (0..alphas.len() as u64)
            .flat_map(|px| (0..n_s as u64).map(move |s| (px, s)))
            .collect();
        let results = exec::run_units(units, pool, |&(px, sample)| {
            let seed = seeding::derive(master_seed, &[px, sample]);
            self.one_sample(&initial, &plans[px as usize], seed)
        });

        let mut p_n = Vec::with_capacity(alphas.len());
        let mut w = Vec::with_capacity(alphas.len());
        let mut undetermined = Vec::with_capacity(alphas.len());
        for px in 0..alphas.len() {
            let mut samples = Vec::with_capacity(n_s);
            for s in 0..n_s {
                samples.push(results[px * n_s + s].as_ref().map_err(clone_err)?.to_owned());
            }
            let dist = distribution_from_samples(samples, fock.dim())?;
            w.push(wigner_point(&dist.p));
            undetermined.push(dist.undetermined);
            p_n.push(dist.p);
        }

        Ok(WignerGrid {
            size,
            extent,
            alphas,
            p_n,
            w,
            n_samples: n_s,
            undetermined,
            seeds: (0..(size * size) as u64)
                .map(|px| seeding::derive(master_seed, &[px, 0]))
                .collect(),
            exact: false,
        })
    }

    /// Exact-mode grid: per pixel, the diagonal of the ideally displaced
    /// state replaces the sampled histogram. No randomness, no decoherence.
    pub fn run_grid_exact(
        &self,
        spec: &InitialStateSpec,
        size: usize,
        extent: f64,
    ) -> Result<WignerGrid, Error> {
        let fock = self.engine.space().oscillator();
        let initial = prepare_initial_state(spec, fock)?;
        let alphas = grid_alphas(size, extent);
        let mut p_n = Vec::with_capacity(alphas.len());
        let mut w = Vec::with_capacity(alphas.len());
        for &alpha in &alphas {
            let disp = fock.displacement(-alpha).matrix;
            let moved = linalg::matmul(
                &linalg::matmul(&disp, &initial),
                &linalg::dagger(&disp),
            );
            let p: Vec<f64> = (0..fock.dim()).map(|n| moved[(n, n)].re).collect();
            w.push(wigner_point(&p));
            p_n.push(p);
        }
        Ok(WignerGrid {
            size,
            extent,
            alphas,
            p_n,
            w,
            n_samples: 0,
            undetermined: vec![0; size * size],
            seeds: vec![0; size * size],
            exact: true,
        })
    }
}

fn clone_err(e: &Error) -> Error {
    Error::InvalidState(format!("worker failure: {e}"))
}

fn distribution_from_samples(
    samples: Vec<Option<usize>>,
    dim: usize,
) -> Result<PhononDistribution, Error> {
    let mut counts = vec![0usize; dim];
    let mut undetermined = 0usize;
    for s in &samples {
        match s {
            Some(n) => counts[(*n).min(dim - 1)] += 1,
            None => undetermined += 1,
        }
    }
    let valid = samples.len() - undetermined;
    if valid == 0 {
        return Err(Error::InvalidState(
            "every sample was undetermined; no histogram".into(),
        ));
    }
    let p = counts
        .iter()
        .map(|&c| c as f64 / valid as f64)
        .collect();
    Ok(PhononDistribution {
        p,
        samples,
        undetermined,
    })
}

/// Row-major square grid of phase-space points over [−extent, extent]².
pub fn grid_alphas(size: usize, extent: f64) -> Vec<C64> {
    if size == 1 {
        return vec![C64::new(0.0, 0.0)];
    }
    let step = 2.0 * extent / (size - 1) as f64;
    let mut out = Vec::with_capacity(size * size);
    for iy in 0..size {
        let im = -extent + iy as f64 * step;
        for ix in 0..size {
            let re = -extent + ix as f64 * step;
            out.push(C64::new(re, im));
        }
    }
    out
}

/// Reconstructed Wigner grid with per-pixel provenance.
#[derive(Debug, Clone)]
pub struct WignerGrid {
    pub size: usize,
    pub extent: f64,
    /// Row-major pixel coordinates.
    pub alphas: Vec<C64>,
    /// Estimated phonon distribution per pixel.
    pub p_n: Vec<Vec<f64>>,
    /// W(α) per pixel.
    pub w: Vec<f64>,
    /// Samples per pixel (0 in exact mode).
    pub n_samples: usize,
    /// Undetermined (excluded) samples per pixel.
    pub undetermined: Vec<usize>,
    /// Per-pixel base seeds for replay.
    pub seeds: Vec<u64>,
    pub exact: bool,
}

impl WignerGrid {
    /// Value at the pixel closest to the given point.
    pub fn value_at(&self, alpha: C64) -> f64 {
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (i, &a) in self.alphas.iter().enumerate() {
            let d = (a - alpha).norm();
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        self.w[best]
    }

    /// Index of the mirror pixel under α → α*, when the grid is symmetric.
    pub fn conjugate_index(&self, index: usize) -> usize {
        let iy = index / self.size;
        let ix = index % self.size;
        (self.size - 1 - iy) * self.size + ix
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dissipation::ChannelToggles;
    use crate::model::table_s1_params;
    use crate::propagator::PropagationConfig;
    use crate::ramsey::QndEngine;
    use crate::reference;
    use approx::assert_relative_eq;

    fn frac(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn prepare_fock_and_superposition() {
        let fock = FockSpace::new(15).unwrap();
        let m = prepare_initial_state(&InitialStateSpec::Fock(0), fock).unwrap();
        assert_relative_eq!(m[(0, 0)].re, 1.0, epsilon = 1e-15);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let spec = InitialStateSpec::Superposition(vec![(1, frac(1.0)), (3, frac(1.0))]);
        let m = prepare_initial_state(&spec, fock).unwrap();
        assert_relative_eq!(m[(1, 1)].re, 0.5, epsilon = 1e-12);
        assert_relative_eq!(m[(3, 3)].re, 0.5, epsilon = 1e-12);
        assert_relative_eq!(m[(1, 3)].re, 0.5, epsilon = 1e-12);
        assert_relative_eq!(m[(0, 0)].re, 0.0, epsilon = 1e-15);
        let _ = s;
    }

    #[test]
    fn prepare_thermal_mean_occupation() {
        let fock = FockSpace::new(15).unwrap();
        let m = prepare_initial_state(&InitialStateSpec::Thermal(2.0e-6), fock).unwrap();
        let mean: f64 = (0..16).map(|n| n as f64 * m[(n, n)].re).sum();
        assert!((mean - 2.0e-6).abs() < 1e-9);
    }

    #[test]
    fn prepare_rejects_bad_specs() {
        let fock = FockSpace::new(3).unwrap();
        assert!(prepare_initial_state(&InitialStateSpec::Fock(9), fock).is_err());
        assert!(prepare_initial_state(
            &InitialStateSpec::Superposition(vec![(1, frac(0.0))]),
            fock
        )
        .is_err());
        // A coherent state far too large for the cutoff trips the edge guard.
        assert!(
            prepare_initial_state(&InitialStateSpec::Coherent(C64::new(3.0, 0.0)), fock).is_err()
        );
    }

    #[test]
    fn wigner_point_parities() {
        let two_over_pi = 2.0 / std::f64::consts::PI;
        let mut p = vec![0.0; 8];
        p[0] = 1.0;
        assert_relative_eq!(wigner_point(&p), two_over_pi, epsilon = 1e-15);
        p[0] = 0.0;
        p[1] = 1.0;
        assert_relative_eq!(wigner_point(&p), -two_over_pi, epsilon = 1e-15);
        p[1] = 0.5;
        p[3] = 0.5;
        assert_relative_eq!(wigner_point(&p), -two_over_pi, epsilon = 1e-15);
    }

    #[test]
    fn exact_grid_matches_analytic_wigner() {
        // Spot-check on a small grid; the 11×11 oracle is in the acceptance
        // suite. Needs a cutoff comfortably above the displaced support.
        let mut p = table_s1_params();
        p.oscillator.n_max = 47;
        let engine = QndEngine::new(
            p,
            ChannelToggles::ALL_OFF,
            PropagationConfig::split(),
            5,
        )
        .unwrap();
        let proto = Protocol {
            engine,
            displacement_atoms: 8,
            measurement_atoms: 43,
            samples_per_pixel: 1,
            method: ReadoutMethod::A,
        };
        let grid = proto
            .run_grid_exact(&InitialStateSpec::Fock(1), 5, 2.0)
            .unwrap();
        for (i, &alpha) in grid.alphas.iter().enumerate() {
            let want = reference::wigner_fock(1, alpha);
            assert!(
                (grid.w[i] - want).abs() < 1e-6,
                "α = {alpha}: W = {} vs analytic {}",
                grid.w[i],
                want
            );
        }
    }

    #[test]
    fn exact_grid_is_conjugation_symmetric_for_real_states() {
        let mut p = table_s1_params();
        p.oscillator.n_max = 31;
        let engine = QndEngine::new(
            p,
            ChannelToggles::ALL_OFF,
            PropagationConfig::split(),
            5,
        )
        .unwrap();
        let proto = Protocol {
            engine,
            displacement_atoms: 8,
            measurement_atoms: 43,
            samples_per_pixel: 1,
            method: ReadoutMethod::A,
        };
        let spec = InitialStateSpec::Superposition(vec![(1, frac(1.0)), (3, frac(1.0))]);
        let grid = proto.run_grid_exact(&spec, 7, 1.8).unwrap();
        for i in 0..grid.alphas.len() {
            let j = grid.conjugate_index(i);
            assert!(
                (grid.w[i] - grid.w[j]).abs() < 1e-9,
                "asymmetry at {} vs {}",
                grid.alphas[i],
                grid.alphas[j]
            );
        }
    }

    #[test]
    fn grid_alphas_layout() {
        let a = grid_alphas(3, 1.0);
        assert_eq!(a.len(), 9);
        assert_eq!(a[0], C64::new(-1.0, -1.0));
        assert_eq!(a[4], C64::new(0.0, 0.0));
        assert_eq!(a[8], C64::new(1.0, 1.0));
        assert_eq!(grid_alphas(1, 2.5), vec![C64::new(0.0, 0.0)]);
    }

    #[test]
    fn qnd_invariance_gives_delta_histogram() {
        // Fock |1⟩ at α = 0, decoherence off: every sample lands on 1.
        let p = table_s1_params();
        let mut frozen = p.clone();
        frozen.beam = p.beam.without_spread();
        let engine = QndEngine::new(
            frozen,
            ChannelToggles::ALL_OFF,
            PropagationConfig::split(),
            5,
        )
        .unwrap();
        let proto = Protocol {
            engine,
            displacement_atoms: 8,
            measurement_atoms: 43,
            samples_per_pixel: 4,
            method: ReadoutMethod::A,
        };
        let dist = proto
            .estimate_phonon_distribution(
                &InitialStateSpec::Fock(1),
                C64::new(0.0, 0.0),
                99,
                0,
                None,
            )
            .unwrap();
        assert_relative_eq!(dist.p[1], 1.0, epsilon = 1e-12);
        assert_eq!(dist.undetermined, 0);

        // A single sample degenerates to a delta on one n.
        let single = Protocol {
            samples_per_pixel: 1,
            ..proto
        };
        let dist1 = single
            .estimate_phonon_distribution(
                &InitialStateSpec::Fock(1),
                C64::new(0.0, 0.0),
                7,
                0,
                None,
            )
            .unwrap();
        assert_eq!(dist1.samples.len(), 1);
        assert_relative_eq!(dist1.p.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn histograms_are_normalized_and_reproducible() {
        let p = table_s1_params();
        let engine = QndEngine::new(
            p,
            ChannelToggles::ALL_OFF,
            PropagationConfig::split(),
            5,
        )
        .unwrap();
        let proto = Protocol {
            engine,
            displacement_atoms: 2,
            measurement_atoms: 11,
            samples_per_pixel: 3,
            method: ReadoutMethod::A,
        };
        let spec = InitialStateSpec::Coherent(C64::new(0.6, 0.0));
        let a = proto
            .estimate_phonon_distribution(&spec, C64::new(0.3, -0.2), 1234, 5, None)
            .unwrap();
        let b = proto
            .estimate_phonon_distribution(&spec, C64::new(0.3, -0.2), 1234, 5, None)
            .unwrap();
        assert_eq!(a.samples, b.samples);
        assert_relative_eq!(a.p.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }
}
