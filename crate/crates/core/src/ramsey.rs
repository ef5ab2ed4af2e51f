//! QND measurement engine: π/2 pulses, phase calibration, stochastic
//! detection collapse, K-atom sequences, and the two Fock-readout methods.
//!
//! Phase bookkeeping: the pulse pair is referenced to the atomic transition
//! (the microwave source is phase-coherent at ω_ba), so in the ω_osc frame
//! the second pulse carries phase φ* + δ·(τ_k − τ_ref) for an atom with
//! flight time τ_k. For the mean atom this reduces to the calibrated φ*;
//! for velocity-spread atoms it cancels the free-evolution jitter δ·Δτ that
//! a source-fixed phase would otherwise inject into every fringe.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rand::Rng;

use crate::constants::HBAR;
use crate::dissipation::{build_channels, ChannelToggles, LindbladChannel};
use crate::hamiltonian::{HamiltonianConfig, RotatingFrameHamiltonian};
use crate::hilbert::{CompositeSpace, DensityMatrix, FockSpace, Level};
use crate::model::{sample_trajectory, AtomTrajectory, BeamRole, SystemParams};
use crate::propagator::{apply_atomic_unitary, evolve, PropagationConfig};
use crate::quad;
use crate::Error;

/// π/2 pulse matrix in the {a, b} basis:
/// A(φ) = (1/√2)[[1, −e^{iφ}], [e^{−iφ}, 1]].
pub fn pulse_matrix(phi: f64) -> Array2<C64> {
    let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut a = Array2::zeros((2, 2));
    a[(0, 0)] = s;
    a[(0, 1)] = -C64::from_polar(1.0, phi) * s;
    a[(1, 0)] = C64::from_polar(1.0, -phi) * s;
    a[(1, 1)] = s;
    a
}

/// Dressed-state energies E_±⁽ⁿ⁾ = ħδ/2·[−1 ± √(1 + 4nK²/δ²)] (J).
pub fn dressed_energies(n: usize, coupling: f64, delta: f64) -> Result<(f64, f64), Error> {
    if delta == 0.0 {
        return Err(Error::InvalidParameter(
            "dressed energies undefined at zero detuning".into(),
        ));
    }
    let root = (1.0 + 4.0 * n as f64 * coupling * coupling / (delta * delta)).sqrt();
    let half = HBAR * delta / 2.0;
    Ok((half * (-1.0 + root), half * (-1.0 - root)))
}

/// Instantaneous phase-shift rate [E₋⁽ⁿ⁺¹⁾ − E₊⁽ⁿ⁾]/ħ (rad/s), the adjacent
/// dressed-level difference whose time integral is the Ramsey phase.
fn phase_rate(n: usize, coupling: f64, delta: f64) -> f64 {
    let x = 4.0 * coupling * coupling / (delta * delta);
    let root_up = (1.0 + x * (n + 1) as f64).sqrt();
    let root_dn = (1.0 + x * n as f64).sqrt();
    -delta / 2.0 * (root_up + root_dn)
}

/// Raw (uncalibrated) adiabatic phase ∫[E₋⁽ⁿ⁺¹⁾ − E₊⁽ⁿ⁾]/ħ dt over the
/// passage of the given trajectory.
fn raw_phase(n: usize, traj: &AtomTrajectory, params: &SystemParams) -> f64 {
    let tau = traj.passage_time(params.beam.length);
    quad::integrate(
        |t| {
            let (k, _) = crate::model::instantaneous_coupling(traj, t, params);
            phase_rate(n, k, params.detuning)
        },
        0.0,
        tau,
        1e-10,
    )
}

/// Relative phase shift Φ⁽ⁿ⁾, anchored so Φ⁽⁰⁾ = 0 (the calibration removes
/// the phonon-independent part).
pub fn analytic_phase_shift(n: usize, traj: &AtomTrajectory, params: &SystemParams) -> f64 {
    if n == 0 {
        return 0.0;
    }
    raw_phase(n, traj, params) - raw_phase(0, traj, params)
}

/// Phase table: analytic Φ⁽ⁿ⁾ and predicted P_b for the mean measurement
/// trajectory, plus the calibrated second-pulse phase.
#[derive(Debug, Clone)]
pub struct PhaseTable {
    /// Φ⁽ⁿ⁾ for n = 0..=n_design.
    pub phi: Vec<f64>,
    /// sin²(Φ⁽ⁿ⁾/2), the decoherence-free fringe prediction.
    pub predicted_pb: Vec<f64>,
    /// Calibrated second-pulse phase for the mean atom, in [−π, π).
    pub phi_star: f64,
    /// Mean flight time the calibration refers to.
    pub tau_ref: f64,
    /// Detuning, for the per-atom velocity correction.
    pub delta: f64,
}

impl PhaseTable {
    /// Build the table and calibrate the reference phase for the parameter
    /// set (deterministic, decoherence-free, mean trajectory).
    pub fn build(
        params: &SystemParams,
        n_design: usize,
        cfg: &PropagationConfig,
    ) -> Result<Self, Error> {
        let traj = params.beam.mean_trajectory(BeamRole::Measurement);
        let mut phi = Vec::with_capacity(n_design + 1);
        for n in 0..=n_design {
            phi.push(analytic_phase_shift(n, &traj, params));
        }
        let predicted_pb = phi.iter().map(|p| (p / 2.0).sin().powi(2)).collect();
        let phi_star = calibrate_reference_phase(params, cfg)?;
        Ok(Self {
            phi,
            predicted_pb,
            phi_star,
            tau_ref: params.beam.passage_time(BeamRole::Measurement),
            delta: params.detuning,
        })
    }

    /// Second-pulse phase for an atom with flight time `tau`.
    pub fn second_pulse_phase(&self, tau: f64) -> f64 {
        self.phi_star + self.delta * (tau - self.tau_ref)
    }

    /// Method-B inversion: the design state whose predicted fringe is
    /// closest to the measured b-fraction. `None` when two predictions tie
    /// or the fraction lies beyond the table's range by more than half of
    /// the edge gap.
    pub fn invert_fraction(&self, fraction: f64) -> Option<usize> {
        let n_top = self.predicted_pb.len() - 1;
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        let mut tie = false;
        for (n, &p) in self.predicted_pb.iter().enumerate() {
            let d = (fraction - p).abs();
            if (d - best_d).abs() < 1e-12 {
                tie = true;
            } else if d < best_d {
                best = n;
                best_d = d;
                tie = false;
            }
        }
        if tie {
            return None;
        }
        // Beyond-range guard at the table edges.
        if n_top >= 1 {
            let lo = self.predicted_pb[0];
            let lo_gap = (self.predicted_pb[1] - lo).abs();
            if fraction < lo - 0.5 * lo_gap {
                return None;
            }
            let hi = self.predicted_pb[n_top];
            let hi_gap = (hi - self.predicted_pb[n_top - 1]).abs();
            if fraction > hi + 0.5 * hi_gap {
                return None;
            }
        }
        Some(best)
    }
}

/// Calibrate the second π/2-pulse phase: the value φ* in [−π, π) for which
/// a decoherence-free mean-trajectory atom leaves P_b = 0 on the oscillator
/// ground state. Solved in closed form from the propagated coherence, then
/// verified below 1e−6. The passage is integrated at tightened tolerances
/// so integrator noise (≈3e−6 at the defaults) stays out of the residual.
pub fn calibrate_reference_phase(
    params: &SystemParams,
    cfg: &PropagationConfig,
) -> Result<f64, Error> {
    let traj = params.beam.mean_trajectory(BeamRole::Measurement);
    let cfg = PropagationConfig {
        rel_tol: cfg.rel_tol.min(1e-11),
        abs_tol: cfg.abs_tol.min(1e-13),
        ..*cfg
    };
    let cfg = &PropagationConfig {
        method: crate::propagator::Method::Dopri5,
        ..cfg
    };
    let rho_tau = propagate_ground_passage(params, &traj, cfg)?;

    // P_b(φ) = ½[1 + 2·Re(e^{iφ}·C)] with C = Σ_n ⟨n,b|ρ|n,a⟩.
    let d_osc = rho_tau.space().oscillator().dim();
    let mut c = C64::new(0.0, 0.0);
    for n in 0..d_osc {
        c += rho_tau.matrix()[(2 * n + 1, 2 * n)];
    }
    let phi_star = canonical_phase(std::f64::consts::PI - c.arg());
    let residual = 0.5 * (1.0 - 2.0 * c.norm());
    if residual > 1e-6 {
        return Err(Error::Calibration(format!(
            "minimum P_b = {residual:.3e} exceeds 1e-6 (non-adiabatic leakage?)"
        )));
    }
    Ok(phi_star)
}

fn propagate_ground_passage(
    params: &SystemParams,
    traj: &AtomTrajectory,
    cfg: &PropagationConfig,
) -> Result<DensityMatrix, Error> {
    let ham = RotatingFrameHamiltonian::new(params, *traj, HamiltonianConfig::default());
    let space = ham.space();
    let d_osc = space.oscillator().dim();
    let mut osc = Array2::<C64>::zeros((d_osc, d_osc));
    osc[(0, 0)] = C64::new(1.0, 0.0);
    let mut rho = DensityMatrix::from_oscillator(space, &osc, Level::A)?;
    apply_atomic_unitary(&mut rho, &pulse_matrix(0.0))?;
    let tau = traj.passage_time(params.beam.length);
    evolve(&rho, Some(&ham), &[], 0.0, tau, cfg)
}

fn canonical_phase(phi: f64) -> f64 {
    let mut p = phi.rem_euclid(2.0 * std::f64::consts::PI);
    if p >= std::f64::consts::PI {
        p -= 2.0 * std::f64::consts::PI;
    }
    p
}

/// Projective atom detection: compare a uniform pseudorandom η with
/// P_b = tr[σ_bb ρ]; collapse onto the matching atomic level and
/// renormalize.
pub fn detect_atom<R: Rng>(
    rho: &DensityMatrix,
    rng: &mut R,
) -> Result<(Level, DensityMatrix), Error> {
    let p_b = rho.atom_population(Level::B);
    if !(-1e-10..=1.0 + 1e-10).contains(&p_b) {
        return Err(Error::InvalidProbability(p_b));
    }
    let eta: f64 = rng.gen();
    // Collapse onto |a⟩ when P_b < η, onto |b⟩ otherwise.
    let outcome = if p_b < eta { Level::A } else { Level::B };
    let post = project_level(rho, outcome)?;
    Ok((outcome, post))
}

fn project_level(rho: &DensityMatrix, level: Level) -> Result<DensityMatrix, Error> {
    let space = rho.space();
    let d_osc = space.oscillator().dim();
    let s = level.index();
    let mut block = Array2::<C64>::zeros((space.dim(), space.dim()));
    let mut weight = 0.0;
    for n in 0..d_osc {
        weight += rho.matrix()[(2 * n + s, 2 * n + s)].re;
    }
    if weight <= 0.0 {
        return Err(Error::InvalidProbability(weight));
    }
    let norm = C64::new(1.0 / weight, 0.0);
    for m in 0..d_osc {
        for n in 0..d_osc {
            block[(2 * m + s, 2 * n + s)] = rho.matrix()[(2 * m + s, 2 * n + s)] * norm;
        }
    }
    DensityMatrix::new(space, block)
}

/// Per-atom binary outcomes and derived Fock estimates for one K-atom
/// sequence.
#[derive(Debug, Clone)]
pub struct MeasurementRecord {
    pub outcomes: Vec<Level>,
    /// Fraction of atoms detected in |b⟩.
    pub p_b_estimate: f64,
    /// Method A: argmax of the reduced oscillator diagonal after the
    /// sequence (read from the simulation state).
    pub fock_estimate_a: usize,
    /// Method B: inversion of the measured b-fraction through the phase
    /// table; `None` when the inversion is ambiguous.
    pub fock_estimate_b: Option<usize>,
    /// Seed the caller used for this sequence, for replay.
    pub seed: u64,
}

/// Everything fixed across a measurement run: parameters, calibration,
/// decoherence switches, and the integrator choice.
#[derive(Debug, Clone)]
pub struct QndEngine {
    pub params: SystemParams,
    pub table: PhaseTable,
    pub toggles: ChannelToggles,
    pub prop_cfg: PropagationConfig,
}

impl QndEngine {
    pub fn new(
        params: SystemParams,
        toggles: ChannelToggles,
        prop_cfg: PropagationConfig,
        n_design: usize,
    ) -> Result<Self, Error> {
        params.validate()?;
        // Calibration always runs on the reference adaptive integrator.
        let table = PhaseTable::build(&params, n_design, &PropagationConfig::default())?;
        Ok(Self {
            params,
            table,
            toggles,
            prop_cfg,
        })
    }

    pub fn space(&self) -> CompositeSpace {
        CompositeSpace::new(FockSpace::new(self.params.oscillator.n_max).expect("validated"))
    }

    pub fn channels(&self) -> Vec<LindbladChannel> {
        build_channels(&self.params.rates, self.toggles, self.space())
    }

    /// One full Ramsey interrogation of a single atom: π/2 pulse, passage
    /// through region C, second π/2 pulse, projective detection, and the
    /// fresh-atom reset (reduced oscillator state ⊗ |a⟩⟨a|).
    pub fn ramsey_single_atom<R: Rng>(
        &self,
        rho: &DensityMatrix,
        traj: &AtomTrajectory,
        rng: &mut R,
    ) -> Result<(Level, DensityMatrix), Error> {
        let ham = RotatingFrameHamiltonian::new(&self.params, *traj, HamiltonianConfig::default());
        let channels = self.channels();
        let tau = traj.passage_time(self.params.beam.length);

        let mut state = rho.clone();
        apply_atomic_unitary(&mut state, &pulse_matrix(0.0))?;
        let mut state = evolve(&state, Some(&ham), &channels, 0.0, tau, &self.prop_cfg)?;
        apply_atomic_unitary(
            &mut state,
            &pulse_matrix(self.table.second_pulse_phase(tau)),
        )?;
        let (outcome, post) = detect_atom(&state, rng)?;

        let fresh = DensityMatrix::from_oscillator(
            post.space(),
            &post.reduced_oscillator(),
            Level::A,
        )?;
        Ok((outcome, fresh))
    }

    /// Deterministic fringe probability for one trajectory (no detection):
    /// P_b right before the detector.
    pub fn deterministic_pb(
        &self,
        oscillator: &Array2<C64>,
        traj: &AtomTrajectory,
    ) -> Result<f64, Error> {
        let ham = RotatingFrameHamiltonian::new(&self.params, *traj, HamiltonianConfig::default());
        let channels = self.channels();
        let tau = traj.passage_time(self.params.beam.length);
        let mut state = DensityMatrix::from_oscillator(self.space(), oscillator, Level::A)?;
        apply_atomic_unitary(&mut state, &pulse_matrix(0.0))?;
        let mut state = evolve(&state, Some(&ham), &channels, 0.0, tau, &self.prop_cfg)?;
        apply_atomic_unitary(
            &mut state,
            &pulse_matrix(self.table.second_pulse_phase(tau)),
        )?;
        Ok(state.atom_population(Level::B))
    }

    /// A K-atom QND sequence with freshly sampled trajectories. Returns the
    /// measurement record and the post-sequence state.
    pub fn run_qnd_sequence<R: Rng>(
        &self,
        rho: &DensityMatrix,
        k_atoms: usize,
        seed: u64,
        rng: &mut R,
    ) -> Result<(MeasurementRecord, DensityMatrix), Error> {
        if k_atoms == 0 {
            return Err(Error::InvalidParameter(
                "a QND sequence needs at least one atom".into(),
            ));
        }
        let mut state = rho.clone();
        let mut outcomes = Vec::with_capacity(k_atoms);
        for _ in 0..k_atoms {
            let traj = sample_trajectory(&self.params.beam, BeamRole::Measurement, rng);
            let (outcome, next) = self.ramsey_single_atom(&state, &traj, rng)?;
            outcomes.push(outcome);
            state = next;
        }
        let n_b = outcomes.iter().filter(|&&o| o == Level::B).count();
        let p_b_estimate = n_b as f64 / k_atoms as f64;

        let pops = state.phonon_populations();
        let fock_estimate_a = argmax(&pops);
        let fock_estimate_b = self.table.invert_fraction(p_b_estimate);

        Ok((
            MeasurementRecord {
                outcomes,
                p_b_estimate,
                fock_estimate_a,
                fock_estimate_b,
                seed,
            },
            state,
        ))
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Mean and standard deviation of the deterministic fringe P_b over a beam
/// ensemble, the per-point statistics behind the phonon-state
/// distinguishability figure.
#[derive(Debug, Clone)]
pub struct PbStatistics {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub sem: f64,
    /// Decoherence-free mean-trajectory prediction sin²(Φ⁽ⁿ⁾/2).
    pub ideal: f64,
}

/// Beam-averaged P_b for the Fock state |n⟩ over `n_traj` sampled
/// trajectories.
pub fn beam_averaged_pb<R: Rng>(
    engine: &QndEngine,
    n: usize,
    n_traj: usize,
    rng: &mut R,
) -> Result<PbStatistics, Error> {
    let d_osc = engine.space().oscillator().dim();
    let mut osc = Array2::<C64>::zeros((d_osc, d_osc));
    osc[(n, n)] = C64::new(1.0, 0.0);

    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for _ in 0..n_traj {
        let traj = sample_trajectory(&engine.params.beam, BeamRole::Measurement, rng);
        let pb = engine.deterministic_pb(&osc, &traj)?;
        sum += pb;
        sumsq += pb * pb;
    }
    let mean = sum / n_traj as f64;
    let var = (sumsq / n_traj as f64 - mean * mean).max(0.0);
    let std = var.sqrt();
    Ok(PbStatistics {
        n,
        mean,
        std,
        sem: std / (n_traj as f64).sqrt(),
        ideal: engine.table.predicted_pb.get(n).copied().unwrap_or(f64::NAN),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use crate::model::table_s1_params;
    use crate::seeding;
    use approx::assert_relative_eq;

    #[test]
    fn pulse_matrix_is_unitary_and_squares_to_flip() {
        for &phi in &[0.0, 0.3, -2.0, std::f64::consts::PI] {
            let a = pulse_matrix(phi);
            assert!(linalg::unitarity_defect(&a) < 1e-15);
        }
        // Two successive A(0) send |a⟩⟨a| to |b⟩⟨b| (spin flip up to phase).
        let a = pulse_matrix(0.0);
        let aa = linalg::matmul(&a, &a);
        let mut rho = Array2::<C64>::zeros((2, 2));
        rho[(0, 0)] = C64::new(1.0, 0.0);
        let out = linalg::matmul(&linalg::matmul(&aa, &rho), &linalg::dagger(&aa));
        assert_relative_eq!(out[(1, 1)].re, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn dressed_energy_limits() {
        let delta = -8.1e7;
        // n = 0: E₊ = 0, E₋ = −ħδ.
        let (ep, em) = dressed_energies(0, 5e6, delta).unwrap();
        assert_relative_eq!(ep, 0.0, epsilon = 1e-50);
        assert_relative_eq!(em, -HBAR * delta, max_relative = 1e-12);
        // K = 0: same for all n.
        let (ep, em) = dressed_energies(7, 0.0, delta).unwrap();
        assert_relative_eq!(ep, 0.0, epsilon = 1e-50);
        assert_relative_eq!(em, -HBAR * delta, max_relative = 1e-12);
        // 4K²/δ² = 3 at n = 1: E₊ = ħδ/2, E₋ = −3ħδ/2.
        let k = (3.0f64 / 4.0).sqrt() * delta.abs();
        let (ep, em) = dressed_energies(1, k, delta).unwrap();
        assert_relative_eq!(ep, HBAR * delta / 2.0, max_relative = 1e-12);
        assert_relative_eq!(em, -1.5 * HBAR * delta, max_relative = 1e-12);
        assert!(dressed_energies(1, 1.0, 0.0).is_err());
    }

    #[test]
    fn phase_shift_zero_coupling_and_linearity() {
        let mut p = table_s1_params();
        let traj = p.beam.mean_trajectory(BeamRole::Measurement);
        // K₀ → 0 by sending the oscillator dipole to (almost) zero.
        p.oscillator.d_osc = 1e-60;
        for n in 0..4 {
            assert!(analytic_phase_shift(n, &traj, &p).abs() < 1e-12);
        }

        // Leading order: Φ⁽ⁿ⁾ ≈ 2n·∫K²/|δ| dt, linear spacing within 5% at n = 1.
        let p = table_s1_params();
        let phi1 = analytic_phase_shift(1, &traj, &p);
        let tau = p.beam.passage_time(BeamRole::Measurement);
        let theta_abs = quad::integrate(
            |t| {
                let (k, _) = crate::model::instantaneous_coupling(&traj, t, &p);
                k * k / p.detuning.abs()
            },
            0.0,
            tau,
            1e-10,
        );
        assert_relative_eq!(phi1, 2.0 * theta_abs, max_relative = 0.05);
    }

    #[test]
    fn phase_shifts_fill_zero_to_pi() {
        let p = table_s1_params();
        let traj = p.beam.mean_trajectory(BeamRole::Measurement);
        let mut prev = -1.0;
        for n in 0..=5 {
            let phi = analytic_phase_shift(n, &traj, &p);
            assert!(
                (0.0..=std::f64::consts::PI).contains(&phi),
                "Φ({n}) = {phi} outside [0, π]"
            );
            assert!(phi > prev, "Φ must increase with n");
            prev = phi;
        }
    }

    #[test]
    fn calibration_zeroes_ground_state_fringe() {
        let p = table_s1_params();
        // Verification below 1e−6 needs the verification propagation itself
        // to be quieter than that (default-tolerance noise is ≈3e−6).
        let engine = QndEngine::new(
            p,
            ChannelToggles::ALL_OFF,
            PropagationConfig {
                rel_tol: 1e-11,
                abs_tol: 1e-13,
                ..Default::default()
            },
            5,
        )
        .unwrap();
        assert!(
            engine.table.phi_star >= -std::f64::consts::PI
                && engine.table.phi_star < std::f64::consts::PI
        );
        let traj = engine.params.beam.mean_trajectory(BeamRole::Measurement);
        let d_osc = engine.space().oscillator().dim();
        let mut ground = Array2::<C64>::zeros((d_osc, d_osc));
        ground[(0, 0)] = C64::new(1.0, 0.0);
        let pb = engine.deterministic_pb(&ground, &traj).unwrap();
        assert!(pb < 1e-6, "calibrated ground-state P_b = {pb:.3e}");
    }

    #[test]
    fn fringe_matches_analytic_phase_for_fock_states() {
        // P_b(|n⟩) = sin²(Φ⁽ⁿ⁾/2) within 1e−3, decoherence off, mean
        // trajectory: the full propagation against the dressed-state
        // prediction.
        let p = table_s1_params();
        let engine = QndEngine::new(
            p,
            ChannelToggles::ALL_OFF,
            PropagationConfig::default(),
            5,
        )
        .unwrap();
        let traj = engine.params.beam.mean_trajectory(BeamRole::Measurement);
        let d_osc = engine.space().oscillator().dim();
        for n in 0..=5usize {
            let mut osc = Array2::<C64>::zeros((d_osc, d_osc));
            osc[(n, n)] = C64::new(1.0, 0.0);
            let pb = engine.deterministic_pb(&osc, &traj).unwrap();
            let want = engine.table.predicted_pb[n];
            assert!(
                (pb - want).abs() < 1e-3,
                "n={n}: P_b = {pb:.6} vs sin²(Φ/2) = {want:.6}"
            );
        }
    }

    #[test]
    fn detect_atom_certain_outcomes() {
        let space = CompositeSpace::new(FockSpace::new(2).unwrap());
        let d_osc = 3;
        let mut osc = Array2::<C64>::zeros((d_osc, d_osc));
        osc[(1, 1)] = C64::new(1.0, 0.0);
        let rho_a = DensityMatrix::from_oscillator(space, &osc, Level::A).unwrap();
        let mut rng = seeding::unit_rng(1, &[0]);
        for _ in 0..20 {
            let (outcome, post) = detect_atom(&rho_a, &mut rng).unwrap();
            assert_eq!(outcome, Level::A);
            assert!(
                linalg::frobenius_distance(post.matrix(), rho_a.matrix()) < 1e-12,
                "oscillator part must be untouched"
            );
        }
        let rho_b = DensityMatrix::from_oscillator(space, &osc, Level::B).unwrap();
        let (outcome, _) = detect_atom(&rho_b, &mut rng).unwrap();
        assert_eq!(outcome, Level::B);
    }

    #[test]
    fn detect_atom_reweights_entangled_state() {
        // (|0⟩|a⟩ + |1⟩|b⟩)/√2-type entangled state: outcome b keeps the
        // n = 1 branch only.
        let space = CompositeSpace::new(FockSpace::new(1).unwrap());
        let amp = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        // indices: |0,a⟩ = 0, |1,b⟩ = 3.
        let mut m = Array2::<C64>::zeros((4, 4));
        m[(0, 0)] = amp * amp.conj();
        m[(0, 3)] = amp * amp.conj();
        m[(3, 0)] = amp * amp.conj();
        m[(3, 3)] = amp * amp.conj();
        let rho = DensityMatrix::new(space, m).unwrap();
        let mut rng = seeding::unit_rng(2, &[0]);
        let mut seen_b = false;
        for _ in 0..50 {
            let (outcome, post) = detect_atom(&rho, &mut rng).unwrap();
            let pops = post.phonon_populations();
            match outcome {
                Level::A => assert_relative_eq!(pops[0], 1.0, epsilon = 1e-12),
                Level::B => {
                    seen_b = true;
                    assert_relative_eq!(pops[1], 1.0, epsilon = 1e-12);
                }
            }
            assert!((post.trace().re - 1.0).abs() < 1e-12);
        }
        assert!(seen_b, "50 draws at P_b = 1/2 should hit b");
    }

    #[test]
    fn detect_atom_statistics_match_probability() {
        // Empirical b-fraction over 1e5 draws at fixed P_b within 3σ.
        let space = CompositeSpace::new(FockSpace::new(1).unwrap());
        let p_b = 0.37;
        let mut m = Array2::<C64>::zeros((4, 4));
        m[(0, 0)] = C64::new(1.0 - p_b, 0.0);
        m[(1, 1)] = C64::new(p_b, 0.0);
        let rho = DensityMatrix::new(space, m).unwrap();
        let mut rng = seeding::unit_rng(3, &[7]);
        let n = 100_000;
        let mut hits = 0usize;
        for _ in 0..n {
            let (outcome, _) = detect_atom(&rho, &mut rng).unwrap();
            if outcome == Level::B {
                hits += 1;
            }
        }
        let frac = hits as f64 / n as f64;
        let sigma = (p_b * (1.0 - p_b) / n as f64).sqrt();
        assert!(
            (frac - p_b).abs() < 3.0 * sigma,
            "fraction {frac} vs {p_b} (3σ = {:.2e})",
            3.0 * sigma
        );
    }

    #[test]
    fn method_b_inversion_rules() {
        let table = PhaseTable {
            phi: vec![0.0, 0.6, 1.2],
            predicted_pb: vec![0.0, 0.1, 0.4],
            phi_star: 0.0,
            tau_ref: 1.0,
            delta: -1.0,
        };
        assert_eq!(table.invert_fraction(0.02), Some(0));
        assert_eq!(table.invert_fraction(0.12), Some(1));
        assert_eq!(table.invert_fraction(0.9), None); // beyond top edge gap
        assert_eq!(table.invert_fraction(0.05), None); // exact tie 0 vs 1
    }

    #[test]
    fn single_atom_on_ground_state_reads_a() {
        let p = table_s1_params();
        let engine = QndEngine::new(
            p,
            ChannelToggles::ALL_OFF,
            PropagationConfig::split(),
            5,
        )
        .unwrap();
        let traj = engine.params.beam.mean_trajectory(BeamRole::Measurement);
        let d_osc = engine.space().oscillator().dim();
        let mut osc = Array2::<C64>::zeros((d_osc, d_osc));
        osc[(0, 0)] = C64::new(1.0, 0.0);
        let rho = DensityMatrix::from_oscillator(engine.space(), &osc, Level::A).unwrap();
        let mut rng = seeding::unit_rng(11, &[0]);
        for _ in 0..5 {
            let (outcome, post) = engine.ramsey_single_atom(&rho, &traj, &mut rng).unwrap();
            assert_eq!(outcome, Level::A);
            // QND: the oscillator stays in the ground state.
            assert!(post.phonon_populations()[0] > 1.0 - 1e-6);
        }
    }

    #[test]
    fn qnd_sequence_preserves_fock_state_and_reads_it() {
        let p = table_s1_params();
        let mut beam_off = p.clone();
        beam_off.beam = p.beam.without_spread();
        let engine = QndEngine::new(
            beam_off,
            ChannelToggles::ALL_OFF,
            PropagationConfig::split(),
            5,
        )
        .unwrap();
        let d_osc = engine.space().oscillator().dim();
        let mut osc = Array2::<C64>::zeros((d_osc, d_osc));
        osc[(2, 2)] = C64::new(1.0, 0.0);
        let rho = DensityMatrix::from_oscillator(engine.space(), &osc, Level::A).unwrap();
        let mut rng = seeding::unit_rng(21, &[4]);
        let (record, post) = engine.run_qnd_sequence(&rho, 43, 0, &mut rng).unwrap();
        assert_eq!(record.fock_estimate_a, 2);
        assert_eq!(record.fock_estimate_b, Some(2));
        assert!(post.phonon_populations()[2] > 0.99);
        assert_eq!(record.outcomes.len(), 43);
    }

    #[test]
    fn sequence_rejects_zero_atoms() {
        let p = table_s1_params();
        let engine = QndEngine::new(
            p,
            ChannelToggles::ALL_OFF,
            PropagationConfig::split(),
            5,
        )
        .unwrap();
        let d_osc = engine.space().oscillator().dim();
        let mut osc = Array2::<C64>::zeros((d_osc, d_osc));
        osc[(0, 0)] = C64::new(1.0, 0.0);
        let rho = DensityMatrix::from_oscillator(engine.space(), &osc, Level::A).unwrap();
        let mut rng = seeding::unit_rng(5, &[0]);
        assert!(engine.run_qnd_sequence(&rho, 0, 0, &mut rng).is_err());
    }
}
