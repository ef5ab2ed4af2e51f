// Scratch probe: beam-averaged fringe statistics for the distinguishability
// criterion, and driven split accuracy at production settings.
use ndarray::Array2;
use num_complex::Complex64 as C64;
use torsim::dissipation::{build_channels, ChannelToggles};
use torsim::hamiltonian::{DriveMode, HamiltonianConfig, RotatingFrameHamiltonian};
use torsim::hilbert::{DensityMatrix, Level};
use torsim::linalg;
use torsim::model::{table_s1_params, BeamRole};
use torsim::propagator::{evolve, Method, PropagationConfig};
use torsim::ramsey::{beam_averaged_pb, QndEngine};
use torsim::seeding;

fn main() {
    // Driven split accuracy at coarser production settings.
    let p = table_s1_params();
    let traj = p.beam.mean_trajectory(BeamRole::Displacement);
    let tau = p.beam.passage_time(BeamRole::Displacement);
    let rabi = C64::new(
        torsim::constants::TWO_PI * 0.5e6,
        torsim::constants::TWO_PI * 0.5e6,
    );
    let ham = RotatingFrameHamiltonian::new(
        &p,
        traj,
        HamiltonianConfig {
            mode: DriveMode::Driven { rabi },
            ..Default::default()
        },
    );
    let space = ham.space();
    let channels = build_channels(&p.rates, ChannelToggles::ALL_ON, space);
    let d_osc = space.oscillator().dim();
    let mut osc = Array2::<C64>::zeros((d_osc, d_osc));
    osc[(0, 0)] = C64::new(1.0, 0.0);
    let rho = DensityMatrix::from_oscillator(space, &osc, Level::A).unwrap();
    let tight = PropagationConfig {
        rel_tol: 1e-12,
        abs_tol: 1e-13,
        ..Default::default()
    };
    let reference = evolve(&rho, Some(&ham), &channels, 0.0, tau, &tight).unwrap();
    for (sub, chan) in [(2e-9, 50e-9), (4e-9, 100e-9), (8e-9, 200e-9)] {
        let cfg = PropagationConfig {
            method: Method::SplitStep {
                unitary_substep: sub,
                channel_interval: chan,
            },
            ..Default::default()
        };
        let out = evolve(&rho, Some(&ham), &channels, 0.0, tau, &cfg).unwrap();
        println!(
            "driven split ({sub:.0e},{chan:.0e}): dist = {:.3e}",
            linalg::frobenius_distance(reference.matrix(), out.matrix())
        );
    }

    // Beam-averaged P_b statistics, decoherence on.
    let engine = QndEngine::new(
        table_s1_params(),
        ChannelToggles::ALL_ON,
        PropagationConfig {
            method: Method::SplitStep {
                unitary_substep: 4e-9,
                channel_interval: 100e-9,
            },
            ..Default::default()
        },
        5,
    )
    .unwrap();
    let n_traj = 384;
    let mut stats = Vec::new();
    for n in 0..=5usize {
        let mut rng = seeding::unit_rng(2026, &[n as u64]);
        let s = beam_averaged_pb(&engine, n, n_traj, &mut rng).unwrap();
        println!(
            "n={} mean={:.4} std={:.4} sem={:.4} ideal={:.4}",
            s.n, s.mean, s.std, s.sem, s.ideal
        );
        stats.push(s);
    }
    for w in stats.windows(2) {
        let gap = (w[1].mean - w[0].mean).abs();
        let sig = w[0].std.max(w[1].std);
        println!(
            "gap {}->{}: {:.4} vs 2*max(std) = {:.4}  ratio {:.2}",
            w[0].n,
            w[1].n,
            gap,
            2.0 * sig,
            gap / (2.0 * sig)
        );
    }
}
