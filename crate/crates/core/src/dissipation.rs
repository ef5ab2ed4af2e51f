//! Lindblad channel construction: oscillator heat bath, black-body
//! relaxation between the Rydberg levels, and dephasing from stray fields.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::hilbert::{atomic_sigma, CompositeSpace, Level, Subsystem};
use crate::Error;

/// Decoherence rates, all angular (rad/s). `n_thermal` is dimensionless.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoherenceRates {
    pub gamma_osc: f64,
    pub n_thermal: f64,
    pub gamma_bbr: f64,
    pub gamma_deph: f64,
}

impl DecoherenceRates {
    pub fn validate(&self) -> Result<(), Error> {
        for (name, v) in [
            ("gamma_osc", self.gamma_osc),
            ("n_thermal", self.n_thermal),
            ("gamma_bbr", self.gamma_bbr),
            ("gamma_deph", self.gamma_deph),
        ] {
            if v < 0.0 || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "rate {name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Per-channel enable flags. Defaults to everything on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChannelToggles {
    pub thermal_down: bool,
    pub thermal_up: bool,
    pub bbr_ab: bool,
    pub bbr_ba: bool,
    pub deph_a: bool,
    pub deph_b: bool,
}

impl ChannelToggles {
    pub const ALL_ON: Self = Self {
        thermal_down: true,
        thermal_up: true,
        bbr_ab: true,
        bbr_ba: true,
        deph_a: true,
        deph_b: true,
    };

    pub const ALL_OFF: Self = Self {
        thermal_down: false,
        thermal_up: false,
        bbr_ab: false,
        bbr_ba: false,
        deph_a: false,
        deph_b: false,
    };

    pub fn thermal(mut self, on: bool) -> Self {
        self.thermal_down = on;
        self.thermal_up = on;
        self
    }

    pub fn bbr(mut self, on: bool) -> Self {
        self.bbr_ab = on;
        self.bbr_ba = on;
        self
    }

    pub fn dephasing(mut self, on: bool) -> Self {
        self.deph_a = on;
        self.deph_b = on;
        self
    }

    pub fn any(&self) -> bool {
        self.thermal_down
            || self.thermal_up
            || self.bbr_ab
            || self.bbr_ba
            || self.deph_a
            || self.deph_b
    }
}

impl Default for ChannelToggles {
    fn default() -> Self {
        Self::ALL_ON
    }
}

/// What a jump operator is, structurally. The propagators use this to apply
/// channels without dense matrix products.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKind {
    /// √((n̄+1)Γ_osc)·ĉ
    ThermalDown,
    /// √(n̄Γ_osc)·ĉ†
    ThermalUp,
    /// √Γ_bbr·σ_{to,from}
    AtomicJump { to: Level, from: Level },
    /// √Γ_deph·σ_{μμ}
    AtomicProjector { level: Level },
}

/// One Lindblad channel: the jump operator L (rate folded in as √Γ) plus its
/// structural tag.
#[derive(Debug, Clone)]
pub struct LindbladChannel {
    pub kind: ChannelKind,
    /// The rate Γ multiplying the bare operator (so L = √rate · op).
    pub rate: f64,
    /// Dense jump operator including the √rate prefactor.
    pub operator: Array2<C64>,
}

impl LindbladChannel {
    fn build(kind: ChannelKind, rate: f64, space: CompositeSpace) -> Self {
        let osc = space.oscillator();
        let bare = match kind {
            ChannelKind::ThermalDown => space
                .embed(&osc.lowering(), Subsystem::Oscillator)
                .expect("dimensions fixed by space"),
            ChannelKind::ThermalUp => space
                .embed(&osc.raising(), Subsystem::Oscillator)
                .expect("dimensions fixed by space"),
            ChannelKind::AtomicJump { to, from } => space
                .embed(&atomic_sigma(to, from), Subsystem::Atom)
                .expect("dimensions fixed by space"),
            ChannelKind::AtomicProjector { level } => space
                .embed(&atomic_sigma(level, level), Subsystem::Atom)
                .expect("dimensions fixed by space"),
        };
        let operator = bare.mapv(|z| z * C64::new(rate.sqrt(), 0.0));
        Self {
            kind,
            rate,
            operator,
        }
    }
}

/// Build the enabled jump operators on the composite space: thermal down/up,
/// BBR a↔b both directions, dephasing projectors on a and b.
pub fn build_channels(
    rates: &DecoherenceRates,
    toggles: ChannelToggles,
    space: CompositeSpace,
) -> Vec<LindbladChannel> {
    let mut out = Vec::new();
    if toggles.thermal_down {
        out.push(LindbladChannel::build(
            ChannelKind::ThermalDown,
            (rates.n_thermal + 1.0) * rates.gamma_osc,
            space,
        ));
    }
    if toggles.thermal_up {
        out.push(LindbladChannel::build(
            ChannelKind::ThermalUp,
            rates.n_thermal * rates.gamma_osc,
            space,
        ));
    }
    if toggles.bbr_ab {
        out.push(LindbladChannel::build(
            ChannelKind::AtomicJump {
                to: Level::A,
                from: Level::B,
            },
            rates.gamma_bbr,
            space,
        ));
    }
    if toggles.bbr_ba {
        out.push(LindbladChannel::build(
            ChannelKind::AtomicJump {
                to: Level::B,
                from: Level::A,
            },
            rates.gamma_bbr,
            space,
        ));
    }
    if toggles.deph_a {
        out.push(LindbladChannel::build(
            ChannelKind::AtomicProjector { level: Level::A },
            rates.gamma_deph,
            space,
        ));
    }
    if toggles.deph_b {
        out.push(LindbladChannel::build(
            ChannelKind::AtomicProjector { level: Level::B },
            rates.gamma_deph,
            space,
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::FockSpace;
    use crate::model::table_s1_params;
    use approx::assert_relative_eq;

    fn space() -> CompositeSpace {
        CompositeSpace::new(FockSpace::new(3).unwrap())
    }

    #[test]
    fn all_off_gives_empty_list() {
        let p = table_s1_params();
        let chans = build_channels(&p.rates, ChannelToggles::ALL_OFF, space());
        assert!(chans.is_empty());
    }

    #[test]
    fn table_rates() {
        let p = table_s1_params();
        assert_relative_eq!(p.rates.gamma_osc / crate::constants::TWO_PI, 50.0, max_relative = 1e-3);
        assert_relative_eq!(p.rates.gamma_bbr / crate::constants::TWO_PI, 988.63, epsilon = 1e-6);
        assert_relative_eq!(p.rates.gamma_deph / crate::constants::TWO_PI, 1.50e3, epsilon = 1e-6);
        assert_relative_eq!(p.rates.n_thermal, 2.0e-6, max_relative = 0.05);
    }

    #[test]
    fn six_channels_when_all_on() {
        let p = table_s1_params();
        let chans = build_channels(&p.rates, ChannelToggles::ALL_ON, space());
        assert_eq!(chans.len(), 6);
    }

    #[test]
    fn thermal_down_operator_structure() {
        let p = table_s1_params();
        let chans = build_channels(
            &p.rates,
            ChannelToggles::ALL_OFF.thermal(true),
            space(),
        );
        assert_eq!(chans.len(), 2);
        let down = &chans[0];
        assert_eq!(down.kind, ChannelKind::ThermalDown);
        // ⟨0,a|L|1,a⟩ = √((n̄+1)Γ)·√1
        let want = ((p.rates.n_thermal + 1.0) * p.rates.gamma_osc).sqrt();
        assert_relative_eq!(down.operator[(0, 2)].re, want, max_relative = 1e-12);
    }
}
