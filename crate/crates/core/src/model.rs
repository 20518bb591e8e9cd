//! Domain types: vibronic-coupling model, dissipation channels, hardware
//! profile, and simulation request.
//!
//! All quantities are canonical (rad/s, s, K) after parsing. Types are
//! immutable after construction and safe to share across threads.

use std::collections::BTreeMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for the symmetry check on the electronic matrix.
pub const HERMITICITY_TOL: f64 = 1e-12;

/// Role of a vibrational mode in the coupling model.
///
/// Spectator modes carry dissipation channels (heating, cooling, dephasing)
/// but no Hamiltonian terms; they are planned for but excluded from the
/// propagated Hilbert space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeKind {
    Tuning,
    Coupling,
    Spectator,
}

/// An off-diagonal vibronic coupling constant for one coupling mode,
/// connecting `state_a` and `state_b` (unordered pair, applied symmetrically).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingEntry {
    pub state_a: usize,
    pub state_b: usize,
    /// rad/s
    pub value: f64,
}

/// One molecular vibrational mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub label: String,
    /// Harmonic frequency, rad/s.
    pub frequency: f64,
    pub kind: ModeKind,
    /// Fock-space truncation (number of levels kept, >= 2).
    pub fock_levels: usize,
    /// Per-state linear tuning constants, rad/s (tuning modes only; length d).
    #[serde(default)]
    pub tuning: Vec<f64>,
    /// Inter-state coupling constants, rad/s (coupling modes only).
    #[serde(default)]
    pub coupling: Vec<CouplingEntry>,
}

/// Linear vibronic coupling model: `d` electronic states, harmonic modes,
/// electronic energies/couplings, and linear vibronic constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LvcModel {
    pub name: String,
    pub num_states: usize,
    /// Electronic energies (diagonal) and inter-state couplings
    /// (off-diagonal), rad/s. Real symmetric.
    pub electronic: Vec<Vec<f64>>,
    pub modes: Vec<Mode>,
}

impl LvcModel {
    /// Electronic matrix as a dense array.
    pub fn electronic_matrix(&self) -> Array2<f64> {
        let d = self.num_states;
        let mut m = Array2::zeros((d, d));
        for (i, row) in self.electronic.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Electronic energy of state `n` (diagonal entry).
    pub fn state_energy(&self, n: usize) -> f64 {
        self.electronic[n][n]
    }

    /// Modes that enter the Hamiltonian (tuning and coupling).
    pub fn dynamical_modes(&self) -> impl Iterator<Item = &Mode> {
        self.modes.iter().filter(|m| m.kind != ModeKind::Spectator)
    }

    pub fn mode_index(&self, label: &str) -> Option<usize> {
        self.modes.iter().position(|m| m.label == label)
    }

    pub fn mode(&self, label: &str) -> Option<&Mode> {
        self.modes.iter().find(|m| m.label == label)
    }

    /// Largest |coupling| per Hamiltonian term family, used for the upper
    /// scaling bound. Returns (electronic coupling, tuning/sqrt2,
    /// vibronic coupling/sqrt2), all rad/s.
    pub fn max_term_strengths(&self) -> TermStrengths {
        let d = self.num_states;
        let mut elec: f64 = 0.0;
        for n in 0..d {
            for m in 0..d {
                if n != m {
                    elec = elec.max(self.electronic[n][m].abs());
                }
            }
        }
        let sqrt2 = std::f64::consts::SQRT_2;
        let mut tuning: f64 = 0.0;
        let mut vibronic: f64 = 0.0;
        for mode in &self.modes {
            for &c in &mode.tuning {
                tuning = tuning.max(c.abs() / sqrt2);
            }
            for entry in &mode.coupling {
                vibronic = vibronic.max(entry.value.abs() / sqrt2);
            }
        }
        TermStrengths { electronic_coupling: elec, tuning, vibronic_coupling: vibronic }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.num_states;
        if d < 2 {
            return Err(Error::invalid("molecule.states", "need at least 2 electronic states"));
        }
        if self.electronic.len() != d || self.electronic.iter().any(|r| r.len() != d) {
            return Err(Error::invalid(
                "molecule.electronic",
                format!("electronic matrix must be {d}x{d}"),
            ));
        }
        let scale = self
            .electronic
            .iter()
            .flatten()
            .fold(0.0f64, |a, &v| a.max(v.abs()))
            .max(1.0);
        for i in 0..d {
            for j in (i + 1)..d {
                let diff = (self.electronic[i][j] - self.electronic[j][i]).abs();
                if diff > HERMITICITY_TOL * scale {
                    return Err(Error::invalid(
                        format!("molecule.electronic[{i}][{j}]"),
                        format!(
                            "not Hermitian: entry {} vs transpose {}",
                            self.electronic[i][j], self.electronic[j][i]
                        ),
                    ));
                }
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for mode in &self.modes {
            let path = format!("molecule.modes[{}]", mode.label);
            if !seen.insert(mode.label.clone()) {
                return Err(Error::invalid(path, "duplicate mode label"));
            }
            if mode.frequency <= 0.0 {
                return Err(Error::invalid(path, "mode frequency must be positive"));
            }
            if mode.fock_levels < 2 {
                return Err(Error::invalid(path, "fock_levels must be at least 2"));
            }
            match mode.kind {
                ModeKind::Tuning => {
                    if mode.tuning.len() != d {
                        return Err(Error::invalid(
                            path,
                            format!("tuning mode needs {d} per-state constants"),
                        ));
                    }
                    if !mode.coupling.is_empty() {
                        return Err(Error::invalid(path, "tuning mode cannot carry coupling entries"));
                    }
                }
                ModeKind::Coupling => {
                    if mode.coupling.is_empty() {
                        return Err(Error::invalid(path, "coupling mode needs coupling entries"));
                    }
                    if !mode.tuning.is_empty() {
                        return Err(Error::invalid(path, "coupling mode cannot carry tuning constants"));
                    }
                    let mut pairs = std::collections::BTreeSet::new();
                    for e in &mode.coupling {
                        if e.state_a == e.state_b {
                            return Err(Error::invalid(path, "coupling entry needs two distinct states"));
                        }
                        if e.state_a >= d || e.state_b >= d {
                            return Err(Error::invalid(path, "coupling entry state out of range"));
                        }
                        let key = (e.state_a.min(e.state_b), e.state_a.max(e.state_b));
                        if !pairs.insert(key) {
                            return Err(Error::invalid(path, "duplicate coupling state pair"));
                        }
                    }
                }
                ModeKind::Spectator => {
                    if !mode.tuning.is_empty() || !mode.coupling.is_empty() {
                        return Err(Error::invalid(path, "spectator mode cannot carry coupling constants"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Strongest molecular interaction per Hamiltonian term family, rad/s.
#[derive(Debug, Clone, Copy)]
pub struct TermStrengths {
    pub electronic_coupling: f64,
    pub tuning: f64,
    pub vibronic_coupling: f64,
}

/// The five dissipation mechanisms handled by the planner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    ElecRelaxation,
    VibHeating,
    VibCooling,
    ElecDephasing,
    VibDephasing,
}

impl ChannelKind {
    pub const ALL: [ChannelKind; 5] = [
        ChannelKind::ElecRelaxation,
        ChannelKind::VibHeating,
        ChannelKind::VibCooling,
        ChannelKind::ElecDephasing,
        ChannelKind::VibDephasing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ChannelKind::ElecRelaxation => "elec_relaxation",
            ChannelKind::VibHeating => "vib_heating",
            ChannelKind::VibCooling => "vib_cooling",
            ChannelKind::ElecDephasing => "elec_dephasing",
            ChannelKind::VibDephasing => "vib_dephasing",
        }
    }
}

/// What a dissipation channel acts on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelTarget {
    /// Relaxation from `upper` to `lower` electronic state.
    StatePair { lower: usize, upper: usize },
    /// A single electronic state.
    State(usize),
    /// A vibrational mode, by label.
    Mode(String),
}

/// One Lindblad dissipation channel with its molecular-frame rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissipationChannel {
    pub kind: ChannelKind,
    pub target: ChannelTarget,
    /// Molecular rate, 1/s.
    pub rate_molecular: f64,
}

impl DissipationChannel {
    pub fn label(&self) -> String {
        match &self.target {
            ChannelTarget::StatePair { lower, upper } => {
                format!("{}({}<-{})", self.kind.name(), lower, upper)
            }
            ChannelTarget::State(n) => format!("{}({})", self.kind.name(), n),
            ChannelTarget::Mode(l) => format!("{}({})", self.kind.name(), l),
        }
    }

    /// Validate target arity and, for relaxation, energetic ordering
    /// against the model.
    pub fn validate(&self, model: &LvcModel) -> Result<()> {
        let d = model.num_states;
        let path = format!("dissipation.{}", self.label());
        if self.rate_molecular < 0.0 {
            return Err(Error::invalid(path, "rate must be non-negative"));
        }
        match (&self.kind, &self.target) {
            (ChannelKind::ElecRelaxation, ChannelTarget::StatePair { lower, upper }) => {
                if *lower >= d || *upper >= d || lower == upper {
                    return Err(Error::invalid(path, "state pair out of range"));
                }
                if model.state_energy(*upper) <= model.state_energy(*lower) {
                    return Err(Error::invalid(
                        path,
                        "relaxation must go from a higher-energy state to a lower one",
                    ));
                }
            }
            (ChannelKind::ElecDephasing, ChannelTarget::State(n)) => {
                if *n >= d {
                    return Err(Error::invalid(path, "state index out of range"));
                }
            }
            (
                ChannelKind::VibHeating | ChannelKind::VibCooling | ChannelKind::VibDephasing,
                ChannelTarget::Mode(label),
            ) => {
                if model.mode(label).is_none() {
                    return Err(Error::invalid(path, format!("unknown mode `{label}`")));
                }
            }
            _ => {
                return Err(Error::invalid(path, "target does not match channel kind"));
            }
        }
        Ok(())
    }
}

/// Orientation of a trap mode relative to the confining electrodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrapAxis {
    Radial,
    Axial,
}

/// One vibrational mode of the ion chain, keyed to a molecular mode by label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapMode {
    pub label: String,
    /// Trap-frame frequency, rad/s.
    pub frequency: f64,
    pub lamb_dicke: f64,
    pub axis: TrapAxis,
    /// Geometric factor relating this mode to the centre-of-mass frequency.
    pub kappa: f64,
}

/// Hardware maxima for the three engineered interaction families, rad/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionLimits {
    pub electronic_coupling_max: f64,
    pub tuning_max: f64,
    pub vibronic_coupling_max: f64,
}

/// Ancilla-ion parameters for sympathetic sideband injection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AncillaParams {
    /// Electronic decay rate of the cycling transition, rad/s.
    pub decay_rate: f64,
    /// Angular factor in the off-resonant scattering term (2/5 for dipole).
    pub angular_factor: f64,
}

/// Optical-pumping path constants for injected electronic relaxation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PumpParams {
    /// Decay rate from the auxiliary level to the relaxation target, rad/s.
    pub decay_to_target: f64,
    /// Decay rate from the auxiliary level back to the pumped state, rad/s.
    pub decay_back: f64,
    /// Pump-laser detuning from the auxiliary transition, rad/s.
    pub detuning: f64,
}

/// Photon-recoil constants for the heating side effect of optical pumping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoilParams {
    /// Scattering-rate prefactor, 1/s.
    pub scatter_rate: f64,
}

/// Magnetic-field constants for global electronic dephasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagneticConstants {
    /// d(omega_n)/dB per electronic state, rad/(s*T).
    pub state_sensitivity: Vec<f64>,
    /// dB/dI, T/A. Overrides the solenoid geometry when given.
    #[serde(default)]
    pub current_to_field: Option<f64>,
    /// Solenoid windings (with `solenoid_length`, dB/dI = C*mu0/L).
    #[serde(default)]
    pub windings: Option<f64>,
    /// Solenoid length, m.
    #[serde(default)]
    pub solenoid_length: Option<f64>,
}

impl MagneticConstants {
    /// Resolve dB/dI from either the direct constant or solenoid geometry.
    pub fn field_per_current(&self) -> Result<f64> {
        if let Some(v) = self.current_to_field {
            return Ok(v);
        }
        match (self.windings, self.solenoid_length) {
            (Some(c), Some(l)) if l > 0.0 => Ok(c * crate::units::MU_0 / l),
            _ => Err(Error::config(
                "hardware.magnetic",
                "need either current_to_field or windings + solenoid_length",
            )),
        }
    }
}

/// Trap-voltage constants for global vibrational dephasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoltageConstants {
    /// d(nu_r0)/dV_RF, rad/(s*V).
    pub rf_sensitivity: f64,
    /// d(nu_z0)/dV_DC, rad/(s*V).
    pub dc_sensitivity: f64,
}

/// Everything the planner needs to know about the simulator hardware.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardwareProfile {
    /// Native (uncontrollable) dissipation rate per channel kind, 1/s.
    pub native_rates: BTreeMap<ChannelKind, f64>,
    /// Whether a native channel kind may be used as a simulation resource.
    /// Kinds absent from the map default to usable.
    #[serde(default)]
    pub usable: BTreeMap<ChannelKind, bool>,
    pub trap_modes: Vec<TrapMode>,
    pub limits: InteractionLimits,
    /// Measured closed-system coherence time override, s. When absent the
    /// planner models it as the reciprocal sum of all native rates.
    #[serde(default)]
    pub closed_coherence_time: Option<f64>,
    pub ancilla: AncillaParams,
    pub pump: PumpParams,
    pub recoil: RecoilParams,
    #[serde(default)]
    pub magnetic: Option<MagneticConstants>,
    #[serde(default)]
    pub voltage: Option<VoltageConstants>,
    /// Correlation time used for injected stochastic dephasing, s.
    pub noise_correlation_time: f64,
}

impl HardwareProfile {
    pub fn native_rate(&self, kind: ChannelKind) -> f64 {
        self.native_rates.get(&kind).copied().unwrap_or(0.0)
    }

    pub fn is_usable(&self, kind: ChannelKind) -> bool {
        self.usable.get(&kind).copied().unwrap_or(true)
    }

    pub fn trap_mode(&self, label: &str) -> Option<&TrapMode> {
        self.trap_modes.iter().find(|m| m.label == label)
    }

    pub fn validate(&self, num_states: usize) -> Result<()> {
        for (kind, &rate) in &self.native_rates {
            if rate < 0.0 {
                return Err(Error::invalid(
                    format!("hardware.native_rates.{}", kind.name()),
                    "native rate must be non-negative",
                ));
            }
        }
        for m in &self.trap_modes {
            let path = format!("hardware.trap_modes[{}]", m.label);
            if m.frequency <= 0.0 {
                return Err(Error::invalid(path, "trap frequency must be positive"));
            }
            if m.lamb_dicke < 0.0 {
                return Err(Error::invalid(path, "Lamb-Dicke parameter must be non-negative"));
            }
            if m.kappa <= 0.0 {
                return Err(Error::invalid(path, "geometric factor must be positive"));
            }
        }
        if self.limits.electronic_coupling_max < 0.0
            || self.limits.tuning_max < 0.0
            || self.limits.vibronic_coupling_max < 0.0
        {
            return Err(Error::invalid("hardware.limits", "interaction maxima must be non-negative"));
        }
        if let Some(tau) = self.closed_coherence_time {
            if tau <= 0.0 {
                return Err(Error::invalid(
                    "hardware.closed_coherence_time",
                    "coherence time must be positive",
                ));
            }
        }
        if self.ancilla.decay_rate < 0.0 {
            return Err(Error::invalid("hardware.ancilla.decay_rate", "must be non-negative"));
        }
        if !(self.ancilla.angular_factor > 0.0 && self.ancilla.angular_factor <= 1.0) {
            return Err(Error::invalid("hardware.ancilla.angular_factor", "must lie in (0, 1]"));
        }
        if self.pump.decay_to_target < 0.0 || self.pump.decay_back < 0.0 {
            return Err(Error::invalid("hardware.pump", "decay rates must be non-negative"));
        }
        if self.recoil.scatter_rate < 0.0 {
            return Err(Error::invalid("hardware.recoil.scatter_rate", "must be non-negative"));
        }
        if let Some(mag) = &self.magnetic {
            if mag.state_sensitivity.len() != num_states {
                return Err(Error::invalid(
                    "hardware.magnetic.state_sensitivity",
                    format!("need one sensitivity per electronic state ({num_states})"),
                ));
            }
            mag.field_per_current()?;
        }
        if self.noise_correlation_time <= 0.0 {
            return Err(Error::invalid(
                "hardware.noise_correlation_time",
                "correlation time must be positive",
            ));
        }
        Ok(())
    }
}

/// What to simulate and how hard to try.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRequest {
    /// Total molecular time to simulate, s.
    pub duration: f64,
    /// Environment temperature, K.
    pub temperature: f64,
    /// Base integrator step in the molecular frame, s. `None` picks a step
    /// from the Hamiltonian norm.
    #[serde(default)]
    pub step: Option<f64>,
    /// Relative local-error target for the step-halving control.
    pub tolerance: f64,
    /// Number of stored sample points over the duration.
    pub output_points: usize,
    /// Trajectory count for stochastic verification.
    pub trajectories: usize,
    pub seed: u64,
    /// Initial electronic state (modes start in vacuum).
    pub initial_electronic: usize,
    /// Guard against accidentally huge composite spaces.
    pub max_dimension: usize,
    /// Top-Fock-level population above which propagation aborts.
    pub leak_threshold: f64,
}

impl SimulationRequest {
    pub fn validate(&self, num_states: usize) -> Result<()> {
        if self.duration <= 0.0 {
            return Err(Error::invalid("request.duration", "must be positive"));
        }
        if self.temperature < 0.0 {
            return Err(Error::invalid("request.temperature", "must be non-negative"));
        }
        if let Some(s) = self.step {
            if s <= 0.0 {
                return Err(Error::invalid("request.step", "must be positive"));
            }
        }
        if self.tolerance <= 0.0 {
            return Err(Error::invalid("request.tolerance", "must be positive"));
        }
        if self.output_points < 2 {
            return Err(Error::invalid("request.output_points", "need at least 2 points"));
        }
        if self.initial_electronic >= num_states {
            return Err(Error::invalid("request.initial_electronic", "state index out of range"));
        }
        if self.leak_threshold <= 0.0 {
            return Err(Error::invalid("request.leak_threshold", "must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state_model() -> LvcModel {
        LvcModel {
            name: "test".into(),
            num_states: 2,
            electronic: vec![vec![0.0, 0.5], vec![0.5, 10.0]],
            modes: vec![Mode {
                label: "m0".into(),
                frequency: 1.0,
                kind: ModeKind::Tuning,
                fock_levels: 4,
                tuning: vec![0.0, 0.3],
                coupling: vec![],
            }],
        }
    }

    #[test]
    fn valid_model_passes() {
        two_state_model().validate().unwrap();
    }

    #[test]
    fn asymmetric_electronic_matrix_is_rejected() {
        let mut m = two_state_model();
        m.electronic[0][1] = 0.5 + 1e-3;
        let err = m.validate().unwrap_err();
        assert!(err.to_string().contains("Hermitian"), "{err}");
    }

    #[test]
    fn relaxation_ordering_is_enforced() {
        let m = two_state_model();
        let bad = DissipationChannel {
            kind: ChannelKind::ElecRelaxation,
            target: ChannelTarget::StatePair { lower: 1, upper: 0 },
            rate_molecular: 1.0,
        };
        assert!(bad.validate(&m).is_err());
        let good = DissipationChannel {
            kind: ChannelKind::ElecRelaxation,
            target: ChannelTarget::StatePair { lower: 0, upper: 1 },
            rate_molecular: 1.0,
        };
        good.validate(&m).unwrap();
    }

    #[test]
    fn channel_target_arity_is_checked() {
        let m = two_state_model();
        let bad = DissipationChannel {
            kind: ChannelKind::VibCooling,
            target: ChannelTarget::State(0),
            rate_molecular: 1.0,
        };
        assert!(bad.validate(&m).is_err());
        let unknown_mode = DissipationChannel {
            kind: ChannelKind::VibCooling,
            target: ChannelTarget::Mode("nope".into()),
            rate_molecular: 1.0,
        };
        assert!(unknown_mode.validate(&m).is_err());
    }

    #[test]
    fn spectator_mode_must_not_couple() {
        let mut m = two_state_model();
        m.modes.push(Mode {
            label: "spec".into(),
            frequency: 2.0,
            kind: ModeKind::Spectator,
            fock_levels: 2,
            tuning: vec![0.1, 0.0],
            coupling: vec![],
        });
        assert!(m.validate().is_err());
    }

    #[test]
    fn solenoid_geometry_resolves_field_constant() {
        let mag = MagneticConstants {
            state_sensitivity: vec![1.0, 1.0],
            current_to_field: None,
            windings: Some(100.0),
            solenoid_length: Some(0.1),
        };
        let dbdi = mag.field_per_current().unwrap();
        assert!((dbdi - 100.0 * crate::units::MU_0 / 0.1).abs() < 1e-18);
    }
}
