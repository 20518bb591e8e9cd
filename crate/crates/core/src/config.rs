//! Configuration parsing.
//!
//! A single TOML document with sections `[molecule]`, `[dissipation]`,
//! `[hardware]`, and `[request]` describes one mapping problem. Every
//! physical value is written as a `"<number> <unit>"` string (see
//! [`crate::units`] for the accepted suffixes); unknown keys and unknown
//! units are errors.
//!
//! Dissipation may be given either as raw channel rates or as spectroscopic
//! times (T1/T2, radiative yield); both normalise to the same channel list.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    AncillaParams, ChannelKind, ChannelTarget, CouplingEntry, DissipationChannel,
    HardwareProfile, InteractionLimits, LvcModel, MagneticConstants, Mode, ModeKind, PumpParams,
    RecoilParams, SimulationRequest, TrapAxis, TrapMode, VoltageConstants,
};
use crate::rates::{self, ElectronicSpectroscopy, VibrationalSpectroscopy};
use crate::units::Quantity;

pub const SCHEMA_VERSION: u32 = 1;

/// Fully parsed and validated system description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedSystem {
    pub model: LvcModel,
    pub channels: Vec<DissipationChannel>,
    pub hardware: HardwareProfile,
    pub request: SimulationRequest,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema_version: u32,
    molecule: RawMolecule,
    #[serde(default)]
    dissipation: RawDissipation,
    hardware: RawHardware,
    request: RawRequest,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMolecule {
    name: String,
    states: usize,
    electronic: Vec<Vec<Quantity>>,
    #[serde(default)]
    modes: Vec<RawMode>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMode {
    label: String,
    kind: ModeKind,
    frequency: Quantity,
    fock_levels: usize,
    #[serde(default)]
    tuning: Vec<Quantity>,
    #[serde(default)]
    coupling: Vec<RawCoupling>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCoupling {
    states: [usize; 2],
    value: Quantity,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDissipation {
    #[serde(default)]
    channels: Vec<RawChannel>,
    #[serde(default)]
    electronic_spectroscopy: Vec<RawElectronicSpectroscopy>,
    #[serde(default)]
    vibrational_spectroscopy: Vec<RawVibrationalSpectroscopy>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChannel {
    kind: ChannelKind,
    #[serde(default)]
    state: Option<usize>,
    #[serde(default)]
    lower: Option<usize>,
    #[serde(default)]
    upper: Option<usize>,
    #[serde(default)]
    mode: Option<String>,
    rate: Quantity,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawElectronicSpectroscopy {
    state: usize,
    t2: Quantity,
    #[serde(default)]
    t1: Option<Quantity>,
    #[serde(default)]
    radiative_yield: f64,
    #[serde(default)]
    relaxation_partner: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVibrationalSpectroscopy {
    mode: String,
    t1: Quantity,
    #[serde(default)]
    t2: Option<Quantity>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHardware {
    native_rates: std::collections::BTreeMap<ChannelKind, Quantity>,
    #[serde(default)]
    usable: std::collections::BTreeMap<ChannelKind, bool>,
    #[serde(default)]
    trap_modes: Vec<RawTrapMode>,
    limits: RawLimits,
    #[serde(default)]
    closed_coherence_time: Option<Quantity>,
    ancilla: RawAncilla,
    pump: RawPump,
    recoil: RawRecoil,
    #[serde(default)]
    magnetic: Option<MagneticConstants>,
    #[serde(default)]
    voltage: Option<VoltageConstants>,
    noise: RawNoise,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrapMode {
    label: String,
    frequency: Quantity,
    lamb_dicke: f64,
    axis: TrapAxis,
    #[serde(default = "one")]
    kappa: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLimits {
    electronic_coupling_max: Quantity,
    tuning_max: Quantity,
    vibronic_coupling_max: Quantity,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAncilla {
    decay_rate: Quantity,
    #[serde(default = "default_angular_factor")]
    angular_factor: f64,
}

fn default_angular_factor() -> f64 {
    0.4
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPump {
    decay_to_target: Quantity,
    decay_back: Quantity,
    detuning: Quantity,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecoil {
    scatter_rate: Quantity,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNoise {
    correlation_time: Quantity,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRequest {
    duration: Quantity,
    temperature: Quantity,
    #[serde(default)]
    step: Option<Quantity>,
    #[serde(default = "default_tolerance")]
    tolerance: f64,
    #[serde(default = "default_output_points")]
    output_points: usize,
    #[serde(default = "default_trajectories")]
    trajectories: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    initial_electronic: Option<usize>,
    #[serde(default = "default_max_dimension")]
    max_dimension: usize,
    #[serde(default = "default_leak_threshold")]
    leak_threshold: f64,
}

fn default_tolerance() -> f64 {
    1e-10
}
fn default_output_points() -> usize {
    100
}
fn default_trajectories() -> usize {
    1000
}
fn default_max_dimension() -> usize {
    4096
}
fn default_leak_threshold() -> f64 {
    1e-3
}

/// Parse a configuration document into validated domain types with all
/// quantities in canonical units.
pub fn parse_model(text: &str) -> Result<ParsedSystem> {
    let raw: RawConfig = toml::from_str(text)
        .map_err(|e| Error::config("<config>", e.message().to_string()))?;
    if raw.schema_version != SCHEMA_VERSION {
        return Err(Error::config(
            "schema_version",
            format!("unsupported schema version {} (expected {SCHEMA_VERSION})", raw.schema_version),
        ));
    }

    let model = convert_molecule(&raw.molecule)?;
    let request = convert_request(&raw.request, model.num_states)?;
    let hardware = convert_hardware(&raw.hardware)?;
    let mut channels = convert_channels(&raw.dissipation, &model, request.temperature)?;
    channels.sort_by_key(|c| (c.kind, c.label()));

    model.validate()?;
    for c in &channels {
        c.validate(&model)?;
    }
    hardware.validate(model.num_states)?;
    request.validate(model.num_states)?;

    // Vibrational channels need a trap-mode counterpart for injection
    // planning; demand it up front so failures surface at parse time.
    for c in &channels {
        if let ChannelTarget::Mode(label) = &c.target {
            if hardware.trap_mode(label).is_none() {
                return Err(Error::config(
                    "hardware.trap_modes",
                    format!("no trap mode labelled `{label}` for channel {}", c.label()),
                ));
            }
        }
    }

    // Reject duplicate channels (same kind and target).
    for (i, a) in channels.iter().enumerate() {
        for b in &channels[i + 1..] {
            if a.kind == b.kind && a.target == b.target {
                return Err(Error::config(
                    "dissipation",
                    format!("duplicate channel {}", a.label()),
                ));
            }
        }
    }

    Ok(ParsedSystem { model, channels, hardware, request })
}

fn convert_molecule(raw: &RawMolecule) -> Result<LvcModel> {
    let d = raw.states;
    let mut electronic = Vec::with_capacity(d);
    for (i, row) in raw.electronic.iter().enumerate() {
        let mut out = Vec::with_capacity(d);
        for (j, q) in row.iter().enumerate() {
            out.push(q.expect_angular(&format!("molecule.electronic[{i}][{j}]"))?);
        }
        electronic.push(out);
    }
    let mut modes = Vec::with_capacity(raw.modes.len());
    for m in &raw.modes {
        let path = format!("molecule.modes[{}]", m.label);
        let tuning = m
            .tuning
            .iter()
            .map(|q| q.expect_angular(&format!("{path}.tuning")))
            .collect::<Result<Vec<_>>>()?;
        let coupling = m
            .coupling
            .iter()
            .map(|c| {
                Ok(CouplingEntry {
                    state_a: c.states[0],
                    state_b: c.states[1],
                    value: c.value.expect_angular(&format!("{path}.coupling"))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        modes.push(Mode {
            label: m.label.clone(),
            frequency: m.frequency.expect_angular(&format!("{path}.frequency"))?,
            kind: m.kind,
            fock_levels: m.fock_levels,
            tuning,
            coupling,
        });
    }
    Ok(LvcModel { name: raw.name.clone(), num_states: d, electronic, modes })
}

fn convert_channels(
    raw: &RawDissipation,
    model: &LvcModel,
    temperature: f64,
) -> Result<Vec<DissipationChannel>> {
    let mut channels = Vec::new();
    for (i, c) in raw.channels.iter().enumerate() {
        let path = format!("dissipation.channels[{i}]");
        let rate = c.rate.expect_angular(&format!("{path}.rate"))?;
        let target = match c.kind {
            ChannelKind::ElecRelaxation => match (c.lower, c.upper) {
                (Some(lower), Some(upper)) => ChannelTarget::StatePair { lower, upper },
                _ => return Err(Error::config(path, "elec_relaxation needs `lower` and `upper`")),
            },
            ChannelKind::ElecDephasing => match c.state {
                Some(n) => ChannelTarget::State(n),
                None => return Err(Error::config(path, "elec_dephasing needs `state`")),
            },
            ChannelKind::VibHeating | ChannelKind::VibCooling | ChannelKind::VibDephasing => {
                match &c.mode {
                    Some(label) => ChannelTarget::Mode(label.clone()),
                    None => return Err(Error::config(path, "vibrational channel needs `mode`")),
                }
            }
        };
        // Reject stray target fields so typos do not pass silently.
        let extras = [
            (c.state.is_some(), "state", matches!(c.kind, ChannelKind::ElecDephasing)),
            (c.lower.is_some(), "lower", matches!(c.kind, ChannelKind::ElecRelaxation)),
            (c.upper.is_some(), "upper", matches!(c.kind, ChannelKind::ElecRelaxation)),
            (c.mode.is_some(), "mode", c.target_is_mode()),
        ];
        for (present, name, allowed) in extras {
            if present && !allowed {
                return Err(Error::config(path, format!("field `{name}` does not apply to {}", c.kind.name())));
            }
        }
        channels.push(DissipationChannel { kind: c.kind, target, rate_molecular: rate });
    }

    for (i, s) in raw.electronic_spectroscopy.iter().enumerate() {
        let path = format!("dissipation.electronic_spectroscopy[{i}]");
        let spec = ElectronicSpectroscopy {
            state: s.state,
            t2: s.t2.expect_time(&format!("{path}.t2"))?,
            t1: s.t1.map(|q| q.expect_time(&format!("{path}.t1"))).transpose()?,
            radiative_yield: s.radiative_yield,
            relaxation_partner: s.relaxation_partner,
        };
        channels.extend(rates::electronic_rates(&spec)?);
    }

    for (i, s) in raw.vibrational_spectroscopy.iter().enumerate() {
        let path = format!("dissipation.vibrational_spectroscopy[{i}]");
        let mode = model.mode(&s.mode).ok_or_else(|| {
            Error::config(format!("{path}.mode"), format!("unknown mode `{}`", s.mode))
        })?;
        let spec = VibrationalSpectroscopy {
            mode: s.mode.clone(),
            t1: s.t1.expect_time(&format!("{path}.t1"))?,
            t2: s.t2.map(|q| q.expect_time(&format!("{path}.t2"))).transpose()?,
        };
        channels.extend(rates::vibrational_rates(&spec, mode.frequency, temperature)?);
    }

    Ok(channels)
}

impl RawChannel {
    fn target_is_mode(&self) -> bool {
        matches!(
            self.kind,
            ChannelKind::VibHeating | ChannelKind::VibCooling | ChannelKind::VibDephasing
        )
    }
}

fn convert_hardware(raw: &RawHardware) -> Result<HardwareProfile> {
    let mut native_rates = std::collections::BTreeMap::new();
    for (kind, q) in &raw.native_rates {
        native_rates.insert(*kind, q.expect_angular(&format!("hardware.native_rates.{}", kind.name()))?);
    }
    let trap_modes = raw
        .trap_modes
        .iter()
        .map(|m| {
            Ok(TrapMode {
                label: m.label.clone(),
                frequency: m
                    .frequency
                    .expect_angular(&format!("hardware.trap_modes[{}].frequency", m.label))?,
                lamb_dicke: m.lamb_dicke,
                axis: m.axis,
                kappa: m.kappa,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HardwareProfile {
        native_rates,
        usable: raw.usable.clone(),
        trap_modes,
        limits: InteractionLimits {
            electronic_coupling_max: raw
                .limits
                .electronic_coupling_max
                .expect_angular("hardware.limits.electronic_coupling_max")?,
            tuning_max: raw.limits.tuning_max.expect_angular("hardware.limits.tuning_max")?,
            vibronic_coupling_max: raw
                .limits
                .vibronic_coupling_max
                .expect_angular("hardware.limits.vibronic_coupling_max")?,
        },
        closed_coherence_time: raw
            .closed_coherence_time
            .map(|q| q.expect_time("hardware.closed_coherence_time"))
            .transpose()?,
        ancilla: AncillaParams {
            decay_rate: raw.ancilla.decay_rate.expect_angular("hardware.ancilla.decay_rate")?,
            angular_factor: raw.ancilla.angular_factor,
        },
        pump: PumpParams {
            decay_to_target: raw.pump.decay_to_target.expect_angular("hardware.pump.decay_to_target")?,
            decay_back: raw.pump.decay_back.expect_angular("hardware.pump.decay_back")?,
            detuning: raw.pump.detuning.expect_angular("hardware.pump.detuning")?,
        },
        recoil: RecoilParams {
            scatter_rate: raw.recoil.scatter_rate.expect_angular("hardware.recoil.scatter_rate")?,
        },
        magnetic: raw.magnetic.clone(),
        voltage: raw.voltage.clone(),
        noise_correlation_time: raw
            .noise
            .correlation_time
            .expect_time("hardware.noise.correlation_time")?,
    })
}

fn convert_request(raw: &RawRequest, num_states: usize) -> Result<SimulationRequest> {
    Ok(SimulationRequest {
        duration: raw.duration.expect_time("request.duration")?,
        temperature: raw.temperature.expect_temperature("request.temperature")?,
        step: raw.step.map(|q| q.expect_time("request.step")).transpose()?,
        tolerance: raw.tolerance,
        output_points: raw.output_points,
        trajectories: raw.trajectories,
        seed: raw.seed,
        initial_electronic: raw.initial_electronic.unwrap_or(num_states - 1),
        max_dimension: raw.max_dimension,
        leak_threshold: raw.leak_threshold,
    })
}

/// Canonical serialisation of a parsed system (all values rad/s, s, K).
pub fn to_canonical_toml(system: &ParsedSystem) -> Result<String> {
    toml::to_string_pretty(system)
        .map_err(|e| Error::config("<canonical>", format!("serialisation failed: {e}")))
}

/// Reparse a canonical system document.
pub fn from_canonical_toml(text: &str) -> Result<ParsedSystem> {
    toml::from_str(text).map_err(|e| Error::config("<canonical>", e.message().to_string()))
}
