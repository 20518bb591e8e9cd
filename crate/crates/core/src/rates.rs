//! Conversion between spectroscopic observables and Lindblad channel rates.
//!
//! Time-resolved experiments report population decay and coherence times T1
//! and T2 for electronic states and vibrational modes, plus radiative
//! quantum yields. This module turns those into channel rates and enforces
//! thermal detailed balance for the vibrational pair.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ChannelKind, ChannelTarget, DissipationChannel};
use crate::units::KB_OVER_HBAR;

/// Spectroscopic constants for one electronic state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElectronicSpectroscopy {
    pub state: usize,
    /// Total coherence time T2, s.
    pub t2: f64,
    /// Population lifetime T1, s; `None` means no measurable decay.
    pub t1: Option<f64>,
    /// Radiative quantum yield Y_R in [0, 1].
    pub radiative_yield: f64,
    /// Lower state the radiative decay ends in; `None` suppresses the
    /// relaxation channel entirely.
    pub relaxation_partner: Option<usize>,
}

/// Spectroscopic constants for one vibrational mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VibrationalSpectroscopy {
    pub mode: String,
    /// Population relaxation time T1, s.
    pub t1: f64,
    /// Coherence time T2, s; `None` emits no dephasing channel.
    pub t2: Option<f64>,
}

/// Thermal constants tying a molecular mode to its simulator counterpart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalSpec {
    /// Boltzmann factor zeta^2 = exp(-nu_mol / kB T_mol).
    pub boltzmann_factor: f64,
    /// Temperature the simulator mode must mimic: (nu_sim/nu_mol) T_mol, K.
    pub simulator_temperature: f64,
}

/// Boltzmann factor exp(-nu/kB T) for an angular frequency (rad/s) and
/// temperature (K). T = 0 gives exactly 0.
pub fn boltzmann_factor(frequency: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        0.0
    } else {
        (-frequency / (KB_OVER_HBAR * temperature)).exp()
    }
}

/// Thermal mapping for a mode pair: molecular frequency -> simulator
/// frequency at matched Boltzmann factor.
pub fn thermal_spec(nu_molecular: f64, nu_simulator: f64, temperature: f64) -> ThermalSpec {
    ThermalSpec {
        boltzmann_factor: boltzmann_factor(nu_molecular, temperature),
        simulator_temperature: nu_simulator / nu_molecular * temperature,
    }
}

/// Electronic dephasing and relaxation rates from T1e/T2e and the radiative
/// yield: pure dephasing 1/T2 - 1/(2 T1), relaxation Y_R / T1.
pub fn electronic_rates(spec: &ElectronicSpectroscopy) -> Result<Vec<DissipationChannel>> {
    let path = format!("electronic_spectroscopy(state {})", spec.state);
    if spec.t2 <= 0.0 {
        return Err(Error::invalid(path, "T2 must be positive"));
    }
    let inv_t1 = match spec.t1 {
        Some(t1) if t1 <= 0.0 => return Err(Error::invalid(path, "T1 must be positive")),
        Some(t1) => {
            if spec.t2 > 2.0 * t1 * (1.0 + 1e-12) {
                return Err(Error::invalid(path, format!("T2 = {} exceeds 2*T1 = {}", spec.t2, 2.0 * t1)));
            }
            1.0 / t1
        }
        None => 0.0,
    };
    if !(0.0..=1.0).contains(&spec.radiative_yield) {
        return Err(Error::invalid(path, "radiative yield must lie in [0, 1]"));
    }
    let dephasing = 1.0 / spec.t2 - 0.5 * inv_t1;
    if dephasing < 0.0 {
        return Err(Error::invalid(path, format!("negative dephasing rate {dephasing}")));
    }
    let mut channels = vec![DissipationChannel {
        kind: ChannelKind::ElecDephasing,
        target: ChannelTarget::State(spec.state),
        rate_molecular: dephasing,
    }];
    if let Some(partner) = spec.relaxation_partner {
        channels.push(DissipationChannel {
            kind: ChannelKind::ElecRelaxation,
            target: ChannelTarget::StatePair { lower: partner, upper: spec.state },
            rate_molecular: spec.radiative_yield * inv_t1,
        });
    }
    Ok(channels)
}

/// Heating, cooling, and dephasing rates for one mode from T1v/T2v and the
/// environment temperature.
///
/// Solves the pair { cooling - heating = 1/T1v, heating = zeta^2 * cooling }
/// so the outputs satisfy detailed balance exactly.
pub fn vibrational_rates(
    spec: &VibrationalSpectroscopy,
    frequency: f64,
    temperature: f64,
) -> Result<Vec<DissipationChannel>> {
    let path = format!("vibrational_spectroscopy(mode {})", spec.mode);
    if spec.t1 <= 0.0 {
        return Err(Error::invalid(path, "T1 must be positive"));
    }
    let zeta2 = boltzmann_factor(frequency, temperature);
    if 1.0 - zeta2 < 1e-15 {
        return Err(Error::invalid(
            path,
            "Boltzmann factor is 1 (infinite temperature) but T1 is finite",
        ));
    }
    let cooling = 1.0 / (spec.t1 * (1.0 - zeta2));
    let heating = zeta2 * cooling;
    let mut channels = vec![
        DissipationChannel {
            kind: ChannelKind::VibCooling,
            target: ChannelTarget::Mode(spec.mode.clone()),
            rate_molecular: cooling,
        },
        DissipationChannel {
            kind: ChannelKind::VibHeating,
            target: ChannelTarget::Mode(spec.mode.clone()),
            rate_molecular: heating,
        },
    ];
    if let Some(t2) = spec.t2 {
        if t2 <= 0.0 {
            return Err(Error::invalid(path, "T2 must be positive"));
        }
        if t2 > 2.0 * spec.t1 * (1.0 + 1e-12) {
            return Err(Error::invalid(path, format!("T2 = {t2} exceeds 2*T1 = {}", 2.0 * spec.t1)));
        }
        let dephasing = 1.0 / t2 - 0.5 / spec.t1;
        if dephasing < 0.0 {
            return Err(Error::invalid(path, format!("negative dephasing rate {dephasing}")));
        }
        channels.push(DissipationChannel {
            kind: ChannelKind::VibDephasing,
            target: ChannelTarget::Mode(spec.mode.clone()),
            rate_molecular: dephasing,
        });
    }
    Ok(channels)
}

/// Invert heating/cooling/dephasing rates back to (T1v, T2v). Used for the
/// round-trip property; the forward map is [`vibrational_rates`].
pub fn invert_vibrational(cooling: f64, heating: f64, dephasing: Option<f64>) -> Result<(f64, Option<f64>)> {
    if cooling <= heating {
        return Err(Error::invalid("rates", "cooling must exceed heating"));
    }
    let t1 = 1.0 / (cooling - heating);
    let t2 = dephasing.map(|d| 1.0 / (d + 0.5 / t1));
    Ok((t1, t2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::RAD_PER_CM1;

    #[test]
    fn pure_dephasing_from_t2_only() {
        // T2 = 30 fs with no measurable T1 gives 3.33e13 1/s.
        let spec = ElectronicSpectroscopy {
            state: 1,
            t2: 30e-15,
            t1: None,
            radiative_yield: 0.0,
            relaxation_partner: None,
        };
        let channels = electronic_rates(&spec).unwrap();
        assert_eq!(channels.len(), 1);
        let gamma = channels[0].rate_molecular;
        assert!((gamma - 3.3333e13).abs() / 3.3333e13 < 1e-4);
    }

    #[test]
    fn lifetime_limited_coherence_has_zero_dephasing() {
        let spec = ElectronicSpectroscopy {
            state: 1,
            t2: 2.0e-12,
            t1: Some(1.0e-12),
            radiative_yield: 0.5,
            relaxation_partner: Some(0),
        };
        let channels = electronic_rates(&spec).unwrap();
        assert!(channels[0].rate_molecular.abs() < 1e-3);
        assert!((channels[1].rate_molecular - 0.5e12).abs() < 1.0);
    }

    #[test]
    fn zero_yield_gives_zero_relaxation() {
        let spec = ElectronicSpectroscopy {
            state: 1,
            t2: 30e-15,
            t1: Some(1.0e-9),
            radiative_yield: 0.0,
            relaxation_partner: Some(0),
        };
        let channels = electronic_rates(&spec).unwrap();
        assert_eq!(channels[1].rate_molecular, 0.0);
    }

    #[test]
    fn t2_beyond_2t1_is_rejected() {
        let spec = ElectronicSpectroscopy {
            state: 1,
            t2: 2.1e-12,
            t1: Some(1.0e-12),
            radiative_yield: 0.0,
            relaxation_partner: None,
        };
        assert!(electronic_rates(&spec).is_err());
    }

    #[test]
    fn boltzmann_factors_match_fitted_ratios() {
        // 112 cm-1 at 300 K: 0.584, close to the fitted 0.31/0.52 = 0.596.
        let z2 = boltzmann_factor(112.0 * RAD_PER_CM1, 300.0);
        assert!((z2 - 0.584).abs() < 5e-4, "{z2}");
        assert!((z2 / 0.596 - 1.0).abs() < 0.03);
        // 1016 cm-1 at 300 K: 7.65e-3, close to the fitted 0.0077.
        let z2 = boltzmann_factor(1016.0 * RAD_PER_CM1, 300.0);
        assert!((z2 - 7.65e-3).abs() < 5e-6, "{z2}");
        assert!((z2 / 0.0077 - 1.0).abs() < 0.03);
    }

    #[test]
    fn detailed_balance_holds_exactly() {
        let spec = VibrationalSpectroscopy { mode: "m".into(), t1: 1e-12, t2: None };
        let nu = 1016.0 * RAD_PER_CM1;
        let channels = vibrational_rates(&spec, nu, 300.0).unwrap();
        let cooling = channels[0].rate_molecular;
        let heating = channels[1].rate_molecular;
        let z2 = boltzmann_factor(nu, 300.0);
        assert!((heating / cooling - z2).abs() < 1e-15);
        assert!(((cooling - heating) - 1e12).abs() / 1e12 < 1e-12);
    }

    #[test]
    fn zero_temperature_limit() {
        let spec = VibrationalSpectroscopy { mode: "m".into(), t1: 2e-12, t2: None };
        let channels = vibrational_rates(&spec, 1e13, 0.0).unwrap();
        assert!((channels[0].rate_molecular - 0.5e12).abs() < 1e-3);
        assert_eq!(channels[1].rate_molecular, 0.0);
    }

    #[test]
    fn round_trip_rates_to_times() {
        let spec = VibrationalSpectroscopy { mode: "m".into(), t1: 1.3e-12, t2: Some(0.4e-12) };
        let nu = 500.0 * RAD_PER_CM1;
        let channels = vibrational_rates(&spec, nu, 300.0).unwrap();
        let (t1, t2) = invert_vibrational(
            channels[0].rate_molecular,
            channels[1].rate_molecular,
            Some(channels[2].rate_molecular),
        )
        .unwrap();
        assert!((t1 - spec.t1).abs() / spec.t1 < 1e-12);
        assert!((t2.unwrap() - spec.t2.unwrap()).abs() / spec.t2.unwrap() < 1e-12);
    }

    #[test]
    fn simulator_temperature_scales_with_frequency() {
        let ts = thermal_spec(2.1e13, 8.4e6, 300.0);
        assert!((ts.simulator_temperature - 8.4e6 / 2.1e13 * 300.0).abs() < 1e-12);
        assert!(ts.boltzmann_factor > 0.0 && ts.boltzmann_factor < 1.0);
    }
}
