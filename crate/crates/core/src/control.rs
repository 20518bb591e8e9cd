//! Synthesis of hardware control parameters from injected-rate targets.
//!
//! Each planner inverts the corresponding rate formula exactly and then
//! forward-evaluates it on the synthesized parameters; the round trip must
//! reproduce the target to 1e-9 relative or the synthesis reports a
//! numerical failure. Validity conditions (adiabatic elimination, motional
//! narrowing) are checked and surfaced as flags or errors, never silently
//! clamped.
//!
//! Noise-driven dephasing uses the motional-narrowing correspondence for an
//! exponentially correlated zero-mean process with variance `s2` and
//! correlation time `tau_c` coupled through an operator `O`: the ensemble
//! average obeys the dissipator `D[O]` at rate `gamma = 2 * s2 * tau_c`
//! (the coherence between eigenvalues of `O` separated by `dO` decays at
//! `s2 * tau_c * dO^2`). The stochastic verifier checks exactly this
//! correspondence against trajectory ensembles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::both_renderings;

/// Relative round-trip tolerance every synthesis must satisfy.
pub const ROUND_TRIP_TOL: f64 = 1e-9;
/// Adiabatic-elimination warning threshold on drive/linewidth ratios.
pub const ADIABATIC_WARN_RATIO: f64 = 0.1;
/// Motional-narrowing validity threshold on `tau_c * gamma`.
pub const NARROWING_LIMIT: f64 = 0.1;

/// Lindblad rate equivalent to exponentially correlated frequency noise of
/// variance `variance` (rad^2/s^2) and correlation time `tau_c` (s).
pub fn dephasing_rate(variance: f64, tau_c: f64) -> f64 {
    2.0 * variance * tau_c
}

/// Effective pumped decay rate for drive strength `omega` through an
/// auxiliary level with branching decays `gamma_nl` (to the target) and
/// `gamma_ml` (back), detuned by `detuning`.
pub fn pump_rate(omega: f64, gamma_nl: f64, gamma_ml: f64, detuning: f64) -> f64 {
    let total = gamma_nl + gamma_ml;
    omega * omega * gamma_nl / (total * total + 4.0 * detuning * detuning)
}

/// Injected sideband rate for the resonant tone of strength `omega` on a
/// mode at trap frequency `nu`, including the angular off-resonant term.
pub fn sideband_rate(omega: f64, eta: f64, linewidth: f64, nu: f64, alpha: f64) -> f64 {
    let resonant = omega * omega / (linewidth * linewidth);
    let off_resonant = alpha * omega * omega / (linewidth * linewidth + 4.0 * nu * nu);
    eta * eta * linewidth * (resonant + off_resonant)
}

/// Photon-recoil heating from optical pumping: quadratic in the Lamb-Dicke
/// parameter.
pub fn recoil_heating_estimate(scatter_rate: f64, eta: f64) -> f64 {
    scatter_rate * eta * eta
}

fn check_round_trip(context: &str, target: f64, achieved: f64) -> Result<()> {
    let scale = target.abs().max(f64::MIN_POSITIVE);
    if (achieved - target).abs() > ROUND_TRIP_TOL * scale {
        return Err(Error::numerics(
            context,
            format!("round trip failed: target {target:.12e}, achieved {achieved:.12e}"),
        ));
    }
    Ok(())
}

/// Optical-pumping plan for one injected electronic-relaxation rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PumpPlan {
    pub channel: String,
    /// Target injected rate, 1/s.
    pub target: f64,
    /// Synthesized drive strength, rad/s.
    pub drive_strength: f64,
    pub detuning: f64,
    pub decay_to_target: f64,
    pub decay_back: f64,
    /// Forward-evaluated rate, 1/s.
    pub achieved: f64,
    /// Omega / Gamma_nl; adiabatic elimination assumes this is small.
    pub validity_ratio: f64,
    pub validity_warning: bool,
    /// Side-effect heating estimate, 1/s.
    pub recoil_heating: f64,
}

/// Synthesize the pump drive for a target injected relaxation rate.
pub fn synth_pump(
    channel: &str,
    target: f64,
    gamma_nl: f64,
    gamma_ml: f64,
    detuning: f64,
    recoil_scatter_rate: f64,
    eta: f64,
) -> Result<PumpPlan> {
    if target < 0.0 {
        return Err(Error::invalid(channel, "pump target must be non-negative"));
    }
    if target > 0.0 && gamma_nl <= 0.0 {
        return Err(Error::invalid(channel, "auxiliary decay rate must be positive"));
    }
    let total = gamma_nl + gamma_ml;
    let omega = if target == 0.0 {
        0.0
    } else {
        (target * (total * total + 4.0 * detuning * detuning) / gamma_nl).sqrt()
    };
    let ratio = if gamma_nl > 0.0 { omega / gamma_nl } else { 0.0 };
    if ratio > 1.0 {
        return Err(Error::infeasible(
            channel,
            format!(
                "pump drive {omega:.3e} rad/s exceeds the auxiliary linewidth {gamma_nl:.3e}; \
                 adiabatic elimination is invalid"
            ),
        ));
    }
    let achieved = pump_rate(omega, gamma_nl, gamma_ml, detuning);
    check_round_trip(channel, target, achieved)?;
    Ok(PumpPlan {
        channel: channel.to_string(),
        target,
        drive_strength: omega,
        detuning,
        decay_to_target: gamma_nl,
        decay_back: gamma_ml,
        achieved,
        validity_ratio: ratio,
        validity_warning: ratio > ADIABATIC_WARN_RATIO,
        recoil_heating: recoil_heating_estimate(recoil_scatter_rate, eta),
    })
}

/// How the two sideband tones are targeted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SidebandTargets {
    /// Independent injected rates per tone (budget-driven).
    PerTone { cooling: f64, heating: f64 },
    /// Cooling target plus thermal consistency: the heating tone follows
    /// the Boltzmann factor after subtracting native contributions.
    Thermal {
        cooling: f64,
        boltzmann_factor: f64,
        native_cooling: f64,
        native_heating: f64,
    },
}

/// Bichromatic sideband plan for one mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidebandPlan {
    pub mode: String,
    /// Red/blue tone strengths, rad/s.
    pub omega_cooling: f64,
    pub omega_heating: f64,
    /// Tone detunings (-nu, +nu), rad/s.
    pub detuning_cooling: f64,
    pub detuning_heating: f64,
    pub lamb_dicke: f64,
    pub linewidth: f64,
    pub angular_factor: f64,
    pub target_cooling: f64,
    pub target_heating: f64,
    pub achieved_cooling: f64,
    pub achieved_heating: f64,
    /// Omega_+/Omega_- when both tones are driven.
    pub tone_ratio: Option<f64>,
    /// max(Omega +-)/linewidth.
    pub validity_ratio: f64,
    pub validity_warning: bool,
    /// Set when native cooling already exceeds the thermal heating need, so
    /// no blue tone is driven.
    pub native_exceeds_thermal: bool,
}

/// Synthesize the bichromatic tone strengths for one mode.
pub fn synth_sideband(
    mode: &str,
    targets: SidebandTargets,
    eta: f64,
    linewidth: f64,
    trap_frequency: f64,
    alpha: f64,
) -> Result<SidebandPlan> {
    if eta <= 0.0 || linewidth <= 0.0 {
        return Err(Error::invalid(
            format!("sideband({mode})"),
            "Lamb-Dicke parameter and linewidth must be positive",
        ));
    }
    // gamma = coefficient * Omega^2 for the resonant tone
    let coefficient = eta * eta * linewidth
        * (1.0 / (linewidth * linewidth)
            + alpha / (linewidth * linewidth + 4.0 * trap_frequency * trap_frequency));

    let (cooling_target, heating_target, native_exceeds) = match targets {
        SidebandTargets::PerTone { cooling, heating } => {
            if cooling < 0.0 || heating < 0.0 {
                return Err(Error::invalid(format!("sideband({mode})"), "targets must be non-negative"));
            }
            (cooling, heating, false)
        }
        SidebandTargets::Thermal { cooling, boltzmann_factor, native_cooling, native_heating } => {
            if cooling < 0.0 {
                return Err(Error::invalid(format!("sideband({mode})"), "targets must be non-negative"));
            }
            // detailed balance on the totals:
            // heating_inj = z^2 (cooling_nat + cooling_inj) - heating_nat
            let heating = boltzmann_factor * (native_cooling + cooling) - native_heating;
            if heating < 0.0 {
                (cooling, 0.0, true)
            } else {
                (cooling, heating, false)
            }
        }
    };

    let omega_cooling = (cooling_target / coefficient).sqrt();
    let omega_heating = (heating_target / coefficient).sqrt();
    let achieved_cooling = sideband_rate(omega_cooling, eta, linewidth, trap_frequency, alpha);
    let achieved_heating = sideband_rate(omega_heating, eta, linewidth, trap_frequency, alpha);
    check_round_trip(&format!("sideband({mode}) cooling"), cooling_target, achieved_cooling)?;
    check_round_trip(&format!("sideband({mode}) heating"), heating_target, achieved_heating)?;
    let max_omega = omega_cooling.max(omega_heating);
    let ratio = max_omega / linewidth;
    Ok(SidebandPlan {
        mode: mode.to_string(),
        omega_cooling,
        omega_heating,
        detuning_cooling: -trap_frequency,
        detuning_heating: trap_frequency,
        lamb_dicke: eta,
        linewidth,
        angular_factor: alpha,
        target_cooling: cooling_target,
        target_heating: heating_target,
        achieved_cooling,
        achieved_heating,
        tone_ratio: if omega_cooling > 0.0 { Some(omega_heating / omega_cooling) } else { None },
        validity_ratio: ratio,
        validity_warning: ratio > ADIABATIC_WARN_RATIO,
        native_exceeds_thermal: native_exceeds,
    })
}

/// One broadband tone pair serving every mode at similar rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalSidebandPlan {
    pub omega_cooling: f64,
    pub omega_heating: f64,
    pub linewidth: f64,
    pub angular_factor: f64,
    /// Whether the equal-parameters premise holds (eta and nu within 5%).
    pub premise_ok: bool,
    pub per_mode: Vec<GlobalSidebandRow>,
    /// Any mode off its target by more than 15%.
    pub spread_flag: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalSidebandRow {
    pub mode: String,
    pub target_cooling: f64,
    pub achieved_cooling: f64,
    pub target_heating: f64,
    pub achieved_heating: f64,
    pub relative_error: f64,
}

/// Plan one global tone pair from per-mode targets. The reference mode (the
/// one with the largest cooling target) is met exactly; the others follow
/// their own Lamb-Dicke parameters and frequencies.
pub fn synth_global_sideband(
    targets: &[(String, f64, f64)], // (mode, cooling, heating)
    etas: &[f64],
    nus: &[f64],
    linewidth: f64,
    alpha: f64,
) -> Result<GlobalSidebandPlan> {
    if targets.is_empty() || targets.len() != etas.len() || targets.len() != nus.len() {
        return Err(Error::invalid("global_sideband", "need matching targets, etas, and frequencies"));
    }
    let spread = |values: &[f64]| -> f64 {
        let max = values.iter().cloned().fold(f64::MIN, f64::max);
        let min = values.iter().cloned().fold(f64::MAX, f64::min);
        if min <= 0.0 { f64::INFINITY } else { max / min - 1.0 }
    };
    let premise_ok = spread(etas) <= 0.05 && spread(nus) <= 0.05;
    let reference = targets
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let coeff = |eta: f64, nu: f64| {
        eta * eta
            * linewidth
            * (1.0 / (linewidth * linewidth) + alpha / (linewidth * linewidth + 4.0 * nu * nu))
    };
    let c_ref = coeff(etas[reference], nus[reference]);
    let omega_cooling = (targets[reference].1 / c_ref).sqrt();
    let omega_heating = (targets[reference].2 / c_ref).sqrt();
    let mut per_mode = Vec::with_capacity(targets.len());
    let mut spread_flag = false;
    for (i, (mode, cool_t, heat_t)) in targets.iter().enumerate() {
        let achieved_cooling = sideband_rate(omega_cooling, etas[i], linewidth, nus[i], alpha);
        let achieved_heating = sideband_rate(omega_heating, etas[i], linewidth, nus[i], alpha);
        let rel = if *cool_t > 0.0 { (achieved_cooling - cool_t).abs() / cool_t } else { 0.0 };
        if rel > 0.15 {
            spread_flag = true;
        }
        per_mode.push(GlobalSidebandRow {
            mode: mode.clone(),
            target_cooling: *cool_t,
            achieved_cooling,
            target_heating: *heat_t,
            achieved_heating,
            relative_error: rel,
        });
    }
    Ok(GlobalSidebandPlan {
        omega_cooling,
        omega_heating,
        linewidth,
        angular_factor: alpha,
        premise_ok,
        per_mode,
        spread_flag,
    })
}

/// What a stochastic dephasing plan acts on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseTarget {
    ModeDephasing(String),
    StateDephasing(usize),
}

impl NoiseTarget {
    pub fn label(&self) -> String {
        match self {
            NoiseTarget::ModeDephasing(m) => format!("mode {m}"),
            NoiseTarget::StateDephasing(n) => format!("state {n}"),
        }
    }
}

/// Frequency-noise plan for one dephasing channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisePlan {
    pub target: NoiseTarget,
    /// Target injected rate, 1/s.
    pub target_rate: f64,
    /// Noise variance, rad^2/s^2.
    pub variance: f64,
    /// Correlation time, s.
    pub correlation_time: f64,
    /// Forward-evaluated rate 2 * variance * tau_c, 1/s.
    pub achieved: f64,
    /// tau_c * gamma, must stay below [`NARROWING_LIMIT`].
    pub narrowing_product: f64,
}

impl NoisePlan {
    pub fn rms(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Synthesize the noise variance for a target dephasing rate at fixed
/// correlation time.
pub fn synth_dephasing_noise(target: NoiseTarget, rate: f64, tau_c: f64) -> Result<NoisePlan> {
    let label = format!("dephasing_noise({})", target.label());
    if rate < 0.0 {
        return Err(Error::invalid(label, "target rate must be non-negative"));
    }
    if tau_c <= 0.0 {
        return Err(Error::invalid(label, "correlation time must be positive"));
    }
    let product = tau_c * rate;
    if product > NARROWING_LIMIT {
        return Err(Error::infeasible(
            label,
            format!(
                "correlation time {tau_c:.3e} s violates motional narrowing for rate \
                 {rate:.3e} 1/s (tau_c * gamma = {product:.3e} > {NARROWING_LIMIT}); \
                 use tau_c <= {:.3e} s",
                NARROWING_LIMIT / rate.max(f64::MIN_POSITIVE)
            ),
        ));
    }
    let variance = rate / (2.0 * tau_c);
    let achieved = dephasing_rate(variance, tau_c);
    check_round_trip(&label, rate, achieved)?;
    Ok(NoisePlan {
        target,
        target_rate: rate,
        variance,
        correlation_time: tau_c,
        achieved,
        narrowing_product: product,
    })
}

/// Global electronic dephasing through current noise in the field solenoid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagneticPlan {
    /// Current-noise variance, A^2.
    pub current_variance: f64,
    pub correlation_time: f64,
    /// State served exactly.
    pub reference_state: usize,
    pub per_state: Vec<GlobalRateRow>,
    pub spread_flag: bool,
    pub spread_bound: f64,
}

/// Global vibrational dephasing through trap-voltage noise, with
/// independent RF (radial) and DC (axial) knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoltagePlan {
    /// Voltage-noise variances, V^2.
    pub rf_variance: f64,
    pub dc_variance: f64,
    pub correlation_time: f64,
    pub per_mode: Vec<GlobalRateRow>,
    pub spread_flag: bool,
    pub spread_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalRateRow {
    pub label: String,
    pub target: f64,
    pub achieved: f64,
    pub relative_error: f64,
}

/// Default tolerated per-target deviation for the global schemes.
pub const GLOBAL_SPREAD_BOUND: f64 = 0.20;

/// Shared worker for the global noise planners: one variance knob, a
/// quadratic sensitivity per target. Serves the largest target exactly.
fn synth_global_noise(
    context: &str,
    labels: &[String],
    targets: &[f64],
    sensitivities: &[f64],
    tau_c: f64,
    spread_bound: f64,
) -> Result<(f64, Vec<GlobalRateRow>, bool, usize)> {
    if targets.is_empty() {
        return Ok((0.0, Vec::new(), false, 0));
    }
    let mut reference = None;
    for (i, &t) in targets.iter().enumerate() {
        if t < 0.0 {
            return Err(Error::invalid(context, "targets must be non-negative"));
        }
        if t > 0.0 && sensitivities[i] == 0.0 {
            return Err(Error::infeasible(
                context,
                format!("`{}` has zero sensitivity but a nonzero target", labels[i]),
            ));
        }
        if t * tau_c > NARROWING_LIMIT {
            return Err(Error::infeasible(
                context,
                format!(
                    "target for `{}` violates motional narrowing (tau_c * gamma = {:.3e})",
                    labels[i],
                    t * tau_c
                ),
            ));
        }
        let better = match reference {
            None => true,
            Some(r) => t > targets[r],
        };
        if better {
            reference = Some(i);
        }
    }
    let reference = reference.unwrap();
    // gamma_i = 2 s_i^2 <dX^2> tau_c; meet the largest target exactly.
    let variance = if targets[reference] == 0.0 {
        0.0
    } else {
        targets[reference] / (2.0 * sensitivities[reference].powi(2) * tau_c)
    };
    let mut rows = Vec::with_capacity(targets.len());
    let mut spread_flag = false;
    for (i, &t) in targets.iter().enumerate() {
        let achieved = 2.0 * sensitivities[i].powi(2) * variance * tau_c;
        let rel = if t > 0.0 { (achieved - t).abs() / t } else { 0.0 };
        if rel > spread_bound {
            spread_flag = true;
        }
        rows.push(GlobalRateRow { label: labels[i].clone(), target: t, achieved, relative_error: rel });
    }
    check_round_trip(context, targets[reference], rows[reference].achieved)?;
    Ok((variance, rows, spread_flag, reference))
}

/// Choose the solenoid current-noise variance for per-state dephasing
/// targets. `field_sensitivities` are d(omega_n)/dB in rad/(s*T);
/// `field_per_current` is dB/dI in T/A.
pub fn synth_global_magnetic(
    targets: &[f64],
    field_sensitivities: &[f64],
    field_per_current: f64,
    tau_c: f64,
    spread_bound: f64,
) -> Result<MagneticPlan> {
    if targets.len() != field_sensitivities.len() {
        return Err(Error::invalid("global_magnetic", "one sensitivity per state required"));
    }
    if !field_sensitivities.iter().any(|&s| s != 0.0) {
        return Err(Error::invalid("global_magnetic", "need at least one magnetically sensitive state"));
    }
    let labels: Vec<String> = (0..targets.len()).map(|n| format!("state {n}")).collect();
    let combined: Vec<f64> = field_sensitivities.iter().map(|s| s * field_per_current).collect();
    let (variance, rows, spread_flag, reference) =
        synth_global_noise("global_magnetic", &labels, targets, &combined, tau_c, spread_bound)?;
    Ok(MagneticPlan {
        current_variance: variance,
        correlation_time: tau_c,
        reference_state: reference,
        per_state: rows,
        spread_flag,
        spread_bound,
    })
}

/// Choose RF and DC voltage-noise variances for per-mode dephasing targets.
/// Radial modes hang off the RF knob, axial modes off the DC knob;
/// effective sensitivity of mode i is `kappa_i * d(nu_axis0)/dV`.
pub fn synth_global_voltage(
    radial: &[(String, f64, f64)], // (label, target, kappa)
    axial: &[(String, f64, f64)],
    rf_sensitivity: f64,
    dc_sensitivity: f64,
    tau_c: f64,
    spread_bound: f64,
) -> Result<VoltagePlan> {
    let plan_axis = |entries: &[(String, f64, f64)], base: f64, name: &str| {
        let labels: Vec<String> = entries.iter().map(|(l, _, _)| l.clone()).collect();
        let targets: Vec<f64> = entries.iter().map(|(_, t, _)| *t).collect();
        let sens: Vec<f64> = entries.iter().map(|(_, _, k)| k * base).collect();
        synth_global_noise(name, &labels, &targets, &sens, tau_c, spread_bound)
    };
    let (rf_variance, mut rows, rf_flag, _) = plan_axis(radial, rf_sensitivity, "global_voltage(rf)")?;
    let (dc_variance, dc_rows, dc_flag, _) = plan_axis(axial, dc_sensitivity, "global_voltage(dc)")?;
    rows.extend(dc_rows);
    Ok(VoltagePlan {
        rf_variance,
        dc_variance,
        correlation_time: tau_c,
        per_mode: rows,
        spread_flag: rf_flag || dc_flag,
        spread_bound,
    })
}

/// Human-readable one-liner for report tables, in both conventions.
pub fn strength_summary(name: &str, omega: f64) -> String {
    format!("{name} = {}", both_renderings(omega))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    const TAU: f64 = std::f64::consts::TAU;

    #[test]
    fn pump_resonant_limit() {
        // Delta = 0, Gamma_ml = 0: Omega = sqrt(gamma * Gamma_nl)
        let gamma_nl = TAU * 20e6;
        let plan = synth_pump("c", 10.0, gamma_nl, 0.0, 0.0, 0.0, 0.0).unwrap();
        assert!((plan.drive_strength - (10.0 * gamma_nl).sqrt()).abs() < 1e-6);
        // 2pi * 5.64 kHz
        assert!((plan.drive_strength / TAU - 5641.9).abs() < 1.0);
        assert!((plan.validity_ratio - 2.8e-4).abs() < 1e-5);
        assert!(!plan.validity_warning);
    }

    #[test]
    fn pump_zero_target_means_no_drive() {
        let plan = synth_pump("c", 0.0, TAU * 20e6, 0.0, 0.0, 0.02, 0.1).unwrap();
        assert_eq!(plan.drive_strength, 0.0);
        assert_eq!(plan.achieved, 0.0);
        assert!((plan.recoil_heating - 2e-4).abs() < 1e-19);
    }

    #[test]
    fn pump_infeasible_when_drive_exceeds_linewidth() {
        let gamma_nl = 100.0;
        let err = synth_pump("c", 1e6, gamma_nl, 0.0, 0.0, 0.0, 0.0).unwrap_err();
        assert!(err.to_string().contains("adiabatic"), "{err}");
    }

    #[test]
    fn recoil_estimate_cases() {
        assert!((recoil_heating_estimate(0.02, 0.1) - 2e-4).abs() < 1e-19);
        assert_eq!(recoil_heating_estimate(5.0, 0.0), 0.0);
        assert_eq!(recoil_heating_estimate(1.0, 1.0), 1.0);
    }

    #[test]
    fn sideband_round_trip_and_tone_ratio() {
        let plan = synth_sideband(
            "nu1",
            SidebandTargets::Thermal {
                cooling: 8.6,
                boltzmann_factor: 0.584,
                native_cooling: 0.0,
                native_heating: 0.0,
            },
            0.1,
            TAU * 20e6,
            TAU * 1.34e6,
            0.4,
        )
        .unwrap();
        assert!((plan.achieved_cooling - 8.6).abs() < 1e-8);
        // with no native contribution the tone ratio is the square root of
        // the Boltzmann factor
        let zeta = 0.584f64.sqrt();
        assert!((plan.tone_ratio.unwrap() - zeta).abs() < 1e-12);
        assert!(!plan.validity_warning);
    }

    #[test]
    fn sideband_zero_temperature_has_no_blue_tone() {
        let plan = synth_sideband(
            "m",
            SidebandTargets::Thermal {
                cooling: 5.0,
                boltzmann_factor: 0.0,
                native_cooling: 0.1,
                native_heating: 0.0,
            },
            0.1,
            TAU * 20e6,
            TAU * 1.0e6,
            0.4,
        )
        .unwrap();
        assert_eq!(plan.omega_heating, 0.0);
        assert_eq!(plan.achieved_heating, 0.0);
    }

    #[test]
    fn sideband_native_cooling_can_exceed_thermal_need() {
        // native heating already above z^2 * total cooling
        let plan = synth_sideband(
            "m",
            SidebandTargets::Thermal {
                cooling: 0.5,
                boltzmann_factor: 0.01,
                native_cooling: 0.2,
                native_heating: 0.5,
            },
            0.1,
            TAU * 20e6,
            TAU * 1.0e6,
            0.4,
        )
        .unwrap();
        assert!(plan.native_exceeds_thermal);
        assert_eq!(plan.omega_heating, 0.0);
    }

    #[test]
    fn global_sideband_serves_similar_modes() {
        let targets = vec![
            ("a".to_string(), 20.0, 2.0),
            ("b".to_string(), 20.0, 2.0),
            ("c".to_string(), 20.0, 2.0),
        ];
        let etas = [0.100, 0.101, 0.099];
        let nus = [TAU * 1.00e6, TAU * 1.02e6, TAU * 0.99e6];
        let plan = synth_global_sideband(&targets, &etas, &nus, TAU * 20e6, 0.4).unwrap();
        assert!(plan.premise_ok);
        assert!(!plan.spread_flag, "{:?}", plan.per_mode);
        for row in &plan.per_mode {
            assert!(row.relative_error <= 0.15);
        }
    }

    #[test]
    fn noise_plan_variance_and_narrowing_guard() {
        let plan = synth_dephasing_noise(NoiseTarget::StateDephasing(1), 2000.0, 1e-5).unwrap();
        // gamma = 2 s2 tau_c  =>  s2 = gamma / (2 tau_c) = 1e8 rad^2/s^2
        assert!((plan.variance - 1.0e8).abs() < 1e-3);
        assert!((plan.rms() - 1.0e4).abs() < 1e-7);
        assert!((plan.achieved - 2000.0).abs() < 1e-9 * 2000.0);
        // gamma = 0 gives zero variance
        let zero = synth_dephasing_noise(NoiseTarget::StateDephasing(0), 0.0, 1e-5).unwrap();
        assert_eq!(zero.variance, 0.0);
        // too-long correlation time is rejected with a suggestion
        let err = synth_dephasing_noise(NoiseTarget::StateDephasing(1), 2000.0, 1e-3).unwrap_err();
        assert!(err.to_string().contains("tau_c"), "{err}");
    }

    #[test]
    fn magnetic_equal_sensitivities_serve_equal_targets_exactly() {
        let plan = synth_global_magnetic(&[50.0, 50.0], &[1e10, 1e10], 1e-4, 1e-5, 0.2).unwrap();
        assert!(!plan.spread_flag);
        for row in &plan.per_state {
            assert!((row.achieved - 50.0).abs() < 1e-7);
        }
    }

    #[test]
    fn magnetic_sensitivity_ratio_two_gives_achieved_ratio_four() {
        let plan = synth_global_magnetic(&[50.0, 50.0], &[2e10, 1e10], 1e-4, 1e-5, 0.2).unwrap();
        assert!(plan.spread_flag);
        let r0 = plan.per_state[0].achieved;
        let r1 = plan.per_state[1].achieved;
        assert!((r0 / r1 - 4.0).abs() < 1e-9);
        // the larger-sensitivity state is served exactly (it carries the
        // largest-target tie at lower variance)
        assert!((r0 - 50.0).abs() < 1e-7);
    }

    #[test]
    fn magnetic_unit_constants_variance() {
        let plan = synth_global_magnetic(&[3.0], &[1.0], 1.0, 1e-2, 0.2).unwrap();
        // <dI^2> = gamma / (2 tau_c) with unit sensitivities
        assert!((plan.current_variance - 3.0 / (2.0 * 1e-2)).abs() < 1e-9);
    }

    #[test]
    fn magnetic_zero_sensitivity_with_target_fails() {
        let err = synth_global_magnetic(&[1.0, 1.0], &[1e10, 0.0], 1e-4, 1e-5, 0.2).unwrap_err();
        assert!(err.to_string().contains("zero sensitivity"), "{err}");
    }

    #[test]
    fn voltage_knobs_are_independent() {
        let radial = vec![("r1".to_string(), 25.5, 1.0), ("r2".to_string(), 25.0, 1.01)];
        let axial = vec![("z1".to_string(), 0.0, 1.0)];
        let plan = synth_global_voltage(&radial, &axial, 1e9, 1e9, 1e-5, 0.2).unwrap();
        assert!(plan.rf_variance > 0.0);
        assert_eq!(plan.dc_variance, 0.0);
        // all-kappa-equal modes are served near-exactly
        assert!((plan.per_mode[0].achieved - 25.5).abs() < 1e-7);
    }

    #[test]
    fn randomized_round_trips_for_every_plan_type() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(20260810);
        for _ in 0..1000 {
            let target = 10f64.powf(rng.gen_range(-3.0..4.0));
            let gamma_nl = 10f64.powf(rng.gen_range(7.0..9.0));
            let gamma_ml = 10f64.powf(rng.gen_range(5.0..8.0));
            let detuning = rng.gen_range(-1e8..1e8);
            let plan = synth_pump("rt", target, gamma_nl, gamma_ml, detuning, 0.0, 0.0).unwrap();
            assert!((plan.achieved - target).abs() <= 1e-9 * target);

            let eta = rng.gen_range(0.05..0.2);
            let linewidth = 10f64.powf(rng.gen_range(7.5..8.5));
            let nu = 10f64.powf(rng.gen_range(6.5..7.5));
            let cooling = 10f64.powf(rng.gen_range(-2.0..3.0));
            let heating = cooling * rng.gen_range(0.0..1.0);
            let plan = synth_sideband(
                "rt",
                SidebandTargets::PerTone { cooling, heating },
                eta,
                linewidth,
                nu,
                0.4,
            )
            .unwrap();
            assert!((plan.achieved_cooling - cooling).abs() <= 1e-9 * cooling);
            assert!((plan.achieved_heating - heating).abs() <= 1e-9 * heating.max(1e-300));

            let tau_c = 10f64.powf(rng.gen_range(-6.0..-4.0));
            let rate = rng.gen_range(0.0..0.09) / tau_c;
            let plan = synth_dephasing_noise(NoiseTarget::StateDephasing(0), rate, tau_c).unwrap();
            assert!((plan.achieved - rate).abs() <= 1e-9 * rate.max(1e-300));

            let sens: Vec<f64> = (0..3).map(|_| 10f64.powf(rng.gen_range(9.0..11.0))).collect();
            let top = rng.gen_range(0.1..0.09 / tau_c);
            let targets: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..1.0) * top).collect();
            let plan = synth_global_magnetic(&targets, &sens, 1e-4, tau_c, 0.2).unwrap();
            let reference = plan.reference_state;
            assert!(
                (plan.per_state[reference].achieved - targets[reference]).abs()
                    <= 1e-9 * targets[reference].max(1e-300)
            );
        }
    }
}
