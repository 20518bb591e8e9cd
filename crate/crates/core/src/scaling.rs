//! Scaling-factor window and per-channel injection budget.
//!
//! The simulator runs at `H_sim = F * H_mol`, `gamma_sim = F * gamma_mol`.
//! The feasible window for `F` is bounded above by hardware interaction
//! maxima and below by the simulator coherence time and by the requirement
//! that every injected rate be non-negative: `F >= R = max_i
//! gamma_i_nat/gamma_i_mol` over usable channels.
//!
//! Coherence times are modelled as reciprocal summed rates: the closed
//! budget counts every native rate, the open budget only the rates that are
//! not being used as a simulation resource. Using some of the native noise
//! therefore always extends the usable duration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    ChannelKind, ChannelTarget, DissipationChannel, HardwareProfile, LvcModel, SimulationRequest,
};

/// Rounding slack on injected rates at the window boundary, relative to the
/// simulated rate.
pub const INJECTION_ROUNDING: f64 = 1e-9;

/// Scaling window and chosen factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPlan {
    /// Closed-system window.
    pub closed_min: f64,
    pub closed_max: f64,
    /// Open-system window.
    pub open_min: f64,
    pub open_max: f64,
    /// R = max over usable channels of native/molecular rate.
    pub native_ratio: f64,
    /// Channel that sets R, when any.
    pub binding_channel: Option<String>,
    /// Hamiltonian term family that sets the upper bound.
    pub binding_limit: String,
    /// Modelled coherence times, s (open may be infinite).
    pub tau_closed: f64,
    pub tau_open: f64,
    /// Longest simulable molecular time in each setting, s.
    pub t_max_closed: f64,
    pub t_max_open: f64,
    /// Chosen scale factor.
    pub scale: f64,
}

/// Policy for picking `F` inside the open-system window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalePolicy {
    /// Smallest feasible `F`: maximal use of native dissipation, minimal
    /// injection.
    MinimalInjection,
    /// Largest feasible `F`: maximal simulated duration.
    MaxDuration,
}

/// One channel row of the injection budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetRow {
    pub channel: String,
    pub kind: ChannelKind,
    pub target: ChannelTarget,
    /// 1/s
    pub rate_molecular: f64,
    pub rate_simulator: f64,
    pub rate_native: f64,
    pub rate_injected: f64,
}

/// The full native/injected split at a chosen scale factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectionBudget {
    pub scale: f64,
    pub rows: Vec<BudgetRow>,
}

/// Native kinds actually usable for this molecule: flagged usable and
/// matched by at least one molecular channel with a positive rate.
fn used_kinds(channels: &[DissipationChannel], hardware: &HardwareProfile) -> Vec<ChannelKind> {
    ChannelKind::ALL
        .into_iter()
        .filter(|&kind| {
            hardware.is_usable(kind)
                && channels
                    .iter()
                    .any(|c| c.kind == kind && c.rate_molecular > 0.0)
        })
        .collect()
}

/// Compute the closed- and open-system scaling windows.
pub fn compute_window(
    channels: &[DissipationChannel],
    hardware: &HardwareProfile,
    request: &SimulationRequest,
    model: &LvcModel,
) -> Result<ScalingPlan> {
    let strengths = model.max_term_strengths();
    let limits = &hardware.limits;
    let mut closed_max = f64::INFINITY;
    let mut binding_limit = "none (no engineered interactions)".to_string();
    let candidates = [
        ("electronic coupling", limits.electronic_coupling_max, strengths.electronic_coupling),
        ("tuning", limits.tuning_max, strengths.tuning),
        ("vibronic coupling", limits.vibronic_coupling_max, strengths.vibronic_coupling),
    ];
    for (name, max, strongest) in candidates {
        if strongest > 0.0 {
            let bound = max / strongest;
            if bound < closed_max {
                closed_max = bound;
                binding_limit = name.to_string();
            }
        }
    }

    let all_native: f64 = hardware.native_rates.values().sum();
    let tau_closed = hardware
        .closed_coherence_time
        .unwrap_or(if all_native > 0.0 { 1.0 / all_native } else { f64::INFINITY });

    let used = used_kinds(channels, hardware);
    let unused_native: f64 = hardware
        .native_rates
        .iter()
        .filter(|(kind, _)| !used.contains(kind))
        .map(|(_, &rate)| rate)
        .sum();
    let tau_open = if unused_native > 0.0 { 1.0 / unused_native } else { f64::INFINITY };
    if tau_open < tau_closed {
        return Err(Error::invalid(
            "hardware.closed_coherence_time",
            format!(
                "measured closed coherence time {tau_closed:.3e} s exceeds the open-system \
                 estimate {tau_open:.3e} s from unused native rates; the override is \
                 inconsistent with the rate model"
            ),
        ));
    }

    let mut native_ratio = 0.0f64;
    let mut binding_channel = None;
    for c in channels {
        if c.rate_molecular > 0.0 && hardware.is_usable(c.kind) {
            let native = hardware.native_rate(c.kind);
            let ratio = native / c.rate_molecular;
            if ratio > native_ratio {
                native_ratio = ratio;
                binding_channel = Some(c.label());
            }
        }
    }

    let closed_min = request.duration / tau_closed;
    let open_min = (request.duration / tau_open).max(native_ratio);
    let open_max = closed_max;

    if open_min > open_max {
        let constraint = if native_ratio >= request.duration / tau_open {
            format!(
                "native/molecular rate ratio R = {native_ratio:.3e} from {}",
                binding_channel.as_deref().unwrap_or("-")
            )
        } else {
            format!("duration bound t_mol/tau_open = {:.3e}", request.duration / tau_open)
        };
        return Err(Error::infeasible(
            constraint,
            format!(
                "open-system window is empty: lower bound {open_min:.3e} exceeds upper bound \
                 {open_max:.3e} (set by {binding_limit})"
            ),
        ));
    }

    Ok(ScalingPlan {
        closed_min,
        closed_max,
        open_min,
        open_max,
        native_ratio,
        binding_channel,
        binding_limit,
        tau_closed,
        tau_open,
        t_max_closed: tau_closed * closed_max,
        t_max_open: tau_open * open_max,
        scale: f64::NAN,
    })
}

/// Pick `F` within the open-system window.
pub fn choose_scale(plan: &ScalingPlan, policy: ScalePolicy) -> f64 {
    match policy {
        ScalePolicy::MinimalInjection => plan.open_min,
        ScalePolicy::MaxDuration => plan.open_max,
    }
}

/// Split every channel into native and injected parts at scale `f`.
pub fn budget(
    channels: &[DissipationChannel],
    f: f64,
    hardware: &HardwareProfile,
) -> Result<InjectionBudget> {
    let mut rows = Vec::with_capacity(channels.len());
    for c in channels {
        let simulated = f * c.rate_molecular;
        // Native dissipation only serves channels that exist in the molecule
        // with a nonzero rate; otherwise it belongs to the unusable pool.
        let native = if hardware.is_usable(c.kind) && c.rate_molecular > 0.0 {
            hardware.native_rate(c.kind)
        } else {
            0.0
        };
        let mut injected = simulated - native;
        if injected < 0.0 {
            if injected >= -INJECTION_ROUNDING * simulated.max(f64::MIN_POSITIVE) {
                injected = 0.0;
            } else {
                return Err(Error::infeasible(
                    c.label(),
                    format!(
                        "injected rate {injected:.3e} 1/s is negative; scale factor lies \
                         below the native/molecular ratio for this channel"
                    ),
                ));
            }
        }
        if INJECTION_ROUNDING * simulated > 0.0 && injected < INJECTION_ROUNDING * simulated {
            injected = 0.0;
        }
        rows.push(BudgetRow {
            channel: c.label(),
            kind: c.kind,
            target: c.target.clone(),
            rate_molecular: c.rate_molecular,
            rate_simulator: simulated,
            rate_native: native,
            rate_injected: injected,
        });
    }
    Ok(InjectionBudget { scale: f, rows })
}
