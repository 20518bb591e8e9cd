//! Text and CSV report emission.
//!
//! CSV floats are written with a fixed `{:.12e}` format so identical inputs
//! produce byte-identical files.

use std::fmt::Write as _;

use crate::error::Result;
use crate::experiment::{CompiledExperiment, EquivalenceReport};
use crate::lindblad::{self, DensityMatrixSeries};
use crate::model::{ChannelKind, ChannelTarget};
use crate::stochastic::VerificationReport;

const TAU: f64 = std::f64::consts::TAU;

fn fmt(v: f64) -> String {
    format!("{v:.12e}")
}

/// Implementation handle for one budget row, mirroring the per-channel
/// control plan.
fn implementation_handle(exp: &CompiledExperiment, kind: ChannelKind, target: &ChannelTarget) -> String {
    match (kind, target) {
        (ChannelKind::ElecRelaxation, _) => exp
            .controls
            .pump
            .iter()
            .find(|p| {
                if let ChannelTarget::StatePair { lower, upper } = target {
                    p.channel.contains(&format!("{lower}<-{upper}"))
                } else {
                    false
                }
            })
            .map(|p| {
                format!(
                    "pump Omega_ml = {:.4e} rad/s ({:.4} kHz /2pi)",
                    p.drive_strength,
                    p.drive_strength / TAU / 1e3
                )
            })
            .unwrap_or_else(|| "pump Omega_ml = 0".into()),
        (ChannelKind::VibCooling, ChannelTarget::Mode(label)) => exp
            .controls
            .sideband
            .iter()
            .find(|s| &s.mode == label)
            .map(|s| {
                format!(
                    "red tone eta*Omega- = {:.4e} rad/s ({:.4} kHz /2pi)",
                    s.lamb_dicke * s.omega_cooling,
                    s.lamb_dicke * s.omega_cooling / TAU / 1e3
                )
            })
            .unwrap_or_default(),
        (ChannelKind::VibHeating, ChannelTarget::Mode(label)) => exp
            .controls
            .sideband
            .iter()
            .find(|s| &s.mode == label)
            .map(|s| {
                format!(
                    "blue tone eta*Omega+ = {:.4e} rad/s ({:.4} kHz /2pi)",
                    s.lamb_dicke * s.omega_heating,
                    s.lamb_dicke * s.omega_heating / TAU / 1e3
                )
            })
            .unwrap_or_default(),
        (ChannelKind::ElecDephasing, ChannelTarget::State(n)) => exp
            .controls
            .noise
            .iter()
            .find(|p| matches!(&p.target, crate::control::NoiseTarget::StateDephasing(m) if m == n))
            .map(|p| {
                format!(
                    "noise rms dchi = {:.4e} rad/s ({:.4} kHz /2pi), tau_c = {:.2e} s",
                    p.rms(),
                    p.rms() / TAU / 1e3,
                    p.correlation_time
                )
            })
            .unwrap_or_default(),
        (ChannelKind::VibDephasing, ChannelTarget::Mode(label)) => exp
            .controls
            .noise
            .iter()
            .find(|p| matches!(&p.target, crate::control::NoiseTarget::ModeDephasing(m) if m == label))
            .map(|p| {
                format!(
                    "noise rms ddelta = {:.4e} rad/s ({:.4} kHz /2pi), tau_c = {:.2e} s",
                    p.rms(),
                    p.rms() / TAU / 1e3,
                    p.correlation_time
                )
            })
            .unwrap_or_default(),
        _ => String::new(),
    }
}

/// Human-readable compile report: window, chosen scale, budget table.
pub fn compile_report_text(exp: &CompiledExperiment) -> String {
    let plan = &exp.plan;
    let mut out = String::new();
    let _ = writeln!(out, "system: {}", exp.system.model.name);
    let _ = writeln!(out, "tool version: {}", exp.provenance.tool_version);
    let _ = writeln!(out, "config sha256: {}", exp.provenance.config_sha256);
    let _ = writeln!(out);
    let _ = writeln!(out, "scaling window");
    let _ = writeln!(out, "  closed system: [{:.4e}, {:.4e}]", plan.closed_min, plan.closed_max);
    let _ = writeln!(out, "  open system:   [{:.4e}, {:.4e}]", plan.open_min, plan.open_max);
    let _ = writeln!(out, "  native ratio R = {:.4e}{}", plan.native_ratio,
        plan.binding_channel.as_ref().map(|c| format!("  (binding: {c})")).unwrap_or_default());
    let _ = writeln!(out, "  upper bound set by {}", plan.binding_limit);
    let _ = writeln!(out, "  coherence time: closed {:.4e} s, open {:.4e} s", plan.tau_closed, plan.tau_open);
    let _ = writeln!(out, "  longest molecular time: closed {:.4e} s, open {:.4e} s", plan.t_max_closed, plan.t_max_open);
    let _ = writeln!(out, "  chosen F = {:.4e}", plan.scale);
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:<24} {:>12} {:>12} {:>12} {:>12}  {}",
        "dissipation", "nat (1/s)", "mol (ps^-1)", "sim (1/s)", "inj (1/s)", "implementation"
    );
    for row in &exp.budget.rows {
        let _ = writeln!(
            out,
            "{:<24} {:>12.4} {:>12.4} {:>12.4} {:>12.4}  {}",
            row.channel,
            row.rate_native,
            row.rate_molecular / 1e12,
            row.rate_simulator,
            row.rate_injected,
            implementation_handle(exp, row.kind, &row.target)
        );
    }
    if let Some(mag) = &exp.controls.magnetic {
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "global electronic dephasing: current noise variance {:.4e} A^2 (reference state {})",
            mag.current_variance, mag.reference_state
        );
        if mag.spread_flag {
            let _ = writeln!(out, "  warning: per-state rates spread beyond {:.0}%", mag.spread_bound * 100.0);
        }
    }
    if let Some(volt) = &exp.controls.voltage {
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "global vibrational dephasing: RF variance {:.4e} V^2, DC variance {:.4e} V^2",
            volt.rf_variance, volt.dc_variance
        );
        if volt.spread_flag {
            let _ = writeln!(out, "  warning: per-mode rates spread beyond {:.0}%", volt.spread_bound * 100.0);
        }
    }
    for pump in &exp.controls.pump {
        if pump.validity_warning {
            let _ = writeln!(out, "warning: {} drive/linewidth ratio {:.3e} above 0.1", pump.channel, pump.validity_ratio);
        }
        if pump.recoil_heating > 0.0 {
            let _ = writeln!(out, "note: {} recoil heating estimate {:.3e} 1/s", pump.channel, pump.recoil_heating);
        }
        if pump.drive_strength > 0.0 {
            let _ = writeln!(
                out,
                "checklist: {} pumps through an auxiliary level; repump any extra \
                 dipole-allowed decay paths back into the cycle",
                pump.channel
            );
        }
    }
    for sb in &exp.controls.sideband {
        if sb.validity_warning {
            let _ = writeln!(out, "warning: sideband({}) tone/linewidth ratio {:.3e} above 0.1", sb.mode, sb.validity_ratio);
        }
        if sb.native_exceeds_thermal {
            let _ = writeln!(out, "note: sideband({}) native cooling exceeds the thermal heating need; blue tone off", sb.mode);
        }
    }
    out
}

/// Budget table as CSV, mirroring the text table.
pub fn budget_csv(exp: &CompiledExperiment) -> String {
    let mut out = String::from("channel,rate_native_1_s,rate_molecular_1_s,rate_simulator_1_s,rate_injected_1_s,implementation\n");
    for row in &exp.budget.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},\"{}\"",
            row.channel,
            fmt(row.rate_native),
            fmt(row.rate_molecular),
            fmt(row.rate_simulator),
            fmt(row.rate_injected),
            implementation_handle(exp, row.kind, &row.target)
        );
    }
    out
}

/// Control-plan parameters as CSV: name, value in rad/s and in Hz (/2pi),
/// validity flag.
pub fn controls_csv(exp: &CompiledExperiment) -> String {
    let mut out = String::from("plan,parameter,value_rad_s,value_hz_2pi,flag\n");
    for p in &exp.controls.pump {
        let _ = writeln!(
            out,
            "pump({}),drive_strength,{},{},{}",
            p.channel,
            fmt(p.drive_strength),
            fmt(p.drive_strength / TAU),
            if p.validity_warning { "adiabatic_warning" } else { "" }
        );
    }
    for s in &exp.controls.sideband {
        let flag = if s.validity_warning { "tone_warning" } else if s.native_exceeds_thermal { "native_exceeds_thermal" } else { "" };
        let _ = writeln!(out, "sideband({}),omega_cooling,{},{},{}", s.mode, fmt(s.omega_cooling), fmt(s.omega_cooling / TAU), flag);
        let _ = writeln!(out, "sideband({}),omega_heating,{},{},{}", s.mode, fmt(s.omega_heating), fmt(s.omega_heating / TAU), flag);
    }
    for n in &exp.controls.noise {
        let label = match &n.target {
            crate::control::NoiseTarget::StateDephasing(s) => format!("noise(state {s})"),
            crate::control::NoiseTarget::ModeDephasing(m) => format!("noise(mode {m})"),
        };
        let _ = writeln!(out, "{label},rms,{},{},", fmt(n.rms()), fmt(n.rms() / TAU));
        let _ = writeln!(out, "{label},correlation_time_s,{},,", fmt(n.correlation_time));
    }
    if let Some(m) = &exp.controls.magnetic {
        let _ = writeln!(out, "magnetic,current_variance_a2,{},,{}", fmt(m.current_variance), if m.spread_flag { "spread_warning" } else { "" });
    }
    if let Some(v) = &exp.controls.voltage {
        let _ = writeln!(out, "voltage,rf_variance_v2,{},,{}", fmt(v.rf_variance), if v.spread_flag { "spread_warning" } else { "" });
        let _ = writeln!(out, "voltage,dc_variance_v2,{},,", fmt(v.dc_variance));
    }
    out
}

/// Observable time series as CSV.
pub fn series_csv(series: &DensityMatrixSeries, columns: &[String]) -> Result<String> {
    let cols = lindblad::observables(series, columns)?;
    let mut out = String::from("time_s");
    for c in &cols {
        let _ = write!(out, ",{}", c.name);
    }
    out.push('\n');
    for (i, &t) in series.times.iter().enumerate() {
        let _ = write!(out, "{}", fmt(t));
        for c in &cols {
            let _ = write!(out, ",{}", fmt(c.values[i]));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Frame-equivalence distances as CSV.
pub fn equivalence_csv(report: &EquivalenceReport) -> String {
    let mut out = String::from("time_s,trace_distance\n");
    for (t, d) in report.times.iter().zip(&report.distances) {
        let _ = writeln!(out, "{},{}", fmt(*t), fmt(*d));
    }
    out
}

/// Stochastic verification rows as CSV.
pub fn verification_csv(report: &VerificationReport) -> String {
    let mut out = String::from("plan,target_rate_1_s,fitted_rate_1_s,std_error_1_s,residual,status\n");
    for row in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            row.label,
            fmt(row.target_rate),
            fmt(row.fitted_rate),
            fmt(row.std_error),
            fmt(row.residual),
            if row.pass { "PASS" } else { "FAIL" }
        );
    }
    out
}
