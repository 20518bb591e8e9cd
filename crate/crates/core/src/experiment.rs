//! End-to-end pipeline: compile a configuration into an experiment file,
//! certify frame equivalence numerically, propagate either frame, and
//! verify noise plans against trajectory ensembles.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{self, ParsedSystem};
use crate::control::{
    self, MagneticPlan, NoisePlan, NoiseTarget, PumpPlan, SidebandPlan, SidebandTargets,
    VoltagePlan,
};
use crate::error::{Error, Result};
use crate::hilbert::HilbertSpace;
use crate::lindblad::{self, DensityMatrixSeries, LindbladTerm, PropagationOptions};
use crate::linalg;
use crate::model::{ChannelKind, ChannelTarget, ModeKind, TrapAxis};
use crate::operators::{self, SimulatorHamiltonianSpec};
use crate::scaling::{self, InjectionBudget, ScalePolicy, ScalingPlan};
use crate::stochastic::{self, VerificationReport, VerificationRow};

pub const EXPERIMENT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    pub config_sha256: String,
    pub seed: u64,
}

/// Every synthesized control plan of a compiled experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ControlSet {
    #[serde(default)]
    pub pump: Vec<PumpPlan>,
    #[serde(default)]
    pub sideband: Vec<SidebandPlan>,
    #[serde(default)]
    pub noise: Vec<NoisePlan>,
    #[serde(default)]
    pub magnetic: Option<MagneticPlan>,
    #[serde(default)]
    pub voltage: Option<VoltagePlan>,
}

/// Self-contained description of one compiled mapping: re-running
/// `certify`/`simulate` needs only this file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompiledExperiment {
    pub schema_version: u32,
    pub provenance: Provenance,
    pub system: ParsedSystem,
    pub plan: ScalingPlan,
    pub budget: InjectionBudget,
    pub controls: ControlSet,
    pub simulator: SimulatorHamiltonianSpec,
}

impl CompiledExperiment {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self)
            .map_err(|e| Error::numerics("experiment", format!("serialisation failed: {e}")))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let exp: CompiledExperiment = toml::from_str(text)
            .map_err(|e| Error::config("<experiment>", e.message().to_string()))?;
        if exp.schema_version != EXPERIMENT_SCHEMA_VERSION {
            return Err(Error::config(
                "schema_version",
                format!(
                    "unsupported experiment schema {} (expected {EXPERIMENT_SCHEMA_VERSION})",
                    exp.schema_version
                ),
            ));
        }
        Ok(exp)
    }
}

/// Compile a configuration into a full experiment: window, scale choice,
/// budget, control plans, and simulator Hamiltonian parameters.
pub fn compile(config_text: &str, policy: ScalePolicy) -> Result<CompiledExperiment> {
    let system = config::parse_model(config_text)?;
    let mut plan =
        scaling::compute_window(&system.channels, &system.hardware, &system.request, &system.model)?;
    plan.scale = scaling::choose_scale(&plan, policy);
    let budget = scaling::budget(&system.channels, plan.scale, &system.hardware)?;
    let controls = synthesize_controls(&system, &budget)?;
    let simulator = SimulatorHamiltonianSpec::from_model(&system.model, plan.scale);
    simulator.check_limits(&system.hardware.limits)?;

    let mut hasher = Sha256::new();
    hasher.update(config_text.as_bytes());
    let config_sha256 = format!("{:x}", hasher.finalize());

    Ok(CompiledExperiment {
        schema_version: EXPERIMENT_SCHEMA_VERSION,
        provenance: Provenance {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256,
            seed: system.request.seed,
        },
        system,
        plan,
        budget,
        controls,
        simulator,
    })
}

fn synthesize_controls(system: &ParsedSystem, budget: &InjectionBudget) -> Result<ControlSet> {
    let hw = &system.hardware;
    let tau_c = hw.noise_correlation_time;
    let mut controls = ControlSet::default();

    // conservative recoil estimate: the largest Lamb-Dicke factor present
    let eta_max = hw.trap_modes.iter().map(|m| m.lamb_dicke).fold(0.0f64, f64::max);

    // pair the sideband tones per mode
    let mut sideband_targets: std::collections::BTreeMap<String, (f64, f64)> = Default::default();

    for row in &budget.rows {
        match (&row.kind, &row.target) {
            (ChannelKind::ElecRelaxation, _) => {
                controls.pump.push(control::synth_pump(
                    &row.channel,
                    row.rate_injected,
                    hw.pump.decay_to_target,
                    hw.pump.decay_back,
                    hw.pump.detuning,
                    hw.recoil.scatter_rate,
                    eta_max,
                )?);
            }
            (ChannelKind::VibCooling, ChannelTarget::Mode(label)) => {
                sideband_targets.entry(label.clone()).or_default().0 = row.rate_injected;
            }
            (ChannelKind::VibHeating, ChannelTarget::Mode(label)) => {
                sideband_targets.entry(label.clone()).or_default().1 = row.rate_injected;
            }
            (ChannelKind::ElecDephasing, ChannelTarget::State(n)) => {
                controls.noise.push(control::synth_dephasing_noise(
                    NoiseTarget::StateDephasing(*n),
                    row.rate_injected,
                    tau_c,
                )?);
            }
            (ChannelKind::VibDephasing, ChannelTarget::Mode(label)) => {
                controls.noise.push(control::synth_dephasing_noise(
                    NoiseTarget::ModeDephasing(label.clone()),
                    row.rate_injected,
                    tau_c,
                )?);
            }
            _ => {}
        }
    }

    for (label, (cooling, heating)) in &sideband_targets {
        let trap = hw.trap_mode(label).ok_or_else(|| {
            Error::config("hardware.trap_modes", format!("no trap mode `{label}` for sidebands"))
        })?;
        controls.sideband.push(control::synth_sideband(
            label,
            SidebandTargets::PerTone { cooling: *cooling, heating: *heating },
            trap.lamb_dicke,
            hw.ancilla.decay_rate,
            trap.frequency,
            hw.ancilla.angular_factor,
        )?);
    }

    // Global alternatives, when the hardware constants are provided.
    if let Some(mag) = &hw.magnetic {
        let mut targets = vec![0.0; system.model.num_states];
        let mut any = false;
        for row in &budget.rows {
            if let (ChannelKind::ElecDephasing, ChannelTarget::State(n)) = (&row.kind, &row.target) {
                targets[*n] = row.rate_injected;
                any = true;
            }
        }
        if any {
            controls.magnetic = Some(control::synth_global_magnetic(
                &targets,
                &mag.state_sensitivity,
                mag.field_per_current()?,
                tau_c,
                control::GLOBAL_SPREAD_BOUND,
            )?);
        }
    }
    if let Some(volt) = &hw.voltage {
        let mut radial = Vec::new();
        let mut axial = Vec::new();
        let mut any = false;
        for row in &budget.rows {
            if let (ChannelKind::VibDephasing, ChannelTarget::Mode(label)) = (&row.kind, &row.target) {
                let trap = hw.trap_mode(label).ok_or_else(|| {
                    Error::config("hardware.trap_modes", format!("no trap mode `{label}`"))
                })?;
                let entry = (label.clone(), row.rate_injected, trap.kappa);
                match trap.axis {
                    TrapAxis::Radial => radial.push(entry),
                    TrapAxis::Axial => axial.push(entry),
                }
                any = true;
            }
        }
        if any {
            controls.voltage = Some(control::synth_global_voltage(
                &radial,
                &axial,
                volt.rf_sensitivity,
                volt.dc_sensitivity,
                tau_c,
                control::GLOBAL_SPREAD_BOUND,
            )?);
        }
    }

    Ok(controls)
}

/// Which frame to propagate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    Molecular,
    Simulator,
}

/// Channels that act on the propagated space (spectator-mode channels are
/// planned for but carry no operator there).
fn propagable_rows<'a>(
    exp: &'a CompiledExperiment,
) -> impl Iterator<Item = &'a scaling::BudgetRow> {
    exp.budget.rows.iter().filter(|row| match &row.target {
        ChannelTarget::Mode(label) => exp
            .system
            .model
            .mode(label)
            .map(|m| m.kind != ModeKind::Spectator)
            .unwrap_or(false),
        _ => true,
    })
}

fn lindblad_terms(
    exp: &CompiledExperiment,
    space: &HilbertSpace,
    frame: Frame,
) -> Result<Vec<LindbladTerm>> {
    propagable_rows(exp)
        .map(|row| {
            let channel = crate::model::DissipationChannel {
                kind: row.kind,
                target: row.target.clone(),
                rate_molecular: row.rate_molecular,
            };
            let operator = operators::build_lindblad_operator(&channel, space)?;
            let rate = match frame {
                Frame::Molecular => row.rate_molecular,
                Frame::Simulator => row.rate_simulator,
            };
            Ok(LindbladTerm { operator, rate })
        })
        .collect()
}

/// Propagate the experiment in either frame and return the stored series.
pub fn simulate(exp: &CompiledExperiment, frame: Frame) -> Result<DensityMatrixSeries> {
    let system = &exp.system;
    let space = HilbertSpace::for_model(&system.model)?;
    let rho0 = lindblad::initial_state(&space, system.request.initial_electronic);
    let terms = lindblad_terms(exp, &space, frame)?;
    let (h, duration, step) = match frame {
        Frame::Molecular => {
            let h = operators::build_molecular_hamiltonian(
                &system.model,
                &space,
                system.request.max_dimension,
            )?;
            (h, system.request.duration, system.request.step)
        }
        Frame::Simulator => {
            let h = operators::build_simulator_hamiltonian(
                &exp.simulator,
                &space,
                Some(&system.hardware.limits),
            )?;
            (h, system.request.duration / exp.plan.scale, system.request.step.map(|s| s / exp.plan.scale))
        }
    };
    let points = system.request.output_points;
    let times: Vec<f64> =
        (0..points).map(|k| duration * k as f64 / (points - 1) as f64).collect();
    let opts = PropagationOptions {
        step,
        tolerance: system.request.tolerance,
        leak_threshold: system.request.leak_threshold,
        check_positivity: true,
    };
    lindblad::propagate(&h, &terms, &rho0, &times, &space, &opts)
}

/// Write the frame's Hamiltonian and Lindblad operators in the portable
/// text format (one `row col re im` line per nonzero entry) for
/// cross-checking against external tools.
pub fn dump_operators(
    exp: &CompiledExperiment,
    frame: Frame,
    dir: &std::path::Path,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let system = &exp.system;
    let space = HilbertSpace::for_model(&system.model)?;
    let h = match frame {
        Frame::Molecular => operators::build_molecular_hamiltonian(
            &system.model,
            &space,
            system.request.max_dimension,
        )?,
        Frame::Simulator => operators::build_simulator_hamiltonian(
            &exp.simulator,
            &space,
            Some(&system.hardware.limits),
        )?,
    };
    let mut file = std::fs::File::create(dir.join("hamiltonian.mtx"))?;
    operators::dump_matrix(&h, &mut file)?;
    for (i, term) in lindblad_terms(exp, &space, frame)?.iter().enumerate() {
        let mut file = std::fs::File::create(dir.join(format!("lindblad_{i}.mtx")))?;
        operators::dump_matrix(&term.operator, &mut file)?;
    }
    Ok(())
}

/// Write every stored density matrix of a series in the portable format.
pub fn dump_states(series: &DensityMatrixSeries, dir: &std::path::Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (k, (t, rho)) in series.times.iter().zip(&series.states).enumerate() {
        let op = crate::operators::OperatorMatrix {
            label: format!("rho(t={t:.9e})"),
            matrix: rho.clone(),
        };
        let mut file = std::fs::File::create(dir.join(format!("state_{k:04}.mtx")))?;
        operators::dump_matrix(&op, &mut file)?;
    }
    Ok(())
}

/// Trace-distance comparison of the molecular evolution against the
/// rescaled simulator evolution on matched grids.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquivalenceReport {
    /// Molecular-frame sample times, s.
    pub times: Vec<f64>,
    pub distances: Vec<f64>,
    pub max_distance: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Channels whose simulated rate fails the `F * molecular` audit, and
    /// any Hamiltonian-scaling defect.
    pub audit: Vec<String>,
}

/// Certify that the compiled simulator frame reproduces the molecular
/// dynamics: propagate both generators on matched grids (simulator times
/// scaled by 1/F) and compare states at corresponding samples.
pub fn certify(
    exp: &CompiledExperiment,
    horizon: Option<f64>,
    tolerance: f64,
) -> Result<EquivalenceReport> {
    let system = &exp.system;
    let f = exp.plan.scale;
    let horizon = horizon.unwrap_or(system.request.duration);
    if horizon <= 0.0 || horizon > system.request.duration {
        return Err(Error::invalid(
            "certify.horizon",
            format!("horizon must lie in (0, {}]", system.request.duration),
        ));
    }

    // Algebraic audit before any propagation: every simulated rate must be
    // exactly F times the molecular rate, and the simulator spec must be
    // the F-scaled model.
    let mut audit = Vec::new();
    for row in &exp.budget.rows {
        let expected = f * row.rate_molecular;
        let defect = (row.rate_simulator - expected).abs();
        if defect > 1e-9 * expected.abs().max(f64::MIN_POSITIVE) {
            audit.push(format!(
                "channel {}: simulated rate {:.6e} 1/s deviates from F*molecular = {:.6e} 1/s",
                row.channel, row.rate_simulator, expected
            ));
        }
    }
    let space = HilbertSpace::for_model(&system.model)?;
    let h_mol = operators::build_molecular_hamiltonian(
        &system.model,
        &space,
        system.request.max_dimension,
    )?;
    let h_sim =
        operators::build_simulator_hamiltonian(&exp.simulator, &space, Some(&system.hardware.limits))?;
    let scaled = h_mol.matrix.mapv(|z| z * f);
    let h_defect = linalg::max_abs(&(&h_sim.matrix - &scaled));
    if h_defect > 1e-12 * linalg::max_abs(&h_sim.matrix).max(f64::MIN_POSITIVE) {
        audit.push(format!(
            "simulator Hamiltonian deviates from F*H_molecular by {h_defect:.3e} rad/s"
        ));
    }

    let rho0 = lindblad::initial_state(&space, system.request.initial_electronic);
    let points = system.request.output_points;
    let times_mol: Vec<f64> =
        (0..points).map(|k| horizon * k as f64 / (points - 1) as f64).collect();
    let times_sim: Vec<f64> = times_mol.iter().map(|t| t / f).collect();

    let terms_mol = lindblad_terms(exp, &space, Frame::Molecular)?;
    let terms_sim = lindblad_terms(exp, &space, Frame::Simulator)?;
    let opts = PropagationOptions {
        step: system.request.step,
        tolerance: system.request.tolerance,
        leak_threshold: system.request.leak_threshold,
        check_positivity: false,
    };
    let series_mol = lindblad::propagate(&h_mol, &terms_mol, &rho0, &times_mol, &space, &opts)?;
    let opts_sim = PropagationOptions {
        step: system.request.step.map(|s| s / f),
        ..opts
    };
    // Matched grids: reuse the molecular substep pattern so the two
    // integrations share their truncation error and the comparison isolates
    // the generator mismatch.
    let series_sim = lindblad::propagate_on_grid(
        &h_sim,
        &terms_sim,
        &rho0,
        &times_sim,
        &space,
        &opts_sim,
        &series_mol.substeps,
    )?;

    let mut distances = Vec::with_capacity(points);
    let mut max_distance = 0.0f64;
    for (a, b) in series_mol.states.iter().zip(&series_sim.states) {
        let d = linalg::trace_distance(a, b)?;
        max_distance = max_distance.max(d);
        distances.push(d);
    }
    let pass = max_distance < tolerance && audit.is_empty();
    Ok(EquivalenceReport { times: times_mol, distances, max_distance, tolerance, pass, audit })
}

/// Verify every stochastic dephasing plan of an experiment against
/// trajectory ensembles. Covers the per-channel noise plans and, when
/// present, the per-state/per-mode rows of the global plans.
pub fn verify_noise(
    exp: &CompiledExperiment,
    trajectories: Option<usize>,
    seed: Option<u64>,
) -> Result<VerificationReport> {
    let system = &exp.system;
    let n_traj = trajectories.unwrap_or(system.request.trajectories);
    let seed = seed.unwrap_or(system.request.seed);
    let d = system.model.num_states;
    let mut rows: Vec<VerificationRow> = Vec::new();

    let qubit_pair = |n: usize| if n == 0 { (0usize, 1usize.min(d - 1)) } else { (n, 0) };

    for plan in &exp.controls.noise {
        let row = match &plan.target {
            NoiseTarget::StateDephasing(n) => {
                let (a, b) = qubit_pair(*n);
                let mut op = Array2::<C64>::zeros((d, d));
                op[(*n, *n)] = C64::new(1.0, 0.0);
                let mut psi0 = Array1::<C64>::zeros(d);
                psi0[a] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                psi0[b] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                let h0 = Array2::<C64>::zeros((d, d));
                stochastic::verify_dephasing(
                    &format!("elec_dephasing({n})"),
                    plan.achieved,
                    plan.variance,
                    plan.correlation_time,
                    &h0,
                    &op,
                    &psi0,
                    (a, b),
                    n_traj,
                    seed,
                )?
            }
            NoiseTarget::ModeDephasing(label) => {
                let levels = system.model.mode(label).map(|m| m.fock_levels.min(4)).unwrap_or(3);
                let mut op = Array2::<C64>::zeros((levels, levels));
                for k in 0..levels {
                    op[(k, k)] = C64::new(k as f64, 0.0);
                }
                let mut psi0 = Array1::<C64>::zeros(levels);
                psi0[0] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                psi0[1] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                let h0 = Array2::<C64>::zeros((levels, levels));
                stochastic::verify_dephasing(
                    &format!("vib_dephasing({label})"),
                    plan.achieved,
                    plan.variance,
                    plan.correlation_time,
                    &h0,
                    &op,
                    &psi0,
                    (0, 1),
                    n_traj,
                    seed,
                )?
            }
        };
        rows.push(row);
    }

    if let Some(mag) = &exp.controls.magnetic {
        let dbdi = system
            .hardware
            .magnetic
            .as_ref()
            .map(|m| m.field_per_current())
            .transpose()?
            .unwrap_or(0.0);
        let sens = system
            .hardware
            .magnetic
            .as_ref()
            .map(|m| m.state_sensitivity.clone())
            .unwrap_or_default();
        for (n, row) in mag.per_state.iter().enumerate() {
            if row.target == 0.0 {
                continue;
            }
            let variance = (sens[n] * dbdi).powi(2) * mag.current_variance;
            let (a, b) = qubit_pair(n);
            let mut op = Array2::<C64>::zeros((d, d));
            op[(n, n)] = C64::new(1.0, 0.0);
            let mut psi0 = Array1::<C64>::zeros(d);
            psi0[a] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            psi0[b] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            let h0 = Array2::<C64>::zeros((d, d));
            rows.push(stochastic::verify_dephasing(
                &format!("magnetic({})", row.label),
                row.achieved,
                variance,
                mag.correlation_time,
                &h0,
                &op,
                &psi0,
                (a, b),
                n_traj,
                seed,
            )?);
        }
    }

    if let Some(volt) = &exp.controls.voltage {
        let constants = system.hardware.voltage.as_ref();
        for row in &volt.per_mode {
            if row.target == 0.0 || row.achieved == 0.0 {
                continue;
            }
            let trap = system.hardware.trap_mode(&row.label);
            let (kappa, base) = match (trap, constants) {
                (Some(t), Some(c)) => (
                    t.kappa,
                    match t.axis {
                        TrapAxis::Radial => c.rf_sensitivity,
                        TrapAxis::Axial => c.dc_sensitivity,
                    },
                ),
                _ => continue,
            };
            let axis_variance = match trap.map(|t| t.axis) {
                Some(TrapAxis::Radial) => volt.rf_variance,
                _ => volt.dc_variance,
            };
            let variance = (kappa * base).powi(2) * axis_variance;
            let levels = system.model.mode(&row.label).map(|m| m.fock_levels.min(4)).unwrap_or(3);
            let mut op = Array2::<C64>::zeros((levels, levels));
            for k in 0..levels {
                op[(k, k)] = C64::new(k as f64, 0.0);
            }
            let mut psi0 = Array1::<C64>::zeros(levels);
            psi0[0] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            psi0[1] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            let h0 = Array2::<C64>::zeros((levels, levels));
            rows.push(stochastic::verify_dephasing(
                &format!("voltage({})", row.label),
                row.achieved,
                variance,
                volt.correlation_time,
                &h0,
                &op,
                &psi0,
                (0, 1),
                n_traj,
                seed,
            )?);
        }
    }

    let pass = rows.iter().all(|r| r.pass);
    Ok(VerificationReport { rows, trajectories: n_traj, seed, pass })
}
