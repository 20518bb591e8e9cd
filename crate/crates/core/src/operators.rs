//! Assembly of molecular and simulator Hamiltonians and Lindblad operators
//! as dense complex matrices on the composite qudit (x) Fock space.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::HilbertSpace;
use crate::linalg;
use crate::model::{
    ChannelKind, ChannelTarget, DissipationChannel, InteractionLimits, LvcModel, ModeKind,
};

/// Relative Hermiticity tolerance for assembled Hamiltonians.
pub const HAMILTONIAN_HERMITICITY_TOL: f64 = 1e-12;

/// A labelled dense operator on a composite space.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub label: String,
    pub matrix: Array2<C64>,
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

fn check_dimension(space: &HilbertSpace, max_dimension: usize) -> Result<()> {
    if space.dim() > max_dimension {
        return Err(Error::invalid(
            "hilbert.dimension",
            format!(
                "composite dimension {} exceeds the configured maximum {}",
                space.dim(),
                max_dimension
            ),
        ));
    }
    Ok(())
}

/// Map a model mode index (over dynamical modes only) to the space.
fn dynamical_mode_positions(model: &LvcModel, space: &HilbertSpace) -> Result<Vec<usize>> {
    model
        .dynamical_modes()
        .map(|m| {
            space.mode_index(&m.label).ok_or_else(|| {
                Error::invalid(
                    format!("hilbert.mode[{}]", m.label),
                    "mode missing from the composite space",
                )
            })
        })
        .collect()
}

/// Add `coeff * a_j^dagger a_j` (number operator on mode `j`).
fn add_number_term(h: &mut Array2<C64>, space: &HilbertSpace, mode: usize, coeff: f64) {
    for idx in 0..space.dim() {
        let n = space.occupation_of(idx, mode);
        h[(idx, idx)] += C64::new(coeff * n as f64, 0.0);
    }
}

/// Add `coeff * |n><m|` on the electronic factor (identity on the modes).
fn add_electronic_term(h: &mut Array2<C64>, space: &HilbertSpace, n: usize, m: usize, coeff: f64) {
    let block = space.dim() / space.qudit_dim();
    for occ_idx in 0..block {
        h[(n * block + occ_idx, m * block + occ_idx)] += C64::new(coeff, 0.0);
    }
}

/// Add `coeff * (a_j^dagger + a_j) |n><m|`. Not Hermitian on its own for
/// `n != m`; callers add the `(m, n)` partner.
fn add_position_electronic_term(
    h: &mut Array2<C64>,
    space: &HilbertSpace,
    mode: usize,
    n: usize,
    m: usize,
    coeff: f64,
) {
    let block = space.dim() / space.qudit_dim();
    let nfock = space.fock_dim(mode);
    for occ_idx in 0..block {
        let col = m * block + occ_idx;
        let occ = (occ_idx / stride_of(space, mode)) % nfock;
        // a^dagger: occ -> occ + 1
        if occ + 1 < nfock {
            let row = n * block + occ_idx + stride_of(space, mode);
            h[(row, col)] += C64::new(coeff * ((occ + 1) as f64).sqrt(), 0.0);
        }
        // a: occ -> occ - 1
        if occ > 0 {
            let row = n * block + occ_idx - stride_of(space, mode);
            h[(row, col)] += C64::new(coeff * (occ as f64).sqrt(), 0.0);
        }
    }
}

fn stride_of(space: &HilbertSpace, mode: usize) -> usize {
    // stride of mode j within the mode block
    let mut stride = 1;
    for k in (mode + 1)..space.num_modes() {
        stride *= space.fock_dim(k);
    }
    stride
}

fn validate_hermitian(op: &OperatorMatrix) -> Result<()> {
    let defect = linalg::hermitian_defect(&op.matrix);
    let scale = linalg::max_abs(&op.matrix).max(1e-300);
    if defect > HAMILTONIAN_HERMITICITY_TOL * scale {
        return Err(Error::numerics(
            "hamiltonian",
            format!("`{}` is not Hermitian (defect {defect:.3e})", op.label),
        ));
    }
    Ok(())
}

/// Assemble the vibronic-coupling Hamiltonian: harmonic mode energies,
/// electronic energies and couplings, and linear tuning/coupling terms
/// `c/sqrt(2) (a^dagger + a)` on the declared modes.
pub fn build_molecular_hamiltonian(
    model: &LvcModel,
    space: &HilbertSpace,
    max_dimension: usize,
) -> Result<OperatorMatrix> {
    model.validate()?;
    check_dimension(space, max_dimension)?;
    let positions = dynamical_mode_positions(model, space)?;
    let d = model.num_states;
    let mut h = Array2::<C64>::zeros((space.dim(), space.dim()));
    let sqrt2 = std::f64::consts::SQRT_2;

    for (mode, &pos) in model.dynamical_modes().zip(&positions) {
        add_number_term(&mut h, space, pos, mode.frequency);
        match mode.kind {
            ModeKind::Tuning => {
                for (n, &c) in mode.tuning.iter().enumerate() {
                    if c != 0.0 {
                        add_position_electronic_term(&mut h, space, pos, n, n, c / sqrt2);
                    }
                }
            }
            ModeKind::Coupling => {
                for entry in &mode.coupling {
                    let c = entry.value / sqrt2;
                    add_position_electronic_term(&mut h, space, pos, entry.state_a, entry.state_b, c);
                    add_position_electronic_term(&mut h, space, pos, entry.state_b, entry.state_a, c);
                }
            }
            ModeKind::Spectator => unreachable!("spectators are not dynamical"),
        }
    }
    for n in 0..d {
        for m in 0..d {
            if model.electronic[n][m] != 0.0 {
                add_electronic_term(&mut h, space, n, m, model.electronic[n][m]);
            }
        }
    }

    let op = OperatorMatrix { label: format!("H_mol[{}]", model.name), matrix: h };
    validate_hermitian(&op)?;
    Ok(op)
}

/// Simulator Hamiltonian parameters: mode detunings, level shifts, and the
/// three engineered interaction families, all rad/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatorHamiltonianSpec {
    /// One detuning per dynamical mode, ordered as in the space.
    pub mode_detunings: Vec<f64>,
    /// One energy shift per electronic state.
    pub level_shifts: Vec<f64>,
    /// Electronic coupling strengths, symmetric with zero diagonal.
    pub electronic_coupling: Vec<Vec<f64>>,
    /// Tuning strengths `[mode][state]`.
    pub tuning_strength: Vec<Vec<f64>>,
    /// Vibronic coupling strengths per (mode, state pair).
    pub vibronic_strength: Vec<VibronicStrength>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VibronicStrength {
    pub mode: usize,
    pub state_a: usize,
    pub state_b: usize,
    pub value: f64,
}

impl SimulatorHamiltonianSpec {
    /// The direct mapping of a molecular model at scale factor `f`:
    /// detunings `f*nu`, shifts `f*c0_nn`, couplings `f*c0_nm`, tuning
    /// `f*c/sqrt2`, vibronic `f*c/sqrt2`.
    pub fn from_model(model: &LvcModel, f: f64) -> Self {
        let sqrt2 = std::f64::consts::SQRT_2;
        let d = model.num_states;
        let dynamical: Vec<_> = model.dynamical_modes().collect();
        let mode_detunings = dynamical.iter().map(|m| f * m.frequency).collect();
        let level_shifts = (0..d).map(|n| f * model.electronic[n][n]).collect();
        let mut electronic_coupling = vec![vec![0.0; d]; d];
        for n in 0..d {
            for m in 0..d {
                if n != m {
                    electronic_coupling[n][m] = f * model.electronic[n][m];
                }
            }
        }
        let mut tuning_strength = Vec::new();
        let mut vibronic_strength = Vec::new();
        for (j, mode) in dynamical.iter().enumerate() {
            let mut per_state = vec![0.0; d];
            if mode.kind == ModeKind::Tuning {
                for (n, &c) in mode.tuning.iter().enumerate() {
                    per_state[n] = f * c / sqrt2;
                }
            }
            tuning_strength.push(per_state);
            for entry in &mode.coupling {
                vibronic_strength.push(VibronicStrength {
                    mode: j,
                    state_a: entry.state_a,
                    state_b: entry.state_b,
                    value: f * entry.value / sqrt2,
                });
            }
        }
        SimulatorHamiltonianSpec {
            mode_detunings,
            level_shifts,
            electronic_coupling,
            tuning_strength,
            vibronic_strength,
        }
    }

    /// Check every engineered strength against the hardware maxima,
    /// naming the first offending term.
    pub fn check_limits(&self, limits: &InteractionLimits) -> Result<()> {
        for (n, row) in self.electronic_coupling.iter().enumerate() {
            for (m, &v) in row.iter().enumerate() {
                if v.abs() > limits.electronic_coupling_max {
                    return Err(Error::infeasible(
                        format!("electronic coupling ({n},{m})"),
                        format!(
                            "requires {:.3e} rad/s but hardware maximum is {:.3e} rad/s",
                            v.abs(),
                            limits.electronic_coupling_max
                        ),
                    ));
                }
            }
        }
        for (j, row) in self.tuning_strength.iter().enumerate() {
            for (n, &v) in row.iter().enumerate() {
                if v.abs() > limits.tuning_max {
                    return Err(Error::infeasible(
                        format!("tuning term (mode {j}, state {n})"),
                        format!(
                            "requires {:.3e} rad/s but hardware maximum is {:.3e} rad/s",
                            v.abs(),
                            limits.tuning_max
                        ),
                    ));
                }
            }
        }
        for term in &self.vibronic_strength {
            if term.value.abs() > limits.vibronic_coupling_max {
                return Err(Error::infeasible(
                    format!(
                        "vibronic coupling (mode {}, states {},{})",
                        term.mode, term.state_a, term.state_b
                    ),
                    format!(
                        "requires {:.3e} rad/s but hardware maximum is {:.3e} rad/s",
                        term.value.abs(),
                        limits.vibronic_coupling_max
                    ),
                ));
            }
        }
        Ok(())
    }
}

/// Assemble the simulator Hamiltonian term by term. With a spec produced by
/// [`SimulatorHamiltonianSpec::from_model`] the result equals
/// `f * H_molecular` to rounding.
pub fn build_simulator_hamiltonian(
    spec: &SimulatorHamiltonianSpec,
    space: &HilbertSpace,
    limits: Option<&InteractionLimits>,
) -> Result<OperatorMatrix> {
    if let Some(l) = limits {
        spec.check_limits(l)?;
    }
    let d = space.qudit_dim();
    if spec.level_shifts.len() != d
        || spec.electronic_coupling.len() != d
        || spec.mode_detunings.len() != space.num_modes()
        || spec.tuning_strength.len() != space.num_modes()
    {
        return Err(Error::invalid("simulator_spec", "shape does not match the space"));
    }
    let mut h = Array2::<C64>::zeros((space.dim(), space.dim()));
    for (j, &delta) in spec.mode_detunings.iter().enumerate() {
        add_number_term(&mut h, space, j, delta);
    }
    for (n, &chi) in spec.level_shifts.iter().enumerate() {
        add_electronic_term(&mut h, space, n, n, chi);
    }
    for n in 0..d {
        for m in 0..d {
            if n != m && spec.electronic_coupling[n][m] != 0.0 {
                add_electronic_term(&mut h, space, n, m, spec.electronic_coupling[n][m]);
            }
        }
    }
    for (j, row) in spec.tuning_strength.iter().enumerate() {
        for (n, &theta) in row.iter().enumerate() {
            if theta != 0.0 {
                add_position_electronic_term(&mut h, space, j, n, n, theta);
            }
        }
    }
    for term in &spec.vibronic_strength {
        add_position_electronic_term(&mut h, space, term.mode, term.state_a, term.state_b, term.value);
        add_position_electronic_term(&mut h, space, term.mode, term.state_b, term.state_a, term.value);
    }
    let op = OperatorMatrix { label: "H_sim".into(), matrix: h };
    validate_hermitian(&op)?;
    Ok(op)
}

/// Annihilation operator on one mode (identity elsewhere).
pub fn annihilation(space: &HilbertSpace, mode: usize) -> Array2<C64> {
    let dim = space.dim();
    let mut a = Array2::<C64>::zeros((dim, dim));
    let stride = stride_of(space, mode);
    for col in 0..dim {
        let n = space.occupation_of(col, mode);
        if n > 0 {
            a[(col - stride, col)] = C64::new((n as f64).sqrt(), 0.0);
        }
    }
    a
}

/// Build the Lindblad operator for one dissipation channel:
/// `|n><m|`, `a`, `a^dagger`, `|n><n|`, or `a^dagger a`, tensored with the
/// identity on all other factors.
pub fn build_lindblad_operator(
    channel: &DissipationChannel,
    space: &HilbertSpace,
) -> Result<OperatorMatrix> {
    let dim = space.dim();
    let label = channel.label();
    let matrix = match (&channel.kind, &channel.target) {
        (ChannelKind::ElecRelaxation, ChannelTarget::StatePair { lower, upper }) => {
            if *lower >= space.qudit_dim() || *upper >= space.qudit_dim() {
                return Err(Error::invalid(label, "state out of range for the space"));
            }
            let mut l = Array2::<C64>::zeros((dim, dim));
            let block = dim / space.qudit_dim();
            for occ in 0..block {
                l[(lower * block + occ, upper * block + occ)] = C64::new(1.0, 0.0);
            }
            l
        }
        (ChannelKind::ElecDephasing, ChannelTarget::State(n)) => {
            if *n >= space.qudit_dim() {
                return Err(Error::invalid(label, "state out of range for the space"));
            }
            let mut l = Array2::<C64>::zeros((dim, dim));
            let block = dim / space.qudit_dim();
            for occ in 0..block {
                l[(n * block + occ, n * block + occ)] = C64::new(1.0, 0.0);
            }
            l
        }
        (ChannelKind::VibCooling, ChannelTarget::Mode(m)) => {
            let mode = space
                .mode_index(m)
                .ok_or_else(|| Error::invalid(&label, format!("mode `{m}` not in the space")))?;
            annihilation(space, mode)
        }
        (ChannelKind::VibHeating, ChannelTarget::Mode(m)) => {
            let mode = space
                .mode_index(m)
                .ok_or_else(|| Error::invalid(&label, format!("mode `{m}` not in the space")))?;
            linalg::adjoint(&annihilation(space, mode))
        }
        (ChannelKind::VibDephasing, ChannelTarget::Mode(m)) => {
            let mode = space
                .mode_index(m)
                .ok_or_else(|| Error::invalid(&label, format!("mode `{m}` not in the space")))?;
            let mut l = Array2::<C64>::zeros((dim, dim));
            for idx in 0..dim {
                l[(idx, idx)] = C64::new(space.occupation_of(idx, mode) as f64, 0.0);
            }
            l
        }
        _ => return Err(Error::invalid(label, "channel target does not match its kind")),
    };
    Ok(OperatorMatrix { label, matrix })
}

/// Write an operator in the portable text format: one `row col re im` line
/// per nonzero entry, row-major.
pub fn dump_matrix(op: &OperatorMatrix, out: &mut impl std::io::Write) -> Result<()> {
    writeln!(out, "# {} dim={}", op.label, op.dim())?;
    for ((i, j), z) in op.matrix.indexed_iter() {
        if z.norm() > 0.0 {
            writeln!(out, "{} {} {:.17e} {:.17e}", i, j, z.re, z.im)?;
        }
    }
    Ok(())
}
