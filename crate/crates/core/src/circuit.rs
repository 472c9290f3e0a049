//! The abstract spin/geometry circuit.
//!
//! Register layout (leftmost factor first): spin A, geometry qubit A,
//! geometry qubit B, spin B. The two geometry qubits together form the
//! 4-dimensional geometry register sitting between the spins.
//!
//! Stages: Hadamard on each spin (preparation), CNOT from each spin onto its
//! geometry qubit (superposition), a branch-dependent phase on the geometry
//! register (free fall), and the same CNOTs again (recombination).

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qmath::{
    embed_operator, partial_trace, pauli, states, ComplexMatrix, DensityMatrix, PureState,
    QmathError,
};

pub const SPIN_A: usize = 0;
pub const GEOMETRY_A: usize = 1;
pub const GEOMETRY_B: usize = 2;
pub const SPIN_B: usize = 3;
pub const REGISTER_DIMS: [usize; 4] = [2, 2, 2, 2];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("expected a state of dimension {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite phase parameter")]
    NonFinitePhase,
    #[error(transparent)]
    Math(#[from] QmathError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Preparation,
    Superposition,
    FreeFall,
    Recombination,
}

/// Phases accumulated by the four geometry branches `|g_A g_B>`, in the
/// order `00, 01, 10, 11`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchPhases(pub [f64; 4]);

impl BranchPhases {
    /// Only the closest-approach branch `|11>` picks up a phase.
    pub fn single(phi: f64) -> Self {
        Self([0.0, 0.0, 0.0, phi])
    }

    pub fn gate(&self) -> ComplexMatrix {
        let diag: Vec<C64> = self.0.iter().map(|&p| C64::from_polar(1.0, p)).collect();
        ComplexMatrix::from_diag(&diag)
    }
}

#[derive(Clone, Debug)]
pub struct GateOp {
    pub name: &'static str,
    pub stage: Stage,
    pub targets: Vec<usize>,
    pub matrix: ComplexMatrix,
}

#[derive(Clone, Debug)]
pub struct GmeCircuit {
    phi: f64,
    phases: BranchPhases,
    gates: Vec<GateOp>,
}

/// JSON form of a circuit: `{"phi": .., "gates": [{"name": .., "targets": [..]}]}`,
/// plus the branch phase vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitDescription {
    pub phi: f64,
    pub gates: Vec<GateDescription>,
    pub branch_phases: [f64; 4],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateDescription {
    pub name: String,
    pub targets: Vec<usize>,
}

/// CNOT with control on the first factor, `|1>` as the active value.
pub fn cnot() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, 1.0, 0.0],
    ])
}

/// `diag(1, 1, 1, e^{iφ})`.
pub fn controlled_phase(phi: f64) -> ComplexMatrix {
    BranchPhases::single(phi).gate()
}

impl GmeCircuit {
    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn branch_phases(&self) -> BranchPhases {
        self.phases
    }

    pub fn gates(&self) -> &[GateOp] {
        &self.gates
    }

    pub fn description(&self) -> CircuitDescription {
        CircuitDescription {
            phi: self.phi,
            gates: self
                .gates
                .iter()
                .map(|g| GateDescription {
                    name: g.name.to_string(),
                    targets: g.targets.clone(),
                })
                .collect(),
            branch_phases: self.phases.0,
        }
    }

    /// Product of all gates acting on the 16-dimensional register.
    pub fn unitary(&self) -> ComplexMatrix {
        self.gates.iter().fold(ComplexMatrix::identity(16), |acc, g| {
            let full = embed_operator(&g.matrix, &g.targets, &REGISTER_DIMS)
                .expect("gate targets are within the register");
            &full * &acc
        })
    }
}

/// Circuit with the single closest-approach phase `phi`.
pub fn build_gme_circuit(phi: f64) -> Result<GmeCircuit, CircuitError> {
    let mut circuit = build_with_phases(BranchPhases::single(phi))?;
    circuit.phi = phi;
    Ok(circuit)
}

/// Circuit with an independent phase on each geometry branch.
pub fn build_with_phases(phases: BranchPhases) -> Result<GmeCircuit, CircuitError> {
    if phases.0.iter().any(|p| !p.is_finite()) {
        return Err(CircuitError::NonFinitePhase);
    }
    let single = phases.0[..3].iter().all(|&p| p == 0.0);
    let h = pauli::hadamard();
    let op = |name, stage, targets: &[usize], matrix: &ComplexMatrix| GateOp {
        name,
        stage,
        targets: targets.to_vec(),
        matrix: matrix.clone(),
    };
    let gates = vec![
        op("H", Stage::Preparation, &[SPIN_A], &h),
        op("H", Stage::Preparation, &[SPIN_B], &h),
        op("CNOT", Stage::Superposition, &[SPIN_A, GEOMETRY_A], &cnot()),
        op("CNOT", Stage::Superposition, &[SPIN_B, GEOMETRY_B], &cnot()),
        op(
            if single { "CPHASE" } else { "BRANCH_PHASE" },
            Stage::FreeFall,
            &[GEOMETRY_A, GEOMETRY_B],
            &phases.gate(),
        ),
        op("CNOT", Stage::Recombination, &[SPIN_A, GEOMETRY_A], &cnot()),
        op("CNOT", Stage::Recombination, &[SPIN_B, GEOMETRY_B], &cnot()),
    ];
    Ok(GmeCircuit {
        phi: phases.0[3],
        phases,
        gates,
    })
}

/// Register state after each stage of a run started from `|0000>`.
#[derive(Clone, Debug, Serialize)]
pub struct CircuitTrace {
    pub after_preparation: PureState,
    pub after_superposition: PureState,
    pub after_free_fall: PureState,
    pub final_state: PureState,
}

pub fn run_with_checkpoints(c: &GmeCircuit) -> CircuitTrace {
    let mut state = PureState::basis(REGISTER_DIMS.to_vec(), 0);
    let mut snapshots = Vec::with_capacity(4);
    let mut current = Stage::Preparation;
    for g in &c.gates {
        if g.stage != current {
            snapshots.push(state.clone());
            current = g.stage;
        }
        let full = embed_operator(&g.matrix, &g.targets, &REGISTER_DIMS)
            .expect("gate targets are within the register");
        state = PureState::normalized(REGISTER_DIMS.to_vec(), full.mul_vec(state.amplitudes()))
            .expect("unitary gates preserve the norm");
    }
    snapshots.push(state);
    let mut it = snapshots.into_iter();
    CircuitTrace {
        after_preparation: it.next().unwrap(),
        after_superposition: it.next().unwrap(),
        after_free_fall: it.next().unwrap(),
        final_state: it.next().unwrap(),
    }
}

pub fn run_circuit(c: &GmeCircuit) -> PureState {
    run_with_checkpoints(c).final_state
}

/// Spin marginal of a 16-dimensional register state.
pub fn reduced_spin_state(full: &PureState) -> Result<DensityMatrix, CircuitError> {
    if full.dim() != 16 || full.dims().len() != 4 {
        return Err(CircuitError::DimensionMismatch {
            expected: 16,
            found: full.dim(),
        });
    }
    Ok(partial_trace(&full.projector(), &[SPIN_A, SPIN_B])?)
}

/// Spin state `½(|00> + |01> + |10> + e^{iφ}|11>)`.
pub fn ideal_spin_state(phi: f64) -> PureState {
    let h = C64::new(0.5, 0.0);
    PureState::new(vec![2, 2], vec![h, h, h, C64::from_polar(0.5, phi)]).unwrap()
}

/// The single-qubit unitary `G` for which `(I ⊗ G)` maps the φ = π circuit
/// output exactly onto `|Ψ−>`.
///
/// Writing a two-qubit state as `Σ M_ij |i>|j>`, `(I ⊗ G)` acts as
/// `M ↦ M Gᵀ`. Both coefficient matrices here have singular values
/// `(1/√2, 1/√2)`, so `M⁻¹ = 2M†` and `Gᵀ = 2 M† N` is unitary.
pub fn singlet_frame_rotation() -> ComplexMatrix {
    let coeffs = |psi: &PureState| {
        let a = psi.amplitudes();
        ComplexMatrix::from_rows(&[[a[0], a[1]], [a[2], a[3]]])
    };
    let m = coeffs(&states::circuit_output_at_pi());
    let n = coeffs(&states::singlet());
    debug_assert!((&m.adjoint() * &m)
        .max_abs_diff(&ComplexMatrix::identity(2).scale_real(0.5))
        < 1e-15);
    (&m.adjoint() * &n).scale_real(2.0).transpose()
}

/// `I ⊗ G`, see [`singlet_frame_rotation`].
pub fn canonical_frame_unitary() -> ComplexMatrix {
    ComplexMatrix::identity(2).kron(&singlet_frame_rotation())
}

/// `I ⊗ (σz + σx)/√2`: the literal half-wave-plate rotation on the second
/// qubit. Under the `|0> = V` labelling it sends the φ = π output to
/// `(|VV> + |HH>)/√2`, not to `|Ψ−>`; kept for reporting.
pub fn literal_waveplate_unitary() -> ComplexMatrix {
    ComplexMatrix::identity(2).kron(&pauli::hadamard())
}

/// Moves a two-qubit state into the frame where the ideal output is `|Ψ−>`.
pub fn canonicalize_to_singlet(rho: &DensityMatrix) -> Result<DensityMatrix, CircuitError> {
    if rho.dims() != [2, 2] {
        return Err(CircuitError::DimensionMismatch {
            expected: 4,
            found: rho.dim(),
        });
    }
    Ok(rho.conjugate_by(&canonical_frame_unitary())?)
}

/// Default phase of the implemented controlled-phase gate.
pub const DEFAULT_PHI: f64 = PI;
