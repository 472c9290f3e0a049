//! Named two-qubit states in the `|0> = V`, `|1> = H` labelling.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64 as C64;

use super::{ComplexMatrix, DensityMatrix, PureState};

fn real(v: [f64; 4]) -> Vec<C64> {
    v.iter().map(|&x| C64::new(x, 0.0)).collect()
}

/// `|Ψ−> = (|HV> − |VH>)/√2`.
pub fn singlet() -> PureState {
    PureState::new(vec![2, 2], real([0.0, -FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0])).unwrap()
}

/// `½(|VV> + |HV> + |VH> − |HH>)`, the spin state left by the circuit at φ = π.
pub fn circuit_output_at_pi() -> PureState {
    PureState::new(vec![2, 2], real([0.5, 0.5, 0.5, -0.5])).unwrap()
}

/// `½(|HV><HV| + |VH><VH|)`: the singlet with its HV/VH coherence removed.
pub fn rho_mix() -> DensityMatrix {
    let m = ComplexMatrix::from_diag(&real([0.0, 0.5, 0.5, 0.0]));
    DensityMatrix::new(vec![2, 2], m).unwrap()
}

/// `½(|H+><H+| + |+H><+H|)`: the post-selected state of fully
/// distinguishable photons, in the singlet frame.
pub fn rho_dist() -> DensityMatrix {
    let s = FRAC_1_SQRT_2;
    // |H+> = |1>(|0>+|1>)/√2, |+H> = (|0>+|1>)|1>/√2
    let h_plus = real([0.0, 0.0, s, s]);
    let plus_h = real([0.0, s, 0.0, s]);
    let m = &ComplexMatrix::outer(&h_plus, &h_plus).scale_real(0.5)
        + &ComplexMatrix::outer(&plus_h, &plus_h).scale_real(0.5);
    DensityMatrix::new(vec![2, 2], m).unwrap()
}

pub fn maximally_mixed_pair() -> DensityMatrix {
    DensityMatrix::maximally_mixed(vec![2, 2])
}

/// Product state from two single-qubit Bloch vectors.
pub fn product_from_bloch(a: [f64; 3], b: [f64; 3]) -> DensityMatrix {
    let one = |n: [f64; 3]| {
        let m = &ComplexMatrix::identity(2) + &super::pauli::bloch_observable(n);
        m.scale_real(0.5)
    };
    DensityMatrix::new(vec![2, 2], one(a).kron(&one(b))).unwrap()
}
