//! Random states and local unitaries for property checks.

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::qmath::{ComplexMatrix, DensityMatrix, PureState};

fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random pure state.
pub fn haar_pure<R: Rng + ?Sized>(rng: &mut R, dims: Vec<usize>) -> PureState {
    let n = dims.iter().product();
    let amps = (0..n).map(|_| gaussian_c64(rng)).collect();
    PureState::normalized(dims, amps).expect("gaussian vector is nonzero")
}

/// Mixed state `GG†/tr(GG†)` from a square complex Ginibre matrix.
pub fn ginibre_mixed<R: Rng + ?Sized>(rng: &mut R, dims: Vec<usize>) -> DensityMatrix {
    let n: usize = dims.iter().product();
    let g = ComplexMatrix::new(n, n, (0..n * n).map(|_| gaussian_c64(rng)).collect()).unwrap();
    let m = &g * &g.adjoint();
    let t = m.trace().re;
    DensityMatrix::new(dims, m.scale_real(1.0 / t)).expect("Ginibre product is a state")
}

pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-9 {
            return v.map(|x| x / n);
        }
    }
}

/// Haar-random element of SU(2).
pub fn haar_qubit_unitary<R: Rng + ?Sized>(rng: &mut R) -> ComplexMatrix {
    let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
    let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    let a = C64::new(q[0], q[1]) / n;
    let b = C64::new(q[2], q[3]) / n;
    ComplexMatrix::from_rows(&[[a, -b.conj()], [b, a.conj()]])
}

pub fn local_unitary<R: Rng + ?Sized>(rng: &mut R) -> ComplexMatrix {
    haar_qubit_unitary(rng).kron(&haar_qubit_unitary(rng))
}

/// Convex mixture of `terms` random pure product states.
pub fn separable<R: Rng + ?Sized>(rng: &mut R, terms: usize) -> DensityMatrix {
    let weights: Vec<f64> = (0..terms).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = weights.iter().sum();
    let mut m = ComplexMatrix::zeros(4, 4);
    for w in weights {
        let a = haar_pure(rng, vec![2]);
        let b = haar_pure(rng, vec![2]);
        let p = a.tensor(&b).projector();
        m = &m + &p.matrix().scale_real(w / total);
    }
    DensityMatrix::new(vec![2, 2], m).unwrap()
}
