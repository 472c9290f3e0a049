//! Dense complex linear algebra for systems of a few qubits.

mod eig;
mod matrix;
pub mod states;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use eig::{hermitian_eig, HermitianEigen};
pub use matrix::{pauli, ComplexMatrix};

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const NORM_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QmathError {
    #[error("matrix is not Hermitian (max |M - M†| = {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("subsystem index {index} out of range for {count} subsystems")]
    BadSubsystem { index: usize, count: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("state is not normalized (norm or trace = {0})")]
    NotNormalized(f64),
    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),
    #[error("non-finite matrix entry")]
    NonFinite,
}

/// Normalized state vector on a tensor product of subsystems.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PureState {
    dims: Vec<usize>,
    amplitudes: Vec<C64>,
}

impl PureState {
    pub fn new(dims: Vec<usize>, amplitudes: Vec<C64>) -> Result<Self, QmathError> {
        let total: usize = dims.iter().product();
        if amplitudes.len() != total {
            return Err(QmathError::DimensionMismatch {
                expected: total,
                found: amplitudes.len(),
            });
        }
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(QmathError::NotNormalized(norm));
        }
        Ok(Self { dims, amplitudes })
    }

    /// Normalizes `amplitudes` before validating.
    pub fn normalized(dims: Vec<usize>, mut amplitudes: Vec<C64>) -> Result<Self, QmathError> {
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(QmathError::NotNormalized(norm));
        }
        amplitudes.iter_mut().for_each(|z| *z /= norm);
        Self::new(dims, amplitudes)
    }

    /// Computational basis state `|index>`.
    pub fn basis(dims: Vec<usize>, index: usize) -> Self {
        let total: usize = dims.iter().product();
        let mut amplitudes = vec![C64::new(0.0, 0.0); total];
        amplitudes[index] = C64::new(1.0, 0.0);
        Self { dims, amplitudes }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let amplitudes = self
            .amplitudes
            .iter()
            .flat_map(|a| other.amplitudes.iter().map(move |b| a * b))
            .collect();
        let dims = self.dims.iter().chain(&other.dims).copied().collect();
        Self { dims, amplitudes }
    }

    /// Applies `u` to the whole register. `u` must be unitary.
    pub fn evolve(&self, u: &ComplexMatrix) -> Result<Self, QmathError> {
        if u.cols() != self.dim() || u.rows() != self.dim() {
            return Err(QmathError::DimensionMismatch {
                expected: self.dim(),
                found: u.cols(),
            });
        }
        Self::new(self.dims.clone(), u.mul_vec(&self.amplitudes))
    }

    pub fn projector(&self) -> DensityMatrix {
        DensityMatrix {
            dims: self.dims.clone(),
            matrix: ComplexMatrix::outer(&self.amplitudes, &self.amplitudes),
        }
    }

    /// `|<self|other>|²`, insensitive to global phase.
    pub fn overlap(&self, other: &Self) -> f64 {
        self.inner(other).norm_sqr()
    }
}

/// Hermitian, positive semidefinite, unit-trace operator.
#[derive(Clone, Debug, Serialize)]
pub struct DensityMatrix {
    dims: Vec<usize>,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates the density-matrix invariants and stores the exactly
    /// Hermitian part of `matrix`.
    pub fn new(dims: Vec<usize>, matrix: ComplexMatrix) -> Result<Self, QmathError> {
        let total: usize = dims.iter().product();
        if !matrix.is_square() {
            return Err(QmathError::NotSquare {
                rows: matrix.rows(),
                cols: matrix.cols(),
            });
        }
        if matrix.rows() != total {
            return Err(QmathError::DimensionMismatch {
                expected: total,
                found: matrix.rows(),
            });
        }
        let deviation = matrix.hermitian_deviation();
        if deviation > NORM_TOL {
            return Err(QmathError::NotHermitian { deviation });
        }
        let matrix = matrix.hermitian_part();
        let tr = matrix.trace().re;
        if (tr - 1.0).abs() > NORM_TOL {
            return Err(QmathError::NotNormalized(tr));
        }
        let min = *hermitian_eig(&matrix)?.values.last().unwrap_or(&0.0);
        if min < -PSD_TOL {
            return Err(QmathError::NotPositive(min));
        }
        Ok(Self { dims, matrix })
    }

    pub fn maximally_mixed(dims: Vec<usize>) -> Self {
        let total: usize = dims.iter().product();
        Self {
            dims,
            matrix: ComplexMatrix::identity(total).scale_real(1.0 / total as f64),
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self {
            dims: self.dims.iter().chain(&other.dims).copied().collect(),
            matrix: self.matrix.kron(&other.matrix),
        }
    }

    /// `U ρ U†`.
    pub fn conjugate_by(&self, u: &ComplexMatrix) -> Result<Self, QmathError> {
        if u.rows() != self.dim() || u.cols() != self.dim() {
            return Err(QmathError::DimensionMismatch {
                expected: self.dim(),
                found: u.rows(),
            });
        }
        let m = &(u * &self.matrix) * &u.adjoint();
        Ok(Self {
            dims: self.dims.clone(),
            matrix: m.hermitian_part(),
        })
    }

    /// Expectation value `tr(ρ O)`.
    pub fn expectation(&self, observable: &ComplexMatrix) -> C64 {
        (&self.matrix * observable).trace()
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eig(&self.matrix)
            .expect("density matrix is Hermitian")
            .values
    }

    /// Von Neumann entropy in bits.
    pub fn entropy_bits(&self) -> f64 {
        self.eigenvalues()
            .into_iter()
            .filter(|&l| l > 1e-15)
            .map(|l| -l * l.log2())
            .sum()
    }

    /// `½ ‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &Self) -> Result<f64, QmathError> {
        if self.dim() != other.dim() {
            return Err(QmathError::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let diff = &self.matrix - &other.matrix;
        Ok(0.5 * hermitian_eig(&diff)?.values.iter().map(|l| l.abs()).sum::<f64>())
    }

    /// Convex combination `w ρ + (1−w) σ` of two states of equal shape.
    pub fn convex(&self, other: &Self, w: f64) -> Result<Self, QmathError> {
        if self.dims != other.dims {
            return Err(QmathError::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let m = &self.matrix.scale_real(w) + &other.matrix.scale_real(1.0 - w);
        Self::new(self.dims.clone(), m)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            dims: Vec<usize>,
            matrix: ComplexMatrix,
        }
        let raw = Raw::deserialize(deserializer)?;
        DensityMatrix::new(raw.dims, raw.matrix).map_err(serde::de::Error::custom)
    }
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

fn digits(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut d = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        d[k] = index % dims[k];
        index /= dims[k];
    }
    d
}

/// Reduced state on the subsystems listed in `keep` (in ascending order).
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix, QmathError> {
    let dims = rho.dims();
    let count = dims.len();
    if keep.is_empty() {
        return Err(QmathError::BadSubsystem { index: 0, count: 0 });
    }
    if let Some(&bad) = keep.iter().find(|&&k| k >= count) {
        return Err(QmathError::BadSubsystem { index: bad, count });
    }
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    let traced: Vec<usize> = (0..count).filter(|k| !keep.contains(k)).collect();

    let full_strides = strides(dims);
    let keep_dims: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
    let keep_total: usize = keep_dims.iter().product();
    let traced_total: usize = traced_dims.iter().product();

    let offset = |sel: &[usize], idx: usize| -> usize {
        let ds: Vec<usize> = sel.iter().map(|&k| dims[k]).collect();
        digits(idx, &ds)
            .iter()
            .zip(sel)
            .map(|(d, &k)| d * full_strides[k])
            .sum()
    };

    let keep_offsets: Vec<usize> = (0..keep_total).map(|i| offset(&keep, i)).collect();
    let traced_offsets: Vec<usize> = (0..traced_total)
        .map(|i| offset(&traced, i))
        .collect();

    let m = rho.matrix();
    let mut out = ComplexMatrix::zeros(keep_total, keep_total);
    for (a, &oa) in keep_offsets.iter().enumerate() {
        for (b, &ob) in keep_offsets.iter().enumerate() {
            out[(a, b)] = traced_offsets.iter().map(|&t| m[(oa + t, ob + t)]).sum();
        }
    }
    Ok(DensityMatrix {
        dims: keep_dims,
        matrix: out.hermitian_part(),
    })
}

/// Transpose on the tensor factor `subsystem`.
pub fn partial_transpose(rho: &DensityMatrix, subsystem: usize) -> Result<ComplexMatrix, QmathError> {
    let dims = rho.dims();
    if subsystem >= dims.len() {
        return Err(QmathError::BadSubsystem {
            index: subsystem,
            count: dims.len(),
        });
    }
    let stride = strides(dims)[subsystem];
    let d = dims[subsystem];
    let n = rho.dim();
    let m = rho.matrix();
    let mut out = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        let di = (i / stride) % d;
        for j in 0..n {
            let dj = (j / stride) % d;
            let i2 = i - di * stride + dj * stride;
            let j2 = j - dj * stride + di * stride;
            out[(i, j)] = m[(i2, j2)];
        }
    }
    Ok(out)
}

/// `<ψ|ρ|ψ>`.
pub fn fidelity_pure(rho: &DensityMatrix, psi: &PureState) -> Result<f64, QmathError> {
    if rho.dim() != psi.dim() {
        return Err(QmathError::DimensionMismatch {
            expected: rho.dim(),
            found: psi.dim(),
        });
    }
    let amps = psi.amplitudes();
    let rho_psi = rho.matrix().mul_vec(amps);
    let f: C64 = amps.iter().zip(&rho_psi).map(|(a, b)| a.conj() * b).sum();
    Ok(f.re)
}

/// Principal square root of a positive semidefinite Hermitian matrix;
/// small negative eigenvalues are clipped to zero.
pub fn psd_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix, QmathError> {
    let eig = hermitian_eig(m)?;
    let n = m.rows();
    let mut out = ComplexMatrix::zeros(n, n);
    for (k, &l) in eig.values.iter().enumerate() {
        let v = eig.vectors.column(k);
        out = &out + &ComplexMatrix::outer(&v, &v).scale_real(l.max(0.0).sqrt());
    }
    Ok(out)
}

/// Uhlmann fidelity `(tr √(√ρ σ √ρ))²`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64, QmathError> {
    if rho.dims() != sigma.dims() {
        return Err(QmathError::DimensionMismatch {
            expected: rho.dim(),
            found: sigma.dim(),
        });
    }
    let root = psd_sqrt(rho.matrix())?;
    let inner = (&(&root * sigma.matrix()) * &root).hermitian_part();
    let t: f64 = hermitian_eig(&inner)?
        .values
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .sum();
    Ok((t * t).min(1.0))
}

/// Schmidt coefficients of `psi` across the cut `part | rest`, descending.
pub fn schmidt_coefficients(psi: &PureState, part: &[usize]) -> Result<Vec<f64>, QmathError> {
    let reduced = partial_trace(&psi.projector(), part)?;
    Ok(reduced
        .eigenvalues()
        .into_iter()
        .map(|l| l.max(0.0).sqrt())
        .collect())
}

/// Builds the operator that applies `gate` to the subsystems `targets`
/// (in the gate's own factor order) and identity elsewhere.
pub fn embed_operator(
    gate: &ComplexMatrix,
    targets: &[usize],
    dims: &[usize],
) -> Result<ComplexMatrix, QmathError> {
    if let Some(&bad) = targets.iter().find(|&&t| t >= dims.len()) {
        return Err(QmathError::BadSubsystem {
            index: bad,
            count: dims.len(),
        });
    }
    let target_dims: Vec<usize> = targets.iter().map(|&t| dims[t]).collect();
    let gate_dim: usize = target_dims.iter().product();
    if gate.rows() != gate_dim || gate.cols() != gate_dim {
        return Err(QmathError::DimensionMismatch {
            expected: gate_dim,
            found: gate.rows(),
        });
    }
    let full_strides = strides(dims);
    let n: usize = dims.iter().product();
    let local = |idx: usize| -> usize {
        let d = digits(idx, dims);
        targets
            .iter()
            .fold(0, |acc, &t| acc * dims[t] + d[t])
    };
    let target_offsets: Vec<usize> = (0..gate_dim)
        .map(|g| {
            digits(g, &target_dims)
                .iter()
                .zip(targets)
                .map(|(d, &t)| d * full_strides[t])
                .sum()
        })
        .collect();

    let mut out = ComplexMatrix::zeros(n, n);
    for col in 0..n {
        let lc = local(col);
        let base = col - target_offsets[lc];
        for (lr, &off) in target_offsets.iter().enumerate() {
            out[(base + off, col)] = gate[(lr, lc)];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn singlet() -> PureState {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        PureState::new(vec![2, 2], vec![c(0.0), c(-s), c(s), c(0.0)]).unwrap()
    }

    #[test]
    fn singlet_marginals_are_maximally_mixed() {
        let rho = singlet().projector();
        for keep in [0, 1] {
            let r = partial_trace(&rho, &[keep]).unwrap();
            assert!(r
                .matrix()
                .max_abs_diff(&ComplexMatrix::identity(2).scale_real(0.5))
                < 1e-15);
        }
    }

    #[test]
    fn partial_trace_bad_index() {
        let rho = singlet().projector();
        assert!(matches!(
            partial_trace(&rho, &[2]),
            Err(QmathError::BadSubsystem { index: 2, count: 2 })
        ));
        assert!(partial_trace(&rho, &[]).is_err());
    }

    #[test]
    fn partial_transpose_of_singlet() {
        let pt = partial_transpose(&singlet().projector(), 1).unwrap();
        let e = hermitian_eig(&pt).unwrap();
        for (g, w) in e.values.iter().zip([0.5, 0.5, 0.5, -0.5]) {
            assert!((g - w).abs() < 1e-12);
        }
        assert!(matches!(
            partial_transpose(&singlet().projector(), 5),
            Err(QmathError::BadSubsystem { .. })
        ));
    }

    #[test]
    fn partial_transpose_fixes_identity() {
        let mixed = DensityMatrix::maximally_mixed(vec![2, 2]);
        let pt = partial_transpose(&mixed, 0).unwrap();
        assert!(pt.max_abs_diff(mixed.matrix()) == 0.0);
    }

    #[test]
    fn fidelity_examples() {
        let psi = singlet();
        assert!((fidelity_pure(&psi.projector(), &psi).unwrap() - 1.0).abs() < 1e-15);
        let mixed = DensityMatrix::maximally_mixed(vec![2, 2]);
        assert!((fidelity_pure(&mixed, &psi).unwrap() - 0.25).abs() < 1e-15);
        let qubit = PureState::basis(vec![2], 0);
        assert!(matches!(
            fidelity_pure(&mixed, &qubit),
            Err(QmathError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn density_matrix_validation() {
        let bad_trace = ComplexMatrix::identity(2);
        assert!(matches!(
            DensityMatrix::new(vec![2], bad_trace),
            Err(QmathError::NotNormalized(_))
        ));
        let negative = ComplexMatrix::from_real_rows(&[[1.5, 0.0], [0.0, -0.5]]);
        assert!(matches!(
            DensityMatrix::new(vec![2], negative),
            Err(QmathError::NotPositive(_))
        ));
    }

    #[test]
    fn embed_matches_kron_for_leading_factor() {
        let x = pauli::x();
        let full = embed_operator(&x, &[0], &[2, 2]).unwrap();
        assert_eq!(full, x.kron(&ComplexMatrix::identity(2)));
        let full = embed_operator(&x, &[1], &[2, 2]).unwrap();
        assert_eq!(full, ComplexMatrix::identity(2).kron(&x));
    }

    #[test]
    fn embed_reversed_targets_swaps_control() {
        // CNOT with control on its first factor, placed as control=1, target=0.
        let cnot = ComplexMatrix::from_real_rows(&[
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, 1.0, 0.0],
        ]);
        let full = embed_operator(&cnot, &[1, 0], &[2, 2]).unwrap();
        // |01> (control qubit 1 set) -> |11>
        let out = full.mul_vec(&PureState::basis(vec![2, 2], 1).amplitudes().to_vec());
        assert!((out[3] - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn uhlmann_fidelity_cases() {
        let singlet = states::singlet();
        let mixed = DensityMatrix::maximally_mixed(vec![2, 2]);
        let f = fidelity(&singlet.projector(), &mixed).unwrap();
        assert!((f - 0.25).abs() < 1e-12);
        let f = fidelity(&mixed, &singlet.projector()).unwrap();
        assert!((f - 0.25).abs() < 1e-12);
        let d = states::rho_dist();
        assert!((fidelity(&d, &d).unwrap() - 1.0).abs() < 1e-10);
        // commuting diagonal states: (Σ √(p q))²
        let a = DensityMatrix::new(vec![2], ComplexMatrix::from_real_rows(&[[0.9, 0.0], [0.0, 0.1]])).unwrap();
        let b = DensityMatrix::new(vec![2], ComplexMatrix::from_real_rows(&[[0.5, 0.0], [0.0, 0.5]])).unwrap();
        let want = ((0.45f64).sqrt() + (0.05f64).sqrt()).powi(2);
        assert!((fidelity(&a, &b).unwrap() - want).abs() < 1e-12);
    }
}
