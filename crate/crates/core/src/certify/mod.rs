//! Entanglement certification for two-qubit states: Pauli correlators, the
//! `1 − |<XX> + <YY>|` witness, CHSH, partial-transpose tests, Poissonian
//! count simulation and state tomography.

mod counts;
pub mod random;
mod report;
mod tomography;

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qmath::{hermitian_eig, partial_transpose, pauli, ComplexMatrix, DensityMatrix, QmathError};

pub use counts::{outcome_probabilities, read_counts_csv, simulate_counts, write_counts_csv, CountsRecord, Outcome, CSV_HEADER};
pub use report::{certify_counts, certify_state, CertificationReport, CertifyOptions, Estimate, Verdict};
pub use tomography::{
    log_likelihood, mle_fit, monte_carlo_errors, pauli_settings, tomography_linear, tomography_mle, ErrorIntervals,
    MleOptions, MleOutcome, TomographyResult,
};

const UNIT_TOL: f64 = 1e-12;
/// Parsed Bloch triples this close to unit length are renormalized.
const PARSE_UNIT_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertifyError {
    #[error("expected a two-qubit state, got dimension {0}")]
    DimensionMismatch(usize),
    #[error("missing measurement setting {0}")]
    MissingSetting(String),
    #[error("invalid measurement axis: {0}")]
    InvalidSetting(String),
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: u64,
        column: u64,
        message: String,
    },
    #[error("{0} must be at least {1}")]
    TooSmall(&'static str, usize),
    #[error(transparent)]
    Math(#[from] QmathError),
}

/// Unit Bloch vector naming a single-qubit ±1 observable `n·σ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis(pub [f64; 3]);

impl Axis {
    pub const X: Axis = Axis([1.0, 0.0, 0.0]);
    pub const Y: Axis = Axis([0.0, 1.0, 0.0]);
    pub const Z: Axis = Axis([0.0, 0.0, 1.0]);

    pub fn new(n: [f64; 3]) -> Result<Self, CertifyError> {
        let norm = n.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOL {
            return Err(CertifyError::InvalidSetting(format!("{n:?} has norm {norm}")));
        }
        Ok(Self(n))
    }

    pub fn observable(&self) -> ComplexMatrix {
        pauli::bloch_observable(self.0)
    }

    pub fn neg(self) -> Self {
        Axis(self.0.map(|x| -x))
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Axis::X => write!(f, "X"),
            Axis::Y => write!(f, "Y"),
            Axis::Z => write!(f, "Z"),
            Axis([x, y, z]) => write!(f, "{x}:{y}:{z}"),
        }
    }
}

impl FromStr for Axis {
    type Err = CertifyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "X" | "x" => return Ok(Axis::X),
            "Y" | "y" => return Ok(Axis::Y),
            "Z" | "z" => return Ok(Axis::Z),
            _ => {}
        }
        let parts: Vec<&str> = s.trim().split(':').collect();
        if parts.len() != 3 {
            return Err(CertifyError::InvalidSetting(format!(
                "`{s}` is neither X, Y, Z nor x:y:z"
            )));
        }
        let mut n = [0.0; 3];
        for (slot, p) in n.iter_mut().zip(&parts) {
            *slot = p
                .trim()
                .parse()
                .map_err(|_| CertifyError::InvalidSetting(format!("`{p}` is not a number")))?;
        }
        let norm = n.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > PARSE_UNIT_TOL {
            return Err(CertifyError::InvalidSetting(format!("`{s}` has norm {norm}")));
        }
        Axis::new(n).or(Ok(Axis(n.map(|x| x / norm))))
    }
}

/// A pair of local ±1 observables, one per qubit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSetting {
    pub a: Axis,
    pub b: Axis,
}

impl MeasurementSetting {
    pub fn new(a: Axis, b: Axis) -> Self {
        Self { a, b }
    }

    pub fn observable(&self) -> ComplexMatrix {
        self.a.observable().kron(&self.b.observable())
    }
}

impl fmt::Display for MeasurementSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.a, self.b)
    }
}

/// `(A₀, A₁, B₀, B₁)` for `S = |E(A₀B₀) + E(A₀B₁) + E(A₁B₀) − E(A₁B₁)|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChshSettings {
    pub a0: Axis,
    pub a1: Axis,
    pub b0: Axis,
    pub b1: Axis,
}

impl ChshSettings {
    /// Optimal for `|Ψ−>`: `A₀ = Z, A₁ = X, B₀ = −(Z+X)/√2, B₁ = (X−Z)/√2`.
    pub fn singlet_optimal() -> Self {
        let s = FRAC_1_SQRT_2;
        Self {
            a0: Axis::Z,
            a1: Axis::X,
            b0: Axis([-s, 0.0, -s]),
            b1: Axis([s, 0.0, -s]),
        }
    }

    pub fn pairs(&self) -> [MeasurementSetting; 4] {
        [
            MeasurementSetting::new(self.a0, self.b0),
            MeasurementSetting::new(self.a0, self.b1),
            MeasurementSetting::new(self.a1, self.b0),
            MeasurementSetting::new(self.a1, self.b1),
        ]
    }
}

impl Default for ChshSettings {
    fn default() -> Self {
        Self::singlet_optimal()
    }
}

fn check_two_qubit(rho: &DensityMatrix) -> Result<(), CertifyError> {
    if rho.dims() == [2, 2] {
        Ok(())
    } else {
        Err(CertifyError::DimensionMismatch(rho.dim()))
    }
}

/// `tr(ρ (a·σ)⊗(b·σ))`.
pub fn correlator(rho: &DensityMatrix, s: &MeasurementSetting) -> Result<f64, CertifyError> {
    check_two_qubit(rho)?;
    Ok(rho.expectation(&s.observable()).re)
}

/// `W = 1 − |<XX> + <YY>|`; negative values certify entanglement.
pub fn witness_w(rho: &DensityMatrix) -> Result<f64, CertifyError> {
    let xx = correlator(rho, &MeasurementSetting::new(Axis::X, Axis::X))?;
    let yy = correlator(rho, &MeasurementSetting::new(Axis::Y, Axis::Y))?;
    Ok(1.0 - (xx + yy).abs())
}

pub fn chsh(rho: &DensityMatrix, settings: &ChshSettings) -> Result<f64, CertifyError> {
    let [e00, e01, e10, e11] = settings.pairs();
    Ok((correlator(rho, &e00)? + correlator(rho, &e01)? + correlator(rho, &e10)? - correlator(rho, &e11)?).abs())
}

/// Pauli correlation matrix `T_ij = <σ_i ⊗ σ_j>`.
pub fn correlation_matrix(rho: &DensityMatrix) -> Result<[[f64; 3]; 3], CertifyError> {
    let axes = [Axis::X, Axis::Y, Axis::Z];
    let mut t = [[0.0; 3]; 3];
    for (i, a) in axes.iter().enumerate() {
        for (j, b) in axes.iter().enumerate() {
            t[i][j] = correlator(rho, &MeasurementSetting::new(*a, *b))?;
        }
    }
    Ok(t)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ChshMax {
    pub value: f64,
    pub settings: ChshSettings,
}

/// Maximal CHSH value `2√(λ₁+λ₂)` over all local settings, with settings
/// that reach it. `λ₁ ≥ λ₂` are the largest eigenvalues of `TᵀT`.
pub fn chsh_max(rho: &DensityMatrix) -> Result<ChshMax, CertifyError> {
    let t = correlation_matrix(rho)?;
    let mut ttt = [[0.0; 3]; 3];
    for (i, row) in ttt.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (0..3).map(|k| t[k][i] * t[k][j]).sum();
        }
    }
    let eig = hermitian_eig(&ComplexMatrix::from_real_rows(&ttt))?;
    let (l1, l2) = (eig.values[0].max(0.0), eig.values[1].max(0.0));
    let c1: [f64; 3] = std::array::from_fn(|i| eig.vectors[(i, 0)].re);
    let c2: [f64; 3] = std::array::from_fn(|i| eig.vectors[(i, 1)].re);
    let theta = l2.sqrt().atan2(l1.sqrt());
    let b0: [f64; 3] = std::array::from_fn(|i| theta.cos() * c1[i] + theta.sin() * c2[i]);
    let b1: [f64; 3] = std::array::from_fn(|i| theta.cos() * c1[i] - theta.sin() * c2[i]);
    let image = |c: [f64; 3], fallback: [f64; 3]| {
        let v: [f64; 3] = std::array::from_fn(|i| (0..3).map(|j| t[i][j] * c[j]).sum());
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            Axis(v.map(|x| x / n))
        } else {
            Axis(fallback)
        }
    };
    let settings = ChshSettings {
        a0: image(c1, [0.0, 0.0, 1.0]),
        a1: image(c2, [1.0, 0.0, 0.0]),
        b0: Axis(b0),
        b1: Axis(b1),
    };
    Ok(ChshMax {
        value: 2.0 * (l1 + l2).sqrt(),
        settings,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PptReport {
    /// Eigenvalues of the partial transpose on the second qubit, descending.
    pub eigenvalues: [f64; 4],
    pub negativity: f64,
}

impl PptReport {
    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[3]
    }
}

pub fn ppt_report(rho: &DensityMatrix) -> Result<PptReport, CertifyError> {
    check_two_qubit(rho)?;
    let pt = partial_transpose(rho, 1)?;
    let values = hermitian_eig(&pt)?.values;
    let eigenvalues: [f64; 4] = values.try_into().expect("4x4 spectrum");
    let negativity = eigenvalues.iter().filter(|&&l| l < 0.0).map(|l| -l).sum::<f64>() + 0.0;
    Ok(PptReport {
        eigenvalues,
        negativity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::states;
    use std::f64::consts::SQRT_2;

    fn dephased_singlet(eta: f64) -> DensityMatrix {
        crate::noise::dephase(&states::singlet().projector(), crate::noise::DephasingParams::new(eta).unwrap()).unwrap()
    }

    #[test]
    fn singlet_correlators() {
        let s = states::singlet().projector();
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            let c = correlator(&s, &MeasurementSetting::new(axis, axis)).unwrap();
            assert!((c + 1.0).abs() < 1e-12);
        }
        let xx = correlator(&states::rho_mix(), &MeasurementSetting::new(Axis::X, Axis::X)).unwrap();
        assert!(xx.abs() < 1e-12);
    }

    #[test]
    fn witness_values() {
        assert!((witness_w(&states::singlet().projector()).unwrap() + 1.0).abs() < 1e-12);
        assert!((witness_w(&states::rho_mix()).unwrap() - 1.0).abs() < 1e-12);
        assert!((witness_w(&states::rho_dist()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chsh_fixed_settings() {
        let s = chsh(&states::singlet().projector(), &ChshSettings::singlet_optimal()).unwrap();
        assert!((s - 2.0 * SQRT_2).abs() < 1e-12);
        let s = chsh(&dephased_singlet(0.5), &ChshSettings::singlet_optimal()).unwrap();
        assert!((s - SQRT_2 * 1.5).abs() < 1e-12);
    }

    #[test]
    fn horodecki_values() {
        let m = chsh_max(&states::singlet().projector()).unwrap();
        assert!((m.value - 2.0 * SQRT_2).abs() < 1e-12);
        let m = chsh_max(&states::rho_mix()).unwrap();
        assert!((m.value - 2.0).abs() < 1e-12);
        let m = chsh_max(&dephased_singlet(0.6)).unwrap();
        assert!((m.value - 2.0 * (1.0f64 + 0.16).sqrt()).abs() < 1e-12);
        assert!((m.value - 2.1541).abs() < 1e-4);
    }

    #[test]
    fn horodecki_settings_reach_maximum() {
        for eta in [0.0, 0.3, 0.6, 1.0] {
            let rho = dephased_singlet(eta);
            let m = chsh_max(&rho).unwrap();
            let s = chsh(&rho, &m.settings).unwrap();
            assert!((s - m.value).abs() < 1e-9, "eta {eta}: {s} vs {}", m.value);
        }
    }

    #[test]
    fn ppt_values() {
        let r = ppt_report(&states::singlet().projector()).unwrap();
        let want = [0.5, 0.5, 0.5, -0.5];
        for (a, b) in r.eigenvalues.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((r.negativity - 0.5).abs() < 1e-12);
        let r = ppt_report(&dephased_singlet(0.6)).unwrap();
        let want = [0.5, 0.5, 0.2, -0.2];
        for (a, b) in r.eigenvalues.iter().zip(want) {
            assert!((a - b).abs() < 1e-12, "{:?}", r.eigenvalues);
        }
        assert!(ppt_report(&states::rho_dist()).unwrap().min_eigenvalue() >= -1e-10);
    }

    #[test]
    fn axis_text_round_trip() {
        for text in ["X", "Y", "Z"] {
            assert_eq!(text.parse::<Axis>().unwrap().to_string(), text);
        }
        let b0 = ChshSettings::singlet_optimal().b0;
        let back: Axis = b0.to_string().parse().unwrap();
        assert_eq!(back, b0);
        assert!("0.5:0:0".parse::<Axis>().is_err());
        assert!("W".parse::<Axis>().is_err());
    }

    #[test]
    fn wrong_dimension_rejected() {
        let rho = DensityMatrix::maximally_mixed(vec![2]);
        assert!(matches!(witness_w(&rho), Err(CertifyError::DimensionMismatch(2))));
    }
}
