//! Phenomenological decoherence of the two-photon polarization state.
//!
//! Dephasing models a polarization-dependent delay on the second photon:
//! a fraction `η` of the coherence between different second-qubit
//! polarizations is lost. Distinguishability mixes the singlet with the
//! state left by fully distinguishable photons.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::certify::{chsh_max, ppt_report, witness_w, CertifyError};
use crate::qmath::{states, ComplexMatrix, DensityMatrix, QmathError};

/// Weight on the singlet that reproduces the measured witness `−0.72`
/// (`W = 1 − 2p` for `p|Ψ−><Ψ−| + (1−p)ρ_mix`).
pub const BASELINE_WEIGHT: f64 = 0.86;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("{name} = {value} is outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },
    #[error(transparent)]
    Math(#[from] QmathError),
    #[error(transparent)]
    Certify(#[from] CertifyError),
}

fn check_unit(name: &'static str, value: f64) -> Result<f64, NoiseError> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(NoiseError::OutOfRange { name, value })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DephasingParams {
    eta: f64,
}

impl DephasingParams {
    pub fn new(eta: f64) -> Result<Self, NoiseError> {
        Ok(Self {
            eta: check_unit("eta", eta)?,
        })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistinguishabilityParams {
    v: f64,
}

impl DistinguishabilityParams {
    pub fn new(v: f64) -> Result<Self, NoiseError> {
        Ok(Self {
            v: check_unit("v", v)?,
        })
    }

    pub fn v(&self) -> f64 {
        self.v
    }
}

/// The dephasing map on an arbitrary 4x4 operator: elements joining basis
/// states with different second-qubit values are scaled by `1 − η`.
pub fn dephase_operator(m: &ComplexMatrix, eta: f64) -> ComplexMatrix {
    let mut out = m.clone();
    for i in 0..4 {
        for j in 0..4 {
            if i % 2 != j % 2 {
                out[(i, j)] *= 1.0 - eta;
            }
        }
    }
    out
}

/// `(1−η)ρ + η D(ρ)`.
pub fn dephase(rho: &DensityMatrix, p: DephasingParams) -> Result<DensityMatrix, NoiseError> {
    if rho.dims() != [2, 2] {
        return Err(CertifyError::DimensionMismatch(rho.dim()).into());
    }
    Ok(DensityMatrix::new(vec![2, 2], dephase_operator(rho.matrix(), p.eta))?)
}

/// Choi matrix `Σ_ij |i><j| ⊗ E(|i><j|)` of the dephasing map.
pub fn dephasing_choi(eta: f64) -> ComplexMatrix {
    let mut choi = ComplexMatrix::zeros(16, 16);
    for i in 0..4 {
        for j in 0..4 {
            let mut unit = ComplexMatrix::zeros(4, 4);
            unit[(i, j)] = 1.0.into();
            let mut outer = ComplexMatrix::zeros(4, 4);
            outer[(i, j)] = 1.0.into();
            choi = &choi + &outer.kron(&dephase_operator(&unit, eta));
        }
    }
    choi
}

/// `v|Ψ−><Ψ−| + (1−v)ρ_dist`.
pub fn distinguishable_state(p: DistinguishabilityParams) -> DensityMatrix {
    states::singlet()
        .projector()
        .convex(&states::rho_dist(), p.v)
        .expect("both states are two-qubit")
}

/// `p a + (1−p) b`.
pub fn mix(a: &DensityMatrix, b: &DensityMatrix, p: f64) -> Result<DensityMatrix, NoiseError> {
    check_unit("p", p)?;
    Ok(a.convex(b, p)?)
}

/// Singlet weight of the isotropic-in-XY mixture that gives witness `w`.
pub fn baseline_weight_from_witness(w: f64) -> f64 {
    (1.0 - w) / 2.0
}

/// Dephased `weight·|Ψ−><Ψ−| + (1−weight)·ρ_mix`.
pub fn baseline_state(eta: f64, weight: f64) -> Result<DensityMatrix, NoiseError> {
    let base = mix(&states::singlet().projector(), &states::rho_mix(), weight)?;
    dephase(&base, DephasingParams::new(eta)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    pub param: f64,
    pub witness: f64,
    pub chsh_max: f64,
    pub negativity: f64,
}

pub fn scan_row(param: f64, rho: &DensityMatrix) -> Result<ScanRow, NoiseError> {
    Ok(ScanRow {
        param,
        witness: witness_w(rho)?,
        chsh_max: chsh_max(rho)?.value,
        negativity: ppt_report(rho)?.negativity,
    })
}

/// Dephased singlet over an η grid, in grid order.
pub fn eta_scan(grid: &[f64]) -> Result<Vec<ScanRow>, NoiseError> {
    let singlet = states::singlet().projector();
    grid.par_iter()
        .map(|&eta| scan_row(eta, &dephase(&singlet, DephasingParams::new(eta)?)?))
        .collect()
}

/// Distinguishability family over a v grid, in grid order.
pub fn v_scan(grid: &[f64]) -> Result<Vec<ScanRow>, NoiseError> {
    grid.par_iter()
        .map(|&v| scan_row(v, &distinguishable_state(DistinguishabilityParams::new(v)?)))
        .collect()
}

/// Writes `<param>,witness,chsh_max,negativity` rows.
pub fn write_scan_csv<W: Write>(out: W, param: &str, rows: &[ScanRow]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([param, "witness", "chsh_max", "negativity"])?;
    for r in rows {
        w.write_record([r.param, r.witness, r.chsh_max, r.negativity].map(crate::format_real))?;
    }
    w.flush()?;
    Ok(())
}

/// First zero of the piecewise-linear interpolant through `(xs, ys)`.
pub fn zero_crossing(xs: &[f64], ys: &[f64]) -> Option<f64> {
    for k in 1..xs.len().min(ys.len()) {
        let (y0, y1) = (ys[k - 1], ys[k]);
        if y0 == 0.0 {
            return Some(xs[k - 1]);
        }
        if y0.signum() != y1.signum() {
            return Some(xs[k - 1] + (xs[k] - xs[k - 1]) * y0 / (y0 - y1));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::hermitian_eig;

    fn singlet() -> DensityMatrix {
        states::singlet().projector()
    }

    fn eta(x: f64) -> DephasingParams {
        DephasingParams::new(x).unwrap()
    }

    #[test]
    fn dephasing_endpoints() {
        let full = dephase(&singlet(), eta(1.0)).unwrap();
        assert!(full.matrix().max_abs_diff(states::rho_mix().matrix()) < 1e-15);
        let none = dephase(&states::rho_dist(), eta(0.0)).unwrap();
        assert!(none.matrix().max_abs_diff(states::rho_dist().matrix()) < 1e-15);
        let half = dephase(&singlet(), eta(0.5)).unwrap();
        assert!((half.matrix()[(1, 2)].re + 0.25).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(matches!(DephasingParams::new(1.2), Err(NoiseError::OutOfRange { .. })));
        assert!(matches!(DistinguishabilityParams::new(-0.1), Err(NoiseError::OutOfRange { .. })));
        assert!(mix(&singlet(), &singlet(), 2.0).is_err());
    }

    #[test]
    fn dephasing_is_cptp() {
        for x in [0.0, 0.3, 0.77, 1.0] {
            let choi = dephasing_choi(x);
            let min = *hermitian_eig(&choi).unwrap().values.last().unwrap();
            assert!(min >= -1e-10, "{min}");
            // tracing the output factor gives the identity
            for i in 0..4 {
                for j in 0..4 {
                    let t: num_complex::Complex64 = (0..4).map(|k| choi[(i * 4 + k, j * 4 + k)]).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((t - want).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn dephasing_composes_multiplicatively() {
        let rho = states::rho_dist();
        let twice = dephase(&dephase(&rho, eta(0.3)).unwrap(), eta(0.6)).unwrap();
        let once = dephase(&rho, eta(1.0 - 0.7 * 0.4)).unwrap();
        assert!(twice.matrix().max_abs_diff(once.matrix()) < 1e-15);
    }

    #[test]
    fn witness_linear_in_eta() {
        for k in 0..=20 {
            let x = k as f64 / 20.0;
            let w = witness_w(&dephase(&singlet(), eta(x)).unwrap()).unwrap();
            assert!((w - (2.0 * x - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn distinguishable_family() {
        let w = |v: f64| witness_w(&distinguishable_state(DistinguishabilityParams::new(v).unwrap())).unwrap();
        assert!((w(1.0) + 1.0).abs() < 1e-12);
        assert!((w(0.0) - 1.0).abs() < 1e-12);
        assert!((w(0.9125) + 0.825).abs() < 1e-12);
    }

    #[test]
    fn negativity_monotone_in_v() {
        let grid: Vec<f64> = (0..=20).map(|k| k as f64 / 20.0).collect();
        let rows = v_scan(&grid).unwrap();
        assert!(rows[0].negativity.abs() < 1e-12);
        assert!((rows[20].negativity - 0.5).abs() < 1e-12);
        for w in rows.windows(2) {
            assert!(w[1].negativity >= w[0].negativity - 1e-12);
        }
    }

    #[test]
    fn baseline_model() {
        assert!((baseline_weight_from_witness(-0.72) - BASELINE_WEIGHT).abs() < 1e-12);
        let w0 = witness_w(&baseline_state(0.0, BASELINE_WEIGHT).unwrap()).unwrap();
        assert!((w0 + 0.72).abs() < 1e-12);
        let grid: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
        let ws: Vec<f64> = grid
            .iter()
            .map(|&x| witness_w(&baseline_state(x, BASELINE_WEIGHT).unwrap()).unwrap())
            .collect();
        let crossing = zero_crossing(&grid, &ws).unwrap();
        assert!((crossing - (1.0 - 1.0 / 1.72)).abs() < 1e-9);
    }

    #[test]
    fn mix_examples() {
        let m = mix(&singlet(), &states::rho_mix(), 1.0).unwrap();
        assert!(m.matrix().max_abs_diff(singlet().matrix()) < 1e-15);
        let same = mix(&states::rho_dist(), &states::rho_dist(), 0.5).unwrap();
        assert!(same.matrix().max_abs_diff(states::rho_dist().matrix()) < 1e-15);
        let wrong = DensityMatrix::maximally_mixed(vec![2]);
        assert!(matches!(mix(&singlet(), &wrong, 0.5), Err(NoiseError::Math(_))));
    }

    #[test]
    fn scan_csv_header() {
        let rows = eta_scan(&[0.0, 1.0]).unwrap();
        let mut buf = Vec::new();
        write_scan_csv(&mut buf, "eta", &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("eta,witness,chsh_max,negativity"));
        let first: Vec<f64> = lines.next().unwrap().split(',').map(|f| f.parse().unwrap()).collect();
        assert_eq!(first[0], 0.0);
        assert!((first[1] + 1.0).abs() < 1e-12);
        assert!(text.lines().nth(1).unwrap().starts_with("0.0000000000000000e0,"));
    }
}
