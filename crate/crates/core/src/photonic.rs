//! Two-photon linear-optics simulator.
//!
//! Single-photon modes are `(path, polarization, temporal label)` with paths
//! `out1, 1, 2, 3, 4, out4`. An [`OpticalNetwork`] is a unitary on those 24
//! modes; creation operators evolve as `a_i† → Σ_j (U†)_ij b_j†`. Two-photon
//! states are kept as explicit amplitude maps keyed by occupation multisets,
//! which at this size is exact and cheap.
//!
//! The entangling gate is the three-coupler post-selected controlled-phase:
//! couplers of reflectivity `R` on `(out1, 1)`, `(2, 3)` and `(4, out4)`,
//! keeping only runs with one photon in paths `{1, 2}` and one in `{3, 4}`.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{canonicalize_to_singlet, controlled_phase};
use crate::qmath::{pauli, states, ComplexMatrix, DensityMatrix, QmathError};

pub const MODE_COUNT: usize = 24;
const NORM_TOL: f64 = 1e-12;
const EMPTY_MASS: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhotonicError {
    #[error("{name} = {value} is outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("expected a {expected}-photon state, found a term with {found} photons")]
    PhotonNumberMismatch { expected: usize, found: usize },
    #[error("post-selection kept no probability mass ({mass:e})")]
    EmptyPostSelection { mass: f64 },
    #[error("input state is not normalized (norm² = {0})")]
    NotNormalized(f64),
    #[error(transparent)]
    Math(#[from] QmathError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Path {
    #[serde(rename = "out1")]
    Out1,
    #[serde(rename = "1")]
    P1,
    #[serde(rename = "2")]
    P2,
    #[serde(rename = "3")]
    P3,
    #[serde(rename = "4")]
    P4,
    #[serde(rename = "out4")]
    Out4,
}

impl Path {
    pub const ALL: [Path; 6] = [Path::Out1, Path::P1, Path::P2, Path::P3, Path::P4, Path::Out4];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    /// Qubit value under the `|0> = V`, `|1> = H` labelling.
    pub fn qubit(self) -> usize {
        match self {
            Polarization::V => 0,
            Polarization::H => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Mode {
    pub path: Path,
    pub polarization: Polarization,
    pub label: u8,
}

impl Mode {
    pub fn new(path: Path, polarization: Polarization, label: u8) -> Self {
        debug_assert!(label < 2);
        Self {
            path,
            polarization,
            label,
        }
    }

    /// Path-major, then polarization, then temporal label.
    pub fn index(self) -> usize {
        self.path as usize * 4 + self.polarization as usize * 2 + self.label as usize
    }

    pub fn from_index(i: usize) -> Self {
        let pol = if (i / 2) % 2 == 0 {
            Polarization::H
        } else {
            Polarization::V
        };
        Self::new(Path::ALL[i / 4], pol, (i % 2) as u8)
    }
}

/// Single-photon wavefunction over the 24 modes.
pub type Photon = [C64; MODE_COUNT];

pub fn photon_in(mode: Mode) -> Photon {
    let mut p = [C64::new(0.0, 0.0); MODE_COUNT];
    p[mode.index()] = C64::new(1.0, 0.0);
    p
}

/// Temporal amplitudes `(⟨0|τ⟩, ⟨1|τ⟩)` of a photon whose wavepacket has
/// real overlap `gamma` with the reference photon (label 0).
pub fn temporal_state(gamma: f64) -> [f64; 2] {
    [gamma, (1.0 - gamma * gamma).max(0.0).sqrt()]
}

/// Photon on `path` with polarization amplitudes `(H, V)` and temporal state `tau`.
pub fn photon(path: Path, pol: [C64; 2], tau: [f64; 2]) -> Photon {
    let mut p = [C64::new(0.0, 0.0); MODE_COUNT];
    for (pi, pol_amp) in [Polarization::H, Polarization::V].into_iter().zip(pol) {
        for (label, t) in tau.into_iter().enumerate() {
            p[Mode::new(path, pi, label as u8).index()] = pol_amp * t;
        }
    }
    p
}

/// Amplitudes over normalized Fock states, keyed by the sorted list of
/// occupied mode indices (a mode appears twice when doubly occupied).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FockState {
    terms: BTreeMap<Vec<usize>, C64>,
}

impl FockState {
    pub fn from_terms(terms: impl IntoIterator<Item = (Vec<usize>, C64)>) -> Self {
        let mut state = Self::default();
        for (mut key, amp) in terms {
            key.sort_unstable();
            *state.terms.entry(key).or_default() += amp;
        }
        state
    }

    /// `a†_a a†_b |0>` for two single-mode photons.
    pub fn pair(a: Mode, b: Mode) -> Self {
        Self::from_photons(&photon_in(a), &photon_in(b))
    }

    /// Normalized `(Σ p_i a_i†)(Σ q_j a_j†)|0>`.
    pub fn from_photons(p: &Photon, q: &Photon) -> Self {
        let mut state = Self::default();
        for (i, &pi) in p.iter().enumerate() {
            if pi == C64::new(0.0, 0.0) {
                continue;
            }
            for (j, &qj) in q.iter().enumerate() {
                if qj == C64::new(0.0, 0.0) {
                    continue;
                }
                state.add_monomial(i, j, pi * qj);
            }
        }
        let norm = state.norm_sqr().sqrt();
        state.terms.values_mut().for_each(|a| *a /= norm);
        state
    }

    /// Adds `coeff · a†_i a†_j |0>` expressed in normalized Fock states.
    fn add_monomial(&mut self, i: usize, j: usize, coeff: C64) {
        if i == j {
            *self.terms.entry(vec![i, i]).or_default() += coeff * std::f64::consts::SQRT_2;
        } else {
            *self.terms.entry(vec![i.min(j), i.max(j)]).or_default() += coeff;
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    /// Amplitude of the term with one photon in each of `a` and `b`
    /// (or two in `a` when `a == b`).
    pub fn amplitude(&self, a: Mode, b: Mode) -> C64 {
        let (i, j) = (a.index(), b.index());
        self.terms
            .get(&vec![i.min(j), i.max(j)])
            .copied()
            .unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[usize], C64)> {
        self.terms.iter().map(|(k, &v)| (k.as_slice(), v))
    }

    /// Drops amplitudes below `tol` in modulus.
    pub fn pruned(mut self, tol: f64) -> Self {
        self.terms.retain(|_, a| a.norm() > tol);
        self
    }
}

/// Power reflectivities of the central beam splitter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BsParams {
    pub r_h: f64,
    pub r_v: f64,
}

impl BsParams {
    pub const IDEAL: BsParams = BsParams {
        r_h: 1.0 / 3.0,
        r_v: 1.0 / 3.0,
    };
    /// Measured reflectivities of the laboratory beam splitter.
    pub const EXPERIMENTAL: BsParams = BsParams {
        r_h: 0.329,
        r_v: 0.337,
    };

    pub fn uniform(r: f64) -> Result<Self, PhotonicError> {
        Self::new(r, r)
    }

    pub fn new(r_h: f64, r_v: f64) -> Result<Self, PhotonicError> {
        check_unit("R_H", r_h)?;
        check_unit("R_V", r_v)?;
        Ok(Self { r_h, r_v })
    }

    fn for_polarization(&self, pol: Polarization) -> f64 {
        match pol {
            Polarization::H => self.r_h,
            Polarization::V => self.r_v,
        }
    }
}

impl Default for BsParams {
    fn default() -> Self {
        Self::IDEAL
    }
}

fn check_unit(name: &'static str, value: f64) -> Result<(), PhotonicError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(PhotonicError::OutOfRange { name, value })
    }
}

/// `[[i√R, √(1−R)], [√(1−R), i√R]]`.
pub fn coupler_unitary(r: f64) -> Result<ComplexMatrix, PhotonicError> {
    check_unit("R", r)?;
    let refl = C64::new(0.0, r.sqrt());
    let trans = C64::new((1.0 - r).sqrt(), 0.0);
    Ok(ComplexMatrix::from_rows(&[[refl, trans], [trans, refl]]))
}

/// Which photon a beam displacer belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhotonId {
    A,
    B,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "element", rename_all = "snake_case")]
pub enum Element {
    /// Splits one photon's polarizations over its two paths. Photon A sends
    /// H to path 2 (V stays on 1); photon B sends V to path 4 (H stays on 3).
    /// `imperfection` is the power leaking into the wrong port.
    BeamDisplacer { photon: PhotonId, imperfection: f64 },
    HalfWavePlate { path: Path, angle_deg: f64 },
    Coupler { first: Path, second: Path, bs: BsParams },
}

impl Element {
    fn unitary(&self) -> Result<ComplexMatrix, PhotonicError> {
        let mut u = ComplexMatrix::identity(MODE_COUNT);
        match *self {
            Element::BeamDisplacer {
                photon,
                imperfection,
            } => {
                check_unit("BD imperfection", imperfection)?;
                let (pol, from, to) = match photon {
                    PhotonId::A => (Polarization::H, Path::P1, Path::P2),
                    PhotonId::B => (Polarization::V, Path::P3, Path::P4),
                };
                let leak = imperfection.sqrt();
                let pass = (1.0 - imperfection).sqrt();
                let block = ComplexMatrix::from_real_rows(&[[leak, pass], [pass, -leak]]);
                for label in 0..2 {
                    place(
                        &mut u,
                        &block,
                        Mode::new(from, pol, label),
                        Mode::new(to, pol, label),
                    );
                }
            }
            Element::HalfWavePlate { path, angle_deg } => {
                let t = 2.0 * angle_deg.to_radians();
                let (c, s) = (t.cos(), t.sin());
                let block = ComplexMatrix::from_real_rows(&[[c, s], [s, -c]]);
                for label in 0..2 {
                    place(
                        &mut u,
                        &block,
                        Mode::new(path, Polarization::H, label),
                        Mode::new(path, Polarization::V, label),
                    );
                }
            }
            Element::Coupler { first, second, bs } => {
                for pol in [Polarization::H, Polarization::V] {
                    let block = coupler_unitary(bs.for_polarization(pol))?;
                    for label in 0..2 {
                        place(
                            &mut u,
                            &block,
                            Mode::new(first, pol, label),
                            Mode::new(second, pol, label),
                        );
                    }
                }
            }
        }
        Ok(u)
    }
}

/// Writes a 2x2 block acting on modes `(a, b)` into `u`.
fn place(u: &mut ComplexMatrix, block: &ComplexMatrix, a: Mode, b: Mode) {
    let idx = [a.index(), b.index()];
    for (r, &i) in idx.iter().enumerate() {
        for (c, &j) in idx.iter().enumerate() {
            u[(i, j)] = block[(r, c)];
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OpticalNetwork {
    elements: Vec<Element>,
    #[serde(skip)]
    mode_unitary: ComplexMatrix,
}

impl Default for OpticalNetwork {
    fn default() -> Self {
        Self::identity()
    }
}

impl OpticalNetwork {
    pub fn identity() -> Self {
        Self {
            elements: Vec::new(),
            mode_unitary: ComplexMatrix::identity(MODE_COUNT),
        }
    }

    /// Appends `element` after everything already in the network.
    pub fn then(mut self, element: Element) -> Result<Self, PhotonicError> {
        let u = element.unitary()?;
        self.mode_unitary = &u * &self.mode_unitary;
        self.elements.push(element);
        Ok(self)
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn mode_unitary(&self) -> &ComplexMatrix {
        &self.mode_unitary
    }

    /// Image of a single photon: `c'_j = Σ_i conj(U_ji) c_i`.
    pub fn propagate(&self, p: &Photon) -> Photon {
        let mut out = [C64::new(0.0, 0.0); MODE_COUNT];
        for (j, o) in out.iter_mut().enumerate() {
            *o = (0..MODE_COUNT)
                .map(|i| self.mode_unitary[(j, i)].conj() * p[i])
                .sum();
        }
        out
    }
}

/// Couplers on `(out1, 1)`, `(2, 3)` and `(4, out4)`.
pub fn build_cz_network(bs: BsParams) -> Result<OpticalNetwork, PhotonicError> {
    BsParams::new(bs.r_h, bs.r_v)?;
    OpticalNetwork::identity()
        .then(Element::Coupler {
            first: Path::Out1,
            second: Path::P1,
            bs,
        })?
        .then(Element::Coupler {
            first: Path::P2,
            second: Path::P3,
            bs,
        })?
        .then(Element::Coupler {
            first: Path::P4,
            second: Path::Out4,
            bs,
        })
}

/// Full interferometer: displacers, wave plates on the H-carrying paths
/// (2 and 3), the coupler array, the wave plates again and the recombining
/// displacers.
pub fn build_pipeline(bs: BsParams, bd_imperfection: f64) -> Result<OpticalNetwork, PhotonicError> {
    let bd = |photon| Element::BeamDisplacer {
        photon,
        imperfection: bd_imperfection,
    };
    let hwp = |path| Element::HalfWavePlate {
        path,
        angle_deg: 45.0,
    };
    let mut net = OpticalNetwork::identity()
        .then(bd(PhotonId::A))?
        .then(bd(PhotonId::B))?
        .then(hwp(Path::P2))?
        .then(hwp(Path::P3))?;
    for e in build_cz_network(bs)?.elements {
        net = net.then(e)?;
    }
    net.then(hwp(Path::P2))?
        .then(hwp(Path::P3))?
        .then(bd(PhotonId::A))?
        .then(bd(PhotonId::B))
}

/// Evolves a two-photon state through `net`.
pub fn evolve_two_photon(input: &FockState, net: &OpticalNetwork) -> Result<FockState, PhotonicError> {
    for (key, _) in input.terms() {
        if key.len() != 2 {
            return Err(PhotonicError::PhotonNumberMismatch {
                expected: 2,
                found: key.len(),
            });
        }
    }
    let norm = input.norm_sqr();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(PhotonicError::NotNormalized(norm));
    }
    let prop = net.mode_unitary.conj();
    let mut out = FockState::default();
    for (key, amp) in input.terms() {
        let (i, j) = (key[0], key[1]);
        // |2_i> = a_i†²|0>/√2
        let coeff = if i == j {
            amp / std::f64::consts::SQRT_2
        } else {
            amp
        };
        for k in 0..MODE_COUNT {
            let pk = prop[(k, i)];
            if pk == C64::new(0.0, 0.0) {
                continue;
            }
            for l in 0..MODE_COUNT {
                let pl = prop[(l, j)];
                if pl == C64::new(0.0, 0.0) {
                    continue;
                }
                out.add_monomial(k, l, coeff * pk * pl);
            }
        }
    }
    Ok(out)
}

/// Maps detected modes to `(photon slot, qubit value, environment tag)`.
/// Modes mapped to `None` are rejected by post-selection.
#[derive(Clone, Debug)]
pub struct QubitDecoder {
    map: [Option<(usize, usize, usize)>; MODE_COUNT],
}

impl QubitDecoder {
    /// Path qubits of the coupler array: slot 0 reads paths 1 → 0, 2 → 1,
    /// slot 1 reads paths 3 → 0, 4 → 1. Polarization and label are traced.
    pub fn path_qubits() -> Self {
        let mut map = [None; MODE_COUNT];
        for (i, entry) in map.iter_mut().enumerate() {
            let m = Mode::from_index(i);
            let env = m.polarization as usize * 2 + m.label as usize;
            *entry = match m.path {
                Path::P1 => Some((0, 0, env)),
                Path::P2 => Some((0, 1, env)),
                Path::P3 => Some((1, 0, env)),
                Path::P4 => Some((1, 1, env)),
                _ => None,
            };
        }
        Self { map }
    }

    /// Polarization qubits at the recombined output ports (path 1 for the
    /// first photon, path 3 for the second). Temporal labels are traced.
    pub fn polarization_outputs() -> Self {
        let mut map = [None; MODE_COUNT];
        for (i, entry) in map.iter_mut().enumerate() {
            let m = Mode::from_index(i);
            let slot = match m.path {
                Path::P1 => Some(0),
                Path::P3 => Some(1),
                _ => None,
            };
            *entry = slot.map(|s| (s, m.polarization.qubit(), m.label as usize));
        }
        Self { map }
    }

    fn decode(&self, key: &[usize]) -> Option<(usize, usize)> {
        if key.len() != 2 {
            return None;
        }
        let (s0, b0, e0) = self.map[key[0]]?;
        let (s1, b1, e1) = self.map[key[1]]?;
        match (s0, s1) {
            (0, 1) => Some((b0 * 2 + b1, e0 * 8 + e1)),
            (1, 0) => Some((b1 * 2 + b0, e1 * 8 + e0)),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PostSelected {
    pub state: DensityMatrix,
    pub success_probability: f64,
}

/// Keeps coincidence terms (one photon per slot), traces the environment
/// tags and renormalizes.
pub fn post_select_coincidence(
    state: &FockState,
    decoder: &QubitDecoder,
) -> Result<PostSelected, PhotonicError> {
    let mut branches: BTreeMap<usize, [C64; 4]> = BTreeMap::new();
    for (key, amp) in state.terms() {
        if let Some((basis, env)) = decoder.decode(key) {
            branches.entry(env).or_default()[basis] += amp;
        }
    }
    let mass: f64 = branches
        .values()
        .flat_map(|v| v.iter())
        .map(|a| a.norm_sqr())
        .sum();
    if mass < EMPTY_MASS {
        return Err(PhotonicError::EmptyPostSelection { mass });
    }
    let mut rho = ComplexMatrix::zeros(4, 4);
    for v in branches.values() {
        rho = &rho + &ComplexMatrix::outer(v, v);
    }
    let state = DensityMatrix::new(vec![2, 2], rho.scale_real(1.0 / mass))?;
    Ok(PostSelected {
        state,
        success_probability: mass,
    })
}

/// The four path-qubit inputs in the order `|1>_1|1>_3, |1>_1|1>_4,
/// |1>_2|1>_3, |1>_2|1>_4`, all photons V-polarized with label 0.
fn logical_inputs() -> [(Mode, Mode); 4] {
    let m = |p| Mode::new(p, Polarization::V, 0);
    [
        (m(Path::P1), m(Path::P3)),
        (m(Path::P1), m(Path::P4)),
        (m(Path::P2), m(Path::P3)),
        (m(Path::P2), m(Path::P4)),
    ]
}

/// Coincidence amplitude each logical input keeps on its own term.
pub fn effective_gate_truth_table(net: &OpticalNetwork) -> Result<[C64; 4], PhotonicError> {
    let mut out = [C64::new(0.0, 0.0); 4];
    for (slot, (a, b)) in out.iter_mut().zip(logical_inputs()) {
        *slot = evolve_two_photon(&FockState::pair(a, b), net)?.amplitude(a, b);
    }
    Ok(out)
}

/// Post-selected channel on the path qubits as Kraus operators (one per
/// traced environment tag). Columns index the raw inputs of
/// [`effective_gate_truth_table`].
pub fn coincidence_channel(net: &OpticalNetwork) -> Result<Vec<ComplexMatrix>, PhotonicError> {
    let decoder = QubitDecoder::path_qubits();
    let mut kraus: BTreeMap<usize, ComplexMatrix> = BTreeMap::new();
    for (col, (a, b)) in logical_inputs().into_iter().enumerate() {
        let out = evolve_two_photon(&FockState::pair(a, b), net)?;
        for (key, amp) in out.terms() {
            if let Some((row, env)) = decoder.decode(key) {
                kraus.entry(env).or_insert_with(|| ComplexMatrix::zeros(4, 4))[(row, col)] += amp;
            }
        }
    }
    Ok(kraus.into_values().collect())
}

/// Relabels the second path qubit (path 4 ↦ |0>, path 3 ↦ |1>), which turns
/// the raw coincidence phases into the standard controlled-phase.
pub fn logical_relabel() -> ComplexMatrix {
    ComplexMatrix::identity(2).kron(&pauli::x())
}

/// Process fidelity `Σ_k |tr(U†K_k)|² / (d Σ_k tr(K_k†K_k))` of a
/// post-selected channel against a unitary.
pub fn process_fidelity(kraus: &[ComplexMatrix], target: &ComplexMatrix) -> f64 {
    let d = target.rows() as f64;
    let overlap: f64 = kraus.iter().map(|k| target.inner(k).norm_sqr()).sum();
    let weight: f64 = kraus.iter().map(|k| k.inner(k).re).sum();
    if weight == 0.0 {
        0.0
    } else {
        overlap / (d * weight)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CzReport {
    pub truth_table: [[f64; 2]; 4],
    pub success_probabilities: [f64; 4],
    pub process_fidelity: f64,
    pub magnitude_spread: f64,
}

/// Checks the coupler array against the controlled-phase gate in the
/// relabelled logical frame.
pub fn verify_cz(net: &OpticalNetwork) -> Result<CzReport, PhotonicError> {
    let table = effective_gate_truth_table(net)?;
    let relabel = logical_relabel();
    let kraus: Vec<ComplexMatrix> = coincidence_channel(net)?
        .iter()
        .map(|k| &(&relabel * k) * &relabel)
        .collect();
    let fidelity = process_fidelity(&kraus, &controlled_phase(std::f64::consts::PI));
    let mut success = [0.0; 4];
    for (col, s) in success.iter_mut().enumerate() {
        *s = kraus
            .iter()
            .map(|k| (0..4).map(|r| k[(r, col)].norm_sqr()).sum::<f64>())
            .sum();
    }
    let mags: Vec<f64> = table.iter().map(|a| a.norm()).collect();
    let spread = mags.iter().cloned().fold(f64::MIN, f64::max) - mags.iter().cloned().fold(f64::MAX, f64::min);
    Ok(CzReport {
        truth_table: table.map(|z| [z.re, z.im]),
        success_probabilities: success,
        process_fidelity: fidelity,
        magnitude_spread: spread,
    })
}

/// Coincidence probability between output paths 2 and 3 when one photon
/// enters each of them (V-polarized) with temporal overlap `overlap`.
pub fn hom_scan(overlap: f64, bs: BsParams) -> Result<f64, PhotonicError> {
    check_unit("overlap", overlap)?;
    let net = build_cz_network(bs)?;
    let v = [C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
    let input = FockState::from_photons(
        &photon(Path::P2, v, temporal_state(1.0)),
        &photon(Path::P3, v, temporal_state(overlap)),
    );
    let out = evolve_two_photon(&input, &net)?;
    Ok(out
        .terms()
        .filter(|(key, _)| {
            let p0 = Mode::from_index(key[0]).path;
            let p1 = Mode::from_index(key[1]).path;
            matches!((p0, p1), (Path::P2, Path::P3) | (Path::P3, Path::P2))
        })
        .map(|(_, a)| a.norm_sqr())
        .sum())
}

/// `(P(γ=0) − P(γ=1)) / P(γ=0)`.
pub fn hom_visibility(bs: BsParams) -> Result<f64, PhotonicError> {
    let distinguishable = hom_scan(0.0, bs)?;
    let indistinguishable = hom_scan(1.0, bs)?;
    Ok((distinguishable - indistinguishable) / distinguishable)
}

/// Overlap squared implied by a measured visibility relative to the ideal one.
pub fn infer_overlap_squared(measured: f64, ideal: f64) -> f64 {
    measured / ideal
}

/// Gaussian-envelope model `γ(Δt) = exp(−Δt²/2σ²)`.
pub fn overlap_from_delay(delay_ps: f64, sigma_ps: f64) -> f64 {
    (-(delay_ps * delay_ps) / (2.0 * sigma_ps * sigma_ps)).exp()
}

/// Inverse of [`overlap_from_delay`]; infinite at `γ = 0`.
pub fn delay_from_overlap(gamma: f64, sigma_ps: f64) -> f64 {
    if gamma <= 0.0 {
        f64::INFINITY
    } else {
        sigma_ps * (-2.0 * gamma.ln()).max(0.0).sqrt()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HomPoint {
    pub gamma: f64,
    pub delay_ps: f64,
    pub coincidence_prob: f64,
}

/// HOM scan over a grid of overlaps, evaluated in parallel, in input order.
pub fn hom_scan_grid(gammas: &[f64], bs: BsParams, sigma_ps: f64) -> Result<Vec<HomPoint>, PhotonicError> {
    gammas
        .par_iter()
        .map(|&gamma| {
            Ok(HomPoint {
                gamma,
                delay_ps: delay_from_overlap(gamma, sigma_ps),
                coincidence_prob: hom_scan(gamma, bs)?,
            })
        })
        .collect()
}

/// Both photons prepared in `(|H> + |V>)/√2`, photon A on path 1 and photon
/// B on path 3; photon B's wavepacket overlaps A's by `gamma`.
pub fn prepared_input(gamma: f64) -> Result<FockState, PhotonicError> {
    check_unit("overlap", gamma)?;
    let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    Ok(FockState::from_photons(
        &photon(Path::P1, [s, s], temporal_state(1.0)),
        &photon(Path::P3, [s, s], temporal_state(gamma)),
    ))
}

/// Runs the prepared input through the full interferometer and post-selects
/// the polarization state at the output ports.
pub fn pipeline_output(bs: BsParams, gamma: f64, bd_imperfection: f64) -> Result<PostSelected, PhotonicError> {
    let net = build_pipeline(bs, bd_imperfection)?;
    let out = evolve_two_photon(&prepared_input(gamma)?, &net)?;
    post_select_coincidence(&out, &QubitDecoder::polarization_outputs())
}

/// Best-fit weight `v` of `v|Ψ−><Ψ−| + (1−v)ρ_dist` and the trace distance
/// of the fit.
pub fn fit_visibility(canonical: &DensityMatrix) -> Result<(f64, f64), PhotonicError> {
    let singlet = states::singlet().projector();
    let dist = states::rho_dist();
    let direction = singlet.matrix() - dist.matrix();
    let offset = canonical.matrix() - dist.matrix();
    let v = (direction.inner(&offset).re / direction.inner(&direction).re).clamp(0.0, 1.0);
    let model = singlet.convex(&dist, v)?;
    Ok((v, canonical.trace_distance(&model)?))
}

#[derive(Clone, Debug, Serialize)]
pub struct DistinguishabilityPoint {
    pub gamma: f64,
    pub v: f64,
    pub fit_trace_distance: f64,
    pub success_probability: f64,
}

/// Measures `v(γ)` from the Fock simulation over a grid, in input order.
pub fn visibility_table(gammas: &[f64], bs: BsParams) -> Result<Vec<DistinguishabilityPoint>, PhotonicError> {
    gammas
        .par_iter()
        .map(|&gamma| {
            let post = pipeline_output(bs, gamma, 0.0)?;
            let canonical = canonicalize_to_singlet(&post.state).map_err(|e| match e {
                crate::circuit::CircuitError::Math(m) => PhotonicError::Math(m),
                other => panic!("two-qubit state rejected: {other}"),
            })?;
            let (v, dist) = fit_visibility(&canonical)?;
            Ok(DistinguishabilityPoint {
                gamma,
                v,
                fit_trace_distance: dist,
                success_probability: post.success_probability,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::fidelity_pure;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    fn mode(p: Path) -> Mode {
        Mode::new(p, Polarization::V, 0)
    }

    #[test]
    fn mode_index_round_trip() {
        for i in 0..MODE_COUNT {
            assert_eq!(Mode::from_index(i).index(), i);
        }
        assert_eq!(Mode::new(Path::P1, Polarization::V, 1).index(), 7);
    }

    #[test]
    fn coupler_examples() {
        let swap = coupler_unitary(0.0).unwrap();
        assert_eq!(swap, ComplexMatrix::from_real_rows(&[[0.0, 1.0], [1.0, 0.0]]));
        let mirror = coupler_unitary(1.0).unwrap();
        assert!(mirror.max_abs_diff(&ComplexMatrix::identity(2).scale(C64::i())) < 1e-15);
        let third = coupler_unitary(1.0 / 3.0).unwrap();
        assert!(close(third[(0, 0)], C64::new(0.0, 1.0 / 3f64.sqrt()), 1e-15));
        assert!(close(third[(0, 1)], C64::new((2.0f64 / 3.0).sqrt(), 0.0), 1e-15));
        assert!(third.is_unitary(1e-12));
        assert!(matches!(
            coupler_unitary(1.5),
            Err(PhotonicError::OutOfRange { .. })
        ));
    }

    #[test]
    fn mode_one_evolution_matches_creation_operator_rule() {
        let net = build_cz_network(BsParams::IDEAL).unwrap();
        let out = net.propagate(&photon_in(mode(Path::P1)));
        assert!(close(out[mode(Path::Out1).index()], C64::new((2.0f64 / 3.0).sqrt(), 0.0), 1e-14));
        assert!(close(out[mode(Path::P1).index()], C64::new(0.0, -1.0 / 3f64.sqrt()), 1e-14));
    }

    #[test]
    fn zero_reflectivity_network_is_permutation() {
        let net = build_cz_network(BsParams::uniform(0.0).unwrap()).unwrap();
        let u = net.mode_unitary();
        for i in 0..MODE_COUNT {
            let ones = (0..MODE_COUNT).filter(|&j| u[(i, j)].norm() > 0.5).count();
            assert_eq!(ones, 1);
        }
    }

    #[test]
    fn experimental_preset_reflectivities() {
        let net = build_cz_network(BsParams::EXPERIMENTAL).unwrap();
        let u = net.mode_unitary();
        let h2 = Mode::new(Path::P2, Polarization::H, 0).index();
        let v2 = Mode::new(Path::P2, Polarization::V, 0).index();
        assert!((u[(h2, h2)].norm_sqr() - 0.329).abs() < 1e-12);
        assert!((u[(v2, v2)].norm_sqr() - 0.337).abs() < 1e-12);
    }

    #[test]
    fn interfering_pair_transformation() {
        let net = build_cz_network(BsParams::IDEAL).unwrap();
        let (a, b) = (mode(Path::P2), mode(Path::P3));
        let out = evolve_two_photon(&FockState::pair(a, b), &net).unwrap();
        assert!(close(out.amplitude(a, b), C64::new(1.0 / 3.0, 0.0), 1e-14));
        // bunched terms carry −i with normalized weight 2/3
        assert!(close(out.amplitude(a, a), C64::new(0.0, -2.0 / 3.0), 1e-14));
        assert!(close(out.amplitude(b, b), C64::new(0.0, -2.0 / 3.0), 1e-14));
        assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn first_transformation_terms() {
        let net = build_cz_network(BsParams::IDEAL).unwrap();
        let (a, b) = (mode(Path::P1), mode(Path::P3));
        let out = evolve_two_photon(&FockState::pair(a, b), &net).unwrap();
        let r2 = 2f64.sqrt();
        assert!(close(out.amplitude(mode(Path::Out1), mode(Path::P2)), C64::new(2.0 / 3.0, 0.0), 1e-14));
        assert!(close(out.amplitude(mode(Path::Out1), b), C64::new(0.0, -r2 / 3.0), 1e-14));
        assert!(close(out.amplitude(a, mode(Path::P2)), C64::new(0.0, -r2 / 3.0), 1e-14));
        assert!(close(out.amplitude(a, b), C64::new(-1.0 / 3.0, 0.0), 1e-14));
    }

    #[test]
    fn outer_pair_coincidence_amplitude() {
        let net = build_cz_network(BsParams::IDEAL).unwrap();
        let (a, b) = (mode(Path::P1), mode(Path::P4));
        let out = evolve_two_photon(&FockState::pair(a, b), &net).unwrap();
        assert!(close(out.amplitude(a, b), C64::new(-1.0 / 3.0, 0.0), 1e-14));
    }

    #[test]
    fn identity_network_returns_input() {
        let input = prepared_input(0.4).unwrap();
        let out = evolve_two_photon(&input, &OpticalNetwork::identity()).unwrap();
        assert_eq!(out, input);
    }

    #[test]
    fn photon_number_checked() {
        let single = FockState::from_terms([(vec![3], C64::new(1.0, 0.0))]);
        assert!(matches!(
            evolve_two_photon(&single, &OpticalNetwork::identity()),
            Err(PhotonicError::PhotonNumberMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn truth_table_signs() {
        let table = effective_gate_truth_table(&build_cz_network(BsParams::IDEAL).unwrap()).unwrap();
        let third = 1.0 / 3.0;
        let expected = [-third, -third, third, -third];
        for (got, want) in table.iter().zip(expected) {
            assert!(close(*got, C64::new(want, 0.0), 1e-14), "{table:?}");
        }
    }

    #[test]
    fn half_reflectivity_is_not_a_cz() {
        let net = build_cz_network(BsParams::uniform(0.5).unwrap()).unwrap();
        let table = effective_gate_truth_table(&net).unwrap();
        assert!(close(table[0], C64::new(-0.5, 0.0), 1e-14));
        assert!(table[2].norm() < 1e-14);
        let report = verify_cz(&net).unwrap();
        assert!((report.process_fidelity - 0.75).abs() < 1e-12);
    }

    #[test]
    fn ideal_cz_report() {
        let report = verify_cz(&build_cz_network(BsParams::IDEAL).unwrap()).unwrap();
        assert!(report.process_fidelity >= 1.0 - 1e-12);
        for p in report.success_probabilities {
            assert!((p - 1.0 / 9.0).abs() < 1e-12);
        }
        assert!(report.magnitude_spread < 1e-14);
    }

    #[test]
    fn experimental_truth_table_deviation() {
        let table = effective_gate_truth_table(&build_cz_network(BsParams::EXPERIMENTAL).unwrap()).unwrap();
        // V photons see R_V = 0.337: −R on three inputs, 1 − 2R on the interfering one
        assert!(close(table[0], C64::new(-0.337, 0.0), 1e-12));
        assert!(close(table[2], C64::new(1.0 - 2.0 * 0.337, 0.0), 1e-12));
    }

    #[test]
    fn hom_endpoints_at_one_third() {
        let p1 = hom_scan(1.0, BsParams::IDEAL).unwrap();
        let p0 = hom_scan(0.0, BsParams::IDEAL).unwrap();
        assert!((p1 - 1.0 / 9.0).abs() < 1e-12);
        assert!((p0 - 5.0 / 9.0).abs() < 1e-12);
        assert!((hom_visibility(BsParams::IDEAL).unwrap() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn balanced_splitter_full_dip() {
        let half = BsParams::uniform(0.5).unwrap();
        assert!(hom_scan(1.0, half).unwrap() < 1e-15);
        assert!((hom_visibility(half).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inferred_overlap() {
        assert!((infer_overlap_squared(0.73, 0.8) - 0.9125).abs() < 1e-12);
    }

    #[test]
    fn delay_mapping_inverts() {
        let sigma = 500.0;
        for delay in [0.0, 120.0, 450.0, 900.0] {
            let g = overlap_from_delay(delay, sigma);
            assert!((delay_from_overlap(g, sigma) - delay).abs() < 1e-9);
        }
        assert!(delay_from_overlap(0.0, sigma).is_infinite());
    }

    #[test]
    fn pipeline_reproduces_circuit_output() {
        let post = pipeline_output(BsParams::IDEAL, 1.0, 0.0).unwrap();
        let f = fidelity_pure(&post.state, &states::circuit_output_at_pi()).unwrap();
        assert!(f >= 1.0 - 1e-12, "{f}");
        assert!((post.success_probability - 1.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn distinguishable_photons_give_rho_dist() {
        let post = pipeline_output(BsParams::IDEAL, 0.0, 0.0).unwrap();
        let canonical = canonicalize_to_singlet(&post.state).unwrap();
        assert!(canonical.trace_distance(&states::rho_dist()).unwrap() < 1e-12);
    }

    #[test]
    fn network_json_lists_elements() {
        let net = build_pipeline(BsParams::IDEAL, 0.0).unwrap();
        let json = serde_json::to_value(&net).unwrap();
        let elements = json["elements"].as_array().unwrap();
        assert_eq!(elements.len(), 11);
        assert_eq!(elements[0]["element"], "beam_displacer");
        assert_eq!(elements[4]["first"], "out1");
    }

    #[test]
    fn partial_distinguishability_stays_in_family() {
        let gammas: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
        let table = visibility_table(&gammas, BsParams::IDEAL).unwrap();
        for row in &table {
            let g2 = row.gamma * row.gamma;
            assert!(row.fit_trace_distance < 1e-9, "{row:?}");
            assert!((row.v - g2 / (2.0 - g2)).abs() < 1e-9, "{row:?}");
            assert!((row.success_probability - (2.0 - g2) / 9.0).abs() < 1e-12, "{row:?}");
        }
    }
}
