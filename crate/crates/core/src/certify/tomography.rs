//! Two-qubit state tomography from Pauli-pair counts.
//!
//! Linear inversion pools the nine `{X,Y,Z}²` settings; maximum likelihood
//! maximizes `Σ n_k ln p_k(ρ)` over `ρ = T†T / tr(T†T)` with `T` lower
//! triangular, which keeps every iterate physical. The ascent uses
//! limited-memory quasi-Newton directions with a backtracking step that
//! starts at 1 and only accepts non-decreasing likelihood.

use std::collections::VecDeque;

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::counts::resample;
use super::{chsh, chsh_max, ppt_report, witness_w, Axis, CertifyError, ChshSettings, CountsRecord, MeasurementSetting, Outcome};
use crate::qmath::{fidelity, hermitian_eig, pauli, ComplexMatrix, DensityMatrix};

const AXES: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];
const NPARAM: usize = 16;
const LBFGS_MEMORY: usize = 8;
const MAX_HALVINGS: usize = 60;
/// Weight of `I/4` blended into the starting point so every observed
/// outcome has nonzero probability.
const INIT_MIXING: f64 = 1e-3;

type M4 = [[C64; 4]; 4];

/// The nine settings `XX, XY, …, ZZ`.
pub fn pauli_settings() -> Vec<MeasurementSetting> {
    AXES.iter()
        .flat_map(|&a| AXES.iter().map(move |&b| MeasurementSetting::new(a, b)))
        .collect()
}

fn pooled(data: &[CountsRecord], a: Axis, b: Axis) -> [u64; 4] {
    data.iter()
        .filter(|r| r.setting.a == a && r.setting.b == b)
        .fold([0; 4], |acc, r| std::array::from_fn(|k| acc[k] + r.counts[k]))
}

/// `¼ Σ Ê(P⊗Q) P⊗Q` over `P, Q ∈ {I, X, Y, Z}`, single-qubit terms from the
/// pooled marginals. Hermitian with unit trace, not necessarily positive.
pub fn tomography_linear(data: &[CountsRecord]) -> Result<ComplexMatrix, CertifyError> {
    let mut table = [[[0u64; 4]; 3]; 3];
    for (i, &a) in AXES.iter().enumerate() {
        for (j, &b) in AXES.iter().enumerate() {
            table[i][j] = pooled(data, a, b);
            if table[i][j].iter().sum::<u64>() == 0 {
                return Err(CertifyError::MissingSetting(MeasurementSetting::new(a, b).to_string()));
            }
        }
    }
    let paulis = [ComplexMatrix::identity(2), pauli::x(), pauli::y(), pauli::z()];
    let mut rho = ComplexMatrix::identity(4);
    for p in 0..4 {
        for q in 0..4 {
            if p == 0 && q == 0 {
                continue;
            }
            // (sign of A, sign of B) weights for outcomes ++, +−, −+, −−
            let mut num = 0.0;
            let mut den = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    if (p != 0 && p - 1 != i) || (q != 0 && q - 1 != j) {
                        continue;
                    }
                    for (k, o) in Outcome::ALL.iter().enumerate() {
                        let (sa, sb) = o.signs();
                        let w = if p == 0 { 1.0 } else { sa } * if q == 0 { 1.0 } else { sb };
                        num += w * table[i][j][k] as f64;
                        den += table[i][j][k] as f64;
                    }
                }
            }
            rho = &rho + &paulis[p].kron(&paulis[q]).scale_real(num / den);
        }
    }
    Ok(rho.scale_real(0.25).hermitian_part())
}

/// Nearest state with the negative part of the spectrum clipped, blended
/// with a little of `I/4`.
fn physical_start(m: &ComplexMatrix) -> Result<ComplexMatrix, CertifyError> {
    let eig = hermitian_eig(&m.hermitian_part())?;
    let clipped: Vec<f64> = eig.values.iter().map(|l| l.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    let mut out = ComplexMatrix::identity(4).scale_real(INIT_MIXING / 4.0);
    if total > 0.0 {
        for (k, l) in clipped.iter().enumerate() {
            let v = eig.vectors.column(k);
            out = &out + &ComplexMatrix::outer(&v, &v).scale_real((1.0 - INIT_MIXING) * l / total);
        }
    } else {
        out = ComplexMatrix::identity(4).scale_real(0.25);
    }
    Ok(out)
}

fn to_m4(m: &ComplexMatrix) -> M4 {
    std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)]))
}

/// Lower-triangular `T` with `T†T = ρ` for positive definite `ρ`.
fn lower_factor(rho: &M4) -> M4 {
    // Cholesky of the index-reversed matrix P = JρJ = LL†; then T = J L† J.
    let p: M4 = std::array::from_fn(|i| std::array::from_fn(|j| rho[3 - i][3 - j]));
    let mut l = [[C64::new(0.0, 0.0); 4]; 4];
    for j in 0..4 {
        let d = p[j][j].re - (0..j).map(|k| l[j][k].norm_sqr()).sum::<f64>();
        l[j][j] = C64::new(d.max(1e-300).sqrt(), 0.0);
        for i in j + 1..4 {
            let s: C64 = (0..j).map(|k| l[i][k] * l[j][k].conj()).sum();
            l[i][j] = (p[i][j] - s) / l[j][j].re;
        }
    }
    std::array::from_fn(|i| std::array::from_fn(|j| l[3 - j][3 - i].conj()))
}

const OFF_DIAG: [(usize, usize); 6] = [(1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2)];

fn params_from_t(t: &M4) -> [f64; NPARAM] {
    let mut x = [0.0; NPARAM];
    for i in 0..4 {
        x[i] = t[i][i].re;
    }
    for (k, &(i, j)) in OFF_DIAG.iter().enumerate() {
        x[4 + 2 * k] = t[i][j].re;
        x[5 + 2 * k] = t[i][j].im;
    }
    x
}

fn t_from_params(x: &[f64; NPARAM]) -> M4 {
    let mut t = [[C64::new(0.0, 0.0); 4]; 4];
    for i in 0..4 {
        t[i][i] = C64::new(x[i], 0.0);
    }
    for (k, &(i, j)) in OFF_DIAG.iter().enumerate() {
        t[i][j] = C64::new(x[4 + 2 * k], x[5 + 2 * k]);
    }
    t
}

/// `T†T`.
fn gram(t: &M4) -> M4 {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..4).map(|k| t[k][i].conj() * t[k][j]).sum()))
}

fn tr_prod(a: &M4, b: &M4) -> f64 {
    let mut s = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            s += (a[i][j] * b[j][i]).re;
        }
    }
    s
}

/// Likelihood terms with nonzero counts.
struct Objective {
    terms: Vec<(M4, f64)>,
    total: f64,
}

impl Objective {
    fn new(data: &[CountsRecord]) -> Self {
        let mut terms = Vec::new();
        for r in data {
            for (o, &n) in Outcome::ALL.iter().zip(&r.counts) {
                if n > 0 {
                    terms.push((to_m4(&o.projector(&r.setting)), n as f64));
                }
            }
        }
        let total = terms.iter().map(|(_, n)| n).sum();
        Self { terms, total }
    }

    fn value(&self, x: &[f64; NPARAM]) -> f64 {
        let rho = gram(&t_from_params(x));
        let t = (0..4).map(|i| rho[i][i].re).sum::<f64>();
        let mut ll = 0.0;
        for (proj, n) in &self.terms {
            let f = tr_prod(proj, &rho);
            if f <= 0.0 {
                return f64::NEG_INFINITY;
            }
            ll += n * (f / t).ln();
        }
        ll
    }

    /// Value and gradient; `∂/∂x + i ∂/∂y = 2T(Σ n_k Π_k/f_k − (N/t) I)`.
    fn value_and_gradient(&self, x: &[f64; NPARAM]) -> (f64, [f64; NPARAM]) {
        let tm = t_from_params(x);
        let rho = gram(&tm);
        let t = (0..4).map(|i| rho[i][i].re).sum::<f64>();
        let mut r = [[C64::new(0.0, 0.0); 4]; 4];
        let mut ll = 0.0;
        for (proj, n) in &self.terms {
            let f = tr_prod(proj, &rho);
            if f <= 0.0 {
                return (f64::NEG_INFINITY, [0.0; NPARAM]);
            }
            ll += n * (f / t).ln();
            let w = n / f;
            for i in 0..4 {
                for j in 0..4 {
                    r[i][j] += proj[i][j] * w;
                }
            }
        }
        for (i, row) in r.iter_mut().enumerate() {
            row[i] -= self.total / t;
        }
        let g: M4 = std::array::from_fn(|i| std::array::from_fn(|j| 2.0 * (0..4).map(|k| tm[i][k] * r[k][j]).sum::<C64>()));
        let mut grad = [0.0; NPARAM];
        for i in 0..4 {
            grad[i] = g[i][i].re;
        }
        for (k, &(i, j)) in OFF_DIAG.iter().enumerate() {
            grad[4 + 2 * k] = g[i][j].re;
            grad[5 + 2 * k] = g[i][j].im;
        }
        (ll, grad)
    }
}

fn dot(a: &[f64; NPARAM], b: &[f64; NPARAM]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Clone, Debug)]
pub struct MleOptions {
    pub max_iterations: usize,
    /// Stop once the log-likelihood gains less than this ...
    pub tolerance: f64,
    /// ... for this many consecutive iterations.
    pub patience: usize,
    /// Starting state; defaults to the positive part of linear inversion.
    pub init: Option<ComplexMatrix>,
    pub record_history: bool,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100_000,
            tolerance: 1e-10,
            patience: 10,
            init: None,
            record_history: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MleOutcome {
    pub rho: DensityMatrix,
    pub log_likelihood: f64,
    pub iterations: usize,
    /// False when the iteration cap was hit; `rho` is then the best iterate.
    pub converged: bool,
    /// Settings whose counts were all zero and so carried no likelihood term.
    pub dropped_settings: Vec<String>,
    /// Log-likelihood after each accepted iteration (when recorded).
    pub history: Vec<f64>,
}

/// Maximum-likelihood fit over physical two-qubit states.
pub fn mle_fit(data: &[CountsRecord], options: &MleOptions) -> Result<MleOutcome, CertifyError> {
    let dropped_settings: Vec<String> = data
        .iter()
        .filter(|r| r.total() == 0)
        .map(|r| r.setting.to_string())
        .collect();
    let objective = Objective::new(data);
    if objective.terms.is_empty() {
        return Err(CertifyError::MissingSetting("any setting with counts".into()));
    }
    let start = match &options.init {
        Some(m) => physical_start(m)?,
        None => match tomography_linear(data) {
            Ok(lin) => physical_start(&lin)?,
            Err(_) => ComplexMatrix::identity(4).scale_real(0.25),
        },
    };
    let mut x = params_from_t(&lower_factor(&to_m4(&start)));
    let (mut ll, mut grad) = objective.value_and_gradient(&x);
    if !ll.is_finite() {
        x = params_from_t(&lower_factor(&to_m4(&ComplexMatrix::identity(4).scale_real(0.25))));
        (ll, grad) = objective.value_and_gradient(&x);
    }
    let mut memory: VecDeque<([f64; NPARAM], [f64; NPARAM], f64)> = VecDeque::new();
    let mut history = Vec::new();
    let mut stalls = 0;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < options.max_iterations {
        iterations += 1;
        let mut step = None;
        for use_memory in [true, false] {
            if !use_memory && memory.is_empty() {
                break;
            }
            let dir = if use_memory {
                lbfgs_direction(&grad, &memory)
            } else {
                memory.clear();
                lbfgs_direction(&grad, &memory)
            };
            if dot(&dir, &grad) <= 0.0 {
                continue;
            }
            if let Some(found) = backtrack(&objective, &x, &dir, ll) {
                step = Some(found);
                break;
            }
        }
        let Some((x_new, ll_new)) = step else {
            // no ascent step left at working precision
            converged = true;
            break;
        };
        assert!(ll_new >= ll, "log-likelihood decreased: {ll} -> {ll_new}");
        let (_, grad_new) = objective.value_and_gradient(&x_new);
        let s: [f64; NPARAM] = std::array::from_fn(|k| x_new[k] - x[k]);
        let y: [f64; NPARAM] = std::array::from_fn(|k| grad[k] - grad_new[k]);
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            memory.push_back((s, y, 1.0 / sy));
            if memory.len() > LBFGS_MEMORY {
                memory.pop_front();
            }
        }
        let gain = ll_new - ll;
        x = x_new;
        ll = ll_new;
        grad = grad_new;
        if options.record_history {
            history.push(ll);
        }
        if gain < options.tolerance {
            stalls += 1;
            if stalls >= options.patience {
                converged = true;
                break;
            }
        } else {
            stalls = 0;
        }
    }
    let rho = gram(&t_from_params(&x));
    let t: f64 = (0..4).map(|i| rho[i][i].re).sum();
    let m = ComplexMatrix::new(4, 4, rho.iter().flatten().map(|z| z / t).collect())?;
    Ok(MleOutcome {
        rho: DensityMatrix::new(vec![2, 2], m)?,
        log_likelihood: ll,
        iterations,
        converged,
        dropped_settings,
        history,
    })
}

/// Two-loop recursion for ascent; an empty memory gives the unit-length gradient.
fn lbfgs_direction(
    grad: &[f64; NPARAM],
    memory: &VecDeque<([f64; NPARAM], [f64; NPARAM], f64)>,
) -> [f64; NPARAM] {
    if memory.is_empty() {
        let n = dot(grad, grad).sqrt();
        return grad.map(|g| if n > 0.0 { g / n } else { 0.0 });
    }
    let mut q = *grad;
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, rho) in memory.iter().rev() {
        let a = rho * dot(s, &q);
        for k in 0..NPARAM {
            q[k] -= a * y[k];
        }
        alphas.push(a);
    }
    let (s, y, _) = memory.back().unwrap();
    let gamma = dot(s, y) / dot(y, y);
    for v in q.iter_mut() {
        *v *= gamma;
    }
    for ((s, y, rho), a) in memory.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        for k in 0..NPARAM {
            q[k] += (a - b) * s[k];
        }
    }
    q
}

fn backtrack(
    objective: &Objective,
    x: &[f64; NPARAM],
    dir: &[f64; NPARAM],
    ll: f64,
) -> Option<([f64; NPARAM], f64)> {
    let mut alpha = 1.0;
    for _ in 0..MAX_HALVINGS {
        let trial: [f64; NPARAM] = std::array::from_fn(|k| x[k] + alpha * dir[k]);
        if trial != *x {
            let v = objective.value(&trial);
            if v.is_finite() && v >= ll {
                return Some((trial, v));
            }
        }
        alpha *= 0.5;
    }
    None
}

/// `Σ n_k ln p_k(ρ)` over all recorded outcomes.
pub fn log_likelihood(rho: &DensityMatrix, data: &[CountsRecord]) -> f64 {
    let mut ll = 0.0;
    for r in data {
        for (o, &n) in Outcome::ALL.iter().zip(&r.counts) {
            if n > 0 {
                ll += n as f64 * rho.expectation(&o.projector(&r.setting)).re.ln();
            }
        }
    }
    ll
}

#[derive(Clone, Debug, Serialize)]
pub struct ErrorIntervals {
    pub replicas: usize,
    pub ppt_eigenvalues: [f64; 4],
    pub negativity: f64,
    pub witness: f64,
    pub chsh_fixed: f64,
    pub chsh_max: f64,
    pub fidelity: Option<f64>,
    pub non_converged: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct TomographyResult {
    pub rho_hat: DensityMatrix,
    pub log_likelihood: f64,
    pub fidelity_to_target: Option<f64>,
    pub ppt_eigenvalues: [f64; 4],
    pub negativity: f64,
    pub error_intervals: Option<ErrorIntervals>,
    pub converged: bool,
    pub iterations: usize,
    pub dropped_settings: Vec<String>,
}

/// Maximum-likelihood reconstruction with its PPT summary.
pub fn tomography_mle(
    data: &[CountsRecord],
    options: &MleOptions,
    target: Option<&DensityMatrix>,
) -> Result<TomographyResult, CertifyError> {
    let fit = mle_fit(data, options)?;
    let ppt = ppt_report(&fit.rho)?;
    let fidelity_to_target = target.map(|t| fidelity(&fit.rho, t)).transpose()?;
    Ok(TomographyResult {
        ppt_eigenvalues: ppt.eigenvalues,
        negativity: ppt.negativity,
        fidelity_to_target,
        log_likelihood: fit.log_likelihood,
        converged: fit.converged,
        iterations: fit.iterations,
        dropped_settings: fit.dropped_settings,
        rho_hat: fit.rho,
        error_intervals: None,
    })
}

/// Point estimates tracked through Monte Carlo resampling.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Estimates {
    pub ppt: [f64; 4],
    pub negativity: f64,
    pub witness: f64,
    pub chsh_fixed: f64,
    pub chsh_max: f64,
    pub fidelity: Option<f64>,
}

pub(crate) fn estimates(
    rho: &DensityMatrix,
    settings: &ChshSettings,
    target: Option<&DensityMatrix>,
) -> Result<Estimates, CertifyError> {
    let ppt = ppt_report(rho)?;
    Ok(Estimates {
        ppt: ppt.eigenvalues,
        negativity: ppt.negativity,
        witness: witness_w(rho)?,
        chsh_fixed: chsh(rho, settings)?,
        chsh_max: chsh_max(rho)?.value,
        fidelity: target.map(|t| fidelity(rho, t)).transpose()?,
    })
}

fn sample_std(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    (values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Standard deviations of the reconstructed quantities over `replicas`
/// Poisson resamplings of `data`. Replica `r` draws from its own stream of
/// a generator seeded with `seed`, so the result does not depend on
/// scheduling.
pub fn monte_carlo_errors(
    data: &[CountsRecord],
    replicas: usize,
    seed: u64,
    options: &MleOptions,
    settings: &ChshSettings,
    target: Option<&DensityMatrix>,
) -> Result<ErrorIntervals, CertifyError> {
    if replicas < 2 {
        return Err(CertifyError::TooSmall("Monte Carlo replicas", 2));
    }
    let runs: Vec<(Estimates, bool)> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64 + 1);
            let sample = resample(data, &mut rng);
            let fit = mle_fit(&sample, options)?;
            Ok((estimates(&fit.rho, settings, target)?, fit.converged))
        })
        .collect::<Result<_, CertifyError>>()?;
    let col = |f: fn(&Estimates) -> f64| sample_std(runs.iter().map(move |(e, _)| f(e)));
    Ok(ErrorIntervals {
        replicas,
        ppt_eigenvalues: std::array::from_fn(|k| sample_std(runs.iter().map(|(e, _)| e.ppt[k]))),
        negativity: col(|e| e.negativity),
        witness: col(|e| e.witness),
        chsh_fixed: col(|e| e.chsh_fixed),
        chsh_max: col(|e| e.chsh_max),
        fidelity: target.map(|_| sample_std(runs.iter().map(|(e, _)| e.fidelity.unwrap_or(f64::NAN)))),
        non_converged: runs.iter().filter(|(_, ok)| !ok).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::simulate_counts;
    use crate::certify::counts::outcome_probabilities;
    use crate::qmath::states;

    /// Counts proportional to exact probabilities (large scale, rounded).
    fn exact_counts(rho: &DensityMatrix, scale: f64) -> Vec<CountsRecord> {
        pauli_settings()
            .into_iter()
            .map(|s| CountsRecord {
                setting: s,
                counts: outcome_probabilities(rho, &s).map(|p| (p * scale).round() as u64),
                total_expected: scale,
            })
            .collect()
    }

    #[test]
    fn factor_round_trip() {
        let rho = states::rho_dist().convex(&states::maximally_mixed_pair(), 0.7).unwrap();
        let t = lower_factor(&to_m4(rho.matrix()));
        for i in 0..4 {
            for j in i + 1..4 {
                assert_eq!(t[i][j], C64::new(0.0, 0.0));
            }
        }
        let back = gram(&t);
        for i in 0..4 {
            for j in 0..4 {
                assert!((back[i][j] - rho.matrix()[(i, j)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let rho = states::singlet().projector().convex(&states::maximally_mixed_pair(), 0.8).unwrap();
        let data = simulate_counts(&rho, &pauli_settings(), 1000, 2).unwrap();
        let obj = Objective::new(&data);
        let start = physical_start(&ComplexMatrix::identity(4).scale_real(0.25)).unwrap();
        let mut x = params_from_t(&lower_factor(&to_m4(&start)));
        x[5] += 0.05;
        x[9] -= 0.03;
        let (_, g) = obj.value_and_gradient(&x);
        let h = 1e-6;
        for k in 0..NPARAM {
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let fd = (obj.value(&xp) - obj.value(&xm)) / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-4 * (1.0 + g[k].abs()), "param {k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn linear_inversion_exact_limit() {
        let rho = states::singlet().projector();
        let lin = tomography_linear(&exact_counts(&rho, 1e12)).unwrap();
        assert!(lin.max_abs_diff(rho.matrix()) < 1e-11);
    }

    #[test]
    fn linear_inversion_missing_setting() {
        let mut data = exact_counts(&states::rho_mix(), 100.0);
        data.remove(4);
        assert!(matches!(tomography_linear(&data), Err(CertifyError::MissingSetting(s)) if s == "YY"));
    }

    #[test]
    fn linear_inversion_can_be_unphysical() {
        let data = simulate_counts(&states::singlet().projector(), &pauli_settings(), 10_000, 17).unwrap();
        let lin = tomography_linear(&data).unwrap();
        assert!((lin.trace().re - 1.0).abs() < 1e-12);
        assert!(lin.is_hermitian(1e-12));
        let min = *hermitian_eig(&lin).unwrap().values.last().unwrap();
        assert!(min > -0.05, "{min}");
    }

    #[test]
    fn mle_exact_input_recovers_state() {
        for rho in [states::rho_dist(), states::maximally_mixed_pair(), states::rho_mix().convex(&states::singlet().projector(), 0.3).unwrap()] {
            let data = exact_counts(&rho, 1e9);
            let fit = tomography_mle(&data, &MleOptions::default(), Some(&rho)).unwrap();
            assert!(fit.fidelity_to_target.unwrap() >= 1.0 - 1e-8, "{:?}", fit.fidelity_to_target);
        }
    }

    #[test]
    fn mle_likelihood_never_decreases() {
        let data = simulate_counts(&states::rho_dist(), &pauli_settings(), 10_000, 8).unwrap();
        let opts = MleOptions {
            record_history: true,
            ..Default::default()
        };
        let fit = mle_fit(&data, &opts).unwrap();
        assert!(fit.converged);
        for w in fit.history.windows(2) {
            assert!(w[1] >= w[0]);
        }
        let lin_start = DensityMatrix::new(vec![2, 2], physical_start(&tomography_linear(&data).unwrap()).unwrap()).unwrap();
        assert!(fit.log_likelihood >= log_likelihood(&lin_start, &data));
        assert!((fit.log_likelihood - log_likelihood(&fit.rho, &data)).abs() < 1e-6);
    }

    #[test]
    fn mle_singlet_fidelity() {
        let target = states::singlet().projector();
        let data = simulate_counts(&target, &pauli_settings(), 10_000, 21).unwrap();
        let fit = tomography_mle(&data, &MleOptions::default(), Some(&target)).unwrap();
        assert!(fit.fidelity_to_target.unwrap() >= 0.99);
        assert!(fit.rho_hat.eigenvalues().iter().all(|&l| l >= -1e-12));
    }

    #[test]
    fn mle_iteration_cap_flags_result() {
        let data = simulate_counts(&states::rho_dist(), &pauli_settings(), 10_000, 8).unwrap();
        let opts = MleOptions {
            max_iterations: 2,
            ..Default::default()
        };
        let fit = mle_fit(&data, &opts).unwrap();
        assert!(!fit.converged);
        assert_eq!(fit.iterations, 2);
    }

    #[test]
    fn zero_count_setting_dropped() {
        let mut data = simulate_counts(&states::rho_dist(), &pauli_settings(), 10_000, 8).unwrap();
        data[2].counts = [0; 4];
        let fit = mle_fit(&data, &MleOptions::default()).unwrap();
        assert_eq!(fit.dropped_settings, vec!["XZ".to_string()]);
    }

    #[test]
    fn monte_carlo_needs_two_replicas() {
        let data = exact_counts(&states::rho_mix(), 100.0);
        let r = monte_carlo_errors(&data, 1, 0, &MleOptions::default(), &ChshSettings::default(), None);
        assert!(matches!(r, Err(CertifyError::TooSmall(..))));
    }

    #[test]
    fn monte_carlo_deterministic_and_nonzero() {
        let rho = crate::qmath::DensityMatrix::new(vec![2, 2], ComplexMatrix::from_diag(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)])).unwrap();
        let data = exact_counts(&rho, 1000.0);
        let run = || monte_carlo_errors(&data, 2, 4, &MleOptions::default(), &ChshSettings::default(), None).unwrap();
        let (a, b) = (run(), run());
        assert_eq!(a.ppt_eigenvalues, b.ppt_eigenvalues);
        assert!(a.ppt_eigenvalues.iter().any(|&s| s > 0.0));
    }
}
