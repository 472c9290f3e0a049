//! The certification battery and its verdict.

use serde::Serialize;

use super::tomography::{estimates, Estimates};
use super::{
    chsh_max, monte_carlo_errors, tomography_mle, CertifyError, ChshMax, ChshSettings, CountsRecord, MleOptions,
    TomographyResult,
};
use crate::qmath::{DensityMatrix, PSD_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    CertifiedBell,
    CertifiedWitness,
    CertifiedPpt,
    SeparableCertified,
    Inconclusive,
}

#[derive(Clone, Debug)]
pub struct CertifyOptions {
    pub replicas: usize,
    pub seed: u64,
    pub mle: MleOptions,
    pub chsh: ChshSettings,
    /// Number of standard deviations a statistic must clear.
    pub sigmas: f64,
    pub target: Option<DensityMatrix>,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            replicas: 100,
            seed: 0,
            mle: MleOptions::default(),
            chsh: ChshSettings::singlet_optimal(),
            sigmas: 3.0,
            target: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub sigma: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificationReport {
    pub witness: Estimate,
    /// CHSH value at the configured settings; this one decides Bell certification.
    pub chsh_fixed: Estimate,
    pub chsh_settings: ChshSettings,
    /// Maximum over settings chosen after seeing the data, reported only.
    pub chsh_max: Estimate,
    pub chsh_max_settings: ChshSettings,
    pub ppt_min_eigenvalue: Estimate,
    pub tomography: Option<TomographyResult>,
    pub entanglement_verdict: Verdict,
}

/// Precedence: Bell, then witness, then PPT. The state is declared
/// separable only when the smallest PT eigenvalue is within `sigmas`
/// standard deviations of non-negative.
fn decide(e: &Estimates, sig: &Estimates, sigmas: f64, fit_ok: bool) -> Verdict {
    let min_pt = e.ppt[3];
    let min_pt_sigma = sig.ppt[3];
    if e.chsh_fixed - 2.0 > sigmas * sig.chsh_fixed + PSD_TOL {
        Verdict::CertifiedBell
    } else if -e.witness > sigmas * sig.witness + PSD_TOL {
        Verdict::CertifiedWitness
    } else if -min_pt > sigmas * min_pt_sigma + PSD_TOL {
        Verdict::CertifiedPpt
    } else if fit_ok && min_pt_sigma.is_finite() {
        Verdict::SeparableCertified
    } else {
        Verdict::Inconclusive
    }
}

fn pack(e: &Estimates, sig: &Estimates, max: ChshMax, settings: ChshSettings) -> CertificationReport {
    CertificationReport {
        witness: Estimate {
            value: e.witness,
            sigma: sig.witness,
        },
        chsh_fixed: Estimate {
            value: e.chsh_fixed,
            sigma: sig.chsh_fixed,
        },
        chsh_settings: settings,
        chsh_max: Estimate {
            value: e.chsh_max,
            sigma: sig.chsh_max,
        },
        chsh_max_settings: max.settings,
        ppt_min_eigenvalue: Estimate {
            value: e.ppt[3],
            sigma: sig.ppt[3],
        },
        tomography: None,
        entanglement_verdict: Verdict::Inconclusive,
    }
}

/// Runs MLE tomography, Monte Carlo error estimation, the witness, both
/// CHSH values and the PPT test on counts data.
pub fn certify_counts(data: &[CountsRecord], options: &CertifyOptions) -> Result<CertificationReport, CertifyError> {
    let target = options.target.as_ref();
    let mut tomo = tomography_mle(data, &options.mle, target)?;
    let errors = monte_carlo_errors(data, options.replicas, options.seed, &options.mle, &options.chsh, target)?;
    let point = estimates(&tomo.rho_hat, &options.chsh, target)?;
    let sigma = Estimates {
        ppt: errors.ppt_eigenvalues,
        negativity: errors.negativity,
        witness: errors.witness,
        chsh_fixed: errors.chsh_fixed,
        chsh_max: errors.chsh_max,
        fidelity: errors.fidelity,
    };
    let verdict = decide(&point, &sigma, options.sigmas, tomo.converged);
    tomo.error_intervals = Some(errors);
    let mut report = pack(&point, &sigma, chsh_max(&tomo.rho_hat)?, options.chsh);
    report.tomography = Some(tomo);
    report.entanglement_verdict = verdict;
    Ok(report)
}

/// Same battery on an exactly known state (no sampling error).
pub fn certify_state(rho: &DensityMatrix, settings: &ChshSettings) -> Result<CertificationReport, CertifyError> {
    let point = estimates(rho, settings, None)?;
    let zero = Estimates {
        ppt: [0.0; 4],
        negativity: 0.0,
        witness: 0.0,
        chsh_fixed: 0.0,
        chsh_max: 0.0,
        fidelity: None,
    };
    let mut report = pack(&point, &zero, chsh_max(rho)?, *settings);
    report.entanglement_verdict = decide(&point, &zero, 0.0, true);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::{pauli_settings, simulate_counts};
    use crate::noise::{dephase, DephasingParams};
    use crate::qmath::states;

    #[test]
    fn exact_state_verdicts() {
        let s = ChshSettings::singlet_optimal();
        let v = |rho: &DensityMatrix| certify_state(rho, &s).unwrap().entanglement_verdict;
        assert_eq!(v(&states::singlet().projector()), Verdict::CertifiedBell);
        assert_eq!(v(&states::rho_mix()), Verdict::SeparableCertified);
        assert_eq!(v(&states::rho_dist()), Verdict::SeparableCertified);
        let half = dephase(&states::singlet().projector(), DephasingParams::new(0.45).unwrap()).unwrap();
        // S = √2(2 − η) = 2.19, witness −0.1
        assert_eq!(v(&half), Verdict::CertifiedBell);
        let weak = dephase(&states::singlet().projector(), DephasingParams::new(0.6).unwrap()).unwrap();
        assert_eq!(v(&weak), Verdict::CertifiedPpt);
    }

    #[test]
    fn singlet_counts_certify_bell() {
        let rho = states::singlet().projector();
        let mut settings = pauli_settings();
        settings.extend(ChshSettings::singlet_optimal().pairs());
        let data = simulate_counts(&rho, &settings, 10_000, 1).unwrap();
        let opts = CertifyOptions {
            replicas: 20,
            target: Some(rho),
            ..Default::default()
        };
        let report = certify_counts(&data, &opts).unwrap();
        assert_eq!(report.entanglement_verdict, Verdict::CertifiedBell);
        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(json["entanglement_verdict"], "certified_bell");
    }
}
