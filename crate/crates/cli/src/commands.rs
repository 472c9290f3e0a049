use std::path::Path;

use gme_core::certify::{
    certify_counts, certify_state, pauli_settings, ppt_report, simulate_counts, tomography_mle, witness_w, chsh_max,
    read_counts_csv, CertifyError, CertifyOptions, ChshSettings,
};
use gme_core::circuit::{
    build_gme_circuit, canonical_frame_unitary, canonicalize_to_singlet, ideal_spin_state, literal_waveplate_unitary,
    reduced_spin_state, run_with_checkpoints,
};
use gme_core::noise::{
    baseline_state, dephase, distinguishable_state, mix, zero_crossing, DephasingParams, DistinguishabilityParams,
};
use gme_core::photonic::{
    build_cz_network, hom_scan_grid, hom_visibility, infer_overlap_squared, verify_cz, visibility_table, BsParams,
};
use gme_core::qmath::{fidelity, fidelity_pure, states, DensityMatrix};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{numerical, CliError};
use crate::output::Writer;

/// Minimum process fidelity for the coupler array to count as a controlled-phase.
pub const CZ_FIDELITY_THRESHOLD: f64 = 0.999;
/// Ideal HOM visibility at `R = 1/3` and the measured one.
const IDEAL_VISIBILITY: f64 = 0.8;
const MEASURED_VISIBILITY: f64 = 0.73;

#[derive(Serialize)]
struct StateSummary {
    witness: f64,
    chsh_max: f64,
    negativity: f64,
    ppt_eigenvalues: [f64; 4],
}

fn summarize(rho: &DensityMatrix) -> Result<StateSummary, CliError> {
    let ppt = ppt_report(rho).map_err(numerical)?;
    Ok(StateSummary {
        witness: witness_w(rho).map_err(numerical)?,
        chsh_max: chsh_max(rho).map_err(numerical)?.value,
        negativity: ppt.negativity,
        ppt_eigenvalues: ppt.eigenvalues,
    })
}

pub fn circuit(cfg: &ExperimentConfig, out: &mut Writer) -> Result<(), CliError> {
    let c = build_gme_circuit(cfg.phi).map_err(numerical)?;
    let trace = run_with_checkpoints(&c);
    let spins = reduced_spin_state(&trace.final_state).map_err(numerical)?;
    let canonical = canonicalize_to_singlet(&spins).map_err(numerical)?;

    #[derive(Serialize)]
    struct Full<'a> {
        circuit: gme_core::circuit::CircuitDescription,
        checkpoints: &'a gme_core::circuit::CircuitTrace,
    }
    out.json(
        "state_full.json",
        &Full {
            circuit: c.description(),
            checkpoints: &trace,
        },
    )?;
    out.json("state_spins.json", &spins)?;

    #[derive(Serialize)]
    struct Canonical<'a> {
        state: &'a DensityMatrix,
        frame_unitary: gme_core::qmath::ComplexMatrix,
        literal_waveplate_unitary: gme_core::qmath::ComplexMatrix,
    }
    out.json(
        "state_canonical.json",
        &Canonical {
            state: &canonical,
            frame_unitary: canonical_frame_unitary(),
            literal_waveplate_unitary: literal_waveplate_unitary(),
        },
    )?;

    #[derive(Serialize)]
    struct Summary {
        phi: f64,
        fidelity_to_ideal: f64,
        canonical: StateSummary,
    }
    out.json(
        "summary.json",
        &Summary {
            phi: cfg.phi,
            fidelity_to_ideal: fidelity_pure(&spins, &ideal_spin_state(cfg.phi)).map_err(numerical)?,
            canonical: summarize(&canonical)?,
        },
    )
}

pub fn photonic_verify(cfg: &ExperimentConfig, out: &mut Writer) -> Result<(), CliError> {
    let bs = cfg.bs_params();
    let net = build_cz_network(bs).map_err(numerical)?;
    let report = verify_cz(&net).map_err(numerical)?;
    let passed = report.process_fidelity >= CZ_FIDELITY_THRESHOLD;
    let diagnostic = if passed {
        "coupler array acts as a controlled-phase on coincidences".to_string()
    } else {
        let mags: Vec<String> = report
            .truth_table
            .iter()
            .map(|[re, im]| format!("{:.4}", re.hypot(*im)))
            .collect();
        format!(
            "process fidelity {:.6} below {CZ_FIDELITY_THRESHOLD}: coincidence amplitude magnitudes [{}] are unequal at R_H = {}, R_V = {}",
            report.process_fidelity,
            mags.join(", "),
            bs.r_h,
            bs.r_v
        )
    };
    let visibility = hom_visibility(bs).map_err(numerical)?;

    #[derive(Serialize)]
    struct Report<'a> {
        bs: BsParams,
        cz: &'a gme_core::photonic::CzReport,
        fidelity_threshold: f64,
        passed: bool,
        diagnostic: &'a str,
        hom_visibility: f64,
        ideal_visibility: f64,
        measured_visibility: f64,
        inferred_overlap_squared: f64,
    }
    out.json(
        "photonic_report.json",
        &Report {
            bs,
            cz: &report,
            fidelity_threshold: CZ_FIDELITY_THRESHOLD,
            passed,
            diagnostic: &diagnostic,
            hom_visibility: visibility,
            ideal_visibility: IDEAL_VISIBILITY,
            measured_visibility: MEASURED_VISIBILITY,
            inferred_overlap_squared: infer_overlap_squared(MEASURED_VISIBILITY, visibility),
        },
    )?;
    write_hom_table(cfg, bs, out)?;
    if passed {
        Ok(())
    } else {
        Err(CliError::Verification(diagnostic))
    }
}

fn write_hom_table(cfg: &ExperimentConfig, bs: BsParams, out: &mut Writer) -> Result<(), CliError> {
    let points = hom_scan_grid(&cfg.gamma_grid, bs, cfg.coherence_sigma_ps).map_err(numerical)?;
    let rows: Vec<Vec<f64>> = points
        .iter()
        .map(|p| vec![p.gamma, p.delay_ps, p.coincidence_prob])
        .collect();
    out.table("hom_scan", &["gamma", "delay_ps", "coincidence_prob"], &rows)
}

pub fn hom_scan(cfg: &ExperimentConfig, out: &mut Writer) -> Result<(), CliError> {
    let bs = cfg.bs_params();
    write_hom_table(cfg, bs, out)?;
    let table = visibility_table(&cfg.gamma_grid, bs).map_err(numerical)?;
    let rows: Vec<Vec<f64>> = table
        .iter()
        .map(|p| vec![p.gamma, p.v, p.fit_trace_distance, p.success_probability])
        .collect();
    out.table(
        "distinguishability",
        &["gamma", "v", "fit_trace_distance", "success_probability"],
        &rows,
    )?;
    let visibility = hom_visibility(bs).map_err(numerical)?;

    #[derive(Serialize)]
    struct Summary {
        bs: BsParams,
        hom_visibility: f64,
        measured_visibility: f64,
        inferred_overlap_squared: f64,
        coherence_sigma_ps: f64,
    }
    out.json(
        "hom_summary.json",
        &Summary {
            bs,
            hom_visibility: visibility,
            measured_visibility: MEASURED_VISIBILITY,
            inferred_overlap_squared: infer_overlap_squared(MEASURED_VISIBILITY, visibility),
            coherence_sigma_ps: cfg.coherence_sigma_ps,
        },
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ScanParam {
    Eta,
    V,
}

/// Every setting the certification battery uses: the nine Pauli pairs and
/// the four CHSH pairs.
pub fn battery_settings() -> Vec<gme_core::certify::MeasurementSetting> {
    let mut s = pauli_settings();
    s.extend(ChshSettings::singlet_optimal().pairs());
    s
}

pub fn scan(cfg: &ExperimentConfig, which: ScanParam, out: &mut Writer) -> Result<(), CliError> {
    let singlet = states::singlet().projector();
    let rho_mix = states::rho_mix();
    let (name, grid) = match which {
        ScanParam::Eta => ("eta", &cfg.eta_grid),
        ScanParam::V => ("v", &cfg.v_grid),
    };
    let models = |x: f64| -> Result<(DensityMatrix, DensityMatrix), CliError> {
        Ok(match which {
            ScanParam::Eta => (
                dephase(&singlet, DephasingParams::new(x).map_err(numerical)?).map_err(numerical)?,
                baseline_state(x, cfg.baseline_weight).map_err(numerical)?,
            ),
            ScanParam::V => {
                let ideal = distinguishable_state(DistinguishabilityParams::new(x).map_err(numerical)?);
                let baseline = mix(&ideal, &rho_mix, cfg.baseline_weight).map_err(numerical)?;
                (ideal, baseline)
            }
        })
    };
    let mut columns = vec![
        name,
        "witness_ideal",
        "witness_baseline",
        "chsh_max",
        "negativity",
        "pt_min_eigenvalue",
    ];
    let sample = cfg.counts_per_setting > 0;
    if sample {
        columns.extend(["mle_witness_baseline", "mle_negativity_baseline", "mle_pt_min_baseline"]);
    }
    let mut rows = Vec::with_capacity(grid.len());
    let mut non_converged = 0;
    for (k, &x) in grid.iter().enumerate() {
        let (ideal, baseline) = models(x)?;
        let ppt = ppt_report(&ideal).map_err(numerical)?;
        let mut row = vec![
            x,
            witness_w(&ideal).map_err(numerical)?,
            witness_w(&baseline).map_err(numerical)?,
            chsh_max(&ideal).map_err(numerical)?.value,
            ppt.negativity,
            ppt.min_eigenvalue(),
        ];
        if sample {
            let data = simulate_counts(&baseline, &pauli_settings(), cfg.counts_per_setting, cfg.seed.wrapping_add(k as u64))
                .map_err(numerical)?;
            let fit = tomography_mle(&data, &cfg.mle_options(), None).map_err(numerical)?;
            non_converged += usize::from(!fit.converged);
            row.extend([
                witness_w(&fit.rho_hat).map_err(numerical)?,
                fit.negativity,
                fit.ppt_eigenvalues[3],
            ]);
        }
        rows.push(row);
    }
    out.table(&format!("scan_{name}"), &columns, &rows)?;

    let column = |c: usize| rows.iter().map(|r| r[c]).collect::<Vec<_>>();
    #[derive(Serialize)]
    struct Summary {
        parameter: &'static str,
        points: usize,
        baseline_weight: f64,
        witness_zero_crossing_ideal: Option<f64>,
        witness_zero_crossing_baseline: Option<f64>,
        mle_non_converged: usize,
    }
    out.json(
        &format!("scan_{name}_summary.json"),
        &Summary {
            parameter: name,
            points: rows.len(),
            baseline_weight: cfg.baseline_weight,
            witness_zero_crossing_ideal: zero_crossing(grid, &column(1)),
            witness_zero_crossing_baseline: zero_crossing(grid, &column(2)),
            mle_non_converged: non_converged,
        },
    )?;
    if non_converged > 0 {
        return Err(CliError::NoConvergence(format!("{non_converged} scan points")));
    }
    Ok(())
}

/// A state document: either a bare `{dims, matrix}` or one written by this
/// tool, with the state under `data` (or `data.state`).
pub fn read_state(path: &Path) -> Result<DensityMatrix, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
    let parse_err = |e: serde_json::Error| CliError::Parse {
        file: path.display().to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    };
    let value: serde_json::Value = serde_json::from_str(&text).map_err(parse_err)?;
    let mut node = &value;
    for key in ["data", "state"] {
        if let Some(inner) = node.get(key) {
            node = inner;
        }
    }
    DensityMatrix::deserialize(node).map_err(|e| CliError::Parse {
        file: path.display().to_string(),
        line: 1,
        column: 1,
        message: e.to_string(),
    })
}

use serde::Deserialize;

pub fn certify(cfg: &ExperimentConfig, input: &Path, out: &mut Writer) -> Result<(), CliError> {
    let is_json = input.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        let rho = read_state(input)?;
        let report = certify_state(&rho, &ChshSettings::singlet_optimal()).map_err(numerical)?;
        return out.json("certify_report.json", &report);
    }
    let file = std::fs::File::open(input).map_err(|e| CliError::Io(input.display().to_string(), e))?;
    let data = read_counts_csv(file).map_err(|e| match e {
        CertifyError::Parse { line, column, message } => CliError::Parse {
            file: input.display().to_string(),
            line: line as usize,
            column: column as usize,
            message,
        },
        other => numerical(other),
    })?;
    let options = CertifyOptions {
        replicas: cfg.mc_replicas,
        seed: cfg.seed,
        mle: cfg.mle_options(),
        ..Default::default()
    };
    let report = certify_counts(&data, &options).map_err(|e| match e {
        CertifyError::TooSmall(..) | CertifyError::MissingSetting(_) => CliError::Config(e.to_string()),
        other => numerical(other),
    })?;
    out.json("certify_report.json", &report)?;
    let tomo = report.tomography.as_ref().expect("counts input runs tomography");
    let mc_failures = tomo.error_intervals.as_ref().map_or(0, |e| e.non_converged);
    if !tomo.converged || mc_failures > 0 {
        return Err(CliError::NoConvergence(format!(
            "MLE converged: {}, Monte Carlo replicas without convergence: {mc_failures}",
            tomo.converged
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum NamedState {
    Singlet,
    Dephased,
    Baseline,
    Distinguishable,
    RhoMix,
    RhoDist,
    MaximallyMixed,
}

pub fn named_state(cfg: &ExperimentConfig, which: NamedState, eta: f64, v: f64) -> Result<DensityMatrix, CliError> {
    let config = |e: gme_core::noise::NoiseError| CliError::Config(e.to_string());
    Ok(match which {
        NamedState::Singlet => states::singlet().projector(),
        NamedState::Dephased => {
            dephase(&states::singlet().projector(), DephasingParams::new(eta).map_err(config)?).map_err(config)?
        }
        NamedState::Baseline => baseline_state(eta, cfg.baseline_weight).map_err(config)?,
        NamedState::Distinguishable => distinguishable_state(DistinguishabilityParams::new(v).map_err(config)?),
        NamedState::RhoMix => states::rho_mix(),
        NamedState::RhoDist => states::rho_dist(),
        NamedState::MaximallyMixed => states::maximally_mixed_pair(),
    })
}

pub fn simulate(cfg: &ExperimentConfig, rho: &DensityMatrix, out: &mut Writer) -> Result<(), CliError> {
    if cfg.counts_per_setting == 0 {
        return Err(CliError::Config("counts_per_setting must be at least 1".into()));
    }
    let data = simulate_counts(rho, &battery_settings(), cfg.counts_per_setting, cfg.seed).map_err(|e| match e {
        CertifyError::DimensionMismatch(_) => CliError::Config(e.to_string()),
        other => numerical(other),
    })?;
    out.counts("counts.csv", &data)?;

    #[derive(Serialize)]
    struct Truth<'a> {
        state: &'a DensityMatrix,
        counts_per_setting: u64,
        summary: StateSummary,
        fidelity_to_singlet: f64,
    }
    out.json(
        "counts_truth.json",
        &Truth {
            state: rho,
            counts_per_setting: cfg.counts_per_setting,
            summary: summarize(rho)?,
            fidelity_to_singlet: fidelity(rho, &states::singlet().projector()).map_err(numerical)?,
        },
    )
}
