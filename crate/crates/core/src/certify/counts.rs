//! Coincidence counts: Poisson simulation and the CSV interchange format.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::{Axis, CertifyError, MeasurementSetting};
use crate::qmath::{ComplexMatrix, DensityMatrix};

pub const CSV_HEADER: [&str; 6] = ["setting_a", "setting_b", "n_pp", "n_pm", "n_mp", "n_mm"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    PlusPlus,
    PlusMinus,
    MinusPlus,
    MinusMinus,
}

impl Outcome {
    pub const ALL: [Outcome; 4] = [
        Outcome::PlusPlus,
        Outcome::PlusMinus,
        Outcome::MinusPlus,
        Outcome::MinusMinus,
    ];

    pub fn signs(self) -> (f64, f64) {
        match self {
            Outcome::PlusPlus => (1.0, 1.0),
            Outcome::PlusMinus => (1.0, -1.0),
            Outcome::MinusPlus => (-1.0, 1.0),
            Outcome::MinusMinus => (-1.0, -1.0),
        }
    }

    /// `(I + s_a a·σ)/2 ⊗ (I + s_b b·σ)/2`.
    pub fn projector(self, setting: &MeasurementSetting) -> ComplexMatrix {
        let (sa, sb) = self.signs();
        let half = |axis: &Axis, s: f64| {
            (&ComplexMatrix::identity(2) + &axis.observable().scale_real(s)).scale_real(0.5)
        };
        half(&setting.a, sa).kron(&half(&setting.b, sb))
    }
}

/// Counts for the outcomes `++, +−, −+, −−` of one setting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountsRecord {
    pub setting: MeasurementSetting,
    pub counts: [u64; 4],
    /// Mean number of events per setting; the observed total when read from file.
    pub total_expected: f64,
}

impl CountsRecord {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `(n++ − n+− − n−+ + n−−) / n`.
    pub fn correlator(&self) -> Option<f64> {
        let n = self.total();
        if n == 0 {
            return None;
        }
        let [pp, pm, mp, mm] = self.counts.map(|c| c as f64);
        Some((pp - pm - mp + mm) / n as f64)
    }
}

/// Born probabilities of the four outcomes, clipped at zero.
pub fn outcome_probabilities(rho: &DensityMatrix, setting: &MeasurementSetting) -> [f64; 4] {
    Outcome::ALL.map(|o| rho.expectation(&o.projector(setting)).re.max(0.0))
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive finite mean").sample(rng) as u64
}

/// Independent Poisson counts with means `N·p(outcome)` for every setting.
pub fn simulate_counts(
    rho: &DensityMatrix,
    settings: &[MeasurementSetting],
    n_per_setting: u64,
    seed: u64,
) -> Result<Vec<CountsRecord>, CertifyError> {
    super::check_two_qubit(rho)?;
    if n_per_setting == 0 {
        return Err(CertifyError::TooSmall("counts per setting", 1));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = n_per_setting as f64;
    Ok(settings
        .iter()
        .map(|s| {
            let p = outcome_probabilities(rho, s);
            CountsRecord {
                setting: *s,
                counts: p.map(|pk| poisson(&mut rng, n * pk)),
                total_expected: n,
            }
        })
        .collect())
}

/// Replaces every count `n` by a fresh `Poisson(n)` draw.
pub(crate) fn resample(data: &[CountsRecord], rng: &mut ChaCha8Rng) -> Vec<CountsRecord> {
    data.iter()
        .map(|r| CountsRecord {
            counts: r.counts.map(|c| poisson(rng, c as f64)),
            ..r.clone()
        })
        .collect()
}

pub fn write_counts_csv<W: Write>(out: W, data: &[CountsRecord]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in data {
        let mut row = vec![r.setting.a.to_string(), r.setting.b.to_string()];
        row.extend(r.counts.iter().map(|c| c.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the counts CSV. Lines starting with `#` are metadata and skipped.
pub fn read_counts_csv<R: Read>(input: R) -> Result<Vec<CountsRecord>, CertifyError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(input);
    let csv_err = |e: csv::Error| {
        let line = e.position().map(|p| p.line()).unwrap_or(0);
        CertifyError::Parse {
            line,
            column: 1,
            message: e.to_string(),
        }
    };
    let header = reader.headers().map_err(csv_err)?.clone();
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(CertifyError::Parse {
            line: 1,
            column: 1,
            message: format!("expected header `{}`", CSV_HEADER.join(",")),
        });
    }
    let mut data = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field_err = |column: usize, message: String| CertifyError::Parse {
            line,
            column: column as u64 + 1,
            message,
        };
        let axis = |column: usize| -> Result<Axis, CertifyError> {
            record[column]
                .parse()
                .map_err(|e: CertifyError| field_err(column, e.to_string()))
        };
        let setting = MeasurementSetting::new(axis(0)?, axis(1)?);
        let mut counts = [0u64; 4];
        for (k, c) in counts.iter_mut().enumerate() {
            *c = record[k + 2]
                .parse()
                .map_err(|_| field_err(k + 2, format!("`{}` is not a nonnegative integer", &record[k + 2])))?;
        }
        data.push(CountsRecord {
            setting,
            counts,
            total_expected: counts.iter().sum::<u64>() as f64,
        });
    }
    Ok(data)
}
