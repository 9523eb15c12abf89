use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// One estimate for one seed set. `seed_set` holds space-separated labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: String,
    pub seed_set: String,
    pub estimate: f64,
    pub truth: Option<f64>,
    pub rel_error_pct: Option<f64>,
    pub samples: u64,
    pub observed_influence: f64,
    pub wall_ms: f64,
    pub rng_seed: u64,
    pub threads: usize,
    pub eps: Option<f64>,
    pub delta: Option<f64>,
}

impl RunRecord {
    /// Sets `truth` and, when it is positive, the relative error.
    pub fn with_truth(mut self, truth: Option<f64>) -> Self {
        self.truth = truth;
        self.rel_error_pct = truth
            .filter(|&t| t > 0.0)
            .map(|t| (self.estimate / t - 1.0).abs() * 100.0);
        self
    }
}

pub fn write_records<T: Serialize, W: Write>(out: W, records: &[T], format: Format) -> Result<(), CliError> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in records {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        Format::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, records)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

pub fn read_records<R: std::io::Read>(input: R, format: Format) -> Result<Vec<RunRecord>, CliError> {
    match format {
        Format::Csv => {
            let mut rd = csv::Reader::from_reader(input);
            Ok(rd.deserialize().collect::<Result<Vec<RunRecord>, _>>()?)
        }
        Format::Json => Ok(serde_json::from_reader(input)?),
    }
}
