//! Compression-based stand-in for depth on real byte strings.
//!
//! Compressed size plays the role of program length and counted decoder work
//! the role of running time.

mod codec;
mod corpus;

pub use codec::{
    compress, decompress_instrumented, CodecFrame, CostModel, DecodeError, Token, MAX_MATCH,
    MIN_MATCH, WINDOW,
};
pub use corpus::{generate_corpus, CorpusKind};

use std::cmp::Ordering;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProxyError {
    #[error("invalid corpus: {0}")]
    InvalidCorpus(String),
    #[error("codec failure on {name}: {source}")]
    Codec { name: String, source: DecodeError },
    #[error("round trip of {0} did not reproduce the input")]
    RoundTrip(String),
    #[error("worker pool: {0}")]
    WorkerPool(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusItem {
    pub name: String,
    pub kind: CorpusKind,
}

impl CorpusItem {
    pub fn new(kind: CorpusKind) -> Self {
        CorpusItem { name: kind.to_string(), kind }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxyReport {
    pub name: String,
    pub n_bytes: usize,
    pub compressed_bits: u64,
    pub decode_steps: u64,
    pub steps_per_output_byte: f64,
    pub bits_per_byte: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxyExperiment {
    pub model: CostModel,
    pub reports: Vec<ProxyReport>,
    /// `decode_order[i][j]` is -1, 0 or 1 as item i needs less, equal or
    /// more decoder work than item j.
    pub decode_order: Vec<Vec<i8>>,
    pub compressed_order: Vec<Vec<i8>>,
}

pub const CSV_HEADER: &str = "name,n_bytes,compressed_bits,decode_steps,steps_per_output_byte";

impl ProxyExperiment {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.reports {
            writeln!(
                out,
                "{},{},{},{},{:.6}",
                r.name, r.n_bytes, r.compressed_bits, r.decode_steps, r.steps_per_output_byte
            )
            .expect("writing to a String");
        }
        out
    }
}

fn ratio(num: u64, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn measure(item: &CorpusItem, model: &CostModel) -> Result<ProxyReport, ProxyError> {
    let data = generate_corpus(&item.kind)?;
    let codec_err = |source| ProxyError::Codec { name: item.name.clone(), source };
    let frame = compress(&data).map_err(codec_err)?;
    let (decoded, decode_steps) = decompress_instrumented(&frame, model).map_err(codec_err)?;
    if decoded != data {
        return Err(ProxyError::RoundTrip(item.name.clone()));
    }
    let compressed_bits = frame.compressed_bits();
    Ok(ProxyReport {
        name: item.name.clone(),
        n_bytes: data.len(),
        compressed_bits,
        decode_steps,
        steps_per_output_byte: ratio(decode_steps, data.len()),
        bits_per_byte: ratio(compressed_bits, data.len()),
    })
}

fn order_matrix(values: &[u64]) -> Vec<Vec<i8>> {
    values
        .iter()
        .map(|a| {
            values
                .iter()
                .map(|b| match a.cmp(b) {
                    Ordering::Less => -1,
                    Ordering::Equal => 0,
                    Ordering::Greater => 1,
                })
                .collect()
        })
        .collect()
}

/// Compresses and decodes every item, reporting size and decoder work.
/// Results are in input order regardless of `workers`.
pub fn proxy_depth_report(
    items: &[CorpusItem],
    model: &CostModel,
    workers: usize,
) -> Result<ProxyExperiment, ProxyError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| ProxyError::WorkerPool(e.to_string()))?;
    let reports = pool.install(|| {
        items
            .par_iter()
            .map(|item| measure(item, model))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let steps: Vec<u64> = reports.iter().map(|r| r.decode_steps).collect();
    let bits: Vec<u64> = reports.iter().map(|r| r.compressed_bits).collect();
    Ok(ProxyExperiment {
        model: *model,
        decode_order: order_matrix(&steps),
        compressed_order: order_matrix(&bits),
        reports,
    })
}
