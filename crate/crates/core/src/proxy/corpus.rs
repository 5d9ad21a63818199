//! Deterministic synthetic inputs for the compression proxy.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ProxyError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusKind {
    /// `n` copies of `byte`.
    Constant { n: usize, byte: u8 },
    /// `n` bytes from a xorshift64* generator seeded with `seed`.
    Noise { n: usize, seed: u64 },
    /// Rule 110 history: `generations` rows of `width` cells, starting from a
    /// single live cell at the right edge. Rows are packed MSB-first and
    /// padded to whole bytes.
    Structured { width: usize, generations: usize },
}

impl fmt::Display for CorpusKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorpusKind::Constant { n, byte } => write!(f, "constant:{n}:{byte}"),
            CorpusKind::Noise { n, seed } => write!(f, "noise:{n}:{seed}"),
            CorpusKind::Structured { width, generations } => {
                write!(f, "structured:{width}:{generations}")
            }
        }
    }
}

impl FromStr for CorpusKind {
    type Err = ProxyError;

    /// `constant:N:BYTE`, `noise:N:SEED` or `structured:WIDTH:GENERATIONS`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ProxyError::InvalidCorpus(format!("cannot parse corpus description {s:?}"));
        let parts: Vec<&str> = s.trim().split(':').collect();
        let [kind, a, b] = parts[..] else {
            return Err(bad());
        };
        let a: usize = a.parse().map_err(|_| bad())?;
        let kind = match kind {
            "constant" => CorpusKind::Constant { n: a, byte: b.parse().map_err(|_| bad())? },
            "noise" => CorpusKind::Noise { n: a, seed: b.parse().map_err(|_| bad())? },
            "structured" => CorpusKind::Structured { width: a, generations: b.parse().map_err(|_| bad())? },
            _ => return Err(bad()),
        };
        kind.validate()?;
        Ok(kind)
    }
}

impl CorpusKind {
    fn validate(&self) -> Result<(), ProxyError> {
        let problem = match *self {
            CorpusKind::Constant { n: 0, .. } | CorpusKind::Noise { n: 0, .. } => "length must be positive",
            CorpusKind::Noise { seed: 0, .. } => "xorshift seed must be non-zero",
            CorpusKind::Structured { width: 0, .. } => "width must be positive",
            CorpusKind::Structured { generations: 0, .. } => "generations must be positive",
            _ => return Ok(()),
        };
        Err(ProxyError::InvalidCorpus(format!("{self}: {problem}")))
    }
}

pub fn generate_corpus(kind: &CorpusKind) -> Result<Vec<u8>, ProxyError> {
    kind.validate()?;
    Ok(match *kind {
        CorpusKind::Constant { n, byte } => vec![byte; n],
        CorpusKind::Noise { n, seed } => {
            let mut x = seed;
            (0..n)
                .map(|_| {
                    x ^= x >> 12;
                    x ^= x << 25;
                    x ^= x >> 27;
                    (x.wrapping_mul(2_685_821_657_736_338_717) >> 56) as u8
                })
                .collect()
        }
        CorpusKind::Structured { width, generations } => rule110(width, generations),
    })
}

fn rule110(width: usize, generations: usize) -> Vec<u8> {
    let mut row = vec![false; width];
    row[width - 1] = true;
    let mut out = Vec::with_capacity(generations * width.div_ceil(8));
    for g in 0..generations {
        for chunk in row.chunks(8) {
            out.push(chunk.iter().enumerate().fold(0u8, |b, (i, &c)| b | (u8::from(c) << (7 - i))));
        }
        if g + 1 < generations {
            row = (0..width)
                .map(|i| {
                    let l = i > 0 && row[i - 1];
                    let r = i + 1 < width && row[i + 1];
                    let pattern = u8::from(l) << 2 | u8::from(row[i]) << 1 | u8::from(r);
                    (110u8 >> pattern) & 1 == 1
                })
                .collect();
        }
    }
    out
}
