//! JSON-lines census files.
//!
//! ```text
//! {"format":"depthlab-census/1","machine":"UM-1","L":6,"t":10,"output_cap":6,"count":6,"kraft":"13/64","checksum":"…"}
//! {"output":"","programs":[{"p":"000","steps":1},…]}
//! …
//! ```
//!
//! The checksum is the hex SHA-256 of every byte after the header line.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{CensusEntry, CensusError, CensusParams, Halt, HaltingCensus};
use crate::bits::BitString;
use crate::machine::MACHINE_VERSION;
use crate::rational::Rational;

pub const CENSUS_FORMAT: &str = "depthlab-census/1";

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    machine: String,
    #[serde(rename = "L")]
    max_program_bits: usize,
    #[serde(rename = "t")]
    max_steps: u64,
    output_cap: usize,
    count: usize,
    kraft: Rational,
    checksum: String,
}

#[derive(Debug, Deserialize)]
struct Line {
    output: BitString,
    programs: Vec<CensusEntry>,
}

pub fn census_to_string(census: &HaltingCensus) -> String {
    let body = census.canonical_body();
    let header = Header {
        format: CENSUS_FORMAT.to_string(),
        machine: census.params().machine_version().to_string(),
        max_program_bits: census.params().max_program_bits(),
        max_steps: census.params().max_steps(),
        output_cap: census.params().output_cap(),
        count: census.count(),
        kraft: census.kraft().clone(),
        checksum: hex::encode(Sha256::digest(body.as_bytes())),
    };
    let mut text = serde_json::to_string(&header).expect("header serializes");
    text.push('\n');
    text.push_str(&body);
    text
}

pub fn save_census(census: &HaltingCensus, path: &Path) -> Result<(), CensusError> {
    fs::write(path, census_to_string(census))?;
    Ok(())
}

pub fn load_census(path: &Path) -> Result<HaltingCensus, CensusError> {
    let text = fs::read_to_string(path)?;
    census_from_str(&text)
}

pub fn census_from_str(text: &str) -> Result<HaltingCensus, CensusError> {
    let (header_line, body) = text
        .split_once('\n')
        .ok_or_else(|| CensusError::Malformed("missing header line".into()))?;
    let header: Header = serde_json::from_str(header_line)
        .map_err(|e| CensusError::Malformed(format!("header: {e}")))?;
    if header.format != CENSUS_FORMAT {
        return Err(CensusError::Malformed(format!("unknown format {:?}", header.format)));
    }
    if header.machine != MACHINE_VERSION {
        return Err(CensusError::VersionMismatch {
            expected: MACHINE_VERSION.to_string(),
            found: header.machine,
        });
    }
    let actual = hex::encode(Sha256::digest(body.as_bytes()));
    if actual != header.checksum {
        return Err(CensusError::ChecksumMismatch {
            expected: header.checksum,
            actual,
        });
    }

    let params =
        CensusParams::with_output_cap(header.max_program_bits, header.max_steps, header.output_cap)?;
    let mut halts = Vec::new();
    for (i, raw) in body.lines().enumerate() {
        let line: Line = serde_json::from_str(raw)
            .map_err(|e| CensusError::Malformed(format!("body line {}: {e}", i + 2)))?;
        if line.output.len() > params.output_cap() {
            return Err(CensusError::Malformed(format!("output {} exceeds the cap", line.output)));
        }
        for entry in line.programs {
            if entry.program.len() > params.max_program_bits() || entry.steps > params.max_steps() {
                return Err(CensusError::Malformed(format!(
                    "program {} lies outside the census bounds",
                    entry.program
                )));
            }
            halts.push(Halt {
                program: entry.program,
                output: line.output.clone(),
                steps: entry.steps,
            });
        }
    }
    let census = HaltingCensus::from_halts(params, halts);
    if census.count() != header.count || census.kraft() != &header.kraft {
        return Err(CensusError::Malformed("header totals disagree with the body".into()));
    }
    if census.canonical_body() != body {
        return Err(CensusError::Malformed("body is not in canonical order".into()));
    }
    Ok(census)
}
