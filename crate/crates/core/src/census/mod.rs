//! Exhaustive halting census: every valid program up to a length bound that
//! halts within a step budget, grouped by output.
//!
//! Enumeration walks the tree of opcode requests. Each node is a suspended
//! [`MachineState`]; when it asks for more input it is cloned once per
//! opcode, so shared prefixes are executed once. Because a program is only
//! read on demand, a halt at depth `d` is exactly the valid program made of
//! the `d` opcodes read so far.

mod file;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bits::BitString;
use crate::machine::{
    ExecutionOutcome, MachineError, MachineLimits, MachineState, Opcode, Poll, Program,
    MACHINE_VERSION, OPCODE_BITS,
};
use crate::rational::{kraft_sum, Rational};

pub use file::{census_from_str, census_to_string, load_census, save_census, CENSUS_FORMAT};

#[derive(Debug, Error)]
pub enum CensusError {
    #[error("invalid census parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Machine(#[from] MachineError),
    #[error("enumeration tree exceeded the node budget of {budget}")]
    NodeBudgetExceeded { budget: u64 },
    #[error("could not start worker pool: {0}")]
    WorkerPool(String),
    #[error("census file is for machine {found:?}, expected {expected:?}")]
    VersionMismatch { expected: String, found: String },
    #[error("census checksum mismatch: header says {expected}, body hashes to {actual}")]
    ChecksumMismatch { expected: String, actual: String },
    #[error("malformed census file: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CensusParams {
    max_program_bits: usize,
    limits: MachineLimits,
    machine_version: String,
}

impl CensusParams {
    /// Programs of at most `max_program_bits` bits, `max_steps` steps, and
    /// the default output cap of `max_program_bits` bits.
    pub fn new(max_program_bits: usize, max_steps: u64) -> Result<Self, CensusError> {
        CensusParams::with_output_cap(max_program_bits, max_steps, max_program_bits)
    }

    pub fn with_output_cap(
        max_program_bits: usize,
        max_steps: u64,
        output_cap: usize,
    ) -> Result<Self, CensusError> {
        if max_program_bits < OPCODE_BITS {
            return Err(CensusError::InvalidParams(format!(
                "program length bound must be at least {OPCODE_BITS}, got {max_program_bits}"
            )));
        }
        Ok(CensusParams {
            max_program_bits,
            limits: MachineLimits::new(max_steps, output_cap)?,
            machine_version: MACHINE_VERSION.to_string(),
        })
    }

    /// Parameters whose output cap can never be hit within the step budget.
    pub fn uncapped(max_program_bits: usize, max_steps: u64) -> Result<Self, CensusError> {
        let cap = usize::try_from(max_steps).unwrap_or(usize::MAX);
        CensusParams::with_output_cap(max_program_bits, max_steps, cap)
    }

    pub fn max_program_bits(&self) -> usize {
        self.max_program_bits
    }

    pub fn max_steps(&self) -> u64 {
        self.limits.max_steps()
    }

    pub fn output_cap(&self) -> usize {
        self.limits.max_output_bits()
    }

    pub fn limits(&self) -> &MachineLimits {
        &self.limits
    }

    pub fn machine_version(&self) -> &str {
        &self.machine_version
    }

    /// Stable cache key, e.g. `UM-1/L6/t10/cap6`.
    pub fn cache_key(&self) -> String {
        format!(
            "{}/L{}/t{}/cap{}",
            self.machine_version,
            self.max_program_bits,
            self.max_steps(),
            self.output_cap()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CensusEntry {
    #[serde(rename = "p")]
    pub program: Program,
    pub steps: u64,
}

/// One valid halting program together with what it printed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Halt {
    pub program: Program,
    pub output: BitString,
    pub steps: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HaltingCensus {
    params: CensusParams,
    entries: BTreeMap<BitString, Vec<CensusEntry>>,
    count: usize,
    kraft: Rational,
}

impl HaltingCensus {
    /// Assembles a census from halting programs found by any means, in any
    /// order. Entries and program sets come out in canonical order.
    pub fn from_halts<I: IntoIterator<Item = Halt>>(params: CensusParams, halts: I) -> Self {
        let mut entries: BTreeMap<BitString, Vec<CensusEntry>> = BTreeMap::new();
        for h in halts {
            entries.entry(h.output).or_default().push(CensusEntry {
                program: h.program,
                steps: h.steps,
            });
        }
        for programs in entries.values_mut() {
            programs.sort();
        }
        let count = entries.values().map(Vec::len).sum();
        let kraft = kraft_sum(entries.values().flatten().map(|e| e.program.len()));
        HaltingCensus {
            params,
            entries,
            count,
            kraft,
        }
    }

    pub fn params(&self) -> &CensusParams {
        &self.params
    }

    /// Number of valid programs.
    pub fn count(&self) -> usize {
        self.count
    }

    /// Total Kraft mass `Σ 2^-|p|` over all valid programs.
    pub fn kraft(&self) -> &Rational {
        &self.kraft
    }

    pub fn entries(&self) -> impl Iterator<Item = (&BitString, &[CensusEntry])> {
        self.entries.iter().map(|(k, v)| (k, v.as_slice()))
    }

    pub fn outputs(&self) -> impl Iterator<Item = &BitString> {
        self.entries.keys()
    }

    /// Programs printing `x`, in canonical order. Empty if none.
    pub fn lookup(&self, x: &BitString) -> &[CensusEntry] {
        self.entries.get(x).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Every halt, ordered by program.
    pub fn halts(&self) -> Vec<Halt> {
        let mut all: Vec<Halt> = self
            .entries
            .iter()
            .flat_map(|(output, programs)| {
                programs.iter().map(move |e| Halt {
                    program: e.program.clone(),
                    output: output.clone(),
                    steps: e.steps,
                })
            })
            .collect();
        all.sort_by(|a, b| a.program.cmp(&b.program));
        all
    }

    /// Canonical JSON-lines body: one line per output, newline-terminated.
    pub fn canonical_body(&self) -> String {
        #[derive(Serialize)]
        struct Line<'a> {
            output: &'a BitString,
            programs: &'a [CensusEntry],
        }
        let mut body = String::new();
        for (output, programs) in &self.entries {
            let line = serde_json::to_string(&Line { output, programs })
                .expect("census lines serialize");
            body.push_str(&line);
            body.push('\n');
        }
        body
    }

    /// Hex SHA-256 of the canonical body.
    pub fn checksum(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_body().as_bytes()))
    }
}

/// Programs printing `x` in `census`; a table lookup.
pub fn census_lookup<'a>(census: &'a HaltingCensus, x: &BitString) -> &'a [CensusEntry] {
    census.lookup(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildOptions {
    pub workers: usize,
    /// Upper bound on enumeration tree nodes before giving up.
    pub node_budget: u64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            workers: 1,
            node_budget: 200_000_000,
        }
    }
}

/// Work done by one enumeration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct EnumStats {
    /// Machine states advanced.
    pub nodes: u64,
    /// Machine steps executed across all nodes, shared prefixes counted once.
    pub steps: u64,
}

impl EnumStats {
    fn merge(self, other: EnumStats) -> EnumStats {
        EnumStats {
            nodes: self.nodes + other.nodes,
            steps: self.steps + other.steps,
        }
    }
}

pub fn build_census(params: &CensusParams) -> Result<HaltingCensus, CensusError> {
    build_census_with(params, &BuildOptions::default()).map(|(c, _)| c)
}

pub fn build_census_with(
    params: &CensusParams,
    options: &BuildOptions,
) -> Result<(HaltingCensus, EnumStats), CensusError> {
    if options.workers == 0 {
        return Err(CensusError::InvalidParams("worker count must be at least 1".into()));
    }
    let walker = Walker {
        limits: *params.limits(),
        max_opcodes: params.max_program_bits() / OPCODE_BITS,
        node_budget: options.node_budget,
        nodes: AtomicU64::new(0),
        aborted: AtomicBool::new(false),
    };

    let mut halts = Vec::new();
    let mut stats = EnumStats::default();

    if options.workers == 1 {
        walker.explore(MachineState::new(), &mut halts, &mut stats)?;
    } else {
        // Breadth-first until there are enough independent subtrees to share.
        let target = options.workers * 32;
        let mut frontier = vec![MachineState::new()];
        while !frontier.is_empty() && frontier.len() < target {
            let mut next = Vec::new();
            for state in frontier {
                walker.expand(state, &mut halts, &mut stats, |child| next.push(child))?;
            }
            frontier = next;
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(options.workers)
            .build()
            .map_err(|e| CensusError::WorkerPool(e.to_string()))?;
        let parts: Vec<(Vec<Halt>, EnumStats)> = pool.install(|| {
            frontier
                .into_par_iter()
                .map(|state| {
                    let mut local = Vec::new();
                    let mut local_stats = EnumStats::default();
                    walker.explore(state, &mut local, &mut local_stats)?;
                    Ok((local, local_stats))
                })
                .collect::<Result<_, CensusError>>()
        })?;
        for (local, local_stats) in parts {
            halts.extend(local);
            stats = stats.merge(local_stats);
        }
    }

    Ok((HaltingCensus::from_halts(params.clone(), halts), stats))
}

struct Walker {
    limits: MachineLimits,
    max_opcodes: usize,
    node_budget: u64,
    nodes: AtomicU64,
    aborted: AtomicBool,
}

impl Walker {
    /// Advances one node, records a halt if it halts, and hands each viable
    /// child to `visit`.
    fn expand(
        &self,
        mut state: MachineState,
        halts: &mut Vec<Halt>,
        stats: &mut EnumStats,
        mut visit: impl FnMut(MachineState),
    ) -> Result<(), CensusError> {
        let seen = self.nodes.fetch_add(1, Ordering::Relaxed) + 1;
        if seen > self.node_budget || self.aborted.load(Ordering::Relaxed) {
            self.aborted.store(true, Ordering::Relaxed);
            return Err(CensusError::NodeBudgetExceeded {
                budget: self.node_budget,
            });
        }
        stats.nodes += 1;
        let before = state.steps();
        let poll = state.advance(&self.limits);
        stats.steps += state.steps() - before;
        match poll {
            Poll::Finished(ExecutionOutcome::Halted { output, steps, .. }) => {
                halts.push(Halt {
                    program: state.consumed_program(),
                    output,
                    steps,
                });
            }
            Poll::Finished(_) => {}
            Poll::NeedOpcode => {
                if state.code().len() < self.max_opcodes {
                    for op in Opcode::ALL {
                        let mut child = state.clone();
                        if child.feed(op).is_ok() {
                            visit(child);
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn explore(
        &self,
        root: MachineState,
        halts: &mut Vec<Halt>,
        stats: &mut EnumStats,
    ) -> Result<(), CensusError> {
        let mut stack = vec![root];
        while let Some(state) = stack.pop() {
            self.expand(state, halts, stats, |child| stack.push(child))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::run;

    fn census(l: usize, t: u64) -> HaltingCensus {
        build_census(&CensusParams::new(l, t).unwrap()).unwrap()
    }

    fn bits(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn three_bit_census() {
        let c = census(3, 10);
        assert_eq!(c.count(), 1);
        let programs: Vec<_> = c.lookup(&bits("")).iter().map(|e| (e.program.to_string(), e.steps)).collect();
        assert_eq!(programs, vec![("000".to_string(), 1)]);
    }

    #[test]
    fn six_bit_census() {
        let c = census(6, 10);
        assert_eq!(c.count(), 6);
        let show = |x: &str| -> Vec<String> {
            c.lookup(&bits(x)).iter().map(|e| e.program.to_string()).collect()
        };
        assert_eq!(show(""), ["000", "011000", "100000", "101000"]);
        assert_eq!(show("0"), ["001000"]);
        assert_eq!(show("1"), ["010000"]);
        assert!(show("11").is_empty());
        assert_eq!(c.kraft().to_string(), "13/64");
    }

    #[test]
    fn lookup_steps() {
        let c = census(6, 10);
        assert_eq!(
            census_lookup(&c, &bits("1")),
            &[CensusEntry { program: "010000".parse().unwrap(), steps: 2 }]
        );
    }

    #[test]
    fn params_validation() {
        assert!(CensusParams::new(2, 10).is_err());
        assert!(CensusParams::new(3, 0).is_err());
        assert_eq!(CensusParams::new(6, 10).unwrap().cache_key(), "UM-1/L6/t10/cap6");
    }

    #[test]
    fn node_budget_is_reported() {
        let params = CensusParams::new(12, 50).unwrap();
        let err = build_census_with(&params, &BuildOptions { workers: 1, node_budget: 10 }).unwrap_err();
        assert!(matches!(err, CensusError::NodeBudgetExceeded { budget: 10 }));
        let err = build_census_with(&params, &BuildOptions { workers: 4, node_budget: 100 }).unwrap_err();
        assert!(matches!(err, CensusError::NodeBudgetExceeded { budget: 100 }));
    }

    #[test]
    fn workers_do_not_change_result() {
        let params = CensusParams::new(15, 60).unwrap();
        let (one, s1) = build_census_with(&params, &BuildOptions { workers: 1, ..Default::default() }).unwrap();
        let (many, s4) = build_census_with(&params, &BuildOptions { workers: 4, ..Default::default() }).unwrap();
        assert_eq!(one, many);
        assert_eq!(one.checksum(), many.checksum());
        assert_eq!(s1, s4);
    }

    #[test]
    fn entries_replay() {
        let c = census(12, 40);
        for h in c.halts() {
            let outcome = run(&h.program, c.params().limits());
            assert!(outcome.is_valid_halt_for(&h.program));
            assert_eq!(
                outcome,
                ExecutionOutcome::Halted { output: h.output.clone(), steps: h.steps, consumed_bits: h.program.len() }
            );
        }
    }
}
