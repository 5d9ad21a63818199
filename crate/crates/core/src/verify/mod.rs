//! Prover/verifier simulations for value claims.
//!
//! Three kinds of claim are supported:
//!
//! - an *output* claim, `p` prints `x` within `t` steps, settled by replay;
//! - a *minimality* claim, no program of length at most `|p|` prints `x` in
//!   strictly fewer steps than `p`, backed by a prover table of every halting
//!   program up to `|p|` bits;
//! - a *depth* claim, no program of length at most `k_hat + s` prints `x` in
//!   fewer than `t` steps.
//!
//! All messages are encoded to bytes (see [`wire`]) so transcripts carry an
//! honest size. Spot-mode verification checks a seeded sample of the table
//! and is *not* sound against falsified rows it does not sample.

mod scenario;
pub mod wire;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::bits::BitString;
use crate::census::{build_census_with, BuildOptions, CensusError, CensusParams, Halt};
use crate::machine::{run_counted, ExecutionOutcome, MachineLimits, Program, OPCODE_BITS};

pub use scenario::{run_scenario, FakeRow, ModeSpec, ProverStrategy, Scenario};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Census(#[from] CensusError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid scenario: {0}")]
    Scenario(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputClaim {
    pub p: Program,
    pub x: BitString,
    pub t: u64,
}

/// No program of length at most `|p|` prints `x` in strictly fewer steps
/// than `p` does; ties do not refute.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinimalityClaim {
    pub p: Program,
    pub x: BitString,
    pub t: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepthClaim {
    pub x: BitString,
    pub t: u64,
    pub s: usize,
    pub k_hat: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Claim {
    Output(OutputClaim),
    Minimality(MinimalityClaim),
    Depth(DepthClaim),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Party {
    Prover,
    Verifier,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub sender: Party,
    pub payload: Vec<u8>,
}

impl Message {
    pub fn bits(&self) -> u64 {
        self.payload.len() as u64 * 8
    }
}

impl Serialize for Message {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Dump<'a> {
            sender: Party,
            bits: u64,
            payload: &'a str,
        }
        Dump {
            sender: self.sender,
            bits: self.bits(),
            payload: &hex::encode(&self.payload),
        }
        .serialize(serializer)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    /// The claimed program did not halt within the budget.
    Timeout { steps: u64 },
    OutputMismatch { expected: BitString, actual: BitString },
    /// The claimed program is not a valid halting program.
    InvalidProgram { outcome: &'static str },
    /// A program that refutes the claim; it replays as an output claim.
    Counterexample { program: Program, output: BitString, steps: u64 },
    /// A table row that does not replay as stated.
    ReplayMismatch { row: usize, program: Program, actual: ExecutionOutcome },
    /// The claimed program is missing from, or misreported in, the table.
    MissingClaimedRow,
    /// A halting program the table should contain but does not.
    OmittedRow { program: Program },
    Malformed { detail: String },
    InsufficientProof { detail: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accept,
    Reject(RejectReason),
}

impl Verdict {
    pub fn is_accept(&self) -> bool {
        matches!(self, Verdict::Accept)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Transcript {
    pub claim: Claim,
    pub messages: Vec<Message>,
    pub total_payload_bits: u64,
    pub prover_steps: u64,
    pub verifier_steps: u64,
    pub verdict: Verdict,
}

/// Accumulates a transcript; the verdict is supplied exactly once, by
/// [`finish`](Self::finish).
struct TranscriptBuilder {
    claim: Claim,
    messages: Vec<Message>,
    prover_steps: u64,
    verifier_steps: u64,
}

impl TranscriptBuilder {
    fn new(claim: Claim) -> Self {
        let payload = wire::encode_claim(&claim);
        TranscriptBuilder {
            claim,
            messages: vec![Message {
                sender: Party::Prover,
                payload,
            }],
            prover_steps: 0,
            verifier_steps: 0,
        }
    }

    fn finish(self, verdict: Verdict) -> Transcript {
        Transcript {
            total_payload_bits: self.messages.iter().map(Message::bits).sum(),
            claim: self.claim,
            messages: self.messages,
            prover_steps: self.prover_steps,
            verifier_steps: self.verifier_steps,
            verdict,
        }
    }
}

/// One row of a prover table: a valid program, what it printed, and when.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableRow {
    pub program: Program,
    pub output: BitString,
    pub steps: u64,
}

/// Every valid program of at most `max_program_bits` bits halting within
/// `budget` steps, ordered by program.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProverTable {
    pub max_program_bits: usize,
    pub budget: u64,
    pub rows: Vec<TableRow>,
}

impl ProverTable {
    pub fn to_messages(&self) -> Vec<Message> {
        let header = Message {
            sender: Party::Prover,
            payload: wire::encode_table_header(self),
        };
        std::iter::once(header)
            .chain(self.rows.iter().map(|row| Message {
                sender: Party::Prover,
                payload: wire::encode_row(row),
            }))
            .collect()
    }

    /// Decodes a table. Only the wire format is checked here; see
    /// [`check_structure`](Self::check_structure).
    pub fn from_messages(messages: &[Message]) -> Result<Self, String> {
        let (header, rows) = messages.split_first().ok_or("no table header")?;
        if messages.iter().any(|m| m.sender != Party::Prover) {
            return Err("table message not sent by the prover".into());
        }
        let (max_program_bits, budget, count) = wire::decode_table_header(&header.payload)?;
        if rows.len() != count {
            return Err(format!("header announces {count} rows, got {}", rows.len()));
        }
        let rows = rows
            .iter()
            .enumerate()
            .map(|(i, m)| wire::decode_row(&m.payload).map_err(|e| format!("row {i}: {e}")))
            .collect::<Result<_, _>>()?;
        Ok(ProverTable {
            max_program_bits,
            budget,
            rows,
        })
    }

    /// Checks ordering and that every row is plausible under the header.
    pub fn check_structure(&self) -> Result<(), String> {
        for (i, row) in self.rows.iter().enumerate() {
            if i > 0 && self.rows[i - 1].program >= row.program {
                return Err(format!("row {i} is out of canonical order"));
            }
            if row.program.len() > self.max_program_bits || row.program.len() % OPCODE_BITS != 0 {
                return Err(format!("row {i} has an impossible program length"));
            }
            // HALT itself takes a step, so at most steps - 1 output bits.
            if row.steps == 0 || row.steps > self.budget || row.output.len() as u64 >= row.steps {
                return Err(format!("row {i} has an impossible step count"));
            }
        }
        Ok(())
    }

    fn find(&self, program: &Program) -> Option<&TableRow> {
        self.rows
            .binary_search_by(|r| r.program.cmp(program))
            .ok()
            .map(|i| &self.rows[i])
    }
}

/// A prover's answer: the encoded table and what it cost to produce.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProverProof {
    pub messages: Vec<Message>,
    pub prover_steps: u64,
}

impl ProverProof {
    pub fn from_table(table: &ProverTable, prover_steps: u64) -> Self {
        ProverProof {
            messages: table.to_messages(),
            prover_steps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifierMode {
    /// Re-derive the ground truth by enumerating every program.
    Full,
    /// Replay `k` rows sampled with a seeded PRNG.
    Spot { k: usize, seed: u64 },
}

/// All valid programs of at most `max_bits` bits halting within `budget`
/// steps, ordered by program, and the machine steps spent finding them.
fn enumerate(
    max_bits: usize,
    budget: u64,
    options: &BuildOptions,
) -> Result<(Vec<Halt>, u64), CensusError> {
    if max_bits < OPCODE_BITS || budget == 0 {
        return Ok((Vec::new(), 0));
    }
    let params = CensusParams::uncapped(max_bits, budget)?;
    let (census, stats) = build_census_with(&params, options)?;
    Ok((census.halts(), stats.steps))
}

/// Builds the honest table for `max_bits` and `budget`.
pub fn honest_table(
    max_bits: usize,
    budget: u64,
    options: &BuildOptions,
) -> Result<(ProverTable, u64), VerifyError> {
    let (halts, steps) = enumerate(max_bits, budget, options)?;
    let rows = halts
        .into_iter()
        .map(|h| TableRow {
            program: h.program,
            output: h.output,
            steps: h.steps,
        })
        .collect();
    Ok((
        ProverTable {
            max_program_bits: max_bits,
            budget,
            rows,
        },
        steps,
    ))
}

fn budget_limits(t: u64) -> Result<MachineLimits, VerifyError> {
    MachineLimits::uncapped(t).map_err(|e| VerifyError::InvalidArgument(e.to_string()))
}

/// Replays `p` expecting output `x` within `t` steps. Returns the steps `p`
/// took, and charges the replay to the verifier.
fn replay_claimed(
    p: &Program,
    x: &BitString,
    t: u64,
    builder: &mut TranscriptBuilder,
) -> Result<u64, RejectReason> {
    let limits = MachineLimits::uncapped(t).map_err(|_| RejectReason::Timeout { steps: 0 })?;
    let (outcome, spent) = run_counted(p, &limits);
    builder.verifier_steps += spent;
    match outcome {
        ExecutionOutcome::Halted { ref output, steps, .. } if outcome.is_valid_halt_for(p) => {
            if output == x {
                Ok(steps)
            } else {
                Err(RejectReason::OutputMismatch {
                    expected: x.clone(),
                    actual: output.clone(),
                })
            }
        }
        ExecutionOutcome::Halted { .. } => Err(RejectReason::InvalidProgram {
            outcome: "trailing_bits",
        }),
        ExecutionOutcome::Timeout { steps } => Err(RejectReason::Timeout { steps }),
        other => Err(RejectReason::InvalidProgram {
            outcome: other.kind(),
        }),
    }
}

/// Replays a table row at the table's budget; `None` if it matches.
fn replay_row(row: &TableRow, budget: u64, builder: &mut TranscriptBuilder) -> Option<ExecutionOutcome> {
    let limits = MachineLimits::uncapped(budget).ok()?;
    let (outcome, spent) = run_counted(&row.program, &limits);
    builder.verifier_steps += spent;
    let expected = ExecutionOutcome::Halted {
        output: row.output.clone(),
        steps: row.steps,
        consumed_bits: row.program.len(),
    };
    (outcome != expected).then_some(outcome)
}

/// The fastest row printing `x` with at most `max_len` bits and fewer than
/// `below` steps, ties to the smallest program.
fn fastest_counterexample<'a>(
    rows: impl Iterator<Item = (&'a Program, &'a BitString, u64)>,
    x: &BitString,
    max_len: usize,
    below: u64,
) -> Option<RejectReason> {
    rows.filter(|(p, out, steps)| *out == x && p.len() <= max_len && *steps < below)
        .min_by(|a, b| a.2.cmp(&b.2).then_with(|| a.0.cmp(b.0)))
        .map(|(p, out, steps)| RejectReason::Counterexample {
            program: p.clone(),
            output: out.clone(),
            steps,
        })
}

pub fn verify_output_claim(claim: &OutputClaim) -> Transcript {
    let mut builder = TranscriptBuilder::new(Claim::Output(claim.clone()));
    let verdict = match replay_claimed(&claim.p, &claim.x, claim.t, &mut builder) {
        Ok(_) => Verdict::Accept,
        Err(reason) => Verdict::Reject(reason),
    };
    builder.finish(verdict)
}

/// The honest prover: every valid program of at most `|p|` bits halting
/// within `t` steps, in canonical order.
pub fn prove_minimality(
    claim: &MinimalityClaim,
    options: &BuildOptions,
) -> Result<ProverProof, VerifyError> {
    if claim.t == 0 {
        return Err(VerifyError::InvalidArgument("claim budget must be positive".into()));
    }
    let (table, steps) = honest_table(claim.p.len(), claim.t, options)?;
    Ok(ProverProof::from_table(&table, steps))
}

pub fn verify_minimality(
    claim: &MinimalityClaim,
    proof: &ProverProof,
    mode: VerifierMode,
    options: &BuildOptions,
) -> Result<Transcript, VerifyError> {
    let mut builder = TranscriptBuilder::new(Claim::Minimality(claim.clone()));
    builder.messages.extend(proof.messages.iter().cloned());
    builder.prover_steps = proof.prover_steps;
    let verdict = match mode {
        VerifierMode::Full => minimality_full(claim, &mut builder, options)?,
        VerifierMode::Spot { k, seed } => minimality_spot(claim, proof, k, seed, &mut builder),
    };
    Ok(builder.finish(verdict))
}

/// The proof is recorded in the transcript but never read, so the verdict
/// cannot depend on what the prover sent.
fn minimality_full(
    claim: &MinimalityClaim,
    builder: &mut TranscriptBuilder,
    options: &BuildOptions,
) -> Result<Verdict, VerifyError> {
    budget_limits(claim.t)?;
    let p_steps = match replay_claimed(&claim.p, &claim.x, claim.t, builder) {
        Ok(steps) => steps,
        Err(reason) => return Ok(Verdict::Reject(reason)),
    };
    let (halts, spent) = enumerate(claim.p.len(), claim.t, options)?;
    builder.verifier_steps += spent;
    let rows = halts.iter().map(|h| (&h.program, &h.output, h.steps));
    Ok(match fastest_counterexample(rows, &claim.x, claim.p.len(), p_steps) {
        Some(reason) => Verdict::Reject(reason),
        None => Verdict::Accept,
    })
}

fn minimality_spot(
    claim: &MinimalityClaim,
    proof: &ProverProof,
    k: usize,
    seed: u64,
    builder: &mut TranscriptBuilder,
) -> Verdict {
    let table = match ProverTable::from_messages(&proof.messages)
        .and_then(|t| t.check_structure().map(|_| t))
    {
        Ok(table) => table,
        Err(detail) => return Verdict::Reject(RejectReason::Malformed { detail }),
    };
    if table.max_program_bits < claim.p.len() || table.budget < claim.t {
        return Verdict::Reject(RejectReason::InsufficientProof {
            detail: format!(
                "table covers {} bits and {} steps, claim needs {} and {}",
                table.max_program_bits,
                table.budget,
                claim.p.len(),
                claim.t
            ),
        });
    }
    let p_steps = match replay_claimed(&claim.p, &claim.x, claim.t, builder) {
        Ok(steps) => steps,
        Err(reason) => return Verdict::Reject(reason),
    };
    match table.find(&claim.p) {
        Some(row) if row.output == claim.x && row.steps == p_steps => {}
        _ => return Verdict::Reject(RejectReason::MissingClaimedRow),
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amount = k.min(table.rows.len());
    let mut sample = rand::seq::index::sample(&mut rng, table.rows.len(), amount).into_vec();
    sample.sort_unstable();
    builder.messages.push(Message {
        sender: Party::Verifier,
        payload: wire::encode_sample(&sample),
    });
    for &i in &sample {
        let row = &table.rows[i];
        if let Some(actual) = replay_row(row, table.budget, builder) {
            return Verdict::Reject(RejectReason::ReplayMismatch {
                row: i,
                program: row.program.clone(),
                actual,
            });
        }
    }

    let rows = table.rows.iter().map(|r| (&r.program, &r.output, r.steps));
    match fastest_counterexample(rows, &claim.x, claim.p.len(), p_steps) {
        Some(reason) => Verdict::Reject(reason),
        None => Verdict::Accept,
    }
}

/// The honest prover for a depth claim: the table at `k_hat + s` bits and
/// `t` steps.
pub fn prove_depth(claim: &DepthClaim, options: &BuildOptions) -> Result<ProverProof, VerifyError> {
    if claim.t == 0 {
        return Err(VerifyError::InvalidArgument("claim budget must be positive".into()));
    }
    let (table, steps) = honest_table(claim.k_hat + claim.s, claim.t, options)?;
    Ok(ProverProof::from_table(&table, steps))
}

/// Accepts iff no program of at most `k_hat + s` bits prints `x` in fewer
/// than `t` steps. Every covered row is replayed, and the verifier
/// re-enumerates the covered range to catch omitted rows.
pub fn verify_depth_claim(
    claim: &DepthClaim,
    proof: &ProverProof,
    options: &BuildOptions,
) -> Result<Transcript, VerifyError> {
    let mut builder = TranscriptBuilder::new(Claim::Depth(claim.clone()));
    builder.messages.extend(proof.messages.iter().cloned());
    builder.prover_steps = proof.prover_steps;
    let verdict = depth_verdict(claim, proof, &mut builder, options)?;
    Ok(builder.finish(verdict))
}

fn depth_verdict(
    claim: &DepthClaim,
    proof: &ProverProof,
    builder: &mut TranscriptBuilder,
    options: &BuildOptions,
) -> Result<Verdict, VerifyError> {
    let table = match ProverTable::from_messages(&proof.messages)
        .and_then(|t| t.check_structure().map(|_| t))
    {
        Ok(table) => table,
        Err(detail) => return Ok(Verdict::Reject(RejectReason::Malformed { detail })),
    };
    let max_len = claim.k_hat + claim.s;
    // Seeing every program faster than t needs a budget of t - 1.
    let needed_budget = claim.t.saturating_sub(1);
    if table.max_program_bits < max_len || table.budget < needed_budget {
        return Ok(Verdict::Reject(RejectReason::InsufficientProof {
            detail: format!(
                "table covers {} bits and {} steps, claim needs {} and {}",
                table.max_program_bits, table.budget, max_len, needed_budget
            ),
        }));
    }

    for (i, row) in table.rows.iter().enumerate() {
        if row.program.len() > max_len {
            continue;
        }
        if let Some(actual) = replay_row(row, table.budget, builder) {
            return Ok(Verdict::Reject(RejectReason::ReplayMismatch {
                row: i,
                program: row.program.clone(),
                actual,
            }));
        }
    }
    let rows = table.rows.iter().map(|r| (&r.program, &r.output, r.steps));
    if let Some(reason) = fastest_counterexample(rows, &claim.x, max_len, claim.t) {
        return Ok(Verdict::Reject(reason));
    }

    let (halts, spent) = enumerate(max_len, needed_budget, options)?;
    builder.verifier_steps += spent;
    let found = halts.iter().map(|h| (&h.program, &h.output, h.steps));
    if let Some(reason) = fastest_counterexample(found, &claim.x, max_len, claim.t) {
        return Ok(Verdict::Reject(reason));
    }
    if let Some(h) = halts.iter().find(|h| table.find(&h.program).is_none()) {
        return Ok(Verdict::Reject(RejectReason::OmittedRow {
            program: h.program.clone(),
        }));
    }
    Ok(Verdict::Accept)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Refutation {
    /// A program printing `x` in fewer than the threshold's steps.
    Found { program: Program, steps: u64 },
    /// Nothing found within the bounds; this is not a proof of depth.
    NoRefutationFound,
}

/// Searches the census at `(L, min(t, threshold - 1))` for a program
/// printing `x`, returning the first in canonical order.
pub fn refute_shallow(
    x: &BitString,
    depth_threshold: u64,
    max_program_bits: usize,
    max_steps: u64,
    options: &BuildOptions,
) -> Result<Refutation, VerifyError> {
    if depth_threshold == 0 || max_steps == 0 || max_program_bits < OPCODE_BITS {
        return Err(VerifyError::InvalidArgument(
            "threshold, step budget and program bound must be positive".into(),
        ));
    }
    let budget = max_steps.min(depth_threshold - 1);
    if budget == 0 {
        return Ok(Refutation::NoRefutationFound);
    }
    let params = CensusParams::with_output_cap(max_program_bits, budget, max_program_bits.max(x.len()).max(1))?;
    let (census, _) = build_census_with(&params, options)?;
    Ok(match census.lookup(x).first() {
        Some(e) => Refutation::Found {
            program: e.program.clone(),
            steps: e.steps,
        },
        None => Refutation::NoRefutationFound,
    })
}
