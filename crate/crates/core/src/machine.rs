//! UM-1: the fixed prefix-free reference machine.
//!
//! A program is read three bits at a time, on demand, as the instruction
//! pointer moves past the opcodes consumed so far. The machine has two
//! counters `A` and `B` and an append-only output tape.
//!
//! | bits | opcode | effect |
//! |------|--------|--------|
//! | 000  | HALT   | stop; the program is valid iff every bit was consumed |
//! | 001  | OUT0   | append 0 to the output |
//! | 010  | OUT1   | append 1 to the output |
//! | 011  | INCA   | `A += 1` |
//! | 100  | DECA   | `A = max(A - 1, 0)` |
//! | 101  | SWAP   | swap `A` and `B` |
//! | 110  | LBEG   | if `A = 0`, scan forward past the matching LEND |
//! | 111  | LEND   | if `A != 0`, jump back to the matching LBEG |
//!
//! Every executed or scanned opcode costs one step. A jump from LEND lands on
//! the matching LBEG, which then executes again.
//!
//! Counters are conceptually unbounded. Each step changes a counter by at
//! most one, so under any `u64` step budget a `u64` counter cannot overflow.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::{BitString, BitsError};

/// Version tag written into every artifact derived from machine runs.
pub const MACHINE_VERSION: &str = "UM-1";

/// Bits per opcode.
pub const OPCODE_BITS: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MachineError {
    #[error("invalid program text: {0}")]
    Parse(#[from] BitsError),
    #[error("machine limits must be strictly positive (max_steps={max_steps}, max_output_bits={max_output_bits})")]
    InvalidLimits { max_steps: u64, max_output_bits: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Opcode {
    Halt,
    Out0,
    Out1,
    IncA,
    DecA,
    Swap,
    LoopBegin,
    LoopEnd,
}

impl Opcode {
    pub const ALL: [Opcode; 8] = [
        Opcode::Halt,
        Opcode::Out0,
        Opcode::Out1,
        Opcode::IncA,
        Opcode::DecA,
        Opcode::Swap,
        Opcode::LoopBegin,
        Opcode::LoopEnd,
    ];

    pub fn from_code(code: u8) -> Opcode {
        Opcode::ALL[(code & 0b111) as usize]
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn mnemonic(self) -> &'static str {
        match self {
            Opcode::Halt => "HALT",
            Opcode::Out0 => "OUT0",
            Opcode::Out1 => "OUT1",
            Opcode::IncA => "INCA",
            Opcode::DecA => "DECA",
            Opcode::Swap => "SWAP",
            Opcode::LoopBegin => "LBEG",
            Opcode::LoopEnd => "LEND",
        }
    }
}

/// A candidate program for UM-1. Any bit sequence is a `Program`; only
/// those on which [`run`] halts after consuming every bit are *valid*.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Program(BitString);

impl Program {
    pub fn new(bits: BitString) -> Self {
        Program(bits)
    }

    pub fn parse(text: &str) -> Result<Self, MachineError> {
        Ok(Program(BitString::parse(text)?))
    }

    pub fn from_opcodes(ops: &[Opcode]) -> Self {
        let mut bits = BitString::new();
        for op in ops {
            let c = op.code();
            bits.push(c & 0b100 != 0);
            bits.push(c & 0b010 != 0);
            bits.push(c & 0b001 != 0);
        }
        Program(bits)
    }

    pub fn bits(&self) -> &BitString {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The opcode occupying bits `3*index .. 3*index+3`, if fully present.
    fn opcode_at(&self, index: usize) -> Option<Opcode> {
        let bits = self.0.as_slice();
        let start = index * OPCODE_BITS;
        let chunk = bits.get(start..start + OPCODE_BITS)?;
        let code = chunk.iter().fold(0u8, |acc, &b| (acc << 1) | b as u8);
        Some(Opcode::from_code(code))
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Debug for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Program(\"{}\")", self.0)
    }
}

impl FromStr for Program {
    type Err = MachineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Program::parse(s)
    }
}

/// Parses ASCII '0'/'1' program text; whitespace is stripped.
pub fn parse_program(text: &str) -> Result<Program, MachineError> {
    Program::parse(text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MachineLimits {
    max_steps: u64,
    max_output_bits: usize,
}

impl MachineLimits {
    pub fn new(max_steps: u64, max_output_bits: usize) -> Result<Self, MachineError> {
        if max_steps == 0 || max_output_bits == 0 {
            return Err(MachineError::InvalidLimits {
                max_steps,
                max_output_bits,
            });
        }
        Ok(MachineLimits {
            max_steps,
            max_output_bits,
        })
    }

    /// A step budget with an output cap large enough that no run within
    /// `max_steps` can overflow it.
    pub fn uncapped(max_steps: u64) -> Result<Self, MachineError> {
        let cap = usize::try_from(max_steps).unwrap_or(usize::MAX);
        MachineLimits::new(max_steps, cap)
    }

    pub fn max_steps(&self) -> u64 {
        self.max_steps
    }

    pub fn max_output_bits(&self) -> usize {
        self.max_output_bits
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecutionOutcome {
    Halted {
        output: BitString,
        steps: u64,
        consumed_bits: usize,
    },
    Timeout {
        steps: u64,
    },
    InputUnderflow,
    OutputOverflow,
    UnmatchedBracket,
}

impl ExecutionOutcome {
    /// True when this outcome makes `program` a valid halting program.
    pub fn is_valid_halt_for(&self, program: &Program) -> bool {
        matches!(self, ExecutionOutcome::Halted { consumed_bits, .. } if *consumed_bits == program.len())
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ExecutionOutcome::Halted { .. } => "halted",
            ExecutionOutcome::Timeout { .. } => "timeout",
            ExecutionOutcome::InputUnderflow => "input_underflow",
            ExecutionOutcome::OutputOverflow => "output_overflow",
            ExecutionOutcome::UnmatchedBracket => "unmatched_bracket",
        }
    }
}

/// What a suspended machine is waiting for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Poll {
    /// The instruction pointer has moved past every consumed opcode.
    NeedOpcode,
    Finished(ExecutionOutcome),
}

/// Resumable UM-1 state.
///
/// [`run`] drives one of these against a fixed program. The census
/// enumerator instead clones it at every [`Poll::NeedOpcode`] and feeds each
/// of the eight possible opcodes to a separate copy, so that programs
/// sharing a prefix share the work of executing it.
#[derive(Debug, Clone)]
pub struct MachineState {
    code: Vec<Opcode>,
    /// Partner index for each matched bracket, `usize::MAX` while open.
    partner: Vec<usize>,
    open_brackets: Vec<usize>,
    ip: usize,
    a: u64,
    b: u64,
    output: BitString,
    steps: u64,
    /// Nesting depth while skipping a loop body, `None` when executing.
    scan_depth: Option<usize>,
}

impl Default for MachineState {
    fn default() -> Self {
        MachineState::new()
    }
}

impl MachineState {
    pub fn new() -> Self {
        MachineState {
            code: Vec::new(),
            partner: Vec::new(),
            open_brackets: Vec::new(),
            ip: 0,
            a: 0,
            b: 0,
            output: BitString::new(),
            steps: 0,
            scan_depth: None,
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn consumed_bits(&self) -> usize {
        self.code.len() * OPCODE_BITS
    }

    pub fn code(&self) -> &[Opcode] {
        &self.code
    }

    /// The bits consumed so far, as a program.
    pub fn consumed_program(&self) -> Program {
        Program::from_opcodes(&self.code)
    }

    /// Appends a freshly read opcode to the code tape.
    ///
    /// An LEND with no open LBEG before it can never be matched, so it fails
    /// here with [`ExecutionOutcome::UnmatchedBracket`].
    pub fn feed(&mut self, op: Opcode) -> Result<(), ExecutionOutcome> {
        let index = self.code.len();
        self.code.push(op);
        self.partner.push(usize::MAX);
        match op {
            Opcode::LoopBegin => self.open_brackets.push(index),
            Opcode::LoopEnd => match self.open_brackets.pop() {
                Some(open) => {
                    self.partner[open] = index;
                    self.partner[index] = open;
                }
                None => return Err(ExecutionOutcome::UnmatchedBracket),
            },
            _ => {}
        }
        Ok(())
    }

    /// Executes until the machine stops or needs another opcode.
    pub fn advance(&mut self, limits: &MachineLimits) -> Poll {
        loop {
            if self.steps >= limits.max_steps {
                return Poll::Finished(ExecutionOutcome::Timeout { steps: self.steps });
            }
            let Some(&op) = self.code.get(self.ip) else {
                return Poll::NeedOpcode;
            };
            self.steps += 1;

            if let Some(depth) = self.scan_depth {
                self.scan_depth = match op {
                    Opcode::LoopBegin => Some(depth + 1),
                    Opcode::LoopEnd if depth == 0 => None,
                    Opcode::LoopEnd => Some(depth - 1),
                    _ => Some(depth),
                };
                self.ip += 1;
                continue;
            }

            match op {
                Opcode::Halt => {
                    return Poll::Finished(ExecutionOutcome::Halted {
                        output: std::mem::take(&mut self.output),
                        steps: self.steps,
                        consumed_bits: self.consumed_bits(),
                    });
                }
                Opcode::Out0 | Opcode::Out1 => {
                    if self.output.len() >= limits.max_output_bits {
                        return Poll::Finished(ExecutionOutcome::OutputOverflow);
                    }
                    self.output.push(op == Opcode::Out1);
                }
                Opcode::IncA => self.a += 1,
                Opcode::DecA => self.a = self.a.saturating_sub(1),
                Opcode::Swap => std::mem::swap(&mut self.a, &mut self.b),
                Opcode::LoopBegin => {
                    if self.a == 0 {
                        self.scan_depth = Some(0);
                    }
                }
                Opcode::LoopEnd => {
                    if self.a != 0 {
                        // feed() guarantees every consumed LEND is matched.
                        self.ip = self.partner[self.ip];
                        continue;
                    }
                }
            }
            self.ip += 1;
        }
    }
}

/// Runs `program` on UM-1 under `limits`.
pub fn run(program: &Program, limits: &MachineLimits) -> ExecutionOutcome {
    run_counted(program, limits).0
}

/// Like [`run`], also returning the steps spent, whatever the outcome.
pub fn run_counted(program: &Program, limits: &MachineLimits) -> (ExecutionOutcome, u64) {
    let mut state = MachineState::new();
    loop {
        match state.advance(limits) {
            Poll::Finished(outcome) => return (outcome, state.steps),
            Poll::NeedOpcode => {
                let Some(op) = program.opcode_at(state.code.len()) else {
                    return (ExecutionOutcome::InputUnderflow, state.steps);
                };
                if let Err(outcome) = state.feed(op) {
                    return (outcome, state.steps);
                }
            }
        }
    }
}
