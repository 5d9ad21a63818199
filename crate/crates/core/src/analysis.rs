//! Bounded complexity, probability and depth read off a halting census.
//!
//! Every value here is exact with respect to the census bounds `(L, t)` and
//! only a bound beyond them: a string absent from the census has `K^t > L`
//! and depth greater than `t` as far as programs of at most `L` bits can tell.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::bits::BitString;
use crate::census::{build_census_with, BuildOptions, CensusError, CensusParams, HaltingCensus};
use crate::machine::Program;
use crate::rational::Rational;

/// Version tag of the closed transform set used by [`slow_growth_audit`].
pub const TRANSFORM_SET_VERSION: &str = "depthlab-transforms/1";

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Census(#[from] CensusError),
    #[error("no-deep-string-at-these-bounds: every string of length {n} has fast probability at least the threshold (T={step_bound}, L={program_bound})")]
    NoDeepString {
        n: usize,
        step_bound: u64,
        program_bound: usize,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("census lookup and fresh enumeration disagree for {x}")]
    SpeedupMismatch { x: BitString },
}

/// Shortest program length for `x` in the census, or `None` when `x` is
/// absent (a lower bound `K^t(x) > L`, not a value).
pub fn k_t(census: &HaltingCensus, x: &BitString) -> Option<usize> {
    census.lookup(x).iter().map(|e| e.program.len()).min()
}

/// `Σ 2^-|p|` over census programs printing `x`.
pub fn q_t(census: &HaltingCensus, x: &BitString) -> Rational {
    crate::rational::kraft_sum(census.lookup(x).iter().map(|e| e.program.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DepthBound {
    Exact(u64),
    /// No qualifying program halted within this many steps.
    AtLeast(u64),
}

impl DepthBound {
    /// The value if exact, otherwise the lower bound.
    pub fn lower(&self) -> u64 {
        match *self {
            DepthBound::Exact(v) | DepthBound::AtLeast(v) => v,
        }
    }

    pub fn exact(&self) -> Option<u64> {
        match *self {
            DepthBound::Exact(v) => Some(v),
            DepthBound::AtLeast(_) => None,
        }
    }
}

impl fmt::Display for DepthBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DepthBound::Exact(v) => write!(f, "{v}"),
            DepthBound::AtLeast(v) => write!(f, ">={v}"),
        }
    }
}

impl Serialize for DepthBound {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            DepthBound::Exact(v) => serializer.serialize_u64(*v),
            DepthBound::AtLeast(_) => serializer.collect_str(self),
        }
    }
}

fn serialize_k_hat<S: Serializer>(k: &Option<usize>, serializer: S) -> Result<S::Ok, S::Error> {
    match k {
        Some(k) => serializer.serialize_u64(*k as u64),
        None => serializer.serialize_str("none-found"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Bounds {
    #[serde(rename = "L")]
    pub max_program_bits: usize,
    #[serde(rename = "t")]
    pub max_steps: u64,
}

impl Bounds {
    fn of(census: &HaltingCensus) -> Self {
        Bounds {
            max_program_bits: census.params().max_program_bits(),
            max_steps: census.params().max_steps(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DepthReport {
    pub x: BitString,
    #[serde(serialize_with = "serialize_k_hat")]
    pub k_hat: Option<usize>,
    pub q_hat: Rational,
    pub s: usize,
    pub depth_hat: DepthBound,
    /// Fastest program of length at most `k_hat + s`; the depth witness.
    pub witness: Option<Program>,
    /// Lexicographically first program of length `k_hat`.
    pub shortest: Option<Program>,
    pub bounds: Bounds,
}

/// Bounded logical depth at significance `s`.
pub fn depth(census: &HaltingCensus, x: &BitString, s: usize) -> DepthReport {
    let programs = census.lookup(x);
    let bounds = Bounds::of(census);
    let q_hat = q_t(census, x);
    // Programs are in shortlex order, so the first one is the shortest.
    let Some(shortest) = programs.first() else {
        return DepthReport {
            x: x.clone(),
            k_hat: None,
            q_hat,
            s,
            depth_hat: DepthBound::AtLeast(bounds.max_steps),
            witness: None,
            shortest: None,
            bounds,
        };
    };
    let k = shortest.program.len();
    let witness = programs
        .iter()
        .filter(|e| e.program.len() <= k + s)
        .min_by(|a, b| a.steps.cmp(&b.steps).then_with(|| a.program.cmp(&b.program)))
        .expect("the shortest program always qualifies");
    DepthReport {
        x: x.clone(),
        k_hat: Some(k),
        q_hat,
        s,
        depth_hat: DepthBound::Exact(witness.steps),
        witness: Some(witness.program.clone()),
        shortest: Some(shortest.program.clone()),
        bounds,
    }
}

/// How a step budget is chosen for a target string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BudgetPolicy {
    Absolute(u64),
    /// `t = c * |x|^k`, never less than one step.
    PerOutputLength { c: u64, k: u32 },
}

impl BudgetPolicy {
    pub fn steps_for(&self, output_len: usize) -> u64 {
        match *self {
            BudgetPolicy::Absolute(t) => t.max(1),
            BudgetPolicy::PerOutputLength { c, k } => (output_len as u64)
                .checked_pow(k)
                .and_then(|p| p.checked_mul(c))
                .unwrap_or(u64::MAX)
                .max(1),
        }
    }
}

impl FromStr for BudgetPolicy {
    type Err = AnalysisError;

    /// `absolute:T` or `per-output-length:C,K`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || AnalysisError::InvalidArgument(format!("unknown budget policy {s:?}"));
        let (kind, args) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "absolute" => Ok(BudgetPolicy::Absolute(args.parse().map_err(|_| bad())?)),
            "per-output-length" => {
                let (c, k) = args.split_once(',').ok_or_else(bad)?;
                Ok(BudgetPolicy::PerOutputLength {
                    c: c.trim().parse().map_err(|_| bad())?,
                    k: k.trim().parse().map_err(|_| bad())?,
                })
            }
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiagonalCertificate {
    pub x: BitString,
    pub n: usize,
    #[serde(rename = "T")]
    pub step_bound: u64,
    #[serde(rename = "L")]
    pub program_bound: usize,
    pub margin: usize,
    pub q_fast: Rational,
    pub threshold: Rational,
    /// Checksum of the census the certificate was read from.
    pub census_ref: String,
}

impl DiagonalCertificate {
    /// Re-checks the certificate against `census` without trusting `q_fast`.
    pub fn confirm(&self, census: &HaltingCensus) -> bool {
        census.checksum() == self.census_ref
            && self.q_fast < self.threshold
            && census
                .entries()
                .filter(|(output, _)| **output == self.x)
                .flat_map(|(_, programs)| programs)
                .all(|e| e.program.len() > self.n)
    }
}

/// Builds the census at `(L, T)` and returns the first string of length `n`
/// whose `T`-fast algorithmic probability is below `2^-(n+margin)`.
pub fn diagonal_create(
    n: usize,
    step_bound: u64,
    program_bound: usize,
    margin: usize,
    options: &BuildOptions,
) -> Result<DiagonalCertificate, AnalysisError> {
    // The cap must admit x itself or programs printing x would be dropped.
    let params = CensusParams::with_output_cap(program_bound, step_bound, program_bound.max(n))?;
    let (census, _) = build_census_with(&params, options)?;
    diagonal_from_census(&census, n, margin)
}

pub fn diagonal_from_census(
    census: &HaltingCensus,
    n: usize,
    margin: usize,
) -> Result<DiagonalCertificate, AnalysisError> {
    if n == 0 || n > 63 {
        return Err(AnalysisError::InvalidArgument(format!(
            "output length must be in 1..=63, got {n}"
        )));
    }
    if census.params().output_cap() < n {
        return Err(AnalysisError::InvalidArgument(format!(
            "census output cap {} is below the target length {n}",
            census.params().output_cap()
        )));
    }
    let threshold = Rational::pow2_neg(n + margin);
    for i in 0..(1u64 << n) {
        let x = BitString::from_u64(i, n);
        let q_fast = q_t(census, &x);
        if q_fast < threshold {
            return Ok(DiagonalCertificate {
                x,
                n,
                step_bound: census.params().max_steps(),
                program_bound: census.params().max_program_bits(),
                margin,
                q_fast,
                threshold,
                census_ref: census.checksum(),
            });
        }
    }
    Err(AnalysisError::NoDeepString {
        n,
        step_bound: census.params().max_steps(),
        program_bound: census.params().max_program_bits(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transform {
    Append0,
    Append1,
    Duplicate,
    Complement,
    Reverse,
}

impl Transform {
    pub const ALL: [Transform; 5] = [
        Transform::Append0,
        Transform::Append1,
        Transform::Duplicate,
        Transform::Complement,
        Transform::Reverse,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Transform::Append0 => "append0",
            Transform::Append1 => "append1",
            Transform::Duplicate => "duplicate",
            Transform::Complement => "complement",
            Transform::Reverse => "reverse",
        }
    }

    pub fn apply(self, x: &BitString) -> BitString {
        match self {
            Transform::Append0 | Transform::Append1 => {
                let mut y = x.clone();
                y.push(self == Transform::Append1);
                y
            }
            Transform::Duplicate => {
                let mut y = x.clone();
                y.extend_from(x);
                y
            }
            Transform::Complement => x.iter().map(|b| !b).collect(),
            Transform::Reverse => x.as_slice().iter().rev().copied().collect(),
        }
    }
}

impl FromStr for Transform {
    type Err = AnalysisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Transform::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| AnalysisError::InvalidArgument(format!("unknown transform {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuditRow {
    pub x: BitString,
    pub transform: Transform,
    pub depth_x: DepthBound,
    pub depth_fx: DepthBound,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuditReport {
    pub transform_set: &'static str,
    pub budget: u64,
    pub bounds: Bounds,
    pub rows: Vec<AuditRow>,
    pub flagged: usize,
}

/// Compares `depth_0(x)` with `depth_0(f(x))` for every census output `x`
/// and every transform `f`, flagging rows where depth grew by more than
/// `budget` steps. An `f(x)` missing from the census is compared through its
/// lower bound `t`. Flags are observations at census scale only.
pub fn slow_growth_audit(census: &HaltingCensus, transforms: &[Transform], budget: u64) -> AuditReport {
    let mut rows = Vec::new();
    for x in census.outputs() {
        debug_assert_eq!(
            Transform::Complement.apply(&Transform::Complement.apply(x)),
            *x
        );
        let depth_x = depth(census, x, 0).depth_hat;
        for &f in transforms {
            let depth_fx = depth(census, &f.apply(x), 0).depth_hat;
            let flagged = depth_fx.lower() > depth_x.lower().saturating_add(budget);
            rows.push(AuditRow {
                x: x.clone(),
                transform: f,
                depth_x,
                depth_fx,
                flagged,
            });
        }
    }
    let flagged = rows.iter().filter(|r| r.flagged).count();
    AuditReport {
        transform_set: TRANSFORM_SET_VERSION,
        budget,
        bounds: Bounds::of(census),
        rows,
        flagged,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LookupCost {
    pub programs_examined: usize,
    pub nanos: u128,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EnumerationCost {
    pub nodes: u64,
    pub machine_steps: u64,
    pub nanos: u128,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpeedupRecord {
    pub x: BitString,
    pub lookup_report: DepthReport,
    pub enumeration_report: DepthReport,
    pub lookup_cost: LookupCost,
    pub enumeration_cost: EnumerationCost,
}

/// Computes `depth_s(x)` from the stored census and again from a fresh
/// enumeration at the same bounds, and fails if the two disagree.
pub fn speedup_demo(
    x: &BitString,
    census: &HaltingCensus,
    s: usize,
    options: &BuildOptions,
) -> Result<SpeedupRecord, AnalysisError> {
    let started = Instant::now();
    let lookup_report = depth(census, x, s);
    let lookup_cost = LookupCost {
        programs_examined: census.lookup(x).len(),
        nanos: started.elapsed().as_nanos(),
    };

    let started = Instant::now();
    let (fresh, stats) = build_census_with(census.params(), options)?;
    let enumeration_report = depth(&fresh, x, s);
    let enumeration_cost = EnumerationCost {
        nodes: stats.nodes,
        machine_steps: stats.steps,
        nanos: started.elapsed().as_nanos(),
    };

    if lookup_report != enumeration_report {
        return Err(AnalysisError::SpeedupMismatch { x: x.clone() });
    }
    Ok(SpeedupRecord {
        x: x.clone(),
        lookup_report,
        enumeration_report,
        lookup_cost,
        enumeration_cost,
    })
}
