//! Scripted prover/verifier runs loaded from JSON.
//!
//! ```json
//! {"claim": {"kind": "minimality", "p": "010000", "x": "1", "t": 10},
//!  "prover": {"cheat-falsify": {"row": 2, "fake": {"steps": 3}}},
//!  "verifier_mode": {"spot": {"k": 4}},
//!  "seed": 17}
//! ```

use serde::{Deserialize, Serialize};

use super::{
    prove_depth, prove_minimality, verify_depth_claim, verify_minimality, verify_output_claim,
    Claim, ProverProof, ProverTable, Transcript, VerifierMode, VerifyError,
};
use crate::bits::BitString;
use crate::census::BuildOptions;

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProverStrategy {
    #[default]
    Honest,
    /// Drop one row from the honest table.
    CheatOmit { row: usize },
    /// Replace fields of one row of the honest table.
    CheatFalsify { row: usize, fake: FakeRow },
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FakeRow {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<BitString>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeSpec {
    #[default]
    Full,
    Spot { k: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub claim: Claim,
    #[serde(default)]
    pub prover: ProverStrategy,
    #[serde(default)]
    pub verifier_mode: ModeSpec,
    #[serde(default)]
    pub seed: u64,
}

impl Scenario {
    pub fn mode(&self) -> VerifierMode {
        match self.verifier_mode {
            ModeSpec::Full => VerifierMode::Full,
            ModeSpec::Spot { k } => VerifierMode::Spot { k, seed: self.seed },
        }
    }
}

fn apply_strategy(proof: ProverProof, strategy: &ProverStrategy) -> Result<ProverProof, VerifyError> {
    let mut table = match strategy {
        ProverStrategy::Honest => return Ok(proof),
        _ => ProverTable::from_messages(&proof.messages).map_err(VerifyError::Scenario)?,
    };
    let out_of_range =
        |row: usize, n: usize| VerifyError::Scenario(format!("row {row} is outside a table of {n} rows"));
    match strategy {
        ProverStrategy::Honest => unreachable!(),
        ProverStrategy::CheatOmit { row } => {
            if *row >= table.rows.len() {
                return Err(out_of_range(*row, table.rows.len()));
            }
            table.rows.remove(*row);
        }
        ProverStrategy::CheatFalsify { row, fake } => {
            let n = table.rows.len();
            let target = table.rows.get_mut(*row).ok_or_else(|| out_of_range(*row, n))?;
            let original = target.clone();
            if let Some(output) = &fake.output {
                target.output = output.clone();
            }
            if let Some(steps) = fake.steps {
                target.steps = steps;
            }
            if *target == original {
                return Err(VerifyError::Scenario(format!("fake for row {row} changes nothing")));
            }
        }
    }
    Ok(ProverProof::from_table(&table, proof.prover_steps))
}

pub fn run_scenario(scenario: &Scenario, options: &BuildOptions) -> Result<Transcript, VerifyError> {
    match &scenario.claim {
        Claim::Output(claim) => {
            if scenario.prover != ProverStrategy::Honest {
                return Err(VerifyError::Scenario(
                    "output claims carry no table to tamper with".into(),
                ));
            }
            Ok(verify_output_claim(claim))
        }
        Claim::Minimality(claim) => {
            let proof = apply_strategy(prove_minimality(claim, options)?, &scenario.prover)?;
            verify_minimality(claim, &proof, scenario.mode(), options)
        }
        Claim::Depth(claim) => {
            let proof = apply_strategy(prove_depth(claim, options)?, &scenario.prover)?;
            verify_depth_claim(claim, &proof, options)
        }
    }
}
