mod common;

use proptest::prelude::*;

use common::{oracle_run, Outcome};
use depthlab::analysis::{depth, k_t, q_t};
use depthlab::census::{build_census_with, BuildOptions};
use depthlab::verify::{
    prove_minimality, verify_minimality, Message, MinimalityClaim, Party, ProverProof, ProverTable,
    VerifierMode,
};
use depthlab::{run, BitString, CensusParams, ExecutionOutcome, HaltingCensus, MachineLimits, Program, Rational};

fn bit_vec(max: usize) -> impl Strategy<Value = Vec<bool>> {
    proptest::collection::vec(any::<bool>(), 0..=max)
}

fn census_with(l: usize, t: u64, workers: usize) -> HaltingCensus {
    let params = CensusParams::new(l, t).unwrap();
    build_census_with(&params, &BuildOptions { workers, ..Default::default() }).unwrap().0
}

fn same_outcome(lib: &ExecutionOutcome, oracle: &Outcome) -> bool {
    match (lib, oracle) {
        (ExecutionOutcome::Halted { output, steps, consumed_bits }, Outcome::Halted { output: o, steps: s, consumed }) => {
            output.to_string() == *o && steps == s && consumed_bits == consumed
        }
        (ExecutionOutcome::Timeout { steps }, Outcome::Timeout(s)) => steps == s,
        (ExecutionOutcome::InputUnderflow, Outcome::Underflow)
        | (ExecutionOutcome::OutputOverflow, Outcome::Overflow)
        | (ExecutionOutcome::UnmatchedBracket, Outcome::Unmatched) => true,
        _ => false,
    }
}

proptest! {
    #[test]
    fn machine_agrees_with_reference(
        ops in proptest::collection::vec(1u8..8, 0..24),
        halt_at in proptest::option::of(0usize..24),
        tail in bit_vec(2),
        t in 1u64..300,
        cap in 1usize..12,
    ) {
        let mut ops = ops;
        if let Some(i) = halt_at {
            ops.insert(i.min(ops.len()), 0);
        }
        let mut bits: Vec<bool> = ops.iter().flat_map(|op| (0..3).rev().map(move |i| (op >> i) & 1 == 1)).collect();
        bits.extend(tail);
        let p = Program::new(BitString::from_bits(bits));
        let got = run(&p, &MachineLimits::new(t, cap).unwrap());
        let expected = oracle_run(&p.bits().to_string(), t, cap);
        prop_assert!(same_outcome(&got, &expected), "{p}: {got:?} vs {expected:?}");
    }

    #[test]
    fn halting_is_stable_under_larger_budgets(bits in bit_vec(30), extra in 0u64..100) {
        let p = Program::new(BitString::from_bits(bits));
        let first = run(&p, &MachineLimits::uncapped(200).unwrap());
        prop_assert_eq!(&first, &run(&p, &MachineLimits::uncapped(200).unwrap()));
        if let ExecutionOutcome::Halted { steps, .. } = first {
            let later = run(&p, &MachineLimits::uncapped(steps + extra).unwrap());
            prop_assert_eq!(later, first);
        }
    }

    #[test]
    fn census_ignores_worker_count(l in 3usize..=12, t in 1u64..60, workers in 2usize..6) {
        let one = census_with(l, t, 1);
        let many = census_with(l, t, workers);
        prop_assert_eq!(one.canonical_body(), many.canonical_body());
        prop_assert_eq!(one.checksum(), many.checksum());
    }

    #[test]
    fn kraft_grows_with_both_bounds(l in 3usize..=10, t in 1u64..40, dl in 0usize..4, dt in 0u64..40) {
        let base = census_with(l, t, 1);
        prop_assert!(*base.kraft() <= Rational::one());
        prop_assert!(base.kraft() <= census_with(l + dl, t, 1).kraft());
        prop_assert!(base.kraft() <= census_with(l, t + dt, 1).kraft());
    }

    #[test]
    fn census_entries_replay(l in 3usize..=12, t in 1u64..80) {
        let c = census_with(l, t, 1);
        for h in c.halts() {
            let expected = ExecutionOutcome::Halted {
                output: h.output.clone(),
                steps: h.steps,
                consumed_bits: h.program.len(),
            };
            prop_assert_eq!(run(&h.program, c.params().limits()), expected);
        }
    }

    #[test]
    fn probability_and_depth_bounds(l in 3usize..=12, t in 1u64..80) {
        let c = census_with(l, t, 1);
        for x in c.outputs() {
            let k = k_t(&c, x).unwrap();
            // Coding-theorem direction: the shortest program alone carries 2^-k.
            prop_assert!(q_t(&c, x) >= Rational::pow2_neg(k));
            let d: Vec<u64> = (0..4).map(|s| depth(&c, x, s).depth_hat.lower()).collect();
            prop_assert!(d.windows(2).all(|w| w[0] >= w[1]), "{x}: {d:?}");
        }
    }

    #[test]
    fn verbatim_programs_bound_complexity(x in bit_vec(3), slack in 0usize..3, extra_t in 0u64..20) {
        let x = BitString::from_bits(x);
        let verbatim = 3 * (x.len() + 1);
        let c = census_with(verbatim + slack, x.len() as u64 + 1 + extra_t, 1);
        prop_assert!(k_t(&c, &x).is_some_and(|k| k <= verbatim));
    }
}

/// A claim about a census program, and the honest proof for it.
fn claim_and_proof(index: usize, t: u64) -> (MinimalityClaim, ProverProof) {
    let halts = census_with(9, 30, 1).halts();
    let h = &halts[index % halts.len()];
    let claim = MinimalityClaim { p: h.program.clone(), x: h.output.clone(), t };
    let proof = prove_minimality(&claim, &BuildOptions::default()).unwrap();
    (claim, proof)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn full_mode_ignores_prover_messages(
        index in 0usize..1000,
        t in 1u64..30,
        junk in proptest::collection::vec(proptest::collection::vec(any::<u8>(), 0..12), 0..5),
    ) {
        let opts = BuildOptions::default();
        let (claim, honest) = claim_and_proof(index, t);
        let reference = verify_minimality(&claim, &honest, VerifierMode::Full, &opts).unwrap();
        let messages = junk.into_iter().map(|payload| Message { sender: Party::Prover, payload }).collect();
        let forged = ProverProof { messages, prover_steps: 0 };
        let got = verify_minimality(&claim, &forged, VerifierMode::Full, &opts).unwrap();
        prop_assert_eq!(got.verdict, reference.verdict);
    }

    #[test]
    fn exhaustive_spot_equals_full_table_replay(
        index in 0usize..1000,
        row in 0usize..1000,
        new_steps in proptest::option::of(1u64..31),
        drop_row in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let opts = BuildOptions::default();
        let (claim, honest) = claim_and_proof(index, 30);
        let mut table = ProverTable::from_messages(&honest.messages).unwrap();
        let r = row % table.rows.len();
        if drop_row {
            table.rows.remove(r);
        } else if let Some(s) = new_steps {
            table.rows[r].steps = s;
        }
        let proof = ProverProof::from_table(&table, 0);
        let spot = verify_minimality(&claim, &proof, VerifierMode::Spot { k: table.rows.len(), seed }, &opts).unwrap();

        // Row-wise reference: structure, the claimed row, every row replaying,
        // and no faster program for x inside the table.
        let limits = MachineLimits::uncapped(table.budget).unwrap();
        let p_run = run(&claim.p, &MachineLimits::uncapped(claim.t).unwrap());
        let p_steps = match p_run {
            ExecutionOutcome::Halted { ref output, steps, consumed_bits } if *output == claim.x && consumed_bits == claim.p.len() => Some(steps),
            _ => None,
        };
        let replays = table.rows.iter().all(|row| {
            run(&row.program, &limits) == ExecutionOutcome::Halted {
                output: row.output.clone(),
                steps: row.steps,
                consumed_bits: row.program.len(),
            }
        });
        let expected = table.check_structure().is_ok()
            && replays
            && p_steps.is_some_and(|ps| {
                table.rows.iter().any(|row| row.program == claim.p && row.steps == ps && row.output == claim.x)
                    && !table.rows.iter().any(|row| row.output == claim.x && row.program.len() <= claim.p.len() && row.steps < ps)
            });
        prop_assert_eq!(spot.verdict.is_accept(), expected, "{:?}", spot.verdict);
    }

    #[test]
    fn transcripts_are_reproducible(index in 0usize..1000, k in 1usize..10, seed in any::<u64>()) {
        let opts = BuildOptions::default();
        let (claim, proof) = claim_and_proof(index, 30);
        let mode = VerifierMode::Spot { k, seed };
        let a = verify_minimality(&claim, &proof, mode, &opts).unwrap();
        let b = verify_minimality(&claim, &proof, mode, &opts).unwrap();
        prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let bits: u64 = a.messages.iter().map(Message::bits).sum();
        prop_assert_eq!(a.total_payload_bits, bits);
    }
}
