//! Cross-module invariants as property tests.

use proptest::prelude::*;
use qelection::adversary::forge::{forge_ballot_attack, Forger};
use qelection::aqkd_string::{
    bob_prepare, charlie_decode, hypothesis_consistent, setup_keys, voter_randomize, voter_unmask, StringParams,
};
use qelection::election::{run_election, ElectionConfig, FaultPlan, RejectReason};
use qelection::primitives::parity_collapse;
use qelection::qubit::encode_conjugate;
use qelection::rng::seeded;
use qelection::BitString;

fn small_election(voters: usize) -> ElectionConfig {
    ElectionConfig {
        voters,
        string: StringParams { l: 40, m: 4, check_bits: 4, ..Default::default() },
        ..Default::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn correct_basis_measurement_is_deterministic(
        pairs in prop::collection::vec((any::<bool>(), any::<bool>()), 1..64),
        seed in any::<u64>(),
    ) {
        let values: BitString = pairs.iter().map(|p| p.0).collect::<Vec<_>>().into();
        let bases: BitString = pairs.iter().map(|p| p.1).collect::<Vec<_>>().into();
        let mut reg = encode_conjugate(&values, &bases).unwrap();
        prop_assert_eq!(reg.measure(&bases, &mut seeded(seed)).unwrap().bits, values);
    }

    #[test]
    fn parity_chain_and_unlinkability(seed in any::<u64>(), lm in prop::sample::select(vec![(3usize, 2usize), (4, 2), (4, 3), (6, 2)])) {
        let (l, m) = lm;
        let mut rng = seeded(seed);
        let params = StringParams { l, m, check_bits: 1, ..Default::default() };
        let keys = setup_keys(&params, &mut rng).unwrap();
        let mut views = Vec::new();
        let mut outcomes = Vec::new();
        for _ in 0..3 {
            let (bob, mut reg) = bob_prepare(&keys, &mut rng).unwrap();
            voter_unmask(&mut reg, &bob).unwrap();
            let (voter, mut reg) = voter_randomize(reg, &keys.voter_keys(), l, m, &mut rng).unwrap();
            let dec = charlie_decode(&mut reg, &keys, &mut rng).unwrap();
            prop_assert!(dec.accepted);
            prop_assert_eq!(&dec.key, &voter.key);
            // measured block parities carry M xor T
            let parities = parity_collapse(&dec.raw, m).unwrap();
            prop_assert_eq!(&parities ^ &keys.derived.parity, voter.tag.clone());
            views.push(bob);
            outcomes.push(dec);
        }
        // every session is consistent with every voter's administrator records
        for dec in &outcomes {
            for bob in &views {
                prop_assert!(hypothesis_consistent(&dec.raw, bob, &dec.tag, m).unwrap());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn replayed_tags_are_never_counted_twice(
        seed in any::<u64>(),
        voters in 2usize..12,
        replay in prop::collection::vec(0usize..12, 0..8),
    ) {
        let replay: Vec<usize> = replay.into_iter().filter(|&r| r < voters).collect();
        let faults = FaultPlan { replay: replay.clone(), ..Default::default() };
        let st = run_election(small_election(voters), faults, &mut seeded(seed)).unwrap();
        prop_assert_eq!(st.tally.as_ref().unwrap().total(), voters);
        prop_assert_eq!(st.board.len(), voters);
        let replays = st.rejections.iter().filter(|r| **r == RejectReason::Replay).count();
        prop_assert_eq!(replays, replay.len());
    }

    #[test]
    fn tampering_one_entry_flags_one_voter(seed in any::<u64>(), voters in 1usize..10, pick in any::<prop::sample::Index>()) {
        let target = pick.index(voters);
        let faults = FaultPlan { tamper_board: Some(target), ..Default::default() };
        let st = run_election(small_election(voters), faults, &mut seeded(seed)).unwrap();
        for v in &st.voters {
            prop_assert_eq!(v.verified, Some(v.index != target));
        }
    }
}

#[test]
fn forged_acceptance_halves_per_check_bit() {
    let trials = 100_000;
    let rates: Vec<f64> = (2..=5)
        .map(|m| forge_ballot_attack(m, trials, Forger::RandomState, &mut seeded(900 + m as u64)).unwrap().estimate)
        .collect();
    for w in rates.windows(2) {
        let ratio = w[1] / w[0];
        assert!((ratio - 0.5).abs() <= 0.05, "{rates:?}");
    }
}
