use std::sync::Arc;

use proptest::prelude::*;
use qss_core::access::{all_subsets, AccessStructure, PlayerSet};
use qss_core::protocol::{run_circuit, CircuitOp, CircuitProgram, EngineKind};
use qss_core::scheme::{build_23, compile, SchemeTree};
use qss_core::stab::HybridTableau;
use qss_core::statevec::SecretQubit;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn raw_sets() -> impl Strategy<Value = (usize, Vec<u16>)> {
    (3usize..=5).prop_flat_map(|n| {
        let full = (1u16 << n) - 1;
        (Just(n), prop::collection::vec(1..=full, 1..5))
    })
}

fn admissible() -> impl Strategy<Value = AccessStructure> {
    raw_sets().prop_filter_map("not admissible", |(n, sets)| {
        let a = AccessStructure::with_player_count(n, sets.into_iter().map(PlayerSet::from_bits)).ok()?;
        a.is_quantum_admissible().then_some(a)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalize_is_monotone_and_idempotent((n, sets) in raw_sets()) {
        let a = AccessStructure::with_player_count(n, sets.iter().map(|&b| PlayerSet::from_bits(b))).unwrap();
        let again = AccessStructure::with_player_count(n, a.minimal_sets().to_vec()).unwrap();
        prop_assert_eq!(&a, &again);
        for &b in &sets {
            prop_assert!(a.is_authorized(PlayerSet::from_bits(b)));
        }
        for s in all_subsets(n) {
            if a.is_authorized(s) {
                for p in 0..n {
                    prop_assert!(a.is_authorized(s.with(p)));
                }
            }
        }
        let ms = a.minimal_sets();
        for (i, x) in ms.iter().enumerate() {
            for (j, y) in ms.iter().enumerate() {
                prop_assert!(i == j || !x.is_subset_of(*y));
            }
        }
        prop_assert_eq!(AccessStructure::parse(&a.to_text()).unwrap(), a);
    }

    #[test]
    fn maximalize_extends_to_maximal(a in admissible()) {
        let m = a.maximalize().unwrap();
        prop_assert!(m.is_maximal());
        prop_assert!(m.is_quantum_admissible());
        let n = a.player_count();
        for s in all_subsets(n) {
            prop_assert!(!a.is_authorized(s) || m.is_authorized(s));
            prop_assert_ne!(m.is_authorized(s), m.is_authorized(s.complement(n)));
        }
    }

    #[test]
    fn compiled_tree_realizes_structure(a in admissible()) {
        let tree = compile(&a).unwrap();
        prop_assert_eq!(tree.leaf_count() % 2, 1);
        for s in all_subsets(a.player_count()) {
            prop_assert_eq!(tree.authorized(s), a.is_authorized(s));
        }
        let back = SchemeTree::parse(&tree.to_text()).unwrap();
        prop_assert_eq!(back.root(), tree.root());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Stabilizer recoverability and leakage agree with the tree predicate.
    #[test]
    fn recoverable_iff_authorized(a in admissible()) {
        let tree = compile(&a).unwrap();
        prop_assume!(tree.leaf_count() <= 700);
        let mut t = HybridTableau::new();
        t.append_tree(&tree, SecretQubit::basis(0)).unwrap();
        for s in all_subsets(a.player_count()) {
            let leaves = tree.leaves_of(s);
            let rec = t.recoverable(0, &leaves).unwrap();
            prop_assert_eq!(rec, a.is_authorized(s));
            if !rec {
                prop_assert!(!t.leaks(&leaves));
            }
        }
    }
}

fn random_program(seed: u64, len: usize) -> CircuitProgram {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let wires = vec![
        ("a".to_string(), SecretQubit::random(&mut rng)),
        ("b".to_string(), SecretQubit::random(&mut rng)),
    ];
    let mut ops = Vec::new();
    let mut measured = [false; 2];
    for _ in 0..len {
        let w = rng.gen_range(0..2);
        if measured[w] {
            continue;
        }
        let op = match rng.gen_range(0..8) {
            0 => CircuitOp::X(w),
            1 => CircuitOp::Z(w),
            2 | 3 => CircuitOp::H(w),
            4 => CircuitOp::S(w),
            5 => CircuitOp::T(w),
            6 if !measured[1 - w] => CircuitOp::Cnot(w, 1 - w),
            7 if rng.gen_bool(0.3) => {
                measured[w] = true;
                CircuitOp::MeasZ(w)
            }
            _ => CircuitOp::H(w),
        };
        ops.push(op);
    }
    let ancillas = ops.iter().filter(|op| matches!(op, CircuitOp::T(_))).count();
    CircuitProgram { wires, ancillas, ops }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Shared execution agrees with the plain simulation post-selected on the
    /// same logical measurement outcomes.
    #[test]
    fn random_circuits_match_plain(seed in any::<u64>(), len in 1usize..12, stab in any::<bool>()) {
        let program = random_program(seed, len);
        let engine = if stab { EngineKind::Stabilizer } else { EngineKind::Sparse };
        let out = run_circuit(&program, Arc::new(build_23()), engine, seed).unwrap();
        let f = out.fidelity_vs_plain(&program).unwrap();
        prop_assert!((f - 1.0).abs() < 1e-9, "fidelity {} for {}", f, program.to_text());
    }
}
