use std::sync::Arc;

use num_complex::Complex64 as C64;
use qss_core::access::{all_subsets, AccessStructure, PlayerSet};
use qss_core::protocol::{
    run_circuit, verify_scheme, CircuitProgram, EngineKind, ProtocolError, Session, SubsetSelection,
    VerifyOptions,
};
use qss_core::scheme::{build_23, build_nn, build_omega, compile, SchemeTree};
use qss_core::statevec::{Gate, SecretQubit};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const ENGINES: [EngineKind; 2] = [EngineKind::Sparse, EngineKind::Stabilizer];

fn structure(players: &str, sets: &[&str]) -> AccessStructure {
    let labels = players.chars().map(|c| c.to_string()).collect();
    let sets: Vec<PlayerSet> = sets
        .iter()
        .map(|w| PlayerSet::from_indices(w.chars().map(|c| players.find(c).unwrap())))
        .collect();
    AccessStructure::normalize(labels, sets).unwrap()
}

fn set(players: &str, word: &str) -> PlayerSet {
    PlayerSet::from_indices(word.chars().map(|c| players.find(c).unwrap()))
}

fn ab_ac() -> SchemeTree {
    compile(&structure("ABC", &["AB", "AC"])).unwrap()
}

fn ae_be_ce_abc() -> SchemeTree {
    compile(&structure("ABCE", &["AE", "BE", "CE", "ABC"])).unwrap()
}

fn abc_be_ae() -> SchemeTree {
    compile(&structure("ABCE", &["ABC", "BE", "AE"])).unwrap()
}

fn sample_secret() -> SecretQubit {
    SecretQubit::new(C64::new(0.6, 0.0), C64::new(0.0, 0.8)).unwrap()
}

fn everyone(tree: &SchemeTree) -> PlayerSet {
    tree.structure().all_players()
}

#[test]
fn share_zero_on_two_of_three_gives_eight_terms() {
    let mut s = Session::new(EngineKind::Sparse, 1);
    s.share(Arc::new(build_23()), SecretQubit::basis(0)).unwrap();
    assert_eq!(s.sparse_state().unwrap().term_count(), 8);
}

#[test]
fn share_on_omega_three_stabilizer() {
    let mut s = Session::new(EngineKind::Stabilizer, 1);
    s.share(Arc::new(build_omega(3).unwrap()), SecretQubit::basis(1)).unwrap();
    let t = s.tableau().unwrap();
    assert_eq!(t.generators().len(), 12);
    assert_eq!(t.register(), &[C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
}

#[test]
fn a_share_is_secret_independent() {
    let tree = Arc::new(build_23());
    let mut rhos = Vec::new();
    for secret in [sample_secret(), SecretQubit::basis(1)] {
        let mut s = Session::new(EngineKind::Sparse, 1);
        s.share(tree.clone(), secret).unwrap();
        rhos.push(s.sparse_state().unwrap().partial_trace(&[0, 1, 2, 3]).unwrap());
    }
    assert!(rhos[0].max_abs_diff(&rhos[1]) < 1e-12);
}

#[test]
fn recovery_examples() {
    for engine in ENGINES {
        let tree = Arc::new(build_23());
        let mut s = Session::new(engine, 1);
        let id = s.share(tree, sample_secret()).unwrap();
        let rec = s.recover(id, set("ABC", "BC")).unwrap();
        assert!((rec.fidelity(&sample_secret()) - 1.0).abs() < 1e-9);
        let got = rec.secret();
        assert!((got.fidelity(&sample_secret()) - 1.0).abs() < 1e-9);

        let mut s = Session::new(engine, 1);
        let id = s.share(Arc::new(ae_be_ce_abc()), sample_secret()).unwrap();
        let rec = s.recover(id, set("ABCE", "AE")).unwrap();
        assert!((rec.fidelity(&sample_secret()) - 1.0).abs() < 1e-9);
    }
    let mut s = Session::new(EngineKind::Stabilizer, 1);
    let id = s.share(Arc::new(abc_be_ae()), sample_secret()).unwrap();
    assert!(matches!(
        s.recover(id, set("ABCE", "AB")),
        Err(ProtocolError::Unauthorized(_))
    ));
}

fn after(engine: EngineKind, tree: &SchemeTree, secret: SecretQubit, ops: impl Fn(&mut Session, usize)) -> f64 {
    let mut s = Session::new(engine, 5);
    let id = s.share(Arc::new(tree.clone()), secret).unwrap();
    ops(&mut s, id);
    s.recover(id, everyone(tree)).unwrap().fidelity(&secret)
}

#[test]
fn transversal_gates_match_plain_gates() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for tree in [build_23(), ab_ac()] {
        for engine in ENGINES {
            for _ in 0..4 {
                let psi = SecretQubit::random(&mut rng);
                for gate in [Gate::X, Gate::Z, Gate::H] {
                    let mut s = Session::new(engine, 5);
                    let id = s.share(Arc::new(tree.clone()), psi).unwrap();
                    s.logical_gate(id, gate).unwrap();
                    let f = s.recover(id, everyone(&tree)).unwrap().fidelity(&psi.apply(gate));
                    assert!((f - 1.0).abs() < 1e-9, "{gate} on {engine:?}");
                }
                let mut s = Session::new(engine, 5);
                let id = s.share(Arc::new(tree.clone()), psi).unwrap();
                s.logical_s(id).unwrap();
                let f = s.recover(id, everyone(&tree)).unwrap().fidelity(&psi.apply(Gate::S));
                assert!((f - 1.0).abs() < 1e-9, "S on {engine:?}");
                // the sparse intermediate of a second H pass exceeds the term cap here
                if engine == EngineKind::Stabilizer || tree.leaf_count() <= 7 {
                    let f = after(engine, &tree, psi, |s, id| {
                        s.logical_gate(id, Gate::H).unwrap();
                        s.logical_gate(id, Gate::H).unwrap();
                    });
                    assert!((f - 1.0).abs() < 1e-9);
                }
                let f = after(engine, &tree, psi, |s, id| {
                    for _ in 0..4 {
                        s.logical_s(id).unwrap();
                    }
                });
                assert!((f - 1.0).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn logical_cnot_on_basis_pair() {
    for engine in ENGINES {
        let tree = Arc::new(build_23());
        let mut s = Session::new(engine, 2);
        let a = s.share(tree.clone(), SecretQubit::basis(1)).unwrap();
        let b = s.share(tree.clone(), SecretQubit::basis(0)).unwrap();
        s.logical_cnot(a, b).unwrap();
        let rho = s.recover_joint(&[a, b]).unwrap();
        assert!((rho[3][3].re - 1.0).abs() < 1e-9);
    }
}

#[test]
fn teleported_t_on_fixed_secrets() {
    for engine in ENGINES {
        let tree = Arc::new(build_23());
        let plus = SecretQubit::basis(0).apply(Gate::H);
        let mut branches = [false; 2];
        for seed in 0..40 {
            for psi in [SecretQubit::basis(0), plus] {
                let mut s = Session::new(engine, seed);
                let id = s.share(tree.clone(), psi).unwrap();
                let anc = s.share_ancilla(tree.clone()).unwrap();
                let rec = s.logical_t(id, anc).unwrap();
                branches[rec.parity as usize] = true;
                assert_eq!(rec.corrected, rec.parity == 1);
                let f = s.recover(id, everyone(&tree)).unwrap().fidelity(&psi.apply(Gate::T));
                assert!((f - 1.0).abs() < 1e-9);
            }
        }
        assert_eq!(branches, [true, true]);
    }
}

#[test]
fn ancilla_is_consumed_once() {
    let tree = Arc::new(build_23());
    let mut s = Session::new(EngineKind::Stabilizer, 1);
    let id = s.share(tree.clone(), SecretQubit::basis(0)).unwrap();
    let anc = s.share_ancilla(tree.clone()).unwrap();
    s.logical_t(id, anc).unwrap();
    assert_eq!(s.logical_t(id, anc), Err(ProtocolError::BlockRetired(anc)));
    let other = s.share(tree, SecretQubit::basis(0)).unwrap();
    assert_eq!(s.logical_t(id, other), Err(ProtocolError::NotAncilla(other)));
}

#[test]
fn logical_measurement() {
    for engine in ENGINES {
        let mut s = Session::new(engine, 3);
        let id = s.share(Arc::new(build_23()), SecretQubit::basis(0)).unwrap();
        assert_eq!(s.logical_measure_z(id).unwrap().parity, 0);
        let tree = Arc::new(build_nn(2).unwrap());
        for seed in 0..20 {
            let mut s = Session::new(engine, seed);
            let id = s.share(tree.clone(), SecretQubit::basis(1)).unwrap();
            let rec = s.logical_measure_z(id).unwrap();
            assert_eq!(rec.outcomes.len(), 3);
            assert_eq!(rec.parity, 1);
        }
    }
}

#[test]
fn logical_measurement_frequency() {
    let tree = Arc::new(build_23());
    let plus = SecretQubit::basis(0).apply(Gate::H);
    let mut ones = 0;
    for seed in 0..10_000u64 {
        let mut s = Session::new(EngineKind::Sparse, seed);
        let id = s.share(tree.clone(), plus).unwrap();
        ones += u32::from(s.logical_measure_z(id).unwrap().parity);
    }
    assert!((f64::from(ones) / 10_000.0 - 0.5).abs() < 0.02);
}

#[test]
fn circuit_examples() {
    let tree = Arc::new(build_23());
    let text = "secret q0 1 0 0 0\nancilla t 1\nH q0\nT q0\nH q0\nMEASZ q0\n";
    let program = CircuitProgram::parse(text).unwrap();
    let mut zeros = 0;
    let trials = 2000;
    for seed in 0..trials {
        let out = run_circuit(&program, tree.clone(), EngineKind::Sparse, seed).unwrap();
        zeros += u32::from(out.measured[0] == Some(0));
    }
    let p0 = f64::from(zeros) / f64::from(trials as u32);
    let expect = (std::f64::consts::PI / 8.0).cos().powi(2);
    let sigma = (expect * (1.0 - expect) / f64::from(trials as u32)).sqrt();
    assert!((p0 - expect).abs() < 3.0 * sigma, "{p0}");

    let program = CircuitProgram::parse("secret q0 1 0 0 0\nsecret q1 1 0 0 0\nX q0\nCNOT q0 q1\n").unwrap();
    for engine in ENGINES {
        let out = run_circuit(&program, tree.clone(), engine, 1).unwrap();
        assert!((out.fidelity_vs_plain(&program).unwrap() - 1.0).abs() < 1e-9);
        let rho = out.session.recover_joint(&out.wires).unwrap();
        assert!((rho[3][3].re - 1.0).abs() < 1e-9);
    }
    let empty = CircuitProgram::parse("secret q0 0.6 0 0 0.8\n").unwrap();
    let out = run_circuit(&empty, tree.clone(), EngineKind::Sparse, 1).unwrap();
    assert!((out.fidelity_vs_plain(&empty).unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn ancilla_budget_is_checked_first() {
    let program = CircuitProgram::parse("secret q0 1 0 0 0\nancilla t 1\nT q0\nH q0\nT q0\n").unwrap();
    let err = run_circuit(&program, Arc::new(build_23()), EngineKind::Sparse, 1).unwrap_err();
    assert_eq!(err, ProtocolError::AncillaExhausted { needed: 2, budget: 1 });
    assert!(err.to_string().contains("ancilla exhausted"));
}

#[test]
fn circuit_parse_errors() {
    let err = CircuitProgram::parse("secret q0 1 0 0 0\nH q1\n").unwrap_err();
    assert!(matches!(err, ProtocolError::Parse { line: 2, .. }));
    let err = CircuitProgram::parse("secret q0 1 0 1 0\n").unwrap_err();
    assert!(matches!(err, ProtocolError::Parse { line: 1, .. }));
    let p = CircuitProgram::parse("# demo\nsecret a 0.6 0 0 0.8\nancilla t 2\nT a\nS a # phase\nMEASZ a\n").unwrap();
    assert_eq!(CircuitProgram::parse(&p.to_text()).unwrap(), p);
}

#[test]
fn verify_two_of_three() {
    let report = verify_scheme(&build_23(), &VerifyOptions::default()).unwrap();
    assert_eq!(report.subsets.len(), 8);
    assert!(report.all_pass(), "{}", report.table());
    for s in &report.subsets {
        if !s.expected {
            assert!(s.transcript_exact.unwrap() < 1e-10);
            assert!(s.transcript_tvd.unwrap() < 0.02);
        }
    }
}

#[test]
fn verify_compiled_schemes() {
    let opts = VerifyOptions {
        transcript_trials: 0,
        ..VerifyOptions::default()
    };
    let report = verify_scheme(&ab_ac(), &opts).unwrap();
    assert!(report.all_pass(), "{}", report.table());
    let bc = report.subsets.iter().find(|s| s.set == "BC").unwrap();
    assert!(!bc.tree_authorized && bc.min_fidelity.is_none());
    for name in ["AB", "AC"] {
        let r = report.subsets.iter().find(|s| s.set == name).unwrap();
        assert!(r.min_fidelity.unwrap() > 1.0 - 1e-9);
    }
    let report = verify_scheme(&abc_be_ae(), &opts).unwrap();
    assert_eq!(report.subsets.len(), 16);
    assert!(report.all_pass(), "{}", report.table());
    let sampled = verify_scheme(
        &ae_be_ce_abc(),
        &VerifyOptions {
            subsets: SubsetSelection::Sample(5),
            transcript_trials: 0,
            ..VerifyOptions::default()
        },
    )
    .unwrap();
    assert_eq!(sampled.subsets.len(), 5);
    assert!(sampled.all_pass());
}

/// Stabilizer leakage agrees with partial-trace secret dependence.
#[test]
fn leaks_matches_partial_trace() {
    for tree in [build_23(), ab_ac(), build_omega(3).unwrap()] {
        let tree = Arc::new(tree);
        let mut reference = qss_core::stab::HybridTableau::new();
        reference.append_tree(&tree, SecretQubit::basis(0)).unwrap();
        let secrets = [sample_secret(), SecretQubit::basis(0), SecretQubit::basis(0).apply(Gate::H)];
        let states: Vec<Session> = secrets
            .iter()
            .map(|&psi| {
                let mut s = Session::new(EngineKind::Sparse, 1);
                s.share(tree.clone(), psi).unwrap();
                s
            })
            .collect();
        for subset in all_subsets(tree.structure().player_count()) {
            let leaves = tree.leaves_of(subset);
            if leaves.len() > 14 {
                continue;
            }
            let rhos: Vec<_> = states
                .iter()
                .map(|s| s.sparse_state().unwrap().partial_trace(&leaves).unwrap())
                .collect();
            let dependent = rhos[1..].iter().any(|r| r.max_abs_diff(&rhos[0]) > 1e-10);
            assert_eq!(reference.leaks(&leaves), dependent, "{subset:?}");
        }
    }
}

#[test]
fn compiled_schemes_recoverable_iff_authorized() {
    let cases = [
        structure("ABC", &["AB", "AC"]),
        structure("ABCE", &["AE", "BE", "CE", "ABC"]),
        structure("ABCE", &["ABC", "BE", "AE"]),
        structure("ABCD", &["AB", "AC", "AD", "BCD"]),
        structure("ABCDE", &["ABC", "ADE", "BD"]),
    ];
    for a in cases {
        let tree = compile(&a).unwrap();
        let mut t = qss_core::stab::HybridTableau::new();
        t.append_tree(&tree, SecretQubit::basis(0)).unwrap();
        let maximal = a.is_maximal();
        let n = a.player_count();
        for s in all_subsets(n) {
            let leaves = tree.leaves_of(s);
            let rec = t.recoverable(0, &leaves).unwrap();
            assert_eq!(rec, tree.authorized(s), "{a} {s:?}");
            assert_eq!(rec, a.is_authorized(s), "{a} {s:?}");
            if !rec {
                assert!(!t.leaks(&leaves), "{a} {s:?}");
            }
            if maximal {
                let comp = tree.leaves_of(s.complement(n));
                assert_ne!(rec, t.recoverable(0, &comp).unwrap());
                assert_eq!(t.leaks(&leaves), rec);
            }
        }
    }
}
