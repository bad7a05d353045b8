//! Clifford recovery circuits built from logical representatives.

use serde::Serialize;

use super::pauli::PauliWord;
use super::tableau::{HybridTableau, LogicalOp, StabError};
use crate::access::PlayerSet;
use crate::scheme::SchemeTree;
use crate::statevec::{Gate, SecretQubit};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PlanGate {
    One(Gate, usize),
    Cnot(usize, usize),
}

impl PlanGate {
    pub fn conjugate(self, w: &mut PauliWord) {
        match self {
            PlanGate::One(g, q) => {
                w.conj_gate(g, q);
            }
            PlanGate::Cnot(c, t) => w.conj_cnot(c, t),
        }
    }

    pub fn qubits(self) -> Vec<usize> {
        match self {
            PlanGate::One(_, q) => vec![q],
            PlanGate::Cnot(c, t) => vec![c, t],
        }
    }
}

/// Gates on a block's leaves (block-local indices) after which the target
/// leaf alone carries the secret.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecoveryPlan {
    pub target: usize,
    pub gates: Vec<PlanGate>,
    pub x_rep: PauliWord,
    pub z_rep: PauliWord,
}

impl RecoveryPlan {
    pub fn touched(&self) -> Vec<usize> {
        let mut q: Vec<usize> = self.gates.iter().flat_map(|g| g.qubits()).collect();
        q.push(self.target);
        q.sort_unstable();
        q.dedup();
        q
    }
}

/// Plans recovery of `tree`'s secret by the players in `set`, using the
/// freshly encoded frame.
pub fn synthesize_recovery(tree: &SchemeTree, set: PlayerSet) -> Result<RecoveryPlan, StabError> {
    let mut reference = HybridTableau::new();
    reference.append_tree(tree, SecretQubit::basis(0))?;
    let support = tree.leaves_of(set);
    let x_rep = reference
        .find_representative(0, LogicalOp::X, &support)?
        .ok_or(StabError::NotRecoverable)?;
    let z_rep = reference
        .find_representative(0, LogicalOp::Z, &support)?
        .ok_or(StabError::NotRecoverable)?;
    Ok(plan_from_representatives(x_rep, z_rep))
}

/// Maps an anticommuting Hermitian pair to `(+X_t, +Z_t)` with `t` the
/// highest qubit of the X representative.
pub fn plan_from_representatives(x_rep: PauliWord, z_rep: PauliWord) -> RecoveryPlan {
    let mut x = x_rep.clone();
    let mut z = z_rep.clone();
    let mut gates = Vec::new();
    let push = |g: PlanGate, x: &mut PauliWord, z: &mut PauliWord, gates: &mut Vec<PlanGate>| {
        g.conjugate(x);
        g.conjugate(z);
        gates.push(g);
    };
    let support = x.support();
    let target = *support.last().expect("logical representative is nontrivial");
    for &q in &support {
        match x.letter(q) {
            'Z' => push(PlanGate::One(Gate::H, q), &mut x, &mut z, &mut gates),
            'Y' => push(PlanGate::One(Gate::Sdg, q), &mut x, &mut z, &mut gates),
            _ => {}
        }
    }
    for &q in &support {
        if q != target {
            push(PlanGate::Cnot(target, q), &mut x, &mut z, &mut gates);
        }
    }
    for q in z.support() {
        if q == target {
            continue;
        }
        match z.letter(q) {
            'X' => push(PlanGate::One(Gate::H, q), &mut x, &mut z, &mut gates),
            'Y' => {
                push(PlanGate::One(Gate::Sdg, q), &mut x, &mut z, &mut gates);
                push(PlanGate::One(Gate::H, q), &mut x, &mut z, &mut gates);
            }
            _ => {}
        }
        push(PlanGate::Cnot(q, target), &mut x, &mut z, &mut gates);
    }
    if z.letter(target) == 'Y' {
        for g in [Gate::H, Gate::S, Gate::H] {
            push(PlanGate::One(g, target), &mut x, &mut z, &mut gates);
        }
    }
    if x.is_negative() == Some(true) {
        push(PlanGate::One(Gate::Z, target), &mut x, &mut z, &mut gates);
    }
    if z.is_negative() == Some(true) {
        push(PlanGate::One(Gate::X, target), &mut x, &mut z, &mut gates);
    }
    debug_assert_eq!(x.support(), vec![target]);
    debug_assert_eq!(z.support(), vec![target]);
    RecoveryPlan {
        target,
        gates,
        x_rep,
        z_rep,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::build_23;
    use crate::statevec::{SparseState, C64};

    fn run_plan(plan: &RecoveryPlan, secret: SecretQubit) -> SparseState {
        let mut s = SparseState::from_secret(secret);
        s.encode_steane(0).unwrap();
        for g in &plan.gates {
            match *g {
                PlanGate::One(gate, q) => s.apply_1q(gate, q).unwrap(),
                PlanGate::Cnot(c, t) => s.apply_cnot(c, t).unwrap(),
            }
        }
        s
    }

    fn target_fidelity(s: &SparseState, target: usize, secret: SecretQubit) -> f64 {
        let rho = s.partial_trace(&[target]).unwrap();
        let phi = SparseState::from_secret(secret);
        rho.expectation(&phi).re
    }

    #[test]
    fn pair_bc_uses_four_cnots() {
        let tree = build_23();
        let plan = synthesize_recovery(&tree, PlayerSet::from_indices([1, 2])).unwrap();
        assert_eq!(
            plan.gates,
            vec![
                PlanGate::Cnot(6, 4),
                PlanGate::Cnot(6, 5),
                PlanGate::Cnot(4, 6),
                PlanGate::Cnot(5, 6)
            ]
        );
        assert_eq!(plan.target, 6);
        let secret = SecretQubit::new(C64::new(0.6, 0.0), C64::new(0.0, 0.8)).unwrap();
        let s = run_plan(&plan, secret);
        assert!((target_fidelity(&s, 6, secret) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn every_authorized_pair_recovers() {
        let tree = build_23();
        let secret = SecretQubit::new(C64::new(0.28, 0.96 * 0.6), C64::new(0.0, 0.96 * 0.8)).unwrap();
        for set in [0b011u16, 0b101, 0b110, 0b111] {
            let set = PlayerSet::from_bits(set);
            let plan = synthesize_recovery(&tree, set).unwrap();
            let leaves = tree.leaves_of(set);
            assert!(plan.touched().iter().all(|q| leaves.contains(q)));
            let s = run_plan(&plan, secret);
            assert!((target_fidelity(&s, plan.target, secret) - 1.0).abs() < 1e-12, "{set:?}");
        }
        for set in [0b001u16, 0b010, 0b100] {
            assert_eq!(
                synthesize_recovery(&tree, PlayerSet::from_bits(set)),
                Err(StabError::NotRecoverable)
            );
        }
    }

    #[test]
    fn ab_plan_starts_from_three_qubit_words() {
        let plan = synthesize_recovery(&build_23(), PlayerSet::from_indices([0, 1])).unwrap();
        assert_eq!(plan.x_rep.to_string(), "+XIIXXII");
        assert_eq!(plan.z_rep.to_string(), "+ZIIZZII");
    }
}
