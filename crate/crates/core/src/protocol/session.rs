//! Shared secrets living in one simulation backend.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::ProtocolError;
use crate::access::PlayerSet;
use crate::scheme::{SchemeNode, SchemeTree, Slot};
use crate::stab::{synthesize_recovery, HybridTableau, PauliWord, PlanGate, RecoveryPlan};
use crate::statevec::{Gate, SecretQubit, SparseState, MAX_QUBITS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    Sparse,
    Stabilizer,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum EngineChoice {
    Sparse,
    Stabilizer,
    #[default]
    Auto,
}

impl EngineChoice {
    /// `Auto` picks the sparse engine iff the tree has at most 26 leaves.
    pub fn resolve(self, leaves: usize) -> EngineKind {
        match self {
            EngineChoice::Sparse => EngineKind::Sparse,
            EngineChoice::Stabilizer => EngineKind::Stabilizer,
            EngineChoice::Auto if leaves <= MAX_QUBITS => EngineKind::Sparse,
            EngineChoice::Auto => EngineKind::Stabilizer,
        }
    }
}

impl std::str::FromStr for EngineChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sparse" => Ok(EngineChoice::Sparse),
            "stabilizer" | "stab" => Ok(EngineChoice::Stabilizer),
            "auto" => Ok(EngineChoice::Auto),
            _ => Err(format!("unknown engine `{s}`")),
        }
    }
}

/// `τ = TH|0⟩`.
pub fn tau() -> SecretQubit {
    SecretQubit::basis(0).apply(Gate::H).apply(Gate::T)
}

#[derive(Clone, Debug)]
enum Backend {
    Sparse(SparseState),
    Stab(HybridTableau),
}

impl Backend {
    fn qubit_count(&self) -> usize {
        match self {
            Backend::Sparse(s) => s.qubit_count(),
            Backend::Stab(t) => t.qubit_count(),
        }
    }

    fn apply_1q(&mut self, gate: Gate, q: usize) -> Result<(), ProtocolError> {
        match self {
            Backend::Sparse(s) => s.apply_1q(gate, q)?,
            Backend::Stab(t) => t.apply_1q(gate, q)?,
        }
        Ok(())
    }

    fn apply_cnot(&mut self, c: usize, t: usize) -> Result<(), ProtocolError> {
        match self {
            Backend::Sparse(s) => s.apply_cnot(c, t)?,
            Backend::Stab(tab) => tab.apply_cnot(c, t)?,
        }
        Ok(())
    }

    fn measure_z(&mut self, q: usize, rng: &mut ChaCha8Rng) -> Result<u8, ProtocolError> {
        Ok(match self {
            Backend::Sparse(s) => s.measure_z(q, rng)?,
            Backend::Stab(t) => t.measure_z(q, rng)?,
        })
    }

    fn apply_plan(&mut self, plan: &RecoveryPlan, offset: usize) -> Result<(), ProtocolError> {
        for g in &plan.gates {
            match *g {
                PlanGate::One(gate, q) => self.apply_1q(gate, q + offset)?,
                PlanGate::Cnot(c, t) => self.apply_cnot(c + offset, t + offset)?,
            }
        }
        Ok(())
    }

    /// Dense reduced density matrix on `qubits` (bit `i` ↔ `qubits[i]`).
    fn reduced_density(&self, qubits: &[usize]) -> Result<Vec<Vec<C64>>, ProtocolError> {
        let dim = 1usize << qubits.len();
        let mut rho = vec![vec![C64::new(0.0, 0.0); dim]; dim];
        match self {
            Backend::Sparse(s) => {
                let map = s.partial_trace(qubits)?;
                for ((r, c), v) in map.entries() {
                    rho[r as usize][c as usize] = v;
                }
            }
            Backend::Stab(t) => {
                // ρ = 2^-w Σ_P ⟨P⟩ P over all Paulis on the kept qubits
                let w = qubits.len();
                if w > 6 {
                    return Err(ProtocolError::TooManyOutputs(w));
                }
                for code in 0..(1usize << (2 * w)) {
                    let mut local = PauliWord::identity(w);
                    for i in 0..w {
                        let letter = ['I', 'X', 'Y', 'Z'][(code >> (2 * i)) & 3];
                        local.set_letter(i, letter);
                    }
                    let mut full = PauliWord::identity(t.qubit_count());
                    for (i, &q) in qubits.iter().enumerate() {
                        full.set_letter(q, local.letter(i));
                    }
                    let e = if code == 0 { 1.0 } else { t.expectation(&full)? };
                    if e.abs() < 1e-15 {
                        continue;
                    }
                    let m = pauli_matrix(&local);
                    for r in 0..dim {
                        for c in 0..dim {
                            rho[r][c] += m[r][c] * e / dim as f64;
                        }
                    }
                }
            }
        }
        Ok(rho)
    }
}

/// Dense matrix of a small Pauli word (bit `i` of the index ↔ qubit `i`).
fn pauli_matrix(p: &PauliWord) -> Vec<Vec<C64>> {
    let w = p.len();
    let dim = 1usize << w;
    let (mut xm, mut zm) = (0usize, 0usize);
    for i in 0..w {
        xm |= usize::from(p.x(i)) << i;
        zm |= usize::from(p.z(i)) << i;
    }
    let coef = C64::i().powu(p.phase() as u32);
    let mut m = vec![vec![C64::new(0.0, 0.0); dim]; dim];
    for col in 0..dim {
        let sign = if (col & zm).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        m[col ^ xm][col] = coef * sign;
    }
    m
}

/// Encodes qubit `q` of `state` under `node`; leaves land depth-first.
pub fn encode_node(state: &mut SparseState, q: usize, node: &SchemeNode) -> Result<(), ProtocolError> {
    if let SchemeNode::Encode(children) = node {
        state.encode_steane(q)?;
        for pos in (0..7).rev() {
            encode_node(state, q + pos, &children[Slot::of_position(pos).index()])?;
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    Secret,
    Ancilla,
}

#[derive(Clone, Debug)]
pub struct Block {
    pub tree: Arc<SchemeTree>,
    pub offset: usize,
    pub kind: BlockKind,
    pub live: bool,
}

impl Block {
    fn live_leaves(&self) -> Vec<usize> {
        self.tree.live_leaves()
    }
}

/// Bitwise readout of one block.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MeasurementRecord {
    /// `(block-local leaf, bit)` for every non-discarded leaf, in order.
    pub outcomes: Vec<(usize, u8)>,
    pub parity: u8,
    pub corrected: bool,
}

/// What an authorized set extracts from a block.
#[derive(Clone, Debug, PartialEq)]
pub struct Recovered {
    pub plan: RecoveryPlan,
    /// Single-qubit density matrix on the plan's target leaf.
    pub rho: [[C64; 2]; 2],
}

impl Recovered {
    /// `⟨ψ|ρ|ψ⟩`.
    pub fn fidelity(&self, secret: &SecretQubit) -> f64 {
        let v = [secret.alpha, secret.beta];
        let mut acc = C64::new(0.0, 0.0);
        for r in 0..2 {
            for c in 0..2 {
                acc += v[r].conj() * self.rho[r][c] * v[c];
            }
        }
        acc.re
    }

    /// Dominant eigenvector of `ρ`, with `α` real and non-negative.
    pub fn secret(&self) -> SecretQubit {
        let [[a, b], [_, d]] = self.rho;
        let (a, d) = (a.re, d.re);
        let gap = ((a - d).powi(2) + 4.0 * b.norm_sqr()).sqrt();
        let lambda = (a + d + gap) / 2.0;
        // (ρ - λ) v = 0 with v = (b, λ - a) or (λ - d, conj b)
        let (alpha, beta) = if (lambda - d).abs() >= (lambda - a).abs() {
            (C64::new(lambda - d, 0.0), b.conj())
        } else {
            (b, C64::new(lambda - a, 0.0))
        };
        let phase = if alpha.norm() > 1e-12 {
            alpha.conj() / alpha.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        SecretQubit::normalized(alpha * phase, beta * phase).unwrap_or(SecretQubit::basis(0))
    }
}

/// A simulation session holding any number of shared blocks.
#[derive(Clone, Debug)]
pub struct Session {
    backend: Backend,
    blocks: Vec<Block>,
    rng: ChaCha8Rng,
}

pub type BlockId = usize;

impl Session {
    pub fn new(engine: EngineKind, seed: u64) -> Self {
        let backend = match engine {
            EngineKind::Sparse => Backend::Sparse(SparseState::zero(0).expect("empty register")),
            EngineKind::Stabilizer => Backend::Stab(HybridTableau::new()),
        };
        Session {
            backend,
            blocks: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Restarts the measurement randomness.
    pub fn reseed(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    pub fn engine(&self) -> EngineKind {
        match self.backend {
            Backend::Sparse(_) => EngineKind::Sparse,
            Backend::Stab(_) => EngineKind::Stabilizer,
        }
    }

    pub fn block(&self, id: BlockId) -> &Block {
        &self.blocks[id]
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn qubit_count(&self) -> usize {
        self.backend.qubit_count()
    }

    pub fn sparse_state(&self) -> Option<&SparseState> {
        match &self.backend {
            Backend::Sparse(s) => Some(s),
            Backend::Stab(_) => None,
        }
    }

    pub fn tableau(&self) -> Option<&HybridTableau> {
        match &self.backend {
            Backend::Stab(t) => Some(t),
            Backend::Sparse(_) => None,
        }
    }

    /// Encodes `secret` under `tree` on fresh qubits.
    pub fn share(&mut self, tree: Arc<SchemeTree>, secret: SecretQubit) -> Result<BlockId, ProtocolError> {
        self.append(tree, secret, BlockKind::Secret)
    }

    /// Shares one `τ` ancilla under `tree`.
    pub fn share_ancilla(&mut self, tree: Arc<SchemeTree>) -> Result<BlockId, ProtocolError> {
        self.append(tree, tau(), BlockKind::Ancilla)
    }

    fn append(&mut self, tree: Arc<SchemeTree>, secret: SecretQubit, kind: BlockKind) -> Result<BlockId, ProtocolError> {
        let offset = match &mut self.backend {
            Backend::Sparse(s) => {
                let mut block = SparseState::from_secret(secret);
                encode_node(&mut block, 0, tree.root())?;
                let offset = s.qubit_count();
                s.tensor(&block)?;
                offset
            }
            Backend::Stab(t) => t.append_tree(&tree, secret)?,
        };
        self.blocks.push(Block {
            tree,
            offset,
            kind,
            live: true,
        });
        Ok(self.blocks.len() - 1)
    }

    fn live_block(&self, id: BlockId) -> Result<&Block, ProtocolError> {
        let b = self.blocks.get(id).ok_or(ProtocolError::NoBlock(id))?;
        if !b.live {
            return Err(ProtocolError::BlockRetired(id));
        }
        Ok(b)
    }

    /// Transversal `X`, `Z` or `H` on every non-discarded leaf.
    pub fn logical_gate(&mut self, id: BlockId, gate: Gate) -> Result<(), ProtocolError> {
        if !matches!(gate, Gate::X | Gate::Z | Gate::H) {
            return Err(ProtocolError::NotTransversal(gate));
        }
        let b = self.live_block(id)?;
        let (offset, leaves) = (b.offset, b.live_leaves());
        for q in leaves {
            self.backend.apply_1q(gate, offset + q)?;
        }
        Ok(())
    }

    /// Logical `S`: `S†` on leaves at odd depth, `S` at even depth.
    pub fn logical_s(&mut self, id: BlockId) -> Result<(), ProtocolError> {
        let b = self.live_block(id)?;
        let offset = b.offset;
        let gates: Vec<(Gate, usize)> = b
            .live_leaves()
            .into_iter()
            .map(|q| {
                let g = if b.tree.layout()[q].depth % 2 == 1 { Gate::Sdg } else { Gate::S };
                (g, offset + q)
            })
            .collect();
        for (g, q) in gates {
            self.backend.apply_1q(g, q)?;
        }
        Ok(())
    }

    /// Leafwise CNOT between two blocks over the same tree.
    pub fn logical_cnot(&mut self, control: BlockId, target: BlockId) -> Result<(), ProtocolError> {
        if control == target {
            return Err(ProtocolError::SameBlock(control));
        }
        let c = self.live_block(control)?;
        let t = self.live_block(target)?;
        if c.tree.root() != t.tree.root() {
            return Err(ProtocolError::TreeMismatch);
        }
        let (co, to, leaves) = (c.offset, t.offset, c.live_leaves());
        for q in leaves {
            self.backend.apply_cnot(co + q, to + q)?;
        }
        Ok(())
    }

    /// Bitwise Z readout of every non-discarded leaf; retires the block.
    pub fn logical_measure_z(&mut self, id: BlockId) -> Result<MeasurementRecord, ProtocolError> {
        let b = self.live_block(id)?;
        let (offset, leaves) = (b.offset, b.live_leaves());
        let mut outcomes = Vec::with_capacity(leaves.len());
        let mut parity = 0;
        for q in leaves {
            let bit = self.backend.measure_z(offset + q, &mut self.rng)?;
            parity ^= bit;
            outcomes.push((q, bit));
        }
        self.retire(id)?;
        Ok(MeasurementRecord {
            outcomes,
            parity,
            corrected: false,
        })
    }

    /// The entangling half of T teleportation: leafwise CNOT secret →
    /// ancilla, then ancilla → secret.
    pub fn teleport_entangle(&mut self, id: BlockId, ancilla: BlockId) -> Result<(), ProtocolError> {
        let a = self.live_block(ancilla)?;
        if a.kind != BlockKind::Ancilla {
            return Err(ProtocolError::NotAncilla(ancilla));
        }
        self.logical_cnot(id, ancilla)?;
        self.logical_cnot(ancilla, id)
    }

    /// Logical `T` by consuming a `τ` ancilla. Parity 1 triggers the
    /// correction `S·X`.
    pub fn logical_t(&mut self, id: BlockId, ancilla: BlockId) -> Result<MeasurementRecord, ProtocolError> {
        self.teleport_entangle(id, ancilla)?;
        let mut record = self.logical_measure_z(ancilla)?;
        if record.parity == 1 {
            self.logical_gate(id, Gate::X)?;
            self.logical_s(id)?;
            record.corrected = true;
        }
        Ok(record)
    }

    /// Marks a block dead; the sparse engine also drops its qubits, which
    /// are in a product state once every live leaf has been measured.
    fn retire(&mut self, id: BlockId) -> Result<(), ProtocolError> {
        self.blocks[id].live = false;
        if let Backend::Sparse(s) = &mut self.backend {
            let (offset, len) = (self.blocks[id].offset, self.blocks[id].tree.leaf_count());
            s.drop_product_block(offset, len)?;
            for b in &mut self.blocks {
                if b.live && b.offset > offset {
                    b.offset -= len;
                }
            }
        }
        Ok(())
    }

    /// Recovery by `set` on a copy of the session state.
    pub fn recover(&self, id: BlockId, set: PlayerSet) -> Result<Recovered, ProtocolError> {
        let b = self.live_block(id)?;
        if !b.tree.authorized(set) {
            return Err(ProtocolError::Unauthorized(set.display(b.tree.structure().labels()).to_string()));
        }
        let plan = synthesize_recovery(&b.tree, set)?;
        let mut scratch = self.backend.clone();
        scratch.apply_plan(&plan, b.offset)?;
        let rho = scratch.reduced_density(&[b.offset + plan.target])?;
        Ok(Recovered {
            plan,
            rho: [[rho[0][0], rho[0][1]], [rho[1][0], rho[1][1]]],
        })
    }

    /// Joint output state of several live blocks, each recovered by all of
    /// its players; bit `i` of the matrix index is `ids[i]`.
    pub fn recover_joint(&self, ids: &[BlockId]) -> Result<Vec<Vec<C64>>, ProtocolError> {
        let mut scratch = self.backend.clone();
        let mut targets = Vec::with_capacity(ids.len());
        for &id in ids {
            let b = self.live_block(id)?;
            let plan = synthesize_recovery(&b.tree, b.tree.structure().all_players())?;
            scratch.apply_plan(&plan, b.offset)?;
            targets.push(b.offset + plan.target);
        }
        scratch.reduced_density(&targets)
    }

    /// Dense reduced state on session qubits.
    pub fn reduced_density(&self, qubits: &[usize]) -> Result<Vec<Vec<C64>>, ProtocolError> {
        self.backend.reduced_density(qubits)
    }

    /// `⟨P⟩` for a Pauli string given per session qubit.
    pub fn pauli_expectation(&self, paulis: &[(usize, char)]) -> Result<f64, ProtocolError> {
        match &self.backend {
            Backend::Sparse(s) => Ok(s.pauli_expectation(paulis)?),
            Backend::Stab(t) => {
                let mut w = PauliWord::identity(t.qubit_count());
                for &(q, l) in paulis {
                    w.set_letter(q, l);
                }
                Ok(t.expectation(&w)?)
            }
        }
    }
}

/// `⟨φ|ρ|φ⟩` for dense `ρ` and amplitudes `φ`.
pub fn dense_fidelity(rho: &[Vec<C64>], phi: &[C64]) -> f64 {
    let mut acc = C64::new(0.0, 0.0);
    for (r, row) in rho.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            acc += phi[r].conj() * v * phi[c];
        }
    }
    acc.re
}
