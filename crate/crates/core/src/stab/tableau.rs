//! Stabilizer tableau with destabilizers, logical representatives and a
//! small dense register holding the logical amplitudes.
//!
//! The physical state is `Σ_m ψ_m |m̄⟩`, where `|0̄…0⟩` is the joint `+1`
//! eigenstate of every generator and every `LZ_j`, and `|m̄⟩` is reached from
//! it by the `LX_j`. Clifford gates conjugate every row and leave `ψ` alone.

use num_complex::Complex64 as C64;
use rand::Rng;
use thiserror::Error;

use super::pauli::PauliWord;
use crate::scheme::{SchemeNode, SchemeTree, Slot, MAX_LEAVES};
use crate::statevec::{Gate, SecretQubit};

/// Cap on logical qubits carried in the dense register.
pub const MAX_LOGICAL: usize = 12;

/// Steane check supports, 0-based block positions.
const H_SETS: [[usize; 4]; 3] = [[0, 1, 2, 3], [0, 1, 4, 5], [0, 2, 4, 6]];
/// Z-type destabilizer supports; `V[i]` meets `H_SETS[j]` oddly iff `i == j`.
const V_SETS: [[usize; 2]; 3] = [[0, 4], [0, 2], [0, 1]];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StabError {
    #[error("qubit {qubit} is outside a register of {count}")]
    QubitOutOfRange { qubit: usize, count: usize },
    #[error("control and target are both qubit {0}")]
    SameQubit(usize),
    #[error("{0} is not a Clifford gate")]
    NonClifford(Gate),
    #[error("logical register full ({MAX_LOGICAL} qubits)")]
    RegisterFull,
    #[error("{0} physical qubits exceeds the cap of {MAX_LEAVES}")]
    TooManyQubits(usize),
    #[error("measured operator is not Hermitian")]
    NotHermitian,
    #[error("measured operator is the identity")]
    Identity,
    #[error("word has {got} qubits, tableau has {want}")]
    WidthMismatch { got: usize, want: usize },
    #[error("no logical qubit {0}")]
    NoLogical(usize),
    #[error("player set cannot recover the secret")]
    NotRecoverable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LogicalOp {
    X,
    Z,
}

/// Origin of a measurement outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeasureKind {
    /// Anticommuted with a generator: uniformly random.
    Random,
    /// In the stabilizer group: fixed.
    Deterministic,
    /// Had logical content: sampled from the register.
    Logical,
}

#[derive(Clone, Debug)]
pub struct HybridTableau {
    n: usize,
    gens: Vec<PauliWord>,
    destabs: Vec<PauliWord>,
    lx: Vec<PauliWord>,
    lz: Vec<PauliWord>,
    register: Vec<C64>,
}

impl Default for HybridTableau {
    fn default() -> Self {
        Self::new()
    }
}

impl HybridTableau {
    pub fn new() -> Self {
        HybridTableau {
            n: 0,
            gens: Vec::new(),
            destabs: Vec::new(),
            lx: Vec::new(),
            lz: Vec::new(),
            register: vec![C64::new(1.0, 0.0)],
        }
    }

    pub fn qubit_count(&self) -> usize {
        self.n
    }

    pub fn logical_count(&self) -> usize {
        self.lx.len()
    }

    pub fn generators(&self) -> &[PauliWord] {
        &self.gens
    }

    pub fn destabilizers(&self) -> &[PauliWord] {
        &self.destabs
    }

    pub fn logical_x(&self, j: usize) -> &PauliWord {
        &self.lx[j]
    }

    pub fn logical_z(&self, j: usize) -> &PauliWord {
        &self.lz[j]
    }

    pub fn register(&self) -> &[C64] {
        &self.register
    }

    fn check(&self, q: usize) -> Result<(), StabError> {
        if q >= self.n {
            Err(StabError::QubitOutOfRange {
                qubit: q,
                count: self.n,
            })
        } else {
            Ok(())
        }
    }

    fn rows_mut(&mut self) -> impl Iterator<Item = &mut PauliWord> {
        self.gens
            .iter_mut()
            .chain(self.destabs.iter_mut())
            .chain(self.lx.iter_mut())
            .chain(self.lz.iter_mut())
    }

    /// Appends the concatenated encoding of `secret` under `tree` on fresh
    /// qubits; returns the offset of its first leaf. The new logical qubit
    /// takes the highest register index.
    pub fn append_tree(&mut self, tree: &SchemeTree, secret: SecretQubit) -> Result<usize, StabError> {
        self.append_node(tree.root(), secret)
    }

    pub fn append_node(&mut self, root: &SchemeNode, secret: SecretQubit) -> Result<usize, StabError> {
        if self.lx.len() >= MAX_LOGICAL {
            return Err(StabError::RegisterFull);
        }
        let leaves = root.leaf_count() as usize;
        let offset = self.n;
        let n = offset + leaves;
        if n > MAX_LEAVES {
            return Err(StabError::TooManyQubits(n));
        }
        self.n = n;
        for row in self.rows_mut() {
            row.extend(leaves);
        }
        let mut gens = Vec::new();
        let mut destabs = Vec::new();
        lift_blocks(root, offset, n, &mut gens, &mut destabs);
        self.gens.extend(gens);
        self.destabs.extend(destabs);
        self.lx.push(PauliWord::x_on(n, offset..n));
        self.lz.push(PauliWord::z_on(n, offset..n));
        let k = self.register.len();
        let mut reg = vec![C64::new(0.0, 0.0); 2 * k];
        for (m, a) in self.register.iter().enumerate() {
            reg[m] = a * secret.alpha;
            reg[m + k] = a * secret.beta;
        }
        self.register = reg;
        Ok(offset)
    }

    pub fn apply_1q(&mut self, gate: Gate, q: usize) -> Result<(), StabError> {
        self.check(q)?;
        if !gate.is_clifford() {
            return Err(StabError::NonClifford(gate));
        }
        for row in self.rows_mut() {
            row.conj_gate(gate, q);
        }
        Ok(())
    }

    pub fn apply_cnot(&mut self, c: usize, t: usize) -> Result<(), StabError> {
        self.check(c)?;
        self.check(t)?;
        if c == t {
            return Err(StabError::SameQubit(c));
        }
        for row in self.rows_mut() {
            row.conj_cnot(c, t);
        }
        Ok(())
    }

    /// Writes `p` (commuting with every generator) as `g_I · lift(m)` and
    /// returns the register word `m`, phase included.
    fn decompose(&self, p: &PauliWord) -> PauliWord {
        let k = self.lx.len();
        let mut q = PauliWord::identity(self.n);
        for (g, d) in self.gens.iter().zip(&self.destabs) {
            if !p.commutes(d) {
                q.mul_assign(g);
            }
        }
        let mut reg = PauliWord::identity(k);
        for j in 0..k {
            reg.set(j, !p.commutes(&self.lz[j]), !p.commutes(&self.lx[j]));
        }
        q.mul_assign(&self.lift(&reg));
        assert!(
            q.same_letters(p),
            "tableau invariant broken: operator not spanned by generators and logicals"
        );
        reg.set_phase(p.phase() + 4 - q.phase());
        reg
    }

    /// Physical word for a register Pauli, in the current logical frame.
    pub fn lift(&self, reg: &PauliWord) -> PauliWord {
        let mut out = PauliWord::identity(self.n);
        for j in 0..reg.len() {
            if reg.x(j) {
                out.mul_assign(&self.lx[j]);
            }
            if reg.z(j) {
                out.mul_assign(&self.lz[j]);
            }
        }
        out.set_phase(out.phase() + reg.phase());
        out
    }

    fn first_anticommuting(&self, p: &PauliWord) -> Option<usize> {
        self.gens.iter().position(|g| !p.commutes(g))
    }

    /// `⟨P⟩` on the current state.
    pub fn expectation(&self, p: &PauliWord) -> Result<f64, StabError> {
        self.check_width(p)?;
        if self.first_anticommuting(p).is_some() {
            return Ok(0.0);
        }
        let reg = self.decompose(p);
        let moved = apply_register_pauli(&reg, &self.register);
        let v: C64 = self
            .register
            .iter()
            .zip(&moved)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(v.re)
    }

    fn check_width(&self, p: &PauliWord) -> Result<(), StabError> {
        if p.len() != self.n {
            return Err(StabError::WidthMismatch {
                got: p.len(),
                want: self.n,
            });
        }
        Ok(())
    }

    /// Measures a Hermitian Pauli; one uniform draw is consumed per call.
    pub fn measure_pauli(
        &mut self,
        p: &PauliWord,
        rng: &mut impl Rng,
    ) -> Result<(u8, MeasureKind), StabError> {
        self.check_width(p)?;
        if !p.is_hermitian() {
            return Err(StabError::NotHermitian);
        }
        if p.is_identity_up_to_phase() {
            return Err(StabError::Identity);
        }
        let draw: f64 = rng.gen();
        if let Some(pivot) = self.first_anticommuting(p) {
            let g = self.gens[pivot].clone();
            for (i, row) in self.gens.iter_mut().enumerate() {
                if i != pivot && !row.commutes(p) {
                    row.mul_assign(&g);
                }
            }
            for (i, row) in self.destabs.iter_mut().enumerate() {
                if i != pivot && !row.commutes(p) {
                    row.mul_assign(&g);
                }
            }
            for row in self.lx.iter_mut().chain(self.lz.iter_mut()) {
                if !row.commutes(p) {
                    row.mul_assign(&g);
                }
            }
            let outcome = u8::from(draw < 0.5);
            let mut new = p.clone();
            if outcome == 1 {
                new.negate();
            }
            self.destabs[pivot] = g;
            self.gens[pivot] = new;
            return Ok((outcome, MeasureKind::Random));
        }
        let reg = self.decompose(p);
        if reg.is_identity_up_to_phase() {
            let outcome = u8::from(reg.phase() == 2);
            return Ok((outcome, MeasureKind::Deterministic));
        }
        let m = self.reduce_to_z(reg);
        let (sign, m) = m;
        let k = self.lx.len();
        let bit = 1usize << m;
        let p1: f64 = (0..1 << k)
            .filter(|i| i & bit != 0)
            .map(|i| self.register[i].norm_sqr())
            .sum();
        let b = if p1 >= 1.0 - 1e-12 {
            1
        } else if p1 <= 1e-12 {
            0
        } else {
            u8::from(draw < p1)
        };
        let prob = if b == 1 { p1 } else { 1.0 - p1 };
        let mut gen = self.lz[m].clone();
        if b == 1 {
            gen.negate();
        }
        self.gens.push(gen);
        self.destabs.push(self.lx[m].clone());
        self.lx.remove(m);
        self.lz.remove(m);
        let scale = 1.0 / prob.sqrt();
        let mut reg = Vec::with_capacity(1 << (k - 1));
        for r in 0..1usize << (k - 1) {
            let low = r & (bit - 1);
            let high = (r >> m) << (m + 1);
            reg.push(self.register[high | low | (usize::from(b) << m)] * scale);
        }
        self.register = reg;
        Ok((b ^ u8::from(sign), MeasureKind::Logical))
    }

    pub fn measure_z(&mut self, q: usize, rng: &mut impl Rng) -> Result<u8, StabError> {
        self.check(q)?;
        Ok(self.measure_pauli(&PauliWord::single(self.n, q, 'Z'), rng)?.0)
    }

    /// Changes the logical frame until `reg` is `±Z_m`; returns the sign
    /// (true for `-`) and `m`.
    fn reduce_to_z(&mut self, mut reg: PauliWord) -> (bool, usize) {
        let k = reg.len();
        for j in 0..k {
            if reg.x(j) && reg.z(j) {
                self.frame(FrameGate::One(Gate::Sdg, j));
                reg.conj_sdg(j);
            }
            if reg.x(j) {
                self.frame(FrameGate::One(Gate::H, j));
                reg.conj_h(j);
            }
        }
        let support: Vec<usize> = (0..k).filter(|&j| reg.z(j)).collect();
        let m = *support.last().expect("nontrivial logical content");
        for &j in &support[..support.len() - 1] {
            self.frame(FrameGate::Cnot(j, m));
            reg.conj_cnot(j, m);
        }
        debug_assert!(reg.phase().is_multiple_of(2));
        (reg.phase() == 2, m)
    }

    /// Re-expresses the same physical state after the logical unitary `V`
    /// is moved into the register: `ψ ← Vψ`, logical reps `← E V† P V E†`.
    fn frame(&mut self, v: FrameGate) {
        let k = self.lx.len();
        let mut new_lx = Vec::with_capacity(k);
        let mut new_lz = Vec::with_capacity(k);
        for j in 0..k {
            for (letter, out) in [('X', &mut new_lx), ('Z', &mut new_lz)] {
                let mut w = PauliWord::single(k, j, letter);
                v.conj_inverse(&mut w);
                out.push(self.lift(&w));
            }
        }
        self.lx = new_lx;
        self.lz = new_lz;
        v.apply(&mut self.register);
    }

    /// Shortest-search-free representative of a logical operator supported
    /// inside `support`: generators are reduced on the outside columns (X
    /// columns ascending, then Z columns), free choices left at zero.
    pub fn find_logical_representative(
        &self,
        logical: &PauliWord,
        support: &[usize],
    ) -> Option<PauliWord> {
        let outside = outside_columns(self.n, support);
        let (rows, pivots) = reduce_rows(self.gens.clone(), &outside);
        let mut target = self.lift(logical);
        reduce_by(&mut target, &rows, &pivots);
        if outside.iter().any(|c| c.get(&target)) {
            None
        } else {
            Some(target)
        }
    }

    pub fn find_representative(
        &self,
        j: usize,
        which: LogicalOp,
        support: &[usize],
    ) -> Result<Option<PauliWord>, StabError> {
        let k = self.lx.len();
        if j >= k {
            return Err(StabError::NoLogical(j));
        }
        let letter = match which {
            LogicalOp::X => 'X',
            LogicalOp::Z => 'Z',
        };
        Ok(self.find_logical_representative(&PauliWord::single(k, j, letter), support))
    }

    /// Both `X̄_j` and `Z̄_j` have representatives on `support`.
    pub fn recoverable(&self, j: usize, support: &[usize]) -> Result<bool, StabError> {
        Ok(self.find_representative(j, LogicalOp::X, support)?.is_some()
            && self.find_representative(j, LogicalOp::Z, support)?.is_some())
    }

    /// Some nontrivial logical Pauli has a representative on `support`.
    pub fn leaks(&self, support: &[usize]) -> bool {
        let outside = outside_columns(self.n, support);
        let (rows, pivots) = reduce_rows(self.gens.clone(), &outside);
        let mut logical: Vec<PauliWord> = self.lx.iter().chain(&self.lz).cloned().collect();
        for row in &mut logical {
            reduce_by(row, &rows, &pivots);
        }
        let count = logical.len();
        let (reduced, pivots) = reduce_rows(logical, &outside);
        pivots.len() < count || reduced.iter().any(|r| outside.iter().all(|c| !c.get(r)))
    }

    /// Generator commutation, independence and logical pairing.
    pub fn check_invariants(&self) -> Result<(), String> {
        let r = self.gens.len();
        let k = self.lx.len();
        if r + k != self.n || self.destabs.len() != r {
            return Err(format!("{r} generators and {k} logicals on {} qubits", self.n));
        }
        if (1usize << k) != self.register.len() {
            return Err("register size mismatch".into());
        }
        let norm: f64 = self.register.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(format!("register norm {norm}"));
        }
        for (i, g) in self.gens.iter().enumerate() {
            if !g.is_hermitian() {
                return Err(format!("generator {i} not Hermitian"));
            }
            for (j, h) in self.gens.iter().enumerate().skip(i + 1) {
                if !g.commutes(h) {
                    return Err(format!("generators {i} and {j} anticommute"));
                }
            }
            for (j, d) in self.destabs.iter().enumerate() {
                if g.commutes(d) == (i == j) {
                    return Err(format!("generator {i} vs destabilizer {j}"));
                }
            }
            for j in 0..k {
                if !g.commutes(&self.lx[j]) || !g.commutes(&self.lz[j]) {
                    return Err(format!("generator {i} vs logical {j}"));
                }
            }
        }
        for (i, d) in self.destabs.iter().enumerate() {
            for j in 0..k {
                if !d.commutes(&self.lx[j]) || !d.commutes(&self.lz[j]) {
                    return Err(format!("destabilizer {i} vs logical {j}"));
                }
            }
        }
        for a in 0..k {
            if !self.lx[a].is_hermitian() || !self.lz[a].is_hermitian() {
                return Err(format!("logical {a} not Hermitian"));
            }
            for b in 0..k {
                let expect = a != b;
                if self.lx[a].commutes(&self.lz[b]) != expect {
                    return Err(format!("LX_{a} vs LZ_{b}"));
                }
                if !self.lx[a].commutes(&self.lx[b]) || !self.lz[a].commutes(&self.lz[b]) {
                    return Err(format!("logicals {a},{b}"));
                }
            }
        }
        let (_, pivots) = reduce_rows(self.gens.clone(), &outside_columns(self.n, &[]));
        if pivots.len() != r {
            return Err("generators are dependent".into());
        }
        Ok(())
    }

    /// One row per line in `±{I,X,Y,Z}^N` form.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for g in &self.gens {
            out.push_str(&format!("{g}\n"));
        }
        for j in 0..self.lx.len() {
            out.push_str(&format!("LX_{j} {}\n", self.lx[j]));
            out.push_str(&format!("LZ_{j} {}\n", self.lz[j]));
        }
        out
    }
}

/// Gates on the logical register.
#[derive(Clone, Copy, Debug)]
enum FrameGate {
    One(Gate, usize),
    Cnot(usize, usize),
}

impl FrameGate {
    fn conj_inverse(self, w: &mut PauliWord) {
        match self {
            FrameGate::One(g, j) => {
                w.conj_gate(g.inverse(), j);
            }
            FrameGate::Cnot(c, t) => w.conj_cnot(c, t),
        }
    }

    fn apply(self, reg: &mut [C64]) {
        match self {
            FrameGate::One(g, j) => {
                let [[a, b], [c, d]] = g.matrix();
                let bit = 1usize << j;
                for i in 0..reg.len() {
                    if i & bit == 0 {
                        let (u, v) = (reg[i], reg[i | bit]);
                        reg[i] = a * u + b * v;
                        reg[i | bit] = c * u + d * v;
                    }
                }
            }
            FrameGate::Cnot(c, t) => {
                let (cb, tb) = (1usize << c, 1usize << t);
                for i in 0..reg.len() {
                    if i & cb != 0 && i & tb == 0 {
                        reg.swap(i, i | tb);
                    }
                }
            }
        }
    }
}

/// `Pψ` for a register Pauli `i^e X^x Z^z`.
fn apply_register_pauli(p: &PauliWord, psi: &[C64]) -> Vec<C64> {
    let k = p.len();
    let (mut xm, mut zm) = (0usize, 0usize);
    for j in 0..k {
        xm |= usize::from(p.x(j)) << j;
        zm |= usize::from(p.z(j)) << j;
    }
    let coef = C64::i().powu(p.phase() as u32);
    let mut out = vec![C64::new(0.0, 0.0); psi.len()];
    for (m, a) in psi.iter().enumerate() {
        let sign = if (zm & m).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        out[m ^ xm] = a * coef * sign;
    }
    out
}

/// One GF(2) column of the symplectic representation.
#[derive(Clone, Copy, Debug)]
struct Column {
    qubit: usize,
    z: bool,
}

impl Column {
    fn get(&self, p: &PauliWord) -> bool {
        if self.z {
            p.z(self.qubit)
        } else {
            p.x(self.qubit)
        }
    }
}

fn outside_columns(n: usize, support: &[usize]) -> Vec<Column> {
    let mut inside = vec![false; n];
    for &q in support {
        if q < n {
            inside[q] = true;
        }
    }
    let qubits: Vec<usize> = (0..n).filter(|&q| !inside[q]).collect();
    qubits
        .iter()
        .map(|&qubit| Column { qubit, z: false })
        .chain(qubits.iter().map(|&qubit| Column { qubit, z: true }))
        .collect()
}

/// Row-reduces on `columns` in order; returns the reduced rows and, per
/// pivot, `(row index, column)`.
fn reduce_rows(mut rows: Vec<PauliWord>, columns: &[Column]) -> (Vec<PauliWord>, Vec<(usize, Column)>) {
    let mut pivots = Vec::new();
    let mut next = 0;
    for &col in columns {
        if next == rows.len() {
            break;
        }
        let Some(found) = (next..rows.len()).find(|&r| col.get(&rows[r])) else {
            continue;
        };
        rows.swap(next, found);
        let pivot = rows[next].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != next && col.get(row) {
                row.mul_assign(&pivot);
            }
        }
        pivots.push((next, col));
        next += 1;
    }
    (rows, pivots)
}

fn reduce_by(target: &mut PauliWord, rows: &[PauliWord], pivots: &[(usize, Column)]) {
    for &(r, col) in pivots {
        if col.get(target) {
            target.mul_assign(&rows[r]);
        }
    }
}

/// Emits lifted Steane checks and destabilizers for every block instance
/// under `node`, whose leaves start at `offset`; returns the leaf count.
fn lift_blocks(
    node: &SchemeNode,
    offset: usize,
    n: usize,
    gens: &mut Vec<PauliWord>,
    destabs: &mut Vec<PauliWord>,
) -> usize {
    let SchemeNode::Encode(children) = node else {
        return 1;
    };
    let mut ranges = [(0usize, 0usize); 7];
    let mut start = offset;
    for (pos, range) in ranges.iter_mut().enumerate() {
        let child = &children[Slot::of_position(pos).index()];
        let len = lift_blocks(child, start, n, gens, destabs);
        *range = (start, start + len);
        start += len;
    }
    let lifted = |positions: &[usize], letter: char| {
        let qubits = positions.iter().flat_map(|&p| ranges[p].0..ranges[p].1);
        match letter {
            'X' => PauliWord::x_on(n, qubits),
            _ => PauliWord::z_on(n, qubits),
        }
    };
    let dot = |a: &[usize], b: &[usize]| a.iter().filter(|p| b.contains(p)).count() % 2;
    for (i, h) in H_SETS.iter().enumerate() {
        gens.push(lifted(h, 'X'));
        destabs.push(lifted(&V_SETS[i], 'Z'));
    }
    for (j, h) in H_SETS.iter().enumerate() {
        gens.push(lifted(h, 'Z'));
        // w_j = v_j + Σ_i (v_j·v_i) h_i
        let mut w = [false; 7];
        for &p in &V_SETS[j] {
            w[p] ^= true;
        }
        for (i, hi) in H_SETS.iter().enumerate() {
            if dot(&V_SETS[j], &V_SETS[i]) == 1 {
                for &p in hi {
                    w[p] ^= true;
                }
            }
        }
        let w: Vec<usize> = (0..7).filter(|&p| w[p]).collect();
        destabs.push(lifted(&w, 'X'));
    }
    start - offset
}
