//! Sparse state vectors over at most 64 qubits.
//!
//! Qubit `q` is bit `q` of the basis index. Printed bitstrings put qubit 0
//! first, so a 7-qubit codeword reads the same way as its ket.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

pub type C64 = Complex64;

pub const PRUNE_TOL: f64 = 1e-12;
pub const MAX_QUBITS: usize = 26;
pub const MAX_TERMS: usize = 1 << 20;
pub const MAX_KEPT: usize = 14;

/// Codewords of the logical zero, as written in ket order.
pub const ZERO_CODEWORDS: [&str; 8] = [
    "0000000", "1111000", "1100110", "1010101", "0011110", "0101101", "0110011", "1001011",
];
/// Codewords of the logical one.
pub const ONE_CODEWORDS: [&str; 8] = [
    "0000111", "1111111", "1100001", "1010010", "0011001", "0101010", "0110100", "1001100",
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("qubit {qubit} is outside a register of {count}")]
    QubitOutOfRange { qubit: usize, count: usize },
    #[error("control and target are both qubit {0}")]
    SameQubit(usize),
    #[error(
        "state needs {qubits} qubits / {terms} terms, above the sparse limits \
         ({MAX_QUBITS} qubits, {MAX_TERMS} terms); use the stabilizer engine"
    )]
    TooLarge { qubits: usize, terms: usize },
    #[error("cannot keep {0} qubits in a partial trace (limit {MAX_KEPT})")]
    TooManyKept(usize),
    #[error("outcome {0} has zero probability")]
    ZeroProbability(u8),
    #[error("amplitudes are not normalized (|α|²+|β|² = {0})")]
    NotNormalized(f64),
    #[error("register sizes differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("dump line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// A single-qubit secret `α|0⟩ + β|1⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SecretQubit {
    pub alpha: C64,
    pub beta: C64,
}

impl SecretQubit {
    pub fn new(alpha: C64, beta: C64) -> Result<Self, SimError> {
        let norm = alpha.norm_sqr() + beta.norm_sqr();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(SimError::NotNormalized(norm));
        }
        Ok(SecretQubit { alpha, beta })
    }

    /// Rescales to unit norm; fails on the zero vector.
    pub fn normalized(alpha: C64, beta: C64) -> Result<Self, SimError> {
        let norm = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        if norm < 1e-300 {
            return Err(SimError::NotNormalized(0.0));
        }
        Ok(SecretQubit {
            alpha: alpha / norm,
            beta: beta / norm,
        })
    }

    pub fn basis(bit: u8) -> Self {
        if bit == 0 {
            SecretQubit {
                alpha: C64::new(1.0, 0.0),
                beta: C64::new(0.0, 0.0),
            }
        } else {
            SecretQubit {
                alpha: C64::new(0.0, 0.0),
                beta: C64::new(1.0, 0.0),
            }
        }
    }

    /// Haar-random pure state.
    pub fn random(rng: &mut impl Rng) -> Self {
        loop {
            let v: [f64; 4] = [
                gaussian(rng),
                gaussian(rng),
                gaussian(rng),
                gaussian(rng),
            ];
            if let Ok(s) = Self::normalized(C64::new(v[0], v[1]), C64::new(v[2], v[3])) {
                return s;
            }
        }
    }

    pub fn apply(self, gate: Gate) -> Self {
        let [[a, b], [c, d]] = gate.matrix();
        SecretQubit {
            alpha: a * self.alpha + b * self.beta,
            beta: c * self.alpha + d * self.beta,
        }
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &SecretQubit) -> f64 {
        (self.alpha.conj() * other.alpha + self.beta.conj() * other.beta).norm_sqr()
    }
}

fn gaussian(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Single-qubit gates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Gate {
    X,
    Y,
    Z,
    H,
    S,
    Sdg,
    T,
    Tdg,
}

impl Gate {
    pub fn matrix(self) -> [[C64; 2]; 2] {
        let o = C64::new(0.0, 0.0);
        let l = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        let w = C64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
        match self {
            Gate::X => [[o, l], [l, o]],
            Gate::Y => [[o, -i], [i, o]],
            Gate::Z => [[l, o], [o, -l]],
            Gate::H => [[h, h], [h, -h]],
            Gate::S => [[l, o], [o, i]],
            Gate::Sdg => [[l, o], [o, -i]],
            Gate::T => [[l, o], [o, w]],
            Gate::Tdg => [[l, o], [o, w.conj()]],
        }
    }

    pub fn inverse(self) -> Gate {
        match self {
            Gate::S => Gate::Sdg,
            Gate::Sdg => Gate::S,
            Gate::T => Gate::Tdg,
            Gate::Tdg => Gate::T,
            g => g,
        }
    }

    pub fn is_clifford(self) -> bool {
        !matches!(self, Gate::T | Gate::Tdg)
    }

    pub fn name(self) -> &'static str {
        match self {
            Gate::X => "X",
            Gate::Y => "Y",
            Gate::Z => "Z",
            Gate::H => "H",
            Gate::S => "S",
            Gate::Sdg => "SDG",
            Gate::T => "T",
            Gate::Tdg => "TDG",
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Gate {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "X" => Gate::X,
            "Y" => Gate::Y,
            "Z" => Gate::Z,
            "H" => Gate::H,
            "S" => Gate::S,
            "SDG" | "S†" | "SDAG" => Gate::Sdg,
            "T" => Gate::T,
            "TDG" | "T†" | "TDAG" => Gate::Tdg,
            other => return Err(format!("unknown gate `{other}`")),
        })
    }
}

/// Sparse pure state: basis index → amplitude.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseState {
    qubits: usize,
    terms: BTreeMap<u64, C64>,
}

impl SparseState {
    /// `|0…0⟩` on `qubits` qubits.
    pub fn zero(qubits: usize) -> Result<Self, SimError> {
        Self::basis(qubits, 0)
    }

    pub fn basis(qubits: usize, index: u64) -> Result<Self, SimError> {
        check_size(qubits, 1)?;
        let mut terms = BTreeMap::new();
        terms.insert(index, C64::new(1.0, 0.0));
        Ok(SparseState { qubits, terms })
    }

    pub fn from_secret(secret: SecretQubit) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(0, secret.alpha);
        terms.insert(1, secret.beta);
        let mut s = SparseState { qubits: 1, terms };
        s.prune();
        s
    }

    /// Builds a state from explicit terms; amplitudes are taken as given.
    pub fn from_terms<I>(qubits: usize, terms: I) -> Result<Self, SimError>
    where
        I: IntoIterator<Item = (u64, C64)>,
    {
        let mut map = BTreeMap::new();
        for (k, v) in terms {
            if qubits < 64 && k >> qubits != 0 {
                return Err(SimError::QubitOutOfRange {
                    qubit: 63 - k.leading_zeros() as usize,
                    count: qubits,
                });
            }
            *map.entry(k).or_insert(C64::new(0.0, 0.0)) += v;
        }
        check_size(qubits, map.len())?;
        let mut s = SparseState { qubits, terms: map };
        s.prune();
        Ok(s)
    }

    pub fn qubit_count(&self) -> usize {
        self.qubits
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (u64, C64)> + '_ {
        self.terms.iter().map(|(k, v)| (*k, *v))
    }

    pub fn amplitude(&self, index: u64) -> C64 {
        self.terms.get(&index).copied().unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    fn check(&self, q: usize) -> Result<(), SimError> {
        if q >= self.qubits {
            Err(SimError::QubitOutOfRange {
                qubit: q,
                count: self.qubits,
            })
        } else {
            Ok(())
        }
    }

    fn prune(&mut self) {
        self.terms.retain(|_, a| a.norm() >= PRUNE_TOL);
    }

    pub fn apply_1q(&mut self, gate: Gate, q: usize) -> Result<(), SimError> {
        self.check(q)?;
        let bit = 1u64 << q;
        let [[a, b], [c, d]] = gate.matrix();
        match gate {
            Gate::Z | Gate::S | Gate::Sdg | Gate::T | Gate::Tdg => {
                for (k, v) in self.terms.iter_mut() {
                    if k & bit != 0 {
                        *v *= d;
                    }
                }
            }
            Gate::X | Gate::Y => {
                let old = std::mem::take(&mut self.terms);
                self.terms = old
                    .into_iter()
                    .map(|(k, v)| {
                        let phase = if k & bit == 0 { c } else { b };
                        (k ^ bit, v * phase)
                    })
                    .collect();
            }
            Gate::H => {
                let mut next: HashMap<u64, C64> = HashMap::with_capacity(self.terms.len() * 2);
                for (&k, &v) in &self.terms {
                    let k0 = k & !bit;
                    let k1 = k | bit;
                    let (m0, m1) = if k & bit == 0 { (a, c) } else { (b, d) };
                    *next.entry(k0).or_default() += v * m0;
                    *next.entry(k1).or_default() += v * m1;
                }
                check_size(self.qubits, next.len())?;
                self.terms = next.into_iter().collect();
            }
        }
        self.prune();
        Ok(())
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<(), SimError> {
        self.check(control)?;
        self.check(target)?;
        if control == target {
            return Err(SimError::SameQubit(control));
        }
        let (cb, tb) = (1u64 << control, 1u64 << target);
        let old = std::mem::take(&mut self.terms);
        self.terms = old
            .into_iter()
            .map(|(k, v)| if k & cb != 0 { (k ^ tb, v) } else { (k, v) })
            .collect();
        Ok(())
    }

    /// Appends `other` on fresh qubits above the current ones.
    pub fn tensor(&mut self, other: &SparseState) -> Result<(), SimError> {
        let qubits = self.qubits + other.qubits;
        let terms = self.terms.len() * other.terms.len();
        check_size(qubits, terms)?;
        let shift = self.qubits;
        let old = std::mem::take(&mut self.terms);
        for (k, v) in old {
            for (&k2, &v2) in &other.terms {
                self.terms.insert(k | (k2 << shift), v * v2);
            }
        }
        self.qubits = qubits;
        self.prune();
        Ok(())
    }

    /// Replaces qubit `q` by a 7-qubit block at positions `q..q+7`; every
    /// qubit above `q` moves up by six.
    pub fn encode_steane(&mut self, q: usize) -> Result<(), SimError> {
        self.check(q)?;
        check_size(self.qubits + 6, self.terms.len() * 8)?;
        let words = codeword_masks();
        let amp = 1.0 / 8f64.sqrt();
        let low = (1u64 << q) - 1;
        let old = std::mem::take(&mut self.terms);
        for (k, v) in old {
            let b = ((k >> q) & 1) as usize;
            let base = (k & low) | ((k >> (q + 1)) << (q + 7));
            for w in &words[b] {
                self.terms.insert(base | (w << q), v * amp);
            }
        }
        self.qubits += 6;
        Ok(())
    }

    /// Probability that qubit `q` reads 1.
    pub fn prob_one(&self, q: usize) -> Result<f64, SimError> {
        self.check(q)?;
        let bit = 1u64 << q;
        Ok(self
            .terms
            .iter()
            .filter(|(k, _)| *k & bit != 0)
            .map(|(_, v)| v.norm_sqr())
            .sum::<f64>()
            / self.norm_sqr())
    }

    /// Projects qubit `q` onto `outcome` and renormalizes; returns the
    /// probability of that outcome.
    pub fn postselect(&mut self, q: usize, outcome: u8) -> Result<f64, SimError> {
        let p1 = self.prob_one(q)?;
        let p = if outcome == 1 { p1 } else { 1.0 - p1 };
        if p < PRUNE_TOL {
            return Err(SimError::ZeroProbability(outcome));
        }
        let bit = 1u64 << q;
        let want = if outcome == 1 { bit } else { 0 };
        let scale = 1.0 / self.norm_sqr().sqrt() / p.sqrt();
        self.terms.retain(|k, _| k & bit == want);
        for v in self.terms.values_mut() {
            *v *= scale;
        }
        self.prune();
        Ok(p)
    }

    /// Samples a Z measurement of qubit `q` with one draw from `rng`.
    pub fn measure_z(&mut self, q: usize, rng: &mut impl Rng) -> Result<u8, SimError> {
        let p1 = self.prob_one(q)?;
        let draw: f64 = rng.gen();
        let outcome = if p1 >= 1.0 - PRUNE_TOL {
            1
        } else if p1 <= PRUNE_TOL {
            0
        } else {
            u8::from(draw < p1)
        };
        self.postselect(q, outcome)?;
        Ok(outcome)
    }

    /// Removes qubits `lo..lo+len`, which must be in a product state with
    /// the rest (e.g. a fully measured block); higher qubits move down.
    pub fn drop_product_block(&mut self, lo: usize, len: usize) -> Result<(), SimError> {
        if len == 0 {
            return Ok(());
        }
        self.check(lo + len - 1)?;
        let mask = ((1u64 << len) - 1) << lo;
        let (&pattern, _) = self
            .terms
            .iter()
            .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
            .expect("state has terms");
        let pattern = pattern & mask;
        let low = (1u64 << lo) - 1;
        let kept: Vec<(u64, C64)> = self
            .terms
            .iter()
            .filter(|(k, _)| *k & mask == pattern)
            .map(|(&k, &v)| ((k & low) | ((k >> (lo + len)) << lo), v))
            .collect();
        let norm: f64 = kept.iter().map(|(_, v)| v.norm_sqr()).sum::<f64>().sqrt();
        self.terms = kept.into_iter().map(|(k, v)| (k, v / norm)).collect();
        self.qubits -= len;
        Ok(())
    }

    /// Exact distribution of the joint Z readout of `qubits`; bit `i` of
    /// each key is `qubits[i]`.
    pub fn z_distribution(&self, qubits: &[usize]) -> Result<BTreeMap<u64, f64>, SimError> {
        for &q in qubits {
            self.check(q)?;
        }
        let mut out = BTreeMap::new();
        let norm = self.norm_sqr();
        for (&k, v) in &self.terms {
            *out.entry(gather(k, qubits)).or_insert(0.0) += v.norm_sqr() / norm;
        }
        Ok(out)
    }

    pub fn inner(&self, other: &SparseState) -> Result<C64, SimError> {
        if self.qubits != other.qubits {
            return Err(SimError::DimensionMismatch(self.qubits, other.qubits));
        }
        let (small, large, flip) = if self.terms.len() <= other.terms.len() {
            (self, other, false)
        } else {
            (other, self, true)
        };
        let mut acc = C64::new(0.0, 0.0);
        for (k, v) in &small.terms {
            if let Some(w) = large.terms.get(k) {
                acc += if flip { w.conj() * v } else { v.conj() * w };
            }
        }
        Ok(acc)
    }

    /// `|⟨a|b⟩|²`.
    pub fn fidelity(&self, other: &SparseState) -> Result<f64, SimError> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// `⟨ψ|P|ψ⟩` for a Pauli string given as `(qubit, 'X'|'Y'|'Z')` pairs.
    pub fn pauli_expectation(&self, paulis: &[(usize, char)]) -> Result<f64, SimError> {
        let mut moved = self.clone();
        for &(q, p) in paulis {
            let g = match p {
                'X' => Gate::X,
                'Y' => Gate::Y,
                'Z' => Gate::Z,
                _ => continue,
            };
            moved.apply_1q(g, q)?;
        }
        Ok(self.inner(&moved)?.re / self.norm_sqr())
    }

    /// Reduced density matrix on `keep`; kept qubit `keep[i]` is bit `i` of
    /// the row and column indices.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMap, SimError> {
        if keep.len() > MAX_KEPT {
            return Err(SimError::TooManyKept(keep.len()));
        }
        let mut mask = 0u64;
        for &q in keep {
            self.check(q)?;
            mask |= 1 << q;
        }
        let norm = self.norm_sqr();
        let mut groups: BTreeMap<u64, Vec<(u64, C64)>> = BTreeMap::new();
        for (&k, &v) in &self.terms {
            groups.entry(k & !mask).or_default().push((gather(k, keep), v));
        }
        let mut entries: HashMap<(u64, u64), C64> = HashMap::new();
        for group in groups.values() {
            for &(r, a) in group {
                for &(c, b) in group {
                    *entries.entry((r, c)).or_default() += a * b.conj() / norm;
                }
            }
        }
        let entries = entries
            .into_iter()
            .filter(|(_, v)| v.norm() >= PRUNE_TOL)
            .collect();
        Ok(DensityMap {
            qubits: keep.to_vec(),
            entries,
        })
    }

    /// One `bitstring re im` line per term, sorted by bitstring.
    pub fn dump(&self) -> String {
        let mut lines: Vec<(String, C64)> = self
            .terms
            .iter()
            .map(|(&k, &v)| (bitstring(k, self.qubits), v))
            .collect();
        lines.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out = String::new();
        for (bits, v) in lines {
            out.push_str(&format!("{bits} {:.16e} {:.16e}\n", v.re, v.im));
        }
        out
    }

    pub fn parse_dump(text: &str) -> Result<Self, SimError> {
        let mut qubits = None;
        let mut terms = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: &str| SimError::Parse {
                line: i + 1,
                message: message.into(),
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(err("expected `bitstring re im`"));
            }
            let bits = fields[0];
            if !bits.chars().all(|c| c == '0' || c == '1') || bits.len() > 64 {
                return Err(err("bad bitstring"));
            }
            match qubits {
                None => qubits = Some(bits.len()),
                Some(n) if n != bits.len() => return Err(err("bitstring length changes")),
                _ => {}
            }
            let re: f64 = fields[1].parse().map_err(|_| err("bad real part"))?;
            let im: f64 = fields[2].parse().map_err(|_| err("bad imaginary part"))?;
            let index = bits
                .chars()
                .enumerate()
                .fold(0u64, |acc, (j, c)| acc | (u64::from(c == '1') << j));
            terms.push((index, C64::new(re, im)));
        }
        let qubits = qubits.ok_or(SimError::Parse {
            line: 0,
            message: "empty dump".into(),
        })?;
        Self::from_terms(qubits, terms)
    }
}

/// Packs the bits of `k` at `positions` into a dense index.
pub fn gather(k: u64, positions: &[usize]) -> u64 {
    positions
        .iter()
        .enumerate()
        .fold(0, |acc, (i, &q)| acc | (((k >> q) & 1) << i))
}

/// Qubit 0 leftmost.
pub fn bitstring(k: u64, len: usize) -> String {
    (0..len).map(|i| if (k >> i) & 1 == 1 { '1' } else { '0' }).collect()
}

/// Codewords as 7-bit masks with position `i` of the ket at bit `i`.
pub fn codeword_masks() -> [[u64; 8]; 2] {
    let parse = |w: &str| {
        w.chars()
            .enumerate()
            .fold(0u64, |acc, (i, c)| acc | (u64::from(c == '1') << i))
    };
    let mut out = [[0u64; 8]; 2];
    for i in 0..8 {
        out[0][i] = parse(ZERO_CODEWORDS[i]);
        out[1][i] = parse(ONE_CODEWORDS[i]);
    }
    out
}

fn check_size(qubits: usize, terms: usize) -> Result<(), SimError> {
    if qubits > MAX_QUBITS || terms > MAX_TERMS {
        Err(SimError::TooLarge { qubits, terms })
    } else {
        Ok(())
    }
}

/// Sparse reduced density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMap {
    qubits: Vec<usize>,
    entries: BTreeMap<(u64, u64), C64>,
}

impl DensityMap {
    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits.len()
    }

    pub fn get(&self, row: u64, col: u64) -> C64 {
        self.entries.get(&(row, col)).copied().unwrap_or_default()
    }

    pub fn entries(&self) -> impl Iterator<Item = ((u64, u64), C64)> + '_ {
        self.entries.iter().map(|(k, v)| (*k, *v))
    }

    pub fn trace(&self) -> C64 {
        self.entries
            .iter()
            .filter(|((r, c), _)| r == c)
            .map(|(_, v)| *v)
            .sum()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.entries
            .iter()
            .all(|(&(r, c), v)| (self.get(c, r).conj() - v).norm() <= tol)
    }

    /// Largest entrywise difference.
    pub fn max_abs_diff(&self, other: &DensityMap) -> f64 {
        let mut worst: f64 = 0.0;
        for (&key, v) in &self.entries {
            worst = worst.max((v - other.get(key.0, key.1)).norm());
        }
        for (&key, v) in &other.entries {
            if !self.entries.contains_key(&key) {
                worst = worst.max(v.norm());
            }
        }
        worst
    }

    /// `Tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        self.entries
            .iter()
            .map(|(&(r, c), v)| (v * self.get(c, r)).re)
            .sum()
    }

    /// `⟨φ|ρ|φ⟩` for a vector given over the kept qubits.
    pub fn expectation(&self, phi: &SparseState) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (&(r, c), v) in &self.entries {
            acc += phi.amplitude(r).conj() * v * phi.amplitude(c);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn encoded(secret: SecretQubit) -> SparseState {
        let mut s = SparseState::from_secret(secret);
        s.encode_steane(0).unwrap();
        s
    }

    #[test]
    fn single_qubit_gates() {
        let mut s = SparseState::zero(1).unwrap();
        s.apply_1q(Gate::X, 0).unwrap();
        assert_eq!(s.amplitude(1), c(1.0, 0.0));
        let mut s = SparseState::zero(1).unwrap();
        s.apply_1q(Gate::H, 0).unwrap();
        assert!((s.amplitude(0).re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((s.amplitude(1).re - FRAC_1_SQRT_2).abs() < 1e-15);
        s.apply_1q(Gate::T, 0).unwrap();
        let w = C64::from_polar(FRAC_1_SQRT_2, std::f64::consts::FRAC_PI_4);
        assert!((s.amplitude(1) - w).norm() < 1e-15);
        assert!(s.apply_1q(Gate::Z, 1).is_err());
    }

    #[test]
    fn cnot_examples() {
        let mut s = SparseState::basis(2, 0b01).unwrap();
        s.apply_cnot(0, 1).unwrap();
        assert_eq!(s.amplitude(0b11), c(1.0, 0.0));
        let mut s = SparseState::zero(2).unwrap();
        s.apply_1q(Gate::H, 0).unwrap();
        s.apply_cnot(0, 1).unwrap();
        assert_eq!(s.term_count(), 2);
        assert!((s.amplitude(0b11).re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(s.apply_cnot(1, 1), Err(SimError::SameQubit(1)));
    }

    #[test]
    fn encoding_basis_states_gives_codewords() {
        for (bit, words) in [(0u8, ZERO_CODEWORDS), (1, ONE_CODEWORDS)] {
            let s = encoded(SecretQubit::basis(bit));
            let dump: Vec<String> = s.terms().map(|(k, _)| bitstring(k, 7)).collect();
            let mut expected: Vec<String> = words.iter().map(|w| w.to_string()).collect();
            expected.sort_by_key(|w| {
                w.chars()
                    .enumerate()
                    .fold(0u64, |a, (i, ch)| a | (u64::from(ch == '1') << i))
            });
            assert_eq!(dump, expected);
            for (_, a) in s.terms() {
                assert!((a.re - 1.0 / 8f64.sqrt()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn codeword_parities() {
        let masks = codeword_masks();
        for (value, words) in masks.iter().enumerate() {
            for w in words {
                assert_eq!(w.count_ones() as usize % 2, value);
                assert_eq!((w >> 4).count_ones() as usize % 2, value);
            }
        }
    }

    #[test]
    fn encode_shifts_higher_qubits() {
        let mut s = SparseState::basis(2, 0b10).unwrap();
        s.encode_steane(0).unwrap();
        assert_eq!(s.qubit_count(), 8);
        assert!(s.terms().all(|(k, _)| k >> 7 == 1));
    }

    #[test]
    fn reduced_states_of_the_block() {
        let secret = SecretQubit::new(c(0.6, 0.0), c(0.0, 0.8)).unwrap();
        let s = encoded(secret);
        let rho_b = s.partial_trace(&[4]).unwrap();
        assert!((rho_b.get(0, 0).re - 0.5).abs() < 1e-12);
        assert!((rho_b.get(1, 1).re - 0.5).abs() < 1e-12);
        assert!(rho_b.get(0, 1).norm() < 1e-12);
        let rho_c = s.partial_trace(&[5, 6]).unwrap();
        for r in 0..4 {
            for col in 0..4 {
                let want = if r == col { 0.25 } else { 0.0 };
                assert!((rho_c.get(r, col) - c(want, 0.0)).norm() < 1e-12);
            }
        }
        // ¼ Σ |G_ij⟩⟨G_ij| with G_ij the 4-qubit GHZ with bits i,j flipped
        let rho_a = s.partial_trace(&[0, 1, 2, 3]).unwrap();
        let mut ghz_mix = BTreeMap::new();
        for flip in [0u64, 0b0011, 0b0101, 0b0110] {
            for r in [flip, flip ^ 0b1111] {
                for col in [flip, flip ^ 0b1111] {
                    *ghz_mix.entry((r, col)).or_insert(c(0.0, 0.0)) += c(0.125, 0.0);
                }
            }
        }
        let oracle = DensityMap {
            qubits: vec![0, 1, 2, 3],
            entries: ghz_mix,
        };
        assert!(rho_a.max_abs_diff(&oracle) < 1e-12);
        assert!((rho_a.trace().re - 1.0).abs() < 1e-12);
        assert!(rho_a.is_hermitian(1e-12));
    }

    #[test]
    fn transversal_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let secret = SecretQubit::random(&mut rng);
            for (physical, logical) in [
                (Gate::X, Gate::X),
                (Gate::Z, Gate::Z),
                (Gate::H, Gate::H),
                (Gate::Sdg, Gate::S),
            ] {
                let mut s = encoded(secret);
                for q in 0..7 {
                    s.apply_1q(physical, q).unwrap();
                }
                let target = encoded(secret.apply(logical));
                assert!((s.fidelity(&target).unwrap() - 1.0).abs() < 1e-10);
                assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn transversal_cnot() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = SecretQubit::random(&mut rng);
        let b = SecretQubit::random(&mut rng);
        let mut s = encoded(a);
        s.tensor(&encoded(b)).unwrap();
        for q in 0..7 {
            s.apply_cnot(q, q + 7).unwrap();
        }
        let mut logical = SparseState::from_secret(a);
        logical.tensor(&SparseState::from_secret(b)).unwrap();
        logical.apply_cnot(0, 1).unwrap();
        logical.encode_steane(1).unwrap();
        logical.encode_steane(0).unwrap();
        assert!((s.fidelity(&logical).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn measurement_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut s = SparseState::basis(1, 1).unwrap();
        assert_eq!(s.measure_z(0, &mut rng).unwrap(), 1);
        let mut ones = 0;
        for seed in 0..10_000u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut s = SparseState::zero(1).unwrap();
            s.apply_1q(Gate::H, 0).unwrap();
            ones += s.measure_z(0, &mut rng).unwrap() as u32;
        }
        assert!((f64::from(ones) / 10_000.0 - 0.5).abs() < 0.02);
        let block = encoded(SecretQubit::basis(0));
        assert!((block.prob_one(4).unwrap() - 0.5).abs() < 1e-12);
        let mut again = SparseState::zero(1).unwrap();
        again.apply_1q(Gate::H, 0).unwrap();
        let mut r1 = ChaCha8Rng::seed_from_u64(42);
        let mut r2 = ChaCha8Rng::seed_from_u64(42);
        let mut copy = again.clone();
        assert_eq!(
            again.measure_z(0, &mut r1).unwrap(),
            copy.measure_z(0, &mut r2).unwrap()
        );
    }

    #[test]
    fn fidelity_examples() {
        let zero = SparseState::zero(1).unwrap();
        let one = SparseState::basis(1, 1).unwrap();
        let mut plus = zero.clone();
        plus.apply_1q(Gate::H, 0).unwrap();
        assert!((zero.fidelity(&zero).unwrap() - 1.0).abs() < 1e-15);
        assert!(zero.fidelity(&one).unwrap().abs() < 1e-15);
        assert!((zero.fidelity(&plus).unwrap() - 0.5).abs() < 1e-15);
        assert!(zero.fidelity(&SparseState::zero(2).unwrap()).is_err());
    }

    #[test]
    fn dump_round_trip() {
        let s = encoded(SecretQubit::basis(1));
        let text = s.dump();
        assert_eq!(text.lines().count(), 8);
        let back = SparseState::parse_dump(&text).unwrap();
        assert!((back.fidelity(&s).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(
            SparseState::parse_dump("01 1.0\n"),
            Err(SimError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn limits_are_enforced() {
        assert!(matches!(SparseState::zero(27), Err(SimError::TooLarge { .. })));
        let s = SparseState::zero(15).unwrap();
        let keep: Vec<usize> = (0..15).collect();
        assert_eq!(s.partial_trace(&keep), Err(SimError::TooManyKept(15)));
    }
}
