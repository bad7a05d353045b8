//! Bit-packed Pauli words `i^e · ∏ X^x Z^z` with exact phase tracking.

use std::fmt;
use std::str::FromStr;

use crate::statevec::Gate;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliWord {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    /// Power of `i` in front of the `X^x Z^z` product.
    phase: u8,
}

fn words(n: usize) -> usize {
    n.div_ceil(64)
}

impl PauliWord {
    pub fn identity(n: usize) -> Self {
        PauliWord {
            n,
            x: vec![0; words(n)],
            z: vec![0; words(n)],
            phase: 0,
        }
    }

    /// `X` on every listed qubit.
    pub fn x_on(n: usize, qubits: impl IntoIterator<Item = usize>) -> Self {
        let mut p = Self::identity(n);
        for q in qubits {
            p.set(q, true, p.z(q));
        }
        p
    }

    /// `Z` on every listed qubit.
    pub fn z_on(n: usize, qubits: impl IntoIterator<Item = usize>) -> Self {
        let mut p = Self::identity(n);
        for q in qubits {
            p.set(q, p.x(q), true);
        }
        p
    }

    /// A single-qubit Pauli (`'X'`, `'Y'` or `'Z'`) on qubit `q`.
    pub fn single(n: usize, q: usize, letter: char) -> Self {
        let mut p = Self::identity(n);
        p.set_letter(q, letter);
        p
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn x(&self, q: usize) -> bool {
        (self.x[q / 64] >> (q % 64)) & 1 == 1
    }

    pub fn z(&self, q: usize) -> bool {
        (self.z[q / 64] >> (q % 64)) & 1 == 1
    }

    pub fn x_words(&self) -> &[u64] {
        &self.x
    }

    pub fn z_words(&self) -> &[u64] {
        &self.z
    }

    pub fn phase(&self) -> u8 {
        self.phase
    }

    pub fn set_phase(&mut self, phase: u8) {
        self.phase = phase & 3;
    }

    pub fn set(&mut self, q: usize, x: bool, z: bool) {
        assert!(q < self.n, "qubit {q} outside a word of {}", self.n);
        let (w, b) = (q / 64, 1u64 << (q % 64));
        if x {
            self.x[w] |= b;
        } else {
            self.x[w] &= !b;
        }
        if z {
            self.z[w] |= b;
        } else {
            self.z[w] &= !b;
        }
    }

    /// Places a Hermitian letter on `q`, keeping the word's sign.
    pub fn set_letter(&mut self, q: usize, letter: char) {
        let had_y = self.x(q) && self.z(q);
        let (x, z) = match letter {
            'I' => (false, false),
            'X' => (true, false),
            'Y' => (true, true),
            'Z' => (false, true),
            _ => panic!("not a Pauli letter: {letter}"),
        };
        self.set(q, x, z);
        let has_y = x && z;
        self.phase = (self.phase + u8::from(has_y) + u8::from(had_y) * 3) & 3;
    }

    pub fn letter(&self, q: usize) -> char {
        match (self.x(q), self.z(q)) {
            (false, false) => 'I',
            (true, false) => 'X',
            (true, true) => 'Y',
            (false, true) => 'Z',
        }
    }

    fn y_count(&self) -> u32 {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(a, b)| (a & b).count_ones())
            .sum()
    }

    /// Coefficient in front of the letter string, as a power of `i`.
    pub fn letter_phase(&self) -> u8 {
        ((self.phase as u32 + 4 * 16 - self.y_count() % 4) % 4) as u8
    }

    pub fn is_hermitian(&self) -> bool {
        self.letter_phase().is_multiple_of(2)
    }

    /// `Some(true)` for a `-` sign, `None` if not Hermitian.
    pub fn is_negative(&self) -> Option<bool> {
        match self.letter_phase() {
            0 => Some(false),
            2 => Some(true),
            _ => None,
        }
    }

    /// Multiplies the word by `-1`.
    pub fn negate(&mut self) {
        self.phase = (self.phase + 2) & 3;
    }

    pub fn is_identity_up_to_phase(&self) -> bool {
        self.x.iter().all(|&w| w == 0) && self.z.iter().all(|&w| w == 0)
    }

    pub fn weight(&self) -> usize {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(a, b)| (a | b).count_ones() as usize)
            .sum()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.n).filter(|&q| self.x(q) || self.z(q)).collect()
    }

    pub fn same_letters(&self, other: &PauliWord) -> bool {
        self.n == other.n && self.x == other.x && self.z == other.z
    }

    pub fn commutes(&self, other: &PauliWord) -> bool {
        debug_assert_eq!(self.n, other.n);
        let mut parity = 0u32;
        for i in 0..self.x.len() {
            parity ^= (self.x[i] & other.z[i]).count_ones() ^ (self.z[i] & other.x[i]).count_ones();
        }
        parity & 1 == 0
    }

    /// `self ← self · other`.
    pub fn mul_assign(&mut self, other: &PauliWord) {
        debug_assert_eq!(self.n, other.n);
        let mut sign = 0u32;
        for i in 0..self.x.len() {
            sign += (self.z[i] & other.x[i]).count_ones();
            self.x[i] ^= other.x[i];
            self.z[i] ^= other.z[i];
        }
        self.phase = ((self.phase as u32 + other.phase as u32 + 2 * sign) & 3) as u8;
    }

    pub fn mul(&self, other: &PauliWord) -> PauliWord {
        let mut out = self.clone();
        out.mul_assign(other);
        out
    }

    /// Appends `extra` identity qubits.
    pub fn extend(&mut self, extra: usize) {
        self.n += extra;
        self.x.resize(words(self.n), 0);
        self.z.resize(words(self.n), 0);
    }

    /// Places `self` at qubit offset `offset` inside an `n`-qubit word.
    pub fn embedded(&self, n: usize, offset: usize) -> PauliWord {
        let mut out = PauliWord::identity(n);
        for q in 0..self.n {
            out.set(q + offset, self.x(q), self.z(q));
        }
        out.phase = self.phase;
        out
    }

    /// The letters on `qubits`, in that order, as a smaller word.
    pub fn restricted(&self, qubits: &[usize]) -> PauliWord {
        let mut out = PauliWord::identity(qubits.len());
        for (i, &q) in qubits.iter().enumerate() {
            out.set(i, self.x(q), self.z(q));
        }
        out.phase = ((self.letter_phase() as u32 + out.y_count()) & 3) as u8;
        out
    }

    // Conjugation `P ← U P U†`.

    pub fn conj_h(&mut self, q: usize) {
        let (x, z) = (self.x(q), self.z(q));
        self.set(q, z, x);
        if x && z {
            self.negate();
        }
    }

    pub fn conj_s(&mut self, q: usize) {
        let (x, z) = (self.x(q), self.z(q));
        self.set(q, x, z ^ x);
        self.phase = (self.phase + u8::from(x)) & 3;
    }

    pub fn conj_sdg(&mut self, q: usize) {
        let (x, z) = (self.x(q), self.z(q));
        self.set(q, x, z ^ x);
        self.phase = (self.phase + 3 * u8::from(x)) & 3;
    }

    pub fn conj_x(&mut self, q: usize) {
        if self.z(q) {
            self.negate();
        }
    }

    pub fn conj_z(&mut self, q: usize) {
        if self.x(q) {
            self.negate();
        }
    }

    pub fn conj_y(&mut self, q: usize) {
        if self.x(q) ^ self.z(q) {
            self.negate();
        }
    }

    pub fn conj_cnot(&mut self, c: usize, t: usize) {
        let (xc, zc, xt, zt) = (self.x(c), self.z(c), self.x(t), self.z(t));
        self.set(t, xt ^ xc, zt);
        self.set(c, xc, zc ^ zt);
    }

    /// Conjugates by a Clifford single-qubit gate; returns `false` for `T`.
    pub fn conj_gate(&mut self, gate: Gate, q: usize) -> bool {
        match gate {
            Gate::X => self.conj_x(q),
            Gate::Y => self.conj_y(q),
            Gate::Z => self.conj_z(q),
            Gate::H => self.conj_h(q),
            Gate::S => self.conj_s(q),
            Gate::Sdg => self.conj_sdg(q),
            Gate::T | Gate::Tdg => return false,
        }
        true
    }
}

impl fmt::Display for PauliWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.letter_phase() {
            0 => "+",
            1 => "+i",
            2 => "-",
            _ => "-i",
        })?;
        for q in 0..self.n {
            write!(f, "{}", self.letter(q))?;
        }
        Ok(())
    }
}

impl FromStr for PauliWord {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (coef, letters) = if let Some(rest) = s.strip_prefix("+i") {
            (1u8, rest)
        } else if let Some(rest) = s.strip_prefix("-i") {
            (3, rest)
        } else if let Some(rest) = s.strip_prefix('+') {
            (0, rest)
        } else if let Some(rest) = s.strip_prefix('-') {
            (2, rest)
        } else {
            (0, s)
        };
        let mut p = PauliWord::identity(letters.chars().count());
        for (q, c) in letters.chars().enumerate() {
            if !"IXYZ".contains(c) {
                return Err(format!("bad Pauli letter `{c}`"));
            }
            p.set_letter(q, c);
        }
        p.phase = (p.phase + coef) & 3;
        Ok(p)
    }
}
