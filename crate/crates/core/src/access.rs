//! Monotone access structures over a small player roster.
//!
//! A structure is stored by its antichain of minimal authorized sets. Player
//! subsets are bitmasks, so every predicate here is exact and the exhaustive
//! checks (maximality, maximalization) simply walk all `2^n` subsets.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// Hard cap on roster size. Exhaustive checks enumerate `2^n` subsets.
pub const MAX_PLAYERS: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AccessError {
    #[error("a structure needs at least one player")]
    NoPlayers,
    #[error("{0} players exceeds the cap of {MAX_PLAYERS}")]
    TooManyPlayers(usize),
    #[error("the empty set cannot be a minimal authorized set")]
    EmptySet,
    #[error("player index {index} is outside a roster of {count}")]
    PlayerOutOfRange { index: usize, count: usize },
    #[error("unknown player `{0}`")]
    UnknownPlayer(String),
    #[error("player `{0}` is declared twice")]
    DuplicatePlayer(String),
    #[error("not admissible: disjoint authorized subsets {first} and {second}")]
    Inadmissible { first: String, second: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// A subset of players as a bitmask; bit `i` is player `i`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct PlayerSet(u16);

impl PlayerSet {
    pub const EMPTY: PlayerSet = PlayerSet(0);

    pub const fn from_bits(bits: u16) -> Self {
        PlayerSet(bits)
    }

    pub fn single(index: usize) -> Self {
        assert!(index < MAX_PLAYERS, "player index {index} out of range");
        PlayerSet(1 << index)
    }

    /// Every player of a roster of `count`.
    pub fn full(count: usize) -> Self {
        assert!(count <= MAX_PLAYERS);
        if count == MAX_PLAYERS {
            PlayerSet(u16::MAX)
        } else {
            PlayerSet(((1u32 << count) - 1) as u16)
        }
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        indices
            .into_iter()
            .fold(PlayerSet::EMPTY, |acc, i| acc.with(i))
    }

    pub const fn bits(self) -> u16 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, index: usize) -> bool {
        index < MAX_PLAYERS && self.0 >> index & 1 == 1
    }

    pub fn with(self, index: usize) -> Self {
        PlayerSet(self.0 | PlayerSet::single(index).0)
    }

    pub fn without(self, index: usize) -> Self {
        PlayerSet(self.0 & !PlayerSet::single(index).0)
    }

    pub fn is_subset_of(self, other: PlayerSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn intersects(self, other: PlayerSet) -> bool {
        self.0 & other.0 != 0
    }

    pub fn union(self, other: PlayerSet) -> Self {
        PlayerSet(self.0 | other.0)
    }

    pub fn intersection(self, other: PlayerSet) -> Self {
        PlayerSet(self.0 & other.0)
    }

    /// Complement within a roster of `count` players.
    pub fn complement(self, count: usize) -> Self {
        PlayerSet(!self.0 & PlayerSet::full(count).0)
    }

    /// Lowest player index in the set.
    pub fn first(self) -> Option<usize> {
        (!self.is_empty()).then(|| self.0.trailing_zeros() as usize)
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..MAX_PLAYERS).filter(move |&i| self.contains(i))
    }

    /// Drops player `index` and shifts every higher player down by one.
    pub fn remove_index(self, index: usize) -> Self {
        let low = self.0 & ((1u32 << index) - 1) as u16;
        let high = (self.0 as u32 >> (index + 1)) << index;
        PlayerSet(low | high as u16)
    }

    /// Canonical order: ascending cardinality, then ascending bitmask.
    pub fn canonical_key(self) -> (u32, u16) {
        (self.0.count_ones(), self.0)
    }

    /// Renders as concatenated labels, e.g. `ABC`; single-letter labels are
    /// joined directly and longer ones with `,`.
    pub fn display<'a>(self, labels: &'a [String]) -> SetDisplay<'a> {
        SetDisplay { set: self, labels }
    }
}

pub struct SetDisplay<'a> {
    set: PlayerSet,
    labels: &'a [String],
}

impl fmt::Display for SetDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.set.is_empty() {
            return f.write_str("∅");
        }
        let compact = self.labels.iter().all(|l| l.chars().count() == 1);
        let mut first = true;
        for i in self.set.iter() {
            if !first && !compact {
                f.write_str(",")?;
            }
            first = false;
            match self.labels.get(i) {
                Some(label) => f.write_str(label)?,
                None => write!(f, "#{i}")?,
            }
        }
        Ok(())
    }
}

/// Default roster labels: `A`, `B`, `C`, ...
pub fn default_labels(count: usize) -> Vec<String> {
    (0..count)
        .map(|i| char::from(b'A' + i as u8).to_string())
        .collect()
}

/// A monotone access structure given by its minimal authorized sets.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AccessStructure {
    labels: Vec<String>,
    minimal: Vec<PlayerSet>,
}

impl AccessStructure {
    /// Builds the structure generated by `sets`, keeping only the
    /// inclusion-minimal ones in canonical order.
    pub fn normalize<I>(labels: Vec<String>, sets: I) -> Result<Self, AccessError>
    where
        I: IntoIterator<Item = PlayerSet>,
    {
        let count = labels.len();
        if count == 0 {
            return Err(AccessError::NoPlayers);
        }
        if count > MAX_PLAYERS {
            return Err(AccessError::TooManyPlayers(count));
        }
        for (i, label) in labels.iter().enumerate() {
            if labels[..i].contains(label) {
                return Err(AccessError::DuplicatePlayer(label.clone()));
            }
        }
        let full = PlayerSet::full(count);
        let mut collected: Vec<PlayerSet> = Vec::new();
        for set in sets {
            if set.is_empty() {
                return Err(AccessError::EmptySet);
            }
            if !set.is_subset_of(full) {
                let index = 15 - set.bits().leading_zeros() as usize;
                return Err(AccessError::PlayerOutOfRange { index, count });
            }
            collected.push(set);
        }
        Ok(AccessStructure {
            labels,
            minimal: minimal_antichain(collected),
        })
    }

    /// Same as [`normalize`](Self::normalize) with labels `A`, `B`, ...
    pub fn with_player_count<I>(count: usize, sets: I) -> Result<Self, AccessError>
    where
        I: IntoIterator<Item = PlayerSet>,
    {
        if count > MAX_PLAYERS {
            return Err(AccessError::TooManyPlayers(count));
        }
        Self::normalize(default_labels(count), sets)
    }

    /// The `(k, n)` threshold structure: every `k`-subset is minimal.
    pub fn threshold(k: usize, n: usize) -> Result<Self, AccessError> {
        let sets = (0..1u32 << n)
            .map(|b| PlayerSet::from_bits(b as u16))
            .filter(|s| s.len() == k);
        Self::with_player_count(n, sets)
    }

    pub fn player_count(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn minimal_sets(&self) -> &[PlayerSet] {
        &self.minimal
    }

    /// True when no set is authorized at all.
    pub fn is_empty(&self) -> bool {
        self.minimal.is_empty()
    }

    pub fn all_players(&self) -> PlayerSet {
        PlayerSet::full(self.player_count())
    }

    /// Players that appear in at least one minimal set.
    pub fn essential_players(&self) -> PlayerSet {
        self.minimal
            .iter()
            .fold(PlayerSet::EMPTY, |acc, &s| acc.union(s))
    }

    pub fn is_authorized(&self, set: PlayerSet) -> bool {
        self.minimal.iter().any(|m| m.is_subset_of(set))
    }

    /// Every pair of authorized sets intersects (no-cloning condition).
    pub fn is_quantum_admissible(&self) -> bool {
        self.disjoint_pair().is_none()
    }

    /// First pair of disjoint minimal sets, if any.
    pub fn disjoint_pair(&self) -> Option<(PlayerSet, PlayerSet)> {
        for (i, &a) in self.minimal.iter().enumerate() {
            for &b in &self.minimal[i..] {
                if !a.intersects(b) {
                    return Some((a, b));
                }
            }
        }
        None
    }

    pub fn check_admissible(&self) -> Result<(), AccessError> {
        match self.disjoint_pair() {
            None => Ok(()),
            Some((a, b)) => Err(AccessError::Inadmissible {
                first: a.display(&self.labels).to_string(),
                second: b.display(&self.labels).to_string(),
            }),
        }
    }

    /// For every subset exactly one of it and its complement is authorized.
    pub fn is_maximal(&self) -> bool {
        let n = self.player_count();
        all_subsets(n).all(|s| self.is_authorized(s) != self.is_authorized(s.complement(n)))
    }

    /// Extends an admissible structure to a maximal admissible one.
    pub fn maximalize(&self) -> Result<AccessStructure, AccessError> {
        self.maximalize_with_additions().map(|(s, _)| s)
    }

    /// Subsets are visited by ascending (cardinality, bitmask). When neither a
    /// subset nor its complement is authorized, the smaller of the two is
    /// added; on a cardinality tie the one holding the last declared player
    /// (the complement, which has the larger mask) is added.
    pub fn maximalize_with_additions(
        &self,
    ) -> Result<(AccessStructure, Vec<PlayerSet>), AccessError> {
        self.check_admissible()?;
        let n = self.player_count();
        let mut subsets: Vec<PlayerSet> = all_subsets(n).collect();
        subsets.sort_by_key(|s| s.canonical_key());

        let mut current = self.clone();
        let mut added = Vec::new();
        for s in subsets {
            let c = s.complement(n);
            if current.is_authorized(s) || current.is_authorized(c) {
                continue;
            }
            let pick = if s.len() < c.len() { s } else { c };
            added.push(pick);
            let mut sets = current.minimal.clone();
            sets.push(pick);
            current.minimal = minimal_antichain(sets);
        }
        Ok((current, added))
    }

    /// Structure over the roster without `player`: the minimal sets that do
    /// not contain it, reindexed. May come back empty.
    pub fn remove_player(&self, player: usize) -> Result<AccessStructure, AccessError> {
        let count = self.player_count();
        if player >= count {
            return Err(AccessError::PlayerOutOfRange {
                index: player,
                count,
            });
        }
        if count == 1 {
            return Err(AccessError::NoPlayers);
        }
        let mut labels = self.labels.clone();
        labels.remove(player);
        let sets: Vec<PlayerSet> = self
            .minimal
            .iter()
            .filter(|s| !s.contains(player))
            .map(|s| s.remove_index(player))
            .collect();
        Ok(AccessStructure {
            labels,
            minimal: minimal_antichain(sets),
        })
    }

    /// Parses the line format: `players: A B C`, then `minimal: A B` lines.
    pub fn parse(text: &str) -> Result<Self, AccessError> {
        let mut labels: Option<Vec<String>> = None;
        let mut sets = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| AccessError::Parse {
                line: line_no,
                message,
            };
            let (key, rest) = line
                .split_once(':')
                .ok_or_else(|| parse_err(format!("expected `key: value`, found `{line}`")))?;
            match key.trim() {
                "players" => {
                    if labels.is_some() {
                        return Err(parse_err("duplicate `players:` line".into()));
                    }
                    let names: Vec<String> =
                        rest.split_whitespace().map(str::to_string).collect();
                    if names.is_empty() {
                        return Err(parse_err("empty player list".into()));
                    }
                    labels = Some(names);
                }
                "minimal" => {
                    let roster = labels
                        .as_ref()
                        .ok_or_else(|| parse_err("`minimal:` before `players:`".into()))?;
                    let mut set = PlayerSet::EMPTY;
                    for name in rest.split_whitespace() {
                        let index = roster
                            .iter()
                            .position(|l| l == name)
                            .ok_or_else(|| parse_err(format!("unknown player `{name}`")))?;
                        set = set.with(index);
                    }
                    if set.is_empty() {
                        return Err(parse_err("empty minimal set".into()));
                    }
                    sets.push(set);
                }
                other => return Err(parse_err(format!("unknown key `{other}`"))),
            }
        }
        let labels = labels.ok_or(AccessError::Parse {
            line: 0,
            message: "missing `players:` line".into(),
        })?;
        if labels.len() > MAX_PLAYERS {
            return Err(AccessError::TooManyPlayers(labels.len()));
        }
        Self::normalize(labels, sets)
    }

    /// Canonical text form; `parse(to_text())` is the identity.
    pub fn to_text(&self) -> String {
        let mut out = format!("players: {}\n", self.labels.join(" "));
        for set in &self.minimal {
            let names: Vec<&str> = set.iter().map(|i| self.labels[i].as_str()).collect();
            out.push_str(&format!("minimal: {}\n", names.join(" ")));
        }
        out
    }
}

impl fmt::Display for AccessStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("⟨")?;
        for (i, set) in self.minimal.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}", set.display(&self.labels))?;
        }
        f.write_str("⟩")
    }
}

/// Every subset of a roster of `count` players, ascending by bitmask.
pub fn all_subsets(count: usize) -> impl Iterator<Item = PlayerSet> {
    (0..1u32 << count).map(|b| PlayerSet::from_bits(b as u16))
}

fn minimal_antichain(mut sets: Vec<PlayerSet>) -> Vec<PlayerSet> {
    sets.sort_by_key(|s| s.canonical_key());
    sets.dedup();
    let mut kept: Vec<PlayerSet> = Vec::with_capacity(sets.len());
    for s in sets {
        // canonical order puts every proper subset of `s` before it
        if !kept.iter().any(|k| k.is_subset_of(s)) {
            kept.push(s);
        }
    }
    kept
}
