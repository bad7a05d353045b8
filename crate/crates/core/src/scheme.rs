//! Concatenated 7-qubit share trees.
//!
//! Every [`SchemeNode::Encode`] is one Steane block whose seven physical
//! qubits are split into three shares: `P1` (qubits 1-4), `P2` (qubit 5) and
//! `P3` (qubits 6-7). A share either goes to a single owner or is expanded by
//! a child node; a `k`-qubit share is expanded by encoding each of its qubits
//! with its own copy of the child. Any two of the three shares recover the
//! block, which makes the bare block a `(2,3)` scheme.
//!
//! The compiler follows the inductive construction: maximal structures drop
//! a player, compile the remainder and hand that player every discarded
//! share; non-maximal ones hang an `(k,k)` scheme per minimal set under an
//! `Ω_r` node whose central share carries a maximal extension.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::access::{AccessError, AccessStructure, PlayerSet};

/// Default cap on Encode nesting accepted by [`compile`].
pub const MAX_TREE_DEPTH: usize = 8;
/// Default cap on physical qubits accepted by [`compile`] and the parser.
pub const MAX_LEAVES: usize = 4096;

/// Physical-qubit positions (0-based) of one Steane block, per share slot.
pub const SLOT_POSITIONS: [&[usize]; 3] = [&[0, 1, 2, 3], &[4], &[5, 6]];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchemeError {
    #[error(transparent)]
    Access(#[from] AccessError),
    #[error("cannot compile an empty access structure")]
    EmptyStructure,
    #[error("scheme exceeds caps: {leaves} leaves (cap {max_leaves}), depth {depth} (cap {max_depth})")]
    CapExceeded {
        leaves: u64,
        depth: usize,
        max_leaves: usize,
        max_depth: usize,
    },
    #[error("leaf owner index {0} is outside the roster")]
    UnknownOwner(usize),
    #[error("tree line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Slot {
    P1,
    P2,
    P3,
}

impl Slot {
    pub const ALL: [Slot; 3] = [Slot::P1, Slot::P2, Slot::P3];

    /// Physical qubits in this share of a block.
    pub fn width(self) -> usize {
        match self {
            Slot::P1 => 4,
            Slot::P2 => 1,
            Slot::P3 => 2,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Slot holding block position `pos` (0..7).
    pub fn of_position(pos: usize) -> Slot {
        match pos {
            0..=3 => Slot::P1,
            4 => Slot::P2,
            5 | 6 => Slot::P3,
            _ => panic!("block position {pos} out of range"),
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Slot::P1 => "P1",
            Slot::P2 => "P2",
            Slot::P3 => "P3",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Owner {
    Player(usize),
    Discarded,
}

impl Owner {
    pub fn player(self) -> Option<usize> {
        match self {
            Owner::Player(p) => Some(p),
            Owner::Discarded => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SchemeNode {
    Leaf(Owner),
    /// Children for `P1`, `P2`, `P3`.
    Encode(Box<[SchemeNode; 3]>),
}

impl SchemeNode {
    pub fn leaf(player: usize) -> Self {
        SchemeNode::Leaf(Owner::Player(player))
    }

    pub fn discarded() -> Self {
        SchemeNode::Leaf(Owner::Discarded)
    }

    pub fn encode(p1: SchemeNode, p2: SchemeNode, p3: SchemeNode) -> Self {
        SchemeNode::Encode(Box::new([p1, p2, p3]))
    }

    /// Physical qubits under this node (saturating).
    pub fn leaf_count(&self) -> u64 {
        match self {
            SchemeNode::Leaf(_) => 1,
            SchemeNode::Encode(children) => Slot::ALL
                .iter()
                .map(|s| children[s.index()].leaf_count().saturating_mul(s.width() as u64))
                .fold(0u64, u64::saturating_add),
        }
    }

    /// Encode nesting depth; a bare leaf has depth 0.
    pub fn depth(&self) -> usize {
        match self {
            SchemeNode::Leaf(_) => 0,
            SchemeNode::Encode(children) => 1 + children.iter().map(|c| c.depth()).max().unwrap_or(0),
        }
    }

    /// Steane block instances once every share copy is expanded.
    pub fn block_count(&self) -> u64 {
        match self {
            SchemeNode::Leaf(_) => 0,
            SchemeNode::Encode(children) => Slot::ALL
                .iter()
                .map(|s| children[s.index()].block_count().saturating_mul(s.width() as u64))
                .fold(1u64, u64::saturating_add),
        }
    }

    /// Recovery rule: a leaf is accessible when its owner is in `set`; a
    /// block is recoverable when at least two of its shares are.
    pub fn accessible(&self, set: PlayerSet) -> bool {
        match self {
            SchemeNode::Leaf(Owner::Player(p)) => set.contains(*p),
            SchemeNode::Leaf(Owner::Discarded) => false,
            SchemeNode::Encode(children) => {
                children.iter().filter(|c| c.accessible(set)).count() >= 2
            }
        }
    }

    pub fn map_owners(&self, f: &impl Fn(Owner) -> Owner) -> SchemeNode {
        match self {
            SchemeNode::Leaf(o) => SchemeNode::Leaf(f(*o)),
            SchemeNode::Encode(children) => SchemeNode::encode(
                children[0].map_owners(f),
                children[1].map_owners(f),
                children[2].map_owners(f),
            ),
        }
    }

    fn max_player(&self) -> Option<usize> {
        match self {
            SchemeNode::Leaf(o) => o.player(),
            SchemeNode::Encode(children) => children.iter().filter_map(|c| c.max_player()).max(),
        }
    }
}

/// Where one physical qubit sits in the expanded tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct LeafInfo {
    pub owner: Owner,
    /// Number of Encode ancestors.
    pub depth: usize,
    /// Slot within the nearest Encode ancestor, `None` for a bare root leaf.
    pub slot: Option<Slot>,
}

/// A share tree bound to the structure it realizes, with its expanded
/// depth-first leaf layout.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchemeTree {
    root: SchemeNode,
    structure: AccessStructure,
    layout: Vec<LeafInfo>,
}

impl SchemeTree {
    pub fn new(root: SchemeNode, structure: AccessStructure) -> Result<Self, SchemeError> {
        Self::with_leaf_cap(root, structure, MAX_LEAVES)
    }

    fn with_leaf_cap(
        root: SchemeNode,
        structure: AccessStructure,
        max_leaves: usize,
    ) -> Result<Self, SchemeError> {
        if let Some(p) = root.max_player() {
            if p >= structure.player_count() {
                return Err(SchemeError::UnknownOwner(p));
            }
        }
        let leaves = root.leaf_count();
        if leaves > max_leaves as u64 {
            return Err(SchemeError::CapExceeded {
                leaves,
                depth: root.depth(),
                max_leaves,
                max_depth: MAX_TREE_DEPTH,
            });
        }
        let mut layout = Vec::with_capacity(leaves as usize);
        expand(&root, 0, None, &mut layout);
        Ok(SchemeTree {
            root,
            structure,
            layout,
        })
    }

    pub fn root(&self) -> &SchemeNode {
        &self.root
    }

    pub fn structure(&self) -> &AccessStructure {
        &self.structure
    }

    pub fn layout(&self) -> &[LeafInfo] {
        &self.layout
    }

    pub fn leaf_count(&self) -> usize {
        self.layout.len()
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    /// Whether `set` can recover the root by the bottom-up rule.
    pub fn authorized(&self, set: PlayerSet) -> bool {
        self.root.accessible(set)
    }

    /// Non-discarded leaves owned by members of `set`.
    pub fn leaves_of(&self, set: PlayerSet) -> Vec<usize> {
        self.layout
            .iter()
            .enumerate()
            .filter(|(_, l)| matches!(l.owner, Owner::Player(p) if set.contains(p)))
            .map(|(i, _)| i)
            .collect()
    }

    /// Every leaf that is not discarded.
    pub fn live_leaves(&self) -> Vec<usize> {
        self.leaves_of(self.structure.all_players())
    }

    pub fn discarded_leaves(&self) -> Vec<usize> {
        self.layout
            .iter()
            .enumerate()
            .filter(|(_, l)| l.owner == Owner::Discarded)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn stats(&self) -> SchemeStats {
        let mut per_player: BTreeMap<String, usize> = self
            .structure
            .labels()
            .iter()
            .map(|l| (l.clone(), 0))
            .collect();
        let mut discarded = 0;
        for leaf in &self.layout {
            match leaf.owner {
                Owner::Player(p) => *per_player.get_mut(self.structure.label(p)).unwrap() += 1,
                Owner::Discarded => discarded += 1,
            }
        }
        let per_player = self
            .structure
            .labels()
            .iter()
            .map(|l| (l.clone(), per_player[l]))
            .collect();
        SchemeStats {
            leaves: self.layout.len(),
            discarded,
            per_player,
            depth: self.depth(),
            blocks: self.root.block_count() as usize,
        }
    }

    /// Canonical text form: the structure header followed by the indented
    /// node listing.
    pub fn to_text(&self) -> String {
        let mut out = self.structure.to_text();
        write_node(&self.root, 0, self.structure.labels(), &mut out);
        out
    }

    pub fn parse(text: &str) -> Result<Self, SchemeError> {
        let lines: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim_end()))
            .filter(|(_, l)| !l.trim().is_empty())
            .collect();
        let body_start = lines
            .iter()
            .position(|(_, l)| {
                let t = l.trim_start();
                t == "encode" || t.starts_with("leaf")
            })
            .ok_or(SchemeError::Parse {
                line: 0,
                message: "missing tree body".into(),
            })?;
        let header: String = lines[..body_start]
            .iter()
            .map(|(_, l)| format!("{l}\n"))
            .collect();
        let structure = AccessStructure::parse(&header)?;
        let mut cursor = body_start;
        let root = parse_node(&lines, &mut cursor, 0, &structure)?;
        if let Some((line, _)) = lines.get(cursor) {
            return Err(SchemeError::Parse {
                line: *line,
                message: "trailing content after tree".into(),
            });
        }
        SchemeTree::new(root, structure)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SchemeStats {
    pub leaves: usize,
    pub discarded: usize,
    /// Leaf count per player, in roster order.
    pub per_player: Vec<(String, usize)>,
    pub depth: usize,
    /// Expanded Steane block count.
    pub blocks: usize,
}

impl fmt::Display for SchemeStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "leaves:    {}", self.leaves)?;
        writeln!(f, "discarded: {}", self.discarded)?;
        writeln!(f, "depth:     {}", self.depth)?;
        writeln!(f, "blocks:    {}", self.blocks)?;
        for (name, count) in &self.per_player {
            writeln!(f, "  {name:<8} {count}")?;
        }
        Ok(())
    }
}

fn expand(node: &SchemeNode, depth: usize, slot: Option<Slot>, out: &mut Vec<LeafInfo>) {
    match node {
        SchemeNode::Leaf(owner) => out.push(LeafInfo {
            owner: *owner,
            depth,
            slot,
        }),
        SchemeNode::Encode(children) => {
            for pos in 0..7 {
                let s = Slot::of_position(pos);
                expand(&children[s.index()], depth + 1, Some(s), out);
            }
        }
    }
}

fn write_node(node: &SchemeNode, indent: usize, labels: &[String], out: &mut String) {
    let pad = "  ".repeat(indent);
    match node {
        SchemeNode::Leaf(Owner::Player(p)) => {
            out.push_str(&format!("{pad}leaf owner={}\n", labels[*p]));
        }
        SchemeNode::Leaf(Owner::Discarded) => {
            out.push_str(&format!("{pad}leaf owner=DISCARDED\n"));
        }
        SchemeNode::Encode(children) => {
            out.push_str(&format!("{pad}encode\n"));
            for s in Slot::ALL {
                out.push_str(&format!("{pad}  slot {s}\n"));
                write_node(&children[s.index()], indent + 2, labels, out);
            }
        }
    }
}

fn parse_node(
    lines: &[(usize, &str)],
    cursor: &mut usize,
    indent: usize,
    structure: &AccessStructure,
) -> Result<SchemeNode, SchemeError> {
    let (line_no, raw) = *lines.get(*cursor).ok_or(SchemeError::Parse {
        line: lines.last().map_or(0, |l| l.0),
        message: "unexpected end of tree".into(),
    })?;
    let err = |message: String| SchemeError::Parse {
        line: line_no,
        message,
    };
    let expected = "  ".repeat(indent);
    let body = raw
        .strip_prefix(&expected)
        .filter(|b| !b.starts_with(' '))
        .ok_or_else(|| err(format!("expected indentation of {} spaces", indent * 2)))?;
    *cursor += 1;
    if body == "encode" {
        let mut children = Vec::with_capacity(3);
        for s in Slot::ALL {
            let (slot_line, slot_raw) = *lines
                .get(*cursor)
                .ok_or_else(|| err(format!("missing `slot {s}`")))?;
            let want = format!("{expected}  slot {s}");
            if slot_raw != want {
                return Err(SchemeError::Parse {
                    line: slot_line,
                    message: format!("expected `{}`", want.trim_start()),
                });
            }
            *cursor += 1;
            children.push(parse_node(lines, cursor, indent + 2, structure)?);
        }
        let [p1, p2, p3]: [SchemeNode; 3] = children.try_into().expect("three slots");
        Ok(SchemeNode::encode(p1, p2, p3))
    } else if let Some(name) = body.strip_prefix("leaf owner=") {
        if name == "DISCARDED" {
            Ok(SchemeNode::discarded())
        } else {
            structure
                .index_of(name)
                .map(SchemeNode::leaf)
                .ok_or_else(|| err(format!("unknown owner `{name}`")))
        }
    } else {
        Err(err(format!("expected `encode` or `leaf owner=...`, found `{body}`")))
    }
}

/// Limits enforced while compiling.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CompileLimits {
    pub max_depth: usize,
    pub max_leaves: usize,
}

impl Default for CompileLimits {
    fn default() -> Self {
        CompileLimits {
            max_depth: MAX_TREE_DEPTH,
            max_leaves: MAX_LEAVES,
        }
    }
}

impl CompileLimits {
    fn check(&self, node: &SchemeNode) -> Result<(), SchemeError> {
        let leaves = node.leaf_count();
        let depth = node.depth();
        if leaves > self.max_leaves as u64 || depth > self.max_depth {
            return Err(SchemeError::CapExceeded {
                leaves,
                depth,
                max_leaves: self.max_leaves,
                max_depth: self.max_depth,
            });
        }
        Ok(())
    }
}

/// The single-block `(2,3)` scheme: `P1`→A, `P2`→B, `P3`→C.
pub fn build_23() -> SchemeTree {
    let structure = AccessStructure::threshold(2, 3).expect("(2,3) is valid");
    let root = SchemeNode::encode(SchemeNode::leaf(0), SchemeNode::leaf(1), SchemeNode::leaf(2));
    SchemeTree::new(root, structure).expect("7 leaves")
}

/// Chains `shares.len() - 1` blocks realizing `Ω_n` over the given shares:
/// each upper block gives `P1` to the central share, recurses through `P2`
/// and hands `P3` to the next share; the bottom block holds the last two.
pub fn omega_node(shares: &[SchemeNode], central: &SchemeNode) -> SchemeNode {
    match shares {
        [] => panic!("Ω_n needs at least one share"),
        [only] => only.clone(),
        [a, b] => SchemeNode::encode(central.clone(), b.clone(), a.clone()),
        [first, rest @ ..] => {
            SchemeNode::encode(central.clone(), omega_node(rest, central), first.clone())
        }
    }
}

/// Labels `A1..A{n+1}` and the `Ω_n` structure over them.
fn omega_structure(n: usize) -> AccessStructure {
    let labels: Vec<String> = (1..=n + 1).map(|i| format!("A{i}")).collect();
    let central = n;
    let mut sets = vec![PlayerSet::full(n)];
    sets.extend((0..n).map(|i| PlayerSet::from_indices([i, central])));
    AccessStructure::normalize(labels, sets).expect("Ω_n is valid")
}

/// `Ω_n = ⟨A1…An, A1A{n+1}, …, AnA{n+1}⟩` with `A{n+1}` as central share.
pub fn build_omega(n: usize) -> Result<SchemeTree, SchemeError> {
    if n == 0 || n + 1 > crate::access::MAX_PLAYERS {
        return Err(AccessError::TooManyPlayers(n + 1).into());
    }
    let shares: Vec<SchemeNode> = (0..n).map(SchemeNode::leaf).collect();
    let root = omega_node(&shares, &SchemeNode::leaf(n));
    SchemeTree::new(root, omega_structure(n))
}

/// The `(n,n)` scheme: `Ω_n` with every central share discarded.
pub fn build_nn(n: usize) -> Result<SchemeTree, SchemeError> {
    if !(2..=crate::access::MAX_PLAYERS).contains(&n) {
        return Err(AccessError::TooManyPlayers(n).into());
    }
    let labels: Vec<String> = (1..=n).map(|i| format!("A{i}")).collect();
    let structure = AccessStructure::normalize(labels, [PlayerSet::full(n)])?;
    SchemeTree::new(nn_node(&(0..n).collect::<Vec<_>>()), structure)
}

fn nn_node(members: &[usize]) -> SchemeNode {
    let shares: Vec<SchemeNode> = members.iter().map(|&p| SchemeNode::leaf(p)).collect();
    omega_node(&shares, &SchemeNode::discarded())
}

/// Compiles an admissible structure with the default caps.
pub fn compile(structure: &AccessStructure) -> Result<SchemeTree, SchemeError> {
    compile_with(structure, CompileLimits::default())
}

pub fn compile_with(
    structure: &AccessStructure,
    limits: CompileLimits,
) -> Result<SchemeTree, SchemeError> {
    structure.check_admissible()?;
    if structure.is_empty() {
        return Err(SchemeError::EmptyStructure);
    }
    let root = compile_node(structure, &limits)?;
    SchemeTree::with_leaf_cap(root, structure.clone(), limits.max_leaves)
}

fn compile_node(a: &AccessStructure, limits: &CompileLimits) -> Result<SchemeNode, SchemeError> {
    let minimal = a.minimal_sets();
    if let [only] = minimal {
        if only.len() == 1 {
            return Ok(SchemeNode::leaf(only.first().unwrap()));
        }
    }
    let node = if a.is_maximal() {
        // drop a player, compile the rest and give it every discarded share
        let x = a.essential_players().first().ok_or(SchemeError::EmptyStructure)?;
        let reduced = a.remove_player(x)?;
        if reduced.is_empty() {
            return Err(SchemeError::EmptyStructure);
        }
        let inner = compile_node(&reduced, limits)?;
        inner.map_owners(&|o| match o {
            Owner::Player(p) if p >= x => Owner::Player(p + 1),
            Owner::Player(p) => Owner::Player(p),
            Owner::Discarded => Owner::Player(x),
        })
    } else {
        let shares: Vec<SchemeNode> = minimal
            .iter()
            .map(|t| nn_node(&t.iter().collect::<Vec<_>>()))
            .collect();
        if shares.len() == 1 {
            // Ω_1: the whole secret goes to the only share
            shares.into_iter().next().unwrap()
        } else {
            let central = compile_node(&a.maximalize()?, limits)?;
            limits.check(&central)?;
            omega_node(&shares, &central)
        }
    };
    limits.check(&node)?;
    Ok(node)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::access::all_subsets;

    fn structure(players: &str, sets: &[&str]) -> AccessStructure {
        let labels: Vec<String> = players.chars().map(|c| c.to_string()).collect();
        let sets: Vec<PlayerSet> = sets
            .iter()
            .map(|w| PlayerSet::from_indices(w.chars().map(|c| players.find(c).unwrap())))
            .collect();
        AccessStructure::normalize(labels, sets).unwrap()
    }

    fn set(players: &str, word: &str) -> PlayerSet {
        PlayerSet::from_indices(word.chars().map(|c| players.find(c).unwrap()))
    }

    fn authorized_family(tree: &SchemeTree) -> Vec<PlayerSet> {
        all_subsets(tree.structure().player_count())
            .filter(|&s| tree.authorized(s))
            .collect()
    }

    #[test]
    fn two_of_three_block() {
        let t = build_23();
        let stats = t.stats();
        assert_eq!(stats.leaves, 7);
        assert_eq!(stats.discarded, 0);
        assert_eq!(stats.depth, 1);
        assert_eq!(
            stats.per_player,
            vec![("A".into(), 4), ("B".into(), 1), ("C".into(), 2)]
        );
        assert!(t.authorized(set("ABC", "BC")));
        assert!(!t.authorized(set("ABC", "A")));
        assert!(!t.authorized(PlayerSet::EMPTY));
    }

    #[test]
    fn omega_shapes() {
        let o2 = build_omega(2).unwrap();
        assert_eq!(o2.root().leaf_count(), 7);
        assert_eq!(o2.depth(), 1);
        let o3 = build_omega(3).unwrap();
        assert_eq!(o3.leaf_count(), 13);
        assert_eq!(o3.structure().to_string(), "⟨A1,A4, A2,A4, A3,A4, A1,A2,A3⟩");
        for s in all_subsets(4) {
            assert_eq!(o3.authorized(s), o3.structure().is_authorized(s), "{s:?}");
        }
        let o1 = build_omega(1).unwrap();
        assert_eq!(o1.leaf_count(), 1);
        assert!(o1.authorized(PlayerSet::single(0)));
        assert!(!o1.authorized(PlayerSet::single(1)));
    }

    #[test]
    fn threshold_nn() {
        let t2 = build_nn(2).unwrap();
        assert_eq!(authorized_family(&t2), vec![PlayerSet::full(2)]);
        assert_eq!(t2.stats().discarded, 4);
        let t3 = build_nn(3).unwrap();
        assert!(!t3.authorized(PlayerSet::from_indices([0, 1])));
        assert!(t3.authorized(PlayerSet::full(3)));
        assert_eq!(authorized_family(&t3), vec![PlayerSet::full(3)]);
    }

    #[test]
    fn compile_two_pairs_sharing_a() {
        let a = structure("ABC", &["AB", "AC"]);
        let t = compile(&a).unwrap();
        let stats = t.stats();
        assert_eq!(stats.leaves, 25);
        assert_eq!(stats.discarded, 12);
        assert!(t.authorized(set("ABC", "AB")));
        assert!(t.authorized(set("ABC", "AC")));
        assert!(!t.authorized(set("ABC", "BC")));
        for leaf in t.layout() {
            if leaf.owner == Owner::Discarded {
                assert_eq!(leaf.slot, Some(Slot::P1));
            }
        }
    }

    #[test]
    fn compile_maximal_example_hands_discards_to_removed_player() {
        let a = structure("ABCE", &["AE", "BE", "CE", "ABC"]);
        let t = compile(&a).unwrap();
        assert_eq!(t.stats().discarded, 0);
        assert_eq!(t.leaf_count(), 25);
        for s in all_subsets(4) {
            assert_eq!(t.authorized(s), a.is_authorized(s));
        }
    }

    #[test]
    fn compile_example_three() {
        let a = structure("ABCE", &["ABC", "BE", "AE"]);
        let t = compile(&a).unwrap();
        assert_eq!(t.leaf_count(), 241);
        assert_eq!(t.depth(), 4);
        for s in all_subsets(4) {
            assert_eq!(t.authorized(s), a.is_authorized(s), "{s:?}");
        }
    }

    #[test]
    fn compile_rejects_bad_input() {
        let err = compile(&structure("ABCD", &["AB", "CD"])).unwrap_err();
        assert!(matches!(err, SchemeError::Access(AccessError::Inadmissible { .. })));
        let empty = AccessStructure::with_player_count(2, []).unwrap();
        assert_eq!(compile(&empty).unwrap_err(), SchemeError::EmptyStructure);
        let tight = CompileLimits {
            max_depth: 2,
            max_leaves: 4096,
        };
        let err = compile_with(&structure("ABCE", &["ABC", "BE", "AE"]), tight).unwrap_err();
        assert!(matches!(err, SchemeError::CapExceeded { .. }));
    }

    #[test]
    fn text_round_trip_is_canonical() {
        let t = compile(&structure("ABC", &["AB", "AC"])).unwrap();
        let text = t.to_text();
        let back = SchemeTree::parse(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.to_text(), text);
        assert!(text.contains("leaf owner=DISCARDED"));
    }

    #[test]
    fn parse_reports_bad_lines() {
        let text = "players: A B C\nminimal: A B\nencode\n  slot P1\n    leaf owner=Q\n";
        let err = SchemeTree::parse(text).unwrap_err();
        assert_eq!(
            err,
            SchemeError::Parse {
                line: 5,
                message: "unknown owner `Q`".into()
            }
        );
        let text = "players: A B\nminimal: A\nencode\n  slot P2\n";
        assert!(matches!(SchemeTree::parse(text), Err(SchemeError::Parse { line: 4, .. })));
    }

    #[test]
    fn leaf_depths_follow_nesting() {
        let t = compile(&structure("ABC", &["AB", "AC"])).unwrap();
        let depths: Vec<usize> = t.layout().iter().map(|l| l.depth).collect();
        assert_eq!(&depths[..4], &[1, 1, 1, 1]);
        assert!(depths[4..].iter().all(|&d| d == 2));
    }
}
