//! Exhaustive or sampled security verification of a compiled scheme.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::session::{EngineChoice, EngineKind, Session};
use super::ProtocolError;
use crate::access::{all_subsets, PlayerSet};
use crate::scheme::SchemeTree;
use crate::stab::HybridTableau;
use crate::statevec::{SecretQubit, MAX_KEPT, MAX_QUBITS};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubsetSelection {
    All,
    /// A seeded sample of this many distinct subsets.
    Sample(usize),
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub engine: EngineChoice,
    pub seed: u64,
    /// Number of test secrets (at least three are used).
    pub secrets: usize,
    pub subsets: SubsetSelection,
    /// Recovery fidelity must reach `1 - tolerance`.
    pub tolerance: f64,
    /// Entrywise bound on reduced-matrix differences between secrets.
    pub independence_tol: f64,
    /// Sampled teleportation transcripts per secret; 0 skips sampling.
    pub transcript_trials: usize,
    pub transcript_tvd: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            engine: EngineChoice::Auto,
            seed: 1,
            secrets: 3,
            subsets: SubsetSelection::All,
            tolerance: 1e-9,
            independence_tol: 1e-10,
            transcript_trials: 10_000,
            transcript_tvd: 0.02,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SubsetReport {
    pub set: String,
    pub expected: bool,
    pub tree_authorized: bool,
    pub recoverable: bool,
    pub leaks: bool,
    /// Worst recovery fidelity over the test secrets (authorized sets).
    pub min_fidelity: Option<f64>,
    /// Worst reduced-matrix deviation between secrets (unauthorized sets
    /// small enough for the sparse engine).
    pub reduced_deviation: Option<f64>,
    /// Exact distance between transcript distributions.
    pub transcript_exact: Option<f64>,
    /// Sampled total-variation distance between transcript statistics.
    pub transcript_tvd: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub structure: String,
    pub engine: EngineKind,
    pub secrets: usize,
    pub subsets: Vec<SubsetReport>,
}

impl VerifyReport {
    pub fn passed(&self) -> usize {
        self.subsets.iter().filter(|s| s.pass).count()
    }

    pub fn all_pass(&self) -> bool {
        self.passed() == self.subsets.len()
    }

    pub fn table(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3e}"));
        let mut out = format!(
            "{:<18} {:<5} {:<5} {:<5} {:<5} {:>10} {:>10} {:>10} {:>10}  result\n",
            "subset", "auth", "tree", "recov", "leaks", "fidelity", "rho-dev", "tr-exact", "tr-tvd"
        );
        for s in &self.subsets {
            out.push_str(&format!(
                "{:<18} {:<5} {:<5} {:<5} {:<5} {:>10} {:>10} {:>10} {:>10}  {}\n",
                s.set,
                s.expected,
                s.tree_authorized,
                s.recoverable,
                s.leaks,
                fmt(s.min_fidelity),
                fmt(s.reduced_deviation),
                fmt(s.transcript_exact),
                fmt(s.transcript_tvd),
                if s.pass { "PASS" } else { "FAIL" }
            ));
        }
        out.push_str(&format!("{}/{} PASS\n", self.passed(), self.subsets.len()));
        out
    }
}

fn test_secrets(count: usize, seed: u64) -> Vec<SecretQubit> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5ec2_e75e_c2e7);
    let mut out = vec![SecretQubit::new(C64::new(0.6, 0.0), C64::new(0.0, 0.8)).expect("unit norm")];
    while out.len() < count.max(3) {
        out.push(SecretQubit::random(&mut rng));
    }
    out
}

fn selected_subsets(n: usize, selection: SubsetSelection, seed: u64) -> Vec<PlayerSet> {
    let all: Vec<PlayerSet> = all_subsets(n).collect();
    match selection {
        SubsetSelection::All => all,
        SubsetSelection::Sample(k) if k >= all.len() => all,
        SubsetSelection::Sample(k) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x005a_3b1e);
            let mut pool = all;
            let mut picked = Vec::with_capacity(k);
            for _ in 0..k {
                let i = rng.gen_range(0..pool.len());
                picked.push(pool.swap_remove(i));
            }
            picked.sort_by_key(|s| s.canonical_key());
            picked
        }
    }
}

/// Two-bit statistic of a transcript restricted to `leaves`: parities of
/// the outcomes at even and at odd positions of that list.
fn fold(outcomes: &BTreeMap<usize, u8>, leaves: &[usize]) -> usize {
    let mut bits = [0u8; 2];
    for (i, q) in leaves.iter().enumerate() {
        bits[i % 2] ^= outcomes.get(q).copied().unwrap_or(0);
    }
    usize::from(bits[0]) | usize::from(bits[1]) << 1
}

fn tvd(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / 2.0
}

pub fn verify_scheme(tree: &SchemeTree, opts: &VerifyOptions) -> Result<VerifyReport, ProtocolError> {
    let tree = Arc::new(tree.clone());
    let structure = tree.structure();
    let engine = opts.engine.resolve(tree.leaf_count());
    let secrets = test_secrets(opts.secrets, opts.seed);
    let subsets = selected_subsets(structure.player_count(), opts.subsets, opts.seed);

    let mut reference = HybridTableau::new();
    reference.append_tree(&tree, SecretQubit::basis(0))?;

    let unauthorized: Vec<PlayerSet> = subsets.iter().copied().filter(|&s| !tree.authorized(s)).collect();
    let exact = exact_transcripts(&tree, &secrets, &unauthorized)?;
    let sampled = sampled_transcripts(&tree, &secrets, &unauthorized, opts)?;

    let mut reports = Vec::with_capacity(subsets.len());
    for set in subsets {
        let leaves = tree.leaves_of(set);
        let expected = structure.is_authorized(set);
        let tree_authorized = tree.authorized(set);
        let recoverable = reference.recoverable(0, &leaves)?;
        let leaks = reference.leaks(&leaves);
        let mut report = SubsetReport {
            set: set.display(structure.labels()).to_string(),
            expected,
            tree_authorized,
            recoverable,
            leaks,
            min_fidelity: None,
            reduced_deviation: None,
            transcript_exact: exact.get(&set).copied(),
            transcript_tvd: sampled.get(&set).copied(),
            pass: false,
        };
        let consistent = expected == tree_authorized && expected == recoverable;
        if tree_authorized {
            let mut worst: f64 = 1.0;
            for (i, secret) in secrets.iter().enumerate() {
                let mut session = Session::new(engine, opts.seed.wrapping_add(i as u64));
                let id = session.share(tree.clone(), *secret)?;
                worst = worst.min(session.recover(id, set)?.fidelity(secret));
            }
            report.min_fidelity = Some(worst);
            report.pass = consistent && worst >= 1.0 - opts.tolerance;
        } else {
            if engine == EngineKind::Sparse && leaves.len() <= MAX_KEPT {
                let mut first = None;
                let mut worst: f64 = 0.0;
                for (i, secret) in secrets.iter().enumerate() {
                    let mut session = Session::new(engine, opts.seed.wrapping_add(i as u64));
                    session.share(tree.clone(), *secret)?;
                    let rho = session.sparse_state().expect("sparse").partial_trace(&leaves)?;
                    match &first {
                        None => first = Some(rho),
                        Some(base) => worst = worst.max(base.max_abs_diff(&rho)),
                    }
                }
                report.reduced_deviation = Some(worst);
            }
            report.pass = consistent
                && !leaks
                && report.reduced_deviation.is_none_or(|d| d <= opts.independence_tol)
                && report.transcript_exact.is_none_or(|d| d <= opts.independence_tol)
                && report.transcript_tvd.is_none_or(|d| d < opts.transcript_tvd);
        }
        reports.push(report);
    }
    Ok(VerifyReport {
        structure: structure.to_string(),
        engine,
        secrets: secrets.len(),
        subsets: reports,
    })
}

/// Exact ancilla readout distributions on each unauthorized set's leaves,
/// when secret and ancilla fit in the sparse engine together.
fn exact_transcripts(
    tree: &Arc<SchemeTree>,
    secrets: &[SecretQubit],
    sets: &[PlayerSet],
) -> Result<BTreeMap<PlayerSet, f64>, ProtocolError> {
    let mut out = BTreeMap::new();
    if 2 * tree.leaf_count() > MAX_QUBITS || sets.is_empty() {
        return Ok(out);
    }
    let mut per_secret = Vec::with_capacity(secrets.len());
    for secret in secrets {
        let mut session = Session::new(EngineKind::Sparse, 0);
        let id = session.share(tree.clone(), *secret)?;
        let anc = session.share_ancilla(tree.clone())?;
        session.teleport_entangle(id, anc)?;
        per_secret.push((session.block(anc).offset, session));
    }
    for &set in sets {
        let leaves = tree.leaves_of(set);
        let mut worst: f64 = 0.0;
        let mut base: Option<BTreeMap<u64, f64>> = None;
        for (offset, session) in &per_secret {
            let qubits: Vec<usize> = leaves.iter().map(|q| q + offset).collect();
            let dist = session.sparse_state().expect("sparse").z_distribution(&qubits)?;
            match &base {
                None => base = Some(dist),
                Some(b) => {
                    let keys: std::collections::BTreeSet<u64> = b.keys().chain(dist.keys()).copied().collect();
                    let d: f64 = keys
                        .iter()
                        .map(|k| (b.get(k).unwrap_or(&0.0) - dist.get(k).unwrap_or(&0.0)).abs())
                        .sum::<f64>()
                        / 2.0;
                    worst = worst.max(d);
                }
            }
        }
        out.insert(set, worst);
    }
    Ok(out)
}

/// Sampled folded-transcript distance between the first two secrets.
fn sampled_transcripts(
    tree: &Arc<SchemeTree>,
    secrets: &[SecretQubit],
    sets: &[PlayerSet],
    opts: &VerifyOptions,
) -> Result<BTreeMap<PlayerSet, f64>, ProtocolError> {
    let mut out = BTreeMap::new();
    if opts.transcript_trials == 0 || sets.is_empty() {
        return Ok(out);
    }
    let engine = if 2 * tree.leaf_count() <= MAX_QUBITS {
        EngineKind::Sparse
    } else {
        EngineKind::Stabilizer
    };
    let set_leaves: Vec<Vec<usize>> = sets.iter().map(|&s| tree.leaves_of(s)).collect();
    let mut hist = Vec::with_capacity(2);
    for (i, secret) in secrets.iter().take(2).enumerate() {
        let mut prepared = Session::new(engine, 0);
        let id = prepared.share(tree.clone(), *secret)?;
        let anc = prepared.share_ancilla(tree.clone())?;
        prepared.teleport_entangle(id, anc)?;
        let base_seed = opts.seed ^ ((i as u64 + 1) << 40);
        let counts = (0..opts.transcript_trials)
            .into_par_iter()
            .map(|trial| {
                let mut session = prepared.clone();
                session.reseed(base_seed.wrapping_add(trial as u64));
                let record = session.logical_measure_z(anc)?;
                let outcomes: BTreeMap<usize, u8> = record.outcomes.into_iter().collect();
                Ok(set_leaves.iter().map(|l| fold(&outcomes, l)).collect::<Vec<usize>>())
            })
            .try_fold(
                || vec![[0usize; 4]; sets.len()],
                |mut acc, folded: Result<Vec<usize>, ProtocolError>| {
                    for (a, f) in acc.iter_mut().zip(folded?) {
                        a[f] += 1;
                    }
                    Ok::<_, ProtocolError>(acc)
                },
            )
            .try_reduce(
                || vec![[0usize; 4]; sets.len()],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(b) {
                        for k in 0..4 {
                            x[k] += y[k];
                        }
                    }
                    Ok(a)
                },
            )?;
        hist.push(counts);
    }
    let n = opts.transcript_trials as f64;
    for (j, &set) in sets.iter().enumerate() {
        let a: Vec<f64> = hist[0][j].iter().map(|&c| c as f64 / n).collect();
        let b: Vec<f64> = hist[1][j].iter().map(|&c| c as f64 / n).collect();
        out.insert(set, tvd(&a, &b));
    }
    Ok(out)
}
