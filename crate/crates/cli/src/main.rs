//! `qss`: check access structures, compile sharing schemes, share and recover
//! secrets, run logical circuits and verify schemes.
//!
//! Exit codes:
//! - 0: success
//! - 1: structure not admissible, set not authorized, or verification failed
//! - 2: malformed input (file syntax, bad arguments)
//! - 3: a size cap was exceeded
//! - 4: runtime failure (I/O, ancilla budget, simulation errors)

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64 as C64;
use qss_core::access::{AccessError, AccessStructure, PlayerSet};
use qss_core::protocol::{
    run_circuit, verify_scheme, CircuitProgram, EngineChoice, EngineKind, ProtocolError, Session,
    SubsetSelection, VerifyOptions,
};
use qss_core::scheme::{build_23, build_nn, build_omega, compile, SchemeError, SchemeTree};
use qss_core::stab::PlanGate;
use qss_core::statevec::{SecretQubit, MAX_QUBITS};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "qss", version, about = "Quantum secret sharing on concatenated 7-qubit codes")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// RNG seed.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Simulation engine: sparse, stabilizer or auto.
    #[arg(long, global = true, default_value = "auto", value_parser = parse_engine)]
    engine: EngineChoice,
    /// Recovery passes when fidelity is at least 1 - tolerance.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tolerance: f64,
    /// Emit a JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Report admissibility, maximality and the minimal sets of a structure.
    Check { structure: PathBuf },
    /// Compile a structure into a scheme tree.
    Compile {
        structure: PathBuf,
        /// Write the tree here instead of standard output.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Share a secret and dump the resulting state.
    Share {
        /// Tree file, structure file, or builtin:NAME.
        scheme: String,
        /// Secret amplitudes `re,im,re,im`.
        #[arg(long, default_value = "1,0,0,0", allow_hyphen_values = true)]
        secret: String,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Share a secret and recover it with a set of players.
    Recover {
        scheme: String,
        /// Players, comma or space separated.
        #[arg(long)]
        set: String,
        #[arg(long, default_value = "0.6,0,0,0.8", allow_hyphen_values = true)]
        secret: String,
    },
    /// Run a logical circuit on shared wires.
    Run {
        circuit: PathBuf,
        #[arg(long)]
        scheme: String,
    },
    /// Check recovery and secrecy for every (or a sample of) player subsets.
    Verify {
        scheme: String,
        /// Check every subset (the default).
        #[arg(long, conflicts_with = "sample")]
        all_subsets: bool,
        /// Check a seeded sample of N subsets.
        #[arg(long, value_name = "N")]
        sample: Option<usize>,
        /// Sampled teleportation transcripts per secret; 0 skips sampling.
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        /// Number of test secrets.
        #[arg(long, default_value_t = 3)]
        secrets: usize,
    },
}

fn parse_engine(s: &str) -> Result<EngineChoice, String> {
    s.parse()
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<AccessError> for Failure {
    fn from(e: AccessError) -> Self {
        let code = match e {
            AccessError::Inadmissible { .. } => 1,
            AccessError::TooManyPlayers(_) => 3,
            _ => 2,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<SchemeError> for Failure {
    fn from(e: SchemeError) -> Self {
        match e {
            SchemeError::Access(a) => a.into(),
            SchemeError::EmptyStructure => Failure::new(1, e.to_string()),
            SchemeError::CapExceeded { .. } => Failure::new(3, e.to_string()),
            _ => Failure::new(2, e.to_string()),
        }
    }
}

impl From<ProtocolError> for Failure {
    fn from(e: ProtocolError) -> Self {
        if e.is_capacity() {
            return Failure::new(3, e.to_string());
        }
        match e {
            ProtocolError::Scheme(s) => s.into(),
            ProtocolError::Parse { .. } | ProtocolError::UnknownWire(_) => Failure::new(2, e.to_string()),
            ProtocolError::Unauthorized(_) => Failure::new(1, e.to_string()),
            _ => Failure::new(4, e.to_string()),
        }
    }
}

type CmdResult = Result<Output, Failure>;

/// Text and JSON renderings of a command's result, plus its exit code.
struct Output {
    text: String,
    json: Value,
    code: u8,
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::new(4, format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::new(4, format!("cannot write {}: {e}", path.display())))
}

/// A tree file, a structure file (compiled on the fly), or `builtin:NAME`
/// with NAME one of `23`, `nnK`, `omegaK`.
fn load_scheme(spec: &str) -> Result<SchemeTree, Failure> {
    if let Some(name) = spec.strip_prefix("builtin:") {
        let k = |p: &str| name.strip_prefix(p).and_then(|n| n.parse::<usize>().ok());
        return match (name, k("nn"), k("omega")) {
            ("23", _, _) => Ok(build_23()),
            (_, Some(n), _) => Ok(build_nn(n)?),
            (_, _, Some(n)) => Ok(build_omega(n)?),
            _ => Err(Failure::new(2, format!("unknown builtin scheme `{name}`"))),
        };
    }
    let text = read(Path::new(spec))?;
    let is_tree = text.lines().any(|l| {
        let t = l.split('#').next().unwrap_or("").trim();
        t == "encode" || t.starts_with("leaf")
    });
    if is_tree {
        Ok(SchemeTree::parse(&text)?)
    } else {
        let structure = AccessStructure::parse(&text)?;
        structure.check_admissible()?;
        Ok(compile(&structure)?)
    }
}

fn parse_secret(s: &str) -> Result<SecretQubit, Failure> {
    let v: Vec<f64> = s
        .split([',', ' '])
        .filter(|t| !t.is_empty())
        .map(str::parse)
        .collect::<Result<_, _>>()
        .map_err(|_| Failure::new(2, format!("bad secret `{s}`")))?;
    if v.len() != 4 {
        return Err(Failure::new(2, "secret needs four numbers: re,im,re,im"));
    }
    let (a, b) = (C64::new(v[0], v[1]), C64::new(v[2], v[3]));
    let norm = a.norm_sqr() + b.norm_sqr();
    if (norm - 1.0).abs() > 1e-6 {
        return Err(Failure::new(2, format!("secret has norm² {norm}, expected 1")));
    }
    SecretQubit::normalized(a, b).map_err(|e| Failure::new(2, e.to_string()))
}

fn parse_set(s: &str, structure: &AccessStructure) -> Result<PlayerSet, Failure> {
    let mut set = PlayerSet::EMPTY;
    for name in s.split([',', ' ']).filter(|t| !t.is_empty()) {
        let i = structure
            .index_of(name)
            .ok_or_else(|| Failure::new(2, format!("unknown player `{name}`")))?;
        set = set.with(i);
    }
    Ok(set)
}

fn secret_json(s: &SecretQubit) -> Value {
    json!([[s.alpha.re, s.alpha.im], [s.beta.re, s.beta.im]])
}

fn cmd_check(path: &Path) -> CmdResult {
    let structure = AccessStructure::parse(&read(path)?)?;
    let minimal = structure.to_string();
    match structure.check_admissible() {
        Ok(()) => {
            let maximal = structure.is_maximal();
            let verdict = if maximal { "admissible, maximal" } else { "admissible, not maximal" };
            Ok(Output {
                text: format!("{verdict}\nminimal sets: {minimal}\n"),
                json: json!({ "admissible": true, "maximal": maximal, "minimal": minimal }),
                code: 0,
            })
        }
        Err(e) => Ok(Output {
            text: format!("{e}\nminimal sets: {minimal}\n"),
            json: json!({ "admissible": false, "reason": e.to_string(), "minimal": minimal }),
            code: 1,
        }),
    }
}

fn cmd_compile(path: &Path, out: Option<&Path>) -> CmdResult {
    let structure = AccessStructure::parse(&read(path)?)?;
    structure.check_admissible()?;
    let tree = compile(&structure)?;
    let stats = tree.stats();
    let tree_text = tree.to_text();
    let mut text = String::new();
    match out {
        Some(p) => write(p, &tree_text)?,
        None => text.push_str(&tree_text),
    }
    let _ = write!(text, "{stats}");
    Ok(Output {
        text,
        json: json!({ "structure": structure.to_string(), "stats": stats, "tree": tree_text }),
        code: 0,
    })
}

fn cmd_share(common: &Common, scheme: &str, secret: &str, out: Option<&Path>) -> CmdResult {
    let tree = Arc::new(load_scheme(scheme)?);
    let secret = parse_secret(secret)?;
    let engine = common.engine.resolve(tree.leaf_count());
    let mut session = Session::new(engine, common.seed);
    session.share(tree.clone(), secret)?;
    let dump = match (session.sparse_state(), session.tableau()) {
        (Some(s), _) => s.dump(),
        (_, Some(t)) => t.dump(),
        _ => unreachable!("session has one backend"),
    };
    let mut text = String::new();
    match out {
        Some(p) => {
            write(p, &dump)?;
            let _ = writeln!(text, "wrote {} lines to {}", dump.lines().count(), p.display());
        }
        None => text.push_str(&dump),
    }
    Ok(Output {
        text,
        json: json!({
            "engine": engine,
            "qubits": session.qubit_count(),
            "secret": secret_json(&secret),
            "dump": dump.lines().collect::<Vec<_>>(),
        }),
        code: 0,
    })
}

fn cmd_recover(common: &Common, scheme: &str, set: &str, secret: &str) -> CmdResult {
    let tree = Arc::new(load_scheme(scheme)?);
    let set = parse_set(set, tree.structure())?;
    let secret = parse_secret(secret)?;
    let engine = common.engine.resolve(tree.leaf_count());
    let mut session = Session::new(engine, common.seed);
    let id = session.share(tree.clone(), secret)?;
    let label = set.display(tree.structure().labels()).to_string();
    let rec = match session.recover(id, set) {
        Ok(r) => r,
        Err(ProtocolError::Unauthorized(s)) => {
            return Ok(Output {
                text: format!("set {s} is not authorized\n"),
                json: json!({ "set": s, "authorized": false }),
                code: 1,
            })
        }
        Err(e) => return Err(e.into()),
    };
    let fidelity = rec.fidelity(&secret);
    let got = rec.secret();
    let gates: Vec<String> = rec
        .plan
        .gates
        .iter()
        .map(|g| match *g {
            PlanGate::One(gate, q) => format!("{gate} {q}"),
            PlanGate::Cnot(c, t) => format!("CNOT {c} {t}"),
        })
        .collect();
    let pass = fidelity >= 1.0 - common.tolerance;
    let mut text = String::new();
    let _ = writeln!(text, "set:       {label}");
    let _ = writeln!(text, "engine:    {}", engine_name(engine));
    let _ = writeln!(text, "target:    leaf {}", rec.plan.target);
    let _ = writeln!(text, "X rep:     {}", rec.plan.x_rep);
    let _ = writeln!(text, "Z rep:     {}", rec.plan.z_rep);
    let _ = writeln!(text, "circuit:   {}", if gates.is_empty() { "-".into() } else { gates.join("; ") });
    let _ = writeln!(
        text,
        "recovered: ({:.12} {:+.12}i, {:.12} {:+.12}i)",
        got.alpha.re, got.alpha.im, got.beta.re, got.beta.im
    );
    let _ = writeln!(text, "fidelity:  {fidelity:.12}");
    let _ = writeln!(text, "{}", if pass { "PASS" } else { "FAIL" });
    Ok(Output {
        text,
        json: json!({
            "set": label,
            "authorized": true,
            "engine": engine,
            "target": rec.plan.target,
            "x_rep": rec.plan.x_rep.to_string(),
            "z_rep": rec.plan.z_rep.to_string(),
            "circuit": gates,
            "recovered": secret_json(&got),
            "fidelity": fidelity,
            "pass": pass,
        }),
        code: if pass { 0 } else { 1 },
    })
}

fn engine_name(e: EngineKind) -> &'static str {
    match e {
        EngineKind::Sparse => "sparse",
        EngineKind::Stabilizer => "stabilizer",
    }
}

fn cmd_run(common: &Common, circuit: &Path, scheme: &str) -> CmdResult {
    let program = CircuitProgram::parse(&read(circuit)?)?;
    let tree = Arc::new(load_scheme(scheme)?);
    // peak footprint: every wire plus one ancilla during a teleport
    let blocks = program.wires.len() + usize::from(program.t_count() > 0);
    let engine = match common.engine {
        EngineChoice::Auto if blocks * tree.leaf_count() <= MAX_QUBITS => EngineKind::Sparse,
        EngineChoice::Auto => EngineKind::Stabilizer,
        other => other.resolve(0),
    };
    let out = run_circuit(&program, tree, engine, common.seed)?;
    let fidelity = out.fidelity_vs_plain(&program)?;
    let pass = fidelity >= 1.0 - common.tolerance;
    let name = |w: usize| program.wires[w].0.clone();
    let mut text = String::new();
    let _ = writeln!(text, "engine:    {}", engine_name(engine));
    for (w, rec) in &out.teleports {
        let _ = writeln!(
            text,
            "T {}: parity {}{}",
            name(*w),
            rec.parity,
            if rec.corrected { ", corrected" } else { "" }
        );
    }
    for (w, rec) in &out.measurements {
        let _ = writeln!(text, "MEASZ {}: {}", name(*w), rec.parity);
    }
    let live: Vec<String> = out.live_wires().into_iter().map(name).collect();
    let _ = writeln!(text, "live:      {}", if live.is_empty() { "-".into() } else { live.join(" ") });
    let _ = writeln!(text, "fidelity:  {fidelity:.12}");
    let _ = writeln!(text, "{}", if pass { "PASS" } else { "FAIL" });
    let teleports: Vec<Value> = out
        .teleports
        .iter()
        .map(|(w, r)| json!({ "wire": name(*w), "parity": r.parity, "corrected": r.corrected }))
        .collect();
    let measurements: Vec<Value> = out
        .measurements
        .iter()
        .map(|(w, r)| json!({ "wire": name(*w), "outcome": r.parity, "bits": r.outcomes }))
        .collect();
    Ok(Output {
        text,
        json: json!({
            "engine": engine,
            "teleports": teleports,
            "measurements": measurements,
            "live": live,
            "fidelity": fidelity,
            "pass": pass,
        }),
        code: if pass { 0 } else { 1 },
    })
}

fn cmd_verify(common: &Common, scheme: &str, sample: Option<usize>, trials: usize, secrets: usize) -> CmdResult {
    let tree = load_scheme(scheme)?;
    let opts = VerifyOptions {
        engine: common.engine,
        seed: common.seed,
        secrets,
        subsets: sample.map_or(SubsetSelection::All, SubsetSelection::Sample),
        tolerance: common.tolerance,
        transcript_trials: trials,
        ..VerifyOptions::default()
    };
    let report = verify_scheme(&tree, &opts)?;
    let text = format!(
        "structure: {}\nengine:    {}\n{}",
        report.structure,
        engine_name(report.engine),
        report.table()
    );
    let json = serde_json::to_value(&report).map_err(|e| Failure::new(4, e.to_string()))?;
    Ok(Output {
        text,
        json,
        code: if report.all_pass() { 0 } else { 1 },
    })
}

fn dispatch(cli: &Cli) -> CmdResult {
    let c = &cli.common;
    match &cli.command {
        Command::Check { structure } => cmd_check(structure),
        Command::Compile { structure, out } => cmd_compile(structure, out.as_deref()),
        Command::Share { scheme, secret, out } => cmd_share(c, scheme, secret, out.as_deref()),
        Command::Recover { scheme, set, secret } => cmd_recover(c, scheme, set, secret),
        Command::Run { circuit, scheme } => cmd_run(c, circuit, scheme),
        Command::Verify {
            scheme,
            all_subsets: _,
            sample,
            trials,
            secrets,
        } => cmd_verify(c, scheme, *sample, *trials, *secrets),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(out) => {
            if cli.common.json {
                println!("{}", serde_json::to_string_pretty(&out.json).expect("json value"));
            } else {
                print!("{}", out.text);
            }
            ExitCode::from(out.code)
        }
        Err(f) => {
            if cli.common.json {
                println!("{}", json!({ "error": f.message, "exit_code": f.code }));
            }
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
