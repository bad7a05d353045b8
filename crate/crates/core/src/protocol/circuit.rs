//! Logical circuit programs over shared wires.

use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use super::session::{dense_fidelity, BlockId, EngineKind, MeasurementRecord, Session};
use super::ProtocolError;
use crate::scheme::SchemeTree;
use crate::statevec::{Gate, SecretQubit, SparseState};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CircuitOp {
    X(usize),
    Z(usize),
    H(usize),
    S(usize),
    T(usize),
    Cnot(usize, usize),
    MeasZ(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CircuitProgram {
    pub wires: Vec<(String, SecretQubit)>,
    pub ancillas: usize,
    pub ops: Vec<CircuitOp>,
}

impl CircuitProgram {
    pub fn t_count(&self) -> usize {
        self.ops.iter().filter(|op| matches!(op, CircuitOp::T(_))).count()
    }

    pub fn wire_index(&self, name: &str) -> Option<usize> {
        self.wires.iter().position(|(n, _)| n == name)
    }

    pub fn parse(text: &str) -> Result<Self, ProtocolError> {
        let mut program = CircuitProgram {
            wires: Vec::new(),
            ancillas: 0,
            ops: Vec::new(),
        };
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| ProtocolError::Parse {
                line: i + 1,
                message,
            };
            let f: Vec<&str> = line.split_whitespace().collect();
            let wire = |name: &str| {
                program
                    .wire_index(name)
                    .ok_or_else(|| err(format!("undeclared wire `{name}`")))
            };
            let arity = |n: usize| {
                if f.len() == n + 1 {
                    Ok(())
                } else {
                    Err(err(format!("`{}` takes {n} argument(s)", f[0])))
                }
            };
            let op = match f[0].to_ascii_uppercase().as_str() {
                "SECRET" => {
                    arity(5)?;
                    if program.wire_index(f[1]).is_some() {
                        return Err(err(format!("wire `{}` declared twice", f[1])));
                    }
                    let mut v = [0.0; 4];
                    for (k, s) in f[2..].iter().enumerate() {
                        v[k] = s.parse().map_err(|_| err(format!("bad number `{s}`")))?;
                    }
                    let (a, b) = (C64::new(v[0], v[1]), C64::new(v[2], v[3]));
                    let norm = a.norm_sqr() + b.norm_sqr();
                    if (norm - 1.0).abs() > 1e-6 {
                        return Err(err(format!("amplitudes have norm² {norm}, expected 1")));
                    }
                    let secret = SecretQubit::normalized(a, b).map_err(|e| err(e.to_string()))?;
                    program.wires.push((f[1].to_string(), secret));
                    continue;
                }
                "ANCILLA" => {
                    arity(2)?;
                    if f[1] != "t" {
                        return Err(err("expected `ancilla t <count>`".into()));
                    }
                    program.ancillas = f[2].parse().map_err(|_| err(format!("bad count `{}`", f[2])))?;
                    continue;
                }
                "X" => {
                    arity(1)?;
                    CircuitOp::X(wire(f[1])?)
                }
                "Z" => {
                    arity(1)?;
                    CircuitOp::Z(wire(f[1])?)
                }
                "H" => {
                    arity(1)?;
                    CircuitOp::H(wire(f[1])?)
                }
                "S" => {
                    arity(1)?;
                    CircuitOp::S(wire(f[1])?)
                }
                "T" => {
                    arity(1)?;
                    CircuitOp::T(wire(f[1])?)
                }
                "MEASZ" => {
                    arity(1)?;
                    CircuitOp::MeasZ(wire(f[1])?)
                }
                "CNOT" => {
                    arity(2)?;
                    let (c, t) = (wire(f[1])?, wire(f[2])?);
                    if c == t {
                        return Err(err("CNOT needs two distinct wires".into()));
                    }
                    CircuitOp::Cnot(c, t)
                }
                other => return Err(err(format!("unknown instruction `{other}`"))),
            };
            program.ops.push(op);
        }
        Ok(program)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (name, s) in &self.wires {
            let _ = writeln!(
                out,
                "secret {name} {:?} {:?} {:?} {:?}",
                s.alpha.re, s.alpha.im, s.beta.re, s.beta.im
            );
        }
        let _ = writeln!(out, "ancilla t {}", self.ancillas);
        let name = |w: usize| self.wires[w].0.as_str();
        for op in &self.ops {
            let _ = match *op {
                CircuitOp::X(w) => writeln!(out, "X {}", name(w)),
                CircuitOp::Z(w) => writeln!(out, "Z {}", name(w)),
                CircuitOp::H(w) => writeln!(out, "H {}", name(w)),
                CircuitOp::S(w) => writeln!(out, "S {}", name(w)),
                CircuitOp::T(w) => writeln!(out, "T {}", name(w)),
                CircuitOp::MeasZ(w) => writeln!(out, "MEASZ {}", name(w)),
                CircuitOp::Cnot(c, t) => writeln!(out, "CNOT {} {}", name(c), name(t)),
            };
        }
        out
    }

    fn check_wires(&self) -> Result<(), ProtocolError> {
        let n = self.wires.len();
        for op in &self.ops {
            let ok = match *op {
                CircuitOp::Cnot(c, t) => c < n && t < n && c != t,
                CircuitOp::X(w)
                | CircuitOp::Z(w)
                | CircuitOp::H(w)
                | CircuitOp::S(w)
                | CircuitOp::T(w)
                | CircuitOp::MeasZ(w) => w < n,
            };
            if !ok {
                return Err(ProtocolError::UnknownWire(format!("{op:?}")));
            }
        }
        Ok(())
    }
}

/// Result of running a program on shared wires.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub session: Session,
    /// Block of each wire.
    pub wires: Vec<BlockId>,
    /// Logical measurement result per wire, if measured.
    pub measured: Vec<Option<u8>>,
    /// `(wire, record)` for each MEASZ, in order.
    pub measurements: Vec<(usize, MeasurementRecord)>,
    /// `(wire, record)` for each teleported T, in order.
    pub teleports: Vec<(usize, MeasurementRecord)>,
}

impl RunOutcome {
    pub fn live_wires(&self) -> Vec<usize> {
        (0..self.wires.len()).filter(|&w| self.measured[w].is_none()).collect()
    }

    /// Fidelity between the recovered live wires and the plain simulation
    /// post-selected on the same measurement outcomes.
    pub fn fidelity_vs_plain(&self, program: &CircuitProgram) -> Result<f64, ProtocolError> {
        let live = self.live_wires();
        if live.is_empty() {
            return Ok(1.0);
        }
        let plain = plain_simulate(program, &self.measured)?;
        let ids: Vec<BlockId> = live.iter().map(|&w| self.wires[w]).collect();
        let rho = self.session.recover_joint(&ids)?;
        let phi: Vec<C64> = (0..1u64 << live.len()).map(|k| plain.amplitude(k)).collect();
        Ok(dense_fidelity(&rho, &phi))
    }
}

/// Runs `program` with every wire and ancilla shared under `tree`. The T
/// budget is checked before anything is simulated.
pub fn run_circuit(
    program: &CircuitProgram,
    tree: Arc<SchemeTree>,
    engine: EngineKind,
    seed: u64,
) -> Result<RunOutcome, ProtocolError> {
    program.check_wires()?;
    let needed = program.t_count();
    if needed > program.ancillas {
        return Err(ProtocolError::AncillaExhausted {
            needed,
            budget: program.ancillas,
        });
    }
    let mut session = Session::new(engine, seed);
    let mut wires = Vec::with_capacity(program.wires.len());
    for (_, secret) in &program.wires {
        wires.push(session.share(tree.clone(), *secret)?);
    }
    let mut measured = vec![None; wires.len()];
    let mut measurements = Vec::new();
    let mut teleports = Vec::new();
    for op in &program.ops {
        match *op {
            CircuitOp::X(w) => session.logical_gate(wires[w], Gate::X)?,
            CircuitOp::Z(w) => session.logical_gate(wires[w], Gate::Z)?,
            CircuitOp::H(w) => session.logical_gate(wires[w], Gate::H)?,
            CircuitOp::S(w) => session.logical_s(wires[w])?,
            CircuitOp::Cnot(c, t) => session.logical_cnot(wires[c], wires[t])?,
            CircuitOp::T(w) => {
                // pre-shared τ blocks are materialized when consumed
                let anc = session.share_ancilla(tree.clone())?;
                teleports.push((w, session.logical_t(wires[w], anc)?));
            }
            CircuitOp::MeasZ(w) => {
                let record = session.logical_measure_z(wires[w])?;
                measured[w] = Some(record.parity);
                measurements.push((w, record));
            }
        }
    }
    Ok(RunOutcome {
        session,
        wires,
        measured,
        measurements,
        teleports,
    })
}

/// Plain one-qubit-per-wire simulation, post-selected on `outcomes`;
/// measured wires are dropped from the returned state.
pub fn plain_simulate(program: &CircuitProgram, outcomes: &[Option<u8>]) -> Result<SparseState, ProtocolError> {
    program.check_wires()?;
    let mut state = SparseState::zero(0)?;
    for (_, secret) in &program.wires {
        state.tensor(&SparseState::from_secret(*secret))?;
    }
    for op in &program.ops {
        match *op {
            CircuitOp::X(w) => state.apply_1q(Gate::X, w)?,
            CircuitOp::Z(w) => state.apply_1q(Gate::Z, w)?,
            CircuitOp::H(w) => state.apply_1q(Gate::H, w)?,
            CircuitOp::S(w) => state.apply_1q(Gate::S, w)?,
            CircuitOp::T(w) => state.apply_1q(Gate::T, w)?,
            CircuitOp::Cnot(c, t) => state.apply_cnot(c, t)?,
            CircuitOp::MeasZ(w) => {
                let bit = outcomes.get(w).copied().flatten().unwrap_or(0);
                state.postselect(w, bit)?;
            }
        }
    }
    let mut gone: Vec<usize> = (0..program.wires.len())
        .filter(|&w| outcomes.get(w).copied().flatten().is_some())
        .collect();
    gone.sort_unstable_by(|a, b| b.cmp(a));
    for w in gone {
        state.drop_product_block(w, 1)?;
    }
    Ok(state)
}
