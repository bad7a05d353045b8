//! Sharing, recovery, logical gates and the security checks on top of the
//! two simulation engines.

pub mod circuit;
pub mod session;
pub mod verify;

use thiserror::Error;

use crate::scheme::SchemeError;
use crate::stab::StabError;
use crate::statevec::{Gate, SimError};

pub use circuit::{plain_simulate, run_circuit, CircuitOp, CircuitProgram, RunOutcome};
pub use session::{
    dense_fidelity, encode_node, tau, Block, BlockId, BlockKind, EngineChoice, EngineKind,
    MeasurementRecord, Recovered, Session,
};
pub use verify::{verify_scheme, SubsetReport, SubsetSelection, VerifyOptions, VerifyReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Stab(#[from] StabError),
    #[error("no block {0}")]
    NoBlock(usize),
    #[error("block {0} has been measured and retired")]
    BlockRetired(usize),
    #[error("block {0} is not an ancilla")]
    NotAncilla(usize),
    #[error("control and target are the same block {0}")]
    SameBlock(usize),
    #[error("blocks are shared under different trees")]
    TreeMismatch,
    #[error("{0} has no transversal implementation here")]
    NotTransversal(Gate),
    #[error("set {0} is not authorized")]
    Unauthorized(String),
    #[error("ancilla exhausted: program needs {needed} T gates, budget is {budget}")]
    AncillaExhausted { needed: usize, budget: usize },
    #[error("joint output of {0} wires is too large to reconstruct")]
    TooManyOutputs(usize),
    #[error("unknown wire `{0}`")]
    UnknownWire(String),
    #[error("circuit line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl ProtocolError {
    /// Size limits rather than bad input.
    pub fn is_capacity(&self) -> bool {
        matches!(
            self,
            ProtocolError::Sim(SimError::TooLarge { .. } | SimError::TooManyKept(_))
                | ProtocolError::Stab(StabError::TooManyQubits(_) | StabError::RegisterFull)
                | ProtocolError::Scheme(SchemeError::CapExceeded { .. })
                | ProtocolError::TooManyOutputs(_)
        )
    }
}
