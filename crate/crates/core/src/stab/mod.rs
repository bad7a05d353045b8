//! Hybrid stabilizer engine: Pauli algebra, tableau and recovery synthesis.

pub mod pauli;
pub mod recovery;
pub mod tableau;

pub use pauli::PauliWord;
pub use recovery::{plan_from_representatives, synthesize_recovery, PlanGate, RecoveryPlan};
pub use tableau::{HybridTableau, LogicalOp, MeasureKind, StabError, MAX_LOGICAL};
