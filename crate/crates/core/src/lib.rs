pub mod access;
pub mod scheme;
pub mod statevec;
pub mod stab;
pub mod protocol;
