//! Static elimination of mid-circuit measurements.
//!
//! The pipeline propagates the `|0…0⟩` input through a circuit with a bounded
//! sparse-state abstraction ([`qcp`]), tests whether each measured qubit is
//! unentangled ([`purity`]), and replaces qualifying measurements together with
//! their classically-controlled gates by a rotation, a probabilistic `X` and
//! ordinary quantum controls ([`rewrite`]). [`ensemble`] and [`verify`] give
//! exact semantics for probabilistic and dynamic circuits so every rewrite can
//! be checked.

pub mod bits;
pub mod circuit;
pub mod cli;
pub mod ensemble;
pub mod partition;
pub mod purity;
pub mod qcp;
pub mod rewrite;
pub mod sparse;
pub mod text;
pub mod verify;

pub use circuit::{Circuit, Clbit, Controlled, Gate, GateKind, Instruction, Qubit};
pub use text::{parse, serialize};
