//! Quantum Kolmogorov-Arnold networks on simulated block-encodings.
//!
//! The crate simulates the block-encoding algebra (products, linear
//! combinations, Hadamard products, Chebyshev transforms) on dense state
//! vectors and builds QKAN layers and networks from it, together with
//! readout, resource accounting and a small trainer.

pub mod block_encoding;
pub mod encoders;
pub mod error;
pub mod gates;
pub mod operator;
pub mod par;
pub mod qkan;
pub mod qsvt;
pub mod readout;
pub mod register;
pub mod resources;
pub mod state;
pub mod trainer;

pub use block_encoding::{BlockEncoding, PrimitiveId, QueryLedger, StatePrepPair};
pub use error::{QkanError, Result};
pub use operator::{LinearOperator, C64, CMatrix};
pub use register::{Register, RegisterLayout};
pub use state::StateVector;
