use thiserror::Error;

/// Errors raised while building or evaluating block-encodings.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QkanError {
    /// The requested operator would exceed the configured qubit budget.
    #[error("resource limit: {requested} qubits requested, at most {max} allowed")]
    ResourceLimit { requested: usize, max: usize },

    /// The network needs more auxiliary qubits than the budget permits.
    #[error("ancilla budget exceeded: network needs {aux} auxiliary + {system} system qubits, at most {max} allowed")]
    AncillaBudget { aux: usize, system: usize, max: usize },

    /// Arguments violate a structural precondition (dimensions, register names, flags).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A numeric argument lies outside its admissible range.
    #[error("domain error: {0}")]
    Domain(String),

    /// Post-selection succeeded with negligible probability.
    #[error("degenerate output: post-selection probability {probability:e} is below 1e-12")]
    DegenerateOutput { probability: f64 },

    /// Training loss stayed far above its starting value.
    #[error("training diverged at iteration {iteration}: loss {loss:e} vs initial {initial:e}")]
    Divergence {
        iteration: usize,
        loss: f64,
        initial: f64,
    },
}

pub type Result<T> = std::result::Result<T, QkanError>;

pub(crate) fn contract(msg: impl Into<String>) -> QkanError {
    QkanError::Contract(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> QkanError {
    QkanError::Domain(msg.into())
}
