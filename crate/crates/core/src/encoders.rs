//! Diagonal block-encodings of input and weight vectors.

use crate::block_encoding::{lcu, BlockEncoding, PrimitiveId, QueryLedger, StatePrepPair};
use crate::error::{domain, Result};
use crate::gates;
use crate::operator::{LinearOperator, C64};
use crate::register::RegisterLayout;

/// Auxiliary register used by [`encode_diagonal_exact`].
pub const EXACT_AUX: &str = "anc";
/// Auxiliary copy register used by [`encode_from_stateprep`].
pub const PREP_AUX: &str = "prep";
/// Ledger id of one `U_prep` application inside the state-preparation encoders.
pub const PREP_ID: &str = "U_prep";

fn log2_exact(len: usize) -> Result<usize> {
    if len == 0 || !len.is_power_of_two() {
        return Err(domain(format!("vector length {len} is not a power of two")));
    }
    Ok(len.trailing_zeros() as usize)
}

/// `(1, 1, 0)`-encoding of `diag(x)` with one reflection `R(x_p)` per basis label.
///
/// Layout `[anc | data]`. The operator is real symmetric, hence Hermitian.
pub fn encode_diagonal_exact(x: &[f64]) -> Result<BlockEncoding> {
    let n = log2_exact(x.len())?;
    let branches = x
        .iter()
        .map(|&v| gates::signal_reflection(v).map(Some))
        .collect::<Result<Vec<_>>>()?;
    let select = LinearOperator::select(n, branches)?;
    let positions: Vec<usize> = (1..=n).chain([0]).collect();
    let op = LinearOperator::embed(&select, &positions, n + 1)?;
    Ok(BlockEncoding::new(
        op,
        RegisterLayout::single(EXACT_AUX, 1),
        RegisterLayout::single("data", n),
    )?
    .with_diagonal(true))
}

/// `(1, n, 0)`-encoding of `diag(psi)` for `psi = U_prep |0>`.
///
/// Prepares `psi` on a copy register and XORs the data index into it; the copy
/// register returns to `|0>` exactly on the component `psi_j |j><j|`. Uses one
/// application of `U_prep`.
pub fn encode_from_stateprep(u_prep: &LinearOperator) -> Result<BlockEncoding> {
    let n = u_prep.qubits();
    let id = PrimitiveId::Named(PREP_ID.to_string());
    let total = 2 * n;
    let copy: Vec<usize> = (0..n).collect();
    let data: Vec<usize> = (n..total).collect();
    let prep = LinearOperator::embed(&LinearOperator::tagged(id.clone(), u_prep), &copy, total)?;
    let op = LinearOperator::product(vec![gates::xor_copy(&data, &copy, total)?, prep])?;
    let mut ledger = QueryLedger::new();
    ledger.record(id, 1);
    Ok(BlockEncoding::new(
        op,
        RegisterLayout::single(PREP_AUX, n),
        RegisterLayout::single("data", n),
    )?
    .with_diagonal(true)
    .with_ledger(ledger))
}

/// `(1, n + 1, 0)`-encoding of `diag(Re psi)` as the average of the
/// state-preparation encoding and its adjoint.
pub fn encode_real_weights(u_prep: &LinearOperator) -> Result<BlockEncoding> {
    let be = encode_from_stateprep(u_prep)?;
    Ok(lcu(&[be.clone(), be.adjoint()], &StatePrepPair::uniform(2)?)?.with_diagonal(true))
}

/// State preparation whose amplitudes have real part `w`.
///
/// `psi = w + i sqrt(1 - |w|^2) e_0`, so `Re psi = w` and `|psi| = 1`.
pub fn weight_state_prep(w: &[f64]) -> Result<LinearOperator> {
    log2_exact(w.len())?;
    let norm2: f64 = w.iter().map(|v| v * v).sum();
    if norm2 > 1.0 + 1e-12 {
        return Err(domain(format!("weight vector has l2 norm {} > 1", norm2.sqrt())));
    }
    let mut psi: Vec<C64> = w.iter().map(|&v| C64::new(v, 0.0)).collect();
    psi[0].im = (1.0 - norm2).max(0.0).sqrt();
    LinearOperator::dense(gates::unitary_with_first_column(&psi)?)
}

/// State preparation with the given unit-norm amplitudes as its first column.
pub fn amplitude_state_prep(psi: &[C64]) -> Result<LinearOperator> {
    log2_exact(psi.len())?;
    LinearOperator::dense(gates::unitary_with_first_column(psi)?)
}
