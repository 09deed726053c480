//! Chebyshev transforms of Hermitian diagonal block-encodings.
//!
//! With `Z = 2|0><0|_aux - I`, the alternating product
//! `(U^dagger Z U Z)^{r/2}` (even `r`) or `U Z (U^dagger Z U Z)^{(r-1)/2}` (odd `r`)
//! block-encodes `T_r(A)` whenever `U` encodes a real diagonal `A`. No phase
//! correction is needed for this form.

use std::f64::consts::FRAC_PI_2;

use crate::block_encoding::BlockEncoding;
use crate::error::{contract, domain, Result};
use crate::gates;
use crate::operator::{LinearOperator, C64};
use crate::register::RegisterLayout;

/// Name of the QSVT ancilla register added on top of the encoding.
pub const QSVT_REGISTER: &str = "qsvt";

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSequence {
    phases: Vec<f64>,
}

impl PhaseSequence {
    pub fn new(phases: Vec<f64>) -> Result<Self> {
        if phases.is_empty() {
            return Err(domain("empty phase sequence"));
        }
        Ok(Self { phases })
    }

    /// `phi_1 = (1 - d) pi / 2`, `phi_i = pi / 2` otherwise.
    pub fn chebyshev(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(domain("Chebyshev phase sequence needs d >= 1"));
        }
        let mut phases = vec![FRAC_PI_2; d];
        phases[0] = (1.0 - d as f64) * FRAC_PI_2;
        Self::new(phases)
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn degree(&self) -> usize {
        self.phases.len()
    }
}

/// `2|0><0| - I` on `aux_count` qubits.
pub fn reflection(aux_count: usize) -> Result<LinearOperator> {
    let dim = 1usize << aux_count;
    let mut d = vec![C64::new(-1.0, 0.0); dim];
    d[0] = C64::new(1.0, 0.0);
    LinearOperator::diagonal(d)
}

fn check_input(be: &BlockEncoding) -> Result<()> {
    if (be.alpha() - 1.0).abs() > 1e-12 {
        return Err(contract("Chebyshev transform needs alpha = 1"));
    }
    let defect = be.hermitian_defect()?;
    if defect > 2.0 * be.epsilon() + 1e-9 {
        return Err(contract(format!(
            "encoded block is not Hermitian (defect {defect:.3e})"
        )));
    }
    Ok(())
}

fn with_qsvt_register(be: &BlockEncoding) -> Result<RegisterLayout> {
    let name = be.layout().fresh_name(QSVT_REGISTER);
    RegisterLayout::single(name, 1).concat(be.aux_layout())
}

/// `(1, a + 1, 4 r sqrt(eps))`-encoding of `T_r` of the encoded block.
///
/// The extra top qubit is the QSVT ancilla; it stays idle in this form but
/// keeps the register layout identical for every degree.
pub fn chebyshev_be(be: &BlockEncoding, r: usize) -> Result<BlockEncoding> {
    check_input(be)?;
    chebyshev_unchecked(be, r)
}

pub(crate) fn chebyshev_unchecked(be: &BlockEncoding, r: usize) -> Result<BlockEncoding> {
    let aux = with_qsvt_register(be)?;
    let width = be.total_qubits();
    let total = width + 1;
    if r == 0 {
        return Ok(BlockEncoding::new(
            LinearOperator::identity(total)?,
            aux,
            be.system_layout().clone(),
        )?
        .with_diagonal(true)
        .with_depth(be.depth()));
    }
    let z = LinearOperator::kron(
        &reflection(be.num_aux())?,
        &LinearOperator::identity(be.system_qubits())?,
    )?;
    let u = be.op().clone();
    let ud = u.adjoint();
    let mut factors = Vec::with_capacity(2 * r);
    if r % 2 == 1 {
        factors.extend([u.clone(), z.clone()]);
    }
    for _ in 0..r / 2 {
        factors.extend([ud.clone(), z.clone(), u.clone(), z.clone()]);
    }
    let w = LinearOperator::product(factors)?;
    let op = LinearOperator::kron(&LinearOperator::identity(1)?, &w)?;
    Ok(BlockEncoding::new(op, aux, be.system_layout().clone())?
        .with_epsilon(4.0 * r as f64 * be.epsilon().sqrt())
        .with_diagonal(be.is_diagonal())
        .with_ledger(be.ledger().repeated(r as u64))
        .with_depth(be.depth()))
}

/// `prod_j e^{i phi_j (2 Pi - I)} V_j` with `V_d = U` and `U`, `U^dagger`
/// alternating leftward, `Pi` the projector onto `|0>_aux`.
///
/// Each phase is applied through the QSVT ancilla: flip it when the auxiliary
/// register is `|0>`, rotate by `diag(e^{-i phi}, e^{i phi})`, flip back.
pub fn apply_phase_sequence(be: &BlockEncoding, seq: &PhaseSequence) -> Result<BlockEncoding> {
    check_input(be)?;
    let aux = with_qsvt_register(be)?;
    let a = be.num_aux();
    let total = be.total_qubits() + 1;
    let flip_positions: Vec<usize> = (1..=a).chain([0]).collect();
    let flip = LinearOperator::embed(
        &LinearOperator::controlled(&gates::x(), a, 0)?,
        &flip_positions,
        total,
    )?;
    let lifted = |op: &LinearOperator| LinearOperator::kron(&LinearOperator::identity(1)?, op);
    let u = lifted(be.op())?;
    let ud = u.adjoint();
    let d = seq.degree();
    let mut factors = Vec::with_capacity(4 * d);
    for (j, &phi) in seq.phases().iter().enumerate() {
        let rot = LinearOperator::embed(&gates::rz_half(phi), &[0], total)?;
        factors.extend([flip.clone(), rot, flip.clone()]);
        let from_right = d - 1 - j;
        factors.push(if from_right % 2 == 0 { u.clone() } else { ud.clone() });
    }
    let op = LinearOperator::product(factors)?;
    Ok(BlockEncoding::new(op, aux, be.system_layout().clone())?
        .with_epsilon(4.0 * d as f64 * be.epsilon().sqrt())
        .with_diagonal(be.is_diagonal())
        .with_ledger(be.ledger().repeated(d as u64))
        .with_depth(be.depth()))
}
