//! `(alpha, a, eps)` block-encodings and the combinators that build new ones.
//!
//! Every encoding keeps its auxiliary registers above its system registers, so
//! the encoded block is the top-left `2^s x 2^s` corner of the unitary and
//! block extraction reads the first `2^s` amplitudes of `U |0>_aux |j>`.

pub(crate) mod ledger;
mod stateprep;

pub use ledger::{PrimitiveId, QueryLedger};
pub use stateprep::StatePrepPair;

use nalgebra::linalg::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{contract, domain, QkanError, Result};
use crate::operator::{max_abs, spectral_norm, CMatrix, LinearOperator, C64, DENSE_MAX_QUBITS};
use crate::par;
use crate::register::RegisterLayout;

#[derive(Debug, Clone)]
pub struct BlockEncoding {
    op: LinearOperator,
    alpha: f64,
    epsilon: f64,
    aux: RegisterLayout,
    system: RegisterLayout,
    ledger: QueryLedger,
    diagonal: bool,
    depth: usize,
}

impl BlockEncoding {
    /// A `(1, a, 0)` encoding of whatever block `op` carries.
    pub fn new(op: LinearOperator, aux: RegisterLayout, system: RegisterLayout) -> Result<Self> {
        let width = aux.total_qubits() + system.total_qubits();
        if op.qubits() != width {
            return Err(contract(format!(
                "operator has {} qubits but layout has {width}",
                op.qubits()
            )));
        }
        aux.concat(&system)?;
        Ok(Self {
            op,
            alpha: 1.0,
            epsilon: 0.0,
            aux,
            system,
            ledger: QueryLedger::new(),
            diagonal: false,
            depth: 0,
        })
    }

    /// The exact `(1, 0, 0)` encoding of the identity on `system`.
    pub fn identity(system: RegisterLayout) -> Result<Self> {
        let op = LinearOperator::identity(system.total_qubits())?;
        Ok(Self::new(op, RegisterLayout::new(), system)?.with_diagonal(true))
    }

    /// A unitary viewed as a `(1, 0, 0)` encoding of itself.
    pub fn of_unitary(op: LinearOperator, system_name: &str) -> Result<Self> {
        let system = RegisterLayout::single(system_name, op.qubits());
        Self::new(op, RegisterLayout::new(), system)
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_diagonal(mut self, diagonal: bool) -> Self {
        self.diagonal = diagonal;
        self
    }

    pub fn with_ledger(mut self, ledger: QueryLedger) -> Self {
        self.ledger = ledger;
        self
    }

    pub(crate) fn with_depth(mut self, depth: usize) -> Self {
        self.depth = depth;
        self
    }

    /// Same operator under a new split into auxiliary and system registers.
    pub(crate) fn relabeled(&self, aux: RegisterLayout, system: RegisterLayout) -> Result<Self> {
        if aux.total_qubits() + system.total_qubits() != self.op.qubits() {
            return Err(contract("relabeling must keep the qubit count"));
        }
        aux.concat(&system)?;
        Ok(Self {
            aux,
            system,
            ..self.clone()
        })
    }

    pub(crate) fn with_op(&self, op: LinearOperator) -> Self {
        Self {
            op,
            ..self.clone()
        }
    }

    pub fn op(&self) -> &LinearOperator {
        &self.op
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn num_aux(&self) -> usize {
        self.aux.total_qubits()
    }

    pub fn system_qubits(&self) -> usize {
        self.system.total_qubits()
    }

    pub fn system_dim(&self) -> usize {
        1usize << self.system_qubits()
    }

    pub fn total_qubits(&self) -> usize {
        self.op.qubits()
    }

    pub fn aux_layout(&self) -> &RegisterLayout {
        &self.aux
    }

    pub fn system_layout(&self) -> &RegisterLayout {
        &self.system
    }

    /// Full layout, auxiliary registers first.
    pub fn layout(&self) -> RegisterLayout {
        self.aux.concat(&self.system).expect("layout names are unique")
    }

    pub fn ledger(&self) -> &QueryLedger {
        &self.ledger
    }

    pub fn is_diagonal(&self) -> bool {
        self.diagonal
    }

    /// Number of network layers that produced this encoding.
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Encoding of `A^dagger`; its applications count as queries too.
    pub fn adjoint(&self) -> Self {
        Self {
            op: self.op.adjoint(),
            ..self.clone()
        }
    }

    /// Declare this encoding a primitive: one use of the result costs one
    /// query to `id`, and `id` expands into this encoding's own counts.
    pub fn as_primitive(&self, id: PrimitiveId) -> Self {
        Self {
            op: LinearOperator::tagged(id.clone(), &self.op),
            ledger: QueryLedger::primitive(id, &self.ledger),
            ..self.clone()
        }
    }

    /// Prefix every auxiliary register name.
    pub fn with_aux_prefix(&self, prefix: &str) -> Result<Self> {
        let aux = RegisterLayout::from_registers(
            self.aux
                .registers()
                .iter()
                .map(|r| (format!("{prefix}{}", r.name), r.qubits)),
        )?;
        aux.concat(&self.system)?;
        Ok(Self {
            aux,
            ..self.clone()
        })
    }

    /// `U |0>_aux |j>` for a system basis index `j`.
    pub fn apply_to_system_basis(&self, j: usize) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); self.op.dim()];
        v[j] = C64::new(1.0, 0.0);
        self.op.apply(&mut v);
        v
    }

    /// Max entrywise deviation of the encoded block from Hermitian.
    pub fn hermitian_defect(&self) -> Result<f64> {
        if self.system_qubits() <= DENSE_MAX_QUBITS {
            let a = extract_block(self)?;
            Ok(max_abs(&(&a - a.adjoint())))
        } else if self.diagonal {
            Ok(extract_diagonal(self)?
                .iter()
                .map(|z| 2.0 * z.im.abs())
                .fold(0.0, f64::max))
        } else {
            Err(QkanError::ResourceLimit {
                requested: self.system_qubits(),
                max: DENSE_MAX_QUBITS,
            })
        }
    }
}

/// `alpha * (<0|_aux (x) I) U (|0>_aux (x) I)` as a dense matrix.
pub fn extract_block(be: &BlockEncoding) -> Result<CMatrix> {
    if be.system_qubits() > DENSE_MAX_QUBITS {
        return Err(QkanError::ResourceLimit {
            requested: be.system_qubits(),
            max: DENSE_MAX_QUBITS,
        });
    }
    let s = be.system_dim();
    let cols = par::map_range(s, |j| {
        let mut v = be.apply_to_system_basis(j);
        v.truncate(s);
        v
    });
    Ok(CMatrix::from_fn(s, s, |i, j| cols[j][i] * be.alpha))
}

/// Diagonal of the encoded block, one operator application per entry.
pub fn extract_diagonal(be: &BlockEncoding) -> Result<Vec<C64>> {
    if !be.diagonal {
        return Err(contract("extract_diagonal on an encoding not flagged diagonal"));
    }
    Ok(par::map_range(be.system_dim(), |j| {
        be.apply_to_system_basis(j)[j] * be.alpha
    }))
}

/// Spectral-norm distance between the encoded block and `target`.
pub fn verify(be: &BlockEncoding, target: &CMatrix) -> Result<f64> {
    let a = extract_block(be)?;
    if a.shape() != target.shape() {
        return Err(contract(format!(
            "target is {:?}, block is {:?}",
            target.shape(),
            a.shape()
        )));
    }
    Ok(spectral_norm(&(a - target)))
}

/// Max-abs distance between the block diagonal and `target`, for diagonal encodings.
pub fn verify_diagonal(be: &BlockEncoding, target: &[f64]) -> Result<f64> {
    let d = extract_diagonal(be)?;
    if d.len() != target.len() {
        return Err(contract("target length does not match the system dimension"));
    }
    Ok(d
        .iter()
        .zip(target)
        .map(|(z, &t)| (z - C64::new(t, 0.0)).norm())
        .fold(0.0, f64::max))
}

fn range(start: usize, len: usize) -> impl Iterator<Item = usize> {
    start..start + len
}

/// Encoding of `A B` as `(I_b (x) U_A)(I_a (x) U_B)`; layout `[b | a | system]`.
pub fn product(a: &BlockEncoding, b: &BlockEncoding) -> Result<BlockEncoding> {
    if a.system_qubits() != b.system_qubits() {
        return Err(contract(format!(
            "product of encodings on {} and {} system qubits",
            a.system_qubits(),
            b.system_qubits()
        )));
    }
    let aux = b.aux.concat(&a.aux).map_err(|_| {
        contract(format!(
            "register collision between {:?} and {:?}",
            b.aux.names(),
            a.aux.names()
        ))
    })?;
    aux.concat(&a.system)?;
    let (na, nb, n) = (a.num_aux(), b.num_aux(), a.system_qubits());
    let total = na + nb + n;
    let a_pos: Vec<usize> = range(nb, na + n).collect();
    let b_pos: Vec<usize> = range(0, nb).chain(range(nb + na, n)).collect();
    let op = LinearOperator::product(vec![
        LinearOperator::embed(&a.op, &a_pos, total)?,
        LinearOperator::embed(&b.op, &b_pos, total)?,
    ])?;
    Ok(BlockEncoding {
        op,
        alpha: a.alpha * b.alpha,
        epsilon: a.alpha * b.epsilon + b.alpha * a.epsilon,
        aux,
        system: a.system.clone(),
        ledger: a.ledger.merged(&b.ledger),
        diagonal: a.diagonal && b.diagonal,
        depth: a.depth.max(b.depth),
    })
}

/// Linear combination `sum_j y_j A_j` via `(P_L^dagger (x) I) W (P_R (x) I)`.
///
/// Selector value `j` selects `bes[j]`; unused selector values act as identity.
pub fn lcu(bes: &[BlockEncoding], pair: &StatePrepPair) -> Result<BlockEncoding> {
    let first = bes.first().ok_or_else(|| contract("lcu of zero encodings"))?;
    if bes.len() > 1 << pair.qubits {
        return Err(contract(format!(
            "{} terms exceed a {}-qubit selector",
            bes.len(),
            pair.qubits
        )));
    }
    if bes.len() != pair.len() {
        return Err(contract(format!(
            "{} terms for {} coefficients",
            bes.len(),
            pair.len()
        )));
    }
    for be in bes {
        if be.system_qubits() != first.system_qubits() || be.aux != first.aux {
            return Err(contract("lcu terms must share auxiliary and system registers"));
        }
        if (be.alpha - first.alpha).abs() > 1e-12 {
            return Err(contract("lcu terms must share alpha"));
        }
    }
    let sel_name = first.layout().fresh_name("sel");
    let mut aux = RegisterLayout::single(sel_name, pair.qubits);
    aux = aux.concat(&first.aux)?;
    let inner = first.op.qubits();
    let id_inner = LinearOperator::identity(inner)?;
    let select = LinearOperator::select(
        pair.qubits,
        bes.iter().map(|b| Some(b.op.clone())).collect(),
    )?;
    let op = LinearOperator::product(vec![
        LinearOperator::kron(&pair.p_left.adjoint(), &id_inner)?,
        select,
        LinearOperator::kron(&pair.p_right, &id_inner)?,
    ])?;
    let mut ledger = QueryLedger::new();
    for be in bes {
        ledger.merge(&be.ledger);
    }
    let eps2 = bes.iter().map(|b| b.epsilon).fold(0.0, f64::max);
    Ok(BlockEncoding {
        op,
        alpha: first.alpha * pair.beta,
        epsilon: first.alpha * pair.eps_sp + pair.beta * eps2,
        aux,
        system: first.system.clone(),
        ledger,
        diagonal: bes.iter().all(|b| b.diagonal),
        depth: bes.iter().map(|b| b.depth).max().unwrap_or(0),
    })
}

/// Encoding of the entrywise product `A o B` via `(P (x) I) U_A (x) U_B (P^dagger (x) I)`.
///
/// Layout `[copy of B's system | b | a | A's system]`; the copy register holds
/// the XOR of the two system indices and is absorbed into the auxiliaries.
pub fn hadamard_product(a: &BlockEncoding, b: &BlockEncoding) -> Result<BlockEncoding> {
    let n = a.system_qubits();
    if b.system_qubits() != n {
        return Err(contract(format!(
            "hadamard product of encodings on {n} and {} system qubits",
            b.system_qubits()
        )));
    }
    let ab = b.aux.concat(&a.aux).map_err(|_| {
        contract(format!(
            "register collision between {:?} and {:?}",
            b.aux.names(),
            a.aux.names()
        ))
    })?;
    let copy_name = ab.concat(&a.system)?.fresh_name("copy");
    let aux = RegisterLayout::single(copy_name, n).concat(&ab)?;
    let (na, nb) = (a.num_aux(), b.num_aux());
    let total = n + nb + na + n;
    let b_pos: Vec<usize> = range(n, nb).chain(range(0, n)).collect();
    let a_pos: Vec<usize> = range(n + nb, na + n).collect();
    let sys: Vec<usize> = range(n + nb + na, n).collect();
    let copy: Vec<usize> = range(0, n).collect();
    let p = crate::gates::xor_copy(&sys, &copy, total)?;
    let op = LinearOperator::product(vec![
        p.clone(),
        LinearOperator::embed(&a.op, &a_pos, total)?,
        LinearOperator::embed(&b.op, &b_pos, total)?,
        p,
    ])?;
    Ok(BlockEncoding {
        op,
        alpha: a.alpha * b.alpha,
        epsilon: a.alpha * b.epsilon + b.alpha * a.epsilon,
        aux,
        system: a.system.clone(),
        ledger: a.ledger.merged(&b.ledger),
        diagonal: a.diagonal || b.diagonal,
        depth: a.depth.max(b.depth),
    })
}

/// `diag(A_11, ..., A_NN)` as the Hadamard product with the identity.
pub fn remove_offdiagonal(be: &BlockEncoding) -> Result<BlockEncoding> {
    let id = BlockEncoding::identity(be.system.clone())?;
    Ok(hadamard_product(be, &id)?.with_diagonal(true))
}

/// `U (x) I_k`: each diagonal entry repeated `2^k` times.
pub fn dilate(be: &BlockEncoding, k: usize) -> Result<BlockEncoding> {
    if !be.diagonal {
        return Err(contract("dilate needs a diagonal encoding"));
    }
    if k == 0 {
        return Ok(be.clone());
    }
    let mut system = be.system.clone();
    system.push(be.layout().fresh_name("dilate"), k)?;
    let op = LinearOperator::kron(&be.op, &LinearOperator::identity(k)?)?;
    Ok(BlockEncoding {
        op,
        system,
        ..be.clone()
    })
}

/// An encoding with one extra control qubit on top.
#[derive(Debug, Clone)]
pub struct ControlledEncoding {
    op: LinearOperator,
    control: String,
    inner: BlockEncoding,
}

impl ControlledEncoding {
    /// Operator on `[control | aux | system]`.
    pub fn op(&self) -> &LinearOperator {
        &self.op
    }

    pub fn control(&self) -> &str {
        &self.control
    }

    pub fn inner(&self) -> &BlockEncoding {
        &self.inner
    }

    /// Controlled applications cost the same queries as the bare encoding.
    pub fn ledger(&self) -> &QueryLedger {
        &self.inner.ledger
    }

    pub fn layout(&self) -> RegisterLayout {
        RegisterLayout::single(self.control.clone(), 1)
            .concat(&self.inner.layout())
            .expect("control name is fresh")
    }
}

/// Controlled version of `be`, active when the new top qubit is `|1>`.
pub fn make_controlled(be: &BlockEncoding, ctrl: &str) -> Result<ControlledEncoding> {
    if be.layout().contains(ctrl) {
        return Err(contract(format!("control register `{ctrl}` already in use")));
    }
    Ok(ControlledEncoding {
        op: LinearOperator::controlled(&be.op, 1, 1)?,
        control: ctrl.to_string(),
        inner: be.clone(),
    })
}

/// A unitary at spectral distance exactly `eps` from `be`'s operator.
///
/// `U' = U exp(i theta G)` for a seeded random Hermitian `G` with unit
/// spectral norm and `2 sin(theta / 2) = eps`. The error bound grows by `eps`.
pub fn perturb(be: &BlockEncoding, eps: f64, seed: u64) -> Result<BlockEncoding> {
    if !(0.0..=2.0).contains(&eps) {
        return Err(domain(format!("perturbation {eps} outside [0, 2]")));
    }
    if eps == 0.0 {
        return Ok(be.clone());
    }
    let u = be.op.to_matrix()?;
    let n = u.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = CMatrix::from_fn(n, n, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let g = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(g);
    let scale = eig.eigenvalues.iter().map(|l| l.abs()).fold(0.0, f64::max);
    let theta = 2.0 * (eps / 2.0).asin();
    let phases = nalgebra::DVector::from_iterator(
        n,
        eig.eigenvalues
            .iter()
            .map(|&l| C64::from_polar(1.0, theta * l / scale)),
    );
    let v = &eig.eigenvectors;
    let rotation = v * CMatrix::from_diagonal(&phases) * v.adjoint();
    let dense = LinearOperator::dense(u * rotation)?;
    let op = match be.op.tag() {
        Some(id) => LinearOperator::tagged(id.clone(), &dense),
        None => dense,
    };
    Ok(BlockEncoding {
        op,
        epsilon: be.epsilon + eps,
        ..be.clone()
    })
}

#[cfg(test)]
mod tests;
