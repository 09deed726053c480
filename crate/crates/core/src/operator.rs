//! Lazily composed linear operators on qubit registers.
//!
//! An operator on `m` qubits is a tree of structured factors. [`LinearOperator::apply`]
//! works matrix-free on a state of length `2^m`; [`LinearOperator::to_matrix`]
//! materializes the same tree through dense algebra (kronecker products,
//! matrix products, block diagonals) and is meant for checks at small sizes.
//! Qubit 0 is the most significant bit of a basis index.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::block_encoding::PrimitiveId;
use crate::error::{contract, QkanError, Result};
use crate::par;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub const DEFAULT_MAX_QUBITS: usize = 22;

/// Largest qubit count for which dense materialization is allowed.
pub const DENSE_MAX_QUBITS: usize = 10;

static MAX_QUBITS: AtomicUsize = AtomicUsize::new(DEFAULT_MAX_QUBITS);

pub fn max_qubits() -> usize {
    MAX_QUBITS.load(Ordering::Relaxed)
}

/// Set the process-wide cap on operator width.
pub fn set_max_qubits(n: usize) {
    MAX_QUBITS.store(n, Ordering::Relaxed);
}

fn check_width(qubits: usize) -> Result<()> {
    let max = max_qubits();
    if qubits > max {
        Err(QkanError::ResourceLimit {
            requested: qubits,
            max,
        })
    } else {
        Ok(())
    }
}

#[derive(Clone)]
pub struct LinearOperator {
    qubits: usize,
    node: Arc<Node>,
}

enum Node {
    Identity,
    Dense(CMatrix),
    Diagonal(Vec<C64>),
    /// First factor acts on the most significant qubits.
    Kron(LinearOperator, LinearOperator),
    /// Matrix product `ops[0] * ops[1] * ...`; the last factor acts first.
    Product(Vec<LinearOperator>),
    /// `sum_j |j><j| (x) branches[j]`, identity for missing branches.
    Select {
        selector: usize,
        branches: Vec<Option<LinearOperator>>,
    },
    /// `inner` acting on the listed qubits of a wider register.
    Embed {
        inner: LinearOperator,
        positions: Vec<usize>,
        offsets: Vec<usize>,
        rest_bits: Vec<usize>,
    },
    /// Marks one application of a primitive block-encoding.
    Tagged {
        id: PrimitiveId,
        inner: LinearOperator,
    },
}

impl fmt::Debug for LinearOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &*self.node {
            Node::Identity => "identity".to_string(),
            Node::Dense(_) => "dense".to_string(),
            Node::Diagonal(_) => "diagonal".to_string(),
            Node::Kron(..) => "kron".to_string(),
            Node::Product(ops) => format!("product[{}]", ops.len()),
            Node::Select { branches, .. } => format!("select[{}]", branches.len()),
            Node::Embed { positions, .. } => format!("embed{positions:?}"),
            Node::Tagged { id, .. } => format!("tagged({id})"),
        };
        write!(f, "LinearOperator({} qubits, {kind})", self.qubits)
    }
}

fn is_power_of_two_dim(n: usize) -> Option<usize> {
    if n.is_power_of_two() {
        Some(n.trailing_zeros() as usize)
    } else {
        None
    }
}

impl LinearOperator {
    fn from_node(qubits: usize, node: Node) -> Self {
        Self {
            qubits,
            node: Arc::new(node),
        }
    }

    pub fn identity(qubits: usize) -> Result<Self> {
        check_width(qubits)?;
        Ok(Self::from_node(qubits, Node::Identity))
    }

    pub fn dense(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(contract("dense operator must be square"));
        }
        let qubits = is_power_of_two_dim(matrix.nrows())
            .ok_or_else(|| contract("dense operator dimension must be a power of two"))?;
        if qubits > DENSE_MAX_QUBITS {
            return Err(QkanError::ResourceLimit {
                requested: qubits,
                max: DENSE_MAX_QUBITS,
            });
        }
        Ok(Self::from_node(qubits, Node::Dense(matrix)))
    }

    pub fn diagonal(entries: Vec<C64>) -> Result<Self> {
        let qubits = is_power_of_two_dim(entries.len())
            .ok_or_else(|| contract("diagonal length must be a power of two"))?;
        check_width(qubits)?;
        Ok(Self::from_node(qubits, Node::Diagonal(entries)))
    }

    pub fn kron(a: &LinearOperator, b: &LinearOperator) -> Result<Self> {
        let qubits = a.qubits + b.qubits;
        check_width(qubits)?;
        if a.is_identity() && b.is_identity() {
            return Self::identity(qubits);
        }
        Ok(Self::from_node(qubits, Node::Kron(a.clone(), b.clone())))
    }

    /// `a * b`: apply `b` first.
    pub fn compose(a: &LinearOperator, b: &LinearOperator) -> Result<Self> {
        Self::product(vec![a.clone(), b.clone()])
    }

    /// Matrix product of the factors in the given order (rightmost acts first).
    pub fn product(ops: Vec<LinearOperator>) -> Result<Self> {
        let first = ops
            .first()
            .ok_or_else(|| contract("product of zero operators"))?;
        let qubits = first.qubits;
        if let Some(bad) = ops.iter().find(|o| o.qubits != qubits) {
            return Err(contract(format!(
                "dimension mismatch in product: {} vs {} qubits",
                qubits, bad.qubits
            )));
        }
        let mut flat = Vec::with_capacity(ops.len());
        for op in ops {
            match &*op.node {
                Node::Identity => {}
                Node::Product(inner) => flat.extend(inner.iter().cloned()),
                _ => flat.push(op),
            }
        }
        match flat.len() {
            0 => Self::identity(qubits),
            1 => Ok(flat.pop().unwrap()),
            _ => Ok(Self::from_node(qubits, Node::Product(flat))),
        }
    }

    /// Block-diagonal select: branch `j` acts when the top `selector` qubits hold `j`.
    pub fn select(selector: usize, branches: Vec<Option<LinearOperator>>) -> Result<Self> {
        if branches.len() > (1usize << selector) {
            return Err(contract(format!(
                "{} branches do not fit a {selector}-qubit selector",
                branches.len()
            )));
        }
        let target = branches
            .iter()
            .flatten()
            .map(|b| b.qubits)
            .next()
            .ok_or_else(|| contract("select needs at least one branch"))?;
        if branches.iter().flatten().any(|b| b.qubits != target) {
            return Err(contract("select branches must share a dimension"));
        }
        check_width(selector + target)?;
        Ok(Self::from_node(
            selector + target,
            Node::Select { selector, branches },
        ))
    }

    /// Acts as `target` when the top `ctrl_qubits` qubits equal `value`, identity otherwise.
    pub fn controlled(target: &LinearOperator, ctrl_qubits: usize, value: usize) -> Result<Self> {
        if ctrl_qubits >= usize::BITS as usize || value >> ctrl_qubits != 0 {
            return Err(contract(format!(
                "control value {value} does not fit {ctrl_qubits} qubits"
            )));
        }
        let mut branches = vec![None; value + 1];
        branches[value] = Some(target.clone());
        Self::select(ctrl_qubits, branches)
    }

    /// Place `inner` on the given qubits (inner's most significant qubit first)
    /// of a `total`-qubit register.
    pub fn embed(inner: &LinearOperator, positions: &[usize], total: usize) -> Result<Self> {
        if positions.len() != inner.qubits {
            return Err(contract(format!(
                "embed: {} positions for a {}-qubit operator",
                positions.len(),
                inner.qubits
            )));
        }
        let mut seen = vec![false; total];
        for &p in positions {
            if p >= total || seen[p] {
                return Err(contract(format!("embed: invalid or repeated qubit {p}")));
            }
            seen[p] = true;
        }
        check_width(total)?;
        if inner.is_identity() {
            return Self::identity(total);
        }
        if positions.len() == total && positions.iter().enumerate().all(|(i, &p)| i == p) {
            return Ok(inner.clone());
        }
        let bit = |q: usize| 1usize << (total - 1 - q);
        let t = positions.len();
        let offsets = (0..1usize << t)
            .map(|s| {
                (0..t)
                    .filter(|&i| s >> (t - 1 - i) & 1 == 1)
                    .map(|i| bit(positions[i]))
                    .sum()
            })
            .collect();
        let mut rest_bits: Vec<usize> = (0..total).filter(|q| !seen[*q]).map(bit).collect();
        rest_bits.sort_unstable();
        Ok(Self::from_node(
            total,
            Node::Embed {
                inner: inner.clone(),
                positions: positions.to_vec(),
                offsets,
                rest_bits,
            },
        ))
    }

    /// Wrap as one application of the primitive `id`.
    pub fn tagged(id: PrimitiveId, inner: &LinearOperator) -> Self {
        Self::from_node(
            inner.qubits,
            Node::Tagged {
                id,
                inner: inner.clone(),
            },
        )
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        1usize << self.qubits
    }

    pub fn is_identity(&self) -> bool {
        matches!(&*self.node, Node::Identity)
    }

    /// The primitive this operator is one application of, if it is tagged at the top.
    pub fn tag(&self) -> Option<&PrimitiveId> {
        match &*self.node {
            Node::Tagged { id, .. } => Some(id),
            _ => None,
        }
    }

    pub fn adjoint(&self) -> LinearOperator {
        let node = match &*self.node {
            Node::Identity => return self.clone(),
            Node::Dense(m) => Node::Dense(m.adjoint()),
            Node::Diagonal(d) => Node::Diagonal(d.iter().map(|z| z.conj()).collect()),
            Node::Kron(a, b) => Node::Kron(a.adjoint(), b.adjoint()),
            Node::Product(ops) => Node::Product(ops.iter().rev().map(|o| o.adjoint()).collect()),
            Node::Select { selector, branches } => Node::Select {
                selector: *selector,
                branches: branches
                    .iter()
                    .map(|b| b.as_ref().map(|o| o.adjoint()))
                    .collect(),
            },
            Node::Embed {
                inner,
                positions,
                offsets,
                rest_bits,
            } => Node::Embed {
                inner: inner.adjoint(),
                positions: positions.clone(),
                offsets: offsets.clone(),
                rest_bits: rest_bits.clone(),
            },
            Node::Tagged { id, inner } => Node::Tagged {
                id: id.clone(),
                inner: inner.adjoint(),
            },
        };
        Self::from_node(self.qubits, node)
    }

    /// In-place matrix-free application to a state of length `2^qubits`.
    pub fn apply(&self, v: &mut [C64]) {
        assert_eq!(v.len(), self.dim(), "state length does not match operator");
        match &*self.node {
            Node::Identity => {}
            Node::Dense(m) => {
                let n = v.len();
                let data = m.as_slice();
                let mut out = vec![C64::new(0.0, 0.0); n];
                for (j, &vj) in v.iter().enumerate() {
                    if vj.re == 0.0 && vj.im == 0.0 {
                        continue;
                    }
                    let col = &data[j * n..(j + 1) * n];
                    for (o, &mij) in out.iter_mut().zip(col) {
                        *o += mij * vj;
                    }
                }
                v.copy_from_slice(&out);
            }
            Node::Diagonal(d) => {
                for (x, &di) in v.iter_mut().zip(d) {
                    *x *= di;
                }
            }
            Node::Kron(a, b) => {
                let db = b.dim();
                if !b.is_identity() {
                    par::for_each_chunk(v, db, |_, chunk| b.apply(chunk));
                }
                if !a.is_identity() {
                    let da = a.dim();
                    let mut buf = vec![C64::new(0.0, 0.0); da];
                    for j in 0..db {
                        for i in 0..da {
                            buf[i] = v[i * db + j];
                        }
                        a.apply(&mut buf);
                        for i in 0..da {
                            v[i * db + j] = buf[i];
                        }
                    }
                }
            }
            Node::Product(ops) => {
                for op in ops.iter().rev() {
                    op.apply(v);
                }
            }
            Node::Select { selector, branches } => {
                let block = 1usize << (self.qubits - selector);
                par::for_each_chunk(&mut v[..block * branches.len()], block, |j, chunk| {
                    if let Some(op) = &branches[j] {
                        op.apply(chunk);
                    }
                });
            }
            Node::Embed {
                inner,
                offsets,
                rest_bits,
                ..
            } => {
                let mut buf = vec![C64::new(0.0, 0.0); offsets.len()];
                for c in 0..1usize << rest_bits.len() {
                    let mut base = 0;
                    let mut bits = c;
                    let mut k = 0;
                    while bits != 0 {
                        if bits & 1 == 1 {
                            base |= rest_bits[k];
                        }
                        bits >>= 1;
                        k += 1;
                    }
                    for (b, &o) in buf.iter_mut().zip(offsets) {
                        *b = v[base | o];
                    }
                    inner.apply(&mut buf);
                    for (&b, &o) in buf.iter().zip(offsets) {
                        v[base | o] = b;
                    }
                }
            }
            Node::Tagged { inner, .. } => inner.apply(v),
        }
    }

    /// Apply to a copy of `v`.
    pub fn applied(&self, v: &[C64]) -> Vec<C64> {
        let mut out = v.to_vec();
        self.apply(&mut out);
        out
    }

    /// Dense matrix obtained by applying the operator to every basis state.
    pub fn to_matrix_by_columns(&self) -> Result<CMatrix> {
        self.check_dense()?;
        let n = self.dim();
        let cols = par::map_range(n, |j| {
            let mut e = vec![C64::new(0.0, 0.0); n];
            e[j] = C64::new(1.0, 0.0);
            self.apply(&mut e);
            e
        });
        Ok(CMatrix::from_fn(n, n, |i, j| cols[j][i]))
    }

    /// Dense matrix assembled structurally from the factor tree.
    pub fn to_matrix(&self) -> Result<CMatrix> {
        self.check_dense()?;
        Ok(self.materialize())
    }

    fn check_dense(&self) -> Result<()> {
        if self.qubits > DENSE_MAX_QUBITS {
            Err(QkanError::ResourceLimit {
                requested: self.qubits,
                max: DENSE_MAX_QUBITS,
            })
        } else {
            Ok(())
        }
    }

    fn materialize(&self) -> CMatrix {
        let n = self.dim();
        match &*self.node {
            Node::Identity => CMatrix::identity(n, n),
            Node::Dense(m) => m.clone(),
            Node::Diagonal(d) => CMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(d)),
            Node::Kron(a, b) => a.materialize().kronecker(&b.materialize()),
            Node::Product(ops) => ops
                .iter()
                .map(|o| o.materialize())
                .reduce(|acc, m| acc * m)
                .unwrap(),
            Node::Select { selector, branches } => {
                let block = 1usize << (self.qubits - selector);
                let mut out = CMatrix::identity(n, n);
                for (j, b) in branches.iter().enumerate() {
                    if let Some(op) = b {
                        out.view_mut((j * block, j * block), (block, block))
                            .copy_from(&op.materialize());
                    }
                }
                out
            }
            Node::Embed {
                inner, positions, ..
            } => {
                let m = inner.materialize();
                let total = self.qubits;
                let t = positions.len();
                let local = |i: usize| {
                    positions
                        .iter()
                        .fold(0usize, |acc, &p| (acc << 1) | (i >> (total - 1 - p) & 1))
                };
                let mask: usize = positions.iter().map(|&p| 1usize << (total - 1 - p)).sum();
                debug_assert_eq!(m.nrows(), 1 << t);
                CMatrix::from_fn(n, n, |i, j| {
                    if i & !mask == j & !mask {
                        m[(local(i), local(j))]
                    } else {
                        C64::new(0.0, 0.0)
                    }
                })
            }
            Node::Tagged { inner, .. } => inner.materialize(),
        }
    }

    /// Outermost primitive applications, not looking inside tagged subtrees.
    pub fn tag_counts(&self) -> BTreeMap<PrimitiveId, u64> {
        let mut out = BTreeMap::new();
        self.walk_tags(&mut out, 1, false);
        out
    }

    /// Innermost primitive applications: a tagged subtree that itself contains
    /// tags is replaced by the tags inside it.
    pub fn leaf_tag_counts(&self) -> BTreeMap<PrimitiveId, u64> {
        let mut out = BTreeMap::new();
        self.walk_tags(&mut out, 1, true);
        out
    }

    fn walk_tags(&self, out: &mut BTreeMap<PrimitiveId, u64>, mult: u64, leaves: bool) {
        match &*self.node {
            Node::Identity | Node::Dense(_) | Node::Diagonal(_) => {}
            Node::Kron(a, b) => {
                a.walk_tags(out, mult, leaves);
                b.walk_tags(out, mult, leaves);
            }
            Node::Product(ops) => ops.iter().for_each(|o| o.walk_tags(out, mult, leaves)),
            Node::Select { branches, .. } => branches
                .iter()
                .flatten()
                .for_each(|o| o.walk_tags(out, mult, leaves)),
            Node::Embed { inner, .. } => inner.walk_tags(out, mult, leaves),
            Node::Tagged { id, inner } => {
                if leaves {
                    let sub = inner.leaf_tag_counts();
                    if crate::block_encoding::ledger::expands_into(sub.keys()) {
                        for (k, c) in sub {
                            *out.entry(k).or_insert(0) += c * mult;
                        }
                        return;
                    }
                }
                *out.entry(id.clone()).or_insert(0) += mult;
            }
        }
    }
}

/// Max-norm deviation of `A^dagger A` from the identity.
pub fn unitarity_defect(op: &LinearOperator) -> Result<f64> {
    let m = op.to_matrix()?;
    let n = m.nrows();
    let g = m.adjoint() * &m - CMatrix::identity(n, n);
    Ok(g.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Largest entrywise modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Spectral norm (largest singular value).
pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}
