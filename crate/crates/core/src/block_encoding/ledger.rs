use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Identity of a primitive block-encoding whose applications are counted.
///
/// Serialized as its display form (`input[0]`, `weight[1][2]`, or the name).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", from = "String")]
pub enum PrimitiveId {
    /// Input encoding consumed by layer `layer`; layer 0 reads the raw input.
    Input { layer: usize },
    /// Weight encoding of Chebyshev degree `degree` in layer `layer`.
    Weight { layer: usize, degree: usize },
    /// A free-standing oracle. When it sits inside an `Input` or `Weight`
    /// primitive it is not expanded through.
    Named(String),
}

impl PrimitiveId {
    pub fn is_named(&self) -> bool {
        matches!(self, PrimitiveId::Named(_))
    }
}

/// Whether a primitive with these inner leaf counts is replaced by them when
/// flattening. Primitives built only from named oracles stay leaves.
pub(crate) fn expands_into<'a>(mut leaves: impl Iterator<Item = &'a PrimitiveId>) -> bool {
    leaves.any(|id| !id.is_named())
}

impl fmt::Display for PrimitiveId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrimitiveId::Input { layer } => write!(f, "input[{layer}]"),
            PrimitiveId::Weight { layer, degree } => write!(f, "weight[{layer}][{degree}]"),
            PrimitiveId::Named(s) => write!(f, "{s}"),
        }
    }
}

impl From<PrimitiveId> for String {
    fn from(id: PrimitiveId) -> Self {
        id.to_string()
    }
}

impl From<String> for PrimitiveId {
    fn from(s: String) -> Self {
        let indices = |rest: &str| -> Option<Vec<usize>> {
            rest.strip_prefix('[')?
                .strip_suffix(']')?
                .split("][")
                .map(|t| t.parse().ok())
                .collect()
        };
        if let Some(rest) = s.strip_prefix("input") {
            if let Some([layer]) = indices(rest).as_deref() {
                return PrimitiveId::Input { layer: *layer };
            }
        }
        if let Some(rest) = s.strip_prefix("weight") {
            if let Some([layer, degree]) = indices(rest).as_deref() {
                return PrimitiveId::Weight {
                    layer: *layer,
                    degree: *degree,
                };
            }
        }
        PrimitiveId::Named(s)
    }
}

/// Query counts of a block-encoding.
///
/// `direct` counts applications of the primitives the encoding was assembled
/// from (an adjoint or any controlled version counts as one). When a composite
/// encoding is itself declared a primitive, its own counts are kept as the
/// expansion of the new id, so [`QueryLedger::flattened`] can report totals in
/// terms of the innermost primitives.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryLedger {
    direct: BTreeMap<PrimitiveId, u64>,
    expansions: BTreeMap<PrimitiveId, BTreeMap<PrimitiveId, u64>>,
}

impl QueryLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// One application of `id`, whose own cost is `inner`.
    pub fn primitive(id: PrimitiveId, inner: &QueryLedger) -> Self {
        let mut out = Self::new();
        let flat = inner.flattened();
        out.expansions = inner.expansions.clone();
        if expands_into(flat.keys()) {
            out.expansions.insert(id.clone(), flat);
        }
        out.direct.insert(id, 1);
        out
    }

    pub fn record(&mut self, id: PrimitiveId, count: u64) {
        *self.direct.entry(id).or_insert(0) += count;
    }

    pub fn merge(&mut self, other: &QueryLedger) {
        for (k, v) in &other.direct {
            self.record(k.clone(), *v);
        }
        for (k, v) in &other.expansions {
            self.expansions.entry(k.clone()).or_insert_with(|| v.clone());
        }
    }

    pub fn merged(&self, other: &QueryLedger) -> QueryLedger {
        let mut out = self.clone();
        out.merge(other);
        out
    }

    /// Every direct count multiplied by `factor`.
    pub fn repeated(&self, factor: u64) -> QueryLedger {
        let mut out = self.clone();
        out.direct.retain(|_, v| {
            *v *= factor;
            *v > 0
        });
        out
    }

    pub fn direct(&self) -> &BTreeMap<PrimitiveId, u64> {
        &self.direct
    }

    pub fn count(&self, id: &PrimitiveId) -> u64 {
        self.direct.get(id).copied().unwrap_or(0)
    }

    /// Counts expressed in primitives that have no recorded expansion.
    pub fn flattened(&self) -> BTreeMap<PrimitiveId, u64> {
        let mut out = BTreeMap::new();
        for (id, &n) in &self.direct {
            match self.expansions.get(id) {
                Some(exp) => {
                    for (leaf, &m) in exp {
                        *out.entry(leaf.clone()).or_insert(0) += n * m;
                    }
                }
                None => *out.entry(id.clone()).or_insert(0) += n,
            }
        }
        out
    }

    pub fn total(&self) -> u64 {
        self.direct.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.direct.is_empty()
    }
}
