//! Analytic query and ancilla costs of CHEB-QKAN networks, and their
//! reconciliation against instrumented ledgers.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::block_encoding::{PrimitiveId, QueryLedger};
use crate::error::{contract, Result};
use crate::qkan::QkanSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostModel {
    /// `d(d+1)/2` input and `d+1` weight queries per layer.
    Exact,
    /// `d^2/2` and `d`.
    Asymptotic,
}

impl CostModel {
    fn coefficients(self, d: usize) -> (f64, f64) {
        let d = d as f64;
        match self {
            CostModel::Exact => (d * (d + 1.0) / 2.0, d + 1.0),
            CostModel::Asymptotic => (d * d / 2.0, d),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerCost {
    pub degree: usize,
    pub input_queries: u64,
    pub weight_queries: u64,
    /// `1 + a_w + log2(d+1) + log2 N` added by this layer.
    pub aux_increment: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub model: CostModel,
    pub layers: Vec<LayerCost>,
    /// `C_x^(l)` for `l = 0..=L` under the exact recursion.
    pub c_x_exact: Vec<f64>,
    /// `C_x^(l)` under the asymptotic coefficients.
    pub c_x_asymptotic: Vec<f64>,
    /// Closed form for `C_x^(L)`; only defined when all degrees agree.
    pub c_x_closed_form: Option<f64>,
    /// `a_x^(l)` for `l = 0..=L`.
    pub aux: Vec<usize>,
    /// The displayed sum with `L - 1` terms, kept for comparison.
    pub aux_displayed_sum: usize,
    /// Expected query count of every primitive in the final encoding, flattened.
    pub expected_queries: BTreeMap<PrimitiveId, u64>,
}

impl CostReport {
    /// `C_x^(L)` under the report's model.
    pub fn c_x(&self) -> f64 {
        match self.model {
            CostModel::Exact => *self.c_x_exact.last().unwrap(),
            CostModel::Asymptotic => *self.c_x_asymptotic.last().unwrap(),
        }
    }

    pub fn final_aux(&self) -> usize {
        *self.aux.last().unwrap()
    }

    /// Asymptotic over exact `C_x^(L)`.
    pub fn asymptotic_ratio(&self) -> f64 {
        self.c_x_asymptotic.last().unwrap() / self.c_x_exact.last().unwrap()
    }
}

fn ceil_log2(m: usize) -> usize {
    m.next_power_of_two().trailing_zeros() as usize
}

/// Costs of `spec` with input cost `c_x0`, weight cost `c_w[l]` for layer `l`,
/// input ancillas `a_x0` and weight ancillas `a_w[l]`.
pub fn analytic_cost(
    spec: &QkanSpec,
    c_x0: f64,
    c_w: &[f64],
    a_x0: usize,
    a_w: &[usize],
    model: CostModel,
) -> Result<CostReport> {
    let layers_spec = spec.layers();
    let l_count = layers_spec.len();
    if c_w.len() != l_count || a_w.len() != l_count {
        return Err(contract(format!(
            "need one weight cost and ancilla count per layer ({l_count})"
        )));
    }
    let mut layers = Vec::with_capacity(l_count);
    let mut c_exact = vec![c_x0];
    let mut c_asym = vec![c_x0];
    let mut aux = vec![a_x0];
    for (l, layer) in layers_spec.iter().enumerate() {
        let d = layer.degree();
        let inc = 1 + a_w[l] + ceil_log2(d + 1) + layer.in_qubits();
        layers.push(LayerCost {
            degree: d,
            input_queries: (d * (d + 1) / 2) as u64,
            weight_queries: (d + 1) as u64,
            aux_increment: inc,
        });
        let (u, v) = CostModel::Exact.coefficients(d);
        c_exact.push(u * c_exact[l] + v * c_w[l]);
        let (u, v) = CostModel::Asymptotic.coefficients(d);
        c_asym.push(u * c_asym[l] + v * c_w[l]);
        aux.push(aux[l] + inc);
    }
    let d0 = layers_spec[0].degree();
    let c_x_closed_form = layers_spec.iter().all(|l| l.degree() == d0).then(|| {
        let g = (d0 * d0) as f64 / 2.0;
        let big_l = l_count as i32;
        g.powi(big_l) * c_x0
            + d0 as f64
                * (1..=l_count)
                    .map(|l| g.powi(l as i32 - 1) * c_w[l_count - l])
                    .sum::<f64>()
    });
    let aux_displayed_sum = a_x0
        + layers[..l_count - 1]
            .iter()
            .map(|c| c.aux_increment)
            .sum::<usize>();

    let mut expected_queries = BTreeMap::new();
    // uses of layer l's output per use of the final encoding
    let mut uses = 1u64;
    for l in (0..l_count).rev() {
        for r in 0..=layers[l].degree {
            expected_queries.insert(PrimitiveId::Weight { layer: l, degree: r }, uses);
        }
        uses *= layers[l].input_queries;
    }
    if uses > 0 {
        expected_queries.insert(PrimitiveId::Input { layer: 0 }, uses);
    }
    Ok(CostReport {
        model,
        layers,
        c_x_exact: c_exact,
        c_x_asymptotic: c_asym,
        c_x_closed_form,
        aux,
        aux_displayed_sum,
        expected_queries,
    })
}

/// Unit query costs and one ancilla per exact encoder.
pub fn unit_cost(spec: &QkanSpec, model: CostModel) -> Result<CostReport> {
    let l = spec.layers().len();
    analytic_cost(spec, 1.0, &vec![1.0; l], 1, &vec![1; l], model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryDiff {
    pub primitive: PrimitiveId,
    pub expected: u64,
    pub observed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reconciliation {
    pub matches: bool,
    pub diffs: Vec<QueryDiff>,
    pub asymptotic_ratio: f64,
}

/// Compare the flattened ledger's input and weight counts with the exact model.
pub fn reconcile(report: &CostReport, ledger: &QueryLedger) -> Reconciliation {
    let observed: BTreeMap<PrimitiveId, u64> = ledger
        .flattened()
        .into_iter()
        .filter(|(id, _)| !matches!(id, PrimitiveId::Named(_)))
        .collect();
    let mut diffs = Vec::new();
    for (id, &e) in &report.expected_queries {
        let o = observed.get(id).copied().unwrap_or(0);
        if o != e {
            diffs.push(QueryDiff {
                primitive: id.clone(),
                expected: e,
                observed: o,
            });
        }
    }
    for (id, &o) in &observed {
        if !report.expected_queries.contains_key(id) && o != 0 {
            diffs.push(QueryDiff {
                primitive: id.clone(),
                expected: 0,
                observed: o,
            });
        }
    }
    Reconciliation {
        matches: diffs.is_empty(),
        diffs,
        asymptotic_ratio: report.asymptotic_ratio(),
    }
}
