use super::{LayerSpec, QkanSpec};
use crate::block_encoding::{
    dilate, lcu, perturb, product, BlockEncoding, PrimitiveId, StatePrepPair,
};
use crate::encoders::{encode_diagonal_exact, encode_real_weights, weight_state_prep};
use crate::error::{contract, QkanError, Result};
use crate::gates;
use crate::operator::{max_qubits, LinearOperator};
use crate::qsvt;
use crate::register::RegisterLayout;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightEncoder {
    /// One reflection ancilla per weight vector, exact.
    #[default]
    Exact,
    /// Real part of a prepared state; `log2(NK) + 1` ancillas.
    RealPart,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    pub eps: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LayerOptions {
    pub weight_encoder: WeightEncoder,
    /// Perturb each weight encoding by `eps` (seed offset by degree).
    pub weight_perturbation: Option<Perturbation>,
}

impl WeightEncoder {
    fn aux_qubits(self, spec: &LayerSpec) -> usize {
        match self {
            WeightEncoder::Exact => 1,
            WeightEncoder::RealPart => spec.in_qubits() + spec.out_qubits() + 1,
        }
    }
}

/// `a_x + 1 + a_w + log2(d + 1) + n` for one layer.
pub fn layer_aux_count(input_aux: usize, spec: &LayerSpec, options: &LayerOptions) -> usize {
    input_aux
        + 1
        + options.weight_encoder.aux_qubits(spec)
        + spec.selector_qubits()
        + spec.in_qubits()
}

/// Auxiliary count after every layer, starting from `input_aux`.
pub fn network_aux_count(input_aux: usize, spec: &QkanSpec, options: &LayerOptions) -> Vec<usize> {
    spec.layers()
        .iter()
        .scan(input_aux, |a, layer| {
            *a = layer_aux_count(*a, layer, options);
            Some(*a)
        })
        .collect()
}

/// Step 1: `U_x (x) I_k`, entry `p * K + q` holds `x_p`.
pub fn step_dilate(be_x: &BlockEncoding, k: usize) -> Result<BlockEncoding> {
    dilate(be_x, k)
}

/// Step 2: `T_0, ..., T_d` of the dilated input.
///
/// The caller is responsible for the input block being Hermitian; dilation
/// preserves it, so [`build_layer`] checks once on the undilated encoding.
pub fn step_cheb(dilated: &BlockEncoding, d: usize) -> Result<Vec<BlockEncoding>> {
    (0..=d)
        .map(|r| qsvt::chebyshev_unchecked(dilated, r))
        .collect()
}

/// Weight encodings for every degree of layer `layer`, each a primitive.
pub fn weight_encodings(
    spec: &LayerSpec,
    layer: usize,
    options: &LayerOptions,
) -> Result<Vec<BlockEncoding>> {
    spec.weights()
        .iter()
        .enumerate()
        .map(|(r, w)| {
            let mut be = match options.weight_encoder {
                WeightEncoder::Exact => encode_diagonal_exact(w)?,
                WeightEncoder::RealPart => encode_real_weights(&weight_state_prep(w)?)?,
            };
            if let Some(p) = options.weight_perturbation {
                be = perturb(&be, p.eps, p.seed.wrapping_add(r as u64))?;
            }
            Ok(be
                .with_aux_prefix(&format!("w{layer}."))?
                .as_primitive(PrimitiveId::Weight { layer, degree: r }))
        })
        .collect()
}

/// Step 3: `T_r(x) * w^(r)` entrywise, for every degree.
pub fn step_mul(cheb: &[BlockEncoding], weights: &[BlockEncoding]) -> Result<Vec<BlockEncoding>> {
    if cheb.len() != weights.len() {
        return Err(contract("one weight encoding per Chebyshev term"));
    }
    let system = cheb
        .first()
        .ok_or_else(|| contract("no Chebyshev terms"))?
        .system_layout()
        .clone();
    cheb.iter()
        .zip(weights)
        .map(|(t, w)| {
            let w = w.relabeled(w.aux_layout().clone(), system.clone())?;
            Ok(product(t, &w)?.with_diagonal(true))
        })
        .collect()
}

/// Step 4: `1/(d+1) sum_r` of the weighted terms.
pub fn step_lcu(terms: &[BlockEncoding]) -> Result<BlockEncoding> {
    Ok(lcu(terms, &StatePrepPair::uniform(terms.len())?)?.with_diagonal(true))
}

/// Step 5: average over the `n` input qubits by conjugating with `H^{(x) n}`;
/// the input qubits become auxiliaries and the `k` output qubits remain.
pub fn step_sum(be: &BlockEncoding, n: usize, layer: usize) -> Result<BlockEncoding> {
    let a = be.num_aux();
    let total = be.total_qubits();
    let k = be.system_qubits().checked_sub(n).ok_or_else(|| contract("step_sum: n too large"))?;
    let op = if n == 0 {
        be.op().clone()
    } else {
        let positions: Vec<usize> = (a..a + n).collect();
        let hn = LinearOperator::embed(&gates::hadamard_n(n)?, &positions, total)?;
        LinearOperator::product(vec![hn.clone(), be.op().clone(), hn])?
    };
    let layout = be.layout();
    let sum_name = layout.fresh_name(&format!("sum{layer}"));
    let out_name = layout.fresh_name(&format!("out{layer}"));
    let mut aux = be.aux_layout().clone();
    aux.push(sum_name, n)?;
    let system = RegisterLayout::single(out_name, k);
    be.with_op(op).relabeled(aux, system).map(|b| b.with_diagonal(true))
}

/// One CHEB-QKAN layer (Steps 1-5) on the input encoding `be_x`.
///
/// `be_x` is wrapped as the primitive `Input { layer }` so that its uses are
/// counted; the result encodes `Phi(x)` over `log2 K` system qubits.
pub fn build_layer(
    be_x: &BlockEncoding,
    spec: &LayerSpec,
    layer: usize,
    options: &LayerOptions,
) -> Result<BlockEncoding> {
    if be_x.system_qubits() != spec.in_qubits() {
        return Err(contract(format!(
            "input encodes {} qubits, layer takes {}",
            be_x.system_qubits(),
            spec.in_qubits()
        )));
    }
    if !be_x.is_diagonal() {
        return Err(contract("layer input must be a diagonal encoding"));
    }
    let defect = be_x.hermitian_defect()?;
    if defect > 2.0 * be_x.epsilon() + 1e-9 {
        return Err(contract(format!(
            "layer input block is not Hermitian (defect {defect:.3e})"
        )));
    }
    let x = be_x.as_primitive(PrimitiveId::Input { layer });
    let dilated = step_dilate(&x, spec.out_qubits())?;
    let cheb = step_cheb(&dilated, spec.degree())?;
    let weights = weight_encodings(spec, layer, options)?;
    let terms = step_mul(&cheb, &weights)?;
    let summed = step_lcu(&terms)?;
    Ok(step_sum(&summed, spec.in_qubits(), layer)?.with_depth(layer + 1))
}

/// Per-layer encodings of a full network; the last one is the output.
#[derive(Debug, Clone)]
pub struct Network {
    layers: Vec<BlockEncoding>,
}

impl Network {
    pub fn layers(&self) -> &[BlockEncoding] {
        &self.layers
    }

    pub fn output(&self) -> &BlockEncoding {
        self.layers.last().expect("network has a layer")
    }
}

/// Compose the layers; each layer's output is the next layer's input primitive.
pub fn build_network(
    be_x0: &BlockEncoding,
    spec: &QkanSpec,
    options: &LayerOptions,
) -> Result<Network> {
    let aux = network_aux_count(be_x0.num_aux(), spec, options);
    let final_aux = *aux.last().unwrap();
    let system = spec.layers().last().unwrap().out_qubits();
    let max = max_qubits();
    if final_aux + system > max {
        return Err(QkanError::AncillaBudget {
            aux: final_aux,
            system,
            max,
        });
    }
    let mut layers: Vec<BlockEncoding> = Vec::with_capacity(spec.layers().len());
    for (l, layer) in spec.layers().iter().enumerate() {
        let input = layers.last().unwrap_or(be_x0);
        let mut opts = options.clone();
        if let Some(p) = opts.weight_perturbation.as_mut() {
            p.seed = p.seed.wrapping_add(1000 * l as u64);
        }
        layers.push(build_layer(input, layer, l, &opts)?);
    }
    Ok(Network { layers })
}
