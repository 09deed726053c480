use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{contract, domain, Result};

/// One layer: `N` inputs, `K` outputs, degree `d`, weights `w[r][p * K + q]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLayer", into = "RawLayer")]
pub struct LayerSpec {
    n_in: usize,
    n_out: usize,
    degree: usize,
    weights: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct RawLayer {
    n_in: usize,
    n_out: usize,
    degree: usize,
    weights: Vec<Vec<f64>>,
}

impl TryFrom<RawLayer> for LayerSpec {
    type Error = crate::QkanError;

    fn try_from(raw: RawLayer) -> Result<Self> {
        LayerSpec::new(raw.n_in, raw.n_out, raw.degree, raw.weights)
    }
}

impl From<LayerSpec> for RawLayer {
    fn from(s: LayerSpec) -> Self {
        RawLayer {
            n_in: s.n_in,
            n_out: s.n_out,
            degree: s.degree,
            weights: s.weights,
        }
    }
}

fn check_pow2(what: &str, v: usize) -> Result<()> {
    if v == 0 || !v.is_power_of_two() {
        return Err(domain(format!("{what} = {v} is not a power of two")));
    }
    Ok(())
}

impl LayerSpec {
    pub fn new(n_in: usize, n_out: usize, degree: usize, weights: Vec<Vec<f64>>) -> Result<Self> {
        check_pow2("N", n_in)?;
        check_pow2("K", n_out)?;
        if weights.len() != degree + 1 {
            return Err(contract(format!(
                "{} weight vectors for degree {degree}",
                weights.len()
            )));
        }
        for (r, w) in weights.iter().enumerate() {
            if w.len() != n_in * n_out {
                return Err(contract(format!(
                    "weight vector {r} has {} entries, expected {}",
                    w.len(),
                    n_in * n_out
                )));
            }
            if let Some(v) = w.iter().find(|v| !(v.abs() <= 1.0)) {
                return Err(domain(format!("weight {v} outside [-1, 1]")));
            }
        }
        Ok(Self {
            n_in,
            n_out,
            degree,
            weights,
        })
    }

    pub fn constant(n_in: usize, n_out: usize, degree: usize, value: f64) -> Result<Self> {
        Self::new(n_in, n_out, degree, vec![vec![value; n_in * n_out]; degree + 1])
    }

    /// Weights drawn uniformly from `[-scale, scale]`.
    pub fn random(n_in: usize, n_out: usize, degree: usize, scale: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = (0..=degree)
            .map(|_| {
                (0..n_in * n_out)
                    .map(|_| rng.random_range(-scale..=scale))
                    .collect()
            })
            .collect();
        Self::new(n_in, n_out, degree, weights)
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// `log2 N`.
    pub fn in_qubits(&self) -> usize {
        self.n_in.trailing_zeros() as usize
    }

    /// `log2 K`.
    pub fn out_qubits(&self) -> usize {
        self.n_out.trailing_zeros() as usize
    }

    /// Selector qubits for the `d + 1` LCU terms.
    pub fn selector_qubits(&self) -> usize {
        (self.degree + 1).next_power_of_two().trailing_zeros() as usize
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn weight(&self, r: usize, p: usize, q: usize) -> f64 {
        self.weights[r][p * self.n_out + q]
    }

    pub fn num_parameters(&self) -> usize {
        (self.degree + 1) * self.n_in * self.n_out
    }

    pub fn parameters(&self) -> Vec<f64> {
        self.weights.concat()
    }

    pub fn with_parameters(&self, params: &[f64]) -> Result<Self> {
        if params.len() != self.num_parameters() {
            return Err(contract("parameter count mismatch"));
        }
        let weights = params
            .chunks(self.n_in * self.n_out)
            .map(|c| c.to_vec())
            .collect();
        Self::new(self.n_in, self.n_out, self.degree, weights)
    }
}

/// Layers composed left to right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNetwork", into = "RawNetwork")]
pub struct QkanSpec {
    layers: Vec<LayerSpec>,
}

#[derive(Serialize, Deserialize)]
struct RawNetwork {
    layers: Vec<LayerSpec>,
}

impl TryFrom<RawNetwork> for QkanSpec {
    type Error = crate::QkanError;

    fn try_from(raw: RawNetwork) -> Result<Self> {
        QkanSpec::new(raw.layers)
    }
}

impl From<QkanSpec> for RawNetwork {
    fn from(s: QkanSpec) -> Self {
        RawNetwork { layers: s.layers }
    }
}

impl QkanSpec {
    pub fn new(layers: Vec<LayerSpec>) -> Result<Self> {
        if layers.is_empty() {
            return Err(contract("network needs at least one layer"));
        }
        for (l, pair) in layers.windows(2).enumerate() {
            if pair[0].n_out != pair[1].n_in {
                return Err(contract(format!(
                    "layer {l} outputs {} nodes but layer {} takes {}",
                    pair[0].n_out,
                    l + 1,
                    pair[1].n_in
                )));
            }
        }
        Ok(Self { layers })
    }

    /// Random network over `dims = [N0, ..., NL]` with a shared degree.
    pub fn random(dims: &[usize], degree: usize, scale: f64, seed: u64) -> Result<Self> {
        if dims.len() < 2 {
            return Err(contract("need at least two dimensions"));
        }
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(l, w)| LayerSpec::random(w[0], w[1], degree, scale, seed.wrapping_add(l as u64)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(layers)
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].n_in)
            .chain(self.layers.iter().map(|l| l.n_out))
            .collect()
    }

    pub fn num_parameters(&self) -> usize {
        self.layers.iter().map(|l| l.num_parameters()).sum()
    }

    pub fn parameters(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.parameters()).collect()
    }

    pub fn with_parameters(&self, params: &[f64]) -> Result<Self> {
        if params.len() != self.num_parameters() {
            return Err(contract("parameter count mismatch"));
        }
        let mut rest = params;
        let layers = self
            .layers
            .iter()
            .map(|l| {
                let (head, tail) = rest.split_at(l.num_parameters());
                rest = tail;
                l.with_parameters(head)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(layers)
    }
}
