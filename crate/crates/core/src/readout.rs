//! Hadamard-test output estimation and post-selected state preparation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::block_encoding::{make_controlled, BlockEncoding};
use crate::error::{contract, domain, QkanError, Result};
use crate::gates;
use crate::operator::{LinearOperator, C64};
use crate::par;
use crate::register::RegisterLayout;
use crate::state::StateVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum ReadoutMode {
    Exact,
    Shots { shots: u64, seed: u64 },
}

impl ReadoutMode {
    /// Shot count `ceil(1 / delta^2)` for a target precision `delta`.
    pub fn for_delta(delta: f64, seed: u64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(domain(format!("delta {delta} outside (0, 1)")));
        }
        Ok(ReadoutMode::Shots {
            shots: (1.0 / (delta * delta)).ceil() as u64,
            seed,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadoutResult {
    pub value: f64,
    pub stderr: f64,
    /// 0 in exact mode.
    pub shots: u64,
    /// Nominal precision `1/sqrt(shots)`; 0 in exact mode.
    pub delta_target: f64,
}

/// Controlled-encoding statevector after `(H (x) I) CU (H (x) I) |0>|0>_aux|q>`.
fn hadamard_test_state(be: &BlockEncoding, q: usize) -> Result<Vec<C64>> {
    let ctl_name = be.layout().fresh_name("hadamard");
    let cu = make_controlled(be, &ctl_name)?;
    let total = be.total_qubits() + 1;
    let h = LinearOperator::embed(&gates::h(), &[0], total)?;
    let circuit = LinearOperator::product(vec![h.clone(), cu.op().clone(), h])?;
    let mut v = vec![C64::new(0.0, 0.0); 1usize << total];
    v[q] = C64::new(1.0, 0.0);
    circuit.apply(&mut v);
    Ok(v)
}

/// Estimate `Phi_q = <0|_aux <q| U |0>_aux |q>` with one Hadamard test.
///
/// Exact mode reads the amplitude `(Phi_q + 1)/2` of the all-zero outcome and
/// returns `2|amp| - 1`. Shot mode samples the control qubit's `Z`.
pub fn hadamard_test(be: &BlockEncoding, q: usize, mode: ReadoutMode) -> Result<ReadoutResult> {
    if q >= be.system_dim() {
        return Err(domain(format!("output node {q} out of range {}", be.system_dim())));
    }
    let v = hadamard_test_state(be, q)?;
    match mode {
        ReadoutMode::Exact => Ok(ReadoutResult {
            value: be.alpha() * (2.0 * v[q].norm() - 1.0).clamp(-1.0, 1.0),
            stderr: 0.0,
            shots: 0,
            delta_target: 0.0,
        }),
        ReadoutMode::Shots { shots, seed } => {
            if shots == 0 {
                return Err(domain("shot count must be positive"));
            }
            let half = v.len() / 2;
            let p0: f64 = v[..half].iter().map(|z| z.norm_sqr()).sum();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(q as u64);
            let binom = Binomial::new(shots, p0.clamp(0.0, 1.0))
                .map_err(|e| contract(format!("binomial sampler: {e}")))?;
            let n0 = binom.sample(&mut rng);
            let z = 2.0 * n0 as f64 / shots as f64 - 1.0;
            Ok(ReadoutResult {
                value: be.alpha() * z,
                stderr: be.alpha() * ((1.0 - z * z).max(0.0) / shots as f64).sqrt(),
                shots,
                delta_target: 1.0 / (shots as f64).sqrt(),
            })
        }
    }
}

/// Hadamard test on every output node; shot streams are independent per node.
pub fn estimate_all_outputs(be: &BlockEncoding, mode: ReadoutMode) -> Result<Vec<ReadoutResult>> {
    par::map_range(be.system_dim(), |q| hadamard_test(be, q, mode))
        .into_iter()
        .collect()
}

#[derive(Debug, Clone)]
pub struct PreparedState {
    /// Post-selected state over the output register, largest amplitude real positive.
    pub state: StateVector,
    pub success_prob: f64,
    pub l2_error: f64,
    /// `||Phi||_2` of the reference output.
    pub norm_const: f64,
}

/// Apply the encoding to `|0>_aux |+>_k`, project the ancillas onto `|0>` and
/// renormalize; compare against `reference / ||reference||`.
pub fn prepare_state_postselect(be: &BlockEncoding, reference: &[f64]) -> Result<PreparedState> {
    let dim = be.system_dim();
    if reference.len() != dim {
        return Err(contract(format!(
            "reference has {} entries for {dim} outputs",
            reference.len()
        )));
    }
    let amp = C64::new(1.0 / (dim as f64).sqrt(), 0.0);
    let mut v = vec![C64::new(0.0, 0.0); be.op().dim()];
    v[..dim].iter_mut().for_each(|z| *z = amp);
    be.op().apply(&mut v);
    v.truncate(dim);
    let p: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    if p < 1e-12 {
        return Err(QkanError::DegenerateOutput { probability: p });
    }
    let norm_const = reference.iter().map(|r| r * r).sum::<f64>().sqrt();
    if norm_const == 0.0 {
        return Err(domain("reference output is the zero vector"));
    }
    let sp = p.sqrt();
    let l2_error = v
        .iter()
        .zip(reference)
        .map(|(z, r)| (z / sp - C64::new(r / norm_const, 0.0)).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let lead = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap();
    let phase = lead.conj() / lead.norm();
    let amplitudes = v.iter().map(|z| z * phase / sp).collect();
    let layout = if be.system_layout().is_empty() {
        RegisterLayout::new()
    } else {
        be.system_layout().clone()
    };
    Ok(PreparedState {
        state: StateVector::from_amplitudes(layout, amplitudes)?,
        success_prob: p,
        l2_error,
        norm_const,
    })
}

/// `eps_x` threshold `N^2 eps^2 / (144 K d^2)` for state preparation.
pub fn stateprep_eps_x_threshold(eps: f64, d: usize, k: usize, norm_const: f64) -> f64 {
    if d == 0 {
        return f64::INFINITY;
    }
    norm_const * norm_const * eps * eps / (144.0 * k as f64 * (d * d) as f64)
}

/// `eps_w` threshold `N eps / (3 sqrt K)`.
pub fn stateprep_eps_w_threshold(eps: f64, k: usize, norm_const: f64) -> f64 {
    norm_const * eps / (3.0 * (k as f64).sqrt())
}

/// Whether `eps_x` and `eps_w` are small enough for an `eps`-close prepared state.
pub fn check_stateprep_bound(eps: f64, eps_x: f64, eps_w: f64, d: usize, k: usize, norm_const: f64) -> bool {
    eps > 0.0
        && eps < 0.5
        && eps_x <= stateprep_eps_x_threshold(eps, d, k, norm_const)
        && eps_w <= stateprep_eps_w_threshold(eps, k, norm_const)
}
