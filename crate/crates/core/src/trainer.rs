//! Gradient-free and finite-difference training of QKAN weights.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::block_encoding::extract_diagonal;
use crate::encoders::encode_diagonal_exact;
use crate::error::{contract, domain, QkanError, Result};
use crate::par;
use crate::qkan::{build_network, classical_network_eval, LayerOptions, QkanSpec};
use crate::readout::{estimate_all_outputs, ReadoutMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    samples: Vec<(Vec<f64>, Vec<f64>)>,
}

fn in_unit_box(v: &[f64]) -> bool {
    v.iter().all(|x| x.abs() <= 1.0)
}

impl Dataset {
    pub fn new(samples: Vec<(Vec<f64>, Vec<f64>)>) -> Result<Self> {
        if samples.is_empty() {
            return Err(domain("empty dataset"));
        }
        let (n, k) = (samples[0].0.len(), samples[0].1.len());
        for (x, y) in &samples {
            if x.len() != n || y.len() != k {
                return Err(contract("samples must share input and output sizes"));
            }
            if !in_unit_box(x) || !in_unit_box(y) {
                return Err(domain("sample entries must lie in [-1, 1]"));
            }
        }
        Ok(Self { samples })
    }

    /// Tensor grid of `points` values `linspace(-1, 1)` per input axis.
    pub fn grid(points: usize, n_in: usize, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self> {
        if points < 2 {
            return Err(domain("grid needs at least two points per axis"));
        }
        let axis: Vec<f64> = (0..points)
            .map(|i| -1.0 + 2.0 * i as f64 / (points - 1) as f64)
            .collect();
        let total = points.pow(n_in as u32);
        let samples = (0..total)
            .map(|mut idx| {
                let mut x = vec![0.0; n_in];
                for slot in x.iter_mut().rev() {
                    *slot = axis[idx % points];
                    idx /= points;
                }
                let y = f(&x);
                (x, y)
            })
            .collect();
        Self::new(samples)
    }

    pub fn samples(&self) -> &[(Vec<f64>, Vec<f64>)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// How model outputs are produced during training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Evaluator {
    /// Full block-encoding simulation with exact encoders.
    Simulator { readout: ReadoutMode },
    /// The classical reference evaluator.
    Classical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    FiniteDifference,
    Spsa,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub optimizer: Optimizer,
    pub step_size: f64,
    pub fd_step: f64,
    pub spsa_c: f64,
    pub spsa_alpha: f64,
    pub spsa_gamma: f64,
    pub iterations: usize,
    pub seed: u64,
    pub evaluator: Evaluator,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: Optimizer::FiniteDifference,
            step_size: 20.0,
            fd_step: 1e-4,
            spsa_c: 0.1,
            spsa_alpha: 0.602,
            spsa_gamma: 0.101,
            iterations: 500,
            seed: 0,
            evaluator: Evaluator::Simulator {
                readout: ReadoutMode::Exact,
            },
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(self.fd_step > 0.0) || !(self.spsa_c > 0.0) {
            return Err(domain("finite-difference step and SPSA perturbation must be positive"));
        }
        if !(self.step_size >= 0.0) {
            return Err(domain("step size must be non-negative"));
        }
        Ok(())
    }
}

fn sample_seed(seed: u64, i: usize) -> u64 {
    seed ^ (i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Model outputs for one input.
pub fn predict(spec: &QkanSpec, x: &[f64], evaluator: Evaluator) -> Result<Vec<f64>> {
    match evaluator {
        Evaluator::Classical => classical_network_eval(x, spec),
        Evaluator::Simulator { readout } => {
            let be_x = encode_diagonal_exact(x)?;
            let net = build_network(&be_x, spec, &LayerOptions::default())?;
            match readout {
                // Equal to the exact Hadamard-test value, without the control qubit.
                ReadoutMode::Exact => Ok(extract_diagonal(net.output())?
                    .iter()
                    .map(|z| z.re)
                    .collect()),
                shots => Ok(estimate_all_outputs(net.output(), shots)?
                    .iter()
                    .map(|r| r.value)
                    .collect()),
            }
        }
    }
}

fn reseeded(evaluator: Evaluator, i: usize) -> Evaluator {
    match evaluator {
        Evaluator::Simulator {
            readout: ReadoutMode::Shots { shots, seed },
        } => Evaluator::Simulator {
            readout: ReadoutMode::Shots {
                shots,
                seed: sample_seed(seed, i),
            },
        },
        other => other,
    }
}

/// Mean squared error over samples and outputs.
pub fn loss(spec: &QkanSpec, data: &Dataset, evaluator: Evaluator) -> Result<f64> {
    let dims = spec.dims();
    let (n, k) = (dims[0], *dims.last().unwrap());
    let (x0, y0) = &data.samples[0];
    if x0.len() != n || y0.len() != k {
        return Err(contract(format!(
            "dataset is {}->{}, network is {n}->{k}",
            x0.len(),
            y0.len()
        )));
    }
    let errs = par::map_range(data.len(), |i| {
        let (x, y) = &data.samples[i];
        predict(spec, x, reseeded(evaluator, i)).map(|out| {
            out.iter()
                .zip(y)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        })
    });
    let mut total = 0.0;
    for e in errs {
        total += e?;
    }
    Ok(total / (data.len() * k) as f64)
}

/// Central differences, one-sided where a step would leave `[-1, 1]`.
pub fn finite_diff_grad(
    spec: &QkanSpec,
    data: &Dataset,
    h: f64,
    evaluator: Evaluator,
) -> Result<Vec<f64>> {
    if !(h > 0.0) {
        return Err(domain("finite-difference step must be positive"));
    }
    let params = spec.parameters();
    let base = loss(spec, data, evaluator)?;
    let at = |i: usize, v: f64| -> Result<f64> {
        let mut p = params.clone();
        p[i] = v;
        loss(&spec.with_parameters(&p)?, data, evaluator)
    };
    par::map_range(params.len(), |i| {
        let w = params[i];
        if w + h > 1.0 {
            Ok((base - at(i, w - h)?) / h)
        } else if w - h < -1.0 {
            Ok((at(i, w + h)? - base) / h)
        } else {
            Ok((at(i, w + h)? - at(i, w - h)?) / (2.0 * h))
        }
    })
    .into_iter()
    .collect()
}

fn clamped(p: &[f64]) -> Vec<f64> {
    p.iter().map(|v| v.clamp(-1.0, 1.0)).collect()
}

/// SPSA gradient estimate at iteration `k` with a Rademacher direction.
pub fn spsa_gradient(
    spec: &QkanSpec,
    data: &Dataset,
    k: usize,
    seed: u64,
    config: &TrainConfig,
) -> Result<Vec<f64>> {
    let ck = config.spsa_c / ((k + 1) as f64).powf(config.spsa_gamma);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    let params = spec.parameters();
    let delta: Vec<f64> = params
        .iter()
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect();
    let shift = |sign: f64| -> Vec<f64> {
        clamped(
            &params
                .iter()
                .zip(&delta)
                .map(|(w, d)| w + sign * ck * d)
                .collect::<Vec<_>>(),
        )
    };
    let plus = loss(&spec.with_parameters(&shift(1.0))?, data, config.evaluator)?;
    let minus = loss(&spec.with_parameters(&shift(-1.0))?, data, config.evaluator)?;
    let g = (plus - minus) / (2.0 * ck);
    Ok(delta.iter().map(|d| g * d).collect())
}

/// One SPSA update with gain `a_k = eta / (k+1)^alpha`; weights clamped to `[-1, 1]`.
pub fn spsa_step(
    spec: &QkanSpec,
    data: &Dataset,
    k: usize,
    seed: u64,
    config: &TrainConfig,
) -> Result<QkanSpec> {
    let ak = config.step_size / ((k + 1) as f64).powf(config.spsa_alpha);
    let g = spsa_gradient(spec, data, k, seed, config)?;
    let p: Vec<f64> = spec
        .parameters()
        .iter()
        .zip(&g)
        .map(|(w, gi)| w - ak * gi)
        .collect();
    spec.with_parameters(&clamped(&p))
}

/// Plain gradient step `w - eta g`, clamped to `[-1, 1]`.
pub fn gradient_step(spec: &QkanSpec, grad: &[f64], eta: f64) -> Result<QkanSpec> {
    let p: Vec<f64> = spec
        .parameters()
        .iter()
        .zip(grad)
        .map(|(w, g)| w - eta * g)
        .collect();
    spec.with_parameters(&clamped(&p))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainResult {
    pub spec: QkanSpec,
    pub initial_loss: f64,
    /// Loss after each iteration.
    pub trace: Vec<f64>,
}

impl TrainResult {
    pub fn final_loss(&self) -> f64 {
        self.trace.last().copied().unwrap_or(self.initial_loss)
    }
}

const DIVERGENCE_FACTOR: f64 = 10.0;
const DIVERGENCE_PATIENCE: usize = 50;

/// Run the configured optimizer; deterministic for a given seed.
///
/// Stops with [`QkanError::Divergence`] once the loss has exceeded ten times
/// its initial value for 50 consecutive iterations.
pub fn train(spec: &QkanSpec, data: &Dataset, config: &TrainConfig) -> Result<TrainResult> {
    config.validate()?;
    let initial_loss = loss(spec, data, config.evaluator)?;
    let mut current = spec.clone();
    let mut trace = Vec::with_capacity(config.iterations);
    let mut above = 0;
    for k in 0..config.iterations {
        current = match config.optimizer {
            Optimizer::FiniteDifference => {
                let g = finite_diff_grad(&current, data, config.fd_step, config.evaluator)?;
                gradient_step(&current, &g, config.step_size)?
            }
            Optimizer::Spsa => spsa_step(&current, data, k, config.seed, config)?,
        };
        let l = loss(&current, data, config.evaluator)?;
        trace.push(l);
        above = if l > DIVERGENCE_FACTOR * initial_loss { above + 1 } else { 0 };
        if above >= DIVERGENCE_PATIENCE {
            return Err(QkanError::Divergence {
                iteration: k,
                loss: l,
                initial: initial_loss,
            });
        }
    }
    Ok(TrainResult {
        spec: current,
        initial_loss,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qkan::{chebyshev_t, LayerSpec};

    fn single(n: usize, k: usize, d: usize, seed: u64) -> QkanSpec {
        QkanSpec::new(vec![LayerSpec::random(n, k, d, 0.8, seed).unwrap()]).unwrap()
    }

    fn sim() -> Evaluator {
        Evaluator::Simulator {
            readout: ReadoutMode::Exact,
        }
    }

    /// d/dw[r][p][q] of the MSE of a single classical layer.
    fn analytic_grad(spec: &QkanSpec, data: &Dataset) -> Vec<f64> {
        let layer = &spec.layers()[0];
        let (n, k, d) = (layer.n_in(), layer.n_out(), layer.degree());
        let scale = 2.0 / (data.len() * k) as f64 / (n * (d + 1)) as f64;
        let mut g = vec![0.0; spec.num_parameters()];
        for (x, y) in data.samples() {
            let out = classical_network_eval(x, spec).unwrap();
            for r in 0..=d {
                for p in 0..n {
                    for q in 0..k {
                        g[r * n * k + p * k + q] += scale * (out[q] - y[q]) * chebyshev_t(r, x[p]);
                    }
                }
            }
        }
        g
    }

    #[test]
    fn loss_zero_at_own_outputs() {
        let spec = single(2, 2, 2, 1);
        let data = Dataset::grid(3, 2, |x| classical_network_eval(x, &spec).unwrap()).unwrap();
        assert!(loss(&spec, &data, sim()).unwrap() < 1e-20);
    }

    #[test]
    fn zero_model_losses() {
        let spec = QkanSpec::new(vec![LayerSpec::constant(2, 1, 1, 0.0).unwrap()]).unwrap();
        let zeros = Dataset::grid(2, 2, |_| vec![0.0]).unwrap();
        assert!(loss(&spec, &zeros, sim()).unwrap() < 1e-24);
        let half = Dataset::grid(2, 2, |_| vec![0.5]).unwrap();
        assert!((loss(&spec, &half, sim()).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn simulator_loss_equals_classical() {
        let spec = QkanSpec::random(&[2, 2, 1], 2, 1.0, 5).unwrap();
        let data = Dataset::grid(4, 2, |x| vec![0.3 * x[0] * x[1]]).unwrap();
        let a = loss(&spec, &data, sim()).unwrap();
        let b = loss(&spec, &data, Evaluator::Classical).unwrap();
        assert!((a - b).abs() <= 1e-9);
    }

    #[test]
    fn gradient_matches_analytic_oracle() {
        let spec = single(2, 2, 3, 9);
        let data = Dataset::grid(4, 2, |x| vec![0.2 * x[0], -0.1 * x[1] * x[1]]).unwrap();
        let h = 1e-4;
        let fd = finite_diff_grad(&spec, &data, h, sim()).unwrap();
        let exact = analytic_grad(&spec, &data);
        for (a, b) in fd.iter().zip(&exact) {
            assert!((a - b).abs() <= f64::max(1e-6, 10.0 * h * h), "{a} vs {b}");
        }
    }

    #[test]
    fn gradient_vanishes_at_targets() {
        let spec = single(2, 1, 2, 4);
        let data = Dataset::grid(3, 2, |x| classical_network_eval(x, &spec).unwrap()).unwrap();
        let h = 1e-4;
        let g = finite_diff_grad(&spec, &data, h, sim()).unwrap();
        assert!(g.iter().all(|v| v.abs() <= h * h));
    }

    #[test]
    fn one_sided_at_boundary() {
        let layer = LayerSpec::constant(2, 1, 1, 1.0).unwrap();
        let spec = QkanSpec::new(vec![layer]).unwrap();
        let data = Dataset::grid(3, 2, |x| vec![0.25 * x[0]]).unwrap();
        let fd = finite_diff_grad(&spec, &data, 1e-5, Evaluator::Classical).unwrap();
        let exact = analytic_grad(&spec, &data);
        for (a, b) in fd.iter().zip(&exact) {
            // loss is quadratic, so a one-sided difference is off by O(h)
            assert!((a - b).abs() <= 1e-5);
        }
    }

    #[test]
    fn symmetric_problem_symmetric_gradient() {
        let layer = LayerSpec::constant(2, 1, 2, 0.3).unwrap();
        let spec = QkanSpec::new(vec![layer]).unwrap();
        let data = Dataset::grid(5, 2, |x| vec![0.1 * (x[0] + x[1])]).unwrap();
        let g = finite_diff_grad(&spec, &data, 1e-4, sim()).unwrap();
        for r in 0..3 {
            assert!((g[2 * r] - g[2 * r + 1]).abs() < 1e-9);
        }
    }

    #[test]
    fn spsa_zero_step_keeps_weights() {
        let spec = single(2, 1, 1, 2);
        let data = Dataset::grid(3, 2, |_| vec![0.1]).unwrap();
        let cfg = TrainConfig {
            step_size: 0.0,
            evaluator: Evaluator::Classical,
            ..Default::default()
        };
        assert_eq!(spsa_step(&spec, &data, 0, 1, &cfg).unwrap(), spec);
    }

    #[test]
    fn spsa_direction_aligns_with_gradient() {
        let spec = single(2, 1, 2, 13);
        let data = Dataset::grid(4, 2, |x| vec![0.3 * x[0] - 0.2 * x[1]]).unwrap();
        let cfg = TrainConfig {
            evaluator: Evaluator::Classical,
            ..Default::default()
        };
        let fd = finite_diff_grad(&spec, &data, 1e-4, Evaluator::Classical).unwrap();
        let mut mean = vec![0.0; fd.len()];
        for trial in 0..200 {
            let g = spsa_gradient(&spec, &data, 0, trial, &cfg).unwrap();
            mean.iter_mut().zip(&g).for_each(|(m, v)| *m += v / 200.0);
        }
        let dot: f64 = mean.iter().zip(&fd).map(|(a, b)| a * b).sum();
        let na = mean.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nb = fd.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(dot / (na * nb) > 0.0);
    }

    #[test]
    fn clamping_at_upper_bound() {
        let spec = QkanSpec::new(vec![LayerSpec::constant(2, 1, 1, 1.0).unwrap()]).unwrap();
        let grad = vec![-1.0; spec.num_parameters()];
        let next = gradient_step(&spec, &grad, 0.5).unwrap();
        assert!(next.parameters().iter().all(|&w| w == 1.0));
    }

    #[test]
    fn zero_iterations_returns_input() {
        let spec = single(2, 1, 1, 3);
        let data = Dataset::grid(3, 2, |_| vec![0.0]).unwrap();
        let cfg = TrainConfig {
            iterations: 0,
            ..Default::default()
        };
        let out = train(&spec, &data, &cfg).unwrap();
        assert_eq!(out.spec, spec);
        assert!(out.trace.is_empty());
    }

    #[test]
    fn training_is_deterministic() {
        let spec = single(2, 1, 2, 3);
        let data = Dataset::grid(3, 2, |x| vec![0.2 * x[0]]).unwrap();
        for optimizer in [Optimizer::FiniteDifference, Optimizer::Spsa] {
            let cfg = TrainConfig {
                optimizer,
                iterations: 5,
                step_size: 1.0,
                seed: 11,
                ..Default::default()
            };
            let a = train(&spec, &data, &cfg).unwrap();
            let b = train(&spec, &data, &cfg).unwrap();
            assert_eq!(a, b);
            assert!(a.spec.parameters().iter().all(|w| w.abs() <= 1.0));
        }
    }

    #[test]
    fn divergence_stops_training() {
        // an absurd step size on a nearly fitted model overshoots to the clamp
        let spec = QkanSpec::new(vec![LayerSpec::constant(2, 1, 1, 0.0).unwrap()]).unwrap();
        let data = Dataset::grid(3, 2, |x| vec![0.01 * x[0]]).unwrap();
        let cfg = TrainConfig {
            optimizer: Optimizer::Spsa,
            step_size: 1e4,
            iterations: 200,
            evaluator: Evaluator::Classical,
            ..Default::default()
        };
        assert!(matches!(train(&spec, &data, &cfg), Err(QkanError::Divergence { .. })));
    }
}
