//! JSON experiment configuration and its resolution into library types.

use serde::{Deserialize, Serialize};

use qkan::block_encoding::{perturb, BlockEncoding};
use qkan::encoders::{amplitude_state_prep, encode_diagonal_exact, encode_from_stateprep};
use qkan::qkan::{LayerOptions, LayerSpec, Perturbation, QkanSpec, WeightEncoder};
use qkan::readout::ReadoutMode;
use qkan::resources::CostModel;
use qkan::trainer::{Dataset, Evaluator, Optimizer, TrainConfig};
use qkan::{QkanError, C64};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub input: Vec<f64>,
    pub layers: Vec<LayerConfig>,
    #[serde(default)]
    pub encoder: EncoderKind,
    #[serde(default)]
    pub perturb: PerturbConfig,
    #[serde(default)]
    pub readout: ReadoutConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainSection>,
    #[serde(default)]
    pub resources: ResourcesConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_prep: Option<StatePrepConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerConfig {
    #[serde(rename = "in")]
    pub n_in: usize,
    #[serde(rename = "out")]
    pub n_out: usize,
    pub degree: usize,
    /// `w[r][p][q]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_seed: Option<u64>,
    #[serde(default = "one")]
    pub weight_scale: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderKind {
    #[default]
    Exact,
    Stateprep,
    RealWeights,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbConfig {
    #[serde(default)]
    pub eps_x: f64,
    #[serde(default)]
    pub eps_w: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadoutKind {
    #[default]
    Exact,
    Shots,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutConfig {
    #[serde(default)]
    pub mode: ReadoutKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    /// Target precision; sets `shots = ceil(1/delta^2)` when `shots` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetTerm {
    pub input: usize,
    pub degree: usize,
    pub coef: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvaluatorKind {
    #[default]
    Simulator,
    Classical,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    #[serde(default = "default_optimizer")]
    pub optimizer: Optimizer,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_size: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fd_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spsa_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub evaluator: EvaluatorKind,
    /// Grid points per input axis for `target`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    /// Per output node, a sum of `coef * T_degree(x_input)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Vec<Vec<TargetTerm>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<Sample>>,
}

fn default_optimizer() -> Optimizer {
    Optimizer::FiniteDifference
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourcesConfig {
    #[serde(default = "one")]
    pub c_x0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_w: Option<Vec<f64>>,
    #[serde(default = "default_model")]
    pub model: CostModel,
}

fn default_model() -> CostModel {
    CostModel::Exact
}

impl Default for ResourcesConfig {
    fn default() -> Self {
        Self {
            c_x0: 1.0,
            c_w: None,
            model: CostModel::Exact,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatePrepConfig {
    /// Target l2 error of the prepared state, in (0, 1/2).
    pub eps: f64,
}

fn mix(seed: u64, salt: u64) -> u64 {
    seed.wrapping_add(salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("malformed config: {e}")))
    }

    /// Fill in every seed and materialize seeded weights, so the result
    /// reproduces the run by itself. `seed_override` replaces all seeds.
    pub fn resolve(mut self, seed_override: Option<u64>) -> Result<Resolved, CliError> {
        if let Some(s) = seed_override {
            self.seed = s;
            self.perturb.seed = None;
            self.readout.seed = None;
            if let Some(t) = self.train.as_mut() {
                t.seed = None;
            }
            for layer in self.layers.iter_mut().filter(|l| l.weight_seed.is_some()) {
                layer.weight_seed = None;
                layer.weights = None;
            }
        }
        let seed = self.seed;
        self.perturb.seed.get_or_insert(mix(seed, 1));
        self.readout.seed.get_or_insert(mix(seed, 2));
        if let Some(t) = self.train.as_mut() {
            t.seed.get_or_insert(mix(seed, 3));
        }
        let mut layers = Vec::with_capacity(self.layers.len());
        for (l, lc) in self.layers.iter_mut().enumerate() {
            let spec = match &lc.weights {
                Some(w) => LayerSpec::new(lc.n_in, lc.n_out, lc.degree, flatten(w, lc)?)?,
                None => {
                    let s = *lc.weight_seed.get_or_insert(mix(seed, 100 + l as u64));
                    LayerSpec::random(lc.n_in, lc.n_out, lc.degree, lc.weight_scale, s)?
                }
            };
            lc.weights = Some(nest(&spec));
            layers.push(spec);
        }
        let spec = QkanSpec::new(layers)?;
        Ok(Resolved { config: self, spec })
    }
}

fn flatten(w: &[Vec<Vec<f64>>], lc: &LayerConfig) -> Result<Vec<Vec<f64>>, CliError> {
    let shape_ok = w.len() == lc.degree + 1
        && w.iter().all(|wr| wr.len() == lc.n_in && wr.iter().all(|wp| wp.len() == lc.n_out));
    if !shape_ok {
        return Err(CliError::Usage(format!(
            "weights must have shape [{}][{}][{}]",
            lc.degree + 1,
            lc.n_in,
            lc.n_out
        )));
    }
    Ok(w.iter().map(|wr| wr.concat()).collect())
}

pub fn nest(spec: &LayerSpec) -> Vec<Vec<Vec<f64>>> {
    spec.weights()
        .iter()
        .map(|wr| wr.chunks(spec.n_out()).map(|c| c.to_vec()).collect())
        .collect()
}

pub struct Resolved {
    pub config: Config,
    pub spec: QkanSpec,
}

impl Resolved {
    pub fn input(&self) -> Result<&[f64], CliError> {
        let n = self.spec.dims()[0];
        if self.config.input.len() != n {
            return Err(CliError::Usage(format!(
                "input has {} entries, network takes {n}",
                self.config.input.len()
            )));
        }
        Ok(&self.config.input)
    }

    pub fn layer_options(&self) -> LayerOptions {
        let p = &self.config.perturb;
        LayerOptions {
            weight_encoder: match self.config.encoder {
                EncoderKind::RealWeights => WeightEncoder::RealPart,
                _ => WeightEncoder::Exact,
            },
            weight_perturbation: (p.eps_w > 0.0).then(|| Perturbation {
                eps: p.eps_w,
                seed: mix(p.seed.unwrap_or(0), 7),
            }),
        }
    }

    /// Input encoding without perturbation.
    pub fn exact_input_encoding(&self, x: &[f64]) -> Result<BlockEncoding, CliError> {
        match self.config.encoder {
            EncoderKind::Stateprep => {
                let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                if (norm - 1.0).abs() > 1e-9 {
                    return Err(CliError::Usage(format!(
                        "stateprep encoder needs a unit-norm input, got norm {norm}"
                    )));
                }
                let psi: Vec<C64> = x.iter().map(|&v| C64::new(v, 0.0)).collect();
                Ok(encode_from_stateprep(&amplitude_state_prep(&psi)?)?)
            }
            _ => Ok(encode_diagonal_exact(x)?),
        }
    }

    /// Input encoding with the configured `eps_x` perturbation.
    pub fn input_encoding(&self, x: &[f64]) -> Result<BlockEncoding, CliError> {
        let be = self.exact_input_encoding(x)?;
        let p = &self.config.perturb;
        if p.eps_x > 0.0 {
            Ok(perturb(&be, p.eps_x, p.seed.unwrap_or(0))?)
        } else {
            Ok(be)
        }
    }

    pub fn readout_mode(&self) -> Result<ReadoutMode, CliError> {
        let r = &self.config.readout;
        let seed = r.seed.unwrap_or(0);
        match (r.mode, r.shots, r.delta) {
            (ReadoutKind::Exact, _, _) => Ok(ReadoutMode::Exact),
            (ReadoutKind::Shots, Some(shots), _) => Ok(ReadoutMode::Shots { shots, seed }),
            (ReadoutKind::Shots, None, Some(delta)) => Ok(ReadoutMode::for_delta(delta, seed)?),
            (ReadoutKind::Shots, None, None) => {
                Err(CliError::Usage("shots readout needs `shots` or `delta`".into()))
            }
        }
    }

    pub fn train_config(&self) -> Result<(TrainConfig, Dataset), CliError> {
        let t = self
            .config
            .train
            .as_ref()
            .ok_or_else(|| CliError::Usage("config has no `train` section".into()))?;
        let defaults = TrainConfig::default();
        let evaluator = match t.evaluator {
            EvaluatorKind::Classical => Evaluator::Classical,
            EvaluatorKind::Simulator => Evaluator::Simulator {
                readout: self.readout_mode()?,
            },
        };
        let cfg = TrainConfig {
            optimizer: t.optimizer,
            step_size: t.step_size.unwrap_or(defaults.step_size),
            fd_step: t.fd_step.unwrap_or(defaults.fd_step),
            spsa_c: t.spsa_c.unwrap_or(defaults.spsa_c),
            iterations: t.iterations.unwrap_or(defaults.iterations),
            seed: t.seed.unwrap_or(0),
            evaluator,
            ..defaults
        };
        let dims = self.spec.dims();
        let data = match (&t.samples, &t.target) {
            (Some(samples), None) => Dataset::new(samples.iter().map(|s| (s.x.clone(), s.y.clone())).collect())?,
            (None, Some(target)) => {
                if target.len() != *dims.last().unwrap() {
                    return Err(CliError::Usage("one target sum per output node".into()));
                }
                if target.iter().flatten().any(|term| term.input >= dims[0]) {
                    return Err(CliError::Usage("target term refers to a missing input".into()));
                }
                let points = t.grid_points.unwrap_or(8);
                Dataset::grid(points, dims[0], |x| {
                    target
                        .iter()
                        .map(|terms| {
                            terms
                                .iter()
                                .map(|term| term.coef * qkan::qkan::chebyshev_t(term.degree, x[term.input]))
                                .sum()
                        })
                        .collect()
                })?
            }
            _ => {
                return Err(CliError::Usage(
                    "train needs exactly one of `samples` or `target`".into(),
                ))
            }
        };
        Ok((cfg, data))
    }
}

impl From<QkanError> for CliError {
    fn from(e: QkanError) -> Self {
        CliError::Qkan(e)
    }
}
