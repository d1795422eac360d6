//! Training loop, checkpoints with their input recipe, and evaluation.

use std::path::{Path, PathBuf};
use std::time::Instant;

use nors_core::features::GenerationMode;
use nors_core::solve::Dataset;
use nors_core::RngStream;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adam::{Adam, AdamConfig};
use crate::config::{default_modes, max_modes, Activation, FnoConfig};
use crate::data::{InputMode, InputSpec, Normalizer, PreparedSet};
use crate::fno::{Fno, GridPlan};
use crate::loss::{relative_l2, relative_l2_grad};
use crate::params::FnoParams;
use crate::{OpError, Result};

/// Stream id of the split and per-epoch shuffles; initialisation uses id 1.
const SHUFFLE_STREAM: u64 = 0;
const INIT_STREAM: u64 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    /// Train to test ratio, `a:b`.
    pub split: [usize; 2],
    pub seed: u64,
    pub input: InputMode,
    /// Model height in feature mode.
    pub height: u32,
    pub generation: GenerationMode,
    /// Training grid; defaults to the storage grid.
    pub resolution: Option<Vec<usize>>,
    pub hidden: usize,
    pub layers: usize,
    /// Retained modes per axis; defaults depend on the training grid.
    pub modes: Option<Vec<usize>>,
    pub projection_hidden: usize,
    pub activation: Activation,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 500,
            batch_size: 20,
            adam: AdamConfig::default(),
            split: [5, 1],
            seed: 0,
            input: InputMode::Features,
            height: 2,
            generation: GenerationMode::Compat,
            resolution: None,
            hidden: 32,
            layers: 4,
            modes: None,
            projection_hidden: 128,
            activation: Activation::Relu,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(OpError::Config(m.into()));
        if self.batch_size == 0 {
            return bad("batch_size must be ≥ 1");
        }
        if !(self.adam.lr > 0.0 && self.adam.lr.is_finite()) {
            return bad("lr must be positive");
        }
        if self.split[0] == 0 || self.split[1] == 0 {
            return bad("split parts must be ≥ 1");
        }
        Ok(())
    }

    pub fn input_spec(&self, dataset: &Dataset) -> Result<InputSpec> {
        match self.input {
            InputMode::Features => InputSpec::features(dataset.meta().equation, self.height, self.generation),
            InputMode::Raw => Ok(InputSpec::raw(dataset.meta().d)),
        }
    }

    pub fn fno_config(&self, in_channels: usize, sizes: &[usize]) -> FnoConfig {
        FnoConfig {
            spatial_dim: sizes.len(),
            in_channels,
            hidden: self.hidden,
            layers: self.layers,
            modes: self.modes.clone().unwrap_or_else(|| default_modes(sizes)),
            projection_hidden: self.projection_hidden,
            out_channels: 1,
            activation: self.activation,
        }
    }
}

/// Deterministic train/test split: a seeded shuffle, the first
/// `round(N·b/(a+b))` indices (sorted) form the test set.
pub fn split_indices(n: usize, split: [usize; 2], seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    shuffle(&mut idx, &mut RngStream::new(seed, SHUFFLE_STREAM).child(0));
    let test_len = ((n * split[1]) as f64 / (split[0] + split[1]) as f64).round() as usize;
    let test_len = test_len.min(n.saturating_sub(1));
    let mut test = idx[..test_len].to_vec();
    let mut train = idx[test_len..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    (train, test)
}

fn shuffle(v: &mut [usize], stream: &mut RngStream) {
    for i in (1..v.len()).rev() {
        let j = (stream.next_u64() % (i as u64 + 1)) as usize;
        v.swap(i, j);
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub train_loss: Vec<f64>,
    pub test_rel_l2: Vec<f64>,
    pub lr: Vec<f64>,
    pub seconds: Vec<f64>,
}

impl TrainHistory {
    pub fn len(&self) -> usize {
        self.train_loss.len()
    }

    pub fn is_empty(&self) -> bool {
        self.train_loss.is_empty()
    }

    /// `epoch,train_loss,test_rel_l2,lr,seconds` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,train_loss,test_rel_l2,lr,seconds\n");
        for e in 0..self.len() {
            s.push_str(&format!(
                "{},{:e},{:e},{:e},{:.3}\n",
                e, self.train_loss[e], self.test_rel_l2[e], self.lr[e], self.seconds[e]
            ));
        }
        s
    }

    /// Everything except wall-clock times, for reproducibility checks.
    pub fn metrics(&self) -> (&[f64], &[f64], &[f64]) {
        (&self.train_loss, &self.test_rel_l2, &self.lr)
    }
}

/// The trained network plus what is needed to build its inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct Predictor {
    pub fno: Fno,
    pub meta: PredictorMeta,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictorMeta {
    pub input: InputSpec,
    pub normalizer: Normalizer,
    pub train_sizes: Vec<usize>,
    pub storage_sizes: Vec<usize>,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

impl Predictor {
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        self.fno.params.save(dir)?;
        crate::write_json(&dir.join("predictor.json"), &self.meta)
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let params = FnoParams::load(dir, None)?;
        let meta: PredictorMeta = crate::read_json(&dir.join("predictor.json"))?;
        if meta.input.channels() != params.config.in_channels {
            return Err(OpError::Checkpoint(format!(
                "input recipe has {} channels, network expects {}",
                meta.input.channels(),
                params.config.in_channels
            )));
        }
        Ok(Self {
            fno: Fno::new(params),
            meta,
        })
    }

    /// De-normalised prediction for a raw input.
    pub fn predict(&self, plan: &GridPlan, raw_input: &[f64]) -> Result<Vec<f64>> {
        let mut x = raw_input.to_vec();
        self.meta.normalizer.normalize_input(&mut x);
        let mut y = self.fno.forward(plan, &x)?;
        self.meta.normalizer.denormalize_output(&mut y);
        Ok(y)
    }
}

pub struct TrainOutcome {
    pub predictor: Predictor,
    pub history: TrainHistory,
}

/// Per-sample relative errors on `indices`, in order.
fn errors(fno: &Fno, plan: &GridPlan, set: &PreparedSet, norm: &Normalizer, indices: &[usize]) -> Result<Vec<f64>> {
    indices
        .par_iter()
        .map(|&i| {
            let mut x = set.inputs[i].clone();
            norm.normalize_input(&mut x);
            let mut y = fno.forward(plan, &x)?;
            norm.denormalize_output(&mut y);
            relative_l2(&y, &set.targets[i]).map_err(|e| tag_sample(e, i))
        })
        .collect()
}

fn tag_sample(e: OpError, i: usize) -> OpError {
    match e {
        OpError::NonFinite(m) => OpError::NonFinite(format!("{m} (sample {i})")),
        other => other,
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

/// Trains on `set` (raw inputs at the training grid). Per-sample gradients
/// are computed in parallel and summed in batch order, so results do not
/// depend on the thread count.
pub fn train(
    set: &PreparedSet,
    input: InputSpec,
    storage_sizes: &[usize],
    config: &TrainConfig,
    mut on_epoch: impl FnMut(usize, &TrainHistory),
) -> Result<TrainOutcome> {
    config.validate()?;
    if set.len() < 2 {
        return Err(OpError::Config("training needs at least two samples".into()));
    }
    let (train_idx, test_idx) = split_indices(set.len(), config.split, config.seed);
    let normalizer = Normalizer::fit(set, &train_idx, input.data_channels());
    let fno_config = config.fno_config(set.channels, &set.sizes);
    let params = FnoParams::init(&fno_config, &mut RngStream::new(config.seed, INIT_STREAM))?;
    let mut fno = Fno::new(params);
    let plan = fno.plan(&set.sizes)?;
    let mut adam = Adam::new(config.adam.clone(), &fno.params);
    let mut history = TrainHistory::default();

    let normalized: Vec<Vec<f64>> = set
        .inputs
        .iter()
        .map(|x| {
            let mut x = x.clone();
            normalizer.normalize_input(&mut x);
            x
        })
        .collect();
    let scale = normalizer.output_std;

    for epoch in 0..config.epochs {
        let start = Instant::now();
        let lr = config.adam.lr_at(epoch);
        let mut order = train_idx.clone();
        shuffle(&mut order, &mut RngStream::new(config.seed, SHUFFLE_STREAM).child(epoch as u64 + 1));
        let mut loss_sum = 0.0;
        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            let weight = 1.0 / batch.len() as f64;
            let per_sample: Vec<(f64, FnoParams)> = batch
                .par_iter()
                .map(|&i| {
                    let x = &normalized[i];
                    let (mut y, tape) = fno.forward_tape(&plan, x)?;
                    normalizer.denormalize_output(&mut y);
                    let (loss, mut g) = relative_l2_grad(&y, &set.targets[i], weight).map_err(|e| tag_sample(e, i))?;
                    g.iter_mut().for_each(|v| *v *= scale);
                    Ok((loss, fno.backward(&plan, x, &tape, &g)))
                })
                .collect::<Result<_>>()?;
            let mut grads = FnoParams::zeros(fno.config())?;
            for (loss, g) in &per_sample {
                loss_sum += loss;
                grads.axpy(1.0, g);
            }
            if !loss_sum.is_finite() {
                return Err(OpError::NonFinite(format!("training loss at epoch {epoch}, batch {b}")));
            }
            adam.step(&mut fno.params, &grads, lr)
                .map_err(|e| OpError::NonFinite(format!("{e} at epoch {epoch}, batch {b}")))?;
        }
        let test = mean(&errors(&fno, &plan, set, &normalizer, &test_idx)?);
        history.train_loss.push(loss_sum / train_idx.len() as f64);
        history.test_rel_l2.push(test);
        history.lr.push(lr);
        history.seconds.push(start.elapsed().as_secs_f64());
        on_epoch(epoch, &history);
    }

    Ok(TrainOutcome {
        predictor: Predictor {
            fno,
            meta: PredictorMeta {
                input,
                normalizer,
                train_sizes: set.sizes.clone(),
                storage_sizes: storage_sizes.to_vec(),
                train_indices: train_idx,
                test_indices: test_idx,
            },
        },
        history,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub sizes: Vec<usize>,
    pub modes: Vec<usize>,
    pub samples: usize,
    pub mean_rel_l2: f64,
    pub std_rel_l2: f64,
    pub per_sample: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Test-split error of `predictor` on `set`, whose grid may differ from the
/// training grid. Spectral weights are truncated when the grid cannot hold
/// the trained modes.
pub fn evaluate(predictor: &Predictor, set: &PreparedSet) -> Result<EvalReport> {
    let mut warnings = Vec::new();
    let cfg = predictor.fno.config();
    let modes: Vec<usize> = cfg
        .modes
        .iter()
        .zip(&set.sizes)
        .map(|(&m, &x)| m.min(max_modes(x)))
        .collect();
    let fno = if modes == cfg.modes {
        predictor.fno.clone()
    } else {
        warnings.push(format!("spectral modes truncated from {:?} to {modes:?}", cfg.modes));
        Fno::new(predictor.fno.params.with_modes(&modes)?)
    };
    if set
        .sizes
        .iter()
        .zip(&predictor.meta.storage_sizes)
        .any(|(e, s)| e > s)
    {
        warnings.push(format!(
            "evaluation grid {:?} is finer than the stored noise {:?}; inputs and targets are band-limited interpolations",
            set.sizes, predictor.meta.storage_sizes
        ));
    }
    let plan = fno.plan(&set.sizes)?;
    let idx = &predictor.meta.test_indices;
    if let Some(&bad) = idx.iter().find(|&&i| i >= set.len()) {
        return Err(OpError::Checkpoint(format!(
            "test index {bad} outside a dataset of {} samples",
            set.len()
        )));
    }
    let per_sample = errors(&fno, &plan, set, &predictor.meta.normalizer, idx)?;
    let m = mean(&per_sample);
    let var = per_sample.iter().map(|e| (e - m) * (e - m)).sum::<f64>() / per_sample.len().max(1) as f64;
    Ok(EvalReport {
        sizes: set.sizes.clone(),
        modes,
        samples: per_sample.len(),
        mean_rel_l2: m,
        std_rel_l2: var.sqrt(),
        per_sample,
        warnings,
    })
}

/// Loads a checkpoint, rebuilds its inputs from `dataset` at `resolution`
/// (default: the training grid) and evaluates.
pub fn evaluate_checkpoint(
    checkpoint: &Path,
    dataset: &Dataset,
    resolution: Option<&[usize]>,
    cache_dir: Option<&PathBuf>,
) -> Result<EvalReport> {
    let predictor = Predictor::load(checkpoint)?;
    let sizes = resolution.map_or_else(|| predictor.meta.train_sizes.clone(), <[usize]>::to_vec);
    let set = PreparedSet::build(dataset, &predictor.meta.input, &sizes, cache_dir.map(PathBuf::as_path))?;
    evaluate(&predictor, &set)
}
