//! Network inputs and targets built from a dataset at a chosen resolution.
//!
//! Inputs are channel-major `[channel][point]`. Feature mode stacks the
//! final-time model features followed by the grid coordinates; raw mode
//! stacks `u0`, the time mean of `ξ` and the coordinates.

use std::path::{Path, PathBuf};

use nors_core::features::{evaluate_final, generate_model, FeatureTree, GenerationMode, ModelSpec};
use nors_core::semigroup::SemigroupContext;
use nors_core::solve::{Dataset, EquationId};
use nors_core::spectral::resample;
use nors_core::{ntensor, Grid, SpaceTimeField, SpatialField};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{OpError, Result};

/// Samples per chunk when streaming noise from disk.
const CHUNK: usize = 50;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputMode {
    #[default]
    Features,
    Raw,
}

impl std::str::FromStr for InputMode {
    type Err = OpError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "features" => Ok(InputMode::Features),
            "raw" => Ok(InputMode::Raw),
            _ => Err(OpError::Config(format!("unknown input mode `{s}` (features | raw)"))),
        }
    }
}

/// Everything needed to rebuild the network input of any sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSpec {
    pub mode: InputMode,
    /// Model used in feature mode.
    pub model: Option<ModelSpec>,
    /// Canonical keys of the feature channels, in channel order.
    pub features: Vec<String>,
    pub dim: usize,
}

impl InputSpec {
    /// Model features of the dataset's equation at `height`.
    pub fn features(equation: EquationId, height: u32, generation: GenerationMode) -> Result<Self> {
        let model = match equation {
            EquationId::Phi41 => ModelSpec::phi41(height),
            EquationId::RdMult => ModelSpec::rd_mult(height),
            EquationId::Ns2d => ModelSpec::ns2d(height),
        }
        .with_mode(generation);
        Self::from_model(model)
    }

    pub fn from_model(model: ModelSpec) -> Result<Self> {
        let basis = generate_model(&model)?;
        Ok(Self {
            mode: InputMode::Features,
            dim: model.dim,
            features: basis.entries.iter().map(|e| e.key.clone()).collect(),
            model: Some(model),
        })
    }

    pub fn raw(dim: usize) -> Self {
        Self {
            mode: InputMode::Raw,
            model: None,
            features: Vec::new(),
            dim,
        }
    }

    /// Channels before the coordinates.
    pub fn data_channels(&self) -> usize {
        match self.mode {
            InputMode::Features => self.features.len(),
            InputMode::Raw => 2,
        }
    }

    pub fn channels(&self) -> usize {
        self.data_channels() + self.dim
    }

    fn trees(&self) -> Result<Vec<FeatureTree>> {
        Ok(self
            .features
            .iter()
            .map(|k| FeatureTree::parse(k))
            .collect::<nors_core::Result<_>>()?)
    }
}

/// Per-channel input standardisation and a scalar output scale, fitted on
/// the training split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Normalizer {
    pub input_mean: Vec<f64>,
    pub input_std: Vec<f64>,
    pub output_mean: f64,
    pub output_std: f64,
}

impl Normalizer {
    /// Fits on the samples `indices`. Coordinate channels (the last `dim`)
    /// are left unscaled; constant channels get unit scale.
    pub fn fit(set: &PreparedSet, indices: &[usize], data_channels: usize) -> Self {
        let n = set.points();
        let count = (indices.len() * n) as f64;
        let mut input_mean = vec![0.0; set.channels];
        let mut input_std = vec![1.0; set.channels];
        for c in 0..data_channels {
            let (mut s, mut s2) = (0.0, 0.0);
            for &i in indices {
                for &v in &set.inputs[i][c * n..(c + 1) * n] {
                    s += v;
                    s2 += v * v;
                }
            }
            let mean = s / count;
            let var = (s2 / count - mean * mean).max(0.0);
            input_mean[c] = mean;
            input_std[c] = if var > 1e-300 { var.sqrt() } else { 1.0 };
        }
        let (mut s, mut s2) = (0.0, 0.0);
        for &i in indices {
            for &v in &set.targets[i] {
                s += v;
                s2 += v * v;
            }
        }
        let output_mean = s / count;
        let var = (s2 / count - output_mean * output_mean).max(0.0);
        Self {
            input_mean,
            input_std,
            output_mean,
            output_std: if var > 1e-300 { var.sqrt() } else { 1.0 },
        }
    }

    pub fn normalize_input(&self, x: &mut [f64]) {
        let n = x.len() / self.input_mean.len();
        for (c, chunk) in x.chunks_mut(n).enumerate() {
            let (m, s) = (self.input_mean[c], self.input_std[c]);
            chunk.iter_mut().for_each(|v| *v = (*v - m) / s);
        }
    }

    pub fn denormalize_output(&self, y: &mut [f64]) {
        y.iter_mut()
            .for_each(|v| *v = *v * self.output_std + self.output_mean);
    }
}

/// Raw (unnormalised) inputs and targets for every sample of a dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct PreparedSet {
    pub sizes: Vec<usize>,
    pub channels: usize,
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
}

impl PreparedSet {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn points(&self) -> usize {
        self.sizes.iter().product()
    }

    /// Builds inputs at `sizes`, reusing `<cache_dir>/<key>.nt` when present.
    pub fn build(
        dataset: &Dataset,
        spec: &InputSpec,
        sizes: &[usize],
        cache_dir: Option<&Path>,
    ) -> Result<Self> {
        let storage = dataset.meta().sizes.clone();
        if sizes.len() != storage.len() {
            return Err(OpError::Config(format!(
                "resolution {sizes:?} does not match the {}-d dataset",
                storage.len()
            )));
        }
        let targets: Vec<Vec<f64>> = dataset
            .solutions()?
            .into_iter()
            .map(|u| resample(u.values(), &storage, sizes))
            .collect();
        let channels = spec.channels();
        let n: usize = sizes.iter().product();
        let cache_path = cache_dir
            .map(|d| cache_key(dataset, spec, sizes).map(|k| d.join(format!("{k}.nt"))))
            .transpose()?;
        if let Some(path) = &cache_path {
            if path.exists() {
                let t = ntensor::read(path)?;
                if t.shape == [dataset.len(), channels, n] {
                    let inputs = (0..dataset.len()).map(|i| t.slab(i).to_vec()).collect();
                    return Ok(Self {
                        sizes: sizes.to_vec(),
                        channels,
                        inputs,
                        targets,
                    });
                }
            }
        }
        let inputs = compute_inputs(dataset, spec, sizes)?;
        if let Some(path) = &cache_path {
            write_cache(path, &[dataset.len(), channels, n], &inputs)?;
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            channels,
            inputs,
            targets,
        })
    }
}

fn write_cache(path: &Path, shape: &[usize], inputs: &[Vec<f64>]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| OpError::io(dir, e))?;
    let tmp: PathBuf = path.with_extension("nt.tmp");
    let mut w = ntensor::NTensorWriter::create(&tmp, shape)?;
    for x in inputs {
        w.append(x)?;
    }
    w.finish()?;
    std::fs::rename(&tmp, path).map_err(|e| OpError::io(path, e))
}

/// Content hash of the dataset metadata, the input spec and the resolution.
pub fn cache_key(dataset: &Dataset, spec: &InputSpec, sizes: &[usize]) -> Result<String> {
    let meta_path = dataset.dir().join("meta.json");
    let meta = std::fs::read(&meta_path).map_err(|e| OpError::io(&meta_path, e))?;
    let mut h = Sha256::new();
    h.update(&meta);
    h.update(serde_json::to_vec(spec).expect("input spec serialises"));
    h.update(serde_json::to_vec(sizes).expect("sizes serialise"));
    Ok(hex::encode(h.finalize()))
}

fn compute_inputs(dataset: &Dataset, spec: &InputSpec, sizes: &[usize]) -> Result<Vec<Vec<f64>>> {
    let meta = dataset.meta();
    let storage = meta.sizes.clone();
    let grid = dataset.grid()?.with_sizes(sizes)?;
    let ctx = SemigroupContext::new(&grid, meta.nu)?;
    let trees = match spec.mode {
        InputMode::Features => spec.trees()?,
        InputMode::Raw => Vec::new(),
    };
    let u0s = dataset.initial_conditions()?;
    let mut reader = dataset.noise_reader()?;
    let mut out = Vec::with_capacity(dataset.len());
    for start in (0..dataset.len()).step_by(CHUNK) {
        let end = (start + CHUNK).min(dataset.len());
        let xis = (start..end)
            .map(|i| reader.read(i))
            .collect::<nors_core::Result<Vec<_>>>()?;
        let chunk = (start..end)
            .into_par_iter()
            .map(|i| {
                let u0 = SpatialField::new(grid.clone(), resample(u0s[i].values(), &storage, sizes))?;
                let xi = resample_noise(&xis[i - start], &grid, &storage)?;
                sample_input(spec, &trees, &u0, &xi, &ctx)
            })
            .collect::<Result<Vec<_>>>()?;
        out.extend(chunk);
    }
    Ok(out)
}

fn resample_noise(xi: &SpaceTimeField, grid: &Grid, storage: &[usize]) -> Result<SpaceTimeField> {
    if storage == grid.sizes() {
        return Ok(xi.clone());
    }
    let mut values = Vec::with_capacity(grid.points() * (grid.time_steps() + 1));
    for n in 0..=grid.time_steps() {
        values.extend(resample(xi.slice(n), storage, grid.sizes()));
    }
    Ok(SpaceTimeField::new(grid.clone(), values)?)
}

fn sample_input(
    spec: &InputSpec,
    trees: &[FeatureTree],
    u0: &SpatialField,
    xi: &SpaceTimeField,
    ctx: &SemigroupContext,
) -> Result<Vec<f64>> {
    let grid = ctx.grid();
    let n = grid.points();
    let mut x = Vec::with_capacity(spec.channels() * n);
    match spec.mode {
        InputMode::Features => {
            for f in evaluate_final(trees, u0, xi, ctx)? {
                x.extend_from_slice(f.values());
            }
        }
        InputMode::Raw => {
            x.extend_from_slice(u0.values());
            let nt = grid.time_steps();
            let mut mean = vec![0.0; n];
            for s in 0..nt {
                mean.iter_mut().zip(xi.slice(s)).for_each(|(m, v)| *m += v);
            }
            x.extend(mean.iter().map(|m| m / nt as f64));
        }
    }
    let coords = grid.coordinates();
    for a in 0..grid.dim() {
        x.extend(coords.iter().map(|c| c[a]));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(OpError::NonFinite("network input".into()));
    }
    Ok(x)
}
