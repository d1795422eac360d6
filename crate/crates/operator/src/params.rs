//! Named parameter tensors, initialisation and checkpoint I/O.
//!
//! Layout (`K` Fourier layers):
//!
//! ```text
//! p.weight (h, C_in)          p.bias (h)
//! layer{i}.spectral (modes…, h, h, 2)   layer{i}.weight (h, h)   layer{i}.bias (h)
//! q1.weight (H_q, h)  q1.bias (H_q)  q2.weight (C_out, H_q)  q2.bias (C_out)
//! ```
//!
//! Spectral weights hold real and imaginary parts on the trailing axis and are
//! indexed `[slot][out][in]`.

use std::fs;
use std::path::Path;

use nors_core::ntensor;
use nors_core::RngStream;
use serde::{Deserialize, Serialize};

use crate::config::FnoConfig;
use crate::{OpError, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    fn zeros(name: impl Into<String>, shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self {
            name: name.into(),
            shape,
            data: vec![0.0; n],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FnoParams {
    pub config: FnoConfig,
    pub tensors: Vec<Tensor>,
}

impl FnoParams {
    /// All-zero parameters with the layout of `config`.
    pub fn zeros(config: &FnoConfig) -> Result<Self> {
        config.validate()?;
        let (h, c) = (config.hidden, config.in_channels);
        let (hq, co) = (config.projection_hidden, config.out_channels);
        let mut t = vec![
            Tensor::zeros("p.weight", vec![h, c]),
            Tensor::zeros("p.bias", vec![h]),
        ];
        for i in 0..config.layers {
            t.push(Tensor::zeros(format!("layer{i}.spectral"), config.spectral_shape()));
            t.push(Tensor::zeros(format!("layer{i}.weight"), vec![h, h]));
            t.push(Tensor::zeros(format!("layer{i}.bias"), vec![h]));
        }
        t.push(Tensor::zeros("q1.weight", vec![hq, h]));
        t.push(Tensor::zeros("q1.bias", vec![hq]));
        t.push(Tensor::zeros("q2.weight", vec![co, hq]));
        t.push(Tensor::zeros("q2.bias", vec![co]));
        Ok(Self {
            config: config.clone(),
            tensors: t,
        })
    }

    /// Spectral weights uniform in `[-s, s]` per component with
    /// `s = 1/(h·h)`; linear weights uniform in `±√(1/fan_in)`; biases zero.
    /// Tensors are filled in layout order from `stream`.
    pub fn init(config: &FnoConfig, stream: &mut RngStream) -> Result<Self> {
        let mut p = Self::zeros(config)?;
        let h = config.hidden as f64;
        for t in &mut p.tensors {
            if t.name.ends_with(".bias") {
                continue;
            }
            let bound = if t.name.ends_with(".spectral") {
                1.0 / (h * h)
            } else {
                (1.0 / t.shape[1] as f64).sqrt()
            };
            for v in &mut t.data {
                *v = stream.uniform_in(-bound, bound);
            }
        }
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.tensors.iter().map(|t| t.data.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn p_weight(&self) -> &[f64] {
        &self.tensors[0].data
    }
    pub fn p_bias(&self) -> &[f64] {
        &self.tensors[1].data
    }
    pub fn spectral(&self, layer: usize) -> &[f64] {
        &self.tensors[2 + 3 * layer].data
    }
    pub fn weight(&self, layer: usize) -> &[f64] {
        &self.tensors[3 + 3 * layer].data
    }
    pub fn bias(&self, layer: usize) -> &[f64] {
        &self.tensors[4 + 3 * layer].data
    }
    fn q_index(&self) -> usize {
        2 + 3 * self.config.layers
    }
    pub fn q1_weight(&self) -> &[f64] {
        &self.tensors[self.q_index()].data
    }
    pub fn q1_bias(&self) -> &[f64] {
        &self.tensors[self.q_index() + 1].data
    }
    pub fn q2_weight(&self) -> &[f64] {
        &self.tensors[self.q_index() + 2].data
    }
    pub fn q2_bias(&self) -> &[f64] {
        &self.tensors[self.q_index() + 3].data
    }

    /// `self += a · other`, tensor by tensor.
    pub fn axpy(&mut self, a: f64, other: &FnoParams) {
        for (t, o) in self.tensors.iter_mut().zip(&other.tensors) {
            t.data.iter_mut().zip(&o.data).for_each(|(x, y)| *x += a * y);
        }
    }

    pub fn scale(&mut self, a: f64) {
        for t in &mut self.tensors {
            t.data.iter_mut().for_each(|x| *x *= a);
        }
    }

    /// Re-targets the spectral weights to other mode counts: shared modes are
    /// copied, new ones are zero.
    pub fn with_modes(&self, modes: &[usize]) -> Result<Self> {
        let mut config = self.config.clone();
        config.modes = modes.to_vec();
        let mut out = Self::zeros(&config)?;
        let h = config.hidden;
        let block = h * h * 2;
        for (dst, src) in out.tensors.iter_mut().zip(&self.tensors) {
            if !dst.name.ends_with(".spectral") {
                dst.data.clone_from(&src.data);
                continue;
            }
            for (slot_new, key) in slot_modes(&config).iter().enumerate() {
                if let Some(slot_old) = slot_modes(&self.config).iter().position(|k| k == key) {
                    dst.data[slot_new * block..(slot_new + 1) * block]
                        .copy_from_slice(&src.data[slot_old * block..(slot_old + 1) * block]);
                }
            }
        }
        Ok(out)
    }

    /// Writes `manifest.json` and one NTensor per parameter into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| OpError::io(dir, e))?;
        let mut entries = Vec::new();
        for t in &self.tensors {
            let file = format!("{}.nt", t.name);
            ntensor::write(dir.join(&file), &t.shape, &t.data)?;
            entries.push(ManifestEntry {
                name: t.name.clone(),
                shape: t.shape.clone(),
                file,
            });
        }
        let manifest = Manifest {
            format_version: CHECKPOINT_VERSION,
            config: self.config.clone(),
            tensors: entries,
        };
        crate::write_json(&dir.join("manifest.json"), &manifest)
    }

    /// Loads parameters; with `expected` set, the stored config must match.
    pub fn load(dir: impl AsRef<Path>, expected: Option<&FnoConfig>) -> Result<Self> {
        let dir = dir.as_ref();
        let manifest: Manifest = crate::read_json(&dir.join("manifest.json"))?;
        if manifest.format_version != CHECKPOINT_VERSION {
            return Err(OpError::Checkpoint(format!(
                "unsupported checkpoint version {}",
                manifest.format_version
            )));
        }
        if let Some(e) = expected {
            if e != &manifest.config {
                return Err(OpError::ConfigMismatch {
                    expected: Box::new(e.clone()),
                    found: Box::new(manifest.config),
                });
            }
        }
        let mut p = Self::zeros(&manifest.config)?;
        if manifest.tensors.len() != p.tensors.len() {
            return Err(OpError::Checkpoint(format!(
                "manifest lists {} tensors, layout needs {}",
                manifest.tensors.len(),
                p.tensors.len()
            )));
        }
        for (t, m) in p.tensors.iter_mut().zip(&manifest.tensors) {
            if t.name != m.name || t.shape != m.shape {
                return Err(OpError::Checkpoint(format!(
                    "tensor {} {:?} does not match layout {} {:?}",
                    m.name, m.shape, t.name, t.shape
                )));
            }
            let nt = ntensor::read(dir.join(&m.file))?;
            if nt.shape != t.shape {
                return Err(OpError::Checkpoint(format!(
                    "{}: stored shape {:?}, manifest {:?}",
                    m.file, nt.shape, t.shape
                )));
            }
            t.data = nt.data;
        }
        Ok(p)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestEntry {
    name: String,
    shape: Vec<usize>,
    file: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    config: FnoConfig,
    tensors: Vec<ManifestEntry>,
}

/// Signed wavenumbers of each spectral slot, in storage order.
pub fn slot_modes(config: &FnoConfig) -> Vec<[i64; 2]> {
    match config.spatial_dim {
        1 => (0..config.modes[0] as i64).map(|k| [k, 0]).collect(),
        _ => {
            let (m1, m2) = (config.modes[0] as i64, config.modes[1] as i64);
            let mut out = Vec::new();
            for r in 0..(2 * m1 - 1) {
                let k1 = if r < m1 { r } else { r - (2 * m1 - 1) };
                for k2 in 0..m2 {
                    out.push([k1, k2]);
                }
            }
            out
        }
    }
}
