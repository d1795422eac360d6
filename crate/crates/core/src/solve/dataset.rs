//! Dataset directories of `(u0, ξ, u_T)` samples.
//!
//! ```text
//! DIR/meta.json   parameters sufficient to regenerate the data bit-identically
//! DIR/u0.nt       (N, X…)
//! DIR/xi.nt       (N, N_t + 1, X…)   unscaled forcing, as seen by the solver
//! DIR/uT.nt       (N, X…)
//! ```
//!
//! Sample `i` draws from `RngStream::derive(master_seed, i)`: its child 0
//! supplies the initial condition and child 1 the noise. In the fixed-`u0`
//! setting the 1-d initial condition uses κ = 0 and the 2-d vorticity is the
//! one drawn by sample 0.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{solve, EquationId, EquationSpec, SolverConfig};
use crate::noise::{deterministic_force, phi41_initial, sample_grf_vorticity};
use crate::ntensor::{self, NTensorReader, NTensorWriter};
use crate::{Error, Grid, Result, RngStream, SpaceTimeField, SpatialField};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    /// `ξ ↦ u`: one initial condition shared by every sample.
    FixedU0,
    /// `(u0, ξ) ↦ u`.
    VaryingU0,
}

impl std::str::FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed_u0" => Ok(Setting::FixedU0),
            "varying_u0" => Ok(Setting::VaryingU0),
            _ => Err(Error::Config(format!(
                "unknown setting `{s}` (expected fixed_u0 or varying_u0)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSpec {
    pub equation: EquationSpec,
    pub solver: SolverConfig,
    pub sizes: Vec<usize>,
    pub time_steps: usize,
    pub samples: usize,
    pub master_seed: u64,
    pub setting: Setting,
}

impl DatasetSpec {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(
            self.equation.id.dim(),
            &self.sizes,
            self.time_steps,
            self.equation.horizon,
        )
    }

    /// κ actually used for 1-d initial conditions.
    pub fn effective_kappa(&self) -> f64 {
        match self.setting {
            Setting::FixedU0 => 0.0,
            Setting::VaryingU0 => self.equation.kappa,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.equation.validate()?;
        self.solver.validate()?;
        self.grid()?;
        if self.samples == 0 {
            return Err(Error::Config("a dataset needs at least one sample".into()));
        }
        Ok(())
    }
}

/// Contents of `meta.json`. The flat keys are the documented summary; the
/// nested `spec` and `solver` objects carry everything else.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub format_version: u32,
    pub equation: EquationId,
    pub d: usize,
    pub sizes: Vec<usize>,
    pub time_steps: usize,
    pub horizon: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub master_seed: u64,
    pub setting: Setting,
    pub sigma: f64,
    pub kappa: f64,
    pub nu: f64,
    pub solver_substeps: usize,
    pub spec: EquationSpec,
    pub solver: SolverConfig,
}

impl DatasetMeta {
    pub fn from_spec(spec: &DatasetSpec) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            equation: spec.equation.id,
            d: spec.equation.id.dim(),
            sizes: spec.sizes.clone(),
            time_steps: spec.time_steps,
            horizon: spec.equation.horizon,
            n: spec.samples,
            master_seed: spec.master_seed,
            setting: spec.setting,
            sigma: spec.equation.sigma(),
            kappa: spec.effective_kappa(),
            nu: spec.equation.nu,
            solver_substeps: spec.solver.substeps,
            spec: spec.equation.clone(),
            solver: spec.solver,
        }
    }

    pub fn to_spec(&self) -> DatasetSpec {
        DatasetSpec {
            equation: self.spec.clone(),
            solver: self.solver,
            sizes: self.sizes.clone(),
            time_steps: self.time_steps,
            samples: self.n,
            master_seed: self.master_seed,
            setting: self.setting,
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.d, &self.sizes, self.time_steps, self.horizon)
    }
}

struct Sample {
    u0: SpatialField,
    xi: SpaceTimeField,
    u_t: SpatialField,
}

fn draw_initial(spec: &DatasetSpec, grid: &Grid, index: u64) -> Result<SpatialField> {
    let eq = &spec.equation;
    match eq.id {
        EquationId::Phi41 | EquationId::RdMult => {
            let mut s = RngStream::derive(spec.master_seed, index).child(0);
            phi41_initial(grid, spec.effective_kappa(), &mut s, &eq.eta)
        }
        EquationId::Ns2d => {
            let source = match spec.setting {
                Setting::FixedU0 => 0,
                Setting::VaryingU0 => index,
            };
            let mut s = RngStream::derive(spec.master_seed, source).child(0);
            sample_grf_vorticity(grid, &eq.grf, &mut s)
        }
    }
}

fn make_sample(spec: &DatasetSpec, grid: &Grid, force: Option<&SpatialField>, index: usize) -> Result<Sample> {
    let u0 = draw_initial(spec, grid, index as u64)?;
    let mut s = RngStream::derive(spec.master_seed, index as u64).child(1);
    let xi = spec.equation.forcing.sample_noise(grid, &mut s);
    let traj = solve(&u0, &xi, force, &spec.equation, &spec.solver)?;
    Ok(Sample {
        u0,
        xi,
        u_t: traj.final_slice(),
    })
}

fn compute_chunk(
    spec: &DatasetSpec,
    grid: &Grid,
    force: Option<&SpatialField>,
    range: std::ops::Range<usize>,
    workers: usize,
) -> Vec<Result<Sample>> {
    let one = |i: usize| {
        make_sample(spec, grid, force, i).map_err(|e| Error::Sample {
            index: i,
            source: Box::new(e),
        })
    };
    #[cfg(feature = "parallel")]
    if workers > 1 {
        use rayon::prelude::*;
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
            return pool.install(|| range.into_par_iter().map(one).collect());
        }
    }
    let _ = workers;
    range.map(one).collect()
}

fn prepare_dir(dir: &Path, overwrite: bool) -> Result<()> {
    if dir.exists() {
        let non_empty = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .next()
            .is_some();
        if non_empty && !overwrite {
            return Err(Error::Config(format!(
                "{} exists and is not empty (pass overwrite to replace it)",
                dir.display()
            )));
        }
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Generates `spec.samples` samples into `out_dir`. With `workers > 1`
/// samples are solved in parallel; the output does not depend on `workers`.
pub fn generate_dataset(
    spec: &DatasetSpec,
    out_dir: impl AsRef<Path>,
    workers: usize,
    overwrite: bool,
) -> Result<Dataset> {
    spec.validate()?;
    let dir = out_dir.as_ref();
    prepare_dir(dir, overwrite)?;
    let grid = spec.grid()?;
    let n = spec.samples;
    let force = (spec.equation.id == EquationId::Ns2d)
        .then(|| deterministic_force(&grid, spec.equation.forcing.deterministic_amplitude));

    let mut spatial = vec![n];
    spatial.extend(grid.spatial_shape());
    let mut st = vec![n];
    st.extend(grid.space_time_shape());
    let mut u0_w = NTensorWriter::create(dir.join("u0.nt"), &spatial)?;
    let mut xi_w = NTensorWriter::create(dir.join("xi.nt"), &st)?;
    let mut ut_w = NTensorWriter::create(dir.join("uT.nt"), &spatial)?;

    let chunk = 4 * workers.max(1);
    let mut start = 0;
    while start < n {
        let end = (start + chunk).min(n);
        for sample in compute_chunk(spec, &grid, force.as_ref(), start..end, workers) {
            let s = sample?;
            u0_w.append(s.u0.values())?;
            xi_w.append(s.xi.values())?;
            ut_w.append(s.u_t.values())?;
        }
        start = end;
    }
    u0_w.finish()?;
    xi_w.finish()?;
    ut_w.finish()?;

    let meta = DatasetMeta::from_spec(spec);
    let json = serde_json::to_vec_pretty(&meta)?;
    write_atomic(&dir.join("meta.json"), &json)?;
    Dataset::open(dir)
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("partial");
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// An opened dataset directory.
#[derive(Clone, Debug)]
pub struct Dataset {
    dir: PathBuf,
    meta: DatasetMeta,
}

impl Dataset {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        let meta_path = dir.join("meta.json");
        let bytes = fs::read(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let meta: DatasetMeta = serde_json::from_slice(&bytes).map_err(|e| Error::Dataset {
            path: meta_path.clone(),
            msg: e.to_string(),
        })?;
        if meta.format_version != FORMAT_VERSION {
            return Err(Error::Dataset {
                path: meta_path,
                msg: format!("unsupported format version {}", meta.format_version),
            });
        }
        let ds = Self { dir, meta };
        let grid = ds.meta.grid()?;
        let mut spatial = vec![ds.meta.n];
        spatial.extend(grid.spatial_shape());
        let mut st = vec![ds.meta.n];
        st.extend(grid.space_time_shape());
        for (name, shape) in [("u0.nt", &spatial), ("uT.nt", &spatial), ("xi.nt", &st)] {
            let r = NTensorReader::open(ds.dir.join(name))?;
            if r.shape() != shape.as_slice() {
                return Err(Error::Dataset {
                    path: ds.dir.join(name),
                    msg: format!("shape {:?} disagrees with meta.json {:?}", r.shape(), shape),
                });
            }
        }
        Ok(ds)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn meta(&self) -> &DatasetMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.meta.n
    }

    pub fn is_empty(&self) -> bool {
        self.meta.n == 0
    }

    pub fn grid(&self) -> Result<Grid> {
        self.meta.grid()
    }

    fn spatial_rows(&self, name: &str) -> Result<Vec<SpatialField>> {
        let grid = self.grid()?;
        let t = ntensor::read(self.dir.join(name))?;
        (0..self.len())
            .map(|i| SpatialField::new(grid.clone(), t.slab(i).to_vec()))
            .collect()
    }

    pub fn initial_conditions(&self) -> Result<Vec<SpatialField>> {
        self.spatial_rows("u0.nt")
    }

    pub fn solutions(&self) -> Result<Vec<SpatialField>> {
        self.spatial_rows("uT.nt")
    }

    /// Streaming access to the noise, one sample at a time.
    pub fn noise_reader(&self) -> Result<NoiseReader> {
        Ok(NoiseReader {
            grid: self.grid()?,
            reader: NTensorReader::open(self.dir.join("xi.nt"))?,
        })
    }
}

pub struct NoiseReader {
    grid: Grid,
    reader: NTensorReader,
}

impl NoiseReader {
    pub fn read(&mut self, index: usize) -> Result<SpaceTimeField> {
        SpaceTimeField::new(self.grid.clone(), self.reader.read_slab(index)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(setting: Setting) -> DatasetSpec {
        DatasetSpec {
            equation: EquationSpec::phi41(),
            solver: SolverConfig::default(),
            sizes: vec![16],
            time_steps: 10,
            samples: 3,
            master_seed: 11,
            setting,
        }
    }

    #[test]
    fn fixed_setting_shares_u0() {
        let dir = tempfile::tempdir().unwrap();
        let ds = generate_dataset(&small(Setting::FixedU0), dir.path(), 1, false).unwrap();
        let u0 = ds.initial_conditions().unwrap();
        assert!(u0.iter().all(|u| u == &u0[0]));
        assert_eq!(ds.meta().kappa, 0.0);
        let ut = ds.solutions().unwrap();
        assert_ne!(ut[0], ut[1]);
    }

    #[test]
    fn varying_setting_differs() {
        let dir = tempfile::tempdir().unwrap();
        let ds = generate_dataset(&small(Setting::VaryingU0), dir.path(), 1, false).unwrap();
        let u0 = ds.initial_conditions().unwrap();
        assert_ne!(u0[0], u0[1]);
        let mut r = ds.noise_reader().unwrap();
        assert_eq!(r.read(2).unwrap().values().len(), 11 * 16);
    }

    #[test]
    fn refuses_to_clobber_without_overwrite() {
        let dir = tempfile::tempdir().unwrap();
        let spec = small(Setting::FixedU0);
        generate_dataset(&spec, dir.path(), 1, false).unwrap();
        assert!(generate_dataset(&spec, dir.path(), 1, false).is_err());
        generate_dataset(&spec, dir.path(), 1, true).unwrap();
    }

    #[test]
    fn meta_round_trips_to_the_spec() {
        let spec = small(Setting::VaryingU0);
        let meta = DatasetMeta::from_spec(&spec);
        let json = serde_json::to_value(&meta).unwrap();
        for key in [
            "equation", "d", "sizes", "time_steps", "horizon", "N", "master_seed", "setting",
            "sigma", "kappa", "nu", "solver_substeps", "format_version",
        ] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
        let back: DatasetMeta = serde_json::from_value(json).unwrap();
        assert_eq!(back.to_spec(), spec);
    }
}
