//! Subcommand implementations.

use std::path::{Path, PathBuf};

use nors_core::features::{generate_model, notation, Alpha, GenerationMode, ModelSpec};
use nors_core::solve::{generate_dataset, Dataset, EquationId, Setting};
use nors_operator::train::{evaluate, PredictorMeta};
use nors_operator::{InputMode, InputSpec, PreparedSet, Predictor};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::{expand_sizes, RunConfig};
use crate::error::{CliError, CliResult};
use crate::{EvalArgs, FeaturesArgs, GenDataArgs, TrainArgs};

fn parse<T: std::str::FromStr>(s: &str) -> CliResult<T>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e: T::Err| CliError::Config(e.to_string()))
}

fn load_config(path: Option<&PathBuf>) -> CliResult<RunConfig> {
    path.map_or_else(|| Ok(RunConfig::default()), |p| RunConfig::load(p))
}

fn init_workers(workers: usize) -> CliResult<()> {
    if workers == 0 {
        return Err(CliError::Config("--workers must be ≥ 1".into()));
    }
    // A second call in the same process keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global();
    Ok(())
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn gen_data(a: GenDataArgs) -> CliResult<()> {
    let mut c = load_config(a.config.as_ref())?;
    if let Some(e) = &a.equation {
        c.dataset.equation = parse::<EquationId>(e)?;
    }
    if let Some(n) = a.samples {
        c.dataset.samples = n;
    }
    if let Some(nx) = a.nx {
        c.dataset.sizes = match (c.dataset.equation.dim(), a.ny) {
            (2, Some(ny)) => vec![nx, ny],
            _ => vec![nx],
        };
    }
    if let Some(nt) = a.nt {
        c.dataset.time_steps = nt;
    }
    if let Some(s) = &a.setting {
        c.dataset.setting = parse::<Setting>(s)?;
    }
    if let Some(s) = a.seed {
        c.seed = s;
    }
    if let Some(o) = a.out {
        c.paths.out = Some(o);
    }
    c.equation.nu = a.nu.or(c.equation.nu);
    c.equation.sigma = a.sigma.or(c.equation.sigma);
    c.equation.kappa = a.kappa.or(c.equation.kappa);
    c.equation.horizon = a.horizon.or(c.equation.horizon);
    c.solver.substeps = a.substeps.or(c.solver.substeps);
    c.workers = a.workers.unwrap_or(c.workers);
    init_workers(c.workers)?;
    let out = c
        .paths
        .out
        .clone()
        .ok_or_else(|| CliError::Config("gen-data needs --out or paths.out".into()))?;
    let spec = c.dataset_spec();
    let ds = generate_dataset(&spec, &out, c.workers, a.overwrite)?;
    write_file(&out.join("config.toml"), &c.resolved().to_toml())?;
    println!(
        "{}",
        json!({
            "out": out,
            "equation": spec.equation.id.as_str(),
            "samples": ds.len(),
            "sizes": spec.sizes,
            "time_steps": spec.time_steps,
            "meta_sha256": sha256_file(&out.join("meta.json"))?,
        })
    );
    Ok(())
}

pub fn features(a: FeaturesArgs) -> CliResult<()> {
    let eq = parse::<EquationId>(&a.equation)?;
    let mut model = match eq {
        EquationId::Phi41 => ModelSpec::phi41(a.height),
        EquationId::RdMult => ModelSpec::rd_mult(a.height),
        EquationId::Ns2d => ModelSpec::ns2d(a.height),
    };
    if let Some(al) = &a.alpha {
        model.alpha = parse::<Alpha>(al)?;
    }
    if let Some(cap) = a.degcap {
        model.rules.cap = cap;
    }
    if let Some(d) = a.deg_init {
        model.rules.init = d;
    }
    model.mode = match a.mode.as_str() {
        "literal" => GenerationMode::Literal,
        "compat" => GenerationMode::Compat,
        m => return Err(CliError::Config(format!("unknown mode `{m}` (literal | compat)"))),
    };
    let basis = generate_model(&model)?;
    let init_symbol = if model.dim == 2 { r"\omega_0" } else { "u_0" };
    if a.json {
        let rows: Vec<_> = basis
            .entries
            .iter()
            .map(|e| {
                json!({
                    "key": e.key,
                    "height": e.height,
                    "degree": e.degree,
                    "notation": notation::render(&e.tree(), init_symbol),
                })
            })
            .collect();
        println!("{}", serde_json::to_string_pretty(&rows).expect("listing serialises"));
    } else {
        for e in &basis.entries {
            println!(
                "{}\t{}\t{}\t{}",
                e.key,
                e.height,
                e.degree,
                notation::render(&e.tree(), init_symbol)
            );
        }
    }
    if let Some(data) = &a.data {
        init_workers(a.workers.unwrap_or(1))?;
        let ds = Dataset::open(data)?;
        if ds.meta().d != model.dim {
            return Err(CliError::Config(format!(
                "a {}-d model cannot be evaluated on a {}-d dataset",
                model.dim,
                ds.meta().d
            )));
        }
        let cache = a
            .cache_dir
            .clone()
            .or_else(|| std::env::var_os("NORS_CACHE_DIR").map(PathBuf::from))
            .ok_or_else(|| CliError::Config("precomputing needs --cache-dir or NORS_CACHE_DIR".into()))?;
        let sizes = expand_sizes(a.resolution.clone().map_or_else(|| ds.meta().sizes.clone(), |s| s.0), model.dim);
        let spec = InputSpec::from_model(model)?;
        let key = nors_operator::data::cache_key(&ds, &spec, &sizes)?;
        PreparedSet::build(&ds, &spec, &sizes, Some(&cache))?;
        eprintln!("cached {} features for {} samples as {key}", spec.features.len(), ds.len());
    }
    Ok(())
}

/// Training output directory layout.
struct RunDir {
    root: PathBuf,
}

impl RunDir {
    fn checkpoint(&self) -> PathBuf {
        self.root.join("checkpoint")
    }

    fn prepare(root: &Path, overwrite: bool) -> CliResult<Self> {
        if root.exists() {
            let non_empty = std::fs::read_dir(root)
                .map_err(|e| CliError::io(root, e))?
                .next()
                .is_some();
            if non_empty && !overwrite {
                return Err(CliError::Config(format!(
                    "{} is not empty; pass --overwrite to replace it",
                    root.display()
                )));
            }
            let ck = root.join("checkpoint");
            if ck.exists() {
                std::fs::remove_dir_all(&ck).map_err(|e| CliError::io(&ck, e))?;
            }
        }
        std::fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self { root: root.to_path_buf() })
    }
}

pub fn train(a: TrainArgs) -> CliResult<()> {
    let mut c = load_config(a.config.as_ref())?;
    if let Some(d) = a.data {
        c.paths.data = Some(d);
    }
    if let Some(o) = a.out {
        c.paths.out = Some(o);
    }
    if let Some(d) = a.cache_dir {
        c.paths.cache_dir = Some(d);
    }
    let t = &mut c.train;
    t.epochs = a.epochs.unwrap_or(t.epochs);
    t.adam.lr = a.lr.unwrap_or(t.adam.lr);
    t.batch_size = a.batch_size.unwrap_or(t.batch_size);
    t.seed = a.seed.unwrap_or(t.seed);
    t.height = a.height.unwrap_or(t.height);
    if let Some(i) = &a.input {
        t.input = parse::<InputMode>(i)?;
    }
    if let Some(r) = a.resolution {
        t.resolution = Some(r.0);
    }
    c.workers = a.workers.unwrap_or(c.workers);
    init_workers(c.workers)?;
    c.train.validate()?;

    let data = c
        .paths
        .data
        .clone()
        .ok_or_else(|| CliError::Config("train needs --data or paths.data".into()))?;
    let out = c
        .paths
        .out
        .clone()
        .ok_or_else(|| CliError::Config("train needs --out or paths.out".into()))?;
    let ds = Dataset::open(&data)?;
    let dim = ds.meta().d;
    if let Some(r) = &c.train.resolution {
        c.train.resolution = Some(expand_sizes(r.clone(), dim));
    }
    c.dataset.equation = ds.meta().equation;
    let run = RunDir::prepare(&out, a.overwrite)?;
    let resolved = c.resolved();
    write_file(&run.root.join("config.toml"), &resolved.to_toml())?;

    let storage = ds.meta().sizes.clone();
    let sizes = c.train.resolution.clone().unwrap_or_else(|| storage.clone());
    let input = c.train.input_spec(&ds)?;
    let cache = c.cache_dir();
    let set = PreparedSet::build(&ds, &input, &sizes, cache.as_deref())?;
    let epochs = c.train.epochs;
    let quiet = a.quiet;
    let outcome = nors_operator::train(&set, input, &storage, &c.train, |e, h| {
        if !quiet && (e % 10 == 0 || e + 1 == epochs) {
            eprintln!(
                "epoch {:>4}/{epochs}  train {:.4e}  test {:.4e}  lr {:.2e}  {:.2}s",
                e + 1,
                h.train_loss[e],
                h.test_rel_l2[e],
                h.lr[e],
                h.seconds[e]
            );
        }
    })?;
    outcome.predictor.save(run.checkpoint())?;
    let h = &outcome.history;
    write_file(&run.root.join("history.csv"), &h.to_csv())?;
    let meta: &PredictorMeta = &outcome.predictor.meta;
    let summary = json!({
        "epochs": h.len(),
        "final_train_loss": h.train_loss.last(),
        "final_test_rel_l2": h.test_rel_l2.last(),
        "train_samples": meta.train_indices.len(),
        "test_samples": meta.test_indices.len(),
        "input_mode": c.train.input,
        "input_channels": meta.input.channels(),
        "features": meta.input.features.len(),
        "train_sizes": meta.train_sizes,
        "dataset_meta_sha256": sha256_file(&ds.dir().join("meta.json"))?,
        "config_sha256": hex::encode(Sha256::digest(resolved.to_toml().as_bytes())),
        "total_seconds": h.seconds.iter().sum::<f64>(),
    });
    let text = serde_json::to_string_pretty(&summary).expect("summary serialises");
    write_file(&run.root.join("summary.json"), &(text.clone() + "\n"))?;
    println!("{text}");
    Ok(())
}

pub fn eval(a: EvalArgs) -> CliResult<()> {
    init_workers(a.workers.unwrap_or(1))?;
    let ck = if a.checkpoint.join("checkpoint").join("manifest.json").exists() {
        a.checkpoint.join("checkpoint")
    } else {
        a.checkpoint.clone()
    };
    let predictor = Predictor::load(&ck)?;
    let ds = Dataset::open(&a.data)?;
    let sizes = expand_sizes(
        a.resolution.clone().map_or_else(|| predictor.meta.train_sizes.clone(), |s| s.0),
        ds.meta().d,
    );
    let cache = a
        .cache_dir
        .clone()
        .or_else(|| std::env::var_os("NORS_CACHE_DIR").map(PathBuf::from));
    let set = PreparedSet::build(&ds, &predictor.meta.input, &sizes, cache.as_deref())?;
    let report = evaluate(&predictor, &set)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let mut value = serde_json::to_value(&report).expect("report serialises");
    value["checkpoint"] = json!(ck);
    value["data"] = json!(a.data);
    value["train_sizes"] = json!(predictor.meta.train_sizes);
    let text = serde_json::to_string_pretty(&value).expect("report serialises");
    if let Some(out) = &a.out {
        if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        write_file(out, &(text.clone() + "\n"))?;
    }
    println!("{text}");
    Ok(())
}
