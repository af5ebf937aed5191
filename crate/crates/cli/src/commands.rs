use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use causonet::harness::{
    build_model, evaluate, train_any, write_history, write_report, GaussianStats, RunHistory,
};
use causonet::neuralcore::{check_gradients, Activation, Mlp};
use causonet::operatornets::{
    check_operator_gradients, load_model, pod_basis, save_model, CausalityModel, DeepOnetModel,
    MsDeepOnetModel, PodDeepOnetModel,
};
use causonet::signalgen::{
    build_dataset, compute_stats, format_stats_table, load_dataset, save_dataset, synth_corpus, ResponseDataset,
};
use causonet::Error;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ConfigError, ExperimentConfig};
use crate::Common;

pub enum CliError {
    Config(String),
    Core(Error),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Core(e) => match e {
                Error::Io(_) => 1,
                Error::InvalidArgument(_) | Error::Parse { .. } | Error::InvalidSystem(_) => 2,
                Error::Divergence { .. } => 4,
                Error::DimensionMismatch { .. } | Error::FastPathUndefined => 5,
                _ => 3,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Core(Error::DimensionMismatch { expected, got }) => {
                write!(f, "architecture/dataset mismatch: model expects m = {expected}, data has {got}")
            }
            CliError::Core(e) => write!(f, "error: {e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(Error::Io(e))
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn load_config(path: Option<&Path>, threads: usize) -> Result<ExperimentConfig> {
    let mut cfg = match path {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.threads = threads;
    Ok(cfg)
}

fn write_resolved(cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("resolved_config.toml"), cfg.to_toml())?;
    Ok(())
}

/// Builds the train and test datasets described by `cfg`.
pub fn generate(cfg: &ExperimentConfig) -> Result<(ResponseDataset, ResponseDataset)> {
    let (system, ratios) = cfg.system()?;
    let signals = synth_corpus(&cfg.corpus())?;
    let mut all = build_dataset(&system, &ratios, cfg.system.dof, &signals, cfg.solver()?, cfg.units()?)?;
    all.meta.seed = cfg.signals.seed;
    all.meta.system_id = match &cfg.system.file {
        Some(p) => p.display().to_string(),
        None => format!("shear-{}-T{}-xi{}", cfg.system.floors, cfg.system.period, cfg.system.damping),
    };
    let n_train = cfg.signals.train;
    let train = all.select(&(0..n_train).collect::<Vec<_>>());
    let test = all.select(&(n_train..all.len()).collect::<Vec<_>>());
    Ok((train, test))
}

fn data_dir(c: &Common, cfg: &ExperimentConfig) -> PathBuf {
    c.data.clone().unwrap_or_else(|| cfg.out.join("data"))
}

pub fn gen(c: &Common, threads: usize) -> Result<()> {
    let mut cfg = load_config(c.config.as_deref(), threads)?;
    if let Some(seed) = c.seed {
        cfg.signals.seed = seed;
    }
    let dir = c.out.clone().or_else(|| c.data.clone()).unwrap_or_else(|| cfg.out.join("data"));
    let (train, test) = generate(&cfg)?;
    save_dataset(&train, dir.join("train"))?;
    save_dataset(&test, dir.join("test"))?;
    let mut stats = vec![];
    for (name, ds) in [("train", &train), ("test", &test)] {
        if !ds.is_empty() {
            stats.push((name, compute_stats(&ds.inputs)?));
        }
    }
    let table = format_stats_table(&stats.iter().map(|(n, s)| (*n, s)).collect::<Vec<_>>());
    fs::write(dir.join("stats.csv"), &table)?;
    write_resolved(&cfg, &dir)?;
    println!("wrote {} training and {} test pairs to {}", train.len(), test.len(), dir.display());
    print!("{table}");
    Ok(())
}

pub struct RunSummary {
    pub history: RunHistory,
    pub params: usize,
    pub train_len: usize,
}

fn stats_path(model: &Path) -> PathBuf {
    model.with_extension("norm.csv")
}

fn write_stats(stats: &GaussianStats, path: &Path) -> Result<()> {
    let mut text = String::from("mu,sigma\n");
    for (m, s) in stats.mu.iter().zip(stats.sigma.iter()) {
        text.push_str(&format!("{m},{s}\n"));
    }
    fs::write(path, text)?;
    Ok(())
}

fn read_stats(path: &Path) -> Result<Option<GaussianStats>> {
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(path)?;
    let (mut mu, mut sigma) = (vec![], vec![]);
    for (i, line) in text.lines().skip(1).filter(|l| !l.is_empty()).enumerate() {
        let parsed: Vec<f64> = line.split(',').filter_map(|v| v.parse().ok()).collect();
        let [m, s] = parsed[..] else {
            return Err(Error::Parse { line: i + 2, reason: format!("expected `mu,sigma` in {}", path.display()) }.into());
        };
        mu.push(m);
        sigma.push(s);
    }
    Ok(Some(GaussianStats { mu: mu.into(), sigma: sigma.into() }))
}

fn run_training(cfg: &ExperimentConfig, data: &Path, out: &Path) -> Result<RunSummary> {
    let train_ds = load_dataset(data.join("train"))?;
    let test_path = data.join("test");
    let test_ds = if test_path.exists() { Some(load_dataset(test_path)?) } else { None };
    let test_ds = test_ds.filter(|d| !d.is_empty());
    if train_ds.is_empty() {
        return Err(CliError::Config(format!("no training pairs in {}", data.display())));
    }
    let model = build_model(&cfg.model_spec()?, &train_ds, cfg.train.seed)?;
    let params = model.param_count();
    let outcome = train_any(model, &cfg.train_config()?, &train_ds, test_ds.as_ref())?;
    fs::create_dir_all(out)?;
    save_model(&outcome.model, out.join("model.bin"))?;
    save_model(&outcome.best, out.join("best.bin"))?;
    if let Some(stats) = &outcome.stats {
        write_stats(stats, &stats_path(&out.join("model.bin")))?;
        write_stats(stats, &stats_path(&out.join("best.bin")))?;
    }
    write_history(&outcome.history, out.join("history.csv"))?;
    write_resolved(cfg, out)?;
    Ok(RunSummary { history: outcome.history, params, train_len: train_ds.len() })
}

pub fn train(c: &Common, threads: usize) -> Result<()> {
    let mut cfg = load_config(c.config.as_deref(), threads)?;
    if let Some(seed) = c.seed {
        cfg.train.seed = seed;
    }
    let data = data_dir(c, &cfg);
    let out = c.out.clone().unwrap_or_else(|| cfg.out.clone());
    let run = run_training(&cfg, &data, &out)?;
    let h = &run.history;
    println!("final train rel-L2 {:.6}", h.final_train_rel_l2);
    if let Some(t) = h.final_test_rel_l2 {
        println!("final test rel-L2 {t:.6}");
    }
    println!("best epoch {} ({:.1} s, {} parameters)", h.best_epoch, h.wall_clock_s, run.params);
    Ok(())
}

fn eval_dir(data: &Path) -> PathBuf {
    let test = data.join("test");
    if test.join("meta").exists() {
        test
    } else {
        data.to_path_buf()
    }
}

pub fn eval(c: &Common) -> Result<()> {
    let model_path = c.model.clone().ok_or_else(|| CliError::Config("eval needs --model".into()))?;
    let data = c.data.clone().ok_or_else(|| CliError::Config("eval needs --data".into()))?;
    let out = c.out.clone().unwrap_or_else(|| PathBuf::from("report"));
    let model = load_model(&model_path)?;
    let ds = load_dataset(eval_dir(&data))?;
    let stats = read_stats(&stats_path(&model_path))?;
    let report = evaluate(&model, &ds, stats.as_ref())?;
    write_report(&report, &ds, &out)?;
    let s = &report.samples;
    println!("mean rel-L2 {:.6} over {} samples", report.mean_rel_l2, s.len());
    println!("best sample {} rel-L2 {:.6}", report.best, s[report.best].rel_l2);
    println!("worst sample {} rel-L2 {:.6}", report.worst, s[report.worst].rel_l2);
    Ok(())
}

pub fn compare(c: &Common, extra: &[PathBuf], threads: usize) -> Result<()> {
    let paths: Vec<PathBuf> = c.config.iter().cloned().chain(extra.iter().cloned()).collect();
    if paths.is_empty() {
        return Err(CliError::Config("compare needs at least one config".into()));
    }
    let out = c.out.clone().unwrap_or_else(|| PathBuf::from("compare"));
    fs::create_dir_all(&out)?;
    let mut rows = String::from(
        "name,architecture,branch,trunk,activation,loss,samples,params,train_rel_l2,test_rel_l2,seconds\n",
    );
    for path in &paths {
        let mut cfg = load_config(Some(path), threads)?;
        if let Some(seed) = c.seed {
            cfg.train.seed = seed;
        }
        let run_dir = out.join(&cfg.name);
        let data = match &c.data {
            Some(d) => d.clone(),
            None => {
                let d = run_dir.join("data");
                let (train, test) = generate(&cfg)?;
                save_dataset(&train, d.join("train"))?;
                save_dataset(&test, d.join("test"))?;
                d
            }
        };
        let run = run_training(&cfg, &data, &run_dir)?;
        let h = &run.history;
        let dims = |v: &[usize]| v.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("-");
        let line = format!(
            "{},{},{},{},{},{},{},{},{},{},{:.2}\n",
            cfg.name,
            cfg.model.architecture,
            dims(&cfg.model.branch),
            dims(&cfg.model.trunk),
            cfg.model.activation,
            cfg.train.loss,
            run.train_len,
            run.params,
            h.final_train_rel_l2,
            h.final_test_rel_l2.map(|v| v.to_string()).unwrap_or_default(),
            h.wall_clock_s
        );
        print!("{line}");
        rows.push_str(&line);
    }
    fs::write(out.join("compare.csv"), rows)?;
    Ok(())
}

const GRAD_TOL: f64 = 1e-5;

pub fn grad_check(c: &Common) -> Result<()> {
    let seed = c.seed.unwrap_or(0);
    let mut lines = String::from("target,checked,max_rel_err,max_abs_err\n");
    let mut worst: f64 = 0.0;
    let mut record = |name: String, r: causonet::neuralcore::GradReport| {
        worst = worst.max(r.max_rel_err);
        let line = format!("{name},{},{:e},{:e}\n", r.checked, r.max_rel_err, r.max_abs_err);
        print!("{line}");
        lines.push_str(&line);
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for act in Activation::ALL {
        let net = Mlp::new(&[4, 6, 5, 3], act, &mut rng)?;
        record(format!("mlp-{act}"), check_gradients(&net, 5, 1e-6, seed)?);
    }
    let (m, n) = (24, 3);
    let inputs = Array2::from_shape_fn((n, m), |_| rng.gen_range(-1.0..1.0));
    let act = Activation::Tanh;
    let deeponet = DeepOnetModel::new(&[m, 8, 6], &[1, 8, 6], act, 0.02, &mut rng)?;
    record("deeponet".into(), check_operator_gradients(&deeponet, inputs.view(), 1e-6, 400, seed)?);
    let outputs = Array2::from_shape_fn((4, m), |_| rng.gen_range(-1.0..1.0));
    let pod = PodDeepOnetModel::new(&[m, 8, 3], act, pod_basis(outputs.view(), 3)?, &mut rng)?;
    record("pod".into(), check_operator_gradients(&pod, inputs.view(), 1e-6, 400, seed)?);
    let ms = MsDeepOnetModel::new(&[m, 8, 6], &[1, 5, 6], vec![1.0, 3.0, 7.0], act, 0.02, &mut rng)?;
    record("msdeeponet".into(), check_operator_gradients(&ms, inputs.view(), 1e-6, 400, seed)?);
    for conv in [true, false] {
        let model = CausalityModel::new(&[m, 8, 6], &[1, 8, 6], act, conv, 0.02, &mut rng)?;
        let name = if conv { "causality" } else { "causality_noconv" };
        record(name.into(), check_operator_gradients(&model, inputs.view(), 1e-6, 400, seed)?);
    }
    if let Some(out) = &c.out {
        fs::create_dir_all(out)?;
        fs::write(out.join("grad_check.csv"), lines)?;
    }
    if worst > GRAD_TOL {
        return Err(CliError::Numerical(format!("max relative gradient error {worst:e} exceeds {GRAD_TOL:e}")));
    }
    println!("all gradients within {GRAD_TOL:e}");
    Ok(())
}

pub fn bench_fft(c: &Common) -> Result<()> {
    let seed = c.seed.unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lines = String::from("m,fast_ms,direct_ms,max_abs_diff\n");
    println!("{:>6} {:>10} {:>10} {:>12}", "m", "fast ms", "direct ms", "max |diff|");
    for m in [256usize, 512, 1024, 2048, 4096] {
        let model = CausalityModel::new(&[m, 16, 16], &[1, 16, 16], Activation::Tanh, true, 0.02, &mut rng)?;
        let signal: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let time = |fast: bool| -> Result<(f64, Vec<f64>)> {
            let reps = if fast { 5 } else { 1 };
            let start = Instant::now();
            let mut out = vec![];
            for _ in 0..reps {
                out = model.forward_all(&signal, fast)?;
            }
            Ok((start.elapsed().as_secs_f64() * 1e3 / reps as f64, out))
        };
        let (fast_ms, a) = time(true)?;
        let (direct_ms, b) = time(false)?;
        let diff = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        println!("{m:>6} {fast_ms:>10.3} {direct_ms:>10.3} {diff:>12.3e}");
        lines.push_str(&format!("{m},{fast_ms},{direct_ms},{diff}\n"));
    }
    if let Some(out) = &c.out {
        fs::create_dir_all(out)?;
        fs::write(out.join("bench_fft.csv"), lines)?;
    }
    Ok(())
}

