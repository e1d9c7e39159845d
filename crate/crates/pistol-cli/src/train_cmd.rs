//! The `train` subcommand: the shuffle/subsample learning-curve protocol.
//!
//! For each (seed, T) pair the training pool is shuffled with that seed,
//! the first T examples are trained on in a single pass, and the result
//! is evaluated on the fixed test set. Runs execute in parallel up to
//! `--jobs`, but rows are emitted in deterministic (seed, T) order.

use std::fmt::Write as _;
use std::io::{BufReader, Write};
use std::path::PathBuf;
use std::time::Instant;

use anyhow::Context;
use clap::Args;
use pistol::audit::estimate_risks;
use pistol::data::{l2_normalize, parse_libsvm, shuffle, synth_margin_stream, Dataset};
use pistol::learners::train;
use rayon::prelude::*;

use crate::config::{self, Algo, RawConfig, RunConfig};
use crate::{config_error, CliError};

/// Fixed column order; part of the interface.
pub const CSV_HEADER: &str =
    "algo,dataset,kernel,gamma,loss,a,L,b,eta,seed,T,train_time_ms,test_error,test_ell_risk";

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Algorithm: pistol | asgd | perceptron | pistol-coord
    #[arg(long)]
    algo: Option<Algo>,
    /// Kernel: linear | gaussian
    #[arg(long)]
    kernel: Option<config::KernelKind>,
    /// Gaussian kernel width (defaults to 0.04/0.125 for a9a/SensIT file names)
    #[arg(long)]
    gamma: Option<f64>,
    /// Loss: smoothed-hinge | hinge | square | logistic
    #[arg(long)]
    loss: Option<pistol::losses::Loss>,
    /// PiSTOL aggressiveness parameter
    #[arg(long)]
    a: Option<f64>,
    /// Lipschitz constant fed to PiSTOL (defaults to the loss's own L)
    #[arg(long = "L")]
    lipschitz: Option<f64>,
    /// PiSTOL scale parameter: a number, or `auto` for sqrt(2aLT) per T
    #[arg(long)]
    b: Option<config::BSpec>,
    /// ASGD constant step size in (0, 1/4]
    #[arg(long)]
    eta: Option<f64>,
    /// Training set in LIBSVM format
    #[arg(long)]
    train: Option<PathBuf>,
    /// Test set in LIBSVM format
    #[arg(long)]
    test: Option<PathBuf>,
    /// Synthetic data instead of files: n=..,test=..,d=..[,margin=..][,flip=..]
    #[arg(long)]
    synth: Option<config::SynthSpec>,
    /// Subsample sizes, e.g. 250,1000,4000 (default: the full training size)
    #[arg(long)]
    grid: Option<config::Grid>,
    /// Ambient dimension override (default: max observed feature index)
    #[arg(long)]
    dim: Option<u32>,
    /// Number of random shuffles (seeds seed, seed+1, ...)
    #[arg(long)]
    shuffles: Option<usize>,
    /// Scale every example to unit L2 norm
    #[arg(long)]
    normalize: bool,
    /// Base seed for shuffles and synthetic data
    #[arg(long)]
    seed: Option<u64>,
    /// Parallel (seed, T) runs
    #[arg(long)]
    jobs: Option<usize>,
    /// Write CSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Line-oriented `key = value` config file; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
}

impl TrainArgs {
    fn into_raw(self) -> (RawConfig, Option<PathBuf>) {
        let cfg = RawConfig {
            algo: self.algo,
            kernel: self.kernel,
            gamma: self.gamma,
            loss: self.loss,
            a: self.a,
            lipschitz: self.lipschitz,
            b: self.b,
            eta: self.eta,
            train_path: self.train,
            test_path: self.test,
            synth: self.synth,
            grid: self.grid,
            dim: self.dim,
            shuffles: self.shuffles,
            normalize: if self.normalize { Some(true) } else { None },
            seed: self.seed,
            jobs: self.jobs,
            out: self.out,
        };
        (cfg, self.config)
    }
}

struct Row {
    seed_label: String,
    t: usize,
    time_ms: f64,
    test_error: f64,
    test_ell_risk: f64,
}

fn load_dataset(path: &PathBuf) -> Result<Dataset, CliError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::Config(format!("cannot open {}: {e}", path.display())))?;
    let mut ds = parse_libsvm(BufReader::new(file))
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    ds.name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    Ok(ds)
}

pub fn run(args: TrainArgs) -> Result<i32, CliError> {
    let (flags, config_path) = args.into_raw();
    let file = config_path
        .as_deref()
        .map(config::parse_config_file)
        .transpose()?;
    let cfg = config::resolve(flags, file)?;

    let (train_set, test_set, dataset_name) = match &cfg.synth {
        Some(spec) => {
            let all =
                synth_margin_stream(cfg.seed, spec.n + spec.test, spec.d, spec.margin, spec.flip)
                    .map_err(|e| CliError::Config(e.to_string()))?;
            let mut train_set = all.clone();
            let mut test_set = all;
            test_set.examples = train_set.examples.split_off(spec.n);
            let name = spec.dataset_name(cfg.seed);
            (train_set, test_set, name)
        }
        None => {
            let train_set = load_dataset(cfg.train_path.as_ref().expect("validated"))?;
            let test_set = load_dataset(cfg.test_path.as_ref().expect("validated"))?;
            let name = train_set.name.clone();
            (train_set, test_set, name)
        }
    };
    let (train_set, test_set) = if cfg.normalize {
        (l2_normalize(train_set), l2_normalize(test_set))
    } else {
        (train_set, test_set)
    };
    if test_set.is_empty() {
        return config_error("test set is empty");
    }

    let grid = cfg
        .grid
        .clone()
        .map(|g| g.0)
        .unwrap_or_else(|| vec![train_set.len()]);
    for &t in &grid {
        if t > train_set.len() {
            return config_error(format!(
                "subsample {t} exceeds dataset size {}",
                train_set.len()
            ));
        }
    }
    let kernel = cfg.kernel(&dataset_name)?;
    let observed_dim = train_set.dim.max(test_set.dim);
    let dim = match cfg.dim {
        Some(d) if d < observed_dim => {
            return config_error(format!(
                "--dim {d} is below the max observed feature index {observed_dim}"
            ))
        }
        Some(d) => d,
        None => observed_dim,
    };

    // one job per (seed, T), in deterministic output order
    let jobs: Vec<(u64, usize)> = (0..cfg.shuffles)
        .map(|i| cfg.seed + i as u64)
        .flat_map(|seed| grid.iter().map(move |&t| (seed, t)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| CliError::Runtime(anyhow::anyhow!(e)))?;
    let results: Vec<Result<Row, CliError>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(seed, t)| {
                let shuffled = shuffle(train_set.clone(), seed);
                let algo = cfg.algo_config(t, dim)?;
                let start = Instant::now();
                let (predictor, _) = train(&algo, &kernel, &shuffled.examples[..t], cfg.loss)
                    .map_err(|e| CliError::Runtime(anyhow::anyhow!("seed {seed}, T {t}: {e}")))?;
                let time_ms = start.elapsed().as_secs_f64() * 1e3;
                let risks = estimate_risks(&predictor, &test_set.examples, cfg.loss)
                    .map_err(|e| CliError::Runtime(anyhow::anyhow!(e)))?;
                Ok(Row {
                    seed_label: seed.to_string(),
                    t,
                    time_ms,
                    test_error: risks.misclass,
                    test_ell_risk: risks.ell_risk,
                })
            })
            .collect()
    });
    let mut rows = Vec::with_capacity(results.len());
    for r in results {
        rows.push(r?);
    }

    // aggregate rows (mean, sample std) per grid entry
    let mut aggregates = Vec::new();
    for &t in &grid {
        let subset: Vec<&Row> = rows.iter().filter(|r| r.t == t).collect();
        let n = subset.len() as f64;
        let mean = |f: &dyn Fn(&Row) -> f64| subset.iter().map(|r| f(r)).sum::<f64>() / n;
        let std = |f: &dyn Fn(&Row) -> f64, m: f64| {
            if subset.len() < 2 {
                0.0
            } else {
                (subset.iter().map(|r| (f(r) - m) * (f(r) - m)).sum::<f64>() / (n - 1.0)).sqrt()
            }
        };
        let m_time = mean(&|r: &Row| r.time_ms);
        let m_err = mean(&|r: &Row| r.test_error);
        let m_risk = mean(&|r: &Row| r.test_ell_risk);
        aggregates.push(Row {
            seed_label: "mean".into(),
            t,
            time_ms: m_time,
            test_error: m_err,
            test_ell_risk: m_risk,
        });
        aggregates.push(Row {
            seed_label: "std".into(),
            t,
            time_ms: std(&|r: &Row| r.time_ms, m_time),
            test_error: std(&|r: &Row| r.test_error, m_err),
            test_ell_risk: std(&|r: &Row| r.test_ell_risk, m_risk),
        });
    }
    rows.extend(aggregates);

    let mut csv = String::new();
    csv.push_str(CSV_HEADER);
    csv.push('\n');
    let gamma_col = match kernel {
        pistol::kernels::Kernel::Gaussian { gamma } => gamma.to_string(),
        pistol::kernels::Kernel::Linear => String::new(),
    };
    for row in &rows {
        let (a_col, l_col, b_col) = match cfg.algo {
            Algo::Pistol | Algo::PistolCoord => (
                cfg.a.to_string(),
                cfg.lipschitz.to_string(),
                effective_b(&cfg, row.t, dim),
            ),
            _ => (String::new(), String::new(), String::new()),
        };
        let eta_col = cfg.eta.map(|e| e.to_string()).unwrap_or_default();
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            cfg.algo.name(),
            dataset_name,
            kernel_name(&kernel),
            gamma_col,
            cfg.loss,
            a_col,
            l_col,
            b_col,
            eta_col,
            row.seed_label,
            row.t,
            row.time_ms,
            row.test_error,
            row.test_ell_risk
        )
        .expect("writing to String cannot fail");
    }

    match &cfg.out {
        Some(path) => {
            let mut file = std::fs::File::create(path)
                .with_context(|| format!("cannot create {}", path.display()))
                .map_err(CliError::Runtime)?;
            file.write_all(csv.as_bytes())
                .context("writing CSV")
                .map_err(CliError::Runtime)?;
        }
        None => print!("{csv}"),
    }
    Ok(0)
}

fn kernel_name(kernel: &pistol::kernels::Kernel) -> &'static str {
    match kernel {
        pistol::kernels::Kernel::Linear => "linear",
        pistol::kernels::Kernel::Gaussian { .. } => "gaussian",
    }
}

fn effective_b(cfg: &RunConfig, t: usize, dim: u32) -> String {
    match cfg.algo {
        // an explicit `--b auto` is rejected at resolve; the default for
        // pistol-coord is the per-copy 1/d
        Algo::PistolCoord => match cfg.b {
            config::BSpec::Fixed(b) => b.to_string(),
            config::BSpec::Auto => (1.0 / dim.max(1) as f64).to_string(),
        },
        _ => cfg.resolve_b(t).to_string(),
    }
}
