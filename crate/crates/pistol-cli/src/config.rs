//! Resolution of train-run configuration from flags and an optional
//! line-oriented `key = value` file. Flags override file values; hard
//! defaults apply last.

use std::collections::HashMap;
use std::path::PathBuf;
use std::str::FromStr;

use pistol::kernels::Kernel;
use pistol::learners::{AlgoConfig, PistolParams};
use pistol::losses::Loss;

use crate::{config_error, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algo {
    Pistol,
    Asgd,
    Perceptron,
    PistolCoord,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Pistol => "pistol",
            Algo::Asgd => "asgd",
            Algo::Perceptron => "perceptron",
            Algo::PistolCoord => "pistol-coord",
        }
    }
}

impl FromStr for Algo {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pistol" => Ok(Algo::Pistol),
            "asgd" => Ok(Algo::Asgd),
            "perceptron" => Ok(Algo::Perceptron),
            "pistol-coord" => Ok(Algo::PistolCoord),
            other => Err(format!(
                "unknown algo `{other}` (expected pistol | asgd | perceptron | pistol-coord)"
            )),
        }
    }
}

/// `auto` resolves to √(2aLT) per subsample size T.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BSpec {
    Auto,
    Fixed(f64),
}

impl FromStr for BSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(BSpec::Auto);
        }
        s.parse::<f64>()
            .map(BSpec::Fixed)
            .map_err(|_| format!("bad b `{s}` (number or `auto`)"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n: usize,
    pub test: usize,
    pub d: u32,
    pub margin: f64,
    pub flip: f64,
}

impl SynthSpec {
    /// CSV `dataset` column value carrying the generator parameters.
    pub fn dataset_name(&self, seed: u64) -> String {
        format!(
            "synth:n={};test={};d={};margin={};flip={};seed={}",
            self.n, self.test, self.d, self.margin, self.flip, seed
        )
    }
}

impl FromStr for SynthSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut map = HashMap::new();
        for pair in s.split(',') {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| format!("bad synth entry `{pair}` (expected key=value)"))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        let take = |map: &mut HashMap<String, String>, key: &str| map.remove(key);
        let req =
            |v: Option<String>, key: &str| v.ok_or_else(|| format!("synth spec missing `{key}=`"));
        let n = req(take(&mut map, "n"), "n")?
            .parse()
            .map_err(|e| format!("bad n: {e}"))?;
        let test = req(take(&mut map, "test"), "test")?
            .parse()
            .map_err(|e| format!("bad test: {e}"))?;
        let d = req(take(&mut map, "d"), "d")?
            .parse()
            .map_err(|e| format!("bad d: {e}"))?;
        let margin = take(&mut map, "margin")
            .map(|v| v.parse().map_err(|e| format!("bad margin: {e}")))
            .transpose()?
            .unwrap_or(0.0);
        let flip = take(&mut map, "flip")
            .map(|v| v.parse().map_err(|e| format!("bad flip: {e}")))
            .transpose()?
            .unwrap_or(0.0);
        if let Some(k) = map.keys().next() {
            return Err(format!("unknown synth key `{k}`"));
        }
        Ok(SynthSpec {
            n,
            test,
            d,
            margin,
            flip,
        })
    }
}

/// Everything `train` needs, after merging flags over the config file
/// over defaults.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub algo: Algo,
    pub kernel_kind: KernelKind,
    pub gamma: Option<f64>,
    pub loss: Loss,
    pub a: f64,
    pub lipschitz: f64,
    pub b: BSpec,
    pub eta: Option<f64>,
    pub train_path: Option<PathBuf>,
    pub test_path: Option<PathBuf>,
    pub synth: Option<SynthSpec>,
    pub grid: Option<Grid>,
    pub dim: Option<u32>,
    pub shuffles: usize,
    pub normalize: bool,
    pub seed: u64,
    pub jobs: usize,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Linear,
    Gaussian,
}

impl FromStr for KernelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(KernelKind::Linear),
            "gaussian" => Ok(KernelKind::Gaussian),
            other => Err(format!(
                "unknown kernel `{other}` (expected linear | gaussian)"
            )),
        }
    }
}

impl RunConfig {
    /// Resolve the kernel, filling the Gaussian gamma from the per-dataset
    /// defaults (0.04 for a9a, 0.125 for SensIT) when not given.
    pub fn kernel(&self, dataset_name: &str) -> Result<Kernel, CliError> {
        match self.kernel_kind {
            KernelKind::Linear => Ok(Kernel::Linear),
            KernelKind::Gaussian => {
                let gamma = match self.gamma {
                    Some(g) => g,
                    None => {
                        let lower = dataset_name.to_lowercase();
                        if lower.contains("a9a") {
                            0.04
                        } else if lower.contains("sensit") {
                            0.125
                        } else {
                            return config_error(format!(
                                "gaussian kernel needs --gamma (no default for dataset `{dataset_name}`)"
                            ));
                        }
                    }
                };
                Kernel::gaussian(gamma).map_err(|e| CliError::Config(e.to_string()))
            }
        }
    }

    /// Resolve the effective b for a subsample of size `t`.
    pub fn resolve_b(&self, t: usize) -> f64 {
        match self.b {
            BSpec::Auto => (2.0 * self.a * self.lipschitz * t as f64).sqrt(),
            BSpec::Fixed(b) => b,
        }
    }

    /// Library-level algorithm config for a subsample of size `t`.
    pub fn algo_config(&self, t: usize, dim: u32) -> Result<AlgoConfig, CliError> {
        match self.algo {
            Algo::Pistol => {
                let params = PistolParams::new(self.a, self.resolve_b(t), self.lipschitz)
                    .map_err(|e| CliError::Config(e.to_string()))?;
                Ok(AlgoConfig::Pistol(params))
            }
            Algo::Asgd => Ok(AlgoConfig::Asgd {
                eta: self.eta.expect("validated"),
            }),
            Algo::Perceptron => Ok(AlgoConfig::Perceptron),
            Algo::PistolCoord => Ok(AlgoConfig::PistolCoord {
                a: self.a,
                lipschitz: self.lipschitz,
                b: match self.b {
                    BSpec::Auto => None, // per-copy default 1/d
                    BSpec::Fixed(b) => Some(b),
                },
                dim,
            }),
        }
    }
}

/// Raw option bag shared by the flag parser and the config file.
#[derive(Debug, Default, Clone)]
pub struct RawConfig {
    pub algo: Option<Algo>,
    pub kernel: Option<KernelKind>,
    pub gamma: Option<f64>,
    pub loss: Option<Loss>,
    pub a: Option<f64>,
    pub lipschitz: Option<f64>,
    pub b: Option<BSpec>,
    pub eta: Option<f64>,
    pub train_path: Option<PathBuf>,
    pub test_path: Option<PathBuf>,
    pub synth: Option<SynthSpec>,
    pub grid: Option<Grid>,
    pub dim: Option<u32>,
    pub shuffles: Option<usize>,
    pub normalize: Option<bool>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
}

impl RawConfig {
    /// Take `self` (flags) over `file` values.
    fn over(self, file: RawConfig) -> RawConfig {
        RawConfig {
            algo: self.algo.or(file.algo),
            kernel: self.kernel.or(file.kernel),
            gamma: self.gamma.or(file.gamma),
            loss: self.loss.or(file.loss),
            a: self.a.or(file.a),
            lipschitz: self.lipschitz.or(file.lipschitz),
            b: self.b.or(file.b),
            eta: self.eta.or(file.eta),
            train_path: self.train_path.or(file.train_path),
            test_path: self.test_path.or(file.test_path),
            synth: self.synth.or(file.synth),
            grid: self.grid.or(file.grid),
            dim: self.dim.or(file.dim),
            shuffles: self.shuffles.or(file.shuffles),
            normalize: self.normalize.or(file.normalize),
            seed: self.seed.or(file.seed),
            jobs: self.jobs.or(file.jobs),
            out: self.out.or(file.out),
        }
    }
}

/// Comma-separated subsample sizes, e.g. `250,1000,4000`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid(pub Vec<usize>);

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let grid: Result<Vec<usize>, _> = s.split(',').map(|v| v.trim().parse::<usize>()).collect();
        let grid = grid.map_err(|e| format!("bad grid `{s}`: {e}"))?;
        if grid.is_empty() || grid.contains(&0) {
            return Err("grid must list positive subsample sizes".into());
        }
        Ok(Grid(grid))
    }
}

/// Parse a line-oriented `key = value` file; `#` comments and blank
/// lines are skipped. Keys mirror the long flag names.
pub fn parse_config_file(path: &std::path::Path) -> Result<RawConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let mut raw = RawConfig::default();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Config(format!(
                "{}:{}: expected `key = value`",
                path.display(),
                lineno + 1
            ))
        })?;
        let key = key.trim();
        let value = value.trim();
        let fail = |e: String| CliError::Config(format!("{}:{}: {e}", path.display(), lineno + 1));
        match key {
            "algo" => raw.algo = Some(value.parse().map_err(fail)?),
            "kernel" => raw.kernel = Some(value.parse().map_err(fail)?),
            "gamma" => raw.gamma = Some(value.parse().map_err(|e| fail(format!("{e}")))?),
            "loss" => raw.loss = Some(value.parse().map_err(fail)?),
            "a" => raw.a = Some(value.parse().map_err(|e| fail(format!("{e}")))?),
            "L" => raw.lipschitz = Some(value.parse().map_err(|e| fail(format!("{e}")))?),
            "b" => raw.b = Some(value.parse().map_err(fail)?),
            "eta" => raw.eta = Some(value.parse().map_err(|e| fail(format!("{e}")))?),
            "train" => raw.train_path = Some(PathBuf::from(value)),
            "test" => raw.test_path = Some(PathBuf::from(value)),
            "synth" => raw.synth = Some(value.parse().map_err(fail)?),
            "grid" => raw.grid = Some(value.parse().map_err(fail)?),
            "dim" => raw.dim = Some(value.parse().map_err(|e| fail(format!("{e}")))?),
            "shuffles" => raw.shuffles = Some(value.parse().map_err(|e| fail(format!("{e}")))?),
            "normalize" => raw.normalize = Some(value.parse().map_err(|e| fail(format!("{e}")))?),
            "seed" => raw.seed = Some(value.parse().map_err(|e| fail(format!("{e}")))?),
            "jobs" => raw.jobs = Some(value.parse().map_err(|e| fail(format!("{e}")))?),
            "out" => raw.out = Some(PathBuf::from(value)),
            other => return Err(fail(format!("unknown config key `{other}`"))),
        }
    }
    Ok(raw)
}

/// Merge flags over the file, apply defaults, and validate the
/// algo/parameter compatibility rules.
pub fn resolve(flags: RawConfig, file: Option<RawConfig>) -> Result<RunConfig, CliError> {
    let raw = match file {
        Some(file) => flags.over(file),
        None => flags,
    };

    let algo = match raw.algo {
        Some(a) => a,
        None => return config_error("--algo is required"),
    };
    let kernel_kind = match raw.kernel {
        Some(k) => k,
        None => return config_error("--kernel is required"),
    };

    // compatibility validation before anything runs
    if raw.eta.is_some() && algo != Algo::Asgd {
        return config_error("--eta only applies to asgd");
    }
    if algo == Algo::Asgd && raw.eta.is_none() {
        return config_error("asgd needs --eta");
    }
    if algo == Algo::Asgd || algo == Algo::Perceptron {
        for (name, given) in [
            ("a", raw.a.is_some()),
            ("L", raw.lipschitz.is_some()),
            ("b", raw.b.is_some()),
        ] {
            if given {
                return config_error(format!("--{name} only applies to pistol | pistol-coord"));
            }
        }
    }
    if raw.gamma.is_some() && kernel_kind == KernelKind::Linear {
        return config_error("--gamma only applies to the gaussian kernel");
    }
    if algo == Algo::PistolCoord && kernel_kind != KernelKind::Linear {
        return config_error("pistol-coord requires --kernel linear");
    }
    if algo == Algo::PistolCoord && raw.b == Some(BSpec::Auto) {
        return config_error("pistol-coord has no `b auto`; give a number or omit for 1/d");
    }
    match (
        raw.synth.is_some(),
        raw.train_path.is_some() || raw.test_path.is_some(),
    ) {
        (true, true) => return config_error("--synth and --train/--test are mutually exclusive"),
        (false, false) => return config_error("either --synth or --train/--test is required"),
        (false, true) => {
            if raw.train_path.is_none() || raw.test_path.is_none() {
                return config_error("file datasets need both --train and --test");
            }
        }
        (true, false) => {}
    }

    let loss = raw.loss.unwrap_or(Loss::SmoothedHinge);
    let lipschitz = raw.lipschitz.unwrap_or_else(|| loss.lipschitz());
    Ok(RunConfig {
        algo,
        kernel_kind,
        gamma: raw.gamma,
        loss,
        a: raw.a.unwrap_or(0.25),
        lipschitz,
        b: raw.b.unwrap_or(BSpec::Auto),
        eta: raw.eta,
        train_path: raw.train_path,
        test_path: raw.test_path,
        synth: raw.synth,
        grid: raw.grid,
        dim: raw.dim,
        shuffles: raw.shuffles.unwrap_or(5),
        normalize: raw.normalize.unwrap_or(false),
        seed: raw.seed.unwrap_or(0),
        jobs: raw.jobs.unwrap_or(1).max(1),
        out: raw.out,
    })
}
