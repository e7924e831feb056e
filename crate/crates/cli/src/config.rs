//! Turning flags, an optional config file and the environment into a
//! validated [`AugmentationConfig`].
//!
//! Precedence per setting: flag, then config file, then environment, then
//! the built-in default.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use diffusemix_core::generator::{DEFAULT_RETRIES, DEFAULT_TIMEOUT};
use diffusemix_core::{
    AugmentationConfig, FractalSource, FractalSpec, GeneratorBackend, MaskSet, ProceduralBackend,
    PromptLibrary, RemoteBackend,
};
use serde::Deserialize;

use crate::args::AugmentArgs;
use crate::CliError;

/// The config file: TOML, keys spelled like the long flags.
#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FileConfig {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    pub m: Option<u32>,
    pub lambda: Option<f32>,
    pub lambda_sweep: Option<bool>,
    pub mask_set: Option<String>,
    pub backend: Option<String>,
    pub strength: Option<f32>,
    pub prompts: Option<PathBuf>,
    pub fractals: Option<String>,
    pub workers: Option<usize>,
    pub cache_dir: Option<PathBuf>,
    pub retries: Option<u32>,
    pub timeout: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("--config: cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::usage(format!("--config {}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    /// Relative paths in a config file are taken relative to the file.
    fn rebase(mut self, base: &Path) -> Self {
        for p in [&mut self.input, &mut self.output, &mut self.prompts, &mut self.cache_dir]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        self
    }
}

/// `flags` overlaid on `file`.
pub fn merge(flags: &AugmentArgs, file: FileConfig) -> AugmentArgs {
    AugmentArgs {
        config: flags.config.clone(),
        input: flags.input.clone().or(file.input),
        output: flags.output.clone().or(file.output),
        seed: flags.seed.or(file.seed),
        m: flags.m.or(file.m),
        lambda: flags.lambda.or(file.lambda),
        lambda_sweep: flags.lambda_sweep || file.lambda_sweep.unwrap_or(false),
        mask_set: flags.mask_set.clone().or(file.mask_set),
        backend: flags.backend.clone().or(file.backend),
        strength: flags.strength.or(file.strength),
        prompts: flags.prompts.clone().or(file.prompts),
        fractals: flags.fractals.clone().or(file.fractals),
        workers: flags.workers.or(file.workers),
        cache_dir: flags.cache_dir.clone().or(file.cache_dir),
        retries: flags.retries.or(file.retries),
        timeout: flags.timeout.or(file.timeout),
    }
}

/// Reads `--config` if given and overlays the flags on it.
pub fn effective_args(flags: &AugmentArgs) -> Result<AugmentArgs, CliError> {
    match &flags.config {
        Some(path) => {
            let base = path.parent().unwrap_or(Path::new(""));
            Ok(merge(flags, FileConfig::load(path)?.rebase(base)))
        }
        None => Ok(flags.clone()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BackendSpec {
    Procedural,
    Remote(String),
}

impl std::str::FromStr for BackendSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        if s == "procedural" {
            return Ok(BackendSpec::Procedural);
        }
        match s.strip_prefix("remote:") {
            Some(url) if url.starts_with("http://") || url.starts_with("https://") => {
                Ok(BackendSpec::Remote(url.to_string()))
            }
            _ => Err(CliError::usage(format!(
                "--backend: expected `procedural` or `remote:<http(s) URL>`, got {s:?}"
            ))),
        }
    }
}

pub fn build_backend(
    spec: &BackendSpec,
    strength: Option<f32>,
    retries: u32,
    timeout: Duration,
) -> Arc<dyn GeneratorBackend> {
    match spec {
        BackendSpec::Procedural => Arc::new(ProceduralBackend::new(strength.unwrap_or(1.0))),
        BackendSpec::Remote(url) => Arc::new(
            RemoteBackend::new(url.as_str(), timeout)
                .with_retries(retries)
                .with_strength(strength),
        ),
    }
}

pub fn check_strength(strength: Option<f32>) -> Result<(), CliError> {
    match strength {
        Some(s) if !(0.0..=1.0).contains(&s) => {
            Err(CliError::usage(format!("--strength: {s} is outside [0, 1]")))
        }
        _ => Ok(()),
    }
}

pub fn check_lambda(lambda: f32) -> Result<(), CliError> {
    if (0.0..=1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(CliError::usage(format!("--lambda: {lambda} is outside [0, 1]")))
    }
}

pub fn timeout_from_secs(secs: Option<f64>) -> Result<Duration, CliError> {
    match secs {
        None => Ok(DEFAULT_TIMEOUT),
        Some(s) if s.is_finite() && s > 0.0 => Ok(Duration::from_secs_f64(s)),
        Some(s) => Err(CliError::usage(format!("--timeout: {s} must be a positive number of seconds"))),
    }
}

pub fn load_prompts(path: Option<&Path>) -> Result<PromptLibrary, CliError> {
    match path {
        Some(p) => PromptLibrary::from_file(p).map_err(|e| CliError::usage(format!("--prompts: {e}"))),
        None => Ok(PromptLibrary::default()),
    }
}

pub fn load_fractals(spec: &str) -> Result<FractalSource, CliError> {
    let spec: FractalSpec = spec.parse().map_err(|e| CliError::for_flag("--fractals", e))?;
    FractalSource::from_spec(&spec).map_err(|e| CliError::usage(format!("--fractals: {e}")))
}

#[derive(Debug)]
pub struct AugmentPlan {
    pub config: AugmentationConfig,
    pub lambda_sweep: bool,
}

/// Validates everything and loads prompts and fractals. `env_cache` is the
/// value of the cache environment variable, if set.
pub fn resolve_augment(flags: &AugmentArgs, env_cache: Option<PathBuf>) -> Result<AugmentPlan, CliError> {
    let a = effective_args(flags)?;
    let input = a.input.ok_or_else(|| CliError::usage("--input is required"))?;
    if !input.is_dir() {
        return Err(CliError::usage(format!("--input: {} is not a directory", input.display())));
    }
    let output = a.output.ok_or_else(|| CliError::usage("--output is required"))?;
    if output.exists() && !output.is_dir() {
        return Err(CliError::usage(format!("--output: {} is not a directory", output.display())));
    }
    let seed = a.seed.ok_or_else(|| CliError::usage("--seed is required"))?;
    let m = a.m.unwrap_or(1);
    if m == 0 {
        return Err(CliError::usage("--m: must be at least 1"));
    }
    let lambda = a.lambda.unwrap_or(diffusemix_core::DEFAULT_LAMBDA);
    check_lambda(lambda)?;
    let mask_set: MaskSet = match &a.mask_set {
        Some(s) => s.parse().map_err(|e| CliError::for_flag("--mask-set", e))?,
        None => MaskSet::default(),
    };
    let workers = match a.workers {
        Some(0) => return Err(CliError::usage("--workers: must be at least 1")),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    check_strength(a.strength)?;
    let timeout = timeout_from_secs(a.timeout)?;
    let backend_spec: BackendSpec = a.backend.as_deref().unwrap_or("procedural").parse()?;
    let backend = build_backend(&backend_spec, a.strength, a.retries.unwrap_or(DEFAULT_RETRIES), timeout);
    let prompts = load_prompts(a.prompts.as_deref())?;
    let fractals = load_fractals(a.fractals.as_deref().unwrap_or("procedural:100,seed=0"))?;

    let mut config = AugmentationConfig::new(input, output, backend, Arc::new(fractals));
    config.m = m;
    config.lambda = lambda;
    config.seed = seed;
    config.mask_set = mask_set;
    config.prompts = prompts;
    config.workers = workers;
    config.cache_dir = a.cache_dir.or(env_cache);
    Ok(AugmentPlan {
        config,
        lambda_sweep: a.lambda_sweep,
    })
}
