//! The end-to-end augmentation loop.
//!
//! For every source image and every augmentation index the pipeline draws a
//! prompt, generates a counterpart, draws a mask kind, concatenates, draws a
//! fractal and blends:
//!
//! ```text
//! H = G * M + I * (1 - M)
//! A = λF + (1 - λ)H
//! ```
//!
//! Randomness comes from a per-`(image, aug)` substream, so the output is a
//! pure function of the config, the seed and the input bytes.

mod dataset;
mod manifest;

use std::collections::{BTreeSet, HashSet};
use std::path::PathBuf;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub use dataset::{scan_dataset, SourceImage};
pub use manifest::{
    read_meta, read_records, AugmentationRecord, Manifest, ManifestMeta, MANIFEST_FILE, META_FILE,
    TOOL_VERSION,
};

use crate::error::{Error, Result};
use crate::fractal::{self, check_lambda, FractalSource};
use crate::generator::{CacheStats, GenerationCache, GeneratorBackend};
use crate::imgcore::{self, resize_bilinear, ImageBuffer};
use crate::masking::{concatenate, Mask, MaskKind, MaskSet};
pub use crate::rng::{derive_sub_seed, derive_substream, RngStream};
use crate::prompts::PromptLibrary;

#[derive(Clone)]
pub struct AugmentationConfig {
    pub input_dir: PathBuf,
    pub output_dir: PathBuf,
    /// Augmentations per source image.
    pub m: u32,
    pub lambda: f32,
    pub seed: u64,
    pub mask_set: MaskSet,
    pub prompts: PromptLibrary,
    pub backend: Arc<dyn GeneratorBackend>,
    pub fractals: Arc<FractalSource>,
    pub workers: usize,
    pub cache_dir: Option<PathBuf>,
}

impl std::fmt::Debug for AugmentationConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AugmentationConfig")
            .field("input_dir", &self.input_dir)
            .field("output_dir", &self.output_dir)
            .field("m", &self.m)
            .field("lambda", &self.lambda)
            .field("seed", &self.seed)
            .field("mask_set", &self.mask_set)
            .field("prompts", &self.prompts.len())
            .field("backend", &self.backend.backend_id())
            .field("fractals", &self.fractals.fingerprint())
            .field("workers", &self.workers)
            .field("cache_dir", &self.cache_dir)
            .finish()
    }
}

#[derive(Serialize)]
struct ConfigFingerprint<'a> {
    m: u32,
    lambda: f32,
    seed: u64,
    mask_set: MaskSet,
    prompts: &'a [String],
    template: &'a str,
    backend_id: &'a str,
    fractals: &'a str,
}

impl AugmentationConfig {
    /// Defaults: `m = 1`, `λ = 0.2`, seed 0, full mask set, the built-in
    /// prompt library, one worker and no cache.
    pub fn new(
        input_dir: impl Into<PathBuf>,
        output_dir: impl Into<PathBuf>,
        backend: Arc<dyn GeneratorBackend>,
        fractals: Arc<FractalSource>,
    ) -> Self {
        Self {
            input_dir: input_dir.into(),
            output_dir: output_dir.into(),
            m: 1,
            lambda: fractal::DEFAULT_LAMBDA,
            seed: 0,
            mask_set: MaskSet::Full,
            prompts: PromptLibrary::default(),
            backend,
            fractals,
            workers: 1,
            cache_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::Config("m must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        check_lambda(self.lambda)
    }

    /// SHA-256 (hex) over everything that affects output pixels or records.
    /// Paths, worker count and cache location are excluded.
    pub fn digest(&self) -> String {
        let fingerprint = ConfigFingerprint {
            m: self.m,
            lambda: self.lambda,
            seed: self.seed,
            mask_set: self.mask_set,
            prompts: self.prompts.entries(),
            template: self.prompts.template(),
            backend_id: self.backend.backend_id(),
            fractals: self.fractals.fingerprint(),
        };
        let bytes = serde_json::to_vec(&fingerprint).expect("fingerprint serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// The three random choices behind one augmented image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Draws {
    pub prompt: String,
    pub mask_kind: MaskKind,
    pub fractal_index: usize,
}

/// Final image plus every intermediate stage.
#[derive(Debug, Clone)]
pub struct Augmented {
    pub image: ImageBuffer,
    pub draws: Draws,
    pub generated: ImageBuffer,
    pub mask: Mask,
    pub hybrid: ImageBuffer,
    pub fractal: Arc<ImageBuffer>,
}

/// Concatenates then blends; returns `(hybrid, augmented)`.
pub fn compose(
    original: &ImageBuffer,
    generated: &ImageBuffer,
    mask: &Mask,
    fractal: &ImageBuffer,
    lambda: f32,
) -> Result<(ImageBuffer, ImageBuffer)> {
    let hybrid = concatenate(original, generated, mask)?;
    let augmented = fractal::blend(&hybrid, fractal, lambda)?;
    Ok((hybrid, augmented))
}

/// Runs single augmentations against a config, with the optional cache.
pub struct Augmenter<'a> {
    cfg: &'a AugmentationConfig,
    cache: Option<GenerationCache>,
}

impl<'a> Augmenter<'a> {
    pub fn new(cfg: &'a AugmentationConfig) -> Result<Self> {
        cfg.validate()?;
        let cache = cfg.cache_dir.as_ref().map(GenerationCache::open).transpose()?;
        Ok(Self { cfg, cache })
    }

    pub fn config(&self) -> &AugmentationConfig {
        self.cfg
    }

    pub fn cache_stats(&self) -> Option<CacheStats> {
        self.cache.as_ref().map(GenerationCache::stats)
    }

    /// The generated counterpart of `img` for a library prompt, quantized to
    /// 8-bit levels and resized to `img`'s dimensions if needed.
    pub fn generate(&self, img: &ImageBuffer, prompt: &str) -> Result<ImageBuffer> {
        let rendered = self.cfg.prompts.render(prompt)?;
        let backend = self.cfg.backend.as_ref();
        let generated = match &self.cache {
            Some(cache) => cache.get_or_generate(backend, img, &rendered)?,
            None => backend.generate(img, &rendered)?.quantized(),
        };
        if generated.dims() == img.dims() {
            Ok(generated)
        } else {
            resize_bilinear(&generated, img.width(), img.height())
        }
    }

    /// Draws prompt, mask kind and fractal (in that order) from `rng` and augments.
    pub fn augment_one(&self, img: &ImageBuffer, rng: &mut RngStream) -> Result<Augmented> {
        let prompt = self.cfg.prompts.sample(rng).to_string();
        let generated = self.generate(img, &prompt)?;
        let mask_kind = self.cfg.mask_set.sample(rng);
        let fractal_index = self.cfg.fractals.sample(rng);
        let draws = Draws {
            prompt,
            mask_kind,
            fractal_index,
        };
        self.finish(img, generated, draws)
    }

    /// Augments with explicit choices instead of random draws.
    pub fn augment_with(&self, img: &ImageBuffer, draws: Draws) -> Result<Augmented> {
        if draws.fractal_index >= self.cfg.fractals.len() {
            return Err(Error::Config(format!(
                "fractal index {} out of range (source has {})",
                draws.fractal_index,
                self.cfg.fractals.len()
            )));
        }
        let generated = self.generate(img, &draws.prompt)?;
        self.finish(img, generated, draws)
    }

    fn finish(&self, img: &ImageBuffer, generated: ImageBuffer, draws: Draws) -> Result<Augmented> {
        let (w, h) = img.dims();
        let mask = Mask::new(w, h, draws.mask_kind)?;
        let fractal = self.cfg.fractals.fitted(draws.fractal_index, w, h)?;
        let (hybrid, image) = compose(img, &generated, &mask, &fractal, self.cfg.lambda)?;
        Ok(Augmented {
            image,
            draws,
            generated,
            mask,
            hybrid,
            fractal,
        })
    }
}

/// A source image or single augmentation that could not be produced.
#[derive(Debug)]
pub struct Failure {
    pub source_path: String,
    pub aug_index: Option<u32>,
    pub error: Error,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub manifest: Manifest,
    pub failures: Vec<Failure>,
    pub cache_stats: Option<CacheStats>,
    pub source_count: usize,
}

impl RunOutcome {
    pub fn is_success(&self) -> bool {
        self.failures.is_empty()
    }
}

fn process_image(
    augmenter: &Augmenter<'_>,
    index: usize,
    source: &SourceImage,
) -> Vec<Result<AugmentationRecord, Failure>> {
    let cfg = augmenter.config();
    let source_path = source.rel_path();
    let img = match imgcore::load_image(&source.path) {
        Ok(img) => img,
        Err(error) => {
            return vec![Err(Failure {
                source_path,
                aug_index: None,
                error,
            })]
        }
    };
    (0..cfg.m)
        .into_par_iter()
        .map(|a| {
            let fail = |error| Failure {
                source_path: source_path.clone(),
                aug_index: Some(a),
                error: Error::Augment {
                    source_path: source_path.clone(),
                    aug_index: a,
                    source: Box::new(error),
                },
            };
            let mut rng = derive_substream(cfg.seed, index as u64, u64::from(a));
            let sub_seed = rng.seed();
            let out = augmenter.augment_one(&img, &mut rng).map_err(fail)?;
            let output_path = source.output_rel_path(a);
            imgcore::save_image(&out.image, cfg.output_dir.join(&output_path)).map_err(fail)?;
            Ok(AugmentationRecord {
                output_path,
                source_path: source_path.clone(),
                label: source.label.clone(),
                prompt: out.draws.prompt,
                mask_kind: out.draws.mask_kind,
                fractal_id: cfg.fractals.id(out.draws.fractal_index).to_string(),
                lambda: cfg.lambda,
                sub_seed,
                backend_id: cfg.backend.backend_id().to_string(),
            })
        })
        .collect()
}

/// Augments the whole dataset and writes images, `manifest.jsonl` and
/// `manifest.meta.json` under `output_dir`.
///
/// Individual image failures do not stop the run; they are returned in
/// [`RunOutcome::failures`] and left out of the manifest.
pub fn run(cfg: &AugmentationConfig) -> Result<RunOutcome> {
    let augmenter = Augmenter::new(cfg)?;
    let sources = scan_dataset(&cfg.input_dir)?;
    if sources.is_empty() {
        return Err(Error::EmptyDataset(cfg.input_dir.clone()));
    }

    let mut outputs = HashSet::new();
    for s in &sources {
        if !outputs.insert((s.label.as_str(), s.stem())) {
            return Err(Error::Config(format!(
                "{} and another file in {} share the stem {:?}; output names would collide",
                s.rel_path(),
                s.label,
                s.stem()
            )));
        }
    }
    let labels: BTreeSet<&str> = sources.iter().map(|s| s.label.as_str()).collect();
    for label in labels {
        let dir = cfg.output_dir.join(label);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let results: Vec<_> = pool.install(|| {
        sources
            .par_iter()
            .enumerate()
            .flat_map_iter(|(i, s)| process_image(&augmenter, i, s))
            .collect()
    });

    let mut records = Vec::with_capacity(sources.len() * cfg.m as usize);
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(record) => records.push(record),
            Err(f) => failures.push(f),
        }
    }
    let manifest = Manifest {
        records,
        config_digest: cfg.digest(),
    };
    manifest.write_to(&cfg.output_dir)?;
    Ok(RunOutcome {
        manifest,
        failures,
        cache_stats: augmenter.cache_stats(),
        source_count: sources.len(),
    })
}

/// Output subdirectory name for one λ of a sweep, e.g. `lambda_0.2`.
pub fn sweep_dir_name(lambda: f32) -> String {
    format!("lambda_{lambda}")
}

/// Runs the same config once per λ, each into `output_dir/lambda_<λ>`.
pub fn run_lambda_sweep(cfg: &AugmentationConfig, lambdas: &[f32]) -> Result<Vec<(f32, RunOutcome)>> {
    lambdas
        .iter()
        .map(|&lambda| {
            let mut c = cfg.clone();
            c.lambda = lambda;
            c.output_dir = cfg.output_dir.join(sweep_dir_name(lambda));
            std::fs::create_dir_all(&c.output_dir).map_err(|e| Error::io(&c.output_dir, e))?;
            run(&c).map(|outcome| (lambda, outcome))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;
    use crate::generator::ProceduralBackend;

    fn config(dir: &Path) -> AugmentationConfig {
        AugmentationConfig::new(
            dir.join("in"),
            dir.join("out"),
            Arc::new(ProceduralBackend::default()),
            Arc::new(FractalSource::procedural_with_size(5, 1, 32).unwrap()),
        )
    }

    fn random_image(seed: u64, w: u32, h: u32) -> ImageBuffer {
        let mut rng = RngStream::new(seed);
        ImageBuffer::from_fn(w, h, |_, _| std::array::from_fn(|_| rng.unit() as f32)).unwrap()
    }

    #[test]
    fn validation() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = config(dir.path());
        assert!(cfg.validate().is_ok());
        cfg.m = 0;
        assert!(cfg.validate().is_err());
        cfg.m = 1;
        cfg.lambda = 1.01;
        assert!(matches!(cfg.validate(), Err(Error::LambdaOutOfRange(_))));
        cfg.lambda = 0.2;
        cfg.workers = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn digest_ignores_paths_and_workers() {
        let dir = tempfile::tempdir().unwrap();
        let a = config(dir.path());
        let mut b = a.clone();
        b.workers = 8;
        b.output_dir = "elsewhere".into();
        b.cache_dir = Some("cache".into());
        assert_eq!(a.digest(), b.digest());
        b.lambda = 0.3;
        assert_ne!(a.digest(), b.digest());
        let mut c = a.clone();
        c.seed = 1;
        assert_ne!(a.digest(), c.digest());
    }

    #[test]
    fn zero_lambda_and_empty_mask_returns_input() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = config(dir.path());
        cfg.lambda = 0.0;
        let aug = Augmenter::new(&cfg).unwrap();
        let img = random_image(1, 8, 6);
        let generated = aug.generate(&img, "sunset").unwrap();
        let fractal = cfg.fractals.fitted(0, 8, 6).unwrap();
        let zeros = Mask::filled(8, 6, false).unwrap();
        let (_, out) = compose(&img, &generated, &zeros, &fractal, 0.0).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn zero_lambda_splits_between_input_and_generated() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = config(dir.path());
        cfg.lambda = 0.0;
        let aug = Augmenter::new(&cfg).unwrap();
        let img = random_image(2, 8, 8);
        let out = aug.augment_one(&img, &mut RngStream::new(5)).unwrap();
        let (mut from_input, mut from_generated) = (0, 0);
        for y in 0..8 {
            for x in 0..8 {
                let p = out.image.pixel(x, y);
                if out.mask.get(x, y) == 0 {
                    assert_eq!(p, img.pixel(x, y));
                    from_input += 1;
                } else {
                    assert_eq!(p, out.generated.pixel(x, y));
                    from_generated += 1;
                }
            }
        }
        assert_eq!((from_input, from_generated), (32, 32));
    }

    #[test]
    fn draw_order_is_prompt_mask_fractal() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path());
        let aug = Augmenter::new(&cfg).unwrap();
        let img = random_image(3, 8, 8);
        let out = aug.augment_one(&img, &mut RngStream::new(21)).unwrap();
        let mut rng = RngStream::new(21);
        let prompt = cfg.prompts.sample(&mut rng).to_string();
        let mask_kind = cfg.mask_set.sample(&mut rng);
        let fractal_index = cfg.fractals.sample(&mut rng);
        assert_eq!(out.draws, Draws { prompt, mask_kind, fractal_index });
        let again = aug.augment_with(&img, out.draws.clone()).unwrap();
        assert_eq!(again.image, out.image);
    }

    struct Oversized;

    impl GeneratorBackend for Oversized {
        fn backend_id(&self) -> &str {
            "oversized"
        }

        fn generate(&self, image: &ImageBuffer, _: &str) -> Result<ImageBuffer> {
            resize_bilinear(image, image.width() * 2, image.height() + 3)
        }
    }

    #[test]
    fn mismatched_generation_is_resized() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = config(dir.path());
        cfg.backend = Arc::new(Oversized);
        let aug = Augmenter::new(&cfg).unwrap();
        let img = random_image(4, 7, 5);
        let out = aug.augment_one(&img, &mut RngStream::new(1)).unwrap();
        assert_eq!(out.generated.dims(), (7, 5));
        assert_eq!(out.image.dims(), (7, 5));
    }

    #[test]
    fn empty_dataset() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir_all(dir.path().join("in/empty_class")).unwrap();
        let cfg = config(dir.path());
        assert!(matches!(run(&cfg), Err(Error::EmptyDataset(_))));
    }

    #[test]
    fn single_image_run() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir_all(dir.path().join("in/zebra")).unwrap();
        imgcore::save_image(&random_image(6, 12, 9), dir.path().join("in/zebra/z1.png")).unwrap();
        let cfg = config(dir.path());
        let outcome = run(&cfg).unwrap();
        assert!(outcome.is_success());
        let records = &outcome.manifest.records;
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].label, "zebra");
        assert_eq!(records[0].source_path, "zebra/z1.png");
        assert_eq!(records[0].output_path, "zebra/z1_aug0.png");
        assert_eq!(records[0].sub_seed, derive_sub_seed(0, 0, 0));
        let out = imgcore::load_image(dir.path().join("out/zebra/z1_aug0.png")).unwrap();
        assert_eq!(out.dims(), (12, 9));
        assert_eq!(read_records(&dir.path().join("out").join(MANIFEST_FILE)).unwrap(), *records);
    }

    #[test]
    fn corrupt_images_are_reported_not_fatal() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir_all(dir.path().join("in/a")).unwrap();
        imgcore::save_image(&random_image(7, 8, 8), dir.path().join("in/a/good.png")).unwrap();
        std::fs::write(dir.path().join("in/a/bad.png"), b"not a png").unwrap();
        let mut cfg = config(dir.path());
        cfg.m = 3;
        let outcome = run(&cfg).unwrap();
        assert!(!outcome.is_success());
        assert_eq!(outcome.failures.len(), 1);
        assert_eq!(outcome.failures[0].source_path, "a/bad.png");
        assert_eq!(outcome.manifest.records.len(), 3);
    }

    #[test]
    fn colliding_stems_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir_all(dir.path().join("in/a")).unwrap();
        imgcore::save_image(&random_image(8, 4, 4), dir.path().join("in/a/x.png")).unwrap();
        std::fs::copy(dir.path().join("in/a/x.png"), dir.path().join("in/a/x.jpg")).unwrap();
        assert!(matches!(run(&config(dir.path())), Err(Error::Config(_))));
    }

    #[test]
    fn sweep_dir_names() {
        let names: Vec<String> = fractal::LAMBDA_SWEEP.iter().map(|&l| sweep_dir_name(l)).collect();
        assert_eq!(names, ["lambda_0.1", "lambda_0.2", "lambda_0.3", "lambda_0.4", "lambda_0.5"]);
    }
}
