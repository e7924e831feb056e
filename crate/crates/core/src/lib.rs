//! Label-preserving image augmentation.
//!
//! Each source image is paired with a prompt-conditioned generated
//! counterpart, half of one is pasted over the other through a binary mask,
//! and a fractal image is blended on top. Every augmented image derives
//! from exactly one source and keeps its label.
//!
//! Modules, bottom-up:
//!
//! - [`imgcore`]: float RGB buffers, PNG/JPEG I/O, resampling
//! - [`prompts`]: prompt library and instruction template
//! - [`generator`]: generation backends and the content-addressed cache
//! - [`masking`]: half-plane masks and masked concatenation
//! - [`fractal`]: fractal sources and blending
//! - [`pipeline`]: seeded per-image loop, dataset traversal, manifest

pub mod error;
pub mod fractal;
pub mod generator;
pub mod imgcore;
pub mod masking;
pub mod pipeline;
pub mod prompts;
pub mod rng;

pub use error::{Error, Result};
pub use fractal::{blend, generate_fractal, load_fractal_dir, FractalSource, FractalSpec, DEFAULT_LAMBDA, LAMBDA_SWEEP};
pub use generator::{GenerationCache, GeneratorBackend, ProceduralBackend, RemoteBackend};
pub use imgcore::{cover_crop_resize, load_image, resize_bilinear, save_image, ImageBuffer};
pub use masking::{concatenate, make_mask, Mask, MaskKind, MaskSet};
pub use pipeline::{run, AugmentationConfig, AugmentationRecord, Augmenter, Manifest, RunOutcome};
pub use prompts::{default_library, PromptLibrary};
pub use rng::{derive_substream, RngStream};
