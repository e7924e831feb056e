//! The generation step: image + rendered prompt -> generated counterpart.

mod cache;
mod procedural;
mod remote;

use std::sync::Arc;

pub use cache::{cache_key, CacheKey, CacheStats, GenerationCache};
pub use procedural::{procedural_stylize, ProceduralBackend, Style, MOSAIC_BLOCK, RECIPE_VERSION};
pub use remote::{remote_generate, RemoteBackend, DEFAULT_RETRIES, DEFAULT_TIMEOUT};

use crate::error::Result;
use crate::imgcore::ImageBuffer;

/// An image-to-image generator.
///
/// `backend_id` must change whenever the generation semantics change; it
/// is part of every cache key and manifest record. Outputs may have any
/// size, the pipeline resizes them to the source dimensions.
pub trait GeneratorBackend: Send + Sync {
    fn backend_id(&self) -> &str;

    fn generate(&self, image: &ImageBuffer, rendered_prompt: &str) -> Result<ImageBuffer>;
}

impl<T: GeneratorBackend + ?Sized> GeneratorBackend for Arc<T> {
    fn backend_id(&self) -> &str {
        (**self).backend_id()
    }

    fn generate(&self, image: &ImageBuffer, rendered_prompt: &str) -> Result<ImageBuffer> {
        (**self).generate(image, rendered_prompt)
    }
}

impl<T: GeneratorBackend + ?Sized> GeneratorBackend for &T {
    fn backend_id(&self) -> &str {
        (**self).backend_id()
    }

    fn generate(&self, image: &ImageBuffer, rendered_prompt: &str) -> Result<ImageBuffer> {
        (**self).generate(image, rendered_prompt)
    }
}
