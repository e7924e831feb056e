//! Fractal image sources and fractal blending `A = λF + (1 − λ)H`.

mod ifs;

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, OnceLock, RwLock};

use sha2::{Digest, Sha256};

pub use ifs::{fractal_seed, generate_fractal, MIN_FRACTAL_SIZE};

use crate::error::{Error, Result};
use crate::imgcore::{self, cover_crop_resize, ImageBuffer};
use crate::rng::RngStream;

pub const DEFAULT_LAMBDA: f32 = 0.2;

/// The blending-factor grid used for λ sweeps.
pub const LAMBDA_SWEEP: [f32; 5] = [0.1, 0.2, 0.3, 0.4, 0.5];

/// Side length procedural fractals are rendered at before being fitted.
pub const DEFAULT_RENDER_SIZE: u32 = 256;

pub fn check_lambda(lambda: f32) -> Result<()> {
    if (0.0..=1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(Error::LambdaOutOfRange(lambda))
    }
}

/// `lambda * fractal + (1 - lambda) * hybrid`, per channel.
pub fn blend(hybrid: &ImageBuffer, fractal: &ImageBuffer, lambda: f32) -> Result<ImageBuffer> {
    check_lambda(lambda)?;
    if hybrid.dims() != fractal.dims() {
        return Err(Error::DimensionMismatch {
            expected: hybrid.dims(),
            actual: fractal.dims(),
        });
    }
    let keep = 1.0 - lambda;
    let data = hybrid
        .as_slice()
        .iter()
        .zip(fractal.as_slice())
        .map(|(&h, &f)| imgcore::clamp_unit(lambda * f + keep * h))
        .collect();
    Ok(ImageBuffer::from_raw_unchecked(hybrid.width(), hybrid.height(), data))
}

/// Where fractal images come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FractalSpec {
    Directory(PathBuf),
    Procedural { count: usize, seed: u64 },
}

impl Default for FractalSpec {
    fn default() -> Self {
        FractalSpec::Procedural { count: 100, seed: 0 }
    }
}

impl FromStr for FractalSpec {
    type Err = Error;

    /// `dir:<path>` or `procedural:<count>[,seed=<n>]`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::Config(format!("invalid fractal source {s:?}: {why}"));
        if let Some(path) = s.strip_prefix("dir:") {
            if path.is_empty() {
                return Err(bad("missing directory"));
            }
            return Ok(FractalSpec::Directory(PathBuf::from(path)));
        }
        let rest = s
            .strip_prefix("procedural:")
            .ok_or_else(|| bad("expected dir:<path> or procedural:<count>,seed=<n>"))?;
        let (count, seed) = match rest.split_once(',') {
            Some((count, seed)) => {
                let seed = seed.trim().strip_prefix("seed=").ok_or_else(|| bad("expected seed=<n>"))?;
                (count, seed.parse().map_err(|_| bad("seed is not an integer"))?)
            }
            None => (rest, 0),
        };
        let count: usize = count.trim().parse().map_err(|_| bad("count is not an integer"))?;
        if count == 0 {
            return Err(bad("count must be at least 1"));
        }
        Ok(FractalSpec::Procedural { count, seed })
    }
}

impl fmt::Display for FractalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FractalSpec::Directory(p) => write!(f, "dir:{}", p.display()),
            FractalSpec::Procedural { count, seed } => write!(f, "procedural:{count},seed={seed}"),
        }
    }
}

#[derive(Debug)]
enum Items {
    Loaded(Vec<Arc<ImageBuffer>>),
    Procedural {
        seed: u64,
        render_size: u32,
        rendered: Vec<OnceLock<Arc<ImageBuffer>>>,
    },
}

/// An immutable set of fractal images addressed by id.
///
/// Images fitted to a target size are memoized per `(index, width, height)`.
#[derive(Debug)]
pub struct FractalSource {
    ids: Vec<String>,
    items: Items,
    fingerprint: String,
    fitted: RwLock<HashMap<(usize, u32, u32), Arc<ImageBuffer>>>,
}

impl FractalSource {
    pub fn from_spec(spec: &FractalSpec) -> Result<Self> {
        match spec {
            FractalSpec::Directory(path) => load_fractal_dir(path),
            FractalSpec::Procedural { count, seed } => Self::procedural(*count, *seed),
        }
    }

    pub fn procedural(count: usize, seed: u64) -> Result<Self> {
        Self::procedural_with_size(count, seed, DEFAULT_RENDER_SIZE)
    }

    /// Ids are `fractal_0000` etc; item `i` renders with `fractal_seed(seed, i)`.
    pub fn procedural_with_size(count: usize, seed: u64, render_size: u32) -> Result<Self> {
        if count == 0 {
            return Err(Error::Config("procedural fractal count must be at least 1".into()));
        }
        if render_size < MIN_FRACTAL_SIZE {
            return Err(Error::InvalidDimensions {
                width: render_size,
                height: render_size,
                reason: "fractals must be at least 16x16",
            });
        }
        Ok(Self {
            ids: (0..count).map(|i| format!("fractal_{i:04}")).collect(),
            items: Items::Procedural {
                seed,
                render_size,
                rendered: (0..count).map(|_| OnceLock::new()).collect(),
            },
            fingerprint: format!("procedural:{count},seed={seed},size={render_size},ifs-v1"),
            fitted: RwLock::default(),
        })
    }

    /// A source over explicit images, e.g. for tests and previews.
    pub fn from_images(images: Vec<(String, ImageBuffer)>) -> Result<Self> {
        if images.is_empty() {
            return Err(Error::EmptyFractalSet(PathBuf::new()));
        }
        let mut hasher = Sha256::new();
        let mut ids = Vec::with_capacity(images.len());
        let mut loaded = Vec::with_capacity(images.len());
        for (id, img) in images {
            hasher.update((id.len() as u64).to_le_bytes());
            hasher.update(id.as_bytes());
            hasher.update(img.width().to_le_bytes());
            hasher.update(img.height().to_le_bytes());
            for v in img.as_slice() {
                hasher.update(v.to_le_bytes());
            }
            ids.push(id);
            loaded.push(Arc::new(img));
        }
        Ok(Self {
            ids,
            items: Items::Loaded(loaded),
            fingerprint: format!("images:{}", hex::encode(hasher.finalize())),
            fitted: RwLock::default(),
        })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn id(&self, index: usize) -> &str {
        &self.ids[index]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|i| i == id)
    }

    /// Stable description of the source contents, for config digests.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    /// Uniformly draws an item index.
    pub fn sample(&self, rng: &mut RngStream) -> usize {
        rng.index(self.ids.len())
    }

    pub fn sample_id(&self, rng: &mut RngStream) -> &str {
        let i = self.sample(rng);
        &self.ids[i]
    }

    /// The fractal at its native size.
    pub fn image(&self, index: usize) -> Result<Arc<ImageBuffer>> {
        match &self.items {
            Items::Loaded(images) => Ok(Arc::clone(&images[index])),
            Items::Procedural {
                seed,
                render_size,
                rendered,
            } => {
                if let Some(img) = rendered[index].get() {
                    return Ok(Arc::clone(img));
                }
                let img = generate_fractal(fractal_seed(*seed, index as u64), *render_size, *render_size)?;
                Ok(Arc::clone(rendered[index].get_or_init(|| Arc::new(img))))
            }
        }
    }

    /// The fractal cover-cropped to `width x height`.
    pub fn fitted(&self, index: usize, width: u32, height: u32) -> Result<Arc<ImageBuffer>> {
        let key = (index, width, height);
        if let Some(img) = self.fitted.read().expect("fractal memo poisoned").get(&key) {
            return Ok(Arc::clone(img));
        }
        let img = Arc::new(cover_crop_resize(&*self.image(index)?, width, height)?);
        let mut memo = self.fitted.write().expect("fractal memo poisoned");
        Ok(Arc::clone(memo.entry(key).or_insert(img)))
    }
}

/// Loads every decodable image in `path`; ids are file names in sorted order.
///
/// Undecodable files are skipped with a warning. An empty directory yields
/// `EmptyFractalSet`; a directory where every file fails yields the last
/// decode error.
pub fn load_fractal_dir(path: impl AsRef<Path>) -> Result<FractalSource> {
    let path = path.as_ref();
    let mut files = Vec::new();
    for entry in std::fs::read_dir(path).map_err(|e| Error::io(path, e))? {
        let entry = entry.map_err(|e| Error::io(path, e))?;
        if entry.file_type().map_err(|e| Error::io(entry.path(), e))?.is_file() {
            if let Some(name) = entry.file_name().to_str() {
                files.push(name.to_string());
            } else {
                log::warn!("skipping non-UTF-8 file name {:?}", entry.file_name());
            }
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(Error::EmptyFractalSet(path.to_path_buf()));
    }

    let mut images = Vec::with_capacity(files.len());
    let mut last_err = None;
    for name in files {
        match imgcore::load_image(path.join(&name)) {
            Ok(img) => images.push((name, img)),
            Err(e) => {
                log::warn!("skipping fractal {name}: {e}");
                last_err = Some(e);
            }
        }
    }
    if images.is_empty() {
        return Err(last_err.unwrap_or_else(|| Error::EmptyFractalSet(path.to_path_buf())));
    }
    FractalSource::from_images(images)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn flat(w: u32, h: u32, v: f32) -> ImageBuffer {
        ImageBuffer::filled(w, h, [v; 3]).unwrap()
    }

    #[test]
    fn blend_endpoints() {
        let h = ImageBuffer::from_fn(3, 2, |x, y| [x as f32 / 3.0, y as f32 / 2.0, 0.7]).unwrap();
        let f = ImageBuffer::from_fn(3, 2, |x, y| [0.1, (x + y) as f32 / 5.0, 0.9]).unwrap();
        assert_eq!(blend(&h, &f, 0.0).unwrap(), h);
        assert_eq!(blend(&h, &f, 1.0).unwrap(), f);
    }

    #[test]
    fn blend_scalar_value() {
        let out = blend(&flat(1, 1, 0.5), &flat(1, 1, 1.0), DEFAULT_LAMBDA).unwrap();
        // 0.2 * 1.0 + 0.8 * 0.5
        for v in out.as_slice() {
            assert!((v - 0.6).abs() < 1e-6);
        }
    }

    #[test]
    fn blend_errors() {
        assert!(matches!(
            blend(&flat(2, 2, 0.1), &flat(2, 2, 0.1), 1.5),
            Err(Error::LambdaOutOfRange(_))
        ));
        assert!(blend(&flat(2, 2, 0.1), &flat(2, 2, 0.1), -0.01).is_err());
        assert!(blend(&flat(2, 2, 0.1), &flat(2, 2, 0.1), f32::NAN).is_err());
        assert!(matches!(
            blend(&flat(2, 2, 0.1), &flat(3, 2, 0.1), 0.5),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn parse_specs() {
        assert_eq!(
            "procedural:100,seed=7".parse::<FractalSpec>().unwrap(),
            FractalSpec::Procedural { count: 100, seed: 7 }
        );
        assert_eq!(
            "procedural:3".parse::<FractalSpec>().unwrap(),
            FractalSpec::Procedural { count: 3, seed: 0 }
        );
        assert_eq!(
            "dir:/tmp/fr".parse::<FractalSpec>().unwrap(),
            FractalSpec::Directory("/tmp/fr".into())
        );
        for bad in ["procedural:0", "procedural:x", "procedural:3,s=1", "dir:", "fractals"] {
            assert!(bad.parse::<FractalSpec>().is_err(), "{bad}");
        }
        let spec = FractalSpec::Procedural { count: 5, seed: 9 };
        assert_eq!(spec.to_string().parse::<FractalSpec>().unwrap(), spec);
    }

    #[test]
    fn directory_ids_are_sorted() {
        let dir = tempfile::tempdir().unwrap();
        imgcore::save_image(&flat(4, 4, 0.2), dir.path().join("b.png")).unwrap();
        imgcore::save_image(&flat(4, 4, 0.8), dir.path().join("a.png")).unwrap();
        std::fs::create_dir(dir.path().join("subdir")).unwrap();
        let src = load_fractal_dir(dir.path()).unwrap();
        assert_eq!(src.ids(), &["a.png".to_string(), "b.png".to_string()]);
        assert_eq!(src.image(0).unwrap().pixel(0, 0), [0.8; 3]);
    }

    #[test]
    fn directory_skips_bad_files() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("notes.txt"), "hello").unwrap();
        assert!(matches!(load_fractal_dir(dir.path()), Err(Error::Decode { .. })));
        imgcore::save_image(&flat(4, 4, 0.2), dir.path().join("ok.png")).unwrap();
        assert_eq!(load_fractal_dir(dir.path()).unwrap().ids(), &["ok.png".to_string()]);
    }

    #[test]
    fn empty_directory() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_fractal_dir(dir.path()), Err(Error::EmptyFractalSet(_))));
    }

    #[test]
    fn hundred_image_directory() {
        let dir = tempfile::tempdir().unwrap();
        for i in 0..100 {
            imgcore::save_image(&flat(2, 2, i as f32 / 100.0), dir.path().join(format!("f{i:03}.png"))).unwrap();
        }
        assert_eq!(load_fractal_dir(dir.path()).unwrap().len(), 100);
    }

    #[test]
    fn procedural_source_is_deterministic_and_memoized() {
        let a = FractalSource::procedural_with_size(4, 11, 32).unwrap();
        let b = FractalSource::procedural_with_size(4, 11, 32).unwrap();
        assert_eq!(a.ids()[3], "fractal_0003");
        assert_eq!(*a.image(2).unwrap(), *b.image(2).unwrap());
        assert_eq!(*a.image(2).unwrap(), generate_fractal(fractal_seed(11, 2), 32, 32).unwrap());
        let f1 = a.fitted(1, 8, 8).unwrap();
        let f2 = a.fitted(1, 8, 8).unwrap();
        assert!(Arc::ptr_eq(&f1, &f2));
        assert_eq!(f1.dims(), (8, 8));
    }

    #[test]
    fn sampling_singleton_and_membership() {
        let single = FractalSource::from_images(vec![("only".into(), flat(2, 2, 0.5))]).unwrap();
        let many = FractalSource::procedural(100, 0).unwrap();
        let mut rng = RngStream::new(1);
        for _ in 0..100 {
            assert_eq!(single.sample_id(&mut rng), "only");
            assert!(many.index_of(many.sample_id(&mut rng)).is_some());
        }
    }

    #[test]
    fn sampling_is_uniform_over_hundred() {
        let src = FractalSource::procedural(100, 0).unwrap();
        let mut rng = RngStream::new(77);
        let mut counts = vec![0usize; 100];
        for _ in 0..100_000 {
            counts[src.sample(&mut rng)] += 1;
        }
        for c in counts {
            let freq = c as f64 / 100_000.0;
            assert!((freq - 0.01).abs() <= 0.003, "{freq}");
        }
    }

    fn arb_pair() -> impl Strategy<Value = (ImageBuffer, ImageBuffer)> {
        (1u32..8, 1u32..8).prop_flat_map(|(w, h)| {
            let n = (w * h * 3) as usize;
            (
                proptest::collection::vec(0.0f32..=1.0, n),
                proptest::collection::vec(0.0f32..=1.0, n),
            )
                .prop_map(move |(a, b)| (ImageBuffer::new(w, h, a).unwrap(), ImageBuffer::new(w, h, b).unwrap()))
        })
    }

    proptest! {
        #[test]
        fn blend_is_affine_in_lambda((h, f) in arb_pair(), l1 in 0.0f32..=0.5) {
            let b1 = blend(&h, &f, l1).unwrap();
            let b2 = blend(&h, &f, 2.0 * l1).unwrap();
            for ((x2, x1), x0) in b2.as_slice().iter().zip(b1.as_slice()).zip(h.as_slice()) {
                prop_assert!(((x2 - x1) - (x1 - x0)).abs() <= 1e-6);
            }
        }

        #[test]
        fn blend_preserves_range((h, f) in arb_pair(), l in 0.0f32..=1.0) {
            let out = blend(&h, &f, l).unwrap();
            prop_assert!(out.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
        }

        // Swapping the operands with the complementary weight is exact
        // whenever 1 - λ is itself exactly representable (dyadic λ).
        #[test]
        fn blend_commutes_with_complementary_weight((h, f) in arb_pair(), k in 0u32..=1024) {
            let l = k as f32 / 1024.0;
            prop_assert_eq!(blend(&h, &f, l).unwrap(), blend(&f, &h, 1.0 - l).unwrap());
        }
    }
}
