use std::io::Write;
use std::sync::Arc;

use diffusemix_core::pipeline::{Augmented, Augmenter, Draws};
use diffusemix_core::{load_image, save_image, AugmentationConfig, ImageBuffer, MaskKind};

use crate::args::PreviewArgs;
use crate::config::{build_backend, check_lambda, check_strength, load_fractals, load_prompts, timeout_from_secs, BackendSpec};
use crate::{CliError, EXIT_SUCCESS};

/// Panel names in sheet order: input, generated, mask, hybrid, fractal, augmented.
pub const PANELS: [&str; 6] = ["I_input", "G_generated", "M_mask", "H_hybrid", "F_fractal", "A_augmented"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub panel_width: u32,
    pub panel_height: u32,
    pub gutter: u32,
}

impl Layout {
    pub fn sheet_width(&self) -> u32 {
        6 * self.panel_width + 5 * self.gutter
    }

    pub fn panel_x(&self, index: u32) -> u32 {
        index * (self.panel_width + self.gutter)
    }

    /// `layout sheet=WxH panel=WxH gutter=G panels=I_input@0,...`
    pub fn describe(&self) -> String {
        let panels: Vec<String> = PANELS
            .iter()
            .enumerate()
            .map(|(i, name)| format!("{name}@{}", self.panel_x(i as u32)))
            .collect();
        format!(
            "layout sheet={}x{} panel={}x{} gutter={} panels={}",
            self.sheet_width(),
            self.panel_height,
            self.panel_width,
            self.panel_height,
            self.gutter,
            panels.join(",")
        )
    }
}

/// Lays same-sized panels out left to right on a white background.
pub fn contact_sheet(panels: &[&ImageBuffer; 6], gutter: u32) -> Result<(ImageBuffer, Layout), CliError> {
    let (w, h) = panels[0].dims();
    let layout = Layout {
        panel_width: w,
        panel_height: h,
        gutter,
    };
    let sheet = ImageBuffer::from_fn(layout.sheet_width(), h, |x, y| {
        let (slot, dx) = (x / (w + gutter), x % (w + gutter));
        if dx < w {
            panels[slot as usize].pixel(dx, y)
        } else {
            [1.0; 3]
        }
    })?;
    Ok((sheet, layout))
}

/// The input image and every later stage, with explicit prompt, mask and fractal.
pub fn stages(args: &PreviewArgs) -> Result<(ImageBuffer, Augmented), CliError> {
    check_lambda(args.lambda)?;
    check_strength(args.strength)?;
    let mask_kind: MaskKind = args.mask.parse().map_err(|e| CliError::for_flag("--mask", e))?;
    let backend_spec: BackendSpec = args.backend.parse()?;
    let backend = build_backend(&backend_spec, args.strength, args.retries, timeout_from_secs(Some(args.timeout))?);
    let prompts = load_prompts(args.prompts.as_deref())?;
    let fractals = load_fractals(&args.fractals)?;

    let prompt = match &args.prompt {
        Some(p) if prompts.contains(p) => p.clone(),
        Some(p) => return Err(CliError::usage(format!("--prompt: {p:?} is not in the prompt library"))),
        None => prompts.entries()[0].clone(),
    };
    let fractal_index = match &args.fractal {
        None => 0,
        Some(f) => f
            .parse::<usize>()
            .ok()
            .filter(|&i| i < fractals.len())
            .or_else(|| fractals.index_of(f))
            .ok_or_else(|| CliError::usage(format!("--fractal: no fractal {f:?} in {}", args.fractals)))?,
    };

    let img = load_image(&args.input)?;
    let mut cfg = AugmentationConfig::new("", "", backend, Arc::new(fractals));
    cfg.lambda = args.lambda;
    cfg.prompts = prompts;
    let augmenter = Augmenter::new(&cfg)?;
    let draws = Draws {
        prompt,
        mask_kind,
        fractal_index,
    };
    let stages = augmenter.augment_with(&img, draws)?;
    Ok((img, stages))
}

pub fn run(args: &PreviewArgs, out: &mut dyn Write) -> Result<u8, CliError> {
    let (img, s) = stages(args)?;
    let mask = s.mask.to_image();
    let (sheet, layout) = contact_sheet(&[&img, &s.generated, &mask, &s.hybrid, &s.fractal, &s.image], args.gutter)?;
    save_image(&sheet, &args.output)?;
    let _ = writeln!(out, "{}", layout.describe());
    Ok(EXIT_SUCCESS)
}
