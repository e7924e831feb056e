use std::io::Write;

use diffusemix_core::fractal::{fractal_seed, generate_fractal, MIN_FRACTAL_SIZE};
use diffusemix_core::save_image;

use crate::args::FractalsArgs;
use crate::{CliError, EXIT_SUCCESS};

pub fn file_name(index: usize) -> String {
    format!("fractal_{index:04}.png")
}

/// Writes `fractal_0000.png` .. into `args.output`; item `i` uses
/// `fractal_seed(seed, i)`, the same images `procedural:<count>,seed=<seed>` uses.
pub fn run(args: &FractalsArgs, out: &mut dyn Write) -> Result<u8, CliError> {
    if args.count == 0 {
        return Err(CliError::usage("--count: must be at least 1"));
    }
    if args.size < MIN_FRACTAL_SIZE {
        return Err(CliError::usage(format!("--size: must be at least {MIN_FRACTAL_SIZE}")));
    }
    std::fs::create_dir_all(&args.output)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", args.output.display())))?;
    for i in 0..args.count {
        let img = generate_fractal(fractal_seed(args.seed, i as u64), args.size, args.size)?;
        save_image(&img, args.output.join(file_name(i)))?;
    }
    let _ = writeln!(
        out,
        "wrote {} fractals of {}x{} to {}",
        args.count,
        args.size,
        args.size,
        args.output.display()
    );
    Ok(EXIT_SUCCESS)
}
