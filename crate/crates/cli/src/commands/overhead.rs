use std::fmt;
use std::io::Write;

use crate::args::OverheadArgs;
use crate::{CliError, EXIT_SUCCESS};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OverheadError {
    /// The vanilla time is zero, negative or not finite.
    NonPositiveBaseline(f64),
    /// The augmented time is negative or not finite.
    InvalidTime(f64),
}

impl fmt::Display for OverheadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OverheadError::NonPositiveBaseline(t) => write!(f, "--t-van: baseline time must be positive, got {t}"),
            OverheadError::InvalidTime(t) => write!(f, "--t-aug: time must be non-negative, got {t}"),
        }
    }
}

impl std::error::Error for OverheadError {}

/// `(t_aug - t_van) / t_van * 100`.
pub fn compute_overhead(t_aug: f64, t_van: f64) -> Result<f64, OverheadError> {
    if !(t_van.is_finite() && t_van > 0.0) {
        return Err(OverheadError::NonPositiveBaseline(t_van));
    }
    if !(t_aug.is_finite() && t_aug >= 0.0) {
        return Err(OverheadError::InvalidTime(t_aug));
    }
    Ok((t_aug - t_van) / t_van * 100.0)
}

pub fn run(args: &OverheadArgs, out: &mut dyn Write) -> Result<u8, CliError> {
    let pct = compute_overhead(args.t_aug, args.t_van).map_err(|e| CliError::usage(e.to_string()))?;
    let _ = writeln!(out, "{pct}%");
    Ok(EXIT_SUCCESS)
}
