use std::io::Write;
use std::time::{Duration, Instant};

use diffusemix_core::generator::CacheStats;
use diffusemix_core::pipeline::{run_lambda_sweep, sweep_dir_name, RunOutcome};
use diffusemix_core::LAMBDA_SWEEP;

use crate::args::AugmentArgs;
use crate::config::resolve_augment;
use crate::{CliError, CACHE_ENV, EXIT_FAILURE, EXIT_SUCCESS};

/// The one-line report printed after a run.
pub fn summary_line(records: usize, failures: usize, cache: Option<CacheStats>, wall: Duration) -> String {
    let cache = match cache {
        Some(s) => format!("cache {} hits / {} misses", s.hits, s.misses),
        None => "cache off".to_string(),
    };
    format!(
        "{records} records, {failures} failures, {cache}, wall time {:.2}s",
        wall.as_secs_f64()
    )
}

fn report(outcome: &RunOutcome, wall: Duration, prefix: &str, out: &mut dyn Write, err: &mut dyn Write) {
    for f in &outcome.failures {
        let _ = writeln!(err, "error: {}", f.error);
    }
    let _ = writeln!(
        out,
        "{prefix}{}",
        summary_line(outcome.manifest.records.len(), outcome.failures.len(), outcome.cache_stats, wall)
    );
}

pub fn run(args: &AugmentArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<u8, CliError> {
    let env_cache = std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(Into::into);
    let plan = resolve_augment(args, env_cache)?;
    let cfg = &plan.config;
    log::info!("augmenting {} with config digest {}", cfg.input_dir.display(), cfg.digest());

    let mut all_ok = true;
    if plan.lambda_sweep {
        for lambda in LAMBDA_SWEEP {
            let started = Instant::now();
            let (_, outcome) = run_lambda_sweep(cfg, &[lambda])?.remove(0);
            report(&outcome, started.elapsed(), &format!("{}: ", sweep_dir_name(lambda)), out, err);
            all_ok &= outcome.is_success();
        }
    } else {
        let started = Instant::now();
        let outcome = diffusemix_core::run(cfg)?;
        report(&outcome, started.elapsed(), "", out, err);
        all_ok = outcome.is_success();
    }
    Ok(if all_ok { EXIT_SUCCESS } else { EXIT_FAILURE })
}
