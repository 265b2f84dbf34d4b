//! Size/power studies on a thread pool.

use rayon::prelude::*;

use sepstat_core::sim::{run_replicate, InnovationSampler};
use sepstat_core::{Error, StudyConfig, StudySummary};

/// Environment variable holding the default worker count.
pub const THREADS_ENV: &str = "SEPSTAT_THREADS";

/// Explicit cap, else `SEPSTAT_THREADS`, else rayon's default (0).
pub fn thread_count(cap: Option<usize>) -> usize {
    cap.or_else(|| std::env::var(THREADS_ENV).ok()?.trim().parse().ok())
        .unwrap_or(0)
}

/// Runs every replicate on a pool of `threads` workers (0 = one per core).
/// Each replicate owns its seeds, so the summary does not depend on the
/// pool size. The reported error is the one with the smallest index.
pub fn run_study(cfg: &StudyConfig, threads: usize) -> Result<StudySummary, Error> {
    cfg.validate()?;
    let sampler = InnovationSampler::new(&cfg.kernel)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<_> = pool.install(|| {
        (0..cfg.replications)
            .into_par_iter()
            .map(|i| run_replicate(cfg, &sampler, i))
            .collect()
    });
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(StudySummary::from_outcomes(outcomes, cfg.alpha))
}
