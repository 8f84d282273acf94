use nsgp_core::fit::FitEvent;
use nsgp_core::ComponentRunner;
use rayon::prelude::*;

use crate::error::{CliError, CliResult};

/// Runs local fits on a rayon pool. Results come back in component order
/// regardless of the thread count.
pub struct RayonRunner {
    pool: rayon::ThreadPool,
    quiet: bool,
}

impl RayonRunner {
    /// `threads == 0` uses rayon's default.
    pub fn new(threads: usize, quiet: bool) -> CliResult<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| CliError::Config(format!("cannot start {threads} threads: {e}")))?;
        Ok(Self { pool, quiet })
    }
}

impl ComponentRunner for RayonRunner {
    fn map<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool
            .install(|| (0..count).into_par_iter().map(f).collect())
    }

    fn progress(&self, event: FitEvent) {
        if self.quiet {
            return;
        }
        match event {
            FitEvent::LocalStart {
                component,
                total,
                neighborhood,
            } => eprintln!(
                "Calculating the parameter set for mixture component {} of {total} ({neighborhood} observations)",
                component + 1
            ),
            FitEvent::GlobalStart => eprintln!("Estimating the global variance parameters"),
        }
    }
}
