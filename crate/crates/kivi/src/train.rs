use std::time::Instant;

use kivi_core::autodiff::Parameterized;
use kivi_core::rng::Rng;
use kivi_core::vi::{optimize, OptimizerConfig, StepOutput, Trace};

use crate::error::{HarnessError, Result};
use crate::output::Outputs;

/// Where a training run writes its trace and per-iteration wall time.
pub struct TraceFiles<'a> {
    pub key: &'a str,
    pub trace: &'a str,
    pub timing: &'a str,
}

impl TraceFiles<'_> {
    pub const KIVI: TraceFiles<'static> = TraceFiles {
        key: "trace",
        trace: "trace.csv",
        timing: "timing.csv",
    };
}

/// [`optimize`] plus timing and file output. The trace is written whether
/// or not training finishes.
pub fn train<T, F>(
    out: &mut Outputs,
    files: &TraceFiles<'_>,
    target: &mut T,
    config: &OptimizerConfig,
    iterations: usize,
    per_epoch: usize,
    rng: &mut Rng,
    mut step: F,
) -> Result<Trace>
where
    T: Parameterized + ?Sized,
    F: FnMut(&T, usize, &mut Rng) -> kivi_core::Result<StepOutput>,
{
    let mut millis = Vec::with_capacity(iterations);
    let result = optimize(target, config, iterations, per_epoch, rng, |t, i, r| {
        let start = Instant::now();
        let out = step(t, i, r);
        millis.push(start.elapsed().as_secs_f64() * 1e3);
        out
    });
    let timing_key = format!("{}_timing", files.key);
    match result {
        Ok(trace) => {
            out.trace(files.key, files.trace, &trace)?;
            out.timing(&timing_key, files.timing, &millis)?;
            Ok(trace)
        }
        Err(failure) => {
            out.trace(files.key, files.trace, &failure.trace)?;
            out.timing(&timing_key, files.timing, &millis)?;
            match failure.error {
                e @ kivi_core::Error::NonFiniteLoss { .. } => Err(HarnessError::Diverged {
                    error: e,
                    trace: failure.trace,
                }),
                e => Err(e.into()),
            }
        }
    }
}
