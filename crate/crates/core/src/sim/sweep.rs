//! Batch runs of independent scenarios, data-parallel when the `parallel`
//! feature is on.

use serde::Serialize;

use crate::learning::StepEnvironment;
use crate::lipm::ApexState;

use super::walk::{walk_scenario, Disturbance, StepPolicy, WalkScenario};
use super::SimError;

/// How a batch is executed. `Parallel` falls back to sequential when the
/// crate is built without the `parallel` feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

/// Order-preserving map over `items`.
pub fn run_batch<T, R, F>(exec: Exec, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}

/// One pushed start: the apex, the push direction and how it went.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PushOutcome {
    pub start: ApexState,
    pub direction: f64,
    pub survived: usize,
    pub recovered: bool,
}

/// `n` compass directions starting at 0 (straight ahead), counter-clockwise.
pub fn compass(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| k as f64 * std::f64::consts::TAU / n as f64)
        .collect()
}

/// Starts each walk at an apex, applies a `delta_v` push along each direction
/// at `push_time`, and counts the walk as recovered when it completes
/// `n_steps`.
#[allow(clippy::too_many_arguments)]
pub fn push_sweep(
    policy: &dyn StepPolicy,
    env: &StepEnvironment,
    starts: &[ApexState],
    directions: &[f64],
    delta_v: f64,
    push_time: f64,
    n_steps: usize,
    exec: Exec,
) -> Vec<PushOutcome> {
    let jobs: Vec<(ApexState, f64)> = starts
        .iter()
        .flat_map(|s| directions.iter().map(move |d| (*s, *d)))
        .collect();
    run_batch(exec, &jobs, |&(start, direction)| {
        let mut sc = WalkScenario::straight(start, n_steps);
        sc.record_samples = false;
        sc.disturbances.push(Disturbance {
            time: push_time,
            delta_v: [delta_v * direction.cos(), delta_v * direction.sin()],
        });
        let survived = match walk_scenario(policy, env, &sc) {
            Ok(t) => t.survived(),
            Err(SimError::FallDetected { trace, .. }) => trace.survived(),
            Err(_) => 0,
        };
        PushOutcome {
            start,
            direction,
            survived,
            recovered: survived >= n_steps,
        }
    })
}
