//! The five subcommands. Each returns `Ok` on success and leaves a summary on
//! stdout; output files are written before any domain failure is reported.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use locomotion::checkpoint::Checkpoint;
use locomotion::learning::{train, TrainingReport};
use locomotion::lipm::{ApexState, PendulumState};
use locomotion::policy::{PolicyNet, ValueNet};
use locomotion::sim::{
    compass, manipulator_tracking, plan_ahead, push_delta_v, push_sweep, walk_scenario, Exec,
    PlanAhead, SimError, StanceFrame, TrackingResult, WalkTrace,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::output::{csv_string, io_err, json_string, num, path_for, write_file, Header};
use crate::scenario::ScenarioFile;
use crate::CliError;

/// Wall-time limits checked in `--bench` mode.
pub const PLAN_BENCH_LIMIT: Duration = Duration::from_millis(1);
pub const TRAIN_BENCH_LIMIT: Duration = Duration::from_secs(300);
pub const PLAN_BENCH_RUNS: usize = 100;

pub const WALK_COLUMNS: [&str; 9] = [
    "t", "x", "xdot", "y", "ydot", "stance_x", "stance_y", "heading", "events",
];
pub const PLAN_COLUMNS: [&str; 13] = [
    "step", "apex_y", "apex_xdot", "apex_ydot", "p_x", "xdot_apex", "ydot_apex", "t_switch",
    "t_apex", "p_y", "foot_x", "foot_y", "touchdown",
];
pub const SWEEP_COLUMNS: [&str; 6] = [
    "start_y", "start_xdot", "start_ydot", "direction", "survived", "recovered",
];

fn domain(e: impl std::fmt::Display) -> CliError {
    CliError::Domain(e.to_string())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, CliError> {
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    Checkpoint::from_bytes(&bytes).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn train_nets(cfg: &RunConfig) -> Result<(ValueNet, PolicyNet, TrainingReport), CliError> {
    train(&cfg.environment(), &cfg.learning, cfg.grid.clone(), cfg.actions.clone()).map_err(domain)
}

/// The policy from `checkpoint`, or one trained from the configuration.
fn policy_for(cfg: &RunConfig, checkpoint: Option<&Path>) -> Result<PolicyNet, CliError> {
    match checkpoint {
        Some(path) => {
            let c = load_checkpoint(path)?;
            if c.tag != cfg.hash() {
                eprintln!(
                    "warning: {} was trained under a different configuration",
                    path.display()
                );
            }
            Ok(c.policy)
        }
        None => {
            eprintln!("no checkpoint given; training from the configuration (seed {})", cfg.seed);
            let (_, policy, report) = train_nets(cfg)?;
            if !report.converged {
                eprintln!("warning: training stopped at {} iterations without converging", report.iterations);
            }
            Ok(policy)
        }
    }
}

pub fn train_cmd(cfg: &RunConfig, checkpoint: Option<PathBuf>, bench: bool) -> Result<(), CliError> {
    let (value, policy, report) = train_nets(cfg)?;
    let hash = cfg.hash();
    let ckpt = Checkpoint::new(hash.clone(), value, policy).map_err(domain)?;
    let ckpt_path = checkpoint.unwrap_or_else(|| cfg.output.dir.join("policy.ckpt"));
    crate::output::ensure_parent(&ckpt_path)?;
    std::fs::write(&ckpt_path, ckpt.to_bytes()).map_err(|e| io_err(&ckpt_path, e))?;
    let report_path = cfg.output.dir.join("training_report.json");
    write_file(&report_path, &json_string(&Header::new(&hash, "train"), &report))?;

    println!("iterations: {}", report.iterations);
    println!("converged: {}", report.converged);
    println!("final probe std: {:.5}", report.final_probe_std);
    println!("wall time: {:.3} s", report.wall_time_s);
    println!("checkpoint: {}", ckpt_path.display());
    println!("report: {}", report_path.display());
    if bench {
        let limit = TRAIN_BENCH_LIMIT.as_secs_f64();
        if !report.converged || report.wall_time_s >= limit {
            return Err(CliError::Domain(format!(
                "bench: training must converge within {limit} s (converged {}, {:.3} s)",
                report.converged, report.wall_time_s
            )));
        }
        println!("bench: PASS");
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct PlanReport {
    pub start: ApexState,
    pub requested: usize,
    pub rollout: PlanAhead,
    /// Seconds; the median over the bench runs in `--bench` mode.
    pub wall_time: f64,
}

/// Plans `n` steps from an apex of the stance foot at the origin, heading
/// along +x with the next foot to the left.
pub fn plan_from_apex(policy: &PolicyNet, cfg: &RunConfig, start: ApexState, n: usize) -> PlanAhead {
    let frame = StanceFrame::new([0.0, 0.0], 0.0, 1.0);
    plan_ahead(
        policy,
        &cfg.environment(),
        &frame,
        PendulumState::new(0.0, start.xdot),
        PendulumState::new(start.y, start.ydot),
        n,
    )
}

/// Median wall time of `runs` plans.
pub fn plan_median_time(policy: &PolicyNet, cfg: &RunConfig, start: ApexState, n: usize, runs: usize) -> Duration {
    let mut times: Vec<Duration> = (0..runs.max(1))
        .map(|_| {
            let t0 = Instant::now();
            std::hint::black_box(plan_from_apex(policy, cfg, start, n));
            t0.elapsed()
        })
        .collect();
    times.sort();
    times[times.len() / 2]
}

pub fn plan_rows(rollout: &PlanAhead) -> Vec<Vec<String>> {
    rollout
        .steps
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut r = vec![i.to_string()];
            r.extend(
                [
                    s.apex.y, s.apex.xdot, s.apex.ydot, s.action.p_x, s.action.xdot_apex,
                    s.action.ydot_apex, s.plan.t_switch, s.plan.t_apex, s.plan.p_y, s.foot[0],
                    s.foot[1], s.touchdown,
                ]
                .map(num),
            );
            r
        })
        .collect()
}

pub fn plan_cmd(
    cfg: &RunConfig,
    checkpoint: Option<&Path>,
    start: ApexState,
    n: usize,
    bench: bool,
) -> Result<(), CliError> {
    let policy = policy_for(cfg, checkpoint)?;
    let t0 = Instant::now();
    let rollout = plan_from_apex(&policy, cfg, start, n);
    let mut wall = t0.elapsed();
    if bench {
        wall = plan_median_time(&policy, cfg, start, n, PLAN_BENCH_RUNS);
    }
    for (i, s) in rollout.steps.iter().enumerate() {
        println!(
            "step {i:>3}  touchdown {:>8.4} s  foot ({:>8.4}, {:>8.4})  t_switch {:.4}  t_apex {:.4}",
            s.touchdown, s.foot[0], s.foot[1], s.plan.t_switch, s.plan.t_apex
        );
    }
    let label = if bench { "median plan time" } else { "plan time" };
    println!("{label}: {:.1} us", wall.as_secs_f64() * 1e6);

    let header = Header::new(&cfg.hash(), "plan");
    let path = path_for(&cfg.output.dir, "plan", cfg.output.format);
    let text = match cfg.output.format {
        Format::Json => json_string(
            &header,
            &PlanReport { start, requested: n, rollout: rollout.clone(), wall_time: wall.as_secs_f64() },
        ),
        Format::Csv => csv_string(&header, &PLAN_COLUMNS, &plan_rows(&rollout)),
    };
    write_file(&path, &text)?;

    if rollout.steps.len() < n {
        return Err(CliError::Domain(format!(
            "terminal after {} of {n} steps from apex {:?}",
            rollout.steps.len(),
            start.to_array()
        )));
    }
    if bench {
        if wall >= PLAN_BENCH_LIMIT {
            return Err(CliError::Domain(format!(
                "bench: median plan time {:.1} us is not under {} us",
                wall.as_secs_f64() * 1e6,
                PLAN_BENCH_LIMIT.as_micros()
            )));
        }
        println!("bench: PASS");
    }
    Ok(())
}

pub fn walk_rows(trace: &WalkTrace) -> Vec<Vec<String>> {
    trace
        .samples
        .iter()
        .map(|s| {
            let mut r: Vec<String> =
                [s.t, s.x, s.xdot, s.y, s.ydot, s.stance[0], s.stance[1], s.heading].map(num).to_vec();
            r.push(s.events.clone());
            r
        })
        .collect()
}

pub fn walk_cmd(cfg: &RunConfig, checkpoint: Option<&Path>, scenario: &Path) -> Result<(), CliError> {
    let sc = ScenarioFile::load(scenario)?.to_scenario(&cfg.replan)?;
    let policy = policy_for(cfg, checkpoint)?;
    let (trace, fall) = match walk_scenario(&policy, &cfg.environment(), &sc) {
        Ok(t) => (t, None),
        Err(SimError::FallDetected { step, time, trace }) => (*trace, Some((step, time))),
        Err(e) => return Err(domain(e)),
    };
    let header = Header::new(&cfg.hash(), "walk");
    let path = path_for(&cfg.output.dir, "walk", cfg.output.format);
    let text = match cfg.output.format {
        Format::Json => json_string(&header, &trace),
        Format::Csv => csv_string(&header, &WALK_COLUMNS, &walk_rows(&trace)),
    };
    write_file(&path, &text)?;

    let replans: usize = trace.steps.iter().map(|s| s.replans).sum();
    let heading = trace.steps.last().map_or(0.0, |s| {
        s.frame.heading() + sc.turns.get(s.index).copied().unwrap_or(0.0)
    });
    println!("steps: {} of {}", trace.survived(), sc.n_steps);
    println!("replans: {replans}");
    println!("slowest replan: {:.1} us", trace.max_replan_time * 1e6);
    println!("final heading: {:.4} deg", heading.to_degrees());
    println!("trace: {}", path.display());
    match fall {
        None => Ok(()),
        Some((step, time)) => {
            let reason = trace.fall.as_ref().map_or("", |f| f.reason.as_str());
            Err(CliError::Domain(format!("fell at step {step}, t = {time:.3} s: {reason}")))
        }
    }
}

pub fn track_cmd(cfg: &RunConfig, modes: &[bool]) -> Result<(), CliError> {
    let results: Vec<TrackingResult> = modes
        .iter()
        .map(|&m| manipulator_tracking(&cfg.controller.manipulator, m).map_err(domain))
        .collect::<Result<_, _>>()?;
    let header = Header::new(&cfg.hash(), "track");
    let path = path_for(&cfg.output.dir, "track", cfg.output.format);
    let text = match cfg.output.format {
        Format::Json => json_string(&header, &results),
        Format::Csv => {
            let mut cols = vec!["t"];
            for r in &results {
                cols.push(if r.use_jdot { "error_with_jdot" } else { "error_without_jdot" });
            }
            let rows: Vec<Vec<String>> = (0..results[0].times.len())
                .map(|i| {
                    std::iter::once(num(results[0].times[i]))
                        .chain(results.iter().map(|r| num(r.errors[i])))
                        .collect()
                })
                .collect();
            csv_string(&header, &cols, &rows)
        }
    };
    write_file(&path, &text)?;
    for r in &results {
        let label = if r.use_jdot { "with Jdot*qdot" } else { "without Jdot*qdot" };
        println!("{label:<18} rms {:.6e} m  max {:.6e} m", r.rms, r.max);
    }
    if let [a, b] = results.as_slice() {
        let (with, without) = if a.use_jdot { (a, b) } else { (b, a) };
        println!("rms ratio (without / with): {:.3}", without.rms / with.rms);
    }
    println!("trace: {}", path.display());
    Ok(())
}

pub fn sweep_cmd(cfg: &RunConfig, checkpoint: Option<&Path>, exec: Exec) -> Result<(), CliError> {
    let policy = policy_for(cfg, checkpoint)?;
    let env = cfg.environment();
    let s = &cfg.sweep;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let starts: Vec<ApexState> = (0..s.starts).map(|_| env.states.sample(&mut rng)).collect();
    let dv = push_delta_v(s.push_force, s.push_duration, s.reference_mass);
    let t0 = Instant::now();
    let outcomes = push_sweep(&policy, &env, &starts, &compass(s.directions), dv, 0.0, s.steps, exec);
    let wall = t0.elapsed();

    let header = Header::new(&cfg.hash(), "sweep");
    let path = path_for(&cfg.output.dir, "sweep", cfg.output.format);
    let text = match cfg.output.format {
        Format::Json => json_string(&header, &outcomes),
        Format::Csv => {
            let rows: Vec<Vec<String>> = outcomes
                .iter()
                .map(|o| {
                    vec![
                        num(o.start.y),
                        num(o.start.xdot),
                        num(o.start.ydot),
                        num(o.direction),
                        o.survived.to_string(),
                        o.recovered.to_string(),
                    ]
                })
                .collect();
            csv_string(&header, &SWEEP_COLUMNS, &rows)
        }
    };
    write_file(&path, &text)?;
    let recovered = outcomes.iter().filter(|o| o.recovered).count();
    println!("push: {dv:.4} m/s in {} directions at the start apex", s.directions);
    println!(
        "recovered: {recovered} of {} ({:.1}%)",
        outcomes.len(),
        100.0 * recovered as f64 / outcomes.len().max(1) as f64
    );
    println!("wall time: {:.3} s", wall.as_secs_f64());
    println!("trace: {}", path.display());
    Ok(())
}
