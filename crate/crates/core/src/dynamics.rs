//! Conjectured-gradient play and the naive gradient baseline.

use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conjecture::ConjectureSet;
use crate::error::{Error, Result};
use crate::game::{check_leaders, follower_response_unchecked, Game, Player, StrategyProfile};
use crate::training::format_f64;

/// Iterates whose magnitude exceeds this abort the run.
pub const DIVERGENCE_LIMIT: f64 = 1e8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepSchedule {
    Constant { eta: f64 },
    /// `eta0 / (1 + t)^alpha` with `0.5 < alpha <= 1`.
    RobbinsMonro { eta0: f64, alpha: f64 },
}

impl StepSchedule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            StepSchedule::Constant { eta } => {
                if !(eta.is_finite() && eta > 0.0) {
                    return Err(Error::config("play.schedule.eta", format!("must be positive, got {eta}")));
                }
            }
            StepSchedule::RobbinsMonro { eta0, alpha } => {
                if !(eta0.is_finite() && eta0 > 0.0) {
                    return Err(Error::config("play.schedule.eta0", format!("must be positive, got {eta0}")));
                }
                if !(alpha > 0.5 && alpha <= 1.0) {
                    return Err(Error::config(
                        "play.schedule.alpha",
                        format!("need 0.5 < alpha <= 1 for a summable-square, non-summable schedule, got {alpha}"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Step used for the update from iteration `t` to `t + 1`.
    pub fn step(&self, t: usize) -> f64 {
        match *self {
            StepSchedule::Constant { eta } => eta,
            StepSchedule::RobbinsMonro { eta0, alpha } => eta0 / (1.0 + t as f64).powf(alpha),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlayConfig {
    pub iterations: usize,
    pub schedule: StepSchedule,
    /// Std of the Gaussian term added to each leader's gradient.
    #[serde(default)]
    pub gradient_noise_std: f64,
    #[serde(default)]
    pub seed: u64,
    /// Stop once every leader's projected gradient is below this.
    #[serde(default = "default_tolerance")]
    pub stop_tolerance: f64,
    /// Evaluate leaders' gradients on the rayon pool.
    #[serde(default)]
    pub parallel: bool,
}

fn default_tolerance() -> f64 {
    1e-8
}

impl PlayConfig {
    pub fn new(iterations: usize, schedule: StepSchedule) -> Self {
        PlayConfig {
            iterations,
            schedule,
            gradient_noise_std: 0.0,
            seed: 0,
            stop_tolerance: default_tolerance(),
            parallel: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::config("play.iterations", "must be positive"));
        }
        if !(self.gradient_noise_std.is_finite() && self.gradient_noise_std >= 0.0) {
            return Err(Error::config("play.gradient_noise_std", "must be finite and >= 0"));
        }
        if !(self.stop_tolerance.is_finite() && self.stop_tolerance >= 0.0) {
            return Err(Error::config("play.stop_tolerance", "must be finite and >= 0"));
        }
        self.schedule.validate()
    }
}

/// Conjectured gradient of one leader, already in descent form.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GradientParts {
    /// `D_i`
    pub direct: f64,
    /// `D_{-i}`
    pub peers: f64,
    /// `D_y`
    pub follower: f64,
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    pub leaders: Vec<f64>,
    pub follower: Option<f64>,
    /// Descent-form gradient totals, one per leader.
    pub gradients: Vec<f64>,
    /// Component breakdown; empty for traces loaded from CSV.
    pub parts: Vec<GradientParts>,
    pub objectives: Vec<f64>,
    pub follower_objective: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunTrace {
    pub leader_count: usize,
    pub has_follower: bool,
    pub rows: Vec<TraceRow>,
    /// True when the stop tolerance ended the run before `iterations`.
    pub converged: bool,
}

impl RunTrace {
    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn final_profile(&self) -> Option<StrategyProfile> {
        self.last().map(|r| StrategyProfile::new(r.leaders.clone(), r.follower))
    }
}

/// Leader `i`'s conjectured profile at own action `x_i`.
pub fn conjectured_profile(
    game: &dyn Game,
    conjectures: &ConjectureSet,
    leader: usize,
    x_i: f64,
) -> Result<(Vec<f64>, Option<f64>)> {
    let n = game.leader_count();
    let mut leaders = vec![0.0; n];
    for (j, slot) in leaders.iter_mut().enumerate() {
        *slot = if j == leader {
            x_i
        } else {
            conjectures
                .about(leader, j)
                .ok_or_else(|| missing(leader, &(j + 1).to_string()))?
                .model
                .predict(x_i)
        };
    }
    let follower = if game.has_follower() {
        Some(
            conjectures
                .follower(leader)
                .ok_or_else(|| missing(leader, "y"))?
                .model
                .predict(x_i),
        )
    } else {
        None
    };
    Ok((leaders, follower))
}

fn missing(leader: usize, target: &str) -> Error {
    Error::config(
        format!("conjectures.leaders[{leader}]"),
        format!("leader {} has no conjecture about {target}", leader + 1),
    )
}

/// Leader `i`'s objective along its conjectures, `f_i(x_i, gamma(x_i))`,
/// multiplied by the descent sign.
pub fn conjectured_objective(game: &dyn Game, conjectures: &ConjectureSet, leader: usize, x_i: f64) -> Result<f64> {
    let (leaders, follower) = conjectured_profile(game, conjectures, leader, x_i)?;
    let sign = game.sense(Player::Leader(leader)).descent_sign();
    Ok(sign * game.objective(Player::Leader(leader), &leaders, follower))
}

/// Total derivative of `f_i(x_i, gamma_i^{-i}(x_i), gamma_i^y(x_i))` in
/// `x_i`, split into its direct, peer and follower terms (descent form).
pub fn conjectured_gradient(
    game: &dyn Game,
    conjectures: &ConjectureSet,
    leader: usize,
    x_i: f64,
) -> Result<GradientParts> {
    let (leaders, follower) = conjectured_profile(game, conjectures, leader, x_i)?;
    let p = game.leader_partials(leader, &leaders, follower);
    let mut peers = 0.0;
    for (j, d) in p.others.iter().enumerate() {
        if j != leader {
            let c = conjectures.about(leader, j).ok_or_else(|| missing(leader, &(j + 1).to_string()))?;
            peers += d * c.model.input_derivative(x_i);
        }
    }
    let follower_term = match follower {
        Some(_) => {
            let c = conjectures.follower(leader).ok_or_else(|| missing(leader, "y"))?;
            p.follower * c.model.input_derivative(x_i)
        }
        None => 0.0,
    };
    let sign = game.sense(Player::Leader(leader)).descent_sign();
    let (direct, peers, follower_term) = (sign * p.own, sign * peers, sign * follower_term);
    Ok(GradientParts {
        direct,
        peers,
        follower: follower_term,
        total: direct + peers + follower_term,
    })
}

/// COSTAL play: every leader steps along its conjectured gradient from the
/// same snapshot, actions are projected onto the boxes, then the follower
/// best-responds.
pub fn costal_run(
    game: &dyn Game,
    conjectures: &ConjectureSet,
    cfg: &PlayConfig,
    x0: &StrategyProfile,
) -> Result<RunTrace> {
    conjectures.validate(game.leader_count(), game.has_follower())?;
    run(game, cfg, x0, |i, leaders, _| conjectured_gradient(game, conjectures, i, leaders[i]))
}

/// Baseline where each leader follows its own partial at the true profile.
pub fn gd_baseline_run(game: &dyn Game, cfg: &PlayConfig, x0: &StrategyProfile) -> Result<RunTrace> {
    run(game, cfg, x0, |i, leaders, follower| {
        let sign = game.sense(Player::Leader(i)).descent_sign();
        let d = sign * game.leader_partials(i, leaders, follower).own;
        Ok(GradientParts {
            direct: d,
            peers: 0.0,
            follower: 0.0,
            total: d,
        })
    })
}

fn run<G>(game: &dyn Game, cfg: &PlayConfig, x0: &StrategyProfile, gradient: G) -> Result<RunTrace>
where
    G: Fn(usize, &[f64], Option<f64>) -> Result<GradientParts> + Sync,
{
    cfg.validate()?;
    let n = game.leader_count();
    if x0.leaders.len() != n {
        return Err(Error::Input(format!("expected {n} initial leader actions, got {}", x0.leaders.len())));
    }
    check_leaders(game, &x0.leaders)?;

    let noise = Normal::new(0.0, cfg.gradient_noise_std).map_err(|e| Error::config("play.gradient_noise_std", e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut leaders = x0.leaders.clone();
    let mut rows = Vec::with_capacity(cfg.iterations + 1);
    let mut converged = false;

    for t in 0..=cfg.iterations {
        let follower = if game.has_follower() {
            Some(follower_response_unchecked(game, &leaders)?)
        } else {
            None
        };
        let parts: Vec<GradientParts> = if cfg.parallel {
            (0..n).into_par_iter().map(|i| gradient(i, &leaders, follower)).collect::<Result<_>>()?
        } else {
            (0..n).map(|i| gradient(i, &leaders, follower)).collect::<Result<_>>()?
        };
        for (i, p) in parts.iter().enumerate() {
            if !p.total.is_finite() {
                return Err(Error::Divergence {
                    iteration: t,
                    leader: i + 1,
                    value: p.total,
                });
            }
        }
        let objectives = (0..n).map(|i| game.objective(Player::Leader(i), &leaders, follower)).collect();
        let follower_objective = follower.map(|_| game.objective(Player::Follower, &leaders, follower));
        let stationary = parts
            .iter()
            .enumerate()
            .all(|(i, p)| game.leader_box(i).stationarity(leaders[i], p.total) < cfg.stop_tolerance);
        rows.push(TraceRow {
            t,
            leaders: leaders.clone(),
            follower,
            gradients: parts.iter().map(|p| p.total).collect(),
            parts: parts.clone(),
            objectives,
            follower_objective,
        });
        if stationary {
            converged = t < cfg.iterations;
            break;
        }
        if t == cfg.iterations {
            break;
        }
        let eta = cfg.schedule.step(t);
        for (i, x) in leaders.iter_mut().enumerate() {
            let zeta = if cfg.gradient_noise_std > 0.0 { noise.sample(&mut rng) } else { 0.0 };
            let next = *x - eta * (parts[i].total + zeta);
            if !next.is_finite() || next.abs() > DIVERGENCE_LIMIT {
                return Err(Error::Divergence {
                    iteration: t + 1,
                    leader: i + 1,
                    value: next,
                });
            }
            *x = game.leader_box(i).project(next);
        }
    }
    Ok(RunTrace {
        leader_count: n,
        has_follower: game.has_follower(),
        rows,
        converged,
    })
}

// --- CSV ------------------------------------------------------------------

fn header(n: usize, has_follower: bool) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((1..=n).map(|i| format!("x_{i}")));
    if has_follower {
        h.push("y".into());
    }
    h.extend((1..=n).map(|i| format!("grad_{i}")));
    h.extend((1..=n).map(|i| format!("f_{i}")));
    if has_follower {
        h.push("g".into());
    }
    h
}

pub fn write_trace<W: Write>(trace: &RunTrace, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(trace.leader_count, trace.has_follower))?;
    for r in &trace.rows {
        let mut rec = vec![r.t.to_string()];
        rec.extend(r.leaders.iter().map(|v| format_f64(*v)));
        if let Some(y) = r.follower {
            rec.push(format_f64(y));
        }
        rec.extend(r.gradients.iter().map(|v| format_f64(*v)));
        rec.extend(r.objectives.iter().map(|v| format_f64(*v)));
        if let Some(g) = r.follower_objective {
            rec.push(format_f64(g));
        }
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<RunTrace> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let head: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let n = head.iter().filter(|h| h.starts_with("x_")).count();
    let has_follower = head.iter().any(|h| h == "y");
    if n == 0 || head != header(n, has_follower) {
        return Err(Error::parse(
            path.display().to_string(),
            format!("unexpected trace header {}", head.join(",")),
        ));
    }
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let vals: Vec<f64> = rec
            .iter()
            .enumerate()
            .map(|(k, s)| {
                s.parse::<f64>()
                    .map_err(|e| Error::parse(format!("{}:{}:{}", path.display(), line + 2, head[k]), e.to_string()))
            })
            .collect::<Result<_>>()?;
        let mut it = vals.into_iter();
        let t = it.next().unwrap_or_default() as usize;
        let leaders: Vec<f64> = it.by_ref().take(n).collect();
        let follower = if has_follower { it.next() } else { None };
        let gradients: Vec<f64> = it.by_ref().take(n).collect();
        let objectives: Vec<f64> = it.by_ref().take(n).collect();
        let follower_objective = if has_follower { it.next() } else { None };
        rows.push(TraceRow {
            t,
            leaders,
            follower,
            gradients,
            parts: Vec::new(),
            objectives,
            follower_objective,
        });
    }
    let converged = false;
    Ok(RunTrace {
        leader_count: n,
        has_follower,
        rows,
        converged,
    })
}
