//! Equilibrium certificates, reference equilibria and run comparisons.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::conjecture::{ConjectureModel, ConjectureSet, Target};
use crate::dynamics::{conjectured_gradient, conjectured_objective, RunTrace};
use crate::error::{Error, Result};
use crate::game::{
    check_leaders, follower_response_unchecked, leader_response_unchecked, Game, LipschitzConstants, Olsder, Player,
    Sense,
};
use crate::training::format_f64;

/// Step of the central second difference of the conjectured objective.
pub const SECOND_DIFFERENCE_STEP: f64 = 1e-4;
/// Step of the central difference of best responses.
pub const RESPONSE_DIFFERENCE_STEP: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Projected first-order residual.
    #[serde(default = "default_stationarity")]
    pub stationarity: f64,
    /// `|grad gamma - grad BR|`.
    #[serde(default = "default_consistency")]
    pub consistency: f64,
}

fn default_stationarity() -> f64 {
    1e-3
}

fn default_consistency() -> f64 {
    1e-3
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            stationarity: default_stationarity(),
            consistency: default_consistency(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LeaderResidual {
    /// Descent-form conjectured gradient.
    pub gradient: f64,
    /// Gradient with the components pushing into an active bound removed.
    pub projected: f64,
    /// Second difference of the descent-form conjectured objective.
    pub second_derivative: f64,
    /// Positive curvature, or the leader sits on a bound it pushes against.
    pub second_order_ok: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConsistencyGap {
    pub owner: usize,
    pub target: Target,
    pub conjecture_slope: f64,
    pub response_slope: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquilibriumReport {
    pub leaders: Vec<f64>,
    pub follower: Option<f64>,
    pub residuals: Vec<LeaderResidual>,
    /// Projected `|dg/dy|` at the profile.
    pub follower_residual: Option<f64>,
    pub gaps: Vec<ConsistencyGap>,
    pub cse_candidate: bool,
    pub ccse_candidate: bool,
    /// (reference name, Euclidean distance of the player actions)
    pub distances: Vec<(String, f64)>,
}

/// First- and second-order residuals of the conjectured objectives and the
/// follower's residual. Profiles on a bound use projected stationarity.
pub fn cse_residual(
    game: &dyn Game,
    conjectures: &ConjectureSet,
    leaders: &[f64],
    follower: Option<f64>,
) -> Result<(Vec<LeaderResidual>, Option<f64>)> {
    check_leaders(game, leaders)?;
    let mut out = Vec::with_capacity(leaders.len());
    for (i, &x) in leaders.iter().enumerate() {
        let g = conjectured_gradient(game, conjectures, i, x)?.total;
        let b = game.leader_box(i);
        let h = SECOND_DIFFERENCE_STEP;
        let f = |v: f64| conjectured_objective(game, conjectures, i, v);
        let d2 = (f(x + h)? - 2.0 * f(x)? + f(x - h)?) / (h * h);
        let projected = b.stationarity(x, g);
        let pinned = projected == 0.0 && g != 0.0;
        out.push(LeaderResidual {
            gradient: g,
            projected,
            second_derivative: d2,
            second_order_ok: pinned || d2 > 0.0,
        });
    }
    let follower_residual = match (game.follower_box(), follower) {
        (Some(b), Some(y)) => {
            let d = game.sense(Player::Follower).descent_sign() * game.follower_derivative(leaders, y);
            Some(b.stationarity(y, d))
        }
        _ => None,
    };
    Ok((out, follower_residual))
}

/// `|d gamma / dx_i - d BR / dx_i|` for every conjecture, at the profile.
pub fn consistency_gap(
    game: &dyn Game,
    conjectures: &ConjectureSet,
    leaders: &[f64],
    follower: Option<f64>,
) -> Result<Vec<ConsistencyGap>> {
    check_leaders(game, leaders)?;
    let mut out = Vec::new();
    for (owner, c) in conjectures.iter() {
        let x = leaders[owner];
        let conjecture_slope = c.model.input_derivative(x);
        let response_slope = match c.target {
            Target::Leader(j) => match game.leader_response_slope(j, owner, leaders, follower) {
                Some(s) => s,
                None => {
                    let h = RESPONSE_DIFFERENCE_STEP;
                    let mut up = leaders.to_vec();
                    up[owner] = x + h;
                    let mut down = leaders.to_vec();
                    down[owner] = x - h;
                    (leader_response_unchecked(game, j, &up, follower)?
                        - leader_response_unchecked(game, j, &down, follower)?)
                        / (2.0 * h)
                }
            },
            Target::Follower => match game.follower_response_slope(leaders, owner) {
                Some(s) => s,
                None => {
                    let h = RESPONSE_DIFFERENCE_STEP;
                    let mut up = leaders.to_vec();
                    up[owner] = x + h;
                    let mut down = leaders.to_vec();
                    down[owner] = x - h;
                    (follower_response_unchecked(game, &up)? - follower_response_unchecked(game, &down)?) / (2.0 * h)
                }
            },
        };
        out.push(ConsistencyGap {
            owner,
            target: c.target,
            conjecture_slope,
            response_slope,
            gap: (conjecture_slope - response_slope).abs(),
        });
    }
    Ok(out)
}

/// Full certificate of a profile against the conjectures and references.
pub fn equilibrium_report(
    game: &dyn Game,
    conjectures: &ConjectureSet,
    leaders: &[f64],
    follower: Option<f64>,
    references: Option<&ReferenceEquilibria>,
    tol: &Tolerances,
) -> Result<EquilibriumReport> {
    let (residuals, follower_residual) = cse_residual(game, conjectures, leaders, follower)?;
    let gaps = consistency_gap(game, conjectures, leaders, follower)?;
    let cse_candidate = residuals
        .iter()
        .all(|r| r.projected < tol.stationarity && r.second_order_ok)
        && follower_residual.map_or(true, |r| r < tol.stationarity);
    let ccse_candidate = cse_candidate && gaps.iter().all(|g| g.gap < tol.consistency);
    let actions: Vec<f64> = leaders.iter().copied().chain(follower).collect();
    let distances = references
        .map(|refs| {
            refs.references
                .iter()
                .filter(|r| r.actions.len() == actions.len())
                .map(|r| {
                    let d = r.actions.iter().zip(&actions).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                    (r.name.clone(), d)
                })
                .collect()
        })
        .unwrap_or_default();
    Ok(EquilibriumReport {
        leaders: leaders.to_vec(),
        follower,
        residuals,
        follower_residual,
        gaps,
        cse_candidate,
        ccse_candidate,
        distances,
    })
}

/// Constant conjectures equal to the given leader/follower actions; used to
/// certify profiles reached without conjectures.
pub fn constant_conjectures(game: &dyn Game, leaders: &[f64], follower: Option<f64>) -> Result<ConjectureSet> {
    ConjectureSet::from_fn(game.leader_count(), game.has_follower(), |_, t| {
        let b = match t {
            Target::Leader(j) => leaders[j],
            Target::Follower => follower.unwrap_or_default(),
        };
        Ok((ConjectureModel::Affine { a: 0.0, b }, true))
    })
}

impl EquilibriumReport {
    /// `(item, value)` pairs for the long-format report CSV.
    pub fn items(&self) -> Vec<(String, f64)> {
        let mut v = Vec::new();
        for (i, x) in self.leaders.iter().enumerate() {
            v.push((format!("x_{}", i + 1), *x));
        }
        if let Some(y) = self.follower {
            v.push(("y".into(), y));
        }
        for (i, r) in self.residuals.iter().enumerate() {
            let k = i + 1;
            v.push((format!("gradient_{k}"), r.gradient));
            v.push((format!("projected_gradient_{k}"), r.projected));
            v.push((format!("second_derivative_{k}"), r.second_derivative));
            v.push((format!("second_order_ok_{k}"), flag(r.second_order_ok)));
        }
        if let Some(r) = self.follower_residual {
            v.push(("follower_residual".into(), r));
        }
        for g in &self.gaps {
            v.push((format!("consistency_gap_{}_{}", g.owner + 1, g.target), g.gap));
        }
        v.push(("cse_candidate".into(), flag(self.cse_candidate)));
        v.push(("ccse_candidate".into(), flag(self.ccse_candidate)));
        for (name, d) in &self.distances {
            v.push((format!("distance_{name}"), *d));
        }
        v
    }

    pub fn summary(&self, label: &str) -> String {
        let mut s = format!("[{label}] x = {:?}", self.leaders);
        if let Some(y) = self.follower {
            s += &format!(", y = {y}");
        }
        s += "\n";
        for (i, r) in self.residuals.iter().enumerate() {
            s += &format!(
                "  leader {}: conjectured gradient {:.3e} (projected {:.3e}), second difference {:.3e} ({})\n",
                i + 1,
                r.gradient,
                r.projected,
                r.second_derivative,
                if r.second_order_ok { "ok" } else { "not a local minimum of the descent objective" }
            );
        }
        if let Some(r) = self.follower_residual {
            s += &format!("  follower residual {r:.3e}\n");
        }
        for g in &self.gaps {
            s += &format!(
                "  gamma_{}^{}: slope {:.6} vs best-response slope {:.6} (gap {:.3e})\n",
                g.owner + 1,
                g.target,
                g.conjecture_slope,
                g.response_slope,
                g.gap
            );
        }
        s += &format!("  CSE candidate: {}, CCSE candidate: {}\n", self.cse_candidate, self.ccse_candidate);
        for (name, d) in &self.distances {
            s += &format!("  distance to {name}: {d:.6}\n");
        }
        s
    }
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

// --- Lipschitz bound ------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct BoundCheck {
    /// `|f_i(x*, y*(x*)) - f_i(x', y*(x'))|` per leader.
    pub lhs: Vec<f64>,
    /// `M1 sqrt(1 + M2^2) |x* - x'|`
    pub rhs: f64,
    pub holds: bool,
}

/// Compares the objective change between two leader profiles, with the
/// follower best-responding at both, against the Lipschitz bound.
pub fn bound_check(game: &dyn Game, se: &[f64], cse: &[f64], constants: LipschitzConstants) -> Result<BoundCheck> {
    check_leaders(game, se)?;
    check_leaders(game, cse)?;
    if !(constants.m1 > 0.0 && constants.m2 >= 0.0) {
        return Err(Error::Input(format!(
            "Lipschitz constants must satisfy M1 > 0, M2 >= 0, got ({}, {})",
            constants.m1, constants.m2
        )));
    }
    let (ya, yb) = if game.has_follower() {
        (
            Some(follower_response_unchecked(game, se)?),
            Some(follower_response_unchecked(game, cse)?),
        )
    } else {
        (None, None)
    };
    let lhs: Vec<f64> = (0..game.leader_count())
        .map(|i| {
            (game.objective(Player::Leader(i), se, ya) - game.objective(Player::Leader(i), cse, yb)).abs()
        })
        .collect();
    let dist = se.iter().zip(cse).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let rhs = constants.m1 * (1.0 + constants.m2 * constants.m2).sqrt() * dist;
    let holds = lhs.iter().all(|&l| l <= rhs);
    Ok(BoundCheck { lhs, rhs, holds })
}

/// Safety factor applied to sampled Lipschitz estimates.
pub const LIPSCHITZ_SAFETY: f64 = 1.1;

/// Sampled estimates of `M1` (largest norm of any leader's full gradient in
/// `(x, y)`) and `M2` (largest norm of the follower response gradient),
/// over box corners plus `samples` uniform profiles, times a safety factor.
/// Constants attached to the game take precedence.
pub fn estimate_lipschitz(game: &dyn Game, samples: usize, seed: u64) -> Result<LipschitzConstants> {
    if let Some(c) = game.lipschitz() {
        return Ok(c);
    }
    let n = game.leader_count();
    let fb = game.follower_box();
    let dims = n + usize::from(fb.is_some());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<Vec<f64>> = Vec::new();
    if dims <= 12 {
        for mask in 0..(1usize << dims) {
            points.push(
                (0..dims)
                    .map(|k| {
                        let b = if k < n { game.leader_box(k) } else { fb.expect("follower dimension") };
                        if mask >> k & 1 == 1 {
                            b.upper()
                        } else {
                            b.lower()
                        }
                    })
                    .collect(),
            );
        }
    }
    for _ in 0..samples {
        points.push(
            (0..dims)
                .map(|k| {
                    let b = if k < n { game.leader_box(k) } else { fb.expect("follower dimension") };
                    rng.gen_range(b.lower()..=b.upper())
                })
                .collect(),
        );
    }
    let mut m1: f64 = 0.0;
    let mut m2: f64 = 0.0;
    for p in &points {
        let leaders = &p[..n];
        let y = p.get(n).copied();
        for i in 0..n {
            let d = game.leader_partials(i, leaders, y);
            let mut sq = d.own * d.own;
            for (j, v) in d.others.iter().enumerate() {
                if j != i {
                    sq += v * v;
                }
            }
            if y.is_some() {
                sq += d.follower * d.follower;
            }
            m1 = m1.max(sq.sqrt());
        }
        if fb.is_some() {
            let mut sq = 0.0;
            for i in 0..n {
                let s = match game.follower_response_slope(leaders, i) {
                    Some(s) => s,
                    None => {
                        let h = RESPONSE_DIFFERENCE_STEP;
                        let b = game.leader_box(i);
                        let (lo, hi) = (b.project(leaders[i] - h), b.project(leaders[i] + h));
                        let mut up = leaders.to_vec();
                        up[i] = hi;
                        let mut down = leaders.to_vec();
                        down[i] = lo;
                        (follower_response_unchecked(game, &up)? - follower_response_unchecked(game, &down)?) / (hi - lo)
                    }
                };
                sq += s * s;
            }
            m2 = m2.max(sq.sqrt());
        }
    }
    Ok(LipschitzConstants {
        m1: LIPSCHITZ_SAFETY * m1,
        m2: LIPSCHITZ_SAFETY * m2,
    })
}

// --- reference equilibria ---------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    ClosedForm,
    Table,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::ClosedForm => "closed_form",
            Source::Table => "table",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reference {
    pub name: String,
    pub source: Source,
    /// Player actions: leaders, then the follower if any.
    pub actions: Vec<f64>,
    /// Compared objectives, one per payoff-carrying player.
    pub objectives: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceEquilibria {
    pub game: String,
    pub references: Vec<Reference>,
    /// Sense of each compared objective.
    pub senses: Vec<Sense>,
    /// Reference every run should beat ("NE" for Olsder, "saddle" for the dilemma).
    pub floor: String,
    /// Reference that bounds runs from above ("SE").
    pub ceiling: String,
    /// Extra scalar quantities (e.g. the dilemma separation).
    pub scalars: Vec<(String, f64)>,
}

impl ReferenceEquilibria {
    pub fn get(&self, name: &str) -> Option<&Reference> {
        self.references.iter().find(|r| r.name == name)
    }

    /// Long format: `name, source, quantity, value`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["name", "source", "quantity", "value"])?;
        for r in &self.references {
            for (k, a) in r.actions.iter().enumerate() {
                w.write_record([r.name.as_str(), r.source.as_str(), &format!("x_{}", k + 1), &format_f64(*a)])?;
            }
            for (k, f) in r.objectives.iter().enumerate() {
                w.write_record([r.name.as_str(), r.source.as_str(), &format!("f_{}", k + 1), &format_f64(*f)])?;
            }
        }
        for (q, v) in &self.scalars {
            w.write_record(["scalar", "closed_form", q.as_str(), &format_f64(*v)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Table values for the consistent conjectural equilibrium.
pub const OLSDER_CCE_TABLE: ([f64; 2], [f64; 2]) = ([164.4, 81.0], [32320.8, 19220.0]);
/// Table values for the Stackelberg equilibrium (player 1 leads).
pub const OLSDER_SE_TABLE: ([f64; 2], [f64; 2]) = ([138.04, 65.11], [21411.6, 11415.8]);

fn solve2(a: [[f64; 2]; 2], b: [f64; 2]) -> [f64; 2] {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    [
        (b[0] * a[1][1] - a[0][1] * b[1]) / det,
        (a[0][0] * b[1] - b[0] * a[1][0]) / det,
    ]
}

fn olsder_entry(name: &str, source: Source, x: [f64; 2], f: Option<[f64; 2]>) -> Reference {
    let f = f.unwrap_or([Olsder::f1(x[0], x[1]), Olsder::f2(x[0], x[1])]);
    Reference {
        name: name.into(),
        source,
        actions: x.to_vec(),
        objectives: f.to_vec(),
    }
}

/// NE, SE and SWO of Olsder's game from their stationarity systems, plus
/// the table SE and CCE rows.
pub fn olsder_reference() -> ReferenceEquilibria {
    let (a1, b1) = Olsder::response_1_line();
    let (a2, b2) = Olsder::response_2_line();
    // x1 = a1 x2 + b1, x2 = a2 x1 + b2
    let ne = solve2([[1.0, -a1], [-a2, 1.0]], [b1, b2]);
    // d/dx1 f1(x1, a2 x1 + b2) is affine in x1
    let total = |x1: f64| {
        let (d1, d2) = Olsder::grad_f1(x1, a2 * x1 + b2);
        d1 + d2 * a2
    };
    let (t0, t1) = (total(0.0), total(1.0) - total(0.0));
    let se1 = -t0 / t1;
    let se = [se1, a2 * se1 + b2];
    let w = Olsder::welfare_stationarity();
    let swo = solve2([[w[0][0], w[0][1]], [w[1][0], w[1][1]]], [-w[0][2], -w[1][2]]);
    ReferenceEquilibria {
        game: "olsder".into(),
        references: vec![
            olsder_entry("NE", Source::ClosedForm, ne, None),
            olsder_entry("SE", Source::ClosedForm, se, None),
            olsder_entry("SE_table", Source::Table, OLSDER_SE_TABLE.0, Some(OLSDER_SE_TABLE.1)),
            olsder_entry("CCE", Source::Table, OLSDER_CCE_TABLE.0, Some(OLSDER_CCE_TABLE.1)),
            olsder_entry("SWO", Source::ClosedForm, swo, None),
        ],
        senses: vec![Sense::Maximize, Sense::Maximize],
        floor: "NE".into(),
        ceiling: "SE".into(),
        scalars: Vec::new(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DilemmaReference {
    pub k: f64,
    /// `|x1 - x2|` at the best separated equilibria, `2 sqrt(ln|K|)`.
    pub separation: f64,
    /// Leader payoff there, `|K| - 1 - ln|K|`.
    pub optimal_value: f64,
    /// Leader payoff anywhere on the line `x1 = x2`.
    pub saddle_value: f64,
}

/// The equilibrium continuum of the leader's dilemma.
pub fn dilemma_reference(k: f64) -> Result<DilemmaReference> {
    if !(k.is_finite() && k < -1.0) {
        return Err(Error::Domain {
            coordinate: "K".into(),
            value: k,
            lower: f64::NEG_INFINITY,
            upper: -1.0,
        });
    }
    let m = k.abs();
    Ok(DilemmaReference {
        k,
        separation: 2.0 * m.ln().sqrt(),
        optimal_value: -m.ln() + m * (1.0 - 1.0 / m),
        saddle_value: 0.0,
    })
}

impl DilemmaReference {
    /// Saddle at the origin and the symmetric optimal separation around 0.
    pub fn equilibria(&self) -> ReferenceEquilibria {
        let h = 0.5 * self.separation;
        ReferenceEquilibria {
            game: "leaders_dilemma".into(),
            references: vec![
                Reference {
                    name: "saddle".into(),
                    source: Source::ClosedForm,
                    actions: vec![0.0, 0.0, 0.0],
                    objectives: vec![self.saddle_value; 2],
                },
                Reference {
                    name: "SE".into(),
                    source: Source::ClosedForm,
                    actions: vec![h, -h, 0.0],
                    objectives: vec![self.optimal_value; 2],
                },
            ],
            senses: vec![Sense::Maximize, Sense::Maximize],
            floor: "saddle".into(),
            ceiling: "SE".into(),
            scalars: vec![("separation".into(), self.separation), ("k".into(), self.k)],
        }
    }
}

// --- comparison -----------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub label: String,
    pub actions: Vec<f64>,
    pub objectives: Vec<f64>,
    /// Per reference: final objective minus reference objective.
    pub deltas: Vec<(String, Vec<f64>)>,
    pub beats_floor: Vec<bool>,
    pub below_ceiling: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub floor: String,
    pub ceiling: String,
    pub rows: Vec<ComparisonRow>,
}

/// Relative slack used by the beats/below columns.
pub const COMPARISON_SLACK: f64 = 1e-6;

/// Final objectives of every labelled trace against the references.
///
/// The compared objectives are the first `K` of `[f_1..f_N, g]`, with `K`
/// the number of objectives in the references.
pub fn compare_runs(traces: &[(String, RunTrace)], refs: &ReferenceEquilibria) -> Result<Comparison> {
    let k = refs.senses.len();
    let floor = refs
        .get(&refs.floor)
        .ok_or_else(|| Error::Input(format!("missing reference {}", refs.floor)))?;
    let ceiling = refs
        .get(&refs.ceiling)
        .ok_or_else(|| Error::Input(format!("missing reference {}", refs.ceiling)))?;
    let mut rows = Vec::with_capacity(traces.len());
    let mut width = None;
    for (label, trace) in traces {
        let last = trace
            .last()
            .ok_or_else(|| Error::Input(format!("trace `{label}` is empty")))?;
        let actions: Vec<f64> = last.leaders.iter().copied().chain(last.follower).collect();
        if *width.get_or_insert(actions.len()) != actions.len() {
            return Err(Error::Input(format!(
                "trace `{label}` has {} player actions, expected {}",
                actions.len(),
                width.unwrap_or_default()
            )));
        }
        let all: Vec<f64> = last.objectives.iter().copied().chain(last.follower_objective).collect();
        if all.len() < k {
            return Err(Error::Input(format!("trace `{label}` has fewer than {k} objectives")));
        }
        let objectives = all[..k].to_vec();
        let deltas = refs
            .references
            .iter()
            .map(|r| (r.name.clone(), objectives.iter().zip(&r.objectives).map(|(a, b)| a - b).collect()))
            .collect();
        let slack = |v: f64| COMPARISON_SLACK * v.abs().max(1.0);
        let beats_floor = (0..k)
            .map(|m| {
                let s = refs.senses[m].descent_sign();
                // strictly better than the floor
                s * objectives[m] < s * floor.objectives[m] - slack(floor.objectives[m])
            })
            .collect();
        let below_ceiling = (0..k)
            .map(|m| {
                let s = refs.senses[m].descent_sign();
                s * objectives[m] >= s * ceiling.objectives[m] - slack(ceiling.objectives[m])
            })
            .collect();
        rows.push(ComparisonRow {
            label: label.clone(),
            actions,
            objectives,
            deltas,
            beats_floor,
            below_ceiling,
        });
    }
    Ok(Comparison {
        floor: refs.floor.clone(),
        ceiling: refs.ceiling.clone(),
        rows,
    })
}

impl Comparison {
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let Some(first) = self.rows.first() else {
            w.write_record(["label"])?;
            w.flush()?;
            return Ok(());
        };
        let p = first.actions.len();
        let k = first.objectives.len();
        let mut head = vec!["label".to_string()];
        head.extend((1..=p).map(|i| format!("action_{i}")));
        head.extend((1..=k).map(|i| format!("f_{i}")));
        for (name, _) in &first.deltas {
            head.extend((1..=k).map(|i| format!("delta_{name}_{i}")));
        }
        head.extend((1..=k).map(|i| format!("beats_{}_{i}", self.floor)));
        head.extend((1..=k).map(|i| format!("below_{}_{i}", self.ceiling)));
        w.write_record(&head)?;
        for r in &self.rows {
            let mut rec = vec![r.label.clone()];
            rec.extend(r.actions.iter().map(|v| format_f64(*v)));
            rec.extend(r.objectives.iter().map(|v| format_f64(*v)));
            for (_, d) in &r.deltas {
                rec.extend(d.iter().map(|v| format_f64(*v)));
            }
            rec.extend(r.beats_floor.iter().map(|b| b.to_string()));
            rec.extend(r.below_ceiling.iter().map(|b| b.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}
