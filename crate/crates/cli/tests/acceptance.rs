//! Acceptance criteria, one PASS/FAIL line each.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use costal::analysis::{bound_check, dilemma_reference, estimate_lipschitz, olsder_reference};
use costal::conjecture::{ConjectureModel, ConjectureSet, NeuralNet, Target};
use costal::dynamics::{
    conjectured_gradient, conjectured_objective, costal_run, gd_baseline_run, PlayConfig, StepSchedule,
};
use costal::experiment::{play, train, ExperimentConfig, LabelledConjectures, PlayedRun};
use costal::game::{
    ActionBox, Game, LeadersDilemma, LinearQuadratic, LinearQuadraticParams, Olsder, PlayMode, Player, Sense,
    StrategyProfile,
};
use costal::training::{generate_samples, train_conjectures, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Suite {
    failed: Vec<String>,
}

impl Suite {
    fn check(&mut self, name: &str, pass: bool, detail: String) {
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed.push(name.to_string());
        }
    }
}

fn info(s: String) {
    println!("    {s}");
}

fn secs(d: Duration) -> String {
    format!("{:.3}s", d.as_secs_f64())
}

// --- oracles ------------------------------------------------------------------

fn ne_oracle(s: &mut Suite) {
    let t = Instant::now();
    let refs = olsder_reference();
    let el = t.elapsed();
    let ne = refs.get("NE").unwrap();
    let ok = (ne.actions[0] - 123.98).abs() <= 0.05
        && (ne.actions[1] - 61.6).abs() <= 0.05
        && (ne.objectives[0] - 19979.8).abs() <= 1.0
        && (ne.objectives[1] - 6722.13).abs() <= 1.0
        && el < Duration::from_secs(1);
    s.check(
        "Olsder NE oracle",
        ok,
        format!("x = {:?}, f = {:?} in {}", ne.actions, ne.objectives, secs(el)),
    );
}

fn se_oracle(s: &mut Suite) {
    let t = Instant::now();
    let refs = olsder_reference();
    let el = t.elapsed();
    let se = refs.get("SE").unwrap();
    let table = [138.04, 65.11];
    let table_f = [21411.6, 11415.8];
    let ok = (0..2).all(|k| (se.actions[k] - table[k]).abs() <= 0.5)
        && (0..2).all(|k| (se.objectives[k] / table_f[k] - 1.0).abs() <= 0.02)
        && el < Duration::from_secs(1);
    s.check(
        "Olsder SE oracle",
        ok,
        format!(
            "closed form x = {:?}, f = {:?}; table x = {table:?}, f = {table_f:?}; in {}",
            se.actions,
            se.objectives,
            secs(el)
        ),
    );
}

fn swo_oracle(s: &mut Suite) {
    let t = Instant::now();
    let refs = olsder_reference();
    let el = t.elapsed();
    let swo = refs.get("SWO").unwrap();
    let ok = (swo.actions[0] - 300.04).abs() <= 0.5 && (swo.actions[1] - 150.98).abs() <= 0.5 && el < Duration::from_secs(1);
    s.check("Olsder SWO oracle", ok, format!("x = {:?} in {}", swo.actions, secs(el)));
}

// --- Olsder play ------------------------------------------------------------------

struct OlsderRuns {
    conjectures: Vec<LabelledConjectures>,
    played: Vec<PlayedRun>,
}

fn olsder_beats_ne(s: &mut Suite) -> OlsderRuns {
    let cfg = ExperimentConfig::olsder_default().resolve(None, None).unwrap();
    let refs = olsder_reference();
    let ne = refs.get("NE").unwrap().objectives.clone();
    let se = refs.get("SE").unwrap().objectives.clone();
    let se_table = refs.get("SE_table").unwrap().objectives.clone();
    let mut all_ok = true;
    let mut conjectures = Vec::new();
    let mut played = Vec::new();
    let mut lines = Vec::new();
    for label in ["N_affine", "N_NN_10", "S_affine", "S_NN_10"] {
        let labels = [label.to_string()];
        let t = Instant::now();
        let trained = train(&cfg, Some(&labels)).unwrap();
        let runs = play(&cfg, Some(&trained.runs), Some(&labels)).unwrap();
        let el = t.elapsed();
        let last = runs[0].trace.last().unwrap().clone();
        let f: Vec<f64> = last.objectives.iter().copied().chain(last.follower_objective).collect();
        let beats = (0..2).all(|k| f[k] >= ne[k] - 0.01 * ne[k].abs());
        let stackelberg = label.starts_with("S_");
        let below = !stackelberg || (0..2).all(|k| f[k] <= se[k] + 0.02 * se[k].abs());
        let fast = el < Duration::from_secs(30);
        all_ok &= beats && below && fast;
        lines.push(format!(
            "{label}: f = ({:.2}, {:.2}), beats NE-1%: {beats}, below SE+2%: {}, {}",
            f[0],
            f[1],
            if stackelberg { below.to_string() } else { "n/a".into() },
            secs(el)
        ));
        if stackelberg {
            let below_table = (0..2).all(|k| f[k] <= se_table[k] + 0.02 * se_table[k].abs());
            lines.push(format!("{label}: below table SE+2% (information only): {below_table}"));
        }
        conjectures.extend(trained.runs);
        played.extend(runs);
    }
    s.check(
        "Olsder COSTAL beats NE",
        all_ok,
        format!("NE f = ({:.2}, {:.2}), SE f = ({:.2}, {:.2})", ne[0], ne[1], se[0], se[1]),
    );
    lines.into_iter().for_each(info);
    OlsderRuns { conjectures, played }
}

// --- leader's dilemma ---------------------------------------------------------------

fn dilemma_escape(s: &mut Suite) -> Vec<PlayedRun> {
    let t = Instant::now();
    let cfg = ExperimentConfig::dilemma_default().resolve(None, None).unwrap();
    let trained = train(&cfg, None).unwrap();
    let runs = play(&cfg, Some(&trained.runs), None).unwrap();
    let el = t.elapsed();
    let best = dilemma_reference(-1.5).unwrap().optimal_value;
    let mut ok = el < Duration::from_secs(60);
    let mut lines = Vec::new();
    for r in &runs {
        let last = r.trace.last().unwrap();
        let (x1, x2) = (last.leaders[0], last.leaders[1]);
        let f = &last.objectives;
        let bounded = f.iter().all(|&v| v <= best + 1e-3);
        let this = match r.label.as_str() {
            "GD" => (x1 - x2).abs() < 1e-3 && f.iter().all(|v| v.abs() < 1e-3),
            "quadratic" | "NN_5" | "NN_10" => f.iter().all(|&v| v > 0.0),
            _ => true,
        };
        ok &= this && bounded;
        lines.push(format!(
            "{}: x = ({x1:.6}, {x2:.6}), |x1-x2| = {:.3e}, f = ({:.6}, {:.6}), <= f* + 1e-3: {bounded}",
            r.label,
            (x1 - x2).abs(),
            f[0],
            f[1]
        ));
    }
    s.check(
        "Leader's dilemma saddle escape",
        ok,
        format!("start {:?}, f* = {best:.6}, total {}", cfg.start, secs(el)),
    );
    lines.into_iter().for_each(info);

    // the literal symmetric start sits on the saddle line
    let game = cfg.build_game(PlayMode::Stackelberg).unwrap();
    let x0 = StrategyProfile::new(vec![0.5, 0.5], None);
    let gd = gd_baseline_run(game.as_ref(), &cfg.play, &x0).unwrap();
    let q = ConjectureSet::from_fn(2, true, |_, _| Ok((ConjectureModel::quadratic(), true))).unwrap();
    let qt = costal_run(game.as_ref(), &q, &cfg.play, &x0).unwrap();
    info(format!(
        "information: from (0.5, 0.5) GD ends at {:?} and quadratic at {:?} (f = {:?})",
        gd.last().unwrap().leaders,
        qt.last().unwrap().leaders,
        qt.last().unwrap().objectives
    ));
    runs
}

// --- gradient correctness ---------------------------------------------------------------

const CASES: usize = 1000;

/// Five-point central difference.
fn diff(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    let h = 1e-3 * x.abs().max(1.0);
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn random_lq(rng: &mut ChaCha8Rng) -> LinearQuadratic {
    let n = rng.gen_range(1..=3);
    let v = |rng: &mut ChaCha8Rng| rng.gen_range(-2.0..2.0);
    LinearQuadratic::new(LinearQuadraticParams {
        own: (0..n).map(|_| v(rng)).collect(),
        cross: (0..n).map(|_| (0..n).map(|_| v(rng)).collect()).collect(),
        follower_weight: (0..n).map(|_| v(rng)).collect(),
        sense: if rng.gen_bool(0.5) { Sense::Minimize } else { Sense::Maximize },
        curvature: rng.gen_range(0.5..3.0),
        response_weights: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        response_offset: v(rng),
        leader_bounds: ActionBox::new(-1.0, 1.0).unwrap(),
        follower_bounds: ActionBox::new(-10.0, 10.0).unwrap(),
    })
    .unwrap()
}

fn random_point(game: &dyn Game, rng: &mut ChaCha8Rng) -> (Vec<f64>, Option<f64>) {
    let leaders = (0..game.leader_count())
        .map(|i| {
            let b = game.leader_box(i);
            rng.gen_range(b.lower()..=b.upper())
        })
        .collect();
    let y = game.follower_box().map(|b| rng.gen_range(b.lower()..=b.upper()));
    (leaders, y)
}

/// Worst relative error of every analytic partial of one game.
fn game_partials_error(game: &dyn Game, rng: &mut ChaCha8Rng) -> f64 {
    let (leaders, y) = random_point(game, rng);
    let n = leaders.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let p = game.leader_partials(i, &leaders, y);
        for j in 0..n {
            let fd = diff(
                |v| {
                    let mut l = leaders.clone();
                    l[j] = v;
                    game.objective(Player::Leader(i), &l, y)
                },
                leaders[j],
            );
            let a = if j == i { p.own } else { p.others[j] };
            worst = worst.max(rel(a, fd));
        }
        if let Some(yv) = y {
            let fd = diff(|v| game.objective(Player::Leader(i), &leaders, Some(v)), yv);
            worst = worst.max(rel(p.follower, fd));
        }
    }
    if let Some(yv) = y {
        let fd = diff(|v| game.objective(Player::Follower, &leaders, Some(v)), yv);
        worst = worst.max(rel(game.follower_derivative(&leaders, yv), fd));
    }
    worst
}

fn random_model(kind: usize, rng: &mut ChaCha8Rng) -> ConjectureModel {
    let v = |rng: &mut ChaCha8Rng| rng.gen_range(-2.0..2.0);
    match kind {
        0 => ConjectureModel::Affine { a: v(rng), b: v(rng) },
        1 => ConjectureModel::Polynomial {
            coefficients: (0..rng.gen_range(1..=5)).map(|_| v(rng)).collect(),
        },
        _ => {
            let h = rng.gen_range(1..=10);
            ConjectureModel::Neural(
                NeuralNet::new(
                    (0..h).map(|_| v(rng)).collect(),
                    (0..h).map(|_| v(rng)).collect(),
                    (0..h).map(|_| v(rng)).collect(),
                    v(rng),
                )
                .unwrap(),
            )
        }
    }
}

fn random_conjectures(game: &dyn Game, kind: usize, rng: &mut ChaCha8Rng, scale: f64) -> ConjectureSet {
    ConjectureSet::from_fn(game.leader_count(), game.has_follower(), |_, _| {
        let m = random_model(kind, rng);
        // map a unit-scale model onto the game's action range
        Ok((m.rescaled(0.0, scale, 0.0, scale), false))
    })
    .unwrap()
}

fn gradient_correctness(s: &mut Suite) {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut lines = Vec::new();
    let mut ok = true;

    let games: Vec<(&str, Box<dyn Game>)> = vec![
        ("Olsder simultaneous", Box::new(Olsder::new(PlayMode::Simultaneous, 400.0).unwrap())),
        ("Olsder stackelberg", Box::new(Olsder::new(PlayMode::Stackelberg, 400.0).unwrap())),
        ("leader's dilemma", Box::new(LeadersDilemma::new(-1.5).unwrap())),
    ];
    for (name, g) in &games {
        let worst = (0..CASES).map(|_| game_partials_error(g.as_ref(), &mut rng)).fold(0.0, f64::max);
        ok &= worst <= 1e-6;
        lines.push(format!("{name} partials: {CASES} cases, worst relative error {worst:.2e}"));
    }
    let worst = (0..CASES)
        .map(|_| game_partials_error(&random_lq(&mut rng), &mut rng))
        .fold(0.0, f64::max);
    ok &= worst <= 1e-6;
    lines.push(format!("linear-quadratic partials: {CASES} random games, worst relative error {worst:.2e}"));

    for (kind, name) in ["affine", "polynomial", "neural"].iter().enumerate() {
        let mut worst_in: f64 = 0.0;
        let mut worst_param: f64 = 0.0;
        for _ in 0..CASES {
            let m = random_model(kind, &mut rng);
            let x = rng.gen_range(-3.0..3.0);
            worst_in = worst_in.max(rel(m.input_derivative(x), diff(|v| m.predict(v), x)));
            let target = rng.gen_range(-3.0..3.0);
            let g = m.parameter_gradient(x, target - m.predict(x));
            let theta = m.params();
            for k in 0..theta.len() {
                let fd = diff(
                    |v| {
                        let mut p = theta.clone();
                        p[k] = v;
                        let mut mm = m.clone();
                        mm.set_params(&p).unwrap();
                        0.5 * (target - mm.predict(x)).powi(2)
                    },
                    theta[k],
                );
                worst_param = worst_param.max(rel(g[k], fd));
            }
        }
        ok &= worst_in <= 1e-6 && worst_param <= 1e-5;
        lines.push(format!(
            "{name} conjectures: {CASES} cases, input derivative {worst_in:.2e}, parameter gradient {worst_param:.2e}"
        ));
    }

    for (name, g) in &games {
        let scale = if name.starts_with("Olsder") { 100.0 } else { 1.0 };
        let mut worst: f64 = 0.0;
        for c in 0..CASES {
            let conj = random_conjectures(g.as_ref(), c % 3, &mut rng, scale);
            let (leaders, _) = random_point(g.as_ref(), &mut rng);
            for (i, &x) in leaders.iter().enumerate() {
                let a = conjectured_gradient(g.as_ref(), &conj, i, x).unwrap().total;
                let fd = diff(|v| conjectured_objective(g.as_ref(), &conj, i, v).unwrap(), x);
                worst = worst.max(rel(a, fd));
            }
        }
        ok &= worst <= 1e-6;
        lines.push(format!("{name} conjectured gradients: {CASES} cases, worst relative error {worst:.2e}"));
    }
    s.check("Gradient correctness", ok, "tolerances 1e-6 (input) / 1e-5 (parameter)".into());
    lines.into_iter().for_each(info);
}

// --- training recovery ------------------------------------------------------------------

fn affine_of(set: &ConjectureSet) -> (f64, f64) {
    match set.get(0, Target::Follower).unwrap().model {
        ConjectureModel::Affine { a, b } => (a, b),
        _ => unreachable!(),
    }
}

fn training_recovery(s: &mut Suite) {
    let game = Olsder::new(PlayMode::Stackelberg, 400.0).unwrap();
    let init = ConjectureSet::from_fn(1, true, |_, _| Ok((ConjectureModel::Affine { a: 0.0, b: 0.0 }, false))).unwrap();

    let clean = TrainConfig {
        sigma: Some(0.0),
        ..TrainConfig::default()
    };
    let sets = generate_samples(&game, &clean).unwrap();
    let (trained, curves) = train_conjectures(&sets, &init, &clean).unwrap();
    let (a, b) = affine_of(&trained);
    let loss = *curves[0].losses.last().unwrap();
    let clean_ok = (a - 0.25).abs() <= 1e-3 && (b - 30.6).abs() <= 1e-3 && loss <= 1e-8;

    let sigma = 0.5;
    let mut noisy_ok = true;
    let mut worst: (f64, f64) = (0.0, 0.0);
    for seed in 0..20 {
        let cfg = TrainConfig {
            sigma: Some(sigma),
            samples: 2000,
            batch_size: 200,
            epochs: 1000,
            learning_rate: Some(3e-3),
            seed,
            standardize: true,
        };
        let sets = generate_samples(&game, &cfg).unwrap();
        let (trained, _) = train_conjectures(&sets, &init, &cfg).unwrap();
        let (a, b) = affine_of(&trained);
        let xs: Vec<f64> = sets[0].pairs.iter().map(|p| p.own_action).collect();
        let t = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / t;
        let sxx: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
        let se_a = sigma / sxx.sqrt();
        let se_b = sigma * (1.0 / t + mean * mean / sxx).sqrt();
        let za = (a - 0.25).abs() / se_a;
        let zb = (b - 30.6).abs() / se_b;
        worst = (worst.0.max(za), worst.1.max(zb));
        noisy_ok &= za <= 3.0 && zb <= 3.0;
    }
    s.check(
        "Training recovery",
        clean_ok && noisy_ok,
        format!(
            "noiseless a = {a:.9}, b = {b:.9}, loss = {loss:.2e}; sigma 0.5 over 20 seeds: max |a-0.25|/SE = {:.2}, max |b-30.6|/SE = {:.2}",
            worst.0, worst.1
        ),
    );
}

// --- Robbins-Monro convergence --------------------------------------------------------------

fn robbins_monro(s: &mut Suite, runs: &OlsderRuns) {
    let base = ExperimentConfig::olsder_default();
    let mut cfg: PlayConfig = base.play.clone();
    cfg.gradient_noise_std = 0.01;
    cfg.stop_tolerance = 0.0;
    cfg.seed = 1;
    let StepSchedule::RobbinsMonro { eta0, alpha } = cfg.schedule else {
        unreachable!()
    };
    let mut ok = alpha == 0.6;
    let mut lines = Vec::new();
    for c in &runs.conjectures {
        let game = base.build_game(c.mode).unwrap();
        let x0 = base.start_profile(game.as_ref());
        let tr = costal_run(game.as_ref(), &c.conjectures, &cfg, &x0).unwrap();
        let last = tr.last().unwrap();
        let worst = last.gradients.iter().map(|g| g.abs()).fold(0.0, f64::max);
        ok &= worst < 1e-3;
        lines.push(format!("{}: {} iterations, max |gradient| = {worst:.3e}", c.label, last.t));
    }
    s.check(
        "Robbins-Monro convergence",
        ok,
        format!("eta0 = {eta0}, alpha = {alpha}, gradient noise std 0.01"),
    );
    lines.into_iter().for_each(info);
}

// --- linear coincidence -------------------------------------------------------------------

fn linear_coincidence(s: &mut Suite) {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst_gap: f64 = 0.0;
    let mut worst_point: f64 = 0.0;
    let games = 50;
    for _ in 0..games {
        let g = random_lq(&mut rng);
        let n = g.leader_count();
        let p: Vec<f64> = (0..n).map(|i| g.response_weight(i)).collect();
        let r = g.response_offset();
        // follower slope p_i, peers answer with a corner independent of x_i
        let conj = ConjectureSet::from_fn(n, true, |owner, t| {
            Ok((
                match t {
                    Target::Follower => ConjectureModel::Affine { a: p[owner], b: r },
                    Target::Leader(_) => ConjectureModel::Affine { a: 0.0, b: 0.0 },
                },
                true,
            ))
        })
        .unwrap();
        let sign = g.sense(Player::Leader(0)).descent_sign();
        // SE stationarity: total derivative of f_i(x, y*(x)) in descent form
        let se_total: Vec<f64> = (0..n)
            .map(|i| sign * (g.own_weight(i) + g.follower_weight(i) * p[i]))
            .collect();
        for _ in 0..20 {
            let (leaders, _) = random_point(&g, &mut rng);
            for i in 0..n {
                let c = conjectured_gradient(&g, &conj, i, leaders[i]).unwrap().total;
                worst_gap = worst_gap.max((c - se_total[i]).abs());
            }
        }
        let se: Vec<f64> = se_total
            .iter()
            .map(|&d| if d > 0.0 { -1.0 } else { 1.0 })
            .collect();
        let cfg = PlayConfig::new(10_000, StepSchedule::Constant { eta: 0.05 });
        let x0 = StrategyProfile::new(vec![0.0; n], None);
        let tr = costal_run(&g, &conj, &cfg, &x0).unwrap();
        let last = tr.last().unwrap();
        for i in 0..n {
            worst_point = worst_point.max((last.leaders[i] - se[i]).abs());
        }
    }
    s.check(
        "Linear-game coincidence",
        worst_gap <= 1e-8 && worst_point <= 1e-6,
        format!(
            "{games} random games: max |COSTAL - SE stationarity| = {worst_gap:.2e}, max |x_COSTAL - x_SE| = {worst_point:.2e}"
        ),
    );
}

// --- Lipschitz bound ------------------------------------------------------------------

fn lipschitz_bound(s: &mut Suite, olsder: &OlsderRuns, dilemma: &[PlayedRun]) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut pairs = 0;
    let mut ok = true;
    let mut tightest = f64::INFINITY;
    let mut record = |b: costal::analysis::BoundCheck| {
        pairs += 1;
        ok &= b.holds;
        for l in &b.lhs {
            if b.rhs > 0.0 {
                tightest = tightest.min(b.rhs / l.max(f64::MIN_POSITIVE));
            }
        }
    };

    let refs = olsder_reference();
    for mode in [PlayMode::Simultaneous, PlayMode::Stackelberg] {
        let g = Olsder::new(mode, 400.0).unwrap();
        let m = estimate_lipschitz(&g, 2000, 0).unwrap();
        let n = g.leader_count();
        let se = &refs.get("SE").unwrap().actions[..n];
        for r in olsder.played.iter().filter(|r| r.mode == mode) {
            record(bound_check(&g, se, &r.trace.last().unwrap().leaders, m).unwrap());
        }
        for name in ["NE", "SE_table", "CCE", "SWO"] {
            record(bound_check(&g, se, &refs.get(name).unwrap().actions[..n], m).unwrap());
        }
        for _ in 0..200 {
            let (x, _) = random_point(&g, &mut rng);
            record(bound_check(&g, se, &x, m).unwrap());
        }
    }

    let g = LeadersDilemma::new(-1.5).unwrap();
    let m = estimate_lipschitz(&g, 2000, 0).unwrap();
    let d = dilemma_reference(-1.5).unwrap().equilibria();
    let se = &d.get("SE").unwrap().actions[..2];
    record(bound_check(&g, se, &d.get("saddle").unwrap().actions[..2], m).unwrap());
    for r in dilemma {
        record(bound_check(&g, se, &r.trace.last().unwrap().leaders, m).unwrap());
    }
    for _ in 0..200 {
        let (x, _) = random_point(&g, &mut rng);
        record(bound_check(&g, se, &x, m).unwrap());
    }
    s.check(
        "Lipschitz objective bound",
        ok,
        format!("{pairs} (SE, profile) pairs in both games; smallest rhs/lhs ratio {tightest:.3}"),
    );
}

// --- determinism ------------------------------------------------------------------------

fn artifacts(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv" || e == "json"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

fn determinism(s: &mut Suite) {
    let dir = tempfile::tempdir().unwrap();
    let mut outs = Vec::new();
    let t = Instant::now();
    let out = dir.path().join("olsder");
    for _ in 0..2 {
        if out.exists() {
            fs::remove_dir_all(&out).unwrap();
        }
        let o = Command::new(env!("CARGO_BIN_EXE_costal"))
            .args(["reproduce", "olsder", "--seed", "7", "--out"])
            .arg(&out)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outs.push(artifacts(&out));
    }
    // same output directory both times, so the echoed config matches too
    let csvs = outs[0].iter().filter(|(n, _)| n.ends_with(".csv")).count();
    let same = outs[0] == outs[1] && csvs > 0;
    s.check(
        "Determinism",
        same,
        format!(
            "`reproduce olsder --seed 7` twice: {} files ({csvs} CSV) {} in {}",
            outs[0].len(),
            if same { "bit-identical" } else { "differ" },
            secs(t.elapsed())
        ),
    );
}

fn main() {
    let mut s = Suite { failed: Vec::new() };
    ne_oracle(&mut s);
    se_oracle(&mut s);
    swo_oracle(&mut s);
    let olsder = olsder_beats_ne(&mut s);
    let dilemma = dilemma_escape(&mut s);
    gradient_correctness(&mut s);
    training_recovery(&mut s);
    robbins_monro(&mut s, &olsder);
    linear_coincidence(&mut s);
    lipschitz_bound(&mut s, &olsder, &dilemma);
    determinism(&mut s);
    if s.failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: {} failed: {}", s.failed.len(), s.failed.join(", "));
        std::process::exit(1);
    }
}
