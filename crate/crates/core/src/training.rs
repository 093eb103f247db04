//! Noisy best-response datasets and least-squares fitting of conjectures.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conjecture::{ConjectureModel, ConjectureSet, Target};
use crate::error::{Error, Result};
use crate::game::{follower_response_unchecked, leader_response_unchecked, ActionBox, Game};

pub const DEFAULT_SAMPLES: usize = 2000;
pub const DEFAULT_BATCH_SIZE: usize = 32;
pub const DEFAULT_EPOCHS: usize = 200;
/// Noise std as a fraction of the target's box width when `sigma` is unset.
pub const DEFAULT_SIGMA_FRACTION: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    /// Sample count `T`.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Noise std in action units; `None` uses a fraction of the target box width.
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    /// `None` picks 1e-2 for affine/polynomial models and 1e-3 for networks.
    #[serde(default)]
    pub learning_rate: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Fit in standardized coordinates (mapped back exactly afterwards).
    #[serde(default = "default_true")]
    pub standardize: bool,
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

fn default_batch() -> usize {
    DEFAULT_BATCH_SIZE
}

fn default_epochs() -> usize {
    DEFAULT_EPOCHS
}

fn default_true() -> bool {
    true
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            samples: DEFAULT_SAMPLES,
            sigma: None,
            batch_size: DEFAULT_BATCH_SIZE,
            epochs: DEFAULT_EPOCHS,
            learning_rate: None,
            seed: 0,
            standardize: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::config("train.samples", "must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("train.batch_size", "must be positive"));
        }
        if self.batch_size > self.samples {
            return Err(Error::config(
                "train.batch_size",
                format!("batch size {} exceeds sample count {}", self.batch_size, self.samples),
            ));
        }
        if self.epochs == 0 {
            return Err(Error::config("train.epochs", "must be positive"));
        }
        if let Some(s) = self.sigma {
            if !(s.is_finite() && s >= 0.0) {
                return Err(Error::config("train.sigma", format!("must be finite and >= 0, got {s}")));
            }
        }
        if let Some(lr) = self.learning_rate {
            if !(lr.is_finite() && lr > 0.0) {
                return Err(Error::config("train.learning_rate", format!("must be positive, got {lr}")));
            }
        }
        Ok(())
    }

    pub fn learning_rate_for(&self, model: &ConjectureModel) -> f64 {
        self.learning_rate.unwrap_or(match model {
            ConjectureModel::Neural(_) => 1e-3,
            _ => 1e-2,
        })
    }

    fn sigma_for(&self, target_box: ActionBox) -> f64 {
        self.sigma.unwrap_or(DEFAULT_SIGMA_FRACTION * target_box.width())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplePair {
    /// `x_i^t`
    pub own_action: f64,
    /// Noisy best response of the target, not clipped to its box.
    pub observed_response: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    pub owner: usize,
    pub target: Target,
    pub pairs: Vec<SamplePair>,
}

impl SampleSet {
    pub fn model_id(&self) -> String {
        model_id(self.owner, self.target)
    }
}

/// Identifier used in loss files: `gamma_<owner>_<target>`, 1-based.
pub fn model_id(owner: usize, target: Target) -> String {
    format!("gamma_{}_{}", owner + 1, target)
}

/// Draws `T` noisy best-response observations per (owner, target) pair.
///
/// Sets are ordered by owner, peers before the follower, matching
/// [`ConjectureSet::iter`].
pub fn generate_samples(game: &dyn Game, cfg: &TrainConfig) -> Result<Vec<SampleSet>> {
    cfg.validate()?;
    let n = game.leader_count();
    let follower_box = game.follower_box();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = |b: ActionBox| -> Result<Normal<f64>> {
        Normal::new(0.0, cfg.sigma_for(b)).map_err(|e| Error::config("train.sigma", e.to_string()))
    };
    let leader_noise: Vec<Normal<f64>> = (0..n).map(|j| noise(game.leader_box(j))).collect::<Result<_>>()?;
    let follower_noise = follower_box.map(noise).transpose()?;

    let mut sets = Vec::new();
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            sets.push(SampleSet {
                owner: i,
                target: Target::Leader(j),
                pairs: Vec::with_capacity(cfg.samples),
            });
        }
        if follower_box.is_some() {
            sets.push(SampleSet {
                owner: i,
                target: Target::Follower,
                pairs: Vec::with_capacity(cfg.samples),
            });
        }
    }
    let per_owner = n - 1 + usize::from(follower_box.is_some());

    let mut x = vec![0.0; n];
    let mut responses = vec![0.0; n];
    for t in 0..cfg.samples {
        for (j, xj) in x.iter_mut().enumerate() {
            let b = game.leader_box(j);
            *xj = rng.gen_range(b.lower()..=b.upper());
        }
        let y = follower_box.map(|b| rng.gen_range(b.lower()..=b.upper()));
        let wrap = |e: Error| Error::Sampling {
            sample: t + 1,
            source: Box::new(e),
        };
        let y_tilde = match &follower_noise {
            Some(dist) => Some(follower_response_unchecked(game, &x).map_err(wrap)? + dist.sample(&mut rng)),
            None => None,
        };
        for (j, r) in responses.iter_mut().enumerate() {
            *r = leader_response_unchecked(game, j, &x, y).map_err(wrap)? + leader_noise[j].sample(&mut rng);
        }
        for i in 0..n {
            let base = i * per_owner;
            for (k, j) in (0..n).filter(|&j| j != i).enumerate() {
                sets[base + k].pairs.push(SamplePair {
                    own_action: x[i],
                    observed_response: responses[j],
                });
            }
            if let Some(yt) = y_tilde {
                sets[base + n - 1].pairs.push(SamplePair {
                    own_action: x[i],
                    observed_response: yt,
                });
            }
        }
    }
    Ok(sets)
}

/// Mean/std of inputs and outputs of one dataset.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Standardizer {
    pub input_mean: f64,
    pub input_std: f64,
    pub output_mean: f64,
    pub output_std: f64,
}

impl Standardizer {
    pub fn identity() -> Self {
        Standardizer {
            input_mean: 0.0,
            input_std: 1.0,
            output_mean: 0.0,
            output_std: 1.0,
        }
    }

    pub fn from_pairs(pairs: &[SamplePair]) -> Self {
        let (mx, sx) = mean_std(pairs.iter().map(|p| p.own_action));
        let (my, sy) = mean_std(pairs.iter().map(|p| p.observed_response));
        Standardizer {
            input_mean: mx,
            input_std: sx,
            output_mean: my,
            output_std: sy,
        }
    }

    /// Raw-coordinate model expressed in standardized coordinates.
    pub fn to_unit(&self, model: &ConjectureModel) -> ConjectureModel {
        model.rescaled(self.input_mean, self.input_std, self.output_mean, self.output_std)
    }

    /// Standardized-coordinate model expressed in raw coordinates.
    pub fn to_raw(&self, model: &ConjectureModel) -> ConjectureModel {
        model.rescaled(
            -self.input_mean / self.input_std,
            1.0 / self.input_std,
            -self.output_mean / self.output_std,
            1.0 / self.output_std,
        )
    }
}

/// Mean and population std; a degenerate spread maps to 1.
fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count().max(1) as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    (mean, if std > 0.0 && std.is_finite() { std } else { 1.0 })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossCurve {
    pub owner: usize,
    pub target: Target,
    /// Mean squared error over the whole dataset after each epoch, raw units.
    pub losses: Vec<f64>,
}

impl LossCurve {
    pub fn model_id(&self) -> String {
        model_id(self.owner, self.target)
    }
}

/// `(1/|D|) sum (target - model(x))^2`
pub fn mean_loss(model: &ConjectureModel, pairs: &[SamplePair]) -> f64 {
    let n = pairs.len().max(1) as f64;
    pairs
        .iter()
        .map(|p| {
            let r = p.observed_response - model.predict(p.own_action);
            r * r
        })
        .sum::<f64>()
        / n
}

/// Mini-batch SGD on `(1/|B|) sum_b (target_b - model(x_b))^2` for every
/// non-frozen conjecture. Model `k` (in [`ConjectureSet::iter`] order)
/// shuffles with seed `cfg.seed ^ k`.
pub fn train_conjectures(
    sets: &[SampleSet],
    models: &ConjectureSet,
    cfg: &TrainConfig,
) -> Result<(ConjectureSet, Vec<LossCurve>)> {
    cfg.validate()?;
    let jobs: Vec<(usize, usize, Target, &ConjectureModel)> = models
        .iter()
        .enumerate()
        .filter(|(_, (_, c))| !c.frozen)
        .map(|(k, (owner, c))| (k, owner, c.target, &c.model))
        .collect();
    for &(_, owner, target, _) in &jobs {
        if !sets.iter().any(|s| s.owner == owner && s.target == target) {
            return Err(Error::Input(format!(
                "no samples for trainable conjecture {}",
                model_id(owner, target)
            )));
        }
    }
    let trained: Vec<(usize, Target, ConjectureModel, Vec<f64>)> = jobs
        .par_iter()
        .map(|&(k, owner, target, model)| {
            let set = sets
                .iter()
                .find(|s| s.owner == owner && s.target == target)
                .expect("checked above");
            let (m, losses) = fit_model(model, &set.pairs, cfg, cfg.seed ^ k as u64, &model_id(owner, target))?;
            Ok((owner, target, m, losses))
        })
        .collect::<Result<_>>()?;

    let mut out = models.clone();
    let mut curves = Vec::with_capacity(trained.len());
    for (owner, target, model, losses) in trained {
        if let Some(c) = out.get_mut(owner, target) {
            c.model = model;
        }
        curves.push(LossCurve { owner, target, losses });
    }
    Ok((out, curves))
}

/// Fits one model to one dataset; returns the model and its loss curve.
pub fn fit_model(
    model: &ConjectureModel,
    pairs: &[SamplePair],
    cfg: &TrainConfig,
    seed: u64,
    id: &str,
) -> Result<(ConjectureModel, Vec<f64>)> {
    if pairs.is_empty() {
        return Err(Error::Input(format!("empty dataset for {id}")));
    }
    let scaler = if cfg.standardize {
        Standardizer::from_pairs(pairs)
    } else {
        Standardizer::identity()
    };
    let data: Vec<SamplePair> = pairs
        .iter()
        .map(|p| SamplePair {
            own_action: (p.own_action - scaler.input_mean) / scaler.input_std,
            observed_response: (p.observed_response - scaler.output_mean) / scaler.output_std,
        })
        .collect();
    let raw_factor = scaler.output_std * scaler.output_std;
    let lr = cfg.learning_rate_for(model);
    let mut unit = scaler.to_unit(model);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut theta = unit.params();
    let mut grad = vec![0.0; theta.len()];
    let mut losses = Vec::with_capacity(cfg.epochs);
    let batch = cfg.batch_size.min(data.len());

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            // d/dtheta of (1/|B|) sum r^2 is (2/|B|) sum -r dgamma/dtheta
            let w = 2.0 / chunk.len() as f64;
            for &b in chunk {
                let p = data[b];
                let r = p.observed_response - unit.predict(p.own_action);
                unit.accumulate_parameter_gradient(p.own_action, r, w, &mut grad);
            }
            for (t, g) in theta.iter_mut().zip(&grad) {
                *t -= lr * g;
            }
            unit.set_params(&theta)?;
        }
        let loss = mean_loss(&unit, &data) * raw_factor;
        if !loss.is_finite() {
            return Err(Error::Training {
                model: id.to_string(),
                epoch,
            });
        }
        losses.push(loss);
    }
    Ok((scaler.to_raw(&unit), losses))
}

// --- CSV ------------------------------------------------------------------

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes all sets as `t, owner, target, own_action, observed_response`.
pub fn write_samples<W: Write>(sets: &[SampleSet], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "owner", "target", "own_action", "observed_response"])?;
    for s in sets {
        let owner = (s.owner + 1).to_string();
        let target = s.target.to_string();
        for (t, p) in s.pairs.iter().enumerate() {
            w.write_record([
                (t + 1).to_string(),
                owner.clone(),
                target.clone(),
                format_f64(p.own_action),
                format_f64(p.observed_response),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_samples(path: &Path) -> Result<Vec<SampleSet>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let mut sets: Vec<SampleSet> = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let at = |k: usize| format!("{}:{}", path.display(), line + 2).replace(':', &format!(":col{k}:"));
        let get = |k: usize| rec.get(k).ok_or_else(|| Error::parse(at(k), "missing column"));
        let owner: usize = get(1)?
            .parse::<usize>()
            .ok()
            .filter(|&o| o >= 1)
            .ok_or_else(|| Error::parse(at(1), "owner must be a positive integer"))?
            - 1;
        let target = match get(2)? {
            "y" => Target::Follower,
            s => Target::Leader(
                s.parse::<usize>()
                    .ok()
                    .filter(|&j| j >= 1)
                    .ok_or_else(|| Error::parse(at(2), format!("bad target `{s}`")))?
                    - 1,
            ),
        };
        let num = |k: usize| -> Result<f64> {
            get(k)?
                .parse::<f64>()
                .map_err(|e| Error::parse(at(k), e.to_string()))
        };
        let pair = SamplePair {
            own_action: num(3)?,
            observed_response: num(4)?,
        };
        match sets.iter_mut().find(|s| s.owner == owner && s.target == target) {
            Some(s) => s.pairs.push(pair),
            None => sets.push(SampleSet {
                owner,
                target,
                pairs: vec![pair],
            }),
        }
    }
    Ok(sets)
}

/// Writes loss curves as `model_id, epoch, loss`.
pub fn write_losses<W: Write>(curves: &[LossCurve], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["model_id", "epoch", "loss"])?;
    for c in curves {
        let id = c.model_id();
        for (e, l) in c.losses.iter().enumerate() {
            w.write_record([id.clone(), (e + 1).to_string(), format_f64(*l)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Shortest decimal that parses back to the same bits.
pub(crate) fn format_f64(v: f64) -> String {
    format!("{v:?}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conjecture::NeuralNet;
    use crate::game::{LeadersDilemma, Olsder, PlayMode, OLSDER_DEFAULT_CAP};

    fn olsder_s() -> Olsder {
        Olsder::new(PlayMode::Stackelberg, OLSDER_DEFAULT_CAP).unwrap()
    }

    fn cfg(samples: usize, sigma: f64) -> TrainConfig {
        TrainConfig {
            samples,
            sigma: Some(sigma),
            ..TrainConfig::default()
        }
    }

    #[test]
    fn batch_larger_than_samples_is_rejected() {
        let c = TrainConfig {
            samples: 10,
            batch_size: 11,
            ..TrainConfig::default()
        };
        match c.validate() {
            Err(Error::Config { path, .. }) => assert_eq!(path, "train.batch_size"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dataset_counts() {
        let g = LeadersDilemma::new(-1.5).unwrap();
        let sets = generate_samples(&g, &TrainConfig { batch_size: 5, ..cfg(5, 0.1) }).unwrap();
        assert_eq!(sets.len(), 4);
        for owner in 0..2 {
            assert_eq!(sets.iter().filter(|s| s.owner == owner).count(), 2);
        }
        assert!(sets.iter().all(|s| s.pairs.len() == 5));
    }

    #[test]
    fn noiseless_dilemma_follower_pairs_are_exact() {
        let g = LeadersDilemma::new(-1.5).unwrap();
        let sets = generate_samples(&g, &cfg(50, 0.0)).unwrap();
        let d1y = &sets[1];
        let d2y = &sets[3];
        assert_eq!(d1y.target, Target::Follower);
        for (p, q) in d1y.pairs.iter().zip(&d2y.pairs) {
            let mean = 0.5 * (p.own_action + q.own_action);
            assert_eq!(p.observed_response, g.bounds().project(mean));
        }
    }

    #[test]
    fn noiseless_olsder_simultaneous_pairs_follow_the_response_line() {
        let g = Olsder::new(PlayMode::Simultaneous, OLSDER_DEFAULT_CAP).unwrap();
        let sets = generate_samples(&g, &cfg(100, 0.0)).unwrap();
        assert_eq!(sets[0].target, Target::Leader(1));
        for p in &sets[0].pairs {
            assert!((p.observed_response - (0.25 * p.own_action + 30.6)).abs() < 1e-9);
        }
    }

    #[test]
    fn generation_is_reproducible() {
        let g = olsder_s();
        let a = generate_samples(&g, &cfg(200, 3.0)).unwrap();
        let b = generate_samples(&g, &cfg(200, 3.0)).unwrap();
        assert_eq!(a, b);
        let c = generate_samples(&g, &TrainConfig { seed: 1, ..cfg(200, 3.0) }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn affine_recovers_noiseless_line() {
        let g = olsder_s();
        let c = cfg(2000, 0.0);
        let sets = generate_samples(&g, &c).unwrap();
        let models =
            ConjectureSet::from_fn(1, true, |_, _| Ok((ConjectureModel::Affine { a: 0.0, b: 0.0 }, false))).unwrap();
        let (trained, curves) = train_conjectures(&sets, &models, &c).unwrap();
        let loss = *curves[0].losses.last().unwrap();
        assert!(loss <= 1e-8, "{loss}");
        match trained.follower(0).unwrap().model {
            ConjectureModel::Affine { a, b } => {
                assert!((a - 0.25).abs() < 1e-3 && (b - 30.6).abs() < 1e-3, "({a}, {b})");
            }
            ref m => panic!("{m:?}"),
        }
    }

    #[test]
    fn frozen_models_are_untouched() {
        let g = LeadersDilemma::new(-1.5).unwrap();
        let c = cfg(64, 0.1);
        let sets = generate_samples(&g, &c).unwrap();
        let models = ConjectureSet::from_fn(2, true, |_, _| Ok((ConjectureModel::quadratic(), true))).unwrap();
        let (trained, curves) = train_conjectures(&sets, &models, &c).unwrap();
        assert_eq!(trained, models);
        assert!(curves.is_empty());
    }

    #[test]
    fn full_batch_loss_is_non_increasing() {
        let g = olsder_s();
        let c = TrainConfig {
            batch_size: 500,
            epochs: 300,
            learning_rate: Some(0.1),
            ..cfg(500, 5.0)
        };
        let sets = generate_samples(&g, &c).unwrap();
        let (_, losses) = fit_model(&ConjectureModel::Affine { a: 0.0, b: 0.0 }, &sets[0].pairs, &c, 0, "m").unwrap();
        for w in losses.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn divergent_learning_rate_reports_epoch() {
        let g = olsder_s();
        let c = TrainConfig {
            learning_rate: Some(1e6),
            ..cfg(200, 1.0)
        };
        let sets = generate_samples(&g, &c).unwrap();
        let err = fit_model(&ConjectureModel::Affine { a: 0.0, b: 0.0 }, &sets[0].pairs, &c, 0, "gamma_1_y").unwrap_err();
        match err {
            Error::Training { model, epoch } => {
                assert_eq!(model, "gamma_1_y");
                assert!(epoch >= 1);
            }
            other => panic!("{other:?}"),
        }
    }

    /// Least-squares fit of the output layer for fixed hidden features, best
    /// over a grid of hidden weights; the trainer must do at least this well.
    fn grid_baseline(pairs: &[SamplePair], width: usize) -> f64 {
        let s = Standardizer::from_pairs(pairs);
        let u: Vec<(f64, f64)> = pairs
            .iter()
            .map(|p| ((p.own_action - s.input_mean) / s.input_std, (p.observed_response - s.output_mean) / s.output_std))
            .collect();
        let mut best = f64::INFINITY;
        for scale in [0.1, 0.3, 1.0, 3.0] {
            let w1: Vec<f64> = (0..width).map(|h| scale * (1.0 + h as f64 / width as f64)).collect();
            let b1: Vec<f64> = (0..width).map(|h| -1.5 + 3.0 * h as f64 / (width - 1).max(1) as f64).collect();
            // Normal equations over [tanh features, 1].
            let k = width + 1;
            let mut ata = vec![vec![0.0; k]; k];
            let mut atb = vec![0.0; k];
            for &(x, y) in &u {
                let mut phi: Vec<f64> = (0..width).map(|h| (w1[h] * x + b1[h]).tanh()).collect();
                phi.push(1.0);
                for r in 0..k {
                    atb[r] += phi[r] * y;
                    for c in 0..k {
                        ata[r][c] += phi[r] * phi[c];
                    }
                }
            }
            for (r, row) in ata.iter_mut().enumerate() {
                row[r] += 1e-10;
            }
            let sol = solve(ata, atb);
            let net = NeuralNet::new(w1, b1, sol[..width].to_vec(), sol[width]).unwrap();
            let loss = mean_loss(&s.to_raw(&ConjectureModel::Neural(net)), pairs);
            best = best.min(loss);
        }
        best
    }

    fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for c in 0..n {
            let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
            a.swap(c, p);
            b.swap(c, p);
            for r in c + 1..n {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
        let mut x = vec![0.0; n];
        for r in (0..n).rev() {
            x[r] = (b[r] - (r + 1..n).map(|k| a[r][k] * x[k]).sum::<f64>()) / a[r][r];
        }
        x
    }

    #[test]
    fn network_fits_noiseless_line() {
        let g = olsder_s();
        let c = TrainConfig {
            epochs: 3000,
            learning_rate: Some(0.1),
            ..cfg(2000, 0.0)
        };
        let sets = generate_samples(&g, &c).unwrap();
        let pairs = &sets[0].pairs;
        let scaler = Standardizer::from_pairs(pairs);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let init = scaler.to_raw(&ConjectureModel::Neural(NeuralNet::seeded(10, &mut rng).unwrap()));
        let (model, losses) = fit_model(&init, pairs, &c, 1, "nn").unwrap();
        let loss = *losses.last().unwrap();
        let baseline = grid_baseline(pairs, 10);
        assert!(baseline <= 1e-3, "baseline {baseline}");
        assert!(loss <= 1e-3, "loss {loss}, baseline {baseline}");
        assert!((mean_loss(&model, pairs) - loss).abs() <= 1e-9 + 1e-6 * loss);
    }

    #[test]
    fn sample_csv_round_trip() {
        let g = LeadersDilemma::new(-1.5).unwrap();
        let sets = generate_samples(&g, &TrainConfig { batch_size: 4, ..cfg(20, 0.3) }).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("samples.csv");
        write_samples(&sets, std::fs::File::create(&path).unwrap()).unwrap();
        assert_eq!(read_samples(&path).unwrap(), sets);
    }
}
