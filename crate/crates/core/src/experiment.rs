//! Experiment configuration and the train / play / analyze pipelines.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use serde_json::Value;

use crate::analysis::{
    bound_check, compare_runs, constant_conjectures, dilemma_reference, equilibrium_report, estimate_lipschitz,
    olsder_reference, Comparison, EquilibriumReport, ReferenceEquilibria, Tolerances,
};
use crate::conjecture::{ConjectureModel, ConjectureSet, NeuralNet};
use crate::dynamics::{costal_run, gd_baseline_run, read_trace, write_trace, PlayConfig, RunTrace, StepSchedule};
use crate::error::{Error, Result};
use crate::game::{Game, GameConfig, LipschitzConstants, PlayMode, StrategyProfile};
use crate::training::{
    format_f64, generate_samples, train_conjectures, write_losses, write_samples, LossCurve, SampleSet, Standardizer,
    TrainConfig,
};

pub const SCHEMA_VERSION: u32 = 1;
pub const CONJECTURES_FILE: &str = "conjectures.json";
pub const CONFIG_FILE: &str = "config.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeuralParams {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

/// Initial conjecture for every target of a leader.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConjectureSpec {
    Affine {
        #[serde(default)]
        a: f64,
        #[serde(default)]
        b: f64,
        #[serde(default)]
        frozen: bool,
    },
    /// Either `coefficients` (initial values) or `degree` (zeros).
    Polynomial {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        degree: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        coefficients: Option<Vec<f64>>,
        #[serde(default)]
        frozen: bool,
    },
    /// Fixed `x^2`.
    Quadratic,
    /// Fixed `x^2 + x`.
    #[serde(rename = "quadratic_11")]
    Quadratic11,
    /// `params` absent means a seeded random initialization.
    Neural {
        width: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        params: Option<NeuralParams>,
        #[serde(default)]
        frozen: bool,
    },
}

impl ConjectureSpec {
    fn validate(&self, path: &str) -> Result<()> {
        match self {
            ConjectureSpec::Polynomial {
                degree, coefficients, ..
            } => match (degree, coefficients) {
                (Some(_), Some(_)) => Err(Error::config(path, "give either degree or coefficients")),
                (None, None) => Err(Error::config(path, "polynomial needs degree or coefficients")),
                (_, Some(c)) if c.is_empty() => Err(Error::config(path, "coefficients must not be empty")),
                _ => Ok(()),
            },
            ConjectureSpec::Neural { width, params, .. } => {
                if *width == 0 {
                    return Err(Error::config(format!("{path}.width"), "must be positive"));
                }
                if let Some(p) = params {
                    if p.w1.len() != *width || p.b1.len() != *width || p.w2.len() != *width {
                        return Err(Error::config(
                            format!("{path}.params"),
                            format!("w1, b1 and w2 must each have {width} entries"),
                        ));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn is_frozen(&self) -> bool {
        match self {
            ConjectureSpec::Affine { frozen, .. }
            | ConjectureSpec::Polynomial { frozen, .. }
            | ConjectureSpec::Neural { frozen, .. } => *frozen,
            ConjectureSpec::Quadratic | ConjectureSpec::Quadratic11 => true,
        }
    }

    fn instantiate(&self, rng: &mut ChaCha8Rng) -> Result<(ConjectureModel, bool)> {
        let model = match self {
            ConjectureSpec::Affine { a, b, .. } => ConjectureModel::Affine { a: *a, b: *b },
            ConjectureSpec::Polynomial {
                degree, coefficients, ..
            } => ConjectureModel::Polynomial {
                coefficients: coefficients.clone().unwrap_or_else(|| vec![0.0; degree.unwrap_or_default() + 1]),
            },
            ConjectureSpec::Quadratic => ConjectureModel::quadratic(),
            ConjectureSpec::Quadratic11 => ConjectureModel::quadratic_11(),
            ConjectureSpec::Neural { width, params, .. } => ConjectureModel::Neural(match params {
                Some(p) => NeuralNet::new(p.w1.clone(), p.b1.clone(), p.w2.clone(), p.b2)?,
                None => NeuralNet::seeded(*width, rng)?,
            }),
        };
        Ok((model, self.is_frozen()))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    #[default]
    Costal,
    /// Gradient play on the true profile; needs no conjectures.
    Gd,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainOverride {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlayOverride {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<StepSchedule>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub label: String,
    #[serde(default)]
    pub algorithm: Algorithm,
    /// Conjecture used by every leader for every target.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conjecture: Option<ConjectureSpec>,
    /// Per-leader conjectures; overrides `conjecture`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leaders: Option<Vec<ConjectureSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainOverride>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub play: Option<PlayOverride>,
}

impl RunSpec {
    pub fn costal(label: &str, conjecture: ConjectureSpec) -> Self {
        RunSpec {
            label: label.into(),
            algorithm: Algorithm::Costal,
            conjecture: Some(conjecture),
            leaders: None,
            train: None,
            play: None,
        }
    }

    pub fn gd(label: &str) -> Self {
        RunSpec {
            label: label.into(),
            algorithm: Algorithm::Gd,
            conjecture: None,
            leaders: None,
            train: None,
            play: None,
        }
    }

    fn spec_for(&self, owner: usize) -> Option<&ConjectureSpec> {
        match &self.leaders {
            Some(l) => l.get(owner),
            None => self.conjecture.as_ref(),
        }
    }

    fn trainable(&self) -> bool {
        self.algorithm == Algorithm::Costal
            && match &self.leaders {
                Some(l) => l.iter().any(|s| !s.is_frozen()),
                None => self.conjecture.as_ref().is_some_and(|s| !s.is_frozen()),
            }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Random profiles (besides box corners) for Lipschitz estimates.
    #[serde(default = "default_lipschitz_samples")]
    pub lipschitz_samples: usize,
}

fn default_lipschitz_samples() -> usize {
    2000
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            tolerances: Tolerances::default(),
            lipschitz_samples: default_lipschitz_samples(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub name: String,
    pub game: GameConfig,
    /// Labels get an `N_`/`S_` prefix when more than one mode is listed.
    #[serde(default = "default_modes")]
    pub modes: Vec<PlayMode>,
    pub runs: Vec<RunSpec>,
    #[serde(default)]
    pub train: TrainConfig,
    pub play: PlayConfig,
    /// Initial leader actions; games with fewer leaders use the prefix.
    pub start: Vec<f64>,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Master seed; copied into `train.seed` and `play.seed` on resolution.
    #[serde(default)]
    pub seed: u64,
}

fn default_modes() -> Vec<PlayMode> {
    vec![PlayMode::Stackelberg]
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// One (mode, run) pair of a config.
#[derive(Clone, Debug)]
pub struct PlannedRun<'a> {
    pub label: String,
    pub mode: PlayMode,
    pub mode_index: usize,
    pub run_index: usize,
    pub spec: &'a RunSpec,
}

impl ExperimentConfig {
    /// Parses and validates; field errors carry their JSON path.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(if path == "." { "$".to_string() } else { path }, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Input(e.to_string()))
    }

    /// Applies CLI overrides and copies the master seed into the stages.
    pub fn resolve(mut self, seed: Option<u64>, out: Option<&Path>) -> Result<Self> {
        if let Some(s) = seed {
            self.seed = s;
        }
        if let Some(o) = out {
            self.out = o.to_path_buf();
        }
        self.train.seed = self.seed;
        self.play.seed = self.seed;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::config(
                "schema",
                format!("unsupported schema {}, expected {SCHEMA_VERSION}", self.schema),
            ));
        }
        if self.modes.is_empty() {
            return Err(Error::config("modes", "must list at least one mode"));
        }
        if self.runs.is_empty() {
            return Err(Error::config("runs", "must list at least one run"));
        }
        self.train.validate()?;
        self.play.validate()?;
        let tol = &self.analysis.tolerances;
        if !(tol.stationarity > 0.0 && tol.consistency > 0.0) {
            return Err(Error::config("analysis.tolerances", "must be positive"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for (k, r) in self.runs.iter().enumerate() {
            let path = format!("runs[{k}]");
            if r.label.is_empty() || r.label.contains(['/', '\\']) {
                return Err(Error::config(format!("{path}.label"), "must be a non-empty file-name-safe string"));
            }
            if !seen.insert(&r.label) {
                return Err(Error::config(format!("{path}.label"), format!("duplicate label `{}`", r.label)));
            }
            match r.algorithm {
                Algorithm::Gd if r.conjecture.is_some() || r.leaders.is_some() => {
                    return Err(Error::config(path, "gd runs take no conjectures"));
                }
                Algorithm::Costal if r.conjecture.is_none() && r.leaders.is_none() => {
                    return Err(Error::config(path, "costal runs need `conjecture` or `leaders`"));
                }
                _ => {}
            }
            if let Some(s) = &r.conjecture {
                s.validate(&format!("{path}.conjecture"))?;
            }
            if let Some(l) = &r.leaders {
                for (i, s) in l.iter().enumerate() {
                    s.validate(&format!("{path}.leaders[{i}]"))?;
                }
            }
            if let Some(t) = &r.train {
                self.run_train_config(t)
                    .validate()
                    .map_err(|e| prefix_config(e, &format!("{path}.")))?;
            }
            if let Some(p) = &r.play {
                self.run_play_config(p)
                    .validate()
                    .map_err(|e| prefix_config(e, &format!("{path}.")))?;
            }
        }
        for (m, &mode) in self.modes.iter().enumerate() {
            let game = self.game.build(mode).map_err(|e| prefix_config(e, ""))?;
            let n = game.leader_count();
            if self.start.len() < n {
                return Err(Error::config(
                    "start",
                    format!("{} mode needs {n} leader actions, got {}", mode_name(mode), self.start.len()),
                ));
            }
            for (i, &x) in self.start[..n].iter().enumerate() {
                if !game.leader_box(i).contains(x) {
                    return Err(Error::config(format!("start[{i}]"), format!("{x} is outside the leader box")));
                }
            }
            for (k, r) in self.runs.iter().enumerate() {
                if let Some(l) = &r.leaders {
                    if l.len() != n {
                        return Err(Error::config(
                            format!("runs[{k}].leaders"),
                            format!("{} entries for {n} leaders (modes[{m}])", l.len()),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    fn run_train_config(&self, o: &TrainOverride) -> TrainConfig {
        let mut t = self.train.clone();
        if let Some(e) = o.epochs {
            t.epochs = e;
        }
        if let Some(lr) = o.learning_rate {
            t.learning_rate = Some(lr);
        }
        if let Some(b) = o.batch_size {
            t.batch_size = b;
        }
        t
    }

    fn run_play_config(&self, o: &PlayOverride) -> PlayConfig {
        let mut p = self.play.clone();
        if let Some(i) = o.iterations {
            p.iterations = i;
        }
        if let Some(s) = o.schedule {
            p.schedule = s;
        }
        p
    }

    pub fn train_config_for(&self, run: &RunSpec) -> TrainConfig {
        run.train.as_ref().map_or_else(|| self.train.clone(), |o| self.run_train_config(o))
    }

    pub fn play_config_for(&self, run: &RunSpec) -> PlayConfig {
        run.play.as_ref().map_or_else(|| self.play.clone(), |o| self.run_play_config(o))
    }

    /// All (mode, run) pairs in config order, modes outermost.
    pub fn planned(&self) -> Vec<PlannedRun<'_>> {
        let prefixed = self.modes.len() > 1;
        let mut out = Vec::new();
        for (m, &mode) in self.modes.iter().enumerate() {
            for (k, spec) in self.runs.iter().enumerate() {
                let label = if prefixed {
                    format!("{}_{}", mode.prefix(), spec.label)
                } else {
                    spec.label.clone()
                };
                out.push(PlannedRun {
                    label,
                    mode,
                    mode_index: m,
                    run_index: k,
                    spec,
                });
            }
        }
        out
    }

    /// Planned runs restricted to `labels` (expanded or bare run labels).
    pub fn select(&self, labels: Option<&[String]>) -> Result<Vec<PlannedRun<'_>>> {
        let all = self.planned();
        let Some(wanted) = labels else {
            return Ok(all);
        };
        for w in wanted {
            if !all.iter().any(|p| &p.label == w || &p.spec.label == w) {
                return Err(Error::config("labels", format!("unknown label `{w}`")));
            }
        }
        Ok(all
            .into_iter()
            .filter(|p| wanted.iter().any(|w| &p.label == w || &p.spec.label == w))
            .collect())
    }

    pub fn build_game(&self, mode: PlayMode) -> Result<Box<dyn Game>> {
        self.game.build(mode)
    }

    /// Initial (untrained) conjectures of a COSTAL run.
    pub fn initial_conjectures(&self, run: &PlannedRun<'_>, game: &dyn Game) -> Result<ConjectureSet> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(((run.mode_index as u64) << 32) | run.run_index as u64);
        ConjectureSet::from_fn(game.leader_count(), game.has_follower(), |owner, _| {
            let spec = run
                .spec
                .spec_for(owner)
                .ok_or_else(|| Error::config(format!("runs[{}]", run.run_index), "missing conjecture"))?;
            spec.instantiate(&mut rng)
        })
    }

    pub fn start_profile(&self, game: &dyn Game) -> StrategyProfile {
        StrategyProfile::new(self.start[..game.leader_count()].to_vec(), None)
    }

    /// Reference equilibria of the configured game, when known.
    pub fn references(&self) -> Result<Option<ReferenceEquilibria>> {
        Ok(match &self.game {
            GameConfig::Olsder { .. } => Some(olsder_reference()),
            GameConfig::LeadersDilemma { k, .. } => Some(dilemma_reference(*k)?.equilibria()),
            GameConfig::LinearQuadratic { .. } => None,
        })
    }

    /// Shipped configuration for the Olsder experiment: affine and NN(10)
    /// conjectures plus the gradient baseline, in both play modes.
    pub fn olsder_default() -> Self {
        let nn = RunSpec {
            train: Some(TrainOverride {
                epochs: Some(3000),
                learning_rate: Some(0.1),
                batch_size: None,
            }),
            ..RunSpec::costal(
                "NN_10",
                ConjectureSpec::Neural {
                    width: 10,
                    params: None,
                    frozen: false,
                },
            )
        };
        ExperimentConfig {
            schema: SCHEMA_VERSION,
            name: "olsder".into(),
            game: GameConfig::Olsder {
                cap: crate::game::OLSDER_DEFAULT_CAP,
                lipschitz: None,
            },
            modes: vec![PlayMode::Simultaneous, PlayMode::Stackelberg],
            runs: vec![
                RunSpec::costal(
                    "affine",
                    ConjectureSpec::Affine {
                        a: 0.0,
                        b: 0.0,
                        frozen: false,
                    },
                ),
                nn,
                RunSpec::gd("GD"),
            ],
            train: TrainConfig {
                sigma: Some(0.5),
                ..TrainConfig::default()
            },
            play: PlayConfig::new(5000, StepSchedule::RobbinsMonro { eta0: 0.015, alpha: 0.6 }),
            start: vec![100.0, 50.0],
            analysis: AnalysisConfig::default(),
            out: PathBuf::from("out/olsder"),
            seed: 0,
        }
    }

    /// Shipped configuration for the leader's dilemma with `K = -1.5`.
    pub fn dilemma_default() -> Self {
        let nn = |label: &str, width: usize| RunSpec {
            train: Some(TrainOverride {
                epochs: Some(1000),
                learning_rate: Some(0.1),
                batch_size: None,
            }),
            ..RunSpec::costal(
                label,
                ConjectureSpec::Neural {
                    width,
                    params: None,
                    frozen: false,
                },
            )
        };
        ExperimentConfig {
            schema: SCHEMA_VERSION,
            name: "dilemma".into(),
            game: GameConfig::LeadersDilemma {
                k: -1.5,
                bounds: crate::game::ActionBox::new(-2.0, 2.0).expect("static box"),
                lipschitz: None,
            },
            modes: vec![PlayMode::Stackelberg],
            runs: vec![
                RunSpec::gd("GD"),
                RunSpec::costal("quadratic", ConjectureSpec::Quadratic),
                RunSpec::costal("quadratic_11", ConjectureSpec::Quadratic11),
                nn("NN_5", 5),
                nn("NN_10", 10),
            ],
            train: TrainConfig::default(),
            play: PlayConfig::new(10_000, StepSchedule::RobbinsMonro { eta0: 0.5, alpha: 0.6 }),
            start: vec![0.8, 0.2],
            analysis: AnalysisConfig::default(),
            out: PathBuf::from("out/dilemma"),
            seed: 0,
        }
    }

    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "olsder" => Ok(Self::olsder_default()),
            "dilemma" => Ok(Self::dilemma_default()),
            other => Err(Error::config(
                "experiment",
                format!("unknown experiment `{other}` (expected dilemma or olsder)"),
            )),
        }
    }
}

fn prefix_config(e: Error, prefix: &str) -> Error {
    match e {
        Error::Config { path, reason } => Error::Config {
            path: format!("{prefix}{path}"),
            reason,
        },
        Error::Domain { coordinate, .. } if prefix.is_empty() => Error::config("game", format!("invalid {coordinate}")),
        other => other,
    }
}

pub fn mode_name(mode: PlayMode) -> &'static str {
    match mode {
        PlayMode::Stackelberg => "stackelberg",
        PlayMode::Simultaneous => "simultaneous",
    }
}

// --- atomic file output -----------------------------------------------------

/// Writes via a sibling temp file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn write_csv_atomic(path: &Path, f: impl FnOnce(&mut Vec<u8>) -> csv::Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    write_atomic(path, &buf)
}

// --- conjecture files ---------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct LabelledConjectures {
    pub label: String,
    pub mode: PlayMode,
    pub conjectures: ConjectureSet,
}

#[derive(Serialize)]
struct ConjectureFileEntry<'a> {
    label: &'a str,
    mode: PlayMode,
    conjectures: Box<RawValue>,
}

#[derive(Serialize)]
struct ConjectureFile<'a> {
    schema: u32,
    runs: Vec<ConjectureFileEntry<'a>>,
}

pub fn conjectures_to_json(runs: &[LabelledConjectures]) -> Result<String> {
    let entries = runs
        .iter()
        .map(|r| {
            Ok(ConjectureFileEntry {
                label: &r.label,
                mode: r.mode,
                conjectures: RawValue::from_string(r.conjectures.to_json()?)
                    .map_err(|e| Error::Input(e.to_string()))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    serde_json::to_string_pretty(&ConjectureFile {
        schema: SCHEMA_VERSION,
        runs: entries,
    })
    .map_err(|e| Error::Input(e.to_string()))
}

pub fn conjectures_from_json(text: &str) -> Result<Vec<LabelledConjectures>> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::parse("$", e.to_string()))?;
    let runs = v
        .get("runs")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::parse("$.runs", "missing array"))?;
    runs.iter()
        .enumerate()
        .map(|(k, r)| {
            let at = format!("$.runs[{k}]");
            let label = r
                .get("label")
                .and_then(Value::as_str)
                .ok_or_else(|| Error::parse(format!("{at}.label"), "missing string"))?
                .to_string();
            let mode: PlayMode = serde_json::from_value(r.get("mode").cloned().unwrap_or(Value::Null))
                .map_err(|e| Error::parse(format!("{at}.mode"), e.to_string()))?;
            let c = r
                .get("conjectures")
                .ok_or_else(|| Error::parse(format!("{at}.conjectures"), "missing"))?;
            Ok(LabelledConjectures {
                label,
                mode,
                conjectures: ConjectureSet::from_value(c, &format!("{at}.conjectures"))?,
            })
        })
        .collect()
}

pub fn load_conjectures(path: &Path) -> Result<Vec<LabelledConjectures>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    conjectures_from_json(&text)
}

// --- train ----------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct TrainOutput {
    /// Datasets per mode that has a trainable run.
    pub samples: Vec<(PlayMode, Vec<SampleSet>)>,
    pub runs: Vec<LabelledConjectures>,
    pub curves: Vec<(String, Vec<LossCurve>)>,
}

/// Generates data and trains (or instantiates) the conjectures of every
/// selected COSTAL run.
pub fn train(cfg: &ExperimentConfig, labels: Option<&[String]>) -> Result<TrainOutput> {
    let plan = cfg.select(labels)?;
    let mut samples: Vec<(PlayMode, Vec<SampleSet>)> = Vec::new();
    let mut runs = Vec::new();
    let mut curves = Vec::new();
    for p in plan.iter().filter(|p| p.spec.algorithm == Algorithm::Costal) {
        let game = cfg.build_game(p.mode)?;
        let init = cfg.initial_conjectures(p, game.as_ref())?;
        let conjectures = if p.spec.trainable() {
            if !samples.iter().any(|(m, _)| *m == p.mode) {
                samples.push((p.mode, generate_samples(game.as_ref(), &cfg.train)?));
            }
            let sets = &samples.iter().find(|(m, _)| *m == p.mode).expect("generated above").1;
            let init = scale_seeded_networks(p.spec, init, sets, cfg.train.standardize);
            let (trained, c) = train_conjectures(sets, &init, &cfg.train_config_for(p.spec))?;
            curves.push((p.label.clone(), c));
            trained
        } else {
            init
        };
        runs.push(LabelledConjectures {
            label: p.label.clone(),
            mode: p.mode,
            conjectures,
        });
    }
    Ok(TrainOutput { samples, runs, curves })
}

/// Seeded networks are drawn for unit-scale data; map them into the raw
/// coordinates of their dataset so training starts from the intended init.
fn scale_seeded_networks(spec: &RunSpec, mut set: ConjectureSet, sets: &[SampleSet], standardize: bool) -> ConjectureSet {
    if !standardize {
        return set;
    }
    let targets: Vec<(usize, crate::conjecture::Target)> = set
        .iter()
        .filter(|(owner, c)| {
            !c.frozen
                && matches!(spec.spec_for(*owner), Some(ConjectureSpec::Neural { params: None, .. }))
        })
        .map(|(owner, c)| (owner, c.target))
        .collect();
    for (owner, target) in targets {
        let Some(data) = sets.iter().find(|s| s.owner == owner && s.target == target) else {
            continue;
        };
        let scaler = Standardizer::from_pairs(&data.pairs);
        if let Some(c) = set.get_mut(owner, target) {
            c.model = scaler.to_raw(&c.model);
        }
    }
    set
}

/// `samples_<mode>.csv`, `loss_<label>.csv`, `conjectures.json`.
pub fn write_train_output(out: &Path, t: &TrainOutput) -> Result<()> {
    for (mode, sets) in &t.samples {
        write_csv_atomic(&out.join(format!("samples_{}.csv", mode_name(*mode))), |b| write_samples(sets, b))?;
    }
    for (label, c) in &t.curves {
        write_csv_atomic(&out.join(format!("loss_{label}.csv")), |b| write_losses(c, b))?;
    }
    write_atomic(&out.join(CONJECTURES_FILE), conjectures_to_json(&t.runs)?.as_bytes())
}

pub fn write_effective_config(cfg: &ExperimentConfig) -> Result<()> {
    write_atomic(&cfg.out.join(CONFIG_FILE), cfg.to_json()?.as_bytes())
}

// --- play -----------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct PlayedRun {
    pub label: String,
    pub mode: PlayMode,
    pub trace: RunTrace,
}

/// Runs every selected label. COSTAL runs take their conjectures from
/// `conjectures`; runs whose conjectures are all frozen may be built from
/// the config instead.
pub fn play(
    cfg: &ExperimentConfig,
    conjectures: Option<&[LabelledConjectures]>,
    labels: Option<&[String]>,
) -> Result<Vec<PlayedRun>> {
    let plan = cfg.select(labels)?;
    plan.par_iter()
        .map(|p| {
            let game = cfg.build_game(p.mode)?;
            let play_cfg = cfg.play_config_for(p.spec);
            let x0 = cfg.start_profile(game.as_ref());
            let trace = match p.spec.algorithm {
                Algorithm::Gd => gd_baseline_run(game.as_ref(), &play_cfg, &x0)?,
                Algorithm::Costal => {
                    let found = conjectures.and_then(|c| c.iter().find(|c| c.label == p.label));
                    let set = match found {
                        Some(c) => c.conjectures.clone(),
                        None if !p.spec.trainable() => cfg.initial_conjectures(p, game.as_ref())?,
                        None => {
                            return Err(Error::Input(format!(
                                "no trained conjectures for run `{}`; run `train` first or pass --conjectures",
                                p.label
                            )))
                        }
                    };
                    costal_run(game.as_ref(), &set, &play_cfg, &x0)?
                }
            };
            Ok(PlayedRun {
                label: p.label.clone(),
                mode: p.mode,
                trace,
            })
        })
        .collect()
}

pub fn trace_path(out: &Path, label: &str) -> PathBuf {
    out.join(format!("trace_{label}.csv"))
}

/// `trace_<label>.csv` per run plus `final_profiles.csv`
/// (`label, quantity, value`).
pub fn write_play_output(out: &Path, runs: &[PlayedRun]) -> Result<()> {
    for r in runs {
        write_csv_atomic(&trace_path(out, &r.label), |b| write_trace(&r.trace, b))?;
    }
    write_csv_atomic(&out.join("final_profiles.csv"), |b| {
        let mut w = csv::Writer::from_writer(b);
        w.write_record(["label", "quantity", "value"])?;
        for r in runs {
            let Some(last) = r.trace.last() else { continue };
            let mut put = |q: String, v: String| w.write_record([r.label.as_str(), q.as_str(), v.as_str()]);
            put("iterations".into(), last.t.to_string())?;
            put("converged".into(), r.trace.converged.to_string())?;
            for (i, x) in last.leaders.iter().enumerate() {
                put(format!("x_{}", i + 1), format_f64(*x))?;
            }
            if let Some(y) = last.follower {
                put("y".into(), format_f64(y))?;
            }
            for (i, g) in last.gradients.iter().enumerate() {
                put(format!("grad_{}", i + 1), format_f64(*g))?;
            }
            for (i, f) in last.objectives.iter().enumerate() {
                put(format!("f_{}", i + 1), format_f64(*f))?;
            }
            if let Some(g) = last.follower_objective {
                put("g".into(), format_f64(g))?;
            }
        }
        w.flush()?;
        Ok(())
    })
}

// --- analyze ----------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct BoundRow {
    pub label: String,
    pub reference: String,
    pub leader: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    pub constants: LipschitzConstants,
}

#[derive(Clone, Debug)]
pub struct AnalysisOutput {
    pub references: Option<ReferenceEquilibria>,
    pub reports: Vec<(String, EquilibriumReport)>,
    pub comparison: Option<Comparison>,
    pub bounds: Vec<BoundRow>,
    pub lipschitz: Vec<(PlayMode, LipschitzConstants)>,
}

/// Certificates, reference comparison and Lipschitz-bound checks for the
/// final profiles of `runs`. Gradient-baseline traces are certified with
/// constant conjectures at their final profile.
pub fn analyze(
    cfg: &ExperimentConfig,
    runs: &[PlayedRun],
    conjectures: Option<&[LabelledConjectures]>,
) -> Result<AnalysisOutput> {
    let refs = cfg.references()?;
    let plan = cfg.planned();
    let mut reports = Vec::new();
    let mut lipschitz: Vec<(PlayMode, LipschitzConstants)> = Vec::new();
    let mut bounds = Vec::new();
    for r in runs {
        let last = r
            .trace
            .last()
            .ok_or_else(|| Error::Input(format!("trace `{}` is empty", r.label)))?;
        let game = cfg.build_game(r.mode)?;
        let g = game.as_ref();
        if last.leaders.len() != g.leader_count() || last.follower.is_some() != g.has_follower() {
            return Err(Error::Input(format!(
                "trace `{}` does not match the {} game",
                r.label,
                mode_name(r.mode)
            )));
        }
        let planned = plan.iter().find(|p| p.label == r.label);
        let set = match planned {
            Some(p) if p.spec.algorithm == Algorithm::Costal => {
                match conjectures.and_then(|c| c.iter().find(|c| c.label == r.label)) {
                    Some(c) => c.conjectures.clone(),
                    None if !p.spec.trainable() => cfg.initial_conjectures(p, g)?,
                    None => {
                        return Err(Error::Input(format!(
                            "no conjectures for run `{}`; pass --conjectures",
                            r.label
                        )))
                    }
                }
            }
            _ => constant_conjectures(g, &last.leaders, last.follower)?,
        };
        let report = equilibrium_report(
            g,
            &set,
            &last.leaders,
            last.follower,
            refs.as_ref(),
            &cfg.analysis.tolerances,
        )?;
        reports.push((r.label.clone(), report));

        if let Some(refs) = &refs {
            let m = match lipschitz.iter().find(|(mode, _)| *mode == r.mode) {
                Some((_, m)) => *m,
                None => {
                    let m = estimate_lipschitz(g, cfg.analysis.lipschitz_samples, cfg.seed)?;
                    lipschitz.push((r.mode, m));
                    m
                }
            };
            let n = g.leader_count();
            let ceiling = refs.get(&refs.ceiling).expect("ceiling reference");
            let se = &ceiling.actions[..n];
            let floor_label = format!("{}:{}", mode_name(r.mode), refs.floor);
            let need_floor = !bounds.iter().any(|b: &BoundRow| b.label == floor_label);
            let mut push = |label: &str, other: &[f64]| -> Result<()> {
                let b = bound_check(g, se, other, m)?;
                for (i, lhs) in b.lhs.iter().enumerate() {
                    bounds.push(BoundRow {
                        label: label.to_string(),
                        reference: refs.ceiling.clone(),
                        leader: i,
                        lhs: *lhs,
                        rhs: b.rhs,
                        holds: *lhs <= b.rhs,
                        constants: m,
                    });
                }
                Ok(())
            };
            push(&r.label, &last.leaders)?;
            if need_floor {
                let floor = refs.get(&refs.floor).expect("floor reference");
                push(&floor_label, &floor.actions[..n])?;
            }
        }
    }
    let comparison = match &refs {
        Some(refs) => {
            let traces: Vec<(String, RunTrace)> = runs.iter().map(|r| (r.label.clone(), r.trace.clone())).collect();
            Some(compare_runs(&traces, refs)?)
        }
        None => None,
    };
    Ok(AnalysisOutput {
        references: refs,
        reports,
        comparison,
        bounds,
        lipschitz,
    })
}

/// Loads traces; the label is the file stem without `trace_`. Labels not in
/// the config get their mode from the trace shape.
pub fn load_traces(cfg: &ExperimentConfig, paths: &[PathBuf]) -> Result<Vec<PlayedRun>> {
    let plan = cfg.planned();
    paths
        .iter()
        .map(|path| {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            let label = stem.strip_prefix("trace_").unwrap_or(stem).to_string();
            let trace = read_trace(path)?;
            if trace.rows.is_empty() {
                return Err(Error::Input(format!("{}: trace has no rows", path.display())));
            }
            let mode = match plan.iter().find(|p| p.label == label) {
                Some(p) => p.mode,
                None if trace.has_follower => PlayMode::Stackelberg,
                None => PlayMode::Simultaneous,
            };
            Ok(PlayedRun { label, mode, trace })
        })
        .collect()
}

/// `references.csv`, `report.csv`, `report.txt`, `comparison.csv`,
/// `bounds.csv`.
pub fn write_analysis_output(out: &Path, a: &AnalysisOutput) -> Result<()> {
    if let Some(refs) = &a.references {
        write_csv_atomic(&out.join("references.csv"), |b| refs.write_csv(b))?;
    }
    write_csv_atomic(&out.join("report.csv"), |b| {
        let mut w = csv::Writer::from_writer(b);
        w.write_record(["label", "item", "value"])?;
        for (label, r) in &a.reports {
            for (item, v) in r.items() {
                w.write_record([label.as_str(), item.as_str(), &format_f64(v)])?;
            }
        }
        w.flush()?;
        Ok(())
    })?;
    if let Some(c) = &a.comparison {
        write_csv_atomic(&out.join("comparison.csv"), |b| c.write_csv(b))?;
    }
    write_csv_atomic(&out.join("bounds.csv"), |b| {
        let mut w = csv::Writer::from_writer(b);
        w.write_record(["label", "reference", "leader", "lhs", "rhs", "holds", "m1", "m2"])?;
        for r in &a.bounds {
            w.write_record([
                r.label.clone(),
                r.reference.clone(),
                (r.leader + 1).to_string(),
                format_f64(r.lhs),
                format_f64(r.rhs),
                r.holds.to_string(),
                format_f64(r.constants.m1),
                format_f64(r.constants.m2),
            ])?;
        }
        w.flush()?;
        Ok(())
    })?;
    write_atomic(&out.join("report.txt"), summary_text(a).as_bytes())
}

pub fn summary_text(a: &AnalysisOutput) -> String {
    let mut s = String::from(
        "Second differences are of the descent-form objective (negated for maximizing players); \
         positive means a local minimum of it.\n\n",
    );
    if let Some(refs) = &a.references {
        s += &format!("References ({}):\n", refs.game);
        for r in &refs.references {
            s += &format!(
                "  {:<9} [{}] actions {:?} objectives {:?}\n",
                r.name,
                r.source.as_str(),
                r.actions,
                r.objectives
            );
        }
        for (q, v) in &refs.scalars {
            s += &format!("  {q} = {v}\n");
        }
        s += "\n";
    }
    for (label, r) in &a.reports {
        s += &r.summary(label);
        s += "\n";
    }
    if let Some(c) = &a.comparison {
        s += "Final objectives:\n";
        for row in &c.rows {
            s += &format!(
                "  {:<14} f = {:?}  beats {} {:?}  below {} {:?}\n",
                row.label, row.objectives, c.floor, row.beats_floor, c.ceiling, row.below_ceiling
            );
        }
        s += "\n";
    }
    if !a.bounds.is_empty() {
        s += "Lipschitz bound |f_i(SE) - f_i(x)| <= M1 sqrt(1 + M2^2) |x_SE - x|:\n";
        for b in &a.bounds {
            s += &format!(
                "  {:<22} leader {}: {:.6e} <= {:.6e} ({})\n",
                b.label,
                b.leader + 1,
                b.lhs,
                b.rhs,
                if b.holds { "holds" } else { "VIOLATED" }
            );
        }
    }
    s
}

// --- reproduce --------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct ReproduceOutput {
    pub config: ExperimentConfig,
    pub trained: TrainOutput,
    pub played: Vec<PlayedRun>,
    pub analysis: AnalysisOutput,
}

/// Train, play and analyze with a resolved config, writing every artifact
/// under `cfg.out`.
pub fn run_all(cfg: ExperimentConfig, labels: Option<&[String]>) -> Result<ReproduceOutput> {
    let out = cfg.out.clone();
    write_effective_config(&cfg)?;
    let trained = train(&cfg, labels)?;
    write_train_output(&out, &trained)?;
    let played = play(&cfg, Some(&trained.runs), labels)?;
    write_play_output(&out, &played)?;
    let analysis = analyze(&cfg, &played, Some(&trained.runs))?;
    write_analysis_output(&out, &analysis)?;
    Ok(ReproduceOutput {
        config: cfg,
        trained,
        played,
        analysis,
    })
}

/// Runs a shipped experiment (`olsder` or `dilemma`).
pub fn reproduce(name: &str, out: Option<&Path>, seed: Option<u64>, labels: Option<&[String]>) -> Result<ReproduceOutput> {
    let cfg = ExperimentConfig::builtin(name)?.resolve(seed, out)?;
    run_all(cfg, labels)
}

/// Final objectives keyed by label, for quick lookups.
pub fn final_objectives(runs: &[PlayedRun]) -> BTreeMap<String, Vec<f64>> {
    runs.iter()
        .filter_map(|r| {
            r.trace.last().map(|l| {
                (
                    r.label.clone(),
                    l.objectives.iter().copied().chain(l.follower_objective).collect(),
                )
            })
        })
        .collect()
}
