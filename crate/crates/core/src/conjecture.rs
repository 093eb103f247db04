//! Conjecture models: scalar maps from a leader's own action to a predicted
//! peer (or follower) action.
//!
//! Every model exposes its value, the exact derivative in the input, and the
//! gradient of the squared prediction error with respect to its parameters.
//! Conjecture sets serialize to a JSON document whose numbers carry 17
//! significant digits, so a round-trip is bit-exact.

use rand::Rng;
use serde::Serialize;
use serde_json::value::RawValue;
use serde_json::Value;

use crate::error::{Error, Result};

/// One-hidden-layer tanh network `b2 + sum_h w2[h] tanh(w1[h] x + b1[h])`.
#[derive(Clone, Debug, PartialEq)]
pub struct NeuralNet {
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: f64,
}

impl NeuralNet {
    pub fn new(w1: Vec<f64>, b1: Vec<f64>, w2: Vec<f64>, b2: f64) -> Result<Self> {
        let h = w1.len();
        if h == 0 {
            return Err(Error::Input("hidden width must be positive".into()));
        }
        if b1.len() != h || w2.len() != h {
            return Err(Error::Input(format!(
                "hidden width {h} but b1 has {} and w2 has {} entries",
                b1.len(),
                w2.len()
            )));
        }
        Ok(NeuralNet { w1, b1, w2, b2 })
    }

    /// Per-layer fan-in scaling: hidden weights and biases from `U(-1, 1)`
    /// (fan-in 1), output weights and bias from `U(-1/sqrt(H), 1/sqrt(H))`.
    pub fn seeded<R: Rng + ?Sized>(width: usize, rng: &mut R) -> Result<Self> {
        if width == 0 {
            return Err(Error::Input("hidden width must be positive".into()));
        }
        let scale = 1.0 / (width as f64).sqrt();
        let w1 = (0..width).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b1 = (0..width).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w2 = (0..width).map(|_| rng.gen_range(-scale..scale)).collect();
        let b2 = rng.gen_range(-scale..scale);
        NeuralNet::new(w1, b1, w2, b2)
    }

    pub fn width(&self) -> usize {
        self.w1.len()
    }

    pub fn w1(&self) -> &[f64] {
        &self.w1
    }

    pub fn b1(&self) -> &[f64] {
        &self.b1
    }

    pub fn w2(&self) -> &[f64] {
        &self.w2
    }

    pub fn b2(&self) -> f64 {
        self.b2
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ConjectureModel {
    /// `a x + b`
    Affine { a: f64, b: f64 },
    /// `sum_g c_g x^g`
    Polynomial { coefficients: Vec<f64> },
    Neural(NeuralNet),
}

impl ConjectureModel {
    /// The fixed `x^2` conjecture.
    pub fn quadratic() -> Self {
        ConjectureModel::Polynomial {
            coefficients: vec![0.0, 0.0, 1.0],
        }
    }

    /// The fixed `x^2 + x` conjecture.
    pub fn quadratic_11() -> Self {
        ConjectureModel::Polynomial {
            coefficients: vec![0.0, 1.0, 1.0],
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ConjectureModel::Affine { .. } => "affine",
            ConjectureModel::Polynomial { .. } => "polynomial",
            ConjectureModel::Neural(_) => "neural",
        }
    }

    pub fn predict(&self, x: f64) -> f64 {
        match self {
            ConjectureModel::Affine { a, b } => a * x + b,
            ConjectureModel::Polynomial { coefficients } => {
                coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
            }
            ConjectureModel::Neural(net) => {
                let mut out = net.b2;
                for h in 0..net.width() {
                    out += net.w2[h] * (net.w1[h] * x + net.b1[h]).tanh();
                }
                out
            }
        }
    }

    /// Exact derivative of [`predict`](Self::predict) in `x`.
    pub fn input_derivative(&self, x: f64) -> f64 {
        match self {
            ConjectureModel::Affine { a, .. } => *a,
            ConjectureModel::Polynomial { coefficients } => coefficients
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (g, c)| acc * x + g as f64 * c),
            ConjectureModel::Neural(net) => {
                let mut out = 0.0;
                for h in 0..net.width() {
                    let t = (net.w1[h] * x + net.b1[h]).tanh();
                    out += net.w2[h] * net.w1[h] * (1.0 - t * t);
                }
                out
            }
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            ConjectureModel::Affine { .. } => 2,
            ConjectureModel::Polynomial { coefficients } => coefficients.len(),
            ConjectureModel::Neural(net) => 3 * net.width() + 1,
        }
    }

    /// Parameter vector: `(a, b)`, `(c_0..c_G)`, or `(w1, b1, w2, b2)`.
    pub fn params(&self) -> Vec<f64> {
        match self {
            ConjectureModel::Affine { a, b } => vec![*a, *b],
            ConjectureModel::Polynomial { coefficients } => coefficients.clone(),
            ConjectureModel::Neural(net) => {
                let mut v = Vec::with_capacity(self.param_count());
                v.extend(&net.w1);
                v.extend(&net.b1);
                v.extend(&net.w2);
                v.push(net.b2);
                v
            }
        }
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::Input(format!(
                "{} model has {} parameters, got {}",
                self.kind(),
                self.param_count(),
                params.len()
            )));
        }
        match self {
            ConjectureModel::Affine { a, b } => {
                *a = params[0];
                *b = params[1];
            }
            ConjectureModel::Polynomial { coefficients } => coefficients.copy_from_slice(params),
            ConjectureModel::Neural(net) => {
                let h = net.width();
                net.w1.copy_from_slice(&params[..h]);
                net.b1.copy_from_slice(&params[h..2 * h]);
                net.w2.copy_from_slice(&params[2 * h..3 * h]);
                net.b2 = params[3 * h];
            }
        }
        Ok(())
    }

    /// Gradient of `0.5 * residual^2` in the parameters, where
    /// `residual = target - predict(x)`; i.e. `-residual * d predict / d theta`.
    pub fn parameter_gradient(&self, x: f64, residual: f64) -> Vec<f64> {
        let mut grad = vec![0.0; self.param_count()];
        self.accumulate_parameter_gradient(x, residual, 1.0, &mut grad);
        grad
    }

    /// Adds `weight * parameter_gradient(x, residual)` into `out`.
    pub(crate) fn accumulate_parameter_gradient(&self, x: f64, residual: f64, weight: f64, out: &mut [f64]) {
        let r = -residual * weight;
        match self {
            ConjectureModel::Affine { .. } => {
                out[0] += r * x;
                out[1] += r;
            }
            ConjectureModel::Polynomial { coefficients } => {
                let mut p = 1.0;
                for slot in out.iter_mut().take(coefficients.len()) {
                    *slot += r * p;
                    p *= x;
                }
            }
            ConjectureModel::Neural(net) => {
                let h = net.width();
                for k in 0..h {
                    let t = (net.w1[k] * x + net.b1[k]).tanh();
                    let dz = net.w2[k] * (1.0 - t * t);
                    out[k] += r * dz * x;
                    out[h + k] += r * dz;
                    out[2 * h + k] += r * t;
                }
                out[3 * h] += r;
            }
        }
    }

    /// Affine change of coordinates on both sides of the map.
    ///
    /// Returns the model `m'` with `m'(u) = (m(in_shift + in_scale * u) - out_shift) / out_scale`,
    /// expressed in the same family.
    pub fn rescaled(&self, in_shift: f64, in_scale: f64, out_shift: f64, out_scale: f64) -> Self {
        match self {
            ConjectureModel::Affine { a, b } => ConjectureModel::Affine {
                a: a * in_scale / out_scale,
                b: (a * in_shift + b - out_shift) / out_scale,
            },
            ConjectureModel::Polynomial { coefficients } => {
                let g_max = coefficients.len();
                let mut out = vec![0.0; g_max];
                // (s + c u)^g = sum_m C(g, m) s^(g-m) c^m u^m
                for (g, &cg) in coefficients.iter().enumerate() {
                    let mut binom = 1.0;
                    for (m, slot) in out.iter_mut().enumerate().take(g + 1) {
                        *slot += cg * binom * in_shift.powi((g - m) as i32) * in_scale.powi(m as i32);
                        binom = binom * (g - m) as f64 / (m + 1) as f64;
                    }
                }
                out[0] -= out_shift;
                for c in &mut out {
                    *c /= out_scale;
                }
                ConjectureModel::Polynomial { coefficients: out }
            }
            ConjectureModel::Neural(net) => ConjectureModel::Neural(NeuralNet {
                w1: net.w1.iter().map(|w| w * in_scale).collect(),
                b1: net
                    .b1
                    .iter()
                    .zip(&net.w1)
                    .map(|(b, w)| b + w * in_shift)
                    .collect(),
                w2: net.w2.iter().map(|w| w / out_scale).collect(),
                b2: (net.b2 - out_shift) / out_scale,
            }),
        }
    }

    fn is_finite(&self) -> bool {
        self.params().iter().all(|v| v.is_finite())
    }
}

/// Whose action a conjecture predicts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Target {
    Leader(usize),
    Follower,
}

impl std::fmt::Display for Target {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Target::Leader(j) => write!(f, "{}", j + 1),
            Target::Follower => write!(f, "y"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Conjecture {
    pub target: Target,
    pub model: ConjectureModel,
    /// Frozen conjectures are never touched by the trainer.
    pub frozen: bool,
}

/// Conjectures held by one leader.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct LeaderConjectures {
    /// One conjecture per other leader, in increasing leader order.
    pub about: Vec<Conjecture>,
    pub follower: Option<Conjecture>,
}

/// All leaders' conjectures about their peers and the follower.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ConjectureSet {
    pub leaders: Vec<LeaderConjectures>,
}

impl ConjectureSet {
    /// Builds a set where every conjecture comes from `make(owner, target)`.
    pub fn from_fn<F>(leader_count: usize, with_follower: bool, mut make: F) -> Result<Self>
    where
        F: FnMut(usize, Target) -> Result<(ConjectureModel, bool)>,
    {
        let mut leaders = Vec::with_capacity(leader_count);
        for i in 0..leader_count {
            let mut about = Vec::new();
            for j in (0..leader_count).filter(|&j| j != i) {
                let (model, frozen) = make(i, Target::Leader(j))?;
                about.push(Conjecture {
                    target: Target::Leader(j),
                    model,
                    frozen,
                });
            }
            let follower = if with_follower {
                let (model, frozen) = make(i, Target::Follower)?;
                Some(Conjecture {
                    target: Target::Follower,
                    model,
                    frozen,
                })
            } else {
                None
            };
            leaders.push(LeaderConjectures { about, follower });
        }
        Ok(ConjectureSet { leaders })
    }

    pub fn leader_count(&self) -> usize {
        self.leaders.len()
    }

    /// Leader `owner`'s conjecture about leader `target`.
    pub fn about(&self, owner: usize, target: usize) -> Option<&Conjecture> {
        self.leaders
            .get(owner)?
            .about
            .iter()
            .find(|c| c.target == Target::Leader(target))
    }

    pub fn follower(&self, owner: usize) -> Option<&Conjecture> {
        self.leaders.get(owner)?.follower.as_ref()
    }

    pub fn get(&self, owner: usize, target: Target) -> Option<&Conjecture> {
        match target {
            Target::Leader(j) => self.about(owner, j),
            Target::Follower => self.follower(owner),
        }
    }

    pub fn get_mut(&mut self, owner: usize, target: Target) -> Option<&mut Conjecture> {
        let lc = self.leaders.get_mut(owner)?;
        match target {
            Target::Leader(j) => lc.about.iter_mut().find(|c| c.target == Target::Leader(j)),
            Target::Follower => lc.follower.as_mut(),
        }
    }

    /// (owner, conjecture) pairs in owner order, peers before the follower.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &Conjecture)> {
        self.leaders
            .iter()
            .enumerate()
            .flat_map(|(i, lc)| lc.about.iter().chain(lc.follower.iter()).map(move |c| (i, c)))
    }

    /// Checks the set matches an `n`-leader game: `n (n - 1)` peer
    /// conjectures plus one follower conjecture per leader when the game has
    /// a follower.
    pub fn validate(&self, leader_count: usize, with_follower: bool) -> Result<()> {
        if self.leaders.len() != leader_count {
            return Err(Error::config(
                "conjectures.leaders",
                format!("expected {leader_count} leaders, found {}", self.leaders.len()),
            ));
        }
        for (i, lc) in self.leaders.iter().enumerate() {
            for j in (0..leader_count).filter(|&j| j != i) {
                let n = lc.about.iter().filter(|c| c.target == Target::Leader(j)).count();
                if n != 1 {
                    return Err(Error::config(
                        format!("conjectures.leaders[{i}].about"),
                        format!("expected exactly one conjecture about leader {}, found {n}", j + 1),
                    ));
                }
            }
            if lc.about.len() != leader_count - 1 {
                return Err(Error::config(
                    format!("conjectures.leaders[{i}].about"),
                    format!("expected {} conjectures, found {}", leader_count - 1, lc.about.len()),
                ));
            }
            if lc.follower.is_some() != with_follower {
                let reason = if with_follower {
                    "missing follower conjecture"
                } else {
                    "game has no follower but a follower conjecture is present"
                };
                return Err(Error::config(format!("conjectures.leaders[{i}].follower"), reason));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = DocOut {
            leaders: self
                .leaders
                .iter()
                .enumerate()
                .map(|(i, lc)| -> Result<LeaderOut> {
                    Ok(LeaderOut {
                        about: lc
                            .about
                            .iter()
                            .enumerate()
                            .map(|(k, c)| conj_out(c, &format!("leaders[{i}].about[{k}]")))
                            .collect::<Result<_>>()?,
                        follower: lc
                            .follower
                            .as_ref()
                            .map(|c| conj_out(c, &format!("leaders[{i}].follower")))
                            .transpose()?,
                    })
                })
                .collect::<Result<_>>()?,
        };
        serde_json::to_string_pretty(&doc).map_err(|e| Error::parse("conjectures", e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| Error::parse("$", e.to_string()))?;
        parse_set(&v, "$")
    }

    /// Parses a set from an already-decoded JSON value; `path` prefixes
    /// error locations.
    pub fn from_value(v: &Value, path: &str) -> Result<Self> {
        parse_set(v, path)
    }
}

// --- serialization -------------------------------------------------------

#[derive(Serialize)]
struct DocOut {
    leaders: Vec<LeaderOut>,
}

#[derive(Serialize)]
struct LeaderOut {
    about: Vec<ConjOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    follower: Option<ConjOut>,
}

#[derive(Serialize)]
struct ConjOut {
    #[serde(skip_serializing_if = "Option::is_none")]
    target: Option<usize>,
    kind: &'static str,
    frozen: bool,
    params: ParamsOut,
}

#[derive(Serialize)]
#[serde(untagged)]
enum ParamsOut {
    Affine {
        a: Box<RawValue>,
        b: Box<RawValue>,
    },
    Polynomial {
        coefficients: Vec<Box<RawValue>>,
    },
    Neural {
        hidden_width: usize,
        w1: Vec<Box<RawValue>>,
        b1: Vec<Box<RawValue>>,
        w2: Vec<Box<RawValue>>,
        b2: Box<RawValue>,
    },
}

/// Decimal literal with 17 significant digits.
fn number(v: f64, path: &str) -> Result<Box<RawValue>> {
    if !v.is_finite() {
        return Err(Error::parse(path, format!("cannot serialize non-finite value {v}")));
    }
    RawValue::from_string(format!("{v:.16e}")).map_err(|e| Error::parse(path, e.to_string()))
}

fn numbers(vs: &[f64], path: &str) -> Result<Vec<Box<RawValue>>> {
    vs.iter().map(|&v| number(v, path)).collect()
}

fn conj_out(c: &Conjecture, path: &str) -> Result<ConjOut> {
    let params = match &c.model {
        ConjectureModel::Affine { a, b } => ParamsOut::Affine {
            a: number(*a, path)?,
            b: number(*b, path)?,
        },
        ConjectureModel::Polynomial { coefficients } => ParamsOut::Polynomial {
            coefficients: numbers(coefficients, path)?,
        },
        ConjectureModel::Neural(net) => ParamsOut::Neural {
            hidden_width: net.width(),
            w1: numbers(&net.w1, path)?,
            b1: numbers(&net.b1, path)?,
            w2: numbers(&net.w2, path)?,
            b2: number(net.b2, path)?,
        },
    };
    Ok(ConjOut {
        target: match c.target {
            Target::Leader(j) => Some(j + 1),
            Target::Follower => None,
        },
        kind: c.model.kind(),
        frozen: c.frozen,
        params,
    })
}

// --- parsing ---------------------------------------------------------------

fn field<'a>(v: &'a Value, key: &str, path: &str) -> Result<&'a Value> {
    v.get(key)
        .ok_or_else(|| Error::parse(format!("{path}.{key}"), "missing field"))
}

fn as_f64(v: &Value, path: &str) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| Error::parse(path, format!("expected a number, found {v}")))
}

fn as_vec(v: &Value, path: &str) -> Result<Vec<f64>> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::parse(path, "expected an array of numbers"))?;
    arr.iter()
        .enumerate()
        .map(|(k, x)| as_f64(x, &format!("{path}[{k}]")))
        .collect()
}

fn parse_set(v: &Value, path: &str) -> Result<ConjectureSet> {
    let leaders = field(v, "leaders", path)?
        .as_array()
        .ok_or_else(|| Error::parse(format!("{path}.leaders"), "expected an array"))?;
    let mut out = Vec::with_capacity(leaders.len());
    for (i, lv) in leaders.iter().enumerate() {
        let lpath = format!("{path}.leaders[{i}]");
        let about_v = field(lv, "about", &lpath)?
            .as_array()
            .ok_or_else(|| Error::parse(format!("{lpath}.about"), "expected an array"))?;
        let mut about = Vec::with_capacity(about_v.len());
        for (k, cv) in about_v.iter().enumerate() {
            let cpath = format!("{lpath}.about[{k}]");
            let tv = field(cv, "target", &cpath)?;
            let j = tv
                .as_u64()
                .filter(|&j| j >= 1)
                .ok_or_else(|| Error::parse(format!("{cpath}.target"), "expected a leader number >= 1"))?;
            let target = Target::Leader(j as usize - 1);
            if target == Target::Leader(i) {
                return Err(Error::parse(format!("{cpath}.target"), "a leader cannot conjecture about itself"));
            }
            about.push(parse_conjecture(cv, target, &cpath)?);
        }
        let follower = match lv.get("follower") {
            None | Some(Value::Null) => None,
            Some(fv) => Some(parse_conjecture(fv, Target::Follower, &format!("{lpath}.follower"))?),
        };
        out.push(LeaderConjectures { about, follower });
    }
    Ok(ConjectureSet { leaders: out })
}

fn parse_conjecture(v: &Value, target: Target, path: &str) -> Result<Conjecture> {
    let kind = field(v, "kind", path)?
        .as_str()
        .ok_or_else(|| Error::parse(format!("{path}.kind"), "expected a string"))?;
    let frozen = match v.get("frozen") {
        None => false,
        Some(f) => f
            .as_bool()
            .ok_or_else(|| Error::parse(format!("{path}.frozen"), "expected a boolean"))?,
    };
    let ppath = format!("{path}.params");
    let params = field(v, "params", path)?;
    let model = match kind {
        "affine" => ConjectureModel::Affine {
            a: as_f64(field(params, "a", &ppath)?, &format!("{ppath}.a"))?,
            b: as_f64(field(params, "b", &ppath)?, &format!("{ppath}.b"))?,
        },
        "polynomial" => {
            let coefficients = as_vec(field(params, "coefficients", &ppath)?, &format!("{ppath}.coefficients"))?;
            if coefficients.is_empty() {
                return Err(Error::parse(format!("{ppath}.coefficients"), "need at least one coefficient"));
            }
            ConjectureModel::Polynomial { coefficients }
        }
        "neural" => {
            let width = field(params, "hidden_width", &ppath)?
                .as_u64()
                .filter(|&h| h > 0)
                .ok_or_else(|| Error::parse(format!("{ppath}.hidden_width"), "expected a positive integer"))?
                as usize;
            let mut arrays = Vec::with_capacity(3);
            for key in ["w1", "b1", "w2"] {
                let kpath = format!("{ppath}.{key}");
                let arr = as_vec(field(params, key, &ppath)?, &kpath)?;
                if arr.len() != width {
                    return Err(Error::parse(
                        kpath,
                        format!("hidden_width is {width} but found {} entries", arr.len()),
                    ));
                }
                arrays.push(arr);
            }
            let b2 = as_f64(field(params, "b2", &ppath)?, &format!("{ppath}.b2"))?;
            let w2 = arrays.pop().unwrap_or_default();
            let b1 = arrays.pop().unwrap_or_default();
            let w1 = arrays.pop().unwrap_or_default();
            ConjectureModel::Neural(NeuralNet::new(w1, b1, w2, b2)?)
        }
        other => {
            return Err(Error::parse(
                format!("{path}.kind"),
                format!("unknown conjecture kind `{other}` (expected affine, polynomial or neural)"),
            ))
        }
    };
    if !model.is_finite() {
        return Err(Error::parse(ppath, "parameters must be finite"));
    }
    Ok(Conjecture { target, model, frozen })
}
