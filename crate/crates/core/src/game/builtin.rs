use serde::{Deserialize, Serialize};

use super::linear::LinearQuadraticParams;
use super::{ActionBox, Game, LeadersDilemma, LinearQuadratic, Olsder, PlayMode, Sense, OLSDER_DEFAULT_CAP};
use crate::error::{Error, Result};

/// Lipschitz constants of the leaders' objectives (M1) and of the follower
/// best response (M2).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzConstants {
    pub m1: f64,
    pub m2: f64,
}

/// Game selection as it appears in experiment configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GameConfig {
    LeadersDilemma {
        k: f64,
        #[serde(default = "default_dilemma_box")]
        bounds: ActionBox,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lipschitz: Option<LipschitzConstants>,
    },
    Olsder {
        #[serde(default = "default_cap")]
        cap: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lipschitz: Option<LipschitzConstants>,
    },
    LinearQuadratic {
        a: Vec<f64>,
        b: Vec<Vec<f64>>,
        c: Vec<f64>,
        #[serde(default = "default_sense")]
        sense: Sense,
        follower_curvature: f64,
        follower_weights: Vec<f64>,
        #[serde(default)]
        follower_offset: f64,
        leader_bounds: ActionBox,
        follower_bounds: ActionBox,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lipschitz: Option<LipschitzConstants>,
    },
}

fn default_dilemma_box() -> ActionBox {
    ActionBox::new(-2.0, 2.0).expect("static box")
}

fn default_cap() -> f64 {
    OLSDER_DEFAULT_CAP
}

fn default_sense() -> Sense {
    Sense::Minimize
}

/// A built-in game plus optional configured Lipschitz constants.
struct Configured<G> {
    inner: G,
    lipschitz: Option<LipschitzConstants>,
}

macro_rules! delegate_game {
    () => {
        fn name(&self) -> &str {
            self.inner.name()
        }
        fn leader_count(&self) -> usize {
            self.inner.leader_count()
        }
        fn leader_box(&self, leader: usize) -> ActionBox {
            self.inner.leader_box(leader)
        }
        fn follower_box(&self) -> Option<ActionBox> {
            self.inner.follower_box()
        }
        fn sense(&self, player: super::Player) -> Sense {
            self.inner.sense(player)
        }
        fn objective(&self, player: super::Player, leaders: &[f64], follower: Option<f64>) -> f64 {
            self.inner.objective(player, leaders, follower)
        }
        fn leader_partials(&self, leader: usize, leaders: &[f64], follower: Option<f64>) -> super::Partials {
            self.inner.leader_partials(leader, leaders, follower)
        }
        fn follower_derivative(&self, leaders: &[f64], follower: f64) -> f64 {
            self.inner.follower_derivative(leaders, follower)
        }
        fn follower_response(&self, leaders: &[f64]) -> Option<f64> {
            self.inner.follower_response(leaders)
        }
        fn leader_response(&self, leader: usize, leaders: &[f64], follower: Option<f64>) -> Option<f64> {
            self.inner.leader_response(leader, leaders, follower)
        }
        fn follower_response_slope(&self, leaders: &[f64], wrt: usize) -> Option<f64> {
            self.inner.follower_response_slope(leaders, wrt)
        }
        fn leader_response_slope(&self, leader: usize, wrt: usize, leaders: &[f64], follower: Option<f64>) -> Option<f64> {
            self.inner.leader_response_slope(leader, wrt, leaders, follower)
        }
        fn lipschitz(&self) -> Option<LipschitzConstants> {
            self.lipschitz
        }
    };
}

impl<G: Game> Game for Configured<G> {
    delegate_game!();
}

impl GameConfig {
    /// Instantiates the game for the requested play mode.
    ///
    /// Olsder's game changes structure with the mode; the other built-in
    /// games always have a follower and reject simultaneous play.
    pub fn build(&self, mode: PlayMode) -> Result<Box<dyn Game>> {
        match self {
            GameConfig::LeadersDilemma { k, bounds, lipschitz } => {
                require_stackelberg(mode, "leaders_dilemma")?;
                Ok(Box::new(Configured {
                    inner: LeadersDilemma::with_box(*k, *bounds)?,
                    lipschitz: check_lipschitz(*lipschitz)?,
                }))
            }
            GameConfig::Olsder { cap, lipschitz } => Ok(Box::new(Configured {
                inner: Olsder::new(mode, *cap)?,
                lipschitz: check_lipschitz(*lipschitz)?,
            })),
            GameConfig::LinearQuadratic {
                a,
                b,
                c,
                sense,
                follower_curvature,
                follower_weights,
                follower_offset,
                leader_bounds,
                follower_bounds,
                lipschitz,
            } => {
                require_stackelberg(mode, "linear_quadratic")?;
                let inner = LinearQuadratic::new(LinearQuadraticParams {
                    own: a.clone(),
                    cross: b.clone(),
                    follower_weight: c.clone(),
                    sense: *sense,
                    curvature: *follower_curvature,
                    response_weights: follower_weights.clone(),
                    response_offset: *follower_offset,
                    leader_bounds: *leader_bounds,
                    follower_bounds: *follower_bounds,
                })?;
                Ok(Box::new(Configured {
                    inner,
                    lipschitz: check_lipschitz(*lipschitz)?,
                }))
            }
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            GameConfig::LeadersDilemma { .. } => "leaders_dilemma",
            GameConfig::Olsder { .. } => "olsder",
            GameConfig::LinearQuadratic { .. } => "linear_quadratic",
        }
    }
}

fn require_stackelberg(mode: PlayMode, kind: &str) -> Result<()> {
    match mode {
        PlayMode::Stackelberg => Ok(()),
        PlayMode::Simultaneous => Err(Error::config(
            "mode",
            format!("{kind} has a follower and only supports stackelberg play"),
        )),
    }
}

fn check_lipschitz(l: Option<LipschitzConstants>) -> Result<Option<LipschitzConstants>> {
    if let Some(c) = l {
        if !(c.m1 > 0.0 && c.m2 >= 0.0 && c.m1.is_finite() && c.m2.is_finite()) {
            return Err(Error::config("game.lipschitz", "need m1 > 0 and m2 >= 0"));
        }
    }
    Ok(l)
}
