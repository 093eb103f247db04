//! Multi-leader single-follower games with scalar actions.
//!
//! A [`Game`] exposes raw objective values and analytic first partials. The
//! free functions in this module (`evaluate`, `partials`, the best-response
//! oracles) are the checked entry points: they validate that profiles lie in
//! the action boxes before touching the objectives. Dynamics and training
//! call the trait methods directly because conjectured profiles are allowed
//! to leave the boxes.

mod builtin;
mod dilemma;
mod linear;
mod olsder;
mod scalar;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use builtin::{GameConfig, LipschitzConstants};
pub use dilemma::LeadersDilemma;
pub use linear::{LinearQuadratic, LinearQuadraticParams};
pub use olsder::{Olsder, OLSDER_DEFAULT_CAP};
pub use scalar::{solve_scalar_box, SCALAR_MAX_ITERATIONS};

/// Closed interval of feasible actions for one player.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBox", into = "RawBox")]
pub struct ActionBox {
    lower: f64,
    upper: f64,
}

#[derive(Serialize, Deserialize)]
struct RawBox {
    lower: f64,
    upper: f64,
}

impl TryFrom<RawBox> for ActionBox {
    type Error = Error;
    fn try_from(raw: RawBox) -> Result<Self> {
        ActionBox::new(raw.lower, raw.upper)
    }
}

impl From<ActionBox> for RawBox {
    fn from(b: ActionBox) -> Self {
        RawBox {
            lower: b.lower,
            upper: b.upper,
        }
    }
}

impl ActionBox {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite()) || lower >= upper {
            return Err(Error::config(
                "box",
                format!("need finite lower < upper, got [{lower}, {upper}]"),
            ));
        }
        Ok(ActionBox { lower, upper })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower && x <= self.upper
    }

    /// Euclidean projection onto the box. NaN stays NaN.
    pub fn project(&self, x: f64) -> f64 {
        x.clamp(self.lower, self.upper)
    }

    pub fn is_interior(&self, x: f64) -> bool {
        x > self.lower && x < self.upper
    }

    /// Projected-gradient residual `|P(x - g) - x|` of a descent direction `g`.
    pub fn projected_residual(&self, x: f64, g: f64) -> f64 {
        (self.project(x - g) - x).abs()
    }

    /// Stationarity residual that ignores the step length: zero when `g`
    /// pushes against an active bound, `|g|` otherwise.
    pub fn stationarity(&self, x: f64, g: f64) -> f64 {
        if (x <= self.lower && g > 0.0) || (x >= self.upper && g < 0.0) {
            0.0
        } else {
            g.abs()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Minimize,
    Maximize,
}

impl Sense {
    /// Multiplier turning the raw objective into a minimization objective.
    pub fn descent_sign(self) -> f64 {
        match self {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        }
    }

    /// Whether `a` is at least as good as `b` for a player with this sense.
    pub fn at_least_as_good(self, a: f64, b: f64) -> bool {
        match self {
            Sense::Minimize => a <= b,
            Sense::Maximize => a >= b,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Player {
    Leader(usize),
    Follower,
}

impl std::fmt::Display for Player {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Player::Leader(i) => write!(f, "leader {}", i + 1),
            Player::Follower => write!(f, "follower"),
        }
    }
}

/// Whether a follower best-responds to the leaders (Stackelberg play) or all
/// players are leaders moving simultaneously.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlayMode {
    #[default]
    Stackelberg,
    Simultaneous,
}

impl PlayMode {
    /// Label prefix used for run names (`S_`, `N_`).
    pub fn prefix(self) -> &'static str {
        match self {
            PlayMode::Stackelberg => "S",
            PlayMode::Simultaneous => "N",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyProfile {
    pub leaders: Vec<f64>,
    pub follower: Option<f64>,
}

impl StrategyProfile {
    pub fn new(leaders: Vec<f64>, follower: Option<f64>) -> Self {
        StrategyProfile { leaders, follower }
    }

    /// Leader actions followed by the follower action, when present.
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = self.leaders.clone();
        v.extend(self.follower);
        v
    }
}

/// First partial derivatives of one leader's raw objective.
///
/// `others` is indexed by leader; the owner's own slot is always zero (its
/// derivative lives in `own`). `follower` is zero for games without one.
#[derive(Clone, Debug, PartialEq)]
pub struct Partials {
    pub own: f64,
    pub others: Vec<f64>,
    pub follower: f64,
}

/// A multi-leader single-follower game with scalar actions.
///
/// All methods are unchecked: arguments may lie outside the action boxes.
/// Implementations must be pure.
pub trait Game: Send + Sync {
    fn name(&self) -> &str;

    fn leader_count(&self) -> usize;

    fn leader_box(&self, leader: usize) -> ActionBox;

    /// `None` when the game has no follower (simultaneous play).
    fn follower_box(&self) -> Option<ActionBox>;

    fn sense(&self, player: Player) -> Sense;

    /// Raw objective value of `player` (f_i for leaders, g for the follower).
    fn objective(&self, player: Player, leaders: &[f64], follower: Option<f64>) -> f64;

    fn leader_partials(&self, leader: usize, leaders: &[f64], follower: Option<f64>) -> Partials;

    /// Raw derivative of the follower objective with respect to its action.
    fn follower_derivative(&self, leaders: &[f64], follower: f64) -> f64;

    /// Closed-form follower best response, if the game has one.
    fn follower_response(&self, _leaders: &[f64]) -> Option<f64> {
        None
    }

    /// Closed-form best response of `leader` with everyone else fixed.
    fn leader_response(&self, _leader: usize, _leaders: &[f64], _follower: Option<f64>) -> Option<f64> {
        None
    }

    /// Closed-form derivative of the follower best response w.r.t. leader `wrt`.
    fn follower_response_slope(&self, _leaders: &[f64], _wrt: usize) -> Option<f64> {
        None
    }

    /// Closed-form derivative of `leader`'s best response w.r.t. leader `wrt`.
    fn leader_response_slope(
        &self,
        _leader: usize,
        _wrt: usize,
        _leaders: &[f64],
        _follower: Option<f64>,
    ) -> Option<f64> {
        None
    }

    /// Lipschitz constants (M1, M2) supplied by configuration, if any.
    fn lipschitz(&self) -> Option<LipschitzConstants> {
        None
    }

    fn has_follower(&self) -> bool {
        self.follower_box().is_some()
    }

    fn mode(&self) -> PlayMode {
        if self.has_follower() {
            PlayMode::Stackelberg
        } else {
            PlayMode::Simultaneous
        }
    }

    /// Number of players including the follower.
    fn player_count(&self) -> usize {
        self.leader_count() + usize::from(self.has_follower())
    }
}

fn check_value(name: String, value: f64, b: ActionBox) -> Result<()> {
    if b.contains(value) {
        Ok(())
    } else {
        Err(Error::Domain {
            coordinate: name,
            value,
            lower: b.lower(),
            upper: b.upper(),
        })
    }
}

pub(crate) fn check_leaders(game: &dyn Game, leaders: &[f64]) -> Result<()> {
    if leaders.len() != game.leader_count() {
        return Err(Error::Input(format!(
            "{} expects {} leader actions, got {}",
            game.name(),
            game.leader_count(),
            leaders.len()
        )));
    }
    for (i, &x) in leaders.iter().enumerate() {
        check_value(format!("x_{}", i + 1), x, game.leader_box(i))?;
    }
    Ok(())
}

pub(crate) fn check_follower(game: &dyn Game, follower: Option<f64>) -> Result<()> {
    match (game.follower_box(), follower) {
        (Some(b), Some(y)) => check_value("y".into(), y, b),
        (None, None) => Ok(()),
        (Some(_), None) => Err(Error::Input(format!(
            "{} has a follower but the profile has no follower action",
            game.name()
        ))),
        (None, Some(_)) => Err(Error::Input(format!(
            "{} has no follower but the profile carries a follower action",
            game.name()
        ))),
    }
}

/// Validates dimensions and box membership of a full profile.
pub fn check_profile(game: &dyn Game, profile: &StrategyProfile) -> Result<()> {
    check_leaders(game, &profile.leaders)?;
    check_follower(game, profile.follower)
}

fn check_player(game: &dyn Game, player: Player) -> Result<()> {
    match player {
        Player::Leader(i) if i < game.leader_count() => Ok(()),
        Player::Follower if game.has_follower() => Ok(()),
        _ => Err(Error::Input(format!("{} has no {player}", game.name()))),
    }
}

/// Raw objective value of `player` at `profile`.
pub fn evaluate(game: &dyn Game, profile: &StrategyProfile, player: Player) -> Result<f64> {
    check_player(game, player)?;
    check_profile(game, profile)?;
    Ok(game.objective(player, &profile.leaders, profile.follower))
}

/// Analytic first partials of `player`'s raw objective.
///
/// For the follower only the derivative in its own action is defined; it is
/// returned in `own` and the remaining fields are empty/zero.
pub fn partials(game: &dyn Game, profile: &StrategyProfile, player: Player) -> Result<Partials> {
    check_player(game, player)?;
    check_profile(game, profile)?;
    Ok(match player {
        Player::Leader(i) => game.leader_partials(i, &profile.leaders, profile.follower),
        Player::Follower => Partials {
            own: game.follower_derivative(&profile.leaders, profile.follower.unwrap_or_default()),
            others: Vec::new(),
            follower: 0.0,
        },
    })
}

/// Optimal follower action for fixed leader actions (unchecked).
pub(crate) fn follower_response_unchecked(game: &dyn Game, leaders: &[f64]) -> Result<f64> {
    let b = game
        .follower_box()
        .ok_or_else(|| Error::Input(format!("{} has no follower", game.name())))?;
    if let Some(y) = game.follower_response(leaders) {
        return Ok(y);
    }
    let sense = game.sense(Player::Follower);
    solve_scalar_box(
        |y| {
            (
                game.objective(Player::Follower, leaders, Some(y)),
                game.follower_derivative(leaders, y),
            )
        },
        b,
        sense,
    )
}

/// Optimal action of `leader` with the other leaders and the follower fixed
/// (unchecked). `leaders[leader]` is ignored.
pub(crate) fn leader_response_unchecked(
    game: &dyn Game,
    leader: usize,
    leaders: &[f64],
    follower: Option<f64>,
) -> Result<f64> {
    if let Some(x) = game.leader_response(leader, leaders, follower) {
        return Ok(x);
    }
    let mut scratch = leaders.to_vec();
    let sense = game.sense(Player::Leader(leader));
    solve_scalar_box(
        |x| {
            scratch[leader] = x;
            let v = game.objective(Player::Leader(leader), &scratch, follower);
            let d = game.leader_partials(leader, &scratch, follower).own;
            (v, d)
        },
        game.leader_box(leader),
        sense,
    )
}

/// The follower's unique optimal action against `leaders`.
pub fn follower_best_response(game: &dyn Game, leaders: &[f64]) -> Result<f64> {
    check_leaders(game, leaders)?;
    follower_response_unchecked(game, leaders)
}

/// Best response of `leader` to the other leaders' actions `others` (in
/// leader order, owner omitted) and the follower action `follower`.
pub fn leader_best_response(
    game: &dyn Game,
    leader: usize,
    others: &[f64],
    follower: Option<f64>,
) -> Result<f64> {
    let n = game.leader_count();
    if leader >= n {
        return Err(Error::Input(format!("{} has no leader {}", game.name(), leader + 1)));
    }
    if others.len() + 1 != n {
        return Err(Error::Input(format!(
            "expected {} peer actions, got {}",
            n - 1,
            others.len()
        )));
    }
    let mut leaders = Vec::with_capacity(n);
    leaders.extend_from_slice(&others[..leader]);
    leaders.push(game.leader_box(leader).lower());
    leaders.extend_from_slice(&others[leader..]);
    check_leaders(game, &leaders)?;
    check_follower(game, follower)?;
    leader_response_unchecked(game, leader, &leaders, follower)
}

/// Builds the full leader vector with `value` inserted at `leader`.
pub fn with_leader(leaders: &[f64], leader: usize, value: f64) -> Vec<f64> {
    let mut v = leaders.to_vec();
    v[leader] = value;
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_rejects_inverted_bounds() {
        assert!(ActionBox::new(1.0, 1.0).is_err());
        assert!(ActionBox::new(2.0, -2.0).is_err());
        assert!(ActionBox::new(0.0, f64::INFINITY).is_err());
    }

    #[test]
    fn projection_is_idempotent() {
        let b = ActionBox::new(-2.0, 2.0).unwrap();
        for x in [-5.0, -2.0, 0.3, 2.0, 7.5] {
            let p = b.project(x);
            assert_eq!(b.project(p), p);
            assert!(b.contains(p));
        }
    }

    #[test]
    fn stationarity_respects_active_bounds() {
        let b = ActionBox::new(0.0, 1.0).unwrap();
        assert_eq!(b.stationarity(0.0, 3.0), 0.0);
        assert_eq!(b.stationarity(0.0, -3.0), 3.0);
        assert_eq!(b.stationarity(1.0, -3.0), 0.0);
        assert_eq!(b.stationarity(0.5, -3.0), 3.0);
    }

    #[test]
    fn out_of_box_profile_names_coordinate() {
        let game = LeadersDilemma::new(-1.5).unwrap();
        let p = StrategyProfile::new(vec![0.0, 2.5], Some(0.0));
        match evaluate(&game, &p, Player::Leader(0)) {
            Err(Error::Domain { coordinate, .. }) => assert_eq!(coordinate, "x_2"),
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn missing_player_is_rejected() {
        let game = Olsder::new(PlayMode::Simultaneous, OLSDER_DEFAULT_CAP).unwrap();
        let p = StrategyProfile::new(vec![84.0, 50.0], None);
        assert!(evaluate(&game, &p, Player::Follower).is_err());
        assert!(evaluate(&game, &p, Player::Leader(2)).is_err());
    }
}
