use super::{ActionBox, Game, Partials, Player, Sense};
use crate::error::{Error, Result};

/// Two leaders rewarded for staying near the follower's target while keeping
/// the other leader away from it.
///
/// `f_i = -(x_i - y)^2 - K (1 - exp(-(x_j - y)^2))` (maximized) and
/// `g = ((x_1 + x_2)/2 - y)^2` (minimized), with `K < -1`.
#[derive(Clone, Debug, PartialEq)]
pub struct LeadersDilemma {
    k: f64,
    bounds: ActionBox,
}

impl LeadersDilemma {
    /// Dilemma on the default action box `[-2, 2]`.
    pub fn new(k: f64) -> Result<Self> {
        Self::with_box(k, ActionBox::new(-2.0, 2.0)?)
    }

    pub fn with_box(k: f64, bounds: ActionBox) -> Result<Self> {
        if !(k.is_finite() && k < -1.0) {
            return Err(Error::config("game.k", format!("K must satisfy K < -1, got {k}")));
        }
        Ok(LeadersDilemma { k, bounds })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn bounds(&self) -> ActionBox {
        self.bounds
    }

    fn peer(leader: usize) -> usize {
        1 - leader
    }
}

impl Game for LeadersDilemma {
    fn name(&self) -> &str {
        "leaders_dilemma"
    }

    fn leader_count(&self) -> usize {
        2
    }

    fn leader_box(&self, _leader: usize) -> ActionBox {
        self.bounds
    }

    fn follower_box(&self) -> Option<ActionBox> {
        Some(self.bounds)
    }

    fn sense(&self, player: Player) -> Sense {
        match player {
            Player::Leader(_) => Sense::Maximize,
            Player::Follower => Sense::Minimize,
        }
    }

    fn objective(&self, player: Player, leaders: &[f64], follower: Option<f64>) -> f64 {
        let y = follower.unwrap_or_default();
        match player {
            Player::Leader(i) => {
                let own = leaders[i] - y;
                let peer = leaders[Self::peer(i)] - y;
                -own * own - self.k * (1.0 - (-peer * peer).exp())
            }
            Player::Follower => {
                let gap = 0.5 * (leaders[0] + leaders[1]) - y;
                gap * gap
            }
        }
    }

    fn leader_partials(&self, leader: usize, leaders: &[f64], follower: Option<f64>) -> Partials {
        let y = follower.unwrap_or_default();
        let j = Self::peer(leader);
        let own = leaders[leader] - y;
        let peer = leaders[j] - y;
        // d/dx_j of -K(1 - exp(-u^2)) with u = x_j - y
        let peer_term = -2.0 * self.k * peer * (-peer * peer).exp();
        let mut others = vec![0.0; 2];
        others[j] = peer_term;
        Partials {
            own: -2.0 * own,
            others,
            follower: 2.0 * own - peer_term,
        }
    }

    fn follower_derivative(&self, leaders: &[f64], follower: f64) -> f64 {
        -2.0 * (0.5 * (leaders[0] + leaders[1]) - follower)
    }

    fn follower_response(&self, leaders: &[f64]) -> Option<f64> {
        Some(self.bounds.project(0.5 * (leaders[0] + leaders[1])))
    }

    fn leader_response(&self, _leader: usize, _leaders: &[f64], follower: Option<f64>) -> Option<f64> {
        // The peer term does not depend on the own action.
        follower.map(|y| self.bounds.project(y))
    }

    fn follower_response_slope(&self, leaders: &[f64], _wrt: usize) -> Option<f64> {
        let mean = 0.5 * (leaders[0] + leaders[1]);
        Some(if self.bounds.is_interior(mean) { 0.5 } else { 0.0 })
    }

    fn leader_response_slope(
        &self,
        _leader: usize,
        _wrt: usize,
        _leaders: &[f64],
        _follower: Option<f64>,
    ) -> Option<f64> {
        Some(0.0)
    }
}
