use super::{ActionBox, Game, Partials, Player, Sense};
use crate::error::{Error, Result};

/// Leaders with linear objectives and a strictly convex quadratic follower.
///
/// `f_i = a_i x_i + sum_{j != i} b_ij x_j + c_i y` (all leaders share one
/// sense) and `g = (q/2) (y - sum_i p_i x_i - r)^2` (minimized), so the
/// follower response is the projection of `sum_i p_i x_i + r`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearQuadratic {
    own: Vec<f64>,
    cross: Vec<Vec<f64>>,
    follower_weight: Vec<f64>,
    sense: Sense,
    curvature: f64,
    response_weights: Vec<f64>,
    response_offset: f64,
    leader_bounds: ActionBox,
    follower_bounds: ActionBox,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearQuadraticParams {
    /// `a_i`
    pub own: Vec<f64>,
    /// `b_ij`; diagonal entries are ignored.
    pub cross: Vec<Vec<f64>>,
    /// `c_i`
    pub follower_weight: Vec<f64>,
    pub sense: Sense,
    /// `q > 0`
    pub curvature: f64,
    /// `p_i`
    pub response_weights: Vec<f64>,
    /// `r`
    pub response_offset: f64,
    pub leader_bounds: ActionBox,
    pub follower_bounds: ActionBox,
}

impl LinearQuadratic {
    pub fn new(p: LinearQuadraticParams) -> Result<Self> {
        let n = p.own.len();
        if n == 0 {
            return Err(Error::config("game.a", "need at least one leader"));
        }
        if p.follower_weight.len() != n {
            return Err(Error::config("game.c", format!("expected {n} entries")));
        }
        if p.response_weights.len() != n {
            return Err(Error::config("game.follower_weights", format!("expected {n} entries")));
        }
        if p.cross.len() != n || p.cross.iter().any(|row| row.len() != n) {
            return Err(Error::config("game.b", format!("expected a {n}x{n} matrix")));
        }
        if !(p.curvature.is_finite() && p.curvature > 0.0) {
            return Err(Error::config(
                "game.follower_curvature",
                "follower objective must be strictly convex (q > 0)",
            ));
        }
        let finite = p
            .own
            .iter()
            .chain(p.cross.iter().flatten())
            .chain(&p.follower_weight)
            .chain(&p.response_weights)
            .chain(std::iter::once(&p.response_offset))
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::config("game", "coefficients must be finite"));
        }
        Ok(LinearQuadratic {
            own: p.own,
            cross: p.cross,
            follower_weight: p.follower_weight,
            sense: p.sense,
            curvature: p.curvature,
            response_weights: p.response_weights,
            response_offset: p.response_offset,
            leader_bounds: p.leader_bounds,
            follower_bounds: p.follower_bounds,
        })
    }

    pub fn own_weight(&self, leader: usize) -> f64 {
        self.own[leader]
    }

    pub fn cross_weight(&self, leader: usize, other: usize) -> f64 {
        self.cross[leader][other]
    }

    pub fn follower_weight(&self, leader: usize) -> f64 {
        self.follower_weight[leader]
    }

    pub fn response_weight(&self, leader: usize) -> f64 {
        self.response_weights[leader]
    }

    pub fn response_offset(&self) -> f64 {
        self.response_offset
    }

    fn target(&self, leaders: &[f64]) -> f64 {
        self.response_weights
            .iter()
            .zip(leaders)
            .map(|(p, x)| p * x)
            .sum::<f64>()
            + self.response_offset
    }
}

impl Game for LinearQuadratic {
    fn name(&self) -> &str {
        "linear_quadratic"
    }

    fn leader_count(&self) -> usize {
        self.own.len()
    }

    fn leader_box(&self, _leader: usize) -> ActionBox {
        self.leader_bounds
    }

    fn follower_box(&self) -> Option<ActionBox> {
        Some(self.follower_bounds)
    }

    fn sense(&self, player: Player) -> Sense {
        match player {
            Player::Leader(_) => self.sense,
            Player::Follower => Sense::Minimize,
        }
    }

    fn objective(&self, player: Player, leaders: &[f64], follower: Option<f64>) -> f64 {
        let y = follower.unwrap_or_default();
        match player {
            Player::Leader(i) => {
                let cross: f64 = (0..leaders.len())
                    .filter(|&j| j != i)
                    .map(|j| self.cross[i][j] * leaders[j])
                    .sum();
                self.own[i] * leaders[i] + cross + self.follower_weight[i] * y
            }
            Player::Follower => {
                let gap = y - self.target(leaders);
                0.5 * self.curvature * gap * gap
            }
        }
    }

    fn leader_partials(&self, leader: usize, leaders: &[f64], _follower: Option<f64>) -> Partials {
        let others = (0..leaders.len())
            .map(|j| if j == leader { 0.0 } else { self.cross[leader][j] })
            .collect();
        Partials {
            own: self.own[leader],
            others,
            follower: self.follower_weight[leader],
        }
    }

    fn follower_derivative(&self, leaders: &[f64], follower: f64) -> f64 {
        self.curvature * (follower - self.target(leaders))
    }

    fn follower_response(&self, leaders: &[f64]) -> Option<f64> {
        Some(self.follower_bounds.project(self.target(leaders)))
    }

    fn leader_response(&self, leader: usize, _leaders: &[f64], _follower: Option<f64>) -> Option<f64> {
        let descent = self.sense.descent_sign() * self.own[leader];
        Some(if descent < 0.0 {
            self.leader_bounds.upper()
        } else {
            self.leader_bounds.lower()
        })
    }

    fn follower_response_slope(&self, leaders: &[f64], wrt: usize) -> Option<f64> {
        let interior = self.follower_bounds.is_interior(self.target(leaders));
        Some(if interior { self.response_weights[wrt] } else { 0.0 })
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
