use super::{ActionBox, Game, Partials, PlayMode, Player, Sense};
use crate::error::{Error, Result};

/// Finite substitute for the unbounded action space `[0, +inf]`.
pub const OLSDER_DEFAULT_CAP: f64 = 400.0;

/// Olsder's two-player game, both players maximizing:
///
/// `f1 = (x1 - 84)(-12.5 x1 + 21 x2 + 756)`,
/// `f2 = (x2 - 50)(25 x1 - 50 x2 + 560)`.
///
/// In Stackelberg mode player 1 is the only leader and player 2 is the
/// follower (its objective `g` is `f2`, maximized). In simultaneous mode both
/// players are leaders and there is no follower.
#[derive(Clone, Debug, PartialEq)]
pub struct Olsder {
    mode: PlayMode,
    bounds: ActionBox,
}

// f1 = (x1 - A1)(B11 x1 + B12 x2 + B10), f2 = (x2 - A2)(B21 x1 + B22 x2 + B20)
const A1: f64 = 84.0;
const B11: f64 = -12.5;
const B12: f64 = 21.0;
const B10: f64 = 756.0;
const A2: f64 = 50.0;
const B21: f64 = 25.0;
const B22: f64 = -50.0;
const B20: f64 = 560.0;

impl Olsder {
    pub fn new(mode: PlayMode, cap: f64) -> Result<Self> {
        if !(cap.is_finite() && cap > 0.0) {
            return Err(Error::config("game.cap", format!("cap must be positive and finite, got {cap}")));
        }
        Ok(Olsder {
            mode,
            bounds: ActionBox::new(0.0, cap)?,
        })
    }

    pub fn play_mode(&self) -> PlayMode {
        self.mode
    }

    pub fn bounds(&self) -> ActionBox {
        self.bounds
    }

    pub fn f1(x1: f64, x2: f64) -> f64 {
        (x1 - A1) * (B11 * x1 + B12 * x2 + B10)
    }

    pub fn f2(x1: f64, x2: f64) -> f64 {
        (x2 - A2) * (B21 * x1 + B22 * x2 + B20)
    }

    /// (df1/dx1, df1/dx2)
    pub fn grad_f1(x1: f64, x2: f64) -> (f64, f64) {
        (
            B11 * x1 + B12 * x2 + B10 + B11 * (x1 - A1),
            B12 * (x1 - A1),
        )
    }

    /// (df2/dx1, df2/dx2)
    pub fn grad_f2(x1: f64, x2: f64) -> (f64, f64) {
        (
            B21 * (x2 - A2),
            B21 * x1 + B22 * x2 + B20 + B22 * (x2 - A2),
        )
    }

    /// Unconstrained maximizer of f1 in x1: `0.84 x2 + 72.24`.
    pub fn response_1(x2: f64) -> f64 {
        -(B12 * x2 + B10 - A1 * B11) / (2.0 * B11)
    }

    /// Unconstrained maximizer of f2 in x2: `0.25 x1 + 30.6`.
    pub fn response_2(x1: f64) -> f64 {
        -(B21 * x1 + B20 - A2 * B22) / (2.0 * B22)
    }

    /// (slope, intercept) of [`Olsder::response_1`].
    pub fn response_1_line() -> (f64, f64) {
        (-B12 / (2.0 * B11), -(B10 - A1 * B11) / (2.0 * B11))
    }

    /// (slope, intercept) of [`Olsder::response_2`].
    pub fn response_2_line() -> (f64, f64) {
        (-B21 / (2.0 * B22), -(B20 - A2 * B22) / (2.0 * B22))
    }

    /// Stationarity coefficients of f1 + f2: rows `[c1, c2, c0]` with
    /// `c1 x1 + c2 x2 + c0 = 0`.
    pub fn welfare_stationarity() -> [[f64; 3]; 2] {
        [
            [2.0 * B11, B12 + B21, B10 - A1 * B11 - A2 * B21],
            [B12 + B21, 2.0 * B22, B20 - A2 * B22 - A1 * B12],
        ]
    }

    fn split(&self, leaders: &[f64], follower: Option<f64>) -> (f64, f64) {
        match self.mode {
            PlayMode::Stackelberg => (leaders[0], follower.unwrap_or_default()),
            PlayMode::Simultaneous => (leaders[0], leaders[1]),
        }
    }
}

impl Game for Olsder {
    fn name(&self) -> &str {
        "olsder"
    }

    fn leader_count(&self) -> usize {
        match self.mode {
            PlayMode::Stackelberg => 1,
            PlayMode::Simultaneous => 2,
        }
    }

    fn leader_box(&self, _leader: usize) -> ActionBox {
        self.bounds
    }

    fn follower_box(&self) -> Option<ActionBox> {
        match self.mode {
            PlayMode::Stackelberg => Some(self.bounds),
            PlayMode::Simultaneous => None,
        }
    }

    fn sense(&self, _player: Player) -> Sense {
        Sense::Maximize
    }

    fn objective(&self, player: Player, leaders: &[f64], follower: Option<f64>) -> f64 {
        let (x1, x2) = self.split(leaders, follower);
        match player {
            Player::Leader(0) => Self::f1(x1, x2),
            _ => Self::f2(x1, x2),
        }
    }

    fn leader_partials(&self, leader: usize, leaders: &[f64], follower: Option<f64>) -> Partials {
        let (x1, x2) = self.split(leaders, follower);
        match (self.mode, leader) {
            (PlayMode::Stackelberg, _) => {
                let (d1, d2) = Self::grad_f1(x1, x2);
                Partials {
                    own: d1,
                    others: vec![0.0],
                    follower: d2,
                }
            }
            (PlayMode::Simultaneous, 0) => {
                let (d1, d2) = Self::grad_f1(x1, x2);
                Partials {
                    own: d1,
                    others: vec![0.0, d2],
                    follower: 0.0,
                }
            }
            (PlayMode::Simultaneous, _) => {
                let (d1, d2) = Self::grad_f2(x1, x2);
                Partials {
                    own: d2,
                    others: vec![d1, 0.0],
                    follower: 0.0,
                }
            }
        }
    }

    fn follower_derivative(&self, leaders: &[f64], follower: f64) -> f64 {
        Self::grad_f2(leaders[0], follower).1
    }

    fn follower_response(&self, leaders: &[f64]) -> Option<f64> {
        Some(self.bounds.project(Self::response_2(leaders[0])))
    }

    fn leader_response(&self, leader: usize, leaders: &[f64], follower: Option<f64>) -> Option<f64> {
        let (x1, x2) = self.split(leaders, follower);
        Some(match leader {
            0 => self.bounds.project(Self::response_1(x2)),
            _ => self.bounds.project(Self::response_2(x1)),
        })
    }

    fn follower_response_slope(&self, leaders: &[f64], _wrt: usize) -> Option<f64> {
        let raw = Self::response_2(leaders[0]);
        Some(if self.bounds.is_interior(raw) { Self::response_2_line().0 } else { 0.0 })
    }

    fn leader_response_slope(
        &self,
        leader: usize,
        wrt: usize,
        leaders: &[f64],
        follower: Option<f64>,
    ) -> Option<f64> {
        if leader == wrt {
            return Some(0.0);
        }
        let (x1, x2) = self.split(leaders, follower);
        Some(match leader {
            0 if self.bounds.is_interior(Self::response_1(x2)) => Self::response_1_line().0,
            1 if self.bounds.is_interior(Self::response_2(x1)) => Self::response_2_line().0,
            _ => 0.0,
        })
    }
}
