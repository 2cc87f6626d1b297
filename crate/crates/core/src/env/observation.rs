use serde::{Deserialize, Serialize};

/// Names of the nine observation features, in vector order.
pub const FEATURE_NAMES: [&str; 9] = [
    "can_jump",
    "on_ground",
    "can_shoot",
    "direction",
    "enemies_near",
    "enemies_mid",
    "obstacles",
    "closest_enemy_x",
    "closest_enemy_y",
];

/// Inclusive upper bound of each feature; every lower bound is 0.
pub const FEATURE_MAX: [u16; 9] = [1, 1, 1, 8, 255, 255, 15, 21, 21];

/// Code used by both closest-enemy axes when no enemy is in the receptive field.
pub const ENEMY_ABSENT: u16 = 21;

/// Half-width of the square receptive field (21 x 21 cells).
pub const RECEPTIVE_RADIUS: i32 = 10;

/// Direction feature value for "standing still".
pub const STILL: u16 = 8;

/// Compass direction index of a sign pair.
///
/// `0 = E, 1 = W, 2 = SE, 3 = SW, 4 = NE, 5 = NW, 6 = S, 7 = N`, with y
/// pointing up: level directions first, then the downward and upward
/// diagonals, then the verticals. The same numbering is used for the movement
/// direction and for bit positions of the enemy bitmasks. Returns `None` for
/// `(0, 0)`.
pub fn compass(dx: i32, dy: i32) -> Option<u16> {
    Some(match (dx.signum(), dy.signum()) {
        (1, 0) => 0,
        (-1, 0) => 1,
        (1, -1) => 2,
        (-1, -1) => 3,
        (1, 1) => 4,
        (-1, 1) => 5,
        (0, -1) => 6,
        (0, 1) => 7,
        _ => return None,
    })
}

/// The nine-feature state the learner sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Observation {
    pub can_jump: u16,
    pub on_ground: u16,
    pub can_shoot: u16,
    /// compass index of last tick's movement, or [`STILL`]
    pub direction: u16,
    /// bit `d` set when an enemy is at Chebyshev distance 1 in compass direction `d`
    pub enemies_near: u16,
    /// bit `d` set when an enemy is at Chebyshev distance 2 or 3 in compass direction `d`
    pub enemies_mid: u16,
    /// bit `j` set when the cell `j` rows above the agent's row, one column ahead, is solid
    pub obstacles: u16,
    /// `dx + 10` of the closest enemy, or [`ENEMY_ABSENT`]
    pub closest_enemy_x: u16,
    /// `dy + 10` of the closest enemy, or [`ENEMY_ABSENT`]
    pub closest_enemy_y: u16,
}

impl Observation {
    pub fn to_array(&self) -> [u16; 9] {
        [
            self.can_jump,
            self.on_ground,
            self.can_shoot,
            self.direction,
            self.enemies_near,
            self.enemies_mid,
            self.obstacles,
            self.closest_enemy_x,
            self.closest_enemy_y,
        ]
    }

    pub fn from_array(v: [u16; 9]) -> Self {
        Self {
            can_jump: v[0],
            on_ground: v[1],
            can_shoot: v[2],
            direction: v[3],
            enemies_near: v[4],
            enemies_mid: v[5],
            obstacles: v[6],
            closest_enemy_x: v[7],
            closest_enemy_y: v[8],
        }
    }

    pub fn features(&self) -> [f64; 9] {
        self.to_array().map(f64::from)
    }

    /// Index of the first feature outside its declared range, if any.
    pub fn range_violation(&self) -> Option<usize> {
        let v = self.to_array();
        (0..9).find(|&i| v[i] > FEATURE_MAX[i]).or_else(|| {
            // both closest-enemy axes are absent together or present together
            let absent = (self.closest_enemy_x == ENEMY_ABSENT, self.closest_enemy_y == ENEMY_ABSENT);
            (absent.0 != absent.1).then_some(7)
        })
    }

    pub fn enemy_absent(&self) -> bool {
        self.closest_enemy_x == ENEMY_ABSENT
    }
}
