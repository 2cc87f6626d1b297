use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    None,
    Left,
    Right,
}

impl Direction {
    pub fn dx(self) -> i32 {
        match self {
            Direction::None => 0,
            Direction::Left => -1,
            Direction::Right => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Speed {
    Normal,
    RunFire,
}

/// One combined controller input: a direction, jump on/off and run/fire on/off.
///
/// Actions are enumerated as
/// `index = 4 * direction + 2 * jump + speed` with direction
/// `none = 0, left = 1, right = 2`, `jump = 1` when pressed and
/// `speed = 1` for run/fire. So index 0 is "do nothing" and index 11 is
/// "right + jump + run/fire".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Action {
    pub direction: Direction,
    pub jump: bool,
    pub speed: Speed,
}

impl Action {
    pub const COUNT: usize = 12;

    pub const NOOP: Action = Action {
        direction: Direction::None,
        jump: false,
        speed: Speed::Normal,
    };

    pub fn from_index(index: usize) -> Option<Action> {
        if index >= Self::COUNT {
            return None;
        }
        let direction = match index / 4 {
            0 => Direction::None,
            1 => Direction::Left,
            _ => Direction::Right,
        };
        Some(Action {
            direction,
            jump: (index / 2) % 2 == 1,
            speed: if index % 2 == 1 { Speed::RunFire } else { Speed::Normal },
        })
    }

    pub fn index(self) -> usize {
        let d = match self.direction {
            Direction::None => 0,
            Direction::Left => 1,
            Direction::Right => 2,
        };
        4 * d + 2 * usize::from(self.jump) + usize::from(self.speed == Speed::RunFire)
    }

    pub fn all() -> impl Iterator<Item = Action> {
        (0..Self::COUNT).filter_map(Action::from_index)
    }
}
