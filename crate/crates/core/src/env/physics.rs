//! Agent kinematics on the tile grid, shared by the simulator and the
//! level traversability check.
//!
//! Movement is cell-granular. Each tick the agent first moves horizontally
//! (one cell, or `run_cells` when running), then vertically: a jump started on
//! the ground rises one cell per tick for as long as the button is held, up to
//! `jump_ticks` cells; otherwise an unsupported agent falls one cell per tick.
//! A new jump needs the button released first.

use super::level::{Tile, TileGrid};
use super::{Action, EnvConfig, Speed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Body {
    pub x: i32,
    pub y: i32,
    /// remaining upward ticks of the current jump
    pub rise: u32,
    pub jump_held: bool,
    /// last non-zero horizontal input, -1 or +1
    pub facing: i32,
}

impl Body {
    pub fn standing(x: i32, y: i32) -> Self {
        Self { x, y, rise: 0, jump_held: false, facing: 1 }
    }

    pub fn on_ground(&self, tiles: &TileGrid) -> bool {
        tiles.is_solid(self.x, self.y - 1)
    }

    pub fn can_jump(&self, tiles: &TileGrid) -> bool {
        self.on_ground(tiles) && !self.jump_held
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    Horizontal,
    Up,
    Fall,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BodyOutcome {
    /// fell below the bottom row
    pub fell_out: bool,
    /// hidden block struck from below
    pub bumped_hidden: Option<(i32, i32)>,
    /// the visitor asked to stop
    pub aborted: bool,
}

/// Advances `body` by one tick. `visit(x, y, how)` runs for every cell
/// entered; returning `false` stops the motion there.
pub fn advance_body(
    tiles: &TileGrid,
    body: &mut Body,
    action: Action,
    cfg: &EnvConfig,
    mut visit: impl FnMut(i32, i32, Move) -> bool,
) -> BodyOutcome {
    let mut out = BodyOutcome::default();
    let can_jump = body.can_jump(tiles);

    let dx = action.direction.dx();
    if dx != 0 {
        body.facing = dx;
        let steps = if action.speed == Speed::RunFire { cfg.run_cells } else { 1 };
        for _ in 0..steps {
            let nx = body.x + dx;
            if nx < 0 || nx as usize >= tiles.width || tiles.is_solid(nx, body.y) {
                break;
            }
            body.x = nx;
            if !visit(body.x, body.y, Move::Horizontal) {
                out.aborted = true;
                body.jump_held = action.jump;
                return out;
            }
        }
    }

    if action.jump && can_jump {
        body.rise = cfg.jump_ticks;
    }
    if action.jump && body.rise > 0 {
        let above = tiles.get(body.x, body.y + 1);
        if body.y + 1 >= tiles.height as i32 || above.is_solid() || above == Tile::HiddenBlock {
            if above == Tile::HiddenBlock {
                out.bumped_hidden = Some((body.x, body.y + 1));
            }
            body.rise = 0;
        } else {
            body.y += 1;
            body.rise -= 1;
            if !visit(body.x, body.y, Move::Up) {
                out.aborted = true;
            }
        }
    } else {
        body.rise = 0;
        if !tiles.is_solid(body.x, body.y - 1) {
            body.y -= 1;
            if body.y < 0 {
                out.fell_out = true;
            } else if !visit(body.x, body.y, Move::Fall) {
                out.aborted = true;
            }
        }
    }
    body.jump_held = action.jump;
    out
}
