//! Seeded level generation.

use std::collections::{HashSet, VecDeque};


use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::physics::{advance_body, Body};
use super::{Action, EnvConfig, EnvError};

pub const MAX_SEED: u64 = 1_000_000;

/// Columns at each end of a level kept flat and free of hazards.
pub const SAFE_ZONE: usize = 6;

const MAX_GENERATION_ATTEMPTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tile {
    Air,
    Ground,
    Brick,
    HiddenBlock,
    Coin,
}

impl Tile {
    /// Blocks movement from every side. Hidden blocks only block from below.
    pub fn is_solid(self) -> bool {
        matches!(self, Tile::Ground | Tile::Brick)
    }
}

/// Row-major tile grid, indexed `(x, y)` with `y = 0` the bottom row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileGrid {
    pub width: usize,
    pub height: usize,
    tiles: Vec<Tile>,
}

impl TileGrid {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            tiles: vec![Tile::Air; width * height],
        }
    }

    pub fn in_bounds(&self, x: i32, y: i32) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    /// Tile at `(x, y)`; everything outside the grid reads as air.
    pub fn get(&self, x: i32, y: i32) -> Tile {
        if self.in_bounds(x, y) {
            self.tiles[y as usize * self.width + x as usize]
        } else {
            Tile::Air
        }
    }

    pub fn set(&mut self, x: i32, y: i32, tile: Tile) {
        if self.in_bounds(x, y) {
            self.tiles[y as usize * self.width + x as usize] = tile;
        }
    }

    pub fn is_solid(&self, x: i32, y: i32) -> bool {
        self.get(x, y).is_solid()
    }

    /// Lowest non-solid row in column `x`, i.e. where something standing there sits.
    pub fn surface(&self, x: i32) -> i32 {
        let mut y = 0;
        while self.is_solid(x, y) {
            y += 1;
        }
        y
    }

    pub fn count(&self, tile: Tile) -> usize {
        self.tiles.iter().filter(|t| **t == tile).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    Goomba,
    Mushroom,
    Fireflower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Spawn {
    pub x: i32,
    pub y: i32,
    pub kind: EntityKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelSpec {
    pub seed: u64,
    pub difficulty: u32,
    pub length: usize,
    pub tiles: TileGrid,
    pub spawns: Vec<Spawn>,
    pub start: (i32, i32),
    /// reaching this column finishes the level
    pub finish_x: i32,
}

impl LevelSpec {
    pub fn enemy_count(&self) -> usize {
        self.spawns.iter().filter(|s| s.kind == EntityKind::Goomba).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("level serializes")
    }
}

/// Generates the level for `(seed, difficulty)` with default parameters.
pub fn generate_level(seed: u64, difficulty: u32) -> Result<LevelSpec, EnvError> {
    generate_level_with(seed, difficulty, &EnvConfig::default())
}

pub fn generate_level_with(seed: u64, difficulty: u32, cfg: &EnvConfig) -> Result<LevelSpec, EnvError> {
    if seed > MAX_SEED {
        return Err(EnvError::SeedOutOfRange(seed));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x2545_F491_4F6C_DD1D) ^ u64::from(difficulty));
    for _ in 0..MAX_GENERATION_ATTEMPTS {
        let spec = draft_level(&mut rng, seed, difficulty, cfg);
        if is_traversable(&spec, cfg) {
            return Ok(spec);
        }
    }
    Err(EnvError::GenerationFailed { seed, difficulty })
}

fn draft_level(rng: &mut ChaCha8Rng, seed: u64, difficulty: u32, cfg: &EnvConfig) -> LevelSpec {
    let width = cfg.level_length.max(2 * SAFE_ZONE + 4);
    let height = cfg.level_height.max(8);
    let mut tiles = TileGrid::new(width, height);
    let hazard = 1.0 + 0.25 * difficulty as f64;

    // ground profile; 0 means a pit
    let base = 2usize;
    let mut profile = vec![base; width];
    let mut level = base;
    let mut x = SAFE_ZONE;
    let mut flat_runs = Vec::new();
    while x < width - SAFE_ZONE {
        let room = width - SAFE_ZONE - x;
        let roll: f64 = rng.random();
        if roll < 0.14 * hazard && room >= 2 {
            // pipe
            let w = 2.min(room);
            let h = level + rng.random_range(1..=3);
            for c in x..x + w {
                profile[c] = h;
            }
            x += w;
        } else if roll < 0.22 * hazard && room >= 2 {
            let w = rng.random_range(1..=2).min(room);
            for c in x..x + w {
                profile[c] = 0;
            }
            x += w;
        } else if roll < 0.32 {
            level = if level <= 2 { level + 1 } else { level - 1 };
            profile[x] = level;
            x += 1;
        } else {
            let w = rng.random_range(3..=7).min(room);
            for c in x..x + w {
                profile[c] = level;
            }
            flat_runs.push((x, w, level));
            x += w;
        }
    }
    // let the trailing safe zone meet the last ground level
    for c in profile.iter_mut().skip(width - SAFE_ZONE) {
        *c = level;
    }
    flat_runs.push((width - SAFE_ZONE, SAFE_ZONE - 1, level));

    for (cx, &h) in profile.iter().enumerate() {
        for cy in 0..h.min(height - 4) {
            tiles.set(cx as i32, cy as i32, Tile::Ground);
        }
    }

    // coins, hidden blocks and brick ledges above flat runs
    for &(start, w, h) in &flat_runs {
        let h = h as i32;
        for c in start..start + w {
            let c = c as i32;
            let r: f64 = rng.random();
            if r < 0.10 {
                tiles.set(c, h + 1, Tile::Coin);
            } else if r < 0.14 {
                tiles.set(c, h + 3, Tile::HiddenBlock);
            } else if r < 0.17 && tiles.get(c, h + 3) == Tile::Air {
                tiles.set(c, h + 3, Tile::Brick);
                tiles.set(c, h + 4, Tile::Coin);
            }
        }
    }

    let mut spawns = Vec::new();
    let mut occupied = HashSet::new();
    let candidates: Vec<(i32, i32)> = flat_runs
        .iter()
        .flat_map(|&(start, w, h)| (start..start + w).map(move |c| (c as i32, h as i32)))
        .filter(|&(c, _)| c as usize >= SAFE_ZONE + 2 && (c as usize) < width - SAFE_ZONE)
        .collect();
    if !candidates.is_empty() {
        let (lo, hi) = cfg.enemy_density;
        let per_100 = rng.random_range(lo..=hi) * hazard;
        let enemies = ((per_100 * width as f64 / 100.0).round() as usize).min(candidates.len());
        while spawns.len() < enemies {
            let cell = candidates[rng.random_range(0..candidates.len())];
            if occupied.insert(cell) {
                spawns.push(Spawn { x: cell.0, y: cell.1, kind: EntityKind::Goomba });
            }
        }
        for (kind, p) in [(EntityKind::Mushroom, 0.5), (EntityKind::Fireflower, 0.35)] {
            if rng.random::<f64>() < p {
                let cell = candidates[rng.random_range(0..candidates.len())];
                if occupied.insert(cell) {
                    spawns.push(Spawn { x: cell.0, y: cell.1, kind });
                }
            }
        }
    }

    let start = (1, tiles.surface(1));
    LevelSpec {
        seed,
        difficulty,
        length: width,
        tiles,
        spawns,
        start,
        finish_x: (width - 2) as i32,
    }
}

/// Breadth-first search over the agent's kinematic states, ignoring enemies,
/// checking that the finish column can be reached.
///
/// Only the four normal-speed actions without a left component are expanded,
/// which is conservative: a level passing this check is traversable with the
/// full action set.
pub fn is_traversable(spec: &LevelSpec, cfg: &EnvConfig) -> bool {
    let tiles = &spec.tiles;
    let (w, h) = (tiles.width, tiles.height);
    let rises = cfg.jump_ticks as usize + 1;
    let index = |b: &Body| ((b.x as usize * h + b.y as usize) * rises + b.rise as usize) * 2 + usize::from(b.jump_held);
    let mut seen = vec![false; w * h * rises * 2];
    let actions: Vec<Action> = [0, 2, 8, 10].iter().filter_map(|&i| Action::from_index(i)).collect();

    let start = Body::standing(spec.start.0, spec.start.1);
    seen[index(&start)] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(body) = queue.pop_front() {
        for &action in &actions {
            let mut next = body;
            let out = advance_body(tiles, &mut next, action, cfg, |_, _, _| true);
            if out.fell_out {
                continue;
            }
            if next.x >= spec.finish_x {
                return true;
            }
            next.facing = 1;
            let i = index(&next);
            if !seen[i] {
                seen[i] = true;
                queue.push_back(next);
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let a = generate_level(42, 0).unwrap();
        let b = generate_level(42, 0).unwrap();
        assert_eq!(a, b);
        assert_ne!(generate_level(0, 0).unwrap().tiles, generate_level(1, 0).unwrap().tiles);
    }

    #[test]
    fn seed_range_enforced() {
        assert!(generate_level(MAX_SEED, 0).is_ok());
        assert_eq!(
            generate_level(MAX_SEED + 1, 0),
            Err(EnvError::SeedOutOfRange(MAX_SEED + 1))
        );
    }

    #[test]
    fn start_and_finish_zones_are_flat_ground() {
        for seed in 0..50 {
            let spec = generate_level(seed, 0).unwrap();
            let w = spec.length as i32;
            let s = spec.tiles.surface(0);
            assert!(s > 0);
            for x in 0..SAFE_ZONE as i32 {
                assert_eq!(spec.tiles.surface(x), s);
                assert!(spec.tiles.surface(w - 1 - x) > 0);
            }
            assert_eq!(spec.start, (1, s));
            assert!(spec.spawns.iter().all(|sp| sp.x as usize >= SAFE_ZONE));
            assert!(is_traversable(&spec, &EnvConfig::default()));
        }
    }

    #[test]
    fn walled_off_level_is_not_traversable() {
        let cfg = EnvConfig::default();
        let mut spec = generate_level(3, 0).unwrap();
        let wall_x = spec.length as i32 / 2;
        for y in 0..spec.tiles.height as i32 {
            spec.tiles.set(wall_x, y, Tile::Ground);
        }
        assert!(!is_traversable(&spec, &cfg));
    }

    #[test]
    fn json_round_trip() {
        let spec = generate_level(7, 0).unwrap();
        let back: LevelSpec = serde_json::from_str(&spec.to_json()).unwrap();
        assert_eq!(back, spec);
    }
}
