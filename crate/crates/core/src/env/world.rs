use std::io::Write;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use super::level::{EntityKind, LevelSpec, Tile, TileGrid};
use super::observation::{compass, Observation, ENEMY_ABSENT, RECEPTIVE_RADIUS, STILL};
use super::physics::{advance_body, Body, Move};
use super::{Action, EnvConfig, EnvError, Speed, Termination};
use crate::fmt_num;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Small,
    Large,
    Fire,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Small, Mode::Large, Mode::Fire];

    fn demoted(self) -> Option<Mode> {
        match self {
            Mode::Small => None,
            Mode::Large => Some(Mode::Small),
            Mode::Fire => Some(Mode::Large),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    KillEnemy,
    Mushroom,
    Fireflower,
    Coin,
    HiddenBlock,
    FinishLevel,
    Hurt,
    Die,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::KillEnemy => "kill_enemy",
            EventKind::Mushroom => "mushroom",
            EventKind::Fireflower => "fireflower",
            EventKind::Coin => "coin",
            EventKind::HiddenBlock => "hidden_block",
            EventKind::FinishLevel => "finish_level",
            EventKind::Hurt => "hurt",
            EventKind::Die => "die",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub tick: u32,
    pub kind: EventKind,
    pub reward: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Enemy {
    pub x: i32,
    pub y: i32,
    pub dir: i32,
    pub alive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Item {
    pub x: i32,
    pub y: i32,
    pub kind: EntityKind,
    pub taken: bool,
}

/// Complete simulator state for one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub tiles: TileGrid,
    pub body: Body,
    pub mode: Mode,
    pub enemies: Vec<Enemy>,
    pub items: Vec<Item>,
    pub finish_x: i32,
    pub tick: u32,
    pub score: f64,
    pub invulnerable: u32,
    pub fire_cooldown: u32,
    /// cell displacement during the last tick
    pub last_move: (i32, i32),
    pub status: Termination,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub cause: Termination,
    pub events: SmallVec<[Event; 4]>,
}

impl WorldState {
    pub fn new(spec: &LevelSpec, start_mode: Mode) -> Self {
        let mut enemies = Vec::new();
        let mut items = Vec::new();
        for s in &spec.spawns {
            match s.kind {
                EntityKind::Goomba => enemies.push(Enemy { x: s.x, y: s.y, dir: -1, alive: true }),
                kind => items.push(Item { x: s.x, y: s.y, kind, taken: false }),
            }
        }
        Self {
            tiles: spec.tiles.clone(),
            body: Body::standing(spec.start.0, spec.start.1),
            mode: start_mode,
            enemies,
            items,
            finish_x: spec.finish_x,
            tick: 0,
            score: 0.0,
            invulnerable: 0,
            fire_cooldown: 0,
            last_move: (0, 0),
            status: Termination::Running,
        }
    }

    pub fn is_done(&self) -> bool {
        self.status != Termination::Running
    }

    fn push(&mut self, events: &mut SmallVec<[Event; 4]>, kind: EventKind, cfg: &EnvConfig) {
        let r = &cfg.rewards;
        let reward = match kind {
            EventKind::KillEnemy => r.kill_enemy,
            EventKind::Mushroom => r.mushroom,
            EventKind::Fireflower => r.fireflower,
            EventKind::Coin => r.coin,
            EventKind::HiddenBlock => r.hidden_block,
            EventKind::FinishLevel => r.finish_level,
            EventKind::Hurt => r.hurt,
            EventKind::Die => r.die,
        };
        events.push(Event { tick: self.tick, kind, reward });
    }

    fn die(&mut self, events: &mut SmallVec<[Event; 4]>, cfg: &EnvConfig) {
        self.push(events, EventKind::Die, cfg);
        self.status = Termination::Died;
    }

    /// Contact with a goomba from the side or below.
    fn hurt(&mut self, events: &mut SmallVec<[Event; 4]>, cfg: &EnvConfig) {
        if self.invulnerable > 0 || self.is_done() {
            return;
        }
        match self.mode.demoted() {
            None => self.die(events, cfg),
            Some(m) => {
                self.mode = m;
                self.invulnerable = cfg.invulnerable_ticks;
                self.push(events, EventKind::Hurt, cfg);
            }
        }
    }

    fn enemy_at(&self, x: i32, y: i32) -> Option<usize> {
        self.enemies.iter().position(|e| e.alive && e.x == x && e.y == y)
    }

    fn enter_cell(&mut self, x: i32, y: i32, how: Move, events: &mut SmallVec<[Event; 4]>, cfg: &EnvConfig) {
        if self.tiles.get(x, y) == Tile::Coin {
            self.tiles.set(x, y, Tile::Air);
            self.push(events, EventKind::Coin, cfg);
        }
        if let Some(i) = self.items.iter().position(|it| !it.taken && it.x == x && it.y == y) {
            self.items[i].taken = true;
            match self.items[i].kind {
                EntityKind::Mushroom => {
                    if self.mode == Mode::Small {
                        self.mode = Mode::Large;
                    }
                    self.push(events, EventKind::Mushroom, cfg);
                }
                EntityKind::Fireflower => {
                    self.mode = Mode::Fire;
                    self.push(events, EventKind::Fireflower, cfg);
                }
                EntityKind::Goomba => unreachable!("goombas are not items"),
            }
        }
        if let Some(i) = self.enemy_at(x, y) {
            if how == Move::Fall {
                self.enemies[i].alive = false;
                self.push(events, EventKind::KillEnemy, cfg);
            } else {
                self.hurt(events, cfg);
            }
        }
    }

    fn shoot(&mut self, events: &mut SmallVec<[Event; 4]>, cfg: &EnvConfig) {
        self.fire_cooldown = cfg.fire_cooldown;
        let (x, y, dir) = (self.body.x, self.body.y, self.body.facing);
        for d in 1..=cfg.fire_range {
            let cx = x + dir * d;
            if self.tiles.is_solid(cx, y) {
                return;
            }
            if let Some(i) = self
                .enemies
                .iter()
                .position(|e| e.alive && e.x == cx && (e.y - y).abs() <= 1)
            {
                self.enemies[i].alive = false;
                self.push(events, EventKind::KillEnemy, cfg);
                return;
            }
        }
    }

    fn move_enemies(&mut self) {
        let tiles = &self.tiles;
        for e in self.enemies.iter_mut().filter(|e| e.alive) {
            let nx = e.x + e.dir;
            let blocked = !tiles.in_bounds(nx, e.y) || tiles.is_solid(nx, e.y) || !tiles.is_solid(nx, e.y - 1);
            if blocked {
                e.dir = -e.dir;
            } else {
                e.x = nx;
            }
        }
    }

    /// Advances the world by one tick.
    pub fn step(&mut self, action: Action, cfg: &EnvConfig) -> Result<StepResult, EnvError> {
        if self.is_done() {
            return Err(EnvError::StepAfterDone);
        }
        let mut events = SmallVec::new();
        let (px, py) = (self.body.x, self.body.y);

        if action.direction.dx() != 0 {
            self.body.facing = action.direction.dx();
        }
        self.fire_cooldown = self.fire_cooldown.saturating_sub(1);
        if action.speed == Speed::RunFire && self.mode == Mode::Fire && self.fire_cooldown == 0 {
            self.shoot(&mut events, cfg);
        }

        let mut visited: SmallVec<[(i32, i32, Move); 4]> = SmallVec::new();
        let outcome = advance_body(&self.tiles, &mut self.body, action, cfg, |x, y, how| {
            visited.push((x, y, how));
            true
        });
        for (x, y, how) in visited {
            if self.is_done() {
                break;
            }
            self.enter_cell(x, y, how, &mut events, cfg);
        }
        if let Some((hx, hy)) = outcome.bumped_hidden {
            self.tiles.set(hx, hy, Tile::Brick);
            self.push(&mut events, EventKind::HiddenBlock, cfg);
        }
        if outcome.fell_out && !self.is_done() {
            self.body.y = 0;
            self.die(&mut events, cfg);
        }

        if !self.is_done() {
            if cfg.enemy_period > 0 && self.tick.is_multiple_of(cfg.enemy_period) {
                self.move_enemies();
            }
            if self.enemy_at(self.body.x, self.body.y).is_some() {
                self.hurt(&mut events, cfg);
            }
        }
        if !self.is_done() && self.body.x >= self.finish_x {
            self.push(&mut events, EventKind::FinishLevel, cfg);
            self.status = Termination::Finished;
        }

        self.tick += 1;
        self.invulnerable = self.invulnerable.saturating_sub(1);
        if !self.is_done() && self.tick >= cfg.step_limit {
            self.status = Termination::Timeout;
        }
        self.last_move = (self.body.x - px, self.body.y - py);

        let reward: f64 = events.iter().map(|e: &Event| e.reward).sum();
        self.score += reward;
        Ok(StepResult {
            observation: encode_observation(self),
            reward,
            done: self.is_done(),
            cause: self.status,
            events,
        })
    }
}

/// Computes the nine observation features from the authoritative state.
pub fn encode_observation(state: &WorldState) -> Observation {
    let b = &state.body;
    let tiles = &state.tiles;
    let on_ground = b.on_ground(tiles);

    let mut near = 0u16;
    let mut mid = 0u16;
    let mut closest: Option<(i32, i32, i32)> = None; // (dist², dy, dx)
    for e in state.enemies.iter().filter(|e| e.alive) {
        let (dx, dy) = (e.x - b.x, e.y - b.y);
        let cheb = dx.abs().max(dy.abs());
        if let Some(d) = compass(dx, dy) {
            match cheb {
                1 => near |= 1 << d,
                2 | 3 => mid |= 1 << d,
                _ => {}
            }
        }
        if cheb <= RECEPTIVE_RADIUS {
            // row-major scan order over the receptive field breaks distance ties
            let key = (dx * dx + dy * dy, dy, dx);
            if closest.is_none_or(|c| key < c) {
                closest = Some(key);
            }
        }
    }

    let front = b.x + b.facing;
    let mut obstacles = 0u16;
    for j in 0..4 {
        let wall = front < 0 || front as usize >= tiles.width || tiles.is_solid(front, b.y + j);
        if wall {
            obstacles |= 1 << j;
        }
    }

    let direction = compass(state.last_move.0, state.last_move.1).unwrap_or(STILL);
    let (cx, cy) = match closest {
        Some((_, dy, dx)) => ((dx + RECEPTIVE_RADIUS) as u16, (dy + RECEPTIVE_RADIUS) as u16),
        None => (ENEMY_ABSENT, ENEMY_ABSENT),
    };
    Observation {
        can_jump: u16::from(b.can_jump(tiles)),
        on_ground: u16::from(on_ground),
        can_shoot: u16::from(state.mode == Mode::Fire && state.fire_cooldown == 0),
        direction,
        enemies_near: near,
        enemies_mid: mid,
        obstacles,
        closest_enemy_x: cx,
        closest_enemy_y: cy,
    }
}

/// One platformer episode: configuration, level and live state.
#[derive(Debug, Clone)]
pub struct Platformer {
    cfg: EnvConfig,
    state: WorldState,
    observation: Observation,
    log: Option<Vec<Event>>,
}

impl Platformer {
    pub fn new(spec: &LevelSpec, start_mode: Mode, cfg: EnvConfig) -> Self {
        let state = WorldState::new(spec, start_mode);
        let observation = encode_observation(&state);
        Self { cfg, state, observation, log: None }
    }

    /// Keeps every event of the episode for [`Platformer::events`].
    pub fn with_event_log(mut self) -> Self {
        self.log = Some(Vec::new());
        self
    }

    /// Restarts on `spec` and returns the initial observation.
    pub fn reset(&mut self, spec: &LevelSpec, start_mode: Mode) -> Observation {
        self.state = WorldState::new(spec, start_mode);
        self.observation = encode_observation(&self.state);
        if let Some(log) = &mut self.log {
            log.clear();
        }
        self.observation
    }

    pub fn observation(&self) -> Observation {
        self.observation
    }

    pub fn state(&self) -> &WorldState {
        &self.state
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn events(&self) -> &[Event] {
        self.log.as_deref().unwrap_or(&[])
    }

    pub fn step(&mut self, action: Action) -> Result<StepResult, EnvError> {
        let result = self.state.step(action, &self.cfg)?;
        self.observation = result.observation;
        if let Some(log) = &mut self.log {
            log.extend_from_slice(&result.events);
        }
        Ok(result)
    }
}

pub fn write_event_log_csv<W: Write>(out: &mut W, events: &[Event]) -> std::io::Result<()> {
    writeln!(out, "tick,event,reward")?;
    for e in events {
        writeln!(out, "{},{},{}", e.tick, e.kind.as_str(), fmt_num(e.reward))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{generate_level, Direction, LevelSpec, Spawn};

    /// Flat 40-column level with ground rows 0 and 1 and nothing else.
    fn flat_level() -> LevelSpec {
        let mut tiles = TileGrid::new(40, 12);
        for x in 0..40 {
            tiles.set(x, 0, Tile::Ground);
            tiles.set(x, 1, Tile::Ground);
        }
        LevelSpec {
            seed: 0,
            difficulty: 0,
            length: 40,
            tiles,
            spawns: Vec::new(),
            start: (5, 2),
            finish_x: 38,
        }
    }

    fn right(jump: bool) -> Action {
        Action { direction: Direction::Right, jump, speed: Speed::Normal }
    }

    #[test]
    fn reset_reports_mode_and_empty_neighbourhood() {
        let spec = flat_level();
        let fire = Platformer::new(&spec, Mode::Fire, EnvConfig::default()).observation();
        assert_eq!(fire.can_shoot, 1);
        let small = Platformer::new(&spec, Mode::Small, EnvConfig::default()).observation();
        assert_eq!(small.can_shoot, 0);
        assert_eq!(small.on_ground, 1);
        assert_eq!(small.can_jump, 1);
        assert_eq!(small.enemies_near, 0);
        assert_eq!(small.direction, STILL);
        assert_eq!((small.closest_enemy_x, small.closest_enemy_y), (ENEMY_ABSENT, ENEMY_ABSENT));
    }

    #[test]
    fn noop_on_flat_ground_is_quiet() {
        let mut env = Platformer::new(&flat_level(), Mode::Large, EnvConfig::default());
        let r = env.step(Action::NOOP).unwrap();
        assert_eq!(r.reward, 0.0);
        assert!(!r.done);
        assert_eq!(r.cause, Termination::Running);
        assert_eq!(r.observation.direction, STILL);
    }

    #[test]
    fn coin_is_collected_once() {
        let mut spec = flat_level();
        spec.tiles.set(6, 2, Tile::Coin);
        let mut env = Platformer::new(&spec, Mode::Small, EnvConfig::default());
        let r = env.step(right(false)).unwrap();
        assert_eq!(r.reward, 16.0);
        assert_eq!(r.observation.direction, 0);
        env.step(Action::from_index(4).unwrap()).unwrap(); // back left
        let r = env.step(right(false)).unwrap();
        assert_eq!(r.reward, 0.0);
    }

    #[test]
    fn goomba_contact_hurts_or_kills() {
        let mut spec = flat_level();
        spec.spawns.push(Spawn { x: 7, y: 2, kind: EntityKind::Goomba });
        let cfg = EnvConfig { enemy_period: 0, ..EnvConfig::default() };

        let mut env = Platformer::new(&spec, Mode::Small, cfg.clone());
        env.step(right(false)).unwrap();
        let r = env.step(right(false)).unwrap();
        assert_eq!(r.reward, -512.0);
        assert!(r.done);
        assert_eq!(r.cause, Termination::Died);
        assert_eq!(env.step(Action::NOOP), Err(EnvError::StepAfterDone));

        let mut env = Platformer::new(&spec, Mode::Fire, cfg);
        env.step(right(false)).unwrap();
        let r = env.step(right(false)).unwrap();
        assert_eq!(r.reward, -42.0);
        assert!(!r.done);
        assert_eq!(env.state().mode, Mode::Large);
    }

    #[test]
    fn stomp_kills_goomba() {
        let mut spec = flat_level();
        spec.spawns.push(Spawn { x: 8, y: 2, kind: EntityKind::Goomba });
        let cfg = EnvConfig { enemy_period: 0, ..EnvConfig::default() };
        let mut env = Platformer::new(&spec, Mode::Small, cfg);
        // rise three cells while walking right to x = 8, then drop onto the goomba
        for _ in 0..3 {
            assert_eq!(env.step(right(true)).unwrap().reward, 0.0);
        }
        assert_eq!((env.state().body.x, env.state().body.y), (8, 5));
        let mut total = 0.0;
        for _ in 0..3 {
            total += env.step(Action::NOOP).unwrap().reward;
        }
        assert_eq!(total, 10.0);
        assert!(env.state().enemies.iter().all(|e| !e.alive));
    }

    #[test]
    fn fireball_kills_enemy_ahead() {
        let mut spec = flat_level();
        spec.spawns.push(Spawn { x: 10, y: 2, kind: EntityKind::Goomba });
        let cfg = EnvConfig { enemy_period: 0, ..EnvConfig::default() };
        let mut env = Platformer::new(&spec, Mode::Fire, cfg);
        let shoot = Action { direction: Direction::None, jump: false, speed: Speed::RunFire };
        let r = env.step(shoot).unwrap();
        assert_eq!(r.reward, 10.0);
        assert_eq!(r.observation.can_shoot, 0);
    }

    #[test]
    fn finishing_pays_out() {
        let mut env = Platformer::new(&flat_level(), Mode::Small, EnvConfig::default());
        let mut total = 0.0;
        loop {
            let r = env.step(Action::from_index(9).unwrap()).unwrap(); // right + run
            total += r.reward;
            if r.done {
                assert_eq!(r.cause, Termination::Finished);
                break;
            }
        }
        assert_eq!(total, 1024.0);
    }

    #[test]
    fn timeout_ends_episode() {
        let cfg = EnvConfig { step_limit: 5, ..EnvConfig::default() };
        let mut env = Platformer::new(&flat_level(), Mode::Small, cfg);
        for i in 0..5 {
            let r = env.step(Action::NOOP).unwrap();
            assert_eq!(r.done, i == 4);
        }
        assert_eq!(env.state().status, Termination::Timeout);
    }

    #[test]
    fn single_goomba_east_sets_one_bit() {
        let mut spec = flat_level();
        spec.spawns.push(Spawn { x: 6, y: 2, kind: EntityKind::Goomba });
        let state = WorldState::new(&spec, Mode::Small);
        let o = encode_observation(&state);
        assert_eq!(o.enemies_near, 1);
        assert_eq!(o.enemies_mid, 0);
        assert_eq!((o.closest_enemy_x, o.closest_enemy_y), (11, 10));
    }

    #[test]
    fn distant_goomba_only_in_receptive_field() {
        let mut spec = flat_level();
        spec.spawns.push(Spawn { x: 10, y: 2, kind: EntityKind::Goomba });
        let o = encode_observation(&WorldState::new(&spec, Mode::Small));
        assert_eq!((o.enemies_near, o.enemies_mid), (0, 0));
        assert_eq!((o.closest_enemy_x, o.closest_enemy_y), (15, 10));
        spec.spawns[0].x = 16;
        let o = encode_observation(&WorldState::new(&spec, Mode::Small));
        assert!(o.enemy_absent());
    }

    #[test]
    fn two_high_wall_ahead() {
        let mut spec = flat_level();
        spec.tiles.set(6, 2, Tile::Brick);
        spec.tiles.set(6, 3, Tile::Brick);
        let o = encode_observation(&WorldState::new(&spec, Mode::Small));
        assert_eq!(o.obstacles, 0b0011);
    }

    #[test]
    fn closest_enemy_tie_breaks_by_scan_order() {
        let mut spec = flat_level();
        spec.spawns.push(Spawn { x: 8, y: 2, kind: EntityKind::Goomba });
        spec.spawns.push(Spawn { x: 2, y: 2, kind: EntityKind::Goomba });
        let o = encode_observation(&WorldState::new(&spec, Mode::Small));
        // both at distance 3; the western one comes first in row-major order
        assert_eq!(o.closest_enemy_x, 7);
        assert_eq!(o.enemies_mid, (1 << 0) | (1 << 1));
    }

    #[test]
    fn hidden_block_reveals_once() {
        let mut spec = flat_level();
        spec.tiles.set(5, 5, Tile::HiddenBlock);
        let mut env = Platformer::new(&spec, Mode::Small, EnvConfig::default());
        let jump = Action { direction: Direction::None, jump: true, speed: Speed::Normal };
        let rewards: Vec<f64> = (0..4).map(|_| env.step(jump).unwrap().reward).collect();
        assert_eq!(rewards.iter().sum::<f64>(), 24.0);
        assert_eq!(env.state().tiles.get(5, 5), Tile::Brick);
    }

    #[test]
    fn mushroom_and_flower_power_up() {
        let mut spec = flat_level();
        spec.spawns.push(Spawn { x: 6, y: 2, kind: EntityKind::Mushroom });
        spec.spawns.push(Spawn { x: 7, y: 2, kind: EntityKind::Fireflower });
        let mut env = Platformer::new(&spec, Mode::Small, EnvConfig::default());
        assert_eq!(env.step(right(false)).unwrap().reward, 58.0);
        assert_eq!(env.state().mode, Mode::Large);
        let r = env.step(right(false)).unwrap();
        assert_eq!(r.reward, 64.0);
        assert_eq!(r.observation.can_shoot, 1);
    }

    #[test]
    fn event_log_csv() {
        let mut spec = flat_level();
        spec.tiles.set(6, 2, Tile::Coin);
        let mut env = Platformer::new(&spec, Mode::Small, EnvConfig::default()).with_event_log();
        env.step(right(false)).unwrap();
        let mut buf = Vec::new();
        write_event_log_csv(&mut buf, env.events()).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "tick,event,reward\n0,coin,1.60000000000000e1\n");
    }

    #[test]
    fn generated_level_runs() {
        let spec = generate_level(11, 0).unwrap();
        let mut env = Platformer::new(&spec, Mode::Large, EnvConfig::default());
        let mut steps = 0;
        while !env.step(right(steps % 2 == 0)).unwrap().done {
            steps += 1;
        }
        assert!(steps < 2000);
    }
}
