use rand::Rng as _;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use super::{LearnerError, LearnerParams, StateKey};
use crate::seed::Rng;

/// Traces below this are dropped from the sparse map.
pub const TRACE_EVICTION: f64 = 1e-6;

type Pair = (StateKey, u8);

type Row = SmallVec<[f64; 12]>;

/// Sparse action-value table; unvisited pairs read as 0.
///
/// Storage is one row per visited state. A pair counts as materialized once
/// it holds a nonzero value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QTable {
    num_actions: usize,
    rows: FxHashMap<StateKey, (Row, u16)>,
}

impl QTable {
    pub fn new(num_actions: usize) -> Self {
        assert!((1..=256).contains(&num_actions), "action count must fit in a u8");
        Self { num_actions, rows: FxHashMap::default() }
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn get(&self, s: &StateKey, a: usize) -> f64 {
        self.rows.get(s).map_or(0.0, |(r, _)| r[a])
    }

    fn row_mut(&mut self, s: &StateKey) -> &mut (Row, u16) {
        if !self.rows.contains_key(s) {
            self.rows.insert(s.clone(), (SmallVec::from_elem(0.0, self.num_actions), 0));
        }
        self.rows.get_mut(s).expect("row present")
    }

    fn write(&mut self, s: &StateKey, a: usize, value: f64) {
        let row = self.row_mut(s);
        match (row.0[a] == 0.0, value == 0.0) {
            (true, false) => row.1 += 1,
            (false, true) => row.1 -= 1,
            _ => {}
        }
        row.0[a] = value;
    }

    fn add(&mut self, pair: &Pair, delta: f64) {
        let (s, a) = (&pair.0, usize::from(pair.1));
        let v = self.get(s, a) + delta;
        self.write(s, a, v);
    }

    /// Number of materialized `(state, action)` pairs.
    pub fn len(&self) -> usize {
        self.rows.values().map(|(_, n)| usize::from(*n)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, s: &StateKey) -> Row {
        match self.rows.get(s) {
            Some((r, _)) => r.clone(),
            None => SmallVec::from_elem(0.0, self.num_actions),
        }
    }

    /// Maximum value at `s` and every action attaining it.
    pub fn greedy(&self, s: &StateKey) -> (f64, SmallVec<[u8; 12]>) {
        let Some((row, _)) = self.rows.get(s) else {
            return (0.0, (0..self.num_actions).map(|a| a as u8).collect());
        };
        let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let ties = (0..row.len()).filter(|&a| row[a] == best).map(|a| a as u8).collect();
        (best, ties)
    }

    fn max_at(&self, s: &StateKey) -> f64 {
        self.rows.get(s).map_or(0.0, |(r, _)| r.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    }

    pub fn max_abs(&self) -> f64 {
        self.rows.values().flat_map(|(r, _)| r.iter()).fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Written entries sorted by key, for stable serialization and comparisons.
    pub fn entries(&self) -> Vec<(StateKey, u8, f64)> {
        let mut out: Vec<_> = self
            .rows
            .iter()
            .flat_map(|(s, (r, _))| r.iter().enumerate().filter(|(_, v)| **v != 0.0).map(move |(a, v)| (s.clone(), a as u8, *v)))
            .collect();
        out.sort_by(|x, y| (&x.0, x.1).cmp(&(&y.0, y.1)));
        out
    }

    pub fn to_snapshot(&self) -> QTableSnapshot {
        QTableSnapshot {
            num_actions: self.num_actions,
            entries: self
                .entries()
                .into_iter()
                .map(|(s, a, v)| (s.0.to_vec(), a, v))
                .collect(),
        }
    }

    pub fn from_snapshot(snap: &QTableSnapshot) -> Result<Self, LearnerError> {
        if snap.num_actions == 0 || snap.num_actions > 256 {
            return Err(LearnerError::Snapshot(format!("bad action count {}", snap.num_actions)));
        }
        let mut q = QTable::new(snap.num_actions);
        for (key, a, v) in &snap.entries {
            if usize::from(*a) >= snap.num_actions || !v.is_finite() {
                return Err(LearnerError::Snapshot(format!("bad entry {key:?}/{a}")));
            }
            q.write(&StateKey::from_slice(key), usize::from(*a), *v);
        }
        Ok(q)
    }
}

/// Checkpoint form of a [`QTable`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTableSnapshot {
    pub num_actions: usize,
    pub entries: Vec<(Vec<u16>, u8, f64)>,
}

impl QTableSnapshot {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("snapshot serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, LearnerError> {
        serde_json::from_str(text).map_err(|e| LearnerError::Snapshot(e.to_string()))
    }
}

/// Sparse replacing eligibility traces; every stored value is in `(0, 1]`.
#[derive(Debug, Clone, Default)]
pub struct EligibilityTraces {
    traces: FxHashMap<Pair, f64>,
}

impl EligibilityTraces {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clear(&mut self) {
        self.traces.clear();
    }

    pub fn get(&self, s: &StateKey, a: usize) -> f64 {
        self.traces.get(&(s.clone(), a as u8)).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.traces.values().copied()
    }
}

/// One observed step, as consumed by [`update`].
#[derive(Debug, Clone)]
pub struct Transition<'a> {
    pub state: &'a StateKey,
    pub action: usize,
    pub reward: f64,
    pub next_state: &'a StateKey,
    pub done: bool,
    /// whether the action about to be taken at `next_state` is greedy
    pub next_greedy: bool,
}

/// ε-greedy selection with uniform tie-breaking among maximizers.
///
/// Returns the action and whether it is greedy with respect to `q`.
pub fn select_action(q: &QTable, s: &StateKey, params: &LearnerParams, rng: &mut Rng) -> (usize, bool) {
    let (best, ties) = q.greedy(s);
    if rng.random::<f64>() < params.epsilon {
        let a = rng.random_range(0..q.num_actions());
        return (a, q.get(s, a) == best);
    }
    let a = ties[rng.random_range(0..ties.len())] as usize;
    (a, true)
}

/// Watkins's Q(λ) step with replacing traces.
///
/// `δ = r + γ·max Q(s′,·)·(1 − done) − Q(s,a)`, `e(s,a) ← 1`, then every
/// traced pair moves by `α·δ·e`. Traces decay by `γλ` when the next action is
/// greedy and are cut otherwise.
pub fn update(
    q: &mut QTable,
    traces: &mut EligibilityTraces,
    t: &Transition<'_>,
    params: &LearnerParams,
) -> Result<(), LearnerError> {
    if !t.reward.is_finite() {
        return Err(LearnerError::NonFiniteReward(t.reward));
    }
    if t.action >= q.num_actions() {
        return Err(LearnerError::BadAction(t.action));
    }
    let bootstrap = if t.done { 0.0 } else { q.max_at(t.next_state) };
    let delta = t.reward + params.gamma * bootstrap - q.get(t.state, t.action);
    traces.traces.insert((t.state.clone(), t.action as u8), 1.0);

    if delta != 0.0 {
        let step = params.alpha * delta;
        for (pair, e) in &traces.traces {
            q.add(pair, step * e);
        }
    }

    if t.next_greedy && !t.done {
        let decay = params.gamma * params.lambda;
        traces.traces.retain(|_, e| {
            *e *= decay;
            *e >= TRACE_EVICTION
        });
    } else {
        traces.traces.clear();
    }
    Ok(())
}
