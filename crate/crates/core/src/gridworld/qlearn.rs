//! Tabular Q-learning teacher and its temperature-softened policy.

use serde::{Deserialize, Serialize};

use crate::harness::rng::ExperimentRng;

use super::grid::{env_step, Action, Dynamics, GridSpec};

/// State-action values, indexed `[state][action]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    pub values: Vec<[f64; 4]>,
}

impl QTable {
    pub fn zeros(n_states: usize) -> Self {
        Self {
            values: vec![[0.0; 4]; n_states],
        }
    }

    /// Greedy action, ties broken by the lowest action index.
    pub fn greedy(&self, state: usize) -> Action {
        let row = &self.values[state];
        let mut best = 0;
        for (i, v) in row.iter().enumerate().skip(1) {
            if *v > row[best] {
                best = i;
            }
        }
        Action::from_index(best)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QLearnConfig {
    pub lr: f64,
    pub gamma: f64,
    /// Total environment transitions experienced during training.
    pub steps: usize,
    pub dynamics: Dynamics,
}

impl Default for QLearnConfig {
    fn default() -> Self {
        Self {
            lr: 0.1,
            gamma: 0.95,
            steps: 50_000,
            dynamics: Dynamics::default(),
        }
    }
}

/// Q-learning with a uniform-random behavior policy, restarting from the
/// start cell after every termination.
pub fn q_learning(env: &GridSpec, config: &QLearnConfig, rng: &mut ExperimentRng) -> QTable {
    let mut q = QTable::zeros(env.n_states());
    let mut state = env.start;
    for _ in 0..config.steps {
        let action = Action::from_index(rand::Rng::random_range(rng, 0..4));
        let out = env_step(env, state, action, &config.dynamics, rng).expect("non-terminal state");
        let target = if out.done {
            out.reward
        } else {
            let next_best = q.values[out.next_state]
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
            out.reward + config.gamma * next_best
        };
        let cell = &mut q.values[state][action as usize];
        *cell += config.lr * (target - *cell);
        state = if out.done { env.start } else { out.next_state };
    }
    q
}

/// Per-state action distributions derived from a Q-table at a temperature.
/// Temperature zero is the deterministic greedy policy.
#[derive(Debug, Clone, PartialEq)]
pub struct TeacherPolicy {
    probs: Vec<[f64; 4]>,
    pub temperature: f64,
}

impl TeacherPolicy {
    pub fn probs(&self, state: usize) -> Option<&[f64; 4]> {
        self.probs.get(state)
    }

    pub fn n_states(&self) -> usize {
        self.probs.len()
    }
}

pub fn teacher_policy(q: &QTable, temperature: f64) -> TeacherPolicy {
    assert!(temperature >= 0.0, "temperature must be non-negative");
    let probs = q
        .values
        .iter()
        .enumerate()
        .map(|(state, row)| {
            if temperature == 0.0 {
                let mut one_hot = [0.0; 4];
                one_hot[q.greedy(state) as usize] = 1.0;
                one_hot
            } else {
                softmax_scaled(row, temperature)
            }
        })
        .collect();
    TeacherPolicy {
        probs,
        temperature,
    }
}

fn softmax_scaled(row: &[f64; 4], temperature: f64) -> [f64; 4] {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out = [0.0; 4];
    let mut sum = 0.0;
    for (o, v) in out.iter_mut().zip(row) {
        *o = ((v - max) / temperature).exp();
        sum += *o;
    }
    for o in &mut out {
        *o /= sum;
    }
    out
}
