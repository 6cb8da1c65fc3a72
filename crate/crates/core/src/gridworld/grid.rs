//! Grid layouts, generation, and the step dynamics.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::rng::ExperimentRng;

/// The four moves, in fixed index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    Up = 0,
    Down = 1,
    Left = 2,
    Right = 3,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::Up, Action::Down, Action::Left, Action::Right];

    pub fn from_index(i: usize) -> Action {
        Self::ALL[i]
    }

    fn delta(self) -> (isize, isize) {
        match self {
            Action::Up => (0, -1),
            Action::Down => (0, 1),
            Action::Left => (-1, 0),
            Action::Right => (1, 0),
        }
    }
}

/// A fixed gridworld layout. Cells are indexed row-major: `state = y*width + x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
    pub walls: Vec<bool>,
    pub reward: Vec<f64>,
    pub terminal: Vec<bool>,
    pub start: usize,
    pub seed: u64,
}

impl GridSpec {
    pub fn n_states(&self) -> usize {
        self.width * self.height
    }

    pub fn xy(&self, state: usize) -> (usize, usize) {
        (state % self.width, state / self.width)
    }

    pub fn state(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    /// Destination of a move ignoring noise: walls and borders block, leaving
    /// the position unchanged.
    pub fn destination(&self, state: usize, action: Action) -> usize {
        let (x, y) = self.xy(state);
        let (dx, dy) = action.delta();
        let nx = x as isize + dx;
        let ny = y as isize + dy;
        if nx < 0 || ny < 0 || nx >= self.width as isize || ny >= self.height as isize {
            return state;
        }
        let next = self.state(nx as usize, ny as usize);
        if self.walls[next] {
            state
        } else {
            next
        }
    }

    /// States reachable from the start by legal moves; terminal cells are
    /// reachable but absorb (no expansion through them).
    pub fn reachable_from_start(&self) -> Vec<bool> {
        let mut seen = vec![false; self.n_states()];
        let mut queue = VecDeque::new();
        seen[self.start] = true;
        queue.push_back(self.start);
        while let Some(s) = queue.pop_front() {
            if self.terminal[s] {
                continue;
            }
            for action in Action::ALL {
                let next = self.destination(s, action);
                if !seen[next] {
                    seen[next] = true;
                    queue.push_back(next);
                }
            }
        }
        seen
    }
}

/// Generator knobs; defaults follow the experiment's standard distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridGenConfig {
    pub width: usize,
    pub height: usize,
    /// Wall probability for interior cells; the border ring stays open.
    pub wall_prob: f64,
    pub n_plus5: usize,
    pub n_plus10: usize,
    pub n_minus5_terminal: usize,
    pub n_minus1: usize,
    pub max_attempts: usize,
}

impl Default for GridGenConfig {
    fn default() -> Self {
        Self {
            width: 15,
            height: 15,
            wall_prob: 0.15,
            n_plus5: 2,
            n_plus10: 2,
            n_minus5_terminal: 2,
            n_minus1: 2,
            max_attempts: 100,
        }
    }
}

/// Samples an auxiliary environment: walls, two reward tiers (both
/// terminating), negative rewards, and a start cell from which at least one
/// +5 and one +10 are reachable.
pub fn sample_env(config: &GridGenConfig, rng: &mut ExperimentRng) -> Result<GridSpec> {
    let seed_tag = rng.random::<u64>();
    for _ in 0..config.max_attempts {
        if let Some(grid) = try_sample(config, rng, seed_tag) {
            return Ok(grid);
        }
    }
    Err(Error::EnvGeneration {
        attempts: config.max_attempts,
    })
}

fn try_sample(config: &GridGenConfig, rng: &mut ExperimentRng, seed_tag: u64) -> Option<GridSpec> {
    let (w, h) = (config.width, config.height);
    let n = w * h;
    let mut walls = vec![false; n];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            if rng.random::<f64>() < config.wall_prob {
                walls[y * w + x] = true;
            }
        }
    }
    let mut free: Vec<usize> = (0..n).filter(|&s| !walls[s]).collect();
    let special = config.n_plus5 + config.n_plus10 + config.n_minus5_terminal + config.n_minus1;
    if free.len() < special + 1 {
        return None;
    }
    // Partial Fisher-Yates: the first `special + 1` entries become the
    // special cells plus the start.
    for i in 0..special + 1 {
        let j = i + rng.random_range(0..free.len() - i);
        free.swap(i, j);
    }
    let mut reward = vec![0.0; n];
    let mut terminal = vec![false; n];
    let mut it = free.iter().copied();
    let mut place = |count: usize, r: f64, t: bool, it: &mut dyn Iterator<Item = usize>| {
        for _ in 0..count {
            let cell = it.next().expect("enough free cells");
            reward[cell] = r;
            terminal[cell] = t;
        }
    };
    place(config.n_plus5, 5.0, true, &mut it);
    place(config.n_plus10, 10.0, true, &mut it);
    place(config.n_minus5_terminal, -5.0, true, &mut it);
    place(config.n_minus1, -1.0, false, &mut it);
    drop(place);
    let start = it.next().expect("enough free cells");

    let grid = GridSpec {
        width: w,
        height: h,
        walls,
        reward,
        terminal,
        start,
        seed: seed_tag,
    };
    let reachable = grid.reachable_from_start();
    let tier_reachable = |value: f64| {
        grid.reward
            .iter()
            .zip(&reachable)
            .any(|(&r, &seen)| r == value && seen)
    };
    let need5 = config.n_plus5 == 0 || tier_reachable(5.0);
    let need10 = config.n_plus10 == 0 || tier_reachable(10.0);
    (need5 && need10).then_some(grid)
}

/// The main environment: the auxiliary layout with +10 cells made inert
/// (reward 0, non-terminating). Everything else is untouched.
pub fn derive_main(aux: &GridSpec) -> GridSpec {
    let mut main = aux.clone();
    for s in 0..main.n_states() {
        if aux.reward[s] == 10.0 {
            main.reward[s] = 0.0;
            main.terminal[s] = false;
        }
    }
    main
}

/// An auxiliary environment and its derived main environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvPair {
    pub aux: GridSpec,
    pub main: GridSpec,
}

impl EnvPair {
    pub fn sample(config: &GridGenConfig, rng: &mut ExperimentRng) -> Result<EnvPair> {
        let aux = sample_env(config, rng)?;
        let main = derive_main(&aux);
        Ok(EnvPair { aux, main })
    }
}

/// Transition stochasticity. The defaults are the experiment's; tests may
/// switch either channel off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Dynamics {
    /// With this probability the commanded action is redrawn uniformly from
    /// all four actions (so the redraw may repeat the command).
    pub noise_prob: f64,
    /// With this probability the transition is overridden by a move to a
    /// zero-reward terminal state.
    pub kill_prob: f64,
}

impl Default for Dynamics {
    fn default() -> Self {
        Self {
            noise_prob: 0.10,
            kill_prob: 0.01,
        }
    }
}

/// Result of one environment step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub next_state: usize,
    pub reward: f64,
    pub done: bool,
    /// The action actually executed; `None` when the kill override fired.
    pub executed: Option<Action>,
}

/// Executes one step. Rewards are granted on entering a cell; blocked moves
/// stay put and yield zero.
pub fn env_step(
    env: &GridSpec,
    state: usize,
    action: Action,
    dynamics: &Dynamics,
    rng: &mut ExperimentRng,
) -> Result<StepOutcome> {
    if env.terminal[state] {
        return Err(Error::SteppedFromTerminal { state });
    }
    if dynamics.kill_prob > 0.0 && rng.random::<f64>() < dynamics.kill_prob {
        return Ok(StepOutcome {
            next_state: state,
            reward: 0.0,
            done: true,
            executed: None,
        });
    }
    let executed = if dynamics.noise_prob > 0.0 && rng.random::<f64>() < dynamics.noise_prob {
        Action::from_index(rng.random_range(0..4))
    } else {
        action
    };
    let next = env.destination(state, executed);
    let (reward, done) = if next == state {
        (0.0, false)
    } else {
        (env.reward[next], env.terminal[next])
    };
    Ok(StepOutcome {
        next_state: next,
        reward,
        done,
        executed: Some(executed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::rng::child_rng;

    fn quiet() -> Dynamics {
        Dynamics {
            noise_prob: 0.0,
            kill_prob: 0.0,
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let config = GridGenConfig::default();
        let a = sample_env(&config, &mut child_rng(3, 0)).unwrap();
        let b = sample_env(&config, &mut child_rng(3, 0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn generated_grid_has_expected_reward_cells() {
        let config = GridGenConfig::default();
        let grid = sample_env(&config, &mut child_rng(3, 1)).unwrap();
        let count = |v: f64| grid.reward.iter().filter(|&&r| r == v).count();
        assert_eq!(count(10.0), 2);
        assert_eq!(count(5.0), 2);
        assert_eq!(count(-5.0), 2);
        assert_eq!(count(-1.0), 2);
        for s in 0..grid.n_states() {
            if grid.reward[s] == 10.0 || grid.reward[s] == 5.0 || grid.reward[s] == -5.0 {
                assert!(grid.terminal[s]);
            }
            if grid.reward[s] == -1.0 {
                assert!(!grid.terminal[s]);
            }
        }
        assert!(!grid.walls[grid.start]);
        assert_eq!(grid.reward[grid.start], 0.0);
    }

    #[test]
    fn positive_reward_reachable_in_sampled_grids() {
        let config = GridGenConfig::default();
        let mut rng = child_rng(3, 2);
        for _ in 0..1000 {
            let grid = sample_env(&config, &mut rng).unwrap();
            let reachable = grid.reachable_from_start();
            let hit = grid
                .reward
                .iter()
                .zip(&reachable)
                .any(|(&r, &seen)| r > 0.0 && seen);
            assert!(hit);
        }
    }

    #[test]
    fn derive_main_rewrites_only_plus10() {
        let config = GridGenConfig::default();
        let aux = sample_env(&config, &mut child_rng(3, 3)).unwrap();
        let main = derive_main(&aux);
        let mut changed = 0;
        for s in 0..aux.n_states() {
            if aux.reward[s] == 10.0 {
                assert_eq!(main.reward[s], 0.0);
                assert!(!main.terminal[s]);
                changed += 1;
            } else {
                assert_eq!(main.reward[s], aux.reward[s]);
                assert_eq!(main.terminal[s], aux.terminal[s]);
            }
        }
        assert_eq!(changed, 2);
        // Positive reward mass drops by exactly 10 per +10 cell.
        let pos = |g: &GridSpec| g.reward.iter().filter(|r| **r > 0.0).sum::<f64>();
        assert_eq!(pos(&aux) - pos(&main), 20.0);
        // Idempotent.
        assert_eq!(derive_main(&main), main);
    }

    #[test]
    fn blocked_moves_stay_put_with_zero_reward() {
        let config = GridGenConfig::default();
        let grid = sample_env(&config, &mut child_rng(3, 4)).unwrap();
        // Top-left corner: moving up or left is always blocked by the border.
        let corner = grid.state(0, 0);
        if !grid.walls[corner] && !grid.terminal[corner] {
            let mut rng = child_rng(3, 5);
            let out = env_step(&grid, corner, Action::Up, &quiet(), &mut rng).unwrap();
            assert_eq!(out.next_state, corner);
            assert_eq!(out.reward, 0.0);
            assert!(!out.done);
        }
    }

    #[test]
    fn stepping_from_terminal_errors() {
        let config = GridGenConfig::default();
        let grid = sample_env(&config, &mut child_rng(3, 6)).unwrap();
        let terminal = (0..grid.n_states()).find(|&s| grid.terminal[s]).unwrap();
        let mut rng = child_rng(3, 7);
        assert!(env_step(&grid, terminal, Action::Up, &Dynamics::default(), &mut rng).is_err());
    }

    #[test]
    fn empirical_kill_and_noise_rates() {
        let config = GridGenConfig::default();
        let grid = sample_env(&config, &mut child_rng(3, 8)).unwrap();
        let mut rng = child_rng(3, 9);
        let dynamics = Dynamics::default();
        let mut kills = 0u32;
        let mut noisy = 0u32;
        let total = 1_000_000;
        let mut state = grid.start;
        for _ in 0..total {
            let out = env_step(&grid, state, Action::Right, &dynamics, &mut rng).unwrap();
            match out.executed {
                None => kills += 1,
                Some(a) if a != Action::Right => noisy += 1,
                _ => {}
            }
            state = if out.done { grid.start } else { out.next_state };
        }
        let kill_rate = kills as f64 / total as f64;
        // A quarter of redraws repeat the command, so the visible rate is 7.5%.
        let noise_rate = noisy as f64 / total as f64;
        assert!((kill_rate - 0.01).abs() < 0.001, "kill rate {kill_rate}");
        assert!((noise_rate - 0.075).abs() < 0.003, "noise rate {noise_rate}");
    }
}
