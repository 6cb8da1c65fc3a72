//! Tabular softmax student: episode rollouts, the policy-gradient estimate,
//! and the distillation gradient.
//!
//! Gradients live in flat vectors over all logits (`state*4 + action`), so
//! the gating primitives apply to them directly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::rng::ExperimentRng;
use crate::vector::ParamVector;

use super::grid::{env_step, Action, Dynamics, GridSpec};
use super::qlearn::TeacherPolicy;

/// Student policy: per-state action logits plus a per-state value baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxPolicy {
    pub logits: Vec<[f64; 4]>,
    pub baseline: Vec<f64>,
}

impl SoftmaxPolicy {
    /// Uniform policy (zero logits) with zero baselines.
    pub fn new(n_states: usize) -> Self {
        Self {
            logits: vec![[0.0; 4]; n_states],
            baseline: vec![0.0; n_states],
        }
    }

    pub fn n_states(&self) -> usize {
        self.logits.len()
    }

    pub fn action_probs(&self, state: usize) -> [f64; 4] {
        let row = &self.logits[state];
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut out = [0.0; 4];
        let mut sum = 0.0;
        for (o, l) in out.iter_mut().zip(row) {
            *o = (l - max).exp();
            sum += *o;
        }
        for o in &mut out {
            *o /= sum;
        }
        out
    }

    pub fn sample_action(&self, state: usize, rng: &mut ExperimentRng) -> Action {
        let probs = self.action_probs(state);
        let mut r: f64 = rand::Rng::random(rng);
        for (i, p) in probs.iter().enumerate() {
            if r < *p {
                return Action::from_index(i);
            }
            r -= p;
        }
        Action::Right
    }

    /// Adds `scale * grad` to the logits.
    pub fn apply_logit_update(&mut self, grad: &ParamVector, scale: f64) {
        debug_assert_eq!(grad.len(), self.logits.len() * 4);
        let values = grad.values();
        for (state, row) in self.logits.iter_mut().enumerate() {
            for (a, logit) in row.iter_mut().enumerate() {
                *logit += scale * values[state * 4 + a];
            }
        }
    }
}

/// One rollout: `(state, action, reward)` per step. `terminated` is true when
/// the episode ended on a terminal cell rather than the kill channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub steps: Vec<(usize, Action, f64)>,
    pub terminated: bool,
}

impl Episode {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|(_, _, r)| r).sum()
    }
}

/// Samples one episode from the start cell. The kill channel must be active;
/// it is what makes episodes almost surely finite.
pub fn run_episode(
    env: &GridSpec,
    policy: &SoftmaxPolicy,
    dynamics: &Dynamics,
    rng: &mut ExperimentRng,
) -> Episode {
    assert!(dynamics.kill_prob > 0.0, "kill channel keeps episodes finite");
    let mut steps = Vec::new();
    let mut state = env.start;
    loop {
        let action = policy.sample_action(state, rng);
        let out = env_step(env, state, action, dynamics, rng).expect("non-terminal state");
        steps.push((state, action, out.reward));
        if out.done {
            return Episode {
                steps,
                terminated: out.executed.is_some(),
            };
        }
        state = out.next_state;
    }
}

/// Gradient of the squared baseline error, as `(state, d/dB)` contributions.
pub type BaselineGrad = Vec<(usize, f64)>;

/// The policy-gradient estimate for one episode.
#[derive(Debug, Clone)]
pub struct PgUpdate {
    /// Ascent direction on expected return, over all logits.
    pub logit_grad: ParamVector,
    /// Gradient of `sum_t (B_s_t - R_t)^2` with respect to the baselines.
    pub baseline_grad: BaselineGrad,
}

/// Episode-level policy gradient with value baseline.
///
/// For each visited `(s, a)` with return-to-go `R` the logit block at `s`
/// receives `(onehot(a) - pi(.|s)) * (R - B_s)`. Returns-to-go are discounted
/// by `gamma` when `discounted` is set, plain sums otherwise. Policy and
/// baseline are read frozen; the caller applies both updates afterwards.
pub fn pg_update(
    policy: &SoftmaxPolicy,
    episode: &Episode,
    gamma: f64,
    discounted: bool,
) -> PgUpdate {
    assert!(!episode.is_empty(), "episode must contain at least one step");
    let n = episode.len();
    let mut returns = vec![0.0; n];
    let mut acc = 0.0;
    for (i, (_, _, reward)) in episode.steps.iter().enumerate().rev() {
        acc = reward + if discounted { gamma * acc } else { acc };
        returns[i] = acc;
    }
    let mut grad = vec![0.0; policy.n_states() * 4];
    let mut baseline_grad = Vec::with_capacity(n);
    for ((state, action, _), ret) in episode.steps.iter().zip(&returns) {
        let advantage = ret - policy.baseline[*state];
        let probs = policy.action_probs(*state);
        let block = &mut grad[state * 4..state * 4 + 4];
        for (a, p) in probs.iter().enumerate() {
            block[a] -= p * advantage;
        }
        block[*action as usize] += advantage;
        baseline_grad.push((*state, 2.0 * (policy.baseline[*state] - ret)));
    }
    PgUpdate {
        logit_grad: ParamVector::new(grad).expect("finite gradient"),
        baseline_grad,
    }
}

/// Distillation direction: per visited state, `teacher(.|s) - student(.|s)`
/// on the logit block — the ascent direction on agreement with the teacher
/// (the negative gradient of the per-state cross-entropy).
pub fn distill_gradient(
    policy: &SoftmaxPolicy,
    teacher: &TeacherPolicy,
    episode: &Episode,
) -> Result<ParamVector> {
    let mut grad = vec![0.0; policy.n_states() * 4];
    for (state, _, _) in &episode.steps {
        let teacher_probs = teacher
            .probs(*state)
            .ok_or(Error::TeacherUndefined { state: *state })?;
        let student_probs = policy.action_probs(*state);
        let block = &mut grad[state * 4..state * 4 + 4];
        for a in 0..4 {
            block[a] += teacher_probs[a] - student_probs[a];
        }
    }
    ParamVector::new(grad)
}
