//! The five training methods and the multi-pair experiment driver.

use serde::{Deserialize, Serialize};

use crate::gate::{combine, cosine, gate_weight, GateConfig};
use crate::harness::rng::{child_rng, ExperimentRng};
use crate::vector::ParamVector;

use crate::error::Result;

use super::grid::{Dynamics, EnvPair, GridGenConfig};
use super::policy::{distill_gradient, pg_update, run_episode, SoftmaxPolicy};
use super::qlearn::{q_learning, teacher_policy, QLearnConfig, TeacherPolicy};

/// How the student combines the policy gradient `G` and the distillation
/// direction `V`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrainMethod {
    /// Policy gradient only.
    Reward,
    /// Distillation only.
    Distill,
    /// Plain sum `G + V`.
    Add,
    /// `G + max(0, cos(G, V)) * V`.
    CosWeighted,
    /// `G + V` iff `cos(G, V) >= 0`, else `G`.
    CosUnweighted,
}

impl TrainMethod {
    pub const ALL: [TrainMethod; 5] = [
        TrainMethod::Reward,
        TrainMethod::Distill,
        TrainMethod::Add,
        TrainMethod::CosWeighted,
        TrainMethod::CosUnweighted,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TrainMethod::Reward => "reward",
            TrainMethod::Distill => "distill",
            TrainMethod::Add => "add",
            TrainMethod::CosWeighted => "cos-weighted",
            TrainMethod::CosUnweighted => "cos-unweighted",
        }
    }
}

/// Which environment the teacher is trained on: the auxiliary one (cross-task
/// transfer) or the main one (same-task control).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TeacherSource {
    Aux,
    Main,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainerConfig {
    /// Training budget in states visited.
    pub steps: usize,
    pub eval_every: usize,
    pub eval_episodes: usize,
    pub lr: f64,
    pub gamma: f64,
    /// Discount the return-to-go inside the advantage (the alternative plain
    /// sum is the update rule exactly as written).
    pub discounted_returns: bool,
    /// Experimental: flip the sign of `V` instead of dropping it when the
    /// cosine is negative (applies to `CosUnweighted` only). Not the default
    /// method and outside its descent guarantee.
    pub subtractive_gate: bool,
    pub dynamics: Dynamics,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            steps: 10_000,
            eval_every: 500,
            eval_episodes: 100,
            lr: 0.01,
            gamma: 0.95,
            discounted_returns: true,
            subtractive_gate: false,
            dynamics: Dynamics::default(),
        }
    }
}

/// One evaluation point on a learning curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub step: usize,
    pub mean_return: f64,
    /// Mean raw cosine over the training episodes since the previous point.
    pub mean_cos: Option<f64>,
    /// Mean applied gate weight over the same window.
    pub mean_weight: Option<f64>,
}

/// Outcome of training one student.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub eval_points: Vec<EvalPoint>,
    /// Minimum of `<u, G>` over all applied updates, for the gated methods.
    pub min_update_alignment: Option<f64>,
    pub policy: SoftmaxPolicy,
}

/// Trains one student on the pair's main environment.
pub fn train(
    pair: &EnvPair,
    method: TrainMethod,
    teacher: &TeacherPolicy,
    config: &TrainerConfig,
    train_rng: &mut ExperimentRng,
    eval_rng: &mut ExperimentRng,
) -> Result<TrainOutcome> {
    let env = &pair.main;
    let mut policy = SoftmaxPolicy::new(env.n_states());
    let marks: Vec<usize> = (0..=config.steps).step_by(config.eval_every).collect();
    let mut eval_points = Vec::with_capacity(marks.len());
    let mut mark_idx = 0;
    let mut visited = 0usize;
    let mut window_cos: Vec<f64> = Vec::new();
    let mut window_weight: Vec<f64> = Vec::new();
    let mut min_alignment: Option<f64> = None;

    let needs_g = method != TrainMethod::Distill;
    let needs_v = method != TrainMethod::Reward;
    let gate_config = match method {
        TrainMethod::CosWeighted => Some(GateConfig::weighted()),
        TrainMethod::CosUnweighted => Some(GateConfig::unweighted()),
        _ => None,
    };

    while mark_idx < marks.len() {
        if visited >= marks[mark_idx] {
            let mean_return = evaluate(env, &policy, config, eval_rng);
            let mean = |w: &[f64]| (!w.is_empty()).then(|| w.iter().sum::<f64>() / w.len() as f64);
            eval_points.push(EvalPoint {
                step: marks[mark_idx],
                mean_return,
                mean_cos: mean(&window_cos),
                mean_weight: mean(&window_weight),
            });
            window_cos.clear();
            window_weight.clear();
            mark_idx += 1;
            continue;
        }

        let episode = run_episode(env, &policy, &config.dynamics, train_rng);
        visited += episode.len();

        let pg = needs_g.then(|| pg_update(&policy, &episode, config.gamma, config.discounted_returns));
        let v = if needs_v {
            Some(distill_gradient(&policy, teacher, &episode)?)
        } else {
            None
        };

        let update = match method {
            TrainMethod::Reward => pg.as_ref().unwrap().logit_grad.clone(),
            TrainMethod::Distill => v.clone().unwrap(),
            TrainMethod::Add => {
                let g = &pg.as_ref().unwrap().logit_grad;
                let v = v.as_ref().unwrap();
                window_cos.push(cosine(g, v)?);
                combine(g, v, 1.0)?
            }
            TrainMethod::CosWeighted | TrainMethod::CosUnweighted => {
                let g = &pg.as_ref().unwrap().logit_grad;
                let v = v.as_ref().unwrap();
                let raw_cos = cosine(g, v)?;
                window_cos.push(raw_cos);
                if config.subtractive_gate && method == TrainMethod::CosUnweighted {
                    let w = if raw_cos >= 0.0 { 1.0 } else { -1.0 };
                    window_weight.push(w);
                    let values = g
                        .values()
                        .iter()
                        .zip(v.values())
                        .map(|(gi, vi)| gi + w * vi)
                        .collect();
                    ParamVector::new(values)?
                } else {
                    let w = gate_weight(gate_config.as_ref().unwrap(), raw_cos);
                    window_weight.push(w);
                    combine(g, v, w)?
                }
            }
        };

        if let Some(pg) = &pg {
            let alignment = update.dot(&pg.logit_grad)?;
            min_alignment = Some(min_alignment.map_or(alignment, |m: f64| m.min(alignment)));
            for (state, grad) in &pg.baseline_grad {
                policy.baseline[*state] -= config.lr * grad;
            }
        }
        policy.apply_logit_update(&update, config.lr);
    }

    Ok(TrainOutcome {
        eval_points,
        min_update_alignment: min_alignment,
        policy,
    })
}

fn evaluate(
    env: &super::grid::GridSpec,
    policy: &SoftmaxPolicy,
    config: &TrainerConfig,
    rng: &mut ExperimentRng,
) -> f64 {
    let mut total = 0.0;
    for _ in 0..config.eval_episodes {
        total += run_episode(env, policy, &config.dynamics, rng).total_reward();
    }
    total / config.eval_episodes as f64
}

/// Full experiment configuration: environment distribution, teacher, student,
/// and the methods/temperatures grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridExperimentConfig {
    pub pairs: usize,
    pub temperatures: Vec<f64>,
    pub methods: Vec<TrainMethod>,
    pub teacher_source: TeacherSource,
    pub gen: GridGenConfig,
    pub qlearn: QLearnConfig,
    pub trainer: TrainerConfig,
}

impl Default for GridExperimentConfig {
    fn default() -> Self {
        Self {
            pairs: 8,
            temperatures: vec![0.0, 0.1, 1.0],
            methods: TrainMethod::ALL.to_vec(),
            teacher_source: TeacherSource::Aux,
            gen: GridGenConfig::default(),
            qlearn: QLearnConfig::default(),
            trainer: TrainerConfig::default(),
        }
    }
}

/// One trial's curve, tagged with its grid coordinates.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub pair_idx: usize,
    pub method: TrainMethod,
    pub temperature: f64,
    pub eval_points: Vec<EvalPoint>,
    pub min_update_alignment: Option<f64>,
}

/// Aggregate curve point across pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregatePoint {
    pub method: TrainMethod,
    pub temperature: f64,
    pub step: usize,
    pub mean_return: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub pairs: Vec<EnvPair>,
    pub trials: Vec<TrialRecord>,
    pub aggregates: Vec<AggregatePoint>,
}

// Stream layout per pair: 0 = environment, 1 = teacher, then two streams per
// trial in (temperature, method) order. Trials never share a stream.
const STREAMS_PER_PAIR: u64 = 1024;

/// Runs the whole methods-by-temperatures grid over freshly sampled pairs.
/// Deterministic in `master_seed`.
pub fn run_experiment(config: &GridExperimentConfig, master_seed: u64) -> Result<ExperimentResult> {
    let mut pairs = Vec::with_capacity(config.pairs);
    let mut trials = Vec::new();
    for pair_idx in 0..config.pairs {
        let base = pair_idx as u64 * STREAMS_PER_PAIR;
        let mut env_rng = child_rng(master_seed, base);
        let pair = EnvPair::sample(&config.gen, &mut env_rng)?;
        let teacher_env = match config.teacher_source {
            TeacherSource::Aux => &pair.aux,
            TeacherSource::Main => &pair.main,
        };
        let mut teacher_rng = child_rng(master_seed, base + 1);
        let q = q_learning(teacher_env, &config.qlearn, &mut teacher_rng);

        let mut trial = 0u64;
        for &temperature in &config.temperatures {
            let teacher = teacher_policy(&q, temperature);
            for &method in &config.methods {
                let mut train_rng = child_rng(master_seed, base + 2 + 2 * trial);
                let mut eval_rng = child_rng(master_seed, base + 3 + 2 * trial);
                let outcome = train(
                    &pair,
                    method,
                    &teacher,
                    &config.trainer,
                    &mut train_rng,
                    &mut eval_rng,
                )?;
                trials.push(TrialRecord {
                    pair_idx,
                    method,
                    temperature,
                    eval_points: outcome.eval_points,
                    min_update_alignment: outcome.min_update_alignment,
                });
                trial += 1;
            }
        }
        pairs.push(pair);
    }

    let aggregates = aggregate(config, &trials);
    Ok(ExperimentResult {
        pairs,
        trials,
        aggregates,
    })
}

fn aggregate(config: &GridExperimentConfig, trials: &[TrialRecord]) -> Vec<AggregatePoint> {
    let mut out = Vec::new();
    for &temperature in &config.temperatures {
        for &method in &config.methods {
            let curves: Vec<&TrialRecord> = trials
                .iter()
                .filter(|t| t.method == method && t.temperature == temperature)
                .collect();
            if curves.is_empty() {
                continue;
            }
            let n_points = curves[0].eval_points.len();
            for i in 0..n_points {
                let values: Vec<f64> = curves.iter().map(|c| c.eval_points[i].mean_return).collect();
                let n = values.len() as f64;
                let mean = values.iter().sum::<f64>() / n;
                let stderr = if values.len() > 1 {
                    let var =
                        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
                    (var / n).sqrt()
                } else {
                    0.0
                };
                out.push(AggregatePoint {
                    method,
                    temperature,
                    step: curves[0].eval_points[i].step,
                    mean_return: mean,
                    stderr,
                });
            }
        }
    }
    out
}
