//! Cosine computation, gating weights, and the gated update rules.
//!
//! The update rule protects the main task: the combined step `g + w*v`
//! satisfies `<g + w*v, g> >= 0` for every weight this module produces, so a
//! small enough step along the negative of the combined direction never
//! ascends the main loss.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::{check_same_len, dot_slices, norm_slice, ParamVector};

/// How the auxiliary weight is chosen from the (smoothed) cosine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateMode {
    /// `w = max(0, cos)`, zeroed below the threshold.
    Weighted,
    /// `w = 1` iff `cos >= threshold`, else `0`.
    Unweighted,
    /// Fixed weight `lambda >= 0`, ignoring the cosine.
    AlwaysOn(f64),
    /// Auxiliary update never applied.
    Off,
}

/// Gate mode plus threshold, smoothing decay, and per-layer averaging switch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateConfig {
    pub mode: GateMode,
    /// Cosine threshold `tau`; comparison is inclusive (`>= tau`).
    pub threshold: f64,
    /// EMA decay `beta` in `[0, 1)`; `0` means no smoothing.
    pub ema_decay: f64,
    /// Average cosines over the vectors' layer partition instead of globally.
    pub per_layer: bool,
}

impl GateConfig {
    pub fn new(mode: GateMode) -> Result<Self> {
        let config = Self {
            mode,
            threshold: 0.0,
            ema_decay: 0.0,
            per_layer: false,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn weighted() -> Self {
        Self::new(GateMode::Weighted).expect("valid")
    }

    pub fn unweighted() -> Self {
        Self::new(GateMode::Unweighted).expect("valid")
    }

    pub fn with_threshold(mut self, threshold: f64) -> Result<Self> {
        self.threshold = threshold;
        self.validate()?;
        Ok(self)
    }

    pub fn with_ema_decay(mut self, ema_decay: f64) -> Result<Self> {
        self.ema_decay = ema_decay;
        self.validate()?;
        Ok(self)
    }

    pub fn with_per_layer(mut self, per_layer: bool) -> Self {
        self.per_layer = per_layer;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.threshold.is_finite() {
            return Err(Error::NonFinite {
                context: "GateConfig.threshold",
            });
        }
        if !(0.0..1.0).contains(&self.ema_decay) {
            return Err(Error::OutOfRange {
                context: "GateConfig.ema_decay",
                value: self.ema_decay,
            });
        }
        if let GateMode::AlwaysOn(lambda) = self.mode {
            if !lambda.is_finite() || lambda < 0.0 {
                return Err(Error::OutOfRange {
                    context: "GateConfig.lambda",
                    value: lambda,
                });
            }
        }
        Ok(())
    }
}

/// Exponential moving average of cosine observations.
///
/// The first observation seeds the average directly, so there is no
/// gate-closed warmup at step zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CosineTracker {
    smoothed: f64,
    initialized: bool,
}

impl CosineTracker {
    pub fn new() -> Self {
        Self::default()
    }

    /// Folds in a new cosine: `smoothed <- beta*smoothed + (1-beta)*c`.
    pub fn update(&mut self, c: f64, beta: f64) -> Result<f64> {
        if !(-1.0..=1.0).contains(&c) {
            return Err(Error::OutOfRange {
                context: "CosineTracker::update cosine",
                value: c,
            });
        }
        if !(0.0..1.0).contains(&beta) {
            return Err(Error::OutOfRange {
                context: "CosineTracker::update beta",
                value: beta,
            });
        }
        self.smoothed = if self.initialized {
            beta * self.smoothed + (1.0 - beta) * c
        } else {
            c
        };
        self.initialized = true;
        Ok(self.smoothed)
    }

    pub fn smoothed(&self) -> f64 {
        self.smoothed
    }

    pub fn is_initialized(&self) -> bool {
        self.initialized
    }
}

/// Outcome of one gating decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateDecision {
    pub raw_cos: f64,
    pub smoothed_cos: f64,
    pub weight: f64,
}

/// Cosine similarity `<g,v> / (|g| |v|)`, clamped to `[-1, 1]`.
///
/// Returns `0` when either norm is zero: the cosine is undefined there and a
/// zero auxiliary vector contributes nothing to the combined update anyway.
pub fn cosine(g: &ParamVector, v: &ParamVector) -> Result<f64> {
    check_same_len(g, v)?;
    Ok(cosine_slices(g.values(), v.values()))
}

pub(crate) fn cosine_slices(g: &[f64], v: &[f64]) -> f64 {
    let ng = norm_slice(g);
    let nv = norm_slice(v);
    if ng == 0.0 || nv == 0.0 {
        return 0.0;
    }
    (dot_slices(g, v) / (ng * nv)).clamp(-1.0, 1.0)
}

/// Mean of per-layer cosines over the vectors' shared partition.
///
/// Layers where either sub-vector is zero contribute `0` to the mean.
pub fn per_layer_cosine(g: &ParamVector, v: &ParamVector) -> Result<f64> {
    check_same_len(g, v)?;
    let (gp, vp) = match (g.partition(), v.partition()) {
        (Some(gp), Some(vp)) => (gp, vp),
        _ => return Err(Error::MissingPartition),
    };
    if gp != vp {
        return Err(Error::IncompatiblePartition(format!(
            "{} vs {} ranges",
            gp.len(),
            vp.len()
        )));
    }
    let mut total = 0.0;
    for range in gp {
        total += cosine_slices(&g.values()[range.clone()], &v.values()[range.clone()]);
    }
    Ok(total / gp.len() as f64)
}

/// Maps a (smoothed) cosine to the auxiliary weight for the configured mode.
pub fn gate_weight(config: &GateConfig, smoothed_cos: f64) -> f64 {
    match config.mode {
        GateMode::Weighted => {
            if smoothed_cos >= config.threshold {
                smoothed_cos.max(0.0)
            } else {
                0.0
            }
        }
        GateMode::Unweighted => {
            if smoothed_cos >= config.threshold {
                1.0
            } else {
                0.0
            }
        }
        GateMode::AlwaysOn(lambda) => lambda,
        GateMode::Off => 0.0,
    }
}

/// Computes the cosine for `(g, v)` under `config`, folds it into `tracker`,
/// and returns the resulting decision.
pub fn decide(
    config: &GateConfig,
    tracker: &mut CosineTracker,
    g: &ParamVector,
    v: &ParamVector,
) -> Result<GateDecision> {
    let raw_cos = if config.per_layer {
        per_layer_cosine(g, v)?
    } else {
        cosine(g, v)?
    };
    let smoothed_cos = tracker.update(raw_cos, config.ema_decay)?;
    Ok(GateDecision {
        raw_cos,
        smoothed_cos,
        weight: gate_weight(config, smoothed_cos),
    })
}

/// Elementwise `g + w*v`. With `w = 0` the result is bit-identical to `g`.
pub fn combine(g: &ParamVector, v: &ParamVector, w: f64) -> Result<ParamVector> {
    check_same_len(g, v)?;
    if w == 0.0 {
        return Ok(g.clone());
    }
    let values = g
        .values()
        .iter()
        .zip(v.values())
        .map(|(a, b)| a + w * b)
        .collect();
    ParamVector::new(values)
}

/// One steepest-descent step `params - alpha*update`.
///
/// A non-finite result is reported as an error so callers can treat it as
/// divergence.
pub fn step(params: &ParamVector, update: &ParamVector, alpha: f64) -> Result<ParamVector> {
    check_same_len(params, update)?;
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::OutOfRange {
            context: "step alpha",
            value: alpha,
        });
    }
    let values: Vec<f64> = params
        .values()
        .iter()
        .zip(update.values())
        .map(|(p, u)| p - alpha * u)
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { context: "step" });
    }
    ParamVector::new(values)
}

/// Shared parameters plus the two task-specific heads.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionedParams {
    pub shared: ParamVector,
    pub main_head: ParamVector,
    pub aux_head: ParamVector,
}

/// Gradients matching [`PartitionedParams`]: both tasks' gradients on the
/// shared block, one gradient per head.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionedGrads {
    pub shared_main: ParamVector,
    pub shared_aux: ParamVector,
    pub main_head: ParamVector,
    pub aux_head: ParamVector,
}

/// One step of the shared/task-specific update rule.
///
/// The shared block moves along the gated combination of both tasks'
/// gradients; each head moves along its own gradient only. The returned
/// decision reflects the shared-parameter cosine.
pub fn partitioned_step(
    params: &PartitionedParams,
    grads: &PartitionedGrads,
    config: &GateConfig,
    tracker: &mut CosineTracker,
    alpha: f64,
) -> Result<(PartitionedParams, GateDecision)> {
    let decision = decide(config, tracker, &grads.shared_main, &grads.shared_aux)?;
    let shared_update = combine(&grads.shared_main, &grads.shared_aux, decision.weight)?;
    let next = PartitionedParams {
        shared: step(&params.shared, &shared_update, alpha)?,
        main_head: step(&params.main_head, &grads.main_head, alpha)?,
        aux_head: step(&params.aux_head, &grads.aux_head, alpha)?,
    };
    Ok((next, decision))
}
