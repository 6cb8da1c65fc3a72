//! Analytic toy losses, merged update fields, trajectory runs, and path
//! integrals.

mod builtins;
mod descent;
mod integral;

pub use builtins::{builtin, prop3_aux, prop3_main, BUILTIN_NAMES};
pub use descent::{descend, convergence_time, TrajectoryRecord, DIVERGENCE_SENTINEL};
pub use integral::{line_integral, Path};

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::gate::{cosine_slices, gate_weight, GateConfig, GateDecision};

type EvalFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type PredFn = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// A scalar loss with its exact analytic gradient.
#[derive(Clone)]
pub struct ScalarField {
    name: String,
    arity: usize,
    eval: EvalFn,
    grad: GradFn,
    smooth_at: PredFn,
}

impl ScalarField {
    pub fn new(
        name: impl Into<String>,
        arity: usize,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            arity,
            eval: Arc::new(eval),
            grad: Arc::new(grad),
            smooth_at: Arc::new(|_| true),
        }
    }

    /// Declares the locus where the field is smooth; finite-difference checks
    /// skip points outside it.
    pub fn with_smooth_at(
        mut self,
        pred: impl Fn(&[f64]) -> bool + Send + Sync + 'static,
    ) -> Self {
        self.smooth_at = Arc::new(pred);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.arity);
        (self.eval)(x)
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.arity);
        (self.grad)(x)
    }

    pub fn is_smooth_at(&self, x: &[f64]) -> bool {
        (self.smooth_at)(x)
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("name", &self.name)
            .field("arity", &self.arity)
            .finish()
    }
}

/// An arbitrary update field; not necessarily the gradient of anything.
#[derive(Clone)]
pub struct VectorField {
    name: String,
    arity: usize,
    eval: GradFn,
}

impl VectorField {
    pub fn new(
        name: impl Into<String>,
        arity: usize,
        eval: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            arity,
            eval: Arc::new(eval),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.arity);
        (self.eval)(x)
    }
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("name", &self.name)
            .field("arity", &self.arity)
            .finish()
    }
}

/// Either kind of builtin field.
#[derive(Debug, Clone)]
pub enum Field {
    Scalar(ScalarField),
    Vector(VectorField),
}

impl Field {
    pub fn name(&self) -> &str {
        match self {
            Field::Scalar(f) => f.name(),
            Field::Vector(f) => f.name(),
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Field::Scalar(f) => f.arity(),
            Field::Vector(f) => f.arity(),
        }
    }

    /// The update this field contributes: the gradient for a scalar loss, the
    /// raw vector for a vector field.
    pub fn update(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Field::Scalar(f) => f.grad(x),
            Field::Vector(f) => f.eval(x),
        }
    }
}

impl From<ScalarField> for Field {
    fn from(f: ScalarField) -> Self {
        Field::Scalar(f)
    }
}

impl From<VectorField> for Field {
    fn from(f: VectorField) -> Self {
        Field::Vector(f)
    }
}

/// Anything a trajectory can follow: yields an update vector and, when gating
/// is involved, the gate decision made at that point.
pub trait UpdateRule {
    fn arity(&self) -> usize;
    fn update_at(&self, x: &[f64]) -> (Vec<f64>, Option<GateDecision>);
}

impl UpdateRule for VectorField {
    fn arity(&self) -> usize {
        self.arity
    }

    fn update_at(&self, x: &[f64]) -> (Vec<f64>, Option<GateDecision>) {
        (self.eval(x), None)
    }
}

impl UpdateRule for ScalarField {
    fn arity(&self) -> usize {
        self.arity
    }

    fn update_at(&self, x: &[f64]) -> (Vec<f64>, Option<GateDecision>) {
        (self.grad(x), None)
    }
}

/// Pointwise gated combination of a main loss gradient with an auxiliary
/// update, using the unsmoothed cosine at each point.
#[derive(Debug, Clone)]
pub struct MergedField {
    main: ScalarField,
    aux: Field,
    config: GateConfig,
}

/// Builds the merged field `x -> grad_main(x) + w(x) * aux(x)` where `w` is
/// the gate weight of the pointwise cosine.
pub fn merged_field(main: ScalarField, aux: impl Into<Field>, config: GateConfig) -> Result<MergedField> {
    let aux = aux.into();
    if main.arity() != aux.arity() {
        return Err(Error::DimensionMismatch {
            expected: main.arity(),
            got: aux.arity(),
        });
    }
    config.validate()?;
    Ok(MergedField { main, aux, config })
}

impl MergedField {
    pub fn main(&self) -> &ScalarField {
        &self.main
    }

    /// The combined update and the decision behind it. A singularity of the
    /// auxiliary field poisons the whole update with NaN.
    pub fn eval_with_decision(&self, x: &[f64]) -> (Vec<f64>, GateDecision) {
        let g = self.main.grad(x);
        let v = self.aux.update(x);
        if v.iter().any(|c| !c.is_finite()) {
            return (
                vec![f64::NAN; g.len()],
                GateDecision {
                    raw_cos: f64::NAN,
                    smoothed_cos: f64::NAN,
                    weight: f64::NAN,
                },
            );
        }
        let raw_cos = cosine_slices(&g, &v);
        let weight = gate_weight(&self.config, raw_cos);
        let combined = g
            .iter()
            .zip(&v)
            .map(|(gi, vi)| if weight == 0.0 { *gi } else { gi + weight * vi })
            .collect();
        (
            combined,
            GateDecision {
                raw_cos,
                smoothed_cos: raw_cos,
                weight,
            },
        )
    }

    /// Like [`eval_with_decision`](Self::eval_with_decision) but errors if the
    /// auxiliary field is singular at `x`.
    pub fn try_eval(&self, x: &[f64]) -> Result<(Vec<f64>, GateDecision)> {
        let (u, decision) = self.eval_with_decision(x);
        if u.iter().any(|c| !c.is_finite()) || !decision.weight.is_finite() {
            return Err(Error::NonFinite {
                context: "MergedField::try_eval",
            });
        }
        Ok((u, decision))
    }
}

impl UpdateRule for MergedField {
    fn arity(&self) -> usize {
        self.main.arity()
    }

    fn update_at(&self, x: &[f64]) -> (Vec<f64>, Option<GateDecision>) {
        let (u, decision) = self.eval_with_decision(x);
        (u, Some(decision))
    }
}

/// The plain sum `grad_main + aux`, with no gating. The control arm of the
/// toy experiments.
pub fn ungated_sum(main: ScalarField, aux: impl Into<Field>) -> Result<VectorField> {
    let aux = aux.into();
    if main.arity() != aux.arity() {
        return Err(Error::DimensionMismatch {
            expected: main.arity(),
            got: aux.arity(),
        });
    }
    let name = format!("{}+{}", main.name(), aux.name());
    let arity = main.arity();
    Ok(VectorField::new(name, arity, move |x| {
        main.grad(x)
            .iter()
            .zip(aux.update(x))
            .map(|(g, v)| g + v)
            .collect()
    }))
}
