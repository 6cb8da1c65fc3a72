//! Steepest-descent trajectory runner and the convergence-time metric.

use serde::{Deserialize, Serialize};

use crate::gate::GateDecision;

use super::{ScalarField, UpdateRule};

/// Main loss above this value (or non-finite) marks a run as diverged.
pub const DIVERGENCE_SENTINEL: f64 = 1e6;

/// A recorded descent run. `points[0]` is the initial point; each later entry
/// is the iterate after one step. `decisions[t]` is the gate decision of the
/// field evaluated at `points[t]` (absent for ungated fields).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub points: Vec<Vec<f64>>,
    pub main_loss: Vec<f64>,
    pub decisions: Vec<Option<GateDecision>>,
    pub convergence_step: Option<usize>,
    pub diverged: bool,
    pub level: f64,
}

/// Iterates `x <- x - alpha * field(x)` for `steps` steps, recording the main
/// loss along the way. Divergence is recorded, never thrown.
pub fn descend(
    field: &dyn UpdateRule,
    init: &[f64],
    steps: usize,
    alpha: f64,
    main: &ScalarField,
    level: f64,
) -> TrajectoryRecord {
    assert_eq!(field.arity(), main.arity(), "field/main arity mismatch");
    assert_eq!(init.len(), main.arity(), "init arity mismatch");
    assert!(steps > 0 && alpha > 0.0);

    let mut record = TrajectoryRecord {
        points: Vec::with_capacity(steps + 1),
        main_loss: Vec::with_capacity(steps + 1),
        decisions: Vec::with_capacity(steps + 1),
        convergence_step: None,
        diverged: false,
        level,
    };

    let mut x = init.to_vec();
    for t in 0..=steps {
        let (update, decision) = field.update_at(&x);
        let loss = main.eval(&x);
        record.points.push(x.clone());
        record.main_loss.push(loss);
        record.decisions.push(decision);
        if !loss.is_finite() || loss > DIVERGENCE_SENTINEL {
            record.diverged = true;
            return record;
        }
        if record.convergence_step.is_none() && loss < level {
            record.convergence_step = Some(t);
        }
        if t == steps {
            break;
        }
        if update.iter().any(|u| !u.is_finite()) {
            record.diverged = true;
            return record;
        }
        for (xi, ui) in x.iter_mut().zip(&update) {
            *xi -= alpha * ui;
        }
        if x.iter().any(|xi| !xi.is_finite()) {
            record.diverged = true;
            return record;
        }
    }
    record
}

/// First step at which the main loss fell below `0.1`, the toy protocol's
/// convergence level.
pub fn convergence_time(traj: &TrajectoryRecord) -> Option<usize> {
    traj.main_loss.iter().position(|&l| l < 0.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate::GateConfig;
    use crate::landscape::{builtin, merged_field, ungated_sum, Field};

    fn l1() -> ScalarField {
        match builtin("L1").unwrap() {
            Field::Scalar(f) => f,
            _ => unreachable!(),
        }
    }

    #[test]
    fn gradient_descent_on_l1_converges_monotonically() {
        let main = l1();
        let traj = descend(&main.clone(), &[2.0, 2.0], 600, 0.01, &main, 0.1);
        assert!(!traj.diverged);
        let step = traj.convergence_step.expect("should converge");
        assert!(step > 0 && step < 600);
        for w in traj.main_loss.windows(2) {
            assert!(w[1] <= w[0] + 1e-15, "loss increased: {} -> {}", w[0], w[1]);
        }
        assert_eq!(traj.points.len(), 601);
        assert_eq!(traj.main_loss.len(), 601);
    }

    #[test]
    fn ungated_rotational_sum_never_converges() {
        let main = l1();
        let aux = builtin("V").unwrap();
        let field = ungated_sum(main.clone(), aux).unwrap();
        let traj = descend(&field, &[2.0, 2.0], 600, 0.01, &main, 0.1);
        assert!(traj.convergence_step.is_none());
    }

    #[test]
    fn gated_rotational_merge_converges_like_plain_descent() {
        let main = l1();
        let merged = merged_field(main.clone(), builtin("V").unwrap(), GateConfig::unweighted())
            .unwrap();
        let gated = descend(&merged, &[2.0, 2.0], 600, 0.01, &main, 0.1);
        let plain = descend(&main.clone(), &[2.0, 2.0], 600, 0.01, &main, 0.1);
        let gs = gated.convergence_step.expect("gated converges");
        assert!(gs <= plain.convergence_step.unwrap());
    }

    #[test]
    fn convergence_time_scans_for_first_below_level() {
        let mut traj = TrajectoryRecord {
            points: vec![vec![0.0]; 4],
            main_loss: vec![1.0, 0.5, 0.09, 0.2],
            decisions: vec![None; 4],
            convergence_step: None,
            diverged: false,
            level: 0.1,
        };
        assert_eq!(convergence_time(&traj), Some(2));
        traj.main_loss = vec![1.0, 0.5, 0.11];
        assert_eq!(convergence_time(&traj), None);
        // Matches a hand-rolled linear scan.
        let scan = traj.main_loss.iter().position(|&l| l < 0.1);
        assert_eq!(convergence_time(&traj), scan);
    }

    #[test]
    fn divergence_is_recorded_not_thrown() {
        // Follow the *negative* gradient (ascent) until past the sentinel.
        let main = l1();
        let up = super::super::VectorField::new("ascent", 2, {
            let main = main.clone();
            move |x| main.grad(x).iter().map(|g| -g * 100.0).collect()
        });
        let traj = descend(&up, &[3.0, 3.0], 2000, 0.01, &main, 0.1);
        assert!(traj.diverged);
        assert!(traj.points.len() < 2001);
    }
}
