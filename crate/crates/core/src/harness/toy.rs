//! The toy-landscape sweep and the path-integral study.
//!
//! Three loss pairings, four arms each (main only, ungated sum, unweighted
//! gate, weighted gate), run from a fixed set of random initial points under
//! the standard protocol: 600 steps, step size 0.01, convergence below 0.1.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::gate::GateConfig;
use crate::harness::rng::{child_rng, ExperimentRng};
use crate::landscape::{
    builtin, line_integral, merged_field, descend, ungated_sum, Field, Path, ScalarField,
    TrajectoryRecord,
};

/// The loss pairings of the study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ToyScenario {
    /// Bowl main loss with an aligned auxiliary bowl.
    L1WithL3,
    /// Bowl main loss with the singular rotational field.
    L1WithV,
    /// Plateaued main loss with a displaced auxiliary bowl.
    L2WithL4,
}

impl ToyScenario {
    pub const ALL: [ToyScenario; 3] = [
        ToyScenario::L1WithL3,
        ToyScenario::L1WithV,
        ToyScenario::L2WithL4,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ToyScenario::L1WithL3 => "l1-with-l3",
            ToyScenario::L1WithV => "l1-with-v",
            ToyScenario::L2WithL4 => "l2-with-l4",
        }
    }

    pub fn main(&self) -> ScalarField {
        let name = match self {
            ToyScenario::L2WithL4 => "L2",
            _ => "L1",
        };
        match builtin(name).expect("builtin") {
            Field::Scalar(f) => f,
            _ => unreachable!(),
        }
    }

    pub fn aux(&self) -> Field {
        let name = match self {
            ToyScenario::L1WithL3 => "L3",
            ToyScenario::L1WithV => "V",
            ToyScenario::L2WithL4 => "L4",
        };
        builtin(name).expect("builtin")
    }
}

/// The update rule followed by one arm of the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ToyArm {
    MainOnly,
    UngatedSum,
    GatedUnweighted,
    GatedWeighted,
}

impl ToyArm {
    pub const ALL: [ToyArm; 4] = [
        ToyArm::MainOnly,
        ToyArm::UngatedSum,
        ToyArm::GatedUnweighted,
        ToyArm::GatedWeighted,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ToyArm::MainOnly => "main-only",
            ToyArm::UngatedSum => "ungated-sum",
            ToyArm::GatedUnweighted => "gated-unweighted",
            ToyArm::GatedWeighted => "gated-weighted",
        }
    }
}

/// Protocol parameters for the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToyProtocol {
    pub steps: usize,
    pub alpha: f64,
    pub level: f64,
    pub inits: usize,
    pub init_low: f64,
    pub init_high: f64,
}

impl Default for ToyProtocol {
    fn default() -> Self {
        Self {
            steps: 600,
            alpha: 0.01,
            level: 0.1,
            inits: 100,
            init_low: -3.0,
            init_high: 3.0,
        }
    }
}

/// Initial points: uniform over the square, rejecting starts whose main loss
/// already sits below the convergence level (they would register as converged
/// at step zero regardless of the dynamics). `L1 >= level` implies the same
/// for `L2`, so one rejection rule covers all scenarios.
pub fn sample_inits(protocol: &ToyProtocol, rng: &mut ExperimentRng) -> Vec<[f64; 2]> {
    let mut inits = Vec::with_capacity(protocol.inits);
    while inits.len() < protocol.inits {
        let draw = |rng: &mut ExperimentRng| {
            protocol.init_low
                + (protocol.init_high - protocol.init_low) * rand::Rng::random::<f64>(rng)
        };
        let p = [draw(rng), draw(rng)];
        if p[0] * p[0] + p[1] * p[1] >= protocol.level {
            inits.push(p);
        }
    }
    inits
}

/// All trajectories of one (scenario, arm) cell.
#[derive(Debug, Clone)]
pub struct ArmResult {
    pub scenario: ToyScenario,
    pub arm: ToyArm,
    pub runs: Vec<TrajectoryRecord>,
}

impl ArmResult {
    pub fn converged(&self) -> usize {
        self.runs.iter().filter(|r| r.convergence_step.is_some()).count()
    }

    pub fn diverged(&self) -> usize {
        self.runs.iter().filter(|r| r.diverged).count()
    }

    /// Median convergence step over converged runs.
    pub fn median_convergence_step(&self) -> Option<f64> {
        let mut steps: Vec<usize> = self
            .runs
            .iter()
            .filter_map(|r| r.convergence_step)
            .collect();
        if steps.is_empty() {
            return None;
        }
        steps.sort_unstable();
        let n = steps.len();
        Some(if n % 2 == 1 {
            steps[n / 2] as f64
        } else {
            (steps[n / 2 - 1] + steps[n / 2]) as f64 / 2.0
        })
    }
}

/// Runs one (scenario, arm) cell over the given inits.
pub fn run_arm(
    scenario: ToyScenario,
    arm: ToyArm,
    protocol: &ToyProtocol,
    inits: &[[f64; 2]],
) -> Result<ArmResult> {
    let main = scenario.main();
    let runs = inits
        .iter()
        .map(|init| -> Result<TrajectoryRecord> {
            let traj = match arm {
                ToyArm::MainOnly => descend(
                    &main.clone(),
                    init,
                    protocol.steps,
                    protocol.alpha,
                    &main,
                    protocol.level,
                ),
                ToyArm::UngatedSum => {
                    let field = ungated_sum(main.clone(), scenario.aux())?;
                    descend(&field, init, protocol.steps, protocol.alpha, &main, protocol.level)
                }
                ToyArm::GatedUnweighted => {
                    let field =
                        merged_field(main.clone(), scenario.aux(), GateConfig::unweighted())?;
                    descend(&field, init, protocol.steps, protocol.alpha, &main, protocol.level)
                }
                ToyArm::GatedWeighted => {
                    let field = merged_field(main.clone(), scenario.aux(), GateConfig::weighted())?;
                    descend(&field, init, protocol.steps, protocol.alpha, &main, protocol.level)
                }
            };
            Ok(traj)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ArmResult {
        scenario,
        arm,
        runs,
    })
}

/// The full sweep: every scenario and arm over one shared init set.
pub struct ToySweep {
    pub inits: Vec<[f64; 2]>,
    pub cells: Vec<ArmResult>,
}

impl ToySweep {
    pub fn cell(&self, scenario: ToyScenario, arm: ToyArm) -> &ArmResult {
        self.cells
            .iter()
            .find(|c| c.scenario == scenario && c.arm == arm)
            .expect("cell present")
    }
}

pub fn run_toy_sweep(protocol: &ToyProtocol, seed: u64) -> Result<ToySweep> {
    let mut rng = child_rng(seed, 0);
    let inits = sample_inits(protocol, &mut rng);
    let mut cells = Vec::new();
    for scenario in ToyScenario::ALL {
        for arm in ToyArm::ALL {
            cells.push(run_arm(scenario, arm, protocol, &inits)?);
        }
    }
    Ok(ToySweep { inits, cells })
}

/// Path-integral study: the merged ramp field against its conservative
/// control, integrated along the up-right and right-up paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prop3Result {
    pub merged_up_right: f64,
    pub merged_right_up: f64,
    pub control_up_right: f64,
    pub control_right_up: f64,
}

pub fn run_prop3(a: f64, n_per_segment: usize) -> Result<Prop3Result> {
    let up_right = Path::from_points(&[[0.0, 0.0], [0.0, 2.0], [2.0, 2.0]])?;
    let right_up = Path::from_points(&[[0.0, 0.0], [2.0, 0.0], [2.0, 2.0]])?;
    let merged = merged_field(
        crate::landscape::prop3_main(a),
        crate::landscape::prop3_aux(a),
        GateConfig::weighted(),
    )?;
    let control = match builtin("L1")? {
        Field::Scalar(f) => f,
        _ => unreachable!(),
    };
    Ok(Prop3Result {
        merged_up_right: line_integral(&merged, &up_right, n_per_segment)?,
        merged_right_up: line_integral(&merged, &right_up, n_per_segment)?,
        control_up_right: line_integral(&control, &up_right, n_per_segment)?,
        control_right_up: line_integral(&control, &right_up, n_per_segment)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inits_avoid_the_convergence_disc() {
        let protocol = ToyProtocol::default();
        let inits = sample_inits(&protocol, &mut child_rng(42, 0));
        assert_eq!(inits.len(), 100);
        for p in &inits {
            assert!(p[0] * p[0] + p[1] * p[1] >= 0.1);
            assert!(p.iter().all(|c| (-3.0..=3.0).contains(c)));
        }
    }

    #[test]
    fn sweep_is_deterministic() {
        let protocol = ToyProtocol {
            inits: 5,
            steps: 50,
            ..ToyProtocol::default()
        };
        let a = run_toy_sweep(&protocol, 9).unwrap();
        let b = run_toy_sweep(&protocol, 9).unwrap();
        assert_eq!(a.inits, b.inits);
        for (ca, cb) in a.cells.iter().zip(&b.cells) {
            assert_eq!(ca.converged(), cb.converged());
            for (ra, rb) in ca.runs.iter().zip(&cb.runs) {
                assert_eq!(ra.main_loss, rb.main_loss);
            }
        }
    }

    #[test]
    fn prop3_integrals_match_hand_values() {
        let result = run_prop3(1.0, 100_000).unwrap();
        assert!((result.merged_up_right - 2.0).abs() < 1e-6);
        assert!((result.merged_right_up - 3.0).abs() < 1e-6);
        assert!((result.control_up_right - result.control_right_up).abs() < 1e-6);
    }
}
