//! The rotated-digits training loop: single-task, multi-task, and gated.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::gate::{gate_weight, CosineTracker, GateConfig};
use crate::harness::rng::ExperimentRng;

use super::data::Dataset;
use super::net::{trunk_cosine, DenseNet, Head, TensorPair};
use super::rmsprop::{RmsProp, RmsPropConfig};

/// How the shared trunk is trained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrainMode {
    /// Main head only; the auxiliary task is never evaluated.
    SingleTask,
    /// Trunk follows `grad_main + grad_aux` every step.
    MultiTask,
    /// Trunk follows the gated combination under the configured gate.
    Gated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MnistTrainConfig {
    pub mode: TrainMode,
    /// Auxiliary-task rotation in degrees: one of 0, 45, 90, 135, 180.
    pub rotation: u32,
    pub epochs: usize,
    pub batch: usize,
    pub rmsprop: RmsPropConfig,
    /// Gate for `Gated` mode; the default is the unweighted gate on the raw
    /// per-batch cosine.
    pub gate: GateConfig,
    /// Feed the optimizer's accumulator the main-task gradient instead of the
    /// combined gradient actually applied.
    pub accumulate_main_only: bool,
}

impl Default for MnistTrainConfig {
    fn default() -> Self {
        Self {
            mode: TrainMode::Gated,
            rotation: 0,
            epochs: 10,
            batch: 128,
            rmsprop: RmsPropConfig::default(),
            gate: GateConfig::unweighted(),
            accumulate_main_only: false,
        }
    }
}

pub const VALID_ROTATIONS: [u32; 5] = [0, 45, 90, 135, 180];

/// One epoch's aggregate metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss_main: f64,
    pub train_loss_aux: Option<f64>,
    pub test_error: f64,
    pub mean_cos: Option<f64>,
    pub mean_weight: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainedRun {
    pub net: DenseNet,
    pub metrics: Vec<EpochMetrics>,
}

/// Trains the standard architecture on `train_data` with the auxiliary task
/// built by rotating the same images. Deterministic in `rng`: the generator
/// drives the weight init and one shared shuffle per epoch, in that order,
/// identically for every mode.
pub fn train(
    train_data: &Dataset,
    test_data: &Dataset,
    config: &MnistTrainConfig,
    rng: &mut ExperimentRng,
) -> Result<TrainedRun> {
    assert!(
        VALID_ROTATIONS.contains(&config.rotation),
        "rotation {} not in {:?}",
        config.rotation,
        VALID_ROTATIONS
    );
    config.gate.validate()?;
    let n = train_data.len();
    assert!(n > 0 && config.batch > 0);

    let mut net = DenseNet::standard(rng);
    let trunk_layers = net.trunk.len();
    let shapes: Vec<TensorPair> = net
        .trunk
        .iter()
        .chain(net.heads.iter())
        .cloned()
        .collect();
    let mut opt = RmsProp::new(&shapes, config.rmsprop);
    let uses_aux = config.mode != TrainMode::SingleTask;
    let aux_data = uses_aux.then(|| train_data.rotated(config.rotation));
    let mut tracker = CosineTracker::new();

    let mut order: Vec<usize> = (0..n).collect();
    let mut metrics = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        shuffle(&mut order, rng);
        let mut loss_main_sum = 0.0;
        let mut loss_aux_sum = 0.0;
        let mut cos_sum = 0.0;
        let mut weight_sum = 0.0;
        let mut batches = 0.0;

        for chunk in order.chunks(config.batch) {
            batches += 1.0;
            let (batch_main, labels) = train_data.batch(chunk);
            let cache_main = net.forward(&batch_main, Head::Main);
            loss_main_sum += cache_main.mean_cross_entropy(&labels) * chunk.len() as f64;
            let grads_main = net.backward(&cache_main, &labels, Head::Main);

            let grads_aux = aux_data.as_ref().map(|aux| {
                let (batch_aux, labels_aux) = aux.batch(chunk);
                let cache_aux = net.forward(&batch_aux, Head::Aux);
                loss_aux_sum += cache_aux.mean_cross_entropy(&labels_aux) * chunk.len() as f64;
                net.backward(&cache_aux, &labels_aux, Head::Aux)
            });

            let weight = match (config.mode, &grads_aux) {
                (TrainMode::SingleTask, _) => None,
                (TrainMode::MultiTask, Some(ga)) => {
                    cos_sum += trunk_cosine(&grads_main, ga, false);
                    Some(1.0)
                }
                (TrainMode::Gated, Some(ga)) => {
                    let raw = trunk_cosine(&grads_main, ga, config.gate.per_layer);
                    cos_sum += raw;
                    let smoothed = tracker.update(raw, config.gate.ema_decay)?;
                    let w = gate_weight(&config.gate, smoothed);
                    weight_sum += w;
                    Some(w)
                }
                _ => unreachable!("aux gradients exist whenever the mode uses them"),
            };

            // Trunk: gated combination; heads: own losses.
            for slot in 0..trunk_layers {
                let gm = &grads_main.trunk[slot];
                let combined = match (weight, &grads_aux) {
                    (Some(w), Some(ga)) if w != 0.0 => TensorPair {
                        w: &gm.w + &ga.trunk[slot].w.mapv(|v| w * v),
                        b: &gm.b + &ga.trunk[slot].b.mapv(|v| w * v),
                    },
                    _ => gm.clone(),
                };
                if config.accumulate_main_only {
                    opt.step_with(slot, &mut net.trunk[slot], &combined, gm);
                } else {
                    opt.step(slot, &mut net.trunk[slot], &combined);
                }
            }
            opt.step(trunk_layers, &mut net.heads[0], &grads_main.head);
            if let Some(ga) = &grads_aux {
                opt.step(trunk_layers + 1, &mut net.heads[1], &ga.head);
            }
        }

        metrics.push(EpochMetrics {
            epoch,
            train_loss_main: loss_main_sum / n as f64,
            train_loss_aux: uses_aux.then(|| loss_aux_sum / n as f64),
            test_error: test_error(&net, test_data),
            mean_cos: uses_aux.then(|| cos_sum / batches),
            mean_weight: (config.mode == TrainMode::Gated).then(|| weight_sum / batches),
        });
    }

    Ok(TrainedRun { net, metrics })
}

fn shuffle(order: &mut [usize], rng: &mut ExperimentRng) {
    for i in (1..order.len()).rev() {
        let j = rand::Rng::random_range(rng, 0..=i);
        order.swap(i, j);
    }
}

/// Percent of test examples misclassified by the main head.
pub fn test_error(net: &DenseNet, test_data: &Dataset) -> f64 {
    let n = test_data.len();
    let mut wrong = 0usize;
    let idx: Vec<usize> = (0..n).collect();
    for chunk in idx.chunks(256) {
        let (batch, labels) = test_data.batch(chunk);
        let cache = net.forward(&batch, Head::Main);
        for (p, l) in cache.predictions().iter().zip(&labels) {
            if p != l {
                wrong += 1;
            }
        }
    }
    100.0 * wrong as f64 / n as f64
}

impl RmsProp {
    /// Applies `apply_grads` to the parameters while feeding `acc_grads` to
    /// the accumulator.
    pub fn step_with(
        &mut self,
        slot: usize,
        params: &mut TensorPair,
        apply_grads: &TensorPair,
        acc_grads: &TensorPair,
    ) {
        let rho = self.rho;
        let acc = self.accumulator_mut(slot);
        ndarray::Zip::from(&mut acc.w)
            .and(&acc_grads.w)
            .for_each(|a, g| *a = rho * *a + (1.0 - rho) * g * g);
        ndarray::Zip::from(&mut acc.b)
            .and(&acc_grads.b)
            .for_each(|a, g| *a = rho * *a + (1.0 - rho) * g * g);
        let (lr, eps) = (self.lr, self.eps);
        let acc = self.accumulator(slot);
        ndarray::Zip::from(&mut params.w)
            .and(&acc.w)
            .and(&apply_grads.w)
            .for_each(|p, a, g| *p -= lr * g / (a.sqrt() + eps));
        ndarray::Zip::from(&mut params.b)
            .and(&acc.b)
            .and(&apply_grads.b)
            .for_each(|p, a, g| *p -= lr * g / (a.sqrt() + eps));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate::GateMode;
    use crate::harness::rng::child_rng;

    fn synthetic_dataset(n: usize, seed: u64) -> Dataset {
        // Blobs: class k lights up a kxk-ish region; enough signal to learn.
        let mut rng = child_rng(seed, 0);
        let mut pixels = vec![0u8; n * 784];
        let mut labels = vec![0u8; n];
        for i in 0..n {
            let class = (rand::Rng::random_range(&mut rng, 0..10u8)) as usize;
            labels[i] = class as u8;
            for r in 0..28 {
                for c in 0..28 {
                    let on = (r + c) % 10 == class
                        || (r * 28 + c) % (class + 3) == 0 && r > class;
                    if on {
                        pixels[i * 784 + r * 28 + c] =
                            200 + (rand::Rng::random_range(&mut rng, 0..56u8));
                    }
                }
            }
        }
        Dataset::from_bytes(n, &pixels, labels)
    }

    fn quick_config(mode: TrainMode) -> MnistTrainConfig {
        MnistTrainConfig {
            mode,
            rotation: 90,
            epochs: 1,
            batch: 64,
            ..MnistTrainConfig::default()
        }
    }

    #[test]
    fn always_on_gate_reproduces_multi_task_bitwise() {
        let data = synthetic_dataset(256, 11);
        let test = synthetic_dataset(64, 12);
        let multi = train(&data, &test, &quick_config(TrainMode::MultiTask), &mut child_rng(13, 0))
            .unwrap();
        let mut gated_config = quick_config(TrainMode::Gated);
        gated_config.gate = GateConfig::new(GateMode::AlwaysOn(1.0)).unwrap();
        let gated = train(&data, &test, &gated_config, &mut child_rng(13, 0)).unwrap();
        assert_eq!(multi.net, gated.net);
        assert_eq!(
            multi.metrics[0].test_error,
            gated.metrics[0].test_error
        );
    }

    #[test]
    fn off_gate_reproduces_single_task_shared_trajectory() {
        let data = synthetic_dataset(256, 14);
        let test = synthetic_dataset(64, 15);
        let single = train(&data, &test, &quick_config(TrainMode::SingleTask), &mut child_rng(16, 0))
            .unwrap();
        let mut off_config = quick_config(TrainMode::Gated);
        off_config.gate = GateConfig::new(GateMode::Off).unwrap();
        let off = train(&data, &test, &off_config, &mut child_rng(16, 0)).unwrap();
        // Trunk and main head identical bit-for-bit; aux head trained only in
        // the gated run.
        assert_eq!(single.net.trunk, off.net.trunk);
        assert_eq!(single.net.heads[0], off.net.heads[0]);
        assert_ne!(single.net.heads[1], off.net.heads[1]);
    }

    #[test]
    fn training_reduces_loss_and_error() {
        let data = synthetic_dataset(512, 17);
        let mut config = quick_config(TrainMode::SingleTask);
        config.epochs = 8;
        let run = train(&data, &data, &config, &mut child_rng(18, 0)).unwrap();
        let first = &run.metrics[0];
        let last = run.metrics.last().unwrap();
        assert!(last.train_loss_main < first.train_loss_main);
        assert!(last.test_error < 60.0, "error {}", last.test_error);
    }

    #[test]
    fn zero_weight_net_error_matches_label_zero_complement() {
        // Untrained all-zero net predicts class 0 everywhere (argmax tie
        // break), so the error is 100 minus the share of zero labels.
        let data = synthetic_dataset(512, 19);
        let mut rng = child_rng(20, 0);
        let mut net = DenseNet::standard(&mut rng);
        for layer in net.trunk.iter_mut().chain(net.heads.iter_mut()) {
            layer.w.fill(0.0);
            layer.b.fill(0.0);
        }
        let zero_share = data.labels.iter().filter(|l| **l == 0).count() as f64
            / data.len() as f64;
        let expected = 100.0 * (1.0 - zero_share);
        assert!((test_error(&net, &data) - expected).abs() < 1e-9);
    }

    #[test]
    fn gated_metrics_track_gate_state() {
        let data = synthetic_dataset(256, 21);
        let test = synthetic_dataset(64, 22);
        let mut config = quick_config(TrainMode::Gated);
        config.rotation = 0;
        let run = train(&data, &test, &config, &mut child_rng(23, 0)).unwrap();
        let m = &run.metrics[0];
        assert!(m.mean_cos.is_some());
        let w = m.mean_weight.unwrap();
        assert!((0.0..=1.0).contains(&w));
        // Identical tasks (rotation 0 duplicates inputs modulo head) keep the
        // cosine clearly positive.
        assert!(m.mean_cos.unwrap() > 0.0);
    }
}
