//! Runs a parsed experiment config end to end and writes its artifacts.

use std::path::{Path, PathBuf};

use crate::densenet::{self, load_idx};
use crate::error::{Error, Result};
use crate::gridworld;
use crate::landscape::TrajectoryRecord;

use super::config::{ExperimentConfig, ExperimentKind, MnistRunConfig};
use super::csvio::{emit_csv, ColumnType, Schema, Value};
use super::highdim::{corrupted_cosine_stats, random_cosine_stats, CosineStats};
use super::rng::child_rng;
use super::runrecord::{config_hash, now_unix, RunRecord};
use super::toy::{run_prop3, run_toy_sweep};

/// Executes `config`, writing CSV artifacts and a JSON run record under
/// `out_dir`. Returns the record.
pub fn run(config: &ExperimentConfig, out_dir: &Path) -> Result<RunRecord> {
    config.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let started = now_unix();
    let artifacts = match config.kind {
        ExperimentKind::Toy => run_toy(config, out_dir)?,
        ExperimentKind::Prop3 => run_prop3_kind(config, out_dir)?,
        ExperimentKind::Gridworld => run_gridworld(config, out_dir)?,
        ExperimentKind::Mnist => run_mnist(config, out_dir)?,
        ExperimentKind::Highdim => run_highdim(config, out_dir)?,
    };
    let record = RunRecord {
        run_id: RunRecord::allocate_id(out_dir)?,
        kind: config.kind.name().to_string(),
        config_hash: config_hash(&config.to_toml()),
        started_unix: started,
        finished_unix: now_unix(),
        artifacts: artifacts
            .iter()
            .map(|p| p.to_string_lossy().into_owned())
            .collect(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    record.write(out_dir)?;
    Ok(record)
}

fn opt_float(v: Option<f64>) -> Value {
    v.map_or(Value::Empty, Value::Float)
}

fn trajectory_rows(run_id: &str, traj: &TrajectoryRecord) -> Vec<Vec<Value>> {
    traj.points
        .iter()
        .enumerate()
        .map(|(step, point)| {
            let decision = traj.decisions[step];
            vec![
                Value::Str(run_id.to_string()),
                Value::Int(step as i64),
                Value::Float(point[0]),
                Value::Float(if point.len() > 1 { point[1] } else { 0.0 }),
                Value::Float(traj.main_loss[step]),
                opt_float(decision.map(|d| d.raw_cos)),
                opt_float(decision.map(|d| d.weight)),
            ]
        })
        .collect()
}

fn run_toy(config: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let toy = config.toy.clone().unwrap_or_default();
    let sweep = run_toy_sweep(&toy.protocol(), config.seed)?;

    let traj_schema = Schema::new(&[
        ("run_id", ColumnType::Str),
        ("step", ColumnType::Int),
        ("x1", ColumnType::Float),
        ("x2", ColumnType::Float),
        ("main_loss", ColumnType::Float),
        ("cos", ColumnType::Float),
        ("weight", ColumnType::Float),
    ]);
    let mut traj_rows = Vec::new();
    let summary_schema = Schema::new(&[
        ("scenario", ColumnType::Str),
        ("arm", ColumnType::Str),
        ("run", ColumnType::Int),
        ("init_x1", ColumnType::Float),
        ("init_x2", ColumnType::Float),
        ("convergence_step", ColumnType::Int),
        ("diverged", ColumnType::Int),
        ("final_loss", ColumnType::Float),
    ]);
    let mut summary_rows = Vec::new();

    for cell in &sweep.cells {
        for (i, traj) in cell.runs.iter().enumerate() {
            if i < toy.traj_examples {
                let run_id = format!("{}/{}/{}", cell.scenario.name(), cell.arm.name(), i);
                traj_rows.extend(trajectory_rows(&run_id, traj));
            }
            summary_rows.push(vec![
                Value::Str(cell.scenario.name().to_string()),
                Value::Str(cell.arm.name().to_string()),
                Value::Int(i as i64),
                Value::Float(sweep.inits[i][0]),
                Value::Float(sweep.inits[i][1]),
                traj.convergence_step
                    .map_or(Value::Empty, |s| Value::Int(s as i64)),
                Value::Int(i64::from(traj.diverged)),
                Value::Float(*traj.main_loss.last().expect("non-empty")),
            ]);
        }
    }

    let traj_path = out_dir.join("trajectories.csv");
    emit_csv(&traj_rows, &traj_schema, &traj_path)?;
    let summary_path = out_dir.join("summary.csv");
    emit_csv(&summary_rows, &summary_schema, &summary_path)?;
    Ok(vec![traj_path, summary_path])
}

fn run_prop3_kind(config: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let prop3 = config.prop3.clone().unwrap_or_default();
    let result = run_prop3(prop3.a, prop3.n_per_segment)?;
    let schema = Schema::new(&[
        ("field", ColumnType::Str),
        ("path", ColumnType::Str),
        ("n_per_segment", ColumnType::Int),
        ("value", ColumnType::Float),
    ]);
    let n = prop3.n_per_segment as i64;
    let rows = vec![
        ("merged", "up-right", result.merged_up_right),
        ("merged", "right-up", result.merged_right_up),
        ("grad-l1", "up-right", result.control_up_right),
        ("grad-l1", "right-up", result.control_right_up),
    ]
    .into_iter()
    .map(|(field, path, value)| {
        vec![
            Value::Str(field.to_string()),
            Value::Str(path.to_string()),
            Value::Int(n),
            Value::Float(value),
        ]
    })
    .collect::<Vec<_>>();
    let path = out_dir.join("integrals.csv");
    emit_csv(&rows, &schema, &path)?;
    Ok(vec![path])
}

fn run_gridworld(config: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let grid_config = config.gridworld.clone().unwrap_or_default();
    let result = gridworld::run_experiment(&grid_config, config.seed)?;
    let mut artifacts = Vec::new();

    let trial_schema = Schema::new(&[
        ("step", ColumnType::Int),
        ("eval_return", ColumnType::Float),
        ("cos", ColumnType::Float),
        ("gate_weight", ColumnType::Float),
    ]);
    for trial in &result.trials {
        let rows: Vec<Vec<Value>> = trial
            .eval_points
            .iter()
            .map(|p| {
                vec![
                    Value::Int(p.step as i64),
                    Value::Float(p.mean_return),
                    opt_float(p.mean_cos),
                    opt_float(p.mean_weight),
                ]
            })
            .collect();
        let path = out_dir.join(format!(
            "trial_p{:03}_{}_t{}.csv",
            trial.pair_idx,
            trial.method.name(),
            trial.temperature
        ));
        emit_csv(&rows, &trial_schema, &path)?;
        artifacts.push(path);
    }

    let agg_schema = Schema::new(&[
        ("method", ColumnType::Str),
        ("temperature", ColumnType::Float),
        ("step", ColumnType::Int),
        ("mean_return", ColumnType::Float),
        ("stderr", ColumnType::Float),
    ]);
    let agg_rows: Vec<Vec<Value>> = result
        .aggregates
        .iter()
        .map(|p| {
            vec![
                Value::Str(p.method.name().to_string()),
                Value::Float(p.temperature),
                Value::Int(p.step as i64),
                Value::Float(p.mean_return),
                Value::Float(p.stderr),
            ]
        })
        .collect();
    let agg_path = out_dir.join("aggregate.csv");
    emit_csv(&agg_rows, &agg_schema, &agg_path)?;
    artifacts.push(agg_path);

    let layout_dir = out_dir.join("layouts");
    std::fs::create_dir_all(&layout_dir).map_err(|e| Error::io(&layout_dir, e))?;
    for (i, pair) in result.pairs.iter().enumerate() {
        let path = layout_dir.join(format!("pair_{i:03}.json"));
        let json = serde_json::to_string_pretty(pair).expect("pair serializes");
        std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
        artifacts.push(path);
    }
    Ok(artifacts)
}

/// Loads the train/test IDX pairs from `data_dir` using the standard names.
pub fn load_mnist(data_dir: &Path) -> Result<(densenet::Dataset, densenet::Dataset)> {
    let train = load_idx(
        &data_dir.join("train-images-idx3-ubyte"),
        &data_dir.join("train-labels-idx1-ubyte"),
    )?;
    let test = load_idx(
        &data_dir.join("t10k-images-idx3-ubyte"),
        &data_dir.join("t10k-labels-idx1-ubyte"),
    )?;
    Ok((train, test))
}

fn mnist_metric_rows(metrics: &[densenet::EpochMetrics]) -> Vec<Vec<Value>> {
    metrics
        .iter()
        .map(|m| {
            vec![
                Value::Int(m.epoch as i64),
                Value::Float(m.train_loss_main),
                opt_float(m.train_loss_aux),
                Value::Float(m.test_error),
                opt_float(m.mean_cos),
                opt_float(m.mean_weight),
            ]
        })
        .collect()
}

fn run_mnist(config: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let mnist: MnistRunConfig = config.mnist.clone().unwrap_or_default();
    let (train_full, test) = load_mnist(Path::new(&mnist.data_dir))?;
    let take = ((train_full.len() as f64) * mnist.train_frac).round() as usize;
    let train_data = train_full.take(take.max(1));

    let schema = Schema::new(&[
        ("epoch", ColumnType::Int),
        ("train_loss_main", ColumnType::Float),
        ("train_loss_aux", ColumnType::Float),
        ("test_error", ColumnType::Float),
        ("mean_cos", ColumnType::Float),
        ("mean_gate_weight", ColumnType::Float),
    ]);
    let mode_name = match mnist.train.mode {
        densenet::TrainMode::SingleTask => "single-task",
        densenet::TrainMode::MultiTask => "multi-task",
        densenet::TrainMode::Gated => "gated",
    };
    let mut artifacts = Vec::new();
    for run_idx in 0..mnist.runs {
        let mut rng = child_rng(config.seed, run_idx as u64);
        let trained = densenet::train(&train_data, &test, &mnist.train, &mut rng)?;
        let path = out_dir.join(format!(
            "metrics_{}_rot{}_run{}.csv",
            mode_name, mnist.train.rotation, run_idx
        ));
        emit_csv(&mnist_metric_rows(&trained.metrics), &schema, &path)?;
        artifacts.push(path);
    }
    Ok(artifacts)
}

fn stats_row(setting: &str, stats: &CosineStats) -> Vec<Value> {
    vec![
        Value::Str(setting.to_string()),
        Value::Int(stats.dim as i64),
        Value::Int(stats.pairs as i64),
        Value::Float(stats.sigma),
        Value::Float(stats.mean_cos),
        Value::Float(stats.median_cos),
        Value::Float(stats.mean_abs_cos),
        Value::Float(stats.median_abs_cos),
    ]
}

fn run_highdim(config: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let highdim = config.highdim.clone().unwrap_or_default();
    let schema = Schema::new(&[
        ("setting", ColumnType::Str),
        ("d", ColumnType::Int),
        ("n", ColumnType::Int),
        ("sigma", ColumnType::Float),
        ("mean_cos", ColumnType::Float),
        ("median_cos", ColumnType::Float),
        ("mean_abs_cos", ColumnType::Float),
        ("median_abs_cos", ColumnType::Float),
    ]);
    let mut rows = Vec::new();
    for (i, &d) in highdim.dims.iter().enumerate() {
        let mut rng = child_rng(config.seed, 2 * i as u64);
        let random = random_cosine_stats(d, highdim.n, highdim.sigma, &mut rng);
        rows.push(stats_row("random", &random));
        let mut rng = child_rng(config.seed, 2 * i as u64 + 1);
        let corrupted = corrupted_cosine_stats(d, highdim.n, highdim.sigma, &mut rng);
        rows.push(stats_row("corrupted", &corrupted));
    }
    let path = out_dir.join("highdim.csv");
    emit_csv(&rows, &schema, &path)?;
    Ok(vec![path])
}
