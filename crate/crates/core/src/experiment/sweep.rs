use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use crate::audit::{run_mia, train_attack_with, AuditReport, MiaOutcome};
use crate::data::{four_way_split_with, Dataset};
use crate::dp_pipelines::{build_artifact, run_pipeline, ArtifactMetadata, DpMethod};
use crate::mechanisms::RngState;
use crate::model::{accuracy, predict, train};
use crate::{Error, Result};

/// Coordinates of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepCell {
    pub method: DpMethod,
    pub epsilon: f64,
    pub seed: u64,
}

/// Every cell of the config, ordered by method, then ε, then seed.
pub fn sweep_cells(config: &ExperimentConfig) -> Vec<SweepCell> {
    let mut methods = config.methods.clone();
    methods.sort();
    let mut epsilons = config.epsilons.clone();
    epsilons.sort_by(f64::total_cmp);
    let mut seeds = config.seeds.clone();
    seeds.sort_unstable();
    let mut cells = Vec::with_capacity(methods.len() * epsilons.len() * seeds.len());
    for &method in &methods {
        for &epsilon in &epsilons {
            for &seed in &seeds {
                cells.push(SweepCell { method, epsilon, seed });
            }
        }
    }
    cells
}

/// Everything the audit of one cell produced.
#[derive(Debug, Clone)]
pub struct CellAudit {
    pub report: AuditReport,
    pub mia: MiaOutcome,
    pub metadata: ArtifactMetadata,
    pub attack_training_accuracy: f64,
    /// Best `tpr − fpr` the attack found on the shadow rows.
    pub attack_shadow_advantage: f64,
    /// Whether that advantage was significant, i.e. the attack flagged anyone.
    pub attack_active: bool,
    pub shadow_test_accuracy: f64,
}

/// Stream for the data split, baseline and shadow of one replicate. Shared
/// by every method and ε with the same seed.
fn replicate_stream(master_seed: u64, seed: u64) -> RngState {
    RngState::from_seed(master_seed).child("replicate").child_u64(seed)
}

/// Stream for the private pipeline and audit noise of one cell.
///
/// ε is deliberately not part of the key: cells that differ only in ε draw
/// the same underlying variates, with ε merely rescaling the noise, so the
/// curves over ε are not blurred by resampling (common random numbers).
fn cell_stream(master_seed: u64, cell: &SweepCell) -> RngState {
    RngState::from_seed(master_seed)
        .child("cell")
        .child(cell.method.as_str())
        .child_u64(cell.seed)
}

pub fn run_cell(dataset: &Dataset, config: &ExperimentConfig, cell: &SweepCell) -> Result<CellAudit> {
    let split = four_way_split_with(
        dataset,
        &replicate_stream(config.master_seed, cell.seed),
        config.inner_train_fraction,
    )?;
    let (train_x, train_y) = dataset.subset(&split.victim_train);
    let (test_x, test_y) = dataset.subset(&split.victim_test);

    let baseline = train(train_x.view(), &train_y, &config.train)?;
    let acc_nonprivate = accuracy(&predict(&baseline, test_x.view(), 0.5)?, &test_y)?;

    let budget = cell.method.budget(cell.epsilon, config.delta)?;
    let rng = cell_stream(config.master_seed, cell);
    let output = run_pipeline(
        cell.method,
        dataset,
        &split,
        budget,
        &config.pipeline_config(),
        &rng.child("pipeline"),
    )?;
    let acc_private = accuracy(&output.test_predictions, &test_y)?;

    // The shadow is trained exactly like the victim, mechanism included,
    // so the attack learns from the kind of output the victim releases.
    let (attack_train_x, attack_train_y) = dataset.subset(&split.attack_train);
    let (attack_test_x, attack_test_y) = dataset.subset(&split.attack_test);
    let shadow_rng = rng.child("shadow");
    let mut shadow = build_artifact(
        cell.method,
        attack_train_x.view(),
        &attack_train_y,
        budget,
        &config.pipeline_config(),
        &shadow_rng,
    )?;
    let shadow_test_accuracy = accuracy(
        &shadow.predict(attack_test_x.view(), &mut shadow_rng.child("release-test"))?,
        &attack_test_y,
    )?;
    let mut shadow_release_rng = shadow_rng.child("release-attack");
    let attack = train_attack_with(
        |row| shadow.release_probability(row, &mut shadow_release_rng),
        dataset,
        &split,
        &config.attack_config(),
    )?;

    let mut artifact = output.artifact;
    let mut audit_rng = rng.child("audit");
    let mia = run_mia(
        &attack,
        |row| artifact.release_probability(row, &mut audit_rng),
        dataset,
        &split,
    )?;

    Ok(CellAudit {
        report: AuditReport::new(cell.method, cell.epsilon, cell.seed, acc_nonprivate, acc_private, &mia),
        mia,
        metadata: artifact.metadata().clone(),
        attack_training_accuracy: attack.training_accuracy(),
        attack_shadow_advantage: attack.shadow_advantage(),
        attack_active: attack.is_active(),
        shadow_test_accuracy,
    })
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub cell: SweepCell,
    pub delta: f64,
    /// The audit, or the reason the cell failed.
    pub outcome: std::result::Result<AuditReport, String>,
    pub metadata: Option<ArtifactMetadata>,
    pub wall_time_seconds: f64,
}

impl SweepRow {
    pub fn status(&self) -> String {
        match &self.outcome {
            Ok(_) => "ok".into(),
            Err(reason) => format!("failed:{reason}"),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.outcome.is_ok()
    }
}

#[derive(Debug, Clone)]
pub struct SweepResults {
    /// One row per cell, in cell order.
    pub rows: Vec<SweepRow>,
    pub config_fingerprint: String,
    pub record_wall_time: bool,
}

impl SweepResults {
    pub fn failed_cells(&self) -> usize {
        self.rows.iter().filter(|r| !r.is_ok()).count()
    }
}

pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepResults> {
    config.validate()?;
    let dataset = config.load_dataset()?;
    run_sweep_on(&dataset, config)
}

/// Runs every cell on an already preprocessed dataset. Cell failures are
/// recorded in their rows; the sweep itself only fails on bad config or a
/// thread-pool error.
pub fn run_sweep_on(dataset: &Dataset, config: &ExperimentConfig) -> Result<SweepResults> {
    config.validate()?;
    let cells = sweep_cells(config);
    let run = |cell: &SweepCell| -> SweepRow {
        let start = Instant::now();
        let result = run_cell(dataset, config, cell);
        let wall_time_seconds = start.elapsed().as_secs_f64();
        let (outcome, metadata) = match result {
            Ok(audit) => (Ok(audit.report), Some(audit.metadata)),
            Err(e) => (Err(sanitize_reason(&e)), None),
        };
        SweepRow {
            cell: *cell,
            delta: if cell.method == DpMethod::InputPerturbation { config.delta } else { 0.0 },
            outcome,
            metadata,
            wall_time_seconds,
        }
    };

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(threads) = config.threads {
        builder = builder.num_threads(threads);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::invalid("threads", e.to_string()))?;
    // par_iter().collect() keeps input order whatever the scheduling
    let rows: Vec<SweepRow> = pool.install(|| cells.par_iter().map(run).collect());

    Ok(SweepResults {
        rows,
        config_fingerprint: config.fingerprint(),
        record_wall_time: config.record_wall_time,
    })
}

/// Single-line failure reason safe to embed in a CSV cell.
fn sanitize_reason(e: &Error) -> String {
    e.to_string()
        .chars()
        .map(|c| if matches!(c, ',' | '\n' | '\r' | '"') { ' ' } else { c })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SynthParams;

    #[test]
    fn cell_order_is_method_epsilon_seed() {
        let mut config = ExperimentConfig::synthetic(SynthParams::new(100, 2, 0, 1.0, 0));
        config.methods = vec![DpMethod::PredictionPerturbation, DpMethod::InputPerturbation];
        config.epsilons = vec![0.1, 1.0];
        config.seeds = vec![3, 1];
        let cells = sweep_cells(&config);
        let coords: Vec<(DpMethod, f64, u64)> = cells.iter().map(|c| (c.method, c.epsilon, c.seed)).collect();
        assert_eq!(
            coords,
            vec![
                (DpMethod::InputPerturbation, 0.1, 1),
                (DpMethod::InputPerturbation, 0.1, 3),
                (DpMethod::InputPerturbation, 1.0, 1),
                (DpMethod::InputPerturbation, 1.0, 3),
                (DpMethod::PredictionPerturbation, 0.1, 1),
                (DpMethod::PredictionPerturbation, 0.1, 3),
                (DpMethod::PredictionPerturbation, 1.0, 1),
                (DpMethod::PredictionPerturbation, 1.0, 3),
            ]
        );
    }

    #[test]
    fn failure_reason_is_csv_safe() {
        let e = Error::Degenerate("a, b\n\"c\"".into());
        let s = sanitize_reason(&e);
        assert!(!s.contains(',') && !s.contains('\n') && !s.contains('"'));
    }
}
