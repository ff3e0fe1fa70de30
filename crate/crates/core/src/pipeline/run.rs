use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{PipelineConfig, SplitSpec};
use super::model::{StoredPattern, TrainedModel, MODEL_FORMAT};
use super::report::{EvalReport, Prediction};
use crate::bof::{encode_action, write_features, FeatureRow};
use crate::error::{Error, Result};
use crate::features::PartEncoder;
use crate::miner::{mine_closed, write_patterns, Pattern};
use crate::selection::{select_top_k, write_selected, ActionLabels, SelectedPattern};
use crate::skeleton::{fit_reference_lengths, normalize, ReferenceLengths, SkeletonSequence};
use crate::svm::{predict, train, TrainingReport};
use crate::transactions::{
    assemble_db, build_transactions, write_dump, ActionTransactions, Transaction, TransactionDb,
};

/// Wall-clock seconds per stage. Kept out of reports so those stay
/// reproducible byte for byte.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Timings {
    pub stages: Vec<(String, f64)>,
}

impl Timings {
    fn time<T>(&mut self, stage: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f().map_err(|e| e.in_stage(stage))?;
        self.stages
            .push((stage.to_string(), start.elapsed().as_secs_f64()));
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("timings serialize") + "\n"
    }
}

pub fn split_sequences(
    seqs: Vec<SkeletonSequence>,
    split: &SplitSpec,
) -> (Vec<SkeletonSequence>, Vec<SkeletonSequence>) {
    seqs.into_iter().partition(|s| split.is_train(s.subject))
}

/// Normalize, quantize and window one sequence.
pub fn sequence_transactions(
    seq: &SkeletonSequence,
    reference: &ReferenceLengths,
    encoder: &PartEncoder,
    cfg: &PipelineConfig,
    action: usize,
) -> Result<Vec<Transaction>> {
    let norm = normalize(seq, reference)?;
    let frames = encoder.encode_frames(&norm.frames)?;
    build_transactions(&frames, &cfg.windows, action)
}

fn all_transactions(
    seqs: &[SkeletonSequence],
    reference: &ReferenceLengths,
    cfg: &PipelineConfig,
) -> Result<Vec<ActionTransactions>> {
    let encoder = PartEncoder::new(&cfg.features)?;
    seqs.par_iter()
        .enumerate()
        .map(|(j, s)| {
            Ok(ActionTransactions {
                transactions: sequence_transactions(s, reference, &encoder, cfg, j)?,
                label: s.label,
                subject: s.subject,
            })
        })
        .collect()
}

/// Fits reference lengths on the training sequences and builds their
/// transaction database.
pub fn extract_training(
    cfg: &PipelineConfig,
    train_seqs: &[SkeletonSequence],
) -> Result<(ReferenceLengths, TransactionDb)> {
    if train_seqs.is_empty() {
        return Err(Error::Invalid("training split is empty".into()));
    }
    let reference = fit_reference_lengths(train_seqs)?;
    let per_action = all_transactions(train_seqs, &reference, cfg)?;
    let db = assemble_db(per_action, cfg.features.ndf)?;
    Ok((reference, db))
}

pub fn select_patterns(
    cfg: &PipelineConfig,
    db: &TransactionDb,
    patterns: &[Pattern],
) -> Result<Vec<SelectedPattern>> {
    let labels = ActionLabels::from_db(db)?;
    let selected = select_top_k(patterns, &labels, &cfg.selection)?;
    if selected.is_empty() {
        return Err(Error::Invalid("no pattern has positive relevance".into()));
    }
    Ok(selected)
}

pub struct FittedClassifier {
    pub model: TrainedModel,
    pub features: Vec<FeatureRow>,
    pub report: TrainingReport,
}

/// Encodes the training actions over the selected patterns and trains the SVM.
pub fn fit_classifier(
    cfg: &PipelineConfig,
    reference: &ReferenceLengths,
    db: &TransactionDb,
    selected: &[SelectedPattern],
) -> Result<FittedClassifier> {
    let patterns: Vec<Pattern> = selected.iter().map(|s| s.pattern.clone()).collect();
    let features: Vec<FeatureRow> = (0..db.actions.len())
        .into_par_iter()
        .map(|j| {
            let bag = encode_action(db.action_transactions(j), &patterns)?;
            Ok(FeatureRow {
                label: db.actions[j].label,
                subject: db.actions[j].subject,
                counts: bag.counts,
            })
        })
        .collect::<Result<_>>()?;
    let samples: Vec<Vec<u32>> = features.iter().map(|f| f.counts.clone()).collect();
    let labels: Vec<u32> = features.iter().map(|f| f.label).collect();
    let (svm, report) = train(&samples, &labels, &cfg.svm)?;
    let model = TrainedModel {
        format: MODEL_FORMAT.to_string(),
        config: cfg.clone(),
        reference_lengths: reference.clone(),
        num_classes: db.num_classes,
        selected: selected
            .iter()
            .map(|s| StoredPattern {
                items: s.pattern.items.clone(),
                relevance: s.relevance,
            })
            .collect(),
        svm,
    };
    Ok(FittedClassifier {
        model,
        features,
        report,
    })
}

/// Everything a training run produces.
pub struct TrainArtifacts {
    pub reference: ReferenceLengths,
    pub db: TransactionDb,
    /// `None` when selection was supplied from a file.
    pub patterns: Option<Vec<Pattern>>,
    pub selected: Vec<SelectedPattern>,
    pub features: Vec<FeatureRow>,
    pub model: TrainedModel,
    pub report: TrainingReport,
    pub timings: Timings,
}

/// Runs all four stages on the given training sequences.
pub fn train_on(cfg: &PipelineConfig, train_seqs: &[SkeletonSequence]) -> Result<TrainArtifacts> {
    cfg.validate()?;
    let mut timings = Timings::default();
    let (reference, db) = timings.time("extract", || extract_training(cfg, train_seqs))?;
    let patterns = timings.time("mine", || mine_closed(&db, &cfg.mining))?;
    let selected = timings.time("select", || select_patterns(cfg, &db, &patterns))?;
    let fitted = timings.time("classify", || {
        fit_classifier(cfg, &reference, &db, &selected)
    })?;
    Ok(TrainArtifacts {
        reference,
        db,
        patterns: Some(patterns),
        selected,
        features: fitted.features,
        model: fitted.model,
        report: fitted.report,
        timings,
    })
}

/// Trains on the training side of the configured split.
pub fn run_train(cfg: &PipelineConfig, seqs: Vec<SkeletonSequence>) -> Result<TrainArtifacts> {
    let (train_seqs, _) = split_sequences(seqs, &cfg.split);
    train_on(cfg, &train_seqs)
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_reference(path: &Path, reference: &ReferenceLengths) -> Result<()> {
    write(
        path,
        &(serde_json::to_string_pretty(reference).expect("serializes") + "\n"),
    )
}

pub fn read_reference(path: &Path) -> Result<ReferenceLengths> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let r: ReferenceLengths =
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
    ReferenceLengths::new(r.lengths)
}

impl TrainArtifacts {
    /// Writes stage dumps, features, model and diagnostics into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_reference(&dir.join("reference.json"), &self.reference)?;
        write(&dir.join("transactions.txt"), &write_dump(&self.db))?;
        if let Some(p) = &self.patterns {
            write(&dir.join("patterns.txt"), &write_patterns(p))?;
        }
        write(&dir.join("selected.txt"), &write_selected(&self.selected))?;
        write(&dir.join("features.csv"), &write_features(&self.features))?;
        self.model.save(&dir.join("model.json"))?;
        write(
            &dir.join("training_report.json"),
            &(serde_json::to_string_pretty(&self.report).expect("serializes") + "\n"),
        )?;
        write(&dir.join("train_timings.json"), &self.timings.to_json())
    }
}

/// Bag-of-FLPs of one sequence under a trained model.
pub fn sequence_features(model: &TrainedModel, seq: &SkeletonSequence) -> Result<Vec<u32>> {
    let encoder = PartEncoder::new(&model.config.features)?;
    let tx = sequence_transactions(seq, &model.reference_lengths, &encoder, &model.config, 0)?;
    Ok(encode_action(&tx, &model.patterns())?.counts)
}

pub fn evaluate_on(
    model: &TrainedModel,
    test_seqs: &[SkeletonSequence],
) -> Result<(EvalReport, Timings)> {
    if test_seqs.is_empty() {
        return Err(Error::Invalid("test split is empty".into()));
    }
    let mut timings = Timings::default();
    let features: Vec<Vec<u32>> = timings.time("extract", || {
        test_seqs
            .par_iter()
            .map(|s| sequence_features(model, s))
            .collect::<Result<_>>()
    })?;
    let predictions = timings.time("classify", || {
        features
            .par_iter()
            .zip(test_seqs)
            .map(|(f, s)| {
                Ok(Prediction {
                    label: s.label,
                    predicted: predict(&model.svm, f)?,
                    subject: s.subject,
                    instance: s.instance,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let report = EvalReport::from_predictions(model.num_classes, predictions, model.selected.len());
    Ok((report, timings))
}

/// Evaluates on the test side of the model's split.
pub fn run_evaluate(
    model: &TrainedModel,
    seqs: Vec<SkeletonSequence>,
) -> Result<(EvalReport, Timings)> {
    let (_, test) = split_sequences(seqs, &model.config.split);
    evaluate_on(model, &test)
}

pub fn write_eval(dir: &Path, report: &EvalReport, timings: &Timings) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write(&dir.join("report.json"), &report.to_json())?;
    write(&dir.join("confusion.csv"), &report.confusion_csv())?;
    write(&dir.join("eval_timings.json"), &timings.to_json())
}
