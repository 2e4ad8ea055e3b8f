//! Record-level splitting, segment voting and ROC / precision-recall reports.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::RhythmogramRecord;
use crate::learn::{hard_label, TrainedModel};
use crate::preprocess::{FeatureKind, FeatureSet};

const SPLIT_ATTEMPTS: usize = 100;

/// Which records train and which test, by session id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub fraction: f64,
    pub seed: u64,
    pub group_by_person: bool,
    pub attempt: usize,
    pub train_session_ids: BTreeSet<String>,
    pub test_session_ids: BTreeSet<String>,
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

pub fn split_records(
    records: &[RhythmogramRecord],
    fraction: f64,
    seed: u64,
    group_by_person: bool,
) -> Result<SplitPlan> {
    if records.len() < 2 {
        return Err(Error::TooFewRecords(records.len()));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidConfig(format!("split fraction {fraction} outside (0, 1)")));
    }
    // unit key -> (sessions, labels)
    let mut units: BTreeMap<&str, (Vec<&str>, BTreeSet<u8>)> = BTreeMap::new();
    let mut seen = BTreeSet::new();
    for r in records {
        if !seen.insert(r.session_id()) {
            return Err(Error::invariant("corpus", format!("duplicate session id {}", r.session_id())));
        }
        let key = if group_by_person {
            r.meta.person_id.as_str()
        } else {
            r.session_id()
        };
        let unit = units.entry(key).or_default();
        unit.0.push(r.session_id());
        unit.1.insert(r.label().value());
    }
    let units: Vec<_> = units.into_values().collect();
    if units.len() < 2 {
        return Err(Error::TooFewRecords(units.len()));
    }
    let n_train = round_half_up(fraction * units.len() as f64).clamp(1, units.len() - 1);

    for attempt in 0..SPLIT_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(attempt as u64);
        let mut order: Vec<usize> = (0..units.len()).collect();
        order.shuffle(&mut rng);
        let (train, test) = order.split_at(n_train);
        let classes: BTreeSet<u8> = train.iter().flat_map(|&u| units[u].1.iter().copied()).collect();
        if classes.len() < 2 {
            continue;
        }
        let collect = |idx: &[usize]| -> BTreeSet<String> {
            idx.iter()
                .flat_map(|&u| units[u].0.iter().map(|s| s.to_string()))
                .collect()
        };
        return Ok(SplitPlan {
            fraction,
            seed,
            group_by_person,
            attempt,
            train_session_ids: collect(train),
            test_session_ids: collect(test),
        });
    }
    Err(Error::SingleClassTrain(SPLIT_ATTEMPTS))
}

impl SplitPlan {
    /// Train and test records, each in corpus order.
    pub fn partition<'a>(
        &self,
        records: &'a [RhythmogramRecord],
    ) -> (Vec<&'a RhythmogramRecord>, Vec<&'a RhythmogramRecord>) {
        let train = records
            .iter()
            .filter(|r| self.train_session_ids.contains(r.session_id()))
            .collect();
        let test = records
            .iter()
            .filter(|r| self.test_session_ids.contains(r.session_id()))
            .collect();
        (train, test)
    }

    /// Fails if any session contributes rows to both feature sets.
    pub fn check_no_leakage(train: &FeatureSet, test: &FeatureSet) -> Result<()> {
        let a = train.sessions();
        if let Some(s) = test.sessions().into_iter().find(|s| a.contains(s)) {
            return Err(Error::invariant("split", format!("session {s} appears in train and test")));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plan serializes");
        s.push('\n');
        s
    }
}

/// Record decision from its parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecordScore {
    /// Mean of per-part hard labels.
    pub score: f64,
    pub label: u8,
    /// Mean of per-part class-1 probabilities.
    pub mean_proba: f64,
    pub n_parts: usize,
}

/// Aggregates per-part class-1 probabilities into a record decision.
pub fn aggregate_parts(probas: &[f64]) -> Result<RecordScore> {
    if probas.is_empty() {
        return Err(Error::EmptyRecord);
    }
    let n = probas.len() as f64;
    let votes: usize = probas.iter().map(|&p| hard_label(p) as usize).sum();
    let score = votes as f64 / n;
    Ok(RecordScore {
        score,
        label: (score >= 0.5) as u8,
        mean_proba: probas.iter().sum::<f64>() / n,
        n_parts: probas.len(),
    })
}

pub fn record_score(model: &TrainedModel, kind: FeatureKind, parts: &[Vec<f64>]) -> Result<RecordScore> {
    if parts.is_empty() {
        return Err(Error::EmptyRecord);
    }
    let probas = parts
        .iter()
        .map(|p| model.predict_proba(kind, p))
        .collect::<Result<Vec<_>>>()?;
    aggregate_parts(&probas)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Roc {
    /// (false-positive rate, true-positive rate), from (0,0) to (1,1).
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch { left: a, right: b });
    }
    Ok(())
}

/// Threshold sweep over distinct scores, highest first; tied scores form one
/// vertex. AUC by the trapezoidal rule.
pub fn roc_curve(scores: &[f64], truth: &[u8]) -> Result<Roc> {
    check_lengths(scores.len(), truth.len())?;
    let pos = truth.iter().filter(|&&t| t == 1).count();
    let neg = truth.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClassTruth);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auc = 0.0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if truth[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let next = (fp as f64 / neg as f64, tp as f64 / pos as f64);
        let prev = *points.last().unwrap();
        auc += (next.0 - prev.0) * (next.1 + prev.1) / 2.0;
        points.push(next);
    }
    Ok(Roc { points, auc })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    /// Set when any of the three ratios had a zero denominator and was reported as 0.
    pub zero_division: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub true_negative: usize,
    pub false_positive: usize,
    pub false_negative: usize,
    pub true_positive: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecall {
    pub per_class: [ClassMetrics; 2],
    pub confusion: Confusion,
    pub accuracy: f64,
}

fn ratio(num: usize, den: usize, flag: &mut bool) -> f64 {
    if den == 0 {
        *flag = true;
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn precision_recall_report(predicted: &[u8], truth: &[u8]) -> Result<PrecisionRecall> {
    check_lengths(predicted.len(), truth.len())?;
    if truth.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut c = Confusion {
        true_negative: 0,
        false_positive: 0,
        false_negative: 0,
        true_positive: 0,
    };
    for (&p, &t) in predicted.iter().zip(truth) {
        match (t, p) {
            (0, 0) => c.true_negative += 1,
            (0, _) => c.false_positive += 1,
            (_, 0) => c.false_negative += 1,
            _ => c.true_positive += 1,
        }
    }
    let metrics = |tp: usize, fp: usize, fnn: usize| {
        let mut flag = false;
        let precision = ratio(tp, tp + fp, &mut flag);
        let recall = ratio(tp, tp + fnn, &mut flag);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            flag = true;
            0.0
        };
        ClassMetrics {
            precision,
            recall,
            f1,
            support: tp + fnn,
            zero_division: flag,
        }
    };
    let class0 = metrics(c.true_negative, c.false_negative, c.false_positive);
    let class1 = metrics(c.true_positive, c.false_positive, c.false_negative);
    Ok(PrecisionRecall {
        per_class: [class0, class1],
        confusion: c,
        accuracy: (c.true_negative + c.true_positive) as f64 / truth.len() as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreLevel {
    Record,
    Segment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub name: String,
    pub algorithm: String,
    pub feature_kind: FeatureKind,
    pub level: ScoreLevel,
    pub n_items: usize,
    pub roc: Roc,
    pub auc: f64,
    /// AUC of the mean part probability (record level only).
    pub secondary_auc: Option<f64>,
    pub table: PrecisionRecall,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "model      {}", self.name);
        let _ = writeln!(out, "algorithm  {}", self.algorithm);
        let _ = writeln!(out, "features   {}", self.feature_kind);
        let _ = writeln!(out, "level      {:?} ({} scored)", self.level, self.n_items);
        let _ = writeln!(out, "auc        {:.4}", self.auc);
        if let Some(a) = self.secondary_auc {
            let _ = writeln!(out, "auc(proba) {a:.4}");
        }
        let _ = writeln!(out, "accuracy   {:.4}", self.table.accuracy);
        let _ = writeln!(out);
        let _ = writeln!(out, "{:>6} {:>9} {:>9} {:>9} {:>8}", "class", "precision", "recall", "f1", "support");
        for (k, m) in self.table.per_class.iter().enumerate() {
            let _ = writeln!(
                out,
                "{:>6} {:>9.4} {:>9.4} {:>9.4} {:>8}{}",
                k,
                m.precision,
                m.recall,
                m.f1,
                m.support,
                if m.zero_division { "  (zero division)" } else { "" }
            );
        }
        let c = &self.table.confusion;
        let _ = writeln!(out);
        let _ = writeln!(out, "confusion  tn={} fp={} fn={} tp={}", c.true_negative, c.false_positive, c.false_negative, c.true_positive);
        out
    }

    pub fn write_roc_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_roc_csv(&self.roc, path)
    }
}

pub fn write_roc_csv(roc: &Roc, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("fpr,tpr\n");
    for (x, y) in &roc.points {
        let _ = writeln!(out, "{x},{y}");
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Scores held-out records (or their parts) and builds a report.
pub fn evaluate_model(
    name: &str,
    model: &TrainedModel,
    test: &FeatureSet,
    level: ScoreLevel,
) -> Result<EvalReport> {
    if test.kind != model.feature_kind {
        return Err(Error::FeatureKindMismatch {
            expected_kind: model.feature_kind.to_string(),
            expected: model.feature_dim(),
            actual_kind: test.kind.to_string(),
            actual: test.dim,
        });
    }
    let probas = crate::par::map_slice(&test.rows, |row| model.predict_proba(test.kind, row))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let (scores, secondary, predicted, truth) = match level {
        ScoreLevel::Segment => {
            let predicted = probas.iter().map(|&p| hard_label(p)).collect();
            (probas, None, predicted, test.label_bits())
        }
        ScoreLevel::Record => {
            let mut per_record: BTreeMap<usize, (Vec<f64>, u8)> = BTreeMap::new();
            for ((&r, &p), l) in test.record_index.iter().zip(&probas).zip(&test.labels) {
                per_record.entry(r).or_insert_with(|| (Vec::new(), l.value())).0.push(p);
            }
            let mut scores = Vec::new();
            let mut mean_probas = Vec::new();
            let mut predicted = Vec::new();
            let mut truth = Vec::new();
            for (parts, label) in per_record.values() {
                let s = aggregate_parts(parts)?;
                scores.push(s.score);
                mean_probas.push(s.mean_proba);
                predicted.push(s.label);
                truth.push(*label);
            }
            (scores, Some(mean_probas), predicted, truth)
        }
    };
    let roc = roc_curve(&scores, &truth)?;
    let secondary_auc = match secondary {
        Some(s) => Some(roc_curve(&s, &truth)?.auc),
        None => None,
    };
    Ok(EvalReport {
        name: name.to_string(),
        algorithm: model.algorithm().to_string(),
        feature_kind: model.feature_kind,
        level,
        n_items: truth.len(),
        auc: roc.auc,
        roc,
        secondary_auc,
        table: precision_recall_report(&predicted, &truth)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub name: String,
    pub feature_kind: FeatureKind,
    pub auc: f64,
    pub secondary_auc: Option<f64>,
    pub accuracy: f64,
    pub f1_class1: f64,
    pub roc: Vec<(f64, f64)>,
}

/// Reports ordered by AUC, highest first; equal AUCs ordered by name.
pub fn compare_models(reports: &[EvalReport]) -> Vec<ComparisonRow> {
    let mut rows: Vec<ComparisonRow> = reports
        .iter()
        .map(|r| ComparisonRow {
            name: r.name.clone(),
            feature_kind: r.feature_kind,
            auc: r.auc,
            secondary_auc: r.secondary_auc,
            accuracy: r.table.accuracy,
            f1_class1: r.table.per_class[1].f1,
            roc: r.roc.points.clone(),
        })
        .collect();
    rows.sort_by(|a, b| b.auc.total_cmp(&a.auc).then_with(|| a.name.cmp(&b.name)));
    rows
}

pub fn comparison_text(rows: &[ComparisonRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<20} {:<12} {:>7} {:>11} {:>9} {:>7}", "model", "features", "auc", "auc(proba)", "accuracy", "f1(1)");
    for r in rows {
        let sec = r.secondary_auc.map_or("-".to_string(), |a| format!("{a:.4}"));
        let _ = writeln!(
            out,
            "{:<20} {:<12} {:>7.4} {:>11} {:>9.4} {:>7.4}",
            r.name, r.feature_kind, r.auc, sec, r.accuracy, r.f1_class1
        );
    }
    out
}
