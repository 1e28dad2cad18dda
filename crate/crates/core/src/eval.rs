//! Error metrics and the train/development experiment runner.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use rayon::prelude::*;

use crate::datamodel::{assemble_design_matrix, Dataset, Modality, Split};
use crate::error::{Error, Result};
use crate::forest::{fit_forest, Forest, ForestParams, PredictionWithConfidence};
use crate::fusion::{dominance_report, fuse, DominanceReport, FusionResult, FusionStrategy};

fn check_pair(pred: &[f64], truth: &[f64]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::Empty("no predictions to score".into()));
    }
    Ok(())
}

pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_pair(pred, truth)?;
    let sq: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok((sq / pred.len() as f64).sqrt())
}

pub fn mae(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_pair(pred, truth)?;
    let abs: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t).abs()).sum();
    Ok(abs / pred.len() as f64)
}

/// A row label of the results table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FeatureUsed {
    Single(Modality),
    Fusion,
}

impl FeatureUsed {
    /// Table order: visual, audio, text, fusion.
    pub const TABLE_ORDER: [FeatureUsed; 4] = [
        FeatureUsed::Single(Modality::Video),
        FeatureUsed::Single(Modality::Audio),
        FeatureUsed::Single(Modality::Text),
        FeatureUsed::Fusion,
    ];

    pub fn label(self) -> &'static str {
        match self {
            FeatureUsed::Single(m) => m.feature_used(),
            FeatureUsed::Fusion => "fusion",
        }
    }

    pub fn parse(label: &str) -> Option<Self> {
        Self::TABLE_ORDER.into_iter().find(|f| f.label() == label)
    }
}

impl fmt::Display for FeatureUsed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRow {
    pub feature_used: FeatureUsed,
    pub split: Split,
    pub rmse: f64,
    pub mae: f64,
    pub include_gender: bool,
}

impl MetricsRow {
    pub fn score(
        feature_used: FeatureUsed,
        split: Split,
        pred: &[f64],
        truth: &[f64],
        include_gender: bool,
    ) -> Result<Self> {
        Ok(Self {
            feature_used,
            split,
            rmse: rmse(pred, truth)?,
            mae: mae(pred, truth)?,
            include_gender,
        })
    }
}

/// Provenance stamped into every emitted artifact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArtifactMeta {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
}

impl ArtifactMeta {
    pub fn comment_line(&self) -> String {
        format!(
            "# tool={} version={} config_hash={} seed={}\n",
            self.tool, self.version, self.config_hash, self.seed
        )
    }
}

pub const METRICS_HEADER: &str = "feature_used,split,rmse,mae,gender_flag";

pub fn write_metrics_csv(rows: &[MetricsRow], meta: &ArtifactMeta) -> String {
    let mut out = meta.comment_line();
    out.push_str(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{:.6},{:.6},{}",
            r.feature_used,
            r.split,
            r.rmse,
            r.mae,
            u8::from(r.include_gender)
        )
        .unwrap();
    }
    out
}

/// Plain-text table with one RMSE/MAE column pair per split.
pub fn format_metrics_table(rows: &[MetricsRow]) -> String {
    let splits: Vec<Split> = Split::ALL
        .into_iter()
        .filter(|s| rows.iter().any(|r| r.split == *s))
        .collect();
    let mut out = format!("{:<14}", "feature used");
    for s in &splits {
        write!(out, " | {:>19}", s.as_str()).unwrap();
    }
    out.push('\n');
    write!(out, "{:<14}", "").unwrap();
    for _ in &splits {
        write!(out, " | {:>9} {:>9}", "RMSE", "MAE").unwrap();
    }
    out.push('\n');
    let mut gender_groups: Vec<bool> = rows.iter().map(|r| r.include_gender).collect();
    gender_groups.dedup();
    gender_groups.sort();
    gender_groups.dedup();
    for gender in gender_groups {
        writeln!(
            out,
            "-- {} gender variable --",
            if gender { "with" } else { "without" }
        )
        .unwrap();
        for fu in FeatureUsed::TABLE_ORDER {
            if !rows.iter().any(|r| r.feature_used == fu && r.include_gender == gender) {
                continue;
            }
            write!(out, "{:<14}", fu.label()).unwrap();
            for s in &splits {
                match rows
                    .iter()
                    .find(|r| r.feature_used == fu && r.split == *s && r.include_gender == gender)
                {
                    Some(r) => write!(out, " | {:>9.3} {:>9.3}", r.rmse, r.mae).unwrap(),
                    None => write!(out, " | {:>9} {:>9}", "-", "-").unwrap(),
                }
            }
            out.push('\n');
        }
    }
    out
}

/// Predictions of every modality plus the fused value for one session.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionPrediction {
    pub session_id: String,
    pub split: Split,
    pub truth: f64,
    pub per_modality: Vec<PredictionWithConfidence>,
    pub fused: FusionResult,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub rows: Vec<MetricsRow>,
    /// Winner-take-all wins on the development split.
    pub dominance: DominanceReport,
    /// Design-matrix width per modality.
    pub widths: BTreeMap<Modality, usize>,
    pub predictions: Vec<SessionPrediction>,
    pub forests: BTreeMap<Modality, Forest>,
}

impl ExperimentReport {
    pub fn row(&self, feature_used: FeatureUsed, split: Split) -> Option<&MetricsRow> {
        self.rows
            .iter()
            .find(|r| r.feature_used == feature_used && r.split == split)
    }
}

/// Train one forest per modality on the train split and score every
/// modality and the fused prediction on train and development.
pub fn run_experiment(
    dataset: &Dataset,
    params: &ForestParams,
    strategy: FusionStrategy,
    include_gender: bool,
) -> Result<ExperimentReport> {
    let train = dataset.restrict(Split::Train);
    let dev = dataset.restrict(Split::Development);
    if train.is_empty() {
        return Err(Error::MissingSplit("train".into()));
    }
    if dev.is_empty() {
        return Err(Error::MissingSplit("development".into()));
    }

    let fitted: Vec<(Modality, usize, Forest)> = Modality::ALL
        .par_iter()
        .map(|&m| {
            let design = assemble_design_matrix(&train, m, include_gender)?;
            let forest = fit_forest(&design.rows, &design.targets, params)?;
            Ok((m, design.n_cols(), forest))
        })
        .collect::<Result<_>>()?;
    let widths: BTreeMap<Modality, usize> = fitted.iter().map(|(m, w, _)| (*m, *w)).collect();
    let forests: BTreeMap<Modality, Forest> =
        fitted.into_iter().map(|(m, _, f)| (m, f)).collect();

    let mut rows = Vec::new();
    let mut predictions = Vec::new();
    let mut dominance = DominanceReport::default();
    for (split, data) in [(Split::Train, &train), (Split::Development, &dev)] {
        let mut designs = BTreeMap::new();
        for m in Modality::ALL {
            designs.insert(m, assemble_design_matrix(data, m, include_gender)?);
        }
        let truth = designs[&Modality::Audio].targets.clone();
        let ids = designs[&Modality::Audio].row_ids.clone();

        let mut split_preds = Vec::with_capacity(ids.len());
        let mut wta = Vec::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            let per_modality = Modality::ALL
                .iter()
                .map(|m| forests[m].predict(&designs[m].rows[i], *m))
                .collect::<Result<Vec<_>>>()?;
            let fused = fuse(&per_modality, strategy)?;
            wta.push(fuse(&per_modality, FusionStrategy::WinnerTakeAll)?);
            split_preds.push(SessionPrediction {
                session_id: id.clone(),
                split,
                truth: truth[i],
                per_modality,
                fused,
            });
        }

        for fu in FeatureUsed::TABLE_ORDER {
            let pred: Vec<f64> = split_preds
                .iter()
                .map(|p| match fu {
                    FeatureUsed::Single(m) => {
                        let idx = Modality::ALL.iter().position(|x| *x == m).unwrap();
                        crate::clamp_phq8(p.per_modality[idx].mean)
                    }
                    FeatureUsed::Fusion => p.fused.reported(),
                })
                .collect();
            rows.push(MetricsRow::score(fu, split, &pred, &truth, include_gender)?);
        }
        if split == Split::Development {
            dominance = dominance_report(&wta)?;
        }
        predictions.extend(split_preds);
    }

    Ok(ExperimentReport {
        rows,
        dominance,
        widths,
        predictions,
        forests,
    })
}
