//! Feature, prediction and model-manifest files.
//!
//! Every CSV starts with one `# tool=... version=... config_hash=... seed=...`
//! comment line. Reals are written in shortest round-trip form.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use anyhow::{anyhow, bail, Context, Result};
use phq_core::eval::ArtifactMeta;
use phq_core::forest::{ForestParams, PredictionWithConfidence};
use phq_core::fusion::{Chosen, FusionResult};
use phq_core::Modality;
use serde::{Deserialize, Serialize};

pub const TOOL: &str = "phq";

pub const PREDICTIONS_HEADER: &str = "session_id,audio_mean,audio_std,video_mean,video_std,text_mean,text_std,chosen,fused,strategy,gender_flag";

pub fn meta(config_hash: &str, seed: u64) -> ArtifactMeta {
    ArtifactMeta {
        tool: TOOL.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_hash: config_hash.into(),
        seed,
    }
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

fn real(cell: &str, line: u64) -> Result<f64> {
    cell.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| anyhow!("line {line}: {cell:?} is not a finite number"))
}

/// One modality's features for a set of sessions.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub names: Vec<String>,
    pub rows: BTreeMap<String, Vec<f64>>,
}

impl FeatureTable {
    pub fn to_csv(&self, meta: &ArtifactMeta) -> String {
        let mut out = meta.comment_line();
        out.push_str("session_id");
        for n in &self.names {
            write!(out, ",{n}").unwrap();
        }
        out.push('\n');
        for (id, values) in &self.rows {
            out.push_str(id);
            for v in values {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut rdr = reader(text);
        let header = rdr.headers()?.clone();
        if header.get(0) != Some("session_id") {
            bail!("feature table must start with a session_id column");
        }
        let names: Vec<String> = header.iter().skip(1).map(String::from).collect();
        let mut rows = BTreeMap::new();
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line());
            let id = record.get(0).unwrap_or_default().to_string();
            let values = record.iter().skip(1).map(|c| real(c, line)).collect::<Result<Vec<_>>>()?;
            if values.len() != names.len() {
                bail!("line {line}: {} values for {} columns", values.len(), names.len());
            }
            if rows.insert(id.clone(), values).is_some() {
                bail!("line {line}: session {id:?} appears twice");
            }
        }
        Ok(Self { names, rows })
    }
}

/// One line of the predictions file.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub session_id: String,
    /// Audio, video, text.
    pub per_modality: [PredictionWithConfidence; 3],
    pub chosen: String,
    /// Clamped to the PHQ-8 range.
    pub fused: f64,
    pub strategy: String,
    pub include_gender: bool,
}

impl PredictionRow {
    pub fn new(session_id: &str, result: &FusionResult, include_gender: bool) -> Result<Self> {
        let pick = |m: Modality| {
            result
                .inputs
                .iter()
                .find(|p| p.modality == m)
                .copied()
                .ok_or_else(|| anyhow!("no {m} prediction for {session_id}"))
        };
        Ok(Self {
            session_id: session_id.into(),
            per_modality: [pick(Modality::Audio)?, pick(Modality::Video)?, pick(Modality::Text)?],
            chosen: match result.chosen {
                Chosen::Modality(m) => m.to_string(),
                Chosen::Blend => "blend".into(),
            },
            fused: result.reported(),
            strategy: result.strategy.to_string(),
            include_gender,
        })
    }

    pub fn prediction(&self, modality: Modality) -> PredictionWithConfidence {
        self.per_modality[modality as usize]
    }
}

pub fn write_predictions(rows: &[PredictionRow], meta: &ArtifactMeta) -> String {
    let mut out = meta.comment_line();
    out.push_str(PREDICTIONS_HEADER);
    out.push('\n');
    for r in rows {
        write!(out, "{}", r.session_id).unwrap();
        for p in &r.per_modality {
            write!(out, ",{},{}", p.mean, p.std).unwrap();
        }
        writeln!(out, ",{},{},{},{}", r.chosen, r.fused, r.strategy, u8::from(r.include_gender)).unwrap();
    }
    out
}

pub fn parse_predictions(text: &str) -> Result<Vec<PredictionRow>> {
    let mut rdr = reader(text);
    let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
    if header.join(",") != PREDICTIONS_HEADER {
        bail!("predictions header must be {PREDICTIONS_HEADER}");
    }
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let cell = |i: usize| record.get(i).unwrap_or_default();
        let p = |m: Modality, i: usize| -> Result<PredictionWithConfidence> {
            Ok(PredictionWithConfidence { mean: real(cell(i), line)?, std: real(cell(i + 1), line)?, modality: m })
        };
        out.push(PredictionRow {
            session_id: cell(0).into(),
            per_modality: [p(Modality::Audio, 1)?, p(Modality::Video, 3)?, p(Modality::Text, 5)?],
            chosen: cell(7).into(),
            fused: real(cell(8), line)?,
            strategy: cell(9).into(),
            include_gender: match cell(10) {
                "0" => false,
                "1" => true,
                other => bail!("line {line}: gender_flag must be 0 or 1, got {other:?}"),
            },
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    pub file: String,
    /// Input width including the gender column when enabled.
    pub width: usize,
    pub features: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestSettings {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub mtry: Option<usize>,
    pub bootstrap: bool,
}

impl From<&ForestParams> for ForestSettings {
    fn from(p: &ForestParams) -> Self {
        Self {
            n_trees: p.n_trees,
            max_depth: p.max_depth,
            min_samples_leaf: p.min_samples_leaf,
            mtry: p.mtry,
            bootstrap: p.bootstrap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub include_gender: bool,
    pub train_sessions: usize,
    pub forest: ForestSettings,
    pub models: BTreeMap<String, ModelEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

impl Manifest {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let m: Manifest = serde_json::from_str(text).context("parsing model manifest")?;
        for modality in Modality::ALL {
            if !m.models.contains_key(modality.as_str()) {
                bail!("manifest has no {modality} model");
            }
        }
        Ok(m)
    }

    pub fn entry(&self, modality: Modality) -> &ModelEntry {
        &self.models[modality.as_str()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use phq_core::fusion::{fuse, FusionStrategy};

    #[test]
    fn feature_table_round_trip() {
        let mut rows = BTreeMap::new();
        rows.insert("b".to_string(), vec![0.1, -2.5e-9]);
        rows.insert("a".to_string(), vec![1.0 / 3.0, 7.0]);
        let table = FeatureTable { names: vec!["x".into(), "y".into()], rows };
        let text = table.to_csv(&meta("h", 3));
        assert!(text.starts_with("# tool=phq version="));
        assert_eq!(text.lines().nth(1), Some("session_id,x,y"));
        assert_eq!(text.lines().nth(2).unwrap().split(',').next(), Some("a"));
        assert_eq!(FeatureTable::parse(&text).unwrap(), table);
    }

    #[test]
    fn feature_table_errors() {
        assert!(FeatureTable::parse("id,x\na,1\n").is_err());
        assert!(FeatureTable::parse("session_id,x\na,zz\n").is_err());
        assert!(FeatureTable::parse("session_id,x\na,1\na,2\n").is_err());
    }

    #[test]
    fn predictions_round_trip() {
        let inputs = [
            PredictionWithConfidence { mean: 12.0, std: 1.2, modality: Modality::Audio },
            PredictionWithConfidence { mean: 8.0, std: 3.4, modality: Modality::Video },
            PredictionWithConfidence { mean: 30.0, std: 2.0, modality: Modality::Text },
        ];
        let fused = fuse(&inputs, FusionStrategy::Average).unwrap();
        let row = PredictionRow::new("s1", &fused, true).unwrap();
        assert_eq!(row.fused, fused.reported());
        assert_eq!(row.chosen, "blend");
        let text = write_predictions(std::slice::from_ref(&row), &meta("h", 0));
        assert_eq!(parse_predictions(&text).unwrap(), [row]);
    }
}
