//! Session records, per-modality inputs and feature vectors.
//!
//! Every type here validates its invariants on construction and is
//! immutable afterwards, so values can be shared read-only across workers.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Number of facial landmarks per frame.
pub const LANDMARK_COUNT: usize = 68;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Modality {
    Audio,
    Video,
    Text,
}

impl Modality {
    pub const ALL: [Modality; 3] = [Modality::Audio, Modality::Video, Modality::Text];

    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Audio => "audio",
            Modality::Video => "video",
            Modality::Text => "text",
        }
    }

    /// Row label used in metrics tables ("audio only", "visual only", ...).
    pub fn feature_used(self) -> &'static str {
        match self {
            Modality::Audio => "audio only",
            Modality::Video => "visual only",
            Modality::Text => "text only",
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Modality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "audio" => Ok(Modality::Audio),
            "video" | "visual" => Ok(Modality::Video),
            "text" => Ok(Modality::Text),
            other => Err(Error::Invalid(format!("unknown modality {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Split {
    Train,
    Development,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Development, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Development => "development",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" | "training" => Ok(Split::Train),
            "development" | "dev" => Ok(Split::Development),
            "test" => Ok(Split::Test),
            other => Err(Error::Invalid(format!("unknown split {other:?}"))),
        }
    }
}

/// One interview session with its covariate and (optional) PHQ-8 label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionRecord {
    session_id: String,
    gender: u8,
    phq8: Option<u8>,
    split: Split,
}

impl SessionRecord {
    pub fn new(
        session_id: impl Into<String>,
        gender: u8,
        phq8: Option<u8>,
        split: Split,
    ) -> Result<Self> {
        let session_id = session_id.into();
        if session_id.is_empty() {
            return Err(Error::Invalid("empty session id".into()));
        }
        if gender > 1 {
            return Err(Error::Invalid(format!(
                "session {session_id:?}: gender must be 0 or 1, got {gender}"
            )));
        }
        if let Some(score) = phq8 {
            if score > 24 {
                return Err(Error::Invalid(format!(
                    "session {session_id:?}: phq8 {score} outside [0, 24]"
                )));
            }
        }
        Ok(Self {
            session_id,
            gender,
            phq8,
            split,
        })
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn gender(&self) -> u8 {
        self.gender
    }

    pub fn phq8(&self) -> Option<u8> {
        self.phq8
    }

    pub fn split(&self) -> Split {
        self.split
    }
}

/// Per-frame matrix of named acoustic descriptors.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorSeries {
    names: Vec<String>,
    frames: Vec<Vec<f64>>,
    frame_period: f64,
}

impl DescriptorSeries {
    pub fn new(names: Vec<String>, frames: Vec<Vec<f64>>, frame_period: f64) -> Result<Self> {
        if !(frame_period > 0.0 && frame_period.is_finite()) {
            return Err(Error::Invalid(format!(
                "frame period must be positive, got {frame_period}"
            )));
        }
        for (i, row) in frames.iter().enumerate() {
            if row.len() != names.len() {
                return Err(Error::Invalid(format!(
                    "frame {i} has {} values for {} descriptors",
                    row.len(),
                    names.len()
                )));
            }
            if row.iter().any(|v| v.is_nan()) {
                return Err(Error::Invalid(format!("frame {i} contains NaN")));
            }
        }
        Ok(Self {
            names,
            frames,
            frame_period,
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn frames(&self) -> &[Vec<f64>] {
        &self.frames
    }

    pub fn frame_period(&self) -> f64 {
        self.frame_period
    }

    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn n_descriptors(&self) -> usize {
        self.names.len()
    }

    pub fn column(&self, index: usize) -> Vec<f64> {
        self.frames.iter().map(|row| row[index]).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

pub type LandmarkFrame = [Point; LANDMARK_COUNT];

/// A 68-point facial landmark track.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSeries {
    frames: Vec<LandmarkFrame>,
    timestamps: Vec<f64>,
    confidence: Option<Vec<f64>>,
}

impl LandmarkSeries {
    pub fn new(frames: Vec<LandmarkFrame>, timestamps: Vec<f64>) -> Result<Self> {
        Self::with_confidence(frames, timestamps, None)
    }

    pub fn with_confidence(
        frames: Vec<LandmarkFrame>,
        timestamps: Vec<f64>,
        confidence: Option<Vec<f64>>,
    ) -> Result<Self> {
        if frames.len() != timestamps.len() {
            return Err(Error::LengthMismatch {
                left: frames.len(),
                right: timestamps.len(),
            });
        }
        if let Some(conf) = &confidence {
            if conf.len() != frames.len() {
                return Err(Error::LengthMismatch {
                    left: frames.len(),
                    right: conf.len(),
                });
            }
        }
        if timestamps.windows(2).any(|w| w[1].is_nan() || w[1] < w[0]) {
            return Err(Error::Invalid("landmark timestamps decrease".into()));
        }
        Ok(Self {
            frames,
            timestamps,
            confidence,
        })
    }

    pub fn frames(&self) -> &[LandmarkFrame] {
        &self.frames
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    /// Per-frame tracker confidence, when the source table carried one.
    pub fn confidence(&self) -> Option<&[f64]> {
        self.confidence.as_deref()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub start_time: f64,
    pub stop_time: f64,
    pub speaker: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Transcript {
    utterances: Vec<Utterance>,
}

impl Transcript {
    pub fn new(utterances: Vec<Utterance>) -> Result<Self> {
        for (i, u) in utterances.iter().enumerate() {
            if u.stop_time.is_nan() || u.stop_time < u.start_time {
                return Err(Error::Invalid(format!(
                    "utterance {i}: stop {} before start {}",
                    u.stop_time, u.start_time
                )));
            }
        }
        let transcript = Self { utterances };
        if transcript.duration() < 0.0 {
            return Err(Error::Invalid("transcript ends before it starts".into()));
        }
        Ok(transcript)
    }

    pub fn utterances(&self) -> &[Utterance] {
        &self.utterances
    }

    /// Last stop time minus first start time; 0 for an empty transcript.
    pub fn duration(&self) -> f64 {
        match (self.utterances.first(), self.utterances.last()) {
            (Some(first), Some(last)) => last.stop_time - first.start_time,
            _ => 0.0,
        }
    }

    /// The utterances spoken by `speaker` (exact tag match, case-insensitive).
    pub fn by_speaker<'a>(&'a self, speaker: &'a str) -> impl Iterator<Item = &'a Utterance> {
        self.utterances
            .iter()
            .filter(move |u| u.speaker.trim().eq_ignore_ascii_case(speaker.trim()))
    }
}

/// Named, ordered features of one session in one modality.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    session_id: String,
    modality: Modality,
    names: Vec<String>,
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(
        session_id: impl Into<String>,
        modality: Modality,
        names: Vec<String>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let session_id = session_id.into();
        if names.len() != values.len() {
            return Err(Error::LengthMismatch {
                left: names.len(),
                right: values.len(),
            });
        }
        let mut seen = std::collections::HashSet::with_capacity(names.len());
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(Error::Invalid(format!("duplicate feature name {name:?}")));
            }
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!(
                "session {session_id:?}: feature {:?} is not finite",
                names[pos]
            )));
        }
        Ok(Self {
            session_id,
            modality,
            names,
            values,
        })
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Session records plus their per-modality feature vectors.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    records: BTreeMap<String, SessionRecord>,
    features: BTreeMap<(String, Modality), FeatureVector>,
}

impl Dataset {
    pub fn new(records: Vec<SessionRecord>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for record in records {
            let id = record.session_id().to_string();
            if map.insert(id.clone(), record).is_some() {
                return Err(Error::Invalid(format!("duplicate session id {id:?}")));
            }
        }
        Ok(Self {
            records: map,
            features: BTreeMap::new(),
        })
    }

    /// Attach a feature vector. The session must exist and the name list
    /// must agree with any vector already stored for the modality.
    pub fn insert_features(&mut self, features: FeatureVector) -> Result<()> {
        if !self.records.contains_key(features.session_id()) {
            return Err(Error::Invalid(format!(
                "features for unknown session {:?}",
                features.session_id()
            )));
        }
        if let Some(existing) = self
            .features
            .values()
            .find(|fv| fv.modality() == features.modality())
        {
            if existing.names() != features.names() {
                return Err(Error::Invalid(format!(
                    "{} feature names of session {:?} differ from session {:?}",
                    features.modality(),
                    features.session_id(),
                    existing.session_id()
                )));
            }
        }
        self.features.insert(
            (features.session_id().to_string(), features.modality()),
            features,
        );
        Ok(())
    }

    /// Records in ascending session-id order.
    pub fn records(&self) -> impl Iterator<Item = &SessionRecord> {
        self.records.values()
    }

    pub fn record(&self, session_id: &str) -> Option<&SessionRecord> {
        self.records.get(session_id)
    }

    pub fn features(&self, session_id: &str, modality: Modality) -> Option<&FeatureVector> {
        self.features.get(&(session_id.to_string(), modality))
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// The sessions of one split, with their features.
    pub fn restrict(&self, split: Split) -> Dataset {
        let records: BTreeMap<_, _> = self
            .records
            .iter()
            .filter(|(_, r)| r.split() == split)
            .map(|(k, r)| (k.clone(), r.clone()))
            .collect();
        let features = self
            .features
            .iter()
            .filter(|((id, _), _)| records.contains_key(id))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        Dataset { records, features }
    }
}

/// Rows of one modality's features, ready for regression.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub rows: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub row_ids: Vec<String>,
    pub column_names: Vec<String>,
}

impl DesignMatrix {
    pub fn n_cols(&self) -> usize {
        self.column_names.len()
    }
}

/// Name of the trailing covariate column added by `include_gender`.
pub const GENDER_COLUMN: &str = "gender";

/// Build the labelled regression matrix for one modality.
///
/// Rows follow ascending session id; with `include_gender` the 0/1
/// covariate is appended as the last column.
pub fn assemble_design_matrix(
    dataset: &Dataset,
    modality: Modality,
    include_gender: bool,
) -> Result<DesignMatrix> {
    assemble(dataset, modality, include_gender, true)
}

/// Like [`assemble_design_matrix`] but without requiring labels; `targets`
/// is left empty.
pub fn assemble_feature_matrix(
    dataset: &Dataset,
    modality: Modality,
    include_gender: bool,
) -> Result<DesignMatrix> {
    assemble(dataset, modality, include_gender, false)
}

fn assemble(
    dataset: &Dataset,
    modality: Modality,
    include_gender: bool,
    labelled: bool,
) -> Result<DesignMatrix> {
    let mut rows = Vec::with_capacity(dataset.len());
    let mut targets = Vec::new();
    let mut row_ids = Vec::with_capacity(dataset.len());
    let mut column_names: Option<Vec<String>> = None;

    for record in dataset.records() {
        let id = record.session_id();
        if labelled {
            let label = record
                .phq8()
                .ok_or_else(|| Error::MissingLabel(id.to_string()))?;
            targets.push(f64::from(label));
        }
        let fv = dataset
            .features(id, modality)
            .ok_or_else(|| Error::MissingFeatures {
                session_id: id.to_string(),
                modality,
            })?;
        if column_names.is_none() {
            let mut names = fv.names().to_vec();
            if include_gender {
                names.push(GENDER_COLUMN.to_string());
            }
            column_names = Some(names);
        }
        let mut row = fv.values().to_vec();
        if include_gender {
            row.push(f64::from(record.gender()));
        }
        rows.push(row);
        row_ids.push(id.to_string());
    }

    Ok(DesignMatrix {
        rows,
        targets,
        row_ids,
        column_names: column_names.unwrap_or_default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn video_fv(id: &str, offset: f64) -> FeatureVector {
        let names = (0..133).map(|i| format!("f{i}")).collect();
        let values = (0..133).map(|i| i as f64 + offset).collect();
        FeatureVector::new(id, Modality::Video, names, values).unwrap()
    }

    fn two_session_dataset() -> Dataset {
        let mut ds = Dataset::new(vec![
            SessionRecord::new("s002", 0, Some(4), Split::Train).unwrap(),
            SessionRecord::new("s001", 1, Some(10), Split::Train).unwrap(),
        ])
        .unwrap();
        ds.insert_features(video_fv("s001", 0.0)).unwrap();
        ds.insert_features(video_fv("s002", 1.0)).unwrap();
        ds
    }

    #[test]
    fn design_matrix_widths() {
        let ds = two_session_dataset();
        let plain = assemble_design_matrix(&ds, Modality::Video, false).unwrap();
        assert_eq!(plain.rows.len(), 2);
        assert!(plain.rows.iter().all(|r| r.len() == 133));
        let gendered = assemble_design_matrix(&ds, Modality::Video, true).unwrap();
        assert!(gendered.rows.iter().all(|r| r.len() == 134));
        assert_eq!(gendered.column_names.last().unwrap(), GENDER_COLUMN);
        // s001 is female (1) and sorts first
        assert_eq!(gendered.row_ids, vec!["s001", "s002"]);
        assert_eq!(gendered.rows[0][133], 1.0);
        assert_eq!(gendered.targets, vec![10.0, 4.0]);
    }

    #[test]
    fn missing_label_is_named() {
        let mut ds = Dataset::new(vec![
            SessionRecord::new("s001", 1, Some(10), Split::Train).unwrap(),
            SessionRecord::new("s009", 0, None, Split::Test).unwrap(),
        ])
        .unwrap();
        ds.insert_features(video_fv("s001", 0.0)).unwrap();
        ds.insert_features(video_fv("s009", 0.0)).unwrap();
        match assemble_design_matrix(&ds, Modality::Video, false) {
            Err(Error::MissingLabel(id)) => assert_eq!(id, "s009"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(assemble_feature_matrix(&ds, Modality::Video, false).is_ok());
    }

    #[test]
    fn missing_features_is_named() {
        let ds = Dataset::new(vec![SessionRecord::new("s001", 1, Some(3), Split::Train).unwrap()])
            .unwrap();
        match assemble_design_matrix(&ds, Modality::Audio, false) {
            Err(Error::MissingFeatures { session_id, modality }) => {
                assert_eq!(session_id, "s001");
                assert_eq!(modality, Modality::Audio);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn record_invariants() {
        assert!(SessionRecord::new("", 0, None, Split::Train).is_err());
        assert!(SessionRecord::new("a", 2, None, Split::Train).is_err());
        assert!(SessionRecord::new("a", 0, Some(25), Split::Train).is_err());
        assert!(SessionRecord::new("a", 0, Some(24), Split::Train).is_ok());
    }

    #[test]
    fn feature_vector_rejects_duplicates_and_nan() {
        let names = vec!["a".to_string(), "a".to_string()];
        assert!(FeatureVector::new("s", Modality::Text, names, vec![1.0, 2.0]).is_err());
        let names = vec!["a".to_string(), "b".to_string()];
        assert!(FeatureVector::new("s", Modality::Text, names, vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn dataset_rejects_mismatched_names() {
        let mut ds = two_session_dataset();
        let other = FeatureVector::new("s001", Modality::Video, vec!["z".into()], vec![0.0]).unwrap();
        assert!(ds.insert_features(other).is_err());
    }

    #[test]
    fn row_order_ignores_record_order() {
        let a = two_session_dataset();
        let mut b = Dataset::new(vec![
            SessionRecord::new("s001", 1, Some(10), Split::Train).unwrap(),
            SessionRecord::new("s002", 0, Some(4), Split::Train).unwrap(),
        ])
        .unwrap();
        b.insert_features(video_fv("s002", 1.0)).unwrap();
        b.insert_features(video_fv("s001", 0.0)).unwrap();
        assert_eq!(
            assemble_design_matrix(&a, Modality::Video, true).unwrap(),
            assemble_design_matrix(&b, Modality::Video, true).unwrap()
        );
    }
}
