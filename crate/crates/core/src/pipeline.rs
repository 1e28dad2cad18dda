//! Session discovery and per-session feature extraction.
//!
//! Sessions live in `<root>/<session_id>/` and hold one file per modality.
//! File names are matched with glob patterns, by default
//! `descriptors.csv`, `landmarks.csv` and `transcript.tsv`.

use std::fs;
use std::path::{Path, PathBuf};

use glob::Pattern;
use rayon::prelude::*;

use crate::audiofeat::{extract_audio_features, AudioConfig};
use crate::datamodel::{Dataset, FeatureVector, Modality, SessionRecord};
use crate::error::{Error, Result};
use crate::ingest::{
    load_lexicon, parse_descriptor_table, parse_landmark_table, parse_transcript, ColumnMap,
    Lexicon, LexiconKind,
};
use crate::textfeat::{extract_text_features, TextConfig};
use crate::videofeat::{extract_video_features, RegionGroups, StablePointSet};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionLayout {
    pub descriptors: String,
    pub landmarks: String,
    pub transcript: String,
}

impl Default for SessionLayout {
    fn default() -> Self {
        Self {
            descriptors: "descriptors.csv".into(),
            landmarks: "landmarks.csv".into(),
            transcript: "transcript.tsv".into(),
        }
    }
}

impl SessionLayout {
    pub fn pattern(&self, modality: Modality) -> &str {
        match modality {
            Modality::Audio => &self.descriptors,
            Modality::Video => &self.landmarks,
            Modality::Text => &self.transcript,
        }
    }

    /// First file in `dir` (by name) matching the modality's pattern.
    pub fn locate(&self, dir: &Path, modality: Modality) -> Result<PathBuf> {
        let raw = self.pattern(modality);
        let pattern = Pattern::new(raw)
            .map_err(|e| Error::Config(format!("bad file pattern {raw:?}: {e}")))?;
        let mut names: Vec<String> = fs::read_dir(dir)?
            .filter_map(|e| e.ok())
            .filter(|e| e.file_type().map(|t| t.is_file()).unwrap_or(false))
            .filter_map(|e| e.file_name().into_string().ok())
            .filter(|n| pattern.matches(n))
            .collect();
        names.sort();
        names
            .into_iter()
            .next()
            .map(|n| dir.join(n))
            .ok_or_else(|| {
                Error::Io(std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    format!("no file matching {raw:?} in {}", dir.display()),
                ))
            })
    }
}

/// Everything needed to turn session files into feature vectors.
#[derive(Debug, Clone, Default)]
pub struct ExtractionConfig {
    pub layout: SessionLayout,
    pub columns: ColumnMap,
    pub audio: AudioConfig,
    pub stable: StablePointSet,
    pub groups: RegionGroups,
    pub text: TextConfig,
}

#[derive(Debug, Clone)]
pub struct Lexicons {
    pub sentiment: Lexicon,
    pub depression: Lexicon,
}

impl Lexicons {
    pub fn load(sentiment: &Path, depression: &Path) -> Result<Self> {
        Ok(Self {
            sentiment: load_lexicon(&fs::read_to_string(sentiment)?, LexiconKind::Sentiment)?,
            depression: load_lexicon(&fs::read_to_string(depression)?, LexiconKind::Depression)?,
        })
    }
}

/// Session directories under `root`, sorted by id.
pub fn discover_sessions(root: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut out: Vec<(String, PathBuf)> = fs::read_dir(root)?
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().map(|t| t.is_dir()).unwrap_or(false))
        .filter_map(|e| Some((e.file_name().into_string().ok()?, e.path())))
        .collect();
    out.sort();
    Ok(out)
}

/// Extract one modality of one session.
pub fn extract_session(
    session_id: &str,
    dir: &Path,
    modality: Modality,
    config: &ExtractionConfig,
    lexicons: Option<&Lexicons>,
) -> Result<FeatureVector> {
    let path = config.layout.locate(dir, modality)?;
    let text = fs::read_to_string(&path)?;
    match modality {
        Modality::Audio => {
            let (series, _) = parse_descriptor_table(&text, &config.columns.descriptors)?;
            extract_audio_features(session_id, &series, &config.audio)
        }
        Modality::Video => {
            let series = parse_landmark_table(&text, &config.columns.landmarks)?;
            extract_video_features(session_id, &series, &config.stable, &config.groups)
        }
        Modality::Text => {
            let lex = lexicons
                .ok_or_else(|| Error::Config("text extraction needs both lexicons".into()))?;
            let transcript = parse_transcript(&text)?;
            extract_text_features(
                session_id,
                &transcript,
                &config.text,
                &lex.depression,
                &lex.sentiment,
            )
        }
    }
}

/// Load every record's three modalities from `root/<session_id>/`.
pub fn build_dataset(
    root: &Path,
    records: Vec<SessionRecord>,
    config: &ExtractionConfig,
    lexicons: &Lexicons,
) -> Result<Dataset> {
    let jobs: Vec<(String, Modality)> = records
        .iter()
        .flat_map(|r| Modality::ALL.map(|m| (r.session_id().to_string(), m)))
        .collect();
    let vectors: Vec<FeatureVector> = jobs
        .par_iter()
        .map(|(id, m)| {
            extract_session(id, &root.join(id), *m, config, Some(lexicons)).map_err(|e| {
                Error::Invalid(format!("session {id:?} ({m}): {e}"))
            })
        })
        .collect::<Result<_>>()?;
    let mut dataset = Dataset::new(records)?;
    for fv in vectors {
        dataset.insert_features(fv)?;
    }
    Ok(dataset)
}
