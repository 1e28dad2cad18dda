//! Session-level acoustic features from per-frame descriptors.
//!
//! Each descriptor column yields up to three streams (the raw column, its
//! delta and its delta-delta). Every enabled stream contributes `dct_k`
//! DCT coefficients and, optionally, four summary statistics. Features are
//! named `<descriptor>.<stream>.<kind>` and ordered by descriptor, then
//! stream, then kind.

use rayon::prelude::*;

use crate::datamodel::{DescriptorSeries, FeatureVector, Modality};
use crate::error::{Error, Result};
use crate::signalmath::{delta, select_dct, stat_descriptors, DctSelection, StatSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stream {
    Base,
    Delta,
    DeltaDelta,
}

impl Stream {
    pub const ALL: [Stream; 3] = [Stream::Base, Stream::Delta, Stream::DeltaDelta];

    pub fn as_str(self) -> &'static str {
        match self {
            Stream::Base => "base",
            Stream::Delta => "delta",
            Stream::DeltaDelta => "delta2",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AudioConfig {
    pub dct_k: usize,
    pub delta_window: usize,
    /// Enabled streams, indexed base / delta / delta-delta.
    pub streams: [bool; 3],
    /// Streams that also receive the summary statistics.
    pub stats_on: [bool; 3],
    pub dct_selection: DctSelection,
    /// Drop frames whose `VUV` column is 0 before computing anything.
    pub voiced_only: bool,
}

impl Default for AudioConfig {
    fn default() -> Self {
        Self {
            dct_k: 10,
            delta_window: 2,
            streams: [true; 3],
            stats_on: [true; 3],
            dct_selection: DctSelection::LargestMagnitude,
            voiced_only: false,
        }
    }
}

impl AudioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dct_k == 0 {
            return Err(Error::Config("dct_k must be at least 1".into()));
        }
        if self.delta_window == 0 {
            return Err(Error::Config("delta_window must be at least 1".into()));
        }
        if !self.streams[Stream::Base.index()] {
            return Err(Error::Config("the base stream must be enabled".into()));
        }
        Ok(())
    }

    pub fn enabled_streams(&self) -> impl Iterator<Item = Stream> + '_ {
        Stream::ALL.into_iter().filter(|s| self.streams[s.index()])
    }

    /// Features emitted per descriptor column.
    pub fn features_per_descriptor(&self) -> usize {
        self.enabled_streams()
            .map(|s| self.dct_k + if self.stats_on[s.index()] { 4 } else { 0 })
            .sum()
    }

    /// Total feature count for `n_descriptors` columns.
    pub fn feature_count(&self, n_descriptors: usize) -> usize {
        n_descriptors * self.features_per_descriptor()
    }

    /// Feature names for the given descriptor columns, in output order.
    pub fn feature_names(&self, descriptors: &[String]) -> Vec<String> {
        let mut names = Vec::with_capacity(self.feature_count(descriptors.len()));
        for d in descriptors {
            for stream in self.enabled_streams() {
                let s = stream.as_str();
                names.extend((0..self.dct_k).map(|i| format!("{d}.{s}.dct{i}")));
                if self.stats_on[stream.index()] {
                    names.extend(StatSet::NAMES.iter().map(|k| format!("{d}.{s}.{k}")));
                }
            }
        }
        names
    }
}

fn voiced_frames(series: &DescriptorSeries) -> Result<Vec<usize>> {
    let vuv = series
        .column_index("VUV")
        .ok_or_else(|| Error::Config("voiced_only needs a VUV column".into()))?;
    let keep: Vec<usize> = series
        .frames()
        .iter()
        .enumerate()
        .filter(|(_, row)| row[vuv] != 0.0)
        .map(|(i, _)| i)
        .collect();
    if keep.is_empty() {
        return Err(Error::Empty("no voiced frames".into()));
    }
    Ok(keep)
}

fn column_features(column: &[f64], config: &AudioConfig) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(config.features_per_descriptor());
    let base = column.to_vec();
    let d1 = delta(&base, config.delta_window)?;
    let d2 = if config.streams[Stream::DeltaDelta.index()] {
        delta(&d1, config.delta_window)?
    } else {
        Vec::new()
    };
    for stream in config.enabled_streams() {
        let values = match stream {
            Stream::Base => &base,
            Stream::Delta => &d1,
            Stream::DeltaDelta => &d2,
        };
        out.extend(select_dct(values, config.dct_k, config.dct_selection)?);
        if config.stats_on[stream.index()] {
            out.extend(stat_descriptors(values)?.to_array());
        }
    }
    Ok(out)
}

/// Build the audio feature vector of one session.
pub fn extract_audio_features(
    session_id: &str,
    series: &DescriptorSeries,
    config: &AudioConfig,
) -> Result<FeatureVector> {
    config.validate()?;
    if series.n_frames() == 0 {
        return Err(Error::Empty("descriptor series has no frames".into()));
    }
    if series.n_descriptors() == 0 {
        return Err(Error::Empty("descriptor series has no columns".into()));
    }
    let rows: Option<Vec<usize>> = if config.voiced_only {
        Some(voiced_frames(series)?)
    } else {
        None
    };
    let column = |j: usize| -> Vec<f64> {
        match &rows {
            Some(keep) => keep.iter().map(|&i| series.frames()[i][j]).collect(),
            None => series.column(j),
        }
    };

    // indexed collect keeps column order independent of scheduling
    let per_column: Vec<Vec<f64>> = (0..series.n_descriptors())
        .into_par_iter()
        .map(|j| column_features(&column(j), config))
        .collect::<Result<_>>()?;

    let values = per_column.concat();
    let names = config.feature_names(series.names());
    FeatureVector::new(session_id, Modality::Audio, names, values)
}
