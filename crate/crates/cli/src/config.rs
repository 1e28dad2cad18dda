//! Flat `key = value` run configuration.
//!
//! Lines starting with `#` are comments. Later entries override earlier
//! ones, and command-line flags are applied last.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use phq_core::audiofeat::Stream;
use phq_core::forest::ForestParams;
use phq_core::fusion::FusionStrategy;
use phq_core::pipeline::ExtractionConfig;
use phq_core::signalmath::DctSelection;
use phq_core::synth::SynthConfig;
use phq_core::videofeat::{Chain, Region, RegionGroups, StablePointSet};
use phq_core::Modality;
use sha2::{Digest, Sha256};

/// Every accepted key. `video.region.<name>` is matched by prefix.
pub const KEYS: &[&str] = &[
    "seed",
    "jobs",
    "out",
    "labels",
    "sentiment_lexicon",
    "depression_lexicon",
    "include_gender",
    "strategy",
    "layout.descriptors",
    "layout.landmarks",
    "layout.transcript",
    "descriptors.names",
    "descriptors.delimiter",
    "descriptors.frame_period",
    "landmarks.delimiter",
    "audio.dct_k",
    "audio.delta_window",
    "audio.streams",
    "audio.stats",
    "audio.dct_selection",
    "audio.voiced_only",
    "video.stable_points",
    "video.region.",
    "text.participant_tag",
    "text.laughter_markers",
    "forest.n_trees",
    "forest.max_depth",
    "forest.min_samples_leaf",
    "forest.mtry",
    "forest.bootstrap",
    "synth.sessions",
    "synth.informative",
    "synth.noise",
    "synth.descriptors",
    "synth.frames",
    "synth.landmark_frames",
];

#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    pub seed: u64,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub sentiment_lexicon: Option<PathBuf>,
    pub depression_lexicon: Option<PathBuf>,
    pub include_gender: bool,
    pub strategy: FusionStrategy,
    pub extraction: ExtractionConfig,
    pub forest: ForestParams,
    pub synth: SynthConfig,
}

/// Split a config file into ordered `(key, value)` entries.
pub fn parse_entries(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("config line {}: expected key = value", n + 1))?;
        out.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(out)
}

pub fn parse_override(entry: &str) -> Result<(String, String)> {
    let (k, v) = entry
        .split_once('=')
        .ok_or_else(|| anyhow!("--set expects KEY=VALUE, got {entry:?}"))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

fn flag(value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => bail!("expected a boolean, got {value:?}"),
    }
}

fn number<T: std::str::FromStr>(value: &str) -> Result<T>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    value.parse::<T>().with_context(|| format!("bad number {value:?}"))
}

fn optional_count(value: &str, none: &str) -> Result<Option<usize>> {
    if value.eq_ignore_ascii_case(none) {
        Ok(None)
    } else {
        number(value).map(Some)
    }
}

fn list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

fn delimiter(value: &str) -> Result<u8> {
    match value {
        "tab" | "\\t" => Ok(b'\t'),
        "comma" => Ok(b','),
        "semicolon" => Ok(b';'),
        v if v.len() == 1 => Ok(v.as_bytes()[0]),
        v => bail!("delimiter must be one byte, tab, comma or semicolon, got {v:?}"),
    }
}

/// `17-21,36` style index lists.
pub fn parse_indices(value: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in list(value) {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (usize, usize) = (number(a.trim())?, number(b.trim())?);
                if a > b {
                    bail!("descending range {part:?}");
                }
                out.extend(a..=b);
            }
            None => out.push(number(&part)?),
        }
    }
    Ok(out)
}

/// `brow:open:17-21 eye:closed:36-41 opening:pair:62,66`
fn parse_region(name: &str, value: &str) -> Result<Region> {
    let mut region = Region { name: name.to_string(), chains: Vec::new(), pairs: Vec::new() };
    for item in value.split_whitespace() {
        let mut parts = item.splitn(3, ':');
        let (Some(part), Some(kind), Some(list_text)) = (parts.next(), parts.next(), parts.next()) else {
            bail!("region {name}: expected name:kind:indices, got {item:?}");
        };
        let indices = parse_indices(list_text)?;
        match kind {
            "open" | "closed" => region.chains.push(Chain {
                name: part.to_string(),
                indices,
                closed: kind == "closed",
            }),
            "pair" => match indices[..] {
                [a, b] => region.pairs.push((part.to_string(), a, b)),
                _ => bail!("region {name}: pair {part:?} needs exactly two indices"),
            },
            other => bail!("region {name}: unknown kind {other:?}"),
        }
    }
    Ok(region)
}

fn streams(value: &str) -> Result<[bool; 3]> {
    let mut out = [false; 3];
    for name in list(value) {
        let stream = Stream::ALL
            .into_iter()
            .find(|s| s.as_str() == name)
            .ok_or_else(|| anyhow!("unknown stream {name:?}"))?;
        out[Stream::ALL.iter().position(|s| *s == stream).unwrap()] = true;
    }
    Ok(out)
}

fn stream_list(on: [bool; 3]) -> String {
    Stream::ALL
        .iter()
        .zip(on)
        .filter(|(_, on)| *on)
        .map(|(s, _)| s.as_str())
        .collect::<Vec<_>>()
        .join(",")
}

impl RunConfig {
    pub fn from_entries(entries: &[(String, String)]) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut stable: Option<Vec<usize>> = None;
        let mut regions: Vec<Region> = Vec::new();
        for (key, value) in entries {
            cfg.apply(key, value, &mut stable, &mut regions)
                .with_context(|| format!("config key {key:?}"))?;
        }
        if let Some(indices) = stable {
            cfg.extraction.stable = StablePointSet::new(indices)?;
        }
        if !regions.is_empty() {
            cfg.extraction.groups = RegionGroups::new(regions)?;
        }
        cfg.forest.seed = cfg.seed;
        cfg.synth.seed = cfg.seed;
        cfg.extraction.audio.validate()?;
        cfg.synth.validate()?;
        if cfg.forest.n_trees == 0 || cfg.forest.min_samples_leaf == 0 || cfg.forest.mtry == Some(0) {
            bail!("forest.n_trees, forest.min_samples_leaf and forest.mtry must be at least 1");
        }
        if cfg.jobs == Some(0) {
            bail!("jobs must be at least 1");
        }
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut entries = match path {
            Some(p) => parse_entries(
                &fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?,
            )?,
            None => Vec::new(),
        };
        entries.extend(overrides.iter().cloned());
        Self::from_entries(&entries)
    }

    fn apply(
        &mut self,
        key: &str,
        value: &str,
        stable: &mut Option<Vec<usize>>,
        regions: &mut Vec<Region>,
    ) -> Result<()> {
        let ex = &mut self.extraction;
        match key {
            "seed" => self.seed = number(value)?,
            "jobs" => self.jobs = Some(number(value)?),
            "out" => self.out = Some(value.into()),
            "labels" => self.labels = Some(value.into()),
            "sentiment_lexicon" => self.sentiment_lexicon = Some(value.into()),
            "depression_lexicon" => self.depression_lexicon = Some(value.into()),
            "include_gender" => self.include_gender = flag(value)?,
            "strategy" => self.strategy = value.parse()?,
            "layout.descriptors" => ex.layout.descriptors = value.into(),
            "layout.landmarks" => ex.layout.landmarks = value.into(),
            "layout.transcript" => ex.layout.transcript = value.into(),
            "descriptors.names" => ex.columns.descriptors.names = list(value),
            "descriptors.delimiter" => ex.columns.descriptors.delimiter = delimiter(value)?,
            "descriptors.frame_period" => ex.columns.descriptors.frame_period = number(value)?,
            "landmarks.delimiter" => ex.columns.landmarks.delimiter = delimiter(value)?,
            "audio.dct_k" => ex.audio.dct_k = number(value)?,
            "audio.delta_window" => ex.audio.delta_window = number(value)?,
            "audio.streams" => ex.audio.streams = streams(value)?,
            "audio.stats" => ex.audio.stats_on = streams(value)?,
            "audio.dct_selection" => {
                ex.audio.dct_selection = match value {
                    "largest" => DctSelection::LargestMagnitude,
                    "first" => DctSelection::FirstK,
                    v => bail!("expected largest or first, got {v:?}"),
                }
            }
            "audio.voiced_only" => ex.audio.voiced_only = flag(value)?,
            "video.stable_points" => *stable = Some(parse_indices(value)?),
            "text.participant_tag" => ex.text.participant_tag = value.into(),
            "text.laughter_markers" => ex.text.laughter_markers = list(value),
            "forest.n_trees" => self.forest.n_trees = number(value)?,
            "forest.max_depth" => self.forest.max_depth = optional_count(value, "none")?,
            "forest.min_samples_leaf" => self.forest.min_samples_leaf = number(value)?,
            "forest.mtry" => self.forest.mtry = optional_count(value, "auto")?,
            "forest.bootstrap" => self.forest.bootstrap = flag(value)?,
            "synth.sessions" => self.synth.n_sessions = number(value)?,
            "synth.informative" => self.synth.informative = value.parse::<Modality>()?,
            "synth.noise" => {
                let levels: Vec<f64> = list(value).iter().map(|v| number(v)).collect::<Result<_>>()?;
                self.synth.noise_levels = levels
                    .try_into()
                    .map_err(|_| anyhow!("expected audio,video,text noise levels"))?;
            }
            "synth.descriptors" => self.synth.n_descriptors = number(value)?,
            "synth.frames" => self.synth.descriptor_frames = number(value)?,
            "synth.landmark_frames" => self.synth.landmark_frames = number(value)?,
            _ => match key.strip_prefix("video.region.") {
                Some(name) if !name.is_empty() => {
                    let region = parse_region(name, value)?;
                    match regions.iter_mut().find(|r| r.name == name) {
                        Some(slot) => *slot = region,
                        None => regions.push(region),
                    }
                }
                _ => bail!("unknown key; known keys: {}", KEYS.join(", ")),
            },
        }
        Ok(())
    }

    /// Settings that influence results, one `key=value` per line. Paths,
    /// `jobs` and `out` are left out so runs in different directories
    /// agree.
    pub fn canonical(&self) -> String {
        let ex = &self.extraction;
        let a = &ex.audio;
        let f = &self.forest;
        let s = &self.synth;
        let mut out = String::new();
        let mut put = |k: &str, v: String| writeln!(out, "{k}={v}").unwrap();
        put("seed", self.seed.to_string());
        put("include_gender", self.include_gender.to_string());
        put("strategy", self.strategy.to_string());
        put("layout.descriptors", ex.layout.descriptors.clone());
        put("layout.landmarks", ex.layout.landmarks.clone());
        put("layout.transcript", ex.layout.transcript.clone());
        put("descriptors.names", ex.columns.descriptors.names.join(","));
        put("descriptors.delimiter", ex.columns.descriptors.delimiter.to_string());
        put("descriptors.frame_period", ex.columns.descriptors.frame_period.to_string());
        put("landmarks.delimiter", ex.columns.landmarks.delimiter.to_string());
        put("audio.dct_k", a.dct_k.to_string());
        put("audio.delta_window", a.delta_window.to_string());
        put("audio.streams", stream_list(a.streams));
        put("audio.stats", stream_list(a.stats_on));
        put("audio.dct_selection", format!("{:?}", a.dct_selection));
        put("audio.voiced_only", a.voiced_only.to_string());
        put("video.stable_points", format!("{:?}", ex.stable.indices()));
        for r in ex.groups.regions() {
            put(&format!("video.region.{}", r.name), format!("{:?} {:?}", r.chains, r.pairs));
        }
        put("text.participant_tag", ex.text.participant_tag.clone());
        put("text.laughter_markers", ex.text.laughter_markers.join(","));
        put("forest.n_trees", f.n_trees.to_string());
        put("forest.max_depth", format!("{:?}", f.max_depth));
        put("forest.min_samples_leaf", f.min_samples_leaf.to_string());
        put("forest.mtry", format!("{:?}", f.mtry));
        put("forest.bootstrap", f.bootstrap.to_string());
        put("synth.sessions", s.n_sessions.to_string());
        put("synth.informative", s.informative.to_string());
        put("synth.noise", format!("{:?}", s.noise_levels));
        put("synth.descriptors", s.n_descriptors.to_string());
        put("synth.frames", s.descriptor_frames.to_string());
        put("synth.landmark_frames", s.landmark_frames.to_string());
        out
    }

    /// Hex SHA-256 of [`RunConfig::canonical`].
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entries(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn file_format() {
        let text = "# comment\nseed = 7\n\nforest.n_trees=5\naudio.streams = base, delta\n";
        let cfg = RunConfig::from_entries(&parse_entries(text).unwrap()).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.forest.seed, 7);
        assert_eq!(cfg.forest.n_trees, 5);
        assert_eq!(cfg.extraction.audio.streams, [true, true, false]);
        assert!(parse_entries("seed 7").is_err());
    }

    #[test]
    fn later_entries_win() {
        let cfg = RunConfig::from_entries(&entries(&[("seed", "1"), ("seed", "2")])).unwrap();
        assert_eq!(cfg.seed, 2);
    }

    #[test]
    fn rejects_unknown_and_invalid() {
        assert!(RunConfig::from_entries(&entries(&[("sed", "1")])).is_err());
        assert!(RunConfig::from_entries(&entries(&[("forest.bootstrap", "maybe")])).is_err());
        assert!(RunConfig::from_entries(&entries(&[("audio.streams", "delta")])).is_err());
        assert!(RunConfig::from_entries(&entries(&[("video.stable_points", "0-44")])).is_err());
        assert!(RunConfig::from_entries(&entries(&[("jobs", "0")])).is_err());
    }

    #[test]
    fn region_override() {
        let cfg = RunConfig::from_entries(&entries(&[
            ("video.region.mouth", "outer:closed:48-59 gap:pair:62,66"),
        ]))
        .unwrap();
        let groups = &cfg.extraction.groups;
        assert_eq!(groups.regions().len(), 1);
        assert_eq!(groups.feature_count(), 13);
        assert!(RunConfig::from_entries(&entries(&[("video.region.x", "a:pair:1,2,3")])).is_err());
    }

    #[test]
    fn indices() {
        assert_eq!(parse_indices("1-3, 7").unwrap(), [1, 2, 3, 7]);
        assert!(parse_indices("3-1").is_err());
    }

    #[test]
    fn hash_ignores_paths_and_jobs() {
        let a = RunConfig::from_entries(&entries(&[("out", "x"), ("jobs", "2")])).unwrap();
        let b = RunConfig::from_entries(&entries(&[("out", "y"), ("labels", "z")])).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        let c = RunConfig::from_entries(&entries(&[("seed", "9")])).unwrap();
        assert_ne!(a.hash(), c.hash());
    }
}
