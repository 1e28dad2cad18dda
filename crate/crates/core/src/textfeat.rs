//! Transcript statistics, depression-vocabulary rate and sentiment summary.

use crate::datamodel::{FeatureVector, Modality, Transcript, Utterance};
use crate::error::{Error, Result};
use crate::ingest::Lexicon;
use crate::signalmath::{median, population_std};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub laughter: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextConfig {
    pub participant_tag: String,
    /// Normalized forms recognised as laughter; `<laughter>` and
    /// `[laughter]` normalize to `laughter`.
    pub laughter_markers: Vec<String>,
}

impl Default for TextConfig {
    fn default() -> Self {
        Self {
            participant_tag: "Participant".into(),
            laughter_markers: vec!["laughter".into()],
        }
    }
}

/// Lowercase word tokens. Words are runs of alphanumerics joined by
/// internal apostrophes.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in text.split(|c: char| !(c.is_alphanumeric() || c == '\'' || c == '’')) {
        let word = chunk.trim_matches(|c| c == '\'' || c == '’');
        if !word.is_empty() {
            tokens.push(word.replace('’', "'").to_lowercase());
        }
    }
    tokens
}

/// [`tokenize`] with laughter markers flagged.
pub fn tokenize_flagged(text: &str, laughter_markers: &[String]) -> Vec<Token> {
    tokenize(text)
        .into_iter()
        .map(|text| Token {
            laughter: laughter_markers.contains(&text),
            text,
        })
        .collect()
}

/// Greedy longest-first lexicon matching over a word sequence. Returns
/// the matched entry values; a word takes part in at most one match.
pub fn lexicon_matches(words: &[&str], lexicon: &Lexicon) -> Vec<i32> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < words.len() {
        let longest = lexicon.max_words().min(words.len() - i);
        let hit = (1..=longest).rev().find_map(|len| {
            let phrase = if len == 1 {
                words[i].to_string()
            } else {
                words[i..i + len].join(" ")
            };
            lexicon.get(&phrase).map(|v| (len, v))
        });
        match hit {
            Some((len, value)) => {
                out.push(value);
                i += len;
            }
            None => i += 1,
        }
    }
    out
}

fn participant_utterances<'a>(transcript: &'a Transcript, tag: &'a str) -> Vec<&'a Utterance> {
    transcript.by_speaker(tag).collect()
}

/// Span used to normalize rates: first-to-last participant utterance, or
/// the whole transcript when the participant never speaks.
fn rate_duration(transcript: &Transcript, participant: &[&Utterance]) -> f64 {
    match (participant.first(), participant.last()) {
        (Some(first), Some(last)) => last.stop_time - first.start_time,
        _ => transcript.duration(),
    }
}

pub const BASIC_FEATURE_NAMES: [&str; 4] =
    ["sentences_per_minute", "word_count", "laughter_ratio", "dep_ratio"];

/// Sentence rate, word count, laughter ratio and depression-word rate over
/// participant speech.
pub fn basic_text_features(
    transcript: &Transcript,
    config: &TextConfig,
    dep_lexicon: &Lexicon,
) -> Result<[f64; 4]> {
    let participant = participant_utterances(transcript, &config.participant_tag);
    let duration = rate_duration(transcript, &participant);
    if duration.is_nan() || duration <= 0.0 {
        return Err(Error::ZeroDuration);
    }
    let minutes = duration / 60.0;

    let mut words = 0usize;
    let mut laughs = 0usize;
    let mut dep_hits = 0usize;
    for u in &participant {
        let tokens = tokenize_flagged(&u.text, &config.laughter_markers);
        laughs += tokens.iter().filter(|t| t.laughter).count();
        let spoken: Vec<&str> = tokens
            .iter()
            .filter(|t| !t.laughter)
            .map(|t| t.text.as_str())
            .collect();
        words += spoken.len();
        dep_hits += lexicon_matches(&spoken, dep_lexicon).len();
    }
    let denom = words.max(1) as f64;
    Ok([
        participant.len() as f64 / minutes,
        words as f64,
        laughs as f64 / denom,
        dep_hits as f64 / denom / minutes,
    ])
}

/// Per-participant-utterance sums of matched sentiment valences.
pub fn sentiment_series(transcript: &Transcript, participant_tag: &str, lexicon: &Lexicon) -> Vec<i64> {
    transcript
        .by_speaker(participant_tag)
        .map(|u| {
            let tokens = tokenize(&u.text);
            let words: Vec<&str> = tokens.iter().map(String::as_str).collect();
            lexicon_matches(&words, lexicon).into_iter().map(i64::from).sum()
        })
        .collect()
}

pub const SENTIMENT_FEATURE_NAMES: [&str; 8] = [
    "sent_mean",
    "sent_median",
    "sent_min",
    "sent_max",
    "sent_std",
    "sent_pos_frac",
    "sent_neg_frac",
    "sent_sum",
];

/// Mean, median, min, max, population std, positive and negative
/// fractions and total of a sentiment series; all zeros when empty.
pub fn sentiment_features(series: &[i64]) -> [f64; 8] {
    if series.is_empty() {
        return [0.0; 8];
    }
    let values: Vec<f64> = series.iter().map(|&v| v as f64).collect();
    let n = values.len() as f64;
    let sum: i64 = series.iter().sum();
    [
        sum as f64 / n,
        median(&values),
        *series.iter().min().unwrap() as f64,
        *series.iter().max().unwrap() as f64,
        population_std(&values),
        series.iter().filter(|&&v| v > 0).count() as f64 / n,
        series.iter().filter(|&&v| v < 0).count() as f64 / n,
        sum as f64,
    ]
}

pub fn text_feature_names() -> Vec<String> {
    BASIC_FEATURE_NAMES
        .iter()
        .chain(SENTIMENT_FEATURE_NAMES.iter())
        .map(|s| s.to_string())
        .collect()
}

/// Four transcript statistics followed by the eight sentiment features.
pub fn extract_text_features(
    session_id: &str,
    transcript: &Transcript,
    config: &TextConfig,
    dep_lexicon: &Lexicon,
    sent_lexicon: &Lexicon,
) -> Result<FeatureVector> {
    let mut values = basic_text_features(transcript, config, dep_lexicon)?.to_vec();
    values.extend(sentiment_features(&sentiment_series(
        transcript,
        &config.participant_tag,
        sent_lexicon,
    )));
    FeatureVector::new(session_id, Modality::Text, text_feature_names(), values)
}
