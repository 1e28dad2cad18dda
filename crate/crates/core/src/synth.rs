//! Synthetic session trees for exercising the full pipeline without the
//! restricted interview corpus.
//!
//! Every session gets an integer latent severity `s` in [0, 24], recorded
//! as its PHQ-8 label. The informative modality observes `s + noise·z`
//! (z standard normal, drawn once per session); the other modalities
//! observe an independent uniform draw, so they carry no information.
//!
//! - audio: the F0 column sits at `100 + 4·observed` (plus frame noise);
//! - video: the lower lip drops by `0.8·observed` pixels;
//! - text: depression-vocabulary and negative-word density rise with
//!   `observed / 24`.
//!
//! Output layout under the target directory:
//!
//! ```text
//! labels.csv
//! lexicons/sentiment.txt
//! lexicons/depression.txt
//! sessions/<id>/{descriptors.csv, landmarks.csv, transcript.tsv}
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::datamodel::{
    DescriptorSeries, LandmarkFrame, LandmarkSeries, Modality, Point, SessionRecord, Split,
    Transcript, Utterance, LANDMARK_COUNT,
};
use crate::error::{Error, Result};
use crate::ingest::{covarep_descriptor_names, write_descriptor_table, write_labels, write_landmark_table, write_transcript};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_sessions: usize,
    pub seed: u64,
    pub informative: Modality,
    /// Noise per modality, indexed audio / video / text.
    pub noise_levels: [f64; 3],
    /// Leading COVAREP columns to emit (at least F0 and VUV).
    pub n_descriptors: usize,
    pub descriptor_frames: usize,
    pub landmark_frames: usize,
    /// Every fifth session from this remainder on goes to development.
    pub dev_per_five: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_sessions: 200,
            seed: 2017,
            informative: Modality::Audio,
            noise_levels: [1.0, 1.0, 1.0],
            n_descriptors: 12,
            descriptor_frames: 100,
            landmark_frames: 60,
            dev_per_five: 2,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_sessions == 0 {
            return Err(Error::Config("n_sessions must be at least 1".into()));
        }
        if self.noise_levels.iter().any(|n| !(*n >= 0.0 && n.is_finite())) {
            return Err(Error::Config("noise levels must be finite and non-negative".into()));
        }
        if !(2..=74).contains(&self.n_descriptors) {
            return Err(Error::Config("n_descriptors must be in 2..=74".into()));
        }
        if self.descriptor_frames == 0 || self.landmark_frames == 0 {
            return Err(Error::Config("frame counts must be positive".into()));
        }
        if self.dev_per_five > 5 {
            return Err(Error::Config("dev_per_five must be at most 5".into()));
        }
        Ok(())
    }

    pub fn noise(&self, modality: Modality) -> f64 {
        self.noise_levels[modality as usize]
    }
}

pub const SENTIMENT_WORDS: &[(&str, i32)] = &[
    ("good", 3),
    ("great", 3),
    ("happy", 3),
    ("love", 3),
    ("nice", 3),
    ("fun", 4),
    ("fine", 2),
    ("bad", -3),
    ("sad", -2),
    ("hate", -3),
    ("terrible", -3),
    ("awful", -3),
    ("lonely", -2),
    ("tired", -2),
    ("worried", -3),
    ("abandon", -2),
];

pub const DEPRESSION_WORDS: &[&str] = &[
    "sad", "hopeless", "worthless", "lonely", "empty", "tired", "exhausted", "anxious", "guilty",
    "miserable", "depressed", "crying", "numb", "isolated", "helpless", "sleepless", "insomnia",
    "fatigue", "despair", "gloomy", "withdrawn", "down",
];

const FILLER: &[&str] = &[
    "the", "i", "went", "to", "work", "and", "then", "we", "talked", "about", "my", "family", "it",
    "was", "a", "day", "some", "things", "like", "that", "you", "know", "um", "uh", "yeah", "so",
];

const POSITIVE: &[&str] = &["good", "great", "happy", "love", "nice", "fun", "fine"];
const NEGATIVE: &[&str] = &["bad", "hate", "terrible", "awful", "worried"];

const QUESTIONS: &[&str] = &[
    "how are you doing today",
    "where are you from originally",
    "what do you do to relax",
    "how have you been feeling lately",
    "tell me more about that",
    "when was the last time you felt really happy",
];

/// Ground truth kept alongside the written files.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSession {
    pub record: SessionRecord,
    pub latent: f64,
    /// Mean of the F0 column actually written.
    pub f0_mean: f64,
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub root: PathBuf,
    pub sessions: Vec<SynthSession>,
}

impl SynthOutput {
    pub fn sessions_dir(&self) -> PathBuf {
        self.root.join("sessions")
    }

    pub fn labels_path(&self) -> PathBuf {
        self.root.join("labels.csv")
    }

    pub fn sentiment_path(&self) -> PathBuf {
        self.root.join("lexicons").join("sentiment.txt")
    }

    pub fn depression_path(&self) -> PathBuf {
        self.root.join("lexicons").join("depression.txt")
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn round4(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

fn observed(rng: &mut ChaCha8Rng, config: &SynthConfig, modality: Modality, latent: f64) -> f64 {
    if modality == config.informative {
        latent + config.noise(modality) * normal(rng)
    } else {
        rng.random_range(0.0..=24.0)
    }
}

fn descriptors(rng: &mut ChaCha8Rng, config: &SynthConfig, severity: f64) -> DescriptorSeries {
    let names: Vec<String> = covarep_descriptor_names()
        .into_iter()
        .take(config.n_descriptors)
        .collect();
    let noise = config.noise(Modality::Audio);
    let baselines: Vec<f64> = (0..names.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let frames = (0..config.descriptor_frames)
        .map(|_| {
            names
                .iter()
                .enumerate()
                .map(|(j, name)| {
                    let v = match name.as_str() {
                        "F0" => 100.0 + 4.0 * severity + 3.0 * noise * normal(rng),
                        "VUV" => f64::from(rng.random_bool(0.7)),
                        _ => baselines[j] + 0.5 * normal(rng),
                    };
                    round4(v)
                })
                .collect()
        })
        .collect();
    DescriptorSeries::new(names, frames, 0.01).expect("generated frames are rectangular")
}

fn template_face() -> LandmarkFrame {
    let mut face = [Point::default(); LANDMARK_COUNT];
    for (i, p) in face.iter_mut().enumerate().take(17) {
        let t = std::f64::consts::PI * i as f64 / 16.0;
        *p = Point::new(100.0 - 70.0 * t.cos(), 110.0 + 60.0 * t.sin());
    }
    for i in 0..5 {
        face[17 + i] = Point::new(45.0 + 12.0 * i as f64, 60.0 - 4.0 * (2.0 - i as f64).abs().mul_add(-1.0, 2.0));
        face[22 + i] = Point::new(107.0 + 12.0 * i as f64, 60.0 - 4.0 * (2.0 - i as f64).abs().mul_add(-1.0, 2.0));
    }
    for i in 0..4 {
        face[27 + i] = Point::new(100.0, 75.0 + 10.0 * i as f64);
    }
    for i in 0..5 {
        face[31 + i] = Point::new(88.0 + 6.0 * i as f64, 112.0);
    }
    for (start, cx) in [(36, 70.0), (42, 130.0)] {
        for k in 0..6 {
            let t = std::f64::consts::PI * k as f64 / 3.0;
            face[start + k] = Point::new(cx - 10.0 * t.cos(), 78.0 - 4.0 * t.sin());
        }
    }
    for k in 0..12 {
        let t = 2.0 * std::f64::consts::PI * k as f64 / 12.0;
        face[48 + k] = Point::new(100.0 - 24.0 * t.cos(), 140.0 - 9.0 * t.sin());
    }
    for k in 0..8 {
        let t = 2.0 * std::f64::consts::PI * k as f64 / 8.0;
        face[60 + k] = Point::new(100.0 - 16.0 * t.cos(), 140.0 - 4.0 * t.sin());
    }
    face
}

fn landmarks(rng: &mut ChaCha8Rng, config: &SynthConfig, severity: f64) -> LandmarkSeries {
    let noise = config.noise(Modality::Video);
    let base = template_face();
    let (tx, ty) = (rng.random_range(0.0..200.0), rng.random_range(0.0..150.0));
    let offsets: Vec<Point> = (0..LANDMARK_COUNT)
        .map(|_| Point::new(noise * normal(rng), noise * normal(rng)))
        .collect();
    let drop = 0.8 * severity;
    let frames = (0..config.landmark_frames)
        .map(|_| {
            std::array::from_fn(|i| {
                let lower_lip = matches!(i, 55..=59 | 65..=67);
                let p = base[i];
                let y = p.y + if lower_lip { drop } else { 0.0 };
                Point::new(
                    round4(p.x + tx + offsets[i].x + 0.5 * noise * normal(rng)),
                    round4(y + ty + offsets[i].y + 0.5 * noise * normal(rng)),
                )
            })
        })
        .collect();
    let timestamps = (0..config.landmark_frames).map(|i| round4(i as f64 / 30.0)).collect();
    LandmarkSeries::new(frames, timestamps).expect("generated timestamps increase")
}

fn transcript(rng: &mut ChaCha8Rng, severity: f64) -> Transcript {
    let load = (severity / 24.0).clamp(0.0, 1.0);
    let p_dep = 0.02 + 0.3 * load;
    let mut t = round4(rng.random_range(0.0..5.0));
    let mut utterances = Vec::new();
    let exchanges = rng.random_range(15..=25);
    for _ in 0..exchanges {
        let question = QUESTIONS[rng.random_range(0..QUESTIONS.len())];
        let len = round4(rng.random_range(1.5..4.0));
        utterances.push(Utterance {
            start_time: t,
            stop_time: round4(t + len),
            speaker: "Ellie".into(),
            text: question.into(),
        });
        t = round4(t + len + rng.random_range(0.3..1.5));

        let n_words = rng.random_range(4..=12);
        let words: Vec<&str> = (0..n_words)
            .map(|_| {
                let u: f64 = rng.random_range(0.0..1.0);
                if u < p_dep {
                    DEPRESSION_WORDS[rng.random_range(0..DEPRESSION_WORDS.len())]
                } else if u < p_dep + 0.12 {
                    if rng.random_bool(load) {
                        NEGATIVE[rng.random_range(0..NEGATIVE.len())]
                    } else {
                        POSITIVE[rng.random_range(0..POSITIVE.len())]
                    }
                } else if u < p_dep + 0.14 {
                    "<laughter>"
                } else {
                    FILLER[rng.random_range(0..FILLER.len())]
                }
            })
            .collect();
        let len = round4(0.4 * n_words as f64 + rng.random_range(0.0..1.0));
        utterances.push(Utterance {
            start_time: t,
            stop_time: round4(t + len),
            speaker: "Participant".into(),
            text: words.join(" "),
        });
        t = round4(t + len + rng.random_range(0.3..1.5));
    }
    Transcript::new(utterances).expect("generated utterances are ordered")
}

fn session_id(index: usize, total: usize) -> String {
    let width = total.to_string().len().max(3);
    format!("s{:0width$}", index + 1)
}

/// Write a synthetic session tree under `root`.
pub fn synth_generate(config: &SynthConfig, root: &Path) -> Result<SynthOutput> {
    config.validate()?;
    let sessions_dir = root.join("sessions");
    let lexicon_dir = root.join("lexicons");
    fs::create_dir_all(&sessions_dir)?;
    fs::create_dir_all(&lexicon_dir)?;

    let mut sessions = Vec::with_capacity(config.n_sessions);
    for index in 0..config.n_sessions {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(index as u64);

        let latent = f64::from(rng.random_range(0u8..=24));
        let gender = u8::from(rng.random_bool(0.5));
        let split = if index % 5 >= 5 - config.dev_per_five {
            Split::Development
        } else {
            Split::Train
        };
        let id = session_id(index, config.n_sessions);

        let audio_obs = observed(&mut rng, config, Modality::Audio, latent);
        let video_obs = observed(&mut rng, config, Modality::Video, latent);
        let text_obs = observed(&mut rng, config, Modality::Text, latent);

        let desc = descriptors(&mut rng, config, audio_obs);
        let lm = landmarks(&mut rng, config, video_obs);
        let tr = transcript(&mut rng, text_obs);

        let dir = sessions_dir.join(&id);
        fs::create_dir_all(&dir)?;
        fs::write(dir.join("descriptors.csv"), write_descriptor_table(&desc))?;
        fs::write(dir.join("landmarks.csv"), write_landmark_table(&lm))?;
        fs::write(dir.join("transcript.tsv"), write_transcript(&tr))?;

        let f0 = desc.column(0);
        sessions.push(SynthSession {
            record: SessionRecord::new(id, gender, Some(latent as u8), split)?,
            latent,
            f0_mean: f0.iter().sum::<f64>() / f0.len() as f64,
        });
    }

    let records: Vec<SessionRecord> = sessions.iter().map(|s| s.record.clone()).collect();
    fs::write(root.join("labels.csv"), write_labels(&records))?;
    let sentiment: String = SENTIMENT_WORDS
        .iter()
        .map(|(w, v)| format!("{w}\t{v}\n"))
        .collect();
    fs::write(lexicon_dir.join("sentiment.txt"), sentiment)?;
    let depression: String = DEPRESSION_WORDS.iter().map(|w| format!("{w}\n")).collect();
    fs::write(lexicon_dir.join("depression.txt"), depression)?;

    Ok(SynthOutput {
        root: root.to_path_buf(),
        sessions,
    })
}
