//! `phq`: extract features, train per-modality forests, fuse predictions
//! and score them.
//!
//! Exit codes: 0 success, 1 partial success (some sessions skipped),
//! 2 fatal error.

mod artifacts;
mod config;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use log::{info, warn};
use phq_core::datamodel::{assemble_design_matrix, Dataset, FeatureVector};
use phq_core::eval::{format_metrics_table, write_metrics_csv, FeatureUsed, MetricsRow};
use phq_core::forest::{deserialize_model, fit_forest, serialize_model, Forest};
use phq_core::fusion::fuse;
use phq_core::ingest::load_labels;
use phq_core::pipeline::{discover_sessions, extract_session, Lexicons};
use phq_core::synth::synth_generate;
use phq_core::{Error, Modality, SessionRecord, Split};
use rayon::prelude::*;

use artifacts::{
    meta, parse_predictions, write_predictions, FeatureTable, ForestSettings, Manifest, ModelEntry,
    PredictionRow, MANIFEST_FILE,
};
use config::{parse_override, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "phq", version, about = "Multimodal PHQ-8 severity estimation")]
struct Cli {
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output file or directory, depending on the command.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Extra configuration entry; may be repeated.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Extract one modality's features from a directory of sessions.
    Extract {
        #[arg(long)]
        modality: Modality,
        /// Directory holding one sub-directory per session.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        sentiment_lexicon: Option<PathBuf>,
        #[arg(long)]
        depression_lexicon: Option<PathBuf>,
    },
    /// Train one forest per modality on the train split.
    Train {
        #[arg(long)]
        audio: PathBuf,
        #[arg(long)]
        video: PathBuf,
        #[arg(long)]
        text: PathBuf,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        include_gender: Option<bool>,
    },
    /// Predict every session and fuse the three modalities.
    Predict {
        /// Directory written by `train`.
        #[arg(long)]
        models: PathBuf,
        #[arg(long)]
        audio: PathBuf,
        #[arg(long)]
        video: PathBuf,
        #[arg(long)]
        text: PathBuf,
        /// Needed when the models were trained with the gender column.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        strategy: Option<String>,
    },
    /// Score a predictions file against labels.
    Evaluate {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Write a synthetic session tree.
    Synth {
        #[arg(long)]
        sessions: Option<usize>,
        #[arg(long)]
        informative: Option<Modality>,
        /// Noise levels as audio,video,text.
        #[arg(long)]
        noise: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Complete,
    Partial,
}

impl Cli {
    /// Flags translated into config entries, applied after the file.
    fn overrides(&self) -> Result<Vec<(String, String)>> {
        let mut out: Vec<(String, String)> = self.set.iter().map(|s| parse_override(s)).collect::<Result<_>>()?;
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k.to_string(), v));
            }
        };
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        put("seed", self.seed.map(|s| s.to_string()));
        put("jobs", self.jobs.map(|j| j.to_string()));
        put("out", path(&self.out));
        match &self.command {
            Command::Extract { sentiment_lexicon, depression_lexicon, .. } => {
                put("sentiment_lexicon", path(sentiment_lexicon));
                put("depression_lexicon", path(depression_lexicon));
            }
            Command::Train { labels, include_gender, .. } => {
                put("labels", path(labels));
                put("include_gender", include_gender.map(|b| b.to_string()));
            }
            Command::Predict { labels, strategy, .. } => {
                put("labels", path(labels));
                put("strategy", strategy.clone());
            }
            Command::Evaluate { labels, .. } => put("labels", path(labels)),
            Command::Synth { sessions, informative, noise } => {
                put("synth.sessions", sessions.map(|n| n.to_string()));
                put("synth.informative", informative.map(|m| m.to_string()));
                put("synth.noise", noise.clone());
            }
        }
        Ok(out)
    }
}

fn require<'a>(value: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    value
        .as_deref()
        .ok_or_else(|| anyhow!("{what} is required (flag or config key)"))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn labels(cfg: &RunConfig) -> Result<Vec<SessionRecord>> {
    let path = require(&cfg.labels, "labels")?;
    load_labels(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn extract(cfg: &RunConfig, modality: Modality, input: &Path) -> Result<Status> {
    let out = require(&cfg.out, "out")?;
    let sessions = discover_sessions(input).with_context(|| format!("reading {}", input.display()))?;
    if sessions.is_empty() {
        bail!("no sessions found under {}", input.display());
    }
    let lexicons = match modality {
        Modality::Text => Some(Lexicons::load(
            require(&cfg.sentiment_lexicon, "sentiment_lexicon")?,
            require(&cfg.depression_lexicon, "depression_lexicon")?,
        )?),
        _ => None,
    };
    let results: Vec<(String, phq_core::Result<FeatureVector>)> = sessions
        .par_iter()
        .map(|(id, dir)| (id.clone(), extract_session(id, dir, modality, &cfg.extraction, lexicons.as_ref())))
        .collect();

    let mut table = FeatureTable { names: Vec::new(), rows: BTreeMap::new() };
    let mut failed = 0;
    for (id, result) in results {
        match result {
            Ok(fv) if table.rows.is_empty() || fv.names() == table.names => {
                table.names = fv.names().to_vec();
                table.rows.insert(id, fv.values().to_vec());
            }
            Ok(_) => {
                warn!("session {id}: feature names differ from earlier sessions; skipped");
                failed += 1;
            }
            Err(e) => {
                warn!("session {id}: {e}; skipped");
                failed += 1;
            }
        }
    }
    if table.rows.is_empty() {
        bail!("every session failed {modality} extraction");
    }
    write(out, table.to_csv(&meta(&cfg.hash(), cfg.seed)))?;
    println!(
        "{modality}: {} sessions x {} features -> {}{}",
        table.rows.len(),
        table.names.len(),
        out.display(),
        if failed > 0 { format!(" ({failed} skipped)") } else { String::new() }
    );
    Ok(if failed > 0 { Status::Partial } else { Status::Complete })
}

fn load_tables(audio: &Path, video: &Path, text: &Path) -> Result<[FeatureTable; 3]> {
    let load = |p: &Path| FeatureTable::parse(&read(p)?).with_context(|| format!("parsing {}", p.display()));
    Ok([load(audio)?, load(video)?, load(text)?])
}

fn model_file(modality: Modality) -> String {
    format!("{modality}.model")
}

fn train(cfg: &RunConfig, tables: &[FeatureTable; 3]) -> Result<Status> {
    let out = require(&cfg.out, "out")?;
    let records: BTreeMap<String, SessionRecord> =
        labels(cfg)?.into_iter().map(|r| (r.session_id().to_string(), r)).collect();
    for table in tables {
        if let Some(id) = table.rows.keys().find(|id| !records.contains_key(*id)) {
            return Err(Error::MissingLabel(id.clone()).into());
        }
    }
    let featured: Vec<SessionRecord> = records
        .values()
        .filter(|r| r.split() == Split::Train && tables.iter().any(|t| t.rows.contains_key(r.session_id())))
        .cloned()
        .collect();
    if featured.is_empty() {
        return Err(Error::MissingSplit("train".into()).into());
    }
    let mut dataset = Dataset::new(featured.clone())?;
    for (m, table) in Modality::ALL.into_iter().zip(tables) {
        for r in &featured {
            if let Some(values) = table.rows.get(r.session_id()) {
                dataset.insert_features(FeatureVector::new(r.session_id(), m, table.names.clone(), values.clone())?)?;
            }
        }
    }

    let fitted: Vec<(Modality, usize, Forest)> = Modality::ALL
        .par_iter()
        .map(|&m| {
            let design = assemble_design_matrix(&dataset, m, cfg.include_gender)?;
            let forest = fit_forest(&design.rows, &design.targets, &cfg.forest)?;
            Ok((m, design.n_cols(), forest))
        })
        .collect::<phq_core::Result<_>>()?;

    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut models = BTreeMap::new();
    for ((m, width, forest), table) in fitted.iter().zip(tables) {
        write(&out.join(model_file(*m)), serialize_model(forest))?;
        models.insert(
            m.to_string(),
            ModelEntry { file: model_file(*m), width: *width, features: table.names.clone() },
        );
    }
    let manifest = Manifest {
        tool: artifacts::TOOL.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        include_gender: cfg.include_gender,
        train_sessions: featured.len(),
        forest: ForestSettings::from(&cfg.forest),
        models,
    };
    write(&out.join(MANIFEST_FILE), manifest.to_json())?;
    println!("trained 3 models on {} sessions -> {}", featured.len(), out.display());
    Ok(Status::Complete)
}

fn check_columns(modality: Modality, entry: &ModelEntry, table: &FeatureTable, gender: bool) -> Result<()> {
    let width = table.names.len() + usize::from(gender);
    if width != entry.width {
        return Err(anyhow!(Error::DimensionMismatch { expected: entry.width, found: width })
            .context(format!("{modality} features do not fit the {modality} model")));
    }
    if table.names != entry.features {
        bail!("{modality} feature names differ from those the model was trained on");
    }
    Ok(())
}

fn predict(cfg: &RunConfig, models_dir: &Path, tables: &[FeatureTable; 3]) -> Result<Status> {
    let out = require(&cfg.out, "out")?;
    let manifest = Manifest::parse(&read(&models_dir.join(MANIFEST_FILE))?)?;
    let gender = manifest.include_gender;
    let mut forests = Vec::with_capacity(3);
    for (m, table) in Modality::ALL.into_iter().zip(tables) {
        let entry = manifest.entry(m);
        check_columns(m, entry, table, gender)?;
        let bytes = fs::read(models_dir.join(&entry.file))
            .with_context(|| format!("reading {} model", m))?;
        let forest = deserialize_model(&bytes).with_context(|| format!("loading {m} model"))?;
        if forest.n_features() != entry.width {
            bail!("{m} model expects {} inputs but the manifest says {}", forest.n_features(), entry.width);
        }
        forests.push(forest);
    }
    let genders: Option<BTreeMap<String, u8>> = if gender {
        Some(labels(cfg)?.iter().map(|r| (r.session_id().to_string(), r.gender())).collect())
    } else {
        None
    };

    let ids: std::collections::BTreeSet<&String> = tables.iter().flat_map(|t| t.rows.keys()).collect();
    let mut rows = Vec::new();
    let mut skipped = 0;
    for id in ids {
        let Some(inputs) = tables.iter().map(|t| t.rows.get(id)).collect::<Option<Vec<_>>>() else {
            warn!("session {id}: missing from at least one feature file; skipped");
            skipped += 1;
            continue;
        };
        let g = match &genders {
            Some(map) => match map.get(id) {
                Some(&g) => Some(f64::from(g)),
                None => {
                    warn!("session {id}: no gender in labels; skipped");
                    skipped += 1;
                    continue;
                }
            },
            None => None,
        };
        let per_modality = Modality::ALL
            .into_iter()
            .zip(&forests)
            .zip(inputs)
            .map(|((m, forest), values)| {
                let mut x = values.clone();
                x.extend(g);
                forest.predict(&x, m)
            })
            .collect::<phq_core::Result<Vec<_>>>()?;
        let fused = fuse(&per_modality, cfg.strategy)?;
        rows.push(PredictionRow::new(id, &fused, gender)?);
    }
    if rows.is_empty() {
        bail!("no session could be predicted");
    }
    write(out, write_predictions(&rows, &meta(&cfg.hash(), cfg.seed)))?;
    println!("predicted {} sessions ({}) -> {}", rows.len(), cfg.strategy, out.display());
    Ok(if skipped > 0 { Status::Partial } else { Status::Complete })
}

fn evaluate(cfg: &RunConfig, predictions: &Path) -> Result<Status> {
    let out = require(&cfg.out, "out")?;
    let preds = parse_predictions(&read(predictions)?)
        .with_context(|| format!("parsing {}", predictions.display()))?;
    if preds.is_empty() {
        bail!("{} holds no predictions", predictions.display());
    }
    let gender = preds[0].include_gender;
    if preds.iter().any(|p| p.include_gender != gender) {
        bail!("predictions mix gender_flag values");
    }
    let records: BTreeMap<String, SessionRecord> =
        labels(cfg)?.into_iter().map(|r| (r.session_id().to_string(), r)).collect();

    let mut unknown = 0;
    let mut by_split: BTreeMap<Split, Vec<(&PredictionRow, f64)>> = BTreeMap::new();
    for p in &preds {
        match records.get(&p.session_id) {
            None => {
                warn!("session {}: not in labels; skipped", p.session_id);
                unknown += 1;
            }
            Some(r) => match r.phq8() {
                Some(label) => by_split.entry(r.split()).or_default().push((p, f64::from(label))),
                None => info!("session {}: unlabelled; not scored", p.session_id),
            },
        }
    }
    if by_split.is_empty() {
        bail!("no prediction has a label");
    }

    let mut rows = Vec::new();
    for (split, items) in &by_split {
        let truth: Vec<f64> = items.iter().map(|(_, t)| *t).collect();
        for fu in FeatureUsed::TABLE_ORDER {
            let pred: Vec<f64> = items
                .iter()
                .map(|(p, _)| match fu {
                    FeatureUsed::Single(m) => phq_core::clamp_phq8(p.prediction(m).mean),
                    FeatureUsed::Fusion => p.fused,
                })
                .collect();
            rows.push(MetricsRow::score(fu, *split, &pred, &truth, gender)?);
        }
    }
    write(out, write_metrics_csv(&rows, &meta(&cfg.hash(), cfg.seed)))?;
    let table = format_metrics_table(&rows);
    write(&out.with_extension("txt"), &table)?;
    print!("{table}");
    Ok(if unknown > 0 { Status::Partial } else { Status::Complete })
}

fn synth(cfg: &RunConfig) -> Result<Status> {
    let out = require(&cfg.out, "out")?;
    let result = synth_generate(&cfg.synth, out)?;
    println!(
        "wrote {} synthetic sessions ({} informative) -> {}",
        result.sessions.len(),
        cfg.synth.informative,
        out.display()
    );
    Ok(Status::Complete)
}

fn run(cli: &Cli) -> Result<Status> {
    let cfg = RunConfig::load(cli.config.as_deref(), &cli.overrides()?)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.jobs {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().context("starting worker pool")?;
    info!("config hash {}", cfg.hash());
    pool.install(|| match &cli.command {
        Command::Extract { modality, input, .. } => extract(&cfg, *modality, input),
        Command::Train { audio, video, text, .. } => train(&cfg, &load_tables(audio, video, text)?),
        Command::Predict { models, audio, video, text, .. } => {
            predict(&cfg, models, &load_tables(audio, video, text)?)
        }
        Command::Evaluate { predictions, .. } => evaluate(&cfg, predictions),
        Command::Synth { .. } => synth(&cfg),
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Status::Complete) => ExitCode::SUCCESS,
        Ok(Status::Partial) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_become_overrides() {
        let cli = Cli::try_parse_from([
            "phq", "--seed", "4", "--set", "forest.n_trees=3", "train", "--audio", "a", "--video", "v",
            "--text", "t", "--include-gender", "true",
        ])
        .unwrap();
        let cfg = RunConfig::from_entries(&cli.overrides().unwrap()).unwrap();
        assert_eq!((cfg.seed, cfg.forest.n_trees, cfg.include_gender), (4, 3, true));
    }
}
