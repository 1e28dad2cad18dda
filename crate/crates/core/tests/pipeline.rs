use std::fs;

use phq_core::ingest::load_labels;
use phq_core::pipeline::{build_dataset, discover_sessions, extract_session, ExtractionConfig, Lexicons, SessionLayout};
use phq_core::synth::{synth_generate, SynthConfig};
use phq_core::{Error, Modality};

fn small(dir: &std::path::Path) -> phq_core::synth::SynthOutput {
    let config = SynthConfig { n_sessions: 6, seed: 3, ..SynthConfig::default() };
    synth_generate(&config, dir).unwrap()
}

#[test]
fn synthetic_tree_loads_into_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let out = small(dir.path());
    let sessions = discover_sessions(&out.sessions_dir()).unwrap();
    assert_eq!(sessions.len(), 6);
    assert!(sessions.windows(2).all(|w| w[0].0 < w[1].0));

    let records = load_labels(&fs::read_to_string(out.labels_path()).unwrap()).unwrap();
    let lex = Lexicons::load(&out.sentiment_path(), &out.depression_path()).unwrap();
    let ds = build_dataset(&out.sessions_dir(), records, &ExtractionConfig::default(), &lex).unwrap();
    assert_eq!(ds.len(), 6);
    for r in ds.records() {
        assert_eq!(ds.features(r.session_id(), Modality::Audio).unwrap().len(), 12 * 42);
        assert_eq!(ds.features(r.session_id(), Modality::Video).unwrap().len(), 133);
        assert_eq!(ds.features(r.session_id(), Modality::Text).unwrap().len(), 12);
    }
}

#[test]
fn layout_patterns_select_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = small(dir.path());
    let (id, session) = discover_sessions(&out.sessions_dir()).unwrap().remove(0);
    fs::rename(session.join("descriptors.csv"), session.join(format!("{id}_COVAREP.csv"))).unwrap();

    let default = ExtractionConfig::default();
    assert!(matches!(extract_session(&id, &session, Modality::Audio, &default, None), Err(Error::Io(_))));

    let custom = ExtractionConfig {
        layout: SessionLayout { descriptors: "*_COVAREP.csv".into(), ..SessionLayout::default() },
        ..ExtractionConfig::default()
    };
    let fv = extract_session(&id, &session, Modality::Audio, &custom, None).unwrap();
    assert_eq!(fv.session_id(), id);
}

#[test]
fn text_without_lexicons_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = small(dir.path());
    let (id, session) = discover_sessions(&out.sessions_dir()).unwrap().remove(0);
    let err = extract_session(&id, &session, Modality::Text, &ExtractionConfig::default(), None).unwrap_err();
    assert!(matches!(err, Error::Config(_)));
}

#[test]
fn corrupt_session_names_the_culprit() {
    let dir = tempfile::tempdir().unwrap();
    let out = small(dir.path());
    let records = load_labels(&fs::read_to_string(out.labels_path()).unwrap()).unwrap();
    let bad = records[2].session_id().to_string();
    fs::write(out.sessions_dir().join(&bad).join("landmarks.csv"), "frame,timestamp\n1,0.0,5\n").unwrap();
    let lex = Lexicons::load(&out.sentiment_path(), &out.depression_path()).unwrap();
    let err = build_dataset(&out.sessions_dir(), records, &ExtractionConfig::default(), &lex).unwrap_err();
    assert!(err.to_string().contains(&bad), "{err}");
}
