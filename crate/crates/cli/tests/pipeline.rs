mod common;

use std::process::Command;

use atlas_cli::config::{PipelineConfig, RelevanceParams};
use atlas_cli::pipeline::{run_pipeline, JobState, JobStatus, Manifest};
use atlas_cli::CliError;
use common::{data_dir, default_config, dir_hashes};

const ARTIFACTS: [&str; 8] = [
    "caption_labels.json",
    "corpus.jsonl",
    "embeddings.json",
    "lda_model.json",
    "map_ccp.json",
    "map_lda.json",
    "markers.csv",
    "vocabulary.json",
];

#[test]
fn default_run_lists_eight_artifacts_and_reruns_skip_everything() {
    let dir = tempfile::tempdir().unwrap();
    let config = default_config(dir.path());
    let first = run_pipeline(&config).unwrap();
    assert_eq!(first.artifacts.keys().map(String::as_str).collect::<Vec<_>>(), ARTIFACTS);
    assert!(first.stages.iter().all(|s| s.state == JobState::Done && !s.skipped));
    for (name, hash) in &first.artifacts {
        assert_eq!(&atlas_cli::file_hash(&dir.path().join(name)).unwrap(), hash, "{name}");
    }

    let second = run_pipeline(&config).unwrap();
    assert!(second.executed().is_empty(), "{:?}", second.executed());
    assert_eq!(first.artifacts, second.artifacts);
}

#[test]
fn separate_runs_produce_identical_hashes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ma = run_pipeline(&default_config(a.path())).unwrap();
    let mb = run_pipeline(&default_config(b.path())).unwrap();
    assert_eq!(ma.artifacts, mb.artifacts);
    assert_eq!(ma.topic_names, mb.topic_names);
}

#[test]
fn editing_rules_reruns_only_labels_and_caption_map() {
    let dir = tempfile::tempdir().unwrap();
    let rules = dir.path().join("rules.json");
    std::fs::copy(data_dir().join("rules.json"), &rules).unwrap();
    let mut config = default_config(&dir.path().join("out"));
    config.paths.rules = Some(rules.clone());
    let before = run_pipeline(&config).unwrap();

    let mut table: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&rules).unwrap()).unwrap();
    table.as_array_mut().unwrap().push(serde_json::json!({ "label": "Profile", "priority": 1000, "patterns": ["profile"] }));
    std::fs::write(&rules, serde_json::to_string_pretty(&table).unwrap()).unwrap();

    let after = run_pipeline(&config).unwrap();
    assert_eq!(after.executed(), ["labels", "map_ccp"]);
    for name in ["caption_labels.json", "map_ccp.json"] {
        assert_ne!(before.artifacts[name], after.artifacts[name], "{name}");
    }
    for name in ["corpus.jsonl", "embeddings.json", "lda_model.json", "map_lda.json", "markers.csv"] {
        assert_eq!(before.artifacts[name], after.artifacts[name], "{name}");
    }
}

#[test]
fn changing_topic_names_reruns_only_the_topic_map() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = default_config(dir.path());
    run_pipeline(&config).unwrap();
    config.topic_names.insert("@bioactive".into(), "bioglass".into());
    let m = run_pipeline(&config).unwrap();
    assert_eq!(m.executed(), ["map_lda"]);
    assert!(m.topic_names.values().any(|n| n == "bioglass"));
}

#[test]
fn deleted_artifact_is_rebuilt() {
    let dir = tempfile::tempdir().unwrap();
    let config = default_config(dir.path());
    let first = run_pipeline(&config).unwrap();
    std::fs::remove_file(dir.path().join("markers.csv")).unwrap();
    let second = run_pipeline(&config).unwrap();
    assert_eq!(second.executed(), ["chem"]);
    assert_eq!(first.artifacts, second.artifacts);
}

#[test]
fn missing_stopword_file_fails_validation_before_any_stage() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let mut config = default_config(&out);
    config.paths.stopwords = Some(dir.path().join("nope.txt"));
    let err = run_pipeline(&config).unwrap_err();
    assert!(matches!(err, CliError::Validation(ref m) if m.contains("stopwords")), "{err}");
    assert_eq!(err.exit_code(), 2);
    assert!(!out.exists());
}

#[test]
fn missing_seed_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let mut raw: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(data_dir().join("atlas.json")).unwrap()).unwrap();
    raw["lda"].as_object_mut().unwrap().remove("seed");
    raw["paths"]["corpus"] = serde_json::json!([data_dir().join("mini_corpus.jsonl")]);
    raw["paths"]["rules"] = serde_json::json!(data_dir().join("rules.json"));
    let path = dir.path().join("atlas.json");
    std::fs::write(&path, raw.to_string()).unwrap();
    let err = PipelineConfig::load(&path).unwrap_err();
    assert!(err.to_string().contains("seed"), "{err}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn stage_failure_names_the_stage_and_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = default_config(dir.path());
    config.tsne.perplexity = 5000.0;
    let err = run_pipeline(&config).unwrap_err();
    assert!(matches!(err, CliError::Stage { ref stage, .. } if stage == "embed"), "{err}");
    assert_eq!(err.exit_code(), 3);
    let m = Manifest::load(dir.path()).unwrap();
    assert_eq!(m.stage("embed").unwrap().state, JobState::Failed);
    assert_eq!(m.stage("lda").unwrap().state, JobState::Done);
    assert_eq!(m.stage("chem").unwrap().state, JobState::Pending);
}

#[test]
fn relevance_stage_tags_and_filters() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = default_config(dir.path());
    config.relevance = Some(RelevanceParams {
        labeled: data_dir().join("labeled.jsonl"),
        l2_lambda: 1e-4,
        max_iters: 500,
        train_ratio: 0.8,
        filter: true,
        seed: 3,
    });
    let m = run_pipeline(&config).unwrap();
    assert_eq!(m.artifacts.len(), 10);
    assert_eq!(m.corpus, "corpus_relevant.jsonl");
    let kept = atlas_core::corpus::load_corpus(dir.path().join("corpus_relevant.jsonl")).unwrap();
    assert!(kept.documents().iter().all(|d| d.relevant == Some(true)));
    // Every mini-corpus record is on topic.
    assert_eq!(kept.len(), 200);
    let model: atlas_cli::stages::RelevanceModel = atlas_cli::stages::read_json(&dir.path().join("relevance_model.json")).unwrap();
    assert!(model.metrics.accuracy >= 0.9, "{:?}", model.metrics);
}

#[test]
fn job_status_terminal_states_do_not_change() {
    let mut s = JobStatus::new("lda");
    assert!(s.advance(JobState::Done).is_err());
    s.advance(JobState::Running).unwrap();
    s.advance(JobState::Done).unwrap();
    assert!(s.is_terminal());
    for to in [JobState::Pending, JobState::Running, JobState::Done, JobState::Failed] {
        assert!(s.advance(to).is_err());
    }
    assert_eq!(s.state, JobState::Done);
}

#[test]
fn pipeline_leaves_no_stray_files() {
    let dir = tempfile::tempdir().unwrap();
    run_pipeline(&default_config(dir.path())).unwrap();
    let mut names: Vec<String> = dir_hashes(dir.path()).into_keys().collect();
    names.retain(|n| n != "manifest.json");
    assert_eq!(names, ARTIFACTS);
}

fn atlas() -> Command {
    Command::new(env!("CARGO_BIN_EXE_atlas"))
}

#[test]
fn binary_exit_codes_and_query_output() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("atlas.json");
    let mut raw: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(data_dir().join("atlas.json")).unwrap()).unwrap();
    raw["paths"]["corpus"] = serde_json::json!([data_dir().join("mini_corpus.jsonl")]);
    raw["paths"]["rules"] = serde_json::json!(data_dir().join("rules.json"));
    raw["paths"]["output_dir"] = serde_json::json!("out");
    std::fs::write(&config_path, raw.to_string()).unwrap();

    let run = atlas().args(["run", "--config"]).arg(&config_path).output().unwrap();
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let out = dir.path().join("out");

    let q = atlas().args(["query", "topic:bioactive AND element:F AND element:Cl", "--dir"]).arg(&out).output().unwrap();
    assert_eq!(q.status.code(), Some(0));
    let ids: Vec<String> = String::from_utf8(q.stdout).unwrap().lines().map(String::from).collect();
    let atlas_dir = atlas_cli::artifacts::Atlas::load(&out).unwrap();
    assert_eq!(ids, atlas_dir.query("topic:bioactive AND element:F AND element:Cl").unwrap().doc_ids);
    assert!(!ids.is_empty());

    let bad = atlas().args(["query", "topic:bioactive AND (", "--dir"]).arg(&out).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));

    raw["tsne"]["perplexity"] = serde_json::json!(5000);
    std::fs::write(&config_path, raw.to_string()).unwrap();
    let failed = atlas().args(["run", "--config"]).arg(&config_path).output().unwrap();
    assert_eq!(failed.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&failed.stderr).contains("embed"));

    let missing = atlas().args(["run", "--config"]).arg(dir.path().join("none.json")).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn single_step_commands_chain() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    let ok = |c: &mut Command| {
        let o = c.output().unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        o
    };
    ok(atlas().arg("ingest").arg(data_dir().join("mini_corpus.jsonl")).arg(data_dir().join("sample_articles.xml")).arg("-o").arg(p("c.jsonl")));
    assert_eq!(atlas_core::corpus::load_corpus(p("c.jsonl")).unwrap().len(), 205);
    ok(atlas().args(["classify", "train", "--seed", "1", "--labeled"]).arg(data_dir().join("labeled.jsonl")).arg("-o").arg(p("rel.json")));
    ok(atlas().args(["classify", "apply", "--filter", "--model"]).arg(p("rel.json")).arg("--corpus").arg(p("c.jsonl")).arg("-o").arg(p("r.jsonl")));
    ok(atlas().args(["lda", "--topics", "4", "--passes", "50", "--seed", "2", "--corpus"]).arg(p("r.jsonl")).arg("-o").arg(p("lda.json")));
    ok(atlas().args(["embed", "--target", "captions", "--iters", "300", "--seed", "3", "--corpus"]).arg(p("r.jsonl")).arg("-o").arg(p("ce.json")).arg("--csv").arg(p("ce.csv")));
    ok(atlas().args(["embed", "--target", "abstracts", "--iters", "300", "--seed", "3", "--corpus"]).arg(p("r.jsonl")).arg("-o").arg(p("ae.json")));
    ok(atlas().args(["chem", "extract", "--corpus"]).arg(p("r.jsonl")).arg("-o").arg(p("m.csv")));
    ok(atlas().args(["captions", "label", "--corpus"]).arg(p("r.jsonl")).arg("--rules").arg(data_dir().join("rules.json")).arg("-o").arg(p("l.json")));
    ok(atlas().args(["map", "build", "--type", "ccp", "--embedding"]).arg(p("ce.json")).arg("--labels").arg(p("l.json")).arg("-o").arg(p("ccp.json")));
    ok(atlas()
        .args(["map", "build", "--type", "lda", "--topic-name", "@bioactive=bioactive", "--embedding"])
        .arg(p("ae.json"))
        .arg("--model")
        .arg(p("lda.json"))
        .arg("-o")
        .arg(p("lda_map.json")));
    let map = atlas_core::atlas::import_map(p("lda_map.json")).unwrap();
    assert!(map.labels.iter().any(|l| l.text == "bioactive"));
    let csv = std::fs::read_to_string(p("ce.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + atlas_core::atlas::import_map(p("ccp.json")).unwrap().points.len());

    let no_seed = atlas().args(["lda", "--corpus"]).arg(p("r.jsonl")).arg("-o").arg(p("x.json")).output().unwrap();
    assert_eq!(no_seed.status.code(), Some(2));
}
