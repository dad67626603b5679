use std::path::Path;

use super::RunConfig;
use crate::SercError;

fn write_cfg(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("run.cfg");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn config_file_parses_sections_comments_and_blanks() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_cfg(
        dir.path(),
        "# comment\n\ntask.kind = CAUSAL3\ntrain.max_epochs = 7\npaths.out_dir=out\n",
    );
    let cfg = RunConfig::load(Some(&path), &[]).unwrap();
    assert_eq!(cfg.get("task.kind"), Some("CAUSAL3"));
    assert_eq!(cfg.get_parse("train.max_epochs", 1usize).unwrap(), 7);
    assert_eq!(cfg.get("paths.out_dir"), Some("out"));
    assert_eq!(cfg.get("missing.key"), None);
}

#[test]
fn set_overrides_beat_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_cfg(dir.path(), "train.seed = 1\n");
    let cfg = RunConfig::load(Some(&path), &["train.seed=9".into()]).unwrap();
    assert_eq!(cfg.get_parse("train.seed", 0u64).unwrap(), 9);
}

#[test]
fn malformed_lines_name_their_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_cfg(dir.path(), "task.kind = CAUSAL3\nnot a key value\n");
    let err = RunConfig::load(Some(&path), &[]).unwrap_err();
    match err {
        SercError::Parse { line, .. } => assert_eq!(line, 2),
        other => panic!("unexpected error {other}"),
    }
}

#[test]
fn keys_without_a_section_are_rejected() {
    let err = RunConfig::load(None, &["seed=3".into()]).unwrap_err();
    assert!(matches!(err, SercError::Parse { .. }), "{err}");
}

#[test]
fn unparsable_values_are_config_errors() {
    let cfg = RunConfig::load(None, &["train.seed=banana".into()]).unwrap();
    let err = cfg.get_parse("train.seed", 0u64).unwrap_err();
    assert!(matches!(err, SercError::Config(_)), "{err}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn missing_required_path_is_a_config_error() {
    let cfg = RunConfig::load(None, &[]).unwrap();
    assert!(cfg.path("paths.corpus").is_err());
}

#[test]
fn absolute_paths_pass_through_resolution() {
    let cfg = RunConfig::load(None, &[]).unwrap();
    let p = Path::new("/tmp/x.conllu");
    assert_eq!(cfg.resolve(p), p);
}
