use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const MODEL: &str = r#"{"g_u":2,"g_v":2,"ratings":[1,2,3],"p_u":[0.6,0.4],"p_v":[0.5,0.5],
"w":[[[0.8,0.15,0.05],[0.05,0.15,0.8]],[[0.05,0.15,0.8],[0.8,0.15,0.05]]]}"#;

fn fgcf(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fgcf"))
        .current_dir(dir)
        .env_remove("FGCF_OUT_DIR")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = fgcf(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

/// A workspace holding a model and a sampled dataset.
fn workspace() -> (tempfile::TempDir, PathBuf) {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_path_buf();
    std::fs::write(dir.join("model.json"), MODEL).unwrap();
    ok(
        &dir,
        &["sample", "--model", "model.json", "--users", "120", "--movies", "80", "--density", "8", "--seed", "3", "--out-dir", "s"],
    );
    (tmp, dir)
}

#[test]
fn missing_dataset_exits_with_data_code() {
    let tmp = tempfile::tempdir().unwrap();
    let out = fgcf(tmp.path(), &["train", "--data", "absent.csv", "--out-dir", "o"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn malformed_dataset_exits_with_data_code() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("d.csv"), "user,movie,rating\n0,1,x\n").unwrap();
    let out = fgcf(tmp.path(), &["train", "--data", "d.csv", "--out-dir", "o"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn bad_config_exits_with_config_code() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("c.toml"), "no_such_setting = 1\n").unwrap();
    let out = fgcf(tmp.path(), &["bound", "--config", "c.toml"]);
    assert_eq!(out.status.code(), Some(2));

    let out = fgcf(tmp.path(), &["bound", "--users", "10", "--movies", "10"]);
    assert_eq!(out.status.code(), Some(2), "missing --observed");

    let out = fgcf(tmp.path(), &["bound", "--users", "10", "--movies", "10", "--observed", "5", "--delta", "2"]);
    assert_eq!(out.status.code(), Some(2), "delta outside (0, 1)");
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(
        dir.join("c.toml"),
        "users = 100\nmovies = 100\nobserved = [1000]\ngroups = 3\nout_dir = \"from-config\"\n",
    )
    .unwrap();
    ok(dir, &["bound", "--config", "c.toml"]);
    let from_config = read(dir.join("from-config/bound.csv"));
    assert!(from_config.lines().nth(1).unwrap().starts_with("3,3,100,100,1000,"));

    ok(dir, &["bound", "--config", "c.toml", "--groups", "5", "--out-dir", "from-flags"]);
    let from_flags = read(dir.join("from-flags/bound.csv"));
    assert!(from_flags.lines().nth(1).unwrap().starts_with("5,5,100,100,1000,"));
}

#[test]
fn out_dir_defaults_to_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let target = tmp.path().join("env-out");
    let out = Command::new(env!("CARGO_BIN_EXE_fgcf"))
        .current_dir(tmp.path())
        .env("FGCF_OUT_DIR", &target)
        .args(["bound", "--users", "10", "--movies", "10", "--observed", "50"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(target.join("bound.csv").exists());
    assert!(target.join("manifest.json").exists());
}

#[test]
fn train_writes_model_posteriors_and_traces() {
    let (_tmp, dir) = workspace();
    ok(&dir, &["train", "--data", "s/dataset.csv", "--groups", "2", "--out-dir", "imp"]);
    let model: serde_json::Value = serde_json::from_str(&read(dir.join("imp/model.json"))).unwrap();
    for key in ["g_u", "g_v", "ratings", "p_u", "p_v", "w"] {
        assert!(model.get(key).is_some(), "model.json lacks {key}");
    }
    assert_eq!(model["w"].as_array().unwrap().len(), 2);
    assert_eq!(model["w"][0][0].as_array().unwrap().len(), 3);
    let trace = read(dir.join("imp/imp_trace.csv"));
    assert!(trace.starts_with("iteration,max_change\n1,"));
    let post = read(dir.join("imp/posteriors.csv"));
    assert!(post.starts_with("kind,index,group,probability\n"));
    assert_eq!(post.lines().count(), 1 + 2 * (120 + 80));

    ok(&dir, &["train", "--data", "s/dataset.csv", "--groups", "2", "--alg", "em", "--out-dir", "em"]);
    let nll: Vec<f64> = read(dir.join("em/em_trace.csv"))
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(nll.len() >= 2);
    assert!(nll.windows(2).all(|w| w[1] <= w[0] + 1e-9), "EM trace rises");
}

#[test]
fn predict_scores_rated_pairs() {
    let (_tmp, dir) = workspace();
    std::fs::write(dir.join("pairs.csv"), "user,movie,rating\n0,0,1\n5,7,3\n119,79,2\n").unwrap();
    ok(&dir, &["predict", "--data", "s/dataset.csv", "--groups", "2", "--pairs", "pairs.csv", "--out-dir", "p"]);
    let pred = read(dir.join("p/predictions.csv"));
    assert!(pred.starts_with("user,movie,estimator,prediction\n"));
    assert_eq!(pred.lines().count(), 4);
    for line in pred.lines().skip(1) {
        let v: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!((1.0..=3.0).contains(&v));
    }
    assert!(read(dir.join("p/metrics.csv")).starts_with("estimator,pairs,rmse\nr1,3,"));
}

#[test]
fn ingest_maps_arbitrary_ids() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("raw.csv"), "user,movie,rating\nalice,m9,4\nbob,m9,2\nalice,m3,5\n").unwrap();
    ok(dir, &["ingest", "--input", "raw.csv", "--out-dir", "o"]);
    assert_eq!(read(dir.join("o/dataset.csv")), "user,movie,rating\n0,0,4\n1,0,2\n0,1,5\n");
    assert_eq!(
        read(dir.join("o/id_map.csv")),
        "kind,original,index\nuser,alice,0\nuser,bob,1\nmovie,m9,0\nmovie,m3,1\n"
    );
}

#[test]
fn sweep_has_one_row_per_cell_and_algorithm() {
    let (_tmp, dir) = workspace();
    ok(
        &dir,
        &[
            "sweep", "--data", "s/dataset.csv", "--groups", "2", "--densities", "1,3,5", "--algs", "baseline,imp",
            "--seeds", "0,1", "--validation", "60", "--out-dir", "w",
        ],
    );
    let sweep = read(dir.join("w/sweep.csv"));
    let mut lines = sweep.lines();
    assert_eq!(lines.next(), Some("density,alg,estimator,seed,rmse,iters"));
    assert_eq!(lines.count(), 3 * 2 * 2);
    assert_eq!(read(dir.join("w/sweep_pivot.csv")).lines().count(), 1 + 3);
    for name in ["sweep.csv", "sweep_pivot.csv", "sweep_cells.csv", "manifest.json"] {
        assert!(!read(dir.join("w").join(name)).contains('\r'), "{name} has CR line endings");
    }
}

#[test]
fn replay_is_identical_across_thread_counts() {
    let (_tmp, dir) = workspace();
    ok(
        &dir,
        &[
            "sweep", "--data", "s/dataset.csv", "--groups", "2", "--densities", "2,6", "--seeds", "0,1,2",
            "--validation", "60", "--threads", "1", "--out-dir", "w",
        ],
    );
    let out = ok(&dir, &["replay", "--manifest", "w/manifest.json", "--threads", "4"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("byte-identical"));
    assert_eq!(read(dir.join("w/sweep.csv")), read(dir.join("w/replay/sweep.csv")));
}

#[test]
fn replay_detects_changed_inputs() {
    let (_tmp, dir) = workspace();
    ok(&dir, &["train", "--data", "s/dataset.csv", "--groups", "2", "--out-dir", "t"]);
    let data = dir.join("s/dataset.csv");
    let mut text = read(&data);
    text.push_str("0,0,2\n");
    std::fs::write(&data, text).unwrap();
    let out = fgcf(&dir, &["replay", "--manifest", "t/manifest.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn de_writes_metrics_and_tree_condition() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("model.json"), MODEL).unwrap();
    std::fs::write(dir.join("deg.json"), r#"{"users":[0,0,0,1],"movies":[0,0,0.5,0.5]}"#).unwrap();
    ok(
        dir,
        &[
            "de", "--model", "model.json", "--degrees", "deg.json", "--population", "3000", "--iters", "4",
            "--users", "100000", "--out-dir", "d",
        ],
    );
    let metrics = read(dir.join("d/de_metrics.csv"));
    assert!(metrics.starts_with("iteration,population,side,mean_true_belief,"));
    assert_eq!(metrics.lines().count(), 1 + 5 * 4);
    let last: f64 = metrics.lines().last().unwrap().split(',').nth(3).unwrap().parse().unwrap();
    assert!(last > 0.5);
    let tree = read(dir.join("d/tree_condition.csv"));
    assert!(tree.lines().nth(1).unwrap().contains(",true,"), "{tree}");
}
