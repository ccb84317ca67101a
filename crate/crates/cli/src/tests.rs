use std::path::Path;

use clap::Parser;

use super::{exit_code, run, Cli, Failures};
use crate::error::CliError;

fn parse(args: &[&str]) -> Result<Cli, clap::Error> {
    Cli::try_parse_from(std::iter::once("lpdim").chain(args.iter().copied()))
}

fn lpdim(args: &[&str]) -> Result<Failures, CliError> {
    run(parse(args).expect("valid arguments"))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn csv_rows(p: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(p).unwrap();
    r.records()
        .map(|r| r.unwrap().iter().map(str::to_owned).collect())
        .collect()
}

/// Writes `n` rows of `d` deterministic features plus a two-class label.
fn write_csv(path: &Path, n: usize, d: usize, one_class: bool) {
    let mut w = csv::Writer::from_path(path).unwrap();
    let mut header: Vec<String> = (0..d).map(|j| format!("f{j}")).collect();
    header.push("y".into());
    w.write_record(&header).unwrap();
    for i in 0..n {
        let mut row: Vec<String> = (0..d)
            .map(|j| {
                format!(
                    "{}",
                    ((i * 37 + j * 11) % 101) as f64 / 7.0 + (i % 2) as f64
                )
            })
            .collect();
        let label = if one_class || i % 2 == 0 { "p" } else { "q" };
        row.push(label.into());
        w.write_record(&row).unwrap();
    }
    w.flush().unwrap();
}

fn manifest(dir: &Path, sets: &[(&str, &str)]) -> std::path::PathBuf {
    let entries: Vec<serde_json::Value> = sets
        .iter()
        .map(|(name, file)| {
            serde_json::json!({
                "name": name, "csv_path": file, "label_column": "y", "positive_labels": ["p"]
            })
        })
        .collect();
    let p = dir.join("manifest.json");
    std::fs::write(&p, serde_json::to_string(&entries).unwrap()).unwrap();
    p
}

#[test]
fn invalid_arguments_exit_one() {
    assert!(parse(&["concentration", "--seed", "1", "--ps", "0,1"])
        .unwrap_err()
        .use_stderr());
    assert!(parse(&["table1"]).unwrap_err().use_stderr());
    assert!(!parse(&["--help"]).unwrap_err().use_stderr());
    let o = lpdim(&["table1", "--seed", "1", "--k-points", "2"]);
    assert_eq!(exit_code(&o), 1);
    assert!(o.unwrap_err().to_string().contains("at least 3 points"));
}

#[test]
fn gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let gen = |seed: &str, name: &str| {
        let out = dir.path().join(name);
        let o = lpdim(&[
            "gen",
            "--seed",
            seed,
            "--n",
            "20",
            "--dim",
            "4",
            "--out",
            s(&out),
        ]);
        assert_eq!(exit_code(&o), 0);
        std::fs::read(out).unwrap()
    };
    let (a, b, c) = (gen("3", "a.csv"), gen("3", "b.csv"), gen("4", "c.csv"));
    assert_eq!(a, b);
    assert_ne!(a, c);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 21);
    assert_eq!(text.lines().next().unwrap(), "x1,x2,x3,x4");
}

#[test]
fn concentration_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.csv");
    let o = lpdim(&[
        "concentration",
        "--n",
        "60",
        "--dims",
        "2,5,9",
        "--seed",
        "7",
        "--out",
        s(&out),
    ]);
    assert_eq!(exit_code(&o), 0);
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 24);
    assert_eq!(rows[7][1], "inf");

    let o = lpdim(&[
        "concentration",
        "--n",
        "30",
        "--scale",
        "paper",
        "--ps",
        "1,2",
        "--seed",
        "1",
        "--out",
        s(&out),
    ]);
    assert_eq!(exit_code(&o), 0);
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next().unwrap(), "dim,p,rc,cv");
    assert_eq!(text.lines().count(), 1 + 44 * 2);
}

#[test]
fn table1_shape_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&a, &b] {
        let o = lpdim(&["table1", "--seed", "42", "--reps", "20", "--out", s(p)]);
        assert_eq!(exit_code(&o), 0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let rows = csv_rows(&a);
    assert_eq!(rows.len(), 24);
    for r in rows.iter().filter(|r| r[0] == "1") {
        assert_eq!(r[3], "0.0");
    }
}

#[test]
fn dims_reports_partial_failure() {
    let dir = tempfile::tempdir().unwrap();
    write_csv(&dir.path().join("a.csv"), 80, 3, false);
    write_csv(&dir.path().join("b.csv"), 90, 5, false);
    write_csv(&dir.path().join("c.csv"), 70, 8, false);
    let m = manifest(
        dir.path(),
        &[
            ("a", "a.csv"),
            ("missing", "nope.csv"),
            ("b", "b.csv"),
            ("c", "c.csv"),
        ],
    );
    let out = dir.path().join("dims.csv");
    let o = lpdim(&["dims", "--manifest", s(&m), "--out", s(&out)]);
    assert_eq!(exit_code(&o), 2);
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 3);
    assert_eq!(
        (
            rows[0][0].as_str(),
            rows[0][1].as_str(),
            rows[0][2].as_str()
        ),
        ("a", "3", "80")
    );

    let analysis: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("dims.analysis.json")).unwrap())
            .unwrap();
    assert_eq!(analysis["preprocessing"], "empty");
    assert_eq!(analysis["centered"], true);
    assert_eq!(analysis["failures"][0]["dataset"], "missing");
    assert_eq!(analysis["slopes_on_n_attr"].as_array().unwrap().len(), 5);
    match analysis["correlation"].as_array() {
        Some(m) => assert!(m.len() == 6 && m.iter().all(|r| r.as_array().unwrap().len() == 6)),
        None => assert!(analysis["correlation_error"].is_string()),
    }
}

#[test]
fn knn_eval_is_resumable_and_compare_needs_full_grid() {
    let dir = tempfile::tempdir().unwrap();
    write_csv(&dir.path().join("a.csv"), 40, 3, false);
    write_csv(&dir.path().join("b.csv"), 50, 2, false);
    write_csv(&dir.path().join("one.csv"), 30, 2, true);
    let m = manifest(dir.path(), &[("a", "a.csv"), ("b", "b.csv")]);
    let out = dir.path().join("r.json");
    let o = lpdim(&["knn-eval", "--manifest", s(&m), "--out", s(&out)]);
    assert_eq!(exit_code(&o), 0, "{o:?}");
    let first = std::fs::read(&out).unwrap();
    let recs: Vec<serde_json::Value> = serde_json::from_slice(&first).unwrap();
    assert_eq!(recs.len(), 48);
    let mut keys: Vec<&str> = recs[0]
        .as_object()
        .unwrap()
        .keys()
        .map(String::as_str)
        .collect();
    keys.sort();
    assert_eq!(
        keys,
        [
            "accuracy",
            "dataset",
            "n",
            "n_pos",
            "p",
            "preprocessing",
            "sensitivity",
            "specificity",
            "tnnsc"
        ]
    );

    let o = lpdim(&["knn-eval", "--manifest", s(&m), "--out", s(&out)]);
    assert_eq!(exit_code(&o), 0);
    assert_eq!(std::fs::read(&out).unwrap(), first);

    let bad = manifest(dir.path(), &[("a", "a.csv"), ("one", "one.csv")]);
    let o = lpdim(&["knn-eval", "--manifest", s(&bad), "--out", s(&out)]);
    assert_eq!(exit_code(&o), 2);
    let kept: Vec<serde_json::Value> =
        serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(kept.len(), 48);

    let report = dir.path().join("rep.md");
    let o = lpdim(&["compare", "--input", s(&out), "--out", s(&report)]);
    assert_eq!(exit_code(&o), 0, "{o:?}");
    assert!(dir.path().join("rep.json").exists());

    let partial = dir.path().join("partial.json");
    let a_only: Vec<&serde_json::Value> = kept.iter().filter(|r| r["dataset"] == "a").collect();
    std::fs::write(&partial, serde_json::to_vec(&a_only).unwrap()).unwrap();
    let o = lpdim(&["compare", "--input", s(&partial), "--out", s(&report)]);
    assert_eq!(exit_code(&o), 1);
    assert!(o.unwrap_err().to_string().contains("incomplete"));
}
