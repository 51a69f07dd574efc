use std::fs;
use std::path::PathBuf;

use entropy_dem_cli::{run, EXIT_INPUT, EXIT_MODEL_IO, EXIT_OK, EXIT_UNFITTABLE, EXIT_USAGE};
use tempfile::TempDir;

const SCHEMA: &str = r#"{"columns": [
    {"name": "member_id", "role": "ignore", "kind": "numeric"},
    {"name": "loan_amnt", "role": "feature", "kind": "numeric"},
    {"name": "grade", "role": "feature", "kind": "categorical"},
    {"name": "term", "role": "feature", "kind": "categorical"},
    {"name": "loan_status", "role": "label", "kind": "categorical"}
]}"#;

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn cli(args: &[&str]) -> Outcome {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(
        std::iter::once("entropy-dem").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    Outcome {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        let ws = Self {
            dir: tempfile::tempdir().unwrap(),
        };
        ws.write("schema.json", SCHEMA);
        ws
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn p(&self, name: &str) -> String {
        self.path(name).to_str().unwrap().to_string()
    }

    fn write(&self, name: &str, contents: &str) -> PathBuf {
        let path = self.path(name);
        fs::write(&path, contents).unwrap();
        path
    }

    fn read(&self, name: &str) -> String {
        fs::read_to_string(self.path(name)).unwrap()
    }

    /// Rows split cleanly by grade and loan size.
    fn separable_csv(&self, name: &str, rows: usize) -> PathBuf {
        let mut text = String::from("member_id,loan_amnt,grade,term,loan_status\n");
        for i in 0..rows {
            let good = i % 2 == 0;
            let (amount, grade, term, label) = if good {
                (500 + (i % 7) * 100, ["A", "B"][(i / 2) % 2], "36", "1")
            } else {
                (9000 + (i % 5) * 200, ["F", "G"][(i / 2) % 2], "60", "0")
            };
            text.push_str(&format!("{i},{amount},{grade},{term},{label}\n"));
        }
        self.write(name, &text)
    }

    fn fit(&self) -> Outcome {
        self.separable_csv("train.csv", 100);
        cli(&[
            "--schema",
            &self.p("schema.json"),
            "fit",
            &self.p("train.csv"),
            "--out",
            &self.p("model.json"),
        ])
    }
}

#[test]
fn fit_writes_model_and_reports_pools() {
    let ws = Workspace::new();
    let o = ws.fit();
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    assert!(ws.path("model.json").is_file());
    assert!(
        o.stdout.contains("positive pool (\"1\"): 50 rows"),
        "{}",
        o.stdout
    );
    assert!(
        o.stdout.contains("negative pool (\"0\"): 50 rows"),
        "{}",
        o.stdout
    );
    assert!(o.stdout.contains("alpha = "));
}

#[test]
fn fit_without_label_column_is_input_error() {
    let ws = Workspace::new();
    ws.write("train.csv", "member_id,loan_amnt,grade,term\n1,100,A,36\n");
    let o = cli(&[
        "--schema",
        &ws.p("schema.json"),
        "fit",
        &ws.p("train.csv"),
        "--out",
        &ws.p("m.json"),
    ]);
    assert_eq!(o.code, EXIT_INPUT);
    assert!(
        o.stderr.contains("schema mismatch") && o.stderr.contains("loan_status"),
        "{}",
        o.stderr
    );
}

#[test]
fn fit_single_class_is_unfittable() {
    let ws = Workspace::new();
    ws.write(
        "train.csv",
        "member_id,loan_amnt,grade,term,loan_status\n1,100,A,36,1\n2,300,B,36,1\n",
    );
    let o = cli(&[
        "--schema",
        &ws.p("schema.json"),
        "fit",
        &ws.p("train.csv"),
        "--out",
        &ws.p("m.json"),
    ]);
    assert_eq!(o.code, EXIT_UNFITTABLE);
    assert!(o.stderr.contains("unfittable"), "{}", o.stderr);
}

#[test]
fn fit_requires_schema_and_inputs() {
    let ws = Workspace::new();
    ws.separable_csv("train.csv", 10);
    let o = cli(&["fit", &ws.p("train.csv"), "--out", &ws.p("m.json")]);
    assert_eq!(o.code, EXIT_USAGE);
    let o = cli(&[
        "--schema",
        &ws.p("schema.json"),
        "fit",
        &ws.p("absent.csv"),
        "--out",
        &ws.p("m.json"),
    ]);
    assert_eq!(o.code, EXIT_INPUT);
}

#[test]
fn predict_writes_audit_rows() {
    let ws = Workspace::new();
    assert_eq!(ws.fit().code, EXIT_OK);
    ws.write(
        "input.csv",
        "member_id,loan_amnt,grade,term\n1,600,A,36\n2,9500,G,60\n3,700,Z,48\n",
    );
    let o = cli(&[
        "predict",
        &ws.p("model.json"),
        &ws.p("input.csv"),
        "--out",
        &ws.p("pred.csv"),
    ]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let text = ws.read("pred.csv");
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(
        lines[0],
        "row_index,predicted_label,dem_positive,dem_negative,decision_margin"
    );
    assert!(lines[1].starts_with("0,1,"));
    assert!(lines[2].starts_with("1,0,"));
    assert!(lines[3].starts_with("2,"));
}

#[test]
fn predict_with_corrupt_model() {
    let ws = Workspace::new();
    ws.write("model.json", "{\"format\": 1, \"pools\": [");
    ws.write("input.csv", "member_id,loan_amnt,grade,term\n1,600,A,36\n");
    let o = cli(&[
        "predict",
        &ws.p("model.json"),
        &ws.p("input.csv"),
        "--out",
        &ws.p("pred.csv"),
    ]);
    assert_eq!(o.code, EXIT_MODEL_IO);
    let o = cli(&[
        "predict",
        &ws.p("missing.json"),
        &ws.p("input.csv"),
        "--out",
        &ws.p("pred.csv"),
    ]);
    assert_eq!(o.code, EXIT_MODEL_IO);
}

#[test]
fn evaluate_separable_data() {
    let ws = Workspace::new();
    assert_eq!(ws.fit().code, EXIT_OK);
    ws.separable_csv("test.csv", 40);
    let o = cli(&[
        "evaluate",
        &ws.p("model.json"),
        &ws.p("test.csv"),
        "--report",
        &ws.p("report.json"),
    ]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    assert!(o.stdout.contains("accuracy: 1.0000"), "{}", o.stdout);
    let report: serde_json::Value = serde_json::from_str(&ws.read("report.json")).unwrap();
    assert_eq!(report["n_total"], 40);
    assert_eq!(report["accuracy"], 1.0);
}

#[test]
fn evaluate_input_errors() {
    let ws = Workspace::new();
    assert_eq!(ws.fit().code, EXIT_OK);
    ws.write("empty.csv", "member_id,loan_amnt,grade,term,loan_status\n");
    let o = cli(&["evaluate", &ws.p("model.json"), &ws.p("empty.csv")]);
    assert_eq!(o.code, EXIT_INPUT);
    ws.write(
        "odd.csv",
        "member_id,loan_amnt,grade,term,loan_status\n1,600,A,36,maybe\n",
    );
    let o = cli(&["evaluate", &ws.p("model.json"), &ws.p("odd.csv")]);
    assert_eq!(o.code, EXIT_INPUT);
    assert!(o.stderr.contains("\"maybe\""), "{}", o.stderr);
}

#[test]
fn inspect_outputs() {
    let ws = Workspace::new();
    assert_eq!(ws.fit().code, EXIT_OK);
    let model = ws.p("model.json");

    let o = cli(&["inspect", &model, "--entropy-table", &ws.p("table.tsv")]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let table = ws.read("table.tsv");
    assert_eq!(table.lines().count(), 1 + 2 * (3 + 1));
    assert!(!table.contains("-0.0"));

    let o = cli(&[
        "inspect",
        &model,
        "--plot-data",
        "entropy_per_attribute",
        &ws.p("fig.tsv"),
    ]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let fig = ws.read("fig.tsv");
    assert!(fig.starts_with("pool\tattribute_index\tattribute\tentropy\n"));
    assert_eq!(fig.lines().count(), 1 + 2 * 3);

    let o = cli(&[
        "inspect",
        &model,
        "--entropy-table",
        &ws.p("a.tsv"),
        "--plot-data",
        "entropy_per_attribute",
        &ws.p("b.tsv"),
    ]);
    assert_eq!(o.code, EXIT_USAGE);
    let o = cli(&[
        "inspect",
        &model,
        "--plot-data",
        "histogram",
        &ws.p("b.tsv"),
    ]);
    assert_eq!(o.code, EXIT_USAGE);
    let o = cli(&["inspect", &model]);
    assert_eq!(o.code, EXIT_USAGE);
}

#[test]
fn accuracy_bars_merge_baselines() {
    let ws = Workspace::new();
    assert_eq!(ws.fit().code, EXIT_OK);
    ws.separable_csv("test.csv", 20);
    let o = cli(&[
        "evaluate",
        &ws.p("model.json"),
        &ws.p("test.csv"),
        "--report",
        &ws.p("report.json"),
    ]);
    assert_eq!(o.code, EXIT_OK);
    ws.write(
        "baselines.tsv",
        "classifier\taccuracy\nrandom_forest\t0.87\nsvm\t0.74\nkernel_svm\t0.74\ndecision_trees\t0.81\n",
    );
    let o = cli(&[
        "inspect",
        &ws.p("model.json"),
        "--plot-data",
        "accuracy_bars",
        &ws.p("bars.tsv"),
        "--report",
        &ws.p("report.json"),
        "--baselines",
        &ws.p("baselines.tsv"),
    ]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let bars = ws.read("bars.tsv");
    assert_eq!(bars.lines().count(), 6);
    assert_eq!(bars.lines().nth(1), Some("entropy_based\t1.0"));
}

#[test]
fn onehot_encoding_and_custom_labels() {
    let ws = Workspace::new();
    let source = ws.separable_csv("t.csv", 60);
    let csv = fs::read_to_string(&source)
        .unwrap()
        .replace(",1\n", ",paid\n")
        .replace(",0\n", ",default\n");
    ws.write("train.csv", &csv);
    let o = cli(&[
        "--schema",
        &ws.p("schema.json"),
        "--encoding",
        "onehot",
        "--positive-label",
        "paid",
        "--negative-label",
        "default",
        "fit",
        &ws.p("train.csv"),
        "--out",
        &ws.p("model.json"),
    ]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let o = cli(&["evaluate", &ws.p("model.json"), &ws.p("train.csv")]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    assert!(o.stdout.contains("accuracy: 1.0000"));
    assert!(ws.read("model.json").contains("\"grade_A\""));
}

#[test]
fn help_exits_zero_and_bad_flags_exit_usage() {
    assert_eq!(cli(&["--help"]).code, EXIT_OK);
    assert_eq!(cli(&["frobnicate"]).code, EXIT_USAGE);
    assert_eq!(
        cli(&["--threads", "many", "fit", "x", "--out", "y"]).code,
        EXIT_USAGE
    );
}
