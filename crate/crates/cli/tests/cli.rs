use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn riesz(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_riesz"));
    cmd.args(args).env_remove("RIESZ_SCALAR_MODE");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn write(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(v).unwrap()).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn singletons(n: usize) -> Value {
    Value::Object((1..=n).map(|i| (i.to_string(), json!([i - 1]))).collect())
}

fn shift(n: usize) -> Value {
    let rows: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| (j == i + 1) as i64).collect()).collect();
    json!({ "n": n, "entries": rows })
}

fn mask_superop(n: usize, kept: &[(usize, usize)]) -> Value {
    let big = n * n;
    let rows: Vec<Vec<i64>> = (0..big)
        .map(|r| {
            (0..big)
                .map(|c| (r == c && kept.contains(&(r % n, r / n))) as i64)
                .collect()
        })
        .collect();
    json!({ "n": n, "vec": "col-major", "entries": rows })
}

#[test]
fn project_shift_keeps_requested_entries() {
    let dir = TempDir::new().unwrap();
    let fam = write(dir.path(), "f.json", &singletons(4));
    let rel = write(dir.path(), "r.json", &json!([["1", "2"], ["3", "4"]]));
    let mat = write(dir.path(), "m.json", &shift(4));
    let out = riesz(
        &[
            "project",
            "--family",
            s(&fam),
            "--relation",
            s(&rel),
            "--matrix",
            s(&mat),
        ],
        &[],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let got = stdout_json(&out);
    assert_eq!(got["scalar_mode"], "exact");
    let expected: Vec<Vec<&str>> = (0..4)
        .map(|i| {
            (0..4)
                .map(|j| if (i, j) == (0, 1) || (i, j) == (2, 3) { "1" } else { "0" })
                .collect()
        })
        .collect();
    assert_eq!(got["entries"], json!(expected));

    // Re-feeding the output is a fixed point.
    let again = write(dir.path(), "again.json", &got);
    let out2 = riesz(
        &[
            "project",
            "--family",
            s(&fam),
            "--relation",
            s(&rel),
            "--matrix",
            s(&again),
        ],
        &[],
    );
    assert_eq!(stdout_json(&out2), got);
}

#[test]
fn project_empty_relation_gives_zero() {
    let dir = TempDir::new().unwrap();
    let fam = write(dir.path(), "f.json", &singletons(3));
    let rel = write(dir.path(), "r.json", &json!([]));
    let mat = write(
        dir.path(),
        "m.json",
        &json!({"n": 3, "entries": [[1, "2/3", -4], [5, 6, 7], [8, 9, "1/2"]]}),
    );
    let out = riesz(
        &[
            "project",
            "--family",
            s(&fam),
            "--relation",
            s(&rel),
            "--matrix",
            s(&mat),
        ],
        &[],
    );
    assert_eq!(code(&out), 0);
    assert_eq!(
        stdout_json(&out)["entries"],
        json!([["0", "0", "0"], ["0", "0", "0"], ["0", "0", "0"]])
    );
}

#[test]
fn project_exit_codes() {
    let dir = TempDir::new().unwrap();
    let fam = write(dir.path(), "f.json", &singletons(5));
    let rel = write(dir.path(), "r.json", &json!([["1", "2"]]));
    let mat = write(dir.path(), "m.json", &shift(4));
    let out = riesz(
        &[
            "project",
            "--family",
            s(&fam),
            "--relation",
            s(&rel),
            "--matrix",
            s(&mat),
        ],
        &[],
    );
    assert_eq!(code(&out), 3, "family wider than the matrix");

    let bad_rel = write(dir.path(), "bad_rel.json", &json!([["1", "9"]]));
    let fam4 = write(dir.path(), "f4.json", &singletons(4));
    let out = riesz(
        &[
            "project",
            "--family",
            s(&fam4),
            "--relation",
            s(&bad_rel),
            "--matrix",
            s(&mat),
        ],
        &[],
    );
    assert_eq!(code(&out), 3, "unknown label");

    let garbage = dir.path().join("garbage.json");
    fs::write(&garbage, "{ not json").unwrap();
    let out = riesz(
        &[
            "project",
            "--family",
            s(&fam4),
            "--relation",
            s(&rel),
            "--matrix",
            s(&garbage),
        ],
        &[],
    );
    assert_eq!(code(&out), 2);

    let ragged = write(dir.path(), "ragged.json", &json!({"n": 2, "entries": [[1, 2], [3]]}));
    let out = riesz(
        &[
            "project",
            "--family",
            s(&fam4),
            "--relation",
            s(&rel),
            "--matrix",
            s(&ragged),
        ],
        &[],
    );
    assert_eq!(code(&out), 3);

    let out = riesz(&["project", "--family", s(&fam4)], &[]);
    assert_eq!(code(&out), 2, "missing arguments are a parse error");
}

#[test]
fn scalar_mode_override_and_mixed_documents() {
    let dir = TempDir::new().unwrap();
    let fam = write(dir.path(), "f.json", &singletons(2));
    let rel = write(dir.path(), "r.json", &json!([["1", "1"]]));
    let mat = write(dir.path(), "m.json", &json!({"n": 2, "entries": [["1/4", 1], [2, 3]]}));
    let args = [
        "project",
        "--family",
        s(&fam),
        "--relation",
        s(&rel),
        "--matrix",
        s(&mat),
    ];
    let out = riesz(&args, &[("RIESZ_SCALAR_MODE", "float")]);
    assert_eq!(code(&out), 0);
    let got = stdout_json(&out);
    assert_eq!(got["scalar_mode"], "float");
    assert_eq!(got["entries"][0][0].as_f64(), Some(0.25));

    let mixed = write(
        dir.path(),
        "mixed.json",
        &json!({"scalar_mode": "float", "n": 1, "entries": [["1/3"]]}),
    );
    let fam1 = write(dir.path(), "f1.json", &singletons(1));
    let out = riesz(
        &[
            "project",
            "--family",
            s(&fam1),
            "--relation",
            s(&rel),
            "--matrix",
            s(&mixed),
        ],
        &[],
    );
    assert_eq!(code(&out), 2);

    let out = riesz(&args, &[("RIESZ_SCALAR_MODE", "quaternion")]);
    assert_eq!(code(&out), 2);
}

#[test]
fn boolean_operations() {
    let dir = TempDir::new().unwrap();
    let fam = write(dir.path(), "f.json", &json!({"a": [0], "b": [1, 2]}));
    let left = write(dir.path(), "l.json", &json!([["a", "a"], ["a", "b"]]));
    let right = write(dir.path(), "r.json", &json!([["a", "b"], ["b", "b"]]));
    let run = |op: &str, with_right: bool| {
        let mut args = vec!["boolean", "--family", s(&fam), "--op", op, "--left", s(&left)];
        if with_right {
            args.extend(["--right", s(&right)]);
        }
        riesz(&args, &[])
    };
    assert_eq!(stdout_json(&run("meet", true)), json!([["a", "b"]]));
    assert_eq!(
        stdout_json(&run("join", true)),
        json!([["a", "a"], ["a", "b"], ["b", "b"]])
    );
    assert_eq!(stdout_json(&run("complement", false)), json!([["b", "a"], ["b", "b"]]));
    assert_eq!(code(&run("meet", false)), 2);
    assert_eq!(code(&run("xor", true)), 2);
}

#[test]
fn detect_verdicts() {
    let dir = TempDir::new().unwrap();
    let mask = write(dir.path(), "mask.json", &mask_superop(2, &[(0, 1), (1, 1)]));
    let out = riesz(&["detect", "--superop", s(&mask)], &[]);
    assert_eq!(code(&out), 0);
    assert_eq!(
        stdout_json(&out),
        json!({"is_band_projection": true, "gamma": [["1", "2"], ["2", "2"]], "rejection_stage": null})
    );

    let half: Vec<Vec<Value>> = (0..4)
        .map(|r| (0..4).map(|c| if r == c { json!("1/2") } else { json!(0) }).collect())
        .collect();
    let half = write(
        dir.path(),
        "half.json",
        &json!({"n": 2, "vec": "col-major", "entries": half}),
    );
    let out = riesz(&["detect", "--superop", s(&half)], &[]);
    assert_eq!(stdout_json(&out)["rejection_stage"], "idempotence");
    assert_eq!(stdout_json(&out)["gamma"], Value::Null);

    // E_11 ↦ E_11 − E_21: idempotent, not positive.
    let neg = json!({"n": 2, "entries": [[1, 0, 0, 0], [-1, 0, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]});
    let neg = write(dir.path(), "neg.json", &neg);
    assert_eq!(
        stdout_json(&riesz(&["detect", "--superop", s(&neg)], &[]))["rejection_stage"],
        "positivity"
    );

    let wrong = write(dir.path(), "wrong.json", &json!({"n": 2, "entries": [[1, 0], [0, 1]]}));
    assert_eq!(code(&riesz(&["detect", "--superop", s(&wrong)], &[])), 3);
    let row_major = write(
        dir.path(),
        "rm.json",
        &json!({"n": 1, "vec": "row-major", "entries": [[1]]}),
    );
    assert_eq!(code(&riesz(&["detect", "--superop", s(&row_major)], &[])), 2);
}

#[test]
fn classify_mult_output() {
    let dir = TempDir::new().unwrap();
    let a = write(dir.path(), "a.json", &json!({"n": 2, "entries": [[-2, 0], [0, 0]]}));
    let b = write(
        dir.path(),
        "b.json",
        &json!({"n": 2, "entries": [["-1/2", 0], [0, "-1/2"]]}),
    );
    let out = riesz(&["classify-mult", "--a", s(&a), "--b", s(&b)], &[]);
    assert_eq!(code(&out), 0);
    let got = stdout_json(&out);
    assert_eq!(got["positive"], true);
    assert_eq!(got["sign_case"], "both_negative");
    assert_eq!(got["positive_projection"], true);
    assert_eq!(got["band_projection"], true);
    assert_eq!(got["lambda"], "-1/2");

    let avg = write(
        dir.path(),
        "avg.json",
        &json!({"n": 2, "entries": [["1/2", "1/2"], ["1/2", "1/2"]]}),
    );
    let id = write(dir.path(), "id.json", &json!({"n": 2, "entries": [[1, 0], [0, 1]]}));
    let got = stdout_json(&riesz(&["classify-mult", "--a", s(&avg), "--b", s(&id)], &[]));
    assert_eq!(got["positive_projection"], true);
    assert_eq!(got["band_projection"], false);
    assert_eq!(got["lambda"], "1");

    let mixed = write(dir.path(), "mixed.json", &json!({"n": 2, "entries": [[1, 0], [0, -1]]}));
    let got = stdout_json(&riesz(&["classify-mult", "--a", s(&mixed), "--b", s(&id)], &[]));
    assert_eq!(got["sign_case"], "mixed");
    assert_eq!(got["lambda"], Value::Null);

    let three = write(
        dir.path(),
        "three.json",
        &json!({"n": 3, "entries": [[1, 0, 0], [0, 1, 0], [0, 0, 1]]}),
    );
    assert_eq!(
        code(&riesz(&["classify-mult", "--a", s(&three), "--b", s(&id)], &[])),
        3
    );
}

#[test]
fn dyadic_table() {
    let out = riesz(&["dyadic", "--max-level", "4"], &[]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    for (level, dim, norm) in [(1, 2, "1/2"), (2, 4, "1/4"), (3, 8, "1/8"), (4, 16, "1/16")] {
        let row = text
            .lines()
            .find(|l| l.split_whitespace().next() == Some(&level.to_string()))
            .unwrap();
        assert_eq!(
            row.split_whitespace().collect::<Vec<_>>(),
            vec![level.to_string(), dim.to_string(), norm.into()]
        );
    }
    assert!(text.contains("stretching operator: yes"));
    assert!(text.contains("E_13:                no"));
    assert!(text.contains("elementary members:  E_11 E_12 E_21 E_31"));
    assert_eq!(code(&riesz(&["dyadic", "--max-level", "0"], &[])), 2);
}

#[test]
fn fuzz_is_deterministic() {
    let args = ["fuzz", "--seed", "9", "--trials", "20", "--max-dim", "3"];
    let a = riesz(&args, &[]);
    let b = riesz(&args, &[]);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let report = stdout_json(&a);
    assert_eq!(report["passed"], true);
    assert_eq!(report["config"]["seed"], 9);
    assert!(report["properties"]
        .as_array()
        .unwrap()
        .iter()
        .all(|p| p["passed"] == 20 && p["failed"] == 0));
}

#[test]
fn fuzz_zero_trials_and_module_selection() {
    let out = riesz(&["fuzz", "--trials", "0"], &[]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["properties"], json!([]));

    let out = riesz(&["fuzz", "--trials", "3", "--modules", "mult,boolean"], &[]);
    let report = stdout_json(&out);
    let modules: Vec<&str> = report["properties"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["module"].as_str().unwrap())
        .collect();
    assert!(!modules.is_empty() && modules.iter().all(|m| *m == "mult" || *m == "boolean"));

    assert_eq!(code(&riesz(&["fuzz", "--modules", "nope"], &[])), 2);
    assert_eq!(code(&riesz(&["fuzz", "--max-dim", "7"], &[])), 2);
}

#[test]
fn mutant_counterexample_replays() {
    let dir = TempDir::new().unwrap();
    let cx_dir = dir.path().join("cx");
    let out = riesz(
        &[
            "fuzz",
            "--seed",
            "42",
            "--trials",
            "50",
            "--max-dim",
            "3",
            "--inject-mutant",
            "stray-half",
            "--counterexample-dir",
            s(&cx_dir),
        ],
        &[],
    );
    assert_eq!(code(&out), 1);
    let report = stdout_json(&out);
    assert_eq!(report["passed"], false);
    let failing: Vec<&str> = report["properties"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|p| p["failed"].as_u64().unwrap() > 0)
        .map(|p| p["name"].as_str().unwrap())
        .collect();
    assert_eq!(failing, vec!["detect.round_trip"]);

    let file = cx_dir.join("detect.round_trip.json");
    let replay = riesz(&["fuzz", "--replay", s(&file)], &[]);
    assert_eq!(code(&replay), 1);
    let cx: Value = serde_json::from_str(&fs::read_to_string(&file).unwrap()).unwrap();
    let stdout = String::from_utf8(replay.stdout).unwrap();
    assert!(stdout.contains(cx["failure"].as_str().unwrap()));
    assert!(String::from_utf8_lossy(&replay.stderr).contains("reproduced"));

    // The stored superoperator is accepted by `detect` and rejected there.
    let sup = write(dir.path(), "sup.json", &cx["input"]["superoperator"]);
    let verdict = stdout_json(&riesz(&["detect", "--superop", s(&sup)], &[]));
    assert_eq!(verdict["is_band_projection"], false);
    assert_eq!(verdict["rejection_stage"], "idempotence");
}
