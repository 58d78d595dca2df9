use std::process::{Command, Output};

fn lkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lkit")).args(args).output().unwrap()
}

fn lkit_env(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lkit"))
        .args(args)
        .env("LKIT_THREADS", threads)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Parses CSV output and drops runtime columns.
fn stable_cells(text: &str) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let h = r.headers().unwrap().clone();
    let keep: Vec<bool> = h.iter().map(|n| !n.ends_with("costs_runtime")).collect();
    let mut rows = vec![h.iter().map(String::from).collect()];
    for rec in r.records() {
        rows.push(
            rec.unwrap()
                .iter()
                .zip(&keep)
                .filter(|(_, k)| **k)
                .map(|(v, _)| v.to_string())
                .collect(),
        );
    }
    rows
}

fn ids(o: &Output) -> Vec<String> {
    stdout(o).lines().skip(1).map(|l| l.split(',').next().unwrap().to_string()).collect()
}

#[test]
fn list_sets_filters() {
    assert_eq!(ids(&lkit(&["list-sets"])).len(), 17);
    let no_eval = ids(&lkit(&["list-sets", "--no-eval"]));
    assert_eq!(no_eval.len(), 14);
    for s in ["ela_conv", "ela_curv", "ela_local"] {
        assert!(!no_eval.contains(&s.to_string()));
    }
    let no_cm = ids(&lkit(&["list-sets", "--no-cellmapping"]));
    for s in ["cm_angle", "cm_grad", "cm_conv", "gcm", "bt", "limo"] {
        assert!(!no_cm.contains(&s.to_string()));
    }
    assert!(no_cm.contains(&"basic".to_string()));
    let json: serde_json::Value = serde_json::from_str(&stdout(&lkit(&["list-sets", "--format", "json"]))).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 17);
}

#[test]
fn compute_nbc_columns() {
    let o = lkit(&["compute", "--problem", "gallagher101", "--dim", "2", "--n", "800", "--sets", "nbc", "--seed", "1"]);
    assert!(o.status.success());
    let rows = stable_cells(&stdout(&o));
    let features: Vec<&String> = rows[0].iter().filter(|c| c.starts_with("nbc.")).collect();
    assert_eq!(features.len(), 7);
    assert_eq!(rows.len(), 2);
}

#[test]
fn compute_all_sets() {
    let o = lkit(&["compute", "--problem", "gallagher101", "--dim", "2", "--n", "400", "--blocks", "3", "--sets", "all"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = stable_cells(&stdout(&o));
    let header = &rows[0];
    let n = stdout(&o).lines().next().unwrap().split(',').count();
    assert_eq!(n - 3, 343);
    assert_eq!(header[0], "replication");
}

#[test]
fn control_changes_disp_metric() {
    let base = ["compute", "--problem", "rastrigin", "--dim", "3", "--n", "200", "--sets", "disp"];
    let a = stable_cells(&stdout(&lkit(&base)));
    let mut args = base.to_vec();
    args.extend(["--control", "disp.dist_method=manhattan"]);
    let b = stable_cells(&stdout(&lkit(&args)));
    assert_ne!(a[1], b[1]);
    let mut bad = base.to_vec();
    bad.extend(["--control", "disp.nope=1"]);
    assert_eq!(lkit(&bad).status.code(), Some(1));
}

#[test]
fn deterministic_across_runs_and_threads() {
    let args = [
        "compute", "--problem", "gallagher101", "--dim", "2", "--n", "300", "--blocks", "3", "--sets", "all", "--seed", "5",
        "--reps", "2",
    ];
    let a = stable_cells(&stdout(&lkit_env(&args, "1")));
    let b = stable_cells(&stdout(&lkit_env(&args, "4")));
    let c = stable_cells(&stdout(&lkit(&args)));
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert_eq!(a.len(), 3);
}

#[test]
fn design_input_reports_partial_failure() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("design.csv");
    let mut text = String::from("x1,x2,y\n");
    for i in 0..30 {
        let (x1, x2) = ((i % 6) as f64 / 5.0, (i / 6) as f64 / 4.0);
        text.push_str(&format!("{},{},{}\n", x1, x2, x1 * x1 + x2));
    }
    std::fs::write(&path, text).unwrap();
    let o = lkit(&["compute", "--design", path.to_str().unwrap(), "--sets", "ela_conv,disp"]);
    assert_eq!(o.status.code(), Some(2));
    let out = stdout(&o);
    let rows = stable_cells(&out);
    let disp = rows[0].iter().position(|c| c == "disp.ratio_mean_02").unwrap();
    assert!(!rows[1][disp].is_empty());
    assert!(rows[1].last().unwrap().contains("ela_conv"));
}

#[test]
fn parse_error_is_fatal() {
    let o = lkit(&["compute", "--expression", "x1 +", "--dim", "2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("position 5"));
}

#[test]
fn batch_four_instances_three_reps() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("instances.csv");
    std::fs::write(&inst, "problem,seed,dim\ngallagher101,1,2\ngallagher101,2,2\ngallagher101,3,2\ngallagher101,4,2\n").unwrap();
    let args = [
        "batch", "--instances", inst.to_str().unwrap(), "--reps", "3", "--sets", "cm_angle", "--blocks", "3", "--n", "200",
        "--seed", "9",
    ];
    let a = lkit(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let rows = stable_cells(&stdout(&a));
    assert_eq!(rows.len(), 13);
    assert_eq!(&rows[0][..5], &["problem", "seed", "dim", "replication", "sample_seed"]);
    assert_eq!(rows[0].iter().filter(|c| c.starts_with("cm_angle.")).count(), 10);
    assert_eq!(rows[1][3], "1");
    assert_eq!(rows[3][3], "3");
    assert_eq!(rows[4][1], "2");
    assert_eq!(rows, stable_cells(&stdout(&lkit(&args))));
}

#[test]
fn batch_single_row_and_skipped_rows() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("instances.csv");
    std::fs::write(&inst, "dim\n2\n").unwrap();
    let o = lkit(&["batch", "--instances", inst.to_str().unwrap(), "--sets", "nbc", "--n", "100"]);
    assert!(o.status.success());
    assert_eq!(stable_cells(&stdout(&o)).len(), 2);

    std::fs::write(&inst, "problem,seed,dim\nsphere,,2\nsphere,,zero\n").unwrap();
    let o = lkit(&["batch", "--instances", inst.to_str().unwrap(), "--sets", "nbc", "--n", "100"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stable_cells(&stdout(&o)).len(), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 2"));
}

#[test]
fn bench_reports_every_set() {
    let o = lkit(&["bench", "--problem", "sphere", "--dim", "2", "--n", "200", "--blocks", "3", "--reps", "1"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let sets = v["sets"].as_array().unwrap();
    assert_eq!(sets.len(), 17);
    for s in sets {
        assert_eq!(s["median"], s["q1"]);
        assert_eq!(s["median"], s["q3"]);
        assert_eq!(s["runs"].as_array().unwrap().len(), 1);
    }
}

#[test]
fn plot_kinds() {
    let base = ["plot", "--problem", "gallagher101", "--dim", "2", "--n", "300", "--blocks", "4"];
    for kind in ["cellmapping", "barriertree2d", "barriertree3d", "infocontent", "function"] {
        let mut args = base.to_vec();
        args.extend(["--kind", kind, "--resolution", "10"]);
        let o = lkit(&args);
        assert!(o.status.success(), "{}: {}", kind, String::from_utf8_lossy(&o.stderr));
        let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert_eq!(v["schema_version"], 1);
    }
    let o = lkit(&["plot", "--kind", "cellmapping", "--problem", "sphere", "--dim", "3", "--n", "100", "--blocks", "2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("requires 2 dimensions"));
    let o = lkit(&["plot", "--kind", "infocontent", "--problem", "sphere", "--dim", "5", "--n", "250"]);
    assert!(o.status.success());
}
