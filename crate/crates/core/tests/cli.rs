use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;
use tnale::tensor::{io, Tensor};

fn tnale_cmd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tnale")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = tnale_cmd(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn generate(dir: &Path, order: &str, seed: &str) {
    ok(&["generate", "--template", "tr", "--order", order, "--rank-lo", "1", "--rank-hi", "2", "--seed", seed, "--out", p(dir)]);
}

#[test]
fn generate_is_deterministic_and_round_trips() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        ok(&[
            "generate", "--template", "tr", "--order", "8", "--dim", "3", "--rank-lo", "1", "--rank-hi", "4", "--permute", "--seed", "7",
            "--out", p(d),
        ]);
    }
    for f in ["target.tnsr", "truth.json", "manifest.json"] {
        assert!(a.join(f).is_file(), "missing {f}");
    }
    assert_eq!(fs::read(a.join("target.tnsr")).unwrap(), fs::read(b.join("target.tnsr")).unwrap());
    assert_eq!(fs::read(a.join("truth.json")).unwrap(), fs::read(b.join("truth.json")).unwrap());
    let t = io::load(a.join("target.tnsr")).unwrap();
    assert_eq!(t.dims(), &[3; 8]);
    assert_eq!(json(&a.join("manifest.json"))["command"], "generate");
}

#[test]
fn missing_required_flag_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let out = tnale_cmd(&["generate", "--template", "tr", "--out", p(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
    let out = tnale_cmd(&["search", "--algo", "nope", "--input", "x", "--template", "tr", "--out", p(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
    let out = tnale_cmd(&["search", "--budget", "0", "--input", "x", "--template", "tr", "--out", p(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unreadable_input_is_a_runtime_error() {
    let tmp = TempDir::new().unwrap();
    let missing = tmp.path().join("none.tnsr");
    let out = tnale_cmd(&["search", "--input", p(&missing), "--template", "tr", "--out", p(&tmp.path().join("o"))]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn search_honors_budget_and_reruns_identically() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    generate(&data, "4", "3");
    let target = data.join("target.tnsr");
    let truth = data.join("truth.json");
    let runs: Vec<_> = ["r1", "r2"].iter().map(|n| tmp.path().join(n)).collect();
    for r in &runs {
        ok(&["search", "--input", p(&target), "--template", "tr", "--budget", "10", "--seed", "1", "--truth", p(&truth), "--out", p(r)]);
    }
    let rows = tnale::objective::read_trace_csv(fs::File::open(runs[0].join("trace.csv")).unwrap()).unwrap();
    let explicit = rows.iter().filter(|r| !r.estimated).count();
    assert!(explicit <= 10 && explicit > 0, "{explicit} explicit evaluations");
    let res = json(&runs[0].join("result.json"));
    assert!(res["n_eval"].as_u64().unwrap() <= 10);
    assert_eq!(res["budget_exhausted"], true);
    assert!(res["eff"].is_number());
    for f in ["trace.csv", "result.json"] {
        assert_eq!(fs::read(runs[0].join(f)).unwrap(), fs::read(runs[1].join(f)).unwrap(), "{f} differs");
    }
    let config = |r: &Path| {
        let mut c = json(&r.join("manifest.json"))["config"].clone();
        c.as_object_mut().unwrap().remove("out");
        c
    };
    assert_eq!(config(&runs[0]), config(&runs[1]));
}

#[test]
fn workers_do_not_change_results() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    generate(&data, "3", "5");
    let target = data.join("target.tnsr");
    for (name, workers) in [("w1", "1"), ("w3", "3")] {
        ok(&[
            "search", "--algo", "tnls", "--input", p(&target), "--template", "tr", "--samples", "6", "--tnls-iters", "3", "--rank-hi", "3",
            "--workers", workers, "--seed", "2", "--out", p(&tmp.path().join(name)),
        ]);
    }
    for f in ["trace.csv", "result.json"] {
        assert_eq!(fs::read(tmp.path().join("w1").join(f)).unwrap(), fs::read(tmp.path().join("w3").join(f)).unwrap());
    }
}

#[test]
fn brute_force_over_the_cap_is_refused() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    generate(&data, "3", "1");
    let out = Command::new(env!("CARGO_BIN_EXE_tnale"))
        .env("TNALE_GRID_CAP", "5")
        .args(["search", "--algo", "brute", "--input", p(&data.join("target.tnsr")), "--template", "tr", "--rank-hi", "2"])
        .args(["--out", p(&tmp.path().join("o"))])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("above the cap"), "unexpected message: {msg}");
}

#[test]
fn brute_force_small_grid_counts_every_point() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    generate(&data, "3", "1");
    let o = tmp.path().join("o");
    ok(&["search", "--algo", "brute", "--input", p(&data.join("target.tnsr")), "--template", "tr", "--rank-hi", "2", "--out", p(&o)]);
    assert_eq!(json(&o.join("result.json"))["n_eval"], 8);
}

#[test]
fn landscape_from_target_reports_spectra_and_checks() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    generate(&data, "4", "2");
    let o = tmp.path().join("land");
    ok(&[
        "landscape", "--input", p(&data.join("target.tnsr")), "--ranks", "1,1,1,1", "--radius", "1", "--rank-hi", "2", "--out", p(&o),
    ]);
    let land = io::load(o.join("landscape.tnsr")).unwrap();
    assert_eq!(land.dims(), &[2; 4]);
    let spectra = json(&o.join("spectra.json"));
    assert_eq!(spectra["modes"].as_array().unwrap().len(), 4);
    let report = json(&o.join("report.json"));
    assert_eq!(report["reciprocal_check"]["pass"], true);
    assert_eq!(report["reciprocal_check"]["checked"], 20);
    assert!(report["min_entry"]["entry_reads"].as_u64().unwrap() <= report["min_entry"]["read_bound"].as_u64().unwrap());
}

#[test]
fn landscape_graph_mode_adds_a_mode() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    generate(&data, "4", "2");
    let o = tmp.path().join("land");
    ok(&[
        "landscape", "--input", p(&data.join("target.tnsr")), "--ranks", "1,1,1,1", "--radius", "1", "--rank-hi", "2", "--graph-mode",
        "--spot-checks", "5", "--out", p(&o),
    ]);
    assert_eq!(json(&o.join("spectra.json"))["modes"].as_array().unwrap().len(), 5);
}

#[test]
fn landscape_min_entry_agrees_on_separable_fixture() {
    let tmp = TempDir::new().unwrap();
    let vecs: [&[f64]; 3] = [&[3.0, 1.0, 2.0, 5.0], &[0.5, 4.0, 2.0], &[1.0, 7.0, 0.25, 3.0, 2.0]];
    let t = Tensor::from_fn(vec![4, 3, 5], |i| vecs[0][i[0]] * vecs[1][i[1]] * vecs[2][i[2]]).unwrap();
    let path = tmp.path().join("sep.tnsr");
    io::save(&path, &t).unwrap();
    let o = tmp.path().join("o");
    ok(&["landscape", "--tensor", p(&path), "--out", p(&o)]);
    let me = &json(&o.join("report.json"))["min_entry"];
    assert_eq!(me["agree"], true);
    assert_eq!(me["brute_index"], serde_json::json!([3, 1, 1]));
    assert!(me["entry_reads"].as_u64().unwrap() <= 12);
}

#[test]
fn report_merges_two_traces() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    generate(&data, "3", "4");
    let runs = tmp.path().join("runs");
    for seed in ["1", "2"] {
        ok(&[
            "search", "--input", p(&data.join("target.tnsr")), "--template", "tr", "--budget", "6", "--seed", seed, "--truth",
            p(&data.join("truth.json")), "--out", p(&runs.join(format!("s{seed}"))),
        ]);
    }
    let o = tmp.path().join("rep");
    ok(&["report", p(&runs), "--out", p(&o)]);
    let mut merged = csv::Reader::from_path(o.join("merged.csv")).unwrap();
    let series: std::collections::BTreeSet<String> = merged.records().map(|r| r.unwrap()[0].to_string()).collect();
    assert_eq!(series.len(), 2);
    let mut summary = csv::Reader::from_path(o.join("summary.csv")).unwrap();
    let rows: Vec<_> = summary.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][0], "tnale");
    assert_eq!(&rows[0][1], "2");
}

#[test]
fn report_on_empty_dir_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let empty = tmp.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let out = tnale_cmd(&["report", p(&empty), "--out", p(&tmp.path().join("o"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_supplies_flags() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.json");
    let out_dir = tmp.path().join("gen");
    fs::write(&cfg, serde_json::json!({ "template": "tr", "order": 3, "rank_hi": 2, "seed": 9, "out": out_dir }).to_string()).unwrap();
    ok(&["generate", "--config", p(&cfg)]);
    let direct = tmp.path().join("direct");
    generate(&direct, "3", "9");
    assert_eq!(fs::read(out_dir.join("target.tnsr")).unwrap(), fs::read(direct.join("target.tnsr")).unwrap());
}
