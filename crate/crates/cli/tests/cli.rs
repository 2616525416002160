use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

const SDM: &str = env!("CARGO_BIN_EXE_sdm");

fn small_config(dir: &Path, count: usize) -> Value {
    json!({
        "geometry": {
            "structure": {"kind": "rect", "width": 0.6, "height": 0.3, "n_per_side": 4},
            "bounding": {"kind": "matched_circle", "radius": 0.55},
            "region_layers": 3
        },
        "frequencies": {"min": 50.0, "max": 800.0, "count": count},
        "excitation": {"kind": "angular_mode", "m": 2, "amplitude": 1e-3},
        "paths": {"cache": dir.join("cache")}
    })
}

fn write_config(dir: &Path, name: &str, cfg: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    p
}

fn sdm(args: &[&str]) -> Output {
    Command::new(SDM).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn cache_fill_rerun_and_key_change() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.json", &small_config(dir.path(), 20));
    let first = sdm(&["impedance", "--config", arg(&cfg), "--threads", "2"]);
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    let e = stderr(&first);
    assert!(e.contains("20 requested, 0 cache hits, 20 cloning solves"), "{e}");
    assert!(e.contains("tail residual") && e.contains("spectral radius"), "{e}");
    let manifest: Value = serde_json::from_slice(&std::fs::read(dir.path().join("cache/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["entries"].as_array().unwrap().len(), 20);

    let again = sdm(&["impedance", "--config", arg(&cfg)]);
    assert_eq!(again.status.code(), Some(0));
    assert!(stderr(&again).contains("20 cache hits, 0 cloning solves"), "{}", stderr(&again));

    let changed = sdm(&["impedance", "--config", arg(&cfg), "--gamma", "1.2"]);
    assert_eq!(changed.status.code(), Some(0));
    assert!(stderr(&changed).contains("0 cache hits, 20 cloning solves"), "{}", stderr(&changed));

    let inspect = sdm(&["inspect", "--config", arg(&cfg)]);
    assert_eq!(inspect.status.code(), Some(0));
    let text = String::from_utf8(inspect.stdout).unwrap();
    assert!(text.contains("40 entries, 0 failures"), "{text}");
}

#[test]
fn sweep_layout_and_single_thread_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.json", &small_config(dir.path(), 50));
    let out_a = dir.path().join("a.csv");
    let out_b = dir.path().join("b.csv");
    let a = sdm(&["sweep", "--config", arg(&cfg), "--threads", "1", "--out", arg(&out_a)]);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert!(stderr(&a).contains("50 cloning solves"));
    let b = sdm(&["sweep", "--config", arg(&cfg), "--threads", "1", "--out", arg(&out_b)]);
    assert_eq!(b.status.code(), Some(0));
    assert!(stderr(&b).contains("50 cache hits, 0 cloning solves"));

    let csv_a = std::fs::read(&out_a).unwrap();
    assert_eq!(csv_a, std::fs::read(&out_b).unwrap());
    let text = String::from_utf8(csv_a).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 301);
    assert_eq!(lines[0], "freq_hz,probe_id,re_pa,im_pa,spl_db,status");
    for l in &lines[1..] {
        let cols: Vec<&str> = l.split(',').collect();
        assert_eq!(cols.len(), 6);
        assert!(cols[..5].iter().all(|c| !c.contains('e')), "fixed notation expected: {l}");
    }

    let meta: Value = serde_json::from_slice(&std::fs::read(dir.path().join("a.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["version"], 1);
    assert_eq!(meta["medium"]["c"], 343.0);
    assert_eq!(meta["impedances"]["cloning_solves"], 50);
}

#[test]
fn sweep_without_cache_prints_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small_config(dir.path(), 3);
    c["paths"] = json!({});
    c["probes"] = json!({"kind": "points", "points": [[0.35, 0.0], [0.0, 0.2]]});
    let cfg = write_config(dir.path(), "run.json", &c);
    let o = sdm(&["sweep", "--config", arg(&cfg), "--threads", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 7);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small_config(dir.path(), 3);
    c["cloning"] = json!({"gama": 1.1});
    let cfg = write_config(dir.path(), "bad.json", &c);
    let o = sdm(&["impedance", "--config", arg(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("gama") && stderr(&o).contains("cloning"), "{}", stderr(&o));

    let missing = sdm(&["impedance"]);
    assert_eq!(missing.status.code(), Some(2));

    let probe_outside = write_config(
        dir.path(),
        "probe.json",
        &json!({"probes": {"kind": "points", "points": [[2.0, 0.0]]}, "frequencies": {"count": 2}}),
    );
    assert_eq!(sdm(&["sweep", "--config", arg(&probe_outside)]).status.code(), Some(2));

    let nodal = write_config(dir.path(), "nodal.json", &json!({"excitation": {"kind": "nodal", "path": "nope.txt"}}));
    let o = sdm(&["sweep", "--config", arg(&nodal)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("excitation.path"), "{}", stderr(&o));
}

#[test]
fn ops_test_reports_and_single_gamma_note() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ops.json", &json!({"ops": {"n_nodes": 32}}));
    let out = dir.path().join("ops.json.out");
    let o = sdm(&["ops-test", "--config", arg(&cfg), "--out", arg(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(r["version"], 1);
    assert_eq!(r["entries"].as_array().unwrap().len(), 4);
    assert_eq!(r["monotone"], true);
    assert!(r["baseline_error"].as_f64().unwrap() > 0.0);

    let single = sdm(&["ops-test", "--config", arg(&cfg), "--gamma", "1.2"]);
    assert_eq!(single.status.code(), Some(0));
    let r: Value = serde_json::from_slice(&single.stdout).unwrap();
    assert_eq!(r["entries"].as_array().unwrap().len(), 1);
    assert!(r["monotone"].is_null());
    assert!(r["note"].as_str().unwrap().contains("skipped"));

    let list = sdm(&["sweep", "--config", arg(&cfg), "--gamma", "1.1,1.2"]);
    assert_eq!(list.status.code(), Some(2));
}

#[test]
fn mesh_export_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.json", &small_config(dir.path(), 3));
    let mesh = dir.path().join("region.acmesh");
    let o = sdm(&["mesh", "--config", arg(&cfg), "--out", arg(&mesh)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let loaded = sdm_core::mesh::load_mesh(&mesh).unwrap();
    assert!(loaded.loop_nodes("inner").is_some() && loaded.loop_nodes("outer").is_some());

    // The exported mesh drives an identical sweep.
    let mut c = small_config(dir.path(), 3);
    c["geometry"]["region_mesh"] = json!(mesh);
    let from_file = write_config(dir.path(), "file.json", &c);
    let a = sdm(&["sweep", "--config", arg(&cfg), "--threads", "1"]);
    let b = sdm(&["sweep", "--config", arg(&from_file), "--threads", "1"]);
    assert_eq!(b.status.code(), Some(0), "{}", stderr(&b));
    assert_eq!(a.stdout, b.stdout);
}
