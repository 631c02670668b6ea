use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn nfisac(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nfisac"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn manifest_of(path: &Path) -> Value {
    let mut name = path.file_name().unwrap().to_os_string();
    name.push(".manifest.json");
    read_json(&path.with_file_name(name))
}

/// Writes the collocated preset with `n × n` arrays, the target/user at
/// `y = offset`, and applies `edit`.
fn collocated(dir: &Path, name: &str, n: usize, offset: f64, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let o = nfisac(dir, &["preset", "dump", "collocated"]);
    assert_eq!(code(&o), 0);
    let mut s: Value = serde_json::from_slice(&o.stdout).unwrap();
    for a in ["tx", "rx"] {
        s[a]["count_x"] = n.into();
        s[a]["count_y"] = n.into();
    }
    s["targets"][0]["position"][1] = offset.into();
    s["users"][0]["position"][1] = offset.into();
    edit(&mut s);
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(&s).unwrap()).unwrap();
    path
}

fn csv_rows(path: &Path) -> (String, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    (header, lines.map(|l| l.split(',').map(str::to_string).collect()).collect())
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn preset_dump_writes_scenario_and_manifest() {
    let dir = TempDir::new().unwrap();
    let o = nfisac(dir.path(), &["preset", "list"]);
    assert!(String::from_utf8_lossy(&o.stdout).lines().any(|l| l == "separated-nlos"));
    let o = nfisac(dir.path(), &["preset", "dump", "separated-nlos", "--out", "s.json"]);
    assert_eq!(code(&o), 0);
    let s = read_json(&dir.path().join("s.json"));
    assert_eq!(s["users"][0]["nlos_coefficient"], 0.3);
    let m = manifest_of(&dir.path().join("s.json"));
    assert_eq!(m["scenario"], "preset:separated-nlos");
    assert!(m["build"].as_str().is_some_and(|b| !b.is_empty()));
    assert_eq!(code(&nfisac(dir.path(), &["preset", "dump", "nope"])), 1);
}

#[test]
fn design_writes_solution_and_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let scen = collocated(dir.path(), "c.json", 4, 0.02, |_| {});
    let scen = scen.to_str().unwrap();
    for out in ["a.json", "b.json"] {
        let o = nfisac(dir.path(), &["design", "--scenario", scen, "--objective", "crb", "--out", out]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let a = fs::read(dir.path().join("a.json")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b.json")).unwrap());
    let sol = read_json(&dir.path().join("a.json"));
    assert_eq!(sol["status"], "optimal");
    assert_eq!(sol["covariance"]["form"], "full");
    assert_eq!(sol["covariance"]["r_x"].as_array().unwrap().len(), 16);
    let m = manifest_of(&dir.path().join("a.json"));
    assert_eq!(m["outputs"][0], "a.json");
    assert!(m["wall_time_s"].as_f64().unwrap() > 0.0);
    assert!(m["diagnostics"]["iterations"].as_u64().unwrap() > 0);
}

#[test]
fn design_large_multi_target() {
    let dir = TempDir::new().unwrap();
    let o = nfisac(
        dir.path(),
        &["design", "--preset", "multi-target", "--sinr-db", "25", "--objective", "crb", "--out", "mt.json"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let sol = read_json(&dir.path().join("mt.json"));
    assert_eq!(sol["status"], "optimal");
    assert_eq!(sol["covariance"]["form"], "factored");
    let gamma = 10f64.powf(2.5);
    for s in sol["sinr"].as_array().unwrap() {
        assert!(s.as_f64().unwrap() >= gamma * (1.0 - 1e-5));
    }
    let m = manifest_of(&dir.path().join("mt.json"));
    assert_eq!(m["overrides"]["sinr_db"], "25");
}

#[test]
fn design_exit_codes() {
    let dir = TempDir::new().unwrap();
    let zero = collocated(dir.path(), "z.json", 3, 0.0, |s| s["targets"][0]["reflection"] = serde_json::json!([0.0, 0.0]));
    let o = nfisac(dir.path(), &["design", "--scenario", zero.to_str().unwrap(), "--objective", "echo"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("zero reflection"));

    let scen = collocated(dir.path(), "c.json", 3, 0.0, |_| {});
    let o = nfisac(
        dir.path(),
        &["design", "--scenario", scen.to_str().unwrap(), "--sinr-db", "60", "--objective", "crb", "--out", "x.json"],
    );
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("max achievable"));
    assert!(!dir.path().join("x.json").exists());

    assert_eq!(code(&nfisac(dir.path(), &["design", "--objective", "crb"])), 1);
    assert_eq!(code(&nfisac(dir.path(), &["design", "--scenario", "missing.json", "--objective", "crb"])), 1);
}

#[test]
fn beampattern_grids() {
    let dir = TempDir::new().unwrap();
    let scen = collocated(dir.path(), "c.json", 6, 0.0, |_| {});
    let o = nfisac(dir.path(), &["design", "--scenario", scen.to_str().unwrap(), "--objective", "illum", "--out", "s.json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let sol = read_json(&dir.path().join("s.json"));
    let target: Value = read_json(&scen)["targets"][0]["position"].clone();
    let (y, z) = (target[1].as_f64().unwrap(), target[2].as_f64().unwrap());

    // A single cell at the target reproduces the reported illumination.
    let cell_y = format!("{y}:{y}:1");
    let cell_z = format!("{z}:{z}:1");
    let args = ["beampattern", "--solution", "s.json", "--plane", "x=0", "--range-y", &cell_y, "--range-z", &cell_z, "--out", "one.csv"];
    assert_eq!(code(&nfisac(dir.path(), &args)), 0);
    let (header, rows) = csv_rows(&dir.path().join("one.csv"));
    assert_eq!(header, "y_m,z_m,power_w");
    assert_eq!(rows.len(), 1);
    let want = sol["illumination_w"][0].as_f64().unwrap();
    assert!((num(&rows[0][2]) - want).abs() <= 1e-9 * want);
    assert!(dir.path().join("one.csv.manifest.json").exists());

    // The midpoint layout is mirror-symmetric in y.
    let args = ["beampattern", "--solution", "s.json", "--range-y", "-0.2:0.2:9", "--range-z", "0.2:1.0:5", "--out", "g.csv"];
    assert_eq!(code(&nfisac(dir.path(), &args)), 0);
    let (_, rows) = csv_rows(&dir.path().join("g.csv"));
    assert_eq!(rows.len(), 45);
    for row in rows.chunks(9) {
        for i in 0..9 {
            let (a, b) = (num(&row[i][2]), num(&row[8 - i][2]));
            assert!((a - b).abs() <= 1e-9 * a.max(b));
        }
    }

    let args = ["beampattern", "--solution", "absent.json", "--range-y", "0:1:2", "--range-z", "0.1:1:2"];
    assert_eq!(code(&nfisac(dir.path(), &args)), 1);
    let args = ["beampattern", "--solution", "s.json", "--range-z", "0.1:1:2"];
    assert_eq!(code(&nfisac(dir.path(), &args)), 1);
}

#[test]
fn tradeoff_endpoints_and_curve() {
    let dir = TempDir::new().unwrap();
    let scen = collocated(dir.path(), "off.json", 6, 0.05, |_| {});
    let args = ["tradeoff", "--scenario", scen.to_str().unwrap(), "--objective", "crb", "--points", "2", "--out", "e.csv"];
    let o = nfisac(dir.path(), &args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (header, rows) = csv_rows(&dir.path().join("e.csv"));
    assert_eq!(header, "gamma_db,metric_value,status");
    assert_eq!(rows.len(), 2);
    let ends = read_json(&dir.path().join("e.endpoints.json"));
    let pair = &ends["single_pair"];
    let crb_s = pair["crb_s"].as_f64().unwrap();
    let crb_c = pair["crb_c"].as_f64().unwrap();
    assert!(crb_s < crb_c);
    assert!((num(&rows[0][0]) - pair["gamma_s_db"].as_f64().unwrap()).abs() < 1e-9);
    assert!((num(&rows[0][1]) - crb_s).abs() <= 1e-4 * crb_s);
    for r in &rows {
        let v = num(&r[1]);
        assert!(v >= crb_s * (1.0 - 1e-4) && v <= crb_c * (1.0 + 1e-4));
    }
    assert!(dir.path().join("e.endpoints.json.manifest.json").exists());
}

#[test]
fn tradeoff_multi_target_is_monotone() {
    let dir = TempDir::new().unwrap();
    let o = nfisac(dir.path(), &["preset", "dump", "multi-target"]);
    let mut s: Value = serde_json::from_slice(&o.stdout).unwrap();
    let dz = 0.1;
    for a in ["tx", "rx"] {
        s[a]["count_x"] = 4.into();
        s[a]["count_y"] = 4.into();
    }
    s["rx"]["center"] = serde_json::json!([0.0, 0.0, dz]);
    s["targets"][0]["position"] = serde_json::json!([0.0, 0.0, 0.75 * dz]);
    s["targets"][1]["position"] = serde_json::json!([0.0, dz / 8.0, dz / 3.0]);
    s["users"][0]["position"] = serde_json::json!([0.0, 0.0, dz / 4.0]);
    s["users"][1]["position"] = serde_json::json!([0.0, 0.0, dz / 2.0]);
    fs::write(dir.path().join("mt.json"), s.to_string()).unwrap();
    for (objective, sign) in [("crb", 1.0), ("illum", -1.0)] {
        let out = format!("{objective}.csv");
        let args = ["tradeoff", "--scenario", "mt.json", "--objective", objective, "--points", "6", "--out", &out];
        let o = nfisac(dir.path(), &args);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let (_, rows) = csv_rows(&dir.path().join(&out));
        assert!(rows.iter().all(|r| r[2] == "optimal"));
        for w in rows.windows(2) {
            let (a, b) = (num(&w[0][1]), num(&w[1][1]));
            assert!(sign * (b - a) >= -1e-6 * a, "{objective}: {a} then {b}");
        }
    }
}

#[test]
fn distance_sweep_is_symmetric() {
    let dir = TempDir::new().unwrap();
    let scen = collocated(dir.path(), "c.json", 6, 0.0, |_| {});
    let args = ["tradeoff", "--scenario", scen.to_str().unwrap(), "--distance", "-0.2:0.2:5", "--out", "d.csv"];
    let o = nfisac(dir.path(), &args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (header, rows) = csv_rows(&dir.path().join("d.csv"));
    assert_eq!(header, "d_m,crb_ps,crb_pc,crb_iso,sinr_ps,sinr_pc");
    for i in 0..5 {
        for c in 1..4 {
            let (a, b) = (num(&rows[i][c]), num(&rows[4 - i][c]));
            assert!((a - b).abs() <= 0.01 * a.max(b));
        }
    }
}

#[test]
fn validate_levels() {
    let dir = TempDir::new().unwrap();
    let scen = collocated(dir.path(), "c.json", 3, 0.0, |_| {});
    let o = nfisac(dir.path(), &["validate", "--scenario", scen.to_str().unwrap(), "--level", "quick"]);
    let out = String::from_utf8_lossy(&o.stdout).into_owned();
    assert_eq!(code(&o), 0, "{out}");
    assert!(out.contains("PASS  fim-brute-force"));
    assert!(out.contains("PASS  collocated-closed-form"));
    assert!(!out.contains("direct-vs-reduced"));

    let scen = collocated(dir.path(), "c4.json", 4, 0.03, |_| {});
    let o = nfisac(dir.path(), &["validate", "--scenario", scen.to_str().unwrap(), "--level", "full"]);
    let out = String::from_utf8_lossy(&o.stdout).into_owned();
    assert_eq!(code(&o), 0, "{out}");
    assert!(out.contains("PASS  direct-vs-reduced"));

    let empty = collocated(dir.path(), "e.json", 3, 0.0, |s| s["targets"] = serde_json::json!([]));
    let o = nfisac(dir.path(), &["validate", "--scenario", empty.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("at least one target"));
}

#[test]
fn thread_cap_is_validated() {
    let dir = TempDir::new().unwrap();
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_nfisac"))
            .current_dir(dir.path())
            .env("NFISAC_THREADS", threads)
            .args(["preset", "list"])
            .output()
            .unwrap()
    };
    assert_eq!(code(&run("2")), 0);
    assert_eq!(code(&run("0")), 1);
    assert_eq!(code(&run("many")), 1);
}
