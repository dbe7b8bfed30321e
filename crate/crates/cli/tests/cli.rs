use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn pasym(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pasym"))
        .args(args)
        .output()
        .expect("spawn pasym")
}

fn ok(args: &[&str]) -> String {
    let out = pasym(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json_line(stdout: &str) -> serde_json::Value {
    serde_json::from_str(stdout.lines().next().unwrap()).unwrap()
}

/// Report JSON with the timing fields removed.
fn without_timings(mut v: serde_json::Value) -> serde_json::Value {
    match &mut v {
        serde_json::Value::Object(map) => {
            map.remove("wall_ms");
            for x in map.values_mut() {
                *x = without_timings(x.take());
            }
        }
        serde_json::Value::Array(items) => {
            for x in items.iter_mut() {
                *x = without_timings(x.take());
            }
        }
        _ => {}
    }
    v
}

#[test]
fn gen_and_voxelize_print_stats() {
    let dir = tempfile::tempdir().unwrap();
    let (vol, mesh) = (path(&dir, "cube.pasvol"), path(&dir, "cube.off"));
    let out = ok(&[
        "gen",
        "--shape",
        "box",
        "--half-extents",
        "1,1,1",
        "--max-dim",
        "32",
        "--out",
        s(&vol),
        "--mesh-out",
        s(&mesh),
    ]);
    let stats = json_line(&out);
    assert!((stats["r"].as_f64().unwrap() - 3f64.sqrt()).abs() < 0.1);

    let vox = path(&dir, "vox.pasvol");
    let out = ok(&[
        "voxelize",
        "--in",
        s(&mesh),
        "--out",
        s(&vox),
        "--max-dim",
        "40",
    ]);
    let stats = json_line(&out);
    assert!((stats["r"].as_f64().unwrap() - 3f64.sqrt()).abs() < 0.1);
    assert!(stats["voxels"].as_u64().unwrap() > 0);

    let coarse = pasym(&[
        "voxelize",
        "--in",
        s(&mesh),
        "--out",
        s(&vox),
        "--max-dim",
        "8",
    ]);
    assert!(coarse.status.success());
    assert!(String::from_utf8_lossy(&coarse.stderr).contains("warning"));
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = path(&dir, "nope.off");
    let out = pasym(&[
        "voxelize",
        "--in",
        s(&missing),
        "--out",
        s(&path(&dir, "v.pasvol")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no such file"));

    let vol = path(&dir, "ball.pasvol");
    ok(&[
        "gen",
        "--shape",
        "ball",
        "--max-dim",
        "16",
        "--out",
        s(&vol),
    ]);
    let out = pasym(&[
        "refl-map",
        "--in",
        s(&vol),
        "--directions",
        "5",
        "--out",
        s(&path(&dir, "m.csv")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = pasym(&[
        "detect",
        "--in",
        s(&missing),
        "--out",
        s(&path(&dir, "r.json")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tiny_delta_exceeds_the_net_cap() {
    let dir = tempfile::tempdir().unwrap();
    let vol = path(&dir, "lat.pasvol");
    ok(&[
        "gen",
        "--shape",
        "lattice",
        "--cells",
        "4",
        "--strut",
        "0.1",
        "--max-dim",
        "32",
        "--out",
        s(&vol),
    ]);
    let out = pasym(&[
        "detect",
        "--in",
        s(&vol),
        "--delta",
        "1e-6",
        "--truncation",
        "0",
        "--out",
        s(&path(&dir, "r.json")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("exceeds the cap") && err.contains("--delta"),
        "{err}"
    );
}

#[test]
fn ball_report_has_a_continuous_rotation() {
    let dir = tempfile::tempdir().unwrap();
    let (vol, rep) = (path(&dir, "ball.pasvol"), path(&dir, "ball.json"));
    ok(&[
        "gen",
        "--shape",
        "ball",
        "--max-dim",
        "20",
        "--out",
        s(&vol),
    ]);
    let args = [
        "detect",
        "--in",
        s(&vol),
        "--delta",
        "0.25",
        "--carve-deg",
        "60",
        "--max-fold",
        "6",
        "--out",
        s(&rep),
    ];
    let stdout = ok(&args);
    assert!(stdout.contains("cont"));
    let first = std::fs::read_to_string(&rep).unwrap();
    let report: serde_json::Value = serde_json::from_str(&first).unwrap();
    let syms = report["symmetries"].as_array().unwrap();
    assert!(syms
        .iter()
        .any(|r| r["kind"] == "rotation" && r["fold"] == 0));
    for key in ["shape", "config", "net_size", "evaluations"] {
        assert!(report.get(key).is_some(), "missing {key}");
    }

    // Same seed, same artifact (timings aside), with a different thread count.
    let rep2 = path(&dir, "ball2.json");
    let mut args2 = args.to_vec();
    *args2.last_mut().unwrap() = s(&rep2);
    args2.splice(0..0, ["--threads", "2"]);
    ok(&args2);
    let second: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&rep2).unwrap()).unwrap();
    assert_eq!(without_timings(report), without_timings(second));
}

#[test]
fn box_reflection_map() {
    let dir = tempfile::tempdir().unwrap();
    let (vol, csv) = (path(&dir, "box.pasvol"), path(&dir, "map.csv"));
    ok(&["gen", "--shape", "box", "--max-dim", "32", "--out", s(&vol)]);
    ok(&[
        "refl-map",
        "--in",
        s(&vol),
        "--directions",
        "1000",
        "--out",
        s(&csv),
    ]);
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("nx,ny,nz,distortion"));
    let mut rows: Vec<[f64; 4]> = lines
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            assert!(l
                .split(',')
                .all(|x| x.split('.').nth(1).is_some_and(|f| f.len() == 6)));
            [v[0], v[1], v[2], v[3]]
        })
        .collect();
    assert_eq!(rows.len(), 1000);
    rows.sort_by(|a, b| a[3].total_cmp(&b[3]));
    let mut axes: Vec<usize> = rows[..3]
        .iter()
        .map(|r| {
            (0..3)
                .max_by(|&a, &b| r[a].abs().total_cmp(&r[b].abs()))
                .unwrap()
        })
        .collect();
    for r in &rows[..3] {
        assert!(r[..3].iter().any(|x| x.abs() > 0.99), "{r:?}");
    }
    axes.sort();
    assert_eq!(axes, vec![0, 1, 2]);

    let again = path(&dir, "map2.csv");
    ok(&[
        "refl-map",
        "--in",
        s(&vol),
        "--directions",
        "1000",
        "--out",
        s(&again),
    ]);
    assert_eq!(std::fs::read(&csv).unwrap(), std::fs::read(&again).unwrap());

    let ball = path(&dir, "ball.pasvol");
    ok(&[
        "gen",
        "--shape",
        "ball",
        "--max-dim",
        "64",
        "--out",
        s(&ball),
    ]);
    ok(&[
        "refl-map",
        "--in",
        s(&ball),
        "--directions",
        "50",
        "--exact",
        "--out",
        s(&csv),
    ]);
    let text = std::fs::read_to_string(&csv).unwrap();
    for l in text.lines().skip(1) {
        let d: f64 = l.rsplit(',').next().unwrap().parse().unwrap();
        assert!(d <= 0.02, "{l}");
    }
}

#[test]
fn generated_files_are_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (path(&dir, "a.pasvol"), path(&dir, "b.pasvol"));
    for p in [&a, &b] {
        ok(&[
            "gen",
            "--shape",
            "dodecahedron",
            "--max-dim",
            "24",
            "--out",
            s(p),
        ]);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let mesh = path(&dir, "ico.obj");
    ok(&[
        "gen",
        "--shape",
        "icosahedron",
        "--max-dim",
        "16",
        "--out",
        s(&a),
        "--mesh-out",
        s(&mesh),
    ]);
    for p in [&a, &b] {
        ok(&[
            "voxelize",
            "--in",
            s(&mesh),
            "--out",
            s(p),
            "--max-dim",
            "24",
            "--random-rotate",
            "--seed",
            "3",
        ]);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}
