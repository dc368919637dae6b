use std::path::Path;
use std::process::{Command, Output};

fn rseik(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rseik")).args(args).output().expect("spawn rseik")
}

fn ok(args: &[&str]) -> Output {
    let o = rseik(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    o
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn solve_uniform(dir: &Path, name: &str) -> std::path::PathBuf {
    let out = dir.join(name);
    ok(&["solve", "--dims", "21,21", "--h", "0.05", "--orientations", "16", "--seed", "0,0,0", "--out", s(&out)]);
    out
}

#[test]
fn solve_writes_map_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = solve_uniform(dir.path(), "u.pogrid");
    let map = rseik::cost::io::load_distance(&out).unwrap();
    let seed = map.grid.snap(&map.meta.seeds[0]).unwrap();
    assert_eq!(map.values[seed], 0.0);
    assert!(map.values.iter().all(|v| v.is_finite() && *v >= 0.0));
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("u.pogrid.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "solve");
    assert_eq!(m["stats"]["accepted"], 21 * 21 * 16);
}

#[test]
fn trace_from_the_seed_is_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let map = solve_uniform(dir.path(), "u.pogrid");
    let csv = dir.path().join("p.csv");
    ok(&["trace", "--distance", s(&map), "--end", "0,0,0", "--out", s(&csv)]);
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,x,y,nx,ny,mode,U");
    assert_eq!(lines.len(), 2);
    assert!(dir.path().join("p.json").exists());
}

#[test]
fn trace_reaches_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let map = solve_uniform(dir.path(), "u.pogrid");
    let csv = dir.path().join("p.csv");
    ok(&["trace", "--distance", s(&map), "--end", "0.4,0,0", "--out", s(&csv)]);
    let text = std::fs::read_to_string(&csv).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').enumerate().filter(|(i, _)| *i != 5).map(|(_, v)| v.parse().unwrap()).collect())
        .collect();
    assert!(rows.len() > 5);
    let last = rows.last().unwrap();
    assert_eq!(last[0], 1.0);
    assert!(last[1].abs() < 1e-9 && last[2].abs() < 1e-9);
    assert!(rows.windows(2).all(|w| w[1][0] >= w[0][0]));
}

#[test]
fn compare_with_itself_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let map = solve_uniform(dir.path(), "u.pogrid");
    let o = ok(&["compare", s(&map), s(&map), "--expect-b-geq-a"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("max relative difference 0.000000e0"), "{text}");
    assert!(text.contains("nodes above tolerance 0.05: 0"), "{text}");
    assert!(text.contains(": 0\n"), "{text}");
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = solve_uniform(dir.path(), "a.pogrid");
    let b = solve_uniform(dir.path(), "b.pogrid");
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let (ca, cb) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for (m, c) in [(&a, &ca), (&b, &cb)] {
        ok(&["trace", "--distance", s(m), "--end", "0.3,0.2,1.0", "--out", s(c)]);
    }
    assert_eq!(std::fs::read(&ca).unwrap(), std::fs::read(&cb).unwrap());
}

#[test]
fn usage_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("u.pogrid");
    let bad_seed = rseik(&["solve", "--dims", "11,11", "--h", "0.1", "--seed", "5,5,0", "--out", s(&out)]);
    assert_eq!(bad_seed.status.code(), Some(2));
    let syntax = rseik(&["solve", "--dims", "11,11", "--h", "0.1", "--seed", "0,zero,0", "--out", s(&out)]);
    assert_eq!(syntax.status.code(), Some(2));
    let preset = rseik(&["phantom", "--preset", "three_crossings", "--out", s(&out)]);
    assert_eq!(preset.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&preset.stderr).contains("three_crossings"));
    let garbage = dir.path().join("g.pogrid");
    std::fs::write(&garbage, b"not a grid\n").unwrap();
    let bad_file = rseik(&["compare", s(&garbage), s(&garbage)]);
    assert_eq!(bad_file.status.code(), Some(2));
}

#[test]
fn mask_trace_avoids_walls() {
    let dir = tempfile::tempdir().unwrap();
    let pbm = dir.path().join("m.pbm");
    ok(&["phantom", "--preset", "pompidou_mask", "--width", "60", "--height", "40", "--out", s(&pbm)]);
    let bitmap = rseik::cost::mask::read_pnm(&pbm).unwrap();
    let walls = bitmap.grid_mask();
    let map = dir.path().join("m.pogrid");
    ok(&[
        "solve", "--mask", s(&pbm), "--h", "1", "--origin", "0,0", "--orientations", "16", "--epsilon", "0.3",
        "--seed", "5,20,0", "--out", s(&map),
    ]);
    let csv = dir.path().join("m.csv");
    ok(&[
        "trace", "--distance", s(&map), "--mask", s(&pbm), "--end", "54,20", "--all-orientations", "--step", "0.5",
        "--out", s(&csv),
    ]);
    let text = std::fs::read_to_string(&csv).unwrap();
    for l in text.lines().skip(1) {
        let v: Vec<f64> = l.split(',').take(3).map(|x| x.parse().unwrap()).collect();
        let (i, j) = (v[1].round() as usize, v[2].round() as usize);
        assert!(!walls[j * 60 + i], "sample ({}, {}) lies in a wall", v[1], v[2]);
    }
}

#[test]
fn phantom_cost_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (w, c) = (dir.path().join("w.pogrid"), dir.path().join("c.pogrid"));
    ok(&["phantom", "--preset", "two_crossings", "--n", "12", "--icosphere", "0", "--out", s(&w), "--cost-out", s(&c)]);
    let density = rseik::cost::io::load_density(&w).unwrap();
    let (grid, cost) = rseik::cost::io::load_cost(&c).unwrap();
    assert_eq!(grid.len(), 12 * 12 * 12 * 12);
    assert_eq!(density.values.len(), grid.len());
    assert!(cost.c2.iter().all(|&v| (0.25 - 1e-6..=1.0).contains(&v)));
    assert!(cost.c2.iter().any(|&v| v < 0.9));
}
