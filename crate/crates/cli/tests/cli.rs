use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trilayer"))
        .args(args)
        .output()
        .expect("spawn trilayer")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Free `w x h` map at 0.05 m with a one-cell border of occupied pixels.
fn write_open_map(dir: &Path, w: usize, h: usize) -> String {
    let mut pgm = format!("P5\n{w} {h}\n255\n").into_bytes();
    for r in 0..h {
        for c in 0..w {
            let border = r == 0 || c == 0 || r == h - 1 || c == w - 1;
            pgm.push(if border { 0 } else { 254 });
        }
    }
    fs::write(dir.join("open.pgm"), pgm).unwrap();
    let sidecar = dir.join("open.yaml");
    fs::write(&sidecar, "image: open.pgm\nresolution: 0.05\norigin: [0.0, 0.0, 0.0]\n").unwrap();
    sidecar.display().to_string()
}

fn drop_column(csv: &str, name: &str) -> String {
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == name).unwrap();
    csv.lines()
        .map(|l| {
            let mut f: Vec<&str> = l.split(',').collect();
            f.remove(col);
            f.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn plan_records_are_deterministic_and_paired() {
    let a = bin(&["plan", "--map", "fixture:corridor"]);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    let b = bin(&["plan", "--map", "fixture:corridor"]);
    let text = stdout(&a);
    assert!(text.starts_with("scenario_id,variant,expanded_states,graph_size,planning_time"));
    assert_eq!(drop_column(&text, "planning_time"), drop_column(&stdout(&b), "planning_time"));
    let off = bin(&["plan", "--map", "fixture:corridor", "--pruning", "off"]);
    let field = |csv: &str, name: &str| -> f64 {
        let mut lines = csv.lines();
        let header: Vec<&str> = lines.next().unwrap().split(',').collect();
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        row[header.iter().position(|h| *h == name).unwrap()].parse().unwrap()
    };
    let on_text = stdout(&a);
    let off_text = stdout(&off);
    assert!(field(&on_text, "path_cost") / field(&off_text, "path_cost") <= 1.05);
    assert!(field(&on_text, "expanded_states") < field(&off_text, "expanded_states"));
}

#[test]
fn plan_on_map_file_with_json_and_path_out() {
    let dir = TempDir::new().unwrap();
    let map = write_open_map(dir.path(), 80, 60);
    let path_out = dir.path().join("path.txt");
    let o = bin(&[
        "--format", "json", "plan", "--map", &map, "--start", "0.55 0.55 0", "--goal", "3.05 2.05 1.5708",
        "--path-out", path_out.to_str().unwrap(), "--id", "open",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v[0]["scenario_id"], "open");
    assert_eq!(v[0]["outcome"], "OK");
    let poses = fs::read_to_string(path_out).unwrap();
    assert!(poses.lines().count() > 10);
}

#[test]
fn exit_codes_distinguish_input_and_no_path() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.pgm");
    fs::write(&bad, b"P5\n10 10\n255\nshort").unwrap();
    let sidecar = dir.path().join("bad.yaml");
    fs::write(&sidecar, "image: bad.pgm\nresolution: 0.05\norigin: [0, 0, 0]\n").unwrap();
    let o = bin(&["plan", "--map", sidecar.to_str().unwrap(), "--start", "0.1 0.1 0", "--goal", "0.3 0.3 0"]);
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("bad.pgm") && msg.contains("byte offset"), "{msg}");

    let map = write_open_map(dir.path(), 80, 60);
    // Goal on the border wall: no collision-free goal state.
    let o = bin(&["plan", "--map", &map, "--start", "0.55 0.55 0", "--goal", "3.95 0.02 0"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stdout(&o).contains("NO_PATH"));
    let o = bin(&["plan", "--map", &map, "--start", "0.55 0.55 0", "--goal", "30 30 0"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(bin(&["plan", "--map", "fixture:nowhere"]).status.code(), Some(2));
    assert_eq!(bin(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn optimize_open_chain_and_report() {
    let dir = TempDir::new().unwrap();
    let map = write_open_map(dir.path(), 100, 60);
    let chain = dir.path().join("chain.txt");
    let pts: String = (0..11).map(|i| format!("{} 1.5\n", 1.0 + 0.25 * i as f64)).collect();
    fs::write(&chain, pts).unwrap();
    let report = dir.path().join("report.csv");
    let out = dir.path().join("out.txt");
    let o = bin(&[
        "optimize", "--map", &map, "--chain", chain.to_str().unwrap(), "--report", report.to_str().unwrap(),
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rep = fs::read_to_string(report).unwrap();
    let rows: Vec<&str> = rep.lines().collect();
    assert_eq!(rows[0], "iteration,objective,lambda,step_norm,accepted");
    assert_eq!(rows.len(), 2, "{rep}");
    assert_eq!(rows[1].split(',').nth(1).unwrap().parse::<f64>().unwrap(), 0.0);
    assert_eq!(fs::read_to_string(out).unwrap().lines().count(), 11);

    fs::write(&chain, "1 1\n2 2\n").unwrap();
    let o = bin(&["optimize", "--map", &map, "--chain", chain.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn run_scenario_writes_log_and_reports_failures() {
    let dir = TempDir::new().unwrap();
    write_open_map(dir.path(), 120, 60);
    let sc = dir.path().join("open.txt");
    fs::write(&sc, "map: open.yaml\nstart: 0.55 1.55 0\ngoal: 4.55 1.55 0\n").unwrap();
    let log = dir.path().join("log.csv");
    let o = bin(&["run", sc.to_str().unwrap(), "--out", log.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains(",optimized,"));
    let first = fs::read_to_string(&log).unwrap();
    assert!(first.starts_with("t,x,y,theta,v,clearance\n"));
    bin(&["run", sc.to_str().unwrap(), "--out", log.to_str().unwrap()]);
    assert_eq!(first, fs::read_to_string(&log).unwrap());
    assert!(stdout(&bin(&["run", sc.to_str().unwrap(), "--raw"])).contains(",raw,"));
    let t = bin(&["run", sc.to_str().unwrap(), "--threaded", "--speedup", "40"]);
    assert_eq!(t.status.code(), Some(0), "{}", stderr(&t));

    fs::write(&sc, "map: open.yaml\nstart: 0.55 1.55 0\ngoal: 4.55 1.55 0\nmax_time: 1\n").unwrap();
    let o = bin(&["run", sc.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("FAILED at t = 1.00 s"), "{}", stderr(&o));
    fs::write(&sc, "map: open.yaml\nwhat: 1\n").unwrap();
    assert_eq!(bin(&["run", sc.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn suite_aggregates_pairs() {
    let dir = TempDir::new().unwrap();
    let manifest = dir.path().join("suite.txt");
    fs::write(&manifest, "plan corridor fixture:corridor\nplan clutter fixture:clutter_7\nplan bogus fixture:none\n").unwrap();
    let out = dir.path().join("out");
    let o = bin(&["--threads", "2", "suite", manifest.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("unknown fixture"));
    let records = fs::read_to_string(out.join("records.csv")).unwrap();
    assert_eq!(records.lines().count(), 5);
    let agg = fs::read_to_string(out.join("aggregate.csv")).unwrap();
    let rows: Vec<Vec<&str>> = agg.lines().skip(1).map(|l| l.split(',').collect()).collect();
    let pairs: Vec<f64> = rows[..rows.len() - 1].iter().map(|r| r[3].parse().unwrap()).collect();
    let mean: f64 = rows.last().unwrap()[3].parse().unwrap();
    assert_eq!(pairs.len(), 2);
    assert!((mean - pairs.iter().sum::<f64>() / 2.0).abs() < 1e-9);

    fs::write(&manifest, "# empty\n").unwrap();
    let o = bin(&["suite", manifest.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn generators_produce_loadable_files() {
    let dir = TempDir::new().unwrap();
    let prims = dir.path().join("prims.txt");
    let o = bin(&["gen-prims", "--out", prims.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = bin(&["gen-map", "u_turn", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let sidecar = dir.path().join("u_turn.yaml");
    let o = bin(&[
        "plan", "--map", sidecar.to_str().unwrap(), "--start", "1.2 1.4 0", "--goal", "1.2 4.3 3.14159",
        "--prims", prims.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = bin(&["--seed", "9", "gen-map", "clutter", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("clutter_9.pgm").exists());
    assert_eq!(bin(&["gen-map", "castle", "--out", dir.path().to_str().unwrap()]).status.code(), Some(2));
}
