use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pumi::ecology::{EcologyConfig, ParamFile};
use pumi::geometry::{convex_hull, point_in_hull, Point2};
use pumi::testfn::{franke, halton_points};

fn pumi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pumi"))
        .args(args)
        .env_remove("PUMI_THREADS")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_points(file: &Path, pts: &[Point2], f: impl Fn(Point2) -> f64) {
    let mut text = String::from("x,y,f\n");
    for p in pts {
        text += &format!("{},{},{}\n", p.x, p.y, f(*p));
    }
    std::fs::write(file, text).unwrap();
}

fn read_rows(file: &Path) -> (String, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(file).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn write_params(file: &Path, edit: impl FnOnce(&mut ParamFile)) {
    let mut pf = ParamFile::from(&EcologyConfig::dolomiti_bellunesi());
    edit(&mut pf);
    std::fs::write(file, serde_json::to_string_pretty(&pf).unwrap()).unwrap();
}

#[test]
fn interpolate_on_grid_and_at_sites() {
    let dir = tempfile::tempdir().unwrap();
    let input = path(dir.path(), "pts.csv");
    let sites = halton_points(1024);
    write_points(&input, &sites, |p| franke(p.x, p.y));

    let out = path(dir.path(), "grid.csv");
    let o = pumi(&["interpolate", "--input", s(&input), "--output", s(&out), "--grid", "40"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = read_rows(&out);
    assert_eq!(header, "x,y,value");
    let hull = convex_hull(&sites).unwrap();
    let (lo_x, hi_x) = sites.iter().fold((f64::MAX, f64::MIN), |(a, b), p| (a.min(p.x), b.max(p.x)));
    let (lo_y, hi_y) = sites.iter().fold((f64::MAX, f64::MIN), |(a, b), p| (a.min(p.y), b.max(p.y)));
    let in_hull = (0..40)
        .flat_map(|j| (0..40).map(move |i| (i, j)))
        .filter(|&(i, j)| {
            let p = Point2::new(
                lo_x + (hi_x - lo_x) * i as f64 / 39.0,
                lo_y + (hi_y - lo_y) * j as f64 / 39.0,
            );
            point_in_hull(p, &hull)
        })
        .count();
    assert_eq!(rows.len(), in_hull);
    assert!(rows.len() < 1600);
    for r in &rows {
        assert!((r[2] - franke(r[0], r[1])).abs() < 1e-3);
    }

    let at_sites = path(dir.path(), "sites.csv");
    let o = pumi(&[
        "interpolate", "--input", s(&input), "--output", s(&at_sites), "--queries", s(&input),
        "--structure", "kdtree",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (_, rows) = read_rows(&at_sites);
    assert_eq!(rows.len(), 1024);
    for (r, p) in rows.iter().zip(&sites) {
        assert!((r[2] - franke(p.x, p.y)).abs() <= 1e-6 * 2.3);
    }
}

#[test]
fn malformed_csv_exits_2_with_row() {
    let dir = tempfile::tempdir().unwrap();
    let input = path(dir.path(), "bad.csv");
    let mut text = String::from("x,y,f\n");
    for p in halton_points(20) {
        text += &format!("{},{},1\n", p.x, p.y);
    }
    text += "0.5,oops,1\n";
    std::fs::write(&input, text).unwrap();
    let o = pumi(&["interpolate", "--input", s(&input), "--output", s(&path(dir.path(), "o.csv"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("row 22"), "{}", stderr(&o));
}

#[test]
fn uncovered_sites_exit_3_with_indices() {
    let dir = tempfile::tempdir().unwrap();
    let input = path(dir.path(), "tri.csv");
    // only the (0, 0) corner of the bounding square is inside this triangle
    let mut pts = vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.5), Point2::new(0.5, 1.0)];
    for k in 0..13 {
        let t = 0.02 * (k + 1) as f64;
        pts.push(Point2::new(t, 0.5 * t + 0.01));
    }
    write_points(&input, &pts, |p| p.x);
    let o = pumi(&["interpolate", "--input", s(&input), "--output", s(&path(dir.path(), "o.csv"))]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("[1, 2]"), "{}", stderr(&o));
}

#[test]
fn too_few_sites_is_malformed() {
    let dir = tempfile::tempdir().unwrap();
    let input = path(dir.path(), "few.csv");
    write_points(&input, &halton_points(10), |p| p.x);
    let o = pumi(&["interpolate", "--input", s(&input), "--output", s(&path(dir.path(), "o.csv"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn benchmark_writes_timing_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "bench.csv");
    let o = pumi(&["benchmark", "--sizes", "200,1000", "--seed", "3", "--output", s(&out), "--repeats", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "structure,N,build_seconds,total_query_seconds,queries_per_second"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 6);
    assert!(rows[0].starts_with("block,200,"));
    assert!(rows[4].starts_with("kdtree,1000,"));
}

#[test]
fn simulate_park_and_equilibrium() {
    let dir = tempfile::tempdir().unwrap();
    let params = path(dir.path(), "park.json");
    write_params(&params, |_| {});
    let out = path(dir.path(), "traj.csv");
    let o = pumi(&["simulate", "--input", s(&params), "--output", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = read_rows(&out);
    assert_eq!(header, "t,H,G,T");
    assert_eq!(rows.len(), 7301);
    assert_eq!(rows.last().unwrap()[0], 3650.0);
    assert!(rows.iter().all(|r| r[1] > 0.0));

    let e1 = path(dir.path(), "e1.json");
    let cfg = EcologyConfig::dolomiti_bellunesi();
    write_params(&e1, |pf| {
        pf.initial_state = Some(cfg.params.herbivore_free_equilibrium());
    });
    let o = pumi(&["simulate", "--input", s(&e1), "--output", s(&out), "--horizon", "100"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (_, rows) = read_rows(&out);
    assert_eq!(rows.len(), 201);
    assert!(rows.iter().all(|r| r[1..] == [0.0, cfg.params.k1, cfg.params.k2]));
}

#[test]
fn simulate_error_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "traj.csv");

    let missing = path(dir.path(), "missing.json");
    write_params(&missing, |pf| {
        pf.a = None;
        pf.b = None;
    });
    let o = pumi(&["simulate", "--input", s(&missing), "--output", s(&out)]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("a, b"), "{}", stderr(&o));

    let params = path(dir.path(), "park.json");
    write_params(&params, |_| {});
    let o = pumi(&["simulate", "--input", s(&params), "--output", s(&out), "--dt", "1000", "--horizon", "100000"]);
    assert_eq!(o.status.code(), Some(5));
    assert!(stderr(&o).contains("t = "), "{}", stderr(&o));

    let broken = path(dir.path(), "broken.json");
    std::fs::write(&broken, "{\"mu\": 0.03,").unwrap();
    let o = pumi(&["simulate", "--input", s(&broken), "--output", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
}

fn surface_args<'a>(params: &'a str, prefix: &'a str, grid: &'a str, mu: &'a str) -> Vec<&'a str> {
    vec![
        "surface", "--input", params, "--output", prefix, "--grid", grid, "--e-range", "0.6:0.61",
        "--alpha-range", "19.9:20.1", "--mu-range", mu, "--bracket-steps", "40",
    ]
}

#[test]
fn small_surface_run_reports_samples_only_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let params = path(dir.path(), "park.json");
    write_params(&params, |_| {});
    let a = dir.path().join("a").to_str().unwrap().to_string();
    let b = dir.path().join("b").to_str().unwrap().to_string();
    let o = pumi(&surface_args(s(&params), &a, "2x2", "0.028:0.032"));
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = read_rows(Path::new(&format!("{a}_samples.csv")));
    assert_eq!(header, "e,alpha,mu_star,iterations,bracket_width");
    assert_eq!(rows.len(), 4);
    assert!(!Path::new(&format!("{a}_surface.csv")).exists());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(format!("{a}_report.json")).unwrap()).unwrap();
    assert_eq!(report["samples"], 4);
    assert_eq!(report["surface_built"], false);

    let o = pumi(&surface_args(s(&params), &b, "2x2", "0.028:0.032"));
    assert!(o.status.success(), "{}", stderr(&o));
    for suffix in ["_samples.csv", "_report.json"] {
        assert_eq!(
            std::fs::read(format!("{a}{suffix}")).unwrap(),
            std::fs::read(format!("{b}{suffix}")).unwrap()
        );
    }
}

#[test]
fn surface_without_any_bracket_exits_6() {
    let dir = tempfile::tempdir().unwrap();
    let params = path(dir.path(), "park.json");
    write_params(&params, |_| {});
    let prefix = dir.path().join("x").to_str().unwrap().to_string();
    let o = pumi(&surface_args(s(&params), &prefix, "2x1", "0.1:0.2"));
    assert_eq!(o.status.code(), Some(6), "{}", stderr(&o));
    assert!(Path::new(&format!("{prefix}_report.json")).exists());
}

#[test]
fn help_documents_exit_codes() {
    let o = pumi(&["--help"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    for code in ["0  success", "2  malformed", "3  data sites", "4  feeding", "5  numerical", "6  no grid"] {
        assert!(text.contains(code), "{code}");
    }
    assert!(text.contains("PUMI_THREADS"));
}

#[test]
fn invalid_thread_count_is_rejected() {
    let o = Command::new(env!("CARGO_BIN_EXE_pumi"))
        .args(["benchmark", "--sizes", "100", "--output", "/dev/null"])
        .env("PUMI_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
