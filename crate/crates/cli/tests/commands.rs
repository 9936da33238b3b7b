use std::path::{Path, PathBuf};
use std::process::Command;

use meshpart::{evaluate, GeometricGraph, MetricsReport, Partition, Point};
use meshpart_cli::{ratio_table, Cell, COMPARED_METRICS};
use tempfile::TempDir;

fn meshpart(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_meshpart"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Mesh {
    graph: PathBuf,
    coords: PathBuf,
}

fn generate(dir: &TempDir, name: &str, extra: &[&str]) -> Mesh {
    let mesh = Mesh {
        graph: dir.path().join(format!("{name}.graph")),
        coords: dir.path().join(format!("{name}.xyz")),
    };
    let mut args = vec![
        "generate",
        "--graph",
        path_str(&mesh.graph),
        "--coords",
        path_str(&mesh.coords),
    ];
    args.extend_from_slice(extra);
    let (code, _, err) = meshpart(&args);
    assert_eq!(code, 0, "{err}");
    mesh
}

fn write_path4(dir: &TempDir) -> Mesh {
    let mesh = Mesh {
        graph: dir.path().join("path.graph"),
        coords: dir.path().join("path.xyz"),
    };
    std::fs::write(&mesh.graph, "4 3\n2\n1 3\n2 4\n3\n").unwrap();
    std::fs::write(&mesh.coords, "0 0\n1 0\n2 0\n3 0\n").unwrap();
    mesh
}

#[test]
fn generate_grid_writes_header() {
    let dir = TempDir::new().unwrap();
    let mesh = generate(&dir, "g", &["--kind", "grid", "--side", "3", "--dim", "2"]);
    let text = std::fs::read_to_string(&mesh.graph).unwrap();
    assert_eq!(text.lines().next().unwrap(), "9 12");
    assert_eq!(
        std::fs::read_to_string(&mesh.coords)
            .unwrap()
            .lines()
            .count(),
        9
    );
}

#[test]
fn generate_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let args = [
        "--kind", "rgg", "--n", "3000", "--dim", "2", "--deg", "12", "--seed", "5",
    ];
    let a = generate(&dir, "a", &args);
    let b = generate(&dir, "b", &args);
    assert_eq!(
        std::fs::read(&a.graph).unwrap(),
        std::fs::read(&b.graph).unwrap()
    );
    assert_eq!(
        std::fs::read(&a.coords).unwrap(),
        std::fs::read(&b.coords).unwrap()
    );
}

#[test]
fn generated_rgg_round_trips_through_partition() {
    let dir = TempDir::new().unwrap();
    let mesh = generate(
        &dir,
        "r",
        &[
            "--kind", "rgg", "--n", "10000", "--dim", "2", "--deg", "12", "--seed", "1",
        ],
    );
    let out = dir.path().join("r.part");
    let (code, stdout, err) = meshpart(&[
        "partition",
        "--k",
        "8",
        "--graph",
        path_str(&mesh.graph),
        "--coords",
        path_str(&mesh.coords),
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(stdout.contains("balanced=true"), "{stdout}");
    assert_eq!(
        std::fs::read_to_string(&out).unwrap().lines().count(),
        10_000
    );
}

fn summary_value<'a>(summary: &'a str, key: &str) -> &'a str {
    summary
        .split_whitespace()
        .find_map(|f| f.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("{key} missing in {summary}"))
}

#[test]
fn partition_grid_summary() {
    let dir = TempDir::new().unwrap();
    let mesh = generate(&dir, "g", &["--kind", "grid", "--side", "16", "--dim", "2"]);
    let out = dir.path().join("g.part");
    let report = dir.path().join("g.tsv");
    let (code, stdout, err) = meshpart(&[
        "partition",
        "--algo",
        "geographer",
        "--k",
        "4",
        "--graph",
        path_str(&mesh.graph),
        "--coords",
        path_str(&mesh.coords),
        "--out",
        path_str(&out),
        "--report",
        path_str(&report),
    ]);
    assert_eq!(code, 0, "{err}");
    let imbalance: f64 = summary_value(&stdout, "imbalance").parse().unwrap();
    assert!(imbalance <= 0.03);
    for key in ["k", "epsilon", "iterations", "time"] {
        summary_value(&stdout, key);
    }
    let parsed = MetricsReport::from_tsv(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(parsed.k(), 4);

    // k = 1 gives a zero cut; rcb writes a partition of the same length.
    let (code, stdout, _) = meshpart(&[
        "partition",
        "--k",
        "1",
        "--graph",
        path_str(&mesh.graph),
        "--coords",
        path_str(&mesh.coords),
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code, 0);
    assert_eq!(summary_value(&stdout, "cut"), "0");
    let (code, _, _) = meshpart(&[
        "partition",
        "--algo",
        "rcb",
        "--k",
        "4",
        "--graph",
        path_str(&mesh.graph),
        "--coords",
        path_str(&mesh.coords),
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code, 0);
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 256);
}

#[test]
fn unbalanced_result_exits_with_two_and_still_writes() {
    let dir = TempDir::new().unwrap();
    // Vertex weights 10, 1, 1: some block weighs at least 10 > ceil(12/2).
    let graph = dir.path().join("w.graph");
    let coords = dir.path().join("w.xyz");
    std::fs::write(&graph, "3 2 010\n10 2\n1 1 3\n1 2\n").unwrap();
    std::fs::write(&coords, "0 0\n1 0\n2 0\n").unwrap();
    let out = dir.path().join("w.part");
    let (code, stdout, err) = meshpart(&[
        "partition",
        "--algo",
        "sfc",
        "--k",
        "2",
        "--epsilon",
        "0",
        "--graph",
        path_str(&graph),
        "--coords",
        path_str(&coords),
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code, 2, "{stdout}{err}");
    assert!(stdout.contains("balanced=false"));
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 3);
}

#[test]
fn parse_errors_name_file_and_line() {
    let dir = TempDir::new().unwrap();
    let graph = dir.path().join("bad.graph");
    let coords = dir.path().join("bad.xyz");
    std::fs::write(&graph, "3 2\n2\n1 x\n2\n").unwrap();
    std::fs::write(&coords, "0 0\n1 0\n2 0\n").unwrap();
    let (code, _, err) = meshpart(&[
        "partition",
        "--k",
        "2",
        "--graph",
        path_str(&graph),
        "--coords",
        path_str(&coords),
        "--out",
        path_str(&dir.path().join("p")),
    ]);
    assert_eq!(code, 1);
    assert!(err.contains("bad.graph") && err.contains(":3:"), "{err}");
}

#[test]
fn evaluate_path_fixture() {
    let dir = TempDir::new().unwrap();
    let mesh = write_path4(&dir);
    let part = dir.path().join("p");
    std::fs::write(&part, "0\n0\n1\n1\n").unwrap();
    let report = dir.path().join("r.tsv");
    let (code, stdout, err) = meshpart(&[
        "evaluate",
        "--graph",
        path_str(&mesh.graph),
        "--coords",
        path_str(&mesh.coords),
        "--partition",
        path_str(&part),
        "--report",
        path_str(&report),
    ]);
    assert_eq!(code, 0, "{err}");
    for line in ["edge_cut: 1", "max_comm: 1", "total_comm: 2"] {
        assert!(stdout.lines().any(|l| l == line), "{stdout}");
    }
    let parsed = MetricsReport::from_tsv(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let graph = meshpart_cli::load_graph(&mesh.graph, &mesh.coords).unwrap();
    let in_memory = evaluate(&graph, &Partition::new(vec![0, 0, 1, 1], 2).unwrap()).unwrap();
    assert_eq!(parsed, in_memory);

    std::fs::write(&part, "0\n0\n0\n0\n").unwrap();
    let (_, stdout, _) = meshpart(&[
        "evaluate",
        "--graph",
        path_str(&mesh.graph),
        "--coords",
        path_str(&mesh.coords),
        "--partition",
        path_str(&part),
    ]);
    for line in ["edge_cut: 0", "max_comm: 0", "total_comm: 0"] {
        assert!(stdout.lines().any(|l| l == line), "{stdout}");
    }
}

#[test]
fn evaluate_length_mismatch_names_both_files() {
    let dir = TempDir::new().unwrap();
    let mesh = write_path4(&dir);
    let part = dir.path().join("short.part");
    std::fs::write(&part, "0\n1\n").unwrap();
    let (code, _, err) = meshpart(&[
        "evaluate",
        "--graph",
        path_str(&mesh.graph),
        "--coords",
        path_str(&mesh.coords),
        "--partition",
        path_str(&part),
    ]);
    assert_eq!(code, 1);
    assert!(
        err.contains("short.part") && err.contains("path.graph"),
        "{err}"
    );
}

fn path4_graph() -> GeometricGraph {
    let coords = (0..4).map(|i| Point::xy(i as f64, 0.0)).collect();
    GeometricGraph::new(
        vec![0, 1, 3, 5, 6],
        vec![1, 0, 2, 1, 3, 2],
        None,
        coords,
        None,
    )
    .unwrap()
}

fn cell(instance: &str, algo: &str, report: Option<MetricsReport>) -> Cell {
    Cell {
        instance: instance.into(),
        algo: algo.into(),
        report,
        balanced: true,
        seconds: 0.0,
    }
}

#[test]
fn ratios_of_hand_made_partitions() {
    let g = path4_graph();
    // {0,1},{2,3}: cut 1, comm (1, 2), diameters 1 and 1.
    let halves = evaluate(&g, &Partition::new(vec![0, 0, 1, 1], 2).unwrap()).unwrap();
    // {0,2},{1,3}: cut 3, comm (2, 4), both blocks disconnected.
    let alternating = evaluate(&g, &Partition::new(vec![0, 1, 0, 1], 2).unwrap()).unwrap();
    // {0},{1,2,3}: cut 1, comm (1, 2), diameters 0 and 2.
    let split = evaluate(&g, &Partition::new(vec![0, 1, 1, 1], 2).unwrap()).unwrap();
    let cells = vec![
        cell("a", "geographer", Some(halves.clone())),
        cell("a", "other", Some(alternating)),
        cell("b", "geographer", Some(halves)),
        cell("b", "other", Some(split)),
    ];
    let rows = ratio_table(&cells, "geographer");
    assert_eq!(rows[0].ratios, [Some(1.0); 4]);
    let other = &rows[1].ratios;
    // Cut ratios 3 and 1, comm ratios 2 and 1 (max) / 2 and 1 (total).
    assert!((other[0].unwrap() - 3f64.sqrt()).abs() < 1e-12);
    assert!((other[1].unwrap() - 2f64.sqrt()).abs() < 1e-12);
    assert!((other[2].unwrap() - 2f64.sqrt()).abs() < 1e-12);
    // Diameter ratios: unbounded (infinite) and 0/1 = 0; the harmonic mean
    // with a zero entry is zero.
    assert_eq!(other[3], Some(0.0));
}

#[test]
fn missing_cells_do_not_abort_the_table() {
    let g = path4_graph();
    let r = evaluate(&g, &Partition::new(vec![0, 0, 1, 1], 2).unwrap()).unwrap();
    let cells = vec![
        cell("a", "geographer", Some(r.clone())),
        cell("a", "rcb", None),
        cell("b", "geographer", None),
        cell("b", "rcb", Some(r)),
    ];
    let rows = ratio_table(&cells, "geographer");
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1].ratios, [None; 4]);
}

#[test]
fn compare_suite_has_three_rows_by_four_metrics() {
    let dir = TempDir::new().unwrap();
    let mut args: Vec<String> = vec!["compare".into(), "--k".into(), "8".into()];
    for seed in 0..10 {
        let mesh = generate(
            &dir,
            &format!("rgg{seed}"),
            &[
                "--kind",
                "rgg",
                "--n",
                "2000",
                "--deg",
                "12",
                "--seed",
                &seed.to_string(),
            ],
        );
        args.extend(["--graph".into(), path_str(&mesh.graph).into()]);
        args.extend(["--coords".into(), path_str(&mesh.coords).into()]);
    }
    let records = dir.path().join("records.tsv");
    args.extend(["--report".into(), path_str(&records).into()]);
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let (code, stdout, err) = meshpart(&refs);
    assert_eq!(code, 0, "{err}");
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 4, "{stdout}");
    for m in COMPARED_METRICS {
        assert!(lines[0].contains(m));
    }
    for (line, algo) in lines[1..].iter().zip(["geographer", "rcb", "sfc"]) {
        let fields: Vec<&str> = line.split_whitespace().collect();
        assert_eq!(fields.len(), 5, "{line}");
        assert_eq!(fields[0], algo);
    }
    assert!(lines[1].split_whitespace().skip(1).all(|f| f == "1.0000"));
    let text = std::fs::read_to_string(&records).unwrap();
    assert_eq!(text.lines().count(), 1 + 30);
}

#[test]
fn compare_reports_missing_instance() {
    let dir = TempDir::new().unwrap();
    let good = generate(&dir, "g", &["--kind", "grid", "--side", "8"]);
    let missing = dir.path().join("nope.graph");
    let (code, stdout, _) = meshpart(&[
        "compare",
        "--k",
        "4",
        "--algo",
        "geographer,rcb",
        "--graph",
        path_str(&good.graph),
        "--coords",
        path_str(&good.coords),
        "--graph",
        path_str(&missing),
        "--coords",
        path_str(&good.coords),
    ]);
    assert_eq!(code, 0);
    assert!(stdout.contains("nope.graph"), "{stdout}");
    assert!(stdout.lines().any(|l| l.starts_with("rcb")), "{stdout}");
}

#[test]
fn invalid_flags_are_rejected() {
    let dir = TempDir::new().unwrap();
    let mesh = write_path4(&dir);
    let out = dir.path().join("p");
    for extra in [["--k", "0"], ["--p", "0"], ["--epsilon", "-1"]] {
        let mut args = vec![
            "partition",
            "--graph",
            path_str(&mesh.graph),
            "--coords",
            path_str(&mesh.coords),
            "--out",
            path_str(&out),
        ];
        if extra[0] != "--k" {
            args.extend(["--k", "2"]);
        }
        args.extend(extra);
        let (code, _, _) = meshpart(&args);
        assert_ne!(code, 0, "{extra:?}");
    }
}
