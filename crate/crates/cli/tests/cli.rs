//! End-to-end runs of the `tdirac` binary: outputs, exit codes, determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use twisted_dirac_cli::RunReport;

const SPHERE_MONOPOLE: &str = r#"
schema_version = 1
kind = "bounds"

[manifold]
type = "sphere"
radius = 1.0

[connection]
type = "constant_curvature"
degrees = [-1]

[backend]
type = "sphere_spectral"
l_max = 10.5

[solver]
count = 12

[bounds]
names = ["he_real", "he_complex", "gauss_bonnet"]
"#;

const SPHERE_UNTWISTED: &str = r#"
schema_version = 1
kind = "spectrum"

[manifold]
type = "sphere"
radius = 1.0

[connection]
type = "trivial_frame"
rank = 1

[backend]
type = "sphere_spectral"
l_max = 10.5

[solver]
count = 12
"#;

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn tdirac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tdirac")).args(args).output().expect("binary runs")
}

fn run(sub: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![sub, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    tdirac(&args)
}

fn read(path: PathBuf) -> String {
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "monopole.toml", SPHERE_MONOPOLE);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run("bounds", &cfg, &a, &[]).status.success());
    assert!(run("bounds", &cfg, &b, &["--threads", "1"]).status.success());
    for file in ["report.json", "spectrum.csv", "bounds.csv"] {
        assert_eq!(read(a.join(file)), read(b.join(file)), "{file} differs between runs");
    }
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", &SPHERE_MONOPOLE.replace("radius = 1.0", "radius_km = 1.0"));
    let out = run("bounds", &cfg, &dir.path().join("o"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("radius_km"));
    assert!(!dir.path().join("o").exists());
}

#[test]
fn subcommand_must_match_kind() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "monopole.toml", SPHERE_MONOPOLE);
    assert_eq!(run("spectrum", &cfg, &dir.path().join("o"), &[]).status.code(), Some(2));
    let missing = dir.path().join("missing.toml");
    assert_eq!(run("bounds", &missing, &dir.path().join("o"), &[]).status.code(), Some(2));
}

#[test]
fn report_round_trips_through_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "monopole.toml", SPHERE_MONOPOLE);
    let out = dir.path().join("o");
    assert!(run("bounds", &cfg, &out, &[]).status.success());
    let text = read(out.join("report.json"));
    let report: RunReport = serde_json::from_str(&text).unwrap();
    let again = serde_json::to_string_pretty(&report).unwrap() + "\n";
    assert_eq!(again, text);
    assert_eq!(serde_json::from_str::<RunReport>(&again).unwrap(), report);
    let timings: serde_json::Value = serde_json::from_str(&read(out.join("timings.json"))).unwrap();
    assert!(timings["total"].as_f64().unwrap() >= 0.0);
    assert!(!text.contains("timings"));
}

#[test]
fn monopole_bounds_verify_and_are_attained() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "monopole.toml", SPHERE_MONOPOLE);
    let out = dir.path().join("o");
    let status = run("bounds", &cfg, &out, &["--verify"]).status;
    assert_eq!(status.code(), Some(0));
    let report: RunReport = serde_json::from_str(&read(out.join("report.json"))).unwrap();
    assert_eq!(report.bounds.len(), 3);
    for b in &report.bounds {
        assert!(b.satisfied && b.attained, "{}: {} vs {}", b.bound_name, b.observed_min_lambda_sq, b.bound_value);
        assert!((b.bound_value - 2.0).abs() < 1e-12);
    }
    let spec = report.spectrum.unwrap();
    assert_eq!(spec.kernel_dimension, 1);
    let csv = read(out.join("bounds.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("name,value,observed,satisfied,attained"));
    assert!(lines.next().unwrap().starts_with("he_real,2.0000000000000000e0,"));
}

#[test]
fn empty_bound_list_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let text = SPHERE_MONOPOLE.replace(r#"names = ["he_real", "he_complex", "gauss_bonnet"]"#, "names = []");
    let cfg = write_config(dir.path(), "none.toml", &text);
    let out = dir.path().join("o");
    assert!(run("bounds", &cfg, &out, &["--format", "csv"]).status.success());
    assert_eq!(read(out.join("bounds.csv")), "name,value,observed,satisfied,attained\n");
    assert!(!out.join("report.json").exists());
}

#[test]
fn untwisted_spectrum_first_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "free.toml", SPHERE_UNTWISTED);
    let out = dir.path().join("o");
    assert!(run("spectrum", &cfg, &out, &["--dump-operator"]).status.success());
    let csv = read(out.join("spectrum.csv"));
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "0");
    assert!((row[1].parse::<f64>().unwrap() + 1.0).abs() < 1e-12);
    assert_eq!(row[2], "2");
    assert_eq!(csv.lines().count(), 13);

    let dump: serde_json::Value = serde_json::from_str(&read(out.join("operator.json"))).unwrap();
    let report: RunReport = serde_json::from_str(&read(out.join("report.json"))).unwrap();
    let summary = report.operator.unwrap();
    assert_eq!(dump["dimension"].as_u64().unwrap() as usize, summary.dimension);
    assert_eq!(dump["triplets"].as_array().unwrap().len(), summary.nonzeros);
}

#[test]
fn lattice_index_mismatch_fails_verification() {
    // the Wilson term lifts the chiral zero modes, so the lattice index is 0
    let text = r#"
schema_version = 1
kind = "index"

[manifold]
type = "flat_torus"
lengths = [6.283185307179586, 6.283185307179586]
spin = ["periodic", "periodic"]

[connection]
type = "constant_curvature"
degrees = [-1]

[backend]
type = "torus_lattice"
n1 = 12
n2 = 12

[solver]
count = 8
"#;
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "lattice.toml", text);
    let out = dir.path().join("o");
    assert_eq!(run("index", &cfg, &out, &[]).status.code(), Some(0));
    assert_eq!(run("index", &cfg, &out, &["--verify"]).status.code(), Some(4));
    let report: RunReport = serde_json::from_str(&read(out.join("report.json"))).unwrap();
    let index = report.index.unwrap();
    assert_eq!(index.topological_index, -1);
    assert!(!index.matches);
}

#[test]
fn iteration_cap_is_a_convergence_error() {
    let text = SPHERE_UNTWISTED
        .replace("l_max = 10.5", "l_max = 40.5")
        .replace("count = 12", "count = 40\nmax_iterations = 1\nmethod = \"chebyshev\"");
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "capped.toml", &text);
    let out = run("spectrum", &cfg, &dir.path().join("o"), &[]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn small_flow_writes_table_and_plot() {
    let text = r#"
schema_version = 1
kind = "flow"

[manifold]
type = "sphere"
radius = 1.0

[backend]
type = "sphere_spectral"
l_max = 3.5

[flow]
levels = 3
k = 4
"#;
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "flow.toml", text);
    let out = dir.path().join("o");
    assert_eq!(run("flow", &cfg, &out, &["--verify", "--plot"]).status.code(), Some(0));
    let csv = read(out.join("flow.csv"));
    assert_eq!(csv.lines().count(), 1 + 5);
    assert!(csv.starts_with("t,lambda_min,lambda_1,lambda_2,lambda_3,lambda_4\n"));
    assert!(read(out.join("flow.svg")).starts_with("<svg"));
    let report: RunReport = serde_json::from_str(&read(out.join("report.json"))).unwrap();
    let flow = report.flow.unwrap();
    assert!(flow.lipschitz_ok);
    assert_eq!(flow.kernel_dimension_at_one, 2);
}
