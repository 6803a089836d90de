//! End-to-end tests of the `kinetostat` binary: exit codes, file
//! formats and output determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use kinetostat::conditioning::ConditioningResult;
use kinetostat::geom::PointSet2;
use kinetostat::optimize::OptimumPosture;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kinetostat"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_file(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, contents).unwrap();
    path
}

struct Fixture {
    _dir: tempfile::TempDir,
    iso_manipulator: PathBuf,
    equilateral: PathBuf,
    two_link: PathBuf,
    iso_posture: PathBuf,
    printed_posture: PathBuf,
    degenerate_posture: PathBuf,
}

fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    Fixture {
        iso_manipulator: write_file(
            p,
            "iso.json",
            r#"{"link_lengths": [1.0, 1.0, 0.5773502691896258]}"#,
        ),
        equilateral: write_file(p, "eq.json", r#"{"link_lengths": [1, 1, 1]}"#),
        two_link: write_file(p, "two.json", r#"{"link_lengths": [1, 1]}"#),
        iso_posture: write_file(p, "iso_posture.json", r#"{"theta_deg": [0, 120, 150]}"#),
        printed_posture: write_file(
            p,
            "printed.json",
            r#"{"theta_deg": [0, 81.8, 155.2]}"#,
        ),
        degenerate_posture: write_file(p, "degenerate.json", r#"{"theta_deg": [0, 240, 33]}"#),
        _dir: dir,
    }
}

#[test]
fn analyze_isotropic_posture() {
    let f = fixture();
    let out = run(&[
        "analyze",
        f.iso_manipulator.to_str().unwrap(),
        f.iso_posture.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let result: ConditioningResult = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert!(result.z < 1e-12);
    assert!((result.l_p - 0.4082482904638631).abs() < 1e-9);
    assert!((result.kappa - 1.0).abs() < 1e-9);

    // byte-identical repeat run
    let again = run(&[
        "analyze",
        f.iso_manipulator.to_str().unwrap(),
        f.iso_posture.to_str().unwrap(),
    ]);
    assert_eq!(out.stdout, again.stdout);
}

#[test]
fn analyze_equilateral_printed_posture() {
    let f = fixture();
    let out = run(&[
        "analyze",
        f.equilateral.to_str().unwrap(),
        f.printed_posture.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let result: ConditioningResult = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert!((result.z - 0.178).abs() <= 1e-3, "z = {}", result.z);
}

#[test]
fn analyze_missing_file_exits_two_and_names_path() {
    let out = run(&["analyze", "/no/such/manipulator.json", "/no/such/posture.json"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("/no/such/manipulator.json"), "{stderr}");
}

#[test]
fn analyze_malformed_json_exits_two() {
    let f = fixture();
    let broken = write_file(f._dir.path(), "broken.json", r#"{"link_lengths": [1,"#);
    let out = run(&[
        "analyze",
        broken.to_str().unwrap(),
        f.iso_posture.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("broken.json"));
}

#[test]
fn analyze_degenerate_posture_exits_three() {
    let f = fixture();
    let out = run(&[
        "analyze",
        f.equilateral.to_str().unwrap(),
        f.degenerate_posture.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3), "{out:?}");
}

#[test]
fn optimize_two_link_matches_scan_oracle() {
    let f = fixture();
    let out = run(&["optimize", f.two_link.to_str().unwrap()]);
    assert!(out.status.success(), "{out:?}");
    let result: OptimumPosture = serde_json::from_str(&stdout_of(&out)).unwrap();
    // folded chain, frozen against an independent 1-D scan
    assert!((result.theta.theta()[1] - std::f64::consts::PI).abs() < 1e-4);
    assert!((result.z_min - 0.5).abs() < 1e-9);
    assert!((result.l_p - std::f64::consts::SQRT_2 / 2.0).abs() < 1e-6);
}

#[test]
fn optimize_writes_output_and_manifest() {
    let f = fixture();
    let out_path = f._dir.path().join("optimum.json");
    let manifest_path = f._dir.path().join("manifest.json");
    let out = run(&[
        "optimize",
        f.equilateral.to_str().unwrap(),
        "--resolution",
        "360",
        "--out",
        out_path.to_str().unwrap(),
        "--manifest",
        manifest_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let result: OptimumPosture =
        serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert!((result.z_min - 0.178425356).abs() < 1e-6);
    assert!((result.l_p - 0.5633985).abs() < 1e-5);
    assert!(result.is_global);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&manifest_path).unwrap()).unwrap();
    assert_eq!(manifest["command"], "optimize");
    assert_eq!(manifest["tool_version"], env!("CARGO_PKG_VERSION"));
    assert!(manifest["inputs"][0]
        .as_str()
        .unwrap()
        .ends_with("eq.json"));
}

#[test]
fn optimize_theta1_pin_changes_nothing_but_the_frame() {
    let f = fixture();
    let base = run(&[
        "optimize",
        f.equilateral.to_str().unwrap(),
        "--resolution",
        "180",
    ]);
    let pinned = run(&[
        "optimize",
        f.equilateral.to_str().unwrap(),
        "--resolution",
        "180",
        "--theta1",
        "37",
        "--degrees",
    ]);
    assert!(base.status.success() && pinned.status.success());
    let b: OptimumPosture = serde_json::from_str(&stdout_of(&base)).unwrap();
    let p: OptimumPosture = serde_json::from_str(&stdout_of(&pinned)).unwrap();
    assert!((b.z_min - p.z_min).abs() < 1e-9);
    assert!((b.l_p - p.l_p).abs() < 1e-9);
    assert!((p.theta.theta()[0] - 37f64.to_radians()).abs() < 1e-12);
}

#[test]
fn isocontour_writes_csv_and_contours() {
    let f = fixture();
    let csv_path = f._dir.path().join("grid.csv");
    let out = run(&[
        "isocontour",
        f.equilateral.to_str().unwrap(),
        "--resolution",
        "90",
        "--levels",
        "0.25,0.5",
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");

    let csv = fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("theta2_rad,theta3_rad,z"));
    assert_eq!(csv.lines().count(), 1 + 90 * 90);

    let contours_path = f._dir.path().join("grid.contours.json");
    let contours: Vec<kinetostat::Contour> =
        serde_json::from_str(&fs::read_to_string(&contours_path).unwrap()).unwrap();
    assert!(!contours.is_empty());
    assert!(contours.iter().any(|c| c.closed));

    // flat-window mode must not change any z value
    let flat_csv_path = f._dir.path().join("flat.csv");
    let flat = run(&[
        "isocontour",
        f.equilateral.to_str().unwrap(),
        "--resolution",
        "90",
        "--levels",
        "0.25,0.5",
        "--no-wrap",
        "--out",
        flat_csv_path.to_str().unwrap(),
    ]);
    assert!(flat.status.success());
    assert_eq!(csv, fs::read_to_string(&flat_csv_path).unwrap());
}

#[test]
fn isocontour_tiny_resolution_exits_two() {
    let f = fixture();
    let out = run(&[
        "isocontour",
        f.equilateral.to_str().unwrap(),
        "--resolution",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn trivial_set_command_emits_reference_square() {
    let out = run(&["trivial-set", "4", "--phase", "45", "--degrees"]);
    assert!(out.status.success());
    let set: PointSet2 = serde_json::from_str(&stdout_of(&out)).unwrap();
    let expected = [[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]];
    for (p, e) in set.points().iter().zip(expected) {
        assert!((p.x - e[0]).abs() < 1e-12 && (p.y - e[1]).abs() < 1e-12);
    }

    let too_small = run(&["trivial-set", "2"]);
    assert_eq!(too_small.status.code(), Some(2));
}

#[test]
fn workspace_area_monotone_and_deterministic() {
    let f = fixture();
    let frac_at = |z: &str| -> f64 {
        let out = run(&[
            "workspace-area",
            f.equilateral.to_str().unwrap(),
            "--resolution",
            "90",
            "--z-max",
            z,
        ]);
        assert!(out.status.success(), "{out:?}");
        let v: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
        v["area_fraction"].as_f64().unwrap()
    };
    let lo = frac_at("0.3");
    let mid = frac_at("0.6");
    let hi = frac_at("0.95");
    assert!(lo <= mid && mid <= hi, "{lo} {mid} {hi}");

    let a = run(&[
        "workspace-area",
        f.equilateral.to_str().unwrap(),
        "--resolution",
        "90",
        "--z-max",
        "0.6",
    ]);
    let b = run(&[
        "workspace-area",
        f.equilateral.to_str().unwrap(),
        "--resolution",
        "90",
        "--z-max",
        "0.6",
    ]);
    assert_eq!(a.stdout, b.stdout);

    // a threshold below the grid minimum selects nothing
    let empty = run(&[
        "workspace-area",
        f.equilateral.to_str().unwrap(),
        "--resolution",
        "90",
        "--z-max",
        "0.01",
    ]);
    assert_eq!(empty.status.code(), Some(2));
}

#[test]
fn analyze_accepts_explicit_set_and_permutation() {
    let f = fixture();
    let set_out = run(&["trivial-set", "3"]);
    let set_path = write_file(f._dir.path(), "set.json", &stdout_of(&set_out));
    let direct = run(&[
        "analyze",
        f.iso_manipulator.to_str().unwrap(),
        f.iso_posture.to_str().unwrap(),
        set_path.to_str().unwrap(),
    ]);
    assert!(direct.status.success());
    let d: ConditioningResult = serde_json::from_str(&stdout_of(&direct)).unwrap();
    assert!(d.z < 1e-12);

    // a nontrivial relabeling breaks the perfect match
    let permuted = run(&[
        "analyze",
        f.iso_manipulator.to_str().unwrap(),
        f.iso_posture.to_str().unwrap(),
        set_path.to_str().unwrap(),
        "--permutation",
        "1,0,2",
    ]);
    assert!(permuted.status.success());
    let p: ConditioningResult = serde_json::from_str(&stdout_of(&permuted)).unwrap();
    assert!(p.z > 0.01, "permuted z = {}", p.z);
}
