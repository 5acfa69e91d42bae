use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL_SWEEP: &str = r#"{
  "schema_version": 1,
  "sweep": { "altitude_km": { "start": 300, "stop": 900, "step": 150 }, "elevation_deg": [45, 90] }
}"#;

fn cvqkd(args: &[&str], workers: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cvqkd"));
    cmd.args(args).env_remove("CVQKD_WORKERS");
    if let Some(w) = workers {
        cmd.env("CVQKD_WORKERS", w);
    }
    cmd.output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn data_lines(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn validate_config_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write(dir.path(), "ok.json", r#"{"schema_version": 1}"#);
    assert_eq!(
        cvqkd(&["validate-config", "-c", &ok], None).status.code(),
        Some(0)
    );

    for (name, text) in [
        ("syntax.json", "{ not json"),
        ("version.json", r#"{"schema_version": 7}"#),
        (
            "unknown.json",
            r#"{"schema_version": 1, "wavelength": 1550}"#,
        ),
        (
            "beta.json",
            r#"{"schema_version": 1, "reconciliation": {"kind": "asymptotic", "beta": 1.5}}"#,
        ),
    ] {
        let p = write(dir.path(), name, text);
        let out = cvqkd(&["validate-config", "-c", &p], None);
        assert_eq!(out.status.code(), Some(1), "{name}");
        assert!(!out.stderr.is_empty());
    }
    let missing = dir.path().join("absent.json");
    let out = cvqkd(&["validate-config", "-c", missing.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(cvqkd(&["frobnicate"], None).status.code(), Some(1));
}

#[test]
fn print_emits_resolved_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "c.json", r#"{"schema_version": 1}"#);
    let out = cvqkd(&["validate-config", "-c", &p, "--print"], None);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"total_symbols\": 100000000000.0"));
    assert!(text.contains("\"wavelength_nm\": 1550.0"));
}

#[test]
fn numerical_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "q.json",
        r#"{"schema_version": 1,
            "protocol": {"kind": "qam", "points_per_quadrature": 32, "modulation_variance": 3000},
            "sweep": {"altitude_km": [500], "elevation_deg": [90]}}"#,
    );
    let out = cvqkd(&["sweep", "-c", &p], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_csv_layout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.json", SMALL_SWEEP);
    let out_path = dir.path().join("out.csv");
    let out = cvqkd(
        &["sweep", "-c", &cfg, "-o", out_path.to_str().unwrap()],
        None,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(&out_path).unwrap();
    assert!(csv.starts_with("# cvqkd "));
    let data = data_lines(&csv);
    assert!(data[0].starts_with("protocol,detection,"));
    assert_eq!(data.len(), 1 + 5 * 2);
    let cols = data[0].split(',').count();
    assert!(data.iter().all(|l| l.split(',').count() == cols));
    // altitude major, elevation minor
    assert!(data[1].starts_with("GM,homodyne,asymptotic,300.0,45.0,"));
    assert!(data[2].starts_with("GM,homodyne,asymptotic,300.0,90.0,"));
    assert!(data[3].starts_with("GM,homodyne,asymptotic,450.0,45.0,"));
}

#[test]
fn config_echo_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.json", SMALL_SWEEP);
    let first = cvqkd(&["sweep", "-c", &cfg], None).stdout;
    let first = String::from_utf8(first).unwrap();
    let echoed: Vec<&str> = first
        .lines()
        .take_while(|l| l.starts_with('#'))
        .skip_while(|l| !l.starts_with("# {"))
        .map(|l| &l[2..])
        .collect();
    let again = write(dir.path(), "echo.json", &echoed.join("\n"));
    let second = String::from_utf8(cvqkd(&["sweep", "-c", &again], None).stdout).unwrap();
    assert_eq!(first, second);
}

#[test]
fn output_independent_of_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"schema_version": 1,
            "sweep": {"altitude_km": [400, 700], "elevation_deg": [30, 90]},
            "compare": {"protocols": [{"kind": "gm"}, {"kind": "psk", "states": 4}, {"kind": "qam", "points_per_quadrature": 4}]}}"#,
    );
    let one = cvqkd(&["compare", "-c", &cfg], Some("1"));
    let many = cvqkd(&["compare", "-c", &cfg], Some("16"));
    let flag = cvqkd(&["compare", "-c", &cfg, "--workers", "3"], None);
    assert!(one.status.success());
    assert_eq!(one.stdout, many.stdout);
    assert_eq!(one.stdout, flag.stdout);
    assert_eq!(
        data_lines(&String::from_utf8(one.stdout).unwrap()).len(),
        1 + 4 * 3
    );

    assert_eq!(
        cvqkd(&["compare", "-c", &cfg], Some("0")).status.code(),
        Some(1)
    );
}

#[test]
fn pass_writes_series_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "p.json",
        r#"{"schema_version": 1, "pass": {"source": {"kind": "synthetic", "max_elevation_deg": 87.6, "sample_dt_s": 5.0}}}"#,
    );
    let series = dir.path().join("series.csv");
    let summary = dir.path().join("summary.csv");
    let out = cvqkd(
        &[
            "pass",
            "-c",
            &cfg,
            "-o",
            series.to_str().unwrap(),
            "--summary",
            summary.to_str().unwrap(),
        ],
        None,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let series = fs::read_to_string(series).unwrap();
    let rows = data_lines(&series);
    assert_eq!(
        rows[0],
        "time_s,elevation_deg,skr_md_bits_per_s,skr_mlc_msd_bits_per_s"
    );
    assert!(rows.len() > 100);

    let summary = fs::read_to_string(summary).unwrap();
    let rows = data_lines(&summary);
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("md,"));
    assert!(rows[2].starts_with("mlc_msd,"));
    let total = |row: &str| row.split(',').nth(2).unwrap().parse::<f64>().unwrap();
    assert!(total(rows[1]) > total(rows[2]));
    assert!(total(rows[2]) > 0.0);
}

#[test]
fn pass_profile_errors_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let profile = write(
        dir.path(),
        "profile.csv",
        "time_s,elevation_deg\n0,10\n1,oops\n",
    );
    let cfg = write(
        dir.path(),
        "p.json",
        r#"{"schema_version": 1, "pass": {"source": {"kind": "file", "path": "profile.csv"}}}"#,
    );
    assert!(Path::new(&profile).exists());
    let out = cvqkd(&["pass", "-c", &cfg], None);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 3"), "{err}");
}
