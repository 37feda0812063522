use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spad-ofdm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn scenario(dir: &Path, body: &str) -> String {
    let p = dir.join("s.toml");
    std::fs::write(&p, body).unwrap();
    p.display().to_string()
}

fn data_lines(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn analyze_writes_csv_with_metadata() {
    let o = run(&["analyze", "--power", "-95:-85:5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    for key in ["tool", "command", "seed", "scenario_sha256", "reproduce"] {
        assert!(text.contains(&format!("# {key}: ")), "{key}");
    }
    let lines = data_lines(&text);
    assert_eq!(lines[0], "power_dbm,ber_poisson,ber_exact");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("-95,"));
}

#[test]
fn empty_power_range_gives_header_only() {
    let o = run(&["analyze", "--power", "-80:-90:1"]);
    assert!(o.status.success());
    assert_eq!(data_lines(&stdout(&o)), ["power_dbm,ber_poisson,ber_exact"]);
}

#[test]
fn unknown_key_exits_2_naming_it() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario(dir.path(), "[ofdm]\nconstelation = 16\n");
    let o = run(&["analyze", "--scenario", &path]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ofdm.constelation"), "{}", stderr(&o));
}

#[test]
fn invalid_value_exits_2_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario(dir.path(), "[ofdm]\nconstellation = 8\n");
    let o = run(&["analyze", "--scenario", &path]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ofdm.constellation"), "{}", stderr(&o));

    let path = scenario(dir.path(), "[spad]\ndead_time_ns = \"long\"\n");
    let o = run(&["analyze", "--scenario", &path]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("spad.dead_time_ns"), "{}", stderr(&o));
}

#[test]
fn missing_file_and_bad_range_exit_2() {
    assert_eq!(
        run(&["analyze", "--scenario", "/nonexistent/s.toml"])
            .status
            .code(),
        Some(2)
    );
    let o = run(&["analyze", "--power", "-90:-80"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("power"));
}

#[test]
fn simulate_is_byte_identical_for_a_seed() {
    let args = [
        "simulate",
        "--power",
        "-75:-73:1",
        "--frames",
        "4",
        "--seed",
        "8",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let header = data_lines(&stdout(&a))[0].to_string();
    assert_eq!(header, "power_dbm,ber_mc,n_bits,n_errors,ci_low,ci_high");
    let c = run(&[
        "simulate",
        "--power",
        "-75:-73:1",
        "--frames",
        "4",
        "--seed",
        "9",
    ]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn zero_frames_rejected() {
    let o = run(&["simulate", "--power", "-75:-75:1", "--frames", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("frames"));
}

#[test]
fn json_output_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.json");
    let o = run(&[
        "analyze",
        "--power",
        "-90:-89:1",
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("\"scenario_sha256\""));
    assert!(text.contains("\"power_dbm\": -90"));
    assert!(text.contains("--format json"));
}

#[test]
fn scenario_hash_tracks_content() {
    let dir = tempfile::tempdir().unwrap();
    let hash = |body: &str| {
        let p = scenario(dir.path(), body);
        let text = stdout(&run(&["analyze", "--scenario", &p, "--power", "-90:-90:1"]));
        text.lines()
            .find(|l| l.starts_with("# scenario_sha256"))
            .unwrap()
            .to_string()
    };
    assert_eq!(hash(""), hash("[ofdm]\nconstellation = 4\n"));
    assert_ne!(hash(""), hash("[ofdm]\nconstellation = 16\n"));
}

#[test]
fn metrics_rows_cover_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario(
        dir.path(),
        "[metrics]\nschemes = [\"ACO\", \"DCO\"]\nkinds = [\"PQ\"]\nconstellations = [4, 64]\ndco_bias_db = [13.0]\nsymbol_periods_us = [1.0]\n",
    );
    let o = run(&["metrics", "--scenario", &path]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let lines = data_lines(&text);
    assert_eq!(lines.len(), 5);
    let dco64 = lines
        .iter()
        .find(|l| l.starts_with("DCO,PQ,64,13,"))
        .unwrap();
    assert!(dco64.ends_with(",,,,false"), "{dco64}");
    for l in &lines[1..] {
        let f: Vec<&str> = l.split(',').collect();
        if f[8] == "true" {
            let (mpr, moi, lea): (f64, f64, f64) = (
                f[5].parse().unwrap(),
                f[6].parse().unwrap(),
                f[7].parse().unwrap(),
            );
            assert_eq!(lea, moi - mpr);
        }
    }
}

#[test]
fn maxrate_with_empty_grid_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario(dir.path(), "[maxrate]\nconstellations = []\n");
    let o = run(&["maxrate", "--scenario", &path]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(data_lines(&stdout(&o)).len(), 1);
}

#[test]
fn pmf_of_a_dark_array_is_a_point_mass() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario(
        dir.path(),
        "[ofdm]\nsymbol_period_us = 1.0\n[spad]\ndcr_hz = 0.0\n",
    );
    let o = run(&[
        "pmf",
        "--scenario",
        &path,
        "--kind",
        "AQ",
        "--photons",
        "0",
        "--samples",
        "50",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        data_lines(&stdout(&o)),
        ["count,p_exact,p_poisson,p_empirical", "0,1,1,1"]
    );
}

#[test]
fn pmf_rejects_dead_time_longer_than_the_window() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario(dir.path(), "[ofdm]\nsymbol_period_us = 0.01\n");
    let o = run(&[
        "pmf",
        "--scenario",
        &path,
        "--photons",
        "10",
        "--samples",
        "10",
    ]);
    assert_eq!(o.status.code(), Some(2));
}
