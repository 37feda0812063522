use std::path::PathBuf;

use proptest::prelude::*;
use spad_ofdm::link::thresholds::MAX_POINTS;
use spad_ofdm::scenario::{parse_power_range, ScenarioFile};
use spad_ofdm::Error;

fn check_scenario(src: &str) {
    match ScenarioFile::parse(src) {
        Ok(file) => {
            let again = ScenarioFile::parse(&file.canonical()).expect("canonical form parses");
            assert_eq!(again.hash(), file.hash());
            let _ = file.scenario();
            let _ = file.power_grid();
        }
        Err(Error::Config { key, .. }) => assert!(!key.is_empty()),
        Err(e) => panic!("non-config error from parser: {e}"),
    }
}

fn check_range(s: &str) {
    if let Ok(grid) = parse_power_range(s) {
        let pts = grid.points();
        assert!(pts.len() as u64 <= MAX_POINTS + 1);
        assert!(pts.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(parse_power_range(&grid.to_string()).unwrap(), grid);
    }
}

fn corpus(name: &str) -> Vec<String> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(name);
    let mut out: Vec<String> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| std::fs::read_to_string(e.unwrap().path()).unwrap())
        .collect();
    out.sort();
    out
}

#[test]
fn corpus_seeds() {
    let scenarios = corpus("scenario_file");
    assert!(scenarios.len() >= 5);
    scenarios.iter().for_each(|s| check_scenario(s));
    corpus("power_range").iter().for_each(|s| check_range(s));
}

const KEYS: &[&str] = &[
    "[ofdm]",
    "[spad]",
    "[link]",
    "[sweep]",
    "[simulation]",
    "[metrics]",
    "[maxrate]",
    "[pmf]",
    "scheme = \"DCO\"",
    "scheme = \"ACO\"",
    "constellation = 16",
    "constellation = 0",
    "fft_size = 4",
    "fft_size = 3",
    "bias_db = -1.0",
    "symbol_period_us = 0.001",
    "symbol_period_us = 1e300",
    "dead_time_ns = 0.0",
    "n_devices = 0",
    "pdp = 2.0",
    "kind = \"AQ\"",
    "count_mode = \"exact\"",
    "target_ber = 0.7",
    "power_dbm = \"1:0:1\"",
    "power_dbm = \"0:1e9:1e-9\"",
    "frames = 0",
    "constellations = []",
    "constellations = [8]",
    "dco_bias_db = [nan]",
    "symbol_periods_us = [-1.0]",
    "samples = 0",
    "incident_photons = inf",
    "seed = 18446744073709551615",
    "=",
    "[[ofdm]]",
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn assembled_documents(lines in prop::collection::vec(prop::sample::select(KEYS), 0..12)) {
        check_scenario(&lines.join("\n"));
    }

    #[test]
    fn arbitrary_documents(src in ".{0,200}") {
        check_scenario(&src);
    }

    #[test]
    fn numeric_ranges(a in any::<f64>(), b in any::<f64>(), c in any::<f64>()) {
        check_range(&format!("{a}:{b}:{c}"));
        check_range(&format!("{a:e}:{b:e}:{c:e}"));
    }

    #[test]
    fn arbitrary_ranges(s in "[-+0-9e.:naif ]{0,30}") {
        check_range(&s);
    }
}
