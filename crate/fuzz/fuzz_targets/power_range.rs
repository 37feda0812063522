#![no_main]
use libfuzzer_sys::fuzz_target;
use spad_ofdm::scenario::parse_power_range;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(grid) = parse_power_range(s) {
        let pts = grid.points();
        assert!(pts.len() as u64 <= spad_ofdm::link::thresholds::MAX_POINTS + 1);
        assert!(pts.windows(2).all(|w| w[0] <= w[1]));
        let back = parse_power_range(&grid.to_string()).expect("display round-trips");
        assert_eq!(back, grid);
    }
});
