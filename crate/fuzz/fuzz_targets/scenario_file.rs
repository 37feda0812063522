#![no_main]
use libfuzzer_sys::fuzz_target;
use spad_ofdm::scenario::ScenarioFile;
use spad_ofdm::Error;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else {
        return;
    };
    match ScenarioFile::parse(src) {
        Ok(file) => {
            // A parsed file survives its own canonical form unchanged.
            let again = ScenarioFile::parse(&file.canonical()).expect("canonical form parses");
            assert_eq!(again.hash(), file.hash());
            let _ = file.scenario();
            let _ = file.power_grid();
        }
        Err(Error::Config { key, .. }) => assert!(!key.is_empty()),
        Err(e) => panic!("non-config error from parser: {e}"),
    }
});
