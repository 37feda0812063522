//! Scenario files.
//!
//! A scenario is a TOML document. Every key carries its unit in the name and
//! unknown keys are rejected. Omitted keys take the reference values: the
//! default receiver (`SpadArrayConfig::default`), 4-QAM ACO-OFDM,
//! `T_s = 1 ms`, PQ quenching, target BER `1e-3`.
//!
//! ```toml
//! [ofdm]
//! scheme = "ACO"
//! constellation = 4
//! fft_size = 2048
//! bias_db = 7.0
//! symbol_period_us = 1000.0
//!
//! [spad]
//! dead_time_ns = 13.5
//!
//! [link]
//! kind = "PQ"
//! count_mode = "poisson"
//! target_ber = 1e-3
//!
//! [sweep]
//! power_dbm = "-120:0:1"
//! ```

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::link::{BitRateFamily, LinkScenario, McOptions, PowerGrid};
use crate::ofdm::{OfdmConfig, Scheme};
use crate::spad::{CountMode, DeadTimeKind, SpadArrayConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OfdmSection {
    pub scheme: Scheme,
    pub constellation: usize,
    pub fft_size: usize,
    pub bias_db: f64,
    pub symbol_period_us: f64,
}

impl Default for OfdmSection {
    fn default() -> Self {
        Self {
            scheme: Scheme::Aco,
            constellation: 4,
            fft_size: 2048,
            bias_db: 7.0,
            symbol_period_us: 1000.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpadSection {
    pub fill_factor: f64,
    pub pdp: f64,
    pub dcr_hz: f64,
    pub afterpulse_prob: f64,
    pub dead_time_ns: f64,
    pub n_devices: usize,
    pub wavelength_nm: f64,
}

impl Default for SpadSection {
    fn default() -> Self {
        Self {
            fill_factor: 0.322,
            pdp: 0.2,
            dcr_hz: 7270.0,
            afterpulse_prob: 0.01,
            dead_time_ns: 13.5,
            n_devices: 1024,
            wavelength_nm: 450.0,
        }
    }
}

impl SpadSection {
    pub fn config(&self) -> SpadArrayConfig {
        SpadArrayConfig {
            fill_factor: self.fill_factor,
            pdp: self.pdp,
            dcr_hz: self.dcr_hz,
            afterpulse_prob: self.afterpulse_prob,
            dead_time: self.dead_time_ns / 1e9,
            n_devices: self.n_devices,
            wavelength: self.wavelength_nm / 1e9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkSection {
    pub kind: DeadTimeKind,
    pub count_mode: CountMode,
    pub target_ber: f64,
}

impl Default for LinkSection {
    fn default() -> Self {
        Self {
            kind: DeadTimeKind::Pq,
            count_mode: CountMode::Poisson,
            target_ber: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// `start:stop:step` in dBm.
    pub power_dbm: String,
    pub seed: u64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            power_dbm: "-120:0:1".into(),
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSection {
    /// Fixed number of frames per power; adaptive stopping when absent.
    pub frames: Option<usize>,
    pub min_errors: u64,
    pub max_bits: u64,
    pub batch_frames: usize,
    pub pilot_frames: usize,
}

impl Default for SimulationSection {
    fn default() -> Self {
        let d = McOptions::default();
        Self {
            frames: None,
            min_errors: d.min_errors,
            max_bits: d.max_bits,
            batch_frames: d.batch_frames,
            pilot_frames: d.pilot_frames,
        }
    }
}

impl SimulationSection {
    pub fn options(&self) -> McOptions {
        McOptions {
            min_errors: self.min_errors,
            max_bits: self.max_bits,
            batch_frames: self.batch_frames,
            pilot_frames: self.pilot_frames,
        }
    }
}

/// Grid for the threshold table. DCO rows are produced for every bias in
/// `dco_bias_db`; ACO rows ignore the bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsSection {
    pub schemes: Vec<Scheme>,
    pub kinds: Vec<DeadTimeKind>,
    pub constellations: Vec<usize>,
    pub dco_bias_db: Vec<f64>,
    pub symbol_periods_us: Vec<f64>,
}

impl Default for MetricsSection {
    fn default() -> Self {
        Self {
            schemes: vec![Scheme::Aco, Scheme::Dco],
            kinds: vec![DeadTimeKind::Pq, DeadTimeKind::Aq],
            constellations: vec![4, 16, 64],
            dco_bias_db: vec![7.0, 13.0],
            symbol_periods_us: vec![1000.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaxRateSection {
    pub schemes: Vec<Scheme>,
    pub kinds: Vec<DeadTimeKind>,
    pub constellations: Vec<usize>,
    pub dco_bias_db: Vec<f64>,
}

impl Default for MaxRateSection {
    fn default() -> Self {
        Self {
            schemes: vec![Scheme::Aco, Scheme::Dco],
            kinds: vec![DeadTimeKind::Pq, DeadTimeKind::Aq],
            constellations: vec![4, 16, 64, 256, 1024],
            dco_bias_db: vec![7.0, 13.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PmfSection {
    pub kind: DeadTimeKind,
    /// Photons incident on the array per sample period.
    pub incident_photons: f64,
    pub samples: usize,
}

impl Default for PmfSection {
    fn default() -> Self {
        Self {
            kind: DeadTimeKind::Pq,
            incident_photons: 1e4,
            samples: 100_000,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioFile {
    pub ofdm: OfdmSection,
    pub spad: SpadSection,
    pub link: LinkSection,
    pub sweep: SweepSection,
    pub simulation: SimulationSection,
    pub metrics: MetricsSection,
    pub maxrate: MaxRateSection,
    pub pmf: PmfSection,
}

fn config_error(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.into(),
        message: message.into(),
    }
}

/// Dotted file key for a parameter name reported by validation.
fn file_key(section: &str, name: &str) -> String {
    let name = match name {
        "symbol_period" => "symbol_period_us",
        "dead_time" => "dead_time_ns",
        "wavelength" => "wavelength_nm",
        other => other,
    };
    format!("{section}.{name}")
}

fn in_section(section: &str, e: Error) -> Error {
    match e {
        Error::InvalidParameter { name, reason } => config_error(&file_key(section, name), reason),
        Error::DeadTimeExceedsSymbol { .. } => config_error("spad.dead_time_ns", e.to_string()),
        other => other,
    }
}

impl ScenarioFile {
    /// Parses and validates a scenario document.
    pub fn parse(src: &str) -> Result<Self> {
        let de =
            toml::Deserializer::parse(src).map_err(|e| config_error("<document>", e.message()))?;
        let file: ScenarioFile = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let msg = inner.message().to_string();
            let key = match msg
                .strip_prefix("unknown field `")
                .and_then(|r| r.split('`').next())
            {
                Some(field) if path == "." => field.to_string(),
                Some(field) if !path.ends_with(field) => format!("{path}.{field}"),
                _ => path,
            };
            config_error(&key, msg)
        })?;
        file.validate()?;
        Ok(file)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let src = std::fs::read_to_string(path)
            .map_err(|e| config_error("--scenario", format!("{}: {e}", path.display())))?;
        Self::parse(&src)
    }

    /// Canonical TOML rendering of the resolved scenario (defaults filled in).
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("scenario serialises")
    }

    /// SHA-256 of the canonical rendering, hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.ofdm_config()?;
        self.spad
            .config()
            .validate()
            .map_err(|e| in_section("spad", e))?;
        self.scenario()?;
        self.power_grid()?;
        let sim = &self.simulation;
        if sim.frames == Some(0) {
            return Err(config_error("simulation.frames", "must be at least 1"));
        }
        if sim.batch_frames == 0 {
            return Err(config_error(
                "simulation.batch_frames",
                "must be at least 1",
            ));
        }
        if sim.pilot_frames == 0 {
            return Err(config_error(
                "simulation.pilot_frames",
                "must be at least 1",
            ));
        }
        for (section, list) in [
            ("metrics", &self.metrics.constellations),
            ("maxrate", &self.maxrate.constellations),
        ] {
            for &m in list {
                crate::ofdm::Qam::new(m).map_err(|e| in_section(section, e))?;
            }
        }
        if self
            .metrics
            .symbol_periods_us
            .iter()
            .any(|t| !(*t > 0.0 && t.is_finite()))
        {
            return Err(config_error(
                "metrics.symbol_periods_us",
                "periods must be positive",
            ));
        }
        for (key, list) in [
            ("metrics.dco_bias_db", &self.metrics.dco_bias_db),
            ("maxrate.dco_bias_db", &self.maxrate.dco_bias_db),
        ] {
            if let Some(b) = list.iter().find(|b| !(**b >= 0.0 && b.is_finite())) {
                return Err(config_error(
                    key,
                    format!("{b} must be a finite, non-negative level"),
                ));
            }
        }
        if !(self.pmf.incident_photons >= 0.0 && self.pmf.incident_photons.is_finite()) {
            return Err(config_error(
                "pmf.incident_photons",
                "must be finite and non-negative",
            ));
        }
        if self.pmf.samples == 0 {
            return Err(config_error("pmf.samples", "must be at least 1"));
        }
        Ok(())
    }

    pub fn symbol_period(&self) -> f64 {
        self.ofdm.symbol_period_us / 1e6
    }

    pub fn ofdm_config(&self) -> Result<OfdmConfig> {
        let o = &self.ofdm;
        OfdmConfig::new(
            o.scheme,
            o.constellation,
            o.fft_size,
            o.bias_db,
            self.symbol_period(),
        )
        .map_err(|e| in_section("ofdm", e))
    }

    pub fn scenario(&self) -> Result<LinkScenario> {
        LinkScenario::new(
            self.ofdm_config()?,
            self.spad.config(),
            self.link.kind,
            self.link.count_mode,
            self.link.target_ber,
        )
        .map_err(|e| in_section("link", e))
    }

    pub fn power_grid(&self) -> Result<PowerGrid> {
        self.sweep
            .power_dbm
            .parse::<PowerGrid>()
            .map_err(|e| match e {
                Error::Config { message, .. } => config_error("sweep.power_dbm", message),
                other => other,
            })
    }

    /// Threshold grid rows as (scheme, kind, constellation, bias, T_s).
    pub fn metrics_grid(&self) -> Vec<(Scheme, DeadTimeKind, usize, f64, f64)> {
        let m = &self.metrics;
        let mut rows = Vec::new();
        for &scheme in &m.schemes {
            let biases = match scheme {
                Scheme::Aco => vec![0.0],
                Scheme::Dco => m.dco_bias_db.clone(),
            };
            for &ts in &m.symbol_periods_us {
                for &kind in &m.kinds {
                    for &bias in &biases {
                        for &c in &m.constellations {
                            rows.push((scheme, kind, c, bias, ts / 1e6));
                        }
                    }
                }
            }
        }
        rows
    }

    /// One family per (scheme, bias, kind).
    pub fn maxrate_families(&self) -> Vec<BitRateFamily> {
        let m = &self.maxrate;
        let mut out = Vec::new();
        for &scheme in &m.schemes {
            let biases = match scheme {
                Scheme::Aco => vec![0.0],
                Scheme::Dco => m.dco_bias_db.clone(),
            };
            for &bias_db in &biases {
                for &kind in &m.kinds {
                    out.push(BitRateFamily {
                        scheme,
                        kind,
                        fft_size: self.ofdm.fft_size,
                        bias_db,
                        spad: self.spad.config(),
                        count_mode: self.link.count_mode,
                        target_ber: self.link.target_ber,
                    });
                }
            }
        }
        out
    }
}

/// Parses a `start:stop:step` power range in dBm.
pub fn parse_power_range(s: &str) -> Result<PowerGrid> {
    s.parse()
}
