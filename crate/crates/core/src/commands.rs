//! Command implementations behind the `spad-ofdm` binary. Each returns a
//! [`ResultTable`] whose metadata records how to regenerate it.

use rayon::prelude::*;

use crate::analysis::analytic_ber;
use crate::error::Result;
use crate::link::{
    analytic_thresholds, max_bit_rate_sweep, run_monte_carlo, run_until, LinkScenario, PowerGrid,
};
use crate::ofdm::OfdmConfig;
use crate::scenario::ScenarioFile;
use crate::spad::{
    array_pmf, dead_time_mean_transfer, empirical_array_counts, single_device_pmf,
    CountDistribution, CountMode, DeadTimeKind, PhotonFlux,
};
use crate::table::{Cell, Format, ResultTable};

pub const TOOL: &str = concat!("spad-ofdm ", env!("CARGO_PKG_VERSION"));

/// The command line that regenerates a table, with every input resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct Invocation {
    pub command: &'static str,
    pub scenario: Option<String>,
    pub seed: u64,
    pub format: Format,
    /// Further `--flag value` pairs, in order.
    pub args: Vec<(String, String)>,
}

impl Invocation {
    pub fn new(command: &'static str, scenario: Option<String>, seed: u64, format: Format) -> Self {
        Self {
            command,
            scenario,
            seed,
            format,
            args: Vec::new(),
        }
    }

    pub fn arg(mut self, flag: &str, value: impl ToString) -> Self {
        self.args.push((flag.into(), value.to_string()));
        self
    }

    pub fn render(&self) -> String {
        let mut s = format!("spad-ofdm {}", self.command);
        if let Some(path) = &self.scenario {
            s.push_str(&format!(" --scenario {path}"));
        }
        for (flag, value) in &self.args {
            s.push_str(&format!(" --{flag} {value}"));
        }
        let fmt = match self.format {
            Format::Csv => "csv",
            Format::Json => "json",
        };
        s.push_str(&format!(" --seed {} --format {fmt}", self.seed));
        s
    }
}

fn table(columns: &[&str], file: &ScenarioFile, inv: &Invocation) -> ResultTable {
    ResultTable::new(columns)
        .with_meta("tool", TOOL)
        .with_meta("command", inv.command)
        .with_meta("seed", inv.seed)
        .with_meta("scenario_sha256", file.hash())
        .with_meta("reproduce", inv.render())
}

/// Analytic BER under Poisson and exact count statistics.
pub fn cmd_analyze(file: &ScenarioFile, grid: &PowerGrid, inv: &Invocation) -> Result<ResultTable> {
    let base = file.scenario()?;
    let poisson = base.with_count_mode(CountMode::Poisson);
    let exact = base.with_count_mode(CountMode::Exact);
    exact.validate()?;
    let rows: Vec<Vec<Cell>> = grid
        .points()
        .into_par_iter()
        .map(|p| {
            Ok(vec![
                p.into(),
                analytic_ber(&poisson, p)?.into(),
                analytic_ber(&exact, p)?.into(),
            ])
        })
        .collect::<Result<_>>()?;
    let mut t = table(&["power_dbm", "ber_poisson", "ber_exact"], file, inv)
        .with_meta("power_dbm", grid.to_string());
    for r in rows {
        t.push(r)?;
    }
    Ok(t)
}

/// Monte Carlo BER at each power.
pub fn cmd_simulate(
    file: &ScenarioFile,
    grid: &PowerGrid,
    seed: u64,
    inv: &Invocation,
) -> Result<ResultTable> {
    let s = file.scenario()?;
    let opts = file.simulation.options();
    let mut t = table(
        &[
            "power_dbm",
            "ber_mc",
            "n_bits",
            "n_errors",
            "ci_low",
            "ci_high",
        ],
        file,
        inv,
    )
    .with_meta("power_dbm", grid.to_string())
    .with_meta("count_mode", s.count_mode);
    for p in grid.points() {
        let r = match file.simulation.frames {
            Some(n) => run_monte_carlo(&s, p, n, seed)?,
            None => run_until(&s, p, &opts, seed)?,
        };
        t.push(vec![
            p.into(),
            r.ber.into(),
            r.n_bits.into(),
            r.n_errors.into(),
            r.ci_low.into(),
            r.ci_high.into(),
        ])?;
    }
    Ok(t)
}

/// MPR, MOI and LEA of the analytic curve for every grid row.
pub fn cmd_metrics(file: &ScenarioFile, grid: &PowerGrid, inv: &Invocation) -> Result<ResultTable> {
    let base = file.scenario()?;
    let rows: Vec<Vec<Cell>> = file
        .metrics_grid()
        .into_par_iter()
        .map(|(scheme, kind, m, bias, ts)| {
            let s = LinkScenario {
                ofdm: OfdmConfig::new(scheme, m, base.ofdm.fft_size, bias, ts)?,
                kind,
                count_mode: CountMode::Poisson,
                ..base
            };
            let mt = analytic_thresholds(&s, grid)?;
            Ok(vec![
                scheme.to_string().into(),
                kind.to_string().into(),
                m.into(),
                bias.into(),
                ts.into(),
                mt.mpr_dbm.into(),
                mt.moi_dbm.into(),
                mt.lea_db.into(),
                mt.feasible.into(),
            ])
        })
        .collect::<Result<_>>()?;
    let cols = [
        "scheme",
        "kind",
        "constellation",
        "bias_db",
        "symbol_period_s",
        "mpr_dbm",
        "moi_dbm",
        "lea_db",
        "feasible",
    ];
    let mut t = table(&cols, file, inv)
        .with_meta("power_dbm", grid.to_string())
        .with_meta("target_ber", base.target_ber);
    for r in rows {
        t.push(r)?;
    }
    Ok(t)
}

/// Maximum bit rate per (scheme, bias, kind) family and constellation.
pub fn cmd_maxrate(file: &ScenarioFile, inv: &Invocation) -> Result<ResultTable> {
    let cols = [
        "scheme",
        "kind",
        "bias_db",
        "constellation",
        "spectral_efficiency",
        "max_bit_rate",
        "limiting_ts",
        "best_power_dbm",
    ];
    let mut t = table(&cols, file, inv)
        .with_meta("target_ber", file.link.target_ber)
        .with_meta(
            "bit_rate",
            "spectral_efficiency / limiting_ts (one OFDM time sample per T_s)",
        );
    if file.maxrate.constellations.is_empty() {
        return Ok(t);
    }
    for fam in file.maxrate_families() {
        for p in max_bit_rate_sweep(&fam, &file.maxrate.constellations)? {
            t.push(vec![
                fam.scheme.to_string().into(),
                fam.kind.to_string().into(),
                fam.bias_db.into(),
                p.constellation.into(),
                p.spectral_efficiency.into(),
                p.max_bit_rate.into(),
                p.symbol_period.into(),
                p.best_power_dbm.into(),
            ])?;
        }
    }
    Ok(t)
}

/// Exact, Poisson and empirical array count distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct PmfComparison {
    pub exact: CountDistribution,
    pub poisson: CountDistribution,
    pub empirical: CountDistribution,
}

impl PmfComparison {
    pub fn compute(
        file: &ScenarioFile,
        kind: DeadTimeKind,
        incident_photons: f64,
        samples: usize,
        seed: u64,
    ) -> Result<Self> {
        let cfg = file.spad.config();
        let ts = file.symbol_period();
        cfg.require_dead_time_below(ts)?;
        let flux = PhotonFlux::from_incident_photons(incident_photons, &cfg, ts)?;
        let device = single_device_pmf(kind, flux.device_rate(ts), &cfg, ts)?;
        Ok(Self {
            exact: array_pmf(&device, cfg.n_devices)?,
            poisson: CountDistribution::poisson(dead_time_mean_transfer(&flux, kind, &cfg, ts)),
            empirical: empirical_array_counts(&flux, kind, &cfg, ts, samples, seed)?,
        })
    }
}

pub fn cmd_pmf(
    file: &ScenarioFile,
    kind: DeadTimeKind,
    incident_photons: f64,
    samples: usize,
    seed: u64,
    inv: &Invocation,
) -> Result<ResultTable> {
    let c = PmfComparison::compute(file, kind, incident_photons, samples, seed)?;
    let dists = [&c.exact, &c.poisson, &c.empirical];
    let lo = dists.iter().map(|d| d.offset()).min().unwrap_or(0);
    let hi = dists.iter().map(|d| d.max_count()).max().unwrap_or(0);
    let mut t = table(&["count", "p_exact", "p_poisson", "p_empirical"], file, inv)
        .with_meta("kind", kind)
        .with_meta("incident_photons", incident_photons)
        .with_meta("symbol_period_s", file.symbol_period())
        .with_meta("samples", samples)
        .with_meta("mean_exact", c.exact.mean())
        .with_meta("var_exact", c.exact.variance())
        .with_meta("var_poisson", c.poisson.variance())
        .with_meta("var_empirical", c.empirical.variance())
        .with_meta(
            "poisson_variance_ratio",
            c.poisson.variance() / c.empirical.variance().max(f64::MIN_POSITIVE),
        )
        .with_meta("tv_exact_empirical", c.exact.total_variation(&c.empirical))
        .with_meta(
            "tv_poisson_empirical",
            c.poisson.total_variation(&c.empirical),
        )
        .with_meta("tv_exact_poisson", c.exact.total_variation(&c.poisson));
    for k in lo..=hi {
        let row = [c.exact.prob(k), c.poisson.prob(k), c.empirical.prob(k)];
        if row.iter().all(|&p| p < 1e-15) {
            continue;
        }
        t.push(vec![k.into(), row[0].into(), row[1].into(), row[2].into()])?;
    }
    Ok(t)
}
