//! Command-line front end: configuration, the three commands and their
//! file outputs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::channel::{ideal_channel, LosMode, PathLossModel};
use crate::error::{Error, Result};
use crate::link::ChannelMode;
use crate::network::{
    dbm_to_watts, modes_ordered, run_campaign, run_drops, thermal_noise_watts, CampaignResult,
    CdfSummary, Metric, ScenarioParams, ORDERING_TOLERANCE_DB,
};
use crate::numerics::{
    condition_from_singular_values, rank_from_singular_values, svd, ComplexMatrix,
};
use crate::pulse::{compose_oversampled, PulseConfig};

/// Flat run configuration. Every key is optional in a config file; missing
/// keys take the defaults below.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub isd: Vec<f64>,
    pub modes: Vec<ChannelMode>,
    pub drops: usize,
    pub seed: u64,
    pub tau_frac: f64,
    pub tx_os: usize,
    pub rx_os: usize,
    pub block_symbols: usize,
    pub carrier_ghz: f64,
    pub bandwidth_hz: f64,
    pub p_bs_dbm: f64,
    pub noise_figure_db: f64,
    pub shadowing_sigma_db: f64,
    pub antenna_gain_dbi: f64,
    pub nlos_correlation: f64,
    pub serving_fading: LosMode,
    pub interferer_fading: LosMode,
    pub serving_pathloss: PathLossModel,
    pub interferer_pathloss: PathLossModel,
    pub tau_grid: Vec<f64>,
    pub sweep_isd: f64,
    pub sweep_drops: usize,
    /// Output directory. Not part of the config hash.
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let pulse = PulseConfig::default();
        let radio = ScenarioParams::default();
        Self {
            isd: vec![20.0, 50.0, 150.0],
            modes: ChannelMode::ALL.to_vec(),
            drops: 10_000,
            seed: 1,
            tau_frac: pulse.tau_fraction,
            tx_os: pulse.tx_oversampling,
            rx_os: pulse.rx_oversampling,
            block_symbols: pulse.block_symbols,
            carrier_ghz: radio.carrier_ghz,
            bandwidth_hz: radio.bandwidth_hz,
            p_bs_dbm: 30.0,
            noise_figure_db: 9.0,
            shadowing_sigma_db: radio.shadowing_sigma_db,
            antenna_gain_dbi: radio.antenna_gain_dbi,
            nlos_correlation: radio.nlos_correlation,
            serving_fading: radio.serving_fading,
            interferer_fading: radio.interferer_fading,
            serving_pathloss: radio.serving_pathloss,
            interferer_pathloss: radio.interferer_pathloss,
            tau_grid: vec![0.0, 0.01, 0.02, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.4, 0.5],
            sweep_isd: 50.0,
            sweep_drops: 1_000,
            out: PathBuf::from("dpst_out"),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)
            .map_err(|e| Error::config("config file", e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.isd.is_empty() {
            return Err(Error::config("isd", "at least one ISD is required"));
        }
        if let Some(bad) = self.isd.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
            return Err(Error::config(
                "isd",
                format!("{bad} is not a positive distance"),
            ));
        }
        if self.modes.is_empty() {
            return Err(Error::config("modes", "at least one mode is required"));
        }
        if self.drops == 0 {
            return Err(Error::config("drops", "must be at least 1"));
        }
        if self.sweep_drops == 0 {
            return Err(Error::config("sweep_drops", "must be at least 1"));
        }
        if !(self.sweep_isd > 0.0 && self.sweep_isd.is_finite()) {
            return Err(Error::config("sweep_isd", "must be positive"));
        }
        if let Some(bad) = self.tau_grid.iter().find(|t| !(0.0..1.0).contains(*t)) {
            return Err(Error::config(
                "tau_grid",
                format!("{bad} is outside [0, 1)"),
            ));
        }
        for (key, v) in [
            ("p_bs_dbm", self.p_bs_dbm),
            ("noise_figure_db", self.noise_figure_db),
        ] {
            if !v.is_finite() {
                return Err(Error::config(key, "must be finite"));
            }
        }
        self.pulse().validate()?;
        self.scenario().validate()
    }

    pub fn pulse(&self) -> PulseConfig {
        PulseConfig {
            tau_fraction: self.tau_frac,
            tx_oversampling: self.tx_os,
            rx_oversampling: self.rx_os,
            block_symbols: self.block_symbols,
        }
    }

    /// Radio parameters converted to watts.
    pub fn scenario(&self) -> ScenarioParams {
        ScenarioParams {
            carrier_ghz: self.carrier_ghz,
            bandwidth_hz: self.bandwidth_hz,
            p_bs_w: dbm_to_watts(self.p_bs_dbm),
            n0_w: thermal_noise_watts(self.bandwidth_hz, self.noise_figure_db),
            shadowing_sigma_db: self.shadowing_sigma_db,
            antenna_gain_dbi: self.antenna_gain_dbi,
            nlos_correlation: self.nlos_correlation,
            serving_fading: self.serving_fading,
            interferer_fading: self.interferer_fading,
            serving_pathloss: self.serving_pathloss,
            interferer_pathloss: self.interferer_pathloss,
        }
    }

    /// First 16 hex digits of the SHA-256 of the configuration without `out`.
    pub fn config_hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Value::Object(map) = &mut v {
            map.remove("out");
        }
        let digest = Sha256::digest(v.to_string().as_bytes());
        digest.iter().take(8).fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

/// Flags shared by all commands. Each one overrides the config file.
#[derive(Args, Clone, Debug, Default)]
pub struct Overrides {
    /// Flat TOML configuration file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Inter-site distances in meters, comma separated
    #[arg(long, value_delimiter = ',', global = true)]
    pub isd: Option<Vec<f64>>,
    /// Channel modes (correlated_los, dpst, ideal), comma separated
    #[arg(long = "mode", value_delimiter = ',', global = true)]
    pub modes: Option<Vec<ChannelMode>>,
    /// Drops per ISD
    #[arg(long, global = true)]
    pub drops: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Antenna-2 delay as a fraction of the block period
    #[arg(long = "tau-frac", global = true)]
    pub tau_frac: Option<f64>,
    /// Transmit oversampling ratio
    #[arg(long = "tx-os", global = true)]
    pub tx_os: Option<usize>,
    /// Receive oversampling factor
    #[arg(long = "rx-os", global = true)]
    pub rx_os: Option<usize>,
    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

impl Overrides {
    /// Loads the config file (or defaults) and applies the flags on top.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.isd {
            cfg.isd = v.clone();
        }
        if let Some(v) = &self.modes {
            cfg.modes = v.clone();
        }
        if let Some(v) = self.drops {
            cfg.drops = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.tau_frac {
            cfg.tau_frac = v;
        }
        if let Some(v) = self.tx_os {
            cfg.tx_os = v;
        }
        if let Some(v) = self.rx_os {
            cfg.rx_os = v;
        }
        if let Some(v) = &self.out {
            cfg.out = v.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "dpst",
    version,
    about = "Diversity pulse shaped transmission simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Monte Carlo campaign: SINR and throughput CDFs per ISD and mode
    Campaign,
    /// Rank and condition number of the fully correlated channel per mode
    Conditioning,
    /// Condition number and median DPST SINR over a grid of delays
    TauSweep {
        /// Delay grid, comma separated fractions in [0, 1)
        #[arg(long = "tau-grid", value_delimiter = ',')]
        tau_grid: Option<Vec<f64>>,
    },
}

fn format_isd(isd: f64) -> String {
    format!("{isd}")
}

pub fn cdf_file_name(metric: Metric, isd: f64, mode: ChannelMode) -> String {
    format!(
        "{}_cdf_{}_{}.csv",
        metric.file_prefix(),
        format_isd(isd),
        mode
    )
}

pub fn render_cdf_csv(cdf: &CdfSummary, config_hash: &str) -> String {
    let mut s = format!("# config_hash: {config_hash}\nvalue,cumulative_probability\n");
    for (v, p) in cdf.points() {
        let _ = writeln!(s, "{v},{p}");
    }
    s
}

/// Values column of a CDF CSV written by [`render_cdf_csv`].
pub fn parse_cdf_csv(text: &str) -> Result<Vec<f64>> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("value,") && !l.is_empty())
        .map(|l| {
            l.split(',')
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::Domain(format!("malformed CSV row {l:?}")))
        })
        .collect()
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Summary document for a finished campaign.
pub fn campaign_summary(cfg: &RunConfig, result: &CampaignResult) -> Value {
    let per_isd: Vec<Value> = result
        .isds
        .iter()
        .map(|r| {
            let medians: serde_json::Map<String, Value> = result
                .modes
                .iter()
                .map(|&m| {
                    (
                        m.to_string(),
                        json!({
                            "effective_sinr_db": r.median(m, Metric::EffectiveSinrDb),
                            "throughput_bps": r.median(m, Metric::ThroughputBps),
                        }),
                    )
                })
                .collect();
            json!({
                "isd_m": r.isd_m,
                "medians": medians,
                "median_gain_db": r.median_gain_db(),
                "throughput_ratio_dpst_over_los": r.throughput_ratio(ChannelMode::Dpst, ChannelMode::CorrelatedLos),
                "throughput_ratio_dpst_over_ideal": r.throughput_ratio(ChannelMode::Dpst, ChannelMode::Ideal),
                "ordered_fraction": r.fraction(|d| modes_ordered(d, ORDERING_TOLERANCE_DB)),
            })
        })
        .collect();
    json!({
        "config_hash": cfg.config_hash(),
        "drops": cfg.drops,
        "seed": cfg.seed,
        "isds": per_isd,
    })
}

/// Runs the campaign and writes the CDF files and `summary.json`.
pub fn cmd_campaign(cfg: &RunConfig) -> Result<CampaignResult> {
    cfg.validate()?;
    let result = run_campaign(
        &cfg.isd,
        &cfg.modes,
        cfg.drops,
        cfg.seed,
        &cfg.scenario(),
        &cfg.pulse(),
    )?;
    write_campaign(cfg, &result)?;
    Ok(result)
}

pub fn write_campaign(cfg: &RunConfig, result: &CampaignResult) -> Result<()> {
    ensure_dir(&cfg.out)?;
    let hash = cfg.config_hash();
    for r in &result.isds {
        for (&(mode, metric), cdf) in &r.cdfs {
            let path = cfg.out.join(cdf_file_name(metric, r.isd_m, mode));
            write_file(&path, &render_cdf_csv(cdf, &hash))?;
        }
    }
    let summary = campaign_summary(cfg, result);
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write_file(&cfg.out.join("summary.json"), &(text + "\n"))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditioningRow {
    pub mode: ChannelMode,
    pub rank: usize,
    /// `None` when infinite.
    pub condition_number: Option<f64>,
}

/// Rank and condition number of the fully correlated 2×2 channel for each
/// mode, DPST using the configured pulse.
pub fn conditioning_table(pulse: &PulseConfig) -> Result<Vec<ConditioningRow>> {
    let h = ComplexMatrix::ones(2, 2);
    let rows = [
        (ChannelMode::CorrelatedLos, h.clone()),
        (ChannelMode::Dpst, compose_oversampled(&h, pulse)?.h_n),
        (ChannelMode::Ideal, ideal_channel(&h)?),
    ];
    rows.into_iter()
        .map(|(mode, m)| {
            let s = svd(&m)?.singular_values;
            let cond = condition_from_singular_values(&s);
            Ok(ConditioningRow {
                mode,
                rank: rank_from_singular_values(&s),
                condition_number: cond.is_finite().then_some(cond),
            })
        })
        .collect()
}

pub fn render_conditioning(rows: &[ConditioningRow]) -> String {
    let mut s = format!("{:<16} {:>4} {:>16}\n", "channel", "rank", "condition");
    for r in rows {
        let cond = r
            .condition_number
            .map_or("inf".to_string(), |c| format!("{c:.6}"));
        let _ = writeln!(s, "{:<16} {:>4} {:>16}", r.mode.as_str(), r.rank, cond);
    }
    s
}

pub fn cmd_conditioning(cfg: &RunConfig) -> Result<Vec<ConditioningRow>> {
    cfg.validate()?;
    let rows = conditioning_table(&cfg.pulse())?;
    print!("{}", render_conditioning(&rows));
    ensure_dir(&cfg.out)?;
    let doc = json!({
        "config_hash": cfg.config_hash(),
        "pulse": cfg.pulse(),
        "rows": rows,
    });
    let text = serde_json::to_string_pretty(&doc).expect("conditioning serializes");
    write_file(&cfg.out.join("conditioning.json"), &(text + "\n"))?;
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub tau_fraction: f64,
    pub cond_h_n: f64,
    pub median_effective_sinr_db: f64,
}

/// For each grid delay: condition number of DPST's `H_N` on the fully
/// correlated channel and the median DPST effective SINR at `sweep_isd`.
pub fn tau_sweep(cfg: &RunConfig, grid: &[f64]) -> Result<Vec<SweepRow>> {
    let mut sorted = grid.to_vec();
    if let Some(bad) = sorted.iter().find(|t| !(0.0..1.0).contains(*t)) {
        return Err(Error::config(
            "tau_grid",
            format!("{bad} is outside [0, 1)"),
        ));
    }
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let scenario = cfg.scenario();
    sorted
        .into_iter()
        .map(|tau| {
            let pulse = PulseConfig {
                tau_fraction: tau,
                ..cfg.pulse()
            };
            let h_n = compose_oversampled(&ComplexMatrix::ones(2, 2), &pulse)?.h_n;
            let cond = condition_from_singular_values(&svd(&h_n)?.singular_values);
            let drops = run_drops(
                cfg.sweep_isd,
                &[ChannelMode::Dpst],
                cfg.sweep_drops,
                cfg.seed,
                &scenario,
                &pulse,
            )?;
            let cdf = CdfSummary::new(
                Metric::EffectiveSinrDb,
                drops
                    .iter()
                    .map(|d| d.results[&ChannelMode::Dpst].effective_sinr_db),
            )?;
            Ok(SweepRow {
                tau_fraction: tau,
                cond_h_n: cond,
                median_effective_sinr_db: cdf.median(),
            })
        })
        .collect()
}

pub fn render_sweep_csv(rows: &[SweepRow], config_hash: &str) -> String {
    let mut s =
        format!("# config_hash: {config_hash}\ntau_fraction,cond_h_n,median_effective_sinr_db\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{}",
            r.tau_fraction, r.cond_h_n, r.median_effective_sinr_db
        );
    }
    s
}

pub fn cmd_tau_sweep(cfg: &RunConfig, grid: &[f64]) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let rows = tau_sweep(cfg, grid)?;
    ensure_dir(&cfg.out)?;
    write_file(
        &cfg.out.join("tau_sweep.csv"),
        &render_sweep_csv(&rows, &cfg.config_hash()),
    )?;
    Ok(rows)
}

fn print_campaign(result: &CampaignResult) {
    println!(
        "{:>8} {:>16} {:>14} {:>16} {:>12}",
        "isd_m", "mode", "median_sinr_db", "median_tput_mbps", "gain_db"
    );
    for r in &result.isds {
        for &m in &result.modes {
            let sinr = r.median(m, Metric::EffectiveSinrDb).unwrap_or(f64::NAN);
            let tput = r.median(m, Metric::ThroughputBps).unwrap_or(f64::NAN) / 1e6;
            let gain = if m == ChannelMode::Dpst {
                r.median_gain_db()
                    .map_or(String::new(), |g| format!("{g:.2}"))
            } else {
                String::new()
            };
            println!(
                "{:>8} {:>16} {:>14.2} {:>16.2} {:>12}",
                r.isd_m,
                m.as_str(),
                sinr,
                tput,
                gain
            );
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let mut cfg = cli.overrides.resolve()?;
    match &cli.command {
        Command::Campaign => {
            let result = cmd_campaign(&cfg)?;
            print_campaign(&result);
        }
        Command::Conditioning => {
            cmd_conditioning(&cfg)?;
        }
        Command::TauSweep { tau_grid } => {
            if let Some(grid) = tau_grid {
                cfg.tau_grid = grid.clone();
            }
            let grid = cfg.tau_grid.clone();
            let rows = cmd_tau_sweep(&cfg, &grid)?;
            print!("{}", render_sweep_csv(&rows, &cfg.config_hash()));
        }
    }
    Ok(())
}

/// Entry point for the `dpst` binary. Exit code 2 for configuration
/// errors, 1 for any other failure.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if matches!(e, Error::Config { .. }) {
                2
            } else {
                1
            })
        }
    }
}
