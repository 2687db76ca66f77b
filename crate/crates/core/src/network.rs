//! Single-tier hexagonal small-cell layout and the Monte Carlo campaign.
//!
//! Each drop places one UE in the central cell, draws the serving link and
//! the six interfering links once, and evaluates every requested channel
//! mode on those same draws.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    ideal_channel, ChannelRealization, FadingParams, LargeScaleParams, LinkKind, LosMode,
    PathLossModel,
};
use crate::error::{Error, Result};
use crate::link::{evaluate_link, interference_covariance, ChannelMode, LinkResult, NoiseModel};
use crate::pulse::{PulseConfig, PulseKernels};

/// UEs closer than this to the serving BS are redrawn.
pub const MIN_BS_DISTANCE_M: f64 = 1.0;

/// Significant digits kept in CDF samples.
pub const CDF_SIGNIFICANT_DIGITS: usize = 9;

/// Thermal noise density at 290 K.
pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

/// `N0` over `bandwidth_hz` with the given receiver noise figure, watts.
pub fn thermal_noise_watts(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    dbm_to_watts(THERMAL_NOISE_DBM_PER_HZ + 10.0 * bandwidth_hz.log10() + noise_figure_db)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layout {
    pub isd_m: f64,
    /// Index 0 is the serving BS at the origin; 1..=6 are the neighbours.
    pub bs_positions: [(f64, f64); 7],
}

pub fn build_layout(isd_m: f64) -> Result<Layout> {
    if !(isd_m > 0.0 && isd_m.is_finite()) {
        return Err(Error::config(
            "isd",
            format!("must be positive, got {isd_m}"),
        ));
    }
    let mut bs_positions = [(0.0, 0.0); 7];
    for (k, pos) in bs_positions.iter_mut().skip(1).enumerate() {
        let a = PI / 3.0 * k as f64;
        *pos = (isd_m * a.cos(), isd_m * a.sin());
    }
    Ok(Layout {
        isd_m,
        bs_positions,
    })
}

impl Layout {
    /// Circumradius of a cell's hexagon, `isd/√3`.
    pub fn cell_circumradius(&self) -> f64 {
        self.isd_m / 3f64.sqrt()
    }

    /// True when `p` lies in the Voronoi cell of the central BS.
    pub fn in_central_cell(&self, p: (f64, f64)) -> bool {
        let half = self.isd_m / 2.0;
        (0..6).all(|k| {
            let a = PI / 3.0 * k as f64;
            p.0 * a.cos() + p.1 * a.sin() <= half
        })
    }

    /// Distances from `p` to every BS, serving first.
    pub fn distances(&self, p: (f64, f64)) -> [f64; 7] {
        self.bs_positions.map(|(x, y)| (p.0 - x).hypot(p.1 - y))
    }
}

/// Uniform position in the central cell, at least [`MIN_BS_DISTANCE_M`]
/// from the serving BS.
pub fn drop_ue<R: Rng + ?Sized>(layout: &Layout, rng: &mut R) -> (f64, f64) {
    let r = layout.cell_circumradius();
    loop {
        let p = (rng.random_range(-r..r), rng.random_range(-r..r));
        if layout.in_central_cell(p) && p.0.hypot(p.1) >= MIN_BS_DISTANCE_M {
            return p;
        }
    }
}

/// Physical parameters of a drop, in linear units where they enter the link.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub carrier_ghz: f64,
    pub bandwidth_hz: f64,
    /// Per-BS transmit power, watts.
    pub p_bs_w: f64,
    /// Noise power per receive antenna, watts.
    pub n0_w: f64,
    pub shadowing_sigma_db: f64,
    pub antenna_gain_dbi: f64,
    pub nlos_correlation: f64,
    pub serving_fading: LosMode,
    pub interferer_fading: LosMode,
    pub serving_pathloss: PathLossModel,
    pub interferer_pathloss: PathLossModel,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            carrier_ghz: 2.0,
            bandwidth_hz: 1e7,
            p_bs_w: dbm_to_watts(30.0),
            n0_w: thermal_noise_watts(1e7, 9.0),
            shadowing_sigma_db: 3.0,
            antenna_gain_dbi: 5.0,
            nlos_correlation: 0.5,
            serving_fading: LosMode::FullCorrelation,
            interferer_fading: LosMode::RankOneLos,
            serving_pathloss: PathLossModel::UrbanMicroLos,
            interferer_pathloss: PathLossModel::UrbanMicroNlos,
        }
    }
}

impl ScenarioParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("carrier_ghz", self.carrier_ghz),
            ("bandwidth_hz", self.bandwidth_hz),
            ("p_bs", self.p_bs_w),
            ("n0", self.n0_w),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(
                    key,
                    format!("must be positive and finite, got {v}"),
                ));
            }
        }
        if !(self.shadowing_sigma_db >= 0.0 && self.shadowing_sigma_db.is_finite()) {
            return Err(Error::config("shadowing_sigma_db", "must be non-negative"));
        }
        if !self.antenna_gain_dbi.is_finite() {
            return Err(Error::config("antenna_gain_dbi", "must be finite"));
        }
        if !(self.nlos_correlation.abs() < 1.0) {
            return Err(Error::config("nlos_correlation", "must lie in (-1, 1)"));
        }
        Ok(())
    }

    fn large_scale(&self, model: PathLossModel) -> LargeScaleParams {
        LargeScaleParams {
            carrier_ghz: self.carrier_ghz,
            shadowing_sigma_db: self.shadowing_sigma_db,
            antenna_gain_dbi: self.antenna_gain_dbi,
            pathloss_model: model,
        }
    }

    fn fading(&self, distance_m: f64, los_mode: LosMode) -> FadingParams {
        FadingParams {
            distance_m,
            nlos_correlation: self.nlos_correlation,
            los_mode,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DropResult {
    pub ue_position: (f64, f64),
    pub serving_distance: f64,
    pub results: BTreeMap<ChannelMode, LinkResult>,
}

impl DropResult {
    pub fn get(&self, mode: ChannelMode) -> Option<&LinkResult> {
        self.results.get(&mode)
    }
}

/// One drop at `ue`. Serving and interfering links are drawn once (serving
/// first, then neighbours in layout order) and shared by every mode.
pub fn run_drop<R: Rng + ?Sized>(
    layout: &Layout,
    ue: (f64, f64),
    modes: &[ChannelMode],
    params: &ScenarioParams,
    kernels: &PulseKernels,
    rng: &mut R,
) -> Result<DropResult> {
    let d = layout.distances(ue);
    let serving = ChannelRealization::draw(
        LinkKind::Serving,
        &params.fading(d[0], params.serving_fading),
        &params.large_scale(params.serving_pathloss),
        rng,
    )?;
    let interferer_ls = params.large_scale(params.interferer_pathloss);
    let interferers = d[1..]
        .iter()
        .map(|&dj| {
            ChannelRealization::draw(
                LinkKind::Interferer,
                &params.fading(dj, params.interferer_fading),
                &interferer_ls,
                rng,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let noise = NoiseModel::new(
        params.n0_w,
        interference_covariance(&interferers, params.p_bs_w),
    )?;

    let mut results = BTreeMap::new();
    for &mode in modes {
        let h_n = match mode {
            ChannelMode::CorrelatedLos => serving.fading.clone(),
            ChannelMode::Dpst => kernels.compose(&serving.fading)?.h_n,
            ChannelMode::Ideal => ideal_channel(&serving.fading)?,
        };
        let r = evaluate_link(
            mode,
            &h_n,
            serving.large_scale_gain,
            params.p_bs_w,
            &noise,
            params.bandwidth_hz,
        )?;
        results.insert(mode, r);
    }
    Ok(DropResult {
        ue_position: ue,
        serving_distance: d[0],
        results,
    })
}

/// RNG for one drop: ChaCha8 keyed by the master seed mixed with the ISD,
/// on a stream selected by the drop index.
pub fn drop_rng(seed: u64, isd_m: f64, drop_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ splitmix64(isd_m.to_bits()));
    rng.set_stream(drop_index);
    rng
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// All drops for one ISD, in drop-index order regardless of scheduling.
pub fn run_drops(
    isd_m: f64,
    modes: &[ChannelMode],
    n_drops: usize,
    seed: u64,
    params: &ScenarioParams,
    pulse: &PulseConfig,
) -> Result<Vec<DropResult>> {
    if n_drops == 0 {
        return Err(Error::config("drops", "must be at least 1"));
    }
    if modes.is_empty() {
        return Err(Error::config("modes", "must not be empty"));
    }
    params.validate()?;
    let layout = build_layout(isd_m)?;
    let kernels = PulseKernels::new(*pulse)?;
    (0..n_drops as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = drop_rng(seed, isd_m, i);
            let ue = drop_ue(&layout, &mut rng);
            run_drop(&layout, ue, modes, params, &kernels, &mut rng)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    EffectiveSinrDb,
    ThroughputBps,
}

impl Metric {
    pub fn of(self, r: &LinkResult) -> f64 {
        match self {
            Metric::EffectiveSinrDb => r.effective_sinr_db,
            Metric::ThroughputBps => r.throughput_bps,
        }
    }

    /// File-name prefix for this metric's CDF.
    pub fn file_prefix(self) -> &'static str {
        match self {
            Metric::EffectiveSinrDb => "sinr",
            Metric::ThroughputBps => "tput",
        }
    }
}

/// Rounds to [`CDF_SIGNIFICANT_DIGITS`] significant digits.
pub fn quantize(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", CDF_SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .expect("formatted float parses")
}

/// Sorted samples of one metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CdfSummary {
    pub metric: Metric,
    samples: Vec<f64>,
}

impl CdfSummary {
    pub fn new(metric: Metric, samples: impl IntoIterator<Item = f64>) -> Result<Self> {
        let mut samples: Vec<f64> = samples.into_iter().map(quantize).collect();
        if samples.is_empty() {
            return Err(Error::Domain("CDF needs at least one sample".into()));
        }
        if samples.iter().any(|x| x.is_nan()) {
            return Err(Error::NonFinite);
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self { metric, samples })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Linear interpolation between order statistics, `p` in `[0, 100]`.
    pub fn percentile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 100.0);
        let pos = p / 100.0 * (self.samples.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let frac = pos - lo as f64;
        self.samples[lo] + (self.samples[hi] - self.samples[lo]) * frac
    }

    pub fn median(&self) -> f64 {
        self.percentile(50.0)
    }

    /// `(value, i/n)` for the `i`-th smallest sample, `i = 1..=n`.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let n = self.samples.len() as f64;
        self.samples
            .iter()
            .enumerate()
            .map(move |(i, &v)| (v, (i + 1) as f64 / n))
    }
}

/// Slack in dB for the mode ordering check. DPST and the ideal channel
/// differ by about 1e-4 dB in either direction, because the two virtual
/// channels sit in different bases relative to coloured interference.
pub const ORDERING_TOLERANCE_DB: f64 = 0.01;

/// `Ideal ≥ Dpst ≥ CorrelatedLos` in effective SINR, up to `tol_db`.
/// Modes missing from the drop are skipped.
pub fn modes_ordered(d: &DropResult, tol_db: f64) -> bool {
    let s = |m| d.get(m).map(|r| r.effective_sinr_db);
    let pair = |hi, lo| match (s(hi), s(lo)) {
        (Some(a), Some(b)) => a >= b - tol_db,
        _ => true,
    };
    pair(ChannelMode::Ideal, ChannelMode::Dpst)
        && pair(ChannelMode::Dpst, ChannelMode::CorrelatedLos)
}

#[derive(Clone, Debug)]
pub struct IsdResult {
    pub isd_m: f64,
    pub drops: Vec<DropResult>,
    pub cdfs: BTreeMap<(ChannelMode, Metric), CdfSummary>,
}

impl IsdResult {
    pub fn cdf(&self, mode: ChannelMode, metric: Metric) -> Option<&CdfSummary> {
        self.cdfs.get(&(mode, metric))
    }

    pub fn median(&self, mode: ChannelMode, metric: Metric) -> Option<f64> {
        self.cdf(mode, metric).map(CdfSummary::median)
    }

    /// Median effective SINR of DPST minus that of the correlated channel.
    pub fn median_gain_db(&self) -> Option<f64> {
        let dpst = self.median(ChannelMode::Dpst, Metric::EffectiveSinrDb)?;
        let los = self.median(ChannelMode::CorrelatedLos, Metric::EffectiveSinrDb)?;
        Some(dpst - los)
    }

    pub fn throughput_ratio(&self, num: ChannelMode, den: ChannelMode) -> Option<f64> {
        Some(self.median(num, Metric::ThroughputBps)? / self.median(den, Metric::ThroughputBps)?)
    }

    /// Fraction of drops where `f` holds.
    pub fn fraction(&self, f: impl Fn(&DropResult) -> bool) -> f64 {
        self.drops.iter().filter(|d| f(d)).count() as f64 / self.drops.len() as f64
    }
}

#[derive(Clone, Debug)]
pub struct CampaignResult {
    pub modes: Vec<ChannelMode>,
    pub isds: Vec<IsdResult>,
}

pub fn run_campaign(
    isds: &[f64],
    modes: &[ChannelMode],
    n_drops: usize,
    seed: u64,
    params: &ScenarioParams,
    pulse: &PulseConfig,
) -> Result<CampaignResult> {
    if isds.is_empty() {
        return Err(Error::config("isd", "must not be empty"));
    }
    let mut out = Vec::with_capacity(isds.len());
    for &isd in isds {
        let drops = run_drops(isd, modes, n_drops, seed, params, pulse)?;
        let mut cdfs = BTreeMap::new();
        for &mode in modes {
            for metric in [Metric::EffectiveSinrDb, Metric::ThroughputBps] {
                let samples = drops.iter().map(|d| metric.of(&d.results[&mode]));
                cdfs.insert((mode, metric), CdfSummary::new(metric, samples)?);
            }
        }
        out.push(IsdResult {
            isd_m: isd,
            drops,
            cdfs,
        });
    }
    Ok(CampaignResult {
        modes: modes.to_vec(),
        isds: out,
    })
}
