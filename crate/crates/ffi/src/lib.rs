//! C ABI over `dpst-core`.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_run`
//! functions and released with the matching `*_free`. Every fallible call
//! returns a [`DpstStatus`]; on failure, [`dpst_last_error`] describes the
//! cause on the calling thread. Results are written through out-pointers.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use dpst_core::cli::{write_campaign, RunConfig};
use dpst_core::link::ChannelMode;
use dpst_core::network::{run_campaign, CampaignResult, Metric};
use dpst_core::numerics::{condition_number, ComplexMatrix};
use dpst_core::pulse::{compose_oversampled, PulseConfig};
use dpst_core::Error;

pub const DPST_MODE_CORRELATED_LOS: u32 = 0;
pub const DPST_MODE_DPST: u32 = 1;
pub const DPST_MODE_IDEAL: u32 = 2;

pub const DPST_METRIC_EFFECTIVE_SINR_DB: u32 = 0;
pub const DPST_METRIC_THROUGHPUT_BPS: u32 = 1;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DpstStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Numerical = 4,
    Io = 5,
    OutOfRange = 6,
    Panic = 7,
}

/// Run configuration handle.
pub struct DpstConfig {
    inner: RunConfig,
}

/// Finished campaign handle. Keeps the configuration it was run with.
pub struct DpstCampaign {
    config: RunConfig,
    result: CampaignResult,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

struct Failure(DpstStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Config { .. } => DpstStatus::Config,
            Error::Io { .. } => DpstStatus::Io,
            Error::Domain(_) | Error::Shape { .. } => DpstStatus::InvalidArgument,
            _ => DpstStatus::Numerical,
        };
        Failure(status, e.to_string())
    }
}

fn fail(status: DpstStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DpstStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            DpstStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            DpstStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| fail(DpstStatus::NullPointer, format!("{name} is null")))
}

unsafe fn deref_mut<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| fail(DpstStatus::NullPointer, format!("{name} is null")))
}

unsafe fn c_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(DpstStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        fail(
            DpstStatus::InvalidArgument,
            format!("{name} is not valid UTF-8"),
        )
    })
}

fn mode_from(code: u32) -> Result<ChannelMode, Failure> {
    match code {
        DPST_MODE_CORRELATED_LOS => Ok(ChannelMode::CorrelatedLos),
        DPST_MODE_DPST => Ok(ChannelMode::Dpst),
        DPST_MODE_IDEAL => Ok(ChannelMode::Ideal),
        _ => Err(fail(
            DpstStatus::InvalidArgument,
            format!("unknown mode code {code}"),
        )),
    }
}

fn metric_from(code: u32) -> Result<Metric, Failure> {
    match code {
        DPST_METRIC_EFFECTIVE_SINR_DB => Ok(Metric::EffectiveSinrDb),
        DPST_METRIC_THROUGHPUT_BPS => Ok(Metric::ThroughputBps),
        _ => Err(fail(
            DpstStatus::InvalidArgument,
            format!("unknown metric code {code}"),
        )),
    }
}

/// Message for the last failed call on this thread; empty after a
/// successful call. Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn dpst_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, static string.
#[no_mangle]
pub extern "C" fn dpst_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Default configuration.
///
/// # Safety
/// `out` must be a valid pointer to a `DpstConfig*`.
#[no_mangle]
pub unsafe extern "C" fn dpst_config_new(out: *mut *mut DpstConfig) -> DpstStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        *out = Box::into_raw(Box::new(DpstConfig {
            inner: RunConfig::default(),
        }));
        Ok(())
    })
}

/// Configuration parsed from flat TOML text; missing keys take defaults.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` a valid `DpstConfig*` slot.
#[no_mangle]
pub unsafe extern "C" fn dpst_config_from_toml(
    text: *const c_char,
    out: *mut *mut DpstConfig,
) -> DpstStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        let inner = RunConfig::from_toml_str(c_str(text, "text")?)?;
        *out = Box::into_raw(Box::new(DpstConfig { inner }));
        Ok(())
    })
}

/// # Safety
/// `cfg` must come from `dpst_config_new`/`dpst_config_from_toml` and not be
/// used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn dpst_config_free(cfg: *mut DpstConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Applies `edit` and keeps it only if the result validates.
unsafe fn edit_config(cfg: *mut DpstConfig, edit: impl FnOnce(&mut RunConfig)) -> DpstStatus {
    guard(|| {
        let cfg = deref_mut(cfg, "cfg")?;
        let mut next = cfg.inner.clone();
        edit(&mut next);
        next.validate()?;
        cfg.inner = next;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn dpst_config_set_drops(cfg: *mut DpstConfig, drops: usize) -> DpstStatus {
    edit_config(cfg, |c| c.drops = drops)
}

/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn dpst_config_set_seed(cfg: *mut DpstConfig, seed: u64) -> DpstStatus {
    edit_config(cfg, |c| c.seed = seed)
}

/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn dpst_config_set_tau_fraction(
    cfg: *mut DpstConfig,
    tau_fraction: f64,
) -> DpstStatus {
    edit_config(cfg, |c| c.tau_frac = tau_fraction)
}

/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn dpst_config_set_oversampling(
    cfg: *mut DpstConfig,
    tx_os: usize,
    rx_os: usize,
) -> DpstStatus {
    edit_config(cfg, |c| {
        c.tx_os = tx_os;
        c.rx_os = rx_os;
    })
}

/// Replaces the ISD list with `len` values from `isds`.
///
/// # Safety
/// `cfg` must be a live config handle; `isds` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn dpst_config_set_isds(
    cfg: *mut DpstConfig,
    isds: *const f64,
    len: usize,
) -> DpstStatus {
    if isds.is_null() {
        return guard(|| Err(fail(DpstStatus::NullPointer, "isds is null")));
    }
    let values = std::slice::from_raw_parts(isds, len).to_vec();
    edit_config(cfg, |c| c.isd = values)
}

/// Replaces the mode list with `len` `DPST_MODE_*` codes.
///
/// # Safety
/// `cfg` must be a live config handle; `modes` must point to `len` values.
#[no_mangle]
pub unsafe extern "C" fn dpst_config_set_modes(
    cfg: *mut DpstConfig,
    modes: *const u32,
    len: usize,
) -> DpstStatus {
    if modes.is_null() {
        return guard(|| Err(fail(DpstStatus::NullPointer, "modes is null")));
    }
    let codes = std::slice::from_raw_parts(modes, len);
    let parsed: Result<Vec<_>, _> = codes.iter().map(|&c| mode_from(c)).collect();
    match parsed {
        Ok(list) => edit_config(cfg, |c| c.modes = list),
        Err(f) => guard(|| Err(f)),
    }
}

/// Hex configuration hash, NUL-terminated, copied into `buf`.
///
/// # Safety
/// `cfg` must be a live config handle; `buf` must hold `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn dpst_config_hash(
    cfg: *const DpstConfig,
    buf: *mut c_char,
    cap: usize,
) -> DpstStatus {
    guard(|| {
        let cfg = deref(cfg, "cfg")?;
        if buf.is_null() {
            return Err(fail(DpstStatus::NullPointer, "buf is null"));
        }
        let hash = cfg.inner.config_hash();
        if cap < hash.len() + 1 {
            return Err(fail(
                DpstStatus::OutOfRange,
                format!("buffer needs {} bytes", hash.len() + 1),
            ));
        }
        ptr::copy_nonoverlapping(hash.as_ptr().cast::<c_char>(), buf, hash.len());
        *buf.add(hash.len()) = 0;
        Ok(())
    })
}

/// Condition number of the DPST virtual channel for the fully correlated
/// 2×2 channel. Infinite results are reported as `INFINITY`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dpst_condition_number(
    tau_fraction: f64,
    tx_os: usize,
    rx_os: usize,
    block_symbols: usize,
    out: *mut f64,
) -> DpstStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        let pulse = PulseConfig {
            tau_fraction,
            tx_oversampling: tx_os,
            rx_oversampling: rx_os,
            block_symbols,
        };
        let comp = compose_oversampled(&ComplexMatrix::ones(2, 2), &pulse)?;
        *out = condition_number(&comp.h_n)?;
        Ok(())
    })
}

/// Runs the campaign described by `cfg`. Uses the global thread pool.
///
/// # Safety
/// `cfg` must be a live config handle; `out` a valid `DpstCampaign*` slot.
#[no_mangle]
pub unsafe extern "C" fn dpst_campaign_run(
    cfg: *const DpstConfig,
    out: *mut *mut DpstCampaign,
) -> DpstStatus {
    guard(|| {
        let cfg = deref(cfg, "cfg")?;
        let out = deref_mut(out, "out")?;
        let c = &cfg.inner;
        let result = run_campaign(&c.isd, &c.modes, c.drops, c.seed, &c.scenario(), &c.pulse())?;
        *out = Box::into_raw(Box::new(DpstCampaign {
            config: c.clone(),
            result,
        }));
        Ok(())
    })
}

/// # Safety
/// `c` must come from `dpst_campaign_run` and not be used afterwards. Null
/// is ignored.
#[no_mangle]
pub unsafe extern "C" fn dpst_campaign_free(c: *mut DpstCampaign) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// # Safety
/// `c` must be a live campaign handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dpst_campaign_isd_count(
    c: *const DpstCampaign,
    out: *mut usize,
) -> DpstStatus {
    guard(|| {
        *deref_mut(out, "out")? = deref(c, "campaign")?.result.isds.len();
        Ok(())
    })
}

unsafe fn isd_result<'a>(
    c: *const DpstCampaign,
    isd_index: usize,
) -> Result<&'a dpst_core::network::IsdResult, Failure> {
    let c = deref(c, "campaign")?;
    c.result.isds.get(isd_index).ok_or_else(|| {
        fail(
            DpstStatus::OutOfRange,
            format!("ISD index {isd_index} out of range"),
        )
    })
}

unsafe fn cdf<'a>(
    c: *const DpstCampaign,
    isd_index: usize,
    mode: u32,
    metric: u32,
) -> Result<&'a dpst_core::network::CdfSummary, Failure> {
    let r = isd_result(c, isd_index)?;
    let (mode, metric) = (mode_from(mode)?, metric_from(metric)?);
    r.cdf(mode, metric).ok_or_else(|| {
        fail(
            DpstStatus::InvalidArgument,
            format!("mode {mode} was not simulated"),
        )
    })
}

/// ISD in meters at `isd_index`.
///
/// # Safety
/// `c` must be a live campaign handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dpst_campaign_isd(
    c: *const DpstCampaign,
    isd_index: usize,
    out: *mut f64,
) -> DpstStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        *out = isd_result(c, isd_index)?.isd_m;
        Ok(())
    })
}

/// Median of a metric for one ISD and mode.
///
/// # Safety
/// `c` must be a live campaign handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dpst_campaign_median(
    c: *const DpstCampaign,
    isd_index: usize,
    mode: u32,
    metric: u32,
    out: *mut f64,
) -> DpstStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        *out = cdf(c, isd_index, mode, metric)?.median();
        Ok(())
    })
}

/// Median effective-SINR gain of DPST over the correlated channel, dB.
///
/// # Safety
/// `c` must be a live campaign handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dpst_campaign_median_gain_db(
    c: *const DpstCampaign,
    isd_index: usize,
    out: *mut f64,
) -> DpstStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        *out = isd_result(c, isd_index)?.median_gain_db().ok_or_else(|| {
            fail(
                DpstStatus::InvalidArgument,
                "campaign lacks dpst or correlated_los mode",
            )
        })?;
        Ok(())
    })
}

/// Number of CDF samples for one ISD, mode and metric.
///
/// # Safety
/// `c` must be a live campaign handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dpst_campaign_cdf_len(
    c: *const DpstCampaign,
    isd_index: usize,
    mode: u32,
    metric: u32,
    out: *mut usize,
) -> DpstStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        *out = cdf(c, isd_index, mode, metric)?.len();
        Ok(())
    })
}

/// Copies the sorted CDF samples into `buf`, which must hold at least
/// `dpst_campaign_cdf_len` values.
///
/// # Safety
/// `c` must be a live campaign handle; `buf` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn dpst_campaign_cdf_samples(
    c: *const DpstCampaign,
    isd_index: usize,
    mode: u32,
    metric: u32,
    buf: *mut f64,
    cap: usize,
) -> DpstStatus {
    guard(|| {
        let samples = cdf(c, isd_index, mode, metric)?.samples();
        if buf.is_null() {
            return Err(fail(DpstStatus::NullPointer, "buf is null"));
        }
        if cap < samples.len() {
            return Err(fail(
                DpstStatus::OutOfRange,
                format!("buffer needs {} values", samples.len()),
            ));
        }
        ptr::copy_nonoverlapping(samples.as_ptr(), buf, samples.len());
        Ok(())
    })
}

/// Writes the CDF CSVs and `summary.json` into `dir`, creating it if needed.
///
/// # Safety
/// `c` must be a live campaign handle; `dir` a NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn dpst_campaign_write(
    c: *const DpstCampaign,
    dir: *const c_char,
) -> DpstStatus {
    guard(|| {
        let c = deref(c, "campaign")?;
        let cfg = RunConfig {
            out: PathBuf::from(c_str(dir, "dir")?),
            ..c.config.clone()
        };
        write_campaign(&cfg, &c.result)?;
        Ok(())
    })
}
