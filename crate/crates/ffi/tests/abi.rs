use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use dpst_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(dpst_last_error()) }
        .to_string_lossy()
        .into_owned()
}

fn small_config(drops: usize) -> *mut DpstConfig {
    let mut cfg = ptr::null_mut();
    unsafe {
        assert_eq!(dpst_config_new(&mut cfg), DpstStatus::Ok);
        assert_eq!(dpst_config_set_drops(cfg, drops), DpstStatus::Ok);
        assert_eq!(dpst_config_set_seed(cfg, 3), DpstStatus::Ok);
    }
    cfg
}

#[test]
fn campaign_round_trip() {
    unsafe {
        let cfg = small_config(50);
        let isds = [20.0, 150.0];
        assert_eq!(
            dpst_config_set_isds(cfg, isds.as_ptr(), isds.len()),
            DpstStatus::Ok
        );

        let mut c = ptr::null_mut();
        assert_eq!(dpst_campaign_run(cfg, &mut c), DpstStatus::Ok);
        let mut n = 0usize;
        assert_eq!(dpst_campaign_isd_count(c, &mut n), DpstStatus::Ok);
        assert_eq!(n, 2);
        let mut isd = 0.0;
        assert_eq!(dpst_campaign_isd(c, 1, &mut isd), DpstStatus::Ok);
        assert_eq!(isd, 150.0);

        let mut gain = 0.0;
        assert_eq!(
            dpst_campaign_median_gain_db(c, 0, &mut gain),
            DpstStatus::Ok
        );
        assert!(gain > 0.0);

        let mut len = 0usize;
        assert_eq!(
            dpst_campaign_cdf_len(c, 0, DPST_MODE_DPST, DPST_METRIC_THROUGHPUT_BPS, &mut len),
            DpstStatus::Ok
        );
        assert_eq!(len, 50);
        let mut buf = vec![0.0; len];
        assert_eq!(
            dpst_campaign_cdf_samples(
                c,
                0,
                DPST_MODE_DPST,
                DPST_METRIC_THROUGHPUT_BPS,
                buf.as_mut_ptr(),
                len
            ),
            DpstStatus::Ok
        );
        assert!(buf.windows(2).all(|w| w[0] <= w[1]));

        let mut median = 0.0;
        assert_eq!(
            dpst_campaign_median(
                c,
                0,
                DPST_MODE_DPST,
                DPST_METRIC_THROUGHPUT_BPS,
                &mut median
            ),
            DpstStatus::Ok
        );
        assert!(median >= buf[0] && median <= buf[len - 1]);

        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().to_str().unwrap()).unwrap();
        assert_eq!(dpst_campaign_write(c, path.as_ptr()), DpstStatus::Ok);
        assert!(dir.path().join("sinr_cdf_150_ideal.csv").exists());
        assert!(dir.path().join("summary.json").exists());

        dpst_campaign_free(c);
        dpst_config_free(cfg);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let cfg = small_config(10);
        assert_eq!(dpst_config_set_tau_fraction(cfg, 1.5), DpstStatus::Config);
        assert!(last_error().contains("tau_frac"), "{}", last_error());
        assert_eq!(dpst_config_set_drops(cfg, 0), DpstStatus::Config);
        let bad_modes = [7u32];
        assert_eq!(
            dpst_config_set_modes(cfg, bad_modes.as_ptr(), 1),
            DpstStatus::InvalidArgument
        );
        assert_eq!(dpst_config_set_oversampling(cfg, 2, 2), DpstStatus::Ok);
        assert_eq!(last_error(), "");

        let only_dpst = [DPST_MODE_DPST];
        assert_eq!(
            dpst_config_set_modes(cfg, only_dpst.as_ptr(), 1),
            DpstStatus::Ok
        );
        let mut c = ptr::null_mut();
        assert_eq!(dpst_campaign_run(cfg, &mut c), DpstStatus::Ok);
        let mut x = 0.0;
        assert_eq!(
            dpst_campaign_median_gain_db(c, 0, &mut x),
            DpstStatus::InvalidArgument
        );
        assert_eq!(
            dpst_campaign_median(c, 0, DPST_MODE_IDEAL, DPST_METRIC_EFFECTIVE_SINR_DB, &mut x),
            DpstStatus::InvalidArgument
        );
        assert_eq!(
            dpst_campaign_median(c, 9, DPST_MODE_DPST, DPST_METRIC_EFFECTIVE_SINR_DB, &mut x),
            DpstStatus::OutOfRange
        );
        assert_eq!(
            dpst_campaign_median(c, 0, DPST_MODE_DPST, 5, &mut x),
            DpstStatus::InvalidArgument
        );
        let mut small = [0.0; 2];
        assert_eq!(
            dpst_campaign_cdf_samples(
                c,
                0,
                DPST_MODE_DPST,
                DPST_METRIC_EFFECTIVE_SINR_DB,
                small.as_mut_ptr(),
                2
            ),
            DpstStatus::OutOfRange
        );
        dpst_campaign_free(c);
        dpst_config_free(cfg);
    }
}

#[test]
fn null_pointers_are_rejected() {
    unsafe {
        assert_eq!(dpst_config_new(ptr::null_mut()), DpstStatus::NullPointer);
        assert_eq!(
            dpst_config_set_seed(ptr::null_mut(), 1),
            DpstStatus::NullPointer
        );
        let mut c = ptr::null_mut();
        assert_eq!(
            dpst_campaign_run(ptr::null(), &mut c),
            DpstStatus::NullPointer
        );
        assert!(c.is_null());
        assert_eq!(
            dpst_condition_number(0.05, 4, 4, 10, ptr::null_mut()),
            DpstStatus::NullPointer
        );
        dpst_config_free(ptr::null_mut());
        dpst_campaign_free(ptr::null_mut());
    }
}

#[test]
fn toml_config_and_hash() {
    unsafe {
        let text = CString::new("seed = 42\nisd = [50.0]\n").unwrap();
        let mut cfg = ptr::null_mut();
        assert_eq!(
            dpst_config_from_toml(text.as_ptr(), &mut cfg),
            DpstStatus::Ok
        );
        let mut buf = [0 as std::ffi::c_char; 32];
        assert_eq!(
            dpst_config_hash(cfg, buf.as_mut_ptr(), buf.len()),
            DpstStatus::Ok
        );
        let hash = CStr::from_ptr(buf.as_ptr()).to_str().unwrap();
        assert_eq!(hash.len(), 16);
        assert_eq!(
            dpst_config_hash(cfg, buf.as_mut_ptr(), 4),
            DpstStatus::OutOfRange
        );
        dpst_config_free(cfg);

        let bad = CString::new("nonsense_key = 1\n").unwrap();
        let mut cfg = ptr::null_mut();
        assert_eq!(
            dpst_config_from_toml(bad.as_ptr(), &mut cfg),
            DpstStatus::Config
        );
        assert!(cfg.is_null());
        assert!(last_error().contains("nonsense_key"));
    }
}

#[test]
fn condition_numbers() {
    let mut c = 0.0;
    unsafe {
        assert_eq!(
            dpst_condition_number(0.05, 4, 4, 10, &mut c),
            DpstStatus::Ok
        );
    }
    assert!(c.is_finite() && c <= 2.0);
    unsafe {
        assert_eq!(
            dpst_condition_number(2.0, 4, 4, 10, &mut c),
            DpstStatus::Config
        );
    }
    let v = unsafe { CStr::from_ptr(dpst_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("include")
        .join("dpst.h")
}

#[test]
fn header_declares_public_api() {
    let text = std::fs::read_to_string(header()).unwrap();
    for sym in [
        "dpst_last_error",
        "dpst_config_new",
        "dpst_config_from_toml",
        "dpst_config_free",
        "dpst_config_set_isds",
        "dpst_config_set_modes",
        "dpst_campaign_run",
        "dpst_campaign_cdf_samples",
        "dpst_campaign_write",
        "dpst_campaign_free",
        "dpst_condition_number",
        "typedef struct DpstConfig DpstConfig",
        "typedef struct DpstCampaign DpstCampaign",
        "DPST_STATUS_OK = 0",
        "DPST_MODE_DPST 1",
    ] {
        assert!(text.contains(sym), "missing {sym}");
    }
}

fn static_lib() -> Option<PathBuf> {
    // <target>/<profile>/deps/abi-<hash> → <target>/<profile>/libdpst_ffi.a
    let exe = std::env::current_exe().ok()?;
    let profile_dir = exe.parent()?.parent()?;
    let lib = profile_dir.join("libdpst_ffi.a");
    lib.exists().then_some(lib)
}

#[test]
fn c_program_links_and_runs() {
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("no C compiler; skipped");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(
        &src,
        r#"
#include <math.h>
#include <stdio.h>
#include "dpst.h"

int main(void) {
    DpstConfig *cfg = NULL;
    if (dpst_config_new(&cfg) != DPST_STATUS_OK) return 1;
    if (dpst_config_set_tau_fraction(cfg, 3.0) != DPST_STATUS_CONFIG) return 2;
    if (dpst_last_error()[0] == '\0') return 3;
    double cond = 0.0;
    if (dpst_condition_number(0.05, 4, 4, 10, &cond) != DPST_STATUS_OK) return 4;
    if (!(cond >= 1.0 && cond <= 2.0)) return 5;
    dpst_config_set_drops(cfg, 20);
    double isd = 50.0;
    dpst_config_set_isds(cfg, &isd, 1);
    DpstCampaign *c = NULL;
    if (dpst_campaign_run(cfg, &c) != DPST_STATUS_OK) return 6;
    double gain = 0.0;
    if (dpst_campaign_median_gain_db(c, 0, &gain) != DPST_STATUS_OK || !(gain > 0.0)) return 7;
    printf("%.3f\n", gain);
    dpst_campaign_free(c);
    dpst_config_free(cfg);
    return 0;
}
"#,
    )
    .unwrap();
    let include = header().parent().unwrap().to_path_buf();

    let syntax = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&src)
        .output()
        .unwrap();
    assert!(
        syntax.status.success(),
        "{}",
        String::from_utf8_lossy(&syntax.stderr)
    );

    let Some(lib) = static_lib() else {
        eprintln!("static library not found; link step skipped");
        return;
    };
    let exe = dir.path().join("main");
    let build = Command::new("cc")
        .args(["-std=c99", "-I"])
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(
        build.status.success(),
        "{}",
        String::from_utf8_lossy(&build.stderr)
    );
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    let gain: f64 = String::from_utf8_lossy(&run.stdout).trim().parse().unwrap();
    assert!(gain > 0.0);
}
