//! Per-drop link processing: SVD precoding, interference covariance, MMSE
//! equalisation, post-equaliser SINR and throughput.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::numerics::{cholesky, frobenius_norm, hermitian_solve, svd, Complex64, ComplexMatrix};
use crate::pulse::CompositeChannel;

/// Effective SINR reported when the capacity-equivalent SINR is below this
/// (or zero).
pub const EFFECTIVE_SINR_FLOOR_DB: f64 = -30.0;

/// Tolerance on `Φ` being Hermitian, absolute, scaled by its largest entry.
pub const HERMITIAN_TOLERANCE: f64 = 1e-10;
/// Most negative eigenvalue accepted for `Φ`, relative to its trace.
pub const PSD_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelMode {
    CorrelatedLos,
    Dpst,
    Ideal,
}

impl ChannelMode {
    pub const ALL: [ChannelMode; 3] = [
        ChannelMode::CorrelatedLos,
        ChannelMode::Dpst,
        ChannelMode::Ideal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ChannelMode::CorrelatedLos => "correlated_los",
            ChannelMode::Dpst => "dpst",
            ChannelMode::Ideal => "ideal",
        }
    }
}

impl fmt::Display for ChannelMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ChannelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "correlated_los" | "los" => Ok(ChannelMode::CorrelatedLos),
            "dpst" => Ok(ChannelMode::Dpst),
            "ideal" => Ok(ChannelMode::Ideal),
            other => Err(Error::config(
                "mode",
                format!("unknown mode {other:?} (expected correlated_los, dpst or ideal)"),
            )),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Precoder {
    pub w: ComplexMatrix,
    /// `ρ`, so that `W = √p_bs · ρ · V`.
    pub power_scale: f64,
    /// Transmit power, watts.
    pub p_bs: f64,
}

/// Right singular vectors of `h_n`, scaled so `‖W‖_F² = p_bs` with the power
/// split equally across both streams.
pub fn make_precoder(h_n: &ComplexMatrix, p_bs: f64) -> Result<Precoder> {
    if h_n.shape() != (2, 2) {
        return Err(Error::shape(
            "make_precoder",
            format!("channel must be 2x2, got {:?}", h_n.shape()),
        ));
    }
    if !(p_bs > 0.0 && p_bs.is_finite()) {
        return Err(Error::Domain(format!(
            "transmit power must be positive, got {p_bs}"
        )));
    }
    if frobenius_norm(h_n) == 0.0 {
        return Err(Error::Degenerate("precoder for a zero channel"));
    }
    let v = svd(h_n)?.v;
    let power_scale = 1.0 / (v.cols() as f64).sqrt();
    Ok(Precoder {
        w: v.scale(p_bs.sqrt() * power_scale),
        power_scale,
        p_bs,
    })
}

/// `Φ = Σ_j g_j·(p_bs/2)·H_j·H_j^H`.
pub fn interference_covariance(interferers: &[ChannelRealization], p_bs: f64) -> ComplexMatrix {
    let mut phi = ComplexMatrix::zeros(2, 2);
    for link in interferers {
        let h = &link.fading;
        let outer = h * &h.adjoint();
        phi = &phi + &outer.scale(link.large_scale_gain * p_bs / h.cols() as f64);
    }
    phi
}

/// Receiver impairments: white noise `n0` per antenna plus coloured
/// interference `Φ`.
#[derive(Clone, Debug)]
pub struct NoiseModel {
    n0: f64,
    phi: ComplexMatrix,
}

impl NoiseModel {
    pub fn new(n0: f64, phi: ComplexMatrix) -> Result<Self> {
        if !(n0 >= 0.0 && n0.is_finite()) {
            return Err(Error::Domain(format!(
                "noise power must be non-negative, got {n0}"
            )));
        }
        if phi.shape() != (2, 2) {
            return Err(Error::shape(
                "NoiseModel",
                format!("interference covariance must be 2x2, got {:?}", phi.shape()),
            ));
        }
        if !phi.is_finite() {
            return Err(Error::NonFinite);
        }
        let scale = phi.as_slice().iter().map(|z| z.norm()).fold(0.0, f64::max);
        if phi.hermitian_defect() > HERMITIAN_TOLERANCE * scale.max(1.0) {
            return Err(Error::Domain(
                "interference covariance is not Hermitian".into(),
            ));
        }
        let (a, d, b) = (phi[(0, 0)].re, phi[(1, 1)].re, phi[(0, 1)]);
        let min_eig = 0.5 * (a + d) - (0.25 * (a - d).powi(2) + b.norm_sqr()).sqrt();
        if min_eig < -PSD_TOLERANCE * (a + d).abs().max(f64::MIN_POSITIVE) {
            return Err(Error::Domain(format!(
                "interference covariance has eigenvalue {min_eig}"
            )));
        }
        Ok(Self { n0, phi })
    }

    /// Thermal noise only.
    pub fn white(n0: f64) -> Result<Self> {
        Self::new(n0, ComplexMatrix::zeros(2, 2))
    }

    pub fn n0(&self) -> f64 {
        self.n0
    }

    pub fn phi(&self) -> &ComplexMatrix {
        &self.phi
    }

    /// `Φ + n0·I`.
    pub fn covariance(&self) -> ComplexMatrix {
        &self.phi + &ComplexMatrix::identity(2).scale(self.n0)
    }
}

fn check_link_shapes(op: &'static str, h_eq: &ComplexMatrix, phi: &ComplexMatrix) -> Result<()> {
    if h_eq.rows() != phi.rows() || !phi.is_square() {
        return Err(Error::shape(
            op,
            format!(
                "H_eq is {:?}, covariance is {:?}",
                h_eq.shape(),
                phi.shape()
            ),
        ));
    }
    Ok(())
}

/// `F = H^H (H·H^H + Φ + n0·I)^{-1}`.
pub fn mmse_filter(h_eq: &ComplexMatrix, phi: &ComplexMatrix, n0: f64) -> Result<ComplexMatrix> {
    check_link_shapes("mmse_filter", h_eq, phi)?;
    let n = h_eq.rows();
    let a = &(&(h_eq * &h_eq.adjoint()) + phi) + &ComplexMatrix::identity(n).scale(n0);
    // A is Hermitian, so F = (A^{-1} H)^H.
    Ok(hermitian_solve(&a, h_eq)?.adjoint())
}

/// Post-MMSE SINR per stream for unit-power symbols:
/// `1/[(I + H^H R_n^{-1} H)^{-1}]_kk − 1` with `R_n = Φ + n0·I`.
pub fn per_stream_sinr(h_eq: &ComplexMatrix, phi: &ComplexMatrix, n0: f64) -> Result<Vec<f64>> {
    check_link_shapes("per_stream_sinr", h_eq, phi)?;
    let n = h_eq.rows();
    let k = h_eq.cols();
    let r_n = phi + &ComplexMatrix::identity(n).scale(n0);
    let whitened = hermitian_solve(&r_n, h_eq)?;
    let b = &ComplexMatrix::identity(k) + &(&h_eq.adjoint() * &whitened);
    let mse = hermitian_solve(&b, &ComplexMatrix::identity(k))?;
    Ok(mse
        .diagonal()
        .iter()
        .map(|d| (1.0 / d.re - 1.0).max(0.0))
        .collect())
}

/// Shannon capacity over all streams and the SINR that would give the same
/// capacity on every stream, in dB (floored at [`EFFECTIVE_SINR_FLOOR_DB`]).
pub fn effective_sinr_and_throughput(sinrs: &[f64], bandwidth_hz: f64) -> Result<(f64, f64)> {
    if sinrs.is_empty() {
        return Err(Error::Domain("no streams".into()));
    }
    if let Some(bad) = sinrs.iter().find(|s| !(**s >= 0.0) || !s.is_finite()) {
        return Err(Error::Domain(format!(
            "SINR must be finite and non-negative, got {bad}"
        )));
    }
    if !(bandwidth_hz > 0.0 && bandwidth_hz.is_finite()) {
        return Err(Error::Domain(format!(
            "bandwidth must be positive, got {bandwidth_hz}"
        )));
    }
    let spectral: f64 = sinrs.iter().map(|s| s.ln_1p()).sum::<f64>() / std::f64::consts::LN_2;
    let throughput = bandwidth_hz * spectral;
    let eff = (spectral / sinrs.len() as f64).exp2() - 1.0;
    let eff_db = if eff > 0.0 {
        (10.0 * eff.log10()).max(EFFECTIVE_SINR_FLOOR_DB)
    } else {
        EFFECTIVE_SINR_FLOOR_DB
    };
    Ok((eff_db, throughput))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkResult {
    pub sinr_per_stream: Vec<f64>,
    pub effective_sinr_db: f64,
    pub throughput_bps: f64,
    pub channel_mode: ChannelMode,
}

/// Precodes over `h_n`, applies the serving link's large-scale gain and
/// evaluates the MMSE receiver.
pub fn evaluate_link(
    mode: ChannelMode,
    h_n: &ComplexMatrix,
    serving_gain: f64,
    p_bs: f64,
    noise: &NoiseModel,
    bandwidth_hz: f64,
) -> Result<LinkResult> {
    if !(serving_gain > 0.0 && serving_gain.is_finite()) {
        return Err(Error::Domain(format!(
            "serving gain must be positive, got {serving_gain}"
        )));
    }
    let precoder = make_precoder(h_n, p_bs)?;
    let h_eq = (h_n * &precoder.w).scale(serving_gain.sqrt());
    let sinr = per_stream_sinr(&h_eq, noise.phi(), noise.n0())?;
    let (effective_sinr_db, throughput_bps) = effective_sinr_and_throughput(&sinr, bandwidth_hz)?;
    Ok(LinkResult {
        sinr_per_stream: sinr,
        effective_sinr_db,
        throughput_bps,
        channel_mode: mode,
    })
}

/// Unit-power QPSK block, `streams × len`.
pub fn qpsk_block<R: Rng + ?Sized>(streams: usize, len: usize, rng: &mut R) -> ComplexMatrix {
    let a = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_fn(streams, len, |_, _| {
        let re = if rng.random::<bool>() { a } else { -a };
        let im = if rng.random::<bool>() { a } else { -a };
        Complex64::new(re, im)
    })
}

/// Symbol-level path. Column `k` of `s` is precoded, mapped onto the
/// oversampled block through `V_os`, passed through `√g·H_os`, projected on
/// `U_os` and renormalised, then disturbed by `CN(0, Φ + n0·I)` and
/// equalised with the MMSE filter of the equivalent 2×2 channel.
pub fn transmit_and_estimate<R: Rng + ?Sized>(
    s: &ComplexMatrix,
    composite: &CompositeChannel,
    precoder: &Precoder,
    serving_gain: f64,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<ComplexMatrix> {
    if s.rows() != precoder.w.cols() {
        return Err(Error::shape(
            "transmit_and_estimate",
            format!(
                "{} streams for a {}-column precoder",
                s.rows(),
                precoder.w.cols()
            ),
        ));
    }
    if composite.v_basis.cols() != precoder.w.rows()
        || composite.h_os.cols() != composite.v_basis.rows()
    {
        return Err(Error::shape(
            "transmit_and_estimate",
            "composite channel does not match precoder".to_string(),
        ));
    }
    let g = serving_gain.sqrt();
    let tx = &composite.v_basis * &(&precoder.w * s);
    let rx_os = (&composite.h_os * &tx).scale(g);
    let mut y = (&composite.u_basis.adjoint() * &rx_os).scale(composite.scale);

    let cov = noise.covariance();
    if frobenius_norm(&cov) > 0.0 {
        let l = cholesky(&cov)?;
        let z = ComplexMatrix::from_fn(y.rows(), y.cols(), |_, _| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re, im).scale(std::f64::consts::FRAC_1_SQRT_2)
        });
        y = &y + &(&l * &z);
    }

    let h_eq = (&composite.h_n * &precoder.w).scale(g);
    let f = mmse_filter(&h_eq, noise.phi(), noise.n0())?;
    Ok(&f * &y)
}
