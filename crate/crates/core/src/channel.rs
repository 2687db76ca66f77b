//! Per-link 2×2 fading and large-scale gain.
//!
//! Fast fading follows a Rician mixture of a rank-one LOS matrix and a
//! Kronecker-correlated Rayleigh matrix, with a K factor that depends on the
//! link distance. Large-scale gain combines antenna gain, urban-micro path
//! loss and lognormal shadowing.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{frobenius_norm, Complex64, ComplexMatrix};

/// K factor is flat at this value below [`K_FACTOR_BREAK_M`].
pub const K_FACTOR_NEAR: f64 = 32.0;
pub const K_FACTOR_BREAK_M: f64 = 18.0;

/// Rician K factor (linear) as a function of UE-BS distance in meters.
///
/// The two branches do not meet at 18 m (32 vs. about 20.42); the jump is
/// kept as is.
pub fn k_factor(distance_m: f64) -> Result<f64> {
    if !(distance_m > 0.0) || !distance_m.is_finite() {
        return Err(Error::Domain(format!(
            "K factor needs a positive distance, got {distance_m}"
        )));
    }
    if distance_m < K_FACTOR_BREAK_M {
        Ok(K_FACTOR_NEAR)
    } else {
        Ok(140.10 * (-0.107 * distance_m).exp())
    }
}

/// `√(K/(K+1))·H_los + √(1/(K+1))·H_nlos`. An infinite K returns `H_los`.
pub fn rician_compose(k: f64, los: &ComplexMatrix, nlos: &ComplexMatrix) -> Result<ComplexMatrix> {
    if los.shape() != nlos.shape() {
        return Err(Error::shape(
            "rician_compose",
            format!("LOS {:?} vs NLOS {:?}", los.shape(), nlos.shape()),
        ));
    }
    if !(k >= 0.0) {
        return Err(Error::Domain(format!(
            "K factor must be non-negative, got {k}"
        )));
    }
    if k.is_infinite() {
        return Ok(los.clone());
    }
    let w_los = (k / (k + 1.0)).sqrt();
    let w_nlos = (1.0 / (k + 1.0)).sqrt();
    los.scale(w_los).try_add(&nlos.scale(w_nlos))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LosMode {
    /// Rician mixture of the rank-one LOS matrix and correlated NLOS scatter.
    RankOneLos,
    /// LOS component only: the single-tap, fully correlated channel.
    FullCorrelation,
}

/// The LOS matrix: 2×2 all-ones, rank one with infinite condition number.
pub fn los_component(_mode: LosMode) -> ComplexMatrix {
    ComplexMatrix::ones(2, 2)
}

/// Square root of `[[1, ρ], [ρ, 1]]`, in closed form.
fn correlation_sqrt(rho: f64) -> ComplexMatrix {
    let a = ((1.0 + rho).sqrt() + (1.0 - rho).sqrt()) / 2.0;
    let b = ((1.0 + rho).sqrt() - (1.0 - rho).sqrt()) / 2.0;
    ComplexMatrix::from_real(2, 2, &[a, b, b, a]).expect("2x2")
}

/// Correlated Rayleigh matrix `R^{1/2} · H_w · R^{1/2}` with the same
/// correlation coefficient at both ends. Expected per-entry power is one.
pub fn nlos_component<R: Rng + ?Sized>(corr: f64, rng: &mut R) -> Result<ComplexMatrix> {
    if !(0.0..1.0).contains(&corr) {
        return Err(Error::Domain(format!(
            "NLOS correlation must lie in [0, 1), got {corr}"
        )));
    }
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let hw = ComplexMatrix::from_fn(2, 2, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re * scale, im * scale)
    });
    let r = correlation_sqrt(corr);
    Ok(&(&r * &hw) * &r)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FadingParams {
    pub distance_m: f64,
    pub nlos_correlation: f64,
    pub los_mode: LosMode,
}

impl FadingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.distance_m > 0.0) {
            return Err(Error::Domain(format!(
                "distance must be positive, got {}",
                self.distance_m
            )));
        }
        if !(0.0..1.0).contains(&self.nlos_correlation) {
            return Err(Error::Domain(format!(
                "NLOS correlation must lie in [0, 1), got {}",
                self.nlos_correlation
            )));
        }
        Ok(())
    }
}

/// Draws one 2×2 fading matrix.
///
/// `FullCorrelation` returns the LOS matrix without consuming randomness;
/// `RankOneLos` mixes it with NLOS scatter using the distance-dependent K.
pub fn fading_realization<R: Rng + ?Sized>(
    params: &FadingParams,
    rng: &mut R,
) -> Result<ComplexMatrix> {
    params.validate()?;
    let los = los_component(params.los_mode);
    match params.los_mode {
        LosMode::FullCorrelation => Ok(los),
        LosMode::RankOneLos => {
            let k = k_factor(params.distance_m)?;
            let nlos = nlos_component(params.nlos_correlation, rng)?;
            rician_compose(k, &los, &nlos)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathLossModel {
    /// `22.0·log10(d) + 28.0 + 20·log10(f_GHz)`
    UrbanMicroLos,
    /// `36.7·log10(d) + 22.7 + 26·log10(f_GHz)`
    UrbanMicroNlos,
}

impl PathLossModel {
    /// Path loss in dB; `distance_m` is clamped to at least 1 m.
    pub fn path_loss_db(self, distance_m: f64, carrier_ghz: f64) -> f64 {
        let d = distance_m.max(1.0);
        match self {
            PathLossModel::UrbanMicroLos => 22.0 * d.log10() + 28.0 + 20.0 * carrier_ghz.log10(),
            PathLossModel::UrbanMicroNlos => 36.7 * d.log10() + 22.7 + 26.0 * carrier_ghz.log10(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LargeScaleParams {
    pub carrier_ghz: f64,
    pub shadowing_sigma_db: f64,
    pub antenna_gain_dbi: f64,
    pub pathloss_model: PathLossModel,
}

impl LargeScaleParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.carrier_ghz > 0.0) {
            return Err(Error::Domain(format!(
                "carrier must be positive, got {} GHz",
                self.carrier_ghz
            )));
        }
        if !(self.shadowing_sigma_db >= 0.0) {
            return Err(Error::Domain(format!(
                "shadowing sigma must be non-negative, got {} dB",
                self.shadowing_sigma_db
            )));
        }
        Ok(())
    }
}

/// `10^((G − PL − X)/10)` for antenna gain `G`, path loss `PL` and shadowing
/// `X`, all in dB.
pub fn gain_from_db(antenna_gain_dbi: f64, path_loss_db: f64, shadowing_db: f64) -> f64 {
    10f64.powf((antenna_gain_dbi - path_loss_db - shadowing_db) / 10.0)
}

/// Linear large-scale power gain for one link. Always draws exactly one
/// normal variate so random streams stay aligned when sigma is zero.
pub fn large_scale_gain<R: Rng + ?Sized>(
    distance_m: f64,
    params: &LargeScaleParams,
    rng: &mut R,
) -> Result<f64> {
    params.validate()?;
    let z: f64 = StandardNormal.sample(rng);
    let shadow = params.shadowing_sigma_db * z;
    let pl = params
        .pathloss_model
        .path_loss_db(distance_m, params.carrier_ghz);
    Ok(gain_from_db(params.antenna_gain_dbi, pl, shadow))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    Serving,
    Interferer,
}

/// One link's fading matrix plus the large-scale gain that scales its power.
#[derive(Clone, Debug)]
pub struct ChannelRealization {
    pub fading: ComplexMatrix,
    pub large_scale_gain: f64,
    pub link_kind: LinkKind,
    pub distance_m: f64,
}

impl ChannelRealization {
    pub fn draw<R: Rng + ?Sized>(
        link_kind: LinkKind,
        fading: &FadingParams,
        large_scale: &LargeScaleParams,
        rng: &mut R,
    ) -> Result<Self> {
        let h = fading_realization(fading, rng)?;
        let g = large_scale_gain(fading.distance_m, large_scale, rng)?;
        Ok(Self {
            fading: h,
            large_scale_gain: g,
            link_kind,
            distance_m: fading.distance_m,
        })
    }
}

/// Perfectly conditioned 2×2 channel with the reference's Frobenius norm:
/// `‖H‖_F/√2 · I₂`.
pub fn ideal_channel(reference: &ComplexMatrix) -> Result<ComplexMatrix> {
    if reference.shape() != (2, 2) {
        return Err(Error::shape(
            "ideal_channel",
            format!("reference must be 2x2, got {:?}", reference.shape()),
        ));
    }
    let norm = frobenius_norm(reference);
    if norm == 0.0 {
        return Err(Error::Degenerate("ideal channel from a zero reference"));
    }
    Ok(ComplexMatrix::identity(2).scale(norm / 2f64.sqrt()))
}
