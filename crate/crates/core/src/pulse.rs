//! Fractional-delay pulse shaping and the oversampled composite channel.
//!
//! Transmit antenna 1 uses an undelayed sinc interpolator, antenna 2 the same
//! interpolator offset by `tau_fraction`. Each receive antenna resamples its
//! signal `P` times faster with a third interpolator. The resulting tall
//! channel is reduced to a 2×2 virtual channel through its two dominant
//! singular directions and renormalised to the physical channel's power.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{frobenius_norm, svd, Complex64, ComplexMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseConfig {
    /// Delay of antenna 2 in units of the block period (`T_s = 1`).
    pub tau_fraction: f64,
    /// Transmit oversampling ratio `R`.
    pub tx_oversampling: usize,
    /// Receive oversampling factor `P`.
    pub rx_oversampling: usize,
    /// Symbols per block `M`.
    pub block_symbols: usize,
}

impl Default for PulseConfig {
    fn default() -> Self {
        // 5 ns delay at 10 MHz (T_s = 100 ns)
        Self {
            tau_fraction: 0.05,
            tx_oversampling: 4,
            rx_oversampling: 4,
            block_symbols: 10,
        }
    }
}

impl PulseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.tau_fraction) {
            return Err(Error::config(
                "tau_frac",
                format!("{} is outside [0, 1)", self.tau_fraction),
            ));
        }
        if self.tx_oversampling < 1 {
            return Err(Error::config("tx_os", "must be at least 1"));
        }
        if self.rx_oversampling < 1 {
            return Err(Error::config("rx_os", "must be at least 1"));
        }
        if self.block_symbols < 2 {
            return Err(Error::config("block_symbols", "must be at least 2"));
        }
        Ok(())
    }
}

/// Normalised sinc, exact at integer arguments.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else if x.fract() == 0.0 {
        0.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// `N × M` sinc interpolation matrix for `M` input samples and `N = M·R`
/// output samples, offset by `tau`:
///
/// `I[n, m] = sinc((n·T_s/N + τ − m·T_s/M) / (T_s/M))`, `n, m` one-based,
/// `T_s = 1`.
///
/// The argument is evaluated as `n/R + τ·M − m`, which is the same quantity
/// but keeps integer arguments exact.
pub fn interp_matrix(tau: f64, m: usize, n: usize) -> Result<ComplexMatrix> {
    if m == 0 || n == 0 || !n.is_multiple_of(m) {
        return Err(Error::config(
            "interp_matrix",
            format!("output length {n} is not a positive multiple of input length {m}"),
        ));
    }
    if !tau.is_finite() {
        return Err(Error::config("interp_matrix", "delay must be finite"));
    }
    let ratio = (n / m) as f64;
    let shift = tau * m as f64;
    Ok(ComplexMatrix::from_fn(n, m, |row, col| {
        let x = (row + 1) as f64 / ratio + shift - (col + 1) as f64;
        Complex64::new(sinc(x), 0.0)
    }))
}

/// Interpolation kernels for one [`PulseConfig`]. They do not depend on the
/// channel, so one instance is shared read-only by every drop.
#[derive(Clone, Debug)]
pub struct PulseKernels {
    config: PulseConfig,
    tx_reference: ComplexMatrix,
    tx_delayed: ComplexMatrix,
    rx: ComplexMatrix,
    /// `I_R · I_tx` for each transmit antenna, `M·R·P × M`.
    shaped: [ComplexMatrix; 2],
}

impl PulseKernels {
    pub fn new(config: PulseConfig) -> Result<Self> {
        config.validate()?;
        let m = config.block_symbols;
        let n = m * config.tx_oversampling;
        let tx_reference = interp_matrix(0.0, m, n)?;
        let tx_delayed = interp_matrix(config.tau_fraction, m, n)?;
        let rx = interp_matrix(0.0, n, n * config.rx_oversampling)?;
        let shaped = [&rx * &tx_reference, &rx * &tx_delayed];
        Ok(Self {
            config,
            tx_reference,
            tx_delayed,
            rx,
            shaped,
        })
    }

    pub fn config(&self) -> &PulseConfig {
        &self.config
    }

    pub fn tx_reference(&self) -> &ComplexMatrix {
        &self.tx_reference
    }

    pub fn tx_delayed(&self) -> &ComplexMatrix {
        &self.tx_delayed
    }

    pub fn rx(&self) -> &ComplexMatrix {
        &self.rx
    }

    /// Stacks `H_i,os = I_R · [h_i1·I_tx1 | h_i2·I_tx2]` for both receive
    /// antennas. The channel is single-tap, so each convolution is a scalar
    /// multiple of the kernel.
    pub fn oversampled_channel(&self, h: &ComplexMatrix) -> Result<ComplexMatrix> {
        if h.shape() != (2, 2) {
            return Err(Error::shape(
                "compose_oversampled",
                format!("channel must be 2x2, got {:?}", h.shape()),
            ));
        }
        if !h.is_finite() {
            return Err(Error::NonFinite);
        }
        let block_rows = self.shaped[0].rows();
        let m = self.config.block_symbols;
        Ok(ComplexMatrix::from_fn(2 * block_rows, 2 * m, |row, col| {
            let (rx_ant, r) = (row / block_rows, row % block_rows);
            let (tx_ant, c) = (col / m, col % m);
            h[(rx_ant, tx_ant)] * self.shaped[tx_ant][(r, c)]
        }))
    }

    pub fn compose(&self, h: &ComplexMatrix) -> Result<CompositeChannel> {
        let h_os = self.oversampled_channel(h)?;
        let d = downsize_and_normalize(&h_os, h)?;
        Ok(CompositeChannel {
            h_os,
            u_basis: d.u_basis,
            v_basis: d.v_basis,
            h_n: d.h_n,
            scale: d.scale,
        })
    }
}

/// Oversampled channel plus its 2×2 virtual reduction.
#[derive(Clone, Debug)]
pub struct CompositeChannel {
    /// `2·M·R·P × 2·M` composite channel.
    pub h_os: ComplexMatrix,
    /// First two left singular vectors of `h_os` (receiver projection).
    pub u_basis: ComplexMatrix,
    /// First two right singular vectors of `h_os` (transmit mapping of the
    /// two virtual streams onto the block).
    pub v_basis: ComplexMatrix,
    /// Normalised virtual channel.
    pub h_n: ComplexMatrix,
    /// Factor applied to the projected channel, `‖H‖_F / ‖H_R‖_F`.
    pub scale: f64,
}

impl CompositeChannel {
    /// Pass-through composite for a channel used without pulse shaping.
    pub fn direct(h: &ComplexMatrix) -> Result<Self> {
        if h.shape() != (2, 2) {
            return Err(Error::shape(
                "CompositeChannel::direct",
                format!("{:?}", h.shape()),
            ));
        }
        Ok(Self {
            h_os: h.clone(),
            u_basis: ComplexMatrix::identity(2),
            v_basis: ComplexMatrix::identity(2),
            h_n: h.clone(),
            scale: 1.0,
        })
    }
}

/// Output of [`downsize_and_normalize`].
#[derive(Clone, Debug)]
pub struct Downsized {
    pub h_r: ComplexMatrix,
    pub h_n: ComplexMatrix,
    pub u_basis: ComplexMatrix,
    pub v_basis: ComplexMatrix,
    pub scale: f64,
}

/// `H_R = U_os(:,1:2)^H · H_os · V_os(:,1:2)`, then `H_N = H_R·‖H‖_F/‖H_R‖_F`.
pub fn downsize_and_normalize(h_os: &ComplexMatrix, h: &ComplexMatrix) -> Result<Downsized> {
    if h.shape() != (2, 2) {
        return Err(Error::shape(
            "downsize_and_normalize",
            format!("H must be 2x2, got {:?}", h.shape()),
        ));
    }
    if h_os.rows() < 2 || h_os.cols() < 2 {
        return Err(Error::shape(
            "downsize_and_normalize",
            format!("H_os must be at least 2x2, got {:?}", h_os.shape()),
        ));
    }
    let dec = svd(h_os)?;
    let u_basis = dec.u.columns(0, 2);
    let v_basis = dec.v.columns(0, 2);
    let h_r = &(&u_basis.adjoint() * h_os) * &v_basis;
    let r_norm = frobenius_norm(&h_r);
    if r_norm == 0.0 {
        return Err(Error::Degenerate("downsized channel has zero norm"));
    }
    let scale = frobenius_norm(h) / r_norm;
    Ok(Downsized {
        h_n: h_r.scale(scale),
        h_r,
        u_basis,
        v_basis,
        scale,
    })
}

/// [`PulseKernels::compose`] with freshly built kernels.
pub fn compose_oversampled(h: &ComplexMatrix, config: &PulseConfig) -> Result<CompositeChannel> {
    PulseKernels::new(*config)?.compose(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{condition_number, rank, rank_from_singular_values};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg(tau: f64, r: usize, p: usize, m: usize) -> PulseConfig {
        PulseConfig {
            tau_fraction: tau,
            tx_oversampling: r,
            rx_oversampling: p,
            block_symbols: m,
        }
    }

    fn random_channel(rng: &mut ChaCha8Rng) -> ComplexMatrix {
        ComplexMatrix::from_fn(2, 2, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    #[test]
    fn zero_delay_square_interpolator_is_identity() {
        for m in [1, 2, 7, 10] {
            assert_eq!(
                interp_matrix(0.0, m, m).unwrap(),
                ComplexMatrix::identity(m)
            );
        }
    }

    #[test]
    fn one_sample_delay_is_a_shift() {
        let m = 6;
        let shifted = interp_matrix(1.0 / m as f64, m, m).unwrap();
        for n in 0..m {
            for c in 0..m {
                let expected = if c == n + 1 { 1.0 } else { 0.0 };
                assert_eq!(shifted[(n, c)], Complex64::new(expected, 0.0), "({n}, {c})");
            }
        }
    }

    #[test]
    fn half_sample_scalar() {
        let v = interp_matrix(0.5, 1, 1).unwrap();
        assert!((v[(0, 0)].re - 2.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn interp_shape_errors() {
        assert!(interp_matrix(0.0, 3, 7).is_err());
        assert!(interp_matrix(0.0, 0, 0).is_err());
        assert_eq!(interp_matrix(0.2, 3, 12).unwrap().shape(), (12, 3));
    }

    #[test]
    fn config_validation() {
        assert!(PulseConfig::default().validate().is_ok());
        assert!(cfg(1.5, 4, 4, 10).validate().is_err());
        assert!(cfg(-0.1, 4, 4, 10).validate().is_err());
        assert!(cfg(0.1, 0, 4, 10).validate().is_err());
        assert!(cfg(0.1, 4, 0, 10).validate().is_err());
        assert!(cfg(0.1, 4, 4, 1).validate().is_err());
    }

    #[test]
    fn no_oversampling_no_delay_is_identity() {
        let comp = compose_oversampled(&ComplexMatrix::identity(2), &cfg(0.0, 1, 1, 10)).unwrap();
        assert_eq!(comp.h_os, ComplexMatrix::identity(20));
    }

    #[test]
    fn composite_is_tall_with_oversampling() {
        let c = cfg(0.05, 4, 2, 10);
        let comp = compose_oversampled(&ComplexMatrix::ones(2, 2), &c).unwrap();
        assert_eq!(comp.h_os.shape(), (2 * 10 * 4 * 2, 20));
        assert!(comp.h_os.rows() > comp.h_os.cols());
        assert_eq!(comp.u_basis.shape(), (160, 2));
        assert_eq!(comp.v_basis.shape(), (20, 2));
    }

    #[test]
    fn zero_delay_adds_no_rank_fractional_delay_does() {
        let ones = ComplexMatrix::ones(2, 2);
        for (r, p) in [(1, 2), (2, 2), (4, 4)] {
            let k = PulseKernels::new(cfg(0.0, r, p, 10)).unwrap();
            assert_eq!(
                rank(&k.oversampled_channel(&ones).unwrap()).unwrap(),
                10,
                "R={r} P={p}"
            );
        }
        let k = PulseKernels::new(PulseConfig::default()).unwrap();
        assert!(rank(&k.oversampled_channel(&ones).unwrap()).unwrap() > 10);
    }

    #[test]
    fn default_dpst_on_fully_correlated_channel() {
        let comp =
            compose_oversampled(&ComplexMatrix::ones(2, 2), &PulseConfig::default()).unwrap();
        assert_eq!(rank(&comp.h_n).unwrap(), 2);
        let cond = condition_number(&comp.h_n).unwrap();
        assert!(cond.is_finite() && cond <= 2.0, "cond {cond}");
    }

    #[test]
    fn fully_correlated_channel_gains_rank_for_fractional_delays() {
        let ones = ComplexMatrix::ones(2, 2);
        for tau in [0.011, 0.05, 0.13, 0.25, 0.5, 0.77, 0.98] {
            let comp = compose_oversampled(&ones, &cfg(tau, 4, 4, 10)).unwrap();
            assert_eq!(rank(&comp.h_n).unwrap(), 2, "tau {tau}");
            assert!(condition_number(&comp.h_n).unwrap().is_finite());
        }
    }

    #[test]
    fn unitary_input_is_only_rescaled() {
        let h = ComplexMatrix::from_real(2, 2, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let h_os = ComplexMatrix::identity(2);
        let d = downsize_and_normalize(&h_os, &h).unwrap();
        let expected_scale = frobenius_norm(&h) / 2f64.sqrt();
        assert!(
            d.h_n
                .max_abs_diff(&ComplexMatrix::identity(2).scale(expected_scale))
                < 1e-12
        );
        assert!((frobenius_norm(&d.h_n) - frobenius_norm(&h)).abs() < 1e-12);
    }

    #[test]
    fn zero_channel_is_degenerate() {
        let r = compose_oversampled(&ComplexMatrix::zeros(2, 2), &PulseConfig::default());
        assert!(matches!(r, Err(Error::Degenerate(_))));
        assert!(compose_oversampled(&ComplexMatrix::ones(3, 2), &PulseConfig::default()).is_err());
    }

    #[test]
    fn reduction_keeps_power_and_top_singular_values() {
        let kernels = PulseKernels::new(cfg(0.2, 2, 2, 6)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let h = random_channel(&mut rng);
            let comp = kernels.compose(&h).unwrap();
            let rel = (frobenius_norm(&comp.h_n) - frobenius_norm(&h)).abs() / frobenius_norm(&h);
            assert!(rel < 1e-9);

            let top = svd(&comp.h_os).unwrap().singular_values;
            let h_r = comp.h_n.scale(1.0 / comp.scale);
            let reduced = svd(&h_r).unwrap().singular_values;
            assert!((reduced[0] - top[0]).abs() < 1e-9 * top[0]);
            assert!((reduced[1] - top[1]).abs() < 1e-9 * top[0]);
            assert_eq!(rank_from_singular_values(&reduced), 2);
        }
    }

    #[test]
    fn channel_scaling_is_transparent() {
        let kernels = PulseKernels::new(PulseConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = random_channel(&mut rng);
        let a = kernels.compose(&h).unwrap();
        let b = kernels.compose(&h.scale(7.5)).unwrap();
        let sa = svd(&a.h_n).unwrap().singular_values;
        let sb = svd(&b.h_n).unwrap().singular_values;
        for (x, y) in sa.iter().zip(&sb) {
            assert!((y / x - 7.5).abs() < 1e-9);
        }
        let ca = condition_number(&a.h_n).unwrap();
        let cb = condition_number(&b.h_n).unwrap();
        assert!((ca - cb).abs() < 1e-9 * ca);
    }
}
