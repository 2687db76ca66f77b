use dpst_core::channel::{k_factor, nlos_component, ChannelRealization, LinkKind};
use dpst_core::link::{interference_covariance, make_precoder, mmse_filter, per_stream_sinr};
use dpst_core::network::{CdfSummary, Metric};
use dpst_core::numerics::{
    cholesky, frobenius_norm, hermitian_solve, svd, Complex64, ComplexMatrix,
};
use dpst_core::pulse::{PulseConfig, PulseKernels};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn to_na(m: &ComplexMatrix) -> DMatrix<Complex64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = ComplexMatrix> {
    proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), rows * cols).prop_map(move |v| {
        ComplexMatrix::new(
            rows,
            cols,
            v.into_iter()
                .map(|(re, im)| Complex64::new(re, im))
                .collect(),
        )
        .unwrap()
    })
}

fn any_shape() -> impl Strategy<Value = ComplexMatrix> {
    (1usize..7, 1usize..7).prop_flat_map(|(r, c)| matrix(r, c))
}

fn hermitian_pd(n: usize) -> impl Strategy<Value = ComplexMatrix> {
    matrix(n, n).prop_map(move |a| &(&a * &a.adjoint()) + &ComplexMatrix::identity(n).scale(0.1))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn singular_values_match_nalgebra(a in any_shape()) {
        let ours = svd(&a).unwrap();
        let mut theirs: Vec<f64> = to_na(&a).singular_values().iter().cloned().collect();
        theirs.sort_by(|x, y| y.total_cmp(x));
        let scale = theirs[0].max(1.0);
        for (x, y) in ours.singular_values.iter().zip(&theirs) {
            prop_assert!((x - y).abs() < 1e-10 * scale, "{x} vs {y}");
        }
        let err = frobenius_norm(&ours.reconstruct().try_sub(&a).unwrap());
        prop_assert!(err < 1e-10 * scale);
    }

    #[test]
    fn hermitian_solve_matches_nalgebra(a in hermitian_pd(3), b in matrix(3, 2)) {
        let x = hermitian_solve(&a, &b).unwrap();
        let na = to_na(&a).lu().solve(&to_na(&b)).unwrap();
        for i in 0..3 {
            for j in 0..2 {
                prop_assert!((x[(i, j)] - na[(i, j)]).norm() < 1e-8);
            }
        }
        let l = cholesky(&a).unwrap();
        prop_assert!((&l * &l.adjoint()).max_abs_diff(&a) < 1e-10);
    }

    #[test]
    fn mmse_satisfies_normal_equations(h in matrix(2, 2), phi_root in matrix(2, 2), n0 in 1e-3f64..1.0) {
        let phi = &phi_root * &phi_root.adjoint();
        let f = mmse_filter(&h, &phi, n0).unwrap();
        let a = &(&(&h * &h.adjoint()) + &phi) + &ComplexMatrix::identity(2).scale(n0);
        prop_assert!((&f * &a).max_abs_diff(&h.adjoint()) < 1e-9);
    }

    #[test]
    fn sinr_non_increasing_in_noise(h in matrix(2, 2), phi_root in matrix(2, 2), n0 in 1e-3f64..1.0, k in 1.0f64..10.0) {
        let phi = &phi_root * &phi_root.adjoint();
        let lo = per_stream_sinr(&h, &phi, n0).unwrap();
        let hi = per_stream_sinr(&h, &phi, n0 * k).unwrap();
        for (a, b) in lo.iter().zip(&hi) {
            prop_assert!(*b <= *a * (1.0 + 1e-9) + 1e-12);
        }
    }

    #[test]
    fn sinr_invariant_to_common_scaling(h in matrix(2, 2), phi_root in matrix(2, 2), n0 in 1e-3f64..1.0, c in 1e-3f64..1e3) {
        let phi = &phi_root * &phi_root.adjoint();
        let base = per_stream_sinr(&h, &phi, n0).unwrap();
        let scaled = per_stream_sinr(&h.scale(c.sqrt()), &phi.scale(c), n0 * c).unwrap();
        for (a, b) in base.iter().zip(&scaled) {
            prop_assert!((a - b).abs() <= 1e-7 * a.max(1.0));
        }
    }

    #[test]
    fn precoder_meets_power_constraint(h in matrix(2, 2), p in 1e-3f64..100.0) {
        prop_assume!(frobenius_norm(&h) > 1e-6);
        let w = make_precoder(&h, p).unwrap().w;
        prop_assert!(frobenius_norm(&w).powi(2) <= p * (1.0 + 1e-9));
        prop_assert!((frobenius_norm(&w).powi(2) - p).abs() < 1e-12 * p.max(1.0));
    }

    #[test]
    fn interference_covariance_is_hermitian_psd(seed in any::<u64>(), gains in proptest::collection::vec(1e-9f64..1.0, 0..7)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let links: Vec<_> = gains.iter().map(|&g| ChannelRealization {
            fading: nlos_component(0.5, &mut rng).unwrap(),
            large_scale_gain: g,
            link_kind: LinkKind::Interferer,
            distance_m: 30.0,
        }).collect();
        let phi = interference_covariance(&links, 1.0);
        prop_assert!(phi.hermitian_defect() < 1e-12);
        let eig = to_na(&phi).symmetric_eigenvalues();
        let trace: f64 = phi.diagonal().iter().map(|z| z.re).sum();
        prop_assert!(eig.iter().all(|e| *e >= -1e-12 * trace.max(1e-30)));
    }

    #[test]
    fn reduced_channel_keeps_frobenius_norm(h in matrix(2, 2), tau in 0.0f64..0.99) {
        prop_assume!(frobenius_norm(&h) > 1e-3);
        let kernels = PulseKernels::new(PulseConfig { tau_fraction: tau, tx_oversampling: 2, rx_oversampling: 2, block_symbols: 4 }).unwrap();
        let comp = kernels.compose(&h).unwrap();
        prop_assert!(comp.h_os.rows() > comp.h_os.cols());
        let rel = (frobenius_norm(&comp.h_n) - frobenius_norm(&h)).abs() / frobenius_norm(&h);
        prop_assert!(rel < 1e-9);
    }

    #[test]
    fn k_factor_positive_and_non_increasing(a in 0.5f64..500.0, b in 0.5f64..500.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (ka, kb) = (k_factor(lo).unwrap(), k_factor(hi).unwrap());
        prop_assert!(ka > 0.0 && kb > 0.0);
        prop_assert!(kb <= ka);
    }

    #[test]
    fn percentiles_monotone(samples in proptest::collection::vec(-50.0f64..50.0, 1..200), p in 0.0f64..100.0, q in 0.0f64..100.0) {
        let cdf = CdfSummary::new(Metric::EffectiveSinrDb, samples).unwrap();
        let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
        prop_assert!(cdf.percentile(lo) <= cdf.percentile(hi));
        prop_assert!(cdf.samples().windows(2).all(|w| w[0] <= w[1]));
        let probs: Vec<f64> = cdf.points().map(|(_, p)| p).collect();
        prop_assert!(probs.windows(2).all(|w| w[0] < w[1]));
    }
}
