use cavity_squeeze::criteria::{classify, damping_commutes, pairwise_commutators, DEFAULT_TOL};
use cavity_squeeze::sampling::{random_stable_model, random_symplectic, ModelFamily};
use cavity_squeeze::spectral::symplectic_residual;
use cavity_squeeze::squeezing::{bloch_messiah_at, bloch_messiah_pointwise, hd_best, hd_point, DEFAULT_SEED};
use cavity_squeeze::{linalg, InteractionModel, LinearizedSystem, LoConfig, LoPhase, Normalization, CMatrix};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn family() -> impl Strategy<Value = ModelFamily> {
    prop::sample::select(ModelFamily::ALL.to_vec())
}

fn model(seed: u64, n: usize, fam: ModelFamily) -> InteractionModel {
    random_stable_model(&mut ChaCha8Rng::seed_from_u64(seed), n, fam)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transfer_is_conjugate_symplectic(seed in any::<u64>(), n in 1usize..=4, fam in family(), w in -5.0f64..5.0) {
        let sys = LinearizedSystem::new(&model(seed, n, fam)).unwrap();
        let t = sys.transfer(w).unwrap();
        prop_assert!(symplectic_residual(&t.s) < 1e-10);
        prop_assert!(t.split_residual < 1e-10);
        let mirrored = sys.transfer(-w).unwrap();
        prop_assert!(linalg::rel_diff_c(&t.s.map(|z| z.conj()), &mirrored.s) < 1e-12);
    }

    #[test]
    fn covariance_is_hermitian_and_above_zero(seed in any::<u64>(), n in 1usize..=4, fam in family(), w in -5.0f64..5.0) {
        let sys = LinearizedSystem::new(&model(seed, n, fam)).unwrap();
        let c = sys.spectral_covariance(w, Normalization::ShotNoiseUnity).unwrap();
        prop_assert!((&c.sigma - c.sigma.adjoint()).norm() <= 1e-12 * c.sigma.norm());
        prop_assert!(c.min_eigenvalue() > 0.0);
        // a real-quadrature measurement never beats the full covariance
        prop_assert!(c.min_eigenvalue_real_part() >= c.min_eigenvalue() * (1.0 - 1e-10));
    }

    #[test]
    fn real_verdicts_give_real_covariance(seed in any::<u64>(), n in 1usize..=4, fam in family(), w in -5.0f64..5.0) {
        let m = model(seed, n, fam);
        let sys = LinearizedSystem::new(&m).unwrap();
        let c = sys.spectral_covariance(w, Normalization::ShotNoiseUnity).unwrap();
        if classify(&m, DEFAULT_TOL).verdict.is_real() {
            prop_assert!(c.relative_imaginary() < 1e-9);
        }
    }

    #[test]
    fn pairwise_commutation_implies_commuting_damping(seed in any::<u64>(), n in 1usize..=4, fam in family(), w in 0.0f64..5.0) {
        let m = model(seed, n, fam);
        let sys = LinearizedSystem::new(&m).unwrap();
        if pairwise_commutators(&sys, w).unwrap().max() <= DEFAULT_TOL {
            prop_assert!(damping_commutes(&m, DEFAULT_TOL));
        }
    }

    #[test]
    fn classification_is_invariant_under_rescaling(seed in any::<u64>(), n in 1usize..=4, fam in family(), k in 0.1f64..10.0) {
        let m = model(seed, n, fam);
        let scaled = InteractionModel::new(
            m.g() * cavity_squeeze::C64::new(k, 0.0),
            m.f() * cavity_squeeze::C64::new(k, 0.0),
            m.gamma().iter().map(|g| g * k).collect(),
        ).unwrap();
        prop_assert_eq!(classify(&m, DEFAULT_TOL).verdict, classify(&scaled, DEFAULT_TOL).verdict);
    }

    #[test]
    fn bloch_messiah_reconstructs_random_symplectic(seed in any::<u64>(), n in 1usize..=4, scale in 0.0f64..0.6) {
        let s = random_symplectic(&mut ChaCha8Rng::seed_from_u64(seed), n, scale);
        let bm = bloch_messiah_pointwise(&s, 0.0).unwrap();
        prop_assert!(bm.residual < 1e-9);
        let id = CMatrix::identity(2 * n, 2 * n);
        prop_assert!((bm.u.adjoint() * &bm.u - &id).norm() < 1e-9);
        prop_assert!((bm.v.adjoint() * &bm.v - &id).norm() < 1e-9);
        prop_assert!(symplectic_residual(&bm.u) < 1e-9);
        for k in 0..n {
            prop_assert!((bm.d[k] * bm.d[n + k] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn bloch_messiah_matches_covariance_spectrum(seed in any::<u64>(), n in 1usize..=4, fam in family(), w in -5.0f64..5.0) {
        let sys = LinearizedSystem::new(&model(seed, n, fam)).unwrap();
        let bm = bloch_messiah_at(&sys, w).unwrap();
        prop_assert!(bm.residual < 1e-9);
        let c = sys.spectral_covariance(w, Normalization::ShotNoiseUnity).unwrap();
        prop_assert!((bm.d_min().powi(2) - c.min_eigenvalue()).abs() < 1e-9 * c.min_eigenvalue().max(1.0));
    }

    #[test]
    fn homodyne_is_bounded_by_optimum(seed in any::<u64>(), n in 1usize..=4, fam in family(), w in -5.0f64..5.0, theta in 0.0f64..3.2) {
        let sys = LinearizedSystem::new(&model(seed, n, fam)).unwrap();
        let c = sys.spectral_covariance(w, Normalization::ShotNoiseUnity).unwrap();
        let best = hd_best(&c, 2, DEFAULT_SEED);
        prop_assert!(best.value >= best.lower_bound * (1.0 - 1e-10));
        prop_assert!(best.lower_bound >= c.min_eigenvalue() * (1.0 - 1e-10));
        let fixed = hd_point(&c, &LoConfig::new(best.mode_weights.clone(), LoPhase::Fixed(theta)).unwrap()).unwrap();
        prop_assert!(fixed.value >= best.value * (1.0 - 1e-9));
    }

    #[test]
    fn normalization_only_rescales(seed in any::<u64>(), n in 1usize..=3, fam in family(), w in -3.0f64..3.0) {
        let sys = LinearizedSystem::new(&model(seed, n, fam)).unwrap();
        let a = sys.spectral_covariance(w, Normalization::ShotNoiseUnity).unwrap();
        let b = sys.spectral_covariance(w, Normalization::PaperPrefactor).unwrap();
        prop_assert!((a.min_eigenvalue() - b.min_eigenvalue()).abs() < 1e-12 * a.min_eigenvalue().max(1.0));
        let ratio = Normalization::PaperPrefactor.prefactor() / Normalization::ShotNoiseUnity.prefactor();
        prop_assert!(linalg::rel_diff_c(&(&a.sigma * cavity_squeeze::C64::new(ratio, 0.0)), &b.sigma) < 1e-13);
    }
}
