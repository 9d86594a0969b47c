use proptest::prelude::*;

use teon::harness::RunConfig;
use teon::linalg::{fold, frobenius, matricize, Matrix, Mode, Tensor3};
use teon::norms::{check_comparability, norm, ntr_step, NormFamily, NormKind};
use teon::optim::{muon_step, teon_step, LrSchedule, MomentumStyle, UpdatePolicy};
use teon::ortho::ortho_exact;

fn tensor(max_m: usize, max_n: usize, max_k: usize) -> impl Strategy<Value = Tensor3> {
    (1..=max_m, 1..=max_n, 1..=max_k).prop_flat_map(|(m, n, k)| {
        prop::collection::vec(-10.0f64..10.0, m * n * k).prop_map(move |data| {
            let slices = data.chunks(m * n).map(|c| Matrix::new(m, n, c.to_vec()).unwrap()).collect();
            Tensor3::from_slices(slices).unwrap()
        })
    })
}

fn matrix(max: usize) -> impl Strategy<Value = Matrix> {
    (1..=max, 1..=max).prop_flat_map(|(r, c)| {
        prop::collection::vec(-5.0f64..5.0, r * c).prop_map(move |d| Matrix::new(r, c, d).unwrap())
    })
}

fn mode() -> impl Strategy<Value = Mode> {
    prop_oneof![Just(Mode::One), Just(Mode::Two), Just(Mode::Three)]
}

fn family() -> impl Strategy<Value = NormFamily> {
    prop_oneof![Just(NormFamily::Muon), mode().prop_map(NormFamily::Teon)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unfolding_roundtrips(t in tensor(6, 6, 5), mode in mode()) {
        let x = matricize(&t, mode);
        prop_assert_eq!(fold(&x, mode, t.shape()).unwrap(), t.clone());
        prop_assert!((x.frobenius() - frobenius(&t)).abs() <= 1e-12 * (1.0 + frobenius(&t)));
    }

    #[test]
    fn comparability_holds(t in tensor(5, 5, 5), mode in prop_oneof![Just(Mode::One), Just(Mode::Two)]) {
        let report = check_comparability(&t, mode).unwrap();
        prop_assert!(!report.violated, "{}", report);
    }

    #[test]
    fn polar_factor_is_scale_free(a in matrix(6), c in 0.01f64..100.0) {
        prop_assume!(a.frobenius() > 1e-3);
        let o = ortho_exact(&a).unwrap();
        let scaled = ortho_exact(&a.scale(c)).unwrap();
        prop_assert!(o.max_abs_diff(&scaled) <= 1e-8);
        let norm2 = teon::linalg::svd(&o).unwrap().spectral_norm();
        prop_assert!(norm2 <= 1.0 + 1e-10);
    }

    #[test]
    fn trust_region_step_is_feasible_and_optimal(g in tensor(3, 3, 3), family in family(), eta in 0.01f64..2.0) {
        let step = ntr_step(&g, family, eta).unwrap();
        prop_assert!(norm(&step, NormKind::primal(family)).unwrap() <= eta * (1.0 + 1e-9));
        let value = g.inner(&step).unwrap();
        let dual = norm(&g, NormKind::dual(family)).unwrap();
        prop_assert!((value + eta * dual).abs() <= 1e-8 * (1.0 + dual));
    }

    #[test]
    fn single_slice_teon_matches_muon(
        w in matrix(5),
        seed in 0u64..1000,
        mu in 0.0f64..0.99,
        ema in any::<bool>(),
        second in any::<bool>(),
    ) {
        let style = if ema { MomentumStyle::Ema } else { MomentumStyle::Accumulate };
        let (r, c) = w.shape();
        let mut rng = teon::rng::seeded(seed);
        let grads: Vec<Matrix> = (0..3).map(|_| teon::rng::gaussian_matrix(&mut rng, r, c)).collect();
        let mode = if second { Mode::Two } else { Mode::One };
        let muon = UpdatePolicy::muon(0.05).with_mu(mu).with_style(style);
        let teon = UpdatePolicy::teon(mode, 0.05).with_mu(mu).with_style(style);
        let (mut wm, mut mm) = (w.clone(), Matrix::zeros(r, c));
        let mut wt = Tensor3::from_slices(vec![w.clone()]).unwrap();
        let mut mt = Tensor3::zeros(r, c, 1);
        for (step, g) in grads.iter().enumerate() {
            wm = muon_step(&wm, g, &mut mm, &muon, step as u64).unwrap();
            let gt = Tensor3::from_slices(vec![g.clone()]).unwrap();
            wt = teon_step(&wt, &gt, &mut mt, &teon, step as u64).unwrap();
        }
        // Mode 2 on one slice orthogonalizes the transpose, which matches up to rounding.
        let tol = if second { 1e-12 } else { 0.0 };
        prop_assert!(wt.slice(0).max_abs_diff(&wm) <= tol);
    }

    #[test]
    fn schedules_stay_in_unit_interval(ratio in 0.0f64..=1.0, total in 1usize..500, kind in 0u8..4) {
        let schedule = match kind {
            0 => LrSchedule::Constant,
            1 => LrSchedule::Cosine { warmup_ratio: ratio },
            2 => LrSchedule::LinearWarmup { warmup_ratio: ratio },
            _ => LrSchedule::ConstantThenLinear { hold_ratio: ratio },
        };
        for t in 0..=total {
            let f = schedule.factor(t, total);
            prop_assert!((0.0..=1.0).contains(&f), "factor {} at {}", f, t);
        }
        if kind > 0 {
            prop_assert!(schedule.factor(total, total).abs() <= 1e-12);
        }
    }

    #[test]
    fn config_survives_serialization(steps in 1usize..1000, seed in any::<u64>(), eta in 1e-4f64..1.0, k in 1usize..5) {
        let text = format!(
            "steps = {steps}\nseed = {seed}\n[task]\nkind = \"quadratic\"\nk = {k}\n\
             [optimizer]\noptimizer = \"teon\"\nmode = 2\neta = {eta}\n[grouping]\nk = {k}\n"
        );
        let config = RunConfig::parse(&text, std::path::Path::new("prop")).unwrap();
        let again = RunConfig::parse(&config.to_toml(), std::path::Path::new("prop")).unwrap();
        prop_assert_eq!(config, again);
    }
}
