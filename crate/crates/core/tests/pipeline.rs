use wgl_core::bounds::{malliavin_stein_upper, verify_komaki_identity};
use wgl_core::chaos::{fold_draws, sample};
use wgl_core::distance::{build_test_family, d2_lower_estimate, D2Method};
use wgl_core::experiments::gen_naive;
use wgl_core::gamma_ops::{var_gamma_diff_trace, GammaPath};
use wgl_core::stats::RunningMoments;
use wgl_core::stein::{default_grid, named_function, random_lipschitz_corpus, solve_functional_equation, solve_stein};
use wgl_core::{GammaTarget, GridFunction, SpectralForm};

#[test]
fn pathwise_variances_match_the_trace_formula() {
    let form = SpectralForm::new(vec![1.3, -0.4, 0.8, 0.25]).unwrap();
    let path = GammaPath::new(&form, 4);
    let parts = fold_draws(4, 1_000_000, 3, || vec![RunningMoments::default(); 4], |acc, z| {
        let mut g = [0.0; 5];
        path.centered(z, &mut g);
        for r in 1..=4 {
            // the difference has mean zero, so its square estimates the variance
            acc[r - 1].push((g[r] - 2.0 * g[r - 1]).powi(2));
        }
    });
    for r in 1..=4u32 {
        let mut m = RunningMoments::default();
        parts.iter().for_each(|p| m.merge(&p[r as usize - 1]));
        let want = var_gamma_diff_trace(&form, r).unwrap();
        let z = (m.mean - want).abs() / m.standard_error();
        assert!(z <= 5.0, "r = {r}: {} vs {want} ({z:.2} se)", m.mean);
    }
}

#[test]
fn stein_corpus_meets_residual_target() {
    for nu in [0.5, 3.0] {
        let t = GammaTarget::new(nu).unwrap();
        for h in random_lipschitz_corpus(default_grid(&t), 10, 21).unwrap() {
            let sol = solve_stein(&h, &t).unwrap();
            assert!(sol.quadrature_error_estimate <= 1e-6 * (1.0 + h.b_norm()));
        }
    }
}

#[test]
fn fredholm_has_trivial_kernel() {
    let t = GammaTarget::new(2.0).unwrap();
    let wide = default_grid(&t);
    // |lambda| = 10 pushes the 2048-node condition past the solver's limit
    let grid = wgl_core::GridSpec::new(wide.lo, wide.hi, 512).unwrap();
    let zero = GridFunction::new(grid, vec![0.0; grid.n_points]).unwrap();
    let h = random_lipschitz_corpus(grid, 1, 4).unwrap().remove(0);
    for lambda in [-10.0, -2.0, -0.5, 0.5, 2.0, 10.0] {
        let sol = solve_functional_equation(&zero, lambda, &t).unwrap();
        assert!(sol.g.sup_norm() <= 1e-8);
        assert!(sol.condition_estimate.is_finite());
        let sol = solve_functional_equation(&h, lambda, &t).unwrap();
        assert!(sol.residual <= 1e-6, "lambda {lambda}: {}", sol.residual);
    }
}

#[test]
fn identity_constants_vanish_for_gamma_spectra() {
    let t = GammaTarget::new(3.0).unwrap();
    let form = SpectralForm::<f64>::gamma_embedding(3).unwrap();
    let g = named_function("sin:1", default_grid(&t)).unwrap();
    let check = verify_komaki_identity(&form, &t, &g, 100_000, 1).unwrap();
    assert_eq!(check.constant_a, 0.0);
    assert_eq!(check.constant_b, 0.0);
    assert!(check.part_a.pass && check.part_b.pass);
}

#[test]
fn d2_methods_agree_on_two_eigenvalues() {
    let t = GammaTarget::new(2.0).unwrap();
    let form = gen_naive(6).unwrap().normalized(2.0).unwrap().0;
    let family = build_test_family(default_grid(&t), 16).unwrap();
    let mc = d2_lower_estimate(&form, &t, &family, D2Method::Mc, 400_000, 5).unwrap();
    let quad = d2_lower_estimate(&form, &t, &family, D2Method::Quadrature, 0, 0).unwrap();
    assert!(
        (mc.value - quad.value).abs() <= 5.0 * mc.standard_error + 1e-4,
        "mc {} (se {}) quadrature {}",
        mc.value,
        mc.standard_error,
        quad.value
    );
}

#[test]
fn d2_grows_with_the_family() {
    let t = GammaTarget::new(2.0).unwrap();
    let form = gen_naive(12).unwrap().normalized(2.0).unwrap().0;
    let grid = default_grid(&t);
    let mut last = 0.0;
    for size in [8, 16, 32, 64] {
        let family = build_test_family(grid, size).unwrap();
        let est = d2_lower_estimate(&form, &t, &family, D2Method::Mc, 100_000, 8).unwrap();
        assert!(est.value >= last, "size {size}: {} < {last}", est.value);
        last = est.value;
        let again = d2_lower_estimate(&form, &t, &family, D2Method::Mc, 100_000, 8).unwrap();
        assert_eq!(again, est);
    }
}

#[test]
fn report_is_reproducible_and_finite() {
    let t = GammaTarget::new(2.0).unwrap();
    let form = gen_naive(40).unwrap().normalized(2.0).unwrap().0;
    let a = serde_json::to_string(&malliavin_stein_upper(&form, &t).unwrap()).unwrap();
    let b = serde_json::to_string(&malliavin_stein_upper(&form, &t).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn sampling_is_seeded() {
    let form = SpectralForm::new(vec![0.5, 1.5]).unwrap();
    let a = sample(&form, 50_000, 17).unwrap();
    let b = sample(&form, 50_000, 17).unwrap();
    let c = sample(&form, 50_000, 18).unwrap();
    assert_eq!(a.draws, b.draws);
    assert_ne!(a.draws, c.draws);
}
