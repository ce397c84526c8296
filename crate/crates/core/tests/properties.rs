use proptest::prelude::*;
use rmt_edge::airy::{airy_eval, q_airy};
use rmt_edge::fredholm::det_scalar;
use rmt_edge::orthopoly::{default_k, RecurrenceTable};
use rmt_edge::potential::{compute_p_real, EquilibriumData, Potential};
use rmt_edge::quadrature::gauss_legendre;
use rmt_edge::sampler::{edge_statistics, sample_gaussian};
use rmt_edge::skewkernel::{edge_to_native, epsilon_apply};
use rmt_edge::toeplitz_rep::build_toeplitz;
use std::sync::OnceLock;

fn quartic_table() -> &'static RecurrenceTable {
    static T: OnceLock<RecurrenceTable> = OnceLock::new();
    T.get_or_init(|| RecurrenceTable::build(&Potential::quartic12(), 30, default_k(30, 2)).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn q_airy_is_symmetric(x in -8.0f64..8.0, y in -8.0f64..8.0) {
        let a = q_airy(x, y).unwrap();
        let b = q_airy(y, x).unwrap();
        prop_assert!((a - b).abs() <= 1e-13 * (1.0 + a.abs()));
    }

    #[test]
    fn airy_satisfies_ode(x in -9.0f64..9.0) {
        // Ai″ = x Ai checked by central differences of Ai′
        let h = 1e-4;
        let d2 = (airy_eval(x + h).unwrap().ai_prime - airy_eval(x - h).unwrap().ai_prime) / (2.0 * h);
        let ai = airy_eval(x).unwrap().ai;
        prop_assert!((d2 - x * ai).abs() < 1e-7);
    }

    #[test]
    fn epsilon_is_antisymmetric(a in 0.2f64..2.0, b in -1.0f64..1.0, c in 0.2f64..2.0) {
        // ∫ f εg = −∫ g εf on [−L, L]
        let l = 2.5;
        let f = move |x: f64| (-a * x * x).exp() * (1.0 + b * x);
        let g = move |x: f64| (-c * (x - 0.3).powi(2)).exp();
        let rule = gauss_legendre(60, -l, l);
        let fg = rule.integrate(|x| f(x) * epsilon_apply(g, x, l, 4));
        let gf = rule.integrate(|x| g(x) * epsilon_apply(f, x, l, 4));
        prop_assert!((fg + gf).abs() < 1e-10, "{fg} vs {gf}");
    }

    #[test]
    fn psi_parity(l in 0usize..30, x in 0.0f64..2.4) {
        let t = quartic_table();
        let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
        let (p, q) = (t.eval_psi(l, x), t.eval_psi(l, -x));
        prop_assert!((p - sign * q).abs() <= 1e-12 * (1.0 + p.abs()));
    }

    #[test]
    fn p_is_even(c1 in 0.05f64..0.5, c2 in 0.0f64..0.2, x in 0.0f64..2.0) {
        let v = Potential::even_polynomial("random", &[0.0, c1, c2]).unwrap();
        let a = compute_p_real(&v, x).unwrap();
        let b = compute_p_real(&v, -x).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
    }

    #[test]
    fn rank_one_determinant(c in -2.0f64..2.0, s in -3.0f64..1.0) {
        let u = |x: f64| (-x * x).exp();
        let d = det_scalar(|x, y| c * u(x) * u(y), s, s + 4.0, 40);
        let int = gauss_legendre(80, s, s + 4.0).integrate(|x| u(x) * u(x));
        prop_assert!((d - (1.0 - c * int)).abs() < 1e-11);
    }

    #[test]
    fn edge_scaling_round_trip(x in -5.0f64..5.0, n in 10usize..500) {
        let lam = edge_to_native(x, 1.5, n);
        let back = (lam - 2.0) * 1.5 * (n as f64).powf(2.0 / 3.0);
        prop_assert!((back - x).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn seeded_batches_are_identical(seed in any::<u64>(), beta in 1u8..=2) {
        let a = sample_gaussian(8, beta, 5, seed).unwrap();
        let b = sample_gaussian(8, beta, 5, seed).unwrap();
        prop_assert_eq!(a.draws, b.draws);
    }

    #[test]
    fn gap_equals_max_cdf(seed in any::<u64>(), s in -4.0f64..3.0) {
        let batch = sample_gaussian(12, 1, 60, seed).unwrap();
        let stats = edge_statistics(&batch, 1.0);
        let cut = 2.0 + s / (12f64).powf(2.0 / 3.0);
        let empty = batch.draws.iter().filter(|d| d.iter().all(|&l| l <= cut)).count();
        prop_assert_eq!(stats.cdf(s), empty as f64 / 60.0);
    }

    #[test]
    fn toeplitz_convolution_inverse(n in (16usize..80).prop_map(|k| 2 * k)) {
        let eq = EquilibriumData::new(&Potential::quartic20()).unwrap();
        let pack = build_toeplitz(&eq, n, 2).unwrap();
        prop_assert!(pack.convolution_residual() < 1e-10);
        prop_assert!(pack.decay > 0.0);
    }
}
