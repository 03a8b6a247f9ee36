//! Property tests over randomly generated mixtures. Case counts are kept
//! small because every case runs real quadrature.

use mixent_core::mixture::{entropy_direct, lieb_combine, GaussMix};
use mixent_core::quad::{integrate_line, QuadEngine};
use mixent_core::ChannelView;

use proptest::collection::vec;
use proptest::prelude::*;

fn mixture_strategy(max_k: usize) -> impl Strategy<Value = GaussMix> {
    vec((0.5..1.5f64, -2.5..2.5f64, 0.3..3.0f64), 1..=max_k).prop_map(|comps| {
        let total: f64 = comps.iter().map(|c| c.0).sum();
        let weights = comps.iter().map(|c| c.0 / total).collect();
        let means = comps.iter().map(|c| c.1).collect();
        let variances = comps.iter().map(|c| c.2).collect();
        GaussMix::new(weights, means, variances).expect("generated mixture is valid")
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn pdf_integrates_to_one(gm in mixture_strategy(4)) {
        let eng = QuadEngine::default();
        let (c, hw) = gm.integration_window();
        let mass = integrate_line(|x| gm.pdf(x), &eng.line_rule(), c, hw)
            .unwrap()
            .value;
        prop_assert!((mass - 1.0).abs() <= 1e-9, "mass = {}", mass);
    }

    #[test]
    fn score_agrees_with_log_density_slope(gm in mixture_strategy(4), t in -0.9..0.9f64) {
        let (c, hw) = gm.integration_window();
        let x = c + t * hw * 0.6;
        let h = 1e-5;
        let fd = (gm.log_pdf(x + h) - gm.log_pdf(x - h)) / (2.0 * h);
        let s = gm.score(x);
        prop_assert!((s - fd).abs() <= 1e-6 * s.abs().max(1.0));
    }

    #[test]
    fn combination_moments_are_exact(
        a in mixture_strategy(3),
        b in mixture_strategy(3),
        alpha in 0.0..1.0f64,
    ) {
        let c = lieb_combine(&a, &b, alpha).unwrap();
        let (ma, va) = a.moments();
        let (mb, vb) = b.moments();
        let (mc, vc) = c.moments();
        let expect_m = (1.0 - alpha).sqrt() * ma + alpha.sqrt() * mb;
        let expect_v = (1.0 - alpha) * va + alpha * vb;
        prop_assert!((mc - expect_m).abs() <= 1e-11);
        prop_assert!((vc - expect_v).abs() <= 1e-11);
    }

    #[test]
    fn mmse_is_bounded_and_monotone(gm in mixture_strategy(3), gamma in 0.05..4.0f64) {
        let eng = QuadEngine::default();
        let (_, var) = gm.moments();
        let m1 = ChannelView::new(gm.clone(), gamma).unwrap().mmse(&eng).unwrap().value;
        let m2 = ChannelView::new(gm.clone(), 2.0 * gamma).unwrap().mmse(&eng).unwrap().value;
        prop_assert!(m1 >= -1e-9);
        prop_assert!(m1 <= var.min(1.0 / gamma) + 1e-9);
        prop_assert!(m2 <= m1 + 1e-9, "mmse rose from {} to {}", m1, m2);
    }

    #[test]
    fn combination_entropy_dominates_weighted_entropies(
        a in mixture_strategy(2),
        b in mixture_strategy(2),
        alpha in 0.1..0.9f64,
    ) {
        let eng = QuadEngine::default();
        let c = lieb_combine(&a, &b, alpha).unwrap();
        let hc = entropy_direct(&c, &eng).unwrap().value;
        let ha = entropy_direct(&a, &eng).unwrap().value;
        let hb = entropy_direct(&b, &eng).unwrap().value;
        prop_assert!(hc >= (1.0 - alpha) * ha + alpha * hb - 1e-8);
    }
}
