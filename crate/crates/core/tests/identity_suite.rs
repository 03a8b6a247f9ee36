//! Cross-module identity checks on the shared corpus: the deficit/gap
//! agreement on seeded instances, the equality-versus-strict dichotomy, the
//! unconditional residual floors, the entropy routes, and the divergence
//! triangle. The acceptance suite in the CLI crate runs the full-size
//! versions; these are the library-level smoke variants.

use mixent_core::corpus;
use mixent_core::mixture::entropy_direct;
use mixent_core::quad::QuadEngine;
use mixent_core::tolerances as tol;
use mixent_core::{
    deficit, diagnostics, entropy_immse, epi_gap, epi_to_lieb, kl_direct, kl_mismatched,
    kl_via_fisher, lieb_gap_direct, ChannelView, Verdict,
};

fn eng() -> QuadEngine {
    QuadEngine::default()
}

#[test]
fn deficit_reproduces_direct_gap_on_seeded_instances() {
    let e = eng();
    for inst in corpus::randomized_instances(2024, 4) {
        let rep = deficit(&inst, &e).unwrap();
        assert!(rep.delta >= -1e-9, "negative deficit {}", rep.delta);
        let budget = tol::DEFICIT_IDENTITY_REL * (1.0 + rep.direct_gap.abs());
        assert!(
            rep.identity_error <= budget,
            "identity error {} over budget {budget} (delta {}, gap {})",
            rep.identity_error,
            rep.delta,
            rep.direct_gap
        );
    }
}

#[test]
fn equality_and_strict_instances_separate() {
    let e = eng();
    for inst in corpus::equality_instances() {
        let rep = deficit(&inst, &e).unwrap();
        assert!(
            rep.delta.abs() <= tol::DEFICIT_EQUALITY_ABS,
            "equality-case delta {}",
            rep.delta
        );
    }
    for inst in corpus::strict_instances() {
        let rep = deficit(&inst, &e).unwrap();
        assert!(
            rep.delta >= tol::DEFICIT_STRICT_MIN,
            "strict-case delta {}",
            rep.delta
        );
    }
}

#[test]
fn equality_residuals_vanish_together() {
    let e = eng();
    let grid = [0.5, 1.0, 2.0];
    for inst in corpus::equality_instances() {
        let rep = diagnostics(&inst, &grid, &e).unwrap();
        assert_eq!(rep.verdict, Verdict::EqualityCase);
        for row in &rep.rows {
            assert!(row.conditional_gap <= tol::EQUALITY_RESIDUAL_ABS);
            assert!(row.score_pointwise <= tol::EQUALITY_RESIDUAL_ABS);
            assert!(row.fisher_deficit.abs() <= tol::EQUALITY_RESIDUAL_ABS);
        }
    }
    for inst in corpus::strict_instances() {
        let rep = diagnostics(&inst, &grid, &e).unwrap();
        assert_eq!(rep.verdict, Verdict::Strict);
        for row in &rep.rows {
            assert!(
                row.conditional_gap >= tol::STRICT_RESIDUAL_MIN
                    && row.score_pointwise >= tol::STRICT_RESIDUAL_MIN
                    && row.fisher_deficit >= tol::STRICT_RESIDUAL_MIN,
                "strict residuals dipped: gap {} scores {} fisher {}",
                row.conditional_gap,
                row.score_pointwise,
                row.fisher_deficit
            );
        }
    }
}

#[test]
fn unconditional_residuals_stay_at_noise_floor() {
    let e = eng();
    let grid = [0.5, 1.0, 2.0];
    let mut instances = corpus::equality_instances();
    instances.extend(corpus::strict_instances());
    for inst in instances {
        let rep = diagnostics(&inst, &grid, &e).unwrap();
        for row in &rep.rows {
            assert!(
                row.towering <= tol::TOWERING_MAX,
                "towering residual {}",
                row.towering
            );
            assert!(
                row.score_convolution <= tol::SCORE_CONVOLUTION_MAX,
                "score-convolution residual {}",
                row.score_convolution
            );
        }
    }
}

#[test]
fn entropy_power_transform_is_consistent() {
    let e = eng();
    let pairs = [
        (corpus::gaussian(0.0, 1.0), corpus::gaussian(0.0, 1.0)),
        (corpus::gaussian(0.0, 1.0), corpus::gaussian(0.5, 4.0)),
        (corpus::gaussian(-1.0, 2.0), corpus::gaussian(1.0, 3.0)),
    ];
    for (v, w) in pairs {
        // scalar Gaussian pairs are equality cases of the entropy-power gap
        let gap = epi_gap(&v, &w, &e).unwrap().value;
        assert!(gap.abs() <= tol::EPI_GAUSSIAN_ABS, "gap {gap}");
        // and the rescaled pair must be an equality case of the direct form
        let inst = epi_to_lieb(&v, &w, &e).unwrap();
        let h1 = entropy_direct(inst.x1(), &e).unwrap().value;
        let h2 = entropy_direct(inst.x2(), &e).unwrap().value;
        assert!((h1 - h2).abs() <= tol::EPI_TRANSFORM_ABS);
        let direct = lieb_gap_direct(&inst, &e).unwrap().value;
        assert!(direct.abs() <= tol::EPI_TRANSFORM_ABS, "direct gap {direct}");
    }
}

#[test]
fn entropy_routes_agree() {
    let e = eng();
    for (var, tol_abs) in [(1.0, tol::ENTROPY_IMMSE_GAUSSIAN_ABS), (4.0, tol::ENTROPY_IMMSE_GAUSSIAN_ABS)] {
        let gm = corpus::gaussian(0.3, var);
        let hi = entropy_immse(&gm, &e).unwrap().value;
        let hd = entropy_direct(&gm, &e).unwrap().value;
        assert!((hi - hd).abs() <= tol_abs, "gaussian var {var}: {hi} vs {hd}");
    }
    for gm in corpus::random_mixtures(31, 3, 3) {
        let hi = entropy_immse(&gm, &e).unwrap().value;
        let hd = entropy_direct(&gm, &e).unwrap().value;
        assert!(
            (hi - hd).abs() <= tol::ENTROPY_IMMSE_MIXTURE_ABS,
            "mixture: {hi} vs {hd}"
        );
    }
}

#[test]
fn divergence_routes_triangle() {
    let e = eng();
    for (p, q) in corpus::kl_pairs() {
        let kd = kl_direct(&p, &q, &e).unwrap().value;
        let km = kl_mismatched(&p, &q, &e).unwrap().value;
        let kf = kl_via_fisher(&p, &q, &e).unwrap().value;
        assert!(kd >= -1e-9);
        assert!(tol::kl_agree(km, kd, kd), "direct {kd} vs mismatched {km}");
        assert!(tol::kl_agree(kf, kd, kd), "direct {kd} vs fisher {kf}");
        assert!(tol::kl_agree(kf, km, kd), "mismatched {km} vs fisher {kf}");
    }
}

#[test]
fn fisher_identity_holds_across_grid() {
    let e = eng();
    for gm in corpus::standard_mixtures() {
        for gamma in [0.5, 1.0, 2.0] {
            let ch = ChannelView::new(gm.clone(), gamma).unwrap();
            let j = ch.fisher_output(&e).unwrap().value;
            let m = ch.mmse(&e).unwrap().value;
            assert!(
                (j - (1.0 - gamma * m)).abs() <= tol::FISHER_MMSE_IDENTITY_ABS,
                "J = {j}, 1 - gamma mmse = {}",
                1.0 - gamma * m
            );
        }
    }
}
