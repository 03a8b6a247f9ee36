//! Relative entropy between mixtures along three routes: direct density
//! quadrature, the mismatched-estimation SNR integral of the posterior-mean
//! gap, and the SNR integral of the relative Fisher information distance.
//! The three must agree; their mutual agreement is one of the headline
//! checks of this crate.

use crate::channel::ChannelView;
use crate::error::{Error, Result};
use crate::mixture::GaussMix;
use crate::quad::{integrate_gamma, integrate_line, QuadEngine, QuadResult};

/// D(P || Q) = E_P[log p(X) - log q(X)] by quadrature under P.
pub fn kl_direct(p: &GaussMix, q: &GaussMix, eng: &QuadEngine) -> Result<QuadResult> {
    let (center, hw) = p.integration_window();
    integrate_line(
        |x| {
            let lp = p.log_pdf(x);
            // exp underflow kills the integrand before log q can matter
            lp.exp() * (lp - q.log_pdf(x))
        },
        &eng.line_rule(),
        center,
        hw,
    )?
    .require_converged(eng.tol_1d)
}

/// Mismatched-estimation route: one half of the SNR integral of
/// E_P[(E_P[X|Y] - E_Q[X|Y])^2], the expectation taken under the P-channel
/// output law.
pub fn kl_mismatched(p: &GaussMix, q: &GaussMix, eng: &QuadEngine) -> Result<QuadResult> {
    let r = integrate_gamma(
        |g| match mismatched_gap(p, q, g, eng) {
            Ok(v) => v,
            Err(_) => f64::NAN,
        },
        &eng.gamma_rule_1d(),
    )?
    .require_converged(eng.tol_1d * 100.0)?;
    Ok(r.map_affine(0.5, 0.0))
}

/// E_P[(E_P[X|Y] - E_Q[X|Y])^2] at one SNR.
fn mismatched_gap(p: &GaussMix, q: &GaussMix, gamma: f64, eng: &QuadEngine) -> Result<f64> {
    let chp = ChannelView::new(p.clone(), gamma)?;
    let chq = ChannelView::new(q.clone(), gamma)?;
    let out_p = chp.output_dist().clone();
    let (center, hw) = out_p.integration_window();
    let r = integrate_line(
        |y| {
            let d = chp.posterior_mean(y) - chq.posterior_mean(y);
            d * d * out_p.pdf(y)
        },
        &eng.line_rule(),
        center,
        hw,
    )?
    .require_converged(eng.tol_1d)?;
    Ok(r.value)
}

/// Relative Fisher information distance between the channel outputs:
/// E_P[(score_P(Y) - score_Q(Y))^2] under the P-output law.
pub fn relative_fisher(
    p: &GaussMix,
    q: &GaussMix,
    gamma: f64,
    eng: &QuadEngine,
) -> Result<QuadResult> {
    if !(gamma > 0.0) {
        return Err(Error::NonPositiveGamma(gamma));
    }
    let out_p = ChannelView::new(p.clone(), gamma)?.output_dist().clone();
    let out_q = ChannelView::new(q.clone(), gamma)?.output_dist().clone();
    let (center, hw) = out_p.integration_window();
    integrate_line(
        |y| {
            let d = out_p.score(y) - out_q.score(y);
            d * d * out_p.pdf(y)
        },
        &eng.line_rule(),
        center,
        hw,
    )?
    .require_converged(eng.tol_1d)
}

/// Below this SNR the ratio relative_fisher(gamma) / gamma is replaced by a
/// quadratic extrapolated from three samples just above the switch point.
/// The ratio extends continuously to gamma = 0, but evaluating it there
/// directly divides quadrature noise by a vanishing gamma.
const SMALL_GAMMA_SWITCH: f64 = 1e-3;

/// Score-difference route: one half of the SNR integral of
/// relative_fisher(gamma) / gamma.
pub fn kl_via_fisher(p: &GaussMix, q: &GaussMix, eng: &QuadEngine) -> Result<QuadResult> {
    // Lagrange quadratic through the ratio at {1, 2, 4} * SMALL_GAMMA_SWITCH.
    let g1 = SMALL_GAMMA_SWITCH;
    let g2 = 2.0 * SMALL_GAMMA_SWITCH;
    let g3 = 4.0 * SMALL_GAMMA_SWITCH;
    let t1 = relative_fisher(p, q, g1, eng)?.value / g1;
    let t2 = relative_fisher(p, q, g2, eng)?.value / g2;
    let t3 = relative_fisher(p, q, g3, eng)?.value / g3;
    let extrapolate = move |g: f64| {
        t1 * (g - g2) * (g - g3) / ((g1 - g2) * (g1 - g3))
            + t2 * (g - g1) * (g - g3) / ((g2 - g1) * (g2 - g3))
            + t3 * (g - g1) * (g - g2) / ((g3 - g1) * (g3 - g2))
    };
    let r = integrate_gamma(
        |g| {
            if g < SMALL_GAMMA_SWITCH {
                extrapolate(g)
            } else {
                match relative_fisher(p, q, g, eng) {
                    Ok(v) => v.value / g,
                    Err(_) => f64::NAN,
                }
            }
        },
        &eng.gamma_rule_1d(),
    )?
    .require_converged(eng.tol_1d * 100.0)?;
    Ok(r.map_affine(0.5, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn eng() -> QuadEngine {
        QuadEngine::default()
    }

    fn n(mean: f64, var: f64) -> GaussMix {
        GaussMix::gaussian(mean, var).unwrap()
    }

    fn bimodal() -> GaussMix {
        GaussMix::new(vec![0.5, 0.5], vec![-1.0, 1.0], vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn kl_direct_closed_forms() {
        let e = eng();
        assert_abs_diff_eq!(
            kl_direct(&n(0.0, 1.0), &n(0.0, 1.0), &e).unwrap().value,
            0.0,
            epsilon = 1e-10
        );
        // 0.5 * (1/4 + ln 4 - 1)
        assert_abs_diff_eq!(
            kl_direct(&n(0.0, 1.0), &n(0.0, 4.0), &e).unwrap().value,
            0.318_147_180_559_945_3,
            epsilon = 1e-9
        );
        // mean shift: mu^2 / 2
        assert_abs_diff_eq!(
            kl_direct(&n(1.0, 1.0), &n(0.0, 1.0), &e).unwrap().value,
            0.5,
            epsilon = 1e-9
        );
    }

    #[test]
    fn kl_direct_bimodal_reference() {
        // frozen reference from the trapezoid oracle
        let e = eng();
        assert_abs_diff_eq!(
            kl_direct(&bimodal(), &n(0.0, 2.0), &e).unwrap().value,
            9.742_769_933_141e-3,
            epsilon = 1e-8
        );
    }

    #[test]
    fn kl_mismatched_matches_closed_forms() {
        let e = eng();
        assert_abs_diff_eq!(
            kl_mismatched(&n(0.0, 1.0), &n(0.0, 1.0), &e).unwrap().value,
            0.0,
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(
            kl_mismatched(&n(1.0, 1.0), &n(0.0, 1.0), &e).unwrap().value,
            0.5,
            epsilon = 1e-5
        );
    }

    #[test]
    fn kl_mismatched_matches_direct_on_mixtures() {
        let e = eng();
        let kd = kl_direct(&bimodal(), &n(0.0, 2.0), &e).unwrap().value;
        let km = kl_mismatched(&bimodal(), &n(0.0, 2.0), &e).unwrap().value;
        assert!((kd - km).abs() <= 1e-4, "direct {kd} mismatched {km}");
    }

    #[test]
    fn relative_fisher_closed_forms() {
        let e = eng();
        assert_abs_diff_eq!(
            relative_fisher(&n(0.0, 1.0), &n(0.0, 1.0), 2.0, &e).unwrap().value,
            0.0,
            epsilon = 1e-12
        );
        // mean-shifted pair: score difference is the constant sqrt(g)/2,
        // so the distance is gamma / 4
        assert_abs_diff_eq!(
            relative_fisher(&n(1.0, 1.0), &n(0.0, 1.0), 1.0, &e).unwrap().value,
            0.25,
            epsilon = 1e-9
        );
    }

    #[test]
    fn relative_fisher_bimodal_reference() {
        // frozen reference: finite-difference scores on a fine grid
        let e = eng();
        assert_abs_diff_eq!(
            relative_fisher(&bimodal(), &n(0.0, 1.0), 1.0, &e).unwrap().value,
            0.087_528_351_132_92,
            epsilon = 1e-6
        );
    }

    #[test]
    fn relative_fisher_requires_positive_gamma() {
        let e = eng();
        assert!(relative_fisher(&n(0.0, 1.0), &n(1.0, 1.0), 0.0, &e).is_err());
    }

    #[test]
    fn kl_via_fisher_matches_closed_form() {
        let e = eng();
        assert_abs_diff_eq!(
            kl_via_fisher(&n(0.0, 1.0), &n(0.0, 1.0), &e).unwrap().value,
            0.0,
            epsilon = 1e-8
        );
        let k = kl_via_fisher(&n(1.0, 1.0), &n(0.0, 1.0), &e).unwrap().value;
        assert!((k - 0.5).abs() / 0.5 <= 1e-3, "got {k}");
    }

    #[test]
    fn kl_routes_agree_on_mixture_pair() {
        let e = eng();
        let p = bimodal();
        let q = n(0.0, 2.0);
        let kd = kl_direct(&p, &q, &e).unwrap().value;
        let km = kl_mismatched(&p, &q, &e).unwrap().value;
        let kf = kl_via_fisher(&p, &q, &e).unwrap().value;
        let tol = 1e-3 * kd.abs().max(1e-3);
        assert!((km - kd).abs() <= tol, "direct {kd} mismatched {km}");
        assert!((kf - kd).abs() <= tol, "direct {kd} fisher {kf}");
    }
}
