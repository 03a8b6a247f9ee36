//! Centralized numerical thresholds used by tests, the verification suite,
//! and report verdicts. Each constant states what it bounds; the values are
//! part of the tool's contract, not per-call-site tuning knobs.

/// Closed-form Gaussian quantities (entropy, Fisher information, posterior
/// slope) reproduced by quadrature. The 1-D engine tolerance is 1e-9; these
/// integrands are smooth, so no additional headroom is needed.
pub const GAUSSIAN_CLOSED_FORM_ABS: f64 = 1e-9;

/// Mixture density mass: integral of the pdf over its window.
pub const PDF_MASS_ABS: f64 = 1e-9;

/// Analytic mixture score versus a centered difference of the log density
/// at step 1e-5 (relative).
pub const SCORE_FD_REL: f64 = 1e-6;

/// Agreement between the analytic output score and the posterior-mean form
/// sqrt(gamma) * E[X|Y] - Y (absolute, per evaluation point).
pub const SCORE_PATHS_ABS: f64 = 1e-8;

/// Pointwise agreement of the square-root combination law with the
/// brute-force convolution integral of the scaled inputs.
pub const COMBINE_CONVOLUTION_ABS: f64 = 1e-8;

/// Slack for the entropy concavity direction of the combination law.
pub const CONCAVITY_SLACK: f64 = 1e-8;

/// Mean-square-error decomposition residual |mmse - (mse - penalty)|.
pub const MSE_DECOMPOSITION_ABS: f64 = 1e-7;

/// The output-Fisher relation |J(Y) - (1 - gamma * mmse)|.
pub const FISHER_MMSE_IDENTITY_ABS: f64 = 1e-7;

/// Slack for MMSE monotonicity in gamma and for the 1/gamma envelope.
pub const MMSE_SHAPE_SLACK: f64 = 1e-9;

/// Deficit-versus-direct-gap agreement, relative form:
/// |delta - gap| <= tol * (1 + |gap|).
pub const DEFICIT_IDENTITY_REL: f64 = 1e-4;

/// Deficit on Gaussian equal-variance instances (must vanish).
pub const DEFICIT_EQUALITY_ABS: f64 = 1e-7;

/// Deficit lower bound on instances with a non-Gaussian input or a
/// variance mismatch of 25% or more (must be strictly positive).
pub const DEFICIT_STRICT_MIN: f64 = 1e-4;

/// Per-gamma equality residuals (conditional gap, score additivity, Fisher
/// deficit) at or below this level classify an instance as an equality
/// case.
pub const EQUALITY_RESIDUAL_ABS: f64 = 1e-6;

/// On strict instances the same residuals must all sit at or above this
/// level: the residual family vanishes together or not at all.
pub const STRICT_RESIDUAL_MIN: f64 = 1e-5;

/// The conditional-expectation collapse residual (it holds for every
/// distribution, Gaussian or not).
pub const TOWERING_MAX: f64 = 1e-7;

/// The conditional score-combination residual (also unconditional).
pub const SCORE_CONVOLUTION_MAX: f64 = 1e-7;

/// Affine posterior fit for Gaussian inputs: residual and slope error.
pub const AFFINE_GAUSSIAN_ABS: f64 = 1e-9;

/// Minimum affine-fit residual for separated non-Gaussian inputs at
/// gamma = 1.
pub const AFFINE_NONGAUSSIAN_MIN: f64 = 1e-4;

/// Scaled entropy-power gap for Gaussian pairs (always an equality case in
/// the scalar setting).
pub const EPI_GAUSSIAN_ABS: f64 = 1e-6;

/// Entropy balance of the gap-preserving rescaling, and the direct gap of
/// the rescaled Gaussian pair.
pub const EPI_TRANSFORM_ABS: f64 = 1e-6;

/// SNR-integral entropy versus direct entropy, Gaussian inputs.
pub const ENTROPY_IMMSE_GAUSSIAN_ABS: f64 = 1e-5;

/// SNR-integral entropy versus direct entropy, mixture inputs.
pub const ENTROPY_IMMSE_MIXTURE_ABS: f64 = 1e-4;

/// Cross-method relative agreement of the three divergence routes.
pub const KL_CROSS_METHOD_REL: f64 = 1e-3;

/// Floor applied to the reference value in relative divergence comparisons
/// so that identical-law pairs (true value 0) compare against a small
/// absolute bound instead of zero.
pub const KL_REL_FLOOR: f64 = 1e-3;

/// Monte Carlo cross-checks accept values within this many standard errors.
pub const MC_SIGMA: f64 = 4.0;

/// Relative-with-floor comparison used for divergence agreement.
pub fn kl_agree(a: f64, b: f64, reference: f64) -> bool {
    (a - b).abs() <= KL_CROSS_METHOD_REL * reference.abs().max(KL_REL_FLOOR)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds_are_ordered() {
        assert!(GAUSSIAN_CLOSED_FORM_ABS < SCORE_PATHS_ABS);
        assert!(SCORE_PATHS_ABS < MSE_DECOMPOSITION_ABS);
        assert!(EQUALITY_RESIDUAL_ABS < STRICT_RESIDUAL_MIN);
        assert!(STRICT_RESIDUAL_MIN < DEFICIT_STRICT_MIN);
        assert!(DEFICIT_EQUALITY_ABS < DEFICIT_STRICT_MIN);
    }

    #[test]
    fn kl_agreement_floor_handles_zero_reference() {
        assert!(kl_agree(1e-8, -1e-8, 0.0));
        assert!(!kl_agree(0.51, 0.5, 0.5));
        assert!(kl_agree(0.5002, 0.5, 0.5));
    }
}
