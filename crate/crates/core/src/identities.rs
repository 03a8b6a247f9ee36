//! The entropy-power and Lieb-gap machinery: the exact deficit between the
//! two sides of Lieb's inequality as an SNR integral of a conditional-mean
//! mismatch, the equality-case diagnostics, the conditional-expectation
//! collapse and score-combination residuals, the Fisher-information
//! deficit, and the affine-posterior diagnostic that separates Gaussian
//! from non-Gaussian inputs.

use crate::channel::ChannelView;
use crate::error::{Error, Result};
use crate::mixture::{entropy_direct, fisher_direct, lieb_combine, GaussMix};
use crate::quad::{
    composite_gl_grid, integrate_gamma, integrate_line, integrate_plane, pairwise_sum,
    QuadEngine, QuadResult,
};
use crate::tolerances::EQUALITY_RESIDUAL_ABS;

/// A pair of independent inputs and the combination parameter alpha of
/// X = sqrt(1-alpha) X1 + sqrt(alpha) X2.
#[derive(Debug, Clone)]
pub struct LiebInstance {
    x1: GaussMix,
    x2: GaussMix,
    alpha: f64,
}

impl LiebInstance {
    pub fn new(x1: GaussMix, x2: GaussMix, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::AlphaOutOfRange(alpha));
        }
        Ok(LiebInstance { x1, x2, alpha })
    }

    pub fn x1(&self) -> &GaussMix {
        &self.x1
    }

    pub fn x2(&self) -> &GaussMix {
        &self.x2
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Exact law of the combination X.
    pub fn combined(&self) -> GaussMix {
        lieb_combine(&self.x1, &self.x2, self.alpha)
            .expect("alpha was validated at construction")
    }
}

/// Report of one deficit evaluation: the SNR-integral value, the direct
/// entropy gap it must equal, their disagreement, and integrand samples for
/// plotting or CSV export.
#[derive(Debug, Clone)]
pub struct DeficitReport {
    /// One half of the SNR integral of the conditional-mean mismatch.
    pub delta: f64,
    /// Direct entropy gap h(X) - (1-alpha) h(X1) - alpha h(X2).
    pub direct_gap: f64,
    /// |delta - direct_gap|, always computed, never inferred.
    pub identity_error: f64,
    /// (gamma, integrand) samples on the report grid.
    pub gamma_samples: Vec<(f64, f64)>,
    /// Diagnostics of the SNR integral.
    pub quad: QuadResult,
    /// Diagnostics of the entropy-gap quadrature.
    pub gap_quad: QuadResult,
}

/// Weighted affine fit of the posterior mean under the output density.
#[derive(Debug, Clone, Copy)]
pub struct AffineFit {
    pub slope: f64,
    pub intercept: f64,
    /// E[(posterior_mean(Y) - slope * Y - intercept)^2].
    pub residual: f64,
    pub est_error: f64,
}

/// The two residual forms of the score-combination statement.
#[derive(Debug, Clone, Copy)]
pub struct ScoreCombinationResiduals {
    /// Residual of the conditional form: the combined-output score versus
    /// the conditional expectation of the weighted marginal scores given
    /// the sum. Holds for every instance.
    pub convolution: QuadResult,
    /// Residual of the pointwise form (no conditioning): zero only in the
    /// Gaussian equal-variance case.
    pub pointwise: QuadResult,
}

/// Scaled entropy-power gap e^{2 h(V+W)} - e^{2 h(V)} - e^{2 h(W)}.
pub fn epi_gap(v: &GaussMix, w: &GaussMix, eng: &QuadEngine) -> Result<QuadResult> {
    let hv = entropy_direct(v, eng)?;
    let hw = entropy_direct(w, eng)?;
    let hs = entropy_direct(&v.convolve(w), eng)?;
    let value = (2.0 * hs.value).exp() - (2.0 * hv.value).exp() - (2.0 * hw.value).exp();
    let previous =
        (2.0 * hs.previous).exp() - (2.0 * hv.previous).exp() - (2.0 * hw.previous).exp();
    // first-order propagation of the entropy errors through exp(2h)
    let est_error = 2.0 * (2.0 * hs.value).exp() * hs.est_error
        + 2.0 * (2.0 * hv.value).exp() * hv.est_error
        + 2.0 * (2.0 * hw.value).exp() * hw.est_error;
    Ok(QuadResult {
        value,
        est_error,
        levels_used: hs.levels_used.max(hv.levels_used).max(hw.levels_used),
        converged: hs.converged && hv.converged && hw.converged,
        previous,
    })
}

/// Rescale an entropy-power pair (V, W) into the Lieb form: alpha is the
/// entropy-power share of W, and X1 = V / sqrt(1-alpha), X2 = W / sqrt(alpha)
/// end up with equal entropies.
pub fn epi_to_lieb(v: &GaussMix, w: &GaussMix, eng: &QuadEngine) -> Result<LiebInstance> {
    let hv = entropy_direct(v, eng)?.value;
    let hw = entropy_direct(w, eng)?.value;
    let (nv, nw) = ((2.0 * hv).exp(), (2.0 * hw).exp());
    let alpha = nw / (nv + nw);
    let x1 = v.scale(1.0 / (1.0 - alpha).sqrt());
    let x2 = w.scale(1.0 / alpha.sqrt());
    LiebInstance::new(x1, x2, alpha)
}

/// Direct gap h(sqrt(1-alpha) X1 + sqrt(alpha) X2)
/// - (1-alpha) h(X1) - alpha h(X2), by entropy quadrature.
pub fn lieb_gap_direct(inst: &LiebInstance, eng: &QuadEngine) -> Result<QuadResult> {
    let h1 = entropy_direct(inst.x1(), eng)?;
    let h2 = entropy_direct(inst.x2(), eng)?;
    let hc = entropy_direct(&inst.combined(), eng)?;
    Ok(QuadResult::combine(
        &[
            (1.0, hc),
            (-(1.0 - inst.alpha()), h1),
            (-inst.alpha(), h2),
        ],
        0.0,
    ))
}

fn channels_at(
    inst: &LiebInstance,
    gamma: f64,
) -> Result<(ChannelView, ChannelView, ChannelView)> {
    let ch1 = ChannelView::new(inst.x1().clone(), gamma)?;
    let ch2 = ChannelView::new(inst.x2().clone(), gamma)?;
    let chc = ChannelView::new(inst.combined(), gamma)?;
    Ok((ch1, ch2, chc))
}

/// The deficit integrand at one SNR:
/// E[(E[X | W] - E[X | Y1, Y2])^2] over the product law of (Y1, Y2), where
/// W = sqrt(1-alpha) Y1 + sqrt(alpha) Y2. The joint conditional mean splits
/// into sqrt(1-alpha) E[X1|Y1] + sqrt(alpha) E[X2|Y2] by independence, and
/// the W-conditional collapses to the combined channel's posterior mean
/// because sqrt(1-alpha) Z1 + sqrt(alpha) Z2 is itself standard normal.
pub fn deficit_integrand(
    inst: &LiebInstance,
    gamma: f64,
    eng: &QuadEngine,
) -> Result<QuadResult> {
    if !(gamma > 0.0) {
        return Err(Error::NonPositiveGamma(gamma));
    }
    if inst.alpha() == 0.0 || inst.alpha() == 1.0 {
        return Ok(zero_result());
    }
    let (ch1, ch2, chc) = channels_at(inst, gamma)?;
    let (ca, cb) = ((1.0 - inst.alpha()).sqrt(), inst.alpha().sqrt());
    let (c1, h1) = ch1.output_dist().integration_window();
    let (c2, h2) = ch2.output_dist().integration_window();
    let out1 = ch1.output_dist().clone();
    let out2 = ch2.output_dist().clone();
    let mut cached_y1 = f64::NAN;
    let mut cached = (0.0, 0.0); // (posterior mean, density) at cached_y1
    integrate_plane(
        |y1, y2| {
            if y1 != cached_y1 {
                cached = (ch1.posterior_mean(y1), out1.pdf(y1));
                cached_y1 = y1;
            }
            let (pm1, f1) = cached;
            let joint = ca * pm1 + cb * ch2.posterior_mean(y2);
            let collapsed = chc.posterior_mean(ca * y1 + cb * y2);
            let d = collapsed - joint;
            d * d * f1 * out2.pdf(y2)
        },
        &eng.plane_rule(),
        (c1, c2),
        (h1, h2),
    )?
    .require_converged(eng.tol_2d)
}

/// Report grid for deficit integrand samples: log-spaced over [1e-2, 1e2].
pub fn default_sample_gammas() -> Vec<f64> {
    (0..17).map(|k| 10f64.powf(-2.0 + 0.25 * k as f64)).collect()
}

/// The deficit Delta(X1 || X2): one half of the SNR integral of
/// [`deficit_integrand`], reported together with the direct entropy gap it
/// must reproduce.
pub fn deficit(inst: &LiebInstance, eng: &QuadEngine) -> Result<DeficitReport> {
    deficit_with_samples(inst, &default_sample_gammas(), eng)
}

/// [`deficit`] with a caller-provided sample grid for the report.
pub fn deficit_with_samples(
    inst: &LiebInstance,
    sample_gammas: &[f64],
    eng: &QuadEngine,
) -> Result<DeficitReport> {
    let gap_quad = lieb_gap_direct(inst, eng)?;
    let degenerate = inst.alpha() == 0.0 || inst.alpha() == 1.0;
    let quad = if degenerate {
        zero_result()
    } else {
        integrate_gamma(
            |g| match deficit_integrand(inst, g, eng) {
                Ok(r) => r.value,
                Err(_) => f64::NAN,
            },
            &eng.gamma_rule_2d(),
        )?
        .require_converged(eng.tol_2d * 300.0)?
        .map_affine(0.5, 0.0)
    };
    let mut gamma_samples = Vec::with_capacity(sample_gammas.len());
    for &g in sample_gammas {
        let d = if degenerate {
            0.0
        } else {
            deficit_integrand(inst, g, eng)?.value
        };
        gamma_samples.push((g, d));
    }
    Ok(DeficitReport {
        delta: quad.value,
        direct_gap: gap_quad.value,
        identity_error: (quad.value - gap_quad.value).abs(),
        gamma_samples,
        quad,
        gap_quad,
    })
}

fn zero_result() -> QuadResult {
    QuadResult {
        value: 0.0,
        est_error: 0.0,
        levels_used: 1,
        converged: true,
        previous: 0.0,
    }
}

/// Shared grid density for conditional expectations along the fiber
/// {(y1, y2) : ca y1 + cb y2 = w}. Accuracy enters the residuals squared,
/// so a fixed grid is ample.
const FIBER_PANELS: usize = 16;
const FIBER_NODES: usize = 16;

/// E[phi(Y1, Y2) | ca Y1 + cb Y2 = w]: parametrize the fiber by y1, weight
/// by f1(y1) f2((w - ca y1)/cb) on a shared grid, and normalize with a max
/// shift in log space. Returns None when the fiber misses both windows.
fn conditional_on_sum(
    out1: &GaussMix,
    out2: &GaussMix,
    ca: f64,
    cb: f64,
    w: f64,
    mut phi: impl FnMut(f64, f64) -> f64,
) -> Option<f64> {
    let (c1, h1) = out1.integration_window();
    let (c2, h2) = out2.integration_window();
    // image of the y2 window on the y1 axis
    let e1 = (w - cb * (c2 - h2)) / ca;
    let e2 = (w - cb * (c2 + h2)) / ca;
    let lo = (c1 - h1).max(e1.min(e2));
    let hi = (c1 + h1).min(e1.max(e2));
    if !(lo < hi) {
        return None;
    }
    let (xs, ws) = composite_gl_grid(FIBER_PANELS, FIBER_NODES, lo, hi);
    let log_q: Vec<f64> = xs
        .iter()
        .map(|&y1| out1.log_pdf(y1) + out2.log_pdf((w - ca * y1) / cb))
        .collect();
    let max = log_q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return None;
    }
    let mut num = Vec::with_capacity(xs.len());
    let mut den = Vec::with_capacity(xs.len());
    for ((&y1, &wq), &lq) in xs.iter().zip(ws.iter()).zip(log_q.iter()) {
        let q = wq * (lq - max).exp();
        den.push(q);
        num.push(q * phi(y1, (w - ca * y1) / cb));
    }
    Some(pairwise_sum(&num) / pairwise_sum(&den))
}

/// Residual of the conditional-expectation collapse: conditioning the
/// weighted marginal posterior means on the sum W must reproduce the
/// combined channel's posterior mean. This holds for every input pair; the
/// value is an integration-noise floor, not an equality diagnostic.
pub fn towering_residual(
    inst: &LiebInstance,
    gamma: f64,
    eng: &QuadEngine,
) -> Result<QuadResult> {
    if !(gamma > 0.0) {
        return Err(Error::NonPositiveGamma(gamma));
    }
    if inst.alpha() == 0.0 || inst.alpha() == 1.0 {
        return Ok(zero_result());
    }
    let (ch1, ch2, chc) = channels_at(inst, gamma)?;
    let (ca, cb) = ((1.0 - inst.alpha()).sqrt(), inst.alpha().sqrt());
    let w_dist = chc.output_dist().clone();
    let (cw, hw) = w_dist.integration_window();
    integrate_line(
        |w| {
            let cond = conditional_on_sum(
                ch1.output_dist(),
                ch2.output_dist(),
                ca,
                cb,
                w,
                |y1, y2| ca * ch1.posterior_mean(y1) + cb * ch2.posterior_mean(y2),
            );
            match cond {
                Some(c) => {
                    let d = c - chc.posterior_mean(w);
                    d * d * w_dist.pdf(w)
                }
                None => 0.0,
            }
        },
        &eng.line_rule(),
        cw,
        hw,
    )?
    .require_converged(eng.tol_1d)
}

/// Residuals of the score-combination statement in both forms; see
/// [`ScoreCombinationResiduals`].
pub fn score_convolution_residual(
    inst: &LiebInstance,
    gamma: f64,
    eng: &QuadEngine,
) -> Result<ScoreCombinationResiduals> {
    if !(gamma > 0.0) {
        return Err(Error::NonPositiveGamma(gamma));
    }
    if inst.alpha() == 0.0 || inst.alpha() == 1.0 {
        return Ok(ScoreCombinationResiduals {
            convolution: zero_result(),
            pointwise: zero_result(),
        });
    }
    let (ch1, ch2, chc) = channels_at(inst, gamma)?;
    let (ca, cb) = ((1.0 - inst.alpha()).sqrt(), inst.alpha().sqrt());
    let out1 = ch1.output_dist().clone();
    let out2 = ch2.output_dist().clone();
    let w_dist = chc.output_dist().clone();
    let (cw, hww) = w_dist.integration_window();
    let convolution = integrate_line(
        |w| {
            let cond = conditional_on_sum(&out1, &out2, ca, cb, w, |y1, y2| {
                ca * out1.score(y1) + cb * out2.score(y2)
            });
            match cond {
                Some(c) => {
                    let d = w_dist.score(w) - c;
                    d * d * w_dist.pdf(w)
                }
                None => 0.0,
            }
        },
        &eng.line_rule(),
        cw,
        hww,
    )?
    .require_converged(eng.tol_1d)?;

    let (c1, h1) = out1.integration_window();
    let (c2, h2) = out2.integration_window();
    let mut cached_y1 = f64::NAN;
    let mut cached = (0.0, 0.0); // (score, density) at cached_y1
    let pointwise = integrate_plane(
        |y1, y2| {
            if y1 != cached_y1 {
                cached = (out1.score(y1), out1.pdf(y1));
                cached_y1 = y1;
            }
            let (s1, f1) = cached;
            let d = w_dist.score(ca * y1 + cb * y2) - (ca * s1 + cb * out2.score(y2));
            d * d * f1 * out2.pdf(y2)
        },
        &eng.plane_rule(),
        (c1, c2),
        (h1, h2),
    )?
    .require_converged(eng.tol_2d)?;

    Ok(ScoreCombinationResiduals {
        convolution,
        pointwise,
    })
}

/// Fisher deficit of the channel outputs at one SNR:
/// (1-alpha) J(Y1) + alpha J(Y2) - J(W). Nonnegative; zero exactly in the
/// Gaussian equal-variance case.
pub fn fisher_deficit(inst: &LiebInstance, gamma: f64, eng: &QuadEngine) -> Result<QuadResult> {
    if !(gamma > 0.0) {
        return Err(Error::NonPositiveGamma(gamma));
    }
    let (ch1, ch2, chc) = channels_at(inst, gamma)?;
    let j1 = ch1.fisher_output(eng)?;
    let j2 = ch2.fisher_output(eng)?;
    let jw = chc.fisher_output(eng)?;
    Ok(QuadResult::combine(
        &[
            (1.0 - inst.alpha(), j1),
            (inst.alpha(), j2),
            (-1.0, jw),
        ],
        0.0,
    ))
}

/// The input-side variant: (1-alpha) J(X1) + alpha J(X2) - J(X) without any
/// channel smoothing.
pub fn fisher_deficit_inputs(inst: &LiebInstance, eng: &QuadEngine) -> Result<QuadResult> {
    let j1 = fisher_direct(inst.x1(), eng)?;
    let j2 = fisher_direct(inst.x2(), eng)?;
    let jc = fisher_direct(&inst.combined(), eng)?;
    Ok(QuadResult::combine(
        &[
            (1.0 - inst.alpha(), j1),
            (inst.alpha(), j2),
            (-1.0, jc),
        ],
        0.0,
    ))
}

/// Weighted least-squares affine fit of the posterior mean under the output
/// density, with the mean-square residual of the fit. A vanishing residual
/// is the signature of Gaussian input.
pub fn affinity_diagnostic(ch: &ChannelView, eng: &QuadEngine) -> Result<AffineFit> {
    if !(ch.gamma() > 0.0) {
        return Err(Error::NonPositiveGamma(ch.gamma()));
    }
    let out = ch.output_dist();
    let (mean_y, var_y) = out.moments();
    let (c, hw) = out.integration_window();
    let rule = eng.line_rule();
    let e_pm = integrate_line(
        |y| ch.posterior_mean(y) * out.pdf(y),
        &rule,
        c,
        hw,
    )?
    .require_converged(eng.tol_1d)?;
    let e_y_pm = integrate_line(
        |y| y * ch.posterior_mean(y) * out.pdf(y),
        &rule,
        c,
        hw,
    )?
    .require_converged(eng.tol_1d)?;
    let slope = (e_y_pm.value - mean_y * e_pm.value) / var_y;
    let intercept = e_pm.value - slope * mean_y;
    let residual = integrate_line(
        |y| {
            let d = ch.posterior_mean(y) - slope * y - intercept;
            d * d * out.pdf(y)
        },
        &rule,
        c,
        hw,
    )?
    .require_converged(eng.tol_1d)?;
    Ok(AffineFit {
        slope,
        intercept,
        residual: residual.value,
        est_error: residual.est_error + e_pm.est_error + e_y_pm.est_error,
    })
}

/// Residuals of the equality-condition family at one SNR.
#[derive(Debug, Clone, Copy)]
pub struct DiagnosticsRow {
    pub gamma: f64,
    /// Conditional-mean mismatch E[(E[X|W] - E[X|Y1,Y2])^2].
    pub conditional_gap: f64,
    /// Conditional-expectation collapse residual (always ~ 0).
    pub towering: f64,
    /// Conditional score-combination residual (always ~ 0).
    pub score_convolution: f64,
    /// Pointwise score additivity residual (equality-sensitive).
    pub score_pointwise: f64,
    /// Output Fisher deficit (equality-sensitive).
    pub fisher_deficit: f64,
    /// Affine posterior fit of the X1 channel.
    pub affine_x1: AffineFit,
    /// Affine posterior fit of the X2 channel.
    pub affine_x2: AffineFit,
}

/// Classification produced by the diagnostics grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Every equality-sensitive residual vanished on the whole grid.
    EqualityCase,
    /// At least one equality-sensitive residual is bounded away from zero.
    Strict,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::EqualityCase => write!(f, "equality-case"),
            Verdict::Strict => write!(f, "strict"),
        }
    }
}

/// Full equality diagnostics over an SNR grid.
#[derive(Debug, Clone)]
pub struct DiagnosticsReport {
    pub rows: Vec<DiagnosticsRow>,
    pub verdict: Verdict,
}

/// Evaluate the equality-condition residual family on `gammas` and classify
/// the instance. The verdict threshold is [`EQUALITY_RESIDUAL_ABS`] on the
/// three equality-sensitive residuals.
pub fn diagnostics(
    inst: &LiebInstance,
    gammas: &[f64],
    eng: &QuadEngine,
) -> Result<DiagnosticsReport> {
    let mut rows = Vec::with_capacity(gammas.len());
    let mut equality = true;
    for &gamma in gammas {
        let conditional_gap = deficit_integrand(inst, gamma, eng)?.value;
        let towering = towering_residual(inst, gamma, eng)?.value;
        let scores = score_convolution_residual(inst, gamma, eng)?;
        let fdef = fisher_deficit(inst, gamma, eng)?.value;
        let affine_x1 =
            affinity_diagnostic(&ChannelView::new(inst.x1().clone(), gamma)?, eng)?;
        let affine_x2 =
            affinity_diagnostic(&ChannelView::new(inst.x2().clone(), gamma)?, eng)?;
        equality &= conditional_gap <= EQUALITY_RESIDUAL_ABS
            && scores.pointwise.value <= EQUALITY_RESIDUAL_ABS
            && fdef.abs() <= EQUALITY_RESIDUAL_ABS;
        rows.push(DiagnosticsRow {
            gamma,
            conditional_gap,
            towering,
            score_convolution: scores.convolution.value,
            score_pointwise: scores.pointwise.value,
            fisher_deficit: fdef,
            affine_x1,
            affine_x2,
        });
    }
    Ok(DiagnosticsReport {
        rows,
        verdict: if equality {
            Verdict::EqualityCase
        } else {
            Verdict::Strict
        },
    })
}
