//! The additive Gaussian noise channel Y = sqrt(gamma) * X + Z with
//! Z ~ N(0, 1): output law, posterior mean, MMSE, output score along two
//! routes, output Fisher information, and the mean-square-error
//! decomposition for suboptimal estimators.

use crate::error::{Error, Result};
use crate::mixture::GaussMix;
use crate::quad::{integrate_gamma, integrate_line, QuadEngine, QuadResult};

/// A mixture input observed through the channel at a fixed SNR.
///
/// Construction precomputes the output mixture and the per-component
/// posterior coefficients, so the closed-form posterior quantities are cheap
/// inside quadrature loops. Immutable; safe to share across threads.
#[derive(Debug, Clone)]
pub struct ChannelView {
    input: GaussMix,
    gamma: f64,
    sqrt_gamma: f64,
    output: GaussMix,
    /// Posterior component mean of component k at observation y is
    /// `mean_k + slope_k * (y - sqrt_gamma * mean_k)`.
    slopes: Vec<f64>,
}

/// Which route computes the output score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScorePath {
    /// Differentiate the output mixture density directly.
    Analytic,
    /// sqrt(gamma) * E[X | Y = y] - y.
    Posterior,
}

impl ChannelView {
    pub fn new(input: GaussMix, gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0) {
            return Err(Error::NegativeGamma(gamma));
        }
        let sqrt_gamma = gamma.sqrt();
        let out_means: Vec<f64> = input.means().iter().map(|m| sqrt_gamma * m).collect();
        let out_vars: Vec<f64> = input.variances().iter().map(|v| gamma * v + 1.0).collect();
        let slopes = input
            .variances()
            .iter()
            .zip(&out_vars)
            .map(|(v, ov)| sqrt_gamma * v / ov)
            .collect();
        let output = GaussMix::new(input.weights().to_vec(), out_means, out_vars)
            .expect("channel output mixture is always valid");
        Ok(ChannelView {
            input,
            gamma,
            sqrt_gamma,
            output,
            slopes,
        })
    }

    pub fn input(&self) -> &GaussMix {
        &self.input
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Law of Y: means scaled by sqrt(gamma), variances gamma * v + 1.
    pub fn output_dist(&self) -> &GaussMix {
        &self.output
    }

    /// E[X | Y = y]: responsibility-weighted combination of the per-component
    /// posterior means, normalized under one max shift. At gamma = 0 this
    /// reduces to the prior mean for every y.
    pub fn posterior_mean(&self, y: f64) -> f64 {
        let mut max = f64::NEG_INFINITY;
        for k in 0..self.input.len() {
            let t = self.output.component_log(k, y);
            if t > max {
                max = t;
            }
        }
        let mut total = 0.0;
        let mut weighted = 0.0;
        for k in 0..self.input.len() {
            let r = (self.output.component_log(k, y) - max).exp();
            let m_k = self.input.means()[k] + self.slopes[k] * (y - self.output.means()[k]);
            total += r;
            weighted += r * m_k;
        }
        weighted / total
    }

    /// E[(X - E[X|Y])^2] = E[X^2] - E[posterior_mean(Y)^2].
    pub fn mmse(&self, eng: &QuadEngine) -> Result<QuadResult> {
        let second = self.input.second_moment();
        let (center, hw) = self.output.integration_window();
        let r = integrate_line(
            |y| {
                let pm = self.posterior_mean(y);
                pm * pm * self.output.pdf(y)
            },
            &eng.line_rule(),
            center,
            hw,
        )?
        .require_converged(eng.tol_1d)?;
        Ok(r.map_affine(-1.0, second))
    }

    /// Output score by either route; the two agree (that agreement is a
    /// test oracle, not an assumption anywhere in this crate).
    pub fn output_score(&self, y: f64, path: ScorePath) -> f64 {
        match path {
            ScorePath::Analytic => self.output.score(y),
            ScorePath::Posterior => self.sqrt_gamma * self.posterior_mean(y) - y,
        }
    }

    /// J(Y) = E[score(Y)^2], always by integrating the analytic score
    /// against the output density. The relation J(Y) = 1 - gamma * mmse is
    /// deliberately left to the test suites as an independent check.
    pub fn fisher_output(&self, eng: &QuadEngine) -> Result<QuadResult> {
        let (center, hw) = self.output.integration_window();
        integrate_line(
            |y| {
                let s = self.output.score(y);
                s * s * self.output.pdf(y)
            },
            &eng.line_rule(),
            center,
            hw,
        )?
        .require_converged(eng.tol_1d)
    }

    /// Mean-square-error decomposition for an arbitrary estimator f:
    /// returns E[(X - E[X|Y])^2], E[(X - f(Y))^2] and the penalty
    /// E[(f(Y) - E[X|Y])^2]. The decomposition mmse = mse - penalty is the
    /// identity the caller can verify.
    pub fn suboptimal_penalty(
        &self,
        f: impl Fn(f64) -> f64,
        eng: &QuadEngine,
    ) -> Result<PenaltyDecomposition> {
        let (center, hw) = self.output.integration_window();
        let rule = eng.line_rule();
        // Reject estimators whose second moment diverges on the window.
        let second_f = integrate_line(
            |y| {
                let v = f(y);
                v * v * self.output.pdf(y)
            },
            &rule,
            center,
            hw,
        )?
        .require_converged(eng.tol_1d)?;
        if !second_f.value.is_finite() {
            return Err(Error::DivergentEstimator(second_f.value));
        }
        let mmse = self.mmse(eng)?;
        // E[X f(Y)] = E[E[X|Y] f(Y)] by the orthogonality of X - E[X|Y].
        let cross = integrate_line(
            |y| self.posterior_mean(y) * f(y) * self.output.pdf(y),
            &rule,
            center,
            hw,
        )?
        .require_converged(eng.tol_1d)?;
        let mse = self.input.second_moment() - 2.0 * cross.value + second_f.value;
        let penalty = integrate_line(
            |y| {
                let d = f(y) - self.posterior_mean(y);
                d * d * self.output.pdf(y)
            },
            &rule,
            center,
            hw,
        )?
        .require_converged(eng.tol_1d)?;
        Ok(PenaltyDecomposition {
            mmse: mmse.value,
            mse,
            penalty: penalty.value,
            est_error: mmse.est_error + second_f.est_error + 2.0 * cross.est_error
                + penalty.est_error,
        })
    }
}

/// The three terms of the suboptimal-estimator decomposition.
#[derive(Debug, Clone, Copy)]
pub struct PenaltyDecomposition {
    pub mmse: f64,
    pub mse: f64,
    pub penalty: f64,
    pub est_error: f64,
}

/// MMSE evaluated on an increasing SNR grid, validated against the
/// monotonicity and 1/gamma envelope every such curve must satisfy.
#[derive(Debug, Clone)]
pub struct MmseCurve {
    gammas: Vec<f64>,
    values: Vec<f64>,
}

const CURVE_SLACK: f64 = 1e-9;

impl MmseCurve {
    pub fn new(gammas: Vec<f64>, values: Vec<f64>, input_variance: f64) -> Result<Self> {
        for i in 1..gammas.len() {
            if gammas[i] <= gammas[i - 1] {
                return Err(Error::CurveGammasNotIncreasing(i));
            }
            if values[i] > values[i - 1] + CURVE_SLACK {
                return Err(Error::CurveValueOutOfBounds {
                    index: i,
                    value: values[i],
                    bound: "monotone non-increasing",
                });
            }
        }
        for (i, (&g, &v)) in gammas.iter().zip(&values).enumerate() {
            let mut cap = input_variance;
            if g > 0.0 {
                cap = cap.min(1.0 / g);
            }
            if v < -CURVE_SLACK || v > cap + CURVE_SLACK {
                return Err(Error::CurveValueOutOfBounds {
                    index: i,
                    value: v,
                    bound: "0 <= mmse <= min(var, 1/gamma)",
                });
            }
        }
        Ok(MmseCurve { gammas, values })
    }

    /// Evaluate the curve for `input` on `gammas` (which must be increasing).
    pub fn evaluate(input: &GaussMix, gammas: &[f64], eng: &QuadEngine) -> Result<Self> {
        let (_, var) = input.moments();
        let mut values = Vec::with_capacity(gammas.len());
        for &g in gammas {
            let ch = ChannelView::new(input.clone(), g)?;
            values.push(ch.mmse(eng)?.value);
        }
        MmseCurve::new(gammas.to_vec(), values, var)
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

const TWO_PI_E: f64 = 17.079_468_445_347_132;

/// Differential entropy through the SNR integral: h(X) equals one half of
/// the integral over gamma of mmse(gamma) - 1/(2 pi e + gamma).
pub fn entropy_immse(gm: &GaussMix, eng: &QuadEngine) -> Result<QuadResult> {
    let r = integrate_gamma(
        |g| {
            let ch = match ChannelView::new(gm.clone(), g) {
                Ok(ch) => ch,
                Err(_) => return f64::NAN,
            };
            match ch.mmse(eng) {
                Ok(q) => q.value - 1.0 / (TWO_PI_E + g),
                // A NaN aborts the outer integral and reports the gamma at
                // which the inner quadrature gave up.
                Err(_) => f64::NAN,
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

    fn bimodal() -> GaussMix {
        GaussMix::new(vec![0.5, 0.5], vec![-1.0, 1.0], vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn output_dist_componentwise_map() {
        let ch = ChannelView::new(GaussMix::gaussian(0.0, 1.0).unwrap(), 1.0).unwrap();
        assert_abs_diff_eq!(ch.output_dist().variances()[0], 2.0, epsilon = 1e-15);

        let ch = ChannelView::new(bimodal(), 0.0).unwrap();
        // pure noise: every component is N(0, 1)
        for (m, v) in ch
            .output_dist()
            .means()
            .iter()
            .zip(ch.output_dist().variances())
        {
            assert_abs_diff_eq!(*m, 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-15);
        }

        let ch = ChannelView::new(bimodal(), 4.0).unwrap();
        assert_eq!(ch.output_dist().means(), &[-2.0, 2.0]);
        assert_eq!(ch.output_dist().variances(), &[5.0, 5.0]);
    }

    #[test]
    fn posterior_mean_gaussian_is_linear() {
        for (var, gamma, y) in [(1.0, 1.0, 0.8), (4.0, 2.0, -1.3), (0.5, 3.0, 2.2)] {
            let ch = ChannelView::new(GaussMix::gaussian(0.0, var).unwrap(), gamma).unwrap();
            let expected = gamma.sqrt() * var * y / (1.0 + gamma * var);
            assert_abs_diff_eq!(ch.posterior_mean(y), expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn posterior_mean_uninformative_at_zero_snr() {
        let gm = GaussMix::new(vec![0.3, 0.7], vec![-2.0, 1.0], vec![0.5, 2.0]).unwrap();
        let (mean, _) = gm.moments();
        let ch = ChannelView::new(gm, 0.0).unwrap();
        for y in [-3.0, 0.0, 1.7] {
            assert_abs_diff_eq!(ch.posterior_mean(y), mean, epsilon = 1e-12);
        }
    }

    #[test]
    fn posterior_mean_matches_brute_force_integral() {
        // frozen reference: quadrature of x * f(x) * phi(y - sqrt(g) x),
        // normalized, on a 2^20-point grid
        let gm = GaussMix::new(vec![0.5, 0.5], vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap();
        let ch = ChannelView::new(gm, 2.0).unwrap();
        assert_abs_diff_eq!(
            ch.posterior_mean(0.7),
            0.476_565_319_701_581_56,
            epsilon = 1e-8
        );
    }

    #[test]
    fn mmse_gaussian_closed_form() {
        let ch = ChannelView::new(GaussMix::gaussian(0.0, 1.0).unwrap(), 1.0).unwrap();
        assert_abs_diff_eq!(ch.mmse(&eng()).unwrap().value, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn mmse_zero_snr_is_prior_variance() {
        let ch = ChannelView::new(GaussMix::gaussian(0.0, 4.0).unwrap(), 0.0).unwrap();
        assert_abs_diff_eq!(ch.mmse(&eng()).unwrap().value, 4.0, epsilon = 1e-9);
    }

    #[test]
    fn output_score_posterior_route() {
        let ch = ChannelView::new(GaussMix::gaussian(0.0, 1.0).unwrap(), 1.0).unwrap();
        assert_abs_diff_eq!(
            ch.output_score(1.0, ScorePath::Posterior),
            -0.5,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            ch.output_score(1.0, ScorePath::Analytic),
            -0.5,
            epsilon = 1e-12
        );
    }

    #[test]
    fn output_score_pure_noise_is_negative_y() {
        let ch = ChannelView::new(bimodal(), 0.0).unwrap();
        for y in [-2.0, 0.3, 5.0] {
            assert_abs_diff_eq!(
                ch.output_score(y, ScorePath::Analytic),
                -y,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn score_routes_agree_on_mixtures() {
        let ch = ChannelView::new(bimodal(), 3.0).unwrap();
        for y in [-2.0, -0.4, 0.0, 1.3, 4.0] {
            let a = ch.output_score(y, ScorePath::Analytic);
            let p = ch.output_score(y, ScorePath::Posterior);
            assert_abs_diff_eq!(a, p, epsilon = 1e-8);
        }
    }

    #[test]
    fn fisher_output_closed_forms() {
        let ch = ChannelView::new(GaussMix::gaussian(0.0, 1.0).unwrap(), 1.0).unwrap();
        assert_abs_diff_eq!(ch.fisher_output(&eng()).unwrap().value, 0.5, epsilon = 1e-9);
        let ch = ChannelView::new(bimodal(), 0.0).unwrap();
        assert_abs_diff_eq!(ch.fisher_output(&eng()).unwrap().value, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn fisher_output_equals_one_minus_gamma_mmse() {
        let ch = ChannelView::new(bimodal(), 2.0).unwrap();
        let j = ch.fisher_output(&eng()).unwrap().value;
        let m = ch.mmse(&eng()).unwrap().value;
        assert_abs_diff_eq!(j, 1.0 - 2.0 * m, epsilon = 1e-7);
    }

    #[test]
    fn penalty_of_optimal_estimator_vanishes() {
        let ch = ChannelView::new(bimodal(), 1.0).unwrap();
        let view = ch.clone();
        let d = ch
            .suboptimal_penalty(move |y| view.posterior_mean(y), &eng())
            .unwrap();
        assert_abs_diff_eq!(d.penalty, 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(d.mse, d.mmse, epsilon = 1e-9);
    }

    #[test]
    fn penalty_of_zero_estimator() {
        let ch = ChannelView::new(bimodal(), 1.0).unwrap();
        let d = ch.suboptimal_penalty(|_| 0.0, &eng()).unwrap();
        let second = ch.input().second_moment();
        assert_abs_diff_eq!(d.mse, second, epsilon = 1e-9);
        // penalty must be E[(E[X|Y])^2] = E[X^2] - mmse
        assert_abs_diff_eq!(d.penalty, second - d.mmse, epsilon = 1e-8);
        assert_abs_diff_eq!(d.mmse, d.mse - d.penalty, epsilon = 1e-7);
    }

    #[test]
    fn penalty_of_linear_estimator_decomposes() {
        let ch = ChannelView::new(bimodal(), 1.0).unwrap();
        let (_, var) = ch.input().moments();
        let a = var / (1.0 + var); // sqrt(gamma) = 1
        let d = ch.suboptimal_penalty(move |y| a * y, &eng()).unwrap();
        assert_abs_diff_eq!(d.mmse, d.mse - d.penalty, epsilon = 1e-7);
        assert!(d.penalty > 0.0);
    }

    #[test]
    fn mmse_curve_validates_shape() {
        let gm = bimodal();
        let curve =
            MmseCurve::evaluate(&gm, &[0.0, 0.5, 1.0, 2.0, 4.0, 8.0], &eng()).unwrap();
        assert_eq!(curve.values().len(), 6);
        // hand-rolled violations
        assert!(MmseCurve::new(vec![1.0, 1.0], vec![0.5, 0.4], 2.0).is_err());
        assert!(MmseCurve::new(vec![1.0, 2.0], vec![0.4, 0.5], 2.0).is_err());
        assert!(MmseCurve::new(vec![1.0], vec![1.5], 2.0).is_err());
    }

    #[test]
    fn entropy_immse_matches_closed_form_gaussian() {
        let gm = GaussMix::gaussian(0.0, 1.0).unwrap();
        let h = entropy_immse(&gm, &eng()).unwrap().value;
        assert_abs_diff_eq!(h, 1.418_938_533_204_672_7, epsilon = 1e-6);
        let gm = GaussMix::gaussian(0.0, 4.0).unwrap();
        let h = entropy_immse(&gm, &eng()).unwrap().value;
        assert_abs_diff_eq!(h, 2.112_085_713_764_618, epsilon = 1e-5);
    }

    #[test]
    fn channel_rejects_negative_gamma() {
        assert!(ChannelView::new(bimodal(), -0.1).is_err());
    }
}
