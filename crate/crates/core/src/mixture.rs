//! Scalar Gaussian mixture algebra.
//!
//! `GaussMix` is the single distribution family used everywhere in this
//! crate: it is closed under the additive-noise channel, under convolution,
//! and under the square-root combination `sqrt(1-a) X1 + sqrt(a) X2`, and
//! its posterior quantities have closed forms. Densities are evaluated in
//! log space with a max shift so that scores and divergence integrands stay
//! finite deep in the tails.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::quad::{integrate_line, pairwise_sum, QuadEngine, QuadResult};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Weights must sum to one within this tolerance at construction.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// File parsing accepts weight sums off by up to this much and rescales;
/// larger deviations require an explicit renormalization request.
pub const PARSE_WEIGHT_SUM_TOL: f64 = 1e-9;

/// Smallest admissible component variance. Narrower components make score
/// and Fisher integrands too stiff for the quadrature windows used here.
pub const MIN_VARIANCE: f64 = 1e-8;

/// A finite mixture of scalar Gaussians. Immutable after construction.
///
/// The per-component log-normalization constants are precomputed so density,
/// score and posterior evaluations inside quadrature loops cost one `exp`
/// per component and allocate nothing.
#[derive(Debug, Clone)]
pub struct GaussMix {
    weights: Vec<f64>,
    means: Vec<f64>,
    variances: Vec<f64>,
    /// ln w_k - 0.5 (ln 2 pi + ln var_k)
    log_norm: Vec<f64>,
    /// 1 / (2 var_k)
    inv_two_var: Vec<f64>,
}

impl PartialEq for GaussMix {
    fn eq(&self, other: &Self) -> bool {
        self.weights == other.weights
            && self.means == other.means
            && self.variances == other.variances
    }
}

/// One draw from a mixture, tagged with the component that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub value: f64,
    pub component: usize,
}

impl GaussMix {
    /// Build a mixture, validating normalization, positivity and the
    /// minimum component variance.
    pub fn new(weights: Vec<f64>, means: Vec<f64>, variances: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.len() != means.len() || weights.len() != variances.len()
        {
            return Err(Error::LengthMismatch {
                weights: weights.len(),
                means: means.len(),
                variances: variances.len(),
            });
        }
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::NonFiniteParameter { index: i, value: w });
            }
            if w <= 0.0 {
                return Err(Error::NonPositiveWeight {
                    index: i,
                    weight: w,
                });
            }
        }
        for (i, &m) in means.iter().enumerate() {
            if !m.is_finite() {
                return Err(Error::NonFiniteParameter { index: i, value: m });
            }
        }
        for (i, &v) in variances.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteParameter { index: i, value: v });
            }
            if v < MIN_VARIANCE {
                return Err(Error::VarianceTooSmall {
                    index: i,
                    variance: v,
                    min: MIN_VARIANCE,
                });
            }
        }
        let sum = pairwise_sum(&weights);
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::WeightsNotNormalized {
                sum,
                tol: WEIGHT_SUM_TOL,
            });
        }
        Ok(GaussMix::from_parts(weights, means, variances))
    }

    /// Assemble a mixture whose parameters are already known to be valid
    /// (outputs of closed-form maps on validated mixtures).
    pub(crate) fn from_parts(
        weights: Vec<f64>,
        means: Vec<f64>,
        variances: Vec<f64>,
    ) -> Self {
        let log_norm = weights
            .iter()
            .zip(&variances)
            .map(|(w, v)| w.ln() - 0.5 * (LN_2PI + v.ln()))
            .collect();
        let inv_two_var = variances.iter().map(|v| 0.5 / v).collect();
        GaussMix {
            weights,
            means,
            variances,
            log_norm,
            inv_two_var,
        }
    }

    /// Single Gaussian N(mean, variance).
    pub fn gaussian(mean: f64, variance: f64) -> Result<Self> {
        GaussMix::new(vec![1.0], vec![mean], vec![variance])
    }

    /// Parse the distribution file format: a JSON object with equal-length
    /// `weights`, `means` and `variances` arrays. Weight sums within
    /// [`PARSE_WEIGHT_SUM_TOL`] of one are rescaled exactly; anything worse
    /// is rejected unless `renormalize` is set.
    pub fn from_json_str(text: &str, renormalize: bool) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct MixtureFile {
            weights: Vec<f64>,
            means: Vec<f64>,
            variances: Vec<f64>,
        }
        let file: MixtureFile = serde_json::from_str(text).map_err(|e| Error::Json {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let sum = pairwise_sum(&file.weights);
        if !sum.is_finite() || sum <= 0.0 {
            return Err(Error::WeightsNotNormalized {
                sum,
                tol: PARSE_WEIGHT_SUM_TOL,
            });
        }
        if (sum - 1.0).abs() > PARSE_WEIGHT_SUM_TOL && !renormalize {
            return Err(Error::WeightsNotNormalized {
                sum,
                tol: PARSE_WEIGHT_SUM_TOL,
            });
        }
        let weights = file.weights.iter().map(|w| w / sum).collect();
        GaussMix::new(weights, file.means, file.variances)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction guarantees at least one component
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    /// Exponent of component k at x, sharing the cached normalization.
    #[inline]
    pub(crate) fn component_log(&self, k: usize, x: f64) -> f64 {
        let z = x - self.means[k];
        self.log_norm[k] - z * z * self.inv_two_var[k]
    }

    /// log f(x) via log-sum-exp over components; allocation-free.
    pub fn log_pdf(&self, x: f64) -> f64 {
        let mut max = f64::NEG_INFINITY;
        for k in 0..self.len() {
            let t = self.component_log(k, x);
            if t > max {
                max = t;
            }
        }
        let mut acc = 0.0;
        for k in 0..self.len() {
            acc += (self.component_log(k, x) - max).exp();
        }
        max + acc.ln()
    }

    /// Density f(x); strictly positive wherever exp does not underflow.
    pub fn pdf(&self, x: f64) -> f64 {
        self.log_pdf(x).exp()
    }

    /// d/dx log f(x): responsibility-weighted component scores, normalized
    /// under the same max shift as the density.
    pub fn score(&self, x: f64) -> f64 {
        let mut max = f64::NEG_INFINITY;
        for k in 0..self.len() {
            let t = self.component_log(k, x);
            if t > max {
                max = t;
            }
        }
        let mut total = 0.0;
        let mut weighted = 0.0;
        for k in 0..self.len() {
            let r = (self.component_log(k, x) - max).exp();
            total += r;
            weighted += r * (-(x - self.means[k]) * 2.0 * self.inv_two_var[k]);
        }
        weighted / total
    }

    /// Exact mixture mean and variance.
    pub fn moments(&self) -> (f64, f64) {
        let mean = pairwise_sum(
            &self
                .weights
                .iter()
                .zip(&self.means)
                .map(|(w, m)| w * m)
                .collect::<Vec<_>>(),
        );
        let second = pairwise_sum(
            &self
                .weights
                .iter()
                .zip(self.means.iter().zip(&self.variances))
                .map(|(w, (m, v))| w * (v + m * m))
                .collect::<Vec<_>>(),
        );
        (mean, second - mean * mean)
    }

    /// Second raw moment E[X^2].
    pub fn second_moment(&self) -> f64 {
        let (mean, var) = self.moments();
        var + mean * mean
    }

    /// Integration window (center, half-width) covering the mixture mass:
    /// ten standard deviations past the farthest component, so truncated
    /// tails carry less than 1e-20 of relative mass.
    pub fn integration_window(&self) -> (f64, f64) {
        let (mean, var) = self.moments();
        let mut offset: f64 = 0.0;
        let mut per_component: f64 = 0.0;
        for (m, v) in self.means.iter().zip(&self.variances) {
            let d = (m - mean).abs();
            offset = offset.max(d);
            per_component = per_component.max(d + 10.0 * v.sqrt());
        }
        let hw = (10.0 * var.sqrt() + offset).max(per_component);
        (mean, hw)
    }

    /// Componentwise scaling c * X for c > 0.
    pub fn scale(&self, c: f64) -> GaussMix {
        assert!(c > 0.0, "scale factor must be positive");
        GaussMix::from_parts(
            self.weights.clone(),
            self.means.iter().map(|m| c * m).collect(),
            self.variances.iter().map(|v| c * c * v).collect(),
        )
    }

    /// Exact law of the independent sum X + Y: the K_x * K_y component
    /// mixture with added means and variances.
    pub fn convolve(&self, other: &GaussMix) -> GaussMix {
        let mut weights = Vec::with_capacity(self.len() * other.len());
        let mut means = Vec::with_capacity(self.len() * other.len());
        let mut variances = Vec::with_capacity(self.len() * other.len());
        for i in 0..self.len() {
            for j in 0..other.len() {
                weights.push(self.weights[i] * other.weights[j]);
                means.push(self.means[i] + other.means[j]);
                variances.push(self.variances[i] + other.variances[j]);
            }
        }
        GaussMix::from_parts(weights, means, variances)
    }

    /// Deterministic sampling driven by an explicit seed.
    pub fn sample(&self, seed: u64, n: usize) -> Vec<Sample> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut component = self.len() - 1;
            for (k, w) in self.weights.iter().enumerate() {
                acc += w;
                if u < acc {
                    component = k;
                    break;
                }
            }
            let z: f64 = rng.sample(StandardNormal);
            out.push(Sample {
                value: self.means[component] + self.variances[component].sqrt() * z,
                component,
            });
        }
        out
    }
}

/// The law of sqrt(1-alpha) * X1 + sqrt(alpha) * X2 for independent mixture
/// inputs: exact, with K1 * K2 components. The endpoints alpha in {0, 1}
/// return a copy of the surviving input.
pub fn lieb_combine(a: &GaussMix, b: &GaussMix, alpha: f64) -> Result<GaussMix> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    if alpha == 0.0 {
        return Ok(a.clone());
    }
    if alpha == 1.0 {
        return Ok(b.clone());
    }
    let (ca, cb) = ((1.0 - alpha).sqrt(), alpha.sqrt());
    let mut weights = Vec::with_capacity(a.len() * b.len());
    let mut means = Vec::with_capacity(a.len() * b.len());
    let mut variances = Vec::with_capacity(a.len() * b.len());
    for i in 0..a.len() {
        for j in 0..b.len() {
            weights.push(a.weights[i] * b.weights[j]);
            means.push(ca * a.means[i] + cb * b.means[j]);
            variances.push((1.0 - alpha) * a.variances[i] + alpha * b.variances[j]);
        }
    }
    Ok(GaussMix::from_parts(weights, means, variances))
}

/// Fisher information J(X) = E[score(X)^2], by quadrature against the
/// mixture density.
pub fn fisher_direct(gm: &GaussMix, eng: &QuadEngine) -> Result<QuadResult> {
    let (center, hw) = gm.integration_window();
    let r = integrate_line(
        |x| {
            let s = gm.score(x);
            s * s * gm.pdf(x)
        },
        &eng.line_rule(),
        center,
        hw,
    )?;
    r.require_converged(eng.tol_1d)
}

/// Differential entropy h(X) = -E[log f(X)] in nats, by quadrature.
pub fn entropy_direct(gm: &GaussMix, eng: &QuadEngine) -> Result<QuadResult> {
    let (center, hw) = gm.integration_window();
    let r = integrate_line(
        |x| {
            let lp = gm.log_pdf(x);
            -lp.exp() * lp
        },
        &eng.line_rule(),
        center,
        hw,
    )?;
    r.require_converged(eng.tol_1d)
}

/// Closed-form entropy of a single Gaussian, 0.5 * ln(2 pi e sigma^2).
pub fn gaussian_entropy(variance: f64) -> f64 {
    0.5 * (LN_2PI + 1.0 + variance.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn bimodal(sep_half: f64, var: f64) -> GaussMix {
        GaussMix::new(
            vec![0.5, 0.5],
            vec![-sep_half, sep_half],
            vec![var, var],
        )
        .unwrap()
    }

    #[test]
    fn pdf_standard_normal_at_origin() {
        let gm = GaussMix::gaussian(0.0, 1.0).unwrap();
        assert_abs_diff_eq!(gm.pdf(0.0), 0.398_942_280_4, epsilon = 1e-10);
    }

    #[test]
    fn pdf_scaled_gaussian_at_mean() {
        let gm = GaussMix::gaussian(2.0, 4.0).unwrap();
        assert_abs_diff_eq!(gm.pdf(2.0), 0.199_471_140_2, epsilon = 1e-10);
    }

    #[test]
    fn pdf_symmetric_bimodal_at_origin() {
        // average of two unit normals shifted by +-1 equals phi(1) at zero
        let gm = bimodal(1.0, 1.0);
        assert_abs_diff_eq!(gm.pdf(0.0), 0.241_970_724_5, epsilon = 1e-10);
    }

    #[test]
    fn score_gaussian_is_linear() {
        let gm = GaussMix::gaussian(0.0, 1.0).unwrap();
        assert_abs_diff_eq!(gm.score(1.7), -1.7, epsilon = 1e-12);
    }

    #[test]
    fn score_vanishes_at_single_mode() {
        let gm = GaussMix::gaussian(3.0, 0.25).unwrap();
        assert_abs_diff_eq!(gm.score(3.0), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn score_matches_centered_difference() {
        // frozen reference: centered difference of log pdf at h = 1e-6
        let gm = bimodal(1.0, 1.0);
        assert_abs_diff_eq!(
            gm.score(0.3),
            -0.008_687_387_476_058_461,
            epsilon = 1e-8
        );
        let h = 1e-6;
        let fd = (gm.log_pdf(0.3 + h) - gm.log_pdf(0.3 - h)) / (2.0 * h);
        assert_abs_diff_eq!(gm.score(0.3), fd, epsilon = 1e-8);
    }

    #[test]
    fn fisher_unit_gaussian() {
        let eng = QuadEngine::default();
        let gm = GaussMix::gaussian(0.0, 1.0).unwrap();
        assert_abs_diff_eq!(fisher_direct(&gm, &eng).unwrap().value, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn fisher_is_location_invariant() {
        let eng = QuadEngine::default();
        let gm = GaussMix::gaussian(5.0, 4.0).unwrap();
        assert_abs_diff_eq!(
            fisher_direct(&gm, &eng).unwrap().value,
            0.25,
            epsilon = 1e-9
        );
    }

    #[test]
    fn fisher_bimodal_matches_trapezoid_reference() {
        // frozen reference: trapezoid on [-12, 12] with 2^20 points
        let eng = QuadEngine::default();
        let gm = bimodal(2.0, 1.0);
        assert_abs_diff_eq!(
            fisher_direct(&gm, &eng).unwrap().value,
            0.725_610_364_837_044_7,
            epsilon = 1e-8
        );
    }

    #[test]
    fn entropy_gaussian_closed_forms() {
        let eng = QuadEngine::default();
        let gm = GaussMix::gaussian(0.0, 1.0).unwrap();
        assert_abs_diff_eq!(
            entropy_direct(&gm, &eng).unwrap().value,
            1.418_938_533_2,
            epsilon = 1e-9
        );
        let gm = GaussMix::gaussian(0.0, 4.0).unwrap();
        assert_abs_diff_eq!(
            entropy_direct(&gm, &eng).unwrap().value,
            2.112_085_713_7,
            epsilon = 1e-9
        );
    }

    #[test]
    fn entropy_separated_bimodal_brackets() {
        // frozen reference from the trapezoid oracle, plus the one-bit
        // bracket: h(single component) <= h <= h(single component) + ln 2
        let eng = QuadEngine::default();
        let gm = bimodal(3.0, 1.0);
        let h = entropy_direct(&gm, &eng).unwrap().value;
        assert_abs_diff_eq!(h, 2.108_236_466_233_750_9, epsilon = 1e-8);
        assert!(h > 1.418_938_5);
        assert!(h < 1.418_938_5 + std::f64::consts::LN_2);
    }

    #[test]
    fn lieb_combine_gaussian_stability() {
        let a = GaussMix::gaussian(0.0, 1.0).unwrap();
        let c = lieb_combine(&a, &a, 0.5).unwrap();
        let (m, v) = c.moments();
        assert_abs_diff_eq!(m, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-15);
        assert_eq!(c.len(), 1);
        assert_abs_diff_eq!(c.variances()[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn lieb_combine_blends_variances() {
        let a = GaussMix::gaussian(0.0, 1.0).unwrap();
        let b = GaussMix::gaussian(0.0, 4.0).unwrap();
        let c = lieb_combine(&a, &b, 0.5).unwrap();
        assert_abs_diff_eq!(c.variances()[0], 2.5, epsilon = 1e-15);
    }

    #[test]
    fn lieb_combine_moment_arithmetic() {
        let a = GaussMix::new(vec![0.4, 0.6], vec![-1.0, 2.0], vec![0.5, 1.5]).unwrap();
        let b =
            GaussMix::new(vec![0.2, 0.3, 0.5], vec![0.0, 1.0, -2.0], vec![1.0, 2.0, 0.7])
                .unwrap();
        let alpha = 0.3;
        let c = lieb_combine(&a, &b, alpha).unwrap();
        assert_eq!(c.len(), 6);
        let (ma, va) = a.moments();
        let (mb, vb) = b.moments();
        let (mc, vc) = c.moments();
        let ca = (1.0_f64 - alpha).sqrt();
        let cb = alpha.sqrt();
        assert_abs_diff_eq!(mc, ca * ma + cb * mb, epsilon = 1e-12);
        assert_abs_diff_eq!(vc, (1.0 - alpha) * va + alpha * vb, epsilon = 1e-12);
    }

    #[test]
    fn lieb_combine_rejects_bad_alpha() {
        let a = GaussMix::gaussian(0.0, 1.0).unwrap();
        assert!(matches!(
            lieb_combine(&a, &a, 1.5),
            Err(Error::AlphaOutOfRange(_))
        ));
        assert!(lieb_combine(&a, &a, 0.0).is_ok());
        assert!(lieb_combine(&a, &a, 1.0).is_ok());
    }

    #[test]
    fn moments_closed_forms() {
        let gm = GaussMix::gaussian(3.0, 2.0).unwrap();
        let (m, v) = gm.moments();
        assert_abs_diff_eq!(m, 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v, 2.0, epsilon = 1e-15);
        let gm = bimodal(1.0, 1.0);
        let (m, v) = gm.moments();
        assert_abs_diff_eq!(m, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn sampling_is_deterministic_and_unbiased() {
        let gm = GaussMix::gaussian(0.0, 1.0).unwrap();
        let n = 100_000;
        let s1 = gm.sample(1, n);
        let s2 = gm.sample(1, n);
        assert_eq!(s1, s2);
        let mean = s1.iter().map(|s| s.value).sum::<f64>() / n as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt());
    }

    #[test]
    fn sampling_component_frequencies() {
        let gm = GaussMix::new(vec![0.9, 0.1], vec![0.0, 10.0], vec![1.0, 1.0]).unwrap();
        let n = 100_000;
        let samples = gm.sample(7, n);
        let count1 = samples.iter().filter(|s| s.component == 1).count();
        let freq = count1 as f64 / n as f64;
        // binomial standard error at p = 0.1 is ~0.00095; allow 4 sigma
        assert!((freq - 0.1).abs() < 0.004, "freq = {freq}");
        assert!(samples.iter().all(|s| s.component < gm.len()));
    }

    #[test]
    fn construction_rejects_invalid_input() {
        assert!(matches!(
            GaussMix::new(vec![0.5, 0.6], vec![0.0, 1.0], vec![1.0, 1.0]),
            Err(Error::WeightsNotNormalized { .. })
        ));
        assert!(matches!(
            GaussMix::new(vec![1.0], vec![0.0], vec![-1.0]),
            Err(Error::VarianceTooSmall { .. })
        ));
        assert!(matches!(
            GaussMix::new(vec![1.0], vec![0.0], vec![1e-9]),
            Err(Error::VarianceTooSmall { .. })
        ));
        assert!(matches!(
            GaussMix::new(vec![0.5, 0.5], vec![0.0], vec![1.0, 1.0]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            GaussMix::new(vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]),
            Err(Error::NonPositiveWeight { .. })
        ));
        assert!(GaussMix::new(vec![1.0], vec![f64::NAN], vec![1.0]).is_err());
    }

    #[test]
    fn json_parsing_and_renormalization_policy() {
        let ok = GaussMix::from_json_str(
            r#"{"weights":[0.5,0.5],"means":[-1,1],"variances":[1,1]}"#,
            false,
        )
        .unwrap();
        assert_eq!(ok.len(), 2);

        // off by 1e-12: silently rescaled
        let near = GaussMix::from_json_str(
            r#"{"weights":[0.5000000000001,0.5],"means":[-1,1],"variances":[1,1]}"#,
            false,
        )
        .unwrap();
        assert_abs_diff_eq!(pairwise_sum(near.weights()), 1.0, epsilon = 1e-15);

        // off by 1e-3: rejected without the flag, accepted with it
        let text = r#"{"weights":[0.5,0.501],"means":[-1,1],"variances":[1,1]}"#;
        assert!(matches!(
            GaussMix::from_json_str(text, false),
            Err(Error::WeightsNotNormalized { .. })
        ));
        let renorm = GaussMix::from_json_str(text, true).unwrap();
        assert_abs_diff_eq!(pairwise_sum(renorm.weights()), 1.0, epsilon = 1e-15);

        // malformed JSON reports position
        match GaussMix::from_json_str("{\"weights\": [0.5,", false) {
            Err(Error::Json { line, column, .. }) => {
                assert!(line >= 1 && column > 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn convolve_adds_moments() {
        let a = bimodal(1.0, 0.5);
        let b = GaussMix::gaussian(2.0, 3.0).unwrap();
        let c = a.convolve(&b);
        let (ma, va) = a.moments();
        let (mb, vb) = b.moments();
        let (mc, vc) = c.moments();
        assert_abs_diff_eq!(mc, ma + mb, epsilon = 1e-12);
        assert_abs_diff_eq!(vc, va + vb, epsilon = 1e-12);
    }
}
