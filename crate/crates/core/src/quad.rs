//! Deterministic numerical integration.
//!
//! Composite Gauss-Legendre (and a plain trapezoid rule kept as an
//! independent cross-check path) over finite windows, tensor-product rules
//! for the plane, and improper integrals over the SNR axis gamma in [0, inf)
//! via the rational substitution gamma = u / (1 - u).
//!
//! Every rule evaluates its nodes in a fixed order and reduces them with a
//! fixed-shape pairwise summation tree, so results are bit-identical across
//! runs and independent of any caller-side parallelism.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Base rule evaluated on each panel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    /// Composite Gauss-Legendre panels; the workhorse.
    CompositeGaussLegendre,
    /// Uniform trapezoid rule. Slowly convergent, but algorithmically
    /// independent of the Gauss-Legendre path, which makes it the reference
    /// side of quadrature-agreement checks.
    TrapezoidOracle,
}

/// Change of variables applied before integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainTransform {
    /// Integrate the window as given.
    Identity,
    /// gamma = u / (1 - u) maps u in (0, 1) onto gamma in (0, inf) with
    /// Jacobian 1 / (1 - u)^2. Open Gauss rules never touch u = 1.
    RationalGamma,
}

/// Stopping policy for panel doubling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Refinement {
    /// Single evaluation of the initial grid.
    None,
    /// Double the panel count until the difference between consecutive
    /// levels drops to `tol`, up to `max_levels` grids in total.
    DoubleUntilTol { tol: f64, max_levels: u32 },
}

/// A complete quadrature plan: base rule, initial resolution, transform,
/// and refinement policy.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    pub kind: RuleKind,
    pub panels: usize,
    pub nodes_per_panel: usize,
    pub transform: DomainTransform,
    pub refinement: Refinement,
}

pub(crate) const MAX_REFINEMENT_LEVELS: u32 = 16;

impl QuadRule {
    /// Default 1-D line rule (tolerance supplied by the engine config).
    pub fn line(tol: f64, max_levels: u32) -> Self {
        QuadRule {
            kind: RuleKind::CompositeGaussLegendre,
            panels: 8,
            nodes_per_panel: 16,
            transform: DomainTransform::Identity,
            refinement: Refinement::DoubleUntilTol { tol, max_levels },
        }
    }

    /// Default rule for integrals over gamma in [0, inf).
    pub fn gamma(tol: f64, max_levels: u32) -> Self {
        QuadRule {
            kind: RuleKind::CompositeGaussLegendre,
            panels: 8,
            nodes_per_panel: 16,
            transform: DomainTransform::RationalGamma,
            refinement: Refinement::DoubleUntilTol { tol, max_levels },
        }
    }

    /// Default per-axis rule for tensor-product integration on the plane.
    /// The initial grid is kept coarse because refinement doubles both axes
    /// at once.
    pub fn plane(tol: f64, max_levels: u32) -> Self {
        QuadRule {
            kind: RuleKind::CompositeGaussLegendre,
            panels: 3,
            nodes_per_panel: 10,
            transform: DomainTransform::Identity,
            refinement: Refinement::DoubleUntilTol { tol, max_levels },
        }
    }

    /// Fixed trapezoid reference: `points` uniform samples, no refinement.
    pub fn trapezoid_oracle(points: usize) -> Self {
        QuadRule {
            kind: RuleKind::TrapezoidOracle,
            panels: 1,
            nodes_per_panel: points,
            transform: DomainTransform::Identity,
            refinement: Refinement::None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes_per_panel < 2 {
            return Err(Error::InvalidRule(format!(
                "nodes_per_panel must be >= 2 (got {})",
                self.nodes_per_panel
            )));
        }
        if self.panels == 0 {
            return Err(Error::InvalidRule("panels must be >= 1".into()));
        }
        if let Refinement::DoubleUntilTol { tol, max_levels } = self.refinement {
            if !(tol > 0.0) {
                return Err(Error::InvalidRule(format!("tol must be > 0 (got {tol})")));
            }
            if max_levels == 0 || max_levels > MAX_REFINEMENT_LEVELS {
                return Err(Error::InvalidRule(format!(
                    "max_levels must be in 1..={MAX_REFINEMENT_LEVELS} (got {max_levels})"
                )));
            }
        }
        Ok(())
    }
}

/// Outcome of one integration, including the refinement diagnostics that
/// reports surface alongside every emitted number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    /// Value at the finest grid evaluated.
    pub value: f64,
    /// Absolute difference between the last two refinement levels
    /// (0 when the rule performed no refinement).
    pub est_error: f64,
    /// Number of grids evaluated, counting the initial one.
    pub levels_used: u32,
    /// Whether `est_error` dropped to the rule tolerance.
    pub converged: bool,
    /// Value at the second-finest grid; equals `value` when only one grid
    /// was evaluated.
    pub previous: f64,
}

impl QuadResult {
    /// Affine map of the integral value: `a * value + b`. Keeps the
    /// refinement diagnostics consistent with the transformed quantity.
    pub fn map_affine(self, a: f64, b: f64) -> QuadResult {
        QuadResult {
            value: a * self.value + b,
            est_error: a.abs() * self.est_error,
            levels_used: self.levels_used,
            converged: self.converged,
            previous: a * self.previous + b,
        }
    }

    /// Linear combination `sum(coef_i * part_i) + offset` of several
    /// integration results; errors add in absolute value, convergence is
    /// the conjunction.
    pub fn combine(parts: &[(f64, QuadResult)], offset: f64) -> QuadResult {
        let mut value = offset;
        let mut previous = offset;
        let mut est_error = 0.0;
        let mut levels_used = 0;
        let mut converged = true;
        for (coef, part) in parts {
            value += coef * part.value;
            previous += coef * part.previous;
            est_error += coef.abs() * part.est_error;
            levels_used = levels_used.max(part.levels_used);
            converged &= part.converged;
        }
        QuadResult {
            value,
            est_error,
            levels_used,
            converged,
            previous,
        }
    }

    /// Promote non-convergence to an error carrying the last two values.
    pub fn require_converged(self, tol: f64) -> Result<QuadResult> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::QuadratureDidNotConverge {
                last: self.value,
                previous: self.previous,
                est_error: self.est_error,
                tol,
                levels: self.levels_used,
            })
        }
    }
}

/// Fixed-shape pairwise reduction; the result depends only on the slice
/// contents, never on how the values were produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        let mut acc = 0.0;
        for v in values {
            acc += v;
        }
        acc
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}

struct GlNodes {
    /// Nodes on [-1, 1], ascending.
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

fn gl_cache() -> &'static Mutex<HashMap<usize, Arc<GlNodes>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GlNodes>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Gauss-Legendre nodes and weights on [-1, 1] via Newton iteration on the
/// Legendre recurrence.
fn legendre_nodes(n: usize) -> Arc<GlNodes> {
    if let Some(hit) = gl_cache().lock().unwrap().get(&n) {
        return Arc::clone(hit);
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        // Tricomi initial guess for the i-th root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Recurrence for P_n(x) and derivative.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    let entry = Arc::new(GlNodes { nodes, weights });
    gl_cache()
        .lock()
        .unwrap()
        .insert(n, Arc::clone(&entry));
    entry
}

/// Evaluate one grid of the 1-D rule on [lo, hi] with `panels` panels.
fn eval_grid_1d(
    f: &mut dyn FnMut(f64) -> f64,
    kind: RuleKind,
    nodes_per_panel: usize,
    panels: usize,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    match kind {
        RuleKind::CompositeGaussLegendre => {
            let gl = legendre_nodes(nodes_per_panel);
            let width = (hi - lo) / panels as f64;
            let mut panel_sums = Vec::with_capacity(panels);
            let mut contrib = Vec::with_capacity(nodes_per_panel);
            for p in 0..panels {
                let a = lo + p as f64 * width;
                let c = a + 0.5 * width;
                let h = 0.5 * width;
                contrib.clear();
                for (x, w) in gl.nodes.iter().zip(gl.weights.iter()) {
                    let t = c + h * x;
                    let v = f(t);
                    if !v.is_finite() {
                        return Err(Error::NonFiniteIntegrand {
                            value: v,
                            location: "x",
                            at: t,
                        });
                    }
                    contrib.push(w * h * v);
                }
                panel_sums.push(pairwise_sum(&contrib));
            }
            Ok(pairwise_sum(&panel_sums))
        }
        RuleKind::TrapezoidOracle => {
            let points = panels * nodes_per_panel;
            let h = (hi - lo) / (points - 1) as f64;
            let mut contrib = Vec::with_capacity(points);
            for i in 0..points {
                let t = lo + i as f64 * h;
                let v = f(t);
                if !v.is_finite() {
                    return Err(Error::NonFiniteIntegrand {
                        value: v,
                        location: "x",
                        at: t,
                    });
                }
                let w = if i == 0 || i == points - 1 { 0.5 } else { 1.0 };
                contrib.push(w * h * v);
            }
            Ok(pairwise_sum(&contrib))
        }
    }
}

fn refine(
    rule: &QuadRule,
    mut eval: impl FnMut(usize) -> Result<f64>,
) -> Result<QuadResult> {
    match rule.refinement {
        Refinement::None => {
            let value = eval(rule.panels)?;
            Ok(QuadResult {
                value,
                est_error: 0.0,
                levels_used: 1,
                converged: true,
                previous: value,
            })
        }
        Refinement::DoubleUntilTol { tol, max_levels } => {
            let mut panels = rule.panels;
            let mut previous = eval(panels)?;
            let mut levels_used = 1;
            let mut value = previous;
            let mut est_error = f64::INFINITY;
            let mut converged = false;
            while levels_used < max_levels {
                panels *= 2;
                value = eval(panels)?;
                levels_used += 1;
                est_error = (value - previous).abs();
                if est_error <= tol {
                    converged = true;
                    break;
                }
                if levels_used < max_levels {
                    previous = value;
                }
            }
            if max_levels == 1 {
                // Single-level budget: no difference is available.
                est_error = f64::INFINITY;
            }
            Ok(QuadResult {
                value,
                est_error,
                levels_used,
                converged,
                previous,
            })
        }
    }
}

/// Integrate `f` over the window [center - half_width, center + half_width].
pub fn integrate_line(
    mut f: impl FnMut(f64) -> f64,
    rule: &QuadRule,
    center: f64,
    half_width: f64,
) -> Result<QuadResult> {
    rule.validate()?;
    let lo = center - half_width;
    let hi = center + half_width;
    refine(rule, |panels| {
        eval_grid_1d(&mut f, rule.kind, rule.nodes_per_panel, panels, lo, hi)
    })
}

/// Integrate `f` over gamma in [0, inf) through the rational substitution
/// u = gamma / (1 + gamma). The endpoint u = 1 is never evaluated because
/// Gauss nodes are interior.
pub fn integrate_gamma(mut f: impl FnMut(f64) -> f64, rule: &QuadRule) -> Result<QuadResult> {
    rule.validate()?;
    if rule.kind != RuleKind::CompositeGaussLegendre {
        return Err(Error::InvalidRule(
            "gamma integration requires the open Gauss-Legendre rule".into(),
        ));
    }
    let mut g = |u: f64| -> f64 {
        let denom = 1.0 - u;
        let gamma = u / denom;
        f(gamma) / (denom * denom)
    };
    refine(rule, |panels| {
        let gl = legendre_nodes(rule.nodes_per_panel);
        let width = 1.0 / panels as f64;
        let mut panel_sums = Vec::with_capacity(panels);
        let mut contrib = Vec::with_capacity(rule.nodes_per_panel);
        for p in 0..panels {
            let a = p as f64 * width;
            let c = a + 0.5 * width;
            let h = 0.5 * width;
            contrib.clear();
            for (x, w) in gl.nodes.iter().zip(gl.weights.iter()) {
                let u = c + h * x;
                let v = g(u);
                if !v.is_finite() {
                    return Err(Error::NonFiniteIntegrand {
                        value: v,
                        location: "gamma",
                        at: u / (1.0 - u),
                    });
                }
                contrib.push(w * h * v);
            }
            panel_sums.push(pairwise_sum(&contrib));
        }
        Ok(pairwise_sum(&panel_sums))
    })
}

/// Tensor-product integration of `f(x, y)` over the rectangle
/// `[cx - hx, cx + hx] x [cy - hy, cy + hy]`. Refinement doubles both axes
/// together; rows are reduced first, then the row sums.
pub fn integrate_plane(
    mut f: impl FnMut(f64, f64) -> f64,
    rule: &QuadRule,
    center: (f64, f64),
    half_widths: (f64, f64),
) -> Result<QuadResult> {
    rule.validate()?;
    if rule.kind != RuleKind::CompositeGaussLegendre {
        return Err(Error::InvalidRule(
            "plane integration supports only the Gauss-Legendre rule".into(),
        ));
    }
    let gl = legendre_nodes(rule.nodes_per_panel);
    refine(rule, |panels| {
        let axis = |c: f64, hw: f64| {
            let lo = c - hw;
            let width = 2.0 * hw / panels as f64;
            let mut xs = Vec::with_capacity(panels * rule.nodes_per_panel);
            let mut ws = Vec::with_capacity(panels * rule.nodes_per_panel);
            for p in 0..panels {
                let a = lo + p as f64 * width;
                let cc = a + 0.5 * width;
                let h = 0.5 * width;
                for (x, w) in gl.nodes.iter().zip(gl.weights.iter()) {
                    xs.push(cc + h * x);
                    ws.push(w * h);
                }
            }
            (xs, ws)
        };
        let (xs, wxs) = axis(center.0, half_widths.0);
        let (ys, wys) = axis(center.1, half_widths.1);
        let mut row_sums = Vec::with_capacity(xs.len());
        let mut row = Vec::with_capacity(ys.len());
        for (x, wx) in xs.iter().zip(wxs.iter()) {
            row.clear();
            for (y, wy) in ys.iter().zip(wys.iter()) {
                let v = f(*x, *y);
                if !v.is_finite() {
                    return Err(Error::NonFiniteIntegrand {
                        value: v,
                        location: "x",
                        at: *x,
                    });
                }
                row.push(wx * wy * v);
            }
            row_sums.push(pairwise_sum(&row));
        }
        Ok(pairwise_sum(&row_sums))
    })
}

/// Nodes and weights of a fixed composite Gauss-Legendre grid on [lo, hi],
/// for callers that evaluate several coupled integrands on one shared grid
/// (conditional expectations normalize a numerator against a denominator on
/// identical nodes).
pub(crate) fn composite_gl_grid(
    panels: usize,
    nodes_per_panel: usize,
    lo: f64,
    hi: f64,
) -> (Vec<f64>, Vec<f64>) {
    let gl = legendre_nodes(nodes_per_panel);
    let width = (hi - lo) / panels as f64;
    let mut xs = Vec::with_capacity(panels * nodes_per_panel);
    let mut ws = Vec::with_capacity(panels * nodes_per_panel);
    for p in 0..panels {
        let a = lo + p as f64 * width;
        let c = a + 0.5 * width;
        let h = 0.5 * width;
        for (x, w) in gl.nodes.iter().zip(gl.weights.iter()) {
            xs.push(c + h * x);
            ws.push(w * h);
        }
    }
    (xs, ws)
}

/// Engine configuration: the tolerances and refinement budget used by all
/// quadrature-backed operations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadEngine {
    pub tol_1d: f64,
    pub tol_2d: f64,
    pub max_levels: u32,
}

impl Default for QuadEngine {
    fn default() -> Self {
        QuadEngine {
            tol_1d: 1e-9,
            tol_2d: 1e-7,
            max_levels: 12,
        }
    }
}

impl QuadEngine {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_1d > 0.0) || !(self.tol_2d > 0.0) {
            return Err(Error::InvalidRule("tolerances must be > 0".into()));
        }
        if self.max_levels == 0 || self.max_levels > MAX_REFINEMENT_LEVELS {
            return Err(Error::InvalidRule(format!(
                "max_levels must be in 1..={MAX_REFINEMENT_LEVELS}"
            )));
        }
        Ok(())
    }

    pub fn line_rule(&self) -> QuadRule {
        QuadRule::line(self.tol_1d, self.max_levels)
    }

    /// Gamma integrals whose integrand is itself produced by 1-D quadrature
    /// carry per-point noise near `tol_1d`; the outer tolerance sits two
    /// decades above it so refinement terminates on truncation error, not
    /// on that noise floor.
    pub fn gamma_rule_1d(&self) -> QuadRule {
        QuadRule::gamma(self.tol_1d * 100.0, self.max_levels)
    }

    /// Scaling for gamma integrands backed by 2-D quadrature. The inner
    /// plane integral stops on an absolute tolerance, and the substitution
    /// Jacobian (1+gamma)^2 amplifies that stopping error at high SNR, so
    /// the transformed integrand carries noise that no refinement level can
    /// push below roughly 100x the inner tolerance. The outer tolerance
    /// sits above that floor. Each node costs a full plane integral, so the
    /// initial grid is also kept at half the 1-D density.
    pub fn gamma_rule_2d(&self) -> QuadRule {
        let mut rule = QuadRule::gamma(self.tol_2d * 300.0, self.max_levels);
        rule.panels = 4;
        rule
    }

    pub fn plane_rule(&self) -> QuadRule {
        QuadRule::plane(self.tol_2d, self.max_levels)
    }
}
