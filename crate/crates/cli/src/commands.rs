//! Implementations of the computation commands. Each returns its artifacts
//! as strings; `main` decides where they go and maps errors to exit codes.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use mixent_core::tolerances as tol;
use mixent_core::{
    deficit, diagnostics, entropy_direct, entropy_immse, kl_direct, kl_mismatched,
    kl_via_fisher, ChannelView, Error as CoreError, GaussMix, QuadResult,
};

use crate::config::RunConfig;
use crate::json::{fmt_f64, Json};

/// Failure category, mapped to the exit-code contract in `main`:
/// input errors exit 2, numerical non-convergence exits 3, verification
/// failures exit 1.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Numeric(String),
    /// Number of failed verification checks.
    ChecksFailed(#[allow(dead_code)] usize),
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::QuadratureDidNotConverge { .. }
            | CoreError::NonFiniteIntegrand { .. }
            | CoreError::DivergentEstimator(_) => CliError::Numeric(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn load_mixture(path: &Path, renormalize: bool) -> CliResult<GaussMix> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    GaussMix::from_json_str(&text, renormalize)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn mixture_json(gm: &GaussMix) -> Json {
    let arr = |xs: &[f64]| Json::Arr(xs.iter().map(|&x| Json::Num(x)).collect());
    let mut o = Json::obj();
    o.push("weights", arr(gm.weights()));
    o.push("means", arr(gm.means()));
    o.push("variances", arr(gm.variances()));
    o
}

fn quad_diag(name: &'static str, r: &QuadResult) -> Json {
    let mut o = Json::obj();
    o.push("name", Json::Str(name.into()));
    o.push("est_error", Json::Num(r.est_error));
    o.push("levels_used", Json::Int(r.levels_used as i64));
    o.push("converged", Json::Bool(r.converged));
    o
}

fn report_skeleton(command: &'static str) -> Json {
    let mut o = Json::obj();
    o.push("command", Json::Str(command.into()));
    o.push("version", Json::Str(env!("CARGO_PKG_VERSION").into()));
    o
}

/// Artifacts a command wants persisted: (file name, contents).
pub struct Artifacts {
    pub stdout: String,
    pub files: Vec<(String, String)>,
}

impl Artifacts {
    fn stdout_only(stdout: String) -> Self {
        Artifacts {
            stdout,
            files: Vec::new(),
        }
    }

    /// Write side files into `dir` (if any were produced).
    pub fn persist(&self, dir: Option<&PathBuf>) -> CliResult<()> {
        let Some(dir) = dir else { return Ok(()) };
        if self.files.is_empty() {
            return Ok(());
        }
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
        for (name, contents) in &self.files {
            let path = dir.join(name);
            fs::write(&path, contents)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        }
        Ok(())
    }
}

/// MMSE sweep: CSV with one row per requested SNR, in input order.
pub fn cmd_mmse(dist: &GaussMix, gammas: &[f64], cfg: &RunConfig) -> CliResult<Artifacts> {
    if gammas.is_empty() {
        return Err(CliError::Input("--gamma list must be non-empty".into()));
    }
    for &g in gammas {
        if !(g >= 0.0) {
            return Err(CliError::Input(format!("gamma must be >= 0 (got {g})")));
        }
    }
    let rows: Vec<CliResult<String>> = gammas
        .par_iter()
        .map(|&g| {
            let ch = ChannelView::new(dist.clone(), g)?;
            let m = ch.mmse(&cfg.quad)?;
            let j = ch.fisher_output(&cfg.quad)?;
            Ok(format!(
                "{},{},{},{}\n",
                fmt_f64(g),
                fmt_f64(m.value),
                fmt_f64(j.value),
                fmt_f64(1.0 - g * m.value)
            ))
        })
        .collect();
    let mut csv = String::from("gamma,mmse,fisher_output,one_minus_gamma_mmse\n");
    for row in rows {
        csv.push_str(&row?);
    }
    Ok(Artifacts {
        stdout: csv.clone(),
        files: vec![("mmse.csv".into(), csv)],
    })
}

/// Differential entropy, directly or through the SNR integral.
pub fn cmd_entropy(dist: &GaussMix, method: &str, cfg: &RunConfig) -> CliResult<Artifacts> {
    let mut report = report_skeleton("entropy");
    let mut inputs = Json::obj();
    inputs.push("dist", mixture_json(dist));
    report.push("inputs", inputs);

    let direct = entropy_direct(dist, &cfg.quad)?;
    let mut results = Json::obj();
    results.push("entropy_direct", Json::value_with_error(direct.value, direct.est_error));
    let mut diags = vec![quad_diag("entropy_direct", &direct)];
    match method {
        "direct" => {}
        "immse" => {
            let immse = entropy_immse(dist, &cfg.quad)?;
            results.push(
                "entropy_immse",
                Json::value_with_error(immse.value, immse.est_error),
            );
            results.push(
                "agreement",
                Json::value_with_tolerance(
                    (immse.value - direct.value).abs(),
                    tol::ENTROPY_IMMSE_MIXTURE_ABS,
                ),
            );
            diags.push(quad_diag("entropy_immse", &immse));
        }
        other => {
            return Err(CliError::Input(format!(
                "unknown entropy method: {other} (expected direct or immse)"
            )))
        }
    }
    report.push("results", results);
    report.push("quad_diagnostics", Json::Arr(diags));
    Ok(Artifacts::stdout_only(report.render()))
}

/// Deficit report plus the (gamma, integrand) CSV.
pub fn cmd_deficit(
    x1: &GaussMix,
    x2: &GaussMix,
    alpha: f64,
    cfg: &RunConfig,
) -> CliResult<Artifacts> {
    let inst = mixent_core::LiebInstance::new(x1.clone(), x2.clone(), alpha)?;
    let rep = deficit(&inst, &cfg.quad)?;

    let mut report = report_skeleton("deficit");
    let mut inputs = Json::obj();
    inputs.push("x1", mixture_json(x1));
    inputs.push("x2", mixture_json(x2));
    inputs.push("alpha", Json::Num(alpha));
    report.push("inputs", inputs);

    let identity_tol = tol::DEFICIT_IDENTITY_REL * (1.0 + rep.direct_gap.abs());
    let mut results = Json::obj();
    results.push("delta", Json::value_with_error(rep.delta, rep.quad.est_error));
    results.push(
        "direct_gap",
        Json::value_with_error(rep.direct_gap, rep.gap_quad.est_error),
    );
    results.push(
        "identity_error",
        Json::value_with_tolerance(rep.identity_error, identity_tol),
    );
    results.push(
        "gamma_samples",
        Json::Arr(
            rep.gamma_samples
                .iter()
                .map(|&(g, d)| Json::Arr(vec![Json::Num(g), Json::Num(d)]))
                .collect(),
        ),
    );
    report.push("results", results);
    report.push(
        "quad_diagnostics",
        Json::Arr(vec![
            quad_diag("snr_integral", &rep.quad),
            quad_diag("entropy_gap", &rep.gap_quad),
        ]),
    );

    let mut csv = String::from("gamma,integrand\n");
    for (g, d) in &rep.gamma_samples {
        csv.push_str(&format!("{},{}\n", fmt_f64(*g), fmt_f64(*d)));
    }
    Ok(Artifacts {
        stdout: report.render(),
        files: vec![("deficit_samples.csv".into(), csv)],
    })
}

/// Equality-condition diagnostics over the SNR grid.
pub fn cmd_diagnose(
    x1: &GaussMix,
    x2: &GaussMix,
    alpha: f64,
    grid: &[f64],
    cfg: &RunConfig,
) -> CliResult<Artifacts> {
    for &g in grid {
        if !(g > 0.0) {
            return Err(CliError::Input(format!("gamma grid must be positive (got {g})")));
        }
    }
    let inst = mixent_core::LiebInstance::new(x1.clone(), x2.clone(), alpha)?;
    let rep = diagnostics(&inst, grid, &cfg.quad)?;

    let mut report = report_skeleton("diagnose");
    let mut inputs = Json::obj();
    inputs.push("x1", mixture_json(x1));
    inputs.push("x2", mixture_json(x2));
    inputs.push("alpha", Json::Num(alpha));
    inputs.push(
        "gamma_grid",
        Json::Arr(grid.iter().map(|&g| Json::Num(g)).collect()),
    );
    report.push("inputs", inputs);

    let affine = |fit: &mixent_core::AffineFit| {
        let mut o = Json::obj();
        o.push("slope", Json::Num(fit.slope));
        o.push("intercept", Json::Num(fit.intercept));
        o.push("residual", Json::Num(fit.residual));
        o.push("est_error", Json::Num(fit.est_error));
        o
    };
    let mut rows = Vec::with_capacity(rep.rows.len());
    for row in &rep.rows {
        let mut o = Json::obj();
        o.push("gamma", Json::Num(row.gamma));
        o.push(
            "conditional_gap",
            Json::value_with_tolerance(row.conditional_gap, tol::EQUALITY_RESIDUAL_ABS),
        );
        o.push(
            "towering",
            Json::value_with_tolerance(row.towering, tol::TOWERING_MAX),
        );
        o.push(
            "score_convolution",
            Json::value_with_tolerance(row.score_convolution, tol::SCORE_CONVOLUTION_MAX),
        );
        o.push(
            "score_pointwise",
            Json::value_with_tolerance(row.score_pointwise, tol::EQUALITY_RESIDUAL_ABS),
        );
        o.push(
            "fisher_deficit",
            Json::value_with_tolerance(row.fisher_deficit, tol::EQUALITY_RESIDUAL_ABS),
        );
        o.push("affine_x1", affine(&row.affine_x1));
        o.push("affine_x2", affine(&row.affine_x2));
        rows.push(o);
    }
    let mut results = Json::obj();
    results.push("rows", Json::Arr(rows));
    results.push("verdict", Json::Str(rep.verdict.to_string()));
    results.push(
        "equality_threshold",
        Json::Num(tol::EQUALITY_RESIDUAL_ABS),
    );
    report.push("results", results);
    report.push("quad_diagnostics", Json::Arr(Vec::new()));
    Ok(Artifacts::stdout_only(report.render()))
}

/// Relative entropy through the requested routes, with cross-route
/// agreement when more than one was asked for.
pub fn cmd_kl(
    p: &GaussMix,
    q: &GaussMix,
    methods: &[String],
    cfg: &RunConfig,
) -> CliResult<Artifacts> {
    let mut report = report_skeleton("kl");
    let mut inputs = Json::obj();
    inputs.push("p", mixture_json(p));
    inputs.push("q", mixture_json(q));
    report.push("inputs", inputs);

    let mut results = Json::obj();
    let mut diags = Vec::new();
    let mut computed: Vec<(String, f64)> = Vec::new();
    for method in methods {
        let (name, r): (&'static str, QuadResult) = match method.as_str() {
            "direct" => ("kl_direct", kl_direct(p, q, &cfg.quad)?),
            "mismatched" => ("kl_mismatched", kl_mismatched(p, q, &cfg.quad)?),
            "fisher" => ("kl_via_fisher", kl_via_fisher(p, q, &cfg.quad)?),
            other => {
                return Err(CliError::Input(format!(
                    "unknown kl method: {other} (expected direct, mismatched or fisher)"
                )))
            }
        };
        results.push(name, Json::value_with_error(r.value, r.est_error));
        diags.push(quad_diag(name, &r));
        computed.push((name.to_string(), r.value));
    }
    if computed.len() > 1 {
        let reference = computed
            .iter()
            .find(|(n, _)| n == "kl_direct")
            .map(|(_, v)| *v)
            .unwrap_or(computed[0].1);
        let mut max_gap: f64 = 0.0;
        for i in 0..computed.len() {
            for j in (i + 1)..computed.len() {
                max_gap = max_gap.max((computed[i].1 - computed[j].1).abs());
            }
        }
        results.push(
            "agreement",
            Json::value_with_tolerance(
                max_gap,
                tol::KL_CROSS_METHOD_REL * reference.abs().max(tol::KL_REL_FLOOR),
            ),
        );
    }
    report.push("results", results);
    report.push("quad_diagnostics", Json::Arr(diags));
    Ok(Artifacts::stdout_only(report.render()))
}
