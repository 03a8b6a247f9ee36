//! Run configuration: a flat key=value file plus command-line overrides.

use std::path::PathBuf;

use mixent_core::quad::QuadEngine;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub quad: QuadEngine,
    /// SNR grid for the diagnostics command.
    pub gamma_grid: Vec<f64>,
    pub mc_seed: u64,
    pub mc_samples: usize,
    pub output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            quad: QuadEngine::default(),
            gamma_grid: vec![0.5, 1.0, 2.0],
            mc_seed: 42,
            mc_samples: 1_000_000,
            output_dir: None,
        }
    }
}

impl RunConfig {
    /// Parse the flat `key = value` format. Lines starting with `#` and
    /// blank lines are ignored; unknown keys are errors.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut cfg = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key=value", lineno + 1))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| format!("line {}: invalid {what}: {value}", lineno + 1);
            match key {
                "quad.tol1d" => cfg.quad.tol_1d = value.parse().map_err(|_| bad("quad.tol1d"))?,
                "quad.tol2d" => cfg.quad.tol_2d = value.parse().map_err(|_| bad("quad.tol2d"))?,
                "quad.max_levels" => {
                    cfg.quad.max_levels = value.parse().map_err(|_| bad("quad.max_levels"))?
                }
                "gamma.grid" => {
                    cfg.gamma_grid = value
                        .split(',')
                        .map(|v| v.trim().parse::<f64>())
                        .collect::<Result<_, _>>()
                        .map_err(|_| bad("gamma.grid"))?;
                }
                "mc.seed" => cfg.mc_seed = value.parse().map_err(|_| bad("mc.seed"))?,
                "mc.samples" => cfg.mc_samples = value.parse().map_err(|_| bad("mc.samples"))?,
                "output.dir" => cfg.output_dir = Some(PathBuf::from(value)),
                other => return Err(format!("line {}: unknown key: {other}", lineno + 1)),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        self.quad.validate().map_err(|e| e.to_string())?;
        if self.gamma_grid.is_empty() {
            return Err("gamma.grid must be non-empty".into());
        }
        for pair in self.gamma_grid.windows(2) {
            if pair[1] <= pair[0] {
                return Err("gamma.grid must be strictly increasing".into());
            }
        }
        if self.gamma_grid[0] <= 0.0 {
            return Err("gamma.grid values must be positive".into());
        }
        if self.mc_samples == 0 {
            return Err("mc.samples must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_config() {
        let cfg = RunConfig::parse(
            "# comment\n\
             quad.tol1d = 1e-8\n\
             quad.tol2d = 1e-6\n\
             quad.max_levels = 10\n\
             gamma.grid = 0.25, 1, 3\n\
             mc.seed = 7\n\
             mc.samples = 1000\n\
             output.dir = out\n",
        )
        .unwrap();
        assert_eq!(cfg.quad.tol_1d, 1e-8);
        assert_eq!(cfg.quad.max_levels, 10);
        assert_eq!(cfg.gamma_grid, vec![0.25, 1.0, 3.0]);
        assert_eq!(cfg.mc_seed, 7);
        assert_eq!(cfg.output_dir, Some(PathBuf::from("out")));
    }

    #[test]
    fn rejects_unknown_and_invalid() {
        assert!(RunConfig::parse("quad.tol3d = 1").is_err());
        assert!(RunConfig::parse("quad.tol1d = banana").is_err());
        assert!(RunConfig::parse("quad.max_levels = 17").is_err());
        assert!(RunConfig::parse("gamma.grid = 2,1").is_err());
        assert!(RunConfig::parse("gamma.grid = -1,2").is_err());
    }
}
