use clap::ValueEnum;
use rmt_edge::potential::PotentialSpec;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Equilibrium,
    Recurrence,
    KernelConvergence,
    ToeplitzResiduals,
    TwTables,
    MonteCarlo,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Equilibrium => "equilibrium",
            Kind::Recurrence => "recurrence",
            Kind::KernelConvergence => "kernel-convergence",
            Kind::ToeplitzResiduals => "toeplitz-residuals",
            Kind::TwTables => "tw-tables",
            Kind::MonteCarlo => "monte-carlo",
        }
    }
}

/// Closed grid min, min + step, ..., max.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.max - self.min) / self.step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| self.min + i as f64 * self.step)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarlo {
    pub draws: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub chains: usize,
    pub ks_tolerance: f64,
}

impl Default for MonteCarlo {
    fn default() -> Self {
        Self {
            draws: 10_000,
            burn_in: 2000,
            thin: 10,
            chains: 8,
            ks_tolerance: 0.08,
        }
    }
}

/// One experiment. Every field but `kind` has a per-kind default.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Option<Kind>,
    pub potential: Option<PotentialSpec>,
    pub ladder: Option<Vec<usize>>,
    pub beta: Option<u8>,
    pub s_grid: Option<Grid>,
    /// Edge window for kernel comparisons.
    pub window: Option<Grid>,
    pub resolution: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub monte_carlo: Option<MonteCarlo>,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(format!("bad config: {e}")))
    }

    /// Fills defaults and checks invariants; the result has every field set.
    pub fn resolve(mut self) -> Result<Resolved, ConfigError> {
        let kind = self.kind.take().ok_or_else(|| {
            ConfigError("no experiment kind given (config `kind` or --kind)".into())
        })?;
        let potential = self.potential.unwrap_or(PotentialSpec {
            builtin: Some("gaussian".into()),
            ..Default::default()
        });
        let ladder = self.ladder.unwrap_or_else(|| match kind {
            Kind::MonteCarlo => vec![100],
            Kind::Equilibrium => vec![],
            Kind::Recurrence | Kind::KernelConvergence | Kind::ToeplitzResiduals => {
                vec![64, 128, 256]
            }
            Kind::TwTables => vec![],
        });
        let beta = self.beta.unwrap_or(1);
        if beta != 1 && beta != 2 {
            return Err(ConfigError(format!("beta must be 1 or 2, got {beta}")));
        }
        let needs_ladder = matches!(
            kind,
            Kind::Recurrence | Kind::KernelConvergence | Kind::ToeplitzResiduals | Kind::MonteCarlo
        );
        if needs_ladder && ladder.is_empty() {
            return Err(ConfigError("empty n ladder".into()));
        }
        if let Some(&n) = ladder.iter().find(|&&n| n < 4) {
            return Err(ConfigError(format!("ladder entry n = {n} is too small")));
        }
        // the skew kernels need even n
        let beta_one = matches!(kind, Kind::KernelConvergence | Kind::ToeplitzResiduals)
            || (kind == Kind::MonteCarlo && beta == 1);
        if beta_one {
            if let Some(&n) = ladder.iter().find(|&&n| n % 2 == 1) {
                return Err(ConfigError(format!(
                    "beta = 1 experiments need even n, got {n}"
                )));
            }
        }
        let s_grid = self.s_grid.unwrap_or(Grid {
            min: -6.0,
            max: 4.0,
            step: 0.25,
        });
        let window = self.window.unwrap_or(Grid {
            min: -2.0,
            max: 4.0,
            step: 0.25,
        });
        for (name, g) in [("s_grid", &s_grid), ("window", &window)] {
            if !(g.step > 0.0) || g.max < g.min {
                return Err(ConfigError(format!("{name}: need step > 0 and max ≥ min")));
            }
        }
        if s_grid.min < -10.0 || s_grid.max > 8.0 {
            return Err(ConfigError("s_grid must lie within [−10, 8]".into()));
        }
        let resolution = self.resolution.unwrap_or(48);
        if resolution < 8 {
            return Err(ConfigError(format!(
                "resolution {resolution} is below 8 nodes"
            )));
        }
        let mc = self.monte_carlo.unwrap_or_default();
        if mc.draws == 0 || mc.chains == 0 || mc.thin == 0 {
            return Err(ConfigError(
                "monte_carlo: draws, chains and thin must be positive".into(),
            ));
        }
        Ok(Resolved {
            kind,
            potential,
            ladder,
            beta,
            s_grid,
            window,
            resolution,
            seed: self.seed.unwrap_or(1),
            out: self.out.unwrap_or_else(|| PathBuf::from("out")),
            monte_carlo: mc,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Resolved {
    pub kind: Kind,
    pub potential: PotentialSpec,
    pub ladder: Vec<usize>,
    pub beta: u8,
    pub s_grid: Grid,
    pub window: Grid,
    pub resolution: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub monte_carlo: MonteCarlo,
}
