//! Option resolution: command-line flags override the config file, which
//! overrides built-in defaults.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::Args;
use hybrbf::pso::DEFAULT_HYBRID_BOUNDS;
use hybrbf::{Bound, HybridParams, KernelKind, KernelSpec, ObjectiveKind, PsoConfig};
use serde::Deserialize;

/// Invalid or incomplete invocation; reported with exit status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Flags shared by the fit, optimize and bench commands.
#[derive(Debug, Clone, Default, Args)]
pub struct Shared {
    /// Kernel kind: hybrid, gaussian, cubic, multiquadric, inverse-multiquadric,
    /// thin-plate-spline, wendland
    #[arg(long)]
    pub kernel: Option<KernelKind>,
    /// Shape parameter
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Gaussian weight of the hybrid kernel
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Cubic weight of the hybrid kernel
    #[arg(long)]
    pub beta: Option<f64>,
    /// Append a linear polynomial with side conditions
    #[arg(long)]
    pub augment: bool,
    /// Optimization objective: rms or loocv
    #[arg(long)]
    pub objective: Option<ObjectiveKind>,
    /// Swarm size
    #[arg(long)]
    pub swarm: Option<usize>,
    /// Number of PSO generations
    #[arg(long)]
    pub generations: Option<usize>,
    /// PSO cognitive factor
    #[arg(long)]
    pub c1: Option<f64>,
    /// PSO social factor
    #[arg(long)]
    pub c2: Option<f64>,
    /// PSO inertia weight
    #[arg(long)]
    pub inertia: Option<f64>,
    /// Search box as lo:hi per dimension, comma separated (epsilon[,alpha,beta])
    #[arg(long)]
    pub bounds: Option<String>,
    /// Random seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Points per side of the reference evaluation grid
    #[arg(long)]
    pub grid_n: Option<usize>,
    /// TOML file with defaults for any of these options
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Config file contents; every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub kernel: Option<KernelKind>,
    pub epsilon: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub augment: Option<bool>,
    pub objective: Option<ObjectiveKind>,
    pub swarm: Option<usize>,
    pub generations: Option<usize>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub inertia: Option<f64>,
    pub bounds: Option<Vec<Bound>>,
    pub seed: Option<u64>,
    pub grid_n: Option<usize>,
    pub truth: Option<String>,
    /// Overrides applied to the study spec by `bench`.
    pub experiment: Option<toml::Table>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))
    }
}

/// PSO settings given by flags or the config file; unset ones keep the base value.
#[derive(Debug, Clone, Default)]
pub struct PsoOverrides {
    pub swarm: Option<usize>,
    pub generations: Option<usize>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub inertia: Option<f64>,
    pub bounds: Option<Vec<Bound>>,
    pub seed: Option<u64>,
}

impl PsoOverrides {
    pub fn apply(&self, base: &mut PsoConfig) {
        if let Some(v) = self.swarm {
            base.swarm_size = v;
        }
        if let Some(v) = self.generations {
            base.generations = v;
        }
        if let Some(v) = self.c1 {
            base.c1 = v;
        }
        if let Some(v) = self.c2 {
            base.c2 = v;
        }
        if let Some(v) = self.inertia {
            base.inertia_w = v;
        }
        if let Some(v) = &self.bounds {
            base.bounds = v.clone();
        }
        if let Some(v) = self.seed {
            base.seed = v;
        }
    }
}

/// Options after merging flags over the config file.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub kernel: KernelKind,
    pub epsilon: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub augment: bool,
    pub objective: Option<ObjectiveKind>,
    pub pso: PsoOverrides,
    pub grid_n: Option<usize>,
    pub truth: Option<String>,
    pub experiment: Option<toml::Table>,
}

impl RunConfig {
    pub fn resolve(flags: &Shared) -> anyhow::Result<Self> {
        let file = FileConfig::load(flags.config.as_deref())?;
        let bounds = match &flags.bounds {
            Some(text) => Some(parse_bounds(text)?),
            None => file.bounds,
        };
        Ok(Self {
            kernel: flags.kernel.or(file.kernel).unwrap_or(KernelKind::Hybrid),
            epsilon: flags.epsilon.or(file.epsilon),
            alpha: flags.alpha.or(file.alpha),
            beta: flags.beta.or(file.beta),
            augment: flags.augment || file.augment.unwrap_or(false),
            objective: flags.objective.or(file.objective),
            pso: PsoOverrides {
                swarm: flags.swarm.or(file.swarm),
                generations: flags.generations.or(file.generations),
                c1: flags.c1.or(file.c1),
                c2: flags.c2.or(file.c2),
                inertia: flags.inertia.or(file.inertia),
                bounds,
                seed: flags.seed.or(file.seed),
            },
            grid_n: flags.grid_n.or(file.grid_n),
            truth: file.truth,
            experiment: file.experiment,
        })
    }

    /// PSO settings over the library defaults.
    pub fn pso_config(&self) -> PsoConfig {
        let mut c = PsoConfig::default();
        self.pso.apply(&mut c);
        c
    }

    pub fn grid_n(&self) -> usize {
        self.grid_n.unwrap_or(40)
    }

    /// The fixed kernel described by the options; fails if a parameter is missing.
    pub fn kernel_spec(&self) -> anyhow::Result<KernelSpec> {
        let need = |name: &str, v: Option<f64>| {
            v.ok_or_else(|| {
                usage(format!(
                    "--{name} is required for the {} kernel",
                    self.kernel
                ))
            })
        };
        Ok(match self.kernel {
            KernelKind::Hybrid => KernelSpec::hybrid(HybridParams::new(
                need("epsilon", self.epsilon)?,
                need("alpha", self.alpha)?,
                need("beta", self.beta)?,
            )?),
            KernelKind::Cubic => KernelSpec::cubic(),
            KernelKind::ThinPlateSpline => {
                KernelSpec::with_epsilon(KernelKind::ThinPlateSpline, 0.0)?
            }
            kind => KernelSpec::with_epsilon(kind, need("epsilon", self.epsilon)?)?,
        })
    }
}

/// Parse `lo:hi,lo:hi,...`.
pub fn parse_bounds(text: &str) -> anyhow::Result<Vec<Bound>> {
    text.split(',')
        .map(|part| {
            let (lo, hi) = part
                .split_once(':')
                .ok_or_else(|| usage(format!("bound '{part}' is not of the form lo:hi")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| usage(format!("bound '{part}' is not numeric")))
            };
            Ok(Bound::new(parse(lo)?, parse(hi)?))
        })
        .collect()
}

/// Default box for a one-dimensional (epsilon only) search.
pub fn epsilon_bounds(bounds: &[Bound]) -> Vec<Bound> {
    vec![bounds.first().copied().unwrap_or(DEFAULT_HYBRID_BOUNDS[0])]
}
