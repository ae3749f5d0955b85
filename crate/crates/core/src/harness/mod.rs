//! Reproducible accuracy, conditioning and cost studies.
//!
//! Every study is a pure function of its [`ExperimentSpec`] (including the PSO
//! seed). Reports are written as one CSV row per cell plus a plain-text table;
//! file names carry a hash of the spec so reruns land in the same place.

mod functions;
mod report;
mod studies;

use serde::{Deserialize, Serialize};

use crate::error::{RbfError, Result};
use crate::kernel::KernelSpec;
use crate::pso::PsoConfig;
use crate::selection::ObjectiveKind;

pub use functions::{
    fault_surface, fault_surface_point, franke, franke_point, linear_half_sum, on_footwall,
    synthetic_fault_surface, FAULT_DOMAIN, FAULT_STEP,
};
pub use report::{CellRecord, ExperimentReport, SweepRecord};
pub use studies::{
    conditioning_relief, fault_pipeline_study, franke_convergence_study, linear_reproduction_study,
    objective_comparison_study, rerun_cell_rms, run_study, scaling_study, spectra_study,
    ConditioningRelief,
};

/// Node counts used by the desk-scale defaults.
pub const DESK_NODE_COUNTS: [usize; 8] = [25, 49, 81, 144, 196, 400, 625, 1296];
/// Node counts of the full-size tables.
pub const FULL_NODE_COUNTS: [usize; 10] = [25, 49, 81, 144, 196, 400, 625, 1296, 2401, 4096];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    LinearReproduction,
    FrankeConvergence,
    Spectra,
    ObjectiveComparison,
    Scaling,
    Fault,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        Self::LinearReproduction,
        Self::FrankeConvergence,
        Self::Spectra,
        Self::ObjectiveComparison,
        Self::Scaling,
        Self::Fault,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::LinearReproduction => "linear-reproduction",
            Self::FrankeConvergence => "franke-convergence",
            Self::Spectra => "spectra",
            Self::ObjectiveComparison => "objective-comparison",
            Self::Scaling => "scaling",
            Self::Fault => "fault",
        }
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = RbfError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Self::ALL.iter().map(|k| k.name()).collect();
                RbfError::Config(format!(
                    "unknown study '{s}' (expected one of {})",
                    names.join(", ")
                ))
            })
    }
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Kernel configurations compared by the studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelVariant {
    Gaussian,
    Cubic,
    Hybrid,
    #[serde(rename = "hybrid+poly", alias = "hybrid-poly")]
    HybridPoly,
}

impl KernelVariant {
    pub fn name(self) -> &'static str {
        match self {
            Self::Gaussian => "gaussian",
            Self::Cubic => "cubic",
            Self::Hybrid => "hybrid",
            Self::HybridPoly => "hybrid+poly",
        }
    }

    pub fn augmented(self) -> bool {
        matches!(self, Self::HybridPoly)
    }
}

impl std::str::FromStr for KernelVariant {
    type Err = RbfError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Self::Gaussian),
            "cubic" => Ok(Self::Cubic),
            "hybrid" => Ok(Self::Hybrid),
            "hybrid+poly" | "hybrid-poly" => Ok(Self::HybridPoly),
            _ => Err(RbfError::Config(format!("unknown kernel variant '{s}'"))),
        }
    }
}

/// Fixed-parameter error-vs-epsilon sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub alpha: f64,
    pub beta: f64,
    pub epsilon_min: f64,
    pub epsilon_max: f64,
    pub points: usize,
    /// Node count of the sweep; defaults to the largest requested count.
    pub n: Option<usize>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1e-6,
            epsilon_min: 0.1,
            epsilon_max: 20.0,
            points: 30,
            n: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub node_counts: Vec<usize>,
    pub variants: Vec<KernelVariant>,
    pub objective: ObjectiveKind,
    pub pso: PsoConfig,
    /// Side of the square evaluation grid used for every RMS number.
    pub eval_grid_n: usize,
    pub sweep: Option<SweepSpec>,
    /// Kernel timed by the scaling study.
    pub timing_kernel: KernelSpec,
    pub timing_repeats: usize,
    /// Also time one full optimization per node count in the scaling study.
    pub time_optimize: bool,
    /// Largest N for which augmented cells compute the brute-force LOOCV cost.
    pub brute_loocv_max_n: usize,
    /// Side of the output grid in the fault pipeline.
    pub fault_output_n: usize,
    /// Number of scattered fault samples.
    pub fault_points: usize,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self::desk(ExperimentKind::FrankeConvergence)
    }
}

impl ExperimentSpec {
    /// Desk-scale defaults for a study.
    pub fn desk(kind: ExperimentKind) -> Self {
        let variants = match kind {
            ExperimentKind::LinearReproduction => {
                vec![
                    KernelVariant::Gaussian,
                    KernelVariant::Hybrid,
                    KernelVariant::HybridPoly,
                ]
            }
            ExperimentKind::Spectra => vec![KernelVariant::Hybrid, KernelVariant::HybridPoly],
            _ => vec![KernelVariant::Hybrid],
        };
        let node_counts = match kind {
            ExperimentKind::Scaling => vec![400, 900, 1600],
            ExperimentKind::Fault => vec![78],
            _ => DESK_NODE_COUNTS.to_vec(),
        };
        let objective = match kind {
            ExperimentKind::Fault => ObjectiveKind::Loocv,
            _ => ObjectiveKind::Rms,
        };
        Self {
            kind,
            node_counts,
            variants,
            objective,
            pso: PsoConfig::default(),
            eval_grid_n: 40,
            sweep: (kind == ExperimentKind::FrankeConvergence).then(SweepSpec::default),
            timing_kernel: KernelSpec::hybrid(
                crate::kernel::HybridParams::new(5.5, 0.7, 0.3).expect("valid constant"),
            ),
            timing_repeats: 3,
            time_optimize: false,
            brute_loocv_max_n: 200,
            fault_output_n: 501,
            fault_points: 78,
        }
    }

    /// Full-size node counts.
    pub fn full(kind: ExperimentKind) -> Self {
        let mut spec = Self::desk(kind);
        if !matches!(kind, ExperimentKind::Scaling | ExperimentKind::Fault) {
            spec.node_counts = FULL_NODE_COUNTS.to_vec();
        }
        spec
    }

    pub fn validate(&self) -> Result<()> {
        if self.node_counts.is_empty() {
            return Err(RbfError::Config("no node counts requested".into()));
        }
        if self.variants.is_empty() && self.kind != ExperimentKind::Scaling {
            return Err(RbfError::Config("no kernel variants requested".into()));
        }
        if self.eval_grid_n < 2 {
            return Err(RbfError::Config(
                "evaluation grid needs at least 2 points per side".into(),
            ));
        }
        let tensor = !matches!(self.kind, ExperimentKind::Fault);
        if tensor {
            if let Some(&n) = self.node_counts.iter().find(|&&n| side_of(n).is_none()) {
                return Err(RbfError::Config(format!(
                    "node count {n} is not a perfect square >= 4 (tensor grids)"
                )));
            }
        }
        if self.kind == ExperimentKind::Scaling {
            let lo = *self.node_counts.iter().min().expect("nonempty");
            let hi = *self.node_counts.iter().max().expect("nonempty");
            if hi < 4 * lo {
                return Err(RbfError::Config(format!(
                    "scaling needs node counts spanning at least 4x, got {lo}..{hi}"
                )));
            }
            if self.timing_repeats == 0 {
                return Err(RbfError::Config("timing_repeats must be positive".into()));
            }
        }
        let violations = crate::pso::validate_config(&self.pso);
        if !violations.is_empty() {
            let msg: Vec<String> = violations.iter().map(ToString::to_string).collect();
            return Err(RbfError::Config(msg.join("; ")));
        }
        if self.pso.bounds.len() != 3 {
            return Err(RbfError::Config(
                "study PSO bounds must cover (epsilon, alpha, beta)".into(),
            ));
        }
        Ok(())
    }

    /// Short stable hash of the spec, used in output file names.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_vec(self).expect("spec serializes");
        Sha256::digest(&json)
            .iter()
            .take(6)
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Points per side of a square node count.
pub(crate) fn side_of(n: usize) -> Option<usize> {
    let k = (n as f64).sqrt().round() as usize;
    (k >= 2 && k * k == n).then_some(k)
}
