//! Scattered-data interpolation with the hybrid Gaussian-cubic radial basis
//! function.
//!
//! The crate is organised bottom-up:
//!
//! - [`kernel`]: radial kernels and their parameters,
//! - [`geometry`]: point sets, node generators, distances and the CSV format,
//! - [`interp`]: assembly and solution of plain and polynomial-augmented systems,
//! - [`selection`]: RMS and leave-one-out objectives,
//! - [`pso`]: particle swarm search over the kernel parameters,
//! - [`harness`]: reproducible accuracy, conditioning and cost studies.

// `!(a < b)` is used deliberately so that NaN inputs take the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod harness;
pub mod interp;
pub mod kernel;
pub mod linalg;
pub mod pso;
pub mod selection;

pub use error::{RbfError, Result};
pub use geometry::{
    make_halton_set, make_tensor_grid, min_separation, pairwise_distances, EvaluationGrid, PointSet,
};
pub use interp::{
    assemble, evaluate, fit, inverse_diagonal, spectral_report, AssembledSystem,
    InterpolationModel, SpectralReport,
};
pub use kernel::{eval_kernel, eval_kernel_batch, HybridParams, KernelKind, KernelSpec};
pub use pso::{
    optimize_hybrid, optimize_kernel, pso_minimize, validate_config, Bound, OptimizationTrace,
    PsoConfig, SearchFamily, SwarmState,
};
pub use selection::{
    loocv_cost_brute, loocv_cost_rippa, objective_value, rms_error, CostValue, ObjectiveKind,
    ObjectiveSpec, SENTINEL_COST,
};

pub use faer::Mat;
