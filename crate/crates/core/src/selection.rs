//! Objective functions for kernel parameter selection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{RbfError, Result};
use crate::geometry::{EvaluationGrid, PointSet};
use crate::interp::{self, evaluate, fit, InterpolationModel};
use crate::kernel::KernelSpec;

/// Cost reported for parameter trials whose fit fails numerically.
pub const SENTINEL_COST: f64 = 1e30;

/// Inverse-diagonal entries at or below this magnitude make Rippa's quotient meaningless.
const INVERSE_DIAGONAL_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveKind {
    Rms,
    Loocv,
}

impl std::str::FromStr for ObjectiveKind {
    type Err = RbfError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rms" => Ok(Self::Rms),
            "loocv" => Ok(Self::Loocv),
            _ => Err(RbfError::Config(format!(
                "unknown objective '{s}' (expected rms or loocv)"
            ))),
        }
    }
}

impl std::fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Rms => "rms",
            Self::Loocv => "loocv",
        })
    }
}

/// Reference values of the true function on an evaluation grid.
#[derive(Debug, Clone)]
pub struct Truth {
    pub grid: EvaluationGrid,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ObjectiveSpec {
    kind: ObjectiveKind,
    truth: Option<Truth>,
    augmented: bool,
}

impl ObjectiveSpec {
    pub fn new(kind: ObjectiveKind, truth: Option<Truth>, augmented: bool) -> Result<Self> {
        match (&kind, &truth) {
            (ObjectiveKind::Rms, None) => {
                return Err(RbfError::Config(
                    "the rms objective needs reference values".into(),
                ))
            }
            (_, Some(t)) if t.values.len() != t.grid.len() => {
                return Err(RbfError::Config(format!(
                    "{} reference values for {} grid points",
                    t.values.len(),
                    t.grid.len()
                )))
            }
            _ => {}
        }
        Ok(Self {
            kind,
            truth,
            augmented,
        })
    }

    pub fn rms(grid: EvaluationGrid, values: Vec<f64>, augmented: bool) -> Result<Self> {
        Self::new(ObjectiveKind::Rms, Some(Truth { grid, values }), augmented)
    }

    pub fn rms_from_fn(grid: EvaluationGrid, f: impl Fn(&[f64]) -> f64, augmented: bool) -> Self {
        let values = grid.map(f);
        Self {
            kind: ObjectiveKind::Rms,
            truth: Some(Truth { grid, values }),
            augmented,
        }
    }

    pub fn loocv(augmented: bool) -> Self {
        Self {
            kind: ObjectiveKind::Loocv,
            truth: None,
            augmented,
        }
    }

    pub fn kind(&self) -> ObjectiveKind {
        self.kind
    }

    pub fn truth(&self) -> Option<&Truth> {
        self.truth.as_ref()
    }

    pub fn augmented(&self) -> bool {
        self.augmented
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostValue {
    pub value: f64,
    pub per_point_errors: Option<Vec<f64>>,
}

impl CostValue {
    fn from_errors(errors: Vec<f64>) -> Self {
        Self {
            value: l2_norm(&errors),
            per_point_errors: Some(errors),
        }
    }
}

fn l2_norm(v: &[f64]) -> f64 {
    // scaled to avoid overflow when errors are huge
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale * v.iter().map(|x| (x / scale).powi(2)).sum::<f64>().sqrt()
}

/// Root-mean-square difference between two equally long vectors.
pub fn rms_of_residuals(predicted: &[f64], truth: &[f64]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(RbfError::Domain(format!(
            "{} predictions against {} reference values",
            predicted.len(),
            truth.len()
        )));
    }
    if predicted.is_empty() {
        return Err(RbfError::Domain("rms over zero points".into()));
    }
    let sum: f64 = predicted
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((sum / predicted.len() as f64).sqrt())
}

/// RMS error of `model` against reference values on `grid`.
pub fn rms_error(
    model: &InterpolationModel,
    grid: &EvaluationGrid,
    truth_values: &[f64],
) -> Result<f64> {
    if truth_values.len() != grid.len() {
        return Err(RbfError::Domain(format!(
            "{} reference values for {} grid points",
            truth_values.len(),
            grid.len()
        )));
    }
    rms_of_residuals(&evaluate(model, grid)?, truth_values)
}

/// Leave-one-out errors from a single factorization: `e_k = c_k / (A^-1)_kk`.
pub fn loocv_cost_rippa(points: &PointSet, kernel: &KernelSpec) -> Result<CostValue> {
    if points.len() < 2 {
        return Err(RbfError::Domain("LOOCV needs at least two points".into()));
    }
    let system = interp::assemble(points, kernel, false)?;
    let (coeffs, inv_diag) = interp::coefficients_and_inverse_diagonal(&system)?;
    let mut errors = Vec::with_capacity(coeffs.len());
    for (k, (c, d)) in coeffs.iter().zip(&inv_diag).enumerate() {
        if !(d.abs() > INVERSE_DIAGONAL_FLOOR) {
            return Err(RbfError::NumericalBreakdown(format!(
                "inverse diagonal entry {k} is {d:e}"
            )));
        }
        let e = c / d;
        if !e.is_finite() {
            return Err(RbfError::NumericalBreakdown(format!(
                "leave-one-out error {k} is not finite"
            )));
        }
        errors.push(e);
    }
    Ok(CostValue::from_errors(errors))
}

/// Leave-one-out errors by refitting without each point in turn.
///
/// Errors are signed, `e_k = y_k - F^[k](x_k)`; refits run in parallel but the
/// result (including which failure is reported) does not depend on scheduling.
pub fn loocv_cost_brute(
    points: &PointSet,
    kernel: &KernelSpec,
    augmented: bool,
) -> Result<CostValue> {
    let n = points.len();
    let min_n = if augmented { points.dim() + 2 } else { 2 };
    if n < min_n {
        return Err(RbfError::Domain(format!(
            "LOOCV needs at least {min_n} points, got {n}"
        )));
    }
    let values = points
        .values()
        .ok_or_else(|| RbfError::Domain("points carry no sampled values".into()))?;
    let errors: Vec<Result<f64>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let reduced = points.without(k)?;
            let model = fit(&reduced, kernel, augmented).map_err(|e| RbfError::LeaveOneOut {
                left_out: k,
                source: Box::new(e),
            })?;
            Ok(values[k] - model.value_at(points.point(k)))
        })
        .collect();
    let errors = errors.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(CostValue::from_errors(errors))
}

/// Objective value for a parameter trial; numerical failures become [`SENTINEL_COST`].
pub fn objective_value(
    spec: &ObjectiveSpec,
    points: &PointSet,
    kernel: &KernelSpec,
) -> Result<f64> {
    let raw = match spec.kind {
        ObjectiveKind::Rms => {
            let truth = spec.truth.as_ref().ok_or_else(|| {
                RbfError::Config("the rms objective needs reference values".into())
            })?;
            if truth.grid.dim() != points.dim() {
                return Err(RbfError::Config(format!(
                    "reference grid is {}-D, data is {}-D",
                    truth.grid.dim(),
                    points.dim()
                )));
            }
            fit(points, kernel, spec.augmented)
                .and_then(|m| rms_error(&m, &truth.grid, &truth.values))
        }
        ObjectiveKind::Loocv if spec.augmented => {
            loocv_cost_brute(points, kernel, true).map(|c| c.value)
        }
        ObjectiveKind::Loocv => loocv_cost_rippa(points, kernel).map(|c| c.value),
    };
    match raw {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Ok(SENTINEL_COST),
        Err(e) if e.is_numerical() => Ok(SENTINEL_COST),
        Err(e) => Err(e),
    }
}
