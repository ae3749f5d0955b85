//! Radial kernels.
//!
//! Every kernel is a function of the Euclidean distance `r` only. The hybrid
//! kernel mixes a Gaussian and a cubic term:
//!
//! ```text
//! phi(r) = alpha * exp(-(epsilon * r)^2) + beta * r^3
//! ```
//!
//! The remaining kinds are the usual textbook kernels and are provided for
//! comparison.

use std::fmt;
use std::str::FromStr;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{RbfError, Result};

/// Shape parameter and mixing weights of the hybrid kernel.
///
/// `epsilon >= 0`, `alpha` and `beta` in `[0, 1]`, and not both weights zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridParams {
    epsilon: f64,
    alpha: f64,
    beta: f64,
}

impl HybridParams {
    pub fn new(epsilon: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(RbfError::Config(format!(
                "epsilon must be finite and nonnegative, got {epsilon}"
            )));
        }
        for (name, w) in [("alpha", alpha), ("beta", beta)] {
            if !(0.0..=1.0).contains(&w) {
                return Err(RbfError::Config(format!(
                    "{name} must lie in [0, 1], got {w}"
                )));
            }
        }
        if alpha == 0.0 && beta == 0.0 {
            return Err(RbfError::Config(
                "alpha and beta cannot both be zero (zero kernel)".into(),
            ));
        }
        Ok(Self {
            epsilon,
            alpha,
            beta,
        })
    }

    /// Two-parameter form with `alpha = 1 - beta`.
    pub fn normalized(epsilon: f64, beta: f64) -> Result<Self> {
        Self::new(epsilon, 1.0 - beta, beta)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    Gaussian,
    Cubic,
    Hybrid,
    Multiquadric,
    InverseMultiquadric,
    ThinPlateSpline,
    Wendland,
}

impl KernelKind {
    pub const ALL: [KernelKind; 7] = [
        KernelKind::Gaussian,
        KernelKind::Cubic,
        KernelKind::Hybrid,
        KernelKind::Multiquadric,
        KernelKind::InverseMultiquadric,
        KernelKind::ThinPlateSpline,
        KernelKind::Wendland,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Gaussian => "gaussian",
            KernelKind::Cubic => "cubic",
            KernelKind::Hybrid => "hybrid",
            KernelKind::Multiquadric => "multiquadric",
            KernelKind::InverseMultiquadric => "inverse-multiquadric",
            KernelKind::ThinPlateSpline => "thin-plate-spline",
            KernelKind::Wendland => "wendland",
        }
    }

    /// Kinds whose value does not depend on `epsilon`.
    pub fn is_shape_free(self) -> bool {
        matches!(self, KernelKind::Cubic | KernelKind::ThinPlateSpline)
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelKind {
    type Err = RbfError;

    fn from_str(s: &str) -> Result<Self> {
        KernelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| RbfError::Config(format!("unknown kernel kind '{s}'")))
    }
}

/// A kernel kind together with its parameters.
///
/// `alpha` and `beta` only matter for [`KernelKind::Hybrid`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelRecord", into = "KernelRecord")]
pub struct KernelSpec {
    kind: KernelKind,
    params: HybridParams,
}

impl KernelSpec {
    pub fn new(kind: KernelKind, params: HybridParams) -> Self {
        Self { kind, params }
    }

    pub fn hybrid(params: HybridParams) -> Self {
        Self::new(KernelKind::Hybrid, params)
    }

    pub fn gaussian(epsilon: f64) -> Result<Self> {
        Ok(Self::new(
            KernelKind::Gaussian,
            HybridParams::new(epsilon, 1.0, 0.0)?,
        ))
    }

    pub fn cubic() -> Self {
        Self::new(
            KernelKind::Cubic,
            HybridParams {
                epsilon: 0.0,
                alpha: 0.0,
                beta: 1.0,
            },
        )
    }

    /// Parametric kinds other than hybrid and cubic, with unit weights.
    pub fn with_epsilon(kind: KernelKind, epsilon: f64) -> Result<Self> {
        match kind {
            KernelKind::Cubic => Ok(Self::cubic()),
            _ => Ok(Self::new(kind, HybridParams::new(epsilon, 1.0, 0.0)?)),
        }
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn params(&self) -> HybridParams {
        self.params
    }

    /// Kernel value without the domain check on `r`.
    #[inline]
    pub fn phi(&self, r: f64) -> f64 {
        let eps = self.params.epsilon;
        match self.kind {
            KernelKind::Gaussian => gaussian(eps, r),
            KernelKind::Cubic => r * r * r,
            KernelKind::Hybrid => {
                self.params.alpha * gaussian(eps, r) + self.params.beta * (r * r * r)
            }
            KernelKind::Multiquadric => {
                let er = eps * r;
                (1.0 + er * er).sqrt()
            }
            KernelKind::InverseMultiquadric => {
                let er = eps * r;
                1.0 / (1.0 + er * er).sqrt()
            }
            KernelKind::ThinPlateSpline => {
                if r == 0.0 {
                    0.0
                } else {
                    r * r * r.ln()
                }
            }
            KernelKind::Wendland => {
                let er = eps * r;
                if er >= 1.0 {
                    0.0
                } else {
                    let t = 1.0 - er;
                    let t2 = t * t;
                    t2 * t2 * (4.0 * er + 1.0)
                }
            }
        }
    }
}

#[inline]
fn gaussian(eps: f64, r: f64) -> f64 {
    let er = eps * r;
    (-(er * er)).exp()
}

/// Evaluate `phi(r)`. Negative or NaN distances are rejected.
pub fn eval_kernel(spec: &KernelSpec, r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(RbfError::Domain(format!(
            "radial distance must be nonnegative, got {r}"
        )));
    }
    Ok(spec.phi(r))
}

/// Elementwise [`eval_kernel`] over a distance matrix.
pub fn eval_kernel_batch(spec: &KernelSpec, distances: &Mat<f64>) -> Result<Mat<f64>> {
    let (rows, cols) = (distances.nrows(), distances.ncols());
    for j in 0..cols {
        for i in 0..rows {
            let r = distances[(i, j)];
            if !(r >= 0.0) {
                return Err(RbfError::Domain(format!(
                    "distance entry ({i}, {j}) is {r}, expected nonnegative"
                )));
            }
        }
    }
    Ok(Mat::from_fn(rows, cols, |i, j| spec.phi(distances[(i, j)])))
}

/// Flat text form: kind name plus the three numbers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelRecord {
    pub kind: KernelKind,
    pub epsilon: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl TryFrom<KernelRecord> for KernelSpec {
    type Error = RbfError;

    fn try_from(rec: KernelRecord) -> Result<Self> {
        if rec.kind == KernelKind::Cubic {
            return Ok(KernelSpec::cubic());
        }
        Ok(KernelSpec::new(
            rec.kind,
            HybridParams::new(rec.epsilon, rec.alpha, rec.beta)?,
        ))
    }
}

impl From<KernelSpec> for KernelRecord {
    fn from(spec: KernelSpec) -> Self {
        KernelRecord {
            kind: spec.kind,
            epsilon: spec.params.epsilon,
            alpha: spec.params.alpha,
            beta: spec.params.beta,
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.params;
        match self.kind {
            KernelKind::Cubic | KernelKind::ThinPlateSpline => write!(f, "{}", self.kind),
            KernelKind::Hybrid => write!(
                f,
                "hybrid(epsilon={}, alpha={}, beta={})",
                p.epsilon, p.alpha, p.beta
            ),
            kind => write!(f, "{kind}(epsilon={})", p.epsilon),
        }
    }
}
