//! Assembly, solution and evaluation of global RBF interpolants.
//!
//! The plain system is `A c = y` with `A[j][k] = phi(|x_j - x_k|)`. With linear
//! polynomial augmentation the unknowns gain a tail `d = [d_0, d_1, .., d_s]`
//! (constant first, then one per coordinate) and the system becomes the
//! symmetric saddle-point problem
//!
//! ```text
//! [ A   P ] [c]   [y]
//! [ P^T 0 ] [d] = [0]        P[j] = [1, x_j1, .., x_js]
//! ```

use std::io::Write;

use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{RbfError, Result};
use crate::geometry::{euclidean, EvaluationGrid, PointSet};
use crate::kernel::KernelSpec;
use crate::linalg::{self, LuFactor};

const UNISOLVENCY_HINT: &str =
    "augmented system: the nodes may not be unisolvent for linear polynomials";

/// Dense interpolation matrix and right-hand side.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub matrix: Mat<f64>,
    pub rhs: Vec<f64>,
    n_centers: usize,
    augmented: bool,
}

impl AssembledSystem {
    /// Plain system from a given matrix; used for diagnostics on arbitrary matrices.
    pub fn from_matrix(matrix: Mat<f64>, rhs: Vec<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || rhs.len() != matrix.nrows() {
            return Err(RbfError::Domain("matrix/rhs shape mismatch".into()));
        }
        Ok(Self {
            n_centers: rhs.len(),
            matrix,
            rhs,
            augmented: false,
        })
    }

    pub fn size(&self) -> usize {
        self.rhs.len()
    }

    pub fn n_centers(&self) -> usize {
        self.n_centers
    }

    pub fn is_augmented(&self) -> bool {
        self.augmented
    }

    fn factor(&self) -> Result<LuFactor> {
        linalg::factorize(self.matrix.as_ref()).map_err(|e| match e {
            RbfError::SingularSystem { index, pivot, .. } if self.augmented => {
                RbfError::SingularSystem {
                    index,
                    pivot,
                    hint: Some(UNISOLVENCY_HINT),
                }
            }
            other => other,
        })
    }
}

/// Kernel (and polynomial) block matrix for the given nodes.
pub(crate) fn system_matrix(
    points: &PointSet,
    kernel: &KernelSpec,
    augmented: bool,
) -> Result<Mat<f64>> {
    let n = points.len();
    let s = points.dim();
    if augmented && n < s + 1 {
        return Err(RbfError::Domain(format!(
            "linear augmentation in {s}-D needs at least {} points, got {n}",
            s + 1
        )));
    }
    let size = if augmented { n + s + 1 } else { n };
    let mut m = Mat::<f64>::zeros(size, size);
    for j in 0..n {
        let xj = points.point(j);
        m[(j, j)] = kernel.phi(0.0);
        for k in j + 1..n {
            let r = euclidean(xj, points.point(k));
            if r == 0.0 {
                return Err(RbfError::DegenerateInput {
                    first: j,
                    second: k,
                    separation: 0.0,
                });
            }
            let v = kernel.phi(r);
            m[(j, k)] = v;
            m[(k, j)] = v;
        }
    }
    if augmented {
        for j in 0..n {
            m[(j, n)] = 1.0;
            m[(n, j)] = 1.0;
            for (d, &x) in points.point(j).iter().enumerate() {
                m[(j, n + 1 + d)] = x;
                m[(n + 1 + d, j)] = x;
            }
        }
    }
    Ok(m)
}

/// Build the interpolation system for sampled points.
pub fn assemble(
    points: &PointSet,
    kernel: &KernelSpec,
    augmented: bool,
) -> Result<AssembledSystem> {
    let values = points
        .values()
        .ok_or_else(|| RbfError::Domain("points carry no sampled values".into()))?;
    let matrix = system_matrix(points, kernel, augmented)?;
    let mut rhs = values.to_vec();
    if augmented {
        rhs.resize(matrix.nrows(), 0.0);
    }
    Ok(AssembledSystem {
        matrix,
        rhs,
        n_centers: points.len(),
        augmented,
    })
}

/// A fitted interpolant bound to its centers and kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationModel {
    centers: PointSet,
    kernel: KernelSpec,
    coeffs: Vec<f64>,
    poly_coeffs: Option<Vec<f64>>,
    condition_estimate: f64,
}

/// Fit an interpolant through `points`.
pub fn fit(points: &PointSet, kernel: &KernelSpec, augmented: bool) -> Result<InterpolationModel> {
    let system = assemble(points, kernel, augmented)?;
    let lu = system.factor()?;
    let solution = lu.solve(&system.rhs);
    if let Some(i) = solution.iter().position(|v| !v.is_finite()) {
        return Err(RbfError::NumericalBreakdown(format!(
            "solution component {i} is not finite"
        )));
    }
    let n = points.len();
    let (coeffs, poly_coeffs) = if augmented {
        (solution[..n].to_vec(), Some(solution[n..].to_vec()))
    } else {
        (solution, None)
    };
    Ok(InterpolationModel {
        centers: points.clone(),
        kernel: *kernel,
        coeffs,
        poly_coeffs,
        condition_estimate: lu.condition_estimate(),
    })
}

impl InterpolationModel {
    pub fn centers(&self) -> &PointSet {
        &self.centers
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn poly_coeffs(&self) -> Option<&[f64]> {
        self.poly_coeffs.as_deref()
    }

    pub fn is_augmented(&self) -> bool {
        self.poly_coeffs.is_some()
    }

    /// 1-norm condition estimate of the solved system.
    pub fn condition_estimate(&self) -> f64 {
        self.condition_estimate
    }

    /// `F(x)` at one point; `x` must have the centers' dimension.
    #[inline]
    pub fn value_at(&self, x: &[f64]) -> f64 {
        let mut f: f64 = self
            .centers
            .points()
            .zip(&self.coeffs)
            .map(|(c, w)| w * self.kernel.phi(euclidean(x, c)))
            .sum();
        if let Some(d) = &self.poly_coeffs {
            f += d[0] + d[1..].iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
        f
    }

    /// Side-condition residual `max |P^T c|` (zero for plain models).
    pub fn side_condition_residual(&self) -> f64 {
        if !self.is_augmented() {
            return 0.0;
        }
        let s = self.centers.dim();
        let mut sums = vec![0.0f64; s + 1];
        for (x, c) in self.centers.points().zip(&self.coeffs) {
            sums[0] += c;
            for d in 0..s {
                sums[d + 1] += c * x[d];
            }
        }
        sums.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Max-norm residual at the data sites.
    pub fn data_residual(&self) -> f64 {
        let values = self.centers.values().unwrap_or(&[]);
        self.centers
            .points()
            .zip(values)
            .map(|(x, y)| (self.value_at(x) - y).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_text(&self) -> Result<String> {
        let mut centers = Vec::new();
        self.centers.write_csv(&mut centers)?;
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            dim: self.centers.dim(),
            augmented: self.is_augmented(),
            condition_estimate: self.condition_estimate,
            coeffs: self.coeffs.clone(),
            poly_coeffs: self.poly_coeffs.clone(),
            centers: String::from_utf8(centers).expect("csv output is utf-8"),
            kernel: self.kernel,
        };
        toml::to_string(&file).map_err(|e| RbfError::Config(format!("model serialization: {e}")))
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let file: ModelFile = toml::from_str(text).map_err(|e| RbfError::Parse {
            line: e
                .span()
                .map_or(0, |s| text[..s.start].lines().count().max(1)),
            message: e.message().to_string(),
        })?;
        if file.format != MODEL_FORMAT {
            return Err(RbfError::Parse {
                line: 1,
                message: format!("unsupported model format '{}'", file.format),
            });
        }
        let centers = PointSet::read_csv(file.centers.as_bytes())?;
        if centers.dim() != file.dim || file.coeffs.len() != centers.len() {
            return Err(RbfError::Parse {
                line: 0,
                message: "model centers and coefficients disagree in shape".into(),
            });
        }
        if file.augmented != file.poly_coeffs.is_some()
            || file
                .poly_coeffs
                .as_ref()
                .is_some_and(|d| d.len() != file.dim + 1)
        {
            return Err(RbfError::Parse {
                line: 0,
                message: "polynomial tail inconsistent with the augmentation flag".into(),
            });
        }
        Ok(Self {
            centers,
            kernel: file.kernel,
            coeffs: file.coeffs,
            poly_coeffs: file.poly_coeffs,
            condition_estimate: file.condition_estimate,
        })
    }

    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_text()?.as_bytes())?;
        Ok(())
    }
}

const MODEL_FORMAT: &str = "hybrbf-model-1";

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    dim: usize,
    augmented: bool,
    condition_estimate: f64,
    coeffs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    poly_coeffs: Option<Vec<f64>>,
    centers: String,
    kernel: KernelSpec,
}

/// Evaluate the interpolant at every grid point, in order.
pub fn evaluate(model: &InterpolationModel, grid: &EvaluationGrid) -> Result<Vec<f64>> {
    if grid.dim() != model.centers.dim() {
        return Err(RbfError::Domain(format!(
            "grid is {}-D but the model is {}-D",
            grid.dim(),
            model.centers.dim()
        )));
    }
    let pts: Vec<&[f64]> = grid.points().collect();
    Ok(pts.par_iter().map(|x| model.value_at(x)).collect())
}

/// Eigenvalue spectrum and derived conditioning of a symmetric system.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    pub eigenvalues: Vec<f64>,
    pub condition_number: f64,
    pub negative_count: usize,
}

pub fn spectral_report(system: &AssembledSystem) -> Result<SpectralReport> {
    let eigenvalues = linalg::symmetric_eigenvalues(system.matrix.as_ref())?;
    let (min_abs, max_abs) = eigenvalues
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| {
            (lo.min(v.abs()), hi.max(v.abs()))
        });
    let condition_number = if eigenvalues.is_empty() {
        1.0
    } else if min_abs == 0.0 {
        f64::INFINITY
    } else {
        max_abs / min_abs
    };
    let t = 1e-12 * max_abs;
    let negative_count = eigenvalues.iter().filter(|&&v| v < -t).count();
    Ok(SpectralReport {
        eigenvalues,
        condition_number,
        negative_count,
    })
}

/// Diagonal of `A^-1` for a plain system, from one factorization.
pub fn inverse_diagonal(system: &AssembledSystem) -> Result<Vec<f64>> {
    if system.augmented {
        return Err(RbfError::Domain(
            "inverse diagonal is defined for plain systems only".into(),
        ));
    }
    Ok(system.factor()?.inverse_diagonal())
}

/// Full-data coefficients together with the inverse diagonal, sharing one factorization.
pub(crate) fn coefficients_and_inverse_diagonal(
    system: &AssembledSystem,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let lu = system.factor()?;
    Ok((lu.solve(&system.rhs), lu.inverse_diagonal()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_tensor_grid;
    use crate::kernel::HybridParams;
    use approx::assert_relative_eq;

    const E1: f64 = 0.367_879_441_171_442_32;

    fn two_point_1d() -> PointSet {
        PointSet::new(1, vec![0.0, 1.0], Some(vec![1.0, 0.0])).unwrap()
    }

    #[test]
    fn single_point_system() {
        let p = PointSet::new(2, vec![0.3, 0.4], Some(vec![5.0])).unwrap();
        let g = KernelSpec::gaussian(2.0).unwrap();
        let sys = assemble(&p, &g, false).unwrap();
        assert_eq!(sys.matrix[(0, 0)], 1.0);
        assert_eq!(sys.rhs, vec![5.0]);
        let m = fit(&p, &g, false).unwrap();
        assert_eq!(m.coeffs(), &[5.0]);
        let grid = p.to_grid();
        assert_eq!(evaluate(&m, &grid).unwrap(), vec![5.0]);
    }

    #[test]
    fn two_point_gaussian_solve() {
        let g = KernelSpec::gaussian(1.0).unwrap();
        let sys = assemble(&two_point_1d(), &g, false).unwrap();
        assert_eq!(sys.matrix[(0, 1)], E1);
        assert_eq!(sys.matrix[(1, 0)], E1);
        let m = fit(&two_point_1d(), &g, false).unwrap();
        assert_relative_eq!(m.coeffs()[0], 1.156_517_642_749_665_7, max_relative = 1e-14);
        assert_relative_eq!(
            m.coeffs()[1],
            -0.425_459_064_119_660_8,
            max_relative = 1e-14
        );

        let inv = inverse_diagonal(&sys).unwrap();
        for v in inv {
            assert_relative_eq!(v, 1.156_517_642_749_665_7, max_relative = 1e-14);
        }
    }

    #[test]
    fn augmented_block_structure() {
        let p = PointSet::from_points(
            &[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]],
            Some(vec![1.0, 2.0, 3.0]),
        )
        .unwrap();
        let k = KernelSpec::hybrid(HybridParams::new(1.0, 0.5, 0.5).unwrap());
        let sys = assemble(&p, &k, true).unwrap();
        assert_eq!(sys.size(), 6);
        for i in 3..6 {
            for j in 3..6 {
                assert_eq!(sys.matrix[(i, j)], 0.0);
            }
        }
        assert_eq!(sys.rhs, vec![1.0, 2.0, 3.0, 0.0, 0.0, 0.0]);
        assert_eq!(sys.matrix[(1, 3)], 1.0);
        assert_eq!(sys.matrix[(1, 4)], 1.0);
        assert_eq!(sys.matrix[(1, 5)], 0.0);
        assert_eq!(sys.matrix[(5, 2)], 1.0);
    }

    #[test]
    fn duplicates_are_degenerate() {
        let p = PointSet::new(1, vec![0.0, 1.0, 0.0], Some(vec![1.0, 2.0, 3.0])).unwrap();
        let g = KernelSpec::gaussian(1.0).unwrap();
        assert!(matches!(
            fit(&p, &g, false),
            Err(RbfError::DegenerateInput {
                first: 0,
                second: 2,
                ..
            })
        ));
    }

    #[test]
    fn collinear_augmented_fit_is_singular_with_hint() {
        let p = PointSet::from_points(
            &[
                vec![0.0, 0.0],
                vec![0.5, 0.5],
                vec![1.0, 1.0],
                vec![0.25, 0.25],
            ],
            Some(vec![0.0, 1.0, 2.0, 3.0]),
        )
        .unwrap();
        let err = fit(&p, &KernelSpec::cubic(), true).unwrap_err();
        match err {
            RbfError::SingularSystem { hint, .. } => assert!(hint.is_some()),
            other => panic!("expected singular system, got {other:?}"),
        }
    }

    #[test]
    fn missing_values_rejected() {
        let p = PointSet::new(1, vec![0.0, 1.0], None).unwrap();
        assert!(assemble(&p, &KernelSpec::cubic(), false).is_err());
        let p = PointSet::new(2, vec![0.0, 1.0, 2.0, 3.0], Some(vec![0.0, 0.0])).unwrap();
        assert!(assemble(&p, &KernelSpec::cubic(), true).is_err());
    }

    #[test]
    fn evaluate_rejects_dimension_mismatch() {
        let m = fit(&two_point_1d(), &KernelSpec::gaussian(1.0).unwrap(), false).unwrap();
        let grid = EvaluationGrid::new(2, vec![0.0, 0.0]).unwrap();
        assert!(evaluate(&m, &grid).is_err());
    }

    #[test]
    fn identity_spectrum() {
        let sys = AssembledSystem::from_matrix(Mat::<f64>::identity(5, 5), vec![0.0; 5]).unwrap();
        let r = spectral_report(&sys).unwrap();
        assert_eq!(r.eigenvalues, vec![1.0; 5]);
        assert_eq!(r.condition_number, 1.0);
        assert_eq!(r.negative_count, 0);
        assert_eq!(inverse_diagonal(&sys).unwrap(), vec![1.0; 5]);

        let d = Mat::from_fn(2, 2, |i, j| if i == j { [2.0, 4.0][i] } else { 0.0 });
        let sys = AssembledSystem::from_matrix(d, vec![0.0; 2]).unwrap();
        assert_eq!(inverse_diagonal(&sys).unwrap(), vec![0.5, 0.25]);
    }

    #[test]
    fn augmented_spectrum_has_three_negatives_in_2d() {
        let p = crate::geometry::make_halton_set(10, 2)
            .unwrap()
            .sample(|x| x[0]);
        let g = KernelSpec::gaussian(2.0).unwrap();
        let r = spectral_report(&assemble(&p, &g, true).unwrap()).unwrap();
        assert_eq!(r.eigenvalues.len(), 13);
        assert_eq!(r.negative_count, 3);
        assert!(r.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn patch_test_on_small_grid() {
        let p = make_tensor_grid(9, 2, 0.0, 1.0)
            .unwrap()
            .sample(|x| 0.5 * (x[0] + x[1]));
        let k = KernelSpec::hybrid(HybridParams::new(1.0, 0.8, 1e-7).unwrap());
        let m = fit(&p, &k, true).unwrap();
        let grid = EvaluationGrid::tensor(13, 2, 0.0, 1.0).unwrap();
        for (x, f) in grid.points().zip(evaluate(&m, &grid).unwrap()) {
            assert!((f - 0.5 * (x[0] + x[1])).abs() < 1e-10);
        }
        assert!(
            m.side_condition_residual()
                <= 1e-8 * m.coeffs().iter().fold(1.0f64, |a, c| a.max(c.abs()))
        );
    }

    #[test]
    fn model_text_roundtrip_is_bit_exact() {
        let p = crate::geometry::make_halton_set(12, 2)
            .unwrap()
            .sample(|x| (3.0 * x[0]).sin() + x[1]);
        let k = KernelSpec::hybrid(HybridParams::new(3.3, 0.4, 0.01).unwrap());
        for aug in [false, true] {
            let m = fit(&p, &k, aug).unwrap();
            let text = m.to_text().unwrap();
            let back = InterpolationModel::from_text(&text).unwrap();
            assert_eq!(back, m);
            for (a, b) in back.coeffs().iter().zip(m.coeffs()) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
        assert!(InterpolationModel::from_text("format = \"other\"").is_err());
    }
}
