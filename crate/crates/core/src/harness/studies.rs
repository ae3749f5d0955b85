use std::time::{Duration, Instant};

use crate::error::{RbfError, Result};
use crate::geometry::{make_tensor_grid, EvaluationGrid, PointSet};
use crate::interp::{assemble, evaluate, fit, spectral_report, AssembledSystem};
use crate::kernel::{HybridParams, KernelSpec};
use crate::pso::{optimize_kernel, PsoConfig, SearchFamily};
use crate::selection::{
    loocv_cost_brute, loocv_cost_rippa, rms_error, rms_of_residuals, ObjectiveKind, ObjectiveSpec,
};
use crate::Mat;

use super::functions::{
    fault_surface_point, franke_point, linear_half_sum, synthetic_fault_surface,
};
use super::report::{CellRecord, ExperimentReport, SweepRecord};
use super::{side_of, ExperimentKind, ExperimentSpec, KernelVariant, FAULT_DOMAIN};

/// Timings below this are treated as unresolved by the clock.
const CLOCK_RESOLUTION: Duration = Duration::from_micros(1);

/// Dispatch on `spec.kind`.
pub fn run_study(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    match spec.kind {
        ExperimentKind::LinearReproduction => linear_reproduction_study(spec),
        ExperimentKind::FrankeConvergence => franke_convergence_study(spec),
        ExperimentKind::Spectra => spectra_study(spec),
        ExperimentKind::ObjectiveComparison => objective_comparison_study(spec),
        ExperimentKind::Scaling => scaling_study(spec),
        ExperimentKind::Fault => fault_pipeline_study(spec),
    }
}

fn expect_kind(spec: &ExperimentSpec, kind: ExperimentKind) -> Result<()> {
    if spec.kind != kind {
        return Err(RbfError::Config(format!(
            "spec is for the {} study, not {}",
            spec.kind, kind
        )));
    }
    spec.validate()
}

fn truth_fn(kind: ExperimentKind) -> fn(&[f64]) -> f64 {
    match kind {
        ExperimentKind::LinearReproduction => linear_half_sum,
        ExperimentKind::Fault => fault_surface_point,
        _ => franke_point,
    }
}

/// Data set of one cell: a tensor grid on the unit square, or the fault samples.
fn cell_data(spec: &ExperimentSpec, n: usize) -> Result<PointSet> {
    if spec.kind == ExperimentKind::Fault {
        return synthetic_fault_surface(n, spec.pso.seed);
    }
    let k = side_of(n)
        .ok_or_else(|| RbfError::Config(format!("node count {n} is not a perfect square")))?;
    Ok(make_tensor_grid(k, 2, 0.0, 1.0)?.sample(truth_fn(spec.kind)))
}

fn unit_grid(spec: &ExperimentSpec) -> Result<EvaluationGrid> {
    EvaluationGrid::tensor(spec.eval_grid_n, 2, 0.0, 1.0)
}

/// Evaluation context shared by the cells of one study.
struct Context<'a> {
    spec: &'a ExperimentSpec,
    grid: EvaluationGrid,
    truth: Vec<f64>,
    keep_spectrum: bool,
    keep_trace: bool,
}

impl<'a> Context<'a> {
    fn new(spec: &'a ExperimentSpec) -> Result<Self> {
        let grid = unit_grid(spec)?;
        let truth = grid.map(truth_fn(spec.kind));
        Ok(Self {
            spec,
            grid,
            truth,
            keep_spectrum: false,
            keep_trace: true,
        })
    }

    fn objective(&self, kind: ObjectiveKind, augmented: bool) -> Result<ObjectiveSpec> {
        match kind {
            ObjectiveKind::Rms => {
                ObjectiveSpec::rms(self.grid.clone(), self.truth.clone(), augmented)
            }
            ObjectiveKind::Loocv => Ok(ObjectiveSpec::loocv(augmented)),
        }
    }

    /// Optimize (where the variant has parameters), fit, and measure one cell.
    fn run_cell(&self, n: usize, variant: KernelVariant, objective: ObjectiveKind) -> CellRecord {
        let start = Instant::now();
        let mut cell = CellRecord {
            n,
            variant: variant.name().to_string(),
            objective: Some(objective),
            augmented: variant.augmented(),
            ..CellRecord::default()
        };
        if let Err(e) = self.fill_cell(&mut cell, variant, objective) {
            cell.failure = Some(e.to_string());
        }
        cell.wall_time_s = Some(start.elapsed().as_secs_f64());
        cell
    }

    fn fill_cell(
        &self,
        cell: &mut CellRecord,
        variant: KernelVariant,
        objective: ObjectiveKind,
    ) -> Result<()> {
        let points = cell_data(self.spec, cell.n)?;
        let kernel = match variant {
            KernelVariant::Cubic => {
                cell.objective = None;
                KernelSpec::cubic()
            }
            KernelVariant::Gaussian => {
                let config = PsoConfig {
                    bounds: vec![self.spec.pso.bounds[0]],
                    ..self.spec.pso.clone()
                };
                let obj = self.objective(objective, false)?;
                let (kernel, outcome) =
                    optimize_kernel(&obj, &points, SearchFamily::Gaussian, &config)?;
                cell.trace = self.keep_trace.then_some(outcome.trace);
                kernel
            }
            KernelVariant::Hybrid | KernelVariant::HybridPoly => {
                let obj = self.objective(objective, cell.augmented)?;
                let (kernel, outcome) =
                    optimize_kernel(&obj, &points, SearchFamily::Hybrid, &self.spec.pso)?;
                cell.trace = self.keep_trace.then_some(outcome.trace);
                kernel
            }
        };
        cell.kernel = Some(kernel);
        self.measure(cell, &points, &kernel)
    }

    /// Spectrum first, so a system too singular to fit still reports its eigenvalues.
    fn measure(&self, cell: &mut CellRecord, points: &PointSet, kernel: &KernelSpec) -> Result<()> {
        let report = spectral_report(&assemble(points, kernel, cell.augmented)?)?;
        cell.condition_number = Some(report.condition_number);
        cell.negative_count = Some(report.negative_count);
        if self.keep_spectrum {
            cell.spectrum = Some(report.eigenvalues);
        }
        let model = fit(points, kernel, cell.augmented)?;
        cell.rms = Some(rms_error(&model, &self.grid, &self.truth)?);
        cell.loocv = if !cell.augmented {
            loocv_cost_rippa(points, kernel).ok().map(|c| c.value)
        } else if cell.n <= self.spec.brute_loocv_max_n {
            loocv_cost_brute(points, kernel, true).ok().map(|c| c.value)
        } else {
            None
        };
        Ok(())
    }

    /// Fixed-kernel cell (no optimization).
    fn fixed_cell(
        &self,
        n: usize,
        name: &str,
        kernel: KernelSpec,
        augmented: bool,
        note: &str,
    ) -> CellRecord {
        let start = Instant::now();
        let mut cell = CellRecord {
            n,
            variant: name.to_string(),
            kernel: Some(kernel),
            augmented,
            note: Some(note.to_string()),
            ..CellRecord::default()
        };
        let outcome = cell_data(self.spec, n).and_then(|p| self.measure(&mut cell, &p, &kernel));
        if let Err(e) = outcome {
            cell.failure = Some(e.to_string());
        }
        cell.wall_time_s = Some(start.elapsed().as_secs_f64());
        cell
    }
}

/// Optimized RMS of every variant on linear data `(x + y) / 2`.
pub fn linear_reproduction_study(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    expect_kind(spec, ExperimentKind::LinearReproduction)?;
    let ctx = Context::new(spec)?;
    let mut report = ExperimentReport::new(spec.clone());
    for &n in &spec.node_counts {
        for &variant in &spec.variants {
            report.cells.push(ctx.run_cell(n, variant, spec.objective));
        }
    }
    report
        .notes
        .push("a failed (singular) fit counts as no reproduction".to_string());
    Ok(report)
}

/// Optimized Franke RMS per N, plus the fixed-parameter epsilon sweep.
pub fn franke_convergence_study(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    expect_kind(spec, ExperimentKind::FrankeConvergence)?;
    let ctx = Context::new(spec)?;
    let mut report = ExperimentReport::new(spec.clone());
    for &n in &spec.node_counts {
        for &variant in &spec.variants {
            report.cells.push(ctx.run_cell(n, variant, spec.objective));
        }
    }
    if let Some(sweep) = &spec.sweep {
        let n = sweep
            .n
            .unwrap_or_else(|| *spec.node_counts.iter().max().expect("validated"));
        let points = cell_data(spec, n)?;
        let steps = sweep.points.max(2);
        let ratio = (sweep.epsilon_max / sweep.epsilon_min).ln();
        for i in 0..steps {
            let epsilon = sweep.epsilon_min * (ratio * i as f64 / (steps - 1) as f64).exp();
            let mut rec = SweepRecord {
                n,
                variant: KernelVariant::Hybrid.name().to_string(),
                epsilon,
                rms: None,
                condition_estimate: None,
                failure: None,
            };
            let outcome = HybridParams::new(epsilon, sweep.alpha, sweep.beta).and_then(|p| {
                let model = fit(&points, &KernelSpec::hybrid(p), false)?;
                rec.condition_estimate = Some(model.condition_estimate());
                rms_error(&model, &ctx.grid, &ctx.truth)
            });
            match outcome {
                Ok(r) => rec.rms = Some(r),
                Err(e) => rec.failure = Some(e.to_string()),
            }
            report.sweeps.push(rec);
        }
    }
    if spec.node_counts.contains(&625) {
        match conditioning_relief(625, 1.0, 1.0, 1e-6) {
            Ok(r) => report.notes.push(r.summary()),
            Err(e) => report
                .notes
                .push(format!("conditioning relief at N=625 failed: {e}")),
        }
        let cubic = ctx.fixed_cell(
            625,
            "cubic",
            KernelSpec::cubic(),
            false,
            "fixed-parameter conditioning reference",
        );
        let gauss = KernelSpec::gaussian(5.5)?;
        let gauss = ctx.fixed_cell(
            625,
            "gaussian",
            gauss,
            false,
            "fixed-parameter conditioning reference, epsilon=5.5",
        );
        report.cells.push(cubic);
        report.cells.push(gauss);
    }
    Ok(report)
}

/// Sorted eigenvalue spectra of plain and augmented systems.
///
/// Hybrid cells use parameters optimized as in the convergence study. Each N
/// also gets a fixed Gaussian reference at epsilon=2, and the report carries
/// an identity-matrix sanity cell.
pub fn spectra_study(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    expect_kind(spec, ExperimentKind::Spectra)?;
    let mut ctx = Context::new(spec)?;
    ctx.keep_spectrum = true;
    let mut report = ExperimentReport::new(spec.clone());
    let gaussian_ref = KernelSpec::gaussian(2.0)?;
    for &n in &spec.node_counts {
        for &variant in &spec.variants {
            report.cells.push(ctx.run_cell(n, variant, spec.objective));
        }
        report.cells.push(ctx.fixed_cell(
            n,
            "gaussian-ref",
            gaussian_ref,
            false,
            "fixed epsilon=2 reference",
        ));
    }
    report.cells.push(identity_cell(4)?);
    Ok(report)
}

fn identity_cell(n: usize) -> Result<CellRecord> {
    let system = AssembledSystem::from_matrix(Mat::identity(n, n), vec![0.0; n])?;
    let r = spectral_report(&system)?;
    Ok(CellRecord {
        n,
        variant: "identity".to_string(),
        condition_number: Some(r.condition_number),
        negative_count: Some(r.negative_count),
        spectrum: Some(r.eigenvalues),
        note: Some("sanity check".to_string()),
        ..CellRecord::default()
    })
}

/// Every variant optimized under both objectives with the same seed.
pub fn objective_comparison_study(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    expect_kind(spec, ExperimentKind::ObjectiveComparison)?;
    let ctx = Context::new(spec)?;
    let mut report = ExperimentReport::new(spec.clone());
    for &n in &spec.node_counts {
        for &variant in &spec.variants {
            for objective in [ObjectiveKind::Rms, ObjectiveKind::Loocv] {
                report.cells.push(ctx.run_cell(n, variant, objective));
            }
        }
    }
    Ok(report)
}

/// Wall time of one fit per N (minimum over repeats, after a warm-up fit).
///
/// Cells run serially. Times below the clock resolution are flagged and left
/// out of the log-log slope between the smallest and largest N.
pub fn scaling_study(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    expect_kind(spec, ExperimentKind::Scaling)?;
    let augmented = spec.variants.contains(&KernelVariant::HybridPoly);
    let kernel = spec.timing_kernel;
    let variant = if augmented { "hybrid+poly" } else { "hybrid" };
    let mut report = ExperimentReport::new(spec.clone());
    let mut counts = spec.node_counts.clone();
    counts.sort_unstable();
    counts.dedup();

    let warm = cell_data(spec, counts[0])?;
    let _ = fit(&warm, &kernel, augmented);

    for &n in &counts {
        let mut cell = CellRecord {
            n,
            variant: variant.to_string(),
            kernel: Some(kernel),
            augmented,
            ..CellRecord::default()
        };
        let points = cell_data(spec, n)?;
        let mut best = Duration::MAX;
        for _ in 0..spec.timing_repeats {
            let start = Instant::now();
            let outcome = fit(&points, &kernel, augmented);
            let elapsed = start.elapsed();
            match outcome {
                Ok(model) => {
                    best = best.min(elapsed);
                    cell.condition_number = Some(model.condition_estimate());
                }
                Err(e) => {
                    cell.failure = Some(e.to_string());
                    break;
                }
            }
        }
        if cell.failure.is_none() {
            cell.wall_time_s = Some(best.as_secs_f64());
            cell.note = Some(format!(
                "min of {} fits; condition is the 1-norm estimate",
                spec.timing_repeats
            ));
            if best < CLOCK_RESOLUTION {
                cell.failure = Some("time below clock resolution".to_string());
            }
        }
        report.cells.push(cell);
    }

    let timed: Vec<(usize, f64)> = report
        .cells
        .iter()
        .filter(|c| c.is_ok())
        .filter_map(|c| c.wall_time_s.map(|t| (c.n, t)))
        .collect();
    if let (Some(&(lo, t_lo)), Some(&(hi, t_hi))) = (timed.first(), timed.last()) {
        if hi > lo {
            report.slope = Some((lo, hi, (t_hi / t_lo).ln() / (hi as f64 / lo as f64).ln()));
        }
    }

    if spec.time_optimize {
        let ctx = Context::new(spec)?;
        for &n in &counts {
            let mut cell = ctx.run_cell(n, KernelVariant::Hybrid, spec.objective);
            cell.variant = "hybrid-optimize".to_string();
            cell.note = Some(format!(
                "one optimization, {} evaluations",
                spec.pso.evaluation_budget()
            ));
            report.cells.push(cell);
        }
    }
    Ok(report)
}

/// Synthetic fault pipeline: LOOCV optimization on scattered samples, then
/// hybrid and Gaussian (same epsilon) reconstructions on the output grid.
pub fn fault_pipeline_study(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    expect_kind(spec, ExperimentKind::Fault)?;
    if spec.fault_output_n < 2 {
        return Err(RbfError::Config(
            "fault output grid needs at least 2 points per side".into(),
        ));
    }
    let mut report = ExperimentReport::new(spec.clone());
    let points = synthetic_fault_surface(spec.fault_points, spec.pso.seed)?;
    let n = points.len();
    let output = EvaluationGrid::tensor(spec.fault_output_n, 2, 0.0, FAULT_DOMAIN)?;
    let truth = output.map(fault_surface_point);

    let start = Instant::now();
    let objective = ObjectiveSpec::loocv(false);
    let optimized = optimize_kernel(&objective, &points, SearchFamily::Hybrid, &spec.pso);
    let (hybrid, trace) = match optimized {
        Ok((k, o)) => (k, o.trace),
        Err(e) => {
            report.cells.push(CellRecord {
                n,
                variant: "hybrid".to_string(),
                objective: Some(ObjectiveKind::Loocv),
                failure: Some(e.to_string()),
                ..CellRecord::default()
            });
            return Ok(report);
        }
    };
    let opt_time = start.elapsed().as_secs_f64();
    let gaussian = KernelSpec::gaussian(hybrid.params().epsilon())?;

    for (name, kernel) in [("hybrid", hybrid), ("gaussian", gaussian)] {
        let start = Instant::now();
        let mut cell = CellRecord {
            n,
            variant: name.to_string(),
            objective: Some(ObjectiveKind::Loocv),
            kernel: Some(kernel),
            ..CellRecord::default()
        };
        let outcome = (|| -> Result<()> {
            let model = fit(&points, &kernel, false)?;
            let values = evaluate(&model, &output)?;
            cell.rms = Some(rms_of_residuals(&values, &truth)?);
            cell.loocv = loocv_cost_rippa(&points, &kernel).ok().map(|c| c.value);
            let r = spectral_report(&assemble(&points, &kernel, false)?)?;
            cell.condition_number = Some(r.condition_number);
            cell.negative_count = Some(r.negative_count);
            cell.note = Some(format!(
                "{} outputs; rms against the analytic surface",
                values.len()
            ));
            Ok(())
        })();
        if let Err(e) = outcome {
            cell.failure = Some(e.to_string());
        }
        let mut t = start.elapsed().as_secs_f64();
        if name == "hybrid" {
            t += opt_time;
            cell.trace = Some(trace.clone());
        }
        cell.wall_time_s = Some(t);
        report.cells.push(cell);
    }
    report
        .notes
        .push("gaussian cell uses the epsilon optimized for the hybrid kernel".to_string());
    Ok(report)
}

/// Re-fit one reported cell from its stored kernel and return the RMS.
pub fn rerun_cell_rms(spec: &ExperimentSpec, cell: &CellRecord) -> Result<f64> {
    let kernel = cell
        .kernel
        .ok_or_else(|| RbfError::Config("cell has no kernel to re-run".into()))?;
    let points = cell_data(spec, cell.n)?;
    let model = fit(&points, &kernel, cell.augmented)?;
    if spec.kind == ExperimentKind::Fault {
        let output = EvaluationGrid::tensor(spec.fault_output_n, 2, 0.0, FAULT_DOMAIN)?;
        let values = evaluate(&model, &output)?;
        return rms_of_residuals(&values, &output.map(fault_surface_point));
    }
    let grid = unit_grid(spec)?;
    rms_error(&model, &grid, &grid.map(truth_fn(spec.kind)))
}

/// Eigenvalue condition numbers of pure Gaussian and hybrid systems on a
/// tensor grid with `n` nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditioningRelief {
    pub n: usize,
    pub epsilon: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gaussian_condition: f64,
    pub hybrid_condition: f64,
}

impl ConditioningRelief {
    /// `cond(gaussian) / cond(hybrid)`.
    pub fn factor(&self) -> f64 {
        self.gaussian_condition / self.hybrid_condition
    }

    pub fn summary(&self) -> String {
        format!(
            "conditioning relief at N={}, epsilon={}, alpha={}: cond(gaussian)={:.3e}, cond(hybrid, beta={:e})={:.3e}, factor {:.3e}",
            self.n,
            self.epsilon,
            self.alpha,
            self.gaussian_condition,
            self.beta,
            self.hybrid_condition,
            self.factor()
        )
    }
}

pub fn conditioning_relief(
    n: usize,
    epsilon: f64,
    alpha: f64,
    beta: f64,
) -> Result<ConditioningRelief> {
    let k = side_of(n)
        .ok_or_else(|| RbfError::Config(format!("node count {n} is not a perfect square")))?;
    let points = make_tensor_grid(k, 2, 0.0, 1.0)?.sample(franke_point);
    let gaussian = KernelSpec::new(
        crate::kernel::KernelKind::Gaussian,
        HybridParams::new(epsilon, alpha, 0.0)?,
    );
    let hybrid = KernelSpec::hybrid(HybridParams::new(epsilon, alpha, beta)?);
    let cond = |kernel: &KernelSpec| -> Result<f64> {
        Ok(spectral_report(&assemble(&points, kernel, false)?)?.condition_number)
    };
    Ok(ConditioningRelief {
        n,
        epsilon,
        alpha,
        beta,
        gaussian_condition: cond(&gaussian)?,
        hybrid_condition: cond(&hybrid)?,
    })
}
