use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hybrbf::geometry::{min_separation, write_csv_rows, CsvTable};
use hybrbf::harness::{
    franke_point, linear_half_sum, run_study, synthetic_fault_surface, ExperimentKind,
    ExperimentSpec,
};
use hybrbf::pso::optimize_kernel;
use hybrbf::{
    evaluate, fit, make_halton_set, make_tensor_grid, validate_config, EvaluationGrid,
    InterpolationModel, KernelKind, ObjectiveKind, ObjectiveSpec, PointSet, SearchFamily,
};
use serde::Serialize;

use crate::config::{epsilon_bounds, usage, RunConfig};

fn read_points(path: &Path) -> Result<PointSet> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    PointSet::read_csv(file).with_context(|| format!("reading {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

pub fn fit_cmd(rc: &RunConfig, input: &Path, output: &Path) -> Result<()> {
    let kernel = rc.kernel_spec()?;
    let points = read_points(input)?;
    if points.values().is_none() {
        return Err(usage(format!("{} has no value column", input.display())));
    }
    let model = fit(&points, &kernel, rc.augment)?;
    let mut w = create(output)?;
    model.write_text(&mut w)?;
    w.flush()?;
    println!("kernel: {kernel}");
    println!("data residual (max-norm): {:e}", model.data_residual());
    println!("condition estimate: {:e}", model.condition_estimate());
    if model.is_augmented() {
        println!(
            "side-condition residual: {:e}",
            model.side_condition_residual()
        );
    }
    print_separation(&points);
    Ok(())
}

/// Coordinates are used as given; the spacing is reported so badly scaled data shows up.
fn print_separation(points: &PointSet) {
    if let Ok(h) = min_separation(points) {
        println!("minimum separation: {h:e}");
    }
}

pub fn eval_cmd(model: &Path, input: &Path, output: &Path) -> Result<()> {
    let text =
        fs::read_to_string(model).with_context(|| format!("cannot read {}", model.display()))?;
    let model = InterpolationModel::from_text(&text)
        .with_context(|| format!("reading {}", model.display()))?;
    let raw = fs::read(input).with_context(|| format!("cannot open {}", input.display()))?;
    let mut w = create(output)?;
    if raw.iter().all(u8::is_ascii_whitespace) {
        w.flush()?;
        return Ok(());
    }
    let table =
        CsvTable::read(raw.as_slice()).with_context(|| format!("reading {}", input.display()))?;
    let dim = model.centers().dim();
    if table.dim != dim {
        bail!("target points are {}-D, the model is {dim}-D", table.dim);
    }
    let grid = EvaluationGrid::new(dim, table.coords)?;
    let values = evaluate(&model, &grid)?;
    write_csv_rows(
        &mut w,
        dim,
        grid.points()
            .flatten()
            .copied()
            .collect::<Vec<_>>()
            .as_slice(),
        Some(&values),
    )?;
    w.flush()?;
    eprintln!("{} values written to {}", values.len(), output.display());
    Ok(())
}

/// Reference values for the rms objective.
fn reference(
    rc: &RunConfig,
    truth: Option<&str>,
    points: &PointSet,
) -> Result<(EvaluationGrid, Vec<f64>)> {
    let Some(truth) = truth.or(rc.truth.as_deref()) else {
        return Err(usage(
            "the rms objective needs --truth (franke, linear or a CSV file)",
        ));
    };
    let named: Option<fn(&[f64]) -> f64> = match truth {
        "franke" => Some(franke_point),
        "linear" => Some(linear_half_sum),
        _ => None,
    };
    match named {
        Some(f) => {
            if points.dim() != 2 {
                return Err(usage("named truth functions are two-dimensional"));
            }
            let (lo, hi) = points
                .coords()
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &c| {
                    (a.min(c), b.max(c))
                });
            let grid = EvaluationGrid::tensor(rc.grid_n(), 2, lo, hi)?;
            let values = grid.map(f);
            Ok((grid, values))
        }
        None => {
            let set = read_points(Path::new(truth))?;
            let values = set
                .values()
                .ok_or_else(|| usage(format!("{truth} has no value column")))?
                .to_vec();
            if set.dim() != points.dim() {
                return Err(usage(format!(
                    "{truth} is {}-D, the data is {}-D",
                    set.dim(),
                    points.dim()
                )));
            }
            Ok((set.to_grid(), values))
        }
    }
}

#[derive(Serialize)]
struct BestParams {
    kernel: KernelKind,
    epsilon: f64,
    alpha: f64,
    beta: f64,
    augmented: bool,
    objective: ObjectiveKind,
    best_cost: f64,
    seed: u64,
    swarm: usize,
    generations: usize,
    evaluations: usize,
}

fn trace_path(output: &Path) -> PathBuf {
    let stem = output
        .file_stem()
        .map_or("params".into(), |s| s.to_string_lossy().into_owned());
    output.with_file_name(format!("{stem}-trace.csv"))
}

pub fn optimize_cmd(
    rc: &RunConfig,
    input: &Path,
    output: &Path,
    trace: Option<&Path>,
    truth: Option<&str>,
) -> Result<()> {
    let mut config = rc.pso_config();
    let violations = validate_config(&config);
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(|v| format!("  {v}")).collect();
        return Err(usage(format!(
            "invalid PSO configuration:\n{}",
            list.join("\n")
        )));
    }
    let family = match rc.kernel {
        KernelKind::Hybrid => SearchFamily::Hybrid,
        KernelKind::Gaussian => SearchFamily::Gaussian,
        other => {
            return Err(usage(format!(
                "cannot optimize the {other} kernel (use hybrid or gaussian)"
            )))
        }
    };
    if family == SearchFamily::Gaussian && config.bounds.len() != 1 {
        config.bounds = epsilon_bounds(&config.bounds);
    }
    if config.bounds.len() != family.dims() {
        return Err(usage(format!(
            "{} search bounds given, the {} kernel needs {}",
            config.bounds.len(),
            rc.kernel,
            family.dims()
        )));
    }
    let points = read_points(input)?;
    if points.values().is_none() {
        return Err(usage(format!("{} has no value column", input.display())));
    }
    let objective = rc.objective.unwrap_or(ObjectiveKind::Loocv);
    let spec = match objective {
        ObjectiveKind::Loocv => ObjectiveSpec::loocv(rc.augment),
        ObjectiveKind::Rms => {
            let (grid, values) = reference(rc, truth, &points)?;
            ObjectiveSpec::rms(grid, values, rc.augment)?
        }
    };
    let (kernel, outcome) = optimize_kernel(&spec, &points, family, &config)?;
    let p = kernel.params();
    let best = BestParams {
        kernel: kernel.kind(),
        epsilon: p.epsilon(),
        alpha: p.alpha(),
        beta: p.beta(),
        augmented: rc.augment,
        objective,
        best_cost: outcome.best_value,
        seed: config.seed,
        swarm: config.swarm_size,
        generations: config.generations,
        evaluations: config.evaluation_budget(),
    };
    let mut w = create(output)?;
    w.write_all(toml::to_string(&best)?.as_bytes())?;
    w.flush()?;
    let trace = trace.map_or_else(|| trace_path(output), Path::to_path_buf);
    let mut tw = create(&trace)?;
    outcome.trace.write_csv(&mut tw, family.names())?;
    tw.flush()?;
    println!("kernel: {kernel}");
    println!("best {objective} cost: {:e}", outcome.best_value);
    println!("parameters written to {}", output.display());
    println!("trace written to {}", trace.display());
    print_separation(&points);
    Ok(())
}

/// Overlay `overrides` on the serialized `base` spec, key by key.
fn merge_tables(base: &mut toml::Table, overrides: &toml::Table) {
    for (k, v) in overrides {
        match (base.get_mut(k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge_tables(b, o),
            _ => {
                base.insert(k.clone(), v.clone());
            }
        }
    }
}

pub struct BenchArgs<'a> {
    pub study: ExperimentKind,
    pub output: &'a Path,
    pub node_counts: Option<Vec<usize>>,
    pub full: bool,
}

pub fn bench_cmd(rc: &RunConfig, args: &BenchArgs<'_>) -> Result<()> {
    let mut spec = if args.full {
        ExperimentSpec::full(args.study)
    } else {
        ExperimentSpec::desk(args.study)
    };
    if let Some(overrides) = &rc.experiment {
        let mut table = toml::Table::try_from(&spec)?;
        merge_tables(&mut table, overrides);
        spec = table
            .try_into()
            .map_err(|e| usage(format!("experiment settings: {e}")))?;
        if spec.kind != args.study {
            return Err(usage(format!(
                "config describes the {} study, --study asks for {}",
                spec.kind, args.study
            )));
        }
    }
    if let Some(n) = &args.node_counts {
        spec.node_counts = n.clone();
    }
    rc.pso.apply(&mut spec.pso);
    if let Some(g) = rc.grid_n {
        spec.eval_grid_n = g;
    }
    if let Some(o) = rc.objective {
        spec.objective = o;
    }
    spec.validate().map_err(|e| usage(e.to_string()))?;

    let report = run_study(&spec)?;
    let files = report.write_to(args.output)?;
    print!("{}", report.text_table());
    for f in &files {
        println!("wrote {}", f.display());
    }
    let failed = report.cells.iter().filter(|c| !c.is_ok()).count();
    if failed > 0 {
        println!("{failed} cell(s) flagged with a failure cause");
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Layout {
    Grid,
    Halton,
    Fault,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum TruthFn {
    Franke,
    Linear,
    None,
}

pub fn generate_cmd(
    layout: Layout,
    n: usize,
    truth: TruthFn,
    seed: u64,
    output: &Path,
) -> Result<()> {
    let points = match layout {
        Layout::Grid => {
            let k = (n as f64).sqrt().round() as usize;
            if k < 2 || k * k != n {
                return Err(usage(format!(
                    "grid layout needs a perfect square >= 4, got {n}"
                )));
            }
            make_tensor_grid(k, 2, 0.0, 1.0)?
        }
        Layout::Halton => make_halton_set(n, 2)?,
        Layout::Fault => synthetic_fault_surface(n, seed)?,
    };
    let points = match (layout, truth) {
        (Layout::Fault, _) => points,
        (_, TruthFn::Franke) => points.sample(franke_point),
        (_, TruthFn::Linear) => points.sample(linear_half_sum),
        (_, TruthFn::None) => points,
    };
    let mut w = create(output)?;
    points.write_csv(&mut w)?;
    w.flush()?;
    eprintln!("{} points written to {}", points.len(), output.display());
    Ok(())
}
