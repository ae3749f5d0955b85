//! Global-best particle swarm optimization over a box.
//!
//! Each generation updates every particle with
//!
//! ```text
//! v <- w v + c1 r1 (pbest - x) + c2 r2 (gbest - x)
//! x <- x + v
//! ```
//!
//! followed by clamping to the box (the clamped velocity component is zeroed).
//! The swarm is stable for `0 < c1 + c2 < 4` and `(c1 + c2)/2 - 1 < w < 1`.
//!
//! Randomness: particle `p` draws from its own ChaCha8 stream, seeded with
//! `config.seed` and stream id `p`. Initial positions come first, then two
//! uniforms (`r1`, `r2`) per dimension per generation. Objective evaluations
//! within a generation may run in parallel; updates happen at the barrier in
//! particle order, so results never depend on scheduling.

use std::fmt;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{RbfError, Result};
use crate::geometry::PointSet;
use crate::kernel::{HybridParams, KernelKind, KernelSpec};
use crate::selection::{objective_value, ObjectiveSpec};

/// Closed interval `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub lower: f64,
    pub upper: f64,
}

impl Bound {
    pub const fn new(lower: f64, upper: f64) -> Self {
        Self { lower, upper }
    }

    fn clamp(&self, x: f64) -> (f64, bool) {
        if x < self.lower {
            (self.lower, true)
        } else if x > self.upper {
            (self.upper, true)
        } else {
            (x, false)
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// Default box for `(epsilon, alpha, beta)`.
pub const DEFAULT_HYBRID_BOUNDS: [Bound; 3] = [
    Bound::new(0.01, 20.0),
    Bound::new(0.0, 1.0),
    Bound::new(0.0, 1.0),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PsoConfig {
    pub swarm_size: usize,
    pub generations: usize,
    pub c1: f64,
    pub c2: f64,
    pub inertia_w: f64,
    pub bounds: Vec<Bound>,
    pub seed: u64,
    /// Keep every particle position in the trace.
    pub record_particles: bool,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            swarm_size: 20,
            generations: 5,
            c1: 1.49445,
            c2: 1.49445,
            inertia_w: 0.729,
            bounds: DEFAULT_HYBRID_BOUNDS.to_vec(),
            seed: 0,
            record_particles: false,
        }
    }
}

impl PsoConfig {
    /// Objective evaluations performed by [`pso_minimize`].
    pub fn evaluation_budget(&self) -> usize {
        self.swarm_size * (self.generations + 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigViolation {
    LearningFactorSum { sum: f64 },
    InertiaLower { w: f64, limit: f64 },
    InertiaUpper { w: f64 },
    EmptySwarm,
    NoGenerations,
    NoDimensions,
    Bound { dim: usize, lower: f64, upper: f64 },
    NonFinite(&'static str),
}

impl fmt::Display for ConfigViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::LearningFactorSum { sum } => {
                write!(
                    f,
                    "stability condition 0 < c1+c2 < 4 violated (c1+c2 = {sum})"
                )
            }
            Self::InertiaLower { w, limit } => write!(
                f,
                "stability condition (c1+c2)/2 - 1 < w violated (w = {w}, lower limit {limit})"
            ),
            Self::InertiaUpper { w } => {
                write!(f, "stability condition w < 1 violated (w = {w})")
            }
            Self::EmptySwarm => f.write_str("swarm_size must be positive"),
            Self::NoGenerations => f.write_str("generations must be positive"),
            Self::NoDimensions => f.write_str("search box has no dimensions"),
            Self::Bound { dim, lower, upper } => write!(
                f,
                "bound {dim} has lower {lower} > upper {upper} or is not finite"
            ),
            Self::NonFinite(name) => write!(f, "{name} is not finite"),
        }
    }
}

/// All violated constraints; an empty list means the configuration is usable.
pub fn validate_config(config: &PsoConfig) -> Vec<ConfigViolation> {
    let mut out = Vec::new();
    for (name, v) in [
        ("c1", config.c1),
        ("c2", config.c2),
        ("inertia_w", config.inertia_w),
    ] {
        if !v.is_finite() {
            out.push(ConfigViolation::NonFinite(name));
        }
    }
    let sum = config.c1 + config.c2;
    if !(0.0 < sum && sum < 4.0) {
        out.push(ConfigViolation::LearningFactorSum { sum });
    }
    let limit = sum / 2.0 - 1.0;
    if !(limit < config.inertia_w) {
        out.push(ConfigViolation::InertiaLower {
            w: config.inertia_w,
            limit,
        });
    }
    if !(config.inertia_w < 1.0) {
        out.push(ConfigViolation::InertiaUpper {
            w: config.inertia_w,
        });
    }
    if config.swarm_size == 0 {
        out.push(ConfigViolation::EmptySwarm);
    }
    if config.generations == 0 {
        out.push(ConfigViolation::NoGenerations);
    }
    if config.bounds.is_empty() {
        out.push(ConfigViolation::NoDimensions);
    }
    for (dim, b) in config.bounds.iter().enumerate() {
        if !(b.lower <= b.upper && b.lower.is_finite() && b.upper.is_finite()) {
            out.push(ConfigViolation::Bound {
                dim,
                lower: b.lower,
                upper: b.upper,
            });
        }
    }
    out
}

fn check_config(config: &PsoConfig) -> Result<()> {
    let violations = validate_config(config);
    if violations.is_empty() {
        return Ok(());
    }
    let msg: Vec<String> = violations.iter().map(ToString::to_string).collect();
    Err(RbfError::Config(msg.join("; ")))
}

/// Something PSO can minimize.
pub trait Objective: Sync {
    fn cost(&self, x: &[f64]) -> Result<f64>;
}

impl<F> Objective for F
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    fn cost(&self, x: &[f64]) -> Result<f64> {
        self(x)
    }
}

/// Evolving swarm population. Each row of the matrices is one particle.
#[derive(Debug, Clone)]
pub struct SwarmState {
    pub positions: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
    pub pbest_pos: Vec<Vec<f64>>,
    pub pbest_val: Vec<f64>,
    pub gbest_pos: Vec<f64>,
    pub gbest_val: f64,
    pub generation: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    pub generation: usize,
    pub gbest_val: f64,
    pub gbest_pos: Vec<f64>,
    /// `(position, cost)` of every particle, when recording is enabled.
    pub particles: Option<Vec<(Vec<f64>, f64)>>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OptimizationTrace {
    pub records: Vec<GenerationRecord>,
}

impl OptimizationTrace {
    pub fn is_monotone(&self) -> bool {
        self.records
            .windows(2)
            .all(|w| w[1].gbest_val <= w[0].gbest_val)
    }

    /// CSV with columns `generation,gbest_val,<names...>`.
    pub fn write_csv<W: Write>(&self, w: W, names: &[&str]) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["generation".to_string(), "gbest_val".to_string()];
        header.extend(names.iter().map(|s| s.to_string()));
        out.write_record(&header).map_err(csv_err)?;
        for r in &self.records {
            let mut row = vec![
                r.generation.to_string(),
                crate::geometry::fmt_f64(r.gbest_val),
            ];
            row.extend(r.gbest_pos.iter().map(|&v| crate::geometry::fmt_f64(v)));
            out.write_record(&row).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }

    /// CSV with one row per particle per generation (`generation,particle,cost,<names...>`).
    pub fn write_particles_csv<W: Write>(&self, w: W, names: &[&str]) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["generation".to_string(), "particle".into(), "cost".into()];
        header.extend(names.iter().map(|s| s.to_string()));
        out.write_record(&header).map_err(csv_err)?;
        for r in &self.records {
            for (p, (pos, cost)) in r.particles.iter().flatten().enumerate() {
                let mut row = vec![
                    r.generation.to_string(),
                    p.to_string(),
                    crate::geometry::fmt_f64(*cost),
                ];
                row.extend(pos.iter().map(|&v| crate::geometry::fmt_f64(v)));
                out.write_record(&row).map_err(csv_err)?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> RbfError {
    RbfError::Io(std::io::Error::other(e))
}

#[derive(Debug, Clone)]
pub struct PsoOutcome {
    pub best_position: Vec<f64>,
    pub best_value: f64,
    pub trace: OptimizationTrace,
    pub final_state: SwarmState,
}

fn evaluate_all(objective: &dyn Objective, positions: &[Vec<f64>]) -> Result<Vec<f64>> {
    let costs: Vec<Result<f64>> = positions.par_iter().map(|x| objective.cost(x)).collect();
    costs
        .into_iter()
        .map(|c| c.map(|v| if v.is_nan() { f64::INFINITY } else { v }))
        .collect()
}

/// Minimize `objective` over `config.bounds`.
pub fn pso_minimize(objective: &dyn Objective, config: &PsoConfig) -> Result<PsoOutcome> {
    check_config(config)?;
    let dims = config.bounds.len();
    let mut rngs: Vec<ChaCha8Rng> = (0..config.swarm_size)
        .map(|p| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(p as u64);
            rng
        })
        .collect();

    let positions: Vec<Vec<f64>> = rngs
        .iter_mut()
        .map(|rng| {
            config
                .bounds
                .iter()
                .map(|b| b.lower + (b.upper - b.lower) * rng.random::<f64>())
                .collect()
        })
        .collect();
    let costs = evaluate_all(objective, &positions)?;

    let mut state = SwarmState {
        velocities: vec![vec![0.0; dims]; config.swarm_size],
        pbest_pos: positions.clone(),
        pbest_val: costs.clone(),
        gbest_pos: positions[0].clone(),
        gbest_val: costs[0],
        positions,
        generation: 0,
    };
    for p in 1..config.swarm_size {
        if state.pbest_val[p] < state.gbest_val {
            state.gbest_val = state.pbest_val[p];
            state.gbest_pos = state.pbest_pos[p].clone();
        }
    }
    let mut trace = OptimizationTrace::default();
    trace
        .records
        .push(record(&state, &costs, config.record_particles));

    for generation in 1..=config.generations {
        for (p, rng) in rngs.iter_mut().enumerate() {
            let x = &mut state.positions[p];
            let v = &mut state.velocities[p];
            for d in 0..dims {
                let r1: f64 = rng.random();
                let r2: f64 = rng.random();
                v[d] = config.inertia_w * v[d]
                    + config.c1 * r1 * (state.pbest_pos[p][d] - x[d])
                    + config.c2 * r2 * (state.gbest_pos[d] - x[d]);
                let (clamped, hit) = config.bounds[d].clamp(x[d] + v[d]);
                x[d] = clamped;
                if hit {
                    v[d] = 0.0;
                }
            }
        }
        let costs = evaluate_all(objective, &state.positions)?;
        for (p, &c) in costs.iter().enumerate() {
            if c < state.pbest_val[p] {
                state.pbest_val[p] = c;
                state.pbest_pos[p] = state.positions[p].clone();
            }
        }
        for p in 0..config.swarm_size {
            if state.pbest_val[p] < state.gbest_val {
                state.gbest_val = state.pbest_val[p];
                state.gbest_pos = state.pbest_pos[p].clone();
            }
        }
        state.generation = generation;
        trace
            .records
            .push(record(&state, &costs, config.record_particles));
    }

    Ok(PsoOutcome {
        best_position: state.gbest_pos.clone(),
        best_value: state.gbest_val,
        trace,
        final_state: state,
    })
}

fn record(state: &SwarmState, costs: &[f64], keep: bool) -> GenerationRecord {
    GenerationRecord {
        generation: state.generation,
        gbest_val: state.gbest_val,
        gbest_pos: state.gbest_pos.clone(),
        particles: keep.then(|| {
            state
                .positions
                .iter()
                .cloned()
                .zip(costs.iter().copied())
                .collect()
        }),
    }
}

/// Which kernel family a search position describes.
///
/// `Hybrid` reads `(epsilon, alpha, beta)`; `Gaussian` reads `(epsilon)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchFamily {
    Hybrid,
    Gaussian,
}

impl SearchFamily {
    pub fn dims(self) -> usize {
        match self {
            Self::Hybrid => 3,
            Self::Gaussian => 1,
        }
    }

    pub fn names(self) -> &'static [&'static str] {
        match self {
            Self::Hybrid => &["epsilon", "alpha", "beta"],
            Self::Gaussian => &["epsilon"],
        }
    }

    pub fn kind(self) -> KernelKind {
        match self {
            Self::Hybrid => KernelKind::Hybrid,
            Self::Gaussian => KernelKind::Gaussian,
        }
    }

    pub fn kernel(self, x: &[f64]) -> Result<KernelSpec> {
        match self {
            Self::Hybrid => Ok(KernelSpec::hybrid(HybridParams::new(x[0], x[1], x[2])?)),
            Self::Gaussian => KernelSpec::gaussian(x[0]),
        }
    }
}

/// Kernel-parameter objective over a fixed data set.
pub struct KernelObjective<'a> {
    pub spec: &'a ObjectiveSpec,
    pub points: &'a PointSet,
    pub family: SearchFamily,
}

impl Objective for KernelObjective<'_> {
    fn cost(&self, x: &[f64]) -> Result<f64> {
        match self.family.kernel(x) {
            Ok(kernel) => objective_value(self.spec, self.points, &kernel),
            // the all-zero-weight corner of the box is not a kernel
            Err(RbfError::Config(_)) => Ok(crate::selection::SENTINEL_COST),
            Err(e) => Err(e),
        }
    }
}

/// Optimize the kernel parameters of `family` for `points` under `spec`.
///
/// `config.bounds` must have `family.dims()` entries.
pub fn optimize_kernel(
    spec: &ObjectiveSpec,
    points: &PointSet,
    family: SearchFamily,
    config: &PsoConfig,
) -> Result<(KernelSpec, PsoOutcome)> {
    if config.bounds.len() != family.dims() {
        return Err(RbfError::Config(format!(
            "{} search bounds given, the {:?} family needs {}",
            config.bounds.len(),
            family,
            family.dims()
        )));
    }
    let objective = KernelObjective {
        spec,
        points,
        family,
    };
    let outcome = pso_minimize(&objective, config)?;
    let kernel = family.kernel(&outcome.best_position)?;
    Ok((kernel, outcome))
}

/// Hybrid-parameter optimization; returns the best `(epsilon, alpha, beta)`.
pub fn optimize_hybrid(
    spec: &ObjectiveSpec,
    points: &PointSet,
    config: &PsoConfig,
) -> Result<(HybridParams, OptimizationTrace)> {
    let (kernel, outcome) = optimize_kernel(spec, points, SearchFamily::Hybrid, config)?;
    Ok((kernel.params(), outcome.trace))
}
