use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{RbfError, Result};
use crate::geometry::fmt_f64;
use crate::kernel::KernelSpec;
use crate::pso::OptimizationTrace;
use crate::selection::ObjectiveKind;

use super::{ExperimentKind, ExperimentSpec};

/// One (N, kernel variant, objective) outcome.
#[derive(Debug, Clone, Default)]
pub struct CellRecord {
    pub n: usize,
    pub variant: String,
    pub objective: Option<ObjectiveKind>,
    /// Exact kernel used for the reported numbers.
    pub kernel: Option<KernelSpec>,
    pub augmented: bool,
    pub rms: Option<f64>,
    pub loocv: Option<f64>,
    pub condition_number: Option<f64>,
    pub negative_count: Option<usize>,
    pub wall_time_s: Option<f64>,
    pub failure: Option<String>,
    pub note: Option<String>,
    pub spectrum: Option<Vec<f64>>,
    pub trace: Option<OptimizationTrace>,
}

impl CellRecord {
    pub fn is_ok(&self) -> bool {
        self.failure.is_none()
    }

    pub fn status(&self) -> String {
        match &self.failure {
            None => "ok".into(),
            Some(cause) => format!("failed: {cause}"),
        }
    }

    fn file_tag(&self) -> String {
        let mut tag = format!("n{}-{}", self.n, self.variant.replace('+', "-"));
        if let Some(o) = self.objective {
            tag.push('-');
            tag.push_str(&o.to_string());
        }
        tag
    }
}

/// One point of an error-vs-epsilon sweep.
#[derive(Debug, Clone)]
pub struct SweepRecord {
    pub n: usize,
    pub variant: String,
    pub epsilon: f64,
    pub rms: Option<f64>,
    pub condition_estimate: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub spec: ExperimentSpec,
    pub cells: Vec<CellRecord>,
    pub sweeps: Vec<SweepRecord>,
    pub notes: Vec<String>,
    /// Log-log slope of wall time against N (scaling study).
    pub slope: Option<(usize, usize, f64)>,
}

const FRANKE_NOTE: &str =
    "Franke test function uses the standard form with negative exponents in all four terms \
(f2 = 0.75 exp(-(9x+1)^2/49 - (9y+1)/10), f4 = 0.2 exp(-(9x-4)^2 - (9y-7)^2)); the variant with \
positive exponents overflows.";

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

impl ExperimentReport {
    pub(crate) fn new(spec: ExperimentSpec) -> Self {
        let mut notes = Vec::new();
        if matches!(
            spec.kind,
            ExperimentKind::FrankeConvergence
                | ExperimentKind::Spectra
                | ExperimentKind::ObjectiveComparison
        ) {
            notes.push(FRANKE_NOTE.to_string());
        }
        Self {
            spec,
            cells: Vec::new(),
            sweeps: Vec::new(),
            notes,
            slope: None,
        }
    }

    pub fn cell(
        &self,
        n: usize,
        variant: &str,
        objective: Option<ObjectiveKind>,
    ) -> Option<&CellRecord> {
        self.cells.iter().find(|c| {
            c.n == n && c.variant == variant && (objective.is_none() || c.objective == objective)
        })
    }

    /// Common file stem, `<study>-<spec hash>`.
    pub fn stem(&self) -> String {
        format!("{}-{}", self.spec.kind, self.spec.hash())
    }

    pub fn cells_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| RbfError::Io(std::io::Error::other(e));
        w.write_record([
            "n",
            "variant",
            "objective",
            "kernel",
            "epsilon",
            "alpha",
            "beta",
            "augmented",
            "rms",
            "loocv",
            "condition_number",
            "negative_count",
            "wall_time_s",
            "status",
            "note",
        ])
        .map_err(io)?;
        for c in &self.cells {
            let (kind, e, a, b) = match &c.kernel {
                Some(k) => {
                    let p = k.params();
                    (
                        k.kind().to_string(),
                        fmt_f64(p.epsilon()),
                        fmt_f64(p.alpha()),
                        fmt_f64(p.beta()),
                    )
                }
                None => Default::default(),
            };
            w.write_record([
                c.n.to_string(),
                c.variant.clone(),
                c.objective.map(|o| o.to_string()).unwrap_or_default(),
                kind,
                e,
                a,
                b,
                c.augmented.to_string(),
                opt(c.rms),
                opt(c.loocv),
                opt(c.condition_number),
                c.negative_count.map(|v| v.to_string()).unwrap_or_default(),
                opt(c.wall_time_s),
                c.status(),
                c.note.clone().unwrap_or_default(),
            ])
            .map_err(io)?;
        }
        if let Some((lo, hi, slope)) = self.slope {
            let mut row = vec![String::new(); 15];
            row[0] = hi.to_string();
            row[1] = "loglog-slope".into();
            row[13] = "ok".into();
            row[14] = format!("slope={} between N={lo} and N={hi}", fmt_f64(slope));
            w.write_record(&row).map_err(io)?;
        }
        String::from_utf8(w.into_inner().map_err(|e| RbfError::Io(e.into_error()))?)
            .map_err(|e| RbfError::Io(std::io::Error::other(e)))
    }

    pub fn sweep_csv(&self) -> String {
        let mut out = String::from("n,variant,epsilon,rms,condition_estimate,status\n");
        for s in &self.sweeps {
            let status = s
                .failure
                .as_deref()
                .map_or("ok".to_string(), |f| format!("failed: {f}"));
            let _ = writeln!(
                out,
                "{},{},{},{},{},\"{}\"",
                s.n,
                s.variant,
                fmt_f64(s.epsilon),
                opt(s.rms),
                opt(s.condition_estimate),
                status.replace('"', "'")
            );
        }
        out
    }

    /// Human-readable table.
    pub fn text_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "study: {}   spec hash: {}",
            self.spec.kind,
            self.spec.hash()
        );
        let _ = writeln!(
            out,
            "pso: swarm {} x {} generations, seed {}; evaluation grid {}x{}",
            self.spec.pso.swarm_size,
            self.spec.pso.generations,
            self.spec.pso.seed,
            self.spec.eval_grid_n,
            self.spec.eval_grid_n
        );
        for note in &self.notes {
            let _ = writeln!(out, "note: {note}");
        }
        let _ = writeln!(
            out,
            "{:>6} {:<12} {:<6} {:>10} {:>10} {:>10} {:>11} {:>11} {:>11} {:>4} {:>9}  status",
            "N",
            "variant",
            "obj",
            "epsilon",
            "alpha",
            "beta",
            "rms",
            "loocv",
            "cond",
            "neg",
            "time[s]"
        );
        let num = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3e}"));
        for c in &self.cells {
            let (e, a, b) = c.kernel.map_or(("-".into(), "-".into(), "-".into()), |k| {
                let p = k.params();
                (
                    format!("{:.4}", p.epsilon()),
                    format!("{:.3e}", p.alpha()),
                    format!("{:.3e}", p.beta()),
                )
            });
            let _ = writeln!(
                out,
                "{:>6} {:<12} {:<6} {:>10} {:>10} {:>10} {:>11} {:>11} {:>11} {:>4} {:>9}  {}",
                c.n,
                c.variant,
                c.objective.map_or("-".to_string(), |o| o.to_string()),
                e,
                a,
                b,
                num(c.rms),
                num(c.loocv),
                num(c.condition_number),
                c.negative_count.map_or("-".to_string(), |v| v.to_string()),
                c.wall_time_s.map_or("-".to_string(), |t| format!("{t:.4}")),
                c.status()
            );
        }
        if let Some((lo, hi, slope)) = self.slope {
            let _ = writeln!(
                out,
                "log-log time slope between N={lo} and N={hi}: {slope:.3}"
            );
        }
        out
    }

    /// Write all report files into `dir`; returns the paths written.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let stem = self.stem();
        let mut written = Vec::new();
        let mut put = |name: String, body: String| -> Result<()> {
            let path = dir.join(name);
            fs::write(&path, body)?;
            written.push(path);
            Ok(())
        };
        put(format!("{stem}.csv"), self.cells_csv()?)?;
        put(format!("{stem}.txt"), self.text_table())?;
        if !self.sweeps.is_empty() {
            put(format!("{stem}-sweep.csv"), self.sweep_csv())?;
        }
        for c in &self.cells {
            if let Some(ev) = &c.spectrum {
                let mut body = String::from("index,eigenvalue\n");
                for (i, v) in ev.iter().enumerate() {
                    let _ = writeln!(body, "{i},{}", fmt_f64(*v));
                }
                put(format!("{stem}-spectrum-{}.csv", c.file_tag()), body)?;
            }
            if let Some(trace) = &c.trace {
                let names: &[&str] = if c.variant == "gaussian" {
                    &["epsilon"]
                } else {
                    &["epsilon", "alpha", "beta"]
                };
                let mut buf = Vec::new();
                trace.write_csv(&mut buf, names)?;
                put(
                    format!("{stem}-trace-{}.csv", c.file_tag()),
                    String::from_utf8(buf).expect("utf-8"),
                )?;
            }
        }
        Ok(written)
    }
}
