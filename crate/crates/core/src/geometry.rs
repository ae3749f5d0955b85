//! Point sets, node generators and Euclidean distances.

use std::io::{Read, Write};

use faer::Mat;

use crate::error::{RbfError, Result};

/// `N` points in `dim`-dimensional space, optionally carrying one sampled value each.
///
/// Coordinates are stored row-major: point `j` occupies `coords[j*dim..(j+1)*dim]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
    values: Option<Vec<f64>>,
}

impl PointSet {
    pub fn new(dim: usize, coords: Vec<f64>, values: Option<Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return Err(RbfError::Domain("point dimension must be positive".into()));
        }
        if coords.is_empty() || coords.len() % dim != 0 {
            return Err(RbfError::Domain(format!(
                "coordinate buffer of length {} does not hold a positive number of {dim}-D points",
                coords.len()
            )));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(RbfError::Domain(format!(
                "point {} has a non-finite coordinate",
                i / dim
            )));
        }
        let n = coords.len() / dim;
        if let Some(v) = &values {
            if v.len() != n {
                return Err(RbfError::Domain(format!(
                    "{} values supplied for {n} points",
                    v.len()
                )));
            }
        }
        Ok(Self {
            dim,
            coords,
            values,
        })
    }

    /// Build from a list of points.
    pub fn from_points(points: &[Vec<f64>], values: Option<Vec<f64>>) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        if points.iter().any(|p| p.len() != dim) {
            return Err(RbfError::Domain("points of mixed dimension".into()));
        }
        Self::new(dim, points.concat(), values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn point(&self, j: usize) -> &[f64] {
        &self.coords[j * self.dim..(j + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn values(&self) -> Option<&[f64]> {
        self.values.as_deref()
    }

    /// Attach (or replace) sampled values.
    pub fn with_values(self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.dim, self.coords, Some(values))
    }

    /// Sample `f` at every point and attach the results.
    pub fn sample(self, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = self.points().map(f).collect();
        Self {
            values: Some(values),
            ..self
        }
    }

    /// Copy of the set with point `k` removed.
    pub fn without(&self, k: usize) -> Result<Self> {
        let n = self.len();
        if k >= n || n < 2 {
            return Err(RbfError::Domain(format!(
                "cannot remove point {k} from a set of {n}"
            )));
        }
        let mut coords = Vec::with_capacity((n - 1) * self.dim);
        coords.extend_from_slice(&self.coords[..k * self.dim]);
        coords.extend_from_slice(&self.coords[(k + 1) * self.dim..]);
        let values = self.values.as_ref().map(|v| {
            let mut w = v.clone();
            w.remove(k);
            w
        });
        Ok(Self {
            dim: self.dim,
            coords,
            values,
        })
    }

    /// Reorder so that new point `i` is old point `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.len();
        let mut seen = vec![false; n];
        if perm.len() != n
            || perm
                .iter()
                .any(|&p| p >= n || std::mem::replace(&mut seen[p], true))
        {
            return Err(RbfError::Domain(
                "not a permutation of the point indices".into(),
            ));
        }
        let coords = perm
            .iter()
            .flat_map(|&p| self.point(p).iter().copied())
            .collect();
        let values = self
            .values
            .as_ref()
            .map(|v| perm.iter().map(|&p| v[p]).collect());
        Ok(Self {
            dim: self.dim,
            coords,
            values,
        })
    }

    pub fn to_grid(&self) -> EvaluationGrid {
        EvaluationGrid {
            dim: self.dim,
            points: self.coords.clone(),
        }
    }

    /// Read the `x1,...,xs[,value]` CSV format.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let table = CsvTable::read(reader)?;
        if table.rows() == 0 {
            return Err(RbfError::Parse {
                line: 1,
                message: "no data rows".into(),
            });
        }
        Self::new(table.dim, table.coords, table.values)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_csv_rows(writer, self.dim, &self.coords, self.values.as_deref())
    }
}

/// Points at which an interpolant is evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationGrid {
    dim: usize,
    points: Vec<f64>,
}

impl EvaluationGrid {
    pub fn new(dim: usize, points: Vec<f64>) -> Result<Self> {
        let set = PointSet::new(dim, points, None)?;
        Ok(set.to_grid())
    }

    /// `k^dim` equispaced points on `[lower, upper]^dim`.
    pub fn tensor(k: usize, dim: usize, lower: f64, upper: f64) -> Result<Self> {
        Ok(make_tensor_grid(k, dim, lower, upper)?.to_grid())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn point(&self, j: usize) -> &[f64] {
        &self.points[j * self.dim..(j + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.points.chunks_exact(self.dim)
    }

    pub fn map(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        self.points().map(f).collect()
    }
}

/// Parsed CSV table; may have zero data rows.
#[derive(Debug, Clone)]
pub struct CsvTable {
    pub dim: usize,
    pub coords: Vec<f64>,
    pub values: Option<Vec<f64>>,
}

impl CsvTable {
    pub fn rows(&self) -> usize {
        self.coords.len() / self.dim.max(1)
    }

    pub fn read<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header = rdr.headers().map_err(csv_error)?.clone();
        let names: Vec<&str> = header.iter().collect();
        let has_values = names.last() == Some(&"value");
        let dim = names.len() - usize::from(has_values);
        if dim == 0 {
            return Err(RbfError::Parse {
                line: 1,
                message: "header declares no coordinate columns".into(),
            });
        }
        for (i, name) in names[..dim].iter().enumerate() {
            if *name != format!("x{}", i + 1) {
                return Err(RbfError::Parse {
                    line: 1,
                    message: format!("expected column 'x{}', found '{name}'", i + 1),
                });
            }
        }
        let mut coords = Vec::new();
        let mut values = has_values.then(Vec::new);
        for record in rdr.records() {
            let record = record.map_err(csv_error)?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            for (i, field) in record.iter().enumerate() {
                let v: f64 = field.parse().map_err(|_| RbfError::Parse {
                    line,
                    message: format!("column {} is not a number: '{field}'", i + 1),
                })?;
                if !v.is_finite() {
                    return Err(RbfError::Parse {
                        line,
                        message: format!("column {} is not finite", i + 1),
                    });
                }
                if i < dim {
                    coords.push(v);
                } else if let Some(vals) = values.as_mut() {
                    vals.push(v);
                }
            }
        }
        Ok(Self {
            dim,
            coords,
            values,
        })
    }
}

fn csv_error(e: csv::Error) -> RbfError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => RbfError::Io(io),
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => RbfError::Parse {
            line,
            message: format!("row has {len} fields, header has {expected_len}"),
        },
        other => RbfError::Parse {
            line,
            message: format!("{other:?}"),
        },
    }
}

/// Format a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write rows in the point-set CSV format.
pub fn write_csv_rows<W: Write>(
    writer: W,
    dim: usize,
    coords: &[f64],
    values: Option<&[f64]>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
    if values.is_some() {
        header.push("value".into());
    }
    w.write_record(&header).map_err(csv_error)?;
    for (j, p) in coords.chunks_exact(dim).enumerate() {
        let mut row: Vec<String> = p.iter().map(|&c| fmt_f64(c)).collect();
        if let Some(v) = values {
            row.push(fmt_f64(v[j]));
        }
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// `k^dim` equispaced points including both endpoints; last coordinate varies fastest.
pub fn make_tensor_grid(k: usize, dim: usize, lower: f64, upper: f64) -> Result<PointSet> {
    if k < 2 {
        return Err(RbfError::Config(format!(
            "tensor grid needs at least 2 points per side, got {k}"
        )));
    }
    if dim == 0 {
        return Err(RbfError::Config(
            "tensor grid dimension must be positive".into(),
        ));
    }
    if !(upper > lower) || !lower.is_finite() || !upper.is_finite() {
        return Err(RbfError::Config(format!(
            "tensor grid bounds must satisfy lower < upper, got [{lower}, {upper}]"
        )));
    }
    let ticks: Vec<f64> = (0..k)
        .map(|i| {
            if i == k - 1 {
                upper
            } else {
                lower + (upper - lower) * (i as f64) / ((k - 1) as f64)
            }
        })
        .collect();
    let total = k
        .checked_pow(dim as u32)
        .ok_or_else(|| RbfError::Config("tensor grid too large".into()))?;
    let mut coords = Vec::with_capacity(total * dim);
    let mut idx = vec![0usize; dim];
    for _ in 0..total {
        coords.extend(idx.iter().map(|&i| ticks[i]));
        for d in (0..dim).rev() {
            idx[d] += 1;
            if idx[d] < k {
                break;
            }
            idx[d] = 0;
        }
    }
    PointSet::new(dim, coords, None)
}

const HALTON_BASES: [u64; 6] = [2, 3, 5, 7, 11, 13];

/// Radical inverse of `index` in `base`, computed exactly in integers then rounded once.
fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let mut num = 0u64;
    let mut den = 1u64;
    while index > 0 {
        num = num * base + index % base;
        den *= base;
        index /= base;
    }
    num as f64 / den as f64
}

/// First `n` Halton points (indices `1..=n`) in `[0, 1)^dim`, with prime bases 2, 3, 5, ...
pub fn make_halton_set(n: usize, dim: usize) -> Result<PointSet> {
    if n == 0 {
        return Err(RbfError::Config(
            "Halton set needs at least one point".into(),
        ));
    }
    if dim == 0 || dim > HALTON_BASES.len() {
        return Err(RbfError::Config(format!(
            "Halton dimension must be in 1..={}, got {dim}",
            HALTON_BASES.len()
        )));
    }
    let coords = (1..=n as u64)
        .flat_map(|i| {
            HALTON_BASES[..dim]
                .iter()
                .map(move |&b| radical_inverse(i, b))
        })
        .collect();
    PointSet::new(dim, coords, None)
}

#[inline]
pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// `|a| x |b|` matrix of Euclidean distances.
pub fn pairwise_distances(a: &PointSet, b: &PointSet) -> Result<Mat<f64>> {
    if a.dim() != b.dim() {
        return Err(RbfError::Domain(format!(
            "dimension mismatch: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(Mat::from_fn(a.len(), b.len(), |j, k| {
        euclidean(a.point(j), b.point(k))
    }))
}

/// Closest pair `(i, j, distance)` with `i < j`.
pub fn closest_pair(p: &PointSet) -> Result<(usize, usize, f64)> {
    let n = p.len();
    if n < 2 {
        return Err(RbfError::Domain(format!(
            "separation needs at least two points, got {n}"
        )));
    }
    let mut best = (0, 1, f64::INFINITY);
    for i in 0..n {
        for j in i + 1..n {
            let d = euclidean(p.point(i), p.point(j));
            if d < best.2 {
                best = (i, j, d);
            }
        }
    }
    Ok(best)
}

/// Minimum distance between two distinct points of the set.
pub fn min_separation(p: &PointSet) -> Result<f64> {
    closest_pair(p).map(|(_, _, d)| d)
}
