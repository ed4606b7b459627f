//! Trace representations.
//!
//! A [`SampledTrace`] is a finite, strictly time-ordered sequence of samples
//! in `R^n`. Its piecewise-affine completion is a [`PolygonalTrace`], which is
//! the currency of the distance engine and of real-valued logic evaluation.
//! Booleanizing a polygonal trace against a set of predicates yields a
//! [`PropositionalTrace`].

mod csv_io;
mod predicate;
mod propositional;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use csv_io::{parse_csv, read_csv_file, write_csv, write_csv_file};
pub use predicate::{parse_predicate_table, Predicate, PredicateFn, Relation, ValueFn};
pub use propositional::{booleanize, PropositionalTrace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("trace needs at least 2 samples, got {0}")]
    TooShort(usize),
    #[error("non-increasing timestamp at row {row}")]
    NonIncreasing { row: usize },
    #[error("ragged row {row}: expected {expected} columns, found {found}")]
    Ragged { row: usize, expected: usize, found: usize },
    #[error("non-numeric cell at row {row}, column {column}: {cell:?}")]
    NonNumeric { row: usize, column: usize, cell: String },
    #[error("non-finite entry at sample {row}")]
    NonFinite { row: usize },
    #[error("trace has no value columns")]
    NoValues,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("time {t} outside trace domain [{lo}, {hi}]")]
    OutOfDomain { t: f64, lo: f64, hi: f64 },
    #[error("trace domains differ: [{a_lo}, {a_hi}] vs [{b_lo}, {b_hi}]")]
    DomainMismatch { a_lo: f64, a_hi: f64, b_lo: f64, b_hi: f64 },
    #[error("scaling factors must be finite and strictly positive")]
    BadScaling,
    #[error("invalid scaling spec {0:?}")]
    BadScalingSpec(String),
    #[error("predicate {name:?} refers to dimension {needed} but trace has {dim}")]
    PredicateArity { name: String, needed: usize, dim: usize },
    #[error("propositional trace: {0}")]
    BadPropositional(String),
    #[error("csv: {0}")]
    Csv(String),
    #[error("predicate table: {0}")]
    BadPredicateTable(String),
}

/// A finite sequence of timed samples in `R^dim`.
///
/// Values are stored row-major in one flat buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledTrace {
    timestamps: Vec<f64>,
    values: Vec<f64>,
    dim: usize,
}

impl SampledTrace {
    /// Builds a trace from timestamps and a flat row-major value buffer.
    pub fn new(timestamps: Vec<f64>, values: Vec<f64>, dim: usize) -> Result<Self, TraceError> {
        if dim == 0 {
            return Err(TraceError::NoValues);
        }
        if timestamps.len() < 2 {
            return Err(TraceError::TooShort(timestamps.len()));
        }
        if values.len() != timestamps.len() * dim {
            return Err(TraceError::DimensionMismatch {
                expected: timestamps.len() * dim,
                found: values.len(),
            });
        }
        for (k, t) in timestamps.iter().enumerate() {
            let row = &values[k * dim..(k + 1) * dim];
            if !t.is_finite() || row.iter().any(|v| !v.is_finite()) {
                return Err(TraceError::NonFinite { row: k + 1 });
            }
            if k > 0 && *t <= timestamps[k - 1] {
                return Err(TraceError::NonIncreasing { row: k + 1 });
            }
        }
        Ok(Self {
            timestamps,
            values,
            dim,
        })
    }

    pub fn from_rows(timestamps: &[f64], rows: &[Vec<f64>]) -> Result<Self, TraceError> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        let mut flat = Vec::with_capacity(rows.len() * dim);
        for (k, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(TraceError::Ragged {
                    row: k + 1,
                    expected: dim,
                    found: row.len(),
                });
            }
            flat.extend_from_slice(row);
        }
        Self::new(timestamps.to_vec(), flat, dim)
    }

    /// Samples a function of time on `times`.
    pub fn from_fn<F>(times: &[f64], dim: usize, mut f: F) -> Result<Self, TraceError>
    where
        F: FnMut(f64) -> Vec<f64>,
    {
        let mut flat = Vec::with_capacity(times.len() * dim);
        for &t in times {
            let v = f(t);
            if v.len() != dim {
                return Err(TraceError::DimensionMismatch {
                    expected: dim,
                    found: v.len(),
                });
            }
            flat.extend(v);
        }
        Self::new(times.to_vec(), flat, dim)
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn values_flat(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = (f64, &[f64])> + '_ {
        self.timestamps.iter().copied().zip(self.values.chunks_exact(self.dim))
    }
}

/// Piecewise-affine completion of a [`SampledTrace`].
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonalTrace {
    samples: SampledTrace,
}

impl From<SampledTrace> for PolygonalTrace {
    fn from(samples: SampledTrace) -> Self {
        Self { samples }
    }
}

/// Reinterprets a sampled trace as its linear-interpolation completion.
pub fn linear_interpolate(tr: SampledTrace) -> PolygonalTrace {
    PolygonalTrace::from(tr)
}

impl PolygonalTrace {
    pub fn samples(&self) -> &SampledTrace {
        &self.samples
    }

    pub fn into_samples(self) -> SampledTrace {
        self.samples
    }

    pub fn dim(&self) -> usize {
        self.samples.dim
    }

    /// Number of affine segments.
    pub fn segments(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn knots(&self) -> &[f64] {
        &self.samples.timestamps
    }

    pub fn knot_value(&self, k: usize) -> &[f64] {
        self.samples.value(k)
    }

    pub fn start(&self) -> f64 {
        self.samples.timestamps[0]
    }

    pub fn end(&self) -> f64 {
        *self.samples.timestamps.last().expect("trace has samples")
    }

    /// `tdom` as a closed interval `(T_i, T_e)`.
    pub fn domain(&self) -> (f64, f64) {
        (self.start(), self.end())
    }

    /// Time-duration in the `sup tdom` sense.
    pub fn tlen(&self) -> f64 {
        self.end()
    }

    /// Value at time `t`. Exact (bit-equal) at knots.
    pub fn sample_at(&self, t: f64) -> Result<Vec<f64>, TraceError> {
        let mut out = vec![0.0; self.dim()];
        self.sample_into(t, &mut out)?;
        Ok(out)
    }

    pub fn sample_into(&self, t: f64, out: &mut [f64]) -> Result<(), TraceError> {
        let (lo, hi) = self.domain();
        if !(t >= lo && t <= hi) {
            return Err(TraceError::OutOfDomain { t, lo, hi });
        }
        let ts = self.knots();
        let k = ts.partition_point(|&x| x < t);
        if ts[k] == t {
            out.copy_from_slice(self.knot_value(k));
            return Ok(());
        }
        self.segment_point(k - 1, t, out);
        Ok(())
    }

    /// Value on segment `k` at time `t`, no domain checks.
    pub(crate) fn segment_point(&self, k: usize, t: f64, out: &mut [f64]) {
        let ts = self.knots();
        let frac = (t - ts[k]) / (ts[k + 1] - ts[k]);
        let v0 = self.knot_value(k);
        let v1 = self.knot_value(k + 1);
        for d in 0..out.len() {
            out[d] = v0[d] + frac * (v1[d] - v0[d]);
        }
    }

    /// Index of the segment containing `t`, preferring the left segment at knots.
    #[allow(dead_code)]
    pub(crate) fn segment_index(&self, t: f64) -> usize {
        let ts = self.knots();
        let k = ts.partition_point(|&x| x < t);
        k.saturating_sub(1).min(self.segments() - 1)
    }

    /// Prefix restricted to `[T_i, t_end]`, with a knot inserted at the cut.
    pub fn restrict(&self, t_end: f64) -> Result<PolygonalTrace, TraceError> {
        let (lo, hi) = self.domain();
        if !(t_end > lo && t_end <= hi) {
            return Err(TraceError::OutOfDomain { t: t_end, lo, hi });
        }
        let cut = self.sample_at(t_end)?;
        let dim = self.dim();
        let mut times = Vec::new();
        let mut vals = Vec::new();
        for (t, v) in self.samples.rows() {
            if t >= t_end {
                break;
            }
            times.push(t);
            vals.extend_from_slice(v);
        }
        times.push(t_end);
        vals.extend_from_slice(&cut);
        Ok(SampledTrace::new(times, vals, dim)?.into())
    }

    /// Suffix restricted to `[t, T_e]`, with a knot inserted at the cut.
    pub fn suffix(&self, t: f64) -> Result<PolygonalTrace, TraceError> {
        let (lo, hi) = self.domain();
        if !(t >= lo && t < hi) {
            return Err(TraceError::OutOfDomain { t, lo, hi });
        }
        let cut = self.sample_at(t)?;
        let dim = self.dim();
        let mut times = vec![t];
        let mut vals = cut;
        for (s, v) in self.samples.rows() {
            if s > t {
                times.push(s);
                vals.extend_from_slice(v);
            }
        }
        Ok(SampledTrace::new(times, vals, dim)?.into())
    }

    pub fn scale(&self, profile: &ScalingProfile) -> Result<PolygonalTrace, TraceError> {
        if profile.dim_factors.len() != self.dim() {
            return Err(TraceError::DimensionMismatch {
                expected: self.dim(),
                found: profile.dim_factors.len(),
            });
        }
        let times = self.knots().iter().map(|t| t * profile.time_factor).collect();
        let vals = self
            .samples
            .values
            .chunks_exact(self.dim())
            .flat_map(|row| row.iter().zip(&profile.dim_factors).map(|(v, f)| v * f))
            .collect();
        Ok(SampledTrace::new(times, vals, self.dim())?.into())
    }

    /// Per-dimension `(min, max)` over the trace (attained at knots).
    pub fn value_ranges(&self) -> Vec<(f64, f64)> {
        let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); self.dim()];
        for (_, row) in self.samples.rows() {
            for (r, v) in ranges.iter_mut().zip(row) {
                r.0 = r.0.min(*v);
                r.1 = r.1.max(*v);
            }
        }
        ranges
    }
}

/// Per-axis scale factors applied before distance computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingProfile {
    pub time_factor: f64,
    pub dim_factors: Vec<f64>,
}

impl ScalingProfile {
    pub fn new(time_factor: f64, dim_factors: Vec<f64>) -> Result<Self, TraceError> {
        let ok = |f: f64| f.is_finite() && f > 0.0;
        if !ok(time_factor) || !dim_factors.iter().all(|&f| ok(f)) {
            return Err(TraceError::BadScaling);
        }
        Ok(Self {
            time_factor,
            dim_factors,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            time_factor: 1.0,
            dim_factors: vec![1.0; dim],
        }
    }

    pub fn reciprocal(&self) -> Self {
        Self {
            time_factor: 1.0 / self.time_factor,
            dim_factors: self.dim_factors.iter().map(|f| 1.0 / f).collect(),
        }
    }

    /// Parses `time=2,0=0.08,1=1.0`. Unlisted dimensions default to 1.
    pub fn parse(spec: &str, dim: usize) -> Result<Self, TraceError> {
        let bad = || TraceError::BadScalingSpec(spec.to_string());
        let mut profile = Self::identity(dim);
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, val) = item.split_once('=').ok_or_else(bad)?;
            let val: f64 = val.trim().parse().map_err(|_| bad())?;
            match key.trim() {
                "time" | "t" => profile.time_factor = val,
                k => {
                    let d: usize = k.parse().map_err(|_| bad())?;
                    if d >= dim {
                        return Err(TraceError::DimensionMismatch {
                            expected: dim,
                            found: d + 1,
                        });
                    }
                    profile.dim_factors[d] = val;
                }
            }
        }
        Self::new(profile.time_factor, profile.dim_factors)
    }
}

impl fmt::Display for ScalingProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "time={}", self.time_factor)?;
        for (d, v) in self.dim_factors.iter().enumerate() {
            write!(f, ",{d}={v}")?;
        }
        Ok(())
    }
}

fn l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Maximum pointwise L2 distance between two traces on the same domain.
///
/// Between consecutive knots of the merged knot set both traces are affine,
/// so the squared distance is a quadratic in time; its maximum over the
/// piece is attained at an endpoint or at the vertex of the parabola.
pub fn pointwise_distance(a: &PolygonalTrace, b: &PolygonalTrace) -> Result<f64, TraceError> {
    if a.dim() != b.dim() {
        return Err(TraceError::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    if a.domain() != b.domain() {
        let (a_lo, a_hi) = a.domain();
        let (b_lo, b_hi) = b.domain();
        return Err(TraceError::DomainMismatch { a_lo, a_hi, b_lo, b_hi });
    }
    let dim = a.dim();
    let (ta, tb) = (a.knots(), b.knots());
    let mut merged = Vec::with_capacity(ta.len() + tb.len());
    let (mut i, mut j) = (0, 0);
    while i < ta.len() || j < tb.len() {
        let next = match (ta.get(i), tb.get(j)) {
            (Some(&x), Some(&y)) if x == y => {
                i += 1;
                j += 1;
                x
            }
            (Some(&x), Some(&y)) if x < y => {
                i += 1;
                x
            }
            (Some(_), Some(&y)) => {
                j += 1;
                y
            }
            (Some(&x), None) => {
                i += 1;
                x
            }
            (None, Some(&y)) => {
                j += 1;
                y
            }
            (None, None) => unreachable!(),
        };
        merged.push(next);
    }

    let mut va = vec![0.0; dim];
    let mut vb = vec![0.0; dim];
    let mut diff0 = vec![0.0; dim];
    let mut best: f64 = 0.0;
    let mut seg_a = 0;
    let mut seg_b = 0;
    for w in merged.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        while ta[seg_a + 1] < t1 {
            seg_a += 1;
        }
        while tb[seg_b + 1] < t1 {
            seg_b += 1;
        }
        // Endpoints of this piece, evaluated on the bracketing segments.
        let piece = |t: f64, out_a: &mut [f64], out_b: &mut [f64]| {
            a.segment_point(seg_a, t, out_a);
            b.segment_point(seg_b, t, out_b);
        };
        piece(t0, &mut va, &mut vb);
        for d in 0..dim {
            diff0[d] = va[d] - vb[d];
        }
        let d0 = diff0.iter().map(|x| x * x).sum::<f64>();
        piece(t1, &mut va, &mut vb);
        let mut slope_sq = 0.0;
        let mut cross = 0.0;
        let mut d1 = 0.0;
        for d in 0..dim {
            let e1 = va[d] - vb[d];
            let s = e1 - diff0[d];
            slope_sq += s * s;
            cross += diff0[d] * s;
            d1 += e1 * e1;
        }
        best = best.max(d0).max(d1);
        if slope_sq > 0.0 {
            let u = -cross / slope_sq;
            if u > 0.0 && u < 1.0 {
                let mid = diff0
                    .iter()
                    .enumerate()
                    .map(|(d, x)| {
                        let e1 = va[d] - vb[d];
                        let v = x + u * (e1 - x);
                        v * v
                    })
                    .sum::<f64>();
                best = best.max(mid);
            }
        }
    }
    // Knot values are exact, so also take the exact knot distances.
    best = best.max(l2(a.knot_value(0), b.knot_value(0)).powi(2));
    Ok(best.sqrt())
}
