//! Uniform approximation of any copula by a permutation copula.
//!
//! The pipeline is grid masses, then rational rounding with exact slice sums,
//! then a partition of every slab into per-cell intervals, then one diagonal
//! per positive cell.

use serde::Serialize;

use crate::copula::{dinf_distance, grid_extract, CopulaModel};
use crate::error::{Error, Result};
use crate::geometry::unflatten;
use crate::grid::{GridMeasure, GridSpec};
use crate::rational::{self, Rational};
use crate::segment::{Segment, SegmentMeasure};

/// Allowed drift of an input slice sum from `1/m`.
pub const STOCHASTIC_TOL: f64 = 1e-9;
/// Number of times the denominator is doubled before giving up.
pub const MAX_DOUBLINGS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Rationalized {
    pub measure: GridMeasure,
    /// `max_i |t(i)/D - M(i)|`.
    pub rho: f64,
    pub bound: f64,
    pub attempts: usize,
}

/// Default denominator `m^(n+2)`.
pub fn default_denominator(spec: GridSpec) -> Result<u64> {
    (spec.m as u64)
        .checked_pow(spec.n as u32 + 2)
        .ok_or_else(|| Error::Budget(format!("m^(n+2) overflows for m = {}, n = {}", spec.m, spec.n)))
}

/// Rounds a stochastic tensor to integers over `D` with exact slice sums and
/// `rho < m^-(n+1)`, doubling `D` when the bound is missed.
pub fn rationalize(masses: &[f64], spec: GridSpec, denominator: u64) -> Result<Rationalized> {
    if masses.len() != spec.cells() {
        return Err(Error::DimensionMismatch {
            expected: spec.cells(),
            got: masses.len(),
        });
    }
    if masses.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("grid mass".into()));
    }
    if masses.iter().any(|&x| x < -STOCHASTIC_TOL) {
        return Err(Error::NotNormalized("negative grid mass".into()));
    }
    let target = 1.0 / spec.m as f64;
    for axis in 0..spec.n {
        let mut sums = vec![0.0; spec.m];
        for (flat, x) in masses.iter().enumerate() {
            sums[spec.index(flat)[axis]] += x;
        }
        if let Some((j, s)) = sums.iter().enumerate().find(|(_, s)| (*s - target).abs() > STOCHASTIC_TOL) {
            return Err(Error::NotNormalized(format!("axis {axis} slice {j} sums to {s}")));
        }
    }
    if denominator == 0 || !denominator.is_multiple_of(spec.m as u64) {
        return Err(Error::InvalidInput(format!(
            "denominator {denominator} must be a positive multiple of m = {}",
            spec.m
        )));
    }
    let bound = (spec.m as f64).powi(-(spec.n as i32 + 1));
    let mut d = denominator;
    let mut rho = f64::INFINITY;
    for attempt in 1..=MAX_DOUBLINGS + 1 {
        let entries = round_once(masses, spec, d);
        let df = d as f64;
        rho = entries
            .iter()
            .zip(masses)
            .map(|(&t, &x)| (t as f64 / df - x).abs())
            .fold(0.0, f64::max);
        if rho < bound {
            return Ok(Rationalized {
                measure: GridMeasure::new(spec, d, entries)?,
                rho,
                bound,
                attempts: attempt,
            });
        }
        d = match d.checked_mul(2) {
            Some(next) => next,
            None => break,
        };
    }
    Err(Error::Rationalize {
        rho,
        bound,
        attempts: MAX_DOUBLINGS + 1,
    })
}

/// One rounding pass: floor, trim excess slices, add units by largest
/// remainder, then fill the leftover deficits one cell at a time.
fn round_once(masses: &[f64], spec: GridSpec, d: u64) -> Vec<u64> {
    let GridSpec { n, m } = spec;
    let df = d as f64;
    let scaled: Vec<f64> = masses.iter().map(|&x| x.max(0.0) * df).collect();
    // The nudge keeps exact multiples like 3 * (1/3) from flooring to 0.
    let mut t: Vec<i64> = scaled.iter().map(|&x| (x + 1e-9).floor() as i64).collect();
    let target = (d / m as u64) as i64;
    let index: Vec<Vec<usize>> = (0..t.len()).map(|f| spec.index(f)).collect();
    let mut deficit = vec![vec![target; m]; n];
    for (f, &v) in t.iter().enumerate() {
        for k in 0..n {
            deficit[k][index[f][k]] -= v;
        }
    }
    let residual = |t: &[i64], f: usize| scaled[f] - t[f] as f64;
    let bump = |t: &mut Vec<i64>, deficit: &mut Vec<Vec<i64>>, f: usize, by: i64| {
        t[f] += by;
        for k in 0..n {
            deficit[k][index[f][k]] -= by;
        }
    };

    // Excess only comes from tolerance in the input sums.
    for k in 0..n {
        for j in 0..m {
            while deficit[k][j] < 0 {
                let f = (0..t.len())
                    .filter(|&f| index[f][k] == j && t[f] > 0)
                    .min_by(|&a, &b| residual(&t, a).total_cmp(&residual(&t, b)).then(a.cmp(&b)))
                    .expect("an over-full slice has a positive cell");
                bump(&mut t, &mut deficit, f, -1);
            }
        }
    }

    let mut order: Vec<usize> = (0..t.len()).collect();
    order.sort_by(|&a, &b| residual(&t, b).total_cmp(&residual(&t, a)).then(a.cmp(&b)));
    for f in order {
        if residual(&t, f) > 0.0 && (0..n).all(|k| deficit[k][index[f][k]] > 0) {
            bump(&mut t, &mut deficit, f, 1);
        }
    }

    // Every axis has the same total deficit, so while any remains each axis
    // has an open slice and their product contains an admissible cell.
    loop {
        let open: Vec<Vec<usize>> = deficit
            .iter()
            .map(|row| (0..m).filter(|&j| row[j] > 0).collect())
            .collect();
        if open.iter().any(|o| o.is_empty()) {
            debug_assert!(deficit.iter().flatten().all(|&x| x == 0));
            break;
        }
        let sizes: Vec<usize> = open.iter().map(|o| o.len()).collect();
        let count: usize = sizes.iter().product();
        let mut best: Option<(f64, usize)> = None;
        for c in 0..count {
            let mut rem = c;
            let mut idx = vec![0; n];
            for k in (0..n).rev() {
                idx[k] = open[k][rem % sizes[k]];
                rem /= sizes[k];
            }
            let f = spec.flat(&idx);
            let r = residual(&t, f);
            if best.is_none_or(|(br, bf)| r > br || (r == br && f < bf)) {
                best = Some((r, f));
            }
        }
        let (_, f) = best.expect("non-empty product");
        bump(&mut t, &mut deficit, f, 1);
    }
    t.into_iter().map(|v| v as u64).collect()
}

/// Per axis and cell, the start of the cell's interval inside its slab, as a
/// numerator over `D`. The interval length is the cell's entry.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalPartition {
    spec: GridSpec,
    denominator: u64,
    starts: Vec<Vec<u64>>,
    lengths: Vec<u64>,
}

impl IntervalPartition {
    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn denominator(&self) -> u64 {
        self.denominator
    }

    /// Numerators `(start, end)` over `D` of `I^(axis)_cell`.
    pub fn numerators(&self, axis: usize, cell: &[usize]) -> (u64, u64) {
        let f = self.spec.flat(cell);
        (self.starts[axis][f], self.starts[axis][f] + self.lengths[f])
    }

    pub fn interval(&self, axis: usize, cell: &[usize]) -> (Rational, Rational) {
        let (a, b) = self.numerators(axis, cell);
        let d = self.denominator as i64;
        (rational::ratio(a as i64, d), rational::ratio(b as i64, d))
    }
}

/// Splits each slab `[j/m, (j+1)/m)` of each axis into consecutive intervals,
/// one per cell of the slab in lexicographic order, with length equal to the cell mass.
pub fn interval_partition(g: &GridMeasure) -> IntervalPartition {
    let spec = g.spec();
    let width = g.denominator() / spec.m as u64;
    let mut next: Vec<Vec<u64>> = (0..spec.n)
        .map(|_| (0..spec.m as u64).map(|j| j * width).collect())
        .collect();
    let mut starts = vec![vec![0u64; spec.cells()]; spec.n];
    for (f, &t) in g.entries().iter().enumerate() {
        let idx = unflatten(f, spec.n, spec.m);
        for k in 0..spec.n {
            starts[k][f] = next[k][idx[k]];
            next[k][idx[k]] += t;
        }
    }
    IntervalPartition {
        spec,
        denominator: g.denominator(),
        starts,
        lengths: g.entries().to_vec(),
    }
}

/// One all-plus diagonal per positive cell across its sub-box. The result is
/// a permutation copula of order `D`; the order is returned alongside.
pub fn assemble(g: &GridMeasure, ip: &IntervalPartition) -> Result<(SegmentMeasure, u64)> {
    let spec = g.spec();
    if ip.spec() != spec || ip.denominator() != g.denominator() {
        return Err(Error::InvalidInput("partition does not match the grid measure".into()));
    }
    let d = g.denominator() as i64;
    let mut segments = Vec::new();
    for (f, &t) in g.entries().iter().enumerate() {
        if t == 0 {
            continue;
        }
        let idx = unflatten(f, spec.n, spec.m);
        let (a, b): (Vec<Rational>, Vec<Rational>) = (0..spec.n)
            .map(|k| {
                let (s, e) = ip.numerators(k, &idx);
                (rational::ratio(s as i64, d), rational::ratio(e as i64, d))
            })
            .unzip();
        segments.push(Segment::new(a, b, rational::ratio(t as i64, d))?);
    }
    Ok((SegmentMeasure::new(spec.n, segments)?, g.denominator()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApproximationReport {
    #[serde(skip)]
    pub measure: SegmentMeasure,
    pub m: usize,
    pub q: u64,
    pub rho: f64,
    pub lattice_dinf: f64,
    pub lattice_argmax: Vec<f64>,
    pub resolution: usize,
    /// `(2n + 1)/m`.
    pub bound: f64,
}

impl ApproximationReport {
    pub fn within_bound(&self) -> bool {
        self.lattice_dinf <= self.bound
    }
}

/// Permutation-copula approximant of `c` on the `m`-grid, with its lattice
/// distance at resolution `4m`.
pub fn approximate(c: &CopulaModel, m: usize, denominator: Option<u64>) -> Result<ApproximationReport> {
    if m == 0 {
        return Err(Error::InvalidInput("order m must be at least 1".into()));
    }
    let spec = GridSpec::new(c.dim(), m)?;
    let masses = grid_extract(c, m)?;
    let d = match denominator {
        Some(d) => d,
        None => default_denominator(spec)?,
    };
    let r = rationalize(&masses, spec, d)?;
    let ip = interval_partition(&r.measure);
    let (measure, q) = assemble(&r.measure, &ip)?;
    let approx = CopulaModel::Segments(measure);
    let dinf = dinf_distance(c, &approx, 4 * m)?;
    let CopulaModel::Segments(measure) = approx else { unreachable!() };
    Ok(ApproximationReport {
        measure,
        m,
        q,
        rho: r.rho,
        lattice_dinf: dinf.estimate,
        lattice_argmax: dinf.argmax,
        resolution: dinf.resolution,
        bound: (2 * spec.n + 1) as f64 / m as f64,
    })
}
