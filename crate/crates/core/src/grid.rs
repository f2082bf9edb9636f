//! Grid-based measures: multi-stochastic integer tensors, piecewise-constant
//! densities, and mixtures of a density with a segment measure.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::geometry::{flatten, overlap, unflatten, Rect, Scalar};
use crate::rational::{self, Rational};
use crate::segment::SegmentMeasure;

/// An `m x ... x m` grid on `[0,1]^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub n: usize,
    pub m: usize,
}

impl GridSpec {
    pub fn new(n: usize, m: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput(format!("dimension {n} < 2")));
        }
        if m == 0 {
            return Err(Error::InvalidInput("grid order must be at least 1".into()));
        }
        m.checked_pow(n as u32)
            .ok_or_else(|| Error::InvalidInput(format!("grid {m}^{n} too large")))?;
        Ok(GridSpec { n, m })
    }

    pub fn cells(&self) -> usize {
        self.m.pow(self.n as u32)
    }

    pub fn index(&self, flat: usize) -> Vec<usize> {
        unflatten(flat, self.n, self.m)
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        flatten(idx, self.m)
    }
}

/// Integer tensor `t` over a common denominator `D`: cell `i` has mass `t(i)/D`,
/// and every axial slice sums to exactly `D/m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridMeasure {
    spec: GridSpec,
    denominator: u64,
    entries: Vec<u64>,
}

impl GridMeasure {
    pub fn new(spec: GridSpec, denominator: u64, entries: Vec<u64>) -> Result<Self> {
        if denominator == 0 || !denominator.is_multiple_of(spec.m as u64) {
            return Err(Error::InvalidInput(format!(
                "denominator {denominator} must be a positive multiple of m = {}",
                spec.m
            )));
        }
        if entries.len() != spec.cells() {
            return Err(Error::InvalidInput(format!(
                "expected {} entries, got {}",
                spec.cells(),
                entries.len()
            )));
        }
        let g = GridMeasure {
            spec,
            denominator,
            entries,
        };
        let target = denominator / spec.m as u64;
        for axis in 0..spec.n {
            for (j, &s) in g.slab_sums(axis).iter().enumerate() {
                if s != target {
                    return Err(Error::InvalidInput(format!(
                        "axis {axis} slice {j} sums to {s}, expected {target}"
                    )));
                }
            }
        }
        Ok(g)
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn denominator(&self) -> u64 {
        self.denominator
    }

    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    pub fn entry(&self, idx: &[usize]) -> u64 {
        self.entries[self.spec.flat(idx)]
    }

    pub fn mass(&self, idx: &[usize]) -> Rational {
        Rational::new(self.entry(idx).into(), self.denominator.into())
    }

    /// Integer sums of every axial slice along `axis`.
    pub fn slab_sums(&self, axis: usize) -> Vec<u64> {
        let mut sums = vec![0u64; self.spec.m];
        for (flat, &t) in self.entries.iter().enumerate() {
            let idx = self.spec.index(flat);
            sums[idx[axis]] += t;
        }
        sums
    }

    pub fn to_f64(&self) -> Vec<f64> {
        let d = self.denominator as f64;
        self.entries.iter().map(|&t| t as f64 / d).collect()
    }
}

/// Piecewise-constant density on an `m`-grid with uniform marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    spec: GridSpec,
    values: Vec<Rational>,
    values_f64: Vec<f64>,
}

impl GridDensity {
    /// Each axial slice of densities must sum to `m^(n-1)` (slab integrates to `1/m`).
    pub fn new(spec: GridSpec, values: Vec<Rational>) -> Result<Self> {
        if values.len() != spec.cells() {
            return Err(Error::InvalidInput(format!(
                "expected {} density values, got {}",
                spec.cells(),
                values.len()
            )));
        }
        if values.iter().any(|v| *v < Rational::zero()) {
            return Err(Error::InvalidInput("negative density value".into()));
        }
        let d = GridDensity {
            spec,
            values_f64: values.iter().map(rational::to_f64).collect(),
            values,
        };
        let target = rational::int(spec.m.pow(spec.n as u32 - 1) as i64);
        for axis in 0..spec.n {
            for (j, s) in d.slab_sums(axis).iter().enumerate() {
                if *s != target {
                    return Err(Error::InvalidInput(format!(
                        "density slab sum on axis {axis}, slice {j} is {}, expected {}",
                        rational::format(s),
                        rational::format(&target)
                    )));
                }
            }
        }
        Ok(d)
    }

    /// Constant density 1 (the independence copula) on an `m`-grid.
    pub fn uniform(spec: GridSpec) -> Self {
        GridDensity::new(spec, vec![Rational::one(); spec.cells()]).expect("uniform density is valid")
    }

    /// Density `t(i) m^n / D` of a multi-stochastic tensor.
    pub fn from_grid_measure(g: &GridMeasure) -> Self {
        let spec = g.spec();
        let scale = Rational::new(spec.cells().into(), g.denominator().into());
        let values = g.entries().iter().map(|&t| rational::int(t as i64) * &scale).collect();
        GridDensity::new(spec, values).expect("multi-stochastic tensor yields a valid density")
    }

    /// Density from exact cell masses: `d(i) = mass(i) m^n`.
    pub fn from_cell_masses(spec: GridSpec, masses: &[Rational]) -> Result<Self> {
        let scale = rational::int(spec.cells() as i64);
        GridDensity::new(spec, masses.iter().map(|x| x * &scale).collect())
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn value(&self, idx: &[usize]) -> &Rational {
        &self.values[self.spec.flat(idx)]
    }

    pub fn slab_sums(&self, axis: usize) -> Vec<Rational> {
        let mut sums = vec![Rational::zero(); self.spec.m];
        for (flat, v) in self.values.iter().enumerate() {
            let idx = self.spec.index(flat);
            sums[idx[axis]] += v;
        }
        sums
    }

    /// Same density on a grid `factor` times finer.
    pub fn refine(&self, factor: usize) -> Self {
        let spec = GridSpec {
            n: self.spec.n,
            m: self.spec.m * factor,
        };
        let values = (0..spec.cells())
            .map(|flat| {
                let idx: Vec<usize> = spec.index(flat).iter().map(|i| i / factor).collect();
                self.value(&idx).clone()
            })
            .collect();
        GridDensity {
            spec,
            values_f64: self.values_f64_refined(factor, spec),
            values,
        }
    }

    fn values_f64_refined(&self, factor: usize, spec: GridSpec) -> Vec<f64> {
        (0..spec.cells())
            .map(|flat| {
                let idx: Vec<usize> = spec.index(flat).iter().map(|i| i / factor).collect();
                self.values_f64[self.spec.flat(&idx)]
            })
            .collect()
    }

    pub fn box_mass_exact(&self, rect: &Rect<Rational>) -> Rational {
        let m = rational::int(self.spec.m as i64);
        let per_axis: Vec<Vec<Rational>> = (0..self.spec.n)
            .map(|k| {
                (0..self.spec.m)
                    .map(|j| {
                        let lo = rational::int(j as i64) / &m;
                        let hi = rational::int(j as i64 + 1) / &m;
                        overlap(&lo, &hi, &rect.lo[k], &rect.hi[k])
                    })
                    .collect()
            })
            .collect();
        weighted_sum(&self.values, &per_axis, self.spec)
    }

    pub fn box_mass(&self, rect: &Rect<f64>) -> f64 {
        let m = self.spec.m as f64;
        let per_axis: Vec<Vec<f64>> = (0..self.spec.n)
            .map(|k| {
                (0..self.spec.m)
                    .map(|j| overlap(&(j as f64 / m), &((j + 1) as f64 / m), &rect.lo[k], &rect.hi[k]))
                    .collect()
            })
            .collect();
        weighted_sum(&self.values_f64, &per_axis, self.spec)
    }
}

/// `sum_i v(i) prod_k w_k(i_k)`, skipping empty rows early.
fn weighted_sum<T: Scalar>(values: &[T], per_axis: &[Vec<T>], spec: GridSpec) -> T {
    let mut total = T::zero();
    for (flat, v) in values.iter().enumerate() {
        if *v == T::zero() {
            continue;
        }
        let idx = spec.index(flat);
        let mut w = v.clone();
        for (k, &i) in idx.iter().enumerate() {
            let f = &per_axis[k][i];
            if *f == T::zero() {
                w = T::zero();
                break;
            }
            w = w * f.clone();
        }
        total = total + w;
    }
    total
}

/// `ac_weight * (density measure) + (1 - ac_weight) * singular`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedMeasure {
    ac_weight: Rational,
    density: Option<GridDensity>,
    singular: Option<SegmentMeasure>,
}

impl MixedMeasure {
    pub fn new(ac_weight: Rational, density: Option<GridDensity>, singular: Option<SegmentMeasure>) -> Result<Self> {
        if ac_weight < Rational::zero() || ac_weight > Rational::one() {
            return Err(Error::InvalidInput("ac_weight outside [0,1]".into()));
        }
        if ac_weight.is_zero() != density.is_none() {
            return Err(Error::InvalidInput("ac_weight is zero exactly when the density is absent".into()));
        }
        if ac_weight.is_one() != singular.is_none() {
            return Err(Error::InvalidInput("ac_weight is one exactly when the singular part is absent".into()));
        }
        if let (Some(d), Some(s)) = (&density, &singular) {
            if d.spec().n != s.dim() {
                return Err(Error::DimensionMismatch {
                    expected: d.spec().n,
                    got: s.dim(),
                });
            }
        }
        Ok(MixedMeasure {
            ac_weight,
            density,
            singular,
        })
    }

    pub fn singular_only(s: SegmentMeasure) -> Self {
        MixedMeasure {
            ac_weight: Rational::zero(),
            density: None,
            singular: Some(s),
        }
    }

    pub fn ac_weight(&self) -> &Rational {
        &self.ac_weight
    }

    pub fn density(&self) -> Option<&GridDensity> {
        self.density.as_ref()
    }

    pub fn singular(&self) -> Option<&SegmentMeasure> {
        self.singular.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.density
            .as_ref()
            .map(|d| d.spec().n)
            .or_else(|| self.singular.as_ref().map(|s| s.dim()))
            .expect("validated on construction")
    }

    pub fn is_exact(&self) -> bool {
        self.singular.as_ref().is_none_or(|s| s.is_exact())
    }

    pub fn box_mass_exact(&self, rect: &Rect<Rational>) -> Rational {
        let mut total = Rational::zero();
        if let Some(d) = &self.density {
            total += &self.ac_weight * d.box_mass_exact(rect);
        }
        if let Some(s) = &self.singular {
            total += (Rational::one() - &self.ac_weight) * s.box_mass_exact(rect);
        }
        total
    }

    pub fn box_mass(&self, rect: &Rect<f64>) -> f64 {
        let w = rational::to_f64(&self.ac_weight);
        let mut total = 0.0;
        if let Some(d) = &self.density {
            total += w * d.box_mass(rect);
        }
        if let Some(s) = &self.singular {
            total += (1.0 - w) * s.box_mass(rect);
        }
        total
    }
}
