//! Copula models and the measure-level operations on them: CDF evaluation,
//! box and slab masses, marginal validation, lattice `d_inf` distance and grid
//! extraction.

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::constructions::GraphCopula;
use crate::error::{Error, Result};
use crate::geometry::{check_unit_point, overlap, Rect, Scalar};
use crate::grid::{GridDensity, GridSpec, MixedMeasure};
use crate::rational::{self, Rational};
use crate::segment::SegmentMeasure;

/// A copula given either by a closed form or by one of the measure representations.
#[derive(Debug, Clone)]
pub enum CopulaModel {
    /// Product copula `prod u_k`.
    Independence { n: usize },
    /// Upper Frechet bound `min u_k`.
    Comonotone { n: usize },
    /// Lower Frechet bound `max(u + v - 1, 0)`, bivariate only.
    Countermonotone,
    /// Farlie-Gumbel-Morgenstern `uv(1 + theta (1-u)(1-v))`, bivariate.
    Fgm { theta: Rational },
    Segments(SegmentMeasure),
    Density(GridDensity),
    Mixed(MixedMeasure),
    Graph(GraphCopula),
}

impl CopulaModel {
    pub fn independence(n: usize) -> Result<Self> {
        check_dim(n)?;
        Ok(CopulaModel::Independence { n })
    }

    pub fn comonotone(n: usize) -> Result<Self> {
        check_dim(n)?;
        Ok(CopulaModel::Comonotone { n })
    }

    pub fn fgm(theta: Rational) -> Result<Self> {
        if theta.abs() > Rational::one() {
            return Err(Error::Domain(format!(
                "FGM parameter {} outside [-1,1]",
                rational::format(&theta)
            )));
        }
        Ok(CopulaModel::Fgm { theta })
    }

    pub fn dim(&self) -> usize {
        match self {
            CopulaModel::Independence { n } | CopulaModel::Comonotone { n } => *n,
            CopulaModel::Countermonotone | CopulaModel::Fgm { .. } => 2,
            CopulaModel::Segments(s) => s.dim(),
            CopulaModel::Density(d) => d.spec().n,
            CopulaModel::Mixed(m) => m.dim(),
            CopulaModel::Graph(g) => g.dim(),
        }
    }

    /// Whether every parameter is an exact rational (no float-sourced inputs).
    pub fn is_exact(&self) -> bool {
        match self {
            CopulaModel::Segments(s) => s.is_exact(),
            CopulaModel::Mixed(m) => m.is_exact(),
            _ => true,
        }
    }

    /// Errors when a segment-backed part does not have total weight one.
    pub fn check_normalized(&self) -> Result<()> {
        match self {
            CopulaModel::Segments(s) => s.check_normalized(),
            CopulaModel::Mixed(m) => m.singular().map_or(Ok(()), |s| s.check_normalized()),
            _ => Ok(()),
        }
    }

    /// `C(u)`, the mass of `[0, u]`.
    pub fn cdf(&self, u: &[f64]) -> Result<f64> {
        self.check_point(u.len())?;
        check_unit_point(u)?;
        Ok(self.cdf_unchecked(u))
    }

    pub(crate) fn cdf_unchecked(&self, u: &[f64]) -> f64 {
        match self {
            CopulaModel::Independence { .. } => u.iter().product(),
            CopulaModel::Comonotone { .. } => u.iter().cloned().fold(1.0, f64::min),
            CopulaModel::Countermonotone => (u[0] + u[1] - 1.0).max(0.0),
            CopulaModel::Fgm { theta } => fgm_cdf(&rational::to_f64(theta), &u[0], &u[1]),
            CopulaModel::Segments(s) => s.cdf(u),
            _ => self.box_mass_unchecked(&Rect::lower_orthant(u).expect("point checked")),
        }
    }

    pub fn cdf_exact(&self, u: &[Rational]) -> Result<Rational> {
        self.check_point(u.len())?;
        let rect = Rect::lower_orthant(u)?;
        Ok(match self {
            CopulaModel::Fgm { theta } => fgm_cdf(theta, &u[0], &u[1]),
            _ => self.box_mass_exact_unchecked(&rect),
        })
    }

    /// Mass of `rect`, computed directly (not through CDF corners).
    pub fn box_mass(&self, rect: &Rect<f64>) -> Result<f64> {
        self.check_point(rect.dim())?;
        Ok(self.box_mass_unchecked(rect))
    }

    fn box_mass_unchecked(&self, rect: &Rect<f64>) -> f64 {
        match self {
            CopulaModel::Independence { .. } => independence_mass(rect),
            CopulaModel::Comonotone { .. } => comonotone_mass(rect),
            CopulaModel::Countermonotone => countermonotone_mass(rect),
            CopulaModel::Fgm { theta } => fgm_mass(&rational::to_f64(theta), rect),
            CopulaModel::Segments(s) => s.box_mass(rect),
            CopulaModel::Density(d) => d.box_mass(rect),
            CopulaModel::Mixed(m) => m.box_mass(rect),
            CopulaModel::Graph(g) => g.box_mass(rect),
        }
    }

    pub fn box_mass_exact(&self, rect: &Rect<Rational>) -> Result<Rational> {
        self.check_point(rect.dim())?;
        Ok(self.box_mass_exact_unchecked(rect))
    }

    fn box_mass_exact_unchecked(&self, rect: &Rect<Rational>) -> Rational {
        match self {
            CopulaModel::Independence { .. } => independence_mass(rect),
            CopulaModel::Comonotone { .. } => comonotone_mass(rect),
            CopulaModel::Countermonotone => countermonotone_mass(rect),
            CopulaModel::Fgm { theta } => fgm_mass(theta, rect),
            CopulaModel::Segments(s) => s.box_mass_exact(rect),
            CopulaModel::Density(d) => d.box_mass_exact(rect),
            CopulaModel::Mixed(m) => m.box_mass_exact(rect),
            CopulaModel::Graph(g) => g.box_mass_exact(rect),
        }
    }

    /// Box mass by inclusion-exclusion over the `2^n` CDF corners.
    pub fn box_mass_by_cdf(&self, rect: &Rect<f64>) -> Result<f64> {
        self.check_point(rect.dim())?;
        let n = rect.dim();
        let mut total = 0.0;
        let mut corner = vec![0.0; n];
        for mask in 0..(1usize << n) {
            let mut lows = 0;
            for k in 0..n {
                if mask >> k & 1 == 1 {
                    corner[k] = rect.lo[k];
                    lows += 1;
                } else {
                    corner[k] = rect.hi[k];
                }
            }
            let c = self.cdf_unchecked(&corner);
            total += if lows % 2 == 0 { c } else { -c };
        }
        Ok(total)
    }

    fn check_point(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: len,
            });
        }
        Ok(())
    }
}

fn check_dim(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("dimension {n} < 2")));
    }
    Ok(())
}

fn fgm_cdf<T: Scalar>(theta: &T, u: &T, v: &T) -> T {
    let one = T::one();
    u.clone() * v.clone() * (one.clone() + theta.clone() * (one.clone() - u.clone()) * (one - v.clone()))
}

fn independence_mass<T: Scalar>(r: &Rect<T>) -> T {
    r.lo.iter()
        .zip(&r.hi)
        .fold(T::one(), |acc, (l, h)| acc * (h.clone() - l.clone()))
}

fn comonotone_mass<T: Scalar>(r: &Rect<T>) -> T {
    let lo = r.lo.iter().fold(T::zero(), |a, x| if *x > a { x.clone() } else { a });
    let hi = r.hi.iter().fold(T::one(), |a, x| if *x < a { x.clone() } else { a });
    if hi > lo {
        hi - lo
    } else {
        T::zero()
    }
}

fn countermonotone_mass<T: Scalar>(r: &Rect<T>) -> T {
    let one = T::one();
    overlap(
        &r.lo[0],
        &r.hi[0],
        &(one.clone() - r.hi[1].clone()),
        &(one - r.lo[1].clone()),
    )
}

/// Integral of the FGM density `1 + theta (1-2u)(1-2v)` over the box.
fn fgm_mass<T: Scalar>(theta: &T, r: &Rect<T>) -> T {
    let side = |l: &T, h: &T| (h.clone() - l.clone()) - (h.clone() * h.clone() - l.clone() * l.clone());
    let area = independence_mass(r);
    area + theta.clone() * side(&r.lo[0], &r.hi[0]) * side(&r.lo[1], &r.hi[1])
}

/// Exact masses of the slabs `[j/m, (j+1)/m)` along `axis`.
pub fn slice_masses_exact(c: &CopulaModel, axis: usize, m: usize) -> Result<Vec<Rational>> {
    let n = c.dim();
    if axis >= n {
        return Err(Error::InvalidInput(format!("axis {axis} out of range for dimension {n}")));
    }
    if m == 0 {
        return Err(Error::InvalidInput("resolution must be at least 1".into()));
    }
    match c {
        CopulaModel::Segments(s) => Ok(s.slab_masses_exact(axis, m)),
        CopulaModel::Mixed(mm) if mm.density().is_none() => Ok(mm
            .singular()
            .expect("singular present when density absent")
            .slab_masses_exact(axis, m)),
        _ => (0..m)
            .map(|j| {
                let slab = Rect::slab(
                    n,
                    axis,
                    rational::ratio(j as i64, m as i64),
                    rational::ratio(j as i64 + 1, m as i64),
                )?;
                c.box_mass_exact(&slab)
            })
            .collect(),
    }
}

/// Masses of the `m` slabs along `axis`; each is `1/m` for a copula.
pub fn marginal_slice_masses(c: &CopulaModel, axis: usize, m: usize) -> Result<Vec<f64>> {
    Ok(slice_masses_exact(c, axis, m)?.iter().map(rational::to_f64).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub max_deviation: f64,
    /// `(axis, slab)` with the largest deviation from `1/m`.
    pub worst: (usize, usize),
    /// Largest deviation as an exact rational string.
    pub max_deviation_exact: String,
}

/// Checks every axial slab of width `1/m` carries mass `1/m` within `tol`.
///
/// Deviations are computed exactly, so `tol = 0` demands exact equality.
pub fn validate_copula_measure(c: &CopulaModel, m: usize, tol: f64) -> Result<ValidationReport> {
    if m == 0 {
        return Err(Error::InvalidInput("resolution must be at least 1".into()));
    }
    if tol.is_nan() || tol < 0.0 {
        return Err(Error::InvalidInput(format!("tolerance {tol} must be non-negative")));
    }
    c.check_normalized()?;
    let target = rational::ratio(1, m as i64);
    let mut worst = (0, 0);
    let mut max_dev = Rational::zero();
    for axis in 0..c.dim() {
        for (j, mass) in slice_masses_exact(c, axis, m)?.iter().enumerate() {
            let dev = (mass - &target).abs();
            if dev > max_dev {
                max_dev = dev;
                worst = (axis, j);
            }
        }
    }
    let tol_q = rational::from_f64(tol)?;
    Ok(ValidationReport {
        ok: max_dev <= tol_q,
        max_deviation: rational::to_f64(&max_dev),
        worst,
        max_deviation_exact: rational::format(&max_dev),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DinfReport {
    /// Max of `|C_a - C_b|` over the `(r+1)^n` lattice.
    pub estimate: f64,
    /// `estimate + n/r`, from 1-Lipschitz continuity in each coordinate.
    pub certified_bound: f64,
    pub argmax: Vec<f64>,
    pub resolution: usize,
}

/// Lattice estimate of the uniform distance between two copulas.
pub fn dinf_distance(a: &CopulaModel, b: &CopulaModel, r: usize) -> Result<DinfReport> {
    let n = a.dim();
    if b.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.dim(),
        });
    }
    if r == 0 {
        return Err(Error::InvalidInput("lattice resolution must be at least 1".into()));
    }
    let side = r + 1;
    let points = side
        .checked_pow(n as u32)
        .ok_or_else(|| Error::InvalidInput("lattice too large".into()))?;
    let rf = r as f64;
    let (estimate, arg) = (0..points)
        .into_par_iter()
        .map(|flat| {
            let u: Vec<f64> = crate::geometry::unflatten(flat, n, side)
                .iter()
                .map(|&i| i as f64 / rf)
                .collect();
            ((a.cdf_unchecked(&u) - b.cdf_unchecked(&u)).abs(), flat)
        })
        .reduce(|| (f64::NEG_INFINITY, usize::MAX), max_first);
    let argmax = crate::geometry::unflatten(arg, n, side)
        .iter()
        .map(|&i| i as f64 / rf)
        .collect();
    Ok(DinfReport {
        estimate,
        certified_bound: estimate + n as f64 / rf,
        argmax,
        resolution: r,
    })
}

/// Larger value wins; ties go to the smaller lattice index so the result does
/// not depend on the reduction order.
fn max_first(x: (f64, usize), y: (f64, usize)) -> (f64, usize) {
    if x.0 > y.0 || (x.0 == y.0 && x.1 < y.1) {
        x
    } else {
        y
    }
}

/// Exact lattice maximum of `|C_a - C_b|` for rational-backed models.
pub fn dinf_lattice_exact(a: &CopulaModel, b: &CopulaModel, r: usize) -> Result<Rational> {
    let n = a.dim();
    if b.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.dim(),
        });
    }
    let side = r + 1;
    let mut best = Rational::zero();
    for flat in 0..side.pow(n as u32) {
        let u: Vec<Rational> = crate::geometry::unflatten(flat, n, side)
            .iter()
            .map(|&i| rational::ratio(i as i64, r as i64))
            .collect();
        let d = (a.cdf_exact(&u)? - b.cdf_exact(&u)?).abs();
        if d > best {
            best = d;
        }
    }
    Ok(best)
}

/// Cell masses `M(i) = P(cell i)` on the `m`-grid, lexicographic order.
pub fn grid_extract(c: &CopulaModel, m: usize) -> Result<Vec<f64>> {
    let spec = GridSpec::new(c.dim(), m)?;
    Ok((0..spec.cells())
        .into_par_iter()
        .map(|flat| c.box_mass_unchecked(&Rect::<f64>::cell(&spec.index(flat), m)))
        .collect())
}

pub fn grid_extract_exact(c: &CopulaModel, m: usize) -> Result<Vec<Rational>> {
    let spec = GridSpec::new(c.dim(), m)?;
    Ok((0..spec.cells())
        .map(|flat| c.box_mass_exact_unchecked(&Rect::<Rational>::cell(&spec.index(flat), m)))
        .collect())
}
