//! Splitting a copula with an absolutely continuous part into two distinct copulas.
//!
//! Given a square `S` where the density vanishes on less than a quarter of the
//! volume, `g = min(f_1, f_2, f_3, f_4)` over the four translates of the
//! quarter-square is not a.e. zero, and `h_{1,2} = f -/+ g` in the diagonal
//! quadrants and `f +/- g` in the off-diagonal ones are both copula densities
//! averaging to `f`.

use num_integer::Integer;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{flatten, unflatten};
use crate::grid::{GridDensity, GridSpec, MixedMeasure};
use crate::rational::{self, Rational};

/// The closed cube `prod [a_k, a_k + edge]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SquareRegion {
    #[serde(serialize_with = "crate::io::ser_rationals")]
    pub corner: Vec<Rational>,
    #[serde(serialize_with = "crate::io::ser_rational")]
    pub edge: Rational,
}

impl SquareRegion {
    pub fn new(corner: Vec<Rational>, edge: Rational) -> Result<Self> {
        if edge <= Rational::zero() {
            return Err(Error::InvalidInput("square edge must be positive".into()));
        }
        if corner.iter().any(|a| *a < Rational::zero() || a + &edge > Rational::one()) {
            return Err(Error::Domain("square not inside the unit cube".into()));
        }
        Ok(SquareRegion { corner, edge })
    }
}

/// Refinement factor making the square's corner and half-edge grid-aligned on an `m`-grid.
fn alignment_factor(m: usize, square: &SquareRegion) -> usize {
    let mq = rational::int(m as i64);
    let half = &mq * &square.edge / rational::int(2);
    let mut f = half.denom().clone();
    for a in &square.corner {
        f = f.lcm((&mq * a).denom());
    }
    num_traits::ToPrimitive::to_usize(&f).expect("refinement factor fits in usize")
}

/// Fraction of the square's volume where the density is zero.
pub fn zero_fraction(d: &GridDensity, square: &SquareRegion) -> Result<Rational> {
    let view = SquareView::new(d, square)?;
    Ok(view.zero_fraction())
}

/// A square on the refined grid where its corner and half-edge are whole cells.
struct SquareView {
    density: GridDensity,
    corner: Vec<usize>,
    cells: usize,
}

impl SquareView {
    fn new(d: &GridDensity, square: &SquareRegion) -> Result<Self> {
        let n = d.spec().n;
        if square.corner.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: square.corner.len(),
            });
        }
        let factor = alignment_factor(d.spec().m, square);
        let density = if factor == 1 { d.clone() } else { d.refine(factor) };
        let mr = rational::int(density.spec().m as i64);
        let to_cells = |x: &Rational| -> usize {
            let v = x * &mr;
            debug_assert!(v.is_integer());
            num_traits::ToPrimitive::to_usize(&v.to_integer()).expect("cell index fits")
        };
        Ok(SquareView {
            corner: square.corner.iter().map(to_cells).collect(),
            cells: to_cells(&square.edge),
            density,
        })
    }

    fn zero_fraction(&self) -> Rational {
        let n = self.corner.len();
        let total = self.cells.pow(n as u32);
        let zeros = (0..total)
            .filter(|&flat| {
                let off = unflatten(flat, n, self.cells);
                let idx: Vec<usize> = off.iter().zip(&self.corner).map(|(o, c)| o + c).collect();
                self.density.value(&idx).is_zero()
            })
            .count();
        rational::ratio(zeros as i64, total as i64)
    }
}

/// First square (coarsest scale first, then lexicographic corner on the aligned
/// grid) whose zero-density fraction is below `1/4`.
pub fn find_dense_square(d: &GridDensity, scales: &[Rational]) -> Result<Option<SquareRegion>> {
    let n = d.spec().n;
    let mut scales = scales.to_vec();
    scales.sort_by(|a, b| b.cmp(a));
    scales.dedup();
    let quarter = rational::ratio(1, 4);
    for eps in scales {
        if eps <= Rational::zero() || eps > Rational::one() {
            return Err(Error::InvalidInput(format!("scale {} not in (0,1]", rational::format(&eps))));
        }
        let probe = SquareRegion::new(vec![Rational::zero(); n], eps.clone())?;
        let factor = alignment_factor(d.spec().m, &probe);
        let fine = d.refine(factor);
        let mf = fine.spec().m;
        let cells = num_traits::ToPrimitive::to_usize(&(&eps * rational::int(mf as i64)).to_integer())
            .expect("edge in cells fits");
        let positions = mf - cells + 1;
        let counter = ZeroCounter::new(&fine);
        for flat in 0..positions.pow(n as u32) {
            let corner_idx = unflatten(flat, n, positions);
            let zeros = counter.count(&corner_idx, cells);
            let frac = rational::ratio(zeros as i64, cells.pow(n as u32) as i64);
            if frac < quarter {
                let corner = corner_idx.iter().map(|&c| rational::ratio(c as i64, mf as i64)).collect();
                return Ok(Some(SquareRegion::new(corner, eps)?));
            }
        }
    }
    Ok(None)
}

/// n-dimensional prefix sums of the zero indicator.
struct ZeroCounter {
    n: usize,
    side: usize,
    prefix: Vec<usize>,
}

impl ZeroCounter {
    fn new(d: &GridDensity) -> Self {
        let GridSpec { n, m } = d.spec();
        let side = m + 1;
        let mut prefix = vec![0usize; side.pow(n as u32)];
        for flat in 0..prefix.len() {
            let idx = unflatten(flat, n, side);
            if idx.contains(&0) {
                continue;
            }
            let cell: Vec<usize> = idx.iter().map(|i| i - 1).collect();
            let mut v = usize::from(d.value(&cell).is_zero()) as i64;
            // Inclusion-exclusion over the 2^n - 1 lower neighbours.
            for mask in 1..(1usize << n) {
                let mut nb = idx.clone();
                for (k, x) in nb.iter_mut().enumerate() {
                    if mask >> k & 1 == 1 {
                        *x -= 1;
                    }
                }
                let sign = if mask.count_ones() % 2 == 1 { 1 } else { -1 };
                v += sign * prefix[flatten(&nb, side)] as i64;
            }
            prefix[flat] = v as usize;
        }
        ZeroCounter { n, side, prefix }
    }

    fn count(&self, corner: &[usize], cells: usize) -> usize {
        let mut total = 0i64;
        for mask in 0..(1usize << self.n) {
            let idx: Vec<usize> = (0..self.n)
                .map(|k| if mask >> k & 1 == 1 { corner[k] } else { corner[k] + cells })
                .collect();
            let sign = if mask.count_ones() % 2 == 0 { 1 } else { -1 };
            total += sign * self.prefix[flatten(&idx, self.side)] as i64;
        }
        total as usize
    }
}

/// `h1`, `h2` with `(h1 + h2)/2 = f` on the refined grid, and the bump `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionWitness {
    pub h1: GridDensity,
    pub h2: GridDensity,
    /// Values of `g` on the quarter region, axes sized `(e/2, e/2, e, .., e)` cells.
    pub g: Vec<Rational>,
    pub g_shape: Vec<usize>,
    pub square: SquareRegion,
    pub zero_fraction: Rational,
}

impl DecompositionWitness {
    /// Checks `(h1 + h2)/2 = d` cell by cell after refining `d` to the witness grid.
    pub fn averages_to(&self, d: &GridDensity) -> bool {
        let m = self.h1.spec().m;
        if !m.is_multiple_of(d.spec().m) {
            return false;
        }
        let fine = d.refine(m / d.spec().m);
        let two = rational::int(2);
        fine.values()
            .iter()
            .zip(self.h1.values().iter().zip(self.h2.values()))
            .all(|(f, (a, b))| (a + b) / &two == *f)
    }
}

/// Builds the two-copula split of `d` around `square`.
pub fn lemma_decompose(d: &GridDensity, square: &SquareRegion) -> Result<DecompositionWitness> {
    let view = SquareView::new(d, square)?;
    let frac = view.zero_fraction();
    if frac >= rational::ratio(1, 4) {
        return Err(Error::HypothesisViolated(rational::format(&frac)));
    }
    let n = view.corner.len();
    let e = view.cells;
    let half = e / 2;
    let f = &view.density;
    let mut g_shape = vec![e; n];
    g_shape[0] = half;
    g_shape[1] = half;
    let quadrant_offsets = [(0, 0), (half, 0), (0, half), (half, half)];
    let g_len: usize = g_shape.iter().product();
    let mut g = Vec::with_capacity(g_len);
    for flat in 0..g_len {
        let q = unflatten_shape(flat, &g_shape);
        let min = quadrant_offsets
            .iter()
            .map(|&(dx, dy)| {
                let mut idx: Vec<usize> = q.iter().zip(&view.corner).map(|(a, c)| a + c).collect();
                idx[0] += dx;
                idx[1] += dy;
                f.value(&idx).clone()
            })
            .min()
            .expect("four quadrants");
        g.push(min);
    }
    if g.iter().all(|v| v.is_zero()) {
        return Err(Error::HypothesisViolated(rational::format(&frac)));
    }
    let spec = f.spec();
    let mut h1 = f.values().to_vec();
    let mut h2 = f.values().to_vec();
    for (flat, gv) in g.iter().enumerate() {
        if gv.is_zero() {
            continue;
        }
        let q = unflatten_shape(flat, &g_shape);
        for &(dx, dy) in &quadrant_offsets {
            let mut idx: Vec<usize> = q.iter().zip(&view.corner).map(|(a, c)| a + c).collect();
            idx[0] += dx;
            idx[1] += dy;
            let cell = spec.flat(&idx);
            // Diagonal quadrants get -g in h1, off-diagonal ones +g.
            if (dx == 0) == (dy == 0) {
                h1[cell] -= gv;
                h2[cell] += gv;
            } else {
                h1[cell] += gv;
                h2[cell] -= gv;
            }
        }
    }
    Ok(DecompositionWitness {
        h1: GridDensity::new(spec, h1)?,
        h2: GridDensity::new(spec, h2)?,
        g,
        g_shape,
        square: square.clone(),
        zero_fraction: frac,
    })
}

fn unflatten_shape(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for k in (0..shape.len()).rev() {
        idx[k] = flat % shape[k];
        flat /= shape[k];
    }
    idx
}

/// Dyadic edges `1, 1/2, 1/4, ..` not below `floor`.
pub fn dyadic_scales(floor: &Rational) -> Vec<Rational> {
    let mut out = Vec::new();
    let mut eps = Rational::one();
    while eps >= *floor && eps > Rational::zero() {
        out.push(eps.clone());
        eps /= rational::int(2);
    }
    out
}

/// Outcome of the singularity test.
#[derive(Debug, Clone, PartialEq)]
pub enum SingularityVerdict {
    /// The density part splits; the copula is a proper midpoint of two copulas.
    /// The singular part is carried unchanged into both halves.
    NotExtreme {
        witness: DecompositionWitness,
        ac_weight: Rational,
    },
    /// No absolutely continuous part. Singularity is necessary, not sufficient,
    /// so extremality is still undecided.
    NecessaryConditionPassed,
    /// An absolutely continuous part exists but no dense square was found at
    /// scales down to `finest_scale`.
    Inconclusive { finest_scale: Rational },
}

/// Runs the dense-square search on the density part of `mm`.
///
/// `floor` defaults to `1/m`, i.e. edge `2/(2m)` after one 2x refinement.
pub fn singularity_diagnostic(mm: &MixedMeasure, floor: Option<&Rational>) -> Result<SingularityVerdict> {
    let Some(d) = mm.density().filter(|_| !mm.ac_weight().is_zero()) else {
        return Ok(SingularityVerdict::NecessaryConditionPassed);
    };
    let floor = floor
        .cloned()
        .unwrap_or_else(|| rational::ratio(1, d.spec().m as i64));
    let scales = dyadic_scales(&floor);
    match find_dense_square(d, &scales)? {
        Some(square) => Ok(SingularityVerdict::NotExtreme {
            witness: lemma_decompose(d, &square)?,
            ac_weight: mm.ac_weight().clone(),
        }),
        None => Ok(SingularityVerdict::Inconclusive {
            finest_scale: scales.last().cloned().unwrap_or(floor),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn checkerboard() -> GridDensity {
        GridDensity::new(GridSpec::new(2, 2).unwrap(), vec![int(2), int(0), int(0), int(2)]).unwrap()
    }

    #[test]
    fn uniform_density_dense_at_unit_scale() {
        let d = GridDensity::uniform(GridSpec::new(2, 1).unwrap());
        let s = find_dense_square(&d, &[int(1)]).unwrap().unwrap();
        assert_eq!(s.corner, vec![int(0), int(0)]);
        assert_eq!(s.edge, int(1));
        assert_eq!(zero_fraction(&d, &s).unwrap(), int(0));
    }

    #[test]
    fn checkerboard_needs_refinement() {
        let d = checkerboard();
        assert!(find_dense_square(&d, &[int(1)]).unwrap().is_none());
        let s = find_dense_square(&d, &[int(1), ratio(1, 2)]).unwrap().unwrap();
        assert_eq!(s.edge, ratio(1, 2));
        assert_eq!(s.corner, vec![int(0), int(0)]);
        assert_eq!(zero_fraction(&d, &s).unwrap(), int(0));
    }

    #[test]
    fn uniform_split_is_a_pair_of_checkerboards() {
        let d = GridDensity::uniform(GridSpec::new(2, 1).unwrap());
        let s = SquareRegion::new(vec![int(0), int(0)], int(1)).unwrap();
        let w = lemma_decompose(&d, &s).unwrap();
        assert_eq!(w.h1.spec().m, 2);
        assert_eq!(w.h1.values(), &[int(0), int(2), int(2), int(0)]);
        assert_eq!(w.h2.values(), &[int(2), int(0), int(0), int(2)]);
        assert_eq!(w.g, vec![int(1)]);
        assert!(w.averages_to(&d));
    }

    #[test]
    fn checkerboard_violates_hypothesis_at_unit_scale() {
        let s = SquareRegion::new(vec![int(0), int(0)], int(1)).unwrap();
        match lemma_decompose(&checkerboard(), &s) {
            Err(Error::HypothesisViolated(frac)) => assert_eq!(frac, "1/2"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn decomposes_in_three_dimensions() {
        let d = GridDensity::uniform(GridSpec::new(3, 2).unwrap());
        let s = SquareRegion::new(vec![int(0), int(0), int(0)], int(1)).unwrap();
        let w = lemma_decompose(&d, &s).unwrap();
        assert_eq!(w.g_shape, vec![1, 1, 2]);
        assert!(w.averages_to(&d));
        assert_ne!(w.h1, w.h2);
    }

    #[test]
    fn off_grid_square_is_refined() {
        let d = GridDensity::uniform(GridSpec::new(2, 2).unwrap());
        let s = SquareRegion::new(vec![ratio(1, 3), ratio(1, 6)], ratio(1, 3)).unwrap();
        let w = lemma_decompose(&d, &s).unwrap();
        assert_eq!(w.h1.spec().m, 6);
        assert!(w.averages_to(&d));
    }

    #[test]
    fn dyadic_scale_list() {
        assert_eq!(dyadic_scales(&ratio(1, 4)), vec![int(1), ratio(1, 2), ratio(1, 4)]);
        assert_eq!(dyadic_scales(&ratio(1, 3)), vec![int(1), ratio(1, 2)]);
    }

    #[test]
    fn purely_singular_passes_necessary_condition() {
        let sm = crate::constructions::tent_copula(&ratio(1, 2), 2).unwrap();
        let v = singularity_diagnostic(&MixedMeasure::singular_only(sm), None).unwrap();
        assert_eq!(v, SingularityVerdict::NecessaryConditionPassed);
    }

    #[test]
    fn coarse_floor_can_be_inconclusive() {
        let mm = MixedMeasure::new(int(1), Some(checkerboard()), None).unwrap();
        let v = singularity_diagnostic(&mm, Some(&int(1))).unwrap();
        assert_eq!(v, SingularityVerdict::Inconclusive { finest_scale: int(1) });
        let v = singularity_diagnostic(&mm, None).unwrap();
        assert!(matches!(v, SingularityVerdict::NotExtreme { .. }));
    }
}
