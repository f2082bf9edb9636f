//! Extremality-preserving rearrangements of segment measures: cyclic shifts and
//! slab swaps. Both split segments where they cross the relevant boundaries.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::segment::{Segment, SegmentMeasure};

/// `P_alpha(B) = P(B + alpha)` with coordinates taken mod 1: the support moves by `-alpha`.
pub fn shift_transform(c: &SegmentMeasure, alpha: &[Rational]) -> Result<SegmentMeasure> {
    let n = c.dim();
    if alpha.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: alpha.len(),
        });
    }
    let alpha: Vec<Rational> = alpha.iter().map(|a| a - a.floor()).collect();
    let mut out = Vec::new();
    for s in c.segments() {
        if s.weight().is_zero() {
            continue;
        }
        let start: Vec<Rational> = s.a().iter().zip(&alpha).map(|(a, al)| a - al).collect();
        let dir: Vec<Rational> = s.a().iter().zip(s.b()).map(|(a, b)| b - a).collect();
        // Parameters where some shifted coordinate crosses an integer.
        let mut cuts = Vec::new();
        for k in 0..n {
            if dir[k].is_zero() {
                continue;
            }
            let end = &start[k] + &dir[k];
            let (lo, hi) = if start[k] < end { (&start[k], &end) } else { (&end, &start[k]) };
            let mut z = lo.floor() + Rational::one();
            while z < *hi {
                cuts.push((&z - &start[k]) / &dir[k]);
                z += Rational::one();
            }
        }
        for (t0, t1) in pieces(cuts) {
            let mid = (&t0 + &t1) / rational::int(2);
            let offset: Vec<Rational> = (0..n).map(|k| (&start[k] + &dir[k] * &mid).floor()).collect();
            let at = |t: &Rational| -> Vec<Rational> {
                (0..n).map(|k| &start[k] + &dir[k] * t - &offset[k]).collect()
            };
            out.push(Segment::new(at(&t0), at(&t1), s.weight() * (&t1 - &t0))?);
        }
    }
    SegmentMeasure::with_exactness(n, out, c.is_exact())
}

/// Exchanges the slabs `x_axis in [a, a+delta]` and `x_axis in [b, b+delta]`.
///
/// The map is an involution, so applying it twice returns the input measure.
pub fn swap_transform(
    c: &SegmentMeasure,
    axis: usize,
    a: &Rational,
    b: &Rational,
    delta: &Rational,
) -> Result<SegmentMeasure> {
    let n = c.dim();
    if axis >= n {
        return Err(Error::InvalidInput(format!("axis {axis} out of range for dimension {n}")));
    }
    if *delta <= Rational::zero() {
        return Err(Error::InvalidInput("slab width must be positive".into()));
    }
    for x in [a, b] {
        if *x < Rational::zero() || x + delta > Rational::one() {
            return Err(Error::Domain("swap slab not inside [0,1]".into()));
        }
    }
    if (a - b).abs() < *delta {
        return Err(Error::InvalidInput("overlapping slabs".into()));
    }
    let a_hi = a + delta;
    let b_hi = b + delta;
    let shift_for = |x: &Rational, half_open: bool| -> Rational {
        let inside = |lo: &Rational, hi: &Rational| {
            if half_open {
                lo <= x && x < hi
            } else {
                lo < x && x < hi
            }
        };
        if inside(a, &a_hi) {
            b - a
        } else if inside(b, &b_hi) {
            a - b
        } else {
            Rational::zero()
        }
    };
    let mut out = Vec::new();
    for s in c.segments() {
        if s.weight().is_zero() {
            continue;
        }
        let x0 = &s.a()[axis];
        let d = &s.b()[axis] - x0;
        if d.is_zero() {
            let shift = shift_for(x0, true);
            let moved = |p: &[Rational]| -> Vec<Rational> {
                let mut p = p.to_vec();
                p[axis] += &shift;
                p
            };
            out.push(Segment::new(moved(s.a()), moved(s.b()), s.weight().clone())?);
            continue;
        }
        let cuts: Vec<Rational> = [a, &a_hi, b, &b_hi].iter().map(|edge| (*edge - x0) / &d).collect();
        for (t0, t1) in pieces(cuts) {
            let mid = (&t0 + &t1) / rational::int(2);
            let shift = shift_for(&(x0 + &d * &mid), false);
            let mut p0 = s.point_at(&t0);
            let mut p1 = s.point_at(&t1);
            p0[axis] += &shift;
            p1[axis] += &shift;
            out.push(Segment::new(p0, p1, s.weight() * (&t1 - &t0))?);
        }
    }
    SegmentMeasure::with_exactness(n, out, c.is_exact())
}

/// Consecutive parameter intervals of `[0,1]` split at the cuts lying strictly inside.
fn pieces(mut cuts: Vec<Rational>) -> Vec<(Rational, Rational)> {
    cuts.retain(|t| *t > Rational::zero() && *t < Rational::one());
    cuts.sort();
    cuts.dedup();
    let mut bounds = vec![Rational::zero()];
    bounds.extend(cuts);
    bounds.push(Rational::one());
    bounds.windows(2).map(|w| (w[0].clone(), w[1].clone())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{shuffle_copula, tent_copula};
    use crate::copula::CopulaModel;
    use crate::rational::{int, ratio};

    fn comonotone() -> SegmentMeasure {
        shuffle_copula(&[int(0), int(1)], &[], 2).unwrap()
    }

    #[test]
    fn zero_shift_is_identity() {
        let t = tent_copula(&ratio(1, 3), 2).unwrap();
        assert_eq!(shift_transform(&t, &[int(0), int(0)]).unwrap(), t);
    }

    #[test]
    fn half_shift_of_comonotone() {
        let s = shift_transform(&comonotone(), &[ratio(1, 2), ratio(1, 2)]).unwrap();
        assert_eq!(s.segments().len(), 2);
        let c = CopulaModel::Segments(s);
        assert_eq!(c.cdf_exact(&[ratio(1, 2), ratio(1, 2)]).unwrap(), ratio(1, 2));
    }

    #[test]
    fn shift_splits_at_every_wrap() {
        let s = shift_transform(&comonotone(), &[ratio(1, 4), ratio(3, 4)]).unwrap();
        assert_eq!(s.segments().len(), 3);
        assert_eq!(s.total_weight(), int(1));
    }

    #[test]
    fn swap_rejects_overlap() {
        let m = comonotone();
        assert!(swap_transform(&m, 0, &ratio(1, 4), &ratio(1, 4), &ratio(1, 4)).is_err());
        assert!(swap_transform(&m, 0, &ratio(1, 4), &ratio(3, 8), &ratio(1, 4)).is_err());
        assert!(swap_transform(&m, 0, &ratio(0, 1), &ratio(7, 8), &ratio(1, 4)).is_err());
        assert!(swap_transform(&m, 2, &int(0), &ratio(1, 2), &ratio(1, 4)).is_err());
    }

    #[test]
    fn swap_moves_diagonal_block() {
        let s = swap_transform(&comonotone(), 0, &int(0), &ratio(1, 2), &ratio(1, 4)).unwrap();
        let c = CopulaModel::Segments(s);
        assert_eq!(c.cdf_exact(&[ratio(1, 4), ratio(1, 4)]).unwrap(), int(0));
    }

    #[test]
    fn swap_of_axis_constant_segment() {
        let seg = Segment::new(vec![ratio(1, 8), int(0)], vec![ratio(1, 8), int(1)], int(1)).unwrap();
        let sm = SegmentMeasure::new(2, vec![seg]).unwrap();
        let s = swap_transform(&sm, 0, &int(0), &ratio(1, 2), &ratio(1, 4)).unwrap();
        assert_eq!(s.segments()[0].a()[0], ratio(5, 8));
    }
}
