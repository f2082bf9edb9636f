//! Sufficient condition for extremality: slabs over which the support is a graph.

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::segment::{Segment, SegmentMeasure};

pub type Interval = (Rational, Rational);

/// Where the support fails to be a graph over one axis.
#[derive(Debug, Clone, Default)]
struct Obstructions {
    /// Merged open intervals where two segments project on top of each other and disagree.
    conflicts: Vec<Interval>,
    /// Axis values carrying a whole positive-weight segment.
    fibers: Vec<Rational>,
}

impl Obstructions {
    fn blocks(&self, lo: &Rational, hi: &Rational) -> bool {
        self.fibers.iter().any(|x| lo <= x && x <= hi)
            || self.conflicts.iter().any(|(a, b)| a.max(lo) < b.min(hi))
    }
}

/// The segment's point whose `axis` coordinate equals `x`.
fn point_over(s: &Segment, axis: usize, x: &Rational) -> Vec<Rational> {
    let t = (x - &s.a()[axis]) / (&s.b()[axis] - &s.a()[axis]);
    s.point_at(&t)
}

fn projection(s: &Segment, axis: usize) -> Interval {
    let (p, q) = (&s.a()[axis], &s.b()[axis]);
    if p <= q {
        (p.clone(), q.clone())
    } else {
        (q.clone(), p.clone())
    }
}

fn obstructions(sm: &SegmentMeasure, axis: usize) -> Obstructions {
    let mut out = Obstructions::default();
    let mut moving = Vec::new();
    for s in sm.segments().iter().filter(|s| !s.weight().is_zero()) {
        let (lo, hi) = projection(s, axis);
        if lo == hi {
            out.fibers.push(lo);
        } else {
            moving.push((lo, hi, s));
        }
    }
    moving.sort_by(|x, y| x.0.cmp(&y.0).then_with(|| x.1.cmp(&y.1)));
    let mut active: Vec<&(Rational, Rational, &Segment)> = Vec::new();
    let mut conflicts = Vec::new();
    for cur in &moving {
        active.retain(|a| a.1 > cur.0);
        for a in &active {
            let lo = cur.0.clone();
            let hi = if a.1 < cur.1 { a.1.clone() } else { cur.1.clone() };
            // Both are affine over the overlap, so agreement at the ends means agreement throughout.
            let agree = point_over(a.2, axis, &lo) == point_over(cur.2, axis, &lo)
                && point_over(a.2, axis, &hi) == point_over(cur.2, axis, &hi);
            if !agree {
                conflicts.push((lo, hi));
            }
        }
        active.push(cur);
    }
    out.conflicts = merge(conflicts);
    out.fibers.sort();
    out.fibers.dedup();
    out
}

/// Sorts and merges overlapping or touching intervals.
pub fn merge(mut v: Vec<Interval>) -> Vec<Interval> {
    v.sort();
    let mut out: Vec<Interval> = Vec::with_capacity(v.len());
    for (lo, hi) in v {
        match out.last_mut() {
            Some(last) if lo <= last.1 => {
                if hi > last.1 {
                    last.1 = hi;
                }
            }
            _ => out.push((lo, hi)),
        }
    }
    out
}

/// Whether every fiber `x_axis = t` with `t` in `B` meets the support at most once.
pub fn is_functional_over(sm: &SegmentMeasure, axis: usize, b: &[Interval]) -> Result<bool> {
    if axis >= sm.dim() {
        return Err(Error::InvalidInput(format!("axis {axis} out of range for dimension {}", sm.dim())));
    }
    if b.iter().any(|(lo, hi)| *lo < Rational::zero() || *hi > Rational::one() || lo > hi) {
        return Err(Error::Domain("B must be a union of intervals in [0,1]".into()));
    }
    let obs = obstructions(sm, axis);
    Ok(!merge(b.to_vec()).iter().any(|(lo, hi)| obs.blocks(lo, hi)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalCoverCertificate {
    pub r: usize,
    /// Per axis, the merged union of dyadic intervals over which the support is a graph.
    #[serde(serialize_with = "crate::io::ser_interval_sets")]
    pub b: Vec<Vec<Interval>>,
    pub covered: bool,
    /// First positive-weight segment not covered by the slabs, if any.
    pub uncovered_segment: Option<usize>,
}

/// Greedy cover: `B_i` is every dyadic interval of width `1/r` over which the
/// support is functional along axis `i`.
pub fn functional_cover_check(sm: &SegmentMeasure, r: usize) -> Result<FunctionalCoverCertificate> {
    if !r.is_power_of_two() {
        return Err(Error::InvalidInput(format!("resolution {r} is not a power of 2")));
    }
    let n = sm.dim();
    let rq = r as i64;
    let b: Vec<Vec<Interval>> = (0..n)
        .map(|axis| {
            let obs = obstructions(sm, axis);
            merge(
                (0..rq)
                    .map(|j| (rational::ratio(j, rq), rational::ratio(j + 1, rq)))
                    .filter(|(lo, hi)| !obs.blocks(lo, hi))
                    .collect(),
            )
        })
        .collect();
    let uncovered_segment = sm
        .segments()
        .iter()
        .enumerate()
        .filter(|(_, s)| !s.weight().is_zero())
        .find(|(_, s)| !segment_covered(s, &b))
        .map(|(i, _)| i);
    Ok(FunctionalCoverCertificate {
        r,
        b,
        covered: uncovered_segment.is_none(),
        uncovered_segment,
    })
}

/// Parameters `t` with `x_axis(t)` in some slab of `b_axis`, for any axis, cover `[0,1]` up to a null set.
fn segment_covered(s: &Segment, b: &[Vec<Interval>]) -> bool {
    let mut params = Vec::new();
    for (axis, slabs) in b.iter().enumerate() {
        let (a0, b0) = (&s.a()[axis], &s.b()[axis]);
        let d = b0 - a0;
        for (lo, hi) in slabs {
            if d.is_zero() {
                if lo <= a0 && a0 <= hi {
                    return true;
                }
                continue;
            }
            let p = (lo - a0) / &d;
            let q = (hi - a0) / &d;
            let (p, q) = if p <= q { (p, q) } else { (q, p) };
            let p = p.max(Rational::zero());
            let q = q.min(Rational::one());
            if p < q {
                params.push((p, q));
            }
        }
    }
    let total: Rational = merge(params).into_iter().map(|(p, q)| q - p).sum();
    total.is_one()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{four_line_3d, permutation_copula, tent_copula, PermutationCopulaSpec};
    use crate::rational::{int, ratio};

    fn unit() -> Vec<Interval> {
        vec![(int(0), int(1))]
    }

    fn comonotone() -> SegmentMeasure {
        SegmentMeasure::new(2, vec![Segment::new(vec![int(0), int(0)], vec![int(1), int(1)], int(1)).unwrap()])
            .unwrap()
    }

    #[test]
    fn functional_examples() {
        assert!(is_functional_over(&comonotone(), 0, &unit()).unwrap());
        let tent = tent_copula(&ratio(1, 2), 2).unwrap();
        assert!(is_functional_over(&tent, 0, &unit()).unwrap());
        assert!(!is_functional_over(&tent, 1, &unit()).unwrap());
        let fl = four_line_3d();
        for axis in 0..3 {
            assert!(!is_functional_over(&fl, axis, &unit()).unwrap());
        }
    }

    #[test]
    fn identical_overlaps_are_not_conflicts() {
        let s = Segment::new(vec![int(0), int(0)], vec![int(1), int(1)], ratio(1, 2)).unwrap();
        let t = Segment::new(vec![ratio(1, 4), ratio(1, 4)], vec![ratio(3, 4), ratio(3, 4)], ratio(1, 2)).unwrap();
        let sm = SegmentMeasure::new(2, vec![s, t]).unwrap();
        assert!(is_functional_over(&sm, 0, &unit()).unwrap());
    }

    #[test]
    fn vertical_segment_blocks_its_fiber() {
        let s = Segment::new(vec![ratio(1, 2), int(0)], vec![ratio(1, 2), int(1)], int(1)).unwrap();
        let sm = SegmentMeasure::new(2, vec![s]).unwrap();
        assert!(!is_functional_over(&sm, 0, &unit()).unwrap());
        assert!(is_functional_over(&sm, 0, &[(int(0), ratio(1, 4))]).unwrap());
        assert!(is_functional_over(&sm, 1, &unit()).unwrap());
    }

    #[test]
    fn cover_examples() {
        let cert = functional_cover_check(&tent_copula(&ratio(1, 2), 2).unwrap(), 8).unwrap();
        assert!(cert.covered);
        assert_eq!(cert.b[0], unit());
        assert!(cert.b[1].is_empty());

        let cert = functional_cover_check(&four_line_3d(), 8).unwrap();
        assert!(!cert.covered);

        let spec = PermutationCopulaSpec::new(4, vec![vec![2, 0, 3, 1]]).unwrap();
        let cert = functional_cover_check(&permutation_copula(&spec).unwrap(), 4).unwrap();
        assert!(cert.covered);
        assert_eq!(cert.b[0], unit());
    }

    #[test]
    fn partial_tent_cover_uses_both_axes() {
        // Tent on axis 2 is functional nowhere, but axis 1 alone covers it.
        let tent = tent_copula(&ratio(1, 3), 2).unwrap();
        let cert = functional_cover_check(&tent, 4).unwrap();
        assert!(cert.covered);
    }

    #[test]
    fn rejects_non_dyadic_resolution() {
        assert!(functional_cover_check(&comonotone(), 6).is_err());
    }
}
