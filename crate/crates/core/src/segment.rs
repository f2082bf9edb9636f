//! Finite weighted unions of line segments carrying uniform arclength mass.
//!
//! Every singular extreme copula built by this crate is a [`SegmentMeasure`].
//! Coordinates and weights are held as exact rationals; floating copies are
//! cached for the fast CDF path used by lattice sweeps.

use num_traits::{One, Zero};
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{overlap, Rect, Scalar};
use crate::rational::{self, Rational};

/// Tolerance on the total weight of a measure built from floating inputs.
pub const FLOAT_WEIGHT_TOL: f64 = 1e-12;

/// `weight * U(segment from a to b)`.
#[derive(Debug, Clone)]
pub struct Segment {
    a: Vec<Rational>,
    b: Vec<Rational>,
    weight: Rational,
    af: Vec<f64>,
    bf: Vec<f64>,
    wf: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.a == other.a && self.b == other.b && self.weight == other.weight
    }
}

impl Segment {
    pub fn new(a: Vec<Rational>, b: Vec<Rational>, weight: Rational) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                got: b.len(),
            });
        }
        for x in a.iter().chain(&b) {
            if *x < Rational::zero() || *x > Rational::one() {
                return Err(Error::Domain(format!(
                    "segment endpoint coordinate {} outside [0,1]",
                    rational::format(x)
                )));
            }
        }
        if weight < Rational::zero() {
            return Err(Error::InvalidInput("negative segment weight".into()));
        }
        if weight > Rational::zero() && a == b {
            return Err(Error::InvalidInput("degenerate segment with positive weight".into()));
        }
        let af = a.iter().map(rational::to_f64).collect();
        let bf = b.iter().map(rational::to_f64).collect();
        let wf = rational::to_f64(&weight);
        Ok(Segment {
            a,
            b,
            weight,
            af,
            bf,
            wf,
        })
    }

    pub fn from_f64(a: &[f64], b: &[f64], weight: f64) -> Result<Self> {
        let conv = |v: &[f64]| v.iter().map(|&x| rational::from_f64(x)).collect::<Result<Vec<_>>>();
        Segment::new(conv(a)?, conv(b)?, rational::from_f64(weight)?)
    }

    pub fn a(&self) -> &[Rational] {
        &self.a
    }

    pub fn b(&self) -> &[Rational] {
        &self.b
    }

    pub fn weight(&self) -> &Rational {
        &self.weight
    }

    pub fn a_f64(&self) -> &[f64] {
        &self.af
    }

    pub fn b_f64(&self) -> &[f64] {
        &self.bf
    }

    pub fn weight_f64(&self) -> f64 {
        self.wf
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    /// Point at parameter `t` in `[0,1]`.
    pub fn point_at(&self, t: &Rational) -> Vec<Rational> {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(a, b)| a + (b - a) * t)
            .collect()
    }

    /// Sub-segment over the parameter range `[t0, t1]`, weight scaled by its length.
    pub fn sub_segment(&self, t0: &Rational, t1: &Rational) -> Result<Segment> {
        Segment::new(self.point_at(t0), self.point_at(t1), &self.weight * (t1 - t0))
    }

    /// Exact mass inside `rect`.
    pub fn box_mass_exact(&self, rect: &Rect<Rational>) -> Rational {
        match param_interval(&self.a, &self.b, rect) {
            Some((t0, t1)) => &self.weight * (t1 - t0),
            None => Rational::zero(),
        }
    }

    pub fn box_mass(&self, rect: &Rect<f64>) -> f64 {
        match param_interval(&self.af, &self.bf, rect) {
            Some((t0, t1)) => self.wf * (t1 - t0),
            None => 0.0,
        }
    }

    /// Parameter range `{t : a + t(b-a) in rect}` as an exact interval.
    pub fn param_range(&self, rect: &Rect<Rational>) -> Option<(Rational, Rational)> {
        param_interval(&self.a, &self.b, rect)
    }
}

/// `{t in [0,1] : a + t (b - a) in rect}`; an interval since the box is convex.
pub fn param_interval<T: Scalar>(a: &[T], b: &[T], rect: &Rect<T>) -> Option<(T, T)> {
    let mut t0 = T::zero();
    let mut t1 = T::one();
    for k in 0..a.len() {
        let d = b[k].clone() - a[k].clone();
        if d == T::zero() {
            if !rect.contains_coord(k, &a[k]) {
                return None;
            }
            continue;
        }
        let s0 = (rect.lo[k].clone() - a[k].clone()) / d.clone();
        let s1 = (rect.hi[k].clone() - a[k].clone()) / d;
        let (s0, s1) = if s0 <= s1 { (s0, s1) } else { (s1, s0) };
        if s0 > t0 {
            t0 = s0;
        }
        if s1 < t1 {
            t1 = s1;
        }
        if t0 > t1 {
            return None;
        }
    }
    Some((t0, t1))
}

/// `sum_i w_i U(L_i)` in `[0,1]^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentMeasure {
    n: usize,
    segments: Vec<Segment>,
    /// False when any input came from a float; validation then uses a small tolerance.
    exact: bool,
}

impl SegmentMeasure {
    pub fn new(n: usize, segments: Vec<Segment>) -> Result<Self> {
        Self::with_exactness(n, segments, true)
    }

    pub fn with_exactness(n: usize, segments: Vec<Segment>, exact: bool) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput(format!("dimension {n} < 2")));
        }
        for s in &segments {
            if s.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: s.dim(),
                });
            }
        }
        Ok(SegmentMeasure { n, segments, exact })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn total_weight(&self) -> Rational {
        self.segments.iter().map(|s| s.weight.clone()).sum()
    }

    /// Total weight must be 1 (exactly, or within [`FLOAT_WEIGHT_TOL`] for float inputs).
    pub fn check_normalized(&self) -> Result<()> {
        let total = self.total_weight();
        let ok = if self.exact {
            total.is_one()
        } else {
            (rational::to_f64(&total) - 1.0).abs() <= FLOAT_WEIGHT_TOL
        };
        if ok {
            Ok(())
        } else {
            Err(Error::NotNormalized(rational::format(&total)))
        }
    }

    pub fn box_mass_exact(&self, rect: &Rect<Rational>) -> Rational {
        self.segments.iter().map(|s| s.box_mass_exact(rect)).sum()
    }

    pub fn box_mass(&self, rect: &Rect<f64>) -> f64 {
        self.segments.iter().map(|s| s.box_mass(rect)).sum()
    }

    /// Mass of `[0, u]`, floating path.
    pub fn cdf(&self, u: &[f64]) -> f64 {
        let mut total = 0.0;
        'seg: for s in &self.segments {
            let (mut t0, mut t1) = (0.0f64, 1.0f64);
            for k in 0..self.n {
                let a = s.af[k];
                let d = s.bf[k] - a;
                if d == 0.0 {
                    if a > u[k] {
                        continue 'seg;
                    }
                    continue;
                }
                let s0 = -a / d;
                let s1 = (u[k] - a) / d;
                let (s0, s1) = if s0 <= s1 { (s0, s1) } else { (s1, s0) };
                t0 = t0.max(s0);
                t1 = t1.min(s1);
                if t0 >= t1 {
                    continue 'seg;
                }
            }
            total += s.wf * (t1 - t0);
        }
        total
    }

    /// Exact masses of the `m` slabs `[j/m, (j+1)/m)` along `axis`.
    pub fn slab_masses_exact(&self, axis: usize, m: usize) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); m];
        let mq = rational::int(m as i64);
        for s in &self.segments {
            if s.weight.is_zero() {
                continue;
            }
            let a = &s.a[axis];
            let b = &s.b[axis];
            if a == b {
                out[slab_of(a, m)] += &s.weight;
                continue;
            }
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let len = hi - lo;
            let j0 = slab_of(lo, m);
            let j1 = slab_of(hi, m);
            for (j, slot) in out.iter_mut().enumerate().take(j1 + 1).skip(j0) {
                let sl = rational::int(j as i64) / &mq;
                let sh = rational::int(j as i64 + 1) / &mq;
                let ov = overlap(lo, hi, &sl, &sh);
                if !ov.is_zero() {
                    *slot += &s.weight * ov / &len;
                }
            }
        }
        out
    }

    /// i.i.d. draws: segment by weight, then a uniform parameter along it.
    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        if count == 0 {
            return Ok(Vec::new());
        }
        let weights: Vec<f64> = self.segments.iter().map(|s| s.wf).collect();
        let pick = WeightedIndex::new(&weights)
            .map_err(|e| Error::InvalidInput(format!("cannot sample: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok((0..count)
            .map(|_| {
                let s = &self.segments[pick.sample(&mut rng)];
                let t: f64 = rng.gen();
                s.af.iter()
                    .zip(&s.bf)
                    .map(|(a, b)| (a + t * (b - a)).clamp(0.0, 1.0))
                    .collect()
            })
            .collect())
    }
}

/// Index of the half-open slab holding `x` (the last slab is closed at 1).
pub(crate) fn slab_of(x: &Rational, m: usize) -> usize {
    let j = rational::floor_to_i64(&(x * rational::int(m as i64)));
    (j.max(0) as usize).min(m - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn seg(a: &[f64], b: &[f64], w: f64) -> Segment {
        Segment::from_f64(a, b, w).unwrap()
    }

    #[test]
    fn diagonal_box_mass_matches_comonotone_cdf() {
        let s = seg(&[0.0, 0.0], &[1.0, 1.0], 1.0);
        let r = Rect::new(vec![0.0, 0.0], vec![0.3, 0.7]).unwrap();
        assert!((s.box_mass(&r) - 0.3).abs() < 1e-15);
        let rq = Rect::new(vec![int(0), int(0)], vec![ratio(3, 10), ratio(7, 10)]).unwrap();
        assert_eq!(s.box_mass_exact(&rq), ratio(3, 10));
    }

    #[test]
    fn anti_diagonal_box_mass_matches_countermonotone_cdf() {
        let s = Segment::new(vec![int(0), int(1)], vec![int(1), int(0)], int(1)).unwrap();
        let rq = Rect::new(vec![int(0), int(0)], vec![ratio(3, 10), ratio(9, 10)]).unwrap();
        assert_eq!(s.box_mass_exact(&rq), ratio(1, 5));
    }

    #[test]
    fn degenerate_box_has_no_mass() {
        let s = seg(&[0.0, 0.0], &[1.0, 1.0], 1.0);
        let r = Rect::new(vec![0.4, 0.4], vec![0.4, 0.4]).unwrap();
        assert_eq!(s.box_mass(&r), 0.0);
        let s2 = seg(&[0.1, 0.9], &[0.7, 0.2], 0.5);
        let r2 = Rect::new(vec![0.3, 0.0], vec![0.3, 1.0]).unwrap();
        assert_eq!(s2.box_mass(&r2), 0.0);
    }

    #[test]
    fn rejects_bad_segments() {
        assert!(Segment::from_f64(&[0.0, 0.0], &[0.0, 0.0], 1.0).is_err());
        assert!(Segment::from_f64(&[0.0, 0.0], &[0.0, 0.0], 0.0).is_ok());
        assert!(Segment::from_f64(&[0.0, -0.1], &[1.0, 1.0], 1.0).is_err());
        assert!(Segment::from_f64(&[0.0, 0.0], &[1.0, 1.0], -1.0).is_err());
        assert!(Segment::from_f64(&[0.0], &[1.0, 1.0], 1.0).is_err());
    }

    #[test]
    fn slab_masses_of_half_diagonal() {
        let sm = SegmentMeasure::new(2, vec![Segment::new(vec![int(0), int(0)], vec![ratio(1, 2), ratio(1, 2)], int(1)).unwrap()])
            .unwrap();
        assert_eq!(sm.slab_masses_exact(0, 2), vec![int(1), int(0)]);
    }

    #[test]
    fn axis_constant_segment_goes_to_one_slab() {
        // x = 1/2 exactly: belongs to the upper half-open slab.
        let s = Segment::new(vec![ratio(1, 2), int(0)], vec![ratio(1, 2), int(1)], int(1)).unwrap();
        let sm = SegmentMeasure::new(2, vec![s]).unwrap();
        assert_eq!(sm.slab_masses_exact(0, 2), vec![int(0), int(1)]);
        assert_eq!(sm.slab_masses_exact(1, 2), vec![ratio(1, 2), ratio(1, 2)]);
    }

    #[test]
    fn cdf_fast_path_agrees_with_box_mass() {
        let sm = SegmentMeasure::new(
            2,
            vec![seg(&[0.0, 0.0], &[0.5, 1.0], 0.5), seg(&[0.5, 1.0], &[1.0, 0.0], 0.5)],
        )
        .unwrap();
        for &(u, v) in &[(0.25, 0.5), (0.5, 1.0), (0.9, 0.1), (0.0, 0.3), (1.0, 1.0)] {
            let r = Rect::lower_orthant(&[u, v]).unwrap();
            assert!((sm.cdf(&[u, v]) - sm.box_mass(&r)).abs() < 1e-15);
        }
    }

    #[test]
    fn normalization_check() {
        let sm = SegmentMeasure::new(2, vec![seg(&[0.0, 0.0], &[1.0, 1.0], 0.9)]).unwrap();
        assert!(matches!(sm.check_normalized(), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn sampling_is_seeded() {
        let sm = SegmentMeasure::new(2, vec![seg(&[0.0, 0.0], &[1.0, 1.0], 1.0)]).unwrap();
        assert!(sm.sample(0, 1).unwrap().is_empty());
        let a = sm.sample(50, 9).unwrap();
        let b = sm.sample(50, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|p| p[0] == p[1]));
    }
}
