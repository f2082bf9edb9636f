//! Axis-aligned boxes in the unit cube and the scalar abstraction used to
//! share interval arithmetic between the exact and floating paths.

use std::fmt::Debug;

use num_traits::Num;

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// Field operations needed by the segment/box interval algebra.
pub trait Scalar: Num + Clone + PartialOrd + Debug {}

impl Scalar for f64 {}
impl Scalar for Rational {}

/// The box `[lo_1, hi_1] x ... x [lo_n, hi_n]`.
///
/// With `half_open` set each side is `[lo, hi)` except where `hi = 1`. That only
/// matters for mass sitting exactly on a face, i.e. for segments that are
/// constant in some coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct Rect<T> {
    pub lo: Vec<T>,
    pub hi: Vec<T>,
    pub half_open: bool,
}

impl<T: Scalar> Rect<T> {
    pub fn new(lo: Vec<T>, hi: Vec<T>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        for (l, h) in lo.iter().zip(&hi) {
            if !(T::zero() <= *l && l <= h && *h <= T::one()) {
                return Err(Error::Domain(format!("box side [{l:?}, {h:?}] not inside [0,1]")));
            }
        }
        Ok(Rect {
            lo,
            hi,
            half_open: false,
        })
    }

    /// `[0, u]`, the box whose mass is the CDF at `u`.
    pub fn lower_orthant(u: &[T]) -> Result<Self> {
        Rect::new(vec![T::zero(); u.len()], u.to_vec())
    }

    /// Slab `{x : x_axis in [lo, hi)}` (closed at 1).
    pub fn slab(n: usize, axis: usize, lo: T, hi: T) -> Result<Self> {
        let mut l = vec![T::zero(); n];
        let mut h = vec![T::one(); n];
        l[axis] = lo;
        h[axis] = hi;
        let mut r = Rect::new(l, h)?;
        r.half_open = true;
        Ok(r)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains_coord(&self, axis: usize, x: &T) -> bool {
        let lo = &self.lo[axis];
        let hi = &self.hi[axis];
        if x < lo {
            return false;
        }
        if self.half_open && *hi != T::one() {
            x < hi
        } else {
            x <= hi
        }
    }
}

impl Rect<Rational> {
    /// Grid cell `prod [i_k/m, (i_k+1)/m)`.
    pub fn cell(index: &[usize], m: usize) -> Self {
        let lo = index.iter().map(|&i| rational::ratio(i as i64, m as i64)).collect();
        let hi = index.iter().map(|&i| rational::ratio(i as i64 + 1, m as i64)).collect();
        Rect {
            lo,
            hi,
            half_open: true,
        }
    }

    pub fn to_f64(&self) -> Rect<f64> {
        Rect {
            lo: self.lo.iter().map(rational::to_f64).collect(),
            hi: self.hi.iter().map(rational::to_f64).collect(),
            half_open: self.half_open,
        }
    }
}

impl Rect<f64> {
    pub fn cell(index: &[usize], m: usize) -> Self {
        let mf = m as f64;
        Rect {
            lo: index.iter().map(|&i| i as f64 / mf).collect(),
            hi: index.iter().map(|&i| (i + 1) as f64 / mf).collect(),
            half_open: true,
        }
    }

    pub fn to_exact(&self) -> Result<Rect<Rational>> {
        Ok(Rect {
            lo: self.lo.iter().map(|&x| rational::from_f64(x)).collect::<Result<_>>()?,
            hi: self.hi.iter().map(|&x| rational::from_f64(x)).collect::<Result<_>>()?,
            half_open: self.half_open,
        })
    }
}

/// Checks a point lies in `[0,1]^n`.
pub fn check_unit_point(u: &[f64]) -> Result<()> {
    for (k, &x) in u.iter().enumerate() {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!("coordinate {k} = {x} outside [0,1]")));
        }
    }
    Ok(())
}

/// Overlap length of `[a0, a1]` and `[b0, b1]` (zero when disjoint).
pub fn overlap<T: Scalar>(a0: &T, a1: &T, b0: &T, b1: &T) -> T {
    let lo = if a0 > b0 { a0.clone() } else { b0.clone() };
    let hi = if a1 < b1 { a1.clone() } else { b1.clone() };
    if hi > lo {
        hi - lo
    } else {
        T::zero()
    }
}

/// Lexicographic multi-index helpers for `m^n` tensors (first axis most significant).
pub fn unflatten(mut flat: usize, n: usize, m: usize) -> Vec<usize> {
    let mut idx = vec![0; n];
    for k in (0..n).rev() {
        idx[k] = flat % m;
        flat /= m;
    }
    idx
}

pub fn flatten(idx: &[usize], m: usize) -> usize {
    idx.iter().fold(0, |acc, &i| acc * m + i)
}
