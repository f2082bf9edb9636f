use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which interior diagonal of a box: per-axis direction, first axis always `+1`.
///
/// A box in `n` dimensions has `2^(n-1)` interior diagonals up to reversal;
/// fixing the first sign picks one representative for each.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct Orientation(Vec<i8>);

impl Orientation {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if signs.len() < 2 {
            return Err(Error::InvalidInput("orientation needs at least two signs".into()));
        }
        if signs[0] != 1 {
            return Err(Error::InvalidInput("first orientation sign must be +1".into()));
        }
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidInput("orientation signs must be +1 or -1".into()));
        }
        Ok(Orientation(signs))
    }

    /// The main (all-plus) diagonal.
    pub fn plus(n: usize) -> Self {
        Orientation(vec![1; n])
    }

    /// `+1` in the first axis, `-1` elsewhere.
    pub fn anti(n: usize) -> Self {
        let mut s = vec![-1; n];
        s[0] = 1;
        Orientation(s)
    }

    /// All `2^(n-1)` orientations in lexicographic order with `+` before `-`.
    pub fn all(n: usize) -> Vec<Orientation> {
        (0..1usize << (n - 1)).map(|mask| Orientation::from_index(n, mask)).collect()
    }

    /// Inverse of [`Orientation::index`].
    pub fn from_index(n: usize, mask: usize) -> Orientation {
        let mut s = vec![1i8; n];
        for (k, sign) in s.iter_mut().enumerate().skip(1) {
            if mask >> (n - 1 - k) & 1 == 1 {
                *sign = -1;
            }
        }
        Orientation(s)
    }

    /// Position in the order produced by [`Orientation::all`].
    pub fn index(&self) -> usize {
        let n = self.0.len();
        self.0
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, &s)| s == -1)
            .map(|(k, _)| 1usize << (n - 1 - k))
            .sum()
    }

    pub fn signs(&self) -> &[i8] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Endpoints of this diagonal of the box `[lo, hi]`.
    pub fn diagonal<T: Clone>(&self, lo: &[T], hi: &[T]) -> (Vec<T>, Vec<T>) {
        let mut a = Vec::with_capacity(lo.len());
        let mut b = Vec::with_capacity(lo.len());
        for (k, &s) in self.0.iter().enumerate() {
            if s == 1 {
                a.push(lo[k].clone());
                b.push(hi[k].clone());
            } else {
                a.push(hi[k].clone());
                b.push(lo[k].clone());
            }
        }
        (a, b)
    }
}

impl TryFrom<Vec<i8>> for Orientation {
    type Error = Error;

    fn try_from(v: Vec<i8>) -> Result<Self> {
        Orientation::new(v)
    }
}

impl From<Orientation> for Vec<i8> {
    fn from(o: Orientation) -> Self {
        o.0
    }
}
