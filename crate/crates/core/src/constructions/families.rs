//! Explicit singular extreme copulas built from interior diagonals.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::Orientation;
use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::segment::{Segment, SegmentMeasure};

/// Two-segment copula: `0 -> (t,1,..,1)` with weight `t`, then `(t,1,..,1) -> (1,0,..,0)`
/// with weight `1 - t`.
pub fn tent_copula(t: &Rational, n: usize) -> Result<SegmentMeasure> {
    if *t <= Rational::zero() || *t >= Rational::one() {
        return Err(Error::Domain(format!("tent parameter {} not in (0,1)", rational::format(t))));
    }
    check_dim(n)?;
    let mut peak = vec![Rational::one(); n];
    peak[0] = t.clone();
    let mut end = vec![Rational::zero(); n];
    end[0] = Rational::one();
    SegmentMeasure::new(
        n,
        vec![
            Segment::new(vec![Rational::zero(); n], peak.clone(), t.clone())?,
            Segment::new(peak, end, Rational::one() - t)?,
        ],
    )
}

/// One diagonal per slab `[t_i, t_{i+1}] x [0,1]^(n-1)`, weighted by slab width.
///
/// `orientations` is either empty (all main diagonals) or one per block.
pub fn shuffle_copula(breaks: &[Rational], orientations: &[Orientation], n: usize) -> Result<SegmentMeasure> {
    check_dim(n)?;
    if breaks.len() < 2 {
        return Err(Error::InvalidInput("need at least two breakpoints".into()));
    }
    if !breaks[0].is_zero() || !breaks[breaks.len() - 1].is_one() {
        return Err(Error::InvalidInput("breakpoints must start at 0 and end at 1".into()));
    }
    if breaks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("breakpoints must be strictly increasing".into()));
    }
    let blocks = breaks.len() - 1;
    if !orientations.is_empty() && orientations.len() != blocks {
        return Err(Error::InvalidInput(format!(
            "{} orientations for {blocks} blocks",
            orientations.len()
        )));
    }
    let plus = Orientation::plus(n);
    let segments = (0..blocks)
        .map(|i| {
            let o = orientations.get(i).unwrap_or(&plus);
            check_orientation(o, n)?;
            let mut lo = vec![Rational::zero(); n];
            let mut hi = vec![Rational::one(); n];
            lo[0] = breaks[i].clone();
            hi[0] = breaks[i + 1].clone();
            let (a, b) = o.diagonal(&lo, &hi);
            Segment::new(a, b, &breaks[i + 1] - &breaks[i])
        })
        .collect::<Result<Vec<_>>>()?;
    SegmentMeasure::new(n, segments)
}

/// Hard cap on the number of sequence terms consumed by [`countable_shuffle`].
pub const MAX_SHUFFLE_TERMS: usize = 1_000_000;

/// Shuffle over a countable non-decreasing sequence `0 = t_1 <= t_2 <= ...` with limit `t_0`.
///
/// Terms are consumed until `t_0 - t_M < tail_tol` (or the sequence ends); the
/// remaining tail and the final block `[t_0, 1]` are lumped into one diagonal on
/// `[t_M, 1]`. For a finite sequence ending at `t_0` the result is exact.
pub fn countable_shuffle<I, F>(
    terms: I,
    limit: &Rational,
    tail_tol: &Rational,
    n: usize,
    mut orientation: F,
) -> Result<SegmentMeasure>
where
    I: IntoIterator<Item = Rational>,
    F: FnMut(usize) -> Orientation,
{
    check_dim(n)?;
    if *limit < Rational::zero() || *limit > Rational::one() {
        return Err(Error::InvalidInput("sequence limit outside [0,1]".into()));
    }
    let mut breaks = vec![Rational::zero()];
    let mut iter = terms.into_iter();
    match iter.next() {
        Some(t) if t.is_zero() => {}
        _ => return Err(Error::InvalidInput("sequence must start at 0".into())),
    }
    let mut consumed = 1;
    while limit - &breaks[breaks.len() - 1] >= *tail_tol {
        let Some(t) = iter.next() else { break };
        consumed += 1;
        if consumed > MAX_SHUFFLE_TERMS {
            return Err(Error::InvalidInput(format!(
                "sequence not within tolerance of its limit after {MAX_SHUFFLE_TERMS} terms"
            )));
        }
        let last = &breaks[breaks.len() - 1];
        if t < *last || t > *limit {
            return Err(Error::InvalidInput("sequence must be non-decreasing and bounded by its limit".into()));
        }
        if t > *last && t < Rational::one() {
            breaks.push(t);
        }
    }
    breaks.push(Rational::one());
    let orientations: Vec<Orientation> = (0..breaks.len() - 1).map(&mut orientation).collect();
    shuffle_copula(&breaks, &orientations, n)
}

/// Permutations `sigma_2..sigma_n` of `{0..m-1}` (`sigma_1` is the identity) and
/// one diagonal orientation per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationCopulaSpec {
    pub m: usize,
    pub perms: Vec<Vec<usize>>,
    pub orientations: Vec<Orientation>,
}

impl PermutationCopulaSpec {
    /// All cells on their main diagonals.
    pub fn new(m: usize, perms: Vec<Vec<usize>>) -> Result<Self> {
        let n = perms.len() + 1;
        Self::with_orientations(m, perms, vec![Orientation::plus(n); m])
    }

    pub fn with_orientations(m: usize, perms: Vec<Vec<usize>>, orientations: Vec<Orientation>) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidInput("order must be at least 1".into()));
        }
        if perms.is_empty() {
            return Err(Error::InvalidInput("need at least one permutation (n >= 2)".into()));
        }
        for (k, p) in perms.iter().enumerate() {
            if !is_bijection(p, m) {
                return Err(Error::InvalidInput(format!(
                    "permutation for axis {} is not a bijection of 0..{m}",
                    k + 2
                )));
            }
        }
        if orientations.len() != m {
            return Err(Error::InvalidInput(format!("{} orientations for order {m}", orientations.len())));
        }
        let n = perms.len() + 1;
        for o in &orientations {
            check_orientation(o, n)?;
        }
        Ok(PermutationCopulaSpec { m, perms, orientations })
    }

    pub fn identity(m: usize, n: usize) -> Result<Self> {
        Self::new(m, vec![(0..m).collect(); n - 1])
    }

    pub fn dim(&self) -> usize {
        self.perms.len() + 1
    }

    /// Grid cell `(i, sigma_2(i), .., sigma_n(i))`.
    pub fn cell(&self, i: usize) -> Vec<usize> {
        std::iter::once(i).chain(self.perms.iter().map(|p| p[i])).collect()
    }
}

fn is_bijection(p: &[usize], m: usize) -> bool {
    if p.len() != m {
        return false;
    }
    let mut seen = vec![false; m];
    for &x in p {
        if x >= m || seen[x] {
            return false;
        }
        seen[x] = true;
    }
    true
}

/// Mass `1/m` on the chosen diagonal of each cell `(i, sigma_2(i), .., sigma_n(i))/m`.
pub fn permutation_copula(spec: &PermutationCopulaSpec) -> Result<SegmentMeasure> {
    let m = spec.m as i64;
    let n = spec.dim();
    let weight = rational::ratio(1, m);
    let segments = (0..spec.m)
        .map(|i| {
            let cell = spec.cell(i);
            let lo: Vec<Rational> = cell.iter().map(|&c| rational::ratio(c as i64, m)).collect();
            let hi: Vec<Rational> = cell.iter().map(|&c| rational::ratio(c as i64 + 1, m)).collect();
            let (a, b) = spec.orientations[i].diagonal(&lo, &hi);
            Segment::new(a, b, weight.clone())
        })
        .collect::<Result<Vec<_>>>()?;
    SegmentMeasure::new(n, segments)
}

/// The trivariate four-segment copula whose support is not covered by graphs
/// over any axis. Each segment carries weight `1/4`.
pub fn four_line_3d() -> SegmentMeasure {
    let h = rational::ratio(1, 2);
    let z = Rational::zero();
    let o = Rational::one();
    let lines = [
        ([z.clone(), z.clone(), h.clone()], [h.clone(), h.clone(), o.clone()]),
        ([h.clone(), h.clone(), h.clone()], [o.clone(), o.clone(), o.clone()]),
        ([z.clone(), h.clone(), z.clone()], [h.clone(), o.clone(), h.clone()]),
        ([h.clone(), z.clone(), z.clone()], [o.clone(), h.clone(), h.clone()]),
    ];
    let quarter = rational::ratio(1, 4);
    let segments = lines
        .into_iter()
        .map(|(a, b)| Segment::new(a.to_vec(), b.to_vec(), quarter.clone()).expect("fixed segments are valid"))
        .collect();
    SegmentMeasure::new(3, segments).expect("fixed measure is valid")
}

fn check_dim(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("dimension {n} < 2")));
    }
    Ok(())
}

fn check_orientation(o: &Orientation, n: usize) -> Result<()> {
    if o.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: o.dim(),
        });
    }
    Ok(())
}
