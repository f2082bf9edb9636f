//! Maps `f = (f_2, .., f_n) : [0,1] -> [0,1]^(n-1)` and per-coordinate
//! measure-preservation checks.

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// `slope * x + intercept` on one piece (global `x`, not piece-local).
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub slope: Rational,
    pub intercept: Rational,
}

impl Affine {
    pub fn new(slope: Rational, intercept: Rational) -> Self {
        Affine { slope, intercept }
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        &self.slope * x + &self.intercept
    }

    /// `{x in [x0, x1] : value(x) in [lo, hi]}` as an interval, if non-empty.
    ///
    /// For a constant piece the value must lie in `[lo, hi)`, or `[lo, 1]` when `hi = 1`.
    fn preimage(&self, x0: &Rational, x1: &Rational, lo: &Rational, hi: &Rational) -> Option<(Rational, Rational)> {
        if self.slope.is_zero() {
            let c = &self.intercept;
            let inside = lo <= c && (c < hi || (hi.is_one() && c <= hi));
            return inside.then(|| (x0.clone(), x1.clone()));
        }
        let p = (lo - &self.intercept) / &self.slope;
        let q = (hi - &self.intercept) / &self.slope;
        let (p, q) = if p <= q { (p, q) } else { (q, p) };
        let s = if p > *x0 { p } else { x0.clone() };
        let e = if q < *x1 { q } else { x1.clone() };
        (s < e).then_some((s, e))
    }
}

/// Piecewise-linear map on the pieces `[x_j, x_{j+1})` of a breakpoint list.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearMap {
    breakpoints: Vec<Rational>,
    /// `components[c][j]`: coordinate `c + 2` on piece `j`.
    components: Vec<Vec<Affine>>,
}

impl PiecewiseLinearMap {
    pub fn new(breakpoints: Vec<Rational>, components: Vec<Vec<Affine>>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::InvalidInput("need at least two breakpoints".into()));
        }
        if !breakpoints[0].is_zero() || !breakpoints[breakpoints.len() - 1].is_one() {
            return Err(Error::InvalidInput("breakpoints must run from 0 to 1".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("breakpoints must be strictly increasing".into()));
        }
        if components.is_empty() {
            return Err(Error::InvalidInput("map needs at least one output coordinate".into()));
        }
        let pieces = breakpoints.len() - 1;
        for (c, comp) in components.iter().enumerate() {
            if comp.len() != pieces {
                return Err(Error::InvalidInput(format!(
                    "coordinate {} has {} pieces, expected {pieces}",
                    c + 2,
                    comp.len()
                )));
            }
            for (j, f) in comp.iter().enumerate() {
                for x in [&breakpoints[j], &breakpoints[j + 1]] {
                    let y = f.eval(x);
                    if y < Rational::zero() || y > Rational::one() {
                        return Err(Error::Domain(format!(
                            "coordinate {} leaves [0,1] on piece {j} (value {} at x = {})",
                            c + 2,
                            rational::format(&y),
                            rational::format(x)
                        )));
                    }
                }
            }
        }
        Ok(PiecewiseLinearMap { breakpoints, components })
    }

    /// Single-piece map with one affine component per output coordinate.
    pub fn affine(components: Vec<Affine>) -> Result<Self> {
        Self::new(
            vec![Rational::zero(), Rational::one()],
            components.into_iter().map(|f| vec![f]).collect(),
        )
    }

    pub fn breakpoints(&self) -> &[Rational] {
        &self.breakpoints
    }

    pub fn components(&self) -> &[Vec<Affine>] {
        &self.components
    }

    pub fn pieces(&self) -> usize {
        self.breakpoints.len() - 1
    }

    /// Dimension of the graph, `1 + number of output coordinates`.
    pub fn graph_dim(&self) -> usize {
        self.components.len() + 1
    }

    pub fn piece_of(&self, x: f64) -> usize {
        let j = self.breakpoints[1..].iter().take_while(|b| rational::to_f64(b) <= x).count();
        j.min(self.pieces() - 1)
    }

    pub fn eval(&self, x: f64) -> Vec<f64> {
        let j = self.piece_of(x);
        self.components
            .iter()
            .map(|c| rational::to_f64(&c[j].slope) * x + rational::to_f64(&c[j].intercept))
            .collect()
    }

    /// Exact `lambda{x in [x_lo, x_hi] : f_c(x) in [lo, hi]}` as a sorted list of intervals.
    pub fn preimage_intervals(
        &self,
        coord: usize,
        x_lo: &Rational,
        x_hi: &Rational,
        lo: &Rational,
        hi: &Rational,
    ) -> Vec<(Rational, Rational)> {
        let mut out = Vec::new();
        for (j, f) in self.components[coord].iter().enumerate() {
            let s = if self.breakpoints[j] > *x_lo { &self.breakpoints[j] } else { x_lo };
            let e = if self.breakpoints[j + 1] < *x_hi { &self.breakpoints[j + 1] } else { x_hi };
            if s >= e {
                continue;
            }
            if let Some(iv) = f.preimage(s, e, lo, hi) {
                out.push(iv);
            }
        }
        out
    }

    pub fn preimage_length(&self, coord: usize, lo: &Rational, hi: &Rational) -> Rational {
        self.preimage_intervals(coord, &Rational::zero(), &Rational::one(), lo, hi)
            .into_iter()
            .map(|(s, e)| e - s)
            .sum()
    }

    /// Exact test of `lambda(f_c^{-1}(B)) = lambda(B)` for all Borel `B`.
    ///
    /// For a piecewise-linear map this holds iff no piece is constant and the
    /// push-forward density `sum 1/|slope|` over pieces covering `y` equals 1
    /// on every elementary interval between image breakpoints.
    pub fn check_pushforward(&self) -> Result<()> {
        for (c, comp) in self.components.iter().enumerate() {
            let mut ys = vec![Rational::zero(), Rational::one()];
            for (j, f) in comp.iter().enumerate() {
                if f.slope.is_zero() {
                    return Err(Error::NotMeasurePreserving {
                        coord: c + 2,
                        lo: rational::format(&f.intercept),
                        hi: rational::format(&f.intercept),
                        length: rational::format(&(&self.breakpoints[j + 1] - &self.breakpoints[j])),
                    });
                }
                ys.push(f.eval(&self.breakpoints[j]));
                ys.push(f.eval(&self.breakpoints[j + 1]));
            }
            ys.sort();
            ys.dedup();
            for w in ys.windows(2) {
                let len = self.preimage_length(c, &w[0], &w[1]);
                if len != &w[1] - &w[0] {
                    return Err(Error::NotMeasurePreserving {
                        coord: c + 2,
                        lo: rational::format(&w[0]),
                        hi: rational::format(&w[1]),
                        length: rational::format(&len),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Anything whose per-coordinate preimages of intervals have computable length.
pub trait IntervalMap {
    /// Number of output coordinates (`n - 1`).
    fn outputs(&self) -> usize;

    /// `lambda{x : f_c(x) in [j/r, (j+1)/r)}`.
    fn slab_preimage(&self, coord: usize, j: usize, r: usize) -> f64;
}

impl IntervalMap for PiecewiseLinearMap {
    fn outputs(&self) -> usize {
        self.components.len()
    }

    fn slab_preimage(&self, coord: usize, j: usize, r: usize) -> f64 {
        let lo = rational::ratio(j as i64, r as i64);
        let hi = rational::ratio(j as i64 + 1, r as i64);
        rational::to_f64(&self.preimage_length(coord, &lo, &hi))
    }
}

/// `f_c(x) = x^p_c` with `p_c > 0`: strictly increasing, not piecewise linear.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerMap {
    exponents: Vec<f64>,
}

impl PowerMap {
    pub fn new(exponents: Vec<f64>) -> Result<Self> {
        if exponents.is_empty() || exponents.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
            return Err(Error::InvalidInput("power exponents must be positive and finite".into()));
        }
        Ok(PowerMap { exponents })
    }

    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }
}

impl IntervalMap for PowerMap {
    fn outputs(&self) -> usize {
        self.exponents.len()
    }

    fn slab_preimage(&self, coord: usize, j: usize, r: usize) -> f64 {
        let inv = 1.0 / self.exponents[coord];
        let lo = j as f64 / r as f64;
        let hi = (j + 1) as f64 / r as f64;
        hi.powf(inv) - lo.powf(inv)
    }
}

/// Deviation tolerance for [`measure_preserving_check`].
pub const MP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MpWitness {
    /// Output coordinate, numbered from 2 as in `(f_2, .., f_n)`.
    pub coord: usize,
    pub lo: f64,
    pub hi: f64,
    pub preimage_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MpReport {
    pub ok: bool,
    /// One flag per output coordinate `f_2, .., f_n`.
    pub ok_per_coordinate: Vec<bool>,
    pub max_deviation: f64,
    /// Interval with the largest deviation when the check fails.
    pub witness: Option<MpWitness>,
    pub resolution: usize,
}

/// Compares `lambda(f_c^{-1}(B))` with `1/r` for every `B = [j/r, (j+1)/r)`.
pub fn measure_preserving_check<M: IntervalMap + ?Sized>(f: &M, r: usize) -> Result<MpReport> {
    if r == 0 {
        return Err(Error::InvalidInput("resolution must be at least 1".into()));
    }
    let target = 1.0 / r as f64;
    let mut per = vec![true; f.outputs()];
    let mut worst: Option<MpWitness> = None;
    let mut max_dev = 0.0f64;
    for (c, flag) in per.iter_mut().enumerate() {
        for j in 0..r {
            let len = f.slab_preimage(c, j, r);
            let dev = (len - target).abs();
            if dev > MP_TOL {
                *flag = false;
            }
            if dev > max_dev {
                max_dev = dev;
                worst = Some(MpWitness {
                    coord: c + 2,
                    lo: j as f64 / r as f64,
                    hi: (j + 1) as f64 / r as f64,
                    preimage_length: len,
                });
            }
        }
    }
    let ok = per.iter().all(|&b| b);
    Ok(MpReport {
        ok,
        ok_per_coordinate: per,
        max_deviation: max_dev,
        witness: if ok { None } else { worst },
        resolution: r,
    })
}

/// `x -> 2x mod 1`.
pub fn doubling_map() -> PiecewiseLinearMap {
    PiecewiseLinearMap::new(
        vec![Rational::zero(), rational::ratio(1, 2), Rational::one()],
        vec![vec![
            Affine::new(rational::int(2), rational::int(0)),
            Affine::new(rational::int(2), rational::int(-1)),
        ]],
    )
    .expect("doubling map is valid")
}
