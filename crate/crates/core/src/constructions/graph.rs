//! The unique copula supported on the graph of a measure-preserving
//! piecewise-linear map: `P(B) = lambda(pi_1(B intersect G_f))`.

use num_traits::{One, Zero};

use super::maps::PiecewiseLinearMap;
use crate::copula::CopulaModel;
use crate::error::Result;
use crate::geometry::Rect;
use crate::rational::{self, Rational};
use crate::segment::{Segment, SegmentMeasure};

#[derive(Debug, Clone, PartialEq)]
pub struct GraphCopula {
    map: PiecewiseLinearMap,
}

/// Builds the graph copula of `f`, rejecting maps that are not measure
/// preserving in every coordinate (the error carries the failing interval).
pub fn graph_copula(f: PiecewiseLinearMap) -> Result<CopulaModel> {
    f.check_pushforward()?;
    Ok(CopulaModel::Graph(GraphCopula { map: f }))
}

impl GraphCopula {
    pub fn map(&self) -> &PiecewiseLinearMap {
        &self.map
    }

    pub fn dim(&self) -> usize {
        self.map.graph_dim()
    }

    /// `lambda{x in [l_1, h_1] : f_k(x) in [l_k, h_k] for all k >= 2}`.
    pub fn box_mass_exact(&self, rect: &Rect<Rational>) -> Rational {
        let bps = self.map.breakpoints();
        let mut total = Rational::zero();
        for j in 0..self.map.pieces() {
            let mut s = if bps[j] > rect.lo[0] { bps[j].clone() } else { rect.lo[0].clone() };
            let mut e = if bps[j + 1] < rect.hi[0] { bps[j + 1].clone() } else { rect.hi[0].clone() };
            if s >= e {
                continue;
            }
            for (c, comp) in self.map.components().iter().enumerate() {
                let f = &comp[j];
                let (lo, hi) = (&rect.lo[c + 1], &rect.hi[c + 1]);
                // Affine and non-constant (checked at construction), so the
                // preimage on this piece is one interval.
                let p = (lo - &f.intercept) / &f.slope;
                let q = (hi - &f.intercept) / &f.slope;
                let (p, q) = if p <= q { (p, q) } else { (q, p) };
                if p > s {
                    s = p;
                }
                if q < e {
                    e = q;
                }
                if s >= e {
                    break;
                }
            }
            if e > s {
                total += e - s;
            }
        }
        total
    }

    pub fn box_mass(&self, rect: &Rect<f64>) -> f64 {
        let bps: Vec<f64> = self.map.breakpoints().iter().map(rational::to_f64).collect();
        let mut total = 0.0;
        for j in 0..self.map.pieces() {
            let mut s = bps[j].max(rect.lo[0]);
            let mut e = bps[j + 1].min(rect.hi[0]);
            for (c, comp) in self.map.components().iter().enumerate() {
                if s >= e {
                    break;
                }
                let slope = rational::to_f64(&comp[j].slope);
                let icpt = rational::to_f64(&comp[j].intercept);
                let p = (rect.lo[c + 1] - icpt) / slope;
                let q = (rect.hi[c + 1] - icpt) / slope;
                s = s.max(p.min(q));
                e = e.min(p.max(q));
            }
            if e > s {
                total += e - s;
            }
        }
        total
    }

    /// The same measure as a union of segments, one per piece.
    pub fn to_segment_measure(&self) -> Result<SegmentMeasure> {
        let bps = self.map.breakpoints();
        let segments = (0..self.map.pieces())
            .map(|j| {
                let end = |x: &Rational| -> Vec<Rational> {
                    std::iter::once(x.clone())
                        .chain(self.map.components().iter().map(|c| c[j].eval(x)))
                        .collect()
                };
                Segment::new(end(&bps[j]), end(&bps[j + 1]), &bps[j + 1] - &bps[j])
            })
            .collect::<Result<Vec<_>>>()?;
        let sm = SegmentMeasure::new(self.dim(), segments)?;
        debug_assert!(sm.total_weight().is_one());
        Ok(sm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::maps::{doubling_map, Affine};
    use crate::copula::validate_copula_measure;
    use crate::error::Error;
    use crate::rational::{int, ratio};

    #[test]
    fn identity_graph_is_comonotone() {
        let f = PiecewiseLinearMap::affine(vec![Affine::new(int(1), int(0))]).unwrap();
        let c = graph_copula(f).unwrap();
        assert!((c.cdf(&[0.3, 0.7]).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(c.cdf_exact(&[ratio(3, 10), ratio(7, 10)]).unwrap(), ratio(3, 10));
    }

    #[test]
    fn reflection_graph_is_countermonotone() {
        let f = PiecewiseLinearMap::affine(vec![Affine::new(int(-1), int(1))]).unwrap();
        let c = graph_copula(f).unwrap();
        assert_eq!(c.cdf_exact(&[ratio(3, 10), ratio(9, 10)]).unwrap(), ratio(1, 5));
    }

    #[test]
    fn doubling_graph_cdf() {
        // min(u, v/2) + max(0, min(u, (v+1)/2) - 1/2) at (3/4, 1/2) = 1/4 + 1/4.
        let c = graph_copula(doubling_map()).unwrap();
        assert_eq!(c.cdf_exact(&[ratio(3, 4), ratio(1, 2)]).unwrap(), ratio(1, 2));
        assert!((c.cdf(&[0.75, 0.5]).unwrap() - 0.5).abs() <= 1e-12);
        assert!(validate_copula_measure(&c, 64, 0.0).unwrap().ok);
    }

    #[test]
    fn rejects_non_preserving_map() {
        let f = PiecewiseLinearMap::affine(vec![Affine::new(ratio(1, 2), ratio(1, 4))]).unwrap();
        assert!(matches!(graph_copula(f), Err(Error::NotMeasurePreserving { .. })));
    }

    #[test]
    fn segment_form_agrees() {
        let CopulaModel::Graph(g) = graph_copula(doubling_map()).unwrap() else { unreachable!() };
        let sm = g.to_segment_measure().unwrap();
        assert_eq!(sm.segments().len(), 2);
        let r = Rect::new(vec![ratio(1, 8), ratio(1, 5)], vec![ratio(7, 8), ratio(2, 3)]).unwrap();
        assert_eq!(sm.box_mass_exact(&r), g.box_mass_exact(&r));
    }
}
