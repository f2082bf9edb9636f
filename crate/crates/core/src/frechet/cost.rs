use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::expr::Objective;
use super::marginal::MarginalDistribution;
use crate::constructions::Orientation;
use crate::error::{Error, Result};
use crate::geometry::unflatten;

/// Default number of midpoint nodes per cell diagonal.
pub const DEFAULT_QUADRATURE: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Max,
    Min,
}

impl Sense {
    /// `+1` for max, `-1` for min: maximizing `sign * value` is the goal either way.
    pub fn sign(self) -> f64 {
        match self {
            Sense::Max => 1.0,
            Sense::Min => -1.0,
        }
    }

    /// Whether `a` is strictly better than `b`.
    pub fn better(self, a: f64, b: f64) -> bool {
        self.sign() * a > self.sign() * b
    }
}

impl std::str::FromStr for Sense {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(Sense::Max),
            "min" => Ok(Sense::Min),
            _ => Err(Error::InvalidInput(format!("sense must be max or min, got `{s}`"))),
        }
    }
}

/// `d(cell)`: mean of `g` along the best diagonal of each cell of the `k`-grid,
/// after mapping coordinates through the marginal quantiles.
#[derive(Debug, Clone, PartialEq)]
pub struct CostTensor {
    pub n: usize,
    pub k: usize,
    pub values: Vec<f64>,
    /// Index into [`Orientation::all`] of the diagonal achieving each value.
    pub orientation: Vec<usize>,
}

impl CostTensor {
    /// A tensor with every cell on its main diagonal, e.g. for solver tests.
    pub fn from_values(n: usize, k: usize, values: Vec<f64>) -> Result<Self> {
        let cells = k
            .checked_pow(n as u32)
            .ok_or_else(|| Error::Budget(format!("{k}^{n} cells")))?;
        if n < 2 || k == 0 || values.len() != cells {
            return Err(Error::InvalidInput(format!(
                "need n >= 2, k >= 1 and {cells} values, got n = {n}, k = {k}, {} values",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("cost entry {i}")));
        }
        Ok(CostTensor {
            n,
            k,
            orientation: vec![0; cells],
            values,
        })
    }

    pub fn get(&self, cell: &[usize]) -> f64 {
        self.values[crate::geometry::flatten(cell, self.k)]
    }

    pub fn orientation_of(&self, cell: &[usize]) -> Orientation {
        Orientation::from_index(self.n, self.orientation[crate::geometry::flatten(cell, self.k)])
    }

    /// `sum_i d(i, sigma_2(i), .., sigma_n(i))`, summed in row order.
    pub fn total(&self, perms: &[Vec<usize>]) -> f64 {
        (0..self.k).map(|i| self.values[self.flat_of(perms, i)]).sum()
    }

    pub(crate) fn flat_of(&self, perms: &[Vec<usize>], i: usize) -> usize {
        perms.iter().fold(i, |acc, p| acc * self.k + p[i])
    }
}

/// Quantile nodes per axis: `nodes[axis][i * q + j]` at `(i + (j + 1/2)/q)/k`.
fn quantile_nodes(marginals: &[MarginalDistribution], k: usize, q: usize) -> Vec<Vec<f64>> {
    let kq = (k * q) as f64;
    marginals
        .iter()
        .map(|d| {
            (0..k * q)
                .map(|s| d.quantile_unchecked((s as f64 + 0.5) / kq))
                .collect()
        })
        .collect()
}

/// Mean of `g` over `q` midpoints of one diagonal of `cell`.
fn diagonal_mean(g: &Objective, nodes: &[Vec<f64>], cell: &[usize], o: &Orientation, q: usize) -> f64 {
    let mut x = vec![0.0; cell.len()];
    let mut acc = 0.0;
    for j in 0..q {
        for (axis, (&c, &s)) in cell.iter().zip(o.signs()).enumerate() {
            let step = if s == 1 { j } else { q - 1 - j };
            x[axis] = nodes[axis][c * q + step];
        }
        acc += g.eval(&x);
    }
    acc / q as f64
}

/// Builds `d` and keeps, per cell, the diagonal that is best for `sense`
/// (first in [`Orientation::all`] order on ties).
pub fn cost_tensor(
    marginals: &[MarginalDistribution],
    g: &Objective,
    k: usize,
    q: usize,
    sense: Sense,
) -> Result<CostTensor> {
    let n = marginals.len();
    if n < 2 {
        return Err(Error::InvalidInput("need at least two marginals".into()));
    }
    if k == 0 || q == 0 {
        return Err(Error::InvalidInput("order k and quadrature size Q must be at least 1".into()));
    }
    g.check_dim(n)?;
    let cells = k
        .checked_pow(n as u32)
        .filter(|c| c.saturating_mul(q) <= 1 << 32)
        .ok_or_else(|| Error::Budget(format!("{k}^{n} cells with Q = {q}")))?;
    let nodes = quantile_nodes(marginals, k, q);
    let orientations = Orientation::all(n);
    let per_cell: Vec<Result<(f64, usize)>> = (0..cells)
        .into_par_iter()
        .map(|flat| {
            let cell = unflatten(flat, n, k);
            let mut best: Option<(f64, usize)> = None;
            for (oi, o) in orientations.iter().enumerate() {
                let v = diagonal_mean(g, &nodes, &cell, o, q);
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!("objective on cell {cell:?}, orientation {:?}", o.signs())));
                }
                if best.is_none_or(|(b, _)| sense.better(v, b)) {
                    best = Some((v, oi));
                }
            }
            Ok(best.expect("at least one orientation"))
        })
        .collect();
    let mut values = Vec::with_capacity(cells);
    let mut orientation = Vec::with_capacity(cells);
    for r in per_cell {
        let (v, o) = r?;
        values.push(v);
        orientation.push(o);
    }
    Ok(CostTensor {
        n,
        k,
        values,
        orientation,
    })
}

/// Mean of `g` along one given diagonal, for re-evaluating a reported copula.
pub fn cell_value(
    marginals: &[MarginalDistribution],
    g: &Objective,
    k: usize,
    q: usize,
    cell: &[usize],
    o: &Orientation,
) -> f64 {
    let nodes = quantile_nodes(marginals, k, q);
    diagonal_mean(g, &nodes, cell, o, q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniforms() -> Vec<MarginalDistribution> {
        vec![MarginalDistribution::uniform(0.0, 1.0).unwrap(); 2]
    }

    #[test]
    fn product_cells_for_k2() {
        let d = cost_tensor(&uniforms(), &Objective::Product, 2, 32, Sense::Max).unwrap();
        assert!((d.get(&[0, 0]) - 1.0 / 12.0).abs() < 1e-4);
        assert!((d.get(&[1, 1]) - 7.0 / 12.0).abs() < 1e-4);
        assert!((d.get(&[0, 1]) - 5.0 / 24.0).abs() < 1e-4);
        assert_eq!(d.orientation_of(&[0, 1]), Orientation::plus(2));

        let d = cost_tensor(&uniforms(), &Objective::Product, 2, 32, Sense::Min).unwrap();
        assert!((d.get(&[0, 1]) - 1.0 / 6.0).abs() < 1e-4);
        assert_eq!(d.orientation_of(&[0, 1]), Orientation::anti(2));
    }

    #[test]
    fn midpoint_error_shrinks_quadratically() {
        let exact = 1.0 / 12.0;
        let err = |q| {
            let d = cost_tensor(&uniforms(), &Objective::Product, 2, q, Sense::Max).unwrap();
            (d.get(&[0, 0]) - exact).abs()
        };
        for q in [4, 8, 16] {
            assert!(err(q) >= 3.0 * err(2 * q), "q = {q}");
        }
    }

    #[test]
    fn non_finite_objective_names_the_cell() {
        let m = vec![MarginalDistribution::uniform(-1.0, 1.0).unwrap(); 2];
        let g = super::super::expr::parse_objective("ln(x1)").unwrap();
        match cost_tensor(&m, &g, 2, 4, Sense::Max) {
            Err(Error::NonFinite(msg)) => assert!(msg.contains("[0, 0]"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn totals_follow_permutations() {
        let d = CostTensor::from_values(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(d.total(&[vec![0, 1]]), 5.0);
        assert_eq!(d.total(&[vec![1, 0]]), 5.0);
        assert!(CostTensor::from_values(2, 2, vec![1.0, f64::NAN, 0.0, 0.0]).is_err());
    }
}
