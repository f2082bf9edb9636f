//! Choosing `sigma_2..sigma_n` to optimize `sum_i d(i, sigma_2(i), .., sigma_n(i))`.

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::cost::{CostTensor, Sense};
use crate::error::{Error, Result};

/// Most permutation tuples the exhaustive oracle will enumerate.
pub const BRUTE_FORCE_BUDGET: u64 = 50_000;

/// Relative slack under which two totals count as tied.
const TIE_REL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assignment {
    /// `sigma_2..sigma_n`.
    pub perms: Vec<Vec<usize>>,
    pub total: f64,
}

/// LP dual value matching the primal total of an exact 2D solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualCertificate {
    pub dual_bound: f64,
    pub gap: f64,
}

fn tie_tol(values: &[f64]) -> f64 {
    TIE_REL * (1.0 + values.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

/// Optimal `sigma` for a `k x k` matrix (row-major) in `O(k^3)`, with the
/// lexicographically smallest optimal `sigma` on ties.
pub fn solve_assignment_2d(cost: &[f64], k: usize, sense: Sense) -> Result<(Vec<usize>, f64, DualCertificate)> {
    if k == 0 || cost.len() != k * k {
        return Err(Error::InvalidInput(format!("expected a square matrix with {} entries", k * k)));
    }
    if let Some(i) = cost.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("cost entry ({}, {})", i / k, i % k)));
    }
    let sign = sense.sign();
    let a = |i: usize, j: usize| -sign * cost[i * k + j];
    let (u, v, mut row_of_col) = hungarian(k, &a);
    let mut col_of_row = vec![0; k];
    for (j, &i) in row_of_col.iter().enumerate() {
        col_of_row[i] = j;
    }
    let tol = tie_tol(cost) * k as f64;
    let tight = |i: usize, j: usize| a(i, j) - u[i] - v[j] <= tol;
    lexicographic_repair(k, &tight, &mut col_of_row, &mut row_of_col);
    let total: f64 = (0..k).map(|i| cost[i * k + col_of_row[i]]).sum();
    let dual_bound = -sign * (u.iter().sum::<f64>() + v.iter().sum::<f64>());
    Ok((
        col_of_row,
        total,
        DualCertificate {
            dual_bound,
            gap: (total - dual_bound).abs(),
        },
    ))
}

/// Shortest-augmenting-path Hungarian method minimizing `sum a(i, sigma(i))`.
/// Returns row potentials, column potentials and the row matched to each column.
fn hungarian(k: usize, a: &dyn Fn(usize, usize) -> f64) -> (Vec<f64>, Vec<f64>, Vec<usize>) {
    // 1-based with a virtual column 0, as in the classic formulation.
    let mut u = vec![0.0; k + 1];
    let mut v = vec![0.0; k + 1];
    let mut p = vec![0usize; k + 1];
    let mut way = vec![0usize; k + 1];
    for i in 1..=k {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; k + 1];
        let mut used = vec![false; k + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=k {
                if used[j] {
                    continue;
                }
                let cur = a(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=k {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let row_of_col = (1..=k).map(|j| p[j] - 1).collect();
    (u[1..].to_vec(), v[1..].to_vec(), row_of_col)
}

/// Walks rows in order and moves each to its smallest column that still
/// admits a perfect matching of the remaining rows within the tight edges.
fn lexicographic_repair(
    k: usize,
    tight: &dyn Fn(usize, usize) -> bool,
    col_of_row: &mut [usize],
    row_of_col: &mut [usize],
) {
    let mut fixed = vec![false; k];
    for i in 0..k {
        let c0 = col_of_row[i];
        for j in 0..c0 {
            if fixed[j] || !tight(i, j) {
                continue;
            }
            let r = row_of_col[j];
            let mut seen = vec![false; k];
            seen[j] = true;
            if augment(r, c0, tight, &fixed, &mut seen, col_of_row, row_of_col) {
                col_of_row[i] = j;
                row_of_col[j] = i;
                break;
            }
        }
        fixed[col_of_row[i]] = true;
    }
}

/// Re-matches row `r` along tight alternating edges so that column `free` gets used.
fn augment(
    r: usize,
    free: usize,
    tight: &dyn Fn(usize, usize) -> bool,
    fixed: &[bool],
    seen: &mut [bool],
    col_of_row: &mut [usize],
    row_of_col: &mut [usize],
) -> bool {
    for c in 0..fixed.len() {
        if seen[c] || fixed[c] || !tight(r, c) {
            continue;
        }
        seen[c] = true;
        if c == free || augment(row_of_col[c], free, tight, fixed, seen, col_of_row, row_of_col) {
            col_of_row[r] = c;
            row_of_col[c] = r;
            return true;
        }
    }
    false
}

fn factorial_power(k: usize, e: usize) -> u64 {
    let f = (1..=k as u64).fold(1u64, |acc, x| acc.saturating_mul(x));
    (0..e).fold(1u64, |acc, _| acc.saturating_mul(f))
}

/// Exhaustive optimum over all `(k!)^(n-1)` tuples in lexicographic order;
/// the first tuple reaching the optimum wins ties.
pub fn brute_force_assignment(d: &CostTensor, sense: Sense) -> Result<Assignment> {
    let count = factorial_power(d.k, d.n - 1);
    if count > BRUTE_FORCE_BUDGET {
        return Err(Error::Budget(format!(
            "({}!)^{} = {count} tuples exceeds {BRUTE_FORCE_BUDGET}",
            d.k,
            d.n - 1
        )));
    }
    let tol = tie_tol(&d.values) * d.k as f64;
    let sign = sense.sign();
    let mut best: Option<Assignment> = None;
    for perms in (0..d.n - 1)
        .map(|_| (0..d.k).permutations(d.k))
        .multi_cartesian_product()
    {
        let total = d.total(&perms);
        if best.as_ref().is_none_or(|b| sign * (total - b.total) > tol) {
            best = Some(Assignment { perms, total });
        }
    }
    Ok(best.expect("at least one tuple"))
}

/// Pairwise-swap hill climbing over `sigma_2..sigma_n`, best of `restarts` runs.
///
/// The first run starts from the identity, later ones from seeded random permutations.
pub fn local_search_nd(d: &CostTensor, sense: Sense, restarts: usize, seed: u64) -> Assignment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tol = tie_tol(&d.values);
    let mut best: Option<Assignment> = None;
    for run in 0..restarts.max(1) {
        let mut perms: Vec<Vec<usize>> = (1..d.n).map(|_| (0..d.k).collect()).collect();
        if run > 0 {
            for p in perms.iter_mut() {
                p.shuffle(&mut rng);
            }
        }
        climb(d, sense, tol, &mut perms);
        let total = d.total(&perms);
        if best.as_ref().is_none_or(|b| sense.better(total, b.total)) {
            best = Some(Assignment { perms, total });
        }
    }
    best.expect("at least one run")
}

fn climb(d: &CostTensor, sense: Sense, tol: f64, perms: &mut [Vec<usize>]) {
    let sign = sense.sign();
    loop {
        let mut improved = false;
        for axis in 0..perms.len() {
            for a in 0..d.k {
                for b in a + 1..d.k {
                    let before = d.values[d.flat_of(perms, a)] + d.values[d.flat_of(perms, b)];
                    perms[axis].swap(a, b);
                    let after = d.values[d.flat_of(perms, a)] + d.values[d.flat_of(perms, b)];
                    if sign * (after - before) > tol {
                        improved = true;
                    } else {
                        perms[axis].swap(a, b);
                    }
                }
            }
        }
        if !improved {
            return;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn small_examples() {
        let (s, t, c) = solve_assignment_2d(&[1.0, 0.0, 0.0, 1.0], 2, Sense::Max).unwrap();
        assert_eq!((s, t), (vec![0, 1], 2.0));
        assert!(c.gap < 1e-12);
        let (s, t, _) = solve_assignment_2d(&[1.0, 2.0, 3.0, 4.0], 2, Sense::Max).unwrap();
        assert_eq!((s, t), (vec![0, 1], 5.0));
        let (s, t, _) = solve_assignment_2d(&[1.0, 0.0, 0.0, 1.0], 2, Sense::Min).unwrap();
        assert_eq!((s, t), (vec![1, 0], 0.0));
    }

    #[test]
    fn ties_resolve_to_smallest_permutation() {
        let (s, t, _) = solve_assignment_2d(&[0.0; 16], 4, Sense::Max).unwrap();
        assert_eq!((s, t), (vec![0, 1, 2, 3], 0.0));
        // Anti-diagonal block forces the last two rows; the first two are tied.
        let c = [
            1.0, 1.0, 0.0, 0.0, //
            1.0, 1.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 5.0, //
            0.0, 0.0, 5.0, 0.0,
        ];
        let (s, _, _) = solve_assignment_2d(&c, 4, Sense::Max).unwrap();
        assert_eq!(s, vec![0, 1, 3, 2]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(solve_assignment_2d(&[1.0, f64::INFINITY, 0.0, 0.0], 2, Sense::Max).is_err());
        assert!(solve_assignment_2d(&[1.0, 2.0, 3.0], 2, Sense::Max).is_err());
    }

    #[test]
    fn brute_force_examples() {
        let d = CostTensor::from_values(2, 1, vec![0.7]).unwrap();
        assert_eq!(brute_force_assignment(&d, Sense::Max).unwrap().total, 0.7);
        let d = CostTensor::from_values(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(brute_force_assignment(&d, Sense::Max).unwrap().total, 2.0);
        let d = CostTensor::from_values(3, 6, vec![0.0; 216]).unwrap();
        assert!(matches!(brute_force_assignment(&d, Sense::Max), Err(Error::Budget(_))));
    }

    #[test]
    fn hungarian_matches_brute_force_seed_7() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let values: Vec<f64> = (0..16).map(|_| rng.gen()).collect();
        let d = CostTensor::from_values(2, 4, values.clone()).unwrap();
        for sense in [Sense::Max, Sense::Min] {
            let bf = brute_force_assignment(&d, sense).unwrap();
            let (s, t, _) = solve_assignment_2d(&values, 4, sense).unwrap();
            assert_eq!((vec![s], t), (bf.perms, bf.total));
        }
    }

    #[test]
    fn local_search_on_flat_and_separable_tensors() {
        let d = CostTensor::from_values(3, 4, vec![0.0; 64]).unwrap();
        assert_eq!(local_search_nd(&d, Sense::Max, 3, 0).total, 0.0);
        let (a, b, c) = ([1.0, 2.0, 3.0, 4.0], [0.5, 0.0, 2.0, 1.0], [3.0, 1.0, 0.0, 2.0]);
        let values: Vec<f64> = (0..64).map(|f| a[f / 16] + b[f / 4 % 4] + c[f % 4]).collect();
        let d = CostTensor::from_values(3, 4, values).unwrap();
        let r = local_search_nd(&d, Sense::Max, 1, 5);
        let expected: f64 = a.iter().chain(&b).chain(&c).sum();
        assert!((r.total - expected).abs() < 1e-12);
    }

    #[test]
    fn local_search_is_seed_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let values: Vec<f64> = (0..125).map(|_| rng.gen()).collect();
        let d = CostTensor::from_values(3, 5, values).unwrap();
        assert_eq!(local_search_nd(&d, Sense::Min, 8, 42), local_search_nd(&d, Sense::Min, 8, 42));
        let many = local_search_nd(&d, Sense::Max, 20, 1).total;
        let one = local_search_nd(&d, Sense::Max, 1, 1).total;
        assert!(many >= one);
    }
}
