use serde::Serialize;

use super::assignment::{local_search_nd, solve_assignment_2d, DualCertificate};
use super::cost::{cell_value, cost_tensor, Sense, DEFAULT_QUADRATURE};
use super::expr::Objective;
use super::marginal::MarginalDistribution;
use crate::constructions::{Orientation, PermutationCopulaSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Exact,
    Local,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeConfig {
    pub k: usize,
    pub sense: Sense,
    pub quadrature: usize,
    /// Local-search runs for `n >= 3`.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        OptimizeConfig {
            k: 16,
            sense: Sense::Max,
            quadrature: DEFAULT_QUADRATURE,
            restarts: 20,
            seed: 0,
        }
    }
}

/// Best permutation copula of order `k` found for `E g(F^-1(U))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationResult {
    pub value: f64,
    pub perms: Vec<Vec<usize>>,
    /// Diagonal used in cell `(i, sigma_2(i), ..)`, one per `i`.
    pub orientations: Vec<Orientation>,
    pub k: usize,
    pub sense: Sense,
    pub solver: Solver,
    pub quadrature: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<DualCertificate>,
}

impl OptimizationResult {
    pub fn to_spec(&self) -> Result<PermutationCopulaSpec> {
        PermutationCopulaSpec::with_orientations(self.k, self.perms.clone(), self.orientations.clone())
    }
}

/// Maximizes (or minimizes) over permutation copulas of order `k`; exact for
/// two marginals, pairwise-swap local search otherwise.
pub fn optimize_m_of_g(
    marginals: &[MarginalDistribution],
    g: &Objective,
    cfg: &OptimizeConfig,
) -> Result<OptimizationResult> {
    let d = cost_tensor(marginals, g, cfg.k, cfg.quadrature, cfg.sense)?;
    let k = cfg.k;
    let (perms, total, solver, certificate) = if d.n == 2 {
        let (sigma, total, cert) = solve_assignment_2d(&d.values, k, cfg.sense)?;
        (vec![sigma], total, Solver::Exact, Some(scale(cert, k)))
    } else {
        let a = local_search_nd(&d, cfg.sense, cfg.restarts, cfg.seed);
        (a.perms, a.total, Solver::Local, None)
    };
    let orientations = (0..k)
        .map(|i| {
            let cell: Vec<usize> = std::iter::once(i).chain(perms.iter().map(|p| p[i])).collect();
            d.orientation_of(&cell)
        })
        .collect();
    Ok(OptimizationResult {
        value: total / k as f64,
        perms,
        orientations,
        k,
        sense: cfg.sense,
        solver,
        quadrature: cfg.quadrature,
        certificate,
    })
}

fn scale(c: DualCertificate, k: usize) -> DualCertificate {
    DualCertificate {
        dual_bound: c.dual_bound / k as f64,
        gap: c.gap / k as f64,
    }
}

/// `(1/k) sum_i` of the diagonal mean of `g` in each cell of `spec`.
pub fn evaluate_permutation_copula(
    marginals: &[MarginalDistribution],
    g: &Objective,
    spec: &PermutationCopulaSpec,
    quadrature: usize,
) -> Result<f64> {
    if marginals.len() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            got: marginals.len(),
        });
    }
    g.check_dim(spec.dim())?;
    let total: f64 = (0..spec.m)
        .map(|i| cell_value(marginals, g, spec.m, quadrature, &spec.cell(i), &spec.orientations[i]))
        .sum();
    let value = total / spec.m as f64;
    if !value.is_finite() {
        return Err(Error::NonFinite("objective of the permutation copula".into()));
    }
    Ok(value)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchStep {
    pub eps: f64,
    pub k: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchTrace {
    /// Value at the last (finest) schedule entry.
    pub estimate: f64,
    pub trace: Vec<MatchStep>,
    #[serde(skip)]
    pub witness: Option<OptimizationResult>,
}

/// `eps_j = 2^-j` for `j = 1..=levels`, with `k_j = min(k_max, ceil(8 / eps_j))`.
pub fn default_schedule(levels: usize, k_max: usize) -> Vec<(f64, usize)> {
    (1..=levels)
        .map(|j| {
            let eps = 0.5f64.powi(j as i32);
            (eps, ((8.0 / eps).ceil() as usize).min(k_max))
        })
        .collect()
}

/// Parses `eps:k,eps:k,..`.
pub fn parse_schedule(text: &str) -> Result<Vec<(f64, usize)>> {
    text.split(',')
        .map(|item| {
            let (e, k) = item
                .split_once(':')
                .ok_or_else(|| Error::InvalidInput(format!("schedule entry `{item}` is not eps:k")))?;
            let eps = super::super::rational::parse(e.trim()).map(|q| super::super::rational::to_f64(&q))?;
            let k = k
                .trim()
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad order `{k}` in schedule")))?;
            Ok((eps, k))
        })
        .collect()
}

/// Estimates `sup P(X = Y)` by maximizing `E g_eps` along the schedule.
pub fn match_probability(
    fx: &MarginalDistribution,
    fy: &MarginalDistribution,
    schedule: &[(f64, usize)],
    quadrature: usize,
) -> Result<MatchTrace> {
    if schedule.is_empty() {
        return Err(Error::InvalidInput("schedule must not be empty".into()));
    }
    for w in schedule.windows(2) {
        if !(w[1].0 < w[0].0 && w[1].1 >= w[0].1) {
            return Err(Error::InvalidInput(
                "schedule widths must decrease while orders do not decrease".into(),
            ));
        }
    }
    let marginals = [fx.clone(), fy.clone()];
    let mut trace = Vec::with_capacity(schedule.len());
    let mut witness = None;
    for &(eps, k) in schedule {
        let cfg = OptimizeConfig {
            k,
            sense: Sense::Max,
            quadrature,
            ..OptimizeConfig::default()
        };
        let r = optimize_m_of_g(&marginals, &Objective::match_eps(eps)?, &cfg)?;
        trace.push(MatchStep { eps, k, value: r.value });
        witness = Some(r);
    }
    Ok(MatchTrace {
        estimate: trace.last().expect("non-empty").value,
        trace,
        witness,
    })
}
