//! Optimizing `E g(X_1, .., X_n)` over joint laws with fixed marginals,
//! restricted to permutation copulas of order `k`.

mod assignment;
mod cost;
mod expr;
mod marginal;
mod optimize;

pub use assignment::{
    brute_force_assignment, local_search_nd, solve_assignment_2d, Assignment, DualCertificate, BRUTE_FORCE_BUDGET,
};
pub use cost::{cell_value, cost_tensor, CostTensor, Sense, DEFAULT_QUADRATURE};
pub use expr::{parse_expr, parse_objective, BinOp, Expr, Func, Objective};
pub use marginal::{quantile_eval, MarginalDistribution};
pub use optimize::{
    default_schedule, evaluate_permutation_copula, match_probability, optimize_m_of_g, parse_schedule, MatchStep,
    MatchTrace, OptimizationResult, OptimizeConfig, Solver,
};
