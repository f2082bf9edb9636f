//! Acceptance checks, one line per criterion. Run with
//! `cargo test -p extcop --test acceptance`.

use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use extcop::approximation::{approximate, ApproximationReport};
use extcop::constructions::{
    doubling_map, four_line_3d, graph_copula, measure_preserving_check, permutation_copula, shuffle_copula,
    tent_copula, Orientation, PermutationCopulaSpec, PowerMap,
};
use extcop::copula::{grid_extract_exact, validate_copula_measure};
use extcop::extremality::{dyadic_scales, find_dense_square, functional_cover_check, lemma_decompose, SquareRegion};
use extcop::frechet::{
    brute_force_assignment, default_schedule, local_search_nd, match_probability, optimize_m_of_g,
    solve_assignment_2d, CostTensor, MarginalDistribution, Objective, OptimizeConfig, Sense,
};
use extcop::rational::{self, ratio};
use extcop::{CopulaModel, Error, GridDensity, GridSpec, SegmentMeasure};

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n)
        .map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 })
        .sum();
    (f(a) + f(b) + inner) * h / 3.0
}

type Timed = (&'static str, ApproximationReport, Duration);

fn approximants() -> Result<Vec<Timed>, Error> {
    let mut out = Vec::new();
    for (name, c) in [
        ("pi", CopulaModel::independence(2)?),
        ("fgm(1)", CopulaModel::fgm(rational::one())?),
    ] {
        for m in [8, 16, 32] {
            let start = Instant::now();
            let r = approximate(&c, m, None)?;
            out.push((name, r, start.elapsed()));
        }
    }
    Ok(out)
}

fn criterion_1(reports: &[Timed]) -> Outcome {
    let mut lines = Vec::new();
    let mut ok = reports.len() == 6;
    for (name, r, took) in reports {
        let bound = 5.0 / r.m as f64;
        ok &= r.lattice_dinf <= bound && r.resolution == 4 * r.m && (r.bound - bound).abs() < 1e-15;
        ok &= *took < Duration::from_secs(10);
        lines.push(format!(
            "{name} m={} d={:.4}<={bound} in {:.2}s",
            r.m,
            r.lattice_dinf,
            took.as_secs_f64()
        ));
    }
    check(ok, lines.join(", "))
}

fn perm_spec() -> impl Strategy<Value = PermutationCopulaSpec> {
    (2usize..=4, 1usize..=6)
        .prop_flat_map(|(n, m)| {
            (
                Just(m),
                proptest::collection::vec(Just((0..m).collect::<Vec<_>>()).prop_shuffle(), n - 1),
                proptest::collection::vec(0usize..(1 << (n - 1)), m),
            )
        })
        .prop_map(|(m, perms, masks)| {
            let n = perms.len() + 1;
            let os = masks.into_iter().map(|k| Orientation::from_index(n, k)).collect();
            PermutationCopulaSpec::with_orientations(m, perms, os).unwrap()
        })
}

fn shuffle() -> impl Strategy<Value = SegmentMeasure> {
    (2usize..=3, 2i64..=16)
        .prop_flat_map(|(n, den)| {
            let inner: Vec<i64> = (1..den).collect();
            let most = inner.len().min(4);
            (Just(n), Just(den), proptest::sample::subsequence(inner, 0..=most))
        })
        .prop_flat_map(|(n, den, inner)| {
            let s = inner.len() + 1;
            (Just(n), Just(den), Just(inner), proptest::collection::vec(0usize..(1 << (n - 1)), s))
        })
        .prop_map(|(n, den, inner, masks)| {
            let mut b = vec![rational::zero()];
            b.extend(inner.into_iter().map(|k| ratio(k, den)));
            b.push(rational::one());
            let os: Vec<Orientation> = masks.into_iter().map(|k| Orientation::from_index(n, k)).collect();
            shuffle_copula(&b, &os, n).unwrap()
        })
}

fn cases(n: u32) -> Config {
    Config {
        cases: n,
        failure_persistence: None,
        ..Config::default()
    }
}

fn exact_marginals(sm: SegmentMeasure, ms: &[usize]) -> Result<(), TestCaseError> {
    let c = CopulaModel::Segments(sm);
    for &m in ms {
        let r = validate_copula_measure(&c, m, 0.0).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!(r.ok, "m={} deviation {}", m, r.max_deviation_exact);
    }
    Ok(())
}

fn criterion_2() -> Outcome {
    let mut count = 0;
    let mut runner = TestRunner::new(cases(120));
    runner
        .run(&(perm_spec(), 1usize..=3), |(spec, k)| {
            exact_marginals(permutation_copula(&spec).unwrap(), &[spec.m, k * spec.m, 5])
        })
        .map_err(|e| format!("permutation: {e}"))?;
    count += 120;
    let mut runner = TestRunner::new(cases(60));
    runner
        .run(&(shuffle(), 1usize..=12), |(sm, m)| exact_marginals(sm, &[m, 16]))
        .map_err(|e| format!("shuffle: {e}"))?;
    count += 60;
    let mut runner = TestRunner::new(cases(40));
    runner
        .run(&(1i64..50, 2usize..=4, 1usize..=10), |(p, n, m)| {
            exact_marginals(tent_copula(&ratio(p, 50), n).unwrap(), &[m])
        })
        .map_err(|e| format!("tent: {e}"))?;
    count += 40;
    exact_marginals(four_line_3d(), &[1, 2, 3, 4, 8]).map_err(|e| format!("four-line: {e}"))?;
    count += 1;
    Ok(format!("{count} random constructions exact at tol 0"))
}

fn decompose_ok(name: &str, d: &GridDensity) -> Result<String, String> {
    let floor = ratio(1, d.spec().m as i64);
    let sq = find_dense_square(d, &dyadic_scales(&floor))
        .map_err(|e| e.to_string())?
        .ok_or(format!("{name}: no dense square"))?;
    let w = lemma_decompose(d, &sq).map_err(|e| e.to_string())?;
    let m = w.h1.spec().m;
    let valid = |h: &GridDensity| {
        validate_copula_measure(&CopulaModel::Density(h.clone()), m, 0.0)
            .map(|r| r.ok)
            .unwrap_or(false)
            && h.values().iter().all(|v| *v >= rational::zero())
    };
    check(
        w.h1 != w.h2 && valid(&w.h1) && valid(&w.h2) && w.averages_to(d),
        format!("{name}: split at edge {}", rational::format(&sq.edge)),
    )
}

fn criterion_3() -> Outcome {
    let spec4 = GridSpec::new(2, 4).unwrap();
    let fgm = GridDensity::from_cell_masses(
        spec4,
        &grid_extract_exact(&CopulaModel::fgm(rational::one()).unwrap(), 4).unwrap(),
    )
    .unwrap();
    let a = decompose_ok("fgm(1) m=4", &fgm)?;
    let b = decompose_ok("constant", &GridDensity::uniform(spec4))?;
    let board = GridDensity::new(
        GridSpec::new(2, 2).unwrap(),
        vec![ratio(2, 1), rational::zero(), rational::zero(), ratio(2, 1)],
    )
    .unwrap();
    let whole = SquareRegion::new(vec![rational::zero(); 2], rational::one()).unwrap();
    let coarse = matches!(lemma_decompose(&board, &whole), Err(Error::HypothesisViolated(_)));
    let refined = decompose_ok("checkerboard", &board)?;
    check(coarse, format!("{a}; {b}; checkerboard fails at edge 1; {refined}"))
}

fn criterion_4() -> Outcome {
    let u = vec![MarginalDistribution::uniform(0.0, 1.0).unwrap(); 2];
    let cfg = |sense| OptimizeConfig {
        k: 64,
        sense,
        ..OptimizeConfig::default()
    };
    let max = optimize_m_of_g(&u, &Objective::Product, &cfg(Sense::Max)).map_err(|e| e.to_string())?;
    let min = optimize_m_of_g(&u, &Objective::Product, &cfg(Sense::Min)).map_err(|e| e.to_string())?;
    let upper = simpson(|t| t * t, 0.0, 1.0, 1000);
    let lower = simpson(|t| t * (1.0 - t), 0.0, 1.0, 1000);
    check(
        (max.value - upper).abs() <= 0.02 && (min.value - lower).abs() <= 0.02,
        format!("max {:.5} vs {upper:.5}, min {:.5} vs {lower:.5}", max.value, min.value),
    )
}

fn criterion_5() -> Outcome {
    let fx = MarginalDistribution::uniform(0.0, 1.0).unwrap();
    let fy = MarginalDistribution::uniform(0.5, 1.5).unwrap();
    let schedule = default_schedule(3, 64);
    if schedule.last() != Some(&(0.125, 64)) {
        return Err(format!("schedule ends at {:?}", schedule.last()));
    }
    let t = match_probability(&fx, &fy, &schedule, 32).map_err(|e| e.to_string())?;
    let dens = |a: f64, x: f64| -> f64 { if (a..=a + 1.0).contains(&x) { 1.0 } else { 0.0 } };
    let oracle = simpson(|x| dens(0.0, x).min(dens(0.5, x)), -1.0, 3.0, 40_000);
    let same = match_probability(&fx, &fx, &[(0.25, 16)], 32).map_err(|e| e.to_string())?;
    check(
        (t.estimate - oracle).abs() <= 0.08 && same.estimate == 1.0,
        format!("estimate {:.5} vs {oracle:.5}, identical {}", t.estimate, same.estimate),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for inst in 0..100 {
        // Integer costs keep every total exact in f64.
        let values: Vec<f64> = (0..36).map(|_| rng.gen_range(0..1000) as f64).collect();
        for sense in [Sense::Max, Sense::Min] {
            let (_, total, _) = solve_assignment_2d(&values, 6, sense).map_err(|e| e.to_string())?;
            let tensor = CostTensor::from_values(2, 6, values.clone()).map_err(|e| e.to_string())?;
            let brute = brute_force_assignment(&tensor, sense).map_err(|e| e.to_string())?;
            if total != brute.total {
                return Err(format!("instance {inst}: hungarian {total} vs brute force {}", brute.total));
            }
        }
    }
    let mut worst = f64::INFINITY;
    for inst in 0..20 {
        let values: Vec<f64> = (0..64).map(|_| rng.gen::<f64>()).collect();
        let tensor = CostTensor::from_values(3, 4, values).map_err(|e| e.to_string())?;
        let brute = brute_force_assignment(&tensor, Sense::Max).map_err(|e| e.to_string())?;
        let local = local_search_nd(&tensor, Sense::Max, 50, inst);
        worst = worst.min(local.total / brute.total);
    }
    check(worst >= 0.95, format!("200 exact solves match; local search worst ratio {worst:.4}"))
}

fn criterion_7() -> Outcome {
    let dbl = measure_preserving_check(&doubling_map(), 1024).map_err(|e| e.to_string())?;
    let sq = measure_preserving_check(&PowerMap::new(vec![2.0]).map_err(|e| e.to_string())?, 4)
        .map_err(|e| e.to_string())?;
    let w = sq.witness.clone().ok_or("x^2 gave no witness")?;
    let cdf = graph_copula(doubling_map())
        .and_then(|c| c.cdf(&[0.75, 0.5]))
        .map_err(|e| e.to_string())?;
    check(
        dbl.ok
            && dbl.max_deviation <= 1e-12
            && !sq.ok
            && (w.lo, w.hi) == (0.0, 0.25)
            && (sq.max_deviation - 0.25).abs() <= 1e-12
            && (cdf - 0.5).abs() <= 1e-12,
        format!(
            "doubling dev {:e}; x^2 dev {} on [{}, {}]; C(0.75, 0.5) = {cdf}",
            dbl.max_deviation, sq.max_deviation, w.lo, w.hi
        ),
    )
}

fn criterion_8() -> Outcome {
    let tent = functional_cover_check(&tent_copula(&ratio(1, 2), 2).unwrap(), 8).map_err(|e| e.to_string())?;
    let four = functional_cover_check(&four_line_3d(), 8).map_err(|e| e.to_string())?;
    let mut count = 0;
    let mut runner = TestRunner::new(cases(100));
    runner
        .run(&perm_spec(), |spec| {
            let cert = functional_cover_check(&permutation_copula(&spec).unwrap(), 8).unwrap();
            prop_assert!(cert.covered, "{:?}", spec);
            Ok(())
        })
        .map_err(|e| format!("permutation copula: {e}"))?;
    count += 100;
    check(
        tent.covered && !four.covered,
        format!(
            "tent(1/2) covered={}, {count} permutation copulas covered, four-line covered={}",
            tent.covered, four.covered
        ),
    )
}

fn criterion_9(reports: &[Timed]) -> Outcome {
    let mut lines = Vec::new();
    let mut ok = !reports.is_empty();
    for (name, r, _) in reports {
        let cert = functional_cover_check(&r.measure, r.m).map_err(|e| e.to_string())?;
        ok &= cert.covered;
        lines.push(format!("{name} m={}: {}", r.m, cert.covered));
    }
    check(ok, lines.join(", "))
}

fn report(id: usize, name: &str, limit: Duration, run: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = run();
    let took = start.elapsed();
    let in_time = took <= limit;
    let pass = outcome.is_ok() && in_time;
    let detail = match outcome {
        Ok(d) | Err(d) => d,
    };
    let late = if in_time { "" } else { " (over time limit)" };
    println!(
        "criterion {id} {name}: {} [{:.2}s / {}s]{late} {detail}",
        if pass { "PASS" } else { "FAIL" },
        took.as_secs_f64(),
        limit.as_secs()
    );
    pass
}

fn main() {
    let secs = Duration::from_secs;
    let mut all = true;
    let mut reports = Vec::new();
    all &= report(1, "uniform approximation bound", secs(60), || {
        reports = approximants().map_err(|e| e.to_string())?;
        criterion_1(&reports)
    });
    all &= report(2, "exact marginals", secs(30), criterion_2);
    all &= report(3, "dense-square decomposition", secs(5), criterion_3);
    all &= report(4, "product objective bounds", secs(20), criterion_4);
    all &= report(5, "match probability", secs(60), criterion_5);
    all &= report(6, "solver oracle equivalence", secs(60), criterion_6);
    all &= report(7, "measure preservation", secs(5), criterion_7);
    all &= report(8, "cover certificates", secs(5), criterion_8);
    all &= report(9, "approximants certified extreme", secs(10), || criterion_9(&reports));
    if !all {
        std::process::exit(1);
    }
}
