//! The `extcop` command line. Each subcommand parses its inputs, makes one
//! library call and prints the result as JSON (or CSV for samples and plot data).
//!
//! Exit codes: 0 success, 1 domain error or a failed check, 2 usage error.

mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand};
use serde_json::{json, Value};

use extcop::approximation::approximate;
use extcop::constructions::{
    four_line_3d, graph_copula, measure_preserving_check, permutation_copula, shift_transform, shuffle_copula,
    swap_transform, tent_copula, Orientation, PermutationCopulaSpec,
};
use extcop::copula::{dinf_distance, validate_copula_measure};
use extcop::extremality::{
    dyadic_scales, find_dense_square, functional_cover_check, lemma_decompose, singularity_diagnostic, SquareRegion,
};
use extcop::frechet::{
    default_schedule, match_probability, optimize_m_of_g, parse_objective, parse_schedule, MarginalDistribution,
    Objective, OptimizeConfig, Sense,
};
use extcop::io::{self, MapFile, MeasureFile};
use extcop::rational;
use extcop::{CopulaModel, Error, GridDensity, Rational, SegmentMeasure};

#[derive(Parser, Debug)]
#[command(name = "extcop", version, about = "Extreme copulas: constructions, extremality checks, approximation and Frechet bounds")]
struct Cli {
    /// TOML file whose keys mirror the flags; explicit flags win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Seed for sampling and randomized search.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the main output here instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Write outputs into this directory under default file names.
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Build a segment measure.
    #[command(subcommand)]
    Gen(Gen),
    /// Permutation-copula approximant of a copula.
    Approx(ApproxArgs),
    /// Extremality diagnostics.
    #[command(subcommand)]
    Analyze(Analyze),
    /// Optimize E g(X_1, .., X_n) over permutation copulas.
    Optimize(OptimizeArgs),
    /// Estimate sup P(X = Y) over couplings.
    MatchProb(MatchArgs),
    /// Lattice estimate of the uniform distance between two copulas.
    Dist(DistArgs),
    /// Draw points from a segment measure (CSV).
    Sample(SampleArgs),
    /// Check the uniform marginals of a measure on slabs of width 1/m.
    Validate(ValidateArgs),
    /// Map checks.
    #[command(subcommand)]
    Check(Check),
    /// Segment endpoints and weights as CSV, for n = 2 or 3.
    PlotData(MeasureArg),
}

#[derive(Subcommand, Debug)]
enum Gen {
    /// Tent copula with peak t.
    Tent {
        #[arg(long)]
        t: String,
        #[arg(long, default_value_t = 2)]
        n: usize,
    },
    /// Shuffle on axis-1 slabs.
    Shuffle {
        /// Slab breakpoints, e.g. "0,1/2,1".
        #[arg(long)]
        breaks: String,
        /// One sign string per slab, e.g. "++,+-".
        #[arg(long)]
        orient: String,
        #[arg(long, default_value_t = 2)]
        n: usize,
    },
    /// Permutation copula of order m.
    Perm {
        #[arg(long)]
        m: usize,
        /// `k=s_0,..,s_{m-1}` (0-based images) for axis k >= 2; repeat per axis.
        #[arg(long, required = true)]
        perm: Vec<String>,
        /// Sign strings per cell; a single one applies to all cells.
        #[arg(long)]
        orient: Option<String>,
    },
    /// Four-segment example in three dimensions.
    Fourline3d,
    /// Graph copula of a piecewise linear map.
    Graph {
        #[arg(long)]
        map: PathBuf,
    },
    /// Shift every coordinate by alpha modulo 1.
    Shift {
        #[arg(long)]
        measure: PathBuf,
        /// One shift per axis, e.g. "0,1/3".
        #[arg(long)]
        alpha: String,
    },
    /// Exchange two slabs of equal width along one axis.
    Swap {
        #[arg(long)]
        measure: PathBuf,
        /// 1-based axis.
        #[arg(long)]
        axis: usize,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long)]
        delta: String,
    },
}

#[derive(Args, Debug)]
struct ApproxArgs {
    /// `pi`, `m`, `w`, `fgm:theta` or a measure file.
    #[arg(long)]
    copula: String,
    #[arg(long)]
    m: usize,
    /// Rounding denominator (default m^(n+2)).
    #[arg(long = "D", alias = "denominator")]
    d: Option<u64>,
    /// Dimension for `pi` and `m`.
    #[arg(long, default_value_t = 2)]
    n: usize,
    /// Also write the approximant here.
    #[arg(long, value_name = "FILE")]
    measure_out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Analyze {
    /// Split a grid density into two distinct copula densities.
    Decompose {
        #[arg(long)]
        density: PathBuf,
        /// Square edge; default searches dyadic edges down to 1/m.
        #[arg(long)]
        scale: Option<String>,
    },
    /// Singularity verdict for a measure.
    Extremality {
        #[arg(long)]
        measure: PathBuf,
        #[arg(long)]
        floor: Option<String>,
    },
    /// Functional-cover certificate for a segment measure.
    Cover {
        #[arg(long)]
        measure: PathBuf,
        #[arg(long)]
        r: usize,
    },
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("objective").required(true).args(["g", "g_builtin"])))]
struct OptimizeArgs {
    /// `uniform:a,b`, `exp:rate`, `normal:mu,sigma` or `table:file.csv`, one per variable.
    #[arg(long, num_args = 1.., required = true)]
    marginals: Vec<String>,
    /// Objective expression in x1..xn.
    #[arg(long)]
    g: Option<String>,
    /// `product`, `abs_diff` or `match_eps:e`.
    #[arg(long)]
    g_builtin: Option<String>,
    #[arg(long, default_value_t = 16)]
    k: usize,
    #[arg(long, default_value = "max")]
    sense: Sense,
    /// Midpoint nodes per cell diagonal.
    #[arg(long = "Q", alias = "quadrature", default_value_t = 32)]
    q: usize,
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    /// Write the optimal permutation copula here.
    #[arg(long, value_name = "FILE")]
    witness: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MatchArgs {
    #[arg(long)]
    fx: String,
    #[arg(long)]
    fy: String,
    /// `eps:k,eps:k,..`; overrides --levels and --k-max.
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long, default_value_t = 3)]
    levels: usize,
    #[arg(long, default_value_t = 64)]
    k_max: usize,
    #[arg(long = "Q", alias = "quadrature", default_value_t = 32)]
    q: usize,
}

#[derive(Args, Debug)]
struct DistArgs {
    #[arg(long)]
    a: String,
    #[arg(long)]
    b: String,
    #[arg(long)]
    r: usize,
    #[arg(long, default_value_t = 2)]
    n: usize,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[arg(long)]
    measure: PathBuf,
    #[arg(long)]
    count: usize,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long)]
    measure: PathBuf,
    #[arg(long)]
    m: usize,
    /// Defaults to 0 for exact measures and 1e-12 otherwise.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Check {
    /// Measure preservation of each coordinate map on r dyadic bins.
    Mp {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        r: usize,
    },
}

#[derive(Args, Debug)]
struct MeasureArg {
    #[arg(long)]
    measure: PathBuf,
}

/// Failure of a run, carrying its exit code.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Domain(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_)
            | Error::Syntax { .. }
            | Error::UnknownIdentifier { .. }
            | Error::Arity { .. }
            | Error::Format(_) => Failure::Usage(e.to_string()),
            _ => Failure::Domain(e.to_string()),
        }
    }
}

type Out<T> = std::result::Result<T, Failure>;

/// Result of a subcommand: files to write and whether the run counts as passed.
struct Output {
    main: String,
    main_name: &'static str,
    extra: Vec<(PathBuf, String)>,
    ok: bool,
}

impl Output {
    fn json(v: Value, name: &'static str) -> Self {
        Output {
            main: io::pretty(&v),
            main_name: name,
            extra: Vec::new(),
            ok: true,
        }
    }
}

fn read(path: &Path) -> Out<String> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Out<()> {
    fs::write(path, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}

fn q(text: &str) -> Out<Rational> {
    Ok(rational::parse(text.trim())?)
}

fn q_list(text: &str) -> Out<Vec<Rational>> {
    text.split(',').map(q).collect()
}

fn orientations(text: &str) -> Out<Vec<Orientation>> {
    text.split(',')
        .map(|s| {
            let signs = s
                .trim()
                .chars()
                .map(|c| match c {
                    '+' => Ok(1),
                    '-' => Ok(-1),
                    _ => Err(Failure::Usage(format!("orientation `{s}` must use only + and -"))),
                })
                .collect::<Out<Vec<i8>>>()?;
            Ok(Orientation::new(signs)?)
        })
        .collect()
}

fn load_segments(path: &Path) -> Out<SegmentMeasure> {
    match io::load_measure(&read(path)?)? {
        MeasureFile::Segments(s) => Ok(s),
        _ => Err(Failure::Usage(format!("{} is not a segment measure", path.display()))),
    }
}

fn seg_json(sm: &SegmentMeasure) -> String {
    io::save_segment_measure(sm)
}

/// `pi`, `m`, `w`, `fgm:theta` or a measure file.
fn copula_arg(spec: &str, n: usize) -> Out<CopulaModel> {
    let lower = spec.to_ascii_lowercase();
    match lower.as_str() {
        "pi" | "indep" => Ok(CopulaModel::independence(n)?),
        "m" => Ok(CopulaModel::comonotone(n)?),
        "w" => Ok(CopulaModel::Countermonotone),
        _ => match lower.strip_prefix("fgm:") {
            Some(theta) => Ok(CopulaModel::fgm(q(theta)?)?),
            None => Ok(io::load_measure(&read(Path::new(spec))?)?.into_copula()),
        },
    }
}

fn marginal_arg(spec: &str) -> Out<MarginalDistribution> {
    match spec.strip_prefix("table:") {
        Some(path) => Ok(MarginalDistribution::from_table_csv(&read(Path::new(path))?)?),
        None => Ok(MarginalDistribution::parse(spec)?),
    }
}

fn gen(g: Gen) -> Out<Output> {
    let sm = match g {
        Gen::Tent { t, n } => tent_copula(&q(&t)?, n)?,
        Gen::Shuffle { breaks, orient, n } => shuffle_copula(&q_list(&breaks)?, &orientations(&orient)?, n)?,
        Gen::Perm { m, perm, orient } => {
            let mut by_axis: Vec<(usize, Vec<usize>)> = perm
                .iter()
                .map(|p| {
                    let (k, images) = p
                        .split_once('=')
                        .ok_or_else(|| Failure::Usage(format!("--perm `{p}` is not k=s_0,..")))?;
                    let k: usize = k.trim().parse().map_err(|_| Failure::Usage(format!("bad axis in `{p}`")))?;
                    let images = images
                        .split(',')
                        .map(|s| s.trim().parse().map_err(|_| Failure::Usage(format!("bad image in `{p}`"))))
                        .collect::<Out<Vec<usize>>>()?;
                    Ok((k, images))
                })
                .collect::<Out<_>>()?;
            by_axis.sort_by_key(|(k, _)| *k);
            if by_axis.iter().enumerate().any(|(i, (k, _))| *k != i + 2) {
                return Err(Failure::Usage("--perm axes must be 2, 3, .. each given once".into()));
            }
            let perms: Vec<Vec<usize>> = by_axis.into_iter().map(|(_, p)| p).collect();
            let spec = match orient {
                None => PermutationCopulaSpec::new(m, perms)?,
                Some(o) => {
                    let mut os = orientations(&o)?;
                    if os.len() == 1 {
                        os = vec![os[0].clone(); m];
                    }
                    PermutationCopulaSpec::with_orientations(m, perms, os)?
                }
            };
            permutation_copula(&spec)?
        }
        Gen::Fourline3d => four_line_3d(),
        Gen::Graph { map } => match io::load_map(&read(&map)?)? {
            MapFile::Linear(f) => match graph_copula(f)? {
                CopulaModel::Graph(gc) => gc.to_segment_measure()?,
                _ => unreachable!("graph_copula returns a graph copula"),
            },
            MapFile::Power(_) => {
                return Err(Failure::Domain("power maps have no segment representation".into()));
            }
        },
        Gen::Shift { measure, alpha } => shift_transform(&load_segments(&measure)?, &q_list(&alpha)?)?,
        Gen::Swap {
            measure,
            axis,
            a,
            b,
            delta,
        } => {
            if axis == 0 {
                return Err(Failure::Usage("--axis is 1-based".into()));
            }
            swap_transform(&load_segments(&measure)?, axis - 1, &q(&a)?, &q(&b)?, &q(&delta)?)?
        }
    };
    Ok(Output {
        main: seg_json(&sm),
        main_name: "segment-measure.json",
        extra: Vec::new(),
        ok: true,
    })
}

fn approx(a: ApproxArgs, out_dir: Option<&Path>) -> Out<Output> {
    let c = copula_arg(&a.copula, a.n)?;
    let report = approximate(&c, a.m, a.d)?;
    let mut out = Output::json(io::report_json(&report)?, "report.json");
    let measure = seg_json(&report.measure);
    if let Some(p) = a.measure_out {
        out.extra.push((p, measure));
    } else if let Some(dir) = out_dir {
        out.extra.push((dir.join("segment-measure.json"), measure));
    }
    Ok(out)
}

fn analyze(a: Analyze) -> Out<Output> {
    match a {
        Analyze::Decompose { density, scale } => {
            let d: GridDensity = match io::load_measure(&read(&density)?)? {
                MeasureFile::Density(d) => d,
                MeasureFile::Grid(g) => GridDensity::from_grid_measure(&g),
                _ => return Err(Failure::Usage(format!("{} is not a grid density", density.display()))),
            };
            let n = d.spec().n;
            let square = match scale {
                Some(e) => {
                    let e = q(&e)?;
                    match find_dense_square(&d, std::slice::from_ref(&e))? {
                        Some(s) => s,
                        // Reports the zero fraction of the corner square.
                        None => SquareRegion::new(vec![Rational::from_integer(0.into()); n], e)?,
                    }
                }
                None => {
                    let floor = rational::ratio(1, d.spec().m as i64);
                    find_dense_square(&d, &dyadic_scales(&floor))?.ok_or_else(|| {
                        Failure::Domain(format!(
                            "no square with zero-density fraction below 1/4 at edges down to {}",
                            rational::format(&floor)
                        ))
                    })?
                }
            };
            let w = lemma_decompose(&d, &square)?;
            Ok(Output::json(io::witness_to_json(&w), "witness.json"))
        }
        Analyze::Extremality { measure, floor } => {
            let mm = io::load_measure(&read(&measure)?)?.into_mixed();
            let floor = floor.as_deref().map(q).transpose()?;
            let v = singularity_diagnostic(&mm, floor.as_ref())?;
            Ok(Output::json(io::verdict_to_json(&v), "verdict.json"))
        }
        Analyze::Cover { measure, r } => {
            let cert = functional_cover_check(&load_segments(&measure)?, r)?;
            Ok(Output::json(io::report_json(&cert)?, "certificate.json"))
        }
    }
}

fn optimize(a: OptimizeArgs, seed: u64) -> Out<Output> {
    let marginals = a.marginals.iter().map(|s| marginal_arg(s)).collect::<Out<Vec<_>>>()?;
    let g = match (&a.g, &a.g_builtin) {
        (Some(e), _) => parse_objective(e)?,
        (None, Some(b)) => Objective::builtin(b)?,
        (None, None) => unreachable!("clap requires one of --g, --g-builtin"),
    };
    let cfg = OptimizeConfig {
        k: a.k,
        sense: a.sense,
        quadrature: a.q,
        restarts: a.restarts,
        seed,
    };
    let r = optimize_m_of_g(&marginals, &g, &cfg)?;
    let mut v = io::report_json(&r)?;
    v["objective"] = json!(g.to_string());
    let mut out = Output::json(v, "optimization.json");
    if let Some(p) = a.witness {
        out.extra.push((p, seg_json(&permutation_copula(&r.to_spec()?)?)));
    }
    Ok(out)
}

fn match_prob(a: MatchArgs) -> Out<Output> {
    let fx = marginal_arg(&a.fx)?;
    let fy = marginal_arg(&a.fy)?;
    let schedule = match &a.schedule {
        Some(s) => parse_schedule(s)?,
        None => default_schedule(a.levels, a.k_max),
    };
    let t = match_probability(&fx, &fy, &schedule, a.q)?;
    Ok(Output::json(io::report_json(&t)?, "match.json"))
}

fn run_cmd(cli: Cli) -> Out<Output> {
    match cli.cmd {
        Cmd::Gen(g) => gen(g),
        Cmd::Approx(a) => approx(a, cli.out_dir.as_deref()),
        Cmd::Analyze(a) => analyze(a),
        Cmd::Optimize(a) => optimize(a, cli.seed),
        Cmd::MatchProb(a) => match_prob(a),
        Cmd::Dist(a) => {
            let r = dinf_distance(&copula_arg(&a.a, a.n)?, &copula_arg(&a.b, a.n)?, a.r)?;
            Ok(Output::json(io::report_json(&r)?, "distance.json"))
        }
        Cmd::Sample(a) => {
            let pts = load_segments(&a.measure)?.sample(a.count, cli.seed)?;
            Ok(Output {
                main: io::samples_to_csv(&pts),
                main_name: "samples.csv",
                extra: Vec::new(),
                ok: true,
            })
        }
        Cmd::Validate(a) => {
            let c = io::load_measure(&read(&a.measure)?)?.into_copula();
            let tol = a.tol.unwrap_or(if c.is_exact() { 0.0 } else { 1e-12 });
            let r = validate_copula_measure(&c, a.m, tol)?;
            let mut out = Output::json(io::report_json(&r)?, "validation.json");
            out.ok = r.ok;
            Ok(out)
        }
        Cmd::Check(Check::Mp { map, r }) => {
            let report = match io::load_map(&read(&map)?)? {
                MapFile::Linear(f) => measure_preserving_check(&f, r)?,
                MapFile::Power(f) => measure_preserving_check(&f, r)?,
            };
            let mut out = Output::json(io::report_json(&report)?, "mp.json");
            out.ok = report.ok;
            Ok(out)
        }
        Cmd::PlotData(a) => Ok(Output {
            main: io::plot_data_csv(&load_segments(&a.measure)?)?,
            main_name: "plot-data.csv",
            extra: Vec::new(),
            ok: true,
        }),
    }
}

fn finish(o: Output, out: Option<PathBuf>, out_dir: Option<PathBuf>, stdout: &mut dyn Write) -> Out<()> {
    if let Some(dir) = &out_dir {
        fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("cannot create {}: {e}", dir.display())))?;
    }
    for (p, text) in &o.extra {
        write(p, text)?;
    }
    let target = out.or_else(|| out_dir.map(|d| d.join(o.main_name)));
    match target {
        Some(p) => write(&p, &o.main),
        None => {
            let mut text = o.main;
            if !text.ends_with('\n') {
                text.push('\n');
            }
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| Failure::Usage(format!("cannot write output: {e}")))
        }
    }
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run(args: Vec<String>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let args = match config::apply(args) {
        Ok(a) => a,
        Err(msg) => {
            let _ = writeln!(stderr, "error: {msg}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(stderr, "{text}")
            } else {
                write!(stdout, "{text}")
            };
            return code;
        }
    };
    let (out, out_dir) = (cli.out.clone(), cli.out_dir.clone());
    let result = run_cmd(cli).and_then(|o| {
        let ok = o.ok;
        finish(o, out, out_dir, stdout).map(|()| ok)
    });
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            2
        }
        Err(Failure::Domain(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            1
        }
    }
}
