//! JSON and CSV formats.
//!
//! Exact values are written as `"p/q"` strings. Loaders also take JSON numbers;
//! a non-integer number marks the loaded measure as inexact. Every file written
//! here carries `"version": "1.0"`, and loaders reject other major versions.

use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::constructions::{Affine, PiecewiseLinearMap, PowerMap};
use crate::copula::CopulaModel;
use crate::error::{Error, Result};
use crate::extremality::{DecompositionWitness, SingularityVerdict};
use crate::grid::{GridDensity, GridMeasure, GridSpec, MixedMeasure};
use crate::rational::{self, Rational};
use crate::segment::{Segment, SegmentMeasure};

pub const FORMAT_VERSION: &str = "1.0";
const MAJOR: &str = "1";

pub fn ser_rational<S: Serializer>(q: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&rational::format(q))
}

pub fn ser_rationals<S: Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(rational::format))
}

pub fn ser_interval_sets<S: Serializer>(v: &[Vec<(Rational, Rational)>], s: S) -> std::result::Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for set in v {
        let set: Vec<[String; 2]> = set.iter().map(|(a, b)| [rational::format(a), rational::format(b)]).collect();
        seq.serialize_element(&set)?;
    }
    seq.end()
}

fn check_version(v: &Value) -> Result<()> {
    match v.get("version") {
        None => Ok(()),
        Some(Value::String(s)) if s.split('.').next() == Some(MAJOR) => Ok(()),
        Some(other) => Err(Error::Format(format!("unsupported format version {other}"))),
    }
}

/// A number in a file: `"p/q"`/decimal string (exact) or JSON number.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Num {
    Text(String),
    Number(serde_json::Number),
}

impl Num {
    /// The value and whether it is exact.
    fn value(&self) -> Result<(Rational, bool)> {
        match self {
            Num::Text(s) => Ok((rational::parse(s)?, true)),
            Num::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Ok((rational::int(i), true))
                } else {
                    let f = n.as_f64().ok_or_else(|| Error::Format(format!("bad number {n}")))?;
                    Ok((rational::from_f64(f)?, false))
                }
            }
        }
    }
}

fn values(v: &[Num], exact: &mut bool) -> Result<Vec<Rational>> {
    v.iter()
        .map(|x| {
            let (q, e) = x.value()?;
            *exact &= e;
            Ok(q)
        })
        .collect()
}

fn from_value<T: for<'de> Deserialize<'de>>(v: Value) -> Result<T> {
    Ok(serde_json::from_value(v)?)
}

/// Writes `x` as a JSON number when the measure is inexact, else as `"p/q"`.
fn num_json(x: &Rational, exact: bool) -> Value {
    if exact {
        Value::String(rational::format(x))
    } else {
        json!(rational::to_f64(x))
    }
}

// ---- segment measures ----

#[derive(Deserialize)]
struct SegmentFile {
    a: Vec<Num>,
    b: Vec<Num>,
    w: Num,
}

#[derive(Deserialize)]
struct SegmentMeasureFile {
    n: usize,
    segments: Vec<SegmentFile>,
}

pub fn segment_measure_to_json(sm: &SegmentMeasure) -> Value {
    let exact = sm.is_exact();
    let segs: Vec<Value> = sm
        .segments()
        .iter()
        .map(|s| {
            json!({
                "a": s.a().iter().map(|x| num_json(x, exact)).collect::<Vec<_>>(),
                "b": s.b().iter().map(|x| num_json(x, exact)).collect::<Vec<_>>(),
                "w": num_json(s.weight(), exact),
            })
        })
        .collect();
    json!({"version": FORMAT_VERSION, "n": sm.dim(), "segments": segs})
}

pub fn segment_measure_from_value(v: Value) -> Result<SegmentMeasure> {
    check_version(&v)?;
    let f: SegmentMeasureFile = from_value(v)?;
    let mut exact = true;
    let mut segments = Vec::with_capacity(f.segments.len());
    for s in &f.segments {
        let a = values(&s.a, &mut exact)?;
        let b = values(&s.b, &mut exact)?;
        let (w, e) = s.w.value()?;
        exact &= e;
        segments.push(Segment::new(a, b, w)?);
    }
    SegmentMeasure::with_exactness(f.n, segments, exact)
}

pub fn save_segment_measure(sm: &SegmentMeasure) -> String {
    pretty(&segment_measure_to_json(sm))
}

pub fn load_segment_measure(text: &str) -> Result<SegmentMeasure> {
    segment_measure_from_value(serde_json::from_str(text)?)
}

// ---- grid measures and densities ----

#[derive(Deserialize)]
struct GridMeasureFile {
    n: usize,
    m: usize,
    #[serde(rename = "D")]
    d: u64,
    t: Vec<u64>,
}

pub fn grid_measure_to_json(g: &GridMeasure) -> Value {
    let s = g.spec();
    json!({"version": FORMAT_VERSION, "n": s.n, "m": s.m, "D": g.denominator(), "t": g.entries()})
}

pub fn grid_measure_from_value(v: Value) -> Result<GridMeasure> {
    check_version(&v)?;
    let f: GridMeasureFile = from_value(v)?;
    GridMeasure::new(GridSpec::new(f.n, f.m)?, f.d, f.t)
}

#[derive(Deserialize)]
struct DensityFile {
    n: usize,
    m: usize,
    values: Vec<Num>,
}

pub fn density_to_json(d: &GridDensity) -> Value {
    let s = d.spec();
    json!({
        "version": FORMAT_VERSION,
        "n": s.n,
        "m": s.m,
        "values": d.values().iter().map(rational::format).collect::<Vec<_>>(),
    })
}

/// Density values must be exact: slab sums are checked with rational equality.
pub fn density_from_value(v: Value) -> Result<GridDensity> {
    check_version(&v)?;
    let f: DensityFile = from_value(v)?;
    let mut exact = true;
    let vals = values(&f.values, &mut exact)?;
    GridDensity::new(GridSpec::new(f.n, f.m)?, vals)
}

pub fn mixed_to_json(mm: &MixedMeasure) -> Value {
    json!({
        "version": FORMAT_VERSION,
        "ac_weight": rational::format(mm.ac_weight()),
        "density": mm.density().map(density_to_json),
        "singular": mm.singular().map(segment_measure_to_json),
    })
}

pub fn mixed_from_value(v: Value) -> Result<MixedMeasure> {
    check_version(&v)?;
    let w: Num = from_value(v.get("ac_weight").cloned().unwrap_or(Value::Null))?;
    let part = |key: &str| v.get(key).filter(|x| !x.is_null()).cloned();
    let density = part("density").map(density_from_value).transpose()?;
    let singular = part("singular").map(segment_measure_from_value).transpose()?;
    MixedMeasure::new(w.value()?.0, density, singular)
}

/// Any measure file, told apart by its keys.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasureFile {
    Segments(SegmentMeasure),
    Grid(GridMeasure),
    Density(GridDensity),
    Mixed(MixedMeasure),
}

impl MeasureFile {
    pub fn into_copula(self) -> CopulaModel {
        match self {
            MeasureFile::Segments(s) => CopulaModel::Segments(s),
            MeasureFile::Grid(g) => CopulaModel::Density(GridDensity::from_grid_measure(&g)),
            MeasureFile::Density(d) => CopulaModel::Density(d),
            MeasureFile::Mixed(m) => CopulaModel::Mixed(m),
        }
    }

    pub fn into_mixed(self) -> MixedMeasure {
        match self {
            MeasureFile::Segments(s) => MixedMeasure::singular_only(s),
            MeasureFile::Grid(g) => MixedMeasure::new(rational::one(), Some(GridDensity::from_grid_measure(&g)), None)
                .expect("pure density"),
            MeasureFile::Density(d) => MixedMeasure::new(rational::one(), Some(d), None).expect("pure density"),
            MeasureFile::Mixed(m) => m,
        }
    }
}

pub fn load_measure(text: &str) -> Result<MeasureFile> {
    let v: Value = serde_json::from_str(text)?;
    let has = |k: &str| v.get(k).is_some();
    if has("segments") {
        segment_measure_from_value(v).map(MeasureFile::Segments)
    } else if has("ac_weight") {
        mixed_from_value(v).map(MeasureFile::Mixed)
    } else if has("t") {
        grid_measure_from_value(v).map(MeasureFile::Grid)
    } else if has("values") {
        density_from_value(v).map(MeasureFile::Density)
    } else {
        Err(Error::Format("not a segment, grid, density or mixed measure file".into()))
    }
}

// ---- maps ----

#[derive(Deserialize)]
struct PieceFile {
    coord: usize,
    slope: Num,
    intercept: Num,
}

#[derive(Deserialize)]
struct PlMapFile {
    breakpoints: Vec<Num>,
    pieces: Vec<PieceFile>,
}

/// A map file: piecewise linear, or `{"power": [p_2, ..]}`.
#[derive(Debug, Clone, PartialEq)]
pub enum MapFile {
    Linear(PiecewiseLinearMap),
    Power(PowerMap),
}

/// `pieces` lists, per output coordinate `coord` (numbered from 2), one affine
/// piece per breakpoint interval in order.
pub fn load_map(text: &str) -> Result<MapFile> {
    let v: Value = serde_json::from_str(text)?;
    check_version(&v)?;
    if let Some(p) = v.get("power") {
        let exps: Vec<f64> = from_value(p.clone())?;
        return PowerMap::new(exps).map(MapFile::Power);
    }
    let f: PlMapFile = from_value(v)?;
    let mut exact = true;
    let bps = values(&f.breakpoints, &mut exact)?;
    let outputs = f.pieces.iter().map(|p| p.coord).max().unwrap_or(1);
    if f.pieces.iter().any(|p| p.coord < 2) {
        return Err(Error::Format("piece coordinates are numbered from 2".into()));
    }
    let mut comps: Vec<Vec<Affine>> = vec![Vec::new(); outputs.saturating_sub(1)];
    for p in &f.pieces {
        let (s, _) = p.slope.value()?;
        let (c, _) = p.intercept.value()?;
        comps[p.coord - 2].push(Affine::new(s, c));
    }
    PiecewiseLinearMap::new(bps, comps).map(MapFile::Linear)
}

pub fn map_to_json(f: &PiecewiseLinearMap) -> Value {
    let pieces: Vec<Value> = f
        .components()
        .iter()
        .enumerate()
        .flat_map(|(c, comp)| {
            comp.iter().map(move |a| {
                json!({
                    "coord": c + 2,
                    "slope": rational::format(&a.slope),
                    "intercept": rational::format(&a.intercept),
                })
            })
        })
        .collect();
    json!({
        "version": FORMAT_VERSION,
        "breakpoints": f.breakpoints().iter().map(rational::format).collect::<Vec<_>>(),
        "pieces": pieces,
    })
}

// ---- analysis outputs ----

pub fn witness_to_json(w: &DecompositionWitness) -> Value {
    json!({
        "version": FORMAT_VERSION,
        "square": w.square,
        "zero_fraction": rational::format(&w.zero_fraction),
        "g_shape": w.g_shape,
        "g": w.g.iter().map(rational::format).collect::<Vec<_>>(),
        "h1": density_to_json(&w.h1),
        "h2": density_to_json(&w.h2),
    })
}

pub fn verdict_to_json(v: &SingularityVerdict) -> Value {
    match v {
        SingularityVerdict::NotExtreme { witness, ac_weight } => json!({
            "version": FORMAT_VERSION,
            "verdict": "NOT_EXTREME",
            "ac_weight": rational::format(ac_weight),
            "witness": witness_to_json(witness),
        }),
        SingularityVerdict::NecessaryConditionPassed => json!({
            "version": FORMAT_VERSION,
            "verdict": "NECESSARY_CONDITION_PASSED",
        }),
        SingularityVerdict::Inconclusive { finest_scale } => json!({
            "version": FORMAT_VERSION,
            "verdict": "INCONCLUSIVE",
            "finest_scale": rational::format(finest_scale),
        }),
    }
}

/// Adds the version tag to any serializable report.
pub fn report_json<T: Serialize>(report: &T) -> Result<Value> {
    let mut v = serde_json::to_value(report)?;
    if let Value::Object(map) = &mut v {
        map.insert("version".into(), json!(FORMAT_VERSION));
    }
    Ok(v)
}

pub fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}

// ---- CSV ----

/// One point per row, 17 significant digits, no header.
pub fn samples_to_csv(points: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for p in points {
        let row: Vec<String> = p.iter().map(|x| format!("{x:.16e}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Segment endpoints and weights, header `a1..an,b1..bn,w`; supports `n` of 2 or 3.
pub fn plot_data_csv(sm: &SegmentMeasure) -> Result<String> {
    let n = sm.dim();
    if !(2..=3).contains(&n) {
        return Err(Error::InvalidInput(format!("plot data supports n = 2 or 3, got {n}")));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = (1..=n)
        .map(|k| format!("a{k}"))
        .chain((1..=n).map(|k| format!("b{k}")))
        .chain(std::iter::once("w".to_string()))
        .collect();
    w.write_record(&header).map_err(csv_err)?;
    let fmt = |x: &Rational| {
        if sm.is_exact() {
            rational::format(x)
        } else {
            format!("{:?}", rational::to_f64(x))
        }
    };
    for s in sm.segments() {
        let row: Vec<String> = s.a().iter().chain(s.b()).chain(std::iter::once(s.weight())).map(fmt).collect();
        w.write_record(&row).map_err(csv_err)?;
    }
    String::from_utf8(w.into_inner().map_err(|e| Error::Format(e.to_string()))?).map_err(|e| Error::Format(e.to_string()))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

/// Reads [`plot_data_csv`] output back. Fields with `.`, `e` or `E` are floats
/// and make the measure inexact; others are exact rationals.
pub fn load_plot_data(text: &str) -> Result<SegmentMeasure> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let cols = r.headers().map_err(csv_err)?.len();
    if cols != 5 && cols != 7 {
        return Err(Error::Format(format!("plot data has {cols} columns, expected 5 or 7")));
    }
    let n = (cols - 1) / 2;
    let mut exact = true;
    let mut segments = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let vals = rec
            .iter()
            .map(|f| {
                if f.contains(['.', 'e', 'E']) {
                    exact = false;
                    let x: f64 = f.parse().map_err(|_| Error::Format(format!("bad number `{f}`")))?;
                    rational::from_f64(x)
                } else {
                    rational::parse(f)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        segments.push(Segment::new(vals[..n].to_vec(), vals[n..2 * n].to_vec(), vals[2 * n].clone())?);
    }
    SegmentMeasure::with_exactness(n, segments, exact)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{doubling_map, four_line_3d, tent_copula};
    use crate::rational::ratio;

    #[test]
    fn segment_measure_round_trip() {
        let t = tent_copula(&ratio(1, 3), 2).unwrap();
        let text = save_segment_measure(&t);
        assert!(text.contains("\"1/3\""));
        assert_eq!(load_segment_measure(&text).unwrap(), t);
    }

    #[test]
    fn float_weights_mark_inexact() {
        let text = r#"{"n":2,"segments":[{"a":[0,0],"b":[1,1],"w":1.0}]}"#;
        let sm = load_segment_measure(text).unwrap();
        assert!(!sm.is_exact());
        let back = load_segment_measure(&save_segment_measure(&sm)).unwrap();
        assert_eq!(back, sm);
        let text = r#"{"n":2,"segments":[{"a":[0,0],"b":[1,1],"w":1}]}"#;
        assert!(load_segment_measure(text).unwrap().is_exact());
    }

    #[test]
    fn rejects_unknown_major_version() {
        let text = r#"{"version":"2.0","n":2,"segments":[]}"#;
        assert!(matches!(load_segment_measure(text), Err(Error::Format(_))));
        let text = r#"{"version":"1.3","n":2,"segments":[]}"#;
        assert!(load_segment_measure(text).is_ok());
    }

    #[test]
    fn grid_density_and_mixed_round_trip() {
        let g = GridMeasure::new(GridSpec::new(2, 2).unwrap(), 4, vec![1, 1, 1, 1]).unwrap();
        let text = pretty(&grid_measure_to_json(&g));
        assert_eq!(load_measure(&text).unwrap(), MeasureFile::Grid(g.clone()));
        let d = GridDensity::from_grid_measure(&g);
        assert_eq!(load_measure(&pretty(&density_to_json(&d))).unwrap(), MeasureFile::Density(d.clone()));
        let mm = MixedMeasure::new(ratio(1, 2), Some(d), Some(tent_copula(&ratio(1, 2), 2).unwrap())).unwrap();
        assert_eq!(load_measure(&pretty(&mixed_to_json(&mm))).unwrap(), MeasureFile::Mixed(mm));
    }

    #[test]
    fn map_round_trip() {
        let f = doubling_map();
        let text = pretty(&map_to_json(&f));
        assert_eq!(load_map(&text).unwrap(), MapFile::Linear(f));
        assert_eq!(load_map(r#"{"power":[2.0]}"#).unwrap(), MapFile::Power(PowerMap::new(vec![2.0]).unwrap()));
    }

    #[test]
    fn plot_data_rows_and_round_trip() {
        let t = tent_copula(&ratio(1, 2), 2).unwrap();
        let csv = plot_data_csv(&t).unwrap();
        assert_eq!(csv.lines().count(), 3);
        assert_eq!(load_plot_data(&csv).unwrap(), t);
        let fl = four_line_3d();
        let csv = plot_data_csv(&fl).unwrap();
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.lines().skip(1).all(|l| l.ends_with(",1/4")));
        assert_eq!(load_plot_data(&csv).unwrap(), fl);
    }

    #[test]
    fn samples_have_seventeen_digits() {
        let csv = samples_to_csv(&[vec![0.1, 1.0 / 3.0]]);
        assert_eq!(csv, "1.0000000000000001e-1,3.3333333333333331e-1\n");
        let back: Vec<f64> = csv.trim().split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(back, vec![0.1, 1.0 / 3.0]);
    }
}
