use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// A univariate law given by its quantile function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MarginalDistribution {
    Uniform { a: f64, b: f64 },
    Exponential { rate: f64 },
    Normal { mu: f64, sigma: f64 },
    /// Piecewise-linear quantile through `(p_i, x_i)`, constant beyond the ends.
    Tabulated { p: Vec<f64>, x: Vec<f64> },
}

impl MarginalDistribution {
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidInput(format!("uniform needs finite a < b, got {a}, {b}")));
        }
        Ok(Self::Uniform { a, b })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::InvalidInput(format!("exponential rate must be positive, got {rate}")));
        }
        Ok(Self::Exponential { rate })
    }

    pub fn normal(mu: f64, sigma: f64) -> Result<Self> {
        if !(mu.is_finite() && sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidInput(format!("normal needs finite mu and sigma > 0, got {mu}, {sigma}")));
        }
        Ok(Self::Normal { mu, sigma })
    }

    pub fn tabulated(p: Vec<f64>, x: Vec<f64>) -> Result<Self> {
        if p.len() != x.len() || p.len() < 2 {
            return Err(Error::InvalidInput("quantile table needs at least two (p, x) rows".into()));
        }
        if p.iter().chain(&x).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("quantile table entry".into()));
        }
        if p.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::Domain("table probabilities must lie in [0,1]".into()));
        }
        if p.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("table probabilities must be strictly increasing".into()));
        }
        if x.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidInput("table values must be nondecreasing".into()));
        }
        Ok(Self::Tabulated { p, x })
    }

    /// Re-runs the constructor checks, e.g. after deserializing.
    pub fn validated(self) -> Result<Self> {
        match self {
            Self::Uniform { a, b } => Self::uniform(a, b),
            Self::Exponential { rate } => Self::exponential(rate),
            Self::Normal { mu, sigma } => Self::normal(mu, sigma),
            Self::Tabulated { p, x } => Self::tabulated(p, x),
        }
    }

    /// Parses `uniform:a,b`, `exp:rate` or `normal:mu,sigma`.
    ///
    /// `table:<file>` specs need file access and are resolved by the caller
    /// through [`MarginalDistribution::from_table_csv`].
    pub fn parse(spec: &str) -> Result<Self> {
        let (kind, args) = spec.split_once(':').unwrap_or((spec, ""));
        let nums = || -> Result<Vec<f64>> {
            args.split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidInput(format!("bad number `{s}` in marginal `{spec}`")))
                })
                .collect()
        };
        let want = |v: Vec<f64>, k: usize| -> Result<Vec<f64>> {
            if v.len() == k {
                Ok(v)
            } else {
                Err(Error::InvalidInput(format!("marginal `{spec}` needs {k} parameter(s)")))
            }
        };
        match kind.trim().to_ascii_lowercase().as_str() {
            "uniform" | "unif" => {
                let v = want(nums()?, 2)?;
                Self::uniform(v[0], v[1])
            }
            "exp" | "exponential" => {
                let v = want(nums()?, 1)?;
                Self::exponential(v[0])
            }
            "normal" | "gauss" => {
                let v = want(nums()?, 2)?;
                Self::normal(v[0], v[1])
            }
            "table" => Err(Error::InvalidInput("table marginals must be loaded from a CSV file".into())),
            other => Err(Error::InvalidInput(format!("unknown marginal kind `{other}`"))),
        }
    }

    /// Two numeric columns `p,x`; a non-numeric first row is taken as a header.
    pub fn from_table_csv(text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let (mut p, mut x) = (Vec::new(), Vec::new());
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Format(e.to_string()))?;
            if rec.len() != 2 {
                return Err(Error::Format(format!("row {}: expected 2 columns, got {}", row + 1, rec.len())));
            }
            match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
                (Ok(a), Ok(b)) => {
                    p.push(a);
                    x.push(b);
                }
                _ if row == 0 => continue,
                _ => return Err(Error::Format(format!("row {}: non-numeric entry", row + 1))),
            }
        }
        Self::tabulated(p, x)
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("quantile level {p} not in (0,1)")));
        }
        Ok(self.quantile_unchecked(p))
    }

    pub(crate) fn quantile_unchecked(&self, p: f64) -> f64 {
        match self {
            Self::Uniform { a, b } => a + p * (b - a),
            Self::Exponential { rate } => -(-p).ln_1p() / rate,
            Self::Normal { mu, sigma } => Normal::new(*mu, *sigma).expect("validated").inverse_cdf(p),
            Self::Tabulated { p: ps, x } => {
                if p <= ps[0] {
                    return x[0];
                }
                let last = ps.len() - 1;
                if p >= ps[last] {
                    return x[last];
                }
                let j = ps.partition_point(|&q| q <= p) - 1;
                let w = (p - ps[j]) / (ps[j + 1] - ps[j]);
                x[j] + w * (x[j + 1] - x[j])
            }
        }
    }
}

/// Free-function form of [`MarginalDistribution::quantile`].
pub fn quantile_eval(d: &MarginalDistribution, p: f64) -> Result<f64> {
    d.quantile(p)
}
