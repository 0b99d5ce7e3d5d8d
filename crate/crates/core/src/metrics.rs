//! Cost bounds, latency sensitivity, bandwidth and rankings derived from an
//! [`EdagSummary`].
//!
//! Everything is computed with exact rationals; `(W - D) / m` is rarely an
//! integer and rankings must not hinge on float rounding. Decimal values are
//! only produced for output.

use std::cmp::Ordering;
use std::fmt;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::Zero;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::cache::CacheConfig;
use crate::edag::{CostModel, EdagSummary, MovementBins};

pub type Rational = Ratio<i128>;

/// Threshold on memory work over non-memory cost below which the relative
/// sensitivity is flagged as unreliable.
pub const MIN_WORK_TO_COMPUTE_RATIO: (i128, i128) = (3, 10);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("inconsistent summary: {0}")]
    InconsistentSummary(String),
    #[error("memory depth {depth} exceeds memory work {work}")]
    DepthExceedsWork { work: u64, depth: u64 },
    #[error("baseline cost is zero (lambda * alpha0 + C = 0)")]
    ZeroBaselineCost,
    #[error("critical path is zero; bandwidth undefined")]
    ZeroSpan,
    #[error("movement bins were sampled with tau={bins}, requested tau={requested}")]
    TauMismatch { bins: u64, requested: u64 },
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("ranking needs at least two traces")]
    TooFewTraces,
    #[error("reports were computed with different model parameters ({0})")]
    MixedParams(String),
}

/// Machine-model parameters for the cost bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Memory accesses that can be in flight at once.
    pub m: u32,
    /// RAM latency, cycles.
    pub alpha: u64,
    /// Baseline RAM latency, cycles.
    pub alpha0: u64,
    pub clock_hz: u64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            m: 4,
            alpha: 200,
            alpha0: 50,
            clock_hz: 1_000_000_000,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<(), MetricsError> {
        if self.m < 1 {
            return Err(MetricsError::InvalidParams("m must be at least 1".into()));
        }
        if self.alpha < self.alpha0 {
            return Err(MetricsError::InvalidParams(format!(
                "alpha ({}) must be at least alpha0 ({})",
                self.alpha, self.alpha0
            )));
        }
        if self.clock_hz == 0 {
            return Err(MetricsError::InvalidParams("clock must be positive".into()));
        }
        Ok(())
    }
}

/// An exact value with its decimal rendering, as it appears in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Exact(pub Rational);

impl Exact {
    pub fn to_f64(self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }
}

impl From<Rational> for Exact {
    fn from(r: Rational) -> Self {
        Exact(r)
    }
}

impl fmt::Display for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}", decimal(self.0, 6))
        }
    }
}

impl Serialize for Exact {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Exact", 3)?;
        st.serialize_field("num", self.0.numer())?;
        st.serialize_field("den", self.0.denom())?;
        st.serialize_field("value", &self.to_f64())?;
        st.end()
    }
}

/// Exact decimal expansion truncated (not rounded) after `digits` places,
/// with trailing zeros removed.
pub fn decimal(r: Rational, digits: usize) -> String {
    let neg = r < Rational::zero();
    let (n, d) = (r.numer().abs(), *r.denom());
    let (int, mut rem) = n.div_rem(&d);
    let mut out = format!("{}{}", if neg { "-" } else { "" }, int);
    let mut frac = String::new();
    for _ in 0..digits {
        if rem == 0 {
            break;
        }
        rem *= 10;
        frac.push(char::from(b'0' + (rem / d) as u8));
        rem %= d;
    }
    let frac = frac.trim_end_matches('0');
    if !frac.is_empty() {
        out.push('.');
        out.push_str(frac);
    }
    out
}

fn int(v: u64) -> Rational {
    Rational::from_integer(v as i128)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MemoryCostBounds {
    /// `max(D, ceil(W/m)) * alpha`
    pub lower: Exact,
    /// `sum_i ceil(W_i/m) * alpha`
    pub layered_upper: Exact,
    /// `((W - D)/m + D) * alpha`
    pub closed_upper: Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TotalCostBounds {
    pub lower: Exact,
    pub upper: Exact,
}

/// Bounds on the memory cost of an eDAG with `m` issue slots and latency `alpha`.
pub fn memory_cost_bounds(
    w: u64,
    d: u64,
    layer_counts: &[u64],
    m: u32,
    alpha: u64,
) -> Result<MemoryCostBounds, MetricsError> {
    if m == 0 {
        return Err(MetricsError::InvalidParams("m must be at least 1".into()));
    }
    let total: u64 = layer_counts.iter().sum();
    if total != w {
        return Err(MetricsError::InconsistentSummary(format!(
            "layer counts sum to {total}, memory work is {w}"
        )));
    }
    let deepest = layer_counts
        .iter()
        .rposition(|&c| c > 0)
        .map_or(0, |i| i + 1) as u64;
    if deepest != d {
        return Err(MetricsError::InconsistentSummary(format!(
            "deepest non-empty layer is {deepest}, memory depth is {d}"
        )));
    }
    let m64 = m as u64;
    let lower = d.max(w.div_ceil(m64)) as i128 * alpha as i128;
    let layered: i128 = layer_counts
        .iter()
        .map(|&c| c.div_ceil(m64) as i128)
        .sum::<i128>()
        * alpha as i128;
    let closed = lambda(w, d, m)? * int(alpha);
    Ok(MemoryCostBounds {
        lower: Exact(Rational::from_integer(lower)),
        layered_upper: Exact(Rational::from_integer(layered)),
        closed_upper: Exact(closed),
    })
}

/// Adds the latency-independent cost `c` to both memory bounds.
pub fn total_cost_bounds(bounds: &MemoryCostBounds, c: u64) -> TotalCostBounds {
    TotalCostBounds {
        lower: Exact(bounds.lower.0 + int(c)),
        upper: Exact(bounds.closed_upper.0 + int(c)),
    }
}

/// Absolute memory latency sensitivity `(W - D)/m + D`.
pub fn lambda(w: u64, d: u64, m: u32) -> Result<Rational, MetricsError> {
    if d > w {
        return Err(MetricsError::DepthExceedsWork { work: w, depth: d });
    }
    if m == 0 {
        return Err(MetricsError::InvalidParams("m must be at least 1".into()));
    }
    Ok(Rational::new((w - d) as i128, m as i128) + int(d))
}

/// The rearranged form `W/m + (1 - 1/m) D`; equal to [`lambda`] exactly.
pub fn lambda_weighted(w: u64, d: u64, m: u32) -> Result<Rational, MetricsError> {
    if d > w {
        return Err(MetricsError::DepthExceedsWork { work: w, depth: d });
    }
    let inv_m = Rational::new(1, m as i128);
    Ok(int(w) * inv_m + (Rational::from_integer(1) - inv_m) * int(d))
}

/// Relative memory latency sensitivity `lambda / (lambda * alpha0 + C)`.
pub fn big_lambda(lambda: Rational, alpha0: u64, c: u64) -> Result<Rational, MetricsError> {
    let denom = lambda * int(alpha0) + int(c);
    if denom.is_zero() {
        return Err(MetricsError::ZeroBaselineCost);
    }
    Ok(lambda / denom)
}

/// Theoretical average bandwidth in GB/s (10^9 bytes per second).
pub fn bandwidth(bytes_total: u64, tinf: u64, clock_hz: u64) -> Result<Rational, MetricsError> {
    if tinf == 0 {
        return Err(MetricsError::ZeroSpan);
    }
    Ok(Rational::new(
        bytes_total as i128 * clock_hz as i128,
        tinf as i128 * 1_000_000_000,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MovementRow {
    pub time_cycles: u64,
    pub time_seconds: f64,
    pub bytes: u64,
}

/// Data moved at each sample point `tau * i`. One row per sample point up to
/// the critical-path length.
pub fn movement_series(
    bins: &MovementBins,
    tau: u64,
    clock_hz: u64,
) -> Result<Vec<MovementRow>, MetricsError> {
    if bins.tau != tau {
        return Err(MetricsError::TauMismatch {
            bins: bins.tau,
            requested: tau,
        });
    }
    if clock_hz == 0 {
        return Err(MetricsError::InvalidParams("clock must be positive".into()));
    }
    let rows = (bins.span / tau) as usize + 1;
    Ok((0..rows)
        .map(|i| {
            let t = tau * i as u64;
            MovementRow {
                time_cycles: t,
                time_seconds: t as f64 / clock_hz as f64,
                bytes: bins.bins.get(i).copied().unwrap_or(0),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsConfig {
    pub cache: CacheConfig,
    pub cost: CostModel,
    pub model: ModelParams,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub config: MetricsConfig,
    pub memory: MemoryCostBounds,
    pub total: TotalCostBounds,
    pub lambda: Exact,
    /// `None` when the baseline cost is zero (empty trace).
    #[serde(rename = "Lambda")]
    pub big_lambda: Option<Exact>,
    /// `T1 / Tinf`; `None` for an empty trace.
    pub parallelism: Option<Exact>,
    /// Theoretical maximum average bandwidth, GB/s; `None` when `Tinf = 0`.
    pub bandwidth_gbs: Option<Exact>,
    pub memory_work: u64,
    pub memory_depth: u64,
    pub compute_cost: u64,
    pub warnings: Vec<String>,
}

impl MetricsReport {
    /// `W / C`, or `None` when `C = 0`.
    pub fn work_to_compute(&self) -> Option<Rational> {
        (self.compute_cost > 0)
            .then(|| Rational::new(self.memory_work as i128, self.compute_cost as i128))
    }

    pub fn metric(&self, which: RankMetric) -> Option<Rational> {
        match which {
            RankMetric::Lambda => Some(self.lambda.0),
            RankMetric::BigLambda => self.big_lambda.map(|e| e.0),
        }
    }

    fn low_confidence_warning(&self) -> Option<String> {
        let ratio = self.work_to_compute()?;
        let (n, d) = MIN_WORK_TO_COMPUTE_RATIO;
        (ratio < Rational::new(n, d)).then(|| {
            format!(
                "low confidence: W/C = {} is below {} so Lambda may be unreliable",
                decimal(ratio, 4),
                decimal(Rational::new(n, d), 4)
            )
        })
    }
}

/// Derive every metric from a summary.
pub fn compute_metrics(
    summary: &EdagSummary,
    cache: CacheConfig,
    cost: CostModel,
    model: ModelParams,
) -> Result<MetricsReport, MetricsError> {
    model.validate()?;
    let memory = memory_cost_bounds(
        summary.w,
        summary.d,
        &summary.layer_counts,
        model.m,
        model.alpha,
    )?;
    let total = total_cost_bounds(&memory, summary.c);
    let lam = lambda(summary.w, summary.d, model.m)?;
    let mut warnings = Vec::new();

    let big = match big_lambda(lam, model.alpha0, summary.c) {
        Ok(v) => Some(Exact(v)),
        Err(e) => {
            warnings.push(format!("Lambda undefined: {e}"));
            None
        }
    };
    let bw = match bandwidth(summary.bytes_total, summary.tinf, model.clock_hz) {
        Ok(v) => Some(Exact(v)),
        Err(e) => {
            warnings.push(format!("bandwidth undefined: {e}"));
            None
        }
    };
    if cost.miss_cost != model.alpha {
        warnings.push(format!(
            "eDAG built with miss cost {} but bounds use alpha {}",
            cost.miss_cost, model.alpha
        ));
    }
    if summary.atomic_records > 0 {
        warnings.push(format!(
            "{} atomic records modeled as single load+store accesses",
            summary.atomic_records
        ));
    }
    if summary.unknown_mnemonics > 0 {
        warnings.push(format!(
            "{} records with unknown mnemonics decoded permissively",
            summary.unknown_mnemonics
        ));
    }

    let mut report = MetricsReport {
        config: MetricsConfig { cache, cost, model },
        memory,
        total,
        lambda: Exact(lam),
        big_lambda: big,
        parallelism: (summary.tinf > 0)
            .then(|| Exact(Rational::new(summary.t1 as i128, summary.tinf as i128))),
        bandwidth_gbs: bw,
        memory_work: summary.w,
        memory_depth: summary.d,
        compute_cost: summary.c,
        warnings,
    };
    if let Some(w) = report.low_confidence_warning() {
        report.warnings.push(w);
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RankMetric {
    #[serde(rename = "lambda")]
    Lambda,
    #[serde(rename = "Lambda")]
    BigLambda,
}

impl fmt::Display for RankMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RankMetric::Lambda => "lambda",
            RankMetric::BigLambda => "Lambda",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedTrace {
    pub name: String,
    /// `None` when the metric is undefined for this trace; such traces rank last.
    pub value: Option<Exact>,
    /// 1 = most sensitive.
    pub rank: usize,
    pub warnings: Vec<String>,
}

/// Sort traces by sensitivity, most sensitive first; ties go by name.
pub fn rank_traces(
    reports: &[(String, MetricsReport)],
    metric: RankMetric,
) -> Result<Vec<RankedTrace>, MetricsError> {
    if reports.len() < 2 {
        return Err(MetricsError::TooFewTraces);
    }
    let first = &reports[0].1.config;
    for (name, r) in &reports[1..] {
        if r.config.model != first.model
            || r.config.cache != first.cache
            || r.config.cost != first.cost
        {
            return Err(MetricsError::MixedParams(format!(
                "`{name}` differs from `{}`",
                reports[0].0
            )));
        }
    }
    let mut order: Vec<_> = reports.iter().collect();
    order.sort_by(|(an, a), (bn, b)| {
        match (a.metric(metric), b.metric(metric)) {
            (Some(x), Some(y)) => y.cmp(&x),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => Ordering::Equal,
        }
        .then_with(|| an.cmp(bn))
    });
    Ok(order
        .into_iter()
        .enumerate()
        .map(|(i, (name, r))| {
            let mut warnings = Vec::new();
            if metric == RankMetric::BigLambda {
                warnings.extend(r.low_confidence_warning());
                if r.big_lambda.is_none() {
                    warnings.push("Lambda undefined".into());
                }
            }
            RankedTrace {
                name: name.clone(),
                value: r.metric(metric).map(Exact),
                rank: i + 1,
                warnings,
            }
        })
        .collect())
}
