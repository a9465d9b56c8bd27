//! Trade-off areas, the golden routing reference and cascade latency metrics.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cost::{no_samples, EvalContext};
use crate::error::{Error, Result};
use crate::model::{CurvePoint, CurveTau, Dataset, RoutingMode, RoutingOutcome};

/// Trade-off area of a router that performs no better than random.
pub const RANDOM_TOA: f64 = 0.5;
/// Smallest golden trade-off gain that still forms a meaningful ratio.
pub const GOLDEN_GAIN_FLOOR: f64 = 1e-12;

/// Raw `(cost, performance)` of the SLM-only and LLM-only policies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Endpoints {
    pub slm: (f64, f64),
    pub llm: (f64, f64),
}

impl Endpoints {
    /// Read the endpoints out of a curve that carries its `slm_only` and `llm_only` points.
    pub fn from_curve(points: &[CurvePoint]) -> Result<Self> {
        let find = |tau: CurveTau| {
            points
                .iter()
                .find(|p| p.tau == tau)
                .map(|p| (p.cost, p.performance))
                .ok_or_else(|| Error::Format(format!("curve has no {} point", tau.label())))
        };
        Ok(Self {
            slm: find(CurveTau::SlmOnly)?,
            llm: find(CurveTau::LlmOnly)?,
        })
    }
}

/// Area under the normalized cost-performance curve.
///
/// Costs map to `[0, 1]` between the SLM-only and LLM-only costs and performance
/// likewise between their qualities. The anchors `(0, 0)` and `(1, 1)` are added,
/// points are sorted by cost, segments are clipped to the unit cost range by
/// linear interpolation and integrated with the trapezoid rule.
pub fn toa(points: &[CurvePoint], endpoints: Endpoints) -> Result<f64> {
    let (cs, ps) = endpoints.slm;
    let (cl, pl) = endpoints.llm;
    let cost_span = cl - cs;
    let perf_span = pl - ps;
    if !(cost_span.is_finite() && cost_span > 0.0) {
        return Err(Error::DegenerateSpan {
            axis: "cost",
            low: cs,
            high: cl,
        });
    }
    if !(perf_span.is_finite() && perf_span > 0.0) {
        return Err(Error::DegenerateSpan {
            axis: "performance",
            low: ps,
            high: pl,
        });
    }
    let mut xy = Vec::with_capacity(points.len() + 2);
    xy.push((0.0, 0.0));
    for p in points {
        let x = (p.cost - cs) / cost_span;
        let y = (p.performance - ps) / perf_span;
        if !(x.is_finite() && y.is_finite()) {
            return Err(Error::Format(format!("non-finite curve point {p:?}")));
        }
        xy.push((x, y));
    }
    xy.push((1.0, 1.0));
    Ok(trapezoid_unit(&mut xy))
}

/// Trapezoid integral over `x ∈ [0, 1]` of the polyline through `xy` sorted by `(x, y)`.
fn trapezoid_unit(xy: &mut [(f64, f64)]) -> f64 {
    xy.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut area = 0.0;
    for w in xy.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if x1 <= x0 {
            continue;
        }
        let lo = x0.max(0.0);
        let hi = x1.min(1.0);
        if hi <= lo {
            continue;
        }
        let at = |x: f64| y0 + (y1 - y0) * (x - x0) / (x1 - x0);
        area += (hi - lo) * (at(lo) + at(hi)) / 2.0;
    }
    area
}

/// ToA of a curve against its own `slm_only`/`llm_only` points.
pub fn curve_toa(points: &[CurvePoint]) -> Result<f64> {
    toa(points, Endpoints::from_curve(points)?)
}

/// Oracle routing curve: questions are routed hardest first (ascending SLM accuracy, then id).
///
/// Point `m` routes the first `m` questions of that order; `m = 0` and `m = N` are the
/// pure endpoints. Run it with an assume-perfect context for the ToGA-100 reference.
pub fn golden_curve(dataset: &Dataset, ctx: &EvalContext) -> Result<Vec<CurvePoint>> {
    let questions = dataset.questions();
    if questions.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let n = questions.len();
    let mut slm_cost = Vec::with_capacity(n);
    let mut slm_perf = Vec::with_capacity(n);
    let mut llm_cost = Vec::with_capacity(n);
    let mut llm_perf = Vec::with_capacity(n);
    for q in questions {
        slm_cost.push(ctx.slm_single_cost(q)?);
        slm_perf.push(q.slm_accuracy().ok_or_else(|| no_samples(q))?);
        llm_cost.push(ctx.llm_cost(q)?);
        llm_perf.push(ctx.llm_quality(q)?);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        slm_perf[a]
            .partial_cmp(&slm_perf[b])
            .unwrap_or(Ordering::Equal)
            .then_with(|| questions[a].id().cmp(questions[b].id()))
    });
    let mut rank = vec![0usize; n];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    let denom: f64 = llm_cost.iter().sum();

    // Sums run in dataset order so the m = 0 and m = N points match the pure endpoints bit for bit.
    let points = (0..=n)
        .map(|m| {
            let mut cost = 0.0;
            let mut perf = 0.0;
            for i in 0..n {
                if rank[i] < m {
                    cost += llm_cost[i];
                    perf += llm_perf[i];
                } else {
                    cost += slm_cost[i];
                    perf += slm_perf[i];
                }
            }
            let tau = match m {
                0 => CurveTau::SlmOnly,
                m if m == n => CurveTau::LlmOnly,
                m => CurveTau::Threshold(m as f64 / n as f64),
            };
            CurvePoint {
                tau,
                cost: if m == n { 1.0 } else { cost / denom },
                performance: perf / n as f64,
                n_routed: m,
            }
        })
        .collect();
    Ok(points)
}

/// Trade-off gain ratio from two areas.
pub fn togr_from_areas(router_toa: f64, golden_toa: f64) -> Result<f64> {
    let golden_gain = golden_toa - RANDOM_TOA;
    if golden_gain <= GOLDEN_GAIN_FLOOR {
        return Err(Error::DegenerateGolden(golden_gain));
    }
    Ok((router_toa - RANDOM_TOA) / golden_gain)
}

/// Router trade-off gain over the golden gain; negative when the router is worse than random.
pub fn togr(router_curve: &[CurvePoint], golden_curve: &[CurvePoint]) -> Result<f64> {
    togr_from_areas(curve_toa(router_curve)?, curve_toa(golden_curve)?)
}

/// Mean decision latency (in SLM output tokens) split by who answered in the end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    /// Average generation latency over questions the SLM answered.
    pub agl: f64,
    /// Average routing overhead latency over questions handed to the LLM.
    pub arol: f64,
    pub n_accepted: usize,
    pub n_rejected: usize,
}

impl LatencyReport {
    /// True when no question was accepted and `agl` is a placeholder 0.
    pub fn agl_empty(&self) -> bool {
        self.n_accepted == 0
    }

    pub fn arol_empty(&self) -> bool {
        self.n_rejected == 0
    }
}

/// AGL and AROL over cascade outcomes; each mean runs over its own subgroup.
pub fn latency_report(outcomes: &[RoutingOutcome]) -> Result<LatencyReport> {
    let mut sums = [0u64; 2];
    let mut counts = [0usize; 2];
    for o in outcomes {
        if o.mode != RoutingMode::Cascade {
            return Err(Error::invariant(
                "mode",
                format!("latency needs cascade outcomes, `{}` is {:?}", o.question_id, o.mode),
            ));
        }
        let g = usize::from(o.routed);
        sums[g] += u64::from(o.decision_latency_tokens);
        counts[g] += 1;
    }
    let mean = |g: usize| {
        if counts[g] == 0 {
            0.0
        } else {
            sums[g] as f64 / counts[g] as f64
        }
    };
    Ok(LatencyReport {
        agl: mean(0),
        arol: mean(1),
        n_accepted: counts[0],
        n_rejected: counts[1],
    })
}

/// Which LLM quality the gain ratio is computed under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricMode {
    /// Recorded LLM correctness; ToGR uses ToGA.
    Actual,
    /// LLM assumed correct everywhere; ToGR uses ToGA-100.
    Perfect,
}

impl FromStr for MetricMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "actual" => Ok(MetricMode::Actual),
            "perfect" => Ok(MetricMode::Perfect),
            other => Err(Error::param("mode", format!("unknown metric mode `{other}`"))),
        }
    }
}

impl fmt::Display for MetricMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricMode::Actual => "actual",
            MetricMode::Perfect => "perfect",
        })
    }
}

/// Summary written to `metrics.json`. Absent values serialize as `null`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub toa: Option<f64>,
    pub toga: Option<f64>,
    pub toa100: Option<f64>,
    pub toga100: Option<f64>,
    pub togr: Option<f64>,
    pub agl: Option<f64>,
    pub arol: Option<f64>,
    pub mode: MetricMode,
}

impl MetricsReport {
    pub fn new(toa: Option<f64>, toa100: Option<f64>, mode: MetricMode) -> Self {
        Self {
            toa,
            toga: toa.map(|a| a - RANDOM_TOA),
            toa100,
            toga100: toa100.map(|a| a - RANDOM_TOA),
            togr: None,
            agl: None,
            arol: None,
            mode,
        }
    }
}
