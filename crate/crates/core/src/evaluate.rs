//! Full sweeps: curves in both LLM quality modes, golden reference and the metrics summary.

use log::warn;

use crate::cascade::{route_cascade_all, sweep_cascade, CascadeConfig};
use crate::cost::EvalContext;
use crate::error::{Error, Result};
use crate::metrics::{
    curve_toa, golden_curve, latency_report, togr_from_areas, LatencyReport, MetricMode,
    MetricsReport,
};
use crate::model::{CurvePoint, Dataset, PricingSchedule};
use crate::pre_router::{sweep_pre, ScoreSource};

/// A routing policy whose threshold is swept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Policy {
    Pre(ScoreSource),
    Cascade(CascadeConfig),
}

/// Curve of `policy` over `taus`, pure endpoints included.
pub fn sweep(
    dataset: &Dataset,
    taus: &[f64],
    policy: &Policy,
    ctx: &EvalContext,
) -> Result<Vec<CurvePoint>> {
    match policy {
        Policy::Pre(source) => sweep_pre(dataset, taus, *source, ctx),
        Policy::Cascade(config) => Ok(sweep_cascade(dataset, taus, config, ctx)?.points),
    }
}

/// ToA-100: the sweep rerun with the LLM assumed correct everywhere.
pub fn toa100(
    dataset: &Dataset,
    taus: &[f64],
    policy: &Policy,
    pricing: PricingSchedule,
) -> Result<f64> {
    let ctx = EvalContext::new(dataset, pricing, true);
    curve_toa(&sweep(dataset, taus, policy, &ctx)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationRequest {
    pub policy: Policy,
    pub taus: Vec<f64>,
    pub pricing: PricingSchedule,
    pub mode: MetricMode,
    /// Threshold at which the headline AGL/AROL are reported (cascade only).
    pub latency_tau: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// Curve under the requested quality mode.
    pub curve: Vec<CurvePoint>,
    /// Golden curve under the requested quality mode.
    pub golden: Vec<CurvePoint>,
    pub report: MetricsReport,
    /// Per-threshold latency, cascade only.
    pub latency: Vec<(f64, LatencyReport)>,
}

fn area_or_warn(what: &str, curve: &[CurvePoint]) -> Result<Option<f64>> {
    match curve_toa(curve) {
        Ok(a) => Ok(Some(a)),
        Err(e @ Error::DegenerateSpan { .. }) => {
            warn!("{what} is undefined: {e}");
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

/// Run every sweep the metrics need and assemble the report.
///
/// Actual-mode metrics are skipped (left `null`) when some question lacks an LLM record
/// and the request is in perfect mode; in actual mode that is an error.
pub fn evaluate(dataset: &Dataset, req: &EvaluationRequest) -> Result<Evaluation> {
    let has_llm = dataset.questions().iter().all(|q| q.llm().is_some());
    if req.mode == MetricMode::Actual && !has_llm {
        return Err(Error::param(
            "assume-perfect",
            "some questions have no LLM record; only perfect-mode metrics are available",
        ));
    }
    if dataset.profile().avg_llm_tokens.is_none() {
        return Err(Error::NoLlmData);
    }

    let perfect_ctx = EvalContext::new(dataset, req.pricing, true);
    let actual_ctx = EvalContext::new(dataset, req.pricing, false);

    let (perfect_curve, latency) = match &req.policy {
        Policy::Pre(source) => (sweep_pre(dataset, &req.taus, *source, &perfect_ctx)?, Vec::new()),
        Policy::Cascade(config) => {
            let s = sweep_cascade(dataset, &req.taus, config, &perfect_ctx)?;
            (s.points, s.latency)
        }
    };
    let actual_curve = if has_llm {
        Some(sweep(dataset, &req.taus, &req.policy, &actual_ctx)?)
    } else {
        None
    };

    let toa = match &actual_curve {
        Some(c) => area_or_warn("ToA", c)?,
        None => None,
    };
    let toa100 = area_or_warn("ToA-100", &perfect_curve)?;

    let (curve, ctx, router_area) = match req.mode {
        MetricMode::Perfect => (perfect_curve, perfect_ctx, toa100),
        MetricMode::Actual => (actual_curve.expect("checked above"), actual_ctx, toa),
    };
    let golden = golden_curve(dataset, &ctx)?;
    let golden_area = area_or_warn("golden ToA", &golden)?;

    let mut report = MetricsReport::new(toa, toa100, req.mode);
    report.togr = match (router_area, golden_area) {
        (Some(r), Some(g)) => match togr_from_areas(r, g) {
            Ok(v) => Some(v),
            Err(e) => {
                warn!("ToGR is undefined: {e}");
                None
            }
        },
        _ => None,
    };

    if let Policy::Cascade(config) = &req.policy {
        let at_tau = match latency.iter().find(|(t, _)| (t - req.latency_tau).abs() < 1e-12) {
            Some((_, r)) => *r,
            None => latency_report(&route_cascade_all(dataset, req.latency_tau, config, &ctx)?)?,
        };
        report.agl = Some(at_tau.agl);
        report.arol = Some(at_tau.arol);
    }

    Ok(Evaluation {
        curve,
        golden,
        report,
        latency,
    })
}
