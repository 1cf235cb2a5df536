//! Log-likelihood of a history under an [`IntensityModel`].
//!
//! For piecewise-constant intensities the compensator is an exact finite sum of
//! rate × segment length, so
//!
//! ```text
//! log L(t | H_t) = Σ_{T_s ≤ t} log λ_{E_s}(T_s) − Σ_segments Σ_k λ_k · length
//! ```
//!
//! The mark-specific term for `k` only looks at events in `cl(k)`: both its
//! event term and its exposure are accumulated over the segments cut by those
//! events alone. It therefore returns the same bits on `H` and on `H^{cl(k)}`.
//! The joint log-likelihood is computed along the full event sequence, an
//! independent summation path, and the two agree up to rounding.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::graph::{DynamicGraph, GraphError, VertexSet};
use crate::sim::{History, IntensityModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LikelihoodError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("evaluation time {t} outside [0, {horizon}]")]
    TimeOutOfRange { t: f64, horizon: f64 },
    #[error("model has {model} marks but the graph has {graph}")]
    MarkCountMismatch { model: usize, graph: usize },
    #[error("history contains mark index {0} that is not a vertex of the graph")]
    UnknownMark(usize),
}

/// A log-likelihood value, or the record of an event the model gives rate zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogLik {
    Finite { value: f64 },
    Impossible { mark: usize, time: f64 },
}

impl LogLik {
    /// The numeric value; `-inf` for impossible histories.
    pub fn value(&self) -> f64 {
        match *self {
            LogLik::Finite { value } => value,
            LogLik::Impossible { .. } => f64::NEG_INFINITY,
        }
    }

    pub fn is_impossible(&self) -> bool {
        matches!(self, LogLik::Impossible { .. })
    }

    fn combine(self, other: LogLik) -> LogLik {
        match (self, other) {
            (LogLik::Finite { value: a }, LogLik::Finite { value: b }) => LogLik::Finite { value: a + b },
            (imp @ LogLik::Impossible { .. }, _) => imp,
            (_, imp) => imp,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MarkTerm {
    pub mark: String,
    pub events: usize,
    /// Σ log λ_k over events of k (`-inf` if one of them has rate zero).
    pub event_term: f64,
    /// ∫ λ_k over the observation window.
    pub exposure: f64,
    pub loglik: LogLik,
}

#[derive(Debug, Clone, Serialize)]
pub struct LogLikelihoodBreakdown {
    pub t: f64,
    pub total: LogLik,
    pub per_mark: BTreeMap<String, MarkTerm>,
}

fn check(model: &IntensityModel, g: &DynamicGraph, h: &History, t: f64) -> Result<(), LikelihoodError> {
    if model.mark_count() != g.universe_len() {
        return Err(LikelihoodError::MarkCountMismatch { model: model.mark_count(), graph: g.universe_len() });
    }
    if !(t >= 0.0 && t <= h.horizon()) {
        return Err(LikelihoodError::TimeOutOfRange { t, horizon: h.horizon() });
    }
    if let Some(e) = h.events().iter().find(|e| !g.vertices().contains(e.mark)) {
        return Err(LikelihoodError::UnknownMark(e.mark));
    }
    Ok(())
}

/// Joint log-likelihood of `h` up to `t`.
pub fn loglik(model: &IntensityModel, g: &DynamicGraph, h: &History, t: f64) -> Result<LogLik, LikelihoodError> {
    check(model, g, h, t)?;
    let end = t.min(h.end());
    let marks: Vec<usize> = g.vertices().iter().collect();
    let mut counts = vec![0u32; model.mark_count()];
    let mut event_sum = 0.0;
    let mut exposure = 0.0;
    let mut last = 0.0;
    for e in h.events().iter().take_while(|e| e.time <= end) {
        let total: f64 = marks.iter().map(|&k| model.rate(k, &counts)).sum();
        exposure += total * (e.time - last);
        let r = model.rate(e.mark, &counts);
        if r <= 0.0 {
            return Ok(LogLik::Impossible { mark: e.mark, time: e.time });
        }
        event_sum += r.ln();
        counts[e.mark] += 1;
        last = e.time;
    }
    let total: f64 = marks.iter().map(|&k| model.rate(k, &counts)).sum();
    exposure += total * (end - last);
    Ok(LogLik::Finite { value: event_sum - exposure })
}

// (event count, Σ log rate, exposure) for mark k using only events in cl(k).
fn mark_parts(model: &IntensityModel, h: &History, end: f64, k: usize) -> (usize, f64, f64, Option<f64>) {
    let cl = model.closure(k);
    let mut counts = vec![0u32; model.mark_count()];
    let mut n = 0;
    let mut event_sum = 0.0;
    let mut exposure = 0.0;
    let mut last = 0.0;
    let mut impossible = None;
    for e in h.events().iter().filter(|e| cl.contains(e.mark)).take_while(|e| e.time <= end) {
        let r = model.rate(k, &counts);
        exposure += r * (e.time - last);
        if e.mark == k {
            n += 1;
            if r <= 0.0 {
                impossible.get_or_insert(e.time);
                event_sum = f64::NEG_INFINITY;
            } else {
                event_sum += r.ln();
            }
        }
        counts[e.mark] += 1;
        last = e.time;
    }
    exposure += model.rate(k, &counts) * (end - last);
    (n, event_sum, exposure, impossible)
}

/// Mark-specific log-likelihood `log L_k(t | H_t)`.
pub fn mark_loglik(
    model: &IntensityModel,
    g: &DynamicGraph,
    h: &History,
    t: f64,
    k: usize,
) -> Result<LogLik, LikelihoodError> {
    check(model, g, h, t)?;
    g.check_subset(VertexSet::singleton(k))?;
    Ok(mark_value(model, h, t.min(h.end()), k))
}

fn mark_value(model: &IntensityModel, h: &History, end: f64, k: usize) -> LogLik {
    let (_, event_sum, exposure, impossible) = mark_parts(model, h, end, k);
    match impossible {
        Some(time) => LogLik::Impossible { mark: k, time },
        None => LogLik::Finite { value: event_sum - exposure },
    }
}

/// Joint value plus per-mark terms, keyed by label.
pub fn breakdown(
    model: &IntensityModel,
    g: &DynamicGraph,
    h: &History,
    t: f64,
) -> Result<LogLikelihoodBreakdown, LikelihoodError> {
    let total = loglik(model, g, h, t)?;
    let end = t.min(h.end());
    let per_mark = g
        .vertices()
        .iter()
        .map(|k| {
            let (events, event_term, exposure, impossible) = mark_parts(model, h, end, k);
            let loglik = match impossible {
                Some(time) => LogLik::Impossible { mark: k, time },
                None => LogLik::Finite { value: event_term - exposure },
            };
            (g.label(k).to_string(), MarkTerm { mark: g.label(k).to_string(), events, event_term, exposure, loglik })
        })
        .collect();
    Ok(LogLikelihoodBreakdown { t, total, per_mark })
}

/// Log-likelihood of the marks in `S = An(A)` from `H^S` alone. Since no mark
/// in an ancestral set reads marks outside it, this is the marginal
/// likelihood of the sub-process on `S`.
pub fn marginal_ancestral_loglik(
    model: &IntensityModel,
    g: &DynamicGraph,
    h: &History,
    a: VertexSet,
    t: f64,
) -> Result<LogLik, LikelihoodError> {
    check(model, g, h, t)?;
    let s = g.ancestral_closure(a)?;
    let hs = h.restrict(s);
    let end = t.min(hs.end());
    Ok(s.iter().map(|k| mark_value(model, &hs, end, k)).fold(LogLik::Finite { value: 0.0 }, LogLik::combine))
}
