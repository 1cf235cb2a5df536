//! Simulation of multivariate counting processes whose intensities only read
//! the history of each mark's closure.
//!
//! The model class has piecewise-constant intensities that change only at
//! event times:
//!
//! ```text
//! rate_k(H) = baseline_k * Π_{j ∈ cl(k)} factor_{jk} ^ min(N_j(H), cap_{jk})
//! ```
//!
//! so a replicate is simulated exactly by competing exponential clocks. Every
//! multiplier source must lie in `cl(k)`, which makes the supplied graph a
//! local independence graph of the simulated process by construction.
//!
//! Replicate `i` draws from ChaCha20 stream `i` of the generator seeded with
//! `seed`; results are bitwise reproducible within this implementation and do
//! not depend on the number of worker threads.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{DynamicGraph, GraphError, VertexSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("baseline for `{mark}` must be finite and nonnegative, got {value}")]
    BadBaseline { mark: String, value: f64 },
    #[error("missing baseline for `{0}`")]
    MissingBaseline(String),
    #[error("multiplier {from} -> {to} must be finite and positive, got {value}")]
    BadFactor { from: String, to: String, value: f64 },
    #[error("multiplier {from} -> {to} has cap 0")]
    ZeroCap { from: String, to: String },
    #[error("duplicate multiplier {from} -> {to}")]
    DuplicateMultiplier { from: String, to: String },
    #[error("model reads marks outside the closure of their target: {}", format_pairs(.0))]
    NotGraphFaithful(Vec<(String, String)>),
}

fn format_pairs(p: &[(String, String)]) -> String {
    p.iter().map(|(j, k)| format!("{j} -> {k}")).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("horizon must be finite and positive, got {0}")]
    BadHorizon(f64),
    #[error("model has {model} marks but the graph has {graph}")]
    MarkCountMismatch { model: usize, graph: usize },
    #[error("non-finite rate {rate} for mark {mark} at time {time}")]
    NonFiniteRate { mark: usize, time: f64, rate: f64 },
    #[error("invalid history: {0}")]
    InvalidHistory(String),
    #[error("total rate {total_rate} too large to separate event times at t = {time}")]
    TimeResolution { time: f64, total_rate: f64 },
}

const MAX_TIE_REDRAWS: usize = 64;

/// One multiplier entry as it appears in a model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplierSpec {
    pub from: String,
    pub to: String,
    pub factor: f64,
    #[serde(default = "default_cap")]
    pub cap: u32,
}

fn default_cap() -> u32 {
    1
}

/// Unvalidated model description: `{"baselines": {...}, "multipliers": [...]}`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ModelSpec {
    pub baselines: BTreeMap<String, f64>,
    #[serde(default)]
    pub multipliers: Vec<MultiplierSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Multiplier {
    pub from: usize,
    pub factor: f64,
    pub cap: u32,
}

/// Validated intensity model. Only constructible through [`IntensityModel::new`],
/// which rejects any dependence outside a mark's closure.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityModel {
    labels: Vec<String>,
    baselines: Vec<f64>,
    // terms[k]: multipliers acting on mark k
    terms: Vec<Vec<Multiplier>>,
    closures: Vec<VertexSet>,
}

/// Offending `(from, to)` pairs: multipliers with factor ≠ 1 whose source is
/// not in the closure of the target.
pub fn validate_model(g: &DynamicGraph, spec: &ModelSpec) -> Result<(), ModelError> {
    let mut bad = Vec::new();
    for m in &spec.multipliers {
        let j = g.index_of(&m.from)?;
        let k = g.index_of(&m.to)?;
        let cl = g.closure(VertexSet::singleton(k))?;
        if m.factor != 1.0 && !cl.contains(j) {
            bad.push((m.from.clone(), m.to.clone()));
        }
    }
    if bad.is_empty() {
        Ok(())
    } else {
        Err(ModelError::NotGraphFaithful(bad))
    }
}

impl IntensityModel {
    pub fn new(g: &DynamicGraph, spec: &ModelSpec) -> Result<Self, ModelError> {
        validate_model(g, spec)?;
        let n = g.universe_len();
        let mut baselines = vec![f64::NAN; n];
        for (label, &value) in &spec.baselines {
            let k = g.index_of(label)?;
            if !(value.is_finite() && value >= 0.0) {
                return Err(ModelError::BadBaseline { mark: label.clone(), value });
            }
            baselines[k] = value;
        }
        for k in g.vertices().iter() {
            if baselines[k].is_nan() {
                return Err(ModelError::MissingBaseline(g.label(k).to_string()));
            }
        }
        let mut terms = vec![Vec::new(); n];
        let mut seen = std::collections::HashSet::new();
        for m in &spec.multipliers {
            let j = g.index_of(&m.from)?;
            let k = g.index_of(&m.to)?;
            if !(m.factor.is_finite() && m.factor > 0.0) {
                return Err(ModelError::BadFactor { from: m.from.clone(), to: m.to.clone(), value: m.factor });
            }
            if m.cap == 0 {
                return Err(ModelError::ZeroCap { from: m.from.clone(), to: m.to.clone() });
            }
            if !seen.insert((j, k)) {
                return Err(ModelError::DuplicateMultiplier { from: m.from.clone(), to: m.to.clone() });
            }
            if m.factor != 1.0 {
                terms[k].push(Multiplier { from: j, factor: m.factor, cap: m.cap });
            }
        }
        for t in &mut terms {
            t.sort_by_key(|m| m.from);
        }
        let closures = (0..n)
            .map(|k| {
                if g.vertices().contains(k) {
                    g.closure(VertexSet::singleton(k)).expect("vertex of g")
                } else {
                    VertexSet::EMPTY
                }
            })
            .collect();
        Ok(IntensityModel { labels: g.labels().to_vec(), baselines, terms, closures })
    }

    /// Model where every mark runs at its baseline, independently of the past.
    pub fn independent(g: &DynamicGraph, baselines: &[f64]) -> Result<Self, ModelError> {
        let spec = ModelSpec {
            baselines: g.vertices().iter().map(|k| (g.label(k).to_string(), baselines[k])).collect(),
            multipliers: Vec::new(),
        };
        Self::new(g, &spec)
    }

    pub fn mark_count(&self) -> usize {
        self.labels.len()
    }

    pub fn baseline(&self, k: usize) -> f64 {
        self.baselines[k]
    }

    pub fn multipliers(&self, k: usize) -> &[Multiplier] {
        &self.terms[k]
    }

    /// `cl(k)` in the graph the model was validated against.
    pub fn closure(&self, k: usize) -> VertexSet {
        self.closures[k]
    }

    /// Rate of mark `k` given the current event counts of all marks.
    #[inline]
    pub fn rate(&self, k: usize, counts: &[u32]) -> f64 {
        let mut r = self.baselines[k];
        for m in &self.terms[k] {
            let e = counts[m.from].min(m.cap);
            if e > 0 {
                r *= m.factor.powi(e as i32);
            }
        }
        r
    }

    /// Serializable form; `IntensityModel::new(g, &m.spec())` reproduces `m`.
    pub fn spec(&self) -> ModelSpec {
        let mut spec = ModelSpec::default();
        for (k, label) in self.labels.iter().enumerate() {
            if self.closures[k].is_empty() {
                continue;
            }
            spec.baselines.insert(label.clone(), self.baselines[k]);
            for m in &self.terms[k] {
                spec.multipliers.push(MultiplierSpec {
                    from: self.labels[m.from].clone(),
                    to: label.clone(),
                    factor: m.factor,
                    cap: m.cap,
                });
            }
        }
        spec
    }

    /// Copy of the model with every multiplier factor multiplied by `scale`.
    pub fn with_scaled_effects(&self, scale: f64) -> IntensityModel {
        let mut m = self.clone();
        for t in &mut m.terms {
            for x in t.iter_mut() {
                x.factor *= scale;
            }
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub mark: usize,
}

/// Realized history on `[0, horizon]`, possibly stopped early.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    events: Vec<Event>,
    horizon: f64,
    stopped_at: Option<f64>,
}

impl History {
    pub fn new(events: Vec<Event>, horizon: f64, stopped_at: Option<f64>) -> Result<Self, SimError> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(SimError::BadHorizon(horizon));
        }
        let end = stopped_at.unwrap_or(horizon);
        if let Some(s) = stopped_at {
            if !(s > 0.0 && s <= horizon) {
                return Err(SimError::InvalidHistory(format!("stop time {s} outside (0, {horizon}]")));
            }
        }
        let mut last = 0.0;
        for e in &events {
            if !(e.time.is_finite() && e.time > last) {
                return Err(SimError::InvalidHistory(format!(
                    "event times must be positive and strictly increasing ({} after {})",
                    e.time, last
                )));
            }
            if e.time > end {
                return Err(SimError::InvalidHistory(format!("event at {} after end of observation {end}", e.time)));
            }
            if e.mark >= crate::graph::MAX_VERTICES {
                return Err(SimError::InvalidHistory(format!("mark index {} out of range", e.mark)));
            }
            last = e.time;
        }
        Ok(History { events, horizon, stopped_at })
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn stopped_at(&self) -> Option<f64> {
        self.stopped_at
    }

    /// End of the observation window: the stop time if any, else the horizon.
    pub fn end(&self) -> f64 {
        self.stopped_at.unwrap_or(self.horizon)
    }

    pub fn count(&self, k: usize) -> usize {
        self.events.iter().filter(|e| e.mark == k).count()
    }

    /// `H^A`: events with marks in `A`; horizon and stop time are kept.
    pub fn restrict(&self, a: VertexSet) -> History {
        History {
            events: self.events.iter().copied().filter(|e| a.contains(e.mark)).collect(),
            horizon: self.horizon,
            stopped_at: self.stopped_at,
        }
    }
}

pub fn restrict_history(h: &History, a: VertexSet) -> History {
    h.restrict(a)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub horizon: f64,
    pub seed: u64,
    pub replicates: usize,
}

/// Simulates `cfg.replicates` independent histories (replicate `i` on stream `i`).
pub fn simulate(g: &DynamicGraph, model: &IntensityModel, cfg: &SimulationConfig) -> Result<Vec<History>, SimError> {
    simulate_range(g, model, cfg.horizon, cfg.seed, 0..cfg.replicates as u64)
}

/// Simulates the replicates with the given stream indices.
pub fn simulate_range(
    g: &DynamicGraph,
    model: &IntensityModel,
    horizon: f64,
    seed: u64,
    replicates: std::ops::Range<u64>,
) -> Result<Vec<History>, SimError> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(SimError::BadHorizon(horizon));
    }
    if model.mark_count() != g.universe_len() {
        return Err(SimError::MarkCountMismatch { model: model.mark_count(), graph: g.universe_len() });
    }
    let marks: Vec<usize> = g.vertices().iter().collect();
    let absorbing = g.absorbing();
    replicates
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(i);
            simulate_one(model, &marks, absorbing, horizon, &mut rng)
        })
        .collect()
}

fn simulate_one(
    model: &IntensityModel,
    marks: &[usize],
    absorbing: VertexSet,
    horizon: f64,
    rng: &mut ChaCha20Rng,
) -> Result<History, SimError> {
    let mut counts = vec![0u32; model.mark_count()];
    let mut rates = vec![0.0; marks.len()];
    let mut events = Vec::new();
    let mut t = 0.0f64;
    let mut stopped_at = None;
    loop {
        let mut total = 0.0;
        for (slot, &k) in marks.iter().enumerate() {
            let r = model.rate(k, &counts);
            if !r.is_finite() {
                return Err(SimError::NonFiniteRate { mark: k, time: t, rate: r });
            }
            rates[slot] = r;
            total += r;
        }
        if total <= 0.0 {
            break;
        }
        // exact floating-point ties with the previous event are re-drawn
        let mut next = t;
        for _ in 0..MAX_TIE_REDRAWS {
            next = t + rng.sample::<f64, _>(Exp1) / total;
            if next > t {
                break;
            }
        }
        if next <= t {
            return Err(SimError::TimeResolution { time: t, total_rate: total });
        }
        if next > horizon {
            break;
        }
        let mut u = rng.random::<f64>() * total;
        let mut chosen = None;
        for (slot, &k) in marks.iter().enumerate() {
            if rates[slot] <= 0.0 {
                continue;
            }
            chosen = Some(k);
            if u < rates[slot] {
                break;
            }
            u -= rates[slot];
        }
        let chosen = chosen.expect("total rate is positive");
        t = next;
        counts[chosen] += 1;
        events.push(Event { time: t, mark: chosen });
        if absorbing.contains(chosen) {
            stopped_at = Some(t);
            break;
        }
    }
    Ok(History { events, horizon, stopped_at })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> (DynamicGraph, IntensityModel) {
        let g = DynamicGraph::from_edges(&["a", "b"], &[("a", "b")]).unwrap();
        let spec = ModelSpec {
            baselines: [("a".to_string(), 0.5), ("b".to_string(), 0.5)].into_iter().collect(),
            multipliers: vec![MultiplierSpec { from: "a".into(), to: "b".into(), factor: 4.0, cap: 1 }],
        };
        let m = IntensityModel::new(&g, &spec).unwrap();
        (g, m)
    }

    #[test]
    fn poisson_mean_count() {
        let g = DynamicGraph::new(&["x"]).unwrap();
        let m = IntensityModel::independent(&g, &[2.0]).unwrap();
        let hs = simulate(&g, &m, &SimulationConfig { horizon: 5.0, seed: 11, replicates: 10_000 }).unwrap();
        let counts: Vec<f64> = hs.iter().map(|h| h.events().len() as f64).collect();
        let mean = counts.iter().sum::<f64>() / counts.len() as f64;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (counts.len() - 1) as f64;
        assert!((mean - 10.0).abs() < 0.3, "mean {mean}");
        assert!((var / 10.0 - 1.0).abs() < 0.05, "variance {var}");
    }

    #[test]
    fn absorbing_mark_stops() {
        let mut g = DynamicGraph::new(&["x", "stop"]).unwrap();
        g.set_absorbing(VertexSet::singleton(1)).unwrap();
        let m = IntensityModel::independent(&g, &[3.0, 1.0]).unwrap();
        let hs = simulate(&g, &m, &SimulationConfig { horizon: 4.0, seed: 3, replicates: 2000 }).unwrap();
        let mut stopped = 0;
        for h in &hs {
            assert!(h.count(1) <= 1);
            match h.stopped_at() {
                Some(s) => {
                    stopped += 1;
                    let last = h.events().last().unwrap();
                    assert_eq!(last.mark, 1);
                    assert_eq!(last.time, s);
                }
                None => assert_eq!(h.count(1), 0),
            }
            assert!(h.events().iter().all(|e| e.time <= h.end()));
        }
        // P(stop before 4) = 1 - e^-4
        let p = stopped as f64 / hs.len() as f64;
        assert!((p - (1.0 - (-4.0f64).exp())).abs() < 0.03);
    }

    #[test]
    fn determinism_and_stream_independence() {
        let (g, m) = chain();
        let cfg = SimulationConfig { horizon: 10.0, seed: 99, replicates: 50 };
        let a = simulate(&g, &m, &cfg).unwrap();
        let b = simulate(&g, &m, &cfg).unwrap();
        assert_eq!(a, b);
        let tail = simulate_range(&g, &m, 10.0, 99, 20..50).unwrap();
        assert_eq!(&a[20..], &tail[..]);
        let other = simulate(&g, &m, &SimulationConfig { seed: 100, ..cfg }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn strictly_increasing_times() {
        let (g, m) = chain();
        let hs = simulate(&g, &m, &SimulationConfig { horizon: 20.0, seed: 5, replicates: 500 }).unwrap();
        for h in hs {
            assert!(h.events().windows(2).all(|w| w[0].time < w[1].time));
            assert!(h.events().iter().all(|e| e.time > 0.0 && e.time <= 20.0));
        }
    }

    #[test]
    fn validation_reports_offending_pairs() {
        let g = DynamicGraph::from_edges(
            &["vi", "ho", "hs", "d"],
            &[("vi", "ho"), ("hs", "ho"), ("ho", "hs"), ("ho", "d"), ("hs", "d")],
        )
        .unwrap();
        let baselines: BTreeMap<String, f64> = ["vi", "ho", "hs", "d"].iter().map(|l| (l.to_string(), 1.0)).collect();
        let bad = ModelSpec {
            baselines: baselines.clone(),
            multipliers: vec![MultiplierSpec { from: "vi".into(), to: "d".into(), factor: 2.0, cap: 1 }],
        };
        assert_eq!(validate_model(&g, &bad), Err(ModelError::NotGraphFaithful(vec![("vi".into(), "d".into())])));
        assert!(IntensityModel::new(&g, &bad).is_err());

        let unit = ModelSpec {
            baselines: baselines.clone(),
            multipliers: vec![MultiplierSpec { from: "vi".into(), to: "d".into(), factor: 1.0, cap: 1 }],
        };
        assert!(validate_model(&g, &unit).is_ok());
        let edgeless = DynamicGraph::new(&["vi", "ho", "hs", "d"]).unwrap();
        assert!(validate_model(&edgeless, &unit).is_ok());

        let good = ModelSpec {
            baselines,
            multipliers: vec![
                MultiplierSpec { from: "ho".into(), to: "d".into(), factor: 2.0, cap: 1 },
                MultiplierSpec { from: "d".into(), to: "d".into(), factor: 3.0, cap: 2 },
            ],
        };
        let m = IntensityModel::new(&g, &good).unwrap();
        assert!(validate_model(&g, &m.spec()).is_ok());
        assert_eq!(IntensityModel::new(&g, &m.spec()).unwrap(), m);
    }

    #[test]
    fn rate_respects_caps() {
        let g = DynamicGraph::new(&["x"]).unwrap();
        let spec = ModelSpec {
            baselines: [("x".to_string(), 1.0)].into_iter().collect(),
            multipliers: vec![MultiplierSpec { from: "x".into(), to: "x".into(), factor: 2.0, cap: 3 }],
        };
        let m = IntensityModel::new(&g, &spec).unwrap();
        assert_eq!(m.rate(0, &[0]), 1.0);
        assert_eq!(m.rate(0, &[2]), 4.0);
        assert_eq!(m.rate(0, &[7]), 8.0);
    }

    #[test]
    fn zero_total_rate_ends_replicate() {
        let g = DynamicGraph::new(&["x"]).unwrap();
        let m = IntensityModel::independent(&g, &[0.0]).unwrap();
        let hs = simulate(&g, &m, &SimulationConfig { horizon: 1.0, seed: 0, replicates: 3 }).unwrap();
        assert!(hs.iter().all(|h| h.events().is_empty() && h.stopped_at().is_none()));
    }

    #[test]
    fn non_finite_rate_is_an_error() {
        let g = DynamicGraph::new(&["x"]).unwrap();
        let spec = ModelSpec {
            baselines: [("x".to_string(), 1.0)].into_iter().collect(),
            multipliers: vec![MultiplierSpec { from: "x".into(), to: "x".into(), factor: 1e300, cap: 5 }],
        };
        let m = IntensityModel::new(&g, &spec).unwrap();
        let r = simulate(&g, &m, &SimulationConfig { horizon: 100.0, seed: 1, replicates: 1 });
        assert!(matches!(r, Err(SimError::NonFiniteRate { .. } | SimError::TimeResolution { .. })));

        let spec = ModelSpec {
            baselines: [("x".to_string(), 1e200)].into_iter().collect(),
            multipliers: vec![MultiplierSpec { from: "x".into(), to: "x".into(), factor: 1e200, cap: 1 }],
        };
        let m = IntensityModel::new(&g, &spec).unwrap();
        let r = simulate(&g, &m, &SimulationConfig { horizon: 1.0, seed: 1, replicates: 1 });
        assert!(matches!(r, Err(SimError::NonFiniteRate { .. })));
    }

    #[test]
    fn restriction() {
        let (g, m) = chain();
        let h = simulate(&g, &m, &SimulationConfig { horizon: 10.0, seed: 1, replicates: 1 }).unwrap().remove(0);
        assert_eq!(h.restrict(g.vertices()), h);
        let empty = restrict_history(&h, VertexSet::EMPTY);
        assert!(empty.events().is_empty());
        assert_eq!(empty.horizon(), h.horizon());
        assert!(h.restrict(VertexSet::singleton(0)).events().iter().all(|e| e.mark == 0));
    }

    #[test]
    fn history_validation() {
        let ev = |t, m| Event { time: t, mark: m };
        assert!(History::new(vec![ev(1.0, 0), ev(1.0, 1)], 5.0, None).is_err());
        assert!(History::new(vec![ev(2.0, 0), ev(1.0, 1)], 5.0, None).is_err());
        assert!(History::new(vec![ev(6.0, 0)], 5.0, None).is_err());
        assert!(History::new(vec![ev(1.0, 0), ev(3.0, 0)], 5.0, Some(2.0)).is_err());
        assert!(History::new(vec![ev(1.0, 0)], 0.0, None).is_err());
        assert!(History::new(vec![ev(1.0, 0), ev(2.0, 1)], 5.0, Some(2.0)).is_ok());
    }
}
