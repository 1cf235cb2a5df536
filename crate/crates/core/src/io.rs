//! File formats, DOT export and the registry of worked-example fixtures.
//!
//! Graphs are JSON objects `{"nodes": [...], "edges": [[from, to], ...],
//! "absorbing": [...]}`, models are JSON (see [`ModelSpec`]), and histories
//! are JSON Lines: a header record `{"tau", "seed", "stopped_at",
//! "replicate"}` followed by one `{"t", "mark"}` record per event.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::graph::{DynamicGraph, GraphError, UndirectedGraph, VertexSet};
use crate::separation::{
    ancestral_moral_separated, delta_separated_moral, delta_separated_trail, Query, SeparationError,
};
use crate::sim::{Event, History, IntensityModel, ModelError, ModelSpec, SimError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("invalid JSON at line {line}, column {column}: {msg}")]
    Json { line: usize, column: usize, msg: String },
    #[error("{field}: {msg}")]
    Field { field: String, msg: String },
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

impl From<serde_json::Error> for IoError {
    fn from(e: serde_json::Error) -> Self {
        IoError::Json { line: e.line(), column: e.column(), msg: e.to_string() }
    }
}

fn field(field: impl Into<String>, e: impl ToString) -> IoError {
    IoError::Field { field: field.into(), msg: e.to_string() }
}

/// Serializes through `serde_json::Value`, whose maps keep keys sorted.
pub fn to_sorted_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(&serde_json::to_value(value).expect("serializable")).expect("valid JSON")
}

pub fn to_sorted_json_pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(&serde_json::to_value(value).expect("serializable")).expect("valid JSON")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub nodes: Vec<String>,
    #[serde(default)]
    pub edges: Vec<(String, String)>,
    #[serde(default)]
    pub absorbing: Vec<String>,
}

impl GraphFile {
    pub fn from_graph(g: &DynamicGraph) -> Self {
        GraphFile {
            nodes: g.set_labels(g.vertices()),
            edges: g.edges().into_iter().map(|(j, k)| (g.label(j).to_string(), g.label(k).to_string())).collect(),
            absorbing: g.set_labels(g.absorbing()),
        }
    }

    pub fn to_graph(&self) -> Result<DynamicGraph, IoError> {
        let mut g = DynamicGraph::new(&self.nodes).map_err(|e| field("nodes", e))?;
        for (i, (j, k)) in self.edges.iter().enumerate() {
            let at = || format!("edges[{i}]");
            let j = g.index_of(j).map_err(|e| field(at(), e))?;
            let k = g.index_of(k).map_err(|e| field(at(), e))?;
            g.add_edge(j, k).map_err(|e| field(at(), e))?;
        }
        let abs = g.set_of(&self.absorbing).map_err(|e| field("absorbing", e))?;
        g.set_absorbing(abs).map_err(|e| field("absorbing", e))?;
        Ok(g)
    }
}

pub fn parse_graph(text: &str) -> Result<DynamicGraph, IoError> {
    serde_json::from_str::<GraphFile>(text)?.to_graph()
}

/// Pretty JSON for the vertices of `g`; `parse_graph` inverts it.
pub fn serialize_graph(g: &DynamicGraph) -> String {
    to_sorted_json_pretty(&GraphFile::from_graph(g))
}

pub fn parse_model_spec(text: &str) -> Result<ModelSpec, IoError> {
    Ok(serde_json::from_str(text)?)
}

pub fn parse_model(text: &str, g: &DynamicGraph) -> Result<IntensityModel, IoError> {
    Ok(IntensityModel::new(g, &parse_model_spec(text)?)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HeaderRecord {
    tau: f64,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    stopped_at: Option<f64>,
    #[serde(default)]
    replicate: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EventRecord {
    t: f64,
    mark: String,
}

/// JSON Lines for `histories`, replicate `i` getting index `first_replicate + i`.
pub fn write_histories(g: &DynamicGraph, histories: &[History], seed: Option<u64>, first_replicate: u64) -> String {
    let mut out = String::new();
    for (i, h) in histories.iter().enumerate() {
        let header = HeaderRecord {
            tau: h.horizon(),
            seed,
            stopped_at: h.stopped_at(),
            replicate: Some(first_replicate + i as u64),
        };
        out.push_str(&to_sorted_json(&header));
        out.push('\n');
        for e in h.events() {
            out.push_str(&to_sorted_json(&EventRecord { t: e.time, mark: g.label(e.mark).to_string() }));
            out.push('\n');
        }
    }
    out
}

pub fn parse_histories(text: &str, g: &DynamicGraph) -> Result<Vec<History>, IoError> {
    let mut out = Vec::new();
    let mut current: Option<(usize, HeaderRecord, Vec<Event>)> = None;
    let finish = |cur: Option<(usize, HeaderRecord, Vec<Event>)>, out: &mut Vec<History>| -> Result<(), IoError> {
        if let Some((line, h, events)) = cur {
            let hist =
                History::new(events, h.tau, h.stopped_at).map_err(|e| IoError::Line { line, msg: e.to_string() })?;
            out.push(hist);
        }
        Ok(())
    };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let err = |msg: String| IoError::Line { line, msg };
        let v: Value = serde_json::from_str(raw).map_err(|e| err(e.to_string()))?;
        if v.get("tau").is_some() {
            let h: HeaderRecord = serde_json::from_value(v).map_err(|e| err(e.to_string()))?;
            finish(current.take(), &mut out)?;
            current = Some((line, h, Vec::new()));
        } else {
            let e: EventRecord = serde_json::from_value(v).map_err(|e| err(e.to_string()))?;
            let mark = g.index_of(&e.mark).map_err(|x| err(x.to_string()))?;
            match current.as_mut() {
                Some((_, _, events)) => events.push(Event { time: e.t, mark }),
                None => return Err(err("event record before any header record".into())),
            }
        }
    }
    finish(current, &mut out)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DotOptions {
    pub name: String,
    /// Draw absorbing marks with a double border.
    pub mark_absorbing: bool,
}

impl Default for DotOptions {
    fn default() -> Self {
        DotOptions { name: "G".into(), mark_absorbing: true }
    }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Directed graph in DOT. Mutual edges become one `dir=both` edge.
pub fn export_dot(g: &DynamicGraph, opts: &DotOptions) -> String {
    let mut s = format!("digraph {} {{\n", quote(&opts.name));
    for v in g.vertices().iter() {
        let attr = if opts.mark_absorbing && g.absorbing().contains(v) { " [shape=doublecircle]" } else { "" };
        let _ = writeln!(s, "  {}{attr};", quote(g.label(v)));
    }
    for (j, k) in g.edges() {
        let mutual = g.has_edge(k, j);
        if mutual && k < j {
            continue;
        }
        let attr = if mutual { " [dir=both]" } else { "" };
        let _ = writeln!(s, "  {} -> {}{attr};", quote(g.label(j)), quote(g.label(k)));
    }
    s.push_str("}\n");
    s
}

/// Undirected graph in DOT. Edges present only because of a common child
/// are drawn dotted.
pub fn export_moral_dot(u: &UndirectedGraph, opts: &DotOptions) -> String {
    let mut s = format!("graph {} {{\n", quote(&opts.name));
    for v in u.vertices().iter() {
        let _ = writeln!(s, "  {};", quote(&u.labels()[v]));
    }
    for (j, k) in u.edges() {
        let attr = if u.is_marriage_edge(j, k) { " [style=dotted]" } else { "" };
        let _ = writeln!(s, "  {} -- {}{attr};", quote(&u.labels()[j]), quote(&u.labels()[k]));
    }
    s.push_str("}\n");
    s
}

/// A claim about a fixture graph, evaluated by [`run_fixtures`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Claim {
    /// `c` δ-separates `a` from `b`.
    Separated { a: Vec<String>, b: Vec<String>, c: Vec<String> },
    /// Every `C ⊆ V \ (a ∪ b)` containing `vertex` δ-separates `a` from `b`.
    SeparatedByAnyContaining { a: Vec<String>, b: Vec<String>, vertex: String },
    /// Every `C ⊆ V \ (a ∪ b)` that δ-separates `a` from `b` contains `vertex`.
    EverySeparatorContains { a: Vec<String>, b: Vec<String>, vertex: String },
    /// `a` and `b` are separated by `c` in the moral graph of `An(a ∪ b ∪ c)`.
    AncestralMoralSeparated { a: Vec<String>, b: Vec<String>, c: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Assertion {
    pub claim: Claim,
    pub expected: bool,
    pub note: &'static str,
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub note: &'static str,
    pub graph: DynamicGraph,
    pub model: Option<ModelSpec>,
    pub assertions: Vec<Assertion>,
}

pub const SKIN_DISEASE_GRAPH: &str = include_str!("../fixtures/skin_disease.graph.json");
pub const SKIN_DISEASE_MODEL: &str = include_str!("../fixtures/skin_disease.model.json");
pub const HOME_VISITS_GRAPH: &str = include_str!("../fixtures/home_visits.graph.json");
pub const HOME_VISITS_MODEL: &str = include_str!("../fixtures/home_visits.model.json");
pub const CHEMO_GRAPH: &str = include_str!("../fixtures/chemo.graph.json");
pub const CHEMO_MODEL: &str = include_str!("../fixtures/chemo.model.json");
pub const CHAIN_GRAPH: &str = include_str!("../fixtures/chain.graph.json");
pub const CHAIN_MODEL: &str = include_str!("../fixtures/chain.model.json");

fn v(labels: &[&str]) -> Vec<String> {
    labels.iter().map(|s| s.to_string()).collect()
}

fn sep(a: &[&str], b: &[&str], c: &[&str], expected: bool, note: &'static str) -> Assertion {
    Assertion { claim: Claim::Separated { a: v(a), b: v(b), c: v(c) }, expected, note }
}

/// Skin disease, home visits and the chemotherapy-cycles graph, with the
/// separation claims made about them in prose.
pub fn fixtures() -> Vec<Fixture> {
    let load = |g: &str, m: &str| (parse_graph(g).expect("fixture graph"), parse_model_spec(m).expect("fixture model"));
    let (skin, skin_m) = load(SKIN_DISEASE_GRAPH, SKIN_DISEASE_MODEL);
    let (home, home_m) = load(HOME_VISITS_GRAPH, HOME_VISITS_MODEL);
    let (chemo, chemo_m) = load(CHEMO_GRAPH, CHEMO_MODEL);
    vec![
        Fixture {
            name: "skin-disease",
            note: "menopause raises the rate of the skin disease; the converse does not hold",
            graph: skin,
            model: Some(skin_m),
            assertions: vec![
                sep(&["skin"], &["menopause"], &[], true, "menopause is locally independent of the skin disease"),
                sep(&["menopause"], &["skin"], &[], false, "the skin disease depends on menopause"),
            ],
        },
        Fixture {
            name: "home-visits",
            note: "stopped at death; edges read off the likelihood factorisation \
                   L_vi(vi) L_ho(vi,ho,hs) L_hs(ho,hs) L_d(d,ho,hs)",
            graph: home,
            model: Some(home_m),
            assertions: vec![
                sep(&["ho"], &["vi"], &["hs"], true, "visits independent of hospitalisation given health status"),
                sep(&["hs"], &["vi"], &["ho"], true, "visits independent of health status given hospitalisation"),
                sep(
                    &["vi"],
                    &["d"],
                    &["ho", "hs"],
                    true,
                    "survival independent of visits given hospitalisation and health",
                ),
                sep(&["vi"], &["hs"], &["ho"], true, "health independent of visits given hospitalisation"),
                sep(&["ho", "hs"], &["vi"], &[], true, "visits independent of both hospitalisation and health"),
                sep(&["vi"], &["d"], &["ho"], false, "hospitalisation alone does not separate visits from death"),
            ],
        },
        Fixture {
            name: "chemo",
            note: "reconstructed from prose: tx->ch, ax->ch, ch->tx, tx->ax, ch->tu, tu->ch, tu->su, su->tu, \
                   tu->d, su->d, with d absorbing; tu->ch is needed for tumour size to be part of every \
                   separator of anxiety from death",
            graph: chemo,
            model: Some(chemo_m),
            assertions: vec![
                sep(&["ch"], &["d"], &["tu"], false, "tumour size alone does not separate chemo from death"),
                sep(&["ax"], &["d"], &["su", "tu"], true, "death independent of anxiety given surgery and tumour size"),
                sep(&["ax"], &["d"], &["ch", "tu"], true, "death independent of anxiety given chemo and tumour size"),
                Assertion {
                    claim: Claim::EverySeparatorContains { a: v(&["ax"]), b: v(&["d"]), vertex: "tu".into() },
                    expected: true,
                    note: "tumour size has to be part of the separating set",
                },
                Assertion {
                    claim: Claim::SeparatedByAnyContaining { a: v(&["ax"]), b: v(&["su"]), vertex: "tu".into() },
                    expected: true,
                    note: "anxiety separated from surgery by any set including tumour size",
                },
                Assertion {
                    claim: Claim::SeparatedByAnyContaining { a: v(&["ax"]), b: v(&["tx"]), vertex: "ch".into() },
                    expected: true,
                    note: "anxiety separated from toxic reaction by any set including chemo",
                },
                sep(
                    &["ch", "tu"],
                    &["ax"],
                    &["tx"],
                    true,
                    "anxiety independent of chemo and tumour size given toxicity",
                ),
                sep(&["su"], &["ax"], &["tx"], true, "anxiety independent of surgery given toxic reaction"),
                sep(
                    &["su"],
                    &["ax"],
                    &["ch", "tu"],
                    true,
                    "anxiety independent of surgery given chemo and tumour size",
                ),
                Assertion {
                    claim: Claim::AncestralMoralSeparated { a: v(&["su"]), b: v(&["tx"]), c: v(&["ch", "tu"]) },
                    expected: true,
                    note: "surgery and toxic reaction histories independent given chemo and tumour size",
                },
                sep(
                    &["su"],
                    &["ch"],
                    &["tx", "tu"],
                    true,
                    "chemo intensity measurable given toxic reaction and tumour size",
                ),
            ],
        },
    ]
}

pub fn fixture(name: &str) -> Option<Fixture> {
    fixtures().into_iter().find(|f| f.name == name)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssertionOutcome {
    pub fixture: String,
    pub claim: Claim,
    pub expected: bool,
    pub moral: bool,
    pub trail: bool,
    pub passed: bool,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixtureReport {
    pub outcomes: Vec<AssertionOutcome>,
}

impl FixtureReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn failures(&self) -> usize {
        self.outcomes.iter().filter(|o| !o.passed).count()
    }
}

#[derive(Debug, Error)]
pub enum ClaimError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Separation(#[from] SeparationError),
}

type Method = fn(&DynamicGraph, Query) -> Result<bool, SeparationError>;

/// Evaluates a claim with one δ-separation routine.
pub fn evaluate_claim(
    g: &DynamicGraph,
    claim: &Claim,
    method: fn(&DynamicGraph, Query) -> Result<bool, SeparationError>,
) -> Result<bool, ClaimError> {
    let rest = |a: VertexSet, b: VertexSet| g.vertices() - (a | b);
    Ok(match claim {
        Claim::Separated { a, b, c } => method(g, Query::from_labels(g, a, b, c)?)?,
        Claim::SeparatedByAnyContaining { a, b, vertex } => {
            let (a, b, x) = (g.set_of(a)?, g.set_of(b)?, g.index_of(vertex)?);
            let mut all = true;
            for c in rest(a, b).subsets().filter(|c| c.contains(x)) {
                all &= method(g, Query::new(a, b, c))?;
            }
            all
        }
        Claim::EverySeparatorContains { a, b, vertex } => {
            let (a, b, x) = (g.set_of(a)?, g.set_of(b)?, g.index_of(vertex)?);
            let mut all = true;
            for c in rest(a, b).subsets().filter(|c| !c.contains(x)) {
                all &= !method(g, Query::new(a, b, c))?;
            }
            all
        }
        Claim::AncestralMoralSeparated { a, b, c } => {
            ancestral_moral_separated(g, g.set_of(a)?, g.set_of(b)?, g.set_of(c)?)?
        }
    })
}

/// Evaluates every fixture claim with both δ-separation routines.
pub fn run_fixtures(fixtures: &[Fixture]) -> Result<FixtureReport, ClaimError> {
    let mut outcomes = Vec::new();
    for f in fixtures {
        for a in &f.assertions {
            let moral = evaluate_claim(&f.graph, &a.claim, delta_separated_moral as Method)?;
            let trail = evaluate_claim(&f.graph, &a.claim, delta_separated_trail as Method)?;
            outcomes.push(AssertionOutcome {
                fixture: f.name.to_string(),
                claim: a.claim.clone(),
                expected: a.expected,
                moral,
                trail,
                passed: moral == a.expected && trail == a.expected,
                note: a.note.to_string(),
            });
        }
    }
    Ok(FixtureReport { outcomes })
}

/// Labels of every vertex mentioned by a claim.
pub fn claim_labels(claim: &Claim) -> BTreeSet<&str> {
    let (sets, extra): ([&[String]; 3], Option<&String>) = match claim {
        Claim::Separated { a, b, c } | Claim::AncestralMoralSeparated { a, b, c } => ([a, b, c], None),
        Claim::SeparatedByAnyContaining { a, b, vertex } | Claim::EverySeparatorContains { a, b, vertex } => {
            ([a, b, &[]], Some(vertex))
        }
    };
    sets.iter().flat_map(|s| s.iter()).chain(extra).map(String::as_str).collect()
}
