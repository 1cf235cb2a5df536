//! Pairwise, local and global dynamic Markov statements of a graph, and the
//! graphical side conditions under which right decomposition may be applied.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{DynamicGraph, GraphError, VertexSet};
use crate::separation::{delta_separated_moral, Query, SeparationError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MarkovError {
    #[error(transparent)]
    Separation(#[from] SeparationError),
    #[error("right decomposition requires {0}")]
    Precondition(&'static str),
}

impl From<GraphError> for MarkovError {
    fn from(e: GraphError) -> Self {
        MarkovError::Separation(e.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Pairwise,
    Local,
    Global,
}

/// "`A ↛ B | C`": the intensities of `B` given the past of `A ∪ B ∪ C` depend
/// only on the past of `B ∪ C`. Stored with `A \ C` as source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LocalIndependenceStatement {
    pub a: VertexSet,
    pub b: VertexSet,
    pub c: VertexSet,
    pub provenance: Provenance,
}

impl LocalIndependenceStatement {
    pub fn new(a: VertexSet, b: VertexSet, c: VertexSet, provenance: Provenance) -> Self {
        LocalIndependenceStatement { a: a - c, b, c, provenance }
    }

    pub fn query(&self) -> Query {
        Query::new(self.a, self.b, self.c)
    }

    fn sort_key(&self) -> (u64, u64, u64) {
        (self.b.bits(), self.a.bits(), self.c.bits())
    }

    /// Label form used by the JSON Lines output.
    pub fn to_record(&self, g: &DynamicGraph) -> StatementRecord {
        StatementRecord {
            a: g.set_labels(self.a),
            b: g.set_labels(self.b),
            c: g.set_labels(self.c),
            provenance: self.provenance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatementRecord {
    pub a: Vec<String>,
    pub b: Vec<String>,
    pub c: Vec<String>,
    pub provenance: Provenance,
}

fn sorted(mut v: Vec<LocalIndependenceStatement>) -> Vec<LocalIndependenceStatement> {
    v.sort_by_key(|s| s.sort_key());
    v.dedup();
    v
}

/// `{j} ↛ {k} | V \ {j, k}` for every ordered non-edge `(j, k)`.
pub fn pairwise_statements(g: &DynamicGraph) -> Vec<LocalIndependenceStatement> {
    let v = g.vertices();
    let mut out = Vec::new();
    for j in v.iter() {
        for k in v.iter() {
            if j != k && !g.has_edge(j, k) {
                let (a, b) = (VertexSet::singleton(j), VertexSet::singleton(k));
                out.push(LocalIndependenceStatement::new(a, b, v - (a | b), Provenance::Pairwise));
            }
        }
    }
    sorted(out)
}

/// `V \ cl(k) ↛ {k} | pa(k)` for every `k` with a nonempty source set.
pub fn local_statements(g: &DynamicGraph) -> Vec<LocalIndependenceStatement> {
    let v = g.vertices();
    let out = v
        .iter()
        .filter_map(|k| {
            let b = VertexSet::singleton(k);
            let pa = g.parents(b).expect("vertex of g");
            let rest = v - (pa | b);
            (!rest.is_empty()).then(|| LocalIndependenceStatement::new(rest, b, pa, Provenance::Local))
        })
        .collect();
    sorted(out)
}

/// Whether the global dynamic Markov property yields `q.a ↛ q.b | q.c`.
pub fn implied(g: &DynamicGraph, q: Query) -> Result<bool, MarkovError> {
    Ok(delta_separated_moral(g, q)?)
}

/// The statement `q` read off through δ-separation, if it holds.
pub fn implied_statement(g: &DynamicGraph, q: Query) -> Result<Option<LocalIndependenceStatement>, MarkovError> {
    Ok(implied(g, q)?.then(|| LocalIndependenceStatement::new(q.a, q.b, q.c, Provenance::Global)))
}

/// Graphical side conditions for concluding `A ↛ D | C` from `A ↛ B | C`
/// with `D ⊆ B`:
///
/// * `B ↛ A \ (C ∪ D) | C ∪ D`, and
/// * for every `k ∈ C \ D`: `A ↛ {k} | C ∪ B` or `B ↛ {k} | C ∪ D ∪ A`,
///
/// each read as δ-separation. The hypothesis itself is not checked.
pub fn right_decomposition_applicable(
    g: &DynamicGraph,
    a: VertexSet,
    b: VertexSet,
    c: VertexSet,
    d: VertexSet,
) -> Result<bool, MarkovError> {
    for s in [a, b, c, d] {
        g.check_subset(s)?;
    }
    if !d.is_subset(b) {
        return Err(MarkovError::Precondition("D ⊆ B"));
    }
    if !((b & a) - (c | d)).is_empty() {
        return Err(MarkovError::Precondition("(B ∩ A) \\ (C ∪ D) = ∅"));
    }
    let cd = c | d;
    if !delta_separated_moral(g, Query::new(b, a - cd, cd))? {
        return Ok(false);
    }
    for k in (c - d).iter() {
        let kk = VertexSet::singleton(k);
        let ok =
            delta_separated_moral(g, Query::new(a, kk, c | b))? || delta_separated_moral(g, Query::new(b, kk, cd | a))?;
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}
