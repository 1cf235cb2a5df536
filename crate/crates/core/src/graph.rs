//! Directed local independence graphs over a finite mark space and the
//! structural operations used by every query: parents, closures, ancestral
//! sets, induced subgraphs, out-edge deletion, moralization and plain
//! separation in undirected graphs.
//!
//! Vertices carry dense indices in `[0, K)` with `K <= 64`, so vertex sets are
//! single-word bitsets. Subgraphs keep the index space of the graph they came
//! from; a vertex that is not part of a subgraph simply has its bit cleared in
//! [`DynamicGraph::vertices`].

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Largest supported number of marks.
pub const MAX_VERTICES: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("graph has {0} vertices, at most {MAX_VERTICES} are supported")]
    TooManyVertices(usize),
    #[error("duplicate vertex label `{0}`")]
    DuplicateLabel(String),
    #[error("unknown vertex label `{0}`")]
    UnknownLabel(String),
    #[error("self-loop on `{0}` is not allowed")]
    SelfLoop(String),
    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(String, String),
    #[error("vertex set {0:?} is not contained in the graph's vertices")]
    NotSubset(VertexSet),
}

/// Identifier of a mark: its label and dense index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MarkId {
    pub index: usize,
    pub label: String,
}

impl fmt::Display for MarkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

/// Subset of the vertices of a graph, as a 64-bit mask.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexSet(pub u64);

impl VertexSet {
    pub const EMPTY: VertexSet = VertexSet(0);

    pub fn singleton(v: usize) -> Self {
        debug_assert!(v < MAX_VERTICES);
        VertexSet(1u64 << v)
    }

    /// The set `{0, .., n-1}`.
    pub fn full(n: usize) -> Self {
        if n >= 64 {
            VertexSet(u64::MAX)
        } else {
            VertexSet((1u64 << n) - 1)
        }
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(it: I) -> Self {
        it.into_iter().fold(Self::EMPTY, |s, v| s.with(v))
    }

    #[inline]
    pub fn bits(self) -> u64 {
        self.0
    }
    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
    #[inline]
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }
    #[inline]
    pub fn contains(self, v: usize) -> bool {
        v < 64 && self.0 >> v & 1 == 1
    }
    #[inline]
    pub fn with(self, v: usize) -> Self {
        VertexSet(self.0 | 1u64 << v)
    }
    #[inline]
    pub fn without(self, v: usize) -> Self {
        VertexSet(self.0 & !(1u64 << v))
    }
    #[inline]
    pub fn union(self, o: Self) -> Self {
        VertexSet(self.0 | o.0)
    }
    #[inline]
    pub fn intersection(self, o: Self) -> Self {
        VertexSet(self.0 & o.0)
    }
    #[inline]
    pub fn difference(self, o: Self) -> Self {
        VertexSet(self.0 & !o.0)
    }
    #[inline]
    pub fn is_subset(self, o: Self) -> bool {
        self.0 & !o.0 == 0
    }
    #[inline]
    pub fn is_disjoint(self, o: Self) -> bool {
        self.0 & o.0 == 0
    }

    /// Indices in increasing order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let v = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(v)
            }
        })
    }

    /// All subsets of `self`, starting with the empty set, in increasing bit
    /// pattern order.
    pub fn subsets(self) -> impl Iterator<Item = VertexSet> {
        let mask = self.0;
        let mut next = Some(0u64);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == mask { None } else { Some((cur.wrapping_sub(mask)) & mask) };
            Some(VertexSet(cur))
        })
    }
}

impl fmt::Debug for VertexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl std::ops::BitOr for VertexSet {
    type Output = VertexSet;
    fn bitor(self, rhs: Self) -> Self {
        self.union(rhs)
    }
}

impl std::ops::BitAnd for VertexSet {
    type Output = VertexSet;
    fn bitand(self, rhs: Self) -> Self {
        self.intersection(rhs)
    }
}

impl std::ops::Sub for VertexSet {
    type Output = VertexSet;
    fn sub(self, rhs: Self) -> Self {
        self.difference(rhs)
    }
}

impl FromIterator<usize> for VertexSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Self::from_indices(iter)
    }
}

/// Directed graph over marks. Cycles and mutual edges are allowed, self-loops
/// are not. `absorbing` holds marks whose first occurrence stops the process.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DynamicGraph {
    labels: Vec<String>,
    vertices: VertexSet,
    // parents[k]: bitmask of j with (j,k) in E
    parents: Vec<u64>,
    // children[j]: bitmask of k with (j,k) in E
    children: Vec<u64>,
    absorbing: VertexSet,
}

impl DynamicGraph {
    /// Edgeless graph on the given labels.
    pub fn new<S: AsRef<str>>(labels: &[S]) -> Result<Self, GraphError> {
        if labels.len() > MAX_VERTICES {
            return Err(GraphError::TooManyVertices(labels.len()));
        }
        let mut seen = HashMap::new();
        for (i, l) in labels.iter().enumerate() {
            if seen.insert(l.as_ref(), i).is_some() {
                return Err(GraphError::DuplicateLabel(l.as_ref().to_string()));
            }
        }
        let n = labels.len();
        Ok(DynamicGraph {
            labels: labels.iter().map(|l| l.as_ref().to_string()).collect(),
            vertices: VertexSet::full(n),
            parents: vec![0; n],
            children: vec![0; n],
            absorbing: VertexSet::EMPTY,
        })
    }

    /// Builds a graph from labels and labelled edges; duplicate edges are rejected.
    pub fn from_edges<S: AsRef<str>>(labels: &[S], edges: &[(S, S)]) -> Result<Self, GraphError> {
        let mut g = Self::new(labels)?;
        for (from, to) in edges {
            let j = g.index_of(from.as_ref())?;
            let k = g.index_of(to.as_ref())?;
            g.add_edge(j, k)?;
        }
        Ok(g)
    }

    /// Graph on `n` vertices labelled `0..n` from a bit pattern over the
    /// `n(n-1)` ordered pairs `(j, k)`, `j != k`, in lexicographic order.
    /// Codes `0..2^(n(n-1))` enumerate every directed graph on `n` labelled
    /// vertices exactly once.
    pub fn from_edge_code(n: usize, code: u64) -> Self {
        let labels: Vec<String> = (0..n).map(|i| i.to_string()).collect();
        let mut g = Self::new(&labels).expect("n within bounds");
        let mut bit = 0;
        for j in 0..n {
            for k in 0..n {
                if j == k {
                    continue;
                }
                if code >> bit & 1 == 1 {
                    g.parents[k] |= 1 << j;
                    g.children[j] |= 1 << k;
                }
                bit += 1;
            }
        }
        g
    }

    pub fn add_edge(&mut self, j: usize, k: usize) -> Result<(), GraphError> {
        self.check_vertex(j)?;
        self.check_vertex(k)?;
        if j == k {
            return Err(GraphError::SelfLoop(self.labels[j].clone()));
        }
        if self.has_edge(j, k) {
            return Err(GraphError::DuplicateEdge(self.labels[j].clone(), self.labels[k].clone()));
        }
        self.parents[k] |= 1 << j;
        self.children[j] |= 1 << k;
        Ok(())
    }

    pub fn set_absorbing(&mut self, set: VertexSet) -> Result<(), GraphError> {
        self.check_subset(set)?;
        self.absorbing = set;
        Ok(())
    }

    fn check_vertex(&self, v: usize) -> Result<(), GraphError> {
        if self.vertices.contains(v) {
            Ok(())
        } else {
            Err(GraphError::NotSubset(VertexSet::singleton(v.min(63))))
        }
    }

    pub fn check_subset(&self, a: VertexSet) -> Result<(), GraphError> {
        if a.is_subset(self.vertices) {
            Ok(())
        } else {
            Err(GraphError::NotSubset(a))
        }
    }

    /// Size of the index space (number of labels).
    pub fn universe_len(&self) -> usize {
        self.labels.len()
    }

    pub fn vertices(&self) -> VertexSet {
        self.vertices
    }

    pub fn absorbing(&self) -> VertexSet {
        self.absorbing
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, v: usize) -> &str {
        &self.labels[v]
    }

    pub fn mark(&self, v: usize) -> MarkId {
        MarkId { index: v, label: self.labels[v].clone() }
    }

    pub fn index_of(&self, label: &str) -> Result<usize, GraphError> {
        self.labels
            .iter()
            .position(|l| l == label)
            .filter(|&i| self.vertices.contains(i))
            .ok_or_else(|| GraphError::UnknownLabel(label.to_string()))
    }

    /// Resolves a list of labels into a vertex set.
    pub fn set_of<S: AsRef<str>>(&self, labels: &[S]) -> Result<VertexSet, GraphError> {
        labels.iter().map(|l| self.index_of(l.as_ref())).collect::<Result<VertexSet, _>>()
    }

    pub fn set_labels(&self, a: VertexSet) -> Vec<String> {
        a.iter().map(|v| self.labels[v].clone()).collect()
    }

    #[inline]
    pub fn has_edge(&self, j: usize, k: usize) -> bool {
        self.children[j] >> k & 1 == 1
    }

    /// Edges `(j, k)` in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for j in self.vertices.iter() {
            for k in VertexSet(self.children[j]).iter() {
                out.push((j, k));
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.vertices.iter().map(|j| self.children[j].count_ones() as usize).sum()
    }

    #[inline]
    pub(crate) fn parent_bits(&self, k: usize) -> u64 {
        self.parents[k]
    }

    #[inline]
    pub(crate) fn child_bits(&self, j: usize) -> u64 {
        self.children[j]
    }

    /// `pa(A)`: vertices outside `A` with an edge into `A`.
    pub fn parents(&self, a: VertexSet) -> Result<VertexSet, GraphError> {
        self.check_subset(a)?;
        Ok(self.parents_unchecked(a))
    }

    pub(crate) fn parents_unchecked(&self, a: VertexSet) -> VertexSet {
        let bits = a.iter().fold(0u64, |acc, k| acc | self.parents[k]);
        VertexSet(bits) - a
    }

    /// `ch(A)`: vertices outside `A` with an edge out of `A`.
    pub fn children(&self, a: VertexSet) -> Result<VertexSet, GraphError> {
        self.check_subset(a)?;
        Ok(self.children_unchecked(a))
    }

    pub(crate) fn children_unchecked(&self, a: VertexSet) -> VertexSet {
        let bits = a.iter().fold(0u64, |acc, j| acc | self.children[j]);
        VertexSet(bits) - a
    }

    /// `cl(A) = pa(A) ∪ A`.
    pub fn closure(&self, a: VertexSet) -> Result<VertexSet, GraphError> {
        Ok(self.parents(a)? | a)
    }

    /// `an(A)`: vertices with a directed path into `A`, excluding `A`.
    pub fn ancestors(&self, a: VertexSet) -> Result<VertexSet, GraphError> {
        self.check_subset(a)?;
        Ok(self.reach(a, &self.parents) - a)
    }

    /// `de(A)`: vertices reachable by a directed path out of `A`, excluding `A`.
    pub fn descendants(&self, a: VertexSet) -> Result<VertexSet, GraphError> {
        self.check_subset(a)?;
        Ok(self.reach(a, &self.children) - a)
    }

    /// `nd(A) = V \ (de(A) ∪ A)`.
    pub fn nondescendants(&self, a: VertexSet) -> Result<VertexSet, GraphError> {
        Ok(self.vertices - (self.descendants(a)? | a))
    }

    /// `An(A) = A ∪ an(A)`, the smallest ancestral set containing `A`.
    pub fn ancestral_closure(&self, a: VertexSet) -> Result<VertexSet, GraphError> {
        self.check_subset(a)?;
        Ok(self.reach(a, &self.parents))
    }

    pub(crate) fn ancestral_closure_unchecked(&self, a: VertexSet) -> VertexSet {
        self.reach(a, &self.parents)
    }

    // Closure of `start` under the neighbour relation `adj`, including `start`.
    fn reach(&self, start: VertexSet, adj: &[u64]) -> VertexSet {
        let mut seen = start.0;
        let mut frontier = start.0;
        while frontier != 0 {
            let mut next = 0u64;
            let mut f = frontier;
            while f != 0 {
                let v = f.trailing_zeros() as usize;
                f &= f - 1;
                next |= adj[v];
            }
            next &= !seen;
            seen |= next;
            frontier = next;
        }
        VertexSet(seen)
    }

    /// `G_A`: keeps only vertices in `A` and edges between them.
    pub fn induced_subgraph(&self, a: VertexSet) -> Result<DynamicGraph, GraphError> {
        self.check_subset(a)?;
        Ok(self.induced_unchecked(a))
    }

    pub(crate) fn induced_unchecked(&self, a: VertexSet) -> DynamicGraph {
        let n = self.labels.len();
        let mut parents = vec![0u64; n];
        let mut children = vec![0u64; n];
        for v in a.iter() {
            parents[v] = self.parents[v] & a.0;
            children[v] = self.children[v] & a.0;
        }
        DynamicGraph { labels: self.labels.clone(), vertices: a, parents, children, absorbing: self.absorbing & a }
    }

    /// `G^B`: removes every edge starting in `B`; the vertex set is unchanged.
    pub fn delete_out_edges(&self, b: VertexSet) -> Result<DynamicGraph, GraphError> {
        self.check_subset(b)?;
        Ok(self.delete_out_unchecked(b))
    }

    pub(crate) fn delete_out_unchecked(&self, b: VertexSet) -> DynamicGraph {
        let mut g = self.clone();
        for j in b.iter() {
            g.children[j] = 0;
        }
        for k in g.vertices.iter() {
            g.parents[k] &= !b.0;
        }
        g
    }

    /// Moral graph: skeleton plus marriage edges between every two parents of
    /// a common child. Mutual edges collapse into one undirected edge.
    pub fn moralize(&self) -> UndirectedGraph {
        let n = self.labels.len();
        let mut adj = vec![0u64; n];
        let mut married = vec![0u64; n];
        for k in self.vertices.iter() {
            let pa = self.parents[k];
            for j in VertexSet(pa).iter() {
                adj[j] |= 1 << k;
                adj[k] |= 1 << j;
                married[j] |= pa & !(1 << j);
            }
        }
        // Skeleton edges take precedence over the marriage flag.
        for j in 0..n {
            married[j] &= !adj[j];
            adj[j] |= married[j];
        }
        UndirectedGraph { labels: self.labels.clone(), vertices: self.vertices, adj, married }
    }
}

/// Undirected graph, typically the result of [`DynamicGraph::moralize`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UndirectedGraph {
    labels: Vec<String>,
    vertices: VertexSet,
    adj: Vec<u64>,
    // marriage edges that are not also skeleton edges
    married: Vec<u64>,
}

impl UndirectedGraph {
    pub fn new<S: AsRef<str>>(labels: &[S]) -> Result<Self, GraphError> {
        let g = DynamicGraph::new(labels)?;
        let n = g.labels.len();
        Ok(UndirectedGraph { labels: g.labels, vertices: g.vertices, adj: vec![0; n], married: vec![0; n] })
    }

    pub fn add_edge(&mut self, j: usize, k: usize) -> Result<(), GraphError> {
        if !self.vertices.contains(j) || !self.vertices.contains(k) {
            return Err(GraphError::NotSubset(VertexSet::from_indices([j.min(63), k.min(63)])));
        }
        if j == k {
            return Err(GraphError::SelfLoop(self.labels[j].clone()));
        }
        self.adj[j] |= 1 << k;
        self.adj[k] |= 1 << j;
        Ok(())
    }

    pub fn vertices(&self) -> VertexSet {
        self.vertices
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn has_edge(&self, j: usize, k: usize) -> bool {
        self.adj[j] >> k & 1 == 1
    }

    /// True if `{j,k}` was added only because `j` and `k` share a child.
    pub fn is_marriage_edge(&self, j: usize, k: usize) -> bool {
        self.married[j] >> k & 1 == 1
    }

    pub fn neighbors(&self, v: usize) -> VertexSet {
        VertexSet(self.adj[v])
    }

    /// Edges `{j,k}` with `j < k`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for j in self.vertices.iter() {
            for k in VertexSet(self.adj[j]).iter().filter(|&k| k > j) {
                out.push((j, k));
            }
        }
        out
    }

    /// `C` separates `A` from `B`: no path from `A \ C` to `B \ C` avoiding `C`.
    pub fn u_separated(&self, a: VertexSet, b: VertexSet, c: VertexSet) -> Result<bool, GraphError> {
        for s in [a, b, c] {
            if !s.is_subset(self.vertices) {
                return Err(GraphError::NotSubset(s));
            }
        }
        Ok(self.u_separated_unchecked(a, b, c))
    }

    pub(crate) fn u_separated_unchecked(&self, a: VertexSet, b: VertexSet, c: VertexSet) -> bool {
        let start = (a - c).0;
        let target = (b - c).0;
        if start == 0 || target == 0 {
            return true;
        }
        let allowed = self.vertices.0 & !c.0;
        let mut seen = start;
        let mut frontier = start;
        while frontier != 0 {
            if seen & target != 0 {
                return false;
            }
            let mut next = 0u64;
            let mut f = frontier;
            while f != 0 {
                let v = f.trailing_zeros() as usize;
                f &= f - 1;
                next |= self.adj[v];
            }
            next &= allowed & !seen;
            seen |= next;
            frontier = next;
        }
        seen & target == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn home_visits() -> DynamicGraph {
        let mut g = DynamicGraph::from_edges(
            &["vi", "ho", "hs", "d"],
            &[("vi", "ho"), ("hs", "ho"), ("ho", "hs"), ("ho", "d"), ("hs", "d")],
        )
        .unwrap();
        g.set_absorbing(g.set_of(&["d"]).unwrap()).unwrap();
        g
    }

    fn chemo() -> DynamicGraph {
        DynamicGraph::from_edges(
            &["ch", "tx", "ax", "tu", "su", "d"],
            &[
                ("tx", "ch"),
                ("ax", "ch"),
                ("ch", "tx"),
                ("tx", "ax"),
                ("ch", "tu"),
                ("tu", "ch"),
                ("tu", "su"),
                ("su", "tu"),
                ("tu", "d"),
                ("su", "d"),
            ],
        )
        .unwrap()
    }

    fn s(g: &DynamicGraph, l: &[&str]) -> VertexSet {
        g.set_of(l).unwrap()
    }

    #[test]
    fn parents_and_children() {
        let g = home_visits();
        assert_eq!(g.parents(s(&g, &["d"])).unwrap(), s(&g, &["ho", "hs"]));
        assert_eq!(g.parents(VertexSet::EMPTY).unwrap(), VertexSet::EMPTY);
        assert_eq!(g.children(s(&g, &["vi"])).unwrap(), s(&g, &["ho"]));
        assert_eq!(g.children(g.vertices()).unwrap(), VertexSet::EMPTY);

        let skin = DynamicGraph::from_edges(&["menopause", "skin"], &[("menopause", "skin")]).unwrap();
        assert_eq!(skin.parents(s(&skin, &["menopause"])).unwrap(), VertexSet::EMPTY);

        let c = chemo();
        assert_eq!(c.children(s(&c, &["tu"])).unwrap(), s(&c, &["ch", "su", "d"]));
    }

    #[test]
    fn closure_examples() {
        let g = home_visits();
        assert_eq!(g.closure(s(&g, &["hs"])).unwrap(), s(&g, &["ho", "hs"]));
        assert_eq!(g.closure(VertexSet::EMPTY).unwrap(), VertexSet::EMPTY);
        assert_eq!(g.closure(g.vertices()).unwrap(), g.vertices());
    }

    #[test]
    fn ancestry() {
        let g = home_visits();
        assert_eq!(g.ancestors(s(&g, &["d"])).unwrap(), s(&g, &["vi", "ho", "hs"]));
        assert_eq!(g.descendants(VertexSet::EMPTY).unwrap(), VertexSet::EMPTY);
        assert_eq!(g.ancestral_closure(s(&g, &["d"])).unwrap(), g.vertices());
        assert_eq!(g.ancestral_closure(s(&g, &["vi"])).unwrap(), s(&g, &["vi"]));
        assert_eq!(g.nondescendants(s(&g, &["hs"])).unwrap(), s(&g, &["vi"]));

        let cyc = DynamicGraph::from_edges(&["a", "b"], &[("a", "b"), ("b", "a")]).unwrap();
        assert_eq!(cyc.ancestors(s(&cyc, &["a"])).unwrap(), s(&cyc, &["b"]));

        let c = chemo();
        assert_eq!(c.ancestral_closure(s(&c, &["ax", "su", "tu"])).unwrap(), s(&c, &["ax", "su", "tu", "ch", "tx"]));
    }

    #[test]
    fn subgraph_operations() {
        let g = home_visits();
        assert_eq!(g.induced_subgraph(g.vertices()).unwrap(), g);
        let sub = g.induced_subgraph(s(&g, &["vi", "d"])).unwrap();
        assert_eq!(sub.vertices().len(), 2);
        assert_eq!(sub.edge_count(), 0);
        let empty = g.induced_subgraph(VertexSet::EMPTY).unwrap();
        assert!(empty.vertices().is_empty());
        assert_eq!(empty.edge_count(), 0);

        assert_eq!(g.delete_out_edges(VertexSet::EMPTY).unwrap(), g);
        let gb = g.delete_out_edges(s(&g, &["ho"])).unwrap();
        let (vi, ho, hs, d) = (0, 1, 2, 3);
        assert_eq!(gb.edges(), vec![(vi, ho), (hs, ho), (hs, d)]);
        assert_eq!(g.delete_out_edges(g.vertices()).unwrap().edge_count(), 0);
    }

    #[test]
    fn moralization() {
        let g = home_visits();
        let m = g.moralize();
        let name = |(j, k): (usize, usize)| format!("{}-{}", g.label(j), g.label(k));
        let edges: Vec<String> = m.edges().into_iter().map(name).collect();
        assert_eq!(edges, vec!["vi-ho", "vi-hs", "ho-hs", "ho-d", "hs-d"]);
        assert!(m.is_marriage_edge(0, 2));
        assert!(!m.is_marriage_edge(1, 2));

        let empty = DynamicGraph::new(&["x", "y"]).unwrap().moralize();
        assert!(empty.edges().is_empty());

        let cyc = DynamicGraph::from_edges(&["a", "b"], &[("a", "b"), ("b", "a")]).unwrap();
        assert_eq!(cyc.moralize().edges(), vec![(0, 1)]);
    }

    #[test]
    fn plain_separation() {
        let g = home_visits();
        let m = g.moralize();
        assert!(!m.u_separated(s(&g, &["vi"]), s(&g, &["d"]), s(&g, &["ho"])).unwrap());
        assert!(m.u_separated(s(&g, &["vi"]), s(&g, &["d"]), s(&g, &["ho", "hs"])).unwrap());

        let mut complete = UndirectedGraph::new(&["a", "b", "c", "d"]).unwrap();
        for j in 0..4 {
            for k in j + 1..4 {
                complete.add_edge(j, k).unwrap();
            }
        }
        let (a, b) = (VertexSet::singleton(0), VertexSet::singleton(3));
        let rest = VertexSet::full(4) - (a | b);
        // a and b adjacent: removing the others cannot separate them
        assert!(!complete.u_separated(a, b, rest).unwrap());
        let mut almost = UndirectedGraph::new(&["a", "b", "c", "d"]).unwrap();
        for (j, k) in [(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)] {
            almost.add_edge(j, k).unwrap();
        }
        assert!(almost.u_separated(a, b, rest).unwrap());
        assert!(!almost.u_separated(a, b, VertexSet::EMPTY).unwrap());
        assert!(almost.u_separated(VertexSet::EMPTY, b, VertexSet::EMPTY).unwrap());
    }

    #[test]
    fn domain_errors() {
        let g = home_visits();
        assert!(matches!(g.parents(VertexSet::singleton(9)), Err(GraphError::NotSubset(_))));
        assert!(matches!(g.index_of("zz"), Err(GraphError::UnknownLabel(_))));
        assert!(matches!(
            DynamicGraph::from_edges(&["a", "b"], &[("a", "b"), ("a", "b")]),
            Err(GraphError::DuplicateEdge(..))
        ));
        assert!(matches!(DynamicGraph::from_edges(&["a"], &[("a", "a")]), Err(GraphError::SelfLoop(_))));
        let many: Vec<String> = (0..65).map(|i| format!("m{i}")).collect();
        assert!(matches!(DynamicGraph::new(&many), Err(GraphError::TooManyVertices(65))));
    }

    #[test]
    fn subset_enumeration() {
        let s = VertexSet::from_indices([1, 3, 4]);
        let subs: Vec<_> = s.subsets().collect();
        assert_eq!(subs.len(), 8);
        assert!(subs.iter().all(|x| x.is_subset(s)));
        assert_eq!(subs[0], VertexSet::EMPTY);
        assert_eq!(*subs.last().unwrap(), s);
    }
}
