//! δ-separation in local independence graphs.
//!
//! Two independent routes answer the same question:
//!
//! * [`delta_separated_moral`] builds the moral graph of the ancestral
//!   subgraph after deleting the edges leaving `B` and checks plain
//!   separation;
//! * [`delta_separated_trail`] searches for an allowed trail from `A` to `B`
//!   that is active given `C`, using reachability over (vertex, direction)
//!   states.
//!
//! Overlapping sets are reduced before either route runs: `(A, B, C)` becomes
//! `(A \ (B ∪ C), B, C \ B)`, and an empty source set is always separated.
//!
//! Both routes restrict attention to `S = An(A ∪ B ∪ C)`. For the trail route
//! this is exact: an active trail that leaves `S` must contain a collider
//! outside `S` (following it away from `S` only moves to children), and an open
//! collider has a descendant in `C`, so it would lie in `An(C) ⊆ S`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{DynamicGraph, GraphError, VertexSet};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SeparationError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("exhaustive separator search supports at most {max} candidate vertices, got {got}")]
    TooManyCandidates { max: usize, got: usize },
}

/// Candidate statement "`B` is locally independent of `A` given `C`".
/// Direction matters: `Query::new(a, b, c)` is not `Query::new(b, a, c)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Query {
    pub a: VertexSet,
    pub b: VertexSet,
    pub c: VertexSet,
}

impl Query {
    pub fn new(a: VertexSet, b: VertexSet, c: VertexSet) -> Self {
        Query { a, b, c }
    }

    pub fn from_labels<S: AsRef<str>>(g: &DynamicGraph, a: &[S], b: &[S], c: &[S]) -> Result<Self, GraphError> {
        Ok(Query { a: g.set_of(a)?, b: g.set_of(b)?, c: g.set_of(c)? })
    }

    /// `(A \ (B ∪ C), B, C \ B)`.
    pub fn normalized(self) -> Query {
        Query { a: self.a - (self.b | self.c), b: self.b, c: self.c - self.b }
    }

    fn check(&self, g: &DynamicGraph) -> Result<(), GraphError> {
        g.check_subset(self.a)?;
        g.check_subset(self.b)?;
        g.check_subset(self.c)
    }
}

/// δ-separation through the moral graph of `(G_S)^B` with `S = An(A ∪ B ∪ C)`.
pub fn delta_separated_moral(g: &DynamicGraph, q: Query) -> Result<bool, SeparationError> {
    q.check(g)?;
    Ok(moral_unchecked(g, q.normalized()))
}

// Fused version of induce -> delete out-edges of B -> moralize -> separate,
// without allocating intermediate graphs. The tests pin it to the explicit
// composition of the graph operations.
pub(crate) fn moral_unchecked(g: &DynamicGraph, q: Query) -> bool {
    let Query { a, b, c } = q;
    if a.is_empty() || b.is_empty() {
        return true;
    }
    let s = g.ancestral_closure_unchecked(a | b | c);
    let mut adj = [0u64; 64];
    for k in s.iter() {
        let pa = g.parent_bits(k) & s.bits() & !b.bits();
        adj[k] |= pa;
        let mut p = pa;
        while p != 0 {
            let j = p.trailing_zeros() as usize;
            p &= p - 1;
            adj[j] |= (1u64 << k) | (pa & !(1u64 << j));
        }
    }
    let allowed = s.bits() & !c.bits();
    let target = b.bits() & !c.bits();
    let mut seen = a.bits();
    let mut frontier = seen;
    while frontier != 0 {
        if seen & target != 0 {
            return false;
        }
        let mut next = 0u64;
        let mut f = frontier;
        while f != 0 {
            let v = f.trailing_zeros() as usize;
            f &= f - 1;
            next |= adj[v];
        }
        next &= allowed & !seen;
        seen |= next;
        frontier = next;
    }
    seen & target == 0
}

/// δ-separation through the trail condition: every allowed trail from `A` to
/// `B` is blocked by `C`.
pub fn delta_separated_trail(g: &DynamicGraph, q: Query) -> Result<bool, SeparationError> {
    q.check(g)?;
    Ok(trail_unchecked(g, q.normalized()))
}

// Direction in which a vertex was entered during the trail search.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Entry {
    // via an edge pointing away from the vertex (moved from a child to its parent)
    FromChild,
    // via an edge pointing into the vertex
    FromParent,
}

pub(crate) fn trail_unchecked(g: &DynamicGraph, q: Query) -> bool {
    let Query { a, b, c } = q;
    if a.is_empty() || b.is_empty() {
        return true;
    }
    let s = g.ancestral_closure_unchecked(a | b | c).bits();
    let open_collider = g.ancestral_closure_unchecked(c).bits();
    let b_bits = b.bits();
    let c_bits = c.bits();

    // vertices already entered from a child / from a parent
    let mut up = 0u64;
    let mut down = 0u64;
    let mut stack: Vec<(usize, Entry)> = Vec::with_capacity(2 * 64);
    for v in a.iter() {
        up |= 1 << v;
        stack.push((v, Entry::FromChild));
    }
    while let Some((v, entry)) = stack.pop() {
        let in_c = c_bits >> v & 1 == 1;
        let mut to_parents = 0u64;
        let mut to_children = 0u64;
        match entry {
            Entry::FromChild => {
                if !in_c {
                    to_parents = g.parent_bits(v);
                    to_children = g.child_bits(v);
                }
            }
            Entry::FromParent => {
                if !in_c {
                    to_children = g.child_bits(v);
                }
                if open_collider >> v & 1 == 1 {
                    to_parents = g.parent_bits(v);
                }
            }
        }
        // Entering a B vertex from its child would use an edge leaving B.
        to_parents &= s & !b_bits;
        to_children &= s;
        if to_children & b_bits != 0 {
            return false;
        }
        let mut p = to_parents & !up;
        up |= p;
        while p != 0 {
            let w = p.trailing_zeros() as usize;
            p &= p - 1;
            stack.push((w, Entry::FromChild));
        }
        let mut ch = to_children & !down;
        down |= ch;
        while ch != 0 {
            let w = ch.trailing_zeros() as usize;
            ch &= ch - 1;
            stack.push((w, Entry::FromParent));
        }
    }
    true
}

/// Orientation of the edge used by one step of a trail from `j_{i-1}` to `j_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// `j_{i-1} -> j_i`
    Forward,
    /// `j_{i-1} <- j_i`
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub orientation: Orientation,
    /// Both `j_{i-1} -> j_i` and `j_i -> j_{i-1}` exist in the graph.
    pub both_present: bool,
}

/// Sequence of distinct vertices joined by edges used in a recorded orientation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trail {
    pub vertices: Vec<usize>,
    pub steps: Vec<Step>,
}

impl Trail {
    /// Renders e.g. `vi -> ho <- hs -> d`.
    pub fn display(&self, g: &DynamicGraph) -> String {
        let mut out = String::new();
        for (i, &v) in self.vertices.iter().enumerate() {
            if i > 0 {
                out.push_str(match self.steps[i - 1].orientation {
                    Orientation::Forward => " -> ",
                    Orientation::Backward => " <- ",
                });
            }
            out.push_str(g.label(v));
        }
        out
    }

    fn is_structurally_valid(&self, g: &DynamicGraph) -> bool {
        if self.vertices.is_empty() || self.steps.len() + 1 != self.vertices.len() {
            return false;
        }
        let mut seen = VertexSet::EMPTY;
        for &v in &self.vertices {
            if !g.vertices().contains(v) || seen.contains(v) {
                return false;
            }
            seen = seen.with(v);
        }
        self.steps.iter().enumerate().all(|(i, st)| {
            let (u, w) = (self.vertices[i], self.vertices[i + 1]);
            let present = match st.orientation {
                Orientation::Forward => g.has_edge(u, w),
                Orientation::Backward => g.has_edge(w, u),
            };
            present && st.both_present == (g.has_edge(u, w) && g.has_edge(w, u))
        })
    }

    /// Checks, directly from the definitions, that this is an allowed trail
    /// from `A` to `B` that no vertex blocks given `C`. Sets are normalized
    /// first, as for the separation routes.
    pub fn is_active_allowed(&self, g: &DynamicGraph, q: Query) -> bool {
        let Query { a, b, c } = q.normalized();
        if !self.is_structurally_valid(g) {
            return false;
        }
        let first = self.vertices[0];
        let last = *self.vertices.last().unwrap();
        if !a.contains(first) || !b.contains(last) {
            return false;
        }
        // no edge (b, k) with b in B, k outside B
        for (i, st) in self.steps.iter().enumerate() {
            let (u, w) = (self.vertices[i], self.vertices[i + 1]);
            let (tail, head) = match st.orientation {
                Orientation::Forward => (u, w),
                Orientation::Backward => (w, u),
            };
            if b.contains(tail) && !b.contains(head) {
                return false;
            }
        }
        for i in 1..self.vertices.len() - 1 {
            let v = self.vertices[i];
            let into_from_left = self.steps[i - 1].orientation == Orientation::Forward;
            let into_from_right = self.steps[i].orientation == Orientation::Backward;
            let collider = into_from_left && into_from_right;
            if collider {
                let de = g.descendants(VertexSet::singleton(v)).expect("vertex in graph");
                if !c.contains(v) && de.is_disjoint(c) {
                    return false;
                }
            } else if c.contains(v) {
                return false;
            }
        }
        true
    }
}

/// One allowed trail from `A` to `B` that is active given `C`, or `None` when
/// `C` δ-separates `A` from `B`.
pub fn active_trail_witness(g: &DynamicGraph, q: Query) -> Result<Option<Trail>, SeparationError> {
    q.check(g)?;
    let nq = q.normalized();
    if trail_unchecked(g, nq) {
        return Ok(None);
    }
    if let Some(t) = shortest_walk(g, nq).filter(|t| t.is_active_allowed(g, q)) {
        return Ok(Some(t));
    }
    Ok(depth_first_trail(g, nq).filter(|t| t.is_active_allowed(g, q)))
}

fn make_step(g: &DynamicGraph, u: usize, w: usize, orientation: Orientation) -> Step {
    Step { orientation, both_present: g.has_edge(u, w) && g.has_edge(w, u) }
}

// Breadth-first search over (vertex, entry) states with back-pointers. The
// resulting walk is returned only if its vertices are distinct.
fn shortest_walk(g: &DynamicGraph, q: Query) -> Option<Trail> {
    let Query { a, b, c } = q;
    let n = g.universe_len();
    let s = g.ancestral_closure_unchecked(a | b | c).bits();
    let open_collider = g.ancestral_closure_unchecked(c).bits();
    let idx = |v: usize, e: Entry| 2 * v + (e == Entry::FromParent) as usize;
    let mut prev: Vec<Option<Option<(usize, Entry, Orientation)>>> = vec![None; 2 * n];
    let mut queue = std::collections::VecDeque::new();
    for v in a.iter() {
        prev[idx(v, Entry::FromChild)] = Some(None);
        queue.push_back((v, Entry::FromChild));
    }
    let mut hit = None;
    'bfs: while let Some((v, entry)) = queue.pop_front() {
        let in_c = c.contains(v);
        let go_parents = match entry {
            Entry::FromChild => !in_c,
            Entry::FromParent => open_collider >> v & 1 == 1,
        };
        let go_children = !in_c;
        if go_children {
            for w in VertexSet(g.child_bits(v) & s).iter() {
                if prev[idx(w, Entry::FromParent)].is_none() {
                    prev[idx(w, Entry::FromParent)] = Some(Some((v, entry, Orientation::Forward)));
                    if b.contains(w) {
                        hit = Some((w, Entry::FromParent));
                        break 'bfs;
                    }
                    queue.push_back((w, Entry::FromParent));
                }
            }
        }
        if go_parents {
            for w in VertexSet(g.parent_bits(v) & s & !b.bits()).iter() {
                if prev[idx(w, Entry::FromChild)].is_none() {
                    prev[idx(w, Entry::FromChild)] = Some(Some((v, entry, Orientation::Backward)));
                    queue.push_back((w, Entry::FromChild));
                }
            }
        }
    }
    let (mut v, mut e) = hit?;
    let mut verts = vec![v];
    let mut orients = Vec::new();
    while let Some(Some((pv, pe, o))) = prev[idx(v, e)] {
        verts.push(pv);
        orients.push(o);
        v = pv;
        e = pe;
    }
    verts.reverse();
    orients.reverse();
    let steps = orients.iter().enumerate().map(|(i, &o)| make_step(g, verts[i], verts[i + 1], o)).collect();
    Some(Trail { vertices: verts, steps })
}

// Exhaustive search over simple trails inside An(A ∪ B ∪ C), extending only
// through vertices that stay unblocked. Exponential in the worst case.
fn depth_first_trail(g: &DynamicGraph, q: Query) -> Option<Trail> {
    let Query { a, b, c } = q;
    let s = g.ancestral_closure_unchecked(a | b | c);
    let open_collider = g.ancestral_closure_unchecked(c);

    struct Search<'g> {
        g: &'g DynamicGraph,
        s: VertexSet,
        b: VertexSet,
        c: VertexSet,
        open: VertexSet,
        verts: Vec<usize>,
        orients: Vec<Orientation>,
        on_path: VertexSet,
    }

    impl Search<'_> {
        fn extend(&mut self) -> bool {
            let v = *self.verts.last().unwrap();
            let arrived_forward = self.orients.last().copied() == Some(Orientation::Forward);
            let mut moves = Vec::new();
            for w in VertexSet(self.g.child_bits(v)).intersection(self.s).iter() {
                moves.push((w, Orientation::Forward));
            }
            for w in (VertexSet(self.g.parent_bits(v)) & self.s).difference(self.b).iter() {
                moves.push((w, Orientation::Backward));
            }
            for (w, o) in moves {
                if self.on_path.contains(w) {
                    continue;
                }
                // v is interior once we step past it
                if self.verts.len() > 1 {
                    let collider = arrived_forward && o == Orientation::Backward;
                    let blocked = if collider { !self.open.contains(v) } else { self.c.contains(v) };
                    if blocked {
                        continue;
                    }
                }
                self.verts.push(w);
                self.orients.push(o);
                self.on_path = self.on_path.with(w);
                if self.b.contains(w) && o == Orientation::Forward {
                    return true;
                }
                if !self.b.contains(w) && self.extend() {
                    return true;
                }
                self.verts.pop();
                self.orients.pop();
                self.on_path = self.on_path.without(w);
            }
            false
        }
    }

    for start in a.iter() {
        let mut search = Search {
            g,
            s,
            b,
            c,
            open: open_collider,
            verts: vec![start],
            orients: Vec::new(),
            on_path: VertexSet::singleton(start),
        };
        if search.extend() {
            let steps = search
                .orients
                .iter()
                .enumerate()
                .map(|(i, &o)| make_step(g, search.verts[i], search.verts[i + 1], o))
                .collect();
            return Some(Trail { vertices: search.verts, steps });
        }
    }
    None
}

/// Largest candidate set accepted by [`minimal_separators`].
pub const MAX_SEPARATOR_CANDIDATES: usize = 20;

/// Every inclusion-minimal `C ⊆ within` such that `C` δ-separates `a` from
/// `b`, sorted by bit pattern.
pub fn minimal_separators(
    g: &DynamicGraph,
    a: VertexSet,
    b: VertexSet,
    within: VertexSet,
) -> Result<Vec<VertexSet>, SeparationError> {
    for s in [a, b, within] {
        g.check_subset(s)?;
    }
    if within.len() > MAX_SEPARATOR_CANDIDATES {
        return Err(SeparationError::TooManyCandidates { max: MAX_SEPARATOR_CANDIDATES, got: within.len() });
    }
    let slots: Vec<usize> = within.iter().collect();
    let w = slots.len();
    let to_set = |mask: usize| -> VertexSet {
        slots.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &v)| v).collect()
    };
    let sep: Vec<bool> = (0..1usize << w)
        .into_par_iter()
        .map(|mask| moral_unchecked(g, Query::new(a, b, to_set(mask)).normalized()))
        .collect();
    // has_sub[m]: some subset of m (including m) separates
    let mut has_sub = sep.clone();
    for i in 0..w {
        for m in 0..1usize << w {
            if m >> i & 1 == 1 && has_sub[m ^ (1 << i)] {
                has_sub[m] = true;
            }
        }
    }
    let mut out: Vec<VertexSet> = (0..1usize << w)
        .filter(|&m| sep[m] && (0..w).all(|i| m >> i & 1 == 0 || !has_sub[m ^ (1 << i)]))
        .map(to_set)
        .collect();
    out.sort();
    Ok(out)
}

/// Plain separation of `a` and `b` by `c` in `(G_{An(a ∪ b ∪ c)})^m`, with no
/// out-edge deletion. When true, the σ-algebras generated by the histories of
/// `a` and `b` are conditionally independent given that of `c`.
pub fn ancestral_moral_separated(
    g: &DynamicGraph,
    a: VertexSet,
    b: VertexSet,
    c: VertexSet,
) -> Result<bool, SeparationError> {
    for s in [a, b, c] {
        g.check_subset(s)?;
    }
    let s = g.ancestral_closure_unchecked(a | b | c);
    Ok(g.induced_unchecked(s).moralize().u_separated_unchecked(a, b, c))
}
