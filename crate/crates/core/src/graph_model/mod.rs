//! Underlying graphs, edge-weight vectors, moves and the incidence action
//! `x -> A x` that maps an edge vector to its degree sequence.
//!
//! Vertices are 0-based internally and 1-based in every textual format.

mod io;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::error::{Error, Result};

pub use io::{parse_capacities, parse_degree_sequence, parse_edge_list, EdgeList, LoopPolicy};

/// An unordered vertex pair stored as `(min, max)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge(usize, usize);

impl Edge {
    /// Canonicalises `{i, j}`. Loops are representable here; [`Graph`] rejects them.
    pub fn new(i: usize, j: usize) -> Self {
        if i <= j {
            Edge(i, j)
        } else {
            Edge(j, i)
        }
    }

    pub fn lo(self) -> usize {
        self.0
    }

    pub fn hi(self) -> usize {
        self.1
    }

    pub fn contains(self, v: usize) -> bool {
        self.0 == v || self.1 == v
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.0 + 1, self.1 + 1)
    }
}

/// Simple undirected graph: the support of the model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    index: HashMap<Edge, usize>,
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph on `n` vertices from 0-based pairs. Loops, duplicates
    /// and out-of-range endpoints are rejected.
    pub fn new<I>(n: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut edges = Vec::new();
        for (i, j) in pairs {
            if i == j {
                return Err(Error::InvalidGraph(format!("loop at vertex {}", i + 1)));
            }
            if i >= n || j >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge {{{},{}}} has an endpoint outside 1..{n}",
                    i + 1,
                    j + 1
                )));
            }
            edges.push(Edge::new(i, j));
        }
        edges.sort_unstable();
        if let Some(w) = edges.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidGraph(format!("duplicate edge {}", w[0])));
        }
        let index = edges.iter().enumerate().map(|(k, &e)| (e, k)).collect();
        let mut adjacency = vec![Vec::new(); n];
        for e in &edges {
            adjacency[e.0].push(e.1);
            adjacency[e.1].push(e.0);
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
        }
        Ok(Graph {
            n,
            edges,
            index,
            adjacency,
        })
    }

    /// The complete graph `K_n`.
    pub fn complete(n: usize) -> Self {
        let pairs = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)));
        Graph::new(n, pairs).expect("complete graph is simple")
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges in lexicographic order.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn has_edge(&self, e: Edge) -> bool {
        self.index.contains_key(&e)
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        i != j && self.has_edge(Edge::new(i, j))
    }

    pub fn edge_index(&self, e: Edge) -> Option<usize> {
        self.index.get(&e).copied()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn is_complete(&self) -> bool {
        self.edges.len() == self.n * self.n.saturating_sub(1) / 2
    }

    fn check_edge(&self, e: Edge) -> Result<()> {
        if self.has_edge(e) {
            Ok(())
        } else {
            Err(Error::InvalidEdge(e.0 + 1, e.1 + 1))
        }
    }
}

/// Per-edge upper bounds `n_ij` on edge weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Capacities {
    /// Every edge capped at one: simple graphs.
    One,
    Unbounded,
    /// Explicit caps; edges absent from the map are capped at one.
    PerEdge(HashMap<Edge, u32>),
}

impl Capacities {
    pub fn per_edge(caps: HashMap<Edge, u32>) -> Result<Self> {
        if let Some((e, _)) = caps.iter().find(|(_, &c)| c == 0) {
            return Err(Error::Config(format!("capacity of edge {e} must be positive")));
        }
        Ok(Capacities::PerEdge(caps))
    }

    /// `None` means unbounded.
    pub fn cap(&self, e: Edge) -> Option<u32> {
        match self {
            Capacities::One => Some(1),
            Capacities::Unbounded => None,
            Capacities::PerEdge(map) => Some(map.get(&e).copied().unwrap_or(1)),
        }
    }

    /// True when every cap is one, i.e. the fiber consists of simple graphs.
    pub fn is_one(&self) -> bool {
        match self {
            Capacities::One => true,
            Capacities::Unbounded => false,
            Capacities::PerEdge(map) => map.values().all(|&c| c == 1),
        }
    }

    pub fn admits(&self, e: Edge, weight: u32) -> bool {
        self.cap(e).is_none_or(|c| weight <= c)
    }
}

/// Nonnegative integer weights on the edges of a graph; a point of a fiber.
/// Only nonzero entries are stored.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeVector {
    weights: BTreeMap<Edge, u32>,
}

impl EdgeVector {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_weights<I>(graph: &Graph, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Edge, u32)>,
    {
        let mut weights = BTreeMap::new();
        for (e, w) in entries {
            graph.check_edge(e)?;
            if w > 0 {
                *weights.entry(e).or_insert(0) += w;
            }
        }
        Ok(EdgeVector { weights })
    }

    /// Indicator vector of a set of edges (a simple subgraph of `graph`).
    pub fn from_edges<I>(graph: &Graph, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = Edge>,
    {
        Self::from_weights(graph, edges.into_iter().map(|e| (e, 1)))
    }

    /// Trusted constructor: entries must be nonzero edges of the graph.
    pub(crate) fn from_map(weights: BTreeMap<Edge, u32>) -> Self {
        debug_assert!(weights.values().all(|&w| w > 0));
        EdgeVector { weights }
    }

    pub fn get(&self, e: Edge) -> u32 {
        self.weights.get(&e).copied().unwrap_or(0)
    }

    /// Nonzero entries in lexicographic edge order.
    pub fn iter(&self) -> impl Iterator<Item = (Edge, u32)> + '_ {
        self.weights.iter().map(|(&e, &w)| (e, w))
    }

    /// Weights over every edge of `graph`, in the graph's edge order.
    pub fn dense<'a>(&'a self, graph: &'a Graph) -> impl Iterator<Item = (Edge, u32)> + 'a {
        graph.edges().iter().map(move |&e| (e, self.get(e)))
    }

    pub fn support(&self) -> impl Iterator<Item = Edge> + '_ {
        self.weights.keys().copied()
    }

    pub fn support_len(&self) -> usize {
        self.weights.len()
    }

    pub fn total_weight(&self) -> u64 {
        self.weights.values().map(|&w| w as u64).sum()
    }

    pub fn is_square_free(&self) -> bool {
        self.weights.values().all(|&w| w <= 1)
    }

    pub fn respects(&self, caps: &Capacities) -> bool {
        self.iter().all(|(e, w)| caps.admits(e, w))
    }
}

impl fmt::Display for EdgeVector {
    /// Space-separated `i-j:w` tokens in edge order.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (e, w) in self.iter() {
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            write!(f, "{e}:{w}")?;
        }
        Ok(())
    }
}

/// The sufficient statistic `d = A x`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DegreeSequence(Vec<u64>);

impl DegreeSequence {
    pub fn new(degrees: Vec<u64>) -> Result<Self> {
        let total: u64 = degrees.iter().sum();
        if !total.is_multiple_of(2) {
            return Err(Error::Config(format!("degree sum {total} is odd")));
        }
        Ok(DegreeSequence(degrees))
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }
}

impl fmt::Display for DegreeSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u64::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

pub fn degree_sequence(graph: &Graph, x: &EdgeVector) -> DegreeSequence {
    let mut degrees = vec![0u64; graph.vertex_count()];
    for (e, w) in x.iter() {
        degrees[e.0] += w as u64;
        degrees[e.1] += w as u64;
    }
    DegreeSequence(degrees)
}

/// A signed edge vector in the kernel of the incidence map. Zero entries are
/// omitted; the entries are the walk weights `rho(e)` when the move comes
/// from a closed walk.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Move {
    entries: BTreeMap<Edge, i32>,
}

/// True iff the signed entries have zero net degree at every vertex.
///
/// Fails with [`Error::InvalidEdge`] if an entry lies off the graph.
pub fn is_move<I>(graph: &Graph, entries: I) -> Result<bool>
where
    I: IntoIterator<Item = (Edge, i32)>,
{
    let mut balance = vec![0i64; graph.vertex_count()];
    for (e, z) in entries {
        graph.check_edge(e)?;
        balance[e.0] += z as i64;
        balance[e.1] += z as i64;
    }
    Ok(balance.iter().all(|&b| b == 0))
}

impl Move {
    /// Validates that the entries lie on `graph` and balance at every vertex.
    pub fn new<I>(graph: &Graph, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Edge, i32)>,
    {
        let mv = Self::from_entries(entries);
        if !is_move(graph, mv.iter())? {
            return Err(Error::InvalidMove("nonzero net degree at some vertex".into()));
        }
        Ok(mv)
    }

    /// Sums repeated entries and drops zeros without checking balance.
    pub(crate) fn from_entries<I>(entries: I) -> Self
    where
        I: IntoIterator<Item = (Edge, i32)>,
    {
        let mut map = BTreeMap::new();
        for (e, z) in entries {
            *map.entry(e).or_insert(0) += z;
        }
        map.retain(|_, z| *z != 0);
        Move { entries: map }
    }

    pub fn get(&self, e: Edge) -> i32 {
        self.entries.get(&e).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Edge, i32)> + '_ {
        self.entries.iter().map(|(&e, &z)| (e, z))
    }

    pub fn support(&self) -> impl Iterator<Item = Edge> + '_ {
        self.entries.keys().copied()
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn l1_norm(&self) -> u64 {
        self.entries.values().map(|z| z.unsigned_abs() as u64).sum()
    }

    pub fn is_square_free(&self) -> bool {
        self.entries.values().all(|z| z.abs() <= 1)
    }

    pub fn negated(&self) -> Self {
        Move {
            entries: self.entries.iter().map(|(&e, &z)| (e, -z)).collect(),
        }
    }

    pub fn plus(&self, other: &Move) -> Self {
        Self::from_entries(self.iter().chain(other.iter()))
    }

    /// Positive part `z+` as an edge vector.
    pub fn positive_part(&self) -> EdgeVector {
        EdgeVector {
            weights: self
                .iter()
                .filter(|&(_, z)| z > 0)
                .map(|(e, z)| (e, z as u32))
                .collect(),
        }
    }

    /// Negative part `z-` as an edge vector (entries are magnitudes).
    pub fn negative_part(&self) -> EdgeVector {
        EdgeVector {
            weights: self
                .iter()
                .filter(|&(_, z)| z < 0)
                .map(|(e, z)| (e, z.unsigned_abs()))
                .collect(),
        }
    }

    pub fn support_within(&self, graph: &Graph) -> bool {
        self.support().all(|e| graph.has_edge(e))
    }
}

/// `x + z` if the result stays within `[0, cap]` on every edge, else `None`.
pub fn apply_move(x: &EdgeVector, z: &Move, caps: &Capacities) -> Option<EdgeVector> {
    let mut out = x.clone();
    try_apply_in_place(&mut out, z, caps).then_some(out)
}

/// In-place variant of [`apply_move`]; leaves `x` untouched when infeasible.
pub fn try_apply_in_place(x: &mut EdgeVector, z: &Move, caps: &Capacities) -> bool {
    let feasible = z.iter().all(|(e, dz)| {
        let next = x.get(e) as i64 + dz as i64;
        next >= 0 && caps.cap(e).is_none_or(|c| next <= c as i64)
    });
    if !feasible {
        return false;
    }
    for (e, dz) in z.iter() {
        let next = (x.get(e) as i64 + dz as i64) as u32;
        if next == 0 {
            x.weights.remove(&e);
        } else {
            x.weights.insert(e, next);
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(i: usize, j: usize) -> Edge {
        Edge::new(i - 1, j - 1)
    }

    fn matching_k4() -> (Graph, EdgeVector) {
        let g = Graph::complete(4);
        let x = EdgeVector::from_edges(&g, [e(1, 2), e(3, 4)]).unwrap();
        (g, x)
    }

    #[test]
    fn graph_rejects_loops_duplicates_and_range() {
        assert!(Graph::new(3, [(0, 0)]).is_err());
        assert!(Graph::new(3, [(0, 1), (1, 0)]).is_err());
        assert!(Graph::new(3, [(0, 3)]).is_err());
        let g = Graph::new(3, [(2, 0), (1, 0)]).unwrap();
        assert_eq!(g.edges(), &[e(1, 2), e(1, 3)]);
        assert_eq!(g.neighbors(0), &[1, 2]);
    }

    #[test]
    fn degree_sequence_of_matching_and_zero() {
        let (g, x) = matching_k4();
        assert_eq!(degree_sequence(&g, &x).as_slice(), &[1, 1, 1, 1]);
        assert_eq!(degree_sequence(&g, &EdgeVector::zero()).as_slice(), &[0, 0, 0, 0]);
        assert_eq!(degree_sequence(&g, &x).to_string(), "1,1,1,1");
    }

    #[test]
    fn four_cycle_alternation_is_a_move() {
        let g = Graph::complete(4);
        let z = [(e(1, 2), 1), (e(2, 3), -1), (e(3, 4), 1), (e(1, 4), -1)];
        assert!(is_move(&g, z).unwrap());
        assert!(!is_move(&g, [(e(1, 2), 1)]).unwrap());
    }

    #[test]
    fn is_move_rejects_non_edges() {
        let g = Graph::new(4, [(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        let err = is_move(&g, [(e(1, 3), 1)]).unwrap_err();
        assert!(matches!(err, Error::InvalidEdge(1, 3)));
    }

    #[test]
    fn disjoint_four_cycles_sum_to_a_move() {
        let g = Graph::complete(8);
        let c1 = Move::new(&g, [(e(1, 2), 1), (e(2, 3), -1), (e(3, 4), 1), (e(1, 4), -1)]).unwrap();
        let c2 = Move::new(&g, [(e(5, 6), 1), (e(6, 7), -1), (e(7, 8), 1), (e(5, 8), -1)]).unwrap();
        let sum = c1.plus(&c2);
        // signed degree at every vertex, summed by hand over the eight entries
        let mut balance = [0i32; 8];
        for (edge, z) in sum.iter() {
            balance[edge.lo()] += z;
            balance[edge.hi()] += z;
        }
        assert_eq!(balance, [0; 8]);
        assert!(is_move(&g, sum.iter()).unwrap());
        assert_eq!(sum.support_len(), 8);
    }

    #[test]
    fn apply_move_swaps_matching() {
        let (g, x) = matching_k4();
        let z = Move::new(&g, [(e(1, 3), 1), (e(2, 4), 1), (e(1, 2), -1), (e(3, 4), -1)]).unwrap();
        let y = apply_move(&x, &z, &Capacities::One).unwrap();
        assert_eq!(y, EdgeVector::from_edges(&g, [e(1, 3), e(2, 4)]).unwrap());
        assert_eq!(degree_sequence(&g, &y), degree_sequence(&g, &x));
        assert!(apply_move(&x, &z.negated(), &Capacities::One).is_none());
    }

    #[test]
    fn apply_move_from_zero_is_infeasible() {
        let g = Graph::complete(4);
        let z = Move::new(&g, [(e(1, 3), 1), (e(2, 4), 1), (e(1, 2), -1), (e(3, 4), -1)]).unwrap();
        assert!(apply_move(&EdgeVector::zero(), &z, &Capacities::Unbounded).is_none());
    }

    #[test]
    fn capacities_bound_the_result() {
        let g = Graph::complete(4);
        let x = EdgeVector::from_weights(&g, [(e(1, 2), 1), (e(3, 4), 1), (e(1, 3), 1), (e(2, 4), 1)]).unwrap();
        let z = Move::new(&g, [(e(1, 2), 1), (e(3, 4), 1), (e(1, 3), -1), (e(2, 4), -1)]).unwrap();
        assert!(apply_move(&x, &z, &Capacities::One).is_none());
        let y = apply_move(&x, &z, &Capacities::Unbounded).unwrap();
        assert_eq!(y.get(e(1, 2)), 2);
        assert!(!y.is_square_free());
        let caps = Capacities::per_edge([(e(1, 2), 2), (e(3, 4), 2)].into_iter().collect()).unwrap();
        assert!(apply_move(&x, &z, &caps).is_some());
        assert!(Capacities::per_edge([(e(1, 2), 0)].into_iter().collect()).is_err());
    }

    #[test]
    fn edge_vector_display_is_one_based() {
        let (_, x) = matching_k4();
        assert_eq!(x.to_string(), "1-2:1 3-4:1");
    }

    #[test]
    fn odd_degree_sum_rejected() {
        assert!(DegreeSequence::new(vec![1, 2]).is_err());
    }
}
