//! Brute-force ground truth for small instances: exact fiber enumeration,
//! primitivity by searching for a conformal decomposition, and fiber
//! connectivity under a set of moves.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::graph_model::{apply_move, Capacities, DegreeSequence, Edge, EdgeVector, Graph, Move};

/// Default bound on search nodes for the enumerators.
pub const DEFAULT_NODE_LIMIT: u64 = 1_000_000_000;

struct NodeBudget {
    used: u64,
    limit: u64,
}

impl NodeBudget {
    fn tick(&mut self) -> Result<()> {
        self.used += 1;
        if self.used > self.limit {
            Err(Error::InstanceTooLarge { limit: self.limit })
        } else {
            Ok(())
        }
    }
}

/// All `x` with `A x = d` and `0 <= x <= caps`, in lexicographic order of
/// the weight vectors over the graph's edge order.
pub fn enumerate_fiber(d: &DegreeSequence, graph: &Graph, caps: &Capacities) -> Result<Vec<EdgeVector>> {
    enumerate_fiber_limited(d, graph, caps, DEFAULT_NODE_LIMIT)
}

/// [`enumerate_fiber`] with an explicit search-node limit.
pub fn enumerate_fiber_limited(
    d: &DegreeSequence,
    graph: &Graph,
    caps: &Capacities,
    node_limit: u64,
) -> Result<Vec<EdgeVector>> {
    let n = graph.vertex_count();
    if d.len() != n {
        return Err(Error::Config(format!(
            "degree sequence has {} entries for {n} vertices",
            d.len()
        )));
    }
    let edges = graph.edges();
    let caps_by_edge: Vec<Option<u64>> = edges.iter().map(|&e| caps.cap(e).map(u64::from)).collect();

    // room[k][v]: largest weight vertex v can still receive from edges k..
    // (u64::MAX if some remaining incident edge is uncapped)
    let mut room = vec![vec![0u64; n]; edges.len() + 1];
    for k in (0..edges.len()).rev() {
        room[k] = room[k + 1].clone();
        for v in [edges[k].lo(), edges[k].hi()] {
            room[k][v] = match caps_by_edge[k] {
                Some(c) => room[k][v].saturating_add(c),
                None => u64::MAX,
            };
        }
    }
    // last[v]: index of the last edge touching v
    let mut last = vec![None; n];
    for (k, e) in edges.iter().enumerate() {
        last[e.lo()] = Some(k);
        last[e.hi()] = Some(k);
    }

    let mut residual = d.as_slice().to_vec();
    if (0..n).any(|v| residual[v] > room[0][v]) {
        return Ok(Vec::new());
    }
    let mut search = FiberSearch {
        edges,
        caps: &caps_by_edge,
        room: &room,
        last: &last,
        residual: &mut residual,
        current: vec![0; edges.len()],
        out: Vec::new(),
        budget: NodeBudget {
            used: 0,
            limit: node_limit,
        },
    };
    search.descend(0)?;
    Ok(search.out)
}

struct FiberSearch<'a> {
    edges: &'a [Edge],
    caps: &'a [Option<u64>],
    room: &'a [Vec<u64>],
    last: &'a [Option<usize>],
    residual: &'a mut Vec<u64>,
    current: Vec<u64>,
    out: Vec<EdgeVector>,
    budget: NodeBudget,
}

impl FiberSearch<'_> {
    fn descend(&mut self, k: usize) -> Result<()> {
        self.budget.tick()?;
        if k == self.edges.len() {
            if self.residual.iter().all(|&r| r == 0) {
                let weights = self
                    .edges
                    .iter()
                    .zip(&self.current)
                    .filter(|(_, &w)| w > 0)
                    .map(|(&e, &w)| (e, w as u32));
                self.out.push(EdgeVector::from_map(weights.collect()));
            }
            return Ok(());
        }
        let e = self.edges[k];
        let (u, v) = (e.lo(), e.hi());
        let mut top = self.residual[u].min(self.residual[v]);
        if let Some(c) = self.caps[k] {
            top = top.min(c);
        }
        for w in 0..=top {
            self.residual[u] -= w;
            self.residual[v] -= w;
            // every endpoint must still be completable by the later edges,
            // and an endpoint whose last edge this is must be done
            let ok = [u, v].iter().all(|&x| {
                let r = self.residual[x];
                r <= self.room[k + 1][x] && (self.last[x] != Some(k) || r == 0)
            });
            if ok {
                self.current[k] = w;
                self.descend(k + 1)?;
                self.current[k] = 0;
            }
            self.residual[u] += w;
            self.residual[v] += w;
        }
        Ok(())
    }
}

/// True iff `z` is a nonzero move admitting no conformal decomposition
/// `z = z' + (z - z')` into two nonzero moves.
pub fn is_primitive_bruteforce(z: &Move, graph: &Graph) -> Result<bool> {
    is_primitive_bruteforce_limited(z, graph, DEFAULT_NODE_LIMIT)
}

pub fn is_primitive_bruteforce_limited(z: &Move, graph: &Graph, node_limit: u64) -> Result<bool> {
    if !crate::graph_model::is_move(graph, z.iter())? {
        return Err(Error::InvalidMove("nonzero net degree at some vertex".into()));
    }
    if z.is_zero() {
        return Ok(false);
    }
    Ok(conformal_part(z, graph.vertex_count(), node_limit)?.is_none())
}

/// Primitivity of the binomial `x^u - x^v` given by its two exponent
/// vectors. A common variable makes it divisible by a smaller binomial, so
/// only `u`, `v` with disjoint supports can be primitive; for those it is
/// primitivity of the move `u - v`.
pub fn is_primitive_binomial_bruteforce(u: &EdgeVector, v: &EdgeVector, graph: &Graph) -> Result<bool> {
    if u.support().any(|e| v.get(e) > 0) {
        return Ok(false);
    }
    let entries = u
        .iter()
        .map(|(e, w)| (e, w as i32))
        .chain(v.iter().map(|(e, w)| (e, -(w as i32))));
    is_primitive_bruteforce(&Move::new(graph, entries)?, graph)
}

/// Searches for a move `z'` with `0 != z' != z` that is sign-compatible with
/// `z` and bounded by it entrywise. Returns it if found.
pub fn conformal_part(z: &Move, n: usize, node_limit: u64) -> Result<Option<Move>> {
    let entries: Vec<(Edge, i32)> = z.iter().collect();
    let mut last = vec![None; n];
    for (k, (e, _)) in entries.iter().enumerate() {
        last[e.lo()] = Some(k);
        last[e.hi()] = Some(k);
    }
    let mut search = ConformalSearch {
        entries: &entries,
        last: &last,
        balance: vec![0; n],
        current: vec![0; entries.len()],
        budget: NodeBudget {
            used: 0,
            limit: node_limit,
        },
    };
    Ok(search
        .descend(0)?
        .then(|| Move::from_entries(entries.iter().zip(&search.current).map(|(&(e, _), &c)| (e, c)))))
}

struct ConformalSearch<'a> {
    entries: &'a [(Edge, i32)],
    last: &'a [Option<usize>],
    balance: Vec<i64>,
    current: Vec<i32>,
    budget: NodeBudget,
}

impl ConformalSearch<'_> {
    fn descend(&mut self, k: usize) -> Result<bool> {
        self.budget.tick()?;
        if k == self.entries.len() {
            let nonzero = self.current.iter().any(|&c| c != 0);
            let proper = self.current.iter().zip(self.entries).any(|(&c, &(_, z))| c != z);
            return Ok(nonzero && proper);
        }
        let (e, z) = self.entries[k];
        let (u, v) = (e.lo(), e.hi());
        let sign = z.signum();
        for mag in 0..=z.abs() {
            let c = sign * mag;
            self.balance[u] += c as i64;
            self.balance[v] += c as i64;
            let closed = [u, v].iter().all(|&x| self.last[x] != Some(k) || self.balance[x] == 0);
            let mut found = false;
            if closed {
                self.current[k] = c;
                found = self.descend(k + 1)?;
                if !found {
                    self.current[k] = 0;
                }
            }
            self.balance[u] -= c as i64;
            self.balance[v] -= c as i64;
            if found {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Connectivity {
    pub connected: bool,
    pub components: usize,
}

/// Union-find over fiber elements.
#[derive(Debug, Clone)]
pub struct FiberGraph {
    index: HashMap<EdgeVector, usize>,
    parent: Vec<usize>,
    components: usize,
}

impl FiberGraph {
    pub fn new(fiber: &[EdgeVector]) -> Self {
        FiberGraph {
            index: fiber.iter().cloned().enumerate().map(|(k, x)| (x, k)).collect(),
            parent: (0..fiber.len()).collect(),
            components: fiber.len(),
        }
    }

    fn find(&mut self, mut a: usize) -> usize {
        while self.parent[a] != a {
            self.parent[a] = self.parent[self.parent[a]];
            a = self.parent[a];
        }
        a
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        self.components -= 1;
        true
    }

    /// Links every pair of fiber elements one `+-z` step apart. Returns the
    /// number of merges, i.e. how many new links joined two components.
    pub fn add_move(&mut self, fiber: &[EdgeVector], z: &Move, caps: &Capacities) -> usize {
        let mut merged = 0;
        for (k, x) in fiber.iter().enumerate() {
            // the -z direction is covered from the other endpoint
            if let Some(y) = apply_move(x, z, caps) {
                if let Some(&j) = self.index.get(&y) {
                    merged += usize::from(self.union(k, j));
                }
            }
        }
        merged
    }

    pub fn connectivity(&self) -> Connectivity {
        Connectivity {
            connected: self.components <= 1,
            components: self.components,
        }
    }
}

/// Whether `moves` (used with both signs) connect every element of `fiber`.
pub fn connectivity_check(fiber: &[EdgeVector], moves: &[Move], caps: &Capacities) -> Connectivity {
    let mut graph = FiberGraph::new(fiber);
    for z in moves {
        graph.add_move(fiber, z, caps);
    }
    graph.connectivity()
}
