//! Random Graver-basis elements for the toric ideal of a graph.
//!
//! A primitive walk on a complete graph is a cactus of cycles: every vertex
//! lies on at most two cycles and the cycle-intersection graph is a tree.
//! Generation therefore runs in two stages:
//!
//! 1. [`build_weighted_tree`] grows a random tree whose node weights are
//!    cycle lengths, layer by layer, keeping every node's degree no larger
//!    than (and of the same parity as) its weight and keeping the number of
//!    graph vertices the cactus needs, `sum(weights) - |E(T)|`, within `n`.
//! 2. [`tree_to_walk`] assigns graph vertices to every cycle, orders them at
//!    random and traces the cactus as one closed walk.
//!
//! A weight of two stands for a bridge that the walk crosses twice; it only
//! arises outside square-free mode. Non-complete graphs are handled by
//! rejecting elements whose support leaves the graph.

use std::collections::{HashMap, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph_model::{Graph, Move};
use crate::walks::ClosedWalk;

pub const DEFAULT_MAX_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenMode {
    /// Restrict to moves with entries in {-1, 0, 1} (cycle lengths >= 3).
    pub square_free: bool,
    /// Rejection budget per element on non-complete graphs.
    pub max_attempts: usize,
}

impl GenMode {
    pub fn new(square_free: bool, max_attempts: usize) -> Result<Self> {
        if max_attempts == 0 {
            return Err(Error::Config("max_attempts must be at least 1".into()));
        }
        Ok(GenMode {
            square_free,
            max_attempts,
        })
    }

    pub fn square_free() -> Self {
        GenMode {
            square_free: true,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
        }
    }

    pub fn unrestricted() -> Self {
        GenMode {
            square_free: false,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
        }
    }

    /// Smallest legal node weight.
    pub fn min_weight(&self) -> u32 {
        if self.square_free {
            3
        } else {
            2
        }
    }

    /// Smallest vertex budget for which a tree can be built.
    pub fn min_budget(&self) -> usize {
        if self.square_free {
            4
        } else {
            2
        }
    }
}

impl Default for GenMode {
    fn default() -> Self {
        Self::square_free()
    }
}

/// A rooted tree with integer node weights. Node 0 is the root and every
/// other node's parent has a smaller index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedTree {
    weights: Vec<u32>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
}

impl WeightedTree {
    pub fn single(weight: u32) -> Self {
        WeightedTree {
            weights: vec![weight],
            parent: vec![None],
            children: vec![Vec::new()],
        }
    }

    /// Builds a tree from `(weight, parent)` pairs; node 0 must be the root
    /// and parents must precede their children.
    pub fn from_parents(nodes: &[(u32, Option<usize>)]) -> Result<Self> {
        let mut tree = WeightedTree {
            weights: Vec::with_capacity(nodes.len()),
            parent: Vec::with_capacity(nodes.len()),
            children: Vec::with_capacity(nodes.len()),
        };
        for (k, &(w, p)) in nodes.iter().enumerate() {
            match (k, p) {
                (0, None) => {
                    tree.weights.push(w);
                    tree.parent.push(None);
                    tree.children.push(Vec::new());
                }
                (_, Some(p)) if p < k => {
                    tree.push_child(p, w);
                }
                _ => {
                    return Err(Error::Config(format!(
                        "node {k}: root must be node 0 and parents must precede children"
                    )))
                }
            }
        }
        if tree.weights.is_empty() {
            return Err(Error::Config("tree has no nodes".into()));
        }
        Ok(tree)
    }

    fn push_child(&mut self, parent: usize, weight: u32) -> usize {
        let id = self.weights.len();
        self.weights.push(weight);
        self.parent.push(Some(parent));
        self.children.push(Vec::new());
        self.children[parent].push(id);
        id
    }

    fn truncate(&mut self, len: usize) {
        self.weights.truncate(len);
        self.parent.truncate(len);
        self.children.truncate(len);
        for c in &mut self.children {
            c.retain(|&k| k < len);
        }
    }

    pub fn node_count(&self) -> usize {
        self.weights.len()
    }

    pub fn edge_count(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn weight(&self, v: usize) -> u32 {
        self.weights[v]
    }

    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.children[v].len() + usize::from(self.parent[v].is_some())
    }

    /// Graph vertices consumed by the cactus: `sum(mu) - |E(T)|`.
    pub fn vertex_budget(&self) -> usize {
        self.weights.iter().map(|&w| w as usize).sum::<usize>() - self.edge_count()
    }

    /// Every node has `deg <= mu` and `deg = mu (mod 2)`.
    pub fn satisfies_degree_parity(&self) -> bool {
        (0..self.node_count()).all(|v| {
            let (deg, mu) = (self.degree(v), self.weights[v] as usize);
            deg <= mu && deg % 2 == mu % 2
        })
    }

    pub fn fits_budget(&self, n: usize) -> bool {
        self.vertex_budget() <= n
    }

    /// A string that is equal for two trees iff they are isomorphic as
    /// unrooted node-weighted trees.
    pub fn canonical_form(&self) -> String {
        let adjacency: Vec<Vec<usize>> = (0..self.node_count())
            .map(|v| self.children[v].iter().copied().chain(self.parent[v]).collect())
            .collect();
        (0..self.node_count())
            .map(|root| rooted_code(&adjacency, &self.weights, root, None))
            .min()
            .expect("tree has a node")
    }
}

fn rooted_code(adjacency: &[Vec<usize>], weights: &[u32], v: usize, from: Option<usize>) -> String {
    let mut codes: Vec<String> = adjacency[v]
        .iter()
        .filter(|&&u| Some(u) != from)
        .map(|&u| rooted_code(adjacency, weights, u, Some(v)))
        .collect();
    codes.sort();
    format!("({}{})", weights[v], codes.concat())
}

/// Grows a random weighted tree satisfying the degree/parity condition and
/// `sum(mu) - |E(T)| <= n`.
pub fn build_weighted_tree<R: Rng + ?Sized>(n: usize, mode: GenMode, rng: &mut R) -> Result<WeightedTree> {
    build_weighted_tree_observed(n, mode, rng, &mut |_| {})
}

/// [`build_weighted_tree`] with a hook called on the tree after every
/// committed growth layer.
pub fn build_weighted_tree_observed<R, F>(
    n: usize,
    mode: GenMode,
    rng: &mut R,
    observer: &mut F,
) -> Result<WeightedTree>
where
    R: Rng + ?Sized,
    F: FnMut(&WeightedTree),
{
    if n < mode.min_budget() {
        return Err(Error::BudgetTooSmall {
            n,
            min: mode.min_budget(),
        });
    }
    let lo = mode.min_weight() as usize;
    loop {
        let mut tree = WeightedTree::single(rng.gen_range(lo..=n) as u32);
        grow(&mut tree, n, lo, rng, observer);
        if fix_parity(&mut tree, n, lo, rng) {
            debug_assert!(tree.satisfies_degree_parity() && tree.fits_budget(n));
            return Ok(tree);
        }
    }
}

fn grow<R, F>(tree: &mut WeightedTree, n: usize, lo: usize, rng: &mut R, observer: &mut F)
where
    R: Rng + ?Sized,
    F: FnMut(&WeightedTree),
{
    let mut layer = vec![0usize];
    loop {
        let committed = tree.node_count();
        let mut budget = tree.vertex_budget();
        let mut fresh = Vec::new();
        for &v in &layer {
            // deg(v) drawn from {mu, mu - 2, ...} with deg >= 1; the parent
            // edge counts towards it for non-root nodes
            let mu = tree.weight(v) as usize;
            let steps = (mu - 1) / 2;
            let degree = mu - 2 * rng.gen_range(0..=steps);
            let children = degree - usize::from(tree.parent(v).is_some());
            for _ in 0..children {
                let hi = n.saturating_sub(budget).max(lo);
                let w = rng.gen_range(lo..=hi);
                fresh.push(tree.push_child(v, w as u32));
                budget += w - 1;
            }
        }
        if budget > n {
            tree.truncate(committed);
            return;
        }
        if fresh.is_empty() {
            return;
        }
        observer(tree);
        layer = fresh;
    }
}

/// Odd single roots and even leaves get their weight moved by one, the
/// direction chosen by a fair coin and flipped if the first choice leaves
/// the legal weights or the budget. Returns false if some node cannot be
/// fixed either way.
fn fix_parity<R: Rng + ?Sized>(tree: &mut WeightedTree, n: usize, lo: usize, rng: &mut R) -> bool {
    let targets: Vec<usize> = if tree.node_count() == 1 {
        vec![0]
    } else {
        (0..tree.node_count()).filter(|&v| tree.degree(v) == 1).collect()
    };
    for v in targets {
        let mu = tree.weight(v) as usize;
        if mu % 2 == tree.degree(v) % 2 {
            continue;
        }
        let budget = tree.vertex_budget();
        let up_first = rng.gen_bool(0.5);
        let candidates = if up_first { [mu + 1, mu - 1] } else { [mu - 1, mu + 1] };
        let Some(w) = candidates.into_iter().find(|&w| w >= lo && budget + w - mu <= n) else {
            return false;
        };
        tree.weights[v] = w as u32;
    }
    true
}

/// Realises a weighted tree as a primitive closed walk on `K_n`.
///
/// Nodes are visited breadth-first; each draws fresh graph vertices without
/// replacement and shares exactly one vertex with its parent. Cycle orders
/// are uniform. The walk is the depth-first circuit of the resulting cactus.
pub fn tree_to_walk<R: Rng + ?Sized>(tree: &WeightedTree, n: usize, rng: &mut R) -> Result<ClosedWalk> {
    if !tree.satisfies_degree_parity() {
        return Err(Error::DegenerateTree("degree/parity condition fails".into()));
    }
    if !tree.fits_budget(n) {
        return Err(Error::DegenerateTree(format!(
            "needs {} vertices, only {n} available",
            tree.vertex_budget()
        )));
    }
    if tree.node_count() == 1 && tree.weight(0) < 4 {
        return Err(Error::DegenerateTree("a lone cycle must have length at least 4".into()));
    }

    let mut pool: Vec<usize> = (0..n).collect();
    pool.shuffle(rng);
    let mut pool = pool.into_iter();

    // cycle[v] lists node v's vertices in traversal order, starting at the
    // vertex shared with its parent; attach[v][k] lists the children hung
    // on cycle[v][k]
    let k = tree.node_count();
    let mut cycle: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut attach: Vec<Vec<Vec<usize>>> = vec![Vec::new(); k];
    let mut entry: Vec<Option<usize>> = vec![None; k];
    let mut queue = VecDeque::from([0usize]);
    while let Some(v) = queue.pop_front() {
        let mu = tree.weight(v) as usize;
        let mut vs = Vec::with_capacity(mu);
        vs.extend(entry[v]);
        while vs.len() < mu {
            vs.push(pool.next().expect("budget guarantees enough vertices"));
        }
        // fresh vertices come from a shuffled pool, so `vs` is already in
        // uniform random order after the entry vertex
        let first_free = usize::from(entry[v].is_some());
        let mut slots: Vec<usize> = (first_free..mu).collect();
        slots.shuffle(rng);
        let mut hooks = vec![Vec::new(); mu];
        for (&child, &slot) in tree.children(v).iter().zip(&slots) {
            hooks[slot].push(child);
            entry[child] = Some(vs[slot]);
            queue.push_back(child);
        }
        cycle[v] = vs;
        attach[v] = hooks;
    }

    let mut sequence = Vec::with_capacity(tree.weights().iter().map(|&w| w as usize).sum());
    trace(0, false, &cycle, &attach, &mut sequence);
    ClosedWalk::on_complete(sequence)
}

/// Emits node `v`'s circuit; the entry vertex is left to the caller when
/// `skip_entry` is set.
fn trace(v: usize, skip_entry: bool, cycle: &[Vec<usize>], attach: &[Vec<Vec<usize>>], out: &mut Vec<usize>) {
    for (slot, &u) in cycle[v].iter().enumerate() {
        if slot > 0 || !skip_entry {
            out.push(u);
        }
        for &child in &attach[v][slot] {
            trace(child, true, cycle, attach, out);
            out.push(u);
        }
    }
}

/// A sampled Graver element with the primitive walk that induced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraverElement {
    pub walk: ClosedWalk,
    pub mv: Move,
}

/// Draws a Graver element of `graph`'s toric ideal: generated on the
/// complete graph and rejected while its support leaves `graph`.
pub fn sample_graver_element<R: Rng + ?Sized>(graph: &Graph, mode: GenMode, rng: &mut R) -> Result<GraverElement> {
    let n = graph.vertex_count();
    for _ in 0..mode.max_attempts {
        let tree = build_weighted_tree(n, mode, rng)?;
        let walk = match tree_to_walk(&tree, n, rng) {
            Ok(w) => w,
            Err(Error::DegenerateTree(_)) => continue,
            Err(e) => return Err(e),
        };
        if walk.edges().all(|e| graph.has_edge(e)) {
            let mv = walk.to_move();
            return Ok(GraverElement { walk, mv });
        }
    }
    Err(Error::Exhausted {
        attempts: mode.max_attempts,
    })
}

/// Recovers the weighted tree of a primitive walk: one node per cycle of the
/// cactus (a doubly-crossed bridge is a cycle of length two) and one edge per
/// pair of cycles sharing a vertex.
pub fn tree_from_walk(walk: &ClosedWalk) -> Result<WeightedTree> {
    if !walk.is_primitive() {
        return Err(Error::NotPrimitive);
    }
    // each repeat of a stacked vertex closes the cycle above it
    let mut stack: Vec<usize> = Vec::new();
    let mut cycles: Vec<Vec<usize>> = Vec::new();
    for &v in walk.vertices() {
        if let Some(pos) = stack.iter().position(|&u| u == v) {
            cycles.push(stack.split_off(pos));
        }
        stack.push(v);
    }
    cycles.push(stack);

    let mut owners: HashMap<usize, Vec<usize>> = HashMap::new();
    for (c, vs) in cycles.iter().enumerate() {
        for &v in vs {
            owners.entry(v).or_default().push(c);
        }
    }
    let mut adjacency = vec![Vec::new(); cycles.len()];
    for cs in owners.values() {
        if let &[a, b] = cs.as_slice() {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
    }

    // relabel breadth-first so parents precede children
    let mut order = vec![None; cycles.len()];
    let mut nodes = Vec::with_capacity(cycles.len());
    let mut queue = VecDeque::from([(0usize, None::<usize>)]);
    order[0] = Some(0);
    while let Some((c, parent)) = queue.pop_front() {
        nodes.push((cycles[c].len() as u32, parent));
        let id = order[c].expect("queued nodes are labelled");
        for &d in &adjacency[c] {
            if order[d].is_none() {
                order[d] = Some(nodes.len() + queue.len());
                queue.push_back((d, Some(id)));
            }
        }
    }
    WeightedTree::from_parents(&nodes)
}
