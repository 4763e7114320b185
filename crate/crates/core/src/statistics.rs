//! Test statistics for the beta model: maximum likelihood fit, Pearson
//! chi-square, clustering coefficient and triangle count, plus incremental
//! trackers that update them along a chain without recomputing from scratch.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph_model::{Capacities, DegreeSequence, Edge, EdgeVector, Graph, Move};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 100_000;

/// Fitted beta-model parameters `alpha_i = exp(beta_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaFit {
    #[serde(rename = "alpha")]
    pub alphas: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// `max_i |d_i - sum_j n_ij p_ij|` at the returned parameters.
    pub residual: f64,
}

impl BetaFit {
    pub fn edge_probability(&self, e: Edge) -> f64 {
        let a = self.alphas[e.lo()] * self.alphas[e.hi()];
        a / (1.0 + a)
    }

    pub fn betas(&self) -> Vec<f64> {
        self.alphas.iter().map(|a| a.ln()).collect()
    }
}

fn finite_cap(caps: &Capacities, e: Edge) -> Result<f64> {
    caps.cap(e)
        .map(f64::from)
        .ok_or_else(|| Error::Config("the beta model needs finite edge capacities".into()))
}

fn check_fit_input(d: &DegreeSequence, graph: &Graph, caps: &Capacities) -> Result<Vec<f64>> {
    if d.len() != graph.vertex_count() {
        return Err(Error::Config(format!(
            "degree sequence has {} entries for {} vertices",
            d.len(),
            graph.vertex_count()
        )));
    }
    let mut max_degree = vec![0.0; graph.vertex_count()];
    for &e in graph.edges() {
        let c = finite_cap(caps, e)?;
        max_degree[e.lo()] += c;
        max_degree[e.hi()] += c;
    }
    let degrees: Vec<f64> = d.as_slice().iter().map(|&x| x as f64).collect();
    if let Some(v) = (0..degrees.len()).find(|&v| degrees[v] > max_degree[v]) {
        return Err(Error::Config(format!(
            "degree of vertex {} exceeds its maximum {}",
            v + 1,
            max_degree[v]
        )));
    }
    let boundary: Vec<usize> = (0..degrees.len())
        .filter(|&v| degrees[v] == 0.0 || degrees[v] == max_degree[v])
        .collect();
    if !boundary.is_empty() {
        return Err(Error::BoundaryMle { vertices: boundary });
    }
    Ok(degrees)
}

/// Expected degrees `sum_j n_ij p_ij` under `alphas`.
fn expected_degrees(graph: &Graph, caps: &[f64], alphas: &[f64]) -> Vec<f64> {
    let mut expected = vec![0.0; alphas.len()];
    for (k, &e) in graph.edges().iter().enumerate() {
        let a = alphas[e.lo()] * alphas[e.hi()];
        let m = caps[k] * a / (1.0 + a);
        expected[e.lo()] += m;
        expected[e.hi()] += m;
    }
    expected
}

/// Beta-model MLE by the fixed-point iteration
/// `alpha_i <- d_i / sum_j n_ij alpha_j / (1 + alpha_i alpha_j)`, started at
/// `alpha = 1`. Vertices with degree 0 or at their maximum have no finite
/// estimate and are reported as [`Error::BoundaryMle`].
pub fn fit_beta_mle(
    d: &DegreeSequence,
    graph: &Graph,
    caps: &Capacities,
    tol: f64,
    max_iter: usize,
) -> Result<BetaFit> {
    let start = vec![1.0; graph.vertex_count()];
    fit_beta_mle_from(d, graph, caps, tol, max_iter, &start)
}

/// [`fit_beta_mle`] from a caller-chosen positive starting point.
pub fn fit_beta_mle_from(
    d: &DegreeSequence,
    graph: &Graph,
    caps: &Capacities,
    tol: f64,
    max_iter: usize,
    start: &[f64],
) -> Result<BetaFit> {
    let degrees = check_fit_input(d, graph, caps)?;
    if start.len() != degrees.len() || start.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
        return Err(Error::Config("starting point must be positive and finite".into()));
    }
    let cap: Vec<f64> = graph
        .edges()
        .iter()
        .map(|&e| finite_cap(caps, e))
        .collect::<Result<_>>()?;
    let n = degrees.len();
    let mut alphas = start.to_vec();
    let mut denom = vec![0.0; n];
    let mut iterations = 0;
    loop {
        let residual = max_residual(&degrees, &expected_degrees(graph, &cap, &alphas));
        if residual <= tol || iterations >= max_iter {
            return Ok(BetaFit {
                alphas,
                converged: residual <= tol,
                iterations,
                residual,
            });
        }
        denom.iter_mut().for_each(|x| *x = 0.0);
        for (k, &e) in graph.edges().iter().enumerate() {
            let (i, j) = (e.lo(), e.hi());
            let s = 1.0 + alphas[i] * alphas[j];
            denom[i] += cap[k] * alphas[j] / s;
            denom[j] += cap[k] * alphas[i] / s;
        }
        for v in 0..n {
            alphas[v] = degrees[v] / denom[v];
        }
        iterations += 1;
    }
}

fn max_residual(degrees: &[f64], expected: &[f64]) -> f64 {
    degrees
        .iter()
        .zip(expected)
        .map(|(d, m)| (d - m).abs())
        .fold(0.0, f64::max)
}

/// Beta-model log-likelihood in the natural parameters:
/// `sum_i d_i beta_i - sum_ij n_ij log(1 + exp(beta_i + beta_j))`.
pub fn log_likelihood(d: &DegreeSequence, graph: &Graph, caps: &Capacities, betas: &[f64]) -> Result<f64> {
    let mut ll: f64 = d.as_slice().iter().zip(betas).map(|(&x, b)| x as f64 * b).sum();
    for &e in graph.edges() {
        let s = betas[e.lo()] + betas[e.hi()];
        // log(1 + e^s) without overflow
        let softplus = if s > 0.0 {
            s + (-s).exp().ln_1p()
        } else {
            s.exp().ln_1p()
        };
        ll -= finite_cap(caps, e)? * softplus;
    }
    Ok(ll)
}

/// Gradient of [`log_likelihood`]: `d_i - sum_j n_ij p_ij`.
pub fn score(d: &DegreeSequence, graph: &Graph, caps: &Capacities, betas: &[f64]) -> Result<Vec<f64>> {
    let cap: Vec<f64> = graph
        .edges()
        .iter()
        .map(|&e| finite_cap(caps, e))
        .collect::<Result<_>>()?;
    let alphas: Vec<f64> = betas.iter().map(|b| b.exp()).collect();
    let expected = expected_degrees(graph, &cap, &alphas);
    Ok(d.as_slice().iter().zip(expected).map(|(&x, m)| x as f64 - m).collect())
}

/// Pearson chi-square over independent binomial edges:
/// `sum_e (x_e - n_e p_e)^2 / (n_e p_e (1 - p_e))`.
pub fn chi_square(graph: &Graph, x: &EdgeVector, fit: &BetaFit, caps: &Capacities) -> Result<f64> {
    let cells = ChiSquareCells::new(graph, fit, caps)?;
    Ok(graph
        .edges()
        .iter()
        .enumerate()
        .map(|(k, &e)| cells.term(k, x.get(e)))
        .sum())
}

/// Per-edge means and variances of the fitted binomials.
#[derive(Debug, Clone)]
struct ChiSquareCells {
    mean: Vec<f64>,
    variance: Vec<f64>,
}

impl ChiSquareCells {
    fn new(graph: &Graph, fit: &BetaFit, caps: &Capacities) -> Result<Self> {
        if fit.alphas.len() != graph.vertex_count() {
            return Err(Error::Config("fit does not match the graph".into()));
        }
        let mut mean = Vec::with_capacity(graph.edge_count());
        let mut variance = Vec::with_capacity(graph.edge_count());
        for &e in graph.edges() {
            let n = finite_cap(caps, e)?;
            let p = fit.edge_probability(e);
            let var = n * p * (1.0 - p);
            if var.is_nan() || var <= 0.0 {
                return Err(Error::DegenerateProbability(e.lo() + 1, e.hi() + 1));
            }
            mean.push(n * p);
            variance.push(var);
        }
        Ok(ChiSquareCells { mean, variance })
    }

    fn term(&self, k: usize, x: u32) -> f64 {
        let r = x as f64 - self.mean[k];
        r * r / self.variance[k]
    }
}

/// Fixed-point scale for exact incremental chi-square sums.
const CHI_SCALE: f64 = (1u64 << 32) as f64;

/// Chi-square maintained under moves. Every per-edge term is rounded to a
/// multiple of `2^-32` and summed in integers, so the value depends only on
/// the current state and not on the path taken to reach it.
#[derive(Debug, Clone)]
pub struct ChiSquareTracker {
    cells: ChiSquareCells,
    index: std::collections::HashMap<Edge, usize>,
    state: Vec<u32>,
    sum: i128,
}

impl ChiSquareTracker {
    pub fn new(graph: &Graph, x: &EdgeVector, fit: &BetaFit, caps: &Capacities) -> Result<Self> {
        let cells = ChiSquareCells::new(graph, fit, caps)?;
        let state: Vec<u32> = x.dense(graph).map(|(_, w)| w).collect();
        let index = graph.edges().iter().enumerate().map(|(k, &e)| (e, k)).collect();
        let mut tracker = ChiSquareTracker {
            cells,
            index,
            state,
            sum: 0,
        };
        tracker.sum = (0..tracker.state.len()).map(|k| tracker.quantized(k)).sum();
        Ok(tracker)
    }

    fn quantized(&self, k: usize) -> i128 {
        (self.cells.term(k, self.state[k]) * CHI_SCALE).round() as i128
    }

    pub fn apply(&mut self, mv: &Move) {
        for (e, dz) in mv.iter() {
            let k = self.index[&e];
            self.sum -= self.quantized(k);
            self.state[k] = (self.state[k] as i64 + dz as i64) as u32;
            self.sum += self.quantized(k);
        }
    }

    pub fn value(&self) -> f64 {
        self.sum as f64 / CHI_SCALE
    }
}

/// Adjacency bitsets with per-vertex triangle counts, updated one edge at a
/// time. Only meaningful for simple graphs.
#[derive(Debug, Clone)]
pub struct LocalTriangles {
    words: usize,
    bits: Vec<u64>,
    local: Vec<u64>,
    degree: Vec<u64>,
    total: u64,
}

impl LocalTriangles {
    pub fn new(n: usize, x: &EdgeVector) -> Result<Self> {
        if !x.is_square_free() {
            return Err(Error::Config(
                "clustering and triangle statistics need a simple graph".into(),
            ));
        }
        let words = n.div_ceil(64).max(1);
        let mut t = LocalTriangles {
            words,
            bits: vec![0; words * n],
            local: vec![0; n],
            degree: vec![0; n],
            total: 0,
        };
        for e in x.support() {
            t.insert(e);
        }
        Ok(t)
    }

    fn row(&self, v: usize) -> &[u64] {
        &self.bits[v * self.words..(v + 1) * self.words]
    }

    fn has(&self, u: usize, v: usize) -> bool {
        self.bits[u * self.words + v / 64] >> (v % 64) & 1 == 1
    }

    fn flip(&mut self, u: usize, v: usize) {
        self.bits[u * self.words + v / 64] ^= 1 << (v % 64);
        self.bits[v * self.words + u / 64] ^= 1 << (u % 64);
    }

    /// Common neighbours of `u` and `v`.
    fn common(&self, u: usize, v: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for (k, (a, b)) in self.row(u).iter().zip(self.row(v)).enumerate() {
            let mut word = a & b;
            while word != 0 {
                out.push(k * 64 + word.trailing_zeros() as usize);
                word &= word - 1;
            }
        }
        out
    }

    pub fn insert(&mut self, e: Edge) {
        let (u, v) = (e.lo(), e.hi());
        debug_assert!(!self.has(u, v));
        let common = self.common(u, v);
        for &w in &common {
            self.local[w] += 1;
        }
        let c = common.len() as u64;
        self.local[u] += c;
        self.local[v] += c;
        self.total += c;
        self.degree[u] += 1;
        self.degree[v] += 1;
        self.flip(u, v);
    }

    pub fn remove(&mut self, e: Edge) {
        let (u, v) = (e.lo(), e.hi());
        debug_assert!(self.has(u, v));
        self.flip(u, v);
        let common = self.common(u, v);
        for &w in &common {
            self.local[w] -= 1;
        }
        let c = common.len() as u64;
        self.local[u] -= c;
        self.local[v] -= c;
        self.total -= c;
        self.degree[u] -= 1;
        self.degree[v] -= 1;
    }

    /// Applies a square-free move to the stored simple graph.
    pub fn apply(&mut self, mv: &Move) {
        for (e, z) in mv.iter() {
            if z < 0 {
                self.remove(e);
            }
        }
        for (e, z) in mv.iter() {
            if z > 0 {
                self.insert(e);
            }
        }
    }

    pub fn triangles(&self) -> u64 {
        self.total
    }

    /// Mean over vertices of degree at least two of
    /// `triangles(v) / C(deg(v), 2)`; zero if there are none.
    pub fn clustering(&self) -> f64 {
        let mut sum = 0.0;
        let mut count = 0usize;
        for (&t, &d) in self.local.iter().zip(&self.degree) {
            if d >= 2 {
                sum += t as f64 / (d * (d - 1) / 2) as f64;
                count += 1;
            }
        }
        if count == 0 {
            0.0
        } else {
            sum / count as f64
        }
    }
}

/// Watts-Strogatz clustering coefficient of a simple graph.
pub fn clustering_coefficient(graph: &Graph, x: &EdgeVector) -> Result<f64> {
    Ok(LocalTriangles::new(graph.vertex_count(), x)?.clustering())
}

/// Number of 3-cycles of a simple graph.
pub fn triangle_count(graph: &Graph, x: &EdgeVector) -> Result<u64> {
    Ok(LocalTriangles::new(graph.vertex_count(), x)?.triangles())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatKind {
    Chi2,
    Clustering,
    Triangles,
}

impl StatKind {
    pub fn name(self) -> &'static str {
        match self {
            StatKind::Chi2 => "chi2",
            StatKind::Clustering => "clustering",
            StatKind::Triangles => "triangles",
        }
    }
}

impl fmt::Display for StatKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StatKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "chi2" | "chisq" | "chi-square" => Ok(StatKind::Chi2),
            "clustering" => Ok(StatKind::Clustering),
            "triangles" => Ok(StatKind::Triangles),
            other => Err(Error::Config(format!("unknown statistic {other:?}"))),
        }
    }
}

/// Tracks a list of statistics along a chain.
#[derive(Debug, Clone)]
pub struct StatTracker {
    kinds: Vec<StatKind>,
    chi: Option<ChiSquareTracker>,
    local: Option<LocalTriangles>,
}

impl StatTracker {
    /// `fit` is required when `kinds` contains [`StatKind::Chi2`].
    pub fn new(
        graph: &Graph,
        x: &EdgeVector,
        kinds: &[StatKind],
        fit: Option<&BetaFit>,
        caps: &Capacities,
    ) -> Result<Self> {
        let chi = if kinds.contains(&StatKind::Chi2) {
            let fit = fit.ok_or_else(|| Error::Config("chi-square needs a fitted model".into()))?;
            Some(ChiSquareTracker::new(graph, x, fit, caps)?)
        } else {
            None
        };
        let local = if kinds.iter().any(|k| *k != StatKind::Chi2) {
            Some(LocalTriangles::new(graph.vertex_count(), x)?)
        } else {
            None
        };
        Ok(StatTracker {
            kinds: kinds.to_vec(),
            chi,
            local,
        })
    }

    pub fn kinds(&self) -> &[StatKind] {
        &self.kinds
    }

    pub fn apply(&mut self, mv: &Move) {
        if let Some(chi) = &mut self.chi {
            chi.apply(mv);
        }
        if let Some(local) = &mut self.local {
            local.apply(mv);
        }
    }

    pub fn value(&self, kind: StatKind) -> f64 {
        match kind {
            StatKind::Chi2 => self.chi.as_ref().map_or(f64::NAN, ChiSquareTracker::value),
            StatKind::Clustering => self.local.as_ref().map_or(f64::NAN, LocalTriangles::clustering),
            StatKind::Triangles => self.local.as_ref().map_or(f64::NAN, |l| l.triangles() as f64),
        }
    }

    /// Current values in the order of [`StatTracker::kinds`].
    pub fn values(&self) -> Vec<f64> {
        self.kinds.iter().map(|&k| self.value(k)).collect()
    }
}
