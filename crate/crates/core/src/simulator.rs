//! Agent-based SI simulation on explicit graphs.
//!
//! Time advances synchronously on the scenario grid. In the step from `t_j`
//! to `t_{j+1}` a susceptible node with `m` infected neighbors is infected by
//! contact with probability `1 − (1 − β(t_j) Δt)^m` and, independently, by
//! recruitment with probability `min(γ(t_j) u_k(t_j) Δt, 1)`. Nodes infected
//! during a step only become infectious from the next step on.
//!
//! Every run draws from its own ChaCha8 stream, selected by the run index
//! from a generator seeded with `rng_seed`. Runs can therefore execute in any
//! order, or in parallel, and still combine to the same outcome.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::exec::{Executor, Sequential};
use crate::network::DegreeDistribution;
use crate::scenario::Scenario;

/// Undirected multigraph in compressed adjacency form. A self-loop appears
/// twice in its node's list, so list lengths are degrees.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
}

impl Graph {
    /// Graph on nodes `0..n` from undirected edges.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Result<Self> {
        if n > u32::MAX as usize {
            return Err(Error::Parameter(format!("{n} nodes exceed the supported maximum")));
        }
        let mut degree = vec![0usize; n];
        for &(a, b) in edges {
            if a as usize >= n || b as usize >= n {
                return Err(Error::Parameter(format!("edge ({a}, {b}) refers to a node outside 0..{n}")));
            }
            degree[a as usize] += 1;
            degree[b as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..n].to_vec();
        let mut neighbors = vec![0u32; offsets[n]];
        for &(a, b) in edges {
            neighbors[fill[a as usize]] = b;
            fill[a as usize] += 1;
            neighbors[fill[b as usize]] = a;
            fill[b as usize] += 1;
        }
        Ok(Graph { offsets, neighbors })
    }

    /// Graph from named edges, numbering nodes by first appearance.
    pub fn from_named_edges<A: AsRef<str>, B: AsRef<str>>(edges: &[(A, B)]) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::EmptyEdgeList);
        }
        let mut ids: BTreeMap<String, u32> = BTreeMap::new();
        let mut id = |name: &str| -> u32 {
            let next = ids.len() as u32;
            *ids.entry(String::from(name)).or_insert(next)
        };
        let numbered: Vec<(u32, u32)> =
            edges.iter().map(|(a, b)| (id(a.as_ref()), id(b.as_ref()))).collect();
        Graph::from_edges(ids.len(), &numbered)
    }

    /// Configuration-model graph: `n` degrees drawn i.i.d. from `dist`, half
    /// edges paired uniformly at random, one unpaired half edge dropped when
    /// the total is odd. Self-loops and multi-edges are kept.
    pub fn configuration_model(dist: &DegreeDistribution, n: usize, rng_seed: u64) -> Result<Self> {
        Graph::configuration_model_with(dist, n, &mut ChaCha8Rng::seed_from_u64(rng_seed))
    }

    pub fn configuration_model_with<R: Rng + ?Sized>(
        dist: &DegreeDistribution,
        n: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::Parameter(format!("a graph needs at least 2 nodes, got {n}")));
        }
        let mut cdf = Vec::with_capacity(dist.len());
        let mut acc = 0.0;
        for &p in dist.probabilities() {
            acc += p;
            cdf.push(acc);
        }
        let mut stubs = Vec::new();
        for v in 0..n as u32 {
            let x: f64 = rng.random::<f64>() * acc;
            let class = cdf.partition_point(|&c| c <= x).min(dist.len() - 1);
            let k = dist.degree(class);
            stubs.extend(core::iter::repeat(v).take(k as usize));
        }
        stubs.shuffle(rng);
        if stubs.len() % 2 == 1 {
            stubs.pop();
        }
        let edges: Vec<(u32, u32)> = stubs.chunks_exact(2).map(|c| (c[0], c[1])).collect();
        Graph::from_edges(n, &edges)
    }

    /// Small-world graph: a ring where every node links to its `k/2`
    /// nearest neighbors on each side, with each edge's far end rewired
    /// uniformly at random with probability `rewire`. Rewiring avoids
    /// self-loops and duplicate edges.
    pub fn watts_strogatz(n: usize, k: usize, rewire: f64, rng_seed: u64) -> Result<Self> {
        if k % 2 != 0 || k == 0 || k >= n {
            return Err(Error::Parameter(format!("ring degree {k} must be even, positive and below n = {n}")));
        }
        if !(0.0..=1.0).contains(&rewire) {
            return Err(Error::Parameter(format!("rewiring probability {rewire} outside [0, 1]")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let mut adj: Vec<alloc::collections::BTreeSet<u32>> = vec![Default::default(); n];
        for v in 0..n {
            for j in 1..=k / 2 {
                let w = (v + j) % n;
                adj[v].insert(w as u32);
                adj[w].insert(v as u32);
            }
        }
        for j in 1..=k / 2 {
            for v in 0..n {
                let w = ((v + j) % n) as u32;
                if rng.random::<f64>() >= rewire || !adj[v].contains(&w) {
                    continue;
                }
                if adj[v].len() >= n - 1 {
                    continue;
                }
                let target = loop {
                    let t = rng.random_range(0..n as u32);
                    if t as usize != v && !adj[v].contains(&t) {
                        break t;
                    }
                };
                adj[v].remove(&w);
                adj[w as usize].remove(&(v as u32));
                adj[v].insert(target);
                adj[target as usize].insert(v as u32);
            }
        }
        let edges: Vec<(u32, u32)> = adj
            .iter()
            .enumerate()
            .flat_map(|(v, set)| set.iter().filter(move |&&w| (v as u32) < w).map(move |&w| (v as u32, w)))
            .collect();
        Graph::from_edges(n, &edges)
    }

    pub fn n_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of undirected edges, self-loops included.
    pub fn n_edges(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    /// Number of nodes of each degree.
    pub fn degree_histogram(&self) -> BTreeMap<usize, usize> {
        let mut hist = BTreeMap::new();
        for v in 0..self.n_nodes() {
            *hist.entry(self.degree(v)).or_insert(0) += 1;
        }
        hist
    }

    /// Empirical degree distribution of the nodes with at least one edge.
    pub fn degree_distribution(&self) -> Result<DegreeDistribution> {
        let hist = self.degree_histogram();
        let (k_min, k_max) = match (hist.range(1..).next(), hist.range(1..).next_back()) {
            (Some((&lo, _)), Some((&hi, _))) => (lo, hi),
            _ => return Err(Error::EmptyEdgeList),
        };
        let mut weights = vec![0.0; k_max - k_min + 1];
        for (&k, &count) in hist.range(1..) {
            weights[k - k_min] = count as f64;
        }
        DegreeDistribution::from_weights(k_min as u32, &weights)
    }

    /// Mean local clustering coefficient over nodes of degree at least 2,
    /// counting distinct neighbors only.
    pub fn average_clustering(&self) -> f64 {
        let n = self.n_nodes();
        let mut mark = vec![usize::MAX; n];
        let (mut total, mut counted) = (0.0, 0usize);
        for v in 0..n {
            let mut nbrs: Vec<u32> = self.neighbors(v).iter().copied().filter(|&w| w as usize != v).collect();
            nbrs.sort_unstable();
            nbrs.dedup();
            if nbrs.len() < 2 {
                continue;
            }
            for &w in &nbrs {
                mark[w as usize] = v;
            }
            let mut links = 0usize;
            for &w in &nbrs {
                let mut seen: Vec<u32> = self.neighbors(w as usize).to_vec();
                seen.sort_unstable();
                seen.dedup();
                links += seen.iter().filter(|&&x| mark[x as usize] == v && x != w).count();
            }
            let d = nbrs.len() as f64;
            total += links as f64 / (d * (d - 1.0));
            counted += 1;
        }
        if counted == 0 {
            0.0
        } else {
            total / counted as f64
        }
    }
}

/// How initially infected nodes are chosen in each run.
#[derive(Debug, Clone, PartialEq)]
pub enum SeedRule {
    /// Exactly `round(i0 · n)` nodes chosen uniformly at random.
    Uniform(f64),
    /// Each node of degree `k` is seeded independently with probability
    /// `i_{0k}`, given in support order of the scenario distribution.
    PerClass(Vec<f64>),
}

/// Graph used by the runs.
#[derive(Debug, Clone, Copy)]
pub enum Network<'a> {
    /// One graph shared by all runs.
    Fixed(&'a Graph),
    /// A fresh configuration-model graph with `nodes` nodes in every run.
    Regenerated { dist: &'a DegreeDistribution, nodes: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    pub grid: Vec<f64>,
    /// Mean infected fraction over runs at each grid point.
    pub mean_i: Vec<f64>,
    /// Sample standard deviation over runs (zero for a single run).
    pub std_i: Vec<f64>,
    pub n_runs: usize,
    pub rng_seed: u64,
    /// Infected fraction at `T` in each run, in run order.
    pub final_i: Vec<f64>,
}

/// Simulates `n_runs` independent runs sequentially.
pub fn simulate_si(
    network: Network<'_>,
    scn: &Scenario,
    controls: Option<&Trajectory>,
    seed: &SeedRule,
    n_runs: usize,
    rng_seed: u64,
) -> Result<SimOutcome> {
    simulate_si_with(network, scn, controls, seed, n_runs, rng_seed, &Sequential)
}

/// Like [`simulate_si`], distributing runs through `exec`.
pub fn simulate_si_with<E: Executor + ?Sized + Sync>(
    network: Network<'_>,
    scn: &Scenario,
    controls: Option<&Trajectory>,
    seed: &SeedRule,
    n_runs: usize,
    rng_seed: u64,
    exec: &E,
) -> Result<SimOutcome> {
    if n_runs == 0 {
        return Err(Error::Parameter("n_runs must be at least 1".into()));
    }
    let plan = Plan::new(scn, controls, seed)?;
    let runs: Vec<Result<Vec<f64>>> = exec.map(n_runs, |run| {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        rng.set_stream(run as u64);
        match network {
            Network::Fixed(g) => Ok(plan.run(g, &mut rng)),
            Network::Regenerated { dist, nodes } => {
                let g = Graph::configuration_model_with(dist, nodes, &mut rng)?;
                Ok(plan.run(&g, &mut rng))
            }
        }
    });
    let runs: Vec<Vec<f64>> = runs.into_iter().collect::<Result<_>>()?;

    let points = plan.grid.len();
    let mut mean_i = vec![0.0; points];
    let mut std_i = vec![0.0; points];
    for j in 0..points {
        let mean = runs.iter().map(|r| r[j]).sum::<f64>() / n_runs as f64;
        mean_i[j] = mean;
        if n_runs > 1 {
            let ss: f64 = runs.iter().map(|r| (r[j] - mean) * (r[j] - mean)).sum();
            std_i[j] = libm::sqrt(ss / (n_runs - 1) as f64);
        }
    }
    Ok(SimOutcome {
        grid: plan.grid,
        mean_i,
        std_i,
        n_runs,
        rng_seed,
        final_i: runs.iter().map(|r| r[points - 1]).collect(),
    })
}

/// Per-step probabilities shared by all runs.
struct Plan {
    grid: Vec<f64>,
    k_min: u32,
    n_classes: usize,
    /// `1 − β(t_j) Δt_j` per step.
    escape: Vec<f64>,
    /// Recruitment probability per step and class, time-major.
    recruit: Vec<f64>,
    seed: SeedRule,
}

impl Plan {
    fn new(scn: &Scenario, controls: Option<&Trajectory>, seed: &SeedRule) -> Result<Self> {
        let grid = scn.times().to_vec();
        let n_classes = scn.n_classes();
        let beta = scn.beta_samples();
        let gamma = scn.gamma_samples();
        if let Some(u) = controls {
            if !u.same_shape(n_classes, &grid) {
                return Err(Error::Validation("controls do not match the scenario grid and classes".into()));
            }
        }
        match seed {
            SeedRule::Uniform(i0) if !(0.0..=1.0).contains(i0) => {
                return Err(Error::Validation(format!("i0 must lie in [0, 1], got {i0}")));
            }
            SeedRule::PerClass(v) if v.len() != n_classes || v.iter().any(|x| !(0.0..=1.0).contains(x)) => {
                return Err(Error::Validation("per-class seeds must match the classes and lie in [0, 1]".into()));
            }
            _ => {}
        }
        let steps = grid.len() - 1;
        let mut escape = Vec::with_capacity(steps);
        let mut recruit = vec![0.0; steps * n_classes];
        for j in 0..steps {
            let dt = grid[j + 1] - grid[j];
            let contact = beta[j] * dt;
            if contact > 1.0 {
                return Err(Error::StepSize { time: grid[j], value: contact });
            }
            escape.push(1.0 - contact);
            if let Some(u) = controls {
                for c in 0..n_classes {
                    recruit[j * n_classes + c] = (gamma[j] * u.get(c, j) * dt).clamp(0.0, 1.0);
                }
            }
        }
        Ok(Plan { grid, k_min: scn.dist.k_min(), n_classes, escape, recruit, seed: seed.clone() })
    }

    /// Class of a node, with degrees outside the support clamped into it.
    fn class_of(&self, degree: usize) -> usize {
        let k = degree.max(self.k_min as usize);
        (k - self.k_min as usize).min(self.n_classes - 1)
    }

    fn run<R: Rng>(&self, g: &Graph, rng: &mut R) -> Vec<f64> {
        let n = g.n_nodes();
        let class: Vec<usize> = (0..n).map(|v| self.class_of(g.degree(v))).collect();
        let mut infected = vec![false; n];
        match &self.seed {
            SeedRule::Uniform(i0) => {
                let count = libm::round(i0 * n as f64) as usize;
                for v in rand::seq::index::sample(rng, n, count.min(n)) {
                    infected[v] = true;
                }
            }
            SeedRule::PerClass(p) => {
                for v in 0..n {
                    infected[v] = rng.random::<f64>() < p[class[v]];
                }
            }
        }
        let mut pressure = vec![0u32; n];
        let mut count = 0usize;
        for v in 0..n {
            if infected[v] {
                count += 1;
                for &w in g.neighbors(v) {
                    pressure[w as usize] += 1;
                }
            }
        }

        let mut series = Vec::with_capacity(self.grid.len());
        series.push(count as f64 / n as f64);
        let mut newly = Vec::new();
        for j in 0..self.escape.len() {
            let escape = self.escape[j];
            let recruit = &self.recruit[j * self.n_classes..(j + 1) * self.n_classes];
            newly.clear();
            for v in 0..n {
                if infected[v] {
                    continue;
                }
                let m = pressure[v];
                let stay = if m == 0 { 1.0 } else { libm::pow(escape, f64::from(m)) };
                let prob = 1.0 - stay * (1.0 - recruit[class[v]]);
                if prob > 0.0 && rng.random::<f64>() < prob {
                    newly.push(v);
                }
            }
            for &v in &newly {
                infected[v] = true;
                for &w in g.neighbors(v) {
                    pressure[w as usize] += 1;
                }
            }
            count += newly.len();
            series.push(count as f64 / n as f64);
        }
        series
    }
}
