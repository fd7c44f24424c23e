//! Degree distributions and the quantities derived from them.
//!
//! A [`DegreeDistribution`] lives on the contiguous support
//! `K = {k_min, ..., k_max}`. Alongside `p_k` it stores the excess-degree
//! weights used by the mean-field dynamics, `q_k = (k+1) p_{k+1} / k̄`, for
//! every `k` in the support. `q_{k_max}` is zero because `p_{k_max+1}` lies
//! outside the support, and `q_{k_min-1}` is not stored since the infection
//! pressure sums `q_l i_l` over `l ∈ K` only.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};

const NORMALIZATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDistribution {
    k_min: u32,
    p: Vec<f64>,
    q: Vec<f64>,
    k_bar: f64,
}

impl DegreeDistribution {
    /// Normalizes non-negative `weights` over `k_min, k_min + 1, ...`.
    pub fn from_weights(k_min: u32, weights: &[f64]) -> Result<Self> {
        if k_min == 0 {
            return Err(Error::Parameter("k_min must be a positive integer".to_string()));
        }
        if weights.is_empty() {
            return Err(Error::Parameter("degree support is empty".to_string()));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::Parameter(format!("degree weight {w} is negative or not finite")));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::Parameter("degree weights sum to zero".to_string()));
        }
        let p: Vec<f64> = weights.iter().map(|w| w / total).collect();
        Ok(Self::from_normalized(k_min, p))
    }

    fn from_normalized(k_min: u32, p: Vec<f64>) -> Self {
        let k_bar: f64 = p
            .iter()
            .enumerate()
            .map(|(c, pk)| (k_min as f64 + c as f64) * pk)
            .sum();
        let n = p.len();
        let q = (0..n)
            .map(|c| {
                if c + 1 < n {
                    (k_min as f64 + c as f64 + 1.0) * p[c + 1] / k_bar
                } else {
                    0.0
                }
            })
            .collect();
        DegreeDistribution { k_min, p, q, k_bar }
    }

    pub fn k_min(&self) -> u32 {
        self.k_min
    }

    pub fn k_max(&self) -> u32 {
        self.k_min + self.p.len() as u32 - 1
    }

    /// Number of degree classes in the support.
    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// Degree of the class at position `class` in the support.
    pub fn degree(&self, class: usize) -> u32 {
        self.k_min + class as u32
    }

    pub fn degrees(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.p.len()).map(move |c| self.degree(c))
    }

    /// Support position of degree `k`, if `k` lies in the support.
    pub fn class_of(&self, k: u32) -> Option<usize> {
        (k >= self.k_min && k <= self.k_max()).then(|| (k - self.k_min) as usize)
    }

    /// `p_k`, zero outside the support.
    pub fn p(&self, k: u32) -> f64 {
        self.class_of(k).map_or(0.0, |c| self.p[c])
    }

    /// `p_k` for every class, in support order.
    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    /// `q_k` for every class, in support order.
    pub fn excess(&self) -> &[f64] {
        &self.q
    }

    pub fn mean_degree(&self) -> f64 {
        self.k_bar
    }

    /// `Σ_{k∈K} k`.
    pub fn degree_sum(&self) -> f64 {
        self.degrees().map(f64::from).sum()
    }

    /// Largest excess weight `max_k q_k`.
    pub fn max_excess(&self) -> f64 {
        self.q.iter().copied().fold(0.0, f64::max)
    }

    /// Neighbor distribution `r_k = k p_k / k̄`, in support order.
    pub fn neighbor_distribution(&self) -> Vec<f64> {
        self.degrees()
            .zip(&self.p)
            .map(|(k, pk)| f64::from(k) * pk / self.k_bar)
            .collect()
    }
}

/// Poisson law `e^{-λ} λ^k / k!` restricted to `[k_min, k_max]` and renormalized.
pub fn build_poisson_truncated(lambda: f64, k_min: u32, k_max: u32) -> Result<DegreeDistribution> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::Parameter(format!("poisson rate must be finite and positive, got {lambda}")));
    }
    check_range(k_min, k_max)?;
    // log-weights avoid overflow of λ^k and k! for large supports
    let log_w: Vec<f64> = (k_min..=k_max)
        .map(|k| f64::from(k) * libm::log(lambda) - libm::lgamma(f64::from(k) + 1.0))
        .collect();
    let top = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = log_w.iter().map(|lw| libm::exp(lw - top)).collect();
    DegreeDistribution::from_weights(k_min, &weights)
}

/// Power law `ω k^{-α}` on `[k_min, k_max]`.
pub fn build_powerlaw(alpha: f64, k_min: u32, k_max: u32) -> Result<DegreeDistribution> {
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::Parameter(format!("power-law exponent must be finite and positive, got {alpha}")));
    }
    check_range(k_min, k_max)?;
    let weights: Vec<f64> = (k_min..=k_max).map(|k| libm::pow(f64::from(k), -alpha)).collect();
    DegreeDistribution::from_weights(k_min, &weights)
}

fn check_range(k_min: u32, k_max: u32) -> Result<()> {
    if k_min == 0 {
        return Err(Error::Parameter("k_min must be a positive integer".to_string()));
    }
    if k_min > k_max {
        return Err(Error::Parameter(format!("k_min = {k_min} exceeds k_max = {k_max}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EmpiricalOptions {
    /// Degrees above the cap are counted in the cap's class. `None` keeps the
    /// full observed support.
    pub clip_max_degree: Option<u32>,
}

/// Empirical distribution `p_k = N_k / N` of the nodes appearing in `edges`.
///
/// Duplicate edges count once per occurrence and a self-loop adds two to its
/// node's degree. The support runs from the smallest to the largest observed
/// degree; degrees inside that range with no nodes get `p_k = 0`.
pub fn build_empirical<I, A, B>(edges: I) -> Result<DegreeDistribution>
where
    I: IntoIterator<Item = (A, B)>,
    A: AsRef<str>,
    B: AsRef<str>,
{
    build_empirical_with(edges, EmpiricalOptions::default())
}

pub fn build_empirical_with<I, A, B>(edges: I, options: EmpiricalOptions) -> Result<DegreeDistribution>
where
    I: IntoIterator<Item = (A, B)>,
    A: AsRef<str>,
    B: AsRef<str>,
{
    let degrees = node_degrees(edges);
    if degrees.is_empty() {
        return Err(Error::EmptyEdgeList);
    }
    let cap = options.clip_max_degree;
    if cap == Some(0) {
        return Err(Error::Parameter("degree cap must be positive".to_string()));
    }
    let clipped = |d: u32| cap.map_or(d, |c| d.min(c));
    let k_min = degrees.values().map(|&d| clipped(d)).min().unwrap_or(1);
    let k_max = degrees.values().map(|&d| clipped(d)).max().unwrap_or(1);
    let mut counts = alloc::vec![0.0; (k_max - k_min + 1) as usize];
    for &d in degrees.values() {
        counts[(clipped(d) - k_min) as usize] += 1.0;
    }
    DegreeDistribution::from_weights(k_min, &counts)
}

/// Degree of every node named in `edges`.
pub(crate) fn node_degrees<I, A, B>(edges: I) -> BTreeMap<String, u32>
where
    I: IntoIterator<Item = (A, B)>,
    A: AsRef<str>,
    B: AsRef<str>,
{
    let mut degrees: BTreeMap<String, u32> = BTreeMap::new();
    for (a, b) in edges {
        *degrees.entry(a.as_ref().to_string()).or_insert(0) += 1;
        *degrees.entry(b.as_ref().to_string()).or_insert(0) += 1;
    }
    degrees
}

/// Parses an edge list: one edge per line as two whitespace-separated node
/// identifiers. Blank lines and lines starting with `#` are skipped.
pub fn parse_edge_list(text: &str) -> Result<Vec<(String, String)>> {
    let mut edges = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        match (fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(b), None) => edges.push((a.to_string(), b.to_string())),
            _ => {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("expected two node identifiers, got {trimmed:?}"),
                })
            }
        }
    }
    if edges.is_empty() {
        return Err(Error::EmptyEdgeList);
    }
    Ok(edges)
}

/// Excess-degree distribution `q_k = (k+1) p_{k+1} / k̄` for every `k` with
/// `k + 1` in the support, i.e. `k ∈ {k_min - 1, ..., k_max - 1}`.
pub fn excess_distribution(dist: &DegreeDistribution) -> BTreeMap<u32, f64> {
    dist.degrees()
        .zip(dist.probabilities())
        .map(|(k, pk)| (k - 1, f64::from(k) * pk / dist.mean_degree()))
        .collect()
}

/// Checks the normalization invariants of `dist` at `tol`.
pub fn check_invariants(dist: &DegreeDistribution, tol: f64) -> core::result::Result<(), String> {
    let total: f64 = dist.probabilities().iter().sum();
    if (total - 1.0).abs() > tol {
        return Err(format!("probabilities sum to {total}"));
    }
    if dist.probabilities().iter().any(|&p| p < 0.0) {
        return Err("negative probability".to_string());
    }
    let mean: f64 = dist.degrees().zip(dist.probabilities()).map(|(k, p)| f64::from(k) * p).sum();
    if (mean - dist.mean_degree()).abs() > tol * dist.mean_degree().max(1.0) {
        return Err(format!("mean degree {} disagrees with Σ k p_k = {mean}", dist.mean_degree()));
    }
    let r_total: f64 = dist.neighbor_distribution().iter().sum();
    if (r_total - 1.0).abs() > tol {
        return Err(format!("neighbor distribution sums to {r_total}"));
    }
    Ok(())
}

/// Default tolerance for [`check_invariants`].
pub const INVARIANT_TOL: f64 = NORMALIZATION_TOL;
