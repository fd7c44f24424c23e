//! Problem parameters: horizon, time grid, rate profiles, cost model, seeds
//! and the problem variant being solved.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::network::DegreeDistribution;

pub const DEFAULT_GRID_POINTS: usize = 201;
pub const DEFAULT_N_SWEEP: usize = 30;
pub const DEFAULT_FIXED_POINT_TOL: f64 = 1e-6;
/// `γ(t) = 10 β(t)` unless a scenario overrides it.
pub const DEFAULT_GAMMA_FACTOR: f64 = 10.0;
pub const DEFAULT_COST_WEIGHT: f64 = 25.0;
pub const DEFAULT_SEED_FRACTION: f64 = 0.01;

/// Uniform grid `t_j = T j / (n - 1)`, `j = 0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn uniform(horizon: f64, points: usize) -> Result<Self> {
        if !horizon.is_finite() || horizon <= 0.0 {
            return Err(Error::Validation(format!("horizon T must be positive, got {horizon}")));
        }
        if points < 2 {
            return Err(Error::Validation(format!("n_grid must be at least 2, got {points}")));
        }
        let last = (points - 1) as f64;
        let mut times: Vec<f64> = (0..points).map(|j| horizon * j as f64 / last).collect();
        times[points - 1] = horizon;
        Ok(TimeGrid { times })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    /// Uniform spacing between grid points.
    pub fn step(&self) -> f64 {
        self.horizon() / (self.times.len() - 1) as f64
    }
}

/// A non-negative function of time, used for `β(t)` and `γ(t)`.
#[derive(Debug, Clone, PartialEq)]
pub enum TimeProfile {
    Constant(f64),
    /// Logistic curve `peak / (1 + exp(-steepness (t - midpoint)))`.
    Sigmoid { peak: f64, steepness: f64, midpoint: f64 },
    /// Linear interpolation between `(t, value)` knots with ascending `t`,
    /// held constant beyond the first and last knot.
    PiecewiseLinear(Vec<(f64, f64)>),
}

impl TimeProfile {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            TimeProfile::Constant(v) => *v,
            TimeProfile::Sigmoid { peak, steepness, midpoint } => {
                peak / (1.0 + libm::exp(-steepness * (t - midpoint)))
            }
            TimeProfile::PiecewiseLinear(knots) => {
                let (first, last) = (knots[0], knots[knots.len() - 1]);
                if t <= first.0 {
                    return first.1;
                }
                if t >= last.0 {
                    return last.1;
                }
                let idx = knots.partition_point(|(kt, _)| *kt <= t);
                let (t0, v0) = knots[idx - 1];
                let (t1, v1) = knots[idx];
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
        }
    }

    /// Pointwise evaluation on `grid`.
    pub fn sample(&self, grid: &[f64]) -> Vec<f64> {
        grid.iter().map(|&t| self.eval(t)).collect()
    }

    /// The same profile multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> TimeProfile {
        match self {
            TimeProfile::Constant(v) => TimeProfile::Constant(v * factor),
            TimeProfile::Sigmoid { peak, steepness, midpoint } => TimeProfile::Sigmoid {
                peak: peak * factor,
                steepness: *steepness,
                midpoint: *midpoint,
            },
            TimeProfile::PiecewiseLinear(knots) => {
                TimeProfile::PiecewiseLinear(knots.iter().map(|&(t, v)| (t, v * factor)).collect())
            }
        }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        let bad = |what: &str| Err(Error::Validation(format!("{name}: {what}")));
        match self {
            TimeProfile::Constant(v) => {
                if !v.is_finite() || *v < 0.0 {
                    return bad("constant value must be finite and non-negative");
                }
            }
            TimeProfile::Sigmoid { peak, steepness, midpoint } => {
                if !peak.is_finite() || *peak < 0.0 {
                    return bad("sigmoid peak must be finite and non-negative");
                }
                if !steepness.is_finite() || !midpoint.is_finite() {
                    return bad("sigmoid steepness and midpoint must be finite");
                }
            }
            TimeProfile::PiecewiseLinear(knots) => {
                if knots.is_empty() {
                    return bad("piecewise-linear profile needs at least one knot");
                }
                if knots.iter().any(|(t, v)| !t.is_finite() || !v.is_finite() || *v < 0.0) {
                    return bad("knots must be finite with non-negative values");
                }
                if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return bad("knot times must be strictly ascending");
                }
            }
        }
        Ok(())
    }
}

/// Quadratic running cost `g_k(u) = c_k u²` with `c_k = b p_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModel {
    pub b: f64,
}

impl CostModel {
    pub fn new(b: f64) -> Self {
        CostModel { b }
    }

    pub fn coefficient(&self, p_k: f64) -> f64 {
        self.b * p_k
    }

    /// `c_k` for every class of `dist`, in support order.
    pub fn coefficients(&self, dist: &DegreeDistribution) -> Vec<f64> {
        dist.probabilities().iter().map(|&p| self.coefficient(p)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !self.b.is_finite() || self.b <= 0.0 {
            return Err(Error::Validation(format!("cost weight b must be positive, got {}", self.b)));
        }
        Ok(())
    }
}

/// `g(u) = c u²`.
#[inline]
pub fn running_cost(coefficient: f64, u: f64) -> f64 {
    coefficient * u * u
}

/// `g'(u) = 2 c u`.
#[inline]
pub fn marginal_cost(coefficient: f64, u: f64) -> f64 {
    2.0 * coefficient * u
}

/// Inverse of [`marginal_cost`]: the `u` with `g'(u) = x`.
#[inline]
pub fn marginal_cost_inverse(coefficient: f64, x: f64) -> f64 {
    x / (2.0 * coefficient)
}

#[derive(Debug, Clone, PartialEq)]
pub enum SeedSpec {
    /// `i_{0k} = i0` in every class.
    Uniform(f64),
    /// One `i_{0k}` per class, in support order.
    PerClass(Vec<f64>),
    /// Seeds are optimized subject to `Σ p_k i_{0k} = budget`.
    Optimize { budget: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variant {
    FixedSeed,
    FixedBudget { budget: f64 },
    Joint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSettings {
    /// Maximum number of forward-backward sweeps.
    pub n_sweep: usize,
    /// Early exit once the relative sup-norm change of the controls between
    /// sweeps drops below this.
    pub fixed_point_tol: f64,
    /// Relaxation of the control update; 1 replaces the controls outright.
    pub damping: f64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            n_sweep: DEFAULT_N_SWEEP,
            fixed_point_tol: DEFAULT_FIXED_POINT_TOL,
            damping: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub dist: DegreeDistribution,
    pub grid: TimeGrid,
    pub beta: TimeProfile,
    pub gamma: TimeProfile,
    pub cost: CostModel,
    pub seed: SeedSpec,
    pub variant: Variant,
    pub sweep: SweepSettings,
}

impl Scenario {
    /// Scenario with the default grid, `γ = 10 β`, `b = 25`, uniform seeds
    /// `i0 = 0.01` and the fixed-seed variant.
    pub fn new(dist: DegreeDistribution, horizon: f64, beta: TimeProfile) -> Result<Self> {
        let grid = TimeGrid::uniform(horizon, DEFAULT_GRID_POINTS)?;
        let gamma = beta.scaled(DEFAULT_GAMMA_FACTOR);
        Ok(Scenario {
            dist,
            grid,
            beta,
            gamma,
            cost: CostModel::new(DEFAULT_COST_WEIGHT),
            seed: SeedSpec::Uniform(DEFAULT_SEED_FRACTION),
            variant: Variant::FixedSeed,
            sweep: SweepSettings::default(),
        })
    }

    pub fn with_grid_points(mut self, points: usize) -> Result<Self> {
        self.grid = TimeGrid::uniform(self.horizon(), points)?;
        Ok(self)
    }

    pub fn with_horizon(mut self, horizon: f64) -> Result<Self> {
        self.grid = TimeGrid::uniform(horizon, self.grid.len())?;
        Ok(self)
    }

    pub fn with_gamma(mut self, gamma: TimeProfile) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_cost_weight(mut self, b: f64) -> Self {
        self.cost = CostModel::new(b);
        self
    }

    pub fn with_seed(mut self, seed: SeedSpec) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_sweep(mut self, sweep: SweepSettings) -> Self {
        self.sweep = sweep;
        self
    }

    pub fn horizon(&self) -> f64 {
        self.grid.horizon()
    }

    pub fn times(&self) -> &[f64] {
        self.grid.times()
    }

    pub fn n_classes(&self) -> usize {
        self.dist.len()
    }

    pub fn beta_samples(&self) -> Vec<f64> {
        self.beta.sample(self.times())
    }

    pub fn gamma_samples(&self) -> Vec<f64> {
        self.gamma.sample(self.times())
    }

    pub fn cost_coefficients(&self) -> Vec<f64> {
        self.cost.coefficients(&self.dist)
    }

    /// Per-class seed vector. For optimized seeds this is the uniform feasible
    /// start `i_{0k} = B_{i0}`.
    pub fn initial_seed(&self) -> Vec<f64> {
        match &self.seed {
            SeedSpec::Uniform(i0) => vec![*i0; self.n_classes()],
            SeedSpec::PerClass(v) => v.clone(),
            SeedSpec::Optimize { budget } => vec![*budget; self.n_classes()],
        }
    }

    /// Seed budget `B_{i0} = Σ p_k i_{0k}`.
    pub fn seed_budget(&self) -> f64 {
        match &self.seed {
            SeedSpec::Optimize { budget } => *budget,
            _ => self
                .dist
                .probabilities()
                .iter()
                .zip(self.initial_seed())
                .map(|(p, i0)| p * i0)
                .sum(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.beta.validate("beta")?;
        self.gamma.validate("gamma")?;
        self.cost.validate()?;
        match &self.seed {
            SeedSpec::Uniform(i0) => check_seed_fraction("i0", *i0)?,
            SeedSpec::PerClass(v) => {
                if v.len() != self.n_classes() {
                    return Err(Error::Validation(format!(
                        "i0_vector has {} entries but the network has {} degree classes",
                        v.len(),
                        self.n_classes()
                    )));
                }
                for x in v {
                    check_seed_fraction("i0_vector", *x)?;
                }
            }
            SeedSpec::Optimize { budget } => {
                if !budget.is_finite() || *budget <= 0.0 || *budget > 1.0 {
                    return Err(Error::Validation(format!("B_i0 must lie in (0, 1], got {budget}")));
                }
            }
        }
        if let Variant::FixedBudget { budget } = self.variant {
            if !budget.is_finite() || budget <= 0.0 {
                return Err(Error::Validation(format!("budget B must be positive, got {budget}")));
            }
        }
        if self.sweep.n_sweep == 0 {
            return Err(Error::Validation("n_sweep must be at least 1".to_string()));
        }
        if !(self.sweep.fixed_point_tol > 0.0) {
            return Err(Error::Validation("fixed_point_tol must be positive".to_string()));
        }
        if !(self.sweep.damping > 0.0 && self.sweep.damping <= 1.0) {
            return Err(Error::Validation("damping must lie in (0, 1]".to_string()));
        }
        Ok(())
    }
}

fn check_seed_fraction(name: &str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::Validation(format!("{name} must lie in [0, 1], got {value}")));
    }
    Ok(())
}

/// True when consecutive samples never increase by more than `tol`.
pub(crate) fn samples_non_increasing(samples: &[f64], tol: f64) -> bool {
    samples.windows(2).all(|w| w[1] <= w[0] + tol)
}

/// True when second differences of the samples are all `>= -tol`.
pub(crate) fn samples_convex(samples: &[f64], tol: f64) -> bool {
    samples.windows(3).all(|w| w[2] - 2.0 * w[1] + w[0] >= -tol)
}
