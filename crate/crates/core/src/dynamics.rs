//! Forward integration of the controlled mean-field SI equations
//!
//! ```text
//! di_k/dt = β(t) k s_k Σ_{l∈K} q_l i_l + γ(t) u_k(t) s_k,   s_k = 1 - i_k
//! ```
//!
//! with classical RK4 on the scenario grid. Rates and controls are grid
//! samples; their values at half steps are linear interpolations.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::network::DegreeDistribution;
use crate::scenario::Scenario;

/// Excursions of a state outside `[0, 1]` up to this size are rounding and
/// get clamped; anything larger is reported as an error.
pub const CLAMP_SLACK: f64 = 1e-9;

/// A per-degree-class function of time sampled on a grid.
///
/// Used for states `i_k(t)`, adjoints `λ_k(t)` and controls `u_k(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    k_min: u32,
    n_classes: usize,
    grid: Vec<f64>,
    // time-major: values[j * n_classes + class]
    values: Vec<f64>,
}

impl Trajectory {
    pub fn zeros(k_min: u32, n_classes: usize, grid: &[f64]) -> Self {
        Self::constant(k_min, n_classes, grid, 0.0)
    }

    pub fn constant(k_min: u32, n_classes: usize, grid: &[f64], value: f64) -> Self {
        Trajectory {
            k_min,
            n_classes,
            grid: grid.to_vec(),
            values: vec![value; n_classes * grid.len()],
        }
    }

    /// Builds a trajectory from `f(class, grid index)`.
    pub fn from_fn<F: FnMut(usize, usize) -> f64>(
        k_min: u32,
        n_classes: usize,
        grid: &[f64],
        mut f: F,
    ) -> Self {
        let mut values = Vec::with_capacity(n_classes * grid.len());
        for j in 0..grid.len() {
            for c in 0..n_classes {
                values.push(f(c, j));
            }
        }
        Trajectory { k_min, n_classes, grid: grid.to_vec(), values }
    }

    /// Zero trajectory on the scenario's classes and grid.
    pub fn zeros_for(scn: &Scenario) -> Self {
        Self::zeros(scn.dist.k_min(), scn.n_classes(), scn.times())
    }

    /// Trajectory on the scenario's classes and grid built from `f(class, j)`.
    pub fn for_scenario<F: FnMut(usize, usize) -> f64>(scn: &Scenario, f: F) -> Self {
        Self::from_fn(scn.dist.k_min(), scn.n_classes(), scn.times(), f)
    }

    pub fn k_min(&self) -> u32 {
        self.k_min
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn degrees(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.n_classes).map(move |c| self.k_min + c as u32)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn n_times(&self) -> usize {
        self.grid.len()
    }

    #[inline]
    pub fn get(&self, class: usize, j: usize) -> f64 {
        self.values[j * self.n_classes + class]
    }

    #[inline]
    pub fn set(&mut self, class: usize, j: usize, value: f64) {
        self.values[j * self.n_classes + class] = value;
    }

    /// All classes at grid point `j`.
    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.n_classes..(j + 1) * self.n_classes]
    }

    pub fn row_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.values[j * self.n_classes..(j + 1) * self.n_classes]
    }

    /// The time series of one class.
    pub fn class_series(&self, class: usize) -> Vec<f64> {
        (0..self.grid.len()).map(|j| self.get(class, j)).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Largest absolute entrywise difference to `other`.
    pub fn max_abs_diff(&self, other: &Trajectory) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub(crate) fn same_shape(&self, n_classes: usize, grid: &[f64]) -> bool {
        self.n_classes == n_classes && self.grid.len() == grid.len()
    }
}

/// Total infected fraction `i(t) = Σ_k p_k i_k(t)` on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateSeries {
    pub grid: Vec<f64>,
    pub i_total: Vec<f64>,
}

impl AggregateSeries {
    /// `i(T)`.
    pub fn final_value(&self) -> f64 {
        self.i_total[self.i_total.len() - 1]
    }
}

pub fn aggregate(dist: &DegreeDistribution, states: &Trajectory) -> AggregateSeries {
    let p = dist.probabilities();
    let i_total = (0..states.n_times())
        .map(|j| states.row(j).iter().zip(p).map(|(i, pk)| i * pk).sum())
        .collect();
    AggregateSeries { grid: states.grid().to_vec(), i_total }
}

/// RK4 solution of the controlled state equations from `i(0) = i0`.
pub fn integrate_state(scn: &Scenario, controls: &Trajectory, i0: &[f64]) -> Result<Trajectory> {
    Model::new(scn).integrate_state(controls, i0)
}

/// Grid-sampled coefficients of the mean-field model, shared by the state
/// and adjoint integrators.
#[derive(Debug, Clone)]
pub(crate) struct Model {
    pub(crate) k_min: u32,
    pub(crate) grid: Vec<f64>,
    pub(crate) degrees: Vec<f64>,
    pub(crate) p: Vec<f64>,
    pub(crate) q: Vec<f64>,
    pub(crate) beta: Vec<f64>,
    pub(crate) gamma: Vec<f64>,
}

impl Model {
    pub(crate) fn new(scn: &Scenario) -> Self {
        Model {
            k_min: scn.dist.k_min(),
            grid: scn.times().to_vec(),
            degrees: scn.dist.degrees().map(f64::from).collect(),
            p: scn.dist.probabilities().to_vec(),
            q: scn.dist.excess().to_vec(),
            beta: scn.beta_samples(),
            gamma: scn.gamma_samples(),
        }
    }

    pub(crate) fn n_classes(&self) -> usize {
        self.degrees.len()
    }

    /// Infection pressure `Σ_l q_l i_l`.
    #[inline]
    pub(crate) fn pressure(&self, i: &[f64]) -> f64 {
        self.q.iter().zip(i).map(|(q, i)| q * i).sum()
    }

    #[inline]
    pub(crate) fn state_rhs(&self, i: &[f64], beta: f64, gamma: f64, u: &[f64], out: &mut [f64]) {
        let theta = self.pressure(i);
        for c in 0..i.len() {
            let s = 1.0 - i[c];
            out[c] = beta * self.degrees[c] * s * theta + gamma * u[c] * s;
        }
    }

    pub(crate) fn check_controls(&self, controls: &Trajectory) -> Result<()> {
        if !controls.same_shape(self.n_classes(), &self.grid) {
            return Err(Error::Validation(format!(
                "controls have {} classes x {} points, scenario needs {} x {}",
                controls.n_classes(),
                controls.n_times(),
                self.n_classes(),
                self.grid.len()
            )));
        }
        Ok(())
    }

    pub(crate) fn integrate_state(&self, controls: &Trajectory, i0: &[f64]) -> Result<Trajectory> {
        self.check_controls(controls)?;
        let n = self.n_classes();
        if i0.len() != n {
            return Err(Error::Validation(format!(
                "seed vector has {} entries, expected {n}",
                i0.len()
            )));
        }
        if let Some(x) = i0.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::Validation(format!("initial fraction {x} outside [0, 1]")));
        }

        let mut states = Trajectory::zeros(self.k_min, n, &self.grid);
        states.row_mut(0).copy_from_slice(i0);

        let mut k1 = vec![0.0; n];
        let mut k2 = vec![0.0; n];
        let mut k3 = vec![0.0; n];
        let mut k4 = vec![0.0; n];
        let mut stage = vec![0.0; n];
        let mut u_mid = vec![0.0; n];

        for j in 0..self.grid.len() - 1 {
            let h = self.grid[j + 1] - self.grid[j];
            let beta_mid = 0.5 * (self.beta[j] + self.beta[j + 1]);
            let gamma_mid = 0.5 * (self.gamma[j] + self.gamma[j + 1]);
            let (u_a, u_b) = (controls.row(j), controls.row(j + 1));
            for c in 0..n {
                u_mid[c] = 0.5 * (u_a[c] + u_b[c]);
            }

            let cur = states.row(j).to_vec();
            self.state_rhs(&cur, self.beta[j], self.gamma[j], u_a, &mut k1);
            for c in 0..n {
                stage[c] = cur[c] + 0.5 * h * k1[c];
            }
            self.state_rhs(&stage, beta_mid, gamma_mid, &u_mid, &mut k2);
            for c in 0..n {
                stage[c] = cur[c] + 0.5 * h * k2[c];
            }
            self.state_rhs(&stage, beta_mid, gamma_mid, &u_mid, &mut k3);
            for c in 0..n {
                stage[c] = cur[c] + h * k3[c];
            }
            self.state_rhs(&stage, self.beta[j + 1], self.gamma[j + 1], u_b, &mut k4);

            let time = self.grid[j + 1];
            let next = states.row_mut(j + 1);
            for c in 0..n {
                let v = cur[c] + h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
                if !v.is_finite() {
                    return Err(Error::Blowup { index: j + 1, time });
                }
                let excess = (-v).max(v - 1.0);
                if excess > CLAMP_SLACK {
                    return Err(Error::OutOfBounds { index: j + 1, time, excess });
                }
                next[c] = v.clamp(0.0, 1.0);
            }
        }
        Ok(states)
    }

    /// State derivatives at every grid point.
    pub(crate) fn state_derivatives(&self, states: &Trajectory, controls: &Trajectory) -> Trajectory {
        let n = self.n_classes();
        let mut out = Trajectory::zeros(self.k_min, n, &self.grid);
        let mut buf = vec![0.0; n];
        for j in 0..self.grid.len() {
            self.state_rhs(states.row(j), self.beta[j], self.gamma[j], controls.row(j), &mut buf);
            out.row_mut(j).copy_from_slice(&buf);
        }
        out
    }
}
