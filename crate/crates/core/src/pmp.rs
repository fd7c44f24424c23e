//! Pontryagin optimality system for the fixed-seed problem and its
//! forward-backward sweep solution.
//!
//! With the Hamiltonian
//!
//! ```text
//! H = -Σ_j g_j(u_j) + Σ_j λ_j (β j s_j Σ_l q_l i_l + γ u_j s_j)
//! ```
//!
//! the adjoints obey
//!
//! ```text
//! dλ_k/dt = β k λ_k Σ_l q_l i_l - β q_k Σ_j λ_j j s_j + γ u_k λ_k,   λ_k(T) = p_k
//! ```
//!
//! and the maximizing control solves `g_k'(u_k) = γ λ_k s_k / μ` (`μ = 1`
//! without a budget constraint).

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::dynamics::{Model, Trajectory};
use crate::error::{Error, Result};
use crate::quadrature::trapezoid_by;
use crate::scenario::{marginal_cost, marginal_cost_inverse, running_cost, Scenario, SweepSettings};

/// Adjoint (costate) trajectory `λ_k(t)`; same layout as the states.
pub type AdjointTrajectory = Trajectory;

/// Net reward `J = spread − cost` split into its two parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reward {
    pub net: f64,
    /// `Σ p_k i_k(T)`.
    pub spread: f64,
    /// `∫ Σ g_k(u_k(t)) dt`.
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub controls: Trajectory,
    pub states: Trajectory,
    pub adjoints: AdjointTrajectory,
    /// Net reward `J`.
    pub reward: f64,
    pub spread_reward: f64,
    pub control_cost: f64,
    /// `max_{k,t} |μ g_k'(u_k) − γ λ_k s_k|` with states and adjoints
    /// recomputed from the returned controls.
    pub stationarity_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Relative sup-norm change of the controls after each sweep.
    pub control_changes: Vec<f64>,
    /// Multiplier on the running cost in the control update.
    pub multiplier: f64,
    /// Relaxation used by the returned sweep run.
    pub damping: f64,
}

/// Backward RK4 integration of the adjoint equations from `λ_k(T) = p_k`.
pub fn integrate_adjoint(
    scn: &Scenario,
    states: &Trajectory,
    controls: &Trajectory,
) -> Result<AdjointTrajectory> {
    let model = Model::new(scn);
    model.check_controls(states)?;
    model.integrate_adjoint(states, controls)
}

/// Pointwise maximizer `u_k = γ λ_k s_k / (2 c_k)` of the Hamiltonian.
pub fn maximize_hamiltonian(
    scn: &Scenario,
    states: &Trajectory,
    adjoints: &AdjointTrajectory,
) -> Result<Trajectory> {
    let sweeper = Sweeper::new(scn)?;
    sweeper.model.check_controls(states)?;
    sweeper.model.check_controls(adjoints)?;
    Ok(sweeper.control_update(states, adjoints, 1.0))
}

/// Forward-backward sweep for the fixed-seed problem, starting from `u ≡ 0`.
pub fn fbs_solve(scn: &Scenario, i0: &[f64]) -> Result<SolveReport> {
    Sweeper::new(scn)?.run(i0, 1.0, None)
}

/// Net reward of arbitrary grid-sampled `controls`.
pub fn evaluate_reward(scn: &Scenario, controls: &Trajectory, i0: &[f64]) -> Result<Reward> {
    let model = Model::new(scn);
    let states = model.integrate_state(controls, i0)?;
    Ok(reward_of(scn, &model.p, &scn.cost_coefficients(), &states, controls))
}

/// Per-capita resource `r_k = (1/p_k) ∫ g_k(u_k) dt = b ∫ u_k² dt` per degree.
pub fn normalized_resource(scn: &Scenario, controls: &Trajectory) -> BTreeMap<u32, f64> {
    let grid = scn.times();
    (0..controls.n_classes())
        .map(|c| {
            let integral = trapezoid_by(grid, |j| {
                let u = controls.get(c, j);
                u * u
            });
            (controls.k_min() + c as u32, scn.cost.b * integral)
        })
        .collect()
}

/// Resource `∫ Σ_k c_k u_k² dt` spent by `controls`.
pub fn resource_used(scn: &Scenario, controls: &Trajectory) -> f64 {
    control_cost(scn.times(), &scn.cost_coefficients(), controls)
}

/// Left-hand side of a sufficient condition and whether it is below one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub lhs: f64,
    pub holds: bool,
}

impl BoundCheck {
    fn new(lhs: f64) -> Self {
        BoundCheck { lhs, holds: lhs < 1.0 }
    }
}

/// Sufficient condition for convergence of the sweep with quadratic costs:
///
/// ```text
/// γ_M² Λ / (2 c_m) · exp((β_M K_max + γ_M u_M) T) · (e^{aT} − e^{bT}) / (a − b) < 1
/// ```
///
/// with `a = β_M (Σk) q_M` and `b = β_M K_max`. `u_max` and `lambda_max` are
/// bounds on the controls and adjoints, typically the maxima of a solve.
pub fn check_convergence_bound(scn: &Scenario, u_max: f64, lambda_max: f64) -> BoundCheck {
    let gamma_max = max_of(&scn.gamma_samples());
    if gamma_max == 0.0 {
        return BoundCheck::new(0.0);
    }
    let beta_max = max_of(&scn.beta_samples());
    let c_min = min_of(&scn.cost_coefficients());
    let k_max = f64::from(scn.dist.k_max());
    let horizon = scn.horizon();
    let a = beta_max * scn.dist.degree_sum() * scn.dist.max_excess();
    let b = beta_max * k_max;
    let lhs = gamma_max * gamma_max * lambda_max / (2.0 * c_min)
        * libm::exp((beta_max * k_max + gamma_max * u_max) * horizon)
        * exp_difference_quotient(a, b, horizon);
    BoundCheck::new(if lhs.is_nan() { f64::INFINITY } else { lhs })
}

/// `(e^{aT} − e^{bT}) / (a − b)`, continued by its limit `T e^{aT}` at `a = b`.
pub fn exp_difference_quotient(a: f64, b: f64, horizon: f64) -> f64 {
    let x = (a - b) * horizon;
    let ratio = if x == 0.0 { 1.0 } else { libm::expm1(x) / x };
    libm::exp(b * horizon) * horizon * ratio
}

/// Sufficient condition for uniqueness with quadratic costs:
/// `d₁ ‖β‖₁ + d₂ ‖γ²‖₁ < 1` with
/// `d₁ = max{(Σk) Λ q_M + K_max Λ, 2 K_max}` and `d₂ = (Λ / c_m) max{1, Λ/2}`.
/// The L1 norms use the trapezoid rule on the scenario grid.
pub fn check_uniqueness(scn: &Scenario, lambda_max: f64) -> BoundCheck {
    let grid = scn.times();
    let beta = scn.beta_samples();
    let gamma = scn.gamma_samples();
    let beta_norm = trapezoid_by(grid, |j| beta[j].abs());
    let gamma_sq_norm = trapezoid_by(grid, |j| gamma[j] * gamma[j]);
    let (d1, d2) = uniqueness_constants(scn, lambda_max);
    let mut lhs = 0.0;
    if beta_norm != 0.0 {
        lhs += d1 * beta_norm;
    }
    if gamma_sq_norm != 0.0 {
        lhs += d2 * gamma_sq_norm;
    }
    BoundCheck::new(if lhs.is_nan() { f64::INFINITY } else { lhs })
}

/// The constants `(d₁, d₂)` of [`check_uniqueness`].
pub fn uniqueness_constants(scn: &Scenario, lambda_max: f64) -> (f64, f64) {
    let k_max = f64::from(scn.dist.k_max());
    let c_min = min_of(&scn.cost_coefficients());
    let d1 = (scn.dist.degree_sum() * lambda_max * scn.dist.max_excess() + k_max * lambda_max)
        .max(2.0 * k_max);
    let d2 = lambda_max / c_min * (lambda_max / 2.0).max(1.0);
    (d1, d2)
}

fn max_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn min_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::INFINITY, f64::min)
}

fn control_cost(grid: &[f64], coeffs: &[f64], controls: &Trajectory) -> f64 {
    trapezoid_by(grid, |j| {
        controls.row(j).iter().zip(coeffs).map(|(&u, &c)| running_cost(c, u)).sum()
    })
}

fn reward_of(
    scn: &Scenario,
    p: &[f64],
    coeffs: &[f64],
    states: &Trajectory,
    controls: &Trajectory,
) -> Reward {
    let last = states.row(states.n_times() - 1);
    let spread: f64 = last.iter().zip(p).map(|(i, pk)| i * pk).sum();
    let cost = control_cost(scn.times(), coeffs, controls);
    Reward { net: spread - cost, spread, cost }
}

impl Model {
    #[inline]
    fn adjoint_rhs(
        &self,
        lam: &[f64],
        i: &[f64],
        beta: f64,
        gamma: f64,
        u: &[f64],
        out: &mut [f64],
    ) {
        let theta = self.pressure(i);
        let weighted: f64 = (0..lam.len()).map(|c| lam[c] * self.degrees[c] * (1.0 - i[c])).sum();
        for c in 0..lam.len() {
            out[c] = beta * self.degrees[c] * lam[c] * theta - beta * self.q[c] * weighted
                + gamma * u[c] * lam[c];
        }
    }

    pub(crate) fn integrate_adjoint(
        &self,
        states: &Trajectory,
        controls: &Trajectory,
    ) -> Result<Trajectory> {
        self.check_controls(controls)?;
        let n = self.n_classes();
        let points = self.grid.len();
        // States between grid points come from the cubic Hermite interpolant,
        // which keeps the backward sweep fourth-order accurate.
        let slopes = self.state_derivatives(states, controls);

        let mut adj = Trajectory::zeros(self.k_min, n, &self.grid);
        adj.row_mut(points - 1).copy_from_slice(&self.p);

        let mut k1 = vec![0.0; n];
        let mut k2 = vec![0.0; n];
        let mut k3 = vec![0.0; n];
        let mut k4 = vec![0.0; n];
        let mut stage = vec![0.0; n];
        let mut u_mid = vec![0.0; n];
        let mut i_mid = vec![0.0; n];

        for j in (0..points - 1).rev() {
            let h = self.grid[j + 1] - self.grid[j];
            let (i_a, i_b) = (states.row(j), states.row(j + 1));
            let (f_a, f_b) = (slopes.row(j), slopes.row(j + 1));
            let (u_a, u_b) = (controls.row(j), controls.row(j + 1));
            for c in 0..n {
                u_mid[c] = 0.5 * (u_a[c] + u_b[c]);
                i_mid[c] = (0.5 * (i_a[c] + i_b[c]) + h / 8.0 * (f_a[c] - f_b[c])).clamp(0.0, 1.0);
            }
            let beta_mid = 0.5 * (self.beta[j] + self.beta[j + 1]);
            let gamma_mid = 0.5 * (self.gamma[j] + self.gamma[j + 1]);

            let cur = adj.row(j + 1).to_vec();
            self.adjoint_rhs(&cur, i_b, self.beta[j + 1], self.gamma[j + 1], u_b, &mut k1);
            for c in 0..n {
                stage[c] = cur[c] - 0.5 * h * k1[c];
            }
            self.adjoint_rhs(&stage, &i_mid, beta_mid, gamma_mid, &u_mid, &mut k2);
            for c in 0..n {
                stage[c] = cur[c] - 0.5 * h * k2[c];
            }
            self.adjoint_rhs(&stage, &i_mid, beta_mid, gamma_mid, &u_mid, &mut k3);
            for c in 0..n {
                stage[c] = cur[c] - h * k3[c];
            }
            self.adjoint_rhs(&stage, i_a, self.beta[j], self.gamma[j], u_a, &mut k4);

            let next = adj.row_mut(j);
            for c in 0..n {
                let v = cur[c] - h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
                if !v.is_finite() {
                    return Err(Error::Blowup { index: j, time: self.grid[j] });
                }
                next[c] = v;
            }
        }
        Ok(adj)
    }
}

/// Precomputed data for repeated sweeps on one scenario.
#[derive(Debug, Clone)]
pub(crate) struct Sweeper<'a> {
    scn: &'a Scenario,
    pub(crate) model: Model,
    coeffs: Vec<f64>,
}

impl<'a> Sweeper<'a> {
    pub(crate) fn new(scn: &'a Scenario) -> Result<Self> {
        let coeffs = scn.cost_coefficients();
        if let Some(c) = coeffs.iter().position(|&c| !(c > 0.0) || !c.is_finite()) {
            return Err(Error::CostModel(format!(
                "cost coefficient c_k = {} for degree {} must be positive",
                coeffs[c],
                scn.dist.degree(c)
            )));
        }
        Ok(Sweeper { scn, model: Model::new(scn), coeffs })
    }

    pub(crate) fn scenario(&self) -> &Scenario {
        self.scn
    }

    pub(crate) fn control_update(&self, states: &Trajectory, adjoints: &Trajectory, mu: f64) -> Trajectory {
        let gamma = &self.model.gamma;
        Trajectory::for_scenario(self.scn, |c, j| {
            let drive = gamma[j] * adjoints.get(c, j) * (1.0 - states.get(c, j)) / mu;
            marginal_cost_inverse(self.coeffs[c], drive)
        })
    }

    fn residual(&self, controls: &Trajectory, states: &Trajectory, adjoints: &Trajectory, mu: f64) -> f64 {
        let gamma = &self.model.gamma;
        let mut worst: f64 = 0.0;
        for j in 0..controls.n_times() {
            for c in 0..controls.n_classes() {
                let lhs = mu * marginal_cost(self.coeffs[c], controls.get(c, j));
                let rhs = gamma[j] * adjoints.get(c, j) * (1.0 - states.get(c, j));
                worst = worst.max((lhs - rhs).abs());
            }
        }
        worst
    }

    /// Sweeps from `initial` (or `u ≡ 0`) with the cost scaled by `mu`.
    ///
    /// When the configured sweep does not reach the fixed-point tolerance,
    /// typically because the iterates oscillate between two states, it is
    /// repeated with the relaxation halved (down to 1/8) and the sweep budget
    /// scaled up accordingly. The first converged run is returned, or the
    /// last attempt if none converges.
    pub(crate) fn run(&self, i0: &[f64], mu: f64, initial: Option<Trajectory>) -> Result<SolveReport> {
        let base = self.scn.sweep;
        let mut report = self.run_with(i0, mu, initial.clone(), base)?;
        let mut damping = base.damping;
        while !report.converged && damping > 0.125 {
            damping *= 0.5;
            let scaled = SweepSettings {
                n_sweep: libm::ceil(base.n_sweep as f64 / damping) as usize,
                damping,
                ..base
            };
            report = self.run_with(i0, mu, initial.clone(), scaled)?;
        }
        Ok(report)
    }

    fn run_with(
        &self,
        i0: &[f64],
        mu: f64,
        initial: Option<Trajectory>,
        settings: SweepSettings,
    ) -> Result<SolveReport> {
        let mut controls = initial.unwrap_or_else(|| Trajectory::zeros_for(self.scn));
        self.model.check_controls(&controls)?;
        let mut changes = Vec::with_capacity(settings.n_sweep);
        let mut converged = false;

        for _ in 0..settings.n_sweep {
            let states = self.model.integrate_state(&controls, i0)?;
            let adjoints = self.model.integrate_adjoint(&states, &controls)?;
            let mut updated = self.control_update(&states, &adjoints, mu);
            if settings.damping < 1.0 {
                let w = settings.damping;
                updated = Trajectory::for_scenario(self.scn, |c, j| {
                    w * updated.get(c, j) + (1.0 - w) * controls.get(c, j)
                });
            }
            let scale = updated.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            let diff = updated.max_abs_diff(&controls);
            let change = if diff == 0.0 { 0.0 } else { diff / scale.max(f64::MIN_POSITIVE) };
            controls = updated;
            changes.push(change);
            if change < settings.fixed_point_tol {
                converged = true;
                break;
            }
        }

        let states = self.model.integrate_state(&controls, i0)?;
        let adjoints = self.model.integrate_adjoint(&states, &controls)?;
        let residual = self.residual(&controls, &states, &adjoints, mu);
        let reward = reward_of(self.scn, &self.model.p, &self.coeffs, &states, &controls);
        Ok(SolveReport {
            iterations: changes.len(),
            controls,
            states,
            adjoints,
            reward: reward.net,
            spread_reward: reward.spread,
            control_cost: reward.cost,
            stationarity_residual: residual,
            converged,
            control_changes: changes,
            multiplier: mu,
            damping: settings.damping,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{aggregate, integrate_state};
    use crate::network::{build_poisson_truncated, build_powerlaw, DegreeDistribution};
    use crate::scenario::TimeProfile;
    use crate::structure;

    fn er() -> Scenario {
        let dist = build_poisson_truncated(33.45, 13, 54).unwrap();
        Scenario::new(dist, 1.0, TimeProfile::Constant(0.07)).unwrap()
    }

    fn pl2() -> Scenario {
        let dist = build_powerlaw(2.0, 14, 120).unwrap();
        Scenario::new(dist, 1.0, TimeProfile::Constant(0.07)).unwrap()
    }

    /// High-accuracy adjoint oracle: integrates states and adjoints jointly
    /// backward from `(i(T), p)` with many small RK4 steps, so no state
    /// interpolation is involved.
    fn reference_adjoint_at_zero(scn: &Scenario, i_final: &[f64], steps: usize) -> std::vec::Vec<f64> {
        let beta = match scn.beta {
            TimeProfile::Constant(b) => b,
            _ => unreachable!(),
        };
        let k: std::vec::Vec<f64> = scn.dist.degrees().map(f64::from).collect();
        let q = scn.dist.excess().to_vec();
        let n = k.len();
        let rhs = |y: &[f64]| -> std::vec::Vec<f64> {
            let (i, lam) = y.split_at(n);
            let theta: f64 = q.iter().zip(i).map(|(a, b)| a * b).sum();
            let w: f64 = (0..n).map(|c| lam[c] * k[c] * (1.0 - i[c])).sum();
            let mut out = std::vec![0.0; 2 * n];
            for c in 0..n {
                out[c] = beta * k[c] * (1.0 - i[c]) * theta;
                out[n + c] = beta * k[c] * lam[c] * theta - beta * q[c] * w;
            }
            out
        };
        let mut y: std::vec::Vec<f64> = i_final.iter().chain(scn.dist.probabilities()).copied().collect();
        let h = -scn.horizon() / steps as f64;
        for _ in 0..steps {
            let a = rhs(&y);
            let yb: std::vec::Vec<f64> = y.iter().zip(&a).map(|(y, d)| y + 0.5 * h * d).collect();
            let b = rhs(&yb);
            let yc: std::vec::Vec<f64> = y.iter().zip(&b).map(|(y, d)| y + 0.5 * h * d).collect();
            let c = rhs(&yc);
            let yd: std::vec::Vec<f64> = y.iter().zip(&c).map(|(y, d)| y + h * d).collect();
            let d = rhs(&yd);
            for m in 0..y.len() {
                y[m] += h / 6.0 * (a[m] + 2.0 * b[m] + 2.0 * c[m] + d[m]);
            }
        }
        y[n..].to_vec()
    }

    #[test]
    fn adjoint_is_constant_without_dynamics() {
        let scn = Scenario { beta: TimeProfile::Constant(0.0), ..er() };
        let zeros = Trajectory::zeros_for(&scn);
        let states = integrate_state(&scn, &zeros, &scn.initial_seed()).unwrap();
        let adj = integrate_adjoint(&scn, &states, &zeros).unwrap();
        for j in 0..adj.n_times() {
            assert_eq!(adj.row(j), scn.dist.probabilities());
        }
    }

    #[test]
    fn adjoint_matches_fine_reference_when_gamma_is_zero() {
        let dist = build_poisson_truncated(6.0, 2, 12).unwrap();
        let scn = Scenario::new(dist, 1.0, TimeProfile::Constant(0.3))
            .unwrap()
            .with_gamma(TimeProfile::Constant(0.0));
        let zeros = Trajectory::zeros_for(&scn);
        let states = integrate_state(&scn, &zeros, &scn.initial_seed()).unwrap();
        let adj = integrate_adjoint(&scn, &states, &zeros).unwrap();
        let i_final = states.row(states.n_times() - 1);
        let reference = reference_adjoint_at_zero(&scn, i_final, 20_000);
        for (c, r) in reference.iter().enumerate() {
            assert!((adj.get(c, 0) - r).abs() < 1e-8, "class {c}: {} vs {r}", adj.get(c, 0));
        }
    }

    #[test]
    fn zero_adjoint_gives_zero_control() {
        let scn = er();
        let states = Trajectory::constant(13, scn.n_classes(), scn.times(), 0.3);
        let u = maximize_hamiltonian(&scn, &states, &Trajectory::zeros_for(&scn)).unwrap();
        assert!(u.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn closed_form_control_update() {
        let scn = er();
        let states = Trajectory::constant(13, scn.n_classes(), scn.times(), 0.01);
        let adj = Trajectory::for_scenario(&scn, |c, _| scn.dist.probabilities()[c]);
        let u = maximize_hamiltonian(&scn, &states, &adj).unwrap();
        for &v in u.values() {
            assert!((v - 0.7 * 0.99 / 50.0).abs() < 1e-12, "{v}");
        }
        assert!((0.7_f64 * 0.99 / 50.0 - 0.013860).abs() < 1e-9);
    }

    #[test]
    fn terminal_control_is_independent_of_class_weight() {
        let scn = pl2();
        let report = fbs_solve(&scn, &scn.initial_seed()).unwrap();
        let last = scn.grid.len() - 1;
        for c in 0..scn.n_classes() {
            let expected = 0.7 * (1.0 - report.states.get(c, last)) / (2.0 * 25.0);
            assert!((report.adjoints.get(c, last) - scn.dist.probabilities()[c]).abs() == 0.0);
            assert!((report.controls.get(c, last) - expected).abs() < 1e-6 * expected);
        }
    }

    #[test]
    fn nonpositive_cost_coefficients_are_rejected() {
        let dist = DegreeDistribution::from_weights(1, &[1.0, 0.0, 1.0]).unwrap();
        let scn = Scenario::new(dist, 1.0, TimeProfile::Constant(0.1)).unwrap();
        let err = fbs_solve(&scn, &scn.initial_seed()).unwrap_err();
        assert!(matches!(err, Error::CostModel(_)), "{err:?}");
        let states = Trajectory::zeros_for(&scn);
        assert!(matches!(maximize_hamiltonian(&scn, &states, &states), Err(Error::CostModel(_))));
    }

    #[test]
    fn no_dynamics_no_control() {
        let scn = Scenario { beta: TimeProfile::Constant(0.0), ..er() }
            .with_gamma(TimeProfile::Constant(0.0));
        let i0: std::vec::Vec<f64> = (0..scn.n_classes()).map(|c| 0.02 * (c % 5) as f64).collect();
        let report = fbs_solve(&scn, &i0).unwrap();
        assert!(report.controls.values().iter().all(|&u| u == 0.0));
        let expected: f64 = scn.dist.probabilities().iter().zip(&i0).map(|(p, i)| p * i).sum();
        assert!((report.reward - expected).abs() < 1e-15);
        assert!(report.converged);
    }

    #[test]
    fn er_defaults_structure_and_stationarity() {
        let scn = er();
        let report = fbs_solve(&scn, &scn.initial_seed()).unwrap();
        assert!(report.converged, "changes {:?}", report.control_changes);
        assert!(report.stationarity_residual < 1e-6, "{}", report.stationarity_residual);
        assert!(report.adjoints.min_value() >= -1e-9);
        assert!(structure::non_increasing_violation(&report.controls) <= 1e-9);
        assert!(structure::convexity_violation(&report.controls) <= 1e-8);
        assert!((report.reward - (report.spread_reward - report.control_cost)).abs() < 1e-10);
        assert!((0.0..=1.0).contains(&report.spread_reward));
    }

    #[test]
    fn reward_examples() {
        let scn = er();
        let zero = evaluate_reward(&scn, &Trajectory::zeros_for(&scn), &scn.initial_seed()).unwrap();
        assert_eq!(zero.cost, 0.0);
        assert_eq!(zero.net, zero.spread);
        let states = integrate_state(&scn, &Trajectory::zeros_for(&scn), &scn.initial_seed()).unwrap();
        assert_eq!(zero.spread, aggregate(&scn.dist, &states).final_value());

        let tenth = Trajectory::constant(13, scn.n_classes(), scn.times(), 0.1);
        let r = evaluate_reward(&scn, &tenth, &scn.initial_seed()).unwrap();
        assert!((r.cost - 0.25).abs() < 1e-12, "{}", r.cost);
    }

    #[test]
    fn larger_cost_weight_lowers_reward() {
        let rewards: std::vec::Vec<f64> = [5.0, 25.0, 100.0]
            .iter()
            .map(|&b| {
                let scn = er().with_cost_weight(b);
                fbs_solve(&scn, &scn.initial_seed()).unwrap().reward
            })
            .collect();
        assert!(rewards[0] > rewards[1] && rewards[1] > rewards[2], "{rewards:?}");
    }

    #[test]
    fn normalized_resource_examples() {
        let scn = er();
        let zero = normalized_resource(&scn, &Trajectory::zeros_for(&scn));
        assert!(zero.values().all(|&r| r == 0.0));
        assert_eq!(zero.len(), scn.n_classes());
        let tenth = Trajectory::constant(13, scn.n_classes(), scn.times(), 0.1);
        for r in normalized_resource(&scn, &tenth).values() {
            assert!((r - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn pl2_per_capita_resource_grows_with_degree() {
        let scn = pl2();
        let report = fbs_solve(&scn, &scn.initial_seed()).unwrap();
        let r: std::vec::Vec<f64> = normalized_resource(&scn, &report.controls).into_values().collect();
        // The top class has no excess-degree weight (q_{k_max} = 0), so it
        // passes nothing on and is left out of the comparison.
        let interior = &r[..r.len() - 1];
        assert!(interior.windows(2).all(|w| w[1] >= w[0]), "{r:?}");
    }

    #[test]
    fn convergence_bound_edge_cases() {
        let scn = er().with_gamma(TimeProfile::Constant(0.0));
        let check = check_convergence_bound(&scn, 1.0, 1.0);
        assert_eq!(check.lhs, 0.0);
        assert!(check.holds);

        // β_M → 0: the bracket tends to T
        for horizon in [0.5, 1.0, 3.0] {
            let tiny = 1e-10;
            let q = exp_difference_quotient(tiny * 4000.0, tiny * 54.0, horizon);
            assert!((q - horizon).abs() < 1e-6 * horizon, "{q}");
            assert_eq!(exp_difference_quotient(0.0, 0.0, horizon), horizon);
            let a = 0.3;
            assert!((exp_difference_quotient(a, a, horizon) - horizon * libm::exp(a * horizon)).abs() < 1e-14);
        }
        let scn = Scenario { beta: TimeProfile::Constant(1e-10), ..er() }
            .with_gamma(TimeProfile::Constant(0.7));
        let check = check_convergence_bound(&scn, 0.1, 0.05);
        assert!(check.lhs.is_finite() && check.lhs > 0.0);
    }

    #[test]
    fn convergence_bound_direct_evaluation() {
        let scn = pl2();
        let (u_m, lam) = (0.2, 0.08);
        let check = check_convergence_bound(&scn, u_m, lam);
        let c_m = 25.0 * scn.dist.probabilities().iter().copied().fold(f64::INFINITY, f64::min);
        let a = 0.07 * scn.dist.degree_sum() * scn.dist.max_excess();
        let b = 0.07 * 120.0;
        let expected = 0.49 * lam / (2.0 * c_m)
            * libm::exp(0.07 * 120.0 + 0.7 * u_m)
            * ((libm::exp(a) - libm::exp(b)) / (a - b));
        assert!((check.lhs - expected).abs() < 1e-9 * expected, "{} vs {expected}", check.lhs);
    }

    #[test]
    fn uniqueness_checker() {
        let zero = Scenario { beta: TimeProfile::Constant(0.0), ..pl2() }
            .with_gamma(TimeProfile::Constant(0.0));
        let check = check_uniqueness(&zero, 0.1);
        assert_eq!(check.lhs, 0.0);
        assert!(check.holds);

        let scn = pl2();
        let lam = scn.dist.probabilities().iter().copied().fold(0.0, f64::max);
        // hand evaluation of d1, d2 with ‖β‖ = 0.07, ‖γ²‖ = 0.49 on [0, 1]
        let sum_k: f64 = (14..=120).map(f64::from).sum();
        let q_m = scn.dist.max_excess();
        let d1 = f64::max(sum_k * lam * q_m + 120.0 * lam, 240.0);
        let c_m = 25.0 * scn.dist.p(120);
        let d2 = lam / c_m * f64::max(1.0, lam / 2.0);
        let expected = d1 * 0.07 + d2 * 0.49;
        let check = check_uniqueness(&scn, lam);
        assert!((check.lhs - expected).abs() < 1e-9 * expected);
        assert!(!check.holds);

        let doubled = scn.clone().with_horizon(2.0).unwrap();
        let twice = check_uniqueness(&doubled, lam);
        assert!((twice.lhs - 2.0 * check.lhs).abs() < 1e-9 * check.lhs);
    }
}
