//! Joint optimization of the seed vector and the controls.
//!
//! The outer problem maximizes `J(i₀)` over `{0 ≤ i_{0k} ≤ 1, Σ p_k i_{0k} = B}`,
//! where each evaluation is a full forward-backward sweep. Each outer
//! iteration estimates the gradient by finite differences, takes a projected
//! gradient step with backtracking, then tries moving seed mass between the
//! classes with the best and worst marginal value per unit mass.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::exec::{Executor, Sequential};
use crate::network::DegreeDistribution;
use crate::pmp::{SolveReport, Sweeper};
use crate::scenario::Scenario;

/// Feasible seed vector, one entry per degree class in support order.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedVector {
    k_min: u32,
    values: Vec<f64>,
    budget: f64,
}

impl SeedVector {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn get(&self, k: u32) -> Option<f64> {
        k.checked_sub(self.k_min).and_then(|c| self.values.get(c as usize).copied())
    }

    pub fn to_map(&self) -> BTreeMap<u32, f64> {
        self.values.iter().enumerate().map(|(c, &v)| (self.k_min + c as u32, v)).collect()
    }

    /// `Σ p_k i_{0k}`, which equals the budget up to rounding.
    pub fn mass(&self, dist: &DegreeDistribution) -> f64 {
        dist.probabilities().iter().zip(&self.values).map(|(p, x)| p * x).sum()
    }
}

/// Euclidean projection of `v` onto `{0 ≤ x_k ≤ 1, Σ p_k x_k = budget}`.
///
/// The solution has the form `x_k = clip(v_k − τ p_k, 0, 1)`; `τ` is found
/// by bisection and then solved exactly on the resulting free set.
pub fn project_to_seed_simplex(v: &[f64], dist: &DegreeDistribution, budget: f64) -> Result<SeedVector> {
    if !(budget > 0.0 && budget <= 1.0) {
        return Err(Error::Parameter(format!("seed budget must lie in (0, 1], got {budget}")));
    }
    if v.len() != dist.len() {
        return Err(Error::Parameter(format!(
            "seed vector has {} entries for {} degree classes",
            v.len(),
            dist.len()
        )));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Parameter("seed vector contains non-finite entries".into()));
    }
    let p = dist.probabilities();
    let at = |tau: f64| -> Vec<f64> {
        v.iter().zip(p).map(|(&vk, &pk)| (vk - tau * pk).clamp(0.0, 1.0)).collect()
    };
    let mass = |x: &[f64]| -> f64 { x.iter().zip(p).map(|(a, b)| a * b).sum() };

    // Mass is non-increasing in τ: all ones at `lo`, all zeros at `hi`.
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (&vk, &pk) in v.iter().zip(p) {
        if pk > 0.0 {
            lo = lo.min((vk - 1.0) / pk);
            hi = hi.max(vk / pk);
        }
    }
    lo -= 1.0;
    hi += 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mass(&at(mid)) > budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut tau = 0.5 * (lo + hi);

    // Exact τ on the free set identified by the bisection.
    let x = at(tau);
    let (mut fixed, mut free_pv, mut free_pp) = (0.0, 0.0, 0.0);
    for ((&xk, &vk), &pk) in x.iter().zip(v).zip(p) {
        if pk == 0.0 {
            continue;
        }
        if xk <= 0.0 || xk >= 1.0 {
            fixed += pk * xk;
        } else {
            free_pv += pk * vk;
            free_pp += pk * pk;
        }
    }
    if free_pp > 0.0 {
        let exact = (free_pv - (budget - fixed)) / free_pp;
        let candidate = at(exact);
        if (mass(&candidate) - budget).abs() <= (mass(&x) - budget).abs() {
            tau = exact;
        }
    }
    Ok(SeedVector { k_min: dist.k_min(), values: at(tau), budget })
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointOptions {
    /// Finite-difference step on each seed coordinate.
    pub fd_step: f64,
    pub max_outer: usize,
    /// Stop when `‖P(x + ∇J) − x‖₂` falls below this.
    pub grad_tol: f64,
    /// Stop when an outer iteration improves `J` by less than this.
    pub improve_tol: f64,
    /// Number of starting points; the first is `initial` (or uniform), the
    /// rest are projections of random points.
    pub starts: usize,
    pub rng_seed: u64,
    pub initial: Option<Vec<f64>>,
}

impl Default for JointOptions {
    fn default() -> Self {
        JointOptions {
            fd_step: 1e-4,
            max_outer: 100,
            grad_tol: 1e-5,
            improve_tol: 1e-8,
            starts: 1,
            rng_seed: 0,
            initial: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointReport {
    pub seed: SeedVector,
    /// Sweep solution at the returned seed, started from `u ≡ 0`.
    pub report: SolveReport,
    pub outer_iterations: usize,
    /// Projected-gradient norm at the returned seed.
    pub grad_norm: f64,
    /// Best reward after each outer iteration of the winning start.
    pub history: Vec<f64>,
}

pub fn joint_solve(scn: &Scenario, budget: f64) -> Result<JointReport> {
    joint_solve_with(scn, budget, &JointOptions::default(), &Sequential)
}

pub fn joint_solve_with<E: Executor + ?Sized>(
    scn: &Scenario,
    budget: f64,
    opts: &JointOptions,
    exec: &E,
) -> Result<JointReport>
where
    E: Sync,
{
    let sweeper = Sweeper::new(scn)?;
    let n = scn.n_classes();
    let first = match &opts.initial {
        Some(v) => v.clone(),
        None => vec![budget; n],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.rng_seed);
    let mut best: Option<JointReport> = None;
    for start in 0..opts.starts.max(1) {
        let raw: Vec<f64> = if start == 0 {
            first.clone()
        } else {
            (0..n).map(|_| rng.random::<f64>()).collect()
        };
        let x0 = project_to_seed_simplex(&raw, &scn.dist, budget)?;
        let candidate = ascend(&sweeper, x0, opts, exec)?;
        if best.as_ref().map_or(true, |b| candidate.report.reward > b.report.reward) {
            best = Some(candidate);
        }
    }
    Ok(best.expect("at least one start"))
}

struct Point {
    seed: SeedVector,
    report: SolveReport,
}

fn evaluate(sweeper: &Sweeper<'_>, seed: SeedVector) -> Result<Point> {
    let report = sweeper.run(seed.values(), 1.0, None)?;
    Ok(Point { seed, report })
}

fn gradient<E: Executor + ?Sized + Sync>(
    sweeper: &Sweeper<'_>,
    at: &Point,
    h: f64,
    exec: &E,
) -> Result<Vec<f64>> {
    let x = at.seed.values();
    let base = at.report.reward;
    let warm: &Trajectory = &at.report.controls;
    let p = sweeper.scenario().dist.probabilities();
    let parts = exec.map(x.len(), |k| -> Result<f64> {
        if p[k] == 0.0 {
            return Ok(0.0);
        }
        let step = if x[k] + h <= 1.0 { h } else { -h };
        let mut shifted = x.to_vec();
        shifted[k] += step;
        let r = sweeper.run(&shifted, 1.0, Some(warm.clone()))?;
        Ok((r.reward - base) / step)
    });
    parts.into_iter().collect()
}

fn projected_gradient_norm(dist: &DegreeDistribution, seed: &SeedVector, g: &[f64]) -> Result<f64> {
    let x = seed.values();
    let moved: Vec<f64> = x.iter().zip(g).map(|(a, b)| a + b).collect();
    let proj = project_to_seed_simplex(&moved, dist, seed.budget())?;
    Ok(libm::sqrt(proj.values().iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum()))
}

fn ascend<E: Executor + ?Sized + Sync>(
    sweeper: &Sweeper<'_>,
    start: SeedVector,
    opts: &JointOptions,
    exec: &E,
) -> Result<JointReport> {
    let dist = &sweeper.scenario().dist;
    let p = dist.probabilities();
    let budget = start.budget();
    let mut cur = evaluate(sweeper, start)?;
    let mut step = 1.0;
    let mut history = Vec::new();
    let mut grad_norm = f64::INFINITY;
    let mut iterations = 0;

    while iterations < opts.max_outer {
        let g = gradient(sweeper, &cur, opts.fd_step, exec)?;
        grad_norm = projected_gradient_norm(dist, &cur.seed, &g)?;
        if grad_norm < opts.grad_tol {
            break;
        }
        iterations += 1;
        let before = cur.report.reward;
        let x = cur.seed.values().to_vec();

        // Projected gradient step with backtracking.
        let mut trial_step = step;
        for _ in 0..40 {
            let moved: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a + trial_step * b).collect();
            let seed = project_to_seed_simplex(&moved, dist, budget)?;
            if seed.values() == cur.seed.values() {
                break;
            }
            let trial = evaluate(sweeper, seed)?;
            if trial.report.reward > cur.report.reward {
                cur = trial;
                step = 2.0 * trial_step;
                break;
            }
            trial_step *= 0.5;
            step = trial_step;
        }

        // Move mass from the worst to the best class by marginal value.
        let x = cur.seed.values().to_vec();
        let value = |k: usize| g[k] / p[k];
        let receiver = (0..x.len())
            .filter(|&k| p[k] > 0.0 && x[k] < 1.0)
            .max_by(|&a, &b| value(a).total_cmp(&value(b)));
        let donor = (0..x.len())
            .filter(|&k| p[k] > 0.0 && x[k] > 0.0)
            .min_by(|&a, &b| value(a).total_cmp(&value(b)));
        if let (Some(a), Some(b)) = (receiver, donor) {
            if a != b && value(a) > value(b) {
                let mut delta = ((1.0 - x[a]) * p[a]).min(x[b] * p[b]);
                for _ in 0..30 {
                    let mut moved = x.clone();
                    moved[a] = (moved[a] + delta / p[a]).min(1.0);
                    moved[b] = (moved[b] - delta / p[b]).max(0.0);
                    let seed = project_to_seed_simplex(&moved, dist, budget)?;
                    let trial = evaluate(sweeper, seed)?;
                    if trial.report.reward > cur.report.reward {
                        cur = trial;
                        break;
                    }
                    delta *= 0.5;
                }
            }
        }

        history.push(cur.report.reward);
        if cur.report.reward - before < opts.improve_tol {
            break;
        }
    }

    Ok(JointReport {
        seed: cur.seed,
        report: cur.report,
        outer_iterations: iterations,
        grad_norm,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{build_poisson_truncated, build_powerlaw};
    use crate::pmp::fbs_solve;
    use crate::scenario::TimeProfile;
    use proptest::prelude::*;

    fn two_class() -> DegreeDistribution {
        DegreeDistribution::from_weights(2, &[0.5, 0.0, 0.0, 0.5]).unwrap()
    }

    #[test]
    fn feasible_input_is_unchanged() {
        let dist = build_poisson_truncated(6.0, 2, 12).unwrap();
        let v = vec![0.05; dist.len()];
        let x = project_to_seed_simplex(&v, &dist, 0.05).unwrap();
        for (a, b) in x.values().iter().zip(&v) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn single_class_is_forced() {
        let dist = DegreeDistribution::from_weights(5, &[1.0]).unwrap();
        for v in [-3.0, 0.2, 7.0] {
            let x = project_to_seed_simplex(&[v], &dist, 0.3).unwrap();
            assert!((x.values()[0] - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_matches_grid_search() {
        let dist = DegreeDistribution::from_weights(1, &[0.5, 0.5]).unwrap();
        let x = project_to_seed_simplex(&[1.0, 0.0], &dist, 0.25).unwrap();
        // feasible set: x1 + x2 = 0.5, both in [0, 1]
        let mut best = (f64::INFINITY, 0.0);
        for m in 0..=100_000 {
            let a = 0.5 * m as f64 / 100_000.0;
            let d = (a - 1.0) * (a - 1.0) + (0.5 - a) * (0.5 - a);
            if d < best.0 {
                best = (d, a);
            }
        }
        assert!((x.values()[0] - best.1).abs() < 1e-4);
        assert!((x.values()[1] - (0.5 - best.1)).abs() < 1e-4);
    }

    #[test]
    fn projection_rejects_bad_budget() {
        let dist = two_class();
        assert!(matches!(project_to_seed_simplex(&[0.1, 0.1, 0.1, 0.1], &dist, 0.0), Err(Error::Parameter(_))));
        assert!(matches!(project_to_seed_simplex(&[0.1, 0.1, 0.1, 0.1], &dist, 1.5), Err(Error::Parameter(_))));
    }

    proptest! {
        #[test]
        fn projection_is_feasible(
            v in prop::collection::vec(-2.0f64..3.0, 6),
            w in prop::collection::vec(0.01f64..1.0, 6),
            budget in 0.001f64..=1.0,
        ) {
            let dist = DegreeDistribution::from_weights(3, &w).unwrap();
            let x = project_to_seed_simplex(&v, &dist, budget).unwrap();
            prop_assert!((x.mass(&dist) - budget).abs() < 1e-9);
            prop_assert!(x.values().iter().all(|&a| (0.0..=1.0).contains(&a)));
            let again = project_to_seed_simplex(x.values(), &dist, budget).unwrap();
            for (a, b) in again.values().iter().zip(x.values()) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn full_budget_seeds_everyone() {
        let dist = build_poisson_truncated(6.0, 2, 12).unwrap();
        let scn = Scenario::new(dist, 1.0, TimeProfile::Constant(0.3)).unwrap();
        let r = joint_solve(&scn, 1.0).unwrap();
        assert!(r.seed.values().iter().all(|&x| x == 1.0));
        assert!(r.report.controls.values().iter().all(|&u| u == 0.0));
        assert!((r.report.reward - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_class_equals_fbs() {
        let dist = DegreeDistribution::from_weights(8, &[1.0]).unwrap();
        let scn = Scenario::new(dist, 1.0, TimeProfile::Constant(0.3)).unwrap();
        let r = joint_solve(&scn, 0.02).unwrap();
        let direct = fbs_solve(&scn, &[0.02]).unwrap();
        assert_eq!(r.report.reward, direct.reward);
    }

    #[test]
    fn seed_grid_oracle() {
        let dist = DegreeDistribution::from_weights(4, &[0.5, 0.5]).unwrap();
        let scn = Scenario::new(dist, 1.0, TimeProfile::Constant(0.5))
            .unwrap()
            .with_gamma(TimeProfile::Constant(1.0))
            .with_cost_weight(1.0)
            .with_grid_points(21)
            .unwrap();
        let mut oracle = f64::NEG_INFINITY;
        for m in 0..=40 {
            let a = 0.5 * m as f64 / 40.0;
            oracle = oracle.max(fbs_solve(&scn, &[a, 0.5 - a]).unwrap().reward);
        }
        let r = joint_solve(&scn, 0.25).unwrap();
        assert!((r.report.reward - oracle).abs() < 1e-4, "{} vs {oracle}", r.report.reward);
    }

    #[test]
    fn joint_improves_on_uniform_for_pl2() {
        let dist = build_powerlaw(2.0, 14, 40).unwrap();
        let scn = Scenario::new(dist, 1.0, TimeProfile::Constant(0.07)).unwrap();
        let uniform = fbs_solve(&scn, &vec![0.01; scn.n_classes()]).unwrap();
        let r = joint_solve(&scn, 0.01).unwrap();
        assert!(r.report.reward >= uniform.reward - 1e-8);
        assert!((r.seed.mass(&scn.dist) - 0.01).abs() < 1e-9);
        assert!(r.history.windows(2).all(|w| w[1] >= w[0]));
        let top: f64 = (20..scn.n_classes()).map(|c| scn.dist.probabilities()[c] * r.seed.values()[c]).sum();
        let bottom: f64 = (0..7).map(|c| scn.dist.probabilities()[c] * r.seed.values()[c]).sum();
        assert!(top > bottom, "top {top} bottom {bottom}");
    }
}
