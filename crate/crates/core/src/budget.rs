//! Fixed-budget problem: maximize `Σ p_k i_k(T)` subject to
//! `∫ Σ g_k(u_k) dt ≤ B`.
//!
//! The constraint binds at the optimum, and the optimal controls are the
//! sweep solution with the running cost scaled by a multiplier `μ*`. The
//! resource spent decreases in `μ`, so `μ*` is found by bisection.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::pmp::{SolveReport, Sweeper};
use crate::scenario::Scenario;
use crate::structure::{self, StructuralVerdict};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetOptions {
    pub mu_low: f64,
    pub mu_high: f64,
    pub max_bisections: usize,
}

impl Default for BudgetOptions {
    fn default() -> Self {
        BudgetOptions { mu_low: 1e-3, mu_high: 100.0, max_bisections: 200 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetReport {
    /// Sweep result at `μ*`. Its `spread_reward` is the objective of the
    /// budgeted problem; `reward` still reports spread minus cost.
    pub base: SolveReport,
    pub mu_star: f64,
    pub resource_used: f64,
    pub budget: f64,
    /// `|resource_used − budget|`.
    pub gap: f64,
    /// `(μ, resource)` at every evaluated multiplier, in evaluation order;
    /// infinite where the state integration blew up.
    pub trace: Vec<(f64, f64)>,
}

impl BudgetReport {
    pub fn spread(&self) -> f64 {
        self.base.spread_reward
    }
}

/// Acceptance threshold `min(10⁻³ B, 10⁻⁶)` on `|resource − B|`.
pub fn budget_threshold(budget: f64) -> f64 {
    (1e-3 * budget).min(1e-6)
}

pub fn budget_solve(scn: &Scenario, i0: &[f64], budget: f64) -> Result<BudgetReport> {
    budget_solve_with(scn, i0, budget, &BudgetOptions::default())
}

/// Bisection on `μ ∈ [mu_low, mu_high]` until the resource spent is within
/// [`budget_threshold`] of `budget`. Each evaluation is a cold-started sweep.
pub fn budget_solve_with(
    scn: &Scenario,
    i0: &[f64],
    budget: f64,
    opts: &BudgetOptions,
) -> Result<BudgetReport> {
    if !(budget > 0.0) || !budget.is_finite() {
        return Err(Error::Parameter(alloc::format!("budget must be positive, got {budget}")));
    }
    if !(opts.mu_low > 0.0 && opts.mu_low < opts.mu_high && opts.mu_high.is_finite()) {
        return Err(Error::Parameter(alloc::format!(
            "multiplier bracket [{}, {}] is invalid",
            opts.mu_low, opts.mu_high
        )));
    }
    let sweeper = Sweeper::new(scn)?;
    let tol = budget_threshold(budget);
    let mut trace = Vec::new();
    let mut solve = |mu: f64| -> Result<SolveReport> {
        let report = sweeper.run(i0, mu, None);
        trace.push((mu, report.as_ref().map_or(f64::INFINITY, |r| r.control_cost)));
        report
    };
    let cost = |r: &Option<SolveReport>| r.as_ref().map_or(f64::INFINITY, |r| r.control_cost);

    let (mut lo, mut hi) = (opts.mu_low, opts.mu_high);
    let at_lo = over_budget_on_blowup(solve(lo))?;
    // the cheapest end must be solvable, otherwise nothing can be bracketed
    let at_hi = solve(hi)?;
    let (mut r_lo, mut r_hi) = (cost(&at_lo), at_hi.control_cost);
    if (r_hi - budget).abs() < tol {
        return Ok(finish(at_hi, hi, budget, trace));
    }
    if let Some(report) = at_lo {
        if (report.control_cost - budget).abs() < tol {
            return Ok(finish(report, lo, budget, trace));
        }
    }
    if r_lo < r_hi {
        return Err(Error::NonMonotoneResource { mu_a: lo, resource_a: r_lo, mu_b: hi, resource_b: r_hi });
    }
    if r_lo < budget || r_hi > budget {
        return Err(Error::Bracket {
            budget,
            mu_low: lo,
            mu_high: hi,
            resource_at_low: r_lo,
            resource_at_high: r_hi,
        });
    }

    for _ in 0..opts.max_bisections {
        let mid = 0.5 * (lo + hi);
        let report = over_budget_on_blowup(solve(mid))?;
        let r = cost(&report);
        if r > r_lo || r < r_hi {
            let (mu_b, resource_b) = if r > r_lo { (lo, r_lo) } else { (hi, r_hi) };
            return Err(Error::NonMonotoneResource { mu_a: mid, resource_a: r, mu_b, resource_b });
        }
        if let Some(report) = report {
            if (r - budget).abs() < tol {
                return Ok(finish(report, mid, budget, trace));
            }
        }
        if r > budget {
            lo = mid;
            r_lo = r;
        } else {
            hi = mid;
            r_hi = r;
        }
    }
    Err(Error::Bracket { budget, mu_low: lo, mu_high: hi, resource_at_low: r_lo, resource_at_high: r_hi })
}

/// Controls grow without bound as `μ` shrinks, so a sweep whose state
/// integration blows up is read as spending more than any budget.
fn over_budget_on_blowup(report: Result<SolveReport>) -> Result<Option<SolveReport>> {
    match report {
        Ok(r) => Ok(Some(r)),
        Err(Error::Blowup { .. } | Error::OutOfBounds { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn finish(base: SolveReport, mu: f64, budget: f64, trace: Vec<(f64, f64)>) -> BudgetReport {
    let resource_used = base.control_cost;
    BudgetReport { base, mu_star: mu, resource_used, budget, gap: (resource_used - budget).abs(), trace }
}

/// Resource spent by the sweep solution with the running cost scaled by `mu`.
pub fn resource_at(scn: &Scenario, i0: &[f64], mu: f64) -> Result<f64> {
    Ok(Sweeper::new(scn)?.run(i0, mu, None)?.control_cost)
}

/// Adjoint positivity and non-increasing controls on a budgeted solution,
/// reported as not applicable when `γ` increases somewhere.
pub fn structural_check_budget(scn: &Scenario, report: &BudgetReport) -> StructuralVerdict {
    structure::monotone_structure(scn, &report.base)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Trajectory;
    use crate::network::build_powerlaw;
    use crate::pmp::fbs_solve;
    use crate::scenario::TimeProfile;

    fn pl2() -> Scenario {
        let dist = build_powerlaw(2.0, 14, 120).unwrap();
        Scenario::new(dist, 1.0, TimeProfile::Constant(0.07)).unwrap()
    }

    #[test]
    fn blowup_at_small_multiplier_counts_as_over_budget() {
        let dist = crate::network::build_poisson_truncated(6.0, 2, 12).unwrap();
        let scn = Scenario::new(dist, 1.0, crate::scenario::TimeProfile::Constant(0.2))
            .unwrap()
            .with_cost_weight(10.0)
            .with_grid_points(101)
            .unwrap();
        let i0 = alloc::vec![0.02; scn.n_classes()];
        assert!(resource_at(&scn, &i0, 1e-3).is_err());
        let r = budget_solve(&scn, &i0, 0.05).unwrap();
        assert!(r.gap < budget_threshold(0.05));
        assert_eq!(r.trace[0], (1e-3, f64::INFINITY));
    }

    #[test]
    fn threshold() {
        assert_eq!(budget_threshold(0.1), 1e-6);
        assert!((budget_threshold(1e-4) - 1e-7).abs() < 1e-20);
    }

    #[test]
    fn unit_multiplier_matches_unbudgeted_sweep() {
        let scn = pl2();
        let i0 = scn.initial_seed();
        let a = fbs_solve(&scn, &i0).unwrap();
        assert_eq!(resource_at(&scn, &i0, 1.0).unwrap(), a.control_cost);
    }

    #[test]
    fn resource_decreases_in_multiplier() {
        let scn = pl2();
        let i0 = scn.initial_seed();
        let r_half = resource_at(&scn, &i0, 0.5).unwrap();
        let r_two = resource_at(&scn, &i0, 2.0).unwrap();
        assert!(r_half > r_two, "{r_half} vs {r_two}");
    }

    #[test]
    fn pl2_budget_binds() {
        let scn = pl2();
        let report = budget_solve(&scn, &scn.initial_seed(), 0.1).unwrap();
        assert!(report.gap < 1e-6, "gap {}", report.gap);
        assert!((1e-3..=100.0).contains(&report.mu_star));
        assert_eq!(structural_check_budget(&scn, &report), StructuralVerdict::Holds);
        let rising = scn.clone().with_gamma(TimeProfile::Sigmoid { peak: 0.7, steepness: 10.0, midpoint: 0.5 });
        assert_eq!(structural_check_budget(&rising, &report), StructuralVerdict::NotApplicable);
    }

    #[test]
    fn unreachable_budget_is_a_bracket_error() {
        let scn = pl2();
        match budget_solve(&scn, &scn.initial_seed(), 1e9) {
            Err(Error::Bracket { resource_at_low, budget, .. }) => assert!(resource_at_low < budget),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invalid_budget() {
        let scn = pl2();
        assert!(matches!(budget_solve(&scn, &scn.initial_seed(), 0.0), Err(Error::Parameter(_))));
        assert!(matches!(budget_solve(&scn, &scn.initial_seed(), f64::NAN), Err(Error::Parameter(_))));
    }

    #[test]
    fn zero_control_is_trivially_monotone() {
        let scn = pl2();
        let mut report = fbs_solve(&scn, &scn.initial_seed()).unwrap();
        report.controls = Trajectory::zeros_for(&scn);
        assert_eq!(structure::monotone_structure(&scn, &report), StructuralVerdict::Holds);
    }

    #[test]
    fn more_budget_spreads_further() {
        let scn = pl2();
        let i0 = scn.initial_seed();
        let spreads: std::vec::Vec<f64> =
            [0.01, 0.1, 1.0].iter().map(|&b| budget_solve(&scn, &i0, b).unwrap().spread()).collect();
        assert!(spreads[0] <= spreads[1] && spreads[1] <= spreads[2], "{spreads:?}");
    }
}
