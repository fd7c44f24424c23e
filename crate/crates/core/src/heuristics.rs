//! Baseline strategies: one control level applied to every degree class,
//! either for the whole horizon (static) or for the first half only
//! (two-stage).

use alloc::format;

use crate::dynamics::{Model, Trajectory};
use crate::error::{Error, Result};
use crate::pmp::{evaluate_reward, resource_used, Reward};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeuristicKind {
    Static,
    TwoStage,
}

impl HeuristicKind {
    pub fn name(self) -> &'static str {
        match self {
            HeuristicKind::Static => "static",
            HeuristicKind::TwoStage => "two_stage",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeuristicResult {
    pub kind: HeuristicKind,
    pub level: f64,
    /// Objective of the problem the heuristic was computed for: net reward
    /// for the unbudgeted problem, spread for the fixed-budget problem.
    pub reward: f64,
    pub spread: f64,
    pub resource_used: f64,
}

/// Tolerance on the level in the golden-section search.
pub const LEVEL_TOL: f64 = 1e-7;

/// Control trajectory of a heuristic at `level`.
///
/// The two-stage control is `level` before `T/2` and zero after. A grid point
/// falling exactly on `T/2` gets `level/√2`, so that the trapezoid integral
/// of `u²` equals `level² T/2` exactly on grids with an odd number of points.
pub fn heuristic_controls(scn: &Scenario, kind: HeuristicKind, level: f64) -> Trajectory {
    let half = 0.5 * scn.horizon();
    let times = scn.times();
    Trajectory::for_scenario(scn, |_, j| match kind {
        HeuristicKind::Static => level,
        HeuristicKind::TwoStage => {
            let t = times[j];
            if t < half {
                level
            } else if t == half {
                level * core::f64::consts::FRAC_1_SQRT_2
            } else {
                0.0
            }
        }
    })
}

fn evaluate(scn: &Scenario, i0: &[f64], kind: HeuristicKind, level: f64) -> Result<Reward> {
    evaluate_reward(scn, &heuristic_controls(scn, kind, level), i0)
}

fn search(scn: &Scenario, i0: &[f64], kind: HeuristicKind) -> Result<HeuristicResult> {
    Model::new(scn).check_controls(&Trajectory::zeros_for(scn))?;
    let objective = |level: f64| -> Result<f64> { Ok(evaluate(scn, i0, kind, level)?.net) };

    // Bracket by doubling until the reward drops.
    let (mut lo, mut mid, mut hi) = (0.0, 0.0, 1.0);
    let mut best = objective(0.0)?;
    for _ in 0..64 {
        let cur = objective(hi)?;
        if cur < best {
            break;
        }
        best = cur;
        lo = mid;
        mid = hi;
        hi *= 2.0;
    }

    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = objective(x1)?;
    let mut f2 = objective(x2)?;
    while b - a > LEVEL_TOL {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = objective(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = objective(x1)?;
        }
    }
    let mut level = 0.5 * (a + b);
    if objective(0.0)? >= objective(level)? {
        level = 0.0;
    }
    let reward = evaluate(scn, i0, kind, level)?;
    Ok(HeuristicResult {
        kind,
        level,
        reward: reward.net,
        spread: reward.spread,
        resource_used: reward.cost,
    })
}

/// Best constant control for the unbudgeted problem.
pub fn best_static(scn: &Scenario, i0: &[f64]) -> Result<HeuristicResult> {
    search(scn, i0, HeuristicKind::Static)
}

/// Best control that is constant on the first half of the horizon and zero
/// afterwards, for the unbudgeted problem.
pub fn best_two_stage(scn: &Scenario, i0: &[f64]) -> Result<HeuristicResult> {
    search(scn, i0, HeuristicKind::TwoStage)
}

/// Static and two-stage controls that spend exactly `budget`; the levels are
/// `√(B / (Σc_k T))` and `√(2B / (Σc_k T))`. Rewards are the spread.
pub fn fixed_budget_heuristics(
    scn: &Scenario,
    i0: &[f64],
    budget: f64,
) -> Result<(HeuristicResult, HeuristicResult)> {
    if !(budget >= 0.0) || !budget.is_finite() {
        return Err(Error::Parameter(format!("budget must be nonnegative and finite, got {budget}")));
    }
    let total: f64 = scn.cost_coefficients().iter().sum();
    if !(total > 0.0) {
        return Err(Error::CostModel(format!("sum of cost coefficients is {total}")));
    }
    let base = budget / (total * scn.horizon());
    let make = |kind: HeuristicKind, level: f64| -> Result<HeuristicResult> {
        let controls = heuristic_controls(scn, kind, level);
        let reward = evaluate_reward(scn, &controls, i0)?;
        Ok(HeuristicResult {
            kind,
            level,
            reward: reward.spread,
            spread: reward.spread,
            resource_used: resource_used(scn, &controls),
        })
    };
    Ok((
        make(HeuristicKind::Static, libm::sqrt(base))?,
        make(HeuristicKind::TwoStage, libm::sqrt(2.0 * base))?,
    ))
}
