//! Checks for the structural properties of optimal solutions: nonnegative
//! adjoints, controls non-increasing in time when `γ` is non-increasing, and
//! convex controls when additionally `β` is non-increasing and `γ` convex.

use crate::dynamics::Trajectory;
use crate::pmp::SolveReport;
use crate::scenario::{samples_convex, samples_non_increasing, Scenario};

/// Lower bound accepted for adjoint values.
pub const ADJOINT_TOL: f64 = 1e-9;
/// Largest accepted per-step increase of a control.
pub const MONOTONE_TOL: f64 = 1e-9;
/// Largest accepted negative second difference of a control.
pub const CONVEXITY_TOL: f64 = 1e-8;

/// Tolerance used when testing whether sampled profiles are monotone/convex.
const PROFILE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructuralVerdict {
    Holds,
    Violated,
    /// The hypotheses of the property are not met by the scenario profiles.
    NotApplicable,
}

impl StructuralVerdict {
    fn from_bool(ok: bool) -> Self {
        if ok {
            StructuralVerdict::Holds
        } else {
            StructuralVerdict::Violated
        }
    }
}

/// Largest increase `u_k(t_{j+1}) − u_k(t_j)` over all classes, or 0.
pub fn non_increasing_violation(controls: &Trajectory) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 1..controls.n_times() {
        for (now, before) in controls.row(j).iter().zip(controls.row(j - 1)) {
            worst = worst.max(now - before);
        }
    }
    worst
}

/// Largest negative second difference of any control series, as a positive
/// number, or 0.
pub fn convexity_violation(controls: &Trajectory) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 2..controls.n_times() {
        let (a, b, c) = (controls.row(j - 2), controls.row(j - 1), controls.row(j));
        for k in 0..controls.n_classes() {
            worst = worst.max(-(c[k] - 2.0 * b[k] + a[k]));
        }
    }
    worst
}

/// Whether the monotonicity hypothesis `dγ/dt ≤ 0` holds on the grid.
pub fn monotonicity_applies(scn: &Scenario) -> bool {
    samples_non_increasing(&scn.gamma_samples(), PROFILE_TOL)
}

/// Whether the convexity hypotheses (non-increasing `β` and `γ`, convex `γ`)
/// hold on the grid.
pub fn convexity_applies(scn: &Scenario) -> bool {
    let gamma = scn.gamma_samples();
    samples_non_increasing(&scn.beta_samples(), PROFILE_TOL)
        && samples_non_increasing(&gamma, PROFILE_TOL)
        && samples_convex(&gamma, PROFILE_TOL)
}

/// Adjoint positivity everywhere.
pub fn adjoints_nonnegative(report: &SolveReport) -> bool {
    report.adjoints.min_value() >= -ADJOINT_TOL
}

/// Adjoint positivity together with non-increasing controls, gated on the
/// monotonicity hypothesis.
pub fn monotone_structure(scn: &Scenario, report: &SolveReport) -> StructuralVerdict {
    if !monotonicity_applies(scn) {
        return StructuralVerdict::NotApplicable;
    }
    StructuralVerdict::from_bool(
        adjoints_nonnegative(report) && non_increasing_violation(&report.controls) <= MONOTONE_TOL,
    )
}

/// Convexity of every control series, gated on its hypotheses.
pub fn convex_structure(scn: &Scenario, report: &SolveReport) -> StructuralVerdict {
    if !convexity_applies(scn) {
        return StructuralVerdict::NotApplicable;
    }
    StructuralVerdict::from_bool(convexity_violation(&report.controls) <= CONVEXITY_TOL)
}
