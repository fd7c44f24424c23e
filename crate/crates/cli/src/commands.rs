//! One function per subcommand.

use std::path::Path;

use epicampaign_core::heuristics::heuristic_controls;
use epicampaign_core::joint::joint_solve_with;
use epicampaign_core::simulator::{simulate_si_with, Network};
use epicampaign_core::structure::{self, StructuralVerdict};
use epicampaign_core::{
    aggregate, best_static, best_two_stage, budget_solve, check_convergence_bound, check_uniqueness,
    evaluate_reward, fbs_solve, fixed_budget_heuristics, integrate_state, Graph, HeuristicResult, JointOptions,
    Scenario, SeedRule, SeedSpec, SolveReport, Trajectory, Variant,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{load_scenario, LoadedScenario, ProfileSpec, ScenarioFile, SeedFile, VariantFile};
use crate::output::{header, OutputDir, RunInfo};
use crate::{Cli, CliError, Command, ControlChoice, Rayon, SweepParam};

/// Below this magnitude a heuristic reward is treated as zero and the
/// improvement columns report an absolute difference instead of a percentage.
const ZERO_REWARD: f64 = 1e-12;

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let loaded = load_scenario(&cli.scenario)?;
    if cli.command == Command::Sweep && cli.sweep_param.is_none() {
        return Err(CliError::Config("sweep needs --sweep-param and --sweep-values".into()));
    }
    if let Some(v) = cli.sweep_values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(CliError::Config(format!("sweep values must be finite and positive, got {v}")));
    }
    let run = RunInfo {
        subcommand: cli.command.name().to_string(),
        scenario_path: cli.scenario.display().to_string(),
        scenario_sha256: loaded.sha256.clone(),
        rng_seed: cli.seed,
        sweep_param: cli.sweep_param.map(|p| p.name().to_string()),
        sweep_values: cli.sweep_values.clone(),
    };
    let out = OutputDir::create(&cli.out, run)?;
    match cli.command {
        Command::Solve => solve(&loaded, &out),
        Command::SolveBudget => solve_budget(&loaded, &out),
        Command::SolveJoint => solve_joint(&loaded, &out, cli.seed),
        Command::Heuristic => heuristic(&loaded, &out),
        Command::Simulate => simulate(&loaded, &out, cli),
        Command::Validate => validate(&loaded, &out, cli),
        Command::Check => check(&loaded, &out),
        Command::Sweep => sweep(&loaded, &out, cli),
    }
}

#[derive(Debug, Serialize)]
struct SolveSummary {
    #[serde(rename = "J")]
    j: f64,
    spread_reward: f64,
    control_cost: f64,
    iterations: usize,
    converged: bool,
    stationarity_residual: f64,
    damping: f64,
}

impl SolveSummary {
    fn new(r: &SolveReport) -> Self {
        SolveSummary {
            j: r.reward,
            spread_reward: r.spread_reward,
            control_cost: r.control_cost,
            iterations: r.iterations,
            converged: r.converged,
            stationarity_residual: r.stationarity_residual,
            damping: r.damping,
        }
    }
}

fn write_solution(out: &OutputDir, scn: &Scenario, r: &SolveReport) -> Result<(), CliError> {
    out.distribution(&scn.dist)?;
    out.trajectory("states.csv", "i", &r.states)?;
    out.trajectory("controls.csv", "u", &r.controls)?;
    out.trajectory("adjoints.csv", "lambda", &r.adjoints)?;
    out.resource(scn, &r.controls)?;
    let total = aggregate(&scn.dist, &r.states);
    let rows = total.grid.iter().zip(&total.i_total).map(|(t, i)| vec![*t, *i]);
    out.csv("spread.csv", &header(&["t", "i"]), rows)
}

fn solve(loaded: &LoadedScenario, out: &OutputDir) -> Result<(), CliError> {
    let scn = &loaded.scenario;
    let r = fbs_solve(scn, &scn.initial_seed())?;
    write_solution(out, scn, &r)?;
    out.json("summary.json", &SolveSummary::new(&r))
}

fn required_budget(scn: &Scenario) -> Result<f64, CliError> {
    match scn.variant {
        Variant::FixedBudget { budget } => Ok(budget),
        _ => Err(CliError::Config("this subcommand needs variant {\"type\": \"fixed_budget\", \"B\": ...}".into())),
    }
}

fn solve_budget(loaded: &LoadedScenario, out: &OutputDir) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct Summary {
        #[serde(flatten)]
        solve: SolveSummary,
        budget: f64,
        mu_star: f64,
        resource_used: f64,
        gap: f64,
    }
    let scn = &loaded.scenario;
    let budget = required_budget(scn)?;
    let r = budget_solve(scn, &scn.initial_seed(), budget)?;
    write_solution(out, scn, &r.base)?;
    out.csv("bisection.csv", &header(&["mu", "resource"]), r.trace.iter().map(|(m, x)| vec![*m, *x]))?;
    let mut solve = SolveSummary::new(&r.base);
    // the budgeted objective is the spread alone
    solve.j = r.spread();
    out.json(
        "summary.json",
        &Summary { solve, budget, mu_star: r.mu_star, resource_used: r.resource_used, gap: r.gap },
    )
}

fn solve_joint(loaded: &LoadedScenario, out: &OutputDir, rng_seed: u64) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct Summary {
        #[serde(flatten)]
        solve: SolveSummary,
        seed_budget: f64,
        outer_iterations: usize,
        grad_norm: f64,
    }
    let scn = &loaded.scenario;
    let budget = scn.seed_budget();
    let opts = JointOptions { rng_seed, ..JointOptions::default() };
    let r = joint_solve_with(scn, budget, &opts, &Rayon)?;
    write_solution(out, scn, &r.report)?;
    out.seeds(&scn.dist, r.seed.values())?;
    let summary = Summary {
        solve: SolveSummary::new(&r.report),
        seed_budget: budget,
        outer_iterations: r.outer_iterations,
        grad_norm: r.grad_norm,
    };
    out.json("summary.json", &summary)
}

#[derive(Debug, Serialize)]
struct HeuristicSummary {
    kind: &'static str,
    level: f64,
    #[serde(rename = "J")]
    j: f64,
    spread: f64,
    resource_used: f64,
}

impl From<&HeuristicResult> for HeuristicSummary {
    fn from(h: &HeuristicResult) -> Self {
        HeuristicSummary {
            kind: h.kind.name(),
            level: h.level,
            j: h.reward,
            spread: h.spread,
            resource_used: h.resource_used,
        }
    }
}

/// Best heuristics for the scenario's problem: budget-matched when the
/// variant is `fixed_budget`, reward-maximizing otherwise.
fn heuristics_for(scn: &Scenario) -> Result<[HeuristicResult; 2], CliError> {
    let i0 = scn.initial_seed();
    Ok(match scn.variant {
        Variant::FixedBudget { budget } => {
            let (st, two) = fixed_budget_heuristics(scn, &i0, budget)?;
            [st, two]
        }
        _ => [best_static(scn, &i0)?, best_two_stage(scn, &i0)?],
    })
}

fn heuristic(loaded: &LoadedScenario, out: &OutputDir) -> Result<(), CliError> {
    let scn = &loaded.scenario;
    let results = heuristics_for(scn)?;
    for h in &results {
        let controls = heuristic_controls(scn, h.kind, h.level);
        let states = integrate_state(scn, &controls, &scn.initial_seed())?;
        out.trajectory(&format!("controls_{}.csv", h.kind.name()), "u", &controls)?;
        out.trajectory(&format!("states_{}.csv", h.kind.name()), "i", &states)?;
    }
    let summaries: Vec<HeuristicSummary> = results.iter().map(HeuristicSummary::from).collect();
    out.json("summary.json", &summaries)
}

fn chosen_controls(scn: &Scenario, choice: ControlChoice) -> Result<Option<Trajectory>, CliError> {
    let i0 = scn.initial_seed();
    Ok(match choice {
        ControlChoice::None => None,
        ControlChoice::Optimal => Some(match scn.variant {
            Variant::FixedBudget { budget } => budget_solve(scn, &i0, budget)?.base.controls,
            _ => fbs_solve(scn, &i0)?.controls,
        }),
        ControlChoice::Static | ControlChoice::TwoStage => {
            let [st, two] = heuristics_for(scn)?;
            let h = if choice == ControlChoice::Static { st } else { two };
            Some(heuristic_controls(scn, h.kind, h.level))
        }
    })
}

fn seed_rule(scn: &Scenario) -> SeedRule {
    match &scn.seed {
        SeedSpec::Uniform(i0) => SeedRule::Uniform(*i0),
        _ => SeedRule::PerClass(scn.initial_seed()),
    }
}

/// Runs the simulator on the empirical graph when the scenario has one and
/// on fresh configuration-model graphs otherwise.
fn run_simulation(
    loaded: &LoadedScenario,
    controls: Option<&Trajectory>,
    cli: &Cli,
) -> Result<epicampaign_core::SimOutcome, CliError> {
    let scn = &loaded.scenario;
    let graph = match &loaded.edges {
        Some(edges) => Some(Graph::from_named_edges(edges)?),
        None => None,
    };
    let network = match &graph {
        Some(g) => Network::Fixed(g),
        None => Network::Regenerated { dist: &scn.dist, nodes: cli.nodes },
    };
    Ok(simulate_si_with(network, scn, controls, &seed_rule(scn), cli.runs, cli.seed, &Rayon)?)
}

fn simulate(loaded: &LoadedScenario, out: &OutputDir, cli: &Cli) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct Summary {
        controls: &'static str,
        nodes: usize,
        n_runs: usize,
        rng_seed: u64,
        #[serde(rename = "mean_i_T")]
        mean_i_t: f64,
        #[serde(rename = "std_i_T")]
        std_i_t: f64,
    }
    let scn = &loaded.scenario;
    let controls = chosen_controls(scn, cli.controls)?;
    let sim = run_simulation(loaded, controls.as_ref(), cli)?;
    let rows = (0..sim.grid.len()).map(|j| vec![sim.grid[j], sim.mean_i[j], sim.std_i[j]]);
    out.csv("simulation.csv", &header(&["t", "mean_i", "std_i"]), rows)?;
    let runs = sim.final_i.iter().enumerate().map(|(r, x)| vec![r as f64, *x]);
    out.csv("runs.csv", &header(&["run", "i_T"]), runs)?;
    let last = sim.grid.len() - 1;
    let nodes = loaded.edges.as_ref().map_or(cli.nodes, |_| 0);
    out.json(
        "summary.json",
        &Summary {
            controls: choice_name(cli.controls),
            nodes,
            n_runs: sim.n_runs,
            rng_seed: sim.rng_seed,
            mean_i_t: sim.mean_i[last],
            std_i_t: sim.std_i[last],
        },
    )
}

fn choice_name(choice: ControlChoice) -> &'static str {
    match choice {
        ControlChoice::None => "none",
        ControlChoice::Optimal => "optimal",
        ControlChoice::Static => "static",
        ControlChoice::TwoStage => "two_stage",
    }
}

fn validate(loaded: &LoadedScenario, out: &OutputDir, cli: &Cli) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct Summary {
        controls: &'static str,
        n_runs: usize,
        #[serde(rename = "model_i_T")]
        model_i_t: f64,
        #[serde(rename = "simulated_i_T")]
        simulated_i_t: f64,
        #[serde(rename = "std_i_T")]
        std_i_t: f64,
        terminal_gap: f64,
        tolerance: f64,
        within_tolerance: bool,
        /// Smallest `model − simulated` over the grid; non-negative when the
        /// model overestimates everywhere.
        min_model_margin: f64,
    }
    let scn = &loaded.scenario;
    let controls = chosen_controls(scn, cli.controls)?;
    let zeros = Trajectory::zeros_for(scn);
    let states = integrate_state(scn, controls.as_ref().unwrap_or(&zeros), &scn.initial_seed())?;
    let model = aggregate(&scn.dist, &states).i_total;
    let sim = run_simulation(loaded, controls.as_ref(), cli)?;
    let rows = (0..sim.grid.len()).map(|j| vec![sim.grid[j], model[j], sim.mean_i[j], sim.std_i[j]]);
    out.csv("validation.csv", &header(&["t", "model_i", "mean_i", "std_i"]), rows)?;
    let last = sim.grid.len() - 1;
    let gap = (sim.mean_i[last] - model[last]).abs();
    let tolerance = 3.0 * (sim.std_i[last] / (sim.n_runs as f64).sqrt() + 0.005);
    let min_model_margin = model.iter().zip(&sim.mean_i).map(|(m, s)| m - s).fold(f64::INFINITY, f64::min);
    out.json(
        "summary.json",
        &Summary {
            controls: choice_name(cli.controls),
            n_runs: sim.n_runs,
            model_i_t: model[last],
            simulated_i_t: sim.mean_i[last],
            std_i_t: sim.std_i[last],
            terminal_gap: gap,
            tolerance,
            within_tolerance: gap < tolerance,
            min_model_margin,
        },
    )
}

fn verdict(v: StructuralVerdict) -> &'static str {
    match v {
        StructuralVerdict::Holds => "holds",
        StructuralVerdict::Violated => "violated",
        StructuralVerdict::NotApplicable => "not_applicable",
    }
}

fn check(loaded: &LoadedScenario, out: &OutputDir) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct Bound {
        lhs: f64,
        holds: bool,
    }
    #[derive(Serialize)]
    struct Summary {
        converged: bool,
        stationarity_residual: f64,
        u_max: f64,
        lambda_max: f64,
        convergence_bound: Bound,
        uniqueness_bound: Bound,
        adjoints_nonnegative: bool,
        controls_non_increasing: &'static str,
        controls_convex: &'static str,
    }
    let scn = &loaded.scenario;
    let r = fbs_solve(scn, &scn.initial_seed())?;
    let (u_max, lambda_max) = (r.controls.max_value(), r.adjoints.max_value());
    let conv = check_convergence_bound(scn, u_max, lambda_max);
    let uniq = check_uniqueness(scn, lambda_max);
    out.json(
        "check.json",
        &Summary {
            converged: r.converged,
            stationarity_residual: r.stationarity_residual,
            u_max,
            lambda_max,
            convergence_bound: Bound { lhs: conv.lhs, holds: conv.holds },
            uniqueness_bound: Bound { lhs: uniq.lhs, holds: uniq.holds },
            adjoints_nonnegative: structure::adjoints_nonnegative(&r),
            controls_non_increasing: verdict(structure::monotone_structure(scn, &r)),
            controls_convex: verdict(structure::convex_structure(scn, &r)),
        },
    )
}

/// Copy of `file` with the swept parameter set to `value`.
fn with_param(file: &ScenarioFile, param: SweepParam, value: f64) -> ScenarioFile {
    let mut f = file.clone();
    match param {
        SweepParam::B => f.cost.b = value,
        SweepParam::Beta => f.beta = ProfileSpec::Constant { value },
        SweepParam::Gamma => f.gamma = Some(ProfileSpec::Constant { value }),
        SweepParam::Horizon => f.horizon = value,
        SweepParam::I0 => f.seed = SeedFile::Uniform { i0: value },
        SweepParam::SeedBudget => {
            f.seed = SeedFile::Optimize { b_i0: value };
            if let VariantFile::Joint { .. } = f.variant {
                f.variant = VariantFile::Joint { budget: None };
            }
        }
    }
    f
}

#[derive(Debug, Clone, Serialize)]
struct SweepPoint {
    param: &'static str,
    value: f64,
    optimal: f64,
    joint: f64,
    #[serde(rename = "static")]
    static_: f64,
    two_stage: f64,
    uncontrolled: f64,
    improvement_static: f64,
    improvement_two_stage: f64,
}

/// `100 (J_opt − J_heur) / |J_heur|`, or the plain difference when the
/// heuristic reward is numerically zero.
pub fn improvement(optimal: f64, heuristic: f64) -> f64 {
    if heuristic.abs() < ZERO_REWARD {
        optimal - heuristic
    } else {
        100.0 * (optimal - heuristic) / heuristic.abs()
    }
}

fn sweep_point(file: &ScenarioFile, base: &Path, param: SweepParam, value: f64, rng_seed: u64) -> Result<SweepPoint, CliError> {
    let (scn, _) = with_param(file, param, value).build(base)?;
    let i0 = scn.initial_seed();
    let uncontrolled = evaluate_reward(&scn, &Trajectory::zeros_for(&scn), &i0)?.net;
    let optimal = fbs_solve(&scn, &i0)?.reward;
    let st = best_static(&scn, &i0)?.reward;
    let two = best_two_stage(&scn, &i0)?.reward;
    let opts = JointOptions { rng_seed, initial: Some(i0.clone()), ..JointOptions::default() };
    let joint = joint_solve_with(&scn, scn.seed_budget(), &opts, &Rayon)?.report.reward;
    Ok(SweepPoint {
        param: param.name(),
        value,
        optimal,
        joint,
        static_: st,
        two_stage: two,
        uncontrolled,
        improvement_static: improvement(optimal, st),
        improvement_two_stage: improvement(optimal, two),
    })
}

fn sweep(loaded: &LoadedScenario, out: &OutputDir, cli: &Cli) -> Result<(), CliError> {
    let param = cli.sweep_param.expect("checked in run");
    let base = cli.scenario.parent().unwrap_or(Path::new("."));
    // grid points are independent jobs, each writing its own file
    let points = cli
        .sweep_values
        .par_iter()
        .map(|&v| {
            let p = sweep_point(&loaded.file, base, param, v, cli.seed)?;
            out.json(&format!("sweep_{}_{}.json", param.name(), v), &p)?;
            Ok(p)
        })
        .collect::<Vec<Result<SweepPoint, CliError>>>()
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let cols = header(&[
        param.name(),
        "optimal",
        "joint",
        "static",
        "two_stage",
        "uncontrolled",
        "improvement_static",
        "improvement_two_stage",
    ]);
    let rows = points.iter().map(|p| {
        vec![
            p.value,
            p.optimal,
            p.joint,
            p.static_,
            p.two_stage,
            p.uncontrolled,
            p.improvement_static,
            p.improvement_two_stage,
        ]
    });
    out.csv(&format!("sweep_{}.csv", param.name()), &cols, rows)
}
