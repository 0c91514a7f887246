//! The five subcommands. Each writes its tables into the output directory and
//! prints `key = value` summary lines on standard output.

use std::path::PathBuf;

use hystdiff::diagnostics::{
    energy_report, geometric_sample_times, l1_stability_report, nodal_hilpert_defect, omega_limit_probe,
};
use hystdiff::stationary::{solve_stationary, StationaryOptions, StationarySolution};
use hystdiff::stepper::{run, Trace};

use crate::config::SimulationSpec;
use crate::error::CliError;
use crate::output::{num, CsvTable};

/// Slack allowed in the energy inequalities checked by `verify`.
pub const VERIFY_SLACK_TOL: f64 = 1e-8;
/// Tolerance for the sampled growth and monotonicity margins in `verify`.
pub const VERIFY_CONVEX_TOL: f64 = 1e-12;
/// Samples drawn by the energy self-checks in `verify`.
pub const VERIFY_SAMPLES: usize = 1000;
/// `stability` fails when the defect exceeds this times `h + dx`.
pub const STABILITY_CONSTANT: f64 = 0.05;
/// Number of geometric sample times used by `longtime`.
pub const LONGTIME_SAMPLES: usize = 10;

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: PathBuf,
    /// Overrides `output.stride`.
    pub stride: Option<usize>,
    pub workers: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
        }
    }

    fn from(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

fn prepare(opts: &RunOptions) -> Result<(), CliError> {
    if opts.stride == Some(0) {
        return Err(CliError::Usage("--stride must be >= 1".into()));
    }
    if opts.workers == 0 {
        return Err(CliError::Usage("--workers must be >= 1".into()));
    }
    std::fs::create_dir_all(&opts.out).map_err(|source| CliError::Io {
        path: opts.out.clone(),
        source,
    })
}

fn say(key: &str, value: impl std::fmt::Display) {
    println!("{key} = {value}");
}

fn trace_table(name: &'static str, trace: &Trace, stride: usize) -> CsvTable {
    let n = trace.grid.n_nodes();
    let mut nodes: Vec<usize> = (0..n).step_by(stride).collect();
    if nodes.last() != Some(&(n - 1)) {
        nodes.push(n - 1);
    }
    let mut columns = vec!["t".to_string()];
    columns.extend(nodes.iter().map(|i| format!("u_{i}")));
    columns.extend(
        ["sigma", "du_l2", "grad_lp", "newton_iters", "step_energy_slack"]
            .iter()
            .map(|s| s.to_string()),
    );
    let mut table = CsvTable::new(name, columns);
    table.note("nodes", n);
    table.note("node_stride", stride);
    for r in &trace.records {
        let mut row = vec![num(r.time)];
        row.extend(nodes.iter().map(|&i| num(r.u[i])));
        row.push(num(r.sigma));
        row.push(num(r.du_l2));
        row.push(num(r.grad_lp));
        row.push(r.newton_iters.to_string());
        row.push(num(r.step_slack));
        table.rows.push(row);
    }
    table
}

fn solution_table(spec: &SimulationSpec, sol: &StationarySolution) -> CsvTable {
    let grid = spec.grid();
    let mut table = CsvTable::new("stationary", vec!["x".into(), "u".into()]);
    table.note("iterations", sol.iterations);
    table.note("scaled_residual", num(sol.scaled_residual));
    table.note("residual_sup", num(sol.residual_sup));
    for (x, u) in grid.nodes().iter().zip(sol.u.values()) {
        table.rows.push(vec![num(*x), num(*u)]);
    }
    table
}

fn stride(spec: &SimulationSpec, opts: &RunOptions) -> usize {
    opts.stride.unwrap_or(spec.output.stride)
}

pub fn simulate(spec: &SimulationSpec, opts: &RunOptions) -> Result<Status, CliError> {
    prepare(opts)?;
    let trace = run(&spec.problem()?)?;
    trace_table("trace", &trace, stride(spec, opts)).write(spec, &opts.out)?;
    let last = trace.records.last().expect("traces hold level 0");
    say("levels", trace.records.len() - 1);
    say("final_time", num(last.time));
    say("final_sigma", num(last.sigma));
    Ok(Status::Pass)
}

pub fn stationary(spec: &SimulationSpec, opts: &RunOptions) -> Result<Status, CliError> {
    prepare(opts)?;
    let g = spec.stationary_load();
    let sol = solve_stationary(&spec.grid(), &spec.energy_model(), &g, None, &StationaryOptions::default())?;
    solution_table(spec, &sol).write(spec, &opts.out)?;
    say("iterations", sol.iterations);
    say("scaled_residual", num(sol.scaled_residual));
    say("residual_sup", num(sol.residual_sup));
    Ok(Status::Pass)
}

pub fn verify(spec: &SimulationSpec, opts: &RunOptions) -> Result<Status, CliError> {
    prepare(opts)?;
    let trace = run(&spec.problem()?)?;
    trace_table("trace", &trace, stride(spec, opts)).write(spec, &opts.out)?;
    let rep = energy_report(&trace)?;
    let energy = spec.energy_model();
    let growth = energy.verify_growth(VERIFY_SAMPLES, opts.seed)?;
    let mono = energy.verify_monotone(VERIFY_SAMPLES, opts.seed)?;

    // (check, value, threshold, passed): value >= threshold unless noted
    let checks: Vec<(&str, f64, f64, bool)> = vec![
        ("step_energy_slack", rep.step_worst_slack, -VERIFY_SLACK_TOL, rep.step_worst_slack >= -VERIFY_SLACK_TOL),
        (
            "window_energy_slack",
            rep.window_worst_slack,
            -VERIFY_SLACK_TOL,
            rep.window_worst_slack >= -VERIFY_SLACK_TOL,
        ),
        (
            "a_priori_total",
            rep.rate_sum + rep.sup_grad_pow,
            rep.a_priori_bound,
            rep.a_priori_holds(),
        ),
        ("chain_violation", rep.chain_violation, 1e-12, rep.chain_violation <= 1e-12),
        ("hysteresis_dissipation", rep.dissipation_worst, -1e-14, rep.dissipation_worst >= -1e-14),
        ("sigma_bounds_margin", rep.sigma_bounds_worst, -1e-12, rep.sigma_bounds_worst >= -1e-12),
        ("growth_margin", growth.worst(), -VERIFY_CONVEX_TOL, growth.passed(VERIFY_CONVEX_TOL)),
        (
            "monotone_gap",
            mono.min_gap_normalized,
            -VERIFY_CONVEX_TOL,
            mono.min_gap_normalized >= -VERIFY_CONVEX_TOL,
        ),
        ("lipschitz_margin", mono.lipschitz, -VERIFY_CONVEX_TOL, mono.lipschitz >= -VERIFY_CONVEX_TOL),
    ];
    let mut table = CsvTable::new(
        "energy_report",
        ["check", "value", "threshold", "passed"].iter().map(|s| s.to_string()).collect(),
    );
    table.note("seed", opts.seed);
    table.note("step_witness", rep.step_witness);
    table.note("window_witness", format!("[{}, {}]", rep.window_witness.0, rep.window_witness.1));
    let mut all = true;
    for (name, value, threshold, ok) in checks {
        all &= ok;
        table
            .rows
            .push(vec![name.to_string(), num(value), num(threshold), ok.to_string()]);
        say(name, format!("{} ({})", num(value), if ok { "pass" } else { "FAIL" }));
    }
    table.write(spec, &opts.out)?;
    say("passed", all);
    Ok(Status::from(all))
}

fn same_setting(a: &SimulationSpec, b: &SimulationSpec) -> bool {
    a.grid == b.grid
        && a.energy == b.energy
        && a.hysteresis == b.hysteresis
        && a.coefficient == b.coefficient
        && a.time == b.time
        && a.solver == b.solver
}

/// Runs `first` and `second`, which may differ only in load and initial data.
pub fn stability(first: &SimulationSpec, second: &SimulationSpec, opts: &RunOptions) -> Result<Status, CliError> {
    prepare(opts)?;
    if !same_setting(first, second) {
        return Err(CliError::Usage(
            "the two configurations may differ only in [load] and [initial]".into(),
        ));
    }
    let (p1, p2) = (first.problem()?, second.problem()?);
    let (t1, t2) = if opts.workers >= 2 {
        std::thread::scope(|s| {
            let h1 = s.spawn(|| run(&p1));
            let h2 = s.spawn(|| run(&p2));
            (h1.join().expect("worker panicked"), h2.join().expect("worker panicked"))
        })
    } else {
        (run(&p1), run(&p2))
    };
    let (t1, t2) = (t1?, t2?);
    let rep = l1_stability_report(&t1, &t2)?;
    let hilpert = nodal_hilpert_defect(&t1, &t2, &p1.hysteresis)?;
    let tol = STABILITY_CONSTANT * (t1.h + t1.grid.dx());
    let ok = rep.max_defect <= tol;

    let s = stride(first, opts);
    trace_table("trace_first", &t1, s).write(first, &opts.out)?;
    trace_table("trace_second", &t2, s).write(second, &opts.out)?;
    let mut table = CsvTable::new(
        "stability",
        ["t", "distance", "bound", "bound_unweighted", "defect"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
    );
    table.note("max_defect", num(rep.max_defect));
    table.note("max_defect_unweighted", num(rep.max_defect_unweighted));
    table.note("witness_level", rep.witness_level);
    table.note("hilpert_nodal_defect", num(hilpert));
    table.note("tolerance", num(tol));
    table.note("passed", ok);
    for m in 0..rep.times.len() {
        table.rows.push(vec![
            num(rep.times[m]),
            num(rep.distance[m]),
            num(rep.bound[m]),
            num(rep.bound_unweighted[m]),
            num(rep.distance[m] - rep.bound[m]),
        ]);
    }
    table.write(first, &opts.out)?;
    say("max_defect", num(rep.max_defect));
    say("max_defect_unweighted", num(rep.max_defect_unweighted));
    say("hilpert_nodal_defect", num(hilpert));
    say("tolerance", num(tol));
    say("passed", ok);
    Ok(Status::from(ok))
}

pub fn longtime(spec: &SimulationSpec, opts: &RunOptions) -> Result<Status, CliError> {
    prepare(opts)?;
    let trace = run(&spec.problem()?)?;
    let grid = spec.grid();
    let u_end = final_field(&trace);
    let sol = solve_stationary(
        &grid,
        &spec.energy_model(),
        &spec.stationary_load(),
        Some(&u_end),
        &StationaryOptions::default(),
    )?;
    let samples = geometric_sample_times(spec.time.final_time, LONGTIME_SAMPLES);
    let rep = omega_limit_probe(&trace, &sol.u, &samples)?;

    trace_table("trace", &trace, stride(spec, opts)).write(spec, &opts.out)?;
    solution_table(spec, &sol).write(spec, &opts.out)?;
    let mut table = CsvTable::new("omega_limit", vec!["t".into(), "distance".into()]);
    table.note("final_distance", num(rep.final_distance));
    table.note("distances_eventually_decreasing", rep.distances_eventually_decreasing);
    table.note("tail_nonincreasing", rep.tail_nonincreasing);
    table.note(
        "tail_norms",
        format!("[{}]", rep.tail_norms.iter().map(|v| num(*v)).collect::<Vec<_>>().join(", ")),
    );
    for (t, d) in rep.sample_times.iter().zip(&rep.distances) {
        table.rows.push(vec![num(*t), num(*d)]);
    }
    table.write(spec, &opts.out)?;
    say("final_distance", num(rep.final_distance));
    say("distances_eventually_decreasing", rep.distances_eventually_decreasing);
    say("tail_nonincreasing", rep.tail_nonincreasing);
    Ok(Status::Pass)
}

fn final_field(trace: &Trace) -> hystdiff::grid::Field {
    let last = trace.records.last().expect("traces hold level 0");
    hystdiff::grid::Field::dirichlet(last.u.clone()).expect("recorded fields vanish on the boundary")
}
