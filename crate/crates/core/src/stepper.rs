//! Implicit Euler stepping with nodal hysteresis.
//!
//! Each level solves, at every interior node `i`,
//! `c_i (u_i - u_i') dx/h + (W_i(u_i) - w_i') dx/h + R_i(u) = 0`
//! where `R` is the diffusion residual including the averaged load and `W_i`
//! extends the node's input string by `u_i`. The unknown used by Newton is
//! the nodal enthalpy `z_i = c_i u_i + W_i(u_i)`: `u_i` is a continuous
//! function of `z_i` even where relay families jump.

use crate::energy::EnergyModel;
use crate::error::{Error, Result};
use crate::grid::{validate_capacity, Field, Grid1D};
use crate::hysteresis::{HysteresisModel, LastValueMap, MemoryState};
use crate::linalg::solve_tridiagonal;
use crate::load::Load;

#[derive(Debug, Clone, PartialEq)]
pub struct StepConfig {
    /// Number of time levels.
    pub ell: usize,
    pub final_time: f64,
    /// Bound on the scaled residual `max_i |G_i| / (dx (1 + |f_m|_L2))`.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub line_search_shrink: f64,
    /// Adds `1e-10 (1 + s)` to every cell slope `s` of the tangent.
    pub regularize_degenerate: bool,
    /// Maximum depth of step halving after a failed solve; 0 disables it.
    pub retry_halving: usize,
}

impl StepConfig {
    pub fn new(ell: usize, final_time: f64) -> Result<Self> {
        let cfg = StepConfig {
            ell,
            final_time,
            newton_tol: 1e-10,
            newton_max_iter: 50,
            line_search_shrink: 0.5,
            regularize_degenerate: true,
            retry_halving: 0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ell == 0 {
            return Err(Error::Domain("ell must be >= 1".into()));
        }
        if !(self.final_time.is_finite() && self.final_time > 0.0) {
            return Err(Error::Domain(format!("final time must be > 0, got {}", self.final_time)));
        }
        if !(self.newton_tol.is_finite() && self.newton_tol > 0.0) {
            return Err(Error::Domain("newton_tol must be > 0".into()));
        }
        if self.newton_max_iter == 0 {
            return Err(Error::Domain("newton_max_iter must be >= 1".into()));
        }
        if !(self.line_search_shrink > 0.0 && self.line_search_shrink < 1.0) {
            return Err(Error::Domain("line_search_shrink must lie in (0, 1)".into()));
        }
        Ok(())
    }

    pub fn h(&self) -> f64 {
        self.final_time / self.ell as f64
    }

    /// Time of level `m`; level `ell` is exactly the final time.
    pub fn time(&self, m: usize) -> f64 {
        if m == self.ell {
            self.final_time
        } else {
            m as f64 * self.h()
        }
    }
}

/// Assignment of a hysteresis model to every node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeHysteresis {
    models: Vec<HysteresisModel>,
    index: Vec<usize>,
}

impl NodeHysteresis {
    pub fn uniform(model: HysteresisModel, n_nodes: usize) -> Self {
        NodeHysteresis {
            models: vec![model],
            index: vec![0; n_nodes],
        }
    }

    /// `index[i]` selects the model of node `i`.
    pub fn regions(models: Vec<HysteresisModel>, index: Vec<usize>) -> Result<Self> {
        if let Some(i) = index.iter().position(|&k| k >= models.len()) {
            return Err(Error::Domain(format!(
                "node {i} refers to hysteresis model {} of {}",
                index[i],
                models.len()
            )));
        }
        Ok(NodeHysteresis { models, index })
    }

    pub fn model_at(&self, node: usize) -> &HysteresisModel {
        &self.models[self.index[node]]
    }

    pub fn models(&self) -> &[HysteresisModel] {
        &self.models
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }
}

/// Everything a run needs.
#[derive(Debug, Clone)]
pub struct Problem {
    pub grid: Grid1D,
    pub energy: EnergyModel,
    /// Nodal capacity `c`, bounded below by a positive constant.
    pub capacity: Vec<f64>,
    pub hysteresis: NodeHysteresis,
    pub load: Load,
    pub initial: Field,
    pub config: StepConfig,
}

impl Problem {
    pub fn new(
        grid: Grid1D,
        energy: EnergyModel,
        capacity: Vec<f64>,
        hysteresis: NodeHysteresis,
        load: Load,
        initial: Field,
        config: StepConfig,
    ) -> Result<Self> {
        let n = grid.n_nodes();
        for (what, len) in [
            ("capacity", capacity.len()),
            ("hysteresis assignment", hysteresis.len()),
            ("initial field", initial.len()),
        ] {
            if len != n {
                return Err(Error::Usage(format!("{what} has {len} entries, grid has {n} nodes")));
            }
        }
        validate_capacity(&capacity)?;
        if !initial.is_dirichlet() {
            return Err(Error::Domain("initial data must satisfy the zero boundary condition".into()));
        }
        if energy.dim() != 1 {
            return Err(Error::Usage("the 1D grid needs a 1D energy model".into()));
        }
        config.validate()?;
        Ok(Problem {
            grid,
            energy,
            capacity,
            hysteresis,
            load,
            initial,
            config,
        })
    }

    /// Lower bound of the capacity.
    pub fn alpha(&self) -> f64 {
        self.capacity.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub level: usize,
    pub time: f64,
    u: Field,
    w: Vec<f64>,
    memory: Vec<MemoryState>,
    /// Running sum of `h |(u_m - u_{m-1}) / h|^2_L2`.
    pub rate_sum: f64,
}

impl SimState {
    /// Level 0: `u_0` and `w_0 = W(u_0(x); x)` node by node.
    pub fn initial(problem: &Problem) -> Result<Self> {
        let u = problem.initial.clone();
        let mut memory = Vec::with_capacity(u.len());
        let mut w = Vec::with_capacity(u.len());
        for (i, &v) in u.values().iter().enumerate() {
            let model = problem.hysteresis.model_at(i);
            let state = model.init_memory(v)?;
            w.push(model.output(&state)?);
            memory.push(state);
        }
        Ok(SimState {
            level: 0,
            time: 0.0,
            u,
            w,
            memory,
            rate_sum: 0.0,
        })
    }

    pub fn u(&self) -> &Field {
        &self.u
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn memory(&self) -> &[MemoryState] {
        &self.memory
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepStats {
    pub iterations: usize,
    pub scaled_residual: f64,
    /// Nodal Gauss–Seidel sweeps used after a stalled line search.
    pub fallback_sweeps: usize,
    /// Number of sub-steps (1 unless halving kicked in).
    pub substeps: usize,
}

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACK: usize = 40;
const FALLBACK_SWEEPS: usize = 20;

struct LevelSystem<'a> {
    grid: &'a Grid1D,
    energy: &'a EnergyModel,
    capacity: &'a [f64],
    maps: Vec<LastValueMap>,
    z_prev: Vec<f64>,
    load: &'a [f64],
    mass: f64,
}

struct Evaluation {
    u: Vec<f64>,
    du_dz: Vec<f64>,
    g: Vec<f64>,
}

impl LevelSystem<'_> {
    fn eval(&self, z: &[f64]) -> Evaluation {
        let n = self.grid.n_nodes();
        let mut u = vec![0.0; n];
        let mut du_dz = vec![0.0; n - 2];
        for k in 0..n - 2 {
            let inv = self.maps[k].invert(self.capacity[k + 1], z[k]);
            u[k + 1] = inv.u;
            du_dz[k] = inv.du_dz;
        }
        let flux = self.grid.cell_fluxes(self.energy, &u);
        let mut g = self.grid.residual_from_fluxes(&flux, self.load);
        for k in 0..n - 2 {
            g[k] += (z[k] - self.z_prev[k]) * self.mass;
        }
        Evaluation { u, du_dz, g }
    }

    /// Residual of node `k` as a function of its own enthalpy, neighbours fixed.
    fn nodal(&self, u: &[f64], k: usize, zk: f64) -> f64 {
        let i = k + 1;
        let dx = self.grid.dx();
        let ui = self.maps[k].invert(self.capacity[i], zk).u;
        let left = self.energy.flux_1d(self.grid.midpoint(i - 1), (ui - u[i - 1]) / dx);
        let right = self.energy.flux_1d(self.grid.midpoint(i), (u[i + 1] - ui) / dx);
        (zk - self.z_prev[k]) * self.mass + left - right - self.load[i] * dx
    }

    /// One nonlinear Gauss–Seidel sweep. Each nodal residual is strictly
    /// increasing with slope at least `dx/h`, which brackets its root.
    fn sweep(&self, z: &mut [f64], u: &mut [f64]) {
        for k in 0..z.len() {
            let g0 = self.nodal(u, k, z[k]);
            if g0 == 0.0 {
                continue;
            }
            let other = z[k] - g0 / self.mass;
            let (mut lo, mut hi) = if g0 < 0.0 { (z[k], other) } else { (other, z[k]) };
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if self.nodal(u, k, mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            z[k] = 0.5 * (lo + hi);
            u[k + 1] = self.maps[k].invert(self.capacity[k + 1], z[k]).u;
        }
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Solves one level of length `h` with the averaged load `f_m`, then advances
/// every nodal memory once with the accepted solution.
pub fn step(problem: &Problem, prev: &SimState, f_m: &[f64], h: f64) -> Result<(SimState, StepStats)> {
    let grid = &problem.grid;
    let n = grid.n_nodes();
    if f_m.len() != n {
        return Err(Error::Usage(format!("load has {} entries, grid has {n} nodes", f_m.len())));
    }
    let cfg = &problem.config;
    let dx = grid.dx();
    let mut maps = Vec::with_capacity(n - 2);
    let mut z_prev = Vec::with_capacity(n - 2);
    for i in 1..n - 1 {
        let model = problem.hysteresis.model_at(i);
        maps.push(model.last_value_map(&prev.memory[i])?);
        z_prev.push(problem.capacity[i] * prev.u.values()[i] + prev.w[i]);
    }
    let sys = LevelSystem {
        grid,
        energy: &problem.energy,
        capacity: &problem.capacity,
        maps,
        z_prev,
        load: f_m,
        mass: dx / h,
    };
    let scale = dx * (1.0 + grid.l2(f_m));

    let mut z = sys.z_prev.clone();
    let mut ev = sys.eval(&z);
    let mut stats = StepStats {
        substeps: 1,
        ..StepStats::default()
    };
    let mut best = norm_inf(&ev.g) / scale;
    let mut converged = best <= cfg.newton_tol;
    while !converged && stats.iterations < cfg.newton_max_iter {
        stats.iterations += 1;
        let slopes: Vec<f64> = grid
            .cell_slopes(&problem.energy, &ev.u)
            .into_iter()
            .map(|s| if cfg.regularize_degenerate { s + 1e-10 * (1.0 + s) } else { s })
            .collect();
        let m = n - 2;
        let mut lower = vec![0.0; m];
        let mut diag = vec![0.0; m];
        let mut upper = vec![0.0; m];
        for k in 0..m {
            let (sl, sr) = (slopes[k], slopes[k + 1]);
            diag[k] = sys.mass + (sl + sr) / dx * ev.du_dz[k];
            if k > 0 {
                lower[k] = -sl / dx * ev.du_dz[k - 1];
            }
            if k + 1 < m {
                upper[k] = -sr / dx * ev.du_dz[k + 1];
            }
        }
        let rhs: Vec<f64> = ev.g.iter().map(|g| -g).collect();
        let delta = solve_tridiagonal(&lower, &diag, &upper, &rhs)?;
        let g_norm = norm2(&ev.g);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACK {
            let trial: Vec<f64> = z.iter().zip(&delta).map(|(a, d)| a + t * d).collect();
            let tev = sys.eval(&trial);
            if norm2(&tev.g) <= (1.0 - ARMIJO * t) * g_norm {
                accepted = Some((trial, tev));
                break;
            }
            t *= cfg.line_search_shrink;
        }
        match accepted {
            Some((trial, tev)) => {
                z = trial;
                ev = tev;
            }
            None => {
                let mut u = ev.u.clone();
                for _ in 0..FALLBACK_SWEEPS {
                    sys.sweep(&mut z, &mut u);
                    stats.fallback_sweeps += 1;
                }
                ev = sys.eval(&z);
            }
        }
        let r = norm_inf(&ev.g) / scale;
        best = best.min(r);
        converged = r <= cfg.newton_tol;
    }
    stats.scaled_residual = norm_inf(&ev.g) / scale;
    if !converged {
        return Err(Error::NonConvergence {
            iterations: stats.iterations,
            best_residual: best,
        });
    }

    let mut memory = prev.memory.clone();
    let mut w = Vec::with_capacity(n);
    for (i, state) in memory.iter_mut().enumerate() {
        w.push(problem.hysteresis.model_at(i).advance(state, ev.u[i])?);
    }
    let du: Vec<f64> = ev.u.iter().zip(prev.u.values()).map(|(a, b)| a - b).collect();
    let du_l2 = grid.l2(&du);
    Ok((
        SimState {
            level: prev.level + 1,
            time: prev.time + h,
            u: Field::dirichlet(ev.u)?,
            w,
            memory,
            rate_sum: prev.rate_sum + du_l2 * du_l2 / h,
        },
        stats,
    ))
}

fn advance_interval(
    problem: &Problem,
    prev: &SimState,
    t0: f64,
    t1: f64,
    depth: usize,
) -> Result<(SimState, StepStats)> {
    let f = problem.load.average_over(&problem.grid, t0, t1);
    match step(problem, prev, &f, t1 - t0) {
        Err(Error::NonConvergence { .. }) if depth < problem.config.retry_halving => {
            let mid = 0.5 * (t0 + t1);
            let (s1, a) = advance_interval(problem, prev, t0, mid, depth + 1)?;
            let (s2, b) = advance_interval(problem, &s1, mid, t1, depth + 1)?;
            Ok((
                s2,
                StepStats {
                    iterations: a.iterations + b.iterations,
                    scaled_residual: a.scaled_residual.max(b.scaled_residual),
                    fallback_sweeps: a.fallback_sweeps + b.fallback_sweeps,
                    substeps: a.substeps + b.substeps,
                },
            ))
        }
        other => other,
    }
}

/// One recorded time level.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub time: f64,
    pub u: Vec<f64>,
    pub w: Vec<f64>,
    /// Averaged load `f_m` used to reach this level (zeros at level 0).
    pub load: Vec<f64>,
    pub sigma: f64,
    pub du_l2: f64,
    /// `|grad u_m|_Lp`
    pub grad_lp: f64,
    pub newton_iters: usize,
    /// Slack of the per-step energy inequality; negative means violated.
    pub step_slack: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterpolationKind {
    Linear,
    Constant,
}

/// Levels `0..=ell` of a run together with the data needed to post-process it.
#[derive(Debug, Clone)]
pub struct Trace {
    pub grid: Grid1D,
    pub energy: EnergyModel,
    pub capacity: Vec<f64>,
    pub h: f64,
    pub newton_tol: f64,
    pub records: Vec<Record>,
}

impl Trace {
    pub fn final_time(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.time)
    }

    pub fn ell(&self) -> usize {
        self.records.len() - 1
    }

    pub fn alpha(&self) -> f64 {
        self.capacity.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Piecewise-linear (`Linear`) or piecewise-constant, right-continuous
    /// from the left (`Constant`) interpolation in time.
    pub fn interpolate(&self, t: f64, kind: InterpolationKind) -> Result<Field> {
        let tf = self.final_time();
        if !(t >= 0.0 && t <= tf) {
            return Err(Error::Domain(format!("time {t} outside [0, {tf}]")));
        }
        let ell = self.ell();
        let m = ((t / self.h).floor() as usize).min(ell.saturating_sub(1));
        let (a, b) = (&self.records[m], &self.records[(m + 1).min(ell)]);
        let values = match kind {
            InterpolationKind::Linear => {
                let tau = ((t - a.time) / self.h).clamp(0.0, 1.0);
                if tau == 0.0 {
                    a.u.clone()
                } else {
                    a.u.iter().zip(&b.u).map(|(x, y)| tau * y + (1.0 - tau) * x).collect()
                }
            }
            InterpolationKind::Constant => {
                if t == a.time {
                    a.u.clone()
                } else {
                    b.u.clone()
                }
            }
        };
        Field::dirichlet(values)
    }

    /// Both sides of `|u_l - u~_l|^2_L2(Q) = (h/3) sum_m |u_{m+1} - u_m|^2_L2`.
    /// The left side is integrated in time by 3-point Gauss on every level
    /// interval, using [`Trace::interpolate`].
    pub fn interpolate_gap(&self) -> Result<(f64, f64)> {
        let nodes = [
            (-(0.6f64).sqrt(), 5.0 / 9.0),
            (0.0, 8.0 / 9.0),
            ((0.6f64).sqrt(), 5.0 / 9.0),
        ];
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        for m in 0..self.ell() {
            let t0 = self.records[m].time;
            let t1 = self.records[m + 1].time;
            let hm = t1 - t0;
            for (s, wt) in nodes {
                let t = t0 + 0.5 * hm * (1.0 + s);
                let lin = self.interpolate(t, InterpolationKind::Linear)?;
                let con = self.interpolate(t, InterpolationKind::Constant)?;
                let d: Vec<f64> = lin.values().iter().zip(con.values()).map(|(a, b)| a - b).collect();
                lhs += 0.5 * hm * wt * self.grid.integrate_with(&d, |x| x * x);
            }
            rhs += hm / 3.0 * self.records[m + 1].du_l2.powi(2);
        }
        Ok((lhs, rhs))
    }
}

/// Slack of `(alpha/h)|du|^2 + sum_c a(grad u) . grad du dx
/// <= int f du + tol (1 + |f|_L2) |du|_L1`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn step_slack(
    grid: &Grid1D,
    energy: &EnergyModel,
    alpha: f64,
    h: f64,
    tol: f64,
    u_prev: &[f64],
    u: &[f64],
    f: &[f64],
) -> f64 {
    let du: Vec<f64> = u.iter().zip(u_prev).map(|(a, b)| a - b).collect();
    let flux = grid.cell_fluxes(energy, u);
    let dgrad = grid.gradient_of(&du);
    let diffusion: f64 = flux.iter().zip(&dgrad).map(|(a, g)| a * g).sum::<f64>() * grid.dx();
    let du_l2 = grid.l2(&du);
    let lhs = alpha / h * du_l2 * du_l2 + diffusion;
    let rhs = grid.inner(f, &du) + tol * (1.0 + grid.l2(f)) * grid.l1(&du);
    rhs - lhs
}

fn record(problem: &Problem, prev: Option<&Record>, state: &SimState, f: Vec<f64>, iters: usize) -> Record {
    let grid = &problem.grid;
    let u = state.u.values().to_vec();
    let p = problem.energy.p();
    let (du_l2, slack) = match prev {
        Some(r) => {
            let du: Vec<f64> = u.iter().zip(&r.u).map(|(a, b)| a - b).collect();
            let h = state.time - r.time;
            (
                grid.l2(&du),
                step_slack(grid, &problem.energy, problem.alpha(), h, problem.config.newton_tol, &r.u, &u, &f),
            )
        }
        None => (0.0, 0.0),
    };
    Record {
        time: state.time,
        sigma: grid.stored_energy(&problem.energy, &u),
        grad_lp: grid.gradient_lp_pow(&u, p).powf(1.0 / p),
        u,
        w: state.w.clone(),
        load: f,
        du_l2,
        newton_iters: iters,
        step_slack: slack,
    }
}

/// Runs levels `1..=ell` from `u_0`, recording every level.
pub fn run(problem: &Problem) -> Result<Trace> {
    let cfg = &problem.config;
    let mut state = SimState::initial(problem)?;
    let mut records = Vec::with_capacity(cfg.ell + 1);
    records.push(record(problem, None, &state, vec![0.0; problem.grid.n_nodes()], 0));
    for m in 1..=cfg.ell {
        let (t0, t1) = (cfg.time(m - 1), cfg.time(m));
        let (mut next, stats) = advance_interval(problem, &state, t0, t1, 0).map_err(|e| Error::StepFailed {
            level: m,
            source: Box::new(e),
        })?;
        next.level = m;
        next.time = t1;
        let f = problem.load.average_over(&problem.grid, t0, t1);
        let rec = record(problem, records.last(), &next, f, stats.iterations);
        records.push(rec);
        state = next;
    }
    Ok(Trace {
        grid: problem.grid.clone(),
        energy: problem.energy.clone(),
        capacity: problem.capacity.clone(),
        h: cfg.h(),
        newton_tol: cfg.newton_tol,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::CoefficientField;
    use crate::load::{Profile, TimeFactor};
    use std::f64::consts::PI;

    fn heat(n: usize, ell: usize, t: f64, model: HysteresisModel) -> Problem {
        let grid = Grid1D::new(n, 1.0).unwrap();
        let u0 = Field::dirichlet_from_fn(&grid, |x| (PI * x).sin());
        Problem::new(
            grid.clone(),
            EnergyModel::quadratic(CoefficientField::constant(1.0).unwrap()),
            vec![1.0; n + 1],
            NodeHysteresis::uniform(model, n + 1),
            Load::zero(),
            u0,
            StepConfig::new(ell, t).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(StepConfig::new(0, 1.0).is_err());
        assert!(StepConfig::new(3, -1.0).is_err());
        let c = StepConfig::new(3, 0.3).unwrap();
        assert_eq!(c.time(3), 0.3);
        assert!((c.h() * 3.0 - 0.3).abs() < 1e-16);
    }

    #[test]
    fn zero_data_stays_zero() {
        let grid = Grid1D::new(10, 1.0).unwrap();
        let p = Problem::new(
            grid.clone(),
            EnergyModel::ppower(3.0, 1.0).unwrap(),
            vec![1.0; 11],
            NodeHysteresis::uniform(HysteresisModel::zero(), 11),
            Load::zero(),
            Field::zeros(&grid),
            StepConfig::new(5, 1.0).unwrap(),
        )
        .unwrap();
        let tr = run(&p).unwrap();
        assert_eq!(tr.records.len(), 6);
        assert!(tr.records.iter().all(|r| r.u.iter().all(|&v| v == 0.0) && r.sigma == 0.0));
    }

    #[test]
    fn single_level_run() {
        let tr = run(&heat(20, 1, 0.1, HysteresisModel::zero())).unwrap();
        assert_eq!(tr.records.len(), 2);
        assert_eq!(tr.records[0].time, 0.0);
        assert_eq!(tr.records[1].time, 0.1);
    }

    #[test]
    fn wide_play_band_leaves_heat_flow_unchanged() {
        let a = run(&heat(40, 40, 0.1, HysteresisModel::zero())).unwrap();
        let b = run(&heat(40, 40, 0.1, HysteresisModel::play(10.0).unwrap())).unwrap();
        for (ra, rb) in a.records.iter().zip(&b.records) {
            for (x, y) in ra.u.iter().zip(&rb.u) {
                assert!((x - y).abs() <= 1e-12);
            }
            assert!(rb.w.iter().all(|&w| w == 0.0));
        }
    }

    #[test]
    fn sigma_decreases_without_load() {
        let tr = run(&heat(40, 50, 0.1, HysteresisModel::zero())).unwrap();
        for w in tr.records.windows(2) {
            assert!(w[1].sigma < w[0].sigma);
            assert!(w[1].step_slack >= -1e-12);
        }
    }

    #[test]
    fn interpolation_rules() {
        let tr = run(&heat(10, 4, 0.4, HysteresisModel::zero())).unwrap();
        let at = tr.interpolate(0.2, InterpolationKind::Linear).unwrap();
        assert_eq!(at.values(), &tr.records[2].u[..]);
        let mid = tr.interpolate(0.25, InterpolationKind::Linear).unwrap();
        for i in 0..11 {
            let avg = 0.5 * (tr.records[2].u[i] + tr.records[3].u[i]);
            assert!((mid.values()[i] - avg).abs() < 1e-15);
        }
        let con = tr.interpolate(0.25, InterpolationKind::Constant).unwrap();
        assert_eq!(con.values(), &tr.records[3].u[..]);
        assert!(tr.interpolate(0.5, InterpolationKind::Linear).is_err());
        let (l, r) = tr.interpolate_gap().unwrap();
        assert!((l - r).abs() <= 1e-12 * r);
    }

    #[test]
    fn relay_family_with_load() {
        let grid = Grid1D::new(30, 1.0).unwrap();
        let model =
            HysteresisModel::preisach_grid((-0.1, 0.0), (0.0, 0.1), 5, 5, 0.02, false).unwrap();
        let p = Problem::new(
            grid.clone(),
            EnergyModel::ppower(2.0, 0.5).unwrap(),
            vec![1.0; 31],
            NodeHysteresis::uniform(model.clone(), 31),
            Load::separable(Profile::Constant(4.0), TimeFactor::Sin { omega: 6.0, phase: 0.0 }).unwrap(),
            Field::zeros(&grid),
            StepConfig::new(60, 2.0).unwrap(),
        )
        .unwrap();
        let tr = run(&p).unwrap();
        for w in tr.records.windows(2) {
            assert!(w[1].step_slack >= -1e-10, "slack {}", w[1].step_slack);
            for i in 0..31 {
                assert!((w[1].u[i] - w[0].u[i]) * (w[1].w[i] - w[0].w[i]) >= -1e-14);
            }
        }
        // memory consistency: w equals the operator on the full nodal string
        for i in [5, 15, 22] {
            let s: Vec<f64> = tr.records.iter().map(|r| r.u[i]).collect();
            let ws = model
                .evaluate_string(&crate::hysteresis::ScalarString::new(s).unwrap())
                .unwrap();
            assert_eq!(ws, tr.records.last().unwrap().w[i]);
        }
    }
}
