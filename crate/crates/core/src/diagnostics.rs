//! Post-processing of traces: stored energy, energy and window estimates,
//! the two-run L1 stability harness and the long-time probe.

use crate::energy::EnergyModel;
use crate::error::{Error, Result};
use crate::grid::{Field, Grid1D};
use crate::hysteresis::{heaviside_regularized, refine_at_crossings, HysteresisModel, SampledPath};
use crate::stepper::{InterpolationKind, NodeHysteresis, Trace};

/// `sum_c J(x_c, grad u_c) dx`
pub fn sigma(grid: &Grid1D, energy: &EnergyModel, u: &Field) -> Result<f64> {
    if u.len() != grid.n_nodes() {
        return Err(Error::Usage(format!(
            "field has {} nodal values, grid has {} nodes",
            u.len(),
            grid.n_nodes()
        )));
    }
    Ok(grid.stored_energy(energy, u.values()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    /// Smallest per-step slack and its level.
    pub step_worst_slack: f64,
    pub step_witness: usize,
    /// Smallest slack of the window estimate over all level pairs `m1 < m2`.
    pub window_worst_slack: f64,
    pub window_witness: (usize, usize),
    /// `sum_m h |(u_m - u_{m-1}) / h|^2_L2`
    pub rate_sum: f64,
    /// `max_k |grad u_k|^p_Lp`
    pub sup_grad_pow: f64,
    /// Explicit bound on `rate_sum + sup_grad_pow`.
    pub a_priori_bound: f64,
    /// Largest normalized violation of the convexity sandwich
    /// `a(grad u_{m-1}) . d grad u <= dJ <= a(grad u_m) . d grad u`,
    /// checked cellwise and summed.
    pub chain_violation: f64,
    /// Largest `|sigma_m - sigma_{m-1} - sum_c a(grad u_m) . d grad u dx|`.
    pub chain_identity_defect: f64,
    /// Smallest nodal `(u_m - u_{m-1}) (w_m - w_{m-1})`.
    pub dissipation_worst: f64,
    /// Smallest normalized margin of `alpha1 |grad u|^p <= sigma <= alpha2 (|Omega| + |grad u|^p)`.
    pub sigma_bounds_worst: f64,
}

impl EnergyReport {
    pub fn a_priori_holds(&self) -> bool {
        self.rate_sum + self.sup_grad_pow <= self.a_priori_bound
    }

    pub fn passed(&self, slack_tol: f64) -> bool {
        self.step_worst_slack >= -slack_tol
            && self.window_worst_slack >= -slack_tol
            && self.a_priori_holds()
            && self.chain_violation <= 1e-12
            && self.dissipation_worst >= -1e-14
            && self.sigma_bounds_worst >= -1e-12
    }
}

/// Evaluates the per-step estimate, the window estimate
/// `alpha sum h |du/h|^2 + 2 sigma(u_m2) - 2 sigma(u_m1) <= (1/alpha) sum h |f_m|^2 + allowance`
/// over every pair of levels, and the explicit a priori bound.
///
/// The allowance accounts for the inexact nonlinear solve: a scaled residual
/// below `tol` perturbs each step by at most `tol (1 + |f_m|_L2) |du|_L1`.
pub fn energy_report(trace: &Trace) -> Result<EnergyReport> {
    let grid = &trace.grid;
    let energy = &trace.energy;
    let alpha = trace.alpha();
    let p = energy.p();
    let recs = &trace.records;
    if recs.is_empty() {
        return Err(Error::Usage("empty trace".into()));
    }
    let dx = grid.dx();
    let mut rep = EnergyReport {
        step_worst_slack: f64::INFINITY,
        step_witness: 0,
        window_worst_slack: f64::INFINITY,
        window_witness: (0, 0),
        rate_sum: 0.0,
        sup_grad_pow: 0.0,
        a_priori_bound: 0.0,
        chain_violation: 0.0,
        chain_identity_defect: 0.0,
        dissipation_worst: f64::INFINITY,
        sigma_bounds_worst: f64::INFINITY,
    };
    // window slack = Q(m2) - Q(m1), Q(m) = sum_{k<=m} e_k - 2 sigma_m
    let mut q = -2.0 * recs[0].sigma;
    let mut q_max = q;
    let mut q_max_at = 0;
    let mut load_sum = 0.0;
    let mut allowance_sum = 0.0;
    for (m, r) in recs.iter().enumerate() {
        let grad_pow = grid.gradient_lp_pow(&r.u, p);
        rep.sup_grad_pow = rep.sup_grad_pow.max(grad_pow);
        let lo = energy.alpha1() * grad_pow;
        let hi = energy.alpha2() * (grid.length() + grad_pow);
        let margin = (r.sigma - lo).min(hi - r.sigma) / (1.0 + hi);
        rep.sigma_bounds_worst = rep.sigma_bounds_worst.min(margin);
        if m == 0 {
            continue;
        }
        let prev = &recs[m - 1];
        let h = r.time - prev.time;
        if r.step_slack < rep.step_worst_slack {
            rep.step_worst_slack = r.step_slack;
            rep.step_witness = m;
        }
        let du: Vec<f64> = r.u.iter().zip(&prev.u).map(|(a, b)| a - b).collect();
        let du_l2 = grid.l2(&du);
        let f_l2 = grid.l2(&r.load);
        let allowance = trace.newton_tol * (1.0 + f_l2) * grid.l1(&du);
        rep.rate_sum += du_l2 * du_l2 / h;
        load_sum += h * f_l2 * f_l2;
        allowance_sum += allowance;
        q += h / alpha * f_l2 * f_l2 + 2.0 * allowance - alpha * du_l2 * du_l2 / h;
        q -= 2.0 * r.sigma - 2.0 * prev.sigma;
        if q - q_max < rep.window_worst_slack {
            rep.window_worst_slack = q - q_max;
            rep.window_witness = (q_max_at, m);
        }
        if q > q_max {
            q_max = q;
            q_max_at = m;
        }

        let g_prev = grid.gradient_of(&prev.u);
        let g_now = grid.gradient_of(&r.u);
        let mut upper = 0.0;
        let mut lower = 0.0;
        for c in 0..grid.n_cells() {
            let x = grid.midpoint(c);
            let d = g_now[c] - g_prev[c];
            let j_now = energy.value_1d(x, g_now[c]);
            let j_prev = energy.value_1d(x, g_prev[c]);
            let a_now = energy.flux_1d(x, g_now[c]) * d;
            let a_prev = energy.flux_1d(x, g_prev[c]) * d;
            let scale = 1.0 + j_now.abs() + j_prev.abs() + a_now.abs() + a_prev.abs();
            let v = ((j_now - j_prev - a_now) / scale).max((a_prev - (j_now - j_prev)) / scale);
            rep.chain_violation = rep.chain_violation.max(v);
            upper += a_now * dx;
            lower += a_prev * dx;
        }
        let ds = r.sigma - prev.sigma;
        let scale = 1.0 + upper.abs() + lower.abs();
        rep.chain_violation = rep
            .chain_violation
            .max((ds - upper) / scale)
            .max((lower - ds) / scale);
        rep.chain_identity_defect = rep.chain_identity_defect.max((ds - upper).abs());
        for i in 0..r.u.len() {
            let prod = (r.u[i] - prev.u[i]) * (r.w[i] - prev.w[i]);
            rep.dissipation_worst = rep.dissipation_worst.min(prod);
        }
    }
    if recs.len() == 1 {
        rep.step_worst_slack = 0.0;
        rep.window_worst_slack = 0.0;
        rep.dissipation_worst = 0.0;
    }
    let grad0 = grid.gradient_lp_pow(&recs[0].u, p);
    let reach = load_sum / (2.0 * alpha) + energy.alpha2() * (grid.length() + grad0) + allowance_sum;
    rep.a_priori_bound = reach * (2.0 / alpha + 1.0 / energy.alpha1());
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq)]
pub struct L1StabilityReport {
    pub times: Vec<f64>,
    /// `int c |u2 - u1| + int |w2 - w1|` per level.
    pub distance: Vec<f64>,
    /// Bound with the capacity weight on the initial difference.
    pub bound: Vec<f64>,
    /// Same bound without the capacity weight on the initial difference.
    pub bound_unweighted: Vec<f64>,
    /// `max_m (distance - bound)`
    pub max_defect: f64,
    pub max_defect_unweighted: f64,
    pub witness_level: usize,
}

impl L1StabilityReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_defect <= tol
    }
}

fn check_pair(t1: &Trace, t2: &Trace) -> Result<()> {
    if t1.grid != t2.grid
        || t1.records.len() != t2.records.len()
        || t1.capacity != t2.capacity
        || t1.records.iter().zip(&t2.records).any(|(a, b)| a.time != b.time)
    {
        return Err(Error::Usage(
            "stability runs need identical grids, capacities and time levels".into(),
        ));
    }
    Ok(())
}

pub fn l1_stability_report(t1: &Trace, t2: &Trace) -> Result<L1StabilityReport> {
    check_pair(t1, t2)?;
    let grid = &t1.grid;
    let c = &t1.capacity;
    let diff = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect() };
    let weighted = |a: &[f64], b: &[f64]| -> Vec<f64> {
        a.iter().zip(b).zip(c).map(|((x, y), ci)| ci * (x - y).abs()).collect()
    };
    let r0 = (&t1.records[0], &t2.records[0]);
    let w0 = grid.integrate(&diff(&r0.0.w, &r0.1.w));
    let base = grid.integrate(&weighted(&r0.0.u, &r0.1.u)) + w0;
    let base_unweighted = grid.integrate(&diff(&r0.0.u, &r0.1.u)) + w0;
    let mut rep = L1StabilityReport {
        times: Vec::new(),
        distance: Vec::new(),
        bound: Vec::new(),
        bound_unweighted: Vec::new(),
        max_defect: f64::NEG_INFINITY,
        max_defect_unweighted: f64::NEG_INFINITY,
        witness_level: 0,
    };
    let mut load_part = 0.0;
    for (m, (a, b)) in t1.records.iter().zip(&t2.records).enumerate() {
        if m > 0 {
            let h = a.time - t1.records[m - 1].time;
            load_part += h * grid.integrate(&diff(&a.load, &b.load));
        }
        let d = grid.integrate(&weighted(&a.u, &b.u)) + grid.integrate(&diff(&a.w, &b.w));
        let bound = base + load_part;
        let bound_u = base_unweighted + load_part;
        if d - bound > rep.max_defect {
            rep.max_defect = d - bound;
            rep.witness_level = m;
        }
        rep.max_defect_unweighted = rep.max_defect_unweighted.max(d - bound_u);
        rep.times.push(a.time);
        rep.distance.push(d);
        rep.bound.push(bound);
        rep.bound_unweighted.push(bound_u);
    }
    Ok(rep)
}

/// Largest discrete Hilpert defect over all interior nodes, treating the
/// two runs' nodal histories as piecewise-linear inputs (refined at the
/// zero crossings of their difference).
pub fn nodal_hilpert_defect(t1: &Trace, t2: &Trace, hysteresis: &NodeHysteresis) -> Result<f64> {
    check_pair(t1, t2)?;
    let times: Vec<f64> = t1.records.iter().map(|r| r.time).collect();
    let mut worst = 0.0_f64;
    for i in 1..t1.grid.n_nodes() - 1 {
        let a = SampledPath::new(times.clone(), t1.records.iter().map(|r| r.u[i]).collect());
        let b = SampledPath::new(times.clone(), t2.records.iter().map(|r| r.u[i]).collect());
        let (a, b) = refine_at_crossings(&a, &b)?;
        worst = worst.max(hysteresis.model_at(i).hilpert_gap(&a, &b)?);
    }
    Ok(worst)
}

/// Hilpert defect with the sharp Heaviside replaced by its piecewise-linear
/// regularization of width `eps`.
pub fn hilpert_gap_regularized(
    model: &HysteresisModel,
    path1: &SampledPath,
    path2: &SampledPath,
    eps: f64,
) -> Result<f64> {
    if path1.times != path2.times {
        return Err(Error::Usage("Hilpert check needs both inputs on the same time grid".into()));
    }
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("regularization width must be > 0, got {eps}")));
    }
    let w1 = model.evaluate_path(&path1.times, &path1.values)?;
    let w2 = model.evaluate_path(&path2.times, &path2.values)?;
    let mut defect = 0.0_f64;
    for k in 0..w1.len().saturating_sub(1) {
        let d0 = w2[k] - w1[k];
        let d1 = w2[k + 1] - w1[k + 1];
        let v_mid = 0.5 * ((path2.values[k] - path1.values[k]) + (path2.values[k + 1] - path1.values[k + 1]));
        defect = defect.max(d1.max(0.0) - d0.max(0.0) - (d1 - d0) * heaviside_regularized(v_mid, eps));
    }
    Ok(defect)
}

/// `t_n = T (1 - 2^-n)` for `n = 1..=count`.
pub fn geometric_sample_times(final_time: f64, count: usize) -> Vec<f64> {
    (1..=count)
        .map(|n| final_time * (1.0 - 0.5f64.powi(n as i32)))
        .collect()
}

/// Increases smaller than this count as flat when judging monotonicity.
pub const PROBE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct OmegaLimitReport {
    pub sample_times: Vec<f64>,
    /// `|u(t_n) - u_inf|_Lp`
    pub distances: Vec<f64>,
    /// Unit windows `[t, t + 1]` ending at the final time.
    pub tail_windows: Vec<(f64, f64)>,
    /// `|u'|_L2(Omega x window)`
    pub tail_norms: Vec<f64>,
    pub final_distance: f64,
    pub distances_eventually_decreasing: bool,
    pub tail_nonincreasing: bool,
}

impl OmegaLimitReport {
    pub fn passed(&self, probe_tol: f64) -> bool {
        self.final_distance <= probe_tol && self.distances_eventually_decreasing && self.tail_nonincreasing
    }
}

fn nonincreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0] + PROBE_FLOOR)
}

/// Compares the run with a candidate limit at `sample_times` (linear
/// interpolation in time) and at the final time, and measures the time
/// derivative over the last (up to) ten unit windows.
pub fn omega_limit_probe(trace: &Trace, stationary: &Field, sample_times: &[f64]) -> Result<OmegaLimitReport> {
    let grid = &trace.grid;
    if stationary.len() != grid.n_nodes() {
        return Err(Error::Usage("limit candidate does not match the grid".into()));
    }
    if sample_times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("sample times must be increasing".into()));
    }
    let p = trace.energy.p();
    let dist = |u: &[f64]| {
        let d: Vec<f64> = u.iter().zip(stationary.values()).map(|(a, b)| a - b).collect();
        grid.lp(&d, p)
    };
    let mut distances = Vec::with_capacity(sample_times.len());
    for &t in sample_times {
        let u = trace.interpolate(t, InterpolationKind::Linear)?;
        distances.push(dist(u.values()));
    }
    let tf = trace.final_time();
    let final_distance = dist(&trace.records.last().expect("trace has level 0").u);
    let windows = (tf.floor() as usize).min(10);
    let tail_windows: Vec<(f64, f64)> = (0..windows)
        .rev()
        .map(|k| (tf - (k + 1) as f64, tf - k as f64))
        .collect();
    let mut tail_sq = vec![0.0; windows];
    for m in 1..trace.records.len() {
        let (a, b) = (&trace.records[m - 1], &trace.records[m]);
        let mid = 0.5 * (a.time + b.time);
        if let Some(k) = tail_windows.iter().position(|(s, e)| *s <= mid && mid < *e) {
            tail_sq[k] += b.du_l2 * b.du_l2 / (b.time - a.time);
        }
    }
    let tail_norms: Vec<f64> = tail_sq.iter().map(|v| v.sqrt()).collect();
    let half = distances.len() / 2;
    Ok(OmegaLimitReport {
        sample_times: sample_times.to_vec(),
        distances_eventually_decreasing: nonincreasing(&distances[half..]),
        tail_nonincreasing: nonincreasing(&tail_norms),
        distances,
        tail_windows,
        tail_norms,
        final_distance,
    })
}
