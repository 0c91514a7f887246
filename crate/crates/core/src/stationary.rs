//! Stationary problem `-div a(x, grad u) = g` with zero boundary values,
//! solved by damped Newton on the discrete convex energy.

use crate::energy::{CoefficientField, EnergyModel};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid1D};
use crate::linalg::solve_tridiagonal;

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryOptions {
    /// Bound on `max_i |R_i| / (dx (1 + |g|_L2))`.
    pub tol: f64,
    pub max_iter: usize,
    pub line_search_shrink: f64,
}

impl Default for StationaryOptions {
    fn default() -> Self {
        StationaryOptions {
            tol: 1e-10,
            max_iter: 200,
            line_search_shrink: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationarySolution {
    pub u: Field,
    pub iterations: usize,
    pub scaled_residual: f64,
    /// `max_i |R_i|` without scaling.
    pub residual_sup: f64,
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Minimizes `sum_c J(grad u_c) dx - sum_i g_i u_i dx` over fields vanishing
/// at both ends. Starts from `warm_start` when given, else from the solution
/// of the linear problem with unit conductivity.
pub fn solve_stationary(
    grid: &Grid1D,
    energy: &EnergyModel,
    g: &[f64],
    warm_start: Option<&Field>,
    opts: &StationaryOptions,
) -> Result<StationarySolution> {
    let n = grid.n_nodes();
    if g.len() != n {
        return Err(Error::Usage(format!("load has {} entries, grid has {n} nodes", g.len())));
    }
    if let Some(i) = g.iter().position(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("non-finite load at node {i}")));
    }
    let dx = grid.dx();
    let scale = dx * (1.0 + grid.l2(g));
    let mut u = match warm_start {
        Some(f) if f.len() == n => f.values().to_vec(),
        Some(f) => {
            return Err(Error::Usage(format!("warm start has {} entries, grid has {n} nodes", f.len())))
        }
        None => {
            if g.iter().all(|&v| v == 0.0) {
                vec![0.0; n]
            } else {
                linear_guess(grid, g)?
            }
        }
    };
    u[0] = 0.0;
    u[n - 1] = 0.0;
    let energy_of = |v: &[f64]| grid.stored_energy(energy, v) - grid.inner(g, v);
    let residual_of = |v: &[f64]| grid.residual_from_fluxes(&grid.cell_fluxes(energy, v), g);

    let mut r = residual_of(&u);
    let mut e = energy_of(&u);
    let mut iterations = 0;
    let mut best = norm_inf(&r) / scale;
    while norm_inf(&r) / scale > opts.tol {
        if iterations >= opts.max_iter {
            return Err(Error::NonConvergence {
                iterations,
                best_residual: best,
            });
        }
        iterations += 1;
        let s = grid.cell_slopes(energy, &u);
        let m = n - 2;
        let mut lower = vec![0.0; m];
        let mut diag = vec![0.0; m];
        let mut upper = vec![0.0; m];
        for k in 0..m {
            diag[k] = (s[k] + s[k + 1]) / dx;
            if k > 0 {
                lower[k] = -s[k] / dx;
            }
            if k + 1 < m {
                upper[k] = -s[k + 1] / dx;
            }
        }
        let trace: f64 = diag.iter().sum();
        let eps = 1e-10 * (1.0 + trace);
        diag.iter_mut().for_each(|d| *d += eps);
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let delta = solve_tridiagonal(&lower, &diag, &upper, &rhs)?;
        let slope: f64 = r.iter().zip(&delta).map(|(a, b)| a * b).sum();
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let mut trial = u.clone();
            for k in 0..m {
                trial[k + 1] += t * delta[k];
            }
            let et = energy_of(&trial);
            let rt = residual_of(&trial);
            // Armijo on the energy, or a plain residual decrease once the
            // energy differences drown in rounding
            let armijo = et <= e + 1e-4 * t * slope;
            let residual_drop = norm_inf(&rt) < (1.0 - 1e-4 * t) * norm_inf(&r)
                && et <= e + 1e-12 * e.abs().max(1.0);
            if armijo || residual_drop {
                u = trial;
                r = rt;
                e = et;
                accepted = true;
                break;
            }
            t *= opts.line_search_shrink;
        }
        if !accepted {
            return Err(Error::NonConvergence {
                iterations,
                best_residual: best,
            });
        }
        best = best.min(norm_inf(&r) / scale);
    }
    let scaled_residual = norm_inf(&r) / scale;
    Ok(StationarySolution {
        u: Field::dirichlet(u)?,
        iterations,
        scaled_residual,
        residual_sup: norm_inf(&r),
    })
}

fn linear_guess(grid: &Grid1D, g: &[f64]) -> Result<Vec<f64>> {
    let lap = EnergyModel::quadratic(CoefficientField::constant(1.0)?);
    let n = grid.n_nodes();
    let m = n - 2;
    let s = 1.0 / grid.dx();
    let lower = vec![-s; m];
    let upper = vec![-s; m];
    let diag = vec![2.0 * s; m];
    let zero = vec![0.0; n];
    let rhs: Vec<f64> = grid
        .residual_from_fluxes(&grid.cell_fluxes(&lap, &zero), g)
        .iter()
        .map(|v| -v)
        .collect();
    let inner = solve_tridiagonal(&lower, &diag, &upper, &rhs)?;
    let mut u = vec![0.0; n];
    u[1..n - 1].copy_from_slice(&inner);
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn zero_load_gives_zero() {
        let grid = Grid1D::new(50, 1.0).unwrap();
        let e = EnergyModel::ppower(3.0, 1.0).unwrap();
        let sol = solve_stationary(&grid, &e, &vec![0.0; 51], None, &StationaryOptions::default()).unwrap();
        assert!(sol.u.values().iter().all(|&v| v == 0.0));
        assert_eq!(sol.iterations, 0);
    }

    #[test]
    fn laplace_with_sine_load() {
        let grid = Grid1D::new(200, 1.0).unwrap();
        let e = EnergyModel::quadratic(CoefficientField::constant(1.0).unwrap());
        let g: Vec<f64> = grid.nodes().iter().map(|&x| PI * PI * (PI * x).sin()).collect();
        let sol = solve_stationary(&grid, &e, &g, None, &StationaryOptions::default()).unwrap();
        let err: Vec<f64> = sol
            .u
            .values()
            .iter()
            .zip(grid.nodes())
            .map(|(u, x)| u - (PI * x).sin())
            .collect();
        assert!(grid.l2(&err) <= 1e-3);
    }

    #[test]
    fn degenerate_power_from_zero_start() {
        let grid = Grid1D::new(100, 1.0).unwrap();
        let e = EnergyModel::ppower(3.0, 1.0 / 3.0).unwrap();
        let g = vec![1.0; 101];
        let opts = StationaryOptions::default();
        let sol = solve_stationary(&grid, &e, &g, Some(&Field::zeros(&grid)), &opts).unwrap();
        assert!(sol.scaled_residual <= opts.tol);
        let cold = solve_stationary(&grid, &e, &g, None, &opts).unwrap();
        for (a, b) in sol.u.values().iter().zip(cold.u.values()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let grid = Grid1D::new(10, 1.0).unwrap();
        let e = EnergyModel::ppower(2.0, 0.5).unwrap();
        let opts = StationaryOptions::default();
        assert!(matches!(solve_stationary(&grid, &e, &[1.0; 5], None, &opts), Err(Error::Usage(_))));
        let mut g = vec![0.0; 11];
        g[3] = f64::NAN;
        assert!(matches!(solve_stationary(&grid, &e, &g, None, &opts), Err(Error::Domain(_))));
    }
}
