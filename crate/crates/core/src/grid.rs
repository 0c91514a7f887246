//! Uniform 1D mesh on `(0, L)` with P1 elements, midpoint flux quadrature
//! and lumped (trapezoid) mass.

use crate::energy::EnergyModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    n_cells: usize,
    length: f64,
    dx: f64,
}

/// Nodal values on a [`Grid1D`], optionally pinned to zero at both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    values: Vec<f64>,
    dirichlet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub l2: f64,
    pub lp: f64,
    /// `(sum_cells |grad u|^p dx)^(1/p)`
    pub w1p_seminorm: f64,
    pub sup: f64,
}

impl Grid1D {
    pub fn new(n_cells: usize, length: f64) -> Result<Self> {
        if n_cells < 2 {
            return Err(Error::Domain(format!("grid needs at least 2 cells, got {n_cells}")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::Domain(format!("domain length must be > 0, got {length}")));
        }
        Ok(Grid1D {
            n_cells,
            length,
            dx: length / n_cells as f64,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_nodes(&self) -> usize {
        self.n_cells + 1
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn x(&self, i: usize) -> f64 {
        if i == self.n_cells {
            self.length
        } else {
            i as f64 * self.dx
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_nodes()).map(|i| self.x(i)).collect()
    }

    pub fn midpoint(&self, c: usize) -> f64 {
        (c as f64 + 0.5) * self.dx
    }

    fn check_len(&self, what: &str, len: usize) -> Result<()> {
        if len == self.n_nodes() {
            Ok(())
        } else {
            Err(Error::Usage(format!(
                "{what} has {len} nodal values, grid has {} nodes",
                self.n_nodes()
            )))
        }
    }

    /// Cellwise `(u_{i+1} - u_i) / dx`.
    pub fn gradient(&self, u: &Field) -> Result<Vec<f64>> {
        self.check_len("field", u.len())?;
        Ok(self.gradient_of(u.values()))
    }

    pub(crate) fn gradient_of(&self, u: &[f64]) -> Vec<f64> {
        u.windows(2).map(|w| (w[1] - w[0]) / self.dx).collect()
    }

    /// Interior residual `sum_c a(x_c, grad u_c) grad phi_i dx - f_i dx`,
    /// indexed by node `1..n_cells`. Entry `k` belongs to node `k + 1`.
    pub fn assemble_residual(&self, energy: &EnergyModel, u: &Field, f: &[f64]) -> Result<Vec<f64>> {
        self.check_len("field", u.len())?;
        self.check_len("load", f.len())?;
        let flux = self.cell_fluxes(energy, u.values());
        Ok(self.residual_from_fluxes(&flux, f))
    }

    pub(crate) fn cell_fluxes(&self, energy: &EnergyModel, u: &[f64]) -> Vec<f64> {
        u.windows(2)
            .enumerate()
            .map(|(c, w)| energy.flux_1d(self.midpoint(c), (w[1] - w[0]) / self.dx))
            .collect()
    }

    pub(crate) fn cell_slopes(&self, energy: &EnergyModel, u: &[f64]) -> Vec<f64> {
        u.windows(2)
            .enumerate()
            .map(|(c, w)| energy.flux_slope_1d(self.midpoint(c), (w[1] - w[0]) / self.dx))
            .collect()
    }

    pub(crate) fn residual_from_fluxes(&self, flux: &[f64], f: &[f64]) -> Vec<f64> {
        (1..self.n_cells)
            .map(|i| flux[i - 1] - flux[i] - f[i] * self.dx)
            .collect()
    }

    /// `c_i v_i dx` at every interior node (entry `k` is node `k + 1`).
    pub fn lumped_mass_apply(&self, c: &[f64], v: &Field) -> Result<Vec<f64>> {
        self.check_len("coefficient", c.len())?;
        self.check_len("field", v.len())?;
        validate_capacity(c)?;
        Ok((1..self.n_cells)
            .map(|i| c[i] * v.values()[i] * self.dx)
            .collect())
    }

    /// Trapezoid integral of nodal values.
    pub fn integrate(&self, v: &[f64]) -> f64 {
        let n = v.len();
        let inner: f64 = v[1..n - 1].iter().sum();
        (inner + 0.5 * (v[0] + v[n - 1])) * self.dx
    }

    pub fn integrate_with<F: Fn(f64) -> f64>(&self, v: &[f64], g: F) -> f64 {
        let n = v.len();
        let inner: f64 = v[1..n - 1].iter().map(|&x| g(x)).sum();
        (inner + 0.5 * (g(v[0]) + g(v[n - 1]))) * self.dx
    }

    pub fn l2(&self, v: &[f64]) -> f64 {
        self.integrate_with(v, |x| x * x).sqrt()
    }

    pub fn l1(&self, v: &[f64]) -> f64 {
        self.integrate_with(v, f64::abs)
    }

    pub fn lp(&self, v: &[f64], p: f64) -> f64 {
        self.integrate_with(v, |x| x.abs().powf(p)).powf(1.0 / p)
    }

    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        let prod: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
        self.integrate(&prod)
    }

    pub fn gradient_lp_pow(&self, v: &[f64], p: f64) -> f64 {
        self.gradient_of(v)
            .iter()
            .map(|g| g.abs().powf(p))
            .sum::<f64>()
            * self.dx
    }

    pub fn norms(&self, u: &Field, p: f64) -> Result<Norms> {
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(p >= 1.0) {
            return Err(Error::Domain(format!("norm exponent must be >= 1, got {p}")));
        }
        self.check_len("field", u.len())?;
        let v = u.values();
        Ok(Norms {
            l2: self.l2(v),
            lp: self.lp(v, p),
            w1p_seminorm: self.gradient_lp_pow(v, p).powf(1.0 / p),
            sup: v.iter().fold(0.0, |m, x| m.max(x.abs())),
        })
    }

    /// `sum_c J(x_c, grad u_c) dx`
    pub fn stored_energy(&self, energy: &EnergyModel, u: &[f64]) -> f64 {
        u.windows(2)
            .enumerate()
            .map(|(c, w)| energy.value_1d(self.midpoint(c), (w[1] - w[0]) / self.dx))
            .sum::<f64>()
            * self.dx
    }

    /// `sum_c J(grad u_c) dx - sum_i g_i u_i dx`; its gradient in the
    /// interior values is [`Grid1D::assemble_residual`].
    pub fn discrete_energy(&self, energy: &EnergyModel, u: &Field, g: &[f64]) -> Result<f64> {
        self.check_len("field", u.len())?;
        self.check_len("load", g.len())?;
        Ok(self.stored_energy(energy, u.values()) - self.inner(g, u.values()))
    }
}

/// Rejects any non-positive or non-finite nodal capacity, naming the node.
pub fn validate_capacity(c: &[f64]) -> Result<()> {
    match c.iter().position(|&v| !(v.is_finite() && v > 0.0)) {
        Some(i) => Err(Error::Domain(format!(
            "capacity c at node {i} is {}, must be bounded below by a positive constant",
            c[i]
        ))),
        None => Ok(()),
    }
}

impl Field {
    pub fn zeros(grid: &Grid1D) -> Self {
        Field {
            values: vec![0.0; grid.n_nodes()],
            dirichlet: true,
        }
    }

    /// Samples `f` at the nodes and pins both ends to zero.
    pub fn dirichlet_from_fn<F: Fn(f64) -> f64>(grid: &Grid1D, f: F) -> Self {
        let n = grid.n_nodes();
        let values = (0..n)
            .map(|i| if i == 0 || i == n - 1 { 0.0 } else { f(grid.x(i)) })
            .collect();
        Field {
            values,
            dirichlet: true,
        }
    }

    /// Values without boundary constraint (test fields, loads).
    pub fn free(values: Vec<f64>) -> Result<Self> {
        Self::check_values(&values)?;
        Ok(Field {
            values,
            dirichlet: false,
        })
    }

    /// Dirichlet field; the end values must already be zero.
    pub fn dirichlet(values: Vec<f64>) -> Result<Self> {
        Self::check_values(&values)?;
        let n = values.len();
        if values[0] != 0.0 || values[n - 1] != 0.0 {
            return Err(Error::Domain(format!(
                "field violates the zero boundary condition: u(0) = {}, u(L) = {}",
                values[0],
                values[n - 1]
            )));
        }
        Ok(Field {
            values,
            dirichlet: true,
        })
    }

    fn check_values(values: &[f64]) -> Result<()> {
        if values.len() < 3 {
            return Err(Error::Domain("a field needs at least 3 nodal values".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite field value at node {i}")));
        }
        Ok(())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_dirichlet(&self) -> bool {
        self.dirichlet
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}
