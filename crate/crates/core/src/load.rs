//! Space-time loads `f(x, t)` as sums of separable terms `g(x) * phi(t)` and
//! their time averages over a step.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::Grid1D;

/// Spatial profile `g(x)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Zero,
    Constant(f64),
    /// `amplitude * sin(mode * pi * x / L)`
    Sine { amplitude: f64, mode: u32 },
    /// `height * (1 - s^2)^2` for `s = (x - center) / half_width` in `(-1, 1)`, else 0.
    Bump { center: f64, half_width: f64, height: f64 },
    /// Piecewise-linear interpolation of `(x, value)` knots, constant outside.
    Table(Vec<(f64, f64)>),
}

/// Temporal factor `phi(t)`.
#[derive(Debug, Clone, PartialEq)]
pub enum TimeFactor {
    Constant,
    /// `exp(-rate t)`
    Exp { rate: f64 },
    /// `sin(omega t + phase)`
    Sin { omega: f64, phase: f64 },
    /// Indicator of `[start, end)`.
    Window { start: f64, end: f64 },
    /// Piecewise-linear interpolation of `(t, value)` knots, constant outside.
    Table(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Load {
    terms: Vec<(Profile, TimeFactor)>,
}

fn check_table(name: &str, table: &[(f64, f64)]) -> Result<()> {
    if table.is_empty() {
        return Err(Error::Domain(format!("{name} table is empty")));
    }
    if table.iter().any(|(a, b)| !(a.is_finite() && b.is_finite())) {
        return Err(Error::Domain(format!("{name} table has non-finite entries")));
    }
    if table.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::Domain(format!(
            "{name} table abscissae must be strictly increasing"
        )));
    }
    Ok(())
}

fn table_eval(table: &[(f64, f64)], x: f64) -> f64 {
    let k = table.partition_point(|(a, _)| *a <= x);
    if k == 0 {
        return table[0].1;
    }
    if k == table.len() {
        return table[k - 1].1;
    }
    let (x0, y0) = table[k - 1];
    let (x1, y1) = table[k];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

impl Profile {
    pub fn validate(&self) -> Result<()> {
        match self {
            Profile::Zero => Ok(()),
            Profile::Constant(v) if v.is_finite() => Ok(()),
            Profile::Sine { amplitude, mode } if amplitude.is_finite() && *mode >= 1 => Ok(()),
            Profile::Bump {
                center,
                half_width,
                height,
            } if center.is_finite() && height.is_finite() && *half_width > 0.0 => Ok(()),
            Profile::Table(t) => check_table("profile", t),
            other => Err(Error::Domain(format!("invalid spatial profile {other:?}"))),
        }
    }

    pub fn eval(&self, x: f64, length: f64) -> f64 {
        match self {
            Profile::Zero => 0.0,
            Profile::Constant(v) => *v,
            Profile::Sine { amplitude, mode } => amplitude * (*mode as f64 * PI * x / length).sin(),
            Profile::Bump {
                center,
                half_width,
                height,
            } => {
                let s = (x - center) / half_width;
                if s.abs() < 1.0 {
                    height * (1.0 - s * s).powi(2)
                } else {
                    0.0
                }
            }
            Profile::Table(t) => table_eval(t, x),
        }
    }

    /// Nodal samples on a grid, boundary nodes included.
    pub fn sample(&self, grid: &Grid1D) -> Vec<f64> {
        grid.nodes()
            .iter()
            .map(|&x| self.eval(x, grid.length()))
            .collect()
    }
}

const GAUSS4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
];

impl TimeFactor {
    pub fn validate(&self) -> Result<()> {
        match self {
            TimeFactor::Constant => Ok(()),
            TimeFactor::Exp { rate } if rate.is_finite() => Ok(()),
            TimeFactor::Sin { omega, phase } if omega.is_finite() && phase.is_finite() => Ok(()),
            TimeFactor::Window { start, end } if start.is_finite() && end.is_finite() && start <= end => {
                Ok(())
            }
            TimeFactor::Table(t) => check_table("time factor", t),
            other => Err(Error::Domain(format!("invalid time factor {other:?}"))),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            TimeFactor::Constant => 1.0,
            TimeFactor::Exp { rate } => (-rate * t).exp(),
            TimeFactor::Sin { omega, phase } => (omega * t + phase).sin(),
            TimeFactor::Window { start, end } => {
                if *start <= t && t < *end {
                    1.0
                } else {
                    0.0
                }
            }
            TimeFactor::Table(tab) => table_eval(tab, t),
        }
    }

    /// Mean over `[t0, t1]`: closed form where available, otherwise
    /// 4-point Gauss–Legendre.
    pub fn average(&self, t0: f64, t1: f64) -> f64 {
        let h = t1 - t0;
        match self {
            TimeFactor::Constant => 1.0,
            TimeFactor::Exp { rate } if *rate != 0.0 => {
                ((-rate * t0).exp() - (-rate * t1).exp()) / (rate * h)
            }
            TimeFactor::Exp { .. } => 1.0,
            TimeFactor::Sin { omega, phase } if *omega != 0.0 => {
                ((omega * t0 + phase).cos() - (omega * t1 + phase).cos()) / (omega * h)
            }
            TimeFactor::Sin { phase, .. } => phase.sin(),
            TimeFactor::Window { start, end } => {
                let overlap = (t1.min(*end) - t0.max(*start)).max(0.0);
                overlap / h
            }
            TimeFactor::Table(tab) => {
                // Gauss on every smooth piece between table knots
                let mut cuts = vec![t0];
                cuts.extend(tab.iter().map(|(t, _)| *t).filter(|t| *t > t0 && *t < t1));
                cuts.push(t1);
                let mut total = 0.0;
                for c in cuts.windows(2) {
                    let (mid, len) = (0.5 * (c[0] + c[1]), c[1] - c[0]);
                    total += GAUSS4
                        .iter()
                        .map(|(s, w)| 0.5 * len * w * self.eval(mid + 0.5 * len * s))
                        .sum::<f64>();
                }
                total / h
            }
        }
    }
}

impl Load {
    pub fn zero() -> Self {
        Load { terms: Vec::new() }
    }

    pub fn separable(profile: Profile, factor: TimeFactor) -> Result<Self> {
        Load::zero().plus(profile, factor)
    }

    pub fn plus(mut self, profile: Profile, factor: TimeFactor) -> Result<Self> {
        profile.validate()?;
        factor.validate()?;
        self.terms.push((profile, factor));
        Ok(self)
    }

    pub fn terms(&self) -> &[(Profile, TimeFactor)] {
        &self.terms
    }

    /// Nodal values of `f(., t)`.
    pub fn at(&self, grid: &Grid1D, t: f64) -> Vec<f64> {
        self.combine(grid, |phi| phi.eval(t))
    }

    /// Nodal mean of `f` over `[t0, t1]`.
    pub fn average_over(&self, grid: &Grid1D, t0: f64, t1: f64) -> Vec<f64> {
        self.combine(grid, |phi| phi.average(t0, t1))
    }

    /// Nodal mean of `f` over level `m`'s interval `((m - 1) h, m h]`.
    pub fn average_load(&self, grid: &Grid1D, m: usize, h: f64) -> Result<Vec<f64>> {
        if m == 0 {
            return Err(Error::Domain("load averages start at level 1".into()));
        }
        Ok(self.average_over(grid, (m - 1) as f64 * h, m as f64 * h))
    }

    fn combine<F: Fn(&TimeFactor) -> f64>(&self, grid: &Grid1D, factor: F) -> Vec<f64> {
        let mut out = vec![0.0; grid.n_nodes()];
        for (g, phi) in &self.terms {
            let s = factor(phi);
            if s == 0.0 {
                continue;
            }
            for (o, x) in out.iter_mut().zip(grid.nodes()) {
                *o += s * g.eval(x, grid.length());
            }
        }
        out
    }
}
