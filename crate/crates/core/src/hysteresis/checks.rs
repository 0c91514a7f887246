//! Dissipation and Hilpert-type verifiers for scalar hysteresis models.

use super::model::HysteresisModel;
use super::ScalarString;
use crate::error::{Error, Result};

/// Sharp Heaviside function with `H(0) = 0`.
pub fn heaviside(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Piecewise-linear regularization of the Heaviside function: 0 below 0,
/// `x / eps` on `[0, eps]`, 1 above `eps`.
pub fn heaviside_regularized(x: f64, eps: f64) -> f64 {
    if x >= eps {
        1.0
    } else if x <= 0.0 {
        0.0
    } else {
        x / eps
    }
}

/// Input samples on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl SampledPath {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Self {
        SampledPath { times, values }
    }
}

impl HysteresisModel {
    /// Minimum over consecutive string entries of `(dv)(dw)`; never negative
    /// for piecewise-increasing operators. Returns 0 for a one-element string.
    pub fn dissipation_gap(&self, s: &ScalarString) -> Result<f64> {
        let values = s.values();
        let mut state = self.init_memory(values[0])?;
        let mut w_prev = self.output(&state)?;
        let mut gap = f64::INFINITY;
        for pair in values.windows(2) {
            let w = self.advance(&mut state, pair[1])?;
            gap = gap.min((pair[1] - pair[0]) * (w - w_prev));
            w_prev = w;
        }
        Ok(if gap.is_finite() { gap } else { 0.0 })
    }

    /// Discrete defect of Hilpert's inequality for two inputs on a shared
    /// grid: the maximum over segments of
    /// `w+(t_{k+1}) - w+(t_k) - (w(t_{k+1}) - w(t_k)) H(v)` with
    /// `w = w2 - w1`, `v = v2 - v1`.
    ///
    /// `H` is taken at the segment midpoint, which equals `H(v(t_k))` whenever
    /// `v` keeps a strict sign on the segment. Segments across which `v`
    /// changes sign should be split first (see [`refine_at_crossings`]).
    pub fn hilpert_gap(&self, path1: &SampledPath, path2: &SampledPath) -> Result<f64> {
        if path1.times != path2.times {
            return Err(Error::Usage(
                "Hilpert check needs both inputs on the same time grid".into(),
            ));
        }
        let w1 = self.evaluate_path(&path1.times, &path1.values)?;
        let w2 = self.evaluate_path(&path2.times, &path2.values)?;
        let mut defect = 0.0_f64;
        for k in 0..w1.len().saturating_sub(1) {
            let w0 = w2[k] - w1[k];
            let wn = w2[k + 1] - w1[k + 1];
            let v_mid = 0.5 * ((path2.values[k] - path1.values[k])
                + (path2.values[k + 1] - path1.values[k + 1]));
            let d = wn.max(0.0) - w0.max(0.0) - (wn - w0) * heaviside(v_mid);
            defect = defect.max(d);
        }
        Ok(defect)
    }
}

/// Inserts the linearly interpolated zero crossings of `v2 - v1` into a
/// pair of sampled paths, so that the difference keeps one sign on every
/// segment. Existing samples are kept.
pub fn refine_at_crossings(path1: &SampledPath, path2: &SampledPath) -> Result<(SampledPath, SampledPath)> {
    if path1.times != path2.times
        || path1.values.len() != path1.times.len()
        || path2.values.len() != path2.times.len()
    {
        return Err(Error::Usage("paths must share one time grid".into()));
    }
    let n = path1.times.len();
    let mut t = Vec::with_capacity(n);
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for k in 0..n {
        if k > 0 {
            let d0 = path2.values[k - 1] - path1.values[k - 1];
            let d1 = path2.values[k] - path1.values[k];
            if d0 * d1 < 0.0 {
                let theta = d0 / (d0 - d1);
                let tc = path1.times[k - 1] + theta * (path1.times[k] - path1.times[k - 1]);
                if tc > path1.times[k - 1] && tc < path1.times[k] {
                    let lerp = |v: &[f64]| v[k - 1] + theta * (v[k] - v[k - 1]);
                    t.push(tc);
                    a.push(lerp(&path1.values));
                    b.push(lerp(&path2.values));
                }
            }
        }
        t.push(path1.times[k]);
        a.push(path1.values[k]);
        b.push(path2.values[k]);
    }
    Ok((SampledPath::new(t.clone(), a), SampledPath::new(t, b)))
}
