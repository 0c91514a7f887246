//! The map `v -> W_f(prefix ++ (v))` for a frozen memory.
//!
//! For every shipped model this map is nondecreasing and piecewise affine,
//! possibly with upward jumps (relays). The implicit scheme inverts
//! `u -> c u + W(u)` node by node, and the inverse of that strictly increasing
//! graph is continuous even where `W` jumps.

use super::memory::{mismatch, MemoryState, NodeMemory};
use super::model::HysteresisModel;
use crate::error::Result;

/// Piecewise-affine nondecreasing function of the last input value.
///
/// Piece `j` applies on the open interval `(knots[j-1], knots[j])` and reads
/// `slopes[j] * v + intercepts[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LastValueMap {
    knots: Vec<f64>,
    slopes: Vec<f64>,
    intercepts: Vec<f64>,
}

/// Result of inverting `u -> c u + W(u)` at a given level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphInverse {
    pub u: f64,
    /// Derivative of the inverse; zero inside a jump of `W`.
    pub du_dz: f64,
    /// Whether the level falls strictly inside a jump of `W`.
    pub on_jump: bool,
}

impl LastValueMap {
    fn constant(value: f64) -> Self {
        LastValueMap {
            knots: Vec::new(),
            slopes: vec![0.0],
            intercepts: vec![value],
        }
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    fn piece_at(&self, v: f64) -> usize {
        self.knots.partition_point(|&k| k < v)
    }

    /// Value on the piece containing `v`; at a knot this is the left limit.
    pub fn eval(&self, v: f64) -> f64 {
        let j = self.piece_at(v);
        self.slopes[j] * v + self.intercepts[j]
    }

    /// One-sided slope used as the generalized derivative.
    pub fn slope(&self, v: f64) -> f64 {
        self.slopes[self.piece_at(v)]
    }

    fn combine(parts: &[(f64, LastValueMap)]) -> Self {
        let mut knots: Vec<f64> = parts.iter().flat_map(|(_, m)| m.knots.iter().copied()).collect();
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let n = knots.len();
        let mut slopes = Vec::with_capacity(n + 1);
        let mut intercepts = Vec::with_capacity(n + 1);
        for j in 0..=n {
            let probe = match (j, n) {
                (_, 0) => 0.0,
                (0, _) => knots[0] - 1.0,
                (j, n) if j == n => knots[n - 1] + 1.0,
                (j, _) => 0.5 * (knots[j - 1] + knots[j]),
            };
            let (mut s, mut i) = (0.0, 0.0);
            for (c, m) in parts {
                let k = m.piece_at(probe);
                s += c * m.slopes[k];
                i += c * m.intercepts[k];
            }
            slopes.push(s);
            intercepts.push(i);
        }
        LastValueMap {
            knots,
            slopes,
            intercepts,
        }
    }

    /// Solves `c u + W(u) = z` for `u` (`c > 0`).
    pub fn invert(&self, c: f64, z: f64) -> GraphInverse {
        let n = self.knots.len();
        let graph = |j: usize, u: f64| (c + self.slopes[j]) * u + self.intercepts[j];
        // first piece whose right-end limit reaches z
        let (mut lo, mut hi) = (0, n);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if graph(mid, self.knots[mid]) < z {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        let j = lo;
        if j > 0 {
            let left = self.knots[j - 1];
            if z < graph(j, left) {
                return GraphInverse {
                    u: left,
                    du_dz: 0.0,
                    on_jump: true,
                };
            }
        }
        let slope = c + self.slopes[j];
        let mut u = (z - self.intercepts[j]) / slope;
        if j > 0 {
            u = u.max(self.knots[j - 1]);
        }
        if j < n {
            u = u.min(self.knots[j]);
        }
        GraphInverse {
            u,
            du_dz: 1.0 / slope,
            on_jump: false,
        }
    }
}

impl HysteresisModel {
    fn node_last_value_map(&self, node: &NodeMemory, v_last: f64) -> Result<LastValueMap> {
        Ok(match (self, node) {
            (HysteresisModel::Zero, NodeMemory::Zero) => LastValueMap::constant(0.0),
            (HysteresisModel::Play(p), NodeMemory::Play { output }) => {
                let r = p.radius();
                LastValueMap {
                    knots: vec![output - r, output + r],
                    slopes: vec![1.0, 0.0, 1.0],
                    intercepts: vec![r, *output, -r],
                }
            }
            (HysteresisModel::Stop(s), NodeMemory::Stop { output }) => {
                let r = s.radius();
                LastValueMap {
                    knots: vec![v_last - r - output, v_last + r - output],
                    slopes: vec![0.0, 1.0, 0.0],
                    intercepts: vec![-r, output - v_last, r],
                }
            }
            (HysteresisModel::Preisach(p), NodeMemory::Preisach { up }) => {
                // every relay contributes -weight below its active threshold
                // and +weight from there on
                let mut steps: Vec<(f64, f64)> = p
                    .relays()
                    .iter()
                    .zip(up)
                    .map(|(r, &u)| (if u { r.beta } else { r.alpha }, r.weight))
                    .collect();
                steps.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut knots: Vec<f64> = Vec::with_capacity(steps.len());
                let mut intercepts = vec![-p.total_weight()];
                for (x, wt) in steps {
                    let last = *intercepts.last().unwrap();
                    if knots.last() == Some(&x) {
                        *intercepts.last_mut().unwrap() = last + 2.0 * wt;
                    } else {
                        knots.push(x);
                        intercepts.push(last + 2.0 * wt);
                    }
                }
                let slopes = vec![0.0; intercepts.len()];
                LastValueMap {
                    knots,
                    slopes,
                    intercepts,
                }
            }
            (HysteresisModel::WeightedSum(ws), NodeMemory::Sum(children)) => {
                let mut parts = Vec::with_capacity(children.len());
                for ((c, m), child) in ws.terms().iter().zip(children) {
                    parts.push((*c, m.node_last_value_map(child, v_last)?));
                }
                LastValueMap::combine(&parts)
            }
            _ => return Err(mismatch(self)),
        })
    }

    /// The output as a function of the next input value, memory frozen.
    pub fn last_value_map(&self, state: &MemoryState) -> Result<LastValueMap> {
        self.node_last_value_map(&state.node, state.last_input())
    }
}
