//! Explicit memory of a hysteresis operator and the string-extension update.

use super::model::HysteresisModel;
use super::ScalarString;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum NodeMemory {
    Zero,
    Play { output: f64 },
    Stop { output: f64 },
    Preisach { up: Vec<bool> },
    Sum(Vec<NodeMemory>),
}

/// State left behind after consuming a finite input string.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryState {
    last_input: f64,
    pub(crate) node: NodeMemory,
}

impl MemoryState {
    /// Last consumed input value.
    pub fn last_input(&self) -> f64 {
        self.last_input
    }

    /// Relay signs (±1) of a Preisach memory, in relay order.
    pub fn relay_signs(&self) -> Option<Vec<f64>> {
        match &self.node {
            NodeMemory::Preisach { up } => {
                Some(up.iter().map(|&u| if u { 1.0 } else { -1.0 }).collect())
            }
            _ => None,
        }
    }
}

fn check_finite(v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("hysteresis input must be finite, got {v}")))
    }
}

pub(crate) fn mismatch(model: &HysteresisModel) -> Error {
    Error::Usage(format!(
        "memory state does not belong to a {} model",
        model.name()
    ))
}

#[inline]
pub(crate) fn relay_next(up: bool, beta: f64, alpha: f64, v: f64) -> bool {
    if v >= alpha {
        true
    } else if v <= beta {
        false
    } else {
        up
    }
}

impl HysteresisModel {
    fn init_node(&self, v0: f64) -> NodeMemory {
        match self {
            HysteresisModel::Zero => NodeMemory::Zero,
            HysteresisModel::Play(p) => NodeMemory::Play {
                output: p.initial_output().clamp(v0 - p.radius(), v0 + p.radius()),
            },
            HysteresisModel::Stop(s) => NodeMemory::Stop {
                output: v0.clamp(-s.radius(), s.radius()),
            },
            HysteresisModel::Preisach(p) => NodeMemory::Preisach {
                up: p
                    .relays()
                    .iter()
                    .map(|r| relay_next(r.initially_up, r.beta, r.alpha, v0))
                    .collect(),
            },
            HysteresisModel::WeightedSum(ws) => {
                NodeMemory::Sum(ws.terms().iter().map(|(_, m)| m.init_node(v0)).collect())
            }
        }
    }

    /// Memory after consuming the one-element string `(v0)`.
    pub fn init_memory(&self, v0: f64) -> Result<MemoryState> {
        check_finite(v0)?;
        Ok(MemoryState {
            last_input: v0,
            node: self.init_node(v0),
        })
    }

    fn advance_node(&self, node: &mut NodeMemory, v_last: f64, v: f64) -> Result<()> {
        match (self, node) {
            (HysteresisModel::Zero, NodeMemory::Zero) => {}
            (HysteresisModel::Play(p), NodeMemory::Play { output }) => {
                *output = output.clamp(v - p.radius(), v + p.radius());
            }
            (HysteresisModel::Stop(s), NodeMemory::Stop { output }) => {
                *output = (*output + (v - v_last)).clamp(-s.radius(), s.radius());
            }
            (HysteresisModel::Preisach(p), NodeMemory::Preisach { up }) => {
                if up.len() != p.relays().len() {
                    return Err(mismatch(self));
                }
                for (u, r) in up.iter_mut().zip(p.relays()) {
                    *u = relay_next(*u, r.beta, r.alpha, v);
                }
            }
            (HysteresisModel::WeightedSum(ws), NodeMemory::Sum(children)) => {
                if children.len() != ws.terms().len() {
                    return Err(mismatch(self));
                }
                for ((_, m), child) in ws.terms().iter().zip(children.iter_mut()) {
                    m.advance_node(child, v_last, v)?;
                }
            }
            _ => return Err(mismatch(self)),
        }
        Ok(())
    }

    pub(crate) fn node_output(&self, node: &NodeMemory) -> Result<f64> {
        Ok(match (self, node) {
            (HysteresisModel::Zero, NodeMemory::Zero) => 0.0,
            (HysteresisModel::Play(_), NodeMemory::Play { output })
            | (HysteresisModel::Stop(_), NodeMemory::Stop { output }) => *output,
            (HysteresisModel::Preisach(p), NodeMemory::Preisach { up }) => {
                if up.len() != p.relays().len() {
                    return Err(mismatch(self));
                }
                p.relays()
                    .iter()
                    .zip(up)
                    .map(|(r, &u)| if u { r.weight } else { -r.weight })
                    .sum()
            }
            (HysteresisModel::WeightedSum(ws), NodeMemory::Sum(children)) => {
                if children.len() != ws.terms().len() {
                    return Err(mismatch(self));
                }
                let mut total = 0.0;
                for ((c, m), child) in ws.terms().iter().zip(children) {
                    total += c * m.node_output(child)?;
                }
                total
            }
            _ => return Err(mismatch(self)),
        })
    }

    /// Current output of the operator for the given memory.
    pub fn output(&self, state: &MemoryState) -> Result<f64> {
        self.node_output(&state.node)
    }

    /// Extends the consumed string by `v` in place and returns the new output.
    pub fn advance(&self, state: &mut MemoryState, v: f64) -> Result<f64> {
        check_finite(v)?;
        self.advance_node(&mut state.node, state.last_input, v)?;
        state.last_input = v;
        self.output(state)
    }

    /// Memory and output after the monotone input segment from the last
    /// consumed value to `v_new`.
    pub fn update(&self, state: &MemoryState, v_new: f64) -> Result<(MemoryState, f64)> {
        let mut next = state.clone();
        let w = self.advance(&mut next, v_new)?;
        Ok((next, w))
    }

    /// Memory after folding the whole string.
    pub fn memory_after(&self, s: &ScalarString) -> Result<MemoryState> {
        let (first, rest) = s.values().split_first().expect("strings are non-empty");
        let mut state = self.init_memory(*first)?;
        for &v in rest {
            self.advance(&mut state, v)?;
        }
        Ok(state)
    }

    /// Final value of the operator on the string `s`.
    pub fn evaluate_string(&self, s: &ScalarString) -> Result<f64> {
        let state = self.memory_after(s)?;
        self.output(&state)
    }

    /// Outputs at every sample of the piecewise-linear input through
    /// `(times, values)`. Only the order of the samples matters.
    pub fn evaluate_path(&self, times: &[f64], values: &[f64]) -> Result<Vec<f64>> {
        if times.len() != values.len() {
            return Err(Error::Usage(format!(
                "path has {} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::Domain("path times must be finite".into()));
        }
        if let Some(k) = times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::Domain(format!(
                "path times must be strictly increasing (index {})",
                k + 1
            )));
        }
        let Some((&first, rest)) = values.split_first() else {
            return Ok(Vec::new());
        };
        let mut state = self.init_memory(first)?;
        let mut out = Vec::with_capacity(values.len());
        out.push(self.output(&state)?);
        for &v in rest {
            out.push(self.advance(&mut state, v)?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hysteresis::Relay;

    fn string(v: &[f64]) -> ScalarString {
        ScalarString::new(v.to_vec()).unwrap()
    }

    fn outputs(model: &HysteresisModel, v: &[f64]) -> Vec<f64> {
        let mut state = model.init_memory(v[0]).unwrap();
        let mut out = vec![model.output(&state).unwrap()];
        for &x in &v[1..] {
            let (next, w) = model.update(&state, x).unwrap();
            out.push(w);
            state = next;
        }
        out
    }

    #[test]
    fn init_memory_examples() {
        let play = HysteresisModel::play(1.0).unwrap();
        assert_eq!(play.output(&play.init_memory(0.5).unwrap()).unwrap(), 0.0);
        assert_eq!(play.output(&play.init_memory(3.0).unwrap()).unwrap(), 2.0);
        let relay = HysteresisModel::preisach(vec![Relay {
            beta: -1.0,
            alpha: 1.0,
            weight: 1.0,
            initially_up: false,
        }])
        .unwrap();
        let st = relay.init_memory(2.0).unwrap();
        assert_eq!(st.relay_signs().unwrap(), vec![1.0]);
        assert!(play.init_memory(f64::NAN).is_err());
        assert!(play.init_memory(f64::INFINITY).is_err());
    }

    #[test]
    fn update_examples() {
        let play = HysteresisModel::play(1.0).unwrap();
        assert_eq!(outputs(&play, &[0.0, 2.0, -2.0]), vec![0.0, 1.0, -1.0]);
        let stop = HysteresisModel::stop(1.0).unwrap();
        assert_eq!(outputs(&stop, &[0.0, 2.0]), vec![0.0, 1.0]);
    }

    #[test]
    fn play_plateau_inside_band() {
        // brute-force clamp recursion
        let input = [0.0, 2.0, 1.5, 2.0];
        let mut w = 0.0_f64;
        let mut expected = Vec::new();
        for &v in &input {
            w = w.max(v - 1.0).min(v + 1.0);
            expected.push(w);
        }
        assert_eq!(expected, vec![0.0, 1.0, 1.0, 1.0]);
        let play = HysteresisModel::play(1.0).unwrap();
        assert_eq!(outputs(&play, &input), expected);
    }

    #[test]
    fn evaluate_string_examples() {
        let play = HysteresisModel::play(1.0).unwrap();
        assert_eq!(play.evaluate_string(&string(&[0.0])).unwrap(), 0.0);
        // clamp recursion gives 0, 1, -1, -1
        assert_eq!(
            play.evaluate_string(&string(&[0.0, 2.0, -2.0, 0.0])).unwrap(),
            -1.0
        );
        let zero = HysteresisModel::zero();
        assert_eq!(zero.evaluate_string(&string(&[3.0, -7.0, 1.0])).unwrap(), 0.0);
    }

    #[test]
    fn evaluate_path_examples() {
        let play = HysteresisModel::play(1.0).unwrap();
        let a = play.evaluate_path(&[0.0, 1.0, 2.0], &[0.0, 2.0, -2.0]).unwrap();
        assert_eq!(a, vec![0.0, 1.0, -1.0]);
        let b = play.evaluate_path(&[0.0, 0.1, 0.2], &[0.0, 2.0, -2.0]).unwrap();
        assert_eq!(a, b);
        let stop = HysteresisModel::stop(0.5).unwrap();
        assert_eq!(
            stop.evaluate_path(&[0.0, 1.0], &[0.0, 0.3]).unwrap(),
            vec![0.0, 0.3]
        );
        assert!(matches!(
            play.evaluate_path(&[0.0, 0.0], &[1.0, 2.0]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            play.evaluate_path(&[0.0, 1.0], &[1.0]),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn mismatched_memory_is_a_usage_error() {
        let play = HysteresisModel::play(1.0).unwrap();
        let stop = HysteresisModel::stop(1.0).unwrap();
        let st = stop.init_memory(0.0).unwrap();
        assert!(matches!(play.update(&st, 1.0), Err(Error::Usage(_))));
    }

    #[test]
    fn closed_thresholds() {
        let relay = HysteresisModel::preisach(vec![Relay {
            beta: -1.0,
            alpha: 1.0,
            weight: 1.0,
            initially_up: false,
        }])
        .unwrap();
        assert_eq!(outputs(&relay, &[0.0, 1.0, -1.0]), vec![-1.0, 1.0, -1.0]);
        assert_eq!(outputs(&relay, &[0.0, 0.999, -0.999]), vec![-1.0, -1.0, -1.0]);
    }

    #[test]
    fn play_and_stop_sum_to_identity() {
        let play = HysteresisModel::play(0.7).unwrap();
        let stop = HysteresisModel::stop(0.7).unwrap();
        let v = [0.3, 1.9, -0.4, 0.2, 2.5, -3.0, -2.9];
        let p = outputs(&play, &v);
        let s = outputs(&stop, &v);
        for k in 0..v.len() {
            assert!((p[k] + s[k] - v[k]).abs() < 1e-14);
        }
    }
}
