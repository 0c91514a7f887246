//! Scalar hysteresis models and their structural constants.

use crate::error::{Error, Result};

/// A single bistable relay of a Preisach family.
///
/// The relay switches up when the input reaches `alpha` and down when it
/// reaches `beta`; both thresholds are closed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Relay {
    pub beta: f64,
    pub alpha: f64,
    pub weight: f64,
    /// Initial sign, `true` for +1.
    pub initially_up: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Play {
    radius: f64,
    initial_output: f64,
}

impl Play {
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Internal output before the first input sample is consumed.
    pub fn initial_output(&self) -> f64 {
        self.initial_output
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stop {
    radius: f64,
}

impl Stop {
    pub fn radius(&self) -> f64 {
        self.radius
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preisach {
    relays: Vec<Relay>,
}

impl Preisach {
    pub fn relays(&self) -> &[Relay] {
        &self.relays
    }

    pub fn total_weight(&self) -> f64 {
        self.relays.iter().map(|r| r.weight).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSum {
    terms: Vec<(f64, HysteresisModel)>,
}

impl WeightedSum {
    pub fn terms(&self) -> &[(f64, HysteresisModel)] {
        &self.terms
    }
}

/// A rate-independent scalar hysteresis operator.
///
/// Values are only obtainable through the validating constructors, so every
/// model satisfies the piecewise-monotonicity and affine-bound requirements.
#[derive(Debug, Clone, PartialEq)]
pub enum HysteresisModel {
    Zero,
    Play(Play),
    Stop(Stop),
    Preisach(Preisach),
    WeightedSum(WeightedSum),
}

fn check_radius(radius: f64) -> Result<()> {
    if radius.is_finite() && radius > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "hysteresis radius must be finite and > 0, got {radius}"
        )))
    }
}

impl HysteresisModel {
    pub fn zero() -> Self {
        HysteresisModel::Zero
    }

    pub fn play(radius: f64) -> Result<Self> {
        Self::play_with_initial(radius, 0.0)
    }

    pub fn play_with_initial(radius: f64, initial_output: f64) -> Result<Self> {
        check_radius(radius)?;
        if !initial_output.is_finite() {
            return Err(Error::Domain("play initial output must be finite".into()));
        }
        Ok(HysteresisModel::Play(Play {
            radius,
            initial_output,
        }))
    }

    pub fn stop(radius: f64) -> Result<Self> {
        check_radius(radius)?;
        Ok(HysteresisModel::Stop(Stop { radius }))
    }

    pub fn preisach(relays: Vec<Relay>) -> Result<Self> {
        for (k, r) in relays.iter().enumerate() {
            if !(r.beta.is_finite() && r.alpha.is_finite() && r.weight.is_finite()) {
                return Err(Error::Domain(format!("relay {k} has non-finite parameters")));
            }
            if r.beta >= r.alpha {
                return Err(Error::Domain(format!(
                    "relay {k}: beta {} must be below alpha {}",
                    r.beta, r.alpha
                )));
            }
            if r.weight < 0.0 {
                return Err(Error::Domain(format!(
                    "relay {k}: negative weight {}",
                    r.weight
                )));
            }
        }
        Ok(HysteresisModel::Preisach(Preisach { relays }))
    }

    /// Product family of relays: `n_beta` lower thresholds spread uniformly
    /// over `beta_range` (cell centres) times `n_alpha` upper thresholds over
    /// `alpha_range`, all with the same weight and initial sign.
    pub fn preisach_grid(
        beta_range: (f64, f64),
        alpha_range: (f64, f64),
        n_beta: usize,
        n_alpha: usize,
        weight: f64,
        initially_up: bool,
    ) -> Result<Self> {
        if n_beta == 0 || n_alpha == 0 {
            return Err(Error::Domain("relay grid resolution must be >= 1".into()));
        }
        let centre = |(lo, hi): (f64, f64), n: usize, i: usize| {
            lo + (hi - lo) * (i as f64 + 0.5) / n as f64
        };
        let mut relays = Vec::with_capacity(n_beta * n_alpha);
        for i in 0..n_beta {
            for j in 0..n_alpha {
                relays.push(Relay {
                    beta: centre(beta_range, n_beta, i),
                    alpha: centre(alpha_range, n_alpha, j),
                    weight,
                    initially_up,
                });
            }
        }
        Self::preisach(relays)
    }

    pub fn weighted_sum(terms: Vec<(f64, HysteresisModel)>) -> Result<Self> {
        for (k, (coef, _)) in terms.iter().enumerate() {
            if !(coef.is_finite() && *coef >= 0.0) {
                return Err(Error::Domain(format!(
                    "weighted sum term {k}: coefficient must be finite and >= 0, got {coef}"
                )));
            }
        }
        Ok(HysteresisModel::WeightedSum(WeightedSum { terms }))
    }

    pub fn name(&self) -> &'static str {
        match self {
            HysteresisModel::Zero => "zero",
            HysteresisModel::Play(_) => "play",
            HysteresisModel::Stop(_) => "stop",
            HysteresisModel::Preisach(_) => "preisach",
            HysteresisModel::WeightedSum(_) => "weighted_sum",
        }
    }

    /// Constants `(kappa0, gamma0)` with `|W_f(s)| <= kappa0 + gamma0 * |s|_inf`.
    pub fn affine_bound(&self) -> (f64, f64) {
        match self {
            HysteresisModel::Zero => (0.0, 0.0),
            HysteresisModel::Play(p) => (p.radius + p.initial_output.abs(), 1.0),
            HysteresisModel::Stop(s) => (s.radius, 0.0),
            HysteresisModel::Preisach(p) => (p.total_weight(), 0.0),
            HysteresisModel::WeightedSum(ws) => ws.terms.iter().fold((0.0, 0.0), |acc, (c, m)| {
                let (k, g) = m.affine_bound();
                (acc.0 + c * k, acc.1 + c * g)
            }),
        }
    }

    /// Constants `(kappa1, gamma1)` of the derivative bound
    /// `|w'| <= kappa1 + gamma1 |v'|`, when the model is Lipschitz.
    ///
    /// Finite relay families jump, so Preisach (and any sum containing one)
    /// returns `None`; see [`HysteresisModel::increment_bound`].
    pub fn lipschitz_constants(&self) -> Option<(f64, f64)> {
        match self {
            HysteresisModel::Zero => Some((0.0, 0.0)),
            HysteresisModel::Play(_) => Some((0.0, 1.0)),
            HysteresisModel::Stop(_) => Some((0.0, 2.0)),
            HysteresisModel::Preisach(_) => None,
            HysteresisModel::WeightedSum(ws) => {
                ws.terms.iter().try_fold((0.0, 0.0), |acc, (c, m)| {
                    let (k, g) = m.lipschitz_constants()?;
                    Some((acc.0 + c * k, acc.1 + c * g))
                })
            }
        }
    }

    /// Upper bound on `|w(t1) - w(t0)|` along a monotone input segment
    /// from `v_from` to `v_to` lasting `dt`.
    ///
    /// Lipschitz parts contribute `kappa1 dt + gamma1 |dv|`; each relay whose
    /// threshold lies in the closed segment contributes its full jump `2 weight`.
    #[allow(clippy::only_used_in_recursion)]
    pub fn increment_bound(&self, v_from: f64, v_to: f64, dt: f64) -> f64 {
        let dv = (v_to - v_from).abs();
        match self {
            HysteresisModel::Zero => 0.0,
            HysteresisModel::Play(_) => dv,
            HysteresisModel::Stop(_) => 2.0 * dv,
            HysteresisModel::Preisach(p) => {
                let (lo, hi) = if v_from <= v_to {
                    (v_from, v_to)
                } else {
                    (v_to, v_from)
                };
                let inside = |x: f64| lo <= x && x <= hi;
                p.relays
                    .iter()
                    .filter(|r| inside(r.alpha) || inside(r.beta))
                    .map(|r| 2.0 * r.weight)
                    .sum()
            }
            HysteresisModel::WeightedSum(ws) => ws
                .terms
                .iter()
                .map(|(c, m)| c * m.increment_bound(v_from, v_to, dt))
                .sum(),
        }
    }

    /// Whether Hilpert's inequality `d/dt (w2 - w1)+ <= (w2 - w1)' H(v2 - v1)`
    /// holds for every pair of inputs and initial memories.
    ///
    /// This needs a single scalar memory that can only move toward the
    /// input: the zero operator, a play, or a non-negative multiple of one
    /// play. Stops, relay families and sums of several plays admit pairs with
    /// anti-ordered memories whose difference decreases while the inputs keep
    /// their order.
    pub fn satisfies_hilpert(&self) -> bool {
        match self {
            HysteresisModel::Zero | HysteresisModel::Play(_) => true,
            HysteresisModel::Stop(_) | HysteresisModel::Preisach(_) => false,
            HysteresisModel::WeightedSum(ws) => {
                let active: Vec<&HysteresisModel> = ws
                    .terms
                    .iter()
                    .filter(|(c, m)| *c != 0.0 && !matches!(m, HysteresisModel::Zero))
                    .map(|(_, m)| m)
                    .collect();
                active.len() <= 1 && active.iter().all(|m| m.satisfies_hilpert())
            }
        }
    }
}
