//! Convex energy integrands `J(x, lambda)` and their fluxes `a = grad_lambda J`.
//!
//! Every model documents the constants of its growth sandwich
//! `alpha1 |l|^p <= J <= alpha2 (1 + |l|^p)`, the flux growth constant `C3`,
//! the coercivity offset `alpha3 = sup_x J(x, 0)` and the Lipschitz-type
//! constant `C2`. [`EnergyModel::verify_growth`] and
//! [`EnergyModel::verify_monotone`] check them by sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Piecewise-constant positive coefficient field on the real line:
/// `values[k]` applies from `starts[k]` up to `starts[k + 1]`. Points left of
/// the first start use the first value.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    starts: Vec<f64>,
    values: Vec<f64>,
}

impl CoefficientField {
    pub fn constant(value: f64) -> Result<Self> {
        Self::piecewise(vec![(0.0, value)])
    }

    pub fn piecewise(table: Vec<(f64, f64)>) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::Domain("coefficient table is empty".into()));
        }
        if table.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Domain(
                "coefficient table starts must be strictly increasing".into(),
            ));
        }
        if let Some((x, v)) = table.iter().find(|(x, v)| !(x.is_finite() && v.is_finite() && *v > 0.0)) {
            return Err(Error::Domain(format!(
                "coefficient at x = {x} must be finite and positive, got {v}"
            )));
        }
        let (starts, values) = table.into_iter().unzip();
        Ok(CoefficientField { starts, values })
    }

    pub fn at(&self, x: f64) -> f64 {
        let k = self.starts.partition_point(|&s| s <= x);
        self.values[k.saturating_sub(1)]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn starts(&self) -> &[f64] {
        &self.starts
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnergyKind {
    /// `J = scale |l|^p`.
    PPower { p: f64, scale: f64 },
    /// `J = scale (delta^2 + |l|^2)^(p/2) - scale delta^p`.
    RegularizedPPower { p: f64, scale: f64, delta: f64 },
    /// `J = k(x) |l|^2 / 2`.
    Quadratic { k: CoefficientField },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyModel {
    kind: EnergyKind,
    dim: usize,
}

/// Worst normalized margins of the growth and coercivity inequalities.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthReport {
    pub samples: usize,
    /// `J - alpha1 |l|^p`
    pub lower: f64,
    /// `alpha2 (1 + |l|^p) - J`
    pub upper: f64,
    /// `C3 (1 + |l|^(p-1)) - |a|`
    pub flux_growth: f64,
    /// `a . l - alpha1 |l|^p + alpha3`
    pub coercivity: f64,
    /// Gradient at which the smallest margin occurred.
    pub witness: Vec<f64>,
}

impl GrowthReport {
    pub fn worst(&self) -> f64 {
        self.lower
            .min(self.upper)
            .min(self.flux_growth)
            .min(self.coercivity)
    }

    pub fn passed(&self, tol: f64) -> bool {
        self.worst() >= -tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneReport {
    pub pairs: usize,
    /// Minimum raw monotonicity gap `(a1 - a2) . (l1 - l2)`.
    pub min_gap: f64,
    /// Minimum normalized gap.
    pub min_gap_normalized: f64,
    /// Minimum normalized margin of `C2 (1 + |l1| + |l2|)^(p-2) |l1 - l2| - |a1 - a2|`.
    pub lipschitz: f64,
    pub witness: (Vec<f64>, Vec<f64>),
}

impl MonotoneReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.min_gap_normalized >= -tol && self.lipschitz >= -tol
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_p(p: f64) -> Result<()> {
    if p.is_finite() && p >= 2.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("growth exponent p must be >= 2, got {p}")))
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite and > 0, got {v}")))
    }
}

impl EnergyModel {
    pub fn ppower(p: f64, scale: f64) -> Result<Self> {
        check_p(p)?;
        check_positive("alpha1", scale)?;
        Ok(EnergyModel {
            kind: EnergyKind::PPower { p, scale },
            dim: 1,
        })
    }

    pub fn regularized_ppower(p: f64, scale: f64, delta: f64) -> Result<Self> {
        check_p(p)?;
        check_positive("alpha1", scale)?;
        check_positive("delta", delta)?;
        Ok(EnergyModel {
            kind: EnergyKind::RegularizedPPower { p, scale, delta },
            dim: 1,
        })
    }

    pub fn quadratic(k: CoefficientField) -> Self {
        EnergyModel {
            kind: EnergyKind::Quadratic { k },
            dim: 1,
        }
    }

    /// Same integrand acting on gradients in `R^dim`, `dim` in {1, 2}.
    pub fn with_dim(mut self, dim: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::Domain(format!("dimension must be 1 or 2, got {dim}")));
        }
        self.dim = dim;
        Ok(self)
    }

    pub fn kind(&self) -> &EnergyKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn p(&self) -> f64 {
        match &self.kind {
            EnergyKind::PPower { p, .. } | EnergyKind::RegularizedPPower { p, .. } => *p,
            EnergyKind::Quadratic { .. } => 2.0,
        }
    }

    pub fn alpha1(&self) -> f64 {
        match &self.kind {
            EnergyKind::PPower { scale, .. } | EnergyKind::RegularizedPPower { scale, .. } => {
                *scale
            }
            EnergyKind::Quadratic { k } => 0.5 * k.min(),
        }
    }

    pub fn alpha2(&self) -> f64 {
        match &self.kind {
            EnergyKind::PPower { scale, .. } => *scale,
            EnergyKind::RegularizedPPower { p, scale, delta } => {
                scale * 2f64.powf(p / 2.0 - 1.0) * delta.powf(*p).max(1.0)
            }
            EnergyKind::Quadratic { k } => 0.5 * k.max(),
        }
    }

    /// `sup_x J(x, 0)`; zero for every shipped family.
    pub fn alpha3(&self) -> f64 {
        0.0
    }

    /// Flux growth constant: `|a| <= C3 (1 + |l|^(p-1))`.
    pub fn c3(&self) -> f64 {
        match &self.kind {
            EnergyKind::PPower { p, scale } => p * scale,
            EnergyKind::RegularizedPPower { p, scale, delta } => {
                p * scale * 2f64.powf((p - 3.0) / 2.0).max(1.0) * delta.powf(p - 1.0).max(1.0)
            }
            EnergyKind::Quadratic { k } => k.max(),
        }
    }

    /// `|a(l1) - a(l2)| <= C2 (1 + |l1| + |l2|)^(p-2) |l1 - l2|`.
    pub fn c2(&self) -> f64 {
        match &self.kind {
            EnergyKind::PPower { p, scale } => p * (p - 1.0) * scale,
            EnergyKind::RegularizedPPower { p, scale, delta } => {
                p * (p - 1.0) * scale * delta.max(1.0).powf(p - 2.0)
            }
            EnergyKind::Quadratic { k } => k.max(),
        }
    }

    /// Radial profile: returns `(J, phi, phi')` with `J = J(s)`,
    /// `a = phi(s) l` and `phi'` its derivative in `s = |l|`,
    /// split as `(phi, s phi'(s))` for the Hessian.
    #[inline]
    fn radial(&self, x: f64, s: f64) -> (f64, f64, f64) {
        match &self.kind {
            EnergyKind::PPower { p, scale } => {
                if *p == 2.0 {
                    (scale * s * s, 2.0 * scale, 0.0)
                } else {
                    let sp2 = s.powf(p - 2.0);
                    (scale * sp2 * s * s, p * scale * sp2, p * scale * (p - 2.0) * sp2)
                }
            }
            EnergyKind::RegularizedPPower { p, scale, delta } => {
                let q = delta * delta + s * s;
                let qp = q.powf(p / 2.0 - 1.0);
                let value = scale * (qp * q - delta.powf(*p));
                let phi = p * scale * qp;
                let s_dphi = p * scale * (p - 2.0) * qp * s * s / q;
                (value, phi, s_dphi)
            }
            EnergyKind::Quadratic { k } => {
                let kx = k.at(x);
                (0.5 * kx * s * s, kx, 0.0)
            }
        }
    }

    pub fn value(&self, x: &[f64], lambda: &[f64]) -> f64 {
        self.radial(x[0], norm(lambda)).0
    }

    pub fn flux(&self, x: &[f64], lambda: &[f64]) -> Vec<f64> {
        let (_, phi, _) = self.radial(x[0], norm(lambda));
        lambda.iter().map(|l| phi * l).collect()
    }

    /// Hessian `grad^2_lambda J`, row-major `dim x dim`.
    ///
    /// Pure p-power integrands with `p > 2` have a degenerate Hessian at the
    /// origin; that point is reported as [`Error::Degenerate`].
    pub fn flux_jacobian(&self, x: &[f64], lambda: &[f64]) -> Result<Vec<f64>> {
        let s = norm(lambda);
        if let EnergyKind::PPower { p, .. } = self.kind {
            if p > 2.0 && s == 0.0 {
                return Err(Error::Degenerate(lambda.to_vec()));
            }
        }
        let (_, phi, s_dphi) = self.radial(x[0], s);
        let d = lambda.len();
        let mut h = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                let outer = if s > 0.0 {
                    s_dphi * lambda[i] * lambda[j] / (s * s)
                } else {
                    0.0
                };
                h[i * d + j] = outer + if i == j { phi } else { 0.0 };
            }
        }
        Ok(h)
    }

    #[inline]
    pub fn value_1d(&self, x: f64, lambda: f64) -> f64 {
        self.radial(x, lambda.abs()).0
    }

    #[inline]
    pub fn flux_1d(&self, x: f64, lambda: f64) -> f64 {
        self.radial(x, lambda.abs()).1 * lambda
    }

    /// `da/dlambda` in 1D; zero at the degenerate point of pure p-powers.
    #[inline]
    pub fn flux_slope_1d(&self, x: f64, lambda: f64) -> f64 {
        let (_, phi, s_dphi) = self.radial(x, lambda.abs());
        phi + s_dphi
    }

    /// Spatial sample points that exercise every distinct coefficient value.
    fn probe_points(&self) -> Vec<f64> {
        match &self.kind {
            EnergyKind::Quadratic { k } => k.starts().to_vec(),
            _ => vec![0.0],
        }
    }

    fn random_gradient(&self, rng: &mut ChaCha8Rng, radius: f64) -> Vec<f64> {
        if self.dim == 1 {
            vec![if rng.gen::<bool>() { radius } else { -radius }]
        } else {
            let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            vec![radius * theta.cos(), radius * theta.sin()]
        }
    }

    /// Samples gradients on a log-radial grid (`1e-4 ..= 1e4`, plus zero) with
    /// random directions and reports the worst normalized margins of the
    /// growth sandwich, the flux growth bound and the coercivity bound.
    pub fn verify_growth(&self, sample_count: usize, seed: u64) -> Result<GrowthReport> {
        if sample_count == 0 {
            return Err(Error::Domain("sample_count must be >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = self.p();
        let (a1, a2, a3, c3) = (self.alpha1(), self.alpha2(), self.alpha3(), self.c3());
        let mut report = GrowthReport {
            samples: 0,
            lower: f64::INFINITY,
            upper: f64::INFINITY,
            flux_growth: f64::INFINITY,
            coercivity: f64::INFINITY,
            witness: vec![0.0; self.dim],
        };
        let mut worst = f64::INFINITY;
        let points = self.probe_points();
        for k in 0..sample_count {
            let radius = if k == 0 {
                0.0
            } else {
                10f64.powf(-4.0 + 8.0 * (k - 1) as f64 / (sample_count.max(2) - 1) as f64)
            };
            let lambda = self.random_gradient(&mut rng, radius);
            for &xp in &points {
                let x = [xp];
                let s = norm(&lambda);
                let j = self.value(&x, &lambda);
                let a = self.flux(&x, &lambda);
                let sp = s.powf(p);
                let lower = (j - a1 * sp) / (1.0 + j.abs() + a1 * sp);
                let upper = (a2 * (1.0 + sp) - j) / (1.0 + j.abs() + a2 * (1.0 + sp));
                let growth_rhs = c3 * (1.0 + s.powf(p - 1.0));
                let flux_growth = (growth_rhs - norm(&a)) / (1.0 + growth_rhs);
                let al = dot(&a, &lambda);
                let coercivity = (al - a1 * sp + a3) / (1.0 + al.abs() + a1 * sp);
                report.lower = report.lower.min(lower);
                report.upper = report.upper.min(upper);
                report.flux_growth = report.flux_growth.min(flux_growth);
                report.coercivity = report.coercivity.min(coercivity);
                let m = lower.min(upper).min(flux_growth).min(coercivity);
                if m < worst {
                    worst = m;
                    report.witness = lambda.clone();
                }
                report.samples += 1;
            }
        }
        Ok(report)
    }

    /// Random pairs in `[-10, 10]^dim`: monotonicity of the flux and the
    /// Lipschitz-type bound with constant [`EnergyModel::c2`].
    pub fn verify_monotone(&self, pair_count: usize, seed: u64) -> Result<MonotoneReport> {
        if pair_count == 0 {
            return Err(Error::Domain("pair_count must be >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = self.p();
        let c2 = self.c2();
        let mut report = MonotoneReport {
            pairs: 0,
            min_gap: f64::INFINITY,
            min_gap_normalized: f64::INFINITY,
            lipschitz: f64::INFINITY,
            witness: (vec![0.0; self.dim], vec![0.0; self.dim]),
        };
        let points = self.probe_points();
        for _ in 0..pair_count {
            let l1: Vec<f64> = (0..self.dim).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let l2: Vec<f64> = (0..self.dim).map(|_| rng.gen_range(-10.0..10.0)).collect();
            for &xp in &points {
                let x = [xp];
                let a1 = self.flux(&x, &l1);
                let a2 = self.flux(&x, &l2);
                let da: Vec<f64> = a1.iter().zip(&a2).map(|(u, v)| u - v).collect();
                let dl: Vec<f64> = l1.iter().zip(&l2).map(|(u, v)| u - v).collect();
                let gap = dot(&da, &dl);
                let scale = 1.0 + norm(&da) * norm(&dl);
                let bound = c2 * (1.0 + norm(&l1) + norm(&l2)).powf(p - 2.0) * norm(&dl);
                let lip = (bound - norm(&da)) / (1.0 + bound);
                if gap / scale < report.min_gap_normalized || lip < report.lipschitz {
                    report.witness = (l1.clone(), l2.clone());
                }
                report.min_gap = report.min_gap.min(gap);
                report.min_gap_normalized = report.min_gap_normalized.min(gap / scale);
                report.lipschitz = report.lipschitz.min(lip);
                report.pairs += 1;
            }
        }
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_flux(m: &EnergyModel, x: &[f64], l: &[f64]) -> Vec<f64> {
        let h = 1e-6 * (1.0 + norm(l));
        (0..l.len())
            .map(|i| {
                let mut lp = l.to_vec();
                let mut lm = l.to_vec();
                lp[i] += h;
                lm[i] -= h;
                (m.value(x, &lp) - m.value(x, &lm)) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn value_examples() {
        let m = EnergyModel::ppower(2.0, 0.5).unwrap();
        assert_eq!(m.value(&[0.0], &[2.0]), 2.0);
        let m3 = EnergyModel::ppower(3.0, 1.0).unwrap();
        assert_eq!(m3.value(&[0.0], &[0.0]), 0.0);
        // direct scalar arithmetic
        let expected = (0.01f64 + 1.0).powf(1.5) - 0.1f64.powi(3);
        let r = EnergyModel::regularized_ppower(3.0, 1.0, 0.1).unwrap();
        assert!((r.value(&[0.0], &[1.0]) - expected).abs() < 1e-15);
        assert!((expected - 1.014_037_438).abs() < 1e-9);
    }

    #[test]
    fn flux_examples() {
        let m = EnergyModel::ppower(2.0, 0.5).unwrap();
        assert_eq!(m.flux(&[0.0], &[3.0]), vec![3.0]);
        // d/dl (|l|^3 / 3) = |l| l
        let m3 = EnergyModel::ppower(3.0, 1.0 / 3.0).unwrap();
        assert!((m3.flux(&[0.0], &[2.0])[0] - 4.0).abs() < 1e-14);
        for m in [
            EnergyModel::ppower(3.0, 1.0).unwrap(),
            EnergyModel::ppower(4.0, 0.25).unwrap(),
            EnergyModel::regularized_ppower(3.0, 1.0, 0.1).unwrap(),
        ] {
            assert_eq!(m.flux(&[0.0], &[0.0]), vec![0.0]);
        }
    }

    #[test]
    fn jacobian_examples() {
        let q = EnergyModel::quadratic(CoefficientField::constant(2.0).unwrap())
            .with_dim(2)
            .unwrap();
        assert_eq!(q.flux_jacobian(&[0.3], &[1.0, -4.0]).unwrap(), vec![2.0, 0.0, 0.0, 2.0]);
        let m = EnergyModel::ppower(2.0, 0.5).unwrap();
        assert_eq!(m.flux_jacobian(&[0.0], &[-7.0]).unwrap(), vec![1.0]);
        let m3 = EnergyModel::ppower(3.0, 1.0).unwrap();
        assert!(matches!(m3.flux_jacobian(&[0.0], &[0.0]), Err(Error::Degenerate(_))));

        // finite-difference Hessian oracle at the origin, step 1e-8
        let r = EnergyModel::regularized_ppower(4.0, 0.25, 1.0).unwrap();
        let h = 1e-8;
        let fd = (r.flux(&[0.0], &[h])[0] - r.flux(&[0.0], &[-h])[0]) / (2.0 * h);
        let jac = r.flux_jacobian(&[0.0], &[0.0]).unwrap()[0];
        assert!((jac - fd).abs() < 1e-6, "jac {jac} fd {fd}");
        assert!((jac - 1.0).abs() < 1e-14);
    }

    #[test]
    fn flux_matches_finite_differences_2d() {
        let m = EnergyModel::regularized_ppower(3.5, 0.7, 0.2)
            .unwrap()
            .with_dim(2)
            .unwrap();
        for l in [[0.3, -1.2], [4.0, 2.0], [-0.01, 0.02]] {
            let a = m.flux(&[0.0], &l);
            let fd = fd_flux(&m, &[0.0], &l);
            for i in 0..2 {
                assert!((a[i] - fd[i]).abs() <= 1e-6 * (1.0 + a[i].abs()));
            }
        }
    }

    #[test]
    fn growth_reports() {
        let m = EnergyModel::ppower(2.0, 0.5).unwrap();
        assert!(m.verify_growth(1000, 1).unwrap().passed(1e-12));
        let r = EnergyModel::regularized_ppower(3.0, 1.0, 0.1).unwrap();
        assert!(r.verify_growth(1000, 2).unwrap().passed(1e-12));
        let q = EnergyModel::quadratic(CoefficientField::constant(1.0).unwrap());
        let rep = q.verify_growth(1000, 3).unwrap();
        assert!(rep.passed(1e-12));
        assert_eq!(q.alpha3(), 0.0);
        assert!(matches!(m.verify_growth(0, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn growth_detects_wrong_constant() {
        // a Quadratic with k = 1 has alpha1 = 1/2; check against a larger bound
        let q = EnergyModel::quadratic(CoefficientField::constant(1.0).unwrap());
        let rep = q.verify_growth(200, 4).unwrap();
        assert!(rep.lower >= -1e-12);
        let lambda = 3.0;
        assert!(q.value_1d(0.0, lambda) < 0.6 * lambda * lambda);
    }

    #[test]
    fn monotone_reports() {
        let q = EnergyModel::quadratic(CoefficientField::constant(3.0).unwrap());
        let rep = q.verify_monotone(500, 5).unwrap();
        assert!(rep.passed(1e-12));
        let m4 = EnergyModel::ppower(4.0, 1.0).unwrap();
        let a = m4.flux(&[0.0], &[1.7]);
        assert_eq!((a[0] - a[0]) * 0.0, 0.0);
        let m3 = EnergyModel::ppower(3.0, 1.0).unwrap().with_dim(2).unwrap();
        let rep = m3.verify_monotone(10_000, 6).unwrap();
        assert!(rep.min_gap >= 0.0 || rep.min_gap_normalized >= -1e-12);
        assert!(rep.passed(1e-12));
    }

    #[test]
    fn quadratic_monotone_gap_is_k_times_square() {
        let q = EnergyModel::quadratic(CoefficientField::constant(2.5).unwrap());
        let (l1, l2) = (1.3, -0.4);
        let gap = (q.flux_1d(0.0, l1) - q.flux_1d(0.0, l2)) * (l1 - l2);
        assert!((gap - 2.5 * (l1 - l2) * (l1 - l2)).abs() < 1e-14);
    }

    #[test]
    fn coefficient_field_lookup() {
        let k = CoefficientField::piecewise(vec![(0.0, 1.0), (0.5, 2.0)]).unwrap();
        assert_eq!(k.at(-1.0), 1.0);
        assert_eq!(k.at(0.25), 1.0);
        assert_eq!(k.at(0.5), 2.0);
        assert_eq!(k.at(0.9), 2.0);
        assert!(CoefficientField::piecewise(vec![(0.0, 0.0)]).is_err());
        assert!(CoefficientField::piecewise(vec![(0.5, 1.0), (0.1, 1.0)]).is_err());
    }

    #[test]
    fn rejects_small_exponent() {
        assert!(EnergyModel::ppower(1.5, 1.0).is_err());
        assert!(EnergyModel::regularized_ppower(3.0, 1.0, 0.0).is_err());
    }
}
