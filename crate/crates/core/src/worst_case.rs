//! Worst-case signal power over a Frobenius ball of factor mismatches, and
//! the interval of admissible values of the auxiliary variable `α = ‖Qw‖²`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    c64, eig_hermitian, max_gen_eig, principal_of, BeamWeights, ComplexMatrix, HermitianMatrix,
};
use crate::random::random_vector;

/// Loading and mismatch parameters of the robust beamformer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustConfig {
    /// Diagonal load on the sample covariance (bound on `‖Δ₂‖`).
    pub gamma: f64,
    /// Bound on the mismatch of the signal covariance factor `Q`.
    pub eta: f64,
    /// Bound on the signal covariance mismatch used by the closed-form
    /// worst-case baseline.
    pub epsilon: f64,
    /// Termination threshold on the objective decrease.
    pub zeta_term: f64,
}

impl RobustConfig {
    pub fn validate(&self) -> Result<()> {
        let ok =
            self.gamma >= 0.0 && self.eta >= 0.0 && self.epsilon >= 0.0 && self.zeta_term > 0.0;
        if !ok
            || ![self.gamma, self.eta, self.epsilon, self.zeta_term]
                .iter()
                .all(|v| v.is_finite())
        {
            return Err(Error::InvalidInput(format!(
                "invalid robust configuration {self:?}"
            )));
        }
        Ok(())
    }
}

/// Admissible range `[θ₁, θ₂]` of `α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaInterval {
    pub lower: f64,
    pub upper: f64,
}

impl AlphaInterval {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, alpha: f64) -> bool {
        alpha >= self.lower && alpha <= self.upper
    }

    pub fn clamp(&self, alpha: f64) -> f64 {
        alpha.clamp(self.lower, self.upper)
    }
}

/// `‖Qw‖ − η‖w‖`, the left side of the robust signal-power constraint.
pub fn robust_margin(q: &ComplexMatrix, w: &BeamWeights, eta: f64) -> f64 {
    (q * w.as_vector()).norm() - eta * w.norm()
}

/// `min_{‖Δ‖≤η} ‖(Q + Δ) w‖²`: `(‖Qw‖ − η‖w‖)²` when `‖Qw‖ ≥ η‖w‖`,
/// otherwise 0 (the mismatch can cancel the signal entirely).
pub fn worst_case_signal_power(q: &ComplexMatrix, w: &BeamWeights, eta: f64) -> f64 {
    let qw = (q * w.as_vector()).norm();
    let ew = eta * w.norm();
    if qw >= ew {
        (qw - ew).powi(2)
    } else {
        0.0
    }
}

/// The minimizing mismatch: `−η Q w wᴴ / (‖Qw‖‖w‖)` on the active branch,
/// `−Q w wᴴ / ‖w‖²` otherwise.
pub fn worst_case_delta(q: &ComplexMatrix, w: &BeamWeights, eta: f64) -> Result<ComplexMatrix> {
    let wn = w.norm();
    if wn == 0.0 {
        return Err(Error::InvalidInput(
            "worst-case mismatch undefined for w = 0".into(),
        ));
    }
    let v = w.as_vector();
    let qw = q * v;
    let qwn = qw.norm();
    let outer = &qw * v.adjoint();
    if qwn >= eta * wn && qwn > 0.0 {
        Ok(outer * c64(-eta / (qwn * wn), 0.0))
    } else {
        Ok(outer * c64(-1.0 / (wn * wn), 0.0))
    }
}

/// `δ(μ) = ‖Qw‖‖w‖ / (‖w‖² + μ)`, the norm of the stationary mismatch for a
/// given multiplier.
pub fn delta_norm(q: &ComplexMatrix, w: &BeamWeights, mu: f64) -> f64 {
    let wn = w.norm();
    (q * w.as_vector()).norm() * wn / (wn * wn + mu)
}

/// Multiplier of the active norm constraint,
/// `μ₀ = (‖w‖/η)(‖Qw‖ − η‖w‖)`, defined when `‖Qw‖ > η‖w‖ > 0`.
pub fn lagrange_mu(q: &ComplexMatrix, w: &BeamWeights, eta: f64) -> Result<f64> {
    let wn = w.norm();
    let qwn = (q * w.as_vector()).norm();
    if !(eta * wn > 0.0) || !(qwn > eta * wn) {
        return Err(Error::Branch(format!(
            "need ‖Qw‖ > η‖w‖ > 0, got ‖Qw‖ = {qwn}, η‖w‖ = {}",
            eta * wn
        )));
    }
    Ok(wn / eta * (qwn - eta * wn))
}

/// Feasible point `w₀ = P{QᴴQ} / (√λmax{QᴴQ} − η)` with `‖Qw₀‖ − η‖w₀‖ = 1`.
pub fn feasible_start(q: &ComplexMatrix, eta: f64) -> Result<BeamWeights> {
    let gram = HermitianMatrix::gram(q);
    let eig = eig_hermitian(&gram);
    let lmax = eig.max_eigenvalue();
    if !(lmax > eta * eta) {
        return Err(Error::Infeasible(format!(
            "λmax(QᴴQ) = {lmax:e} does not exceed η² = {:e}",
            eta * eta
        )));
    }
    let v = principal_of(&eig);
    Ok(v.scaled(1.0 / (lmax.sqrt() - eta)))
}

/// `θ₁ = 1 / (1 − η/√λmax{QᴴQ})²` and
/// `θ₂ = λmax{(R̂+γI)⁻¹QᴴQ} · w₀ᴴ(R̂+γI)w₀`.
pub fn alpha_bounds(
    r_hat: &HermitianMatrix,
    gamma: f64,
    q: &ComplexMatrix,
    eta: f64,
    w0: &BeamWeights,
) -> Result<AlphaInterval> {
    let gram = HermitianMatrix::gram(q);
    let loaded = r_hat.add_identity(gamma);
    bounds_from_parts(
        &loaded,
        &gram,
        eta,
        w0,
        eig_hermitian(&gram).max_eigenvalue(),
    )
}

pub(crate) fn bounds_from_parts(
    loaded: &HermitianMatrix,
    gram: &HermitianMatrix,
    eta: f64,
    w0: &BeamWeights,
    gram_max: f64,
) -> Result<AlphaInterval> {
    if !(gram_max > eta * eta) {
        return Err(Error::Infeasible(format!(
            "λmax(QᴴQ) = {gram_max:e} does not exceed η² = {:e}",
            eta * eta
        )));
    }
    let lower = 1.0 / (1.0 - eta / gram_max.sqrt()).powi(2);
    let upper = max_gen_eig(loaded, gram)? * w0.power(loaded);
    // θ₂ ≥ θ₁ holds exactly; only rounding can reverse them
    Ok(AlphaInterval {
        lower,
        upper: upper.max(lower),
    })
}

/// Random feasible point: the principal direction of `QᴴQ` perturbed by a
/// random complex direction of random relative size, rescaled so that
/// `‖Qw‖ − η‖w‖ = 1`. Draws are rejected until the margin is positive.
pub fn random_feasible_point<R: Rng + ?Sized>(
    rng: &mut R,
    q: &ComplexMatrix,
    eta: f64,
) -> Result<BeamWeights> {
    let start = feasible_start(q, eta)?;
    let u = start.normalized().into_vector();
    loop {
        let z = random_vector(rng, u.len());
        let size: f64 = rng.random_range(0.0..2.0);
        let v = &u + z.normalize() * c64(size, 0.0);
        let margin = (q * &v).norm() - eta * v.norm();
        if margin > 1e-6 * v.norm() * q.norm() {
            return Ok(BeamWeights::new(v / c64(margin, 0.0)));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ComplexVector;
    use crate::random::{random_matrix, random_vector, rng};

    fn e1(n: usize) -> BeamWeights {
        let mut v = ComplexVector::zeros(n);
        v[0] = c64(1.0, 0.0);
        BeamWeights::new(v)
    }

    #[test]
    fn power_closed_form_cases() {
        let q = ComplexMatrix::identity(3, 3);
        assert!((worst_case_signal_power(&q, &e1(3), 0.5) - 0.25).abs() < 1e-15);
        let mut r = rng(1);
        let q = random_matrix(&mut r, 4, 4);
        let w = BeamWeights::new(random_vector(&mut r, 4));
        let qw = (&q * w.as_vector()).norm_squared();
        assert!((worst_case_signal_power(&q, &w, 0.0) - qw).abs() < 1e-12 * qw);
        // otherwise branch: the signal can be nulled
        let big_eta = 2.0 * (&q * w.as_vector()).norm() / w.norm();
        assert_eq!(worst_case_signal_power(&q, &w, big_eta), 0.0);
    }

    #[test]
    fn delta_attains_closed_form() {
        let mut r = rng(2);
        for i in 0..200 {
            let m = 2 + i % 6;
            let q = random_matrix(&mut r, m, m);
            let w = BeamWeights::new(random_vector(&mut r, m));
            let ratio = (&q * w.as_vector()).norm() / w.norm();
            let eta = ratio * [0.0, 0.3, 0.9, 1.5][i % 4];
            let d = worst_case_delta(&q, &w, eta).unwrap();
            let val = ((&q + &d) * w.as_vector()).norm_squared();
            let closed = worst_case_signal_power(&q, &w, eta);
            assert!(
                (val - closed).abs() <= 1e-10 * (1.0 + closed),
                "{val} vs {closed}"
            );
            if eta == 0.0 {
                assert!(d.norm() < 1e-15);
            } else if ratio >= eta {
                assert!((d.norm() - eta).abs() <= 1e-12 * eta);
            } else {
                assert!(d.norm() <= eta);
            }
        }
        assert!(worst_case_delta(
            &ComplexMatrix::identity(2, 2),
            &BeamWeights::new(ComplexVector::zeros(2)),
            0.1
        )
        .is_err());
    }

    #[test]
    fn power_scales_quadratically_and_is_continuous() {
        let mut r = rng(3);
        let q = random_matrix(&mut r, 5, 5);
        let w = BeamWeights::new(random_vector(&mut r, 5));
        for eta in [0.0, 0.1, 0.7] {
            let base = worst_case_signal_power(&q, &w, eta);
            for c in [0.2, 3.0] {
                let s = worst_case_signal_power(&q, &w.scaled(c), eta);
                assert!((s - c * c * base).abs() <= 1e-12 * (1.0 + s));
            }
        }
        let ratio = (&q * w.as_vector()).norm() / w.norm();
        let near = worst_case_signal_power(&q, &w, ratio * (1.0 - 1e-9));
        assert!(near < 1e-12 * (&q * w.as_vector()).norm_squared());
    }

    #[test]
    fn mu_identity_case_and_root() {
        let q = ComplexMatrix::identity(2, 2);
        assert!((lagrange_mu(&q, &e1(2), 0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!((delta_norm(&q, &e1(2), 0.0) - 1.0).abs() < 1e-15);
        let mut r = rng(4);
        for _ in 0..100 {
            let q = random_matrix(&mut r, 4, 4);
            let w = BeamWeights::new(random_vector(&mut r, 4));
            let eta = 0.5 * (&q * w.as_vector()).norm() / w.norm();
            let mu = lagrange_mu(&q, &w, eta).unwrap();
            assert!(mu > 0.0);
            assert!((delta_norm(&q, &w, mu) - eta).abs() <= 1e-10 * eta);
        }
        assert!(matches!(
            lagrange_mu(&q, &e1(2), 2.0),
            Err(Error::Branch(_))
        ));
        assert!(matches!(
            lagrange_mu(&q, &e1(2), 0.0),
            Err(Error::Branch(_))
        ));
    }

    #[test]
    fn feasible_start_cases() {
        let q = ComplexMatrix::identity(3, 3) * c64(2.0, 0.0);
        let w0 = feasible_start(&q, 1.0).unwrap();
        assert!((w0.norm() - 1.0).abs() < 1e-12);
        assert!((robust_margin(&q, &w0, 1.0) - 1.0).abs() < 1e-12);
        let w0 = feasible_start(&q, 0.0).unwrap();
        assert!(((&q * w0.as_vector()).norm() - 1.0).abs() < 1e-12);
        assert!(matches!(feasible_start(&q, 2.0), Err(Error::Infeasible(_))));

        let mut r = rng(5);
        for _ in 0..100 {
            let q = random_matrix(&mut r, 6, 6);
            let lmax = eig_hermitian(&HermitianMatrix::gram(&q)).max_eigenvalue();
            let eta = 0.8 * lmax.sqrt();
            let w0 = feasible_start(&q, eta).unwrap();
            assert!((robust_margin(&q, &w0, eta) - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn bounds_on_scalar_instance() {
        let q = ComplexMatrix::identity(2, 2) * c64(2.0, 0.0);
        let w0 = feasible_start(&q, 1.0).unwrap();
        let iv = alpha_bounds(&HermitianMatrix::identity(2), 0.0, &q, 1.0, &w0).unwrap();
        assert!((iv.lower - 4.0).abs() < 1e-12);
        assert!((iv.upper - 4.0).abs() < 1e-12);
        let iv = alpha_bounds(
            &HermitianMatrix::identity(2),
            0.0,
            &q,
            1e-9,
            &feasible_start(&q, 1e-9).unwrap(),
        )
        .unwrap();
        assert!((iv.lower - 1.0).abs() < 1e-8);
    }

    #[test]
    fn bounds_ordered_on_many_instances() {
        let mut r = rng(6);
        for i in 0..1000 {
            let m = 2 + i % 9;
            let q = random_matrix(&mut r, m, m);
            let r_hat = crate::random::random_psd_rank(&mut r, m, 1 + i % m);
            let lmax = eig_hermitian(&HermitianMatrix::gram(&q)).max_eigenvalue();
            let eta = lmax.sqrt() * (0.05 + 0.9 * (i % 10) as f64 / 10.0);
            let w0 = feasible_start(&q, eta).unwrap();
            let iv = alpha_bounds(&r_hat, 1.0, &q, eta, &w0).unwrap();
            assert!(iv.lower >= 1.0);
            let loaded = r_hat.add_identity(1.0);
            let raw_upper =
                max_gen_eig(&loaded, &HermitianMatrix::gram(&q)).unwrap() * w0.power(&loaded);
            assert!(
                raw_upper >= iv.lower * (1.0 - 1e-12),
                "{raw_upper} < {}",
                iv.lower
            );
        }
    }
}
