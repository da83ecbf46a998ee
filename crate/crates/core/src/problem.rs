//! A robust beamforming instance with the spectral data every solver needs
//! precomputed once.

use crate::error::{Error, Result};
use crate::linalg::{
    check_same_dim, eig_hermitian, principal_of, psd_sqrt_factor, BeamWeights, ComplexMatrix,
    HermitianMatrix, Whitener,
};
use crate::worst_case::{bounds_from_parts, robust_margin, AlphaInterval};

/// Relative tolerance for grouping eigenvalues into one eigenspace.
pub(crate) const CLUSTER_TOL: f64 = 1e-10;

/// `min wᴴ(R̂+γI)w  s.t.  ‖Qw‖ − η‖w‖ ≥ 1`, with `A = R̂+γI`, `B = QᴴQ`.
#[derive(Debug, Clone)]
pub struct RobustProblem {
    pub(crate) loaded: HermitianMatrix,
    pub(crate) gram: HermitianMatrix,
    pub(crate) q: ComplexMatrix,
    pub(crate) gamma: f64,
    pub(crate) eta: f64,
    pub(crate) loaded_max: f64,
    pub(crate) gram_max: f64,
    /// Orthonormal basis of the top eigenspace of `B`.
    pub(crate) gram_top: ComplexMatrix,
    /// `λmax(A⁻¹B)`
    pub(crate) gen_max: f64,
    /// Orthonormal basis of the null space of `A − B/λmax(A⁻¹B)`.
    pub(crate) gen_top: ComplexMatrix,
    /// `max vᴴBv` over unit `v` in `gen_top`, and its maximizer.
    pub(crate) gen_top_gram: f64,
    pub(crate) gen_top_vec: crate::linalg::ComplexVector,
    pub(crate) w0: BeamWeights,
    pub(crate) interval: AlphaInterval,
    pub(crate) whitener: Whitener,
    /// `L⁻¹BL⁻ᴴ` and `L⁻¹L⁻ᴴ` for `A = LLᴴ`.
    pub(crate) white_gram: HermitianMatrix,
    pub(crate) white_ident: HermitianMatrix,
}

fn orthonormalize(m: ComplexMatrix) -> ComplexMatrix {
    let k = m.ncols();
    m.qr().q().columns(0, k).into_owned()
}

/// Top eigenpair of `UᴴMU` lifted back through `U`.
pub(crate) fn top_in_span(
    m: &HermitianMatrix,
    u: &ComplexMatrix,
) -> (f64, crate::linalg::ComplexVector) {
    if u.ncols() == 1 {
        let v = u.column(0).into_owned();
        return (m.quad_form(&v), v);
    }
    let p = HermitianMatrix::from_raw(u.adjoint() * m.as_matrix() * u);
    let eig = eig_hermitian(&p);
    let y = principal_of(&eig);
    (eig.max_eigenvalue(), u * y.as_vector())
}

impl RobustProblem {
    /// Builds the instance from the sample covariance, the loading `γ`, the
    /// factor `Q` of the presumed signal covariance and the mismatch bound
    /// `η > 0`.
    pub fn new(r_hat: &HermitianMatrix, gamma: f64, q: &ComplexMatrix, eta: f64) -> Result<Self> {
        if q.ncols() != r_hat.dim() {
            return Err(Error::InvalidInput(format!(
                "Q has {} columns, expected {}",
                q.ncols(),
                r_hat.dim()
            )));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "mismatch bound η must be positive, got {eta}"
            )));
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "loading γ must be nonnegative, got {gamma}"
            )));
        }
        let loaded = r_hat.add_identity(gamma);
        let gram = HermitianMatrix::gram(q);
        check_same_dim(&loaded, &gram)?;

        let a_eig = eig_hermitian(&loaded);
        let loaded_max = a_eig.max_eigenvalue();
        if !(a_eig.min_eigenvalue() > 0.0) {
            return Err(Error::InvalidInput(
                "R̂ + γI is not positive definite".into(),
            ));
        }
        let b_eig = eig_hermitian(&gram);
        let gram_max = b_eig.max_eigenvalue();
        if !(gram_max > eta * eta) {
            return Err(Error::Infeasible(format!(
                "λmax(QᴴQ) = {gram_max:e} does not exceed η² = {:e}",
                eta * eta
            )));
        }
        let gram_top = b_eig.top_space(b_eig.top_multiplicity(CLUSTER_TOL * gram_max));

        let wh = Whitener::new(&loaded)?;
        let white_gram = wh.congruence(&gram);
        let white_ident = wh.congruence(&HermitianMatrix::identity(gram.dim()));
        let c_eig = eig_hermitian(&white_gram);
        let gen_max = c_eig.max_eigenvalue();
        let k = c_eig.top_multiplicity(CLUSTER_TOL * gen_max);
        let top = c_eig.top_space(k);
        let lifted = ComplexMatrix::from_columns(
            &(0..k)
                .map(|j| wh.unwhiten(&top.column(j).into_owned()))
                .collect::<Vec<_>>(),
        );
        let gen_top = orthonormalize(lifted);
        let (gen_top_gram, gen_top_vec) = top_in_span(&gram, &gen_top);

        let u = principal_of(&b_eig);
        let w0 = u.scaled(1.0 / (gram_max.sqrt() - eta));
        let interval = bounds_from_parts(&loaded, &gram, eta, &w0, gram_max)?;
        Ok(Self {
            loaded,
            gram,
            q: q.clone(),
            gamma,
            eta,
            loaded_max,
            gram_max,
            gram_top,
            gen_max,
            gen_top,
            gen_top_gram,
            gen_top_vec,
            w0,
            interval,
            whitener: wh,
            white_gram,
            white_ident,
        })
    }

    /// Same as [`RobustProblem::new`] with `Q` taken as the PSD square-root
    /// factor of the presumed signal covariance.
    pub fn from_covariance(
        r_hat: &HermitianMatrix,
        gamma: f64,
        r_s: &HermitianMatrix,
        eta: f64,
    ) -> Result<Self> {
        Self::new(r_hat, gamma, &psd_sqrt_factor(r_s)?, eta)
    }

    pub fn dim(&self) -> usize {
        self.loaded.dim()
    }

    /// `A = R̂ + γI`
    pub fn loaded(&self) -> &HermitianMatrix {
        &self.loaded
    }

    /// `B = QᴴQ`
    pub fn gram(&self) -> &HermitianMatrix {
        &self.gram
    }

    pub fn q(&self) -> &ComplexMatrix {
        &self.q
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// `λmax(QᴴQ)`
    pub fn gram_max(&self) -> f64 {
        self.gram_max
    }

    /// `λmax((R̂+γI)⁻¹QᴴQ)`
    pub fn gen_max(&self) -> f64 {
        self.gen_max
    }

    /// The feasible start `w₀` used for the upper end of the interval.
    pub fn start(&self) -> &BeamWeights {
        &self.w0
    }

    /// `[θ₁, θ₂]`
    pub fn interval(&self) -> AlphaInterval {
        self.interval
    }

    /// Scale of objective values, used for relative tolerances.
    pub fn scale(&self) -> f64 {
        self.loaded_max
    }

    /// `wᴴ(R̂+γI)w`
    pub fn objective(&self, w: &BeamWeights) -> f64 {
        w.power(&self.loaded)
    }

    /// `‖Qw‖ − η‖w‖`
    pub fn margin(&self, w: &BeamWeights) -> f64 {
        robust_margin(&self.q, w, self.eta)
    }

    /// `(√α − 1)² / η²`, the trace bound of the inner problem at `α`.
    pub fn trace_bound(&self, alpha: f64) -> f64 {
        (alpha.sqrt() - 1.0).powi(2) / (self.eta * self.eta)
    }

    /// Derivative of [`RobustProblem::trace_bound`].
    pub fn trace_bound_slope(&self, alpha: f64) -> f64 {
        (alpha.sqrt() - 1.0) / (self.eta * self.eta * alpha.sqrt())
    }

    /// Tangent of the trace bound at `α_c`, evaluated at `α`:
    /// `[(1 − 1/√α_c)·α − (√α_c − 1)] / η²`.
    pub fn linearized_bound(&self, alpha: f64, alpha_c: f64) -> f64 {
        let sc = alpha_c.sqrt();
        ((1.0 - 1.0 / sc) * alpha - (sc - 1.0)) / (self.eta * self.eta)
    }

    /// Objective of the direction `v` once scaled to the boundary of the
    /// robust constraint, `vᴴAv / (‖Qv‖ − η‖v‖)²`; infinite when no scaling
    /// of `v` is feasible.
    pub fn scaled_objective(&self, v: &BeamWeights) -> f64 {
        let m = self.margin(v);
        if m > 0.0 {
            self.objective(v) / (m * m)
        } else {
            f64::INFINITY
        }
    }

    /// `v` scaled to satisfy the robust constraint with equality.
    pub fn scale_to_feasible(&self, v: &BeamWeights) -> Option<BeamWeights> {
        let m = self.margin(v);
        (m > 0.0).then(|| v.scaled(1.0 / m))
    }

    pub(crate) fn outer(w: &BeamWeights) -> HermitianMatrix {
        HermitianMatrix::outer(w.as_vector())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, max_gen_eig};
    use crate::random::{random_matrix, random_psd, rng};

    #[test]
    fn precomputed_spectra_match_direct_computation() {
        let mut r = rng(5);
        for m in 2..8 {
            let r_hat = random_psd(&mut r, m);
            let q = random_matrix(&mut r, m, m);
            let p = RobustProblem::new(&r_hat, 1.0, &q, 0.2).unwrap();
            let direct = max_gen_eig(&r_hat.add_identity(1.0), &HermitianMatrix::gram(&q)).unwrap();
            assert!((p.gen_max() - direct).abs() < 1e-10 * direct);
            // top generalized vector lies in the null space of A − B/λ
            let v = &p.gen_top_vec;
            let z = p.loaded.as_matrix() - p.gram.as_matrix() / c64(p.gen_max, 0.0);
            assert!((z * v).norm() < 1e-9 * p.scale());
            assert!((p.margin(&p.w0) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let r_hat = HermitianMatrix::identity(2);
        let q = ComplexMatrix::identity(2, 2);
        assert!(matches!(
            RobustProblem::new(&r_hat, 0.0, &q, 0.0),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            RobustProblem::new(&r_hat, 0.0, &q, 1.0),
            Err(Error::Infeasible(_))
        ));
        assert!(matches!(
            RobustProblem::new(&r_hat, -1.0, &q, 0.5),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            RobustProblem::new(&HermitianMatrix::zeros(2), 0.0, &q, 0.5),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn linearized_bound_is_tangent_from_below() {
        let p = RobustProblem::new(
            &HermitianMatrix::identity(1),
            0.0,
            &ComplexMatrix::identity(1, 1),
            0.5,
        )
        .unwrap();
        for i in 0..50 {
            let ac = 1.0 + 0.3 * i as f64;
            assert!(
                (p.linearized_bound(ac, ac) - p.trace_bound(ac)).abs()
                    < 1e-12 * (1.0 + p.trace_bound(ac))
            );
            for j in 0..200 {
                let a = 1.0 + 0.1 * j as f64;
                assert!(p.linearized_bound(a, ac) <= p.trace_bound(a) + 1e-12);
            }
        }
    }
}
