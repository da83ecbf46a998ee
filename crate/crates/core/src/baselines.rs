//! Comparison beamformers: SMI-MVDR, the closed-form worst-case beamformer
//! built on a loaded signal covariance, and the DC iteration that linearizes
//! `‖Qw‖` directly in the weight space.

use crate::error::{Error, Result};
use crate::linalg::{
    c64, eig_hermitian, pd_cholesky, principal_gen_eig, BeamWeights, ComplexVector,
    EigenDecomposition, HermitianMatrix,
};
use crate::problem::RobustProblem;

#[derive(Debug, Clone)]
pub struct BaselineResult {
    pub w: BeamWeights,
    /// 1 for the closed forms.
    pub iterations: usize,
    /// Objective of the method's own problem: `wᴴR̂w` for SMI-MVDR,
    /// `wᴴ(R̂+γI)w` for the closed form (both at unit norm) and the robust
    /// objective for the DC iteration.
    pub objective: f64,
    pub converged: bool,
}

/// Relative diagonal load applied to a singular sample covariance.
pub const SINGULAR_LOAD: f64 = 1e-8;

/// `P{R̂⁻¹R_s}`. A singular `R̂` is loaded by `1e-8·tr(R̂)` first.
pub fn smi_mvdr(r_hat: &HermitianMatrix, r_s: &HermitianMatrix) -> Result<BaselineResult> {
    let load = if pd_cholesky(r_hat.as_matrix()).is_some()
        && eig_hermitian(r_hat).min_eigenvalue() > 0.0
    {
        0.0
    } else {
        SINGULAR_LOAD * r_hat.trace().max(f64::MIN_POSITIVE)
    };
    let a = r_hat.add_identity(load);
    let (_, w) = principal_gen_eig(&a, r_s)?;
    Ok(BaselineResult {
        objective: w.power(r_hat),
        w,
        iterations: 1,
        converged: true,
    })
}

/// `P{(R̂+γI)⁻¹(R̃_s − εI)}`, where `R̃_s − εI` may be indefinite.
pub fn shahram_closed_form(
    r_hat: &HermitianMatrix,
    gamma: f64,
    r_tilde: &HermitianMatrix,
    epsilon: f64,
) -> Result<BaselineResult> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidInput(format!(
            "closed-form beamformer needs γ > 0, got {gamma}"
        )));
    }
    let a = r_hat.add_identity(gamma);
    let (_, w) = principal_gen_eig(&a, &r_tilde.add_identity(-epsilon))?;
    Ok(BaselineResult {
        objective: w.power(&a),
        w,
        iterations: 1,
        converged: true,
    })
}

/// `min wᴴAw  s.t.  Re(bᴴw) − η‖w‖ ≥ 1` for positive definite `A` given by
/// its eigendecomposition.
///
/// The minimizer is `w ∝ (A + ρI)⁻¹b` where `ρ ≥ 0` solves the secular
/// equation `ρ‖(A + ρI)⁻¹b‖ = η`; feasible iff `‖b‖ > η`.
pub fn solve_soc_subproblem(
    a: &EigenDecomposition,
    b: &ComplexVector,
    eta: f64,
) -> Result<BeamWeights> {
    let bn = b.norm();
    if !(bn > eta) {
        return Err(Error::Infeasible(format!(
            "‖b‖ = {bn:e} does not exceed η = {eta:e}"
        )));
    }
    let d = &a.eigenvalues;
    let c: Vec<f64> = (0..d.len())
        .map(|i| a.eigenvectors.column(i).dotc(b).norm_sqr())
        .collect();
    // F(ρ) = ρ²S(ρ) − η², S(ρ) = Σ|c_i|²/(d_i+ρ)², increasing in ρ
    let eval = |rho: f64| {
        let (mut s, mut ds) = (0.0, 0.0);
        for (ci, di) in c.iter().zip(d.iter()) {
            let x = di + rho;
            s += ci / (x * x);
            ds -= 2.0 * ci / (x * x * x);
        }
        (rho * rho * s - eta * eta, 2.0 * rho * s + rho * rho * ds)
    };
    let rho = if eta == 0.0 {
        0.0
    } else {
        let dmax = a.max_eigenvalue();
        let (mut lo, mut hi) = (
            0.0,
            eta * dmax / (bn - eta) * (1.0 + 1e-12) + f64::MIN_POSITIVE,
        );
        let mut rho = 0.5 * hi;
        for _ in 0..200 {
            let (f, df) = eval(rho);
            if f > 0.0 {
                hi = rho;
            } else {
                lo = rho;
            }
            if f.abs() <= 1e-15 * eta * eta || hi - lo <= 4.0 * f64::EPSILON * hi {
                break;
            }
            let newton = rho - f / df;
            rho = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        rho
    };
    let coeffs = ComplexVector::from_iterator(
        d.len(),
        (0..d.len()).map(|i| a.eigenvectors.column(i).dotc(b) / c64(d[i] + rho, 0.0)),
    );
    let u = &a.eigenvectors * coeffs;
    let margin = b.dotc(&u).re - eta * u.norm();
    if !(margin > 0.0) {
        return Err(Error::Infeasible(format!(
            "subproblem solution has margin {margin:e}"
        )));
    }
    Ok(BeamWeights::new(u / c64(margin, 0.0)))
}

/// DC iteration: at each step the constraint `‖Qw‖ ≥ 1 + η‖w‖` is replaced
/// by its tangent `Re(b_kᴴw) ≥ 1 + η‖w‖`, `b_k = QᴴQw_k / ‖Qw_k‖`. Stops
/// when the objective decreases by at most `ζ_term` relative to the previous
/// iterate (the first comparison is against `w_init`).
pub fn dc_iteration(
    problem: &RobustProblem,
    w_init: &BeamWeights,
    zeta_term: f64,
    max_iter: usize,
) -> Result<BaselineResult> {
    if problem.margin(w_init) < 1.0 - 1e-9 {
        return Err(Error::InvalidInput(format!(
            "initial point is not feasible (margin {})",
            problem.margin(w_init)
        )));
    }
    let a = eig_hermitian(problem.loaded());
    let gram = problem.gram();
    let mut w = w_init.clone();
    let mut prev = problem.objective(&w);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let qw = (problem.q() * w.as_vector()).norm();
        let b = gram.as_matrix() * w.as_vector() / c64(qw, 0.0);
        let next = match solve_soc_subproblem(&a, &b, problem.eta()) {
            Ok(n) => n,
            Err(_) => break,
        };
        iterations += 1;
        let obj = problem.objective(&next);
        let decrease = prev - obj;
        w = next;
        prev = obj;
        if decrease <= zeta_term {
            converged = true;
            break;
        }
    }
    Ok(BaselineResult {
        objective: prev,
        w,
        iterations,
        converged,
    })
}
