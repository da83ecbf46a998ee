//! The fixed-α inner problems
//!
//! ```text
//! min tr(AW)  s.t.  tr(BW) = α,  tr W ≤ b,  W ⪰ 0
//! ```
//!
//! with `b = (√α − 1)²/η²` for `k(α)` and the tangent of that bound for
//! `l(α, α_c)`. They are solved through the two-scalar dual
//! `max_τ τα − b·max(0, λmax(τB − A))` and a rank-one primal is read off the
//! top eigenspace of `τB − A`.

use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    c64, eig_hermitian, fix_phase, BeamWeights, ComplexMatrix, ComplexVector, EigenDecomposition,
    HermitianMatrix,
};
use crate::problem::{top_in_span, RobustProblem, CLUSTER_TOL};

/// Numerical tolerances of the inner solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerSettings {
    /// Relative residual of the dual optimality condition `tr(BW) = α`.
    pub dual_tol: f64,
    /// Relative constraint violation accepted for a recovered primal.
    pub feasibility_tol: f64,
    /// Accepted `|primal − dual| / (1 + |primal|)`.
    pub gap_tol: f64,
    /// Residual above which rank-one recovery is declared failed.
    pub recovery_tol: f64,
    /// Relative distance of `α` to `b·λmax(B)` treated as the feasibility edge.
    pub edge_tol: f64,
    pub max_root_iter: usize,
    /// Relative width at which one-dimensional searches over α stop.
    pub search_tol: f64,
}

pub const SETTINGS: InnerSettings = InnerSettings {
    dual_tol: 1e-13,
    feasibility_tol: 1e-7,
    gap_tol: 1e-7,
    recovery_tol: 1e-6,
    edge_tol: 1e-12,
    max_root_iter: 200,
    search_tol: 1e-10,
};

static FALLBACKS: AtomicUsize = AtomicUsize::new(0);

/// Number of inner solves that needed the barrier fallback since start-up.
pub fn fallback_count() -> usize {
    FALLBACKS.load(Ordering::Relaxed)
}

/// Multipliers of the equality constraint (`τ`) and the trace bound (`ψ`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualPoint {
    pub tau: f64,
    pub psi: f64,
}

/// Which part of the dual is active at the optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DualRegime {
    /// `ψ = 0`, `τ = 1/λmax(A⁻¹B)`.
    TraceInactive,
    /// `ψ > 0` and `tr W = b`.
    TraceActive,
    /// `α = b·λmax(B)`: the feasible set is the top eigenspace of `B` and the
    /// dual supremum is approached as `τ → ∞`; the dual point is reported as
    /// infinite.
    Edge,
}

#[derive(Debug, Clone)]
pub struct InnerSolution {
    /// `wᴴAw` of the recovered primal.
    pub value: f64,
    pub dual_value: f64,
    pub alpha: f64,
    pub trace_bound: f64,
    pub w: BeamWeights,
    pub w_matrix: HermitianMatrix,
    pub dual: DualPoint,
    pub rank: usize,
    pub regime: DualRegime,
}

impl InnerSolution {
    pub fn gap(&self) -> f64 {
        (self.value - self.dual_value).abs()
    }
}

#[derive(Debug, Clone)]
struct DualState {
    dual: DualPoint,
    value: f64,
    regime: DualRegime,
    sigma: f64,
    eig: Option<EigenDecomposition>,
}

struct Slope {
    s: f64,
    ds: f64,
    eig: EigenDecomposition,
}

/// Golden-section minimization of `f` over `[lo, hi]`; the endpoints are
/// evaluated too. Returns the best point seen.
pub(crate) fn golden_section(
    lo: f64,
    hi: f64,
    tol: f64,
    mut f: impl FnMut(f64) -> f64,
) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut best = (lo, f(lo));
    if hi <= lo {
        return best;
    }
    let fh = f(hi);
    if fh < best.1 {
        best = (hi, fh);
    }
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
            if fc < best.1 {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
            if fd < best.1 {
                best = (d, fd);
            }
        }
    }
    for (x, v) in [(c, fc), (d, fd)] {
        if v < best.1 {
            best = (x, v);
        }
    }
    best
}

impl RobustProblem {
    fn shifted(&self, tau: f64) -> HermitianMatrix {
        self.gram.lin_comb(tau, &self.loaded, -1.0)
    }

    /// Slope `α − b·vᴴBv` of the dual function in `σ = 1/τ`, with `v` the top
    /// eigenvector of `τB − A`, and its derivative.
    fn slope(&self, sigma: f64, alpha: f64, b: f64) -> Slope {
        let tau = 1.0 / sigma;
        let eig = eig_hermitian(&self.shifted(tau));
        let n = eig.dim();
        let v = eig.eigenvector(n - 1);
        let bv = self.gram.as_matrix() * &v;
        let phi = v.dotc(&bv).re;
        let top = eig.eigenvalues[n - 1];
        let mut dphi = 0.0;
        for j in 0..n - 1 {
            let gap = top - eig.eigenvalues[j];
            let c = eig.eigenvectors.column(j).dotc(&bv).norm_sqr();
            if gap > 0.0 {
                dphi += 2.0 * c / gap;
            } else if c > 0.0 {
                dphi = f64::INFINITY;
            }
        }
        Slope {
            s: alpha - b * phi,
            ds: b * dphi * tau * tau,
            eig,
        }
    }

    fn dual_search(&self, alpha: f64, b: f64, hint: Option<f64>) -> Result<DualState> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "α must be positive and finite, got {alpha}"
            )));
        }
        if b.is_nan() {
            return Err(Error::InvalidInput("trace bound is NaN".into()));
        }
        if b < 0.0 {
            return Err(Error::PrimalInfeasible {
                alpha,
                reason: format!("negative trace bound {b:e}"),
            });
        }
        let tau0 = 1.0 / self.gen_max;
        let sigma_max = self.gen_max;
        if b.is_infinite() || alpha <= b * self.gen_top_gram {
            return Ok(DualState {
                dual: DualPoint {
                    tau: tau0,
                    psi: 0.0,
                },
                value: tau0 * alpha,
                regime: DualRegime::TraceInactive,
                sigma: sigma_max,
                eig: None,
            });
        }
        let cap = b * self.gram_max;
        if alpha > cap * (1.0 + SETTINGS.edge_tol) {
            return Err(Error::PrimalInfeasible {
                alpha,
                reason: format!("α exceeds b·λmax(QᴴQ) = {cap:e}"),
            });
        }
        if alpha >= cap * (1.0 - SETTINGS.edge_tol) {
            return Ok(DualState {
                dual: DualPoint {
                    tau: f64::INFINITY,
                    psi: f64::INFINITY,
                },
                value: f64::NAN,
                regime: DualRegime::Edge,
                sigma: 0.0,
                eig: None,
            });
        }

        // s(σ) is nondecreasing, negative at σ = 0 and positive at σ_max
        let (mut lo, mut hi) = (0.0, sigma_max);
        let mut sigma = hint.filter(|h| *h > lo && *h < hi).unwrap_or(0.5 * hi);
        let mut prev_abs = f64::INFINITY;
        let mut last = None;
        for it in 0..SETTINGS.max_root_iter {
            let sl = self.slope(sigma, alpha, b);
            if sl.s > 0.0 {
                hi = sigma;
            } else {
                lo = sigma;
            }
            let done =
                sl.s.abs() <= SETTINGS.dual_tol * alpha || hi - lo <= 4.0 * f64::EPSILON * hi;
            let abs = sl.s.abs();
            let newton = sigma - sl.s / sl.ds;
            let bisect = 0.5 * (lo + hi);
            last = Some((sigma, sl));
            if done {
                break;
            }
            let stalled = it > 0 && abs > 0.5 * prev_abs;
            prev_abs = abs;
            sigma = if newton.is_finite() && newton > lo && newton < hi && !stalled {
                newton
            } else {
                bisect
            };
        }
        let (sigma, sl) = last.expect("at least one iteration");
        let tau = 1.0 / sigma;
        let psi = sl.eig.max_eigenvalue().max(0.0);
        Ok(DualState {
            dual: DualPoint { tau, psi },
            value: tau * alpha - b * psi,
            regime: DualRegime::TraceActive,
            sigma,
            eig: Some(sl.eig),
        })
    }

    /// `d(α, b) = max_τ τα − b·max(0, λmax(τB − A))` and its maximizer.
    pub fn eval_dual(&self, alpha: f64, b: f64) -> Result<(f64, DualPoint)> {
        let st = self.dual_search(alpha, b, None)?;
        if st.regime == DualRegime::Edge {
            let w = self.edge_point(alpha);
            return Ok((self.objective(&w), st.dual));
        }
        Ok((st.value, st.dual))
    }

    fn edge_point(&self, alpha: f64) -> BeamWeights {
        let u = &self.gram_top;
        let y = if u.ncols() == 1 {
            u.column(0).into_owned()
        } else {
            let p = HermitianMatrix::from_raw(u.adjoint() * self.loaded.as_matrix() * u);
            let eig = eig_hermitian(&p);
            let mut y = u * eig.eigenvector(0);
            fix_phase(&mut y);
            y
        };
        BeamWeights::new(y * c64((alpha / self.gram_max).sqrt(), 0.0))
    }

    /// Rank-one `w` in the span of the orthonormal columns of `u` with
    /// `wᴴBw = α` and, when `trace_active`, `‖w‖² = b`.
    fn recover_in_span(
        &self,
        u: &ComplexMatrix,
        alpha: f64,
        b: f64,
        trace_active: bool,
    ) -> ComplexVector {
        let p = HermitianMatrix::from_raw(u.adjoint() * self.gram.as_matrix() * u);
        let eig = eig_hermitian(&p);
        let k = eig.dim();
        let mu_max = eig.max_eigenvalue();
        let mu_min = eig.min_eigenvalue();
        let y_max = eig.eigenvector(k - 1);
        let r = alpha / b;
        let y = if !trace_active || k == 1 || r >= mu_max || mu_max - mu_min <= 1e-14 * mu_max {
            y_max * c64((alpha / mu_max).sqrt(), 0.0)
        } else {
            // y_max and y_min are orthonormal and B-orthogonal within the span,
            // so the mixture hits both vᴴBv = α/b and ‖v‖ = 1
            let c1 = ((r - mu_min) / (mu_max - mu_min)).clamp(0.0, 1.0).sqrt();
            let c2 = (1.0 - c1 * c1).sqrt();
            (y_max * c64(c1, 0.0) + eig.eigenvector(0) * c64(c2, 0.0)) * c64(b.sqrt(), 0.0)
        };
        u * y
    }

    fn finish(&self, mut w: ComplexVector, alpha: f64) -> BeamWeights {
        let bw = self.gram.quad_form(&w);
        if bw > 0.0 {
            w *= c64((alpha / bw).sqrt(), 0.0);
        }
        fix_phase(&mut w);
        BeamWeights::new(w)
    }

    fn recovery_residual(&self, w: &BeamWeights, alpha: f64, b: f64, trace_active: bool) -> f64 {
        let eq = (self.gram.quad_form(w.as_vector()) - alpha).abs() / alpha;
        let t = w.norm().powi(2);
        let bound = b.max(f64::MIN_POSITIVE);
        let over = ((t - b) / bound).max(0.0);
        let slack = if trace_active && b.is_finite() {
            (t - b).abs() / bound
        } else {
            0.0
        };
        eq.max(over).max(slack)
    }

    fn recover_active(
        &self,
        eig: &EigenDecomposition,
        tau: f64,
        alpha: f64,
        b: f64,
    ) -> BeamWeights {
        let tol = CLUSTER_TOL * (self.loaded_max + tau * self.gram_max);
        let k = eig.top_multiplicity(tol);
        let u = eig.top_space(k);
        self.finish(self.recover_in_span(&u, alpha, b, true), alpha)
    }

    /// Rank-one primal `(w, wwᴴ)` from an optimal dual point.
    pub fn primal_recover(
        &self,
        dual: &DualPoint,
        alpha: f64,
        b: f64,
    ) -> Result<(BeamWeights, HermitianMatrix)> {
        let w = if dual.tau.is_infinite() {
            self.edge_point(alpha)
        } else if dual.psi <= SETTINGS.dual_tol * (self.loaded_max + dual.tau * self.gram_max) {
            let z = self.loaded.lin_comb(1.0, &self.gram, -dual.tau);
            let eig = eig_hermitian(&z);
            let tol = CLUSTER_TOL * (self.loaded_max + dual.tau * self.gram_max);
            let u = ComplexMatrix::from_columns(
                &(0..eig.bottom_multiplicity(tol))
                    .map(|j| eig.eigenvector(j))
                    .collect::<Vec<_>>(),
            );
            self.finish(self.recover_in_span(&u, alpha, b, false), alpha)
        } else {
            self.recover_active(&eig_hermitian(&self.shifted(dual.tau)), dual.tau, alpha, b)
        };
        let active = dual.psi > 0.0 && dual.tau.is_finite();
        let residual = self.recovery_residual(&w, alpha, b, active);
        if residual > SETTINGS.recovery_tol {
            return Err(Error::RecoveryFailure { residual });
        }
        let wm = Self::outer(&w);
        Ok((w, wm))
    }

    /// Solves the trace-bounded inner problem, warm-starting the dual root
    /// search from `hint` (a previous `σ = 1/τ`) and updating it.
    pub(crate) fn solve_bounded(
        &self,
        alpha: f64,
        b: f64,
        hint: &mut Option<f64>,
    ) -> Result<InnerSolution> {
        let st = self.dual_search(alpha, b, *hint)?;
        let w = match st.regime {
            DualRegime::TraceInactive => {
                let v = &self.gen_top_vec * c64((alpha / self.gen_top_gram).sqrt(), 0.0);
                self.finish(v, alpha)
            }
            DualRegime::Edge => self.edge_point(alpha),
            DualRegime::TraceActive => {
                *hint = Some(st.sigma);
                self.recover_active(
                    st.eig.as_ref().expect("eigendecomposition kept"),
                    st.dual.tau,
                    alpha,
                    b,
                )
            }
        };
        let active = st.regime == DualRegime::TraceActive;
        let residual = self.recovery_residual(&w, alpha, b, active);
        if residual > SETTINGS.recovery_tol {
            return self.fallback(alpha, b, st, residual);
        }
        let value = self.objective(&w);
        let dual_value = if st.regime == DualRegime::Edge {
            value
        } else {
            st.value
        };
        Ok(InnerSolution {
            value,
            dual_value,
            alpha,
            trace_bound: b,
            w_matrix: Self::outer(&w),
            w,
            dual: st.dual,
            rank: 1,
            regime: st.regime,
        })
    }

    /// Direct primal solve when the eigenspace recovery misses the
    /// constraints, followed by rank reduction over the range of the result.
    fn fallback(&self, alpha: f64, b: f64, st: DualState, residual: f64) -> Result<InnerSolution> {
        FALLBACKS.fetch_add(1, Ordering::Relaxed);
        let sol = crate::oracle::barrier_inner_sdp(&self.loaded, &self.gram, alpha, b, 1e-10)
            .map_err(|_| Error::RecoveryFailure { residual })?;
        let eig = eig_hermitian(&sol.w_matrix);
        let lmax = eig.max_eigenvalue();
        let rank = eig.eigenvalues.iter().filter(|&&l| l > 1e-6 * lmax).count();
        let u = eig.top_space(rank.max(1));
        let active = (sol.w_matrix.trace() - b).abs() <= 1e-6 * b;
        let w = self.finish(self.recover_in_span(&u, alpha, b, active), alpha);
        let r = self.recovery_residual(&w, alpha, b, active);
        if r > SETTINGS.recovery_tol {
            return Err(Error::RecoveryFailure { residual: r });
        }
        let value = self.objective(&w);
        Ok(InnerSolution {
            value,
            dual_value: st.value,
            alpha,
            trace_bound: b,
            w_matrix: Self::outer(&w),
            w,
            dual: st.dual,
            rank: 1,
            regime: st.regime,
        })
    }

    /// `k(α)` with its rank-one minimizer.
    pub fn eval_k(&self, alpha: f64) -> Result<InnerSolution> {
        self.eval_k_warm(alpha, &mut None)
    }

    pub(crate) fn eval_k_warm(&self, alpha: f64, hint: &mut Option<f64>) -> Result<InnerSolution> {
        if !(alpha >= 1.0) {
            return Err(Error::PrimalInfeasible {
                alpha,
                reason: "α < 1".into(),
            });
        }
        self.solve_bounded(alpha, self.trace_bound(alpha), hint)
    }

    /// `l(α, α_c)`, the inner value under the tangent trace bound.
    pub fn eval_l(&self, alpha: f64, alpha_c: f64) -> Result<InnerSolution> {
        self.eval_l_warm(alpha, alpha_c, &mut None)
    }

    pub(crate) fn eval_l_warm(
        &self,
        alpha: f64,
        alpha_c: f64,
        hint: &mut Option<f64>,
    ) -> Result<InnerSolution> {
        if !(alpha_c >= 1.0) {
            return Err(Error::InvalidInput(format!(
                "linearization point must be ≥ 1, got {alpha_c}"
            )));
        }
        self.solve_bounded(alpha, self.linearized_bound(alpha, alpha_c), hint)
    }

    /// `min_α l(α, α_c)` over `[θ₁, θ₂]`.
    ///
    /// Eliminating `α = tr(BW)` turns the linearized problem into
    /// `min tr(AW) s.t. tr(CW) ≥ √α_c − 1` with
    /// `C = (1 − 1/√α_c)B − η²I`, whose solution is the top generalized
    /// eigenvector of `(C, A)`. If that solution has `α > θ₂` the minimum over
    /// the interval sits at `θ₂` by convexity of `l(·, α_c)`.
    pub fn solve_linearized(&self, alpha_c: f64) -> Result<InnerSolution> {
        if !(alpha_c > 1.0 && alpha_c.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "linearization point must exceed 1, got {alpha_c}"
            )));
        }
        let sc = alpha_c.sqrt();
        let c0 = sc - 1.0;
        let slope = 1.0 - 1.0 / sc;
        let eta2 = self.eta * self.eta;
        let m = self.white_gram.lin_comb(slope, &self.white_ident, -eta2);
        let eig = eig_hermitian(&m);
        let lambda = eig.max_eigenvalue();
        if !(lambda > 0.0) {
            return Err(Error::Infeasible(format!(
                "linearized problem at α_c = {alpha_c} has no feasible point"
            )));
        }
        let u = crate::linalg::principal_of(&eig);
        let x = self.whitener.unwhiten(u.as_vector());
        // xᴴAx = 1 and xᴴCx = λ
        let mut w = x * c64((c0 / lambda).sqrt(), 0.0);
        fix_phase(&mut w);
        let w = BeamWeights::new(w);
        let alpha = self.gram.quad_form(w.as_vector());
        if alpha > self.interval.upper * (1.0 + 1e-12) {
            return self.eval_l(self.interval.upper, alpha_c);
        }
        let mu = 1.0 / lambda;
        let value = self.objective(&w);
        Ok(InnerSolution {
            value,
            dual_value: c0 * mu,
            alpha,
            trace_bound: self.linearized_bound(alpha, alpha_c),
            w_matrix: Self::outer(&w),
            w,
            dual: DualPoint {
                tau: mu * slope,
                psi: mu * eta2,
            },
            rank: 1,
            regime: DualRegime::TraceActive,
        })
    }

    /// [`RobustProblem::solve_linearized`] by golden-section search of
    /// `l(·, α_c)` over the part of `[θ₁, θ₂]` where it is finite.
    pub fn solve_linearized_by_search(&self, alpha_c: f64) -> Result<InnerSolution> {
        if !(alpha_c > 1.0 && alpha_c.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "linearization point must exceed 1, got {alpha_c}"
            )));
        }
        let sc = alpha_c.sqrt();
        let eta2 = self.eta * self.eta;
        // b(α)·λmax(B) ≥ α  ⇔  α·κ ≥ (√α_c − 1)λmax(B)/η²
        let kappa = (1.0 - 1.0 / sc) * self.gram_max / eta2 - 1.0;
        if !(kappa > 0.0) {
            return Err(Error::Infeasible(format!(
                "linearized problem at α_c = {alpha_c} has no feasible point"
            )));
        }
        let alpha_min = (sc - 1.0) * self.gram_max / (eta2 * kappa);
        let lo = self.interval.lower.max(alpha_min * (1.0 + 1e-13));
        let hi = self.interval.upper;
        if lo > hi {
            return Err(Error::Infeasible(format!(
                "linearized problem at α_c = {alpha_c} is infeasible on [θ₁, θ₂]"
            )));
        }
        let mut hint = None;
        let tol = SETTINGS.search_tol * hi.max(1.0);
        let (alpha, _) = golden_section(lo, hi, tol, |a| {
            self.eval_l_warm(a, alpha_c, &mut hint)
                .map(|s| s.value)
                .unwrap_or(f64::INFINITY)
        });
        self.eval_l(alpha, alpha_c)
    }

    /// Top eigenvector of `B` restricted to the top generalized eigenspace,
    /// with its Rayleigh quotient. Exposed for diagnostics.
    pub fn trace_free_direction(&self) -> (f64, ComplexVector) {
        top_in_span(&self.gram, &self.gen_top)
    }
}
