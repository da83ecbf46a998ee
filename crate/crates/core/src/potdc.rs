//! The POTDC iteration, the grid benchmark, the sector lower bound and the
//! numerical convexity check of `k(α)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inner::{golden_section, DualPoint, InnerSolution, SETTINGS};
use crate::linalg::{eig_hermitian, BeamWeights, ComplexMatrix};
use crate::problem::RobustProblem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub index: usize,
    pub alpha_c: f64,
    pub alpha_opt: f64,
    /// `tr((R̂+γI)W)` of the linearized solution.
    pub objective: f64,
    pub dual: DualPoint,
    pub rank: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PotdcTrace {
    pub iterations: Vec<IterationRecord>,
}

impl PotdcTrace {
    pub fn objectives(&self) -> Vec<f64> {
        self.iterations.iter().map(|r| r.objective).collect()
    }

    /// Objective never increases by more than `slack`.
    pub fn is_nonincreasing(&self, slack: f64) -> bool {
        self.iterations
            .windows(2)
            .all(|p| p[1].objective <= p[0].objective + slack)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotdcOptions {
    /// Initial linearization point; the midpoint of `[θ₁, θ₂]` when `None`.
    pub alpha0: Option<f64>,
    pub zeta_term: f64,
    pub max_iter: usize,
}

impl Default for PotdcOptions {
    fn default() -> Self {
        Self {
            alpha0: None,
            zeta_term: 1e-6,
            max_iter: 50,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PotdcResult {
    pub w: BeamWeights,
    pub objective: f64,
    pub alpha: f64,
    /// `k(α₀)`, the objective before the first step.
    pub initial_objective: f64,
    pub trace: PotdcTrace,
    pub converged: bool,
    pub kkt_residual: f64,
}

impl PotdcResult {
    pub fn iterations(&self) -> usize {
        self.trace.iterations.len()
    }
}

/// KKT residual of the fixed-point problem
/// `min tr(AW) s.t. tr(BW) = α, tr W ≤ (√α−1)²/η², W ⪰ 0, α ∈ [θ₁, θ₂]`
/// at a rank-one point with multipliers `(τ, ψ)`, as the sum of
/// - `‖ZW‖_F = ‖Zw‖‖w‖` and `‖w‖²·max(0, −λmin(Z))` for `Z = A − τB + ψI`,
/// - `|∂L/∂α| = |τ − ψ·f'(α)|`, one-sided at the interval ends,
/// - `ψ·|tr W − f(α)|`,
/// - the primal infeasibility weighted by the multipliers.
pub fn kkt_residual(problem: &RobustProblem, w: &BeamWeights, alpha: f64, dual: &DualPoint) -> f64 {
    if !dual.tau.is_finite() {
        return f64::INFINITY;
    }
    let z = problem
        .loaded()
        .lin_comb(1.0, problem.gram(), -dual.tau)
        .add_identity(dual.psi);
    let v = w.as_vector();
    let wn2 = v.norm_squared();
    let stat_w = (z.as_matrix() * v).norm() * wn2.sqrt();
    let psd = (-eig_hermitian(&z).min_eigenvalue()).max(0.0) * wn2;
    let g = dual.tau - dual.psi * problem.trace_bound_slope(alpha);
    let iv = problem.interval();
    let g = if alpha >= iv.upper * (1.0 - 1e-12) {
        g.max(0.0)
    } else if alpha <= iv.lower * (1.0 + 1e-12) {
        (-g).max(0.0)
    } else {
        g.abs()
    };
    let f = problem.trace_bound(alpha);
    let comp = dual.psi * (wn2 - f).abs();
    let feas =
        dual.tau * (problem.gram().quad_form(v) - alpha).abs() + dual.psi * (wn2 - f).max(0.0);
    stat_w + psd + g + comp + feas
}

/// Iteratively linearizes the concave part of the trace bound around the
/// current `α` and solves the resulting convex problem, until the objective
/// decrease drops to `ζ_term`.
pub fn potdc_solve(problem: &RobustProblem, opts: &PotdcOptions) -> Result<PotdcResult> {
    let iv = problem.interval();
    let alpha0 = opts.alpha0.unwrap_or_else(|| iv.midpoint());
    if !(alpha0 >= iv.lower * (1.0 - 1e-12) && alpha0 <= iv.upper * (1.0 + 1e-12)) {
        return Err(Error::InvalidInput(format!(
            "initial α₀ = {alpha0} outside [{}, {}]",
            iv.lower, iv.upper
        )));
    }
    if !(opts.zeta_term > 0.0) || opts.max_iter == 0 {
        return Err(Error::InvalidInput(
            "ζ_term must be positive and max_iter nonzero".into(),
        ));
    }
    let alpha0 = iv.clamp(alpha0);
    let initial_objective = problem.eval_k(alpha0)?.value;

    let mut trace = PotdcTrace::default();
    let mut alpha_c = alpha0;
    let mut prev_obj = initial_objective;
    let mut converged = false;
    let mut last: Option<InnerSolution> = None;
    for i in 1..=opts.max_iter {
        let sol = problem.solve_linearized(alpha_c)?;
        if cfg!(debug_assertions) {
            check_descent_chain(problem, &sol, prev_obj);
        }
        trace.iterations.push(IterationRecord {
            index: i,
            alpha_c,
            alpha_opt: sol.alpha,
            objective: sol.value,
            dual: sol.dual,
            rank: sol.rank,
        });
        let decrease = prev_obj - sol.value;
        prev_obj = sol.value;
        alpha_c = sol.alpha;
        last = Some(sol);
        if i >= 2 && decrease <= opts.zeta_term {
            converged = true;
            break;
        }
    }
    let sol = last.expect("at least one iteration");
    let kkt = kkt_residual(problem, &sol.w, sol.alpha, &sol.dual);
    Ok(PotdcResult {
        objective: problem.objective(&sol.w),
        w: sol.w,
        alpha: sol.alpha,
        initial_objective,
        trace,
        converged,
        kkt_residual: kkt,
    })
}

/// `k(α_i) ≤ l(α_i, α_{i−1}) ≤ k(α_{i−1})`.
fn check_descent_chain(problem: &RobustProblem, sol: &InnerSolution, prev_k: f64) {
    let slack = 1e-8 * (1.0 + sol.value.abs());
    let k_new = problem
        .eval_k(sol.alpha)
        .map(|k| k.value)
        .unwrap_or(f64::NEG_INFINITY);
    assert!(
        k_new <= sol.value + slack,
        "k(α_i) = {k_new} exceeds l(α_i, α_(i-1)) = {}",
        sol.value
    );
    assert!(
        sol.value <= prev_k + slack,
        "l(α_i, α_(i-1)) = {} exceeds previous objective {prev_k}",
        sol.value
    );
}

/// `k(α)` on a uniform grid of `[θ₁, θ₂]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KGrid {
    pub alphas: Vec<f64>,
    pub values: Vec<f64>,
}

const GRID_CHUNK: usize = 64;

/// Evaluates `k` on `n` uniform points, in parallel chunks with the dual
/// search warm-started along each chunk.
pub fn sample_k(problem: &RobustProblem, n: usize) -> Result<KGrid> {
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "grid needs at least 2 points, got {n}"
        )));
    }
    let iv = problem.interval();
    let alphas: Vec<f64> = (0..n)
        .map(|i| iv.lower + iv.width() * i as f64 / (n - 1) as f64)
        .collect();
    let chunks: Vec<Result<Vec<f64>>> = alphas
        .par_chunks(GRID_CHUNK)
        .map(|chunk| {
            let mut hint = None;
            chunk
                .iter()
                .map(|&a| problem.eval_k_warm(a, &mut hint).map(|s| s.value))
                .collect()
        })
        .collect();
    let mut values = Vec::with_capacity(n);
    for c in chunks {
        values.extend(c?);
    }
    Ok(KGrid { alphas, values })
}

impl KGrid {
    /// `(argmin, min)`
    pub fn minimum(&self) -> (f64, f64) {
        self.alphas
            .iter()
            .zip(&self.values)
            .fold((f64::NAN, f64::INFINITY), |best, (&a, &v)| {
                if v < best.1 {
                    (a, v)
                } else {
                    best
                }
            })
    }
}

/// Minimum of `k` over `n` uniformly spaced points of `[θ₁, θ₂]`.
pub fn exhaustive_search(problem: &RobustProblem, n: usize) -> Result<(f64, f64)> {
    Ok(sample_k(problem, n)?.minimum())
}

/// Lower bound on the optimal value from `sectors` uniform subintervals of
/// `[θ₁, θ₂]`, each with the trace bound replaced by its chord (which lies
/// above the convex bound, so every sector problem is a convex relaxation).
pub fn lower_bound(problem: &RobustProblem, sectors: usize) -> Result<f64> {
    if sectors == 0 {
        return Err(Error::InvalidInput("need at least one sector".into()));
    }
    let iv = problem.interval();
    if iv.width() <= 0.0 {
        return Ok(problem.eval_k(iv.lower)?.value);
    }
    let bounds: Vec<Result<f64>> = (0..sectors)
        .into_par_iter()
        .map(|s| {
            let a = iv.lower + iv.width() * s as f64 / sectors as f64;
            let b = if s + 1 == sectors {
                iv.upper
            } else {
                iv.lower + iv.width() * (s + 1) as f64 / sectors as f64
            };
            sector_bound(problem, a, b)
        })
        .collect();
    let mut best = f64::INFINITY;
    for b in bounds {
        best = best.min(b?);
    }
    Ok(best)
}

fn sector_bound(problem: &RobustProblem, a: f64, b: f64) -> Result<f64> {
    let (fa, fb) = (problem.trace_bound(a), problem.trace_bound(b));
    let chord = |alpha: f64| fa + (alpha - a) * (fb - fa) / (b - a);
    let mut hint = None;
    let mut err = None;
    let tol = SETTINGS.search_tol * b.max(1.0);
    let (_, value) = golden_section(a, b, tol, |alpha| {
        match problem.solve_bounded(alpha, chord(alpha), &mut hint) {
            Ok(s) => s.dual_value.min(s.value),
            Err(e) => {
                err.get_or_insert(e);
                f64::INFINITY
            }
        }
    });
    match (value.is_finite(), err) {
        (false, Some(e)) => Err(e),
        _ => Ok(value),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    /// Smallest `k(α_{i−1}) − 2k(α_i) + k(α_{i+1})` over interior points.
    pub min_second_difference: f64,
    pub at_alpha: f64,
    /// `max |k|` over the grid.
    pub scale: f64,
    pub tolerance: f64,
    pub convex: bool,
}

/// Default relative tolerance of the convexity verdict.
pub const CONVEXITY_TOL: f64 = 1e-6;

/// Discrete second differences of sampled values.
pub fn convexity_of_values(
    alphas: &[f64],
    values: &[f64],
    rel_tol: f64,
) -> Result<ConvexityReport> {
    if values.len() < 3 || alphas.len() != values.len() {
        return Err(Error::InvalidInput(
            "convexity check needs at least 3 matching samples".into(),
        ));
    }
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let (i, d) = values
        .windows(3)
        .map(|w| w[0] - 2.0 * w[1] + w[2])
        .enumerate()
        .fold(
            (0, f64::INFINITY),
            |best, (i, d)| if d < best.1 { (i, d) } else { best },
        );
    let tolerance = rel_tol * scale;
    Ok(ConvexityReport {
        min_second_difference: d,
        at_alpha: alphas[i + 1],
        scale,
        tolerance,
        convex: d >= -tolerance,
    })
}

/// Evidence for convexity of `k` on `[θ₁, θ₂]` from `n` grid points.
pub fn convexity_check(problem: &RobustProblem, n: usize) -> Result<ConvexityReport> {
    if n < 3 {
        return Err(Error::InvalidInput(format!(
            "convexity check needs at least 3 points, got {n}"
        )));
    }
    let g = sample_k(problem, n)?;
    convexity_of_values(&g.alphas, &g.values, CONVEXITY_TOL)
}

/// Everything needed to replay a failed convexity check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Counterexample {
    pub loaded_re: Vec<Vec<f64>>,
    pub loaded_im: Vec<Vec<f64>>,
    pub q_re: Vec<Vec<f64>>,
    pub q_im: Vec<Vec<f64>>,
    pub gamma: f64,
    pub eta: f64,
    pub report: ConvexityReport,
    pub grid: Option<KGrid>,
}

fn split(m: &ComplexMatrix) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let rows = |f: fn(&num_complex::Complex64) -> f64| {
        (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect())
            .collect()
    };
    (rows(|z| z.re), rows(|z| z.im))
}

impl Counterexample {
    pub fn new(problem: &RobustProblem, report: ConvexityReport, grid: Option<KGrid>) -> Self {
        let (loaded_re, loaded_im) = split(problem.loaded().as_matrix());
        let (q_re, q_im) = split(problem.q());
        Self {
            loaded_re,
            loaded_im,
            q_re,
            q_im,
            gamma: problem.gamma(),
            eta: problem.eta(),
            report,
            grid,
        }
    }

    pub fn write_json(&self, path: &std::path::Path) -> std::io::Result<()> {
        let s = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        std::fs::write(path, s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, psd_sqrt_factor, HermitianMatrix};
    use crate::random::{random_psd, random_psd_rank, rng};

    fn instance(seed: u64, m: usize) -> RobustProblem {
        let mut r = rng(seed);
        let r_hat = random_psd(&mut r, m);
        let r_s = random_psd_rank(&mut r, m, 1 + seed as usize % m);
        let eta = 0.3 * r_s.trace().sqrt();
        let q = psd_sqrt_factor(&r_s).unwrap();
        RobustProblem::new(
            &r_hat,
            1.0,
            &q,
            eta.min(0.7 * eig_hermitian(&r_s).max_eigenvalue().sqrt()),
        )
        .unwrap()
    }

    #[test]
    fn descends_and_matches_grid() {
        for seed in 0..20 {
            let p = instance(seed, 3 + seed as usize % 6);
            let res = potdc_solve(&p, &PotdcOptions::default()).unwrap();
            assert!(res.converged);
            assert!(res.trace.is_nonincreasing(1e-9));
            assert!(res.objective <= res.initial_objective + 1e-9);
            assert!(p.margin(&res.w) >= 1.0 - 1e-6);
            let (_, grid) = exhaustive_search(&p, 400).unwrap();
            assert!(
                grid >= res.objective - 1e-5 * (1.0 + grid),
                "{grid} < {}",
                res.objective
            );
            let lb = lower_bound(&p, 16).unwrap();
            assert!(lb <= res.objective + 1e-7, "{lb} > {}", res.objective);
            assert!(
                res.kkt_residual <= 1e-4 * (1.0 + res.objective),
                "kkt {}",
                res.kkt_residual
            );
        }
    }

    #[test]
    fn scalar_problem_converges_to_lower_end() {
        // M = 1: k(α) = rα/q² increases, so the optimum is α = θ₁
        let (r, q, eta) = (2.0, 3.0, 0.5);
        let p = RobustProblem::new(
            &HermitianMatrix::from_diagonal(&[r]),
            0.0,
            &ComplexMatrix::from_element(1, 1, c64(q, 0.0)),
            eta,
        )
        .unwrap();
        let th1 = p.interval().lower;
        let res = potdc_solve(&p, &PotdcOptions::default()).unwrap();
        let exact = r * th1 / (q * q);
        assert!(
            (res.objective - exact).abs() <= 1e-5 * exact,
            "{} vs {exact}",
            res.objective
        );
    }

    #[test]
    fn grid_refinement_and_sector_tightening() {
        let p = instance(7, 5);
        let mut prev = f64::INFINITY;
        for n in [2, 3, 5, 9, 17, 33] {
            let (_, v) = exhaustive_search(&p, n).unwrap();
            assert!(v <= prev + 1e-12);
            prev = v;
        }
        let mut prev = f64::NEG_INFINITY;
        for n in [1, 2, 4, 8, 16] {
            let lb = lower_bound(&p, n).unwrap();
            assert!(lb >= prev - 1e-9, "{lb} < {prev}");
            prev = lb;
        }
    }

    #[test]
    fn convexity_checker_accepts_k_and_rejects_its_negation() {
        let p = instance(11, 6);
        let g = sample_k(&p, 200).unwrap();
        let rep = convexity_of_values(&g.alphas, &g.values, CONVEXITY_TOL).unwrap();
        assert!(rep.convex, "{rep:?}");
        let neg: Vec<f64> = g.values.iter().map(|v| -v).collect();
        assert!(
            !convexity_of_values(&g.alphas, &neg, CONVEXITY_TOL)
                .unwrap()
                .convex
        );
    }

    #[test]
    fn counterexample_round_trips() {
        let p = instance(12, 3);
        let rep = convexity_check(&p, 10).unwrap();
        let cx = Counterexample::new(&p, rep.clone(), None);
        let s = serde_json::to_string(&cx).unwrap();
        let back: Counterexample = serde_json::from_str(&s).unwrap();
        assert_eq!(back.report, rep);
        assert_eq!(back.q_re.len(), 3);
    }
}
