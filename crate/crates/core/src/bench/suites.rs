//! Oracle suites shared by the self-test and the acceptance tests. Each suite
//! checks solver output against an independent computation over seeded
//! instances and reports its worst residual relative to the tolerance.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{run_experiment, summarize, ExperimentConfig, Method, Scenario, Summary};
use crate::error::Result;
use crate::linalg::{psd_sqrt_factor, BeamWeights};
use crate::oracle::{barrier_inner_sdp, worst_case_power_pg, worst_case_power_sampled};
use crate::potdc::{convexity_check, potdc_solve, Counterexample, PotdcOptions};
use crate::problem::RobustProblem;
use crate::random::{derive_seed, random_matrix, random_psd, random_psd_rank, random_vector, rng};
use crate::worst_case::worst_case_signal_power;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    pub cases: usize,
    pub failures: usize,
    /// Largest residual divided by its tolerance; at most 1 when passing.
    pub worst_ratio: f64,
    pub detail: String,
    pub seconds: f64,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.cases > 0
    }

    pub fn line(&self) -> String {
        format!(
            "{} {:<12} cases={:<6} failures={:<4} worst/tol={:.3e}  {} ({:.1}s)",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.cases,
            self.failures,
            self.worst_ratio,
            self.detail,
            self.seconds
        )
    }
}

/// Tracks residual/tolerance ratios of one suite.
struct Tally {
    name: &'static str,
    cases: usize,
    failures: usize,
    worst: f64,
    first_failure: Option<String>,
    start: Instant,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            cases: 0,
            failures: 0,
            worst: 0.0,
            first_failure: None,
            start: Instant::now(),
        }
    }

    fn check(&mut self, residual: f64, tol: f64, what: impl FnOnce() -> String) {
        let ratio = if residual <= 0.0 { 0.0 } else { residual / tol };
        let ratio = if ratio.is_nan() { f64::INFINITY } else { ratio };
        self.worst = self.worst.max(ratio);
        if ratio > 1.0 {
            self.failures += 1;
            self.first_failure.get_or_insert_with(what);
        }
    }

    fn fail(&mut self, what: String) {
        self.failures += 1;
        self.worst = f64::INFINITY;
        self.first_failure.get_or_insert(what);
    }

    fn finish(self, detail: String) -> SuiteResult {
        let detail = match self.first_failure {
            Some(f) => format!("{detail}; first failure: {f}"),
            None => detail,
        };
        SuiteResult {
            name: self.name.into(),
            cases: self.cases,
            failures: self.failures,
            worst_ratio: self.worst,
            detail,
            seconds: self.start.elapsed().as_secs_f64(),
        }
    }
}

/// Random feasible instance of size `m` with a signal covariance of the
/// given rank and `η = factor·√tr(R_s)`.
pub fn random_instance(seed: u64, m: usize, rank: usize, eta_factor: f64) -> Result<RobustProblem> {
    let mut r = rng(seed);
    let r_hat = random_psd(&mut r, m);
    let r_s = random_psd_rank(&mut r, m, rank);
    let q = psd_sqrt_factor(&r_s)?;
    let gamma = r.random_range(0.1..10.0);
    RobustProblem::new(&r_hat, gamma, &q, eta_factor * r_s.trace().sqrt())
}

/// Closed-form worst-case signal power against projected gradient and
/// sampling over the mismatch ball.
pub fn worst_case_power(instances: usize, samples: usize, seed: u64, tol_scale: f64) -> SuiteResult {
    let mut t = Tally::new("worst-case");
    let tol = 1e-6 * tol_scale;
    for i in 0..instances {
        let s = derive_seed(seed, 1, i as u64);
        let mut r = rng(s);
        let m = 1 + i % 8;
        let rows = r.random_range(1..=m);
        let q = random_matrix(&mut r, rows, m);
        let w = BeamWeights::new(random_vector(&mut r, m));
        let ratio = (&q * w.as_vector()).norm() / w.norm();
        // spans both branches: ‖Qw‖ above and below η‖w‖
        let eta = ratio * r.random_range(0.05..1.3);
        let cf = worst_case_signal_power(&q, &w, eta);
        let pg = worst_case_power_pg(&q, &w, eta, 4000);
        let sampled = worst_case_power_sampled(&q, &w, eta, samples, s);
        t.cases += 1;
        t.check((cf - pg).abs(), tol * (1.0 + cf.abs()), || {
            format!("instance {i}: closed form {cf:e}, gradient {pg:e}")
        });
        t.check(cf - sampled, 1e-9 * tol_scale * (1.0 + cf.abs()), || {
            format!("instance {i}: sampled {sampled:e} below closed form {cf:e}")
        });
    }
    t.finish(format!("{instances} instances, {samples} samples each"))
}

/// Dual value of `k(α)` against the barrier primal oracle, and the recovered
/// rank-one point against the constraints.
pub fn duality(instances: usize, alphas: usize, seed: u64, tol_scale: f64) -> SuiteResult {
    let mut t = Tally::new("duality");
    for i in 0..instances {
        let m = 2 + i % 7;
        let p = match random_instance(derive_seed(seed, 2, i as u64), m, 1 + i % m.min(4), 0.3) {
            Ok(p) => p,
            Err(e) => {
                t.fail(format!("instance {i}: {e}"));
                continue;
            }
        };
        let iv = p.interval();
        for j in 0..alphas {
            let alpha = iv.lower + iv.width() * (j as f64 + 0.5) / alphas as f64;
            t.cases += 1;
            let (sol, oracle) = match (
                p.eval_k(alpha),
                barrier_inner_sdp(p.loaded(), p.gram(), alpha, p.trace_bound(alpha), 1e-8),
            ) {
                (Ok(s), Ok(o)) => (s, o),
                (Err(e), _) | (_, Err(e)) => {
                    t.fail(format!("instance {i}, α = {alpha}: {e}"));
                    continue;
                }
            };
            let v = sol.dual_value;
            let what = || format!("instance {i}, α = {alpha}");
            t.check(
                (v - oracle.value).abs(),
                1e-5 * tol_scale * oracle.value.abs().max(1e-300),
                what,
            );
            t.check(
                (p.objective(&sol.w) - v).abs(),
                1e-6 * tol_scale * (1.0 + v.abs()),
                what,
            );
            let wv = sol.w.as_vector();
            t.check(
                (p.gram().quad_form(wv) - alpha).abs(),
                1e-7 * tol_scale * (1.0 + alpha),
                what,
            );
            let f = p.trace_bound(alpha);
            t.check(wv.norm_squared() - f, 1e-7 * tol_scale * (1.0 + f), what);
        }
    }
    t.finish(format!("{instances} instances x {alphas} α"))
}

/// `l(·, α_c)` majorizes `k`, touches it at `α_c` and shares its slope there.
pub fn tangency(pairs: usize, grid: usize, seed: u64, tol_scale: f64) -> SuiteResult {
    let mut t = Tally::new("tangency");
    let mut slopes = 0;
    for i in 0..pairs {
        let s = derive_seed(seed, 3, i as u64);
        let m = 2 + i % 7;
        let p = match random_instance(s, m, 1 + i % m.min(3), 0.3) {
            Ok(p) => p,
            Err(e) => {
                t.fail(format!("pair {i}: {e}"));
                continue;
            }
        };
        let iv = p.interval();
        let ac = iv.lower + iv.width() * rng(s).random_range(0.05..0.95);
        t.cases += 1;
        for g in 0..grid {
            let a = iv.lower + iv.width() * g as f64 / (grid - 1) as f64;
            let k = p.eval_k(a).map(|s| s.value);
            let l = p.eval_l(a, ac).map(|s| s.value).unwrap_or(f64::INFINITY);
            match k {
                Ok(k) => t.check(k - l, 1e-8 * tol_scale, || {
                    format!("pair {i}: l({a}) = {l} < k = {k}")
                }),
                Err(e) => t.fail(format!("pair {i}, α = {a}: {e}")),
            }
        }
        let (k0, l0) = match (p.eval_k(ac), p.eval_l(ac, ac)) {
            (Ok(k), Ok(l)) => (k, l),
            _ => {
                t.fail(format!("pair {i}: no value at α_c"));
                continue;
            }
        };
        t.check((k0.value - l0.value).abs(), 1e-8 * tol_scale, || {
            format!("pair {i}: gap at α_c")
        });
        let h = 1e-6 * iv.width();
        for dir in [1.0, -1.0] {
            let a = ac + dir * h;
            if let (Ok(k1), Ok(l1)) = (p.eval_k(a), p.eval_l(a, ac)) {
                // skip points where the active set changes
                if k1.regime != k0.regime || l1.regime != k0.regime {
                    continue;
                }
                let sk = (k1.value - k0.value) / (dir * h);
                let sl = (l1.value - l0.value) / (dir * h);
                slopes += 1;
                t.check(
                    (sk - sl).abs(),
                    1e-4 * tol_scale * sk.abs().max(sl.abs()).max(1e-12),
                    || format!("pair {i}: slopes {sk:e} vs {sl:e}"),
                );
            }
        }
    }
    t.finish(format!(
        "{pairs} pairs, {grid}-point grid, {slopes} one-sided slopes"
    ))
}

/// Per-run outcome of the descent suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescentStats {
    pub runs: usize,
    pub max_iterations: usize,
    pub unconverged: usize,
    pub increases: usize,
    /// Runs whose KKT residual exceeds `kkt_tol·(1 + objective)`.
    pub kkt_violations: usize,
    /// Largest `kkt_residual / (1 + objective)`.
    pub worst_kkt: f64,
}

/// Non-increasing objective traces, termination under the cap and KKT
/// residuals below `kkt_tol·(1 + objective)` on random feasible instances of
/// sizes 4 to 20.
pub fn descent(
    instances: usize,
    seed: u64,
    kkt_tol: f64,
    tol_scale: f64,
) -> (SuiteResult, DescentStats) {
    let mut t = Tally::new("descent");
    let mut st = DescentStats {
        runs: 0,
        max_iterations: 0,
        unconverged: 0,
        increases: 0,
        kkt_violations: 0,
        worst_kkt: 0.0,
    };
    let opts = PotdcOptions::default();
    for i in 0..instances {
        let m = 4 + i % 17;
        let p = match random_instance(derive_seed(seed, 4, i as u64), m, 1 + i % 4, 0.3) {
            Ok(p) => p,
            Err(e) => {
                t.fail(format!("instance {i}: {e}"));
                continue;
            }
        };
        t.cases += 1;
        let res = match potdc_solve(&p, &opts) {
            Ok(r) => r,
            Err(e) => {
                t.fail(format!("instance {i}: {e}"));
                continue;
            }
        };
        st.runs += 1;
        st.max_iterations = st.max_iterations.max(res.iterations());
        let mut objs = vec![res.initial_objective];
        objs.extend(res.trace.objectives());
        let rise = objs.windows(2).map(|w| w[1] - w[0]).fold(0.0f64, f64::max);
        if rise > 1e-9 {
            st.increases += 1;
        }
        t.check(rise, 1e-9 * tol_scale, || {
            format!("instance {i}: objective rises by {rise:e}")
        });
        if !res.converged {
            st.unconverged += 1;
            t.fail(format!(
                "instance {i}: no convergence in {} iterations",
                opts.max_iter
            ));
        }
        let kkt = res.kkt_residual / (1.0 + res.objective);
        st.worst_kkt = st.worst_kkt.max(kkt);
        if kkt > kkt_tol {
            st.kkt_violations += 1;
        }
        t.check(kkt, kkt_tol * tol_scale, || {
            format!("instance {i} (M = {m}): KKT residual {kkt:e}·(1+obj)")
        });
    }
    let detail = format!(
        "{instances} runs, max {} iterations, worst KKT {:.2e}·(1+obj), {} above {kkt_tol:e}",
        st.max_iterations, st.worst_kkt, st.kkt_violations
    );
    (t.finish(detail), st)
}

/// Per-SNR sandwich `lower_bound ≤ POTDC ≤ exhaustive + 1e-6` on the means
/// of a scenario run, with relative gap to the lower bound at most 1%.
pub fn sandwich(cfg: &ExperimentConfig, tol_scale: f64) -> Result<SuiteResult> {
    let cfg = ExperimentConfig {
        methods: vec![Method::Potdc, Method::Exhaustive],
        exhaustive_points: cfg.exhaustive_points.max(2),
        ..cfg.clone()
    };
    let out = run_experiment(&cfg)?;
    Ok(sandwich_rows(&cfg, &summarize(&out.records), tol_scale))
}

/// The sandwich check on summaries of a run that includes the POTDC lower
/// bound and the exhaustive method.
pub fn sandwich_rows(cfg: &ExperimentConfig, rows: &[Summary], tol_scale: f64) -> SuiteResult {
    let mut t = Tally::new("sandwich");
    let mut worst_gap = 0.0f64;
    for r in rows.iter().filter(|r| r.method == "potdc") {
        let ex = rows
            .iter()
            .find(|e| e.method == "exhaustive" && e.m == r.m && e.snr_db == r.snr_db)
            .map(|e| e.mean_objective);
        let (Some(lb), Some(ex)) = (r.mean_lower_bound, ex) else {
            t.fail(format!(
                "SNR {}: missing lower bound or exhaustive value",
                r.snr_db
            ));
            continue;
        };
        t.cases += 1;
        let obj = r.mean_objective;
        let what = || format!("SNR {} dB: lb {lb:e}, potdc {obj:e}, grid {ex:e}", r.snr_db);
        t.check(lb - obj, 1e-9 * tol_scale * obj.abs(), what);
        t.check(obj - ex, 1e-6 * tol_scale, what);
        let gap = (obj - lb) / obj.abs();
        worst_gap = worst_gap.max(gap);
        t.check(gap, 0.01 * tol_scale, what);
    }
    let name = match cfg.scenario {
        Scenario::Example2 => "example 2",
        _ => "example 1",
    };
    t.finish(format!(
        "{name}: {} trials x {} SNR, N = {}, grid {}, worst relative gap {worst_gap:.2e}",
        cfg.num_trials,
        cfg.snr_db.len(),
        cfg.lower_bound_sectors,
        cfg.exhaustive_points
    ))
}

/// Discrete convexity of `k` on random instance pairs; failures are
/// returned as counterexamples.
pub fn convexity(
    instances: usize,
    grid: usize,
    seed: u64,
    tol_scale: f64,
) -> (SuiteResult, Vec<Counterexample>) {
    let mut t = Tally::new("convexity");
    let mut found = Vec::new();
    for i in 0..instances {
        let m = 2 + i % 9;
        let p = match random_instance(derive_seed(seed, 6, i as u64), m, 1 + i % m.min(3), 0.3) {
            Ok(p) => p,
            Err(e) => {
                t.fail(format!("instance {i}: {e}"));
                continue;
            }
        };
        t.cases += 1;
        match convexity_check(&p, grid) {
            Ok(rep) => {
                let tol = rep.tolerance * tol_scale;
                let d = rep.min_second_difference;
                t.check(-d, tol.max(f64::MIN_POSITIVE), || {
                    format!(
                        "instance {i}: second difference {d:e} at α = {}",
                        rep.at_alpha
                    )
                });
                if -d > tol {
                    found.push(Counterexample::new(&p, rep, None));
                }
            }
            Err(e) => t.fail(format!("instance {i}: {e}")),
        }
    }
    (
        t.finish(format!("{instances} instances, {grid}-point grid")),
        found,
    )
}

/// KKT tolerance of the self-test. At `ζ_term = 1e-6` the residual of the
/// last iterate scales with the last step in `α`, roughly `√ζ_term`, and a
/// few percent of random instances land between `1e-5` and `3e-5`.
pub const SELFTEST_KKT_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelftestLevel {
    Quick,
    Full,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelftestReport {
    pub suites: Vec<SuiteResult>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(SuiteResult::passed)
    }
}

/// Runs every suite. `inject_fault` shrinks all tolerances to `1e-12` of
/// their value, which must make the report fail.
pub fn run_selftest(level: SelftestLevel, inject_fault: bool) -> Result<SelftestReport> {
    let s = if inject_fault { 1e-12 } else { 1.0 };
    let seed = 0x5eed;
    let (n1, samples, n2, na, n3, n4, n6, trials) = match level {
        SelftestLevel::Quick => (20, 2000, 6, 4, 8, 40, 8, 2),
        SelftestLevel::Full => (200, 20000, 60, 10, 50, 300, 50, 10),
    };
    let scenario = ExperimentConfig {
        num_trials: trials,
        snr_db: vec![-10.0, 10.0, 30.0],
        exhaustive_points: 400,
        ..ExperimentConfig::example1()
    };
    let suites = vec![
        worst_case_power(n1, samples, seed, s),
        duality(n2, na, seed, s),
        tangency(n3, 100, seed, s),
        descent(n4, seed, SELFTEST_KKT_TOL, s).0,
        sandwich(&scenario, s)?,
        convexity(n6, 200, seed, s).0,
    ];
    Ok(SelftestReport { suites })
}
