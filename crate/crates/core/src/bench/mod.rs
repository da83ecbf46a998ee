//! Monte-Carlo experiment runner for the simulation examples: scenario
//! construction, per-trial solves, CSV records and summaries.

pub mod config;
pub mod suites;
pub mod svg;

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array::{
    covariance_from_density, db_to_linear, generate_snapshots, output_sinr, sample_covariance,
    ArrayConfig, ScatteredSource,
};
use crate::baselines::{dc_iteration, shahram_closed_form, smi_mvdr};
use crate::error::{Error, Result};
use crate::linalg::{BeamWeights, HermitianMatrix};
use crate::potdc::{
    convexity_of_values, lower_bound, potdc_solve, sample_k, ConvexityReport, Counterexample,
    PotdcOptions, CONVEXITY_TOL,
};
use crate::problem::RobustProblem;
use crate::random::{derive_seed, rng};
use crate::worst_case::random_feasible_point;

pub use config::{AlphaStart, DcStart, EtaRule, ExperimentConfig, Method, Scenario};

/// One CSV row: a method on one trial of one (array size, SNR) cell.
///
/// `objective` is the value of the problem each method solves, at its
/// output: `wᴴ(R̂+γI)w` under the robust constraint for POTDC, DC and the
/// grid search, and the unit-norm quadratic forms for the closed forms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub method: String,
    #[serde(rename = "M")]
    pub m: usize,
    pub snr_db: f64,
    pub trial: usize,
    pub sinr_db: f64,
    pub objective: f64,
    pub lower_bound: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub wall_time_ms: Option<f64>,
    pub seed: u64,
}

pub const CSV_COLUMNS: [&str; 11] = [
    "method",
    "M",
    "snr_db",
    "trial",
    "sinr_db",
    "objective",
    "lower_bound",
    "iterations",
    "converged",
    "wall_time_ms",
    "seed",
];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvexityOutcome {
    pub m: usize,
    pub snr_db: f64,
    pub trial: usize,
    pub report: ConvexityReport,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<TrialRecord>,
    pub convexity: Vec<ConvexityOutcome>,
    pub counterexamples: Vec<Counterexample>,
}

/// Covariances shared by all trials of one (array size, SNR) cell.
#[derive(Debug, Clone)]
pub struct Cell {
    pub index: u64,
    pub m: usize,
    pub snr_db: f64,
    pub r_s: HermitianMatrix,
    pub r_int: HermitianMatrix,
    /// `R_int + I`
    pub r_in: HermitianMatrix,
    pub presumed: HermitianMatrix,
    pub eta: f64,
    pub epsilon: f64,
}

impl Cell {
    pub fn build(cfg: &ExperimentConfig, m_index: usize, snr_index: usize) -> Result<Self> {
        let m = cfg.array_sizes[m_index];
        let snr_db = cfg.snr_db[snr_index];
        let arr = ArrayConfig::new(m, cfg.spacing)?;
        let power = db_to_linear(snr_db);
        let cov = |density: &crate::array::AngularDensity, power: f64| {
            covariance_from_density(
                &arr,
                &ScatteredSource {
                    density: density.clone(),
                    power,
                },
                cfg.quadrature_points,
            )
        };
        let r_s = cov(&cfg.actual, power)?;
        let r_int = cov(&cfg.interference, db_to_linear(cfg.inr_db))?;
        let presumed = cov(&cfg.presumed, power)?;
        let eta = cfg.eta_factor
            * match cfg.eta_rule {
                EtaRule::Presumed => presumed.trace(),
                EtaRule::Actual => r_s.trace(),
            }
            .sqrt();
        Ok(Self {
            index: ((m_index as u64) << 32) | snr_index as u64,
            m,
            snr_db,
            r_in: r_int.add_identity(1.0),
            r_s,
            r_int,
            presumed,
            eta,
            epsilon: cfg.epsilon.unwrap_or(eta),
        })
    }

    pub fn trial_seed(&self, cfg: &ExperimentConfig, trial: usize) -> u64 {
        derive_seed(cfg.master_seed, self.index, trial as u64)
    }

    /// Sample covariance and robust problem of one trial.
    pub fn instance(
        &self,
        cfg: &ExperimentConfig,
        trial: usize,
    ) -> Result<(HermitianMatrix, RobustProblem)> {
        let x = generate_snapshots(
            &self.r_s,
            &self.r_int,
            1.0,
            cfg.snapshots,
            self.trial_seed(cfg, trial),
        )?;
        let r_hat = sample_covariance(&x)?;
        let problem = RobustProblem::from_covariance(&r_hat, cfg.gamma, &self.presumed, self.eta)?;
        Ok((r_hat, problem))
    }
}

struct TrialOutput {
    records: Vec<TrialRecord>,
    convexity: Option<(ConvexityOutcome, Option<Counterexample>)>,
}

fn timed<T>(on: bool, f: impl FnOnce() -> Result<T>) -> Result<(T, Option<f64>)> {
    let start = Instant::now();
    let v = f()?;
    Ok((v, on.then(|| start.elapsed().as_secs_f64() * 1e3)))
}

fn run_trial(cfg: &ExperimentConfig, cell: &Cell, trial: usize) -> Result<TrialOutput> {
    let seed = cell.trial_seed(cfg, trial);
    let (r_hat, problem) = cell.instance(cfg, trial)?;
    let mut starts = rng(derive_seed(seed, 1, 0));
    let record = |method: Method,
                  w: &BeamWeights,
                  objective: f64,
                  iterations: usize,
                  converged: bool,
                  t: Option<f64>| {
        Ok::<_, Error>(TrialRecord {
            method: method.name().into(),
            m: cell.m,
            snr_db: cell.snr_db,
            trial,
            sinr_db: output_sinr(w, &cell.r_s, &cell.r_in)?,
            objective,
            lower_bound: None,
            iterations,
            converged,
            wall_time_ms: t,
            seed,
        })
    };
    let mut records = Vec::new();
    let mut convexity = None;
    for &method in &cfg.methods {
        match method {
            Method::Potdc => {
                let iv = problem.interval();
                let alpha0 = match cfg.alpha_start {
                    AlphaStart::Midpoint => iv.midpoint(),
                    AlphaStart::Random => iv.lower + starts.random::<f64>() * iv.width(),
                };
                let opts = PotdcOptions {
                    alpha0: Some(alpha0),
                    zeta_term: cfg.zeta_term,
                    max_iter: cfg.max_iter,
                };
                let (res, t) = timed(cfg.timing, || potdc_solve(&problem, &opts))?;
                let mut rec = record(
                    method,
                    &res.w,
                    problem.objective(&res.w),
                    res.iterations(),
                    res.converged,
                    t,
                )?;
                if cfg.lower_bound_sectors > 0 {
                    rec.lower_bound = Some(lower_bound(&problem, cfg.lower_bound_sectors)?);
                }
                records.push(rec);
            }
            Method::ClosedForm => {
                let (res, t) = timed(cfg.timing, || {
                    shahram_closed_form(&r_hat, cfg.gamma, &cell.presumed, cell.epsilon)
                })?;
                records.push(record(method, &res.w, res.objective, 1, true, t)?);
            }
            Method::Smi => {
                let (res, t) = timed(cfg.timing, || smi_mvdr(&r_hat, &cell.presumed))?;
                records.push(record(method, &res.w, res.objective, 1, true, t)?);
            }
            Method::Dc => {
                let w_init = match cfg.dc_start {
                    DcStart::Principal => problem.start().clone(),
                    DcStart::Random => {
                        random_feasible_point(&mut starts, problem.q(), problem.eta())?
                    }
                };
                let (res, t) = timed(cfg.timing, || {
                    dc_iteration(&problem, &w_init, cfg.zeta_term, cfg.dc_max_iter)
                })?;
                records.push(record(
                    method,
                    &res.w,
                    res.objective,
                    res.iterations,
                    res.converged,
                    t,
                )?);
            }
            Method::Exhaustive => {}
        }
    }
    if cfg.exhaustive_points > 0 && (cfg.convexity || cfg.methods.contains(&Method::Exhaustive)) {
        let (grid, t) = timed(cfg.timing, || sample_k(&problem, cfg.exhaustive_points))?;
        if cfg.methods.contains(&Method::Exhaustive) {
            let (alpha, value) = grid.minimum();
            let w = problem.eval_k(alpha)?.w;
            records.push(record(
                Method::Exhaustive,
                &w,
                value,
                cfg.exhaustive_points,
                true,
                t,
            )?);
        }
        if cfg.convexity {
            let report = convexity_of_values(&grid.alphas, &grid.values, CONVEXITY_TOL)?;
            let cx =
                (!report.convex).then(|| Counterexample::new(&problem, report.clone(), Some(grid)));
            convexity = Some((
                ConvexityOutcome {
                    m: cell.m,
                    snr_db: cell.snr_db,
                    trial,
                    report,
                },
                cx,
            ));
        }
    }
    Ok(TrialOutput { records, convexity })
}

/// Runs every (array size, SNR, trial) cell of the configuration. Rows come
/// out ordered by array size, SNR, trial and method regardless of how the
/// trials were scheduled.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let mut cells = Vec::new();
    for mi in 0..cfg.array_sizes.len() {
        for si in 0..cfg.snr_db.len() {
            cells.push(Cell::build(cfg, mi, si)?);
        }
    }
    let tasks: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..cfg.num_trials).map(move |t| (c, t)))
        .collect();
    let outputs: Vec<TrialOutput> = tasks
        .par_iter()
        .map(|&(c, t)| run_trial(cfg, &cells[c], t))
        .collect::<Result<_>>()?;
    let mut out = RunOutput {
        records: Vec::new(),
        convexity: Vec::new(),
        counterexamples: Vec::new(),
    };
    for o in outputs {
        out.records.extend(o.records);
        if let Some((c, cx)) = o.convexity {
            out.convexity.push(c);
            out.counterexamples.extend(cx);
        }
    }
    Ok(out)
}

pub fn run_example1(cfg: &ExperimentConfig) -> Result<RunOutput> {
    run_experiment(&ExperimentConfig {
        scenario: Scenario::Example1,
        ..cfg.clone()
    })
}

pub fn run_example2(cfg: &ExperimentConfig) -> Result<RunOutput> {
    run_experiment(&ExperimentConfig {
        scenario: Scenario::Example2,
        ..cfg.clone()
    })
}

pub fn run_example3(cfg: &ExperimentConfig) -> Result<RunOutput> {
    run_experiment(&ExperimentConfig {
        scenario: Scenario::Example3,
        ..cfg.clone()
    })
}

pub fn write_csv<W: Write>(records: &[TrialRecord], out: W) -> Result<()> {
    let io = |e: csv::Error| Error::InvalidInput(format!("writing CSV: {e}"));
    let mut w = csv::Writer::from_writer(out);
    if records.is_empty() {
        w.write_record(CSV_COLUMNS).map_err(io)?;
    }
    for r in records {
        w.serialize(r).map_err(io)?;
    }
    w.flush()
        .map_err(|e| Error::InvalidInput(format!("writing CSV: {e}")))?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<TrialRecord>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::InvalidInput(format!("reading CSV: {e}")))
}

/// Neumaier-compensated sum.
#[derive(Debug, Clone, Copy, Default)]
struct Sum {
    s: f64,
    c: f64,
}

impl Sum {
    fn add(&mut self, x: f64) {
        let t = self.s + x;
        if !t.is_finite() {
            self.s = t;
            return;
        }
        if self.s.abs() >= x.abs() {
            self.c += (self.s - t) + x;
        } else {
            self.c += (x - t) + self.s;
        }
        self.s = t;
    }

    fn value(&self) -> f64 {
        self.s + self.c
    }
}

/// Per (method, array size, SNR) means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub method: String,
    pub m: usize,
    pub snr_db: f64,
    pub trials: usize,
    pub mean_sinr_db: f64,
    pub mean_objective: f64,
    pub mean_lower_bound: Option<f64>,
    pub mean_iterations: f64,
    pub converged_fraction: f64,
    pub mean_wall_time_ms: Option<f64>,
}

pub fn summarize(records: &[TrialRecord]) -> Vec<Summary> {
    #[derive(Default)]
    struct Acc {
        n: usize,
        sinr: Sum,
        obj: Sum,
        lb: Sum,
        lb_n: usize,
        it: Sum,
        conv: usize,
        t: Sum,
        t_n: usize,
    }
    let mut groups: BTreeMap<(String, usize, i64), (f64, Acc)> = BTreeMap::new();
    for r in records {
        // SNR keys in millidecibels keep the map ordered numerically
        let key = (r.method.clone(), r.m, (r.snr_db * 1000.0).round() as i64);
        let (_, a) = groups
            .entry(key)
            .or_insert_with(|| (r.snr_db, Acc::default()));
        a.n += 1;
        a.sinr.add(r.sinr_db);
        a.obj.add(r.objective);
        if let Some(lb) = r.lower_bound {
            a.lb.add(lb);
            a.lb_n += 1;
        }
        a.it.add(r.iterations as f64);
        a.conv += r.converged as usize;
        if let Some(t) = r.wall_time_ms {
            a.t.add(t);
            a.t_n += 1;
        }
    }
    groups
        .into_iter()
        .map(|((method, m, _), (snr_db, a))| {
            let n = a.n as f64;
            Summary {
                method,
                m,
                snr_db,
                trials: a.n,
                mean_sinr_db: a.sinr.value() / n,
                mean_objective: a.obj.value() / n,
                mean_lower_bound: (a.lb_n > 0).then(|| a.lb.value() / a.lb_n as f64),
                mean_iterations: a.it.value() / n,
                converged_fraction: a.conv as f64 / n,
                mean_wall_time_ms: (a.t_n > 0).then(|| a.t.value() / a.t_n as f64),
            }
        })
        .collect()
}

/// Fixed-width table of summaries.
pub fn format_summary(rows: &[Summary]) -> String {
    let mut s = format!(
        "{:<12} {:>3} {:>7} {:>6} {:>10} {:>12} {:>12} {:>7} {:>9}\n",
        "method",
        "M",
        "snr_db",
        "trials",
        "sinr_db",
        "objective",
        "lower_bound",
        "iters",
        "time_ms"
    );
    for r in rows {
        let lb = r
            .mean_lower_bound
            .map_or("-".to_string(), |v| format!("{v:.6e}"));
        let t = r
            .mean_wall_time_ms
            .map_or("-".to_string(), |v| format!("{v:.3}"));
        s += &format!(
            "{:<12} {:>3} {:>7.1} {:>6} {:>10.4} {:>12.6e} {:>12} {:>7.3} {:>9}\n",
            r.method,
            r.m,
            r.snr_db,
            r.trials,
            r.mean_sinr_db,
            r.mean_objective,
            lb,
            r.mean_iterations,
            t
        );
    }
    s
}

/// Process exit code of an error: 1 for configuration and I/O problems, 3
/// for solver failures.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidInput(msg) if msg.starts_with("config") || msg.starts_with("writing") => 1,
        _ => 3,
    }
}

/// Summary chart of a run: mean SINR against SNR, or mean iterations
/// against array size when the run sweeps sizes at a single SNR.
pub fn summary_chart(cfg: &ExperimentConfig, rows: &[Summary]) -> String {
    if cfg.snr_db.len() == 1 && cfg.array_sizes.len() > 1 {
        svg::line_chart(
            rows,
            "Average iterations",
            "M",
            "iterations",
            |r| r.m as f64,
            |r| r.mean_iterations,
        )
    } else {
        svg::line_chart(
            rows,
            "Output SINR",
            "SNR (dB)",
            "SINR (dB)",
            |r| r.snr_db,
            |r| r.mean_sinr_db,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig {
            num_trials: 2,
            snr_db: vec![0.0, 10.0],
            lower_bound_sectors: 4,
            exhaustive_points: 50,
            convexity: true,
            methods: vec![
                Method::Potdc,
                Method::ClosedForm,
                Method::Dc,
                Method::Smi,
                Method::Exhaustive,
            ],
            ..ExperimentConfig::example1()
        }
    }

    #[test]
    fn rows_are_complete_and_consistent() {
        let cfg = tiny();
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.records.len(), 2 * 2 * 5);
        assert_eq!(out.convexity.len(), 4);
        for r in &out.records {
            assert!(r.sinr_db.is_finite() && r.objective.is_finite(), "{r:?}");
            assert!(r.wall_time_ms.is_none());
        }
        // POTDC objective is the recomputed quadratic form
        let cell = Cell::build(&cfg, 0, 1).unwrap();
        let (_, p) = cell.instance(&cfg, 1).unwrap();
        let rec = out
            .records
            .iter()
            .find(|r| r.method == "potdc" && r.snr_db == 10.0 && r.trial == 1)
            .unwrap();
        let res = potdc_solve(&p, &PotdcOptions::default()).unwrap();
        assert!((p.objective(&res.w) - rec.objective).abs() <= 1e-7 * rec.objective);
        let lb = rec.lower_bound.unwrap();
        assert!(lb <= rec.objective * (1.0 + 1e-9));
    }

    #[test]
    fn csv_round_trip_and_header() {
        let out = run_experiment(&ExperimentConfig {
            num_trials: 1,
            snr_db: vec![5.0],
            ..tiny()
        })
        .unwrap();
        let mut buf = Vec::new();
        write_csv(&out.records, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_COLUMNS.join(","));
        assert_eq!(read_csv(&buf[..]).unwrap(), out.records);
        let mut empty = Vec::new();
        write_csv(&[], &mut empty).unwrap();
        assert_eq!(
            String::from_utf8(empty).unwrap().trim(),
            CSV_COLUMNS.join(",")
        );
    }

    #[test]
    fn summaries_group_and_average() {
        let rec = |method: &str, snr: f64, sinr: f64| TrialRecord {
            method: method.into(),
            m: 4,
            snr_db: snr,
            trial: 0,
            sinr_db: sinr,
            objective: 1.0,
            lower_bound: None,
            iterations: 2,
            converged: true,
            wall_time_ms: None,
            seed: 0,
        };
        let rows = summarize(&[
            rec("a", -5.0, 1.0),
            rec("a", -5.0, 3.0),
            rec("a", 5.0, 0.0),
            rec("b", -5.0, 7.0),
        ]);
        assert_eq!(rows.len(), 3);
        assert_eq!(
            (rows[0].snr_db, rows[0].mean_sinr_db, rows[0].trials),
            (-5.0, 2.0, 2)
        );
        assert_eq!(rows[1].snr_db, 5.0);
        assert_eq!(rows[2].method, "b");
    }

    #[test]
    fn compensated_sum_is_exact_on_cancellation() {
        let mut s = Sum::default();
        for x in [1e16, 1.0, -1e16, 1.0] {
            s.add(x);
        }
        assert_eq!(s.value(), 2.0);
    }
}
