// Worst-case signal power over a ball of covariance-factor mismatches, and
// the interval of the auxiliary variable `α = ‖Qw‖²`.
//
// ```bash
// cargo run --example worst_case_power
// ```

use potdc::linalg::BeamWeights;
use potdc::oracle::{worst_case_power_pg, worst_case_power_sampled};
use potdc::random::{random_matrix, random_psd, random_vector, rng};
use potdc::worst_case::{
    alpha_bounds, feasible_start, robust_margin, worst_case_delta, worst_case_signal_power,
};

pub fn run_example() -> potdc::Result<()> {
    let mut r = rng(3);
    let q = random_matrix(&mut r, 4, 6);
    let w = BeamWeights::new(random_vector(&mut r, 6));
    let eta = 0.5 * (&q * w.as_vector()).norm() / w.norm();

    let closed = worst_case_signal_power(&q, &w, eta);
    let delta = worst_case_delta(&q, &w, eta)?;
    println!("closed form         {closed:.10}");
    println!(
        "at the minimizer    {:.10}  (‖Δ‖ = {:.6}, η = {eta:.6})",
        ((&q + &delta) * w.as_vector()).norm_squared(),
        delta.norm()
    );
    println!(
        "projected gradient  {:.10}",
        worst_case_power_pg(&q, &w, eta, 4000)
    );
    println!(
        "best of 1e4 samples {:.10}",
        worst_case_power_sampled(&q, &w, eta, 10_000, 1)
    );

    let r_hat = random_psd(&mut r, 6);
    let w0 = feasible_start(&q, eta)?;
    let iv = alpha_bounds(&r_hat, 1.0, &q, eta, &w0)?;
    println!("feasible start margin {:.12}", robust_margin(&q, &w0, eta));
    println!("α ∈ [{:.6}, {:.6}]", iv.lower, iv.upper);
    Ok(())
}

#[allow(dead_code)]
fn main() -> potdc::Result<()> {
    run_example()
}
