// POTDC on one Example-1 instance: iteration trace, comparison with a fine
// grid of the optimal value function, and the sector lower bound.
//
// ```bash
// cargo run --example potdc_solve
// ```

use potdc::bench::{Cell, ExperimentConfig};
use potdc::potdc::{exhaustive_search, lower_bound, potdc_solve, PotdcOptions};

pub fn run_example() -> potdc::Result<()> {
    let cfg = ExperimentConfig::example1();
    let cell = Cell::build(&cfg, 0, 4)?;
    let (_, p) = cell.instance(&cfg, 0)?;
    println!(
        "M = {}, SNR = {} dB, η = {:.4}",
        cell.m,
        cell.snr_db,
        p.eta()
    );

    let res = potdc_solve(&p, &PotdcOptions::default())?;
    println!("k(α₀) = {:.9}", res.initial_objective);
    for it in &res.trace.iterations {
        println!(
            "  {:>2}: α_c = {:>10.6} -> α = {:>10.6}  objective {:.9}",
            it.index, it.alpha_c, it.alpha_opt, it.objective
        );
    }
    println!(
        "converged = {}, KKT residual = {:.3e}",
        res.converged, res.kkt_residual
    );
    println!("margin ‖Qw‖ − η‖w‖ = {:.9}", p.margin(&res.w));

    let (alpha, grid) = exhaustive_search(&p, 2000)?;
    let lb = lower_bound(&p, 32)?;
    println!("grid minimum {grid:.9} at α = {alpha:.6}");
    println!(
        "lower bound  {lb:.9}  (gap {:.2e})",
        (res.objective - lb) / res.objective
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> potdc::Result<()> {
    run_example()
}
