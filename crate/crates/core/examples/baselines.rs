// SMI-MVDR, the closed-form worst-case beamformer and the DC iteration
// against POTDC on Example-1 trials.
//
// ```bash
// cargo run --example baselines
// ```

use potdc::array::output_sinr;
use potdc::baselines::{dc_iteration, shahram_closed_form, smi_mvdr};
use potdc::bench::{Cell, ExperimentConfig};
use potdc::potdc::{potdc_solve, PotdcOptions};

pub fn run_example() -> potdc::Result<()> {
    let cfg = ExperimentConfig::example1();
    println!(
        "{:>6} {:>10} {:>12} {:>10} {:>10} {:>8}",
        "snr", "potdc", "closed_form", "dc", "smi", "dc iters"
    );
    for si in [0, 4, 8] {
        let cell = Cell::build(&cfg, 0, si)?;
        let (r_hat, p) = cell.instance(&cfg, 0)?;
        let sinr = |w| output_sinr(w, &cell.r_s, &cell.r_in);
        let po = potdc_solve(&p, &PotdcOptions::default())?;
        let cf = shahram_closed_form(&r_hat, cfg.gamma, &cell.presumed, cell.epsilon)?;
        let dc = dc_iteration(&p, p.start(), cfg.zeta_term, cfg.dc_max_iter)?;
        let smi = smi_mvdr(&r_hat, &cell.presumed)?;
        println!(
            "{:>6.1} {:>10.4} {:>12.4} {:>10.4} {:>10.4} {:>8}",
            cell.snr_db,
            sinr(&po.w)?,
            sinr(&cf.w)?,
            sinr(&dc.w)?,
            sinr(&smi.w)?,
            dc.iterations
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> potdc::Result<()> {
    run_example()
}
