// The fixed-α inner SDP solved through its two-scalar dual, checked against
// a primal barrier method, with the rank-one weight vector read off the
// dual solution.
//
// ```bash
// cargo run --example inner_duality
// ```

use potdc::bench::suites::random_instance;
use potdc::oracle::barrier_inner_sdp;

pub fn run_example() -> potdc::Result<()> {
    let p = random_instance(11, 6, 2, 0.3)?;
    let iv = p.interval();
    println!(
        "α ∈ [{:.6}, {:.6}], λmax(A⁻¹B) = {:.6}",
        iv.lower,
        iv.upper,
        p.gen_max()
    );
    println!(
        "{:>12} {:>14} {:>14} {:>10} {:>10} {:>14}",
        "alpha", "dual", "barrier", "τ", "ψ", "regime"
    );
    for j in 0..6 {
        let alpha = iv.lower + iv.width() * (j as f64 + 0.5) / 6.0;
        let sol = p.eval_k(alpha)?;
        let bar = barrier_inner_sdp(p.loaded(), p.gram(), alpha, p.trace_bound(alpha), 1e-9)?;
        println!(
            "{alpha:>12.6} {:>14.9} {:>14.9} {:>10.4} {:>10.4} {:>14?}",
            sol.dual_value, bar.value, sol.dual.tau, sol.dual.psi, sol.regime
        );
        let w = sol.w.as_vector();
        assert!((p.gram().quad_form(w) - alpha).abs() <= 1e-7 * (1.0 + alpha));
        assert!(w.norm_squared() <= p.trace_bound(alpha) * (1.0 + 1e-7));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> potdc::Result<()> {
    run_example()
}
