// Numerical evidence that the optimal value function `k(α)` is convex:
// discrete second differences on random instances. A failing instance is
// written out as a JSON counterexample.
//
// ```bash
// cargo run --example convexity_evidence
// ```

use potdc::bench::suites::random_instance;
use potdc::potdc::{convexity_check, convexity_of_values, Counterexample, CONVEXITY_TOL};

pub fn run_example() -> potdc::Result<()> {
    for seed in 0..5 {
        let p = random_instance(seed, 4 + seed as usize, 2, 0.3)?;
        let rep = convexity_check(&p, 300)?;
        println!(
            "instance {seed}: min second difference {:+.3e} (tolerance {:.3e}) convex = {}",
            rep.min_second_difference, rep.tolerance, rep.convex
        );
        if !rep.convex {
            let path = std::env::temp_dir().join(format!("counterexample_{seed}.json"));
            Counterexample::new(&p, rep, None)
                .write_json(&path)
                .map_err(|e| potdc::Error::InvalidInput(e.to_string()))?;
            println!("  written to {}", path.display());
        }
    }
    // a concave sequence is rejected
    let alphas: Vec<f64> = (0..50).map(|i| 1.0 + i as f64 / 10.0).collect();
    let concave: Vec<f64> = alphas.iter().map(|a| -a * a).collect();
    println!(
        "-α² convex = {}",
        convexity_of_values(&alphas, &concave, CONVEXITY_TOL)?.convex
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> potdc::Result<()> {
    run_example()
}
