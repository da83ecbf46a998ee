// A small Monte-Carlo run of the second simulation example written as CSV,
// with per-SNR means.
//
// ```bash
// cargo run --example experiment_csv
// ```

use potdc::bench::{format_summary, run_experiment, summarize, write_csv, ExperimentConfig};

pub fn run_example() -> potdc::Result<()> {
    let cfg = ExperimentConfig::from_toml_str(
        r#"
        scenario = "example2"
        num_trials = 3
        snr_db = [-10.0, 10.0, 30.0]
        "#,
    )?;
    let out = run_experiment(&cfg)?;
    let mut csv = Vec::new();
    write_csv(&out.records, &mut csv)?;
    let text = String::from_utf8(csv).expect("CSV is UTF-8");
    for line in text.lines().take(5) {
        println!("{line}");
    }
    println!("... {} rows", out.records.len());
    print!("{}", format_summary(&summarize(&out.records)));
    Ok(())
}

#[allow(dead_code)]
fn main() -> potdc::Result<()> {
    run_example()
}
