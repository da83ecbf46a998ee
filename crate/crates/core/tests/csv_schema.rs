use potdc::bench::{read_csv, run_experiment, write_csv, ExperimentConfig, CSV_COLUMNS};

fn small() -> ExperimentConfig {
    ExperimentConfig::from_toml_str(
        r#"
        scenario = "example1"
        num_trials = 2
        array_sizes = [6, 8]
        snr_db = [0.0, 20.0]
        methods = ["potdc", "closed_form", "dc", "smi", "exhaustive"]
        exhaustive_points = 50
        "#,
    )
    .unwrap()
}

#[test]
fn header_and_column_order() {
    assert_eq!(
        CSV_COLUMNS,
        [
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
            "seed"
        ]
    );
    let out = run_experiment(&small()).unwrap();
    let mut buf = Vec::new();
    write_csv(&out.records, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2 * 2 * 2 * 5);
    for r in &rows {
        assert_eq!(r.len(), CSV_COLUMNS.len());
        assert!(["potdc", "closed_form", "dc", "smi", "exhaustive"].contains(&r[0]));
        assert!(r[4].parse::<f64>().unwrap().is_finite());
        assert_eq!(
            r[6].is_empty(),
            r[0] != "potdc",
            "lower bound only on POTDC rows"
        );
        assert!(r[9].is_empty(), "no wall time without timing");
        r[10].parse::<u64>().unwrap();
    }
}

#[test]
fn round_trip_and_determinism() {
    let cfg = small();
    let a = run_experiment(&cfg).unwrap().records;
    let b = run_experiment(&cfg).unwrap().records;
    let (mut x, mut y) = (Vec::new(), Vec::new());
    write_csv(&a, &mut x).unwrap();
    write_csv(&b, &mut y).unwrap();
    assert_eq!(x, y);
    let back = read_csv(x.as_slice()).unwrap();
    assert_eq!(back.len(), a.len());
    let mut z = Vec::new();
    write_csv(&back, &mut z).unwrap();
    assert_eq!(x, z);

    let other = run_experiment(&ExperimentConfig {
        master_seed: 1,
        ..cfg.clone()
    })
    .unwrap()
    .records;
    assert_ne!(other[0].seed, a[0].seed);
}

#[test]
fn exhaustive_row_is_no_better_than_potdc() {
    let out = run_experiment(&small()).unwrap();
    for p in out.records.iter().filter(|r| r.method == "potdc") {
        let e = out
            .records
            .iter()
            .find(|r| {
                r.method == "exhaustive" && r.m == p.m && r.snr_db == p.snr_db && r.trial == p.trial
            })
            .unwrap();
        assert!(
            p.objective <= e.objective * (1.0 + 1e-6),
            "{} vs {}",
            p.objective,
            e.objective
        );
        assert!(p.lower_bound.unwrap() <= p.objective * (1.0 + 1e-9));
    }
}

#[test]
fn shipped_configs_parse() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        ExperimentConfig::from_file(&path, None).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}
