//! Every runnable example executes end to end.

macro_rules! example {
    ($name:ident) => {
        #[allow(dead_code)]
        mod $name {
            include!(concat!(
                env!("CARGO_MANIFEST_DIR"),
                "/examples/",
                stringify!($name),
                ".rs"
            ));
        }

        #[test]
        fn $name() {
            $name::run_example().unwrap();
        }
    };
}

example!(scattered_source);
example!(hermitian_eig);
example!(worst_case_power);
example!(inner_duality);
example!(potdc_solve);
example!(baselines);
example!(convexity_evidence);
example!(experiment_csv);
