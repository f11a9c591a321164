//! Every runnable example also runs as a test.

macro_rules! example_test {
    ($module:ident, $file:literal) => {
        mod $module {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));
        }

        #[test]
        fn $module() {
            $module::run_example().expect(concat!($file, " should run"));
        }
    };
}

example_test!(forward_pass, "forward_pass.rs");
example_test!(tile_plan, "tile_plan.rs");
example_test!(analyse_and_record, "analyse_and_record.rs");
example_test!(detection_trigger, "detection_trigger.rs");
example_test!(device_sim, "device_sim.rs");
example_test!(model_file, "model_file.rs");
