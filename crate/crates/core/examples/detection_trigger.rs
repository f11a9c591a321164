// Count positive windows over a 10-second cycle and trigger a recording
// once one class reaches 30.
//
// cargo run -p smartpam --example detection_trigger

use smartpam::fixture::{gen_fixture, pattern_stream, Arch, WeightMode};
use smartpam::{detection_cycle, DetectionConfig};

pub fn run_example() -> smartpam::Result<()> {
    let model = gen_fixture(&Arch::Small, 0, WeightMode::CraftedDetector);
    let config = DetectionConfig::default();
    println!(
        "cycle of {} s = {} windows, threshold {}, positive classes {:?}",
        config.cycle_seconds,
        config.windows_per_cycle(model.window_samples, model.sample_rate_hz),
        config.threshold,
        config.positive_classes
    );

    let scenarios: [(&str, &[(&str, usize)]); 3] = [
        ("sustained call", &[("noise", 10), ("male", 40)]),
        (
            "split calls",
            &[("male", 29), ("female", 29), ("noise", 176)],
        ),
        ("silence", &[("noise", 234)]),
    ];
    for (name, segments) in scenarios {
        let stream = pattern_stream(&model, segments);
        let o = detection_cycle(&stream, &model, None, &config)?;
        match &o.trigger_class {
            Some(class) => println!(
                "{name:>14}: trigger {class} after {} windows",
                o.windows_evaluated
            ),
            None => println!("{name:>14}: no trigger, counts {:?}", o.counts),
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> smartpam::Result<()> {
    run_example()
}
