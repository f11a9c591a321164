// Classify one window with the crafted two-band detector.
//
// cargo run -p smartpam --example forward_pass

use smartpam::fixture::{class_windows, gen_fixture, Arch, WeightMode};
use smartpam::{model_forward, model_size_bytes, param_count, standardize_window};

pub fn run_example() -> smartpam::Result<()> {
    let model = gen_fixture(&Arch::Small, 0, WeightMode::CraftedDetector);
    let pc = param_count(&model);
    println!(
        "small model: {} conv layers, {} params ({} bytes), {}-sample window ({:.2} ms)",
        model.conv_layers.len(),
        pc.total,
        model_size_bytes(&model),
        model.window_samples,
        model.window_ms()
    );
    println!("layer output lengths: {:?}", model.layer_output_lengths()?);

    for class in ["male", "female", "chick", "noise"] {
        let raw = class_windows(&model, class, 1);
        let window = standardize_window(&raw)?;
        let c = model_forward(&window, &model)?;
        let probs: Vec<String> = c.probabilities.iter().map(|p| format!("{p:.3}")).collect();
        println!("{class:>6} window -> {:<6} [{}]", c.label, probs.join(", "));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> smartpam::Result<()> {
    run_example()
}
