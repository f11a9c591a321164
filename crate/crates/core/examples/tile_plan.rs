// Split the small model into output slices, compare activation peaks, and
// check that the tiled result is bit-identical to the monolithic one.
//
// cargo run -p smartpam --example tile_plan

use smartpam::fixture::{gen_fixture, Arch, WeightMode};
use smartpam::tiler::smallest_slice_count_within;
use smartpam::{make_tile_plan, model_forward, peak_activation_bytes, tiled_forward, PlanarTensor};

pub fn run_example() -> smartpam::Result<()> {
    let model = gen_fixture(&Arch::Small, 7, WeightMode::RandomUniform);
    let plan = make_tile_plan(&model, 5)?;
    println!(
        "{} slices over final length {}",
        plan.n_slices, plan.final_length
    );
    for (i, s) in plan.slices.iter().enumerate() {
        println!(
            "  slice {i}: outputs {} need inputs {}",
            s.out_range, s.in_range
        );
    }

    let untiled = peak_activation_bytes(&model, None)?;
    let tiled = peak_activation_bytes(&model, Some(&plan))?;
    println!(
        "peak activations: untiled {} B, tiled {} B ({:.2}x smaller)",
        untiled.peak_bytes,
        tiled.peak_bytes,
        untiled.peak_bytes as f64 / tiled.peak_bytes as f64
    );
    if let Some((fit, report)) = smallest_slice_count_within(&model, 10_000)? {
        println!(
            "fewest slices within 10 kB: {} ({} B)",
            fit.n_slices, report.peak_bytes
        );
    }

    let window = PlanarTensor::mono(
        (0..model.window_samples)
            .map(|i| ((i * 37 % 101) as f32 - 50.0) / 29.0)
            .collect(),
    );
    let a = model_forward(&window, &model)?;
    let b = tiled_forward(&window, &model, &plan)?;
    let identical = a
        .probabilities
        .iter()
        .zip(&b.probabilities)
        .all(|(x, y)| x.to_bits() == y.to_bits());
    println!("tiled output bit-identical to monolithic: {identical}");
    assert!(identical);
    Ok(())
}

#[allow(dead_code)]
fn main() -> smartpam::Result<()> {
    run_example()
}
