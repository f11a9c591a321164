// Log a classification for every window of a stream instead of keeping
// the raw audio.
//
// cargo run -p smartpam --example analyse_and_record

use smartpam::fixture::{gen_fixture, pattern_stream, Arch, WeightMode};
use smartpam::{analyse_and_record, make_tile_plan};

pub fn run_example() -> smartpam::Result<()> {
    let model = gen_fixture(&Arch::Small, 0, WeightMode::CraftedDetector);
    let stream = pattern_stream(&model, &[("noise", 3), ("chick", 3), ("female", 2)]);
    // tiling changes memory use, not results
    let plan = make_tile_plan(&model, 5)?;
    let records = analyse_and_record(&stream, &model, Some(&plan))?;

    println!("index,t_start_ms,label,{}", model.class_labels.join(","));
    for r in &records {
        println!("{}", r.to_log_line());
    }
    let raw_bytes = stream.samples.len() * 2;
    let log_bytes: usize = records.iter().map(|r| r.to_log_line().len() + 1).sum();
    println!("{raw_bytes} bytes of audio summarized in {log_bytes} bytes of log");
    Ok(())
}

#[allow(dead_code)]
fn main() -> smartpam::Result<()> {
    run_example()
}
