// Deadline, per-window energy and a full F1/F2 device simulation.
//
// cargo run -p smartpam --example device_sim

use smartpam::fixture::{gen_fixture, pattern_stream, Arch, WeightMode};
use smartpam::sim::baseline_cycle_energy_mj;
use smartpam::{
    cycle_energy_mj, deadline_check, simulate, DetectionConfig, DeviceProfile, Mode, TimingModel,
};

pub fn run_example() -> smartpam::Result<()> {
    let profile = DeviceProfile::default();
    let i = &profile.stage_current_ma;
    println!(
        "profile: {} V; sleep {:.1} mA, preprocess {:.1} mA, inference {:.2} mA, record {:.2} mA",
        profile.supply_voltage_v, i.sleep, i.preprocess, i.inference, i.record
    );

    let reference = TimingModel::reference();
    let d = deadline_check(&reference);
    let smart = cycle_energy_mj(&profile, &reference);
    let base = baseline_cycle_energy_mj(&profile, &reference);
    println!(
        "{} ms of work per {} ms window: met={}, utilization {:.3}",
        reference.total_active_ms, reference.window_ms, d.met, d.utilization
    );
    println!(
        "per window: {smart:.2} mJ analysing vs {base:.2} mJ recording (+{:.1}%)",
        (smart / base - 1.0) * 100.0
    );

    let model = gen_fixture(&Arch::Small, 0, WeightMode::CraftedDetector);
    let timing = TimingModel::for_model(&model, model.sample_rate_hz, &profile);
    let stream = pattern_stream(&model, &[("noise", 100), ("chick", 40), ("noise", 400)]);
    let config = DetectionConfig::default();
    for mode in [Mode::F2, Mode::F1] {
        let r = simulate(&stream, &model, None, mode, &profile, &timing, &config)?;
        println!(
            "{mode:?}: {} windows, {} analysed, {} recorded, {} misses, {} overruns, \
             {:.1} mJ vs {:.1} mJ always-record",
            r.windows_total,
            r.windows_processed,
            r.windows_recorded,
            r.deadline_misses,
            r.buffer_overruns,
            r.energy_mj,
            r.baseline_energy_mj
        );
        for t in &r.triggers {
            println!(
                "    trigger: {} at {:.1} ms (cycle {})",
                t.class, t.time_ms, t.cycle_index
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> smartpam::Result<()> {
    run_example()
}
