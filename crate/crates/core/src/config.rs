//! Device profile files: flat TOML with the unit in every key name.
//!
//! ```toml
//! supply_voltage_v = 4.5
//! shunt_ohms = 1.045
//! current_sleep_ma = 25.0
//! current_preprocess_ma = 40.0
//! current_inference_ma = 51.958333333333336
//! current_record_ma = 36.586000520426744
//! duration_preprocess_ms = 16.0
//! duration_inference_ms = 20.0
//! baseline_cycle_mj = 7.03
//! smart_cycle_mj = 8.31
//! recording_s = 10.0
//! ```
//!
//! With `calibrate = true` the inference and record currents are solved
//! from the two cycle energies on the reference timing instead of read.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{DeviceProfile, StageCurrents, StageDurations, TimingModel};
use crate::wav::write_atomic;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileFile {
    supply_voltage_v: f64,
    shunt_ohms: f64,
    current_sleep_ma: f64,
    current_preprocess_ma: f64,
    #[serde(default)]
    current_inference_ma: f64,
    #[serde(default)]
    current_record_ma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    duration_preprocess_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    duration_inference_ms: Option<f64>,
    baseline_cycle_mj: f64,
    smart_cycle_mj: f64,
    recording_s: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    calibrate: bool,
}

pub fn profile_to_toml(profile: &DeviceProfile) -> String {
    let i = &profile.stage_current_ma;
    let d = profile.measured_stage_durations_ms;
    let file = ProfileFile {
        supply_voltage_v: profile.supply_voltage_v,
        shunt_ohms: profile.shunt_ohms,
        current_sleep_ma: i.sleep,
        current_preprocess_ma: i.preprocess,
        current_inference_ma: i.inference,
        current_record_ma: i.record,
        duration_preprocess_ms: d.map(|d| d.preprocess),
        duration_inference_ms: d.map(|d| d.inference),
        baseline_cycle_mj: profile.baseline_cycle_mj,
        smart_cycle_mj: profile.smart_cycle_mj,
        recording_s: profile.recording_seconds,
        calibrate: false,
    };
    toml::to_string(&file).expect("profile fields serialize")
}

pub fn profile_from_toml(text: &str) -> std::result::Result<DeviceProfile, String> {
    let f: ProfileFile = toml::from_str(text).map_err(|e| e.to_string())?;
    let measured = match (f.duration_preprocess_ms, f.duration_inference_ms) {
        (Some(preprocess), Some(inference)) => Some(StageDurations {
            preprocess,
            inference,
        }),
        (None, None) => None,
        _ => {
            return Err(
                "duration_preprocess_ms and duration_inference_ms must be given together".into(),
            )
        }
    };
    let mut profile = DeviceProfile {
        supply_voltage_v: f.supply_voltage_v,
        shunt_ohms: f.shunt_ohms,
        stage_current_ma: StageCurrents {
            sleep: f.current_sleep_ma,
            preprocess: f.current_preprocess_ma,
            inference: f.current_inference_ma,
            record: f.current_record_ma,
        },
        measured_stage_durations_ms: measured,
        baseline_cycle_mj: f.baseline_cycle_mj,
        smart_cycle_mj: f.smart_cycle_mj,
        recording_seconds: f.recording_s,
    };
    if f.calibrate {
        let mut timing = TimingModel::reference();
        if let Some(d) = measured {
            timing = TimingModel::new(timing.window_ms, d.preprocess, d.inference);
        }
        profile.calibrate(&timing).map_err(|e| e.to_string())?;
    }
    profile.validate().map_err(|e| e.to_string())?;
    Ok(profile)
}

pub fn load_profile(path: impl AsRef<Path>) -> Result<DeviceProfile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    profile_from_toml(&text).map_err(|message| Error::Config {
        path: path.to_path_buf(),
        message,
    })
}

pub fn save_profile(path: impl AsRef<Path>, profile: &DeviceProfile) -> Result<()> {
    write_atomic(path.as_ref(), profile_to_toml(profile).as_bytes())
}
