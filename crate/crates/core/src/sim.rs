//! Device model: ping-pong acquisition, real-time deadlines, shunt-based
//! current readings and per-stage energy.
//!
//! Simulated time is driven by [`TimingModel::window_ms`]; window `i` of
//! the stream completes at `(i + 1) * window_ms`. Processing durations are
//! configuration, not host measurements.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::ModelSpec;
use crate::stream::{
    classify_window, warn_on_rate_mismatch, windows, AudioStream, DetectionConfig, DetectionCycle,
    DetectionOutcome, WindowRecord,
};
use crate::tiler::TilePlan;

/// Analysis window length the device timings were measured on.
pub const MEASURED_WINDOW_MS: f64 = 42.7;
pub const MEASURED_PREPROCESS_MS: f64 = 16.0;
pub const MEASURED_INFERENCE_MS: f64 = 20.0;
pub const DEFAULT_SHUNT_OHMS: f64 = 1.045;
pub const DEFAULT_BASELINE_CYCLE_MJ: f64 = 7.03;
pub const DEFAULT_SMART_CYCLE_MJ: f64 = 8.31;

/// Ohm's law across the measurement shunt: mV / Ω = mA.
pub fn shunt_current_ma(v_shunt_mv: f64, shunt_ohms: f64) -> Result<f64> {
    if !(shunt_ohms > 0.0) {
        return Err(Error::NonPositiveResistance(shunt_ohms));
    }
    Ok(v_shunt_mv / shunt_ohms)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageCurrents {
    pub sleep: f64,
    pub preprocess: f64,
    pub inference: f64,
    pub record: f64,
}

impl StageCurrents {
    /// Converts per-stage shunt voltage drops (mV) to currents (mA).
    pub fn from_shunt_mv(readings: &StageCurrents, shunt_ohms: f64) -> Result<Self> {
        Ok(Self {
            sleep: shunt_current_ma(readings.sleep, shunt_ohms)?,
            preprocess: shunt_current_ma(readings.preprocess, shunt_ohms)?,
            inference: shunt_current_ma(readings.inference, shunt_ohms)?,
            record: shunt_current_ma(readings.record, shunt_ohms)?,
        })
    }

    fn scaled(self, k: f64) -> Self {
        Self {
            sleep: self.sleep * k,
            preprocess: self.preprocess * k,
            inference: self.inference * k,
            record: self.record * k,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageDurations {
    pub preprocess: f64,
    pub inference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceProfile {
    pub supply_voltage_v: f64,
    pub shunt_ohms: f64,
    pub stage_current_ma: StageCurrents,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measured_stage_durations_ms: Option<StageDurations>,
    pub baseline_cycle_mj: f64,
    pub smart_cycle_mj: f64,
    /// Length of the recording started by an F1 trigger.
    pub recording_seconds: f64,
}

impl Default for DeviceProfile {
    /// Three-cell supply with rest and preprocessing currents fixed and the
    /// inference and recording currents calibrated to the reference cycle
    /// energies on the reference timing.
    fn default() -> Self {
        let mut profile = Self {
            supply_voltage_v: 4.5,
            shunt_ohms: DEFAULT_SHUNT_OHMS,
            stage_current_ma: StageCurrents {
                sleep: 25.0,
                preprocess: 40.0,
                inference: 0.0,
                record: 0.0,
            },
            measured_stage_durations_ms: Some(StageDurations {
                preprocess: MEASURED_PREPROCESS_MS,
                inference: MEASURED_INFERENCE_MS,
            }),
            baseline_cycle_mj: DEFAULT_BASELINE_CYCLE_MJ,
            smart_cycle_mj: DEFAULT_SMART_CYCLE_MJ,
            recording_seconds: 10.0,
        };
        profile
            .calibrate(&TimingModel::reference())
            .expect("reference timing calibrates");
        profile
    }
}

impl DeviceProfile {
    /// Solves the inference and recording currents so that one analysis
    /// cycle costs `smart_cycle_mj` and one record-only cycle costs
    /// `baseline_cycle_mj` under `timing`.
    pub fn calibrate(&mut self, timing: &TimingModel) -> Result<()> {
        let v = self.supply_voltage_v;
        if !(v > 0.0) || !(timing.window_ms > 0.0) || !(timing.inference_ms > 0.0) {
            return Err(Error::Internal(
                "calibration needs positive voltage, window and inference time".into(),
            ));
        }
        let i = &mut self.stage_current_ma;
        let charge_smart = self.smart_cycle_mj * 1000.0 / v;
        let rest = (timing.window_ms - timing.total_active_ms).max(0.0);
        i.inference = (charge_smart - i.preprocess * timing.preprocess_ms - i.sleep * rest)
            / timing.inference_ms;
        i.record = self.baseline_cycle_mj * 1000.0 / v / timing.window_ms;
        if i.inference < 0.0 {
            return Err(Error::Internal(
                "smart cycle energy too low for the fixed stage currents".into(),
            ));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let i = &self.stage_current_ma;
        let mut values = vec![
            self.supply_voltage_v,
            i.sleep,
            i.preprocess,
            i.inference,
            i.record,
            self.recording_seconds,
            self.baseline_cycle_mj,
            self.smart_cycle_mj,
        ];
        if let Some(d) = &self.measured_stage_durations_ms {
            values.extend([d.preprocess, d.inference]);
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Internal(
                "profile currents, durations and voltages must be finite and non-negative".into(),
            ));
        }
        if !(self.shunt_ohms > 0.0) {
            return Err(Error::NonPositiveResistance(self.shunt_ohms));
        }
        Ok(())
    }

    /// Same profile with every current multiplied by `k`.
    pub fn with_scaled_currents(&self, k: f64) -> Self {
        Self {
            stage_current_ma: self.stage_current_ma.scaled(k),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingModel {
    pub window_ms: f64,
    pub preprocess_ms: f64,
    pub inference_ms: f64,
    pub total_active_ms: f64,
}

impl TimingModel {
    pub fn new(window_ms: f64, preprocess_ms: f64, inference_ms: f64) -> Self {
        Self {
            window_ms,
            preprocess_ms,
            inference_ms,
            total_active_ms: preprocess_ms + inference_ms,
        }
    }

    /// 16 ms preprocessing + 20 ms inference on a 42.7 ms window.
    pub fn reference() -> Self {
        Self::new(
            MEASURED_WINDOW_MS,
            MEASURED_PREPROCESS_MS,
            MEASURED_INFERENCE_MS,
        )
    }

    /// Timing for a model's window at `sample_rate_hz`, with stage durations
    /// from the profile (reference durations when it has none).
    pub fn for_model(model: &ModelSpec, sample_rate_hz: u32, profile: &DeviceProfile) -> Self {
        let window_ms = model.window_samples as f64 / sample_rate_hz as f64 * 1000.0;
        let d = profile
            .measured_stage_durations_ms
            .unwrap_or(StageDurations {
                preprocess: MEASURED_PREPROCESS_MS,
                inference: MEASURED_INFERENCE_MS,
            });
        Self::new(window_ms, d.preprocess, d.inference)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeadlineCheck {
    pub met: bool,
    pub utilization: f64,
}

pub fn deadline_check(timing: &TimingModel) -> DeadlineCheck {
    DeadlineCheck {
        met: timing.total_active_ms <= timing.window_ms,
        utilization: timing.total_active_ms / timing.window_ms,
    }
}

/// Energy of one analysis cycle: preprocessing, inference, then rest for
/// the remainder of the window (zero when the stages overrun the window).
pub fn cycle_energy_mj(profile: &DeviceProfile, timing: &TimingModel) -> f64 {
    let i = &profile.stage_current_ma;
    let rest = (timing.window_ms - timing.preprocess_ms - timing.inference_ms).max(0.0);
    profile.supply_voltage_v
        * (i.preprocess * timing.preprocess_ms + i.inference * timing.inference_ms + i.sleep * rest)
        / 1000.0
}

/// Energy of one window on the record-only baseline device.
pub fn baseline_cycle_energy_mj(profile: &DeviceProfile, timing: &TimingModel) -> f64 {
    profile.supply_voltage_v * profile.stage_current_ma.record * timing.window_ms / 1000.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Detection-triggered recording.
    F1,
    /// Analyse-and-record logging.
    F2,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "f1" => Ok(Mode::F1),
            "f2" => Ok(Mode::F2),
            other => Err(format!("unknown mode {other:?}, expected f1 or f2")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trigger {
    pub cycle_index: usize,
    pub class: String,
    pub time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub mode: Mode,
    pub windows_total: usize,
    pub windows_processed: usize,
    pub windows_recorded: usize,
    pub deadline_misses: usize,
    pub buffer_overruns: usize,
    pub energy_mj: f64,
    pub baseline_energy_mj: f64,
    pub overhead_vs_baseline: f64,
    pub triggers: Vec<Trigger>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub cycles: Vec<DetectionOutcome>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub records: Vec<WindowRecord>,
}

/// Discrete-event run of the two-buffer acquisition pipeline.
///
/// When window `i` completes while the CPU is still busy with an earlier
/// window, the fresh window is dropped and counted as a buffer overrun. A
/// processed window misses its deadline when its stages take longer than
/// one window. In F1 a trigger starts a recording of
/// `profile.recording_seconds`; recorded windows are not analysed and the
/// next detection cycle starts afterwards with fresh counts.
pub fn simulate(
    stream: &AudioStream,
    model: &ModelSpec,
    plan: Option<&TilePlan>,
    mode: Mode,
    profile: &DeviceProfile,
    timing: &TimingModel,
    config: &DetectionConfig,
) -> Result<SimReport> {
    warn_on_rate_mismatch(stream, model);
    if mode == Mode::F1 {
        config.validate(model.window_samples, stream.sample_rate_hz)?;
    }
    let w = timing.window_ms;
    let active = timing.total_active_ms;
    let v = profile.supply_voltage_v;
    let currents = &profile.stage_current_ma;
    let per_cycle = config.windows_per_cycle(model.window_samples, stream.sample_rate_hz);
    let record_windows = (profile.recording_seconds * 1000.0 / w).ceil() as usize;

    let mut cpu_free = 0.0_f64;
    let mut busy_ms = 0.0;
    let mut active_charge = 0.0; // mA·ms
    let mut record_ms = 0.0;
    let mut report = SimReport {
        mode,
        windows_total: 0,
        windows_processed: 0,
        windows_recorded: 0,
        deadline_misses: 0,
        buffer_overruns: 0,
        energy_mj: 0.0,
        baseline_energy_mj: 0.0,
        overhead_vs_baseline: 0.0,
        triggers: Vec::new(),
        cycles: Vec::new(),
        records: Vec::new(),
    };

    let mut cycle = DetectionCycle::new(config, &model.class_labels);
    let mut cycle_slots = 0;
    let mut cycle_index = 0;
    let mut recording_left = 0;

    for (i, raw) in windows(stream, model.window_samples).enumerate() {
        report.windows_total += 1;
        let completed_at = (i + 1) as f64 * w;

        if recording_left > 0 {
            recording_left -= 1;
            report.windows_recorded += 1;
            record_ms += w;
            if recording_left == 0 {
                cycle = DetectionCycle::new(config, &model.class_labels);
                cycle_slots = 0;
                cycle_index += 1;
            }
            continue;
        }

        if cpu_free > completed_at {
            report.buffer_overruns += 1;
        } else {
            cpu_free = completed_at + active;
            busy_ms += active;
            active_charge += currents.preprocess * timing.preprocess_ms
                + currents.inference * timing.inference_ms;
            report.windows_processed += 1;
            if active > w {
                report.deadline_misses += 1;
            }
            let c = classify_window(raw, model, plan)?;
            match mode {
                Mode::F2 => report.records.push(WindowRecord {
                    index: i,
                    t_start_ms: i as f64 * w,
                    label: c.label,
                    probabilities: c.probabilities,
                }),
                Mode::F1 => {
                    if let Some(class) = cycle.observe(&c.label) {
                        report.triggers.push(Trigger {
                            cycle_index,
                            class: class.to_string(),
                            time_ms: i as f64 * w,
                        });
                    }
                }
            }
        }

        if mode == Mode::F1 {
            cycle_slots += 1;
            if cycle.is_triggered() || cycle_slots == per_cycle {
                let triggered = cycle.is_triggered();
                let done =
                    std::mem::replace(&mut cycle, DetectionCycle::new(config, &model.class_labels));
                report.cycles.push(done.finish());
                if triggered && record_windows > 0 {
                    // cycle index advances once the recording ends
                    recording_left = record_windows;
                } else {
                    cycle_slots = 0;
                    cycle_index += 1;
                }
            }
        }
    }
    if mode == Mode::F1 && cycle.windows_evaluated() > 0 {
        report.cycles.push(cycle.finish());
    }

    let n = report.windows_total as f64;
    let span_end = ((n + 1.0) * w).max(cpu_free);
    let idle_ms = (span_end - w - busy_ms - record_ms).max(0.0);
    report.energy_mj =
        v * (active_charge + currents.record * record_ms + currents.sleep * idle_ms) / 1000.0;
    report.baseline_energy_mj = n * baseline_cycle_energy_mj(profile, timing);
    report.overhead_vs_baseline = if report.baseline_energy_mj > 0.0 {
        report.energy_mj / report.baseline_energy_mj - 1.0
    } else {
        0.0
    };
    Ok(report)
}
