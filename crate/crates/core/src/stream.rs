//! Windowing, standardization and the two firmware behaviours:
//! continuous analyse-and-record logging (F2) and detection-triggered
//! recording (F1).

use std::fmt::Write as _;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{model_forward, Classification, ModelSpec};
use crate::tensor::PlanarTensor;
use crate::tiler::{tiled_forward, TilePlan};

const STD_EPSILON: f64 = 1e-8;

/// Mono 16-bit PCM samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AudioStream {
    pub samples: Vec<i16>,
    pub sample_rate_hz: u32,
}

impl AudioStream {
    pub fn new(samples: Vec<i16>, sample_rate_hz: u32) -> Self {
        Self {
            samples,
            sample_rate_hz,
        }
    }

    pub fn duration_ms(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64 * 1000.0
    }
}

/// Duration of `window_samples` at `sample_rate_hz`, in milliseconds.
pub fn window_duration_ms(window_samples: usize, sample_rate_hz: u32) -> f64 {
    window_samples as f64 / sample_rate_hz as f64 * 1000.0
}

/// Z-score with the population standard deviation. Near-constant windows
/// (std below 1e-8) map to all zeros.
pub fn standardize_window(raw: &[i16]) -> Result<PlanarTensor> {
    if raw.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let n = raw.len() as f64;
    let mean = raw.iter().map(|&s| s as f64).sum::<f64>() / n;
    let var = raw
        .iter()
        .map(|&s| {
            let d = s as f64 - mean;
            d * d
        })
        .sum::<f64>()
        / n;
    let std = var.sqrt();
    let values = if std < STD_EPSILON {
        vec![0.0; raw.len()]
    } else {
        raw.iter()
            .map(|&s| ((s as f64 - mean) / std) as f32)
            .collect()
    };
    Ok(PlanarTensor::mono(values))
}

/// Back-to-back, non-overlapping windows; a trailing partial window is dropped.
pub fn windows(stream: &AudioStream, window_samples: usize) -> std::slice::ChunksExact<'_, i16> {
    assert!(window_samples >= 1, "window_samples must be positive");
    stream.samples.chunks_exact(window_samples)
}

/// Standardizes and classifies one raw window, tiled when a plan is given.
pub fn classify_window(
    raw: &[i16],
    model: &ModelSpec,
    plan: Option<&TilePlan>,
) -> Result<Classification> {
    let window = standardize_window(raw)?;
    match plan {
        Some(plan) => tiled_forward(&window, model, plan),
        None => model_forward(&window, model),
    }
}

pub(crate) fn warn_on_rate_mismatch(stream: &AudioStream, model: &ModelSpec) {
    if stream.sample_rate_hz != model.sample_rate_hz {
        log::warn!(
            "stream sampled at {} Hz, model expects {} Hz; durations use the stream rate",
            stream.sample_rate_hz,
            model.sample_rate_hz
        );
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowRecord {
    pub index: usize,
    pub t_start_ms: f64,
    pub label: String,
    pub probabilities: Vec<f32>,
}

impl WindowRecord {
    /// `index,t_start_ms,label,p0,p1,...` with probabilities at 6 decimals.
    pub fn to_log_line(&self) -> String {
        let mut line = format!("{},{:.3},{}", self.index, self.t_start_ms, self.label);
        for p in &self.probabilities {
            let _ = write!(line, ",{p:.6}");
        }
        line
    }
}

/// Classifies every window of the stream in order (F2).
pub fn analyse_and_record(
    stream: &AudioStream,
    model: &ModelSpec,
    plan: Option<&TilePlan>,
) -> Result<Vec<WindowRecord>> {
    warn_on_rate_mismatch(stream, model);
    let window_ms = window_duration_ms(model.window_samples, stream.sample_rate_hz);
    windows(stream, model.window_samples)
        .enumerate()
        .map(|(index, raw)| {
            let c = classify_window(raw, model, plan)?;
            Ok(WindowRecord {
                index,
                t_start_ms: index as f64 * window_ms,
                label: c.label,
                probabilities: c.probabilities,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionConfig {
    pub cycle_seconds: f64,
    pub threshold: usize,
    pub positive_classes: Vec<String>,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            cycle_seconds: 10.0,
            threshold: 30,
            positive_classes: vec!["male".into(), "female".into(), "chick".into()],
        }
    }
}

impl DetectionConfig {
    pub fn windows_per_cycle(&self, window_samples: usize, sample_rate_hz: u32) -> usize {
        (self.cycle_seconds * sample_rate_hz as f64 / window_samples as f64).floor() as usize
    }

    pub fn validate(&self, window_samples: usize, sample_rate_hz: u32) -> Result<()> {
        if !(self.cycle_seconds > 0.0) {
            return Err(Error::InvalidDetectionConfig(
                "cycle_seconds must be positive".into(),
            ));
        }
        if self.threshold == 0 {
            return Err(Error::InvalidDetectionConfig(
                "threshold must be positive".into(),
            ));
        }
        let per_cycle = self.windows_per_cycle(window_samples, sample_rate_hz);
        if self.threshold > per_cycle {
            return Err(Error::InvalidDetectionConfig(format!(
                "threshold {} exceeds the {per_cycle} windows in a cycle",
                self.threshold
            )));
        }
        Ok(())
    }

    fn is_positive(&self, label: &str) -> bool {
        self.positive_classes.iter().any(|c| c == label)
    }
}

/// Positive class whose count reached the threshold. When several qualify
/// the highest count wins, then the earliest class in `counts` order.
pub fn trigger_decision(
    counts: &IndexMap<String, usize>,
    config: &DetectionConfig,
) -> Option<String> {
    let mut best: Option<(&String, usize)> = None;
    for (class, &count) in counts {
        if !config.is_positive(class) || count < config.threshold {
            continue;
        }
        if best.is_none_or(|(_, c)| count > c) {
            best = Some((class, count));
        }
    }
    best.map(|(class, _)| class.clone())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionOutcome {
    pub triggered: bool,
    pub trigger_class: Option<String>,
    pub counts: IndexMap<String, usize>,
    pub windows_evaluated: usize,
}

/// Per-cycle counting state. Counts start at zero for every cycle.
#[derive(Debug, Clone)]
pub struct DetectionCycle<'a> {
    config: &'a DetectionConfig,
    counts: IndexMap<String, usize>,
    windows_evaluated: usize,
    trigger_class: Option<String>,
}

impl<'a> DetectionCycle<'a> {
    pub fn new(config: &'a DetectionConfig, class_labels: &[String]) -> Self {
        Self {
            config,
            counts: class_labels.iter().map(|l| (l.clone(), 0)).collect(),
            windows_evaluated: 0,
            trigger_class: None,
        }
    }

    /// Counts one classified window; returns the trigger class the first
    /// time the threshold is reached.
    pub fn observe(&mut self, label: &str) -> Option<&str> {
        if self.trigger_class.is_some() {
            return None;
        }
        *self.counts.entry(label.to_string()).or_insert(0) += 1;
        self.windows_evaluated += 1;
        self.trigger_class = trigger_decision(&self.counts, self.config);
        self.trigger_class.as_deref()
    }

    pub fn is_triggered(&self) -> bool {
        self.trigger_class.is_some()
    }

    pub fn windows_evaluated(&self) -> usize {
        self.windows_evaluated
    }

    pub fn finish(self) -> DetectionOutcome {
        DetectionOutcome {
            triggered: self.trigger_class.is_some(),
            trigger_class: self.trigger_class,
            counts: self.counts,
            windows_evaluated: self.windows_evaluated,
        }
    }
}

/// One F1 detection cycle over the start of `stream`: at most one cycle's
/// worth of windows is classified, stopping early on a trigger.
pub fn detection_cycle(
    stream: &AudioStream,
    model: &ModelSpec,
    plan: Option<&TilePlan>,
    config: &DetectionConfig,
) -> Result<DetectionOutcome> {
    warn_on_rate_mismatch(stream, model);
    config.validate(model.window_samples, stream.sample_rate_hz)?;
    let per_cycle = config.windows_per_cycle(model.window_samples, stream.sample_rate_hz);
    let mut cycle = DetectionCycle::new(config, &model.class_labels);
    for raw in windows(stream, model.window_samples).take(per_cycle) {
        let c = classify_window(raw, model, plan)?;
        if cycle.observe(&c.label).is_some() {
            break;
        }
    }
    Ok(cycle.finish())
}

/// Runs back-to-back detection cycles over the whole stream.
pub fn detection_cycles(
    stream: &AudioStream,
    model: &ModelSpec,
    plan: Option<&TilePlan>,
    config: &DetectionConfig,
) -> Result<Vec<DetectionOutcome>> {
    config.validate(model.window_samples, stream.sample_rate_hz)?;
    let per_cycle = config.windows_per_cycle(model.window_samples, stream.sample_rate_hz);
    let cycle_samples = per_cycle * model.window_samples;
    stream
        .samples
        .chunks(cycle_samples)
        .filter(|chunk| chunk.len() >= model.window_samples)
        .map(|chunk| {
            let part = AudioStream::new(chunk.to_vec(), stream.sample_rate_hz);
            detection_cycle(&part, model, plan, config)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(pairs: &[(&str, usize)]) -> IndexMap<String, usize> {
        ["male", "female", "chick", "noise"]
            .iter()
            .map(|l| {
                let c = pairs.iter().find(|(k, _)| k == l).map_or(0, |p| p.1);
                (l.to_string(), c)
            })
            .collect()
    }

    #[test]
    fn standardize_examples() {
        let z = standardize_window(&[5, 5, 5, 5]).unwrap();
        assert_eq!(z.values(), &[0.0; 4]);
        let z = standardize_window(&[0, 2]).unwrap();
        assert_eq!(z.values(), &[-1.0, 1.0]);
        assert!(matches!(standardize_window(&[]), Err(Error::EmptyWindow)));
    }

    #[test]
    fn window_counts() {
        let s = AudioStream::new(vec![0; 24_000], 24_000);
        assert_eq!(windows(&s, 9000).count(), 2);
        assert_eq!(windows(&s, 1024).count(), 23);
        assert_eq!(window_duration_ms(9000, 24_000), 375.0);
        assert!((window_duration_ms(1024, 24_000) - 42.67).abs() < 0.01);
        let short = AudioStream::new(vec![0; 100], 24_000);
        assert_eq!(windows(&short, 1024).count(), 0);
    }

    #[test]
    fn trigger_decision_examples() {
        let cfg = DetectionConfig::default();
        assert_eq!(
            trigger_decision(&counts(&[("male", 30), ("noise", 204)]), &cfg).as_deref(),
            Some("male")
        );
        assert_eq!(
            trigger_decision(&counts(&[("male", 29), ("female", 29)]), &cfg),
            None
        );
        assert_eq!(
            trigger_decision(&counts(&[("male", 31), ("chick", 35)]), &cfg).as_deref(),
            Some("chick")
        );
        assert_eq!(
            trigger_decision(&counts(&[("male", 31), ("female", 31)]), &cfg).as_deref(),
            Some("male")
        );
        // noise is never a positive class
        assert_eq!(trigger_decision(&counts(&[("noise", 234)]), &cfg), None);
    }

    #[test]
    fn cycle_state_triggers_once() {
        let cfg = DetectionConfig::default();
        let labels = crate::nn::ModelSpec::default_labels();
        let mut cycle = DetectionCycle::new(&cfg, &labels);
        for _ in 0..10 {
            assert!(cycle.observe("noise").is_none());
        }
        for i in 0..30 {
            let t = cycle.observe("male").map(str::to_string);
            assert_eq!(t.is_some(), i == 29);
        }
        assert!(cycle.observe("male").is_none());
        let out = cycle.finish();
        assert!(out.triggered);
        assert_eq!(out.windows_evaluated, 40);
        assert_eq!(out.counts["male"], 30);
    }

    #[test]
    fn config_validation() {
        let cfg = DetectionConfig::default();
        assert_eq!(cfg.windows_per_cycle(1024, 24_000), 234);
        assert!(cfg.validate(1024, 24_000).is_ok());
        // a 9000-sample window gives 26 windows per cycle, below 30
        assert!(cfg.validate(9000, 24_000).is_err());
    }

    #[test]
    fn log_line_format() {
        let r = WindowRecord {
            index: 3,
            t_start_ms: 128.0,
            label: "noise".into(),
            probabilities: vec![0.1, 0.2, 0.3, 0.4],
        };
        assert_eq!(
            r.to_log_line(),
            "3,128.000,noise,0.100000,0.200000,0.300000,0.400000"
        );
    }
}
