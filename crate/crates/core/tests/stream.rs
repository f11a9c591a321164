//! Windowing, analyse-and-record logging and detection cycles on
//! constructed streams.

use indexmap::IndexMap;
use proptest::prelude::*;
use smartpam::fixture::{gen_fixture, pattern_stream, tone, Arch, WeightMode};
use smartpam::stream::{detection_cycles, window_duration_ms, DetectionCycle};
use smartpam::tiler::make_tile_plan;
use smartpam::wav::{encode_wav, parse_wav};
use smartpam::{
    analyse_and_record, detection_cycle, standardize_window, trigger_decision, windows,
    AudioStream, DetectionConfig, Error, ModelSpec,
};

fn detector() -> ModelSpec {
    gen_fixture(&Arch::Small, 0, WeightMode::CraftedDetector)
}

#[test]
fn window_durations() {
    assert_eq!(window_duration_ms(9000, 24_000), 375.0);
    assert!((window_duration_ms(1024, 24_000) - 42.67).abs() <= 0.01);
}

#[test]
fn ten_seconds_yield_234_windows() {
    let stream = AudioStream::new(vec![0; 240_000], 24_000);
    assert_eq!(windows(&stream, 1024).count(), 234);
    let model = gen_fixture(&Arch::Small, 0, WeightMode::Zero);
    let records = analyse_and_record(&stream, &model, None).unwrap();
    assert_eq!(records.len(), 234);
    assert_eq!(records.last().unwrap().index, 233);
}

#[test]
fn zero_model_on_silence_logs_uniform_first_class() {
    let model = gen_fixture(&Arch::Small, 0, WeightMode::Zero);
    let stream = AudioStream::new(vec![0; 5 * 1024], 24_000);
    for r in analyse_and_record(&stream, &model, None).unwrap() {
        assert_eq!(r.label, "male");
        assert!(r.probabilities.iter().all(|&p| p == 0.25));
    }
}

#[test]
fn log_line_layout() {
    let model = gen_fixture(&Arch::Small, 0, WeightMode::Zero);
    let stream = AudioStream::new(vec![0; 3 * 1024], 24_000);
    let records = analyse_and_record(&stream, &model, None).unwrap();
    assert_eq!(
        records[0].to_log_line(),
        "0,0.000,male,0.250000,0.250000,0.250000,0.250000"
    );
    assert_eq!(
        records[2].to_log_line(),
        "2,85.333,male,0.250000,0.250000,0.250000,0.250000"
    );
}

#[test]
fn tiled_and_untiled_records_match() {
    let model = gen_fixture(&Arch::Small, 11, WeightMode::RandomUniform);
    let mut state = 0x1234_5678u32;
    let samples: Vec<i16> = (0..40 * 1024)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 17;
            state ^= state << 5;
            state as i16
        })
        .collect();
    let stream = AudioStream::new(samples, 24_000);
    let plain = analyse_and_record(&stream, &model, None).unwrap();
    for n in [2, 5, 33] {
        let plan = make_tile_plan(&model, n).unwrap();
        assert_eq!(
            analyse_and_record(&stream, &model, Some(&plan)).unwrap(),
            plain
        );
    }
}

#[test]
fn standardization() {
    let w = standardize_window(&[1, 2, 3, 4]).unwrap();
    let mean: f32 = w.values().iter().sum::<f32>() / 4.0;
    let var: f32 = w
        .values()
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f32>()
        / 4.0;
    assert!(mean.abs() < 1e-6 && (var - 1.0).abs() < 1e-5);
    assert!(standardize_window(&[-7; 64])
        .unwrap()
        .values()
        .iter()
        .all(|&v| v == 0.0));
    assert!(matches!(standardize_window(&[]), Err(Error::EmptyWindow)));
}

#[test]
fn thirty_positive_windows_trigger_at_the_thirtieth() {
    let model = detector();
    let stream = pattern_stream(&model, &[("male", 40)]);
    let outcome = detection_cycle(&stream, &model, None, &DetectionConfig::default()).unwrap();
    assert!(outcome.triggered);
    assert_eq!(outcome.trigger_class.as_deref(), Some("male"));
    // early exit: nothing after the triggering window is classified
    assert_eq!(outcome.windows_evaluated, 30);
    assert_eq!(outcome.counts["male"], 30);
}

#[test]
fn split_positives_do_not_trigger() {
    let model = detector();
    let stream = pattern_stream(&model, &[("male", 29), ("female", 29), ("noise", 176)]);
    let outcome = detection_cycle(&stream, &model, None, &DetectionConfig::default()).unwrap();
    assert!(!outcome.triggered);
    assert_eq!(outcome.trigger_class, None);
    assert_eq!(
        (
            outcome.counts["male"],
            outcome.counts["female"],
            outcome.windows_evaluated
        ),
        (29, 29, 234)
    );
}

#[test]
fn noise_never_triggers() {
    let model = detector();
    let stream = pattern_stream(&model, &[("noise", 3 * 234)]);
    let cycles = detection_cycles(&stream, &model, None, &DetectionConfig::default()).unwrap();
    assert_eq!(cycles.len(), 3);
    assert!(cycles
        .iter()
        .all(|c| !c.triggered && c.counts["noise"] == 234));
}

#[test]
fn counts_reset_between_cycles() {
    let model = detector();
    // 20 chick windows at the end of cycle 0 and 20 at the start of cycle 1
    let stream = pattern_stream(&model, &[("noise", 214), ("chick", 40), ("noise", 194)]);
    let cycles = detection_cycles(&stream, &model, None, &DetectionConfig::default()).unwrap();
    assert_eq!(cycles.len(), 2);
    assert!(cycles
        .iter()
        .all(|c| !c.triggered && c.counts["chick"] == 20));
}

#[test]
fn tiled_detection_matches_untiled() {
    let model = detector();
    let stream = pattern_stream(&model, &[("noise", 10), ("chick", 35)]);
    let plan = make_tile_plan(&model, 5).unwrap();
    let config = DetectionConfig::default();
    assert_eq!(
        detection_cycle(&stream, &model, Some(&plan), &config).unwrap(),
        detection_cycle(&stream, &model, None, &config).unwrap()
    );
}

#[test]
fn invalid_detection_configs() {
    let model = detector();
    let stream = pattern_stream(&model, &[("noise", 1)]);
    for config in [
        DetectionConfig {
            threshold: 0,
            ..Default::default()
        },
        DetectionConfig {
            cycle_seconds: 0.0,
            ..Default::default()
        },
        DetectionConfig {
            threshold: 235,
            ..Default::default()
        },
    ] {
        assert!(matches!(
            detection_cycle(&stream, &model, None, &config),
            Err(Error::InvalidDetectionConfig(_))
        ));
    }
}

#[test]
fn ties_go_to_class_order_and_highest_count_wins() {
    let config = DetectionConfig::default();
    let counts = |m, f, c| -> IndexMap<String, usize> {
        [("male", m), ("female", f), ("chick", c), ("noise", 500)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect()
    };
    assert_eq!(
        trigger_decision(&counts(30, 30, 0), &config).as_deref(),
        Some("male")
    );
    assert_eq!(
        trigger_decision(&counts(30, 31, 0), &config).as_deref(),
        Some("female")
    );
    assert_eq!(
        trigger_decision(&counts(0, 0, 30), &config).as_deref(),
        Some("chick")
    );
    assert_eq!(trigger_decision(&counts(29, 29, 29), &config), None);
}

#[test]
fn wav_at_48k_is_accepted() {
    let stream = AudioStream::new(tone(1000.0, 48_000, 48_000, 4000), 48_000);
    let clip = parse_wav(&encode_wav(&stream)).unwrap();
    assert_eq!(clip.sample_rate_hz, 48_000);
    let model = detector();
    let records = analyse_and_record(&clip.stream, &model, None).unwrap();
    assert_eq!(records.len(), 46);
    // durations follow the stream rate
    assert!((records[1].t_start_ms - 1024.0 / 48.0).abs() < 1e-9);
}

const LABELS: [&str; 4] = ["male", "female", "chick", "noise"];

proptest! {
    /// The cycle triggers exactly at the first window where some positive
    /// class reaches the threshold, and stays triggered afterwards.
    #[test]
    fn trigger_is_first_threshold_crossing(
        seq in prop::collection::vec(0usize..4, 0..120),
        threshold in 1usize..12,
    ) {
        let config = DetectionConfig { threshold, ..Default::default() };
        let labels: Vec<String> = LABELS.iter().map(|s| s.to_string()).collect();
        let mut cycle = DetectionCycle::new(&config, &labels);
        let mut counts = [0usize; 4];
        let mut expected: Option<(usize, &str)> = None;
        for (i, &c) in seq.iter().enumerate() {
            counts[c] += 1;
            if expected.is_none() && c < 3 && counts[c] >= threshold {
                expected = Some((i, LABELS[c]));
            }
        }
        let mut got = None;
        for (i, &c) in seq.iter().enumerate() {
            let was = cycle.is_triggered();
            if let Some(class) = cycle.observe(LABELS[c]) {
                prop_assert!(got.is_none());
                got = Some((i, class.to_string()));
            }
            prop_assert!(!was || cycle.is_triggered());
        }
        prop_assert_eq!(got.as_ref().map(|(i, c)| (*i, c.as_str())), expected);
        let evaluated = expected.map_or(seq.len(), |(i, _)| i + 1);
        prop_assert_eq!(cycle.windows_evaluated(), evaluated);
    }

    /// Raising any positive count never withdraws a trigger.
    #[test]
    fn trigger_is_monotone_in_counts(
        m in 0usize..60, f in 0usize..60, c in 0usize..60, bump in 0usize..3, by in 0usize..30,
    ) {
        let config = DetectionConfig::default();
        let mk = |v: [usize; 3]| -> IndexMap<String, usize> {
            LABELS.iter().zip(v.iter().chain([&0])).map(|(k, v)| (k.to_string(), *v)).collect()
        };
        let mut v = [m, f, c];
        let before = trigger_decision(&mk(v), &config).is_some();
        v[bump] += by;
        let after = trigger_decision(&mk(v), &config).is_some();
        prop_assert!(!before || after);
    }
}
