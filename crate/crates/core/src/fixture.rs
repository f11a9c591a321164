//! Reference architectures, seeded weights and synthetic test signals.
//!
//! The `CraftedDetector` weights turn the conv stack into a two-band
//! energy detector: the first layer splits the signal into a low band
//! (`[1, 2, 1]` taps) and a high band (`[1, -2, 1]` taps) at its dilation,
//! later layers average each band, and the dense head compares the bands.
//! Three pure tones (see [`detector_tone_hz`]) then classify as `male`,
//! `chick` and `female`, and digital silence classifies as `noise`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::nn::{
    output_length, Activation, ConvLayerSpec, DenseSpec, ModelSpec, DEFAULT_SAMPLE_RATE_HZ,
};
use crate::stream::AudioStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StridePlacement {
    /// Stride on the first layer of each group.
    First,
    /// Stride on the last layer of each group.
    Last,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArchParams {
    pub layers: usize,
    pub filters: usize,
    pub kernel: usize,
    pub dilation: usize,
    pub stride: usize,
    pub stride_every: usize,
    pub stride_placement: StridePlacement,
    pub window_samples: usize,
    pub sample_rate_hz: u32,
    pub class_labels: Vec<String>,
}

impl ArchParams {
    pub fn small() -> Self {
        Self {
            layers: 6,
            filters: 4,
            kernel: 3,
            dilation: 3,
            stride: 3,
            stride_every: 2,
            stride_placement: StridePlacement::Last,
            window_samples: 1024,
            sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
            class_labels: ModelSpec::default_labels(),
        }
    }

    pub fn large() -> Self {
        Self {
            layers: 12,
            filters: 16,
            kernel: 3,
            dilation: 5,
            stride: 3,
            stride_every: 3,
            stride_placement: StridePlacement::Last,
            window_samples: 9000,
            sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
            class_labels: ModelSpec::default_labels(),
        }
    }

    /// Stride of layer `index` (0-based).
    pub fn stride_of(&self, index: usize) -> usize {
        let hit = match self.stride_placement {
            StridePlacement::Last => (index + 1).is_multiple_of(self.stride_every),
            StridePlacement::First => index.is_multiple_of(self.stride_every),
        };
        if hit {
            self.stride
        } else {
            1
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Arch {
    /// 6 layers, 4 filters, dilation 3, stride 3 on layers 2/4/6, 1024-sample window.
    Small,
    /// 12 layers, 16 filters, dilation 5, stride 3 on layers 3/6/9/12, 9000-sample window.
    Large,
    Custom(ArchParams),
}

impl Arch {
    pub fn params(&self) -> ArchParams {
        match self {
            Arch::Small => ArchParams::small(),
            Arch::Large => ArchParams::large(),
            Arch::Custom(p) => p.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMode {
    /// Uniform in [-0.5, 0.5] from the seed.
    RandomUniform,
    Zero,
    CraftedDetector,
}

/// Zero-weight model with the architecture's geometry.
///
/// Panics when the window is too short for the stack.
fn skeleton(p: &ArchParams) -> ModelSpec {
    let mut layers = Vec::with_capacity(p.layers);
    let mut channels = 1;
    let mut len = p.window_samples;
    for i in 0..p.layers {
        let layer = ConvLayerSpec::zeros(
            channels,
            p.filters,
            p.kernel,
            p.stride_of(i),
            p.dilation,
            Activation::Relu,
        );
        len = output_length(len, &layer).expect("window too short for fixture architecture");
        channels = p.filters;
        layers.push(layer);
    }
    ModelSpec {
        conv_layers: layers,
        dense: DenseSpec::zeros(len * channels, p.class_labels.len()),
        class_labels: p.class_labels.clone(),
        window_samples: p.window_samples,
        sample_rate_hz: p.sample_rate_hz,
    }
}

pub fn gen_fixture(arch: &Arch, seed: u64, weight_mode: WeightMode) -> ModelSpec {
    let p = arch.params();
    let mut model = skeleton(&p);
    match weight_mode {
        WeightMode::Zero => {}
        WeightMode::RandomUniform => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut fill = |v: &mut Vec<f32>| {
                v.iter_mut().for_each(|w| *w = rng.gen_range(-0.5f32..=0.5));
            };
            for layer in &mut model.conv_layers {
                fill(&mut layer.weights);
                fill(&mut layer.bias);
            }
            fill(&mut model.dense.weights);
            fill(&mut model.dense.bias);
        }
        WeightMode::CraftedDetector => craft_detector(&mut model),
    }
    model
}

const LOW_BAND: [f32; 3] = [1.0, 2.0, 1.0];
const HIGH_BAND: [f32; 3] = [1.0, -2.0, 1.0];
const NOISE_BIAS: f32 = 1.8;

fn craft_detector(model: &mut ModelSpec) {
    let first = &model.conv_layers[0];
    assert!(
        first.kernel == 3 && first.out_channels >= 4,
        "crafted detector needs kernel 3 and at least 4 filters"
    );
    for label in ["male", "female", "chick", "noise"] {
        assert!(
            model.class_index(label).is_some(),
            "crafted detector needs class label {label:?}"
        );
    }

    // band +/- halves so ReLU keeps the rectified magnitude of each band
    let bands: [(usize, [f32; 3], f32); 4] = [
        (0, LOW_BAND, 1.0),
        (1, LOW_BAND, -1.0),
        (2, HIGH_BAND, 1.0),
        (3, HIGH_BAND, -1.0),
    ];
    let first = &mut model.conv_layers[0];
    for (c, taps, sign) in bands {
        for (t, w) in taps.iter().enumerate() {
            first.weights[(c * first.in_channels) * first.kernel + t] = sign * w;
        }
    }
    for layer in model.conv_layers.iter_mut().skip(1) {
        let k = layer.kernel;
        for c in 0..4 {
            for t in 0..k {
                layer.weights[(c * layer.in_channels + c) * k + t] = 1.0 / k as f32;
            }
        }
    }

    let final_len = model.final_length().expect("fixture geometry is valid");
    let per_position = 1.0 / final_len as f32;
    let dense = &mut model.dense;
    let mut set_row = |label: &str, gains: [f32; 4], bias: f32, labels: &[String]| {
        let row = labels.iter().position(|l| l == label).unwrap();
        for (c, g) in gains.iter().enumerate() {
            for p in 0..final_len {
                dense.weights[row * dense.in_features + c * final_len + p] = g * per_position;
            }
        }
        dense.bias[row] = bias;
    };
    let labels = model.class_labels.clone();
    set_row("male", [2.0, 2.0, -2.0, -2.0], 0.0, &labels);
    set_row("female", [-2.0, -2.0, 2.0, 2.0], 0.0, &labels);
    set_row("chick", [1.0, 1.0, 1.0, 1.0], 0.0, &labels);
    set_row("noise", [0.0; 4], NOISE_BIAS, &labels);
}

/// Tone frequency the crafted detector assigns to `class` at the model's
/// sample rate, or `None` for classes it has no tone for.
pub fn detector_tone_hz(model: &ModelSpec, class: &str) -> Option<f64> {
    let lag = model.conv_layers.first()?.dilation as f64;
    let rate = model.sample_rate_hz as f64;
    // band phase 2*pi*f*lag of pi/4, pi/2 and 7pi/8; a full pi would put
    // the tone at twice the lag, which strided layers sample only at its zeros
    let divisor = match class {
        "male" => 8.0,
        "chick" => 4.0,
        "female" => 16.0 / 7.0,
        _ => return None,
    };
    Some(rate / (divisor * lag))
}

pub const TONE_AMPLITUDE: i16 = 8000;

pub fn tone(freq_hz: f64, n_samples: usize, sample_rate_hz: u32, amplitude: i16) -> Vec<i16> {
    (0..n_samples)
        .map(|n| {
            let phase = 2.0 * std::f64::consts::PI * freq_hz * n as f64 / sample_rate_hz as f64;
            (amplitude as f64 * phase.sin()).round() as i16
        })
        .collect()
}

/// `windows` whole model windows of the crafted detector's tone for `class`
/// (digital silence for `noise`).
pub fn class_windows(model: &ModelSpec, class: &str, windows: usize) -> Vec<i16> {
    let n = windows * model.window_samples;
    match detector_tone_hz(model, class) {
        Some(f) => tone(f, n, model.sample_rate_hz, TONE_AMPLITUDE),
        None => vec![0; n],
    }
}

/// Concatenates `(class, windows)` segments into one stream at the model rate.
pub fn pattern_stream(model: &ModelSpec, segments: &[(&str, usize)]) -> AudioStream {
    let samples = segments
        .iter()
        .flat_map(|(class, n)| class_windows(model, class, *n))
        .collect();
    AudioStream::new(samples, model.sample_rate_hz)
}
