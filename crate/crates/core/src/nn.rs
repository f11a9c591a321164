//! Forward-pass engine for the raw-audio 1D-CNN family and its architecture
//! arithmetic.
//!
//! All convolutions use VALID padding: an output position exists only where
//! every dilated tap lands inside the input. Every length, receptive-field
//! and memory computation in this crate relies on that convention.
//!
//! Arithmetic is `f32` with a fixed accumulation order (bias first, then
//! input channels outer, taps inner), so a convolution evaluated on a
//! sub-window produces bit-identical values to the same positions of the
//! full evaluation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::PlanarTensor;

pub const DEFAULT_CLASS_LABELS: [&str; 4] = ["male", "female", "chick", "noise"];
pub const DEFAULT_SAMPLE_RATE_HZ: u32 = 24_000;
/// Bytes per stored parameter and per activation element.
pub const BYTES_PER_VALUE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    None,
}

impl Activation {
    #[inline]
    fn apply(self, v: f32) -> f32 {
        match self {
            Activation::Relu => v.max(0.0),
            Activation::None => v,
        }
    }
}

/// One 1D convolution. `weights` is laid out `[out_channels][in_channels][kernel]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayerSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub dilation: usize,
    pub weights: Vec<f32>,
    pub bias: Vec<f32>,
    pub activation: Activation,
}

impl ConvLayerSpec {
    /// Zero-initialised layer with the given geometry.
    pub fn zeros(
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        dilation: usize,
        activation: Activation,
    ) -> Self {
        Self {
            in_channels,
            out_channels,
            kernel,
            stride,
            dilation,
            weights: vec![0.0; out_channels * in_channels * kernel],
            bias: vec![0.0; out_channels],
            activation,
        }
    }

    /// Span of input samples covered by one output: `(kernel - 1) * dilation + 1`.
    pub fn effective_extent(&self) -> usize {
        (self.kernel - 1) * self.dilation + 1
    }

    #[inline]
    pub fn weight(&self, out_c: usize, in_c: usize, tap: usize) -> f32 {
        self.weights[(out_c * self.in_channels + in_c) * self.kernel + tap]
    }

    pub fn param_count(&self) -> usize {
        self.out_channels * self.in_channels * self.kernel + self.out_channels
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_channels == 0 || self.out_channels == 0 {
            return Err(Error::InvalidModel(
                "conv layer channel counts must be positive".into(),
            ));
        }
        if self.kernel == 0 || self.stride == 0 || self.dilation == 0 {
            return Err(Error::InvalidModel(
                "conv kernel, stride and dilation must be positive".into(),
            ));
        }
        let expected = self.out_channels * self.in_channels * self.kernel;
        if self.weights.len() != expected {
            return Err(Error::InvalidModel(format!(
                "conv weights hold {} values, shape needs {expected}",
                self.weights.len()
            )));
        }
        if self.bias.len() != self.out_channels {
            return Err(Error::InvalidModel(format!(
                "conv bias holds {} values, expected {}",
                self.bias.len(),
                self.out_channels
            )));
        }
        Ok(())
    }
}

/// Fully connected head. `weights` is laid out `[out_features][in_features]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSpec {
    pub in_features: usize,
    pub out_features: usize,
    pub weights: Vec<f32>,
    pub bias: Vec<f32>,
}

impl DenseSpec {
    pub fn zeros(in_features: usize, out_features: usize) -> Self {
        Self {
            in_features,
            out_features,
            weights: vec![0.0; in_features * out_features],
            bias: vec![0.0; out_features],
        }
    }

    pub fn param_count(&self) -> usize {
        self.out_features * self.in_features + self.out_features
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_features == 0 || self.out_features == 0 {
            return Err(Error::InvalidModel(
                "dense feature counts must be positive".into(),
            ));
        }
        if self.weights.len() != self.in_features * self.out_features {
            return Err(Error::InvalidModel(format!(
                "dense weights hold {} values, shape needs {}",
                self.weights.len(),
                self.in_features * self.out_features
            )));
        }
        if self.bias.len() != self.out_features {
            return Err(Error::InvalidModel(format!(
                "dense bias holds {} values, expected {}",
                self.bias.len(),
                self.out_features
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub conv_layers: Vec<ConvLayerSpec>,
    pub dense: DenseSpec,
    pub class_labels: Vec<String>,
    pub window_samples: usize,
    pub sample_rate_hz: u32,
}

impl ModelSpec {
    /// Builds and validates a model.
    pub fn new(
        conv_layers: Vec<ConvLayerSpec>,
        dense: DenseSpec,
        class_labels: Vec<String>,
        window_samples: usize,
        sample_rate_hz: u32,
    ) -> Result<Self> {
        let model = Self {
            conv_layers,
            dense,
            class_labels,
            window_samples,
            sample_rate_hz,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn default_labels() -> Vec<String> {
        DEFAULT_CLASS_LABELS.iter().map(|s| s.to_string()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_samples == 0 {
            return Err(Error::InvalidModel(
                "window_samples must be positive".into(),
            ));
        }
        if self.sample_rate_hz == 0 {
            return Err(Error::InvalidModel(
                "sample_rate_hz must be positive".into(),
            ));
        }
        let mut channels = 1;
        for (i, layer) in self.conv_layers.iter().enumerate() {
            layer.validate()?;
            if layer.in_channels != channels {
                return Err(Error::InvalidModel(format!(
                    "conv layer {i} expects {} input channels, previous stage produces {channels}",
                    layer.in_channels
                )));
            }
            channels = layer.out_channels;
        }
        self.dense.validate()?;
        let lengths = self.layer_output_lengths()?;
        let final_len = lengths.last().copied().unwrap_or(self.window_samples);
        if self.dense.in_features != final_len * channels {
            return Err(Error::InvalidModel(format!(
                "dense expects {} features, conv stack produces {} ({channels} x {final_len})",
                self.dense.in_features,
                final_len * channels
            )));
        }
        if self.dense.out_features != self.class_labels.len() {
            return Err(Error::InvalidModel(format!(
                "dense produces {} outputs for {} class labels",
                self.dense.out_features,
                self.class_labels.len()
            )));
        }
        Ok(())
    }

    /// Output length of every conv layer for this model's window.
    pub fn layer_output_lengths(&self) -> Result<Vec<usize>> {
        let mut len = self.window_samples;
        self.conv_layers
            .iter()
            .map(|layer| {
                len = output_length(len, layer)?;
                Ok(len)
            })
            .collect()
    }

    /// Length of the final conv output (the window itself when there are no conv layers).
    pub fn final_length(&self) -> Result<usize> {
        Ok(self
            .layer_output_lengths()?
            .last()
            .copied()
            .unwrap_or(self.window_samples))
    }

    pub fn final_channels(&self) -> usize {
        self.conv_layers.last().map_or(1, |l| l.out_channels)
    }

    pub fn window_ms(&self) -> f64 {
        self.window_samples as f64 / self.sample_rate_hz as f64 * 1000.0
    }

    pub fn label(&self, class: usize) -> &str {
        &self.class_labels[class]
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.class_labels.iter().position(|l| l == label)
    }
}

/// Output length of a valid-padded convolution.
pub fn output_length(in_length: usize, layer: &ConvLayerSpec) -> Result<usize> {
    let extent = layer.effective_extent();
    if in_length < extent {
        return Err(Error::WindowTooShort { in_length, extent });
    }
    Ok((in_length - extent) / layer.stride + 1)
}

/// Valid-padded dilated, strided convolution followed by the layer activation.
pub fn conv1d_forward(input: &PlanarTensor, layer: &ConvLayerSpec) -> Result<PlanarTensor> {
    layer.validate()?;
    if input.channels() != layer.in_channels {
        return Err(Error::ChannelMismatch {
            expected: layer.in_channels,
            actual: input.channels(),
        });
    }
    let out_len = output_length(input.len(), layer)?;
    let mut out = PlanarTensor::zeros(layer.out_channels, out_len);
    for oc in 0..layer.out_channels {
        let bias = layer.bias[oc];
        let row = out.channel_mut(oc);
        for (i, slot) in row.iter_mut().enumerate() {
            let base = i * layer.stride;
            let mut acc = bias;
            for ic in 0..layer.in_channels {
                let x = input.channel(ic);
                let w =
                    &layer.weights[(oc * layer.in_channels + ic) * layer.kernel..][..layer.kernel];
                for (t, &wt) in w.iter().enumerate() {
                    acc += wt * x[base + t * layer.dilation];
                }
            }
            *slot = layer.activation.apply(acc);
        }
    }
    Ok(out)
}

/// Affine head; no activation.
pub fn dense_forward(input: &[f32], dense: &DenseSpec) -> Result<Vec<f32>> {
    dense.validate()?;
    if input.len() != dense.in_features {
        return Err(Error::FeatureCountMismatch {
            expected: dense.in_features,
            actual: input.len(),
        });
    }
    Ok(dense
        .weights
        .chunks_exact(dense.in_features)
        .zip(&dense.bias)
        .map(|(row, &b)| row.iter().zip(input).fold(b, |acc, (&w, &x)| acc + w * x))
        .collect())
}

/// Numerically safe softmax (max-subtracted).
pub fn softmax(logits: &[f32]) -> Vec<f32> {
    let max = logits.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let exps: Vec<f64> = logits.iter().map(|&v| ((v - max) as f64).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|&e| (e / sum) as f32).collect()
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Runs every conv layer in order.
pub fn conv_stack_forward(window: &PlanarTensor, layers: &[ConvLayerSpec]) -> Result<PlanarTensor> {
    let mut x = window.clone();
    for layer in layers {
        x = conv1d_forward(&x, layer)?;
    }
    Ok(x)
}

/// Result of classifying one window.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub probabilities: Vec<f32>,
    pub class_index: usize,
    pub label: String,
}

/// Dense + softmax over an already-computed final conv output.
pub fn classify_features(features: &PlanarTensor, model: &ModelSpec) -> Result<Classification> {
    let logits = dense_forward(features.values(), &model.dense)?;
    let probabilities = softmax(&logits);
    let class_index = argmax(&probabilities);
    Ok(Classification {
        label: model.label(class_index).to_string(),
        probabilities,
        class_index,
    })
}

/// Monolithic forward pass over one standardized window.
pub fn model_forward(window: &PlanarTensor, model: &ModelSpec) -> Result<Classification> {
    if window.channels() != 1 {
        return Err(Error::ChannelMismatch {
            expected: 1,
            actual: window.channels(),
        });
    }
    if window.len() != model.window_samples {
        return Err(Error::FeatureCountMismatch {
            expected: model.window_samples,
            actual: window.len(),
        });
    }
    let features = conv_stack_forward(window, &model.conv_layers)?;
    classify_features(&features, model)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ParamCount {
    pub conv: usize,
    pub dense: usize,
    pub total: usize,
}

pub fn param_count(model: &ModelSpec) -> ParamCount {
    let conv = model
        .conv_layers
        .iter()
        .map(ConvLayerSpec::param_count)
        .sum();
    let dense = model.dense.param_count();
    ParamCount {
        conv,
        dense,
        total: conv + dense,
    }
}

/// Storage size with 32-bit parameters.
pub fn model_size_bytes(model: &ModelSpec) -> usize {
    param_count(model).total * BYTES_PER_VALUE
}
