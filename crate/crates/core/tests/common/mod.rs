//! Shared test helpers: seeded random models and a reference forward pass
//! written independently of the library kernels.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use smartpam::nn::{output_length, Activation, ConvLayerSpec, DenseSpec, ModelSpec};

pub struct RandomArch {
    pub max_layers: usize,
    pub max_channels: usize,
    pub max_kernel: usize,
    pub max_stride: usize,
    pub max_dilation: usize,
    pub max_window: usize,
}

/// Random valid model; weights in [-0.5, 0.5] unless `positive`, in which
/// case weights and biases are in [0.1, 1.0] and activations are ReLU.
pub fn random_model(rng: &mut ChaCha8Rng, arch: &RandomArch, positive: bool) -> ModelSpec {
    loop {
        let n_layers = rng.gen_range(1..=arch.max_layers);
        let mut layers = Vec::new();
        let mut channels = 1;
        for _ in 0..n_layers {
            let out = rng.gen_range(1..=arch.max_channels);
            let act = if positive || rng.gen_bool(0.7) {
                Activation::Relu
            } else {
                Activation::None
            };
            let mut l = ConvLayerSpec::zeros(
                channels,
                out,
                rng.gen_range(1..=arch.max_kernel),
                rng.gen_range(1..=arch.max_stride),
                rng.gen_range(1..=arch.max_dilation),
                act,
            );
            let (lo, hi) = if positive { (0.1, 1.0) } else { (-0.5, 0.5) };
            l.weights
                .iter_mut()
                .for_each(|w| *w = rng.gen_range(lo..=hi));
            l.bias.iter_mut().for_each(|b| *b = rng.gen_range(lo..=hi));
            channels = out;
            layers.push(l);
        }
        // smallest window that survives the stack
        let min_window = layers
            .iter()
            .rev()
            .fold(1, |need, l| (need - 1) * l.stride + l.effective_extent());
        if min_window > arch.max_window {
            continue;
        }
        // log-uniform, so short and long windows are both common
        let log_w = rng.gen_range((min_window as f64).ln()..=(arch.max_window as f64).ln());
        let window = (log_w.exp().round() as usize).clamp(min_window, arch.max_window);
        let mut len = window;
        for l in &layers {
            len = output_length(len, l).unwrap();
        }
        let mut dense = DenseSpec::zeros(len * channels, 4);
        dense
            .weights
            .iter_mut()
            .for_each(|w| *w = rng.gen_range(-0.5..=0.5));
        dense
            .bias
            .iter_mut()
            .for_each(|b| *b = rng.gen_range(-0.5..=0.5));
        return ModelSpec::new(layers, dense, ModelSpec::default_labels(), window, 24_000).unwrap();
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_window(rng: &mut ChaCha8Rng, len: usize) -> Vec<f32> {
    (0..len).map(|_| rng.gen_range(-2.0f32..=2.0)).collect()
}

#[allow(clippy::needless_range_loop)]
/// Straightforward nested-loop conv stack in f64, indexed `[channel][position]`.
pub fn reference_conv_stack(model: &ModelSpec, window: &[f64]) -> Vec<Vec<f64>> {
    let mut x = vec![window.to_vec()];
    for l in &model.conv_layers {
        let in_len = x[0].len();
        let ext = (l.kernel - 1) * l.dilation + 1;
        let out_len = (in_len - ext) / l.stride + 1;
        let mut y = vec![vec![0.0; out_len]; l.out_channels];
        for oc in 0..l.out_channels {
            for i in 0..out_len {
                let mut s = l.bias[oc] as f64;
                for ic in 0..l.in_channels {
                    for t in 0..l.kernel {
                        let w = l.weights[oc * l.in_channels * l.kernel + ic * l.kernel + t] as f64;
                        s += w * x[ic][i * l.stride + t * l.dilation];
                    }
                }
                y[oc][i] = match l.activation {
                    Activation::Relu => s.max(0.0),
                    Activation::None => s,
                };
            }
        }
        x = y;
    }
    x
}

/// Reference probabilities: conv stack, channel-major flatten, dense, softmax.
pub fn reference_forward(model: &ModelSpec, window: &[f64]) -> Vec<f64> {
    let feats: Vec<f64> = reference_conv_stack(model, window).concat();
    let d = &model.dense;
    let logits: Vec<f64> = (0..d.out_features)
        .map(|j| {
            d.bias[j] as f64
                + (0..d.in_features)
                    .map(|i| d.weights[j * d.in_features + i] as f64 * feats[i])
                    .sum::<f64>()
        })
        .collect();
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

/// Dependency tracing: the final-output positions (any channel) that change
/// when input sample `p` is perturbed.
pub fn traced_outputs(model: &ModelSpec, window: &[f64], p: usize) -> Vec<usize> {
    let base = reference_conv_stack(model, window);
    let mut w = window.to_vec();
    w[p] += 1.0;
    let pert = reference_conv_stack(model, &w);
    (0..base[0].len())
        .filter(|&o| (0..base.len()).any(|c| base[c][o] != pert[c][o]))
        .collect()
}
