//! Receptive-field algebra, tile plans and activation-memory accounting.
//!
//! Tiled execution splits the final conv output into contiguous slices,
//! maps each slice back through the stack to the input samples it depends
//! on, and runs the whole stack once per slice. Halo samples shared by
//! neighbouring slices are recomputed, never cached.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::nn::{
    classify_features, conv1d_forward, Classification, ConvLayerSpec, ModelSpec, BYTES_PER_VALUE,
};
use crate::tensor::PlanarTensor;

/// Inclusive index range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IndexRange {
    pub start: usize,
    pub end: usize,
}

impl IndexRange {
    pub fn new(start: usize, end: usize) -> Self {
        assert!(start <= end, "range start {start} after end {end}");
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, i: usize) -> bool {
        self.start <= i && i <= self.end
    }
}

impl std::fmt::Display for IndexRange {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{},{}]", self.start, self.end)
    }
}

/// Input positions a layer reads to produce `out_range`.
pub fn layer_receptive_range(out_range: IndexRange, layer: &ConvLayerSpec) -> IndexRange {
    IndexRange {
        start: out_range.start * layer.stride,
        end: out_range.end * layer.stride + (layer.kernel - 1) * layer.dilation,
    }
}

/// Input positions the whole stack reads to produce `out_range` of its last layer.
pub fn stack_receptive_range(out_range: IndexRange, conv_layers: &[ConvLayerSpec]) -> IndexRange {
    conv_layers
        .iter()
        .rev()
        .fold(out_range, layer_receptive_range)
}

/// Geometry a plan was built against; used to detect stale plans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LayerGeometry {
    pub kernel: usize,
    pub stride: usize,
    pub dilation: usize,
    pub out_channels: usize,
}

impl From<&ConvLayerSpec> for LayerGeometry {
    fn from(l: &ConvLayerSpec) -> Self {
        Self {
            kernel: l.kernel,
            stride: l.stride,
            dilation: l.dilation,
            out_channels: l.out_channels,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TileSlice {
    pub out_range: IndexRange,
    pub in_range: IndexRange,
    /// Output range of every conv layer, first layer first; the last entry equals `out_range`.
    pub per_layer_ranges: Vec<IndexRange>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TilePlan {
    pub n_slices: usize,
    pub window_samples: usize,
    pub final_length: usize,
    pub geometry: Vec<LayerGeometry>,
    pub slices: Vec<TileSlice>,
}

impl TilePlan {
    fn check_matches(&self, model: &ModelSpec) -> Result<()> {
        let geometry: Vec<LayerGeometry> = model.conv_layers.iter().map(Into::into).collect();
        if geometry != self.geometry {
            return Err(Error::StalePlan(
                "conv geometry differs from the model".into(),
            ));
        }
        if self.window_samples != model.window_samples {
            return Err(Error::StalePlan(format!(
                "plan built for {}-sample windows, model uses {}",
                self.window_samples, model.window_samples
            )));
        }
        Ok(())
    }
}

/// Splits the final conv output into `n_slices` near-equal slices, the
/// earliest slices taking the remainder.
pub fn make_tile_plan(model: &ModelSpec, n_slices: usize) -> Result<TilePlan> {
    let lengths = model.layer_output_lengths()?;
    let final_length = lengths.last().copied().unwrap_or(model.window_samples);
    if n_slices == 0 || n_slices > final_length {
        return Err(Error::InvalidSliceCount {
            requested: n_slices,
            max: final_length,
        });
    }
    let base = final_length / n_slices;
    let remainder = final_length % n_slices;
    let mut slices = Vec::with_capacity(n_slices);
    let mut start = 0;
    for s in 0..n_slices {
        let len = base + usize::from(s < remainder);
        let out_range = IndexRange::new(start, start + len - 1);
        start += len;

        let mut per_layer_ranges = vec![out_range; model.conv_layers.len()];
        let mut r = out_range;
        for (i, layer) in model.conv_layers.iter().enumerate().rev() {
            per_layer_ranges[i] = r;
            if r.end >= lengths[i] {
                return Err(Error::Internal(format!(
                    "slice {s}: layer {i} range {r} exceeds output length {}",
                    lengths[i]
                )));
            }
            r = layer_receptive_range(r, layer);
        }
        // valid padding keeps the receptive range inside the window
        if r.end >= model.window_samples {
            return Err(Error::Internal(format!(
                "slice {s}: input range {r} exceeds window of {} samples",
                model.window_samples
            )));
        }
        slices.push(TileSlice {
            out_range,
            in_range: r,
            per_layer_ranges,
        });
    }
    Ok(TilePlan {
        n_slices,
        window_samples: model.window_samples,
        final_length,
        geometry: model.conv_layers.iter().map(Into::into).collect(),
        slices,
    })
}

/// Runs the conv stack slice by slice, concatenates the final outputs and
/// classifies once. Bit-identical to [`crate::nn::model_forward`].
pub fn tiled_forward(
    window: &PlanarTensor,
    model: &ModelSpec,
    plan: &TilePlan,
) -> Result<Classification> {
    plan.check_matches(model)?;
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
    let features = tiled_conv_stack(window, model, plan)?;
    classify_features(&features, model)
}

/// Final conv output assembled from per-slice executions.
pub fn tiled_conv_stack(
    window: &PlanarTensor,
    model: &ModelSpec,
    plan: &TilePlan,
) -> Result<PlanarTensor> {
    plan.check_matches(model)?;
    let mut concat = PlanarTensor::zeros(model.final_channels(), plan.final_length);
    for slice in &plan.slices {
        let mut x = window.slice_positions(slice.in_range.start, slice.in_range.end);
        for (layer, range) in model.conv_layers.iter().zip(&slice.per_layer_ranges) {
            x = conv1d_forward(&x, layer)?;
            if x.len() < range.len() {
                return Err(Error::Internal(format!(
                    "slice produced {} positions, plan expects {}",
                    x.len(),
                    range.len()
                )));
            }
            if x.len() > range.len() {
                x = x.slice_positions(0, range.len() - 1);
            }
        }
        concat.write_positions(slice.out_range.start, &x);
    }
    Ok(concat)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MemoryStep {
    pub label: String,
    pub live_bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MemoryReport {
    pub steps: Vec<MemoryStep>,
    pub peak_bytes: usize,
    pub assumptions: String,
}

const BUFFER_MODEL: &str =
    "f32 activations (4 bytes/element); a buffer is live from the start of the \
layer producing it until its last consumer finishes, so each layer's input and output coexist; \
the standardized input window (or slice) is an activation buffer; weights live in flash and are \
not counted; the raw acquisition buffer is not counted; tiled runs keep one concatenation buffer \
for the final conv output live throughout and free per-slice buffers between slices";

impl MemoryReport {
    fn from_steps(steps: Vec<MemoryStep>) -> Self {
        let peak_bytes = steps.iter().map(|s| s.live_bytes).max().unwrap_or(0);
        Self {
            steps,
            peak_bytes,
            assumptions: BUFFER_MODEL.to_string(),
        }
    }
}

/// Simulates activation-buffer lifetimes for a monolithic run (`plan = None`)
/// or a tiled run.
pub fn peak_activation_bytes(model: &ModelSpec, plan: Option<&TilePlan>) -> Result<MemoryReport> {
    let lengths = model.layer_output_lengths()?;
    let bytes = |elements: usize| elements * BYTES_PER_VALUE;
    let mut steps = Vec::new();
    let n_classes = model.dense.out_features;

    match plan {
        None => {
            let mut in_elems = model.window_samples;
            steps.push(MemoryStep {
                label: "input".into(),
                live_bytes: bytes(in_elems),
            });
            for (i, (layer, &len)) in model.conv_layers.iter().zip(&lengths).enumerate() {
                let out_elems = layer.out_channels * len;
                steps.push(MemoryStep {
                    label: format!("conv{}", i + 1),
                    live_bytes: bytes(in_elems + out_elems),
                });
                in_elems = out_elems;
            }
            steps.push(MemoryStep {
                label: "dense".into(),
                live_bytes: bytes(in_elems + n_classes),
            });
        }
        Some(plan) => {
            plan.check_matches(model)?;
            let concat = model.final_channels() * plan.final_length;
            for (s, slice) in plan.slices.iter().enumerate() {
                let mut in_elems = slice.in_range.len();
                steps.push(MemoryStep {
                    label: format!("slice{s}/input"),
                    live_bytes: bytes(concat + in_elems),
                });
                for (i, (layer, range)) in model
                    .conv_layers
                    .iter()
                    .zip(&slice.per_layer_ranges)
                    .enumerate()
                {
                    let out_elems = layer.out_channels * range.len();
                    steps.push(MemoryStep {
                        label: format!("slice{s}/conv{}", i + 1),
                        live_bytes: bytes(concat + in_elems + out_elems),
                    });
                    in_elems = out_elems;
                }
            }
            steps.push(MemoryStep {
                label: "dense".into(),
                live_bytes: bytes(concat + n_classes),
            });
        }
    }
    Ok(MemoryReport::from_steps(steps))
}

/// Smallest slice count whose tiled peak fits `budget_bytes`, scanning 1, 2, ….
pub fn smallest_slice_count_within(
    model: &ModelSpec,
    budget_bytes: usize,
) -> Result<Option<(TilePlan, MemoryReport)>> {
    let final_length = model.final_length()?;
    for n in 1..=final_length {
        let plan = make_tile_plan(model, n)?;
        let report = peak_activation_bytes(model, Some(&plan))?;
        if report.peak_bytes <= budget_bytes {
            return Ok(Some((plan, report)));
        }
    }
    Ok(None)
}
