//! Smart passive acoustic monitoring at desk scale.
//!
//! A raw-waveform 1D-CNN classifier ([`nn`]), a tiled execution planner that
//! bounds peak activation memory ([`tiler`]), a streaming runtime with the
//! detection-triggered (F1) and analyse-and-record (F2) behaviours
//! ([`stream`]), and a device simulator for ping-pong acquisition, deadlines
//! and energy ([`sim`]). Model files, WAV input, profiles and fixtures live
//! in [`model_file`], [`wav`], [`config`] and [`fixture`].
//!
//! All convolutions use valid padding and `f32` arithmetic with a fixed
//! accumulation order, so tiled and monolithic execution agree bit for bit.
//!
//! Runnable examples, one per capability, live in `examples/`:
//!
//! ```bash
//! cargo run -p smartpam --example forward_pass
//! cargo run -p smartpam --example tile_plan
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod fixture;
pub mod model_file;
pub mod nn;
pub mod sim;
pub mod stream;
pub mod tensor;
pub mod tiler;
pub mod wav;

pub use error::{Error, Result};
pub use nn::{
    conv1d_forward, dense_forward, model_forward, model_size_bytes, output_length, param_count,
    softmax, Activation, Classification, ConvLayerSpec, DenseSpec, ModelSpec, ParamCount,
};
pub use sim::{
    cycle_energy_mj, deadline_check, shunt_current_ma, simulate, DeviceProfile, Mode, SimReport,
    TimingModel,
};
pub use stream::{
    analyse_and_record, detection_cycle, standardize_window, trigger_decision, windows,
    AudioStream, DetectionConfig, DetectionOutcome, WindowRecord,
};
pub use tensor::PlanarTensor;
pub use tiler::{
    layer_receptive_range, make_tile_plan, peak_activation_bytes, stack_receptive_range,
    tiled_forward, IndexRange, MemoryReport, TilePlan,
};
