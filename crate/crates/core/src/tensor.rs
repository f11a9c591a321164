//! Channel-major activation storage.

use crate::error::{Error, Result};

/// A `channels x length` block of `f32` samples stored channel-major:
/// all samples of channel 0, then channel 1, and so on.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarTensor {
    channels: usize,
    length: usize,
    values: Vec<f32>,
}

impl PlanarTensor {
    pub fn new(channels: usize, length: usize, values: Vec<f32>) -> Result<Self> {
        if channels == 0 {
            return Err(Error::InvalidModel(
                "tensor must have at least one channel".into(),
            ));
        }
        if values.len() != channels * length {
            return Err(Error::InvalidModel(format!(
                "tensor of {channels}x{length} needs {} values, got {}",
                channels * length,
                values.len()
            )));
        }
        Ok(Self {
            channels,
            length,
            values,
        })
    }

    pub fn zeros(channels: usize, length: usize) -> Self {
        assert!(channels > 0, "tensor must have at least one channel");
        Self {
            channels,
            length,
            values: vec![0.0; channels * length],
        }
    }

    /// Single-channel tensor holding `samples`.
    pub fn mono(samples: Vec<f32>) -> Self {
        Self {
            channels: 1,
            length: samples.len(),
            values: samples,
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.length
    }

    pub fn is_empty(&self) -> bool {
        self.length == 0
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        &self.values[c * self.length..(c + 1) * self.length]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f32] {
        &mut self.values[c * self.length..(c + 1) * self.length]
    }

    /// Copy of positions `start..=end` of every channel.
    pub fn slice_positions(&self, start: usize, end: usize) -> PlanarTensor {
        assert!(start <= end && end < self.length, "slice out of bounds");
        let len = end - start + 1;
        let mut values = Vec::with_capacity(self.channels * len);
        for c in 0..self.channels {
            values.extend_from_slice(&self.channel(c)[start..=end]);
        }
        PlanarTensor {
            channels: self.channels,
            length: len,
            values,
        }
    }

    /// Writes `part` into positions starting at `offset`, channel by channel.
    pub fn write_positions(&mut self, offset: usize, part: &PlanarTensor) {
        assert_eq!(self.channels, part.channels, "channel count differs");
        assert!(offset + part.length <= self.length, "write out of bounds");
        for c in 0..self.channels {
            self.channel_mut(c)[offset..offset + part.length].copy_from_slice(part.channel(c));
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}
