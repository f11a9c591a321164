//! Strict reader and writer for the WAV subset the pipeline consumes:
//! RIFF/WAVE, PCM format tag 1, 16-bit, mono, little-endian.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::stream::AudioStream;

const RIFF: &[u8; 4] = b"RIFF";
const WAVE: &[u8; 4] = b"WAVE";
const FMT: &[u8; 4] = b"fmt ";
const DATA: &[u8; 4] = b"data";
const FORMAT_PCM: u16 = 1;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WavError {
    #[error("not a RIFF file")]
    NotRiff,
    #[error("RIFF file is not WAVE")]
    NotWave,
    #[error("truncated header: {0}")]
    TruncatedHeader(&'static str),
    #[error("missing {0} chunk")]
    MissingChunk(&'static str),
    #[error("fmt chunk too small ({0} bytes, need 16)")]
    FmtTooSmall(u32),
    #[error("unsupported format tag {0:#06x}: only integer PCM (1) is accepted")]
    NotPcm(u16),
    #[error("mono required: file has {0} channels")]
    MonoRequired(u16),
    #[error("16-bit samples required: file has {0} bits per sample")]
    BitDepth(u16),
    #[error("invalid sample rate {0}")]
    SampleRate(u32),
    #[error("inconsistent fmt chunk: block_align {block_align}, byte_rate {byte_rate}")]
    InconsistentFmt { block_align: u16, byte_rate: u32 },
    #[error("data chunk size {0} is not a whole number of 16-bit samples")]
    OddDataSize(u32),
    #[error("truncated data chunk: header declares {expected} bytes, file holds {actual}")]
    TruncatedData { expected: u64, actual: u64 },
}

/// Decoded audio plus the header fields it was validated against.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WavClip {
    pub stream: AudioStream,
    pub sample_rate_hz: u32,
    pub bits_per_sample: u16,
    pub channels: u16,
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

struct Fmt {
    channels: u16,
    sample_rate: u32,
    bits: u16,
}

fn parse_fmt(body: &[u8], declared: u32) -> Result<Fmt, WavError> {
    if body.len() < 16 {
        return Err(WavError::FmtTooSmall(declared));
    }
    let tag = u16_at(body, 0);
    let channels = u16_at(body, 2);
    let sample_rate = u32_at(body, 4);
    let byte_rate = u32_at(body, 8);
    let block_align = u16_at(body, 12);
    let bits = u16_at(body, 14);
    if tag != FORMAT_PCM {
        return Err(WavError::NotPcm(tag));
    }
    if channels != 1 {
        return Err(WavError::MonoRequired(channels));
    }
    if bits != 16 {
        return Err(WavError::BitDepth(bits));
    }
    if sample_rate == 0 {
        return Err(WavError::SampleRate(sample_rate));
    }
    if block_align != 2 || byte_rate != sample_rate.wrapping_mul(2) {
        return Err(WavError::InconsistentFmt {
            block_align,
            byte_rate,
        });
    }
    Ok(Fmt {
        channels,
        sample_rate,
        bits,
    })
}

/// Parses an in-memory WAV file.
pub fn parse_wav(bytes: &[u8]) -> Result<WavClip, WavError> {
    if bytes.len() < 12 {
        return Err(WavError::TruncatedHeader("RIFF header needs 12 bytes"));
    }
    if &bytes[0..4] != RIFF {
        return Err(WavError::NotRiff);
    }
    if &bytes[8..12] != WAVE {
        return Err(WavError::NotWave);
    }

    let mut fmt: Option<Fmt> = None;
    let mut pos = 12usize;
    loop {
        if bytes.len() - pos < 8 {
            return Err(if fmt.is_none() {
                WavError::MissingChunk("fmt")
            } else {
                WavError::MissingChunk("data")
            });
        }
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4);
        let body_start = pos + 8;
        let available = (bytes.len() - body_start) as u64;

        if id == DATA {
            let fmt = fmt.ok_or(WavError::MissingChunk("fmt"))?;
            if !size.is_multiple_of(2) {
                return Err(WavError::OddDataSize(size));
            }
            if (size as u64) > available {
                return Err(WavError::TruncatedData {
                    expected: size as u64,
                    actual: available,
                });
            }
            let body = &bytes[body_start..body_start + size as usize];
            let samples = body
                .chunks_exact(2)
                .map(|c| i16::from_le_bytes([c[0], c[1]]))
                .collect();
            return Ok(WavClip {
                stream: AudioStream::new(samples, fmt.sample_rate),
                sample_rate_hz: fmt.sample_rate,
                bits_per_sample: fmt.bits,
                channels: fmt.channels,
            });
        }

        if (size as u64) > available {
            return Err(WavError::TruncatedHeader("chunk extends past end of file"));
        }
        let body = &bytes[body_start..body_start + size as usize];
        if id == FMT {
            fmt = Some(parse_fmt(body, size)?);
        }
        // chunks are padded to even length
        pos = body_start + size as usize + (size as usize & 1);
        if pos > bytes.len() {
            return Err(WavError::TruncatedHeader("chunk padding past end of file"));
        }
    }
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<WavClip> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let clip = parse_wav(&bytes)?;
    if clip.sample_rate_hz != crate::nn::DEFAULT_SAMPLE_RATE_HZ {
        log::warn!(
            "{}: sample rate {} Hz (expected {} Hz)",
            path.display(),
            clip.sample_rate_hz,
            crate::nn::DEFAULT_SAMPLE_RATE_HZ
        );
    }
    Ok(clip)
}

/// Canonical 44-byte-header encoding of a mono 16-bit stream.
pub fn encode_wav(stream: &AudioStream) -> Vec<u8> {
    let data_len = (stream.samples.len() * 2) as u32;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(RIFF);
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(WAVE);
    out.extend_from_slice(FMT);
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&stream.sample_rate_hz.to_le_bytes());
    out.extend_from_slice(&(stream.sample_rate_hz * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(DATA);
    out.extend_from_slice(&data_len.to_le_bytes());
    for s in &stream.samples {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

pub fn write_wav(path: impl AsRef<Path>, stream: &AudioStream) -> Result<()> {
    write_atomic(path.as_ref(), &encode_wav(stream))
}

/// Writes through a temporary file in the destination directory, then renames.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
