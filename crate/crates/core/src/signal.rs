//! Audio buffers, WAV I/O, resampling and framing.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use crate::{Error, Real, Result};

/// The rate the network operates at.
pub const MODEL_RATE: u32 = 16_000;
/// Samples per network input frame.
pub const FRAME_LEN: usize = 1024;
/// 10 ms at 16 kHz.
pub const DEFAULT_HOP: usize = 160;

/// Mono audio.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidArgument("sample rate must be positive".into()));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("samples must be finite".into()));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Mean square amplitude.
    pub fn power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>() / self.len() as f64
    }
}

// ---------------------------------------------------------------------------
// WAV

const FORMAT_PCM: u16 = 1;
const FORMAT_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

#[derive(Debug, Clone, Copy)]
struct FmtChunk {
    format: u16,
    channels: u16,
    sample_rate: u32,
    bits: u16,
}

fn le_u16(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn le_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Reads a PCM16 or float32 RIFF/WAVE file with one or two channels.
/// Stereo is downmixed by averaging the channels.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioBuffer> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_wav(&bytes)
}

pub fn parse_wav(bytes: &[u8]) -> Result<AudioBuffer> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::NotWav("missing RIFF/WAVE header".into()));
    }
    let mut fmt: Option<FmtChunk> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = le_u32(bytes, pos + 4) as usize;
        let body = pos + 8;
        match id {
            b"fmt " => {
                if size < 16 || body + 16 > bytes.len() {
                    return Err(Error::NotWav("fmt chunk too short".into()));
                }
                let mut format = le_u16(bytes, body);
                if format == FORMAT_EXTENSIBLE && size >= 40 && body + 26 <= bytes.len() {
                    // first two bytes of the sub-format GUID carry the codec
                    format = le_u16(bytes, body + 24);
                }
                fmt = Some(FmtChunk {
                    format,
                    channels: le_u16(bytes, body + 2),
                    sample_rate: le_u32(bytes, body + 4),
                    bits: le_u16(bytes, body + 14),
                });
            }
            b"data" => {
                let fmt = fmt.ok_or_else(|| Error::NotWav("data chunk before fmt chunk".into()))?;
                let available = bytes.len() - body;
                if size > available {
                    return Err(Error::TruncatedData {
                        expected: size,
                        found: available,
                    });
                }
                return decode_samples(fmt, &bytes[body..body + size]);
            }
            _ => {}
        }
        pos = body + size + (size & 1);
    }
    match fmt {
        None => Err(Error::NotWav("no fmt chunk".into())),
        Some(_) => Err(Error::NotWav("no data chunk".into())),
    }
}

fn decode_samples(fmt: FmtChunk, data: &[u8]) -> Result<AudioBuffer> {
    let bytes_per_sample = match (fmt.format, fmt.bits) {
        (FORMAT_PCM, 16) => 2,
        (FORMAT_FLOAT, 32) => 4,
        (f, b) => {
            return Err(Error::UnsupportedCodec(format!(
                "format code {f} with {b} bits per sample"
            )))
        }
    };
    if !(1..=2).contains(&fmt.channels) {
        return Err(Error::UnsupportedCodec(format!("{} channels", fmt.channels)));
    }
    if fmt.sample_rate == 0 {
        return Err(Error::NotWav("zero sample rate".into()));
    }
    let channels = fmt.channels as usize;
    let block = bytes_per_sample * channels;
    if data.len() % block != 0 {
        return Err(Error::TruncatedData {
            expected: data.len().div_ceil(block) * block,
            found: data.len(),
        });
    }
    let decode = |chunk: &[u8]| -> f32 {
        if bytes_per_sample == 2 {
            i16::from_le_bytes([chunk[0], chunk[1]]) as f32 / 32768.0
        } else {
            f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]])
        }
    };
    let samples: Vec<f32> = data
        .chunks_exact(block)
        .map(|frame| {
            if channels == 1 {
                decode(frame)
            } else {
                0.5 * (decode(&frame[..bytes_per_sample]) + decode(&frame[bytes_per_sample..]))
            }
        })
        .collect();
    AudioBuffer::new(samples, fmt.sample_rate)
}

fn wav_bytes(buf: &AudioBuffer, format: u16) -> Vec<u8> {
    let (bits, bytes_per_sample) = if format == FORMAT_PCM { (16u16, 2u32) } else { (32, 4) };
    let data_len = buf.len() as u32 * bytes_per_sample;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&format.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&buf.sample_rate.to_le_bytes());
    out.extend_from_slice(&(buf.sample_rate * bytes_per_sample).to_le_bytes());
    out.extend_from_slice(&(bytes_per_sample as u16).to_le_bytes());
    out.extend_from_slice(&bits.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &x in &buf.samples {
        if format == FORMAT_PCM {
            let v = (x as f64 * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
            out.extend_from_slice(&v.to_le_bytes());
        } else {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

/// Writes a mono float32 WAV.
pub fn write_wav(path: impl AsRef<Path>, buf: &AudioBuffer) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, wav_bytes(buf, FORMAT_FLOAT)).map_err(|e| Error::io(path, e))
}

/// Writes a mono PCM16 WAV (amplitudes scaled by 32768 and clipped).
pub fn write_wav_pcm16(path: impl AsRef<Path>, buf: &AudioBuffer) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, wav_bytes(buf, FORMAT_PCM)).map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// Resampling

const SINC_TAPS: usize = 64;
const KAISER_BETA: f64 = 8.6;
const CUTOFF_FRACTION: f64 = 0.92;

/// Zeroth-order modified Bessel function of the first kind.
fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let half = x / 2.0;
    for k in 1..64 {
        term *= half / k as f64;
        let t2 = term * term;
        sum += t2;
        if t2 < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Band-limited resampling with a Kaiser-windowed sinc kernel of 64 taps
/// per output sample. The cutoff sits just below the lower of the two
/// Nyquist frequencies; kernel weights are normalized to unit DC gain.
pub fn resample(buf: &AudioBuffer, target_rate: u32) -> Result<AudioBuffer> {
    if target_rate == 0 {
        return Err(Error::InvalidArgument("target rate must be positive".into()));
    }
    if target_rate == buf.sample_rate {
        return Ok(buf.clone());
    }
    let src = buf.sample_rate as f64;
    let dst = target_rate as f64;
    let out_len = (buf.len() as f64 * dst / src).round() as usize;
    // cutoff in cycles per input sample
    let cutoff = CUTOFF_FRACTION * 0.5 * (dst / src).min(1.0);
    let half = (SINC_TAPS / 2) as isize;
    let window_half = half as f64 + 1.0;
    let i0_beta = bessel_i0(KAISER_BETA);
    let input = &buf.samples;
    let n_in = input.len() as isize;

    let samples = crate::par::map_range(out_len, |n| {
        let t = n as f64 * src / dst;
        let base = t.floor() as isize;
        let mut acc = 0.0;
        let mut norm = 0.0;
        for k in (base - half + 1)..=(base + half) {
            let x = t - k as f64;
            let r = x / window_half;
            let w = bessel_i0(KAISER_BETA * (1.0 - r * r).max(0.0).sqrt()) / i0_beta;
            let h = 2.0 * cutoff * sinc(2.0 * cutoff * x) * w;
            norm += h;
            if (0..n_in).contains(&k) {
                acc += h * input[k as usize] as f64;
            }
        }
        (acc / norm) as f32
    });
    AudioBuffer::new(samples, target_rate)
}

// ---------------------------------------------------------------------------
// Framing

/// Fixed-length frames centered at `k * hop`, stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    data: Vec<f32>,
    pub frame_len: usize,
    pub hop: usize,
    pub sample_rate: u32,
    pub timestamps: Vec<f64>,
}

impl FrameSequence {
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn frame(&self, k: usize) -> &[f32] {
        &self.data[k * self.frame_len..(k + 1) * self.frame_len]
    }

    pub fn frames(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.frame_len)
    }

    /// Contiguous `len() * frame_len` samples.
    pub fn as_flat(&self) -> &[f32] {
        &self.data
    }

    /// Returns a copy with every frame passed through [`normalize_frame`].
    pub fn normalized(&self) -> Self {
        let mut out = self.clone();
        crate::par::for_each_chunk_mut(&mut out.data, self.frame_len, |_, f| {
            normalize_in_place(f)
        });
        out
    }

    /// Keeps frames `0, stride, 2*stride, ...`.
    pub fn decimated(&self, stride: usize) -> Self {
        let stride = stride.max(1);
        let keep: Vec<usize> = (0..self.len()).step_by(stride).collect();
        let mut data = Vec::with_capacity(keep.len() * self.frame_len);
        for &k in &keep {
            data.extend_from_slice(self.frame(k));
        }
        Self {
            data,
            frame_len: self.frame_len,
            hop: self.hop * stride,
            sample_rate: self.sample_rate,
            timestamps: keep.iter().map(|&k| self.timestamps[k]).collect(),
        }
    }
}

/// Copies `frame_len` samples centered at `center`, zero outside the signal.
pub fn centered_frame(samples: &[f32], center: isize, frame_len: usize, out: &mut [f32]) {
    let start = center - (frame_len / 2) as isize;
    for (j, o) in out.iter_mut().enumerate().take(frame_len) {
        let idx = start + j as isize;
        *o = if idx >= 0 && (idx as usize) < samples.len() {
            samples[idx as usize]
        } else {
            0.0
        };
    }
}

/// Centered framing: frame `k` covers `[k*hop - frame_len/2, k*hop + frame_len/2)`
/// with zeros outside the signal; `floor(len/hop) + 1` frames.
pub fn frame_signal(buf: &AudioBuffer, frame_len: usize, hop: usize) -> Result<FrameSequence> {
    if buf.sample_rate != MODEL_RATE {
        return Err(Error::InvalidArgument(format!(
            "framing expects {MODEL_RATE} Hz audio, got {}",
            buf.sample_rate
        )));
    }
    if hop == 0 || frame_len == 0 {
        return Err(Error::InvalidArgument("hop and frame length must be positive".into()));
    }
    if buf.is_empty() {
        return Err(Error::Empty("audio buffer"));
    }
    let count = buf.len() / hop + 1;
    let mut data = vec![0.0f32; count * frame_len];
    crate::par::for_each_chunk_mut(&mut data, frame_len, |k, f| {
        centered_frame(&buf.samples, (k * hop) as isize, frame_len, f)
    });
    let timestamps = (0..count)
        .map(|k| (k * hop) as f64 / buf.sample_rate as f64)
        .collect();
    Ok(FrameSequence {
        data,
        frame_len,
        hop,
        sample_rate: buf.sample_rate,
        timestamps,
    })
}

/// Zero mean, unit standard deviation; frames with std below 1e-8 map to zeros.
pub fn normalize_frame(frame: &[f32]) -> Vec<f32> {
    let mut out = frame.to_vec();
    normalize_in_place(&mut out);
    out
}

pub fn normalize_in_place<T: Real>(frame: &mut [T]) {
    if frame.is_empty() {
        return;
    }
    let n = frame.len() as f64;
    let mean = frame.iter().map(|x| x.as_f64()).sum::<f64>() / n;
    let var = frame
        .iter()
        .map(|x| {
            let d = x.as_f64() - mean;
            d * d
        })
        .sum::<f64>()
        / n;
    let std = var.sqrt();
    if std < 1e-8 {
        frame.iter_mut().for_each(|x| *x = T::zero());
    } else {
        frame
            .iter_mut()
            .for_each(|x| *x = T::from_f64((x.as_f64() - mean) / std));
    }
}
