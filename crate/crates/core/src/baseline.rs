//! YIN-lite: a difference-function pitch estimator used as the reference
//! baseline.
//!
//! Every lag uses the same window of `frame_len - tau_max` samples, so the
//! difference function is comparable across lags.

use serde::{Deserialize, Serialize};

use crate::eval::{PitchPredictor, PitchTrack};
use crate::signal::{frame_signal, normalize_in_place, resample, AudioBuffer, FRAME_LEN, MODEL_RATE};
use crate::{par, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YinParams {
    pub f_min: f64,
    pub f_max: f64,
    pub threshold: f64,
    pub sample_rate: u32,
}

impl Default for YinParams {
    fn default() -> Self {
        Self {
            f_min: 32.70,
            f_max: 1975.5,
            threshold: 0.1,
            sample_rate: MODEL_RATE,
        }
    }
}

impl YinParams {
    pub fn validate(&self, frame_len: usize) -> Result<()> {
        let sr = self.sample_rate as f64;
        if !(self.f_min > 0.0 && self.f_min < self.f_max && self.f_max < sr / 2.0) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < f_min < f_max < sr/2, got {} / {} at {sr} Hz",
                self.f_min, self.f_max
            )));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidArgument(format!("threshold {} not in (0, 1)", self.threshold)));
        }
        if self.tau_max() >= frame_len {
            return Err(Error::InvalidArgument(format!(
                "tau_max {} must be below the frame length {frame_len}",
                self.tau_max()
            )));
        }
        Ok(())
    }

    pub fn tau_min(&self) -> usize {
        ((self.sample_rate as f64 / self.f_max).floor() as usize).max(1)
    }

    pub fn tau_max(&self) -> usize {
        (self.sample_rate as f64 / self.f_min).floor() as usize
    }
}

/// `d(tau) = sum_{j < W} (x_j - x_{j+tau})^2` for `tau` in `0..=tau_max`,
/// with `W = len - tau_max`.
pub fn difference_function(frame: &[f64], tau_max: usize) -> Result<Vec<f64>> {
    if tau_max >= frame.len() {
        return Err(Error::InvalidArgument(format!(
            "tau_max {tau_max} must be below the frame length {}",
            frame.len()
        )));
    }
    let w = frame.len() - tau_max;
    Ok((0..=tau_max)
        .map(|tau| {
            frame[..w]
                .iter()
                .zip(&frame[tau..tau + w])
                .map(|(a, b)| (a - b) * (a - b))
                .sum()
        })
        .collect())
}

/// Cumulative-mean-normalized difference. `d'(0) = 1`, and any lag whose
/// running mean is zero maps to 1.
pub fn cmndf(d: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(d.len());
    let mut running = 0.0;
    for (tau, &v) in d.iter().enumerate() {
        if tau == 0 {
            out.push(1.0);
            continue;
        }
        running += v;
        out.push(if running > 0.0 { v * tau as f64 / running } else { 1.0 });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YinEstimate {
    /// `None` when no lag dips below the threshold.
    pub frequency: Option<f64>,
    /// Refined lag in samples.
    pub period: f64,
    /// `d'` at the chosen lag; lower means more periodic.
    pub aperiodicity: f64,
}

/// Pitch of one frame. The frame is normalized to zero mean and unit
/// variance first, so the estimate is invariant to gain.
pub fn yin_pitch(frame: &[f32], params: &YinParams) -> Result<YinEstimate> {
    params.validate(frame.len())?;
    let mut x: Vec<f64> = frame.iter().map(|&v| v as f64).collect();
    normalize_in_place(&mut x);
    let (tmin, tmax) = (params.tau_min(), params.tau_max());
    let dp = cmndf(&difference_function(&x, tmax)?);

    let mut chosen = None;
    let mut tau = tmin;
    while tau <= tmax {
        if dp[tau] < params.threshold {
            while tau < tmax && dp[tau + 1] < dp[tau] {
                tau += 1;
            }
            chosen = Some(tau);
            break;
        }
        tau += 1;
    }
    let voiced = chosen.is_some();
    let tau = chosen.unwrap_or_else(|| {
        (tmin..=tmax)
            .fold(tmin, |best, t| if dp[t] < dp[best] { t } else { best })
    });

    let mut period = tau as f64;
    if tau > tmin && tau < tmax {
        let (a, b, c) = (dp[tau - 1], dp[tau], dp[tau + 1]);
        let denom = a - 2.0 * b + c;
        if denom > 0.0 {
            period += (0.5 * (a - c) / denom).clamp(-1.0, 1.0);
        }
    }
    let sr = params.sample_rate as f64;
    // keep refined estimates inside the half-bin-widened search band
    let widen = (50.0f64 / 1200.0).exp2();
    period = period.clamp(sr / (params.f_max * widen), sr / (params.f_min / widen));

    Ok(YinEstimate {
        frequency: voiced.then_some(sr / period),
        period,
        aperiodicity: dp[tau],
    })
}

/// YIN-lite applied frame by frame at `hop` samples.
#[derive(Debug, Clone)]
pub struct YinPredictor {
    pub params: YinParams,
    pub hop: usize,
}

impl Default for YinPredictor {
    fn default() -> Self {
        Self {
            params: YinParams::default(),
            hop: crate::signal::DEFAULT_HOP,
        }
    }
}

impl PitchPredictor for YinPredictor {
    fn name(&self) -> &str {
        "yin-lite"
    }

    fn predict(&self, audio: &AudioBuffer) -> Result<PitchTrack> {
        let audio = resample(audio, self.params.sample_rate)?;
        let frames = frame_signal(&audio, FRAME_LEN, self.hop)?;
        let est = par::map_range(frames.len(), |k| yin_pitch(frames.frame(k), &self.params));
        let mut freq = Vec::with_capacity(est.len());
        let mut conf = Vec::with_capacity(est.len());
        for e in est {
            let e = e?;
            freq.push(e.frequency.unwrap_or(0.0));
            conf.push((1.0 - e.aperiodicity).clamp(0.0, 1.0));
        }
        PitchTrack::new(frames.timestamps.clone(), freq, Some(conf))
    }
}
