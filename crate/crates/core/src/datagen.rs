//! Synthetic data: f0 trajectories, additive harmonic synthesis, colored
//! noise, SNR mixing and corpus generation.
//!
//! Audio synthesized from an f0 trajectory has an exactly known ground
//! truth, which is what the evaluation corpus relies on.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::cents::{cents_to_freq, freq_to_cents};
use crate::eval::PitchTrack;
use crate::signal::{self, AudioBuffer, DEFAULT_HOP, MODEL_RATE};
use crate::training::{DatasetManifest, TrackEntry};
use crate::{par, Error, Result};

/// Lowest and highest f0 the corpus tools will emit, C1 and B7.
pub const F0_MIN_HZ: f64 = 32.70;
pub const F0_MAX_HZ: f64 = 1975.5;

/// f0 annotation on a regular time grid; 0 Hz marks unvoiced points.
#[derive(Debug, Clone, PartialEq)]
pub struct F0Track {
    pub times: Vec<f64>,
    pub freq_hz: Vec<f64>,
}

impl F0Track {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn voiced(&self, i: usize) -> bool {
        self.freq_hz[i] > 0.0
    }

    pub fn to_pitch_track(&self) -> Result<PitchTrack> {
        PitchTrack::new(self.times.clone(), self.freq_hz.clone(), None)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Trajectory {
    Constant { hz: f64 },
    /// Linear in cents from `start_hz` to `end_hz`.
    Glissando { start_hz: f64, end_hz: f64 },
    Vibrato { center_hz: f64, depth_cents: f64, rate_hz: f64 },
    /// Gaussian steps in cents, reflected at the bounds.
    RandomWalk {
        start_hz: f64,
        step_cents: f64,
        min_hz: f64,
        max_hz: f64,
        seed: u64,
    },
}

fn check_hz(f: f64) -> Result<f64> {
    if !(F0_MIN_HZ..=F0_MAX_HZ).contains(&f) {
        return Err(Error::InvalidArgument(format!(
            "f0 {f} Hz outside [{F0_MIN_HZ}, {F0_MAX_HZ}]"
        )));
    }
    freq_to_cents(f)
}

fn reflect(mut c: f64, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return lo;
    }
    let span = hi - lo;
    c = (c - lo).rem_euclid(2.0 * span);
    lo + if c > span { 2.0 * span - c } else { c }
}

/// Samples `traj` at `0, step, 2*step, ...` up to `duration_s` inclusive.
pub fn gen_f0_trajectory(traj: &Trajectory, duration_s: f64, step_s: f64) -> Result<F0Track> {
    if !(duration_s > 0.0 && step_s > 0.0) {
        return Err(Error::InvalidArgument("duration and step must be positive".into()));
    }
    let n = (duration_s / step_s + 1e-9).floor() as usize + 1;
    let times: Vec<f64> = (0..n).map(|k| k as f64 * step_s).collect();
    let cents: Vec<f64> = match *traj {
        Trajectory::Constant { hz } => vec![check_hz(hz)?; n],
        Trajectory::Glissando { start_hz, end_hz } => {
            let (a, b) = (check_hz(start_hz)?, check_hz(end_hz)?);
            times.iter().map(|t| a + (b - a) * t / duration_s).collect()
        }
        Trajectory::Vibrato { center_hz, depth_cents, rate_hz } => {
            let c = check_hz(center_hz)?;
            check_hz(cents_to_freq(c - depth_cents.abs()))?;
            check_hz(cents_to_freq(c + depth_cents.abs()))?;
            times
                .iter()
                .map(|t| c + depth_cents * (2.0 * PI * rate_hz * t).sin())
                .collect()
        }
        Trajectory::RandomWalk { start_hz, step_cents, min_hz, max_hz, seed } => {
            let (lo, hi) = (check_hz(min_hz)?, check_hz(max_hz)?);
            let mut c = check_hz(start_hz)?.clamp(lo, hi);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut out = Vec::with_capacity(n);
            for _ in 0..n {
                out.push(c);
                let z: f64 = rng.sample(StandardNormal);
                c = reflect(c + step_cents * z, lo, hi);
            }
            out
        }
    };
    Ok(F0Track {
        times,
        freq_hz: cents.into_iter().map(cents_to_freq).collect(),
    })
}

/// Relative partial amplitudes (partial 1 first) and optional start phases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimbreSpec {
    pub amplitudes: Vec<f64>,
    #[serde(default)]
    pub phases: Vec<f64>,
}

impl TimbreSpec {
    pub fn sine() -> Self {
        Self {
            amplitudes: vec![1.0],
            phases: Vec::new(),
        }
    }
}

pub const SYNTH_PEAK: f32 = 0.9;

/// Phase-continuous additive synthesis. The instantaneous f0 is linear in
/// cents between annotation points, partials at or above Nyquist are
/// dropped sample by sample, and the result is peak-normalized to 0.9.
/// The output has `round(t_last * sr) + 1` samples, so centered framing at
/// the annotation step reproduces the annotation time grid.
pub fn synth_harmonic(f0: &F0Track, timbre: &TimbreSpec, sample_rate: u32) -> Result<AudioBuffer> {
    if f0.is_empty() {
        return Err(Error::Empty("f0 track"));
    }
    if timbre.amplitudes.is_empty() {
        return Err(Error::InvalidArgument("timbre needs at least one partial".into()));
    }
    let sr = sample_rate as f64;
    let n = (f0.times[f0.len() - 1] * sr).round() as usize + 1;
    let nyq = sr / 2.0;
    let mut phase: Vec<f64> = (0..timbre.amplitudes.len())
        .map(|p| timbre.phases.get(p).copied().unwrap_or(0.0))
        .collect();
    let mut out = vec![0.0f32; n];
    let mut seg = 0usize;
    for (i, o) in out.iter_mut().enumerate() {
        let t = i as f64 / sr;
        while seg + 1 < f0.len() && f0.times[seg + 1] <= t {
            seg += 1;
        }
        let f = if seg + 1 < f0.len() {
            let (fa, fb) = (f0.freq_hz[seg], f0.freq_hz[seg + 1]);
            if fa > 0.0 && fb > 0.0 {
                let u = (t - f0.times[seg]) / (f0.times[seg + 1] - f0.times[seg]);
                fa * (fb / fa).powf(u)
            } else if u_nearest(t, f0.times[seg], f0.times[seg + 1]) {
                fb
            } else {
                fa
            }
        } else {
            f0.freq_hz[seg]
        };
        let mut acc = 0.0;
        for (p, (ph, &a)) in phase.iter_mut().zip(&timbre.amplitudes).enumerate() {
            let fp = f * (p + 1) as f64;
            if f > 0.0 && fp < nyq {
                acc += a * ph.sin();
            }
            *ph = (*ph + 2.0 * PI * fp / sr) % (2.0 * PI);
        }
        *o = acc as f32;
    }
    let peak = out.iter().fold(0.0f32, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        let g = SYNTH_PEAK / peak;
        out.iter_mut().for_each(|v| *v *= g);
    }
    AudioBuffer::new(out, sample_rate)
}

fn u_nearest(t: f64, a: f64, b: f64) -> bool {
    t - a > b - t
}

// ---------------------------------------------------------------------------
// Noise

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    White,
    Pink,
    Brown,
    File(PathBuf),
}

impl NoiseKind {
    /// `white`, `pink`, `brown`, `file:PATH` or a bare path ending in `.wav`.
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "white" => Self::White,
            "pink" => Self::Pink,
            "brown" => Self::Brown,
            other if other.starts_with("file:") && other.len() > 5 => Self::File(PathBuf::from(&other[5..])),
            other if other.ends_with(".wav") => Self::File(PathBuf::from(other)),
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown noise kind {other:?} (white, pink, brown or file:PATH)"
                )))
            }
        })
    }

    pub fn label(&self) -> String {
        match self {
            Self::White => "white".into(),
            Self::Pink => "pink".into(),
            Self::Brown => "brown".into(),
            Self::File(p) => format!(
                "file:{}",
                p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
            ),
        }
    }
}

/// Below this frequency the colored-noise shaping stays flat, which keeps
/// brown noise from being dominated by sub-audible drift.
pub const NOISE_SHAPING_FLOOR_HZ: f64 = 20.0;

fn unit_rms(x: &mut [f64]) -> Result<()> {
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt();
    if !(rms > 0.0) {
        return Err(Error::ZeroPower("noise"));
    }
    x.iter_mut().for_each(|v| *v /= rms);
    Ok(())
}

/// Zero-mean, unit-RMS noise of `len` samples. Pink and brown are white
/// Gaussian noise shaped in the frequency domain by `1/sqrt(f)` and `1/f`.
/// File noise is resampled, tiled to length and rescaled.
pub fn gen_noise(kind: &NoiseKind, len: usize, sample_rate: u32, seed: u64) -> Result<AudioBuffer> {
    if len == 0 {
        return Err(Error::Empty("noise length"));
    }
    let mut x: Vec<f64> = match kind {
        NoiseKind::File(path) => {
            let src = signal::resample(&signal::read_wav(path)?, sample_rate)?;
            if src.is_empty() {
                return Err(Error::Empty("noise file"));
            }
            (0..len).map(|i| src.samples[i % src.len()] as f64).collect()
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
        }
    };
    let exponent = match kind {
        NoiseKind::Pink => Some(0.5),
        NoiseKind::Brown => Some(1.0),
        _ => None,
    };
    if let Some(e) = exponent {
        let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
        let mut planner = FftPlanner::new();
        planner.plan_fft_forward(len).process(&mut buf);
        let df = sample_rate as f64 / len as f64;
        buf[0] = Complex::new(0.0, 0.0);
        for k in 1..=len / 2 {
            let f = (k as f64 * df).max(NOISE_SHAPING_FLOOR_HZ);
            let g = f.powf(-e);
            buf[k] *= g;
            if len - k != k {
                buf[len - k] *= g;
            }
        }
        planner.plan_fft_inverse(len).process(&mut buf);
        x = buf.iter().map(|c| c.re).collect();
    }
    let mean = x.iter().sum::<f64>() / len as f64;
    x.iter_mut().for_each(|v| *v -= mean);
    unit_rms(&mut x)?;
    AudioBuffer::new(x.into_iter().map(|v| v as f32).collect(), sample_rate)
}

/// The parts of a mixture after any joint renormalization.
#[derive(Debug, Clone)]
pub struct Mixture {
    pub signal: AudioBuffer,
    pub noise: AudioBuffer,
    pub mixture: AudioBuffer,
    /// Factor applied to both parts to keep the peak at or below 1.
    pub renormalization: f32,
}

/// Scales `noise` (tiled or truncated to the signal length) so that the
/// signal-to-noise power ratio over the whole track is `snr_db`, then adds
/// it. If the sum peaks above 1 both parts are scaled down together, which
/// leaves the SNR unchanged. An infinite SNR returns the signal untouched.
pub fn mix_components(sig: &AudioBuffer, noise: &AudioBuffer, snr_db: f64) -> Result<Mixture> {
    if snr_db.is_nan() {
        return Err(Error::InvalidArgument("SNR is NaN".into()));
    }
    if sig.sample_rate != noise.sample_rate {
        return Err(Error::InvalidArgument(format!(
            "signal at {} Hz, noise at {} Hz",
            sig.sample_rate, noise.sample_rate
        )));
    }
    if sig.is_empty() || noise.is_empty() {
        return Err(Error::Empty("mix input"));
    }
    if snr_db == f64::INFINITY {
        return Ok(Mixture {
            signal: sig.clone(),
            noise: AudioBuffer::new(vec![0.0; sig.len()], sig.sample_rate)?,
            mixture: sig.clone(),
            renormalization: 1.0,
        });
    }
    let n: Vec<f32> = (0..sig.len()).map(|i| noise.samples[i % noise.len()]).collect();
    let ps = sig.power();
    let pn = n.iter().map(|&v| v as f64 * v as f64).sum::<f64>() / n.len() as f64;
    if !(ps > 0.0) {
        return Err(Error::ZeroPower("signal"));
    }
    if !(pn > 0.0) {
        return Err(Error::ZeroPower("noise"));
    }
    let gain = (ps / (pn * 10f64.powf(snr_db / 10.0))).sqrt() as f32;
    let mut scaled: Vec<f32> = n.iter().map(|v| v * gain).collect();
    let mut mixed: Vec<f32> = sig.samples.iter().zip(&scaled).map(|(a, b)| a + b).collect();
    let peak = mixed.iter().fold(0.0f32, |m, v| m.max(v.abs()));
    let mut signal_part = sig.samples.clone();
    let mut renorm = 1.0f32;
    if peak > 1.0 {
        renorm = 1.0 / peak;
        for v in mixed.iter_mut().chain(scaled.iter_mut()).chain(signal_part.iter_mut()) {
            *v *= renorm;
        }
    }
    Ok(Mixture {
        signal: AudioBuffer::new(signal_part, sig.sample_rate)?,
        noise: AudioBuffer::new(scaled, sig.sample_rate)?,
        mixture: AudioBuffer::new(mixed, sig.sample_rate)?,
        renormalization: renorm,
    })
}

pub fn mix_at_snr(sig: &AudioBuffer, noise: &AudioBuffer, snr_db: f64) -> Result<AudioBuffer> {
    Ok(mix_components(sig, noise, snr_db)?.mixture)
}

// ---------------------------------------------------------------------------
// Corpus generation

/// Parameters for a synthetic corpus. Tracks are grouped into "artists";
/// all tracks of a group share a spectral rolloff, so group-conditional
/// folds test on unseen timbres. Partial counts vary per track.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusProfile {
    pub name: String,
    pub tracks: usize,
    pub duration_s: f64,
    pub tracks_per_group: usize,
    #[serde(default = "default_rate")]
    pub sample_rate: u32,
    #[serde(default = "default_hop")]
    pub hop: usize,
    pub f0_min_hz: f64,
    pub f0_max_hz: f64,
    /// Inclusive range of partial counts per track.
    pub partials: [usize; 2],
    /// Amplitude of partial p is about p^-r, r drawn per group from this range.
    pub rolloff: [f64; 2],
    /// Segment durations; each segment is one trajectory kind.
    pub segment_s: [f64; 2],
    pub vibrato_depth_cents: [f64; 2],
    pub vibrato_rate_hz: [f64; 2],
    pub glissando_max_cents: f64,
    pub walk_step_cents: f64,
    pub seed: u64,
}

fn default_rate() -> u32 {
    MODEL_RATE
}

fn default_hop() -> usize {
    DEFAULT_HOP
}

impl CorpusProfile {
    /// 40 tracks of 30 s, 4 per group, 1 to 6 partials.
    pub fn sine_corpus() -> Self {
        Self {
            name: "sine-corpus".into(),
            tracks: 40,
            duration_s: 30.0,
            tracks_per_group: 4,
            sample_rate: MODEL_RATE,
            hop: DEFAULT_HOP,
            f0_min_hz: 80.0,
            f0_max_hz: 1000.0,
            partials: [1, 6],
            rolloff: [0.5, 2.0],
            segment_s: [0.5, 2.0],
            vibrato_depth_cents: [10.0, 80.0],
            vibrato_rate_hz: [3.0, 8.0],
            glissando_max_cents: 700.0,
            walk_step_cents: 3.0,
            seed: 0,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text).map_err(|e| Error::parse("corpus profile", e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("corpus profile: {m}")));
        if self.tracks == 0 || self.tracks_per_group == 0 {
            return bad("tracks and tracks_per_group must be positive");
        }
        if !(self.duration_s > 0.0) || self.hop == 0 || self.sample_rate == 0 {
            return bad("duration, hop and sample rate must be positive");
        }
        if !(F0_MIN_HZ <= self.f0_min_hz && self.f0_min_hz < self.f0_max_hz && self.f0_max_hz <= F0_MAX_HZ) {
            return bad("need 32.70 <= f0_min_hz < f0_max_hz <= 1975.5");
        }
        if self.partials[0] == 0 || self.partials[0] > self.partials[1] {
            return bad("partials must be a non-empty range starting at 1 or more");
        }
        let ordered = |r: [f64; 2]| r[0] <= r[1] && r[0] >= 0.0;
        if !ordered(self.rolloff) || !ordered(self.vibrato_depth_cents) || !ordered(self.vibrato_rate_hz) {
            return bad("ranges must be ordered and non-negative");
        }
        if !(ordered(self.segment_s) && self.segment_s[0] > 0.0) {
            return bad("segment_s must be a positive range");
        }
        Ok(())
    }

    pub fn groups(&self) -> usize {
        self.tracks.div_ceil(self.tracks_per_group)
    }
}

/// SplitMix64 finalizer, used to derive independent per-stream seeds.
pub fn derive_seed(root: u64, stream: u64) -> u64 {
    let mut z = root ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn uniform(rng: &mut ChaCha8Rng, r: [f64; 2]) -> f64 {
    if r[1] > r[0] {
        rng.random_range(r[0]..r[1])
    } else {
        r[0]
    }
}

/// Spectral rolloff shared by every track of a group.
fn group_rolloff(profile: &CorpusProfile, group: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(profile.seed, 1_000_000 + group as u64));
    uniform(&mut rng, profile.rolloff)
}

/// One synthesized track of the corpus: audio, f0 annotation and group.
#[derive(Debug, Clone)]
pub struct SynthTrack {
    pub id: String,
    pub group: String,
    pub audio: AudioBuffer,
    pub f0: F0Track,
    pub timbre: TimbreSpec,
}

/// f0 contour made of back-to-back segments of random trajectory kinds.
fn corpus_f0(profile: &CorpusProfile, rng: &mut ChaCha8Rng) -> Result<F0Track> {
    let step = profile.hop as f64 / profile.sample_rate as f64;
    let total = (profile.duration_s / step + 1e-9).floor() as usize + 1;
    let (lo, hi) = (freq_to_cents(profile.f0_min_hz)?, freq_to_cents(profile.f0_max_hz)?);
    let mut cents = Vec::with_capacity(total);
    let mut current = rng.random_range(lo..=hi);
    while cents.len() < total {
        let seg_len = ((uniform(rng, profile.segment_s) / step).round() as usize).max(2);
        let seg_len = seg_len.min(total - cents.len());
        // half of the segments jump to a fresh note
        if rng.random_bool(0.5) {
            current = rng.random_range(lo..=hi);
        }
        match rng.random_range(0..4u32) {
            0 => cents.extend(std::iter::repeat_n(current, seg_len)),
            1 => {
                let target = reflect(
                    current + rng.random_range(-profile.glissando_max_cents..=profile.glissando_max_cents),
                    lo,
                    hi,
                );
                for k in 0..seg_len {
                    cents.push(current + (target - current) * k as f64 / (seg_len - 1).max(1) as f64);
                }
                current = target;
            }
            2 => {
                let depth = uniform(rng, profile.vibrato_depth_cents);
                let center = current.clamp(lo + depth, (hi - depth).max(lo + depth));
                let rate = uniform(rng, profile.vibrato_rate_hz);
                let phase = rng.random_range(0.0..2.0 * PI);
                for k in 0..seg_len {
                    cents.push(center + depth * (2.0 * PI * rate * k as f64 * step + phase).sin());
                }
                current = *cents.last().unwrap();
            }
            _ => {
                for _ in 0..seg_len {
                    cents.push(current);
                    let z: f64 = rng.sample(StandardNormal);
                    current = reflect(current + profile.walk_step_cents * z, lo, hi);
                }
            }
        }
    }
    Ok(F0Track {
        times: (0..total).map(|k| k as f64 * step).collect(),
        freq_hz: cents.into_iter().map(cents_to_freq).collect(),
    })
}

/// Track `index` of the corpus, deterministic in (profile, index).
pub fn synth_corpus_track(profile: &CorpusProfile, index: usize) -> Result<SynthTrack> {
    profile.validate()?;
    if index >= profile.tracks {
        return Err(Error::InvalidArgument(format!("track {index} of {}", profile.tracks)));
    }
    let group = index / profile.tracks_per_group;
    let rolloff = group_rolloff(profile, group);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(profile.seed, index as u64));
    let partials = rng.random_range(profile.partials[0]..=profile.partials[1]);
    let amplitudes = (1..=partials)
        .map(|p| (p as f64).powf(-rolloff) * rng.random_range(0.7..1.3))
        .collect();
    let phases = (0..partials).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
    let timbre = TimbreSpec { amplitudes, phases };
    let f0 = corpus_f0(profile, &mut rng)?;
    let audio = synth_harmonic(&f0, &timbre, profile.sample_rate)?;
    Ok(SynthTrack {
        id: format!("track_{index:03}"),
        group: format!("artist_{group:02}"),
        audio,
        f0,
        timbre,
    })
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("part");
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Writes every track as `<id>.wav` (float32) plus `<id>.csv`, then
/// `manifest.json` last. A failing track aborts before the manifest exists.
pub fn write_corpus(profile: &CorpusProfile, dir: impl AsRef<Path>) -> Result<DatasetManifest> {
    profile.validate()?;
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let entries = par::map_range(profile.tracks, |i| -> Result<TrackEntry> {
        let t = synth_corpus_track(profile, i)?;
        let wav = format!("{}.wav", t.id);
        let csv = format!("{}.csv", t.id);
        let wav_path = dir.join(&wav);
        let tmp = wav_path.with_extension("part");
        signal::write_wav(&tmp, &t.audio)?;
        fs::rename(&tmp, &wav_path).map_err(|e| Error::io(&wav_path, e))?;
        write_atomic(&dir.join(&csv), t.f0.to_pitch_track()?.to_csv().as_bytes())?;
        Ok(TrackEntry {
            id: t.id,
            group: t.group,
            audio: wav,
            annotation: csv,
            duration_s: t.audio.duration(),
        })
    });
    let tracks = entries.into_iter().collect::<Result<Vec<_>>>()?;
    let manifest = DatasetManifest {
        name: profile.name.clone(),
        sample_rate: profile.sample_rate,
        hop: profile.hop,
        tracks,
        profile: Some(serde_json::to_value(profile)?),
    };
    write_atomic(
        &dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?.as_bytes(),
    )?;
    Ok(manifest)
}
