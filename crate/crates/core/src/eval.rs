//! Pitch tracks and melody-style accuracy metrics.
//!
//! Raw pitch accuracy (RPA) is the fraction of reference-voiced frames whose
//! estimate lies within a cent threshold of the reference; raw chroma
//! accuracy (RCA) folds the error to the nearest octave first. Only
//! reference-voiced frames are scored, and an unvoiced estimate on such a
//! frame is a miss. Aggregates are unweighted means and population standard
//! deviations over tracks.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rustfft::{num_complex::Complex, FftPlanner};

use crate::cents::freq_to_cents;
use crate::datagen::{self, NoiseKind};
use crate::network::Tensor;
use crate::signal::{AudioBuffer, MODEL_RATE};
use crate::{par, Error, Real, Result};

/// Time-stamped f0 estimates; 0 Hz marks an unvoiced frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PitchTrack {
    pub timestamps: Vec<f64>,
    pub frequency: Vec<f64>,
    pub confidence: Option<Vec<f64>>,
}

impl PitchTrack {
    pub fn new(timestamps: Vec<f64>, frequency: Vec<f64>, confidence: Option<Vec<f64>>) -> Result<Self> {
        if timestamps.len() != frequency.len() || confidence.as_ref().is_some_and(|c| c.len() != frequency.len()) {
            return Err(Error::ShapeMismatch("pitch track columns differ in length".into()));
        }
        if timestamps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("timestamps must be strictly increasing".into()));
        }
        if frequency.iter().any(|&f| !(f >= 0.0) || !f.is_finite()) {
            return Err(Error::InvalidArgument("frequencies must be finite and >= 0".into()));
        }
        Ok(Self {
            timestamps,
            frequency,
            confidence,
        })
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    /// Median spacing between timestamps.
    pub fn hop_seconds(&self) -> Option<f64> {
        if self.len() < 2 {
            return None;
        }
        let mut d: Vec<f64> = self.timestamps.windows(2).map(|w| w[1] - w[0]).collect();
        d.sort_by(f64::total_cmp);
        Some(d[d.len() / 2])
    }

    pub fn shifted(&self, dt: f64) -> Self {
        Self {
            timestamps: self.timestamps.iter().map(|t| t + dt).collect(),
            ..self.clone()
        }
    }

    /// CSV with header `time_sec,frequency_hz[,confidence]`, 6 decimals.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        match &self.confidence {
            Some(c) => {
                s.push_str("time_sec,frequency_hz,confidence\n");
                for ((t, f), c) in self.timestamps.iter().zip(&self.frequency).zip(c) {
                    let _ = writeln!(s, "{t:.6},{f:.6},{c:.6}");
                }
            }
            None => {
                s.push_str("time_sec,frequency_hz\n");
                for (t, f) in self.timestamps.iter().zip(&self.frequency) {
                    let _ = writeln!(s, "{t:.6},{f:.6}");
                }
            }
        }
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    /// Parses `time_sec,frequency_hz[,confidence]` rows; a non-numeric first
    /// line is treated as a header.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut t = Vec::new();
        let mut f = Vec::new();
        let mut c = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            let parse = |s: &str| s.parse::<f64>();
            match (cols.first().map(|s| parse(s)), cols.get(1).map(|s| parse(s))) {
                (Some(Ok(a)), Some(Ok(b))) => {
                    t.push(a);
                    f.push(b);
                    if let Some(Ok(x)) = cols.get(2).map(|s| parse(s)) {
                        c.push(x);
                    }
                }
                _ if i == 0 => continue,
                _ => return Err(Error::parse("pitch track csv", format!("line {}: {line:?}", i + 1))),
            }
        }
        let conf = (c.len() == t.len() && !c.is_empty()).then_some(c);
        Self::new(t, f, conf)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text)
    }
}

/// (reference Hz, estimate Hz) for one reference frame; 0 Hz = unvoiced.
pub type FramePair = (f64, f64);

/// Pairs every reference frame with the estimate nearest in time, provided
/// it lies within half an estimate hop; otherwise the estimate is unvoiced.
pub fn align(reference: &PitchTrack, estimate: &PitchTrack) -> Vec<FramePair> {
    let half = 0.5
        * estimate
            .hop_seconds()
            .or_else(|| reference.hop_seconds())
            .unwrap_or(f64::INFINITY);
    let est_t = &estimate.timestamps;
    reference
        .timestamps
        .iter()
        .zip(&reference.frequency)
        .map(|(&t, &rf)| {
            let i = est_t.partition_point(|&x| x < t);
            let mut best: Option<(f64, usize)> = None;
            for j in [i.wrapping_sub(1), i] {
                if let Some(&et) = est_t.get(j) {
                    let d = (et - t).abs();
                    if best.is_none_or(|(bd, _)| d < bd) {
                        best = Some((d, j));
                    }
                }
            }
            match best {
                // small slack so exact half-hop offsets survive rounding
                Some((d, j)) if d <= half * (1.0 + 1e-9) => (rf, estimate.frequency[j]),
                _ => (rf, 0.0),
            }
        })
        .collect()
}

fn cent_errors(pairs: &[FramePair]) -> Result<Vec<Option<f64>>> {
    let voiced: Vec<Option<f64>> = pairs
        .iter()
        .filter(|(r, _)| *r > 0.0)
        .map(|&(r, e)| {
            if e > 0.0 {
                Some(freq_to_cents(e).unwrap() - freq_to_cents(r).unwrap())
            } else {
                None
            }
        })
        .collect();
    if voiced.is_empty() {
        return Err(Error::Empty("no voiced reference frames"));
    }
    Ok(voiced)
}

/// Raw pitch accuracy over reference-voiced frames.
pub fn rpa(pairs: &[FramePair], threshold_cents: f64) -> Result<f64> {
    let errs = cent_errors(pairs)?;
    let hits = errs
        .iter()
        .filter(|e| e.is_some_and(|d| d.abs() <= threshold_cents))
        .count();
    Ok(hits as f64 / errs.len() as f64)
}

/// Cent error folded to the nearest octave multiple.
pub fn octave_folded(delta_cents: f64) -> f64 {
    let r = delta_cents.rem_euclid(1200.0);
    r.min(1200.0 - r)
}

/// Raw chroma accuracy: like [`rpa`] with octave errors forgiven.
pub fn rca(pairs: &[FramePair], threshold_cents: f64) -> Result<f64> {
    let errs = cent_errors(pairs)?;
    let hits = errs
        .iter()
        .filter(|e| e.is_some_and(|d| octave_folded(d) <= threshold_cents))
        .count();
    Ok(hits as f64 / errs.len() as f64)
}

// ---------------------------------------------------------------------------
// Reports

pub const DEFAULT_THRESHOLDS: [f64; 3] = [50.0, 25.0, 10.0];

#[derive(Debug, Clone, PartialEq)]
pub struct TrackMetrics {
    pub track_id: String,
    pub threshold: f64,
    pub rpa: f64,
    pub rca: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSummary {
    pub threshold: f64,
    pub rpa_mean: f64,
    pub rpa_std: f64,
    pub rca_mean: f64,
    pub rca_std: f64,
    pub tracks: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub per_track: Vec<TrackMetrics>,
    pub summary: Vec<MetricSummary>,
    /// (track id, message) for tracks that could not be scored.
    pub errors: Vec<(String, String)>,
}

/// Unweighted mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    let v = values.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, v.sqrt())
}

pub fn evaluate_pairs(track_id: &str, pairs: &[FramePair], thresholds: &[f64]) -> Result<Vec<TrackMetrics>> {
    thresholds
        .iter()
        .map(|&th| {
            Ok(TrackMetrics {
                track_id: track_id.to_string(),
                threshold: th,
                rpa: rpa(pairs, th)?,
                rca: rca(pairs, th)?,
            })
        })
        .collect()
}

/// Per-threshold mean ± std over tracks.
pub fn aggregate(per_track: Vec<TrackMetrics>, thresholds: &[f64]) -> EvalReport {
    let summary = thresholds
        .iter()
        .filter_map(|&th| {
            let rows: Vec<&TrackMetrics> = per_track.iter().filter(|m| m.threshold == th).collect();
            if rows.is_empty() {
                return None;
            }
            let (rpa_mean, rpa_std) = mean_std(&rows.iter().map(|m| m.rpa).collect::<Vec<_>>());
            let (rca_mean, rca_std) = mean_std(&rows.iter().map(|m| m.rca).collect::<Vec<_>>());
            Some(MetricSummary {
                threshold: th,
                rpa_mean,
                rpa_std,
                rca_mean,
                rca_std,
                tracks: rows.len(),
            })
        })
        .collect();
    EvalReport {
        per_track,
        summary,
        errors: Vec::new(),
    }
}

impl EvalReport {
    pub fn summary_for(&self, threshold: f64) -> Option<&MetricSummary> {
        self.summary.iter().find(|s| s.threshold == threshold)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("# std columns are population standard deviations over tracks\n");
        s.push_str("track_id,threshold,rpa,rca\n");
        for m in &self.per_track {
            let _ = writeln!(s, "{},{:.6},{:.6},{:.6}", m.track_id, m.threshold, m.rpa, m.rca);
        }
        s.push_str("\naggregate,threshold,rpa_mean,rpa_std,rca_mean,rca_std,tracks\n");
        for a in &self.summary {
            let _ = writeln!(
                s,
                "mean_std,{:.6},{:.6},{:.6},{:.6},{:.6},{}",
                a.threshold, a.rpa_mean, a.rpa_std, a.rca_mean, a.rca_std, a.tracks
            );
        }
        if !self.errors.is_empty() {
            s.push_str("\nerror_track_id,message\n");
            for (id, msg) in &self.errors {
                let _ = writeln!(s, "{id},{}", msg.replace(',', ";"));
            }
        }
        s
    }
}

// ---------------------------------------------------------------------------
// Predictors and noise sweeps

/// Anything that turns audio into a pitch track.
pub trait PitchPredictor: Sync {
    fn name(&self) -> &str;
    fn predict(&self, audio: &AudioBuffer) -> Result<PitchTrack>;
}

pub struct NetworkPredictor {
    pub net: crate::network::Network<f32>,
    pub hop: usize,
}

impl PitchPredictor for NetworkPredictor {
    fn name(&self) -> &str {
        "network"
    }

    fn predict(&self, audio: &AudioBuffer) -> Result<PitchTrack> {
        crate::network::predict_audio(&self.net, audio, self.hop)
    }
}

/// Clean audio with its exact f0 annotation.
#[derive(Debug, Clone)]
pub struct EvalTrack {
    pub id: String,
    pub audio: AudioBuffer,
    pub reference: PitchTrack,
}

/// Scores `predictor` on every track at the given thresholds. Failing
/// tracks are listed in `errors` and skipped.
pub fn evaluate_predictor(predictor: &dyn PitchPredictor, tracks: &[EvalTrack], thresholds: &[f64]) -> EvalReport {
    let results = par::map_slice(tracks, |t| {
        predictor
            .predict(&t.audio)
            .and_then(|est| evaluate_pairs(&t.id, &align(&t.reference, &est), thresholds))
    });
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for (t, r) in tracks.iter().zip(results) {
        match r {
            Ok(m) => rows.extend(m),
            Err(e) => errors.push((t.id.clone(), e.to_string())),
        }
    }
    let mut report = aggregate(rows, thresholds);
    report.errors = errors;
    report
}

pub const SNR_LADDER: [f64; 7] = [f64::INFINITY, 40.0, 30.0, 20.0, 10.0, 5.0, 0.0];

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseCurveRow {
    pub noise_kind: String,
    pub snr_db: f64,
    pub rpa_mean: f64,
    pub rpa_std: f64,
    pub failures: Vec<(String, String)>,
}

/// RPA@50 mean ± std for every (noise kind, SNR) cell. Each track gets one
/// noise realization per kind, shared across the SNR ladder.
pub fn noise_curve(
    predictor: &dyn PitchPredictor,
    tracks: &[EvalTrack],
    kinds: &[NoiseKind],
    snrs: &[f64],
    seed: u64,
) -> Vec<NoiseCurveRow> {
    let cells: Vec<(usize, f64)> = (0..kinds.len())
        .flat_map(|k| snrs.iter().map(move |&s| (k, s)))
        .collect();
    par::map_slice(&cells, |&(ki, snr)| {
        let kind = &kinds[ki];
        let mut scores = Vec::new();
        let mut failures = Vec::new();
        for (ti, t) in tracks.iter().enumerate() {
            let noise_seed = seed ^ ((ti as u64 + 1) << 20) ^ (ki as u64 + 1);
            let result = datagen::gen_noise(kind, t.audio.len(), t.audio.sample_rate, noise_seed)
                .and_then(|n| datagen::mix_at_snr(&t.audio, &n, snr))
                .and_then(|mixed| predictor.predict(&mixed))
                .and_then(|est| rpa(&align(&t.reference, &est), 50.0));
            match result {
                Ok(v) => scores.push(v),
                Err(e) => failures.push((t.id.clone(), e.to_string())),
            }
        }
        let (rpa_mean, rpa_std) = mean_std(&scores);
        NoiseCurveRow {
            noise_kind: kind.label(),
            snr_db: snr,
            rpa_mean,
            rpa_std,
            failures,
        }
    })
}

pub fn noise_curve_csv(rows: &[NoiseCurveRow]) -> String {
    let mut s = String::from("noise_kind,snr_db,rpa_mean,rpa_std\n");
    for r in rows {
        let snr = if r.snr_db.is_infinite() { "inf".to_string() } else { format!("{:.6}", r.snr_db) };
        let _ = writeln!(s, "{},{snr},{:.6},{:.6}", r.noise_kind, r.rpa_mean, r.rpa_std);
    }
    s
}

// ---------------------------------------------------------------------------
// First-layer filter spectra

pub const SPECTRUM_FFT_LEN: usize = 2048;

#[derive(Debug, Clone, PartialEq)]
pub struct FilterSpectrum {
    pub filter: usize,
    pub peak_hz: f64,
    /// `SPECTRUM_FFT_LEN / 2 + 1` magnitudes, DC to Nyquist.
    pub magnitude: Vec<f64>,
}

/// Magnitude spectrum of each first-layer kernel (input channel 0),
/// zero-padded to 2048 points at 16 kHz, sorted ascending by peak frequency
/// (stable).
pub fn filter_spectra<T: Real>(kernel: &Tensor<T>) -> Result<Vec<FilterSpectrum>> {
    let shape = kernel.shape();
    if shape.len() != 3 {
        return Err(Error::ShapeMismatch(format!("expected a 3-d kernel, got {shape:?}")));
    }
    let (out_ch, in_ch, width) = (shape[0], shape[1], shape[2]);
    if width > SPECTRUM_FFT_LEN {
        return Err(Error::ShapeMismatch(format!("kernel width {width} exceeds FFT length")));
    }
    let fft = FftPlanner::<f64>::new().plan_fft_forward(SPECTRUM_FFT_LEN);
    let bin_hz = MODEL_RATE as f64 / SPECTRUM_FFT_LEN as f64;
    let mut rows = par::map_range(out_ch, |o| {
        let taps = &kernel.data()[o * in_ch * width..o * in_ch * width + width];
        let mut buf = vec![Complex::new(0.0, 0.0); SPECTRUM_FFT_LEN];
        for (b, &w) in buf.iter_mut().zip(taps) {
            b.re = w.as_f64();
        }
        fft.process(&mut buf);
        let magnitude: Vec<f64> = buf[..=SPECTRUM_FFT_LEN / 2].iter().map(|c| c.norm()).collect();
        let peak = magnitude
            .iter()
            .enumerate()
            .fold(0, |best, (i, &m)| if m > magnitude[best] { i } else { best });
        FilterSpectrum {
            filter: o,
            peak_hz: peak as f64 * bin_hz,
            magnitude,
        }
    });
    rows.sort_by(|a, b| a.peak_hz.total_cmp(&b.peak_hz));
    Ok(rows)
}

pub fn filter_spectra_csv(rows: &[FilterSpectrum]) -> String {
    let mut s = String::from("rank,filter,peak_hz");
    if let Some(r) = rows.first() {
        for i in 0..r.magnitude.len() {
            let _ = write!(s, ",mag_{i}");
        }
    }
    s.push('\n');
    for (rank, r) in rows.iter().enumerate() {
        let _ = write!(s, "{rank},{},{:.6}", r.filter, r.peak_hz);
        for m in &r.magnitude {
            let _ = write!(s, ",{m:.6}");
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cents::cents_to_freq;

    fn track(freqs: &[f64]) -> PitchTrack {
        let t = (0..freqs.len()).map(|k| k as f64 * 0.01).collect();
        PitchTrack::new(t, freqs.to_vec(), None).unwrap()
    }

    fn shift(freqs: &[f64], cents: f64) -> Vec<f64> {
        freqs.iter().map(|&f| f * (cents / 1200.0).exp2()).collect()
    }

    #[test]
    fn align_cases() {
        let r = track(&[100.0, 200.0, 300.0, 400.0]);
        let pairs = align(&r, &r);
        assert_eq!(pairs, vec![(100.0, 100.0), (200.0, 200.0), (300.0, 300.0), (400.0, 400.0)]);

        let e = r.shifted(0.004);
        assert_eq!(align(&r, &e), pairs);

        let half = track(&[100.0, 200.0]);
        assert_eq!(align(&r, &half), vec![(100.0, 100.0), (200.0, 200.0), (300.0, 0.0), (400.0, 0.0)]);
    }

    #[test]
    fn rpa_rca_cases() {
        let f = vec![220.0; 10];
        let p = align(&track(&f), &track(&f));
        assert_eq!(rpa(&p, 50.0).unwrap(), 1.0);
        assert_eq!(rca(&p, 50.0).unwrap(), 1.0);

        let mut half_off = f.clone();
        for v in half_off.iter_mut().take(5) {
            *v *= (60.0f64 / 1200.0).exp2();
        }
        assert_eq!(rpa(&align(&track(&f), &track(&half_off)), 50.0).unwrap(), 0.5);

        let octave = align(&track(&f), &track(&shift(&f, 1200.0)));
        assert_eq!(rpa(&octave, 50.0).unwrap(), 0.0);
        assert_eq!(rca(&octave, 50.0).unwrap(), 1.0);

        let tritone = align(&track(&f), &track(&shift(&f, 600.0)));
        assert_eq!(rca(&tritone, 50.0).unwrap(), 0.0);

        assert!(rpa(&[(0.0, 100.0)], 50.0).is_err());
    }

    #[test]
    fn unvoiced_estimates_are_misses_and_unvoiced_refs_ignored() {
        let r = track(&[0.0, 100.0, 100.0, 0.0]);
        let e = track(&[50.0, 0.0, 100.0, 0.0]);
        let p = align(&r, &e);
        assert_eq!(rpa(&p, 50.0).unwrap(), 0.5);
    }

    #[test]
    fn aggregate_cases() {
        let m = |id: &str, v: f64| TrackMetrics { track_id: id.into(), threshold: 50.0, rpa: v, rca: v };
        let r = aggregate(vec![m("a", 0.9)], &[50.0]);
        assert_eq!(r.summary[0].rpa_mean, 0.9);
        assert_eq!(r.summary[0].rpa_std, 0.0);
        let r = aggregate(vec![m("a", 1.0), m("b", 0.0)], &[50.0]);
        assert_eq!((r.summary[0].rpa_mean, r.summary[0].rpa_std), (0.5, 0.5));
        assert_eq!(DEFAULT_THRESHOLDS, [50.0, 25.0, 10.0]);
        let csv = r.to_csv();
        assert!(csv.contains("a,50.000000,1.000000,1.000000"));
        assert!(csv.contains("mean_std,50.000000,0.500000,0.500000"));
    }

    #[test]
    fn csv_roundtrip() {
        let t = PitchTrack::new(vec![0.0, 0.01, 0.02], vec![440.0, 0.0, 441.5], Some(vec![0.9, 0.1, 0.5])).unwrap();
        let back = PitchTrack::from_csv(&t.to_csv()).unwrap();
        assert_eq!(back, t);
        assert!(PitchTrack::from_csv("time_sec,frequency_hz\n0.0,1\nx,y\n").is_err());
    }

    #[test]
    fn filter_spectra_peak_and_order() {
        // Hann-windowed 512-tap sinusoids
        let freqs = [500.0, 2000.0, 250.0];
        let mut data = Vec::new();
        let tau = 2.0 * std::f64::consts::PI;
        for &f in &freqs {
            data.extend((0..512).map(|n| {
                let w = 0.5 - 0.5 * (tau * n as f64 / 512.0).cos();
                w * (tau * f * n as f64 / 16000.0).sin()
            }));
        }
        let k = Tensor::from_vec(&[3, 1, 512], data).unwrap();
        let rows = filter_spectra(&k).unwrap();
        assert_eq!(rows.len(), 3);
        let bin = 16000.0 / 2048.0;
        let order: Vec<usize> = rows.iter().map(|r| r.filter).collect();
        assert_eq!(order, vec![2, 0, 1]);
        for r in &rows {
            assert!((r.peak_hz - freqs[r.filter]).abs() <= bin, "{} vs {}", r.peak_hz, freqs[r.filter]);
            assert_eq!(r.magnitude.len(), 1025);
        }
        assert!(rows.windows(2).all(|w| w[0].peak_hz <= w[1].peak_hz));
    }

    #[test]
    fn filter_spectra_sort_is_stable() {
        let data: Vec<f64> = (0..4).flat_map(|_| vec![1.0, 0.0, 0.0, 0.0]).collect();
        let k = Tensor::from_vec(&[4, 1, 4], data).unwrap();
        let order: Vec<usize> = filter_spectra(&k).unwrap().iter().map(|r| r.filter).collect();
        assert_eq!(order, vec![0, 1, 2, 3]);
    }

    /// Direct definition, written independently of `cent_errors`.
    fn brute(pairs: &[FramePair], th: f64, chroma: bool) -> f64 {
        let mut voiced = 0usize;
        let mut hit = 0usize;
        for &(r, e) in pairs {
            if r <= 0.0 {
                continue;
            }
            voiced += 1;
            if e <= 0.0 {
                continue;
            }
            let d = 1200.0 * (e / r).log2();
            let err = if chroma {
                (-3..=3).map(|k| (d - 1200.0 * k as f64).abs()).fold(f64::INFINITY, f64::min)
            } else {
                d.abs()
            };
            if err <= th {
                hit += 1;
            }
        }
        hit as f64 / voiced as f64
    }

    proptest::proptest! {
        #[test]
        fn metrics_match_brute_force_and_are_ordered(
            refs in proptest::collection::vec(proptest::option::weighted(0.9, 2000.0f64..9000.0), 2..200),
            errs in proptest::collection::vec(proptest::option::weighted(0.9, -3000.0f64..3000.0), 200),
            dt in -1.0f64..1.0,
        ) {
            proptest::prop_assume!(refs.iter().any(|r| r.is_some()));
            let rf: Vec<f64> = refs.iter().map(|r| r.map_or(0.0, cents_to_freq)).collect();
            let ef: Vec<f64> = refs.iter().zip(&errs).map(|(r, e)| match (r, e) {
                (Some(c), Some(d)) => cents_to_freq(c + d),
                _ => 0.0,
            }).collect();
            let pairs = align(&track(&rf), &track(&ef));
            let mut prev = (1.0f64, 1.0f64);
            for th in DEFAULT_THRESHOLDS {
                let (p, c) = (rpa(&pairs, th).unwrap(), rca(&pairs, th).unwrap());
                proptest::prop_assert!((p - brute(&pairs, th, false)).abs() < 1e-12);
                proptest::prop_assert!((c - brute(&pairs, th, true)).abs() < 1e-12);
                proptest::prop_assert!(c >= p);
                proptest::prop_assert!(p <= prev.0 && c <= prev.1);
                prev = (p, c);
            }
            let moved = align(&track(&rf).shifted(dt), &track(&ef).shifted(dt));
            proptest::prop_assert_eq!(rpa(&moved, 50.0).unwrap(), rpa(&pairs, 50.0).unwrap());
        }
    }
}
