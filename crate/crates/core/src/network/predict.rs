use super::model::Network;
use crate::cents::{cents_to_freq, confidence, CentGrid};
use crate::eval::PitchTrack;
use crate::par;
use crate::signal::{self, AudioBuffer, FrameSequence, MODEL_RATE};
use crate::{Error, Result};

const PREDICT_BATCH: usize = 64;

/// Per-frame activations for already-normalized frames, `len x 360`.
pub fn activations(net: &Network<f32>, frames: &FrameSequence) -> Result<Vec<f32>> {
    if frames.frame_len != net.input_len() {
        return Err(Error::ShapeMismatch(format!(
            "frames have {} samples, network expects {}",
            frames.frame_len,
            net.input_len()
        )));
    }
    let flat = frames.as_flat();
    let n = frames.len();
    let chunks = par::map_range(n.div_ceil(PREDICT_BATCH), |c| {
        let lo = c * PREDICT_BATCH;
        let hi = (lo + PREDICT_BATCH).min(n);
        net.forward_eval(&flat[lo * frames.frame_len..hi * frames.frame_len], hi - lo)
    });
    let mut out = Vec::with_capacity(n * net.output_dim());
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

/// Eval-mode forward, weighted-average decoding and conversion to Hz for
/// each normalized frame. Frames with an all-zero activation are reported
/// as unvoiced (0 Hz).
pub fn predict(net: &Network<f32>, frames: &FrameSequence) -> Result<PitchTrack> {
    let grid = CentGrid::default();
    let act = activations(net, frames)?;
    let mut freq = Vec::with_capacity(frames.len());
    let mut conf = Vec::with_capacity(frames.len());
    for a in act.chunks_exact(net.output_dim()) {
        match grid.decode(a) {
            Ok(c) => freq.push(cents_to_freq(c)),
            Err(Error::Unvoiced) => freq.push(0.0),
            Err(e) => return Err(e),
        }
        conf.push(confidence(a));
    }
    PitchTrack::new(frames.timestamps.clone(), freq, Some(conf))
}

/// Resamples to 16 kHz, frames with the given hop, normalizes and predicts.
pub fn predict_audio(net: &Network<f32>, audio: &AudioBuffer, hop: usize) -> Result<PitchTrack> {
    let audio = signal::resample(audio, MODEL_RATE)?;
    let frames = signal::frame_signal(&audio, net.input_len(), hop)?.normalized();
    predict(net, &frames)
}
