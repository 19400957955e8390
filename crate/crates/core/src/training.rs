//! Dataset manifests, group-conditional folds, batch sampling and the
//! training loop with validation-based early stopping.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cents::{freq_to_cents, CentGrid, N_BINS};
use crate::datagen::derive_seed;
use crate::eval::{EvalTrack, PitchTrack};
use crate::network::{
    bce_loss, bce_logit_grad, AdamConfig, AdamState, Network, NetworkConfig, OutputGrad,
};
use crate::signal::{centered_frame, normalize_in_place, read_wav, resample, MODEL_RATE};
use crate::{par, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackEntry {
    pub id: String,
    pub group: String,
    /// Paths are relative to the manifest's directory unless absolute.
    pub audio: String,
    pub annotation: String,
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub sample_rate: u32,
    pub hop: usize,
    pub tracks: Vec<TrackEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<serde_json::Value>,
}

impl DatasetManifest {
    /// Reads the manifest and remembers its directory for path resolution.
    pub fn load(path: impl AsRef<Path>) -> Result<(Self, PathBuf)> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: Self = serde_json::from_str(&text).map_err(|e| Error::parse("dataset manifest", e.to_string()))?;
        if m.tracks.is_empty() {
            return Err(Error::Empty("dataset manifest has no tracks"));
        }
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((m, base))
    }

    pub fn groups(&self) -> Vec<String> {
        self.tracks.iter().map(|t| t.group.clone()).collect()
    }

    /// Loads audio (resampled to 16 kHz) and annotations for `indices`.
    pub fn load_tracks(&self, base: &Path, indices: &[usize]) -> Result<Vec<EvalTrack>> {
        let loaded = par::map_slice(indices, |&i| -> Result<EvalTrack> {
            let t = self
                .tracks
                .get(i)
                .ok_or_else(|| Error::InvalidArgument(format!("track index {i} out of range")))?;
            let audio = resample(&read_wav(base.join(&t.audio))?, MODEL_RATE)?;
            let reference = PitchTrack::read_csv(base.join(&t.annotation))?;
            Ok(EvalTrack {
                id: t.id.clone(),
                audio,
                reference,
            })
        });
        loaded.into_iter().collect()
    }
}

/// Track indices of one fold; no group appears in more than one split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub index: usize,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Group-conditional k-fold split. Distinct groups are shuffled with
/// `seed` and dealt round-robin into `k` test buckets. For each fold the
/// remaining groups, in shuffled order, are split 3:1 into training and
/// validation.
pub fn make_folds(groups: &[String], k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("need k >= 2 folds, got {k}")));
    }
    let mut distinct: Vec<&String> = groups.iter().collect::<BTreeSet<_>>().into_iter().collect();
    if distinct.len() < k + 2 {
        return Err(Error::TooFewGroups {
            needed: k + 2,
            found: distinct.len(),
        });
    }
    distinct.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let tracks_of = |gs: &[&String]| -> Vec<usize> {
        let set: BTreeSet<&String> = gs.iter().copied().collect();
        (0..groups.len()).filter(|&i| set.contains(&groups[i])).collect()
    };
    Ok((0..k)
        .map(|f| {
            let (test, rest): (Vec<(usize, &String)>, Vec<(usize, &String)>) =
                distinct.iter().copied().enumerate().partition(|(j, _)| j % k == f);
            let test: Vec<&String> = test.into_iter().map(|(_, g)| g).collect();
            let rest: Vec<&String> = rest.into_iter().map(|(_, g)| g).collect();
            let n_val = ((rest.len() as f64 / 4.0).round() as usize).clamp(1, rest.len() - 1);
            let (train, val) = rest.split_at(rest.len() - n_val);
            Fold {
                index: f,
                train: tracks_of(train),
                validation: tracks_of(val),
                test: tracks_of(&test),
            }
        })
        .collect())
}

/// Every reference-voiced frame of a set of tracks, addressable for
/// uniform sampling.
pub struct FramePool<'a> {
    tracks: &'a [EvalTrack],
    /// (track, center sample, cents)
    frames: Vec<(usize, isize, f64)>,
}

impl<'a> FramePool<'a> {
    pub fn new(tracks: &'a [EvalTrack]) -> Result<Self> {
        let mut frames = Vec::new();
        for (ti, t) in tracks.iter().enumerate() {
            if t.audio.sample_rate != MODEL_RATE {
                return Err(Error::InvalidArgument(format!("track {} is not at 16 kHz", t.id)));
            }
            for (&time, &f) in t.reference.timestamps.iter().zip(&t.reference.frequency) {
                if f > 0.0 {
                    let center = (time * MODEL_RATE as f64).round() as isize;
                    frames.push((ti, center, freq_to_cents(f)?));
                }
            }
        }
        if frames.is_empty() {
            return Err(Error::NoVoicedFrames);
        }
        Ok(Self { tracks, frames })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Normalized input frame and pitch in cents of pooled frame `i`.
    pub fn frame_into(&self, i: usize, out: &mut [f32]) -> f64 {
        let (t, center, cents) = self.frames[i];
        centered_frame(&self.tracks[t].audio.samples, center, out.len(), out);
        normalize_in_place(out);
        cents
    }
}

/// `batch x frame_len` inputs and `batch x 360` Gaussian targets.
#[derive(Debug, Clone)]
pub struct Batch {
    pub size: usize,
    pub inputs: Vec<f32>,
    pub targets: Vec<f32>,
}

/// Draws frames uniformly (with replacement) from the voiced pool.
pub fn sample_batch<R: Rng + ?Sized>(
    pool: &FramePool,
    grid: &CentGrid,
    batch: usize,
    frame_len: usize,
    rng: &mut R,
) -> Batch {
    let picks: Vec<usize> = (0..batch).map(|_| rng.random_range(0..pool.len())).collect();
    let mut inputs = vec![0.0f32; batch * frame_len];
    let mut targets = vec![0.0f32; batch * N_BINS];
    par::for_each_chunk_pair_mut(&mut inputs, frame_len, &mut targets, N_BINS, |b, x, y| {
        let c = pool.frame_into(picks[b], x);
        grid.encode_target_into(c, y);
    });
    Batch {
        size: batch,
        inputs,
        targets,
    }
}

/// Frames of the validation tracks at every `stride`-th voiced
/// annotation point.
pub struct ValidationSet {
    inputs: Vec<f32>,
    cents: Vec<f64>,
    /// Frame range of each track.
    spans: Vec<(usize, usize)>,
    frame_len: usize,
}

impl ValidationSet {
    pub fn new(tracks: &[EvalTrack], frame_len: usize, stride: usize) -> Result<Self> {
        let pool = FramePool::new(tracks)?;
        let stride = stride.max(1);
        let mut keep = Vec::new();
        let mut spans = Vec::new();
        for t in 0..tracks.len() {
            let start = keep.len();
            keep.extend(
                (0..pool.len())
                    .filter(|&i| pool.frames[i].0 == t)
                    .step_by(stride),
            );
            if keep.len() > start {
                spans.push((start, keep.len()));
            }
        }
        let mut inputs = vec![0.0f32; keep.len() * frame_len];
        let mut cents = vec![0.0; keep.len()];
        par::for_each_chunk_pair_mut(&mut inputs, frame_len, &mut cents, 1, |k, x, c| {
            c[0] = pool.frame_into(keep[k], x);
        });
        Ok(Self {
            inputs,
            cents,
            spans,
            frame_len,
        })
    }

    pub fn len(&self) -> usize {
        self.cents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cents.is_empty()
    }

    /// Mean over tracks of the fraction of frames within `threshold` cents.
    pub fn rpa(&self, net: &Network<f32>, threshold: f64) -> Result<f64> {
        const CHUNK: usize = 64;
        let n = self.len();
        let grid = CentGrid::default();
        let chunks = par::map_range(n.div_ceil(CHUNK), |c| -> Result<Vec<bool>> {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(n);
            let out = net.forward_eval(&self.inputs[lo * self.frame_len..hi * self.frame_len], hi - lo)?;
            Ok(out
                .chunks_exact(N_BINS)
                .zip(&self.cents[lo..hi])
                .map(|(a, &truth)| grid.decode(a).is_ok_and(|est| (est - truth).abs() <= threshold))
                .collect())
        });
        let mut hits = Vec::with_capacity(n);
        for c in chunks {
            hits.extend(c?);
        }
        let per_track: Vec<f64> = self
            .spans
            .iter()
            .map(|&(a, b)| hits[a..b].iter().filter(|&&h| h).count() as f64 / (b - a) as f64)
            .collect();
        Ok(per_track.iter().sum::<f64>() / per_track.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainProfile {
    pub name: String,
    pub batch_size: usize,
    pub batches_per_epoch: usize,
    pub patience: usize,
    pub max_epochs: usize,
    /// Keep every n-th voiced validation frame.
    pub validation_stride: usize,
}

impl TrainProfile {
    /// 500 batches of 32 per epoch, stop after 32 epochs without improvement.
    pub fn paper() -> Self {
        Self {
            name: "paper".into(),
            batch_size: 32,
            batches_per_epoch: 500,
            patience: 32,
            max_epochs: 10_000,
            validation_stride: 1,
        }
    }

    /// Small-budget variant: 200 batches per epoch, patience 16, at most 140
    /// epochs. Validation uses every 8th voiced frame.
    pub fn toy() -> Self {
        Self {
            name: "toy".into(),
            batch_size: 32,
            batches_per_epoch: 200,
            patience: 16,
            max_epochs: 140,
            validation_stride: 8,
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "paper" => Ok(Self::paper()),
            "toy" => Ok(Self::toy()),
            other => Err(Error::InvalidArgument(format!("unknown training profile {other:?}"))),
        }
    }
}

/// What the stopping rule says after scoring an epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    Continue,
    Stop,
}

/// Keeps the best validation score; stops after `patience` epochs in a row
/// without a strict improvement.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    pub patience: usize,
    pub best: Option<(usize, f64)>,
    since_best: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: None,
            since_best: 0,
        }
    }

    pub fn observe(&mut self, epoch: usize, score: f64) -> StopDecision {
        if self.best.is_none_or(|(_, b)| score > b) {
            self.best = Some((epoch, score));
            self.since_best = 0;
            return StopDecision::Improved;
        }
        self.since_best += 1;
        if self.since_best >= self.patience {
            StopDecision::Stop
        } else {
            StopDecision::Continue
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub batches: usize,
    pub train_loss: f64,
    pub val_rpa50: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: Option<usize>,
    pub stopped_early: bool,
}

impl TrainHistory {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,batches,train_loss,val_rpa50,best\n");
        for e in &self.epochs {
            let best = u8::from(self.best_epoch == Some(e.epoch));
            let _ = writeln!(s, "{},{},{:.6},{:.6},{best}", e.epoch, e.batches, e.train_loss, e.val_rpa50);
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub profile: TrainProfile,
    pub adam: AdamConfig,
    pub seed: u64,
}

pub struct TrainOutcome {
    /// Weights (and batch-norm statistics) of the best validation epoch.
    pub net: Network<f32>,
    pub history: TrainHistory,
}

/// Trains from a fresh initialization. After every epoch the model is
/// scored by RPA@50 on the validation tracks; the best snapshot is kept and
/// returned. A non-finite loss aborts with [`Error::Diverged`].
pub fn train(
    config: &NetworkConfig,
    train_tracks: &[EvalTrack],
    val_tracks: &[EvalTrack],
    opts: &TrainOptions,
    on_epoch: &mut dyn FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    let profile = &opts.profile;
    if profile.batch_size == 0 || profile.batches_per_epoch == 0 || profile.max_epochs == 0 {
        return Err(Error::InvalidConfig("training profile sizes must be positive".into()));
    }
    let mut net = Network::<f32>::new(config.clone(), derive_seed(opts.seed, 1))?;
    let pool = FramePool::new(train_tracks)?;
    let val = ValidationSet::new(val_tracks, net.input_len(), profile.validation_stride)?;
    let grid = CentGrid::default();
    let mut adam = AdamState::new(&net.params, opts.adam);
    let mut sample_rng = ChaCha8Rng::seed_from_u64(derive_seed(opts.seed, 2));
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(derive_seed(opts.seed, 3));
    let mut stopper = EarlyStopping::new(profile.patience.max(1));
    let mut history = TrainHistory::default();
    let mut best_net = net.clone();

    for epoch in 0..profile.max_epochs {
        let mut loss_sum = 0.0;
        for b in 0..profile.batches_per_epoch {
            let batch = sample_batch(&pool, &grid, profile.batch_size, net.input_len(), &mut sample_rng);
            let (pred, cache) = net.forward_train(&batch.inputs, batch.size, &mut dropout_rng)?;
            let (loss, _) = bce_loss(&batch.targets, &pred);
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, batch: b });
            }
            loss_sum += loss / batch.size as f64;
            let grads = net.backward(&cache, OutputGrad::Logit(bce_logit_grad(&batch.targets, &pred)))?;
            if grads.iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged { epoch, batch: b });
            }
            adam.step(&mut net.params, &grads)?;
            net.update_running_stats(&cache);
        }
        if !net.params.is_finite() {
            return Err(Error::Diverged {
                epoch,
                batch: profile.batches_per_epoch,
            });
        }
        let record = EpochRecord {
            epoch,
            batches: profile.batches_per_epoch,
            train_loss: loss_sum / profile.batches_per_epoch as f64,
            val_rpa50: val.rpa(&net, 50.0)?,
        };
        on_epoch(&record);
        history.epochs.push(record.clone());
        match stopper.observe(epoch, record.val_rpa50) {
            StopDecision::Improved => best_net = net.clone(),
            StopDecision::Continue => {}
            StopDecision::Stop => {
                history.stopped_early = true;
                break;
            }
        }
    }
    history.best_epoch = stopper.best.map(|(e, _)| e);
    Ok(TrainOutcome {
        net: best_net,
        history,
    })
}
