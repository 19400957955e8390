use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde_json::json;

use pitchnet::baseline::{YinParams, YinPredictor};
use pitchnet::datagen::{self, derive_seed, CorpusProfile, NoiseKind};
use pitchnet::eval::{
    self, align, evaluate_pairs, filter_spectra, filter_spectra_csv, noise_curve, noise_curve_csv,
    NetworkPredictor, PitchPredictor, PitchTrack, SNR_LADDER,
};
use pitchnet::network::{
    load_model, model_hash, save_model, AdamConfig, Hyperparameters, Network,
    NetworkConfig,
};
use pitchnet::signal::{self, MODEL_RATE};
use pitchnet::training::{self, make_folds, DatasetManifest, TrainOptions, TrainProfile};
use pitchnet::par;

use crate::echo::{config_echo, write_echo};
use crate::{
    DegradeArgs, EvalArgs, Global, InspectArgs, Outcome, PredictArgs, PredictYinArgs,
    RobustnessArgs, SynthArgs, TrainArgs,
};

// Seed streams split off the root seed.
const STREAM_DEGRADE: u64 = 10;
const STREAM_FOLDS: u64 = 11;
const STREAM_TRAIN: u64 = 12;
const STREAM_ROBUSTNESS: u64 = 13;

type Failures = Vec<(String, String)>;

fn outcome(failed: Failures) -> Outcome {
    if failed.is_empty() {
        Outcome::Done
    } else {
        Outcome::Partial(failed)
    }
}

fn manifest_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join("manifest.json")
    } else {
        p.to_path_buf()
    }
}

fn create_dir(p: &Path) -> Result<()> {
    fs::create_dir_all(p).with_context(|| format!("creating {}", p.display()))
}

fn hop_samples(hop_ms: f64) -> Result<usize> {
    let hop = (hop_ms * MODEL_RATE as f64 / 1000.0).round();
    if !(hop >= 1.0) {
        bail!("hop of {hop_ms} ms is shorter than one sample");
    }
    Ok(hop as usize)
}

/// Sorted files in `dir` with the given extension.
fn files_with_ext(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        if path.is_file() && path.extension().is_some_and(|e| e.eq_ignore_ascii_case(ext)) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn note(g: &Global, msg: impl AsRef<str>) {
    if g.verbose {
        eprintln!("{}", msg.as_ref());
    }
}

// ---------------------------------------------------------------------------

pub fn synth(g: &Global, a: &SynthArgs) -> Result<Outcome> {
    let mut profile = match &a.profile {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            CorpusProfile::from_json(&text)?
        }
        None => CorpusProfile::sine_corpus(),
    };
    if !a.keep_profile_seed {
        profile.seed = g.seed;
    }
    let manifest = datagen::write_corpus(&profile, &a.out)?;
    note(g, format!("wrote {} tracks to {}", manifest.tracks.len(), a.out.display()));
    write_echo(&a.out, &config_echo("synth", g, a)?)?;
    Ok(Outcome::Done)
}

pub fn degrade(g: &Global, a: &DegradeArgs) -> Result<Outcome> {
    let kind = NoiseKind::parse(&a.noise)?;
    if a.snr.is_nan() || a.snr == f64::NEG_INFINITY {
        bail!("SNR must be a number or inf");
    }
    let (manifest, base) = DatasetManifest::load(manifest_path(&a.input))?;
    create_dir(&a.out)?;
    let results = par::map_range(manifest.tracks.len(), |i| -> Result<training::TrackEntry> {
        let t = &manifest.tracks[i];
        let (src_wav, src_csv) = (base.join(&t.audio), base.join(&t.annotation));
        let wav = file_name(&src_wav);
        let csv = file_name(&src_csv);
        let dst = a.out.join(&wav);
        if a.snr.is_infinite() {
            fs::copy(&src_wav, &dst).with_context(|| format!("copying {}", src_wav.display()))?;
        } else {
            let clean = signal::read_wav(&src_wav)?;
            let noise = datagen::gen_noise(&kind, clean.len(), clean.sample_rate, derive_seed(derive_seed(g.seed, STREAM_DEGRADE), i as u64))?;
            let mix = datagen::mix_components(&clean, &noise, a.snr)?;
            let measured = 10.0 * (mix.signal.power() / mix.noise.power()).log10();
            note(g, format!("{}: snr {measured:.3} dB", t.id));
            let tmp = dst.with_extension("part");
            signal::write_wav(&tmp, &mix.mixture)?;
            fs::rename(&tmp, &dst)?;
        }
        fs::copy(&src_csv, a.out.join(&csv)).with_context(|| format!("copying {}", src_csv.display()))?;
        Ok(training::TrackEntry { audio: wav, annotation: csv, ..t.clone() })
    });
    let mut tracks = Vec::new();
    let mut failed = Failures::new();
    for (t, r) in manifest.tracks.iter().zip(results) {
        match r {
            Ok(e) => tracks.push(e),
            Err(e) => failed.push((t.id.clone(), format!("{e:#}"))),
        }
    }
    let out_manifest = DatasetManifest {
        name: format!("{}+{}@{}", manifest.name, kind.label(), a.snr),
        tracks,
        ..manifest
    };
    fs::write(a.out.join("manifest.json"), serde_json::to_string_pretty(&out_manifest)?)?;
    write_echo(&a.out, &config_echo("degrade", g, a)?)?;
    Ok(outcome(failed))
}

fn network_config(spec: &str) -> Result<NetworkConfig> {
    let cfg = match spec {
        "toy" => NetworkConfig::toy(),
        "full" => NetworkConfig::full(),
        path => {
            let text = fs::read_to_string(path).with_context(|| format!("reading network config {path}"))?;
            serde_json::from_str(&text).with_context(|| format!("parsing network config {path}"))?
        }
    };
    cfg.plan()?;
    Ok(cfg)
}

pub fn train(g: &Global, a: &TrainArgs) -> Result<Outcome> {
    let config = network_config(&a.config)?;
    let mut profile = TrainProfile::by_name(&a.profile)?;
    if let Some(n) = a.max_epochs {
        profile.max_epochs = n;
    }
    let (manifest, base) = DatasetManifest::load(manifest_path(&a.data))?;
    let folds = make_folds(&manifest.groups(), a.folds, derive_seed(g.seed, STREAM_FOLDS))?;
    let fold = folds
        .get(a.fold)
        .ok_or_else(|| anyhow!("fold {} out of range: {} folds (0..{})", a.fold, a.folds, a.folds - 1))?;
    let train_tracks = manifest.load_tracks(&base, &fold.train)?;
    let val_tracks = manifest.load_tracks(&base, &fold.validation)?;
    let adam = AdamConfig { lr: a.lr.unwrap_or(AdamConfig::default().lr), ..AdamConfig::default() };
    let opts = TrainOptions { profile, adam, seed: derive_seed(g.seed, STREAM_TRAIN) };
    note(g, format!("fold {}: {} train, {} validation tracks", a.fold, train_tracks.len(), val_tracks.len()));
    let outcome = training::train(&config, &train_tracks, &val_tracks, &opts, &mut |e| {
        note(g, format!("epoch {:4}  loss {:.5}  val RPA@50 {:.4}", e.epoch, e.train_loss, e.val_rpa50));
    })?;

    let ids = |ix: &[usize]| ix.iter().map(|&i| manifest.tracks[i].id.clone()).collect::<Vec<_>>();
    let echo = config_echo("train", g, a)?;
    let extra = json!({
        "config_echo": echo,
        "training_profile": opts.profile,
        "fold": { "index": a.fold, "k": a.folds, "train": ids(&fold.train), "validation": ids(&fold.validation), "test": ids(&fold.test) },
        "best_epoch": outcome.history.best_epoch,
        "stopped_early": outcome.history.stopped_early,
    });
    let hyper = Hyperparameters { adam, ..Hyperparameters::default() };
    save_model(&outcome.net, &hyper, extra, &a.out)?;
    fs::write(a.out.join("history.csv"), outcome.history.to_csv())?;
    write_echo(&a.out, &echo)?;
    note(g, format!("model {} ({})", a.out.display(), model_hash(&a.out)?));
    Ok(Outcome::Done)
}

/// Runs `predictor` on one WAV, or on every WAV of a directory writing
/// `<stem>.csv` files into `out`.
fn predict_paths(g: &Global, predictor: &dyn PitchPredictor, input: &Path, out: &Path) -> Result<Failures> {
    let run = |wav: &Path, csv: &Path| -> Result<()> {
        let audio = signal::read_wav(wav)?;
        predictor.predict(&audio)?.write_csv(csv)?;
        Ok(())
    };
    if input.is_dir() {
        create_dir(out)?;
        let wavs = files_with_ext(input, "wav")?;
        if wavs.is_empty() {
            bail!("no .wav files in {}", input.display());
        }
        let mut failed = Failures::new();
        for wav in wavs {
            let csv = out.join(wav.with_extension("csv").file_name().unwrap_or_default());
            match run(&wav, &csv) {
                Ok(()) => note(g, format!("{} -> {}", wav.display(), csv.display())),
                Err(e) => failed.push((wav.display().to_string(), format!("{e:#}"))),
            }
        }
        Ok(failed)
    } else {
        run(input, out)?;
        Ok(Vec::new())
    }
}

fn with_model_hash(mut echo: serde_json::Value, model: &Path) -> Result<serde_json::Value> {
    echo["model_hash"] = json!(model_hash(model)?);
    Ok(echo)
}

fn load_predictor(model: &Path, hop_ms: f64) -> Result<NetworkPredictor> {
    let (net, _) = load_model::<f32>(model)?;
    Ok(NetworkPredictor { net, hop: hop_samples(hop_ms)? })
}

pub fn predict(g: &Global, a: &PredictArgs) -> Result<Outcome> {
    let predictor = load_predictor(&a.model, a.hop)?;
    let failed = predict_paths(g, &predictor, &a.input, &a.out)?;
    write_echo(&a.out, &with_model_hash(config_echo("predict", g, a)?, &a.model)?)?;
    Ok(outcome(failed))
}

pub fn predict_yin(g: &Global, a: &PredictYinArgs) -> Result<Outcome> {
    let params = YinParams { threshold: a.threshold, ..YinParams::default() };
    params.validate(signal::FRAME_LEN)?;
    let predictor = YinPredictor { params, hop: hop_samples(a.hop)? };
    let failed = predict_paths(g, &predictor, &a.input, &a.out)?;
    write_echo(&a.out, &config_echo("predict-yin", g, a)?)?;
    Ok(outcome(failed))
}

pub fn eval(g: &Global, a: &EvalArgs) -> Result<Outcome> {
    if a.thresholds.is_empty() || a.thresholds.iter().any(|t| !(*t > 0.0)) {
        bail!("thresholds must be positive");
    }
    let refs = files_with_ext(&a.reference, "csv")?;
    if refs.is_empty() {
        bail!("no reference CSVs in {}", a.reference.display());
    }
    let mut rows = Vec::new();
    let mut errors = Failures::new();
    for r in &refs {
        let id = r.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let est = a.est.join(file_name(r));
        let scored = PitchTrack::read_csv(r).and_then(|reference| {
            let estimate = PitchTrack::read_csv(&est)?;
            evaluate_pairs(&id, &align(&reference, &estimate), &a.thresholds)
        });
        match scored {
            Ok(m) => rows.extend(m),
            Err(e) => errors.push((id, e.to_string())),
        }
    }
    let mut report = eval::aggregate(rows, &a.thresholds);
    report.errors = errors.clone();
    fs::write(&a.out, report.to_csv()).with_context(|| format!("writing {}", a.out.display()))?;
    for s in &report.summary {
        note(g, format!("@{} cents: RPA {:.4} ± {:.4}, RCA {:.4} ± {:.4} ({} tracks)", s.threshold, s.rpa_mean, s.rpa_std, s.rca_mean, s.rca_std, s.tracks));
    }
    write_echo(&a.out, &config_echo("eval", g, a)?)?;
    Ok(outcome(errors))
}

pub fn robustness(g: &Global, a: &RobustnessArgs) -> Result<Outcome> {
    let kinds = a.noise.iter().map(|s| NoiseKind::parse(s)).collect::<pitchnet::Result<Vec<_>>>()?;
    let (manifest, base) = DatasetManifest::load(manifest_path(&a.data))?;
    let indices: Vec<usize> = match a.fold {
        Some(f) => {
            let folds = make_folds(&manifest.groups(), a.folds, derive_seed(g.seed, STREAM_FOLDS))?;
            folds.get(f).ok_or_else(|| anyhow!("fold {f} out of range: {} folds", a.folds))?.test.clone()
        }
        None => (0..manifest.tracks.len()).collect(),
    };
    let tracks = manifest.load_tracks(&base, &indices)?;
    let seed = derive_seed(g.seed, STREAM_ROBUSTNESS);
    let mut echo = config_echo("robustness", g, a)?;
    let rows = match &a.model {
        Some(m) if !a.yin => {
            echo = with_model_hash(echo, m)?;
            noise_curve(&load_predictor(m, a.hop)?, &tracks, &kinds, &SNR_LADDER, seed)
        }
        _ => {
            let yin = YinPredictor { hop: hop_samples(a.hop)?, ..YinPredictor::default() };
            noise_curve(&yin, &tracks, &kinds, &SNR_LADDER, seed)
        }
    };
    fs::write(&a.out, noise_curve_csv(&rows)).with_context(|| format!("writing {}", a.out.display()))?;
    if let Some(h) = echo.get("model_hash") {
        note(g, format!("model hash {h}"));
    }
    write_echo(&a.out, &echo)?;
    let failed = rows
        .iter()
        .flat_map(|r| {
            let cell = format!("{}@{}", r.noise_kind, r.snr_db);
            r.failures.iter().map(move |(t, e)| (format!("{cell}/{t}"), e.clone()))
        })
        .collect();
    Ok(outcome(failed))
}

pub fn inspect_filters(g: &Global, a: &InspectArgs) -> Result<Outcome> {
    let (net, _): (Network<f32>, _) = load_model(&a.model)?;
    let kernel = net.first_conv_kernel().ok_or_else(|| anyhow!("model has no convolutional layer"))?;
    let rows = filter_spectra(kernel)?;
    fs::write(&a.out, filter_spectra_csv(&rows)).with_context(|| format!("writing {}", a.out.display()))?;
    let echo = with_model_hash(config_echo("inspect-filters", g, a)?, &a.model)?;
    note(g, format!("{} filters, model hash {}", rows.len(), echo["model_hash"]));
    write_echo(&a.out, &echo)?;
    Ok(Outcome::Done)
}
