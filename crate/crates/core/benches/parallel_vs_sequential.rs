//! Same workloads with the rayon path switched on and off.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pitchnet::baseline::YinPredictor;
use pitchnet::datagen::{gen_f0_trajectory, synth_harmonic, TimbreSpec, Trajectory};
use pitchnet::eval::PitchPredictor;
use pitchnet::network::{bce_logit_grad, Network, NetworkConfig, OutputGrad};
use pitchnet::par;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn modes() -> Vec<(&'static str, bool)> {
    if cfg!(feature = "parallel") {
        vec![("sequential", false), ("parallel", true)]
    } else {
        vec![("sequential", false)]
    }
}

fn train_step(c: &mut Criterion) {
    let net = Network::<f32>::new(NetworkConfig::toy(), 1).unwrap();
    let batch = 32;
    let input: Vec<f32> = (0..batch * 1024).map(|i| ((i * 7919) % 1000) as f32 / 500.0 - 1.0).collect();
    let target = vec![0.01f32; batch * 360];
    let mut g = c.benchmark_group("toy_train_step_b32");
    g.sample_size(10);
    for (name, on) in modes() {
        par::set_enabled(on);
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            b.iter(|| {
                let (pred, cache) = net.forward_train(black_box(&input), batch, &mut rng).unwrap();
                let grads = net
                    .backward(&cache, OutputGrad::Logit(bce_logit_grad(&target, &pred)))
                    .unwrap();
                black_box(grads)
            })
        });
    }
    par::set_enabled(true);
    g.finish();
}

fn yin_track(c: &mut Criterion) {
    let f0 = gen_f0_trajectory(&Trajectory::Vibrato { center_hz: 330.0, depth_cents: 40.0, rate_hz: 5.0 }, 3.0, 0.01).unwrap();
    let audio = synth_harmonic(&f0, &TimbreSpec::sine(), 16000).unwrap();
    let yin = YinPredictor::default();
    let mut g = c.benchmark_group("yin_3s_track");
    g.sample_size(10);
    for (name, on) in modes() {
        par::set_enabled(on);
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| black_box(yin.predict(&audio).unwrap())));
    }
    par::set_enabled(true);
    g.finish();
}

criterion_group!(benches, train_step, yin_track);
criterion_main!(benches);
