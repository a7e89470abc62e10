//! The paths that dominate training time: spec parsing, engine stepping,
//! frame rendering, state encoding, and both learners' update rules.

use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use affplay_core::dqn::{apply_gradients, backward, cell_means, DenseNet, TransitionSample};
use affplay_core::encoder::builtin_config;
use affplay_core::gamespec::{parse, serialize};
use affplay_core::pipeline::{calibrate, frame_state, CalibrationOptions};
use affplay_core::qlearner::{LearnerConfig, QTable};
use affplay_core::{builtin_spec, BuiltinGame, Env, Session};

fn session(game: BuiltinGame, seed: u64) -> Session {
    Session::new(Arc::new(builtin_spec(game).clone()), seed)
}

fn bench_parse(c: &mut Criterion) {
    // Canonical serialized form, the densest of the four specs.
    let text = serialize(builtin_spec(BuiltinGame::SpaceInvaders));
    c.bench_function("parse_spaceinvaders", |b| {
        b.iter(|| parse(&text).unwrap());
    });
}

fn bench_step(c: &mut Criterion) {
    c.bench_function("step_spaceinvaders", |b| {
        let mut env = session(BuiltinGame::SpaceInvaders, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        b.iter(|| {
            if !env.running() {
                env.reset(rng.random());
            }
            env.step(rng.random_range(0..env.action_count()))
        });
    });
}

fn bench_render(c: &mut Criterion) {
    let env = session(BuiltinGame::SpaceInvaders, 1);
    c.bench_function("render_frame", |b| {
        b.iter(|| env.render_frame(4));
    });
    let frame = env.render_frame(4);
    let (gw, gh) = env.grid_size();
    c.bench_function("cell_means", |b| {
        b.iter(|| cell_means(&frame, gw, gh));
    });
}

fn bench_encode(c: &mut Criterion) {
    let mut env = session(BuiltinGame::MyAliensV2, 1);
    let cal = calibrate(&mut env, 1, &CalibrationOptions::default()).unwrap();
    let enc = builtin_config(BuiltinGame::MyAliensV2);
    let gw = env.grid_size().0;
    // A mid-episode frame with pellets and aliens in flight.
    env.reset(3);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..40 {
        if !env.running() {
            break;
        }
        env.step(rng.random_range(0..env.action_count()));
    }
    let objects = env.observe();
    c.bench_function("encode_frame", |b| {
        b.iter(|| frame_state(&enc, gw, &cal.model, &objects));
    });
}

fn bench_q_update(c: &mut Criterion) {
    let cfg = LearnerConfig::default();
    let states: Vec<u64> = (0..256).map(|i| i * 37 % 1021).collect();
    c.bench_function("q_update", |b| {
        let mut q = QTable::default();
        let mut i = 0usize;
        b.iter(|| {
            let s = states[i % states.len()];
            let s2 = states[(i + 1) % states.len()];
            q.update(s, i % 3, 1.0, Some(s2), 3, &cfg);
            i += 1;
        });
    });
}

fn bench_dqn_batch(c: &mut Criterion) {
    let net = DenseNet::new(&[600, 128, 64, 4], 5);
    let target = net.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let batch: Vec<TransitionSample> = (0..32)
        .map(|i| TransitionSample {
            frame: (0..600).map(|_| rng.random::<f64>()).collect(),
            action: i % 4,
            reward: rng.random::<f64>(),
            next_frame: (0..600).map(|_| rng.random::<f64>()).collect(),
            terminal: i % 5 == 0,
        })
        .collect();
    let refs: Vec<&TransitionSample> = batch.iter().collect();
    c.bench_function("dqn_batch_update", |b| {
        let mut net = net.clone();
        b.iter(|| {
            let grads = backward(&net, &refs, 0.95, &target);
            apply_gradients(&mut net, &grads, 1e-3);
        });
    });
}

criterion_group!(
    benches,
    bench_parse,
    bench_step,
    bench_render,
    bench_encode,
    bench_q_update,
    bench_dqn_batch
);
criterion_main!(benches);
