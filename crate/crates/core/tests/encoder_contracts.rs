//! What makes appearance variants free for the tabular learner: the state
//! bits cannot see color, size, or sprite. Plus locality and key packing.

use std::sync::Arc;

use affplay_core::encoder::{builtin_config, encode, state_key, unpack_key, EncoderConfig};
use affplay_core::engine::{Env, ObservedObject, Session};
use affplay_core::gamespec::{apply_variant, builtin_spec, BuiltinGame, VariantTag};
use affplay_core::perception::Category;
use affplay_core::pipeline::{calibrate, frame_state, CalibrationOptions};
use proptest::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Identical seeds and identical actions on an appearance variant must
/// produce the exact same state keys, step for step. Each side calibrates
/// on its own look; the bits still agree because only positions matter.
#[test]
fn appearance_variants_encode_bit_identically() {
    let cells = [
        (BuiltinGame::MyAliensV1, VariantTag::ModColorSize),
        (BuiltinGame::MyAliensV2, VariantTag::ModColorSize),
        (BuiltinGame::Roadrash, VariantTag::ModColorSize),
        (BuiltinGame::SpaceInvaders, VariantTag::ModColorSize),
        (BuiltinGame::Roadrash, VariantTag::ModImage),
        (BuiltinGame::SpaceInvaders, VariantTag::ModImage),
    ];
    for (game, tag) in cells {
        let base = Arc::new(builtin_spec(game).clone());
        let skin = Arc::new(apply_variant(&base, tag, 5).unwrap());
        let enc = builtin_config(game);
        let width = base.grid_width as u32;

        let mut on_base = Session::new(Arc::clone(&base), 1);
        let mut on_skin = Session::new(Arc::clone(&skin), 1);
        let opts = CalibrationOptions::default();
        let cal_base = calibrate(&mut on_base, 1, &opts).unwrap();
        let cal_skin = calibrate(&mut on_skin, 1, &opts).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut episode = 0u64;
        on_base.reset(episode);
        on_skin.reset(episode);
        for t in 0..300u32 {
            if !on_base.running() {
                assert!(!on_skin.running(), "{game:?} {tag:?}: terminals must coincide");
                episode += 1;
                on_base.reset(episode);
                on_skin.reset(episode);
            }
            let action = rng.random_range(0..on_base.action_count());
            let ta = on_base.step(action);
            let tb = on_skin.step(action);
            assert_eq!(ta.reward, tb.reward, "{game:?} {tag:?} step {t}");
            assert_eq!(ta.terminal, tb.terminal);

            let ka = frame_state(&enc, width, &cal_base.model, &on_base.observe());
            let kb = frame_state(&enc, width, &cal_skin.model, &on_skin.observe());
            assert_eq!(ka, kb, "{game:?} {tag:?} step {t}");
        }
    }
}

fn obj(handle: u64, x: i32, y: i32, w: u32, vy: i32) -> ObservedObject {
    ObservedObject {
        handle,
        x,
        y,
        w,
        h: 1,
        color: (200, 60, 60),
        vx: 0,
        vy,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    /// Non-drifting objects whose x-span lies wholly outside the window
    /// can never set a bit, no matter their vertical motion.
    #[test]
    fn objects_outside_the_window_never_register(
        k in 1u32..5,
        agent_x in 8i32..14,
        near in proptest::collection::vec((0u64..50, -4i32..5, 0i32..12, 1u32..3, -2i32..3), 0..5),
        far in proptest::collection::vec((50u64..90, 1i32..8, 0i32..12, 1u32..3, -2i32..3, any::<bool>()), 1..4),
    ) {
        let cfg = EncoderConfig::new(k, vec![Category::MovingBad]).with_bullet_bit();
        let agent = obj(0, agent_x, 10, 1, 0);

        let mut scene: Vec<(Category, ObservedObject)> = near
            .iter()
            .map(|&(h, dx, y, w, vy)| (Category::MovingBad, obj(h, agent_x + dx, y, w, vy)))
            .collect();
        let without = encode(&cfg, &agent, 30, &scene);

        for &(h, gap, y, w, vy, left) in &far {
            let x = if left {
                agent_x - k as i32 - gap - w as i32 + 1
            } else {
                agent_x + k as i32 + gap
            };
            scene.push((Category::MovingBad, obj(h, x, y, w, vy)));
        }
        let with = encode(&cfg, &agent, 30, &scene);
        prop_assert_eq!(&with, &without);

        // Purity: same inputs, same bits.
        prop_assert_eq!(&encode(&cfg, &agent, 30, &scene), &with);
    }
}

/// state_key and unpack_key are inverse bijections on the full key range,
/// for every built-in layout.
#[test]
fn key_packing_round_trips_on_a_thousand_random_states() {
    for game in BuiltinGame::ALL {
        let cfg = builtin_config(game);
        let bits = cfg.total_bits();
        assert!(bits <= 64);
        let mask = if bits == 64 { u64::MAX } else { (1u64 << bits) - 1 };
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..1000 {
            let key = rng.random::<u64>() & mask;
            let state = unpack_key(&cfg, key);
            assert_eq!(state_key(&state), key, "{game:?} key {key:#x}");
        }
    }
}
