use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use aie_core::agents::{PenaltyConfig, PenaltyTracker, PolicyValueNet, RndPair, SilBuffer, Transition};
use aie_core::env::Environment;
use aie_core::grid::{GridConfig, GridWorld, RewardMode};
use aie_core::nn::{DenseNet, HiddenActivation, OutputActivation};
use aie_core::ucav::{apply_action, decode_action, integrate_dynamics, Scenario, UcavEnv, UcavParams, ACTION_COUNT};

fn activation(tanh: bool) -> HiddenActivation {
    if tanh {
        HiddenActivation::Tanh
    } else {
        HiddenActivation::Relu
    }
}

fn grid(mode: RewardMode, max_steps: usize) -> GridWorld {
    GridWorld::new(GridConfig {
        width: 7,
        height: 5,
        start: [3, 2],
        goal: Some([6, 4]),
        mode,
        max_steps,
        ..GridConfig::default()
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn forward_is_pure_and_softmax_normalized(seed in any::<u64>(), hidden in 1usize..16, tanh in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = DenseNet::new(&[6, hidden, 4], activation(tanh), OutputActivation::Softmax, &mut rng).unwrap();
        let x: Vec<f64> = (0..6).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let a = net.forward(&x).unwrap();
        prop_assert_eq!(&a, &net.forward(&x).unwrap());
        prop_assert!(a.iter().all(|&p| p > 0.0));
        prop_assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn fixed_pair_gradient_descent_is_nearly_monotone(seed in any::<u64>(), tanh in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = DenseNet::new(&[8, 16, 16, 4], activation(tanh), OutputActivation::Linear, &mut rng).unwrap();
        let x: Vec<f64> = (0..8).map(|_| rng.gen_range(0.0..1.0)).collect();
        let target: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let loss = |net: &DenseNet| -> f64 {
            net.forward(&x).unwrap().iter().zip(&target).map(|(o, t)| 0.5 * (o - t) * (o - t)).sum()
        };
        let mut last = loss(&net);
        let mut rises = 0;
        for _ in 0..100 {
            let out = net.forward(&x).unwrap();
            let g: Vec<f64> = out.iter().zip(&target).map(|(o, t)| o - t).collect();
            let grads = net.backward(&x, &g).unwrap();
            for (layer, gl) in net.layers_mut().iter_mut().zip(&grads.layers) {
                layer.weights.iter_mut().zip(&gl.weights).for_each(|(w, d)| *w -= 1e-3 * d);
                layer.biases.iter_mut().zip(&gl.biases).for_each(|(b, d)| *b -= 1e-3 * d);
            }
            let now = loss(&net);
            if now > last {
                rises += 1;
            }
            last = now;
        }
        prop_assert!(rises <= 5, "{} non-monotone steps", rises);
    }

    #[test]
    fn fixed_pair_adam_training_reduces_loss(seed in any::<u64>(), tanh in any::<bool>()) {
        // Adam's momentum overshoots once the loss is small, so only the
        // net decrease is checked here.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rnd = RndPair::new(&[8, 16, 16, 4], activation(tanh), 1e-3, &mut rng).unwrap();
        let feature: Vec<f64> = (0..8).map(|_| rng.gen_range(0.0..1.0)).collect();
        let record = rnd.record(&feature).unwrap();
        let first = rnd.train_on(&[&record]).unwrap();
        for _ in 0..99 {
            rnd.train_on(&[&record]).unwrap();
        }
        prop_assert!(rnd.intrinsic(&feature).unwrap() < first);
    }

    #[test]
    fn target_network_never_moves(seed in any::<u64>(), steps in 1usize..50) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rnd = RndPair::new(&[5, 8, 3], HiddenActivation::Relu, 1e-2, &mut rng).unwrap();
        let before = rnd.target().to_bytes();
        let records: Vec<_> = (0..6)
            .map(|_| {
                let f: Vec<f64> = (0..5).map(|_| rng.gen_range(0.0..1.0)).collect();
                rnd.record(&f).unwrap()
            })
            .collect();
        for i in 0..steps {
            rnd.train_on(&[&records[i % records.len()]]).unwrap();
        }
        prop_assert_eq!(rnd.target().to_bytes(), before);
    }

    #[test]
    fn sil_ignores_returns_at_or_below_value(seed in any::<u64>(), margin in proptest::collection::vec(0.0f64..3.0, 1..40)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = PolicyValueNet::new(4, &[8], 3, HiddenActivation::Relu, 1e-2, &mut rng).unwrap();
        let mut buf = SilBuffer::new(64, 1e-5).unwrap();
        for m in &margin {
            let s: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (_, v) = p.evaluate(&s).unwrap();
            buf.push(Transition { state: s, action: rng.gen_range(0..3), ret: v - m }, -m).unwrap();
        }
        let before = p.net().to_bytes();
        let loss = p.sil_update(&mut buf, 16, 0.01, None, &mut rng).unwrap();
        prop_assert_eq!(loss.active, 0);
        prop_assert_eq!(p.net().to_bytes(), before);
    }

    #[test]
    fn penalty_never_raises_a_bonus(
        history in proptest::collection::vec(0.0f64..2.0, 10..200),
        lambda in 0.01f64..=0.5,
        value in 0.0f64..2.0,
    ) {
        let mut t = PenaltyTracker::new(PenaltyConfig { lambda, window: 100, ..PenaltyConfig::default() }).unwrap();
        for h in history {
            t.apply(h);
        }
        let (shaped, fired) = t.apply(value);
        if fired {
            prop_assert!(shaped <= value);
        } else {
            prop_assert_eq!(shaped, value);
        }
    }

    #[test]
    fn grid_episodes_are_bounded_and_deterministic(actions in proptest::collection::vec(0usize..4, 1..120), no_reward in any::<bool>()) {
        let mode = if no_reward { RewardMode::NoReward } else { RewardMode::Sparse };
        let (mut a, mut b) = (grid(mode, 25), grid(mode, 25));
        a.reset();
        b.reset();
        let (mut len, mut ret) = (0usize, 0.0);
        for &act in &actions {
            let sa = a.step(act).unwrap();
            let sb = b.step(act).unwrap();
            prop_assert_eq!(&sa, &sb);
            len += 1;
            ret += sa.reward;
            if sa.done {
                break;
            }
        }
        prop_assert!(len <= 25);
        if no_reward {
            prop_assert!(ret == 0.0 || ret == -30.0, "return {}", ret);
        }
    }

    #[test]
    fn flight_angles_stay_finite(seed in any::<u64>()) {
        let p = UcavParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = Scenario::default().start_state();
        for _ in 0..10_000 {
            apply_action(&mut s, decode_action(rng.gen_range(0..ACTION_COUNT)).unwrap(), &p);
            s = integrate_dynamics(&s, &p).unwrap();
        }
        prop_assert!(s.psi.is_finite() && s.gamma.is_finite() && s.v.is_finite());
        prop_assert!(s.gamma.abs() <= p.gamma_limit_deg.to_radians());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn launches_respect_cooldowns(seed in any::<u64>()) {
        let scenario = Scenario::default();
        let mut env = UcavEnv::new(scenario.clone(), seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        env.reset();
        let mut steps = 0usize;
        loop {
            steps += 1;
            if env.step(rng.gen_range(0..ACTION_COUNT)).unwrap().done {
                break;
            }
        }
        let elapsed = (steps * scenario.decision_substeps) as f64 * scenario.physics.dt;
        let bound: usize = scenario
            .sam_sites
            .iter()
            .map(|s| (elapsed / s.cooldown_s).floor() as usize + 1)
            .sum();
        prop_assert!(env.launched() <= bound);
    }
}
