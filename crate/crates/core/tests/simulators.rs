use forkfluid_core::initcond::{InitFamily, InitialConditionSpec};
use forkfluid_core::model::*;
use forkfluid_core::rng::{seeded, StreamKey};
use proptest::prelude::*;
use rand::Rng;

fn random_schedule(rng: &mut impl Rng, servers: usize, horizon: u64, fail: f64) -> FailureSchedule {
    let pick = |rng: &mut dyn rand::RngCore| -> Vec<u64> {
        (1..=horizon).filter(|_| rng.random_bool(fail)).collect()
    };
    FailureSchedule {
        horizon_slots: horizon,
        arrival_failure_slots: pick(rng),
        service_failure_slots: (0..servers).map(|_| pick(rng)).collect(),
    }
}

fn params(servers: usize) -> SystemParams {
    SystemParams::with_scale(1.0, 1.0, servers, 10.0, 1.0).unwrap()
}

#[test]
fn event_simulator_equals_slot_simulator_on_random_schedules() {
    let mut rng = seeded(2024);
    for _ in 0..1000 {
        let servers = rng.random_range(1..=8);
        let horizon = rng.random_range(0..=10_000u64);
        let fail = [0.001, 0.01, 0.1, 0.5][rng.random_range(0..4)];
        let sched = random_schedule(&mut rng, servers, horizon, fail);
        let init: Vec<u64> = (0..servers).map(|_| rng.random_range(0..20)).collect();
        let mut samples: Vec<u64> = (0..rng.random_range(1..30)).map(|_| rng.random_range(0..=horizon)).collect();
        samples.sort_unstable();
        let p = params(servers);
        let a = simulate_slots(&p, &sched, &init, &samples, true).unwrap();
        let b = simulate_events(&p, &sched, &init, &samples, true).unwrap();
        assert_eq!(
            serde_json::to_vec(&a).unwrap(),
            serde_json::to_vec(&b).unwrap()
        );
    }
}

#[test]
fn queue_pmf_matches_enumeration() {
    // N = 1 server with the probabilities of N = 4, n = 6 slots
    let p = SystemParams::with_scale(1.0, 1.0, 1, 4.0, 1.0).unwrap();
    let n = 6usize;
    let (pa, ps) = (p.arrival_prob, p.service_prob);
    let mut exact = vec![0.0; n + 1];
    for mask in 0u32..(1 << (2 * n)) {
        let mut q = 0usize;
        let mut w = 1.0;
        for j in 0..n {
            let a = mask >> j & 1 == 1;
            let s = mask >> (n + j) & 1 == 1;
            w *= if a { pa } else { 1.0 - pa };
            w *= if s { ps } else { 1.0 - ps };
            q = (q + a as usize).saturating_sub(s as usize);
        }
        exact[q] += w;
    }
    let reps = 200_000;
    let mut counts = vec![0usize; n + 1];
    for r in 0..reps {
        let sched = generate_schedule(&p, n as u64, &StreamKey::new(77, r)).unwrap();
        let res = simulate_slots(&p, &sched, &[0], &[n as u64], false).unwrap();
        counts[res.frames[0].raw_max_queue as usize] += 1;
    }
    for (k, &pk) in exact.iter().enumerate() {
        let est = counts[k] as f64 / reps as f64;
        let sd = (pk * (1.0 - pk) / reps as f64).sqrt();
        assert!((est - pk).abs() <= 3.0 * sd + 1e-12, "k={k} est={est} exact={pk}");
    }
}

#[test]
fn service_failure_counts_have_binomial_mean() {
    let p = SystemParams::new(1.0, 1.0, 100).unwrap();
    let horizon = 1_000_000u64;
    let counts: Vec<f64> = (0..100)
        .map(|r| GeometricFailures::new(StreamKey::new(5, r).stream(forkfluid_core::rng::Substream::Service(0)), p.service_failure_prob(), horizon).count() as f64)
        .collect();
    let mean = counts.iter().sum::<f64>() / 100.0;
    let sd_of_mean = (horizon as f64 * 0.01 * 0.99 / 100.0).sqrt();
    assert!((mean - 1e4).abs() <= 3.0 * sd_of_mean, "{mean}");
}

#[test]
fn event_count_concentrates() {
    let p = SystemParams::new(1.0, 1.0, 100).unwrap();
    let t = 0.25;
    let grid = [0.0, t];
    let res = simulate_scaled(&p, &grid, &InitialConditionSpec::zero(), &StreamKey::new(1, 0), false).unwrap();
    let horizon = p.slot_for(t).unwrap();
    let (mean, var) = p.event_count_moments(horizon);
    // 2 alpha N^3 t ln N events expected
    assert!((mean / (2.0 * 1e6 * t * 100f64.ln()) - 1.0).abs() < 0.01);
    assert!(((res.event_count as f64) - mean).abs() <= 5.0 * var.sqrt(), "{} vs {mean}", res.event_count);
}

#[test]
fn scaled_run_equals_materialised_schedule() {
    let p = SystemParams::new(1.0, 1.0, 12).unwrap();
    let grid: Vec<f64> = (0..=10).map(|i| i as f64 * 0.05).collect();
    let key = StreamKey::new(31, 4);
    let spec = InitialConditionSpec::new(InitFamily::Exponential, 0.6);
    let scaled = simulate_scaled(&p, &grid, &spec, &key, true).unwrap();
    let slots: Vec<u64> = grid.iter().map(|&t| p.slot_for(t).unwrap()).collect();
    let sched = generate_schedule(&p, *slots.last().unwrap(), &key).unwrap();
    let ev = simulate_events(&p, &sched, &scaled.init_snapshot, &slots, true).unwrap();
    for (a, b) in scaled.frames.iter().zip(&ev.frames) {
        assert_eq!(a.raw_max_queue, b.raw_max_queue);
        assert_eq!(a.per_server_queues, b.per_server_queues);
        assert_eq!(a.scaled_max_queue * p.spatial_scale(), a.raw_max_queue as f64);
    }
    assert_eq!(scaled.event_count, ev.event_count);
}

#[test]
fn empty_start_single_frame() {
    let p = SystemParams::new(1.0, 1.0, 20).unwrap();
    let r = simulate_scaled(&p, &[0.0], &InitialConditionSpec::zero(), &StreamKey::new(0, 0), false).unwrap();
    assert_eq!(r.frames.len(), 1);
    assert_eq!(r.frames[0].scaled_max_queue, 0.0);
}

#[test]
fn duality_exact_small_systems() {
    for servers in [1usize, 2] {
        let p = SystemParams::with_scale(1.0, 1.0, servers, 4.0, 1.0).unwrap();
        for n in 0..=6 {
            let r = duality_check(&p, n, DualityMode::Exact, &mut seeded(0)).unwrap();
            assert!(r.tv_distance < 1e-12, "servers={servers} n={n}");
        }
    }
}

fn schedule_strategy() -> impl Strategy<Value = (FailureSchedule, Vec<u64>)> {
    (1usize..5, 0u64..300).prop_flat_map(|(servers, horizon)| {
        let slots = proptest::collection::btree_set(1..=horizon.max(1), 0..=(horizon as usize).min(60));
        (
            slots.clone(),
            proptest::collection::vec(slots, servers),
            proptest::collection::vec(0u64..15, servers),
            Just(horizon),
        )
            .prop_map(|(a, s, init, horizon)| {
                let keep = |v: std::collections::BTreeSet<u64>| v.into_iter().filter(|&x| x <= horizon).collect();
                (
                    FailureSchedule {
                        horizon_slots: horizon,
                        arrival_failure_slots: keep(a),
                        service_failure_slots: s.into_iter().map(keep).collect(),
                    },
                    init,
                )
            })
    })
}

proptest! {
    #[test]
    fn simulators_agree((sched, init) in schedule_strategy()) {
        let p = params(init.len());
        let samples: Vec<u64> = (0..=sched.horizon_slots).collect();
        let a = simulate_slots(&p, &sched, &init, &samples, true).unwrap();
        let b = simulate_events(&p, &sched, &init, &samples, true).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn larger_start_gives_larger_paths((sched, init) in schedule_strategy(), bumps in proptest::collection::vec(0u64..5, 5)) {
        let p = params(init.len());
        let bigger: Vec<u64> = init.iter().zip(&bumps).map(|(a, b)| a + b).collect();
        let samples: Vec<u64> = (0..=sched.horizon_slots).collect();
        let a = simulate_events(&p, &sched, &init, &samples, true).unwrap();
        let b = simulate_events(&p, &sched, &bigger, &samples, true).unwrap();
        for (fa, fb) in a.frames.iter().zip(&b.frames) {
            for (x, y) in fa.per_server_queues.as_ref().unwrap().iter().zip(fb.per_server_queues.as_ref().unwrap()) {
                prop_assert!(x <= y);
            }
        }
    }

    #[test]
    fn reflection_identity_without_arrival_failures((mut sched, init) in schedule_strategy()) {
        sched.arrival_failure_slots.clear();
        let p = params(init.len());
        let zeros = vec![0; init.len()];
        let samples: Vec<u64> = (0..=sched.horizon_slots).collect();
        let r = simulate_events(&p, &sched, &zeros, &samples, true).unwrap();
        for f in &r.frames {
            for (i, &q) in f.per_server_queues.as_ref().unwrap().iter().enumerate() {
                let failures = sched.service_failure_slots[i].iter().filter(|&&x| x <= f.slot).count() as u64;
                // every service failure leaves one task behind and nothing drains it
                prop_assert_eq!(q, failures);
            }
        }
    }
}
