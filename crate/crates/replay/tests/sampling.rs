use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sad_replay::{PrioritizedReplay, ReplayConfig};

fn buffer<E>(capacity: usize) -> PrioritizedReplay<E> {
    PrioritizedReplay::new(ReplayConfig {
        capacity,
        warmup: 1,
        ..ReplayConfig::default()
    })
    .unwrap()
}

/// Pearson chi-square statistic of two-category counts against probabilities.
fn chi_square(counts: [f64; 2], probs: [f64; 2]) -> f64 {
    let n = counts[0] + counts[1];
    counts.iter().zip(probs).map(|(c, p)| (c - n * p).powi(2) / (n * p)).sum()
}

/// 99% quantile of chi-square with one degree of freedom.
const CHI2_1DOF_99: f64 = 6.635;

#[test]
fn two_episode_ratio_passes_chi_square() {
    let r = buffer(2);
    r.add(0u8, 1.0).unwrap();
    r.add(1u8, 2.0).unwrap();
    let s = r.sample(100_000, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
    let ones = s.episodes.iter().filter(|e| ***e == 1).count() as f64;
    let a = 2f64.powf(0.9);
    let stat = chi_square([1e5 - ones, ones], [1.0 / (1.0 + a), a / (1.0 + a)]);
    assert!(stat < CHI2_1DOF_99, "chi-square {stat}");
}

#[test]
fn zero_exponent_is_uniform() {
    let r = PrioritizedReplay::new(ReplayConfig {
        capacity: 2,
        warmup: 1,
        priority_exponent: 0.0,
        ..ReplayConfig::default()
    })
    .unwrap();
    r.add(0u8, 1.0).unwrap();
    r.add(1u8, 50.0).unwrap();
    let s = r.sample(100_000, &mut ChaCha8Rng::seed_from_u64(12)).unwrap();
    let ones = s.episodes.iter().filter(|e| ***e == 1).count() as f64;
    assert!(chi_square([1e5 - ones, ones], [0.5, 0.5]) < CHI2_1DOF_99);
}

#[test]
fn updated_priorities_change_proportions() {
    let r = buffer(2);
    let a = r.add(0u8, 1.0).unwrap();
    let b = r.add(1u8, 1.0).unwrap();
    // episode a: td [1, 3] -> 2.9; episode b: td [0.5] -> 0.5
    assert_eq!(r.update_priorities(&[a, b], &[vec![1.0, 3.0], vec![0.5]]), 2);
    let s = r.sample(100_000, &mut ChaCha8Rng::seed_from_u64(13)).unwrap();
    let zeros = s.episodes.iter().filter(|e| ***e == 0).count() as f64;
    let (pa, pb) = (2.9f64.powf(0.9), 0.5f64.powf(0.9));
    let stat = chi_square([zeros, 1e5 - zeros], [pa / (pa + pb), pb / (pa + pb)]);
    assert!(stat < CHI2_1DOF_99, "chi-square {stat}");
}

#[test]
fn concurrent_writers_never_expose_partial_episodes() {
    // each episode is a vector whose entries all equal its first entry
    let r = Arc::new(buffer::<Vec<u64>>(256));
    let stop = Arc::new(AtomicBool::new(false));
    let writers: Vec<_> = (0..4)
        .map(|w| {
            let r = Arc::clone(&r);
            thread::spawn(move || {
                for i in 0..2_000u64 {
                    let tag = w * 1_000_000 + i;
                    r.add(vec![tag; 64], (i % 7) as f64 + 0.5).unwrap();
                }
            })
        })
        .collect();
    let sampler = {
        let r = Arc::clone(&r);
        let stop = Arc::clone(&stop);
        thread::spawn(move || {
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let mut checked = 0;
            while !stop.load(Ordering::Relaxed) {
                if let Ok(s) = r.sample(16, &mut rng) {
                    for (id, e) in s.ids.iter().zip(&s.episodes) {
                        assert!(e.iter().all(|&x| x == e[0]));
                        r.update_td(*id, &[1.0]);
                        checked += 1;
                    }
                }
            }
            checked
        })
    };
    for w in writers {
        w.join().unwrap();
    }
    stop.store(true, Ordering::Relaxed);
    assert!(sampler.join().unwrap() > 0);
    assert_eq!(r.metrics().added, 8_000);
    assert_eq!(r.len(), 256);
    assert!((r.total_priority() - r.leaf_priority_sum()).abs() < 1e-6);
}

#[derive(Debug, Clone)]
enum Op {
    Add(f64),
    Update(usize, f64),
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        (0.0..100.0f64).prop_map(Op::Add),
        (0usize..64, 0.0..100.0f64).prop_map(|(i, p)| Op::Update(i, p)),
    ]
}

proptest! {
    #[test]
    fn tree_total_matches_leaves(ops in proptest::collection::vec(op(), 1..300), cap in 1usize..40) {
        let r = buffer::<usize>(cap);
        let mut ids = Vec::new();
        for o in ops {
            match o {
                Op::Add(p) => ids.push(r.add(ids.len(), p).unwrap()),
                Op::Update(i, p) => {
                    if let Some(&id) = ids.get(i) {
                        r.update_priority(id, p);
                    }
                }
            }
            prop_assert!((r.total_priority() - r.leaf_priority_sum()).abs() < 1e-6);
        }
        // FIFO: exactly the newest `cap` ids survive
        let stored = r.stored_ids();
        let expect: Vec<u64> = (ids.len().saturating_sub(cap) as u64..ids.len() as u64).collect();
        prop_assert_eq!(stored, expect);
    }
}
