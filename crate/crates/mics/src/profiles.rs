//! Deterministic benchmark-shaped execution-time profiles.
//!
//! These are synthetic but carefully shaped sample sets used by the examples
//! and the test suite: a single-peak profile, a two-cluster profile whose
//! level analysis lands on round millisecond budgets, and a low-range
//! two-cluster profile. Each constructor is fully deterministic (fixed value
//! multiset, fixed shuffle seed), so every derived quantity is stable across
//! runs and platforms.

use rand::seq::SliceRandom;

use crate::traces::ExecutionTrace;

/// Conservative bound used by [`single_cluster`] and [`dual_cluster`] (us).
pub const CLUSTER_WCET_HI: u64 = 131_000;

/// Period hint that pairs with [`dual_cluster`] in the examples (us).
pub const DUAL_CLUSTER_PERIOD: u64 = 120_000;

/// Conservative bound used by [`low_dual_cluster`] (us).
pub const LOW_CLUSTER_WCET_HI: u64 = 26_000;

fn ramp(out: &mut Vec<u64>, count: u64, start: u64, span: u64) {
    // `count` evenly spaced values over [start, start+span], endpoints
    // included when count > 1.
    for i in 0..count {
        let offset = if count > 1 { i * span / (count - 1) } else { 0 };
        out.push(start + offset);
    }
}

fn assemble(label: &str, mut samples: Vec<u64>, shuffle_seed: u64) -> ExecutionTrace {
    let mut rng = crate::rng::stream_rng(shuffle_seed, 0, 0);
    samples.shuffle(&mut rng);
    ExecutionTrace::new(label, samples, "synthetic-profile").unwrap()
}

/// Single-peak profile: 20000 samples, bound 131 ms.
///
/// Landmarks: `alpha(44000) = 0.9281` and `alpha(55000) = 0.971` exactly.
pub fn single_cluster() -> ExecutionTrace {
    let mut s = Vec::with_capacity(20_000);
    ramp(&mut s, 17_562, 30_000, 13_999); // main body below 44 ms
    s.extend(std::iter::repeat(44_000).take(1_000));
    ramp(&mut s, 758, 45_000, 9_986); // shoulder up to just below 55 ms
    s.extend(std::iter::repeat(55_000).take(100));
    ramp(&mut s, 580, 60_000, 71_000); // sparse tail out to the bound
    debug_assert_eq!(s.len(), 20_000);
    assemble("single_cluster", s, 0x51C1)
}

/// Two-cluster profile: 10000 samples, bound 131 ms.
///
/// Landmarks: level analysis with period 120 ms yields levels
/// `[16600, 9700]` us with coverage `[0.9098, 0.6701]` and overrun
/// probability `0.0902`.
pub fn dual_cluster() -> ExecutionTrace {
    let mut s = Vec::with_capacity(10_000);
    ramp(&mut s, 6_301, 8_000, 1_699); // light cluster
    s.extend(std::iter::repeat(9_700).take(400));
    ramp(&mut s, 2_097, 15_000, 1_599); // heavy cluster
    s.extend(std::iter::repeat(16_600).take(300));
    ramp(&mut s, 902, 20_000, 111_000); // tail out to the bound
    debug_assert_eq!(s.len(), 10_000);
    assemble("dual_cluster", s, 0xD0A1)
}

/// Low-range two-cluster profile: 10000 samples, bound 26 ms.
///
/// Landmarks: level 1 at 5200 us (coverage 0.9587), and the scalable metric's
/// interior minimum below it at 2300 us (coverage 0.6484).
pub fn low_dual_cluster() -> ExecutionTrace {
    let mut s = Vec::with_capacity(10_000);
    ramp(&mut s, 6_184, 1_500, 799);
    s.extend(std::iter::repeat(2_300).take(300));
    ramp(&mut s, 2_803, 4_300, 899);
    s.extend(std::iter::repeat(5_200).take(300));
    ramp(&mut s, 413, 6_000, 20_000);
    debug_assert_eq!(s.len(), 10_000);
    assemble("low_dual_cluster", s, 0x10D2)
}
