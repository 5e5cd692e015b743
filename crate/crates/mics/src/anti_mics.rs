//! Single low-WCET derivation from an empirical distribution.
//!
//! The expected execution time metric
//! `EET(t) = alpha(t) * t + (1 - alpha(t)) * wcet_hi` prices a candidate
//! budget `t`: the covered fraction of jobs costs `t`, the rest is charged at
//! the conservative bound. The low WCET budget is the smallest `t` minimizing
//! `EET`, and the overrun probability is `1 - alpha` at that point.
//!
//! `alpha` is a step function, so `EET` is piecewise linear with
//! non-negative slope between jumps; minima therefore sit at sample values.
//! The scan grid used here is the set of distinct sample values plus
//! `wcet_hi`, optionally densified with a uniform `scan_step` grid for
//! comparison against the plain one-microsecond scan.

use serde::Serialize;
use thiserror::Error;

use crate::traces::EmpiricalDistribution;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("t = {0} us is outside the distribution's domain")]
    OutOfRange(u64),
}

/// One point of the EET curve export.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub t_us: u64,
    pub eet_us: f64,
}

/// Result of the single-level derivation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AntiMicsResult {
    /// Derived low WCET budget (us).
    pub wcet_lo_us: u64,
    /// Probability that a job exceeds `wcet_lo_us`, i.e. `1 - alpha(wcet_lo)`.
    pub p_ovrun: f64,
    /// Minimum EET value (us, real-valued).
    pub eet_min_us: f64,
    /// Scanned EET curve for plotting, when requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eet_curve: Option<Vec<CurvePoint>>,
}

/// Expected execution time at candidate budget `t`.
pub fn eet(dist: &EmpiricalDistribution, t: u64) -> Result<f64, AnalysisError> {
    if t > dist.wcet_hi() {
        return Err(AnalysisError::OutOfRange(t));
    }
    let a = dist.alpha(t);
    Ok(a * t as f64 + (1.0 - a) * dist.wcet_hi() as f64)
}

fn scan_grid(dist: &EmpiricalDistribution, scan_step: u64) -> Vec<u64> {
    let step = scan_step.max(1);
    let hi = dist.wcet_hi();
    let mut grid = dist.distinct_samples();
    if step < hi {
        let mut t = step;
        while t < hi {
            grid.push(t);
            t += step;
        }
    }
    grid.push(hi);
    grid.sort_unstable();
    grid.dedup();
    grid
}

/// Derive the low WCET budget by scanning EET.
///
/// `scan_step` controls the uniform part of the grid; distinct sample values
/// are always included, so any step yields the exact minimizer. Ties are
/// broken toward the smallest `t`. If no budget strictly improves on
/// `EET(wcet_hi) = wcet_hi` (all mass at the bound), the result degenerates
/// to `wcet_lo = wcet_hi` with zero overrun probability.
pub fn derive_wcet_lo(dist: &EmpiricalDistribution, scan_step: u64) -> AntiMicsResult {
    derive_inner(dist, scan_step, false)
}

/// Same as [`derive_wcet_lo`] but retains the scanned curve for export.
pub fn derive_wcet_lo_with_curve(dist: &EmpiricalDistribution, scan_step: u64) -> AntiMicsResult {
    derive_inner(dist, scan_step, true)
}

/// Derivation over the minimal exact grid (sample values plus the bound).
pub fn derive_wcet_lo_sample_grid(dist: &EmpiricalDistribution) -> AntiMicsResult {
    derive_wcet_lo(dist, dist.wcet_hi())
}

fn derive_inner(dist: &EmpiricalDistribution, scan_step: u64, keep_curve: bool) -> AntiMicsResult {
    let hi = dist.wcet_hi();
    let hi_f = hi as f64;
    let grid = scan_grid(dist, scan_step);
    let mut curve = keep_curve.then(|| Vec::with_capacity(grid.len()));
    let mut best_t = hi;
    let mut best_eet = hi_f;
    for &t in &grid {
        let value = eet(dist, t).expect("grid point within domain");
        if let Some(c) = curve.as_mut() {
            c.push(CurvePoint { t_us: t, eet_us: value });
        }
        // Strict `<` keeps the smallest minimizer; a flat curve stays at the
        // degenerate wcet_hi answer.
        if value < best_eet {
            best_eet = value;
            best_t = t;
        }
    }
    AntiMicsResult {
        wcet_lo_us: best_t,
        p_ovrun: 1.0 - dist.alpha(best_t),
        eet_min_us: best_eet,
        eet_curve: curve,
    }
}

/// Scanned EET curve without the derivation result.
pub fn eet_curve(dist: &EmpiricalDistribution, scan_step: u64) -> Vec<CurvePoint> {
    scan_grid(dist, scan_step)
        .into_iter()
        .map(|t| CurvePoint {
            t_us: t,
            eet_us: eet(dist, t).expect("grid point within domain"),
        })
        .collect()
}

/// CSV form of a curve: header `t_us,eet_us`, one point per line.
pub fn eet_curve_csv(curve: &[CurvePoint]) -> String {
    let mut out = String::from("t_us,eet_us\n");
    for p in curve {
        out.push_str(&format!("{},{}\n", p.t_us, p.eet_us));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traces::{build_distribution, ExecutionTrace};

    fn dist(samples: &[u64], wcet_hi: u64) -> EmpiricalDistribution {
        let t = ExecutionTrace::new("t", samples.to_vec(), "test").unwrap();
        build_distribution(&t, wcet_hi).unwrap()
    }

    /// Independent oracle: argmin of EET over distinct samples plus the
    /// bound, with alpha computed by direct counting.
    fn brute_force(samples: &[u64], wcet_hi: u64) -> (u64, f64) {
        let n = samples.len() as f64;
        let mut candidates: Vec<u64> = samples.to_vec();
        candidates.push(wcet_hi);
        candidates.sort_unstable();
        candidates.dedup();
        let mut best = (wcet_hi, wcet_hi as f64);
        for &t in &candidates {
            let a = samples.iter().filter(|&&s| s <= t).count() as f64 / n;
            let v = a * t as f64 + (1.0 - a) * wcet_hi as f64;
            if v < best.1 {
                best = (t, v);
            }
        }
        best
    }

    #[test]
    fn eet_at_wcet_hi_is_wcet_hi() {
        let d = dist(&[10, 20, 30], 100);
        assert_eq!(eet(&d, 100).unwrap(), 100.0);
    }

    #[test]
    fn eet_rejects_t_above_bound() {
        let d = dist(&[10], 100);
        assert!(matches!(eet(&d, 101), Err(AnalysisError::OutOfRange(101))));
    }

    #[test]
    fn point_mass_yields_its_value() {
        let d = dist(&[40, 40, 40], 100);
        let r = derive_wcet_lo(&d, 1);
        assert_eq!(r.wcet_lo_us, 40);
        assert_eq!(r.p_ovrun, 0.0);
        assert_eq!(r.eet_min_us, 40.0);
    }

    #[test]
    fn two_cluster_hand_example() {
        // 90 samples at 10, 10 at 100, bound 120:
        //   EET(10)  = 0.9*10 + 0.1*120 = 21
        //   EET(100) = 100, EET(120) = 120
        let mut samples = vec![10u64; 90];
        samples.extend(vec![100u64; 10]);
        let d = dist(&samples, 120);
        let r = derive_wcet_lo(&d, 1);
        assert_eq!(r.wcet_lo_us, 10);
        assert!((r.p_ovrun - 0.10).abs() < 1e-12);
        assert!((r.eet_min_us - 21.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_all_mass_at_bound() {
        let d = dist(&[50, 50], 50);
        let r = derive_wcet_lo(&d, 1);
        assert_eq!(r.wcet_lo_us, 50);
        assert_eq!(r.p_ovrun, 0.0);
    }

    #[test]
    fn scan_step_does_not_change_result() {
        let samples = [3u64, 3, 7, 7, 7, 19, 30];
        let d = dist(&samples, 40);
        let fine = derive_wcet_lo(&d, 1);
        let coarse = derive_wcet_lo_sample_grid(&d);
        assert_eq!(fine.wcet_lo_us, coarse.wcet_lo_us);
        assert_eq!(fine.eet_min_us, coarse.eet_min_us);
    }

    #[test]
    fn matches_brute_force_on_seeded_random_instances() {
        use rand::Rng;
        let mut rng = crate::rng::stream_rng(11, 0, 0);
        for case in 0..200 {
            let n = rng.gen_range(1..=60);
            let hi = rng.gen_range(50..500u64);
            let samples: Vec<u64> = (0..n).map(|_| rng.gen_range(1..=hi)).collect();
            let d = dist(&samples, hi);
            let got = derive_wcet_lo(&d, 1);
            let (want_t, want_eet) = brute_force(&samples, hi);
            assert_eq!(got.wcet_lo_us, want_t, "case {case}");
            assert!((got.eet_min_us - want_eet).abs() < 1e-9, "case {case}");
        }
    }

    #[test]
    fn scaling_samples_scales_budget_only() {
        let samples = [4u64, 4, 9, 9, 9, 21];
        let d1 = dist(&samples, 30);
        let scaled: Vec<u64> = samples.iter().map(|s| s * 7).collect();
        let d7 = dist(&scaled, 210);
        let r1 = derive_wcet_lo_sample_grid(&d1);
        let r7 = derive_wcet_lo_sample_grid(&d7);
        assert_eq!(r7.wcet_lo_us, 7 * r1.wcet_lo_us);
        assert_eq!(r7.p_ovrun, r1.p_ovrun);
    }

    #[test]
    fn curve_is_ascending_and_bounded() {
        let d = dist(&[5, 9, 9, 14], 20);
        let curve = eet_curve(&d, 1);
        assert!(curve.windows(2).all(|w| w[0].t_us < w[1].t_us));
        assert!(curve.iter().all(|p| p.eet_us <= 20.0));
        assert_eq!(curve.last().unwrap().eet_us, 20.0);
        let csv = eet_curve_csv(&curve);
        assert!(csv.starts_with("t_us,eet_us\n"));
        assert_eq!(csv.lines().count(), curve.len() + 1);
    }
}
