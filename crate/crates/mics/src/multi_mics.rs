//! Multi-level low-WCET extraction.
//!
//! Multi-peaked execution-time distributions (temporally correlated inputs,
//! light vs heavy workloads) leave a single budget either wasteful or
//! switch-prone. This module extends the EET metric to a scalable form that
//! fixes the already-chosen levels and scans for one more level below the
//! smallest, stopping when the interior minimum disappears or the
//! utilization gain of another level drops below a threshold.
//!
//! Mode switches are only ever triggered by exceeding level 1; deeper levels
//! are scheduling budgets, not switch boundaries, so `p_ovrun` is pinned to
//! `1 - coverage[0]` no matter how many levels exist.

use serde::Serialize;
use thiserror::Error;

use crate::anti_mics::{derive_wcet_lo_sample_grid, AnalysisError};
use crate::traces::EmpiricalDistribution;

#[derive(Debug, Error)]
pub enum LevelError {
    #[error("invalid level family: {0}")]
    Invalid(String),
}

/// Ordered family of low WCET budgets for one task.
///
/// `levels` is strictly descending with `levels[0]` equal to the single-level
/// derivation result; `coverage[i]` is `alpha(levels[i])`.
#[derive(Debug, Clone, PartialEq)]
pub struct WcetLevels {
    levels: Vec<u64>,
    coverage: Vec<f64>,
    p_ovrun: f64,
    wcet_hi: u64,
}

/// JSON wire form of a level family.
#[derive(Debug, Serialize)]
pub struct LevelsReport {
    pub task_label: String,
    pub wcet_hi_us: u64,
    pub levels_us: Vec<u64>,
    pub coverage: Vec<f64>,
    pub p_ovrun: f64,
}

impl WcetLevels {
    /// Validated constructor. Used by the taskset loader; analysis paths use
    /// [`derive_levels`].
    pub fn new(
        levels: Vec<u64>,
        coverage: Vec<f64>,
        p_ovrun: f64,
        wcet_hi: u64,
    ) -> Result<Self, LevelError> {
        if levels.is_empty() {
            return Err(LevelError::Invalid("at least one level is required".into()));
        }
        if levels.len() != coverage.len() {
            return Err(LevelError::Invalid(
                "levels and coverage lengths differ".into(),
            ));
        }
        if levels.windows(2).any(|w| w[0] <= w[1]) {
            return Err(LevelError::Invalid("levels must be strictly descending".into()));
        }
        if coverage.windows(2).any(|w| w[0] <= w[1]) {
            return Err(LevelError::Invalid(
                "coverage must be strictly descending".into(),
            ));
        }
        if coverage.iter().any(|&c| !(0.0 < c && c <= 1.0)) {
            return Err(LevelError::Invalid("coverage values must lie in (0,1]".into()));
        }
        if levels[0] > wcet_hi {
            return Err(LevelError::Invalid("level 1 exceeds wcet_hi".into()));
        }
        if levels.last() == Some(&0) {
            return Err(LevelError::Invalid("levels must be positive".into()));
        }
        if !(0.0..=1.0).contains(&p_ovrun) {
            return Err(LevelError::Invalid("p_ovrun outside [0,1]".into()));
        }
        Ok(Self {
            levels,
            coverage,
            p_ovrun,
            wcet_hi,
        })
    }

    /// Single-budget family for tasks without a level analysis (LC tasks use
    /// their execution budget as both bound and budget).
    pub fn single(budget: u64) -> Self {
        Self {
            levels: vec![budget],
            coverage: vec![1.0],
            p_ovrun: 0.0,
            wcet_hi: budget,
        }
    }

    /// Levels, descending; `levels()[0]` is level 1.
    pub fn levels(&self) -> &[u64] {
        &self.levels
    }

    pub fn coverage(&self) -> &[f64] {
        &self.coverage
    }

    pub fn p_ovrun(&self) -> f64 {
        self.p_ovrun
    }

    pub fn wcet_hi(&self) -> u64 {
        self.wcet_hi
    }

    /// Level 1, the mode-switch boundary.
    pub fn top(&self) -> u64 {
        self.levels[0]
    }

    pub fn smallest(&self) -> u64 {
        *self.levels.last().expect("non-empty")
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn report(&self, task_label: &str) -> LevelsReport {
        LevelsReport {
            task_label: task_label.to_string(),
            wcet_hi_us: self.wcet_hi,
            levels_us: self.levels.clone(),
            coverage: self.coverage.clone(),
            p_ovrun: self.p_ovrun,
        }
    }
}

/// Scalable expected execution time with `levels_so_far` fixed and `t` as the
/// candidate new smallest level.
///
/// `SEET(t) = alpha(t)*t + sum_i (alpha(L_{i-1}) - alpha(L_i)) * L_{i-1}
///          + (1 - alpha(L_1)) * wcet_hi`,
/// where the candidate `t` plays the role of the last level. At
/// `t = smallest existing level` the sum telescopes back to the EET of that
/// configuration.
pub fn seet(
    dist: &EmpiricalDistribution,
    levels_so_far: &WcetLevels,
    t: u64,
) -> Result<f64, AnalysisError> {
    let existing = levels_so_far.levels();
    let smallest = *existing.last().expect("non-empty");
    if t > smallest {
        return Err(AnalysisError::OutOfRange(t));
    }
    let hi = dist.wcet_hi() as f64;
    let a_t = dist.alpha(t);
    let mut total = a_t * t as f64 + (1.0 - dist.alpha(existing[0])) * hi;
    for w in existing.windows(2) {
        total += (dist.alpha(w[0]) - dist.alpha(w[1])) * w[0] as f64;
    }
    total += (dist.alpha(smallest) - a_t) * smallest as f64;
    Ok(total)
}

/// Margin an interior minimum must undercut the scan endpoints by; the scan
/// endpoints are equal whenever no mass sits at zero, so a strict margin is
/// required to keep float noise from minting ghost levels.
const INTERIOR_MARGIN_US: f64 = 1.0;

/// Derive the full level family for a task.
///
/// Level 1 comes from the single-level derivation. Each further level is the
/// smallest interior minimizer of SEET over `(0, previous level)`; extraction
/// stops when no interior point undercuts the endpoints by at least one
/// microsecond, when the utilization gain `(L_j - L_{j+1}) / period` falls
/// below `min_util_gain`, or when `max_levels` is reached.
pub fn derive_levels(
    dist: &EmpiricalDistribution,
    period: u64,
    min_util_gain: f64,
    max_levels: usize,
) -> WcetLevels {
    assert!(period > 0, "period must be positive");
    let max_levels = max_levels.max(1);
    let base = derive_wcet_lo_sample_grid(dist);
    let mut family = WcetLevels {
        levels: vec![base.wcet_lo_us],
        coverage: vec![dist.alpha(base.wcet_lo_us)],
        p_ovrun: base.p_ovrun,
        wcet_hi: dist.wcet_hi(),
    };
    let distinct = dist.distinct_samples();
    while family.levels.len() < max_levels {
        let prev = family.smallest();
        let endpoint = {
            let at_zero = seet(dist, &family, 0).expect("0 in range");
            let at_prev = seet(dist, &family, prev).expect("prev in range");
            at_zero.min(at_prev)
        };
        let mut best: Option<(u64, f64)> = None;
        for &s in distinct.iter().take_while(|&&s| s < prev) {
            let value = seet(dist, &family, s).expect("sample in range");
            match best {
                Some((_, b)) if value >= b => {}
                _ => best = Some((s, value)),
            }
        }
        let Some((cand, cand_value)) = best else { break };
        if cand_value > endpoint - INTERIOR_MARGIN_US {
            break;
        }
        let gain = (prev - cand) as f64 / period as f64;
        if gain < min_util_gain {
            break;
        }
        family.coverage.push(dist.alpha(cand));
        family.levels.push(cand);
    }
    family
}
