//! Dual-criticality task model, design-time objectives, and the EDF-VD
//! schedulability test.
//!
//! Tasks are implicit-deadline periodic (`deadline == period`). HC tasks
//! carry a family of low WCET budgets plus the conservative bound; LC tasks
//! carry a single execution budget. Design-time analysis combines three
//! quantities: the LC utilization bound in LO mode, the system mode-switch
//! probability, and their product (the system goal), alongside the EDF-VD
//! virtual-deadline schedulability verdict.
//!
//! The `gamma` parameter is the fraction of LC service retained in HI mode:
//! zero means LC tasks are dropped on a mode switch, `0.5` means they keep
//! half their LO-mode rate. It enters both the LC utilization bound
//! denominator and the degraded EDF-VD test.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::multi_mics::WcetLevels;
use crate::traces::{build_distribution, load_trace, EmpiricalDistribution, TraceFormat};

#[derive(Debug, Error)]
pub enum McError {
    #[error("HC utilization in HI mode exceeds 1: {0}")]
    InfeasibleHcLoad(f64),
    #[error("hyper-period overflows u64")]
    HyperperiodOverflow,
    #[error("invalid task set: {0}")]
    Invalid(String),
    #[error("trace error for task {task}: {source}")]
    Trace {
        task: String,
        #[source]
        source: crate::traces::TraceError,
    },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid taskset json: {0}")]
    Json(String),
}

/// Task criticality level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Criticality {
    Lc,
    Hc,
}

/// Operational mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Mode {
    Lo,
    Hi,
}

/// One periodic dual-criticality task.
#[derive(Debug, Clone, PartialEq)]
pub struct McTask {
    pub id: String,
    pub criticality: Criticality,
    pub period: u64,
    pub levels: WcetLevels,
    pub distribution: Option<EmpiricalDistribution>,
    /// Provenance of the attached distribution, preserved across (de)serialization.
    pub trace_path: Option<String>,
}

impl McTask {
    pub fn hc(
        id: impl Into<String>,
        levels: WcetLevels,
        period: u64,
        distribution: Option<EmpiricalDistribution>,
    ) -> Self {
        assert!(period > 0, "period must be positive");
        Self {
            id: id.into(),
            criticality: Criticality::Hc,
            period,
            levels,
            distribution,
            trace_path: None,
        }
    }

    pub fn lc(id: impl Into<String>, budget: u64, period: u64) -> Self {
        assert!(period > 0, "period must be positive");
        assert!(budget > 0, "budget must be positive");
        Self {
            id: id.into(),
            criticality: Criticality::Lc,
            period,
            levels: WcetLevels::single(budget),
            distribution: None,
            trace_path: None,
        }
    }

    pub fn wcet_hi(&self) -> u64 {
        self.levels.wcet_hi()
    }

    /// Implicit deadline: equal to the period.
    pub fn deadline(&self) -> u64 {
        self.period
    }

    /// Budget used for scheduling in the given mode: level 1 in LO, the
    /// conservative bound in HI. For LC tasks both are the single budget.
    pub fn budget(&self, mode: Mode) -> u64 {
        match mode {
            Mode::Lo => self.levels.top(),
            Mode::Hi => self.wcet_hi(),
        }
    }

    pub fn utilization(&self, mode: Mode) -> f64 {
        self.budget(mode) as f64 / self.period as f64
    }
}

/// A dual-criticality task set plus the LC degradation parameter `gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct McTaskSet {
    pub tasks: Vec<McTask>,
    pub gamma: f64,
}

impl McTaskSet {
    pub fn new(tasks: Vec<McTask>, gamma: f64) -> Result<Self, McError> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(McError::Invalid(format!("gamma {gamma} outside [0,1]")));
        }
        let mut ids = BTreeSet::new();
        for t in &tasks {
            if t.id.is_empty() {
                return Err(McError::Invalid("empty task id".into()));
            }
            if !ids.insert(t.id.clone()) {
                return Err(McError::Invalid(format!("duplicate task id {:?}", t.id)));
            }
        }
        Ok(Self { tasks, gamma })
    }

    pub fn hc_tasks(&self) -> impl Iterator<Item = &McTask> {
        self.tasks.iter().filter(|t| t.criticality == Criticality::Hc)
    }

    pub fn lc_tasks(&self) -> impl Iterator<Item = &McTask> {
        self.tasks.iter().filter(|t| t.criticality == Criticality::Lc)
    }

    /// Least common multiple of all periods. Fails rather than wrapping when
    /// the lcm leaves u64 range; simulation horizons are expressed in
    /// hyper-periods, so an uncomputable hyper-period is unusable anyway.
    pub fn hyperperiod(&self) -> Result<u64, McError> {
        let mut acc: u128 = 1;
        for t in &self.tasks {
            let p = t.period as u128;
            let g = gcd(acc, p);
            acc = acc / g * p;
            if acc > u64::MAX as u128 {
                return Err(McError::HyperperiodOverflow);
            }
        }
        Ok(acc as u64)
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

/// Total utilization of tasks at one criticality level in one mode.
pub fn utilization(set: &McTaskSet, criticality: Criticality, mode: Mode) -> f64 {
    set.tasks
        .iter()
        .filter(|t| t.criticality == criticality)
        .map(|t| t.utilization(mode))
        .sum()
}

/// Upper bound on LC utilization schedulable in LO mode:
/// `min(1 - u_hc_lo, (1 - u_hc_hi) / (u_hc_lo + gamma * (1 - u_hc_lo)))`,
/// floored at zero.
pub fn lc_utilization_bound(u_hc_lo: f64, u_hc_hi: f64, gamma: f64) -> Result<f64, McError> {
    if u_hc_hi > 1.0 {
        return Err(McError::InfeasibleHcLoad(u_hc_hi));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(McError::Invalid(format!("gamma {gamma} outside [0,1]")));
    }
    if u_hc_lo < 0.0 || u_hc_lo > u_hc_hi {
        return Err(McError::Invalid(format!(
            "u_hc_lo {u_hc_lo} outside [0, u_hc_hi]"
        )));
    }
    let first = 1.0 - u_hc_lo;
    let denom = u_hc_lo + gamma * (1.0 - u_hc_lo);
    let second = if denom > 0.0 {
        (1.0 - u_hc_hi) / denom
    } else {
        f64::INFINITY
    };
    Ok(first.min(second).max(0.0))
}

/// System mode-switch probability: one minus the probability that no HC task
/// overruns its level-1 budget, assuming independent tasks.
pub fn mode_switch_probability(set: &McTaskSet) -> f64 {
    let p_none: f64 = set.hc_tasks().map(|t| 1.0 - t.levels.p_ovrun()).product();
    1.0 - p_none
}

/// The scalar design objective: LC utilization bound weighted by the
/// probability of staying in LO mode.
pub fn system_goal(u_lc_lo_max: f64, p_ms: f64) -> f64 {
    u_lc_lo_max * (1.0 - p_ms)
}

/// HI-mode handling of LC tasks assumed by the schedulability test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdfvdPolicy {
    /// LC tasks are dropped in HI mode.
    DropLc,
    /// LC tasks retain this fraction of their LO-mode utilization in HI mode.
    DegradeLc(f64),
}

/// EDF-VD verdict: schedulable flag and the virtual-deadline factor `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdfvdVerdict {
    pub schedulable: bool,
    pub x: f64,
}

/// Absolute tolerance applied only at schedulability boundaries.
const SCHED_EPS: f64 = 1e-12;

/// EDF-VD schedulability test for implicit-deadline dual-criticality sets.
///
/// LO mode must satisfy `u_lc_lo + u_hc_lo <= 1`; the virtual-deadline factor
/// is `x = u_hc_lo / (1 - u_lc_lo)` and the HI-mode carry-over condition is
/// `x * u_lc_lo + u_hc_hi (+ gamma * u_lc_lo under degradation) <= 1`.
/// Returns `schedulable = false` with `x = 1` when the LO condition fails.
pub fn edfvd_test(set: &McTaskSet, policy: EdfvdPolicy) -> EdfvdVerdict {
    let u_lc = utilization(set, Criticality::Lc, Mode::Lo);
    let u_hc_lo = utilization(set, Criticality::Hc, Mode::Lo);
    let u_hc_hi = utilization(set, Criticality::Hc, Mode::Hi);
    edfvd_test_raw(u_lc, u_hc_lo, u_hc_hi, policy)
}

/// Same test on raw utilizations.
pub fn edfvd_test_raw(
    u_lc_lo: f64,
    u_hc_lo: f64,
    u_hc_hi: f64,
    policy: EdfvdPolicy,
) -> EdfvdVerdict {
    if u_lc_lo + u_hc_lo > 1.0 + SCHED_EPS {
        return EdfvdVerdict {
            schedulable: false,
            x: 1.0,
        };
    }
    let x = if u_hc_lo <= 0.0 || u_lc_lo >= 1.0 {
        1.0
    } else {
        u_hc_lo / (1.0 - u_lc_lo)
    };
    let degrade = match policy {
        EdfvdPolicy::DropLc => 0.0,
        EdfvdPolicy::DegradeLc(g) => g * u_lc_lo,
    };
    let hi_lhs = x * u_lc_lo + u_hc_hi + degrade;
    EdfvdVerdict {
        schedulable: x <= 1.0 + SCHED_EPS && hi_lhs <= 1.0 + SCHED_EPS,
        x,
    }
}

/// Design-time objectives bundle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignReport {
    pub u_hc_lo: f64,
    pub u_hc_hi: f64,
    pub u_lc_lo: f64,
    pub u_lc_lo_max: f64,
    pub p_ms_sys: f64,
    pub system_goal: f64,
    pub edfvd_schedulable: bool,
    pub virtual_deadline_factor_x: f64,
}

/// Evaluate all design-time objectives for a task set.
pub fn design_report(set: &McTaskSet, policy: EdfvdPolicy) -> Result<DesignReport, McError> {
    let u_hc_lo = utilization(set, Criticality::Hc, Mode::Lo);
    let u_hc_hi = utilization(set, Criticality::Hc, Mode::Hi);
    let u_lc_lo = utilization(set, Criticality::Lc, Mode::Lo);
    let u_lc_lo_max = lc_utilization_bound(u_hc_lo, u_hc_hi, set.gamma)?;
    let p_ms_sys = mode_switch_probability(set);
    let verdict = edfvd_test(set, policy);
    Ok(DesignReport {
        u_hc_lo,
        u_hc_hi,
        u_lc_lo,
        u_lc_lo_max,
        p_ms_sys,
        system_goal: system_goal(u_lc_lo_max, p_ms_sys),
        edfvd_schedulable: verdict.schedulable,
        virtual_deadline_factor_x: verdict.x,
    })
}

// ---------------------------------------------------------------------------
// taskset-v1 JSON format
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct TaskSetJson {
    gamma: f64,
    tasks: Vec<TaskJson>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TaskJson {
    id: String,
    criticality: Criticality,
    period_us: u64,
    wcet_hi_us: u64,
    wcet_levels_us: Vec<u64>,
    p_ovrun: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coverage: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    trace_path: Option<String>,
}

/// Serialize a task set to `taskset-v1` JSON.
pub fn task_set_to_json(set: &McTaskSet) -> String {
    let tasks = set
        .tasks
        .iter()
        .map(|t| TaskJson {
            id: t.id.clone(),
            criticality: t.criticality,
            period_us: t.period,
            wcet_hi_us: t.wcet_hi(),
            wcet_levels_us: t.levels.levels().to_vec(),
            p_ovrun: t.levels.p_ovrun(),
            coverage: Some(t.levels.coverage().to_vec()),
            trace_path: t.trace_path.clone(),
        })
        .collect();
    let dto = TaskSetJson {
        gamma: set.gamma,
        tasks,
    };
    serde_json::to_string_pretty(&dto).expect("task set serializes")
}

/// Parse `taskset-v1` JSON. `base_dir` anchors relative `trace_path` entries;
/// when a trace is attached, per-level coverage and the overrun probability
/// are recomputed from it. Without a trace, missing coverage is backfilled
/// with a proportional approximation (display only; scheduling maths use the
/// levels and `p_ovrun`).
pub fn task_set_from_json(json: &str, base_dir: Option<&Path>) -> Result<McTaskSet, McError> {
    let dto: TaskSetJson =
        serde_json::from_str(json).map_err(|e| McError::Json(e.to_string()))?;
    let mut tasks = Vec::with_capacity(dto.tasks.len());
    for tj in dto.tasks {
        if tj.period_us == 0 {
            return Err(McError::Invalid(format!("task {}: period is zero", tj.id)));
        }
        if tj.wcet_levels_us.is_empty() {
            return Err(McError::Invalid(format!("task {}: no levels", tj.id)));
        }
        let distribution = match &tj.trace_path {
            Some(rel) => {
                let path = match base_dir {
                    Some(dir) => dir.join(rel),
                    None => Path::new(rel).to_path_buf(),
                };
                let trace = load_trace(&path, TraceFormat::CsvV1).map_err(|e| McError::Trace {
                    task: tj.id.clone(),
                    source: e,
                })?;
                Some(
                    build_distribution(&trace, tj.wcet_hi_us).map_err(|e| McError::Trace {
                        task: tj.id.clone(),
                        source: e,
                    })?,
                )
            }
            None => None,
        };
        let (coverage, p_ovrun) = match &distribution {
            Some(d) => {
                let cov: Vec<f64> = tj.wcet_levels_us.iter().map(|&l| d.alpha(l)).collect();
                let p = 1.0 - cov[0];
                (cov, p)
            }
            None => match tj.coverage {
                Some(cov) => (cov, tj.p_ovrun),
                None => {
                    let base = (1.0 - tj.p_ovrun).max(1e-9);
                    let l0 = tj.wcet_levels_us[0] as f64;
                    let cov = tj
                        .wcet_levels_us
                        .iter()
                        .map(|&l| base * l as f64 / l0)
                        .collect();
                    (cov, tj.p_ovrun)
                }
            },
        };
        let levels = WcetLevels::new(tj.wcet_levels_us, coverage, p_ovrun, tj.wcet_hi_us)
            .map_err(|e| McError::Invalid(format!("task {}: {e}", tj.id)))?;
        let mut task = match tj.criticality {
            Criticality::Hc => McTask::hc(tj.id, levels, tj.period_us, distribution),
            Criticality::Lc => {
                let mut t = McTask::lc(tj.id, tj.wcet_hi_us, tj.period_us);
                t.levels = levels;
                t.distribution = distribution;
                t
            }
        };
        task.trace_path = tj.trace_path;
        tasks.push(task);
    }
    McTaskSet::new(tasks, dto.gamma)
}

/// Load a `taskset-v1` file, resolving trace paths against its directory.
pub fn load_task_set(path: impl AsRef<Path>) -> Result<McTaskSet, McError> {
    let path = path.as_ref();
    let json = std::fs::read_to_string(path)?;
    task_set_from_json(&json, path.parent())
}

/// Write a task set as `taskset-v1`.
pub fn save_task_set(set: &McTaskSet, path: impl AsRef<Path>) -> Result<(), McError> {
    std::fs::write(path, task_set_to_json(set))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hc(id: &str, levels: &[u64], coverage: &[f64], p_ovrun: f64, hi: u64, period: u64) -> McTask {
        McTask::hc(
            id,
            WcetLevels::new(levels.to_vec(), coverage.to_vec(), p_ovrun, hi).unwrap(),
            period,
            None,
        )
    }

    #[test]
    fn utilization_sums_by_class_and_mode() {
        let set = McTaskSet::new(
            vec![
                hc("h0", &[16_600], &[0.9098], 0.0902, 131_000, 120_000),
                McTask::lc("l0", 10, 100),
                McTask::lc("l1", 30, 300),
            ],
            0.0,
        )
        .unwrap();
        let u = utilization(&set, Criticality::Hc, Mode::Lo);
        assert!((u - 16.6 / 120.0).abs() < 1e-12);
        assert!((utilization(&set, Criticality::Lc, Mode::Lo) - 0.2).abs() < 1e-12);
        assert_eq!(utilization(&set, Criticality::Hc, Mode::Hi), 131.0 / 120.0);
    }

    #[test]
    fn empty_selection_has_zero_utilization() {
        let set = McTaskSet::new(vec![McTask::lc("l0", 10, 100)], 0.0).unwrap();
        assert_eq!(utilization(&set, Criticality::Hc, Mode::Lo), 0.0);
    }

    #[test]
    fn lc_bound_direct_substitution() {
        let b = lc_utilization_bound(0.4, 0.6, 0.0).unwrap();
        assert!((b - 0.6).abs() < 1e-12);
    }

    #[test]
    fn lc_bound_saturated_load_is_zero() {
        assert_eq!(lc_utilization_bound(1.0, 1.0, 0.3).unwrap(), 0.0);
        assert!(matches!(
            lc_utilization_bound(1.0, 1.1, 0.0),
            Err(McError::InfeasibleHcLoad(_))
        ));
    }

    #[test]
    fn lc_bound_with_gamma() {
        // min{0.7, 0.2 / (0.3 + 0.5*0.7)} = min{0.7, 0.30769..}
        let b = lc_utilization_bound(0.3, 0.8, 0.5).unwrap();
        assert!((b - 0.2 / 0.65).abs() < 1e-12);
    }

    #[test]
    fn lc_bound_monotone_in_all_arguments() {
        let base = lc_utilization_bound(0.3, 0.5, 0.2).unwrap();
        assert!(lc_utilization_bound(0.4, 0.5, 0.2).unwrap() <= base);
        assert!(lc_utilization_bound(0.3, 0.6, 0.2).unwrap() <= base);
        assert!(lc_utilization_bound(0.3, 0.5, 0.4).unwrap() <= base);
    }

    #[test]
    fn mode_switch_probability_table_values() {
        let overruns = [0.0387, 0.0719, 0.0229, 0.0413, 0.0902];
        let tasks: Vec<McTask> = overruns
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                hc(
                    &format!("h{i}"),
                    &[1000],
                    &[1.0 - p],
                    p,
                    2000,
                    10_000,
                )
            })
            .collect();
        let set = McTaskSet::new(tasks, 0.0).unwrap();
        let p_ms = mode_switch_probability(&set);
        assert!((p_ms - 0.2396).abs() < 0.0005, "p_ms = {p_ms}");
    }

    #[test]
    fn mode_switch_probability_edge_cases() {
        let empty = McTaskSet::new(vec![McTask::lc("l0", 10, 100)], 0.0).unwrap();
        assert_eq!(mode_switch_probability(&empty), 0.0);
        let certain = McTaskSet::new(vec![hc("h0", &[10], &[0.0], 1.0, 20, 100)], 0.0).unwrap();
        assert_eq!(mode_switch_probability(&certain), 1.0);
    }

    #[test]
    fn system_goal_products() {
        assert!((system_goal(0.8141, 0.2396) - 0.619).abs() < 0.001);
        assert_eq!(system_goal(0.5, 1.0), 0.0);
        assert_eq!(system_goal(0.0, 0.1), 0.0);
    }

    #[test]
    fn edfvd_hand_example() {
        let v = edfvd_test_raw(0.3, 0.35, 0.5, EdfvdPolicy::DropLc);
        assert!((v.x - 0.5).abs() < 1e-12);
        assert!(v.schedulable); // 0.5*0.3 + 0.5 = 0.65 <= 1
    }

    #[test]
    fn edfvd_lo_overload_fails() {
        let v = edfvd_test_raw(0.7, 0.4, 0.8, EdfvdPolicy::DropLc);
        assert!(!v.schedulable);
        assert_eq!(v.x, 1.0);
    }

    #[test]
    fn edfvd_hi_overload_fails() {
        let v = edfvd_test_raw(0.1, 0.2, 1.0, EdfvdPolicy::DropLc);
        assert!(!v.schedulable);
    }

    #[test]
    fn edfvd_degrade_adds_gamma_share() {
        // x = 0.3/(1-0.5) = 0.6; drop: 0.6*0.5 + 0.6 = 0.9 OK;
        // degrade 0.5: + 0.25 -> 1.15 fails.
        let drop = edfvd_test_raw(0.5, 0.3, 0.6, EdfvdPolicy::DropLc);
        assert!(drop.schedulable);
        let degrade = edfvd_test_raw(0.5, 0.3, 0.6, EdfvdPolicy::DegradeLc(0.5));
        assert!(!degrade.schedulable);
    }

    #[test]
    fn edfvd_accepts_low_load_floor() {
        // Speedup-bound sanity floor: everything with both modes below 1/2.
        for &(u_lc, u_hc_lo, u_hc_hi) in
            &[(0.25, 0.25, 0.5), (0.4, 0.1, 0.45), (0.0, 0.5, 0.5), (0.5, 0.0, 0.0)]
        {
            let v = edfvd_test_raw(u_lc, u_hc_lo, u_hc_hi, EdfvdPolicy::DropLc);
            assert!(v.schedulable, "({u_lc},{u_hc_lo},{u_hc_hi})");
            assert!(v.x > 0.0 && v.x <= 1.0);
        }
    }

    #[test]
    fn design_report_recomputes_bit_identically() {
        let set = McTaskSet::new(
            vec![
                hc("h0", &[16_600, 9_700], &[0.9098, 0.6701], 0.0902, 131_000, 120_000),
                McTask::lc("l0", 20_000, 100_000),
            ],
            0.0,
        )
        .unwrap();
        let r = design_report(&set, EdfvdPolicy::DropLc).unwrap();
        assert_eq!(r.system_goal, system_goal(r.u_lc_lo_max, r.p_ms_sys));
        assert!(r.p_ms_sys >= 0.0 && r.p_ms_sys <= 1.0);
    }

    #[test]
    fn hyperperiod_and_overflow() {
        let set = McTaskSet::new(
            vec![McTask::lc("a", 1, 20), McTask::lc("b", 1, 50), McTask::lc("c", 1, 80)],
            0.0,
        )
        .unwrap();
        assert_eq!(set.hyperperiod().unwrap(), 400);

        let primes = [4_294_967_291u64, 4_294_967_279, 4_294_967_231];
        let tasks: Vec<McTask> = primes
            .iter()
            .enumerate()
            .map(|(i, &p)| McTask::lc(format!("t{i}"), 1, p))
            .collect();
        let set = McTaskSet::new(tasks, 0.0).unwrap();
        assert!(matches!(
            set.hyperperiod(),
            Err(McError::HyperperiodOverflow)
        ));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = McTaskSet::new(
            vec![McTask::lc("a", 1, 10), McTask::lc("a", 1, 20)],
            0.0,
        )
        .unwrap_err();
        assert!(matches!(err, McError::Invalid(_)));
    }

    #[test]
    fn taskset_json_round_trip() {
        let set = McTaskSet::new(
            vec![
                hc("h0", &[500, 200], &[0.95, 0.6], 0.05, 1000, 5000),
                McTask::lc("l0", 300, 2000),
            ],
            0.25,
        )
        .unwrap();
        let json = task_set_to_json(&set);
        let back = task_set_from_json(&json, None).unwrap();
        assert_eq!(back, set);
        assert!(json.contains("\"wcet_levels_us\""));
    }
}
