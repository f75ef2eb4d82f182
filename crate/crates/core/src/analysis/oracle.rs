//! Exhaustive search over joint channel-set assignments for small scenarios.

use rayon::prelude::*;
use serde::Serialize;

use crate::assignment::ChannelSet;
use crate::engine::{run, Policy, Scenario};
use crate::error::{Error, Result};

/// Largest joint action space the oracle will enumerate.
pub const ORACLE_LIMIT: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    /// Best action index per node.
    pub actions: Vec<usize>,
    #[serde(skip)]
    pub selection: Vec<ChannelSet>,
    /// Mean end-to-end deliveries per slot of the best assignment.
    pub mean_delivered: f64,
    /// Mean deliveries of every assignment, in enumeration order.
    pub values: Vec<f64>,
}

/// Mean deliveries per slot after warm-up of a frozen assignment, averaged
/// over `seeds`. Warm-up is dropped when it does not fit in `eval_slots`.
pub fn evaluate_frozen(
    scenario: &Scenario,
    actions: &[usize],
    eval_slots: usize,
    seeds: impl IntoIterator<Item = u64>,
) -> Result<f64> {
    let warm_up = if scenario.warm_up < eval_slots { scenario.warm_up } else { 0 };
    let base = scenario.with_horizon(eval_slots, warm_up)?;
    let mut total = 0.0;
    let mut runs = 0;
    for seed in seeds {
        let series = run(&base.with_seed(seed), Policy::Frozen(actions.to_vec()))?;
        let window = series.evaluation_window();
        if !window.is_empty() {
            total += window.iter().map(|r| r.delivered as f64).sum::<f64>() / window.len() as f64;
        }
        runs += 1;
    }
    Ok(if runs == 0 { 0.0 } else { total / runs as f64 })
}

/// Decodes a joint index with node 0 as the most significant digit, so that
/// ascending indices are lexicographically ascending assignments.
fn decode(mut index: u64, radix: &[usize]) -> Vec<usize> {
    let mut actions = vec![0; radix.len()];
    for (v, &r) in radix.iter().enumerate().rev() {
        actions[v] = (index % r as u64) as usize;
        index /= r as u64;
    }
    actions
}

/// Evaluates every joint assignment with frozen automata over `eval_slots`
/// slots and seeds `scenario.seed .. scenario.seed + eval_seeds`, returning
/// the best one. Ties go to the lexicographically smallest assignment.
pub fn brute_force_oracle(scenario: &Scenario, eval_slots: usize, eval_seeds: u64) -> Result<OracleResult> {
    let size = scenario.joint_action_space();
    if size > ORACLE_LIMIT as f64 {
        return Err(Error::OracleTooLarge { size, limit: ORACLE_LIMIT });
    }
    let n = scenario.topology.node_count();
    let radix: Vec<usize> = (0..n).map(|v| scenario.catalog(v).len()).collect();
    let values = (0..size as u64)
        .into_par_iter()
        .map(|index| {
            let actions = decode(index, &radix);
            evaluate_frozen(scenario, &actions, eval_slots, scenario.seed..scenario.seed + eval_seeds)
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    let actions = decode(best as u64, &radix);
    let selection = actions
        .iter()
        .enumerate()
        .map(|(v, &a)| scenario.catalog(v).get(a).expect("decoded action in range"))
        .collect();
    Ok(OracleResult { actions, selection, mean_delivered: values[best], values })
}
