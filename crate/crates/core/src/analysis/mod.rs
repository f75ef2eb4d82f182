//! Aggregation and convergence diagnostics over [`MetricsSeries`].

mod game;
mod oracle;

pub use game::{play_game, IdenticalPayoffGame};
pub use oracle::{brute_force_oracle, evaluate_frozen, OracleResult, ORACLE_LIMIT};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::{mean, MetricsSeries};

pub const DEFAULT_THRESHOLD: f64 = 0.99;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeConvergence {
    pub node: usize,
    pub converged: bool,
    /// Most probable action at the end of the series.
    pub action: usize,
    /// First slot from which the maximum probability stays above threshold.
    pub slot: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub threshold: f64,
    pub nodes: Vec<NodeConvergence>,
    pub all_converged: bool,
    /// Achieved throughput over the oracle optimum, when compared.
    pub oracle_ratio: Option<f64>,
}

impl ConvergenceReport {
    pub fn converged_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.converged).count()
    }

    pub fn actions(&self) -> Vec<usize> {
        self.nodes.iter().map(|n| n.action).collect()
    }

    pub fn with_oracle(mut self, achieved: f64, optimum: f64) -> Self {
        self.oracle_ratio = Some(if optimum > 0.0 { achieved / optimum } else { 1.0 });
        self
    }
}

/// A node converges at the first slot after which its most probable action
/// keeps probability at least `threshold` until the end of the series.
pub fn convergence_check(series: &MetricsSeries, threshold: f64) -> Result<ConvergenceReport> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::invalid(format!("threshold {threshold} outside (0, 1)")));
    }
    let reference = series.final_argmax();
    let nodes: Vec<NodeConvergence> = reference
        .iter()
        .enumerate()
        .map(|(v, &action)| {
            let tail = series.records.iter().rev().take_while(|r| r.max_prob[v] >= threshold).count();
            let slot = (tail > 0).then(|| series.records[series.len() - tail].slot);
            NodeConvergence { node: v, converged: slot.is_some(), action, slot }
        })
        .collect();
    let all_converged = !nodes.is_empty() && nodes.iter().all(|n| n.converged);
    Ok(ConvergenceReport { threshold, nodes, all_converged, oracle_ratio: None })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct L1Trajectory {
    /// Per slot, total probability outside each node's reference action.
    pub values: Vec<f64>,
    /// Least-squares slope over the slots after warm-up.
    pub slope: f64,
}

pub fn suboptimal_l1_trajectory(series: &MetricsSeries, reference: &[usize]) -> L1Trajectory {
    let values: Vec<f64> = series
        .records
        .iter()
        .map(|r| {
            r.probs
                .iter()
                .zip(reference)
                .map(|(p, &a)| p.iter().enumerate().filter(|&(j, _)| j != a).map(|(_, x)| x).sum::<f64>())
                .sum()
        })
        .collect();
    let slope = trend_slope(&values[series.warm_up.min(values.len())..]);
    L1Trajectory { values, slope }
}

/// Least-squares slope of `values` against their index.
pub fn trend_slope(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let x_mean = (n - 1) as f64 / 2.0;
    let y_mean = mean(values);
    let (mut num, mut den) = (0.0, 0.0);
    for (i, &y) in values.iter().enumerate() {
        let dx = i as f64 - x_mean;
        num += dx * (y - y_mean);
        den += dx * dx;
    }
    num / den
}

/// Slot-wise mean of equally long sequences.
pub fn ensemble_mean(runs: &[Vec<f64>]) -> Vec<f64> {
    let Some(len) = runs.iter().map(Vec::len).min() else {
        return Vec::new();
    };
    (0..len).map(|t| runs.iter().map(|r| r[t]).sum::<f64>() / runs.len() as f64).collect()
}

/// Mean reinforcement `node` received on the slots where it played
/// `action`; `None` when the action was never played.
pub fn empirical_payoff(series: &MetricsSeries, node: usize, action: usize) -> Option<f64> {
    let betas: Vec<f64> = series
        .records
        .iter()
        .filter(|r| r.actions.get(node) == Some(&action))
        .map(|r| r.beta[node])
        .collect();
    (!betas.is_empty()).then(|| mean(&betas))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub slots: usize,
    pub warm_up: usize,
    pub evaluated_slots: usize,
    pub mean_delivered: f64,
    pub mean_connectivity: f64,
    pub mean_interference: f64,
    pub mean_cq: f64,
    /// Channel-set changes per node per slot.
    pub switch_rate: f64,
    pub mean_interference_ratio: f64,
    /// Interference over connectivity for every slot (zero when unconnected).
    pub interference_ratio: Vec<f64>,
    pub total_injected: u64,
    pub total_delivered: u64,
}

/// Means over the slots after `warm_up`.
pub fn summarize(series: &MetricsSeries, warm_up: usize) -> Summary {
    let window = &series.records[warm_up.min(series.len())..];
    let avg =
        |f: &dyn Fn(&crate::metrics::SlotRecord) -> f64| mean(&window.iter().map(f).collect::<Vec<_>>());
    let interference_ratio: Vec<f64> = series
        .records
        .iter()
        .map(|r| if r.connectivity == 0 { 0.0 } else { r.interference as f64 / r.connectivity as f64 })
        .collect();
    let nodes = series.node_count().max(1) as f64;
    let last = series.records.last();
    Summary {
        slots: series.len(),
        warm_up,
        evaluated_slots: window.len(),
        mean_delivered: avg(&|r| r.delivered as f64),
        mean_connectivity: avg(&|r| r.connectivity as f64),
        mean_interference: avg(&|r| r.interference as f64),
        mean_cq: avg(&|r| r.mean_cq()),
        switch_rate: avg(&|r| r.switches() as f64 / nodes),
        mean_interference_ratio: mean(&interference_ratio[warm_up.min(series.len())..]),
        interference_ratio,
        total_injected: last.map_or(0, |r| r.total_injected),
        total_delivered: last.map_or(0, |r| r.total_delivered),
    }
}
