//! Per-slot records produced by a simulation run.

use serde::Serialize;

use crate::topology::LinkId;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotRecord {
    pub slot: usize,
    /// Packets that reached their flow destination this slot.
    pub delivered: u64,
    /// Packets released into source queues this slot.
    pub injected: u64,
    /// Packets waiting in link queues at the end of the slot.
    pub queued: u64,
    pub total_injected: u64,
    pub total_delivered: u64,
    /// Packets served on each link (`r_l`).
    pub served: Vec<u64>,
    pub winners: Vec<LinkId>,
    pub connectivity: u64,
    pub interference: u64,
    pub cq: Vec<f64>,
    pub beta: Vec<f64>,
    pub actions: Vec<usize>,
    /// Action probabilities after this slot's update.
    pub probs: Vec<Vec<f64>>,
    pub max_prob: Vec<f64>,
    /// Mass outside each node's reference action; filled once the reference
    /// is known.
    pub suboptimal_l1: Vec<f64>,
    pub switched: Vec<bool>,
}

impl SlotRecord {
    pub fn switches(&self) -> usize {
        self.switched.iter().filter(|&&s| s).count()
    }

    pub fn mean_cq(&self) -> f64 {
        mean(&self.cq)
    }

    pub fn mean_max_prob(&self) -> f64 {
        mean(&self.max_prob)
    }

    pub fn total_suboptimal_l1(&self) -> f64 {
        self.suboptimal_l1.iter().sum()
    }
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Ordered slot records of one run, tagged with the warm-up boundary.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MetricsSeries {
    pub warm_up: usize,
    pub records: Vec<SlotRecord>,
}

impl MetricsSeries {
    pub fn new(warm_up: usize) -> Self {
        Self { warm_up, records: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.records.first().map_or(0, |r| r.probs.len())
    }

    /// Records after the warm-up boundary.
    pub fn evaluation_window(&self) -> &[SlotRecord] {
        &self.records[self.warm_up.min(self.records.len())..]
    }

    /// Fills each record's per-node sub-optimal mass relative to `reference`.
    pub fn set_reference(&mut self, reference: &[usize]) {
        for record in &mut self.records {
            record.suboptimal_l1 = record
                .probs
                .iter()
                .zip(reference)
                .map(|(p, &a)| 1.0 - p.get(a).copied().unwrap_or(0.0))
                .collect();
        }
    }

    /// Most probable action of each node at the end of the run.
    pub fn final_argmax(&self) -> Vec<usize> {
        self.records.last().map_or_else(Vec::new, |r| {
            r.probs
                .iter()
                .map(|p| {
                    let mut best = 0;
                    for (i, &x) in p.iter().enumerate() {
                        if x > p[best] {
                            best = i;
                        }
                    }
                    best
                })
                .collect()
        })
    }
}
