//! Time-slotted simulation of the mesh.
//!
//! Every slot runs the same pipeline: each automaton picks a channel set,
//! links are tuned to a shared channel, sources inject traffic, a randomized
//! arbiter picks a conflict-free set of transmitting links, winners drain
//! their queues, and each node turns its channel-state value into a
//! reinforcement for its automaton.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assignment::{
    compute_cq, connectivity_metric, derive_link_channels, enumerate_channel_sets, interference_metric,
    ActionCatalog, ChannelAssignmentMatrix, ChannelSet, NodeCounters,
};
use crate::automaton::{
    init_uniform, sample_action, ActionProbabilityVector, LearningParams, ReinforcementSignal,
};
use crate::error::{Error, Result};
use crate::metrics::{MetricsSeries, SlotRecord};
use crate::topology::{shortest_path_routing, Flow, FlowId, LinkId, RoutingMatrix, Topology};

/// How a node's channel-state value becomes a reinforcement signal.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeedbackMode {
    /// Full reward when the value improved on the previous slot, none otherwise.
    #[default]
    BinaryImprovement,
    /// The value itself, clamped to `[0, 1]`.
    Continuous,
}

impl std::str::FromStr for FeedbackMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary-improvement" | "binary" => Ok(FeedbackMode::BinaryImprovement),
            "continuous" => Ok(FeedbackMode::Continuous),
            other => Err(Error::invalid(format!("unknown feedback mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for FeedbackMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FeedbackMode::BinaryImprovement => "binary-improvement",
            FeedbackMode::Continuous => "continuous",
        })
    }
}

pub fn compute_beta(cq_now: f64, cq_prev: f64, mode: FeedbackMode) -> ReinforcementSignal {
    match mode {
        FeedbackMode::BinaryImprovement if cq_now > cq_prev => ReinforcementSignal::REWARD,
        FeedbackMode::BinaryImprovement => ReinforcementSignal::NONE,
        FeedbackMode::Continuous => {
            ReinforcementSignal::new(cq_now.clamp(0.0, 1.0)).unwrap_or(ReinforcementSignal::NONE)
        }
    }
}

/// Learning and timing settings of a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSettings {
    pub learning: LearningParams,
    pub theta: f64,
    pub feedback: FeedbackMode,
    pub horizon: usize,
    pub warm_up: usize,
    pub seed: u64,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            learning: LearningParams::default(),
            theta: 1.0,
            feedback: FeedbackMode::default(),
            horizon: 200,
            warm_up: 50,
            seed: 1,
        }
    }
}

/// A validated, ready-to-run scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub topology: Topology,
    pub flows: Vec<Flow>,
    pub routing: RoutingMatrix,
    pub num_channels: usize,
    pub learning: LearningParams,
    pub theta: f64,
    pub feedback: FeedbackMode,
    pub horizon: usize,
    pub warm_up: usize,
    pub seed: u64,
    catalogs: BTreeMap<usize, ActionCatalog>,
}

impl Scenario {
    pub fn new(
        topology: Topology,
        flows: Vec<Flow>,
        num_channels: usize,
        settings: RunSettings,
    ) -> Result<Self> {
        let RunSettings { learning, theta, feedback, horizon, warm_up, seed } = settings;
        if num_channels == 0 {
            return Err(Error::config("topology.num_channels", "must be at least 1"));
        }
        let mut catalogs = BTreeMap::new();
        for node in topology.nodes() {
            if node.num_radios > num_channels {
                return Err(Error::config(
                    "topology.num_radios",
                    format!(
                        "node {} has {} radios but only {num_channels} channels exist",
                        node.id, node.num_radios
                    ),
                ));
            }
            if let Entry::Vacant(slot) = catalogs.entry(node.num_radios) {
                let catalog = enumerate_channel_sets(num_channels, node.num_radios)
                    .map_err(|e| Error::config("topology.num_channels", e.to_string()))?;
                slot.insert(catalog);
            }
        }
        learning.validate().map_err(|e| Error::config("learning", e.to_string()))?;
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::config("learning.theta", format!("{theta} must be positive")));
        }
        if horizon > 0 && warm_up >= horizon {
            return Err(Error::config(
                "engine.warmup",
                format!("warm-up {warm_up} must be below horizon {horizon}"),
            ));
        }
        let routing =
            shortest_path_routing(&topology, &flows).map_err(|e| Error::config("flows", e.to_string()))?;
        Ok(Self {
            topology,
            flows,
            routing,
            num_channels,
            learning,
            theta,
            feedback,
            horizon,
            warm_up,
            seed,
            catalogs,
        })
    }

    pub fn settings(&self) -> RunSettings {
        RunSettings {
            learning: self.learning,
            theta: self.theta,
            feedback: self.feedback,
            horizon: self.horizon,
            warm_up: self.warm_up,
            seed: self.seed,
        }
    }

    /// Action catalog of a node.
    pub fn catalog(&self, node: usize) -> &ActionCatalog {
        &self.catalogs[&self.topology.nodes()[node].num_radios]
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn with_horizon(&self, horizon: usize, warm_up: usize) -> Result<Self> {
        if horizon > 0 && warm_up >= horizon {
            return Err(Error::config("engine.warmup", "warm-up must be below horizon"));
        }
        Ok(Self { horizon, warm_up, ..self.clone() })
    }

    /// Number of joint channel-set assignments over all nodes.
    pub fn joint_action_space(&self) -> f64 {
        (0..self.topology.node_count()).map(|v| self.catalog(v).len() as f64).product()
    }
}

/// How nodes choose channel sets.
#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    /// Automata sample and learn every slot.
    Learning,
    /// Fixed per-node action indices; automata are pinned and never updated.
    Frozen(Vec<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Batch {
    flow: FlowId,
    packets: u64,
}

/// FIFO queue of one link, tracking which flow each packet belongs to.
#[derive(Debug, Clone, Default)]
struct LinkQueue {
    batches: VecDeque<Batch>,
    len: u64,
}

impl LinkQueue {
    fn push(&mut self, flow: FlowId, packets: u64) {
        if packets == 0 {
            return;
        }
        match self.batches.back_mut() {
            Some(b) if b.flow == flow => b.packets += packets,
            _ => self.batches.push_back(Batch { flow, packets }),
        }
        self.len += packets;
    }

    fn pop(&mut self, mut packets: u64) -> Vec<Batch> {
        let mut out = Vec::new();
        while packets > 0 {
            let Some(front) = self.batches.front_mut() else { break };
            let take = front.packets.min(packets);
            out.push(Batch { flow: front.flow, packets: take });
            front.packets -= take;
            packets -= take;
            self.len -= take;
            if front.packets == 0 {
                self.batches.pop_front();
            }
        }
        out
    }

    fn packets_of(&self, flow: FlowId) -> u64 {
        self.batches.iter().filter(|b| b.flow == flow).map(|b| b.packets).sum()
    }
}

/// Mutable state of a run between slots.
#[derive(Debug, Clone)]
pub struct SlotState {
    pub t: usize,
    pub automata: Vec<ActionProbabilityVector>,
    pub cq_prev: Vec<f64>,
    queues: Vec<LinkQueue>,
    credit: Vec<f64>,
    previous: Option<Vec<ChannelSet>>,
    total_injected: u64,
    total_delivered: u64,
    rng: ChaCha8Rng,
}

impl SlotState {
    pub fn new(scenario: &Scenario, policy: &Policy) -> Result<Self> {
        let n = scenario.topology.node_count();
        let automata = match policy {
            Policy::Learning => {
                (0..n).map(|v| init_uniform(scenario.catalog(v).len())).collect::<Result<_>>()?
            }
            Policy::Frozen(actions) => {
                if actions.len() != n {
                    return Err(Error::invalid(format!("{} frozen actions for {n} nodes", actions.len())));
                }
                actions
                    .iter()
                    .enumerate()
                    .map(|(v, &a)| ActionProbabilityVector::pure(scenario.catalog(v).len(), a))
                    .collect::<Result<_>>()?
            }
        };
        Ok(Self {
            t: 0,
            automata,
            cq_prev: vec![0.0; n],
            queues: vec![LinkQueue::default(); scenario.topology.link_count()],
            credit: vec![0.0; scenario.flows.len()],
            previous: None,
            total_injected: 0,
            total_delivered: 0,
            rng: ChaCha8Rng::seed_from_u64(scenario.seed),
        })
    }

    pub fn queue_len(&self, l: LinkId) -> u64 {
        self.queues[l].len
    }

    pub fn queue_lens(&self) -> Vec<u64> {
        self.queues.iter().map(|q| q.len).collect()
    }

    pub fn total_queued(&self) -> u64 {
        self.queues.iter().map(|q| q.len).sum()
    }

    pub fn total_injected(&self) -> u64 {
        self.total_injected
    }

    pub fn total_delivered(&self) -> u64 {
        self.total_delivered
    }

    /// Packets injected so far equal packets delivered plus packets queued.
    pub fn conserves_packets(&self) -> bool {
        self.total_injected == self.total_delivered + self.total_queued()
    }
}

/// Samples one action per node, in ascending node order.
pub fn select_all<R: Rng + ?Sized>(
    scenario: &Scenario,
    automata: &[ActionProbabilityVector],
    rng: &mut R,
) -> Vec<(usize, ChannelSet)> {
    automata
        .iter()
        .enumerate()
        .map(|(v, pv)| {
            let action = sample_action(pv, rng);
            let set = scenario.catalog(v).get(action).expect("action within catalog");
            (action, set)
        })
        .collect()
}

/// Adds each flow's offered load to the queue of its first link. Fractional
/// loads accumulate as credit and are released in whole packets. Returns the
/// packets injected per flow.
pub fn inject_traffic(state: &mut SlotState, flows: &[Flow], routing: &RoutingMatrix) -> Vec<u64> {
    flows
        .iter()
        .map(|flow| {
            state.credit[flow.id] += flow.load;
            // Tolerate accumulated rounding of fractional loads.
            let release = (state.credit[flow.id] + 1e-9).floor().max(0.0);
            state.credit[flow.id] -= release;
            let packets = release as u64;
            let first = routing.path(flow.id).links[0];
            state.queues[first].push(flow.id, packets);
            state.total_injected += packets;
            packets
        })
        .collect()
}

/// Picks a maximal conflict-free set of backlogged active links.
///
/// Candidates are visited in a random order and admitted when no admitted
/// link interferes on the same channel and both endpoints have a free radio
/// on that channel. A node never serves more links than it has radios.
pub fn schedule_transmissions<R: Rng + ?Sized>(
    topology: &Topology,
    ca: &ChannelAssignmentMatrix,
    queue_lens: &[u64],
    rng: &mut R,
) -> Vec<LinkId> {
    let mut candidates: Vec<(LinkId, usize)> =
        ca.active_links().filter(|&(l, _)| queue_lens[l] > 0).collect();
    candidates.shuffle(rng);

    let n = topology.node_count();
    let mut busy = vec![0usize; n];
    let mut tuned: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut admitted: Vec<(LinkId, usize)> = Vec::new();
    for (l, ch) in candidates {
        let link = &topology.links()[l];
        let free = |v: usize| busy[v] < topology.nodes()[v].num_radios && !tuned[v].contains(&ch);
        if !free(link.tx) || !free(link.rx) {
            continue;
        }
        if admitted.iter().any(|&(o, c)| c == ch && topology.interferes(l, o)) {
            continue;
        }
        for v in [link.tx, link.rx] {
            busy[v] += 1;
            tuned[v].push(ch);
        }
        admitted.push((l, ch));
    }
    let mut winners: Vec<LinkId> = admitted.into_iter().map(|(l, _)| l).collect();
    winners.sort_unstable();
    winners
}

/// Checks the arbiter's output: winners are active, pairwise compatible and
/// within every node's radio budget.
pub fn is_conflict_free(topology: &Topology, ca: &ChannelAssignmentMatrix, winners: &[LinkId]) -> bool {
    let mut per_node: Vec<Vec<usize>> = vec![Vec::new(); topology.node_count()];
    for &l in winners {
        let Some(ch) = ca.active_channel(l) else { return false };
        let link = &topology.links()[l];
        for v in [link.tx, link.rx] {
            if per_node[v].contains(&ch) {
                return false;
            }
            per_node[v].push(ch);
        }
    }
    if per_node.iter().zip(topology.nodes()).any(|(chs, node)| chs.len() > node.num_radios) {
        return false;
    }
    winners.iter().enumerate().all(|(i, &a)| {
        winners[i + 1..]
            .iter()
            .all(|&b| ca.active_channel(a) != ca.active_channel(b) || !topology.interferes(a, b))
    })
}

/// Result of serving one slot's winners.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Service {
    /// Packets served per link.
    pub served: Vec<u64>,
    /// Packets absorbed at each flow's destination.
    pub delivered: Vec<u64>,
}

/// Each winner sends `min(queue, capacity)` packets. Packets move to the
/// flow's next link, or leave the network at the flow destination.
pub fn serve_queues(
    state: &mut SlotState,
    topology: &Topology,
    routing: &RoutingMatrix,
    winners: &[LinkId],
) -> Service {
    let mut service =
        Service { served: vec![0; topology.link_count()], delivered: vec![0; routing.flow_count()] };
    let mut forwarded: Vec<(LinkId, FlowId, u64)> = Vec::new();
    for &l in winners {
        let capacity = topology.links()[l].capacity;
        let amount = state.queues[l].len.min(capacity);
        service.served[l] = amount;
        for batch in state.queues[l].pop(amount) {
            let path = routing.path(batch.flow);
            let hop = path.links.iter().position(|&x| x == l).expect("packet on its route");
            match path.links.get(hop + 1) {
                Some(&next) => forwarded.push((next, batch.flow, batch.packets)),
                None => {
                    service.delivered[batch.flow] += batch.packets;
                    state.total_delivered += batch.packets;
                }
            }
        }
    }
    // Forwarded packets become sendable from the next slot on.
    for (next, flow, packets) in forwarded {
        state.queues[next].push(flow, packets);
    }
    service
}

/// One run of a scenario under a policy.
pub struct Simulation<'a> {
    scenario: &'a Scenario,
    policy: Policy,
    state: SlotState,
}

impl<'a> Simulation<'a> {
    pub fn new(scenario: &'a Scenario, policy: Policy) -> Result<Self> {
        let state = SlotState::new(scenario, &policy)?;
        Ok(Self { scenario, policy, state })
    }

    pub fn state(&self) -> &SlotState {
        &self.state
    }

    /// Advances one slot and reports what happened in it.
    pub fn step(&mut self) -> Result<SlotRecord> {
        let scenario = self.scenario;
        let topology = &scenario.topology;
        let routing = &scenario.routing;
        let n = topology.node_count();

        let choices: Vec<(usize, ChannelSet)> = match &self.policy {
            Policy::Learning => select_all(scenario, &self.state.automata, &mut self.state.rng),
            Policy::Frozen(actions) => actions
                .iter()
                .enumerate()
                .map(|(v, &a)| (a, scenario.catalog(v).get(a).expect("validated action")))
                .collect(),
        };
        let selections: Vec<ChannelSet> = choices.iter().map(|&(_, s)| s).collect();
        let ca = derive_link_channels(topology, &selections, scenario.num_channels)?;

        let backlog = self.state.queue_lens();
        let source_backlog: Vec<u64> = routing
            .paths()
            .iter()
            .enumerate()
            .map(|(f, p)| self.state.queues[p.links[0]].packets_of(f))
            .collect();

        let injected = inject_traffic(&mut self.state, &scenario.flows, routing);
        let queue_lens = self.state.queue_lens();
        let winners = schedule_transmissions(topology, &ca, &queue_lens, &mut self.state.rng);
        debug_assert!(is_conflict_free(topology, &ca, &winners));
        let service = serve_queues(&mut self.state, topology, routing, &winners);
        debug_assert!(self.state.conserves_packets());

        let mut counters = vec![NodeCounters::default(); n];
        for link in topology.links() {
            let r = service.served[link.id];
            counters[link.tx].sending(link.id, r, backlog[link.id]);
            counters[link.rx].receiving(link.id, r, backlog[link.id]);
        }
        for (f, path) in routing.paths().iter().enumerate() {
            counters[path.nodes[0]].source(f, injected[f], source_backlog[f]);
            counters[*path.nodes.last().expect("non-empty route")].sink(f, service.delivered[f]);
        }
        let cq = counters
            .iter()
            .enumerate()
            .map(|(v, c)| compute_cq(v, c, routing, scenario.theta))
            .collect::<Result<Vec<f64>>>()?;

        let mut beta = vec![0.0; n];
        if self.policy == Policy::Learning {
            for v in 0..n {
                let signal = compute_beta(cq[v], self.state.cq_prev[v], scenario.feedback);
                beta[v] = signal.value();
                let pv = &self.state.automata[v];
                if pv.len() > 1 {
                    self.state.automata[v] = scenario.learning.update(pv, choices[v].0, signal)?;
                }
            }
        }

        let switched = match &self.state.previous {
            Some(prev) => prev.iter().zip(&selections).map(|(a, b)| a != b).collect(),
            None => vec![false; n],
        };
        let record = SlotRecord {
            slot: self.state.t,
            delivered: service.delivered.iter().sum(),
            injected: injected.iter().sum(),
            queued: self.state.total_queued(),
            total_injected: self.state.total_injected,
            total_delivered: self.state.total_delivered,
            served: service.served,
            winners,
            connectivity: connectivity_metric(topology, &selections),
            interference: interference_metric(topology, &ca),
            cq: cq.clone(),
            beta,
            actions: choices.iter().map(|&(a, _)| a).collect(),
            probs: self.state.automata.iter().map(|p| p.probs().to_vec()).collect(),
            max_prob: self.state.automata.iter().map(|p| p.max_prob()).collect(),
            suboptimal_l1: Vec::new(),
            switched,
        };
        self.state.cq_prev = cq;
        self.state.previous = Some(selections);
        self.state.t += 1;
        Ok(record)
    }
}

/// Runs `scenario.horizon` slots. Sub-optimal mass in the returned series is
/// measured against each node's most probable action at the end of the run.
pub fn run(scenario: &Scenario, policy: Policy) -> Result<MetricsSeries> {
    let mut sim = Simulation::new(scenario, policy)?;
    let mut series = MetricsSeries::new(scenario.warm_up);
    for _ in 0..scenario.horizon {
        series.records.push(sim.step()?);
    }
    let reference = series.final_argmax();
    series.set_reference(&reference);
    Ok(series)
}
