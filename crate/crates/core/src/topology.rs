//! Static mesh model: node placement, directed links, interference
//! relationships, flows and single-path routing.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = usize;
pub type LinkId = usize;
pub type FlowId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Range comparisons tolerate the rounding of `hypot` so that a range equal
/// to the grid spacing includes the grid neighbours.
fn within(distance: f64, range: f64) -> bool {
    distance <= range + 1e-9 * range.max(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub position: Position,
    pub num_radios: usize,
}

/// Directed link from transmitter `tx` to receiver `rx`.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub id: LinkId,
    pub tx: NodeId,
    pub rx: NodeId,
    /// Packets per slot, identical on every channel.
    pub capacity: u64,
}

/// Links incident to one node, split by direction.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IncidentLinks {
    pub sending: Vec<LinkId>,
    pub receiving: Vec<LinkId>,
}

impl IncidentLinks {
    pub fn all(&self) -> Vec<LinkId> {
        let mut all: Vec<_> = self.sending.iter().chain(&self.receiving).copied().collect();
        all.sort_unstable();
        all
    }

    pub fn len(&self) -> usize {
        self.sending.len() + self.receiving.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone)]
pub struct Topology {
    nodes: Vec<Node>,
    links: Vec<Link>,
    tx_range: f64,
    interference_range: f64,
    link_index: HashMap<(NodeId, NodeId), LinkId>,
    incident: Vec<IncidentLinks>,
    neighbors: Vec<Vec<NodeId>>,
    interference: Vec<Vec<LinkId>>,
}

impl Topology {
    /// Builds the link set from every ordered pair of nodes within
    /// `tx_range` and precomputes interference sets.
    ///
    /// Node ids must equal their index. An `interference_range` of zero
    /// disables the interference relation entirely, including the implicit
    /// conflict between links that share a transmitter.
    pub fn new(nodes: Vec<Node>, tx_range: f64, interference_range: f64, capacity: u64) -> Result<Self> {
        if !(tx_range >= 0.0 && tx_range.is_finite()) {
            return Err(Error::invalid(format!("transmission range {tx_range} is invalid")));
        }
        if !(interference_range >= 0.0 && interference_range.is_finite()) {
            return Err(Error::invalid(format!("interference range {interference_range} is invalid")));
        }
        if capacity == 0 {
            return Err(Error::invalid("link capacity must be positive"));
        }
        for (i, node) in nodes.iter().enumerate() {
            if node.id != i {
                return Err(Error::invalid(format!("node at index {i} has id {}", node.id)));
            }
            if node.num_radios == 0 {
                return Err(Error::invalid(format!("node {i} has no radios")));
            }
        }

        let n = nodes.len();
        let mut links = Vec::new();
        let mut link_index = HashMap::new();
        let mut incident = vec![IncidentLinks::default(); n];
        for u in 0..n {
            for v in 0..n {
                if u == v || !within(nodes[u].position.distance(&nodes[v].position), tx_range) {
                    continue;
                }
                let id = links.len();
                links.push(Link { id, tx: u, rx: v, capacity });
                link_index.insert((u, v), id);
                incident[u].sending.push(id);
                incident[v].receiving.push(id);
            }
        }

        let neighbors: Vec<Vec<NodeId>> = (0..n)
            .map(|v| {
                (0..n)
                    .filter(|&u| {
                        u != v && within(nodes[u].position.distance(&nodes[v].position), interference_range)
                    })
                    .collect()
            })
            .collect();

        let interference = links
            .iter()
            .map(|l| {
                links
                    .iter()
                    .filter(|other| {
                        other.id != l.id
                            && ((interference_range > 0.0 && other.tx == l.tx)
                                || neighbors[l.tx].binary_search(&other.tx).is_ok())
                    })
                    .map(|other| other.id)
                    .collect()
            })
            .collect();

        Ok(Self { nodes, links, tx_range, interference_range, link_index, incident, neighbors, interference })
    }

    /// `side_count`² nodes on a uniform grid, each at the centre of its cell
    /// in a square region of side `region_size`. Node ids run row by row.
    pub fn grid(
        side_count: usize,
        region_size: f64,
        tx_range: f64,
        interference_range: f64,
        num_radios: usize,
        capacity: u64,
    ) -> Result<Self> {
        if side_count < 2 {
            return Err(Error::invalid(format!("grid side count {side_count} is below 2")));
        }
        if !(region_size > 0.0 && region_size.is_finite()) {
            return Err(Error::invalid(format!("region size {region_size} is invalid")));
        }
        let spacing = region_size / side_count as f64;
        if !within(spacing, tx_range) {
            return Err(Error::DisconnectedTopology { tx_range, spacing });
        }
        let nodes = (0..side_count * side_count)
            .map(|id| {
                let (row, col) = (id / side_count, id % side_count);
                Node {
                    id,
                    position: Position::new((col as f64 + 0.5) * spacing, (row as f64 + 0.5) * spacing),
                    num_radios,
                }
            })
            .collect();
        Self::new(nodes, tx_range, interference_range, capacity)
    }

    /// `count` nodes on a horizontal line, `spacing` metres apart.
    pub fn line(
        count: usize,
        spacing: f64,
        tx_range: f64,
        interference_range: f64,
        num_radios: usize,
        capacity: u64,
    ) -> Result<Self> {
        let nodes = (0..count)
            .map(|id| Node { id, position: Position::new(id as f64 * spacing, 0.0), num_radios })
            .collect();
        Self::new(nodes, tx_range, interference_range, capacity)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn tx_range(&self) -> f64 {
        self.tx_range
    }

    pub fn interference_range(&self) -> f64 {
        self.interference_range
    }

    pub fn node(&self, v: NodeId) -> Result<&Node> {
        self.nodes.get(v).ok_or(Error::UnknownNode(v))
    }

    pub fn link(&self, l: LinkId) -> Result<&Link> {
        self.links.get(l).ok_or(Error::UnknownLink(l))
    }

    pub fn find_link(&self, tx: NodeId, rx: NodeId) -> Option<LinkId> {
        self.link_index.get(&(tx, rx)).copied()
    }

    /// Links with `v` as transmitter or receiver.
    pub fn links_of_node(&self, v: NodeId) -> Result<&IncidentLinks> {
        self.incident.get(v).ok_or(Error::UnknownNode(v))
    }

    /// Nodes other than `v` within interference range of `v`.
    pub fn interference_neighbors(&self, v: NodeId) -> Result<&[NodeId]> {
        self.neighbors.get(v).map(Vec::as_slice).ok_or(Error::UnknownNode(v))
    }

    /// Links whose transmitter lies within interference range of the
    /// transmitter of `l`, excluding `l` itself.
    pub fn interference_set(&self, l: LinkId) -> Result<&[LinkId]> {
        self.interference.get(l).map(Vec::as_slice).ok_or(Error::UnknownLink(l))
    }

    pub fn interferes(&self, a: LinkId, b: LinkId) -> bool {
        self.interference[a].binary_search(&b).is_ok()
    }

    /// Unordered node pairs `(u, v)`, `u < v`, within transmission range.
    pub fn transmission_pairs(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.links.iter().filter(|l| l.tx < l.rx).map(|l| (l.tx, l.rx))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flow {
    pub id: FlowId,
    pub src: NodeId,
    pub dst: NodeId,
    /// Offered load in packets per slot.
    pub load: f64,
}

/// Route of one flow: `nodes[k]` transmits on `links[k]` to `nodes[k + 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowPath {
    pub nodes: Vec<NodeId>,
    pub links: Vec<LinkId>,
}

impl FlowPath {
    pub fn position_of(&self, node: NodeId) -> Option<usize> {
        self.nodes.iter().position(|&n| n == node)
    }
}

/// Flow × link incidence, one simple path per flow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoutingMatrix {
    link_count: usize,
    paths: Vec<FlowPath>,
}

impl RoutingMatrix {
    pub fn flow_count(&self) -> usize {
        self.paths.len()
    }

    pub fn link_count(&self) -> usize {
        self.link_count
    }

    pub fn path(&self, f: FlowId) -> &FlowPath {
        &self.paths[f]
    }

    pub fn paths(&self) -> &[FlowPath] {
        &self.paths
    }

    /// `R_fl`: whether flow `f` traverses link `l`.
    pub fn uses(&self, f: FlowId, l: LinkId) -> bool {
        self.paths[f].links.contains(&l)
    }

    pub fn row(&self, f: FlowId) -> Vec<u8> {
        let mut row = vec![0; self.link_count];
        for &l in &self.paths[f].links {
            row[l] = 1;
        }
        row
    }
}

/// Minimum-hop routes. Among equal-length paths the lexicographically
/// smallest node sequence wins.
pub fn shortest_path_routing(topology: &Topology, flows: &[Flow]) -> Result<RoutingMatrix> {
    let mut paths = Vec::with_capacity(flows.len());
    for (index, flow) in flows.iter().enumerate() {
        if flow.id != index {
            return Err(Error::invalid(format!("flow at index {index} has id {}", flow.id)));
        }
        topology.node(flow.src)?;
        topology.node(flow.dst)?;
        if flow.src == flow.dst {
            return Err(Error::invalid(format!("flow {} starts and ends at node {}", flow.id, flow.src)));
        }
        if !(flow.load >= 0.0 && flow.load.is_finite()) {
            return Err(Error::invalid(format!("flow {} has load {}", flow.id, flow.load)));
        }
        paths.push(route(topology, flow)?);
    }
    Ok(RoutingMatrix { link_count: topology.link_count(), paths })
}

fn route(topology: &Topology, flow: &Flow) -> Result<FlowPath> {
    // Hop distance to the destination, following links backwards.
    let mut hops = vec![usize::MAX; topology.node_count()];
    hops[flow.dst] = 0;
    let mut queue = VecDeque::from([flow.dst]);
    while let Some(v) = queue.pop_front() {
        for &l in &topology.incident[v].receiving {
            let u = topology.links[l].tx;
            if hops[u] == usize::MAX {
                hops[u] = hops[v] + 1;
                queue.push_back(u);
            }
        }
    }
    if hops[flow.src] == usize::MAX {
        return Err(Error::NoRoute { flow: flow.id, src: flow.src, dst: flow.dst });
    }

    let mut nodes = vec![flow.src];
    let mut links = Vec::new();
    let mut at = flow.src;
    while at != flow.dst {
        // Sending links are ordered by receiver id.
        let next = topology.incident[at]
            .sending
            .iter()
            .copied()
            .find(|&l| hops[topology.links[l].rx] + 1 == hops[at])
            .expect("bfs guarantees a downhill neighbour");
        at = topology.links[next].rx;
        links.push(next);
        nodes.push(at);
    }
    Ok(FlowPath { nodes, links })
}
