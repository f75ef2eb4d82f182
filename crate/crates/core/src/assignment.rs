//! Channel-set action space, link channel derivation, network metrics and
//! the per-node channel-state feedback function.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::error::{Error, Result};
use crate::topology::{FlowId, LinkId, NodeId, RoutingMatrix, Topology};

/// Upper bound on channel ids representable in a [`ChannelSet`].
pub const MAX_CHANNELS: usize = 64;

/// Largest action catalog we are willing to materialize.
pub const MAX_CATALOG_LEN: u128 = 1 << 20;

/// Set of channels a node's radios are tuned to, one channel per radio.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChannelSet(u64);

impl ChannelSet {
    pub fn new(channels: &[usize], num_channels: usize) -> Result<Self> {
        if num_channels > MAX_CHANNELS {
            return Err(Error::invalid(format!("at most {MAX_CHANNELS} channels are supported")));
        }
        let mut mask = 0u64;
        for &c in channels {
            if c >= num_channels {
                return Err(Error::invalid(format!("channel {c} out of range 0..{num_channels}")));
            }
            if mask & (1 << c) != 0 {
                return Err(Error::invalid(format!("channel {c} listed twice")));
            }
            mask |= 1 << c;
        }
        Ok(Self(mask))
    }

    /// Channels `0..m`.
    pub fn first(m: usize) -> Self {
        debug_assert!(m <= MAX_CHANNELS);
        Self(if m == MAX_CHANNELS { u64::MAX } else { (1u64 << m) - 1 })
    }

    pub fn channels(&self) -> Vec<usize> {
        (0..MAX_CHANNELS).filter(|&c| self.contains(c)).collect()
    }

    pub fn contains(&self, channel: usize) -> bool {
        channel < MAX_CHANNELS && self.0 & (1 << channel) != 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn common(&self, other: &ChannelSet) -> usize {
        (self.0 & other.0).count_ones() as usize
    }

    pub fn lowest_common(&self, other: &ChannelSet) -> Option<usize> {
        let both = self.0 & other.0;
        (both != 0).then(|| both.trailing_zeros() as usize)
    }
}

impl fmt::Debug for ChannelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.channels()).finish()
    }
}

impl fmt::Display for ChannelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.channels().iter().map(usize::to_string).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// All `M`-subsets of `K` channels in lexicographic order. The position of a
/// set in the catalog is the automaton action index that selects it.
#[derive(Debug, Clone)]
pub struct ActionCatalog {
    num_channels: usize,
    set_size: usize,
    sets: Vec<ChannelSet>,
    index: HashMap<ChannelSet, usize>,
}

impl ActionCatalog {
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn num_channels(&self) -> usize {
        self.num_channels
    }

    pub fn set_size(&self) -> usize {
        self.set_size
    }

    pub fn get(&self, action: usize) -> Option<ChannelSet> {
        self.sets.get(action).copied()
    }

    pub fn index_of(&self, set: &ChannelSet) -> Option<usize> {
        self.index.get(set).copied()
    }

    pub fn sets(&self) -> &[ChannelSet] {
        &self.sets
    }
}

/// `n` choose `k`, saturating.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

pub fn enumerate_channel_sets(num_channels: usize, set_size: usize) -> Result<ActionCatalog> {
    if set_size == 0 || set_size > num_channels {
        return Err(Error::invalid(format!("channel-set size {set_size} must be in 1..={num_channels}")));
    }
    if num_channels > MAX_CHANNELS {
        return Err(Error::invalid(format!("at most {MAX_CHANNELS} channels are supported")));
    }
    let total = binomial(num_channels, set_size);
    if total > MAX_CATALOG_LEN {
        return Err(Error::invalid(format!("C({num_channels}, {set_size}) = {total} actions is too many")));
    }

    let mut sets = Vec::with_capacity(total as usize);
    let mut combo: Vec<usize> = (0..set_size).collect();
    loop {
        sets.push(ChannelSet(combo.iter().fold(0u64, |m, &c| m | 1 << c)));
        // Advance the rightmost position that still has room.
        let Some(pos) = (0..set_size).rev().find(|&i| combo[i] < num_channels - set_size + i) else {
            break;
        };
        combo[pos] += 1;
        for i in pos + 1..set_size {
            combo[i] = combo[i - 1] + 1;
        }
    }
    let index = sets.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    Ok(ActionCatalog { num_channels, set_size, sets, index })
}

/// Link × channel assignment. Each link uses at most one channel per slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelAssignmentMatrix {
    num_channels: usize,
    active: Vec<Option<usize>>,
}

impl ChannelAssignmentMatrix {
    pub fn from_active(num_channels: usize, active: Vec<Option<usize>>) -> Self {
        Self { num_channels, active }
    }

    pub fn num_channels(&self) -> usize {
        self.num_channels
    }

    pub fn link_count(&self) -> usize {
        self.active.len()
    }

    /// Channel carried by `l` this slot, if any.
    pub fn active_channel(&self, l: LinkId) -> Option<usize> {
        self.active.get(l).copied().flatten()
    }

    /// `c_lk`.
    pub fn assigned(&self, l: LinkId, k: usize) -> bool {
        self.active_channel(l) == Some(k)
    }

    pub fn row(&self, l: LinkId) -> Vec<u8> {
        (0..self.num_channels).map(|k| self.assigned(l, k) as u8).collect()
    }

    pub fn active_links(&self) -> impl Iterator<Item = (LinkId, usize)> + '_ {
        self.active.iter().enumerate().filter_map(|(l, c)| c.map(|c| (l, c)))
    }
}

fn check_selections(topology: &Topology, selections: &[ChannelSet]) -> Result<()> {
    if selections.len() != topology.node_count() {
        return Err(Error::invalid(format!(
            "{} selections for {} nodes",
            selections.len(),
            topology.node_count()
        )));
    }
    for (node, set) in topology.nodes().iter().zip(selections) {
        if set.len() != node.num_radios {
            return Err(Error::invalid(format!(
                "node {} has {} radios but selected {} channels",
                node.id,
                node.num_radios,
                set.len()
            )));
        }
    }
    Ok(())
}

/// A link is active on the lowest channel shared by both endpoints, or
/// inactive when they share none.
pub fn derive_link_channels(
    topology: &Topology,
    selections: &[ChannelSet],
    num_channels: usize,
) -> Result<ChannelAssignmentMatrix> {
    check_selections(topology, selections)?;
    let active = topology.links().iter().map(|l| selections[l.tx].lowest_common(&selections[l.rx])).collect();
    Ok(ChannelAssignmentMatrix { num_channels, active })
}

/// Sum over node pairs within transmission range of the number of channels
/// they share.
pub fn connectivity_metric(topology: &Topology, selections: &[ChannelSet]) -> u64 {
    topology.transmission_pairs().map(|(u, v)| selections[u].common(&selections[v]) as u64).sum()
}

/// Ordered pairs of active, mutually interfering links on the same channel.
pub fn interference_metric(topology: &Topology, ca: &ChannelAssignmentMatrix) -> u64 {
    ca.active_links()
        .map(|(l, c)| {
            topology
                .interference_set(l)
                .map_or(0, |set| set.iter().filter(|&&o| ca.active_channel(o) == Some(c)).count() as u64)
        })
        .sum()
}

/// Per-slot packet counts on one link as seen by a node.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LinkCounters {
    /// Packets received over the link this slot (receiving side only).
    pub arrivals: u64,
    /// Packets sent over the link this slot (sending side only).
    pub sent: u64,
    /// Packets queued on the link left over from the previous slot.
    pub backlog: u64,
}

/// Slot counters for one node.
///
/// Besides real incident links, a flow source sees its injected traffic as
/// arrivals on a virtual incoming link, and a flow destination sees absorbed
/// packets as sent on a virtual outgoing link. This gives both ends of a
/// route a defined channel-state value.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeCounters {
    pub links: BTreeMap<LinkId, LinkCounters>,
    pub injected: BTreeMap<FlowId, LinkCounters>,
    pub absorbed: BTreeMap<FlowId, u64>,
}

impl NodeCounters {
    pub fn receiving(&mut self, l: LinkId, arrivals: u64, backlog: u64) -> &mut Self {
        self.links.insert(l, LinkCounters { arrivals, sent: 0, backlog });
        self
    }

    pub fn sending(&mut self, l: LinkId, sent: u64, backlog: u64) -> &mut Self {
        self.links.insert(l, LinkCounters { arrivals: 0, sent, backlog });
        self
    }

    pub fn source(&mut self, f: FlowId, injected: u64, backlog: u64) -> &mut Self {
        self.injected.insert(f, LinkCounters { arrivals: injected, sent: 0, backlog });
        self
    }

    pub fn sink(&mut self, f: FlowId, absorbed: u64) -> &mut Self {
        self.absorbed.insert(f, absorbed);
        self
    }
}

/// Channel-state value of `node`: for every flow passing through it, the
/// packets sent on the outgoing hop divided by the arrivals plus backlog of
/// the incoming hop, floored at `theta`, summed over flows.
pub fn compute_cq(node: NodeId, counters: &NodeCounters, routing: &RoutingMatrix, theta: f64) -> Result<f64> {
    if theta.is_nan() || theta <= 0.0 {
        return Err(Error::invalid(format!("theta {theta} must be positive")));
    }
    let mut cq = 0.0;
    for (f, path) in routing.paths().iter().enumerate() {
        let Some(pos) = path.position_of(node) else {
            continue;
        };
        let incoming = if pos == 0 {
            counters.injected.get(&f).copied()
        } else {
            counters.links.get(&path.links[pos - 1]).copied()
        };
        let sent = if pos == path.links.len() {
            counters.absorbed.get(&f).copied()
        } else {
            counters.links.get(&path.links[pos]).map(|c| c.sent)
        };
        if let (Some(incoming), Some(sent)) = (incoming, sent) {
            let available = (incoming.arrivals + incoming.backlog) as f64;
            cq += sent as f64 / available.max(theta);
        }
    }
    Ok(cq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{shortest_path_routing, Flow, Node, Position};
    use proptest::prelude::*;

    fn set(channels: &[usize]) -> ChannelSet {
        ChannelSet::new(channels, 10).unwrap()
    }

    #[test]
    fn catalog_sizes() {
        let c = enumerate_channel_sets(10, 2).unwrap();
        assert_eq!(c.len(), 45);
        assert_eq!(c.get(0).unwrap().channels(), vec![0, 1]);
        assert_eq!(c.get(44).unwrap().channels(), vec![8, 9]);

        let c = enumerate_channel_sets(3, 3).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.get(0).unwrap().channels(), vec![0, 1, 2]);

        assert_eq!(enumerate_channel_sets(10, 3).unwrap().len(), 120);
        assert!(enumerate_channel_sets(3, 4).is_err());
        assert!(enumerate_channel_sets(3, 0).is_err());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(10, 2), 45);
        assert_eq!(binomial(10, 3), 120);
        assert_eq!(binomial(5, 7), 0);
    }

    #[test]
    fn channel_set_validation() {
        assert!(ChannelSet::new(&[1, 1], 10).is_err());
        assert!(ChannelSet::new(&[10], 10).is_err());
        assert_eq!(set(&[3, 1]).channels(), vec![1, 3]);
        assert_eq!(set(&[3, 1]).to_string(), "{1,3}");
        assert_eq!(ChannelSet::first(3), set(&[0, 1, 2]));
    }

    fn pair() -> Topology {
        let nodes = vec![
            Node { id: 0, position: Position::new(0.0, 0.0), num_radios: 2 },
            Node { id: 1, position: Position::new(100.0, 0.0), num_radios: 2 },
        ];
        Topology::new(nodes, 150.0, 300.0, 10).unwrap()
    }

    #[test]
    fn link_channels() {
        let t = pair();
        let l = t.find_link(0, 1).unwrap();
        let ca = derive_link_channels(&t, &[set(&[1, 3]), set(&[3, 7])], 10).unwrap();
        assert_eq!(ca.active_channel(l), Some(3));
        assert_eq!(ca.row(l).iter().sum::<u8>(), 1);

        let ca = derive_link_channels(&t, &[set(&[1, 2]), set(&[5, 6])], 10).unwrap();
        assert_eq!(ca.active_channel(l), None);
        assert!(ca.row(l).iter().all(|&x| x == 0));

        let ca = derive_link_channels(&t, &[set(&[2, 4]), set(&[2, 4])], 10).unwrap();
        assert_eq!(ca.active_channel(l), Some(2));

        assert!(derive_link_channels(&t, &[set(&[2, 4])], 10).is_err());
        assert!(derive_link_channels(&t, &[set(&[2]), set(&[2, 4])], 10).is_err());
    }

    #[test]
    fn connectivity_examples() {
        let nodes = vec![
            Node { id: 0, position: Position::new(0.0, 0.0), num_radios: 2 },
            Node { id: 1, position: Position::new(100.0, 0.0), num_radios: 2 },
        ];
        let t = Topology::new(nodes, 150.0, 300.0, 10).unwrap();
        assert_eq!(connectivity_metric(&t, &[set(&[1, 2]), set(&[2, 3])]), 1);

        let g = Topology::grid(3, 300.0, 100.0, 200.0, 2, 10).unwrap();
        let pairs = g.transmission_pairs().count() as u64;
        assert_eq!(pairs, 12);
        let same = vec![set(&[4, 5]); 9];
        assert_eq!(connectivity_metric(&g, &same), 2 * pairs);

        let g = Topology::grid(2, 300.0, 160.0, 300.0, 2, 10).unwrap();
        let disjoint = vec![set(&[0, 1]), set(&[2, 3]), set(&[4, 5]), set(&[6, 7])];
        assert_eq!(connectivity_metric(&g, &disjoint), 0);
    }

    #[test]
    fn interference_examples() {
        let t = pair();
        let a = t.find_link(0, 1).unwrap();
        let b = t.find_link(1, 0).unwrap();
        assert!(t.interferes(a, b));

        let none = ChannelAssignmentMatrix::from_active(10, vec![None, None]);
        assert_eq!(interference_metric(&t, &none), 0);

        let mut active = vec![None; 2];
        active[a] = Some(1);
        active[b] = Some(2);
        assert_eq!(interference_metric(&t, &ChannelAssignmentMatrix::from_active(10, active)), 0);

        let mut active = vec![None; 2];
        active[a] = Some(1);
        active[b] = Some(1);
        assert_eq!(interference_metric(&t, &ChannelAssignmentMatrix::from_active(10, active)), 2);
    }

    fn through_node_one() -> (Topology, RoutingMatrix) {
        let t = Topology::line(3, 100.0, 100.0, 200.0, 1, 10).unwrap();
        let r = shortest_path_routing(&t, &[Flow { id: 0, src: 0, dst: 2, load: 1.0 }]).unwrap();
        (t, r)
    }

    #[test]
    fn cq_examples() {
        let (t, r) = through_node_one();
        let inbound = t.find_link(0, 1).unwrap();
        let outbound = t.find_link(1, 2).unwrap();

        let mut c = NodeCounters::default();
        c.receiving(inbound, 10, 0).sending(outbound, 8, 0);
        assert_eq!(compute_cq(1, &c, &r, 1.0).unwrap(), 0.8);

        let mut c = NodeCounters::default();
        c.receiving(inbound, 0, 0).sending(outbound, 0, 0);
        assert_eq!(compute_cq(1, &c, &r, 1.0).unwrap(), 0.0);

        let mut c = NodeCounters::default();
        c.receiving(inbound, 4, 6).sending(outbound, 10, 0);
        assert_eq!(compute_cq(1, &c, &r, 1.0).unwrap(), 1.0);

        // Below theta the floor takes over: 1 / max(1, 2).
        let mut c = NodeCounters::default();
        c.receiving(inbound, 1, 0).sending(outbound, 1, 0);
        assert_eq!(compute_cq(1, &c, &r, 2.0).unwrap(), 0.5);

        assert!(compute_cq(1, &c, &r, 0.0).is_err());
    }

    #[test]
    fn cq_route_endpoints() {
        let (t, r) = through_node_one();
        let first = t.find_link(0, 1).unwrap();
        let last = t.find_link(1, 2).unwrap();

        let mut src = NodeCounters::default();
        src.source(0, 5, 5).sending(first, 4, 0);
        assert_eq!(compute_cq(0, &src, &r, 1.0).unwrap(), 0.4);

        let mut dst = NodeCounters::default();
        dst.receiving(last, 3, 1).sink(0, 3);
        assert_eq!(compute_cq(2, &dst, &r, 1.0).unwrap(), 0.75);

        // Source without a recorded injection has no link pair.
        let mut bare = NodeCounters::default();
        bare.sending(first, 4, 0);
        assert_eq!(compute_cq(0, &bare, &r, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn full_overlap_maximises_interference() {
        // Brute force over every selection of a 4-node line with K=2, M=1.
        let t = Topology::line(4, 100.0, 100.0, 150.0, 1, 10).unwrap();
        let catalog = enumerate_channel_sets(2, 1).unwrap();
        let mut best = 0;
        for code in 0..16usize {
            let sel: Vec<_> = (0..4).map(|i| catalog.get((code >> i) & 1).unwrap()).collect();
            let ca = derive_link_channels(&t, &sel, 2).unwrap();
            best = best.max(interference_metric(&t, &ca));
        }
        let same = vec![catalog.get(0).unwrap(); 4];
        let ca = derive_link_channels(&t, &same, 2).unwrap();
        assert_eq!(interference_metric(&t, &ca), best);
    }

    proptest! {
        #[test]
        fn catalog_is_a_sorted_bijection(k in 1usize..9, m_raw in 1usize..9) {
            let m = 1 + (m_raw - 1) % k;
            let c = enumerate_channel_sets(k, m).unwrap();
            prop_assert_eq!(c.len() as u128, binomial(k, m));
            for (i, s) in c.sets().iter().enumerate() {
                prop_assert_eq!(s.len(), m);
                prop_assert_eq!(c.index_of(s), Some(i));
                if i > 0 {
                    prop_assert!(c.sets()[i - 1].channels() < s.channels());
                }
            }
        }

        #[test]
        fn assignment_uses_shared_channels(codes in prop::collection::vec(0usize..45, 9)) {
            let g = Topology::grid(3, 300.0, 100.0, 200.0, 2, 10).unwrap();
            let c = enumerate_channel_sets(10, 2).unwrap();
            let sel: Vec<_> = codes.iter().map(|&i| c.get(i).unwrap()).collect();
            let ca = derive_link_channels(&g, &sel, 10).unwrap();
            for l in g.links() {
                for k in 0..10 {
                    if ca.assigned(l.id, k) {
                        prop_assert!(sel[l.tx].contains(k) && sel[l.rx].contains(k));
                    }
                }
                prop_assert!(ca.row(l.id).iter().map(|&x| x as u32).sum::<u32>() <= 1);
            }
        }

        #[test]
        fn cq_nondecreasing_in_sent(a in 0u64..50, b in 0u64..50, s in 0u64..50, ds in 0u64..50) {
            let (t, r) = through_node_one();
            let inbound = t.find_link(0, 1).unwrap();
            let outbound = t.find_link(1, 2).unwrap();
            let mut lo = NodeCounters::default();
            lo.receiving(inbound, a, b).sending(outbound, s, 0);
            let mut hi = NodeCounters::default();
            hi.receiving(inbound, a, b).sending(outbound, s + ds, 0);
            let cq_lo = compute_cq(1, &lo, &r, 1.0).unwrap();
            prop_assert!(cq_lo <= s as f64);
            prop_assert!(cq_lo <= compute_cq(1, &hi, &r, 1.0).unwrap());
            if s <= a + b && a + b >= 1 {
                prop_assert!(cq_lo <= 1.0);
            }
        }
    }
}
