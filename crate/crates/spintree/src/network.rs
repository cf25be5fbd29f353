//! Spin-network graphs and builders for the tree topologies used by the
//! transfer protocol: binary trees, sender/receiver auxiliaries, the modified
//! second-order tree, singlet links, and concatenations of trees.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Canonical node label. Grammar:
///
/// ```text
/// label   := [ "T" index ":" ] body
/// body    := "(" a "," b ")" [ "/aux" ] | "link:" key
/// ```
///
/// Tree nodes are `(a,b)`, auxiliaries `(a,b)/aux`, link spins `link:<k>`,
/// and nodes of the i-th tree in a concatenated network carry a `T<i>:` prefix.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(String);

impl NodeId {
    pub fn tree(a: u32, b: u32) -> Self {
        NodeId(format!("({a},{b})"))
    }

    pub fn tree_aux(a: u32, b: u32) -> Self {
        NodeId(format!("({a},{b})/aux"))
    }

    pub fn link(key: impl fmt::Display) -> Self {
        NodeId(format!("link:{key}"))
    }

    /// Same node inside tree instance `i` of a concatenated network.
    pub fn in_tree(&self, i: usize) -> Self {
        NodeId(format!("T{i}:{}", self.0))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Split off a `T<i>:` prefix, if any.
    pub fn split_prefix(&self) -> (Option<usize>, &str) {
        if let Some(rest) = self.0.strip_prefix('T') {
            if let Some((idx, body)) = rest.split_once(':') {
                if let Ok(i) = idx.parse::<usize>() {
                    // "link:..." also contains ':' but never starts with 'T'+digits
                    return (Some(i), body);
                }
            }
        }
        (None, &self.0)
    }
}

fn parse_body(body: &str) -> Option<()> {
    if let Some(key) = body.strip_prefix("link:") {
        return (!key.is_empty()).then_some(());
    }
    let core = body.strip_suffix("/aux").unwrap_or(body);
    let inner = core.strip_prefix('(')?.strip_suffix(')')?;
    let (a, b) = inner.split_once(',')?;
    a.parse::<u32>().ok()?;
    b.parse::<u32>().ok()?;
    Some(())
}

impl FromStr for NodeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let id = NodeId(s.to_owned());
        let (_, body) = id.split_prefix();
        parse_body(body).ok_or_else(|| Error::BadLabel(s.to_owned()))?;
        Ok(id)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    /// Local field ω (energy units, ħ = 1).
    pub omega: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: NodeId,
    pub b: NodeId,
    /// Signed XY coupling; negative = antiferromagnetic.
    pub j: f64,
}

/// Immutable labeled graph of spins. Node order is insertion order and fixes
/// the matrix index of each node, so serialized networks reproduce the same
/// Hamiltonian matrix exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetworkJson", into = "NetworkJson")]
pub struct NetworkSpec {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    #[serde(skip)]
    index: HashMap<NodeId, usize>,
}

#[derive(Serialize, Deserialize)]
struct NetworkJson {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
}

impl TryFrom<NetworkJson> for NetworkSpec {
    type Error = Error;

    fn try_from(raw: NetworkJson) -> Result<Self> {
        let mut net = NetworkSpec::new();
        for node in raw.nodes {
            net.add_node(node.id, node.omega)?;
        }
        for edge in raw.edges {
            net.add_edge(&edge.a, &edge.b, edge.j)?;
        }
        Ok(net)
    }
}

impl From<NetworkSpec> for NetworkJson {
    fn from(net: NetworkSpec) -> Self {
        NetworkJson { nodes: net.nodes, edges: net.edges }
    }
}

impl Default for NetworkSpec {
    fn default() -> Self {
        Self::new()
    }
}

impl NetworkSpec {
    pub fn new() -> Self {
        NetworkSpec { nodes: Vec::new(), edges: Vec::new(), index: HashMap::new() }
    }

    pub fn add_node(&mut self, id: NodeId, omega: f64) -> Result<()> {
        if self.index.contains_key(&id) {
            return Err(Error::invalid(format!("duplicate node label {id}")));
        }
        self.index.insert(id.clone(), self.nodes.len());
        self.nodes.push(Node { id, omega });
        Ok(())
    }

    pub fn add_edge(&mut self, a: &NodeId, b: &NodeId, j: f64) -> Result<()> {
        if a == b {
            return Err(Error::invalid(format!("self-edge on {a}")));
        }
        if j == 0.0 {
            return Err(Error::invalid(format!("zero coupling on edge {a} -- {b}")));
        }
        if !self.index.contains_key(a) || !self.index.contains_key(b) {
            return Err(Error::invalid(format!("edge {a} -- {b} references a missing node")));
        }
        if self.coupling(a, b).is_some() {
            return Err(Error::invalid(format!("duplicate edge {a} -- {b}")));
        }
        self.edges.push(Edge { a: a.clone(), b: b.clone(), j });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.index.contains_key(id)
    }

    pub fn index_of(&self, id: &NodeId) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::invalid(format!("unknown node {id}")))
    }

    pub fn omega(&self, id: &NodeId) -> Result<f64> {
        Ok(self.nodes[self.index_of(id)?].omega)
    }

    pub fn coupling(&self, a: &NodeId, b: &NodeId) -> Option<f64> {
        self.edges
            .iter()
            .find(|e| (&e.a == a && &e.b == b) || (&e.a == b && &e.b == a))
            .map(|e| e.j)
    }

    pub fn degree(&self, id: &NodeId) -> usize {
        self.edges.iter().filter(|e| &e.a == id || &e.b == id).count()
    }

    /// Connectivity via breadth-first search.
    pub fn is_connected(&self) -> bool {
        if self.nodes.is_empty() {
            return true;
        }
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            let (i, j) = (self.index[&e.a], self.index[&e.b]);
            adj[i].push(j);
            adj[j].push(i);
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Re-checks all construction invariants; builders call this before
    /// returning so a bug cannot hand out an inconsistent graph.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for node in &self.nodes {
            if !seen.insert(&node.id) {
                return Err(Error::invalid(format!("duplicate node label {}", node.id)));
            }
        }
        let mut pairs = HashSet::new();
        for e in &self.edges {
            if e.a == e.b {
                return Err(Error::invalid(format!("self-edge on {}", e.a)));
            }
            if e.j == 0.0 {
                return Err(Error::invalid(format!("zero coupling on edge {} -- {}", e.a, e.b)));
            }
            if !self.contains(&e.a) || !self.contains(&e.b) {
                return Err(Error::invalid(format!("edge {} -- {} references a missing node", e.a, e.b)));
            }
            let key = if e.a <= e.b { (&e.a, &e.b) } else { (&e.b, &e.a) };
            if !pairs.insert(key) {
                return Err(Error::invalid(format!("duplicate edge {} -- {}", e.a, e.b)));
            }
        }
        Ok(())
    }

    /// Copy of the network with every label moved into tree instance `i`.
    pub fn prefixed(&self, i: usize) -> NetworkSpec {
        let mut out = NetworkSpec::new();
        for node in &self.nodes {
            out.add_node(node.id.in_tree(i), node.omega).expect("relabeling preserves uniqueness");
        }
        for e in &self.edges {
            out.add_edge(&e.a.in_tree(i), &e.b.in_tree(i), e.j).expect("relabeling preserves edges");
        }
        out
    }
}

/// Binary tree of order `order`: entry pair (0,0)--(0,1), then levels
/// a = 1..order with nodes (a,1)..(a,2^a); (0,1) couples to (1,1) and (1,2),
/// and each (a,b) couples to (a+1,2b-1) and (a+1,2b). All couplings `j0`,
/// all local fields `omega`. 2^(order+1) nodes in total.
pub fn build_binary_tree(order: u32, j0: f64, omega: f64) -> Result<NetworkSpec> {
    if order < 1 {
        return Err(Error::invalid("tree order must be >= 1"));
    }
    if j0 == 0.0 {
        return Err(Error::invalid("coupling j0 must be nonzero"));
    }
    let mut net = NetworkSpec::new();
    net.add_node(NodeId::tree(0, 0), omega)?;
    net.add_node(NodeId::tree(0, 1), omega)?;
    for a in 1..=order {
        for b in 1..=(1u32 << a) {
            net.add_node(NodeId::tree(a, b), omega)?;
        }
    }
    net.add_edge(&NodeId::tree(0, 0), &NodeId::tree(0, 1), j0)?;
    net.add_edge(&NodeId::tree(0, 1), &NodeId::tree(1, 1), j0)?;
    net.add_edge(&NodeId::tree(0, 1), &NodeId::tree(1, 2), j0)?;
    for a in 1..order {
        for b in 1..=(1u32 << a) {
            net.add_edge(&NodeId::tree(a, b), &NodeId::tree(a + 1, 2 * b - 1), j0)?;
            net.add_edge(&NodeId::tree(a, b), &NodeId::tree(a + 1, 2 * b), j0)?;
        }
    }
    net.validate()?;
    Ok(net)
}

/// Adds the sender auxiliary spin `(0,0)/aux`, coupled only to (0,1). The
/// singlet combination of (0,0) and the auxiliary then decouples from the
/// network while the triplet couples to (0,1) with strength √2·j0.
pub fn attach_sender_aux(net: &NetworkSpec, j0: f64, omega: f64) -> Result<NetworkSpec> {
    if !net.contains(&NodeId::tree(0, 0)) || !net.contains(&NodeId::tree(0, 1)) {
        return Err(Error::invalid("network lacks the entry pair (0,0), (0,1)"));
    }
    let aux = NodeId::tree_aux(0, 0);
    if net.contains(&aux) {
        return Err(Error::invalid("sender auxiliary already present"));
    }
    let mut out = net.clone();
    out.add_node(aux.clone(), omega)?;
    out.add_edge(&aux, &NodeId::tree(0, 1), j0)?;
    out.validate()?;
    Ok(out)
}

/// The 9-node second-order tree with sender auxiliary, used by the basic
/// transfer protocol.
pub fn build_bt2_with_aux(j0: f64, omega: f64) -> Result<NetworkSpec> {
    let net = build_binary_tree(2, j0, omega)?;
    attach_sender_aux(&net, j0, omega)
}

/// Second-order tree adapted for concatenation: sender auxiliary plus one
/// receiver auxiliary per leaf, each coupled to the leaf's parent, with every
/// rightmost coupling scaled by 1/√2 so the leaf triplets see the original
/// strength and the effective 4-chain keeps coupling √2·j0. 13 nodes.
pub fn build_modified_bt2(j0: f64, omega: f64) -> Result<NetworkSpec> {
    if j0 == 0.0 {
        return Err(Error::invalid("coupling j0 must be nonzero"));
    }
    let j_leaf = j0 / std::f64::consts::SQRT_2;
    let mut net = NetworkSpec::new();
    net.add_node(NodeId::tree(0, 0), omega)?;
    net.add_node(NodeId::tree(0, 1), omega)?;
    for b in 1..=2 {
        net.add_node(NodeId::tree(1, b), omega)?;
    }
    for b in 1..=4 {
        net.add_node(NodeId::tree(2, b), omega)?;
        net.add_node(NodeId::tree_aux(2, b), omega)?;
    }
    net.add_node(NodeId::tree_aux(0, 0), omega)?;

    net.add_edge(&NodeId::tree(0, 0), &NodeId::tree(0, 1), j0)?;
    net.add_edge(&NodeId::tree_aux(0, 0), &NodeId::tree(0, 1), j0)?;
    net.add_edge(&NodeId::tree(0, 1), &NodeId::tree(1, 1), j0)?;
    net.add_edge(&NodeId::tree(0, 1), &NodeId::tree(1, 2), j0)?;
    for b in 1..=4u32 {
        let parent = NodeId::tree(1, b.div_ceil(2));
        net.add_edge(&parent, &NodeId::tree(2, b), j_leaf)?;
        net.add_edge(&parent, &NodeId::tree_aux(2, b), j_leaf)?;
    }
    net.validate()?;
    Ok(net)
}

/// Adds a singlet-link spin joining an output port pair to an input port
/// pair: +j to each port site, -j to each auxiliary. In the singlet subspace
/// this is a uniform 3-chain with coupling √2·j (perfect transfer); the port
/// triplets do not couple to the link at all.
#[allow(clippy::too_many_arguments)]
pub fn attach_singlet_link(
    net: &NetworkSpec,
    out_site: &NodeId,
    out_aux: &NodeId,
    in_site: &NodeId,
    in_aux: &NodeId,
    j: f64,
    omega: f64,
    link_label: &str,
) -> Result<NetworkSpec> {
    if j == 0.0 {
        return Err(Error::invalid("link coupling must be nonzero"));
    }
    for site in [out_site, out_aux, in_site, in_aux] {
        if !net.contains(site) {
            return Err(Error::invalid(format!("link endpoint {site} not in network")));
        }
    }
    let link = NodeId::link(link_label);
    if net.contains(&link) {
        return Err(Error::invalid(format!("duplicate link label {link}")));
    }
    let mut out = net.clone();
    out.add_node(link.clone(), omega)?;
    out.add_edge(&link, out_site, j)?;
    out.add_edge(&link, out_aux, -j)?;
    out.add_edge(&link, in_site, j)?;
    out.add_edge(&link, in_aux, -j)?;
    out.validate()?;
    Ok(out)
}

/// Output-port wiring of one tree in a concatenated network: leaf index b
/// (1..4) routed to the index of the receiving tree.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeWiring {
    pub ports: Vec<(u32, usize)>,
}

/// Builds one modified second-order tree per `layout` entry (labels prefixed
/// `T<i>:`) and joins each wired output port to the receiving tree's sender
/// pair through a singlet link of strength √2·j0 (= the effective chain
/// coupling J, matching the tree's internal transfer speed).
pub fn concatenate_trees(layout: &[TreeWiring], j0: f64, omega: f64) -> Result<NetworkSpec> {
    if layout.is_empty() {
        return Err(Error::invalid("concatenation layout is empty"));
    }
    // acyclicity: follow wirings; a repeat visit on the current path is a cycle
    let mut state = vec![0u8; layout.len()]; // 0 unvisited, 1 on path, 2 done
    fn dfs(i: usize, layout: &[TreeWiring], state: &mut [u8]) -> Result<()> {
        if state[i] == 1 {
            return Err(Error::invalid("cyclic tree wiring"));
        }
        if state[i] == 2 {
            return Ok(());
        }
        state[i] = 1;
        for &(_, j) in &layout[i].ports {
            if j >= layout.len() {
                return Err(Error::invalid(format!("wiring targets missing tree {j}")));
            }
            if j == i {
                return Err(Error::invalid("tree wired to itself"));
            }
            dfs(j, layout, state)?;
        }
        state[i] = 2;
        Ok(())
    }
    for i in 0..layout.len() {
        dfs(i, layout, &mut state)?;
    }

    let tree = build_modified_bt2(j0, omega)?;
    let mut net = NetworkSpec::new();
    for i in 0..layout.len() {
        let part = tree.prefixed(i);
        for node in part.nodes() {
            net.add_node(node.id.clone(), node.omega)?;
        }
        for e in part.edges() {
            net.add_edge(&e.a, &e.b, e.j)?;
        }
    }

    let j_link = std::f64::consts::SQRT_2 * j0;
    let mut used_ports = HashSet::new();
    let mut wired_inputs = HashSet::new();
    let mut key = 0usize;
    for (i, wiring) in layout.iter().enumerate() {
        for &(b, target) in &wiring.ports {
            if !(1..=4).contains(&b) {
                return Err(Error::invalid(format!("leaf index {b} out of range 1..4")));
            }
            if !used_ports.insert((i, b)) {
                return Err(Error::invalid(format!("output port (tree {i}, leaf {b}) wired twice")));
            }
            if !wired_inputs.insert(target) {
                return Err(Error::invalid(format!("tree {target} receives two links")));
            }
            net = attach_singlet_link(
                &net,
                &NodeId::tree(2, b).in_tree(i),
                &NodeId::tree_aux(2, b).in_tree(i),
                &NodeId::tree(0, 0).in_tree(target),
                &NodeId::tree_aux(0, 0).in_tree(target),
                j_link,
                omega,
                &key.to_string(),
            )?;
            key += 1;
        }
    }
    net.validate()?;
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    #[test]
    fn label_round_trip() {
        for label in ["(0,0)", "(2,4)/aux", "link:3", "T1:(0,0)", "T12:(2,1)/aux", "T0:link:0"] {
            let id: NodeId = label.parse().unwrap();
            assert_eq!(id.to_string(), label);
        }
    }

    #[test]
    fn label_rejects_noncanonical() {
        for label in ["", "(0)", "(a,b)", "0,0", "(0,0)/", "link:", "(0,0)aux"] {
            assert!(label.parse::<NodeId>().is_err(), "{label:?} should not parse");
        }
    }

    #[test]
    fn prefix_split() {
        let id: NodeId = "T3:(2,1)/aux".parse().unwrap();
        assert_eq!(id.split_prefix(), (Some(3), "(2,1)/aux"));
        let id: NodeId = "link:7".parse().unwrap();
        assert_eq!(id.split_prefix(), (None, "link:7"));
    }

    #[test]
    fn bt2_shape() {
        let net = build_binary_tree(2, 1.0, 0.0).unwrap();
        assert_eq!(net.len(), 8);
        assert_eq!(net.edges().len(), 7);
        for b in 1..=4 {
            assert_eq!(net.degree(&NodeId::tree(2, b)), 1);
        }
        assert_eq!(net.coupling(&NodeId::tree(0, 0), &NodeId::tree(0, 1)), Some(1.0));
        assert!(net.is_connected());
    }

    #[test]
    fn tree_counts_follow_labeling_rule() {
        // entry pair + 2^a nodes per level a = 2^(order+1) nodes, tree => n-1 edges
        for order in 1..=6u32 {
            let net = build_binary_tree(order, 1.0, 0.0).unwrap();
            assert_eq!(net.len() as u32, 1 << (order + 1), "order {order}");
            assert_eq!(net.edges().len(), net.len() - 1);
            assert!(net.is_connected());
            net.validate().unwrap();
        }
    }

    #[test]
    fn tree_order_zero_rejected() {
        assert!(build_binary_tree(0, 1.0, 0.0).is_err());
        assert!(build_binary_tree(2, 0.0, 0.0).is_err());
    }

    #[test]
    fn sender_aux() {
        let bt2 = build_binary_tree(2, 1.0, 0.0).unwrap();
        let net = attach_sender_aux(&bt2, 1.0, 0.0).unwrap();
        assert_eq!(net.len(), 9);
        assert_eq!(net.edges().len(), 8);
        let aux = NodeId::tree_aux(0, 0);
        assert_eq!(net.degree(&aux), 1);
        assert_eq!(net.coupling(&aux, &NodeId::tree(0, 1)), Some(1.0));
        assert_eq!(net.degree(&NodeId::tree(0, 1)), bt2.degree(&NodeId::tree(0, 1)) + 1);
        assert_eq!(net.degree(&NodeId::tree(0, 0)), bt2.degree(&NodeId::tree(0, 0)));
        // idempotence is an error, not a no-op
        assert!(attach_sender_aux(&net, 1.0, 0.0).is_err());
    }

    #[test]
    fn modified_bt2_shape() {
        let net = build_modified_bt2(1.0, 0.0).unwrap();
        assert_eq!(net.len(), 13);
        assert_eq!(net.edges().len(), 12);
        let scaled = net.edges().iter().filter(|e| (e.j - 1.0 / SQRT_2).abs() < 1e-15).count();
        assert_eq!(scaled, 8);
        assert_eq!(
            net.coupling(&NodeId::tree(1, 1), &NodeId::tree_aux(2, 1)),
            Some(1.0 / SQRT_2)
        );
        assert!(net.is_connected());
    }

    #[test]
    fn singlet_link_shape() {
        let base = concatenate_trees(&[TreeWiring::default(), TreeWiring::default()], 1.0, 0.0);
        // unwired layout has two disconnected trees; wire them explicitly
        let base = base.unwrap();
        let linked = attach_singlet_link(
            &base,
            &NodeId::tree(2, 1).in_tree(0),
            &NodeId::tree_aux(2, 1).in_tree(0),
            &NodeId::tree(0, 0).in_tree(1),
            &NodeId::tree_aux(0, 0).in_tree(1),
            SQRT_2,
            0.0,
            "0",
        )
        .unwrap();
        assert_eq!(linked.len(), base.len() + 1);
        assert_eq!(linked.edges().len(), base.edges().len() + 4);
        let link: NodeId = "link:0".parse().unwrap();
        assert_eq!(linked.degree(&link), 4);
        let negatives = linked
            .edges()
            .iter()
            .filter(|e| (e.a == link || e.b == link) && e.j < 0.0)
            .count();
        assert_eq!(negatives, 2);
        assert!(linked.is_connected());
        // zero coupling means no edge
        assert!(attach_singlet_link(
            &base,
            &NodeId::tree(2, 1).in_tree(0),
            &NodeId::tree_aux(2, 1).in_tree(0),
            &NodeId::tree(0, 0).in_tree(1),
            &NodeId::tree_aux(0, 0).in_tree(1),
            0.0,
            0.0,
            "1",
        )
        .is_err());
    }

    #[test]
    fn concatenation_counts() {
        // one root tree fanning out into four leaf trees
        let layout = vec![
            TreeWiring { ports: vec![(1, 1), (2, 2), (3, 3), (4, 4)] },
            TreeWiring::default(),
            TreeWiring::default(),
            TreeWiring::default(),
            TreeWiring::default(),
        ];
        let net = concatenate_trees(&layout, 1.0, 0.0).unwrap();
        assert_eq!(net.len(), 5 * 13 + 4);
        assert!(net.is_connected());
        net.validate().unwrap();
    }

    #[test]
    fn concatenation_rejects_bad_layouts() {
        assert!(concatenate_trees(&[], 1.0, 0.0).is_err());
        // cycle
        let cyclic = vec![
            TreeWiring { ports: vec![(1, 1)] },
            TreeWiring { ports: vec![(1, 0)] },
        ];
        assert!(concatenate_trees(&cyclic, 1.0, 0.0).is_err());
        // port reuse
        let reuse = vec![
            TreeWiring { ports: vec![(1, 1), (1, 2)] },
            TreeWiring::default(),
            TreeWiring::default(),
        ];
        assert!(concatenate_trees(&reuse, 1.0, 0.0).is_err());
    }

    #[test]
    fn two_tree_chain_link_degree() {
        let layout = vec![TreeWiring { ports: vec![(1, 1)] }, TreeWiring::default()];
        let net = concatenate_trees(&layout, 1.0, 0.0).unwrap();
        assert_eq!(net.len(), 2 * 13 + 1);
        assert_eq!(net.degree(&"link:0".parse().unwrap()), 4);
    }

    #[test]
    fn edge_validation() {
        let mut net = NetworkSpec::new();
        net.add_node(NodeId::tree(0, 0), 0.0).unwrap();
        net.add_node(NodeId::tree(0, 1), 0.0).unwrap();
        assert!(net.add_edge(&NodeId::tree(0, 0), &NodeId::tree(0, 0), 1.0).is_err());
        assert!(net.add_edge(&NodeId::tree(0, 0), &NodeId::tree(0, 1), 0.0).is_err());
        assert!(net.add_edge(&NodeId::tree(0, 0), &NodeId::tree(1, 1), 1.0).is_err());
        net.add_edge(&NodeId::tree(0, 0), &NodeId::tree(0, 1), 1.0).unwrap();
        assert!(net.add_edge(&NodeId::tree(0, 1), &NodeId::tree(0, 0), 2.0).is_err());
    }

    #[test]
    fn json_round_trip() {
        let net = build_modified_bt2(0.75, 2.5).unwrap();
        let text = serde_json::to_string(&net).unwrap();
        let back: NetworkSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(net, back);
        // node order survives, so matrix indices are reproducible
        for (a, b) in net.nodes().iter().zip(back.nodes()) {
            assert_eq!(a.id, b.id);
        }
    }
}
