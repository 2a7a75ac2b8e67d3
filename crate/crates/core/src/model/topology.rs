use std::fmt::Write as _;
use std::path::Path;

use super::{parse_bool, parse_field, read_file, ModelError, NodeId};
use crate::state::routing::RoutingTable;

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalNode {
    pub id: NodeId,
    /// Resource capacity `C_i`.
    pub capacity: f64,
    /// Basic energy cost `λ_i` of keeping the node powered for one slot.
    pub energy: f64,
    pub is_function: bool,
}

/// Undirected link; `(a, b)` and `(b, a)` name the same link.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalLink {
    pub a: NodeId,
    pub b: NodeId,
    /// Propagation delay `D_ij` in ms.
    pub delay: f64,
}

/// Physical substrate graph with precomputed shortest paths.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    nodes: Vec<PhysicalNode>,
    links: Vec<PhysicalLink>,
    adjacency: Vec<Vec<(NodeId, f64)>>,
    function_nodes: Vec<NodeId>,
    routes: RoutingTable,
}

impl Topology {
    /// Validates and indexes a topology. Node ids must be exactly `0..n`
    /// (in any order); links are normalised to `a < b` and sorted.
    pub fn new(mut nodes: Vec<PhysicalNode>, links: Vec<PhysicalLink>) -> Result<Self, ModelError> {
        if nodes.is_empty() {
            return Err(ModelError::invalid("topology has no nodes"));
        }
        nodes.sort_by_key(|n| n.id);
        for w in nodes.windows(2) {
            if w[0].id == w[1].id {
                return Err(ModelError::invalid(format!("duplicate node {}", w[0].id)));
            }
        }
        for (idx, node) in nodes.iter().enumerate() {
            if node.id != idx {
                return Err(ModelError::invalid(format!(
                    "node ids must be contiguous from 0; missing node {idx}"
                )));
            }
            if !(node.energy >= 0.0 && node.energy.is_finite()) {
                return Err(ModelError::invalid(format!("node {idx}: negative node_energy")));
            }
            if !node.capacity.is_finite() || node.capacity < 0.0 {
                return Err(ModelError::invalid(format!("node {idx}: invalid capacity")));
            }
            if node.is_function && node.capacity <= 0.0 {
                return Err(ModelError::invalid(format!(
                    "function node {idx} must have positive capacity"
                )));
            }
        }

        let n = nodes.len();
        let mut norm = Vec::with_capacity(links.len());
        for l in links {
            if l.a >= n || l.b >= n {
                return Err(ModelError::invalid(format!(
                    "link ({}, {}) references unknown node",
                    l.a, l.b
                )));
            }
            if l.a == l.b {
                return Err(ModelError::invalid(format!("self-loop on node {}", l.a)));
            }
            if !(l.delay >= 0.0 && l.delay.is_finite()) {
                return Err(ModelError::invalid(format!(
                    "link ({}, {}): prop_delay must be non-negative",
                    l.a, l.b
                )));
            }
            norm.push(PhysicalLink { a: l.a.min(l.b), b: l.a.max(l.b), delay: l.delay });
        }
        norm.sort_by_key(|l| (l.a, l.b));
        for w in norm.windows(2) {
            if (w[0].a, w[0].b) == (w[1].a, w[1].b) {
                return Err(ModelError::invalid(format!("duplicate link ({}, {})", w[0].a, w[0].b)));
            }
        }

        let mut adjacency = vec![Vec::new(); n];
        for l in &norm {
            adjacency[l.a].push((l.b, l.delay));
            adjacency[l.b].push((l.a, l.delay));
        }
        for row in &mut adjacency {
            row.sort_by_key(|e| e.0);
        }
        let routes = RoutingTable::build(&adjacency);
        if !routes.is_connected() {
            return Err(ModelError::invalid("topology is not connected"));
        }
        let function_nodes = nodes.iter().filter(|n| n.is_function).map(|n| n.id).collect::<Vec<_>>();
        if function_nodes.is_empty() {
            return Err(ModelError::invalid("topology has no function nodes"));
        }
        Ok(Self { nodes, links: norm, adjacency, function_nodes, routes })
    }

    /// Re-designates the `k` highest-degree nodes as function nodes (ties go
    /// to the lower id) and clears the flag everywhere else.
    pub fn with_function_nodes_by_degree(&self, k: usize) -> Result<Self, ModelError> {
        if k == 0 || k > self.nodes.len() {
            return Err(ModelError::invalid(format!(
                "cannot select {k} function nodes out of {}",
                self.nodes.len()
            )));
        }
        let mut order: Vec<NodeId> = (0..self.nodes.len()).collect();
        order.sort_by(|&x, &y| self.degree(y).cmp(&self.degree(x)).then(x.cmp(&y)));
        let chosen: std::collections::BTreeSet<NodeId> = order.into_iter().take(k).collect();
        let nodes = self
            .nodes
            .iter()
            .map(|n| PhysicalNode { is_function: chosen.contains(&n.id), ..n.clone() })
            .collect();
        Self::new(nodes, self.links.clone())
    }

    pub fn nodes(&self) -> &[PhysicalNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &PhysicalNode {
        &self.nodes[id]
    }

    pub fn links(&self) -> &[PhysicalLink] {
        &self.links
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn function_nodes(&self) -> &[NodeId] {
        &self.function_nodes
    }

    pub fn is_function_node(&self, id: NodeId) -> bool {
        id < self.nodes.len() && self.nodes[id].is_function
    }

    pub fn degree(&self, id: NodeId) -> usize {
        self.adjacency[id].len()
    }

    pub fn neighbors(&self, id: NodeId) -> &[(NodeId, f64)] {
        &self.adjacency[id]
    }

    pub fn link_delay(&self, i: NodeId, j: NodeId) -> Option<f64> {
        self.adjacency.get(i)?.iter().find(|e| e.0 == j).map(|e| e.1)
    }

    pub fn has_link(&self, i: NodeId, j: NodeId) -> bool {
        self.link_delay(i, j).is_some()
    }

    pub fn routes(&self) -> &RoutingTable {
        &self.routes
    }

    /// Parses the `[nodes]` / `[links]` text format.
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        #[derive(PartialEq)]
        enum Section {
            None,
            Nodes,
            Links,
        }
        let mut section = Section::None;
        let mut nodes = Vec::new();
        let mut links = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            match line {
                "[nodes]" => {
                    section = Section::Nodes;
                    continue;
                }
                "[links]" => {
                    section = Section::Links;
                    continue;
                }
                _ if line.starts_with('[') => {
                    return Err(ModelError::parse(line_no, format!("unknown section {line}")));
                }
                _ => {}
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            match section {
                Section::None => {
                    return Err(ModelError::parse(line_no, "data line before any section"));
                }
                Section::Nodes => {
                    if fields.len() != 4 {
                        return Err(ModelError::parse(
                            line_no,
                            "expected id,capacity,node_energy,is_function",
                        ));
                    }
                    nodes.push(PhysicalNode {
                        id: parse_field(fields[0], line_no, "id")?,
                        capacity: parse_field(fields[1], line_no, "capacity")?,
                        energy: parse_field(fields[2], line_no, "node_energy")?,
                        is_function: parse_bool(fields[3], line_no)?,
                    });
                }
                Section::Links => {
                    if fields.len() != 3 {
                        return Err(ModelError::parse(line_no, "expected i,j,prop_delay"));
                    }
                    links.push(PhysicalLink {
                        a: parse_field(fields[0], line_no, "i")?,
                        b: parse_field(fields[1], line_no, "j")?,
                        delay: parse_field(fields[2], line_no, "prop_delay")?,
                    });
                }
            }
        }
        Self::new(nodes, links)
    }

    /// Canonical text form: nodes by id, links with `i < j` sorted.
    pub fn to_text(&self) -> String {
        let mut out = String::from("[nodes]\n");
        for n in &self.nodes {
            let _ = writeln!(out, "{},{},{},{}", n.id, n.capacity, n.energy, u8::from(n.is_function));
        }
        out.push_str("[links]\n");
        for l in &self.links {
            let _ = writeln!(out, "{},{},{}", l.a, l.b, l.delay);
        }
        out
    }
}

/// Reads and validates a topology file.
pub fn load_topology(path: impl AsRef<Path>) -> Result<Topology, ModelError> {
    let path = path.as_ref();
    let text = read_file(path)?;
    Topology::parse(&text).map_err(|e| e.in_file(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINE3: &str = "# line\n[nodes]\n0,10,1,1\n1,10,1,1\n2,10,1,1\n[links]\n0,1,1\n1,2,1\n";

    #[test]
    fn parses_line_graph() {
        let t = Topology::parse(LINE3).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.links().len(), 2);
        assert_eq!(t.routes().path(0, 2), &[0, 1, 2]);
        assert_eq!(t.routes().delay(0, 2), 2.0);
    }

    #[test]
    fn duplicate_node_rejected() {
        let err = Topology::parse("[nodes]\n0,1,1,1\n0,1,1,1\n[links]\n").unwrap_err();
        assert!(err.to_string().contains("duplicate node"), "{err}");
    }

    #[test]
    fn disconnected_rejected() {
        let err = Topology::parse("[nodes]\n0,1,1,1\n1,1,1,1\n[links]\n").unwrap_err();
        assert!(err.to_string().contains("not connected"), "{err}");
    }

    #[test]
    fn parse_error_has_line_number() {
        let err = Topology::parse("[nodes]\n0,1,1,1\n1,x,1,1\n").unwrap_err();
        assert!(matches!(err, ModelError::Parse { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn reversed_duplicate_link_rejected() {
        let err = Topology::parse("[nodes]\n0,1,1,1\n1,1,1,1\n[links]\n0,1,1\n1,0,2\n").unwrap_err();
        assert!(err.to_string().contains("duplicate link"), "{err}");
    }

    #[test]
    fn degree_selection_breaks_ties_by_id() {
        // star around 2 plus edge 0-1: degrees 0:2, 1:2, 2:3, 3:1
        let t = Topology::parse(
            "[nodes]\n0,5,1,1\n1,5,1,0\n2,5,1,0\n3,5,1,0\n[links]\n0,2,1\n1,2,1\n2,3,1\n0,1,1\n",
        )
        .unwrap();
        let f = t.with_function_nodes_by_degree(2).unwrap();
        assert_eq!(f.function_nodes(), &[0, 2]);
    }
}
