//! Metric graphs: vertices, edges with lengths, and the directed bonds derived
//! from them.
//!
//! Edge `i` produces bond `2i` (tail to head) and bond `2i + 1` (head to tail).
//! Every matrix indexed by bonds in this crate uses that ordering. At a vertex
//! the local coordinates of `F(v)` and `F'(v)` follow [`MetricGraph::incident_bonds`],
//! i.e. the bonds that *start* at the vertex, sorted by bond index.

use std::collections::{HashMap, HashSet};
use std::fmt;

use crate::error::{Error, Result};

/// A directed edge. `Bond(2i)` runs tail to head along edge `i`, `Bond(2i + 1)`
/// runs back.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bond(pub usize);

impl Bond {
    pub fn forward(edge: usize) -> Self {
        Bond(2 * edge)
    }

    pub fn backward(edge: usize) -> Self {
        Bond(2 * edge + 1)
    }

    pub fn index(self) -> usize {
        self.0
    }

    pub fn edge(self) -> usize {
        self.0 / 2
    }

    /// True for the tail-to-head bond of its edge.
    pub fn is_forward(self) -> bool {
        self.0.is_multiple_of(2)
    }

    pub fn reversed(self) -> Self {
        Bond(self.0 ^ 1)
    }
}

impl fmt::Display for Bond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "b{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: String,
    pub tail: usize,
    pub head: usize,
    pub length: f64,
}

impl Edge {
    pub fn is_loop(&self) -> bool {
        self.tail == self.head
    }
}

/// Unvalidated edge record as it comes out of a graph description.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSpec {
    pub id: String,
    pub tail: String,
    pub head: String,
    pub length: f64,
}

/// Unvalidated graph description: declared vertex ids and edge records.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GraphSpec {
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeSpec>,
}

impl GraphSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn vertex(mut self, id: &str) -> Self {
        self.vertices.push(id.to_string());
        self
    }

    pub fn edge(mut self, id: &str, tail: &str, head: &str, length: f64) -> Self {
        self.edges.push(EdgeSpec {
            id: id.to_string(),
            tail: tail.to_string(),
            head: head.to_string(),
            length,
        });
        self
    }
}

/// A validated compact metric graph. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricGraph {
    vertex_ids: Vec<String>,
    edges: Vec<Edge>,
    outgoing: Vec<Vec<Bond>>,
}

/// How bonds of a graph map to bonds of a subdivided graph.
///
/// `bond_map[b]` is the bond of the new graph that starts at the same vertex,
/// in the same direction, as bond `b` of the old graph. Vertices keep their
/// indices; `new_vertices` lists the degree-2 vertices that were added.
#[derive(Debug, Clone, PartialEq)]
pub struct Subdivision {
    pub bond_map: Vec<Bond>,
    pub new_vertices: Vec<usize>,
}

impl Subdivision {
    fn identity(bonds: usize) -> Self {
        Subdivision {
            bond_map: (0..bonds).map(Bond).collect(),
            new_vertices: Vec::new(),
        }
    }

    /// `self` followed by `next`.
    fn then(&self, next: &Subdivision) -> Subdivision {
        let mut new_vertices = self.new_vertices.clone();
        new_vertices.extend(next.new_vertices.iter().copied());
        Subdivision {
            bond_map: self.bond_map.iter().map(|b| next.bond_map[b.0]).collect(),
            new_vertices,
        }
    }
}

pub fn build_graph(spec: &GraphSpec) -> Result<MetricGraph> {
    if spec.vertices.is_empty() || spec.edges.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let mut index = HashMap::new();
    for (i, id) in spec.vertices.iter().enumerate() {
        if index.insert(id.as_str(), i).is_some() {
            return Err(Error::DuplicateId { kind: "vertex", id: id.clone() });
        }
    }
    let mut seen_edges = HashSet::new();
    let mut edges = Vec::with_capacity(spec.edges.len());
    for e in &spec.edges {
        if !seen_edges.insert(e.id.as_str()) {
            return Err(Error::DuplicateId { kind: "edge", id: e.id.clone() });
        }
        let lookup = |name: &str| {
            index.get(name).copied().ok_or_else(|| Error::UnknownEndpoint {
                edge: e.id.clone(),
                vertex: name.to_string(),
            })
        };
        let tail = lookup(&e.tail)?;
        let head = lookup(&e.head)?;
        if !(e.length.is_finite() && e.length > 0.0) {
            return Err(Error::InvalidLength { edge: e.id.clone(), length: e.length });
        }
        edges.push(Edge { id: e.id.clone(), tail, head, length: e.length });
    }
    MetricGraph::from_parts(spec.vertices.clone(), edges)
}

impl MetricGraph {
    fn from_parts(vertex_ids: Vec<String>, edges: Vec<Edge>) -> Result<Self> {
        let mut outgoing = vec![Vec::new(); vertex_ids.len()];
        for (i, e) in edges.iter().enumerate() {
            outgoing[e.tail].push(Bond::forward(i));
            outgoing[e.head].push(Bond::backward(i));
        }
        for (v, bonds) in outgoing.iter_mut().enumerate() {
            if bonds.is_empty() {
                return Err(Error::IsolatedVertex(vertex_ids[v].clone()));
            }
            bonds.sort();
        }
        Ok(MetricGraph { vertex_ids, edges, outgoing })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn bond_count(&self) -> usize {
        2 * self.edges.len()
    }

    pub fn vertex_ids(&self) -> &[String] {
        &self.vertex_ids
    }

    pub fn vertex_id(&self, v: usize) -> &str {
        &self.vertex_ids[v]
    }

    pub fn vertex_index(&self, id: &str) -> Option<usize> {
        self.vertex_ids.iter().position(|x| x == id)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, i: usize) -> &Edge {
        &self.edges[i]
    }

    pub fn bonds(&self) -> impl Iterator<Item = Bond> {
        (0..self.bond_count()).map(Bond)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.outgoing[v].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.outgoing.iter().map(Vec::len).collect()
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().into_iter().max().unwrap_or(0)
    }

    /// Bonds starting at `v`, ascending. A loop at `v` contributes both of
    /// its bonds.
    pub fn incident_bonds(&self, v: usize) -> Result<&[Bond]> {
        self.outgoing.get(v).map(Vec::as_slice).ok_or(Error::UnknownVertex(v))
    }

    pub fn bond_start(&self, b: Bond) -> usize {
        let e = &self.edges[b.edge()];
        if b.is_forward() {
            e.tail
        } else {
            e.head
        }
    }

    pub fn bond_end(&self, b: Bond) -> usize {
        self.bond_start(b.reversed())
    }

    pub fn bond_length(&self, b: Bond) -> f64 {
        self.edges[b.edge()].length
    }

    /// Position of `b` in the local coordinate ordering of its start vertex.
    pub fn local_position(&self, b: Bond) -> usize {
        let v = self.bond_start(b);
        self.outgoing[v].binary_search(&b).expect("bond starts at its own start vertex")
    }

    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }

    pub fn min_edge_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).fold(f64::INFINITY, f64::min)
    }

    pub fn has_loops(&self) -> bool {
        self.edges.iter().any(Edge::is_loop)
    }

    /// Component count and a labeling where each vertex carries the smallest
    /// vertex index of its component.
    pub fn connected_components(&self) -> (usize, Vec<usize>) {
        let n = self.vertex_count();
        let mut label = vec![usize::MAX; n];
        let mut count = 0;
        for root in 0..n {
            if label[root] != usize::MAX {
                continue;
            }
            count += 1;
            label[root] = root;
            let mut stack = vec![root];
            while let Some(v) = stack.pop() {
                for &b in &self.outgoing[v] {
                    let w = self.bond_end(b);
                    if label[w] == usize::MAX {
                        label[w] = root;
                        stack.push(w);
                    }
                }
            }
        }
        (count, label)
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count() as i64 - self.edge_count() as i64
    }

    /// V x E incidence matrix: 2 where the edge loops at the vertex, 1 where
    /// it is otherwise incident, 0 elsewhere.
    pub fn incidence_matrix(&self) -> Vec<Vec<u8>> {
        let mut m = vec![vec![0u8; self.edge_count()]; self.vertex_count()];
        for (i, e) in self.edges.iter().enumerate() {
            m[e.tail][i] += 1;
            m[e.head][i] += 1;
        }
        m
    }

    fn fresh_id(taken: impl Fn(&str) -> bool, base: &str) -> String {
        let mut n = 1;
        loop {
            let candidate = format!("{base}~{n}");
            if !taken(&candidate) {
                return candidate;
            }
            n += 1;
        }
    }

    /// Splits `edge` at distance `position` from its tail by a new degree-2
    /// vertex. Edge `edge` keeps its index and now runs tail -> new vertex;
    /// the remainder is appended as a new last edge running new vertex -> head.
    /// The caller assigns conditions to the new vertex (normally Kirchhoff).
    pub fn insert_degree2_vertex(&self, edge: usize, position: f64) -> Result<(MetricGraph, Subdivision)> {
        let old = self.edges.get(edge).ok_or(Error::UnknownEdge(edge))?;
        if !(position > 0.0 && position < old.length) {
            return Err(Error::SplitOutOfRange { position, length: old.length });
        }
        let new_vertex = self.vertex_count();
        let mut vertex_ids = self.vertex_ids.clone();
        let vid = Self::fresh_id(|s| vertex_ids.iter().any(|x| x == s), &old.id);
        vertex_ids.push(vid);

        let mut edges = self.edges.clone();
        let eid = Self::fresh_id(|s| edges.iter().any(|e| e.id == s), &old.id);
        let new_edge = edges.len();
        edges.push(Edge { id: eid, tail: new_vertex, head: old.head, length: old.length - position });
        edges[edge].head = new_vertex;
        edges[edge].length = position;

        let mut bond_map: Vec<Bond> = (0..self.bond_count()).map(Bond).collect();
        bond_map[Bond::backward(edge).0] = Bond::backward(new_edge);
        let graph = MetricGraph::from_parts(vertex_ids, edges)?;
        Ok((graph, Subdivision { bond_map, new_vertices: vec![new_vertex] }))
    }

    /// Splits every loop at its midpoint, in edge order, until none remain.
    pub fn normalize_loops(&self) -> (MetricGraph, Subdivision) {
        let mut graph = self.clone();
        let mut map = Subdivision::identity(self.bond_count());
        for i in 0..self.edge_count() {
            if graph.edges[i].is_loop() {
                let half = graph.edges[i].length / 2.0;
                let (g, step) = graph.insert_degree2_vertex(i, half).expect("midpoint is interior");
                map = map.then(&step);
                graph = g;
            }
        }
        (graph, map)
    }
}
