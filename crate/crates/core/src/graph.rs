//! Dart-based trivalent multigraphs.
//!
//! Darts are half-edges. Every vertex carries exactly three darts, ordered by
//! id; the position of a dart in that triple is its local index, which also
//! fixes the marked point of the dart on the component sphere
//! (0 ↦ 0, 1 ↦ 1, 2 ↦ ∞). Loops and parallel edges are allowed.

use std::collections::{BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub type DartId = usize;
pub type VertexId = usize;
pub type EdgeId = usize;

/// Attempts made by [`random_trivalent`] before giving up.
pub const MAX_GENERATION_ATTEMPTS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MarkedPoint {
    Zero,
    One,
    Infinity,
}

impl MarkedPoint {
    pub const ALL: [MarkedPoint; 3] = [MarkedPoint::Zero, MarkedPoint::One, MarkedPoint::Infinity];

    pub fn from_local_index(i: usize) -> Self {
        match i {
            0 => MarkedPoint::Zero,
            1 => MarkedPoint::One,
            2 => MarkedPoint::Infinity,
            _ => panic!("local index {i} out of range"),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Dart {
    pub id: DartId,
    pub vertex: VertexId,
    pub partner: DartId,
    pub local_index: usize,
}

impl Dart {
    pub fn marked_point(&self) -> MarkedPoint {
        MarkedPoint::from_local_index(self.local_index)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrivalentGraph {
    darts: Vec<Dart>,
    vertex_darts: Vec<[DartId; 3]>,
    /// `(source, target)` with `source < target`, sorted by source.
    edges: Vec<(DartId, DartId)>,
    edge_of_dart: Vec<EdgeId>,
}

/// On-disk form: `{"vertices": n, "pairing": [[a,b],...], "dart_vertex": [...]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphJson {
    pub vertices: usize,
    pub pairing: Vec<[DartId; 2]>,
    pub dart_vertex: Vec<VertexId>,
}

impl TrivalentGraph {
    /// Validates and builds a graph from a dart pairing and a dart → vertex map.
    pub fn build(
        vertex_count: usize,
        pairing: &[(DartId, DartId)],
        dart_vertex: &[VertexId],
    ) -> Result<Self> {
        let n_darts = dart_vertex.len();
        if vertex_count < 2 {
            return Err(Error::NotTrivalent(format!(
                "{vertex_count} vertices; genus >= 2 needs at least 2"
            )));
        }
        let mut at_vertex: Vec<Vec<DartId>> = vec![Vec::new(); vertex_count];
        for (d, &v) in dart_vertex.iter().enumerate() {
            if v >= vertex_count {
                return Err(Error::NotTrivalent(format!(
                    "dart {d} assigned to vertex {v} of {vertex_count}"
                )));
            }
            at_vertex[v].push(d);
        }
        if let Some((v, ds)) = at_vertex.iter().enumerate().find(|(_, ds)| ds.len() != 3) {
            return Err(Error::NotTrivalent(format!(
                "vertex {v} has {} darts",
                ds.len()
            )));
        }
        let mut partner = vec![None; n_darts];
        for &(x, y) in pairing {
            if x >= n_darts || y >= n_darts {
                return Err(Error::MalformedPairing(format!(
                    "pair ({x},{y}) refers to a dart outside 0..{n_darts}"
                )));
            }
            if x == y {
                return Err(Error::MalformedPairing(format!("dart {x} paired with itself")));
            }
            if partner[x].is_some() || partner[y].is_some() {
                return Err(Error::MalformedPairing(format!(
                    "pair ({x},{y}) reuses a dart"
                )));
            }
            partner[x] = Some(y);
            partner[y] = Some(x);
        }
        if let Some(d) = partner.iter().position(Option::is_none) {
            return Err(Error::MalformedPairing(format!("dart {d} is unpaired")));
        }

        let mut vertex_darts = Vec::with_capacity(vertex_count);
        let mut local_index = vec![0; n_darts];
        for ds in &at_vertex {
            let mut t = [ds[0], ds[1], ds[2]];
            t.sort_unstable();
            for (i, &d) in t.iter().enumerate() {
                local_index[d] = i;
            }
            vertex_darts.push(t);
        }
        let darts: Vec<Dart> = (0..n_darts)
            .map(|d| Dart {
                id: d,
                vertex: dart_vertex[d],
                partner: partner[d].unwrap_or(d),
                local_index: local_index[d],
            })
            .collect();
        let mut edges: Vec<(DartId, DartId)> = darts
            .iter()
            .filter(|d| d.id < d.partner)
            .map(|d| (d.id, d.partner))
            .collect();
        edges.sort_unstable();
        let mut edge_of_dart = vec![0; n_darts];
        for (e, &(s, t)) in edges.iter().enumerate() {
            edge_of_dart[s] = e;
            edge_of_dart[t] = e;
        }
        let g = TrivalentGraph {
            darts,
            vertex_darts,
            edges,
            edge_of_dart,
        };
        let components = g.component_count();
        if components != 1 {
            return Err(Error::Disconnected { components });
        }
        Ok(g)
    }

    pub fn from_json(j: &GraphJson) -> Result<Self> {
        let pairing: Vec<_> = j.pairing.iter().map(|p| (p[0], p[1])).collect();
        Self::build(j.vertices, &pairing, &j.dart_vertex)
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            vertices: self.vertex_count(),
            pairing: self.edges.iter().map(|&(s, t)| [s, t]).collect(),
            dart_vertex: self.darts.iter().map(|d| d.vertex).collect(),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_darts.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn dart_count(&self) -> usize {
        self.darts.len()
    }

    /// First Betti number `|E| - |V| + 1`.
    pub fn genus(&self) -> usize {
        self.edge_count() + 1 - self.vertex_count()
    }

    /// `|E| = 3g-3` and `|V| = 2g-2`.
    pub fn cardinalities_consistent(&self) -> bool {
        let g = self.genus();
        self.edge_count() == 3 * g - 3 && self.vertex_count() == 2 * g - 2
    }

    pub fn dart(&self, d: DartId) -> &Dart {
        &self.darts[d]
    }

    pub fn darts(&self) -> &[Dart] {
        &self.darts
    }

    pub fn partner(&self, d: DartId) -> DartId {
        self.darts[d].partner
    }

    pub fn vertex_of(&self, d: DartId) -> VertexId {
        self.darts[d].vertex
    }

    pub fn marked_point(&self, d: DartId) -> MarkedPoint {
        self.darts[d].marked_point()
    }

    /// The darts at `v`, indexed by local index (marked points 0, 1, ∞).
    pub fn darts_at(&self, v: VertexId) -> [DartId; 3] {
        self.vertex_darts[v]
    }

    /// Edges as `(source dart, target dart)`, the source being the lower id.
    pub fn edges(&self) -> &[(DartId, DartId)] {
        &self.edges
    }

    pub fn edge_of(&self, d: DartId) -> EdgeId {
        self.edge_of_dart[d]
    }

    pub fn source_dart(&self, e: EdgeId) -> DartId {
        self.edges[e].0
    }

    pub fn target_dart(&self, e: EdgeId) -> DartId {
        self.edges[e].1
    }

    /// Endpoint vertices `(v_s, v_t)` of the edge in its canonical orientation.
    pub fn endpoints(&self, e: EdgeId) -> (VertexId, VertexId) {
        let (s, t) = self.edges[e];
        (self.vertex_of(s), self.vertex_of(t))
    }

    pub fn is_loop(&self, e: EdgeId) -> bool {
        let (s, t) = self.endpoints(e);
        s == t
    }

    fn component_count(&self) -> usize {
        let n = self.vertex_count();
        let mut seen = vec![false; n];
        let mut components = 0;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                for d in self.darts_at(v) {
                    let w = self.vertex_of(self.partner(d));
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        components
    }

    /// Breadth-first relabeling from the vertex of dart 0, darts visited in
    /// id order; returns the relabeled sorted pairing.
    pub fn canonical_pairing(&self) -> Vec<[DartId; 2]> {
        let n = self.vertex_count();
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        let mut queue = VecDeque::new();
        let root = self.vertex_of(0);
        label[root] = next;
        next += 1;
        queue.push_back(root);
        while let Some(v) = queue.pop_front() {
            for d in self.darts_at(v) {
                let w = self.vertex_of(self.partner(d));
                if label[w] == usize::MAX {
                    label[w] = next;
                    next += 1;
                    queue.push_back(w);
                }
            }
        }
        let relabel = |d: DartId| 3 * label[self.vertex_of(d)] + self.dart(d).local_index;
        let mut pairs: Vec<[DartId; 2]> = self
            .edges
            .iter()
            .map(|&(s, t)| {
                let (x, y) = (relabel(s), relabel(t));
                [x.min(y), x.max(y)]
            })
            .collect();
        pairs.sort_unstable();
        pairs
    }

    /// Hex SHA-256 of the canonical pairing; fixture and persistence key.
    pub fn canonical_hash(&self) -> String {
        let pairs = self.canonical_pairing();
        let text = serde_json::to_string(&pairs).unwrap_or_default();
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

/// Canonical fixture names.
pub const CATALOG: [&str; 5] = ["theta", "dumbbell", "k4", "k33", "prism"];

/// Builds a graph whose darts are numbered `3v + i` at vertex `v`.
fn standard(vertex_count: usize, pairing: &[(DartId, DartId)]) -> Result<TrivalentGraph> {
    let dart_vertex: Vec<_> = (0..3 * vertex_count).map(|d| d / 3).collect();
    TrivalentGraph::build(vertex_count, pairing, &dart_vertex)
}

/// Fixture graphs. Darts at vertex `v` are `3v, 3v+1, 3v+2`.
///
/// * `theta`: two vertices joined by three parallel edges.
/// * `dumbbell`: a loop at each vertex plus a bridge.
/// * `k4`: complete graph on four vertices.
/// * `k33`: complete bipartite graph on 3 + 3 vertices.
/// * `prism`: two triangles 0-1-2 and 3-4-5 joined by rungs i — i+3.
pub fn catalog_graph(name: &str) -> Result<TrivalentGraph> {
    match name {
        "theta" => standard(2, &[(0, 3), (1, 4), (2, 5)]),
        "dumbbell" => standard(2, &[(0, 1), (3, 4), (2, 5)]),
        "k4" => standard(4, &[(0, 3), (1, 6), (2, 9), (4, 7), (5, 10), (8, 11)]),
        "k33" => {
            let pairs: Vec<_> = (0..3)
                .flat_map(|i| (0..3).map(move |j| (3 * i + j, 3 * (3 + j) + i)))
                .collect();
            standard(6, &pairs)
        }
        "prism" => standard(
            6,
            &[
                (0, 3),
                (1, 6),
                (2, 11),
                (4, 7),
                (5, 14),
                (8, 17),
                (9, 12),
                (10, 15),
                (13, 16),
            ],
        ),
        other => Err(Error::UnknownName(other.to_string())),
    }
}

/// Uniformly random perfect matching on the `3n` darts, resampled until
/// connected. Deterministic per seed.
pub fn random_trivalent(vertex_count: usize, seed: u64) -> Result<TrivalentGraph> {
    if vertex_count < 2 || vertex_count % 2 != 0 {
        return Err(Error::InvalidInput(format!(
            "vertex count must be even and >= 2, got {vertex_count}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut darts: Vec<DartId> = (0..3 * vertex_count).collect();
    let dart_vertex: Vec<_> = (0..3 * vertex_count).map(|d| d / 3).collect();
    let mut last = None;
    for _ in 0..MAX_GENERATION_ATTEMPTS {
        darts.shuffle(&mut rng);
        let pairing: Vec<_> = darts.chunks(2).map(|p| (p[0], p[1])).collect();
        match TrivalentGraph::build(vertex_count, &pairing, &dart_vertex) {
            Ok(g) => return Ok(g),
            Err(e @ Error::Disconnected { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(Error::GenerationFailed {
        attempts: MAX_GENERATION_ATTEMPTS,
        reason: last.map(|e| e.to_string()).unwrap_or_default(),
    })
}

/// A breadth-first spanning tree; cotree edges give free generators of the
/// fundamental group of the graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpanningTreeData {
    pub root: VertexId,
    /// Both darts of every tree edge.
    pub tree_darts: BTreeSet<DartId>,
    /// For each non-root vertex, the dart at its parent leading to it.
    pub parent_dart: Vec<Option<DartId>>,
    /// Vertices in discovery order, root first.
    pub order: Vec<VertexId>,
    pub tree_edges: Vec<EdgeId>,
    /// In increasing edge order; length = genus.
    pub cotree_edges: Vec<EdgeId>,
}

/// Lowest-dart-id breadth-first tree rooted at the vertex of dart 0.
pub fn spanning_tree(g: &TrivalentGraph) -> SpanningTreeData {
    let n = g.vertex_count();
    let root = g.vertex_of(0);
    let mut visited = vec![false; n];
    let mut parent_dart = vec![None; n];
    let mut order = vec![root];
    let mut tree_darts = BTreeSet::new();
    let mut tree_edges = Vec::new();
    visited[root] = true;
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        for d in g.darts_at(v) {
            let w = g.vertex_of(g.partner(d));
            if !visited[w] {
                visited[w] = true;
                parent_dart[w] = Some(d);
                tree_darts.insert(d);
                tree_darts.insert(g.partner(d));
                tree_edges.push(g.edge_of(d));
                order.push(w);
                queue.push_back(w);
            }
        }
    }
    tree_edges.sort_unstable();
    let cotree_edges = (0..g.edge_count())
        .filter(|e| tree_edges.binary_search(e).is_err())
        .collect();
    SpanningTreeData {
        root,
        tree_darts,
        parent_dart,
        order,
        tree_edges,
        cotree_edges,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn build_examples() {
        let theta = TrivalentGraph::build(2, &[(0, 3), (1, 4), (2, 5)], &[0, 0, 0, 1, 1, 1]).unwrap();
        assert_eq!((theta.edge_count(), theta.genus()), (3, 2));
        let dumbbell =
            TrivalentGraph::build(2, &[(0, 1), (3, 4), (2, 5)], &[0, 0, 0, 1, 1, 1]).unwrap();
        assert_eq!(dumbbell.genus(), 2);
        assert_eq!((0..3).filter(|&e| dumbbell.is_loop(e)).count(), 2);
        assert_eq!(catalog_graph("k4").unwrap().genus(), 3);
    }

    #[test]
    fn genus_of_catalog() {
        let genera: Vec<_> = CATALOG
            .iter()
            .map(|n| catalog_graph(n).unwrap().genus())
            .collect();
        assert_eq!(genera, vec![2, 2, 3, 4, 4]);
        let prism = catalog_graph("prism").unwrap();
        assert_eq!((prism.vertex_count(), prism.edge_count()), (6, 9));
        for n in CATALOG {
            assert!(catalog_graph(n).unwrap().cardinalities_consistent());
        }
    }

    #[test]
    fn catalog_shapes() {
        let theta = catalog_graph("theta").unwrap();
        assert!((0..3).all(|e| theta.endpoints(e) == (0, 1)));
        let dumbbell = catalog_graph("dumbbell").unwrap();
        assert_eq!(dumbbell.endpoints(0), (0, 0));
        assert_eq!(dumbbell.endpoints(1), (0, 1));
        assert_eq!(dumbbell.endpoints(2), (1, 1));
        let k33 = catalog_graph("k33").unwrap();
        for e in 0..9 {
            let (s, t) = k33.endpoints(e);
            assert!(s < 3 && t >= 3);
        }
        assert!(matches!(catalog_graph("petersen"), Err(Error::UnknownName(_))));
    }

    #[test]
    fn build_errors() {
        let dv = [0, 0, 0, 1, 1, 1];
        assert!(matches!(
            TrivalentGraph::build(2, &[(0, 3), (1, 4)], &dv),
            Err(Error::MalformedPairing(_))
        ));
        assert!(matches!(
            TrivalentGraph::build(2, &[(0, 0), (1, 4), (2, 5)], &dv),
            Err(Error::MalformedPairing(_))
        ));
        assert!(matches!(
            TrivalentGraph::build(2, &[(0, 3), (1, 3), (2, 5)], &dv),
            Err(Error::MalformedPairing(_))
        ));
        assert!(matches!(
            TrivalentGraph::build(2, &[(0, 3), (1, 4), (2, 5)], &[0, 0, 1, 1, 1, 1]),
            Err(Error::NotTrivalent(_))
        ));
        // two disjoint thetas
        let dv: Vec<_> = (0..12).map(|d| d / 3).collect();
        assert!(matches!(
            TrivalentGraph::build(4, &[(0, 3), (1, 4), (2, 5), (6, 9), (7, 10), (8, 11)], &dv),
            Err(Error::Disconnected { components: 2 })
        ));
    }

    #[test]
    fn marked_points_follow_local_index() {
        let g = TrivalentGraph::build(2, &[(5, 0), (4, 1), (3, 2)], &[1, 0, 1, 0, 1, 0]).unwrap();
        // vertex 0 has darts 1,3,5; vertex 1 has 0,2,4
        assert_eq!(g.darts_at(0), [1, 3, 5]);
        assert_eq!(g.marked_point(5), MarkedPoint::Infinity);
        assert_eq!(g.marked_point(2), MarkedPoint::One);
        for v in 0..2 {
            let mps: BTreeSet<_> = g.darts_at(v).iter().map(|&d| g.marked_point(d)).collect();
            assert_eq!(mps.len(), 3);
        }
    }

    #[test]
    fn spanning_tree_examples() {
        let t = spanning_tree(&catalog_graph("theta").unwrap());
        assert_eq!((t.tree_edges.len(), t.cotree_edges.len()), (1, 2));
        assert_eq!(t.tree_edges, vec![0]);
        let t = spanning_tree(&catalog_graph("dumbbell").unwrap());
        assert_eq!(t.tree_edges, vec![1]);
        assert_eq!(t.cotree_edges, vec![0, 2]);
        let t = spanning_tree(&catalog_graph("k4").unwrap());
        assert_eq!((t.tree_edges.len(), t.cotree_edges.len()), (3, 3));
    }

    #[test]
    fn random_small_cases() {
        let g = random_trivalent(2, 1).unwrap();
        let loops = (0..3).filter(|&e| g.is_loop(e)).count();
        assert!(loops == 0 || loops == 2, "theta or dumbbell");
        for seed in 0..20 {
            assert_eq!(random_trivalent(4, seed).unwrap().genus(), 3);
        }
        let g = random_trivalent(10, 7).unwrap();
        assert_eq!(g.genus(), 6);
        assert!(g.cardinalities_consistent());
        assert!(random_trivalent(3, 0).is_err());
    }

    #[test]
    fn random_is_deterministic() {
        assert_eq!(random_trivalent(8, 42).unwrap(), random_trivalent(8, 42).unwrap());
    }

    #[test]
    fn json_roundtrip_and_hash() {
        let g = catalog_graph("prism").unwrap();
        let j = serde_json::to_string(&g.to_json()).unwrap();
        let back = TrivalentGraph::from_json(&serde_json::from_str(&j).unwrap()).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.canonical_hash(), g.canonical_hash());
        assert_ne!(
            catalog_graph("theta").unwrap().canonical_hash(),
            catalog_graph("dumbbell").unwrap().canonical_hash()
        );
    }
}
