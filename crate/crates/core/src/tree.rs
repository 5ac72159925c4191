//! Unrooted leaf-labelled trees with positive edge weights.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub type VertexId = usize;
pub type EdgeId = usize;

#[derive(Clone, Debug, PartialEq)]
pub struct Edge<S> {
    pub a: VertexId,
    pub b: VertexId,
    pub weight: S,
}

/// A bipartition of the leaf labels induced by one edge.
///
/// `side_a` always holds the lexicographically smallest label; both sides
/// are sorted.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Split {
    pub side_a: Vec<String>,
    pub side_b: Vec<String>,
}

impl Split {
    pub fn is_trivial(&self) -> bool {
        self.side_a.len() == 1 || self.side_b.len() == 1
    }

    pub fn new<I, J>(a: I, b: J) -> Self
    where
        I: IntoIterator,
        I::Item: Into<String>,
        J: IntoIterator,
        J::Item: Into<String>,
    {
        let mut a: Vec<String> = a.into_iter().map(Into::into).collect();
        let mut b: Vec<String> = b.into_iter().map(Into::into).collect();
        a.sort();
        b.sort();
        if b.first() < a.first() {
            std::mem::swap(&mut a, &mut b);
        }
        Split {
            side_a: a,
            side_b: b,
        }
    }
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{{}}}|{{{}}}", self.side_a.join(","), self.side_b.join(","))
    }
}

/// Unrooted tree, no degree-2 vertices, every leaf labelled.
///
/// Leaves are addressed by their index in the sorted label list; this is the
/// canonical label order used by m-maps.
#[derive(Clone, Debug)]
pub struct WeightedTree<S> {
    adjacency: Vec<Vec<(VertexId, EdgeId)>>,
    edges: Vec<Edge<S>>,
    labels: Vec<String>,
    leaf_vertex: Vec<VertexId>,
    vertex_leaf: Vec<Option<usize>>,
    // traversal rooted at the internal neighbour of leaf 0
    root: VertexId,
    preorder: Vec<VertexId>,
    parent: Vec<Option<(VertexId, EdgeId)>>,
}

impl<S: Scalar> WeightedTree<S> {
    /// Validates and builds a tree from raw parts.
    pub fn new(
        vertex_count: usize,
        edges: Vec<Edge<S>>,
        leaf_labels: Vec<(VertexId, String)>,
    ) -> Result<Self> {
        if edges.len() + 1 != vertex_count {
            return Err(Error::InvalidTree(format!(
                "{} vertices need {} edges, got {}",
                vertex_count,
                vertex_count.saturating_sub(1),
                edges.len()
            )));
        }
        let mut adjacency = vec![Vec::new(); vertex_count];
        for (id, e) in edges.iter().enumerate() {
            if e.a >= vertex_count || e.b >= vertex_count || e.a == e.b {
                return Err(Error::InvalidTree(format!("bad edge {}-{}", e.a, e.b)));
            }
            if e.weight <= S::zero() {
                return Err(Error::InvalidTree(format!(
                    "edge {}-{} has non-positive weight {}",
                    e.a,
                    e.b,
                    e.weight.format_literal()
                )));
            }
            adjacency[e.a].push((e.b, id));
            adjacency[e.b].push((e.a, id));
        }
        let mut vertex_leaf_label: Vec<Option<String>> = vec![None; vertex_count];
        let mut seen = HashMap::new();
        for (v, label) in leaf_labels {
            if v >= vertex_count {
                return Err(Error::InvalidTree(format!("label on missing vertex {v}")));
            }
            if label.is_empty() {
                return Err(Error::InvalidTree("empty leaf label".into()));
            }
            if seen.insert(label.clone(), v).is_some() {
                return Err(Error::DuplicateLabel(label));
            }
            if vertex_leaf_label[v].replace(label).is_some() {
                return Err(Error::InvalidTree(format!("vertex {v} labelled twice")));
            }
        }
        for (v, nbrs) in adjacency.iter().enumerate() {
            match (nbrs.len(), &vertex_leaf_label[v]) {
                (2, _) => {
                    return Err(Error::InvalidTree(format!("vertex {v} has degree 2")));
                }
                (1, None) => {
                    return Err(Error::InvalidTree(format!("leaf vertex {v} has no label")));
                }
                (0, _) => {
                    return Err(Error::InvalidTree(format!("vertex {v} is isolated")));
                }
                (d, Some(l)) if d != 1 => {
                    return Err(Error::InvalidTree(format!(
                        "internal vertex {v} carries label `{l}`"
                    )));
                }
                _ => {}
            }
        }
        let mut labelled: Vec<(String, VertexId)> = vertex_leaf_label
            .iter()
            .enumerate()
            .filter_map(|(v, l)| l.clone().map(|l| (l, v)))
            .collect();
        if labelled.len() < 3 {
            return Err(Error::InvalidTree(format!(
                "need at least 3 leaves, got {}",
                labelled.len()
            )));
        }
        labelled.sort();
        let labels: Vec<String> = labelled.iter().map(|(l, _)| l.clone()).collect();
        let leaf_vertex: Vec<VertexId> = labelled.iter().map(|&(_, v)| v).collect();
        let mut vertex_leaf = vec![None; vertex_count];
        for (i, &v) in leaf_vertex.iter().enumerate() {
            vertex_leaf[v] = Some(i);
        }

        let root = adjacency[leaf_vertex[0]][0].0;
        let mut parent = vec![None; vertex_count];
        let mut preorder = Vec::with_capacity(vertex_count);
        let mut visited = vec![false; vertex_count];
        let mut stack = vec![root];
        visited[root] = true;
        while let Some(v) = stack.pop() {
            preorder.push(v);
            for &(w, e) in &adjacency[v] {
                if !visited[w] {
                    visited[w] = true;
                    parent[w] = Some((v, e));
                    stack.push(w);
                }
            }
        }
        if preorder.len() != vertex_count {
            return Err(Error::InvalidTree("graph is not connected".into()));
        }
        Ok(WeightedTree {
            adjacency,
            edges,
            labels,
            leaf_vertex,
            vertex_leaf,
            root,
            preorder,
            parent,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn leaf_count(&self) -> usize {
        self.labels.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edges(&self) -> &[Edge<S>] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> &Edge<S> {
        &self.edges[e]
    }

    pub fn neighbors(&self, v: VertexId) -> &[(VertexId, EdgeId)] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adjacency[v].len()
    }

    pub fn is_leaf(&self, v: VertexId) -> bool {
        self.vertex_leaf[v].is_some()
    }

    /// Canonical leaf index of a leaf vertex.
    pub fn leaf_of_vertex(&self, v: VertexId) -> Option<usize> {
        self.vertex_leaf[v]
    }

    pub fn leaf_vertex(&self, leaf: usize) -> VertexId {
        self.leaf_vertex[leaf]
    }

    pub fn leaf_index(&self, label: &str) -> Option<usize> {
        self.labels.binary_search_by(|l| l.as_str().cmp(label)).ok()
    }

    /// The internal vertex adjacent to the smallest label.
    pub fn root(&self) -> VertexId {
        self.root
    }

    pub fn is_internal_edge(&self, e: EdgeId) -> bool {
        let edge = &self.edges[e];
        !self.is_leaf(edge.a) && !self.is_leaf(edge.b)
    }

    /// Edge joining a leaf to the rest of the tree.
    pub fn leaf_edge(&self, leaf: usize) -> EdgeId {
        self.adjacency[self.leaf_vertex[leaf]][0].1
    }

    pub fn total_weight(&self) -> S {
        self.edges.iter().map(|e| e.weight.clone()).sum()
    }

    pub fn min_weight(&self) -> S {
        self.edges
            .iter()
            .map(|e| e.weight.clone())
            .reduce(|a, b| if b < a { b } else { a })
            .expect("a tree with three leaves has edges")
    }

    /// Resolves labels to sorted, de-duplicated leaf indices.
    pub fn leaf_indices<L: AsRef<str>>(&self, labels: &[L]) -> Result<Vec<usize>> {
        let mut idx = labels
            .iter()
            .map(|l| {
                self.leaf_index(l.as_ref())
                    .ok_or_else(|| Error::UnknownLabel(l.as_ref().to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        idx.sort_unstable();
        idx.dedup();
        Ok(idx)
    }

    /// Edges of the smallest subtree spanning the given leaves.
    ///
    /// An edge belongs to `[V]` exactly when both sides of it contain a
    /// member of `V`; with the tree rooted, that is `0 < below < |V|`.
    pub fn steiner_edges(&self, leaves: &[usize]) -> Vec<EdgeId> {
        let mut below = vec![0usize; self.vertex_count()];
        for &l in leaves {
            below[self.leaf_vertex[l]] += 1;
        }
        let total = leaves.len();
        let mut out = Vec::new();
        for &v in self.preorder.iter().rev() {
            if let Some((p, e)) = self.parent[v] {
                let c = below[v];
                if c > 0 && c < total {
                    out.push(e);
                }
                below[p] += c;
            }
        }
        out.sort_unstable();
        out
    }

    /// `w([V])` for leaf indices.
    pub fn subtree_weight_idx(&self, leaves: &[usize]) -> S {
        self.steiner_edges(leaves)
            .into_iter()
            .map(|e| self.edges[e].weight.clone())
            .sum()
    }

    /// `w([V])` for a non-empty set of labels.
    pub fn subtree_weight<L: AsRef<str>>(&self, labels: &[L]) -> Result<S> {
        if labels.is_empty() {
            return Err(Error::InvalidArgument("leaf set must be non-empty".into()));
        }
        let idx = self.leaf_indices(labels)?;
        Ok(self.subtree_weight_idx(&idx))
    }

    /// Path length between two leaves, found by walking the tree.
    pub fn distance(&self, a: usize, b: usize) -> S {
        let start = self.leaf_vertex[a];
        let goal = self.leaf_vertex[b];
        let mut dist: Vec<Option<S>> = vec![None; self.vertex_count()];
        dist[start] = Some(S::zero());
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            if v == goal {
                break;
            }
            let dv = dist[v].clone().expect("visited");
            for &(w, e) in &self.adjacency[v] {
                if dist[w].is_none() {
                    dist[w] = Some(dv.clone() + self.edges[e].weight.clone());
                    stack.push(w);
                }
            }
        }
        dist[goal].clone().expect("trees are connected")
    }

    /// Leaf indices on the far side of `e` from the traversal root.
    pub fn leaves_below(&self, e: EdgeId) -> Vec<usize> {
        let edge = &self.edges[e];
        let child = match self.parent[edge.a] {
            Some((_, pe)) if pe == e => edge.a,
            _ => edge.b,
        };
        let mut out = Vec::new();
        let mut stack = vec![(child, e)];
        while let Some((v, from)) = stack.pop() {
            if let Some(l) = self.vertex_leaf[v] {
                out.push(l);
            }
            for &(w, f) in &self.adjacency[v] {
                if f != from {
                    stack.push((w, f));
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Leaf indices in the component of `T - e` that contains `side`.
    pub fn leaves_on_side(&self, e: EdgeId, side: VertexId) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![(side, e)];
        while let Some((v, from)) = stack.pop() {
            if let Some(l) = self.vertex_leaf[v] {
                out.push(l);
            }
            for &(w, f) in &self.adjacency[v] {
                if f != from {
                    stack.push((w, f));
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// One split per edge, in edge order.
    pub fn edge_splits(&self) -> Vec<Split> {
        (0..self.edges.len())
            .map(|e| {
                let below = self.leaves_below(e);
                let mut in_below = vec![false; self.leaf_count()];
                for &l in &below {
                    in_below[l] = true;
                }
                let (a, b): (Vec<usize>, Vec<usize>) =
                    (0..self.leaf_count()).partition(|&l| in_below[l]);
                Split::new(
                    a.iter().map(|&l| self.labels[l].clone()),
                    b.iter().map(|&l| self.labels[l].clone()),
                )
            })
            .collect()
    }

    /// Split-weight set, sorted by split.
    pub fn splits(&self) -> Vec<(Split, S)> {
        let mut out: Vec<(Split, S)> = self
            .edge_splits()
            .into_iter()
            .zip(self.edges.iter().map(|e| e.weight.clone()))
            .collect();
        out.sort_by(|x, y| x.0.cmp(&y.0));
        out
    }

    /// Split set without weights, sorted.
    pub fn topology(&self) -> Vec<Split> {
        let mut s = self.edge_splits();
        s.sort();
        s
    }

    pub fn same_topology<T: Scalar>(&self, other: &WeightedTree<T>) -> bool {
        self.topology() == other.topology()
    }

    /// Equal as leaf-labelled weighted trees (split-weight sets agree).
    pub fn equals(&self, other: &WeightedTree<S>, tol: f64) -> bool {
        let a = self.splits();
        let b = other.splits();
        a.len() == b.len()
            && a.iter()
                .zip(&b)
                .all(|((sa, wa), (sb, wb))| sa == sb && wa.approx_eq(wb, tol))
    }

    /// Same structure with weights mapped through `f`.
    pub fn map_weights<T: Scalar>(&self, mut f: impl FnMut(&S) -> T) -> Result<WeightedTree<T>> {
        let edges = self
            .edges
            .iter()
            .map(|e| Edge {
                a: e.a,
                b: e.b,
                weight: f(&e.weight),
            })
            .collect();
        WeightedTree::new(self.vertex_count(), edges, self.leaf_label_pairs())
    }

    /// Same structure with the given per-edge weights.
    pub fn with_weights(&self, weights: Vec<S>) -> Result<WeightedTree<S>> {
        assert_eq!(weights.len(), self.edges.len());
        let edges = self
            .edges
            .iter()
            .zip(weights)
            .map(|(e, weight)| Edge {
                a: e.a,
                b: e.b,
                weight,
            })
            .collect();
        WeightedTree::new(self.vertex_count(), edges, self.leaf_label_pairs())
    }

    pub fn scaled(&self, factor: &S) -> Result<WeightedTree<S>> {
        self.map_weights(|w| w.clone() * factor.clone())
    }

    pub fn to_float(&self) -> WeightedTree<f64> {
        self.map_weights(|w| w.to_f64())
            .expect("positive weights stay positive")
    }

    pub(crate) fn leaf_label_pairs(&self) -> Vec<(VertexId, String)> {
        self.leaf_vertex
            .iter()
            .zip(&self.labels)
            .map(|(&v, l)| (v, l.clone()))
            .collect()
    }
}

/// Builds a tree from an edge list after contracting the flagged edges.
///
/// Contracted edges must be internal; vertex ids are compacted.
pub(crate) fn contract_edges<S: Scalar>(
    vertex_count: usize,
    edges: Vec<Edge<S>>,
    contract: &[bool],
    leaf_labels: Vec<(VertexId, String)>,
) -> Result<WeightedTree<S>> {
    let mut parent: Vec<usize> = (0..vertex_count).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut kept = Vec::new();
    for (e, flag) in edges.into_iter().zip(contract) {
        if *flag {
            let (ra, rb) = (find(&mut parent, e.a), find(&mut parent, e.b));
            parent[ra] = rb;
        } else {
            kept.push(e);
        }
    }
    let mut remap: BTreeMap<usize, usize> = BTreeMap::new();
    for v in 0..vertex_count {
        let r = find(&mut parent, v);
        let next = remap.len();
        remap.entry(r).or_insert(next);
    }
    let id = |v: usize, parent: &mut Vec<usize>| remap[&find(parent, v)];
    let edges = kept
        .into_iter()
        .map(|e| Edge {
            a: id(e.a, &mut parent),
            b: id(e.b, &mut parent),
            weight: e.weight,
        })
        .collect();
    let labels = leaf_labels
        .into_iter()
        .map(|(v, l)| (id(v, &mut parent), l))
        .collect();
    WeightedTree::new(remap.len(), edges, labels)
}

/// Probability that an internal edge of the random binary tree is contracted.
pub const MULTIFURCATION_PROB: f64 = 0.1;

/// Random tree on leaves labelled `1..=n`.
///
/// The binary topology comes from attaching leaves one at a time to a
/// uniformly chosen edge; each internal edge is then contracted with
/// probability [`MULTIFURCATION_PROB`]. Weights are drawn from `[lo, hi]`.
pub fn random_tree<S: Scalar>(
    n: usize,
    m_floor: usize,
    seed: u64,
    lo: &S,
    hi: &S,
) -> Result<WeightedTree<S>> {
    let min_n = 3.max((2 * m_floor).saturating_sub(1));
    if n < min_n {
        return Err(Error::InvalidArgument(format!(
            "random tree needs n >= {min_n}, got {n}"
        )));
    }
    if *lo <= S::zero() || lo > hi {
        return Err(Error::InvalidArgument("weight range must satisfy 0 < lo <= hi".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // leaves are vertices 0..n, internal vertices follow
    let mut pairs: Vec<(usize, usize)> = vec![(0, n), (1, n), (2, n)];
    let mut next = n + 1;
    for leaf in 3..n {
        let pick = rng.random_range(0..pairs.len());
        let (a, b) = pairs.swap_remove(pick);
        let mid = next;
        next += 1;
        pairs.push((a, mid));
        pairs.push((mid, b));
        pairs.push((mid, leaf));
    }
    let contract: Vec<bool> = pairs
        .iter()
        .map(|&(a, b)| a >= n && b >= n && rng.random_bool(MULTIFURCATION_PROB))
        .collect();
    let edges = pairs
        .iter()
        .map(|&(a, b)| Edge {
            a,
            b,
            weight: S::sample(&mut rng, lo, hi),
        })
        .collect();
    let labels = (0..n).map(|i| (i, (i + 1).to_string())).collect();
    contract_edges(next, edges, &contract, labels)
}
