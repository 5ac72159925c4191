//! Recovering a tree from its m-map.
//!
//! The topology comes from quartet splits, decided from the map by a search
//! over sets `R` of `m - 2` further leaves: `(i,j;k,l)` holds iff some `R`
//! gives `D(Rij)+D(Rkl) < D(Rik)+D(Rjl) = D(Ril)+D(Rjk)`. Leaves are then
//! inserted one at a time by walking the partial tree. Internal edge weights
//! follow from a single four-term difference, leaf edge weights from
//! differences of leaf sums plus one absolute value.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::mdissim::{compute_mmap, quartet_sums, MMap};
use crate::scalar::{Scalar, DEFAULT_TOL};
use crate::subsets::{self, Combinations};
use crate::tree::{Edge, EdgeId, VertexId, WeightedTree};

pub use crate::robust::{perturbation_trial, reconstruct_noisy, PerturbationReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum QuartetOutcome {
    /// `ij | kl`
    IjKl,
    /// `ik | jl`
    IkJl,
    /// `il | jk`
    IlJk,
    /// every `R` gives a three-way tie
    Star,
    /// some `R` gives a pattern no tree produces
    Undetermined,
}

impl QuartetOutcome {
    pub fn is_resolved(self) -> bool {
        matches!(self, Self::IjKl | Self::IkJl | Self::IlJk)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuartetCall {
    /// Leaf indices `(i, j, k, l)` in query order.
    pub quartet: [usize; 4],
    pub outcome: QuartetOutcome,
    /// The `R` certifying a resolved outcome, or the offending `R` for
    /// [`QuartetOutcome::Undetermined`].
    pub witness: Option<Vec<usize>>,
    /// Number of `R` candidates examined.
    pub r_scanned: usize,
}

/// Decides the split of `(i, j, k, l)` from the map.
///
/// Candidates `R` are scanned in colex order and the first resolving one is
/// returned.
pub fn quartet_oracle_idx<S: Scalar>(map: &MMap<S>, quartet: [usize; 4], tol: f64) -> QuartetCall {
    let rest: Vec<usize> = (0..map.n()).filter(|x| !quartet.contains(x)).collect();
    let mut scanned = 0;
    for r in Combinations::new(&rest, map.m() - 2) {
        scanned += 1;
        let sums = quartet_sums(map, &r, quartet);
        match classify(&sums, tol) {
            Pattern::Tie => continue,
            Pattern::Resolved(outcome) => {
                return QuartetCall {
                    quartet,
                    outcome,
                    witness: Some(r),
                    r_scanned: scanned,
                }
            }
            Pattern::Invalid => {
                return QuartetCall {
                    quartet,
                    outcome: QuartetOutcome::Undetermined,
                    witness: Some(r),
                    r_scanned: scanned,
                }
            }
        }
    }
    QuartetCall {
        quartet,
        outcome: QuartetOutcome::Star,
        witness: None,
        r_scanned: scanned,
    }
}

/// Label-based form of [`quartet_oracle_idx`].
pub fn quartet_oracle<S: Scalar>(map: &MMap<S>, labels: [&str; 4], tol: f64) -> Result<QuartetCall> {
    let mut q = [0; 4];
    for (slot, l) in q.iter_mut().zip(labels) {
        *slot = map.label_index(l).ok_or_else(|| Error::UnknownLabel(l.into()))?;
    }
    for a in 0..4 {
        for b in a + 1..4 {
            if q[a] == q[b] {
                return Err(Error::InvalidArgument("quartet labels must be distinct".into()));
            }
        }
    }
    if map.m() < 2 {
        return Err(Error::MOutOfRange { m: map.m(), n: map.n() });
    }
    Ok(quartet_oracle_idx(map, q, tol))
}

enum Pattern {
    Tie,
    Resolved(QuartetOutcome),
    Invalid,
}

fn classify<S: Scalar>(sums: &[S; 3], tol: f64) -> Pattern {
    let max = sums
        .iter()
        .cloned()
        .reduce(|a, b| if b > a { b } else { a })
        .unwrap();
    let min = sums
        .iter()
        .cloned()
        .reduce(|a, b| if b < a { b } else { a })
        .unwrap();
    if min.approx_eq(&max, tol) {
        return Pattern::Tie;
    }
    let outcomes = [QuartetOutcome::IjKl, QuartetOutcome::IkJl, QuartetOutcome::IlJk];
    for (i, outcome) in outcomes.into_iter().enumerate() {
        let (a, b) = ((i + 1) % 3, (i + 2) % 3);
        if sums[a].approx_eq(&sums[b], tol)
            && sums[i].definitely_lt(&sums[a], tol)
            && sums[i].definitely_lt(&sums[b], tol)
        {
            return Pattern::Resolved(outcome);
        }
    }
    Pattern::Invalid
}

#[derive(Clone, Copy, Debug)]
pub struct ReconstructOptions {
    /// Absolute equality tolerance (float mode only).
    pub tol: f64,
    /// Run even when `n < 2m - 1`; the result is then not unique.
    pub force: bool,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        ReconstructOptions {
            tol: DEFAULT_TOL,
            force: false,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct ReconstructionStats {
    pub quartet_queries: usize,
    pub r_candidates_scanned: usize,
    pub topology_time: Duration,
    pub weights_time: Duration,
    /// Set when run below the uniqueness threshold.
    pub non_unique: bool,
}

#[derive(Clone, Debug)]
pub struct ReconstructionResult<S> {
    pub tree: WeightedTree<S>,
    pub stats: ReconstructionStats,
}

/// Mutable unweighted tree used while inserting leaves.
#[derive(Clone, Debug)]
pub(crate) struct Topo {
    pub adj: Vec<Vec<VertexId>>,
    pub leaf: Vec<Option<usize>>,
    pub leaf_vertex: Vec<VertexId>,
}

impl Topo {
    /// Star on leaves `a, b, c`; `leaf_count` sizes the leaf lookup table.
    pub fn star(leaves: [usize; 3], leaf_count: usize) -> Topo {
        let mut t = Topo {
            adj: Vec::new(),
            leaf: Vec::new(),
            leaf_vertex: vec![usize::MAX; leaf_count],
        };
        let center = t.add_vertex(None);
        for l in leaves {
            let v = t.add_vertex(Some(l));
            t.connect(center, v);
        }
        t
    }

    pub fn add_vertex(&mut self, leaf: Option<usize>) -> VertexId {
        self.adj.push(Vec::new());
        self.leaf.push(leaf);
        let v = self.adj.len() - 1;
        if let Some(l) = leaf {
            self.leaf_vertex[l] = v;
        }
        v
    }

    pub fn connect(&mut self, a: VertexId, b: VertexId) {
        self.adj[a].push(b);
        self.adj[b].push(a);
    }

    fn disconnect(&mut self, a: VertexId, b: VertexId) {
        self.adj[a].retain(|&x| x != b);
        self.adj[b].retain(|&x| x != a);
    }

    /// Puts a new vertex on edge `a-b` and hangs leaf `x` from it.
    pub fn subdivide(&mut self, a: VertexId, b: VertexId, x: usize) {
        self.disconnect(a, b);
        let s = self.add_vertex(None);
        self.connect(a, s);
        self.connect(s, b);
        let leaf = self.add_vertex(Some(x));
        self.connect(s, leaf);
    }

    pub fn attach(&mut self, v: VertexId, x: usize) {
        let leaf = self.add_vertex(Some(x));
        self.connect(v, leaf);
    }

    /// Smallest leaf index in the component of `v` away from `from`.
    pub fn min_leaf(&self, v: VertexId, from: VertexId) -> usize {
        let mut best = usize::MAX;
        let mut stack = vec![(v, from)];
        while let Some((u, p)) = stack.pop() {
            if let Some(l) = self.leaf[u] {
                best = best.min(l);
            }
            for &w in &self.adj[u] {
                if w != p {
                    stack.push((w, u));
                }
            }
        }
        best
    }

    pub fn edge_list(&self) -> Vec<(VertexId, VertexId)> {
        let mut out = Vec::new();
        for (a, nbrs) in self.adj.iter().enumerate() {
            for &b in nbrs {
                if a < b {
                    out.push((a, b));
                }
            }
        }
        out
    }

    pub fn to_tree<S: Scalar>(&self, labels: &[String]) -> Result<WeightedTree<S>> {
        let edges = self
            .edge_list()
            .into_iter()
            .map(|(a, b)| Edge {
                a,
                b,
                weight: S::one(),
            })
            .collect();
        let leaf_labels = self
            .leaf
            .iter()
            .enumerate()
            .filter_map(|(v, l)| l.map(|l| (v, labels[l].clone())))
            .collect();
        WeightedTree::new(self.adj.len(), edges, leaf_labels)
    }
}

enum Vote {
    Claim(usize),
    Above,
    AtVertex,
}

fn threshold_check<S: Scalar>(map: &MMap<S>, force: bool) -> Result<bool> {
    let (n, m) = (map.n(), map.m());
    if m < 2 || n < 3 {
        return Err(Error::MOutOfRange { m, n });
    }
    if n + 1 < 2 * m {
        if force {
            return Ok(true);
        }
        return Err(Error::BelowThreshold { n, m });
    }
    Ok(false)
}

fn check_finite<S: Scalar>(map: &MMap<S>) -> Result<()> {
    if map.values().iter().any(|v| !v.to_f64().is_finite()) {
        return Err(Error::InvalidArgument("map values must be finite".into()));
    }
    Ok(())
}

/// Recovers the leaf-labelled topology; all weights are set to 1.
pub fn reconstruct_topology<S: Scalar>(
    map: &MMap<S>,
    options: &ReconstructOptions,
) -> Result<WeightedTree<S>> {
    let mut stats = ReconstructionStats::default();
    reconstruct_topology_with_stats(map, options, &mut stats)
}

fn reconstruct_topology_with_stats<S: Scalar>(
    map: &MMap<S>,
    options: &ReconstructOptions,
    stats: &mut ReconstructionStats,
) -> Result<WeightedTree<S>> {
    stats.non_unique = threshold_check(map, options.force)?;
    check_finite(map)?;
    let n = map.n();
    let tol = options.tol;
    let mut topo = Topo::star([0, 1, 2], n);
    let r = 0;
    for x in 3..n {
        let r_vertex = topo.leaf_vertex[r];
        let mut parent = r_vertex;
        let mut v = topo.adj[r_vertex][0];
        loop {
            let children: Vec<VertexId> = topo.adj[v].iter().copied().filter(|&c| c != parent).collect();
            let reps: Vec<usize> = children.iter().map(|&c| topo.min_leaf(c, v)).collect();
            let d = children.len();
            let mut votes = Vec::with_capacity(d);
            for q in 0..d {
                let qn = (q + 1) % d;
                let call = quartet_oracle_idx(map, [r, reps[qn], reps[q], x], tol);
                stats.quartet_queries += 1;
                stats.r_candidates_scanned += call.r_scanned;
                votes.push(match call.outcome {
                    QuartetOutcome::IjKl => Vote::Claim(q),
                    QuartetOutcome::IkJl => Vote::Claim(qn),
                    QuartetOutcome::IlJk => Vote::Above,
                    QuartetOutcome::Star => Vote::AtVertex,
                    QuartetOutcome::Undetermined => {
                        let names: Vec<&str> = call.quartet.iter().map(|&i| map.labels()[i].as_str()).collect();
                        let rset: Vec<&str> = call
                            .witness
                            .unwrap_or_default()
                            .iter()
                            .map(|&i| map.labels()[i].as_str())
                            .collect();
                        return Err(Error::NotRealizable(format!(
                            "quartet ({}) with R={{{}}} gives a pattern no tree produces",
                            names.join(","),
                            rset.join(",")
                        )));
                    }
                });
            }
            let mut claims: Vec<usize> = votes
                .iter()
                .filter_map(|v| match v {
                    Vote::Claim(c) => Some(*c),
                    _ => None,
                })
                .collect();
            claims.sort_unstable();
            claims.dedup();
            let above = votes.iter().filter(|v| matches!(v, Vote::Above)).count();
            let at_vertex = votes.iter().filter(|v| matches!(v, Vote::AtVertex)).count();
            let contradiction = || {
                Error::NotRealizable(format!(
                    "contradictory quartet votes while placing leaf `{}`",
                    map.labels()[x]
                ))
            };
            if claims.len() == 1 && above == 0 {
                let c = children[claims[0]];
                if topo.leaf[c].is_some() {
                    topo.subdivide(v, c, x);
                    break;
                }
                parent = v;
                v = c;
            } else if !claims.is_empty() {
                return Err(contradiction());
            } else if above == d {
                topo.subdivide(parent, v, x);
                break;
            } else if at_vertex == d {
                topo.attach(v, x);
                break;
            } else {
                return Err(contradiction());
            }
        }
    }
    topo.to_tree(map.labels())
}

/// Leaves `(i, j, k, l)` and set `R` used to weigh an internal edge.
///
/// `i, j` lie in two different components of `T - u` away from `v`, `k, l`
/// likewise for `v`, and `R` lies entirely on one side of the edge.
pub fn internal_edge_witness<S: Scalar>(
    topo: &WeightedTree<S>,
    e: EdgeId,
    m: usize,
) -> Option<([usize; 4], Vec<usize>)> {
    let edge = topo.edge(e);
    let (u, v) = (edge.a, edge.b);
    let reps = |x: VertexId, away: VertexId| -> Vec<usize> {
        let mut r: Vec<usize> = topo
            .neighbors(x)
            .iter()
            .filter(|&&(w, _)| w != away)
            .map(|&(_, f)| {
                let side = topo.edge(f);
                let far = if side.a == x { side.b } else { side.a };
                topo.leaves_on_side(f, far)[0]
            })
            .collect();
        r.sort_unstable();
        r
    };
    let ru = reps(u, v);
    let rv = reps(v, u);
    if ru.len() < 2 || rv.len() < 2 {
        return None;
    }
    let q = [ru[0], ru[1], rv[0], rv[1]];
    let u_side = topo.leaves_on_side(e, u);
    let rest: Vec<usize> = (0..topo.leaf_count()).filter(|x| !q.contains(x)).collect();
    let r = Combinations::new(&rest, m - 2).find(|r| {
        r.iter().all(|x| u_side.binary_search(x).is_ok())
            || r.iter().all(|x| u_side.binary_search(x).is_err())
    })?;
    Some((q, r))
}

/// `D(Rik) + D(Rjl) - D(Rij) - D(Rkl)` for the given witness.
pub fn four_term_difference<S: Scalar>(map: &MMap<S>, q: [usize; 4], r: &[usize]) -> S {
    let [i, j, k, l] = q;
    let d = |a: usize, b: usize| map.get(&subsets::with_extra(r, &[a, b])).clone();
    d(i, k) + d(j, l) - d(i, j) - d(k, l)
}

/// Weight of an internal edge of a known topology.
///
/// For `m >= 3` the four-term difference is `w(e)` itself: the two cross
/// terms cover `e`, and so does the same-side term on the far side from `R`.
/// For `m = 2` (`R` empty) it is `2 w(e)`.
pub fn recover_internal_edge_weight<S: Scalar>(
    map: &MMap<S>,
    topo: &WeightedTree<S>,
    e: EdgeId,
    tol: f64,
) -> Result<S> {
    if !topo.is_internal_edge(e) {
        return Err(Error::InvalidArgument(format!("edge {e} is a leaf edge")));
    }
    let (q, r) = internal_edge_witness(topo, e, map.m()).ok_or_else(|| {
        Error::NotRealizable(format!("no valid R on one side of edge {e}"))
    })?;
    let mut w = four_term_difference(map, q, &r);
    if map.m() == 2 {
        w = w.div_usize(2);
    }
    if !S::zero().definitely_lt(&w, tol) {
        return Err(Error::NotRealizable(format!(
            "internal edge {e} gets non-positive weight {}",
            w.format_literal()
        )));
    }
    Ok(w)
}

/// Fills in leaf edge weights once internal weights are known.
///
/// `topo` must carry the recovered internal weights; its leaf weights are
/// ignored.
pub fn recover_leaf_edge_weights<S: Scalar>(
    map: &MMap<S>,
    topo: &WeightedTree<S>,
    tol: f64,
) -> Result<WeightedTree<S>> {
    let n = map.n();
    let m = map.m();
    // D(V) minus the internal edges of [V] is the sum of the leaf edges
    let leafsum = |v: &[usize]| -> S {
        let internal: S = topo
            .steiner_edges(v)
            .into_iter()
            .filter(|&e| topo.is_internal_edge(e))
            .map(|e| topo.edge(e).weight.clone())
            .sum();
        map.get(v).clone() - internal
    };
    // delta[j] = w(e_0) - w(e_j)
    let mut delta = vec![S::zero(); n];
    for (j, dj) in delta.iter_mut().enumerate().skip(1) {
        let rest: Vec<usize> = (1..n).filter(|&x| x != j).collect();
        let s = Combinations::new(&rest, m - 1)
            .next()
            .ok_or_else(|| Error::NotRealizable("too few leaves to compare leaf edges".into()))?;
        *dj = leafsum(&subsets::with_extra(&s, &[0])) - leafsum(&subsets::with_extra(&s, &[j]));
    }
    // V0 = {0, .., m-1}: m w(e_0) - sum of deltas = leafsum(V0)
    let v0: Vec<usize> = (0..m).collect();
    let delta_sum: S = v0.iter().skip(1).map(|&j| delta[j].clone()).sum();
    let w0 = (leafsum(&v0) + delta_sum).div_usize(m);
    let mut weights: Vec<S> = topo.edges().iter().map(|e| e.weight.clone()).collect();
    for (j, dj) in delta.iter().enumerate() {
        let w = w0.clone() - dj.clone();
        if !S::zero().definitely_lt(&w, tol) {
            return Err(Error::NotRealizable(format!(
                "leaf `{}` gets non-positive edge weight {}",
                map.labels()[j],
                w.format_literal()
            )));
        }
        weights[topo.leaf_edge(j)] = w;
    }
    topo.with_weights(weights)
}

/// Recovers the unique tree whose m-map is `map`.
///
/// The result is verified by recomputing its map; a mismatch means the input
/// is not realizable.
pub fn reconstruct<S: Scalar>(map: &MMap<S>, options: &ReconstructOptions) -> Result<ReconstructionResult<S>> {
    let mut stats = ReconstructionStats::default();
    let start = Instant::now();
    let topo = reconstruct_topology_with_stats(map, options, &mut stats)?;
    stats.topology_time = start.elapsed();

    let start = Instant::now();
    let mut weights: Vec<S> = topo.edges().iter().map(|e| e.weight.clone()).collect();
    for (e, w) in weights.iter_mut().enumerate() {
        if topo.is_internal_edge(e) {
            *w = recover_internal_edge_weight(map, &topo, e, options.tol)?;
        }
    }
    let with_internal = topo.with_weights(weights)?;
    let tree = recover_leaf_edge_weights(map, &with_internal, options.tol)?;
    stats.weights_time = start.elapsed();

    let check = compute_mmap(&tree, map.m())?;
    if let Some((subset, (got, want))) = check
        .iter()
        .zip(map.values())
        .map(|((s, got), want)| (s, (got, want)))
        .find(|(_, (got, want))| !got.approx_eq(want, options.tol))
    {
        let names: Vec<&str> = subset.iter().map(|&i| map.labels()[i].as_str()).collect();
        return Err(Error::NotRealizable(format!(
            "recovered tree gives {} on {{{}}} but the map has {}",
            got.format_literal(),
            names.join(","),
            want.format_literal()
        )));
    }
    Ok(ReconstructionResult { tree, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdissim::compute_mmap;
    use crate::scalar::Rational;
    use crate::tree::fixtures::{star, t5};
    use crate::tree::{random_tree, Split};

    fn q(n: i64) -> Rational {
        Rational::from_i64(n)
    }

    fn idx(map: &MMap<Rational>, l: &str) -> usize {
        map.label_index(l).unwrap()
    }

    #[test]
    fn oracle_on_t5() {
        let map = compute_mmap(&t5::<Rational>(), 3).unwrap();
        let call = quartet_oracle(&map, ["1", "2", "4", "5"], 0.0).unwrap();
        assert_eq!(call.outcome, QuartetOutcome::IjKl);
        assert_eq!(call.witness, Some(vec![idx(&map, "3")]));
        let sums = quartet_sums(&map, &[idx(&map, "3")], call.quartet);
        assert_eq!(sums, [q(8), q(10), q(10)]);

        let call = quartet_oracle(&map, ["1", "2", "3", "4"], 0.0).unwrap();
        assert_eq!(call.outcome, QuartetOutcome::IjKl);
        assert_eq!(call.witness, Some(vec![idx(&map, "5")]));
        let sums = quartet_sums(&map, &[idx(&map, "5")], call.quartet);
        assert_eq!(sums, [q(9), q(10), q(10)]);

        // same quartet, other pairings
        let call = quartet_oracle(&map, ["1", "4", "2", "5"], 0.0).unwrap();
        assert_eq!(call.outcome, QuartetOutcome::IkJl);
        let call = quartet_oracle(&map, ["1", "4", "5", "2"], 0.0).unwrap();
        assert_eq!(call.outcome, QuartetOutcome::IlJk);
    }

    #[test]
    fn oracle_on_star() {
        let s = star(&[q(1), q(1), q(1), q(1), q(1)]);
        let map = compute_mmap(&s, 3).unwrap();
        for quartet in Combinations::new(&[0, 1, 2, 3, 4], 4) {
            let call = quartet_oracle_idx(&map, [quartet[0], quartet[1], quartet[2], quartet[3]], 0.0);
            assert_eq!(call.outcome, QuartetOutcome::Star);
            assert_eq!(call.witness, None);
            let r = (0..5).find(|x| !quartet.contains(x)).unwrap();
            assert_eq!(
                quartet_sums(&map, &[r], [quartet[0], quartet[1], quartet[2], quartet[3]]),
                [q(6), q(6), q(6)]
            );
        }
    }

    #[test]
    fn oracle_errors() {
        let map = compute_mmap(&t5::<Rational>(), 3).unwrap();
        assert!(quartet_oracle(&map, ["1", "1", "2", "3"], 0.0).is_err());
        assert!(matches!(
            quartet_oracle(&map, ["1", "2", "3", "x"], 0.0),
            Err(Error::UnknownLabel(_))
        ));
    }

    #[test]
    fn oracle_flags_non_tree_pattern() {
        let mut map = compute_mmap(&t5::<Rational>(), 3).unwrap();
        map.values_mut()[subsets::rank(&[1, 2, 4])] = q(7);
        // R={2} now gives sums 9, 12, 10
        let call = quartet_oracle(&map, ["1", "3", "4", "5"], 0.0).unwrap();
        assert_eq!(call.outcome, QuartetOutcome::Undetermined);
    }

    #[test]
    fn topology_of_t5() {
        let map = compute_mmap(&t5::<Rational>(), 3).unwrap();
        let topo = reconstruct_topology(&map, &ReconstructOptions::default()).unwrap();
        let nontrivial: Vec<Split> = topo.topology().into_iter().filter(|s| !s.is_trivial()).collect();
        assert_eq!(
            nontrivial,
            vec![
                Split::new(["1", "2"], ["3", "4", "5"]),
                Split::new(["1", "2", "3"], ["4", "5"]),
            ]
        );
        assert!(topo.edges().iter().all(|e| e.weight == q(1)));
    }

    #[test]
    fn topology_of_star() {
        let s = star(&[q(1), q(2), q(3), q(4), q(5)]);
        let map = compute_mmap(&s, 3).unwrap();
        let topo = reconstruct_topology(&map, &ReconstructOptions::default()).unwrap();
        assert!(topo.same_topology(&s));
        assert_eq!(topo.vertex_count(), 6);
    }

    #[test]
    fn refuses_below_threshold() {
        let t = parse("((1:1,2:1):1,(3:1,4:1):1);");
        let map = compute_mmap(&t, 3).unwrap();
        assert!(matches!(
            reconstruct(&map, &ReconstructOptions::default()),
            Err(Error::BelowThreshold { n: 4, m: 3 })
        ));
    }

    fn parse(s: &str) -> WeightedTree<Rational> {
        crate::newick::parse_newick(s).unwrap()
    }

    fn edge_between(t: &WeightedTree<Rational>, split: &Split) -> EdgeId {
        let splits = t.edge_splits();
        splits.iter().position(|s| s == split).unwrap()
    }

    #[test]
    fn internal_edge_weights_on_t5() {
        let t = t5::<Rational>();
        let map = compute_mmap(&t, 3).unwrap();
        let i = |l: &str| idx(&map, l);
        // edge ab with i=1, j=2, k=3, l=4, R={5}
        assert_eq!(
            four_term_difference(&map, [i("1"), i("2"), i("3"), i("4")], &[i("5")]),
            q(1)
        );
        let ab = edge_between(&t, &Split::new(["1", "2"], ["3", "4", "5"]));
        assert_eq!(recover_internal_edge_weight(&map, &t, ab, 0.0).unwrap(), q(1));

        // edge bc: the deterministic rule picks i=1, j=3, k=4, l=5, R={2}
        let bc = edge_between(&t, &Split::new(["1", "2", "3"], ["4", "5"]));
        let (quartet, r) = internal_edge_witness(&t, bc, 3).unwrap();
        let (u_first, v_first) = if t.leaves_on_side(bc, t.edge(bc).a).contains(&i("4")) {
            ([quartet[2], quartet[3]], [quartet[0], quartet[1]])
        } else {
            ([quartet[0], quartet[1]], [quartet[2], quartet[3]])
        };
        assert_eq!(u_first, [i("1"), i("3")]);
        assert_eq!(v_first, [i("4"), i("5")]);
        assert_eq!(r, vec![i("2")]);
        assert_eq!(recover_internal_edge_weight(&map, &t, bc, 0.0).unwrap(), q(1));

        let scaled = compute_mmap(&t.scaled(&q(3)).unwrap(), 3).unwrap();
        assert_eq!(recover_internal_edge_weight(&scaled, &t, ab, 0.0).unwrap(), q(3));
        assert_eq!(recover_internal_edge_weight(&scaled, &t, bc, 0.0).unwrap(), q(3));
        assert!(recover_internal_edge_weight(&map, &t, t.leaf_edge(0), 0.0).is_err());
    }

    #[test]
    fn leaf_edge_recovery_on_t5() {
        let t = t5::<Rational>();
        let map = compute_mmap(&t, 3).unwrap();
        // leafsum({1,2,3}) = 4 - w(ab) = 3; delta_2 via S={3,4} is 0
        let v123: Vec<usize> = vec![0, 1, 2];
        let internal: Rational = t
            .steiner_edges(&v123)
            .into_iter()
            .filter(|&e| t.is_internal_edge(e))
            .map(|e| t.edge(e).weight.clone())
            .sum();
        assert_eq!(map.get(&v123).clone() - internal, q(3));
        assert_eq!(
            (map.get(&[0, 2, 3]).clone() - q(2)) - (map.get(&[1, 2, 3]).clone() - q(2)),
            q(0)
        );
        // leaf weights are ignored on input
        let blank = t.map_weights(|_| q(1)).unwrap();
        let blank = blank
            .with_weights(
                (0..blank.edges().len())
                    .map(|e| if blank.is_internal_edge(e) { q(1) } else { q(99) })
                    .collect(),
            )
            .unwrap();
        let full = recover_leaf_edge_weights(&map, &blank, 0.0).unwrap();
        assert!(full.equals(&t, 0.0));
    }

    #[test]
    fn reconstructs_t5_exactly() {
        let t = t5::<Rational>();
        for m in [2, 3] {
            let map = compute_mmap(&t, m).unwrap();
            let res = reconstruct(&map, &ReconstructOptions::default()).unwrap();
            assert!(res.tree.equals(&t, 0.0), "m={m}");
            assert!(res.stats.quartet_queries > 0);
            assert!(!res.stats.non_unique);
        }
    }

    #[test]
    fn reconstructs_in_float_mode() {
        let t = random_tree::<f64>(10, 3, 5, &0.5, &3.0).unwrap();
        let map = compute_mmap(&t, 3).unwrap();
        let res = reconstruct(&map, &ReconstructOptions::default()).unwrap();
        assert!(res.tree.equals(&t, 1e-9));
    }

    #[test]
    fn corrupted_map_is_not_realizable() {
        let t = random_tree::<Rational>(8, 3, 11, &q(1), &q(10)).unwrap();
        let mut map = compute_mmap(&t, 3).unwrap();
        map.values_mut()[17] = map.values()[17].clone() + q(1) / q(7);
        assert!(matches!(
            reconstruct(&map, &ReconstructOptions::default()),
            Err(Error::NotRealizable(_))
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        /// True quartet relation read off the tree's splits.
        fn true_quartet(t: &WeightedTree<Rational>, quartet: [usize; 4]) -> QuartetOutcome {
            let [i, j, k, l] = quartet;
            for e in 0..t.edges().len() {
                let below = t.leaves_below(e);
                let inside = |x| below.binary_search(&x).is_ok();
                let pattern = [inside(i), inside(j), inside(k), inside(l)];
                let count = pattern.iter().filter(|&&b| b).count();
                if count != 2 {
                    continue;
                }
                return match pattern {
                    [a, b, _, _] if a == b => QuartetOutcome::IjKl,
                    [a, _, c, _] if a == c => QuartetOutcome::IkJl,
                    _ => QuartetOutcome::IlJk,
                };
            }
            QuartetOutcome::Star
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn oracle_matches_tree(seed in 0u64..100_000, n in 5usize..=9, m in 2usize..=5) {
                prop_assume!(n + 1 >= 2 * m);
                let t = random_tree::<Rational>(n, m, seed, &q(1), &q(10)).unwrap();
                let map = compute_mmap(&t, m).unwrap();
                let all: Vec<usize> = (0..n).collect();
                for qd in Combinations::new(&all, 4) {
                    let quartet = [qd[0], qd[1], qd[2], qd[3]];
                    let call = quartet_oracle_idx(&map, quartet, 0.0);
                    prop_assert_eq!(call.outcome, true_quartet(&t, quartet));
                }
            }

            #[test]
            fn round_trip(seed in 0u64..100_000, n in 5usize..=11, m in 3usize..=5) {
                prop_assume!(n + 1 >= 2 * m);
                let t = random_tree::<Rational>(n, m, seed, &q(1), &q(10)).unwrap();
                let map = compute_mmap(&t, m).unwrap();
                let res = reconstruct(&map, &ReconstructOptions::default()).unwrap();
                prop_assert!(res.tree.equals(&t, 0.0));
            }

            #[test]
            fn internal_formula_holds_for_every_valid_choice(seed in 0u64..100_000, n in 7usize..=10, m in 3usize..=4) {
                prop_assume!(n + 1 >= 2 * m);
                let t = random_tree::<Rational>(n, m, seed, &q(1), &q(10)).unwrap();
                let map = compute_mmap(&t, m).unwrap();
                for e in (0..t.edges().len()).filter(|&e| t.is_internal_edge(e)) {
                    let edge = t.edge(e);
                    let u_side = t.leaves_on_side(e, edge.a);
                    let v_side = t.leaves_on_side(e, edge.b);
                    // leaves grouped by the component of T - u (resp. v) they sit in
                    let groups = |x: VertexId, away: VertexId| -> Vec<Vec<usize>> {
                        t.neighbors(x).iter().filter(|&&(w, _)| w != away)
                            .map(|&(w, f)| t.leaves_on_side(f, w)).collect()
                    };
                    let gu = groups(edge.a, edge.b);
                    let gv = groups(edge.b, edge.a);
                    let i = gu[0][0]; let j = gu[1][gu[1].len() - 1];
                    let k = gv[0][gv[0].len() - 1]; let l = gv[gv.len() - 1][0];
                    let rest: Vec<usize> = (0..n).filter(|x| ![i, j, k, l].contains(x)).collect();
                    for r in Combinations::new(&rest, m - 2) {
                        let one_side = r.iter().all(|x| u_side.contains(x)) || r.iter().all(|x| v_side.contains(x));
                        if !one_side { continue; }
                        prop_assert_eq!(four_term_difference(&map, [i, j, k, l], &r), t.edge(e).weight.clone());
                    }
                }
            }

            #[test]
            fn scaling_equivariance(seed in 0u64..100_000, num in 1i64..20, den in 1i64..7) {
                let t = random_tree::<Rational>(8, 3, seed, &q(1), &q(10)).unwrap();
                let c = Rational::from_ratio(num, den);
                let map = compute_mmap(&t, 3).unwrap();
                let a = reconstruct(&map, &ReconstructOptions::default()).unwrap().tree;
                let b = reconstruct(&map.scaled(&c), &ReconstructOptions::default()).unwrap().tree;
                prop_assert!(b.equals(&a.scaled(&c).unwrap(), 0.0));
            }
        }
    }
}
