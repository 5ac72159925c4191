//! Reconstruction from perturbed float maps, and the perturbation harness.
//!
//! The exact pipeline in [`crate::reconstruct`] stops at the first quartet
//! whose sums fail to tie, so any noise defeats it. Here quartet evidence is
//! summed over every `R`, leaves are inserted into a binary tree where that
//! evidence agrees best, all weights are fitted by least squares and internal
//! edges shorter than the worst residual are contracted.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mdissim::{compute_mmap, quartet_sums, MMap};
use crate::reconstruct::Topo;
use crate::scalar::Scalar;
use crate::subsets::{self, binomial, Combinations};
use crate::tree::{contract_edges, WeightedTree};

/// Per 4-subset (rank order) sums of the three pairings over every `R`.
fn aggregated_quartets(map: &MMap<f64>) -> Vec<[f64; 3]> {
    let n = map.n();
    let total = binomial(n, 4);
    let one = |rank: usize| {
        let q = subsets::unrank(rank, 4);
        let rest: Vec<usize> = (0..n).filter(|x| !q.contains(x)).collect();
        let mut acc = [0.0; 3];
        for r in Combinations::new(&rest, map.m() - 2) {
            let s = quartet_sums(map, &r, [q[0], q[1], q[2], q[3]]);
            for (a, v) in acc.iter_mut().zip(s) {
                *a += v;
            }
        }
        acc
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..total).into_par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..total).map(one).collect()
    }
}

/// Hop distances from every vertex to every vertex.
fn hops(topo: &Topo) -> Vec<Vec<usize>> {
    let v = topo.adj.len();
    (0..v)
        .map(|s| {
            let mut d = vec![usize::MAX; v];
            d[s] = 0;
            let mut queue = std::collections::VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &w in &topo.adj[u] {
                    if d[w] == usize::MAX {
                        d[w] = d[u] + 1;
                        queue.push_back(w);
                    }
                }
            }
            d
        })
        .collect()
}

/// Binary topology agreeing best with the aggregated quartet sums.
fn insert_leaves(map: &MMap<f64>) -> Topo {
    let n = map.n();
    let agg = aggregated_quartets(map);
    let mut topo = Topo::star([0, 1, 2], n);
    for x in 3..n {
        let d = hops(&topo);
        let lv = |y: usize| topo.leaf_vertex[y];
        let mut best: Option<(f64, (usize, usize))> = None;
        for (p, q) in topo.edge_list() {
            let dx = |y: usize| d[p][lv(y)].min(d[q][lv(y)]);
            let mut score = 0.0;
            for t in Combinations::new(&(0..x).collect::<Vec<_>>(), 3) {
                let (a, b, c) = (t[0], t[1], t[2]);
                // pairings of (a, b, c, x) in the order ab|cx, ac|bx, ax|bc
                let tree_sums = [
                    dx(c) + d[lv(a)][lv(b)],
                    dx(b) + d[lv(a)][lv(c)],
                    dx(a) + d[lv(b)][lv(c)],
                ];
                let pick = (0..3).min_by_key(|&i| tree_sums[i]).unwrap();
                score += agg[subsets::rank(&[a, b, c, x])][pick];
            }
            if best.is_none_or(|(s, _)| score < s) {
                best = Some((score, (p, q)));
            }
        }
        let (_, (p, q)) = best.expect("trees have edges");
        topo.subdivide(p, q, x);
    }
    topo
}

/// Least-squares edge weights for a fixed topology, and the largest residual.
fn fit_weights(tree: &WeightedTree<f64>, map: &MMap<f64>) -> Result<(Vec<f64>, f64)> {
    let rows = map.values().len();
    let cols = tree.edges().len();
    let mut a = DMatrix::<f64>::zeros(rows, cols);
    for (r, (subset, _)) in map.iter().enumerate() {
        for e in tree.steiner_edges(&subset) {
            a[(r, e)] = 1.0;
        }
    }
    let y = DVector::from_column_slice(map.values());
    let w = a
        .clone()
        .svd(true, true)
        .solve(&y, 1e-12)
        .map_err(|e| Error::NotRealizable(format!("least-squares fit failed: {e}")))?;
    let residual = (&a * &w - &y).amax();
    Ok((w.iter().copied().collect(), residual))
}

/// Best-fitting tree for a perturbed map.
///
/// Internal edges whose fitted weight is at most `max(residual, tol)` are
/// contracted and the rest refitted.
pub fn reconstruct_noisy(map: &MMap<f64>, tol: f64) -> Result<WeightedTree<f64>> {
    let (n, m) = (map.n(), map.m());
    if n + 1 < 2 * m {
        return Err(Error::BelowThreshold { n, m });
    }
    if map.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("map values must be finite".into()));
    }
    let mut tree: WeightedTree<f64> = insert_leaves(map).to_tree(map.labels())?;
    loop {
        let (w, residual) = fit_weights(&tree, map)?;
        let cut = residual.max(tol);
        let contract: Vec<bool> = (0..w.len())
            .map(|e| tree.is_internal_edge(e) && w[e] <= cut)
            .collect();
        if !contract.contains(&true) {
            if let Some(e) = w.iter().position(|&x| x <= 0.0) {
                return Err(Error::NotRealizable(format!(
                    "best fit gives edge {e} weight {}",
                    w[e]
                )));
            }
            return tree.with_weights(w);
        }
        // placeholder weights keep the intermediate tree valid
        let edges = tree
            .edges()
            .iter()
            .map(|e| crate::tree::Edge { weight: 1.0, ..e.clone() })
            .collect();
        tree = contract_edges(tree.vertex_count(), edges, &contract, tree.leaf_label_pairs())?;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationReport {
    pub trials: usize,
    /// Trials whose recovered topology matched the true one.
    pub identical_topology: usize,
    pub success_rate: f64,
    /// Largest weight error over the matching trials.
    pub max_weight_error: f64,
}

/// Perturbs every map value by `U[-d, d]` with `d = delta_frac * min weight`
/// and reports how often the topology survives.
///
/// Trial `t` draws from stream `t` of a ChaCha8 generator seeded with
/// `seed`, so the result does not depend on thread count.
pub fn perturbation_trial<S: Scalar>(
    tree: &WeightedTree<S>,
    m: usize,
    delta_frac: f64,
    seed: u64,
    trials: usize,
    tol: f64,
) -> Result<PerturbationReport> {
    if !(0.0..0.5).contains(&delta_frac) {
        return Err(Error::InvalidArgument(format!(
            "delta fraction must lie in [0, 0.5), got {delta_frac}"
        )));
    }
    let n = tree.leaf_count();
    if n + 1 < 2 * m {
        return Err(Error::BelowThreshold { n, m });
    }
    let tree = tree.to_float();
    let clean = compute_mmap(&tree, m)?;
    let delta = delta_frac * tree.min_weight();
    let truth = tree.splits();
    let one = |t: usize| -> Result<Option<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t as u64);
        let noisy = clean.map_values(|v| {
            if delta > 0.0 {
                v + rng.random_range(-delta..=delta)
            } else {
                *v
            }
        });
        let got = reconstruct_noisy(&noisy, tol);
        let got = match got {
            Ok(g) => g,
            Err(Error::NotRealizable(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        let splits = got.splits();
        if splits.len() != truth.len() || splits.iter().zip(&truth).any(|(a, b)| a.0 != b.0) {
            return Ok(None);
        }
        Ok(Some(
            splits
                .iter()
                .zip(&truth)
                .map(|(a, b)| (a.1 - b.1).abs())
                .fold(0.0, f64::max),
        ))
    };
    #[cfg(feature = "parallel")]
    let outcomes: Vec<Option<f64>> = {
        use rayon::prelude::*;
        (0..trials).into_par_iter().map(one).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<Option<f64>> = (0..trials).map(one).collect::<Result<_>>()?;
    let identical = outcomes.iter().flatten().count();
    Ok(PerturbationReport {
        trials,
        identical_topology: identical,
        success_rate: if trials == 0 { 1.0 } else { identical as f64 / trials as f64 },
        max_weight_error: outcomes.iter().flatten().copied().fold(0.0, f64::max),
    })
}
