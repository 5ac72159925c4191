//! Two distinct caterpillars on `2m - 2` leaves with the same m-map.
//!
//! `T` is the path `v1 .. vn` with pendant leaf `wi` hung from `vi` for
//! `2 <= i <= n-1`; the path ends are the leaves `w1 = v1` and `wn = vn`.
//! `T'` moves `w(m-1)` to `v(m)` and `w(m)` to `v(m-1)`. Edge `k` of one tree
//! corresponds to edge `k` of the other and carries the same weight.
//!
//! Every m-subset has leaves on both sides of the middle edge
//! `v(m-1) - v(m)`, so swapping the two pendants across it changes no `[V]`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::subsets::subsets_of_range;
use crate::tree::{Edge, EdgeId, WeightedTree};

#[derive(Clone, Debug)]
pub struct CaterpillarPair<S> {
    pub m: usize,
    pub t: WeightedTree<S>,
    /// Same edge list as `t` (index for index) with two pendants swapped.
    pub t_prime: WeightedTree<S>,
}

impl<S: Scalar> CaterpillarPair<S> {
    pub fn leaf_count(&self) -> usize {
        2 * self.m - 2
    }

    /// The path edge `v(m-1) - v(m)`.
    pub fn middle_edge(&self) -> EdgeId {
        self.m - 2
    }
}

/// Number of edges of the pair for a given `m`.
pub fn edge_count(m: usize) -> usize {
    2 * (2 * m - 2) - 3
}

/// The first `k` primes.
pub fn primes(k: usize) -> Vec<u64> {
    let mut out: Vec<u64> = Vec::with_capacity(k);
    let mut c = 2;
    while out.len() < k {
        if out.iter().take_while(|&&p| p * p <= c).all(|&p| c % p != 0) {
            out.push(c);
        }
        c += 1;
    }
    out
}

/// Random weights in `[1, 10]`, one per edge.
pub fn random_weights<S: Scalar>(m: usize, seed: u64) -> Vec<S> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (S::from_i64(1), S::from_i64(10));
    (0..edge_count(m)).map(|_| S::sample(&mut rng, &lo, &hi)).collect()
}

/// Builds the pair; weights default to the primes `2, 3, 5, ..` in edge
/// order (path edges from `v1`, then pendants from `w2`).
pub fn build_counterexample<S: Scalar>(m: usize, weights: Option<Vec<S>>) -> Result<CaterpillarPair<S>> {
    if m < 3 {
        return Err(Error::InvalidArgument(format!("the caterpillar pair needs m >= 3, got {m}")));
    }
    let n = 2 * m - 2;
    let weights = match weights {
        Some(w) => w,
        None => primes(edge_count(m))
            .into_iter()
            .map(|p| S::from_i64(p as i64))
            .collect(),
    };
    if weights.len() != edge_count(m) {
        return Err(Error::InvalidArgument(format!(
            "expected {} weights, got {}",
            edge_count(m),
            weights.len()
        )));
    }
    // v_i is vertex i-1; pendant w_i (2 <= i <= n-1) is vertex n + i - 2
    let v = |i: usize| i - 1;
    let w = |i: usize| n + i - 2;
    let build = |swap: bool| {
        let mut pairs: Vec<(usize, usize)> = (2..=n).map(|i| (v(i - 1), v(i))).collect();
        for i in 2..n {
            let host = match i {
                _ if swap && i == m - 1 => m,
                _ if swap && i == m => m - 1,
                _ => i,
            };
            pairs.push((v(host), w(i)));
        }
        let edges = pairs
            .into_iter()
            .zip(&weights)
            .map(|((a, b), weight)| Edge {
                a,
                b,
                weight: weight.clone(),
            })
            .collect();
        let mut labels = vec![(v(1), "w1".to_string()), (v(n), format!("w{n}"))];
        labels.extend((2..n).map(|i| (w(i), format!("w{i}"))));
        WeightedTree::new(2 * n - 2, edges, labels)
    };
    Ok(CaterpillarPair {
        m,
        t: build(false)?,
        t_prime: build(true)?,
    })
}

/// Smallest-rank `k`-subset whose subtrees use different edges in the two
/// trees.
pub fn edge_set_witness<S: Scalar>(pair: &CaterpillarPair<S>, k: usize) -> Option<Vec<usize>> {
    subsets_of_range(pair.leaf_count(), k).find(|v| {
        let mut a = pair.t.steiner_edges(v);
        let mut b = pair.t_prime.steiner_edges(v);
        a.sort_unstable();
        b.sort_unstable();
        a != b
    })
}

/// True iff every m-subset spans corresponding edge sets in both trees.
pub fn verify_pair<S: Scalar>(pair: &CaterpillarPair<S>) -> bool {
    edge_set_witness(pair, pair.m).is_none()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdissim::compute_mmap;
    use crate::scalar::Rational;
    use crate::tree::Split;

    fn ones(m: usize) -> Vec<Rational> {
        vec![Rational::from_i64(1); edge_count(m)]
    }

    #[test]
    fn primes_are_primes() {
        assert_eq!(primes(8), vec![2, 3, 5, 7, 11, 13, 17, 19]);
    }

    #[test]
    fn m3_all_ones() {
        let pair = build_counterexample(3, Some(ones(3))).unwrap();
        let a = compute_mmap(&pair.t, 3).unwrap();
        let b = compute_mmap(&pair.t_prime, 3).unwrap();
        assert_eq!(a, b);
        assert!(a.values().iter().all(|v| *v == Rational::from_i64(4)));
        assert_eq!(a.values().len(), 4);
        let split = Split::new(["w1", "w2"], ["w3", "w4"]);
        assert!(pair.t.topology().contains(&split));
        assert!(!pair.t_prime.topology().contains(&split));
        assert!(verify_pair(&pair));
    }

    #[test]
    fn m4_random_weights() {
        let pair = build_counterexample(4, Some(random_weights::<Rational>(4, 3))).unwrap();
        assert_eq!(compute_mmap(&pair.t, 4).unwrap(), compute_mmap(&pair.t_prime, 4).unwrap());
        assert_ne!(compute_mmap(&pair.t, 2).unwrap(), compute_mmap(&pair.t_prime, 2).unwrap());
        assert!(!pair.t.same_topology(&pair.t_prime));
    }

    #[test]
    fn edge_sets_match_for_m_subsets_only() {
        for m in 3..=6 {
            let pair = build_counterexample::<Rational>(m, None).unwrap();
            assert!(verify_pair(&pair));
            for v in subsets_of_range(pair.leaf_count(), m) {
                assert!(pair.t.steiner_edges(&v).contains(&pair.middle_edge()));
            }
            assert!(edge_set_witness(&pair, m - 1).is_some(), "m={m}");
        }
    }

    #[test]
    fn verify_pair_ignores_weights() {
        let pair = build_counterexample::<Rational>(5, None).unwrap();
        let mut w: Vec<Rational> = pair.t_prime.edges().iter().map(|e| e.weight.clone()).collect();
        w[0] = w[0].clone() + Rational::from_i64(1);
        let altered = CaterpillarPair {
            t_prime: pair.t_prime.with_weights(w).unwrap(),
            ..pair.clone()
        };
        assert!(verify_pair(&altered));
        assert_ne!(
            compute_mmap(&altered.t, 5).unwrap(),
            compute_mmap(&altered.t_prime, 5).unwrap()
        );
    }

    #[test]
    fn rejects_bad_input() {
        assert!(build_counterexample::<Rational>(2, None).is_err());
        assert!(build_counterexample(3, Some(ones(4))).is_err());
        assert!(build_counterexample(3, Some(vec![Rational::from_i64(0); 5])).is_err());
    }
}
