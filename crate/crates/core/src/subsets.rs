//! Colexicographic ranking of k-subsets.
//!
//! A sorted subset `c_0 < c_1 < ... < c_{k-1}` of `{0, .., n-1}` has rank
//! `sum_i C(c_i, i + 1)`. Ranks are independent of `n`, so the subsets of
//! `{0, .., n-1}` occupy exactly the ranks `0 .. C(n, k)`.

/// Binomial coefficient, saturating at `usize::MAX`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    acc as usize
}

/// Colex rank of a strictly increasing index list.
pub fn rank(subset: &[usize]) -> usize {
    debug_assert!(subset.windows(2).all(|w| w[0] < w[1]));
    subset
        .iter()
        .enumerate()
        .map(|(i, &c)| binomial(c, i + 1))
        .sum()
}

/// Inverse of [`rank`] for subsets of size `k`.
pub fn unrank(mut r: usize, k: usize) -> Vec<usize> {
    let mut out = vec![0; k];
    for i in (0..k).rev() {
        // largest c with C(c, i+1) <= r
        let mut c = i;
        while binomial(c + 1, i + 1) <= r {
            c += 1;
        }
        out[i] = c;
        r -= binomial(c, i + 1);
    }
    out
}

/// Iterator over the k-subsets of `items` in colex order.
///
/// Subsets are yielded as sorted vectors of elements of `items` (which must
/// itself be sorted); the colex order of positions coincides with the colex
/// order of the elements.
#[derive(Clone, Debug)]
pub struct Combinations<'a> {
    items: &'a [usize],
    positions: Vec<usize>,
    done: bool,
}

impl<'a> Combinations<'a> {
    pub fn new(items: &'a [usize], k: usize) -> Self {
        Combinations {
            items,
            positions: (0..k).collect(),
            done: k > items.len(),
        }
    }
}

impl Iterator for Combinations<'_> {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let current = self.positions.iter().map(|&p| self.items[p]).collect();
        let k = self.positions.len();
        let n = self.items.len();
        // bump the lowest position that can move without colliding
        let mut i = 0;
        loop {
            if i == k {
                self.done = true;
                break;
            }
            let limit = if i + 1 < k { self.positions[i + 1] } else { n };
            if self.positions[i] + 1 < limit {
                self.positions[i] += 1;
                for (j, p) in self.positions.iter_mut().enumerate().take(i) {
                    *p = j;
                }
                break;
            }
            i += 1;
        }
        Some(current)
    }
}

/// k-subsets of `{0, .., n-1}` in colex (= rank) order.
pub fn subsets_of_range(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..binomial(n, k)).map(move |r| unrank(r, k))
}

/// Sorted union of a sorted subset with extra distinct elements.
pub fn with_extra(base: &[usize], extra: &[usize]) -> Vec<usize> {
    let mut v = Vec::with_capacity(base.len() + extra.len());
    v.extend_from_slice(base);
    v.extend_from_slice(extra);
    v.sort_unstable();
    v
}
