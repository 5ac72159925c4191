//! m-dissimilarity maps: subtree weights of every m-subset of leaves.
//!
//! Values are stored densely by colex rank of the subset of label indices.
//! Only subsets of distinct leaves are stored.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::subsets::{self, binomial, Combinations};
use crate::tree::WeightedTree;

#[derive(Clone, Debug, PartialEq)]
pub struct MMap<S> {
    labels: Vec<String>,
    m: usize,
    values: Vec<S>,
}

impl<S: Scalar> MMap<S> {
    /// `labels` must be sorted and distinct; `values` indexed by colex rank.
    pub fn new(labels: Vec<String>, m: usize, values: Vec<S>) -> Result<Self> {
        let n = labels.len();
        if m < 2 || m > n {
            return Err(Error::MOutOfRange { m, n });
        }
        if !labels.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument(
                "labels must be distinct and in canonical order".into(),
            ));
        }
        if values.len() != binomial(n, m) {
            return Err(Error::InvalidArgument(format!(
                "expected {} values, got {}",
                binomial(n, m),
                values.len()
            )));
        }
        Ok(MMap { labels, m, values })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [S] {
        &mut self.values
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.binary_search_by(|l| l.as_str().cmp(label)).ok()
    }

    /// Value of a sorted subset of label indices.
    pub fn get(&self, subset: &[usize]) -> &S {
        debug_assert_eq!(subset.len(), self.m);
        &self.values[subsets::rank(subset)]
    }

    /// Value of an unsorted set of distinct label indices.
    pub fn get_unsorted(&self, subset: &[usize]) -> &S {
        let mut s = subset.to_vec();
        s.sort_unstable();
        self.get(&s)
    }

    pub fn get_labels<L: AsRef<str>>(&self, labels: &[L]) -> Result<&S> {
        if labels.len() != self.m {
            return Err(Error::InvalidArgument(format!(
                "expected {} labels, got {}",
                self.m,
                labels.len()
            )));
        }
        let mut idx = labels
            .iter()
            .map(|l| {
                self.label_index(l.as_ref())
                    .ok_or_else(|| Error::UnknownLabel(l.as_ref().to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        idx.sort_unstable();
        if idx.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("labels must be distinct".into()));
        }
        Ok(self.get(&idx))
    }

    /// Subsets in rank order, paired with their values.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<usize>, &S)> + '_ {
        subsets::subsets_of_range(self.n(), self.m).zip(self.values.iter())
    }

    pub fn map_values<T: Scalar>(&self, f: impl FnMut(&S) -> T) -> MMap<T> {
        MMap {
            labels: self.labels.clone(),
            m: self.m,
            values: self.values.iter().map(f).collect(),
        }
    }

    pub fn scaled(&self, factor: &S) -> MMap<S> {
        self.map_values(|v| v.clone() * factor.clone())
    }
}

/// `D(V) = w([V])` for every m-subset `V`, in rank order.
pub fn compute_mmap<S: Scalar>(tree: &WeightedTree<S>, m: usize) -> Result<MMap<S>> {
    let n = tree.leaf_count();
    if m < 2 || m > n {
        return Err(Error::MOutOfRange { m, n });
    }
    let total = binomial(n, m);
    let value = |r: usize| tree.subtree_weight_idx(&subsets::unrank(r, m));
    #[cfg(feature = "parallel")]
    let values: Vec<S> = {
        use rayon::prelude::*;
        (0..total).into_par_iter().map(value).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let values: Vec<S> = (0..total).map(value).collect();
    MMap::new(tree.labels().to_vec(), m, values)
}

/// Which pairing of a quartet `(i, j, k, l)` a sum belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pairing {
    /// `ij | kl`
    IjKl,
    /// `ik | jl`
    IkJl,
    /// `il | jk`
    IlJk,
}

impl Pairing {
    pub const ALL: [Pairing; 3] = [Pairing::IjKl, Pairing::IkJl, Pairing::IlJk];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Pairing::IjKl => "ij|kl",
            Pairing::IkJl => "ik|jl",
            Pairing::IlJk => "il|jk",
        }
    }
}

/// `[D(Rij)+D(Rkl), D(Rik)+D(Rjl), D(Ril)+D(Rjk)]`.
pub fn quartet_sums<S: Scalar>(map: &MMap<S>, r: &[usize], q: [usize; 4]) -> [S; 3] {
    let [i, j, k, l] = q;
    let d = |a: usize, b: usize| map.get(&subsets::with_extra(r, &[a, b])).clone();
    [
        d(i, j) + d(k, l),
        d(i, k) + d(j, l),
        d(i, l) + d(j, k),
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ViolationKind {
    /// No two of the three sums are equal.
    NoTwoMaxEqual,
    /// Two sums are equal but the third exceeds them.
    MaxNotGeqThird,
    /// The strictly smallest sum changes with `R`.
    InconsistentMinTermAcrossR,
}

impl ViolationKind {
    pub fn name(self) -> &'static str {
        match self {
            ViolationKind::NoTwoMaxEqual => "no-two-max-equal",
            ViolationKind::MaxNotGeqThird => "max-not-geq-third",
            ViolationKind::InconsistentMinTermAcrossR => "inconsistent-min-term-across-R",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation<S> {
    pub r: Vec<String>,
    pub quartet: [String; 4],
    pub sums: [S; 3],
    pub kind: ViolationKind,
}

impl<S: Scalar> std::fmt::Display for Violation<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} R={{{}}} quartet=({}) sums=({})",
            self.kind.name(),
            self.r.join(","),
            self.quartet.join(","),
            self.sums
                .iter()
                .map(|s| s.format_literal())
                .collect::<Vec<_>>()
                .join(", ")
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionReport<S> {
    pub passed: bool,
    /// Number of `(R, quartet)` relations examined.
    pub checked: usize,
    pub violations: Vec<Violation<S>>,
}

/// Checks that the maximum of three sums is attained at least twice.
pub fn max_attained_twice<S: Scalar>(sums: &[S; 3], tol: f64) -> Option<ViolationKind> {
    let mut s = sums.clone();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    if s[1].approx_eq(&s[2], tol) {
        None
    } else if s[0].approx_eq(&s[1], tol) {
        Some(ViolationKind::MaxNotGeqThird)
    } else {
        Some(ViolationKind::NoTwoMaxEqual)
    }
}

/// The strictly smallest of three sums, if one exists.
pub fn strict_min<S: Scalar>(sums: &[S; 3], tol: f64) -> Option<Pairing> {
    Pairing::ALL.into_iter().find(|p| {
        let i = p.index();
        (0..3)
            .filter(|&j| j != i)
            .all(|j| sums[i].definitely_lt(&sums[j], tol))
    })
}

fn scan<S: Scalar>(map: &MMap<S>, tol: f64, min_consistency: bool) -> ConditionReport<S> {
    let n = map.n();
    let rsize = map.m() - 2;
    let names = |idx: &[usize]| idx.iter().map(|&i| map.labels()[i].clone()).collect::<Vec<_>>();
    let mut violations = Vec::new();
    let mut checked = 0;
    // first strictly-minimal pairing seen for each quartet, by quartet rank
    let mut first_min: Vec<Option<(Pairing, Vec<usize>)>> = vec![None; binomial(n, 4)];
    for r in subsets::subsets_of_range(n, rsize) {
        let rest: Vec<usize> = (0..n).filter(|x| !r.contains(x)).collect();
        for q in Combinations::new(&rest, 4) {
            checked += 1;
            let quartet = [q[0], q[1], q[2], q[3]];
            let sums = quartet_sums(map, &r, quartet);
            let qnames = names(&q);
            let quartet_labels = [
                qnames[0].clone(),
                qnames[1].clone(),
                qnames[2].clone(),
                qnames[3].clone(),
            ];
            if let Some(kind) = max_attained_twice(&sums, tol) {
                violations.push(Violation {
                    r: names(&r),
                    quartet: quartet_labels.clone(),
                    sums: sums.clone(),
                    kind,
                });
            }
            if min_consistency {
                if let Some(p) = strict_min(&sums, tol) {
                    let slot = &mut first_min[subsets::rank(&q)];
                    match slot {
                        None => *slot = Some((p, r.clone())),
                        Some((first, _)) if *first != p => violations.push(Violation {
                            r: names(&r),
                            quartet: quartet_labels,
                            sums,
                            kind: ViolationKind::InconsistentMinTermAcrossR,
                        }),
                        _ => {}
                    }
                }
            }
        }
    }
    ConditionReport {
        passed: violations.is_empty(),
        checked,
        violations,
    }
}

/// Necessary conditions for a map to come from a tree.
///
/// For every `R` of size `m - 2` and every quartet disjoint from it, the
/// maximum of the three pairing sums must be attained twice, and the
/// strictly smallest pairing of a quartet must not change with `R`. With
/// `m = 2` this is the four-point condition. Passing does not imply the map
/// is realizable.
pub fn check_necessary_conditions<S: Scalar>(map: &MMap<S>, tol: f64) -> ConditionReport<S> {
    scan(map, tol, true)
}

/// Membership in the tropical hypersurfaces of all three-term Plücker
/// relations `p_Rij p_Rkl - p_Rik p_Rjl + p_Ril p_Rjk`.
///
/// A relation holds tropically when the maximum of its three monomial
/// values is attained at least twice; `violations` lists the relations
/// that certify non-membership.
pub fn trop_membership<S: Scalar>(map: &MMap<S>, tol: f64) -> ConditionReport<S> {
    scan(map, tol, false)
}
